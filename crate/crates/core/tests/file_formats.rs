use gradsurf::grid::{read_grid, write_grid, GridGeometry, VoxelGrid};
use gradsurf::mesh::{load_mesh, save_mesh, MeshFormat};
use gradsurf::sampling::{sample_area, OrientedPointCloud};
use gradsurf::{shapes, Vec3};

#[test]
fn mesh_roundtrips_in_every_format() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = shapes::icosphere_at(Vec3::new(0.1, -0.2, 0.3), 0.7, 2);
    for (name, format) in [
        ("m.obj", MeshFormat::Obj),
        ("a.ply", MeshFormat::PlyAscii),
        ("b.ply", MeshFormat::PlyBinary),
    ] {
        let path = dir.path().join(name);
        save_mesh(&mesh, &path, format).unwrap();
        let (back, report) = load_mesh(&path).unwrap();
        assert_eq!(report.degenerate_faces_dropped, 0);
        assert_eq!(back.faces(), mesh.faces(), "{name}");
        for (a, b) in back.vertices().iter().zip(mesh.vertices()) {
            assert!((a - b).norm() < 1e-12, "{name}");
        }
        let normals = back.vertex_normals().expect("normals kept");
        for (a, b) in normals.iter().zip(mesh.vertex_normals().unwrap()) {
            assert!((a - b).norm() < 1e-9, "{name}");
        }
    }
}

#[test]
fn cloud_and_grid_files() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = shapes::icosphere_at(Vec3::zeros(), 1.0, 2);
    let cloud = sample_area(&mesh, 500, 3).unwrap();
    let path = dir.path().join("c.ply");
    cloud.save(&path).unwrap();
    let back = OrientedPointCloud::load(&path).unwrap();
    assert_eq!(back.len(), 500);
    // Stored as float32.
    for (a, b) in back.points.iter().zip(&cloud.points) {
        assert!((a - b).norm() < 1e-6);
    }

    let geo = GridGeometry::new(Vec3::new(-1.0, 0.5, 2.0), 0.25, [5, 4, 3]).unwrap();
    let mut grid = VoxelGrid::full(geo);
    grid.fill_with(|p| p.x - 0.5 * p.z);
    grid.active[7] = false;
    grid.chi[7] = 0.0;
    let gpath = dir.path().join("g.gsg");
    write_grid(&grid, &gpath).unwrap();
    let g2 = read_grid(&gpath).unwrap();
    assert_eq!(g2.geometry, geo);
    assert_eq!(g2.active, grid.active);
    for (a, b) in g2.chi.iter().zip(&grid.chi) {
        assert_eq!(*a, *b as f32 as f64);
    }
}

#[test]
fn missing_file_is_io_error() {
    let err = load_mesh("/no/such/file.ply".as_ref()).unwrap_err();
    assert!(matches!(err, gradsurf::Error::Io { .. }));
    assert!(load_mesh("mesh.stl".as_ref()).is_err());
}
