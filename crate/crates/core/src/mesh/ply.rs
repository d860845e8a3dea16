//! PLY reading (ASCII and binary little-endian) and writing.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::geometry::Vec3;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum PlyEncoding {
    Ascii,
    BinaryLittleEndian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum PlyScalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl PlyScalar {
    fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "char" | "int8" => PlyScalar::I8,
            "uchar" | "uint8" => PlyScalar::U8,
            "short" | "int16" => PlyScalar::I16,
            "ushort" | "uint16" => PlyScalar::U16,
            "int" | "int32" => PlyScalar::I32,
            "uint" | "uint32" => PlyScalar::U32,
            "float" | "float32" => PlyScalar::F32,
            "double" | "float64" => PlyScalar::F64,
            other => return Err(Error::parse(format!("unknown PLY type {other:?}"))),
        })
    }

    fn name(self) -> &'static str {
        match self {
            PlyScalar::I8 => "char",
            PlyScalar::U8 => "uchar",
            PlyScalar::I16 => "short",
            PlyScalar::U16 => "ushort",
            PlyScalar::I32 => "int",
            PlyScalar::U32 => "uint",
            PlyScalar::F32 => "float",
            PlyScalar::F64 => "double",
        }
    }

    fn read_le(self, r: &mut impl Read) -> std::io::Result<f64> {
        macro_rules! rd {
            ($t:ty) => {{
                let mut b = [0u8; std::mem::size_of::<$t>()];
                r.read_exact(&mut b)?;
                <$t>::from_le_bytes(b) as f64
            }};
        }
        Ok(match self {
            PlyScalar::I8 => rd!(i8),
            PlyScalar::U8 => rd!(u8),
            PlyScalar::I16 => rd!(i16),
            PlyScalar::U16 => rd!(u16),
            PlyScalar::I32 => rd!(i32),
            PlyScalar::U32 => rd!(u32),
            PlyScalar::F32 => rd!(f32),
            PlyScalar::F64 => rd!(f64),
        })
    }

    fn write_le(self, w: &mut impl Write, v: f64) -> std::io::Result<()> {
        match self {
            PlyScalar::I8 => w.write_all(&(v as i8).to_le_bytes()),
            PlyScalar::U8 => w.write_all(&(v as u8).to_le_bytes()),
            PlyScalar::I16 => w.write_all(&(v as i16).to_le_bytes()),
            PlyScalar::U16 => w.write_all(&(v as u16).to_le_bytes()),
            PlyScalar::I32 => w.write_all(&(v as i32).to_le_bytes()),
            PlyScalar::U32 => w.write_all(&(v as u32).to_le_bytes()),
            PlyScalar::F32 => w.write_all(&(v as f32).to_le_bytes()),
            PlyScalar::F64 => w.write_all(&v.to_le_bytes()),
        }
    }

    fn write_ascii(self, w: &mut impl Write, v: f64) -> std::io::Result<()> {
        match self {
            PlyScalar::F32 => write!(w, "{}", v as f32),
            PlyScalar::F64 => write!(w, "{v}"),
            _ => write!(w, "{}", v as i64),
        }
    }
}

#[derive(Debug, Clone)]
enum PropertyKind {
    Scalar(PlyScalar),
    List { count: PlyScalar, item: PlyScalar },
}

#[derive(Debug, Clone)]
struct Property {
    name: String,
    kind: PropertyKind,
}

#[derive(Debug, Clone)]
enum Column {
    Scalar(Vec<f64>),
    List(Vec<Vec<f64>>),
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
    columns: Vec<Column>,
}

/// Every element of a PLY file, decoded into columns.
#[derive(Debug, Clone)]
pub(crate) struct PlyData {
    elements: Vec<Element>,
}

impl PlyData {
    fn element(&self, name: &str) -> Option<&Element> {
        self.elements.iter().find(|e| e.name == name)
    }

    fn vertex_scalar(&self, name: &str) -> Option<&[f64]> {
        let e = self.element("vertex")?;
        e.properties
            .iter()
            .position(|p| p.name == name)
            .and_then(|i| match &e.columns[i] {
                Column::Scalar(v) => Some(v.as_slice()),
                Column::List(_) => None,
            })
    }

    fn vec3_columns(&self, names: [&str; 3]) -> Option<Vec<Vec3>> {
        let [x, y, z] = names.map(|n| self.vertex_scalar(n));
        let (x, y, z) = (x?, y?, z?);
        Some(
            (0..x.len())
                .map(|i| Vec3::new(x[i], y[i], z[i]))
                .collect(),
        )
    }

    pub(crate) fn positions(&self) -> Result<Vec<Vec3>> {
        if self.element("vertex").is_none() {
            return Err(Error::parse("PLY has no vertex element"));
        }
        self.vec3_columns(["x", "y", "z"])
            .ok_or_else(|| Error::parse("PLY vertex element lacks x/y/z"))
    }

    pub(crate) fn normals(&self) -> Result<Option<Vec<Vec3>>> {
        Ok(self.vec3_columns(["nx", "ny", "nz"]))
    }

    pub(crate) fn faces(&self) -> Result<Vec<Vec<u32>>> {
        let Some(e) = self.element("face") else {
            return Ok(Vec::new());
        };
        let idx = e
            .properties
            .iter()
            .position(|p| p.name == "vertex_indices" || p.name == "vertex_index")
            .ok_or_else(|| Error::parse("PLY face element lacks vertex_indices"))?;
        let Column::List(lists) = &e.columns[idx] else {
            return Err(Error::parse("vertex_indices is not a list property"));
        };
        lists
            .iter()
            .map(|l| {
                l.iter()
                    .map(|&i| {
                        if i < 0.0 || i > u32::MAX as f64 {
                            Err(Error::parse(format!("face index {i} out of range")))
                        } else {
                            Ok(i as u32)
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

fn header_line(r: &mut impl BufRead) -> Result<String> {
    let mut line = String::new();
    let n = r
        .read_line(&mut line)
        .map_err(|e| Error::parse(format!("PLY header: {e}")))?;
    if n == 0 {
        return Err(Error::parse("PLY header ended before end_header"));
    }
    Ok(line.trim_end_matches(['\r', '\n']).to_string())
}

pub(crate) fn read_ply(path: &Path) -> Result<PlyData> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_ply(&mut BufReader::new(file))
}

pub(crate) fn parse_ply(r: &mut impl BufRead) -> Result<PlyData> {
    if header_line(r)?.trim() != "ply" {
        return Err(Error::parse("missing 'ply' magic"));
    }
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let line = header_line(r)?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            [] => continue,
            ["end_header"] => break,
            ["comment", ..] | ["obj_info", ..] => continue,
            ["format", fmt, version] => {
                if *version != "1.0" {
                    return Err(Error::UnsupportedFormat(format!("PLY version {version}")));
                }
                encoding = Some(match *fmt {
                    "ascii" => PlyEncoding::Ascii,
                    "binary_little_endian" => PlyEncoding::BinaryLittleEndian,
                    other => return Err(Error::UnsupportedFormat(format!("PLY format {other}"))),
                });
            }
            ["element", name, count] => {
                let count = count
                    .parse()
                    .map_err(|_| Error::parse(format!("bad element count {count:?}")))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                    columns: Vec::new(),
                });
            }
            ["property", "list", count, item, name] => {
                let e = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse("property before element"))?;
                e.properties.push(Property {
                    name: name.to_string(),
                    kind: PropertyKind::List {
                        count: PlyScalar::parse(count)?,
                        item: PlyScalar::parse(item)?,
                    },
                });
            }
            ["property", ty, name] => {
                let e = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse("property before element"))?;
                e.properties.push(Property {
                    name: name.to_string(),
                    kind: PropertyKind::Scalar(PlyScalar::parse(ty)?),
                });
            }
            _ => return Err(Error::parse(format!("unrecognized PLY header line {line:?}"))),
        }
    }
    let encoding = encoding.ok_or_else(|| Error::parse("PLY header lacks a format line"))?;

    for e in &mut elements {
        e.columns = e
            .properties
            .iter()
            .map(|p| match p.kind {
                PropertyKind::Scalar(_) => Column::Scalar(Vec::with_capacity(e.count)),
                PropertyKind::List { .. } => Column::List(Vec::with_capacity(e.count)),
            })
            .collect();
    }

    match encoding {
        PlyEncoding::Ascii => read_ascii_body(r, &mut elements)?,
        PlyEncoding::BinaryLittleEndian => read_binary_body(r, &mut elements)?,
    }
    Ok(PlyData { elements })
}

fn read_ascii_body(r: &mut impl BufRead, elements: &mut [Element]) -> Result<()> {
    let mut body = String::new();
    r.read_to_string(&mut body)
        .map_err(|e| Error::parse(format!("PLY body: {e}")))?;
    let mut tokens = body.split_whitespace();
    let mut next = |what: &str| -> Result<f64> {
        let t = tokens
            .next()
            .ok_or_else(|| Error::parse(format!("PLY body ended while reading {what}")))?;
        t.parse::<f64>()
            .map_err(|_| Error::parse(format!("bad number {t:?} in {what}")))
    };
    for e in elements.iter_mut() {
        for _ in 0..e.count {
            for (p, col) in e.properties.iter().zip(e.columns.iter_mut()) {
                match (col, &p.kind) {
                    (Column::Scalar(v), _) => v.push(next(&p.name)?),
                    (Column::List(v), _) => {
                        let n = next(&p.name)? as usize;
                        let items = (0..n).map(|_| next(&p.name)).collect::<Result<_>>()?;
                        v.push(items);
                    }
                }
            }
        }
    }
    Ok(())
}

fn read_binary_body(r: &mut impl Read, elements: &mut [Element]) -> Result<()> {
    let truncated = |e: std::io::Error| Error::parse(format!("PLY body truncated: {e}"));
    for e in elements.iter_mut() {
        for _ in 0..e.count {
            for (p, col) in e.properties.iter().zip(e.columns.iter_mut()) {
                match (&p.kind, col) {
                    (PropertyKind::Scalar(ty), Column::Scalar(v)) => {
                        v.push(ty.read_le(r).map_err(truncated)?)
                    }
                    (PropertyKind::List { count, item }, Column::List(v)) => {
                        let n = count.read_le(r).map_err(truncated)?;
                        if n < 0.0 {
                            return Err(Error::parse("negative list length"));
                        }
                        let items = (0..n as usize)
                            .map(|_| item.read_le(r).map_err(truncated))
                            .collect::<Result<_>>()?;
                        v.push(items);
                    }
                    _ => unreachable!("columns are built from properties"),
                }
            }
        }
    }
    Ok(())
}

/// Named scalar columns for the vertex element.
pub(crate) struct PlyVertexTable<'a> {
    pub len: usize,
    pub columns: Vec<(&'a str, PlyScalar, Vec<f64>)>,
}

/// Writes a vertex element and, when `faces` is given, a face element with
/// `list uchar int vertex_indices`.
pub(crate) fn write_ply(
    path: &Path,
    encoding: PlyEncoding,
    vertices: &PlyVertexTable<'_>,
    faces: Option<&[[u32; 3]]>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_ply_to(&mut w, encoding, vertices, faces)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

fn write_ply_to(
    w: &mut impl Write,
    encoding: PlyEncoding,
    vertices: &PlyVertexTable<'_>,
    faces: Option<&[[u32; 3]]>,
) -> std::io::Result<()> {
    writeln!(w, "ply")?;
    match encoding {
        PlyEncoding::Ascii => writeln!(w, "format ascii 1.0")?,
        PlyEncoding::BinaryLittleEndian => writeln!(w, "format binary_little_endian 1.0")?,
    }
    writeln!(w, "element vertex {}", vertices.len)?;
    for (name, ty, _) in &vertices.columns {
        writeln!(w, "property {} {name}", ty.name())?;
    }
    if let Some(faces) = faces {
        writeln!(w, "element face {}", faces.len())?;
        writeln!(w, "property list uchar int vertex_indices")?;
    }
    writeln!(w, "end_header")?;
    for i in 0..vertices.len {
        for (c, (_, ty, values)) in vertices.columns.iter().enumerate() {
            match encoding {
                PlyEncoding::Ascii => {
                    if c > 0 {
                        write!(w, " ")?;
                    }
                    ty.write_ascii(w, values[i])?;
                }
                PlyEncoding::BinaryLittleEndian => ty.write_le(w, values[i])?,
            }
        }
        if encoding == PlyEncoding::Ascii {
            writeln!(w)?;
        }
    }
    for f in faces.unwrap_or(&[]) {
        match encoding {
            PlyEncoding::Ascii => writeln!(w, "3 {} {} {}", f[0], f[1], f[2])?,
            PlyEncoding::BinaryLittleEndian => {
                w.write_all(&[3u8])?;
                for &i in f {
                    w.write_all(&(i as i32).to_le_bytes())?;
                }
            }
        }
    }
    Ok(())
}
