//! Depth image and camera trajectory files.
//!
//! Depth images are either 16-bit grayscale PNG in millimeters (`.png`) or a
//! raw format (`.depth`): the line `GRADSURF-DEPTH v1\n`, little-endian u32
//! width and height, then row-major little-endian f32 meters.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use image::{ImageBuffer, Luma};
use nalgebra::Matrix4;

use super::render::{CameraView, DepthImage};
use crate::error::{Error, Result};

pub const DEPTH_MAGIC: &str = "GRADSURF-DEPTH v1";

fn is_png(path: &Path) -> Result<bool> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("png") => Ok(true),
        Some("depth") => Ok(false),
        _ => Err(Error::UnsupportedFormat(format!(
            "{}: depth images must be .png or .depth",
            path.display()
        ))),
    }
}

pub fn read_depth(path: &Path) -> Result<DepthImage> {
    if is_png(path)? {
        let img = image::open(path)?.into_luma16();
        let (w, h) = img.dimensions();
        let values = img.into_raw().into_iter().map(|mm| mm as f64 / 1000.0).collect();
        return DepthImage::new(w as usize, h as usize, values);
    }
    let mut r = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    let mut line = String::new();
    r.read_line(&mut line).map_err(|e| Error::io(path, e))?;
    if line.trim_end() != DEPTH_MAGIC {
        return Err(Error::parse(format!("{}: not a raw depth file", path.display())));
    }
    let mut buf = Vec::new();
    r.read_to_end(&mut buf).map_err(|e| Error::io(path, e))?;
    if buf.len() < 8 {
        return Err(Error::parse("raw depth header truncated"));
    }
    let w = u32::from_le_bytes(buf[0..4].try_into().unwrap()) as usize;
    let h = u32::from_le_bytes(buf[4..8].try_into().unwrap()) as usize;
    let body = &buf[8..];
    if body.len() != w * h * 4 {
        return Err(Error::parse(format!(
            "raw depth {w}x{h} expects {} bytes, found {}",
            w * h * 4,
            body.len()
        )));
    }
    let values = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    DepthImage::new(w, h, values)
}

/// PNG stores whole millimeters and saturates at 65.535 m.
pub fn write_depth(depth: &DepthImage, path: &Path) -> Result<()> {
    if is_png(path)? {
        let mm: Vec<u16> = depth
            .values
            .iter()
            .map(|d| (d * 1000.0).round().clamp(0.0, u16::MAX as f64) as u16)
            .collect();
        let img: ImageBuffer<Luma<u16>, _> =
            ImageBuffer::from_raw(depth.width as u32, depth.height as u32, mm).unwrap();
        img.save(path)?;
        return Ok(());
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut out = Vec::with_capacity(DEPTH_MAGIC.len() + 9 + depth.values.len() * 4);
    out.extend_from_slice(DEPTH_MAGIC.as_bytes());
    out.push(b'\n');
    out.extend_from_slice(&(depth.width as u32).to_le_bytes());
    out.extend_from_slice(&(depth.height as u32).to_le_bytes());
    for d in &depth.values {
        out.extend_from_slice(&(*d as f32).to_le_bytes());
    }
    w.write_all(&out).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

/// Depth files (`.png` / `.depth`) in a directory, sorted by file name.
pub fn list_depth_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && is_png(&path).is_ok() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Header `fx fy cx cy width height`, then one 16-float row-major
/// world-from-camera matrix per line. Blank lines and `#` comments are skipped.
pub fn parse_trajectory(text: &str) -> Result<Vec<CameraView>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or_else(|| Error::parse("trajectory is empty"))?;
    let h = parse_floats(header, hline)?;
    if h.len() != 6 {
        return Err(Error::parse(format!(
            "trajectory line {hline}: header needs fx fy cx cy width height"
        )));
    }
    let (width, height) = (h[4] as usize, h[5] as usize);
    if h[4] != width as f64 || h[5] != height as f64 {
        return Err(Error::parse(format!("trajectory line {hline}: image size must be integral")));
    }
    lines
        .map(|(n, l)| {
            let m = parse_floats(l, n)?;
            if m.len() != 16 {
                return Err(Error::parse(format!(
                    "trajectory line {n}: expected 16 values, got {}",
                    m.len()
                )));
            }
            CameraView::pinhole(h[0], h[1], h[2], h[3], width, height, Matrix4::from_row_slice(&m))
                .map_err(|e| Error::parse(format!("trajectory line {n}: {e}")))
        })
        .collect()
}

pub fn read_trajectory(path: &Path) -> Result<Vec<CameraView>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trajectory(&text)
}

fn parse_floats(line: &str, n: usize) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::parse(format!("trajectory line {n}: bad number {t:?}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DepthImage {
        DepthImage::new(3, 2, vec![0.0, 1.234, 2.5, 0.001, 10.0, 0.0]).unwrap()
    }

    #[test]
    fn png_roundtrip_in_millimeters() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.png");
        write_depth(&sample(), &path).unwrap();
        let back = read_depth(&path).unwrap();
        assert_eq!(back.width, 3);
        for (a, b) in back.values.iter().zip(&sample().values) {
            assert!((a - b).abs() <= 0.0005 + 1e-12);
        }
    }

    #[test]
    fn raw_roundtrip_and_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.depth");
        write_depth(&sample(), &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes.len(), DEPTH_MAGIC.len() + 1 + 8 + 6 * 4);
        let back = read_depth(&path).unwrap();
        for (a, b) in back.values.iter().zip(&sample().values) {
            assert_eq!(*a, *b as f32 as f64);
        }
    }

    #[test]
    fn unknown_extension_rejected() {
        assert!(matches!(
            write_depth(&sample(), Path::new("x.jpg")),
            Err(Error::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn truncated_raw_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.depth");
        write_depth(&sample(), &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.pop();
        std::fs::write(&path, bytes).unwrap();
        assert!(read_depth(&path).is_err());
    }

    #[test]
    fn trajectory_parse() {
        let text = "# cams\n500 500 320 240 640 480\n\
            1 0 0 0 0 1 0 0 0 0 1 0 0 0 0 1\n\n\
            1 0 0 1.5 0 1 0 0 0 0 1 -2 0 0 0 1\n";
        let views = parse_trajectory(text).unwrap();
        assert_eq!(views.len(), 2);
        assert_eq!(views[1].pose[(0, 3)], 1.5);
        assert_eq!(views[1].pose[(2, 3)], -2.0);
        assert_eq!((views[0].width, views[0].height), (640, 480));
        assert_eq!(views[0].intrinsics[(0, 2)], 320.0);
    }

    #[test]
    fn trajectory_errors_name_the_line() {
        let err = parse_trajectory("1 1 0 0 4 4\n1 0 0\n").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        assert!(parse_trajectory("").is_err());
        assert!(parse_trajectory("1 1 0 0 4.5 4\n").is_err());
        let skew = "1 1 0 0 4 4\n2 0 0 0 0 1 0 0 0 0 1 0 0 0 0 1\n";
        assert!(parse_trajectory(skew).is_err());
    }

    #[test]
    fn listing_sorts_and_filters() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["b.png", "a.depth", "c.txt"] {
            std::fs::write(dir.path().join(name), b"").unwrap();
        }
        let names: Vec<String> = list_depth_files(dir.path())
            .unwrap()
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        assert_eq!(names, ["a.depth", "b.png"]);
    }
}
