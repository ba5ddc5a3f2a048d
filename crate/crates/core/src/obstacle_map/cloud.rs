use std::io::{BufRead, Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{filter_slice, Execution};
use crate::geometry::Point3;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<Point3>,
    pub stamp: f64,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>, stamp: f64) -> Self {
        Self { points, stamp }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn merge(&mut self, other: &PointCloud) {
        self.points.extend_from_slice(&other.points);
    }
}

/// Points with `‖p − center‖ ≤ radius`, in input order.
pub fn crop_sphere(cloud: &PointCloud, center: Point3, radius: f64) -> PointCloud {
    crop_sphere_with(Execution::default(), cloud, center, radius)
}

pub fn crop_sphere_with(mode: Execution, cloud: &PointCloud, center: Point3, radius: f64) -> PointCloud {
    let r2 = radius * radius;
    let points = filter_slice(mode, &cloud.points, |p| p.distance_squared(&center) <= r2);
    PointCloud::new(points, cloud.stamp)
}

/// Drops points below `z_ground`. Stand-in for a real ground segmentation.
pub fn remove_ground(cloud: &PointCloud, z_ground: f64) -> PointCloud {
    PointCloud::new(
        cloud.points.iter().copied().filter(|p| p.z >= z_ground).collect(),
        cloud.stamp,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CloudFormat {
    /// One `x y z` (or `x,y,z`) triple per line; `#` starts a comment.
    #[default]
    Text,
    /// Little-endian `u32` point count followed by `f32` triples.
    Binary,
}

impl FromStr for CloudFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "text" | "txt" | "xyz" => Ok(CloudFormat::Text),
            "binary" | "bin" => Ok(CloudFormat::Binary),
            other => Err(format!("unknown cloud format '{other}' (expected text or binary)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum CloudIoError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("binary cloud truncated: header says {expected} points, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Parses whitespace- or comma-separated XYZ text. Line numbers in errors are 1-based.
pub fn read_xyz_text<R: BufRead>(reader: R) -> Result<Vec<Point3>, CloudIoError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        let err = |msg: String| CloudIoError::Parse { line: i + 1, msg };
        if fields.len() != 3 {
            return Err(err(format!("expected 3 values, found {}", fields.len())));
        }
        let mut xyz = [0.0; 3];
        for (k, f) in fields.iter().enumerate() {
            xyz[k] = f.parse::<f64>().map_err(|e| err(format!("'{f}': {e}")))?;
        }
        let p = Point3::try_new(xyz[0], xyz[1], xyz[2]).map_err(|e| err(e.to_string()))?;
        out.push(p);
    }
    Ok(out)
}

pub fn write_xyz_text<W: Write>(mut w: W, points: &[Point3]) -> std::io::Result<()> {
    for p in points {
        writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
    }
    Ok(())
}

pub fn read_xyz_binary<R: Read>(mut reader: R) -> Result<Vec<Point3>, CloudIoError> {
    let mut header = [0u8; 4];
    reader.read_exact(&mut header)?;
    let expected = u32::from_le_bytes(header) as usize;
    let mut body = Vec::new();
    reader.read_to_end(&mut body)?;
    let found = body.len() / 12;
    if found < expected {
        return Err(CloudIoError::Truncated { expected, found });
    }
    let mut out = Vec::with_capacity(expected);
    for (i, chunk) in body.chunks_exact(12).take(expected).enumerate() {
        let f = |k: usize| f32::from_le_bytes(chunk[k..k + 4].try_into().unwrap()) as f64;
        let p = Point3::try_new(f(0), f(4), f(8)).map_err(|e| CloudIoError::Parse {
            line: i + 1,
            msg: e.to_string(),
        })?;
        out.push(p);
    }
    Ok(out)
}

pub fn write_xyz_binary<W: Write>(mut w: W, points: &[Point3]) -> std::io::Result<()> {
    w.write_all(&(points.len() as u32).to_le_bytes())?;
    for p in points {
        for v in [p.x, p.y, p.z] {
            w.write_all(&(v as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_cloud_file(path: &std::path::Path, format: CloudFormat) -> Result<Vec<Point3>, CloudIoError> {
    let f = std::fs::File::open(path)?;
    match format {
        CloudFormat::Text => read_xyz_text(std::io::BufReader::new(f)),
        CloudFormat::Binary => read_xyz_binary(std::io::BufReader::new(f)),
    }
}
