//! Shape and scene resolution: flags merged over an optional JSON config
//! file, flags winning.

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;
use std::path::Path;
use tiling_billiards::{CyclicPolygon, Tiling};

/// Scene fields accepted from a JSON config file. Every field can be
/// overridden by the corresponding flag.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    /// Triangle angles in degrees.
    pub triangle: Option<Vec<f64>>,
    /// Cyclic quadrilateral circle positions in degrees, counterclockwise.
    pub quad: Option<Vec<f64>>,
    pub tau: Option<f64>,
    /// Reference angle in degrees.
    pub theta: Option<f64>,
    /// Start point, overrides tau/theta seeding.
    pub start: Option<[f64; 2]>,
    /// Start direction in degrees.
    pub dir: Option<f64>,
    pub steps: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct Scene {
    pub tiling: Tiling,
    pub shape_desc: ShapeDesc,
    pub tau: Option<f64>,
    pub theta: Option<f64>,
    pub start: Option<[f64; 2]>,
    pub dir: Option<f64>,
    pub steps: Option<usize>,
    pub seed: u64,
}

#[derive(Clone, Debug, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeDesc {
    /// Angles in degrees.
    Triangle([f64; 3]),
    /// Circle positions in degrees.
    Quad([f64; 4]),
}

/// Comma-separated list of numbers (one flag value, not repeated flags).
#[derive(Clone, Debug)]
pub struct NumberList(pub Vec<f64>);

/// Comma-separated degrees list.
pub fn parse_degrees_list(s: &str) -> Result<NumberList> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .with_context(|| format!("bad number {p:?}"))
        })
        .collect::<Result<Vec<f64>>>()
        .map(NumberList)
}

pub fn load_scene_file(path: Option<&Path>) -> Result<SceneFile> {
    match path {
        None => Ok(SceneFile::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("cannot read config {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("bad config {}", p.display()))
        }
    }
}

pub fn build_shape(
    triangle: Option<&[f64]>,
    quad: Option<&[f64]>,
) -> Result<(CyclicPolygon, ShapeDesc)> {
    match (triangle, quad) {
        (Some(angles), None) => {
            if angles.len() != 3 {
                bail!("--triangle needs three comma-separated angles in degrees");
            }
            let rad: Vec<f64> = angles.iter().map(|a| a.to_radians()).collect();
            let poly = CyclicPolygon::triangle_from_angles(rad[0], rad[1], rad[2])
                .map_err(|e| anyhow!("invalid triangle: {e}"))?;
            Ok((poly, ShapeDesc::Triangle([angles[0], angles[1], angles[2]])))
        }
        (None, Some(pos)) => {
            if pos.len() != 4 {
                bail!("--quad needs four comma-separated circle positions in degrees");
            }
            let rad = [
                pos[0].to_radians(),
                pos[1].to_radians(),
                pos[2].to_radians(),
                pos[3].to_radians(),
            ];
            let poly = CyclicPolygon::quad_from_positions(rad)
                .map_err(|e| anyhow!("invalid cyclic quadrilateral: {e}"))?;
            Ok((poly, ShapeDesc::Quad([pos[0], pos[1], pos[2], pos[3]])))
        }
        (Some(_), Some(_)) => bail!("give either --triangle or --quad, not both"),
        (None, None) => bail!("a tile shape is required: --triangle a,b,c or --quad p1,p2,p3,p4"),
    }
}
