use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::Point2;
use crate::rirv::LandmarkSet;
use crate::roi::Polygon;

/// One record of a dataset's annotation document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Annotation {
    /// Image path, relative to the annotation file unless absolute.
    pub image: String,
    /// L1..L4 as `[x, y]` in original pixel coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub landmarks: Option<[[f64; 2]; 4]>,
    #[serde(default)]
    pub fractured: bool,
    /// Closed rings (closure implicit) of `[x, y]` vertices.
    #[serde(default)]
    pub fracture_polygons: Vec<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fracture_kind: Option<String>,
}

impl Annotation {
    pub fn landmark_set(&self) -> Option<LandmarkSet> {
        self.landmarks.map(|l| LandmarkSet(l.map(|[x, y]| Point2::new(x, y))))
    }

    pub fn polygons(&self) -> Vec<Polygon> {
        self.fracture_polygons
            .iter()
            .map(|ring| ring.iter().map(|&[x, y]| Point2::new(x, y)).collect())
            .collect()
    }

    pub fn from_parts(
        image: String,
        lm: Option<&LandmarkSet>,
        fractured: bool,
        polygons: &[Polygon],
        kind: Option<&str>,
    ) -> Self {
        Annotation {
            image,
            landmarks: lm.map(|l| l.0.map(|p| [p.x, p.y])),
            fractured,
            fracture_polygons: polygons
                .iter()
                .map(|r| r.iter().map(|p| [p.x, p.y]).collect())
                .collect(),
            fracture_kind: kind.map(str::to_string),
        }
    }

    /// Image path resolved against the annotation file's directory.
    pub fn image_path(&self, base: &Path) -> PathBuf {
        let p = Path::new(&self.image);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if let Some(lm) = self.landmarks {
            if lm.iter().flatten().any(|v| !v.is_finite()) {
                return Err("landmark coordinates must be finite".into());
            }
        }
        for (k, ring) in self.fracture_polygons.iter().enumerate() {
            if ring.len() < 3 {
                return Err(format!("fracture polygon {k} has fewer than 3 vertices"));
            }
            if ring.iter().flatten().any(|v| !v.is_finite()) {
                return Err(format!("fracture polygon {k} has non-finite vertices"));
            }
        }
        match self.fracture_kind.as_deref() {
            None | Some("intra") | Some("extra") => Ok(()),
            Some(other) => Err(format!("fracture_kind must be \"intra\" or \"extra\", got {other:?}")),
        }
    }
}

/// Reads an annotation document; returns the records and the directory that
/// relative image paths resolve against.
pub fn load_annotations(path: impl AsRef<Path>) -> Result<(Vec<Annotation>, PathBuf)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let records: Vec<Annotation> =
        serde_json::from_str(&text).map_err(|e| Error::format(path.display().to_string(), e.to_string()))?;
    for (i, a) in records.iter().enumerate() {
        a.validate().map_err(|m| Error::Data {
            case: format!("{} record {} ({})", path.display(), i, a.image),
            message: m,
        })?;
    }
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((records, base))
}

pub fn save_annotations(path: impl AsRef<Path>, records: &[Annotation]) -> Result<()> {
    super::write_json(path, &records)
}
