//! JSON body-model documents.
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "vertices": [[x, y, z], ...],
//!   "faces": [[i, j, k], ...],
//!   "uvs": [[u, v], ...],
//!   "blendshapes": [[[dx, dy, dz], ...], ...],
//!   "parents": [-1, 0, 0, ...],
//!   "joint_names": ["pelvis", ...],
//!   "joint_regressor": {"sparse": [[joint, vertex, weight], ...]},
//!   "skin_weights": [[vertex, joint, weight], ...],
//!   "max_influences": 4
//! }
//! ```
//!
//! `uvs`, `joint_names` and `max_influences` are optional. The regressor may
//! also be given as `{"dense": [[w, ...], ...]}` with one row per joint.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{ParametricBody, DEFAULT_MAX_INFLUENCES};
use super::SparseRows;
use crate::error::{Error, Result};
use crate::geom::Vec3;

pub const BODY_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressorDoc {
    Dense(Vec<Vec<f64>>),
    Sparse(Vec<(usize, usize, f64)>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyDoc {
    pub format_version: u32,
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uvs: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub blendshapes: Vec<Vec<[f64; 3]>>,
    pub parents: Vec<i64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub joint_names: Vec<String>,
    pub joint_regressor: RegressorDoc,
    pub skin_weights: Vec<(usize, usize, f64)>,
    #[serde(default = "default_influences")]
    pub max_influences: usize,
}

fn default_influences() -> usize {
    DEFAULT_MAX_INFLUENCES
}

fn field_err(path: &Path, field: &str, msg: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        field: field.to_string(),
        msg: msg.into(),
    }
}

impl BodyDoc {
    pub fn from_body(body: &ParametricBody) -> Self {
        let v3 = |v: &Vec3| [v.x, v.y, v.z];
        BodyDoc {
            format_version: BODY_FORMAT_VERSION,
            vertices: body.rest_vertices().iter().map(v3).collect(),
            faces: body.faces().to_vec(),
            uvs: body.template().uvs.clone(),
            blendshapes: body
                .blendshapes()
                .iter()
                .map(|s| s.iter().map(v3).collect())
                .collect(),
            parents: body
                .parents()
                .iter()
                .map(|p| p.map_or(-1, |p| p as i64))
                .collect(),
            joint_names: body.joint_names().to_vec(),
            joint_regressor: RegressorDoc::Sparse(body.joint_regressor().triplets()),
            skin_weights: body.skin_weights().triplets(),
            max_influences: body.max_influences(),
        }
    }

    /// Validates the document; `path` is only used in error messages.
    pub fn into_body(self, path: &Path) -> Result<ParametricBody> {
        if self.format_version != BODY_FORMAT_VERSION {
            return Err(field_err(
                path,
                "format_version",
                format!("unsupported version {} (expected {BODY_FORMAT_VERSION})", self.format_version),
            ));
        }
        let n = self.vertices.len();
        let parents = self
            .parents
            .iter()
            .enumerate()
            .map(|(j, &p)| match p {
                -1 => Ok(None),
                p if p >= 0 => Ok(Some(p as usize)),
                p => Err(field_err(path, &format!("parents[{j}]"), format!("invalid parent {p}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let j = parents.len();
        let regressor = match self.joint_regressor {
            RegressorDoc::Dense(rows) => {
                if rows.len() != j {
                    return Err(field_err(
                        path,
                        "joint_regressor.dense",
                        format!("{} rows for {j} joints", rows.len()),
                    ));
                }
                SparseRows::from_dense(&rows, n)
            }
            RegressorDoc::Sparse(t) => SparseRows::from_triplets(j, n, &t),
        }
        .map_err(|e| field_err(path, "joint_regressor", e.to_string()))?;
        let weights = SparseRows::from_triplets(n, j, &self.skin_weights)
            .map_err(|e| field_err(path, "skin_weights", e.to_string()))?;
        let to_vec = |a: &[f64; 3]| Vec3::new(a[0], a[1], a[2]);
        ParametricBody::new(
            self.vertices.iter().map(to_vec).collect(),
            self.faces,
            self.uvs,
            self.blendshapes
                .iter()
                .map(|s| s.iter().map(to_vec).collect())
                .collect(),
            parents,
            self.joint_names,
            regressor,
            weights,
            self.max_influences,
        )
        .map_err(|e| field_err(path, "body", e.to_string()))
    }
}

/// Parse a JSON document, naming the offending field on failure.
pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str, path: &Path) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        Error::Format {
            path: path.to_path_buf(),
            field,
            msg: e.into_inner().to_string(),
        }
    })
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_json(&text, path)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidArgument(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_body(path: &Path) -> Result<ParametricBody> {
    read_json::<BodyDoc>(path)?.into_body(path)
}

pub fn write_body(path: &Path, body: &ParametricBody) -> Result<()> {
    write_json(path, &BodyDoc::from_body(body))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::demo::demo_body;

    #[test]
    fn roundtrip_demo_body() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("body.json");
        let b = demo_body();
        write_body(&path, &b).unwrap();
        let back = read_body(&path).unwrap();
        assert_eq!(back.rest_vertices(), b.rest_vertices());
        assert_eq!(back.faces(), b.faces());
        assert_eq!(back.skin_weights(), b.skin_weights());
        assert_eq!(back.joint_regressor(), b.joint_regressor());
        assert_eq!(back.blendshapes(), b.blendshapes());
        assert_eq!(back.parents(), b.parents());
    }

    #[test]
    fn dense_regressor_accepted() {
        let text = r#"{
            "format_version": 1,
            "vertices": [[0,0,0],[1,0,0],[0,1,0]],
            "faces": [[0,1,2]],
            "parents": [-1, 0],
            "joint_regressor": {"dense": [[1,0,0],[0,0.5,0.5]]},
            "skin_weights": [[0,0,1],[1,1,1],[2,1,1]]
        }"#;
        let doc: BodyDoc = parse_json(text, Path::new("b.json")).unwrap();
        let b = doc.into_body(Path::new("b.json")).unwrap();
        assert_eq!(b.num_joints(), 2);
        assert_eq!(b.num_shapes(), 0);
    }

    #[test]
    fn errors_name_the_field() {
        let text = r#"{"format_version": 1, "vertices": [[0,0,"x"]]}"#;
        let err = parse_json::<BodyDoc>(text, Path::new("b.json")).unwrap_err().to_string();
        assert!(err.contains("vertices"), "{err}");

        let text = r#"{
            "format_version": 1,
            "vertices": [[0,0,0],[1,0,0],[0,1,0]],
            "faces": [[0,1,2]],
            "parents": [-1],
            "joint_regressor": {"sparse": [[0,0,1]]},
            "skin_weights": [[0,0,0.5],[1,0,1],[2,0,1]]
        }"#;
        let doc: BodyDoc = parse_json(text, Path::new("b.json")).unwrap();
        let err = doc.into_body(Path::new("b.json")).unwrap_err().to_string();
        assert!(err.contains("skin_weights row 0"), "{err}");
    }
}
