//! Mesh file format: one JSON document
//!
//! ```json
//! {
//!   "vertices": [[0.0e0, 0.0e0], ...],
//!   "cells": [[0, 1, 4, 3], ...],
//!   "boundary_labels": { "left": [[0, 3], ...] }
//! }
//! ```
//!
//! Coordinates are written with 17 significant digits, which round-trips
//! every `f64` exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use super::{Mesh, MeshError, Point};

#[derive(Debug, Error)]
pub enum MeshIoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("mesh file line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshFile {
    pub vertices: Vec<Point>,
    pub cells: Vec<Vec<usize>>,
    #[serde(default)]
    pub boundary_labels: Option<BTreeMap<String, Vec<[usize; 2]>>>,
}

impl MeshFile {
    pub fn from_mesh(mesh: &Mesh) -> MeshFile {
        let mut labels: BTreeMap<String, Vec<[usize; 2]>> = BTreeMap::new();
        for f in mesh.faces() {
            if let Some(l) = f.label {
                labels
                    .entry(mesh.labels()[l].clone())
                    .or_default()
                    .push(f.vertices);
            }
        }
        MeshFile {
            vertices: mesh.vertices().to_vec(),
            cells: mesh.cells().iter().map(|c| c.vertices.clone()).collect(),
            boundary_labels: (!labels.is_empty()).then_some(labels),
        }
    }

    pub fn parse(text: &str) -> Result<MeshFile, MeshIoError> {
        serde_json::from_str(text).map_err(|e| MeshIoError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn into_mesh(self) -> Result<Mesh, MeshIoError> {
        let mesh = Mesh::build(self.vertices, self.cells)?;
        Ok(match &self.boundary_labels {
            Some(pairs) => mesh.label_boundary_pairs(pairs)?,
            None => mesh,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = String::from("{\n  \"vertices\": [");
        for (i, v) in self.vertices.iter().enumerate() {
            let sep = if i == 0 { "\n    " } else { ",\n    " };
            let _ = write!(s, "{sep}[{:.16e}, {:.16e}]", v[0], v[1]);
        }
        s.push_str("\n  ],\n  \"cells\": [");
        for (i, c) in self.cells.iter().enumerate() {
            let sep = if i == 0 { "\n    " } else { ",\n    " };
            let ids: Vec<String> = c.iter().map(|v| v.to_string()).collect();
            let _ = write!(s, "{sep}[{}]", ids.join(", "));
        }
        s.push_str("\n  ]");
        if let Some(labels) = &self.boundary_labels {
            s.push_str(",\n  \"boundary_labels\": {");
            for (i, (name, pairs)) in labels.iter().enumerate() {
                let sep = if i == 0 { "\n    " } else { ",\n    " };
                let ps: Vec<String> = pairs.iter().map(|p| format!("[{}, {}]", p[0], p[1])).collect();
                let key = serde_json::to_string(name).unwrap_or_default();
                let _ = write!(s, "{sep}{key}: [{}]", ps.join(", "));
            }
            s.push_str("\n  }");
        }
        s.push_str("\n}\n");
        s
    }
}

impl Mesh {
    pub fn load(path: impl AsRef<Path>) -> Result<Mesh, MeshIoError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| MeshIoError::Io {
            path: path.display().to_string(),
            source,
        })?;
        MeshFile::parse(&text)?.into_mesh()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), MeshIoError> {
        let path = path.as_ref();
        std::fs::write(path, MeshFile::from_mesh(self).to_json()).map_err(|source| {
            MeshIoError::Io {
                path: path.display().to_string(),
                source,
            }
        })
    }

    pub fn to_json(&self) -> String {
        MeshFile::from_mesh(self).to_json()
    }
}
