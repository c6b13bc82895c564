use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::field::{CellRule, FaceStrategy};
use crate::linalg::Preconditioner;
use crate::mfd::{BoundarySpec, MfdOptions};
use crate::solver::{PressureMetric, SolverOptions};
use crate::verify::SolvePath;

use super::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub mesh: MeshConfig,
    pub discretization: DiscretizationConfig,
    pub mfd: MfdOptions,
    pub boundary: BoundarySpec,
    pub solver: SolverConfig,
    pub converge: ConvergeConfig,
    pub compare: CompareConfig,
    pub infsup: InfSupConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: ProblemConfig::default(),
            mesh: MeshConfig::default(),
            discretization: DiscretizationConfig::default(),
            mfd: MfdOptions::default(),
            boundary: BoundarySpec::default(),
            solver: SolverConfig::default(),
            converge: ConvergeConfig::default(),
            compare: CompareConfig::default(),
            infsup: InfSupConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

/// Expression source text. Numbers are accepted and kept as written.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct ExprText(pub String);

impl ExprText {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for ExprText {
    fn from(s: &str) -> Self {
        ExprText(s.to_string())
    }
}

impl<'de> Deserialize<'de> for ExprText {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Int(i64),
            Float(f64),
        }
        Ok(ExprText(match Raw::deserialize(d)? {
            Raw::Text(s) => s,
            Raw::Int(i) => i.to_string(),
            Raw::Float(f) => format!("{f:e}"),
        }))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceConfig {
    /// Active where this expression is positive; omit for a catch-all piece.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<ExprText>,
    pub pressure: ExprText,
    pub coefficient: ExprText,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientPiece {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<ExprText>,
    pub value: ExprText,
}

/// Coefficient of an explicit problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoefficientConfig {
    Expression(ExprText),
    Pieces(Vec<CoefficientPiece>),
    Tensor { k11: ExprText, k12: ExprText, k22: ExprText },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemConfig {
    /// Exact pressure and coefficient; forcing and boundary data are derived.
    Manufactured { pressure: ExprText, coefficient: ExprText },
    Piecewise { pieces: Vec<PieceConfig> },
    /// `k = k1` left of `x = 1/2`, `k2` right of it, quasi one-dimensional
    /// exact pressure with continuous flux.
    Interface { k1: f64, k2: f64 },
    /// Data given directly; no exact solution is known.
    Explicit {
        coefficient: CoefficientConfig,
        forcing: ExprText,
        dirichlet: ExprText,
        /// Outward co-normal flux on Neumann faces.
        neumann: ExprText,
    },
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig::Manufactured {
            pressure: "sin(pi*x)*sin(pi*y)".into(),
            coefficient: "1 + x*y".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    Quad,
    PerturbedQuad,
    Polygonal,
    File,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshConfig {
    pub family: FamilyKind,
    /// Cells per side for single-mesh commands.
    pub n: usize,
    /// Cells per side on each level of a study.
    pub levels: Vec<usize>,
    pub xi: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pin_x: Option<f64>,
    /// Mesh file for the `file` family.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig {
            family: FamilyKind::Quad,
            n: 8,
            levels: vec![8, 16, 32, 64],
            xi: 0.3,
            seed: 1,
            pin_x: None,
            path: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscretizationConfig {
    pub strategy: FaceStrategy,
    pub cell_rule: CellRule,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub path: SolvePath,
    pub tol: f64,
    pub maxit: usize,
    pub preconditioner: Preconditioner,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let s = SolverOptions::default();
        SolverConfig {
            path: SolvePath::Hybrid,
            tol: s.tol,
            maxit: s.maxit,
            preconditioner: s.preconditioner,
        }
    }
}

impl SolverConfig {
    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            maxit: self.maxit,
            preconditioner: self.preconditioner,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergeConfig {
    /// The command fails when a fitted rate falls below its floor.
    pub rate_p_floor: f64,
    pub rate_v_floor: f64,
    /// Random positivity probes of the interface matrix per level.
    pub probes: usize,
}

impl Default for ConvergeConfig {
    fn default() -> Self {
        ConvergeConfig {
            rate_p_floor: 1.8,
            rate_v_floor: 0.9,
            probes: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareConfig {
    pub families: Vec<FamilyKind>,
    pub strategies: Vec<FaceStrategy>,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            families: vec![FamilyKind::Quad],
            strategies: FaceStrategy::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InfSupConfig {
    pub levels: Vec<usize>,
    pub metric: PressureMetric,
    /// Required `beta(last level) / beta(first level)`.
    pub min_ratio: f64,
}

impl Default for InfSupConfig {
    fn default() -> Self {
        InfSupConfig {
            levels: vec![4, 8, 16],
            metric: PressureMetric::Weighted,
            min_ratio: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// `mesh-info` also writes the mesh file.
    pub save_mesh: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            save_mesh: false,
        }
    }
}

fn parse_value(raw: &str) -> toml::Value {
    // bare words such as `trace` are taken as strings
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Sets `key.path = value` inside `table`, creating intermediate tables.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{assignment}` is not of the form key=value")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("override key `{key}` has an empty component")));
    }
    let mut current = table;
    for (i, part) in parts[..parts.len() - 1].iter().enumerate() {
        let entry = current
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        current = entry.as_table_mut().ok_or_else(|| {
            CliError::Config(format!("override `{key}`: `{}` is not a table", parts[..=i].join(".")))
        })?;
    }
    let last = parts[parts.len() - 1];
    let value = parse_value(raw.trim());
    if last == "kind" && current.get("kind") != Some(&value) {
        // a different variant shares none of the old variant's fields
        current.clear();
    }
    current.insert(last.to_string(), value);
    Ok(())
}

/// Recursively overlays `over` onto `base`. Tables whose `kind` differs are
/// replaced as a whole.
fn merge(base: &mut toml::Table, over: toml::Table) {
    for (key, value) in over {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o))
                if o.get("kind").is_none() || o.get("kind") == b.get("kind") =>
            {
                merge(b, o)
            }
            (_, value) => {
                base.insert(key, value);
            }
        }
    }
}

impl RunConfig {
    /// Defaults, then the file (if any), then the overrides in order.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, CliError> {
        let mut table: toml::Table = RunConfig::default()
            .to_toml()
            .parse()
            .expect("defaults serialize to a table");
        let file = match path {
            None => toml::Table::new(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Io {
                    path: p.to_path_buf(),
                    message: e.to_string(),
                })?;
                text.parse::<toml::Table>()
                    .map_err(|e| CliError::Config(format!("{}: {}", p.display(), one_line(&e.to_string()))))?
            }
        };
        merge(&mut table, file);
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        RunConfig::from_table(table)
    }

    pub fn from_table(table: toml::Table) -> Result<RunConfig, CliError> {
        let value = toml::Value::Table(table);
        serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(format!("at `{}`: {}", path, one_line(&e.into_inner().to_string())))
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

pub(crate) fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
