//! Experiment configuration, reports and the five runner commands. Reports are plain data;
//! writing them to disk is left to the caller.

mod commands;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::flagcore::HermitianProduct;
use crate::linalg::{CMat, C};
use crate::multiindex::sym_dim;
use crate::projmodel::GridSpec;
use crate::props::{GeomConfig, SuiteResult};
use crate::tol;

pub use commands::{cmd_cohom, cmd_measure, cmd_minimize, cmd_props, cmd_ratio, run_command, COMMANDS};

const MAX_PROPS_DIM: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub degrees: Vec<i64>,
    pub t_grid: Vec<f64>,
    pub k_ladder: Vec<usize>,
    pub l_ladder: Vec<usize>,
    pub s_ladder: Vec<f64>,
    pub grid_spec: GridSpec,
    pub seed: u64,
    pub output_dir: String,
    /// Largest `k` of the cohomology table.
    pub cohom_k_max: usize,
    /// `|ĥ^q(k) - formula| ≤ c₁/k + c₂/k²` at every `k`.
    pub cohom_bound: [f64; 2],
    /// `|ĥ⁰ - ĥ¹ - Σa| ≤ c/k` at every `k`.
    pub riemann_roch_bound: f64,
    /// Amplitude of the `sin 2πu` bump on summand 0 for the perturbed minimizing family; 0 disables it.
    pub perturbation: f64,
    pub instances: usize,
    pub measure_instances: usize,
    pub max_dim: usize,
    pub geometry: bool,
    pub geometry_config: GeomConfig,
    /// Re-run one recorded instance of a suite.
    pub replay: Option<Replay>,
    /// A user-supplied metric, checked for the weight-spectrum identity of its coordinate flag.
    pub fixture: Option<MetricFixture>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            degrees: vec![1, 0],
            t_grid: vec![-1.0, -0.5, 0.0, 0.5, 1.0],
            k_ladder: vec![1, 2, 4, 8],
            l_ladder: vec![2, 4, 8],
            s_ladder: vec![0.0, 1.0, 2.0, 4.0, 8.0, 16.0],
            grid_spec: GridSpec { base_nodes: 16, fiber_nodes: 16 },
            seed: tol::DEFAULT_SEED,
            output_dir: "wzwlab-out".into(),
            cohom_k_max: 200,
            cohom_bound: [3.0, 2.0],
            riemann_roch_bound: 5.0,
            perturbation: 0.5,
            instances: 1000,
            measure_instances: 1000,
            max_dim: 6,
            geometry: true,
            geometry_config: GeomConfig::default(),
            replay: None,
            fixture: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Replay {
    pub suite: String,
    pub seed: u64,
}

/// Gram matrix as rows of `[re, im]` pairs, with the weights of the coordinate flag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricFixture {
    pub gram: Vec<Vec<[f64; 2]>>,
    pub weights: Vec<f64>,
}

impl MetricFixture {
    pub fn product(&self) -> Result<HermitianProduct> {
        let n = self.gram.len();
        if n == 0 || self.gram.iter().any(|row| row.len() != n) {
            return Err(LabError::Invalid("fixture gram must be a non-empty square matrix".into()));
        }
        if self.weights.len() != n {
            return Err(LabError::DimensionMismatch { expected: n, got: self.weights.len() });
        }
        HermitianProduct::new(CMat::from_fn(n, n, |i, j| C::new(self.gram[i][j][0], self.gram[i][j][1])))
    }
}

fn ladder<T: PartialOrd + Copy + std::fmt::Debug>(name: &str, v: &[T]) -> Result<()> {
    if v.is_empty() {
        return Err(LabError::Invalid(format!("{name} is empty")));
    }
    if v.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(LabError::Invalid(format!("{name} must be strictly increasing, got {v:?}")));
    }
    Ok(())
}

fn cap(what: String, value: Option<usize>, cap: usize) -> Result<()> {
    match value {
        Some(v) if v <= cap => Ok(()),
        v => Err(LabError::CapExceeded { what, value: v.unwrap_or(usize::MAX), cap }),
    }
}

impl ExperimentConfig {
    /// Checks the fields `command` reads. Called by every command before any work.
    pub fn validate(&self, command: &str) -> Result<()> {
        let r = self.degrees.len();
        if r == 0 {
            return Err(LabError::Invalid("degrees must be non-empty".into()));
        }
        if self.t_grid.is_empty() || self.t_grid.iter().any(|t| !t.is_finite()) {
            return Err(LabError::Invalid("t_grid must be non-empty and finite".into()));
        }
        ladder("k_ladder", &self.k_ladder)?;
        ladder("l_ladder", &self.l_ladder)?;
        ladder("s_ladder", &self.s_ladder)?;
        if self.k_ladder[0] == 0 || self.l_ladder[0] == 0 {
            return Err(LabError::Invalid("k and l must be positive".into()));
        }
        if self.s_ladder[0] < 0.0 || !self.s_ladder.iter().all(|s| s.is_finite()) {
            return Err(LabError::Invalid("s_ladder must be finite and non-negative".into()));
        }
        crate::projmodel::RadialGrid::new(r.saturating_sub(1), self.grid_spec)?;
        match command {
            "measure" => {
                for &k in &self.k_ladder {
                    cap(format!("dim Sym^{k}"), sym_dim(r, k), tol::SYM_DIM_CAP)?;
                }
            }
            "cohom" => {
                if self.cohom_k_max == 0 {
                    return Err(LabError::Invalid("cohom_k_max must be positive".into()));
                }
                cap(format!("dim Sym^{}", self.cohom_k_max), sym_dim(r, self.cohom_k_max), tol::SYM_DIM_CAP)?;
            }
            "minimize" => {
                for &k in &self.k_ladder {
                    cap(format!("N_k at k = {k}"), sym_dim(r, k), tol::NK_CAP)?;
                }
                if !self.perturbation.is_finite() {
                    return Err(LabError::Invalid("perturbation must be finite".into()));
                }
            }
            "ratio" => {
                let k = self.k_ladder[0];
                let nk = sym_dim(r, k);
                cap(format!("N_k at k = {k}"), nk, tol::NK_CAP)?;
                for &l in &self.l_ladder {
                    cap(format!("dim Sym^{l}(E_{k})"), nk.and_then(|n| sym_dim(n, l)), tol::SYM_DIM_CAP)?;
                    cap(format!("N_kl at kl = {}", k * l), sym_dim(r, k * l), tol::NK_CAP)?;
                }
            }
            "props" => {
                if self.max_dim < 2 || self.max_dim > MAX_PROPS_DIM {
                    return Err(LabError::Invalid(format!("max_dim must lie in [2, {MAX_PROPS_DIM}]")));
                }
                if let Some(f) = &self.fixture {
                    f.product()?;
                }
                if let Some(rp) = &self.replay {
                    if !crate::props::suite_names().iter().any(|n| *n == rp.suite) {
                        return Err(LabError::Invalid(format!("unknown suite {}", rp.suite)));
                    }
                }
                crate::projmodel::RadialGrid::new(1, self.geometry_config.grid)?;
            }
            _ => return Err(LabError::Invalid(format!("unknown command {command}"))),
        }
        Ok(())
    }
}

/// Shortest round-trip decimal, switching to exponent form for very small or large magnitudes.
pub fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// One table cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Bool(bool),
    Text(String),
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Num(v) => f.write_str(&fmt_num(*v)),
            Cell::Bool(v) => write!(f, "{v}"),
            Cell::Text(v) => f.write_str(v),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// A family of `(x, y)` series, emitted as one gnuplot data file with one block per series.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Curve {
    pub name: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

impl Curve {
    pub fn to_dat(&self) -> String {
        let mut out = format!("# {}: {} vs {}\n", self.name, self.y_label, self.x_label);
        for (i, s) in self.series.iter().enumerate() {
            if i > 0 {
                out.push_str("\n\n");
            }
            out.push_str(&format!("# {}\n", s.label));
            for (x, y) in &s.points {
                out.push_str(&format!("{} {}\n", fmt_num(*x), fmt_num(*y)));
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<")]
    Lt,
}

/// `lhs (relation) rhs` up to `tolerance`; `Lt` is strict and ignores the tolerance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub lhs: f64,
    pub relation: Relation,
    pub rhs: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(name: impl Into<String>, lhs: f64, relation: Relation, rhs: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        let pass = match relation {
            Relation::Le => lhs <= rhs + tolerance,
            Relation::Ge => lhs >= rhs - tolerance,
            Relation::Lt => lhs < rhs,
        };
        Self { name: name.into(), lhs, relation, rhs, tolerance, pass, detail: detail.into() }
    }

    pub fn le(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self::new(name, lhs, Relation::Le, rhs, tolerance, detail)
    }

    pub fn ge(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self::new(name, lhs, Relation::Ge, rhs, tolerance, detail)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub command: String,
    pub config: ExperimentConfig,
    pub passed: bool,
    pub asserted: Vec<Verdict>,
    /// Convergence diagnostics without rates; never affect `passed`.
    pub trends: Vec<Verdict>,
    pub tables: Vec<Table>,
    pub curves: Vec<Curve>,
    pub suites: Vec<SuiteResult>,
}

impl RunReport {
    pub fn new(command: &str, config: &ExperimentConfig) -> Self {
        Self {
            command: command.into(),
            config: config.clone(),
            passed: true,
            asserted: Vec::new(),
            trends: Vec::new(),
            tables: Vec::new(),
            curves: Vec::new(),
            suites: Vec::new(),
        }
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.asserted.iter().chain(&self.trends).find(|v| v.name == name)
    }

    fn finish(mut self) -> Self {
        self.passed = self.asserted.iter().all(|v| v.pass);
        self
    }
}
