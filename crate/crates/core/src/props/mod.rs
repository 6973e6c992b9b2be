//! Randomized property suites. Every instance draws from its own ChaCha stream derived from
//! `(seed, suite name, instance index)`, so a failing instance replays from its recorded seed.

mod flag;
mod geom;
mod measure;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::seed::{derive_seed, tag};

pub use flag::{flag_suites, run_flag_instance, FLAG_SUITES};
pub use measure::{measure_suites, run_measure_instance, MEASURE_SUITES};
pub use geom::{
    coupled_metric, geometry_suites, hilb_fs_instance, offdiag_instance, ray_bound_cases, sampled_forms, submult_instance,
    t_grid, GeomConfig, RayBoundCase, SampledForm,
};

/// Names of every suite `cmd_props` can run.
pub fn suite_names() -> Vec<String> {
    let mut names: Vec<String> = FLAG_SUITES.iter().chain(MEASURE_SUITES.iter()).map(|(n, _)| n.to_string()).collect();
    names.extend(geom::GEOM_INSTANCE_SUITES.iter().map(|n| n.to_string()));
    names
}

/// Re-runs one instance of a named suite from its recorded seed: `(margin, description)`.
pub fn replay(name: &str, seed: u64, max_dim: usize, geom: &GeomConfig) -> Result<(f64, String)> {
    if FLAG_SUITES.iter().any(|(n, _)| *n == name) {
        return run_flag_instance(name, seed, max_dim);
    }
    if MEASURE_SUITES.iter().any(|(n, _)| *n == name) {
        return run_measure_instance(name, seed);
    }
    geom::run_geom_instance(name, seed, geom.base_nodes)
}

/// How many counterexamples a suite keeps.
const MAX_DUMPS: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Counterexample {
    pub instance: usize,
    pub seed: u64,
    pub margin: f64,
    pub detail: String,
}

/// Outcome of one suite. An instance passes when its margin is `>= -tolerance`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub instances: usize,
    pub failures: usize,
    pub worst_margin: f64,
    pub tolerance: f64,
    pub seed: u64,
    pub counterexamples: Vec<Counterexample>,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Seed of instance `i` of suite `name`.
pub fn instance_seed(seed: u64, name: &str, i: usize) -> u64 {
    derive_seed(seed ^ tag(name), i as u64)
}

pub fn instance_rng(seed: u64, name: &str, i: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(instance_seed(seed, name, i))
}

/// Runs `instances` copies of `check` in parallel; results are gathered in index order.
/// An `Err` from an instance counts as a failure (generated inputs are valid by construction).
pub(crate) fn run_suite<F>(name: &str, seed: u64, instances: usize, tolerance: f64, check: F) -> SuiteResult
where
    F: Fn(u64) -> Result<(f64, String)> + Sync,
{
    let outcomes: Vec<(u64, f64, String)> = (0..instances)
        .into_par_iter()
        .map(|i| {
            let s = instance_seed(seed, name, i);
            match check(s) {
                Ok((m, d)) => (s, if m.is_nan() { f64::NEG_INFINITY } else { m }, d),
                Err(e) => (s, f64::NEG_INFINITY, format!("error: {e}")),
            }
        })
        .collect();
    collect_suite(name, seed, tolerance, outcomes)
}

/// Builds a suite result from per-instance `(seed, margin, detail)` in instance order.
pub(crate) fn collect_suite(name: &str, seed: u64, tolerance: f64, outcomes: Vec<(u64, f64, String)>) -> SuiteResult {
    let instances = outcomes.len();
    let mut worst = f64::INFINITY;
    let mut failures = 0;
    let mut dumps = Vec::new();
    for (i, (s, m, d)) in outcomes.into_iter().enumerate() {
        worst = worst.min(m);
        if m < -tolerance {
            failures += 1;
            if dumps.len() < MAX_DUMPS {
                dumps.push(Counterexample { instance: i, seed: s, margin: m, detail: d });
            }
        }
    }
    SuiteResult {
        name: name.to_string(),
        instances,
        failures,
        worst_margin: if instances == 0 { 0.0 } else { worst },
        tolerance,
        seed,
        counterexamples: dumps,
    }
}
