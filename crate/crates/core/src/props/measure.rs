use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{LabError, Result};
use crate::hnmeasure::{
    abs_moment, eta_k, eta_limit, hhat_exact, moment, split_sym_slopes, wasserstein1, SlopeMeasure,
};

use super::{run_suite, SuiteResult};

/// Level at which Riemann–Roch is checked; `r = 3` would exceed the monomial cap there.
const RR_LEVEL: usize = 200;
const W1_LADDER: [usize; 5] = [1, 2, 4, 8, 16];

pub const MEASURE_SUITES: [(&str, f64); 5] = [
    ("riemann_roch", 0.0),
    ("first_moment", 1e-9),
    ("weak_convergence", 1e-9),
    ("abs_moment_shape", 1e-8),
    ("limit_support", 0.0),
];

pub fn measure_suites(seed: u64, instances: usize) -> Vec<SuiteResult> {
    MEASURE_SUITES
        .iter()
        .map(|&(name, t)| run_suite(name, seed, instances, t, |s| run_measure_instance(name, s)))
        .collect()
}

pub fn run_measure_instance(name: &str, seed: u64) -> Result<(f64, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rng = &mut rng;
    match name {
        "riemann_roch" => {
            // the 1/k coefficient grows with Σa + r, so the 5/k window needs small degrees
            let a = degrees(rng, 2, 1);
            let k = RR_LEVEL;
            let h0 = hhat_exact(&a, 0, k)?[k - 1];
            let h1 = hhat_exact(&a, 1, k)?[k - 1];
            let sum: i64 = a.iter().sum();
            Ok((5.0 / k as f64 - (h0 - h1 - sum as f64).abs(), format!("degrees {a:?}, h0 {h0}, h1 {h1}")))
        }
        "first_moment" => {
            let a = degrees(rng, 4, 3);
            let k = rng.random_range(1..=16usize);
            let r = a.len() as f64;
            let sum = a.iter().sum::<i64>() as f64;
            let lim = moment(&eta_limit(&a)?.into(), 1)?;
            let ek = moment(&eta(&a, k)?, 1)?;
            let err = (r * lim - sum).abs().max((ek - sum / r).abs());
            Ok((-err / (1.0 + sum.abs()), format!("degrees {a:?}, k {k}")))
        }
        "weak_convergence" => {
            // k·W1 approaches about a third of the degree spread
            let a = degrees(rng, 4, 2);
            let lim: SlopeMeasure = eta_limit(&a)?.into();
            let mut worst = f64::INFINITY;
            let mut prev = f64::INFINITY;
            for k in W1_LADDER {
                let w = wasserstein1(&eta(&a, k)?, &lim)?;
                worst = worst.min(2.0 / k as f64 - w).min(prev - w);
                prev = w;
            }
            Ok((worst, format!("degrees {a:?}")))
        }
        "abs_moment_shape" => {
            let a = degrees(rng, 4, 3);
            let m: SlopeMeasure = if rng.random_bool(0.5) { eta_limit(&a)?.into() } else { eta(&a, rng.random_range(1..=8))? };
            let (lo, hi) = m.support();
            let ts: Vec<f64> = (0..=40).map(|i| lo - 1.0 + (hi - lo + 2.0) * i as f64 / 40.0).collect();
            let f: Vec<f64> = ts.iter().map(|&t| abs_moment(&m, t)).collect::<Result<_>>()?;
            let mean = moment(&m, 1)?;
            let mut worst = f64::INFINITY;
            for i in 0..ts.len() {
                // Jensen
                worst = worst.min(f[i] - (mean - ts[i]).abs());
                if i > 0 {
                    worst = worst.min((ts[i] - ts[i - 1]) - (f[i] - f[i - 1]).abs());
                }
                if i > 0 && i + 1 < ts.len() {
                    worst = worst.min(f[i + 1] - 2.0 * f[i] + f[i - 1]);
                }
            }
            Ok((worst, format!("degrees {a:?}, {}", if matches!(m, SlopeMeasure::Simplex(_)) { "limit" } else { "eta_k" })))
        }
        "limit_support" => {
            let a = degrees(rng, 4, 3);
            let (lo, hi) = SlopeMeasure::from(eta_limit(&a)?).support();
            let (amin, amax) = (*a.iter().min().unwrap() as f64, *a.iter().max().unwrap() as f64);
            Ok((-((lo - amin).abs() + (hi - amax).abs()), format!("degrees {a:?}")))
        }
        _ => Err(LabError::Invalid(format!("unknown suite {name}"))),
    }
}

fn degrees(rng: &mut ChaCha8Rng, rmax: usize, amax: i64) -> Vec<i64> {
    let r = rng.random_range(1..=rmax);
    (0..r).map(|_| rng.random_range(-amax..=amax)).collect()
}

fn eta(a: &[i64], k: usize) -> Result<SlopeMeasure> {
    Ok(eta_k(&split_sym_slopes(a, k)?, k).into())
}
