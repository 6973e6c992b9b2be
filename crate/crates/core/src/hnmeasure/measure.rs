use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::multiindex::factorial;
use crate::quadrature;
use crate::tol;

/// Sorted, finite Harder–Narasimhan slopes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeVector(Vec<f64>);

impl SlopeVector {
    pub fn new(mut slopes: Vec<f64>) -> Result<Self> {
        if slopes.is_empty() || slopes.iter().any(|x| !x.is_finite()) {
            return Err(LabError::Invalid("slopes must be a non-empty list of finite reals".into()));
        }
        slopes.sort_by(f64::total_cmp);
        Ok(Self(slopes))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Finitely supported probability measure; atoms sorted by location with duplicates merged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DiscreteJson", into = "DiscreteJson")]
pub struct DiscreteMeasure {
    atoms: Vec<(f64, f64)>,
    cum: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DiscreteJson {
    atoms: Vec<(f64, f64)>,
}

impl From<DiscreteMeasure> for DiscreteJson {
    fn from(m: DiscreteMeasure) -> Self {
        DiscreteJson { atoms: m.atoms }
    }
}

impl TryFrom<DiscreteJson> for DiscreteMeasure {
    type Error = LabError;
    fn try_from(j: DiscreteJson) -> Result<Self> {
        DiscreteMeasure::new(j.atoms)
    }
}

impl DiscreteMeasure {
    pub fn new(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() || atoms.iter().any(|&(x, w)| !x.is_finite() || !(w >= 0.0)) {
            return Err(LabError::Invalid("atoms need finite locations and non-negative weights".into()));
        }
        let total = compensated_sum(atoms.iter().map(|a| a.1));
        if (total - 1.0).abs() > 1e-12 {
            return Err(LabError::Invalid(format!("weights sum to {total}, not 1")));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (x, w) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == x => last.1 += w,
                _ => merged.push((x, w)),
            }
        }
        let mut acc = 0.0;
        let cum = merged.iter().map(|a| {
            acc += a.1;
            acc
        }).collect();
        Ok(Self { atoms: merged, cum })
    }

    pub fn dirac(x: f64) -> Self {
        Self { atoms: vec![(x, 1.0)], cum: vec![1.0] }
    }

    /// `P(X ≤ x)`
    pub fn cdf(&self, x: f64) -> f64 {
        let i = self.atoms.partition_point(|a| a.0 <= x);
        if i == 0 { 0.0 } else { self.cum[i - 1].min(1.0) }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }
}

/// Law of `Σ x_i μ_i` for `x` uniform on the standard `(r-1)`-simplex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexPushforwardMeasure {
    mu: SlopeVector,
}

impl SimplexPushforwardMeasure {
    pub fn new(mu: SlopeVector) -> Self {
        Self { mu }
    }

    pub fn mu(&self) -> &[f64] {
        self.mu.as_slice()
    }

    pub fn r(&self) -> usize {
        self.mu.len()
    }

    pub fn is_point_mass(&self) -> bool {
        let m = self.mu();
        m[0] == m[m.len() - 1]
    }

    /// Density: the normalized B-spline of order `r - 1` with knots `μ` (Curry–Schoenberg).
    pub fn density(&self, x: f64) -> f64 {
        if self.is_point_mass() {
            return 0.0;
        }
        mspline(self.mu(), x)
    }

    fn knot_intervals(&self) -> Vec<(f64, f64)> {
        self.mu().windows(2).filter(|w| w[1] > w[0]).map(|w| (w[0], w[1])).collect()
    }

    /// Gauss points per knot interval that integrate `density · (affine)` exactly.
    fn exact_points(&self) -> usize {
        self.r() / 2 + 2
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let m = self.mu();
        if self.is_point_mass() {
            return if x >= m[0] { 1.0 } else { 0.0 };
        }
        if x <= m[0] {
            return 0.0;
        }
        if x >= m[m.len() - 1] {
            return 1.0;
        }
        let n = self.exact_points();
        let mut acc = 0.0;
        for (a, b) in self.knot_intervals() {
            if x >= b {
                acc += quadrature::integrate_gl(&|y| self.density(y), a, b, n);
            } else if x > a {
                acc += quadrature::integrate_gl(&|y| self.density(y), a, x, n);
            }
        }
        acc.clamp(0.0, 1.0)
    }
}

fn mspline(t: &[f64], x: f64) -> f64 {
    let m = t.len();
    let mut cur: Vec<f64> = (0..m - 1)
        .map(|i| if t[i + 1] > t[i] && t[i] <= x && x < t[i + 1] { 1.0 / (t[i + 1] - t[i]) } else { 0.0 })
        .collect();
    // Close the last non-degenerate interval on the right so the support is [μ_1, μ_r].
    if x == t[m - 1] {
        if let Some(i) = (0..m - 1).rev().find(|&i| t[i + 1] > t[i]) {
            cur[i] = 1.0 / (t[i + 1] - t[i]);
        }
    }
    for j in 2..m {
        let next: Vec<f64> = (0..m - j)
            .map(|i| {
                let span = t[i + j] - t[i];
                if span <= 0.0 {
                    0.0
                } else {
                    j as f64 * ((x - t[i]) * cur[i] + (t[i + j] - x) * cur[i + 1]) / ((j - 1) as f64 * span)
                }
            })
            .collect();
        cur = next;
    }
    cur[0]
}

/// Neumaier-compensated summation.
pub fn compensated_sum(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut comp) = (0.0f64, 0.0f64);
    for x in xs {
        let t = s + x;
        comp += if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
        s = t;
    }
    s + comp
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SlopeMeasure {
    Discrete(DiscreteMeasure),
    Simplex(SimplexPushforwardMeasure),
}

impl From<DiscreteMeasure> for SlopeMeasure {
    fn from(m: DiscreteMeasure) -> Self {
        SlopeMeasure::Discrete(m)
    }
}

impl From<SimplexPushforwardMeasure> for SlopeMeasure {
    fn from(m: SimplexPushforwardMeasure) -> Self {
        SlopeMeasure::Simplex(m)
    }
}

impl SlopeMeasure {
    pub fn support(&self) -> (f64, f64) {
        match self {
            SlopeMeasure::Discrete(d) => (d.atoms[0].0, d.atoms[d.atoms.len() - 1].0),
            SlopeMeasure::Simplex(s) => (s.mu()[0], s.mu()[s.r() - 1]),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            SlopeMeasure::Discrete(d) => d.cdf(x),
            SlopeMeasure::Simplex(s) => s.cdf(x),
        }
    }

    /// Points where the CDF fails to be polynomial.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            SlopeMeasure::Discrete(d) => d.atoms.iter().map(|a| a.0).collect(),
            SlopeMeasure::Simplex(s) => s.mu().to_vec(),
        }
    }
}

/// `∫ x^p dm`; exact. For the simplex law `E[(Σ μ_i x_i)^p] = p!(r-1)!/(p+r-1)! · h_p(μ)`.
pub fn moment(m: &SlopeMeasure, p: u32) -> Result<f64> {
    if p > tol::MOMENT_ORDER_CAP {
        return Err(LabError::CapExceeded { what: "moment order".into(), value: p as usize, cap: tol::MOMENT_ORDER_CAP as usize });
    }
    Ok(match m {
        SlopeMeasure::Discrete(d) => d.atoms.iter().map(|&(x, w)| w * x.powi(p as i32)).sum(),
        SlopeMeasure::Simplex(s) => {
            let r = s.r() as u32;
            factorial(p) * factorial(r - 1) / factorial(p + r - 1) * complete_homogeneous(s.mu(), p as usize)
        }
    })
}

/// Complete homogeneous symmetric polynomial `h_p(μ)`.
pub fn complete_homogeneous(mu: &[f64], p: usize) -> f64 {
    let mut h = vec![0.0; p + 1];
    h[0] = 1.0;
    for &m in mu {
        for d in 1..=p {
            h[d] += m * h[d - 1];
        }
    }
    h[p]
}

/// `∫ |x - t| dm`.
pub fn abs_moment(m: &SlopeMeasure, t: f64) -> Result<f64> {
    match m {
        SlopeMeasure::Discrete(d) => Ok(d.atoms.iter().map(|&(x, w)| w * (x - t).abs()).sum()),
        SlopeMeasure::Simplex(s) if s.is_point_mass() => Ok((s.mu()[0] - t).abs()),
        SlopeMeasure::Simplex(s) if s.r() == 2 => {
            let (a, b) = (s.mu()[0], s.mu()[1]);
            Ok(if t <= a {
                0.5 * (a + b) - t
            } else if t >= b {
                t - 0.5 * (a + b)
            } else {
                ((t - a).powi(2) + (b - t).powi(2)) / (2.0 * (b - a))
            })
        }
        SlopeMeasure::Simplex(s) => {
            let mut cuts: Vec<f64> = s.mu().to_vec();
            let (lo, hi) = (cuts[0], cuts[cuts.len() - 1]);
            if t > lo && t < hi {
                cuts.push(t);
            }
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            let mut total = 0.0;
            for w in cuts.windows(2) {
                let f = |x: f64| (x - t).abs() * s.density(x);
                total += quadrature::adaptive(&f, w[0], w[1], 1e-8, 1e-14)?;
            }
            Ok(total)
        }
    }
}

/// `∫ |F_1 - F_2|` on the merged breakpoint grid, splitting at sign changes.
pub fn wasserstein1(m1: &SlopeMeasure, m2: &SlopeMeasure) -> Result<f64> {
    let mut pts = m1.breakpoints();
    pts.extend(m2.breakpoints());
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut total = 0.0;
    for w in pts.windows(2) {
        let g = |x: f64| m1.cdf(x) - m2.cdf(x);
        total += quadrature::integrate_abs(&g, w[0], w[1], 1e-12, 1e-15)?;
    }
    Ok(total)
}

/// Monte Carlo mean and standard error of `f(Σ μ_i x_i)` under the uniform simplex law,
/// with per-chunk seeds and a fixed-order reduction.
pub fn monte_carlo(mu: &[f64], f: &(dyn Fn(f64) -> f64 + Sync), samples: usize, seed: u64) -> (f64, f64) {
    const CHUNK: usize = 1 << 14;
    let chunks = samples.div_ceil(CHUNK);
    let partial: Vec<(f64, f64, usize)> = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let mut rng = ChaCha8Rng::seed_from_u64(crate::seed::derive_seed(seed, ci as u64));
            let n = CHUNK.min(samples - ci * CHUNK);
            let (mut s, mut s2) = (0.0, 0.0);
            let mut e = vec![0.0; mu.len()];
            for _ in 0..n {
                let mut tot = 0.0;
                for v in e.iter_mut() {
                    *v = Exp1.sample(&mut rng);
                    tot += *v;
                }
                let x: f64 = e.iter().zip(mu).map(|(a, b)| a * b).sum::<f64>() / tot;
                let y = f(x);
                s += y;
                s2 += y * y;
            }
            (s, s2, n)
        })
        .collect();
    let (s, s2, n) = partial.iter().fold((0.0, 0.0, 0usize), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let mean = s / n as f64;
    let var = (s2 / n as f64 - mean * mean).max(0.0);
    (mean, (var / n as f64).sqrt())
}
