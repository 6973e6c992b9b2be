use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{LabError, Result};
use crate::flagcore::{
    adapted_basis, dominates, geodesic_ray, geodesic_segment, loewner_gap, quotient_filtration, quotient_metric,
    restrict_operator, sym_filtration, sym_metric, sym_operator, trace_abs_norm, weight_operator, Filtration,
    HermitianProduct, LinearSurjection,
};
use crate::linalg::{self, c, CMat};
use crate::multiindex::sym_dim;
use crate::tol;

use super::{run_suite, SuiteResult};

/// Suite names with their pass tolerances on the margin.
pub const FLAG_SUITES: [(&str, f64); 9] = [
    ("weight_spectrum", 1e-9),
    ("weight_monotonicity", 1e-10),
    ("quotient_ray_interpolation", tol::LOEWNER),
    ("monotone_rays", tol::LOEWNER),
    ("segment_interpolation", tol::LOEWNER),
    ("quotient_derivative", tol::DERIV_TOL),
    ("log_velocity", tol::LOG_VELOCITY),
    ("restriction_vs_quotient_weight", tol::LOEWNER),
    ("ky_fan", 1e-10),
];

pub fn flag_suites(seed: u64, instances: usize, max_dim: usize) -> Vec<SuiteResult> {
    FLAG_SUITES
        .iter()
        .map(|&(name, t)| run_suite(name, seed, instances, t, |s| run_flag_instance(name, s, max_dim)))
        .collect()
}

/// One instance of a named suite from its own seed: `(margin, description)`.
pub fn run_flag_instance(name: &str, seed: u64, max_dim: usize) -> Result<(f64, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_dim = max_dim.max(2);
    let rng = &mut rng;
    match name {
        "weight_spectrum" => weight_spectrum(rng, max_dim),
        "weight_monotonicity" => weight_monotonicity(rng, max_dim),
        "quotient_ray_interpolation" => quotient_ray_interpolation(rng, max_dim),
        "monotone_rays" => monotone_rays(rng, max_dim),
        "segment_interpolation" => segment_interpolation(rng, max_dim),
        "quotient_derivative" => quotient_derivative(rng, max_dim),
        "log_velocity" => log_velocity(rng, max_dim),
        "restriction_vs_quotient_weight" => restriction_vs_quotient_weight(rng, max_dim),
        "ky_fan" => ky_fan(rng, max_dim),
        _ => Err(LabError::Invalid(format!("unknown suite {name}"))),
    }
}

fn random_flag(rng: &mut ChaCha8Rng, n: usize) -> Result<(Filtration, CMat, Vec<f64>)> {
    let basis = linalg::complex_gaussian(rng, n, n);
    // half-integer weights so that repeated jumps (non-complete flags) are common
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(-4..=4) as f64 * 0.5).collect();
    Ok((Filtration::from_weighted_basis(&basis, &w)?, basis, w))
}

fn random_product(rng: &mut ChaCha8Rng, n: usize) -> Result<HermitianProduct> {
    HermitianProduct::new(linalg::random_pd(rng, n, 1.0))
}

/// A product `≤` the given one: `L C L†` with `0 < C ≤ Id` in the whitened frame.
fn shrink(rng: &mut ChaCha8Rng, h: &HermitianProduct) -> Result<HermitianProduct> {
    let n = h.dim();
    let u = linalg::random_unitary(rng, n);
    let d: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..=1.0)).collect();
    let cm = &u * linalg::real_diag(&d) * u.adjoint();
    HermitianProduct::from_computed(h.chol() * cm * h.chol().adjoint())
}

fn random_surjection(rng: &mut ChaCha8Rng, n: usize) -> Result<LinearSurjection> {
    let m = rng.random_range(1..n.max(2));
    LinearSurjection::new(linalg::complex_gaussian(rng, m.min(n), n))
}

/// `min eig(G_small^{-1} G_big) - 1`: nonnegative iff `big ≥ small` as norms.
fn norm_margin(big: &HermitianProduct, small: &HermitianProduct) -> Result<f64> {
    Ok(small.ratio_eigs(big)?[0] - 1.0)
}

fn weight_spectrum(rng: &mut ChaCha8Rng, max_dim: usize) -> Result<(f64, String)> {
    let n = rng.random_range(1..=max_dim);
    let (f, _, w) = random_flag(rng, n)?;
    let h = random_product(rng, n)?;
    let a = weight_operator(&h, &f)?;
    let ev = linalg::eigvalsh(&linalg::hermitize(&h.whiten(&a)));
    let mut jumps = w.clone();
    jumps.sort_by(f64::total_cmp);
    let err = ev.iter().zip(&jumps).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    Ok((-err, format!("dim {n}, weights {w:?}")))
}

fn weight_monotonicity(rng: &mut ChaCha8Rng, max_dim: usize) -> Result<(f64, String)> {
    let n = rng.random_range(1..=max_dim);
    let (f2, basis, w2) = random_flag(rng, n)?;
    let w1: Vec<f64> = w2.iter().map(|&x| x - rng.random_range(0..=2) as f64 * 0.5).collect();
    let f1 = Filtration::from_weighted_basis(&basis, &w1)?;
    if !dominates(&f1, &f2) {
        return Err(LabError::Invalid("generated flags fail to dominate".into()));
    }
    let h = random_product(rng, n)?;
    let gap = loewner_gap(&h, &weight_operator(&h, &f1)?, &weight_operator(&h, &f2)?);
    Ok((gap, format!("dim {n}, w1 {w1:?}, w2 {w2:?}")))
}

fn quotient_ray_interpolation(rng: &mut ChaCha8Rng, max_dim: usize) -> Result<(f64, String)> {
    let n = rng.random_range(2..=max_dim);
    let p = random_surjection(rng, n)?;
    let (f, _, _) = random_flag(rng, n)?;
    let h0 = random_product(rng, n)?;
    let h1 = shrink(rng, &quotient_metric(&h0, &p)?)?;
    let qf = quotient_filtration(&f, &p)?;
    // G dominated by [F]: lift the weights of an adapted basis of [F]
    let ab = adapted_basis(&h1, &qf)?;
    let lifted: Vec<f64> = ab.weights.iter().map(|&x| x + rng.random_range(0..=2) as f64 * 0.5).collect();
    let g = Filtration::from_weighted_basis(&ab.basis, &lifted)?;
    if !dominates(&qf, &g) {
        return Err(LabError::Invalid("generated quotient flag fails to dominate".into()));
    }
    let mut worst = f64::INFINITY;
    for s in [0.1, 1.0, 5.0] {
        let big = quotient_metric(&geodesic_ray(&h0, &f, s)?, &p)?;
        let small = geodesic_ray(&h1, &g, s)?;
        worst = worst.min(norm_margin(&big, &small)?);
    }
    Ok((worst, format!("dim {n} -> {}", p.target_dim())))
}

fn monotone_rays(rng: &mut ChaCha8Rng, max_dim: usize) -> Result<(f64, String)> {
    let n = rng.random_range(1..=max_dim);
    let (f, _, w) = random_flag(rng, n)?;
    let h = random_product(rng, n)?;
    let hs = shrink(rng, &h)?;
    let s = rng.random_range(0.0..5.0);
    let m = norm_margin(&geodesic_ray(&h, &f, s)?, &geodesic_ray(&hs, &f, s)?)?;
    Ok((m, format!("dim {n}, weights {w:?}, s {s:.4}")))
}

fn segment_interpolation(rng: &mut ChaCha8Rng, max_dim: usize) -> Result<(f64, String)> {
    let n = rng.random_range(2..=max_dim);
    let p = random_surjection(rng, n)?;
    let h0 = random_product(rng, n)?;
    let h1 = random_product(rng, n)?;
    let (q0, q1) = (quotient_metric(&h0, &p)?, quotient_metric(&h1, &p)?);
    let mut worst = f64::INFINITY;
    for s in [0.25, 0.5, 0.75] {
        let big = quotient_metric(&geodesic_segment(&h0, &h1, s)?, &p)?;
        worst = worst.min(norm_margin(&big, &geodesic_segment(&q0, &q1, s)?)?);
    }
    Ok((worst, format!("dim {n} -> {}", p.target_dim())))
}

/// `d/ds [H_s]|_{s=0} = -G_Q A|_Q` in Gram form, by a centered difference.
fn quotient_derivative(rng: &mut ChaCha8Rng, max_dim: usize) -> Result<(f64, String)> {
    let n = rng.random_range(2..=max_dim);
    let p = random_surjection(rng, n)?;
    let (f, _, w) = random_flag(rng, n)?;
    let h = random_product(rng, n)?;
    let step = tol::DERIV_STEP;
    let gp = quotient_metric(&geodesic_ray(&h, &f, step)?, &p)?;
    let gm = quotient_metric(&geodesic_ray(&h, &f, -step)?, &p)?;
    let fd = (gp.gram() - gm.gram()) / c(2.0 * step);
    let q = quotient_metric(&h, &p)?;
    let predicted = -(q.gram() * restrict_operator(&weight_operator(&h, &f)?, &p, &h)?);
    let scale = linalg::max_abs(&predicted).max(linalg::max_abs(q.gram())).max(1.0);
    Ok((-linalg::max_abs(&(fd - predicted)) / scale, format!("dim {n} -> {}, weights {w:?}", p.target_dim())))
}

/// `(1/s) log(H_0^{-1} H_s)` does not depend on `s`.
fn log_velocity(rng: &mut ChaCha8Rng, max_dim: usize) -> Result<(f64, String)> {
    let n = rng.random_range(1..=max_dim);
    let (f, _, w) = random_flag(rng, n)?;
    let h = random_product(rng, n)?;
    let velocity = |s: f64| -> Result<CMat> {
        let hs = geodesic_ray(&h, &f, s)?;
        // whitened G_0^{-1} G_s is Hermitian positive definite
        let li = linalg::lower_inverse(h.chol());
        let m = linalg::hermitize(&(&li * hs.gram() * li.adjoint()));
        Ok(linalg::herm_apply(&m, f64::ln) / c(s))
    };
    let (a, b) = (velocity(0.5)?, velocity(3.0)?);
    let scale = linalg::max_abs(&a).max(1.0);
    Ok((-linalg::max_abs(&(a - b)) / scale, format!("dim {n}, weights {w:?}")))
}

fn restriction_vs_quotient_weight(rng: &mut ChaCha8Rng, max_dim: usize) -> Result<(f64, String)> {
    let l = rng.random_range(1..=3usize);
    // keep dim Sym^l V modest
    let cap_n = (1..=max_dim).rev().find(|&n| sym_dim(n, l).is_some_and(|d| d <= 28)).unwrap_or(1);
    let n = rng.random_range(1..=cap_n);
    let (f, _, w) = random_flag(rng, n)?;
    let h = random_product(rng, n)?;
    // Sym^l spreads the ray by exp(s·l·range); s < 1 keeps it inside the PD ratio
    let s = rng.random_range(0.0..1.0);
    let hs = geodesic_ray(&h, &f, s)?;
    let sym_h = sym_metric(&hs, l)?;
    let dim = sym_h.dim();
    let m = rng.random_range(1..=dim);
    let q = LinearSurjection::new(linalg::complex_gaussian(rng, m, dim))?;
    let lhs = restrict_operator(&sym_operator(&weight_operator(&hs, &f)?, l, &hs)?, &q, &sym_h)?;
    let hq = quotient_metric(&sym_h, &q)?;
    let rhs = weight_operator(&hq, &quotient_filtration(&sym_filtration(&f, l)?, &q)?)?;
    Ok((loewner_gap(&hq, &lhs, &rhs), format!("dim {n}, l {l}, quotient dim {m}, s {s:.4}, weights {w:?}")))
}

fn ky_fan(rng: &mut ChaCha8Rng, max_dim: usize) -> Result<(f64, String)> {
    let n = rng.random_range(1..=max_dim);
    let h = random_product(rng, n)?;
    let a = h.unwhiten(&linalg::random_hermitian(rng, n));
    let b = h.unwhiten(&linalg::random_hermitian(rng, n));
    let lam = rng.random_range(-3.0..3.0);
    let (na, nb) = (trace_abs_norm(&a, &h), trace_abs_norm(&b, &h));
    let scale = (na + nb).max(1.0);
    let triangle = na + nb - trace_abs_norm(&(&a + &b), &h);
    let homog = -(trace_abs_norm(&(&a * c(lam)), &h) - lam.abs() * na).abs();
    Ok((triangle.min(homog) / scale, format!("dim {n}, lambda {lam:.4}")))
}
