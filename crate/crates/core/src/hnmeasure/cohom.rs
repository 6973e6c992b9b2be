use crate::error::{LabError, Result};
use crate::multiindex::{factorial, Monomials};
use crate::tol;

use super::measure::{abs_moment, moment, DiscreteMeasure, SimplexPushforwardMeasure, SlopeMeasure, SlopeVector};

/// Slopes of `Sym^k(⊕ O(a_i)) = ⊕_{|α|=k} O(α·a)`.
pub fn split_sym_slopes(degrees: &[i64], k: usize) -> Result<SlopeVector> {
    if degrees.is_empty() || k == 0 {
        return Err(LabError::Invalid("need r >= 1 degrees and k >= 1".into()));
    }
    let mons = Monomials::with_cap(degrees.len(), k, tol::SYM_DIM_CAP)?;
    SlopeVector::new((0..mons.len()).map(|i| mons.idot(i, degrees) as f64).collect())
}

/// `η_k = (1/N_k) Σ δ[μ_i^k / k]`.
pub fn eta_k(slopes: &SlopeVector, k: usize) -> DiscreteMeasure {
    let n = slopes.len() as f64;
    let mut atoms: Vec<(f64, f64)> = Vec::new();
    for &m in slopes.as_slice() {
        match atoms.last_mut() {
            Some(last) if last.0 == m => last.1 += 1.0,
            _ => atoms.push((m, 1.0)),
        }
    }
    DiscreteMeasure::new(atoms.into_iter().map(|(m, c)| (m / k as f64, c / n)).collect()).expect("normalized atoms")
}

/// `η^HN = φ_* dλ` with `φ(x) = Σ x_i a_i` on the simplex (slopes equal degrees since `∫ω_B = 1`).
pub fn eta_limit(degrees: &[i64]) -> Result<SimplexPushforwardMeasure> {
    if degrees.is_empty() {
        return Err(LabError::Invalid("need at least one degree".into()));
    }
    Ok(SimplexPushforwardMeasure::new(SlopeVector::new(degrees.iter().map(|&a| a as f64).collect())?))
}

/// `(n+1) ∫ |x - t| dη^HN`, `n + 1 = r`.
pub fn rhs_main_theorem(degrees: &[i64], t: f64) -> Result<f64> {
    let m: SlopeMeasure = eta_limit(degrees)?.into();
    Ok(degrees.len() as f64 * abs_moment(&m, t)?)
}

/// `(n+1) ∫_{x ≥ 0} x dη^HN = (n+1) (m_1 + ∫|x|) / 2`.
pub fn hhat0_formula(degrees: &[i64]) -> Result<f64> {
    let m: SlopeMeasure = eta_limit(degrees)?.into();
    Ok((degrees.len() as f64 * 0.5 * (moment(&m, 1)? + abs_moment(&m, 0.0)?)).max(0.0))
}

/// `(n+1) ∫_{x ≤ 0} (-x) dη^HN`.
pub fn hhat1_formula(degrees: &[i64]) -> Result<f64> {
    let m: SlopeMeasure = eta_limit(degrees)?.into();
    Ok((degrees.len() as f64 * 0.5 * (abs_moment(&m, 0.0)? - moment(&m, 1)?)).max(0.0))
}

/// `h^0(P¹, O(d))`
pub fn h0_p1(d: i64) -> i64 {
    (d + 1).max(0)
}

/// `h^1(P¹, O(d))`
pub fn h1_p1(d: i64) -> i64 {
    (-d - 1).max(0)
}

/// `r!/k^r · dim H^q(X, O(k))` for `k = 1..=k_max`, by summing `h^q(P¹, O(α·a))`.
pub fn hhat_exact(degrees: &[i64], q: u8, k_max: usize) -> Result<Vec<f64>> {
    if q > 1 {
        return Err(LabError::Invalid("only q = 0, 1 occur over P^1".into()));
    }
    let r = degrees.len();
    let rf = factorial(r as u32);
    (1..=k_max)
        .map(|k| {
            let mons = Monomials::with_cap(r, k, tol::SYM_DIM_CAP)?;
            let count: i64 = (0..mons.len())
                .map(|i| {
                    let d = mons.idot(i, degrees);
                    if q == 0 { h0_p1(d) } else { h1_p1(d) }
                })
                .sum();
            Ok(rf / (k as f64).powi(r as i32) * count as f64)
        })
        .collect()
}
