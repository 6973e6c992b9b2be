use crate::error::{LabError, Result};
use crate::linalg::{self, CMat, CVec};
use crate::tol;

use super::{Filtration, HermitianProduct, LinearSurjection};

/// `H`-orthonormal basis adapted to a filtration, columns ordered by ascending weight.
#[derive(Clone, Debug)]
pub struct AdaptedBasis {
    pub basis: CMat,
    pub weights: Vec<f64>,
}

/// Gram–Schmidt from the deepest subspace outwards; inside each graded piece the
/// candidates are the given basis columns in order. Runs in the `H`-orthonormal frame `y = L† x`.
pub fn adapted_basis(h: &HermitianProduct, f: &Filtration) -> Result<AdaptedBasis> {
    let (q, weights) = whitened_adapted(h, f)?;
    let li = linalg::lower_inverse(h.chol());
    Ok(AdaptedBasis { basis: li.adjoint() * q, weights })
}

/// Unitary `Q` (whitened adapted basis, ascending weights) and the weights.
fn whitened_adapted(h: &HermitianProduct, f: &Filtration) -> Result<(CMat, Vec<f64>)> {
    if h.dim() != f.dim() {
        return Err(LabError::DimensionMismatch { expected: h.dim(), got: f.dim() });
    }
    let lt = h.chol().adjoint();
    let dims = f.dims();
    let mut found: Vec<CVec> = Vec::with_capacity(h.dim());
    let mut pieces: Vec<Vec<CVec>> = vec![Vec::new(); dims.len()];
    for i in (0..dims.len()).rev() {
        let y = &lt * &f.subspaces()[i];
        for col in y.column_iter() {
            if found.len() == dims[i] {
                break;
            }
            let v: CVec = col.into_owned();
            let scale = v.norm();
            let mut w = v.clone();
            for _ in 0..2 {
                for e in &found {
                    let proj = e.dotc(&w);
                    w -= e * proj;
                }
            }
            let nw = w.norm();
            if nw > 1e-8 * scale {
                let e = w / linalg::c(nw);
                found.push(e.clone());
                pieces[i].push(e);
            }
        }
        if found.len() != dims[i] {
            return Err(LabError::DegenerateBasis(format!("could not complete piece at jump {}", f.jumps()[i])));
        }
    }
    let mut cols = Vec::with_capacity(h.dim());
    let mut weights = Vec::with_capacity(h.dim());
    for (i, piece) in pieces.into_iter().enumerate() {
        for v in piece {
            cols.push(v);
            weights.push(f.jumps()[i]);
        }
    }
    Ok((CMat::from_columns(&cols), weights))
}

/// `A(H, F)`: eigenvalue `λ_i` on the `i`-th adapted vector.
pub fn weight_operator(h: &HermitianProduct, f: &Filtration) -> Result<CMat> {
    let (q, w) = whitened_adapted(h, f)?;
    Ok(h.unwhiten(&linalg::hermitize(&(&q * linalg::real_diag(&w) * q.adjoint()))))
}

/// The product making `e_i exp(sλ_i/2)` orthonormal, i.e. Gram `G exp(-s A) = L Q e^{-sΛ} Q† L†`.
pub fn geodesic_ray(h: &HermitianProduct, f: &Filtration, s: f64) -> Result<HermitianProduct> {
    if !s.is_finite() {
        return Err(LabError::Invalid("ray parameter must be finite".into()));
    }
    if s == 0.0 {
        return Ok(h.clone());
    }
    let (q, w) = whitened_adapted(h, f)?;
    let d: Vec<f64> = w.iter().map(|&x| (-s * x).exp()).collect();
    let inner = linalg::hermitize(&(&q * linalg::real_diag(&d) * q.adjoint()));
    HermitianProduct::from_computed(h.chol() * inner * h.chol().adjoint())
}

/// Geodesic `L0 W^s L0†`, `W = L0^{-1} G1 L0^{-†}`; endpoints returned verbatim.
pub fn geodesic_segment(h0: &HermitianProduct, h1: &HermitianProduct, s: f64) -> Result<HermitianProduct> {
    if h0.dim() != h1.dim() {
        return Err(LabError::DimensionMismatch { expected: h0.dim(), got: h1.dim() });
    }
    if s == 0.0 {
        return Ok(h0.clone());
    }
    if s == 1.0 {
        return Ok(h1.clone());
    }
    let l = h0.chol();
    let li = linalg::lower_inverse(l);
    let w = &li * h1.gram() * li.adjoint();
    let ws = linalg::herm_apply(&w, |x| x.powf(s));
    HermitianProduct::from_computed(l * ws * l.adjoint())
}

/// `w_F(v) = sup{λ : v ∈ F_λ}`; `+∞` for `v = 0`.
pub fn na_weight(f: &Filtration, v: &CVec) -> f64 {
    if v.norm() == 0.0 {
        return f64::INFINITY;
    }
    for i in (0..f.jumps().len()).rev() {
        let q = linalg::orth(&f.subspaces()[i]);
        if linalg::span_residual(&q, v) < tol::MEMBERSHIP {
            return f.jumps()[i];
        }
    }
    f.jumps()[0]
}

/// Quotient norm `inf{‖g‖ : p g = f}`; Gram `(p G^{-1} p†)^{-1}`.
pub fn quotient_metric(h: &HermitianProduct, p: &LinearSurjection) -> Result<HermitianProduct> {
    let (u, sv, _) = whitened_map(h, p)?;
    let d: Vec<f64> = sv.iter().map(|x| x.powi(-2)).collect();
    HermitianProduct::from_computed(&u * linalg::real_diag(&d) * u.adjoint())
}

/// SVD of `M = p L^{-†}`, so that `p G^{-1} p† = M M†`.
fn whitened_map(h: &HermitianProduct, p: &LinearSurjection) -> Result<(CMat, Vec<f64>, CMat)> {
    check_source(h, p)?;
    let m = p.matrix() * linalg::lower_inverse(h.chol()).adjoint();
    Ok(linalg::svd_thin(&m))
}

/// Image filtration `p(F_λ)`, keeping only levels where the image dimension drops.
pub fn quotient_filtration(f: &Filtration, p: &LinearSurjection) -> Result<Filtration> {
    if p.source_dim() != f.dim() {
        return Err(LabError::DimensionMismatch { expected: f.dim(), got: p.source_dim() });
    }
    let images: Vec<CMat> = f.subspaces().iter().map(|s| linalg::orth(&(p.matrix() * s))).collect();
    let mut jumps = Vec::new();
    let mut subs = Vec::new();
    for i in 0..images.len() {
        let next = images.get(i + 1).map(|m| m.ncols()).unwrap_or(0);
        if images[i].ncols() > next {
            jumps.push(f.jumps()[i]);
            subs.push(images[i].clone());
        }
    }
    Filtration::new(jumps, subs)
}

/// `A|_Q = p A p*` with the `H`-adjoint section `p* = G^{-1} p† G_Q`. With `M = p L^{-†} = U Σ W†`
/// this is `U Σ (W† Â W) Σ^{-1} U†`, `Â` the whitened `A`.
pub fn restrict_operator(a: &CMat, p: &LinearSurjection, h: &HermitianProduct) -> Result<CMat> {
    let (u, sv, w) = whitened_map(h, p)?;
    let inner = linalg::hermitize(&(w.adjoint() * h.whiten(a) * &w));
    let inv: Vec<f64> = sv.iter().map(|x| 1.0 / x).collect();
    Ok(&u * linalg::real_diag(&sv) * inner * linalg::real_diag(&inv) * u.adjoint())
}

/// `tr |A|` in an `H`-orthonormal basis (sum of singular values).
pub fn trace_abs_norm(a: &CMat, h: &HermitianProduct) -> f64 {
    linalg::singular_values(&h.whiten(a)).iter().sum()
}

/// Operator norm of `A` relative to `H`.
pub fn op_norm(a: &CMat, h: &HermitianProduct) -> f64 {
    linalg::singular_values(&h.whiten(a)).first().copied().unwrap_or(0.0)
}

/// `F1` dominates `F2` (`χ_{F1} ≥ χ_{F2}`, i.e. `w_{F1} ≤ w_{F2}`): `F1_λ ⊆ F2_λ` at every jump of `F1`.
pub fn dominates(f1: &Filtration, f2: &Filtration) -> bool {
    if f1.dim() != f2.dim() {
        return false;
    }
    f1.jumps()
        .iter()
        .zip(f1.subspaces())
        .all(|(&lam, s)| {
            let t = f2.subspace_at(lam);
            t.ncols() >= s.ncols() && t.ncols() > 0 && linalg::contains(&t, s)
        })
}

/// Smallest eigenvalue of `B - A` as `H`-self-adjoint operators; `A ≤_H B` iff it is `≥ 0`.
pub fn loewner_gap(h: &HermitianProduct, a: &CMat, b: &CMat) -> f64 {
    linalg::eigvalsh(&linalg::hermitize(&h.whiten(&(b - a))))[0]
}

fn check_source(h: &HermitianProduct, p: &LinearSurjection) -> Result<()> {
    if p.source_dim() != h.dim() {
        return Err(LabError::DimensionMismatch { expected: h.dim(), got: p.source_dim() });
    }
    Ok(())
}
