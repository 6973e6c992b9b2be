use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::flagcore::{self, Filtration, HermitianProduct, LinearSurjection};
use crate::linalg::{self, c, CMat};
use crate::multiindex::{self, ln_factorial, Monomials};
use crate::quadrature;
use crate::tol;

use super::form::log_sum_exp;
use super::model::{rho_derivatives, BasePt, RadialGrid, SplitModel};

pub type LogDiag = Arc<dyn Fn(&BasePt) -> Vec<f64> + Send + Sync>;
pub type GramFn = Arc<dyn Fn(&BasePt) -> CMat + Send + Sync>;

/// How a metric on `E_k` varies over the base.
#[derive(Clone)]
pub enum FieldKind {
    /// Torus-invariant: `log ⟨e_α, e_α⟩` per monomial, off-diagonal entries zero.
    Diagonal(LogDiag),
    /// General Gram matrix in the monomial frame.
    Dense(GramFn),
}

/// A Hermitian metric on `E_k = ⊕_{|α|=k} O(α·a)` in the monomial frame over the standard chart.
#[derive(Clone)]
pub struct BundleMetricField {
    pub k: usize,
    pub degrees: Arc<[i64]>,
    pub mons: Arc<Monomials>,
    pub kind: FieldKind,
}

impl std::fmt::Debug for BundleMetricField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BundleMetricField")
            .field("k", &self.k)
            .field("degrees", &self.degrees)
            .field("diagonal", &self.is_diagonal())
            .finish()
    }
}

pub(crate) fn monomials(r: usize, k: usize) -> Result<Monomials> {
    if k == 0 {
        return Err(LabError::Invalid("direct image index must be >= 1".into()));
    }
    Monomials::with_cap(r, k, tol::NK_CAP)
}

impl BundleMetricField {
    pub fn diagonal(degrees: &[i64], k: usize, f: LogDiag) -> Result<Self> {
        Ok(Self { k, degrees: degrees.into(), mons: Arc::new(monomials(degrees.len(), k)?), kind: FieldKind::Diagonal(f) })
    }

    pub fn dense(degrees: &[i64], k: usize, f: GramFn) -> Result<Self> {
        Ok(Self { k, degrees: degrees.into(), mons: Arc::new(monomials(degrees.len(), k)?), kind: FieldKind::Dense(f) })
    }

    pub fn rank(&self) -> usize {
        self.mons.len()
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.kind, FieldKind::Diagonal(_))
    }

    /// Degrees `α·a` of the summands, i.e. the HN slopes of `E_k` in frame order.
    pub fn hn_weights(&self) -> Vec<f64> {
        (0..self.mons.len()).map(|i| self.mons.idot(i, &self.degrees) as f64).collect()
    }

    /// `ℱ^HN` of `E_k`: coordinate subspaces spanned by summands of degree `≥ λ`.
    pub fn hn_filtration(&self) -> Result<Filtration> {
        Filtration::coordinate(&self.hn_weights())
    }

    pub fn gram(&self, pt: &BasePt) -> CMat {
        match &self.kind {
            FieldKind::Diagonal(f) => linalg::real_diag(&f(pt).iter().map(|x| x.exp()).collect::<Vec<_>>()),
            FieldKind::Dense(f) => f(pt),
        }
    }

    /// `log` of the diagonal entries when the field is torus-invariant.
    pub fn log_diag(&self, pt: &BasePt) -> Option<Vec<f64>> {
        match &self.kind {
            FieldKind::Diagonal(f) => Some(f(pt)),
            FieldKind::Dense(_) => None,
        }
    }

    pub fn at(&self, pt: &BasePt) -> Result<HermitianProduct> {
        HermitianProduct::new(linalg::hermitize(&self.gram(pt)))
    }

    /// The value at `pt` in the rescaled frame `w = D v`, `D = diag(√G_ii)`, together with `D`.
    /// Coordinate flags are preserved and `H`-relative norms are unchanged; operators become
    /// `D K D⁻¹`. Dense values near the poles span many orders of magnitude on the diagonal.
    pub fn equilibrated(&self, pt: &BasePt) -> Result<(Vec<f64>, HermitianProduct)> {
        let g = linalg::hermitize(&self.gram(pt));
        equilibrate(&g)
    }

    pub fn values(&self, grid: &RadialGrid) -> Result<Vec<HermitianProduct>> {
        grid.base_points().map(|p| self.at(&p)).collect()
    }

    /// Same metric viewed as a dense field.
    pub fn to_dense(&self) -> Self {
        let me = self.clone();
        Self { kind: FieldKind::Dense(Arc::new(move |p: &BasePt| me.gram(p))), ..self.clone() }
    }
}

fn equilibrate(g: &CMat) -> Result<(Vec<f64>, HermitianProduct)> {
    let d: Vec<f64> = (0..g.nrows()).map(|i| g[(i, i)].re.max(f64::MIN_POSITIVE).sqrt()).collect();
    let gh = CMat::from_fn(g.nrows(), g.ncols(), |i, j| g[(i, j)] / c(d[i] * d[j]));
    Ok((d, HermitianProduct::from_computed(gh)?))
}

/// `D K D⁻¹`.
fn conj_diag(k: &CMat, d: &[f64]) -> CMat {
    CMat::from_fn(k.nrows(), k.ncols(), |i, j| k[(i, j)] * c(d[i] / d[j]))
}

/// The direct-sum metric `⊕ FS^{a_i}` on `E` itself: `|e_i|² = (1 - u)^{a_i}`.
pub fn reference_field(model: &SplitModel) -> Result<BundleMetricField> {
    let a: Vec<f64> = model.degrees.iter().map(|&d| d as f64).collect();
    BundleMetricField::diagonal(&model.degrees, 1, Arc::new(move |p: &BasePt| a.iter().map(|&d| d * p.v.ln()).collect()))
}

/// `|e_α|² = α! n!/(k+n)! · (1 - u)^{α·a}`: the `L²` metric of the reference form, exactly critical.
pub fn critical_metric(model: &SplitModel, k: usize) -> Result<BundleMetricField> {
    let mons = monomials(model.r(), k)?;
    let n = model.n() as u32;
    let consts: Vec<(f64, f64)> = (0..mons.len())
        .map(|i| {
            let lf: f64 = mons.list[i].iter().map(|&a| ln_factorial(a)).sum();
            (lf + ln_factorial(n) - ln_factorial(k as u32 + n), mons.idot(i, &model.degrees) as f64)
        })
        .collect();
    BundleMetricField::diagonal(&model.degrees, k, Arc::new(move |p: &BasePt| consts.iter().map(|&(c0, d)| c0 + d * p.v.ln()).collect()))
}

/// Multiplies one summand of a diagonal field by `exp(ε f(u))`.
pub fn conformal_perturbation(
    h: &BundleMetricField,
    index: usize,
    eps: f64,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
) -> Result<BundleMetricField> {
    let FieldKind::Diagonal(base) = &h.kind else {
        return Err(LabError::Invalid("conformal perturbation needs a diagonal field".into()));
    };
    if index >= h.rank() {
        return Err(LabError::DimensionMismatch { expected: h.rank(), got: index });
    }
    let base = base.clone();
    Ok(BundleMetricField {
        kind: FieldKind::Diagonal(Arc::new(move |p: &BasePt| {
            let mut l = base(p);
            l[index] += eps * f(p.u);
            l
        })),
        ..h.clone()
    })
}

/// Pointwise geodesic ray with the HN filtration and its slope weights.
pub fn ray_field(h: &BundleMetricField, s: f64) -> Result<BundleMetricField> {
    if s == 0.0 {
        return Ok(h.clone());
    }
    let w = h.hn_weights();
    let kind = match &h.kind {
        FieldKind::Diagonal(f) => {
            let f = f.clone();
            FieldKind::Diagonal(Arc::new(move |p: &BasePt| f(p).iter().zip(&w).map(|(l, d)| l - s * d).collect()))
        }
        FieldKind::Dense(f) => {
            let f = f.clone();
            let filt = h.hn_filtration()?;
            // coordinate flag: the ray commutes with the diagonal rescaling
            FieldKind::Dense(Arc::new(move |p: &BasePt| {
                let (d, hp) = equilibrate(&linalg::hermitize(&f(p))).expect("positive definite field");
                let gs = flagcore::geodesic_ray(&hp, &filt, s).expect("valid ray").gram().clone();
                CMat::from_fn(gs.nrows(), gs.ncols(), |i, j| gs[(i, j)] * c(d[i] * d[j]))
            }))
        }
    };
    Ok(BundleMetricField { kind, ..h.clone() })
}

/// Contracted curvature endomorphism `K = -(G^{-1} G')' / ψ''` (derivatives in `ρ`),
/// acting on coefficient columns; `K = a` for `(1-u)^a` on `O(a)`.
pub fn bundle_curvature(h: &BundleMetricField, pt: &BasePt) -> CMat {
    let step = tol::FD_STEP;
    let c0 = tol::CURVATURE_POLE_CLAMP;
    let clamped;
    let pt = if pt.u < c0 || pt.v < c0 {
        clamped = BasePt::from_u(pt.u.clamp(c0, 1.0 - c0));
        &clamped
    } else {
        pt
    };
    match &h.kind {
        FieldKind::Diagonal(f) => {
            let (_, _, d2) = rho_derivatives(&|p| f(p), pt, step);
            linalg::real_diag(&d2.iter().map(|x| -x / pt.psi2()).collect::<Vec<_>>())
        }
        FieldKind::Dense(f) => {
            let g = |p: &BasePt| f(p);
            let g0 = g(pt);
            let stencil = |h: f64| {
                let (gp, gm) = (g(&pt.shifted(h)), g(&pt.shifted(-h)));
                ((&gp - &gm) / c(2.0 * h), ((&gp - &g0) - (&g0 - &gm)) / c(h * h))
            };
            let (a1, a2) = stencil(step);
            let (b1, b2) = stencil(0.5 * step);
            let d1 = (b1 * c(4.0) - a1) / c(3.0);
            let d2 = (b2 * c(4.0) - a2) / c(3.0);
            let (d, hp) = equilibrate(&linalg::hermitize(&g0)).expect("positive definite field");
            let gh_inv = linalg::inverse(hp.gram()).expect("positive definite field");
            let gi = CMat::from_fn(gh_inv.nrows(), gh_inv.ncols(), |i, j| gh_inv[(i, j)] / c(d[i] * d[j]));
            let m1 = &gi * &d1;
            -(&gi * d2 - &m1 * &m1) / c(pt.psi2())
        }
    }
}

/// `K - t·Id` norms: (operator norm, trace norm), both relative to `H`.
fn curvature_norms(h: &BundleMetricField, pt: &BasePt, t: f64) -> (f64, f64) {
    let k = bundle_curvature(h, pt);
    let dev = k - linalg::identity(h.rank()) * c(t);
    if h.is_diagonal() {
        let d: Vec<f64> = (0..h.rank()).map(|i| dev[(i, i)].re.abs()).collect();
        return (d.iter().cloned().fold(0.0, f64::max), d.iter().sum());
    }
    let (d, hp) = h.equilibrated(pt).expect("positive definite field");
    let dev = conj_diag(&dev, &d);
    (flagcore::op_norm(&dev, &hp), flagcore::trace_abs_norm(&dev, &hp))
}

const BASE_RTOL: f64 = 1e-8;
const BASE_ATOL: f64 = 1e-10;

/// `∫_{P¹} |K - t| ω_B` in the operator-norm and trace-norm flavours.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HymValue {
    pub op: f64,
    pub trace: f64,
}

pub fn hym_functional(h: &BundleMetricField, t: f64) -> Result<HymValue> {
    let op = quadrature::adaptive_panel(&|u| curvature_norms(h, &BasePt::from_u(u), t).0, 0.0, 1.0, BASE_RTOL, BASE_ATOL)?;
    let trace = quadrature::adaptive_panel(&|u| curvature_norms(h, &BasePt::from_u(u), t).1, 0.0, 1.0, BASE_RTOL, BASE_ATOL)?;
    Ok(HymValue { op, trace })
}

/// `∫ ‖K - A(H, ℱ^HN)‖_op ω_B` and whether it is `≤ δ`.
pub fn is_delta_approx(h: &BundleMetricField, delta: f64) -> Result<(bool, f64)> {
    let res = critical_residual(h)?;
    Ok((res <= delta, res))
}

pub fn critical_residual(h: &BundleMetricField) -> Result<f64> {
    let w = h.hn_weights();
    let filt = h.hn_filtration()?;
    let integrand = |u: f64| {
        let pt = BasePt::from_u(u);
        let k = bundle_curvature(h, &pt);
        if h.is_diagonal() {
            return (0..w.len()).map(|i| (k[(i, i)].re - w[i]).abs()).fold(0.0, f64::max);
        }
        let (d, hp) = h.equilibrated(&pt).expect("positive definite field");
        let a = flagcore::weight_operator(&hp, &filt).expect("valid filtration");
        flagcore::op_norm(&(conj_diag(&k, &d) - a), &hp)
    };
    quadrature::adaptive_panel(&integrand, 0.0, 1.0, BASE_RTOL, BASE_ATOL)
}

/// `[Sym^l H]`: the quotient of `Sym^l H` through `Sym^l(Sym^k C^r) → Sym^{kl} C^r`.
pub fn mult_quotient_metric(h: &BundleMetricField, l: usize) -> Result<BundleMetricField> {
    let r = h.degrees.len();
    multiindex::check_sym_dim(h.rank(), l, tol::SYM_DIM_CAP)?;
    let target = monomials(r, h.k * l)?;
    let src = h.clone();
    let (p, _, outer, _) = multiindex::multiplication_map(r, h.k, l)?;
    if let FieldKind::Diagonal(f) = &h.kind {
        // torus-invariant: each sym-monomial lands on one target monomial, so the quotient
        // is diagonal with 1/q_β = Σ_{γ ↦ β} 1/S_γ; done in logs to survive the dynamic range
        let f = f.clone();
        let dest: Vec<usize> = (0..outer.len()).map(|j| (0..p.nrows()).find(|&i| p[(i, j)].re != 0.0).unwrap()).collect();
        let lfl = ln_factorial(l as u32);
        let n_target = target.len();
        let kind = FieldKind::Diagonal(Arc::new(move |pt: &BasePt| {
            let lg = f(pt);
            let mut terms: Vec<Vec<f64>> = vec![Vec::new(); n_target];
            for (j, gamma) in outer.list.iter().enumerate() {
                let log_s: f64 = gamma.iter().zip(&lg).map(|(&m, x)| m as f64 * x).sum::<f64>() + outer.fact(j).ln() - lfl;
                terms[dest[j]].push(-log_s);
            }
            terms.iter().map(|t| -log_sum_exp(t)).collect()
        }));
        return Ok(BundleMetricField { k: h.k * l, degrees: h.degrees.clone(), mons: Arc::new(target), kind });
    }
    let p = LinearSurjection::new(p)?;
    let kind = FieldKind::Dense(Arc::new(move |pt: &BasePt| -> CMat {
        let hp = h_dense_at(&src, pt);
        let s = flagcore::sym_metric(&hp, l).expect("within caps");
        flagcore::quotient_metric(&s, &p).expect("surjective").gram().clone()
    }));
    Ok(BundleMetricField { k: h.k * l, degrees: h.degrees.clone(), mons: Arc::new(target), kind })
}

fn h_dense_at(h: &BundleMetricField, pt: &BasePt) -> HermitianProduct {
    h.at(pt).expect("positive definite field")
}
