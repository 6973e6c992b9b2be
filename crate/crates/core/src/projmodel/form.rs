use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::linalg::{self, CMat};
use crate::multiindex::{factorial, Monomials};
use crate::quadrature;
use crate::tol;

use super::field::{self, BundleMetricField, FieldKind, LogDiag};
use super::model::{rho_derivatives, BasePt, RadialGrid, SplitModel};

/// Torus-invariant relatively Kähler form `c₁(O(1), e^{-Φ})` with
/// `Φ = (1/k) log Σ_{|α|=k} c_α(u) x^α`, `c_α = 1/g_α`, stored through `ℓ_α = log g_α`.
/// This is exactly the shape of `FS(H)^{1/k}` for a diagonal `H = diag(g_α)` on `E_k`.
#[derive(Clone)]
pub struct FiberedForm {
    pub k: usize,
    pub degrees: Arc<[i64]>,
    pub mons: Arc<Monomials>,
    log_metric: LogDiag,
    /// Collapsed Gauss–Legendre order for smooth fiber integrals.
    pub fiber_order: usize,
}

impl std::fmt::Debug for FiberedForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FiberedForm").field("k", &self.k).field("degrees", &self.degrees).finish()
    }
}

/// Per-base-point data: `ℓ'`, `ℓ''` in `ρ` and the balanced fiber chart.
pub struct FiberData {
    pub pt: BasePt,
    pub lp: Vec<f64>,
    pub lpp: Vec<f64>,
    /// `log c̃_α = log c_α - α̂·shift`
    pub logc: Vec<f64>,
    pub shift: Vec<f64>,
    /// intercept `b` of the fit, `log c_α = log c̃_α + α̂·shift + b`
    pub intercept: f64,
}

/// Value of the form's fiber quantities at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointValue {
    /// `∧_{ω_B} ω_H`
    pub trace: f64,
    /// density of `ω_V^n ∧ ω_B` against `dP ⊗ du` (fiber mass one)
    pub density: f64,
    /// smallest eigenvalue of the fiber Hessian relative to the Fubini–Study one
    pub min_eig: f64,
}

impl FiberedForm {
    pub fn new(degrees: &[i64], k: usize, log_metric: LogDiag, fiber_order: usize) -> Result<Self> {
        Ok(Self {
            k,
            degrees: degrees.into(),
            mons: Arc::new(field::monomials(degrees.len(), k)?),
            log_metric,
            fiber_order: fiber_order.max(8),
        })
    }

    pub fn n(&self) -> usize {
        self.degrees.len() - 1
    }

    pub fn log_metric(&self, pt: &BasePt) -> Vec<f64> {
        (self.log_metric)(pt)
    }

    /// `Φ(u, x)`, the potential per unit of `k` in homogeneous fiber coordinates.
    pub fn potential(&self, pt: &BasePt, x: &[f64]) -> f64 {
        let l = self.log_metric(pt);
        let terms: Vec<f64> = (0..self.mons.len()).map(|i| -l[i] + self.log_monomial(i, x)).collect();
        log_sum_exp(&terms) / self.k as f64
    }

    fn log_monomial(&self, i: usize, x: &[f64]) -> f64 {
        self.mons.list[i].iter().zip(x).map(|(&a, &xi)| if a == 0 { 0.0 } else { a as f64 * xi.ln() }).sum()
    }

    fn alpha_hat(&self, i: usize) -> impl Iterator<Item = f64> + '_ {
        self.mons.list[i][1..].iter().map(|&a| a as f64)
    }

    pub fn fiber_data(&self, pt: &BasePt) -> FiberData {
        let f = |p: &BasePt| (self.log_metric)(p);
        let (l, lp, lpp) = rho_derivatives(&f, pt, tol::FD_STEP);
        let (logc, shift, intercept) = self.balance(&l);
        FiberData { pt: *pt, lp, lpp, logc, shift, intercept }
    }

    /// Least-squares fit `log c_α ≈ α̂·s + b`; the torus element `e^{s}` recentres the fiber.
    fn balance(&self, l: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
        let n = self.n();
        let m = self.mons.len();
        if n == 0 {
            return (vec![0.0], vec![], -l[0]);
        }
        let x = DMatrix::from_fn(m, n + 1, |i, j| if j < n { self.mons.list[i][j + 1] as f64 } else { 1.0 });
        let y = DVector::from_iterator(m, l.iter().map(|v| -v));
        let xtx = x.transpose() * &x;
        let sol = xtx.cholesky().expect("monomial design has full rank").solve(&(x.transpose() * &y));
        let shift: Vec<f64> = sol.iter().take(n).copied().collect();
        let logc = (0..m)
            .map(|i| -l[i] - self.alpha_hat(i).zip(&shift).map(|(a, s)| a * s).sum::<f64>() - sol[n])
            .collect();
        (logc, shift, sol[n])
    }

    /// Horizontal trace, fiber density and positivity margin at balanced-chart coordinates `x`.
    pub fn point(&self, fd: &FiberData, x: &[f64]) -> PointValue {
        let n = self.n();
        let kf = self.k as f64;
        let m = self.mons.len();
        let logw: Vec<f64> = (0..m).map(|i| fd.logc[i] + self.log_monomial(i, x)).collect();
        let lse = log_sum_exp(&logw);
        let p: Vec<f64> = logw.iter().map(|w| (w - lse).exp()).collect();
        let e_lpp: f64 = -p.iter().zip(&fd.lpp).map(|(a, b)| a * b).sum::<f64>();
        if n == 0 {
            return PointValue { trace: e_lpp / (kf * fd.pt.psi2()), density: 1.0, min_eig: 1.0 };
        }
        let mut mean = DVector::<f64>::zeros(n);
        let mut lbar = 0.0;
        for i in 0..m {
            for (j, a) in self.alpha_hat(i).enumerate() {
                mean[j] += p[i] * a;
            }
            lbar += p[i] * fd.lp[i];
        }
        let mut cov = DMatrix::<f64>::zeros(n, n);
        let mut cross = DVector::<f64>::zeros(n);
        for i in 0..m {
            let d = DVector::from_iterator(n, self.alpha_hat(i)) - &mean;
            cov += &d * d.transpose() * p[i];
            cross += &d * (p[i] * (fd.lp[i] - lbar));
        }
        let chol = cov.clone().cholesky();
        let beta = match &chol {
            Some(ch) => ch.solve(&cross),
            None => DVector::zeros(n),
        };
        // variance of the residual of ℓ' regressed on α̂, computed directly for accuracy
        let mut var = 0.0;
        for i in 0..m {
            let d = DVector::from_iterator(n, self.alpha_hat(i)) - &mean;
            let res = fd.lp[i] - lbar - beta.dot(&d);
            var += p[i] * res * res;
        }
        let trace = (e_lpp + var) / (kf * fd.pt.psi2());
        let prod_x: f64 = x.iter().product();
        let density = cov.determinant() / (kf.powi(n as i32) * prod_x);
        // Fubini–Study fiber Hessian at x: diag(x̂) - x̂ x̂ᵀ
        let xs = DVector::from_iterator(n, x[1..].iter().copied());
        let fs = DMatrix::from_diagonal(&xs) - &xs * xs.transpose();
        let min_eig = relative_min_eig(&(cov / kf), &fs);
        PointValue { trace, density, min_eig }
    }

    /// `∫ f(Λ) ω_V^n` over the fiber at `fd`, smooth integrands only.
    pub fn fiber_mean(&self, fd: &FiberData, f: impl Fn(f64) -> f64) -> f64 {
        quadrature::simplex_rule(self.n(), self.fiber_order)
            .iter()
            .map(|(x, w)| {
                let pv = self.point(fd, x);
                w * f(pv.trace) * pv.density
            })
            .sum()
    }
}

fn relative_min_eig(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    match b.clone().cholesky() {
        Some(ch) => {
            let l = ch.l();
            let li = l.clone().try_inverse().expect("triangular");
            let m = &li * a * li.transpose();
            let m = (&m + m.transpose()) * 0.5;
            m.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
        }
        None => a.clone().symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min),
    }
}

pub fn log_sum_exp(v: &[f64]) -> f64 {
    let mx = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !mx.is_finite() {
        return mx;
    }
    mx + v.iter().map(|x| (x - mx).exp()).sum::<f64>().ln()
}

/// The `O(1)` metric induced by `⊕ FS^{a_i}` on `E`, written at power `k`:
/// `Σ_{|α|=k} (k!/α!) c^α x^α = (Σ_i c_i x_i)^k`, `c_i = (1-u)^{-a_i}`.
pub fn reference_potential(model: &SplitModel, grid: &RadialGrid, k: usize) -> Result<FiberedForm> {
    let mons = field::monomials(model.r(), k)?;
    let kf = factorial(k as u32).ln();
    let consts: Vec<(f64, f64)> = (0..mons.len())
        .map(|i| (mons.fact(i).ln() - kf, mons.idot(i, &model.degrees) as f64))
        .collect();
    FiberedForm::new(
        &model.degrees,
        k,
        Arc::new(move |p: &BasePt| consts.iter().map(|&(c0, d)| c0 + d * p.v.ln()).collect()),
        grid.spec.fiber_nodes,
    )
}

/// `FS(H)` for a torus-invariant `H`: `e^{-φ} = 1/Σ |σ_j|²` over an `H`-orthonormal basis.
pub fn fs_potential(h: &BundleMetricField, fiber_order: usize) -> Result<FiberedForm> {
    match &h.kind {
        FieldKind::Diagonal(f) => FiberedForm::new(&h.degrees, h.k, f.clone(), fiber_order),
        FieldKind::Dense(_) => Err(LabError::Invalid("FS potential of a non-invariant metric is not torus-invariant".into())),
    }
}

/// `Σ_α |σ_α|²_{FS(H)} - 1` at every node of the grid (the defining identity).
pub fn fs_identity_residual(h: &BundleMetricField, form: &FiberedForm, grid: &RadialGrid) -> Result<f64> {
    let mut worst = 0.0f64;
    for pt in grid.base_points() {
        let g = h.gram(&pt);
        let gi = linalg::inverse(&g)?;
        for (x, _) in &grid.fiber {
            let e_phi = (-(form.k as f64) * form.potential(&pt, x)).exp();
            // |Σ v_α w^α|² summed over an orthonormal basis is m^T G^{-1} m̄ with m_α = √(x^α)
            let m: Vec<f64> = (0..form.mons.len()).map(|i| (0.5 * form.log_monomial(i, x)).exp()).collect();
            let mut s = 0.0;
            for i in 0..m.len() {
                for j in 0..m.len() {
                    s += (gi[(i, j)] * m[i] * m[j]).re;
                }
            }
            worst = worst.max((s * e_phi - 1.0).abs());
        }
    }
    Ok(worst)
}

/// `Hilb_K(h)`: `‖w^β‖² = ∫ x^β e^{-KΦ} ω_V^n` with fiber volume of mass one, diagonal by invariance.
/// The fiber rule is checked against its refinement at three base points.
pub fn hilb_metric(form: &FiberedForm, kk: usize) -> Result<BundleMetricField> {
    let order = form.fiber_order.max(kk + form.n() + 4);
    for u in [0.1, 0.5, 0.9] {
        let pt = BasePt::from_u(u);
        let a = hilb_at(form, kk, &pt, order)?;
        let b = hilb_at(form, kk, &pt, 2 * order)?;
        let worst = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        if worst > tol::HILB_REFINE.ln_1p() {
            return Err(LabError::Quadrature(format!("Hilb fiber rule not converged at u={u}: log change {worst:.3e}")));
        }
    }
    let f = form.clone();
    BundleMetricField::diagonal(&form.degrees, kk, Arc::new(move |p: &BasePt| hilb_at(&f, kk, p, order).expect("checked rule")))
}

/// `log ‖w^β‖²` for all `|β| = K` at one base point.
pub fn hilb_at(form: &FiberedForm, kk: usize, pt: &BasePt, order: usize) -> Result<Vec<f64>> {
    let target = field::monomials(form.degrees.len(), kk)?;
    let l = form.log_metric(pt);
    let (logc, shift, intercept) = form.balance(&l);
    let fd = FiberData { pt: *pt, lp: vec![0.0; l.len()], lpp: vec![0.0; l.len()], logc, shift, intercept };
    let ratio = kk as f64 / form.k as f64;
    let rule = quadrature::simplex_rule(form.n(), order);
    let mut acc = vec![0.0; target.len()];
    for (x, w) in &rule {
        let logw: Vec<f64> = (0..form.mons.len()).map(|i| fd.logc[i] + form.log_monomial(i, x)).collect();
        let base = -ratio * log_sum_exp(&logw);
        let dens = form.point(&fd, x).density;
        for (b, beta) in target.list.iter().enumerate() {
            let lm: f64 = beta.iter().zip(x).map(|(&a, &xi)| if a == 0 { 0.0 } else { a as f64 * xi.ln() }).sum();
            acc[b] += w * dens * (base + lm).exp();
        }
    }
    Ok(target
        .list
        .iter()
        .zip(acc)
        .map(|(beta, v)| {
            if !(v > 0.0) {
                return f64::NEG_INFINITY;
            }
            v.ln() - ratio * fd.intercept - beta[1..].iter().zip(&fd.shift).map(|(&a, s)| a as f64 * s).sum::<f64>()
        })
        .collect())
}

/// Grid values of the fiber density and the horizontal trace; errors on a positivity failure.
#[derive(Clone, Debug)]
pub struct CurvatureGrid {
    /// `(u, x, density, horizontal trace)` per node
    pub nodes: Vec<(f64, Vec<f64>, f64, f64)>,
    pub min_eig: f64,
}

pub fn line_curvature(form: &FiberedForm, grid: &RadialGrid) -> Result<CurvatureGrid> {
    let per_base: Vec<Result<Vec<(f64, Vec<f64>, f64, f64, f64)>>> = grid
        .base
        .par_iter()
        .map(|&(u, _)| {
            let fd = form.fiber_data(&BasePt::from_u(u));
            grid.fiber
                .iter()
                .map(|(x, _)| {
                    let pv = form.point(&fd, x);
                    if !(pv.min_eig > tol::FIBER_POSITIVITY) {
                        return Err(LabError::Positivity { u, x: x.clone(), min_eig: pv.min_eig });
                    }
                    Ok((u, x.clone(), pv.density, pv.trace, pv.min_eig))
                })
                .collect()
        })
        .collect();
    let mut nodes = Vec::new();
    let mut min_eig = f64::INFINITY;
    for row in per_base {
        for (u, x, d, t, e) in row? {
            min_eig = min_eig.min(e);
            nodes.push((u, x, d, t));
        }
    }
    Ok(CurvatureGrid { nodes, min_eig })
}

pub fn check_positivity(form: &FiberedForm, grid: &RadialGrid) -> Result<f64> {
    line_curvature(form, grid).map(|g| g.min_eig)
}

/// `(n+1) ∫ |∧ω_H - t| ω^n ∧ ω_B` and the same integral without `|·|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WzwValue {
    pub abs: f64,
    pub signed: f64,
}

/// (rtol, atol) of the base integral and of the fiber `|·|` integral. Nested adaptivity in two
/// or more fiber dimensions gets expensive fast, so those run looser (about `1e-5` relative);
/// they only feed checks with millesimal slack, while `r = 2` values feed `1e-6` monotonicity.
fn wzw_tols(n: usize) -> ((f64, f64), (f64, f64)) {
    if n <= 1 {
        ((1e-9, 1e-11), (1e-11, 1e-13))
    } else {
        ((1e-4, 1e-6), (1e-6, 1e-8))
    }
}

pub fn wzw_functional(form: &FiberedForm, t: f64) -> Result<WzwValue> {
    let n = form.n();
    let scale = (n + 1) as f64;
    let ((brtol, batol), (frtol, fatol)) = wzw_tols(n);
    let err = std::sync::Mutex::new(None::<LabError>);
    let abs_fiber = |u: f64| {
        let fd = form.fiber_data(&BasePt::from_u(u));
        let h = |x: &[f64]| {
            let pv = form.point(&fd, x);
            (pv.trace - t) * pv.density
        };
        match quadrature::simplex_integrate_abs(n, &h, frtol, fatol) {
            Ok(v) => v,
            Err(e) => {
                err.lock().unwrap().get_or_insert(e);
                0.0
            }
        }
    };
    let abs = quadrature::adaptive_panel(&abs_fiber, 0.0, 1.0, brtol, batol)?;
    if let Some(e) = err.into_inner().unwrap() {
        return Err(e);
    }
    let signed_fiber = |u: f64| {
        let fd = form.fiber_data(&BasePt::from_u(u));
        form.fiber_mean(&fd, |tr| tr - t)
    };
    let signed = quadrature::adaptive_panel(&signed_fiber, 0.0, 1.0, 1e-9, 1e-11)?;
    Ok(WzwValue { abs: scale * abs, signed: scale * signed })
}

/// `∫ |∧ω_H - λ| ω^n ∧ ω_B (n+1)`: vanishes iff the form solves the Hermite–Einstein-type equation.
pub fn hermite_einstein_residual(form: &FiberedForm, lambda: f64) -> Result<f64> {
    Ok(wzw_functional(form, lambda)?.abs)
}

/// `c₁(O(1), FS(H_s)^{1/k})` along the ray from `h0`; positivity checked on the grid.
pub fn dequantize(grid: &RadialGrid, s: f64, h0: &BundleMetricField) -> Result<FiberedForm> {
    let form = fs_potential(&field::ray_field(h0, s)?, grid.spec.fiber_nodes)?;
    check_positivity(&form, grid)?;
    Ok(form)
}

/// `(1/(k N_k)) HYM^tr_{tk}(E_k, Hilb_k(h))` for a power-one form `h`.
pub fn hym_on_hilb(hpot: &FiberedForm, k: usize, t: f64) -> Result<f64> {
    let hk = hilb_metric(hpot, k)?;
    let v = field::hym_functional(&hk, t * k as f64)?;
    Ok(v.trace / (k as f64 * hk.rank() as f64))
}

/// Generalized eigenvalue range of `[Sym^l H]` against `Hilb_{kl}(FS(H)^{1/k})` (Riemannian fiber
/// volume `ω^n/n!`), scaled by `1/(k l^n)`, over the base nodes of the grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatioInterval {
    pub min: f64,
    pub max: f64,
}

impl RatioInterval {
    pub fn width(&self) -> f64 {
        (self.min - 1.0).abs().max((self.max - 1.0).abs())
    }

    pub fn contains_one_within(&self, slack: f64) -> bool {
        self.min - slack <= 1.0 && 1.0 <= self.max + slack
    }
}

pub fn quotient_vs_hilb_ratio(grid: &RadialGrid, h: &BundleMetricField, l: usize) -> Result<RatioInterval> {
    let n = h.degrees.len() - 1;
    let sym = field::mult_quotient_metric(h, l)?;
    let hilb = hilb_metric(&fs_potential(h, grid.spec.fiber_nodes)?, h.k * l)?;
    let scale = 1.0 / (h.k as f64 * (l as f64).powi(n as i32));
    let riem = factorial(n as u32);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for pt in grid.base_points() {
        if let (Some(lb), Some(la)) = (hilb.log_diag(&pt), sym.log_diag(&pt)) {
            for (x, y) in lb.iter().zip(&la) {
                let e = (y - x + riem.ln()).exp() * scale;
                lo = lo.min(e);
                hi = hi.max(e);
            }
            continue;
        }
        let b: CMat = hilb.gram(&pt) / linalg::c(riem);
        let a = sym.gram(&pt);
        for e in linalg::gen_eigs(&b, &a)? {
            lo = lo.min(e * scale);
            hi = hi.max(e * scale);
        }
    }
    Ok(RatioInterval { min: lo, max: hi })
}

/// `sup |Φ_k - Φ|` over the grid, `Φ_k` the potential of `FS(Hilb_k(h))^{1/k}`.
pub fn fs_hilb_roundtrip(form: &FiberedForm, grid: &RadialGrid, k: usize) -> Result<f64> {
    let back = fs_potential(&hilb_metric(form, k)?, grid.spec.fiber_nodes)?;
    let mut worst = 0.0f64;
    for pt in grid.base_points() {
        for (x, _) in &grid.fiber {
            worst = worst.max((back.potential(&pt, x) - form.potential(&pt, x)).abs());
        }
    }
    Ok(worst)
}

/// `Hilb(FS(H), η)` for a dense `H` on `Sym^k C^r` with `η` the unit-volume Fubini–Study fiber
/// measure: `M = ∫ m̄ mᵀ / (mᵀ G^{-1} m̄) dη`, `m_α = w^α` on the unit sphere.
/// Positive quadrature weights keep `G - M ≥ 0` exact (pointwise Cauchy–Schwarz).
pub fn fs_hilb_dense(g: &CMat, r: usize, k: usize, x_order: usize, theta_points: usize) -> Result<CMat> {
    let mons = field::monomials(r, k)?;
    if g.nrows() != mons.len() {
        return Err(LabError::DimensionMismatch { expected: mons.len(), got: g.nrows() });
    }
    let gi = linalg::inverse(g)?;
    let n = r - 1;
    let rule = quadrature::simplex_rule(n, x_order);
    let tp = theta_points.max(2 * k + 1);
    let dim = mons.len();
    let total_angles = tp.pow(n as u32);
    let mut out = CMat::zeros(dim, dim);
    for (x, wx) in &rule {
        for ai in 0..total_angles {
            let mut idx = ai;
            let mut w = vec![linalg::c(x[0].sqrt())];
            for &xi in x.iter().skip(1) {
                let th = 2.0 * std::f64::consts::PI * (idx % tp) as f64 / tp as f64;
                idx /= tp;
                w.push(linalg::C::from_polar(xi.sqrt(), th));
            }
            let m = crate::linalg::CVec::from_iterator(
                dim,
                mons.list.iter().map(|a| a.iter().zip(&w).map(|(&e, z)| z.powu(e)).product::<linalg::C>()),
            );
            let q = (m.transpose() * &gi * m.conjugate())[(0, 0)].re;
            let weight = wx / total_angles as f64 / q;
            out += m.conjugate() * m.transpose() * linalg::c(weight);
        }
    }
    Ok(linalg::hermitize(&out))
}

/// Smallest eigenvalue of `G - Hilb(FS(G), η)` relative to `G`, i.e. `1 - λ_max(G^{-1} M)`.
pub fn fs_hilb_gap(g: &CMat, r: usize, k: usize) -> Result<f64> {
    let m = fs_hilb_dense(g, r, k, 12, 2 * k + 3)?;
    let ev = linalg::gen_eigs(&linalg::hermitize(g), &m)?;
    Ok(1.0 - ev.last().copied().unwrap_or(0.0))
}
