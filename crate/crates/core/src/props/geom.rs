use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::flagcore::{
    self, dominates, loewner_gap, quotient_filtration, quotient_metric, restrict_operator, sym_filtration, sym_metric,
    sym_operator, weight_operator, Filtration, HermitianProduct, LinearSurjection,
};
use crate::hnmeasure::rhs_main_theorem;
use crate::linalg::{self, c, CMat};
use crate::multiindex;
use crate::projmodel::{
    bundle_curvature, conformal_perturbation, critical_metric, critical_residual, dequantize, fs_hilb_gap, model_new,
    ray_field, reference_potential, wzw_functional, BasePt, BundleMetricField, FiberedForm, FieldKind, GridSpec,
    RadialGrid,
};
use crate::tol;

use super::{collect_suite, run_suite, SuiteResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeomConfig {
    pub seed: u64,
    pub hilb_fs_instances: usize,
    pub offdiag_instances: usize,
    pub submult_instances: usize,
    /// Base nodes at which pointwise properties are checked.
    pub base_nodes: usize,
    pub grid: GridSpec,
}

impl Default for GeomConfig {
    fn default() -> Self {
        Self {
            seed: tol::DEFAULT_SEED,
            hilb_fs_instances: 24,
            offdiag_instances: 12,
            submult_instances: 8,
            base_nodes: 8,
            grid: GridSpec { base_nodes: 16, fiber_nodes: 16 },
        }
    }
}

/// `(k, l)` pairs of the submultiplicativity check.
const SUBMULT_PAIRS: [(usize, usize); 3] = [(1, 2), (1, 3), (2, 2)];

/// Randomized geometry suites, replayable from an instance seed.
pub const GEOM_INSTANCE_SUITES: [&str; 5] = [
    "hilb_fs_domination",
    "offdiag_curvature_scaling",
    "submultiplicative_domination_k1_l2",
    "submultiplicative_domination_k1_l3",
    "submultiplicative_domination_k2_l2",
];

pub(crate) fn run_geom_instance(name: &str, seed: u64, base_nodes: usize) -> Result<(f64, String)> {
    match name {
        "hilb_fs_domination" => hilb_fs_instance(seed, base_nodes),
        "offdiag_curvature_scaling" => offdiag_instance(seed, base_nodes),
        _ => {
            let (k, l) = SUBMULT_PAIRS
                .iter()
                .copied()
                .find(|(k, l)| name == format!("submultiplicative_domination_k{k}_l{l}"))
                .ok_or_else(|| crate::LabError::Invalid(format!("unknown suite {name}")))?;
            submult_instance(seed, k, l, base_nodes)
        }
    }
}

pub fn geometry_suites(cfg: &GeomConfig) -> Result<Vec<SuiteResult>> {
    let mut out = vec![run_suite("hilb_fs_domination", cfg.seed, cfg.hilb_fs_instances, tol::HILB_FS_FLOOR, |s| {
        hilb_fs_instance(s, cfg.base_nodes)
    })];
    let cases = ray_bound_cases(cfg)?;
    out.push(collect_suite(
        "ray_residual_bound",
        cfg.seed,
        0.0,
        cases.iter().map(|c| (0, c.bound - c.residual, c.label.clone())).collect(),
    ));
    out.push(run_suite("offdiag_curvature_scaling", cfg.seed, cfg.offdiag_instances, tol::OFFDIAG_SCALING, |s| {
        offdiag_instance(s, cfg.base_nodes)
    }));
    for (k, l) in SUBMULT_PAIRS {
        let name = format!("submultiplicative_domination_k{k}_l{l}");
        out.push(run_suite(&name, cfg.seed, cfg.submult_instances, tol::LOEWNER, |s| submult_instance(s, k, l, cfg.base_nodes)));
    }
    let forms = sampled_forms(cfg.grid)?;
    let tagged = |f: &SampledForm| format!("{} t={}", f.label, f.t);
    out.push(collect_suite(
        "topological_conservation",
        cfg.seed,
        tol::CONSERVATION,
        forms.iter().map(|f| (0, -(f.signed - f.signed_expected).abs(), tagged(f))).collect(),
    ));
    out.push(collect_suite(
        "wzw_lower_bound",
        cfg.seed,
        tol::LOWER_BOUND_SLACK,
        forms.iter().map(|f| (0, f.wzw - f.rhs, tagged(f))).collect(),
    ));
    Ok(out)
}

fn random_degrees(rng: &mut ChaCha8Rng, r: usize) -> Vec<i64> {
    (0..r).map(|_| rng.random_range(-2..=2)).collect()
}

fn check_nodes(count: usize) -> Vec<BasePt> {
    crate::quadrature::gl_interval(count, 0.0, 1.0).into_iter().map(|(u, _)| BasePt::from_u(u)).collect()
}

/// `S(u) P(u) S(u)` with `S` the square root of the critical metric and `P(u) = v P0 + u P1`:
/// a dense (or, for diagonal `P_i`, torus-invariant) metric with the right growth at both poles.
fn twisted_critical(degrees: &[i64], k: usize, p0: CMat, p1: CMat) -> Result<BundleMetricField> {
    let (model, _) = model_new(degrees, GridSpec { base_nodes: 8, fiber_nodes: 8 })?;
    let crit = critical_metric(&model, k)?;
    let FieldKind::Diagonal(logs) = crit.kind.clone() else { unreachable!("critical metric is diagonal") };
    BundleMetricField::dense(
        degrees,
        k,
        Arc::new(move |pt: &BasePt| {
            let s: Vec<f64> = logs(pt).iter().map(|l| (0.5 * l).exp()).collect();
            CMat::from_fn(p0.nrows(), p0.ncols(), |i, j| (p0[(i, j)] * c(pt.v) + p1[(i, j)] * c(pt.u)) * c(s[i] * s[j]))
        }),
    )
}

/// The Gram of `h` at `pt` in the frame `v^{-α·a/2} e_α`, orthonormal for the reference metric
/// `⊕ FS^{a_i}` up to the multinomial constants. In this frame the unit fiber volume of the
/// reference form is the uniform measure on the moment simplex, which is what `fs_hilb_gap`
/// integrates against; it also removes the `v^{α·a}` spread near the poles. Torus rescalings
/// commute with the multiplication maps and fix coordinate flags, so weight comparisons read
/// the same in either frame.
fn torus_frame(h: &BundleMetricField, pt: &BasePt) -> CMat {
    let g = h.gram(pt);
    let lt: Vec<f64> = (0..h.rank()).map(|i| 0.5 * h.mons.idot(i, &h.degrees) as f64 * pt.v.ln()).collect();
    linalg::hermitize(&CMat::from_fn(g.nrows(), g.ncols(), |i, j| g[(i, j)] * c((-lt[i] - lt[j]).exp())))
}

/// `G ≥ Hilb(FS(G), η)` at every check node for a random metric at level `k ≤ 3`.
pub fn hilb_fs_instance(seed: u64, base_nodes: usize) -> Result<(f64, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = rng.random_range(2..=3usize);
    let k = rng.random_range(1..=3usize);
    let degrees = random_degrees(&mut rng, r);
    let dim = multiindex::sym_dim(r, k).unwrap();
    let dense = rng.random_bool(0.5);
    let mut draw = || {
        if dense {
            linalg::random_pd(&mut rng, dim, 1.0)
        } else {
            linalg::real_diag(&(0..dim).map(|_| rng.random_range(-1.0f64..1.0).exp()).collect::<Vec<_>>())
        }
    };
    let (p0, p1) = (draw(), draw());
    let h = twisted_critical(&degrees, k, p0, p1)?;
    let mut worst = f64::INFINITY;
    for pt in check_nodes(base_nodes) {
        worst = worst.min(fs_hilb_gap(&torus_frame(&h, &pt), r, k)?);
    }
    Ok((worst, format!("degrees {degrees:?}, k {k}, {}", if dense { "dense" } else { "diagonal" })))
}

/// An `r = 2` metric with off-diagonal coupling `ε u v` relative to the diagonal.
pub fn coupled_metric(a: [i64; 2], eps: f64) -> Result<BundleMetricField> {
    let (a0, a1) = (a[0] as f64, a[1] as f64);
    BundleMetricField::dense(
        &a,
        1,
        Arc::new(move |p: &BasePt| {
            let (g0, g1) = ((a0 * p.v.ln()).exp(), (a1 * p.v.ln()).exp());
            let off = eps * p.u * p.v * (g0 * g1).sqrt();
            CMat::from_row_slice(2, 2, &[c(g0), c(off), c(off), c(g1)])
        }),
    )
}

/// Curvature along the ray in the frame adapted at `s = 0`: the entry coupling weights
/// `λ_i < λ_j` scales as `exp(-s(λ_j - λ_i))`, the opposite entry is constant.
pub fn offdiag_instance(seed: u64, base_nodes: usize) -> Result<(f64, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = rng.random_range(-2..=1i64);
    let hi = rng.random_range(lo + 1..=2);
    let eps = rng.random_range(0.1..0.6);
    let h = coupled_metric([hi, lo], eps)?;
    let filt = h.hn_filtration()?;
    let gap = (hi - lo) as f64;
    let mut worst = 0.0f64;
    for pt in check_nodes(base_nodes) {
        let ab = flagcore::adapted_basis(&h.at(&pt)?, &filt)?;
        let fi = linalg::inverse(&ab.basis)?;
        let frame = |k: CMat| &fi * k * &ab.basis;
        let m0 = frame(bundle_curvature(&h, &pt));
        for s in [1.0, 2.0, 4.0] {
            let m = frame(bundle_curvature(&ray_field(&h, s)?, &pt));
            worst = worst.max((m[(0, 1)] - m0[(0, 1)] * c((-s * gap).exp())).norm());
            worst = worst.max((m[(1, 0)] - m0[(1, 0)]).norm());
        }
    }
    Ok((-worst, format!("degrees ({hi}, {lo}), eps {eps:.4}")))
}

/// Filtration domination `[Sym^l F_k] = F_kl` (both directions) and, at every check node,
/// `Sym^l A(H_s, F_k)|_{E_kl} ≤ A([Sym^l H_s], F_kl)` for a random dense `H`.
pub fn submult_instance(seed: u64, k: usize, l: usize, base_nodes: usize) -> Result<(f64, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = rng.random_range(2..=3usize);
    let degrees = random_degrees(&mut rng, r);
    let dim = multiindex::sym_dim(r, k).unwrap();
    let p0 = linalg::random_pd(&mut rng, dim, 0.7);
    let p1 = linalg::random_pd(&mut rng, dim, 0.7);
    let h = twisted_critical(&degrees, k, p0, p1)?;
    // the ray spreads E_kl by exp(s·kl·range); s < 1 keeps it inside the PD ratio
    let s = rng.random_range(0.0..1.0);
    let fk = h.hn_filtration()?;
    let (p, _, _, target) = multiindex::multiplication_map(r, k, l)?;
    let p = LinearSurjection::new(p)?;
    let fkl = Filtration::coordinate(&(0..target.len()).map(|i| target.idot(i, &degrees) as f64).collect::<Vec<_>>())?;
    let fq = quotient_filtration(&sym_filtration(&fk, l)?, &p)?;
    let detail = format!("degrees {degrees:?}, k {k}, l {l}, s {s:.4}");
    if !(dominates(&fkl, &fq) && dominates(&fq, &fkl)) {
        return Ok((-1.0, format!("{detail}: filtrations differ")));
    }
    let ray = ray_field(&h, s)?;
    let mut worst = f64::INFINITY;
    for pt in check_nodes(base_nodes) {
        let hs = HermitianProduct::from_computed(torus_frame(&ray, &pt))?;
        let sym_h = sym_metric(&hs, l)?;
        let lhs = restrict_operator(&sym_operator(&weight_operator(&hs, &fk)?, l, &hs)?, &p, &sym_h)?;
        let hq = quotient_metric(&sym_h, &p)?;
        let rhs = weight_operator(&hq, &fkl)?;
        worst = worst.min(loewner_gap(&hq, &lhs, &rhs));
    }
    Ok((worst, detail))
}

/// Critical-residual growth along a ray against `δ₀ N³ 8^{N+4}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RayBoundCase {
    pub label: String,
    pub s: f64,
    pub delta0: f64,
    pub residual: f64,
    pub bound: f64,
}

pub fn ray_bound_cases(cfg: &GeomConfig) -> Result<Vec<RayBoundCase>> {
    let mut starts: Vec<(String, BundleMetricField)> = Vec::new();
    for degrees in [vec![1i64, 0], vec![-1, 1], vec![1, 0, -1]] {
        let (model, _) = model_new(&degrees, cfg.grid)?;
        for k in [1usize, 2] {
            let h = critical_metric(&model, k)?;
            starts.push((format!("critical {degrees:?} k={k}"), h.clone()));
            // ℓ += ε u shifts the curvature by -ε(1 - 2u): residual ε/2
            let bump = conformal_perturbation(&h, 0, 2e-2, Arc::new(|u: f64| u))?;
            starts.push((format!("perturbed(eps=2e-2) {degrees:?} k={k}"), bump));
        }
    }
    starts.push(("coupled (1,0) eps=0.3".into(), coupled_metric([1, 0], 0.3)?));
    let jobs: Vec<(usize, f64)> = (0..starts.len()).flat_map(|i| [0.0, 1.0, 4.0, 16.0].map(|s| (i, s))).collect();
    let delta0: Vec<f64> = starts.par_iter().map(|(_, h)| critical_residual(h)).collect::<Result<_>>()?;
    jobs.par_iter()
        .map(|&(i, s)| {
            let (label, h) = &starts[i];
            let n = h.rank() as f64;
            let residual = critical_residual(&ray_field(h, s)?)?;
            Ok(RayBoundCase {
                label: format!("{label} s={s}"),
                s,
                delta0: delta0[i],
                residual,
                bound: delta0[i] * n.powi(3) * 8f64.powf(n + 4.0),
            })
        })
        .collect()
}

/// One `(form, t)` evaluation among the forms the lab generates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampledForm {
    pub label: String,
    pub degrees: Vec<i64>,
    pub t: f64,
    pub wzw: f64,
    pub rhs: f64,
    pub signed: f64,
    pub signed_expected: f64,
}

/// Nine `t` values spanning `[min a - 1, max a + 1]`.
pub fn t_grid(degrees: &[i64]) -> Vec<f64> {
    let lo = *degrees.iter().min().unwrap() as f64 - 1.0;
    let hi = *degrees.iter().max().unwrap() as f64 + 1.0;
    (0..9).map(|i| lo + (hi - lo) * i as f64 / 8.0).collect()
}

/// Reference, critical and perturbed-critical forms along rays, each at nine `t` values.
pub fn sampled_forms(grid: GridSpec) -> Result<Vec<SampledForm>> {
    let mut forms: Vec<(String, Vec<i64>, FiberedForm)> = Vec::new();
    for degrees in [vec![0i64, 0], vec![1, 0], vec![-1, 1], vec![2, -1], vec![1, 0, -1]] {
        let (model, g): (_, RadialGrid) = model_new(&degrees, grid)?;
        forms.push((format!("reference {degrees:?}"), degrees.clone(), reference_potential(&model, &g, 1)?));
        for k in [1usize, 2] {
            let crit = critical_metric(&model, k)?;
            let bump = conformal_perturbation(&crit, 0, 0.5, Arc::new(|u: f64| (2.0 * std::f64::consts::PI * u).sin()))?;
            for s in [0.0, 2.0] {
                forms.push((format!("critical {degrees:?} k={k} s={s}"), degrees.clone(), dequantize(&g, s, &crit)?));
                forms.push((format!("perturbed {degrees:?} k={k} s={s}"), degrees.clone(), dequantize(&g, s, &bump)?));
            }
        }
    }
    let jobs: Vec<(usize, f64)> = forms.iter().enumerate().flat_map(|(i, f)| t_grid(&f.1).into_iter().map(move |t| (i, t))).collect();
    jobs.par_iter()
        .map(|&(i, t)| {
            let (label, degrees, form) = &forms[i];
            let w = wzw_functional(form, t)?;
            let sum: i64 = degrees.iter().sum();
            Ok(SampledForm {
                label: label.clone(),
                degrees: degrees.clone(),
                t,
                wzw: w.abs,
                rhs: rhs_main_theorem(degrees, t)?,
                signed: w.signed,
                signed_expected: sum as f64 - t * degrees.len() as f64,
            })
        })
        .collect()
}
