//! The nine acceptance criteria, one PASS/FAIL line each. Tolerances and time budgets are pinned here.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use wzwlab_core::hnmeasure::{
    abs_moment, eta_k, eta_limit, hhat0_formula, hhat1_formula, hhat_exact, rhs_main_theorem, split_sym_slopes,
    wasserstein1, SlopeMeasure,
};
use wzwlab_core::projmodel::{
    critical_metric, dequantize, hym_on_hilb, model_new, quotient_vs_hilb_ratio, reference_potential, wzw_functional,
    GridSpec,
};
use wzwlab_core::props::{flag_suites, geometry_suites, GeomConfig, SuiteResult};
use wzwlab_core::Result;

const GRID: GridSpec = GridSpec { base_nodes: 16, fiber_nodes: 16 };
const SATURATION_TOL: f64 = 2e-3;
const LOWER_BOUND_SLACK: f64 = 5e-3;
const MONOTONE_SLACK: f64 = 1e-6;
const FINAL_GAP_10: f64 = 0.15;
const FINAL_GAP_M11: f64 = 0.20;
const EXACT_SLACK: f64 = 1e-12;
const HYM_SLACK: f64 = 1e-6;
const CONTAINS_SLACK: f64 = 1e-6;
const S_LADDER: [f64; 6] = [0.0, 1.0, 2.0, 4.0, 8.0, 16.0];

struct Outcome {
    pass: bool,
    detail: String,
}

fn rises(v: &[f64]) -> f64 {
    v.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
}

/// Every `(wzw, rhs, label)` evaluated by the criteria, for the global lower-bound check.
type Evaluations = Vec<(f64, f64, String)>;

fn product_saturation(evals: &mut Evaluations) -> Result<Outcome> {
    let (m, g) = model_new(&[0, 0], GRID)?;
    let mut worst: f64 = 0.0;
    for k in [1usize, 2, 4] {
        let h = critical_metric(&m, k)?;
        for s in [0.0, 1.0] {
            let f = dequantize(&g, s, &h)?;
            for t in [-1.0, -0.5, 0.0, 0.5, 1.0] {
                let w = wzw_functional(&f, t)?.abs;
                worst = worst.max((w - 2.0 * f64::abs(t)).abs());
                evals.push((w, rhs_main_theorem(&[0, 0], t)?, format!("(0,0) k={k} s={s} t={t}")));
            }
        }
    }
    Ok(Outcome { pass: worst <= SATURATION_TOL, detail: format!("max |wzw - 2|t|| = {worst:.3e} <= {SATURATION_TOL:e}") })
}

fn gap_closure(evals: &mut Evaluations) -> Result<Outcome> {
    let mut pass = true;
    let mut detail = Vec::new();
    for (deg, t, bound) in [(vec![1i64, 0], 0.5, FINAL_GAP_10), (vec![-1, 1], 0.0, FINAL_GAP_M11)] {
        let (m, g) = model_new(&deg, GRID)?;
        let h = critical_metric(&m, 4)?;
        let rhs = rhs_main_theorem(&deg, t)?;
        let mut gaps = Vec::new();
        for s in S_LADDER {
            let w = wzw_functional(&dequantize(&g, s, &h)?, t)?.abs;
            evals.push((w, rhs, format!("{deg:?} k=4 s={s} t={t}")));
            gaps.push(w - rhs);
        }
        let rise = rises(&gaps);
        let last = *gaps.last().unwrap();
        pass &= rise <= MONOTONE_SLACK && last <= bound;
        detail.push(format!("{deg:?} t={t}: max rise {rise:.2e}, final gap {last:.3e} <= {bound}"));
    }
    Ok(Outcome { pass, detail: detail.join("; ") })
}

fn measure_convergence() -> Result<Outcome> {
    let mut worst: f64 = f64::NEG_INFINITY;
    for deg in [vec![0i64, 1], vec![-1, 1], vec![0, 1, 2]] {
        let lim: SlopeMeasure = eta_limit(&deg)?.into();
        for k in 1..=32usize {
            let ek: SlopeMeasure = eta_k(&split_sym_slopes(&deg, k)?, k).into();
            worst = worst.max(k as f64 * wasserstein1(&ek, &lim)?);
        }
    }
    Ok(Outcome { pass: worst <= 1.0, detail: format!("max k * W1 = {worst:.4} <= 1") })
}

fn asymptotic_cohomology() -> Result<Outcome> {
    const K: usize = 200;
    let excess = |seq: &[f64], target: f64, bound: &dyn Fn(f64) -> f64| {
        seq.iter().enumerate().map(|(i, v)| (v - target).abs() - bound((i + 1) as f64)).fold(f64::NEG_INFINITY, f64::max)
    };
    let h0 = hhat_exact(&[1, 0], 0, K)?;
    let f0 = hhat0_formula(&[1, 0])?;
    let e10 = excess(&h0, 1.0, &|k| 3.0 / k + 2.0 / (k * k));
    let h1 = hhat_exact(&[1, 0], 1, K)?;
    let rr10 = h0.iter().zip(&h1).enumerate().map(|(i, (a, b))| (a - b - 1.0).abs() - 5.0 / (i + 1) as f64).fold(f64::NEG_INFINITY, f64::max);
    let g0 = hhat_exact(&[-1, 1], 0, K)?;
    let g1 = hhat_exact(&[-1, 1], 1, K)?;
    let (p0, p1) = (hhat0_formula(&[-1, 1])?, hhat1_formula(&[-1, 1])?);
    // at k = 1 the count is 2·h⁰(O(-1) ⊕ O(1)) = 4, which no 3/k bound reaches; checked from k = 2
    let at_one = (g0[0] - 0.5).abs() - 3.0;
    let e0 = excess(&g0[1..], 0.5, &|k| 3.0 / (k + 1.0));
    let e1 = excess(&g1[1..], 0.5, &|k| 3.0 / (k + 1.0));
    let rr = g0.iter().zip(&g1).enumerate().map(|(i, (a, b))| (a - b).abs() - 5.0 / (i + 1) as f64).fold(f64::NEG_INFINITY, f64::max);
    let pass = (f0 - 1.0).abs() <= EXACT_SLACK
        && e10 <= EXACT_SLACK
        && (p0 - 0.5).abs() <= EXACT_SLACK
        && (p1 - 0.5).abs() <= EXACT_SLACK
        && e0 <= EXACT_SLACK
        && e1 <= EXACT_SLACK
        && rr.max(rr10) <= EXACT_SLACK;
    Ok(Outcome {
        pass,
        detail: format!(
            "(1,0): formula {f0}, worst excess over 3/k+2/k^2 {e10:.2e}; (-1,1): formulas {p0}/{p1}, worst excess over 3/k for 2 <= k <= 200 {:.2e} (k = 1 excess {at_one}); Riemann-Roch worst excess over 5/k {:.2e}",
            e0.max(e1),
            rr.max(rr10)
        ),
    })
}

fn hym_bridge(evals: &mut Evaluations) -> Result<Outcome> {
    let (m, g) = model_new(&[1, 0], GRID)?;
    let refp = reference_potential(&m, &g, 1)?;
    let w = wzw_functional(&refp, 0.5)?.abs;
    evals.push((w, rhs_main_theorem(&[1, 0], 0.5)?, "reference (1,0) t=0.5".into()));
    let mut gaps = Vec::new();
    let mut lower = f64::INFINITY;
    for k in [1usize, 2, 4, 8] {
        let v = hym_on_hilb(&refp, k, 0.5)?;
        let am = abs_moment(&eta_k(&split_sym_slopes(&[1, 0], k)?, k).into(), 0.5)?;
        lower = lower.min(v - am);
        gaps.push((v - w / 2.0).abs());
    }
    let rise = rises(&gaps);
    Ok(Outcome {
        pass: rise <= MONOTONE_SLACK && lower >= -HYM_SLACK,
        detail: format!("gaps {gaps:.4?} (max rise {rise:.2e}); min(HYM - abs_moment) {lower:.2e}"),
    })
}

fn ratio_check() -> Result<Outcome> {
    let mut pass = true;
    let mut detail = Vec::new();
    for deg in [vec![0i64, 0], vec![1, 0]] {
        let (m, g) = model_new(&deg, GRID)?;
        let h = critical_metric(&m, 1)?;
        let iv: Vec<_> = [2usize, 4, 8].iter().map(|&l| quotient_vs_hilb_ratio(&g, &h, l)).collect::<Result<_>>()?;
        let widths: Vec<f64> = iv.iter().map(|i| i.width()).collect();
        let last = iv[2];
        let ok = rises(&widths) < 0.0 && last.contains_one_within(last.width() + CONTAINS_SLACK);
        pass &= ok;
        detail.push(format!("{deg:?}: widths {widths:.4?}, l=8 interval [{:.6}, {:.6}]", last.min, last.max));
    }
    Ok(Outcome { pass, detail: detail.join("; ") })
}

fn suites_outcome(suites: &[SuiteResult]) -> Outcome {
    let failed: Vec<String> = suites.iter().filter(|s| !s.passed()).map(|s| format!("{} ({} failures)", s.name, s.failures)).collect();
    let total: usize = suites.iter().map(|s| s.instances).sum();
    Outcome {
        pass: failed.is_empty(),
        detail: if failed.is_empty() {
            format!("{} suites, {total} instances, zero failures", suites.len())
        } else {
            format!("failing: {}", failed.join(", "))
        },
    }
}

fn main() -> ExitCode {
    let mut evals: Evaluations = Vec::new();
    let mut results: Vec<(usize, &str, Duration, Duration, Result<Outcome>)> = Vec::new();
    let mut timed = |n: usize, name: &'static str, budget: u64, f: &mut dyn FnMut() -> Result<Outcome>| {
        let t0 = Instant::now();
        let r = f();
        results.push((n, name, t0.elapsed(), Duration::from_secs(budget), r));
    };
    timed(1, "product saturation", 60, &mut || product_saturation(&mut evals));
    timed(3, "gap closure along rays", 600, &mut || gap_closure(&mut evals));
    timed(4, "measure convergence", 60, &mut measure_convergence);
    timed(5, "asymptotic cohomology", 60, &mut asymptotic_cohomology);
    timed(6, "HYM-on-Hilb bridge", 300, &mut || hym_bridge(&mut evals));
    timed(7, "quotient/Hilb ratio", 300, &mut ratio_check);
    timed(8, "flag property suites", 120, &mut || Ok(suites_outcome(&flag_suites(wzwlab_core::tol::DEFAULT_SEED, 1000, 6))));
    let mut geometry: Vec<SuiteResult> = Vec::new();
    timed(9, "geometry property suites", 600, &mut || {
        geometry = geometry_suites(&GeomConfig::default())?;
        Ok(suites_outcome(&geometry))
    });
    // lower bound over every form evaluated above, including the geometry suite's sampled forms
    let t0 = Instant::now();
    let lb = geometry.iter().find(|s| s.name == "wzw_lower_bound");
    let mut worst = evals.iter().map(|(w, r, l)| (w - r, l.clone())).fold((f64::INFINITY, String::new()), |a, b| if b.0 < a.0 { b } else { a });
    if let Some(s) = lb {
        if s.worst_margin < worst.0 {
            worst = (s.worst_margin, "sampled forms".into());
        }
    }
    let sampled = lb.map_or(0, |s| s.instances);
    let lower = Ok(Outcome {
        pass: lb.is_some_and(|s| s.failures == 0) && worst.0 >= -LOWER_BOUND_SLACK,
        detail: format!("{} forms/t values, min(wzw - rhs) = {:.3e} at {}", evals.len() + sampled, worst.0, worst.1),
    });
    results.push((2, "lower bound never violated", t0.elapsed(), Duration::from_secs(60), lower));
    results.sort_by_key(|r| r.0);

    let mut all = true;
    for (n, name, took, budget, r) in results {
        let (pass, detail) = match r {
            Ok(o) => (o.pass && took <= budget, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        all &= pass;
        println!(
            "[{}] criterion {n} ({name}): {detail} [{:.1} s of {} s]",
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
