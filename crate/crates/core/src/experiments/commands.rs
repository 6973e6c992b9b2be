use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::flagcore::{weight_operator, Filtration};
use crate::hnmeasure::{
    abs_moment, eta_k, eta_limit, hhat0_formula, hhat1_formula, hhat_exact, moment, rhs_main_theorem, split_sym_slopes,
    wasserstein1, SlopeMeasure,
};
use crate::linalg;
use crate::projmodel::{
    conformal_perturbation, critical_metric, dequantize, hym_on_hilb, model_new, quotient_vs_hilb_ratio,
    reference_potential, wzw_functional,
};
use crate::props;
use crate::tol;

use super::{Cell, Curve, ExperimentConfig, RunReport, Series, Table, Verdict};

pub const COMMANDS: [&str; 5] = ["measure", "cohom", "minimize", "props", "ratio"];

/// Slack on identities that hold exactly in exact arithmetic.
const EXACT: f64 = 1e-9;
/// Width below which a rank-one ratio interval counts as a point.
const POINT_WIDTH: f64 = 1e-9;
/// Slack added to the width when asking whether a ratio interval contains one.
const CONTAINS_SLACK: f64 = 1e-6;

pub fn run_command(command: &str, cfg: &ExperimentConfig) -> Result<RunReport> {
    match command {
        "measure" => cmd_measure(cfg),
        "cohom" => cmd_cohom(cfg),
        "minimize" => cmd_minimize(cfg),
        "props" => cmd_props(cfg),
        "ratio" => cmd_ratio(cfg),
        _ => Err(LabError::Invalid(format!("unknown command {command}"))),
    }
}

fn degree_sum(a: &[i64]) -> f64 {
    a.iter().sum::<i64>() as f64
}

/// Largest increase between consecutive entries (`-∞` for fewer than two).
fn max_rise(v: &[f64]) -> f64 {
    v.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
}

/// `η_k` atoms, `W1(η_k, η^HN)` and moments over the k ladder.
pub fn cmd_measure(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate("measure")?;
    let a = &cfg.degrees;
    let r = a.len() as f64;
    let mut rep = RunReport::new("measure", cfg);
    let lim: SlopeMeasure = eta_limit(a)?.into();
    let (m1_lim, m2_lim) = (moment(&lim, 1)?, moment(&lim, 2)?);
    let mut atoms = Table::new("atoms", &["k", "x", "weight"]);
    let mut conv = Table::new(
        "convergence",
        &["k", "n_k", "moment1", "moment1_limit", "moment2", "moment2_limit", "wasserstein1", "w1_bound", "hhat0_partial", "hhat1_partial"],
    );
    let mut w1s = Vec::new();
    for &k in &cfg.k_ladder {
        let slopes = split_sym_slopes(a, k)?;
        let ek = eta_k(&slopes, k);
        for &(x, w) in ek.atoms() {
            atoms.push(vec![k.into(), x.into(), w.into()]);
        }
        let ek: SlopeMeasure = ek.into();
        let m1 = moment(&ek, 1)?;
        let w1 = wasserstein1(&ek, &lim)?;
        let bound = 1.0 / k as f64;
        conv.push(vec![
            k.into(),
            slopes.len().into(),
            m1.into(),
            m1_lim.into(),
            moment(&ek, 2)?.into(),
            m2_lim.into(),
            w1.into(),
            bound.into(),
            hhat_exact(a, 0, k)?[k - 1].into(),
            hhat_exact(a, 1, k)?[k - 1].into(),
        ]);
        rep.asserted.push(Verdict::le(format!("w1_le_inv_k k={k}"), w1, bound, EXACT, ""));
        rep.asserted.push(Verdict::le(format!("first_moment k={k}"), (m1 - degree_sum(a) / r).abs(), 0.0, EXACT, ""));
        w1s.push((k as f64, w1));
    }
    rep.asserted.push(Verdict::le("first_moment limit", (r * m1_lim - degree_sum(a)).abs(), 0.0, EXACT, "r * mean = sum of degrees"));
    let ws: Vec<f64> = w1s.iter().map(|p| p.1).collect();
    rep.trends.push(Verdict::le("w1_nonincreasing", max_rise(&ws), 0.0, tol::MONOTONE_SLACK, "largest rise along the k ladder"));
    rep.curves.push(Curve {
        name: "w1_vs_k".into(),
        x_label: "k".into(),
        y_label: "W1".into(),
        series: vec![
            Series { label: format!("W1(eta_k, eta_HN) degrees {a:?}"), points: w1s.clone() },
            Series { label: "1/k".into(), points: w1s.iter().map(|&(k, _)| (k, 1.0 / k)).collect() },
        ],
    });
    rep.tables.push(conv);
    rep.tables.push(atoms);
    Ok(rep.finish())
}

/// Worst row of `err_k ≤ bound_k`: `(err, bound, k)` maximizing `err - bound`.
fn worst_row(errs: &[f64], bound: impl Fn(f64) -> f64) -> (f64, f64, usize) {
    let mut worst = (0.0, bound(1.0), 1);
    let mut excess = f64::NEG_INFINITY;
    for (i, &e) in errs.iter().enumerate() {
        let k = i + 1;
        let b = bound(k as f64);
        if e - b > excess {
            excess = e - b;
            worst = (e, b, k);
        }
    }
    worst
}

/// Counting sequences `r!/k^r · h^q(X, O(k))` against the limiting formulas.
pub fn cmd_cohom(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate("cohom")?;
    let a = &cfg.degrees;
    let mut rep = RunReport::new("cohom", cfg);
    let kmax = cfg.cohom_k_max;
    let (h0, h1) = (hhat_exact(a, 0, kmax)?, hhat_exact(a, 1, kmax)?);
    let (f0, f1) = (hhat0_formula(a)?, hhat1_formula(a)?);
    let sum = degree_sum(a);
    let [c1, c2] = cfg.cohom_bound;
    let bound = |k: f64| c1 / k + c2 / (k * k);
    let rr = |k: f64| cfg.riemann_roch_bound / k;
    let mut t = Table::new(
        "cohomology",
        &["k", "hhat0", "hhat1", "hhat0_formula", "hhat1_formula", "euler", "degree_sum", "bound", "rr_bound"],
    );
    for k in 1..=kmax {
        let kf = k as f64;
        t.push(vec![
            k.into(),
            h0[k - 1].into(),
            h1[k - 1].into(),
            f0.into(),
            f1.into(),
            (h0[k - 1] - h1[k - 1]).into(),
            sum.into(),
            bound(kf).into(),
            rr(kf).into(),
        ]);
    }
    for (name, seq, f) in [("hhat0_convergence", &h0, f0), ("hhat1_convergence", &h1, f1)] {
        let errs: Vec<f64> = seq.iter().map(|v| (v - f).abs()).collect();
        let (e, b, k) = worst_row(&errs, bound);
        rep.asserted.push(Verdict::le(name, e, b, EXACT, format!("worst k = {k}, limit {f}")));
    }
    let errs: Vec<f64> = h0.iter().zip(&h1).map(|(x, y)| (x - y - sum).abs()).collect();
    let (e, b, k) = worst_row(&errs, rr);
    rep.asserted.push(Verdict::le("riemann_roch", e, b, EXACT, format!("worst k = {k}, sum of degrees {sum}")));
    rep.tables.push(t);
    Ok(rep.finish())
}

struct MinRow {
    family: String,
    k: usize,
    s: f64,
    t: f64,
    outcome: Result<(f64, f64, f64)>,
}

/// Dequantized geodesic rays from the critical metric (and a perturbed start) over the
/// `(k, s)` ladders, plus the HYM-on-Hilb bridge for the reference metric.
pub fn cmd_minimize(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate("minimize")?;
    let a = &cfg.degrees;
    let r = a.len();
    let sum = degree_sum(a);
    let mut rep = RunReport::new("minimize", cfg);
    let (model, grid) = model_new(a, cfg.grid_spec)?;

    let mut starts = Vec::new();
    for &k in &cfg.k_ladder {
        let crit = critical_metric(&model, k)?;
        let bump = (cfg.perturbation != 0.0)
            .then(|| conformal_perturbation(&crit, 0, cfg.perturbation, Arc::new(|u: f64| (2.0 * std::f64::consts::PI * u).sin())))
            .transpose()?;
        starts.push(("critical", k, crit));
        if let Some(b) = bump {
            starts.push(("perturbed", k, b));
        }
    }
    let jobs: Vec<(usize, f64)> = (0..starts.len()).flat_map(|i| cfg.s_ladder.iter().map(move |&s| (i, s))).collect();
    let forms: Vec<_> = jobs.par_iter().map(|&(i, s)| dequantize(&grid, s, &starts[i].2)).collect();
    let evals: Vec<(usize, f64)> = (0..jobs.len()).flat_map(|j| cfg.t_grid.iter().map(move |&t| (j, t))).collect();
    let rows: Vec<MinRow> = evals
        .par_iter()
        .map(|&(j, t)| {
            let (i, s) = jobs[j];
            let outcome = match &forms[j] {
                Ok(form) => wzw_functional(form, t).and_then(|w| Ok((w.abs, rhs_main_theorem(a, t)?, w.signed))),
                Err(e) => Err(e.clone()),
            };
            MinRow { family: starts[i].0.into(), k: starts[i].1, s, t, outcome }
        })
        .collect();

    let mut table = Table::new(
        "minimize",
        &["family", "k", "s", "t", "wzw", "rhs", "gap", "signed", "signed_expected", "conservation_residual", "lower_bound_ok", "status"],
    );
    let mut worst_lb: Option<(f64, f64, String)> = None;
    let mut worst_cons = (0.0f64, String::new());
    let mut worst_sat = (0.0f64, String::new());
    let mut failures = Vec::new();
    for row in &rows {
        let label = format!("{} k={} s={} t={}", row.family, row.k, row.s, row.t);
        match &row.outcome {
            Ok((wzw, rhs, signed)) => {
                let expected = sum - row.t * r as f64;
                let cons = (signed - expected).abs();
                let ok = *wzw >= rhs - tol::LOWER_BOUND_SLACK;
                table.push(vec![
                    row.family.clone().into(),
                    row.k.into(),
                    row.s.into(),
                    row.t.into(),
                    (*wzw).into(),
                    (*rhs).into(),
                    (wzw - rhs).into(),
                    (*signed).into(),
                    expected.into(),
                    cons.into(),
                    ok.into(),
                    "ok".into(),
                ]);
                if worst_lb.as_ref().is_none_or(|w| wzw - rhs < w.0 - w.1) {
                    worst_lb = Some((*wzw, *rhs, label.clone()));
                }
                if cons >= worst_cons.0 {
                    worst_cons = (cons, label.clone());
                }
                if row.family == "critical" && (wzw - rhs).abs() >= worst_sat.0 {
                    worst_sat = ((wzw - rhs).abs(), label);
                }
            }
            Err(e) => {
                let nan = Cell::Num(f64::NAN);
                let mut cells: Vec<Cell> = vec![row.family.clone().into(), row.k.into(), row.s.into(), row.t.into()];
                cells.extend(std::iter::repeat_n(nan, 6));
                cells.push(false.into());
                cells.push(format!("error: {e}").into());
                table.push(cells);
                failures.push(label);
            }
        }
    }
    rep.asserted.push(Verdict::le(
        "dequantized_forms_valid",
        failures.len() as f64,
        0.0,
        0.0,
        failures.first().cloned().unwrap_or_default(),
    ));
    if let Some((w, rhs, label)) = worst_lb {
        rep.asserted.push(Verdict::ge("wzw_lower_bound", w, rhs, tol::LOWER_BOUND_SLACK, format!("tightest row {label}")));
    }
    rep.asserted.push(Verdict::le("topological_conservation", worst_cons.0, 0.0, tol::CONSERVATION, format!("worst row {}", worst_cons.1)));
    if a.iter().all(|&d| d == a[0]) {
        rep.asserted.push(Verdict::le("product_saturation", worst_sat.0, 0.0, tol::PRODUCT_SATURATION, format!("worst critical row {}", worst_sat.1)));
    }

    // gap-vs-s curves; gaps should fall along s, and the gap at the last s along k
    let mut curve = Curve { name: "gap_vs_s".into(), x_label: "s".into(), y_label: "wzw - rhs".into(), series: Vec::new() };
    let mut final_gaps: Vec<(&str, f64)> = Vec::new();
    for (fam, k, _) in &starts {
        let mut rise = f64::NEG_INFINITY;
        let mut final_gap = f64::NEG_INFINITY;
        for &t in &cfg.t_grid {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|x| x.family == *fam && x.k == *k && x.t == t)
                .filter_map(|x| x.outcome.as_ref().ok().map(|o| (x.s, o.0 - o.1)))
                .collect();
            let gaps: Vec<f64> = pts.iter().map(|p| p.1).collect();
            rise = rise.max(max_rise(&gaps));
            final_gap = final_gap.max(gaps.last().copied().unwrap_or(f64::NAN));
            curve.series.push(Series { label: format!("{fam} k={k} t={t}"), points: pts });
        }
        rep.trends.push(Verdict::le(format!("gap_nonincreasing_in_s {fam} k={k}"), rise, 0.0, tol::MONOTONE_SLACK, "largest rise over the t grid"));
        final_gaps.push((fam, final_gap));
    }
    for fam in ["critical", "perturbed"] {
        let g: Vec<f64> = final_gaps.iter().filter(|x| x.0 == fam).map(|x| x.1).collect();
        if !g.is_empty() {
            rep.trends.push(Verdict::le(
                format!("final_gap_nonincreasing_in_k {fam}"),
                max_rise(&g),
                0.0,
                tol::MONOTONE_SLACK,
                format!("largest gap at the last s, per k: {g:?}"),
            ));
        }
    }
    rep.curves.push(curve);
    rep.tables.push(table);

    // HYM of the quantized reference metric against the WZW of the reference form
    let refp = reference_potential(&model, &grid, 1)?;
    let bridge_jobs: Vec<(usize, f64)> = cfg.k_ladder.iter().flat_map(|&k| cfg.t_grid.iter().map(move |&t| (k, t))).collect();
    let ref_wzw: Vec<f64> = cfg.t_grid.par_iter().map(|&t| wzw_functional(&refp, t).map(|w| w.abs)).collect::<Result<_>>()?;
    let bridge: Vec<(f64, f64)> = bridge_jobs
        .par_iter()
        .map(|&(k, t)| {
            let em: SlopeMeasure = eta_k(&split_sym_slopes(a, k)?, k).into();
            Ok((hym_on_hilb(&refp, k, t)?, abs_moment(&em, t)?))
        })
        .collect::<Result<_>>()?;
    let mut bt = Table::new("hym_bridge", &["k", "t", "hym_on_hilb", "abs_moment_eta_k", "wzw_reference_over_r", "bridge_gap"]);
    let mut worst_he: Option<(f64, f64, String)> = None;
    for (&(k, t), &(hym, am)) in bridge_jobs.iter().zip(&bridge) {
        let ti = cfg.t_grid.iter().position(|&x| x == t).unwrap();
        let target = ref_wzw[ti] / r as f64;
        bt.push(vec![k.into(), t.into(), hym.into(), am.into(), target.into(), (hym - target).abs().into()]);
        if worst_he.as_ref().is_none_or(|w| hym - am < w.0 - w.1) {
            worst_he = Some((hym, am, format!("k={k} t={t}")));
        }
    }
    if let Some((hym, am, label)) = worst_he {
        rep.asserted.push(Verdict::ge("hym_lower_bound", hym, am, tol::HYM_LOWER_SLACK, format!("tightest row {label}")));
    }
    for (ti, &t) in cfg.t_grid.iter().enumerate() {
        let gaps: Vec<f64> = bridge_jobs
            .iter()
            .zip(&bridge)
            .filter(|(j, _)| j.1 == t)
            .map(|(_, &(hym, _))| (hym - ref_wzw[ti] / r as f64).abs())
            .collect();
        rep.trends.push(Verdict::le(format!("bridge_gap_nonincreasing_in_k t={t}"), max_rise(&gaps), 0.0, tol::MONOTONE_SLACK, ""));
    }
    rep.tables.push(bt);
    Ok(rep.finish())
}

/// Flag, measure and geometry property suites.
pub fn cmd_props(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate("props")?;
    let mut cfg = cfg.clone();
    cfg.geometry_config.seed = cfg.seed;
    let mut rep = RunReport::new("props", &cfg);
    let mut suites = props::flag_suites(cfg.seed, cfg.instances, cfg.max_dim);
    suites.extend(props::measure_suites(cfg.seed, cfg.measure_instances));
    if cfg.geometry {
        suites.extend(props::geometry_suites(&cfg.geometry_config)?);
    }
    let mut t = Table::new("suites", &["suite", "instances", "failures", "worst_margin", "tolerance", "passed"]);
    for s in &suites {
        t.push(vec![
            s.name.clone().into(),
            s.instances.into(),
            s.failures.into(),
            s.worst_margin.into(),
            s.tolerance.into(),
            s.passed().into(),
        ]);
        let mut v = Verdict::ge(s.name.clone(), s.worst_margin, 0.0, s.tolerance, format!("{} of {} instances failed", s.failures, s.instances));
        v.pass = s.passed();
        rep.asserted.push(v);
    }
    rep.tables.push(t);
    let mut ce = Table::new("counterexamples", &["suite", "instance", "seed", "margin", "detail"]);
    for s in &suites {
        for c in &s.counterexamples {
            ce.push(vec![s.name.clone().into(), c.instance.into(), Cell::Text(c.seed.to_string()), c.margin.into(), c.detail.clone().into()]);
        }
    }
    rep.tables.push(ce);
    if let Some(rp) = &cfg.replay {
        let mut t = Table::new("replay", &["suite", "seed", "margin", "detail"]);
        let (m, d) = match props::replay(&rp.suite, rp.seed, cfg.max_dim, &cfg.geometry_config) {
            Ok(x) => x,
            Err(e) => (f64::NEG_INFINITY, format!("error: {e}")),
        };
        t.push(vec![rp.suite.clone().into(), Cell::Text(rp.seed.to_string()), m.into(), d.into()]);
        rep.tables.push(t);
    }
    if let Some(fx) = &cfg.fixture {
        let h = fx.product()?;
        let f = Filtration::coordinate(&fx.weights)?;
        let a = weight_operator(&h, &f)?;
        let ev = linalg::eigvalsh(&linalg::hermitize(&h.whiten(&a)));
        let mut w = fx.weights.clone();
        w.sort_by(f64::total_cmp);
        let err = ev.iter().zip(&w).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        rep.asserted.push(Verdict::le("fixture_weight_spectrum", err, 0.0, EXACT, format!("weights {w:?}")));
    }
    rep.suites = suites;
    Ok(rep.finish())
}

/// `[Sym^l H_k]` against `Hilb_{kl}(FS(H_k)^{1/k})` over the l ladder, `H_k` critical at `k = k_ladder[0]`.
pub fn cmd_ratio(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate("ratio")?;
    let a = &cfg.degrees;
    let k = cfg.k_ladder[0];
    let mut rep = RunReport::new("ratio", cfg);
    let (model, grid) = model_new(a, cfg.grid_spec)?;
    let h = critical_metric(&model, k)?;
    let intervals: Vec<_> = cfg.l_ladder.par_iter().map(|&l| quotient_vs_hilb_ratio(&grid, &h, l)).collect::<Result<_>>()?;
    let mut t = Table::new("ratio", &["k", "l", "min", "max", "width", "l_times_width", "contains_one"]);
    let mut widths = Vec::new();
    let mut all_contain = true;
    for (&l, iv) in cfg.l_ladder.iter().zip(&intervals) {
        let w = iv.width();
        let contains = iv.contains_one_within(w + CONTAINS_SLACK);
        all_contain &= contains;
        widths.push(w);
        t.push(vec![k.into(), l.into(), iv.min.into(), iv.max.into(), w.into(), (l as f64 * w).into(), contains.into()]);
    }
    if a.len() == 1 {
        let wmax = widths.iter().copied().fold(0.0, f64::max);
        rep.asserted.push(Verdict::le("rank_one_widths", wmax, 0.0, POINT_WIDTH, "ratio is constant for a line bundle"));
    } else if widths.len() > 1 {
        rep.asserted.push(Verdict::new("widths_strictly_decreasing", max_rise(&widths), super::Relation::Lt, 0.0, 0.0, "largest change along the l ladder"));
    }
    let last = intervals.last().unwrap();
    let lmax = *cfg.l_ladder.last().unwrap();
    let excess = (last.min - 1.0).max(1.0 - last.max).max(0.0);
    rep.asserted.push(Verdict::le(
        format!("contains_one l={lmax}"),
        excess,
        last.width(),
        CONTAINS_SLACK,
        format!("interval [{}, {}]", last.min, last.max),
    ));
    rep.trends.push(Verdict::le("contains_one_all_l", if all_contain { 0.0 } else { 1.0 }, 0.0, 0.0, "reported only"));
    rep.tables.push(t);
    Ok(rep.finish())
}
