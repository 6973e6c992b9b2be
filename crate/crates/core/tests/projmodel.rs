use std::sync::Arc;

use approx::assert_abs_diff_eq;
use wzwlab_core::experiments::{ExperimentConfig, MetricFixture};
use wzwlab_core::hnmeasure::{abs_moment, eta_k, rhs_main_theorem, split_sym_slopes, SlopeMeasure};
use wzwlab_core::linalg;
use wzwlab_core::multiindex::sym_dim;
use wzwlab_core::projmodel::*;
use wzwlab_core::props;

fn grid(n: usize) -> GridSpec {
    GridSpec { base_nodes: n, fiber_nodes: n }
}

fn model(deg: &[i64]) -> (SplitModel, RadialGrid) {
    model_new(deg, grid(16)).unwrap()
}

fn nodes() -> Vec<BasePt> {
    [0.03, 0.2, 0.5, 0.77, 0.96].iter().map(|&u| BasePt::from_u(u)).collect()
}

fn constant_field(deg: &[i64], k: usize, logs: Vec<f64>) -> BundleMetricField {
    BundleMetricField::diagonal(deg, k, Arc::new(move |_: &BasePt| logs.clone())).unwrap()
}

fn eta(deg: &[i64], k: usize) -> SlopeMeasure {
    eta_k(&split_sym_slopes(deg, k).unwrap(), k).into()
}

#[test]
fn model_construction() {
    let (m, g) = model_new(&[0, 0], grid(32)).unwrap();
    assert_eq!((m.r(), m.n()), (2, 1));
    assert_abs_diff_eq!(g.base.iter().map(|b| b.1).sum::<f64>(), 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(g.fiber.iter().map(|f| f.1).sum::<f64>(), 1.0, epsilon = 1e-12);
    assert_eq!(model(&[1, 0, -1]).0.n(), 2);
    assert_eq!(model(&[2, 2, 0]).0.degrees, vec![2, 2, 0]);
    assert!(model_new(&[1, 0], grid(4)).is_err());
}

// Beta integral ∫ t^j (1+t)^{-k-2} dt = j!(k-j)!/(k+1)!: ½ each at k = 1
#[test]
fn hilb_of_fubini_study_matches_beta_integrals() {
    let (m, g) = model(&[0, 0]);
    let h = hilb_metric(&reference_potential(&m, &g, 1).unwrap(), 1).unwrap();
    for pt in nodes() {
        for l in h.log_diag(&pt).unwrap() {
            assert_abs_diff_eq!(l.exp(), 0.5, epsilon = 1e-9);
        }
    }
    let (m, g) = model(&[0, 0, 0]);
    let h = hilb_metric(&reference_potential(&m, &g, 1).unwrap(), 1).unwrap();
    for pt in nodes() {
        for l in h.log_diag(&pt).unwrap() {
            assert_abs_diff_eq!(l.exp(), 1.0 / 3.0, epsilon = 1e-9);
        }
    }
    // simplex Beta integral at k = 2: α!(r-1)!/(k+r-1)! times k!/α! from the power
    let h2 = hilb_metric(&reference_potential(&m, &g, 1).unwrap(), 2).unwrap();
    assert!(h2.is_diagonal());
    for (i, l) in h2.log_diag(&BasePt::from_u(0.4)).unwrap().iter().enumerate() {
        let fact: f64 = h2.mons.list[i].iter().map(|&a| if a == 2 { 2.0 } else { 1.0 }).product();
        assert_abs_diff_eq!(l.exp(), fact * 2.0 / 24.0, epsilon = 1e-9);
    }
}

#[test]
fn fs_of_hilb_shifts_potential_by_log_two() {
    let (m, g) = model(&[0, 0]);
    let refp = reference_potential(&m, &g, 1).unwrap();
    let h = hilb_metric(&refp, 1).unwrap();
    let fs = fs_potential(&h, 16).unwrap();
    for pt in nodes() {
        for (x, _) in &g.fiber {
            assert_abs_diff_eq!(fs.potential(&pt, x) - refp.potential(&pt, x), 2f64.ln(), epsilon = 1e-9);
        }
    }
    let a = line_curvature(&fs, &g).unwrap();
    let b = line_curvature(&refp, &g).unwrap();
    for (p, q) in a.nodes.iter().zip(&b.nodes) {
        assert_abs_diff_eq!(p.2, q.2, epsilon = 1e-9);
        assert_abs_diff_eq!(p.3, q.3, epsilon = 1e-9);
    }
}

#[test]
fn fs_defining_identity() {
    for deg in [vec![0i64, 0], vec![1, 0], vec![1, 0, -1]] {
        let (m, g) = model(&deg);
        for k in [1usize, 2] {
            let h = critical_metric(&m, k).unwrap();
            let fs = fs_potential(&h, 16).unwrap();
            assert!(fs_identity_residual(&h, &fs, &g).unwrap() <= 1e-10, "{deg:?} k={k}");
        }
    }
}

#[test]
fn rank_one_fs_hilb_keeps_curvature() {
    for a in [-2i64, 1, 3] {
        let (m, g) = model(&[a]);
        let refp = reference_potential(&m, &g, 1).unwrap();
        let base = line_curvature(&refp, &g).unwrap();
        for k in 1..=4 {
            let back = fs_potential(&hilb_metric(&refp, k).unwrap(), 16).unwrap();
            for (p, q) in line_curvature(&back, &g).unwrap().nodes.iter().zip(&base.nodes) {
                assert_abs_diff_eq!(p.3, q.3, epsilon = 1e-6);
            }
        }
        for n in &base.nodes {
            assert_abs_diff_eq!(n.3, a as f64, epsilon = 1e-6);
        }
    }
}

#[test]
fn reference_form_curvature() {
    let (m, g) = model(&[0, 0]);
    let c = line_curvature(&reference_potential(&m, &g, 1).unwrap(), &g).unwrap();
    for n in &c.nodes {
        assert_abs_diff_eq!(n.3, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(n.2, 1.0, epsilon = 1e-6);
    }
    let (m, g) = model(&[1, 0]);
    let c = line_curvature(&reference_potential(&m, &g, 1).unwrap(), &g).unwrap();
    assert!(c.nodes.iter().all(|n| (-1e-9..=1.0 + 1e-9).contains(&n.3)));
    // Chern–Weil: mean horizontal trace is the mean slope
    let mut mean = 0.0;
    for (i, (_, wb)) in g.base.iter().enumerate() {
        for (j, (_, wf)) in g.fiber.iter().enumerate() {
            let n = &c.nodes[i * g.fiber.len() + j];
            mean += wb * wf * n.2 * n.3;
        }
    }
    assert_abs_diff_eq!(mean, 0.5, epsilon = 1e-6);
    let (m, g) = model(&[1, -1]);
    assert!(check_positivity(&reference_potential(&m, &g, 1).unwrap(), &g).unwrap() > 1e-8);
}

#[test]
fn fs_hilb_round_trip_improves() {
    let (m, g) = model(&[1, 0]);
    let refp = reference_potential(&m, &g, 1).unwrap();
    let d: Vec<f64> = [1usize, 2, 4, 8].iter().map(|&k| fs_hilb_roundtrip(&refp, &g, k).unwrap()).collect();
    assert!(d.windows(2).all(|w| w[1] < w[0]), "{d:?}");
}

#[test]
fn bundle_curvature_of_direct_sums() {
    let (m, _) = model(&[1, 0]);
    let h = critical_metric(&m, 1).unwrap();
    for pt in nodes() {
        let k = bundle_curvature(&h, &pt);
        assert!(linalg::max_abs(&(k - linalg::real_diag(&[1.0, 0.0]))) <= 1e-6);
    }
    // constant rescaling of a summand changes nothing
    let scaled = conformal_perturbation(&h, 1, 3.0, Arc::new(|_| 1.0)).unwrap();
    for pt in nodes() {
        assert!(linalg::max_abs(&(bundle_curvature(&scaled, &pt) - bundle_curvature(&h, &pt))) <= 1e-9);
    }
    let h2 = critical_metric(&m, 2).unwrap();
    let k2 = bundle_curvature(&h2, &BasePt::from_u(0.35));
    for i in 0..h2.rank() {
        assert_abs_diff_eq!(k2[(i, i)].re, h2.mons.idot(i, &[1, 0]) as f64, epsilon = 1e-6);
    }
}

#[test]
fn hym_functional_examples() {
    let (m, _) = model(&[1, 0]);
    let h = critical_metric(&m, 1).unwrap();
    for t in [-0.5, 0.0, 0.3, 1.0, 2.0] {
        assert_abs_diff_eq!(hym_functional(&h, t).unwrap().trace, (1.0f64 - t).abs() + t.abs(), epsilon = 1e-6);
    }
    let (m, _) = model(&[2, 2]);
    assert!(hym_functional(&critical_metric(&m, 1).unwrap(), 2.0).unwrap().trace <= 1e-6);
}

#[test]
fn critical_metrics_are_critical() {
    for deg in [vec![1i64, 0], vec![-1, 1], vec![1, 0, -1]] {
        let (m, _) = model(&deg);
        for k in [1usize, 2, 3] {
            let h = critical_metric(&m, k).unwrap();
            let (ok, res) = is_delta_approx(&h, 1e-4).unwrap();
            assert!(ok && res <= 1e-5, "{deg:?} k={k}: {res}");
        }
    }
}

#[test]
fn hn_weight_operator_of_critical_metric_is_diagonal() {
    let (m, _) = model(&[1, 0, -1]);
    let h = critical_metric(&m, 2).unwrap();
    let f = h.hn_filtration().unwrap();
    let pt = BasePt::from_u(0.6);
    let a = wzwlab_core::flagcore::weight_operator(&h.at(&pt).unwrap(), &f).unwrap();
    let want: Vec<f64> = (0..h.rank()).map(|i| h.mons.idot(i, &h.degrees) as f64).collect();
    assert!(linalg::max_abs(&(a - linalg::real_diag(&want))) <= 1e-9);
}

#[test]
fn conformal_bump_residual_is_half_eps() {
    let (m, _) = model(&[1, 0]);
    let h = critical_metric(&m, 1).unwrap();
    for eps in [1e-3, 1e-2, 0.1] {
        // ℓ += εu adds ε(1 - 2u)-type curvature whose L¹ norm is ε/2
        let p = conformal_perturbation(&h, 0, eps, Arc::new(|u| u)).unwrap();
        let (_, res) = is_delta_approx(&p, 0.0).unwrap();
        assert_abs_diff_eq!(res, eps / 2.0, epsilon = 1e-6 + 1e-4 * eps);
        assert!(is_delta_approx(&p, 0.6 * eps).unwrap().0);
        assert!(!is_delta_approx(&p, 0.4 * eps).unwrap().0);
    }
}

#[test]
fn ray_field_examples() {
    let (m, _) = model(&[1, 0, -1]);
    let h = critical_metric(&m, 1).unwrap();
    let pt = BasePt::from_u(0.3);
    assert_eq!(ray_field(&h, 0.0).unwrap().gram(&pt), h.gram(&pt));
    for s in [0.5, 2.0] {
        let r = ray_field(&h, s).unwrap();
        for (i, (a, b)) in r.log_diag(&pt).unwrap().iter().zip(h.log_diag(&pt).unwrap()).enumerate() {
            assert_abs_diff_eq!(a - b, -s * h.mons.idot(i, &h.degrees) as f64, epsilon = 1e-12);
        }
    }
    for s in [0.0, 1.0, 4.0, 16.0] {
        let res = critical_residual(&ray_field(&h, s).unwrap()).unwrap();
        assert!(res <= 1e-4, "s={s}: {res}");
    }
}

#[test]
fn mult_quotient_examples() {
    let h = constant_field(&[0, 0], 1, vec![0.0, 0.0]);
    let q = mult_quotient_metric(&h, 2).unwrap();
    assert!(q.is_diagonal());
    let pt = BasePt::from_u(0.5);
    for (i, l) in q.log_diag(&pt).unwrap().iter().enumerate() {
        let want = if q.mons.list[i] == vec![1, 1] { 0.5 } else { 1.0 };
        assert_abs_diff_eq!(l.exp(), want, epsilon = 1e-12);
    }
    // the dense path agrees
    let dense = mult_quotient_metric(&h.to_dense(), 2).unwrap();
    let want: Vec<f64> = q.log_diag(&pt).unwrap().iter().map(|l| l.exp()).collect();
    assert!(linalg::max_abs(&(dense.gram(&pt) - linalg::real_diag(&want))) <= 1e-12);
    let c: f64 = 1.7;
    let one = constant_field(&[2], 1, vec![c.ln()]);
    for l in [2usize, 3, 5] {
        let lq = mult_quotient_metric(&one, l).unwrap().log_diag(&pt).unwrap();
        assert_abs_diff_eq!(lq[0].exp(), c.powi(l as i32), epsilon = 1e-12);
    }
}

#[test]
fn ratio_intervals() {
    for deg in [vec![0i64, 0], vec![1, 0]] {
        let (m, g) = model(&deg);
        let h = critical_metric(&m, 1).unwrap();
        let iv: Vec<RatioInterval> = [2usize, 4, 8].iter().map(|&l| quotient_vs_hilb_ratio(&g, &h, l).unwrap()).collect();
        assert!(iv.windows(2).all(|w| w[1].width() < w[0].width()), "{deg:?}: {iv:?}");
        assert!(iv.iter().all(|i| i.min > 0.0));
        assert!(iv[2].contains_one_within(iv[2].width() + 1e-6));
    }
    let (m, g) = model(&[3]);
    let h = critical_metric(&m, 1).unwrap();
    for l in [2usize, 4, 8] {
        assert!(quotient_vs_hilb_ratio(&g, &h, l).unwrap().width() <= 1e-9);
    }
}

#[test]
fn dequantized_product_saturates_the_bound() {
    let (m, g) = model(&[0, 0]);
    for k in [1usize, 2] {
        let h = critical_metric(&m, k).unwrap();
        for s in [0.0, 1.0] {
            let f = dequantize(&g, s, &h).unwrap();
            for t in [-1.0, 0.0, 0.5] {
                assert_abs_diff_eq!(wzw_functional(&f, t).unwrap().abs, 2.0 * f64::abs(t), epsilon = 2e-3);
            }
        }
    }
}

#[test]
fn dequantize_at_zero_is_fs_of_critical() {
    let (m, g) = model(&[1, 0]);
    let h = critical_metric(&m, 2).unwrap();
    let a = dequantize(&g, 0.0, &h).unwrap();
    let b = fs_potential(&h, 16).unwrap();
    for pt in nodes() {
        for (x, _) in &g.fiber {
            assert_eq!(a.potential(&pt, x), b.potential(&pt, x));
        }
    }
}

#[test]
fn dequantized_gap_along_the_ray() {
    let (m, g) = model(&[1, 0]);
    let h = critical_metric(&m, 4).unwrap();
    let gaps: Vec<f64> = [0.0, 2.0, 8.0]
        .iter()
        .map(|&s| wzw_functional(&dequantize(&g, s, &h).unwrap(), 0.5).unwrap().abs - 0.5)
        .collect();
    assert!(gaps.iter().all(|&x| x >= -5e-3), "{gaps:?}");
    assert!(gaps.windows(2).all(|w| w[1] <= w[0] + 1e-6), "{gaps:?}");
}

#[test]
fn wzw_examples() {
    let (m, g) = model(&[0, 0]);
    let refp = reference_potential(&m, &g, 1).unwrap();
    for t in [-1.0, -0.25, 0.0, 0.5] {
        let w = wzw_functional(&refp, t).unwrap();
        assert_abs_diff_eq!(w.abs, 2.0 * f64::abs(t), epsilon = 1e-6);
        assert_abs_diff_eq!(w.abs, rhs_main_theorem(&[0, 0], t).unwrap(), epsilon = 1e-6);
    }
    for deg in [vec![1i64, 0], vec![2, -1]] {
        let (m, g) = model(&deg);
        let bump = conformal_perturbation(&critical_metric(&m, 2).unwrap(), 0, 0.5, Arc::new(|u| (6.0 * u).sin())).unwrap();
        let f = dequantize(&g, 1.0, &bump).unwrap();
        for t in [-0.5, 0.5, 1.5] {
            let w = wzw_functional(&f, t).unwrap();
            let sum: i64 = deg.iter().sum();
            assert_abs_diff_eq!(w.signed, sum as f64 - 2.0 * t, epsilon = 1e-5);
            assert!(w.abs >= w.signed.abs() - 1e-12);
            assert!(w.abs >= rhs_main_theorem(&deg, t).unwrap() - 5e-3);
        }
    }
}

#[test]
fn hermite_einstein_examples() {
    let (m, g) = model(&[2, 2]);
    assert!(hermite_einstein_residual(&reference_potential(&m, &g, 1).unwrap(), 2.0).unwrap() <= 1e-6);
    let (m, g) = model(&[1, 0]);
    let f = dequantize(&g, 1.0, &critical_metric(&m, 2).unwrap()).unwrap();
    let r = hermite_einstein_residual(&f, 0.5).unwrap();
    assert!(r >= rhs_main_theorem(&[1, 0], 0.5).unwrap() - 5e-3);
    assert_eq!(r, wzw_functional(&f, 0.5).unwrap().abs);
}

#[test]
fn hym_on_hilb_examples() {
    let (m, g) = model(&[0, 0]);
    let refp = reference_potential(&m, &g, 1).unwrap();
    for k in [1usize, 2, 4] {
        for t in [-0.5, 0.25] {
            let v = hym_on_hilb(&refp, k, t).unwrap();
            assert_abs_diff_eq!(v, f64::abs(t), epsilon = 1e-6);
        }
    }
    let (m, g) = model(&[1, 0]);
    let refp = reference_potential(&m, &g, 1).unwrap();
    let target = wzw_functional(&refp, 0.5).unwrap().abs / 2.0;
    let mut gaps = Vec::new();
    for k in [1usize, 2, 4, 8] {
        let v = hym_on_hilb(&refp, k, 0.5).unwrap();
        assert!(v >= abs_moment(&eta(&[1, 0], k), 0.5).unwrap() - 1e-6);
        gaps.push((v - target).abs());
    }
    assert!(gaps.windows(2).all(|w| w[1] <= w[0] + 1e-6), "{gaps:?}");
}

// G = diag(α!/k!) makes Σ x^α/g_α = (Σx)^k = 1, so Hilb(FS(G)) = diag(∫x^α) and G⁻¹ Hilb = 1/N_k
#[test]
fn hilb_fs_gap_of_balanced_metric() {
    for (r, k) in [(2usize, 1usize), (2, 2), (3, 1), (3, 2), (2, 3)] {
        let n = sym_dim(r, k).unwrap();
        let mons = wzwlab_core::multiindex::Monomials::new(r, k).unwrap();
        let kf = wzwlab_core::multiindex::factorial(k as u32);
        let g: Vec<f64> = (0..n).map(|i| mons.fact(i) / kf).collect();
        let gap = fs_hilb_gap(&linalg::real_diag(&g), r, k).unwrap();
        assert_abs_diff_eq!(gap, 1.0 - 1.0 / n as f64, epsilon = 1e-9);
    }
}

#[test]
fn property_instances_replay() {
    for name in props::suite_names() {
        if name.starts_with("submult") {
            continue; // covered by the acceptance run; slow per instance
        }
        let s = props::instance_seed(3, &name, 5);
        let geom = props::GeomConfig::default();
        let a = props::replay(&name, s, 6, &geom).unwrap();
        let b = props::replay(&name, s, 6, &geom).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn non_positive_fixture_is_rejected() {
    let fixture = MetricFixture { gram: vec![vec![[1.0, 0.0], [2.0, 0.0]], vec![[2.0, 0.0], [1.0, 0.0]]], weights: vec![0.0, 1.0] };
    let cfg = ExperimentConfig { fixture: Some(fixture), ..Default::default() };
    assert!(cfg.validate("props").is_err());
    let ok = MetricFixture { gram: vec![vec![[2.0, 0.0], [0.0, 1.0]], vec![[0.0, -1.0], [2.0, 0.0]]], weights: vec![0.0, 1.0] };
    let cfg = ExperimentConfig { fixture: Some(ok), ..Default::default() };
    assert!(cfg.validate("props").is_ok());
}
