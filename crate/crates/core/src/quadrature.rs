//! Gauss–Legendre rules, adaptive bisection, kink-aware `∫|g|`, and collapsed
//! (Duffy) product rules on the simplex normalized to probability weights.

use crate::error::{LabError, Result};
use crate::multiindex::factorial;
use crate::tol;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Gauss–Legendre nodes and weights mapped to `[a, b]`.
pub fn gl_interval(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let (h, m) = (0.5 * (b - a), 0.5 * (a + b));
    x.iter().zip(&w).map(|(&xi, &wi)| (m + h * xi, h * wi)).collect()
}

pub fn integrate_gl(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    gl_interval(n, a, b).iter().map(|&(x, w)| w * f(x)).sum()
}

const ADAPT_POINTS: usize = 10;

/// Adaptive bisection with a 10-point Gauss–Legendre panel; an interval is accepted when
/// the panel and its two halves agree to `max(atol, rtol |I|)`.
pub fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rtol: f64, atol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let whole = integrate_gl(f, a, b, ADAPT_POINTS);
    // panels whose disagreement is at rounding level of the whole integral are accepted
    recurse(f, a, b, whole, Tols { rtol, atol, halve: true, floor: 1e-15 * whole.abs() }, 0)
}

/// Like [`adaptive`] but every panel gets the same absolute tolerance (no halving on
/// bisection), for integrands carrying a small absolute noise floor such as finite differences.
pub fn adaptive_panel(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rtol: f64, panel_atol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let whole = integrate_gl(f, a, b, ADAPT_POINTS);
    recurse(f, a, b, whole, Tols { rtol, atol: panel_atol, halve: false, floor: 1e-15 * whole.abs() }, 0)
}

fn adaptive_floor(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rtol: f64, atol: f64, floor: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let whole = integrate_gl(f, a, b, ADAPT_POINTS);
    recurse(f, a, b, whole, Tols { rtol, atol, halve: true, floor }, 0)
}

#[derive(Clone, Copy)]
struct Tols {
    rtol: f64,
    atol: f64,
    halve: bool,
    floor: f64,
}

fn recurse(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, t: Tols, depth: u32) -> Result<f64> {
    let m = 0.5 * (a + b);
    let left = integrate_gl(f, a, m, ADAPT_POINTS);
    let right = integrate_gl(f, m, b, ADAPT_POINTS);
    let both = left + right;
    if (both - whole).abs() <= t.atol.max(t.rtol * both.abs()).max(t.floor) {
        return Ok(both);
    }
    if depth >= tol::ADAPT_MAX_DEPTH {
        return Err(LabError::Quadrature(format!(
            "no convergence on [{a:.6e}, {b:.6e}] (estimates {whole:.12e} vs {both:.12e})"
        )));
    }
    let child = if t.halve { Tols { atol: 0.5 * t.atol, ..t } } else { t };
    Ok(recurse(f, a, m, left, child, depth + 1)? + recurse(f, m, b, right, child, depth + 1)?)
}

/// Roots of `g` on `[a, b]` located by sign changes on a uniform sample of cell midpoints plus
/// two points just inside the ends (endpoints themselves are never evaluated), then refined
/// by the Illinois variant of regula falsi.
pub fn sign_changes(g: &dyn Fn(f64) -> f64, a: f64, b: f64, samples: usize) -> Vec<f64> {
    scan_roots(g, a, b, samples).0
}

/// Roots and the finite sample values `(x, g(x))` they were bracketed from.
fn scan_roots(g: &dyn Fn(f64) -> f64, a: f64, b: f64, samples: usize) -> (Vec<f64>, Vec<(f64, f64)>) {
    let w = b - a;
    let mut xs = vec![a + 1e-10 * w];
    xs.extend((0..samples).map(|i| a + w * (i as f64 + 0.5) / samples as f64));
    xs.push(b - 1e-10 * w);
    let pts: Vec<(f64, f64)> = xs.iter().map(|&x| (x, g(x))).filter(|(_, v)| v.is_finite()).collect();
    let mut roots = Vec::new();
    for i in 0..pts.len().saturating_sub(1) {
        let ((lo, flo), (hi, fhi)) = (pts[i], pts[i + 1]);
        if flo == 0.0 {
            if i > 0 {
                roots.push(lo);
            }
            continue;
        }
        if flo * fhi >= 0.0 {
            continue;
        }
        roots.push(illinois(g, lo, flo, hi, fhi, 1e-14 * w.abs()));
    }
    (roots, pts)
}

/// Root in a sign-changing bracket; `(x0, x1)` always straddle the root.
fn illinois(g: &dyn Fn(f64) -> f64, mut x0: f64, mut f0: f64, mut x1: f64, mut f1: f64, xtol: f64) -> f64 {
    for _ in 0..100 {
        if (x1 - x0).abs() <= xtol {
            break;
        }
        let x = (x0 * f1 - x1 * f0) / (f1 - f0);
        if !(x > x0.min(x1) && x < x0.max(x1)) {
            // secant step stalled on the bracket end: bisect instead
            let m = 0.5 * (x0 + x1);
            let fm = g(m);
            if fm == 0.0 {
                return m;
            }
            if (fm < 0.0) == (f0 < 0.0) {
                (x0, f0) = (m, fm);
            } else {
                (x1, f1) = (m, fm);
            }
            continue;
        }
        let fx = g(x);
        if fx == 0.0 {
            return x;
        }
        if (fx < 0.0) == (f1 < 0.0) {
            f0 *= 0.5;
        } else {
            (x0, f0) = (x1, f1);
        }
        (x1, f1) = (x, fx);
    }
    0.5 * (x0 + x1)
}

/// `∫_a^b |g|`, splitting at detected sign changes of `g` before adaptive integration.
pub fn integrate_abs(g: &dyn Fn(f64) -> f64, a: f64, b: f64, rtol: f64, atol: f64) -> Result<f64> {
    let (roots, samples) = scan_roots(g, a, b, 32);
    let mut cuts = vec![a];
    cuts.extend(roots);
    cuts.push(b);
    let abs = |x: f64| g(x).abs();
    // rounding floor from the scan's midpoint estimate of ∫|g|
    let mean = samples.iter().map(|(_, v)| v.abs()).sum::<f64>() / samples.len().max(1) as f64;
    let floor = 1e-14 * mean * (b - a).abs();
    let mut total = 0.0;
    let pieces = (cuts.len() - 1) as f64;
    for w in cuts.windows(2) {
        total += adaptive_floor(&abs, w[0], w[1], rtol, atol / pieces, floor)?;
    }
    Ok(total)
}

/// Probability-weighted collapsed product rule on the `n`-simplex with `m` points per axis.
/// Points are homogeneous coordinates `(x_0, …, x_n)` summing to one.
pub fn simplex_rule(n: usize, m: usize) -> Vec<(Vec<f64>, f64)> {
    if n == 0 {
        return vec![(vec![1.0], 1.0)];
    }
    let gl = gl_interval(m, 0.0, 1.0);
    let nf = factorial(n as u32);
    let mut out = Vec::with_capacity(m.pow(n as u32));
    let mut idx = vec![0usize; n];
    loop {
        let xi: Vec<f64> = idx.iter().map(|&i| gl[i].0).collect();
        let mut w = nf;
        for (d, &i) in idx.iter().enumerate() {
            w *= gl[i].1 * (1.0 - xi[d]).powi((n - 1 - d) as i32);
        }
        out.push((duffy(&xi), w));
        let mut d = n;
        loop {
            if d == 0 {
                return out;
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < m {
                break;
            }
            idx[d] = 0;
        }
    }
}

/// Collapsed coordinates `ξ ∈ [0,1]^n` to homogeneous simplex coordinates.
pub fn duffy(xi: &[f64]) -> Vec<f64> {
    let n = xi.len();
    let mut x = vec![0.0; n + 1];
    let mut rest = 1.0;
    for d in 0..n {
        x[d + 1] = rest * xi[d];
        rest *= 1.0 - xi[d];
    }
    x[0] = rest;
    x
}

/// `∫ |h| dP` over the `n`-simplex against the uniform probability measure, by nested
/// adaptive quadrature in collapsed coordinates (kink-aware in the innermost one). The kink
/// surface `h = 0` also makes the outer integrands nonsmooth, so fixed rules are not enough.
pub fn simplex_integrate_abs(n: usize, h: &(dyn Fn(&[f64]) -> f64 + Sync), rtol: f64, atol: f64) -> Result<f64> {
    if n == 0 {
        return Ok(h(&[1.0]).abs());
    }
    let mut xi = vec![0.0; n];
    Ok(factorial(n as u32) * nested_abs(h, &mut xi, 0, rtol, atol)?)
}

fn nested_abs(h: &(dyn Fn(&[f64]) -> f64 + Sync), xi: &mut Vec<f64>, d: usize, rtol: f64, atol: f64) -> Result<f64> {
    let n = xi.len();
    let jac = |xi: &[f64], d: usize| (1.0 - xi[d]).powi((n - 1 - d) as i32);
    if d + 1 == n {
        let base = xi.clone();
        let g = |t: f64| {
            let mut z = base.clone();
            z[d] = t;
            h(&duffy(&z))
        };
        return integrate_abs(&g, 0.0, 1.0, rtol, atol);
    }
    let cell = std::cell::RefCell::new((xi.clone(), None::<LabError>));
    let f = |t: f64| {
        let mut st = cell.borrow_mut();
        st.0[d] = t;
        let mut z = st.0.clone();
        match nested_abs(h, &mut z, d + 1, 0.1 * rtol, 0.1 * atol) {
            Ok(v) => v * jac(&z, d),
            Err(e) => {
                st.1.get_or_insert(e);
                0.0
            }
        }
    };
    let v = adaptive(&f, 0.0, 1.0, rtol, atol)?;
    match cell.into_inner().1 {
        Some(e) => Err(e),
        None => Ok(v),
    }
}
