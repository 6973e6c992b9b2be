//! Dense complex linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{LabError, Result};
use crate::tol;

pub type C = Complex64;
pub type CMat = DMatrix<C>;
pub type CVec = DVector<C>;

#[inline]
pub fn c(re: f64) -> C {
    C::new(re, 0.0)
}

pub fn real_diag(d: &[f64]) -> CMat {
    CMat::from_diagonal(&CVec::from_iterator(d.len(), d.iter().map(|&x| c(x))))
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn hermitize(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

/// Largest entrywise deviation from Hermitian symmetry.
pub fn herm_deviation(a: &CMat) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    if n == 0 {
        return (vec![], CMat::zeros(0, 0));
    }
    let se = SymmetricEigen::new(hermitize(a));
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    let vals = idx.iter().map(|&i| se.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(n, n, |r, col| se.eigenvectors[(r, idx[col])]);
    (vals, vecs)
}

pub fn eigvalsh(a: &CMat) -> Vec<f64> {
    eigh(a).0
}

/// `V f(Λ) V†` for Hermitian `a`.
pub fn herm_apply(a: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, v) = eigh(a);
    let fd: Vec<f64> = vals.iter().map(|&x| f(x)).collect();
    hermitize(&(&v * real_diag(&fd) * v.adjoint()))
}

/// Lower Cholesky factor `L` with `a = L L†`.
pub fn chol_lower(a: &CMat) -> Result<CMat> {
    let ev = eigvalsh(a);
    let (lo, hi) = (ev[0], *ev.last().unwrap());
    if !(hi > 0.0) || lo < tol::PD_RATIO * hi {
        return Err(LabError::NotPositiveDefinite(if hi > 0.0 { lo / hi } else { f64::NAN }));
    }
    hermitize(a)
        .cholesky()
        .map(|ch| ch.l())
        .ok_or(LabError::NotPositiveDefinite(lo / hi))
}

pub fn lower_inverse(l: &CMat) -> CMat {
    let n = l.nrows();
    l.solve_lower_triangular(&identity(n)).expect("triangular factor is invertible")
}

pub fn inverse(a: &CMat) -> Result<CMat> {
    a.clone()
        .try_inverse()
        .ok_or_else(|| LabError::Invalid("singular matrix".into()))
}

pub fn singular_values(a: &CMat) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return vec![];
    }
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Thin SVD `a = U diag(σ) V†`: returns `(U, σ, V)`.
pub fn svd_thin(a: &CMat) -> (CMat, Vec<f64>, CMat) {
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let vt = svd.v_t.expect("right singular vectors requested");
    (u, svd.singular_values.iter().copied().collect(), vt.adjoint())
}

pub fn rank(a: &CMat) -> usize {
    let s = singular_values(a);
    match s.first() {
        None => 0,
        Some(&top) if top == 0.0 => 0,
        Some(&top) => s.iter().filter(|&&x| x > tol::RANK * top).count(),
    }
}

/// Euclidean orthonormal basis (as columns) of the column space of `a`.
pub fn orth(a: &CMat) -> CMat {
    let m = a.nrows();
    if a.ncols() == 0 {
        return CMat::zeros(m, 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let top = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| top > 0.0 && svd.singular_values[i] > tol::RANK * top)
        .collect();
    CMat::from_fn(m, keep.len(), |r, col| u[(r, keep[col])])
}

/// Relative residual of `v` after orthogonal projection onto the span of `q` (orthonormal columns).
pub fn span_residual(q: &CMat, v: &CVec) -> f64 {
    let nv = v.norm();
    if nv == 0.0 {
        return 0.0;
    }
    let proj = q * (q.adjoint() * v);
    (v - proj).norm() / nv
}

/// Column space of `small` is contained in that of `big`.
pub fn contains(big: &CMat, small: &CMat) -> bool {
    let q = orth(big);
    (0..small.ncols()).all(|j| span_residual(&q, &small.column(j).into_owned()) < tol::MEMBERSHIP)
}

/// Generalized eigenvalues of the pencil `(x, y)`: spectrum of `x^{-1} y`, ascending.
pub fn gen_eigs(x: &CMat, y: &CMat) -> Result<Vec<f64>> {
    let l = chol_lower(x)?;
    let li = lower_inverse(&l);
    Ok(eigvalsh(&(&li * y * li.adjoint())))
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    complex_gaussian(rng, n, n).qr().q()
}

/// Random positive definite matrix with log-eigenvalues uniform in `[-spread, spread]`.
pub fn random_pd<R: Rng + ?Sized>(rng: &mut R, n: usize, spread: f64) -> CMat {
    let u = random_unitary(rng, n);
    let d: Vec<f64> = (0..n).map(|_| rng.random_range(-spread..=spread).exp()).collect();
    hermitize(&(&u * real_diag(&d) * u.adjoint()))
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    hermitize(&complex_gaussian(rng, n, n))
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eigh_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_hermitian(&mut rng, 5);
        let (vals, v) = eigh(&a);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let back = &v * real_diag(&vals) * v.adjoint();
        assert!(max_abs(&(back - a)) < 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = real_diag(&[1.0, -1.0]);
        assert!(chol_lower(&a).is_err());
        let b = real_diag(&[1.0, 1e-14]);
        assert!(chol_lower(&b).is_err());
    }

    #[test]
    fn orth_and_rank() {
        let a = CMat::from_row_slice(3, 2, &[c(1.0), c(2.0), c(0.0), c(0.0), c(1.0), c(2.0)]);
        assert_eq!(rank(&a), 1);
        assert_eq!(orth(&a).ncols(), 1);
        assert!(contains(&identity(3), &a));
    }
}
