use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::linalg::{self, c, CMat, CVec, C};
use crate::tol;

/// Positive-definite Hermitian product, stored by its Gram matrix `G_ij = ⟨e_i, e_j⟩`
/// (conjugate-linear in the first slot), so `‖v‖² = v† G v`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "GramJson", into = "GramJson")]
pub struct HermitianProduct {
    gram: CMat,
    chol: CMat,
}

impl HermitianProduct {
    pub fn new(gram: CMat) -> Result<Self> {
        if gram.nrows() != gram.ncols() {
            return Err(LabError::DimensionMismatch { expected: gram.nrows(), got: gram.ncols() });
        }
        if gram.nrows() == 0 {
            return Err(LabError::Invalid("empty Gram matrix".into()));
        }
        let dev = linalg::herm_deviation(&gram);
        if dev > tol::HERMITIAN * linalg::max_abs(&gram).max(1.0) {
            return Err(LabError::NotHermitian(dev));
        }
        let gram = linalg::hermitize(&gram);
        let chol = linalg::chol_lower(&gram)?;
        Ok(Self { gram, chol })
    }

    /// Constructor for Gram matrices produced by internal arithmetic; symmetrizes first.
    pub fn from_computed(gram: CMat) -> Result<Self> {
        Self::new(linalg::hermitize(&gram))
    }

    pub fn identity(n: usize) -> Self {
        Self::new(linalg::identity(n)).expect("identity is positive definite")
    }

    pub fn from_diag(d: &[f64]) -> Result<Self> {
        Self::new(linalg::real_diag(d))
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn gram(&self) -> &CMat {
        &self.gram
    }

    /// Lower Cholesky factor `L`, `G = L L†`.
    pub fn chol(&self) -> &CMat {
        &self.chol
    }

    pub fn inner(&self, x: &CVec, y: &CVec) -> C {
        (x.adjoint() * &self.gram * y)[(0, 0)]
    }

    pub fn norm_sq(&self, v: &CVec) -> f64 {
        self.inner(v, v).re
    }

    /// Matrix of the endomorphism `a` in an `H`-orthonormal basis: `L† a L^{-†}`.
    pub fn whiten(&self, a: &CMat) -> CMat {
        let li = linalg::lower_inverse(&self.chol);
        self.chol.adjoint() * a * li.adjoint()
    }

    /// Inverse of [`whiten`](Self::whiten).
    pub fn unwhiten(&self, a: &CMat) -> CMat {
        let li = linalg::lower_inverse(&self.chol);
        li.adjoint() * a * self.chol.adjoint()
    }

    /// Largest deviation of `a` from being `H`-self-adjoint (i.e. `G a` Hermitian).
    pub fn adjointness_defect(&self, a: &CMat) -> f64 {
        linalg::herm_deviation(&(&self.gram * a))
    }

    /// Generalized eigenvalues of `other` against `self` (spectrum of `G_self^{-1} G_other`).
    pub fn ratio_eigs(&self, other: &HermitianProduct) -> Result<Vec<f64>> {
        if self.dim() != other.dim() {
            return Err(LabError::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        linalg::gen_eigs(&self.gram, &other.gram)
    }

    /// `self ≥ other` as norms, up to relative slack `tol`.
    pub fn dominates_norm(&self, other: &HermitianProduct, tol: f64) -> Result<bool> {
        Ok(*self.ratio_eigs(other)?.last().unwrap() <= 1.0 + tol)
    }
}

#[derive(Serialize, Deserialize)]
struct GramJson {
    dim: usize,
    /// Row-major `[re, im]` pairs.
    gram: Vec<[f64; 2]>,
}

impl From<HermitianProduct> for GramJson {
    fn from(h: HermitianProduct) -> Self {
        let n = h.dim();
        let mut gram = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let z = h.gram[(i, j)];
                gram.push([z.re, z.im]);
            }
        }
        GramJson { dim: n, gram }
    }
}

impl TryFrom<GramJson> for HermitianProduct {
    type Error = LabError;
    fn try_from(j: GramJson) -> Result<Self> {
        if j.gram.len() != j.dim * j.dim {
            return Err(LabError::DimensionMismatch { expected: j.dim * j.dim, got: j.gram.len() });
        }
        HermitianProduct::new(CMat::from_fn(j.dim, j.dim, |r, col| {
            let [re, im] = j.gram[r * j.dim + col];
            C::new(re, im)
        }))
    }
}

/// Full-row-rank linear map `p : V → Q`.
#[derive(Clone, Debug)]
pub struct LinearSurjection {
    matrix: CMat,
}

impl LinearSurjection {
    pub fn new(matrix: CMat) -> Result<Self> {
        let rk = linalg::rank(&matrix);
        if rk != matrix.nrows() || matrix.nrows() == 0 {
            return Err(LabError::RankDeficient { rank: rk, needed: matrix.nrows() });
        }
        Ok(Self { matrix })
    }

    pub fn identity(n: usize) -> Self {
        Self { matrix: linalg::identity(n) }
    }

    /// The row vector `(c_1, …, c_n)` as a map to `C`.
    pub fn row(coeffs: &[f64]) -> Result<Self> {
        Self::new(CMat::from_row_iterator(1, coeffs.len(), coeffs.iter().map(|&x| c(x))))
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn source_dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn target_dim(&self) -> usize {
        self.matrix.nrows()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let h = HermitianProduct::new(CMat::from_row_slice(
            2,
            2,
            &[c(2.0), C::new(0.5, 0.25), C::new(0.5, -0.25), c(1.0)],
        ))
        .unwrap();
        let s = serde_json::to_string(&h).unwrap();
        let back: HermitianProduct = serde_json::from_str(&s).unwrap();
        assert!(linalg::max_abs(&(back.gram() - h.gram())) == 0.0);
    }

    #[test]
    fn rejects_non_hermitian_and_indefinite() {
        let a = CMat::from_row_slice(2, 2, &[c(1.0), c(0.5), c(0.0), c(1.0)]);
        assert!(matches!(HermitianProduct::new(a), Err(LabError::NotHermitian(_))));
        assert!(matches!(HermitianProduct::from_diag(&[1.0, -2.0]), Err(LabError::NotPositiveDefinite(_))));
    }

    #[test]
    fn surjection_rank() {
        assert!(LinearSurjection::new(CMat::zeros(1, 2)).is_err());
        assert!(LinearSurjection::row(&[1.0, 1.0]).is_ok());
    }
}
