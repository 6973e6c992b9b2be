use crate::error::{LabError, Result};
use crate::linalg::{self, c, CMat};
use crate::multiindex::{factorial, sym_map, Monomials};
use crate::tol;

use super::{adapted_basis, Filtration, HermitianProduct};

/// `Sym^l H` on the monomial basis `v^{⊙α}`: `⟨v^{⊙α}, v^{⊙β}⟩ = per(G[α, β]) / l!`,
/// evaluated as `(β!/l!) Sym^l(G^T)[β, α]`.
pub fn sym_metric(h: &HermitianProduct, l: usize) -> Result<HermitianProduct> {
    if l == 0 {
        return Err(LabError::Invalid("symmetric power needs l >= 1".into()));
    }
    if l == 1 {
        return Ok(h.clone());
    }
    let mons = Monomials::new(h.dim(), l)?;
    let s = sym_map(&h.gram().transpose(), l)?;
    let lf = factorial(l as u32);
    let n = mons.len();
    let g = CMat::from_fn(n, n, |a, b| s[(b, a)] * c(mons.fact(b) / lf));
    HermitianProduct::from_computed(g)
}

/// Derivation extension of `A` to `Sym^l V`: `v^{⊙α} ↦ Σ_i α_i v^{⊙(α-ε_i)} ⊙ A v_i`.
pub fn sym_operator(a: &CMat, l: usize, h: &HermitianProduct) -> Result<CMat> {
    let defect = h.adjointness_defect(a);
    if defect > 1e-9 * linalg::max_abs(a).max(1.0) * linalg::max_abs(h.gram()).max(1.0) {
        return Err(LabError::NotHermitian(defect));
    }
    let d = a.nrows();
    let mons = Monomials::new(d, l)?;
    let mut out = CMat::zeros(mons.len(), mons.len());
    for (col, alpha) in mons.list.iter().enumerate() {
        for i in 0..d {
            if alpha[i] == 0 {
                continue;
            }
            let mut beta = alpha.clone();
            beta[i] -= 1;
            for j in 0..d {
                beta[j] += 1;
                let row = mons.index_of(&beta).unwrap();
                out[(row, col)] += a[(j, i)] * c(alpha[i] as f64);
                beta[j] -= 1;
            }
        }
    }
    Ok(out)
}

/// `Sym^l F`: with a basis `f_j` compatible with `F` of weights `w_j`,
/// `Sym^l F_μ = span{f^{⊙α} : α·w ≥ μ}`.
pub fn sym_filtration(f: &Filtration, l: usize) -> Result<Filtration> {
    if l == 0 {
        return Err(LabError::Invalid("symmetric power needs l >= 1".into()));
    }
    let ab = adapted_basis(&HermitianProduct::identity(f.dim()), f)?;
    let mons = Monomials::with_cap(f.dim(), l, tol::SYM_DIM_CAP)?;
    let basis = sym_map(&ab.basis, l)?;
    let weights: Vec<f64> = (0..mons.len()).map(|i| mons.dot(i, &ab.weights)).collect();
    Filtration::from_weighted_basis(&basis, &weights)
}
