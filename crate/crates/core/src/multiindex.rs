//! Multi-indices `|α| = l` in `r` variables and the symmetric-power functor on matrices.

use std::collections::HashMap;

use crate::error::{LabError, Result};
use crate::linalg::{c, CMat, C};
use crate::tol;

/// `C(n, k)`, `None` on overflow.
pub fn binomial(n: usize, k: usize) -> Option<usize> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return None;
        }
    }
    Some(acc as usize)
}

/// `dim Sym^l C^r`.
pub fn sym_dim(r: usize, l: usize) -> Option<usize> {
    if r == 0 {
        return Some(usize::from(l == 0));
    }
    binomial(l + r - 1, r - 1)
}

pub fn check_sym_dim(r: usize, l: usize, cap: usize) -> Result<usize> {
    match sym_dim(r, l) {
        Some(d) if d <= cap => Ok(d),
        Some(d) => Err(LabError::CapExceeded { what: format!("dim Sym^{l} C^{r}"), value: d, cap }),
        None => Err(LabError::CapExceeded { what: format!("dim Sym^{l} C^{r}"), value: usize::MAX, cap }),
    }
}

pub fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

pub fn ln_factorial(n: u32) -> f64 {
    (1..=n).map(|i| (i as f64).ln()).sum()
}

/// Monomials of total degree `l` in `r` variables, graded-lex descending:
/// `(l,0,…,0)` first, `(0,…,0,l)` last.
#[derive(Debug, Clone)]
pub struct Monomials {
    pub r: usize,
    pub l: usize,
    pub list: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
}

impl Monomials {
    pub fn new(r: usize, l: usize) -> Result<Self> {
        Self::with_cap(r, l, tol::SYM_DIM_CAP)
    }

    pub fn with_cap(r: usize, l: usize, cap: usize) -> Result<Self> {
        if r == 0 {
            return Err(LabError::Invalid("monomials need at least one variable".into()));
        }
        check_sym_dim(r, l, cap)?;
        let mut list = Vec::new();
        let mut cur = vec![0u32; r];
        fill(&mut list, &mut cur, 0, l as u32);
        let index = list.iter().enumerate().map(|(i, a)| (a.clone(), i)).collect();
        Ok(Self { r, l, list, index })
    }

    pub fn len(&self) -> usize {
        self.list.len()
    }

    pub fn is_empty(&self) -> bool {
        self.list.is_empty()
    }

    pub fn index_of(&self, alpha: &[u32]) -> Option<usize> {
        self.index.get(alpha).copied()
    }

    /// `α!`
    pub fn fact(&self, i: usize) -> f64 {
        self.list[i].iter().map(|&a| factorial(a)).product()
    }

    /// `α · w`
    pub fn dot(&self, i: usize, w: &[f64]) -> f64 {
        self.list[i].iter().zip(w).map(|(&a, &x)| a as f64 * x).sum()
    }

    pub fn idot(&self, i: usize, w: &[i64]) -> i64 {
        self.list[i].iter().zip(w).map(|(&a, &x)| a as i64 * x).sum()
    }
}

fn fill(out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>, pos: usize, left: u32) {
    if pos + 1 == cur.len() {
        cur[pos] = left;
        out.push(cur.clone());
        return;
    }
    for a in (0..=left).rev() {
        cur[pos] = a;
        fill(out, cur, pos + 1, left - a);
    }
    cur[pos] = 0;
}

/// `Sym^l(M)` for `M : C^{d_in} → C^{d_out}` in monomial bases:
/// `S[γ, α] = [x^γ] Π_i (Σ_j M_{ji} x_j)^{α_i}`.
pub fn sym_map(m: &CMat, l: usize) -> Result<CMat> {
    let (dout, din) = (m.nrows(), m.ncols());
    let src = Monomials::new(din, l)?;
    let levels: Vec<Monomials> = (0..=l).map(|d| Monomials::new(dout, d)).collect::<Result<_>>()?;
    let mut out = CMat::zeros(levels[l].len(), src.len());
    for (col, alpha) in src.list.iter().enumerate() {
        let mut poly = vec![c(1.0)];
        let mut deg = 0;
        for (i, &ai) in alpha.iter().enumerate() {
            for _ in 0..ai {
                let mut next = vec![C::new(0.0, 0.0); levels[deg + 1].len()];
                for (pi, coeff) in poly.iter().enumerate() {
                    if coeff.norm() == 0.0 {
                        continue;
                    }
                    let mut mono = levels[deg].list[pi].clone();
                    for j in 0..dout {
                        let mji = m[(j, i)];
                        if mji.norm() == 0.0 {
                            continue;
                        }
                        mono[j] += 1;
                        next[levels[deg + 1].index_of(&mono).unwrap()] += coeff * mji;
                        mono[j] -= 1;
                    }
                }
                poly = next;
                deg += 1;
            }
        }
        for (g, v) in poly.into_iter().enumerate() {
            out[(g, col)] = v;
        }
    }
    Ok(out)
}

/// The multiplication map `Sym^l(Sym^k C^r) → Sym^{kl} C^r` on monomial bases,
/// with the source and target monomial sets.
pub fn multiplication_map(r: usize, k: usize, l: usize) -> Result<(CMat, Monomials, Monomials, Monomials)> {
    let inner = Monomials::new(r, k)?;
    let outer = Monomials::new(inner.len(), l)?;
    let target = Monomials::new(r, k * l)?;
    let mut p = CMat::zeros(target.len(), outer.len());
    for (col, gamma) in outer.list.iter().enumerate() {
        let mut beta = vec![0u32; r];
        for (a, &g) in gamma.iter().enumerate() {
            for (b, &x) in beta.iter_mut().zip(&inner.list[a]) {
                *b += g * x;
            }
        }
        p[(target.index_of(&beta).unwrap(), col)] = c(1.0);
    }
    Ok((p, inner, outer, target))
}
