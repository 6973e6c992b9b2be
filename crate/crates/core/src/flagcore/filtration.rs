use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::linalg::{self, CMat, C};

/// Decreasing filtration `V = F_{λ_1} ⊋ F_{λ_2} ⊋ … ⊋ F_{λ_q}` with `λ_1 < … < λ_q`,
/// left-continuous: `F_λ = F_{λ_i}` for `λ ∈ (λ_{i-1}, λ_i]`, and `F_λ = 0` past `λ_q`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "FiltrationJson", into = "FiltrationJson")]
pub struct Filtration {
    dim: usize,
    jumps: Vec<f64>,
    subspaces: Vec<CMat>,
}

/// Jump values repeated by the rank drop, sorted non-decreasing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSpectrum(pub Vec<f64>);

impl Filtration {
    pub fn new(jumps: Vec<f64>, subspaces: Vec<CMat>) -> Result<Self> {
        if jumps.is_empty() || jumps.len() != subspaces.len() {
            return Err(LabError::InvalidFiltration("need one subspace per jump".into()));
        }
        let dim = subspaces[0].nrows();
        let mut js: Vec<f64> = Vec::new();
        let mut ss: Vec<CMat> = Vec::new();
        for (j, s) in jumps.into_iter().zip(subspaces) {
            if !j.is_finite() {
                return Err(LabError::InvalidFiltration("non-finite jump".into()));
            }
            if s.nrows() != dim {
                return Err(LabError::DimensionMismatch { expected: dim, got: s.nrows() });
            }
            if linalg::rank(&s) != s.ncols() || s.ncols() == 0 {
                return Err(LabError::DegenerateBasis(format!("subspace at jump {j} lacks full column rank")));
            }
            if let Some(&last) = js.last() {
                if j < last {
                    return Err(LabError::InvalidFiltration("jumps must increase".into()));
                }
                if j == last {
                    log::warn!("coincident jump {j}: keeping the larger subspace");
                    continue;
                }
            }
            js.push(j);
            ss.push(s);
        }
        if ss[0].ncols() != dim {
            return Err(LabError::InvalidFiltration("first subspace must be the whole space".into()));
        }
        for w in ss.windows(2) {
            if w[1].ncols() >= w[0].ncols() {
                return Err(LabError::InvalidFiltration("dimensions must strictly decrease".into()));
            }
            if !linalg::contains(&w[0], &w[1]) {
                return Err(LabError::InvalidFiltration("subspaces are not nested".into()));
            }
        }
        Ok(Self { dim, jumps: js, subspaces: ss })
    }

    /// `F_λ = span{b_j : w_j ≥ λ}` for a basis `b` (columns) with weights `w`.
    pub fn from_weighted_basis(basis: &CMat, weights: &[f64]) -> Result<Self> {
        if basis.ncols() != weights.len() {
            return Err(LabError::DimensionMismatch { expected: basis.ncols(), got: weights.len() });
        }
        if linalg::rank(basis) != basis.nrows() || basis.ncols() != basis.nrows() {
            return Err(LabError::DegenerateBasis("weighted basis must be a basis".into()));
        }
        let mut levels: Vec<f64> = weights.to_vec();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        let subspaces = levels
            .iter()
            .map(|&lam| {
                let cols: Vec<usize> = (0..weights.len()).filter(|&j| weights[j] >= lam).collect();
                basis.select_columns(cols.iter())
            })
            .collect();
        Self::new(levels, subspaces)
    }

    /// Filtration by coordinate subspaces: `e_j` carries weight `w_j`.
    pub fn coordinate(weights: &[f64]) -> Result<Self> {
        Self::from_weighted_basis(&linalg::identity(weights.len()), weights)
    }

    pub fn trivial(dim: usize, lambda: f64) -> Self {
        Self { dim, jumps: vec![lambda], subspaces: vec![linalg::identity(dim)] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn jumps(&self) -> &[f64] {
        &self.jumps
    }

    pub fn subspaces(&self) -> &[CMat] {
        &self.subspaces
    }

    pub fn dims(&self) -> Vec<usize> {
        self.subspaces.iter().map(|s| s.ncols()).collect()
    }

    pub fn spectrum(&self) -> WeightSpectrum {
        let d = self.dims();
        let mut out = Vec::with_capacity(self.dim);
        for i in 0..d.len() {
            let next = d.get(i + 1).copied().unwrap_or(0);
            out.extend(std::iter::repeat_n(self.jumps[i], d[i] - next));
        }
        WeightSpectrum(out)
    }

    /// `F_λ` under the left-continuity convention; an empty basis past the last jump.
    pub fn subspace_at(&self, lambda: f64) -> CMat {
        match self.jumps.iter().position(|&j| j >= lambda) {
            Some(i) => self.subspaces[i].clone(),
            None => CMat::zeros(self.dim, 0),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SubspaceJson {
    cols: usize,
    /// Row-major `[re, im]` pairs of the basis matrix.
    data: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct FiltrationJson {
    dim: usize,
    jumps: Vec<f64>,
    subspaces: Vec<SubspaceJson>,
}

impl From<Filtration> for FiltrationJson {
    fn from(f: Filtration) -> Self {
        let subspaces = f
            .subspaces
            .iter()
            .map(|s| SubspaceJson {
                cols: s.ncols(),
                data: (0..s.nrows())
                    .flat_map(|i| (0..s.ncols()).map(move |j| (i, j)))
                    .map(|(i, j)| [s[(i, j)].re, s[(i, j)].im])
                    .collect(),
            })
            .collect();
        FiltrationJson { dim: f.dim, jumps: f.jumps, subspaces }
    }
}

impl TryFrom<FiltrationJson> for Filtration {
    type Error = LabError;
    fn try_from(j: FiltrationJson) -> Result<Self> {
        let mut subs = Vec::new();
        for s in j.subspaces {
            if s.data.len() != s.cols * j.dim {
                return Err(LabError::DimensionMismatch { expected: s.cols * j.dim, got: s.data.len() });
            }
            subs.push(CMat::from_fn(j.dim, s.cols, |r, col| {
                let [re, im] = s.data[r * s.cols + col];
                C::new(re, im)
            }));
        }
        Filtration::new(j.jumps, subs)
    }
}
