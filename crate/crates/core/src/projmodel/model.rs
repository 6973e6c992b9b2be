use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::quadrature;

/// `E = ⊕ O(a_i)` over `P¹`; `X = P(E*)` has fiber dimension `n = r - 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitModel {
    pub degrees: Vec<i64>,
}

impl SplitModel {
    pub fn new(degrees: Vec<i64>) -> Result<Self> {
        if degrees.is_empty() {
            return Err(LabError::Invalid("model needs at least one degree".into()));
        }
        Ok(Self { degrees })
    }

    pub fn r(&self) -> usize {
        self.degrees.len()
    }

    pub fn n(&self) -> usize {
        self.degrees.len() - 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub base_nodes: usize,
    pub fiber_nodes: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { base_nodes: 32, fiber_nodes: 16 }
    }
}

const MAX_BASE_NODES: usize = 4096;
const MAX_FIBER_NODES: usize = 256;

/// Gauss–Legendre nodes in `u ∈ [0,1]` and a collapsed product rule on the fiber simplex,
/// both with weights summing to one.
#[derive(Clone, Debug)]
pub struct RadialGrid {
    pub spec: GridSpec,
    pub base: Vec<(f64, f64)>,
    pub fiber: Vec<(Vec<f64>, f64)>,
}

impl RadialGrid {
    pub fn new(n: usize, spec: GridSpec) -> Result<Self> {
        if spec.base_nodes < 8 || spec.fiber_nodes < 8 {
            return Err(LabError::Invalid("grids need at least 8 nodes per dimension".into()));
        }
        if spec.base_nodes > MAX_BASE_NODES || spec.fiber_nodes > MAX_FIBER_NODES {
            return Err(LabError::CapExceeded {
                what: "grid nodes".into(),
                value: spec.base_nodes.max(spec.fiber_nodes),
                cap: MAX_BASE_NODES,
            });
        }
        Ok(Self {
            spec,
            base: quadrature::gl_interval(spec.base_nodes, 0.0, 1.0),
            fiber: quadrature::simplex_rule(n, spec.fiber_nodes),
        })
    }

    pub fn base_points(&self) -> impl Iterator<Item = BasePt> + '_ {
        self.base.iter().map(|&(u, _)| BasePt::from_u(u))
    }
}

pub fn model_new(degrees: &[i64], spec: GridSpec) -> Result<(SplitModel, RadialGrid)> {
    let model = SplitModel::new(degrees.to_vec())?;
    let grid = RadialGrid::new(model.n(), spec)?;
    Ok((model, grid))
}

/// A base point, `u = t/(1+t)`, `t = |z|²`, `ρ = log t`; `v = 1 - u` kept separately for accuracy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasePt {
    pub u: f64,
    pub v: f64,
    pub rho: f64,
}

impl BasePt {
    pub fn from_u(u: f64) -> Self {
        let v = 1.0 - u;
        Self { u, v, rho: u.ln() - v.ln() }
    }

    pub fn from_rho(rho: f64) -> Self {
        Self { u: 1.0 / (1.0 + (-rho).exp()), v: 1.0 / (1.0 + rho.exp()), rho }
    }

    /// `d²ψ/dρ²` for `ψ = log(1 + e^ρ)`, the density of `ω_B` in `ρ`.
    pub fn psi2(&self) -> f64 {
        self.u * self.v
    }

    pub fn shifted(&self, h: f64) -> Self {
        Self::from_rho(self.rho + h)
    }
}

/// First and second `ρ`-derivatives of a vector-valued function by centered differences
/// with one Richardson step.
pub fn rho_derivatives(f: &dyn Fn(&BasePt) -> Vec<f64>, pt: &BasePt, h: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let f0 = f(pt);
    let stencil = |h: f64| {
        let p = f(&pt.shifted(h));
        let m = f(&pt.shifted(-h));
        let d1: Vec<f64> = p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        let d2: Vec<f64> = p.iter().zip(&m).zip(&f0).map(|((a, b), c)| ((a - c) - (c - b)) / (h * h)).collect();
        (d1, d2)
    };
    let (a1, a2) = stencil(h);
    let (b1, b2) = stencil(0.5 * h);
    let rich = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(c, f)| (4.0 * f - c) / 3.0).collect::<Vec<f64>>();
    (f0, rich(&a1, &b1), rich(&a2, &b2))
}
