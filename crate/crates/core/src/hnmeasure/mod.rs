//! Harder–Narasimhan slope measures of the split model and asymptotic cohomology.

mod cohom;
mod measure;

pub use cohom::{
    eta_k, eta_limit, h0_p1, h1_p1, hhat0_formula, hhat1_formula, hhat_exact, rhs_main_theorem, split_sym_slopes,
};
pub use measure::{
    abs_moment, complete_homogeneous, moment, monte_carlo, wasserstein1, DiscreteMeasure, SimplexPushforwardMeasure,
    SlopeMeasure, SlopeVector,
};
