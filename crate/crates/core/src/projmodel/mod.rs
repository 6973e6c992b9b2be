//! Torus-reduced geometry of `X = P(E*) → P¹` for split `E = ⊕ O(a_i)`: quantization,
//! dequantization, curvature, and the HYM and WZW functionals.
//!
//! Coordinates: base `u = |z|²/(1+|z|²)` (log-radial `ρ = log |z|²`), fiber simplex
//! `x_i = |w_i|²/Σ|w_j|²`. `ω_B` has mass one; fiber volumes are normalized to mass one.

mod field;
mod form;
mod model;

pub use field::{
    bundle_curvature, conformal_perturbation, critical_metric, critical_residual, hym_functional, is_delta_approx,
    mult_quotient_metric, ray_field, reference_field, BundleMetricField, FieldKind, GramFn, HymValue, LogDiag,
};
pub use form::{
    check_positivity, dequantize, fs_hilb_dense, fs_hilb_gap, fs_hilb_roundtrip, fs_identity_residual, fs_potential,
    hermite_einstein_residual, hilb_at, hilb_metric, hym_on_hilb, line_curvature, log_sum_exp, quotient_vs_hilb_ratio,
    reference_potential, wzw_functional, CurvatureGrid, FiberData, FiberedForm, PointValue, RatioInterval, WzwValue,
};
pub use model::{model_new, rho_derivatives, BasePt, GridSpec, RadialGrid, SplitModel};
