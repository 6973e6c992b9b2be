//! Every tolerance and cap used by the lab, in one place.

/// Entrywise Hermitian check on Gram matrices.
pub const HERMITIAN: f64 = 1e-12;
/// Reject Gram matrices with `min eig < PD_RATIO * max eig`.
pub const PD_RATIO: f64 = 1e-12;
/// Relative singular-value cutoff for numerical rank.
pub const RANK: f64 = 1e-9;
/// Relative residual below which a vector counts as a member of a subspace.
pub const MEMBERSHIP: f64 = 1e-8;
/// Cap on `dim Sym^l V`.
pub const SYM_DIM_CAP: usize = 20_000;
/// Cap on the rank `N_k` of the direct image in the geometric model.
pub const NK_CAP: usize = 256;
/// Cap on moment order.
pub const MOMENT_ORDER_CAP: u32 = 12;

/// Relative tolerance of adaptive Gauss–Legendre integration.
pub const ADAPT_RTOL: f64 = 1e-10;
/// Absolute floor of adaptive Gauss–Legendre integration.
pub const ADAPT_ATOL: f64 = 1e-12;
/// Maximum bisection depth of the adaptive integrator.
pub const ADAPT_MAX_DEPTH: u32 = 40;
/// Quadrature convergence check for `Hilb` (relative change under refinement).
pub const HILB_REFINE: f64 = 1e-6;
/// Fiber Hessian eigenvalue floor for positivity of relatively Kähler forms.
pub const FIBER_POSITIVITY: f64 = 1e-8;
/// Step in the log-radial base coordinate for centered differences.
pub const FD_STEP: f64 = 0.02;
/// Curvature is evaluated at `u` clamped to `[c, 1 - c]`: dividing finite differences by
/// `ψ'' = uv` amplifies rounding without bound at the poles, where the curvature is continuous.
pub const CURVATURE_POLE_CLAMP: f64 = 1e-6;

/// Slack on the sharp lower bound `WZW >= rhs`.
pub const LOWER_BOUND_SLACK: f64 = 5e-3;
/// Product saturation tolerance.
pub const PRODUCT_SATURATION: f64 = 2e-3;
/// Chern–Weil conservation of the signed integral.
pub const CONSERVATION: f64 = 1e-5;
/// Slack for `HYM / (k N_k) >= abs_moment(eta_k)` (finite-difference curvature).
pub const HYM_LOWER_SLACK: f64 = 1e-6;
/// Slack when checking a sequence is non-increasing (quadrature noise).
pub const MONOTONE_SLACK: f64 = 1e-6;
/// Loewner comparisons in property suites.
pub const LOEWNER: f64 = 1e-9;
/// Floor of the `Hilb ∘ FS` matrix inequality.
pub const HILB_FS_FLOOR: f64 = 1e-9;
/// Off-diagonal curvature scaling along rays.
pub const OFFDIAG_SCALING: f64 = 1e-4;
/// Finite-difference step and tolerance for the quotient-derivative identity.
pub const DERIV_STEP: f64 = 1e-4;
pub const DERIV_TOL: f64 = 1e-6;
/// Log-velocity constancy along rays.
pub const LOG_VELOCITY: f64 = 1e-10;

/// Default Monte Carlo seed.
pub const DEFAULT_SEED: u64 = 0x5A57_0001;
