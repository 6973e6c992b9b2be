//! Hermitian linear algebra of filtrations: weight operators, geodesic rays and segments,
//! quotients, symmetric powers.

mod filtration;
mod hermitian;
mod ops;
mod sym;

pub use filtration::{Filtration, WeightSpectrum};
pub use hermitian::{HermitianProduct, LinearSurjection};
pub use ops::{
    adapted_basis, dominates, geodesic_ray, geodesic_segment, loewner_gap, na_weight, op_norm, quotient_filtration,
    quotient_metric, restrict_operator, trace_abs_norm, weight_operator, AdaptedBasis,
};
pub use sym::{sym_filtration, sym_metric, sym_operator};
