//! Numerical laboratory for quantization and dequantization on split projective bundles
//! `X = P(E*) → P¹`, `E = ⊕ O(a_i)`: filtrations and weight operators, Harder–Narasimhan
//! measures, and the Wess–Zumino–Witten functional.

pub mod error;
pub mod experiments;
pub mod flagcore;
pub mod hnmeasure;
pub mod linalg;
pub mod multiindex;
pub mod projmodel;
pub mod props;
pub mod quadrature;
pub mod seed;
pub mod tol;

pub use error::{LabError, Result};
