//! Photon-counting statistics of coherently driven, dissipative quantum
//! systems from counting-field-dressed Liouvillians.

pub mod bessel;
pub mod charpoly;
pub mod counting;
pub mod distributions;
pub mod error;
pub mod model_jc;
pub mod model_lambda;
pub mod perturbation;
pub mod superop;

pub use error::{Error, Result};
pub use superop::{Basis, CMatrix, CVector, GeneralizedDensityMatrix, Superoperator, C64};
