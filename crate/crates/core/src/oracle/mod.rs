//! Ground truth the engines are tested against: strip transfer matrices,
//! one-dimensional chains, the bound matrices written out in full, and the
//! Q-charge / p-i mapping counts. Exhaustive window counts live in
//! [`crate::models::count_valid_grid`].
//!
//! Everything here is assembled directly from the cell weights and shares
//! only the arithmetic kernel with the corner-transfer-matrix engines.

mod explicit;
mod mapping;
mod strip;

use serde::Serializer;

use crate::numerics::BigReal;

pub use explicit::{dense_bound, explicit_r, explicit_s, DenseBound, EXPLICIT_GUARD};
pub use mapping::{
    column_inversion_check, homomorphism_check, parity_restriction_check, q_to_pi,
    ColumnInversionReport, HomomorphismReport, ParityReport,
};
pub use strip::{
    chain_matrix, dominant_eigenvalue, lambda_sequence, strip_lambda, strip_matrix, Boundary,
    StripSpectrum, TransferMatrix, STRIP_GUARD,
};

/// Serialises a [`BigReal`] as a decimal string with every digit the
/// precision supports.
pub fn decimal<S: Serializer>(value: &BigReal, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&value.to_decimal(BigReal::decimal_digits(value.precision())))
}
