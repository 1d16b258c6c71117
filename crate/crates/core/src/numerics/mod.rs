//! Arbitrary-precision dense linear algebra on top of MPFR.

mod bigreal;
mod eigen;
mod matrix;

pub use bigreal::{check_precision, BigReal, DEFAULT_PRECISION, MIN_PRECISION};
pub use eigen::{
    dominant_invariant_basis, dominant_invariant_basis_from, fix_column_signs, magnitude_order,
    orthonormalize_columns, sym_eig, sym_eig_with_guess, InvariantBasis, SubspaceOptions, SymEig,
    TieWarning,
};
pub use matrix::{chain, congruence, mat_mul, mul_auto, Matrix};
