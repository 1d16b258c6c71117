//! Engines for models without quarter-turn symmetry.
//!
//! Vertex and face models with only half-turn symmetry use two corner
//! families, `A` for the north-west and south-east quadrants and `B` for the
//! north-east and south-west ones, a half-row family `F` and a half-column
//! family `G`. Bond models use the same layout shifted by half a lattice
//! spacing, so the corners lose their spin argument.
//!
//! Leg conventions (rows × columns), with `U/D/L/R` the half-axes leaving the
//! corner:
//!
//! ```text
//!   A (NW): U × L     B (NE): R × U
//!   B (SW): L × D     A (SE): D × R
//! ```
//!
//! `F(x, y)` is a half-row whose rows run along the leg of `x` and columns
//! along the leg of `y`, with `x` above `y` when it extends left and below
//! `y` when it extends right. `G(x, y)` is a half-column with `x` right of
//! `y` when it extends up and left of `y` when it extends down. Going round
//! the plane gives
//!
//! ```text
//!   Z1   = Σ_a Tr A(a)B(a)A(a)B(a)
//!   Zrow = Σ_ab Tr A(a)F(a,b)B(b)A(b)F(b,a)B(a)
//!   Zcol = Σ_ab Tr A(a)B(a)G(a,b)A(b)B(b)G(b,a)
//!   Z4   = Σ ω(a,b;c,d) Tr A(a)F(a,c)B(c)G(c,d)A(d)F(d,b)B(b)G(b,a)
//! ```
//!
//! and the estimate `Z1·Z4 / (Zrow·Zcol)`. For bond models the same traces
//! read `Tr (AB)²`, `Σ_e Tr A F(e) B A F(e) B`, `Σ_e Tr A B G(e) A B G(e)`
//! and `Σ ω(N,W,E,S) Tr A F(W) B G(S) A F(E) B G(N)`.

mod asym;

pub use asym::{
    estimate_asym, expand_asym, finite_partition_asym, init_asym, normalize_asym, partition_sums,
    reduce_asym, run_asym, AsymEnvironment, PartitionSums,
};
