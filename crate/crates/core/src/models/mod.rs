//! Constraint models as 0/1 weight tables on a 2×2 cell (or a vertex star),
//! plus finite-window enumeration, configuration transformations and the
//! model-file parser.
//!
//! Cell layout for vertex and face placement, top row `a b`, bottom row `c d`:
//!
//! ```text
//!   a ─ b
//!   │   │
//!   c ─ d
//! ```
//!
//! For bond placement the four states sit on the edges around one vertex,
//! `a` north, `b` west, `c` east, `d` south:
//!
//! ```text
//!       a
//!   b ──┼── c
//!       d
//! ```

mod builtin;
mod grid;
mod parse;
mod transform;

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

pub use builtin::{builtin, builtin_names, colouring, free, BUILTIN_NAMES};
pub use grid::{count_valid_grid, enumerate_valid_grid, GridConfig, ENUMERATION_GUARD_BITS};
pub use parse::parse_model_file;
pub use transform::{
    enumerate_spin_grids, is_valid_charge3, is_valid_even, map_charge_to_qcharge, map_even_to_pi,
    map_pi_to_evenface,
};

/// Largest alphabet accepted by the model-file parser and the builtins.
pub const MAX_ALPHABET: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    Vertex,
    Face,
    Bond,
}

impl Placement {
    pub fn is_bond(self) -> bool {
        self == Placement::Bond
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Placement::Vertex => "vertex",
            Placement::Face => "face",
            Placement::Bond => "bond",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Symmetry {
    /// Invariant under quarter turns.
    C4,
    /// Invariant under half turns only.
    C2,
}

impl fmt::Display for Symmetry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Symmetry::C4 => "C4",
            Symmetry::C2 => "C2",
        })
    }
}

/// A local 0/1 constraint with its metadata.
#[derive(Clone, PartialEq, Eq)]
pub struct ModelSpec {
    name: String,
    q: usize,
    placement: Placement,
    symmetry: Symmetry,
    weights: Vec<u8>,
    unstable_bound: bool,
}

impl ModelSpec {
    /// Builds a model and verifies the declared symmetry against the table.
    pub fn new(
        name: impl Into<String>,
        q: usize,
        placement: Placement,
        symmetry: Symmetry,
        weights: Vec<u8>,
    ) -> Result<Self> {
        let spec = ModelSpec::new_unchecked(name, q, placement, symmetry, weights)?;
        spec.verify_symmetry()?;
        Ok(spec)
    }

    /// Builds a model without checking the reflection symmetry. Rotational
    /// symmetry is still enforced, since every engine depends on it; this
    /// exists so that chiral tables can be fed to the engines in tests.
    pub fn new_unchecked(
        name: impl Into<String>,
        q: usize,
        placement: Placement,
        symmetry: Symmetry,
        weights: Vec<u8>,
    ) -> Result<Self> {
        let name = name.into();
        if q == 0 || q > MAX_ALPHABET {
            return Err(Error::InvalidModel(format!(
                "alphabet size {q} outside 1..={MAX_ALPHABET}"
            )));
        }
        if weights.len() != q.pow(4) {
            return Err(Error::InvalidModel(format!(
                "weight table has {} entries, expected {}",
                weights.len(),
                q.pow(4)
            )));
        }
        if let Some(w) = weights.iter().find(|&&w| w > 1) {
            return Err(Error::InvalidModel(format!("weight {w} is not 0 or 1")));
        }
        let spec = ModelSpec {
            name,
            q,
            placement,
            symmetry,
            weights,
            unstable_bound: false,
        };
        spec.verify_rotation()?;
        Ok(spec)
    }

    /// Builds a table by evaluating `rule` on every cell.
    pub fn from_rule(
        name: impl Into<String>,
        q: usize,
        placement: Placement,
        symmetry: Symmetry,
        rule: impl Fn(usize, usize, usize, usize) -> bool,
    ) -> Result<Self> {
        let mut weights = Vec::with_capacity(q.pow(4));
        for a in 0..q {
            for b in 0..q {
                for c in 0..q {
                    for d in 0..q {
                        weights.push(u8::from(rule(a, b, c, d)));
                    }
                }
            }
        }
        ModelSpec::new(name, q, placement, symmetry, weights)
    }

    pub(crate) fn with_unstable_bound(mut self) -> Self {
        self.unstable_bound = true;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn placement(&self) -> Placement {
        self.placement
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    /// Whether the bound computation is known to be numerically fragile.
    pub fn unstable_bound(&self) -> bool {
        self.unstable_bound
    }

    pub fn weights(&self) -> &[u8] {
        &self.weights
    }

    #[inline]
    pub fn index(&self, a: usize, b: usize, c: usize, d: usize) -> usize {
        ((a * self.q + b) * self.q + c) * self.q + d
    }

    #[inline]
    pub fn weight(&self, a: usize, b: usize, c: usize, d: usize) -> u8 {
        self.weights[self.index(a, b, c, d)]
    }

    #[inline]
    pub fn allowed(&self, a: usize, b: usize, c: usize, d: usize) -> bool {
        self.weight(a, b, c, d) != 0
    }

    /// All cells of weight 1, in lexicographic order.
    pub fn valid_cells(&self) -> Vec<[usize; 4]> {
        let q = self.q;
        let mut out = Vec::new();
        for a in 0..q {
            for b in 0..q {
                for c in 0..q {
                    for d in 0..q {
                        if self.allowed(a, b, c, d) {
                            out.push([a, b, c, d]);
                        }
                    }
                }
            }
        }
        out
    }

    /// Whether the table is unchanged by a plain left-right mirror (without
    /// complementing any states).
    pub fn has_plain_mirror(&self) -> bool {
        cells(self.q).all(|[a, b, c, d]| {
            let w = self.weight(a, b, c, d);
            match self.placement {
                Placement::Vertex | Placement::Face => self.weight(b, a, d, c) == w,
                Placement::Bond => self.weight(a, c, b, d) == w,
            }
        })
    }

    /// The same constraint seen after a quarter turn. For a vertex or face
    /// model this swaps the roles of rows and columns.
    pub fn rotated(&self) -> ModelSpec {
        let mut weights = vec![0u8; self.weights.len()];
        for [a, b, c, d] in cells(self.q) {
            let (ra, rb, rc, rd) = self.rot90(a, b, c, d);
            weights[self.index(a, b, c, d)] = self.weight(ra, rb, rc, rd);
        }
        ModelSpec {
            name: format!("{}_rotated", self.name),
            weights,
            ..self.clone()
        }
    }

    /// FNV-1a digest of everything that defines the model.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        eat(self.name.as_bytes());
        eat(&[0, self.q as u8]);
        eat(self.placement.to_string().as_bytes());
        eat(self.symmetry.to_string().as_bytes());
        eat(&self.weights);
        h
    }

    // Cell seen after a 90° rotation, in the placement's own coordinates.
    fn rot90(&self, a: usize, b: usize, c: usize, d: usize) -> (usize, usize, usize, usize) {
        match self.placement {
            Placement::Vertex | Placement::Face => (c, a, d, b),
            Placement::Bond => (b, d, a, c),
        }
    }

    fn verify_rotation(&self) -> Result<()> {
        for [a, b, c, d] in cells(self.q) {
            let w = self.weight(a, b, c, d);
            let (ra, rb, rc, rd) = self.rot90(a, b, c, d);
            if self.symmetry == Symmetry::C4 && self.weight(ra, rb, rc, rd) != w {
                return Err(self.violation("quarter-turn", [a, b, c, d]));
            }
            if self.weight(d, c, b, a) != w {
                return Err(self.violation("half-turn", [a, b, c, d]));
            }
        }
        Ok(())
    }

    fn verify_symmetry(&self) -> Result<()> {
        self.verify_rotation()?;
        let q = self.q;
        if self.has_plain_mirror() {
            return Ok(());
        }
        // Bond models may instead be symmetric under the mirror combined with
        // complementing the horizontal states (s ↦ q−1−s).
        if self.placement == Placement::Bond {
            let flipped_ok = cells(q).all(|[a, b, c, d]| {
                self.weight(a, q - 1 - c, q - 1 - b, d) == self.weight(a, b, c, d)
            });
            if flipped_ok {
                return Ok(());
            }
        }
        let bad = cells(q)
            .find(|&[a, b, c, d]| self.weight(b, a, d, c) != self.weight(a, b, c, d))
            .unwrap_or([0; 4]);
        Err(self.violation("left-right mirror", bad))
    }

    fn violation(&self, what: &str, cell: [usize; 4]) -> Error {
        Error::SymmetryViolation {
            model: self.name.clone(),
            detail: format!("{what} changes the weight of cell {cell:?}"),
        }
    }
}

pub(crate) fn cells(q: usize) -> impl Iterator<Item = [usize; 4]> {
    (0..q.pow(4)).map(move |i| [i / (q * q * q), (i / (q * q)) % q, (i / q) % q, i % q])
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("name", &self.name)
            .field("q", &self.q)
            .field("placement", &self.placement)
            .field("symmetry", &self.symmetry)
            .field(
                "valid_cells",
                &self.weights.iter().filter(|&&w| w == 1).count(),
            )
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_turn_is_checked() {
        // Forbids only a horizontal ⊖⊖ pair on the top row: not C4.
        let err = ModelSpec::from_rule("x", 2, Placement::Vertex, Symmetry::C4, |a, b, c, d| {
            !(a == 1 && b == 1) && !(c == 1 && d == 1)
        });
        assert!(matches!(err, Err(Error::SymmetryViolation { .. })));
        assert!(
            ModelSpec::from_rule("x", 2, Placement::Vertex, Symmetry::C2, |a, b, c, d| {
                !(a == 1 && b == 1) && !(c == 1 && d == 1)
            })
            .is_ok()
        );
    }

    #[test]
    fn chiral_tables_need_the_unchecked_constructor() {
        // Forbid the diagonal a-d only: half-turn symmetric, mirror-asymmetric.
        let rule = |a: usize, _b: usize, _c: usize, d: usize| !(a == 1 && d == 1);
        assert!(ModelSpec::from_rule("chiral", 2, Placement::Vertex, Symmetry::C2, rule).is_err());
        let mut w = Vec::new();
        for [a, b, c, d] in cells(2) {
            w.push(u8::from(rule(a, b, c, d)));
        }
        assert!(ModelSpec::new_unchecked("chiral", 2, Placement::Vertex, Symmetry::C2, w).is_ok());
    }

    #[test]
    fn rotation_swaps_rows_and_columns() {
        let rwim = builtin("rwim").unwrap();
        let r = rwim.rotated();
        // RWIM forbids horizontal ⊖⊖; the rotated table forbids vertical ones.
        assert!(!rwim.allowed(1, 1, 0, 0));
        assert!(rwim.allowed(1, 0, 1, 0));
        assert!(r.allowed(1, 1, 0, 0));
        assert!(!r.allowed(1, 0, 1, 0));
        assert_eq!(r.rotated().rotated().rotated().weights(), rwim.weights());
    }

    #[test]
    fn fingerprint_tracks_the_table() {
        let hs = builtin("hard_squares").unwrap();
        assert_eq!(
            hs.fingerprint(),
            builtin("hard_squares").unwrap().fingerprint()
        );
        assert_ne!(hs.fingerprint(), builtin("nak").unwrap().fingerprint());
    }
}
