use super::{ModelSpec, Placement, Symmetry, MAX_ALPHABET};
use crate::error::{Error, Result};

/// Names accepted by [`builtin`]; `colouring(q)` and `free(q)` take an
/// alphabet size in parentheses.
pub const BUILTIN_NAMES: &[&str] = &[
    "hard_squares",
    "nak",
    "rwim",
    "colouring(q)",
    "even_face",
    "q_charge",
    "dimer",
    "pi",
    "free(q)",
];

pub fn builtin_names() -> &'static [&'static str] {
    BUILTIN_NAMES
}

/// Looks up a built-in model by name.
pub fn builtin(name: &str) -> Result<ModelSpec> {
    let key = name.trim().to_ascii_lowercase();
    if let Some(q) = parameter(&key, &["colouring", "coloring"])? {
        return colouring(q);
    }
    if let Some(q) = parameter(&key, &["free"])? {
        return free(q);
    }
    match key.as_str() {
        "hard_squares" | "hard-squares" | "hardsquares" => hard_squares(),
        "nak" => nak(),
        "rwim" => rwim(),
        "even_face" | "even-face" => even_face(),
        "q_charge" | "q-charge" | "qcharge" => q_charge(),
        "dimer" | "dimers" => dimer(),
        "pi" | "p_i" | "p-i" => pi(),
        _ => Err(Error::UnknownModel(name.to_string())),
    }
}

// Parses `stem(q)` or `stemq`; returns None if `key` has a different stem.
fn parameter(key: &str, stems: &[&str]) -> Result<Option<usize>> {
    for stem in stems {
        if let Some(rest) = key.strip_prefix(stem) {
            let digits = rest
                .trim_start_matches(['(', '_', '-'])
                .trim_end_matches(')');
            return digits
                .parse::<usize>()
                .map(Some)
                .map_err(|_| Error::UnknownModel(format!("{key} (expected {stem}(q))")));
        }
    }
    Ok(None)
}

/// No two ⊖ spins joined by a lattice bond.
fn hard_squares() -> Result<ModelSpec> {
    ModelSpec::from_rule(
        "hard_squares",
        2,
        Placement::Vertex,
        Symmetry::C4,
        |a, b, c, d| !(a & b == 1 || c & d == 1 || a & c == 1 || b & d == 1),
    )
}

/// At most one ⊖ spin in every 2×2 cell.
fn nak() -> Result<ModelSpec> {
    ModelSpec::from_rule("nak", 2, Placement::Vertex, Symmetry::C4, |a, b, c, d| {
        a + b + c + d <= 1
    })
}

/// No two ⊖ spins joined by a horizontal bond or a cell diagonal.
fn rwim() -> Result<ModelSpec> {
    ModelSpec::from_rule("rwim", 2, Placement::Vertex, Symmetry::C2, |a, b, c, d| {
        !(a & b == 1 || c & d == 1 || a & d == 1 || b & c == 1)
    })
}

/// Proper colourings of the square lattice with `q` colours.
pub fn colouring(q: usize) -> Result<ModelSpec> {
    if !(2..=MAX_ALPHABET).contains(&q) {
        return Err(Error::InvalidModel(format!(
            "colouring needs 2 <= q <= {MAX_ALPHABET}, got {q}"
        )));
    }
    ModelSpec::from_rule(
        format!("colouring({q})"),
        q,
        Placement::Vertex,
        Symmetry::C4,
        |a, b, c, d| a != b && c != d && a != c && b != d,
    )
}

/// Unconstrained spins; growth rate exactly `q`.
pub fn free(q: usize) -> Result<ModelSpec> {
    if !(1..=MAX_ALPHABET).contains(&q) {
        return Err(Error::InvalidModel(format!(
            "free model needs 1 <= q <= {MAX_ALPHABET}, got {q}"
        )));
    }
    ModelSpec::from_rule(
        format!("free({q})"),
        q,
        Placement::Vertex,
        Symmetry::C4,
        |_, _, _, _| true,
    )
}

/// Face spins; a cell is invalid exactly when two of its four spins are ⊖.
fn even_face() -> Result<ModelSpec> {
    ModelSpec::from_rule(
        "even_face",
        2,
        Placement::Face,
        Symmetry::C4,
        |a, b, c, d| a + b + c + d != 2,
    )
}

/// Cumulative-charge bond states 0..3: moving east or south across a vertex
/// changes the state by the same ±1.
fn q_charge() -> Result<ModelSpec> {
    ModelSpec::from_rule(
        "q_charge",
        4,
        Placement::Bond,
        Symmetry::C2,
        |a, b, c, d| {
            let (a, b, c, d) = (a as i32, b as i32, c as i32, d as i32);
            d - a == c - b && (d - a).abs() == 1
        },
    )
    .map(ModelSpec::with_unstable_bound)
}

/// Fully packed dimers: exactly one occupied bond at every vertex.
fn dimer() -> Result<ModelSpec> {
    ModelSpec::from_rule("dimer", 2, Placement::Bond, Symmetry::C4, |a, b, c, d| {
        a + b + c + d == 1
    })
}

/// Pair/impair bond labels (p = 0, i = 1): a vertex has no i bonds, or one
/// horizontal and one vertical i bond.
fn pi() -> Result<ModelSpec> {
    ModelSpec::from_rule("pi", 2, Placement::Bond, Symmetry::C4, |a, b, c, d| {
        (a + b + c + d == 0) || (b + c == 1 && a + d == 1)
    })
}
