//! Counting checks for the maps between the Q-charge and p-i bond models.
//!
//! States: Q-charge bonds carry 0..=3, p-i bonds carry p = 0 and i = 1.
//! The homomorphism sends Q-charge 0 and 3 to i, and 1 and 2 to p.

use std::collections::{BTreeMap, HashSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{builtin, count_valid_grid, enumerate_valid_grid, GridConfig, ModelSpec};
use crate::oracle::strip::chain_matrix;

const P: u8 = 0;
const I: u8 = 1;

/// Image of a Q-charge state under the homomorphism.
pub fn q_to_pi(state: u8) -> u8 {
    if state == 0 || state == 3 {
        I
    } else {
        P
    }
}

fn walks(chain: &[Vec<u64>], len: usize) -> Vec<Vec<u8>> {
    let q = chain.len();
    let mut out: Vec<Vec<u8>> = (0..q as u8).map(|s| vec![s]).collect();
    for _ in 1..len {
        out = out
            .into_iter()
            .flat_map(|w| {
                let last = *w.last().unwrap() as usize;
                (0..q)
                    .filter(move |&t| chain[last][t] > 0)
                    .map(move |t| {
                        let mut next = w.clone();
                        next.push(t as u8);
                        next
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
    }
    out
}

/// One-dimensional strings of both models and the preimage counts of the
/// homomorphism.
#[derive(Clone, Debug, Serialize)]
pub struct HomomorphismReport {
    pub length: usize,
    pub q_charge_strings: u64,
    pub pi_strings: u64,
    /// Whether every Q-charge string maps to a valid p-i string.
    pub images_valid: bool,
    /// Smallest and largest number of preimages of a p-i string.
    pub min_preimages: u64,
    pub max_preimages: u64,
    pub two_to_one: bool,
}

/// Enumerates both chains of length `len` (at most 20) and checks that the
/// map is exactly two to one.
pub fn homomorphism_check(len: usize) -> Result<HomomorphismReport> {
    if !(1..=20).contains(&len) {
        return Err(Error::InvalidConfig(format!(
            "string length {len} outside 1..=20"
        )));
    }
    let qc = chain_matrix(&builtin("q_charge")?);
    let pi = chain_matrix(&builtin("pi")?);
    let q_strings = walks(&qc, len);
    let pi_strings = walks(&pi, len);
    let valid_pi: HashSet<&Vec<u8>> = pi_strings.iter().collect();
    let mut preimages: BTreeMap<Vec<u8>, u64> = pi_strings.iter().map(|s| (s.clone(), 0)).collect();
    let mut images_valid = true;
    for s in &q_strings {
        let image: Vec<u8> = s.iter().map(|&x| q_to_pi(x)).collect();
        if !valid_pi.contains(&image) {
            images_valid = false;
            continue;
        }
        *preimages.get_mut(&image).unwrap() += 1;
    }
    let min_preimages = preimages.values().copied().min().unwrap_or(0);
    let max_preimages = preimages.values().copied().max().unwrap_or(0);
    Ok(HomomorphismReport {
        length: len,
        q_charge_strings: q_strings.len() as u64,
        pi_strings: pi_strings.len() as u64,
        images_valid,
        min_preimages,
        max_preimages,
        two_to_one: images_valid && min_preimages == 2 && max_preimages == 2,
    })
}

/// Q-charge windows with fixed bond parities against p-i windows.
#[derive(Clone, Debug, Serialize)]
pub struct ParityReport {
    pub width: usize,
    pub height: usize,
    pub q_charge_total: u64,
    pub q_charge_restricted: u64,
    pub pi_count: u64,
    /// Whether the restricted windows map injectively onto valid p-i windows.
    pub bijective: bool,
    pub equal: bool,
}

// Parity a bond must have under the restriction. A line parallel to y = x
// through the bonds west and north of vertex (0, 0) fixes both to 0 or 2;
// because states change by ±1 across every vertex, a bond west or north of
// vertex (r, j) then has the parity of r + j. The horizontal bond east of
// the last vertex of a row counts as west of vertex (r, width).
fn parity_ok(config: &GridConfig) -> bool {
    let (w, h) = (config.width, config.height);
    let rows_ok = (0..h).all(|r| (0..=w).all(|j| config.h_bond(r, j) as usize % 2 == (r + j) % 2));
    let cols_ok = (0..=h).all(|r| (0..w).all(|j| config.v_bond(r, j) as usize % 2 == (r + j) % 2));
    rows_ok && cols_ok
}

/// Counts Q-charge configurations on a `width × height` vertex window whose
/// bonds obey the diagonal parity restriction, and valid p-i configurations
/// on the same window; maps the former onto the latter state by state.
pub fn parity_restriction_check(width: usize, height: usize) -> Result<ParityReport> {
    if width == 0 || height == 0 || width > 4 || height > 4 {
        return Err(Error::InvalidConfig(format!(
            "window {width}x{height} outside 1..=4"
        )));
    }
    let qc: ModelSpec = builtin("q_charge")?;
    let pi = builtin("pi")?;
    let all = enumerate_valid_grid(&qc, width, height)?;
    let restricted: Vec<&GridConfig> = all.iter().filter(|c| parity_ok(c)).collect();
    let pi_count = count_valid_grid(&pi, width, height)?;
    let mut seen = HashSet::new();
    let mut bijective = true;
    for c in &restricted {
        let image = GridConfig {
            states: c.states.iter().map(|&s| q_to_pi(s)).collect(),
            ..(*c).clone()
        };
        bijective &= image.is_valid_for(&pi) && seen.insert(image);
    }
    bijective &= seen.len() as u64 == pi_count;
    Ok(ParityReport {
        width,
        height,
        q_charge_total: all.len() as u64,
        q_charge_restricted: restricted.len() as u64,
        pi_count,
        bijective,
        equal: restricted.len() as u64 == pi_count,
    })
}

/// Whether reflecting every column of Q-charge vertices left to right
/// (west and east bonds swap, vertical bonds `v ↦ 3 − v`) keeps it valid.
#[derive(Clone, Debug, Serialize)]
pub struct ColumnInversionReport {
    pub height: usize,
    pub columns: u64,
    pub preserved: bool,
}

/// Checks the column inversion on every valid column of `height` vertices.
pub fn column_inversion_check(height: usize) -> Result<ColumnInversionReport> {
    let qc = builtin("q_charge")?;
    let columns = enumerate_valid_grid(&qc, 1, height)?;
    let preserved = columns.iter().all(|c| {
        let mut image = c.clone();
        for r in 0..height {
            image.set_h_bond(r, 0, c.h_bond(r, 1));
            image.set_h_bond(r, 1, c.h_bond(r, 0));
        }
        for r in 0..=height {
            image.set_v_bond(r, 0, 3 - c.v_bond(r, 0));
        }
        image.is_valid_for(&qc)
    });
    Ok(ColumnInversionReport {
        height,
        columns: columns.len() as u64,
        preserved,
    })
}
