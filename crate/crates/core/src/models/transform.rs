//! The non-local charge(3) and even constraints on finite spin windows, and
//! the maps that turn them into the local bond models.
//!
//! Spins use ⊕ = 0 and ⊖ = 1; for charge purposes ⊕ carries +1 and ⊖ −1.
//! Segments cut by the window edge are only constrained on the part inside.

use super::grid::GridConfig;
use super::{builtin, Placement};
use crate::error::{Error, Result};

const SPIN_GRID_GUARD_BITS: usize = 24;

fn charge(spin: u8) -> i32 {
    if spin == 0 {
        1
    } else {
        -1
    }
}

fn lines(config: &GridConfig) -> Vec<Vec<u8>> {
    let mut out = Vec::with_capacity(config.width + config.height);
    for r in 0..config.height {
        out.push((0..config.width).map(|c| config.spin(r, c)).collect());
    }
    for c in 0..config.width {
        out.push((0..config.height).map(|r| config.spin(r, c)).collect());
    }
    out
}

fn check_spin_grid(config: &GridConfig) -> Result<()> {
    if config.placement.is_bond() {
        return Err(Error::InvalidConfig(
            "expected a spin window, got a bond window".into(),
        ));
    }
    if config.states.iter().any(|&s| s > 1) {
        return Err(Error::InvalidConfig("spins must be 0 (⊕) or 1 (⊖)".into()));
    }
    Ok(())
}

/// Every row and column segment carries total charge in −3..=3.
pub fn is_valid_charge3(config: &GridConfig) -> bool {
    if check_spin_grid(config).is_err() {
        return false;
    }
    lines(config).iter().all(|line| {
        let (mut sum, mut lo, mut hi) = (0i32, 0i32, 0i32);
        for &s in line {
            sum += charge(s);
            lo = lo.min(sum);
            hi = hi.max(sum);
        }
        hi - lo <= 3
    })
}

/// Consecutive ⊖ spins in a row or column are separated by an even number
/// of ⊕ spins.
pub fn is_valid_even(config: &GridConfig) -> bool {
    if check_spin_grid(config).is_err() {
        return false;
    }
    lines(config).iter().all(|line| {
        let minus: Vec<usize> = line
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == 1)
            .map(|(i, _)| i)
            .collect();
        minus.windows(2).all(|w| (w[1] - w[0] - 1) % 2 == 0)
    })
}

/// All `width × height` spin grids accepted by `keep`.
pub fn enumerate_spin_grids(
    width: usize,
    height: usize,
    keep: impl Fn(&GridConfig) -> bool,
) -> Result<Vec<GridConfig>> {
    let n = width * height;
    if n > SPIN_GRID_GUARD_BITS {
        return Err(Error::SizeGuard(format!(
            "{width}x{height} spin window has 2^{n} configurations"
        )));
    }
    let mut out = Vec::new();
    for mask in 0u64..1 << n {
        let states = (0..n).map(|i| (mask >> (n - 1 - i) & 1) as u8).collect();
        let cfg = GridConfig::new(width, height, Placement::Vertex, states)?;
        if keep(&cfg) {
            out.push(cfg);
        }
    }
    Ok(out)
}

// Initial states x such that x plus every running sum stays in lo..=hi.
fn valid_starts(steps: &[i32], lo: i32, hi: i32) -> Vec<i32> {
    (lo..=hi)
        .filter(|&x| {
            let mut v = x;
            steps.iter().all(|&s| {
                v += s;
                (lo..=hi).contains(&v)
            })
        })
        .collect()
}

fn cartesian(choices: &[Vec<i32>]) -> Vec<Vec<i32>> {
    let mut out = vec![Vec::new()];
    for opts in choices {
        let mut next = Vec::with_capacity(out.len() * opts.len());
        for prefix in &out {
            for &x in opts {
                let mut p = prefix.clone();
                p.push(x);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// Every Q-charge bond labelling whose running charges reproduce `config`.
///
/// Each row independently picks the state of its westmost bond and each
/// column the state of its northmost bond; all other bonds follow.
pub fn map_charge_to_qcharge(config: &GridConfig) -> Result<Vec<GridConfig>> {
    if !is_valid_charge3(config) {
        return Err(Error::InvalidConfig(
            "input violates the charge(3) constraint".into(),
        ));
    }
    let (w, h) = (config.width, config.height);
    let row_starts: Vec<Vec<i32>> = (0..h)
        .map(|r| {
            valid_starts(
                &(0..w)
                    .map(|c| charge(config.spin(r, c)))
                    .collect::<Vec<_>>(),
                0,
                3,
            )
        })
        .collect();
    let col_starts: Vec<Vec<i32>> = (0..w)
        .map(|c| {
            valid_starts(
                &(0..h)
                    .map(|r| charge(config.spin(r, c)))
                    .collect::<Vec<_>>(),
                0,
                3,
            )
        })
        .collect();
    let rows = cartesian(&row_starts);
    let cols = cartesian(&col_starts);
    let mut out = Vec::with_capacity(rows.len() * cols.len());
    for rs in &rows {
        for cs in &cols {
            let mut g = GridConfig::zeros(w, h, Placement::Bond);
            for r in 0..h {
                let mut v = rs[r];
                g.set_h_bond(r, 0, v as u8);
                for c in 0..w {
                    v += charge(config.spin(r, c));
                    g.set_h_bond(r, c + 1, v as u8);
                }
            }
            for c in 0..w {
                let mut v = cs[c];
                g.set_v_bond(0, c, v as u8);
                for r in 0..h {
                    v += charge(config.spin(r, c));
                    g.set_v_bond(r + 1, c, v as u8);
                }
            }
            out.push(g);
        }
    }
    Ok(out)
}

// Bond labels along one line: flips across every ⊕, must be p (0) on both
// sides of every ⊖.
fn pi_line_labels(line: &[u8]) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    for start in 0..2u8 {
        let mut labels = vec![start];
        let mut ok = true;
        for &s in line {
            let west = *labels.last().unwrap_or(&0);
            if s == 1 && west != 0 {
                ok = false;
                break;
            }
            labels.push(if s == 0 { west ^ 1 } else { west });
        }
        if ok {
            out.push(labels);
        }
    }
    out
}

/// Every p-i bond labelling (p = 0, i = 1) whose vertex types reproduce the
/// even configuration: a ⊖ vertex has four p bonds, a ⊕ vertex is a corner.
pub fn map_even_to_pi(config: &GridConfig) -> Result<Vec<GridConfig>> {
    if !is_valid_even(config) {
        return Err(Error::InvalidConfig(
            "input violates the even constraint".into(),
        ));
    }
    let (w, h) = (config.width, config.height);
    let rows: Vec<Vec<Vec<u8>>> = (0..h)
        .map(|r| pi_line_labels(&(0..w).map(|c| config.spin(r, c)).collect::<Vec<_>>()))
        .collect();
    let cols: Vec<Vec<Vec<u8>>> = (0..w)
        .map(|c| pi_line_labels(&(0..h).map(|r| config.spin(r, c)).collect::<Vec<_>>()))
        .collect();
    let row_pick = cartesian(
        &rows
            .iter()
            .map(|o| (0..o.len() as i32).collect())
            .collect::<Vec<_>>(),
    );
    let col_pick = cartesian(
        &cols
            .iter()
            .map(|o| (0..o.len() as i32).collect())
            .collect::<Vec<_>>(),
    );
    let pi = builtin("pi")?;
    let mut out = Vec::new();
    for rp in &row_pick {
        for cp in &col_pick {
            let mut g = GridConfig::zeros(w, h, Placement::Bond);
            for r in 0..h {
                for (j, &x) in rows[r][rp[r] as usize].iter().enumerate() {
                    g.set_h_bond(r, j, x);
                }
            }
            for c in 0..w {
                for (r, &x) in cols[c][cp[c] as usize].iter().enumerate() {
                    g.set_v_bond(r, c, x);
                }
            }
            debug_assert!(g.is_valid_for(&pi));
            out.push(g);
        }
    }
    Ok(out)
}

/// The two even-face spin windows whose domain walls are the i bonds of a
/// p-i configuration. A `w × h` vertex window maps to `(w+1) × (h+1)` faces;
/// the two images differ by a global ⊕/⊖ flip.
pub fn map_pi_to_evenface(config: &GridConfig) -> Result<Vec<GridConfig>> {
    let pi = builtin("pi")?;
    if config.placement != Placement::Bond || !config.is_valid_for(&pi) {
        return Err(Error::InvalidConfig(
            "input is not a valid p-i configuration".into(),
        ));
    }
    let (w, h) = (config.width, config.height);
    let mut out = Vec::with_capacity(2);
    for corner in 0..2u8 {
        let mut f = GridConfig::zeros(w + 1, h + 1, Placement::Face);
        f.set_spin(0, 0, corner);
        for r in 0..h {
            let above = f.spin(r, 0);
            f.set_spin(r + 1, 0, above ^ config.h_bond(r, 0));
        }
        for r in 0..=h {
            for j in 0..w {
                let west = f.spin(r, j);
                f.set_spin(r, j + 1, west ^ config.v_bond(r, j));
            }
        }
        out.push(f);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{count_valid_grid, enumerate_valid_grid};

    fn row(spins: &[u8]) -> GridConfig {
        GridConfig::from_rows(&[spins], Placement::Vertex).unwrap()
    }

    #[test]
    fn single_row_charge_labelings() {
        // ⊕ ⊖ ⊕: running charges 0, +1, 0, +1 relative to the start, so the
        // start can be 0, 1 or 2.
        let maps = map_charge_to_qcharge(&row(&[0, 1, 0])).unwrap();
        let starts: Vec<u8> = maps
            .iter()
            .map(|g| g.h_bond(0, 0))
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        assert_eq!(starts, vec![0, 1, 2]);
        // Each single-spin column has three valid starts.
        assert_eq!(maps.len(), 3 * 3 * 3 * 3);
    }

    #[test]
    fn full_range_row_has_single_labeling() {
        let maps = map_charge_to_qcharge(&row(&[0, 0, 0])).unwrap();
        assert!(maps
            .iter()
            .all(|g| g.h_bond(0, 0) == 0 && g.h_bond(0, 3) == 3));
    }

    #[test]
    fn charge_images_count_qcharge_windows() {
        let qc = builtin("q_charge").unwrap();
        for n in 1..=3 {
            let total: usize = enumerate_spin_grids(n, n, is_valid_charge3)
                .unwrap()
                .iter()
                .map(|c| map_charge_to_qcharge(c).unwrap().len())
                .sum();
            assert_eq!(
                total as u64,
                count_valid_grid(&qc, n, n).unwrap(),
                "n = {n}"
            );
        }
    }

    #[test]
    fn even_rows() {
        let all_minus = map_even_to_pi(&row(&[1, 1, 1])).unwrap();
        assert_eq!(all_minus.len(), 1);
        assert!(all_minus[0].states.iter().all(|&s| s == 0));
        let all_plus = map_even_to_pi(&row(&[0, 0, 0, 0])).unwrap();
        let horizontal: std::collections::BTreeSet<Vec<u8>> = all_plus
            .iter()
            .map(|g| (0..5).map(|j| g.h_bond(0, j)).collect())
            .collect();
        assert_eq!(
            horizontal.into_iter().collect::<Vec<_>>(),
            vec![vec![0, 1, 0, 1, 0], vec![1, 0, 1, 0, 1]]
        );
        assert!(map_even_to_pi(&row(&[1, 0, 1])).is_err());
    }

    #[test]
    fn even_images_count_pi_windows() {
        let pi = builtin("pi").unwrap();
        for (w, h) in [(1, 1), (2, 2), (3, 2), (3, 3)] {
            let total: usize = enumerate_spin_grids(w, h, is_valid_even)
                .unwrap()
                .iter()
                .map(|c| map_even_to_pi(c).unwrap().len())
                .sum();
            assert_eq!(
                total as u64,
                count_valid_grid(&pi, w, h).unwrap(),
                "{w}x{h}"
            );
        }
    }

    #[test]
    fn pi_to_evenface_doubles() {
        let pi = builtin("pi").unwrap();
        let ef = builtin("even_face").unwrap();
        for (w, h) in [(1, 1), (2, 2), (3, 2)] {
            let configs = enumerate_valid_grid(&pi, w, h).unwrap();
            let mut images = std::collections::BTreeSet::new();
            for c in &configs {
                let pair = map_pi_to_evenface(c).unwrap();
                assert_eq!(pair.len(), 2);
                assert!(pair.iter().all(|f| f.is_valid_for(&ef)));
                let flipped: Vec<u8> = pair[0].states.iter().map(|s| s ^ 1).collect();
                assert_eq!(flipped, pair[1].states);
                images.extend(pair);
            }
            assert_eq!(
                images.len() as u64,
                count_valid_grid(&ef, w + 1, h + 1).unwrap()
            );
            assert_eq!(images.len(), 2 * configs.len());
        }
    }
}
