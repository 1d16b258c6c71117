//! Exhaustive enumeration on finite windows with free boundary.
//!
//! Vertex and face placement use a `width × height` grid of spins; only
//! the `(width−1) × (height−1)` cells lying wholly inside are constrained.
//!
//! Bond placement uses `width × height` vertices, each with all four of its
//! bonds, so boundary bonds dangle:
//!
//! ```text
//!        v(0,0)   v(0,1)
//!   h(0,0) ┼ h(0,1) ┼ h(0,2)
//!        v(1,0)   v(1,1)
//!   h(1,0) ┼ h(1,1) ┼ h(1,2)
//!        v(2,0)   v(2,1)
//! ```
//!
//! Vertex `(r, j)` sees north `v(r,j)`, west `h(r,j)`, east `h(r,j+1)` and
//! south `v(r+1,j)`.

use super::{ModelSpec, Placement};
use crate::error::{Error, Result};

/// Enumeration is refused when `q^(width·height)` exceeds `2^ENUMERATION_GUARD_BITS`.
pub const ENUMERATION_GUARD_BITS: u32 = 32;

/// A finite configuration. Spins are stored row-major; bond windows store
/// the horizontal bonds (`height × (width+1)`) followed by the vertical
/// bonds (`(height+1) × width`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridConfig {
    pub width: usize,
    pub height: usize,
    pub placement: Placement,
    pub states: Vec<u8>,
}

impl GridConfig {
    pub fn new(width: usize, height: usize, placement: Placement, states: Vec<u8>) -> Result<Self> {
        let expected = state_count(width, height, placement);
        if states.len() != expected {
            return Err(Error::Dimension(format!(
                "{} states for a {width}x{height} {placement} window (expected {expected})",
                states.len()
            )));
        }
        Ok(GridConfig {
            width,
            height,
            placement,
            states,
        })
    }

    pub fn zeros(width: usize, height: usize, placement: Placement) -> Self {
        GridConfig {
            width,
            height,
            placement,
            states: vec![0; state_count(width, height, placement)],
        }
    }

    /// Spin grid from rows of states.
    pub fn from_rows(rows: &[&[u8]], placement: Placement) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        GridConfig::new(width, height, placement, rows.concat())
    }

    pub fn spin(&self, r: usize, c: usize) -> u8 {
        self.states[r * self.width + c]
    }

    pub fn set_spin(&mut self, r: usize, c: usize, s: u8) {
        self.states[r * self.width + c] = s;
    }

    /// Horizontal bond west of vertex `(r, j)`; `j` runs to `width`.
    pub fn h_bond(&self, r: usize, j: usize) -> u8 {
        self.states[h_index(self.width, r, j)]
    }

    pub fn set_h_bond(&mut self, r: usize, j: usize, s: u8) {
        let i = h_index(self.width, r, j);
        self.states[i] = s;
    }

    /// Vertical bond north of vertex `(r, j)`; `r` runs to `height`.
    pub fn v_bond(&self, r: usize, j: usize) -> u8 {
        self.states[v_index(self.width, self.height, r, j)]
    }

    pub fn set_v_bond(&mut self, r: usize, j: usize, s: u8) {
        let i = v_index(self.width, self.height, r, j);
        self.states[i] = s;
    }

    /// Whether every constrained cell or vertex has weight 1 and every state
    /// is inside the alphabet.
    pub fn is_valid_for(&self, model: &ModelSpec) -> bool {
        if self.placement.is_bond() != model.placement().is_bond() {
            return false;
        }
        if self.states.iter().any(|&s| s as usize >= model.q()) {
            return false;
        }
        constraint_cells(self.width, self.height, self.placement)
            .into_iter()
            .all(|[a, b, c, d]| {
                let s = &self.states;
                model.allowed(s[a] as usize, s[b] as usize, s[c] as usize, s[d] as usize)
            })
    }
}

fn state_count(width: usize, height: usize, placement: Placement) -> usize {
    match placement {
        Placement::Vertex | Placement::Face => width * height,
        Placement::Bond => height * (width + 1) + (height + 1) * width,
    }
}

fn h_index(width: usize, r: usize, j: usize) -> usize {
    r * (width + 1) + j
}

fn v_index(width: usize, height: usize, r: usize, j: usize) -> usize {
    height * (width + 1) + r * width + j
}

// State indices (a, b, c, d) of every constrained cell or vertex.
fn constraint_cells(width: usize, height: usize, placement: Placement) -> Vec<[usize; 4]> {
    let mut out = Vec::new();
    match placement {
        Placement::Vertex | Placement::Face => {
            for r in 1..height {
                for c in 1..width {
                    out.push([
                        (r - 1) * width + c - 1,
                        (r - 1) * width + c,
                        r * width + c - 1,
                        r * width + c,
                    ]);
                }
            }
        }
        Placement::Bond => {
            for r in 0..height {
                for j in 0..width {
                    out.push([
                        v_index(width, height, r, j),
                        h_index(width, r, j),
                        h_index(width, r, j + 1),
                        v_index(width, height, r + 1, j),
                    ]);
                }
            }
        }
    }
    out
}

// Search plan: the order in which states are assigned, and after each
// assignment the constraints that have just become fully determined.
struct Plan {
    order: Vec<usize>,
    checks: Vec<Vec<[usize; 4]>>,
}

fn plan(width: usize, height: usize, placement: Placement) -> Plan {
    let order: Vec<usize> = match placement {
        Placement::Vertex | Placement::Face => (0..width * height).collect(),
        Placement::Bond => {
            let mut order = Vec::new();
            for j in 0..width {
                order.push(v_index(width, height, 0, j));
            }
            for r in 0..height {
                order.push(h_index(width, r, 0));
                for j in 0..width {
                    order.push(h_index(width, r, j + 1));
                    order.push(v_index(width, height, r + 1, j));
                }
            }
            order
        }
    };
    let mut position = vec![0usize; order.len()];
    for (step, &var) in order.iter().enumerate() {
        position[var] = step;
    }
    let mut checks = vec![Vec::new(); order.len()];
    for cell in constraint_cells(width, height, placement) {
        let last = cell.iter().map(|&v| position[v]).max().unwrap_or(0);
        checks[last].push(cell);
    }
    Plan { order, checks }
}

fn guard(model: &ModelSpec, width: usize, height: usize) -> Result<()> {
    let bits = (model.q() as f64).log2() * (width * height) as f64;
    if bits > f64::from(ENUMERATION_GUARD_BITS) {
        return Err(Error::SizeGuard(format!(
            "{} on a {width}x{height} window needs q^{} = 2^{bits:.1} > 2^{ENUMERATION_GUARD_BITS} states",
            model.name(),
            width * height
        )));
    }
    Ok(())
}

fn search(
    model: &ModelSpec,
    plan: &Plan,
    step: usize,
    states: &mut [u8],
    visit: &mut dyn FnMut(&[u8]),
) {
    if step == plan.order.len() {
        visit(states);
        return;
    }
    let var = plan.order[step];
    for s in 0..model.q() {
        states[var] = s as u8;
        let ok = plan.checks[step].iter().all(|&[a, b, c, d]| {
            model.allowed(
                states[a] as usize,
                states[b] as usize,
                states[c] as usize,
                states[d] as usize,
            )
        });
        if ok {
            search(model, plan, step + 1, states, visit);
        }
    }
}

/// Exact number of valid configurations on a free-boundary window.
pub fn count_valid_grid(model: &ModelSpec, width: usize, height: usize) -> Result<u64> {
    guard(model, width, height)?;
    let placement = model.placement();
    let plan = plan(width, height, placement);
    let mut states = vec![0u8; state_count(width, height, placement)];
    let mut count = 0u64;
    search(model, &plan, 0, &mut states, &mut |_| count += 1);
    Ok(count)
}

/// Every valid configuration on a free-boundary window, in lexicographic
/// order of the search.
pub fn enumerate_valid_grid(
    model: &ModelSpec,
    width: usize,
    height: usize,
) -> Result<Vec<GridConfig>> {
    guard(model, width, height)?;
    let placement = model.placement();
    let plan = plan(width, height, placement);
    let mut states = vec![0u8; state_count(width, height, placement)];
    let mut out = Vec::new();
    search(model, &plan, 0, &mut states, &mut |s| {
        out.push(GridConfig {
            width,
            height,
            placement,
            states: s.to_vec(),
        })
    });
    Ok(out)
}
