//! Column transfer matrices of finite-height strips and one-dimensional
//! chains, assembled directly from the cell weights.
//!
//! Spin models: columns `σ, τ` of height `m` are compatible when every
//! cell `(σ_i, τ_i; σ_{i+1}, τ_{i+1})` is allowed, with `i + 1` taken
//! modulo `m` on a cyclic strip. Bond models: `σ` and `τ` are the west and
//! east bonds of a column of `m` vertices and `V_{στ}` counts the vertical
//! bond labellings that make every vertex valid; the two end bonds of a free
//! strip dangle. A strip of height 1 is the one-dimensional chain: spins (or
//! horizontal bonds) `x, y` may follow each other when some valid cell (or
//! vertex) has them as its top row (or as its west and east bonds).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::numerics::BigReal;

/// Largest strip dimension `q^m` accepted.
pub const STRIP_GUARD: u64 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Cyclic,
    Free,
}

impl Boundary {
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "cyclic" => Ok(Boundary::Cyclic),
            "free" => Ok(Boundary::Free),
            other => Err(Error::InvalidConfig(format!("unknown boundary `{other}`"))),
        }
    }
}

/// Sparse nonnegative integer matrix, rows sorted by column index.
#[derive(Clone, Debug)]
pub struct TransferMatrix {
    pub dim: usize,
    pub rows: Vec<Vec<(usize, u64)>>,
}

impl TransferMatrix {
    pub fn entry(&self, i: usize, j: usize) -> u64 {
        self.rows[i]
            .binary_search_by_key(&j, |e| e.0)
            .map_or(0, |k| self.rows[i][k].1)
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows
            .iter()
            .enumerate()
            .all(|(i, row)| row.iter().all(|&(j, w)| self.entry(j, i) == w))
    }

    pub fn nonzeros(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }
}

/// Dominant eigenvalue of a strip transfer matrix.
#[derive(Clone, Debug, Serialize)]
pub struct StripSpectrum {
    pub model: String,
    pub m: usize,
    pub boundary: Boundary,
    #[serde(serialize_with = "crate::oracle::decimal")]
    pub lambda: BigReal,
    pub dimension: u64,
    pub iterations: usize,
}

fn digits(code: usize, q: usize, m: usize) -> Vec<usize> {
    let mut out = vec![0; m];
    let mut c = code;
    for d in out.iter_mut() {
        *d = c % q;
        c /= q;
    }
    out
}

fn encode(d: &[usize], q: usize) -> usize {
    d.iter().rev().fold(0, |acc, &x| acc * q + x)
}

/// `q×q` transfer matrix of the one-dimensional chain.
pub fn chain_matrix(model: &ModelSpec) -> Vec<Vec<u64>> {
    let q = model.q();
    let mut v = vec![vec![0; q]; q];
    for [a, b, c, _] in model.valid_cells() {
        if model.placement().is_bond() {
            v[b][c] = 1;
        } else {
            v[a][b] = 1;
        }
    }
    v
}

fn check_guard(q: usize, m: usize) -> Result<u64> {
    if m == 0 {
        return Err(Error::InvalidConfig(
            "strip height must be at least 1".into(),
        ));
    }
    let dim = (q as u64)
        .checked_pow(m as u32)
        .filter(|&d| d <= STRIP_GUARD);
    dim.ok_or_else(|| Error::SizeGuard(format!("strip dimension {q}^{m} exceeds 2^20")))
}

/// Column transfer matrix of a strip of height `m`.
pub fn strip_matrix(model: &ModelSpec, m: usize, boundary: Boundary) -> Result<TransferMatrix> {
    let q = model.q();
    let dim = check_guard(q, m)? as usize;
    if m == 1 {
        let v = chain_matrix(model);
        let rows = v
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|e| *e.1 > 0)
                    .map(|(j, &w)| (j, w))
                    .collect()
            })
            .collect();
        return Ok(TransferMatrix { dim, rows });
    }
    let mut rows = Vec::with_capacity(dim);
    for code in 0..dim {
        let sigma = digits(code, q, m);
        let mut row: Vec<(usize, u64)> = if model.placement().is_bond() {
            bond_row(model, &sigma, boundary)
        } else {
            spin_row(model, &sigma, boundary)
        };
        row.sort_unstable();
        rows.push(row);
    }
    Ok(TransferMatrix { dim, rows })
}

fn spin_row(model: &ModelSpec, sigma: &[usize], boundary: Boundary) -> Vec<(usize, u64)> {
    let (q, m) = (model.q(), sigma.len());
    let mut out = Vec::new();
    let mut tau = vec![0; m];
    fn extend(
        model: &ModelSpec,
        sigma: &[usize],
        tau: &mut Vec<usize>,
        i: usize,
        boundary: Boundary,
        out: &mut Vec<(usize, u64)>,
        q: usize,
    ) {
        let m = sigma.len();
        if i == m {
            if boundary == Boundary::Cyclic
                && !model.allowed(sigma[m - 1], tau[m - 1], sigma[0], tau[0])
            {
                return;
            }
            out.push((encode(tau, q), 1));
            return;
        }
        for t in 0..q {
            tau[i] = t;
            if i > 0 && !model.allowed(sigma[i - 1], tau[i - 1], sigma[i], t) {
                continue;
            }
            extend(model, sigma, tau, i + 1, boundary, out, q);
        }
    }
    extend(model, sigma, &mut tau, 0, boundary, &mut out, q);
    out
}

fn bond_row(model: &ModelSpec, sigma: &[usize], boundary: Boundary) -> Vec<(usize, u64)> {
    let (q, m) = (model.q(), sigma.len());
    let mut counts = std::collections::BTreeMap::new();
    let mut tau = vec![0; m];
    // Vertex i has north bond v_i, west σ_i, east τ_i and south v_{i+1}.
    #[allow(clippy::too_many_arguments)]
    fn extend(
        model: &ModelSpec,
        sigma: &[usize],
        tau: &mut Vec<usize>,
        i: usize,
        north: usize,
        first: usize,
        boundary: Boundary,
        counts: &mut std::collections::BTreeMap<usize, u64>,
    ) {
        let (q, m) = (model.q(), sigma.len());
        for t in 0..q {
            for south in 0..q {
                if !model.allowed(north, sigma[i], t, south) {
                    continue;
                }
                tau[i] = t;
                if i + 1 == m {
                    if boundary == Boundary::Free || south == first {
                        *counts.entry(encode(tau, q)).or_insert(0) += 1;
                    }
                } else {
                    extend(model, sigma, tau, i + 1, south, first, boundary, counts);
                }
            }
        }
    }
    for top in 0..q {
        extend(model, sigma, &mut tau, 0, top, top, boundary, &mut counts);
    }
    counts.into_iter().collect()
}

/// Dominant eigenvalue of `V` by power iteration on `V + I`, which keeps
/// the Perron root strictly dominant. The Rayleigh quotient is used when `V`
/// is symmetric, the norm ratio otherwise.
pub fn dominant_eigenvalue(
    v: &TransferMatrix,
    prec: u32,
    tol: &BigReal,
    max_iter: usize,
) -> Result<(BigReal, usize)> {
    let symmetric = v.is_symmetric();
    let mut x = vec![BigReal::one(prec); v.dim];
    let norm = |x: &[BigReal]| {
        x.iter()
            .fold(BigReal::zero(prec), |acc, e| acc + e * e)
            .sqrt()
    };
    let n0 = norm(&x);
    x.iter_mut().for_each(|e| *e = &*e / &n0);
    let mut previous: Option<BigReal> = None;
    for it in 1..=max_iter {
        let mut y = x.clone();
        for (i, row) in v.rows.iter().enumerate() {
            for &(j, w) in row {
                y[i] = &y[i] + &(&x[j] * &BigReal::from_u64(w, prec));
            }
        }
        let est = if symmetric {
            let dot = x
                .iter()
                .zip(&y)
                .fold(BigReal::zero(prec), |acc, (a, b)| acc + a * b);
            dot - BigReal::one(prec)
        } else {
            norm(&y) - BigReal::one(prec)
        };
        let ny = norm(&y);
        if ny.is_zero() {
            return Ok((BigReal::zero(prec), it));
        }
        x = y.iter().map(|e| e / &ny).collect();
        if let Some(p) = &previous {
            if est.is_zero() || ((&est - p).abs() / est.abs()) < *tol {
                return Ok((est, it));
            }
        }
        previous = Some(est);
    }
    Err(Error::NoConvergence {
        what: "strip power iteration",
        iterations: max_iter,
    })
}

/// Dominant eigenvalue `Λ(m)` of the strip transfer matrix.
pub fn strip_lambda(
    model: &ModelSpec,
    m: usize,
    boundary: Boundary,
    prec: u32,
) -> Result<StripSpectrum> {
    let v = strip_matrix(model, m, boundary)?;
    let tol = BigReal::pow2(40 - prec as i32, prec);
    let (lambda, iterations) = dominant_eigenvalue(&v, prec, &tol, 1_000_000)?;
    Ok(StripSpectrum {
        model: model.name().to_string(),
        m,
        boundary,
        lambda,
        dimension: v.dim as u64,
        iterations,
    })
}

/// `Λ(m)^(1/m)` for each `m` in `ms`.
pub fn lambda_sequence(
    model: &ModelSpec,
    ms: impl IntoIterator<Item = usize>,
    boundary: Boundary,
    prec: u32,
) -> Result<Vec<(usize, BigReal)>> {
    ms.into_iter()
        .map(|m| {
            let s = strip_lambda(model, m, boundary, prec)?;
            let root = s
                .lambda
                .pow(&(BigReal::one(prec) / BigReal::from_u64(m as u64, prec)));
            Ok((m, root))
        })
        .collect()
}
