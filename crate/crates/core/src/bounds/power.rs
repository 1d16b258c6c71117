//! Implicit power iteration on the `R` and `S` eigenproblems. The explicit
//! matrices have dimension `q·n²` and `q²·n²`; applying them through the
//! half-row family costs `O(n³)` per step instead of `O(n⁴)`.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::HalfRows;
use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::numerics::{mat_mul, BigReal, Matrix};

/// Controls for the power iterations.
#[derive(Clone, Debug)]
pub struct PowerOptions {
    /// Relative change of the Rayleigh quotient required for convergence;
    /// the residual must also fall below `√tol`.
    pub tol: BigReal,
    pub max_iter: usize,
    /// Seed of the generator that perturbs the `ξ` start.
    pub seed: u64,
}

impl PowerOptions {
    pub fn for_precision(prec: u32) -> Self {
        PowerOptions {
            tol: BigReal::pow2(40 - prec as i32, prec),
            max_iter: 50_000,
            seed: 1,
        }
    }
}

/// A converged dominant eigenpair, with the eigenvector recast as a family
/// of `n×n` matrices and normalised to unit Frobenius norm.
#[derive(Clone, Debug)]
pub struct Eigenpair {
    pub value: BigReal,
    pub vectors: Vec<Matrix>,
    pub iterations: usize,
    /// `‖map(X) − λX‖ / |λ|` at the returned vector.
    pub residual: f64,
}

fn inner(x: &[Matrix], y: &[Matrix]) -> Result<BigReal> {
    let prec = x[0].precision();
    let mut s = BigReal::zero(prec);
    for (a, b) in x.iter().zip(y) {
        s = s + a.trace_of_product(&b.transpose())?;
    }
    Ok(s)
}

fn norm(x: &[Matrix]) -> BigReal {
    let prec = x[0].precision();
    x.iter()
        .fold(BigReal::zero(prec), |acc, m| acc + m.frobenius_sq())
        .sqrt()
}

fn normalised(mut x: Vec<Matrix>, what: &'static str) -> Result<Vec<Matrix>> {
    let nrm = norm(&x);
    if nrm.is_zero() {
        return Err(Error::Degenerate(format!(
            "{what}: the iterate vanished (dead start)"
        )));
    }
    for m in &mut x {
        m.div_in_place(&nrm);
    }
    Ok(x)
}

/// Adds uniform noise of relative size `2^(−prec/2)` to every entry.
pub fn perturb(x: &[Matrix], seed: u64) -> Vec<Matrix> {
    let prec = x[0].precision();
    let scale = x
        .iter()
        .map(Matrix::max_abs)
        .fold(BigReal::zero(prec), |acc, v| if v > acc { v } else { acc });
    let scale = if scale.is_zero() {
        BigReal::one(prec)
    } else {
        scale
    };
    let eps = &scale * &BigReal::pow2(-(prec as i32) / 2, prec);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    x.iter()
        .map(|m| {
            let mut out = m.clone();
            for i in 0..m.rows() {
                for j in 0..m.cols() {
                    let noise = BigReal::from_f64(rng.gen_range(-1.0..1.0), prec);
                    out.set(i, j, &(m.get(i, j) + &(&noise * &eps)));
                }
            }
            out
        })
        .collect()
}

// Shifted power iteration `X ← (map + σ)X` with `σ` a quarter of the first
// Rayleigh quotient, which separates `+λ` from a possible `−λ`. With
// `watch` set, a run whose successive changes stop shrinking is abandoned.
fn iterate(
    map: &dyn Fn(&[Matrix]) -> Result<Vec<Matrix>>,
    start: Vec<Matrix>,
    opts: &PowerOptions,
    what: &'static str,
    watch: bool,
) -> Result<Eigenpair> {
    let prec = start[0].precision();
    let sqrt_tol = opts.tol.sqrt();
    let mut x = normalised(start, what)?;
    let mut previous: Option<BigReal> = None;
    let mut shift: Option<BigReal> = None;
    const WINDOW: usize = 1000;
    let mut window_best = f64::INFINITY;
    let mut last_window_best = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let y = map(&x)?;
        let rq = inner(&x, &y)?;
        if !rq.is_finite() {
            return Err(Error::NonFinite(what));
        }
        let mut r = Vec::with_capacity(y.len());
        for (yi, xi) in y.iter().zip(&x) {
            r.push(yi.sub(&xi.scale(&rq))?);
        }
        let residual = if rq.is_zero() {
            f64::INFINITY
        } else {
            (norm(&r) / rq.abs()).to_f64()
        };
        let change = previous.as_ref().map(|p| {
            if rq.is_zero() {
                BigReal::from_f64(f64::INFINITY, prec)
            } else {
                (&rq - p).abs() / rq.abs()
            }
        });
        if let Some(c) = &change {
            if *c < opts.tol && BigReal::from_f64(residual, prec) < sqrt_tol {
                return Ok(Eigenpair {
                    value: rq,
                    vectors: x,
                    iterations: it,
                    residual,
                });
            }
            if watch {
                window_best = window_best.min(c.to_f64());
                if it % WINDOW == 0 {
                    if window_best >= last_window_best {
                        return Err(Error::Unstable {
                            what,
                            detail: format!(
                                "the Rayleigh quotient stopped settling after {it} iterations \
                                 (smallest relative change {window_best:.3e})"
                            ),
                        });
                    }
                    last_window_best = window_best;
                    window_best = f64::INFINITY;
                }
            }
        }
        let sigma = shift
            .get_or_insert_with(|| {
                if rq.is_sign_negative() {
                    BigReal::zero(prec)
                } else {
                    &rq / &BigReal::from_u64(4, prec)
                }
            })
            .clone();
        let mut next = Vec::with_capacity(y.len());
        for (yi, xi) in y.into_iter().zip(&x) {
            let mut m = xi.scale(&sigma);
            m.add_assign(&yi)?;
            next.push(m);
        }
        x = normalised(next, what)?;
        previous = Some(rq);
    }
    Err(Error::NoConvergence {
        what,
        iterations: opts.max_iter,
    })
}

/// `X(a) ↦ Σ_b F(a,b) X(b) F(b,a)`, or `X ↦ Σ_a F(a) X F(a)ᵀ` for bonds.
pub fn apply_r(f: &HalfRows, x: &[Matrix]) -> Result<Vec<Matrix>> {
    let (q, n, prec) = (f.q, f.n(), f.prec());
    if f.bond {
        let mut out = Matrix::zeros(n, n, prec);
        for fa in &f.f {
            if !fa.is_zero() {
                out.add_assign(&mat_mul(&mat_mul(fa, &x[0])?, &fa.transpose())?)?;
            }
        }
        return Ok(vec![out]);
    }
    let mut out = vec![Matrix::zeros(n, n, prec); q];
    for (a, o) in out.iter_mut().enumerate() {
        for b in 0..q {
            let fab = f.get(a, b);
            if !fab.is_zero() {
                o.add_assign(&mat_mul(&mat_mul(fab, &x[b])?, f.get(b, a))?)?;
            }
        }
    }
    Ok(out)
}

/// `Y(a,b) ↦ Σ_{cd} ω(a,b;c,d) F(a,c) Y(c,d) F(d,b)`, or for bonds
/// `Y(a) ↦ Σ_{bcd} ω(a,b,c,d) F(b) Y(d) F(c)ᵀ`.
pub fn apply_s(f: &HalfRows, model: &ModelSpec, y: &[Matrix]) -> Result<Vec<Matrix>> {
    let (q, n, prec) = (f.q, f.n(), f.prec());
    let mut left: HashMap<(usize, usize), Matrix> = HashMap::new();
    if f.bond {
        let ft: Vec<Matrix> = f.f.iter().map(Matrix::transpose).collect();
        let mut out = vec![Matrix::zeros(n, n, prec); q];
        for [a, b, c, d] in model.valid_cells() {
            if f.f[b].is_zero() || f.f[c].is_zero() {
                continue;
            }
            if !left.contains_key(&(b, d)) {
                left.insert((b, d), mat_mul(&f.f[b], &y[d])?);
            }
            out[a].add_assign(&mat_mul(&left[&(b, d)], &ft[c])?)?;
        }
        return Ok(out);
    }
    let mut out = vec![Matrix::zeros(n, n, prec); q * q];
    for [a, b, c, d] in model.valid_cells() {
        if f.get(a, c).is_zero() || f.get(d, b).is_zero() {
            continue;
        }
        if !left.contains_key(&(a, c * q + d)) {
            left.insert((a, c * q + d), mat_mul(f.get(a, c), &y[c * q + d])?);
        }
        out[a * q + b].add_assign(&mat_mul(&left[&(a, c * q + d)], f.get(d, b))?)?;
    }
    Ok(out)
}

fn check_start(f: &HalfRows, start: &[Matrix], count: usize, what: &str) -> Result<()> {
    let n = f.n();
    if start.len() != count || start.iter().any(|m| m.rows() != n || m.cols() != n) {
        return Err(Error::Dimension(format!(
            "{what} start must be {count} matrices of size {n}x{n}"
        )));
    }
    Ok(())
}

fn uniform(f: &HalfRows, count: usize) -> Vec<Matrix> {
    vec![Matrix::identity(f.n(), f.prec()); count]
}

/// Dominant eigenpair `ξ, X` of `R`. The start (default: identities) is
/// perturbed so that a start orthogonal to the dominant eigenvector still
/// converges to it.
pub fn power_xi(f: &HalfRows, start: Option<&[Matrix]>, opts: &PowerOptions) -> Result<Eigenpair> {
    let count = if f.bond { 1 } else { f.q };
    let start = match start {
        Some(s) => {
            check_start(f, s, count, "xi")?;
            s.to_vec()
        }
        None => uniform(f, count),
    };
    let map = |x: &[Matrix]| apply_r(f, x);
    iterate(
        &map,
        perturb(&start, opts.seed),
        opts,
        "xi power iteration",
        f.bond,
    )
}

/// Dominant eigenpair `η, Y` of `S`; the start is used as given.
pub fn power_eta(
    f: &HalfRows,
    model: &ModelSpec,
    start: Option<&[Matrix]>,
    opts: &PowerOptions,
) -> Result<Eigenpair> {
    if model.q() != f.q || model.placement().is_bond() != f.bond {
        return Err(Error::EngineMismatch(format!(
            "half-row family does not match model {}",
            model.name()
        )));
    }
    let count = if f.bond { f.q } else { f.q * f.q };
    let start = match start {
        Some(s) => {
            check_start(f, s, count, "eta")?;
            s.to_vec()
        }
        None => uniform(f, count),
    };
    let map = |y: &[Matrix]| apply_s(f, model, y);
    iterate(&map, start, opts, "eta power iteration", f.bond)
}

/// [`power_xi`] for a bond family, where `F(a)` need not be symmetric.
pub fn power_xi_bond(
    f: &HalfRows,
    start: Option<&[Matrix]>,
    opts: &PowerOptions,
) -> Result<Eigenpair> {
    if !f.bond {
        return Err(Error::EngineMismatch(
            "expected a bond half-row family".into(),
        ));
    }
    power_xi(f, start, opts)
}

/// [`power_eta`] for a bond family.
pub fn power_eta_bond(
    f: &HalfRows,
    model: &ModelSpec,
    start: Option<&[Matrix]>,
    opts: &PowerOptions,
) -> Result<Eigenpair> {
    if !f.bond {
        return Err(Error::EngineMismatch(
            "expected a bond half-row family".into(),
        ));
    }
    power_eta(f, model, start, opts)
}
