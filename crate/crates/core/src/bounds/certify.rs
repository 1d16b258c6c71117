//! Outward-rounded enclosure of a bound at small `n`.
//!
//! `R` and `S` are written out as interval matrices. `η` is bounded below
//! by the Rayleigh quotient of the converged `Y`; `ξ` is bounded above by
//! the smallest of three certificates: `‖|R|^(2^k)‖_∞^(1/2^k)`, a
//! Collatz–Wielandt ratio on `|X|`, and an interval Cholesky factorisation
//! of `sI − R` just above the computed `ξ`. All arithmetic rounds outward.

use std::cmp::Ordering;

use rug::float::Round;
use rug::ops::{AddAssignRound, DivAssignRound, MulAssignRound, SubAssignRound};
use rug::Float;

use super::{BoundReport, HalfRows};
use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::numerics::{BigReal, Matrix};

/// Size guards for the explicit matrices.
#[derive(Clone, Debug)]
pub struct CertifyLimits {
    /// Largest dimension `q·n²` of `R`.
    pub max_r: usize,
    /// Largest dimension `q²·n²` of `S`.
    pub max_s: usize,
    /// Largest dimension factorised by interval Cholesky.
    pub max_cholesky: usize,
    /// Largest dimension for which `|R|` is squared repeatedly.
    pub max_power: usize,
}

impl Default for CertifyLimits {
    fn default() -> Self {
        CertifyLimits {
            max_r: 256,
            max_s: 1024,
            max_cholesky: 256,
            max_power: 128,
        }
    }
}

#[derive(Clone, Debug)]
struct Iv {
    lo: Float,
    hi: Float,
}

fn rounded(
    prec: u32,
    f: impl FnOnce(&mut Float, Round) -> Ordering,
    start: &Float,
    round: Round,
) -> Float {
    let mut x = Float::with_val(prec, start);
    f(&mut x, round);
    x
}

impl Iv {
    fn point(x: &Float) -> Iv {
        Iv {
            lo: x.clone(),
            hi: x.clone(),
        }
    }

    fn zero(prec: u32) -> Iv {
        Iv::point(&Float::with_val(prec, 0))
    }

    fn add_assign(&mut self, other: &Iv) {
        self.lo.add_assign_round(&other.lo, Round::Down);
        self.hi.add_assign_round(&other.hi, Round::Up);
    }

    fn sub_assign(&mut self, other: &Iv) {
        self.lo.sub_assign_round(&other.hi, Round::Down);
        self.hi.sub_assign_round(&other.lo, Round::Up);
    }

    fn mul(&self, other: &Iv) -> Iv {
        let prec = self.lo.prec();
        let mut lo: Option<Float> = None;
        let mut hi: Option<Float> = None;
        for x in [&self.lo, &self.hi] {
            for y in [&other.lo, &other.hi] {
                let d = rounded(prec, |z, r| z.mul_assign_round(y, r), x, Round::Down);
                let u = rounded(prec, |z, r| z.mul_assign_round(y, r), x, Round::Up);
                lo = Some(match lo {
                    Some(l) if l <= d => l,
                    _ => d,
                });
                hi = Some(match hi {
                    Some(h) if h >= u => h,
                    _ => u,
                });
            }
        }
        Iv {
            lo: lo.unwrap(),
            hi: hi.unwrap(),
        }
    }

    fn square(&self) -> Iv {
        let prec = self.lo.prec();
        let sq = |x: &Float, r| rounded(prec, |z, r| z.mul_assign_round(x, r), x, r);
        if self.lo >= 0 {
            Iv {
                lo: sq(&self.lo, Round::Down),
                hi: sq(&self.hi, Round::Up),
            }
        } else if self.hi <= 0 {
            Iv {
                lo: sq(&self.hi, Round::Down),
                hi: sq(&self.lo, Round::Up),
            }
        } else {
            let m = if self.lo.clone().abs() > self.hi.clone().abs() {
                &self.lo
            } else {
                &self.hi
            };
            Iv {
                lo: Float::with_val(prec, 0),
                hi: sq(m, Round::Up),
            }
        }
    }

    /// Quotient by an interval that lies strictly above zero.
    fn div_positive(&self, other: &Iv) -> Iv {
        let prec = self.lo.prec();
        let lo_den = if self.lo >= 0 { &other.hi } else { &other.lo };
        let hi_den = if self.hi >= 0 { &other.lo } else { &other.hi };
        Iv {
            lo: rounded(
                prec,
                |z, r| z.div_assign_round(lo_den, r),
                &self.lo,
                Round::Down,
            ),
            hi: rounded(
                prec,
                |z, r| z.div_assign_round(hi_den, r),
                &self.hi,
                Round::Up,
            ),
        }
    }

    fn sqrt_positive(&self) -> Iv {
        let prec = self.lo.prec();
        Iv {
            lo: rounded(prec, |z, r| z.sqrt_round(r), &self.lo, Round::Down),
            hi: rounded(prec, |z, r| z.sqrt_round(r), &self.hi, Round::Up),
        }
    }

    fn mag(&self) -> Float {
        let a = self.lo.clone().abs();
        let b = self.hi.clone().abs();
        if a > b {
            a
        } else {
            b
        }
    }
}

struct IvMatrix {
    dim: usize,
    data: Vec<Iv>,
}

impl IvMatrix {
    fn get(&self, i: usize, j: usize) -> &Iv {
        &self.data[i * self.dim + j]
    }
}

fn product(x: &Float, y: &Float) -> Iv {
    let prec = x.prec();
    Iv {
        lo: rounded(prec, |z, r| z.mul_assign_round(y, r), x, Round::Down),
        hi: rounded(prec, |z, r| z.mul_assign_round(y, r), x, Round::Up),
    }
}

// `R_{(a,i,i'),(b,j,j')} = F(a,b)_{ij} F(b,a)_{j'i'}`.
fn build_r(f: &HalfRows) -> IvMatrix {
    let (q, n, prec) = (f.q, f.n(), f.prec());
    let dim = q * n * n;
    let mut data = vec![Iv::zero(prec); dim * dim];
    for a in 0..q {
        for b in 0..q {
            let (l, r) = (f.get(a, b), f.get(b, a));
            if l.is_zero() {
                continue;
            }
            for i in 0..n {
                for i2 in 0..n {
                    for j in 0..n {
                        for j2 in 0..n {
                            let row = (a * n + i) * n + i2;
                            let col = (b * n + j) * n + j2;
                            data[row * dim + col] = product(l.at(i, j), r.at(j2, i2));
                        }
                    }
                }
            }
        }
    }
    IvMatrix { dim, data }
}

// `S_{(a,b,i,i'),(c,d,j,j')} = ω(a,b;c,d) F(a,c)_{ij} F(d,b)_{j'i'}`.
fn build_s(f: &HalfRows, model: &ModelSpec) -> IvMatrix {
    let (q, n, prec) = (f.q, f.n(), f.prec());
    let dim = q * q * n * n;
    let mut data = vec![Iv::zero(prec); dim * dim];
    for [a, b, c, d] in model.valid_cells() {
        let (l, r) = (f.get(a, c), f.get(d, b));
        if l.is_zero() || r.is_zero() {
            continue;
        }
        for i in 0..n {
            for i2 in 0..n {
                for j in 0..n {
                    for j2 in 0..n {
                        let row = ((a * q + b) * n + i) * n + i2;
                        let col = ((c * q + d) * n + j) * n + j2;
                        data[row * dim + col].add_assign(&product(l.at(i, j), r.at(j2, i2)));
                    }
                }
            }
        }
    }
    IvMatrix { dim, data }
}

fn is_symmetric(m: &IvMatrix) -> bool {
    (0..m.dim).all(|i| {
        (0..i).all(|j| m.get(i, j).lo == m.get(j, i).lo && m.get(i, j).hi == m.get(j, i).hi)
    })
}

fn flatten(family: &[Matrix]) -> Vec<Float> {
    let mut v = Vec::new();
    for m in family {
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                v.push(m.get(i, j).into_float());
            }
        }
    }
    v
}

/// Enclosure of `vᵀMv / vᵀv`.
fn rayleigh(m: &IvMatrix, v: &[Float]) -> Result<Iv> {
    let prec = v[0].prec();
    let mut num = Iv::zero(prec);
    let mut den = Iv::zero(prec);
    for (i, vi) in v.iter().enumerate() {
        if vi.is_zero() {
            continue;
        }
        den.add_assign(&product(vi, vi));
        let vi = Iv::point(vi);
        let mut row = Iv::zero(prec);
        for (j, vj) in v.iter().enumerate() {
            if !vj.is_zero() {
                row.add_assign(&m.get(i, j).mul(&Iv::point(vj)));
            }
        }
        num.add_assign(&row.mul(&vi));
    }
    if den.lo <= 0 {
        return Err(Error::Degenerate(
            "eigenvector vanished during certification".into(),
        ));
    }
    Ok(num.div_positive(&den))
}

fn max_row_sum_up(m: &[Float], dim: usize) -> Float {
    let prec = m[0].prec();
    let mut best = Float::with_val(prec, 0);
    for i in 0..dim {
        let mut s = Float::with_val(prec, 0);
        for x in &m[i * dim..(i + 1) * dim] {
            s.add_assign_round(x, Round::Up);
        }
        if s > best {
            best = s;
        }
    }
    best
}

// min over k of ‖|M|^(2^k)‖_∞^(1/2^k), squaring with upward rounding.
fn power_norm_bound(m: &IvMatrix, max_squarings: usize) -> Float {
    let dim = m.dim;
    let mut p: Vec<Float> = m.data.iter().map(Iv::mag).collect();
    let mut best = max_row_sum_up(&p, dim);
    for k in 1..=max_squarings {
        let prec = p[0].prec();
        let mut next = vec![Float::with_val(prec, 0); dim * dim];
        for i in 0..dim {
            for l in 0..dim {
                let pil = &p[i * dim + l];
                if pil.is_zero() {
                    continue;
                }
                for j in 0..dim {
                    let t = rounded(
                        prec,
                        |z, r| z.mul_assign_round(&p[l * dim + j], r),
                        pil,
                        Round::Up,
                    );
                    next[i * dim + j].add_assign_round(&t, Round::Up);
                }
            }
        }
        p = next;
        let mut bound = max_row_sum_up(&p, dim);
        for _ in 0..k {
            bound.sqrt_round(Round::Up);
        }
        if bound < best {
            best = bound;
        }
    }
    best
}

// max_i (|M|x)_i / x_i with x = |v| plus a small floor, rounded up.
fn collatz_wielandt_bound(m: &IvMatrix, v: &[Float]) -> Float {
    let prec = v[0].prec();
    let top = v
        .iter()
        .map(|x| x.clone().abs())
        .fold(Float::with_val(prec, 0), |a, b| if b > a { b } else { a });
    let floor = Float::with_val(
        prec,
        &top * Float::with_val(prec, Float::i_exp(1, -(prec as i32) / 4)),
    );
    let x: Vec<Float> = v
        .iter()
        .map(|vi| {
            rounded(
                prec,
                |z, r| z.add_assign_round(&floor, r),
                &vi.clone().abs(),
                Round::Down,
            )
        })
        .collect();
    let mut best = Float::with_val(prec, 0);
    for i in 0..m.dim {
        let mut s = Float::with_val(prec, 0);
        for (j, xj) in x.iter().enumerate() {
            let t = rounded(
                prec,
                |z, r| z.mul_assign_round(xj, r),
                &m.get(i, j).mag(),
                Round::Up,
            );
            s.add_assign_round(&t, Round::Up);
        }
        s.div_assign_round(&x[i], Round::Up);
        if s > best {
            best = s;
        }
    }
    best
}

// True when interval Cholesky of `sI − M` runs to completion with every
// pivot bounded away from zero, which proves `λ_max(M) < s` for every
// symmetric matrix in the box.
fn below_shift(m: &IvMatrix, s: &Float) -> bool {
    let dim = m.dim;
    let prec = s.prec();
    let mut l: Vec<Iv> = vec![Iv::zero(prec); dim * dim];
    for j in 0..dim {
        let mut d = Iv::point(s);
        d.sub_assign(m.get(j, j));
        for k in 0..j {
            d.sub_assign(&l[j * dim + k].square());
        }
        if d.lo <= 0 {
            return false;
        }
        let ljj = d.sqrt_positive();
        for i in j + 1..dim {
            let mut e = Iv::zero(prec);
            e.sub_assign(m.get(i, j));
            for k in 0..j {
                e.sub_assign(&l[i * dim + k].mul(&l[j * dim + k]));
            }
            l[i * dim + j] = e.div_positive(&ljj);
        }
        l[j * dim + j] = ljj;
    }
    true
}

fn upper_bound(m: &IvMatrix, v: &[Float], estimate: &Float, limits: &CertifyLimits) -> Float {
    let prec = estimate.prec();
    let squarings = if m.dim <= limits.max_power { 4 } else { 0 };
    let mut best = power_norm_bound(m, squarings);
    let cw = collatz_wielandt_bound(m, v);
    if cw < best {
        best = cw;
    }
    if m.dim <= limits.max_cholesky && *estimate > 0 {
        for e in [prec as i32 - 48, prec as i32 / 2, prec as i32 / 4, 30] {
            let mut s = Float::with_val(prec, Float::i_exp(1, -e));
            s.add_assign_round(1, Round::Up);
            s.mul_assign_round(estimate, Round::Up);
            if s >= best {
                break;
            }
            if below_shift(m, &s) {
                best = s;
                break;
            }
        }
    }
    best
}

fn declined(report: &BoundReport, reason: String) -> BoundReport {
    let mut out = report.clone();
    out.certified = false;
    out.certified_interval = None;
    out.note = format!(
        "{}; certification declined: {reason}",
        super::UNCERTIFIED_NOTE
    );
    out
}

/// Replaces `η` by a rigorous lower bound and `ξ` by a rigorous upper
/// bound, so that `lower_bound` is certified. Families too large to write
/// out explicitly, bond families and models without an up-down mirror come
/// back uncertified with the reason in `note`.
pub fn certify(
    report: &BoundReport,
    model: &ModelSpec,
    limits: &CertifyLimits,
) -> Result<BoundReport> {
    let f = &report.half_rows;
    if f.bond {
        return Ok(declined(
            report,
            "the bond-state maps are not symmetric".into(),
        ));
    }
    let (q, n) = (f.q, f.n());
    let (dim_r, dim_s) = (q * n * n, q * q * n * n);
    if dim_r > limits.max_r || dim_s > limits.max_s {
        return Ok(declined(
            report,
            format!(
                "explicit matrices of dimension {dim_r} and {dim_s} exceed the size guard ({} and {})",
                limits.max_r, limits.max_s
            ),
        ));
    }
    let r = build_r(f);
    let s = build_s(f, model);
    if !is_symmetric(&s) {
        return Ok(declined(
            report,
            format!("the S matrix of {} is not symmetric", model.name()),
        ));
    }
    let x = flatten(&report.x);
    let y = flatten(&report.y);
    let xi_rq = rayleigh(&r, &x)?;
    let eta_rq = rayleigh(&s, &y)?;
    let xi_hi = upper_bound(&r, &x, report.xi.as_float(), limits);
    let eta_hi = upper_bound(&s, &y, report.eta.as_float(), limits);
    let (xi_lo, eta_lo) = (xi_rq.lo, eta_rq.lo);
    if xi_lo <= 0 || eta_lo <= 0 {
        return Ok(declined(
            report,
            "a Rayleigh quotient enclosure reaches zero".into(),
        ));
    }
    let prec = f.prec();
    let lo = rounded(
        prec,
        |z, r| z.div_assign_round(&xi_hi, r),
        &eta_lo,
        Round::Down,
    );
    let hi = rounded(
        prec,
        |z, r| z.div_assign_round(&xi_lo, r),
        &eta_hi,
        Round::Up,
    );
    let mut out = report.clone();
    out.xi = BigReal::from_float(xi_hi);
    out.eta = BigReal::from_float(eta_lo);
    out.lower_bound = BigReal::from_float(lo.clone());
    out.certified = true;
    out.certified_interval = Some((BigReal::from_float(lo), BigReal::from_float(hi)));
    out.note =
        "certified: outward-rounded Rayleigh quotient for eta, spectral-radius certificate for xi"
            .into();
    Ok(out)
}
