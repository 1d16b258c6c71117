//! The symmetric engine for C4 vertex and face models.
//!
//! `A(a)` is the corner transfer matrix of one quadrant whose corner spin is
//! `a`; `F(a, b)` the half-row transfer matrix whose end spins are `a` and
//! `b`. Expanded matrices are indexed by `(spin, α)` with the spin slow, so
//! block `(d, a)` of an expanded matrix starts at row `d·n`, column `a·n`.

use std::collections::HashMap;

use super::{drive, RunTrace, Schedule, Sweepable, Variant};
use crate::error::{Error, Result};
use crate::models::{ModelSpec, Placement, Symmetry};
use crate::numerics::{
    check_precision, magnitude_order, mat_mul, mul_auto, sym_eig, sym_eig_with_guess, BigReal,
    Matrix,
};

/// State of the symmetric engine.
#[derive(Clone, Debug)]
pub struct CtmEnvironment {
    pub n: usize,
    pub q: usize,
    pub prec: u32,
    /// Corner matrices `A(a)`, one per spin.
    pub a: Vec<Matrix>,
    /// Half-row matrices, `f[a*q + b] = F(a, b)`.
    pub f: Vec<Matrix>,
    /// Number of expansions performed.
    pub p_equiv: usize,
    /// Set once a reduction dropped a nonzero eigenvalue.
    pub truncated: bool,
    /// The unnormalised matrices are `scale_a·A` and `scale_f·F`.
    pub scale_a: BigReal,
    pub scale_f: BigReal,
    pub sweeps: usize,
    // Eigenvectors from the previous sweep, per spin; speeds up Jacobi once
    // the size has stopped changing. Not part of the logical state.
    guesses: Vec<Option<Matrix>>,
}

impl CtmEnvironment {
    /// Assembles an environment from explicit matrices.
    pub fn from_parts(a: Vec<Matrix>, f: Vec<Matrix>, prec: u32) -> Result<Self> {
        let q = a.len();
        if q == 0 || f.len() != q * q {
            return Err(Error::Dimension(format!(
                "{} corner and {} half-row matrices",
                a.len(),
                f.len()
            )));
        }
        let n = a[0].rows();
        for m in a.iter().chain(&f) {
            if m.rows() != n || m.cols() != n || m.precision() != prec {
                return Err(Error::Dimension(format!(
                    "every matrix must be {n}x{n} at {prec} bits"
                )));
            }
        }
        Ok(CtmEnvironment {
            n,
            q,
            prec,
            a,
            f,
            p_equiv: 0,
            truncated: false,
            scale_a: BigReal::one(prec),
            scale_f: BigReal::one(prec),
            sweeps: 0,
            guesses: vec![None; q],
        })
    }

    pub fn corner(&self, a: usize) -> &Matrix {
        &self.a[a]
    }

    pub fn half_row(&self, a: usize, b: usize) -> &Matrix {
        &self.f[a * self.q + b]
    }

    /// Largest `|F(a,b) − F(b,a)ᵀ|` over the family.
    pub fn f_transpose_deviation(&self) -> BigReal {
        let mut worst = BigReal::zero(self.prec);
        for a in 0..self.q {
            for b in a..self.q {
                let d = self
                    .half_row(a, b)
                    .sub(&self.half_row(b, a).transpose())
                    .map(|m| m.max_abs());
                if let Ok(d) = d {
                    if d > worst {
                        worst = d;
                    }
                }
            }
        }
        worst
    }

    /// Applies `A(a) ← P(a)ᵀ A(a) P(a)` and `F(a,b) ← P(a)ᵀ F(a,b) P(b)`.
    pub fn gauge_transform(&self, p: &[Matrix]) -> Result<CtmEnvironment> {
        if p.len() != self.q {
            return Err(Error::Dimension(format!(
                "{} gauge matrices for q = {}",
                p.len(),
                self.q
            )));
        }
        let mut out = self.clone();
        for a in 0..self.q {
            out.a[a] = mat_mul(&p[a].transpose(), &mat_mul(&self.a[a], &p[a])?)?;
            for b in 0..self.q {
                out.f[a * self.q + b] =
                    mat_mul(&p[a].transpose(), &mat_mul(self.half_row(a, b), &p[b])?)?;
            }
        }
        out.n = p[0].cols();
        out.guesses = vec![None; self.q];
        Ok(out)
    }

    /// Multiplies every `A` by `alpha` and every `F` by `phi`.
    pub fn rescaled(&self, alpha: &BigReal, phi: &BigReal) -> CtmEnvironment {
        let mut out = self.clone();
        for m in &mut out.a {
            m.scale_in_place(alpha);
        }
        for m in &mut out.f {
            m.scale_in_place(phi);
        }
        out.scale_a = &out.scale_a / alpha;
        out.scale_f = &out.scale_f / phi;
        out
    }

    pub(crate) fn clear_guesses(&mut self) {
        self.guesses = vec![None; self.q];
    }
}

fn check_model(model: &ModelSpec) -> Result<()> {
    if model.placement() == Placement::Bond {
        return Err(Error::EngineMismatch(format!(
            "{} places states on bonds; use the bond engine",
            model.name()
        )));
    }
    if model.symmetry() != Symmetry::C4 {
        return Err(Error::EngineMismatch(format!(
            "{} is only C2 symmetric; use the asymmetric engine",
            model.name()
        )));
    }
    Ok(())
}

fn check_env(env: &CtmEnvironment, model: &ModelSpec) -> Result<()> {
    if env.q != model.q() {
        return Err(Error::EngineMismatch(format!(
            "environment has q = {}, model {} has q = {}",
            env.q,
            model.name(),
            model.q()
        )));
    }
    Ok(())
}

/// 1×1 start: `A(a) = [1]`, `F(a,b) = [1]` when `a` can sit directly above
/// `b` in some valid cell, `[0]` otherwise.
pub fn init_environment(model: &ModelSpec, prec: u32) -> Result<CtmEnvironment> {
    check_model(model)?;
    check_precision(prec)?;
    let q = model.q();
    let a = vec![Matrix::identity(1, prec); q];
    let mut f = vec![Matrix::zeros(1, 1, prec); q * q];
    for [ca, cb, cc, cd] in model.valid_cells() {
        f[ca * q + cc] = Matrix::identity(1, prec);
        f[cb * q + cd] = Matrix::identity(1, prec);
    }
    CtmEnvironment::from_parts(a, f, prec)
}

/// One shell of expansion:
/// `A_l(c)|_{d,a} = Σ_b ω(a,b;c,d) F(d,b) A(b) F(b,a)` and
/// `F_l(d,c)|_{b,a} = ω(a,b;c,d) F(b,a)`.
pub fn expand(env: &CtmEnvironment, model: &ModelSpec) -> Result<CtmEnvironment> {
    check_model(model)?;
    check_env(env, model)?;
    let (q, n, prec) = (env.q, env.n, env.prec);
    let nl = q * n;

    // K(b, d, a) = F(d,b) A(b) F(b,a) for d ≤ a; the rest are transposes.
    let mut needed = vec![false; q * q * q];
    for [a, b, c, d] in model.valid_cells() {
        let _ = c;
        let (lo, hi) = if d <= a { (d, a) } else { (a, d) };
        needed[(b * q + lo) * q + hi] = true;
    }
    let mut k: HashMap<(usize, usize, usize), Matrix> = HashMap::new();
    for b in 0..q {
        let mut fa_cache: Vec<Option<Matrix>> = vec![None; q];
        for d in 0..q {
            for a in d..q {
                if !needed[(b * q + d) * q + a] {
                    continue;
                }
                let left = env.half_row(d, b);
                let right = env.half_row(b, a);
                if left.is_zero() || right.is_zero() {
                    continue;
                }
                if fa_cache[d].is_none() {
                    fa_cache[d] = Some(mul_auto(left, &env.a[b])?);
                }
                let fa = fa_cache[d].as_ref().expect("just filled");
                k.insert((b, d, a), mat_mul(fa, right)?);
            }
        }
    }

    let mut a_l = vec![Matrix::zeros(nl, nl, prec); q];
    for (c, a_c) in a_l.iter_mut().enumerate() {
        for d in 0..q {
            for a in 0..q {
                for b in 0..q {
                    if !model.allowed(a, b, c, d) {
                        continue;
                    }
                    if d <= a {
                        if let Some(m) = k.get(&(b, d, a)) {
                            a_c.add_block(d * n, a * n, m);
                        }
                    } else if let Some(m) = k.get(&(b, a, d)) {
                        a_c.add_block(d * n, a * n, &m.transpose());
                    }
                }
            }
        }
        a_c.check_finite("expand")?;
    }

    let mut f_l = vec![Matrix::zeros(nl, nl, prec); q * q];
    for [a, b, c, d] in model.valid_cells() {
        f_l[d * q + c].set_block(b * n, a * n, env.half_row(b, a));
    }

    Ok(CtmEnvironment {
        n: nl,
        q,
        prec,
        a: a_l,
        f: f_l,
        p_equiv: env.p_equiv + 1,
        truncated: env.truncated,
        scale_a: &env.scale_a * &(&env.scale_f * &env.scale_f),
        scale_f: env.scale_f.clone(),
        sweeps: env.sweeps,
        guesses: env.guesses.clone(),
    })
}

// Spins whose block row in `m` holds a nonzero entry.
fn active_blocks(m: &Matrix, q: usize, n: usize) -> Vec<usize> {
    (0..q)
        .filter(|&s| (s * n..(s + 1) * n).any(|r| (0..m.cols()).any(|c| !m.get(r, c).is_zero())))
        .collect()
}

/// Keeps the `n_target` largest-magnitude eigenvectors of each expanded
/// corner: `A(a) ← diag(λ)`, `F(a,b) ← P(a)ᵀ F_l(a,b) P(b)`. Returns the new
/// environment and any degenerate-cut warnings.
pub fn reduce(env_l: &CtmEnvironment, n_target: usize) -> Result<(CtmEnvironment, Vec<String>)> {
    let mut env = env_l.clone();
    let warnings = reduce_in_place(&mut env, n_target)?;
    Ok((env, warnings))
}

fn reduce_in_place(env: &mut CtmEnvironment, n_target: usize) -> Result<Vec<String>> {
    let (q, nl, prec) = (env.q, env.n, env.prec);
    if n_target == 0 || n_target > nl {
        return Err(Error::Dimension(format!(
            "cannot reduce dimension {nl} to {n_target}"
        )));
    }
    if nl % q != 0 {
        return Err(Error::Dimension(format!(
            "dimension {nl} is not a multiple of q = {q}"
        )));
    }
    let n_in = nl / q;
    let mut warnings = Vec::new();
    let mut projectors = Vec::with_capacity(q);
    let mut corners = Vec::with_capacity(q);
    let mut dropped_nonzero = false;
    for c in 0..q {
        let a_l = &env.a[c];
        let active = active_blocks(a_l, q, n_in);
        let rows: Vec<usize> = active
            .iter()
            .flat_map(|&s| s * n_in..(s + 1) * n_in)
            .collect();
        let dim = rows.len();
        let mut values: Vec<BigReal> = Vec::with_capacity(n_target);
        let mut p = Matrix::zeros(nl, n_target, prec);
        let mut filled = 0;
        if dim > 0 {
            let mut sub = Matrix::zeros(dim, dim, prec);
            for (i, &r) in rows.iter().enumerate() {
                for (j, &s) in rows.iter().enumerate() {
                    sub.set(i, j, &a_l.get(r, s));
                }
            }
            let eig = match env.guesses.get(c).and_then(Option::as_ref) {
                Some(g) if g.rows() == dim => sym_eig_with_guess(&sub, g)?,
                _ => sym_eig(&sub)?,
            };
            let order = magnitude_order(&eig.values);
            let keep = n_target.min(dim);
            for (col, &src) in order.iter().take(keep).enumerate() {
                for (i, &r) in rows.iter().enumerate() {
                    p.set(r, col, &eig.vectors.get(i, src));
                }
                values.push(eig.values[src].clone());
            }
            filled = keep;
            if dim > keep {
                let kept = eig.values[order[keep - 1]].abs();
                let next = eig.values[order[keep]].abs();
                if !next.is_zero() {
                    dropped_nonzero = true;
                }
                let gap = &kept - &next;
                if !kept.is_zero() && gap <= &kept * &BigReal::pow2(-(prec as i32) / 4, prec) {
                    warnings.push(format!(
                        "degenerate cut for spin {c} at n = {n_target}: |λ_n| = {:.6e}, |λ_n+1| = {:.6e}",
                        kept.to_f64(),
                        next.to_f64()
                    ));
                }
            }
            if env.guesses.len() == q {
                env.guesses[c] = Some(eig.vectors);
            }
        }
        // Pad with coordinate vectors outside the active blocks (eigenvalue 0).
        let mut r = 0;
        while filled < n_target {
            if !rows.contains(&r) {
                p.set_f64(r, filled, 1.0);
                values.push(BigReal::zero(prec));
                filled += 1;
            }
            r += 1;
        }
        corners.push(Matrix::diag(&values, prec));
        projectors.push(p);
    }

    let mut f = vec![Matrix::zeros(n_target, n_target, prec); q * q];
    for a in 0..q {
        let pt = projectors[a].transpose();
        for b in a..q {
            let fl = env.half_row(a, b);
            let m = if fl.is_zero() {
                Matrix::zeros(n_target, n_target, prec)
            } else {
                mat_mul(&pt, &mat_mul(fl, &projectors[b])?)?
            };
            if a != b {
                f[b * q + a] = m.transpose();
            }
            f[a * q + b] = m;
        }
    }
    env.a = corners;
    env.f = f;
    env.n = n_target;
    env.truncated |= dropped_nonzero;
    Ok(warnings)
}

// Top-left entry of the first matrix (in index order) whose top-left entry
// is nonzero.
fn pivot(family: &[Matrix]) -> Option<(usize, BigReal)> {
    family
        .iter()
        .enumerate()
        .map(|(i, m)| (i, m.get(0, 0)))
        .find(|(_, v)| !v.is_zero())
}

/// Divides every `A` by `A(0)[0,0]` and every `F` by `F(0,0)[0,0]`. When a
/// pivot is exactly zero (for colourings `F(0,0) ≡ 0`), the first nonzero
/// top-left entry in index order is used instead.
pub fn normalize(env: &CtmEnvironment) -> Result<CtmEnvironment> {
    let mut out = env.clone();
    normalize_in_place(&mut out)?;
    Ok(out)
}

fn normalize_in_place(env: &mut CtmEnvironment) -> Result<()> {
    let (_, alpha) = pivot(&env.a)
        .ok_or_else(|| Error::ZeroPivot("every corner matrix has A[0,0] = 0".into()))?;
    let (_, phi) = pivot(&env.f)
        .ok_or_else(|| Error::ZeroPivot("every half-row matrix has F[0,0] = 0".into()))?;
    for m in &mut env.a {
        m.div_in_place(&alpha);
    }
    for m in &mut env.f {
        m.div_in_place(&phi);
    }
    env.scale_a = &env.scale_a * &alpha;
    env.scale_f = &env.scale_f * &phi;
    Ok(())
}

/// Trace-ratio estimate `Z1·Z4 / Zrow²` with
/// `Z1 = Σ_a Tr A(a)⁴`,
/// `Zrow = Σ_{a,b} Tr A(a)² F(a,b) A(b)² F(b,a)` and
/// `Z4 = Σ ω(a,b;c,d) Tr A(a)F(a,c)A(c)F(c,d)A(d)F(d,b)A(b)F(b,a)`.
pub fn estimate_kappa(env: &CtmEnvironment, model: &ModelSpec) -> Result<BigReal> {
    check_env(env, model)?;
    let (z1, zrow, z4) = partition_parts(env, model)?;
    if zrow.is_zero() {
        return Err(Error::Degenerate("half-row partition sum vanished".into()));
    }
    (&z1 * &z4 / (&zrow * &zrow)).checked("estimate_kappa")
}

pub(crate) fn partition_parts(
    env: &CtmEnvironment,
    model: &ModelSpec,
) -> Result<(BigReal, BigReal, BigReal)> {
    let (q, prec) = (env.q, env.prec);
    let a2: Vec<Matrix> = env
        .a
        .iter()
        .map(|a| mul_auto(a, a))
        .collect::<Result<_>>()?;
    let mut z1 = BigReal::zero(prec);
    for m in &a2 {
        z1 = z1 + m.trace_of_product(m)?;
    }

    let mut zrow = BigReal::zero(prec);
    for a in 0..q {
        for b in a..q {
            let f = env.half_row(a, b);
            if f.is_zero() {
                continue;
            }
            let left = mul_auto(&a2[a], f)?;
            let right = mul_auto(&a2[b], env.half_row(b, a))?;
            let t = left.trace_of_product(&right)?;
            zrow = if a == b { zrow + t } else { zrow + &t + &t };
        }
    }

    let mut h: Vec<Option<Matrix>> = vec![None; q * q];
    for x in 0..q {
        for y in 0..q {
            let f = env.half_row(x, y);
            if !f.is_zero() {
                h[x * q + y] = Some(mul_auto(&env.a[x], f)?);
            }
        }
    }
    let mut m3: HashMap<(usize, usize, usize), Option<Matrix>> = HashMap::new();
    let mut triple = |x: usize, y: usize, z: usize| -> Result<Option<Matrix>> {
        if let Some(m) = m3.get(&(x, y, z)) {
            return Ok(m.clone());
        }
        let m = match (&h[x * q + y], &h[y * q + z]) {
            (Some(l), Some(r)) => Some(mat_mul(l, r)?),
            _ => None,
        };
        m3.insert((x, y, z), m.clone());
        Ok(m)
    };
    let mut z4 = BigReal::zero(prec);
    for [a, b, c, d] in model.valid_cells() {
        if let (Some(l), Some(r)) = (triple(a, c, d)?, triple(d, b, a)?) {
            z4 = z4 + l.trace_of_product(&r)?;
        }
    }
    Ok((z1, zrow, z4))
}

/// Exact count of valid configurations on the `(2p+1) × (2p+1)` window,
/// `Σ_a Tr A(a)⁴` with the normalisation undone. Refused once a reduction
/// has discarded weight.
pub fn finite_partition(env: &CtmEnvironment) -> Result<BigReal> {
    if env.truncated {
        return Err(Error::Truncated);
    }
    let mut z = BigReal::zero(env.prec);
    for a in &env.a {
        let a2 = mul_auto(a, a)?;
        z = z + a2.trace_of_product(&a2)?;
    }
    let s2 = &env.scale_a * &env.scale_a;
    Ok(z * &s2 * &s2)
}

impl Sweepable for CtmEnvironment {
    fn variant(&self) -> Variant {
        Variant::Symmetric
    }

    fn n(&self) -> usize {
        self.n
    }

    fn precision(&self) -> u32 {
        self.prec
    }

    fn sweeps(&self) -> usize {
        self.sweeps
    }

    fn expanded_n(&self, model: &ModelSpec) -> usize {
        model.q() * self.n
    }

    fn sweep(&mut self, model: &ModelSpec, n_target: usize) -> Result<Vec<String>> {
        let same_size = n_target == self.n;
        let mut next = expand(self, model)?;
        if !same_size {
            next.clear_guesses();
        }
        let warnings = reduce_in_place(&mut next, n_target)?;
        normalize_in_place(&mut next)?;
        next.sweeps += 1;
        *self = next;
        Ok(warnings)
    }

    fn estimate(&self, model: &ModelSpec) -> Result<BigReal> {
        estimate_kappa(self, model)
    }
}

/// Full run from the 1×1 start.
pub fn run(
    model: &ModelSpec,
    schedule: &Schedule,
    prec: u32,
) -> Result<(CtmEnvironment, RunTrace)> {
    let mut env = init_environment(model, prec)?;
    let trace = drive(&mut env, model, schedule, None, &mut |_, _| Ok(()))?;
    Ok((env, trace))
}
