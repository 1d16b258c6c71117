use std::collections::HashMap;

use crate::ctmrg::{
    drive, family_names, take_family, Checkpoint, CheckpointEnv, RunTrace, Schedule, SpectrumDump,
    Sweepable, Variant,
};
use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::numerics::{
    check_precision, dominant_invariant_basis_from, magnitude_order, mat_mul, mul_auto,
    orthonormalize_columns, sym_eig, BigReal, Matrix, SubspaceOptions,
};

/// State of the asymmetric engine; `bond` selects the bond-state layout.
#[derive(Clone, Debug)]
pub struct AsymEnvironment {
    pub n: usize,
    pub q: usize,
    pub prec: u32,
    pub bond: bool,
    /// Corner families; one entry per spin, or a single entry for bonds.
    pub a: Vec<Matrix>,
    pub b: Vec<Matrix>,
    /// `f[x*q + y] = F(x, y)` for spins, `f[x] = F(x)` for bonds.
    pub f: Vec<Matrix>,
    pub g: Vec<Matrix>,
    pub p_equiv: usize,
    pub truncated: bool,
    pub scale_a: BigReal,
    pub scale_b: BigReal,
    pub scale_f: BigReal,
    pub scale_g: BigReal,
    pub sweeps: usize,
    warm: Vec<Warm>,
}

// Subspace iterate carried between sweeps on the nonsymmetric path.
type Warm = Option<Matrix>;

/// The four plane partition sums with all normalisations undone.
#[derive(Clone, Debug)]
pub struct PartitionSums {
    pub z1: BigReal,
    pub zrow: BigReal,
    pub zcol: BigReal,
    pub z4: BigReal,
}

impl AsymEnvironment {
    pub fn from_parts(
        bond: bool,
        q: usize,
        a: Vec<Matrix>,
        b: Vec<Matrix>,
        f: Vec<Matrix>,
        g: Vec<Matrix>,
        prec: u32,
    ) -> Result<Self> {
        let (corners, strips) = if bond { (1, q) } else { (q, q * q) };
        if a.len() != corners || b.len() != corners || f.len() != strips || g.len() != strips {
            return Err(Error::Dimension(format!(
                "expected {corners} corners and {strips} strips per family"
            )));
        }
        let n = a[0].rows();
        for m in a.iter().chain(&b).chain(&f).chain(&g) {
            if m.rows() != n || m.cols() != n || m.precision() != prec {
                return Err(Error::Dimension(format!(
                    "every matrix must be {n}x{n} at {prec} bits"
                )));
            }
        }
        Ok(AsymEnvironment {
            n,
            q,
            prec,
            bond,
            a,
            b,
            f,
            g,
            p_equiv: 0,
            truncated: false,
            scale_a: BigReal::one(prec),
            scale_b: BigReal::one(prec),
            scale_f: BigReal::one(prec),
            scale_g: BigReal::one(prec),
            sweeps: 0,
            warm: vec![Warm::default(); corners],
        })
    }

    fn sectors(&self) -> usize {
        if self.bond {
            1
        } else {
            self.q
        }
    }

    /// `F(x, y)`; spin engine only.
    pub fn half_row(&self, x: usize, y: usize) -> &Matrix {
        &self.f[x * self.q + y]
    }

    /// `G(x, y)`; spin engine only.
    pub fn half_column(&self, x: usize, y: usize) -> &Matrix {
        &self.g[x * self.q + y]
    }

    /// Applies per-sector gauges: `A ← Uᵀ A V`, `B ← Vᵀ B U`, `F ← Vᵀ F V`,
    /// `G ← Uᵀ G U`, where `u[s]` acts on the vertical legs and `v[s]` on
    /// the horizontal ones.
    pub fn gauge_transform(&self, u: &[Matrix], v: &[Matrix]) -> Result<AsymEnvironment> {
        let sectors = self.sectors();
        if u.len() != sectors || v.len() != sectors {
            return Err(Error::Dimension(format!(
                "expected {sectors} gauge matrices per leg type"
            )));
        }
        let mut out = self.clone();
        let ut: Vec<Matrix> = u.iter().map(Matrix::transpose).collect();
        let vt: Vec<Matrix> = v.iter().map(Matrix::transpose).collect();
        for s in 0..sectors {
            out.a[s] = mat_mul(&ut[s], &mat_mul(&self.a[s], &v[s])?)?;
            out.b[s] = mat_mul(&vt[s], &mat_mul(&self.b[s], &u[s])?)?;
        }
        for (i, (f, g)) in self.f.iter().zip(&self.g).enumerate() {
            let (x, y) = if self.bond {
                (0, 0)
            } else {
                (i / self.q, i % self.q)
            };
            out.f[i] = mat_mul(&vt[x], &mat_mul(f, &v[y])?)?;
            out.g[i] = mat_mul(&ut[x], &mat_mul(g, &u[y])?)?;
        }
        out.n = u[0].cols();
        out.warm = vec![Warm::default(); sectors];
        Ok(out)
    }

    /// Largest `|F(x,y) − F(y,x)ᵀ|` (spins) or `|F(x) − F(x)ᵀ|` (bonds).
    pub fn f_transpose_deviation(&self) -> BigReal {
        let mut worst = BigReal::zero(self.prec);
        for (i, f) in self.f.iter().enumerate() {
            let partner = if self.bond {
                i
            } else {
                (i % self.q) * self.q + i / self.q
            };
            if let Ok(m) = f.sub(&self.f[partner].transpose()) {
                let d = m.max_abs();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }

    /// Spectrum of the symmetric part of `A(s)B(s)`; for mirror-symmetric
    /// models `B = Aᵀ` and these are the squared singular values of `A`.
    pub fn spectrum(&self, model: &ModelSpec) -> Result<SpectrumDump> {
        let mut raw = Vec::with_capacity(self.sectors());
        for s in 0..self.sectors() {
            let m = mat_mul(&self.a[s], &self.b[s])?;
            let mut sym = m.add(&m.transpose())?;
            sym.div_in_place(&BigReal::from_u64(2, self.prec));
            raw.push(
                sym_eig(&sym)?
                    .values
                    .iter()
                    .map(|v| v.abs().sqrt())
                    .collect(),
            );
        }
        Ok(SpectrumDump::from_sectors(model.name(), self.n, raw))
    }
}

fn check_model(model: &ModelSpec, bond: bool) -> Result<()> {
    if model.placement().is_bond() != bond {
        let (engine, wanted) = if bond {
            ("bond", "bonds")
        } else {
            ("asymmetric", "vertices or faces")
        };
        return Err(Error::EngineMismatch(format!(
            "the {engine} engine needs states on {wanted}; {} places them on {}s",
            model.name(),
            model.placement()
        )));
    }
    Ok(())
}

fn check_env(env: &AsymEnvironment, model: &ModelSpec) -> Result<()> {
    check_model(model, env.bond)?;
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

/// 1×1 start. Spin models: `F(x,y) = [1]` when `x` can sit directly above
/// `y`, `G(x,y) = [1]` when `y` can sit directly left of `x`. Bond models:
/// every matrix `[1]`.
pub fn init_asym(model: &ModelSpec, prec: u32) -> Result<AsymEnvironment> {
    check_precision(prec)?;
    let q = model.q();
    let bond = model.placement().is_bond();
    let one = Matrix::identity(1, prec);
    if bond {
        return AsymEnvironment::from_parts(
            true,
            q,
            vec![one.clone()],
            vec![one.clone()],
            vec![one.clone(); q],
            vec![one; q],
            prec,
        );
    }
    let zero = Matrix::zeros(1, 1, prec);
    let mut f = vec![zero.clone(); q * q];
    let mut g = vec![zero; q * q];
    for [a, b, c, d] in model.valid_cells() {
        f[a * q + c] = one.clone();
        f[b * q + d] = one.clone();
        g[b * q + a] = one.clone();
        g[d * q + c] = one.clone();
    }
    AsymEnvironment::from_parts(false, q, vec![one.clone(); q], vec![one; q], f, g, prec)
}

/// One shell of expansion. Spin models:
/// `A_l(d)|_{b,c} = Σ_a ω G(b,a) A(a) F(a,c)`,
/// `B_l(c)|_{d,a} = Σ_b ω F(d,b) B(b) G(b,a)`,
/// `F_l(c,a)|_{d,b} = ω F(d,b)`, `G_l(d,c)|_{b,a} = ω G(b,a)`.
/// Bond models (`ω(N=a, W=b, E=c, S=d)`):
/// `A_l|_{c,d} = Σ_{ab} ω G(a) A F(b)`, `B_l|_{d,b} = Σ_{ac} ω F(c) B G(a)`,
/// `F_l(b)|_{d,a} = Σ_c ω F(c)`, `G_l(d)|_{c,b} = Σ_a ω G(a)`.
pub fn expand_asym(env: &AsymEnvironment, model: &ModelSpec) -> Result<AsymEnvironment> {
    check_env(env, model)?;
    let (q, n, prec) = (env.q, env.n, env.prec);
    let nl = q * n;
    let cells = model.valid_cells();
    let mut out = env.clone();
    if env.bond {
        let mut ga: Vec<Option<Matrix>> = vec![None; q];
        let mut fb: Vec<Option<Matrix>> = vec![None; q];
        let mut gaf: HashMap<(usize, usize), Matrix> = HashMap::new();
        let mut fbg: HashMap<(usize, usize), Matrix> = HashMap::new();
        let mut a_l = Matrix::zeros(nl, nl, prec);
        let mut b_l = Matrix::zeros(nl, nl, prec);
        let mut f_l = vec![Matrix::zeros(nl, nl, prec); q];
        let mut g_l = vec![Matrix::zeros(nl, nl, prec); q];
        for &[a, b, c, d] in &cells {
            if !gaf.contains_key(&(a, b)) {
                if ga[a].is_none() {
                    ga[a] = Some(mul_auto(&env.g[a], &env.a[0])?);
                }
                let m = mul_auto(ga[a].as_ref().expect("filled"), &env.f[b])?;
                gaf.insert((a, b), m);
            }
            if !fbg.contains_key(&(c, a)) {
                if fb[c].is_none() {
                    fb[c] = Some(mul_auto(&env.f[c], &env.b[0])?);
                }
                let m = mul_auto(fb[c].as_ref().expect("filled"), &env.g[a])?;
                fbg.insert((c, a), m);
            }
            a_l.add_block(c * n, d * n, &gaf[&(a, b)]);
            b_l.add_block(d * n, b * n, &fbg[&(c, a)]);
            f_l[b].add_block(d * n, a * n, &env.f[c]);
            g_l[d].add_block(c * n, b * n, &env.g[a]);
        }
        out.a = vec![a_l];
        out.b = vec![b_l];
        out.f = f_l;
        out.g = g_l;
    } else {
        let mut ga: HashMap<(usize, usize), Matrix> = HashMap::new();
        let mut fb: HashMap<(usize, usize), Matrix> = HashMap::new();
        let mut gaf: HashMap<(usize, usize, usize), Matrix> = HashMap::new();
        let mut fbg: HashMap<(usize, usize, usize), Matrix> = HashMap::new();
        let mut a_l = vec![Matrix::zeros(nl, nl, prec); q];
        let mut b_l = vec![Matrix::zeros(nl, nl, prec); q];
        let mut f_l = vec![Matrix::zeros(nl, nl, prec); q * q];
        let mut g_l = vec![Matrix::zeros(nl, nl, prec); q * q];
        for &[a, b, c, d] in &cells {
            let (gba, fac, fdb) = (
                env.half_column(b, a),
                env.half_row(a, c),
                env.half_row(d, b),
            );
            if !gba.is_zero() && !fac.is_zero() {
                if !gaf.contains_key(&(a, b, c)) {
                    if !ga.contains_key(&(b, a)) {
                        ga.insert((b, a), mul_auto(gba, &env.a[a])?);
                    }
                    let m = mul_auto(&ga[&(b, a)], fac)?;
                    gaf.insert((a, b, c), m);
                }
                a_l[d].add_block(b * n, c * n, &gaf[&(a, b, c)]);
            }
            if !fdb.is_zero() && !gba.is_zero() {
                if !fbg.contains_key(&(b, d, a)) {
                    if !fb.contains_key(&(d, b)) {
                        fb.insert((d, b), mul_auto(fdb, &env.b[b])?);
                    }
                    let m = mul_auto(&fb[&(d, b)], gba)?;
                    fbg.insert((b, d, a), m);
                }
                b_l[c].add_block(d * n, a * n, &fbg[&(b, d, a)]);
            }
            f_l[c * q + a].set_block(d * n, b * n, fdb);
            g_l[d * q + c].set_block(b * n, a * n, gba);
        }
        out.a = a_l;
        out.b = b_l;
        out.f = f_l;
        out.g = g_l;
    }
    for m in out.a.iter().chain(&out.b) {
        m.check_finite("expand_asym")?;
    }
    out.n = nl;
    out.p_equiv += 1;
    let fg = &env.scale_f * &env.scale_g;
    out.scale_a = &env.scale_a * &fg;
    out.scale_b = &env.scale_b * &fg;
    Ok(out)
}

// Nonzero rows of `m`: eigenvectors with nonzero eigenvalue vanish elsewhere.
fn live_rows(m: &Matrix) -> Vec<usize> {
    (0..m.rows())
        .filter(|&r| (0..m.cols()).any(|c| !m.get(r, c).is_zero()))
        .collect()
}

struct Projector {
    p: Matrix,
    dropped: bool,
    warning: Option<String>,
}

// Orthonormal basis of the dominant `k`-dimensional invariant subspace of
// `m`, padded with coordinate vectors outside its live rows.
fn numerically_symmetric(m: &Matrix) -> bool {
    let allowed = &m.max_abs() * &BigReal::pow2(48 - m.precision() as i32, m.precision());
    m.symmetry_deviation() <= allowed
}

fn projector(
    m: &Matrix,
    k: usize,
    symmetric: bool,
    warm: &mut Option<Matrix>,
    label: &str,
) -> Result<Projector> {
    let (dim_full, prec) = (m.rows(), m.precision());
    let rows = live_rows(m);
    let dim = rows.len();
    let keep = k.min(dim);
    let mut p = Matrix::zeros(dim_full, k, prec);
    let mut dropped = false;
    let mut warning = None;
    if dim > 0 {
        let mut sub = Matrix::zeros(dim, dim, prec);
        for (i, &r) in rows.iter().enumerate() {
            for (j, &c) in rows.iter().enumerate() {
                sub.set(i, j, &m.get(r, c));
            }
        }
        // Products that come out symmetric to rounding take the Jacobi path too.
        let symmetric = symmetric || numerically_symmetric(&sub);
        let basis = if symmetric {
            // Symmetric in exact arithmetic; remove the rounding asymmetry.
            let mut s = sub.add(&sub.transpose())?;
            s.div_in_place(&BigReal::from_u64(2, prec));
            let eig = sym_eig(&s)?;
            let order = magnitude_order(&eig.values);
            if dim > keep {
                let kept = eig.values[order[keep - 1]].abs();
                let next = eig.values[order[keep]].abs();
                dropped = !next.is_zero();
                let gap = &kept - &next;
                if !kept.is_zero() && gap <= &kept * &BigReal::pow2(-(prec as i32) / 4, prec) {
                    warning = Some(format!(
                        "degenerate cut in {label} at n = {k}: |λ_n| = {:.6e}, |λ_n+1| = {:.6e}",
                        kept.to_f64(),
                        next.to_f64()
                    ));
                }
            }
            let mut basis = Matrix::zeros(dim, keep, prec);
            for (col, &src) in order.iter().take(keep).enumerate() {
                for i in 0..dim {
                    basis.set(i, col, &eig.vectors.get(i, src));
                }
            }
            basis
        } else {
            let opts = SubspaceOptions::for_precision(prec);
            let start = warm.as_ref().filter(|w| w.rows() == dim);
            let found = dominant_invariant_basis_from(&sub, keep, &opts, start)?;
            dropped = dim > keep;
            if let Some(t) = &found.tie {
                warning = Some(format!(
                    "degenerate cut in {label} at n = {k}: |λ_n| ≈ {:.6e}, |λ_n+1| ≈ {:.6e}",
                    t.kept, t.discarded
                ));
            }
            *warm = Some(found.search);
            found.basis
        };
        for (i, &r) in rows.iter().enumerate() {
            for col in 0..keep {
                p.set(r, col, &basis.get(i, col));
            }
        }
    }
    let mut filled = keep;
    let mut r = 0;
    while filled < k {
        if !rows.contains(&r) {
            p.set_f64(r, filled, 1.0);
            filled += 1;
        }
        r += 1;
    }
    Ok(Projector {
        p,
        dropped,
        warning,
    })
}

/// Projects onto the dominant invariant subspaces of `A_l(s)B_l(s)` (the
/// vertical legs, `P_AB`) and `B_l(s)A_l(s)` (the horizontal legs, `P_BA`).
/// `symmetric` declares that these products are symmetric in exact
/// arithmetic, which holds for models with a plain left-right mirror.
pub fn reduce_asym(
    env_l: &AsymEnvironment,
    n_target: usize,
    symmetric: bool,
) -> Result<(AsymEnvironment, Vec<String>)> {
    let mut env = env_l.clone();
    let warnings = reduce_in_place(&mut env, n_target, symmetric)?;
    Ok((env, warnings))
}

fn reduce_in_place(
    env: &mut AsymEnvironment,
    n_target: usize,
    symmetric: bool,
) -> Result<Vec<String>> {
    let nl = env.n;
    if n_target == 0 || n_target > nl {
        return Err(Error::Dimension(format!(
            "cannot reduce dimension {nl} to {n_target}"
        )));
    }
    let sectors = env.sectors();
    let mut warnings = Vec::new();
    let mut p_ab = Vec::with_capacity(sectors);
    let mut p_ba = Vec::with_capacity(sectors);
    let mut dropped = false;
    for s in 0..sectors {
        let ab = mat_mul(&env.a[s], &env.b[s])?;
        let label = if env.bond {
            "AB".to_string()
        } else {
            format!("A({s})B({s})")
        };
        let x = projector(&ab, n_target, symmetric, &mut env.warm[s], &label)?;
        // ABv = λv gives BA(Bv) = λBv, so B maps the kept subspace of AB onto
        // that of BA.
        let mut y = mat_mul(&env.b[s], &x.p)?;
        orthonormalize_columns(&mut y);
        dropped |= x.dropped;
        warnings.extend(x.warning);
        p_ab.push(x.p);
        p_ba.push(y);
    }
    let p_ab_t: Vec<Matrix> = p_ab.iter().map(Matrix::transpose).collect();
    let p_ba_t: Vec<Matrix> = p_ba.iter().map(Matrix::transpose).collect();
    for s in 0..sectors {
        env.a[s] = mat_mul(&p_ab_t[s], &mat_mul(&env.a[s], &p_ba[s])?)?;
        env.b[s] = mat_mul(&p_ba_t[s], &mat_mul(&env.b[s], &p_ab[s])?)?;
    }
    let q = env.q;
    let project = |m: &Matrix, left: &Matrix, right: &Matrix| -> Result<Matrix> {
        if m.is_zero() {
            Ok(Matrix::zeros(n_target, n_target, m.precision()))
        } else {
            mat_mul(left, &mat_mul(m, right)?)
        }
    };
    for i in 0..env.f.len() {
        let (x, y) = if env.bond { (0, 0) } else { (i / q, i % q) };
        env.f[i] = project(&env.f[i], &p_ba_t[x], &p_ba[y])?;
        env.g[i] = project(&env.g[i], &p_ab_t[x], &p_ab[y])?;
    }
    env.n = n_target;
    env.truncated |= dropped;
    Ok(warnings)
}

fn pivot(family: &[Matrix], what: &str) -> Result<BigReal> {
    family
        .iter()
        .map(|m| m.get(0, 0))
        .find(|v| !v.is_zero())
        .ok_or_else(|| Error::ZeroPivot(format!("every {what} matrix has a zero top-left entry")))
}

fn normalize_in_place(env: &mut AsymEnvironment) -> Result<()> {
    let pa = pivot(&env.a, "A")?;
    let pb = pivot(&env.b, "B")?;
    let pf = pivot(&env.f, "F")?;
    let pg = pivot(&env.g, "G")?;
    for (family, p) in [
        (&mut env.a, &pa),
        (&mut env.b, &pb),
        (&mut env.f, &pf),
        (&mut env.g, &pg),
    ] {
        for m in family.iter_mut() {
            m.div_in_place(p);
        }
    }
    env.scale_a = &env.scale_a * &pa;
    env.scale_b = &env.scale_b * &pb;
    env.scale_f = &env.scale_f * &pf;
    env.scale_g = &env.scale_g * &pg;
    Ok(())
}

/// Divides each family by the first nonzero top-left entry in it.
pub fn normalize_asym(env: &AsymEnvironment) -> Result<AsymEnvironment> {
    let mut out = env.clone();
    normalize_in_place(&mut out)?;
    Ok(out)
}

fn raw_sums(env: &AsymEnvironment, model: &ModelSpec) -> Result<[BigReal; 4]> {
    let (q, prec) = (env.q, env.prec);
    let zero = || BigReal::zero(prec);
    let ab: Vec<Matrix> = (0..env.sectors())
        .map(|s| mul_auto(&env.a[s], &env.b[s]))
        .collect::<Result<_>>()?;
    let mut z1 = zero();
    for m in &ab {
        z1 = z1 + m.trace_of_product(m)?;
    }
    let (mut zrow, mut zcol, mut z4) = (zero(), zero(), zero());
    if env.bond {
        let (a, b) = (&env.a[0], &env.b[0]);
        for e in 0..q {
            let afb = mul_auto(&mul_auto(a, &env.f[e])?, b)?;
            zrow = zrow + afb.trace_of_product(&afb)?;
            let abg = mul_auto(&ab[0], &env.g[e])?;
            zcol = zcol + abg.trace_of_product(&abg)?;
        }
        // Tr A F(W) B G(S) A F(E) B G(N), split as X(W,S)·X(E,N).
        let mut x: HashMap<(usize, usize), Matrix> = HashMap::new();
        let mut af: Vec<Option<Matrix>> = vec![None; q];
        let mut half = |w: usize, s: usize| -> Result<Matrix> {
            if let Some(m) = x.get(&(w, s)) {
                return Ok(m.clone());
            }
            if af[w].is_none() {
                af[w] = Some(mul_auto(&mul_auto(a, &env.f[w])?, b)?);
            }
            let m = mul_auto(af[w].as_ref().expect("filled"), &env.g[s])?;
            x.insert((w, s), m.clone());
            Ok(m)
        };
        for [nn, w, e, s] in model.valid_cells() {
            let left = half(w, s)?;
            let right = half(e, nn)?;
            z4 = z4 + left.trace_of_product(&right)?;
        }
    } else {
        // Zrow: Tr [A(a)F(a,b)B(b)]·[A(b)F(b,a)B(a)].
        let mut afb: HashMap<(usize, usize), Matrix> = HashMap::new();
        for x in 0..q {
            for y in 0..q {
                let f = env.half_row(x, y);
                if !f.is_zero() {
                    afb.insert((x, y), mul_auto(&mul_auto(&env.a[x], f)?, &env.b[y])?);
                }
            }
        }
        for x in 0..q {
            for y in 0..q {
                if let (Some(l), Some(r)) = (afb.get(&(x, y)), afb.get(&(y, x))) {
                    zrow = zrow + l.trace_of_product(r)?;
                }
            }
        }
        // Zcol: Tr [A(a)B(a)G(a,b)]·[A(b)B(b)G(b,a)].
        let mut abg: HashMap<(usize, usize), Matrix> = HashMap::new();
        for x in 0..q {
            for y in 0..q {
                let g = env.half_column(x, y);
                if !g.is_zero() {
                    abg.insert((x, y), mul_auto(&ab[x], g)?);
                }
            }
        }
        for x in 0..q {
            for y in 0..q {
                if let (Some(l), Some(r)) = (abg.get(&(x, y)), abg.get(&(y, x))) {
                    zcol = zcol + l.trace_of_product(r)?;
                }
            }
        }
        // Z4: Tr [A(a)F(a,c)B(c)G(c,d)]·[A(d)F(d,b)B(b)G(b,a)].
        let mut x: HashMap<(usize, usize, usize), Option<Matrix>> = HashMap::new();
        let mut half = |s: usize, t: usize, u: usize| -> Result<Option<Matrix>> {
            if let Some(m) = x.get(&(s, t, u)) {
                return Ok(m.clone());
            }
            let g = env.half_column(t, u);
            let m = match afb.get(&(s, t)) {
                Some(l) if !g.is_zero() => Some(mul_auto(l, g)?),
                _ => None,
            };
            x.insert((s, t, u), m.clone());
            Ok(m)
        };
        for [a, b, c, d] in model.valid_cells() {
            if let (Some(l), Some(r)) = (half(a, c, d)?, half(d, b, a)?) {
                z4 = z4 + l.trace_of_product(&r)?;
            }
        }
    }
    Ok([z1, zrow, zcol, z4])
}

/// The four partition sums of the current environment with normalisation
/// undone. Untruncated after `p` expansions these count the windows
/// `(2p+1)²`, `(2p+1)×(2p+2)`, `(2p+2)×(2p+1)` and `(2p+2)²` (width × height;
/// spin models) or `(2p)²`, `2p×(2p+1)`, `(2p+1)×2p` and `(2p+1)²` (bonds).
pub fn partition_sums(env: &AsymEnvironment, model: &ModelSpec) -> Result<PartitionSums> {
    check_env(env, model)?;
    let [z1, zrow, zcol, z4] = raw_sums(env, model)?;
    let corners = &env.scale_a * &env.scale_b;
    let c2 = &corners * &corners;
    let f2 = &env.scale_f * &env.scale_f;
    let g2 = &env.scale_g * &env.scale_g;
    Ok(PartitionSums {
        z1: z1 * &c2,
        zrow: zrow * &(&c2 * &f2),
        zcol: zcol * &(&c2 * &g2),
        z4: z4 * &(&c2 * &(&f2 * &g2)),
    })
}

/// `Z1·Z4 / (Zrow·Zcol)`.
pub fn estimate_asym(env: &AsymEnvironment, model: &ModelSpec) -> Result<BigReal> {
    check_env(env, model)?;
    let [z1, zrow, zcol, z4] = raw_sums(env, model)?;
    if zrow.is_zero() || zcol.is_zero() {
        return Err(Error::Degenerate(
            "half-row or half-column partition sum vanished".into(),
        ));
    }
    (&z1 * &z4 / (&zrow * &zcol)).checked("estimate_asym")
}

/// Exact window count `Σ Tr (AB)²` of an untruncated environment.
pub fn finite_partition_asym(env: &AsymEnvironment, model: &ModelSpec) -> Result<BigReal> {
    if env.truncated {
        return Err(Error::Truncated);
    }
    Ok(partition_sums(env, model)?.z1)
}

impl AsymEnvironment {
    fn sweep_with(&mut self, model: &ModelSpec, n_target: usize) -> Result<Vec<String>> {
        let resize = n_target != self.n;
        let mut next = expand_asym(self, model)?;
        if resize {
            next.warm = vec![Warm::default(); next.sectors()];
        }
        let warnings = reduce_in_place(&mut next, n_target, model.has_plain_mirror())?;
        normalize_in_place(&mut next)?;
        next.sweeps += 1;
        *self = next;
        Ok(warnings)
    }
}

impl Sweepable for AsymEnvironment {
    fn variant(&self) -> Variant {
        if self.bond {
            Variant::Bond
        } else {
            Variant::Asym
        }
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
        self.sweep_with(model, n_target)
    }

    fn estimate(&self, model: &ModelSpec) -> Result<BigReal> {
        estimate_asym(self, model)
    }
}

/// Full run from the 1×1 start; the engine (asymmetric or bond) follows the
/// model's placement.
pub fn run_asym(
    model: &ModelSpec,
    schedule: &Schedule,
    prec: u32,
) -> Result<(AsymEnvironment, RunTrace)> {
    let mut env = init_asym(model, prec)?;
    let trace = drive(&mut env, model, schedule, None, &mut |_, _| Ok(()))?;
    Ok((env, trace))
}

impl CheckpointEnv for AsymEnvironment {
    fn to_checkpoint(&self, model: &ModelSpec, estimate: Option<&BigReal>) -> Checkpoint {
        let mut matrices = Vec::new();
        for (prefix, family) in [
            ("A", &self.a),
            ("B", &self.b),
            ("F", &self.f),
            ("G", &self.g),
        ] {
            for (name, m) in family_names(prefix, family.len()).into_iter().zip(family) {
                matrices.push((name, m.clone()));
            }
        }
        Checkpoint {
            variant: self.variant(),
            model_name: model.name().to_string(),
            model_hash: model.fingerprint(),
            q: self.q,
            n: self.n,
            p_equiv: self.p_equiv,
            precision: self.prec,
            sweeps: self.sweeps,
            truncated: self.truncated,
            estimate: estimate.cloned(),
            scalars: vec![
                ("scale_a".into(), self.scale_a.clone()),
                ("scale_b".into(), self.scale_b.clone()),
                ("scale_f".into(), self.scale_f.clone()),
                ("scale_g".into(), self.scale_g.clone()),
            ],
            matrices,
        }
    }

    fn from_checkpoint(checkpoint: &Checkpoint, model: &ModelSpec) -> Result<Self> {
        let bond = model.placement().is_bond();
        let variant = if bond { Variant::Bond } else { Variant::Asym };
        checkpoint.check_compatible(model, variant)?;
        let (q, n) = (checkpoint.q, checkpoint.n);
        let (corners, strips) = if bond { (1, q) } else { (q, q * q) };
        let mut env = AsymEnvironment::from_parts(
            bond,
            q,
            take_family(checkpoint, "A", corners, n)?,
            take_family(checkpoint, "B", corners, n)?,
            take_family(checkpoint, "F", strips, n)?,
            take_family(checkpoint, "G", strips, n)?,
            checkpoint.precision,
        )?;
        env.p_equiv = checkpoint.p_equiv;
        env.sweeps = checkpoint.sweeps;
        env.truncated = checkpoint.truncated;
        env.scale_a = checkpoint.scalar("scale_a")?.clone();
        env.scale_b = checkpoint.scalar("scale_b")?.clone();
        env.scale_f = checkpoint.scalar("scale_f")?.clone();
        env.scale_g = checkpoint.scalar("scale_g")?.clone();
        Ok(env)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctmrg;
    use crate::models::{builtin, count_valid_grid};

    const P: u32 = 192;

    fn untruncated(model: &ModelSpec, p: usize) -> AsymEnvironment {
        let mut env = init_asym(model, P).unwrap();
        for _ in 0..p {
            let expanded = expand_asym(&env, model).unwrap();
            let n = expanded.n;
            env = normalize_asym(
                &reduce_asym(&expanded, n, model.has_plain_mirror())
                    .unwrap()
                    .0,
            )
            .unwrap();
        }
        env
    }

    fn close(x: &BigReal, count: u64) -> bool {
        (x.to_f64() - count as f64).abs() <= 1e-9 * count as f64
    }

    #[test]
    fn spin_window_counts() {
        for name in ["rwim", "hard_squares", "nak"] {
            let model = builtin(name).unwrap();
            for p in 0..=1 {
                let env = untruncated(&model, p);
                let sums = partition_sums(&env, &model).unwrap();
                let (s, t) = (2 * p + 1, 2 * p + 2);
                let count = |w, h| count_valid_grid(&model, w, h).unwrap();
                assert!(close(&sums.z1, count(s, s)), "{name} p={p} z1");
                if p == 0 {
                    // One-spin-thick windows hold no complete cell.
                    continue;
                }
                assert!(close(&sums.zrow, count(s, t)), "{name} p={p} zrow");
                assert!(close(&sums.zcol, count(t, s)), "{name} p={p} zcol");
                assert!(close(&sums.z4, count(t, t)), "{name} p={p} z4");
            }
        }
    }

    #[test]
    fn bond_window_counts() {
        for name in ["q_charge", "dimer", "pi"] {
            let model = builtin(name).unwrap();
            for p in 1..=1 {
                let env = untruncated(&model, p);
                let sums = partition_sums(&env, &model).unwrap();
                let (s, t) = (2 * p, 2 * p + 1);
                let count = |w, h| count_valid_grid(&model, w, h).unwrap();
                assert!(close(&sums.z1, count(s, s)), "{name} z1");
                assert!(close(&sums.zrow, count(s, t)), "{name} zrow");
                assert!(close(&sums.zcol, count(t, s)), "{name} zcol");
                assert!(close(&sums.z4, count(t, t)), "{name} z4");
                assert!(close(
                    &finite_partition_asym(&env, &model).unwrap(),
                    count(s, s)
                ));
            }
        }
    }

    #[test]
    fn rwim_second_shell_counts_five_by_five() {
        let model = builtin("rwim").unwrap();
        let env = untruncated(&model, 2);
        let z = finite_partition_asym(&env, &model).unwrap();
        assert!(close(&z, count_valid_grid(&model, 5, 5).unwrap()));
    }

    #[test]
    fn mirror_models_keep_b_equal_to_a_transpose() {
        let model = builtin("rwim").unwrap();
        let mut env = init_asym(&model, P).unwrap();
        for n in [2, 3, 4, 4] {
            env.sweep(&model, n).unwrap();
        }
        let tol = BigReal::pow2(20 - P as i32, P);
        for (a, b) in env.a.iter().zip(&env.b) {
            assert!(a.transpose().max_abs_diff(b).unwrap() <= tol);
        }
        assert!(env.f_transpose_deviation() <= tol);
    }

    #[test]
    fn free_models_give_q_per_site() {
        let (_, trace) =
            run_asym(&builtin("free(3)").unwrap(), &Schedule::new(3, 1e-30, 3), P).unwrap();
        assert!((trace.last_estimate().unwrap().to_f64() - 3.0).abs() < 1e-40);
    }

    #[test]
    fn agrees_with_symmetric_engine_on_c4_model() {
        let hs = builtin("hard_squares").unwrap();
        let schedule = Schedule::new(6, 1e-25, 60);
        let (_, sym) = ctmrg::run(&hs, &schedule, P).unwrap();
        let (_, asym) = run_asym(&hs, &schedule, P).unwrap();
        let x = sym.last_estimate().unwrap();
        let y = asym.last_estimate().unwrap();
        assert!(((x - y).abs() / x.clone()).to_f64() < 1e-20);
    }

    #[test]
    fn gauge_invariance() {
        let model = builtin("rwim").unwrap();
        let mut env = init_asym(&model, P).unwrap();
        for n in [2, 3, 3] {
            env.sweep(&model, n).unwrap();
        }
        let rot = |t: f64| {
            let (c, s) = (t.cos(), t.sin());
            Matrix::from_f64(3, 3, &[c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0], P).unwrap()
        };
        let mut u = Vec::new();
        let mut v = Vec::new();
        for s in 0..2 {
            let mut m = rot(0.3 + s as f64);
            crate::numerics::orthonormalize_columns(&mut m);
            u.push(m);
            let mut m = rot(1.1 - s as f64);
            crate::numerics::orthonormalize_columns(&mut m);
            v.push(m);
        }
        let moved = env.gauge_transform(&u, &v).unwrap();
        let k0 = estimate_asym(&env, &model).unwrap();
        let k1 = estimate_asym(&moved, &model).unwrap();
        assert!((&k0 - &k1).abs() <= &k0 * &BigReal::pow2(40 - P as i32, P));
    }

    #[test]
    fn engines_refuse_the_wrong_placement() {
        let hs = builtin("hard_squares").unwrap();
        let mut bond_env = init_asym(&builtin("dimer").unwrap(), 64).unwrap();
        assert!(matches!(
            bond_env.sweep(&hs, 1),
            Err(Error::EngineMismatch(_))
        ));
    }

    #[test]
    fn checkpoint_round_trip() {
        let model = builtin("q_charge").unwrap();
        let mut env = init_asym(&model, 128).unwrap();
        for n in [2, 3] {
            env.sweep(&model, n).unwrap();
        }
        let text = env.to_checkpoint(&model, None).to_text();
        let back = AsymEnvironment::from_checkpoint(&Checkpoint::from_text(&text).unwrap(), &model)
            .unwrap();
        assert_eq!(back.a, env.a);
        assert_eq!(back.g, env.g);
        assert!(back.bond);
        assert_eq!(back.to_checkpoint(&model, None).to_text(), text);
    }
}
