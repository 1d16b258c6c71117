//! Lower bounds `κ ≥ η/ξ` from a frozen half-row family.
//!
//! For spin models `ξ` is the dominant eigenvalue of
//! `X(a) ↦ Σ_b F(a,b) X(b) F(b,a)` and `η` that of
//! `Y(a,b) ↦ Σ_{cd} ω(a,b;c,d) F(a,c) Y(c,d) F(d,b)`. For bond models
//! `X ↦ Σ_a F(a) X F(a)ᵀ` and `Y(a) ↦ Σ ω(a,b,c,d) F(b) Y(d) F(c)ᵀ`. Any
//! family with `F(a,b) = F(b,a)ᵀ` gives a valid bound; the environment only
//! decides how tight it is.

mod certify;
mod power;

use serde_json::{json, Value};

use crate::ctmrg::{CtmEnvironment, Variant};
use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::numerics::{mat_mul, BigReal, Matrix};
use crate::variants::AsymEnvironment;

pub use certify::{certify, CertifyLimits};
pub use power::{
    apply_r, apply_s, perturb, power_eta, power_eta_bond, power_xi, power_xi_bond, Eigenpair,
    PowerOptions,
};

/// Note attached to every bound that has not been certified.
pub const UNCERTIFIED_NOTE: &str =
    "valid up to floating-point rounding; rounding not formally bounded (use certified mode for an enclosure)";

/// The half-row matrices a bound is computed from. Spin families are stored
/// as `f[a*q + b]`, bond families as `f[a]`.
#[derive(Clone, Debug)]
pub struct HalfRows {
    pub q: usize,
    pub bond: bool,
    pub f: Vec<Matrix>,
}

impl HalfRows {
    /// Spin family. Entries below the diagonal of the state pair are
    /// replaced by the transposes of their partners, so the premise
    /// `F(a,b) = F(b,a)ᵀ` holds exactly; a deviation above
    /// `2^(10−prec)·max|F|` is refused.
    pub fn spin(q: usize, f: Vec<Matrix>) -> Result<Self> {
        if f.len() != q * q || q == 0 {
            return Err(Error::Dimension(format!(
                "expected {} half-row matrices, got {}",
                q * q,
                f.len()
            )));
        }
        let n = f[0].rows();
        if f.iter().any(|m| m.rows() != n || m.cols() != n) {
            return Err(Error::Dimension(
                "half-row matrices must all be square of one size".into(),
            ));
        }
        let prec = f[0].precision();
        let scale = f
            .iter()
            .map(Matrix::max_abs)
            .fold(BigReal::zero(prec), |acc, v| if v > acc { v } else { acc });
        let allowed = &scale * &BigReal::pow2(10 - prec as i32, prec);
        let mut worst = BigReal::zero(prec);
        for a in 0..q {
            for b in a + 1..q {
                let d = f[a * q + b].max_abs_diff(&f[b * q + a].transpose())?;
                if d > worst {
                    worst = d;
                }
            }
            let d = f[a * q + a].symmetry_deviation();
            if d > worst {
                worst = d;
            }
        }
        if worst > allowed {
            return Err(Error::NotSymmetric {
                deviation: worst.to_f64(),
                allowed: allowed.to_f64(),
            });
        }
        let mut f = f;
        for a in 0..q {
            f[a * q + a].symmetrize_from_upper();
            for b in a + 1..q {
                f[b * q + a] = f[a * q + b].transpose();
            }
        }
        Ok(HalfRows { q, bond: false, f })
    }

    /// Bond family; no transpose premise applies.
    pub fn bond(f: Vec<Matrix>) -> Result<Self> {
        if f.is_empty() {
            return Err(Error::Dimension("empty half-row family".into()));
        }
        let n = f[0].rows();
        if f.iter().any(|m| m.rows() != n || m.cols() != n) {
            return Err(Error::Dimension(
                "half-row matrices must all be square of one size".into(),
            ));
        }
        Ok(HalfRows {
            q: f.len(),
            bond: true,
            f,
        })
    }

    pub fn n(&self) -> usize {
        self.f[0].rows()
    }

    pub fn prec(&self) -> u32 {
        self.f[0].precision()
    }

    /// `F(a, b)`; spin families only.
    pub fn get(&self, a: usize, b: usize) -> &Matrix {
        &self.f[a * self.q + b]
    }
}

/// Environments a bound can be read from.
pub trait BoundSource {
    fn variant(&self) -> Variant;
    fn n(&self) -> usize;
    fn half_rows(&self) -> Result<HalfRows>;
    /// Start vectors for the `ξ` and `η` iterations built from the corners,
    /// which approximate the dominant eigenvectors of a converged run.
    fn starts(&self, model: &ModelSpec) -> Result<(Vec<Matrix>, Vec<Matrix>)>;
}

impl BoundSource for CtmEnvironment {
    fn variant(&self) -> Variant {
        Variant::Symmetric
    }

    fn n(&self) -> usize {
        self.n
    }

    fn half_rows(&self) -> Result<HalfRows> {
        HalfRows::spin(self.q, self.f.clone())
    }

    fn starts(&self, _model: &ModelSpec) -> Result<(Vec<Matrix>, Vec<Matrix>)> {
        let q = self.q;
        let x = self
            .a
            .iter()
            .map(|a| mat_mul(a, a))
            .collect::<Result<Vec<_>>>()?;
        let mut y = Vec::with_capacity(q * q);
        for a in 0..q {
            for b in 0..q {
                y.push(mat_mul(
                    &mat_mul(&self.a[a], self.half_row(a, b))?,
                    &self.a[b],
                )?);
            }
        }
        Ok((x, y))
    }
}

impl BoundSource for AsymEnvironment {
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

    fn half_rows(&self) -> Result<HalfRows> {
        if self.bond {
            HalfRows::bond(self.f.clone())
        } else {
            HalfRows::spin(self.q, self.f.clone())
        }
    }

    fn starts(&self, _model: &ModelSpec) -> Result<(Vec<Matrix>, Vec<Matrix>)> {
        let x = self
            .a
            .iter()
            .zip(&self.b)
            .map(|(a, b)| mat_mul(b, a))
            .collect::<Result<Vec<_>>>()?;
        let mut y = Vec::new();
        if self.bond {
            for g in &self.g {
                y.push(mat_mul(&mat_mul(&self.b[0], g)?, &self.a[0])?);
            }
        } else {
            for a in 0..self.q {
                for b in 0..self.q {
                    y.push(mat_mul(
                        &mat_mul(&self.b[a], self.half_column(a, b))?,
                        &self.a[b],
                    )?);
                }
            }
        }
        Ok((x, y))
    }
}

/// Controls for [`lower_bound`].
#[derive(Clone, Debug)]
pub struct BoundOptions {
    pub power: PowerOptions,
    /// Compute bounds for models whose bound iteration is known to be
    /// unreliable.
    pub allow_unstable: bool,
    /// Run [`certify`] after the power iterations.
    pub certify: bool,
    pub limits: CertifyLimits,
}

impl BoundOptions {
    pub fn for_precision(prec: u32) -> Self {
        BoundOptions {
            power: PowerOptions::for_precision(prec),
            allow_unstable: false,
            certify: false,
            limits: CertifyLimits::default(),
        }
    }
}

/// Outcome of a bound computation.
#[derive(Clone, Debug)]
pub struct BoundReport {
    pub model: String,
    pub engine: Variant,
    pub n: usize,
    pub precision_bits: u32,
    pub xi: BigReal,
    pub eta: BigReal,
    pub lower_bound: BigReal,
    pub iterations_xi: usize,
    pub iterations_eta: usize,
    pub residual_xi: f64,
    pub residual_eta: f64,
    pub seed: u64,
    pub certified: bool,
    /// Enclosure `[η_lo/ξ_hi, η_hi/ξ_lo]` with outward rounding, when
    /// certification succeeded.
    pub certified_interval: Option<(BigReal, BigReal)>,
    pub note: String,
    pub half_rows: HalfRows,
    pub x: Vec<Matrix>,
    pub y: Vec<Matrix>,
}

impl BoundReport {
    /// JSON object with decimal strings carrying `digits` significant
    /// digits. The eigenvectors are left out.
    pub fn to_json(&self, digits: usize) -> Value {
        let interval = self
            .certified_interval
            .as_ref()
            .map(|(lo, hi)| json!([lo.to_decimal(digits), hi.to_decimal(digits)]));
        json!({
            "model": self.model,
            "engine": self.engine.as_str(),
            "n": self.n,
            "precision_bits": self.precision_bits,
            "xi": self.xi.to_decimal(digits),
            "eta": self.eta.to_decimal(digits),
            "lower_bound": self.lower_bound.to_decimal(digits),
            "iterations": { "xi": self.iterations_xi, "eta": self.iterations_eta },
            "residuals": { "xi": self.residual_xi, "eta": self.residual_eta },
            "certified": self.certified,
            "certified_interval": interval,
            "note": self.note,
            "seed": self.seed,
        })
    }
}

fn check_pair(engine: Variant, q: usize, model: &ModelSpec) -> Result<()> {
    let bond = engine == Variant::Bond;
    if model.placement().is_bond() != bond || model.q() != q {
        return Err(Error::EngineMismatch(format!(
            "a {} environment with q = {q} cannot bound model {} (q = {}, states on {}s)",
            engine.as_str(),
            model.name(),
            model.q(),
            model.placement()
        )));
    }
    Ok(())
}

/// `κ ≥ η/ξ` for the environment's half-row family. Models flagged as
/// having an unreliable bound iteration are refused unless
/// `opts.allow_unstable` is set.
pub fn lower_bound<E: BoundSource>(
    env: &E,
    model: &ModelSpec,
    opts: &BoundOptions,
) -> Result<BoundReport> {
    let f = env.half_rows()?;
    check_pair(env.variant(), f.q, model)?;
    if model.unstable_bound() && !opts.allow_unstable {
        return Err(Error::Unstable {
            what: "bound",
            detail: format!(
                "the bound iteration for {} is known to be unreliable; pass allow-unstable to try anyway",
                model.name()
            ),
        });
    }
    let (x0, y0) = env.starts(model)?;
    let report = bound_from_family(f, model, Some(&x0), Some(&y0), &opts.power, env.variant())?;
    if opts.certify {
        return certify(&report, model, &opts.limits);
    }
    Ok(report)
}

/// Bound for an explicit family, with optional start vectors.
pub fn bound_from_family(
    f: HalfRows,
    model: &ModelSpec,
    x0: Option<&[Matrix]>,
    y0: Option<&[Matrix]>,
    opts: &PowerOptions,
    engine: Variant,
) -> Result<BoundReport> {
    check_pair(engine, f.q, model)?;
    let xi = power_xi(&f, x0, opts)?;
    let eta = power_eta(&f, model, y0, opts)?;
    if xi.value.is_sign_negative()
        || xi.value.is_zero()
        || eta.value.is_sign_negative()
        || eta.value.is_zero()
    {
        return Err(Error::Degenerate(format!(
            "non-positive dominant eigenvalue (xi = {}, eta = {})",
            xi.value.to_f64(),
            eta.value.to_f64()
        )));
    }
    let prec = f.prec();
    Ok(BoundReport {
        model: model.name().to_string(),
        engine,
        n: f.n(),
        precision_bits: prec,
        lower_bound: &eta.value / &xi.value,
        xi: xi.value,
        eta: eta.value,
        iterations_xi: xi.iterations,
        iterations_eta: eta.iterations,
        residual_xi: xi.residual,
        residual_eta: eta.residual,
        seed: opts.seed,
        certified: false,
        certified_interval: None,
        note: UNCERTIFIED_NOTE.to_string(),
        half_rows: f,
        x: xi.vectors,
        y: eta.vectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctmrg::{estimate_kappa, run, Schedule};
    use crate::models::{builtin, free};
    use crate::oracle::dense_bound;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const P: u32 = 192;

    fn ones(q: usize) -> HalfRows {
        HalfRows::spin(q, vec![Matrix::identity(1, P); q * q]).unwrap()
    }

    fn random_family(q: usize, n: usize, model: &ModelSpec, seed: u64) -> HalfRows {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = vec![Matrix::zeros(n, n, P); q * q];
        for a in 0..q {
            for b in a..q {
                let live = model.valid_cells().iter().any(|c| c[0] == a && c[2] == b);
                let m = Matrix::from_fn(
                    n,
                    n,
                    P,
                    |_, _| if live { rng.gen_range(0.0..1.0) } else { 0.0 },
                );
                f[b * q + a] = m.transpose();
                f[a * q + b] = m;
            }
        }
        for a in 0..q {
            f[a * q + a].symmetrize_from_upper();
        }
        HalfRows::spin(q, f).unwrap()
    }

    fn rel(a: &BigReal, b: &BigReal) -> f64 {
        ((a - b).abs() / b.abs()).to_f64()
    }

    #[test]
    fn single_state_gives_one() {
        let model = free(1).unwrap();
        let opts = PowerOptions::for_precision(P);
        let r = bound_from_family(ones(1), &model, None, None, &opts, Variant::Symmetric).unwrap();
        assert_eq!(r.xi.to_f64(), 1.0);
        assert_eq!(r.lower_bound.to_f64(), 1.0);
    }

    #[test]
    fn free_model_bound_is_q() {
        for q in 2..=3 {
            let model = free(q).unwrap();
            let opts = PowerOptions::for_precision(P);
            let r =
                bound_from_family(ones(q), &model, None, None, &opts, Variant::Symmetric).unwrap();
            assert!(
                rel(&r.lower_bound, &BigReal::from_u64(q as u64, P)) < 1e-50,
                "q = {q}"
            );
            assert!(rel(&r.eta, &BigReal::from_u64((q * q) as u64, P)) < 1e-50);
        }
    }

    #[test]
    fn implicit_maps_match_dense_matrices() {
        for name in ["hard_squares", "nak", "colouring(3)"] {
            let model = builtin(name).unwrap();
            let q = model.q();
            for n in 1..=3 {
                if q * q * n * n > 81 {
                    continue;
                }
                let f = random_family(q, n, &model, 7 + n as u64);
                let opts = PowerOptions::for_precision(P);
                let r = bound_from_family(f.clone(), &model, None, None, &opts, Variant::Symmetric)
                    .unwrap();
                let dense = dense_bound(&f, &model).unwrap();
                assert!(rel(&r.xi, &dense.xi) < 1e-20, "{name} n={n} xi");
                assert!(rel(&r.eta, &dense.eta) < 1e-20, "{name} n={n} eta");
            }
        }
    }

    #[test]
    fn hard_squares_single_site_xi() {
        let model = builtin("hard_squares").unwrap();
        let mut f = vec![Matrix::identity(1, P); 4];
        f[3] = Matrix::zeros(1, 1, P);
        let f = HalfRows::spin(2, f).unwrap();
        let opts = PowerOptions::for_precision(P);
        let r = bound_from_family(f, &model, None, None, &opts, Variant::Symmetric).unwrap();
        assert!(rel(&r.xi, &BigReal::golden_ratio(P)) < 1e-40);
    }

    #[test]
    fn random_families_never_exceed_the_growth_rate() {
        let model = builtin("hard_squares").unwrap();
        let kappa = BigReal::from_f64(1.503_048_082_5, P);
        for seed in 0..12 {
            let f = random_family(2, 2, &model, seed);
            let opts = PowerOptions::for_precision(P);
            let r = bound_from_family(f, &model, None, None, &opts, Variant::Symmetric).unwrap();
            assert!(
                r.lower_bound < kappa,
                "seed {seed}: {}",
                r.lower_bound.to_f64()
            );
        }
    }

    #[test]
    fn asymmetric_family_is_refused() {
        let mut f = vec![Matrix::identity(2, P); 4];
        f[1].set_f64(0, 1, 0.5);
        assert!(matches!(
            HalfRows::spin(2, f),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn converged_hard_squares_bound_sits_below_estimate() {
        let model = builtin("hard_squares").unwrap();
        let (env, _) = run(&model, &Schedule::new(8, 1e-12, 60), P).unwrap();
        let opts = BoundOptions::for_precision(P);
        let r = lower_bound(&env, &model, &opts).unwrap();
        let est = estimate_kappa(&env, &model).unwrap();
        assert!(r.lower_bound <= &est + &BigReal::from_f64(1e-12, P));
        assert!(rel(&r.lower_bound, &est) < 1e-7);
        assert!(!r.certified && r.note.contains("rounding not formally bounded"));
        let json = r.to_json(20);
        assert_eq!(json["engine"], "symmetric");
        assert!(json["lower_bound"].as_str().unwrap().starts_with("1.50304"));
    }

    #[test]
    fn unstable_models_need_permission() {
        let model = builtin("q_charge").unwrap();
        let env = crate::variants::init_asym(&model, P).unwrap();
        let opts = BoundOptions::for_precision(P);
        assert!(matches!(
            lower_bound(&env, &model, &opts),
            Err(Error::Unstable { .. })
        ));
    }

    #[test]
    fn engine_and_model_must_agree() {
        let model = builtin("dimer").unwrap();
        let env = crate::ctmrg::init_environment(&builtin("hard_squares").unwrap(), P).unwrap();
        let opts = BoundOptions::for_precision(P);
        assert!(matches!(
            lower_bound(&env, &model, &opts),
            Err(Error::EngineMismatch(_))
        ));
    }
}
