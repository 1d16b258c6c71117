//! Invariants over random inputs: any half-row family gives a valid bound,
//! estimates ignore the gauge and runs are reproducible.

use ctm_capacity::bounds::PowerOptions;
use ctm_capacity::bounds::{bound_from_family, HalfRows};
use ctm_capacity::ctmrg::{estimate_kappa, run, Schedule, Variant};
use ctm_capacity::models::{builtin, ModelSpec};
use ctm_capacity::numerics::{orthonormalize_columns, BigReal, Matrix};
use ctm_capacity::variants::{estimate_asym, run_asym};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const P: u32 = 160;

/// Nonnegative family with `F(b,a) = F(a,b)ᵀ`, zero where no cell has `a`
/// above `b` on its left edge.
fn random_spin_family(model: &ModelSpec, n: usize, rng: &mut ChaCha8Rng) -> HalfRows {
    let q = model.q();
    let cells = model.valid_cells();
    let mut f = vec![Matrix::zeros(n, n, P); q * q];
    for a in 0..q {
        for b in a..q {
            let live = cells.iter().any(|c| c[0] == a && c[2] == b);
            let m = Matrix::from_fn(
                n,
                n,
                P,
                |_, _| if live { rng.gen_range(0.0..1.0) } else { 0.0 },
            );
            f[b * q + a] = m.transpose();
            f[a * q + b] = m;
        }
        f[a * q + a].symmetrize_from_upper();
    }
    HalfRows::spin(q, f).unwrap()
}

fn random_bond_family(model: &ModelSpec, n: usize, rng: &mut ChaCha8Rng) -> HalfRows {
    let f = (0..model.q())
        .map(|_| Matrix::from_fn(n, n, P, |_, _| rng.gen_range(0.0..1.0)))
        .collect();
    HalfRows::bond(f).unwrap()
}

fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let mut m = Matrix::from_fn(n, n, P, |_, _| rng.gen_range(-1.0..1.0));
    orthonormalize_columns(&mut m);
    m
}

fn known_rate(name: &str) -> f64 {
    match name {
        "hard_squares" => 1.503_048_082_475_332_3,
        "nak" => 1.342_643_951_124_601_3,
        "rwim" => 1.448_957_371_775_608_5,
        "colouring(3)" => (4.0f64 / 3.0).powf(1.5),
        "colouring(4)" => 2.336_056_641_041_133,
        "even_face" => 1.357_587_502_184_123_5,
        "dimer" => 1.338_515_152_031_4,
        _ => unreachable!("no reference rate for {name}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_families_never_beat_the_growth_rate(
        model in prop::sample::select(vec!["hard_squares", "nak", "rwim", "colouring(3)", "even_face", "dimer"]),
        n in 1usize..=3,
        seed in any::<u64>(),
    ) {
        let spec = builtin(model).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, engine) = if spec.placement().is_bond() {
            (random_bond_family(&spec, n, &mut rng), Variant::Bond)
        } else {
            (random_spin_family(&spec, n, &mut rng), Variant::Symmetric)
        };
        let opts = PowerOptions::for_precision(P);
        let report = bound_from_family(f, &spec, None, None, &opts, engine).unwrap();
        prop_assert!(report.lower_bound.to_f64() <= known_rate(model) + 1e-6,
            "{model} n = {n}: {}", report.lower_bound.to_f64());
    }

    #[test]
    fn symmetric_estimate_is_gauge_invariant(model in prop::sample::select(vec!["hard_squares", "nak"]), seed in any::<u64>()) {
        let spec = builtin(model).unwrap();
        let (env, _) = run(&spec, &Schedule::new(6, 1e-30, 4), P).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p: Vec<Matrix> = (0..spec.q()).map(|_| random_orthogonal(env.n, &mut rng)).collect();
        let before = estimate_kappa(&env, &spec).unwrap();
        let after = estimate_kappa(&env.gauge_transform(&p).unwrap(), &spec).unwrap();
        let tol = BigReal::pow2(25 - P as i32, P);
        prop_assert!((&before - &after).abs() <= &tol * &before.abs());
    }

    #[test]
    fn asym_estimate_is_gauge_invariant(seed in any::<u64>()) {
        let spec = builtin("rwim").unwrap();
        let (env, _) = run_asym(&spec, &Schedule::new(4, 1e-30, 3), P).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sectors = env.a.len();
        let u: Vec<Matrix> = (0..sectors).map(|_| random_orthogonal(env.n, &mut rng)).collect();
        let v: Vec<Matrix> = (0..sectors).map(|_| random_orthogonal(env.n, &mut rng)).collect();
        let before = estimate_asym(&env, &spec).unwrap();
        let after = estimate_asym(&env.gauge_transform(&u, &v).unwrap(), &spec).unwrap();
        let tol = BigReal::pow2(25 - P as i32, P);
        prop_assert!((&before - &after).abs() <= &tol * &before.abs());
    }
}

#[test]
fn reruns_are_bit_identical() {
    let schedule = Schedule::new(8, 1e-30, 6);
    for name in ["hard_squares", "colouring(3)"] {
        let spec = builtin(name).unwrap();
        let (a, _) = run(&spec, &schedule, P).unwrap();
        let (b, _) = run(&spec, &schedule, P).unwrap();
        let (ea, eb) = (
            estimate_kappa(&a, &spec).unwrap(),
            estimate_kappa(&b, &spec).unwrap(),
        );
        assert_eq!(ea.to_decimal(48), eb.to_decimal(48), "{name}");
        for (x, y) in a.a.iter().zip(&b.a) {
            assert!(x.max_abs_diff(y).unwrap().is_zero(), "{name}");
        }
    }
    for name in ["rwim", "dimer"] {
        let spec = builtin(name).unwrap();
        let (a, _) = run_asym(&spec, &Schedule::new(4, 1e-30, 4), P).unwrap();
        let (b, _) = run_asym(&spec, &Schedule::new(4, 1e-30, 4), P).unwrap();
        for (x, y) in a.a.iter().chain(&a.f).zip(b.a.iter().chain(&b.f)) {
            assert!(x.max_abs_diff(y).unwrap().is_zero(), "{name}");
        }
    }
}
