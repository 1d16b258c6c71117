//! The engines against independent ground truth: strip transfer matrices,
//! chains, dense bound matrices and each other.

use ctm_capacity::bounds::{lower_bound, BoundOptions, BoundSource};
use ctm_capacity::ctmrg::{estimate_kappa, run, Schedule};
use ctm_capacity::models::{builtin, ModelSpec};
use ctm_capacity::numerics::BigReal;
use ctm_capacity::oracle::{chain_matrix, dense_bound, strip_lambda, strip_matrix, Boundary};
use ctm_capacity::variants::{estimate_asym, run_asym};

const P: u32 = 192;

fn rel(a: &BigReal, b: &BigReal) -> f64 {
    ((a - b).abs() / b.abs()).to_f64()
}

/// `Λ(m)/Λ(m−1)` for cylinders of circumference `m − 1` and `m`.
fn cylinder_ratio(model: &ModelSpec, m: usize) -> f64 {
    let hi = strip_lambda(model, m, Boundary::Cyclic, P).unwrap().lambda;
    let lo = strip_lambda(model, m - 1, Boundary::Cyclic, P)
        .unwrap()
        .lambda;
    (hi / lo).to_f64()
}

// Cylinder ratios of these models alternate around the growth rate, so
// two consecutive circumferences bracket it.
#[test]
fn symmetric_estimates_sit_between_cylinder_ratios() {
    for name in ["hard_squares", "nak"] {
        let model = builtin(name).unwrap();
        let (env, _) = run(&model, &Schedule::new(16, 1e-25, 200), P).unwrap();
        let estimate = estimate_kappa(&env, &model).unwrap().to_f64();
        let (odd, even) = (cylinder_ratio(&model, 13), cylinder_ratio(&model, 14));
        assert!(
            odd < estimate && estimate < even,
            "{name}: {odd} < {estimate} < {even}"
        );
    }
}

#[test]
fn engines_agree_on_a_rotation_invariant_model() {
    let model = builtin("hard_squares").unwrap();
    let schedule = Schedule::new(12, 1e-25, 200);
    let (sym, _) = run(&model, &schedule, P).unwrap();
    let (asym, _) = run_asym(&model, &schedule, P).unwrap();
    let (a, b) = (
        estimate_kappa(&sym, &model).unwrap(),
        estimate_asym(&asym, &model).unwrap(),
    );
    assert!(rel(&a, &b) < 1e-14, "{} vs {}", a.to_f64(), b.to_f64());
}

#[test]
fn rwim_estimate_is_consistent_with_both_cylinder_orientations() {
    let model = builtin("rwim").unwrap();
    let (env, _) = run_asym(&model, &Schedule::new(12, 1e-25, 200), P).unwrap();
    let estimate = estimate_asym(&env, &model).unwrap().to_f64();
    // Rows: ratios climb monotonically towards the growth rate.
    let (r13, r14) = (cylinder_ratio(&model, 13), cylinder_ratio(&model, 14));
    assert!(
        r13 < r14 && r14 < estimate && estimate < r14 + 1e-3,
        "{r13} {r14} {estimate}"
    );
    // Columns: ratios alternate around it.
    let rotated = model.rotated();
    let (odd, even) = (cylinder_ratio(&rotated, 13), cylinder_ratio(&rotated, 14));
    assert!(
        odd < estimate && estimate < even,
        "{odd} < {estimate} < {even}"
    );
}

#[test]
fn single_row_models_reduce_to_their_chain() {
    for name in ["pi", "q_charge"] {
        let model = builtin(name).unwrap();
        let chain = chain_matrix(&model);
        let strip = strip_matrix(&model, 1, Boundary::Free).unwrap();
        for (i, row) in chain.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                assert_eq!(strip.entry(i, j), x, "{name} ({i}, {j})");
            }
        }
        let lambda = strip_lambda(&model, 1, Boundary::Free, P).unwrap().lambda;
        assert!(rel(&lambda, &BigReal::golden_ratio(P)) < 1e-40, "{name}");
    }
}

#[test]
fn implicit_bounds_match_dense_matrices_for_engine_families() {
    let model = builtin("hard_squares").unwrap();
    let (env, _) = run(&model, &Schedule::new(3, 1e-25, 20), P).unwrap();
    let implicit = lower_bound(&env, &model, &BoundOptions::for_precision(P)).unwrap();
    let dense = dense_bound(&env.half_rows().unwrap(), &model).unwrap();
    assert!(rel(&implicit.lower_bound, &dense.ratio) < 1e-20);

    let rwim = builtin("rwim").unwrap();
    let (env, _) = run_asym(&rwim, &Schedule::new(3, 1e-25, 20), P).unwrap();
    let implicit = lower_bound(&env, &rwim, &BoundOptions::for_precision(P)).unwrap();
    let dense = dense_bound(&env.half_rows().unwrap(), &rwim).unwrap();
    assert!(rel(&implicit.lower_bound, &dense.ratio) < 1e-20);
}
