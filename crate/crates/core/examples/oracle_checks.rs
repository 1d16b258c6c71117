// Independent ground truth the engines are tested against: 1-D chains,
// strip transfer matrices, the Q-charge / p-i counting maps and the bound
// matrices written out in full.

use ctm_capacity::bounds::BoundSource;
use ctm_capacity::bounds::{bound_from_family, PowerOptions};
use ctm_capacity::ctmrg::{expand, init_environment, normalize, reduce, Variant};
use ctm_capacity::models::builtin;
use ctm_capacity::numerics::BigReal;
use ctm_capacity::oracle::{
    column_inversion_check, dense_bound, homomorphism_check, lambda_sequence,
    parity_restriction_check, strip_lambda, Boundary,
};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let prec = 160;
    let phi = BigReal::golden_ratio(prec);
    for name in ["pi", "q_charge"] {
        let chain = strip_lambda(&builtin(name)?, 1, Boundary::Free, prec)?;
        let gap = (&chain.lambda - &phi).abs().to_f64();
        println!(
            "{name:>8} chain: λ = {} (|λ − φ| = {gap:.1e})",
            chain.lambda.to_decimal(32)
        );
        assert!(gap < 1e-30);
    }

    let hs = builtin("hard_squares")?;
    for (m, lambda) in lambda_sequence(&hs, [2, 4, 6, 8], Boundary::Cyclic, prec)? {
        println!(
            "hard squares cyclic strip m = {m}: Λ^(1/m) = {}",
            lambda.to_decimal(12)
        );
    }

    let h = homomorphism_check(12)?;
    println!(
        "strings of length 12: {} Q-charge, {} p-i, two-to-one: {}",
        h.q_charge_strings, h.pi_strings, h.two_to_one
    );
    let p = parity_restriction_check(3, 3)?;
    println!(
        "3x3 window: {} Q-charge, {} with the parity restriction, {} p-i",
        p.q_charge_total, p.q_charge_restricted, p.pi_count
    );
    assert!(h.two_to_one && p.equal && p.bijective && column_inversion_check(4)?.preserved);

    // Implicit power iterations against dense diagonalisation at n = 3.
    let mut env = init_environment(&hs, prec)?;
    while env.n < 3 {
        let grown = expand(&env, &hs)?;
        env = normalize(&reduce(&grown, grown.n.min(3))?.0)?;
    }
    let f = env.half_rows()?;
    let implicit = bound_from_family(
        f.clone(),
        &hs,
        None,
        None,
        &PowerOptions::for_precision(prec),
        Variant::Symmetric,
    )?;
    let dense = dense_bound(&f, &hs)?;
    let diff = (&implicit.lower_bound - &dense.ratio).abs().to_f64();
    println!(
        "n = 3 bound: implicit {} dense {} (diff {diff:.1e})",
        implicit.lower_bound.to_decimal(25),
        dense.ratio.to_decimal(25)
    );
    assert!(diff < 1e-20);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
