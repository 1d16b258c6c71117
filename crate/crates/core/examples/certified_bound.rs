// Certified lower bounds from explicit `R` and `S` at small corner size.
//
// The floating-point bound `η/ξ` is replaced by an outward-rounded
// enclosure. Certification applies while the explicit matrices stay small.

use ctm_capacity::bounds::{lower_bound, BoundOptions};
use ctm_capacity::ctmrg::{run, Schedule};
use ctm_capacity::models::builtin;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let prec = 192;
    let mut opts = BoundOptions::for_precision(prec);
    opts.certify = true;
    for (name, n_max, exact) in [
        ("free(2)", 2, 2.0),
        ("hard_squares", 4, 1.503_048_082_475_332),
        ("nak", 4, 1.342_643_951_124_601),
    ] {
        let model = builtin(name)?;
        let (env, _) = run(&model, &Schedule::new(n_max, 1e-20, 30), prec)?;
        let report = lower_bound(&env, &model, &opts)?;
        println!(
            "{name} n = {}: bound {}",
            env.n,
            report.lower_bound.to_decimal(20)
        );
        println!("  {}", report.note);
        let (lo, hi) = report
            .certified_interval
            .clone()
            .ok_or("certification declined")?;
        println!(
            "  certified interval [{}, {}]",
            lo.to_decimal(20),
            hi.to_decimal(20)
        );
        assert!(report.certified && lo <= report.lower_bound && report.lower_bound <= hi);
        assert!(lo.to_f64() <= exact + 1e-12);
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
