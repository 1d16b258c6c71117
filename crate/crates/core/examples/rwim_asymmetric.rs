// RWIM has only half-turn symmetry, so it runs on the asymmetric engine
// with separate `A`/`B` corners and `F`/`G` strips. Swapping the roles of
// `F` and `G` (running the quarter-turned model) must give the same bound.

use ctm_capacity::bounds::{lower_bound, BoundOptions};
use ctm_capacity::ctmrg::Schedule;
use ctm_capacity::models::builtin;
use ctm_capacity::variants::run_asym;

pub fn run_example_with(n_max: usize, prec: u32) -> Result<(f64, f64), Box<dyn std::error::Error>> {
    let model = builtin("rwim")?;
    let schedule = Schedule::new(n_max, 1e-14, 150);
    let mut results = Vec::new();
    for (label, m) in [
        ("F along rows", model.clone()),
        ("F and G swapped", model.rotated()),
    ] {
        let (env, trace) = run_asym(&m, &schedule, prec)?;
        let bound = lower_bound(&env, &m, &BoundOptions::for_precision(prec))?;
        let estimate = trace.last_estimate().ok_or("no sweeps ran")?;
        println!(
            "{label:>16}: n = {}, bound {}, estimate {}",
            env.n,
            bound.lower_bound.to_decimal(16),
            estimate.to_decimal(16)
        );
        results.push(bound.lower_bound.to_f64());
    }
    Ok((results[0], results[1]))
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let (plain, swapped) = run_example_with(6, 128)?;
    assert!((plain - swapped).abs() < 1e-6 && (plain - 1.44895).abs() < 1e-3);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n_max = std::env::args().nth(1).map_or(Ok(12), |a| a.parse())?;
    run_example_with(n_max, 192)?;
    Ok(())
}
