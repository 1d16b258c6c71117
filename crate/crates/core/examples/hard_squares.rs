// Lower bound and estimate for hard squares from the symmetric engine.
//
// `cargo run --release --example hard_squares -- 24` grows the corner
// matrices to 24 and prints both numbers.

use ctm_capacity::bounds::{lower_bound, BoundOptions};
use ctm_capacity::ctmrg::{run, Schedule};
use ctm_capacity::models::builtin;

pub fn run_example_with(n_max: usize) -> Result<(String, String), Box<dyn std::error::Error>> {
    let prec = 192;
    let model = builtin("hard_squares")?;
    let (env, trace) = run(&model, &Schedule::new(n_max, 1e-20, 100), prec)?;
    let estimate = trace.last_estimate().ok_or("no sweeps ran")?;
    let bound = lower_bound(&env, &model, &BoundOptions::for_precision(prec))?;
    assert!(bound.lower_bound <= *estimate);
    println!(
        "n = {}, {} sweeps, converged: {}",
        env.n,
        trace.entries.len(),
        trace.converged
    );
    println!("lower bound {}", bound.lower_bound.to_decimal(25));
    println!("estimate    {}", estimate.to_decimal(25));
    println!("{}", bound.note);
    Ok((bound.lower_bound.to_decimal(25), estimate.to_decimal(25)))
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let (bound, estimate) = run_example_with(8)?;
    assert!(bound.starts_with("1.50304") && estimate.starts_with("1.50304"));
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n_max = std::env::args().nth(1).map_or(Ok(16), |a| a.parse())?;
    run_example_with(n_max)?;
    Ok(())
}
