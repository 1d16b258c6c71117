// Models whose states live on bonds: fully packed dimers and the Q-charge
// reformulation of charge(3). Both run on the bond engine; the dimer
// estimate is compared with its closed form e^(G/π).

use ctm_capacity::ctmrg::Schedule;
use ctm_capacity::models::builtin;
use ctm_capacity::numerics::BigReal;
use ctm_capacity::variants::run_asym;

/// e^(G/π) with Catalan's constant G.
pub fn dimer_constant(prec: u32) -> BigReal {
    (BigReal::catalan(prec) / BigReal::pi(prec)).exp()
}

pub fn run_example_with(
    n_max: usize,
    sweeps: usize,
    prec: u32,
) -> Result<(f64, f64), Box<dyn std::error::Error>> {
    let schedule = Schedule::new(n_max, 1e-12, sweeps);
    let dimer = builtin("dimer")?;
    let (_, trace) = run_asym(&dimer, &schedule, prec)?;
    let d = trace.last_estimate().ok_or("no sweeps ran")?.to_f64();
    let exact = dimer_constant(prec).to_f64();
    println!("dimer    estimate {d:.10} vs e^(G/pi) = {exact:.10}");
    let qc = builtin("q_charge")?;
    let (_, trace) = run_asym(&qc, &schedule, prec)?;
    let q = trace.last_estimate().ok_or("no sweeps ran")?.to_f64();
    println!(
        "q_charge estimate {q:.10} after {} sweeps",
        trace.entries.len()
    );
    Ok((d, q))
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let (d, q) = run_example_with(4, 30, 96)?;
    assert!((d - dimer_constant(64).to_f64()).abs() < 0.02);
    assert!(q > 1.3 && q < 1.36);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n_max = std::env::args().nth(1).map_or(Ok(16), |a| a.parse())?;
    run_example_with(n_max, 300, 128)?;
    Ok(())
}
