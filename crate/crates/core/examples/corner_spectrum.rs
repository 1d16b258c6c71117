// Corner-matrix eigenvalues fall off like `exp(−c (ln k)²)`; the
// correlation of `ln λ_k` with `(ln k)²` measures how well the tail
// follows that law. Optionally writes the spectrum as CSV.

use ctm_capacity::ctmrg::{run, spectrum, write_spectrum_csv, Schedule};
use ctm_capacity::models::builtin;

pub fn run_example_with(
    n_max: usize,
    csv: Option<&str>,
) -> Result<f64, Box<dyn std::error::Error>> {
    let prec = 256;
    let model = builtin("hard_squares")?;
    let (env, _) = run(&model, &Schedule::new(n_max, 1e-20, 60), prec)?;
    let dump = spectrum(&env, &model);
    for (spin, values) in dump.sectors.iter().enumerate() {
        let shown: Vec<String> = values
            .iter()
            .take(6)
            .map(|v| format!("{:.3e}", v.to_f64()))
            .collect();
        println!("spin {spin}: {} ...", shown.join(" "));
    }
    let r = dump.tail_correlation(0, 1).ok_or("spectrum too short")?;
    println!("corr(ln λ_k, (ln k)²) = {r:.5}");
    if let Some(path) = csv {
        write_spectrum_csv(std::path::Path::new(path), &dump, prec)?;
        println!("wrote {path}");
    }
    Ok(r)
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let r = run_example_with(16, None)?;
    assert!(r < -0.9);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n_max = std::env::args().nth(1).map_or(Ok(32), |a| a.parse())?;
    let csv = std::env::args().nth(2);
    run_example_with(n_max, csv.as_deref())?;
    Ok(())
}
