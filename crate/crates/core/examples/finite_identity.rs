// Before any truncation the corner matrices are exact partial sums, so
// `Σ_a Tr A(a)⁴` counts the valid configurations of a `(2p+1)²` window.
// Compared here with brute-force enumeration.

use ctm_capacity::ctmrg::{expand, finite_partition, init_environment, normalize, reduce};
use ctm_capacity::models::{builtin, count_valid_grid};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let prec = 128;
    for name in ["hard_squares", "nak", "colouring(3)", "even_face"] {
        let model = builtin(name)?;
        let mut env = init_environment(&model, prec)?;
        for p in 0..=2 {
            if p > 0 {
                let grown = expand(&env, &model)?;
                let n = grown.n;
                env = normalize(&reduce(&grown, n)?.0)?;
            }
            let side = 2 * p + 1;
            let Ok(count) = count_valid_grid(&model, side, side) else {
                continue;
            };
            let z = finite_partition(&env)?;
            let exact = (z.to_f64() - count as f64).abs() < 1e-9 * count as f64;
            println!(
                "{name:>13} {side}x{side}: trace {} enumeration {count}",
                z.to_decimal(20)
            );
            assert!(exact, "{name}: trace identity failed at p = {p}");
        }
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
