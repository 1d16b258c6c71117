// Models described in a text file: a non-attacking-kings file checked
// against the built-in, and a mirror-symmetric model run end to end through
// the command line. Forbidding ⊖⊖ only along rows decouples the rows into
// one-dimensional hard-core chains, so the estimate is the golden ratio.

use ctm_capacity::cli::{main_with_args, EXIT_CONVERGED};
use ctm_capacity::models::{builtin, parse_model_file};

const KINGS: &str = "\
model kings
alphabet 2
placement vertex
symmetry C4
mode allow
# at most one ⊖ in every 2×2 cell
0 0 / 0 0
1 0 / 0 0
0 1 / 0 0
0 0 / 1 0
0 0 / 0 1
";

const RODS: &str = "\
model horizontal_rods
alphabet 2
placement vertex
symmetry C2
mode forbid
# no two ⊖ side by side in a row; columns are free
1 1 / 0 0
1 1 / 1 0
1 1 / 0 1
1 1 / 1 1
0 0 / 1 1
1 0 / 1 1
0 1 / 1 1
";

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let kings = parse_model_file(KINGS)?;
    assert_eq!(kings.weights(), builtin("nak")?.weights());
    println!("{} matches the built-in nak cell table", kings.name());

    let dir = std::env::temp_dir().join(format!("ctm-capacity-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("rods.model");
    std::fs::write(&path, RODS)?;
    let args = [
        "ctm-capacity",
        "--model-file",
        path.to_str().ok_or("non-UTF-8 temp path")?,
        "--mode",
        "estimate",
        "--nmax",
        "6",
        "--precision-bits",
        "128",
        "--tol",
        "1e-14",
        "--digits",
        "12",
    ];
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = main_with_args(args, &mut out, &mut err);
    std::fs::remove_dir_all(&dir)?;
    print!("{}", String::from_utf8_lossy(&out));
    eprint!("{}", String::from_utf8(err)?);
    assert_eq!(code, EXIT_CONVERGED);
    let text = String::from_utf8(out)?;
    let estimate = text
        .lines()
        .find_map(|l| l.strip_prefix("estimate"))
        .ok_or("no estimate line")?
        .trim()
        .parse::<f64>()?;
    assert!((estimate - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-11);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
