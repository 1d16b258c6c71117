// A run interrupted after a few sweeps and resumed from its checkpoint
// reports the same digits as one that ran straight through.

use ctm_capacity::cli::main_with_args;

fn cli(args: &[&str]) -> Result<(i32, String), Box<dyn std::error::Error>> {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = main_with_args(
        std::iter::once("ctm-capacity").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    eprint!("{}", String::from_utf8(err)?);
    Ok((code, String::from_utf8(out)?))
}

fn estimate_line(report: &str) -> Option<&str> {
    report.lines().find(|l| l.starts_with("estimate"))
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("ctm-capacity-resume-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let cp = dir.join("nak.ckpt");
    let cp = cp.to_str().ok_or("non-UTF-8 temp path")?;
    let common = [
        "--model",
        "nak",
        "--mode",
        "estimate",
        "--precision-bits",
        "128",
        "--digits",
        "16",
        "--nmax",
        "8",
    ];

    let straight = cli(&[&common[..], &["--tol", "1e-20", "--max-sweeps", "200"]].concat())?;
    // Stop early: one sweep at n = 8 hits the cap and exits with status 2.
    let first = cli(&[
        &common[..],
        &["--tol", "1e-20", "--max-sweeps", "1", "--checkpoint", cp],
    ]
    .concat())?;
    let resumed = cli(&[
        &common[..],
        &[
            "--tol",
            "1e-20",
            "--max-sweeps",
            "200",
            "--checkpoint",
            cp,
            "--resume",
        ],
    ]
    .concat())?;
    std::fs::remove_dir_all(&dir)?;

    println!(
        "straight run: {}",
        estimate_line(&straight.1).unwrap_or("?")
    );
    println!(
        "interrupted:  {} (exit {})",
        estimate_line(&first.1).unwrap_or("?"),
        first.0
    );
    println!("resumed:      {}", estimate_line(&resumed.1).unwrap_or("?"));
    assert_eq!(first.0, 2);
    assert_eq!((straight.0, resumed.0), (0, 0));
    assert_eq!(estimate_line(&straight.1), estimate_line(&resumed.1));
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
