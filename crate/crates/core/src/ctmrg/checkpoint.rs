//! Versioned plain-text checkpoints. Every number is stored exactly as a
//! hexadecimal significand and a binary exponent, so a round trip is
//! bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::symmetric::CtmEnvironment;
use super::Variant;
use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::numerics::{BigReal, Matrix};

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &str = "ctm-capacity checkpoint";

/// Engine-independent checkpoint contents.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub variant: Variant,
    pub model_name: String,
    pub model_hash: u64,
    pub q: usize,
    pub n: usize,
    pub p_equiv: usize,
    pub precision: u32,
    pub sweeps: usize,
    pub truncated: bool,
    /// Estimate after the last sweep, if one was computed.
    pub estimate: Option<BigReal>,
    pub scalars: Vec<(String, BigReal)>,
    pub matrices: Vec<(String, Matrix)>,
}

impl Checkpoint {
    /// Errors unless the checkpoint was written for `model` by `variant`.
    pub fn check_compatible(&self, model: &ModelSpec, variant: Variant) -> Result<()> {
        if self.model_hash != model.fingerprint() || self.q != model.q() {
            return Err(Error::Checkpoint(format!(
                "checkpoint was written for model `{}`, not `{}`",
                self.model_name,
                model.name()
            )));
        }
        if self.variant != variant {
            return Err(Error::Checkpoint(format!(
                "checkpoint holds a {} environment, not {}",
                self.variant.as_str(),
                variant.as_str()
            )));
        }
        Ok(())
    }

    pub fn scalar(&self, name: &str) -> Result<&BigReal> {
        self.scalars
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v)
            .ok_or_else(|| Error::Checkpoint(format!("missing scalar `{name}`")))
    }

    pub fn matrix(&self, name: &str) -> Result<&Matrix> {
        self.matrices
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, m)| m)
            .ok_or_else(|| Error::Checkpoint(format!("missing matrix `{name}`")))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC}");
        let _ = writeln!(out, "version {CHECKPOINT_VERSION}");
        let _ = writeln!(out, "variant {}", self.variant.as_str());
        let _ = writeln!(out, "model {}", self.model_name);
        let _ = writeln!(out, "model_hash {:016x}", self.model_hash);
        let _ = writeln!(out, "q {}", self.q);
        let _ = writeln!(out, "n {}", self.n);
        let _ = writeln!(out, "p_equiv {}", self.p_equiv);
        let _ = writeln!(out, "precision {}", self.precision);
        let _ = writeln!(out, "sweeps {}", self.sweeps);
        let _ = writeln!(out, "truncated {}", u8::from(self.truncated));
        match &self.estimate {
            Some(e) => {
                let (s, x) = e.to_hex_pair();
                let _ = writeln!(out, "estimate {s} {x}");
            }
            None => {
                let _ = writeln!(out, "estimate none");
            }
        }
        let _ = writeln!(out, "scalars {}", self.scalars.len());
        for (name, v) in &self.scalars {
            let (s, x) = v.to_hex_pair();
            let _ = writeln!(out, "{name} {s} {x}");
        }
        let _ = writeln!(out, "matrices {}", self.matrices.len());
        for (name, m) in &self.matrices {
            let _ = writeln!(out, "matrix {name} {} {}", m.rows(), m.cols());
            for i in 0..m.rows() {
                for j in 0..m.cols() {
                    let (s, x) = m.get(i, j).to_hex_pair();
                    let _ = writeln!(out, "{s} {x}");
                }
            }
        }
        out.push_str("end\n");
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = Lines::new(text);
        let magic = lines.next()?;
        if magic != MAGIC {
            return Err(Error::Checkpoint("not a ctm-capacity checkpoint".into()));
        }
        let version: u32 = lines.field("version")?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "format version {version} is not supported (expected {CHECKPOINT_VERSION})"
            )));
        }
        let variant = Variant::parse(&lines.field::<String>("variant")?)
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        let model_name: String = lines.field("model")?;
        let hash_text: String = lines.field("model_hash")?;
        let model_hash = u64::from_str_radix(&hash_text, 16)
            .map_err(|_| Error::Checkpoint(format!("bad model hash `{hash_text}`")))?;
        let q = lines.field("q")?;
        let n = lines.field("n")?;
        let p_equiv = lines.field("p_equiv")?;
        let precision: u32 = lines.field("precision")?;
        let sweeps = lines.field("sweeps")?;
        let truncated = lines.field::<u8>("truncated")? != 0;
        let estimate_text: String = lines.field("estimate")?;
        let estimate = if estimate_text == "none" {
            None
        } else {
            Some(parse_pair(&estimate_text, precision, lines.line)?)
        };
        let n_scalars: usize = lines.field("scalars")?;
        let mut scalars = Vec::with_capacity(n_scalars);
        for _ in 0..n_scalars {
            let line = lines.next()?;
            let (name, rest) = line
                .split_once(' ')
                .ok_or_else(|| lines.error("expected `name significand exponent`"))?;
            scalars.push((name.to_string(), parse_pair(rest, precision, lines.line)?));
        }
        let n_matrices: usize = lines.field("matrices")?;
        let mut matrices = Vec::with_capacity(n_matrices);
        for _ in 0..n_matrices {
            let header = lines.next()?;
            let parts: Vec<&str> = header.split_whitespace().collect();
            if parts.len() != 4 || parts[0] != "matrix" {
                return Err(lines.error("expected `matrix name rows cols`"));
            }
            let rows: usize = parts[2].parse().map_err(|_| lines.error("bad row count"))?;
            let cols: usize = parts[3]
                .parse()
                .map_err(|_| lines.error("bad column count"))?;
            let mut m = Matrix::zeros(rows, cols, precision);
            for i in 0..rows {
                for j in 0..cols {
                    let entry = lines.next()?;
                    m.set(i, j, &parse_pair(entry, precision, lines.line)?);
                }
            }
            matrices.push((parts[1].to_string(), m));
        }
        if lines.next()? != "end" {
            return Err(lines.error("expected `end`"));
        }
        Ok(Checkpoint {
            variant,
            model_name,
            model_hash,
            q,
            n,
            p_equiv,
            precision,
            sweeps,
            truncated,
            estimate,
            scalars,
            matrices,
        })
    }
}

struct Lines<'a> {
    inner: std::str::Lines<'a>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines(),
            line: 0,
        }
    }

    fn next(&mut self) -> Result<&'a str> {
        self.line += 1;
        self.inner.next().map(str::trim).ok_or_else(|| {
            Error::Checkpoint(format!("unexpected end of file at line {}", self.line))
        })
    }

    fn error(&self, message: &str) -> Error {
        Error::Checkpoint(format!("line {}: {message}", self.line))
    }

    fn field<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let line = self.next()?;
        let value = line
            .strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .ok_or_else(|| self.error(&format!("expected `{key}`")))?;
        value
            .trim()
            .parse()
            .map_err(|_| self.error(&format!("bad value for `{key}`")))
    }
}

fn parse_pair(text: &str, prec: u32, line: usize) -> Result<BigReal> {
    let mut parts = text.split_whitespace();
    match (parts.next(), parts.next(), parts.next()) {
        (Some(s), Some(x), None) => {
            let exp: i32 = x
                .parse()
                .map_err(|_| Error::Checkpoint(format!("line {line}: bad exponent `{x}`")))?;
            BigReal::from_hex_pair(s, exp, prec)
        }
        _ => Err(Error::Checkpoint(format!(
            "line {line}: expected `significand exponent`"
        ))),
    }
}

/// Conversion between an engine's environment and a [`Checkpoint`].
pub trait CheckpointEnv: Sized {
    fn to_checkpoint(&self, model: &ModelSpec, estimate: Option<&BigReal>) -> Checkpoint;
    fn from_checkpoint(checkpoint: &Checkpoint, model: &ModelSpec) -> Result<Self>;
}

pub fn write_checkpoint(path: &Path, checkpoint: &Checkpoint) -> Result<()> {
    // Write-then-rename so an interrupted write never leaves a torn file.
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, checkpoint.to_text())?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Checkpoint(format!("cannot read {}: {e}", path.display())))?;
    Checkpoint::from_text(&text)
}

pub(crate) fn family_names(prefix: &str, count: usize) -> Vec<String> {
    (0..count).map(|i| format!("{prefix}{i}")).collect()
}

pub(crate) fn take_family(
    checkpoint: &Checkpoint,
    prefix: &str,
    count: usize,
    n: usize,
) -> Result<Vec<Matrix>> {
    family_names(prefix, count)
        .iter()
        .map(|name| {
            let m = checkpoint.matrix(name)?;
            if m.rows() != n || m.cols() != n {
                return Err(Error::Checkpoint(format!("matrix `{name}` is not {n}x{n}")));
            }
            Ok(m.clone())
        })
        .collect()
}

impl CheckpointEnv for CtmEnvironment {
    fn to_checkpoint(&self, model: &ModelSpec, estimate: Option<&BigReal>) -> Checkpoint {
        let mut matrices = Vec::with_capacity(self.q + self.q * self.q);
        for (name, m) in family_names("A", self.q).into_iter().zip(&self.a) {
            matrices.push((name, m.clone()));
        }
        for (name, m) in family_names("F", self.q * self.q).into_iter().zip(&self.f) {
            matrices.push((name, m.clone()));
        }
        Checkpoint {
            variant: Variant::Symmetric,
            model_name: model.name().to_string(),
            model_hash: model.fingerprint(),
            q: self.q,
            n: self.n,
            p_equiv: self.p_equiv,
            precision: self.prec,
            sweeps: self.sweeps,
            truncated: self.truncated,
            estimate: estimate.cloned(),
            scalars: vec![
                ("scale_a".into(), self.scale_a.clone()),
                ("scale_f".into(), self.scale_f.clone()),
            ],
            matrices,
        }
    }

    fn from_checkpoint(checkpoint: &Checkpoint, model: &ModelSpec) -> Result<Self> {
        checkpoint.check_compatible(model, Variant::Symmetric)?;
        let (q, n) = (checkpoint.q, checkpoint.n);
        let a = take_family(checkpoint, "A", q, n)?;
        let f = take_family(checkpoint, "F", q * q, n)?;
        let mut env = CtmEnvironment::from_parts(a, f, checkpoint.precision)?;
        env.p_equiv = checkpoint.p_equiv;
        env.sweeps = checkpoint.sweeps;
        env.truncated = checkpoint.truncated;
        env.scale_a = checkpoint.scalar("scale_a")?.clone();
        env.scale_f = checkpoint.scalar("scale_f")?.clone();
        Ok(env)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctmrg::Sweepable;
    use crate::models::builtin;

    #[test]
    fn round_trip_is_bit_exact() {
        let hs = builtin("hard_squares").unwrap();
        let mut env = crate::ctmrg::init_environment(&hs, 128).unwrap();
        for n in [2, 3, 4] {
            env.sweep(&hs, n).unwrap();
        }
        let estimate = env.estimate(&hs).unwrap();
        let text = env.to_checkpoint(&hs, Some(&estimate)).to_text();
        let back = Checkpoint::from_text(&text).unwrap();
        assert_eq!(back.estimate.as_ref(), Some(&estimate));
        let restored = CtmEnvironment::from_checkpoint(&back, &hs).unwrap();
        assert_eq!(restored.a, env.a);
        assert_eq!(restored.f, env.f);
        assert_eq!(restored.scale_a, env.scale_a);
        assert_eq!(
            (restored.n, restored.p_equiv, restored.sweeps),
            (env.n, env.p_equiv, env.sweeps)
        );
        assert_eq!(restored.to_checkpoint(&hs, Some(&estimate)).to_text(), text);
    }

    #[test]
    fn mismatched_model_is_refused() {
        let hs = builtin("hard_squares").unwrap();
        let env = crate::ctmrg::init_environment(&hs, 64).unwrap();
        let ck = env.to_checkpoint(&hs, None);
        let nak = builtin("nak").unwrap();
        assert!(matches!(
            CtmEnvironment::from_checkpoint(&ck, &nak),
            Err(Error::Checkpoint(_))
        ));
    }

    #[test]
    fn corrupt_files_are_refused() {
        assert!(Checkpoint::from_text("hello").is_err());
        let hs = builtin("hard_squares").unwrap();
        let env = crate::ctmrg::init_environment(&hs, 64).unwrap();
        let text = env.to_checkpoint(&hs, None).to_text();
        let truncated: String = text.lines().take(12).collect::<Vec<_>>().join("\n");
        assert!(Checkpoint::from_text(&truncated).is_err());
        let bumped = text.replace("version 1", "version 9");
        assert!(Checkpoint::from_text(&bumped).is_err());
    }
}
