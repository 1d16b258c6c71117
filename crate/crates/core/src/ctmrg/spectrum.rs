//! Corner-matrix eigenvalue spectra, used to judge how fast truncation
//! errors decay with the matrix size.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::symmetric::CtmEnvironment;
use crate::error::Result;
use crate::models::ModelSpec;
use crate::numerics::BigReal;

/// Per-spin eigenvalue lists, each sorted descending and divided by its
/// leading value.
#[derive(Clone, Debug)]
pub struct SpectrumDump {
    pub model: String,
    pub n: usize,
    pub sectors: Vec<Vec<BigReal>>,
}

impl SpectrumDump {
    /// Builds a dump from raw eigenvalues; magnitudes are used.
    pub fn from_sectors(model: &str, n: usize, raw: Vec<Vec<BigReal>>) -> Self {
        let sectors = raw
            .into_iter()
            .map(|values| {
                let mut mags: Vec<BigReal> = values.iter().map(BigReal::abs).collect();
                mags.sort_by(|x, y| y.cmp_abs(x));
                if let Some(top) = mags.first().cloned() {
                    if !top.is_zero() {
                        for v in &mut mags {
                            *v = &*v / &top;
                        }
                    }
                }
                mags
            })
            .collect();
        SpectrumDump {
            model: model.to_string(),
            n,
            sectors,
        }
    }

    /// Pearson correlation of `ln λ_k` against `(ln k)²` over `k > skip`,
    /// ignoring zero eigenvalues. `None` with fewer than three points.
    pub fn tail_correlation(&self, sector: usize, skip: usize) -> Option<f64> {
        let points: Vec<(f64, f64)> = self
            .sectors
            .get(sector)?
            .iter()
            .enumerate()
            .skip(skip)
            .filter(|(_, v)| !v.is_zero())
            .map(|(i, v)| {
                let lk = ((i + 1) as f64).ln();
                (lk * lk, v.ln().to_f64())
            })
            .collect();
        pearson(&points)
    }

    pub fn to_csv(&self, digits: usize) -> String {
        let mut out = String::from("spin,k,lambda\n");
        for (spin, values) in self.sectors.iter().enumerate() {
            for (k, v) in values.iter().enumerate() {
                let _ = writeln!(out, "{spin},{},{}", k + 1, v.to_decimal(digits));
            }
        }
        out
    }
}

fn pearson(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 3 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Spectrum of a reduced symmetric environment (its corners are diagonal).
pub fn spectrum(env: &CtmEnvironment, model: &ModelSpec) -> SpectrumDump {
    let raw = env
        .a
        .iter()
        .map(|a| (0..a.rows()).map(|i| a.get(i, i)).collect())
        .collect();
    SpectrumDump::from_sectors(model.name(), env.n, raw)
}

/// Writes `spin,k,lambda` rows with as many digits as the precision carries.
pub fn write_spectrum_csv(path: &Path, dump: &SpectrumDump, prec: u32) -> Result<()> {
    fs::write(path, dump.to_csv(BigReal::decimal_digits(prec)))?;
    Ok(())
}
