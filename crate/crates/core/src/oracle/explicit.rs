//! The `R` and `S` matrices of the bound written out in full and
//! diagonalised densely, for checking the implicit power iterations at
//! small `n`.

use serde::Serialize;

use crate::bounds::HalfRows;
use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::numerics::{
    dominant_invariant_basis, mat_mul, sym_eig, BigReal, Matrix, SubspaceOptions,
};

/// Largest explicit dimension built here.
pub const EXPLICIT_GUARD: usize = 1024;

fn guard(dim: usize) -> Result<()> {
    if dim > EXPLICIT_GUARD {
        return Err(Error::SizeGuard(format!(
            "explicit matrix of dimension {dim} exceeds {EXPLICIT_GUARD}"
        )));
    }
    Ok(())
}

// Adds `L_{ij} M_{i'j'}` at row `(rb, i, i')`, column `(cb, j, j')`.
fn add_kron(out: &mut Matrix, rb: usize, cb: usize, l: &Matrix, m: &Matrix) {
    let n = l.rows();
    for i in 0..n {
        for i2 in 0..n {
            for j in 0..n {
                let lij = l.get(i, j);
                if lij.is_zero() {
                    continue;
                }
                for j2 in 0..n {
                    let row = (rb * n + i) * n + i2;
                    let col = (cb * n + j) * n + j2;
                    let v = out.get(row, col) + &lij * &m.get(i2, j2);
                    out.set(row, col, &v);
                }
            }
        }
    }
}

/// Spin families: `R_{(a,i,i'),(b,j,j')} = F(a,b)_{ij} F(b,a)_{j'i'}`.
/// Bond families: `R_{(i,i'),(j,j')} = Σ_a F(a)_{ij} F(a)_{i'j'}`.
pub fn explicit_r(f: &HalfRows) -> Result<Matrix> {
    let (q, n, prec) = (f.q, f.n(), f.prec());
    let blocks = if f.bond { 1 } else { q };
    let dim = blocks * n * n;
    guard(dim)?;
    let mut r = Matrix::zeros(dim, dim, prec);
    if f.bond {
        for fa in &f.f {
            add_kron(&mut r, 0, 0, fa, fa);
        }
    } else {
        for a in 0..q {
            for b in 0..q {
                add_kron(&mut r, a, b, f.get(a, b), &f.get(b, a).transpose());
            }
        }
    }
    Ok(r)
}

/// Spin families:
/// `S_{(a,b,i,i'),(c,d,j,j')} = ω(a,b;c,d) F(a,c)_{ij} F(d,b)_{j'i'}`.
/// Bond families: `S_{(a,i,i'),(d,j,j')} = Σ_{bc} ω(a,b,c,d) F(b)_{ij} F(c)_{i'j'}`.
pub fn explicit_s(f: &HalfRows, model: &ModelSpec) -> Result<Matrix> {
    let (q, n, prec) = (f.q, f.n(), f.prec());
    let blocks = if f.bond { q } else { q * q };
    let dim = blocks * n * n;
    guard(dim)?;
    let mut s = Matrix::zeros(dim, dim, prec);
    for [a, b, c, d] in model.valid_cells() {
        if f.bond {
            add_kron(&mut s, a, d, &f.f[b], &f.f[c]);
        } else {
            add_kron(
                &mut s,
                a * q + b,
                c * q + d,
                f.get(a, c),
                &f.get(d, b).transpose(),
            );
        }
    }
    Ok(s)
}

/// Dominant eigenvalues of the explicit matrices.
#[derive(Clone, Debug, Serialize)]
pub struct DenseBound {
    #[serde(serialize_with = "crate::oracle::decimal")]
    pub xi: BigReal,
    #[serde(serialize_with = "crate::oracle::decimal")]
    pub eta: BigReal,
    #[serde(serialize_with = "crate::oracle::decimal")]
    pub ratio: BigReal,
}

fn dominant(m: &Matrix, symmetric: bool) -> Result<BigReal> {
    if symmetric {
        let e = sym_eig(m)?;
        return Ok(e.values.iter().fold(e.values[0].clone(), |acc, v| {
            if *v > acc {
                v.clone()
            } else {
                acc
            }
        }));
    }
    let mut opts = SubspaceOptions::for_precision(m.precision());
    opts.max_iter = 20_000;
    let v = dominant_invariant_basis(m, 1, &opts)?.basis;
    let mv = mat_mul(m, &v)?;
    mat_mul(&v.transpose(), &mv)?.trace()
}

/// `ξ`, `η` and `η/ξ` by dense diagonalisation. Spin families use the
/// symmetric eigensolver; bond families use subspace iteration, whose
/// accuracy is about half the working precision.
pub fn dense_bound(f: &HalfRows, model: &ModelSpec) -> Result<DenseBound> {
    let r = explicit_r(f)?;
    let s = explicit_s(f, model)?;
    let symmetric = !f.bond;
    if symmetric && !(r.is_symmetric() && s.is_symmetric()) {
        return Err(Error::NotSymmetric {
            deviation: r.symmetry_deviation().max(&s.symmetry_deviation()).to_f64(),
            allowed: 0.0,
        });
    }
    let xi = dominant(&r, symmetric)?;
    let eta = dominant(&s, symmetric)?;
    Ok(DenseBound {
        ratio: &eta / &xi,
        xi,
        eta,
    })
}
