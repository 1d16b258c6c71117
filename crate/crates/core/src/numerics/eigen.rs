use std::cmp::Ordering;

use rug::{Assign, Float};

use super::bigreal::BigReal;
use super::matrix::{mat_mul, Matrix};
use crate::error::{Error, Result};

const MAX_JACOBI_SWEEPS: usize = 100;

/// Eigen-decomposition of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct SymEig {
    /// Eigenvalues in descending order.
    pub values: Vec<BigReal>,
    /// Orthogonal matrix whose columns are the matching eigenvectors.
    pub vectors: Matrix,
    pub sweeps: usize,
}

impl SymEig {
    /// Column order that sorts the eigenvalues by descending magnitude.
    pub fn magnitude_order(&self) -> Vec<usize> {
        magnitude_order(&self.values)
    }
}

/// Indices sorting `values` by descending |λ|, ties kept in input order.
pub fn magnitude_order(values: &[BigReal]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[j].cmp_abs(&values[i]));
    idx
}

// Below this size the double-precision pre-pass does not pay for itself.
const GUESS_MIN: usize = 8;

/// Symmetric eigen-decomposition by cyclic Jacobi rotations. Larger
/// matrices are first diagonalised in double precision; the working
/// precision rotations then only clean up, converging quadratically.
pub fn sym_eig(m: &Matrix) -> Result<SymEig> {
    check_symmetric(m)?;
    let n = m.rows();
    if n >= GUESS_MIN {
        if let Some(guess) = double_precision_guess(m) {
            return sym_eig_with_guess(m, &guess);
        }
    }
    let mut a = m.clone();
    a.symmetrize_from_upper();
    let mut v = Matrix::identity(n, m.precision());
    let sweeps = jacobi_in_place(&mut a, &mut v)?;
    Ok(finish(a, v, sweeps))
}

/// As [`sym_eig`], starting from an approximately diagonalising orthogonal
/// `guess`. Rotations then only have to clean up what `guess` missed.
pub fn sym_eig_with_guess(m: &Matrix, guess: &Matrix) -> Result<SymEig> {
    check_symmetric(m)?;
    if guess.rows() != m.rows() || guess.cols() != m.cols() {
        return Err(Error::Dimension(format!(
            "eigenvector guess {}x{} for a {}x{} matrix",
            guess.rows(),
            guess.cols(),
            m.rows(),
            m.cols()
        )));
    }
    let mut a = mat_mul(&guess.transpose(), &mat_mul(m, guess)?)?;
    a.symmetrize_from_upper();
    let mut v = Matrix::identity(m.rows(), m.precision());
    let sweeps = jacobi_in_place(&mut a, &mut v)?;
    let v = mat_mul(guess, &v)?;
    Ok(finish(a, v, sweeps))
}

// Orthonormal eigenvector estimate from a double-precision Jacobi run on
// `m / max|m|`; None when the scaled entries do not fit in an f64.
fn double_precision_guess(m: &Matrix) -> Option<Matrix> {
    let n = m.rows();
    let scale = m.max_abs();
    if scale.is_zero() {
        return None;
    }
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let x = (m.get(i, j) / scale.clone()).to_f64();
            if !x.is_finite() {
                return None;
            }
            a[i * n + j] = x;
            a[j * n + i] = x;
        }
    }
    let v = jacobi_f64(&mut a, n);
    let mut guess = Matrix::zeros(n, n, m.precision());
    for i in 0..n {
        for j in 0..n {
            guess.set_f64(i, j, v[i * n + j]);
        }
    }
    orthonormalize_columns(&mut guess);
    Some(guess)
}

// Cyclic Jacobi on a row-major symmetric `n × n` array; returns the
// accumulated rotations, row-major.
fn jacobi_f64(a: &mut [f64], n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _ in 0..60 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= f64::EPSILON * 1e-3 * norm {
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                a[p * n + p] -= t * apq;
                a[q * n + q] += t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    if k != p && k != q {
                        let (g, h) = (a[k * n + p], a[k * n + q]);
                        let (x1, x2) = (c * g - s * h, s * g + c * h);
                        a[k * n + p] = x1;
                        a[p * n + k] = x1;
                        a[k * n + q] = x2;
                        a[q * n + k] = x2;
                    }
                    let (g, h) = (v[k * n + p], v[k * n + q]);
                    v[k * n + p] = c * g - s * h;
                    v[k * n + q] = s * g + c * h;
                }
            }
        }
    }
    v
}

fn check_symmetric(m: &Matrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "sym_eig of a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    m.check_finite("sym_eig input")?;
    if !m.is_symmetric() {
        let allowed = m.max_abs() * BigReal::pow2(10 - m.precision() as i32, m.precision());
        return Err(Error::NotSymmetric {
            deviation: m.symmetry_deviation().to_f64(),
            allowed: allowed.to_f64(),
        });
    }
    Ok(())
}

fn finish(a: Matrix, v: Matrix, sweeps: usize) -> SymEig {
    let n = a.rows();
    let diag: Vec<BigReal> = (0..n).map(|i| a.get(i, i)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap_or(Ordering::Equal));
    let values = order.iter().map(|&i| diag[i].clone()).collect();
    let mut vectors = Matrix::zeros(n, n, a.precision());
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors.at_mut(r, dst).assign(v.at(r, src));
        }
    }
    fix_column_signs(&mut vectors);
    SymEig {
        values,
        vectors,
        sweeps,
    }
}

/// Flips columns so each one's largest-magnitude entry is positive (first
/// such entry on ties).
pub fn fix_column_signs(m: &mut Matrix) {
    for j in 0..m.cols() {
        let mut best = 0;
        for i in 1..m.rows() {
            if m.at(i, j).cmp_abs(m.at(best, j)) == Some(Ordering::Greater) {
                best = i;
            }
        }
        if m.rows() > 0 && m.at(best, j).is_sign_negative() {
            for i in 0..m.rows() {
                let x = m.at_mut(i, j);
                x.neg_assign();
            }
        }
    }
}

trait NegAssign {
    fn neg_assign(&mut self);
}

impl NegAssign for Float {
    fn neg_assign(&mut self) {
        let neg = -std::mem::replace(self, Float::new(self.prec()));
        *self = neg;
    }
}

// Cyclic Jacobi with a fixed threshold. `a` is overwritten by a matrix whose
// off-diagonal entries are all below the threshold; `v` accumulates rotations.
fn jacobi_in_place(a: &mut Matrix, v: &mut Matrix) -> Result<usize> {
    let n = a.rows();
    let prec = a.precision();
    if n <= 1 {
        return Ok(0);
    }
    let threshold =
        a.max_abs() * BigReal::from_u64(n as u64, prec) * BigReal::pow2(8 - prec as i32, prec);
    let threshold = threshold.into_float();

    let mut theta = Float::new(prec);
    let mut t = Float::new(prec);
    let mut c = Float::new(prec);
    let mut s = Float::new(prec);
    let mut tmp = Float::new(prec);
    let mut x1 = Float::new(prec);
    let mut x2 = Float::new(prec);
    let mut apq = Float::new(prec);

    for sweep in 1..=MAX_JACOBI_SWEEPS {
        let mut rotations = 0usize;
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                if a.at(p, q).cmp_abs(&threshold) != Some(Ordering::Greater) {
                    continue;
                }
                rotations += 1;
                apq.assign(a.at(p, q));
                // θ = (a_qq − a_pp) / (2 a_pq)
                theta.assign(a.at(q, q) - a.at(p, p));
                theta /= &apq;
                theta /= 2;
                // t = sgn(θ) / (|θ| + √(θ² + 1))
                tmp.assign(theta.square_ref());
                tmp += 1;
                tmp.sqrt_mut();
                t.assign(theta.abs_ref());
                t += &tmp;
                t.recip_mut();
                if theta.is_sign_negative() {
                    t.neg_assign();
                }
                // c = 1/√(1 + t²), s = t·c
                c.assign(t.square_ref());
                c += 1;
                c.sqrt_mut();
                c.recip_mut();
                s.assign(&t * &c);

                tmp.assign(&t * &apq);
                *a.at_mut(p, p) -= &tmp;
                *a.at_mut(q, q) += &tmp;
                a.at_mut(p, q).assign(0);
                a.at_mut(q, p).assign(0);

                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let (g, h) = (a.at(k, p), a.at(k, q));
                    if g.is_zero() && h.is_zero() {
                        continue;
                    }
                    x1.assign(&c * g - &s * h);
                    x2.assign(&s * g + &c * h);
                    a.at_mut(k, p).assign(&x1);
                    a.at_mut(p, k).assign(&x1);
                    a.at_mut(k, q).assign(&x2);
                    a.at_mut(q, k).assign(&x2);
                }
                for k in 0..n {
                    let (g, h) = (v.at(k, p), v.at(k, q));
                    x1.assign(&c * g - &s * h);
                    x2.assign(&s * g + &c * h);
                    v.at_mut(k, p).assign(&x1);
                    v.at_mut(k, q).assign(&x2);
                }
            }
        }
        if rotations == 0 {
            a.check_finite("sym_eig")?;
            return Ok(sweep);
        }
    }
    Err(Error::NoConvergence {
        what: "Jacobi eigensolver",
        iterations: MAX_JACOBI_SWEEPS,
    })
}

/// Orthonormalises the columns of `m` in place by two passes of modified
/// Gram–Schmidt. A column that collapses is replaced by the first coordinate
/// vector that survives orthogonalisation.
pub fn orthonormalize_columns(m: &mut Matrix) {
    let (rows, cols, prec) = (m.rows(), m.cols(), m.precision());
    let collapse = BigReal::pow2(-(prec as i32) / 2, prec);
    let mut dot = Float::new(prec);
    let mut tmp = Float::new(prec);
    for j in 0..cols {
        let original = column_norm(m, j);
        for _pass in 0..2 {
            for i in 0..j {
                dot.assign(0);
                for r in 0..rows {
                    tmp.assign(m.at(r, i) * m.at(r, j));
                    dot += &tmp;
                }
                for r in 0..rows {
                    tmp.assign(m.at(r, i) * &dot);
                    *m.at_mut(r, j) -= &tmp;
                }
            }
        }
        let mut norm = column_norm(m, j);
        if original.is_zero() || norm <= &original * &collapse {
            // Replace with a coordinate vector orthogonal to the earlier columns.
            for e in 0..rows {
                for r in 0..rows {
                    m.at_mut(r, j).assign(u32::from(r == e));
                }
                for _pass in 0..2 {
                    for i in 0..j {
                        dot.assign(0);
                        for r in 0..rows {
                            tmp.assign(m.at(r, i) * m.at(r, j));
                            dot += &tmp;
                        }
                        for r in 0..rows {
                            tmp.assign(m.at(r, i) * &dot);
                            *m.at_mut(r, j) -= &tmp;
                        }
                    }
                }
                norm = column_norm(m, j);
                if norm > BigReal::from_f64(0.5, prec) {
                    break;
                }
            }
        }
        for r in 0..rows {
            *m.at_mut(r, j) /= norm.as_float();
        }
    }
}

fn column_norm(m: &Matrix, j: usize) -> BigReal {
    let mut s = Float::new(m.precision());
    let mut tmp = Float::new(m.precision());
    for r in 0..m.rows() {
        tmp.assign(m.at(r, j).square_ref());
        s += &tmp;
    }
    BigReal::from_float(s).sqrt()
}

/// Controls for [`dominant_invariant_basis`].
#[derive(Clone, Debug)]
pub struct SubspaceOptions {
    /// Stop once ‖MV − V(VᵀMV)‖_F ≤ tol·‖M‖_F.
    pub tol: BigReal,
    pub max_iter: usize,
    /// Extra columns iterated beyond the `k` wanted; more columns speed up
    /// convergence when eigenvalues near the cut are close.
    pub guard: usize,
}

impl SubspaceOptions {
    pub fn for_precision(prec: u32) -> Self {
        SubspaceOptions {
            tol: BigReal::pow2(-(prec as i32) / 2, prec),
            max_iter: 2000,
            guard: 2,
        }
    }
}

/// Two eigenvalue magnitudes on either side of a truncation that are too
/// close to separate reliably.
#[derive(Clone, Debug)]
pub struct TieWarning {
    pub kept: f64,
    pub discarded: f64,
    pub relative_gap: f64,
}

#[derive(Clone, Debug)]
pub struct InvariantBasis {
    /// Orthonormal `dim × k` basis.
    pub basis: Matrix,
    pub iterations: usize,
    pub residual: BigReal,
    pub tie: Option<TieWarning>,
    /// Final orthonormal iterate including guard columns; pass it back as
    /// the start of a later call on a nearby matrix.
    pub search: Matrix,
}

/// Orthonormal basis of the invariant subspace belonging to the `k`
/// largest-magnitude eigenvalues of a square, possibly nonsymmetric matrix.
///
/// Orthogonal subspace iteration with guard columns, started from the
/// dominant eigenvectors of the symmetric part (exact when `m` is symmetric).
pub fn dominant_invariant_basis(
    m: &Matrix,
    k: usize,
    opts: &SubspaceOptions,
) -> Result<InvariantBasis> {
    dominant_invariant_basis_from(m, k, opts, None)
}

/// As [`dominant_invariant_basis`], but iterates from `start` (typically the
/// `search` of an earlier call) when its shape fits.
pub fn dominant_invariant_basis_from(
    m: &Matrix,
    k: usize,
    opts: &SubspaceOptions,
    start: Option<&Matrix>,
) -> Result<InvariantBasis> {
    let dim = m.rows();
    let prec = m.precision();
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "invariant basis of a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    if k == 0 || k > dim {
        return Err(Error::Dimension(format!(
            "requested {k} vectors from dimension {dim}"
        )));
    }
    m.check_finite("dominant_invariant_basis input")?;

    let width = (k + opts.guard.max(1)).min(dim);
    let mut v = match start {
        Some(s) if s.rows() == dim && s.cols() == width && s.precision() == prec => {
            let mut v = s.clone();
            orthonormalize_columns(&mut v);
            v
        }
        _ => {
            let mut sym = m.add(&m.transpose())?;
            sym.div_in_place(&BigReal::from_u64(2, prec));
            let eig = sym_eig(&sym)?;
            let order = eig.magnitude_order();
            let mut v = Matrix::zeros(dim, width, prec);
            for (dst, &src) in order.iter().take(width).enumerate() {
                for r in 0..dim {
                    v.at_mut(r, dst).assign(eig.vectors.at(r, src));
                }
            }
            v
        }
    };
    if k == dim {
        fix_column_signs(&mut v);
        return Ok(InvariantBasis {
            basis: v.clone(),
            iterations: 0,
            residual: BigReal::zero(prec),
            tie: None,
            search: v,
        });
    }

    let scale = m.frobenius_norm();
    let limit = &opts.tol * &scale;
    let mut iterations = 0;
    loop {
        let w = mat_mul(m, &v)?;
        let h = mat_mul(&v.transpose(), &w)?;
        let vk = v.leading_columns(k);
        let wk = w.leading_columns(k);
        let hk = h.block(0, 0, k, k);
        let residual = wk.sub(&mat_mul(&vk, &hk)?)?.frobenius_norm();
        if residual <= limit {
            let tie = tie_check(&h, k, prec);
            let mut basis = vk;
            fix_column_signs(&mut basis);
            return Ok(InvariantBasis {
                basis,
                iterations,
                residual,
                tie,
                search: v,
            });
        }
        if iterations >= opts.max_iter {
            return Err(Error::NoConvergence {
                what: "subspace iteration",
                iterations,
            });
        }
        v = w;
        orthonormalize_columns(&mut v);
        iterations += 1;
    }
}

// Diagonal of the projected (k+1)×(k+1) block approximates the Schur values.
fn tie_check(h: &Matrix, k: usize, prec: u32) -> Option<TieWarning> {
    if h.rows() <= k {
        return None;
    }
    let kept = h.get(k - 1, k - 1).abs();
    let discarded = h.get(k, k).abs();
    let gap = &kept - &discarded;
    let allowed = &kept * &BigReal::pow2(-(prec as i32) / 4, prec);
    if gap <= allowed {
        let relative_gap = if kept.is_zero() {
            0.0
        } else {
            (gap / kept.clone()).to_f64()
        };
        Some(TieWarning {
            kept: kept.to_f64(),
            discarded: discarded.to_f64(),
            relative_gap,
        })
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const P: u32 = 256;

    fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
        let mut m = Matrix::from_fn(n, n, P, |_, _| rng.gen_range(-1.0..1.0));
        m.symmetrize_from_upper();
        m
    }

    fn reconstruct(e: &SymEig) -> Matrix {
        let d = Matrix::diag(&e.values, P);
        mat_mul(&mat_mul(&e.vectors, &d).unwrap(), &e.vectors.transpose()).unwrap()
    }

    #[test]
    fn two_by_two() {
        let m = Matrix::from_f64(2, 2, &[2.0, 1.0, 1.0, 2.0], P).unwrap();
        let e = sym_eig(&m).unwrap();
        assert_eq!(e.values[0].to_f64(), 3.0);
        assert!((e.values[1].to_f64() - 1.0).abs() < 1e-60);
    }

    #[test]
    fn already_diagonal() {
        let m = Matrix::from_f64(3, 3, &[1.0, 0.0, 0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 3.0], P).unwrap();
        let e = sym_eig(&m).unwrap();
        let vals: Vec<f64> = e.values.iter().map(BigReal::to_f64).collect();
        assert_eq!(vals, vec![5.0, 3.0, 1.0]);
        assert_eq!(e.vectors.get(1, 0).to_f64(), 1.0);
        assert_eq!(e.vectors.get(2, 1).to_f64(), 1.0);
        assert_eq!(e.vectors.get(0, 2).to_f64(), 1.0);
    }

    #[test]
    fn reconstruction_and_orthogonality() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_symmetric(8, &mut rng);
        let e = sym_eig(&m).unwrap();
        let scale = m.max_abs();
        let err = reconstruct(&e).max_abs_diff(&m).unwrap();
        assert!(err <= &scale * &BigReal::pow2(30 - P as i32, P));
        let vtv = mat_mul(&e.vectors.transpose(), &e.vectors).unwrap();
        let orth = vtv.max_abs_diff(&Matrix::identity(8, P)).unwrap();
        assert!(orth <= BigReal::pow2(20 - P as i32, P));
        for w in e.values.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn warm_start_matches_cold_start() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = random_symmetric(6, &mut rng);
        let cold = sym_eig(&m).unwrap();
        let mut perturbed = m.clone();
        perturbed.set_f64(0, 1, perturbed.get(0, 1).to_f64() + 1e-6);
        perturbed.symmetrize_from_upper();
        let warm_guess = sym_eig(&perturbed).unwrap().vectors;
        let warm = sym_eig_with_guess(&m, &warm_guess).unwrap();
        let tol = BigReal::pow2(30 - P as i32, P);
        for (a, b) in cold.values.iter().zip(&warm.values) {
            assert!((a - b).abs() <= tol);
        }
        assert!(warm.sweeps <= cold.sweeps);
    }

    #[test]
    fn rejects_asymmetric_input() {
        let m = Matrix::from_f64(2, 2, &[1.0, 2.0, 0.0, 1.0], P).unwrap();
        assert!(matches!(sym_eig(&m), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn diagonal_subspace() {
        let m = Matrix::from_f64(
            4,
            4,
            &[
                1.0, 0.0, 0.0, 0.0, 0.0, 4.0, 0.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0, 3.0,
            ],
            P,
        )
        .unwrap();
        let b = dominant_invariant_basis(&m, 2, &SubspaceOptions::for_precision(P)).unwrap();
        for r in [0, 2] {
            for c in 0..2 {
                assert!(b.basis.get(r, c).is_zero());
            }
        }
    }

    #[test]
    fn nonsymmetric_subspace_is_invariant() {
        // Similarity transform of diag(5, 3, 1, 0.5) by a non-orthogonal matrix.
        let d = Matrix::from_f64(
            4,
            4,
            &[
                5.0, 0.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.5,
            ],
            P,
        )
        .unwrap();
        let s = Matrix::from_f64(
            4,
            4,
            &[
                1.0, 0.5, 0.0, 0.2, 0.0, 1.0, 0.3, 0.0, 0.1, 0.0, 1.0, 0.4, 0.0, 0.2, 0.0, 1.0,
            ],
            P,
        )
        .unwrap();
        let s_inv = invert(&s);
        let m = mat_mul(&mat_mul(&s, &d).unwrap(), &s_inv).unwrap();
        let b = dominant_invariant_basis(&m, 2, &SubspaceOptions::for_precision(P)).unwrap();
        let v = &b.basis;
        let mv = mat_mul(&m, v).unwrap();
        let h = mat_mul(&v.transpose(), &mv).unwrap();
        let r = mv.sub(&mat_mul(v, &h).unwrap()).unwrap().frobenius_norm();
        assert!(r <= &m.frobenius_norm() * &BigReal::pow2(-(P as i32) / 2, P));
        let vtv = mat_mul(&v.transpose(), v).unwrap();
        assert!(
            vtv.max_abs_diff(&Matrix::identity(2, P)).unwrap() <= BigReal::pow2(20 - P as i32, P)
        );
        assert!(b.tie.is_none());

        let opts = SubspaceOptions {
            guard: 1,
            ..SubspaceOptions::for_precision(P)
        };
        let cold = dominant_invariant_basis(&m, 2, &opts).unwrap();
        let warm = dominant_invariant_basis_from(&m, 2, &opts, Some(&cold.search)).unwrap();
        assert!(warm.iterations <= 1, "{} iterations", warm.iterations);
        assert!(warm.basis.max_abs_diff(&cold.basis).unwrap() <= BigReal::pow2(-(P as i32) / 3, P));
    }

    #[test]
    fn symmetric_subspace_matches_sym_eig() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let m = random_symmetric(7, &mut rng);
        let e = sym_eig(&m).unwrap();
        let order = e.magnitude_order();
        let b = dominant_invariant_basis(&m, 3, &SubspaceOptions::for_precision(P)).unwrap();
        // Projector onto the sym_eig span must fix every basis column.
        let mut top = Matrix::zeros(7, 3, P);
        for (dst, &src) in order.iter().take(3).enumerate() {
            for r in 0..7 {
                top.set(r, dst, &e.vectors.get(r, src));
            }
        }
        let proj = mat_mul(&top, &top.transpose()).unwrap();
        let err = mat_mul(&proj, &b.basis)
            .unwrap()
            .max_abs_diff(&b.basis)
            .unwrap();
        assert!(err <= BigReal::pow2(20 - P as i32, P));
    }

    #[test]
    fn tie_is_reported() {
        let m = Matrix::from_f64(3, 3, &[2.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 1.0], P).unwrap();
        let b = dominant_invariant_basis(&m, 1, &SubspaceOptions::for_precision(P)).unwrap();
        assert!(b.tie.is_some());
    }

    #[test]
    fn orthonormalize_handles_dependent_columns() {
        let mut m = Matrix::from_f64(3, 2, &[1.0, 2.0, 1.0, 2.0, 0.0, 0.0], P).unwrap();
        orthonormalize_columns(&mut m);
        let mtm = mat_mul(&m.transpose(), &m).unwrap();
        assert!(
            mtm.max_abs_diff(&Matrix::identity(2, P)).unwrap() <= BigReal::pow2(20 - P as i32, P)
        );
    }

    fn invert(s: &Matrix) -> Matrix {
        let n = s.rows();
        let mut a = s.clone();
        let mut inv = Matrix::identity(n, P);
        for col in 0..n {
            let pivot = a.get(col, col);
            for j in 0..n {
                a.set(col, j, &(a.get(col, j) / pivot.clone()));
                inv.set(col, j, &(inv.get(col, j) / pivot.clone()));
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a.get(r, col);
                for j in 0..n {
                    a.set(r, j, &(a.get(r, j) - &f * &a.get(col, j)));
                    inv.set(r, j, &(inv.get(r, j) - &f * &inv.get(col, j)));
                }
            }
        }
        inv
    }
}
