use std::fmt;

use rayon::prelude::*;
use rug::{Assign, Float};

use super::bigreal::BigReal;
use crate::error::{Error, Result};

// Below this many multiply-adds a product runs on the calling thread.
const PARALLEL_WORK: usize = 1 << 15;

/// Dense row-major matrix of `rug::Float` entries sharing one precision.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    prec: u32,
    data: Vec<Float>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize, prec: u32) -> Self {
        Matrix {
            rows,
            cols,
            prec,
            data: vec![Float::new(prec); rows * cols],
        }
    }

    pub fn identity(n: usize, prec: u32) -> Self {
        let mut m = Matrix::zeros(n, n, prec);
        for i in 0..n {
            m.data[i * n + i].assign(1);
        }
        m
    }

    pub fn from_f64(rows: usize, cols: usize, values: &[f64], prec: u32) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} values supplied for a {rows}x{cols} matrix",
                values.len()
            )));
        }
        Ok(Matrix {
            rows,
            cols,
            prec,
            data: values.iter().map(|&v| Float::with_val(prec, v)).collect(),
        })
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        prec: u32,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(Float::with_val(prec, f(i, j)));
            }
        }
        Matrix {
            rows,
            cols,
            prec,
            data,
        }
    }

    pub fn diag(values: &[BigReal], prec: u32) -> Self {
        let n = values.len();
        let mut m = Matrix::zeros(n, n, prec);
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i].assign(v.as_float());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> BigReal {
        BigReal::from_float(self.data[i * self.cols + j].clone())
    }

    pub fn set(&mut self, i: usize, j: usize, value: &BigReal) {
        self.data[i * self.cols + j].assign(value.as_float());
    }

    pub fn set_f64(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j].assign(value);
    }

    pub(crate) fn at(&self, i: usize, j: usize) -> &Float {
        &self.data[i * self.cols + j]
    }

    pub(crate) fn at_mut(&mut self, i: usize, j: usize) -> &mut Float {
        &mut self.data[i * self.cols + j]
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.data.iter().map(Float::to_f64).collect()
    }

    /// True if every entry is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Float::is_zero)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(Float::is_finite)
    }

    pub(crate) fn check_finite(&self, context: &'static str) -> Result<()> {
        if self.all_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(context))
        }
    }

    fn same_precision(&self, other: &Matrix) -> Result<()> {
        if self.prec != other.prec {
            return Err(Error::Precision {
                left: self.prec,
                right: other.prec,
            });
        }
        Ok(())
    }

    fn same_shape(&self, other: &Matrix, op: &str) -> Result<()> {
        self.same_precision(other)?;
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "{op}: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows, self.prec);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i].assign(&self.data[i * self.cols + j]);
            }
        }
        t
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.same_shape(other, "add")?;
        let mut out = self.clone();
        out.add_assign(other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.same_shape(other, "sub")?;
        let mut out = self.clone();
        for (x, y) in out.data.iter_mut().zip(&other.data) {
            *x -= y;
        }
        Ok(out)
    }

    pub fn add_assign(&mut self, other: &Matrix) -> Result<()> {
        self.same_shape(other, "add")?;
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += y;
        }
        Ok(())
    }

    pub fn scale(&self, factor: &BigReal) -> Matrix {
        let mut out = self.clone();
        out.scale_in_place(factor);
        out
    }

    pub fn scale_in_place(&mut self, factor: &BigReal) {
        for x in &mut self.data {
            *x *= factor.as_float();
        }
    }

    pub fn div_in_place(&mut self, divisor: &BigReal) {
        for x in &mut self.data {
            *x /= divisor.as_float();
        }
    }

    pub fn trace(&self) -> Result<BigReal> {
        if !self.is_square() {
            return Err(Error::Dimension(format!(
                "trace of a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let mut t = Float::new(self.prec);
        for i in 0..self.rows {
            t += &self.data[i * self.cols + i];
        }
        Ok(BigReal::from_float(t))
    }

    /// Trace of the product `self · other` without forming it.
    pub fn trace_of_product(&self, other: &Matrix) -> Result<BigReal> {
        self.same_precision(other)?;
        if self.cols != other.rows || self.rows != other.cols {
            return Err(Error::Dimension(format!(
                "trace of product {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut t = Float::new(self.prec);
        let mut tmp = Float::new(self.prec);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self.data[i * self.cols + k];
                if a.is_zero() {
                    continue;
                }
                tmp.assign(a * &other.data[k * other.cols + i]);
                t += &tmp;
            }
        }
        Ok(BigReal::from_float(t))
    }

    /// Sum of squares of all entries.
    pub fn frobenius_sq(&self) -> BigReal {
        let mut s = Float::new(self.prec);
        let mut tmp = Float::new(self.prec);
        for x in &self.data {
            tmp.assign(x.square_ref());
            s += &tmp;
        }
        BigReal::from_float(s)
    }

    pub fn frobenius_norm(&self) -> BigReal {
        self.frobenius_sq().sqrt()
    }

    pub fn max_abs(&self) -> BigReal {
        let mut best = Float::new(self.prec);
        for x in &self.data {
            if x.cmp_abs(&best) == Some(std::cmp::Ordering::Greater) {
                best.assign(x.abs_ref());
            }
        }
        BigReal::from_float(best)
    }

    /// Largest |M[i][j] − M[j][i]|.
    pub fn symmetry_deviation(&self) -> BigReal {
        let mut worst = Float::new(self.prec);
        let mut diff = Float::new(self.prec);
        for i in 0..self.rows.min(self.cols) {
            for j in (i + 1)..self.cols.min(self.rows) {
                diff.assign(&self.data[i * self.cols + j] - &self.data[j * self.cols + i]);
                diff.abs_mut();
                if diff > worst {
                    worst.assign(&diff);
                }
            }
        }
        BigReal::from_float(worst)
    }

    /// Symmetry test at tolerance `2^(10 − precision) · max|M|`.
    pub fn is_symmetric(&self) -> bool {
        if !self.is_square() {
            return false;
        }
        let allowed = self.max_abs() * BigReal::pow2(10 - self.prec as i32, self.prec);
        self.symmetry_deviation() <= allowed
    }

    /// Replaces the lower triangle by the upper one.
    pub fn symmetrize_from_upper(&mut self) {
        let n = self.rows.min(self.cols);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = self.data[i * self.cols + j].clone();
                self.data[j * self.cols + i] = v;
            }
        }
    }

    /// Copy of the `rows × cols` block whose top-left corner is `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Matrix {
        let mut out = Matrix::zeros(rows, cols, self.prec);
        for i in 0..rows {
            for j in 0..cols {
                out.data[i * cols + j].assign(&self.data[(r0 + i) * self.cols + c0 + j]);
            }
        }
        out
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, block: &Matrix) {
        for i in 0..block.rows {
            for j in 0..block.cols {
                self.data[(r0 + i) * self.cols + c0 + j].assign(&block.data[i * block.cols + j]);
            }
        }
    }

    /// Adds `block` into the region starting at `(r0, c0)`.
    pub fn add_block(&mut self, r0: usize, c0: usize, block: &Matrix) {
        for i in 0..block.rows {
            for j in 0..block.cols {
                let src = &block.data[i * block.cols + j];
                if !src.is_zero() {
                    self.data[(r0 + i) * self.cols + c0 + j] += src;
                }
            }
        }
    }

    /// Leading `k` columns.
    pub fn leading_columns(&self, k: usize) -> Matrix {
        self.block(0, 0, self.rows, k)
    }

    pub fn column(&self, j: usize) -> Vec<BigReal> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Elementwise ‖self − other‖_max.
    pub fn max_abs_diff(&self, other: &Matrix) -> Result<BigReal> {
        Ok(self.sub(other)?.max_abs())
    }

    /// Converts every entry to precision `prec` (round to nearest).
    pub fn with_precision(&self, prec: u32) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            prec,
            data: self.data.iter().map(|x| Float::with_val(prec, x)).collect(),
        }
    }

    pub fn mat_mul(&self, other: &Matrix) -> Result<Matrix> {
        mat_mul(self, other)
    }

    /// True if every off-diagonal entry is exactly zero.
    pub fn is_diagonal(&self) -> bool {
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != j && !self.data[i * self.cols + j].is_zero() {
                    return false;
                }
            }
        }
        true
    }

    /// `self · d` for a diagonal `d` (only its diagonal is read).
    pub fn scale_columns_by(&self, d: &Matrix) -> Matrix {
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[i * self.cols + j] *= &d.data[j * d.cols + j];
            }
        }
        out
    }

    /// `d · self` for a diagonal `d` (only its diagonal is read).
    pub fn scale_rows_by(&self, d: &Matrix) -> Matrix {
        let mut out = self.clone();
        for i in 0..self.rows {
            let f = &d.data[i * d.cols + i];
            for j in 0..self.cols {
                out.data[i * self.cols + j] *= f;
            }
        }
        out
    }
}

/// Product `a · b`.
///
/// Every output entry is accumulated over the inner index in ascending order
/// with round-to-nearest after each multiply and each add, so the result does
/// not depend on how many threads share the work. Exact zeros in `a` are
/// skipped, which is a no-op numerically.
pub fn mat_mul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    a.same_precision(b)?;
    if a.cols != b.rows {
        return Err(Error::Dimension(format!(
            "mat_mul: {}x{} by {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let (m, inner, n, prec) = (a.rows, a.cols, b.cols, a.prec);
    let mut out = Matrix::zeros(m, n, prec);
    if m == 0 || n == 0 {
        return Ok(out);
    }
    let row_kernel = |i: usize, row: &mut [Float]| {
        for k in 0..inner {
            let aik = &a.data[i * inner + k];
            if aik.is_zero() {
                continue;
            }
            let brow = &b.data[k * n..(k + 1) * n];
            for (c, bkj) in row.iter_mut().zip(brow) {
                if bkj.is_zero() {
                    continue;
                }
                *c += aik * bkj;
            }
        }
    };
    if m * inner * n >= PARALLEL_WORK && rayon::current_num_threads() > 1 {
        out.data
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(i, row)| row_kernel(i, row));
    } else {
        for (i, row) in out.data.chunks_mut(n).enumerate() {
            row_kernel(i, row);
        }
    }
    out.check_finite("mat_mul")?;
    Ok(out)
}

/// `a · b`, taking a shortcut when either factor is diagonal.
pub fn mul_auto(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.is_square() && a.rows == b.rows && a.prec == b.prec && a.is_diagonal() {
        return Ok(b.scale_rows_by(a));
    }
    if b.is_square() && a.cols == b.rows && a.prec == b.prec && b.is_diagonal() {
        return Ok(a.scale_columns_by(b));
    }
    mat_mul(a, b)
}

/// `pᵀ · m · q`.
pub fn congruence(p: &Matrix, m: &Matrix, q: &Matrix) -> Result<Matrix> {
    mat_mul(&p.transpose(), &mat_mul(m, q)?)
}

/// Product of a chain of matrices, left to right.
pub fn chain(factors: &[&Matrix]) -> Result<Matrix> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| Error::Dimension("empty product".into()))?;
    let mut acc = (*first).clone();
    for f in rest {
        acc = mat_mul(&acc, f)?;
    }
    Ok(acc)
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} @{} bits", self.rows, self.cols, self.prec)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|j| format!("{:.6e}", self.data[i * self.cols + j].to_f64()))
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const P: u32 = 256;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
        Matrix::from_fn(rows, cols, P, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn identity_is_neutral() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random(2, 2, &mut rng);
        assert_eq!(mat_mul(&Matrix::identity(2, P), &m).unwrap(), m);
    }

    #[test]
    fn fibonacci_square() {
        let f = Matrix::from_f64(2, 2, &[1.0, 1.0, 1.0, 0.0], P).unwrap();
        let f2 = mat_mul(&f, &f).unwrap();
        assert_eq!(f2.to_f64_vec(), vec![2.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn agrees_with_naive_f64_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a: Vec<f64> = (0..25).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..25).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut naive = [0.0f64; 25];
        for i in 0..5 {
            for j in 0..5 {
                for k in 0..5 {
                    naive[i * 5 + j] += a[i * 5 + k] * b[k * 5 + j];
                }
            }
        }
        let c = mat_mul(
            &Matrix::from_f64(5, 5, &a, P).unwrap(),
            &Matrix::from_f64(5, 5, &b, P).unwrap(),
        )
        .unwrap();
        for (x, y) in c.to_f64_vec().iter().zip(naive) {
            assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
        }
    }

    #[test]
    fn shape_and_precision_errors() {
        let a = Matrix::zeros(2, 3, P);
        assert!(matches!(mat_mul(&a, &a), Err(Error::Dimension(_))));
        let b = Matrix::zeros(3, 2, 128);
        assert!(matches!(mat_mul(&a, &b), Err(Error::Precision { .. })));
        assert!(a.trace().is_err());
    }

    #[test]
    fn traces() {
        assert_eq!(Matrix::identity(3, P).trace().unwrap().to_f64(), 3.0);
        let d = Matrix::diag(&[BigReal::from_f64(2.5, P), BigReal::from_f64(-1.0, P)], P);
        assert_eq!(d.trace().unwrap().to_f64(), 1.5);
    }

    #[test]
    fn trace_of_product_is_cyclic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random(4, 4, &mut rng);
        let b = random(4, 4, &mut rng);
        let ab = mat_mul(&a, &b).unwrap().trace().unwrap();
        let ba = mat_mul(&b, &a).unwrap().trace().unwrap();
        let tol = BigReal::pow2(30 - P as i32, P);
        assert!((&ab - &ba).abs() <= tol);
        assert!((&a.trace_of_product(&b).unwrap() - &ab).abs() <= tol);
    }

    #[test]
    fn parallel_product_is_bit_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random(40, 40, &mut rng);
        let b = random(40, 40, &mut rng);
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| mat_mul(&a, &b).unwrap());
        let parallel = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| mat_mul(&a, &b).unwrap());
        assert_eq!(serial, parallel);
    }

    #[test]
    fn symmetry_flag() {
        let mut m = Matrix::from_f64(2, 2, &[1.0, 2.0, 2.0, 3.0], P).unwrap();
        assert!(m.is_symmetric());
        m.set_f64(0, 1, 2.0 + 1e-10);
        assert!(!m.is_symmetric());
    }
}
