//! Dense row-major matrices and the handful of kernels the rest of the crate
//! needs: `AᵀB`, `AB`, entrywise and spectral norms, stable rank, Householder
//! QR and Cholesky.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::streams::{self, domain};

/// Rows per partial product in [`matmul_t`]. Partials are summed in chunk
/// order, so results do not depend on the thread count.
const MATMUL_T_CHUNK: usize = 1024;

/// Above this Gram dimension the spectral norm falls back to plain power
/// iteration on `CᵀC` instead of squaring the Gram matrix first.
const GRAM_SQUARING_MAX_DIM: usize = 2048;
const GRAM_SQUARINGS: usize = 6;

pub const DEFAULT_SPECTRAL_TOL: f64 = 1e-9;
pub const DEFAULT_SPECTRAL_MAX_ITER: usize = 5000;

/// Row-major `rows × cols` matrix of finite `f64`s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<RawMatrix> for DenseMatrix {
    type Error = Error;

    fn try_from(raw: RawMatrix) -> Result<Self> {
        DenseMatrix::new(raw.rows, raw.cols, raw.data)
    }
}

impl From<DenseMatrix> for RawMatrix {
    fn from(m: DenseMatrix) -> Self {
        RawMatrix {
            rows: m.rows,
            cols: m.cols,
            data: m.data,
        }
    }
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_shape(rows, cols)?;
        let expected = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::InvalidParameter(format!("{rows}x{cols} overflows")))?;
        if data.len() != expected {
            return Err(Error::DataLength {
                expected,
                actual: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols,
                col: pos % cols,
                value: data[pos],
            });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        check_shape(rows, cols)?;
        Ok(DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut m = Self::zeros(n, n)?;
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        Ok(m)
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    op: "from_rows",
                    left: (1, cols),
                    right: (1, r.len()),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        check_shape(rows, cols)?;
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let n = values.len();
        let mut m = Self::zeros(n, n)?;
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        Self::new(n, n, m.data)
    }

    /// Caller guarantees `data.len() == rows * cols`, both ≥ 1, and that the
    /// entries were computed from finite inputs.
    pub(crate) fn from_parts_unchecked(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert!(rows >= 1 && cols >= 1 && data.len() == rows * cols);
        DenseMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut data = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        DenseMatrix::from_parts_unchecked(self.cols, self.rows, data)
    }

    /// `κ·self`. Fails if the product overflows.
    pub fn scale(&self, factor: f64) -> Result<DenseMatrix> {
        Self::new(self.rows, self.cols, self.data.iter().map(|v| v * factor).collect())
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                op: "sub",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Self::new(self.rows, self.cols, data)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == 0.0)
    }
}

fn check_shape(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyMatrix { rows, cols });
    }
    Ok(())
}

/// `AᵀB` for `A` (n×d) and `B` (n×d′).
pub fn matmul_t(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.rows != b.rows {
        return Err(Error::DimensionMismatch {
            op: "matmul_t",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let (d, dp) = (a.cols, b.cols);
    let accumulate = |range: std::ops::Range<usize>| {
        let mut acc = vec![0.0; d * dp];
        for k in range {
            let ar = a.row(k);
            let br = b.row(k);
            for (j, &aj) in ar.iter().enumerate() {
                if aj == 0.0 {
                    continue;
                }
                let out = &mut acc[j * dp..(j + 1) * dp];
                for (o, &bv) in out.iter_mut().zip(br) {
                    *o += aj * bv;
                }
            }
        }
        acc
    };
    let data = if a.rows <= MATMUL_T_CHUNK {
        accumulate(0..a.rows)
    } else {
        let starts: Vec<usize> = (0..a.rows).step_by(MATMUL_T_CHUNK).collect();
        let partials: Vec<Vec<f64>> = starts
            .par_iter()
            .map(|&s| accumulate(s..(s + MATMUL_T_CHUNK).min(a.rows)))
            .collect();
        let mut iter = partials.into_iter();
        let mut total = iter.next().expect("at least one chunk");
        for p in iter {
            for (t, v) in total.iter_mut().zip(p) {
                *t += v;
            }
        }
        total
    };
    Ok(DenseMatrix::from_parts_unchecked(d, dp, data))
}

/// `AB` for `A` (n×k) and `B` (k×m). Output row `i` is accumulated as
/// `Σ_l A[i,l]·B[l,:]` in increasing `l`.
pub fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch {
            op: "matmul",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let m = b.cols;
    let mut data = vec![0.0; a.rows * m];
    data.par_chunks_mut(m).enumerate().for_each(|(i, out)| {
        for (l, &ail) in a.row(i).iter().enumerate() {
            for (o, &bv) in out.iter_mut().zip(b.row(l)) {
                *o += ail * bv;
            }
        }
    });
    Ok(DenseMatrix::from_parts_unchecked(a.rows, m, data))
}

/// `max_{i,j} |c_ij|`.
pub fn linf_norm(c: &DenseMatrix) -> f64 {
    c.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub fn frobenius_norm(c: &DenseMatrix) -> f64 {
    c.data.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Largest singular value by power iteration.
///
/// Iterates on the smaller Gram matrix `G` (`CᵀC` or `CCᵀ`). When `G` is at
/// most 2048 wide it is first replaced by a normalized `G^64` (six
/// squarings), which has the same top eigenvector and a far larger spectral
/// gap; the returned value is always the Rayleigh quotient of `G` itself.
/// The start vector is the normalized all-ones vector, or a seeded random
/// vector if that one lies in the null space. Convergence is declared when
/// the Rayleigh quotient changes by at most `tol` relative between steps.
pub fn spectral_norm(c: &DenseMatrix, tol: f64, max_iter: usize) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    if c.is_zero() {
        return Ok(0.0);
    }
    let gram = if c.cols <= c.rows {
        matmul_t(c, c)?
    } else {
        let ct = c.transpose();
        matmul_t(&ct, &ct)?
    };
    let dim = gram.rows;
    let accelerated = if dim <= GRAM_SQUARING_MAX_DIM {
        let mut m = gram.clone();
        for _ in 0..GRAM_SQUARINGS {
            m = matmul(&m, &m)?;
            let norm = linf_norm(&m);
            if norm == 0.0 {
                break;
            }
            m.data.iter_mut().for_each(|v| *v /= norm);
        }
        Some(m)
    } else {
        None
    };
    let step = |v: &[f64]| -> Vec<f64> {
        match &accelerated {
            Some(m) => symmetric_apply(m, v),
            None => symmetric_apply(&gram, v),
        }
    };

    let mut v = vec![1.0 / (dim as f64).sqrt(); dim];
    let mut restarted = false;
    let mut lambda_prev = f64::NAN;
    let mut lambda = 0.0;
    for iter in 0..max_iter {
        let mut w = step(&v);
        let norm = l2(&w);
        if norm == 0.0 || !norm.is_finite() {
            if restarted {
                return Ok(0.0);
            }
            restarted = true;
            w = random_unit_vector(dim);
            v = w;
            continue;
        }
        w.iter_mut().for_each(|x| *x /= norm);
        v = w;
        let gv = symmetric_apply(&gram, &v);
        lambda = dot(&v, &gv).max(0.0);
        if iter > 0 && (lambda - lambda_prev).abs() <= tol * lambda {
            return Ok(lambda.sqrt());
        }
        lambda_prev = lambda;
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        last_estimate: lambda.sqrt(),
    })
}

fn symmetric_apply(m: &DenseMatrix, v: &[f64]) -> Vec<f64> {
    (0..m.rows).map(|i| dot(m.row(i), v)).collect()
}

fn random_unit_vector(dim: usize) -> Vec<f64> {
    use rand::Rng;
    let mut rng = streams::stream(0, domain::POWER_START, 0);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
    let n = l2(&v);
    v.iter_mut().for_each(|x| *x /= n);
    v
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn l2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// `‖C‖_F² / ‖C‖₂²` with the default spectral-norm settings.
pub fn stable_rank(c: &DenseMatrix) -> Result<f64> {
    if c.is_zero() {
        return Err(Error::ZeroMatrix("stable rank"));
    }
    let fro = frobenius_norm(c);
    let spec = spectral_norm(c, DEFAULT_SPECTRAL_TOL, DEFAULT_SPECTRAL_MAX_ITER)?;
    Ok((fro * fro) / (spec * spec))
}

/// Reduced Householder QR of an `n×d` matrix with `n ≥ d`.
///
/// `R` has a nonnegative diagonal, which makes the factorization unique for
/// full-rank input.
pub fn reduced_qr(x: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    let (n, d) = x.shape();
    if n < d {
        return Err(Error::InvalidParameter(format!(
            "reduced QR needs rows >= cols, got {n}x{d}"
        )));
    }
    // Column-major working copy; reflectors act on contiguous columns.
    let mut cols: Vec<Vec<f64>> = (0..d).map(|j| x.column(j)).collect();
    let max_col_norm = cols.iter().map(|c| l2(c)).fold(0.0, f64::max);
    let threshold = (n as f64) * f64::EPSILON * max_col_norm;

    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(d);
    let mut diag = vec![0.0; d];
    for k in 0..d {
        let (head, tail) = cols.split_at_mut(k + 1);
        let col = &mut head[k];
        let norm = l2(&col[k..]);
        if norm <= threshold || norm == 0.0 {
            return Err(Error::RankDeficient {
                column: k,
                pivot: norm,
            });
        }
        let alpha = if col[k] >= 0.0 { -norm } else { norm };
        let mut v = col[k..].to_vec();
        v[0] -= alpha;
        let vnorm = l2(&v);
        v.iter_mut().for_each(|e| *e /= vnorm);
        tail.par_iter_mut().for_each(|cj| reflect(&v, &mut cj[k..]));
        col[k] = alpha;
        col[k + 1..].iter_mut().for_each(|e| *e = 0.0);
        diag[k] = alpha;
        reflectors.push(v);
    }

    let mut r = vec![0.0; d * d];
    for (j, col) in cols.iter().enumerate() {
        for i in 0..=j {
            r[i * d + j] = col[i];
        }
    }

    // Q = H_0 H_1 … H_{d-1} [I; 0], accumulated from the last reflector.
    let mut q_cols: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    for k in (0..d).rev() {
        let v = &reflectors[k];
        q_cols[k..].par_iter_mut().for_each(|qj| reflect(v, &mut qj[k..]));
    }

    for k in 0..d {
        if diag[k] < 0.0 {
            for j in k..d {
                r[k * d + j] = -r[k * d + j];
            }
            q_cols[k].iter_mut().for_each(|e| *e = -*e);
        }
    }

    let mut q = vec![0.0; n * d];
    for (j, col) in q_cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            q[i * d + j] = v;
        }
    }
    Ok((
        DenseMatrix::new(n, d, q)?,
        DenseMatrix::new(d, d, r)?,
    ))
}

/// `x ← (I − 2vvᵀ)x` for unit `v`.
fn reflect(v: &[f64], x: &mut [f64]) {
    let s = 2.0 * dot(v, x);
    if s != 0.0 {
        for (xi, vi) in x.iter_mut().zip(v) {
            *xi -= s * vi;
        }
    }
}

/// Lower-triangular `L` with `LLᵀ = C` for symmetric positive definite `C`.
pub fn cholesky(c: &DenseMatrix) -> Result<DenseMatrix> {
    let (n, m) = c.shape();
    if n != m {
        return Err(Error::DimensionMismatch {
            op: "cholesky",
            left: (n, m),
            right: (m, n),
        });
    }
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let s = dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
            if i == j {
                let pivot = c.get(i, i) - s;
                if !(pivot > 0.0) {
                    return Err(Error::NotPositiveDefinite { index: i, pivot });
                }
                l[i * n + i] = pivot.sqrt();
            } else {
                l[i * n + j] = (c.get(i, j) - s) / l[j * n + j];
            }
        }
    }
    DenseMatrix::new(n, n, l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| rng.random::<f64>() * 2.0 - 1.0).unwrap()
    }

    fn naive_matmul_t(a: &DenseMatrix, b: &DenseMatrix) -> Vec<f64> {
        let mut out = vec![0.0; a.cols() * b.cols()];
        for i in 0..a.cols() {
            for j in 0..b.cols() {
                let mut s = 0.0;
                for k in 0..a.rows() {
                    s += a.get(k, i) * b.get(k, j);
                }
                out[i * b.cols() + j] = s;
            }
        }
        out
    }

    /// One-sided Jacobi SVD; returns singular values, largest first.
    fn jacobi_singular_values(m: &DenseMatrix) -> Vec<f64> {
        let m = if m.rows() >= m.cols() { m.clone() } else { m.transpose() };
        let mut cols: Vec<Vec<f64>> = (0..m.cols()).map(|j| m.column(j)).collect();
        for _sweep in 0..100 {
            let mut off = 0.0_f64;
            for p in 0..cols.len() {
                for q in p + 1..cols.len() {
                    let alpha: f64 = cols[p].iter().map(|x| x * x).sum();
                    let beta: f64 = cols[q].iter().map(|x| x * x).sum();
                    let gamma: f64 = cols[p].iter().zip(&cols[q]).map(|(x, y)| x * y).sum();
                    if gamma == 0.0 {
                        continue;
                    }
                    off = off.max(gamma.abs() / (alpha * beta).sqrt());
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let t = if zeta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    for k in 0..cols[p].len() {
                        let (x, y) = (cols[p][k], cols[q][k]);
                        cols[p][k] = c * x - s * y;
                        cols[q][k] = s * x + c * y;
                    }
                }
            }
            if off < 1e-15 {
                break;
            }
        }
        let mut sv: Vec<f64> = cols.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        sv
    }

    #[test]
    fn constructors_reject_bad_input() {
        assert!(matches!(DenseMatrix::new(0, 3, vec![]), Err(Error::EmptyMatrix { .. })));
        assert!(matches!(DenseMatrix::new(2, 2, vec![1.0; 3]), Err(Error::DataLength { .. })));
        assert!(matches!(
            DenseMatrix::new(1, 2, vec![1.0, f64::NAN]),
            Err(Error::NonFinite { row: 0, col: 1, .. })
        ));
        assert!(DenseMatrix::new(1, 1, vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn deserialization_validates() {
        let bad = r#"{"rows":2,"cols":2,"data":[1.0,2.0,3.0]}"#;
        assert!(serde_json::from_str::<DenseMatrix>(bad).is_err());
        let empty = r#"{"rows":0,"cols":2,"data":[]}"#;
        assert!(serde_json::from_str::<DenseMatrix>(empty).is_err());
        let good = r#"{"rows":1,"cols":2,"data":[1.5,-2.0]}"#;
        let m: DenseMatrix = serde_json::from_str(good).unwrap();
        assert_eq!(m.row(0), &[1.5, -2.0]);
    }

    #[test]
    fn matmul_t_small_cases() {
        let a = DenseMatrix::from_rows(&[[1.0], [0.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[[0.0], [1.0]]).unwrap();
        assert_eq!(matmul_t(&a, &b).unwrap().data(), &[0.0]);
        let i2 = DenseMatrix::identity(2).unwrap();
        assert_eq!(matmul_t(&i2, &i2).unwrap(), i2);
        let c = DenseMatrix::zeros(3, 2).unwrap();
        assert!(matches!(matmul_t(&c, &i2), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn matmul_t_matches_triple_loop() {
        let a = random_matrix(3, 2, 1);
        let b = random_matrix(3, 2, 2);
        let got = matmul_t(&a, &b).unwrap();
        for (g, e) in got.data().iter().zip(naive_matmul_t(&a, &b)) {
            assert!((g - e).abs() <= 1e-15);
        }
        // Crosses the chunked path.
        let a = random_matrix(3000, 5, 3);
        let b = random_matrix(3000, 4, 4);
        let got = matmul_t(&a, &b).unwrap();
        for (g, e) in got.data().iter().zip(naive_matmul_t(&a, &b)) {
            assert!((g - e).abs() <= 1e-12 * e.abs().max(1.0));
        }
    }

    #[test]
    fn matmul_agrees_with_transpose_route() {
        let a = random_matrix(7, 4, 5);
        let b = random_matrix(4, 3, 6);
        let direct = matmul(&a, &b).unwrap();
        let via_t = matmul_t(&a.transpose(), &b).unwrap();
        for (x, y) in direct.data().iter().zip(via_t.data()) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn norms_on_fixed_inputs() {
        assert_eq!(linf_norm(&DenseMatrix::zeros(2, 2).unwrap()), 0.0);
        let m = DenseMatrix::from_rows(&[[1.0, -3.0], [2.0, 0.5]]).unwrap();
        assert_eq!(linf_norm(&m), 3.0);
        assert!((frobenius_norm(&DenseMatrix::identity(3).unwrap()) - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(frobenius_norm(&DenseMatrix::from_rows(&[[3.0, 4.0]]).unwrap()), 5.0);

        let big = random_matrix(50, 50, 9);
        let scan = big.data().iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert_eq!(linf_norm(&big), scan);
        let r = random_matrix(10, 7, 10);
        let ss: f64 = r.data().iter().map(|v| v * v).sum();
        assert!((frobenius_norm(&r) - ss.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn spectral_norm_cases() {
        let d = DenseMatrix::diagonal(&[5.0, 1.0]).unwrap();
        assert!((spectral_norm(&d, 1e-9, 5000).unwrap() - 5.0).abs() < 1e-8);

        let u = [1.0, -2.0, 0.5];
        let v = [3.0, 1.0];
        let rank1 = DenseMatrix::from_fn(3, 2, |i, j| u[i] * v[j]).unwrap();
        let expect = l2(&u) * l2(&v);
        assert!((spectral_norm(&rank1, 1e-9, 5000).unwrap() - expect).abs() < 1e-9 * expect);

        // All-ones start vector is orthogonal to the top singular vector here.
        let orth = DenseMatrix::from_rows(&[[1.0, -1.0]]).unwrap();
        assert!((spectral_norm(&orth, 1e-9, 5000).unwrap() - 2f64.sqrt()).abs() < 1e-9);

        for seed in 0..5 {
            let m = random_matrix(8, 5, 100 + seed);
            let oracle = jacobi_singular_values(&m)[0];
            let got = spectral_norm(&m, 1e-9, 5000).unwrap();
            assert!((got - oracle).abs() <= 1e-8 * oracle, "{got} vs {oracle}");
        }
        let wide = random_matrix(4, 9, 77);
        let oracle = jacobi_singular_values(&wide)[0];
        assert!((spectral_norm(&wide, 1e-9, 5000).unwrap() - oracle).abs() <= 1e-8 * oracle);
    }

    #[test]
    fn spectral_norm_reports_non_convergence() {
        let m = random_matrix(6, 6, 3);
        match spectral_norm(&m, 1e-300, 3) {
            Err(Error::NotConverged { iterations, last_estimate }) => {
                assert_eq!(iterations, 3);
                assert!(last_estimate > 0.0);
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
        assert!(spectral_norm(&m, 0.0, 10).is_err());
    }

    #[test]
    fn stable_rank_cases() {
        assert!((stable_rank(&DenseMatrix::identity(4).unwrap()).unwrap() - 4.0).abs() < 1e-9);
        let rank1 = DenseMatrix::from_fn(5, 3, |i, j| (i + 1) as f64 * (j as f64 - 0.5)).unwrap();
        assert!((stable_rank(&rank1).unwrap() - 1.0).abs() < 1e-9);
        assert!(matches!(
            stable_rank(&DenseMatrix::zeros(2, 2).unwrap()),
            Err(Error::ZeroMatrix(_))
        ));
    }

    #[test]
    fn qr_axis_aligned() {
        let x = DenseMatrix::from_rows(&[[2.0, 0.0], [0.0, 3.0], [0.0, 0.0]]).unwrap();
        let (q, r) = reduced_qr(&x).unwrap();
        let q_expect = [1.0, 0.0, 0.0, 1.0, 0.0, 0.0];
        for (a, b) in q.data().iter().zip(q_expect) {
            assert!((a - b).abs() < 1e-15);
        }
        let r_expect = [2.0, 0.0, 0.0, 3.0];
        for (a, b) in r.data().iter().zip(r_expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn qr_of_orthonormal_input_is_identity_r() {
        let (q0, _) = reduced_qr(&random_matrix(12, 4, 8)).unwrap();
        let (q, r) = reduced_qr(&q0).unwrap();
        let eye = DenseMatrix::identity(4).unwrap();
        assert!(linf_norm(&r.sub(&eye).unwrap()) < 1e-12);
        assert!(linf_norm(&q.sub(&q0).unwrap()) < 1e-12);
    }

    #[test]
    fn qr_rejects_rank_deficient_and_wide() {
        let x = DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]]).unwrap();
        assert!(matches!(reduced_qr(&x), Err(Error::RankDeficient { column: 1, .. })));
        assert!(reduced_qr(&random_matrix(2, 3, 1)).is_err());
    }

    #[test]
    fn cholesky_reconstructs() {
        let c = DenseMatrix::from_fn(5, 5, |i, j| 2.0 * 0.5f64.powi((i as i32 - j as i32).abs())).unwrap();
        let l = cholesky(&c).unwrap();
        let llt = matmul(&l, &l.transpose()).unwrap();
        assert!(linf_norm(&llt.sub(&c).unwrap()) < 1e-12);
        for i in 0..5 {
            for j in i + 1..5 {
                assert_eq!(l.get(i, j), 0.0);
            }
        }
        let not_pd = DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(matches!(cholesky(&not_pd), Err(Error::NotPositiveDefinite { .. })));
    }

    proptest! {
        #[test]
        fn linf_is_absolutely_homogeneous(seed in 0u64..1000, kappa in -8.0f64..8.0) {
            let m = random_matrix(4, 3, seed);
            // Powers of two keep the scaling exact in binary floating point.
            let k = kappa.round().exp2() * kappa.signum();
            prop_assert_eq!(linf_norm(&m.scale(k).unwrap()), k.abs() * linf_norm(&m));
        }

        #[test]
        fn norm_inequalities(rows in 1usize..9, cols in 1usize..9, seed in 0u64..1000) {
            let m = random_matrix(rows, cols, seed);
            let fro = frobenius_norm(&m);
            let spec = spectral_norm(&m, 1e-12, 5000).unwrap();
            prop_assert!(linf_norm(&m) <= fro);
            prop_assert!(spec <= fro * (1.0 + 1e-12));
            prop_assert!(fro <= (rows.min(cols) as f64).sqrt() * spec * (1.0 + 1e-9));
        }

        #[test]
        fn qr_reconstructs(n in 5usize..30, d in 1usize..5, seed in 0u64..1000) {
            let x = random_matrix(n, d, seed);
            let (q, r) = reduced_qr(&x).unwrap();
            let qtq = matmul_t(&q, &q).unwrap();
            let eye = DenseMatrix::identity(d).unwrap();
            prop_assert!(linf_norm(&qtq.sub(&eye).unwrap()) <= 1e-10);
            let qr = matmul(&q, &r).unwrap();
            prop_assert!(frobenius_norm(&qr.sub(&x).unwrap()) <= 1e-10 * frobenius_norm(&x));
            for i in 0..d {
                prop_assert!(r.get(i, i) >= 0.0);
                for j in 0..i {
                    prop_assert_eq!(r.get(i, j), 0.0);
                }
            }
        }

        #[test]
        fn matmul_t_relative_agreement(n in 1usize..64, d in 1usize..64, dp in 1usize..8, seed in 0u64..100) {
            let a = random_matrix(n, d, seed);
            let b = random_matrix(n, dp, seed + 1);
            let got = matmul_t(&a, &b).unwrap();
            let scale = frobenius_norm(&a) * frobenius_norm(&b);
            for (g, e) in got.data().iter().zip(naive_matmul_t(&a, &b)) {
                prop_assert!((g - e).abs() <= 1e-12 * scale);
            }
        }
    }
}
