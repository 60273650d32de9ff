//! Sketching operators `S ∈ ℝ^{t×n}` and their application to a pair
//! `(A, B)`.
//!
//! Every operator is applied to both inputs from one realization of `S`, and
//! every random draw is addressed by `(seed, row)` or `(seed, column)`, so the
//! streamed, materialized and parallel paths agree exactly.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{l2, matmul, DenseMatrix};
use crate::streams::{self, domain};

/// Gaussian sketches materialize `S` when it has at most this many entries.
pub const GAUSSIAN_MATERIALIZE_LIMIT: usize = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SketchKind {
    Gaussian,
    #[serde(rename = "uniform")]
    UniformSample,
    #[serde(rename = "length")]
    LengthSample,
    Srht,
}

impl SketchKind {
    pub const ALL: [SketchKind; 4] = [
        SketchKind::Gaussian,
        SketchKind::UniformSample,
        SketchKind::LengthSample,
        SketchKind::Srht,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SketchKind::Gaussian => "gaussian",
            SketchKind::UniformSample => "uniform",
            SketchKind::LengthSample => "length",
            SketchKind::Srht => "srht",
        }
    }
}

impl std::fmt::Display for SketchKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SketchKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(SketchKind::Gaussian),
            "uniform" => Ok(SketchKind::UniformSample),
            "length" => Ok(SketchKind::LengthSample),
            "srht" => Ok(SketchKind::Srht),
            other => Err(Error::InvalidParameter(format!(
                "unknown sketch kind {other:?} (expected gaussian, uniform, length or srht)"
            ))),
        }
    }
}

/// Distribution of `S`: operator family, sketch size and seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct SketchSpec {
    kind: SketchKind,
    t: usize,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    kind: SketchKind,
    t: usize,
    seed: u64,
}

impl TryFrom<RawSpec> for SketchSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        SketchSpec::new(raw.kind, raw.t, raw.seed)
    }
}

impl From<SketchSpec> for RawSpec {
    fn from(s: SketchSpec) -> Self {
        RawSpec {
            kind: s.kind,
            t: s.t,
            seed: s.seed,
        }
    }
}

impl SketchSpec {
    pub fn new(kind: SketchKind, t: usize, seed: u64) -> Result<Self> {
        if t == 0 {
            return Err(Error::InvalidParameter("sketch size t must be at least 1".into()));
        }
        Ok(SketchSpec { kind, t, seed })
    }

    pub fn kind(&self) -> SketchKind {
        self.kind
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// `(SA, SB)` from a single draw of `S`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPair", into = "RawPair")]
pub struct SketchPair {
    a_sketch: DenseMatrix,
    b_sketch: DenseMatrix,
    spec: SketchSpec,
    source_rows: usize,
}

#[derive(Serialize, Deserialize)]
struct RawPair {
    spec: SketchSpec,
    source_rows: usize,
    a_sketch: DenseMatrix,
    b_sketch: DenseMatrix,
}

impl TryFrom<RawPair> for SketchPair {
    type Error = Error;

    fn try_from(raw: RawPair) -> Result<Self> {
        SketchPair::from_parts(raw.a_sketch, raw.b_sketch, raw.spec, raw.source_rows)
    }
}

impl From<SketchPair> for RawPair {
    fn from(p: SketchPair) -> Self {
        RawPair {
            spec: p.spec,
            source_rows: p.source_rows,
            a_sketch: p.a_sketch,
            b_sketch: p.b_sketch,
        }
    }
}

impl SketchPair {
    /// Reassembles a pair that was produced elsewhere (a stored sketch, or a
    /// hand-built one in tests). Both sketches must have `spec.t()` rows.
    pub fn from_parts(
        a_sketch: DenseMatrix,
        b_sketch: DenseMatrix,
        spec: SketchSpec,
        source_rows: usize,
    ) -> Result<Self> {
        if a_sketch.rows() != spec.t() || b_sketch.rows() != spec.t() {
            return Err(Error::DimensionMismatch {
                op: "sketch pair",
                left: a_sketch.shape(),
                right: b_sketch.shape(),
            });
        }
        if source_rows == 0 {
            return Err(Error::InvalidParameter("source_rows must be at least 1".into()));
        }
        Ok(SketchPair {
            a_sketch,
            b_sketch,
            spec,
            source_rows,
        })
    }

    pub fn a_sketch(&self) -> &DenseMatrix {
        &self.a_sketch
    }

    pub fn b_sketch(&self) -> &DenseMatrix {
        &self.b_sketch
    }

    pub fn spec(&self) -> &SketchSpec {
        &self.spec
    }

    pub fn t(&self) -> usize {
        self.spec.t
    }

    pub fn source_rows(&self) -> usize {
        self.source_rows
    }
}

fn check_pair(a: &DenseMatrix, b: &DenseMatrix, op: &'static str) -> Result<usize> {
    if a.rows() != b.rows() {
        return Err(Error::DimensionMismatch {
            op,
            left: a.shape(),
            right: b.shape(),
        });
    }
    Ok(a.rows())
}

fn gaussian_row(seed: u64, row: usize, n: usize, scale: f64, out: &mut [f64]) {
    debug_assert_eq!(out.len(), n);
    let mut rng = streams::stream(seed, domain::GAUSSIAN_ROWS, row as u64);
    for o in out.iter_mut() {
        let g: f64 = rng.sample(StandardNormal);
        *o = g * scale;
    }
}

/// Explicit `S = G/√t` with `G` standard normal, as drawn by
/// [`gaussian_sketch`] for the same seed.
pub fn gaussian_matrix(t: usize, n: usize, seed: u64) -> Result<DenseMatrix> {
    let mut s = DenseMatrix::zeros(t, n)?.into_data();
    let scale = 1.0 / (t as f64).sqrt();
    s.par_chunks_mut(n)
        .enumerate()
        .for_each(|(i, row)| gaussian_row(seed, i, n, scale, row));
    DenseMatrix::new(t, n, s)
}

/// Gaussian projection `S = G/√t`.
///
/// Small operators are materialized and multiplied; large ones are streamed
/// one row of `S` at a time. Both paths use identical arithmetic.
pub fn gaussian_sketch(a: &DenseMatrix, b: &DenseMatrix, t: usize, seed: u64) -> Result<SketchPair> {
    let spec = SketchSpec::new(SketchKind::Gaussian, t, seed)?;
    let n = check_pair(a, b, "gaussian_sketch")?;
    if t.saturating_mul(n) <= GAUSSIAN_MATERIALIZE_LIMIT {
        let s = gaussian_matrix(t, n, seed)?;
        let a_sketch = matmul(&s, a)?;
        let b_sketch = if std::ptr::eq(a, b) { a_sketch.clone() } else { matmul(&s, b)? };
        return SketchPair::from_parts(a_sketch, b_sketch, spec, n);
    }
    gaussian_sketch_streamed(a, b, spec)
}

pub(crate) fn gaussian_sketch_streamed(
    a: &DenseMatrix,
    b: &DenseMatrix,
    spec: SketchSpec,
) -> Result<SketchPair> {
    let n = check_pair(a, b, "gaussian_sketch")?;
    let (t, d, dp) = (spec.t, a.cols(), b.cols());
    let scale = 1.0 / (t as f64).sqrt();
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..t)
        .into_par_iter()
        .map_init(
            || vec![0.0; n],
            |s_row, i| {
                gaussian_row(spec.seed, i, n, scale, s_row);
                let mut ra = vec![0.0; d];
                let mut rb = vec![0.0; dp];
                for (k, &s) in s_row.iter().enumerate() {
                    for (o, &v) in ra.iter_mut().zip(a.row(k)) {
                        *o += s * v;
                    }
                    for (o, &v) in rb.iter_mut().zip(b.row(k)) {
                        *o += s * v;
                    }
                }
                (ra, rb)
            },
        )
        .collect();
    let mut da = Vec::with_capacity(t * d);
    let mut db = Vec::with_capacity(t * dp);
    for (ra, rb) in rows {
        da.extend(ra);
        db.extend(rb);
    }
    SketchPair::from_parts(DenseMatrix::new(t, d, da)?, DenseMatrix::new(t, dp, db)?, spec, n)
}

/// `p_i ∝ ‖e_iᵀA‖₂·‖e_iᵀB‖₂`.
pub fn length_sampling_probs(a: &DenseMatrix, b: &DenseMatrix) -> Result<Vec<f64>> {
    let n = check_pair(a, b, "length_sampling_probs")?;
    let weights: Vec<f64> = (0..n).map(|i| l2(a.row(i)) * l2(b.row(i))).collect();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::UndefinedLengthSampling);
    }
    Ok(weights.into_iter().map(|w| w / total).collect())
}

pub fn uniform_probs(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// Cumulative table for inverse-CDF sampling.
struct RowSampler {
    cumulative: Vec<f64>,
    last_positive: usize,
}

impl RowSampler {
    fn new(probs: &[f64], n: usize) -> Result<Self> {
        if probs.len() != n {
            return Err(Error::InvalidProbabilities(format!(
                "expected {n} probabilities, got {}",
                probs.len()
            )));
        }
        if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidProbabilities(format!("entry {bad} is not a probability")));
        }
        let mut cumulative = Vec::with_capacity(n);
        let mut acc = 0.0;
        for p in probs {
            acc += p;
            cumulative.push(acc);
        }
        if (acc - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidProbabilities(format!("entries sum to {acc}, not 1")));
        }
        let last_positive = probs
            .iter()
            .rposition(|p| *p > 0.0)
            .ok_or_else(|| Error::InvalidProbabilities("all entries are zero".into()))?;
        Ok(RowSampler {
            cumulative,
            last_positive,
        })
    }

    /// Index `l` with `P(l) = p_l`; zero-probability rows are never returned.
    fn draw<R: Rng>(&self, rng: &mut R) -> usize {
        let total = self.cumulative[self.cumulative.len() - 1];
        let u = rng.random::<f64>() * total;
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.last_positive)
    }
}

/// Row indices `l_1, …, l_t` drawn i.i.d. from `probs`, as used by
/// [`row_sample_sketch`] for the same seed.
pub fn sample_row_indices(probs: &[f64], t: usize, seed: u64) -> Result<Vec<usize>> {
    let sampler = RowSampler::new(probs, probs.len())?;
    Ok((0..t)
        .map(|i| sampler.draw(&mut streams::stream(seed, domain::SAMPLE_ROWS, i as u64)))
        .collect())
}

/// Row sampling: sketch row `i` is `A[l_i]/√(t·p_{l_i})` with the same `l_i`
/// used for `B`.
///
/// The recorded kind is [`SketchKind::UniformSample`] when every entry of
/// `probs` is equal, and [`SketchKind::LengthSample`] otherwise.
pub fn row_sample_sketch(
    a: &DenseMatrix,
    b: &DenseMatrix,
    probs: &[f64],
    t: usize,
    seed: u64,
) -> Result<SketchPair> {
    let kind = if probs.windows(2).all(|w| w[0] == w[1]) {
        SketchKind::UniformSample
    } else {
        SketchKind::LengthSample
    };
    row_sample_with_kind(a, b, probs, SketchSpec::new(kind, t, seed)?)
}

fn row_sample_with_kind(
    a: &DenseMatrix,
    b: &DenseMatrix,
    probs: &[f64],
    spec: SketchSpec,
) -> Result<SketchPair> {
    let n = check_pair(a, b, "row_sample_sketch")?;
    let sampler = RowSampler::new(probs, n)?;
    let (t, d, dp) = (spec.t, a.cols(), b.cols());
    let mut da = vec![0.0; t * d];
    let mut db = vec![0.0; t * dp];
    da.par_chunks_mut(d)
        .zip(db.par_chunks_mut(dp))
        .enumerate()
        .for_each(|(i, (ra, rb))| {
            let l = sampler.draw(&mut streams::stream(spec.seed, domain::SAMPLE_ROWS, i as u64));
            let scale = 1.0 / (t as f64 * probs[l]).sqrt();
            for (o, v) in ra.iter_mut().zip(a.row(l)) {
                *o = v * scale;
            }
            for (o, v) in rb.iter_mut().zip(b.row(l)) {
                *o = v * scale;
            }
        });
    SketchPair::from_parts(DenseMatrix::new(t, d, da)?, DenseMatrix::new(t, dp, db)?, spec, n)
}

/// In-place unnormalized Walsh–Hadamard transform `v ← H_n v` in Sylvester
/// order, `n` a power of two.
pub fn fwht_in_place(v: &mut [f64]) -> Result<()> {
    let n = v.len();
    if !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    let mut h = 1;
    while h < n {
        for block in v.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                let (a, b) = (*x, *y);
                *x = a + b;
                *y = a - b;
            }
        }
        h *= 2;
    }
    Ok(())
}

/// The random parts of one SRHT draw: Rademacher signs on the padded
/// coordinates and the sampled rows of `H_{n_pad}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SrhtDraw {
    pub padded_rows: usize,
    pub signs: Vec<f64>,
    pub rows: Vec<usize>,
}

pub fn srht_draw(n: usize, t: usize, seed: u64) -> SrhtDraw {
    let padded_rows = n.next_power_of_two();
    let mut sign_rng = streams::stream(seed, domain::SRHT_SIGNS, 0);
    let signs = (0..padded_rows)
        .map(|_| if sign_rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();
    let rows = (0..t)
        .map(|i| streams::stream(seed, domain::SRHT_ROWS, i as u64).random_range(0..padded_rows))
        .collect();
    SrhtDraw {
        padded_rows,
        signs,
        rows,
    }
}

/// SRHT `S = P·(H/√n_pad)·D`, with the inputs zero-padded to
/// `n_pad = 2^⌈log₂ n⌉` rows and `P` sampling `t` rows uniformly with
/// replacement, each scaled by `√(n_pad/t)`.
pub fn srht_sketch(a: &DenseMatrix, b: &DenseMatrix, t: usize, seed: u64) -> Result<SketchPair> {
    let spec = SketchSpec::new(SketchKind::Srht, t, seed)?;
    let n = check_pair(a, b, "srht_sketch")?;
    let draw = srht_draw(n, t, seed);
    let scale = (1.0 / (draw.padded_rows as f64).sqrt()) * (draw.padded_rows as f64 / t as f64).sqrt();
    let a_sketch = srht_apply(a, &draw, scale)?;
    let b_sketch = if std::ptr::eq(a, b) { a_sketch.clone() } else { srht_apply(b, &draw, scale)? };
    SketchPair::from_parts(a_sketch, b_sketch, spec, n)
}

fn srht_apply(m: &DenseMatrix, draw: &SrhtDraw, scale: f64) -> Result<DenseMatrix> {
    let (n, d) = m.shape();
    let t = draw.rows.len();
    let columns: Vec<Vec<f64>> = (0..d)
        .into_par_iter()
        .map(|j| {
            let mut v = vec![0.0; draw.padded_rows];
            for (k, (slot, sign)) in v.iter_mut().zip(&draw.signs).take(n).enumerate() {
                *slot = sign * m.get(k, j);
            }
            fwht_in_place(&mut v).expect("padded length is a power of two");
            draw.rows.iter().map(|&r| v[r] * scale).collect()
        })
        .collect();
    let mut data = vec![0.0; t * d];
    for (j, col) in columns.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            data[i * d + j] = *v;
        }
    }
    DenseMatrix::new(t, d, data)
}

/// Dispatches on `spec.kind()`. Length sampling computes its probabilities
/// from `(A, B)`.
pub fn apply_spec(a: &DenseMatrix, b: &DenseMatrix, spec: &SketchSpec) -> Result<SketchPair> {
    match spec.kind {
        SketchKind::Gaussian => gaussian_sketch(a, b, spec.t, spec.seed),
        SketchKind::UniformSample => {
            let n = check_pair(a, b, "apply_spec")?;
            row_sample_with_kind(a, b, &uniform_probs(n), *spec)
        }
        SketchKind::LengthSample => {
            let probs = length_sampling_probs(a, b)?;
            row_sample_with_kind(a, b, &probs, *spec)
        }
        SketchKind::Srht => srht_sketch(a, b, spec.t, spec.seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{linf_norm, matmul_t};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| rng.random::<f64>() * 2.0 - 1.0).unwrap()
    }

    /// `H_n` built from the block recursion `[[H, H], [H, −H]]`.
    fn hadamard(n: usize) -> Vec<Vec<f64>> {
        if n == 1 {
            return vec![vec![1.0]];
        }
        let h = hadamard(n / 2);
        let mut out = vec![vec![0.0; n]; n];
        for i in 0..n / 2 {
            for j in 0..n / 2 {
                out[i][j] = h[i][j];
                out[i][j + n / 2] = h[i][j];
                out[i + n / 2][j] = h[i][j];
                out[i + n / 2][j + n / 2] = -h[i][j];
            }
        }
        out
    }

    #[test]
    fn fwht_small_vectors() {
        let mut v = [1.0, 0.0];
        fwht_in_place(&mut v).unwrap();
        assert_eq!(v, [1.0, 1.0]);
        let mut v = [1.0, 1.0];
        fwht_in_place(&mut v).unwrap();
        assert_eq!(v, [2.0, 0.0]);
        let mut one = [3.5];
        fwht_in_place(&mut one).unwrap();
        assert_eq!(one, [3.5]);
        assert!(matches!(fwht_in_place(&mut [1.0; 3]), Err(Error::NotPowerOfTwo(3))));
        assert!(matches!(fwht_in_place(&mut []), Err(Error::NotPowerOfTwo(0))));
    }

    #[test]
    fn fwht_matches_explicit_recursion() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let x: Vec<f64> = (0..16).map(|_| rng.random::<f64>() - 0.5).collect();
        let h = hadamard(16);
        let expect: Vec<f64> = h.iter().map(|row| row.iter().zip(&x).map(|(a, b)| a * b).sum()).collect();
        let mut got = x.clone();
        fwht_in_place(&mut got).unwrap();
        for (g, e) in got.iter().zip(expect) {
            assert!((g - e).abs() < 1e-12);
        }
    }

    #[test]
    fn normalized_hadamard_is_orthogonal() {
        let mut n = 2;
        while n <= 256 {
            let cols: Vec<Vec<f64>> = (0..n)
                .map(|j| {
                    let mut e = vec![0.0; n];
                    e[j] = 1.0;
                    fwht_in_place(&mut e).unwrap();
                    e.iter().map(|v| v / (n as f64).sqrt()).collect()
                })
                .collect();
            for i in 0..n {
                for j in 0..n {
                    let ip: f64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((ip - expect).abs() < 1e-12, "n={n} ({i},{j}) -> {ip}");
                }
            }
            n *= 2;
        }
    }

    #[test]
    fn gaussian_zero_column_and_determinism() {
        let a = DenseMatrix::zeros(10, 1).unwrap();
        let b = random_matrix(10, 2, 1);
        for seed in 0..5 {
            let pair = gaussian_sketch(&a, &b, 4, seed).unwrap();
            assert!(pair.a_sketch().is_zero());
        }
        let p1 = gaussian_sketch(&b, &b, 6, 99).unwrap();
        let p2 = gaussian_sketch(&b, &b, 6, 99).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(p1.a_sketch(), p1.b_sketch());
    }

    #[test]
    fn gaussian_streamed_equals_materialized() {
        let a = random_matrix(37, 3, 4);
        let b = random_matrix(37, 2, 5);
        let spec = SketchSpec::new(SketchKind::Gaussian, 9, 1234).unwrap();
        let streamed = gaussian_sketch_streamed(&a, &b, spec).unwrap();
        let materialized = gaussian_sketch(&a, &b, 9, 1234).unwrap();
        assert_eq!(streamed, materialized);
        let s = gaussian_matrix(9, 37, 1234).unwrap();
        assert_eq!(&matmul(&s, &a).unwrap(), streamed.a_sketch());
    }

    #[test]
    fn length_probs_cases() {
        let one_row = DenseMatrix::from_rows(&[[0.0, 0.0], [1.0, 2.0], [0.0, 0.0]]).unwrap();
        assert_eq!(length_sampling_probs(&one_row, &one_row).unwrap(), vec![0.0, 1.0, 0.0]);

        let equal = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, -1.0], [0.6, 0.8], [0.0, 1.0]]).unwrap();
        let p = length_sampling_probs(&equal, &equal).unwrap();
        for v in &p {
            assert!((v - 0.25).abs() < 1e-15);
        }

        let a = random_matrix(6, 3, 7);
        let b = random_matrix(6, 3, 8);
        let norms: Vec<f64> = (0..6)
            .map(|i| {
                let na: f64 = a.row(i).iter().map(|x| x * x).sum::<f64>().sqrt();
                let nb: f64 = b.row(i).iter().map(|x| x * x).sum::<f64>().sqrt();
                na * nb
            })
            .collect();
        let denom: f64 = norms.iter().sum();
        let p = length_sampling_probs(&a, &b).unwrap();
        for (got, w) in p.iter().zip(&norms) {
            assert!((got - w / denom).abs() < 1e-15);
        }
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        let zero = DenseMatrix::zeros(6, 3).unwrap();
        assert!(matches!(length_sampling_probs(&zero, &b), Err(Error::UndefinedLengthSampling)));
    }

    #[test]
    fn row_sampling_scaling_and_errors() {
        let single = DenseMatrix::from_rows(&[[2.0, -1.0]]).unwrap();
        for t in [1, 3, 8] {
            let pair = row_sample_sketch(&single, &single, &[1.0], t, 5).unwrap();
            let expect_row: Vec<f64> = single.row(0).iter().map(|v| v / (t as f64).sqrt()).collect();
            for i in 0..t {
                assert_eq!(pair.a_sketch().row(i), expect_row.as_slice());
            }
            let prod = matmul_t(pair.a_sketch(), pair.b_sketch()).unwrap();
            let exact = matmul_t(&single, &single).unwrap();
            assert!(linf_norm(&prod.sub(&exact).unwrap()) <= 1e-14);
        }

        let a = random_matrix(5, 2, 2);
        let probs = uniform_probs(5);
        let t = 7;
        let pair = row_sample_sketch(&a, &a, &probs, t, 11).unwrap();
        assert_eq!(pair.spec().kind(), SketchKind::UniformSample);
        let idx = sample_row_indices(&probs, t, 11).unwrap();
        let scale = (5.0 / t as f64).sqrt();
        for (i, &l) in idx.iter().enumerate() {
            for (got, v) in pair.a_sketch().row(i).iter().zip(a.row(l)) {
                assert!((got - v * scale).abs() < 1e-15);
            }
        }

        assert!(matches!(
            row_sample_sketch(&a, &a, &[0.5, 0.6, 0.0, 0.0, 0.0], 3, 1),
            Err(Error::InvalidProbabilities(_))
        ));
        assert!(row_sample_sketch(&a, &a, &[1.0, -0.5, 0.5, 0.0, 0.0], 3, 1).is_err());
        assert!(row_sample_sketch(&a, &a, &[1.0], 3, 1).is_err());
    }

    #[test]
    fn zero_probability_rows_never_drawn() {
        let probs = [0.0, 0.3, 0.0, 0.7, 0.0];
        for seed in 0..50 {
            for l in sample_row_indices(&probs, 40, seed).unwrap() {
                assert!(l == 1 || l == 3);
            }
        }
    }

    #[test]
    fn single_atom_sampling_is_exact() {
        let a = DenseMatrix::from_rows(&[[0.0, 0.0], [0.0, 0.0], [1.5, -2.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[[0.0], [0.0], [4.0]]).unwrap();
        let exact = matmul_t(&a, &b).unwrap();
        for t in 1..10 {
            let pair = row_sample_sketch(&a, &b, &[0.0, 0.0, 1.0], t, t as u64).unwrap();
            let prod = matmul_t(pair.a_sketch(), pair.b_sketch()).unwrap();
            assert!(linf_norm(&prod.sub(&exact).unwrap()) <= 1e-13);
        }
    }

    #[test]
    fn srht_single_row_is_exact() {
        let a = DenseMatrix::from_rows(&[[3.0, -1.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[[2.0]]).unwrap();
        let exact = matmul_t(&a, &b).unwrap();
        for t in [1, 2, 5] {
            let pair = srht_sketch(&a, &b, t, 3).unwrap();
            let first = pair.a_sketch().row(0).to_vec();
            for i in 0..t {
                assert_eq!(pair.a_sketch().row(i), first.as_slice());
            }
            let prod = matmul_t(pair.a_sketch(), pair.b_sketch()).unwrap();
            assert!(linf_norm(&prod.sub(&exact).unwrap()) <= 1e-14);
        }
    }

    #[test]
    fn srht_matches_explicit_operator() {
        let n = 16;
        let t = 4;
        let a = random_matrix(n, 3, 21);
        let draw = srht_draw(n, t, 77);
        let h = hadamard(n);
        let pair = srht_sketch(&a, &a, t, 77).unwrap();
        for (i, &r) in draw.rows.iter().enumerate() {
            for j in 0..3 {
                let explicit: f64 = (0..n)
                    .map(|k| h[r][k] / (n as f64).sqrt() * draw.signs[k] * a.get(k, j))
                    .sum::<f64>()
                    * (n as f64 / t as f64).sqrt();
                assert!((pair.a_sketch().get(i, j) - explicit).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn apply_spec_dispatches() {
        let a = random_matrix(10, 2, 30);
        let b = random_matrix(10, 2, 31);
        let spec = SketchSpec::new(SketchKind::Gaussian, 8, 7).unwrap();
        assert_eq!(apply_spec(&a, &b, &spec).unwrap(), gaussian_sketch(&a, &b, 8, 7).unwrap());

        let zero = DenseMatrix::zeros(10, 2).unwrap();
        let spec = SketchSpec::new(SketchKind::LengthSample, 4, 1).unwrap();
        assert!(matches!(apply_spec(&zero, &b, &spec), Err(Error::UndefinedLengthSampling)));

        let c = random_matrix(12, 2, 32);
        let spec = SketchSpec::new(SketchKind::Srht, 4, 1).unwrap();
        let pair = apply_spec(&c, &c, &spec).unwrap();
        assert_eq!(pair.a_sketch().shape(), (4, 2));
        assert_eq!(pair.source_rows(), 12);
        assert_eq!(srht_draw(12, 4, 1).padded_rows, 16);

        let spec = SketchSpec::new(SketchKind::UniformSample, 3, 2).unwrap();
        let pair = apply_spec(&a, &b, &spec).unwrap();
        assert_eq!(pair.spec(), &spec);

        assert!(SketchSpec::new(SketchKind::Srht, 0, 1).is_err());
        let short = random_matrix(9, 2, 1);
        for kind in SketchKind::ALL {
            let spec = SketchSpec::new(kind, 3, 1).unwrap();
            assert!(matches!(apply_spec(&a, &short, &spec), Err(Error::DimensionMismatch { .. })));
        }
    }

    #[test]
    fn kinds_round_trip_through_names() {
        for kind in SketchKind::ALL {
            assert_eq!(kind.name().parse::<SketchKind>().unwrap(), kind);
            let json = serde_json::to_string(&kind).unwrap();
            assert_eq!(json, format!("\"{}\"", kind.name()));
        }
        assert!("fourier".parse::<SketchKind>().is_err());
    }

    #[test]
    fn shared_operator_coupling() {
        let a = random_matrix(20, 3, 40);
        for kind in SketchKind::ALL {
            let pair = apply_spec(&a, &a, &SketchSpec::new(kind, 6, 5).unwrap()).unwrap();
            assert_eq!(pair.a_sketch(), pair.b_sketch(), "{kind}");
        }
    }
}
