//! Matrix-free linear operators with adjoints.
//!
//! Every operator exposes `apply` (the forward map) and `adjoint` (the
//! transpose map) over flat `f64` vectors; structured operators (images,
//! tensors) carry their own shape metadata and flatten row-major.
//! Operators are immutable after construction, so `apply`/`adjoint` are safe
//! to call concurrently.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::util::{norm, randn, rng_from_seed};

/// Errors raised by operator construction and application.
#[derive(Debug, Error)]
pub enum LinopError {
    #[error("dimension mismatch in {what}: expected length {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("kernel ({kh}x{kw}) larger than image ({rows}x{cols})")]
    KernelTooLarge {
        kh: usize,
        kw: usize,
        rows: usize,
        cols: usize,
    },
    #[error("degenerate image: need at least 2 rows and 2 columns, got {rows}x{cols}")]
    DegenerateImage { rows: usize, cols: usize },
    #[error("sparse entry ({row},{col}) outside {rows}x{cols}")]
    SparseEntryOutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("sampling index {index} outside domain of length {len}")]
    SampleIndexOutOfRange { index: usize, len: usize },
    #[error("composition/stack shape mismatch: {0}")]
    BadComposition(String),
}

/// Counter for forward/adjoint applications of a wrapped operator.
///
/// Used to report matvec counts in solver traces; interior mutability keeps
/// the operator itself immutable.
#[derive(Debug, Default)]
pub struct MatvecCounter {
    forward: AtomicU64,
    adjoint: AtomicU64,
}

impl MatvecCounter {
    pub fn new() -> Arc<Self> {
        Arc::new(Self::default())
    }

    pub fn forward_count(&self) -> u64 {
        self.forward.load(Ordering::Relaxed)
    }

    pub fn adjoint_count(&self) -> u64 {
        self.adjoint.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.forward.store(0, Ordering::Relaxed);
        self.adjoint.store(0, Ordering::Relaxed);
    }
}

/// Sparse matrix in coordinate form.
#[derive(Debug, Clone)]
pub struct SparseTriplets {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

/// Periodic 2-D convolution, diagonalized in the 2-D Fourier basis.
#[derive(Clone)]
pub struct Conv2d {
    rows: usize,
    cols: usize,
    /// 2-D transfer function (FFT of the zero-padded, center-shifted kernel).
    multipliers: Array2<Complex64>,
}

/// A linear map between flat real vectors.
///
/// The compositional variants (`Composition`, `VStack`, `Adjoint`, `Scaled`,
/// `Counted`) let the application builders assemble block operators without
/// materializing matrices.
#[derive(Clone)]
pub enum LinearMap {
    /// Identity on vectors of length `len`.
    Identity { len: usize },
    /// Dense matrix.
    Dense { a: Arc<Array2<f64>> },
    /// Sparse matrix in (row, col, value) coordinate form.
    Sparse(Arc<SparseTriplets>),
    /// Periodic 2-D convolution on `rows x cols` images.
    PeriodicConv2d(Arc<Conv2d>),
    /// Periodic first differences of a `rows x cols` image, vertical
    /// differences stacked on top of horizontal ones (range `2*rows*cols`).
    FiniteDifferenceTv { rows: usize, cols: usize },
    /// Gather of the listed coordinates; the adjoint scatters.
    CoordinateSampling {
        domain_len: usize,
        indices: Arc<Vec<usize>>,
    },
    /// `maps[0] ∘ maps[1] ∘ ...` (rightmost acts first).
    Composition(Arc<Vec<LinearMap>>),
    /// Stacks `parts[i].apply(u)` into one long range vector.
    VerticalStack(Arc<Vec<LinearMap>>),
    /// Swaps apply and adjoint of the inner map.
    Adjoint(Arc<LinearMap>),
    /// `alpha * inner`.
    Scaled { alpha: f64, inner: Arc<LinearMap> },
    /// Pass-through that counts forward/adjoint applications.
    Counted {
        inner: Arc<LinearMap>,
        counter: Arc<MatvecCounter>,
    },
}

impl std::fmt::Debug for LinearMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "LinearMap({} -> {})",
            self.domain_len(),
            self.range_len()
        )
    }
}

fn fft2(data: &mut Array2<Complex64>, inverse: bool) {
    let (r, c) = data.dim();
    let mut planner = FftPlanner::new();
    let row_fft = if inverse {
        planner.plan_fft_inverse(c)
    } else {
        planner.plan_fft_forward(c)
    };
    let col_fft = if inverse {
        planner.plan_fft_inverse(r)
    } else {
        planner.plan_fft_forward(r)
    };
    let mut buf: Vec<Complex64> = Vec::with_capacity(c.max(r));
    for mut row in data.rows_mut() {
        buf.clear();
        buf.extend(row.iter().copied());
        row_fft.process(&mut buf);
        for (dst, src) in row.iter_mut().zip(buf.iter()) {
            *dst = *src;
        }
    }
    for mut col in data.columns_mut() {
        buf.clear();
        buf.extend(col.iter().copied());
        col_fft.process(&mut buf);
        for (dst, src) in col.iter_mut().zip(buf.iter()) {
            *dst = *src;
        }
    }
    if inverse {
        let scale = 1.0 / (r * c) as f64;
        data.mapv_inplace(|v| v * scale);
    }
}

impl Conv2d {
    /// Builds the transfer function of the periodic convolution with
    /// `kernel`, centered at the kernel midpoint.
    pub fn new(kernel: &Array2<f64>, rows: usize, cols: usize) -> Result<Self, LinopError> {
        let (kh, kw) = kernel.dim();
        if kh > rows || kw > cols {
            return Err(LinopError::KernelTooLarge {
                kh,
                kw,
                rows,
                cols,
            });
        }
        let (ch, cw) = ((kh - 1) / 2, (kw - 1) / 2);
        let mut embedded = Array2::<Complex64>::zeros((rows, cols));
        for p in 0..kh {
            for q in 0..kw {
                let i = (p + rows - ch) % rows;
                let j = (q + cols - cw) % cols;
                embedded[[i, j]] += Complex64::new(kernel[[p, q]], 0.0);
            }
        }
        fft2(&mut embedded, false);
        Ok(Self {
            rows,
            cols,
            multipliers: embedded,
        })
    }

    fn convolve(&self, u: &Array1<f64>, conjugate: bool) -> Array1<f64> {
        let mut field = Array2::from_shape_fn((self.rows, self.cols), |(i, j)| {
            Complex64::new(u[i * self.cols + j], 0.0)
        });
        fft2(&mut field, false);
        if conjugate {
            field.zip_mut_with(&self.multipliers, |v, m| *v *= m.conj());
        } else {
            field.zip_mut_with(&self.multipliers, |v, m| *v *= m);
        }
        fft2(&mut field, true);
        Array1::from_iter(field.iter().map(|v| v.re))
    }
}

impl LinearMap {
    pub fn identity(len: usize) -> Self {
        LinearMap::Identity { len }
    }

    pub fn dense(a: Array2<f64>) -> Self {
        LinearMap::Dense { a: Arc::new(a) }
    }

    pub fn sparse(
        rows: usize,
        cols: usize,
        entries: Vec<(usize, usize, f64)>,
    ) -> Result<Self, LinopError> {
        for &(r, c, _) in &entries {
            if r >= rows || c >= cols {
                return Err(LinopError::SparseEntryOutOfRange {
                    row: r,
                    col: c,
                    rows,
                    cols,
                });
            }
        }
        Ok(LinearMap::Sparse(Arc::new(SparseTriplets {
            rows,
            cols,
            entries,
        })))
    }

    /// Periodic 2-D convolution with the given kernel; apply and adjoint run
    /// in O(N log N) via the FFT diagonalization.
    pub fn blur_operator(kernel: &Array2<f64>, rows: usize, cols: usize) -> Result<Self, LinopError> {
        Ok(LinearMap::PeriodicConv2d(Arc::new(Conv2d::new(
            kernel, rows, cols,
        )?)))
    }

    /// Periodic anisotropic first-difference (TV) operator on images.
    pub fn tv(rows: usize, cols: usize) -> Result<Self, LinopError> {
        if rows < 2 || cols < 2 {
            return Err(LinopError::DegenerateImage { rows, cols });
        }
        Ok(LinearMap::FiniteDifferenceTv { rows, cols })
    }

    pub fn sampling(domain_len: usize, indices: Vec<usize>) -> Result<Self, LinopError> {
        for &i in &indices {
            if i >= domain_len {
                return Err(LinopError::SampleIndexOutOfRange {
                    index: i,
                    len: domain_len,
                });
            }
        }
        Ok(LinearMap::CoordinateSampling {
            domain_len,
            indices: Arc::new(indices),
        })
    }

    pub fn composition(maps: Vec<LinearMap>) -> Result<Self, LinopError> {
        for pair in maps.windows(2) {
            if pair[0].domain_len() != pair[1].range_len() {
                return Err(LinopError::BadComposition(format!(
                    "inner map range {} does not feed outer map domain {}",
                    pair[1].range_len(),
                    pair[0].domain_len()
                )));
            }
        }
        if maps.is_empty() {
            return Err(LinopError::BadComposition("empty composition".into()));
        }
        Ok(LinearMap::Composition(Arc::new(maps)))
    }

    pub fn vstack(parts: Vec<LinearMap>) -> Result<Self, LinopError> {
        if parts.is_empty() {
            return Err(LinopError::BadComposition("empty stack".into()));
        }
        let d = parts[0].domain_len();
        if parts.iter().any(|p| p.domain_len() != d) {
            return Err(LinopError::BadComposition(
                "stacked maps must share a domain".into(),
            ));
        }
        Ok(LinearMap::VerticalStack(Arc::new(parts)))
    }

    pub fn adjoint_map(self) -> Self {
        LinearMap::Adjoint(Arc::new(self))
    }

    pub fn scaled(alpha: f64, inner: LinearMap) -> Self {
        LinearMap::Scaled {
            alpha,
            inner: Arc::new(inner),
        }
    }

    pub fn counted(inner: LinearMap, counter: Arc<MatvecCounter>) -> Self {
        LinearMap::Counted {
            inner: Arc::new(inner),
            counter,
        }
    }

    pub fn domain_len(&self) -> usize {
        match self {
            LinearMap::Identity { len } => *len,
            LinearMap::Dense { a } => a.ncols(),
            LinearMap::Sparse(s) => s.cols,
            LinearMap::PeriodicConv2d(c) => c.rows * c.cols,
            LinearMap::FiniteDifferenceTv { rows, cols } => rows * cols,
            LinearMap::CoordinateSampling { domain_len, .. } => *domain_len,
            LinearMap::Composition(maps) => maps.last().unwrap().domain_len(),
            LinearMap::VerticalStack(parts) => parts[0].domain_len(),
            LinearMap::Adjoint(inner) => inner.range_len(),
            LinearMap::Scaled { inner, .. } => inner.domain_len(),
            LinearMap::Counted { inner, .. } => inner.domain_len(),
        }
    }

    pub fn range_len(&self) -> usize {
        match self {
            LinearMap::Identity { len } => *len,
            LinearMap::Dense { a } => a.nrows(),
            LinearMap::Sparse(s) => s.rows,
            LinearMap::PeriodicConv2d(c) => c.rows * c.cols,
            LinearMap::FiniteDifferenceTv { rows, cols } => 2 * rows * cols,
            LinearMap::CoordinateSampling { indices, .. } => indices.len(),
            LinearMap::Composition(maps) => maps.first().unwrap().range_len(),
            LinearMap::VerticalStack(parts) => parts.iter().map(|p| p.range_len()).sum(),
            LinearMap::Adjoint(inner) => inner.domain_len(),
            LinearMap::Scaled { inner, .. } => inner.range_len(),
            LinearMap::Counted { inner, .. } => inner.range_len(),
        }
    }

    /// Forward map `u -> A u`.
    pub fn apply(&self, u: &Array1<f64>) -> Result<Array1<f64>, LinopError> {
        if u.len() != self.domain_len() {
            return Err(LinopError::DimensionMismatch {
                what: "apply",
                expected: self.domain_len(),
                got: u.len(),
            });
        }
        Ok(self.apply_unchecked(u, false))
    }

    /// Adjoint map `v -> A* v`.
    pub fn adjoint(&self, v: &Array1<f64>) -> Result<Array1<f64>, LinopError> {
        if v.len() != self.range_len() {
            return Err(LinopError::DimensionMismatch {
                what: "adjoint",
                expected: self.range_len(),
                got: v.len(),
            });
        }
        Ok(self.apply_unchecked(v, true))
    }

    fn apply_unchecked(&self, u: &Array1<f64>, transpose: bool) -> Array1<f64> {
        match self {
            LinearMap::Identity { .. } => u.clone(),
            LinearMap::Dense { a } => {
                if transpose {
                    a.t().dot(u)
                } else {
                    a.dot(u)
                }
            }
            LinearMap::Sparse(s) => {
                let out_len = if transpose { s.cols } else { s.rows };
                let mut out = Array1::zeros(out_len);
                for &(r, c, v) in &s.entries {
                    if transpose {
                        out[c] += v * u[r];
                    } else {
                        out[r] += v * u[c];
                    }
                }
                out
            }
            LinearMap::PeriodicConv2d(conv) => conv.convolve(u, transpose),
            LinearMap::FiniteDifferenceTv { rows, cols } => {
                let (r, c) = (*rows, *cols);
                let n = r * c;
                if !transpose {
                    let mut out = Array1::zeros(2 * n);
                    for i in 0..r {
                        for j in 0..c {
                            let idx = i * c + j;
                            out[idx] = u[((i + 1) % r) * c + j] - u[idx];
                            out[n + idx] = u[i * c + (j + 1) % c] - u[idx];
                        }
                    }
                    out
                } else {
                    let mut out = Array1::zeros(n);
                    for i in 0..r {
                        for j in 0..c {
                            let idx = i * c + j;
                            let v_prev = u[((i + r - 1) % r) * c + j];
                            let h_prev = u[n + i * c + (j + c - 1) % c];
                            out[idx] = v_prev - u[idx] + h_prev - u[n + idx];
                        }
                    }
                    out
                }
            }
            LinearMap::CoordinateSampling {
                domain_len,
                indices,
            } => {
                if !transpose {
                    Array1::from_iter(indices.iter().map(|&i| u[i]))
                } else {
                    let mut out = Array1::zeros(*domain_len);
                    for (k, &i) in indices.iter().enumerate() {
                        out[i] += u[k];
                    }
                    out
                }
            }
            LinearMap::Composition(maps) => {
                if !transpose {
                    let mut cur = u.clone();
                    for m in maps.iter().rev() {
                        cur = m.apply_unchecked(&cur, false);
                    }
                    cur
                } else {
                    let mut cur = u.clone();
                    for m in maps.iter() {
                        cur = m.apply_unchecked(&cur, true);
                    }
                    cur
                }
            }
            LinearMap::VerticalStack(parts) => {
                if !transpose {
                    let mut out = Array1::zeros(self.range_len());
                    let mut off = 0;
                    for p in parts.iter() {
                        let piece = p.apply_unchecked(u, false);
                        out.slice_mut(ndarray::s![off..off + piece.len()])
                            .assign(&piece);
                        off += piece.len();
                    }
                    out
                } else {
                    let mut out = Array1::zeros(self.domain_len());
                    let mut off = 0;
                    for p in parts.iter() {
                        let len = p.range_len();
                        let piece = u.slice(ndarray::s![off..off + len]).to_owned();
                        out += &p.apply_unchecked(&piece, true);
                        off += len;
                    }
                    out
                }
            }
            LinearMap::Adjoint(inner) => inner.apply_unchecked(u, !transpose),
            LinearMap::Scaled { alpha, inner } => {
                let mut out = inner.apply_unchecked(u, transpose);
                out.mapv_inplace(|v| v * alpha);
                out
            }
            LinearMap::Counted { inner, counter } => {
                if transpose {
                    counter.adjoint.fetch_add(1, Ordering::Relaxed);
                } else {
                    counter.forward.fetch_add(1, Ordering::Relaxed);
                }
                inner.apply_unchecked(u, transpose)
            }
        }
    }

    /// Power-iteration estimate of the operator norm ‖A‖ (largest singular
    /// value), iterating on A*A with a fixed seed: 200 iterations or
    /// relative change below 1e-9, whichever comes first.
    pub fn opnorm_estimate(&self, seed: u64) -> f64 {
        let mut rng = rng_from_seed(seed);
        let mut v = randn(&mut rng, self.domain_len());
        let mut nv = norm(&v);
        if nv == 0.0 {
            return 0.0;
        }
        v.mapv_inplace(|x| x / nv);
        let mut lambda = 0.0_f64;
        for _ in 0..200 {
            let av = self.apply_unchecked(&v, false);
            let mut w = self.apply_unchecked(&av, true);
            let new_lambda = v.dot(&w);
            nv = norm(&w);
            if nv == 0.0 {
                return 0.0;
            }
            w.mapv_inplace(|x| x / nv);
            let rel = (new_lambda - lambda).abs() / new_lambda.abs().max(1e-300);
            v = w;
            lambda = new_lambda;
            if rel < 1e-9 {
                break;
            }
        }
        lambda.max(0.0).sqrt()
    }
}

/// Periodic first differences of an image, vertical block then horizontal
/// block (the TV analysis operator applied to a flattened image).
pub fn tv_forward(image: &Array2<f64>) -> Result<Array1<f64>, LinopError> {
    let (r, c) = image.dim();
    let op = LinearMap::tv(r, c)?;
    let flat = Array1::from_iter(image.iter().copied());
    op.apply(&flat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::{dot, randn, rng_from_seed};
    use ndarray::array;

    fn adjoint_identity(map: &LinearMap, seed: u64) -> f64 {
        let mut rng = rng_from_seed(seed);
        let mut worst = 0.0_f64;
        for _ in 0..100 {
            let u = randn(&mut rng, map.domain_len());
            let v = randn(&mut rng, map.range_len());
            let lhs = dot(&map.apply(&u).unwrap(), &v);
            let rhs = dot(&u, &map.adjoint(&v).unwrap());
            let denom = 1.0 + norm(&u) * norm(&v);
            worst = worst.max((lhs - rhs).abs() / denom);
        }
        worst
    }

    #[test]
    fn identity_apply() {
        let m = LinearMap::identity(3);
        let u = array![1.0, 2.0, 3.0];
        assert_eq!(m.apply(&u).unwrap(), u);
        let v = array![1.0, 2.0];
        let id2 = LinearMap::identity(2);
        assert_eq!(id2.adjoint(&v).unwrap(), v);
    }

    #[test]
    fn sparse_single_entry() {
        let m = LinearMap::sparse(1, 1, vec![(0, 0, 2.0)]).unwrap();
        assert_eq!(m.apply(&array![3.0]).unwrap(), array![6.0]);
    }

    #[test]
    fn sampling_adjoint_scatters() {
        let m = LinearMap::sampling(3, vec![2]).unwrap();
        assert_eq!(m.adjoint(&array![5.0]).unwrap(), array![0.0, 0.0, 5.0]);
    }

    #[test]
    fn dense_adjoint_row() {
        let m = LinearMap::dense(array![[1.0, 2.0], [3.0, 4.0]]);
        assert_eq!(m.adjoint(&array![1.0, 0.0]).unwrap(), array![1.0, 2.0]);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let m = LinearMap::dense(array![[1.0, 2.0], [3.0, 4.0]]);
        assert!(matches!(
            m.apply(&array![1.0, 2.0, 3.0]),
            Err(LinopError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            m.adjoint(&array![1.0, 2.0, 3.0]),
            Err(LinopError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn dirac_convolution_is_identity() {
        let kernel = array![[1.0]];
        let m = LinearMap::blur_operator(&kernel, 6, 5).unwrap();
        let mut rng = rng_from_seed(7);
        let u = randn(&mut rng, 30);
        let v = m.apply(&u).unwrap();
        assert!(norm(&(&v - &u)) < 1e-12 * (1.0 + norm(&u)));
    }

    #[test]
    fn ones_kernel_doubles_constants() {
        let kernel = array![[1.0, 1.0]];
        let m = LinearMap::blur_operator(&kernel, 4, 4).unwrap();
        let u = Array1::from_elem(16, 3.0);
        let v = m.apply(&u).unwrap();
        for x in v.iter() {
            assert!((x - 6.0).abs() < 1e-12);
        }
    }

    #[test]
    fn normalized_gaussian_fixes_constants() {
        let kernel = gaussian_kernel(9, 2.0);
        let m = LinearMap::blur_operator(&kernel, 16, 16).unwrap();
        let u = Array1::from_elem(256, 7.0);
        let v = m.apply(&u).unwrap();
        for x in v.iter() {
            assert!((x - 7.0).abs() < 1e-10);
        }
    }

    #[test]
    fn kernel_larger_than_image_rejected() {
        let kernel = Array2::zeros((5, 5));
        assert!(matches!(
            LinearMap::blur_operator(&kernel, 3, 8),
            Err(LinopError::KernelTooLarge { .. })
        ));
    }

    #[test]
    fn tv_constant_in_kernel() {
        let img = Array2::from_elem((4, 4), 2.5);
        let d = tv_forward(&img).unwrap();
        assert!(norm(&d) == 0.0);
    }

    #[test]
    fn tv_hand_computed_2x2() {
        let img = array![[0.0, 1.0], [0.0, 1.0]];
        let d = tv_forward(&img).unwrap();
        // vertical diffs all zero, horizontal diffs alternate +1/-1
        assert_eq!(d.slice(ndarray::s![0..4]).to_owned(), array![0.0, 0.0, 0.0, 0.0]);
        assert_eq!(d.slice(ndarray::s![4..8]).to_owned(), array![1.0, -1.0, 1.0, -1.0]);
    }

    #[test]
    fn tv_degenerate_rejected() {
        let img = Array2::zeros((1, 5));
        assert!(matches!(
            tv_forward(&img),
            Err(LinopError::DegenerateImage { .. })
        ));
    }

    #[test]
    fn adjoint_identity_all_kinds() {
        let mut rng = rng_from_seed(11);
        let dense = LinearMap::dense(Array2::from_shape_fn((5, 8), |_| {
            rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng)
        }));
        let sparse = LinearMap::sparse(6, 4, vec![(0, 1, 2.0), (5, 3, -1.5), (2, 2, 0.7)]).unwrap();
        let conv = LinearMap::blur_operator(&gaussian_kernel(5, 1.0), 8, 8).unwrap();
        let tv = LinearMap::tv(8, 8).unwrap();
        let samp = LinearMap::sampling(10, vec![0, 3, 7, 9]).unwrap();
        let ident = LinearMap::identity(9);
        let comp = LinearMap::composition(vec![tv.clone(), conv.clone()]).unwrap();
        let stack = LinearMap::vstack(vec![conv.clone(), LinearMap::identity(64)]).unwrap();
        let adj = tv.clone().adjoint_map();
        let scaled = LinearMap::scaled(-2.5, conv.clone());
        for (i, m) in [dense, sparse, conv, tv, samp, ident, comp, stack, adj, scaled]
            .iter()
            .enumerate()
        {
            let worst = adjoint_identity(m, 100 + i as u64);
            assert!(worst <= 1e-10, "kind {i}: adjoint identity off by {worst:.3e}");
        }
    }

    #[test]
    fn composition_matches_sequential_apply() {
        let mut rng = rng_from_seed(3);
        let a = LinearMap::dense(Array2::from_shape_fn((4, 6), |_| {
            rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng)
        }));
        let b = LinearMap::dense(Array2::from_shape_fn((6, 5), |_| {
            rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng)
        }));
        let comp = LinearMap::composition(vec![a.clone(), b.clone()]).unwrap();
        for s in 0..10 {
            let u = randn(&mut rng_from_seed(s), 5);
            let direct = comp.apply(&u).unwrap();
            let seq = a.apply(&b.apply(&u).unwrap()).unwrap();
            assert!(norm(&(&direct - &seq)) <= 1e-12 * (1.0 + norm(&seq)));
        }
    }

    #[test]
    fn opnorm_reproducible_and_correct() {
        let a = array![[3.0, 0.0], [0.0, 1.0]];
        let m = LinearMap::dense(a);
        let n1 = m.opnorm_estimate(42);
        let n2 = m.opnorm_estimate(42);
        assert_eq!(n1, n2);
        assert!((n1 - 3.0).abs() < 1e-6);
    }

    #[test]
    fn counted_wrapper_counts() {
        let counter = MatvecCounter::new();
        let m = LinearMap::counted(LinearMap::identity(4), counter.clone());
        let u = Array1::zeros(4);
        m.apply(&u).unwrap();
        m.apply(&u).unwrap();
        m.adjoint(&u).unwrap();
        assert_eq!(counter.forward_count(), 2);
        assert_eq!(counter.adjoint_count(), 1);
    }
}

/// Normalized 2-D Gaussian kernel (sums to one).
pub fn gaussian_kernel(size: usize, std: f64) -> Array2<f64> {
    let c = (size as isize - 1) / 2;
    let mut k = Array2::from_shape_fn((size, size), |(i, j)| {
        let di = i as isize - c;
        let dj = j as isize - c;
        (-((di * di + dj * dj) as f64) / (2.0 * std * std)).exp()
    });
    let s: f64 = k.sum();
    k.mapv_inplace(|v| v / s);
    k
}
