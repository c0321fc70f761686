//! Third-order tensor algebra built on the Fourier transform along the
//! third mode: t-product, t-SVD, tensor singular-value thresholding and the
//! generalized Jacobian of the thresholding map.
//!
//! A real `n1 x n2 x n3` tensor transforms into `n3` complex frontal slices
//! (the FFT of every tube). All multiplicative operations act slice-wise in
//! that domain. For real input the slices satisfy the conjugate symmetry
//! `slice[k] = conj(slice[n3-k])`, so slice-wise work is done once per
//! conjugate pair and mirrored.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use ndarray::{Array1, Array3};
use num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

/// Tolerance under which two singular values are treated as equal when
/// assembling divided-difference (Ω) coefficients.
pub const SV_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum TsvdError {
    #[error("t-product shape mismatch: left is {0}x{1}x{2}, right is {3}x{4}x{5}")]
    TprodShape(usize, usize, usize, usize, usize, usize),
    #[error("tensor shape mismatch: expected {0}x{1}x{2}, got {3}x{4}x{5}")]
    ShapeMismatch(usize, usize, usize, usize, usize, usize),
    #[error("tensor file is truncated or malformed: {0}")]
    BadFile(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Element selection at kinks of the scalar soft-threshold derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieRule {
    /// Take the minimal-norm element (derivative 0 at the kink).
    #[default]
    Lower,
    /// Take derivative 1 at the kink.
    Upper,
}

impl TieRule {
    fn value(self) -> f64 {
        match self {
            TieRule::Lower => 0.0,
            TieRule::Upper => 1.0,
        }
    }
}

/// Dense real third-order tensor, tube-contiguous (`data[i1, i2, k]`).
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    pub data: Array3<f64>,
}

impl Tensor3 {
    pub fn zeros(n1: usize, n2: usize, n3: usize) -> Self {
        Self {
            data: Array3::zeros((n1, n2, n3)),
        }
    }

    pub fn from_array(data: Array3<f64>) -> Self {
        Self { data }
    }

    /// Identity tensor for the t-product: identity first frontal slice,
    /// zeros elsewhere.
    pub fn identity(n: usize, n3: usize) -> Self {
        let mut t = Self::zeros(n, n, n3);
        for i in 0..n {
            t.data[[i, i, 0]] = 1.0;
        }
        t
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.data.dim()
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Flattens in the tube-contiguous memory order.
    pub fn to_flat(&self) -> Array1<f64> {
        Array1::from_iter(self.data.iter().copied())
    }

    pub fn from_flat(n1: usize, n2: usize, n3: usize, flat: &Array1<f64>) -> Self {
        let data = Array3::from_shape_vec((n1, n2, n3), flat.to_vec())
            .expect("flat length must equal n1*n2*n3");
        Self { data }
    }

    /// FFT of every tube; returns the frontal slices of the transformed
    /// tensor.
    pub fn to_spectral(&self) -> SpectralSlices {
        let (n1, n2, n3) = self.dims();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n3);
        let mut slices = vec![DMatrix::<Complex64>::zeros(n1, n2); n3];
        let mut tube = vec![Complex64::new(0.0, 0.0); n3];
        for i in 0..n1 {
            for j in 0..n2 {
                for k in 0..n3 {
                    tube[k] = Complex64::new(self.data[[i, j, k]], 0.0);
                }
                fft.process(&mut tube);
                for k in 0..n3 {
                    slices[k][(i, j)] = tube[k];
                }
            }
        }
        SpectralSlices { n1, n2, slices }
    }
}

/// Frontal slices of a tensor in the transform domain (unnormalized FFT,
/// matching the convention where Parseval reads `‖X̄‖_F² = n3 ‖X‖_F²`).
#[derive(Debug, Clone)]
pub struct SpectralSlices {
    pub n1: usize,
    pub n2: usize,
    pub slices: Vec<DMatrix<Complex64>>,
}

impl SpectralSlices {
    pub fn n3(&self) -> usize {
        self.slices.len()
    }

    /// Inverse FFT of every tube, discarding the (numerically zero)
    /// imaginary part.
    pub fn to_real(&self) -> Tensor3 {
        let (n1, n2, n3) = (self.n1, self.n2, self.n3());
        let mut planner = FftPlanner::new();
        let ifft = planner.plan_fft_inverse(n3);
        let mut out = Tensor3::zeros(n1, n2, n3);
        let mut tube = vec![Complex64::new(0.0, 0.0); n3];
        let scale = 1.0 / n3 as f64;
        for i in 0..n1 {
            for j in 0..n2 {
                for k in 0..n3 {
                    tube[k] = self.slices[k][(i, j)];
                }
                ifft.process(&mut tube);
                for k in 0..n3 {
                    out.data[[i, j, k]] = tube[k].re * scale;
                }
            }
        }
        out
    }
}

/// t-product `X * Y`: slice-wise matrix product in the transform domain.
pub fn tprod(x: &Tensor3, y: &Tensor3) -> Result<Tensor3, TsvdError> {
    let (a1, a2, a3) = x.dims();
    let (b1, b2, b3) = y.dims();
    if a2 != b1 || a3 != b3 {
        return Err(TsvdError::TprodShape(a1, a2, a3, b1, b2, b3));
    }
    let xs = x.to_spectral();
    let ys = y.to_spectral();
    let slices = xs
        .slices
        .iter()
        .zip(ys.slices.iter())
        .map(|(a, b)| a * b)
        .collect();
    Ok(SpectralSlices {
        n1: a1,
        n2: b2,
        slices,
    }
    .to_real())
}

/// Block-circulant matrix of the frontal slices; `tprod` equals
/// `fold(bcirc(X) · unfold(Y))`. Used by tests as an independent oracle and
/// exposed for diagnostics.
pub fn bcirc(x: &Tensor3) -> ndarray::Array2<f64> {
    let (n1, n2, n3) = x.dims();
    let mut out = ndarray::Array2::zeros((n1 * n3, n2 * n3));
    for bi in 0..n3 {
        for bj in 0..n3 {
            let k = (bi + n3 - bj) % n3;
            for i in 0..n1 {
                for j in 0..n2 {
                    out[[bi * n1 + i, bj * n2 + j]] = x.data[[i, j, k]];
                }
            }
        }
    }
    out
}

/// Per-slice factors of the t-SVD. `u[k]` is unitary of size `m x m` and
/// `v1[k]` holds the leading `m` right singular vectors (`n x m`), where
/// `m = min(n1, n2)` after the internal orientation flip; the trailing
/// right-singular subspace is only ever used through the projector
/// `I - V1 V1^H`, so it is not materialized.
#[derive(Debug, Clone)]
pub struct TsvdFactors {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    /// True when the factorization was taken of the slice transposes
    /// (input had more rows than columns).
    transposed: bool,
    pub u: Vec<DMatrix<Complex64>>,
    pub v1: Vec<DMatrix<Complex64>>,
    /// Nonincreasing singular values per slice, length `min(n1, n2)`.
    pub s: Vec<Vec<f64>>,
}

fn svd_slice(m: &DMatrix<Complex64>) -> (DMatrix<Complex64>, Vec<f64>, DMatrix<Complex64>) {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd requested u");
    let vt = svd.v_t.expect("svd requested v_t");
    let s: Vec<f64> = svd.singular_values.iter().copied().collect();
    // nalgebra returns thin factors with singular values already sorted
    // in nonincreasing order.
    (u, s, vt.adjoint())
}

/// Slice-wise t-SVD. Conjugate-pair slices share one SVD.
pub fn tsvd(x: &Tensor3) -> TsvdFactors {
    let (n1, n2, n3) = x.dims();
    let transposed = n1 > n2;
    let spec = x.to_spectral();
    let mut u = vec![DMatrix::zeros(0, 0); n3];
    let mut v1 = vec![DMatrix::zeros(0, 0); n3];
    let mut s = vec![Vec::new(); n3];
    for k in 0..=(n3 / 2) {
        let slice = if transposed {
            spec.slices[k].adjoint()
        } else {
            spec.slices[k].clone()
        };
        let (uk, sk, v1k) = svd_slice(&slice);
        if k > 0 && k != n3 - k {
            u[n3 - k] = uk.map(|c| c.conj());
            v1[n3 - k] = v1k.map(|c| c.conj());
            s[n3 - k] = sk.clone();
        }
        u[k] = uk;
        v1[k] = v1k;
        s[k] = sk;
    }
    TsvdFactors {
        n1,
        n2,
        n3,
        transposed,
        u,
        v1,
        s,
    }
}

impl TsvdFactors {
    /// Tubal rank: largest per-slice numerical rank, with singular values
    /// below `tol` (relative to the largest one) treated as zero.
    pub fn tubal_rank(&self, tol: f64) -> usize {
        let smax = self
            .s
            .iter()
            .flat_map(|sk| sk.iter())
            .fold(0.0_f64, |m, &v| m.max(v));
        if smax == 0.0 {
            return 0;
        }
        self.s
            .iter()
            .map(|sk| sk.iter().filter(|&&v| v > tol * smax).count())
            .max()
            .unwrap_or(0)
    }

    /// Tensor nuclear norm recomputed from the factors:
    /// `(1/n3) * Σ_k Σ_i σ_i^{(k)}`.
    pub fn tnn(&self) -> f64 {
        self.s.iter().flat_map(|sk| sk.iter()).sum::<f64>() / self.n3 as f64
    }

    /// Reconstructs the factored tensor.
    pub fn reconstruct(&self) -> Tensor3 {
        self.map_singular_values(|s| s)
    }

    /// Reconstructs with singular values mapped through `f` (slice-wise
    /// `U diag(f(σ)) V1^H`).
    pub fn map_singular_values(&self, f: impl Fn(f64) -> f64) -> Tensor3 {
        let n3 = self.n3;
        let mut slices = Vec::with_capacity(n3);
        for k in 0..n3 {
            let m = self.s[k].len();
            let mut scaled = self.v1[k].clone(); // n x m
            for i in 0..m {
                let fs = f(self.s[k][i]);
                for r in 0..scaled.nrows() {
                    scaled[(r, i)] = scaled[(r, i)] * fs;
                }
            }
            let slice = &self.u[k] * scaled.adjoint();
            slices.push(if self.transposed {
                slice.adjoint()
            } else {
                slice
            });
        }
        SpectralSlices {
            n1: self.n1,
            n2: self.n2,
            slices,
        }
        .to_real()
    }
}

/// Tensor singular-value thresholding: soft-thresholds every singular-value
/// tube at level `mu` in the transform domain and reconstructs. This is the
/// proximal map of `mu * TNN` (the 1/n3 in the TNN definition cancels
/// against the Parseval factor, so the slice-wise threshold is exactly
/// `mu`).
pub fn t_svt(x: &Tensor3, mu: f64) -> Tensor3 {
    tsvd(x).map_singular_values(|s| (s - mu).max(0.0))
}

/// Tensor nuclear norm `(1/n3) ‖X̄‖_*`.
pub fn tnn(x: &Tensor3) -> f64 {
    tsvd(x).tnn()
}

fn soft(s: f64, mu: f64) -> f64 {
    (s - mu).max(0.0)
}

/// Subderivative of the scalar soft threshold at `s ≥ 0`, with `tie`
/// selecting the element at the kink `s == mu`.
fn dsoft(s: f64, mu: f64, tie: TieRule) -> f64 {
    if s > mu {
        1.0
    } else if s < mu {
        0.0
    } else {
        tie.value()
    }
}

/// Divided difference of the soft threshold between `a` and `b` (both ≥ 0),
/// falling back to the subderivative when the gap closes.
fn omega_dd(a: f64, b: f64, mu: f64, tie: TieRule) -> f64 {
    if (a - b).abs() < SV_TIE_TOL {
        dsoft(a, mu, tie)
    } else {
        (soft(a, mu) - soft(b, mu)) / (a - b)
    }
}

/// One element of the generalized Jacobian of the tensor SVT map
/// `X ↦ t_svt(X, mu)`, held in factored (matrix-free) form.
///
/// The action diagonalizes in the coordinates induced by `(U, V)`: the
/// Hermitian and skew-Hermitian parts of `U^H G V1` are scaled entrywise by
/// the divided-difference tables Ω^{σ,σ} and Ω^{σ,-σ}, and the component of
/// `G` orthogonal to the `V1` span is scaled row-wise by Ω^{σ,0}. Because
/// those tables are the eigenvalues of the operator, any scalar function of
/// the Jacobian (resolvents, Schur-complement combinations) is applied by
/// mapping the table entries through the function.
#[derive(Debug, Clone)]
pub struct SvtJacobian {
    pub factors: TsvdFactors,
    pub mu: f64,
    pub tie: TieRule,
}

impl SvtJacobian {
    pub fn new(x: &Tensor3, mu: f64, tie: TieRule) -> Self {
        Self {
            factors: tsvd(x),
            mu,
            tie,
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.factors.n1, self.factors.n2, self.factors.n3)
    }

    /// Applies `f(J)` to `g` where `f` acts on the operator's eigenvalues.
    /// The plain Jacobian action is `apply_fn(g, |w| w)`.
    pub fn apply_fn(&self, g: &Tensor3, f: impl Fn(f64) -> f64) -> Result<Tensor3, TsvdError> {
        self.apply_impl(g, &f, false)
    }

    /// Same as [`Self::apply_fn`] but forms only the Ω blocks touching the
    /// above-threshold singular triplets; exact because the remaining table
    /// entries are zero (handled through the `f(0) I` split).
    pub fn apply_fn_low_rank(
        &self,
        g: &Tensor3,
        f: impl Fn(f64) -> f64,
    ) -> Result<Tensor3, TsvdError> {
        self.apply_impl(g, &f, true)
    }

    fn apply_impl(
        &self,
        g: &Tensor3,
        f: &dyn Fn(f64) -> f64,
        low_rank: bool,
    ) -> Result<Tensor3, TsvdError> {
        let (n1, n2, n3) = self.dims();
        let (g1, g2, g3) = g.dims();
        if (g1, g2, g3) != (n1, n2, n3) {
            return Err(TsvdError::ShapeMismatch(n1, n2, n3, g1, g2, g3));
        }
        let spec = g.to_spectral();
        let fac = &self.factors;
        let mut out_slices = Vec::with_capacity(n3);
        for k in 0..n3 {
            let gk = if fac.transposed {
                spec.slices[k].adjoint()
            } else {
                spec.slices[k].clone()
            };
            let slice = if low_rank {
                self.slice_action_low_rank(k, &gk, f)
            } else {
                self.slice_action_dense(k, &gk, f)
            };
            out_slices.push(if fac.transposed {
                slice.adjoint()
            } else {
                slice
            });
        }
        Ok(SpectralSlices {
            n1,
            n2,
            slices: out_slices,
        }
        .to_real())
    }

    /// Full Ω tables on one slice; `gk` is oriented `m x n`, `m <= n`.
    fn slice_action_dense(
        &self,
        k: usize,
        gk: &DMatrix<Complex64>,
        f: &dyn Fn(f64) -> f64,
    ) -> DMatrix<Complex64> {
        let fac = &self.factors;
        let u = &fac.u[k];
        let v1 = &fac.v1[k];
        let s = &fac.s[k];
        let m = s.len();
        let m1 = u.adjoint() * gk * v1; // m x m
        let h = (&m1 + m1.adjoint()) * Complex64::new(0.5, 0.0);
        let kk = (&m1 - m1.adjoint()) * Complex64::new(0.5, 0.0);
        let mut n1 = DMatrix::<Complex64>::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                let w_sym = omega_dd(s[i], s[j], self.mu, self.tie);
                let w_skew = if s[i] + s[j] < SV_TIE_TOL {
                    dsoft(0.0, self.mu, self.tie)
                } else {
                    (soft(s[i], self.mu) + soft(s[j], self.mu)) / (s[i] + s[j])
                };
                n1[(i, j)] = h[(i, j)] * f(w_sym) + kk[(i, j)] * f(w_skew);
            }
        }
        let mut out = u * n1 * v1.adjoint();
        // Component orthogonal to the V1 span: row-wise Ω^{σ,0} weights.
        let resid = gk - gk * v1 * v1.adjoint();
        let mut weighted = u.adjoint() * resid;
        for i in 0..m {
            let w = omega_dd(s[i], 0.0, self.mu, self.tie);
            let fw = Complex64::new(f(w), 0.0);
            for c in 0..weighted.ncols() {
                weighted[(i, c)] *= fw;
            }
        }
        out += u * weighted;
        out
    }

    /// Number of leading singular triplets on slice `k` whose Ω rows and
    /// columns can be nonzero after subtracting the `f(0) I` term.
    fn active_rank(&self, k: usize) -> usize {
        self.factors.s[k]
            .iter()
            .take_while(|&&s| soft(s, self.mu) > 0.0 || dsoft(s, self.mu, self.tie) > 0.0)
            .count()
    }

    fn slice_action_low_rank(
        &self,
        k: usize,
        gk: &DMatrix<Complex64>,
        f: &dyn Fn(f64) -> f64,
    ) -> DMatrix<Complex64> {
        let fac = &self.factors;
        let u = &fac.u[k];
        let v1 = &fac.v1[k];
        let s = &fac.s[k];
        let m = s.len();
        let r = self.active_rank(k);
        let f0 = f(0.0);
        let g = |w: f64| f(w) - f0;
        let mut out = gk * Complex64::new(f0, 0.0);
        if r == 0 {
            return out;
        }
        let ua = u.columns(0, r);
        let ub = u.columns(r, m - r);
        let va = v1.columns(0, r);
        let vb = v1.columns(r, m - r);
        let t = ua.adjoint() * gk; // r x n
        let w = gk * va; // m x r (per-slice columns)
        let g_aa = &t * &va; // r x r
        let g_ab = &t * &vb; // r x (m-r)
        let g_ba = ub.adjoint() * &w; // (m-r) x r
        // αα block: Hermitian/skew split inside the active corner.
        let h_aa = (&g_aa + g_aa.adjoint()) * Complex64::new(0.5, 0.0);
        let k_aa = (&g_aa - g_aa.adjoint()) * Complex64::new(0.5, 0.0);
        let mut n_aa = DMatrix::<Complex64>::zeros(r, r);
        for i in 0..r {
            for j in 0..r {
                let w_sym = omega_dd(s[i], s[j], self.mu, self.tie);
                let w_skew = (soft(s[i], self.mu) + soft(s[j], self.mu)) / (s[i] + s[j]);
                n_aa[(i, j)] = h_aa[(i, j)] * g(w_sym) + k_aa[(i, j)] * g(w_skew);
            }
        }
        // α-ᾱ cross blocks share their Ω weights by symmetry of the tables.
        let mut n_ab = DMatrix::<Complex64>::zeros(r, m - r);
        let mut n_ba = DMatrix::<Complex64>::zeros(m - r, r);
        for i in 0..r {
            for j in 0..(m - r) {
                let sj = s[r + j];
                let w_sym = omega_dd(s[i], sj, self.mu, self.tie);
                let w_skew = if s[i] + sj < SV_TIE_TOL {
                    dsoft(0.0, self.mu, self.tie)
                } else {
                    (soft(s[i], self.mu) + soft(sj, self.mu)) / (s[i] + sj)
                };
                let hi = (g_ab[(i, j)] + g_ba[(j, i)].conj()) * 0.5;
                let ki = (g_ab[(i, j)] - g_ba[(j, i)].conj()) * 0.5;
                n_ab[(i, j)] = hi * g(w_sym) + ki * g(w_skew);
                n_ba[(j, i)] = hi.conj() * g(w_sym) - ki.conj() * g(w_skew);
            }
        }
        // Residual orthogonal to the V1 span, α rows only.
        let t_resid = &t - (&t * v1) * v1.adjoint(); // r x n
        let mut weighted = t_resid;
        for i in 0..r {
            let w0 = omega_dd(s[i], 0.0, self.mu, self.tie);
            let gw = Complex64::new(g(w0), 0.0);
            for c in 0..weighted.ncols() {
                weighted[(i, c)] *= gw;
            }
        }
        out += &ua * (&n_aa * va.adjoint() + &n_ab * vb.adjoint() + weighted);
        out += &ub * (&n_ba * va.adjoint());
        out
    }
}

/// Writes a tensor as a 24-byte header (`n1 n2 n3` as little-endian u64)
/// followed by the tube-contiguous values as little-endian f64.
pub fn write_tensor<W: Write>(w: &mut W, t: &Tensor3) -> Result<(), TsvdError> {
    let (n1, n2, n3) = t.dims();
    for d in [n1, n2, n3] {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    for v in t.data.iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a tensor in the format produced by [`write_tensor`].
pub fn read_tensor<R: Read>(r: &mut R) -> Result<Tensor3, TsvdError> {
    let mut dims = [0usize; 3];
    let mut buf8 = [0u8; 8];
    for d in dims.iter_mut() {
        r.read_exact(&mut buf8)
            .map_err(|_| TsvdError::BadFile("missing header".into()))?;
        *d = u64::from_le_bytes(buf8) as usize;
    }
    let (n1, n2, n3) = (dims[0], dims[1], dims[2]);
    let total = n1
        .checked_mul(n2)
        .and_then(|v| v.checked_mul(n3))
        .ok_or_else(|| TsvdError::BadFile("dimension overflow".into()))?;
    let mut values = Vec::with_capacity(total);
    for _ in 0..total {
        r.read_exact(&mut buf8)
            .map_err(|_| TsvdError::BadFile("truncated payload".into()))?;
        values.push(f64::from_le_bytes(buf8));
    }
    let data = Array3::from_shape_vec((n1, n2, n3), values)
        .map_err(|e| TsvdError::BadFile(e.to_string()))?;
    Ok(Tensor3 { data })
}
