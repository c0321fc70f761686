//! Proximal operators, Moreau envelopes and generalized Jacobian elements
//! for the nonsmooth functions used by the solver.
//!
//! Every function here has a closed-form proximal map. Conjugate proximal
//! maps are never derived from a conjugate formula; they always go through
//! the Moreau decomposition
//!
//! ```text
//! x = prox_{t h}(x) + t · prox_{h*/t}(x / t),
//! ```
//!
//! and likewise a Jacobian element of `prox_{σ h*}` is realized as
//! `I - J` with `J ∈ ∂prox_{h/σ}` evaluated at the matching point.

use ndarray::Array1;
use thiserror::Error;

use crate::tsvd::{t_svt, tnn, SvtJacobian, Tensor3, TieRule};

#[derive(Debug, Error)]
pub enum ProxError {
    #[error("scale parameter must be positive, got {0}")]
    NonpositiveScale(f64),
    #[error("input length {got} does not match the function's domain length {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("invalid parameters: {0}")]
    BadParameters(String),
}

/// A proper closed convex function with a closed-form proximal operator.
///
/// Spectral kinds carry the tensor dimensions of their domain (matrices are
/// the `n3 = 1` case); everything else is separable over coordinates and
/// works on any length. `Separable` concatenates functions over contiguous
/// segments of one flat vector, which is how product-space blocks such as
/// "support function on the first segment, ball indicator on the second"
/// are expressed.
#[derive(Debug, Clone)]
pub enum ProxFunction {
    /// h ≡ 0.
    Zero,
    /// Indicator of the box `[lo, hi]^n`.
    BoxIndicator { lo: f64, hi: f64 },
    /// `lambda * ‖x‖_1`.
    L1Norm { lambda: f64 },
    /// Indicator of `{ ‖x‖_∞ ≤ radius }`.
    LinfBallIndicator { radius: f64 },
    /// Support function of the box `[lo, hi]^n`.
    BoxSupport { lo: f64, hi: f64 },
    /// `mu * TNN(X)` on `n1 x n2 x n3` tensors (nuclear norm when n3 = 1).
    NuclearNorm {
        mu: f64,
        n1: usize,
        n2: usize,
        n3: usize,
    },
    /// Indicator of `{ ‖X‖_op ≤ mu }` (dual-norm ball of the TNN).
    OpNormBall {
        mu: f64,
        n1: usize,
        n2: usize,
        n3: usize,
    },
    /// Functions applied to consecutive segments of the input.
    Separable(Vec<(ProxFunction, usize)>),
}

/// One element of the Clarke generalized Jacobian of a proximal map,
/// exposed through its action. All variants are symmetric positive
/// semidefinite with spectrum contained in `[0, 1]`, and scalar functions
/// of the operator act on that spectrum (`apply_fn`).
#[derive(Debug, Clone)]
pub enum ProxJacobianElement {
    /// Identity (prox of the zero function).
    Identity { len: usize },
    /// Diagonal with entries in `[0, 1]` (0/1 masks for the kink kinds).
    Diagonal { entries: Array1<f64> },
    /// Spectral Ω-operator of the tensor SVT map; `complement` flips the
    /// eigenvalues to `1 - ω` (the projection side of the Moreau pair).
    Spectral {
        jac: Box<SvtJacobian>,
        complement: bool,
    },
    /// Segment-wise elements matching a `Separable` function.
    Stacked(Vec<(ProxJacobianElement, usize)>),
}

impl ProxJacobianElement {
    pub fn len(&self) -> usize {
        match self {
            ProxJacobianElement::Identity { len } => *len,
            ProxJacobianElement::Diagonal { entries } => entries.len(),
            ProxJacobianElement::Spectral { jac, .. } => {
                let (n1, n2, n3) = jac.dims();
                n1 * n2 * n3
            }
            ProxJacobianElement::Stacked(parts) => parts.iter().map(|(_, l)| l).sum(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Action of the element itself.
    pub fn apply(&self, d: &Array1<f64>) -> Array1<f64> {
        self.apply_fn(d, &|w| w)
    }

    /// Action of `f(J)` where `f` maps the operator's eigenvalues; used for
    /// the exact resolvent and Schur-complement combinations the reduced
    /// Newton system needs.
    pub fn apply_fn(&self, d: &Array1<f64>, f: &dyn Fn(f64) -> f64) -> Array1<f64> {
        assert_eq!(d.len(), self.len(), "jacobian action length mismatch");
        match self {
            ProxJacobianElement::Identity { .. } => d.mapv(|v| v * f(1.0)),
            ProxJacobianElement::Diagonal { entries } => {
                Array1::from_iter(entries.iter().zip(d.iter()).map(|(&m, &v)| f(m) * v))
            }
            ProxJacobianElement::Spectral { jac, complement } => {
                let (n1, n2, n3) = jac.dims();
                let g = Tensor3::from_flat(n1, n2, n3, d);
                let out = if *complement {
                    jac.apply_fn_low_rank(&g, |w| f(1.0 - w))
                } else {
                    jac.apply_fn_low_rank(&g, f)
                }
                .expect("shape checked above");
                out.to_flat()
            }
            ProxJacobianElement::Stacked(parts) => {
                let mut out = Array1::zeros(d.len());
                let mut off = 0;
                for (elem, len) in parts {
                    let seg = d.slice(ndarray::s![off..off + len]).to_owned();
                    out.slice_mut(ndarray::s![off..off + len])
                        .assign(&elem.apply_fn(&seg, f));
                    off += len;
                }
                out
            }
        }
    }
}

fn clip(v: f64, lo: f64, hi: f64) -> f64 {
    v.max(lo).min(hi)
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

impl ProxFunction {
    /// Fixed domain length for the spectral and separable kinds; `None` for
    /// coordinate-wise kinds, which accept any length.
    pub fn domain_len(&self) -> Option<usize> {
        match self {
            ProxFunction::NuclearNorm { n1, n2, n3, .. }
            | ProxFunction::OpNormBall { n1, n2, n3, .. } => Some(n1 * n2 * n3),
            ProxFunction::Separable(parts) => Some(parts.iter().map(|(_, l)| l).sum()),
            _ => None,
        }
    }

    fn check_shape(&self, x: &Array1<f64>) -> Result<(), ProxError> {
        if let Some(n) = self.domain_len() {
            if x.len() != n {
                return Err(ProxError::ShapeMismatch {
                    expected: n,
                    got: x.len(),
                });
            }
        }
        if let ProxFunction::Separable(parts) = self {
            let mut off = 0;
            for (f, len) in parts {
                if let Some(n) = f.domain_len() {
                    if n != *len {
                        return Err(ProxError::BadParameters(format!(
                            "segment length {len} does not match inner domain {n}"
                        )));
                    }
                }
                off += len;
            }
            debug_assert_eq!(off, x.len());
        }
        Ok(())
    }

    /// Function value. Indicator kinds return 0 inside their set (with a
    /// small feasibility slack for points produced by floating-point
    /// projections) and +∞ outside.
    pub fn value(&self, y: &Array1<f64>) -> f64 {
        const FEAS_TOL: f64 = 1e-9;
        match self {
            ProxFunction::Zero => 0.0,
            ProxFunction::BoxIndicator { lo, hi } => {
                let slack = FEAS_TOL * (1.0 + hi.abs().max(lo.abs()));
                if y.iter().all(|&v| v >= lo - slack && v <= hi + slack) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ProxFunction::L1Norm { lambda } => lambda * y.iter().map(|v| v.abs()).sum::<f64>(),
            ProxFunction::LinfBallIndicator { radius } => {
                let slack = FEAS_TOL * (1.0 + radius);
                if y.iter().all(|&v| v.abs() <= radius + slack) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ProxFunction::BoxSupport { lo, hi } => y
                .iter()
                .map(|&v| if v >= 0.0 { hi * v } else { lo * v })
                .sum(),
            ProxFunction::NuclearNorm { mu, n1, n2, n3 } => {
                mu * tnn(&Tensor3::from_flat(*n1, *n2, *n3, y))
            }
            ProxFunction::OpNormBall { mu, n1, n2, n3 } => {
                let f = crate::tsvd::tsvd(&Tensor3::from_flat(*n1, *n2, *n3, y));
                let smax = f
                    .s
                    .iter()
                    .flat_map(|sk| sk.iter())
                    .fold(0.0_f64, |m, &v| m.max(v));
                if smax <= mu + 1e-6 * (1.0 + mu) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ProxFunction::Separable(parts) => {
                let mut off = 0;
                let mut total = 0.0;
                for (f, len) in parts {
                    let seg = y.slice(ndarray::s![off..off + len]).to_owned();
                    total += f.value(&seg);
                    off += len;
                }
                total
            }
        }
    }

    /// `prox_{t h}(x) = argmin_y h(y) + ‖y - x‖² / (2t)`.
    pub fn prox(&self, t: f64, x: &Array1<f64>) -> Result<Array1<f64>, ProxError> {
        if t <= 0.0 {
            return Err(ProxError::NonpositiveScale(t));
        }
        self.check_shape(x)?;
        Ok(self.prox_unchecked(t, x))
    }

    fn prox_unchecked(&self, t: f64, x: &Array1<f64>) -> Array1<f64> {
        match self {
            ProxFunction::Zero => x.clone(),
            ProxFunction::BoxIndicator { lo, hi } => x.mapv(|v| clip(v, *lo, *hi)),
            ProxFunction::L1Norm { lambda } => x.mapv(|v| soft_threshold(v, t * lambda)),
            ProxFunction::LinfBallIndicator { radius } => x.mapv(|v| clip(v, -radius, *radius)),
            ProxFunction::BoxSupport { lo, hi } => {
                x.mapv(|v| v - clip(v, t * lo, t * hi))
            }
            ProxFunction::NuclearNorm { mu, n1, n2, n3 } => {
                t_svt(&Tensor3::from_flat(*n1, *n2, *n3, x), t * mu).to_flat()
            }
            ProxFunction::OpNormBall { mu, n1, n2, n3 } => {
                let xt = Tensor3::from_flat(*n1, *n2, *n3, x);
                // projection = identity minus the SVT split, any t
                let shrunk = t_svt(&xt, *mu);
                x - &shrunk.to_flat()
            }
            ProxFunction::Separable(parts) => {
                let mut out = Array1::zeros(x.len());
                let mut off = 0;
                for (f, len) in parts {
                    let seg = x.slice(ndarray::s![off..off + len]).to_owned();
                    out.slice_mut(ndarray::s![off..off + len])
                        .assign(&f.prox_unchecked(t, &seg));
                    off += len;
                }
                out
            }
        }
    }

    /// Moreau envelope `e_σ h(x) = min_y h(y) + (σ/2) ‖y - x‖²`, evaluated
    /// through the prox at `t = 1/σ`.
    pub fn moreau_envelope(&self, sigma: f64, x: &Array1<f64>) -> Result<f64, ProxError> {
        if sigma <= 0.0 {
            return Err(ProxError::NonpositiveScale(sigma));
        }
        let y = self.prox(1.0 / sigma, x)?;
        let d = x - &y;
        Ok(self.value(&y) + 0.5 * sigma * d.dot(&d))
    }

    /// `prox_{σ h*}(u) = u - σ prox_{h/σ}(u/σ)`, by the Moreau
    /// decomposition; no conjugate formula is ever needed.
    pub fn conjugate_prox(&self, sigma: f64, u: &Array1<f64>) -> Result<Array1<f64>, ProxError> {
        if sigma <= 0.0 {
            return Err(ProxError::NonpositiveScale(sigma));
        }
        let inner = self.prox(1.0 / sigma, &(u / sigma))?;
        Ok(u - &(inner * sigma))
    }

    /// One element of `∂prox_{t h}(x)`. Kink coordinates (active-set
    /// boundaries, singular values at the threshold) are resolved by
    /// `tie`.
    pub fn prox_jacobian(
        &self,
        t: f64,
        x: &Array1<f64>,
        tie: TieRule,
    ) -> Result<ProxJacobianElement, ProxError> {
        if t <= 0.0 {
            return Err(ProxError::NonpositiveScale(t));
        }
        self.check_shape(x)?;
        Ok(self.prox_jacobian_unchecked(t, x, tie))
    }

    fn prox_jacobian_unchecked(&self, t: f64, x: &Array1<f64>, tie: TieRule) -> ProxJacobianElement {
        let kink = |inside: bool, outside: bool| -> f64 {
            if inside {
                1.0
            } else if outside {
                0.0
            } else {
                tie.value()
            }
        };
        match self {
            ProxFunction::Zero => ProxJacobianElement::Identity { len: x.len() },
            ProxFunction::BoxIndicator { lo, hi } => ProxJacobianElement::Diagonal {
                entries: x.mapv(|v| kink(v > *lo && v < *hi, v < *lo || v > *hi)),
            },
            ProxFunction::L1Norm { lambda } => {
                let th = t * lambda;
                ProxJacobianElement::Diagonal {
                    entries: x.mapv(|v| kink(v.abs() > th, v.abs() < th)),
                }
            }
            ProxFunction::LinfBallIndicator { radius } => ProxJacobianElement::Diagonal {
                entries: x.mapv(|v| kink(v.abs() < *radius, v.abs() > *radius)),
            },
            ProxFunction::BoxSupport { lo, hi } => {
                let (a, b) = (t * lo, t * hi);
                // derivative of v - clip(v, a, b): 0 strictly inside, 1 outside
                ProxJacobianElement::Diagonal {
                    entries: x.mapv(|v| kink(v < a || v > b, v > a && v < b)),
                }
            }
            ProxFunction::NuclearNorm { mu, n1, n2, n3 } => ProxJacobianElement::Spectral {
                jac: Box::new(SvtJacobian::new(
                    &Tensor3::from_flat(*n1, *n2, *n3, x),
                    t * mu,
                    tie,
                )),
                complement: false,
            },
            ProxFunction::OpNormBall { mu, n1, n2, n3 } => ProxJacobianElement::Spectral {
                jac: Box::new(SvtJacobian::new(
                    &Tensor3::from_flat(*n1, *n2, *n3, x),
                    *mu,
                    tie,
                )),
                complement: true,
            },
            ProxFunction::Separable(parts) => {
                let mut out = Vec::with_capacity(parts.len());
                let mut off = 0;
                for (f, len) in parts {
                    let seg = x.slice(ndarray::s![off..off + len]).to_owned();
                    out.push((f.prox_jacobian_unchecked(t, &seg, tie), *len));
                    off += len;
                }
                ProxJacobianElement::Stacked(out)
            }
        }
    }

    /// One element of `∂prox_{σ h*}` at `u`, realized as `I - J` with
    /// `J ∈ ∂prox_{h/σ}(u/σ)`.
    pub fn conjugate_prox_jacobian(
        &self,
        sigma: f64,
        u: &Array1<f64>,
        tie: TieRule,
    ) -> Result<ProxJacobianElement, ProxError> {
        if sigma <= 0.0 {
            return Err(ProxError::NonpositiveScale(sigma));
        }
        let inner = self.prox_jacobian(1.0 / sigma, &(u / sigma), tie)?;
        Ok(complement(inner))
    }
}

/// `I - J` in the same eigen-frame as `J`.
fn complement(j: ProxJacobianElement) -> ProxJacobianElement {
    match j {
        ProxJacobianElement::Identity { len } => ProxJacobianElement::Diagonal {
            entries: Array1::zeros(len),
        },
        ProxJacobianElement::Diagonal { entries } => ProxJacobianElement::Diagonal {
            entries: entries.mapv(|m| 1.0 - m),
        },
        ProxJacobianElement::Spectral { jac, complement: c } => ProxJacobianElement::Spectral {
            jac,
            complement: !c,
        },
        ProxJacobianElement::Stacked(parts) => ProxJacobianElement::Stacked(
            parts
                .into_iter()
                .map(|(e, l)| (complement(e), l))
                .collect(),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::{norm, randn, rng_from_seed};
    use ndarray::array;

    fn all_kinds() -> Vec<(&'static str, ProxFunction, usize)> {
        vec![
            ("zero", ProxFunction::Zero, 7),
            (
                "box",
                ProxFunction::BoxIndicator { lo: -1.0, hi: 2.0 },
                7,
            ),
            ("l1", ProxFunction::L1Norm { lambda: 0.8 }, 7),
            (
                "linf-ball",
                ProxFunction::LinfBallIndicator { radius: 1.3 },
                7,
            ),
            (
                "box-support",
                ProxFunction::BoxSupport { lo: -0.5, hi: 2.0 },
                7,
            ),
            (
                "nuclear",
                ProxFunction::NuclearNorm {
                    mu: 0.9,
                    n1: 3,
                    n2: 4,
                    n3: 2,
                },
                24,
            ),
            (
                "opnorm-ball",
                ProxFunction::OpNormBall {
                    mu: 1.1,
                    n1: 3,
                    n2: 4,
                    n3: 2,
                },
                24,
            ),
            (
                "separable",
                ProxFunction::Separable(vec![
                    (ProxFunction::BoxSupport { lo: 0.0, hi: 2.0 }, 4),
                    (ProxFunction::L1Norm { lambda: 0.5 }, 3),
                ]),
                7,
            ),
        ]
    }

    #[test]
    fn prox_closed_forms() {
        let l1 = ProxFunction::L1Norm { lambda: 1.0 };
        assert_eq!(l1.prox(1.0, &array![3.0]).unwrap(), array![2.0]);
        let bx = ProxFunction::BoxIndicator { lo: 0.0, hi: 255.0 };
        assert_eq!(bx.prox(0.3, &array![300.0]).unwrap(), array![255.0]);
        let nuc = ProxFunction::NuclearNorm {
            mu: 2.0,
            n1: 2,
            n2: 2,
            n3: 1,
        };
        let x = array![3.0, 0.0, 0.0, 1.0];
        let y = nuc.prox(1.0, &x).unwrap();
        assert!(norm(&(&y - &array![1.0, 0.0, 0.0, 0.0])) < 1e-12);
    }

    #[test]
    fn envelope_values() {
        let l1 = ProxFunction::L1Norm { lambda: 1.0 };
        assert_eq!(l1.moreau_envelope(1.0, &array![0.0]).unwrap(), 0.0);
        let e = l1.moreau_envelope(1.0, &array![3.0]).unwrap();
        assert!((e - 2.5).abs() < 1e-14);
        let bx = ProxFunction::BoxIndicator { lo: 0.0, hi: 1.0 };
        let e = bx.moreau_envelope(2.0, &array![2.0]).unwrap();
        assert!((e - 1.0).abs() < 1e-14);
    }

    #[test]
    fn conjugate_prox_of_l1_clips() {
        let l1 = ProxFunction::L1Norm { lambda: 1.0 };
        assert_eq!(l1.conjugate_prox(1.0, &array![0.5]).unwrap(), array![0.5]);
        assert_eq!(l1.conjugate_prox(1.0, &array![3.0]).unwrap(), array![1.0]);
    }

    #[test]
    fn moreau_decomposition_all_kinds() {
        let mut rng = rng_from_seed(5);
        for (name, f, n) in all_kinds() {
            for _ in 0..100 {
                let x = randn(&mut rng, n) * 2.0;
                let t = 0.7;
                let p = f.prox(t, &x).unwrap();
                let q = f.conjugate_prox(1.0 / t, &(&x / t)).unwrap();
                let resid = &x - &(&p + &(q * t));
                assert!(
                    norm(&resid) <= 1e-12 * (1.0 + norm(&x)),
                    "{name}: moreau decomposition residual {:.3e}",
                    norm(&resid)
                );
            }
        }
    }

    #[test]
    fn firm_nonexpansiveness_all_kinds() {
        let mut rng = rng_from_seed(6);
        for (name, f, n) in all_kinds() {
            for _ in 0..50 {
                let x = randn(&mut rng, n) * 3.0;
                let y = randn(&mut rng, n) * 3.0;
                let px = f.prox(0.9, &x).unwrap();
                let py = f.prox(0.9, &y).unwrap();
                let d = &px - &py;
                let lhs = d.dot(&d);
                let rhs = d.dot(&(&x - &y));
                assert!(lhs <= rhs + 1e-12, "{name}: firm nonexpansiveness violated");
            }
        }
    }

    #[test]
    fn jacobian_masks() {
        let bx = ProxFunction::BoxIndicator { lo: 0.0, hi: 255.0 };
        let j = bx
            .prox_jacobian(1.0, &array![-1.0, 100.0, 300.0], TieRule::Lower)
            .unwrap();
        match &j {
            ProxJacobianElement::Diagonal { entries } => {
                assert_eq!(entries, &array![0.0, 1.0, 0.0])
            }
            _ => panic!("expected diagonal"),
        }
        let l1 = ProxFunction::L1Norm { lambda: 1.0 };
        let j = l1
            .prox_jacobian(1.0, &array![0.5, 2.0], TieRule::Lower)
            .unwrap();
        match &j {
            ProxJacobianElement::Diagonal { entries } => {
                assert_eq!(entries, &array![0.0, 1.0])
            }
            _ => panic!("expected diagonal"),
        }
    }

    #[test]
    fn tie_rule_selects_element_at_kinks() {
        let l1 = ProxFunction::L1Norm { lambda: 1.0 };
        let at_kink = array![1.0, -1.0, 0.2];
        for (tie, expect) in [(TieRule::Lower, 0.0), (TieRule::Upper, 1.0)] {
            let j = l1.prox_jacobian(1.0, &at_kink, tie).unwrap();
            match j {
                ProxJacobianElement::Diagonal { entries } => {
                    assert_eq!(entries[0], expect);
                    assert_eq!(entries[1], expect);
                    assert_eq!(entries[2], 0.0);
                }
                _ => panic!("expected diagonal"),
            }
        }
    }

    #[test]
    fn nuclear_jacobian_matches_finite_differences() {
        let mut rng = rng_from_seed(7);
        let f = ProxFunction::NuclearNorm {
            mu: 0.6,
            n1: 6,
            n2: 4,
            n3: 1,
        };
        let x = randn(&mut rng, 24) * 1.5;
        let j = f.prox_jacobian(1.0, &x, TieRule::Lower).unwrap();
        let d = randn(&mut rng, 24);
        let jd = j.apply(&d);
        let t = 1e-6;
        let fp = f.prox(1.0, &(&x + &(&d * t))).unwrap();
        let fm = f.prox(1.0, &(&x - &(&d * t))).unwrap();
        let fd = (&fp - &fm) / (2.0 * t);
        let rel = norm(&(&fd - &jd)) / norm(&fd);
        assert!(rel < 1e-6, "nuclear jacobian fd error {rel:.3e}");
    }

    #[test]
    fn jacobians_are_psd_with_unit_box_spectrum() {
        let mut rng = rng_from_seed(8);
        for (name, f, n) in all_kinds() {
            let x = randn(&mut rng, n) * 2.0;
            let j = f.prox_jacobian(0.8, &x, TieRule::Lower).unwrap();
            for _ in 0..30 {
                let d = randn(&mut rng, n);
                let jd = j.apply(&d);
                let quad = d.dot(&jd);
                assert!(quad >= -1e-10, "{name}: ⟨d, Jd⟩ = {quad}");
                // spectrum within [0,1] implies ‖Jd‖ ≤ ‖d‖
                assert!(norm(&jd) <= norm(&d) + 1e-10, "{name}: spectrum above 1");
            }
        }
    }

    #[test]
    fn semismoothness_ratio_vanishes_all_kinds() {
        let mut rng = rng_from_seed(9);
        for (name, f, n) in all_kinds() {
            let x = randn(&mut rng, n) * 2.0;
            let dir = randn(&mut rng, n);
            let mut last = f64::INFINITY;
            for &s in &[1e-2, 1e-4, 1e-6] {
                let step = &dir * s;
                let xp = &x + &step;
                let j = f.prox_jacobian(1.0, &xp, TieRule::Lower).unwrap();
                let lhs = &f.prox(1.0, &xp).unwrap() - &f.prox(1.0, &x).unwrap() - &j.apply(&step);
                last = norm(&lhs) / norm(&step);
            }
            assert!(last <= 1e-6, "{name}: semismoothness ratio {last:.3e}");
        }
    }

    #[test]
    fn envelope_gradient_matches_finite_differences() {
        let mut rng = rng_from_seed(10);
        for (name, f, n) in all_kinds() {
            let sigma = 1.7;
            let x = randn(&mut rng, n) * 2.0;
            // gradient of the envelope: σ (x - prox_{h/σ}(x))
            let p = f.prox(1.0 / sigma, &x).unwrap();
            let grad = (&x - &p) * sigma;
            let d = randn(&mut rng, n);
            let h = 1e-6;
            let ep = f.moreau_envelope(sigma, &(&x + &(&d * h))).unwrap();
            let em = f.moreau_envelope(sigma, &(&x - &(&d * h))).unwrap();
            let fd = (ep - em) / (2.0 * h);
            let rel = (grad.dot(&d) - fd).abs() / (1.0 + fd.abs());
            assert!(rel < 1e-6, "{name}: envelope gradient fd error {rel:.3e}");
        }
    }

    #[test]
    fn conjugate_jacobian_complements_spectrum() {
        let mut rng = rng_from_seed(11);
        let f = ProxFunction::OpNormBall {
            mu: 0.9,
            n1: 4,
            n2: 5,
            n3: 2,
        };
        let u = randn(&mut rng, 40) * 2.0;
        let j = f.conjugate_prox_jacobian(1.3, &u, TieRule::Lower).unwrap();
        // directional consistency of prox_{σh*} against finite differences
        let d = randn(&mut rng, 40);
        let t = 1e-6;
        let pp = f.conjugate_prox(1.3, &(&u + &(&d * t))).unwrap();
        let pm = f.conjugate_prox(1.3, &(&u - &(&d * t))).unwrap();
        let fd = (&pp - &pm) / (2.0 * t);
        let jd = j.apply(&d);
        let rel = norm(&(&fd - &jd)) / (1.0 + norm(&fd));
        assert!(rel < 1e-6, "conjugate jacobian fd error {rel:.3e}");
    }

    #[test]
    fn errors_on_bad_inputs() {
        let l1 = ProxFunction::L1Norm { lambda: 1.0 };
        assert!(matches!(
            l1.prox(0.0, &array![1.0]),
            Err(ProxError::NonpositiveScale(_))
        ));
        let nuc = ProxFunction::NuclearNorm {
            mu: 1.0,
            n1: 2,
            n2: 2,
            n3: 1,
        };
        assert!(matches!(
            nuc.prox(1.0, &array![1.0, 2.0]),
            Err(ProxError::ShapeMismatch { .. })
        ));
    }
}
