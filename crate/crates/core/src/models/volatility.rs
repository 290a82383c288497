//! Volatility functionals `σ(t, path up to t)` for SDE-driven martingales.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spdlinalg::{spd_sqrt, spectral_transform, Matrix, SpdMatrix, SpectralKind};

/// Read-only view of a discretely observed path on a uniform grid `k·dt`,
/// restricted to the points observed so far and to a block of coordinates.
#[derive(Clone, Copy)]
pub struct PathView<'a> {
    values: &'a [f64],
    stride: usize,
    offset: usize,
    dim: usize,
    points: usize,
    dt: f64,
}

impl<'a> PathView<'a> {
    /// `values` holds `points` states of `dim` coordinates each.
    pub fn new(values: &'a [f64], dim: usize, dt: f64) -> Self {
        assert!(dim > 0 && values.len().is_multiple_of(dim), "path buffer does not match dimension");
        let points = values.len() / dim;
        assert!(points > 0, "empty path");
        Self { values, stride: dim, offset: 0, dim, points, dt }
    }

    /// `points` states of `dim` coordinates stored at `k * stride + offset`.
    pub fn strided(values: &'a [f64], stride: usize, offset: usize, dim: usize, points: usize, dt: f64) -> Self {
        assert!(points > 0 && offset + dim <= stride && (points - 1) * stride + offset + dim <= values.len());
        Self { values, stride, offset, dim, points, dt }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// Time of the last observed point.
    pub fn now(&self) -> f64 {
        (self.points - 1) as f64 * self.dt
    }

    pub fn state(&self, index: usize) -> &'a [f64] {
        let start = index * self.stride + self.offset;
        &self.values[start..start + self.dim]
    }

    pub fn current(&self) -> &'a [f64] {
        self.state(self.points - 1)
    }

    /// Index of the last grid point at or before time `s` (clamped to the observed range).
    pub fn index_at(&self, s: f64) -> usize {
        if s <= 0.0 {
            return 0;
        }
        let i = (s / self.dt + 1e-9).floor() as usize;
        i.min(self.points - 1)
    }

    pub fn state_at(&self, s: f64) -> &'a [f64] {
        self.state(self.index_at(s))
    }

    /// The same path observed only up to time `s`.
    pub fn until(&self, s: f64) -> PathView<'a> {
        PathView { points: self.index_at(s) + 1, ..*self }
    }

    /// Keeps the first `points` observations.
    pub fn prefix(&self, points: usize) -> PathView<'a> {
        assert!(points >= 1 && points <= self.points);
        PathView { points, ..*self }
    }

    /// Coordinates `offset..offset + dim` of the same path.
    pub fn coords(&self, offset: usize, dim: usize) -> PathView<'a> {
        assert!(offset + dim <= self.dim);
        PathView { offset: self.offset + offset, dim, ..*self }
    }
}

pub type VolatilityFn = dyn Fn(f64, &PathView<'_>) -> Matrix + Send + Sync;

/// Volatility functional. `eval` returns the diffusion matrix `σ` of
/// `dX = σ dB`; the instantaneous covariance is `σσᵀ`.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Volatility {
    Constant { sigma: Matrix },
    /// `diag(base + amplitude · sin(xᵢ))`.
    SinState { base: f64, amplitude: f64 },
    /// `diag(x) Γ`, the Black-Scholes volatility.
    LevelScaled { gamma: Matrix },
    /// `(σσᵀ)^{1/2} + εI`.
    Inflate { eps: f64, inner: Box<Volatility> },
    /// Square root of `σσᵀ` with eigenvalues capped at `c`.
    Cap { c: f64, inner: Box<Volatility> },
    /// `n ∫_{(t−1/n)∨0}^t (σσᵀ)_s^{1/2} ds`, by midpoint quadrature.
    Mollify { n: u32, inner: Box<Volatility> },
    /// `inner` evaluated at `(t − 1/n) ∨ 0` on the path up to that time.
    Lag { n: u32, inner: Box<Volatility> },
    /// `inner` evaluated at `(⌊nt⌋/n − 1/n) ∨ 0`: constant on each window `[j/n, (j+1)/n)`.
    Frozen { n: u32, inner: Box<Volatility> },
    /// `inner` evaluated at `t − 1/n`, and the identity before `1/n`.
    Shift { n: u32, inner: Box<Volatility> },
    /// Caller-supplied functional. Must be pure; cannot be serialized.
    #[serde(skip)]
    Custom(Arc<VolatilityFn>),
}

impl std::fmt::Debug for Volatility {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Volatility::Custom(_) => f.write_str("Custom(..)"),
            other => f.write_str(&serde_json::to_string(other).unwrap_or_default()),
        }
    }
}

impl PartialEq for Volatility {
    fn eq(&self, other: &Self) -> bool {
        use Volatility::*;
        match (self, other) {
            (Constant { sigma: a }, Constant { sigma: b }) => a == b,
            (SinState { base: a, amplitude: b }, SinState { base: c, amplitude: d }) => a == c && b == d,
            (LevelScaled { gamma: a }, LevelScaled { gamma: b }) => a == b,
            (Inflate { eps: a, inner: x }, Inflate { eps: b, inner: y }) => a == b && x == y,
            (Cap { c: a, inner: x }, Cap { c: b, inner: y }) => a == b && x == y,
            (Mollify { n: a, inner: x }, Mollify { n: b, inner: y })
            | (Lag { n: a, inner: x }, Lag { n: b, inner: y })
            | (Frozen { n: a, inner: x }, Frozen { n: b, inner: y })
            | (Shift { n: a, inner: x }, Shift { n: b, inner: y }) => a == b && x == y,
            (Custom(a), Custom(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

const MOLLIFY_NODES: usize = 8;

impl Volatility {
    pub fn custom(f: impl Fn(f64, &PathView<'_>) -> Matrix + Send + Sync + 'static) -> Self {
        Volatility::Custom(Arc::new(f))
    }

    pub fn sin_state(base: f64, amplitude: f64) -> Self {
        Volatility::SinState { base, amplitude }
    }

    /// `σ(t, path)`; `path` must end at time `t`.
    pub fn eval(&self, t: f64, path: &PathView<'_>) -> Result<Matrix> {
        let l = path.dim();
        let m = match self {
            Volatility::Constant { sigma } => sigma.clone(),
            Volatility::SinState { base, amplitude } => {
                let d: Vec<f64> = path.current().iter().map(|x| base + amplitude * x.sin()).collect();
                Matrix::from_diag(&d)
            }
            Volatility::LevelScaled { gamma } => {
                let x = path.current();
                let mut m = gamma.clone();
                for i in 0..l {
                    for j in 0..l {
                        m[(i, j)] *= x[i];
                    }
                }
                m
            }
            Volatility::Inflate { eps, inner } => {
                let cov = SpdMatrix::gram(&inner.eval(t, path)?)?;
                spd_sqrt(&cov).into_matrix().add(&Matrix::scalar(l, *eps))
            }
            Volatility::Cap { c, inner } => {
                let cov = SpdMatrix::gram(&inner.eval(t, path)?)?;
                spd_sqrt(&spectral_transform(&cov, SpectralKind::Cap { c: *c })?).into_matrix()
            }
            Volatility::Mollify { n, inner } => {
                let width = 1.0 / *n as f64;
                let mut acc = Matrix::zeros(l);
                for q in 0..MOLLIFY_NODES {
                    let s = t - (q as f64 + 0.5) * width / MOLLIFY_NODES as f64;
                    if s < 0.0 {
                        continue;
                    }
                    let sigma = inner.eval(s, &path.until(s))?;
                    acc = acc.add(spd_sqrt(&SpdMatrix::gram(&sigma)?).matrix());
                }
                acc.scale(1.0 / MOLLIFY_NODES as f64)
            }
            Volatility::Lag { n, inner } => {
                let s = (t - 1.0 / *n as f64).max(0.0);
                inner.eval(s, &path.until(s))?
            }
            Volatility::Frozen { n, inner } => {
                let nf = *n as f64;
                let s = (((nf * t) + 1e-9).floor() / nf - 1.0 / nf).max(0.0);
                inner.eval(s, &path.until(s))?
            }
            Volatility::Shift { n, inner } => {
                let s = t - 1.0 / *n as f64;
                if s < -1e-12 {
                    Matrix::identity(l)
                } else {
                    let s = s.max(0.0);
                    inner.eval(s, &path.until(s))?
                }
            }
            Volatility::Custom(f) => f(t, path),
        };
        if m.dim() != l {
            return Err(Error::DimensionMismatch { expected: l, got: m.dim() });
        }
        if !m.is_finite() {
            return Err(Error::NonFinite("volatility"));
        }
        Ok(m)
    }

    /// `σσᵀ` at `(t, path)`.
    pub fn covariance(&self, t: f64, path: &PathView<'_>) -> Result<SpdMatrix> {
        SpdMatrix::gram(&self.eval(t, path)?)
    }

    /// Guaranteed lookback: the value at `t` depends only on the path up to
    /// `t − delay_horizon()`.
    pub fn delay_horizon(&self) -> f64 {
        match self {
            Volatility::Constant { .. } => f64::INFINITY,
            Volatility::SinState { .. } | Volatility::LevelScaled { .. } | Volatility::Custom(_) => 0.0,
            Volatility::Inflate { inner, .. }
            | Volatility::Cap { inner, .. }
            | Volatility::Mollify { inner, .. } => inner.delay_horizon(),
            Volatility::Lag { n, inner }
            | Volatility::Frozen { n, inner }
            | Volatility::Shift { n, inner } => 1.0 / *n as f64 + inner.delay_horizon(),
        }
    }

    /// `Some(N)` when the value is constant on every window `[j/N, (j+1)/N)`
    /// and fixed by the path up to the window's start.
    pub fn frozen_period(&self) -> Option<u32> {
        match self {
            Volatility::Constant { .. } => Some(1),
            Volatility::Frozen { n, .. } => Some(*n),
            Volatility::Inflate { inner, .. } | Volatility::Cap { inner, .. } => inner.frozen_period(),
            _ => None,
        }
    }

    /// Checks parameter dimensions against the state dimension.
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Volatility::Constant { sigma: m } | Volatility::LevelScaled { gamma: m } => {
                if m.dim() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: m.dim() });
                }
                Ok(())
            }
            Volatility::SinState { base, amplitude } => {
                if !base.is_finite() || !amplitude.is_finite() {
                    return Err(Error::NonFinite("sin_state parameters"));
                }
                Ok(())
            }
            Volatility::Inflate { eps: v, inner } | Volatility::Cap { c: v, inner } => {
                crate::spdlinalg::positive("eps/c", *v)?;
                inner.validate(dim)
            }
            Volatility::Mollify { n, inner }
            | Volatility::Lag { n, inner }
            | Volatility::Frozen { n, inner }
            | Volatility::Shift { n, inner } => {
                if *n == 0 {
                    return Err(Error::InvalidModel("window count n must be at least 1".into()));
                }
                inner.validate(dim)
            }
            Volatility::Custom(_) => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_1d(values: &[f64], dt: f64) -> Vec<f64> {
        let _ = dt;
        values.to_vec()
    }

    #[test]
    fn view_indexing() {
        let v = path_1d(&[0.0, 1.0, 2.0, 3.0, 4.0], 0.25);
        let p = PathView::new(&v, 1, 0.25);
        assert_eq!(p.now(), 1.0);
        assert_eq!(p.state_at(0.5), &[2.0]);
        assert_eq!(p.state_at(0.49), &[1.0]);
        assert_eq!(p.until(0.5).current(), &[2.0]);
        assert_eq!(p.until(-1.0).current(), &[0.0]);
    }

    #[test]
    fn frozen_is_constant_on_windows() {
        let vol = Volatility::Frozen { n: 4, inner: Box::new(Volatility::sin_state(1.0, 0.5)) };
        let v: Vec<f64> = (0..=16).map(|i| (i as f64 * 0.3).cos()).collect();
        let p = PathView::new(&v, 1, 1.0 / 16.0);
        // window [1/2, 3/4) reads the state at 1/4
        let expect = 1.0 + 0.5 * p.state_at(0.25)[0].sin();
        for k in 8..12 {
            let t = k as f64 / 16.0;
            let s = vol.eval(t, &p.prefix(k + 1)).unwrap();
            assert!((s[(0, 0)] - expect).abs() < 1e-15);
        }
        // first two windows read X_0
        let s = vol.eval(0.3, &p.until(0.3)).unwrap();
        assert!((s[(0, 0)] - (1.0 + 0.5 * v[0].sin())).abs() < 1e-15);
        assert_eq!(vol.frozen_period(), Some(4));
        assert!((vol.delay_horizon() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn shift_is_identity_before_delay() {
        let vol = Volatility::Shift { n: 4, inner: Box::new(Volatility::sin_state(2.0, 0.0)) };
        let v = vec![0.0; 9];
        let p = PathView::new(&v, 1, 0.125);
        assert_eq!(vol.eval(0.125, &p.until(0.125)).unwrap()[(0, 0)], 1.0);
        assert_eq!(vol.eval(0.5, &p.until(0.5)).unwrap()[(0, 0)], 2.0);
    }

    #[test]
    fn inflate_and_cap() {
        let base = Volatility::Constant { sigma: Matrix::from_diag(&[1.0, 3.0]) };
        let v = vec![0.0, 0.0];
        let p = PathView::new(&v, 2, 0.1);
        let inf = Volatility::Inflate { eps: 0.5, inner: Box::new(base.clone()) };
        let m = inf.eval(0.0, &p).unwrap();
        assert!((m[(0, 0)] - 1.5).abs() < 1e-14 && (m[(1, 1)] - 3.5).abs() < 1e-14);
        let cap = Volatility::Cap { c: 4.0, inner: Box::new(base) };
        let m = cap.eval(0.0, &p).unwrap();
        assert!((m[(0, 0)] - 1.0).abs() < 1e-14 && (m[(1, 1)] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn serde_round_trip_and_custom_rejected() {
        let vol = Volatility::Lag {
            n: 3,
            inner: Box::new(Volatility::Inflate { eps: 0.1, inner: Box::new(Volatility::sin_state(1.0, 0.5)) }),
        };
        let s = serde_json::to_string(&vol).unwrap();
        let back: Volatility = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vol);
        assert_eq!(serde_json::to_string(&back).unwrap(), s);
        let c = Volatility::custom(|_, p| Matrix::identity(p.dim()));
        assert!(serde_json::to_string(&c).is_err());
    }
}
