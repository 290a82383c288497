//! Path simulation on the grid `{k/n}` and realized quadratic variation.

use serde::{Deserialize, Serialize};

use super::{Family, ModelSpec, PathView, Volatility};
use crate::error::{Error, Result};
use crate::exec::{map_chunks, Execution};
use crate::gaussian_divergence::row_square_sums;
use crate::rng::PathRng;
use crate::spdlinalg::{spd_sqrt, Matrix, SpdMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scheme {
    /// Exact sampling from the one-step laws.
    Exact,
    /// Euler-Maruyama with `substeps` internal steps per observation interval.
    Euler { substeps: u32 },
}

#[derive(Debug, Clone)]
enum StepKind {
    /// `x + F z`
    Additive,
    /// `x ⊙ exp(μ + F z)`
    Multiplicative,
}

#[derive(Debug, Clone)]
struct StaticStep {
    kind: StepKind,
    drift: Vec<f64>,
    factor: Matrix,
}

enum Plan<'a> {
    /// Prefix-independent steps; a single entry is reused for every step.
    Static(Vec<StaticStep>),
    /// Volatility frozen on each observation interval, read off the coarse prefix.
    Frozen(&'a Volatility),
    Euler { sigma: &'a Volatility, substeps: usize },
    Product(Vec<PathSampler<'a>>),
}

/// Draws whole paths of one model at a fixed level.
pub struct PathSampler<'a> {
    model: &'a ModelSpec,
    n: usize,
    plan: Plan<'a>,
}

/// Write target for one path: point `k`, coordinate `i` lives at
/// `k * stride + offset + i`.
struct Target<'b> {
    buf: &'b mut [f64],
    stride: usize,
    offset: usize,
}

impl<'a> PathSampler<'a> {
    pub fn level(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn model(&self) -> &'a ModelSpec {
        self.model
    }

    /// One path as `(n + 1) × dim` values, row-major by time.
    pub fn sample(&self, rng: &mut PathRng) -> Result<Vec<f64>> {
        let mut out = vec![0.0; (self.n + 1) * self.dim()];
        self.sample_into(rng, &mut out)?;
        Ok(out)
    }

    pub fn sample_into(&self, rng: &mut PathRng, out: &mut [f64]) -> Result<()> {
        let stride = self.dim();
        assert_eq!(out.len(), (self.n + 1) * stride, "path buffer size");
        self.fill(rng, Target { buf: out, stride, offset: 0 })
    }

    fn fill(&self, rng: &mut PathRng, t: Target<'_>) -> Result<()> {
        let l = self.dim();
        let n = self.n;
        let Target { buf, stride, offset } = t;
        buf[offset..offset + l].copy_from_slice(self.model.x0());
        let mut z = vec![0.0; l];
        let mut w = vec![0.0; l];
        match &self.plan {
            Plan::Static(steps) => {
                for k in 1..=n {
                    let step = if steps.len() == 1 { &steps[0] } else { &steps[k - 1] };
                    rng.fill_normal(&mut z);
                    step.factor.matvec_into(&z, &mut w);
                    let (prev, next) = buf.split_at_mut(k * stride);
                    let prev = &prev[(k - 1) * stride + offset..][..l];
                    let next = &mut next[offset..offset + l];
                    for i in 0..l {
                        next[i] = match step.kind {
                            StepKind::Additive => prev[i] + w[i],
                            StepKind::Multiplicative => prev[i] * (step.drift[i] + w[i]).exp(),
                        };
                    }
                }
            }
            Plan::Frozen(rule) => {
                let dt = 1.0 / n as f64;
                let scale = dt.sqrt();
                for k in 1..=n {
                    let sigma = {
                        let view = PathView::strided(&buf[..], stride, offset, l, k, dt);
                        rule.eval((k - 1) as f64 * dt, &view)?
                    };
                    rng.fill_normal(&mut z);
                    sigma.matvec_into(&z, &mut w);
                    for i in 0..l {
                        buf[k * stride + offset + i] = buf[(k - 1) * stride + offset + i] + scale * w[i];
                    }
                }
            }
            Plan::Euler { sigma, substeps } => {
                let s = *substeps;
                let steps = n * s;
                let dt = 1.0 / steps as f64;
                let scale = dt.sqrt();
                let mut fine = vec![0.0; (steps + 1) * l];
                fine[..l].copy_from_slice(self.model.x0());
                for j in 1..=steps {
                    let m = {
                        let view = PathView::new(&fine[..j * l], l, dt);
                        sigma.eval((j - 1) as f64 * dt, &view)?
                    };
                    rng.fill_normal(&mut z);
                    m.matvec_into(&z, &mut w);
                    for i in 0..l {
                        fine[j * l + i] = fine[(j - 1) * l + i] + scale * w[i];
                    }
                    if j % s == 0 {
                        let k = j / s;
                        buf[k * stride + offset..][..l].copy_from_slice(&fine[j * l..(j + 1) * l]);
                    }
                }
                if fine.iter().any(|x| !x.is_finite()) {
                    return Err(Error::NonFinite("Euler path"));
                }
            }
            Plan::Product(parts) => {
                let mut off = offset;
                for p in parts {
                    p.fill(rng, Target { buf: &mut *buf, stride, offset: off })?;
                    off += p.dim();
                }
            }
        }
        Ok(())
    }
}

/// A batch of simulated paths with their provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathEnsemble {
    pub model: ModelSpec,
    pub level: usize,
    pub count: usize,
    pub seed: u64,
    pub scheme: Scheme,
    /// `count × (level + 1) × dim`, row-major.
    #[serde(skip)]
    pub values: Vec<f64>,
}

impl PathEnsemble {
    pub fn path(&self, i: usize) -> &[f64] {
        let len = (self.level + 1) * self.model.dim();
        &self.values[i * len..(i + 1) * len]
    }

    pub fn view(&self, i: usize) -> PathView<'_> {
        PathView::new(self.path(i), self.model.dim(), 1.0 / self.level as f64)
    }
}

impl ModelSpec {
    /// Sampler at level `n` with the model's own Euler substeps.
    pub fn sampler(&self, n: usize) -> Result<PathSampler<'_>> {
        self.sampler_with(n, None)
    }

    /// Sampler at level `n`; `substeps` overrides the Euler substep count.
    pub fn sampler_with(&self, n: usize, substeps: Option<u32>) -> Result<PathSampler<'_>> {
        if n == 0 {
            return Err(Error::InvalidLevel("level must be at least 1".into()));
        }
        let nf = n as f64;
        let plan = match &self.family {
            Family::ScaledBrownian { a } => Plan::Static(vec![StaticStep {
                kind: StepKind::Additive,
                drift: vec![0.0; self.dim],
                factor: a.scale(nf.recip().sqrt()),
            }]),
            Family::GaussianMartingale { breakpoints, values } => {
                let steps = (1..=n)
                    .map(|k| {
                        let inc = Self::covariance_increment(breakpoints, values, (k - 1) as f64 / nf, k as f64 / nf);
                        Ok(StaticStep {
                            kind: StepKind::Additive,
                            drift: vec![0.0; self.dim],
                            factor: spd_sqrt(&SpdMatrix::new(inc)?).into_matrix(),
                        })
                    })
                    .collect::<Result<_>>()?;
                Plan::Static(steps)
            }
            Family::BlackScholes { gamma } => Plan::Static(vec![StaticStep {
                kind: StepKind::Multiplicative,
                drift: row_square_sums(gamma).iter().map(|c| -c / (2.0 * nf)).collect(),
                factor: gamma.scale(nf.recip().sqrt()),
            }]),
            Family::DelayedVolatility { rule, substeps: own, .. } => {
                if self.has_transition(n) {
                    Plan::Frozen(rule)
                } else {
                    Plan::Euler { sigma: rule, substeps: substeps.unwrap_or(*own) as usize }
                }
            }
            Family::SdeMartingale { sigma, substeps: own } => {
                Plan::Euler { sigma, substeps: substeps.unwrap_or(*own) as usize }
            }
            Family::Product { components } => Plan::Product(
                components.iter().map(|c| c.sampler_with(n, substeps)).collect::<Result<_>>()?,
            ),
        };
        Ok(PathSampler { model: self, n, plan })
    }

    /// Scheme used at level `n` (Euler if any block uses Euler).
    pub fn scheme(&self, n: usize) -> Scheme {
        match &self.family {
            Family::DelayedVolatility { substeps, .. } if !self.has_transition(n) => Scheme::Euler { substeps: *substeps },
            Family::SdeMartingale { substeps, .. } => Scheme::Euler { substeps: *substeps },
            Family::Product { components } => components
                .iter()
                .map(|c| c.scheme(n))
                .max_by_key(|s| match s {
                    Scheme::Exact => 0,
                    Scheme::Euler { substeps } => *substeps,
                })
                .unwrap_or(Scheme::Exact),
            _ => Scheme::Exact,
        }
    }

    /// `count` paths at level `n`; path `i` uses random stream `i` of `seed`.
    pub fn simulate(&self, n: usize, count: usize, seed: u64, execution: Execution) -> Result<PathEnsemble> {
        if count == 0 {
            return Err(Error::InsufficientSamples { required: 1, got: 0 });
        }
        let sampler = self.sampler(n)?;
        let len = (n + 1) * self.dim;
        let chunks = map_chunks(count, execution, |range| {
            let mut out = vec![0.0; range.len() * len];
            for (j, i) in range.enumerate() {
                let mut rng = PathRng::new(seed, i as u64);
                sampler.sample_into(&mut rng, &mut out[j * len..(j + 1) * len])?;
            }
            Ok::<_, Error>(out)
        });
        let mut values = Vec::with_capacity(count * len);
        for c in chunks {
            values.extend_from_slice(&c?);
        }
        Ok(PathEnsemble { model: self.clone(), level: n, count, seed, scheme: self.scheme(n), values })
    }
}

/// Piecewise-constant realized covariance density on a coarse grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QvDensityTrack {
    pub grid: Vec<f64>,
    pub values: Vec<SpdMatrix>,
}

/// `n · Σ ΔX ΔXᵀ` over the fine increments inside each coarse interval
/// `[(j−1)/n, j/n]`, for a path observed on the `1/m` grid.
pub fn realized_qv_density(path: &PathView<'_>, n: usize) -> Result<QvDensityTrack> {
    let m = path.points() - 1;
    if n == 0 || !m.is_multiple_of(n) || m / n < 4 {
        return Err(Error::IncompatibleLevels { fine: m, coarse: n });
    }
    let l = path.dim();
    let r = m / n;
    let mut values = Vec::with_capacity(n);
    let mut d = vec![0.0; l];
    for j in 0..n {
        let mut acc = Matrix::zeros(l);
        for s in j * r..(j + 1) * r {
            let (a, b) = (path.state(s), path.state(s + 1));
            for i in 0..l {
                d[i] = b[i] - a[i];
            }
            for i in 0..l {
                for k in 0..l {
                    acc[(i, k)] += d[i] * d[k];
                }
            }
        }
        values.push(SpdMatrix::new(acc.scale(n as f64))?);
    }
    let grid = (0..=n).map(|j| j as f64 / n as f64).collect();
    Ok(QvDensityTrack { grid, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paths_start_at_x0_and_are_reproducible() {
        let bs = ModelSpec::black_scholes(Matrix::from_rows(&[vec![0.4, 0.1], vec![0.0, 0.3]]).unwrap())
            .with_x0(vec![2.0, 0.5])
            .unwrap();
        let a = bs.simulate(8, 3000, 11, Execution::Parallel).unwrap();
        let b = bs.simulate(8, 3000, 11, Execution::Sequential).unwrap();
        assert_eq!(a.values, b.values);
        for i in 0..a.count {
            assert_eq!(&a.path(i)[..2], &[2.0, 0.5]);
            assert!(a.path(i).iter().all(|&x| x > 0.0));
        }
    }

    #[test]
    fn singular_black_scholes_still_simulates() {
        let bs = ModelSpec::black_scholes(Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap());
        assert!(bs.simulate(4, 10, 1, Execution::Sequential).is_ok());
    }

    #[test]
    fn product_blocks_are_placed_side_by_side() {
        let p = ModelSpec::product(vec![
            ModelSpec::brownian(1).with_x0(vec![5.0]).unwrap(),
            ModelSpec::black_scholes(Matrix::identity(1)),
        ])
        .unwrap();
        let e = p.simulate(4, 2, 3, Execution::Sequential).unwrap();
        assert_eq!(&e.path(0)[..2], &[5.0, 1.0]);
        assert!(e.path(0).chunks(2).all(|c| c[1] > 0.0));
    }

    #[test]
    fn euler_substeps_land_on_grid() {
        let sde = ModelSpec::sde(1, Volatility::Constant { sigma: Matrix::scalar(1, 0.0) }).unwrap();
        let e = sde.simulate(4, 2, 1, Execution::Sequential).unwrap();
        assert!(e.values.iter().all(|&x| x == 0.0));
        assert_eq!(sde.scheme(4), Scheme::Euler { substeps: 64 });
    }

    #[test]
    fn qv_of_linear_path_vanishes_and_levels_checked() {
        let v: Vec<f64> = (0..=16).map(|k| k as f64 / 16.0 * 1e-9).collect();
        let p = PathView::new(&v, 1, 1.0 / 16.0);
        let t = realized_qv_density(&p, 4).unwrap();
        assert_eq!(t.values.len(), 4);
        assert!(t.values.iter().all(|m| m.matrix()[(0, 0)] < 1e-15));
        assert!(matches!(realized_qv_density(&p, 8), Err(Error::IncompatibleLevels { .. })));
        assert!(matches!(realized_qv_density(&p, 3), Err(Error::IncompatibleLevels { .. })));
    }
}
