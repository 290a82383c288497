//! Declarative martingale models on `[0, 1]`.
//!
//! A [`ModelSpec`] is a family with its parameters and a starting point. The
//! JSON form is `{"family": .., "dim": .., "parameters": {..}, "x0": [..]}`.

mod simulate;
mod transform;
pub mod volatility;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::gaussian_divergence::{row_square_sums, GaussianLaw, LognormalLaw, StepLaw};
use crate::spdlinalg::{Matrix, SpdMatrix};

pub use simulate::{realized_qv_density, PathEnsemble, PathSampler, QvDensityTrack, Scheme};
pub use transform::TransformKind;
pub use volatility::{PathView, Volatility};

/// Euler substeps per observation interval unless a model says otherwise.
pub const DEFAULT_SUBSTEPS: u32 = 64;

fn default_substeps() -> u32 {
    DEFAULT_SUBSTEPS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "parameters")]
pub enum Family {
    /// `X = A·B`.
    ScaledBrownian { a: Matrix },
    /// Independent Gaussian increments with covariance `∫ G`, `G` piecewise
    /// constant on `[breakpoints[j], breakpoints[j+1])`.
    GaussianMartingale { breakpoints: Vec<f64>, values: Vec<SpdMatrix> },
    /// `dM = diag(M) Γ dB`.
    BlackScholes { gamma: Matrix },
    /// `dX = σ dB` with `σ_t` fixed by the path up to `(t − 1/n) ∨ 0`.
    DelayedVolatility {
        n: u32,
        rule: Volatility,
        #[serde(default = "default_substeps")]
        substeps: u32,
    },
    /// `dX = σ(t, X_{[0,t]}) dB`, simulated by Euler.
    SdeMartingale {
        sigma: Volatility,
        #[serde(default = "default_substeps")]
        substeps: u32,
    },
    /// Independent blocks of coordinates.
    Product { components: Vec<ModelSpec> },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::ScaledBrownian { .. } => "ScaledBrownian",
            Family::GaussianMartingale { .. } => "GaussianMartingale",
            Family::BlackScholes { .. } => "BlackScholes",
            Family::DelayedVolatility { .. } => "DelayedVolatility",
            Family::SdeMartingale { .. } => "SdeMartingale",
            Family::Product { .. } => "Product",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    dim: usize,
    x0: Vec<f64>,
    family: Family,
}

/// Law of one observation step given the observed prefix.
#[derive(Debug, Clone, PartialEq)]
pub enum IncrementLaw {
    /// `X_k − X_{k−1}`.
    Increment(GaussianLaw),
    /// `X_k / X_{k−1}` coordinatewise.
    Ratio(LognormalLaw),
    /// Independent blocks.
    Product(Vec<IncrementLaw>),
}

impl IncrementLaw {
    pub fn dim(&self) -> usize {
        match self {
            IncrementLaw::Increment(g) => g.dim(),
            IncrementLaw::Ratio(r) => r.dim(),
            IncrementLaw::Product(b) => b.iter().map(IncrementLaw::dim).sum(),
        }
    }

    /// Law of `X_k` given `X_{k−1} = prev`.
    pub fn next_value_law(&self, prev: &[f64]) -> Result<StepLaw> {
        if prev.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: prev.len() });
        }
        Ok(match self {
            IncrementLaw::Increment(g) => {
                let mean = g.mean.iter().zip(prev).map(|(m, x)| m + x).collect();
                StepLaw::Gaussian(GaussianLaw::new(mean, g.cov.clone())?)
            }
            IncrementLaw::Ratio(r) => {
                if prev.iter().any(|&x| x <= 0.0) {
                    return Err(Error::InvalidModel("ratio law from a nonpositive state".into()));
                }
                let log_mean = r.log_mean.iter().zip(prev).map(|(m, x)| m + x.ln()).collect();
                StepLaw::Lognormal(LognormalLaw::new(log_mean, r.log_cov.clone())?)
            }
            IncrementLaw::Product(blocks) => {
                let mut offset = 0;
                let mut out = Vec::with_capacity(blocks.len());
                for b in blocks {
                    let d = b.dim();
                    out.push(b.next_value_law(&prev[offset..offset + d])?);
                    offset += d;
                }
                StepLaw::Product { blocks: out }
            }
        })
    }
}

fn check_matrix_dim(m: &Matrix, dim: usize) -> Result<()> {
    if m.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: m.dim() });
    }
    if !m.is_finite() {
        return Err(Error::NonFinite("model parameter"));
    }
    Ok(())
}

impl ModelSpec {
    /// Validates and assembles a model. `x0 = None` selects the family default
    /// (zeros, ones for Black-Scholes, concatenated defaults for products).
    pub fn new(dim: usize, family: Family, x0: Option<Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidModel("dimension must be positive".into()));
        }
        let default_x0 = match &family {
            Family::BlackScholes { .. } => vec![1.0; dim],
            Family::Product { components } => components.iter().flat_map(|c| c.x0.clone()).collect(),
            _ => vec![0.0; dim],
        };
        let x0 = x0.unwrap_or(default_x0);
        if x0.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: x0.len() });
        }
        if x0.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("x0"));
        }
        match &family {
            Family::ScaledBrownian { a } => check_matrix_dim(a, dim)?,
            Family::GaussianMartingale { breakpoints, values } => {
                if values.is_empty() || breakpoints.len() != values.len() + 1 {
                    return Err(Error::InvalidModel(
                        "GaussianMartingale needs one value per breakpoint interval".into(),
                    ));
                }
                if breakpoints[0] != 0.0 || *breakpoints.last().unwrap() != 1.0 {
                    return Err(Error::InvalidModel("breakpoints must run from 0 to 1".into()));
                }
                if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::InvalidModel("breakpoints must be strictly increasing".into()));
                }
                for v in values {
                    if v.dim() != dim {
                        return Err(Error::DimensionMismatch { expected: dim, got: v.dim() });
                    }
                }
            }
            Family::BlackScholes { gamma } => {
                check_matrix_dim(gamma, dim)?;
                if x0.iter().any(|&x| x <= 0.0) {
                    return Err(Error::InvalidModel("Black-Scholes start must be positive".into()));
                }
            }
            Family::DelayedVolatility { n, rule, substeps } => {
                if *n == 0 || *substeps == 0 {
                    return Err(Error::InvalidModel("delay count and substeps must be positive".into()));
                }
                rule.validate(dim)?;
                let need = 1.0 / *n as f64;
                if rule.delay_horizon() < need * (1.0 - 1e-12) {
                    return Err(Error::InvalidModel(format!(
                        "volatility rule looks back {} but the class needs {need}",
                        rule.delay_horizon()
                    )));
                }
            }
            Family::SdeMartingale { sigma, substeps } => {
                if *substeps == 0 {
                    return Err(Error::InvalidModel("substeps must be positive".into()));
                }
                sigma.validate(dim)?;
            }
            Family::Product { components } => {
                if components.is_empty() {
                    return Err(Error::EmptyList);
                }
                let total: usize = components.iter().map(|c| c.dim).sum();
                if total != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: total });
                }
                let joined: Vec<f64> = components.iter().flat_map(|c| c.x0.clone()).collect();
                if joined != x0 {
                    return Err(Error::InvalidModel(
                        "product x0 must be the concatenation of component starts".into(),
                    ));
                }
            }
        }
        Ok(Self { dim, x0, family })
    }

    /// Standard `l`-dimensional Brownian motion from the origin.
    pub fn brownian(dim: usize) -> Self {
        Self::scaled_brownian(Matrix::identity(dim))
    }

    pub fn scaled_brownian(a: Matrix) -> Self {
        let dim = a.dim();
        Self::new(dim, Family::ScaledBrownian { a }, None).expect("valid scaled Brownian model")
    }

    pub fn gaussian_martingale(breakpoints: Vec<f64>, values: Vec<SpdMatrix>) -> Result<Self> {
        let dim = values.first().ok_or(Error::EmptyList)?.dim();
        Self::new(dim, Family::GaussianMartingale { breakpoints, values }, None)
    }

    /// Black-Scholes model started at the all-ones vector.
    pub fn black_scholes(gamma: Matrix) -> Self {
        let dim = gamma.dim();
        Self::new(dim, Family::BlackScholes { gamma }, None).expect("valid Black-Scholes model")
    }

    pub fn delayed(dim: usize, n: u32, rule: Volatility) -> Result<Self> {
        Self::new(dim, Family::DelayedVolatility { n, rule, substeps: DEFAULT_SUBSTEPS }, None)
    }

    pub fn sde(dim: usize, sigma: Volatility) -> Result<Self> {
        Self::new(dim, Family::SdeMartingale { sigma, substeps: DEFAULT_SUBSTEPS }, None)
    }

    pub fn product(components: Vec<ModelSpec>) -> Result<Self> {
        let dim = components.iter().map(|c| c.dim).sum();
        Self::new(dim, Family::Product { components }, None)
    }

    pub fn with_x0(self, x0: Vec<f64>) -> Result<Self> {
        if let Family::Product { components } = &self.family {
            let mut offset = 0;
            let mut comps = Vec::with_capacity(components.len());
            for c in components {
                if offset + c.dim > x0.len() {
                    return Err(Error::DimensionMismatch { expected: self.dim, got: x0.len() });
                }
                comps.push(c.clone().with_x0(x0[offset..offset + c.dim].to_vec())?);
                offset += c.dim;
            }
            return Self::new(self.dim, Family::Product { components: comps }, Some(x0));
        }
        Self::new(self.dim, self.family, Some(x0))
    }

    /// Overrides the Euler substep count of SDE-driven families (recursively).
    pub fn with_substeps(self, s: u32) -> Result<Self> {
        let family = match self.family {
            Family::DelayedVolatility { n, rule, .. } => Family::DelayedVolatility { n, rule, substeps: s },
            Family::SdeMartingale { sigma, .. } => Family::SdeMartingale { sigma, substeps: s },
            Family::Product { components } => Family::Product {
                components: components.into_iter().map(|c| c.with_substeps(s)).collect::<Result<_>>()?,
            },
            other => other,
        };
        Self::new(self.dim, family, Some(self.x0))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// True when the law of every step at level `n` given the observed prefix
    /// is known in closed form.
    pub fn has_transition(&self, n: usize) -> bool {
        match &self.family {
            Family::ScaledBrownian { .. } | Family::GaussianMartingale { .. } | Family::BlackScholes { .. } => true,
            Family::DelayedVolatility { rule, .. } => {
                rule.frozen_period().is_some_and(|p| n.is_multiple_of(p as usize))
            }
            Family::SdeMartingale { .. } => false,
            Family::Product { components } => components.iter().all(|c| c.has_transition(n)),
        }
    }

    /// `a(t) − a(s)` for a Gaussian martingale.
    fn covariance_increment(breakpoints: &[f64], values: &[SpdMatrix], s: f64, t: f64) -> Matrix {
        let l = values[0].dim();
        let mut acc = Matrix::zeros(l);
        for (j, v) in values.iter().enumerate() {
            let lo = breakpoints[j].max(s);
            let hi = breakpoints[j + 1].min(t);
            if hi > lo {
                acc = acc.add(&v.matrix().scale(hi - lo));
            }
        }
        acc
    }

    /// Law of step `k` (`1 ≤ k ≤ n`) at level `n` given the observed prefix
    /// `X_0, …, X_{(k−1)/n}` (a view with `k` points on the `1/n` grid).
    pub fn conditional_increment_law(&self, k: usize, n: usize, prefix: &PathView<'_>) -> Result<IncrementLaw> {
        if n == 0 || k == 0 || k > n {
            return Err(Error::InvalidLevel(format!("step {k} at level {n}")));
        }
        if prefix.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: prefix.dim() });
        }
        let nf = n as f64;
        let zero = vec![0.0; self.dim];
        Ok(match &self.family {
            Family::ScaledBrownian { a } => {
                IncrementLaw::Increment(GaussianLaw::new(zero, SpdMatrix::gram(a)?.scale(1.0 / nf)?)?)
            }
            Family::GaussianMartingale { breakpoints, values } => {
                let s = (k - 1) as f64 / nf;
                let t = k as f64 / nf;
                let cov = SpdMatrix::new(Self::covariance_increment(breakpoints, values, s, t))?;
                IncrementLaw::Increment(GaussianLaw::new(zero, cov)?)
            }
            Family::BlackScholes { gamma } => {
                let c = row_square_sums(gamma);
                let mean = c.iter().map(|ci| -ci / (2.0 * nf)).collect();
                IncrementLaw::Ratio(LognormalLaw::new(mean, SpdMatrix::gram(gamma)?.scale(1.0 / nf)?)?)
            }
            Family::DelayedVolatility { rule, .. } => {
                if !self.has_transition(n) {
                    return Err(Error::NoClosedForm(format!(
                        "delayed volatility is not frozen on the 1/{n} grid"
                    )));
                }
                if prefix.points() < k {
                    return Err(Error::InvalidLevel(format!("prefix has {} points, step {k}", prefix.points())));
                }
                let view = prefix.prefix(k);
                let s = (k - 1) as f64 / nf;
                let cov = rule.covariance(s, &view)?.scale(1.0 / nf)?;
                IncrementLaw::Increment(GaussianLaw::new(zero, cov)?)
            }
            Family::SdeMartingale { .. } => {
                return Err(Error::NoClosedForm("generic SDE martingale".into()));
            }
            Family::Product { components } => {
                let mut offset = 0;
                let mut blocks = Vec::with_capacity(components.len());
                for c in components {
                    blocks.push(c.conditional_increment_law(k, n, &prefix.coords(offset, c.dim))?);
                    offset += c.dim;
                }
                IncrementLaw::Product(blocks)
            }
        })
    }

    /// Instantaneous covariance `Σ_t` (density of the quadratic variation);
    /// `path` must end at time `t`.
    pub fn instantaneous_cov(&self, t: f64, path: &PathView<'_>) -> Result<SpdMatrix> {
        match &self.family {
            Family::ScaledBrownian { a } => SpdMatrix::gram(a),
            Family::GaussianMartingale { breakpoints, values } => {
                let j = breakpoints[1..].iter().position(|&b| t < b).unwrap_or(values.len() - 1);
                Ok(values[j].clone())
            }
            Family::BlackScholes { gamma } => {
                SpdMatrix::new(SpdMatrix::gram(gamma)?.matrix().congruence_diag(path.current()))
            }
            Family::DelayedVolatility { rule, .. } => rule.covariance(t, path),
            Family::SdeMartingale { sigma, .. } => sigma.covariance(t, path),
            Family::Product { components } => {
                let mut out = Matrix::zeros(self.dim);
                let mut offset = 0;
                for c in components {
                    let block = c.instantaneous_cov(t, &path.coords(offset, c.dim))?;
                    for i in 0..c.dim {
                        for j in 0..c.dim {
                            out[(offset + i, offset + j)] = block.matrix()[(i, j)];
                        }
                    }
                    offset += c.dim;
                }
                SpdMatrix::new(out)
            }
        }
    }

    /// `(breakpoints, G values)` for models whose covariance density is a
    /// deterministic step function.
    pub fn deterministic_pieces(&self) -> Option<(Vec<f64>, Vec<SpdMatrix>)> {
        match &self.family {
            Family::ScaledBrownian { a } => Some((vec![0.0, 1.0], vec![SpdMatrix::gram(a).ok()?])),
            Family::GaussianMartingale { breakpoints, values } => Some((breakpoints.clone(), values.clone())),
            _ => None,
        }
    }

    /// True for standard Brownian motion (`AAᵀ = I`) from any start.
    pub fn is_standard_brownian(&self) -> bool {
        match &self.family {
            Family::ScaledBrownian { a } => a.gram() == Matrix::identity(self.dim),
            _ => false,
        }
    }

    /// One-dimensional law of coordinate `i`, for families where it is again
    /// in the catalog.
    pub fn coordinate_marginal(&self, i: usize) -> Result<ModelSpec> {
        if i >= self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: i + 1 });
        }
        let x0 = vec![self.x0[i]];
        match &self.family {
            Family::ScaledBrownian { a } => {
                let s = row_square_sums(a)[i].sqrt();
                Self::new(1, Family::ScaledBrownian { a: Matrix::scalar(1, s) }, Some(x0))
            }
            Family::GaussianMartingale { breakpoints, values } => {
                let values = values
                    .iter()
                    .map(|v| SpdMatrix::diag(&[v.matrix()[(i, i)]]))
                    .collect::<Result<_>>()?;
                Self::new(1, Family::GaussianMartingale { breakpoints: breakpoints.clone(), values }, Some(x0))
            }
            Family::BlackScholes { gamma } => {
                let s = row_square_sums(gamma)[i].sqrt();
                Self::new(1, Family::BlackScholes { gamma: Matrix::scalar(1, s) }, Some(x0))
            }
            Family::Product { components } => {
                let mut offset = 0;
                for c in components {
                    if i < offset + c.dim {
                        return c.coordinate_marginal(i - offset);
                    }
                    offset += c.dim;
                }
                unreachable!("coordinate checked against dimension")
            }
            other => Err(Error::NoClosedForm(format!("coordinate marginal of {}", other.name()))),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Serialization(e.to_string()))
    }
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    family: String,
    dim: usize,
    parameters: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x0: Option<Vec<f64>>,
}

impl Serialize for ModelSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::Error as _;
        let mut tagged = serde_json::to_value(&self.family).map_err(S::Error::custom)?;
        let parameters = tagged
            .get_mut("parameters")
            .map(serde_json::Value::take)
            .unwrap_or(serde_json::Value::Null);
        ModelDoc {
            family: self.family.name().to_string(),
            dim: self.dim,
            parameters,
            x0: Some(self.x0.clone()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ModelSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let doc = ModelDoc::deserialize(d)?;
        let tagged = serde_json::json!({ "family": doc.family, "parameters": doc.parameters });
        let family: Family = serde_json::from_value(tagged).map_err(D::Error::custom)?;
        ModelSpec::new(doc.dim, family, doc.x0).map_err(D::Error::custom)
    }
}
