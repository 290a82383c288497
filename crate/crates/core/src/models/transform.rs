//! Volatility modifications that approximate a martingale by nicer ones.

use serde::{Deserialize, Serialize};

use super::{Family, ModelSpec, Volatility};
use crate::error::{Error, Result};
use crate::spdlinalg::{spectral_transform, SpectralKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransformKind {
    /// `σ ↦ σ + εI` on the symmetric square root of the covariance.
    Inflate { eps: f64 },
    /// Covariance eigenvalues capped at `c`.
    Cap { c: f64 },
    /// `σ_t ↦ n ∫_{(t−1/n)∨0}^t σ_s ds`.
    Mollify { n: u32 },
    /// `σ_t ↦ σ_{t−1/n}`, the identity before `1/n`.
    Delay { n: u32 },
}

impl TransformKind {
    fn name(&self) -> &'static str {
        match self {
            TransformKind::Inflate { .. } => "inflate",
            TransformKind::Cap { .. } => "cap",
            TransformKind::Mollify { .. } => "mollify",
            TransformKind::Delay { .. } => "delay",
        }
    }

    fn wrap(&self, inner: Volatility) -> Volatility {
        let inner = Box::new(inner);
        match *self {
            TransformKind::Inflate { eps } => Volatility::Inflate { eps, inner },
            TransformKind::Cap { c } => Volatility::Cap { c, inner },
            TransformKind::Mollify { n } => Volatility::Mollify { n, inner },
            TransformKind::Delay { n } => Volatility::Shift { n, inner },
        }
    }
}

impl ModelSpec {
    pub fn transform(&self, kind: TransformKind) -> Result<ModelSpec> {
        let unsupported = || Error::UnsupportedTransform {
            transform: kind.name().to_string(),
            family: self.family.name().to_string(),
        };
        let x0 = Some(self.x0.clone());
        let family = match (&self.family, kind) {
            (Family::GaussianMartingale { breakpoints, values }, TransformKind::Inflate { eps }) => {
                Family::GaussianMartingale {
                    breakpoints: breakpoints.clone(),
                    values: values
                        .iter()
                        .map(|v| spectral_transform(v, SpectralKind::InflateSqrt { eps }))
                        .collect::<Result<_>>()?,
                }
            }
            (Family::GaussianMartingale { breakpoints, values }, TransformKind::Cap { c }) => {
                Family::GaussianMartingale {
                    breakpoints: breakpoints.clone(),
                    values: values
                        .iter()
                        .map(|v| spectral_transform(v, SpectralKind::Cap { c }))
                        .collect::<Result<_>>()?,
                }
            }
            (Family::SdeMartingale { sigma, substeps }, TransformKind::Delay { n }) => {
                if n == 0 {
                    return Err(unsupported());
                }
                Family::DelayedVolatility { n, rule: kind.wrap(sigma.clone()), substeps: *substeps }
            }
            (Family::SdeMartingale { sigma, substeps }, _) => {
                Family::SdeMartingale { sigma: kind.wrap(sigma.clone()), substeps: *substeps }
            }
            (Family::DelayedVolatility { n, rule, substeps }, TransformKind::Delay { n: n2 }) => {
                // Lookback is now 1/n + 1/n2; record the smallest class index it certifies.
                let rule = kind.wrap(rule.clone());
                let class = (1.0 / rule.delay_horizon() - 1e-9).ceil().max(1.0) as u32;
                Family::DelayedVolatility { n: class.min(*n).min(n2), rule, substeps: *substeps }
            }
            (Family::DelayedVolatility { n, rule, substeps }, _) => {
                Family::DelayedVolatility { n: *n, rule: kind.wrap(rule.clone()), substeps: *substeps }
            }
            (Family::Product { components }, _) => Family::Product {
                components: components.iter().map(|c| c.transform(kind)).collect::<Result<_>>()?,
            },
            _ => return Err(unsupported()),
        };
        ModelSpec::new(self.dim, family, x0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::PathView;
    use crate::spdlinalg::{Matrix, SpdMatrix};

    #[test]
    fn inflate_gaussian_martingale() {
        let gm = ModelSpec::gaussian_martingale(vec![0.0, 1.0], vec![SpdMatrix::diag(&[4.0, 1.0]).unwrap()]).unwrap();
        let t = gm.transform(TransformKind::Inflate { eps: 1.0 }).unwrap();
        match t.family() {
            Family::GaussianMartingale { values, .. } => {
                assert!((values[0].matrix()[(0, 0)] - 9.0).abs() < 1e-12);
                assert!((values[0].matrix()[(1, 1)] - 4.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        let capped = gm.transform(TransformKind::Cap { c: 10.0 }).unwrap();
        assert_eq!(capped.family(), gm.family());
    }

    #[test]
    fn closed_form_families_reject_volatility_surgery() {
        let bs = ModelSpec::black_scholes(Matrix::identity(1));
        assert!(matches!(bs.transform(TransformKind::Delay { n: 4 }), Err(Error::UnsupportedTransform { .. })));
        let gm = ModelSpec::gaussian_martingale(vec![0.0, 1.0], vec![SpdMatrix::identity(1)]).unwrap();
        assert!(matches!(gm.transform(TransformKind::Mollify { n: 4 }), Err(Error::UnsupportedTransform { .. })));
    }

    #[test]
    fn delay_twice_depends_only_on_old_path() {
        let sde = ModelSpec::sde(1, Volatility::sin_state(1.0, 0.5)).unwrap();
        let once = sde.transform(TransformKind::Delay { n: 4 }).unwrap();
        let twice = once.transform(TransformKind::Delay { n: 8 }).unwrap();
        let rule = match twice.family() {
            Family::DelayedVolatility { rule, n, .. } => {
                assert_eq!(*n, 3);
                rule.clone()
            }
            other => panic!("{other:?}"),
        };
        let dt = 1.0 / 64.0;
        let base: Vec<f64> = (0..=64).map(|k| (k as f64 * 0.37).sin()).collect();
        let t = 0.8;
        let cutoff = t - 0.25 - 0.125;
        let mut perturbed = base.clone();
        for (k, x) in perturbed.iter_mut().enumerate() {
            if k as f64 * dt > cutoff + 1e-12 {
                *x += 10.0;
            }
        }
        let a = PathView::new(&base, 1, dt).until(t);
        let b = PathView::new(&perturbed, 1, dt).until(t);
        assert_eq!(rule.eval(t, &a).unwrap(), rule.eval(t, &b).unwrap());
        // and it does depend on the path at the cutoff
        let mut at_cut = base.clone();
        at_cut[(cutoff / dt).round() as usize] += 1.0;
        let c = PathView::new(&at_cut, 1, dt).until(t);
        assert_ne!(rule.eval(t, &a).unwrap(), rule.eval(t, &c).unwrap());
    }
}
