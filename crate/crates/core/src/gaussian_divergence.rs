//! Relative entropy between Gaussian and lognormal laws, and the chain rule
//! that assembles joint entropies from conditional one-step entropies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{mc_entropy, McConfig, McEntropy};
use crate::rng::PathRng;
use crate::spdlinalg::{Matrix, SpdMatrix};
use crate::value::Entropy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianLaw {
    pub mean: Vec<f64>,
    pub cov: SpdMatrix,
}

impl GaussianLaw {
    pub fn new(mean: Vec<f64>, cov: SpdMatrix) -> Result<Self> {
        if mean.len() != cov.dim() {
            return Err(Error::DimensionMismatch { expected: cov.dim(), got: mean.len() });
        }
        if mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::NonFinite("Gaussian mean"));
        }
        Ok(Self { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Law of `exp(Z)` (coordinatewise) for `Z ~ N(log_mean, log_cov)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LognormalLaw {
    pub log_mean: Vec<f64>,
    pub log_cov: SpdMatrix,
}

impl LognormalLaw {
    pub fn new(log_mean: Vec<f64>, log_cov: SpdMatrix) -> Result<Self> {
        let g = GaussianLaw::new(log_mean, log_cov)?;
        Ok(Self { log_mean: g.mean, log_cov: g.cov })
    }

    pub fn dim(&self) -> usize {
        self.log_mean.len()
    }

    pub fn log_law(&self) -> GaussianLaw {
        GaussianLaw { mean: self.log_mean.clone(), cov: self.log_cov.clone() }
    }

    /// `E[X]`.
    pub fn mean(&self) -> Vec<f64> {
        let s = self.log_cov.matrix();
        self.log_mean.iter().enumerate().map(|(i, m)| (m + 0.5 * s[(i, i)]).exp()).collect()
    }

    /// `E[X Xᵀ]`.
    pub fn second_moment(&self) -> Matrix {
        let e = self.mean();
        let s = self.log_cov.matrix();
        let l = self.dim();
        let mut out = Matrix::zeros(l);
        for i in 0..l {
            for j in 0..l {
                out[(i, j)] = e[i] * e[j] * s[(i, j)].exp();
            }
        }
        out
    }
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { expected: b, got: a });
    }
    Ok(())
}

/// `H(N(μ₁,Σ₁) | N(μ₂,Σ₂)) = ½(tr(Σ₂⁻¹Σ₁) − l + (μ₂−μ₁)ᵀΣ₂⁻¹(μ₂−μ₁) − log(det Σ₁/det Σ₂))`.
pub fn kl_gaussian(p: &GaussianLaw, q: &GaussianLaw) -> Result<f64> {
    check_dims(p.dim(), q.dim())?;
    let q_inv = q.cov.inverse()?;
    let log_det_q = q.cov.log_det()?;
    let log_det_p = p.cov.log_det()?;
    let l = p.dim();
    let qi = q_inv.matrix();
    let trace: f64 = (0..l)
        .map(|i| (0..l).map(|k| qi[(i, k)] * p.cov.matrix()[(k, i)]).sum::<f64>())
        .sum();
    let d: Vec<f64> = q.mean.iter().zip(&p.mean).map(|(a, b)| a - b).collect();
    let quad: f64 = (0..l).map(|i| d[i] * (0..l).map(|j| qi[(i, j)] * d[j]).sum::<f64>()).sum();
    Ok((0.5 * (trace - l as f64 + quad - (log_det_p - log_det_q))).max(0.0))
}

/// Relative entropy between lognormal laws; equals the entropy between the
/// underlying Gaussians because `exp` is a bijection.
pub fn kl_lognormal(p: &LognormalLaw, q: &LognormalLaw) -> Result<f64> {
    kl_gaussian(&p.log_law(), &q.log_law())
}

/// `H(lognormal(m, S) | N(y, V))`, in closed form from the lognormal's
/// entropy and its first two moments.
pub fn kl_lognormal_vs_gaussian(p: &LognormalLaw, q: &GaussianLaw) -> Result<f64> {
    check_dims(p.dim(), q.dim())?;
    let l = p.dim();
    let v_inv = q.cov.inverse()?;
    let log_det_v = q.cov.log_det()?;
    let log_det_s = p.log_cov.log_det()?;
    let e = p.mean();
    let second = p.second_moment();
    let vi = v_inv.matrix();
    let y = &q.mean;
    let mut quad = 0.0;
    for i in 0..l {
        for j in 0..l {
            quad += vi[(i, j)] * (second[(i, j)] - y[i] * e[j] - e[i] * y[j] + y[i] * y[j]);
        }
    }
    let sum_m: f64 = p.log_mean.iter().sum();
    Ok((0.5 * (-(l as f64) - log_det_s + log_det_v + quad) - sum_m).max(0.0))
}

/// Entropy between the time-`t` marginals of the martingale Black-Scholes
/// model `dM = diag(M) Γ dB` and Brownian motion, both started at the
/// all-ones vector.
pub fn kl_gbm_marginal_vs_bm(gamma: &Matrix, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::NonpositiveTime(t));
    }
    let gg = SpdMatrix::gram(gamma)?;
    let log_det = gg.log_det()?;
    let l = gamma.dim();
    let row_sq = row_square_sums(gamma);
    let total: f64 = row_sq.iter().sum();
    let growth: f64 = row_sq.iter().map(|c| (t * c).exp_m1() / t).sum();
    Ok(0.5 * (-log_det + t * total - l as f64 + growth))
}

/// `Σₖ Γᵢₖ²` for each row `i`.
pub fn row_square_sums(gamma: &Matrix) -> Vec<f64> {
    let l = gamma.dim();
    (0..l).map(|i| (0..l).map(|k| gamma[(i, k)].powi(2)).sum()).collect()
}

/// Law of the next observation of a path given its past.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "law")]
pub enum StepLaw {
    Gaussian(GaussianLaw),
    Lognormal(LognormalLaw),
    /// Independent coordinate blocks, in coordinate order.
    Product { blocks: Vec<StepLaw> },
}

impl StepLaw {
    pub fn dim(&self) -> usize {
        match self {
            StepLaw::Gaussian(g) => g.dim(),
            StepLaw::Lognormal(l) => l.dim(),
            StepLaw::Product { blocks } => blocks.iter().map(StepLaw::dim).sum(),
        }
    }

    /// Flattens nested products and merges products whose blocks share a kind.
    pub fn normalized(&self) -> StepLaw {
        let StepLaw::Product { blocks } = self else {
            return self.clone();
        };
        let mut flat = Vec::new();
        for b in blocks {
            match b.normalized() {
                StepLaw::Product { blocks } => flat.extend(blocks),
                other => flat.push(other),
            }
        }
        if flat.len() == 1 {
            return flat.pop().unwrap();
        }
        if flat.iter().all(|b| matches!(b, StepLaw::Gaussian(_))) {
            let parts: Vec<(&[f64], &SpdMatrix)> = flat
                .iter()
                .map(|b| match b {
                    StepLaw::Gaussian(g) => (g.mean.as_slice(), &g.cov),
                    _ => unreachable!(),
                })
                .collect();
            let (mean, cov) = block_diag(&parts);
            return StepLaw::Gaussian(GaussianLaw { mean, cov });
        }
        if flat.iter().all(|b| matches!(b, StepLaw::Lognormal(_))) {
            let parts: Vec<(&[f64], &SpdMatrix)> = flat
                .iter()
                .map(|b| match b {
                    StepLaw::Lognormal(g) => (g.log_mean.as_slice(), &g.log_cov),
                    _ => unreachable!(),
                })
                .collect();
            let (log_mean, log_cov) = block_diag(&parts);
            return StepLaw::Lognormal(LognormalLaw { log_mean, log_cov });
        }
        StepLaw::Product { blocks: flat }
    }

    /// Splits into independent blocks of the given sizes, when the law factorizes.
    fn split(&self, dims: &[usize]) -> Option<Vec<StepLaw>> {
        match self {
            StepLaw::Product { blocks } => {
                let own: Vec<usize> = blocks.iter().map(StepLaw::dim).collect();
                if own == dims {
                    return Some(blocks.clone());
                }
                None
            }
            StepLaw::Gaussian(g) => split_blocks(&g.mean, &g.cov, dims).map(|parts| {
                parts
                    .into_iter()
                    .map(|(mean, cov)| StepLaw::Gaussian(GaussianLaw { mean, cov }))
                    .collect()
            }),
            StepLaw::Lognormal(g) => split_blocks(&g.log_mean, &g.log_cov, dims).map(|parts| {
                parts
                    .into_iter()
                    .map(|(log_mean, log_cov)| StepLaw::Lognormal(LognormalLaw { log_mean, log_cov }))
                    .collect()
            }),
        }
    }
}

fn block_diag(parts: &[(&[f64], &SpdMatrix)]) -> (Vec<f64>, SpdMatrix) {
    let dim: usize = parts.iter().map(|p| p.0.len()).sum();
    let mut mean = Vec::with_capacity(dim);
    let mut m = Matrix::zeros(dim);
    let mut off = 0;
    for (mu, cov) in parts {
        mean.extend_from_slice(mu);
        let d = mu.len();
        for i in 0..d {
            for j in 0..d {
                m[(off + i, off + j)] = cov.matrix()[(i, j)];
            }
        }
        off += d;
    }
    // block-diagonal of PSD blocks stays PSD
    (mean, SpdMatrix::new(m).expect("block-diagonal of PSD blocks"))
}

fn split_blocks(mean: &[f64], cov: &SpdMatrix, dims: &[usize]) -> Option<Vec<(Vec<f64>, SpdMatrix)>> {
    if dims.iter().sum::<usize>() != mean.len() {
        return None;
    }
    let m = cov.matrix();
    let scale = m.frobenius().max(f64::MIN_POSITIVE);
    let mut starts = Vec::with_capacity(dims.len());
    let mut off = 0;
    for &d in dims {
        starts.push(off);
        off += d;
    }
    let block_of = |i: usize| starts.iter().rposition(|&s| s <= i).unwrap();
    for i in 0..mean.len() {
        for j in 0..mean.len() {
            if block_of(i) != block_of(j) && m[(i, j)].abs() > 1e-14 * scale {
                return None;
            }
        }
    }
    let mut out = Vec::with_capacity(dims.len());
    for (&s, &d) in starts.iter().zip(dims) {
        let mut b = Matrix::zeros(d);
        for i in 0..d {
            for j in 0..d {
                b[(i, j)] = m[(s + i, s + j)];
            }
        }
        out.push((mean[s..s + d].to_vec(), SpdMatrix::new(b).ok()?));
    }
    Some(out)
}

fn singular_as_infinite(r: Result<f64>) -> Result<Entropy> {
    match r {
        Ok(v) => Ok(Entropy::Finite(v)),
        Err(Error::SingularMatrix { .. }) => Ok(Entropy::Infinite),
        Err(e) => Err(e),
    }
}

/// `H(q | p)` between two one-step laws. Singular covariances give `+∞`, as
/// does a Gaussian measured against a law supported on the positive orthant.
pub fn kl_step(q: &StepLaw, p: &StepLaw) -> Result<Entropy> {
    check_dims(q.dim(), p.dim())?;
    let (q, p) = (q.normalized(), p.normalized());
    match (&q, &p) {
        (StepLaw::Gaussian(a), StepLaw::Gaussian(b)) => singular_as_infinite(kl_gaussian(a, b)),
        (StepLaw::Lognormal(a), StepLaw::Lognormal(b)) => singular_as_infinite(kl_lognormal(a, b)),
        (StepLaw::Lognormal(a), StepLaw::Gaussian(b)) => {
            singular_as_infinite(kl_lognormal_vs_gaussian(a, b))
        }
        (StepLaw::Gaussian(_), StepLaw::Lognormal(_)) => Ok(Entropy::Infinite),
        (StepLaw::Product { blocks }, other) => {
            let dims: Vec<usize> = blocks.iter().map(StepLaw::dim).collect();
            let others = other.split(&dims).ok_or_else(|| {
                Error::NoClosedForm("reference law does not factorize along the product blocks".into())
            })?;
            blocks.iter().zip(&others).map(|(a, b)| kl_step(a, b)).sum()
        }
        (other, StepLaw::Product { blocks }) => {
            let dims: Vec<usize> = blocks.iter().map(StepLaw::dim).collect();
            match other.split(&dims) {
                Some(parts) => parts.iter().zip(blocks).map(|(a, b)| kl_step(a, b)).sum(),
                None if matches!(other, StepLaw::Gaussian(_))
                    && blocks.iter().any(|b| matches!(b, StepLaw::Lognormal(_))) =>
                {
                    Ok(Entropy::Infinite)
                }
                None => Err(Error::NoClosedForm(
                    "correlated law against a mixed product reference".into(),
                )),
            }
        }
    }
}

/// Monte Carlo chain rule: the average over sampled prefixes of the sum of
/// conditional one-step entropies.
///
/// `sample` draws one full discrete path from the first law; evaluator `k`
/// must only look at the part of that path before step `k`. The standard
/// error is computed from per-path sums since the steps of one path are
/// dependent.
pub fn chain_rule_entropy<P, S, E>(sample: S, step_kls: &[E], cfg: &McConfig) -> Result<McEntropy>
where
    S: Fn(&mut PathRng) -> Result<P> + Sync + Send,
    E: Fn(&P) -> Result<Entropy> + Sync + Send,
{
    mc_entropy(cfg, |i| {
        let mut rng = PathRng::new(cfg.seed, i as u64);
        let prefix = sample(&mut rng)?;
        let mut total = Entropy::zero();
        for kl in step_kls {
            total = total + kl(&prefix)?;
            if !total.is_finite() {
                break;
            }
        }
        Ok(total)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spdlinalg::f_l_pair;

    fn gauss(mean: &[f64], cov: SpdMatrix) -> GaussianLaw {
        GaussianLaw::new(mean.to_vec(), cov).unwrap()
    }

    #[test]
    fn kl_gaussian_examples() {
        let p = gauss(&[0.3, -1.0], SpdMatrix::diag(&[2.0, 0.7]).unwrap());
        assert!(kl_gaussian(&p, &p).unwrap().abs() < 1e-15);
        let a = gauss(&[1.0], SpdMatrix::identity(1));
        let b = gauss(&[0.0], SpdMatrix::identity(1));
        assert!((kl_gaussian(&a, &b).unwrap() - 0.5).abs() < 1e-15);
        let two = gauss(&[0.0, 0.0], SpdMatrix::scalar(2, 2.0).unwrap());
        let one = gauss(&[0.0, 0.0], SpdMatrix::identity(2));
        assert!((kl_gaussian(&two, &one).unwrap() - 0.306_852_819_440_054_7).abs() < 1e-12);
    }

    #[test]
    fn kl_gaussian_errors() {
        let a = gauss(&[0.0], SpdMatrix::identity(1));
        let s = gauss(&[0.0], SpdMatrix::diag(&[0.0]).unwrap());
        assert!(matches!(kl_gaussian(&a, &s), Err(Error::SingularMatrix { .. })));
        let b = gauss(&[0.0, 0.0], SpdMatrix::identity(2));
        assert!(matches!(kl_gaussian(&a, &b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn kl_lognormal_matches_gaussian() {
        let p = LognormalLaw::new(vec![0.0], SpdMatrix::identity(1)).unwrap();
        let q = LognormalLaw::new(vec![1.0], SpdMatrix::identity(1)).unwrap();
        assert!((kl_lognormal(&p, &q).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(kl_lognormal(&p, &p).unwrap(), 0.0);
        assert_eq!(
            kl_lognormal(&p, &q).unwrap(),
            kl_gaussian(&p.log_law(), &q.log_law()).unwrap()
        );
    }

    #[test]
    fn gbm_marginal_values() {
        let g = Matrix::identity(1);
        let v = kl_gbm_marginal_vs_bm(&g, 1.0).unwrap();
        assert!((v - 0.859_140_914_229_522_6).abs() < 1e-12);
        assert!(matches!(kl_gbm_marginal_vs_bm(&g, 0.0), Err(Error::NonpositiveTime(_))));
    }

    #[test]
    fn gbm_marginal_small_time_limit() {
        let g = Matrix::from_rows(&[vec![0.8, 0.3], vec![-0.2, 1.1]]).unwrap();
        let lim = crate::spdlinalg::f_l(&SpdMatrix::gram(&g).unwrap()).unwrap();
        assert!((kl_gbm_marginal_vs_bm(&g, 1e-6).unwrap() - lim).abs() < 1e-4);
    }

    #[test]
    fn gbm_marginal_equals_mixed_formula() {
        // same quantity through the generic lognormal-vs-Gaussian route
        let g = Matrix::from_rows(&[vec![0.8, 0.3], vec![-0.2, 1.1]]).unwrap();
        let t = 0.37;
        let c = row_square_sums(&g);
        let ln = LognormalLaw::new(
            c.iter().map(|ci| -0.5 * t * ci).collect(),
            SpdMatrix::gram(&g).unwrap().scale(t).unwrap(),
        )
        .unwrap();
        let bm = gauss(&[1.0, 1.0], SpdMatrix::scalar(2, t).unwrap());
        let a = kl_lognormal_vs_gaussian(&ln, &bm).unwrap();
        let b = kl_gbm_marginal_vs_bm(&g, t).unwrap();
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn mean_free_reduces_to_f_l_pair() {
        let s1 = SpdMatrix::from_rows(&[vec![2.0, 0.3], vec![0.3, 0.5]]).unwrap();
        let s2 = SpdMatrix::from_rows(&[vec![1.0, -0.2], vec![-0.2, 1.5]]).unwrap();
        let mu = [0.4, -0.1];
        let k = kl_gaussian(&gauss(&mu, s1.clone()), &gauss(&mu, s2.clone())).unwrap();
        assert!((k - f_l_pair(&s1, &s2).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn step_kl_dispatch() {
        let g = StepLaw::Gaussian(gauss(&[1.0], SpdMatrix::identity(1)));
        let l = StepLaw::Lognormal(LognormalLaw::new(vec![0.0], SpdMatrix::identity(1)).unwrap());
        assert_eq!(kl_step(&g, &l).unwrap(), Entropy::Infinite);
        assert!(kl_step(&l, &g).unwrap().is_finite());
        let prod = StepLaw::Product { blocks: vec![l.clone(), g.clone()] };
        let joint = StepLaw::Gaussian(gauss(&[1.0, 1.0], SpdMatrix::identity(2)));
        let sum = kl_step(&l, &g).unwrap() + kl_step(&g, &g).unwrap();
        assert_eq!(kl_step(&prod, &joint).unwrap(), sum);
        let singular = StepLaw::Gaussian(gauss(&[1.0], SpdMatrix::diag(&[0.0]).unwrap()));
        assert_eq!(kl_step(&g, &singular).unwrap(), Entropy::Infinite);
    }

    #[test]
    fn chain_rule_zero_evaluators() {
        let zero = |_: &f64| Ok(Entropy::zero());
        let est =
            chain_rule_entropy(|r: &mut PathRng| Ok(r.normal()), &[zero, zero], &McConfig::new(100, 3))
                .unwrap();
        assert_eq!(est.value, Entropy::Finite(0.0));
        assert_eq!(est.stderr, 0.0);
    }
}
