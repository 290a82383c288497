//! Relative entropy of two martingale laws restricted to the grid `{k/n}`.
//!
//! Closed forms exist for Gaussian pairs, Black-Scholes against a Brownian
//! reference, two Black-Scholes models, and products of such blocks. Other
//! pairs go through the Monte Carlo chain rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{mc_entropy, Execution, McConfig, McEntropy};
use crate::gaussian_divergence::{
    chain_rule_entropy, kl_gaussian, kl_step, row_square_sums, GaussianLaw, StepLaw,
};
use crate::models::{Family, IncrementLaw, ModelSpec, PathView};
use crate::rng::{mix, PathRng};
use crate::spdlinalg::{f_l, f_l_pair, spd_sqrt, Matrix, SpdMatrix};
use crate::value::Entropy;

/// Which closed form applies to a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Two scaled Brownian motions.
    ScaledBm,
    /// Gaussian martingale against a Gaussian martingale (including scaled BM).
    GaussianMartBm,
    /// Black-Scholes against a scaled Brownian motion.
    GbmBm,
    /// Two Black-Scholes models.
    GbmGbm,
    /// Independent blocks, each with an analytic route.
    Product,
    Generic,
}

impl Route {
    pub fn is_analytic(self) -> bool {
        self != Route::Generic
    }
}

/// `(Q, P)` for `H(Q | P)` restricted to a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelPair {
    pub q: ModelSpec,
    pub p: ModelSpec,
}

fn is_gaussian(m: &ModelSpec) -> bool {
    matches!(m.family(), Family::ScaledBrownian { .. } | Family::GaussianMartingale { .. })
}

/// Splits a model into independent blocks of the given sizes when its law
/// factorizes that way.
fn split_blocks(m: &ModelSpec, dims: &[usize]) -> Option<Vec<ModelSpec>> {
    if dims.len() == 1 {
        return Some(vec![m.clone()]);
    }
    let block_diag = |s: &Matrix| -> bool {
        let scale = s.frobenius().max(f64::MIN_POSITIVE);
        let mut start = 0;
        for &d in dims {
            for i in start..start + d {
                for j in 0..s.dim() {
                    if (j < start || j >= start + d) && s[(i, j)].abs() > 1e-14 * scale {
                        return false;
                    }
                }
            }
            start += d;
        }
        true
    };
    let sub = |s: &Matrix, start: usize, d: usize| -> Matrix {
        let mut out = Matrix::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out[(i, j)] = s[(start + i, start + j)];
            }
        }
        out
    };
    let mut out = Vec::with_capacity(dims.len());
    let mut start = 0;
    match m.family() {
        Family::Product { components } => {
            if components.iter().map(ModelSpec::dim).eq(dims.iter().copied()) {
                return Some(components.clone());
            }
            return None;
        }
        Family::ScaledBrownian { a } | Family::BlackScholes { gamma: a } => {
            let s = a.gram();
            if !block_diag(&s) {
                return None;
            }
            for &d in dims {
                let root = spd_sqrt(&SpdMatrix::new(sub(&s, start, d)).ok()?).into_matrix();
                let family = match m.family() {
                    Family::ScaledBrownian { .. } => Family::ScaledBrownian { a: root },
                    _ => Family::BlackScholes { gamma: root },
                };
                out.push(ModelSpec::new(d, family, Some(m.x0()[start..start + d].to_vec())).ok()?);
                start += d;
            }
        }
        Family::GaussianMartingale { breakpoints, values } => {
            if !values.iter().all(|v| block_diag(v.matrix())) {
                return None;
            }
            for &d in dims {
                let vals = values
                    .iter()
                    .map(|v| SpdMatrix::new(sub(v.matrix(), start, d)))
                    .collect::<Result<Vec<_>>>()
                    .ok()?;
                let family = Family::GaussianMartingale { breakpoints: breakpoints.clone(), values: vals };
                out.push(ModelSpec::new(d, family, Some(m.x0()[start..start + d].to_vec())).ok()?);
                start += d;
            }
        }
        _ => return None,
    }
    Some(out)
}

impl ModelPair {
    pub fn new(q: ModelSpec, p: ModelSpec) -> Result<Self> {
        if q.dim() != p.dim() {
            return Err(Error::DimensionMismatch { expected: q.dim(), got: p.dim() });
        }
        Ok(Self { q, p })
    }

    pub fn dim(&self) -> usize {
        self.q.dim()
    }

    /// Matching independent blocks of a product pair.
    pub fn blocks(&self) -> Option<Vec<ModelPair>> {
        let dims: Vec<usize> = match (self.q.family(), self.p.family()) {
            (Family::Product { components }, _) | (_, Family::Product { components }) => {
                components.iter().map(ModelSpec::dim).collect()
            }
            _ => return None,
        };
        let qs = split_blocks(&self.q, &dims)?;
        let ps = split_blocks(&self.p, &dims)?;
        Some(qs.into_iter().zip(ps).map(|(q, p)| ModelPair { q, p }).collect())
    }

    pub fn route(&self) -> Route {
        match (self.q.family(), self.p.family()) {
            (Family::ScaledBrownian { .. }, Family::ScaledBrownian { .. }) => Route::ScaledBm,
            _ if is_gaussian(&self.q) && is_gaussian(&self.p) => Route::GaussianMartBm,
            (Family::BlackScholes { .. }, Family::ScaledBrownian { .. }) => Route::GbmBm,
            (Family::BlackScholes { .. }, Family::BlackScholes { .. }) => Route::GbmGbm,
            (Family::Product { .. }, _) | (_, Family::Product { .. }) => match self.blocks() {
                Some(b) if b.iter().all(|p| p.route().is_analytic()) => Route::Product,
                _ => Route::Generic,
            },
            _ => Route::Generic,
        }
    }
}

fn check_level(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidLevel("level must be at least 1".into()));
    }
    Ok(())
}

fn singular_to_infinite(r: Result<f64>) -> Result<Entropy> {
    match r {
        Ok(v) => Ok(Entropy::Finite(v)),
        Err(Error::SingularMatrix { .. }) => Ok(Entropy::Infinite),
        Err(e) => Err(e),
    }
}

/// Step covariances `a(k/n) − a((k−1)/n)` of a Gaussian model.
fn gaussian_step_covs(m: &ModelSpec, n: usize) -> Result<Vec<SpdMatrix>> {
    let zero = vec![0.0; m.dim() * n];
    let view = PathView::new(&zero, m.dim(), 1.0 / n as f64);
    (1..=n)
        .map(|k| match m.conditional_increment_law(k, n, &view.prefix(k))? {
            IncrementLaw::Increment(g) => Ok(g.cov),
            _ => unreachable!("Gaussian models have additive steps"),
        })
        .collect()
}

/// Sum over steps of `KL(lognormal step | Gaussian step)` for Black-Scholes
/// `Γ` against Brownian motion with covariance `V = AAᵀ`, both started at `x0`.
fn gbm_vs_scaled_bm(gamma: &Matrix, a: &Matrix, x0: &[f64], n: usize) -> Result<f64> {
    let l = gamma.dim();
    let nf = n as f64;
    let s = SpdMatrix::gram(gamma)?;
    let v = SpdMatrix::gram(a)?;
    let vinv = v.inverse()?;
    let c = row_square_sums(gamma);
    let sum_c: f64 = c.iter().sum();
    let log_x0: f64 = x0.iter().map(|x| x.ln()).sum();
    let base = 0.5 * (-(l as f64) - s.log_det()? + v.log_det()?);
    let sm = s.matrix();
    let vi = vinv.matrix();
    let mut total = 0.0;
    for m in 1..=n {
        let before = (m - 1) as f64 / nf;
        let mut quad = 0.0;
        for i in 0..l {
            for j in 0..l {
                let growth = (sm[(i, j)] * before).exp() * (sm[(i, j)] / nf).exp_m1();
                quad += vi[(i, j)] * x0[i] * x0[j] * growth;
            }
        }
        total += base - log_x0 + m as f64 * sum_c / (2.0 * nf) + 0.5 * nf * quad;
    }
    Ok(total)
}

/// Exact `H(Q|P)` on the grid `{k/n}` for pairs with an analytic route.
pub fn restricted_entropy_analytic(pair: &ModelPair, n: usize) -> Result<Entropy> {
    check_level(n)?;
    let route = pair.route();
    if pair.q.x0() != pair.p.x0() && route.is_analytic() {
        return Ok(Entropy::Infinite);
    }
    match route {
        Route::ScaledBm | Route::GaussianMartBm => {
            let q = gaussian_step_covs(&pair.q, n)?;
            let p = gaussian_step_covs(&pair.p, n)?;
            q.iter().zip(&p).map(|(a, b)| singular_to_infinite(f_l_pair(a, b))).sum()
        }
        Route::GbmBm => match (pair.q.family(), pair.p.family()) {
            (Family::BlackScholes { gamma }, Family::ScaledBrownian { a }) => {
                singular_to_infinite(gbm_vs_scaled_bm(gamma, a, pair.q.x0(), n).map(|v| v.max(0.0)))
            }
            _ => unreachable!(),
        },
        Route::GbmGbm => match (pair.q.family(), pair.p.family()) {
            (Family::BlackScholes { gamma: g1 }, Family::BlackScholes { gamma: g2 }) => {
                let nf = n as f64;
                let step = |g: &Matrix| -> Result<GaussianLaw> {
                    let mean = row_square_sums(g).iter().map(|c| -c / (2.0 * nf)).collect();
                    GaussianLaw::new(mean, SpdMatrix::gram(g)?.scale(1.0 / nf)?)
                };
                let one = singular_to_infinite(kl_gaussian(&step(g1)?, &step(g2)?))?;
                Ok(one.scale(nf))
            }
            _ => unreachable!(),
        },
        Route::Product => {
            let blocks = pair.blocks().expect("product route has blocks");
            blocks.iter().map(|b| restricted_entropy_analytic(b, n)).sum()
        }
        Route::Generic => Err(Error::NoAnalyticRoute(format!(
            "{} vs {}",
            pair.q.family().name(),
            pair.p.family().name()
        ))),
    }
}

fn step_law(m: &ModelSpec, k: usize, n: usize, path: &PathView<'_>, local: bool) -> Result<StepLaw> {
    let prefix = path.prefix(k);
    let prev = prefix.current();
    if !local || m.has_transition(n) {
        return m.conditional_increment_law(k, n, &prefix)?.next_value_law(prev);
    }
    let cov = m.instantaneous_cov((k - 1) as f64 / n as f64, &prefix)?.scale(1.0 / n as f64)?;
    Ok(StepLaw::Gaussian(GaussianLaw::new(prev.to_vec(), cov)?))
}

fn chain_rule(pair: &ModelPair, n: usize, cfg: &McConfig, local: bool) -> Result<McEntropy> {
    check_level(n)?;
    if pair.q.dim() != pair.p.dim() {
        return Err(Error::DimensionMismatch { expected: pair.q.dim(), got: pair.p.dim() });
    }
    if pair.q.x0() != pair.p.x0() {
        return Ok(McEntropy { value: Entropy::Infinite, stderr: 0.0, paths: cfg.paths });
    }
    let sampler = pair.q.sampler(n)?;
    let l = pair.dim();
    let dt = 1.0 / n as f64;
    let steps: Vec<_> = (1..=n)
        .map(|k| {
            move |path: &Vec<f64>| -> Result<Entropy> {
                let view = PathView::new(path, l, dt);
                let q = step_law(&pair.q, k, n, &view, local)?;
                let p = step_law(&pair.p, k, n, &view, local)?;
                kl_step(&q, &p)
            }
        })
        .collect();
    chain_rule_entropy(|rng| sampler.sample(rng), &steps, cfg)
}

/// Chain-rule Monte Carlo with the exact one-step laws of both models.
pub fn restricted_entropy_mc(pair: &ModelPair, n: usize, cfg: &McConfig) -> Result<McEntropy> {
    for (name, m) in [("q", &pair.q), ("p", &pair.p)] {
        if !m.has_transition(n) {
            return Err(Error::NoClosedForm(format!(
                "{name} = {} has no one-step law at level {n}",
                m.family().name()
            )));
        }
    }
    chain_rule(pair, n, cfg, false)
}

/// Chain-rule Monte Carlo where a model without a closed-form step law is
/// replaced by the Gaussian step with its covariance frozen at the start of
/// the step. An approximation: exact only when the true step is Gaussian.
pub fn restricted_entropy_local_gaussian(pair: &ModelPair, n: usize, cfg: &McConfig) -> Result<McEntropy> {
    chain_rule(pair, n, cfg, true)
}

/// Conditional covariance of the next increment, exact when the step law is known.
fn exact_step_cov(law: &IncrementLaw, prev: &[f64]) -> Result<Matrix> {
    Ok(match law {
        IncrementLaw::Increment(g) => g.cov.matrix().clone(),
        IncrementLaw::Ratio(r) => {
            // mean-one ratios: Cov(yᵢRᵢ, yⱼRⱼ) = yᵢyⱼ(e^{Sᵢⱼ} − 1)
            let s = r.log_cov.matrix();
            let mut out = Matrix::zeros(r.dim());
            let e: Vec<f64> = (0..r.dim()).map(|i| (r.log_mean[i] + 0.5 * s[(i, i)]).exp()).collect();
            for i in 0..r.dim() {
                for j in 0..r.dim() {
                    out[(i, j)] = prev[i] * prev[j] * e[i] * e[j] * s[(i, j)].exp_m1();
                }
            }
            out
        }
        IncrementLaw::Product(blocks) => {
            let l = law.dim();
            let mut out = Matrix::zeros(l);
            let mut off = 0;
            for b in blocks {
                let d = b.dim();
                let m = exact_step_cov(b, &prev[off..off + d])?;
                for i in 0..d {
                    for j in 0..d {
                        out[(off + i, off + j)] = m[(i, j)];
                    }
                }
                off += d;
            }
            out
        }
    })
}

/// Inner draws per step for the nested conditional covariance estimate.
pub const PROJECTION_INNER_DRAWS: usize = 64;

fn euler_volatility(m: &ModelSpec) -> Option<(&crate::models::Volatility, usize)> {
    match m.family() {
        Family::SdeMartingale { sigma, substeps } | Family::DelayedVolatility { rule: sigma, substeps, .. } => {
            Some((sigma, *substeps as usize))
        }
        _ => None,
    }
}

/// `E_Q[Σₖ F_l(n · Cov(ΔₖX | prefix))]`, the entropy of the Gaussian
/// projection of `Q` against standard Brownian motion. A lower bound for
/// `H(Q | B)` on the grid.
///
/// Uses exact step covariances when `q` has step laws at level `n`;
/// otherwise continues the fine Euler path `inner` times from each prefix and
/// averages the increment outer products.
pub fn gaussian_projection_bound(q: &ModelSpec, n: usize, cfg: &McConfig, inner: usize) -> Result<McEntropy> {
    check_level(n)?;
    let l = q.dim();
    let nf = n as f64;
    if q.has_transition(n) {
        let sampler = q.sampler(n)?;
        return mc_entropy(cfg, |i| {
            let mut rng = PathRng::new(cfg.seed, i as u64);
            let path = sampler.sample(&mut rng)?;
            let view = PathView::new(&path, l, 1.0 / nf);
            let mut total = Entropy::zero();
            for k in 1..=n {
                let prefix = view.prefix(k);
                let law = q.conditional_increment_law(k, n, &prefix)?;
                let cov = SpdMatrix::new(exact_step_cov(&law, prefix.current())?.scale(nf))?;
                total = total + singular_to_infinite(f_l(&cov))?;
                if !total.is_finite() {
                    break;
                }
            }
            Ok(total)
        });
    }
    let (sigma, substeps) = euler_volatility(q)
        .ok_or_else(|| Error::NoClosedForm(format!("conditional covariance of {}", q.family().name())))?;
    if inner < 2 {
        return Err(Error::InsufficientSamples { required: 2, got: inner });
    }
    let fine_level = n * substeps;
    let dt = 1.0 / fine_level as f64;
    let sampler = q.sampler_with(fine_level, Some(1))?;
    mc_entropy(cfg, |i| {
        let mut rng = PathRng::new(cfg.seed, i as u64);
        let fine = sampler.sample(&mut rng)?;
        let mut inner_rng = PathRng::new(mix(cfg.seed, 0x1a2b), i as u64);
        let mut work = fine.clone();
        let mut z = vec![0.0; l];
        let mut w = vec![0.0; l];
        let mut total = Entropy::zero();
        for k in 1..=n {
            let start = (k - 1) * substeps;
            let mut acc = Matrix::zeros(l);
            for _ in 0..inner {
                for j in start + 1..=start + substeps {
                    let m = sigma.eval((j - 1) as f64 * dt, &PathView::new(&work[..j * l], l, dt))?;
                    inner_rng.fill_normal(&mut z);
                    m.matvec_into(&z, &mut w);
                    for c in 0..l {
                        work[j * l + c] = work[(j - 1) * l + c] + dt.sqrt() * w[c];
                    }
                }
                let end = start + substeps;
                for a in 0..l {
                    for b in 0..l {
                        let da = work[end * l + a] - fine[start * l + a];
                        let db = work[end * l + b] - fine[start * l + b];
                        acc[(a, b)] += da * db;
                    }
                }
            }
            work[..].copy_from_slice(&fine);
            let cov = SpdMatrix::new(acc.scale(nf / inner as f64))?;
            total = total + singular_to_infinite(f_l(&cov))?;
            if !total.is_finite() {
                break;
            }
        }
        Ok(total)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveMethod {
    Analytic,
    /// Exact chain rule.
    Mc,
    /// Chain rule with frozen-covariance Gaussian steps where no step law exists.
    Local,
    /// Analytic when available, else exact chain rule, else the local approximation.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub level: usize,
    pub value: Entropy,
    pub stderr: f64,
    pub method: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyCurve {
    pub points: Vec<CurvePoint>,
}

/// 10⁵ paths up to level 64, halved per doubling beyond.
pub fn default_paths(n: usize) -> usize {
    let mut paths = 100_000usize;
    let mut level = 64;
    while level < n && paths > 2_000 {
        paths /= 2;
        level *= 2;
    }
    paths
}

/// Restricted entropy at each level. Level `n` uses seed `mix(seed, n)`.
pub fn entropy_curve(
    pair: &ModelPair,
    levels: &[usize],
    method: CurveMethod,
    paths: Option<usize>,
    seed: u64,
    execution: Execution,
) -> Result<EntropyCurve> {
    if levels.is_empty() {
        return Err(Error::InsufficientLevels { required: 1, got: 0 });
    }
    if levels[0] == 0 || levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidLevel("levels must be positive and strictly increasing".into()));
    }
    let analytic = pair.route().is_analytic();
    let mut points = Vec::with_capacity(levels.len());
    for &n in levels {
        let cfg = McConfig { paths: paths.unwrap_or_else(|| default_paths(n)), seed: mix(seed, n as u64), execution };
        let resolved = match method {
            CurveMethod::Auto if analytic => CurveMethod::Analytic,
            CurveMethod::Auto if pair.q.has_transition(n) && pair.p.has_transition(n) => CurveMethod::Mc,
            CurveMethod::Auto => CurveMethod::Local,
            m => m,
        };
        let point = match resolved {
            CurveMethod::Analytic => CurvePoint {
                level: n,
                value: restricted_entropy_analytic(pair, n)?,
                stderr: 0.0,
                method: "analytic",
            },
            CurveMethod::Mc => {
                let e = restricted_entropy_mc(pair, n, &cfg)?;
                CurvePoint { level: n, value: e.value, stderr: e.stderr, method: "mc" }
            }
            _ => {
                let e = restricted_entropy_local_gaussian(pair, n, &cfg)?;
                let exact = pair.q.has_transition(n) && pair.p.has_transition(n);
                CurvePoint { level: n, value: e.value, stderr: e.stderr, method: if exact { "mc" } else { "mc-local" } }
            }
        };
        points.push(point);
    }
    Ok(EntropyCurve { points })
}

fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "inf".to_string()
    }
}

impl EntropyCurve {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,value,stderr,method\n");
        for p in &self.points {
            s.push_str(&format!("{},{},{},{}\n", p.level, fmt_num(p.value.to_f64()), fmt_num(p.stderr), p.method));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bm(l: usize) -> ModelSpec {
        ModelSpec::brownian(l)
    }

    #[test]
    fn routes() {
        let bs = ModelSpec::black_scholes(Matrix::identity(1));
        assert_eq!(ModelPair::new(bm(1), bm(1)).unwrap().route(), Route::ScaledBm);
        assert_eq!(ModelPair::new(bs.clone(), bm(1).with_x0(vec![1.0]).unwrap()).unwrap().route(), Route::GbmBm);
        assert_eq!(ModelPair::new(bs.clone(), bs.clone()).unwrap().route(), Route::GbmGbm);
        let sde = ModelSpec::sde(1, crate::models::Volatility::sin_state(1.0, 0.5)).unwrap();
        assert_eq!(ModelPair::new(sde, bm(1)).unwrap().route(), Route::Generic);
        let prod = ModelSpec::product(vec![bs.clone(), bs]).unwrap();
        let p2 = bm(2).with_x0(vec![1.0, 1.0]).unwrap();
        assert_eq!(ModelPair::new(prod, p2).unwrap().route(), Route::Product);
    }

    #[test]
    fn scaled_bm_values() {
        let q = ModelSpec::scaled_brownian(Matrix::scalar(1, 2.0));
        let pair = ModelPair::new(q, bm(1)).unwrap();
        for n in [1, 2, 8] {
            let v = restricted_entropy_analytic(&pair, n).unwrap().to_f64();
            assert!((v - n as f64 * 0.5 * (4.0 - 1.0 - 4f64.ln())).abs() < 1e-12 * n as f64);
        }
    }

    #[test]
    fn gbm_first_step() {
        let pair = ModelPair::new(
            ModelSpec::black_scholes(Matrix::identity(1)),
            bm(1).with_x0(vec![1.0]).unwrap(),
        )
        .unwrap();
        let v = restricted_entropy_analytic(&pair, 1).unwrap().to_f64();
        assert!((v - 0.5 * (1f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn different_starts_are_singular() {
        let pair = ModelPair::new(bm(1).with_x0(vec![1.0]).unwrap(), bm(1)).unwrap();
        assert_eq!(restricted_entropy_analytic(&pair, 4).unwrap(), Entropy::Infinite);
    }

    #[test]
    fn singular_step_is_infinite() {
        let q = ModelSpec::scaled_brownian(Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap());
        let pair = ModelPair::new(bm(2), q).unwrap();
        assert_eq!(restricted_entropy_analytic(&pair, 2).unwrap(), Entropy::Infinite);
    }

    #[test]
    fn generic_pair_has_no_analytic_route() {
        let sde = ModelSpec::sde(1, crate::models::Volatility::sin_state(1.0, 0.5)).unwrap();
        let pair = ModelPair::new(sde, bm(1)).unwrap();
        let err = restricted_entropy_analytic(&pair, 2).unwrap_err();
        assert!(matches!(err, Error::NoAnalyticRoute(_)));
        assert!(err.to_string().contains("no analytic route"));
        assert!(matches!(restricted_entropy_mc(&pair, 2, &McConfig::new(10, 1)), Err(Error::NoClosedForm(_))));
    }

    #[test]
    fn csv_format() {
        let pair = ModelPair::new(ModelSpec::scaled_brownian(Matrix::scalar(1, 2.0)), bm(1)).unwrap();
        let c = entropy_curve(&pair, &[2, 4], CurveMethod::Auto, None, 1, Execution::Sequential).unwrap();
        let csv = c.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "level,value,stderr,method");
        let cols: Vec<&str> = lines[1].split(',').collect();
        assert_eq!((cols[0], cols[2], cols[3]), ("2", "0.0000000000000000e0", "analytic"));
        assert_eq!(cols[1].split('e').next().unwrap().len(), 18);
        let v: f64 = cols[1].parse().unwrap();
        assert!((v - (3.0 - 4f64.ln())).abs() < 1e-14);
        assert!(entropy_curve(&pair, &[4, 2], CurveMethod::Auto, None, 1, Execution::Sequential).is_err());
    }

    #[test]
    fn default_path_schedule() {
        assert_eq!(default_paths(8), 100_000);
        assert_eq!(default_paths(64), 100_000);
        assert_eq!(default_paths(128), 50_000);
        assert_eq!(default_paths(1024), 6_250);
    }
}
