//! Closed-form specific relative entropies.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::gaussian_divergence::row_square_sums;
use crate::grid_entropy::{ModelPair, Route};
use crate::models::Family;
use crate::spdlinalg::{f_1, f_l, f_l_pair, positive, Matrix, SpdMatrix};
use crate::value::Entropy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    Equality,
    LowerBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleValue {
    pub value: Entropy,
    pub formula_id: String,
    pub params: serde_json::Value,
    pub kind: OracleKind,
}

impl OracleValue {
    fn equality(value: Entropy, formula_id: &str, params: serde_json::Value) -> Self {
        Self { value, formula_id: formula_id.to_string(), params, kind: OracleKind::Equality }
    }
}

fn singular_to_infinite(r: Result<f64>) -> Result<Entropy> {
    match r {
        Ok(v) => Ok(Entropy::Finite(v)),
        Err(Error::SingularMatrix { .. }) => Ok(Entropy::Infinite),
        Err(e) => Err(e),
    }
}

/// `σB` against `ηB` in dimension `l`: `(l/2)(σ²/η² − 1 − log(σ²/η²))`.
pub fn h_scaled_bm(sigma: f64, eta: f64, l: usize) -> Result<OracleValue> {
    positive("sigma", sigma)?;
    positive("eta", eta)?;
    let r = (sigma / eta).powi(2);
    let value = l as f64 * f_1(r);
    Ok(OracleValue::equality(Entropy::Finite(value), "scaled_bm", json!({ "sigma": sigma, "eta": eta, "l": l })))
}

/// `∫₀¹ F_l(G(s)) ds` for a piecewise-constant `G`.
pub fn h_gaussian_martingale(breakpoints: &[f64], values: &[SpdMatrix]) -> Result<OracleValue> {
    if values.is_empty() || breakpoints.len() != values.len() + 1 {
        return Err(Error::InvalidModel("one G value per breakpoint interval required".into()));
    }
    let mut total = Entropy::zero();
    for (w, g) in breakpoints.windows(2).zip(values) {
        total = total + singular_to_infinite(f_l(g))?.scale(w[1] - w[0]);
    }
    Ok(OracleValue::equality(total, "gaussian_martingale", json!({ "breakpoints": breakpoints, "values": values })))
}

/// Black-Scholes `Γ` against standard Brownian motion, both from the all-ones
/// vector: `½(Σᵢ(e^{cᵢ} − 1) − l + ½Σᵢcᵢ − log det ΓΓᵀ)` with `cᵢ = Σₖ Γᵢₖ²`.
pub fn h_gbm_vs_bm(gamma: &Matrix) -> Result<OracleValue> {
    let params = json!({ "gamma": gamma });
    let s = SpdMatrix::gram(gamma)?;
    let log_det = match s.require_positive_definite().and_then(|_| s.log_det()) {
        Ok(v) => v,
        Err(Error::SingularMatrix { .. }) => {
            return Ok(OracleValue::equality(Entropy::Infinite, "gbm_vs_bm", params))
        }
        Err(e) => return Err(e),
    };
    let c = row_square_sums(gamma);
    let l = gamma.dim() as f64;
    let growth: f64 = c.iter().map(|ci| ci.exp_m1()).sum();
    let total: f64 = c.iter().sum();
    let value = 0.5 * (growth - l + 0.5 * total - log_det);
    Ok(OracleValue::equality(Entropy::Finite(value), "gbm_vs_bm", params))
}

/// Two Black-Scholes models: `F_l` of `Γ₁Γ₁ᵀ` relative to `Γ₂Γ₂ᵀ`.
pub fn h_gbm_vs_gbm(gamma1: &Matrix, gamma2: &Matrix) -> Result<OracleValue> {
    if gamma1.dim() != gamma2.dim() {
        return Err(Error::DimensionMismatch { expected: gamma2.dim(), got: gamma1.dim() });
    }
    let s1 = SpdMatrix::gram(gamma1)?;
    let s2 = SpdMatrix::gram(gamma2)?;
    let value = singular_to_infinite(f_l_pair(&s1, &s2))?;
    Ok(OracleValue::equality(value, "gbm_vs_gbm", json!({ "gamma1": gamma1, "gamma2": gamma2 })))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "copies")]
pub enum TensorMode {
    /// `l` independent copies of one pair: exactly `l` times its value.
    IidProduct(usize),
    /// Sum over coordinates: a lower bound when only the reference law has
    /// independent coordinates.
    Sum,
}

pub fn tensor_h(components: &[OracleValue], mode: TensorMode) -> Result<OracleValue> {
    let first = components.first().ok_or(Error::EmptyList)?;
    Ok(match mode {
        TensorMode::IidProduct(l) => OracleValue {
            value: first.value.scale(l as f64),
            formula_id: format!("iid_product({})", first.formula_id),
            params: json!({ "copies": l, "component": first.params }),
            kind: first.kind,
        },
        TensorMode::Sum => OracleValue {
            value: components.iter().map(|c| c.value).sum(),
            formula_id: "coordinate_sum".to_string(),
            params: json!({ "components": components.iter().map(|c| &c.formula_id).collect::<Vec<_>>() }),
            kind: OracleKind::LowerBound,
        },
    })
}

/// `∫₀¹ f_pair(G_q(s), G_p(s)) ds` over the merged breakpoints of two
/// step-function covariance densities.
fn gaussian_pair_integral(q: &(Vec<f64>, Vec<SpdMatrix>), p: &(Vec<f64>, Vec<SpdMatrix>)) -> Result<Entropy> {
    let mut cuts: Vec<f64> = q.0.iter().chain(&p.0).copied().collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let piece = |b: &[f64], t: f64| b[1..].iter().position(|&x| t < x).unwrap_or(b.len() - 2);
    let mut total = Entropy::zero();
    for w in cuts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let gq = &q.1[piece(&q.0, mid)];
        let gp = &p.1[piece(&p.0, mid)];
        total = total + singular_to_infinite(f_l_pair(gq, gp))?.scale(w[1] - w[0]);
    }
    Ok(total)
}

/// The specific relative entropy of a pair when a closed form is known.
pub fn oracle_for_pair(pair: &ModelPair) -> Result<Option<OracleValue>> {
    if pair.q.x0() != pair.p.x0() && pair.route().is_analytic() {
        return Ok(Some(OracleValue::equality(Entropy::Infinite, "distinct_starts", json!({}))));
    }
    match pair.route() {
        Route::ScaledBm | Route::GaussianMartBm => {
            let (q, p) = (pair.q.deterministic_pieces().unwrap(), pair.p.deterministic_pieces().unwrap());
            let l = pair.dim();
            let scalar = |m: &SpdMatrix| {
                let s = m.matrix()[(0, 0)];
                (*m.matrix() == Matrix::scalar(l, s) && s > 0.0).then_some(s.sqrt())
            };
            if let (Route::ScaledBm, Some(sq), Some(sp)) = (pair.route(), scalar(&q.1[0]), scalar(&p.1[0])) {
                return h_scaled_bm(sq, sp, l).map(Some);
            }
            if pair.p.is_standard_brownian() {
                return h_gaussian_martingale(&q.0, &q.1).map(Some);
            }
            let value = gaussian_pair_integral(&q, &p)?;
            Ok(Some(OracleValue::equality(value, "gaussian_martingale_pair", json!({}))))
        }
        Route::GbmBm => match pair.q.family() {
            Family::BlackScholes { gamma }
                if pair.p.is_standard_brownian() && pair.q.x0().iter().all(|&x| x == 1.0) =>
            {
                h_gbm_vs_bm(gamma).map(Some)
            }
            _ => Ok(None),
        },
        Route::GbmGbm => match (pair.q.family(), pair.p.family()) {
            (Family::BlackScholes { gamma: g1 }, Family::BlackScholes { gamma: g2 }) => h_gbm_vs_gbm(g1, g2).map(Some),
            _ => unreachable!(),
        },
        Route::Product => {
            let blocks = pair.blocks().expect("product route has blocks");
            let mut parts = Vec::with_capacity(blocks.len());
            for b in &blocks {
                match oracle_for_pair(b)? {
                    Some(o) => parts.push(o),
                    None => return Ok(None),
                }
            }
            // Both laws factorize over the blocks, so the entropy is additive.
            let value = parts.iter().map(|o| o.value).sum();
            let ids: Vec<&str> = parts.iter().map(|o| o.formula_id.as_str()).collect();
            Ok(Some(OracleValue::equality(value, "block_sum", json!({ "blocks": ids }))))
        }
        Route::Generic => Ok(None),
    }
}
