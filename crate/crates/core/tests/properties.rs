use mart_entropy::gaussian_divergence::{kl_gaussian, GaussianLaw};
use mart_entropy::grid_entropy::{restricted_entropy_analytic, ModelPair};
use mart_entropy::models::{ModelSpec, Volatility};
use mart_entropy::oracles::{h_gbm_vs_bm, h_gbm_vs_gbm};
use mart_entropy::spdlinalg::{f_1, f_l, f_l_pair, Matrix, SpdMatrix};
use proptest::prelude::*;

fn matrix(dim: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-1.5f64..1.5, dim * dim).prop_map(move |v| Matrix::from_row_major(dim, &v))
}

/// `AAᵀ + δI` with a floor that keeps the condition number moderate.
fn spd(dim: usize) -> impl Strategy<Value = SpdMatrix> {
    (matrix(dim), 0.05f64..1.0).prop_map(move |(a, d)| SpdMatrix::new(a.gram().add(&Matrix::scalar(dim, d))).unwrap())
}

fn spd_any() -> impl Strategy<Value = SpdMatrix> {
    (1usize..=4).prop_flat_map(spd)
}

fn spd_pair() -> impl Strategy<Value = (SpdMatrix, SpdMatrix)> {
    (1usize..=4).prop_flat_map(|d| (spd(d), spd(d)))
}

/// Nonsingular by diagonal dominance.
fn nonsingular(dim: usize) -> impl Strategy<Value = Matrix> {
    matrix(dim).prop_map(move |m| m.scale(0.3).add(&Matrix::scalar(dim, 1.0 + 0.5 * dim as f64)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(250))]

    #[test]
    fn f_l_is_convex(((x, y), lambda) in (spd_pair(), 0.0f64..=1.0)) {
        let mix = SpdMatrix::new(x.matrix().scale(lambda).add(&y.matrix().scale(1.0 - lambda))).unwrap();
        let lhs = lambda * f_l(&x).unwrap() + (1.0 - lambda) * f_l(&y).unwrap();
        prop_assert!(lhs >= f_l(&mix).unwrap() - 1e-9);
    }

    #[test]
    fn f_l_is_spectral(s in spd_any()) {
        let e = s.eigen();
        let direct: f64 = e.eigenvalues.iter().map(|&v| f_1(v)).sum();
        prop_assert!((f_l(&s).unwrap() - direct).abs() <= 1e-9 * (1.0 + direct.abs()));
        prop_assert!(f_l(&s).unwrap() >= -1e-12);
    }

    #[test]
    fn f_l_scalar_and_diagonal(d in prop::collection::vec(0.05f64..20.0, 1..=4), alpha in 0.05f64..20.0) {
        let l = d.len();
        let scalar = f_l(&SpdMatrix::scalar(l, alpha).unwrap()).unwrap();
        prop_assert!((scalar - l as f64 * f_1(alpha)).abs() <= 1e-12 * (1.0 + scalar.abs()));
        let diag = f_l(&SpdMatrix::diag(&d).unwrap()).unwrap();
        let sum: f64 = d.iter().map(|&x| f_1(x)).sum();
        prop_assert!((diag - sum).abs() <= 1e-12 * (1.0 + sum.abs()));
    }

    #[test]
    fn f_pair_vanishes_on_diagonal(s in spd_any()) {
        prop_assert!(f_l_pair(&s, &s).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn kl_gaussian_nonnegative_and_mean_free((a, b) in spd_pair(), shift in -2.0f64..2.0) {
        let l = a.dim();
        let p = GaussianLaw::new(vec![0.0; l], a.clone()).unwrap();
        let q = GaussianLaw::new(vec![shift; l], b.clone()).unwrap();
        prop_assert!(kl_gaussian(&p, &q).unwrap() >= -1e-12);
        let q0 = GaussianLaw::new(vec![0.0; l], b.clone()).unwrap();
        let mean_free = kl_gaussian(&p, &q0).unwrap();
        prop_assert!((mean_free - f_l_pair(&a, &b).unwrap()).abs() <= 1e-12 * (1.0 + mean_free.abs()));
        prop_assert!(kl_gaussian(&p, &p).unwrap().abs() <= 1e-10);
    }

    #[test]
    fn kl_restriction_is_monotone((a, b) in (2usize..=4).prop_flat_map(|d| (spd(d), spd(d))), keep in 1usize..=3) {
        let l = a.dim();
        let keep = keep.min(l - 1);
        let head = |s: &SpdMatrix| {
            let rows: Vec<Vec<f64>> = (0..keep).map(|i| (0..keep).map(|j| s.matrix()[(i, j)]).collect()).collect();
            SpdMatrix::from_rows(&rows).unwrap()
        };
        let joint = kl_gaussian(&GaussianLaw::new(vec![0.0; l], a.clone()).unwrap(), &GaussianLaw::new(vec![0.5; l], b.clone()).unwrap()).unwrap();
        let marginal = kl_gaussian(&GaussianLaw::new(vec![0.0; keep], head(&a)).unwrap(), &GaussianLaw::new(vec![0.5; keep], head(&b)).unwrap()).unwrap();
        prop_assert!(marginal <= joint + 1e-10 * (1.0 + joint));
    }

    #[test]
    fn gbm_pair_oracle_is_f_pair((g1, g2) in (1usize..=3).prop_flat_map(|d| (nonsingular(d), nonsingular(d)))) {
        let h = h_gbm_vs_gbm(&g1, &g2).unwrap().value.to_f64();
        let f = f_l_pair(&SpdMatrix::gram(&g1).unwrap(), &SpdMatrix::gram(&g2).unwrap()).unwrap();
        prop_assert!((h - f).abs() <= 1e-12 * (1.0 + f.abs()));
        prop_assert!(h >= -1e-12);
        prop_assert!(h_gbm_vs_gbm(&g1, &g1).unwrap().value.to_f64().abs() <= 1e-12);
    }

    #[test]
    fn gbm_oracle_decouples_on_diagonals(g in prop::collection::vec(0.1f64..1.5, 1..=4)) {
        let whole = h_gbm_vs_bm(&Matrix::from_diag(&g)).unwrap().value.to_f64();
        let parts: f64 = g.iter().map(|&x| h_gbm_vs_bm(&Matrix::scalar(1, x)).unwrap().value.to_f64()).sum();
        prop_assert!((whole - parts).abs() <= 1e-12 * (1.0 + parts.abs()));
    }

    #[test]
    fn model_json_round_trips(a in spd(2), g in nonsingular(2), base in 0.5f64..2.0, amp in 0.0f64..0.4, n in 1u32..8) {
        let models = vec![
            ModelSpec::scaled_brownian(a.matrix().clone()),
            ModelSpec::gaussian_martingale(vec![0.0, 0.5, 1.0], vec![a.clone(), SpdMatrix::identity(2)]).unwrap(),
            ModelSpec::black_scholes(g.clone()),
            ModelSpec::sde(2, Volatility::sin_state(base, amp)).unwrap(),
            ModelSpec::delayed(2, n, Volatility::Frozen { n, inner: Box::new(Volatility::sin_state(base, amp)) }).unwrap(),
            ModelSpec::product(vec![ModelSpec::black_scholes(Matrix::scalar(1, base)), ModelSpec::brownian(1)]).unwrap(),
        ];
        for m in models {
            let back = ModelSpec::from_json(&m.to_json().unwrap()).unwrap();
            prop_assert_eq!(back, m);
        }
    }

    #[test]
    fn analytic_entropy_is_monotone_under_restriction(g in 0.2f64..1.5, sigma in 0.3f64..3.0, k in 0u32..5) {
        let n = 1usize << k;
        for q in [ModelSpec::black_scholes(Matrix::scalar(1, g)), ModelSpec::scaled_brownian(Matrix::scalar(1, sigma))] {
            let pair = ModelPair::new(q, ModelSpec::brownian(1)).unwrap();
            let coarse = restricted_entropy_analytic(&pair, n).unwrap().to_f64();
            let fine = restricted_entropy_analytic(&pair, 2 * n).unwrap().to_f64();
            prop_assert!(coarse >= -1e-12);
            prop_assert!(coarse <= fine + 1e-10 * (1.0 + fine));
        }
    }
}
