//! Built-in verification suite: one check per acceptance criterion, each
//! comparing estimators against closed forms computed independently here.

use std::fmt::Write as _;
use std::time::Instant;

use mart_entropy::grid_entropy::{
    entropy_curve, gaussian_projection_bound, restricted_entropy_analytic, restricted_entropy_mc, CurveMethod,
    ModelPair, PROJECTION_INNER_DRAWS,
};
use mart_entropy::models::{realized_qv_density, ModelSpec, Volatility};
use mart_entropy::oracles::{h_gaussian_martingale, h_gbm_vs_bm, h_scaled_bm};
use mart_entropy::rng::PathRng;
use mart_entropy::specific_entropy::{estimate_h, gap_report, EstimateOptions, Verdict};
use mart_entropy::spdlinalg::{f_1, f_l, f_l_pair};
use mart_entropy::{Execution, Matrix, McConfig, SpdMatrix};

use crate::commands;
use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    /// Reduced path counts; about a minute on one core.
    Quick,
    /// Path counts and tolerances of the acceptance criteria.
    Full,
}

/// Deliberate corruption used to test the harness itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Fault {
    /// Shifts the Black-Scholes-vs-Brownian closed form by 0.05.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    pub suite: Suite,
    pub seed: u64,
    pub fault: Option<Fault>,
}

impl VerifyOptions {
    pub fn new(suite: Suite, seed: u64) -> Self {
        Self { suite, seed, fault: None }
    }
}

struct Budget {
    mc_paths: usize,
    sde_paths: usize,
    property_cases: usize,
    qv_paths: usize,
    determinism_paths: usize,
}

impl Budget {
    fn of(suite: Suite) -> Self {
        match suite {
            Suite::Quick => Budget {
                mc_paths: 20_000,
                sde_paths: 4_000,
                property_cases: 200,
                qv_paths: 200,
                determinism_paths: 2_500,
            },
            Suite::Full => Budget {
                mc_paths: 100_000,
                sde_paths: 20_000,
                property_cases: 1_000,
                qv_paths: 1_000,
                determinism_paths: 5_000,
            },
        }
    }
}

/// One comparison inside a criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct SubCheck {
    pub label: String,
    pub expected: String,
    pub observed: String,
    pub tolerance: String,
    pub passed: bool,
}

fn approx(label: impl Into<String>, expected: f64, observed: f64, tol: f64) -> SubCheck {
    SubCheck {
        label: label.into(),
        expected: format!("{expected:.10}"),
        observed: format!("{observed:.10}"),
        tolerance: format!("{tol:.2e}"),
        passed: (observed - expected).abs() <= tol,
    }
}

fn at_least(label: impl Into<String>, lower: f64, observed: f64, slack: f64) -> SubCheck {
    SubCheck {
        label: label.into(),
        expected: format!(">= {lower:.10}"),
        observed: format!("{observed:.10}"),
        tolerance: format!("{slack:.2e}"),
        passed: observed >= lower - slack,
    }
}

fn at_most(label: impl Into<String>, upper: f64, observed: f64, slack: f64) -> SubCheck {
    SubCheck {
        label: label.into(),
        expected: format!("<= {upper:.10}"),
        observed: format!("{observed:.10}"),
        tolerance: format!("{slack:.2e}"),
        passed: observed <= upper + slack,
    }
}

fn flag(label: impl Into<String>, expected: &str, observed: impl Into<String>, passed: bool) -> SubCheck {
    SubCheck { label: label.into(), expected: expected.into(), observed: observed.into(), tolerance: "-".into(), passed }
}

fn verdict(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
        Verdict::NotApplicable => "not_applicable",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub seconds: f64,
    pub budget_seconds: f64,
    pub subchecks: Vec<SubCheck>,
}

/// `(id, name, runtime budget in seconds)` for every criterion.
pub const CRITERIA: [(u8, &str, f64); 11] = [
    (1, "scaled-brownian closed form", 1.0),
    (2, "gaussian-martingale supremum", 1.0),
    (3, "black-scholes vs brownian", 120.0),
    (4, "black-scholes vs black-scholes", 180.0),
    (5, "gantert inequality", 600.0),
    (6, "gantert equality cases", 600.0),
    (7, "tensorization", 300.0),
    (8, "f_l properties", 5.0),
    (9, "gaussian projection bound", 120.0),
    (10, "realized qv consistency", 60.0),
    (11, "determinism across workers", 600.0),
];

type CheckResult = Result<Vec<SubCheck>, mart_entropy::Error>;

fn bm(l: usize) -> ModelSpec {
    ModelSpec::brownian(l)
}

/// Brownian reference from the same start as `q`.
fn bm_like(q: &ModelSpec) -> ModelSpec {
    ModelSpec::brownian(q.dim()).with_x0(q.x0().to_vec()).expect("valid start")
}

fn frozen_sin(n: u32) -> ModelSpec {
    ModelSpec::delayed(1, n, Volatility::Frozen { n, inner: Box::new(Volatility::sin_state(1.0, 0.5)) })
        .expect("valid delayed model")
}

fn three_piece_gm() -> ModelSpec {
    ModelSpec::gaussian_martingale(
        vec![0.0, 0.25, 0.5, 1.0],
        vec![
            SpdMatrix::diag(&[2.0, 0.5]).unwrap(),
            SpdMatrix::from_rows(&[vec![1.0, 0.3], vec![0.3, 0.8]]).unwrap(),
            SpdMatrix::scalar(2, 1.5).unwrap(),
        ],
    )
    .expect("valid gaussian martingale")
}

fn analytic_opts(seed: u64) -> EstimateOptions {
    EstimateOptions { method: CurveMethod::Analytic, seed, ..Default::default() }
}

fn check_scaled_bm(_: &Budget, seed: u64) -> CheckResult {
    let mut subs = Vec::new();
    let levels = [2, 4, 8, 16, 32];
    for l in 1..=3 {
        let expected = 0.5 * l as f64 * (4.0 - 1.0 - 4f64.ln());
        let pair = ModelPair::new(ModelSpec::scaled_brownian(Matrix::scalar(l, 2.0)), bm(l))?;
        let e = estimate_h(&pair, &levels, &analytic_opts(seed))?;
        let worst = e
            .curve
            .points
            .iter()
            .map(|p| p.value.to_f64() / p.level as f64)
            .chain([e.h_hat.to_f64()])
            .max_by(|a, b| (a - expected).abs().total_cmp(&(b - expected).abs()))
            .unwrap();
        subs.push(approx(format!("l={l} worst of value/n and h_hat"), expected, worst, 1e-12));
        subs.push(approx(format!("l={l} oracle"), expected, h_scaled_bm(2.0, 1.0, l)?.value.to_f64(), 1e-12));
    }
    Ok(subs)
}

fn check_gaussian_martingale(_: &Budget, seed: u64) -> CheckResult {
    let q = three_piece_gm();
    let pair = ModelPair::new(q.clone(), bm(2))?;
    let levels: Vec<usize> = (0..=10).map(|k| 1 << k).collect();
    let curve = entropy_curve(&pair, &levels, CurveMethod::Analytic, None, seed, Execution::default())?;
    let per: Vec<f64> = curve.points.iter().map(|p| p.value.to_f64() / p.level as f64).collect();
    let drops = per.windows(2).filter(|w| w[1] < w[0] - 1e-12).count();
    // ∫ F_l(G) ds evaluated piecewise by hand
    let (b, g) = q.deterministic_pieces().unwrap();
    let direct: f64 = g.iter().zip(b.windows(2)).map(|(v, w)| (w[1] - w[0]) * f_l(v).unwrap()).sum();
    let oracle = h_gaussian_martingale(&b, &g)?.value.to_f64();
    Ok(vec![
        flag("value/n nondecreasing over n=1..1024", "0 decreases", format!("{drops} decreases"), drops == 0),
        approx("oracle vs direct integral", direct, oracle, 1e-12),
        approx("value/n at n=1024", oracle, *per.last().unwrap(), 1e-9),
    ])
}

fn check_gbm_vs_bm(budget: &Budget, seed: u64, fault: Option<Fault>) -> CheckResult {
    let q = ModelSpec::black_scholes(Matrix::scalar(1, 1.0));
    let pair = ModelPair::new(q.clone(), bm_like(&q))?;
    let mut oracle = 0.5 * (1f64.exp() - 1.5);
    if fault == Some(Fault::Oracle) {
        oracle += 0.05;
    }
    let from_lib = h_gbm_vs_bm(&Matrix::scalar(1, 1.0))?.value.to_f64();
    let at_256 = restricted_entropy_analytic(&pair, 256)?.to_f64() / 256.0;
    let analytic_4 = restricted_entropy_analytic(&pair, 4)?.to_f64();
    let mc = restricted_entropy_mc(&pair, 4, &McConfig::new(budget.mc_paths, seed))?;
    Ok(vec![
        approx("closed form", oracle, from_lib, 1e-12),
        approx("(a) value/n at n=256, relative gap", 0.0, (at_256 - oracle) / oracle, 0.02),
        approx(format!("(b) chain rule at n=4, {} paths", budget.mc_paths), analytic_4, mc.value.to_f64(), 3.0 * mc.stderr),
    ])
}

/// Nonsingular `l × l` matrix drawn from `rng`.
fn random_gamma(rng: &mut PathRng, l: usize) -> Matrix {
    let mut m = Matrix::identity(l);
    for i in 0..l {
        for j in 0..l {
            m[(i, j)] += 0.3 * rng.normal();
        }
    }
    m
}

fn check_gbm_vs_gbm(budget: &Budget, seed: u64) -> CheckResult {
    let mut rng = PathRng::new(seed, 0x6762);
    let mut g = random_gamma(&mut rng, 2);
    while g.det().abs() < 0.2 {
        g = random_gamma(&mut rng, 2);
    }
    let pairs = [
        ("(1,2), l=1", Matrix::scalar(1, 1.0), Matrix::scalar(1, 2.0)),
        ("random 2x2", g, Matrix::from_rows(&[vec![0.9, 0.0], vec![0.2, 1.1]]).unwrap()),
    ];
    let mut subs = Vec::new();
    for (label, g1, g2) in pairs {
        // f_pair by hand: ½(tr(S₂⁻¹S₁) − l − log det S₁ + log det S₂)
        let (s1, s2) = (g1.gram(), g2.gram());
        let l = s1.dim() as f64;
        let inv = s2.inverse().expect("nonsingular");
        let oracle = 0.5 * (inv.matmul(&s1).trace() - l - s1.det().ln() + s2.det().ln());
        let pair = ModelPair::new(ModelSpec::black_scholes(g1), ModelSpec::black_scholes(g2))?;
        let opts = EstimateOptions { method: CurveMethod::Mc, paths: Some(budget.mc_paths), seed, ..Default::default() };
        let e = estimate_h(&pair, &[2, 4, 8], &opts)?;
        let tol = (3.0 * e.h_hat_stderr).max(1e-9 * (1.0 + oracle.abs()));
        subs.push(approx(format!("{label}: h_hat"), oracle, e.h_hat.to_f64(), tol));
    }
    Ok(subs)
}

/// `(name, model, levels, paths, time steps)` of the Gantert catalog.
type CatalogEntry = (&'static str, ModelSpec, Vec<usize>, Option<usize>, usize);

fn catalog(budget: &Budget) -> Vec<CatalogEntry> {
    let analytic = vec![16, 32, 64, 128, 256];
    vec![
        ("brownian", bm(1), analytic.clone(), None, 256),
        ("gaussian martingale", three_piece_gm(), analytic.clone(), None, 256),
        ("black-scholes", ModelSpec::black_scholes(Matrix::scalar(1, 1.0)), analytic, None, 256),
        ("delayed frozen", frozen_sin(4), vec![4, 8, 16], Some(budget.mc_paths), 64),
        (
            "sde sin",
            ModelSpec::sde(1, Volatility::sin_state(1.0, 0.5)).unwrap(),
            vec![4, 8, 16],
            Some(budget.sde_paths),
            256,
        ),
    ]
}

fn check_inequality(budget: &Budget, seed: u64) -> CheckResult {
    let mut subs = Vec::new();
    for (name, q, levels, paths, m) in catalog(budget) {
        let pair = ModelPair::new(q.clone(), bm_like(&q))?;
        let opts = EstimateOptions { paths, seed, ..Default::default() };
        let r = gap_report(&pair, &levels, &opts, m)?;
        let mut s = at_least(name, r.gantert_bound.to_f64(), r.h_hat.to_f64(), 3.0 * r.combined_stderr + 1e-9);
        s.passed = r.verdicts.inequality == Verdict::Pass;
        subs.push(s);
    }
    Ok(subs)
}

fn check_equality(budget: &Budget, seed: u64) -> CheckResult {
    let mut subs = Vec::new();
    for (name, q, levels, paths, m) in catalog(budget).into_iter().filter(|c| !matches!(c.0, "brownian" | "sde sin")) {
        let pair = ModelPair::new(q.clone(), bm_like(&q))?;
        let opts = EstimateOptions { paths, seed, ..Default::default() };
        let r = gap_report(&pair, &levels, &opts, m)?;
        let tol = 3.0 * r.combined_stderr + r.fit.map_or(0.0, |f| f.residual);
        let mut s = approx(name, r.gantert_bound.to_f64(), r.h_hat.to_f64(), tol + 1e-9);
        s.passed = r.verdicts.equality == Verdict::Pass;
        s.observed = format!("{} ({})", s.observed, verdict(r.verdicts.equality));
        subs.push(s);
    }
    Ok(subs)
}

fn check_tensorization(_: &Budget, seed: u64) -> CheckResult {
    let opts = analytic_opts(seed);
    let levels = [16, 32, 64, 128];
    let gbm = || ModelSpec::black_scholes(Matrix::scalar(1, 1.0));
    let single = ModelPair::new(gbm(), bm_like(&gbm()))?;
    let prod = ModelSpec::product(vec![gbm(), gbm()])?;
    let double = ModelPair::new(prod.clone(), bm_like(&prod))?;
    let h1 = estimate_h(&single, &levels, &opts)?.h_hat.to_f64();
    let h2 = estimate_h(&double, &levels, &opts)?.h_hat.to_f64();

    let q = ModelSpec::black_scholes(Matrix::from_rows(&[vec![0.8, 0.0], vec![0.5, 0.6]]).unwrap());
    let joint = estimate_h(&ModelPair::new(q.clone(), bm_like(&q))?, &levels, &opts)?;
    let mut parts = 0.0;
    let mut se = joint.h_hat_stderr.powi(2);
    for i in 0..2 {
        let m = q.coordinate_marginal(i)?;
        let e = estimate_h(&ModelPair::new(m.clone(), bm_like(&m))?, &levels, &opts)?;
        parts += e.h_hat.to_f64();
        se += e.h_hat_stderr.powi(2);
    }
    Ok(vec![
        approx("iid product: h_hat vs 2 h_1", 2.0 * h1, h2, 1e-12 * (1.0 + h2)),
        at_least("correlated Q: h_hat vs sum of marginals", parts, joint.h_hat.to_f64(), 3.0 * se.sqrt() + 1e-12),
    ])
}

fn random_spd(rng: &mut PathRng, l: usize) -> SpdMatrix {
    let mut a = Matrix::zeros(l);
    for i in 0..l {
        for j in 0..l {
            a[(i, j)] = rng.normal();
        }
    }
    SpdMatrix::new(a.gram().add(&Matrix::scalar(l, 0.05))).expect("spd by construction")
}

fn check_f_l(budget: &Budget, seed: u64) -> CheckResult {
    let (mut convex, mut spectral, mut scalar, mut diagonal, mut pair) = (0, 0, 0, 0, 0);
    for case in 0..budget.property_cases {
        let mut rng = PathRng::new(seed, case as u64);
        let l = 1 + case % 4;
        let (x, y) = (random_spd(&mut rng, l), random_spd(&mut rng, l));
        let lambda = rng.uniform();
        let mix = SpdMatrix::new(x.matrix().scale(lambda).add(&y.matrix().scale(1.0 - lambda)))?;
        if lambda * f_l(&x)? + (1.0 - lambda) * f_l(&y)? < f_l(&mix)? - 1e-9 {
            convex += 1;
        }
        let by_eigen: f64 = x.eigen().eigenvalues.iter().map(|&v| f_1(v)).sum();
        if (f_l(&x)? - by_eigen).abs() > 1e-9 * (1.0 + by_eigen.abs()) {
            spectral += 1;
        }
        let alpha = 0.05 + 5.0 * rng.uniform();
        let s = f_l(&SpdMatrix::scalar(l, alpha)?)?;
        if (s - l as f64 * f_1(alpha)).abs() > 1e-12 * (1.0 + s.abs()) {
            scalar += 1;
        }
        let d: Vec<f64> = (0..l).map(|_| 0.05 + 5.0 * rng.uniform()).collect();
        let dv = f_l(&SpdMatrix::diag(&d)?)?;
        let sum: f64 = d.iter().map(|&v| f_1(v)).sum();
        if (dv - sum).abs() > 1e-12 * (1.0 + sum.abs()) {
            diagonal += 1;
        }
        if f_l_pair(&x, &x)?.abs() > 1e-12 {
            pair += 1;
        }
    }
    let n = budget.property_cases;
    let line = |label: &str, fails: usize| {
        flag(format!("{label} ({n} cases)"), "0 failures", format!("{fails} failures"), fails == 0)
    };
    Ok(vec![
        line("convexity", convex),
        line("spectral identity", spectral),
        line("scalar identity", scalar),
        line("diagonal identity", diagonal),
        line("f_pair(S,S) = 0", pair),
    ])
}

fn check_projection(budget: &Budget, seed: u64) -> CheckResult {
    let cfg = McConfig::new(budget.mc_paths / 5, seed);
    let gbm = ModelSpec::black_scholes(Matrix::scalar(1, 1.0));
    let exact = restricted_entropy_analytic(&ModelPair::new(gbm.clone(), bm_like(&gbm))?, 8)?.to_f64();
    let b = gaussian_projection_bound(&gbm, 8, &cfg, PROJECTION_INNER_DRAWS)?;
    let gm = three_piece_gm();
    let exact_gm = restricted_entropy_analytic(&ModelPair::new(gm.clone(), bm(2))?, 8)?.to_f64();
    let bg = gaussian_projection_bound(&gm, 8, &cfg, PROJECTION_INNER_DRAWS)?;
    Ok(vec![
        at_most("black-scholes n=8: bound vs H", exact, b.value.to_f64(), 3.0 * b.stderr),
        approx("gaussian martingale n=8: bound vs H", exact_gm, bg.value.to_f64(), 3.0 * bg.stderr + 1e-12),
    ])
}

fn check_qv(budget: &Budget, seed: u64) -> CheckResult {
    let sigma: f64 = 1.5;
    let (m, n) = (1 << 12, 8);
    let model = ModelSpec::scaled_brownian(Matrix::scalar(2, sigma));
    let ens = model.simulate(m, budget.qv_paths, seed, Execution::default())?;
    let target = Matrix::scalar(2, sigma * sigma);
    let tol = 10.0 * sigma * sigma * (n as f64 / m as f64).sqrt();
    let mut good = 0;
    for i in 0..ens.count {
        let track = realized_qv_density(&ens.view(i), n)?;
        if track.values.iter().all(|v| v.matrix().sub(&target).frobenius() <= tol) {
            good += 1;
        }
    }
    let frac = good as f64 / ens.count as f64;
    Ok(vec![at_least(format!("fraction of {} paths within {tol:.3}", ens.count), 0.95, frac, 0.0)])
}

fn render_with_threads(threads: usize, cfg: &RunConfig, cmd: &str) -> Result<Vec<u8>, CliError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool");
    pool.install(|| {
        let a = match cmd {
            "simulate" => commands::simulate(cfg, None),
            "curve" => commands::curve(cfg, None),
            _ => commands::report(cfg, None),
        }?;
        let mut bytes = a.main;
        bytes.extend(a.sidecar.unwrap_or_default());
        Ok(bytes)
    })
}

fn check_determinism(budget: &Budget, seed: u64) -> Result<Vec<SubCheck>, CliError> {
    let sde = r#"{"family":"SdeMartingale","dim":1,"parameters":{"sigma":{"kind":"sin_state","base":1.0,"amplitude":0.5},"substeps":8}}"#;
    let delayed = r#"{"family":"DelayedVolatility","dim":1,"parameters":{"n":4,"rule":{"kind":"frozen","n":4,"inner":{"kind":"sin_state","base":1.0,"amplitude":0.5}}}}"#;
    let bm = r#"{"family":"ScaledBrownian","dim":1,"parameters":{"a":[[1.0]]}}"#;
    let p = budget.determinism_paths;
    let jobs = [
        ("simulate", format!(r#"{{"model": {sde}, "levels": [8], "paths": {p}, "seed": {seed}}}"#)),
        ("curve", format!(r#"{{"pair": {{"q": {delayed}, "p": {bm}}}, "levels": [4, 8], "paths": {p}, "seed": {seed}}}"#)),
        (
            "report",
            format!(r#"{{"pair": {{"q": {delayed}, "p": {bm}}}, "levels": [4, 8, 16], "paths": {p}, "seed": {seed}, "time_steps": 16}}"#),
        ),
    ];
    let mut subs = Vec::new();
    for (cmd, text) in jobs {
        let cfg = RunConfig::parse(&text)?;
        let runs = [
            render_with_threads(1, &cfg, cmd)?,
            render_with_threads(8, &cfg, cmd)?,
            render_with_threads(1, &cfg, cmd)?,
            render_with_threads(8, &cfg, cmd)?,
        ];
        let same = runs.iter().all(|r| *r == runs[0]);
        subs.push(flag(
            format!("{cmd}: 1 vs 8 workers, rerun"),
            "byte-identical",
            if same { "byte-identical".to_string() } else { "outputs differ".to_string() },
            same,
        ));
    }
    Ok(subs)
}

/// Runs criterion `id` (1 to 11).
pub fn run_check(id: u8, opts: &VerifyOptions) -> CheckOutcome {
    let (_, name, budget_seconds) = *CRITERIA.iter().find(|c| c.0 == id).expect("criterion id in 1..=11");
    let budget = Budget::of(opts.suite);
    let seed = opts.seed;
    let start = Instant::now();
    let result: Result<Vec<SubCheck>, CliError> = match id {
        1 => check_scaled_bm(&budget, seed).map_err(Into::into),
        2 => check_gaussian_martingale(&budget, seed).map_err(Into::into),
        3 => check_gbm_vs_bm(&budget, seed, opts.fault).map_err(Into::into),
        4 => check_gbm_vs_gbm(&budget, seed).map_err(Into::into),
        5 => check_inequality(&budget, seed).map_err(Into::into),
        6 => check_equality(&budget, seed).map_err(Into::into),
        7 => check_tensorization(&budget, seed).map_err(Into::into),
        8 => check_f_l(&budget, seed).map_err(Into::into),
        9 => check_projection(&budget, seed).map_err(Into::into),
        10 => check_qv(&budget, seed).map_err(Into::into),
        _ => check_determinism(&budget, seed),
    };
    let seconds = start.elapsed().as_secs_f64();
    let mut subchecks = result.unwrap_or_else(|e| vec![flag("evaluation", "no error", e.to_string(), false)]);
    if opts.suite == Suite::Full {
        subchecks.push(at_most("runtime seconds", budget_seconds, seconds, 0.0));
    }
    let passed = subchecks.iter().all(|s| s.passed);
    CheckOutcome { id, name, passed, seconds, budget_seconds, subchecks }
}

pub fn run_suite(opts: &VerifyOptions) -> Vec<CheckOutcome> {
    CRITERIA.iter().map(|c| run_check(c.0, opts)).collect()
}

/// One summary line per criterion followed by its comparisons.
pub fn render_table(outcomes: &[CheckOutcome]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<3} {:<44} {:<22} {:<28} {:<10} {:>8}  status",
        "id", "check", "expected", "observed", "tolerance", "seconds"
    );
    for o in outcomes {
        let _ = writeln!(
            out,
            "{:<3} {:<44} {:<22} {:<28} {:<10} {:>8.2}  {}",
            o.id,
            o.name,
            "",
            "",
            "",
            o.seconds,
            if o.passed { "PASS" } else { "FAIL" }
        );
        for s in &o.subchecks {
            let _ = writeln!(
                out,
                "    {:<44} {:<22} {:<28} {:<10} {:>8}  {}",
                s.label,
                s.expected,
                s.observed,
                s.tolerance,
                "",
                if s.passed { "ok" } else { "FAIL" }
            );
        }
    }
    out
}

/// Error naming the failed criteria, if any.
pub fn failures(outcomes: &[CheckOutcome]) -> Option<CliError> {
    let failed: Vec<String> = outcomes.iter().filter(|o| !o.passed).map(|o| format!("{} {}", o.id, o.name)).collect();
    (!failed.is_empty()).then_some(CliError::VerifyFailed(failed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cheap_checks_pass() {
        let opts = VerifyOptions::new(Suite::Quick, 0);
        for id in [1, 2, 7, 8] {
            let o = run_check(id, &opts);
            assert!(o.passed, "{}", render_table(&[o]));
        }
    }

    #[test]
    fn injected_fault_is_caught() {
        let opts = VerifyOptions { suite: Suite::Quick, seed: 0, fault: Some(Fault::Oracle) };
        let o = run_check(3, &opts);
        assert!(!o.passed);
        let err = failures(&[o]).unwrap();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("3 black-scholes vs brownian"));
    }
}
