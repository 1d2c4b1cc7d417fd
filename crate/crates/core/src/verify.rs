//! Randomized equivalence and invariant suites behind `stripes verify`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{gram_matrix, pd_check, pd_witness_search, KernelSample, SearchTarget, WitnessSearch};
use crate::linear::{linear_path, quadratic_path, AttentionSpec, FeatureMap};
use crate::oracle::{canonical_attention, exact_attention, frequency_gradient, positional_matrix_rff};
use crate::params::{max_abs_diff, Method, PeParams, PositionalIndexSequence, QkMatrices};
use crate::rng::{stream_id, SeededRng};
use crate::toy::{mirror_asymmetry, random_toy_inputs, toy_score, toy_score_consistency};
use crate::transform::transform_attention;

const INSTANCE_STREAM: u32 = 10;

/// A random attention problem with matching parameters.
#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub qk: QkMatrices,
    pub p_q: PositionalIndexSequence,
    pub p_k: PositionalIndexSequence,
    pub params: PeParams,
}

/// Bounds for [`random_instance`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceShape {
    pub max_t: usize,
    pub max_dim: usize,
    pub max_pos_dim: usize,
    pub position_range: f64,
}

impl Default for InstanceShape {
    fn default() -> Self {
        InstanceShape { max_t: 32, max_dim: 16, max_pos_dim: 3, position_range: 10.0 }
    }
}

fn draw_count(rng: &mut SeededRng, lo: usize, hi: usize) -> usize {
    lo + ((rng.uniform() * (hi - lo + 1) as f64) as usize).min(hi - lo)
}

/// Unit-scale content, random frequencies in (0, 1], gains in [0.5, 1.5] and phases in [-π, π).
pub fn random_instance(method: Method, shape: InstanceShape, seed: u64, index: u64) -> Result<RandomInstance> {
    let mut rng = SeededRng::new(seed, stream_id(INSTANCE_STREAM, index));
    let t_q = draw_count(&mut rng, 1, shape.max_t);
    let t_k = draw_count(&mut rng, 1, shape.max_t);
    let dim = if method.is_pair_based() {
        2 * draw_count(&mut rng, 1, shape.max_dim / 2)
    } else {
        draw_count(&mut rng, 1, shape.max_dim)
    };
    let pos_dim = draw_count(&mut rng, 1, shape.max_pos_dim);
    let units = method.unit_count(dim);
    let frequencies = (0..units).map(|_| (0..pos_dim).map(|_| rng.uniform_open_closed()).collect()).collect();
    let gains = (0..units).map(|_| rng.uniform_range(0.5, 1.5)).collect();
    let phases = (0..units).map(|_| rng.uniform_range(-PI, PI)).collect();
    let params = PeParams::explicit(method, dim, frequencies, gains, phases)?;
    let mut positions = |t: usize| {
        let rows: Vec<Vec<f64>> =
            (0..t).map(|_| (0..pos_dim).map(|_| rng.uniform_range(0.0, shape.position_range)).collect()).collect();
        PositionalIndexSequence::vectors(&rows)
    };
    let p_q = positions(t_q)?;
    let p_k = positions(t_k)?;
    let mut draw = |rows: usize| Array2::from_shape_fn((rows, dim), |_| rng.uniform_range(-1.0, 1.0));
    let qk = QkMatrices::new(draw(t_q), draw(t_k))?;
    Ok(RandomInstance { qk, p_q, p_k, params })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    /// Largest observed error against the suite's reference.
    pub max_error: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl SuiteResult {
    fn bounded(name: &str, max_error: f64, tolerance: f64, detail: String) -> Self {
        SuiteResult { name: name.into(), passed: max_error <= tolerance, max_error, tolerance, detail }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Random instances per suite and method.
    pub trials: usize,
    /// Method inspected by the PD witness search.
    pub pd_method: Method,
    pub pd_budget: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { seed: 0, trials: 50, pd_method: Method::Rope, pd_budget: 2000 }
    }
}

pub const SUITES: [&str; 11] =
    ["refactor", "canonical", "pd", "mirror", "lag-shift", "toy", "and-gate", "spe", "linear", "gradient", "metrics-mi"];

pub fn run_suite(name: &str, cfg: &VerifyConfig) -> Result<SuiteResult> {
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    match name {
        "refactor" => refactor(cfg),
        "canonical" => canonical(cfg),
        "pd" => pd(cfg),
        "mirror" => mirror(cfg),
        "lag-shift" => lag_shift(cfg),
        "toy" => toy(cfg),
        "and-gate" => and_gate(cfg),
        "spe" => spe(cfg),
        "linear" => linear(cfg),
        "gradient" => gradient(cfg),
        "metrics-mi" => metrics_mi(),
        other => Err(Error::InvalidArgument(format!("unknown suite '{other}'; expected one of {}", SUITES.join(", ")))),
    }
}

fn small() -> InstanceShape {
    InstanceShape { max_t: 12, max_dim: 8, ..Default::default() }
}

fn refactor(cfg: &VerifyConfig) -> Result<SuiteResult> {
    let mut worst = 0.0f64;
    for method in Method::ALL {
        for i in 0..cfg.trials as u64 {
            let inst = random_instance(method, small(), cfg.seed, i)?;
            let exact = exact_attention(method, &inst.qk, &inst.p_q, &inst.p_k, &inst.params)?;
            let fast = transform_attention(&inst.qk, &inst.p_q, &inst.p_k, method, &inst.params, method.default_pooling())?;
            worst = worst.max(exact.max_abs_diff(&fast));
        }
    }
    Ok(SuiteResult::bounded("refactor", worst, 1e-12, "transform vs exact scores, all methods".into()))
}

fn canonical(cfg: &VerifyConfig) -> Result<SuiteResult> {
    let mut worst = 0.0f64;
    for i in 0..cfg.trials as u64 {
        let inst = random_instance(Method::FStripe1, small(), cfg.seed, i)?;
        let pmats = (0..inst.params.units())
            .map(|u| positional_matrix_rff(&inst.params, u, &inst.p_q, &inst.p_k))
            .collect::<Result<Vec<_>>>()?;
        let canon = canonical_attention(&inst.qk, &pmats)?;
        let exact = exact_attention(Method::FStripe1, &inst.qk, &inst.p_q, &inst.p_k, &inst.params)?;
        worst = worst.max(canon.max_abs_diff(&exact));
    }
    Ok(SuiteResult::bounded("canonical", worst, 1e-12, "canonical form vs exact F-StrIPE1".into()))
}

fn pd(cfg: &VerifyConfig) -> Result<SuiteResult> {
    let mut worst = 0.0f64;
    for i in 0..cfg.trials as u64 {
        let mut rng = SeededRng::new(cfg.seed, stream_id(INSTANCE_STREAM + 1, i));
        let samples: Vec<KernelSample> = (0..20)
            .map(|_| KernelSample { content: rng.gaussian_vec(4), position: vec![rng.uniform_range(0.0, 10.0)] })
            .collect();
        let freqs: Vec<f64> = (0..4).map(|_| rng.uniform_open_closed()).collect();
        let params = PeParams::with_scalar_frequencies(Method::FStripe1, 4, &freqs)?;
        let report = pd_check(&gram_matrix(Method::FStripe1, &samples, &params)?, 0.0)?;
        worst = worst.max(-report.min_eigenvalue / report.max_eigenvalue.abs().max(1.0));
    }
    let search = WitnessSearch::new(cfg.pd_method, 3, cfg.pd_budget, cfg.seed);
    let score = pd_witness_search(&search, SearchTarget::Score)?;
    let terms = pd_witness_search(&search, SearchTarget::Terms)?;
    let describe = |r: &crate::kernel::PdReport| match &r.witness {
        Some(w) => format!("witness at trial {} (min eig {:.3e})", w.trial, w.min_eigenvalue),
        None => format!("budget of {} exhausted", cfg.pd_budget),
    };
    let detail = format!(
        "F-StrIPE1 Grams PSD; {} score Gram: {}; {} tensor terms: {}",
        cfg.pd_method,
        describe(&score),
        cfg.pd_method,
        describe(&terms)
    );
    Ok(SuiteResult::bounded("pd", worst, 1e-8, detail))
}

fn mirror(cfg: &VerifyConfig) -> Result<SuiteResult> {
    let mut rng = SeededRng::new(cfg.seed, stream_id(INSTANCE_STREAM + 2, 0));
    let mut worst = 0.0f64;
    for _ in 0..cfg.trials * 20 {
        let args: Vec<f64> = (0..4).map(|_| rng.uniform_range(-PI, PI)).collect();
        let f = rng.uniform();
        for method in [Method::Rope, Method::FStripe1] {
            let (p, m) = mirror_asymmetry(method, args[0], args[1], args[2], args[3], f);
            worst = worst.max((p - m).abs());
        }
    }
    let (p, m) = mirror_asymmetry(Method::RopePool, FRAC_PI_4, FRAC_PI_2, 0.3, 0.3, 0.7);
    let mut res = SuiteResult::bounded("mirror", worst, 1e-12, format!("RoPEPool pinned witness gap {:.6}", (p - m).abs()));
    res.passed &= (p - m).abs() > 0.1;
    Ok(res)
}

/// Largest `|a(p + s) - a(p)|` when both query and key positions shift by `s`.
pub fn lag_shift_error(method: Method, inst: &RandomInstance, shift: f64) -> Result<f64> {
    let base = exact_attention(method, &inst.qk, &inst.p_q, &inst.p_k, &inst.params)?;
    let moved = exact_attention(method, &inst.qk, &inst.p_q.shifted(shift), &inst.p_k.shifted(shift), &inst.params)?;
    Ok(base.max_abs_diff(&moved))
}

fn lag_shift(cfg: &VerifyConfig) -> Result<SuiteResult> {
    let mut worst = 0.0f64;
    for method in [Method::Rope, Method::FStripe1] {
        for i in 0..cfg.trials as u64 {
            let inst = random_instance(method, small(), cfg.seed, i)?;
            worst = worst.max(lag_shift_error(method, &inst, 3.7)?);
        }
    }
    let gap = pinned_ropepool_lag_shift()?;
    let mut res = SuiteResult::bounded("lag-shift", worst, 1e-12, format!("RoPEPool pinned witness gap {gap:.6}"));
    res.passed &= gap > 0.1;
    Ok(res)
}

/// Score change of a fixed RoPEPool query/key pair when both positions move by 1.
pub fn pinned_ropepool_lag_shift() -> Result<f64> {
    let qk = QkMatrices::new(ndarray::array![[1.0, 0.0]], ndarray::array![[1.0, 0.0]])?;
    let params = PeParams::with_scalar_frequencies(Method::RopePool, 2, &[0.5])?;
    let inst = RandomInstance {
        qk,
        p_q: PositionalIndexSequence::scalars(&[0.0]),
        p_k: PositionalIndexSequence::scalars(&[1.0]),
        params,
    };
    lag_shift_error(Method::RopePool, &inst, 1.0)
}

fn toy(cfg: &VerifyConfig) -> Result<SuiteResult> {
    let inputs = random_toy_inputs(cfg.trials * 20, cfg.seed);
    let mut worst = 0.0f64;
    for method in Method::ALL {
        worst = worst.max(toy_score_consistency(method, &inputs)?);
    }
    Ok(SuiteResult::bounded("toy", worst, 1e-12, "closed-form toy scores vs exact oracle".into()))
}

fn and_gate(cfg: &VerifyConfig) -> Result<SuiteResult> {
    let mut worst = f64::NEG_INFINITY;
    for inp in random_toy_inputs(cfg.trials * 20, cfg.seed ^ 1) {
        let s = toy_score(Method::FStripe1, inp.psi_q, inp.xi_q, inp.psi_k, inp.xi_k, inp.f).abs();
        let bound = (inp.psi_q - inp.psi_k).cos().abs().min((inp.f * (inp.xi_q - inp.xi_k)).cos().abs());
        worst = worst.max(s - bound);
    }
    Ok(SuiteResult::bounded("and-gate", worst.max(0.0), 1e-12, "|score| minus min of the two cosines".into()))
}

fn spe(cfg: &VerifyConfig) -> Result<SuiteResult> {
    let r = 4096;
    let samples = crate::spe::covariance_stats(r, cfg.trials * 4, cfg.seed)?;
    let n = samples.len() as f64;
    let mean_alpha = samples.iter().map(|s| s.alpha).sum::<f64>() / n;
    let mean_beta = samples.iter().map(|s| s.beta).sum::<f64>() / n;
    // five standard errors of the means
    let err = ((mean_alpha - 1.0).abs() / (2.0 / r as f64 / n).sqrt()).max(mean_beta.abs() / (1.0 / r as f64 / n).sqrt());
    Ok(SuiteResult::bounded(
        "spe",
        err,
        5.0,
        format!("mean alpha {mean_alpha:.6}, mean beta {mean_beta:.2e}, in standard errors"),
    ))
}

fn linear(cfg: &VerifyConfig) -> Result<SuiteResult> {
    let mut worst = 0.0f64;
    for method in Method::ALL {
        for pooling in [crate::params::Pooling::Unpooled, crate::params::Pooling::Pooled] {
            if method.check_pooling(pooling).is_err() {
                continue;
            }
            for i in 0..cfg.trials as u64 {
                let inst = random_instance(method, small(), cfg.seed, i)?;
                let mut rng = SeededRng::new(cfg.seed, stream_id(INSTANCE_STREAM + 3, i));
                let v = Array2::from_shape_fn((inst.qk.k.nrows(), 3), |_| rng.gaussian());
                let spec = AttentionSpec { method, params: &inst.params, pooling, map: FeatureMap::PositiveShift };
                let a = linear_path(&inst.qk, &inst.p_q, &inst.p_k, &v, &spec)?;
                let b = quadratic_path(&inst.qk, &inst.p_q, &inst.p_k, &v, &spec)?;
                worst = worst.max(max_abs_diff(&a.y, &b.y));
            }
        }
    }
    Ok(SuiteResult::bounded("linear", worst, 1e-10, "linear vs quadratic path".into()))
}

/// Max `|analytic - central difference|` of `∂a/∂f` over every unit and component.
pub fn gradient_error(method: Method, inst: &RandomInstance, step: f64) -> Result<f64> {
    let mut worst = 0.0f64;
    for unit in 0..inst.params.units() {
        for c in 0..inst.params.pos_dim {
            let g = frequency_gradient(method, &inst.qk, &inst.p_q, &inst.p_k, &inst.params, unit, c)?;
            let mut plus = inst.params.clone();
            plus.frequencies[unit][c] += step;
            let mut minus = inst.params.clone();
            minus.frequencies[unit][c] -= step;
            let a = exact_attention(method, &inst.qk, &inst.p_q, &inst.p_k, &plus)?;
            let b = exact_attention(method, &inst.qk, &inst.p_q, &inst.p_k, &minus)?;
            let fd = (&a.values - &b.values) / (2.0 * step);
            worst = worst.max(max_abs_diff(&g, &fd));
        }
    }
    Ok(worst)
}

fn gradient(cfg: &VerifyConfig) -> Result<SuiteResult> {
    let shape = InstanceShape { max_t: 6, max_dim: 6, max_pos_dim: 2, position_range: 10.0 };
    let mut worst = 0.0f64;
    for method in Method::ALL {
        for i in 0..cfg.trials as u64 {
            worst = worst.max(gradient_error(method, &random_instance(method, shape, cfg.seed, i)?, 1e-5)?);
        }
    }
    Ok(SuiteResult::bounded("gradient", worst, 1e-6, "analytic vs central differences, step 1e-5".into()))
}

fn metrics_mi() -> Result<SuiteResult> {
    use crate::context::{mutual_information, LabeledEvents};
    use crate::metrics::{evaluate, ssmd};
    use crate::pianoroll::Pianoroll;
    let mut dense = Pianoroll::zeros(1, 4, 32)?;
    for t in 0..32 {
        dense.add_note(0, 60 + (t % 5) * 2, t, t + 1)?;
    }
    let b = evaluate(&dense, &dense)?;
    let identity_err = b.ssmd.abs().max((b.cs - 100.0).abs()).max((b.gs - 100.0).abs()).max(b.ndd.abs());
    let mut target = Pianoroll::zeros(1, 1, 4)?;
    target.add_note(0, 60, 0, 1)?;
    target.add_note(0, 66, 2, 3)?;
    let mut pred = Pianoroll::zeros(1, 1, 4)?;
    pred.add_note(0, 60, 0, 1)?;
    pred.add_note(0, 60, 2, 3)?;
    let ssmd_err = (ssmd(&target, &pred)? - 25.0).abs();
    let bijection = LabeledEvents { pairs: (0..1000).map(|i| ((i % 10) as u8, (i % 10) as u64)).collect() };
    let mi_err = (mutual_information(&bijection)? - 10f64.ln()).abs();
    Ok(SuiteResult::bounded(
        "metrics-mi",
        identity_err.max(ssmd_err).max(mi_err),
        1e-9,
        "identity bundle, 2x2 SSMD case, ln 10 bijection".into(),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub trials: usize,
    pub passed: bool,
    pub suites: Vec<SuiteResult>,
}

pub fn run_all(names: &[&str], cfg: &VerifyConfig) -> Result<VerifyReport> {
    let suites = names.iter().map(|n| run_suite(n, cfg)).collect::<Result<Vec<_>>>()?;
    Ok(VerifyReport { seed: cfg.seed, trials: cfg.trials, passed: suites.iter().all(|s| s.passed), suites })
}
