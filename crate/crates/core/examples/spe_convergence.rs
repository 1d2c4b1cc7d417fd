//! Stochastic positional features converging to their ideal covariance.

use stripes::spe::{covariance_stats, rff_attention, spe_attention, SffConfig};
use stripes::{exact_attention, make_params, InitScheme, Method, Pooling, PositionalIndexSequence, QkMatrices};

fn main() -> stripes::Result<()> {
    let (t, dim) = (16, 8);
    let qk = QkMatrices::random_unit(t, t, dim, 2);
    let pos = PositionalIndexSequence::time(t);
    let params = make_params(Method::FStripe1, dim, 1, InitScheme::ExponentialShared, 100.0, 0)?;

    let ideal = rff_attention(&qk, &pos, &pos, &SffConfig::from_params(&params, 1, 0)?)?;
    let exact = exact_attention(Method::FStripe1, &qk, &pos, &pos, &params)?;
    println!("R → ∞ limit vs exact fstripe1: {:.2e}", ideal.max_abs_diff(&exact));

    println!("\n{:>6} {:>12}", "R", "std(score)");
    for r in [16, 32, 64, 128, 256, 512] {
        let mut sq = 0.0;
        let seeds = 64;
        for seed in 0..seeds {
            let cfg = SffConfig::from_params(&params, r, seed)?;
            let est = spe_attention(&qk, &pos, &pos, &cfg, Pooling::Unpooled)?;
            sq += (&est.values - &ideal.values).mapv(|v| v * v).mean().unwrap_or(0.0);
        }
        println!("{r:>6} {:>12.5}", (sq / seeds as f64).sqrt());
    }

    let samples = covariance_stats(10_000, 1000, 0)?;
    let n = samples.len() as f64;
    let mean_alpha = samples.iter().map(|s| s.alpha).sum::<f64>() / n;
    let mean_beta = samples.iter().map(|s| s.beta).sum::<f64>() / n;
    let var = |f: &dyn Fn(&stripes::spe::CovarianceSample) -> f64, m: f64| samples.iter().map(|s| (f(s) - m).powi(2)).sum::<f64>() / (n - 1.0);
    println!("\nR = 10000: mean α {mean_alpha:.4}, mean β {mean_beta:+.5}");
    println!("std α {:.5} (√(2/R) = {:.5}), std β {:.5} (√(1/R) = {:.5})",
        var(&|s| s.alpha, mean_alpha).sqrt(), (2.0f64 / 1e4).sqrt(), var(&|s| s.beta, mean_beta).sqrt(), (1.0f64 / 1e4).sqrt());
    Ok(())
}
