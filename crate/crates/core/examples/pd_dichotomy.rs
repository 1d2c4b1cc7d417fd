//! Positive definiteness of F-StrIPE₁, RoPE and RoPEPool score kernels.
//!
//! `cargo run --example pd_dichotomy -- [budget] [witness.json]`

use stripes::kernel::{gram_matrix, pd_check, pd_witness_search, tensor_terms, KernelSample, SearchTarget, WitnessSearch};
use stripes::rng::SeededRng;
use stripes::{Method, PeParams};

fn main() -> stripes::Result<()> {
    let mut args = std::env::args().skip(1);
    let budget = args.next().and_then(|b| b.parse().ok()).unwrap_or(2000);
    let out = args.next();

    let mut rng = SeededRng::new(0, 0);
    let samples: Vec<KernelSample> = (0..40)
        .map(|_| KernelSample { content: rng.gaussian_vec(4), position: vec![rng.uniform_range(0.0, 20.0)] })
        .collect();
    for method in Method::ALL {
        let units = method.unit_count(4);
        let freqs: Vec<f64> = (0..units).map(|u| 0.9f64.powi(u as i32)).collect();
        let params = PeParams::with_scalar_frequencies(method, 4, &freqs)?;
        let report = pd_check(&gram_matrix(method, &samples, &params)?, 1e-8)?;
        println!(
            "{:>9} Gram: min eig {:+.3e}, max eig {:.3e}, psd {}",
            method.name(),
            report.min_eigenvalue,
            report.max_eigenvalue,
            report.is_pd
        );
        for term in tensor_terms(method, &samples, &params)? {
            let t = pd_check(&term.product(), 1e-8)?;
            println!("          {:<20} min eig {:+.3e}", term.label, t.min_eigenvalue);
        }
    }

    for (method, target) in [(Method::Rope, SearchTarget::Score), (Method::Rope, SearchTarget::Terms), (Method::RopePool, SearchTarget::Score)] {
        let cfg = WitnessSearch { dim: 4, ..WitnessSearch::new(method, 8, budget, 0) };
        let report = pd_witness_search(&cfg, target)?;
        match &report.witness {
            Some(w) => {
                println!("{} {target:?}: witness at trial {} (min eig {:.3e})", method.name(), w.trial, w.min_eigenvalue);
                if let Some(path) = &out {
                    std::fs::write(path, serde_json::to_string_pretty(w)?)?;
                }
            }
            None => println!("{} {target:?}: no witness in {budget} trials", method.name()),
        }
    }
    Ok(())
}
