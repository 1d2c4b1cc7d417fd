use stripes::linear::{phi, FeatureMap};
use stripes::params::PeParams;
use stripes::spe::{rff_positional_matrix, sff_features, SffConfig};
use stripes::{Method, PositionalIndexSequence, Side};

const SEEDS: u64 = 16;

fn params() -> PeParams {
    PeParams::explicit(Method::FStripe1, 1, vec![vec![0.3]], vec![1.2], vec![0.4]).unwrap()
}

/// Mean absolute gap between `P̃^Q P̃^Kᵀ / R` and its ideal limit.
fn deviation(r: usize, key_seed_offset: u64) -> f64 {
    let pos = PositionalIndexSequence::time(12);
    let mut total = 0.0;
    for seed in 0..SEEDS {
        let q_cfg = SffConfig::from_params(&params(), r, seed).unwrap();
        let k_cfg = SffConfig::from_params(&params(), r, seed + key_seed_offset).unwrap();
        let fq = sff_features(&pos, &q_cfg, Side::Query, 0).unwrap();
        let fk = sff_features(&pos, &k_cfg, Side::Key, 0).unwrap();
        let estimate = fq.dot(&fk.t()) / r as f64;
        let ideal = rff_positional_matrix(&q_cfg, 0, &pos, &pos).unwrap().values;
        total += (&estimate - &ideal).mapv(f64::abs).mean().unwrap();
    }
    total / SEEDS as f64
}

#[test]
fn shared_noise_converges() {
    let coarse = deviation(64, 0);
    let fine = deviation(4096, 0);
    // 64x more realizations: about 8x less spread
    assert!(fine < coarse / 5.0, "{coarse} -> {fine}");
}

#[test]
fn independent_noise_does_not_converge() {
    let coarse = deviation(64, 1000);
    let fine = deviation(4096, 1000);
    assert!(fine > 0.5 * coarse, "{coarse} -> {fine}");
    assert!(fine > 5.0 * deviation(4096, 0));
}

#[test]
fn random_exp_features_are_unbiased() {
    let (q, k) = ([0.3, -0.2, 0.5], [0.1, 0.4, -0.3]);
    let target = q.iter().zip(&k).map(|(a, b)| a * b).sum::<f64>().exp();
    let draws: Vec<f64> = (0..512u64)
        .map(|seed| {
            let map = FeatureMap::ExpRandom { features: 8, seed };
            let (fq, fk) = (phi(&q, map).unwrap(), phi(&k, map).unwrap());
            fq.iter().zip(&fk).map(|(a, b)| a * b).sum()
        })
        .collect();
    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let sd = (draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!((mean - target).abs() < 4.0 * sd / n.sqrt(), "mean {mean}, target {target}, sd {sd}");
}
