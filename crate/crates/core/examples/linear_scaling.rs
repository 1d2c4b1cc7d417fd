//! Linear-time attention against the quadratic reference.
//!
//! `cargo run --release --example linear_scaling -- [lengths]`, e.g. `256,512,1024`.

use ndarray::Array2;
use stripes::linear::{benchmark_scaling, linear_path, quadratic_path, scaling_ratios, AttentionSpec, FeatureMap, PathKind, BENCH_HEADER};
use stripes::params::max_abs_diff;
use stripes::{make_params, InitScheme, Method, PositionalIndexSequence, QkMatrices, DEFAULT_BASE};

fn main() -> stripes::Result<()> {
    let lengths: Vec<usize> = std::env::args()
        .nth(1)
        .map(|s| s.split(',').filter_map(|v| v.trim().parse().ok()).collect())
        .unwrap_or_else(|| vec![256, 512, 1024]);

    let (t, dim) = (200, 16);
    let qk = QkMatrices::random_unit(t, t, dim, 0);
    let pos = PositionalIndexSequence::time(t);
    let v = Array2::from_shape_fn((t, 4), |(i, j)| ((i + j) % 5) as f64);
    for method in Method::ALL {
        let params = make_params(method, dim, 1, InitScheme::ExponentialShared, DEFAULT_BASE, 0)?;
        for map in [FeatureMap::PositiveShift, FeatureMap::ExpRandom { features: 32, seed: 1 }] {
            let spec = AttentionSpec { method, params: &params, pooling: method.default_pooling(), map };
            let lin = linear_path(&qk, &pos, &pos, &v, &spec)?;
            let quad = quadratic_path(&qk, &pos, &pos, &v, &spec)?;
            println!("{:>9} {:<28} linear vs quadratic: {:.2e}", method.name(), map.name(), max_abs_diff(&lin.y, &quad.y));
        }
    }

    let rows = benchmark_scaling(Method::FStripe1, &lengths, 64, 5, 0)?;
    println!("\n{BENCH_HEADER}");
    for r in &rows {
        println!("{}", r.csv());
    }
    println!("doubling ratios, linear: {:.2?}", scaling_ratios(&rows, PathKind::Linear));
    println!("doubling ratios, quadratic: {:.2?}", scaling_ratios(&rows, PathKind::Quadratic));
    Ok(())
}
