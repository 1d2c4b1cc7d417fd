//! Angular toy model: how each method trades content against context as `f` grows.
//!
//! `cargo run --example toy_heatmap -- [out.csv]`

use stripes::toy::{discriminability, generate_toy, heatmap, mirror_asymmetry};
use stripes::Method;

fn main() -> stripes::Result<()> {
    let ds = generate_toy(5, 100, 0.08, 3)?;
    let query = 50;
    let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();

    println!("discriminability (same-context mean minus other-context mean), query {query}");
    println!("{:>6} {:>10} {:>10} {:>10}", "f", "fstripe1", "rope", "ropepool");
    for &f in &grid {
        let row: Vec<f64> = Method::ALL.iter().map(|&m| discriminability(m, &ds, query, f)).collect::<Result<_, _>>()?;
        println!("{f:>6.2} {:>10.4} {:>10.4} {:>10.4}", row[0], row[1], row[2]);
    }

    println!("\nscores at (ψ±0.3, ξ±0.3) around (π/4, π/2), f = 0.7");
    for m in Method::ALL {
        let (plus, minus) = mirror_asymmetry(m, std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_2, 0.3, 0.3, 0.7);
        println!("{:>9}: {plus:+.6} {minus:+.6}", m.name());
    }

    if let Some(path) = std::env::args().nth(1) {
        let map = heatmap(Method::RopePool, &ds, query, &grid)?;
        std::fs::write(&path, map.to_csv())?;
        println!("\nropepool heatmap written to {path}");
    }
    Ok(())
}
