//! Exact closed forms against feature transforms and the canonical factorization.

use stripes::transform::cross_dimension_residual;
use stripes::verify::{random_instance, InstanceShape};
use stripes::{canonical_attention, exact_attention, positional_matrix_rff, transform_attention, Method, QkMatrices};
use stripes::{make_params, InitScheme, PositionalIndexSequence, DEFAULT_BASE};

fn main() -> stripes::Result<()> {
    let shape = InstanceShape::default();
    for method in Method::ALL {
        let mut worst = 0.0f64;
        for i in 0..200 {
            let inst = random_instance(method, shape, 7, i)?;
            let exact = exact_attention(method, &inst.qk, &inst.p_q, &inst.p_k, &inst.params)?;
            let fast = transform_attention(&inst.qk, &inst.p_q, &inst.p_k, method, &inst.params, method.default_pooling())?;
            worst = worst.max(exact.max_abs_diff(&fast));
        }
        println!("{:>9} transform vs exact: max |diff| = {worst:.2e}", method.name());
    }

    let inst = random_instance(Method::FStripe1, shape, 7, 0)?;
    let pmats = (0..inst.params.units())
        .map(|d| positional_matrix_rff(&inst.params, d, &inst.p_q, &inst.p_k))
        .collect::<stripes::Result<Vec<_>>>()?;
    let canonical = canonical_attention(&inst.qk, &pmats)?;
    let exact = exact_attention(Method::FStripe1, &inst.qk, &inst.p_q, &inst.p_k, &inst.params)?;
    println!("canonical form vs exact fstripe1: {:.2e}", canonical.max_abs_diff(&exact));

    println!("\npooled fstripe1 residual (cross-dimension terms), T = 64");
    for dim in [4, 16, 64] {
        let qk = QkMatrices::random_unit(64, 64, dim, 1);
        let pos = PositionalIndexSequence::time(64);
        let params = make_params(Method::FStripe1, dim, 1, InitScheme::ExponentialShared, DEFAULT_BASE, 0)?;
        let r = cross_dimension_residual(&qk, &pos, &pos, &params)?;
        println!("D = {dim:>3}: mean |res| {:.4}, max |res| {:.4}", r.mean_abs, r.max_abs);
    }
    Ok(())
}
