//! The elastic-net shrinkage written as a two-layer ReLU network, checked
//! pointwise against the closed form.
//!
//! cargo run --example exact_prox_net

use gdn::fnn::build_exact_prox_net;
use gdn::numerics::max_abs_diff;
use gdn::regularizer::ElasticNet;

fn main() -> gdn::Result<()> {
    let (fnn, w) = build_exact_prox_net(1.0, 1.0, 1.0, 1)?;
    println!("d = 1 blocks: first {:?}, second {:?}", w.block(0), w.block(1));
    for x in [-3.0, -1.0, 0.0, 0.5, 3.0] {
        println!("H({x:>4}) = {:>6.3}", fnn.predict(&w, &[x])?[0]);
    }

    let (gamma, l1, l2, d) = (0.3, 0.7, 2.0, 64);
    let (fnn, w) = build_exact_prox_net(gamma, l1, l2, d)?;
    let en = ElasticNet::new(l1, l2)?;
    let x: Vec<f64> = (0..d).map(|i| (i as f64 - 32.0) / 8.0).collect();
    let err = max_abs_diff(&fnn.predict(&w, &x)?, &en.prox_elastic_net(&x, gamma));
    println!("d = {d}, gamma = {gamma}: max |H(x) - prox(x)| = {err:.1e}");
    Ok(())
}
