//! Draws latents from the elastic-net marginal and block images, and
//! prints summary statistics of each.
//!
//! cargo run --release --example datagen

use gdn::datagen::{generate_block_images, sample_mu_elastic_net, BlockImageParams};
use gdn::numerics::RngState;

fn main() -> gdn::Result<()> {
    let mut rng = RngState::new(11);
    let draws = sample_mu_elastic_net(1.0, 1.0, None, 200_000, &mut rng)?;
    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let var = draws.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let tail = draws.iter().filter(|v| v.abs() > 2.0).count() as f64 / n;
    println!("elastic-net marginal (1, 1): mean {mean:.4}, variance {var:.4}, P(|x| > 2) = {tail:.4}");

    let imgs = generate_block_images(500, &BlockImageParams::default(), &mut rng)?;
    let at = |i: usize, j: usize| (0..500).map(|k| imgs.get(k, i * 16 + j)).sum::<f64>() / 500.0;
    println!(
        "block image means: UL diag {:.2}, UL off {:.2}, UR {:.2}, LL {:.2}, LR diag {:.2}",
        at(2, 2),
        at(2, 3),
        at(2, 12),
        at(12, 2),
        at(12, 12)
    );
    Ok(())
}
