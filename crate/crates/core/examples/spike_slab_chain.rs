//! Runs the sampler without data so the chain targets the spike-and-slab
//! prior, and compares the long-run activation frequency with the prior's.
//!
//! cargo run --release --example spike_slab_chain

use gdn::fnn::{Fnn, LayerSpec};
use gdn::forward::GaussianLinearModel;
use gdn::gdn::GdnModel;
use gdn::numerics::{Mat, RngState};
use gdn::sampler::{run_chain, ChainState, PosteriorSpec, SpikeSlabPrior};

fn main() -> gdn::Result<()> {
    let fnn = Fnn::new(2, vec![LayerSpec::dense(2, true)])?;
    let fm = GaussianLinearModel::new(Mat::identity(2), 1.0)?;
    let model = GdnModel::new(fm.clone(), fnn.clone(), fm.default_step(1.0)?, 1, None)?;
    let q = fnn.param_count();
    // q = 6 keeps activations frequent enough to count
    let prior = SpikeSlabPrior::new(1.0, 16.0, 1.0, q)?;
    let ps = PosteriorSpec::new(prior, 1.0, &model, None)?;
    let mut s = ChainState::new(fnn.zeros(), fnn.full_mask(), 1e-3, 1, 0.5, RngState::new(8))?;
    let mut active = 0.0;
    let mut rows = 0usize;
    let out = run_chain(&ps, &mut s, 100_000, 100, None, |_, row| {
        if row.iter > 10_000 {
            active += row.active_frac;
            rows += 1;
        }
        Ok(())
    })?;
    println!("q = {q}, retained {} samples", out.samples.len());
    println!(
        "mean active fraction {:.4}; prior activation probability {:.4}",
        active / rows as f64,
        prior.activation_probability()
    );
    Ok(())
}
