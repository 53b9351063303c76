//! Unrolls a small GDN with a conv + layer-norm network, backpropagates a
//! squared loss and compares against central differences.
//!
//! cargo run --release --example gdn_gradient

use gdn::fnn::{init_weights, Fnn, InitScheme, LayerSpec};
use gdn::forward::{build_blur_matrix, GaussianLinearModel};
use gdn::gdn::GdnModel;
use gdn::numerics::RngState;

fn main() -> gdn::Result<()> {
    let conv = |channels, filters| LayerSpec::Conv2d {
        kernel: 3,
        filters,
        height: 4,
        width: 4,
        channels,
    };
    let fnn = Fnn::new(16, vec![conv(1, 4), LayerSpec::layer_norm(), LayerSpec::Relu, conv(4, 1)])?;
    let fm = GaussianLinearModel::new(build_blur_matrix(4, 4, 1.0)?, 0.1)?;
    let model = GdnModel::new(fm.clone(), fnn.clone(), fm.default_step(1.0)?, 3, None)?;
    let mut rng = RngState::new(5);
    let w = init_weights(&fnn, InitScheme::HeNormal, &mut rng)?;
    let x: Vec<f64> = (0..16).map(|_| rng.normal()).collect();
    let y = fm.operator().matvec(&x)?;

    let loss = |w: &gdn::fnn::FnnParams| -> gdn::Result<f64> {
        Ok(0.5 * model.predict(w, &y)?.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
    };
    let (pred, tape) = model.forward(&w, &y)?;
    let resid: Vec<f64> = pred.iter().zip(&x).map(|(a, b)| a - b).collect();
    let grad = model.backward(&tape, &w, &resid)?;

    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for k in 0..w.len() {
        let (mut wp, mut wm) = (w.clone(), w.clone());
        wp.as_mut_slice()[k] += h;
        wm.as_mut_slice()[k] -= h;
        let fd = (loss(&wp)? - loss(&wm)?) / (2.0 * h);
        worst = worst.max((fd - grad.as_slice()[k]).abs() / (1.0 + fd.abs()));
    }
    println!("q = {}, loss = {:.4}, worst gradient discrepancy {worst:.2e}", w.len(), loss(&w)?);
    Ok(())
}
