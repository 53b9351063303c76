//! Builds the Gaussian blur forward model for 16x16 images, estimates its
//! spectral norm and blurs one block image.
//!
//! cargo run --release --example blur_operator

use gdn::datagen::{generate_block_images, BlockImageParams};
use gdn::forward::{build_blur_matrix, ForwardModel, GaussianLinearModel};
use gdn::numerics::{norm2, spectral_norm_sq, RngState};

fn main() -> gdn::Result<()> {
    let a = build_blur_matrix(16, 16, 3.0)?;
    let est = spectral_norm_sq(&a, 1e-12, 10_000);
    println!("lambda_max(A'A) = {:.6} after {} power iterations", est.value, est.iterations);

    let fm = GaussianLinearModel::new(a, 0.01)?;
    println!("M = {:.2}, gamma = 1/M = {:.3e}", fm.lambda_max() / fm.v2(), fm.default_step(1.0)?);

    let img = generate_block_images(1, &BlockImageParams::default(), &mut RngState::new(4))?;
    let x = img.row(0);
    let y = fm.operator().matvec(x)?;
    let show = |v: &[f64]| (0..16).map(|j| format!("{:6.1}", v[3 * 16 + j])).collect::<String>();
    println!("row 3 sharp  : {}", show(x));
    println!("row 3 blurred: {}", show(&y));
    println!("|x| = {:.2}, |Ax| = {:.2}, f(Ax | x) = {}", norm2(x), norm2(&y), fm.value(&y, x)?);
    Ok(())
}
