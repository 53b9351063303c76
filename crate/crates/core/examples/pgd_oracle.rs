//! Solves the elastic-net inversion problem on the 100-dimensional preset
//! by proximal gradient descent from zero and by the active-set solver,
//! then estimates the contraction rate and the recommended depth.
//!
//! cargo run --release --example pgd_oracle

use std::time::Instant;

use gdn::datagen::generate_dataset;
use gdn::harness::{build_problem, ExperimentConfig};
use gdn::numerics::{max_abs_diff, RngState};
use gdn::pgd::{depth_rule, estimate_contraction_with_reference, optimality_violation, solve_elastic_net_exact, solve_g, PgdOptions};

fn main() -> gdn::Result<()> {
    let cfg = ExperimentConfig::load(std::path::Path::new(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../configs/en100.json"
    )))?;
    let p = build_problem(&cfg)?;
    let reg = p.reg.as_ref().expect("elastic-net preset");
    let data = generate_dataset(&p.fm, &p.prior, 5, &RngState::new(cfg.seed).split(3))?;
    println!("lambda_max(A'A) = {:.4}, gamma = {:.4e}", p.fm.lambda_max(), p.gamma);
    let opts = PgdOptions {
        record_trace: false,
        ..PgdOptions::default()
    };
    let mut ys = Vec::new();
    let mut exact = Vec::new();
    for i in 0..data.len() {
        let y = data.y_row(i);
        let t = Instant::now();
        let sol = solve_g(&p.fm, reg, p.gamma, y, &opts)?;
        let t_pgd = t.elapsed();
        let t = Instant::now();
        let x = solve_elastic_net_exact(&p.fm, reg, y)?;
        let t_exact = t.elapsed();
        println!(
            "y[{i}]: pgd {} iters ({:.2?}, converged {}), active-set {:.2?}, |diff| {:.2e}, certificate {:.2e}",
            sol.iterations,
            t_pgd,
            sol.converged,
            t_exact,
            max_abs_diff(&sol.x_star, &x),
            optimality_violation(&p.fm, reg, y, &sol.x_star)?
        );
        ys.push(y.to_vec());
        exact.push(x);
    }
    let est = estimate_contraction_with_reference(&p.fm, reg, p.gamma, &ys, &exact, &vec![0.0; cfg.data.d_x], cfg.contraction_horizon)?;
    println!("rho_hat = {:.8}, R0_hat = {:.4}", est.rho, est.r0);
    match depth_rule(cfg.data.n_train, est.rho, 1.0) {
        Ok(d) => println!("depth rule (n = {}, c = 1): D' = {d}", cfg.data.n_train),
        Err(e) => println!("depth rule undefined: {e}"),
    }
    Ok(())
}
