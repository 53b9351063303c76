//! The full pipeline on the tiny preset: generate data, train, interrupt
//! and resume, evaluate, and sweep two depths.
//!
//! cargo run --release --example harness_pipeline

use std::path::Path;

use gdn::harness::{self, io::Layout, ExperimentConfig, TrainOptions};

fn main() -> gdn::Result<()> {
    let cfg = ExperimentConfig::load(Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/tiny.json")))?;
    let out = std::env::temp_dir().join(format!("gdn_pipeline_{}", std::process::id()));
    harness::cmd_gen(&cfg, &out)?;
    let run = Layout::new(&out).run_dir(false);
    let first = harness::cmd_train(
        &cfg,
        &out,
        &run,
        TrainOptions {
            baseline: false,
            stop_after: Some(200),
        },
    )?;
    println!("stopped after {} iterations", first.iterations);
    let done = harness::cmd_train(&cfg, &out, &run, TrainOptions::default())?;
    println!("resumed to {} iterations, {} retained samples", done.iterations, done.retained);
    let ev = harness::cmd_eval(&cfg, &out, &run, false)?;
    println!("median test error {:.4} over {} samples", ev.e.median, ev.samples);
    let sweep = harness::cmd_sweep_depth(&cfg, &out.join("sweep"), &[1, 3])?;
    for r in &sweep.per_depth {
        println!("depth {:>2}: median e {:.4}", r.depth, r.e.median);
    }
    if let Some(rec) = sweep.recommendation {
        println!("rho_hat {:.4} -> depth rule {:?}", rec.rho_hat, rec.depth);
    }
    std::fs::remove_dir_all(&out)?;
    Ok(())
}
