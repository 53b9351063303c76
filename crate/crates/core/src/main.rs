use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gdn::harness::{self, io::Layout, ExperimentConfig, Quantiles, TrainOptions};

#[derive(Parser)]
#[command(name = "gdn", about = "Unrolled proximal gradient networks: data, training, evaluation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Experiment config (strict JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's output_dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate train/test data and the oracle cache.
    Gen(Common),
    /// Run the posterior sampler (resumes from an existing checkpoint).
    Train {
        #[command(flatten)]
        common: Common,
        /// Train the network y -> x without the forward model.
        #[arg(long)]
        baseline: bool,
    },
    /// Score retained samples on the test set.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        baseline: bool,
    },
    /// Train and evaluate one chain per unrolling depth.
    SweepDepth {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "1,5,10,20")]
        depths: Vec<usize>,
    },
    /// Write the exact elastic-net prox network as a checkpoint.
    MakeProxNet(Common),
}

fn load(c: &Common) -> gdn::Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = ExperimentConfig::load(&c.config)?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    let out = c.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
    Ok((cfg, out))
}

fn fmt_q(q: &Quantiles) -> String {
    format!("{:.6e} {:.6e} {:.6e} {:.6e} {:.6e}", q.min, q.q25, q.median, q.q75, q.max)
}

fn run(cli: Cli) -> gdn::Result<()> {
    match cli.cmd {
        Cmd::Gen(c) => {
            let (cfg, out) = load(&c)?;
            for p in harness::cmd_gen(&cfg, &out)? {
                println!("wrote {}", p.display());
            }
        }
        Cmd::Train { common, baseline } => {
            let (cfg, out) = load(&common)?;
            let run_dir = Layout::new(&out).run_dir(baseline);
            let s = harness::cmd_train(
                &cfg,
                &out,
                &run_dir,
                TrainOptions {
                    baseline,
                    stop_after: None,
                },
            )?;
            println!(
                "{} iterations, {} retained samples, active fraction {:.4}, outputs in {}",
                s.iterations,
                s.retained,
                s.final_active_frac,
                s.run_dir.display()
            );
        }
        Cmd::Eval { common, baseline } => {
            let (cfg, out) = load(&common)?;
            let run_dir = Layout::new(&out).run_dir(baseline);
            let r = harness::cmd_eval(&cfg, &out, &run_dir, baseline)?;
            println!("samples {}  depth {}", r.samples, r.depth);
            println!("e       min q25 median q75 max: {}", fmt_q(&r.e));
            println!("norm_n  min q25 median q75 max: {}", fmt_q(&r.norm_n));
        }
        Cmd::SweepDepth { common, depths } => {
            let (cfg, out) = load(&common)?;
            let r = harness::cmd_sweep_depth(&cfg, &out, &depths)?;
            println!("depth  e: min q25 median q75 max");
            for d in &r.per_depth {
                println!("{:>5}  {}", d.depth, fmt_q(&d.e));
            }
            if let Some(rec) = r.recommendation {
                match rec.depth {
                    Some(d) => println!(
                        "rho_hat {:.8} (horizon {}): depth rule recommends D' = {d}",
                        rec.rho_hat, rec.horizon
                    ),
                    None => println!("rho_hat {:.8} (horizon {}): no contraction detected", rec.rho_hat, rec.horizon),
                }
            }
            println!("long table in {}", out.join("sweep.csv").display());
        }
        Cmd::MakeProxNet(c) => {
            let (cfg, out) = load(&c)?;
            println!("wrote {}", harness::cmd_make_prox_net(&cfg, &out)?.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
