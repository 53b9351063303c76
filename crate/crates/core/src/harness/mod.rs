//! Experiment driver: data generation, training with checkpoints, posterior
//! evaluation and depth sweeps, all keyed by a JSON config.

pub mod config;
pub mod io;

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{generate_dataset, Dataset, LatentPrior};
use crate::error::{Error, Result};
use crate::fnn::{init_weights, Fnn, FnnParams};
use crate::forward::{build_blur_matrix, GaussianLinearModel};
use crate::gdn::{FnnBaseline, GdnModel, Regressor};
use crate::numerics::{dist2, Mat, RngState};
use crate::pgd::{depth_rule, estimate_contraction_with_reference, solve_elastic_net_exact};
use crate::regularizer::{ElasticNet, OrthoRegularizer};
use crate::sampler::{run_chain, test_error, ChainState, PosteriorSpec, SpikeSlabPrior};

pub use config::{ExperimentConfig, GammaMode, InitKind, LatentKind};
use io::{Checkpoint, DataMeta, EvalRow, Layout, Manifest};

const STREAM_OPERATOR: u64 = 1;
const STREAM_ORTHO_B: u64 = 2;
const STREAM_TRAIN: u64 = 3;
const STREAM_TEST: u64 = 4;
const STREAM_CHAIN: u64 = 1_000;
const STREAM_INIT: u64 = 2_000;
const BASELINE_OFFSET: u64 = 1 << 20;

/// Forward model, regularizer and step size shared by every command.
pub struct Problem {
    pub fm: GaussianLinearModel,
    /// Present for elastic-net latents.
    pub reg: Option<OrthoRegularizer>,
    pub gamma: f64,
    pub prior: LatentPrior,
}

/// Rebuilds the operator and regularizer from the config seed.
pub fn build_problem(cfg: &ExperimentConfig) -> Result<Problem> {
    let d = &cfg.data;
    let root = RngState::new(cfg.seed);
    let a = if d.blur {
        build_blur_matrix(d.image_height, d.image_width, d.blur_variance)?
    } else {
        Mat::gaussian(d.d_y, d.d_x, &mut root.split(STREAM_OPERATOR))
    };
    let fm = GaussianLinearModel::new(a, d.v2)?;
    let b = d
        .ortho_b
        .then(|| crate::numerics::rand_orthogonal(d.d_x, &mut root.split(STREAM_ORTHO_B)));
    let (reg, prior) = match d.latent {
        LatentKind::ElasticNet => {
            let base = ElasticNet::new(d.lambda1, d.lambda2)?;
            let reg = match &b {
                Some(b) => OrthoRegularizer::new(base, b.clone())?,
                None => OrthoRegularizer::identity(base),
            };
            let prior = LatentPrior::ElasticNet {
                lambda1: d.lambda1,
                lambda2: d.lambda2,
                b,
            };
            (Some(reg), prior)
        }
        LatentKind::BlockImages => (None, LatentPrior::BlockImages(d.block_params.unwrap_or_default())),
    };
    let gamma = match cfg.model.gamma {
        GammaMode::Auto { multiplier } => fm.default_step(multiplier)?,
        GammaMode::Explicit { value } => value,
    };
    Ok(Problem { fm, reg, gamma, prior })
}

/// One split loaded from disk, with its evaluation targets: the exact
/// inversion map `g(y)` for elastic-net latents, the latent `x` otherwise.
pub struct LoadedSplit {
    pub data: Dataset,
    pub targets: Vec<Vec<f64>>,
}

fn rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

/// `g(y)` for every row, solved to machine precision.
pub fn oracle_targets(p: &Problem, ys: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    match &p.reg {
        Some(reg) => ys.par_iter().map(|y| solve_elastic_net_exact(&p.fm, reg, y)).collect(),
        None => Err(Error::InvalidArgument(
            "no inversion oracle without an elastic-net regularizer".into(),
        )),
    }
}

/// `gen`: writes `train/` and `test/` under `out`. Returns their paths.
pub fn cmd_gen(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let p = build_problem(cfg)?;
    let root = RngState::new(cfg.seed);
    let layout = Layout::new(out);
    let mut written = Vec::new();
    for (split, n, stream) in [("train", cfg.data.n_train, STREAM_TRAIN), ("test", cfg.data.n_test, STREAM_TEST)] {
        let ds = generate_dataset(&p.fm, &p.prior, n, &root.split(stream))?;
        fs::create_dir_all(layout.split_dir(split))?;
        let bytes = io::encode_dataset(&ds.x, &ds.y);
        io::write_atomic(&layout.data_bin(split), &bytes)?;
        if p.reg.is_some() {
            let g = oracle_targets(&p, &ds.ys())?;
            let flat: Vec<f64> = g.into_iter().flatten().collect();
            io::write_atomic(&layout.oracle(split), &io::f64s_to_le(&flat))?;
        }
        let meta = DataMeta {
            record: ds.meta.clone(),
            data_hash: cfg.data_hash(),
            content_hash: config::sha256_hex(&bytes),
            split: split.to_string(),
        };
        io::write_atomic(&layout.data_meta(split), serde_json::to_string_pretty(&meta)?.as_bytes())?;
        written.push(layout.split_dir(split));
    }
    Ok(written)
}

/// Loads a split and checks it against the config.
pub fn load_split(cfg: &ExperimentConfig, layout: &Layout, split: &str) -> Result<LoadedSplit> {
    let bin = layout.data_bin(split);
    let meta_path = layout.data_meta(split);
    if !bin.exists() || !meta_path.exists() {
        return Err(Error::Provenance(format!("{} is missing; run `gen` first", bin.display())));
    }
    let meta: DataMeta = serde_json::from_str(&fs::read_to_string(&meta_path)?)?;
    if meta.data_hash != cfg.data_hash() {
        return Err(Error::Provenance(format!(
            "{} was generated from a different seed or data block",
            meta_path.display()
        )));
    }
    let bytes = fs::read(&bin)?;
    if config::sha256_hex(&bytes) != meta.content_hash {
        return Err(Error::Provenance(format!("{} does not match its recorded hash", bin.display())));
    }
    let (x, y) = io::decode_dataset(&bytes, &bin)?;
    let targets = if cfg.data.latent == LatentKind::ElasticNet {
        let path = layout.oracle(split);
        let flat = io::f64s_from_le(&fs::read(&path)?);
        if flat.len() != x.rows() * x.cols() {
            return Err(Error::Format {
                path: path.display().to_string(),
                msg: "oracle cache size does not match the dataset".into(),
            });
        }
        flat.chunks(x.cols()).map(<[f64]>::to_vec).collect()
    } else {
        rows(&x)
    };
    Ok(LoadedSplit {
        data: Dataset { x, y, meta: meta.record },
        targets,
    })
}

/// Generates the data unless a matching copy is already on disk.
pub fn ensure_data(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let layout = Layout::new(out);
    let ok = ["train", "test"].iter().all(|s| load_split(cfg, &layout, s).is_ok());
    if !ok {
        cmd_gen(cfg, out)?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Default)]
pub struct TrainOptions {
    /// Train the physics-free network `y ↦ x` instead of the GDN.
    pub baseline: bool,
    /// Stop (with a checkpoint) once this many iterations are done.
    pub stop_after: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub iterations: u64,
    pub retained: usize,
    pub final_active_frac: f64,
    pub run_dir: PathBuf,
}

fn chain_streams(depth: usize, baseline: bool) -> (u64, u64) {
    let off = if baseline { BASELINE_OFFSET } else { 0 };
    (STREAM_CHAIN + depth as u64 + off, STREAM_INIT + depth as u64 + off)
}

/// Either regressor, boxed behind one type.
pub enum AnyModel {
    Gdn(GdnModel),
    Baseline(FnnBaseline),
}

impl AnyModel {
    pub fn as_regressor(&self) -> &dyn RegressorObj {
        match self {
            AnyModel::Gdn(m) => m,
            AnyModel::Baseline(m) => m,
        }
    }

    pub fn depth_label(&self) -> usize {
        match self {
            AnyModel::Gdn(m) => m.depth(),
            AnyModel::Baseline(_) => 0,
        }
    }
}

/// Object-safe view of [`Regressor`].
pub trait RegressorObj: Sync {
    fn fnn_ref(&self) -> &Fnn;
    fn predict_obj(&self, w: &FnnParams, y: &[f64]) -> Result<Vec<f64>>;
}

impl<M: Regressor> RegressorObj for M {
    fn fnn_ref(&self) -> &Fnn {
        self.fnn()
    }
    fn predict_obj(&self, w: &FnnParams, y: &[f64]) -> Result<Vec<f64>> {
        self.predict(w, y)
    }
}

pub fn build_model(cfg: &ExperimentConfig, p: &Problem, baseline: bool) -> Result<AnyModel> {
    if baseline {
        let fnn = Fnn::new(cfg.data.d_y, cfg.model.layers.clone()).map_err(|e| Error::config("model.layers", e.to_string()))?;
        if fnn.output_dim() != cfg.data.d_x {
            return Err(Error::config("model.layers", "baseline network must map d_y values to d_x"));
        }
        Ok(AnyModel::Baseline(FnnBaseline::new(fnn)))
    } else {
        let fnn = cfg.build_fnn()?;
        Ok(AnyModel::Gdn(GdnModel::new(
            p.fm.clone(),
            fnn,
            p.gamma,
            cfg.model.depth_unroll,
            cfg.model.x0.clone(),
        )?))
    }
}

/// `train`: runs the sampler, writing `metrics.csv`, `samples.f64le` (one
/// `W⊙Λ` per retained iteration) and a checkpoint every
/// `checkpoint_every` iterations. An existing checkpoint is resumed.
/// The weights a fresh chain starts from (before any sampler step).
pub fn initial_weights(cfg: &ExperimentConfig, fnn: &Fnn, baseline: bool) -> Result<FnnParams> {
    let depth = if baseline { 0 } else { cfg.model.depth_unroll };
    let (_, init_stream) = chain_streams(depth, baseline);
    init_weights(
        fnn,
        cfg.init_scheme(model_gamma(cfg)?),
        &mut RngState::new(cfg.seed).split(init_stream),
    )
}

pub fn cmd_train(cfg: &ExperimentConfig, data_root: &Path, run_dir: &Path, opts: TrainOptions) -> Result<TrainSummary> {
    cfg.validate()?;
    let p = build_problem(cfg)?;
    let layout = Layout::new(data_root);
    let train = load_split(cfg, &layout, "train")?;
    let test = load_split(cfg, &layout, "test")?;
    match build_model(cfg, &p, opts.baseline)? {
        AnyModel::Gdn(m) => train_with(cfg, &m, &train, &test, run_dir, opts),
        AnyModel::Baseline(m) => train_with(cfg, &m, &train, &test, run_dir, opts),
    }
}

fn train_with<M: Regressor>(
    cfg: &ExperimentConfig,
    model: &M,
    train: &LoadedSplit,
    test: &LoadedSplit,
    run_dir: &Path,
    opts: TrainOptions,
) -> Result<TrainSummary> {
    let fnn = model.fnn();
    let q = fnn.param_count();
    let prior = SpikeSlabPrior::new(cfg.prior.u, cfg.rho0(), cfg.prior.rho1, q)?;
    let ps = PosteriorSpec::new(prior, cfg.sampler.sigma2, model, Some(&train.data))?;
    let config_hash = cfg.config_hash();
    let data_hash = cfg.data_hash();
    let thin = cfg.sampler.thin;
    let ck_dir = run_dir.join("checkpoint");
    let metrics_path = run_dir.join("metrics.csv");
    let samples_path = run_dir.join("samples.f64le");
    fs::create_dir_all(run_dir)?;

    let mut state = if ck_dir.exists() {
        let ck = io::read_checkpoint(&ck_dir)?;
        let m = &ck.manifest;
        if m.config_hash != config_hash || m.data_hash != data_hash || m.baseline != opts.baseline {
            return Err(Error::Provenance(format!(
                "checkpoint in {} belongs to a different config; refusing to resume",
                ck_dir.display()
            )));
        }
        if m.layer_shapes != fnn.block_shapes() {
            return Err(Error::Provenance("checkpoint layer shapes differ from the config".into()));
        }
        let retained = (m.iteration / thin) as usize;
        let rows = io::truncate_metrics(&metrics_path, m.iteration)?;
        if rows != retained {
            return Err(Error::Provenance(format!(
                "metrics.csv has {rows} rows up to the checkpoint, expected {retained}"
            )));
        }
        let f = OpenOptions::new().write(true).open(&samples_path)?;
        let want = (retained * q * 8) as u64;
        if f.metadata()?.len() < want {
            return Err(Error::Provenance("samples.f64le is shorter than the checkpoint implies".into()));
        }
        f.set_len(want)?;
        let mut s = ChainState::new(
            fnn.params_from_flat(ck.weights)?,
            fnn.mask_from_flat(ck.mask)?,
            m.step_h,
            m.batch_size,
            m.flip_fraction,
            RngState::restore(&m.rng)?,
        )?;
        s.iter = m.iteration;
        s.last_loglik = m.last_loglik;
        s
    } else {
        let root = RngState::new(cfg.seed);
        let depth = if opts.baseline { 0 } else { cfg.model.depth_unroll };
        let (chain_stream, _) = chain_streams(depth, opts.baseline);
        let w = initial_weights(cfg, fnn, opts.baseline)?;
        fs::write(&metrics_path, format!("{}\n", io::METRICS_HEADER))?;
        fs::write(&samples_path, b"")?;
        ChainState::new(
            w,
            fnn.full_mask(),
            cfg.sampler.step_h,
            cfg.sampler.batch_size,
            cfg.sampler.flip_fraction,
            root.split(chain_stream),
        )?
    };

    let m_test = cfg.monitor_test.min(test.targets.len()).max(1);
    let (mys, mtargets) = (&test.data.ys()[..m_test], &test.targets[..m_test]);
    let monitor = |theta: &FnnParams| -> Result<f64> { Ok(test_error(model, theta, mys, mtargets)?.e) };

    let target = opts.stop_after.map_or(cfg.sampler.iters, |s| s.min(cfg.sampler.iters));
    let every = cfg.sampler.checkpoint_every;
    while state.iter < target {
        let chunk = (every - state.iter % every).min(target - state.iter);
        let mut metrics = OpenOptions::new().append(true).open(&metrics_path)?;
        let mut samples = OpenOptions::new().append(true).open(&samples_path)?;
        run_chain(&ps, &mut state, chunk, thin, Some(&monitor), |s, row| {
            writeln!(metrics, "{}", io::metrics_line(row))?;
            samples.write_all(&io::f64s_to_le(s.effective_weights().as_slice()))?;
            Ok(())
        })?;
        metrics.sync_all()?;
        samples.sync_all()?;
        io::write_checkpoint(
            &ck_dir,
            &Checkpoint {
                manifest: Manifest {
                    config_hash: config_hash.clone(),
                    data_hash: data_hash.clone(),
                    iteration: state.iter,
                    layer_shapes: fnn.block_shapes(),
                    rng: state.rng.snapshot(),
                    step_h: state.step_h,
                    batch_size: state.batch_size,
                    flip_fraction: state.flip_fraction,
                    last_loglik: state.last_loglik,
                    baseline: opts.baseline,
                },
                weights: state.w.as_slice().to_vec(),
                mask: state.mask.as_slice().to_vec(),
            },
        )?;
    }
    Ok(TrainSummary {
        iterations: state.iter,
        retained: (state.iter / thin) as usize,
        final_active_frac: state.active_fraction(),
        run_dir: run_dir.to_path_buf(),
    })
}

fn model_gamma(cfg: &ExperimentConfig) -> Result<f64> {
    Ok(build_problem(cfg)?.gamma)
}

/// Reads the retained `W⊙Λ` samples of a run.
pub fn read_samples(run_dir: &Path, fnn: &Fnn) -> Result<Vec<FnnParams>> {
    let path = run_dir.join("samples.f64le");
    let flat = io::f64s_from_le(&fs::read(&path)?);
    let q = fnn.param_count();
    if !flat.len().is_multiple_of(q) {
        return Err(Error::Format {
            path: path.display().to_string(),
            msg: format!("length is not a multiple of q = {q}"),
        });
    }
    flat.chunks(q).map(|c| fnn.params_from_flat(c.to_vec())).collect()
}

/// Five-number summary.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(v: &[f64], p: f64) -> f64 {
    let h = (v.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

pub fn quantiles(values: &[f64]) -> Result<Quantiles> {
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("quantiles need a nonempty finite sample".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(Quantiles {
        min: v[0],
        q25: quantile_sorted(&v, 0.25),
        median: quantile_sorted(&v, 0.5),
        q75: quantile_sorted(&v, 0.75),
        max: v[v.len() - 1],
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config_hash: String,
    pub depth: usize,
    pub samples: usize,
    pub e: Quantiles,
    pub norm_n: Quantiles,
    #[serde(skip)]
    pub rows: Vec<EvalRow>,
}

/// `eval`: scores the last `eval_last_k` retained samples on the full test
/// set, writing `eval.csv` and `eval.summary.json` into the run directory.
pub fn cmd_eval(cfg: &ExperimentConfig, data_root: &Path, run_dir: &Path, baseline: bool) -> Result<EvalReport> {
    cfg.validate()?;
    let ck = io::read_checkpoint(&run_dir.join("checkpoint"))?;
    if ck.manifest.config_hash != cfg.config_hash() || ck.manifest.baseline != baseline {
        return Err(Error::Provenance(format!(
            "{} was produced by a different config",
            run_dir.display()
        )));
    }
    let p = build_problem(cfg)?;
    let test = load_split(cfg, &Layout::new(data_root), "test")?;
    let model = build_model(cfg, &p, baseline)?;
    let reg = model.as_regressor();
    let samples = read_samples(run_dir, reg.fnn_ref())?;
    if samples.is_empty() {
        return Err(Error::InvalidArgument("run has no retained samples".into()));
    }
    let start = samples.len().saturating_sub(cfg.eval_last_k);
    let ys = test.data.ys();
    let depth = model.depth_label();
    let rows: Vec<EvalRow> = samples[start..]
        .par_iter()
        .enumerate()
        .map(|(i, theta)| {
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for (y, g) in ys.iter().zip(&test.targets) {
                let d = dist2(&reg.predict_obj(theta, y)?, g);
                sum += d;
                sumsq += d * d;
            }
            let m = ys.len() as f64;
            Ok(EvalRow {
                sample_idx: start + i,
                depth,
                e: sum / m,
                norm_n: (sumsq / m).sqrt(),
            })
        })
        .collect::<Result<_>>()?;
    let e: Vec<f64> = rows.iter().map(|r| r.e).collect();
    let nn: Vec<f64> = rows.iter().map(|r| r.norm_n).collect();
    let report = EvalReport {
        config_hash: cfg.config_hash(),
        depth,
        samples: rows.len(),
        e: quantiles(&e)?,
        norm_n: quantiles(&nn)?,
        rows,
    };
    io::write_atomic(&run_dir.join("eval.csv"), io::eval_csv(&report.rows).as_bytes())?;
    io::write_atomic(
        &run_dir.join("eval.summary.json"),
        serde_json::to_string_pretty(&report)?.as_bytes(),
    )?;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthRecommendation {
    pub rho_hat: f64,
    pub r0_hat: f64,
    /// `None` when `ϱ̂` is not below 1 at the fitted precision.
    pub depth: Option<usize>,
    pub horizon: usize,
}

/// Estimates `ϱ̂` on the training observations against their cached oracle
/// values and applies the depth rule with `c = 1`.
pub fn recommend_depth(cfg: &ExperimentConfig, data_root: &Path) -> Result<DepthRecommendation> {
    let p = build_problem(cfg)?;
    let reg = p
        .reg
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("depth rule needs an elastic-net regularizer".into()))?;
    let train = load_split(cfg, &Layout::new(data_root), "train")?;
    let x0 = cfg.model.x0.clone().unwrap_or_else(|| vec![0.0; cfg.data.d_x]);
    let est = estimate_contraction_with_reference(&p.fm, reg, p.gamma, &train.data.ys(), &train.targets, &x0, cfg.contraction_horizon)?;
    Ok(DepthRecommendation {
        rho_hat: est.rho,
        r0_hat: est.r0,
        depth: depth_rule(cfg.data.n_train, est.rho, 1.0).ok(),
        horizon: cfg.contraction_horizon,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub per_depth: Vec<EvalReport>,
    pub recommendation: Option<DepthRecommendation>,
}

/// `sweep-depth`: one chain per depth (independent split streams, run in
/// parallel), each evaluated; the combined long table goes to
/// `out/sweep.csv`, the summary to `out/sweep.summary.json`.
pub fn cmd_sweep_depth(cfg: &ExperimentConfig, out: &Path, depths: &[usize]) -> Result<SweepReport> {
    if depths.is_empty() {
        return Err(Error::InvalidArgument("depth list is empty".into()));
    }
    if let Some(&bad) = depths.iter().find(|&&d| d == 0) {
        return Err(Error::InvalidArgument(format!("depths must be ≥ 1, got {bad}")));
    }
    cfg.validate()?;
    ensure_data(cfg, out)?;
    let per_depth: Vec<EvalReport> = depths
        .par_iter()
        .map(|&d| {
            let mut c = cfg.clone();
            c.model.depth_unroll = d;
            let run_dir = out.join(format!("depth_{d}"));
            cmd_train(&c, out, &run_dir, TrainOptions::default())?;
            cmd_eval(&c, out, &run_dir, false)
        })
        .collect::<Result<_>>()?;
    let all: Vec<EvalRow> = per_depth.iter().flat_map(|r| r.rows.iter().copied()).collect();
    io::write_atomic(&out.join("sweep.csv"), io::eval_csv(&all).as_bytes())?;
    let recommendation = match cfg.data.latent {
        LatentKind::ElasticNet => Some(recommend_depth(cfg, out)?),
        LatentKind::BlockImages => None,
    };
    let report = SweepReport { per_depth, recommendation };
    io::write_atomic(&out.join("sweep.summary.json"), serde_json::to_string_pretty(&report)?.as_bytes())?;
    Ok(report)
}

/// `make-prox-net`: writes the exact prox network for the config's `γ`,
/// `λ₁`, `λ₂` as a checkpoint directory `out/prox_net`.
pub fn cmd_make_prox_net(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf> {
    cfg.validate()?;
    let p = build_problem(cfg)?;
    let fnn = cfg.build_fnn()?;
    let scheme = crate::fnn::InitScheme::ExactProx {
        gamma: p.gamma,
        lambda1: cfg.data.lambda1,
        lambda2: cfg.data.lambda2,
    };
    let w = init_weights(&fnn, scheme, &mut RngState::new(cfg.seed))?;
    let dir = out.join("prox_net");
    fs::create_dir_all(out)?;
    io::write_checkpoint(
        &dir,
        &Checkpoint {
            manifest: Manifest {
                config_hash: cfg.config_hash(),
                data_hash: cfg.data_hash(),
                iteration: 0,
                layer_shapes: fnn.block_shapes(),
                rng: RngState::new(cfg.seed).snapshot(),
                step_h: cfg.sampler.step_h,
                batch_size: cfg.sampler.batch_size,
                flip_fraction: cfg.sampler.flip_fraction,
                last_loglik: 0.0,
                baseline: false,
            },
            weights: w.as_slice().to_vec(),
            mask: vec![1; fnn.param_count()],
        },
    )?;
    Ok(dir)
}
