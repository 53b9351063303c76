use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Mat, RngSnapshot};
use crate::sampler::TraceRow;

pub const DATA_MAGIC: &[u8; 6] = b"UIDS1\0";
pub const METRICS_HEADER: &str = "iter,loglik,log_prior,active_frac,test_err,step_h";
pub const EVAL_HEADER: &str = "sample_idx,depth,e,norm_n";

fn fmt_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Format {
        path: path.display().to_string(),
        msg: msg.into(),
    }
}

fn push_block(buf: &mut Vec<u8>, m: &Mat) {
    buf.extend((m.rows() as u32).to_le_bytes());
    buf.extend((m.cols() as u32).to_le_bytes());
    for v in m.data() {
        buf.extend(v.to_le_bytes());
    }
}

/// Serialized `data.bin` image of an `(X, Y)` pair.
pub fn encode_dataset(x: &Mat, y: &Mat) -> Vec<u8> {
    let mut buf = Vec::with_capacity(6 + 16 + 8 * (x.data().len() + y.data().len()));
    buf.extend(DATA_MAGIC);
    push_block(&mut buf, x);
    push_block(&mut buf, y);
    buf
}

pub fn decode_dataset(bytes: &[u8], path: &Path) -> Result<(Mat, Mat)> {
    if bytes.len() < 6 || &bytes[..6] != DATA_MAGIC {
        return Err(fmt_err(path, "bad magic"));
    }
    let mut pos = 6;
    let read_block = |pos: &mut usize| -> Result<Mat> {
        let u32_at = |p: usize| -> Result<usize> {
            let s = bytes.get(p..p + 4).ok_or_else(|| fmt_err(path, "truncated header"))?;
            Ok(u32::from_le_bytes(s.try_into().unwrap()) as usize)
        };
        let (r, c) = (u32_at(*pos)?, u32_at(*pos + 4)?);
        *pos += 8;
        let len = r * c * 8;
        let raw = bytes.get(*pos..*pos + len).ok_or_else(|| fmt_err(path, "truncated data block"))?;
        *pos += len;
        Mat::new(r, c, f64s_from_le(raw)).map_err(|e| fmt_err(path, e.to_string()))
    };
    let x = read_block(&mut pos)?;
    let y = read_block(&mut pos)?;
    if pos != bytes.len() {
        return Err(fmt_err(path, "trailing bytes"));
    }
    if x.rows() != y.rows() {
        return Err(fmt_err(path, format!("X has {} rows, Y has {}", x.rows(), y.rows())));
    }
    Ok((x, y))
}

pub fn f64s_to_le(v: &[f64]) -> Vec<u8> {
    v.iter().flat_map(|x| x.to_le_bytes()).collect()
}

pub fn f64s_from_le(raw: &[u8]) -> Vec<f64> {
    raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect()
}

/// Contents of `data.meta.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataMeta {
    pub record: crate::datagen::GenerationRecord,
    /// Hash of the seed and data block of the generating config.
    pub data_hash: String,
    /// Hash of the `data.bin` bytes.
    pub content_hash: String,
    pub split: String,
}

/// Writes a file via a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(tmp, path)?;
    Ok(())
}

/// `manifest.json` of a checkpoint directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub config_hash: String,
    pub data_hash: String,
    pub iteration: u64,
    pub layer_shapes: Vec<(usize, usize)>,
    pub rng: RngSnapshot,
    pub step_h: f64,
    pub batch_size: usize,
    pub flip_fraction: f64,
    pub last_loglik: f64,
    pub baseline: bool,
}

pub struct Checkpoint {
    pub manifest: Manifest,
    pub weights: Vec<f64>,
    pub mask: Vec<u8>,
}

/// Writes `dir/{manifest.json, weights.f64le, mask.u8}`, replacing any
/// previous checkpoint only once the new one is complete.
pub fn write_checkpoint(dir: &Path, ck: &Checkpoint) -> Result<()> {
    let staging = dir.with_extension("staging");
    if staging.exists() {
        fs::remove_dir_all(&staging)?;
    }
    fs::create_dir_all(&staging)?;
    fs::write(staging.join("weights.f64le"), f64s_to_le(&ck.weights))?;
    fs::write(staging.join("mask.u8"), &ck.mask)?;
    fs::write(staging.join("manifest.json"), serde_json::to_string_pretty(&ck.manifest)?)?;
    let old = dir.with_extension("old");
    if dir.exists() {
        if old.exists() {
            fs::remove_dir_all(&old)?;
        }
        fs::rename(dir, &old)?;
    }
    fs::rename(&staging, dir)?;
    if old.exists() {
        fs::remove_dir_all(&old)?;
    }
    Ok(())
}

pub fn read_checkpoint(dir: &Path) -> Result<Checkpoint> {
    let mpath = dir.join("manifest.json");
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(&mpath)?).map_err(|e| fmt_err(&mpath, e.to_string()))?;
    let wpath = dir.join("weights.f64le");
    let raw = fs::read(&wpath)?;
    if raw.len() % 8 != 0 {
        return Err(fmt_err(&wpath, "length not a multiple of 8"));
    }
    let weights = f64s_from_le(&raw);
    let mask = fs::read(dir.join("mask.u8"))?;
    let q: usize = manifest.layer_shapes.iter().map(|(r, c)| r * c).sum();
    if weights.len() != q || mask.len() != q {
        return Err(fmt_err(
            dir,
            format!("expected {q} weights and mask bytes, found {} and {}", weights.len(), mask.len()),
        ));
    }
    if mask.iter().any(|&b| b > 1) {
        return Err(fmt_err(&dir.join("mask.u8"), "mask bytes must be 0 or 1"));
    }
    Ok(Checkpoint { manifest, weights, mask })
}

pub fn metrics_line(r: &TraceRow) -> String {
    let te = r.test_err.map(|v| v.to_string()).unwrap_or_default();
    format!("{},{},{},{},{},{}", r.iter, r.loglik, r.log_prior, r.active_frac, te, r.step_h)
}

pub fn parse_metrics(text: &str, path: &Path) -> Result<Vec<TraceRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(METRICS_HEADER) {
        return Err(fmt_err(path, "missing metrics header"));
    }
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 6 {
                return Err(fmt_err(path, format!("bad row `{l}`")));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| fmt_err(path, format!("`{s}`: {e}")));
            Ok(TraceRow {
                iter: f[0].parse().map_err(|e| fmt_err(path, format!("`{}`: {e}", f[0])))?,
                loglik: num(f[1])?,
                log_prior: num(f[2])?,
                active_frac: num(f[3])?,
                test_err: if f[4].is_empty() { None } else { Some(num(f[4])?) },
                step_h: num(f[5])?,
            })
        })
        .collect()
}

/// Keeps the header and rows with `iter ≤ upto`.
pub fn truncate_metrics(path: &Path, upto: u64) -> Result<usize> {
    let text = fs::read_to_string(path)?;
    let rows: Vec<TraceRow> = parse_metrics(&text, path)?.into_iter().filter(|r| r.iter <= upto).collect();
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in &rows {
        out.push_str(&metrics_line(r));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())?;
    Ok(rows.len())
}

/// One row of `eval.csv`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalRow {
    pub sample_idx: usize,
    pub depth: usize,
    pub e: f64,
    pub norm_n: f64,
}

pub fn eval_csv(rows: &[EvalRow]) -> String {
    let mut s = String::from(EVAL_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!("{},{},{},{}\n", r.sample_idx, r.depth, r.e, r.norm_n));
    }
    s
}

pub fn parse_eval(text: &str, path: &Path) -> Result<Vec<EvalRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(EVAL_HEADER) {
        return Err(fmt_err(path, "missing eval header"));
    }
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            let bad = || fmt_err(path, format!("bad row `{l}`"));
            if f.len() != 4 {
                return Err(bad());
            }
            Ok(EvalRow {
                sample_idx: f[0].parse().map_err(|_| bad())?,
                depth: f[1].parse().map_err(|_| bad())?,
                e: f[2].parse().map_err(|_| bad())?,
                norm_n: f[3].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

/// Standard file locations under an output directory.
#[derive(Clone, Debug)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }
    pub fn split_dir(&self, split: &str) -> PathBuf {
        self.root.join(split)
    }
    pub fn data_bin(&self, split: &str) -> PathBuf {
        self.split_dir(split).join("data.bin")
    }
    pub fn data_meta(&self, split: &str) -> PathBuf {
        self.split_dir(split).join("data.meta.json")
    }
    pub fn oracle(&self, split: &str) -> PathBuf {
        self.split_dir(split).join("oracle.f64le")
    }
    pub fn run_dir(&self, baseline: bool) -> PathBuf {
        self.root.join(if baseline { "run_baseline" } else { "run" })
    }
}
