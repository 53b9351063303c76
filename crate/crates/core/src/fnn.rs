//! Feed-forward networks `H_W` used as learned proximal maps.
//!
//! A network is a list of [`LayerSpec`]s applied in order. Parametric
//! layers (dense, grouped, conv2d) own one row-major weight block each;
//! all blocks live back to back in a single flat [`FnnParams`] vector so
//! samplers can treat `W` as a point in `R^q`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{axpy, dot, Mat, RngState};

fn default_eps() -> f64 {
    1e-5
}

/// One layer of a feed-forward stack.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum LayerSpec {
    /// Fully connected `out × in` block; with `augment_bias` a constant one
    /// is appended to the input, adding a bias column.
    Dense {
        out: usize,
        #[serde(default)]
        augment_bias: bool,
    },
    /// Block-diagonal dense layer: the input splits into `groups` equal
    /// contiguous chunks, each mapped to `out_per_group` outputs by its own
    /// small dense block.
    Grouped {
        groups: usize,
        out_per_group: usize,
        #[serde(default)]
        augment_bias: bool,
    },
    /// Stride-1 convolution with zero "same" padding on a channel-major
    /// `channels × height × width` input, with one bias per filter.
    Conv2d {
        kernel: usize,
        filters: usize,
        height: usize,
        width: usize,
        channels: usize,
    },
    Relu,
    /// Parameter-free normalization over the whole layer vector.
    LayerNorm {
        #[serde(default = "default_eps")]
        eps: f64,
    },
}

impl LayerSpec {
    pub fn dense(out: usize, augment_bias: bool) -> Self {
        LayerSpec::Dense { out, augment_bias }
    }

    pub fn layer_norm() -> Self {
        LayerSpec::LayerNorm { eps: default_eps() }
    }

    pub fn is_parametric(&self) -> bool {
        matches!(self, LayerSpec::Dense { .. } | LayerSpec::Grouped { .. } | LayerSpec::Conv2d { .. })
    }
}

/// Resolved shape information for one layer.
#[derive(Clone, Debug, PartialEq)]
struct Layer {
    spec: LayerSpec,
    in_dim: usize,
    out_dim: usize,
    /// `(rows, cols)` of the weight block, if parametric.
    block: Option<(usize, usize)>,
    offset: usize,
}

/// A validated stack of layers with known input dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct Fnn {
    input_dim: usize,
    layers: Vec<Layer>,
    param_count: usize,
}

impl Fnn {
    pub fn new(input_dim: usize, specs: Vec<LayerSpec>) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::InvalidArgument("network input dimension must be positive".into()));
        }
        let mut layers = Vec::with_capacity(specs.len());
        let mut dim = input_dim;
        let mut offset = 0;
        for (idx, spec) in specs.into_iter().enumerate() {
            let bad = |msg: String| Error::Layer { layer: idx, msg };
            let (out_dim, block) = match &spec {
                LayerSpec::Dense { out, augment_bias } => {
                    if *out == 0 {
                        return Err(bad("dense layer needs a positive output size".into()));
                    }
                    (*out, Some((*out, dim + *augment_bias as usize)))
                }
                LayerSpec::Grouped {
                    groups,
                    out_per_group,
                    augment_bias,
                } => {
                    if *groups == 0 || *out_per_group == 0 || !dim.is_multiple_of(*groups) {
                        return Err(bad(format!("grouped layer with {groups} groups cannot split input of size {dim}")));
                    }
                    let in_pg = dim / groups;
                    (
                        groups * out_per_group,
                        Some((groups * out_per_group, in_pg + *augment_bias as usize)),
                    )
                }
                LayerSpec::Conv2d {
                    kernel,
                    filters,
                    height,
                    width,
                    channels,
                } => {
                    if *kernel == 0 || *filters == 0 {
                        return Err(bad("conv2d needs positive kernel size and filter count".into()));
                    }
                    if channels * height * width != dim {
                        return Err(bad(format!(
                            "conv2d expects input {channels}x{height}x{width} = {}, got {dim}",
                            channels * height * width
                        )));
                    }
                    (filters * height * width, Some((*filters, channels * kernel * kernel + 1)))
                }
                LayerSpec::Relu => (dim, None),
                LayerSpec::LayerNorm { eps } => {
                    if !(*eps > 0.0) {
                        return Err(bad("layer norm epsilon must be positive".into()));
                    }
                    (dim, None)
                }
            };
            layers.push(Layer {
                spec,
                in_dim: dim,
                out_dim,
                block,
                offset,
            });
            if let Some((r, c)) = block {
                offset += r * c;
            }
            dim = out_dim;
        }
        Ok(Self {
            input_dim,
            layers,
            param_count: offset,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(self.input_dim, |l| l.out_dim)
    }

    /// Total number of weights `q`.
    pub fn param_count(&self) -> usize {
        self.param_count
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec.clone()).collect()
    }

    /// `(rows, cols)` of every parametric block, in layer order.
    pub fn block_shapes(&self) -> Vec<(usize, usize)> {
        self.layers.iter().filter_map(|l| l.block).collect()
    }

    fn block_offsets(&self) -> Vec<usize> {
        let mut offs: Vec<usize> = self.layers.iter().filter(|l| l.block.is_some()).map(|l| l.offset).collect();
        offs.push(self.param_count);
        offs
    }

    pub fn zeros(&self) -> FnnParams {
        FnnParams {
            data: vec![0.0; self.param_count],
            offsets: self.block_offsets(),
        }
    }

    /// Wraps a flat weight vector laid out in block order.
    pub fn params_from_flat(&self, data: Vec<f64>) -> Result<FnnParams> {
        if data.len() != self.param_count {
            return Err(Error::dim("params_from_flat", self.param_count, data.len()));
        }
        Ok(FnnParams {
            data,
            offsets: self.block_offsets(),
        })
    }

    pub fn mask_from_flat(&self, data: Vec<u8>) -> Result<Mask> {
        if data.len() != self.param_count {
            return Err(Error::dim("mask_from_flat", self.param_count, data.len()));
        }
        if data.iter().any(|&b| b > 1) {
            return Err(Error::InvalidArgument("mask entries must be 0 or 1".into()));
        }
        Ok(Mask {
            data,
            offsets: self.block_offsets(),
        })
    }

    pub fn full_mask(&self) -> Mask {
        Mask {
            data: vec![1; self.param_count],
            offsets: self.block_offsets(),
        }
    }

    fn check_params(&self, w: &FnnParams) -> Result<()> {
        if w.data.len() != self.param_count {
            return Err(Error::dim("fnn parameters", self.param_count, w.data.len()));
        }
        Ok(())
    }

    /// Output only; no tape.
    pub fn predict(&self, w: &FnnParams, x: &[f64]) -> Result<Vec<f64>> {
        self.check_params(w)?;
        self.check_input(x)?;
        let mut cur = x.to_vec();
        for layer in &self.layers {
            let (next, _) = layer_forward(layer, &w.data, &cur);
            cur = next;
        }
        Ok(cur)
    }

    /// `H_W(x)` with the activation cache needed by [`Fnn::backward`].
    pub fn forward(&self, w: &FnnParams, x: &[f64]) -> Result<(Vec<f64>, Tape)> {
        self.check_params(w)?;
        let tape = self.forward_tape(&w.data, x)?;
        let out = tape.acts.last().cloned().unwrap_or_default();
        Ok((
            out,
            Tape {
                fingerprint: fingerprint(&w.data),
                ..tape
            },
        ))
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::Layer {
                layer: 0,
                msg: format!("expected input of length {}, got {}", self.input_dim, x.len()),
            });
        }
        Ok(())
    }

    /// Tape without the parameter fingerprint; the caller vouches for `w`.
    pub(crate) fn forward_tape(&self, w: &[f64], x: &[f64]) -> Result<Tape> {
        self.check_input(x)?;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        let mut aux = Vec::with_capacity(self.layers.len());
        acts.push(x.to_vec());
        for layer in &self.layers {
            let (next, a) = layer_forward(layer, w, acts.last().expect("nonempty"));
            acts.push(next);
            aux.push(a);
        }
        Ok(Tape { fingerprint: 0, acts, aux })
    }

    /// Reverse-mode gradients of `⟨upstream, H_W(x)⟩` with respect to `W`
    /// and `x`.
    pub fn backward(&self, tape: &Tape, w: &FnnParams, upstream: &[f64]) -> Result<(FnnParams, Vec<f64>)> {
        self.check_params(w)?;
        if tape.fingerprint != fingerprint(&w.data) {
            return Err(Error::StaleTape);
        }
        let mut grad = self.zeros();
        let gx = self.backward_into(tape, &w.data, upstream, &mut grad.data)?;
        Ok((grad, gx))
    }

    /// Accumulates the weight gradient into `grad_w` and returns the input
    /// gradient.
    pub(crate) fn backward_into(&self, tape: &Tape, w: &[f64], upstream: &[f64], grad_w: &mut [f64]) -> Result<Vec<f64>> {
        if tape.acts.len() != self.layers.len() + 1 || tape.acts[0].len() != self.input_dim {
            return Err(Error::StaleTape);
        }
        if upstream.len() != self.output_dim() {
            return Err(Error::dim("fnn backward", self.output_dim(), upstream.len()));
        }
        let mut up = upstream.to_vec();
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            if tape.acts[idx].len() != layer.in_dim || tape.acts[idx + 1].len() != layer.out_dim {
                return Err(Error::StaleTape);
            }
            up = layer_backward(layer, w, &tape.acts[idx], &tape.acts[idx + 1], tape.aux[idx], &up, grad_w);
        }
        Ok(up)
    }

    /// Dense or grouped block `i` (in parametric order) as a full matrix
    /// acting on the (bias-augmented) layer input.
    pub fn block_matrix(&self, w: &FnnParams, i: usize) -> Result<Mat> {
        let layer = self
            .layers
            .iter()
            .filter(|l| l.block.is_some())
            .nth(i)
            .ok_or_else(|| Error::InvalidArgument(format!("no parametric block {i}")))?;
        let (r, c) = layer.block.expect("parametric");
        let blk = &w.data[layer.offset..layer.offset + r * c];
        match layer.spec {
            LayerSpec::Dense { .. } => Mat::new(r, c, blk.to_vec()),
            LayerSpec::Grouped {
                groups,
                out_per_group,
                augment_bias,
            } => {
                let in_pg = layer.in_dim / groups;
                let cols = layer.in_dim + augment_bias as usize;
                let mut m = vec![0.0; r * cols];
                for g in 0..groups {
                    for o in 0..out_per_group {
                        let row = g * out_per_group + o;
                        for k in 0..in_pg {
                            m[row * cols + g * in_pg + k] = blk[row * c + k];
                        }
                        if augment_bias {
                            m[row * cols + layer.in_dim] = blk[row * c + in_pg];
                        }
                    }
                }
                Mat::new(r, cols, m)
            }
            _ => Err(Error::InvalidArgument("block_matrix supports dense and grouped layers".into())),
        }
    }
}

/// Activation cache from one forward pass.
#[derive(Clone, Debug)]
pub struct Tape {
    fingerprint: u64,
    acts: Vec<Vec<f64>>,
    // 1/sqrt(var + eps) for layer norms, unused otherwise
    aux: Vec<f64>,
}

impl Tape {
    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("tape has an input")
    }
}

fn fingerprint(data: &[f64]) -> u64 {
    data.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, v| {
        (h ^ v.to_bits()).wrapping_mul(0x0000_0100_0000_01b3).rotate_left(5)
    })
}

fn layer_forward(layer: &Layer, w: &[f64], x: &[f64]) -> (Vec<f64>, f64) {
    match layer.spec {
        LayerSpec::Dense { augment_bias, .. } => {
            let (r, c) = layer.block.expect("parametric");
            let blk = &w[layer.offset..layer.offset + r * c];
            let n = layer.in_dim;
            let out = blk
                .chunks_exact(c)
                .map(|row| {
                    let mut s = dot(&row[..n], x);
                    if augment_bias {
                        s += row[n];
                    }
                    s
                })
                .collect();
            (out, 0.0)
        }
        LayerSpec::Grouped {
            groups,
            out_per_group,
            augment_bias,
        } => {
            let (r, c) = layer.block.expect("parametric");
            let blk = &w[layer.offset..layer.offset + r * c];
            let in_pg = layer.in_dim / groups;
            let mut out = vec![0.0; r];
            for g in 0..groups {
                let xg = &x[g * in_pg..(g + 1) * in_pg];
                for o in 0..out_per_group {
                    let row_idx = g * out_per_group + o;
                    let row = &blk[row_idx * c..(row_idx + 1) * c];
                    let mut s = dot(&row[..in_pg], xg);
                    if augment_bias {
                        s += row[in_pg];
                    }
                    out[row_idx] = s;
                }
            }
            (out, 0.0)
        }
        LayerSpec::Conv2d {
            kernel,
            filters,
            height,
            width,
            channels,
        } => {
            let (_, c) = layer.block.expect("parametric");
            let blk = &w[layer.offset..layer.offset + filters * c];
            let pad = (kernel as isize - 1) / 2;
            let hw = height * width;
            let mut out = vec![0.0; filters * hw];
            for f in 0..filters {
                let wf = &blk[f * c..(f + 1) * c];
                let bias = wf[c - 1];
                let of = &mut out[f * hw..(f + 1) * hw];
                of.iter_mut().for_each(|v| *v = bias);
                for ch in 0..channels {
                    let xc = &x[ch * hw..(ch + 1) * hw];
                    for ki in 0..kernel {
                        for kj in 0..kernel {
                            let wv = wf[(ch * kernel + ki) * kernel + kj];
                            if wv == 0.0 {
                                continue;
                            }
                            let di = ki as isize - pad;
                            let dj = kj as isize - pad;
                            for i in 0..height {
                                let si = i as isize + di;
                                if si < 0 || si >= height as isize {
                                    continue;
                                }
                                let (j0, j1) = col_range(width, dj);
                                let src = &xc[si as usize * width..(si as usize + 1) * width];
                                let dst = &mut of[i * width..(i + 1) * width];
                                for j in j0..j1 {
                                    dst[j] += wv * src[(j as isize + dj) as usize];
                                }
                            }
                        }
                    }
                }
            }
            (out, 0.0)
        }
        LayerSpec::Relu => (x.iter().map(|v| v.max(0.0)).collect(), 0.0),
        LayerSpec::LayerNorm { eps } => {
            let n = x.len() as f64;
            let mean = x.iter().sum::<f64>() / n;
            let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let inv = 1.0 / (var + eps).sqrt();
            (x.iter().map(|v| (v - mean) * inv).collect(), inv)
        }
    }
}

// output columns j whose source column j + dj lies inside the image
fn col_range(width: usize, dj: isize) -> (usize, usize) {
    let lo = (-dj).max(0) as usize;
    let hi = (width as isize - dj).min(width as isize).max(0) as usize;
    (lo.min(width), hi)
}

fn layer_backward(layer: &Layer, w: &[f64], x: &[f64], y: &[f64], aux: f64, up: &[f64], grad_w: &mut [f64]) -> Vec<f64> {
    match layer.spec {
        LayerSpec::Dense { augment_bias, .. } => {
            let (r, c) = layer.block.expect("parametric");
            let blk = &w[layer.offset..layer.offset + r * c];
            let gblk = &mut grad_w[layer.offset..layer.offset + r * c];
            let n = layer.in_dim;
            let mut gx = vec![0.0; n];
            for ((row, grow), &u) in blk.chunks_exact(c).zip(gblk.chunks_exact_mut(c)).zip(up) {
                if u == 0.0 {
                    continue;
                }
                axpy(u, x, &mut grow[..n]);
                if augment_bias {
                    grow[n] += u;
                }
                axpy(u, &row[..n], &mut gx);
            }
            gx
        }
        LayerSpec::Grouped {
            groups,
            out_per_group,
            augment_bias,
        } => {
            let (r, c) = layer.block.expect("parametric");
            let blk = &w[layer.offset..layer.offset + r * c];
            let gblk = &mut grad_w[layer.offset..layer.offset + r * c];
            let in_pg = layer.in_dim / groups;
            let mut gx = vec![0.0; layer.in_dim];
            for g in 0..groups {
                let xg = &x[g * in_pg..(g + 1) * in_pg];
                for o in 0..out_per_group {
                    let row_idx = g * out_per_group + o;
                    let u = up[row_idx];
                    if u == 0.0 {
                        continue;
                    }
                    let grow = &mut gblk[row_idx * c..(row_idx + 1) * c];
                    axpy(u, xg, &mut grow[..in_pg]);
                    if augment_bias {
                        grow[in_pg] += u;
                    }
                    axpy(u, &blk[row_idx * c..row_idx * c + in_pg], &mut gx[g * in_pg..(g + 1) * in_pg]);
                }
            }
            gx
        }
        LayerSpec::Conv2d {
            kernel,
            filters,
            height,
            width,
            channels,
        } => {
            let (_, c) = layer.block.expect("parametric");
            let blk = &w[layer.offset..layer.offset + filters * c];
            let gblk = &mut grad_w[layer.offset..layer.offset + filters * c];
            let pad = (kernel as isize - 1) / 2;
            let hw = height * width;
            let mut gx = vec![0.0; channels * hw];
            for f in 0..filters {
                let uf = &up[f * hw..(f + 1) * hw];
                gblk[f * c + c - 1] += uf.iter().sum::<f64>();
                for ch in 0..channels {
                    let xc = &x[ch * hw..(ch + 1) * hw];
                    let gxc = &mut gx[ch * hw..(ch + 1) * hw];
                    for ki in 0..kernel {
                        for kj in 0..kernel {
                            let widx = f * c + (ch * kernel + ki) * kernel + kj;
                            let wv = blk[widx];
                            let di = ki as isize - pad;
                            let dj = kj as isize - pad;
                            let (j0, j1) = col_range(width, dj);
                            let mut gw = 0.0;
                            for i in 0..height {
                                let si = i as isize + di;
                                if si < 0 || si >= height as isize {
                                    continue;
                                }
                                let si = si as usize;
                                for j in j0..j1 {
                                    let sj = (j as isize + dj) as usize;
                                    let u = uf[i * width + j];
                                    gw += u * xc[si * width + sj];
                                    gxc[si * width + sj] += wv * u;
                                }
                            }
                            gblk[widx] += gw;
                        }
                    }
                }
            }
            gx
        }
        LayerSpec::Relu => x.iter().zip(up).map(|(&xi, &u)| if xi > 0.0 { u } else { 0.0 }).collect(),
        LayerSpec::LayerNorm { .. } => {
            let n = up.len() as f64;
            let mean_u = up.iter().sum::<f64>() / n;
            let mean_uy = dot(up, y) / n;
            up.iter().zip(y).map(|(&u, &yi)| aux * (u - mean_u - yi * mean_uy)).collect()
        }
    }
}

/// Flat weight vector with per-block boundaries.
#[derive(Clone, Debug, PartialEq)]
pub struct FnnParams {
    data: Vec<f64>,
    offsets: Vec<usize>,
}

impl FnnParams {
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn num_blocks(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn block(&self, i: usize) -> &[f64] {
        &self.data[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn block_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Same layout, new values.
    pub fn with_data(&self, data: Vec<f64>) -> Result<Self> {
        if data.len() != self.data.len() {
            return Err(Error::dim("FnnParams::with_data", self.data.len(), data.len()));
        }
        Ok(Self {
            data,
            offsets: self.offsets.clone(),
        })
    }
}

/// Binary sparsity pattern congruent to an [`FnnParams`].
#[derive(Clone, Debug, PartialEq)]
pub struct Mask {
    data: Vec<u8>,
    offsets: Vec<usize>,
}

impl Mask {
    pub fn as_slice(&self) -> &[u8] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, k: usize) -> bool {
        self.data[k] == 1
    }

    pub fn set(&mut self, k: usize, on: bool) {
        self.data[k] = on as u8;
    }

    /// `‖Λ‖₀`.
    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&b| b == 1).count()
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            data: vec![0; self.data.len()],
            offsets: self.offsets.clone(),
        }
    }
}

/// `W ⊙ Λ`.
pub fn apply_mask(w: &FnnParams, m: &Mask) -> Result<FnnParams> {
    if w.offsets != m.offsets {
        return Err(Error::dim("apply_mask", format!("{:?}", w.offsets), format!("{:?}", m.offsets)));
    }
    Ok(FnnParams {
        data: w.data.iter().zip(&m.data).map(|(&v, &b)| if b == 1 { v } else { 0.0 }).collect(),
        offsets: w.offsets.clone(),
    })
}

/// The two-layer ReLU network `dense(2d, bias) → relu → dense(d)` that
/// computes the elastic-net shrinkage `s_γ` exactly: hidden unit `i` is
/// `relu((x_i − γλ₁)/(1+γλ₂))`, unit `d+i` is `relu((−x_i − γλ₁)/(1+γλ₂))`,
/// and the output block is `[I, −I]`.
pub fn build_exact_prox_net(gamma: f64, lambda1: f64, lambda2: f64, d: usize) -> Result<(Fnn, FnnParams)> {
    let fnn = Fnn::new(d, vec![LayerSpec::dense(2 * d, true), LayerSpec::Relu, LayerSpec::dense(d, false)])?;
    let w = exact_prox_weights(&fnn, gamma, lambda1, lambda2)?;
    Ok((fnn, w))
}

/// Per-coordinate variant of [`build_exact_prox_net`]: the same function
/// with block-diagonal layers, `7d` weights in total.
pub fn build_exact_prox_net_grouped(gamma: f64, lambda1: f64, lambda2: f64, d: usize) -> Result<(Fnn, FnnParams)> {
    let fnn = Fnn::new(
        d,
        vec![
            LayerSpec::Grouped {
                groups: d,
                out_per_group: 2,
                augment_bias: true,
            },
            LayerSpec::Relu,
            LayerSpec::Grouped {
                groups: d,
                out_per_group: 1,
                augment_bias: true,
            },
        ],
    )?;
    let w = exact_prox_weights(&fnn, gamma, lambda1, lambda2)?;
    Ok((fnn, w))
}

fn exact_prox_weights(fnn: &Fnn, gamma: f64, lambda1: f64, lambda2: f64) -> Result<FnnParams> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("prox step must be positive, got {gamma}")));
    }
    let d = fnn.input_dim();
    let scale = 1.0 / (1.0 + gamma * lambda2);
    let shift = -gamma * lambda1 * scale;
    let specs = fnn.specs();
    let incompatible = || Error::InvalidArgument("network shape does not match the exact prox construction".into());
    if specs.len() != 3 || specs[1] != LayerSpec::Relu || fnn.output_dim() != d {
        return Err(incompatible());
    }
    let mut w = fnn.zeros();
    match (&specs[0], &specs[2]) {
        (LayerSpec::Dense { out, augment_bias: true }, LayerSpec::Dense { out: out2, augment_bias }) if *out == 2 * d && *out2 == d => {
            let c1 = d + 1;
            let b0 = w.block_mut(0);
            for i in 0..d {
                b0[i * c1 + i] = scale;
                b0[i * c1 + d] = shift;
                b0[(d + i) * c1 + i] = -scale;
                b0[(d + i) * c1 + d] = shift;
            }
            let c2 = 2 * d + *augment_bias as usize;
            let b1 = w.block_mut(1);
            for i in 0..d {
                b1[i * c2 + i] = 1.0;
                b1[i * c2 + d + i] = -1.0;
            }
        }
        (
            LayerSpec::Grouped {
                groups,
                out_per_group: 2,
                augment_bias: true,
            },
            LayerSpec::Grouped {
                groups: g2,
                out_per_group: 1,
                augment_bias,
            },
        ) if *groups == d && *g2 == d => {
            let b0 = w.block_mut(0);
            for i in 0..d {
                b0[(2 * i) * 2..(2 * i) * 2 + 2].copy_from_slice(&[scale, shift]);
                b0[(2 * i + 1) * 2..(2 * i + 1) * 2 + 2].copy_from_slice(&[-scale, shift]);
            }
            let c2 = 2 + *augment_bias as usize;
            let b1 = w.block_mut(1);
            for i in 0..d {
                b1[i * c2] = 1.0;
                b1[i * c2 + 1] = -1.0;
            }
        }
        _ => return Err(incompatible()),
    }
    Ok(w)
}

/// Weight initialization schemes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitScheme {
    /// `N(0, 2/fan_in)` for every entry of a parametric block.
    HeNormal,
    Zeros,
    /// The exact elastic-net prox network; requires a matching shape.
    ExactProx {
        gamma: f64,
        lambda1: f64,
        lambda2: f64,
    },
}

pub fn init_weights(fnn: &Fnn, scheme: InitScheme, rng: &mut RngState) -> Result<FnnParams> {
    match scheme {
        InitScheme::Zeros => Ok(fnn.zeros()),
        InitScheme::ExactProx { gamma, lambda1, lambda2 } => exact_prox_weights(fnn, gamma, lambda1, lambda2),
        InitScheme::HeNormal => {
            let mut w = fnn.zeros();
            let mut bi = 0;
            for layer in &fnn.layers {
                let fan_in = match layer.spec {
                    LayerSpec::Dense { .. } => layer.in_dim,
                    LayerSpec::Grouped { groups, .. } => layer.in_dim / groups,
                    LayerSpec::Conv2d { kernel, channels, .. } => channels * kernel * kernel,
                    _ => continue,
                };
                let sd = (2.0 / fan_in as f64).sqrt();
                w.block_mut(bi).iter_mut().for_each(|v| *v = sd * rng.normal());
                bi += 1;
            }
            Ok(w)
        }
    }
}
