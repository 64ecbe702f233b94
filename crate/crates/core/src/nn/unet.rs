use crate::codec::{PointCloudTensor, CHANNELS, COMPONENTS, POINTS};

use super::config::DenoiserConfig;
use super::layers::*;
use super::params::{Grads, ParamId, ParamStore};

/// Number of feature rows when the tensor is viewed as a sequence.
pub const FEATURES: usize = CHANNELS * COMPONENTS;

/// Views a 3×128×3 tensor as 9 features × 128 positions (feature = c·3 + j).
pub fn tensor_to_seq(x: &PointCloudTensor) -> Seq {
    let mut s = Seq::zeros(FEATURES, POINTS);
    for c in 0..CHANNELS {
        for k in 0..POINTS {
            for j in 0..COMPONENTS {
                s.data[(c * COMPONENTS + j) * POINTS + k] = x.get(c, k, j);
            }
        }
    }
    s
}

pub fn seq_to_tensor(s: &Seq) -> PointCloudTensor {
    let mut x = PointCloudTensor::zeros();
    for c in 0..CHANNELS {
        for k in 0..POINTS {
            for j in 0..COMPONENTS {
                x.set(c, k, j, s.data[(c * COMPONENTS + j) * POINTS + k]);
            }
        }
    }
    x
}

/// conv → +time projection → SiLU → conv → SiLU
#[derive(Debug, Clone)]
pub struct Block {
    conv1: Conv1d,
    temb: Linear,
    conv2: Conv1d,
}

#[derive(Debug, Clone)]
pub struct BlockCache {
    x: Seq,
    pre1: Seq,
    act1: Seq,
    pre2: Seq,
}

impl Block {
    fn new(store: &mut ParamStore, name: &str, cin: usize, cout: usize, temb_dim: usize) -> Self {
        Block {
            conv1: Conv1d::new(store, &format!("{name}.conv1"), cin, cout),
            temb: Linear::new(store, &format!("{name}.temb"), temb_dim, cout),
            conv2: Conv1d::new(store, &format!("{name}.conv2"), cout, cout),
        }
    }

    fn forward(&self, p: &ParamStore, x: &Seq, temb: &[f64]) -> (Seq, BlockCache) {
        let h = self.conv1.forward(p, x);
        let pre1 = add_channel_bias(&h, &self.temb.forward(p, temb));
        let act1 = silu_seq(&pre1);
        let pre2 = self.conv2.forward(p, &act1);
        let out = silu_seq(&pre2);
        (out, BlockCache { x: x.clone(), pre1, act1, pre2 })
    }

    /// Returns (∂/∂x, ∂/∂temb).
    fn backward(&self, p: &ParamStore, cache: &BlockCache, temb: &[f64], gy: &Seq, g: &mut Grads) -> (Seq, Vec<f64>) {
        let g_pre2 = silu_backward(&cache.pre2, gy);
        let g_act1 = self.conv2.backward(p, &cache.act1, &g_pre2, g);
        let g_pre1 = silu_backward(&cache.pre1, &g_act1);
        let g_temb = self.temb.backward(p, temb, &channel_sums(&g_pre1), g);
        let gx = self.conv1.backward(p, &cache.x, &g_pre1, g);
        (gx, g_temb)
    }
}

/// 1-D U-Net over the 128 point positions.
#[derive(Debug, Clone)]
pub struct UNet {
    config: DenoiserConfig,
    time: Linear,
    input: Conv1d,
    /// Learned offset per (channel, position) added after the input conv.
    position: ParamId,
    down: Vec<Block>,
    mid: Block,
    attention: Option<SelfAttention>,
    up: Vec<Block>,
    output: Conv1d,
    /// Direct input-to-output path.
    skip: Pointwise,
}

/// Everything the backward pass needs from one forward evaluation.
#[derive(Debug, Clone)]
pub struct Trace {
    emb: Vec<f64>,
    time_pre: Vec<f64>,
    temb: Vec<f64>,
    input: Seq,
    down: Vec<BlockCache>,
    mid: BlockCache,
    attn_in: Seq,
    attn: Option<AttentionCache>,
    up: Vec<BlockCache>,
    out_in: Seq,
}

impl UNet {
    /// Builds the architecture and registers its parameters (zeroed) in a
    /// fresh store.
    pub fn build(config: &DenoiserConfig) -> (Self, ParamStore) {
        let mut store = ParamStore::new();
        let d = config.time_embed_dim;
        let w = &config.widths;
        let time = Linear::new(&mut store, "time", d, d);
        let input = Conv1d::new(&mut store, "input", FEATURES, w[0]);
        let position = store.register("position", w[0] * POINTS, FEATURES * 3);
        let mut down = Vec::new();
        for i in 0..config.stages {
            let cin = if i == 0 { w[0] } else { w[i - 1] };
            down.push(Block::new(&mut store, &format!("down.{i}"), cin, w[i], d));
        }
        let bottom = w[config.stages - 1];
        let mid = Block::new(&mut store, "mid", bottom, bottom, d);
        let attention = config.use_attention.then(|| SelfAttention::new(&mut store, "attn", bottom));
        let mut up = Vec::new();
        for i in 0..config.stages {
            let below = if i + 1 == config.stages { bottom } else { w[i + 1] };
            up.push(Block::new(&mut store, &format!("up.{i}"), below + w[i], w[i], d));
        }
        let output = Conv1d::new(&mut store, "output", w[0], FEATURES);
        let skip = Pointwise::new(&mut store, "skip", FEATURES, FEATURES);
        (UNet { config: config.clone(), time, input, position, down, mid, attention, up, output, skip }, store)
    }

    /// Zeroes the output conv and the direct path so the untrained output is 0.
    pub fn zero_head(&self, p: &mut ParamStore) {
        for id in [self.output.weight, self.output.bias, self.skip.weight, self.skip.bias] {
            p.get_mut(id).iter_mut().for_each(|v| *v = 0.0);
        }
    }

    pub fn config(&self) -> &DenoiserConfig {
        &self.config
    }

    pub fn forward(&self, p: &ParamStore, x: &Seq, t: usize) -> (Seq, Trace) {
        let emb = timestep_embedding(t, self.config.time_embed_dim);
        let time_pre = self.time.forward(p, &emb);
        let temb: Vec<f64> = time_pre.iter().map(|&v| silu(v)).collect();

        let mut h = self.input.forward(p, x);
        for (a, b) in h.data.iter_mut().zip(p.get(self.position)) {
            *a += b;
        }
        let mut skips = Vec::with_capacity(self.config.stages);
        let mut down = Vec::with_capacity(self.config.stages);
        for block in &self.down {
            let (out, cache) = block.forward(p, &h, &temb);
            down.push(cache);
            h = avg_pool2(&out);
            skips.push(out);
        }
        let (mid_out, mid) = self.mid.forward(p, &h, &temb);
        let attn_in = mid_out.clone();
        let (mut h, attn) = match &self.attention {
            Some(a) => {
                let (y, c) = a.forward(p, &mid_out);
                (y, Some(c))
            }
            None => (mid_out, None),
        };
        let mut up = vec![None; self.config.stages];
        for i in (0..self.config.stages).rev() {
            let cat = concat_channels(&upsample2(&h), &skips[i]);
            let (out, cache) = self.up[i].forward(p, &cat, &temb);
            up[i] = Some(cache);
            h = out;
        }
        let y = self.output.forward(p, &h).add(&self.skip.forward(p, x));
        let trace = Trace {
            emb,
            time_pre,
            temb,
            input: x.clone(),
            down,
            mid,
            attn_in,
            attn,
            up: up.into_iter().map(|c| c.expect("every stage visited")).collect(),
            out_in: h,
        };
        (y, trace)
    }

    /// Accumulates parameter gradients for upstream gradient `gy` into `g`.
    pub fn backward(&self, p: &ParamStore, tr: &Trace, gy: &Seq, g: &mut Grads) {
        let d = self.config.time_embed_dim;
        let mut g_temb = vec![0.0; d];
        let mut acc_temb = |v: Vec<f64>| {
            for (a, b) in g_temb.iter_mut().zip(v) {
                *a += b;
            }
        };

        self.skip.backward(p, &tr.input, gy, g);
        let mut gh = self.output.backward(p, &tr.out_in, gy, g);
        let mut g_skips: Vec<Option<Seq>> = vec![None; self.config.stages];
        for i in 0..self.config.stages {
            let (g_cat, gt) = self.up[i].backward(p, &tr.up[i], &tr.temb, &gh, g);
            acc_temb(gt);
            let below = g_cat.channels - self.config.widths[i];
            let (g_up, g_skip) = split_channels(&g_cat, below);
            g_skips[i] = Some(g_skip);
            gh = upsample2_backward(&g_up);
        }
        if let (Some(a), Some(cache)) = (&self.attention, &tr.attn) {
            gh = a.backward(p, &tr.attn_in, cache, &gh, g);
        }
        let (mut gh, gt) = self.mid.backward(p, &tr.mid, &tr.temb, &gh, g);
        acc_temb(gt);
        for i in (0..self.config.stages).rev() {
            let g_out = avg_pool2_backward(&gh).add(g_skips[i].as_ref().expect("skip gradient"));
            let (gx, gt) = self.down[i].backward(p, &tr.down[i], &tr.temb, &g_out, g);
            acc_temb(gt);
            gh = gx;
        }
        for (a, b) in g.get_mut(self.position).iter_mut().zip(&gh.data) {
            *a += b;
        }
        self.input.backward(p, &tr.input, &gh, g);

        let g_pre: Vec<f64> = g_temb.iter().zip(&tr.time_pre).map(|(gv, &x)| gv * silu_grad(x)).collect();
        self.time.backward(p, &tr.emb, &g_pre, g);
    }
}
