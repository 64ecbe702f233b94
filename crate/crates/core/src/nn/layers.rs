//! Layer primitives with hand-written backward passes.
//!
//! Activations are `Seq` values: `channels × len`, channel-major.

use super::params::{Grads, ParamId, ParamStore};

#[derive(Debug, Clone, PartialEq)]
pub struct Seq {
    pub channels: usize,
    pub len: usize,
    pub data: Vec<f64>,
}

impl Seq {
    pub fn zeros(channels: usize, len: usize) -> Self {
        Seq { channels, len, data: vec![0.0; channels * len] }
    }

    pub fn from_vec(channels: usize, len: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), channels * len);
        Seq { channels, len, data }
    }

    #[inline]
    pub fn at(&self, c: usize, i: usize) -> f64 {
        self.data[c * self.len + i]
    }

    pub fn row(&self, c: usize) -> &[f64] {
        &self.data[c * self.len..(c + 1) * self.len]
    }

    pub fn row_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.data[c * self.len..(c + 1) * self.len]
    }

    pub fn add(&self, other: &Seq) -> Seq {
        debug_assert_eq!((self.channels, self.len), (other.channels, other.len));
        Seq { data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(), ..*self }
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Seq {
        Seq { data: self.data.iter().map(|&x| f(x)).collect(), ..*self }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn silu(x: f64) -> f64 {
    x * sigmoid(x)
}

pub fn silu_grad(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 + x * (1.0 - s))
}

pub fn silu_seq(x: &Seq) -> Seq {
    x.map(silu)
}

/// `gy ⊙ silu'(x)`
pub fn silu_backward(x: &Seq, gy: &Seq) -> Seq {
    Seq { data: x.data.iter().zip(&gy.data).map(|(&a, &g)| g * silu_grad(a)).collect(), ..*x }
}

/// Kernel-3, padding-1 convolution along the sequence.
#[derive(Debug, Clone)]
pub struct Conv1d {
    pub weight: ParamId,
    pub bias: ParamId,
    pub cin: usize,
    pub cout: usize,
}

const K: usize = 3;

impl Conv1d {
    pub fn new(store: &mut ParamStore, name: &str, cin: usize, cout: usize) -> Self {
        let weight = store.register(format!("{name}.weight"), cout * cin * K, cin * K);
        let bias = store.register(format!("{name}.bias"), cout, cin * K);
        Conv1d { weight, bias, cin, cout }
    }

    pub fn forward(&self, p: &ParamStore, x: &Seq) -> Seq {
        debug_assert_eq!(x.channels, self.cin);
        let (w, b) = (p.get(self.weight), p.get(self.bias));
        let l = x.len;
        let mut y = Seq::zeros(self.cout, l);
        for o in 0..self.cout {
            let yo = y.row_mut(o);
            yo.fill(b[o]);
            for c in 0..self.cin {
                let xc = x.row(c);
                let wk = &w[(o * self.cin + c) * K..(o * self.cin + c + 1) * K];
                // tap k reads x[i + k - 1]
                for i in 0..l {
                    let mut acc = wk[1] * xc[i];
                    if i > 0 {
                        acc += wk[0] * xc[i - 1];
                    }
                    if i + 1 < l {
                        acc += wk[2] * xc[i + 1];
                    }
                    yo[i] += acc;
                }
            }
        }
        y
    }

    pub fn backward(&self, p: &ParamStore, x: &Seq, gy: &Seq, g: &mut Grads) -> Seq {
        let w = p.get(self.weight);
        let l = x.len;
        let mut gx = Seq::zeros(self.cin, l);
        {
            let gb = g.get_mut(self.bias);
            for o in 0..self.cout {
                gb[o] += gy.row(o).iter().sum::<f64>();
            }
        }
        let gw = g.get_mut(self.weight);
        for o in 0..self.cout {
            let go = gy.row(o);
            for c in 0..self.cin {
                let xc = x.row(c);
                let base = (o * self.cin + c) * K;
                let (mut g0, mut g1, mut g2) = (0.0, 0.0, 0.0);
                for i in 0..l {
                    g1 += go[i] * xc[i];
                    if i > 0 {
                        g0 += go[i] * xc[i - 1];
                    }
                    if i + 1 < l {
                        g2 += go[i] * xc[i + 1];
                    }
                }
                gw[base] += g0;
                gw[base + 1] += g1;
                gw[base + 2] += g2;
                let gxc = gx.row_mut(c);
                let wk = &w[base..base + K];
                for j in 0..l {
                    // y[i] uses x[j] with k = j - i + 1
                    let mut acc = wk[1] * go[j];
                    if j + 1 < l {
                        acc += wk[0] * go[j + 1];
                    }
                    if j > 0 {
                        acc += wk[2] * go[j - 1];
                    }
                    gxc[j] += acc;
                }
            }
        }
        gx
    }
}

/// Dense layer on vectors: y = W x + b.
#[derive(Debug, Clone)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
    pub nin: usize,
    pub nout: usize,
}

impl Linear {
    pub fn new(store: &mut ParamStore, name: &str, nin: usize, nout: usize) -> Self {
        let weight = store.register(format!("{name}.weight"), nout * nin, nin);
        let bias = store.register(format!("{name}.bias"), nout, nin);
        Linear { weight, bias, nin, nout }
    }

    pub fn forward(&self, p: &ParamStore, x: &[f64]) -> Vec<f64> {
        let (w, b) = (p.get(self.weight), p.get(self.bias));
        (0..self.nout)
            .map(|o| b[o] + w[o * self.nin..(o + 1) * self.nin].iter().zip(x).map(|(a, c)| a * c).sum::<f64>())
            .collect()
    }

    pub fn backward(&self, p: &ParamStore, x: &[f64], gy: &[f64], g: &mut Grads) -> Vec<f64> {
        let w = p.get(self.weight);
        let mut gx = vec![0.0; self.nin];
        for o in 0..self.nout {
            for i in 0..self.nin {
                gx[i] += w[o * self.nin + i] * gy[o];
            }
        }
        let gb = g.get_mut(self.bias);
        for o in 0..self.nout {
            gb[o] += gy[o];
        }
        let gw = g.get_mut(self.weight);
        for o in 0..self.nout {
            for i in 0..self.nin {
                gw[o * self.nin + i] += gy[o] * x[i];
            }
        }
        gx
    }
}

/// Per-position affine map across channels (kernel-1 convolution).
#[derive(Debug, Clone)]
pub struct Pointwise {
    pub weight: ParamId,
    pub bias: ParamId,
    pub cin: usize,
    pub cout: usize,
}

impl Pointwise {
    pub fn new(store: &mut ParamStore, name: &str, cin: usize, cout: usize) -> Self {
        let weight = store.register(format!("{name}.weight"), cout * cin, cin);
        let bias = store.register(format!("{name}.bias"), cout, cin);
        Pointwise { weight, bias, cin, cout }
    }

    pub fn forward(&self, p: &ParamStore, x: &Seq) -> Seq {
        let (w, b) = (p.get(self.weight), p.get(self.bias));
        let mut y = Seq::zeros(self.cout, x.len);
        for o in 0..self.cout {
            let yo = y.row_mut(o);
            yo.fill(b[o]);
            for c in 0..self.cin {
                let wc = w[o * self.cin + c];
                for (yi, xi) in yo.iter_mut().zip(x.row(c)) {
                    *yi += wc * xi;
                }
            }
        }
        y
    }

    pub fn backward(&self, p: &ParamStore, x: &Seq, gy: &Seq, g: &mut Grads) -> Seq {
        let w = p.get(self.weight);
        let mut gx = Seq::zeros(self.cin, x.len);
        for o in 0..self.cout {
            for c in 0..self.cin {
                let wc = w[o * self.cin + c];
                for (gi, gv) in gx.row_mut(c).iter_mut().zip(gy.row(o)) {
                    *gi += wc * gv;
                }
            }
        }
        let gb = g.get_mut(self.bias);
        for o in 0..self.cout {
            gb[o] += gy.row(o).iter().sum::<f64>();
        }
        let gw = g.get_mut(self.weight);
        for o in 0..self.cout {
            for c in 0..self.cin {
                gw[o * self.cin + c] += gy.row(o).iter().zip(x.row(c)).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        gx
    }
}

/// Sinusoidal embedding of a timestep with base period 10000.
pub fn timestep_embedding(t: usize, dim: usize) -> Vec<f64> {
    let half = dim / 2;
    let mut out = vec![0.0; dim];
    for i in 0..half {
        let freq = (-(10000f64.ln()) * i as f64 / half as f64).exp();
        let arg = t as f64 * freq;
        out[i] = arg.sin();
        out[half + i] = arg.cos();
    }
    out
}

/// Adds a per-channel vector to every position.
pub fn add_channel_bias(x: &Seq, v: &[f64]) -> Seq {
    let mut y = x.clone();
    for c in 0..x.channels {
        for e in y.row_mut(c) {
            *e += v[c];
        }
    }
    y
}

/// Gradient of [`add_channel_bias`] with respect to the vector.
pub fn channel_sums(gy: &Seq) -> Vec<f64> {
    (0..gy.channels).map(|c| gy.row(c).iter().sum()).collect()
}

pub fn avg_pool2(x: &Seq) -> Seq {
    let l = x.len / 2;
    let mut y = Seq::zeros(x.channels, l);
    for c in 0..x.channels {
        let (xr, yr) = (x.row(c).to_vec(), y.row_mut(c));
        for i in 0..l {
            yr[i] = 0.5 * (xr[2 * i] + xr[2 * i + 1]);
        }
    }
    y
}

pub fn avg_pool2_backward(gy: &Seq) -> Seq {
    let mut gx = Seq::zeros(gy.channels, gy.len * 2);
    for c in 0..gy.channels {
        let g = gy.row(c).to_vec();
        let r = gx.row_mut(c);
        for i in 0..g.len() {
            r[2 * i] = 0.5 * g[i];
            r[2 * i + 1] = 0.5 * g[i];
        }
    }
    gx
}

/// Nearest-neighbour ×2 upsampling.
pub fn upsample2(x: &Seq) -> Seq {
    let mut y = Seq::zeros(x.channels, x.len * 2);
    for c in 0..x.channels {
        let xr = x.row(c).to_vec();
        let r = y.row_mut(c);
        for i in 0..xr.len() {
            r[2 * i] = xr[i];
            r[2 * i + 1] = xr[i];
        }
    }
    y
}

pub fn upsample2_backward(gy: &Seq) -> Seq {
    let l = gy.len / 2;
    let mut gx = Seq::zeros(gy.channels, l);
    for c in 0..gy.channels {
        let g = gy.row(c).to_vec();
        let r = gx.row_mut(c);
        for i in 0..l {
            r[i] = g[2 * i] + g[2 * i + 1];
        }
    }
    gx
}

pub fn concat_channels(a: &Seq, b: &Seq) -> Seq {
    assert_eq!(a.len, b.len);
    let mut data = a.data.clone();
    data.extend_from_slice(&b.data);
    Seq { channels: a.channels + b.channels, len: a.len, data }
}

pub fn split_channels(g: &Seq, first: usize) -> (Seq, Seq) {
    let cut = first * g.len;
    (
        Seq { channels: first, len: g.len, data: g.data[..cut].to_vec() },
        Seq { channels: g.channels - first, len: g.len, data: g.data[cut..].to_vec() },
    )
}

/// Single-head dot-product self-attention over positions with a residual
/// connection: y = x + W_o·(V·softmax(QᵀK/√c)ᵀ) + b_o.
#[derive(Debug, Clone)]
pub struct SelfAttention {
    pub wq: ParamId,
    pub wk: ParamId,
    pub wv: ParamId,
    pub wo: ParamId,
    pub bo: ParamId,
    pub channels: usize,
}

#[derive(Debug, Clone)]
pub struct AttentionCache {
    q: Seq,
    k: Seq,
    v: Seq,
    /// Row-stochastic len×len weights.
    attn: Vec<f64>,
    o: Seq,
}

fn matmul_cc(w: &[f64], x: &Seq) -> Seq {
    // (c×c) · (c×L)
    let c = x.channels;
    let mut y = Seq::zeros(c, x.len);
    for r in 0..c {
        for s in 0..c {
            let ws = w[r * c + s];
            if ws == 0.0 {
                continue;
            }
            let xs = x.row(s).to_vec();
            for (yi, xi) in y.row_mut(r).iter_mut().zip(&xs) {
                *yi += ws * xi;
            }
        }
    }
    y
}

fn matmul_cc_t(w: &[f64], gy: &Seq) -> Seq {
    // Wᵀ · gy
    let c = gy.channels;
    let mut gx = Seq::zeros(c, gy.len);
    for r in 0..c {
        let gr = gy.row(r).to_vec();
        for s in 0..c {
            let ws = w[r * c + s];
            for (gi, g) in gx.row_mut(s).iter_mut().zip(&gr) {
                *gi += ws * g;
            }
        }
    }
    gx
}

fn outer_acc(gw: &mut [f64], gy: &Seq, x: &Seq) {
    let c = x.channels;
    for r in 0..c {
        for s in 0..c {
            gw[r * c + s] += gy.row(r).iter().zip(x.row(s)).map(|(a, b)| a * b).sum::<f64>();
        }
    }
}

impl SelfAttention {
    pub fn new(store: &mut ParamStore, name: &str, channels: usize) -> Self {
        let n = channels * channels;
        SelfAttention {
            wq: store.register(format!("{name}.q.weight"), n, channels),
            wk: store.register(format!("{name}.k.weight"), n, channels),
            wv: store.register(format!("{name}.v.weight"), n, channels),
            wo: store.register(format!("{name}.o.weight"), n, channels),
            bo: store.register(format!("{name}.o.bias"), channels, channels),
            channels,
        }
    }

    pub fn forward(&self, p: &ParamStore, x: &Seq) -> (Seq, AttentionCache) {
        let (c, l) = (x.channels, x.len);
        let q = matmul_cc(p.get(self.wq), x);
        let k = matmul_cc(p.get(self.wk), x);
        let v = matmul_cc(p.get(self.wv), x);
        let scale = 1.0 / (c as f64).sqrt();
        let mut attn = vec![0.0; l * l];
        for i in 0..l {
            let row = &mut attn[i * l..(i + 1) * l];
            for (j, r) in row.iter_mut().enumerate() {
                *r = (0..c).map(|ch| q.at(ch, i) * k.at(ch, j)).sum::<f64>() * scale;
            }
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for r in row.iter_mut() {
                *r = (*r - m).exp();
                z += *r;
            }
            for r in row.iter_mut() {
                *r /= z;
            }
        }
        let mut o = Seq::zeros(c, l);
        for ch in 0..c {
            let vr = v.row(ch).to_vec();
            let or = o.row_mut(ch);
            for i in 0..l {
                or[i] = attn[i * l..(i + 1) * l].iter().zip(&vr).map(|(a, b)| a * b).sum();
            }
        }
        let proj = add_channel_bias(&matmul_cc(p.get(self.wo), &o), p.get(self.bo));
        let y = x.add(&proj);
        (y, AttentionCache { q, k, v, attn, o })
    }

    pub fn backward(&self, p: &ParamStore, x: &Seq, cache: &AttentionCache, gy: &Seq, g: &mut Grads) -> Seq {
        let (c, l) = (x.channels, x.len);
        let scale = 1.0 / (c as f64).sqrt();
        let AttentionCache { q, k, v, attn, o } = cache;

        for (gb, s) in g.get_mut(self.bo).iter_mut().zip(channel_sums(gy)) {
            *gb += s;
        }
        outer_acc(g.get_mut(self.wo), gy, o);
        let go = matmul_cc_t(p.get(self.wo), gy);

        // o[ch,i] = Σ_j v[ch,j]·A[i,j]
        let mut ga = vec![0.0; l * l];
        let mut gv = Seq::zeros(c, l);
        for ch in 0..c {
            let (gor, vr) = (go.row(ch).to_vec(), v.row(ch).to_vec());
            let gvr = gv.row_mut(ch);
            for i in 0..l {
                for j in 0..l {
                    ga[i * l + j] += gor[i] * vr[j];
                    gvr[j] += gor[i] * attn[i * l + j];
                }
            }
        }
        // softmax rows
        let mut gs = vec![0.0; l * l];
        for i in 0..l {
            let a = &attn[i * l..(i + 1) * l];
            let gai = &ga[i * l..(i + 1) * l];
            let dot: f64 = a.iter().zip(gai).map(|(x, y)| x * y).sum();
            for j in 0..l {
                gs[i * l + j] = a[j] * (gai[j] - dot) * scale;
            }
        }
        let mut gq = Seq::zeros(c, l);
        let mut gk = Seq::zeros(c, l);
        for ch in 0..c {
            let (qr, kr) = (q.row(ch).to_vec(), k.row(ch).to_vec());
            for i in 0..l {
                let mut acc = 0.0;
                for j in 0..l {
                    acc += gs[i * l + j] * kr[j];
                }
                gq.row_mut(ch)[i] = acc;
            }
            for j in 0..l {
                let mut acc = 0.0;
                for i in 0..l {
                    acc += gs[i * l + j] * qr[i];
                }
                gk.row_mut(ch)[j] = acc;
            }
        }
        outer_acc(g.get_mut(self.wq), &gq, x);
        outer_acc(g.get_mut(self.wk), &gk, x);
        outer_acc(g.get_mut(self.wv), &gv, x);
        let mut gx = gy.clone();
        for part in [matmul_cc_t(p.get(self.wq), &gq), matmul_cc_t(p.get(self.wk), &gk), matmul_cc_t(p.get(self.wv), &gv)] {
            gx = gx.add(&part);
        }
        gx
    }
}
