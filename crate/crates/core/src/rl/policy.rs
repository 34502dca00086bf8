//! Convolutional feature extractor with actor and critic heads, with
//! hand-written reverse-mode gradients.
//!
//! Weights of a dense layer are stored row-major as `[out × in]`. Batched
//! activations are `N × width` matrices, one row per observation.

use nalgebra::{DMatrix, DMatrixView};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::ENCODING_LEN;
use crate::error::{arg_err, Error, Result};

/// Architecture of the policy network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    pub n_qubits: usize,
    /// Moments visible to the agent, centred on the current one.
    pub kernel_k: usize,
    pub conv_filters: usize,
    /// Moment extent of the convolution kernel, which always spans every
    /// qubit.
    #[serde(default = "default_conv_width")]
    pub conv_width: usize,
    pub feature_dim: usize,
    pub hidden_dim: usize,
    /// Upper bound of every action entry.
    pub p_max: f64,
}

fn default_conv_width() -> usize {
    3
}

impl PolicySpec {
    /// Default architecture: 16 filters and 64 features for one qubit, 32 and
    /// 32 otherwise.
    pub fn for_qubits(n_qubits: usize, p_max: f64) -> Self {
        let (conv_filters, feature_dim) = if n_qubits == 1 { (16, 64) } else { (32, 32) };
        PolicySpec { n_qubits, kernel_k: 3, conv_filters, conv_width: 3, feature_dim, hidden_dim: 256, p_max }
    }

    pub fn action_dim(&self) -> usize {
        self.n_qubits * 4
    }

    /// Length of one flattened `[qubits × k × 8]` window.
    pub fn obs_len(&self) -> usize {
        self.n_qubits * self.kernel_k * ENCODING_LEN
    }

    fn patch_len(&self) -> usize {
        self.n_qubits * self.conv_width * ENCODING_LEN
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.n_qubits) {
            return arg_err(format!("policy qubit count must be in 1..=4, got {}", self.n_qubits));
        }
        if self.kernel_k.is_multiple_of(2) || self.conv_width.is_multiple_of(2) {
            return arg_err("kernel_k and conv_width must be odd");
        }
        if self.conv_filters == 0 || self.feature_dim == 0 || self.hidden_dim == 0 {
            return arg_err("layer widths must be positive");
        }
        if !(self.p_max > 0.0 && self.p_max.is_finite()) {
            return arg_err(format!("p_max must be positive, got {}", self.p_max));
        }
        Ok(())
    }

    /// Named parameter blocks as `(name, rows, cols)`, in storage order.
    pub fn layer_shapes(&self) -> Vec<(&'static str, usize, usize)> {
        let (f, d, h, a) = (self.conv_filters, self.feature_dim, self.hidden_dim, self.action_dim());
        vec![
            ("conv.weight", f, self.patch_len()),
            ("conv.bias", 1, f),
            ("features.weight", d, f * self.kernel_k),
            ("features.bias", 1, d),
            ("actor.hidden.weight", h, d),
            ("actor.hidden.bias", 1, h),
            ("actor.out.weight", a, h),
            ("actor.out.bias", 1, a),
            ("critic.hidden.weight", h, d),
            ("critic.hidden.bias", 1, h),
            ("critic.out.weight", 1, h),
            ("critic.out.bias", 1, 1),
            ("log_std", 1, a),
        ]
    }

    pub fn n_params(&self) -> usize {
        self.layer_shapes().iter().map(|(_, r, c)| r * c).sum()
    }
}

/// Offsets of each block in the flat parameter vector.
#[derive(Debug, Clone, Copy)]
struct Layout {
    conv_w: usize,
    conv_b: usize,
    fe_w: usize,
    fe_b: usize,
    a1_w: usize,
    a1_b: usize,
    a2_w: usize,
    a2_b: usize,
    c1_w: usize,
    c1_b: usize,
    c2_w: usize,
    c2_b: usize,
    log_std: usize,
}

impl Layout {
    fn new(spec: &PolicySpec) -> Self {
        let mut offs = [0usize; 13];
        let mut acc = 0;
        for (i, (_, r, c)) in spec.layer_shapes().iter().enumerate() {
            offs[i] = acc;
            acc += r * c;
        }
        Layout {
            conv_w: offs[0],
            conv_b: offs[1],
            fe_w: offs[2],
            fe_b: offs[3],
            a1_w: offs[4],
            a1_b: offs[5],
            a2_w: offs[6],
            a2_b: offs[7],
            c1_w: offs[8],
            c1_b: offs[9],
            c2_w: offs[10],
            c2_b: offs[11],
            log_std: offs[12],
        }
    }
}

/// Flat parameter vector plus the architecture it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyWeights {
    spec: PolicySpec,
    params: Vec<f64>,
}

impl PolicyWeights {
    pub fn zeros(spec: &PolicySpec) -> Result<Self> {
        spec.validate()?;
        Ok(PolicyWeights { spec: spec.clone(), params: vec![0.0; spec.n_params()] })
    }

    pub fn from_params(spec: &PolicySpec, params: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if params.len() != spec.n_params() {
            return Err(Error::Dimension { expected: spec.n_params(), got: params.len() });
        }
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("policy weights contain non-finite values".into()));
        }
        Ok(PolicyWeights { spec: spec.clone(), params })
    }

    /// Uniform fan-in initialisation. The actor output starts near zero so the
    /// initial means sit near `p_max / 2`; every `σ` starts at
    /// `init_std_frac · p_max`.
    pub fn init<R: Rng + ?Sized>(spec: &PolicySpec, init_std_frac: f64, rng: &mut R) -> Result<Self> {
        let mut w = PolicyWeights::zeros(spec)?;
        let lay = Layout::new(spec);
        let shapes = spec.layer_shapes();
        let starts = [lay.conv_w, lay.fe_w, lay.a1_w, lay.a2_w, lay.c1_w, lay.c2_w];
        let gains = [1.0, 1.0, 1.0, 0.01, 1.0, 1.0];
        let weight_blocks = [0, 2, 4, 6, 8, 10];
        for ((&start, &gain), &block) in starts.iter().zip(&gains).zip(&weight_blocks) {
            let (_, rows, cols) = shapes[block];
            let bound = gain * (3.0 / cols as f64).sqrt();
            for v in &mut w.params[start..start + rows * cols] {
                *v = rng.random_range(-bound..=bound);
            }
        }
        let log_std = (init_std_frac * spec.p_max).ln();
        if !log_std.is_finite() {
            return arg_err("initial standard deviation must be positive");
        }
        w.params[lay.log_std..].fill(log_std);
        Ok(w)
    }

    pub fn spec(&self) -> &PolicySpec {
        &self.spec
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn log_std(&self) -> &[f64] {
        &self.params[Layout::new(&self.spec).log_std..]
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|v| v.is_finite())
    }
}

/// Intermediate activations of a batched forward pass, kept for backprop.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    n: usize,
    patches: DMatrix<f64>,
    conv: DMatrix<f64>,
    flat: DMatrix<f64>,
    feat: DMatrix<f64>,
    actor_hidden: DMatrix<f64>,
    critic_hidden: DMatrix<f64>,
    /// Actor means in `(0, p_max)`, `N × action_dim`.
    pub means: DMatrix<f64>,
    /// Critic outputs, one per observation.
    pub values: Vec<f64>,
}

impl ForwardCache {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn mean_row(&self, i: usize) -> Vec<f64> {
        self.means.row(i).iter().copied().collect()
    }
}

/// `x · Wᵀ + b` with `W` stored row-major as `[out × in]`.
fn dense(x: &DMatrix<f64>, w: &[f64], b: &[f64], out: usize, inp: usize) -> DMatrix<f64> {
    // row-major [out × in] read column-major is Wᵀ
    let wt = DMatrixView::from_slice(w, inp, out);
    let mut y = x * wt;
    for (j, mut col) in y.column_iter_mut().enumerate() {
        col.add_scalar_mut(b[j]);
    }
    y
}

/// Gradients of a dense layer: writes `dW`, `db` and returns `dX`.
fn dense_backward(
    x: &DMatrix<f64>,
    dy: &DMatrix<f64>,
    w: &[f64],
    out: usize,
    inp: usize,
    gw: &mut [f64],
    gb: &mut [f64],
    need_dx: bool,
) -> Option<DMatrix<f64>> {
    // xᵀ·dy is [in × out]; its column-major storage is dW row-major
    let g = x.tr_mul(dy);
    for (dst, src) in gw.iter_mut().zip(g.as_slice()) {
        *dst += src;
    }
    for (j, col) in dy.column_iter().enumerate() {
        gb[j] += col.sum();
    }
    need_dx.then(|| {
        let wt = DMatrixView::from_slice(w, inp, out);
        dy * wt.transpose()
    })
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Forward pass over `n` observations stored back to back in `obs`.
pub fn forward_batch(w: &PolicyWeights, obs: &[f64], n: usize) -> Result<ForwardCache> {
    let s = &w.spec;
    let lay = Layout::new(s);
    let p = &w.params;
    if obs.len() != n * s.obs_len() {
        return Err(Error::Dimension { expected: n * s.obs_len(), got: obs.len() });
    }
    let (k, wd, nq, f) = (s.kernel_k, s.conv_width, s.n_qubits, s.conv_filters);
    let pad = (wd - 1) / 2;
    let patch = s.patch_len();

    // im2col: row (sample, position), columns (qubit, offset, channel)
    let mut patches = DMatrix::<f64>::zeros(n * k, patch);
    for smp in 0..n {
        let o = &obs[smp * s.obs_len()..(smp + 1) * s.obs_len()];
        for j in 0..k {
            let row = smp * k + j;
            for q in 0..nq {
                for dj in 0..wd {
                    let Some(src) = (j + dj).checked_sub(pad).filter(|&m| m < k) else { continue };
                    let base = (q * k + src) * ENCODING_LEN;
                    let col = (q * wd + dj) * ENCODING_LEN;
                    for c in 0..ENCODING_LEN {
                        patches[(row, col + c)] = o[base + c];
                    }
                }
            }
        }
    }
    let mut conv = dense(&patches, &p[lay.conv_w..lay.conv_b], &p[lay.conv_b..lay.fe_w], f, patch);
    conv.apply(|v| *v = v.max(0.0));

    // flatten to one row per sample: position-major, then filter
    let mut flat = DMatrix::<f64>::zeros(n, k * f);
    for smp in 0..n {
        for j in 0..k {
            for fi in 0..f {
                flat[(smp, j * f + fi)] = conv[(smp * k + j, fi)];
            }
        }
    }
    let (d, h, a) = (s.feature_dim, s.hidden_dim, s.action_dim());
    let mut feat = dense(&flat, &p[lay.fe_w..lay.fe_b], &p[lay.fe_b..lay.a1_w], d, k * f);
    feat.apply(|v| *v = v.max(0.0));

    let mut actor_hidden = dense(&feat, &p[lay.a1_w..lay.a1_b], &p[lay.a1_b..lay.a2_w], h, d);
    actor_hidden.apply(|v| *v = v.tanh());
    let mut means = dense(&actor_hidden, &p[lay.a2_w..lay.a2_b], &p[lay.a2_b..lay.c1_w], a, h);
    let p_max = s.p_max;
    means.apply(|v| *v = p_max * logistic(*v));

    let mut critic_hidden = dense(&feat, &p[lay.c1_w..lay.c1_b], &p[lay.c1_b..lay.c2_w], h, d);
    critic_hidden.apply(|v| *v = v.tanh());
    let values = dense(&critic_hidden, &p[lay.c2_w..lay.c2_b], &p[lay.c2_b..lay.log_std], 1, h);

    Ok(ForwardCache {
        n,
        patches,
        conv,
        flat,
        feat,
        actor_hidden,
        critic_hidden,
        means,
        values: values.as_slice().to_vec(),
    })
}

/// Action means and critic value for one observation window.
pub fn policy_forward(w: &PolicyWeights, obs: &[f64]) -> Result<(Vec<f64>, f64)> {
    let c = forward_batch(w, obs, 1)?;
    Ok((c.mean_row(0), c.values[0]))
}

/// Reverse pass. `d_means` is `N × action_dim`, `d_values` has length `N`
/// and `d_log_std` is added to the `log_std` block as is.
pub fn backward(w: &PolicyWeights, cache: &ForwardCache, d_means: &DMatrix<f64>, d_values: &[f64], d_log_std: &[f64]) -> Vec<f64> {
    let s = &w.spec;
    let lay = Layout::new(s);
    let p = &w.params;
    let mut g = vec![0.0; p.len()];
    let (k, f, d, h, a, n) = (s.kernel_k, s.conv_filters, s.feature_dim, s.hidden_dim, s.action_dim(), cache.n);
    let p_max = s.p_max;

    // actor head: μ = p_max·σ(z) ⇒ dμ/dz = μ(1 − μ/p_max)
    let mut dz = d_means.clone();
    dz.zip_apply(&cache.means, |g, m| *g *= m * (1.0 - m / p_max));
    let (gw, rest) = g[lay.a2_w..].split_at_mut(lay.a2_b - lay.a2_w);
    let mut d_ah = dense_backward(&cache.actor_hidden, &dz, &p[lay.a2_w..lay.a2_b], a, h, gw, &mut rest[..a], true).unwrap();
    d_ah.zip_apply(&cache.actor_hidden, |g, t| *g *= 1.0 - t * t);
    let (gw, rest) = g[lay.a1_w..].split_at_mut(lay.a1_b - lay.a1_w);
    let mut d_feat = dense_backward(&cache.feat, &d_ah, &p[lay.a1_w..lay.a1_b], h, d, gw, &mut rest[..h], true).unwrap();

    // critic head
    let dv = DMatrix::from_column_slice(n, 1, d_values);
    let (gw, rest) = g[lay.c2_w..].split_at_mut(lay.c2_b - lay.c2_w);
    let mut d_ch = dense_backward(&cache.critic_hidden, &dv, &p[lay.c2_w..lay.c2_b], 1, h, gw, &mut rest[..1], true).unwrap();
    d_ch.zip_apply(&cache.critic_hidden, |g, t| *g *= 1.0 - t * t);
    let (gw, rest) = g[lay.c1_w..].split_at_mut(lay.c1_b - lay.c1_w);
    d_feat += dense_backward(&cache.feat, &d_ch, &p[lay.c1_w..lay.c1_b], h, d, gw, &mut rest[..h], true).unwrap();

    // feature layer
    d_feat.zip_apply(&cache.feat, |g, y| {
        if y <= 0.0 {
            *g = 0.0
        }
    });
    let (gw, rest) = g[lay.fe_w..].split_at_mut(lay.fe_b - lay.fe_w);
    let d_flat = dense_backward(&cache.flat, &d_feat, &p[lay.fe_w..lay.fe_b], d, k * f, gw, &mut rest[..d], true).unwrap();

    // un-flatten and pass through the conv ReLU
    let mut d_conv = DMatrix::<f64>::zeros(n * k, f);
    for smp in 0..n {
        for j in 0..k {
            for fi in 0..f {
                if cache.conv[(smp * k + j, fi)] > 0.0 {
                    d_conv[(smp * k + j, fi)] = d_flat[(smp, j * f + fi)];
                }
            }
        }
    }
    let (gw, rest) = g[lay.conv_w..].split_at_mut(lay.conv_b - lay.conv_w);
    dense_backward(&cache.patches, &d_conv, &p[lay.conv_w..lay.conv_b], f, s.patch_len(), gw, &mut rest[..f], false);

    for (dst, src) in g[lay.log_std..].iter_mut().zip(d_log_std) {
        *dst += src;
    }
    g
}
