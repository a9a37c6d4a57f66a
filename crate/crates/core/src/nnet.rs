//! Dense kernels with hand-written gradients: linear maps, embeddings, LSTM
//! cells, valid 2-D convolution, activations, cross-entropy, Adam and
//! global-norm clipping. All arithmetic is `f64`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::math;

/// Floor applied to probabilities inside [`cross_entropy`].
pub const LOG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ShapeError {
    #[error("{op}: expected {expected} values, got {got}")]
    Length { op: &'static str, expected: usize, got: usize },
    #[error("{op}: shape {got:?} does not match {expected:?}")]
    Mismatch { op: &'static str, expected: Vec<usize>, got: Vec<usize> },
}

pub fn check_len(op: &'static str, expected: usize, got: usize) -> Result<(), ShapeError> {
    if expected == got {
        Ok(())
    } else {
        Err(ShapeError::Length { op, expected, got })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Tensor { shape: shape.to_vec(), data: vec![0.0; shape.iter().product()] }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self, ShapeError> {
        check_len("tensor", shape.iter().product(), data.len())?;
        Ok(Tensor { shape: shape.to_vec(), data })
    }

    /// Uniform values in `[-scale, scale]`.
    pub fn uniform<R: Rng + ?Sized>(shape: &[usize], scale: f64, rng: &mut R) -> Self {
        let n = shape.iter().product();
        Tensor { shape: shape.to_vec(), data: (0..n).map(|_| rng.random_range(-scale..=scale)).collect() }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn fill(&mut self, x: f64) {
        self.data.iter_mut().for_each(|v| *v = x);
    }
}

/// Trainable tensor with its gradient and Adam moments.
#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub value: Tensor,
    pub grad: Tensor,
    pub m: Tensor,
    pub v: Tensor,
    pub step: u64,
}

impl Param {
    pub fn new(value: Tensor) -> Self {
        let z = Tensor::zeros(&value.shape);
        Param { grad: z.clone(), m: z.clone(), v: z, value, step: 0 }
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::new(Tensor::zeros(shape))
    }

    pub fn shape(&self) -> &[usize] {
        &self.value.shape
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }
}

/// Anything that owns named parameters.
pub trait Parameterized {
    fn visit(&self, f: &mut dyn FnMut(&str, &Param));
    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut Param));

    fn zero_grad(&mut self) {
        self.visit_mut(&mut |_, p| p.zero_grad());
    }

    fn param_count(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_, p| n += p.value.len());
        n
    }
}

/// Prefix `name` with `scope`, joining with a dot.
pub fn scoped(scope: &str, name: &str) -> String {
    let mut s = String::from(scope);
    s.push('.');
    s.push_str(name);
    s
}

pub fn relu(x: f64) -> f64 {
    x.max(0.0)
}

pub fn sigmoid(x: f64) -> f64 {
    math::sigmoid(x)
}

pub fn tanh(x: f64) -> f64 {
    math::tanh(x)
}

/// Numerically stable softmax.
pub fn softmax(x: &[f64]) -> Vec<f64> {
    assert!(!x.is_empty(), "softmax of an empty vector");
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = x.iter().map(|&v| math::exp(v - max)).collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= sum);
    out
}

/// Backward of softmax: `dx = y ⊙ (dy − ⟨dy, y⟩)`.
pub fn softmax_backward(y: &[f64], dy: &[f64]) -> Vec<f64> {
    let dot: f64 = y.iter().zip(dy).map(|(a, b)| a * b).sum();
    y.iter().zip(dy).map(|(yi, di)| yi * (di - dot)).collect()
}

/// `−ln max(p[target], LOG_FLOOR)`.
pub fn cross_entropy(dist: &[f64], target: usize) -> f64 {
    -math::ln(dist[target].max(LOG_FLOOR))
}

/// Gradient of `cross_entropy(softmax(logits), target)` w.r.t. the logits.
pub fn cross_entropy_logit_grad(dist: &[f64], target: usize) -> Vec<f64> {
    let mut g = dist.to_vec();
    g[target] -= 1.0;
    g
}

/// `y = W x (+ b)` with `W` of shape `(out, in)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Linear {
    pub w: Param,
    pub b: Option<Param>,
}

impl Linear {
    pub fn new<R: Rng + ?Sized>(inputs: usize, outputs: usize, bias: bool, rng: &mut R) -> Self {
        let scale = 1.0 / math::sqrt(inputs.max(1) as f64);
        Linear { w: Param::new(Tensor::uniform(&[outputs, inputs], scale, rng)), b: bias.then(|| Param::zeros(&[outputs])) }
    }

    pub fn inputs(&self) -> usize {
        self.w.shape()[1]
    }

    pub fn outputs(&self) -> usize {
        self.w.shape()[0]
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let n = self.inputs();
        assert_eq!(x.len(), n, "linear input width");
        let mut y = match &self.b {
            Some(b) => b.value.data.clone(),
            None => vec![0.0; self.outputs()],
        };
        for (o, yo) in y.iter_mut().enumerate() {
            let row = &self.w.value.data[o * n..(o + 1) * n];
            *yo += row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
        y
    }

    /// Accumulate parameter gradients; add the input gradient into `dx`
    /// when given.
    pub fn backward(&mut self, x: &[f64], dy: &[f64], dx: Option<&mut [f64]>) {
        let n = self.inputs();
        for (o, &g) in dy.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            let grow = &mut self.w.grad.data[o * n..(o + 1) * n];
            grow.iter_mut().zip(x).for_each(|(gw, v)| *gw += g * v);
        }
        if let Some(b) = &mut self.b {
            b.grad.data.iter_mut().zip(dy).for_each(|(gb, g)| *gb += g);
        }
        if let Some(dx) = dx {
            for (o, &g) in dy.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                let row = &self.w.value.data[o * n..(o + 1) * n];
                dx.iter_mut().zip(row).for_each(|(d, w)| *d += g * w);
            }
        }
    }

    pub fn visit(&self, scope: &str, f: &mut dyn FnMut(&str, &Param)) {
        f(&scoped(scope, "w"), &self.w);
        if let Some(b) = &self.b {
            f(&scoped(scope, "b"), b);
        }
    }

    pub fn visit_mut(&mut self, scope: &str, f: &mut dyn FnMut(&str, &mut Param)) {
        f(&scoped(scope, "w"), &mut self.w);
        if let Some(b) = &mut self.b {
            f(&scoped(scope, "b"), b);
        }
    }
}

/// Lookup table of shape `(vocab, dim)`; row `i` is the embedding of token `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    pub w: Param,
}

impl Embedding {
    pub fn new<R: Rng + ?Sized>(vocab: usize, dim: usize, rng: &mut R) -> Self {
        Embedding { w: Param::new(Tensor::uniform(&[vocab, dim], 0.1, rng)) }
    }

    pub fn dim(&self) -> usize {
        self.w.shape()[1]
    }

    pub fn vocab(&self) -> usize {
        self.w.shape()[0]
    }

    /// Unknown indices fall back to row 0.
    pub fn forward(&self, index: usize) -> Vec<f64> {
        let d = self.dim();
        let i = if index < self.vocab() { index } else { 0 };
        self.w.value.data[i * d..(i + 1) * d].to_vec()
    }

    pub fn backward(&mut self, index: usize, dy: &[f64]) {
        let d = self.dim();
        let i = if index < self.vocab() { index } else { 0 };
        self.w.grad.data[i * d..(i + 1) * d].iter_mut().zip(dy).for_each(|(g, d)| *g += d);
    }
}

/// Standard LSTM cell. `W` has shape `(4H, in + H)` with gate blocks in the
/// order input, forget, output, candidate.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmCell {
    pub w: Param,
    pub b: Param,
}

/// Values kept from an LSTM forward step for its backward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmCache {
    pub xh: Vec<f64>,
    pub i: Vec<f64>,
    pub f: Vec<f64>,
    pub o: Vec<f64>,
    pub g: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmCell {
    /// Forget-gate bias starts at 1.
    pub fn new<R: Rng + ?Sized>(inputs: usize, hidden: usize, rng: &mut R) -> Self {
        let scale = 1.0 / math::sqrt((inputs + hidden).max(1) as f64);
        let mut b = Param::zeros(&[4 * hidden]);
        b.value.data[hidden..2 * hidden].iter_mut().for_each(|v| *v = 1.0);
        LstmCell { w: Param::new(Tensor::uniform(&[4 * hidden, inputs + hidden], scale, rng)), b }
    }

    pub fn hidden(&self) -> usize {
        self.w.shape()[0] / 4
    }

    pub fn inputs(&self) -> usize {
        self.w.shape()[1] - self.hidden()
    }

    pub fn forward(&self, x: &[f64], h: &[f64], c: &[f64]) -> LstmCache {
        let hd = self.hidden();
        let width = self.w.shape()[1];
        assert_eq!(x.len() + h.len(), width, "lstm input width");
        let mut xh = Vec::with_capacity(width);
        xh.extend_from_slice(x);
        xh.extend_from_slice(h);
        let mut z = self.b.value.data.clone();
        for (r, zr) in z.iter_mut().enumerate() {
            let row = &self.w.value.data[r * width..(r + 1) * width];
            let mut acc = 0.0;
            for (w, v) in row.iter().zip(&xh) {
                if *v != 0.0 {
                    acc += w * v;
                }
            }
            *zr += acc;
        }
        let i: Vec<f64> = z[..hd].iter().map(|&v| sigmoid(v)).collect();
        let f: Vec<f64> = z[hd..2 * hd].iter().map(|&v| sigmoid(v)).collect();
        let o: Vec<f64> = z[2 * hd..3 * hd].iter().map(|&v| sigmoid(v)).collect();
        let g: Vec<f64> = z[3 * hd..].iter().map(|&v| tanh(v)).collect();
        let c_new: Vec<f64> = (0..hd).map(|k| f[k] * c[k] + i[k] * g[k]).collect();
        let tanh_c: Vec<f64> = c_new.iter().map(|&v| tanh(v)).collect();
        let h_new: Vec<f64> = (0..hd).map(|k| o[k] * tanh_c[k]).collect();
        LstmCache { xh, i, f, o, g, c_prev: c.to_vec(), tanh_c, h: h_new, c: c_new }
    }

    /// Given upstream `dh`, `dc`, accumulate parameter gradients and return
    /// `(dx, dh_prev, dc_prev)`.
    pub fn backward(&mut self, cache: &LstmCache, dh: &[f64], dc: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let hd = self.hidden();
        let width = self.w.shape()[1];
        let mut dz = vec![0.0; 4 * hd];
        let mut dc_prev = vec![0.0; hd];
        for k in 0..hd {
            let dck = dc[k] + dh[k] * cache.o[k] * (1.0 - cache.tanh_c[k] * cache.tanh_c[k]);
            let do_ = dh[k] * cache.tanh_c[k];
            let di = dck * cache.g[k];
            let df = dck * cache.c_prev[k];
            let dg = dck * cache.i[k];
            dc_prev[k] = dck * cache.f[k];
            dz[k] = di * cache.i[k] * (1.0 - cache.i[k]);
            dz[hd + k] = df * cache.f[k] * (1.0 - cache.f[k]);
            dz[2 * hd + k] = do_ * cache.o[k] * (1.0 - cache.o[k]);
            dz[3 * hd + k] = dg * (1.0 - cache.g[k] * cache.g[k]);
        }
        let mut dxh = vec![0.0; width];
        for (r, &g) in dz.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            let grow = &mut self.w.grad.data[r * width..(r + 1) * width];
            for (gw, v) in grow.iter_mut().zip(&cache.xh) {
                *gw += g * v;
            }
            let row = &self.w.value.data[r * width..(r + 1) * width];
            dxh.iter_mut().zip(row).for_each(|(d, w)| *d += g * w);
        }
        self.b.grad.data.iter_mut().zip(&dz).for_each(|(gb, g)| *gb += g);
        let dh_prev = dxh.split_off(width - hd);
        (dxh, dh_prev, dc_prev)
    }

    pub fn visit(&self, scope: &str, f: &mut dyn FnMut(&str, &Param)) {
        f(&scoped(scope, "w"), &self.w);
        f(&scoped(scope, "b"), &self.b);
    }

    pub fn visit_mut(&mut self, scope: &str, f: &mut dyn FnMut(&str, &mut Param)) {
        f(&scoped(scope, "w"), &mut self.w);
        f(&scoped(scope, "b"), &mut self.b);
    }
}

/// Valid (unpadded) 2-D cross-correlation over `(height, width, channels)`
/// row-major inputs. Weights have shape `(kh, kw, in, out)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Conv2d {
    pub w: Param,
    pub b: Param,
}

impl Conv2d {
    pub fn new<R: Rng + ?Sized>(kh: usize, kw: usize, cin: usize, cout: usize, rng: &mut R) -> Self {
        let scale = 1.0 / math::sqrt((kh * kw * cin).max(1) as f64);
        Conv2d { w: Param::new(Tensor::uniform(&[kh, kw, cin, cout], scale, rng)), b: Param::zeros(&[cout]) }
    }

    /// `(kh, kw, in, out)`.
    pub fn dims(&self) -> (usize, usize, usize, usize) {
        let s = self.w.shape();
        (s[0], s[1], s[2], s[3])
    }

    /// Output `(height, width, channels)` for an input of `(h, w)`.
    pub fn output_shape(&self, h: usize, w: usize) -> Result<[usize; 3], ShapeError> {
        let (kh, kw, _, cout) = self.dims();
        if h < kh || w < kw {
            return Err(ShapeError::Mismatch { op: "conv2d", expected: vec![kh, kw], got: vec![h, w] });
        }
        Ok([h - kh + 1, w - kw + 1, cout])
    }

    /// Zero input entries are skipped, which makes sparse binary inputs cheap.
    pub fn forward(&self, input: &[f64], shape: [usize; 3]) -> Result<(Vec<f64>, [usize; 3]), ShapeError> {
        let (kh, kw, cin, cout) = self.dims();
        let [h, w, c] = shape;
        if c != cin {
            return Err(ShapeError::Mismatch { op: "conv2d", expected: vec![cin], got: vec![c] });
        }
        check_len("conv2d", h * w * c, input.len())?;
        let out_shape = self.output_shape(h, w)?;
        let [oh, ow, _] = out_shape;
        let mut out = Vec::with_capacity(oh * ow * cout);
        for _ in 0..oh * ow {
            out.extend_from_slice(&self.b.value.data);
        }
        let wd = &self.w.value.data;
        for y in 0..oh {
            for x in 0..ow {
                let o = &mut out[(y * ow + x) * cout..(y * ow + x + 1) * cout];
                for i in 0..kh {
                    for j in 0..kw {
                        let base = ((y + i) * w + x + j) * c;
                        for ci in 0..cin {
                            let v = input[base + ci];
                            if v == 0.0 {
                                continue;
                            }
                            let k = ((i * kw + j) * cin + ci) * cout;
                            o.iter_mut().zip(&wd[k..k + cout]).for_each(|(a, wv)| *a += v * wv);
                        }
                    }
                }
            }
        }
        Ok((out, out_shape))
    }

    /// Accumulate weight gradients; when `dinput` is given, add the input
    /// gradient into it.
    pub fn backward(&mut self, input: &[f64], shape: [usize; 3], dout: &[f64], mut dinput: Option<&mut [f64]>) {
        let (kh, kw, cin, cout) = self.dims();
        let [_, w, c] = shape;
        let [oh, ow, _] = self.output_shape(shape[0], w).expect("shape checked in forward");
        for y in 0..oh {
            for x in 0..ow {
                let g = &dout[(y * ow + x) * cout..(y * ow + x + 1) * cout];
                if g.iter().all(|&v| v == 0.0) {
                    continue;
                }
                self.b.grad.data.iter_mut().zip(g).for_each(|(gb, v)| *gb += v);
                for i in 0..kh {
                    for j in 0..kw {
                        let base = ((y + i) * w + x + j) * c;
                        for ci in 0..cin {
                            let k = ((i * kw + j) * cin + ci) * cout;
                            let v = input[base + ci];
                            if v != 0.0 {
                                self.w.grad.data[k..k + cout].iter_mut().zip(g).for_each(|(gw, gv)| *gw += v * gv);
                            }
                            if let Some(d) = dinput.as_deref_mut() {
                                let wrow = &self.w.value.data[k..k + cout];
                                d[base + ci] += wrow.iter().zip(g).map(|(a, b)| a * b).sum::<f64>();
                            }
                        }
                    }
                }
            }
        }
    }

    pub fn visit(&self, scope: &str, f: &mut dyn FnMut(&str, &Param)) {
        f(&scoped(scope, "w"), &self.w);
        f(&scoped(scope, "b"), &self.b);
    }

    pub fn visit_mut(&mut self, scope: &str, f: &mut dyn FnMut(&str, &mut Param)) {
        f(&scoped(scope, "w"), &mut self.w);
        f(&scoped(scope, "b"), &mut self.b);
    }
}

pub fn global_grad_norm<M: Parameterized + ?Sized>(model: &M) -> f64 {
    let mut sq = 0.0;
    model.visit(&mut |_, p| sq += p.grad.data.iter().map(|g| g * g).sum::<f64>());
    math::sqrt(sq)
}

/// Rescale all gradients so their global L2 norm is at most `threshold`.
/// Returns the factor applied (1 when no clipping happened).
pub fn clip_global_norm<M: Parameterized + ?Sized>(model: &mut M, threshold: f64) -> f64 {
    let norm = global_grad_norm(model);
    if norm <= threshold || norm == 0.0 {
        return 1.0;
    }
    let scale = threshold / norm;
    model.visit_mut(&mut |_, p| p.grad.data.iter_mut().for_each(|g| *g *= scale));
    scale
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for Adam {
    fn default() -> Self {
        Adam { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

impl Adam {
    pub fn update(&self, p: &mut Param) {
        p.step += 1;
        let t = p.step as i32;
        let c1 = 1.0 - math::powi(self.beta1, t);
        let c2 = 1.0 - math::powi(self.beta2, t);
        for k in 0..p.value.data.len() {
            let g = p.grad.data[k];
            let m = self.beta1 * p.m.data[k] + (1.0 - self.beta1) * g;
            let v = self.beta2 * p.v.data[k] + (1.0 - self.beta2) * g * g;
            p.m.data[k] = m;
            p.v.data[k] = v;
            p.value.data[k] -= self.lr * (m / c1) / (math::sqrt(v / c2) + self.eps);
        }
    }
}

/// One bias-corrected Adam update of every parameter.
pub fn adam_step<M: Parameterized + ?Sized>(model: &mut M, adam: &Adam) {
    model.visit_mut(&mut |_, p| adam.update(p));
}

/// Worst relative error of one parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamCheck {
    pub name: String,
    pub checked: usize,
    pub max_rel_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub params: Vec<ParamCheck>,
    pub tol: f64,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.params.iter().map(|p| p.max_rel_error).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_rel_error() < self.tol
    }
}

/// Smallest denominator used for relative errors, so that gradients that
/// are zero up to rounding do not blow up the ratio.
pub const REL_ERROR_FLOOR: f64 = 1e-5;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR)
}

/// Compare analytic gradients against central differences.
///
/// `loss_and_grad` must zero, then accumulate, the model's gradients and
/// return the loss; `loss` must return the loss only. At most `per_param`
/// entries of each tensor are probed (all when `None`), spread evenly.
pub fn finite_diff_check<M: Parameterized>(
    model: &mut M,
    mut loss_and_grad: impl FnMut(&mut M) -> f64,
    loss: impl Fn(&M) -> f64,
    h: f64,
    tol: f64,
    per_param: Option<usize>,
) -> GradCheckReport {
    loss_and_grad(model);
    let mut grads: Vec<(String, Vec<f64>)> = Vec::new();
    model.visit(&mut |n, p| grads.push((String::from(n), p.grad.data.clone())));
    let mut params = Vec::new();
    for (pi, (name, analytic)) in grads.iter().enumerate() {
        let n = analytic.len();
        let probes: Vec<usize> = match per_param {
            Some(k) if k < n => (0..k).map(|j| j * n / k).collect(),
            _ => (0..n).collect(),
        };
        let mut worst = 0.0f64;
        for &k in &probes {
            let original = nth_value(model, pi, k);
            set_nth_value(model, pi, k, original + h);
            let up = loss(model);
            set_nth_value(model, pi, k, original - h);
            let down = loss(model);
            set_nth_value(model, pi, k, original);
            let numeric = (up - down) / (2.0 * h);
            worst = worst.max(relative_error(analytic[k], numeric));
        }
        params.push(ParamCheck { name: name.clone(), checked: probes.len(), max_rel_error: worst });
    }
    GradCheckReport { params, tol }
}

fn nth_value<M: Parameterized>(model: &M, param: usize, k: usize) -> f64 {
    let (mut i, mut out) = (0, 0.0);
    model.visit(&mut |_, p| {
        if i == param {
            out = p.value.data[k];
        }
        i += 1;
    });
    out
}

fn set_nth_value<M: Parameterized>(model: &mut M, param: usize, k: usize, x: f64) {
    let mut i = 0;
    model.visit_mut(&mut |_, p| {
        if i == param {
            p.value.data[k] = x;
        }
        i += 1;
    });
}
