use rand::distributions::{Distribution, Uniform};
use rand::Rng;

use crate::error::{Error, Result};

use super::{Act, Real, Tensor};

/// 2-D convolution, stride 1, cross-correlation semantics (no kernel flip),
/// one bias per output channel. Weight shape is (out_ch, in_ch, k_h, k_w);
/// activations flow channels-last (h, w, c) so the hot loops reduce to
/// contiguous fused multiply-adds across the 32 output channels.
#[derive(Debug, Clone)]
pub struct Conv2d<F: Real> {
    pub in_ch: usize,
    pub out_ch: usize,
    pub k_h: usize,
    pub k_w: usize,
    pub pad: usize,
    pub weight: Tensor<F>,
    pub bias: Tensor<F>,
    pub grad_w: Tensor<F>,
    pub grad_b: Tensor<F>,
    cache_input: Option<Tensor<F>>,
}

impl<F: Real> Conv2d<F> {
    pub fn new<R: Rng>(
        in_ch: usize,
        out_ch: usize,
        k_h: usize,
        k_w: usize,
        pad: usize,
        rng: &mut R,
    ) -> Self {
        let fan_in = in_ch * k_h * k_w;
        let weight = init_uniform(&[out_ch, in_ch, k_h, k_w], fan_in, rng);
        let bias = init_uniform(&[out_ch], fan_in, rng);
        Conv2d {
            in_ch,
            out_ch,
            k_h,
            k_w,
            pad,
            grad_w: Tensor::zeros(weight.shape()),
            grad_b: Tensor::zeros(bias.shape()),
            weight,
            bias,
            cache_input: None,
        }
    }

    pub fn output_dims(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        let oh = (h + 2 * self.pad).checked_sub(self.k_h - 1);
        let ow = (w + 2 * self.pad).checked_sub(self.k_w - 1);
        match (oh, ow) {
            (Some(oh), Some(ow)) if oh >= 1 && ow >= 1 => Ok((oh, ow)),
            _ => Err(Error::shape(format!(
                "conv {}x{} pad {} underflows {}x{} input",
                self.k_h, self.k_w, self.pad, h, w
            ))),
        }
    }

    /// Weight scratch in (k_h, k_w, in_ch, out_ch) order, matching the
    /// channels-last activation layout.
    fn transposed_weights(&self) -> Vec<F> {
        let (ic, oc, kh, kw) = (self.in_ch, self.out_ch, self.k_h, self.k_w);
        let wt = self.weight.data();
        let mut t = vec![F::zero(); wt.len()];
        for o in 0..oc {
            for i in 0..ic {
                for ky in 0..kh {
                    for kx in 0..kw {
                        t[((ky * kw + kx) * ic + i) * oc + o] =
                            wt[((o * ic + i) * kh + ky) * kw + kx];
                    }
                }
            }
        }
        t
    }

    fn forward(&mut self, input: &Tensor<F>) -> Result<Tensor<F>> {
        let [h, w, ic] = dims3(input)?;
        if ic != self.in_ch {
            return Err(Error::shape(format!(
                "conv expects {} input channels, got {ic}",
                self.in_ch
            )));
        }
        let (oh, ow) = self.output_dims(h, w)?;
        let oc = self.out_ch;
        let mut out = Tensor::zeros(&[oh, ow, oc]);
        let x = input.data();
        let wt = self.transposed_weights();
        let bias = self.bias.data();
        let pad = self.pad;
        let out_data = out.data_mut();
        for row in out_data.chunks_exact_mut(oc) {
            row.copy_from_slice(bias);
        }
        for ky in 0..self.k_h {
            for kx in 0..self.k_w {
                let (oy0, oy1, ox0, ox1) = valid_ranges(h, w, oh, ow, ky, kx, pad);
                if ox0 >= ox1 {
                    continue;
                }
                let wk = &wt[(ky * self.k_w + kx) * ic * oc..][..ic * oc];
                for oy in oy0..oy1 {
                    let iy = oy + ky - pad;
                    for ox in ox0..ox1 {
                        let ix = ox + kx - pad;
                        let xs = &x[(iy * w + ix) * ic..][..ic];
                        let os = &mut out_data[(oy * ow + ox) * oc..][..oc];
                        for (i, &xv) in xs.iter().enumerate() {
                            let ws = &wk[i * oc..][..oc];
                            for (o, &wv) in os.iter_mut().zip(ws) {
                                *o += wv * xv;
                            }
                        }
                    }
                }
            }
        }
        self.cache_input = Some(input.clone());
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor<F>) -> Result<Tensor<F>> {
        let input = self
            .cache_input
            .as_ref()
            .ok_or_else(|| Error::run("conv backward before forward"))?;
        let [h, w, ic] = dims3(input)?;
        let [oh, ow, oc] = dims3(grad_out)?;
        let pad = self.pad;
        let mut grad_in = Tensor::zeros(&[h, w, ic]);
        let x = input.data();
        let go = grad_out.data();
        let wt = self.transposed_weights();
        let mut gw_t = vec![F::zero(); wt.len()];
        let gb = self.grad_b.data_mut();
        let gi = grad_in.data_mut();

        for row in go.chunks_exact(oc) {
            for (b, &g) in gb.iter_mut().zip(row) {
                *b += g;
            }
        }
        for ky in 0..self.k_h {
            for kx in 0..self.k_w {
                let (oy0, oy1, ox0, ox1) = valid_ranges(h, w, oh, ow, ky, kx, pad);
                if ox0 >= ox1 {
                    continue;
                }
                let kbase = (ky * self.k_w + kx) * ic * oc;
                let wk = &wt[kbase..][..ic * oc];
                let gwk = &mut gw_t[kbase..][..ic * oc];
                for oy in oy0..oy1 {
                    let iy = oy + ky - pad;
                    for ox in ox0..ox1 {
                        let ix = ox + kx - pad;
                        let gos = &go[(oy * ow + ox) * oc..][..oc];
                        let xs = &x[(iy * w + ix) * ic..][..ic];
                        let gis = &mut gi[(iy * w + ix) * ic..][..ic];
                        for (i, (&xv, gin)) in xs.iter().zip(gis.iter_mut()).enumerate() {
                            let ws = &wk[i * oc..][..oc];
                            let gws = &mut gwk[i * oc..][..oc];
                            let mut acc = F::zero();
                            for ((&g, &wv), gw) in gos.iter().zip(ws).zip(gws.iter_mut()) {
                                *gw += g * xv;
                                acc += g * wv;
                            }
                            *gin += acc;
                        }
                    }
                }
            }
        }
        // Fold the transposed gradient scratch back into canonical
        // (out_ch, in_ch, k_h, k_w) storage.
        let gw = self.grad_w.data_mut();
        for o in 0..oc {
            for i in 0..ic {
                for ky in 0..self.k_h {
                    for kx in 0..self.k_w {
                        gw[((o * ic + i) * self.k_h + ky) * self.k_w + kx] +=
                            gw_t[((ky * self.k_w + kx) * ic + i) * oc + o];
                    }
                }
            }
        }
        Ok(grad_in)
    }
}

/// Output ranges (oy0..oy1, ox0..ox1) for which the input index stays inside
/// the unpadded input.
#[inline]
fn valid_ranges(
    h: usize,
    w: usize,
    oh: usize,
    ow: usize,
    ky: usize,
    kx: usize,
    pad: usize,
) -> (usize, usize, usize, usize) {
    let oy0 = pad.saturating_sub(ky);
    let oy1 = oh.min((h + pad).saturating_sub(ky));
    let ox0 = pad.saturating_sub(kx);
    let ox1 = ow.min((w + pad).saturating_sub(kx));
    (oy0, oy1, ox0, ox1)
}

/// Max pooling with square window and configurable stride. Ties route the
/// gradient to the first maximum in row-major window scan order.
#[derive(Debug, Clone)]
pub struct MaxPool<F: Real> {
    pub k: usize,
    pub stride: usize,
    argmax: Vec<usize>,
    in_shape: Vec<usize>,
    _marker: std::marker::PhantomData<F>,
}

impl<F: Real> MaxPool<F> {
    pub fn new(k: usize, stride: usize) -> Self {
        assert!(k >= 1 && stride >= 1);
        MaxPool {
            k,
            stride,
            argmax: Vec::new(),
            in_shape: Vec::new(),
            _marker: std::marker::PhantomData,
        }
    }

    pub fn output_dims(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        if self.k > h || self.k > w {
            return Err(Error::shape(format!(
                "pool window {} does not fit {}x{} input",
                self.k, h, w
            )));
        }
        Ok(((h - self.k) / self.stride + 1, (w - self.k) / self.stride + 1))
    }

    fn forward(&mut self, input: &Tensor<F>) -> Result<Tensor<F>> {
        let [h, w, c] = dims3(input)?;
        let (oh, ow) = self.output_dims(h, w)?;
        let mut out = Tensor::zeros(&[oh, ow, c]);
        self.argmax.clear();
        self.argmax.reserve(oh * ow * c);
        self.in_shape = input.shape().to_vec();
        let x = input.data();
        let od = out.data_mut();
        for oy in 0..oh {
            for ox in 0..ow {
                let (y0, x0) = (oy * self.stride, ox * self.stride);
                for ch in 0..c {
                    let mut best_idx = (y0 * w + x0) * c + ch;
                    let mut best = x[best_idx];
                    for wy in 0..self.k {
                        for wx in 0..self.k {
                            let idx = ((y0 + wy) * w + x0 + wx) * c + ch;
                            if x[idx] > best {
                                best = x[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    od[(oy * ow + ox) * c + ch] = best;
                    self.argmax.push(best_idx);
                }
            }
        }
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor<F>) -> Result<Tensor<F>> {
        if self.in_shape.is_empty() {
            return Err(Error::run("pool backward before forward"));
        }
        let mut grad_in = Tensor::zeros(&self.in_shape);
        let gi = grad_in.data_mut();
        for (g, &idx) in grad_out.data().iter().zip(&self.argmax) {
            gi[idx] += *g;
        }
        Ok(grad_in)
    }
}

/// Element-wise activation layer.
#[derive(Debug, Clone)]
pub struct Activation<F: Real> {
    pub act: Act,
    cache_output: Option<Tensor<F>>,
}

impl<F: Real> Activation<F> {
    pub fn new(act: Act) -> Self {
        Activation {
            act,
            cache_output: None,
        }
    }

    fn forward(&mut self, input: &Tensor<F>) -> Result<Tensor<F>> {
        let mut out = input.clone();
        out.data_mut().iter_mut().for_each(|v| *v = self.act.apply(*v));
        self.cache_output = Some(out.clone());
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor<F>) -> Result<Tensor<F>> {
        let y = self
            .cache_output
            .as_ref()
            .ok_or_else(|| Error::run("activation backward before forward"))?;
        let mut grad_in = grad_out.clone();
        for (g, yv) in grad_in.data_mut().iter_mut().zip(y.data()) {
            *g *= self.act.deriv_from_output(*yv);
        }
        Ok(grad_in)
    }
}

/// Per-channel normalization over the spatial dims of each sample, with
/// learned scale/shift. Statistics are always the current sample's
/// (training-mode semantics in both training and inference).
#[derive(Debug, Clone)]
pub struct BatchNorm<F: Real> {
    pub channels: usize,
    pub eps: F,
    pub gamma: Tensor<F>,
    pub beta: Tensor<F>,
    pub grad_gamma: Tensor<F>,
    pub grad_beta: Tensor<F>,
    cache: Option<BnCache<F>>,
}

#[derive(Debug, Clone)]
struct BnCache<F> {
    x_hat: Vec<F>,
    inv_std: Vec<F>,
    shape: Vec<usize>,
}

impl<F: Real> BatchNorm<F> {
    pub fn new(channels: usize) -> Self {
        let mut gamma = Tensor::zeros(&[channels]);
        gamma.fill(F::one());
        BatchNorm {
            channels,
            eps: F::from_f64(1e-5),
            beta: Tensor::zeros(&[channels]),
            grad_gamma: Tensor::zeros(&[channels]),
            grad_beta: Tensor::zeros(&[channels]),
            gamma,
            cache: None,
        }
    }

    fn forward(&mut self, input: &Tensor<F>) -> Result<Tensor<F>> {
        let [h, w, c] = dims3(input)?;
        if c != self.channels {
            return Err(Error::shape(format!(
                "batchnorm expects {} channels, got {c}",
                self.channels
            )));
        }
        let n = h * w;
        let nf = F::from_f64(n as f64);
        let mut out = Tensor::zeros(input.shape());
        let mut x_hat = vec![F::zero(); n * c];
        let mut inv_std = vec![F::zero(); c];
        let x = input.data();
        let od = out.data_mut();
        // Channel statistics accumulate across positions (contiguous lanes).
        let mut mean = vec![F::zero(); c];
        for row in x.chunks_exact(c) {
            for (m, &v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= nf);
        let mut var = vec![F::zero(); c];
        for row in x.chunks_exact(c) {
            for ((vv, &v), &m) in var.iter_mut().zip(row).zip(&mean) {
                let d = v - m;
                *vv += d * d;
            }
        }
        for (ch, vv) in var.iter().enumerate() {
            inv_std[ch] = F::one() / (*vv / nf + self.eps).sqrt();
        }
        let gamma = self.gamma.data();
        let beta = self.beta.data();
        for (pos, row) in x.chunks_exact(c).enumerate() {
            for (ch, &v) in row.iter().enumerate() {
                let xh = (v - mean[ch]) * inv_std[ch];
                x_hat[pos * c + ch] = xh;
                od[pos * c + ch] = gamma[ch] * xh + beta[ch];
            }
        }
        self.cache = Some(BnCache {
            x_hat,
            inv_std,
            shape: input.shape().to_vec(),
        });
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor<F>) -> Result<Tensor<F>> {
        let cache = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::run("batchnorm backward before forward"))?;
        let c = self.channels;
        let n: usize = cache.shape[0] * cache.shape[1];
        let nf = F::from_f64(n as f64);
        let mut grad_in = Tensor::zeros(&cache.shape);
        let go = grad_out.data();
        let gi = grad_in.data_mut();
        let mut sum_dy = vec![F::zero(); c];
        let mut sum_dy_xh = vec![F::zero(); c];
        for (pos, row) in go.chunks_exact(c).enumerate() {
            for (ch, &dy) in row.iter().enumerate() {
                sum_dy[ch] += dy;
                sum_dy_xh[ch] += dy * cache.x_hat[pos * c + ch];
            }
        }
        for ch in 0..c {
            self.grad_beta.data_mut()[ch] += sum_dy[ch];
            self.grad_gamma.data_mut()[ch] += sum_dy_xh[ch];
        }
        let gamma = self.gamma.data();
        for (pos, row) in go.chunks_exact(c).enumerate() {
            for (ch, &dy) in row.iter().enumerate() {
                let scale = gamma[ch] * cache.inv_std[ch];
                gi[pos * c + ch] = scale
                    * (dy - sum_dy[ch] / nf - cache.x_hat[pos * c + ch] * sum_dy_xh[ch] / nf);
            }
        }
        Ok(grad_in)
    }
}

/// Flattens (C,H,W) to a vector; backward restores the shape.
#[derive(Debug, Clone, Default)]
pub struct Flatten {
    in_shape: Vec<usize>,
}

impl Flatten {
    pub fn new() -> Self {
        Flatten::default()
    }

    fn forward<F: Real>(&mut self, input: &Tensor<F>) -> Result<Tensor<F>> {
        self.in_shape = input.shape().to_vec();
        input.clone().reshaped(&[input.len()])
    }

    fn backward<F: Real>(&mut self, grad_out: &Tensor<F>) -> Result<Tensor<F>> {
        grad_out.clone().reshaped(&self.in_shape.clone())
    }
}

/// Fully connected layer: y = W x + b, weight shape (out, in).
#[derive(Debug, Clone)]
pub struct Dense<F: Real> {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weight: Tensor<F>,
    pub bias: Tensor<F>,
    pub grad_w: Tensor<F>,
    pub grad_b: Tensor<F>,
    cache_input: Option<Tensor<F>>,
}

impl<F: Real> Dense<F> {
    pub fn new<R: Rng>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        let weight = init_uniform(&[out_dim, in_dim], in_dim, rng);
        let bias = init_uniform(&[out_dim], in_dim, rng);
        Dense {
            in_dim,
            out_dim,
            grad_w: Tensor::zeros(weight.shape()),
            grad_b: Tensor::zeros(bias.shape()),
            weight,
            bias,
            cache_input: None,
        }
    }

    fn forward(&mut self, input: &Tensor<F>) -> Result<Tensor<F>> {
        if input.shape() != [self.in_dim] {
            return Err(Error::shape(format!(
                "dense expects [{}] input, got {:?}",
                self.in_dim,
                input.shape()
            )));
        }
        let mut out = Tensor::zeros(&[self.out_dim]);
        let x = input.data();
        let w = self.weight.data();
        for (o, ov) in out.data_mut().iter_mut().enumerate() {
            let row = &w[o * self.in_dim..(o + 1) * self.in_dim];
            let mut acc = self.bias.data()[o];
            for (wv, xv) in row.iter().zip(x) {
                acc += *wv * *xv;
            }
            *ov = acc;
        }
        self.cache_input = Some(input.clone());
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor<F>) -> Result<Tensor<F>> {
        let input = self
            .cache_input
            .as_ref()
            .ok_or_else(|| Error::run("dense backward before forward"))?;
        let x = input.data();
        let go = grad_out.data();
        let mut grad_in = Tensor::zeros(&[self.in_dim]);
        let gi = grad_in.data_mut();
        let w = self.weight.data();
        let gw = self.grad_w.data_mut();
        for o in 0..self.out_dim {
            let g = go[o];
            self.grad_b.data_mut()[o] += g;
            let row = &w[o * self.in_dim..(o + 1) * self.in_dim];
            let grow = &mut gw[o * self.in_dim..(o + 1) * self.in_dim];
            for i in 0..self.in_dim {
                grow[i] += g * x[i];
                gi[i] += g * row[i];
            }
        }
        Ok(grad_in)
    }
}

/// One network layer.
#[derive(Debug, Clone)]
pub enum Layer<F: Real> {
    Conv2d(Conv2d<F>),
    MaxPool(MaxPool<F>),
    Activation(Activation<F>),
    BatchNorm(BatchNorm<F>),
    Flatten(Flatten),
    Dense(Dense<F>),
}

impl<F: Real> Layer<F> {
    pub fn forward(&mut self, input: &Tensor<F>) -> Result<Tensor<F>> {
        let out = match self {
            Layer::Conv2d(l) => l.forward(input),
            Layer::MaxPool(l) => l.forward(input),
            Layer::Activation(l) => l.forward(input),
            Layer::BatchNorm(l) => l.forward(input),
            Layer::Flatten(l) => l.forward(input),
            Layer::Dense(l) => l.forward(input),
        }?;
        debug_assert!(out.all_finite(), "non-finite activation in {}", self.name());
        Ok(out)
    }

    pub fn backward(&mut self, grad_out: &Tensor<F>) -> Result<Tensor<F>> {
        match self {
            Layer::Conv2d(l) => l.backward(grad_out),
            Layer::MaxPool(l) => l.backward(grad_out),
            Layer::Activation(l) => l.backward(grad_out),
            Layer::BatchNorm(l) => l.backward(grad_out),
            Layer::Flatten(l) => l.backward(grad_out),
            Layer::Dense(l) => l.backward(grad_out),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Layer::Conv2d(_) => "conv2d",
            Layer::MaxPool(_) => "maxpool",
            Layer::Activation(_) => "activation",
            Layer::BatchNorm(_) => "batchnorm",
            Layer::Flatten(_) => "flatten",
            Layer::Dense(_) => "dense",
        }
    }

    /// (parameter, gradient) pairs of this layer, in a fixed order.
    pub fn param_grad_pairs(&mut self) -> Vec<(&mut Tensor<F>, &mut Tensor<F>)> {
        match self {
            Layer::Conv2d(Conv2d {
                weight,
                bias,
                grad_w,
                grad_b,
                ..
            })
            | Layer::Dense(Dense {
                weight,
                bias,
                grad_w,
                grad_b,
                ..
            }) => vec![(weight, grad_w), (bias, grad_b)],
            Layer::BatchNorm(BatchNorm {
                gamma,
                beta,
                grad_gamma,
                grad_beta,
                ..
            }) => vec![(gamma, grad_gamma), (beta, grad_beta)],
            _ => Vec::new(),
        }
    }

    pub fn params(&self) -> Vec<&Tensor<F>> {
        match self {
            Layer::Conv2d(l) => vec![&l.weight, &l.bias],
            Layer::Dense(l) => vec![&l.weight, &l.bias],
            Layer::BatchNorm(l) => vec![&l.gamma, &l.beta],
            _ => Vec::new(),
        }
    }
}

/// A layered model: forward caches whatever each layer needs, backward
/// accumulates parameter gradients and returns the input gradient.
#[derive(Debug, Clone)]
pub struct Model<F: Real> {
    pub layers: Vec<Layer<F>>,
}

impl<F: Real> Model<F> {
    pub fn new(layers: Vec<Layer<F>>) -> Self {
        Model { layers }
    }

    pub fn forward(&mut self, input: &Tensor<F>) -> Result<Tensor<F>> {
        let mut cur = input.clone();
        for layer in &mut self.layers {
            cur = layer.forward(&cur)?;
        }
        Ok(cur)
    }

    pub fn backward(&mut self, grad_out: &Tensor<F>) -> Result<Tensor<F>> {
        let mut cur = grad_out.clone();
        for layer in self.layers.iter_mut().rev() {
            cur = layer.backward(&cur)?;
        }
        Ok(cur)
    }

    pub fn zero_grads(&mut self) {
        for layer in &mut self.layers {
            for (_, g) in layer.param_grad_pairs() {
                g.fill(F::zero());
            }
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .flat_map(|l| l.params())
            .map(|t| t.len())
            .sum()
    }

    /// All parameter tensors in fixed order.
    pub fn params(&self) -> Vec<&Tensor<F>> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    /// All (parameter, gradient) pairs in fixed order.
    pub fn param_grad_pairs(&mut self) -> Vec<(&mut Tensor<F>, &mut Tensor<F>)> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.param_grad_pairs())
            .collect()
    }

    /// Accumulate another model's gradients into this one (same topology).
    pub fn add_grads_from(&mut self, other: &mut Model<F>) {
        let mut theirs = other.param_grad_pairs();
        for ((_, g), (_, og)) in self.param_grad_pairs().into_iter().zip(theirs.iter_mut()) {
            g.iadd(og);
        }
    }

    /// Multiply every gradient by `s` (used for batch averaging).
    pub fn scale_grads(&mut self, s: F) {
        for (_, g) in self.param_grad_pairs() {
            g.scale(s);
        }
    }

    /// Cast weights to another precision; gradients and caches reset.
    pub fn cast<G: Real>(&self) -> Model<G> {
        let layers = self
            .layers
            .iter()
            .map(|l| match l {
                Layer::Conv2d(c) => Layer::Conv2d(Conv2d {
                    in_ch: c.in_ch,
                    out_ch: c.out_ch,
                    k_h: c.k_h,
                    k_w: c.k_w,
                    pad: c.pad,
                    weight: c.weight.cast(),
                    bias: c.bias.cast(),
                    grad_w: Tensor::zeros(c.weight.shape()),
                    grad_b: Tensor::zeros(c.bias.shape()),
                    cache_input: None,
                }),
                Layer::MaxPool(p) => Layer::MaxPool(MaxPool::new(p.k, p.stride)),
                Layer::Activation(a) => Layer::Activation(Activation::new(a.act)),
                Layer::BatchNorm(b) => {
                    let mut bn = BatchNorm::new(b.channels);
                    bn.gamma = b.gamma.cast();
                    bn.beta = b.beta.cast();
                    Layer::BatchNorm(bn)
                }
                Layer::Flatten(_) => Layer::Flatten(Flatten::new()),
                Layer::Dense(d) => Layer::Dense(Dense {
                    in_dim: d.in_dim,
                    out_dim: d.out_dim,
                    weight: d.weight.cast(),
                    bias: d.bias.cast(),
                    grad_w: Tensor::zeros(d.weight.shape()),
                    grad_b: Tensor::zeros(d.bias.shape()),
                    cache_input: None,
                }),
            })
            .collect();
        Model { layers }
    }
}

fn dims3<F: Real>(t: &Tensor<F>) -> Result<[usize; 3]> {
    match t.shape() {
        [h, w, c] => Ok([*h, *w, *c]),
        other => Err(Error::shape(format!("expected 3-d (h,w,c) tensor, got {other:?}"))),
    }
}

/// PyTorch-style uniform init: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
fn init_uniform<F: Real, R: Rng>(shape: &[usize], fan_in: usize, rng: &mut R) -> Tensor<F> {
    let bound = F::from_f64(1.0 / (fan_in as f64).sqrt());
    let dist = Uniform::new_inclusive(-bound, bound);
    let len = shape.iter().product();
    let data = (0..len).map(|_| dist.sample(rng)).collect();
    Tensor::from_vec(shape, data).expect("shape/len consistent by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn conv_with(
        in_ch: usize,
        out_ch: usize,
        k: usize,
        pad: usize,
        w: &[f64],
        b: &[f64],
    ) -> Conv2d<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut c = Conv2d::new(in_ch, out_ch, k, k, pad, &mut rng);
        c.weight = Tensor::from_vec(&[out_ch, in_ch, k, k], w.to_vec()).unwrap();
        c.bias = Tensor::from_vec(&[out_ch], b.to_vec()).unwrap();
        c
    }

    #[test]
    fn conv_zero_input_zero_bias_gives_zero() {
        let mut c = conv_with(1, 1, 2, 0, &[1.0, 2.0, 3.0, 4.0], &[0.0]);
        let x = Tensor::zeros(&[4, 4, 1]);
        let y = c.forward(&x).unwrap();
        assert!(y.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn conv_1x1_identity() {
        let mut c = conv_with(1, 1, 1, 0, &[1.0], &[0.0]);
        let x = Tensor::from_vec(&[2, 2, 1], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let y = c.forward(&x).unwrap();
        assert_eq!(y.data(), x.data());
    }

    #[test]
    fn conv_hand_example() {
        // [[1,2],[3,4]] (*) [[1,0],[0,1]] -> [[1*1 + 4*1]] = [[5]]
        let mut c = conv_with(1, 1, 2, 0, &[1.0, 0.0, 0.0, 1.0], &[0.0]);
        let x = Tensor::from_vec(&[2, 2, 1], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let y = c.forward(&x).unwrap();
        assert_eq!(y.shape(), &[1, 1, 1]);
        assert_eq!(y.data()[0], 5.0);
    }

    #[test]
    fn conv_padding_preserves_dims() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut c = Conv2d::<f32>::new(1, 32, 3, 3, 1, &mut rng);
        let x = Tensor::zeros(&[16, 15, 1]);
        let y = c.forward(&x).unwrap();
        assert_eq!(y.shape(), &[16, 15, 32]);
    }

    #[test]
    fn conv_underflow_is_shape_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut c = Conv2d::<f32>::new(1, 1, 5, 5, 0, &mut rng);
        let x = Tensor::zeros(&[3, 3, 1]);
        assert!(matches!(c.forward(&x), Err(crate::Error::Shape(_))));
    }

    #[test]
    fn maxpool_hand_examples() {
        let mut p = MaxPool::<f64>::new(2, 1);
        let x = Tensor::from_vec(&[2, 2, 1], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let y = p.forward(&x).unwrap();
        assert_eq!(y.shape(), &[1, 1, 1]);
        assert_eq!(y.data()[0], 4.0);

        // 3x3 ramp 1..9, k=2, stride=1 -> [[5,6],[8,9]]
        let x = Tensor::from_vec(&[3, 3, 1], (1..=9).map(f64::from).collect()).unwrap();
        let y = p.forward(&x).unwrap();
        assert_eq!(y.data(), &[5.0, 6.0, 8.0, 9.0]);
    }

    #[test]
    fn maxpool_tie_routes_to_first_window_element() {
        let mut p = MaxPool::<f64>::new(2, 2);
        let x = Tensor::from_vec(&[2, 2, 1], vec![7.0; 4]).unwrap();
        p.forward(&x).unwrap();
        let g = Tensor::from_vec(&[1, 1, 1], vec![1.0]).unwrap();
        let gi = p.backward(&g).unwrap();
        assert_eq!(gi.data(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn maxpool_too_large_window_errors() {
        let mut p = MaxPool::<f64>::new(5, 1);
        let x = Tensor::zeros(&[3, 3, 1]);
        assert!(matches!(p.forward(&x), Err(crate::Error::Shape(_))));
    }

    #[test]
    fn dense_forward_matches_hand_computation() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut d = Dense::<f64>::new(2, 2, &mut rng);
        d.weight = Tensor::from_vec(&[2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        d.bias = Tensor::from_vec(&[2], vec![0.5, -0.5]).unwrap();
        let x = Tensor::from_vec(&[2], vec![1.0, 1.0]).unwrap();
        let y = d.forward(&x).unwrap();
        assert_eq!(y.data(), &[3.5, 6.5]);
    }

    #[test]
    fn model_param_count_sums_layers() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = Model::new(vec![
            Layer::Conv2d(Conv2d::<f32>::new(1, 32, 3, 3, 1, &mut rng)),
            Layer::Flatten(Flatten::new()),
        ]);
        assert_eq!(m.param_count(), 32 * 9 + 32);
        assert_eq!(Model::<f32>::new(vec![]).param_count(), 0);
    }

    #[test]
    fn batchnorm_normalizes_per_channel() {
        let mut bn = BatchNorm::<f64>::new(1);
        let x = Tensor::from_vec(&[2, 2, 1], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let y = bn.forward(&x).unwrap();
        let mean: f64 = y.data().iter().sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-12);
        let var: f64 = y.data().iter().map(|v| v * v).sum::<f64>() / 4.0;
        assert!((var - 1.0).abs() < 1e-4);
    }
}
