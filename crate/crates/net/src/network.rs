//! The policy-value network: a convolutional trunk feeding a policy head
//! (softmax over cells) and a value head (tanh scalar).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::batch::LabeledBatch;
use crate::config::NetConfig;
use crate::error::NetError;
use crate::fpenv::FlushSubnormals;
use crate::layers::{Conv, Dense};
use crate::loss::{sample_loss, softmax_rows, LossParts};
use crate::real::Real;

/// Samples per forward/backward pass. Gradients of a larger batch are summed
/// over chunks in order, so results do not depend on the batch size beyond
/// float summation order within a chunk.
pub const CHUNK: usize = 64;

#[derive(Debug, Clone)]
pub struct Network<T: Real = f32> {
    config: NetConfig,
    /// Plain trunk: one conv per `common_filters` entry. Residual trunk: the
    /// stem followed by two convs per block.
    trunk: Vec<Conv<T>>,
    policy_conv: Conv<T>,
    policy_hidden: Option<Dense<T>>,
    policy_out: Dense<T>,
    value_conv: Conv<T>,
    value_hidden: Dense<T>,
    value_out: Dense<T>,
}

/// Policy probabilities (`B × N²`) and values (`B`).
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub policy: Vec<f32>,
    pub value: Vec<f32>,
}

/// Dropout keep-masks scaled by `1 / (1 - rate)`.
struct Dropout<'a> {
    rate: f64,
    rng: &'a mut ChaCha8Rng,
}

impl Dropout<'_> {
    fn apply<T: Real>(&mut self, x: &mut [T]) -> Vec<T> {
        let keep = T::from_f64(1.0 / (1.0 - self.rate));
        let mask: Vec<T> = (0..x.len())
            .map(|_| if self.rng.random::<f64>() < self.rate { T::zero() } else { keep })
            .collect();
        x.iter_mut().zip(&mask).for_each(|(v, &m)| *v *= m);
        mask
    }
}

/// Activations of one chunk kept for the backward pass.
struct Trace<T> {
    batch: usize,
    /// Trunk layer outputs after ReLU, with the input at index 0.
    acts: Vec<Vec<T>>,
    /// Residual blocks' inner activations.
    hidden: Vec<Vec<T>>,
    /// Column buffers of the trunk convolutions, in layer order, kept only
    /// when training.
    cols: Vec<Vec<T>>,
    p_conv: Vec<T>,
    p_flat: Vec<T>,
    p_flat_mask: Option<Vec<T>>,
    p_hid: Vec<T>,
    p_hid_mask: Option<Vec<T>>,
    probs: Vec<T>,
    v_conv: Vec<T>,
    v_flat: Vec<T>,
    v_flat_mask: Option<Vec<T>>,
    v_hid: Vec<T>,
    v_hid_mask: Option<Vec<T>>,
    values: Vec<T>,
}

fn relu<T: Real>(x: &mut [T]) {
    x.iter_mut().for_each(|v| *v = v.max(T::zero()));
}

/// Zeroes `d` wherever the post-ReLU activation is not positive.
fn relu_back<T: Real>(d: &mut [T], act: &[T]) {
    d.iter_mut()
        .zip(act)
        .for_each(|(g, &a)| if a <= T::zero() { *g = T::zero() });
}

fn mask_back<T: Real>(d: &mut [T], mask: &Option<Vec<T>>) {
    if let Some(m) = mask {
        d.iter_mut().zip(m).for_each(|(g, &k)| *g *= k);
    }
}

/// `[C][B·P]` to `[B][C·P]`.
fn flatten<T: Real>(x: &[T], c: usize, b: usize, p: usize) -> Vec<T> {
    let mut out = vec![T::zero(); c * b * p];
    for ci in 0..c {
        for bi in 0..b {
            let src = &x[ci * b * p + bi * p..][..p];
            out[bi * c * p + ci * p..][..p].copy_from_slice(src);
        }
    }
    out
}

/// `[B][C·P]` to `[C][B·P]`.
fn unflatten<T: Real>(x: &[T], c: usize, b: usize, p: usize) -> Vec<T> {
    let mut out = vec![T::zero(); c * b * p];
    for ci in 0..c {
        for bi in 0..b {
            let src = &x[bi * c * p + ci * p..][..p];
            out[ci * b * p + bi * p..][..p].copy_from_slice(src);
        }
    }
    out
}

impl<T: Real> Network<T> {
    /// Fresh network with fan-in scaled uniform weights and zero biases.
    pub fn new(config: NetConfig, seed: u64) -> Result<Self, NetError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rng = &mut rng;
        let mut trunk = Vec::new();
        let mut c = config.in_channels;
        if config.num_res_blocks == 0 {
            for &f in &config.common_filters {
                trunk.push(Conv::new(c, f, 3, true, rng));
                c = f;
            }
        } else {
            let f = config.res_filters;
            trunk.push(Conv::new(c, f, 3, false, rng));
            for _ in 0..2 * config.num_res_blocks {
                trunk.push(Conv::new(f, f, 3, true, rng));
            }
            c = f;
        }
        let a = config.area();
        let pf = config.policy_filters;
        let policy_conv = Conv::new(c, pf, 1, true, rng);
        let (policy_hidden, policy_out) = if config.extra_act_fc {
            let h = Dense::new(pf * a, config.policy_hidden, rng);
            (Some(h), Dense::new(config.policy_hidden, a, rng))
        } else {
            (None, Dense::new(pf * a, a, rng))
        };
        let vf = config.value_filters;
        let value_conv = Conv::new(c, vf, 1, true, rng);
        let value_hidden = Dense::new(vf * a, config.value_hidden, rng);
        let value_out = Dense::new(config.value_hidden, 1, rng);
        Ok(Self {
            config,
            trunk,
            policy_conv,
            policy_hidden,
            policy_out,
            value_conv,
            value_hidden,
            value_out,
        })
    }

    pub fn config(&self) -> &NetConfig {
        &self.config
    }

    /// Parameter tensors in declaration order: trunk convs (weight, then bias
    /// if any), policy conv, optional policy hidden layer, policy output,
    /// value conv, value hidden layer, value output.
    pub fn parameters(&self) -> Vec<&[T]> {
        let mut out: Vec<&[T]> = Vec::new();
        fn conv<'a, T>(c: &'a Conv<T>, out: &mut Vec<&'a [T]>) {
            out.push(&c.w);
            if let Some(b) = &c.b {
                out.push(b);
            }
        }
        for c in &self.trunk {
            conv(c, &mut out);
        }
        conv(&self.policy_conv, &mut out);
        if let Some(h) = &self.policy_hidden {
            out.push(&h.w);
            out.push(&h.b);
        }
        out.push(&self.policy_out.w);
        out.push(&self.policy_out.b);
        conv(&self.value_conv, &mut out);
        out.push(&self.value_hidden.w);
        out.push(&self.value_hidden.b);
        out.push(&self.value_out.w);
        out.push(&self.value_out.b);
        out
    }

    /// `(parameter, gradient)` pairs in the order of [`Self::parameters`].
    pub(crate) fn params_and_grads(&mut self) -> Vec<(&mut [T], &mut [T])> {
        let mut out: Vec<(&mut [T], &mut [T])> = Vec::new();
        fn conv<'a, T>(c: &'a mut Conv<T>, out: &mut Vec<(&'a mut [T], &'a mut [T])>) {
            out.push((&mut c.w, &mut c.gw));
            if let (Some(b), Some(gb)) = (&mut c.b, &mut c.gb) {
                out.push((b, gb));
            }
        }
        fn dense<'a, T>(d: &'a mut Dense<T>, out: &mut Vec<(&'a mut [T], &'a mut [T])>) {
            out.push((&mut d.w, &mut d.gw));
            out.push((&mut d.b, &mut d.gb));
        }
        for c in &mut self.trunk {
            conv(c, &mut out);
        }
        conv(&mut self.policy_conv, &mut out);
        if let Some(h) = &mut self.policy_hidden {
            dense(h, &mut out);
        }
        dense(&mut self.policy_out, &mut out);
        conv(&mut self.value_conv, &mut out);
        dense(&mut self.value_hidden, &mut out);
        dense(&mut self.value_out, &mut out);
        out
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut [T]> {
        self.params_and_grads().into_iter().map(|(p, _)| p).collect()
    }

    pub(crate) fn gradients(&mut self) -> Vec<&mut [T]> {
        self.params_and_grads().into_iter().map(|(_, g)| g).collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.parameters().iter().map(|p| p.len()).sum()
    }

    pub(crate) fn zero_grad(&mut self) {
        for g in self.gradients() {
            g.fill(T::zero());
        }
    }

    fn check_states(&self, states: &[f32], batch: usize) -> Result<(), NetError> {
        let per = self.config.in_channels * self.config.area();
        if states.len() != batch * per {
            return Err(NetError::Shape(format!(
                "{} state values for {batch} samples of {} channels on {}x{}",
                states.len(),
                self.config.in_channels,
                self.config.board_size,
                self.config.board_size
            )));
        }
        Ok(())
    }

    /// Inference: dropout off, no state kept.
    pub fn predict(&self, states: &[f32], batch: usize) -> Result<Prediction, NetError> {
        let _fp = FlushSubnormals::new();
        self.check_states(states, batch)?;
        let per = self.config.in_channels * self.config.area();
        let mut policy = Vec::with_capacity(batch * self.config.area());
        let mut value = Vec::with_capacity(batch);
        for (start, b) in chunks(batch) {
            let t = self.forward_chunk(&states[start * per..(start + b) * per], b, None);
            policy.extend(t.probs.iter().map(|v| v.as_f64() as f32));
            value.extend(t.values.iter().map(|v| v.as_f64() as f32));
        }
        Ok(Prediction { policy, value })
    }

    /// Batch-mean loss without touching gradients (dropout off).
    pub fn evaluate_loss(&self, batch: &LabeledBatch) -> Result<LossParts, NetError> {
        let _fp = FlushSubnormals::new();
        self.check_batch(batch)?;
        let per = batch.state_len();
        let a = batch.area();
        let mut sum = LossParts::default();
        for (start, b) in chunks(batch.len()) {
            let t = self.forward_chunk(&batch.states[start * per..(start + b) * per], b, None);
            for i in 0..b {
                let pi: Vec<T> = batch.policy(start + i).iter().map(|&v| T::from_f64(v as f64)).collect();
                let z = T::from_f64(batch.values[start + i] as f64);
                sum.add(&sample_loss(&t.probs[i * a..(i + 1) * a], t.values[i], &pi, z, None));
            }
        }
        Ok(sum.scaled(1.0 / batch.len() as f64))
    }

    /// Which ReLU units are active, over the whole batch. Between two
    /// parameter vectors with the same pattern the loss is smooth.
    pub(crate) fn relu_pattern(&self, batch: &LabeledBatch) -> Vec<bool> {
        let per = batch.state_len();
        let mut out = Vec::new();
        for (start, b) in chunks(batch.len()) {
            let t = self.forward_chunk(&batch.states[start * per..(start + b) * per], b, None);
            let layers = t.acts[1..]
                .iter()
                .chain(&t.hidden)
                .chain([&t.p_conv, &t.p_hid, &t.v_conv, &t.v_hid]);
            for layer in layers {
                out.extend(layer.iter().map(|&v| v > T::zero()));
            }
        }
        out
    }

    fn check_batch(&self, batch: &LabeledBatch) -> Result<(), NetError> {
        if batch.is_empty() {
            return Err(NetError::Shape("empty batch".into()));
        }
        if batch.channels != self.config.in_channels || batch.size != self.config.board_size {
            return Err(NetError::Shape(format!(
                "batch of {} channels on {}x{}, network expects {} on {}x{}",
                batch.channels,
                batch.size,
                batch.size,
                self.config.in_channels,
                self.config.board_size,
                self.config.board_size
            )));
        }
        self.check_states(&batch.states, batch.len())
    }

    /// Zeroes and then fills the parameter gradients of the batch-mean loss.
    /// Dropout masks, when `dropout > 0`, are drawn from `rng`.
    pub fn compute_gradients(
        &mut self,
        batch: &LabeledBatch,
        dropout: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<LossParts, NetError> {
        let _fp = FlushSubnormals::new();
        self.check_batch(batch)?;
        self.zero_grad();
        let per = batch.state_len();
        let a = batch.area();
        let scale = T::from_f64(1.0 / batch.len() as f64);
        let mut sum = LossParts::default();
        for (start, b) in chunks(batch.len()) {
            let drop = (dropout > 0.0).then(|| Dropout { rate: dropout, rng: &mut *rng });
            let t = self.forward_chunk(&batch.states[start * per..(start + b) * per], b, drop);
            let mut dlogits = vec![T::zero(); b * a];
            let mut dvalue = vec![T::zero(); b];
            for i in 0..b {
                let pi: Vec<T> = batch.policy(start + i).iter().map(|&v| T::from_f64(v as f64)).collect();
                let z = T::from_f64(batch.values[start + i] as f64);
                sum.add(&sample_loss(
                    &t.probs[i * a..(i + 1) * a],
                    t.values[i],
                    &pi,
                    z,
                    Some((scale, &mut dlogits[i * a..(i + 1) * a], &mut dvalue[i])),
                ));
            }
            self.backward_chunk(&t, &dlogits, &dvalue);
        }
        Ok(sum.scaled(1.0 / batch.len() as f64))
    }

    fn forward_chunk(&self, states: &[f32], b: usize, mut drop: Option<Dropout<'_>>) -> Trace<T> {
        let n = self.config.board_size;
        let p = n * n;
        let bp = b * p;
        let cin = self.config.in_channels;
        let mut x = vec![T::zero(); cin * bp];
        for bi in 0..b {
            for ci in 0..cin {
                let src = &states[(bi * cin + ci) * p..][..p];
                let dst = &mut x[ci * bp + bi * p..][..p];
                dst.iter_mut().zip(src).for_each(|(d, &s)| *d = T::from_f64(s as f64));
            }
        }
        let mut acts = vec![x];
        let mut hidden = Vec::new();
        let mut cols = Vec::with_capacity(self.trunk.len());
        if self.config.num_res_blocks == 0 {
            for conv in &self.trunk {
                let mut out = Vec::new();
                let mut col = Vec::new();
                conv.forward(acts.last().unwrap(), bp, n, &mut out, &mut col);
                relu(&mut out);
                acts.push(out);
                cols.push(col);
            }
        } else {
            let mut out = Vec::new();
            let mut col = Vec::new();
            self.trunk[0].forward(&acts[0], bp, n, &mut out, &mut col);
            relu(&mut out);
            acts.push(out);
            cols.push(col);
            for pair in self.trunk[1..].chunks_exact(2) {
                let x = acts.last().unwrap();
                let mut h = Vec::new();
                let mut col1 = Vec::new();
                pair[0].forward(x, bp, n, &mut h, &mut col1);
                relu(&mut h);
                let mut y = Vec::new();
                let mut col2 = Vec::new();
                pair[1].forward(&h, bp, n, &mut y, &mut col2);
                cols.push(col1);
                cols.push(col2);
                y.iter_mut().zip(x).for_each(|(v, &s)| *v = (*v + s).max(T::zero()));
                hidden.push(h);
                acts.push(y);
            }
        }
        let feat = acts.last().unwrap();
        let mut col = Vec::new();

        let pf = self.config.policy_filters;
        let mut p_conv = Vec::new();
        self.policy_conv.forward(feat, bp, n, &mut p_conv, &mut col);
        relu(&mut p_conv);
        let mut p_flat = flatten(&p_conv, pf, b, p);
        let p_flat_mask = drop.as_mut().map(|d| d.apply(&mut p_flat));
        let mut p_hid = Vec::new();
        let mut p_hid_mask = None;
        let mut logits = Vec::new();
        if let Some(h) = &self.policy_hidden {
            h.forward(&p_flat, b, &mut p_hid);
            relu(&mut p_hid);
            p_hid_mask = drop.as_mut().map(|d| d.apply(&mut p_hid));
            self.policy_out.forward(&p_hid, b, &mut logits);
        } else {
            self.policy_out.forward(&p_flat, b, &mut logits);
        }
        softmax_rows(&mut logits, p);

        let vf = self.config.value_filters;
        let mut v_conv = Vec::new();
        self.value_conv.forward(feat, bp, n, &mut v_conv, &mut col);
        relu(&mut v_conv);
        let mut v_flat = flatten(&v_conv, vf, b, p);
        let v_flat_mask = drop.as_mut().map(|d| d.apply(&mut v_flat));
        let mut v_hid = Vec::new();
        self.value_hidden.forward(&v_flat, b, &mut v_hid);
        relu(&mut v_hid);
        let v_hid_mask = drop.as_mut().map(|d| d.apply(&mut v_hid));
        let mut values = Vec::new();
        self.value_out.forward(&v_hid, b, &mut values);
        values.iter_mut().for_each(|v| *v = v.tanh());

        Trace {
            batch: b,
            acts,
            hidden,
            cols,
            p_conv,
            p_flat,
            p_flat_mask,
            p_hid,
            p_hid_mask,
            probs: logits,
            v_conv,
            v_flat,
            v_flat_mask,
            v_hid,
            v_hid_mask,
            values,
        }
    }

    /// Accumulates parameter gradients given the loss gradient w.r.t. the
    /// logits and the value pre-activations.
    fn backward_chunk(&mut self, t: &Trace<T>, dlogits: &[T], dvalue: &[T]) {
        let n = self.config.board_size;
        let p = n * n;
        let b = t.batch;
        let bp = b * p;
        let feat = t.acts.last().unwrap();

        // policy head
        let pf = self.config.policy_filters;
        let mut d_pflat = Vec::new();
        if let Some(h) = &mut self.policy_hidden {
            let mut d_hid = Vec::new();
            self.policy_out.backward(&t.p_hid, dlogits, b, Some(&mut d_hid));
            mask_back(&mut d_hid, &t.p_hid_mask);
            relu_back(&mut d_hid, &t.p_hid);
            h.backward(&t.p_flat, &d_hid, b, Some(&mut d_pflat));
        } else {
            self.policy_out.backward(&t.p_flat, dlogits, b, Some(&mut d_pflat));
        }
        mask_back(&mut d_pflat, &t.p_flat_mask);
        let mut d_pconv = unflatten(&d_pflat, pf, b, p);
        relu_back(&mut d_pconv, &t.p_conv);
        let mut d_feat = Vec::new();
        self.policy_conv.backward(feat, &d_pconv, bp, n, Some(&mut d_feat));

        // value head
        let vf = self.config.value_filters;
        let mut d_vhid = Vec::new();
        self.value_out.backward(&t.v_hid, dvalue, b, Some(&mut d_vhid));
        mask_back(&mut d_vhid, &t.v_hid_mask);
        relu_back(&mut d_vhid, &t.v_hid);
        let mut d_vflat = Vec::new();
        self.value_hidden.backward(&t.v_flat, &d_vhid, b, Some(&mut d_vflat));
        mask_back(&mut d_vflat, &t.v_flat_mask);
        let mut d_vconv = unflatten(&d_vflat, vf, b, p);
        relu_back(&mut d_vconv, &t.v_conv);
        let mut d_feat_v = Vec::new();
        self.value_conv.backward(feat, &d_vconv, bp, n, Some(&mut d_feat_v));
        d_feat.iter_mut().zip(&d_feat_v).for_each(|(a, &v)| *a += v);

        // trunk
        let mut d = d_feat;
        if self.config.num_res_blocks == 0 {
            let layers = self.trunk.len();
            for i in (0..layers).rev() {
                relu_back(&mut d, &t.acts[i + 1]);
                let mut prev = Vec::new();
                let din = (i > 0).then_some(&mut prev);
                self.trunk[i].backward(&t.cols[i], &d, bp, n, din);
                d = prev;
            }
        } else {
            let blocks = self.config.num_res_blocks;
            for j in (0..blocks).rev() {
                relu_back(&mut d, &t.acts[j + 2]);
                let h = &t.hidden[j];
                let mut dh = Vec::new();
                self.trunk[2 + 2 * j].backward(&t.cols[2 + 2 * j], &d, bp, n, Some(&mut dh));
                relu_back(&mut dh, h);
                let mut dx = Vec::new();
                self.trunk[1 + 2 * j].backward(&t.cols[1 + 2 * j], &dh, bp, n, Some(&mut dx));
                d.iter_mut().zip(&dx).for_each(|(a, &v)| *a += v);
            }
            relu_back(&mut d, &t.acts[1]);
            self.trunk[0].backward(&t.cols[0], &d, bp, n, None);
        }
    }
}

/// `(start, len)` of consecutive chunks covering `total` samples.
fn chunks(total: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..total).step_by(CHUNK).map(move |s| (s, CHUNK.min(total - s)))
}

impl Network<f32> {
    /// Same architecture and weights in `f64`, for gradient checks.
    pub fn to_f64(&self) -> Network<f64> {
        let mut out = Network::<f64>::new(self.config.clone(), 0).expect("config already valid");
        for (dst, src) in out.parameters_mut().into_iter().zip(self.parameters()) {
            dst.iter_mut().zip(src).for_each(|(d, &s)| *d = s as f64);
        }
        out
    }
}
