//! The vector-field network `v_t(a | o; θ)`.
//!
//! A fully connected MLP whose hidden layers use a Swish activation
//! `x · sigmoid(β x)` with one learnable `β` per layer. Parameters live in a
//! single flat buffer so that Adam and the EMA shadow copy are plain
//! elementwise loops; gradients share the same layout.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::horizon::ActionHorizon;
use crate::manifold::{self, TangentVector};

/// Hidden widths used by the policy network (five weight layers).
pub const STANDARD_HIDDEN: [usize; 4] = [64, 64, 64, 64];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Layer {
    n_in: usize,
    n_out: usize,
    w_off: usize,
    b_off: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorFieldNet {
    widths: Vec<usize>,
    layers: Vec<Layer>,
    beta_off: usize,
    params: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Swish with slope parameter `beta`.
pub fn swish(x: f64, beta: f64) -> f64 {
    x * sigmoid(beta * x)
}

impl VectorFieldNet {
    /// All-zero network with the given layer widths.
    pub fn zeros(input_dim: usize, hidden: &[usize], output_dim: usize) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 || hidden.contains(&0) {
            return Err(Error::invalid("layer widths must be positive"));
        }
        let mut widths = vec![input_dim];
        widths.extend_from_slice(hidden);
        widths.push(output_dim);
        let mut layers = Vec::with_capacity(widths.len() - 1);
        let mut off = 0;
        for w in widths.windows(2) {
            let (n_in, n_out) = (w[0], w[1]);
            layers.push(Layer {
                n_in,
                n_out,
                w_off: off,
                b_off: off + n_in * n_out,
            });
            off += n_in * n_out + n_out;
        }
        let beta_off = off;
        let total = off + hidden.len();
        Ok(VectorFieldNet {
            widths,
            layers,
            beta_off,
            params: vec![0.0; total],
        })
    }

    /// Weights uniform in `±sqrt(1/fan_in)`, zero biases, Swish `β = 1`.
    pub fn new<R: Rng + ?Sized>(
        input_dim: usize,
        hidden: &[usize],
        output_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let mut net = VectorFieldNet::zeros(input_dim, hidden, output_dim)?;
        for l in net.layers.clone() {
            let bound = (1.0 / l.n_in as f64).sqrt();
            for w in &mut net.params[l.w_off..l.b_off] {
                *w = rng.random_range(-bound..bound);
            }
        }
        for b in net.betas_mut() {
            *b = 1.0;
        }
        Ok(net)
    }

    /// The fixed policy architecture: `input → 64 → 64 → 64 → 64 → output`.
    pub fn standard<R: Rng + ?Sized>(input_dim: usize, output_dim: usize, rng: &mut R) -> Result<Self> {
        let net = VectorFieldNet::new(input_dim, &STANDARD_HIDDEN, output_dim, rng)?;
        log::info!(
            "vector field network {:?} with {} learnable parameters",
            net.widths,
            net.num_params()
        );
        Ok(net)
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn hidden(&self) -> &[usize] {
        &self.widths[1..self.widths.len() - 1]
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::invalid(format!(
                "expected {} parameters, got {}",
                self.params.len(),
                params.len()
            )));
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    /// Row-major `n_out × n_in` weight matrix of layer `i`.
    pub fn weights(&self, i: usize) -> &[f64] {
        let l = self.layers[i];
        &self.params[l.w_off..l.b_off]
    }

    pub fn weights_mut(&mut self, i: usize) -> &mut [f64] {
        let l = self.layers[i];
        &mut self.params[l.w_off..l.b_off]
    }

    pub fn bias(&self, i: usize) -> &[f64] {
        let l = self.layers[i];
        &self.params[l.b_off..l.b_off + l.n_out]
    }

    pub fn bias_mut(&mut self, i: usize) -> &mut [f64] {
        let l = self.layers[i];
        &mut self.params[l.b_off..l.b_off + l.n_out]
    }

    pub fn betas(&self) -> &[f64] {
        &self.params[self.beta_off..]
    }

    pub fn betas_mut(&mut self) -> &mut [f64] {
        let off = self.beta_off;
        &mut self.params[off..]
    }

    /// Concatenates `[t, action, obs]` and checks it against the input width.
    pub fn assemble_input(&self, t: f64, action_flat: &[f64], obs_flat: &[f64]) -> Result<Vec<f64>> {
        let n = 1 + action_flat.len() + obs_flat.len();
        if n != self.input_dim() {
            return Err(Error::invalid(format!(
                "network expects {} inputs, got 1 + {} + {}",
                self.input_dim(),
                action_flat.len(),
                obs_flat.len()
            )));
        }
        if action_flat.len() != self.output_dim() {
            return Err(Error::invalid(format!(
                "action has {} coordinates, network outputs {}",
                action_flat.len(),
                self.output_dim()
            )));
        }
        let mut input = Vec::with_capacity(n);
        input.push(t);
        input.extend_from_slice(action_flat);
        input.extend_from_slice(obs_flat);
        Ok(input)
    }

    pub fn forward(&self, t: f64, action_flat: &[f64], obs_flat: &[f64]) -> Result<Vec<f64>> {
        let input = self.assemble_input(t, action_flat, obs_flat)?;
        Ok(self.forward_cached(input).output().to_vec())
    }

    /// Runs the network on an assembled input, keeping what backpropagation needs.
    pub fn forward_cached(&self, input: Vec<f64>) -> ForwardCache {
        debug_assert_eq!(input.len(), self.input_dim());
        let mut layer_inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut a = input;
        let betas = self.betas();
        for (i, l) in self.layers.iter().enumerate() {
            let w = &self.params[l.w_off..l.b_off];
            let b = &self.params[l.b_off..l.b_off + l.n_out];
            let z: Vec<f64> = (0..l.n_out)
                .map(|o| {
                    let row = &w[o * l.n_in..(o + 1) * l.n_in];
                    b[o] + row.iter().zip(&a).map(|(wi, ai)| wi * ai).sum::<f64>()
                })
                .collect();
            let next = if i + 1 < self.layers.len() {
                z.iter().map(|&zi| swish(zi, betas[i])).collect()
            } else {
                z.clone()
            };
            layer_inputs.push(std::mem::replace(&mut a, next));
            pre.push(z);
        }
        ForwardCache {
            layer_inputs,
            pre,
            output: a,
        }
    }

    /// Adds `scale · ∂⟨upstream, output⟩/∂θ` into `grads`.
    pub fn accumulate_gradients(
        &self,
        cache: &ForwardCache,
        upstream: &[f64],
        scale: f64,
        grads: &mut Gradients,
    ) -> Result<()> {
        if upstream.len() != self.output_dim() {
            return Err(Error::invalid(format!(
                "upstream gradient has length {}, expected {}",
                upstream.len(),
                self.output_dim()
            )));
        }
        if grads.0.len() != self.params.len() {
            return Err(Error::invalid("gradient buffer does not match the network"));
        }
        let g_all = &mut grads.0;
        let betas = self.betas();
        let mut g: Vec<f64> = upstream.iter().map(|u| u * scale).collect();
        for i in (0..self.layers.len()).rev() {
            let l = self.layers[i];
            if i + 1 < self.layers.len() {
                // Through the Swish activation of layer i.
                let beta = betas[i];
                let mut g_beta = 0.0;
                for (gz, &z) in g.iter_mut().zip(&cache.pre[i]) {
                    let s = sigmoid(beta * z);
                    let ds = s * (1.0 - s);
                    g_beta += *gz * z * z * ds;
                    *gz *= s + beta * z * ds;
                }
                g_all[self.beta_off + i] += g_beta;
            }
            let a = &cache.layer_inputs[i];
            let w = &self.params[l.w_off..l.b_off];
            for (o, &go) in g.iter().enumerate() {
                g_all[l.b_off + o] += go;
                let gw = &mut g_all[l.w_off + o * l.n_in..l.w_off + (o + 1) * l.n_in];
                for (gwi, ai) in gw.iter_mut().zip(a) {
                    *gwi += go * ai;
                }
            }
            if i > 0 {
                let mut g_in = vec![0.0; l.n_in];
                for (o, &go) in g.iter().enumerate() {
                    let row = &w[o * l.n_in..(o + 1) * l.n_in];
                    for (gi, wi) in g_in.iter_mut().zip(row) {
                        *gi += go * wi;
                    }
                }
                g = g_in;
            }
        }
        Ok(())
    }

    /// Parameter gradient of `⟨residual, v(t, a, o)⟩`.
    ///
    /// With `residual = 2 (v − u)` this is the gradient of the squared regression loss.
    pub fn backward(
        &self,
        t: f64,
        action_flat: &[f64],
        obs_flat: &[f64],
        residual: &[f64],
    ) -> Result<Gradients> {
        let input = self.assemble_input(t, action_flat, obs_flat)?;
        let cache = self.forward_cached(input);
        let mut grads = Gradients::zeros_like(self);
        self.accumulate_gradients(&cache, residual, 1.0, &mut grads)?;
        Ok(grads)
    }

    pub fn to_snapshot(&self) -> NetSnapshot {
        NetSnapshot::from_params(self, &self.params)
    }

    pub fn from_snapshot(s: &NetSnapshot) -> Result<Self> {
        let mut net = VectorFieldNet::zeros(s.input_dim, &s.hidden, s.output_dim)?;
        net.set_params(&s.flat_params(&net)?)?;
        Ok(net)
    }
}

/// Intermediate values from one forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    layer_inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    output: Vec<f64>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        &self.output
    }
}

/// Gradients in the same flat layout as the network parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients(pub Vec<f64>);

impl Gradients {
    pub fn zeros_like(net: &VectorFieldNet) -> Self {
        Gradients(vec![0.0; net.num_params()])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|g| g.is_finite())
    }
}

/// Adam moments plus the EMA shadow weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step_count: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub ema_weights: Vec<f64>,
    pub ema_decay: f64,
}

impl OptimizerState {
    /// Fresh state with zero moments and the EMA seeded at the current weights.
    pub fn new(net: &VectorFieldNet, learning_rate: f64, ema_decay: f64) -> Result<Self> {
        if !(learning_rate > 0.0) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if !(0.0..1.0).contains(&ema_decay) {
            return Err(Error::invalid(format!("ema decay must lie in [0, 1), got {ema_decay}")));
        }
        let n = net.num_params();
        Ok(OptimizerState {
            first_moment: vec![0.0; n],
            second_moment: vec![0.0; n],
            step_count: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            ema_weights: net.params().to_vec(),
            ema_decay,
        })
    }

    /// A copy of `net` carrying the EMA weights.
    pub fn ema_net(&self, net: &VectorFieldNet) -> VectorFieldNet {
        let mut ema = net.clone();
        ema.params.copy_from_slice(&self.ema_weights);
        ema
    }
}

/// One bias-corrected Adam update followed by the EMA update.
pub fn adam_step(net: &mut VectorFieldNet, opt: &mut OptimizerState, grads: &Gradients) -> Result<()> {
    let n = net.num_params();
    if grads.0.len() != n || opt.first_moment.len() != n {
        return Err(Error::invalid("gradient/optimizer state does not match the network"));
    }
    opt.step_count += 1;
    let k = opt.step_count as i32;
    let c1 = 1.0 - opt.beta1.powi(k);
    let c2 = 1.0 - opt.beta2.powi(k);
    let (b1, b2, lr, eps) = (opt.beta1, opt.beta2, opt.learning_rate, opt.epsilon);
    for i in 0..n {
        let g = grads.0[i];
        let m = b1 * opt.first_moment[i] + (1.0 - b1) * g;
        let v = b2 * opt.second_moment[i] + (1.0 - b2) * g * g;
        opt.first_moment[i] = m;
        opt.second_moment[i] = v;
        net.params[i] -= lr * (m / c1) / ((v / c2).sqrt() + eps);
    }
    let d = opt.ema_decay;
    for (e, w) in opt.ema_weights.iter_mut().zip(&net.params) {
        *e = d * *e + (1.0 - d) * w;
    }
    Ok(())
}

/// Splits a raw network output into per-step ambient vectors and projects
/// each onto the tangent space at the matching horizon point.
pub fn tangent_head(raw_output: &[f64], points: &ActionHorizon) -> Result<Vec<TangentVector>> {
    let d = points.kind().ambient_dim();
    if raw_output.len() != points.len() * d {
        return Err(Error::invalid(format!(
            "raw output of length {} does not match a horizon of {} × {d}",
            raw_output.len(),
            points.len()
        )));
    }
    raw_output
        .chunks(d)
        .zip(points.points())
        .map(|(v, x)| manifold::project_to_tangent(v, x))
        .collect()
}

/// Serialized network weights, one entry per layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetSnapshot {
    pub input_dim: usize,
    pub output_dim: usize,
    pub hidden: Vec<usize>,
    pub layers: Vec<LayerSnapshot>,
    pub swish_betas: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerSnapshot {
    /// Row-major `rows × cols` weight matrix, one inner list per output unit.
    pub weight: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl NetSnapshot {
    /// Snapshot of `net`'s architecture with an arbitrary parameter vector in its layout.
    pub fn from_params(net: &VectorFieldNet, params: &[f64]) -> Self {
        let layers = net
            .layers
            .iter()
            .map(|l| LayerSnapshot {
                weight: params[l.w_off..l.b_off].chunks(l.n_in).map(|r| r.to_vec()).collect(),
                bias: params[l.b_off..l.b_off + l.n_out].to_vec(),
            })
            .collect();
        NetSnapshot {
            input_dim: net.input_dim(),
            output_dim: net.output_dim(),
            hidden: net.hidden().to_vec(),
            layers,
            swish_betas: params[net.beta_off..].to_vec(),
        }
    }

    /// Flattens back into the layout of `net`, validating every shape.
    pub fn flat_params(&self, net: &VectorFieldNet) -> Result<Vec<f64>> {
        let bad = |m: &str| Error::Schema(format!("network snapshot: {m}"));
        if self.layers.len() != net.layers.len() || self.swish_betas.len() != net.hidden().len() {
            return Err(bad("layer count does not match the architecture"));
        }
        let mut out = Vec::with_capacity(net.num_params());
        for (snap, l) in self.layers.iter().zip(&net.layers) {
            if snap.weight.len() != l.n_out || snap.weight.iter().any(|r| r.len() != l.n_in) {
                return Err(bad("weight matrix has the wrong shape"));
            }
            if snap.bias.len() != l.n_out {
                return Err(bad("bias vector has the wrong length"));
            }
            snap.weight.iter().for_each(|r| out.extend_from_slice(r));
            out.extend_from_slice(&snap.bias);
        }
        out.extend_from_slice(&self.swish_betas);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{ManifoldKind, ManifoldPoint};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn standard_architecture_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = VectorFieldNet::standard(22, 16, &mut rng).unwrap();
        assert_eq!(net.num_layers(), 5);
        assert_eq!(net.hidden(), &[64, 64, 64, 64]);
        assert_eq!(net.betas(), &[1.0; 4]);
        let expected = 22 * 64 + 64 + 3 * (64 * 64 + 64) + 64 * 16 + 16 + 4;
        assert_eq!(net.num_params(), expected);
        assert!(net.bias(0).iter().all(|b| *b == 0.0));
        let bound = (1.0f64 / 22.0).sqrt();
        assert!(net.weights(0).iter().all(|w| w.abs() <= bound));
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = VectorFieldNet::zeros(5, &[4, 4], 2).unwrap();
        assert_eq!(net.forward(0.3, &[1.0, -2.0], &[3.0, 0.5]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn swish_closed_form() {
        assert_eq!(swish(0.0, 1.0), 0.0);
        assert!((swish(1.0, 1.0) - 1.0 / (1.0 + (-1.0f64).exp())).abs() < 1e-15);
        assert!((swish(1.0, 1.0) - 0.7311).abs() < 1e-4);
    }

    #[test]
    fn swish_applied_elementwise_with_unit_beta() {
        // Identity first layer, identity readout: output = swish(input).
        let mut net = VectorFieldNet::zeros(3, &[3], 3).unwrap();
        for i in 0..3 {
            net.weights_mut(0)[i * 3 + i] = 1.0;
            net.weights_mut(1)[i * 3 + i] = 1.0;
        }
        net.betas_mut()[0] = 1.0;
        let input = vec![0.0, 1.0, -2.0];
        let out = net.forward_cached(input.clone()).output().to_vec();
        for (o, x) in out.iter().zip(&input) {
            assert!((o - swish(*x, 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn forward_is_deterministic() {
        let make = || VectorFieldNet::standard(7, 4, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        let (a, b) = (make(), make());
        let x = [0.2, -0.1, 0.4, 0.9];
        let o = [0.5, -0.5];
        assert_eq!(a.forward(0.25, &x, &o).unwrap(), b.forward(0.25, &x, &o).unwrap());
    }

    #[test]
    fn input_dimension_mismatch() {
        let net = VectorFieldNet::zeros(5, &[4], 2).unwrap();
        assert!(net.forward(0.0, &[1.0, 2.0], &[1.0]).is_err());
        assert!(net.backward(0.0, &[1.0, 2.0], &[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn zero_residual_gives_zero_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = VectorFieldNet::new(5, &[6, 6], 2, &mut rng).unwrap();
        let g = net.backward(0.4, &[0.1, 0.2], &[0.3, 0.4], &[0.0, 0.0]).unwrap();
        assert!(g.0.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn linear_layer_gradient_is_outer_product() {
        // No hidden layers: y = W x + b, d⟨r, y⟩/dW = r ⊗ x.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = VectorFieldNet::new(4, &[], 2, &mut rng).unwrap();
        let (t, a, o) = (0.5, [1.5, -2.0], [0.25]);
        let r = [0.3, -0.7];
        let g = net.backward(t, &a, &o, &r).unwrap();
        let x = [t, a[0], a[1], o[0]];
        for (i, ri) in r.iter().enumerate() {
            for (j, xj) in x.iter().enumerate() {
                assert!((g.0[i * 4 + j] - ri * xj).abs() < 1e-15);
            }
            assert_eq!(g.0[8 + i], *ri);
        }
    }

    #[test]
    fn adam_with_zero_gradient_leaves_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut net = VectorFieldNet::new(3, &[4], 2, &mut rng).unwrap();
        let before = net.params().to_vec();
        let mut opt = OptimizerState::new(&net, 1e-3, 0.999).unwrap();
        let g = Gradients::zeros_like(&net);
        adam_step(&mut net, &mut opt, &g).unwrap();
        assert_eq!(net.params(), &before[..]);
        assert_eq!(opt.step_count, 1);
        // EMA of identical values stays put.
        assert_eq!(opt.ema_weights, before);
    }

    #[test]
    fn adam_minimizes_scalar_quadratic() {
        // f(w) = w², w0 = 1, lr = 0.1; Adam's normalized step moves w toward 0.
        let mut net = VectorFieldNet::zeros(1, &[], 1).unwrap();
        net.params_mut()[0] = 1.0;
        let mut opt = OptimizerState::new(&net, 0.1, 0.9).unwrap();

        // Independent scalar simulation of the textbook update.
        let (mut w, mut m, mut v) = (1.0f64, 0.0f64, 0.0f64);
        let mut oracle = Vec::new();
        for k in 1..=100 {
            let g = 2.0 * w;
            m = 0.9 * m + 0.1 * g;
            v = 0.999 * v + 0.001 * g * g;
            let mh = m / (1.0 - 0.9f64.powi(k));
            let vh = v / (1.0 - 0.999f64.powi(k));
            w -= 0.1 * mh / (vh.sqrt() + 1e-8);
            oracle.push(w);
        }

        let mut prev = 1.0;
        for (k, expected) in oracle.iter().enumerate() {
            let mut g = Gradients::zeros_like(&net);
            g.0[0] = 2.0 * net.params()[0];
            adam_step(&mut net, &mut opt, &g).unwrap();
            let w_new = net.params()[0];
            assert!((w_new - expected).abs() < 1e-12);
            // Monotone descent until the first overshoot of the minimizer (step 11).
            if k < 11 {
                assert!(w_new < prev, "step {k}: {w_new} !< {prev}");
            }
            prev = w_new;
        }
        // The simulation ends at w ≈ 2.9e-3.
        assert!(net.params()[0].abs() < 5e-3, "{}", net.params()[0]);
    }

    #[test]
    fn invalid_optimizer_settings() {
        let net = VectorFieldNet::zeros(1, &[], 1).unwrap();
        assert!(OptimizerState::new(&net, 0.0, 0.9).is_err());
        assert!(OptimizerState::new(&net, 1e-3, 1.0).is_err());
    }

    #[test]
    fn tangent_head_projects_on_sphere() {
        let k = ManifoldKind::Sphere { intrinsic_dim: 2 };
        let pts = ActionHorizon::new(vec![
            ManifoldPoint::new(vec![0.0, 0.0, 1.0], k).unwrap(),
            ManifoldPoint::new(vec![0.6, 0.8, 0.0], k).unwrap(),
        ])
        .unwrap();
        let v = tangent_head(&[1.0, 2.0, 3.0, 0.6, 0.8, 0.0], &pts).unwrap();
        assert_eq!(v[0].coords(), &[1.0, 2.0, 0.0]);
        assert!(v[1].norm() < 1e-15);
        assert!(tangent_head(&[1.0; 5], &pts).is_err());

        let e = ActionHorizon::new(vec![ManifoldPoint::euclidean(vec![1.0, 1.0]).unwrap(); 2]).unwrap();
        let v = tangent_head(&[1.0, 2.0, 3.0, 4.0], &e).unwrap();
        assert_eq!(v[1].coords(), &[3.0, 4.0]);
    }

    #[test]
    fn snapshot_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = VectorFieldNet::new(4, &[3, 5], 2, &mut rng).unwrap();
        let json = serde_json::to_string(&net.to_snapshot()).unwrap();
        let back: NetSnapshot = serde_json::from_str(&json).unwrap();
        assert_eq!(VectorFieldNet::from_snapshot(&back).unwrap(), net);
    }
}
