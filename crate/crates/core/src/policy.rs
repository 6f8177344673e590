//! The flow matching policy: training over demonstration pairs and
//! receding-horizon inference.
//!
//! Training draws, for every training pair, a time `t ~ U[0, 1)`, a base
//! horizon made of `T_a` copies of one base sample, and a fresh context index;
//! the network regresses the conditional target field at the interpolated
//! horizon. Inference integrates the EMA network from a base horizon and hands
//! back the whole predicted horizon; rollouts execute its first `T_e` actions.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{self, Dataset, ObservationVector, PairIndex, TrainingPair};
use crate::error::{Error, Result};
use crate::flowmatch::{self, PathKind};
use crate::horizon::{flatten_tangents, ActionHorizon};
use crate::manifold::{self, ManifoldKind, ManifoldPoint, TangentVector};
use crate::net::{self, Gradients, NetSnapshot, OptimizerState, VectorFieldNet};
use crate::odeint::{self, SolverConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    /// Prediction horizon `T_a`.
    pub horizon: usize,
    /// Execution horizon `T_e`.
    pub execute: usize,
    pub path: PathKind,
    /// Per-axis standard deviation of the base distribution.
    pub base_sigma: f64,
    pub solver: SolverConfig,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    #[serde(default)]
    pub lr_schedule: LrSchedule,
    pub ema_decay: f64,
    pub seed: u64,
    /// Restricts context indices to the last `w` steps when set.
    pub context_window: Option<usize>,
}

impl PolicyConfig {
    /// Defaults for `kind`: Gaussian CFM, σ = 1, and Dopri5 on `R^d`; geodesic
    /// path, σ = 0.5, and geodesic Euler on the sphere.
    pub fn for_manifold(kind: ManifoldKind) -> Self {
        let euclidean = kind.is_euclidean();
        PolicyConfig {
            horizon: 8,
            execute: 4,
            path: if euclidean {
                PathKind::GaussianCfm { sigma_min: 0.01 }
            } else {
                PathKind::Geodesic
            },
            base_sigma: if euclidean { 1.0 } else { 0.5 },
            solver: if euclidean {
                SolverConfig::default_dopri5()
            } else {
                SolverConfig::default_euler()
            },
            epochs: 200,
            batch_size: 128,
            lr: 1e-4,
            lr_schedule: LrSchedule::Constant,
            ema_decay: 0.999,
            seed: 0,
            context_window: None,
        }
    }

    pub fn validate(&self, kind: ManifoldKind) -> Result<()> {
        if self.execute < 1 || self.execute > self.horizon {
            return Err(Error::invalid(format!(
                "execution horizon {} must lie in [1, {}]",
                self.execute, self.horizon
            )));
        }
        if self.epochs < 1 || self.batch_size < 1 {
            return Err(Error::invalid("epochs and batch_size must be at least 1"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid("lr must be positive"));
        }
        if !(self.base_sigma > 0.0) {
            return Err(Error::invalid("base_sigma must be positive"));
        }
        if self.context_window == Some(0) {
            return Err(Error::invalid("context window must be at least 1"));
        }
        self.path.validate(kind)?;
        self.solver.validate()?;
        if !kind.is_euclidean() && matches!(self.solver, SolverConfig::Dopri5 { .. }) {
            return Err(Error::invalid("curved manifolds require the geodesic Euler solver"));
        }
        Ok(())
    }

    /// Learning rate used throughout the 1-based `epoch`.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        match self.lr_schedule {
            LrSchedule::Constant => self.lr,
            LrSchedule::Cosine => {
                let f = (epoch.saturating_sub(1)) as f64 / self.epochs as f64;
                0.5 * self.lr * (1.0 + (std::f64::consts::PI * f).cos())
            }
        }
    }

    pub fn input_dim(&self, kind: ManifoldKind) -> usize {
        1 + self.horizon * kind.ambient_dim() + ObservationVector::flat_len(kind)
    }

    pub fn output_dim(&self, kind: ManifoldKind) -> usize {
        self.horizon * kind.ambient_dim()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrSchedule {
    #[default]
    Constant,
    /// Half-cosine decay from `lr` towards zero over `epochs`, stepped per epoch.
    Cosine,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub elapsed_seconds: f64,
}

#[derive(Clone, Debug)]
pub struct TrainedPolicy {
    pub config: PolicyConfig,
    pub manifold: ManifoldKind,
    /// Demonstration length used to normalize observation gaps.
    pub demo_len: usize,
    /// Live weights (continue training from here).
    pub net: VectorFieldNet,
    pub optimizer: OptimizerState,
    /// EMA weights of the epoch with the lowest validation loss; used for inference.
    pub best_params: Vec<f64>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub log: Vec<EpochLog>,
    /// Mean batch loss of every optimizer step in this session (not persisted).
    pub step_losses: Vec<f64>,
}

/// Stream seeds derived from the run seed, so that each epoch's randomness is
/// independent of how many epochs ran before it (resumes replay exactly).
fn stream(seed: u64, purpose: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose);
    rng.set_word_pos(u128::from(index) << 32);
    rng
}

const STREAM_INIT: u64 = 1;
const STREAM_VAL: u64 = 2;
const STREAM_EPOCH: u64 = 3;

/// One regression target, fully determined.
struct Draw {
    pair: TrainingPair,
    t: f64,
    base: ActionHorizon,
}

fn draw<R: Rng + ?Sized>(
    dataset: &Dataset,
    index: PairIndex,
    cfg: &PolicyConfig,
    rng: &mut R,
) -> Result<Draw> {
    let pair = data::training_pair_at(dataset, index, cfg.horizon, cfg.context_window, rng)?;
    let t: f64 = rng.random();
    let origin = dataset.manifold.origin();
    let b = manifold::sample_base(dataset.manifold, cfg.base_sigma, &origin, rng)?;
    Ok(Draw {
        pair,
        t,
        base: ActionHorizon::repeated(&b, cfg.horizon)?,
    })
}

/// Loss of one draw; when `grads` is given, also accumulates `scale · ∇loss`.
fn draw_loss(
    net: &VectorFieldNet,
    cfg: &PolicyConfig,
    d: &Draw,
    grads: Option<(&mut Gradients, f64)>,
) -> Result<f64> {
    let sample = flowmatch::sample_path(cfg.path, &d.base, &d.pair.action_horizon, d.t)?;
    let input = net.assemble_input(d.t, &sample.point.flatten(), &d.pair.observation.flatten())?;
    let cache = net.forward_cached(input);
    let v = net::tangent_head(cache.output(), &sample.point)?;
    let loss = flowmatch::rfmp_loss_sample(&v, &sample)?;
    if let Some((g, scale)) = grads {
        let residual: Vec<f64> = flatten_tangents(&v)
            .iter()
            .zip(flatten_tangents(&sample.target_field))
            .map(|(p, u)| 2.0 * (p - u))
            .collect();
        net.accumulate_gradients(&cache, &residual, scale, g)?;
    }
    Ok(loss)
}

fn mean_loss(net: &VectorFieldNet, cfg: &PolicyConfig, draws: &[Draw]) -> Result<f64> {
    let mut total = 0.0;
    for d in draws {
        total += draw_loss(net, cfg, d, None)?;
    }
    Ok(total / draws.len().max(1) as f64)
}

/// Trains a fresh policy on the dataset's training split.
pub fn train(dataset: &Dataset, config: &PolicyConfig) -> Result<TrainedPolicy> {
    config.validate(dataset.manifold)?;
    let kind = dataset.manifold;
    let mut init_rng = stream(config.seed, STREAM_INIT, 0);
    let net = VectorFieldNet::standard(config.input_dim(kind), config.output_dim(kind), &mut init_rng)?;
    let optimizer = OptimizerState::new(&net, config.lr, config.ema_decay)?;
    let mut policy = TrainedPolicy {
        config: config.clone(),
        manifold: kind,
        demo_len: dataset.demo_len(),
        best_params: net.params().to_vec(),
        net,
        optimizer,
        best_epoch: 0,
        best_val_loss: f64::INFINITY,
        log: Vec::new(),
        step_losses: Vec::new(),
    };
    continue_training(&mut policy, dataset, config.epochs)?;
    Ok(policy)
}

/// Runs further epochs until `policy.log` holds `until_epoch` entries.
pub fn continue_training(policy: &mut TrainedPolicy, dataset: &Dataset, until_epoch: usize) -> Result<()> {
    let cfg = policy.config.clone();
    if dataset.manifold != policy.manifold {
        return Err(Error::invalid("dataset manifold differs from the policy's"));
    }
    if dataset.split.train.is_empty() {
        return Err(Error::invalid("dataset has no training pairs (split it first)"));
    }
    // The validation draws are frozen for the whole run. Without a validation
    // split, model selection falls back to the training pairs.
    let val_pairs = if dataset.split.val.is_empty() {
        &dataset.split.train
    } else {
        &dataset.split.val
    };
    let mut val_rng = stream(cfg.seed, STREAM_VAL, 0);
    let val_draws = val_pairs
        .iter()
        .map(|&p| draw(dataset, p, &cfg, &mut val_rng))
        .collect::<Result<Vec<_>>>()?;

    let start = Instant::now();
    let mut order = dataset.split.train.clone();
    for epoch in policy.log.len() + 1..=until_epoch {
        let mut rng = stream(cfg.seed, STREAM_EPOCH, epoch as u64);
        policy.optimizer.learning_rate = cfg.lr_at(epoch);
        order.clone_from(&dataset.split.train);
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let mut grads = Gradients::zeros_like(&policy.net);
            let scale = 1.0 / batch.len() as f64;
            let mut batch_loss = 0.0;
            for &index in batch {
                let d = draw(dataset, index, &cfg, &mut rng)?;
                batch_loss += draw_loss(&policy.net, &cfg, &d, Some((&mut grads, scale)))?;
            }
            if !batch_loss.is_finite() || !grads.is_finite() {
                let recent: Vec<String> = policy
                    .step_losses
                    .iter()
                    .rev()
                    .take(5)
                    .map(|l| format!("{l:.4e}"))
                    .collect();
                return Err(Error::Numerical(format!(
                    "non-finite training loss at epoch {epoch}, batch {b} (loss {batch_loss}; recent batch losses [{}])",
                    recent.join(", ")
                )));
            }
            net::adam_step(&mut policy.net, &mut policy.optimizer, &grads)?;
            policy.step_losses.push(batch_loss * scale);
            epoch_loss += batch_loss;
        }
        let train_loss = epoch_loss / order.len() as f64;
        let ema = policy.optimizer.ema_net(&policy.net);
        let val_loss = mean_loss(&ema, &cfg, &val_draws)?;
        if !val_loss.is_finite() {
            return Err(Error::Numerical(format!("non-finite validation loss at epoch {epoch}")));
        }
        if val_loss < policy.best_val_loss {
            policy.best_val_loss = val_loss;
            policy.best_epoch = epoch;
            policy.best_params.clone_from(&policy.optimizer.ema_weights);
        }
        log::debug!("epoch {epoch}: train {train_loss:.5} val {val_loss:.5}");
        policy.log.push(EpochLog {
            epoch,
            train_loss,
            val_loss,
            elapsed_seconds: start.elapsed().as_secs_f64(),
        });
    }
    Ok(())
}

impl TrainedPolicy {
    /// Network carrying the selected EMA weights.
    pub fn inference_net(&self) -> VectorFieldNet {
        let mut net = self.net.clone();
        net.params_mut().copy_from_slice(&self.best_params);
        net
    }

    /// Builds the observation for predicting the step after `history`.
    ///
    /// The reference is the last executed state and the context index is drawn
    /// uniformly over the admissible part of the history.
    pub fn observe<R: Rng + ?Sized>(&self, history: &[ManifoldPoint], rng: &mut R) -> Result<ObservationVector> {
        if history.len() < 2 {
            return Err(Error::invalid("observation needs at least two executed states"));
        }
        let tau = history.len() + 1;
        let c = rng.random_range(data::context_range(tau, self.config.context_window)?);
        let gap = ((tau - c) as f64 / self.demo_len as f64).min(1.0);
        ObservationVector::new(history[tau - 2].clone(), history[c - 1].clone(), gap)
    }
}

/// Samples a base horizon and integrates the EMA field conditioned on `observation`.
pub fn infer_action<R: Rng + ?Sized>(
    policy: &TrainedPolicy,
    observation: &ObservationVector,
    rng: &mut R,
) -> Result<ActionHorizon> {
    infer_with_net(&policy.inference_net(), policy, observation, rng)
}

fn infer_with_net<R: Rng + ?Sized>(
    net: &VectorFieldNet,
    policy: &TrainedPolicy,
    observation: &ObservationVector,
    rng: &mut R,
) -> Result<ActionHorizon> {
    let a0 = base_horizon(policy, observation, rng)?;
    odeint::integrate_flow(field_fn(net, observation), &a0, &policy.config.solver)
}

fn base_horizon<R: Rng + ?Sized>(
    policy: &TrainedPolicy,
    observation: &ObservationVector,
    rng: &mut R,
) -> Result<ActionHorizon> {
    if observation.kind() != policy.manifold {
        return Err(Error::invalid("observation is not on the policy's manifold"));
    }
    let kind = policy.manifold;
    let b = manifold::sample_base(kind, policy.config.base_sigma, &kind.origin(), rng)?;
    ActionHorizon::repeated(&b, policy.config.horizon)
}

/// The learned field `v_t(a | o)` as an ODE right-hand side.
pub fn field_fn<'a>(
    net: &'a VectorFieldNet,
    observation: &ObservationVector,
) -> impl Fn(f64, &ActionHorizon) -> Result<Vec<TangentVector>> + 'a {
    let obs = observation.flatten();
    move |t, a| {
        let raw = net.forward(t, &a.flatten(), &obs)?;
        net::tangent_head(&raw, a)
    }
}

/// Flow snapshots from base samples to predicted horizons, for visualization.
pub fn trace_action<R: Rng + ?Sized>(
    policy: &TrainedPolicy,
    observation: &ObservationVector,
    num_snapshots: usize,
    rng: &mut R,
) -> Result<Vec<(f64, ActionHorizon)>> {
    let net = policy.inference_net();
    let a0 = base_horizon(policy, observation, rng)?;
    odeint::trace_flow(field_fn(&net, observation), &a0, &policy.config.solver, num_snapshots)
}

/// Executes the policy for `num_steps` actions starting from `initial_history`.
///
/// Each query conditions on the executed history so far and the first `T_e`
/// predicted actions are appended; the last horizon is truncated so exactly
/// `num_steps` actions come back.
pub fn rollout<R: Rng + ?Sized>(
    policy: &TrainedPolicy,
    initial_history: &[ManifoldPoint],
    num_steps: usize,
    rng: &mut R,
) -> Result<Vec<ManifoldPoint>> {
    if initial_history.len() < 2 {
        return Err(Error::invalid("rollout needs an initial history of at least two states"));
    }
    if initial_history.iter().any(|p| p.kind() != policy.manifold) {
        return Err(Error::invalid("initial history is not on the policy's manifold"));
    }
    let net = policy.inference_net();
    let mut history = initial_history.to_vec();
    let mut actions = Vec::with_capacity(num_steps);
    while actions.len() < num_steps {
        let obs = policy.observe(&history, rng)?;
        let horizon = infer_with_net(&net, policy, &obs, rng)?;
        let take = policy.config.execute.min(num_steps - actions.len());
        for p in horizon.into_points().into_iter().take(take) {
            history.push(p.clone());
            actions.push(p);
        }
    }
    Ok(actions)
}

/// Shifts a history by one shared tangent Gaussian offset of standard
/// deviation `scale`, transported along the history so its shape is kept.
pub fn perturb_history<R: Rng + ?Sized>(
    history: &[ManifoldPoint],
    scale: f64,
    rng: &mut R,
) -> Result<Vec<ManifoldPoint>> {
    let first = history.first().ok_or_else(|| Error::invalid("empty history"))?;
    if scale == 0.0 {
        return Ok(history.to_vec());
    }
    let shifted = manifold::sample_base(first.kind(), scale, first, rng)?;
    let offset = manifold::log_map(first, &shifted)?;
    history
        .iter()
        .map(|p| {
            let u = manifold::parallel_transport(&offset, first, p)?;
            manifold::exp_map(p, &u)
        })
        .collect()
}

pub const CHECKPOINT_SCHEMA: &str = "rfmp.checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSnapshot {
    pub step_count: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub ema_decay: f64,
    pub first_moment: NetSnapshot,
    pub second_moment: NetSnapshot,
    pub ema_weights: NetSnapshot,
}

/// Versioned on-disk form of a [`TrainedPolicy`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub schema: String,
    pub version: u32,
    pub manifold: String,
    pub demo_len: usize,
    pub num_params: usize,
    pub config: PolicyConfig,
    pub seed: u64,
    pub best_epoch: usize,
    pub best_val_loss: Option<f64>,
    pub weights: NetSnapshot,
    pub best_ema_weights: NetSnapshot,
    pub optimizer: OptimizerSnapshot,
    pub log: Vec<CheckpointLogRow>,
    #[serde(default)]
    pub meta: std::collections::BTreeMap<String, String>,
}

/// Per-epoch losses; wall-clock time is kept out of checkpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointLogRow {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

impl Checkpoint {
    pub fn from_policy(p: &TrainedPolicy, meta: std::collections::BTreeMap<String, String>) -> Self {
        let snap = |v: &[f64]| NetSnapshot::from_params(&p.net, v);
        Checkpoint {
            schema: CHECKPOINT_SCHEMA.into(),
            version: CHECKPOINT_VERSION,
            manifold: p.manifold.tag(),
            demo_len: p.demo_len,
            num_params: p.net.num_params(),
            config: p.config.clone(),
            seed: p.config.seed,
            best_epoch: p.best_epoch,
            best_val_loss: p.best_val_loss.is_finite().then_some(p.best_val_loss),
            weights: p.net.to_snapshot(),
            best_ema_weights: snap(&p.best_params),
            optimizer: OptimizerSnapshot {
                step_count: p.optimizer.step_count,
                learning_rate: p.optimizer.learning_rate,
                beta1: p.optimizer.beta1,
                beta2: p.optimizer.beta2,
                epsilon: p.optimizer.epsilon,
                ema_decay: p.optimizer.ema_decay,
                first_moment: snap(&p.optimizer.first_moment),
                second_moment: snap(&p.optimizer.second_moment),
                ema_weights: snap(&p.optimizer.ema_weights),
            },
            log: p
                .log
                .iter()
                .map(|l| CheckpointLogRow {
                    epoch: l.epoch,
                    train_loss: l.train_loss,
                    val_loss: l.val_loss,
                })
                .collect(),
            meta,
        }
    }

    pub fn into_policy(self) -> Result<TrainedPolicy> {
        if self.schema != CHECKPOINT_SCHEMA || self.version != CHECKPOINT_VERSION {
            return Err(Error::Schema(format!(
                "unsupported checkpoint {} v{}",
                self.schema, self.version
            )));
        }
        let manifold = ManifoldKind::parse_tag(&self.manifold)?;
        self.config.validate(manifold).map_err(|e| Error::Schema(e.to_string()))?;
        let net = VectorFieldNet::from_snapshot(&self.weights)?;
        if net.input_dim() != self.config.input_dim(manifold) || net.output_dim() != self.config.output_dim(manifold) {
            return Err(Error::Schema("network shape does not match the configuration".into()));
        }
        let o = &self.optimizer;
        let optimizer = OptimizerState {
            first_moment: o.first_moment.flat_params(&net)?,
            second_moment: o.second_moment.flat_params(&net)?,
            step_count: o.step_count,
            learning_rate: o.learning_rate,
            beta1: o.beta1,
            beta2: o.beta2,
            epsilon: o.epsilon,
            ema_weights: o.ema_weights.flat_params(&net)?,
            ema_decay: o.ema_decay,
        };
        Ok(TrainedPolicy {
            best_params: self.best_ema_weights.flat_params(&net)?,
            config: self.config,
            manifold,
            demo_len: self.demo_len,
            net,
            optimizer,
            best_epoch: self.best_epoch,
            best_val_loss: self.best_val_loss.unwrap_or(f64::INFINITY),
            log: self
                .log
                .into_iter()
                .map(|l| EpochLog {
                    epoch: l.epoch,
                    train_loss: l.train_loss,
                    val_loss: l.val_loss,
                    elapsed_seconds: 0.0,
                })
                .collect(),
            step_losses: Vec::new(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Demonstration, LetterShape};

    fn tiny_config(kind: ManifoldKind) -> PolicyConfig {
        PolicyConfig {
            horizon: 2,
            execute: 1,
            epochs: 2,
            batch_size: 8,
            lr: 1e-3,
            ..PolicyConfig::for_manifold(kind)
        }
    }

    fn letter(sphere: bool) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ds = data::synthesize_letter(LetterShape::S, 2, 24, 0.02, &mut rng).unwrap();
        let mut ds = data::normalize(&ds).unwrap();
        if sphere {
            ds = data::project_to_sphere(&ds, 0.8).unwrap();
        }
        data::split_dataset(&ds, [0.8, 0.1, 0.1], &mut rng).unwrap()
    }

    #[test]
    fn config_validation() {
        let k = ManifoldKind::Euclidean { dim: 2 };
        let mut c = PolicyConfig::for_manifold(k);
        assert!(c.validate(k).is_ok());
        c.execute = 9;
        assert!(c.validate(k).is_err());
        let mut c = PolicyConfig::for_manifold(k);
        c.epochs = 0;
        assert!(c.validate(k).is_err());
        let s = ManifoldKind::Sphere { intrinsic_dim: 2 };
        let mut c = PolicyConfig::for_manifold(s);
        c.solver = SolverConfig::default_dopri5();
        assert!(c.validate(s).is_err());
        let mut c = PolicyConfig::for_manifold(s);
        c.path = PathKind::GaussianCfm { sigma_min: 0.0 };
        assert!(c.validate(s).is_err());
    }

    #[test]
    fn cosine_schedule_endpoints() {
        let k = ManifoldKind::Euclidean { dim: 2 };
        let c = PolicyConfig { lr: 2e-3, epochs: 4, lr_schedule: LrSchedule::Cosine, ..PolicyConfig::for_manifold(k) };
        assert_eq!(c.lr_at(1), 2e-3);
        assert!((c.lr_at(3) - 1e-3).abs() < 1e-18);
        assert!(c.lr_at(4) > 0.0 && c.lr_at(4) < c.lr_at(3));
        let c = PolicyConfig { lr_schedule: LrSchedule::Constant, ..c };
        assert_eq!(c.lr_at(4), 2e-3);
    }

    #[test]
    fn one_epoch_gives_one_log_row() {
        let ds = letter(false);
        let cfg = PolicyConfig { epochs: 1, ..tiny_config(ds.manifold) };
        let p = train(&ds, &cfg).unwrap();
        assert_eq!(p.log.len(), 1);
        assert_eq!(p.log[0].epoch, 1);
        assert_eq!(p.best_epoch, 1);
    }

    #[test]
    fn zero_network_infers_the_base_sample() {
        let ds = letter(true);
        let mut p = train(&ds, &PolicyConfig { epochs: 1, ..tiny_config(ds.manifold) }).unwrap();
        p.best_params.iter_mut().for_each(|w| *w = 0.0);
        let obs = ObservationVector::new(ds.demos[0].points[1].clone(), ds.demos[0].points[0].clone(), 0.1).unwrap();
        let mut r1 = ChaCha8Rng::seed_from_u64(5);
        let mut r2 = ChaCha8Rng::seed_from_u64(5);
        let a = infer_action(&p, &obs, &mut r1).unwrap();
        let b = manifold::sample_base(ds.manifold, p.config.base_sigma, &ds.manifold.origin(), &mut r2).unwrap();
        assert!(a.points().iter().all(|x| x == &b));
    }

    #[test]
    fn inference_is_deterministic_and_on_manifold() {
        let ds = letter(true);
        let p = train(&ds, &tiny_config(ds.manifold)).unwrap();
        let obs = ObservationVector::new(ds.demos[0].points[4].clone(), ds.demos[0].points[1].clone(), 0.2).unwrap();
        let a = infer_action(&p, &obs, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = infer_action(&p, &obs, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert!(a.points().iter().all(|x| (manifold::norm(x.coords()) - 1.0).abs() < 1e-6));
    }

    #[test]
    fn rollout_lengths() {
        let ds = letter(false);
        let p = train(&ds, &PolicyConfig { horizon: 4, execute: 2, ..tiny_config(ds.manifold) }).unwrap();
        let hist = &ds.demos[0].points[..2];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(rollout(&p, hist, 2, &mut rng).unwrap().len(), 2);
        assert_eq!(rollout(&p, hist, 7, &mut rng).unwrap().len(), 7);
        assert!(rollout(&p, &hist[..1], 4, &mut rng).is_err());
    }

    #[test]
    fn observation_context_within_history() {
        let ds = letter(false);
        let p = train(&ds, &PolicyConfig { epochs: 1, context_window: Some(3), ..tiny_config(ds.manifold) }).unwrap();
        let hist: Vec<_> = ds.demos[0].points[..10].to_vec();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            let o = p.observe(&hist, &mut rng).unwrap();
            assert_eq!(o.reference, hist[9]);
            let c = hist.iter().position(|x| *x == o.context).unwrap() + 1;
            assert!((8..=9).contains(&c), "{c}");
        }
    }

    #[test]
    fn perturbation_preserves_manifold_and_shape() {
        let ds = letter(true);
        let hist = &ds.demos[0].points[..3];
        let out = perturb_history(hist, 0.05, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        for (a, b) in out.windows(2).zip(hist.windows(2)) {
            let da = manifold::geodesic_distance(&a[0], &a[1]).unwrap();
            let db = manifold::geodesic_distance(&b[0], &b[1]).unwrap();
            assert!((da - db).abs() < 1e-3);
        }
        assert!(out.iter().all(|x| (manifold::norm(x.coords()) - 1.0).abs() < 1e-9));
        assert_eq!(perturb_history(hist, 0.0, &mut ChaCha8Rng::seed_from_u64(2)).unwrap(), hist);
    }

    #[test]
    fn checkpoint_round_trip_and_resume() {
        let ds = letter(false);
        let cfg = PolicyConfig { epochs: 3, ..tiny_config(ds.manifold) };
        let full = train(&ds, &cfg).unwrap();

        let mut partial = train(&ds, &PolicyConfig { epochs: 1, ..cfg.clone() }).unwrap();
        partial.config.epochs = 3;
        let json = serde_json::to_string(&Checkpoint::from_policy(&partial, Default::default())).unwrap();
        let mut resumed = serde_json::from_str::<Checkpoint>(&json).unwrap().into_policy().unwrap();
        assert_eq!(resumed.best_params, partial.best_params);
        continue_training(&mut resumed, &ds, 3).unwrap();
        assert_eq!(resumed.log.len(), 3);
        assert_eq!(resumed.net.params(), full.net.params());
        assert_eq!(resumed.best_params, full.best_params);
        let losses = |p: &TrainedPolicy| p.log.iter().map(|l| (l.train_loss, l.val_loss)).collect::<Vec<_>>();
        assert_eq!(losses(&resumed), losses(&full));
    }

    #[test]
    fn checkpoint_rejects_foreign_schema() {
        let ds = letter(false);
        let p = train(&ds, &PolicyConfig { epochs: 1, ..tiny_config(ds.manifold) }).unwrap();
        let mut c = Checkpoint::from_policy(&p, Default::default());
        c.version = 99;
        assert!(matches!(c.into_policy(), Err(Error::Schema(_))));
    }

    #[test]
    fn training_without_split_is_rejected() {
        let kind = ManifoldKind::Euclidean { dim: 1 };
        let demo = Demonstration {
            id: 0,
            points: (0..10).map(|k| ManifoldPoint::euclidean(vec![k as f64]).unwrap()).collect(),
            source_dim: 1,
        };
        let ds = Dataset::new(vec![demo], kind).unwrap();
        assert!(train(&ds, &tiny_config(kind)).is_err());
    }
}
