//! Supervised training with the modified STDP rule.
//!
//! Each class neuron is initialized from the first sample of its class so
//! that the sample fires exactly at the desired time. Later samples only
//! touch the network when the correct neuron does not lead every other
//! neuron by the margin time; the offending neurons then receive
//! Gaussian-shaped efficacy updates centred on the presynaptic spike times.

use std::collections::HashMap;

use log::debug;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FeatureScaling};
use crate::encoding::{encode, EncodingConfig, SpikePattern};
use crate::error::{Result, SefronError};
use crate::neuron::{fire_times, predict_time_domain, spike_response, EfficacyFunction, TimeGrid};

/// Denominators of the update rule below this magnitude skip the update.
pub const DENOMINATOR_GUARD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearningConfig {
    /// Learning rate.
    pub lambda: f64,
    /// Desired firing time of the correct class (ms).
    pub t_d: f64,
    /// Margin time (ms).
    pub t_m: f64,
    /// Efficacy update range (ms).
    pub sigma: f64,
    /// Width of the initialization kernel (ms); falls back to `sigma`.
    pub sigma_init: Option<f64>,
    /// STDP time constant (ms).
    pub tau_stdp: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Time allowed after the presynaptic interval for late output spikes (ms).
    pub delta_t: f64,
    /// Simulation time step (ms).
    pub dt: f64,
    /// Spike response time constant (ms).
    pub tau_eps: f64,
    /// Use the update rule exactly as printed: the first denominator evaluates
    /// the kernel at `t_d - s` for every class. When false it uses `t_ref - s`.
    pub strict_eq10: bool,
}

impl Default for LearningConfig {
    fn default() -> Self {
        LearningConfig {
            lambda: 0.1,
            t_d: 2.0,
            t_m: 0.05,
            sigma: 0.55,
            sigma_init: None,
            tau_stdp: 1.6,
            epochs: 100,
            seed: 42,
            delta_t: 1.0,
            dt: 0.01,
            tau_eps: 3.0,
            strict_eq10: true,
        }
    }
}

impl LearningConfig {
    pub fn sigma_init(&self) -> f64 {
        self.sigma_init.unwrap_or(self.sigma)
    }

    /// Every violated constraint, so callers can report them together.
    pub fn problems(&self, t_interval: f64) -> Vec<String> {
        let mut out = Vec::new();
        let t_end = t_interval + self.delta_t;
        if !(self.lambda > 0.0) {
            out.push(format!("lambda must be positive (got {})", self.lambda));
        }
        if !(self.delta_t >= 0.0) {
            out.push(format!("delta_t must be non-negative (got {})", self.delta_t));
        }
        if !(self.t_d > 0.0 && self.t_d < t_end) {
            out.push(format!("t_d must lie in (0, {t_end}) (got {})", self.t_d));
        }
        if !(self.t_m > 0.0) {
            out.push(format!("t_m must be positive (got {})", self.t_m));
        }
        if !(self.sigma > 0.0) {
            out.push(format!("sigma must be positive (got {})", self.sigma));
        }
        if let Some(s) = self.sigma_init {
            if !(s > 0.0) {
                out.push(format!("sigma_init must be positive (got {s})"));
            }
        }
        if !(self.tau_stdp > 0.0) {
            out.push(format!("tau_stdp must be positive (got {})", self.tau_stdp));
        }
        if !(self.tau_eps > 0.0) {
            out.push(format!("tau_eps must be positive (got {})", self.tau_eps));
        }
        if self.epochs == 0 {
            out.push("epochs must be at least 1".to_string());
        }
        if let Err(e) = TimeGrid::new(t_end, self.dt) {
            out.push(e.to_string());
        }
        out
    }

    pub fn validate(&self, t_interval: f64) -> Result<()> {
        let problems = self.problems(t_interval);
        if problems.is_empty() {
            Ok(())
        } else {
            Err(SefronError::Config(problems.join("; ")))
        }
    }
}

/// A trained (or partially trained) classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub(crate) enc: EncodingConfig,
    pub(crate) grid: TimeGrid,
    pub(crate) tau_eps: f64,
    pub(crate) n_features: usize,
    /// `weights[j][i * q + r]`
    pub(crate) weights: Vec<Vec<EfficacyFunction>>,
    pub(crate) thetas: Vec<f64>,
    pub(crate) class_initialized: Vec<bool>,
    pub(crate) scaling: Option<FeatureScaling>,
    pub(crate) class_names: Vec<String>,
}

impl Model {
    pub fn new(
        n_classes: usize,
        n_features: usize,
        enc: EncodingConfig,
        cfg: &LearningConfig,
    ) -> Result<Self> {
        if n_classes == 0 || n_features == 0 {
            return Err(SefronError::InvalidArgument(
                "a model needs at least one class and one feature".into(),
            ));
        }
        cfg.validate(enc.t_interval)?;
        let grid = TimeGrid::new(enc.t_interval + cfg.delta_t, cfg.dt)?;
        let synapses = n_features * enc.q;
        Ok(Model {
            weights: vec![vec![EfficacyFunction::constant(0.0, &grid); synapses]; n_classes],
            thetas: vec![0.0; n_classes],
            class_initialized: vec![false; n_classes],
            enc,
            grid,
            tau_eps: cfg.tau_eps,
            n_features,
            scaling: None,
            class_names: (0..n_classes).map(|j| j.to_string()).collect(),
        })
    }

    pub fn n_classes(&self) -> usize {
        self.thetas.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn encoding(&self) -> &EncodingConfig {
        &self.enc
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn tau_eps(&self) -> f64 {
        self.tau_eps
    }

    pub fn theta(&self, j: usize) -> f64 {
        self.thetas[j]
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn class_weights(&self, j: usize) -> &[EfficacyFunction] {
        &self.weights[j]
    }

    pub fn weight(&self, j: usize, feature: usize, rf: usize) -> &EfficacyFunction {
        &self.weights[j][feature * self.enc.q + rf]
    }

    pub fn is_initialized(&self, j: usize) -> bool {
        self.class_initialized[j]
    }

    pub fn fully_initialized(&self) -> bool {
        self.class_initialized.iter().all(|&b| b)
    }

    pub fn scaling(&self) -> Option<&FeatureScaling> {
        self.scaling.as_ref()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn set_class_names(&mut self, names: Vec<String>) -> Result<()> {
        if names.len() != self.n_classes() {
            return Err(SefronError::InvalidArgument(format!(
                "{} class names for {} classes",
                names.len(),
                self.n_classes()
            )));
        }
        self.class_names = names;
        Ok(())
    }

    pub fn set_scaling(&mut self, scaling: Option<FeatureScaling>) {
        self.scaling = scaling;
    }

    pub fn is_finite(&self) -> bool {
        self.thetas.iter().all(|t| t.is_finite())
            && self
                .weights
                .iter()
                .flatten()
                .all(|w| w.samples.iter().all(|v| v.is_finite()))
    }

    /// Classifies a normalized feature vector in the time domain.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(predict_time_domain(&self.encode(x)?, self).0)
    }

    pub fn encode(&self, x: &[f64]) -> Result<SpikePattern> {
        if x.len() != self.n_features {
            return Err(SefronError::InvalidArgument(format!(
                "model expects {} features, got {}",
                self.n_features,
                x.len()
            )));
        }
        encode(x, &self.enc)
    }
}

/// Normalized STDP fractions of every synapse relative to a postsynaptic time.
#[derive(Debug, Clone, PartialEq)]
pub struct StdpFractions {
    pub values: Vec<f64>,
    /// No presynaptic spike precedes the reference time.
    pub positive_group_empty: bool,
}

/// Signed, normalized STDP contribution of every presynaptic spike.
///
/// Spikes at or before `t_hat` share a total of +1 and later spikes share -1,
/// each weighted by `exp(-|t_hat - s| / tau)`.
pub fn normalized_stdp(pattern: &SpikePattern, t_hat: f64, tau_stdp: f64) -> StdpFractions {
    let raw: Vec<f64> = pattern
        .times()
        .iter()
        .map(|&s| (-(t_hat - s).abs() / tau_stdp).exp())
        .collect();
    let (mut pos, mut neg) = (0.0, 0.0);
    for (&s, &r) in pattern.times().iter().zip(&raw) {
        if s <= t_hat {
            pos += r;
        } else {
            neg += r;
        }
    }
    let values = pattern
        .times()
        .iter()
        .zip(&raw)
        .map(|(&s, &r)| if s <= t_hat { r / pos } else { -r / neg })
        .collect();
    StdpFractions {
        values,
        positive_group_empty: pos == 0.0,
    }
}

/// Gaussian bumps `exp(-(t - s)^2 / (2 width^2))` over the grid, shared between
/// synapses whose spikes coincide.
struct BumpCache<'g> {
    grid: &'g TimeGrid,
    width: f64,
    bumps: HashMap<u64, Vec<f64>>,
}

impl<'g> BumpCache<'g> {
    fn new(grid: &'g TimeGrid, width: f64) -> Self {
        BumpCache {
            grid,
            width,
            bumps: HashMap::new(),
        }
    }

    fn get(&mut self, s: f64) -> &[f64] {
        let (grid, width) = (self.grid, self.width);
        self.bumps.entry(s.to_bits()).or_insert_with(|| {
            let denom = 2.0 * width * width;
            (0..grid.points())
                .map(|k| {
                    let d = grid.time(k) - s;
                    (-(d * d) / denom).exp()
                })
                .collect()
        })
    }
}

/// Initializes class `j` from one of its samples.
///
/// Efficacies become `u(t_d) * exp(-(t - s)^2 / (2 sigma_init^2))` and the
/// threshold is the potential those weights produce at `t_d`. Fails without
/// touching the model when the sample yields a non-positive threshold.
pub fn init_class(
    model: &mut Model,
    pattern: &SpikePattern,
    j: usize,
    cfg: &LearningConfig,
) -> Result<()> {
    if j >= model.n_classes() {
        return Err(SefronError::InvalidArgument(format!("class {j} out of range")));
    }
    if model.class_initialized[j] {
        return Err(SefronError::AlreadyInitialized(j));
    }
    check_pattern(model, pattern)?;
    let u = normalized_stdp(pattern, cfg.t_d, cfg.tau_stdp);
    let theta: f64 = pattern
        .times()
        .iter()
        .zip(&u.values)
        .map(|(&s, &uv)| uv * spike_response(cfg.t_d - s, model.tau_eps))
        .sum();
    if u.positive_group_empty || !(theta > 0.0) || !theta.is_finite() {
        return Err(SefronError::Numeric(format!(
            "sample cannot initialize class {j}: threshold would be {theta}"
        )));
    }
    let mut bumps = BumpCache::new(&model.grid, cfg.sigma_init());
    for (syn, (&s, &uv)) in pattern.times().iter().zip(&u.values).enumerate() {
        let bump = bumps.get(s);
        let w = &mut model.weights[j][syn].samples;
        for (wk, b) in w.iter_mut().zip(bump) {
            *wk = uv * b;
        }
    }
    model.thetas[j] = theta;
    model.class_initialized[j] = true;
    Ok(())
}

fn check_pattern(model: &Model, pattern: &SpikePattern) -> Result<()> {
    if pattern.q() != model.enc.q || pattern.n_features() != model.n_features {
        return Err(SefronError::InvalidArgument(format!(
            "pattern is {}x{}, model expects {}x{}",
            pattern.n_features(),
            pattern.q(),
            model.n_features,
            model.enc.q
        )));
    }
    Ok(())
}

/// Efficacy change for every synapse of one class neuron.
///
/// `Δw = λ u(t_ref) θ (1 / Σ u(t_ref) ε(t_first - s) - 1 / Σ u(t_actual) ε(t_actual - s))`
/// with `t_first = t_d` when `cfg.strict_eq10` is set and `t_ref` otherwise.
/// Returns `None` when either denominator is within [`DENOMINATOR_GUARD`] of zero.
pub fn weight_update_delta(
    pattern: &SpikePattern,
    t_ref: f64,
    t_actual: f64,
    theta: f64,
    cfg: &LearningConfig,
) -> Option<Vec<f64>> {
    let u_ref = normalized_stdp(pattern, t_ref, cfg.tau_stdp);
    let u_act = normalized_stdp(pattern, t_actual, cfg.tau_stdp);
    let t_first = if cfg.strict_eq10 { cfg.t_d } else { t_ref };
    let times = pattern.times();
    let den_ref: f64 = times
        .iter()
        .zip(&u_ref.values)
        .map(|(&s, &u)| u * spike_response(t_first - s, cfg.tau_eps))
        .sum();
    let den_act: f64 = times
        .iter()
        .zip(&u_act.values)
        .map(|(&s, &u)| u * spike_response(t_actual - s, cfg.tau_eps))
        .sum();
    if den_ref.abs() < DENOMINATOR_GUARD || den_act.abs() < DENOMINATOR_GUARD {
        debug!(
            "skipping update (t_ref={t_ref}, t_actual={t_actual}): denominators {den_ref:e}, {den_act:e}"
        );
        return None;
    }
    let gain = cfg.lambda * theta * (1.0 / den_ref - 1.0 / den_act);
    Some(u_ref.values.iter().map(|u| gain * u).collect())
}

/// Adds `delta[syn] * exp(-(t - s)^2 / (2 sigma^2))` to each efficacy function of class `j`.
pub fn apply_update(
    model: &mut Model,
    j: usize,
    delta: &[f64],
    pattern: &SpikePattern,
    sigma: f64,
) -> Result<()> {
    if !model.class_initialized.get(j).copied().unwrap_or(false) {
        return Err(SefronError::Uninitialized(j));
    }
    check_pattern(model, pattern)?;
    if delta.len() != pattern.len() {
        return Err(SefronError::InvalidArgument(format!(
            "{} deltas for {} synapses",
            delta.len(),
            pattern.len()
        )));
    }
    let mut bumps = BumpCache::new(&model.grid, sigma);
    for (syn, (&s, &d)) in pattern.times().iter().zip(delta).enumerate() {
        if d == 0.0 {
            continue;
        }
        let bump = bumps.get(s);
        for (wk, b) in model.weights[j][syn].samples.iter_mut().zip(bump) {
            *wk += d * b;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassUpdate {
    pub class: usize,
    pub t_ref: f64,
    pub t_actual: f64,
    /// False when the denominator guard suppressed the update.
    pub applied: bool,
}

/// What one training step did to the model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpdateReport {
    pub initialized: bool,
    pub fire_times: Vec<f64>,
    pub updates: Vec<ClassUpdate>,
}

impl UpdateReport {
    /// True when no weight or threshold was modified.
    pub fn untouched(&self) -> bool {
        !self.initialized && self.updates.iter().all(|u| !u.applied)
    }
}

/// One step of the training loop for a sample of class `j`.
pub fn train_sample(
    model: &mut Model,
    pattern: &SpikePattern,
    j: usize,
    cfg: &LearningConfig,
) -> Result<UpdateReport> {
    if j >= model.n_classes() {
        return Err(SefronError::InvalidArgument(format!("class {j} out of range")));
    }
    if !model.class_initialized[j] {
        init_class(model, pattern, j, cfg)?;
        return Ok(UpdateReport {
            initialized: true,
            fire_times: Vec::new(),
            updates: Vec::new(),
        });
    }
    check_pattern(model, pattern)?;
    let times = fire_times(pattern, model);
    let t_end = model.grid.t_end();
    let t_j = times[j];
    let rivals = (0..model.n_classes()).filter(|&h| h != j && model.class_initialized[h]);
    let earliest_rival = rivals.clone().map(|h| times[h]).fold(f64::INFINITY, f64::min);

    let mut report = UpdateReport {
        initialized: false,
        fire_times: times.clone(),
        updates: Vec::new(),
    };
    if t_j + cfg.t_m <= earliest_rival {
        return Ok(report);
    }

    let mut planned = Vec::new();
    if t_j > cfg.t_d {
        planned.push((j, cfg.t_d));
    }
    let t_push = (t_j + cfg.t_m).min(t_end);
    for h in rivals {
        if times[h] < t_j + cfg.t_m {
            planned.push((h, t_push));
        }
    }
    // deltas depend only on pre-update fire times and thresholds
    let deltas: Vec<_> = planned
        .iter()
        .map(|&(c, t_ref)| weight_update_delta(pattern, t_ref, times[c], model.thetas[c], cfg))
        .collect();
    for (&(c, t_ref), delta) in planned.iter().zip(deltas) {
        let applied = match delta {
            Some(d) => {
                apply_update(model, c, &d, pattern, cfg.sigma)?;
                true
            }
            None => false,
        };
        report.updates.push(ClassUpdate {
            class: c,
            t_ref,
            t_actual: times[c],
            applied,
        });
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_accuracy: f64,
    /// Samples that modified the model during the epoch.
    pub updated_samples: usize,
    /// Class updates suppressed by the denominator guard.
    pub guarded_updates: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Snapshot from the epoch with the best training accuracy.
    pub model: Model,
    pub best_epoch: usize,
    pub trace: Vec<EpochRecord>,
}

impl TrainOutcome {
    pub fn best_accuracy(&self) -> f64 {
        self.trace[self.best_epoch - 1].train_accuracy
    }
}

/// Trains a model on `dataset`.
///
/// Samples are visited in a fresh seeded shuffle each epoch. The first sample
/// of each class encountered initializes that class; if it is degenerate the
/// next one is tried.
pub fn train(dataset: &Dataset, cfg: &LearningConfig, enc: &EncodingConfig) -> Result<TrainOutcome> {
    if dataset.is_empty() {
        return Err(SefronError::Data("training set is empty".into()));
    }
    if dataset.n_classes() < 2 {
        return Err(SefronError::Data("at least two classes are required".into()));
    }
    let counts = dataset.class_counts();
    if let Some(missing) = counts.iter().position(|&c| c == 0) {
        return Err(SefronError::Data(format!("class {missing} has no samples")));
    }
    let mut model = Model::new(dataset.n_classes(), dataset.n_features(), enc.clone(), cfg)?;
    model.set_scaling(dataset.scaling().cloned());
    model.set_class_names(dataset.class_names().to_vec())?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(usize, f64, Model)> = None;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let (mut updated, mut guarded) = (0, 0);
        for &k in &order {
            let pattern = encode(dataset.features(k), enc)?;
            let label = dataset.label(k);
            let report = match train_sample(&mut model, &pattern, label, cfg) {
                Ok(r) => r,
                Err(SefronError::Numeric(msg)) if !model.class_initialized[label] => {
                    debug!("{msg}; trying the next sample of class {label}");
                    continue;
                }
                Err(e) => return Err(e),
            };
            if !report.untouched() {
                updated += 1;
            }
            guarded += report.updates.iter().filter(|u| !u.applied).count();
        }
        if let Some(j) = model.class_initialized.iter().position(|&b| !b) {
            return Err(SefronError::Numeric(format!(
                "no sample of class {j} produced a usable initialization"
            )));
        }
        if !model.is_finite() {
            return Err(SefronError::Numeric(format!(
                "non-finite weights after epoch {epoch}"
            )));
        }
        let acc = accuracy(&model, dataset)?;
        trace.push(EpochRecord {
            epoch,
            train_accuracy: acc,
            updated_samples: updated,
            guarded_updates: guarded,
        });
        debug!("epoch {epoch}: train accuracy {acc:.4}, {updated} samples updated");
        if best.as_ref().map_or(true, |(_, a, _)| acc > *a) {
            best = Some((epoch, acc, model.clone()));
        }
        if updated == 0 {
            // nothing can change any more
            break;
        }
    }
    let (best_epoch, _, model) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        model,
        best_epoch,
        trace,
    })
}

fn accuracy(model: &Model, dataset: &Dataset) -> Result<f64> {
    let mut correct = 0;
    for k in 0..dataset.len() {
        if model.predict(dataset.features(k))? == dataset.label(k) {
            correct += 1;
        }
    }
    Ok(correct as f64 / dataset.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::make_config;
    use crate::neuron::{fire_time, psp, NeuronParams};
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn enc() -> EncodingConfig {
        make_config(6, 0.7, 3.0).unwrap()
    }

    fn random_pattern(rng: &mut impl Rng, m: usize, enc: &EncodingConfig) -> SpikePattern {
        let x: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..=1.0)).collect();
        encode(&x, enc).unwrap()
    }

    #[test]
    fn stdp_all_before() {
        let p = SpikePattern::from_times(vec![0.1, 0.5, 1.0], 3).unwrap();
        let u = normalized_stdp(&p, 2.0, 1.0);
        assert!(u.values.iter().all(|&v| v > 0.0));
        assert_abs_diff_eq!(u.values.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn stdp_single_spike_at_reference() {
        let p = SpikePattern::from_times(vec![2.0], 1).unwrap();
        assert_eq!(normalized_stdp(&p, 2.0, 1.0).values, vec![1.0]);
    }

    #[test]
    fn stdp_hand_normalized() {
        let p = SpikePattern::from_times(vec![0.5, 1.5, 2.5], 3).unwrap();
        let u = normalized_stdp(&p, 2.0, 1.0);
        let (a, b) = ((-1.5f64).exp(), (-0.5f64).exp());
        assert_abs_diff_eq!(u.values[0], a / (a + b), epsilon = 1e-15);
        assert_abs_diff_eq!(u.values[1], b / (a + b), epsilon = 1e-15);
        assert_eq!(u.values[2], -1.0);
    }

    #[test]
    fn stdp_empty_positive_group_is_flagged() {
        let p = SpikePattern::from_times(vec![2.5, 2.8], 2).unwrap();
        let u = normalized_stdp(&p, 2.0, 1.0);
        assert!(u.positive_group_empty);
        assert_abs_diff_eq!(u.values.iter().sum::<f64>(), -1.0, epsilon = 1e-12);
    }

    #[test]
    fn initialization_fires_at_desired_time() {
        let cfg = LearningConfig::default();
        let enc = enc();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let mut model = Model::new(2, 4, enc.clone(), &cfg).unwrap();
            let p = random_pattern(&mut rng, 4, &enc);
            init_class(&mut model, &p, 0, &cfg).unwrap();
            let t = fire_time(
                &p,
                model.class_weights(0),
                &NeuronParams::new(model.theta(0), cfg.tau_eps).unwrap(),
                model.grid(),
            );
            assert!((t - cfg.t_d).abs() <= cfg.dt + 1e-9, "fired at {t}");
            // and the potential at t_d is the threshold up to interpolation of the bumps
            let v = psp(cfg.t_d, &p, model.class_weights(0), model.grid(), cfg.tau_eps);
            assert!((v - model.theta(0)).abs() <= 1e-3 * model.theta(0));
        }
    }

    #[test]
    fn initialized_thresholds_are_positive() {
        let cfg = LearningConfig::default();
        let enc = enc();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let mut model = Model::new(1, 3, enc.clone(), &cfg).unwrap();
            let p = random_pattern(&mut rng, 3, &enc);
            init_class(&mut model, &p, 0, &cfg).unwrap();
            assert!(model.theta(0) > 0.0);
        }
    }

    #[test]
    fn reinitialization_rejected() {
        let cfg = LearningConfig::default();
        let enc = enc();
        let mut model = Model::new(2, 1, enc.clone(), &cfg).unwrap();
        let p = encode(&[0.4], &enc).unwrap();
        init_class(&mut model, &p, 1, &cfg).unwrap();
        assert!(matches!(
            init_class(&mut model, &p, 1, &cfg),
            Err(SefronError::AlreadyInitialized(1))
        ));
    }

    #[test]
    fn degenerate_initialization_is_flagged() {
        let cfg = LearningConfig::default();
        let enc = make_config(3, 1.0, 3.0).unwrap();
        let mut model = Model::new(2, 1, enc, &cfg).unwrap();
        let p = SpikePattern::from_times(vec![2.0, 2.5, 3.0], 3).unwrap();
        assert!(matches!(
            init_class(&mut model, &p, 0, &cfg),
            Err(SefronError::Numeric(_))
        ));
        assert!(!model.is_initialized(0));
    }

    #[test]
    fn update_vanishes_when_already_on_target() {
        let cfg = LearningConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_pattern(&mut rng, 4, &enc());
        let d = weight_update_delta(&p, cfg.t_d, cfg.t_d, 0.7, &cfg).unwrap();
        assert!(d.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn update_is_linear_in_learning_rate() {
        let cfg = LearningConfig::default();
        let double = LearningConfig { lambda: 2.0 * cfg.lambda, ..cfg.clone() };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = random_pattern(&mut rng, 4, &enc());
        let a = weight_update_delta(&p, 2.0, 2.8, 0.7, &cfg).unwrap();
        let b = weight_update_delta(&p, 2.0, 2.8, 0.7, &double).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_abs_diff_eq!(2.0 * x, *y, epsilon = 1e-15);
        }
    }

    #[test]
    fn update_matches_term_by_term_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for strict in [true, false] {
            let cfg = LearningConfig { strict_eq10: strict, t_d: 1.7, ..Default::default() };
            for _ in 0..10 {
                let p = random_pattern(&mut rng, 4, &enc());
                let (t_ref, t_act, theta) = (2.0, 2.8, 0.63);
                let s = p.times();
                let eps = |t: f64| if t > 0.0 { (t / 3.0) * (1.0 - t / 3.0).exp() } else { 0.0 };
                let frac = |t: f64| -> Vec<f64> {
                    let pos: f64 = s.iter().filter(|&&x| x <= t).map(|&x| (-(t - x).abs() / 1.6).exp()).sum();
                    let neg: f64 = s.iter().filter(|&&x| x > t).map(|&x| (-(t - x).abs() / 1.6).exp()).sum();
                    s.iter()
                        .map(|&x| {
                            let r = (-(t - x).abs() / 1.6).exp();
                            if x <= t { r / pos } else { -r / neg }
                        })
                        .collect()
                };
                let (ur, ua) = (frac(t_ref), frac(t_act));
                let first = if strict { 1.7 } else { t_ref };
                let mut d1 = 0.0;
                let mut d2 = 0.0;
                for k in 0..s.len() {
                    d1 += ur[k] * eps(first - s[k]);
                    d2 += ua[k] * eps(t_act - s[k]);
                }
                let got = weight_update_delta(&p, t_ref, t_act, theta, &cfg).unwrap();
                for k in 0..s.len() {
                    let expected = 0.1 * ur[k] * theta * (1.0 / d1 - 1.0 / d2);
                    assert_abs_diff_eq!(got[k], expected, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn guard_skips_vanishing_denominator() {
        // every spike after t_ref: no positive contribution, denominator is zero
        let cfg = LearningConfig::default();
        let p = SpikePattern::from_times(vec![2.5, 2.9], 2).unwrap();
        assert!(weight_update_delta(&p, 2.0, 3.5, 1.0, &cfg).is_none());
    }

    #[test]
    fn apply_update_shapes() {
        let cfg = LearningConfig::default();
        let enc = make_config(3, 1.0, 3.0).unwrap();
        let mut model = Model::new(1, 1, enc.clone(), &cfg).unwrap();
        let p = SpikePattern::from_times(vec![1.0, 0.5, 2.0], 3).unwrap();
        init_class(&mut model, &p, 0, &cfg).unwrap();
        let before = model.clone();

        apply_update(&mut model, 0, &[0.0, 0.0, 0.0], &p, cfg.sigma).unwrap();
        assert_eq!(model, before);

        let delta = [0.3, -0.2, 0.05];
        apply_update(&mut model, 0, &delta, &p, cfg.sigma).unwrap();
        for (syn, &s) in p.times().iter().enumerate() {
            let k = (s / cfg.dt).round() as usize;
            let diff = model.weights[0][syn].samples[k] - before.weights[0][syn].samples[k];
            assert_abs_diff_eq!(diff, delta[syn], epsilon = 1e-12);
            // locality: beyond 6 sigma the change is negligible
            for k in 0..model.grid.points() {
                if (model.grid.time(k) - s).abs() > 6.0 * cfg.sigma {
                    let diff = model.weights[0][syn].samples[k] - before.weights[0][syn].samples[k];
                    assert!(diff.abs() < delta[syn].abs() * (-18f64).exp());
                }
            }
        }
    }

    #[test]
    fn huge_sigma_is_a_uniform_shift() {
        let cfg = LearningConfig::default();
        let enc = make_config(3, 1.0, 3.0).unwrap();
        let mut model = Model::new(1, 1, enc, &cfg).unwrap();
        let p = SpikePattern::from_times(vec![1.0, 0.5, 2.0], 3).unwrap();
        init_class(&mut model, &p, 0, &cfg).unwrap();
        let before = model.clone();
        apply_update(&mut model, 0, &[0.4, 0.4, 0.4], &p, 1e9).unwrap();
        for syn in 0..3 {
            for k in 0..model.grid.points() {
                let diff = model.weights[0][syn].samples[k] - before.weights[0][syn].samples[k];
                assert_abs_diff_eq!(diff, 0.4, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn apply_update_requires_initialized_class() {
        let cfg = LearningConfig::default();
        let enc = make_config(3, 1.0, 3.0).unwrap();
        let mut model = Model::new(2, 1, enc, &cfg).unwrap();
        let p = SpikePattern::from_times(vec![1.0, 0.5, 2.0], 3).unwrap();
        assert!(apply_update(&mut model, 1, &[0.1, 0.1, 0.1], &p, 0.5).is_err());
    }

    fn two_class_model(cfg: &LearningConfig) -> (Model, SpikePattern, SpikePattern) {
        let enc = enc();
        let mut model = Model::new(2, 2, enc.clone(), cfg).unwrap();
        let a = encode(&[0.1, 0.2], &enc).unwrap();
        let b = encode(&[0.9, 0.8], &enc).unwrap();
        init_class(&mut model, &a, 0, cfg).unwrap();
        init_class(&mut model, &b, 1, cfg).unwrap();
        (model, a, b)
    }

    #[test]
    fn margin_satisfied_leaves_model_bitwise_equal() {
        let cfg = LearningConfig::default();
        let (mut model, a, _) = two_class_model(&cfg);
        let before = model.clone();
        let report = train_sample(&mut model, &a, 0, &cfg).unwrap();
        assert!(report.fire_times[0] + cfg.t_m <= report.fire_times[1]);
        assert!(report.untouched());
        assert!(report.updates.is_empty());
        assert_eq!(model, before);
    }

    #[test]
    fn misclassified_sample_updates_both_neurons() {
        let cfg = LearningConfig::default();
        let (mut model, a, _) = two_class_model(&cfg);
        // pretend sample a belongs to class 1
        let report = train_sample(&mut model, &a, 1, &cfg).unwrap();
        assert!(report.fire_times[1] > cfg.t_d);
        let classes: Vec<_> = report.updates.iter().map(|u| u.class).collect();
        assert_eq!(classes, vec![1, 0]);
        assert_eq!(report.updates[0].t_ref, cfg.t_d);
        let expected = (report.fire_times[1] + cfg.t_m).min(4.0);
        assert_eq!(report.updates[1].t_ref, expected);
    }

    #[test]
    fn on_time_correct_class_only_pushes_rivals() {
        // both classes initialized from the same sample fire together at t_d
        let cfg = LearningConfig::default();
        let enc = enc();
        let mut model = Model::new(2, 2, enc.clone(), &cfg).unwrap();
        let a = encode(&[0.3, 0.6], &enc).unwrap();
        init_class(&mut model, &a, 0, &cfg).unwrap();
        init_class(&mut model, &a, 1, &cfg).unwrap();
        // pin class 0 to cross exactly on the t_d grid point
        model.thetas[0] = psp(cfg.t_d, &a, model.class_weights(0), model.grid(), cfg.tau_eps) * (1.0 - 1e-9);
        let report = train_sample(&mut model, &a, 0, &cfg).unwrap();
        assert_eq!(report.fire_times[0], cfg.t_d);
        let classes: Vec<_> = report.updates.iter().map(|u| u.class).collect();
        assert_eq!(classes, vec![1]);
    }
}
