//! Output-neuron dynamics with time-varying synaptic weights.
//!
//! Every synapse carries an efficacy function sampled on a fixed time grid.
//! A presynaptic spike at `s` contributes `w(s) * eps(t - s)` to the
//! postsynaptic potential, and the neuron's output is the first grid time at
//! which that potential reaches its threshold.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::encoding::SpikePattern;
use crate::error::{Result, SefronError};
use crate::learning::Model;

/// Uniform sampling of `[0, t_end]` with step `dt`, both ends included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_end: f64,
    dt: f64,
    points: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite() && t_end > 0.0 && t_end.is_finite()) {
            return Err(SefronError::Config(format!(
                "time grid needs positive t_end and dt, got t_end={t_end} dt={dt}"
            )));
        }
        let steps = t_end / dt;
        let rounded = steps.round();
        if (steps - rounded).abs() > 1e-6 {
            return Err(SefronError::Config(format!(
                "t_end={t_end} is not a whole number of dt={dt} steps"
            )));
        }
        Ok(TimeGrid {
            t_end,
            dt,
            points: rounded as usize + 1,
        })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    /// Index of the segment holding `t` and the fractional offset inside it.
    /// `t` must already be known to lie within the grid.
    #[inline]
    pub(crate) fn locate(&self, t: f64) -> (usize, f64) {
        let pos = t / self.dt;
        let nearest = pos.round();
        if (pos - nearest).abs() < 1e-9 {
            let k = (nearest as usize).min(self.points - 1);
            return (k, 0.0);
        }
        let k = pos.floor() as usize;
        if k >= self.points - 1 {
            (self.points - 1, 0.0)
        } else {
            (k, pos - k as f64)
        }
    }

    fn contains(&self, t: f64) -> bool {
        t >= -1e-12 && t <= self.t_end + 1e-12
    }
}

/// A synaptic weight that varies over time, stored as samples on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct EfficacyFunction {
    pub samples: Vec<f64>,
}

impl EfficacyFunction {
    pub fn constant(value: f64, grid: &TimeGrid) -> Self {
        EfficacyFunction {
            samples: vec![value; grid.points()],
        }
    }

    #[inline]
    pub(crate) fn at(&self, k: usize, frac: f64) -> f64 {
        if frac == 0.0 {
            self.samples[k]
        } else {
            self.samples[k] + frac * (self.samples[k + 1] - self.samples[k])
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronParams {
    pub theta: f64,
    pub tau_eps: f64,
}

impl NeuronParams {
    pub fn new(theta: f64, tau_eps: f64) -> Result<Self> {
        if !(theta > 0.0) || !(tau_eps > 0.0) {
            return Err(SefronError::InvalidArgument(format!(
                "threshold and time constant must be positive (theta={theta}, tau={tau_eps})"
            )));
        }
        Ok(NeuronParams { theta, tau_eps })
    }
}

/// Spike response kernel `(t / tau) * exp(1 - t / tau)`, zero for `t < 0`.
#[inline]
pub fn spike_response(t: f64, tau_eps: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        let x = t / tau_eps;
        x * (1.0 - x).exp()
    }
}

/// Momentary weight at time `t`, linearly interpolated between grid samples.
pub fn sample_weight(w: &EfficacyFunction, grid: &TimeGrid, t: f64) -> Result<f64> {
    if !grid.contains(t) {
        return Err(SefronError::InvalidArgument(format!(
            "t={t} lies outside the time grid [0, {}]",
            grid.t_end()
        )));
    }
    if w.samples.len() != grid.points() {
        return Err(SefronError::InvalidArgument(format!(
            "efficacy function has {} samples, grid has {} points",
            w.samples.len(),
            grid.points()
        )));
    }
    let (k, frac) = grid.locate(t.clamp(0.0, grid.t_end()));
    Ok(w.at(k, frac))
}

/// Postsynaptic potential at time `t`, summed term by term over all synapses.
///
/// `weights` holds one efficacy function per synapse in the same
/// feature-major order as the pattern.
pub fn psp(
    t: f64,
    pattern: &SpikePattern,
    weights: &[EfficacyFunction],
    grid: &TimeGrid,
    tau_eps: f64,
) -> f64 {
    pattern
        .times()
        .iter()
        .zip(weights)
        .filter(|(&s, _)| t >= s)
        .map(|(&s, w)| {
            let (k, frac) = grid.locate(s.min(grid.t_end()));
            w.at(k, frac) * spike_response(t - s, tau_eps)
        })
        .sum()
}

/// A spike pattern with its per-spike quantities cached, so that several
/// output neurons can be simulated against it cheaply.
pub struct PreparedPattern<'a> {
    pattern: &'a SpikePattern,
    /// Synapse indices ordered by spike time.
    order: Vec<usize>,
    /// Grid segment and offset of each spike, indexed by synapse.
    slots: Vec<(usize, f64)>,
    /// `exp(s / tau)` in sorted order.
    growth: Vec<f64>,
    tau_eps: f64,
}

impl<'a> PreparedPattern<'a> {
    pub fn new(pattern: &'a SpikePattern, grid: &TimeGrid, tau_eps: f64) -> Self {
        let times = pattern.times();
        let mut order: Vec<usize> = (0..times.len()).collect();
        order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
        let slots = times
            .iter()
            .map(|&s| grid.locate(s.min(grid.t_end())))
            .collect();
        let growth = order.iter().map(|&k| (times[k] / tau_eps).exp()).collect();
        PreparedPattern {
            pattern,
            order,
            slots,
            growth,
            tau_eps,
        }
    }

    pub fn pattern(&self) -> &SpikePattern {
        self.pattern
    }

    /// Momentary weights `w(s)` of every synapse, in synapse order.
    pub fn momentary_weights(&self, weights: &[EfficacyFunction]) -> Vec<f64> {
        weights
            .iter()
            .zip(&self.slots)
            .map(|(w, &(k, frac))| w.at(k, frac))
            .collect()
    }

    /// First grid time at which the potential reaches `theta`, or `t_end`.
    ///
    /// For `t >= s`, `eps(t - s) = (e / tau) * exp(-t / tau) * (t - s) * exp(s / tau)`,
    /// so the potential is `(e / tau) * exp(-t / tau) * (t * A(t) - B(t))` with
    /// running sums `A = sum w exp(s / tau)` and `B = sum w s exp(s / tau)`
    /// over the spikes already seen.
    pub fn fire_time(&self, weights: &[EfficacyFunction], theta: f64, grid: &TimeGrid) -> f64 {
        let times = self.pattern.times();
        let scale = E / self.tau_eps;
        let (mut a, mut b) = (0.0, 0.0);
        let mut next = 0;
        for k in 0..grid.points() {
            let t = grid.time(k);
            while next < self.order.len() && times[self.order[next]] <= t {
                let syn = self.order[next];
                let (seg, frac) = self.slots[syn];
                let w = weights[syn].at(seg, frac) * self.growth[next];
                a += w;
                b += w * times[syn];
                next += 1;
            }
            if next == 0 {
                continue;
            }
            let v = scale * (-t / self.tau_eps).exp() * (t * a - b);
            if v >= theta {
                return t;
            }
        }
        grid.t_end()
    }
}

/// First grid time at which neuron `weights` reaches `params.theta`; `t_end`
/// when it never does.
pub fn fire_time(
    pattern: &SpikePattern,
    weights: &[EfficacyFunction],
    params: &NeuronParams,
    grid: &TimeGrid,
) -> f64 {
    PreparedPattern::new(pattern, grid, params.tau_eps).fire_time(weights, params.theta, grid)
}

/// Index of the smallest value; ties go to the lowest index.
pub(crate) fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (j, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = j;
        }
    }
    best
}

/// Fire times of every output neuron for `pattern`.
pub fn fire_times(pattern: &SpikePattern, model: &Model) -> Vec<f64> {
    let prepared = PreparedPattern::new(pattern, model.grid(), model.tau_eps());
    (0..model.n_classes())
        .map(|j| prepared.fire_time(model.class_weights(j), model.theta(j), model.grid()))
        .collect()
}

/// Time-domain classification: the class whose neuron fires first.
pub fn predict_time_domain(pattern: &SpikePattern, model: &Model) -> (usize, Vec<f64>) {
    let times = fire_times(pattern, model);
    (argmin(&times), times)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    fn grid() -> TimeGrid {
        TimeGrid::new(4.0, 0.01).unwrap()
    }

    #[test]
    fn grid_has_401_points() {
        let g = grid();
        assert_eq!(g.points(), 401);
        assert_eq!(g.time(400), 4.0);
        assert!(TimeGrid::new(4.0, 0.03).is_err());
    }

    #[test]
    fn kernel_values() {
        assert_eq!(spike_response(3.0, 3.0), 1.0);
        assert_eq!(spike_response(0.0, 3.0), 0.0);
        assert_eq!(spike_response(-1.0, 3.0), 0.0);
        assert_abs_diff_eq!(spike_response(6.0, 3.0), 2.0 * (-1f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(spike_response(6.0, 3.0), 0.735_758_882_342_884_7, epsilon = 1e-12);
    }

    #[test]
    fn weight_sampling() {
        let g = TimeGrid::new(0.01, 0.01).unwrap();
        let w = EfficacyFunction { samples: vec![0.0, 1.0] };
        assert_eq!(sample_weight(&w, &g, 0.0).unwrap(), 0.0);
        assert_eq!(sample_weight(&w, &g, 0.01).unwrap(), 1.0);
        assert_abs_diff_eq!(sample_weight(&w, &g, 0.005).unwrap(), 0.5, epsilon = 1e-12);
        assert!(sample_weight(&w, &g, 0.02).is_err());
        assert!(sample_weight(&w, &g, -0.5).is_err());

        let g = grid();
        let c = EfficacyFunction::constant(0.3, &g);
        for t in [0.0, 0.123, 2.5, 3.999, 4.0] {
            assert_abs_diff_eq!(sample_weight(&c, &g, t).unwrap(), 0.3, epsilon = 1e-15);
        }
        let ramp = EfficacyFunction {
            samples: (0..g.points()).map(|k| k as f64).collect(),
        };
        assert_eq!(sample_weight(&ramp, &g, 1.23).unwrap(), 123.0);
    }

    #[test]
    fn psp_before_any_spike_is_zero() {
        let g = grid();
        let p = SpikePattern::from_times(vec![1.0, 2.0, 1.5, 3.0], 2).unwrap();
        let w = vec![EfficacyFunction::constant(1.0, &g); 4];
        assert_eq!(psp(0.9, &p, &w, &g, 3.0), 0.0);
    }

    #[test]
    fn psp_single_synapse_peak() {
        let g = grid();
        let p = SpikePattern::from_times(vec![0.0], 1).unwrap();
        let w = vec![EfficacyFunction::constant(1.0, &g)];
        assert_eq!(psp(3.0, &p, &w, &g, 3.0), 1.0);
    }

    fn random_case(rng: &mut impl Rng, g: &TimeGrid) -> (SpikePattern, Vec<EfficacyFunction>) {
        let times: Vec<f64> = (0..6).map(|_| rng.gen_range(0.0..3.0)).collect();
        let p = SpikePattern::from_times(times, 2).unwrap();
        let w = (0..6)
            .map(|_| EfficacyFunction {
                samples: (0..g.points()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            })
            .collect();
        (p, w)
    }

    #[test]
    fn psp_matches_term_by_term_oracle() {
        let g = grid();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let (p, w) = random_case(&mut rng, &g);
            let t = rng.gen_range(0.0..4.0);
            // oracle: explicit interpolation and kernel, no shared helpers
            let mut expected = 0.0;
            for syn in 0..6 {
                let s = p.times()[syn];
                if t - s > 0.0 {
                    let pos = s / 0.01;
                    let k = pos.floor() as usize;
                    let f = pos - k as f64;
                    let ws = w[syn].samples[k] * (1.0 - f) + w[syn].samples[k + 1] * f;
                    let x = (t - s) / 3.0;
                    expected += ws * x * (1.0 - x).exp();
                }
            }
            assert_abs_diff_eq!(psp(t, &p, &w, &g, 3.0), expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn fast_fire_time_agrees_with_direct_scan() {
        let g = grid();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let (p, mut w) = random_case(&mut rng, &g);
            for f in &mut w {
                for v in &mut f.samples {
                    *v = v.abs();
                }
            }
            let theta = rng.gen_range(0.05..2.0);
            let direct = (0..g.points())
                .map(|k| g.time(k))
                .find(|&t| psp(t, &p, &w, &g, 3.0) >= theta)
                .unwrap_or(g.t_end());
            let fast = fire_time(&p, &w, &NeuronParams { theta, tau_eps: 3.0 }, &g);
            assert!((fast - direct).abs() <= g.dt() + 1e-12, "fast {fast} direct {direct}");
        }
    }

    #[test]
    fn fire_time_edge_cases() {
        let g = grid();
        let p = SpikePattern::from_times(vec![0.7, 1.2], 2).unwrap();
        let w = vec![EfficacyFunction::constant(1.0, &g); 2];
        let early = fire_time(&p, &w, &NeuronParams { theta: 1e-9, tau_eps: 3.0 }, &g);
        assert!((early - 0.7).abs() <= g.dt() + 1e-12);
        let never = fire_time(&p, &w, &NeuronParams { theta: 100.0, tau_eps: 3.0 }, &g);
        assert_eq!(never, 4.0);

        let p = SpikePattern::from_times(vec![0.0], 1).unwrap();
        let w = vec![EfficacyFunction::constant(1.0, &g)];
        let peak = fire_time(&p, &w, &NeuronParams { theta: 1.0, tau_eps: 3.0 }, &g);
        assert!((peak - 3.0).abs() <= g.dt() + 1e-9);
    }

    #[test]
    fn raising_threshold_never_fires_earlier() {
        let g = grid();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..50 {
            let (p, w) = random_case(&mut rng, &g);
            let mut last = 0.0;
            for k in 1..40 {
                let t = fire_time(&p, &w, &NeuronParams { theta: k as f64 * 0.05, tau_eps: 3.0 }, &g);
                assert!(t >= last);
                last = t;
            }
        }
    }

    #[test]
    fn psp_ignores_later_spikes() {
        let g = grid();
        let w = vec![EfficacyFunction::constant(0.8, &g); 3];
        let a = SpikePattern::from_times(vec![0.2, 0.9, 2.5], 3).unwrap();
        let b = SpikePattern::from_times(vec![0.2, 0.9, 2.9], 3).unwrap();
        for k in 0..=240 {
            let t = g.time(k);
            assert_eq!(psp(t, &a, &w, &g, 3.0), psp(t, &b, &w, &g, 3.0));
        }
    }

    #[test]
    fn psp_has_no_large_jumps() {
        let g = grid();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let (p, w) = random_case(&mut rng, &g);
            let wmax = w.iter().flat_map(|f| &f.samples).fold(0.0f64, |m, v| m.max(v.abs()));
            // |d eps / dt| <= e / tau on t >= 0
            let bound = 6.0 * wmax * (E / 3.0) * g.dt() + 1e-12;
            for k in 1..g.points() {
                let d = psp(g.time(k), &p, &w, &g, 3.0) - psp(g.time(k - 1), &p, &w, &g, 3.0);
                assert!(d.abs() <= bound);
            }
        }
    }

    #[test]
    fn argmin_prefers_lowest_index() {
        assert_eq!(argmin(&[4.0, 4.0, 4.0]), 0);
        assert_eq!(argmin(&[4.0, 2.0, 4.0]), 1);
        assert_eq!(argmin(&[3.0, 2.0, 2.0]), 1);
    }
}
