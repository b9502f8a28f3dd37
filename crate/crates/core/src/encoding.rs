//! Population encoding of real-valued features into presynaptic spike times.
//!
//! Each feature in `[0, 1]` is projected through `q` Gaussian receptive
//! fields with evenly spaced centres. A receptive field with firing strength
//! `phi` emits one spike at `T * (1 - phi)`, so strong responses fire early.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SefronError};

/// Receptive-field layout shared by every feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingConfig {
    /// Receptive fields per feature.
    pub q: usize,
    /// Overlap constant.
    pub gamma: f64,
    /// Presynaptic spike interval limit (ms).
    pub t_interval: f64,
    pub centers: Vec<f64>,
    pub width: f64,
}

impl EncodingConfig {
    pub fn new(q: usize, gamma: f64, t_interval: f64) -> Result<Self> {
        make_config(q, gamma, t_interval)
    }

    /// Checks the invariants of a config that was deserialized rather than built.
    pub fn validate(&self) -> Result<()> {
        let rebuilt = make_config(self.q, self.gamma, self.t_interval)?;
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs());
        if self.centers.len() != self.q
            || !self.centers.iter().zip(&rebuilt.centers).all(|(a, b)| close(*a, *b))
            || !close(self.width, rebuilt.width)
        {
            return Err(SefronError::Config(
                "receptive field centers/width do not match q and gamma".into(),
            ));
        }
        Ok(())
    }
}

/// Builds the receptive-field layout over the normalized feature range.
///
/// Centres sit at `((2r - 3) / 2) / (q - 2)` for `r = 1..=q` and every field
/// has width `(1 / gamma) / (q - 2)`, so the two outermost centres fall just
/// outside `[0, 1]`.
pub fn make_config(q: usize, gamma: f64, t_interval: f64) -> Result<EncodingConfig> {
    if q < 3 {
        return Err(SefronError::Config(format!(
            "at least 3 receptive fields are required, got {q}"
        )));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(SefronError::Config(format!(
            "overlap constant must be positive, got {gamma}"
        )));
    }
    if !(t_interval > 0.0 && t_interval.is_finite()) {
        return Err(SefronError::Config(format!(
            "presynaptic interval must be positive, got {t_interval}"
        )));
    }
    let span = (q - 2) as f64;
    let centers = (1..=q)
        .map(|r| ((2.0 * r as f64 - 3.0) / 2.0) / span)
        .collect();
    Ok(EncodingConfig {
        q,
        gamma,
        t_interval,
        centers,
        width: (1.0 / gamma) / span,
    })
}

/// m x q presynaptic spike times, stored row-major by feature.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikePattern {
    times: Vec<f64>,
    q: usize,
}

impl SpikePattern {
    pub fn from_times(times: Vec<f64>, q: usize) -> Result<Self> {
        if q == 0 || times.len() % q != 0 {
            return Err(SefronError::InvalidArgument(format!(
                "{} spike times cannot be split into rows of {q}",
                times.len()
            )));
        }
        if let Some(bad) = times.iter().find(|t| !t.is_finite() || **t < 0.0) {
            return Err(SefronError::InvalidArgument(format!(
                "spike time {bad} is not a finite non-negative value"
            )));
        }
        Ok(SpikePattern { times, q })
    }

    pub fn n_features(&self) -> usize {
        self.times.len() / self.q
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// All spike times, feature-major (`i * q + r`).
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn time(&self, feature: usize, rf: usize) -> f64 {
        self.times[feature * self.q + rf]
    }

    pub fn feature(&self, feature: usize) -> &[f64] {
        &self.times[feature * self.q..(feature + 1) * self.q]
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Firing strength of receptive field `r` (0-based) for feature value `x`.
pub fn rf_activation(x: f64, r: usize, cfg: &EncodingConfig) -> f64 {
    let d = x - cfg.centers[r];
    (-(d * d) / (2.0 * cfg.width * cfg.width)).exp()
}

/// Spike times of the `q` receptive fields for a single feature value.
pub fn encode_feature(x: f64, cfg: &EncodingConfig) -> Vec<f64> {
    (0..cfg.q)
        .map(|r| cfg.t_interval * (1.0 - rf_activation(x, r, cfg)))
        .collect()
}

pub fn encode(x: &[f64], cfg: &EncodingConfig) -> Result<SpikePattern> {
    let mut times = Vec::with_capacity(x.len() * cfg.q);
    for (i, &v) in x.iter().enumerate() {
        if !(0.0..=1.0).contains(&v) {
            return Err(SefronError::InvalidArgument(format!(
                "feature {i} = {v} is outside [0, 1]"
            )));
        }
        times.extend(encode_feature(v, cfg));
    }
    Ok(SpikePattern { times, q: cfg.q })
}

const COARSE_POINTS: usize = 1001;
const REFINE_TOL: f64 = 1e-6;

fn encoding_residual(x: f64, spikes: &[f64], cfg: &EncodingConfig) -> f64 {
    spikes
        .iter()
        .enumerate()
        .map(|(r, &s)| {
            let d = cfg.t_interval * (1.0 - rf_activation(x, r, cfg)) - s;
            d * d
        })
        .sum()
}

/// Recovers the feature value whose encoding is closest (least squares) to
/// `spikes`.
///
/// A 1001-point scan of `[0, 1]` locates the basin, then golden-section search
/// refines within one grid step on either side.
pub fn inverse_encode(spikes: &[f64], cfg: &EncodingConfig) -> Result<f64> {
    if spikes.len() != cfg.q {
        return Err(SefronError::InvalidArgument(format!(
            "expected {} spike times, got {}",
            cfg.q,
            spikes.len()
        )));
    }
    let step = 1.0 / (COARSE_POINTS - 1) as f64;
    let (best, _) = (0..COARSE_POINTS)
        .map(|k| (k, encoding_residual(k as f64 * step, spikes, cfg)))
        .fold((0, f64::INFINITY), |acc, (k, e)| if e < acc.1 { (k, e) } else { acc });

    let centre = best as f64 * step;
    let mut lo = (centre - step).max(0.0);
    let mut hi = (centre + step).min(1.0);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let mut fa = encoding_residual(a, spikes, cfg);
    let mut fb = encoding_residual(b, spikes, cfg);
    while hi - lo > REFINE_TOL {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = encoding_residual(a, spikes, cfg);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = encoding_residual(b, spikes, cfg);
        }
    }
    let mid = 0.5 * (lo + hi);
    // the interval endpoints can beat the interior when the optimum is on the boundary
    let candidates = [lo, mid, hi];
    let x = candidates
        .iter()
        .copied()
        .min_by(|p, q| {
            encoding_residual(*p, spikes, cfg).total_cmp(&encoding_residual(*q, spikes, cfg))
        })
        .unwrap_or(mid);
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn cfg5() -> EncodingConfig {
        make_config(5, 0.7, 3.0).unwrap()
    }

    #[test]
    fn centers_and_width_for_five_fields() {
        let cfg = cfg5();
        let expected = [-1.0 / 6.0, 1.0 / 6.0, 0.5, 5.0 / 6.0, 7.0 / 6.0];
        for (c, e) in cfg.centers.iter().zip(expected) {
            assert_abs_diff_eq!(*c, e, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(cfg.width, 0.476_190_476_190_476_2, epsilon = 1e-12);
    }

    #[test]
    fn centers_for_three_fields() {
        let cfg = make_config(3, 1.0, 3.0).unwrap();
        assert_eq!(cfg.centers, vec![-0.5, 0.5, 1.5]);
        assert_eq!(cfg.width, 1.0);
    }

    #[test]
    fn rejects_degenerate_configs() {
        assert!(make_config(2, 0.7, 3.0).is_err());
        assert!(make_config(5, 0.0, 3.0).is_err());
        assert!(make_config(5, 0.7, -1.0).is_err());
    }

    #[test]
    fn activation_values() {
        let cfg = cfg5();
        assert_eq!(rf_activation(0.5, 2, &cfg), 1.0);
        assert_abs_diff_eq!(rf_activation(0.5, 1, &cfg), 0.782_704_538_241_868_1, epsilon = 1e-12);
    }

    #[test]
    fn encode_midpoint() {
        let cfg = cfg5();
        let s = encode(&[0.5], &cfg).unwrap();
        let expected = [1.874_066_703_445_801, 0.651_886_385_274_395_6, 0.0, 0.651_886_385_274_395_6, 1.874_066_703_445_801];
        for (a, b) in s.times().iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn encode_rejects_out_of_range() {
        assert!(encode(&[0.2, 1.01], &cfg5()).is_err());
        assert!(encode(&[-0.1], &cfg5()).is_err());
    }

    #[test]
    fn single_peak_at_center() {
        let cfg = make_config(6, 0.7, 3.0).unwrap();
        let x = cfg.centers[2];
        let at_one: Vec<_> = (0..cfg.q).filter(|&r| rf_activation(x, r, &cfg) == 1.0).collect();
        assert_eq!(at_one, vec![2]);
    }

    #[test]
    fn inverse_round_trip_examples() {
        let cfg = cfg5();
        for x in [0.37, 0.0, 1.0] {
            let s = encode_feature(x, &cfg);
            assert_abs_diff_eq!(inverse_encode(&s, &cfg).unwrap(), x, epsilon = 1e-3);
        }
    }

    #[test]
    fn inverse_round_trip_full_grid() {
        for cfg in [cfg5(), make_config(6, 0.7, 3.0).unwrap()] {
            for k in 0..=1000 {
                let x = k as f64 / 1000.0;
                let got = inverse_encode(&encode_feature(x, &cfg), &cfg).unwrap();
                assert!((got - x).abs() <= 1e-3, "x={x} got={got}");
            }
        }
    }

    #[test]
    fn inverse_of_perturbed_pattern_matches_brute_force() {
        use rand::{Rng, SeedableRng};
        let cfg = cfg5();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let s: Vec<f64> = encode_feature(0.5, &cfg)
                .into_iter()
                .map(|t| (t + rng.gen_range(-0.01..=0.01)).clamp(0.0, 3.0))
                .collect();
            // brute force on a 1e-5 grid
            let oracle = (0..=100_000)
                .map(|k| k as f64 * 1e-5)
                .min_by(|a, b| encoding_residual(*a, &s, &cfg).total_cmp(&encoding_residual(*b, &s, &cfg)))
                .unwrap();
            let got = inverse_encode(&s, &cfg).unwrap();
            assert!((got - 0.5).abs() <= 0.01);
            assert!((got - oracle).abs() <= 2e-5, "got {got} oracle {oracle}");
        }
    }

    proptest! {
        #[test]
        fn spike_times_bounded(x in 0.0f64..=1.0, q in 3usize..9, gamma in 0.2f64..2.0) {
            let cfg = make_config(q, gamma, 3.0).unwrap();
            for s in encode_feature(x, &cfg) {
                prop_assert!((0.0..=3.0).contains(&s));
            }
        }

        #[test]
        fn stronger_fields_fire_earlier(x in 0.0f64..=1.0) {
            let cfg = cfg5();
            let s = encode_feature(x, &cfg);
            for a in 0..cfg.q {
                for b in 0..cfg.q {
                    let (pa, pb) = (rf_activation(x, a, &cfg), rf_activation(x, b, &cfg));
                    if pa > pb {
                        prop_assert!(s[a] < s[b]);
                    }
                }
            }
        }
    }
}
