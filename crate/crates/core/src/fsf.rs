//! Feature Strength Functions.
//!
//! A trained model's weighted postsynaptic potential at a fixed read-out time
//! `t_o` decomposes into one additive term per input feature. Pulling each
//! term back through the population encoder gives a function of the raw
//! feature value, `psi_i(x, j)`, tabulated here on a 1001-point grid of
//! `[0, 1]`. Summing the sampled strengths of an input and taking the largest
//! class total reproduces the classifier's decision in the feature domain.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FeatureScaling};
use crate::encoding::encode_feature;
use crate::error::{Result, SefronError};
use crate::learning::Model;
use crate::neuron::spike_response;

pub const X_GRID_POINTS: usize = 1001;
/// Rendering range of heatmaps.
pub const HEATMAP_LIMIT: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct FsfSet {
    pub(crate) t_o: f64,
    /// `psi[j][i][k]` is the strength of feature `i` for class `j` at `x = k / 1000`.
    pub(crate) psi: Vec<Vec<Vec<f64>>>,
    pub(crate) thetas: Vec<f64>,
    pub(crate) class_names: Vec<String>,
    pub(crate) scaling: Option<FeatureScaling>,
    /// SHA-256 of the serialized source model, when known.
    pub(crate) model_hash: Option<String>,
}

impl FsfSet {
    /// Builds a set from explicit tables, mostly for tests and bindings.
    pub fn from_tables(t_o: f64, psi: Vec<Vec<Vec<f64>>>, thetas: Vec<f64>) -> Result<Self> {
        if psi.is_empty() || psi.len() != thetas.len() {
            return Err(SefronError::InvalidArgument("one table set per class is required".into()));
        }
        let m = psi[0].len();
        for class in &psi {
            if class.len() != m || class.iter().any(|t| t.len() != X_GRID_POINTS) {
                return Err(SefronError::InvalidArgument(format!(
                    "every class needs {m} tables of {X_GRID_POINTS} values"
                )));
            }
            if class.iter().flatten().any(|v| !v.is_finite()) {
                return Err(SefronError::Numeric("feature strength tables must be finite".into()));
            }
        }
        let n = psi.len();
        Ok(FsfSet {
            t_o,
            psi,
            thetas,
            class_names: (0..n).map(|j| j.to_string()).collect(),
            scaling: None,
            model_hash: None,
        })
    }

    pub fn t_o(&self) -> f64 {
        self.t_o
    }

    pub fn n_classes(&self) -> usize {
        self.psi.len()
    }

    pub fn n_features(&self) -> usize {
        self.psi[0].len()
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn scaling(&self) -> Option<&FeatureScaling> {
        self.scaling.as_ref()
    }

    pub fn model_hash(&self) -> Option<&str> {
        self.model_hash.as_deref()
    }

    pub fn set_model_hash(&mut self, hash: Option<String>) {
        self.model_hash = hash;
    }

    /// Sampled table of feature `i` for class `j`.
    pub fn table(&self, j: usize, i: usize) -> &[f64] {
        &self.psi[j][i]
    }

    pub fn x_grid() -> Vec<f64> {
        (0..X_GRID_POINTS).map(grid_x).collect()
    }

    /// Predicted class of a normalized input.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(classify_fsf(x, self)?.predicted)
    }
}

#[inline]
fn grid_x(k: usize) -> f64 {
    k as f64 / (X_GRID_POINTS - 1) as f64
}

/// Tabulates the feature strength functions of `model` at read-out time `t_o`.
///
/// For every grid value `x`, `psi_i(x, j) = (1 / theta_j) * sum_r w_i^r(G(x)^r, j) * eps(t_o - G(x)^r)`,
/// where `G(x)^r` is the spike time of receptive field `r` and the causal
/// kernel drops spikes after `t_o`.
pub fn extract_fsf(model: &Model, t_o: f64) -> Result<FsfSet> {
    if let Some(j) = (0..model.n_classes()).find(|&j| !model.is_initialized(j)) {
        return Err(SefronError::Uninitialized(j));
    }
    let t_end = model.grid().t_end();
    if !(t_o > 0.0 && t_o <= t_end) {
        return Err(SefronError::InvalidArgument(format!(
            "t_o={t_o} must lie in (0, {t_end}]"
        )));
    }
    let enc = model.encoding();
    let q = enc.q;
    // spike slots and kernel values depend only on x, not on the feature
    let mut slots = Vec::with_capacity(X_GRID_POINTS * q);
    let mut kernel = Vec::with_capacity(X_GRID_POINTS * q);
    for k in 0..X_GRID_POINTS {
        for s in encode_feature(grid_x(k), enc) {
            slots.push(model.grid().locate(s.min(t_end)));
            kernel.push(spike_response(t_o - s, model.tau_eps()));
        }
    }
    let psi = (0..model.n_classes())
        .map(|j| {
            let inv_theta = 1.0 / model.theta(j);
            (0..model.n_features())
                .map(|i| {
                    let weights = &model.class_weights(j)[i * q..(i + 1) * q];
                    (0..X_GRID_POINTS)
                        .map(|k| {
                            let mut acc = 0.0;
                            for (r, w) in weights.iter().enumerate() {
                                let e = kernel[k * q + r];
                                if e != 0.0 {
                                    let (seg, frac) = slots[k * q + r];
                                    acc += w.at(seg, frac) * e;
                                }
                            }
                            acc * inv_theta
                        })
                        .collect()
                })
                .collect()
        })
        .collect::<Vec<Vec<Vec<f64>>>>();
    if psi.iter().flatten().flatten().any(|v| !v.is_finite()) {
        return Err(SefronError::Numeric("non-finite feature strength".into()));
    }
    Ok(FsfSet {
        t_o,
        psi,
        thetas: model.thetas().to_vec(),
        class_names: model.class_names().to_vec(),
        scaling: model.scaling().cloned(),
        model_hash: None,
    })
}

#[inline]
fn interpolate(table: &[f64], x: f64) -> f64 {
    let pos = x * (X_GRID_POINTS - 1) as f64;
    let nearest = pos.round();
    if (pos - nearest).abs() < 1e-9 {
        return table[nearest as usize];
    }
    let k = (pos.floor() as usize).min(X_GRID_POINTS - 2);
    let frac = pos - k as f64;
    table[k] + frac * (table[k + 1] - table[k])
}

/// Strength of feature `i` for class `j` at value `x`, linearly interpolated.
pub fn sample_fsf(fsf: &FsfSet, i: usize, j: usize, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(SefronError::InvalidArgument(format!("x={x} is outside [0, 1]")));
    }
    if j >= fsf.n_classes() || i >= fsf.n_features() {
        return Err(SefronError::InvalidArgument(format!(
            "feature {i} / class {j} out of range"
        )));
    }
    Ok(interpolate(&fsf.psi[j][i], x))
}

/// Per-feature strengths of one input and the class they add up to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    /// `per_feature[i][j]`
    pub per_feature: Vec<Vec<f64>>,
    pub aggregates: Vec<f64>,
    pub predicted: usize,
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (j, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = j;
        }
    }
    best
}

pub fn classify_fsf(x: &[f64], fsf: &FsfSet) -> Result<Explanation> {
    if x.len() != fsf.n_features() {
        return Err(SefronError::InvalidArgument(format!(
            "FSF set has {} features, input has {}",
            fsf.n_features(),
            x.len()
        )));
    }
    if let Some((i, v)) = x.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
        return Err(SefronError::InvalidArgument(format!("feature {i} = {v} is outside [0, 1]")));
    }
    let per_feature: Vec<Vec<f64>> = x
        .iter()
        .enumerate()
        .map(|(i, &v)| (0..fsf.n_classes()).map(|j| interpolate(&fsf.psi[j][i], v)).collect())
        .collect();
    let aggregates: Vec<f64> = (0..fsf.n_classes())
        .map(|j| per_feature.iter().map(|row| row[j]).sum())
        .collect();
    let predicted = argmax(&aggregates);
    Ok(Explanation {
        per_feature,
        aggregates,
        predicted,
    })
}

/// Read-out times `step, 2 step, ...` up to `t_end`.
pub fn default_candidates(t_end: f64, step: f64) -> Vec<f64> {
    let n = (t_end / step + 1e-9).floor() as usize;
    // rounded so that 14 * 0.05 prints as 0.7
    (1..=n).map(|k| (k as f64 * step * 1e9).round() / 1e9).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutSelection {
    pub t_o: f64,
    pub accuracy: f64,
    /// `(candidate, accuracy)` for every candidate tried, in ascending order.
    pub scores: Vec<(f64, f64)>,
}

/// Picks the read-out time whose FSF classifier scores best on `validation`.
/// Ties go to the earliest candidate.
pub fn select_t_o(model: &Model, validation: &Dataset, candidates: &[f64]) -> Result<ReadoutSelection> {
    if validation.is_empty() {
        return Err(SefronError::Data("validation set is empty".into()));
    }
    if candidates.is_empty() {
        return Err(SefronError::InvalidArgument("no read-out candidates given".into()));
    }
    let mut sorted = candidates.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let mut scores = Vec::with_capacity(sorted.len());
    for &t_o in &sorted {
        let fsf = extract_fsf(model, t_o)?;
        let mut correct = 0;
        for k in 0..validation.len() {
            if classify_fsf(validation.features(k), &fsf)?.predicted == validation.label(k) {
                correct += 1;
            }
        }
        scores.push((t_o, correct as f64 / validation.len() as f64));
    }
    let best = scores
        .iter()
        .copied()
        .fold(None::<(f64, f64)>, |acc, (t, a)| match acc {
            Some((_, ba)) if a <= ba => acc,
            _ => Some((t, a)),
        })
        .expect("non-empty");
    Ok(ReadoutSelection {
        t_o: best.0,
        accuracy: best.1,
        scores,
    })
}

/// Row-major `h x w` map of class `j`'s per-feature strengths, clamped to
/// `[-HEATMAP_LIMIT, HEATMAP_LIMIT]`.
pub fn heatmap(explanation: &Explanation, shape: (usize, usize), j: usize) -> Result<Vec<Vec<f64>>> {
    let (h, w) = shape;
    let m = explanation.per_feature.len();
    if h * w != m {
        return Err(SefronError::InvalidArgument(format!(
            "image shape {h}x{w} does not hold {m} features"
        )));
    }
    if j >= explanation.aggregates.len() {
        return Err(SefronError::InvalidArgument(format!("class {j} out of range")));
    }
    Ok((0..h)
        .map(|r| {
            (0..w)
                .map(|c| explanation.per_feature[r * w + c][j].clamp(-HEATMAP_LIMIT, HEATMAP_LIMIT))
                .collect()
        })
        .collect())
}

/// Plain (P2) 8-bit PGM, mapping `[-HEATMAP_LIMIT, HEATMAP_LIMIT]` linearly onto `[0, 255]`.
pub fn to_pgm(map: &[Vec<f64>]) -> String {
    let h = map.len();
    let w = map.first().map_or(0, Vec::len);
    let mut out = format!("P2\n{w} {h}\n255\n");
    for row in map {
        let line: Vec<String> = row
            .iter()
            .map(|v| {
                let level = (v.clamp(-HEATMAP_LIMIT, HEATMAP_LIMIT) + HEATMAP_LIMIT) / (2.0 * HEATMAP_LIMIT) * 255.0;
                format!("{}", level.round() as u8)
            })
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn to_csv_matrix(map: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for row in map {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}
