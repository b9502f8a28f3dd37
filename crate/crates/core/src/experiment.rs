//! Train/evaluate runs over one or more splits, shared by the CLI and tests.

use std::thread;

use serde::Serialize;

use crate::data::{Dataset, Split};
use crate::encoding::EncodingConfig;
use crate::error::{Result, SefronError};
use crate::eval::evaluate;
use crate::fsf::{default_candidates, extract_fsf, select_t_o, FsfSet};
use crate::learning::{train, EpochRecord, LearningConfig, Model};

/// How the FSF read-out time is chosen after training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Readout {
    Off,
    Fixed(f64),
    /// Grid search on the training set over `step, 2 step, ..., T + δT`.
    Auto { step: f64 },
}

#[derive(Debug, Clone)]
pub struct FoldResult {
    pub fold: usize,
    pub best_epoch: usize,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub t_o: Option<f64>,
    pub fsf_test_accuracy: Option<f64>,
    pub model: Model,
    pub fsf: Option<FsfSet>,
    pub trace: Vec<EpochRecord>,
}

impl FoldResult {
    /// `|classifier - FSF|` test accuracy gap in percentage points.
    pub fn gap_points(&self) -> Option<f64> {
        self.fsf_test_accuracy
            .map(|f| (self.test_accuracy - f).abs() * 100.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation (0 for a single value).
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        let n = values.len() as f64;
        if values.is_empty() {
            return Summary { mean: f64::NAN, std: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Summary { mean, std }
    }
}

/// Trains on `train`, scores on `test` and optionally extracts FSFs.
pub fn run_fold(
    fold: usize,
    train_set: &Dataset,
    test_set: &Dataset,
    cfg: &LearningConfig,
    enc: &EncodingConfig,
    readout: Readout,
) -> Result<FoldResult> {
    let outcome = train(train_set, cfg, enc)?;
    let train_accuracy = outcome.best_accuracy();
    let test_accuracy = evaluate(&outcome.model, test_set)?.accuracy;
    let t_o = match readout {
        Readout::Off => None,
        Readout::Fixed(t) => Some(t),
        Readout::Auto { step } => {
            let candidates = default_candidates(outcome.model.grid().t_end(), step);
            Some(select_t_o(&outcome.model, train_set, &candidates)?.t_o)
        }
    };
    let fsf = t_o.map(|t| extract_fsf(&outcome.model, t)).transpose()?;
    let fsf_test_accuracy = fsf
        .as_ref()
        .map(|f| evaluate(f, test_set).map(|e| e.accuracy))
        .transpose()?;
    Ok(FoldResult {
        fold,
        best_epoch: outcome.best_epoch,
        train_accuracy,
        test_accuracy,
        t_o,
        fsf_test_accuracy,
        model: outcome.model,
        fsf,
        trace: outcome.trace,
    })
}

/// Runs every split, spreading folds over up to `threads` worker threads.
/// Results come back in split order and do not depend on `threads`.
pub fn cross_validate(
    data: &Dataset,
    splits: &[Split],
    cfg: &LearningConfig,
    enc: &EncodingConfig,
    readout: Readout,
    threads: usize,
) -> Result<Vec<FoldResult>> {
    if splits.is_empty() {
        return Err(SefronError::InvalidArgument("no splits to run".into()));
    }
    let threads = threads.clamp(1, splits.len());
    let chunk = splits.len().div_ceil(threads);
    let results: Vec<Result<FoldResult>> = thread::scope(|scope| {
        let handles: Vec<_> = splits
            .chunks(chunk)
            .enumerate()
            .map(|(c, group)| {
                scope.spawn(move || {
                    group
                        .iter()
                        .enumerate()
                        .map(|(g, split)| {
                            let train_set = data.subset(&split.train);
                            let test_set = data.subset(&split.test);
                            run_fold(c * chunk + g, &train_set, &test_set, cfg, enc, readout)
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("fold worker panicked"))
            .collect()
    });
    results.into_iter().collect()
}

/// Worker count for fold-level parallelism.
pub fn default_threads() -> usize {
    thread::available_parallelism().map_or(1, |n| n.get())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::random_folds;
    use crate::encoding::make_config;

    #[test]
    fn summary_stats() {
        let s = Summary::of(&[0.9, 1.0]);
        assert!((s.mean - 0.95).abs() < 1e-15);
        assert!((s.std - (0.005f64).sqrt()).abs() < 1e-12);
        assert_eq!(Summary::of(&[0.5]).std, 0.0);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let features: Vec<Vec<f64>> = (0..40)
            .map(|k| {
                let c = (k % 2) as f64;
                vec![0.2 + 0.6 * c + 0.01 * (k % 7) as f64, 0.5 - 0.3 * c + 0.01 * (k % 5) as f64]
            })
            .collect();
        let labels: Vec<usize> = (0..40).map(|k| k % 2).collect();
        let data = Dataset::new(features, labels, 2).unwrap();
        let splits = random_folds(data.labels(), 3, 20, 20, 5, false).unwrap();
        let cfg = LearningConfig {
            epochs: 5,
            ..Default::default()
        };
        let enc = make_config(4, 0.7, 3.0).unwrap();
        let one = cross_validate(&data, &splits, &cfg, &enc, Readout::Fixed(2.0), 1).unwrap();
        let many = cross_validate(&data, &splits, &cfg, &enc, Readout::Fixed(2.0), 3).unwrap();
        for (a, b) in one.iter().zip(&many) {
            assert_eq!(a.fold, b.fold);
            assert_eq!(a.model, b.model);
            assert_eq!(a.fsf_test_accuracy, b.fsf_test_accuracy);
        }
    }
}
