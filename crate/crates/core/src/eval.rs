//! One evaluator for both the time-domain classifier and the FSF classifier.

use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Result, SefronError};
use crate::fsf::FsfSet;
use crate::learning::Model;

pub trait Classifier {
    fn n_features(&self) -> usize;
    fn n_classes(&self) -> usize;
    fn predict(&self, x: &[f64]) -> Result<usize>;
}

impl Classifier for Model {
    fn n_features(&self) -> usize {
        Model::n_features(self)
    }

    fn n_classes(&self) -> usize {
        Model::n_classes(self)
    }

    fn predict(&self, x: &[f64]) -> Result<usize> {
        Model::predict(self, x)
    }
}

impl Classifier for FsfSet {
    fn n_features(&self) -> usize {
        FsfSet::n_features(self)
    }

    fn n_classes(&self) -> usize {
        FsfSet::n_classes(self)
    }

    fn predict(&self, x: &[f64]) -> Result<usize> {
        FsfSet::predict(self, x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    /// `confusion[true][predicted]`
    pub confusion: Vec<Vec<usize>>,
}

pub fn evaluate<C: Classifier + ?Sized>(clf: &C, data: &Dataset) -> Result<Evaluation> {
    if data.n_features() != clf.n_features() {
        return Err(SefronError::Data(format!(
            "dataset has {} features, classifier expects {}",
            data.n_features(),
            clf.n_features()
        )));
    }
    if data.is_empty() {
        return Err(SefronError::Data("cannot evaluate on an empty dataset".into()));
    }
    let n = clf.n_classes().max(data.n_classes());
    let mut confusion = vec![vec![0; n]; n];
    let mut correct = 0;
    for k in 0..data.len() {
        let predicted = clf.predict(data.features(k))?;
        let truth = data.label(k);
        confusion[truth][predicted] += 1;
        if predicted == truth {
            correct += 1;
        }
    }
    Ok(Evaluation {
        accuracy: correct as f64 / data.len() as f64,
        correct,
        total: data.len(),
        confusion,
    })
}
