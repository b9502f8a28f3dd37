//! JSON file formats for models and FSF sets.
//!
//! Model efficacy samples are stored as one base64 string of little-endian
//! `f64`s (class, feature, receptive field, time order) so files round-trip
//! bit-exactly and stay a manageable size for image-sized inputs.

use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::FeatureScaling;
use crate::encoding::EncodingConfig;
use crate::error::{Result, SefronError};
use crate::fsf::{FsfSet, X_GRID_POINTS};
use crate::learning::Model;
use crate::neuron::{EfficacyFunction, TimeGrid};

const MODEL_FORMAT: &str = "sefron-model";
const FSF_FORMAT: &str = "sefron-fsf";
const WEIGHT_ENCODING: &str = "f64-le-base64";

#[derive(Serialize, Deserialize)]
struct GridSpec {
    t_end: f64,
    dt: f64,
    points: usize,
}

#[derive(Serialize, Deserialize)]
struct WeightBlob {
    encoding: String,
    layout: String,
    data: String,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    encoding: EncodingConfig,
    grid: GridSpec,
    tau_eps: f64,
    n_features: usize,
    n_classes: usize,
    class_names: Vec<String>,
    scaling: Option<FeatureScaling>,
    thetas: Vec<f64>,
    class_initialized: Vec<bool>,
    weights: WeightBlob,
}

pub fn model_to_json(model: &Model) -> Result<Vec<u8>> {
    let mut bytes = Vec::with_capacity(
        model.n_classes() * model.weights.first().map_or(0, Vec::len) * model.grid.points() * 8,
    );
    for class in &model.weights {
        for w in class {
            for v in &w.samples {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        version: 1,
        encoding: model.enc.clone(),
        grid: GridSpec {
            t_end: model.grid.t_end(),
            dt: model.grid.dt(),
            points: model.grid.points(),
        },
        tau_eps: model.tau_eps,
        n_features: model.n_features,
        n_classes: model.n_classes(),
        class_names: model.class_names.clone(),
        scaling: model.scaling.clone(),
        thetas: model.thetas.clone(),
        class_initialized: model.class_initialized.clone(),
        weights: WeightBlob {
            encoding: WEIGHT_ENCODING.into(),
            layout: "class,feature,rf,time".into(),
            data: STANDARD.encode(bytes),
        },
    };
    Ok(serde_json::to_vec_pretty(&file)?)
}

pub fn model_from_json(bytes: &[u8]) -> Result<Model> {
    let file: ModelFile = serde_json::from_slice(bytes)?;
    if file.format != MODEL_FORMAT || file.version != 1 {
        return Err(SefronError::Data(format!(
            "unsupported model format {} v{}",
            file.format, file.version
        )));
    }
    if file.weights.encoding != WEIGHT_ENCODING {
        return Err(SefronError::Data(format!(
            "unsupported weight encoding {}",
            file.weights.encoding
        )));
    }
    file.encoding.validate()?;
    let grid = TimeGrid::new(file.grid.t_end, file.grid.dt)?;
    if grid.points() != file.grid.points {
        return Err(SefronError::Data("grid point count does not match t_end/dt".into()));
    }
    let n = file.n_classes;
    if file.thetas.len() != n || file.class_initialized.len() != n || file.class_names.len() != n {
        return Err(SefronError::Data("per-class arrays disagree with n_classes".into()));
    }
    let raw = STANDARD
        .decode(file.weights.data.as_bytes())
        .map_err(|e| SefronError::Data(format!("weight blob: {e}")))?;
    let synapses = file.n_features * file.encoding.q;
    if raw.len() != n * synapses * grid.points() * 8 {
        return Err(SefronError::Data(format!(
            "weight blob holds {} bytes, expected {}",
            raw.len(),
            n * synapses * grid.points() * 8
        )));
    }
    let mut values = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")));
    let weights = (0..n)
        .map(|_| {
            (0..synapses)
                .map(|_| EfficacyFunction {
                    samples: values.by_ref().take(grid.points()).collect(),
                })
                .collect()
        })
        .collect();
    let model = Model {
        enc: file.encoding,
        grid,
        tau_eps: file.tau_eps,
        n_features: file.n_features,
        weights,
        thetas: file.thetas,
        class_initialized: file.class_initialized,
        scaling: file.scaling,
        class_names: file.class_names,
    };
    if !model.is_finite() {
        return Err(SefronError::Numeric("model file contains non-finite values".into()));
    }
    Ok(model)
}

/// SHA-256 (hex) of the model's serialized form.
pub fn model_hash(model: &Model) -> Result<String> {
    Ok(hex::encode(Sha256::digest(model_to_json(model)?)))
}

pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    fs::write(path, model_to_json(model)?).map_err(|e| SefronError::io(path, e))
}

pub fn load_model(path: &Path) -> Result<Model> {
    let bytes = fs::read(path).map_err(|e| SefronError::io(path, e))?;
    model_from_json(&bytes)
}

#[derive(Serialize, Deserialize)]
struct XGridSpec {
    start: f64,
    end: f64,
    points: usize,
}

#[derive(Serialize, Deserialize)]
struct FsfTable {
    class: usize,
    feature: usize,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct FsfFile {
    format: String,
    version: u32,
    t_o: f64,
    x_grid: XGridSpec,
    n_classes: usize,
    n_features: usize,
    class_names: Vec<String>,
    thetas: Vec<f64>,
    scaling: Option<FeatureScaling>,
    model_hash: Option<String>,
    tables: Vec<FsfTable>,
}

pub fn fsf_to_json(fsf: &FsfSet) -> Result<Vec<u8>> {
    let tables = (0..fsf.n_classes())
        .flat_map(|j| {
            (0..fsf.n_features()).map(move |i| FsfTable {
                class: j,
                feature: i,
                values: fsf.psi[j][i].clone(),
            })
        })
        .collect();
    let file = FsfFile {
        format: FSF_FORMAT.into(),
        version: 1,
        t_o: fsf.t_o,
        x_grid: XGridSpec {
            start: 0.0,
            end: 1.0,
            points: X_GRID_POINTS,
        },
        n_classes: fsf.n_classes(),
        n_features: fsf.n_features(),
        class_names: fsf.class_names.clone(),
        thetas: fsf.thetas.clone(),
        scaling: fsf.scaling.clone(),
        model_hash: fsf.model_hash.clone(),
        tables,
    };
    Ok(serde_json::to_vec(&file)?)
}

pub fn fsf_from_json(bytes: &[u8]) -> Result<FsfSet> {
    let file: FsfFile = serde_json::from_slice(bytes)?;
    if file.format != FSF_FORMAT || file.version != 1 {
        return Err(SefronError::Data(format!(
            "unsupported FSF format {} v{}",
            file.format, file.version
        )));
    }
    if file.x_grid.start != 0.0 || file.x_grid.end != 1.0 || file.x_grid.points != X_GRID_POINTS {
        return Err(SefronError::Data(format!(
            "x grid must be {X_GRID_POINTS} points over [0, 1]"
        )));
    }
    let (n, m) = (file.n_classes, file.n_features);
    if n == 0 || m == 0 || file.tables.len() != n * m {
        return Err(SefronError::Data(format!(
            "expected {} tables, found {}",
            n * m,
            file.tables.len()
        )));
    }
    let mut psi = vec![vec![Vec::new(); m]; n];
    for t in file.tables {
        if t.class >= n || t.feature >= m || !psi[t.class][t.feature].is_empty() {
            return Err(SefronError::Data(format!(
                "bad or duplicate table (class {}, feature {})",
                t.class, t.feature
            )));
        }
        psi[t.class][t.feature] = t.values;
    }
    let mut fsf = FsfSet::from_tables(file.t_o, psi, file.thetas)?;
    if file.class_names.len() != n {
        return Err(SefronError::Data("class name count does not match".into()));
    }
    fsf.class_names = file.class_names;
    fsf.scaling = file.scaling;
    fsf.model_hash = file.model_hash;
    Ok(fsf)
}

pub fn save_fsf(fsf: &FsfSet, path: &Path) -> Result<()> {
    fs::write(path, fsf_to_json(fsf)?).map_err(|e| SefronError::io(path, e))
}

pub fn load_fsf(path: &Path) -> Result<FsfSet> {
    let bytes = fs::read(path).map_err(|e| SefronError::io(path, e))?;
    fsf_from_json(&bytes)
}
