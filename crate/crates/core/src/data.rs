//! Dataset ingestion and evaluation splits.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SefronError};

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// Per-column ranges used to map raw feature values onto `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaling {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl FeatureScaling {
    /// Scales one raw row; values outside the fitted range are clamped.
    pub fn apply(&self, raw: &[f64]) -> Result<Vec<f64>> {
        if raw.len() != self.mins.len() {
            return Err(SefronError::InvalidArgument(format!(
                "expected {} raw features, got {}",
                self.mins.len(),
                raw.len()
            )));
        }
        Ok(raw
            .iter()
            .zip(self.mins.iter().zip(&self.maxs))
            .map(|(&v, (&lo, &hi))| {
                if hi > lo {
                    ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            })
            .collect())
    }
}

/// Labelled samples with features in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<Vec<f64>>,
    labels: Vec<usize>,
    n_classes: usize,
    feature_names: Option<Vec<String>>,
    class_names: Vec<String>,
    scaling: Option<FeatureScaling>,
}

impl Dataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(SefronError::Data(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        let m = features.first().map_or(0, Vec::len);
        for (k, row) in features.iter().enumerate() {
            if row.len() != m {
                return Err(SefronError::Data(format!(
                    "row {k} has {} features, expected {m}",
                    row.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(SefronError::Data(format!("row {k} has value {v} outside [0, 1]")));
            }
        }
        if let Some(l) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(SefronError::Data(format!("label {l} out of range for {n_classes} classes")));
        }
        Ok(Dataset {
            features,
            labels,
            n_classes,
            feature_names: None,
            class_names: (0..n_classes).map(|j| j.to_string()).collect(),
            scaling: None,
        })
    }

    pub fn with_names(mut self, feature_names: Option<Vec<String>>, class_names: Vec<String>) -> Result<Self> {
        if class_names.len() != self.n_classes {
            return Err(SefronError::Data("class name count does not match class count".into()));
        }
        if let Some(names) = &feature_names {
            if names.len() != self.n_features() {
                return Err(SefronError::Data("feature name count does not match feature count".into()));
            }
        }
        self.feature_names = feature_names;
        self.class_names = class_names;
        Ok(self)
    }

    pub fn with_scaling(mut self, scaling: Option<FeatureScaling>) -> Self {
        self.scaling = scaling;
        self
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn features(&self, k: usize) -> &[f64] {
        &self.features[k]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn label(&self, k: usize) -> usize {
        self.labels[k]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn scaling(&self) -> Option<&FeatureScaling> {
        self.scaling.as_ref()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Rows at `indices`, in that order; names and scaling are kept.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: indices.iter().map(|&k| self.features[k].clone()).collect(),
            labels: indices.iter().map(|&k| self.labels[k]).collect(),
            n_classes: self.n_classes,
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
            scaling: self.scaling.clone(),
        }
    }
}

/// Which CSV column holds the class label.
#[derive(Debug, Clone, PartialEq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
    Last,
}

impl From<&str> for LabelColumn {
    fn from(s: &str) -> Self {
        match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        }
    }
}

/// Raw table before normalization.
#[derive(Debug, Clone)]
pub struct RawTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<String>,
}

/// Parses a headed CSV file. Labels are kept as strings.
pub fn read_csv(path: &Path, label: &LabelColumn) -> Result<RawTable> {
    let file = File::open(path).map_err(|e| SefronError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));
    let parse_err = |line: usize, message: String| SefronError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(parse_err(1, "missing header row".into()));
    }
    let label_idx = match label {
        LabelColumn::Name(name) => header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse_err(1, format!("no column named '{name}'")))?,
        LabelColumn::Index(i) if *i < header.len() => *i,
        LabelColumn::Index(i) => {
            return Err(parse_err(1, format!("label column {i} out of range ({} columns)", header.len())))
        }
        LabelColumn::Last => header.len() - 1,
    };
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != header.len() {
            return Err(parse_err(
                line,
                format!("expected {} fields, found {}", header.len(), record.len()),
            ));
        }
        let mut row = Vec::with_capacity(header.len() - 1);
        for (c, field) in record.iter().enumerate() {
            if c == label_idx {
                labels.push(field.to_string());
                continue;
            }
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(line, format!("column '{}': '{field}' is not numeric", header[c])))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("column '{}': non-finite value", header[c])));
            }
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(1, "no data rows".into()));
    }
    let header = header
        .into_iter()
        .enumerate()
        .filter(|(c, _)| *c != label_idx)
        .map(|(_, h)| h)
        .collect();
    Ok(RawTable { header, rows, labels })
}

/// Dense class indices in order of first appearance.
pub fn index_labels(labels: &[String]) -> (Vec<usize>, Vec<String>) {
    let mut names: Vec<String> = Vec::new();
    let mut lookup: HashMap<&str, usize> = HashMap::new();
    let idx = labels
        .iter()
        .map(|l| {
            *lookup.entry(l.as_str()).or_insert_with(|| {
                names.push(l.clone());
                names.len() - 1
            })
        })
        .collect();
    (idx, names)
}

/// Loads a CSV dataset and min-max normalizes every feature column.
pub fn load_csv(path: &Path, label: &LabelColumn) -> Result<Dataset> {
    let raw = read_csv(path, label)?;
    let (features, scaling) = normalize_minmax(&raw.rows);
    let (labels, names) = index_labels(&raw.labels);
    let n = names.len();
    Dataset::new(features, labels, n)?
        .with_names(Some(raw.header), names)
        .map(|d| d.with_scaling(Some(scaling)))
}

/// Loads a CSV dataset using an existing scaling (for example, the one stored
/// in a trained model) and class names, so indices line up with the model.
pub fn load_csv_scaled(
    path: &Path,
    label: &LabelColumn,
    scaling: &FeatureScaling,
    class_names: &[String],
) -> Result<Dataset> {
    let raw = read_csv(path, label)?;
    if raw.header.len() != scaling.mins.len() {
        return Err(SefronError::Data(format!(
            "{} has {} features, expected {}",
            path.display(),
            raw.header.len(),
            scaling.mins.len()
        )));
    }
    let features = raw
        .rows
        .iter()
        .map(|r| scaling.apply(r))
        .collect::<Result<Vec<_>>>()?;
    let labels = raw
        .labels
        .iter()
        .map(|l| {
            class_names
                .iter()
                .position(|c| c == l)
                .ok_or_else(|| SefronError::Data(format!("label '{l}' is not a known class")))
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(features, labels, class_names.len())?
        .with_names(Some(raw.header), class_names.to_vec())
        .map(|d| d.with_scaling(Some(scaling.clone())))
}

/// Per-column `(x - min) / (max - min)`; constant columns map to 0.
pub fn normalize_minmax(raw: &[Vec<f64>]) -> (Vec<Vec<f64>>, FeatureScaling) {
    let m = raw.first().map_or(0, Vec::len);
    let mut mins = vec![f64::INFINITY; m];
    let mut maxs = vec![f64::NEG_INFINITY; m];
    for row in raw {
        for (c, &v) in row.iter().enumerate() {
            mins[c] = mins[c].min(v);
            maxs[c] = maxs[c].max(v);
        }
    }
    let scaling = FeatureScaling { mins, maxs };
    let features = raw
        .iter()
        .map(|r| {
            r.iter()
                .zip(scaling.mins.iter().zip(&scaling.maxs))
                .map(|(&v, (&lo, &hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
                .collect()
        })
        .collect();
    (features, scaling)
}

fn read_u32(buf: &[u8], at: usize) -> u32 {
    u32::from_be_bytes([buf[at], buf[at + 1], buf[at + 2], buf[at + 3]])
}

fn read_all(path: &Path) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    File::open(path)
        .and_then(|f| BufReader::new(f).read_to_end(&mut buf))
        .map_err(|e| SefronError::io(path, e))?;
    Ok(buf)
}

/// Loads an IDX image/label pair; pixels are divided by 255.
pub fn load_idx(images: &Path, labels: &Path) -> Result<Dataset> {
    let img = read_all(images)?;
    if img.len() < 16 {
        return Err(SefronError::Data(format!("{}: truncated IDX header", images.display())));
    }
    let magic = read_u32(&img, 0);
    if magic != IDX_IMAGES_MAGIC {
        return Err(SefronError::Data(format!(
            "{}: bad image magic {magic:#010x}",
            images.display()
        )));
    }
    let n = read_u32(&img, 4) as usize;
    let rows = read_u32(&img, 8) as usize;
    let cols = read_u32(&img, 12) as usize;
    let m = rows * cols;
    if img.len() != 16 + n * m {
        return Err(SefronError::Data(format!(
            "{}: expected {} pixel bytes, found {}",
            images.display(),
            n * m,
            img.len() - 16
        )));
    }
    let lab = read_all(labels)?;
    if lab.len() < 8 {
        return Err(SefronError::Data(format!("{}: truncated IDX header", labels.display())));
    }
    let magic = read_u32(&lab, 0);
    if magic != IDX_LABELS_MAGIC {
        return Err(SefronError::Data(format!(
            "{}: bad label magic {magic:#010x}",
            labels.display()
        )));
    }
    let n_labels = read_u32(&lab, 4) as usize;
    if n_labels != n {
        return Err(SefronError::Data(format!("{n} images but {n_labels} labels")));
    }
    if lab.len() != 8 + n {
        return Err(SefronError::Data(format!("{}: truncated label payload", labels.display())));
    }
    let labels: Vec<usize> = lab[8..].iter().map(|&b| b as usize).collect();
    let n_classes = labels.iter().max().map_or(0, |&l| l + 1);
    let features = img[16..]
        .chunks_exact(m.max(1))
        .take(n)
        .map(|px| px.iter().map(|&p| p as f64 / 255.0).collect())
        .collect();
    Dataset::new(features, labels, n_classes)
}

/// Writes `pixels` (row-major, `n * rows * cols` bytes) and labels as an IDX pair.
pub fn write_idx(
    images: &Path,
    labels: &Path,
    pixels: &[u8],
    label_bytes: &[u8],
    rows: usize,
    cols: usize,
) -> Result<()> {
    let n = label_bytes.len();
    if pixels.len() != n * rows * cols {
        return Err(SefronError::InvalidArgument("pixel buffer does not match label count".into()));
    }
    let write = |path: &Path, header: &[u32], body: &[u8]| -> Result<()> {
        let f = File::create(path).map_err(|e| SefronError::io(path, e))?;
        let mut w = BufWriter::new(f);
        for h in header {
            w.write_all(&h.to_be_bytes()).map_err(|e| SefronError::io(path, e))?;
        }
        w.write_all(body).map_err(|e| SefronError::io(path, e))?;
        w.flush().map_err(|e| SefronError::io(path, e))
    };
    write(images, &[IDX_IMAGES_MAGIC, n as u32, rows as u32, cols as u32], pixels)?;
    write(labels, &[IDX_LABELS_MAGIC, n as u32], label_bytes)
}

/// Disjoint train/test index lists drawn from one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// `k` independent random partitions with fixed train/test sizes.
///
/// Each split draws a fresh permutation; the first `train` indices form the
/// training set and the next `test` the test set. With `stratified`, each
/// class contributes in proportion to its frequency (largest remainder).
pub fn random_folds(
    labels: &[usize],
    k: usize,
    train: usize,
    test: usize,
    seed: u64,
    stratified: bool,
) -> Result<Vec<Split>> {
    let n = labels.len();
    if k == 0 {
        return Err(SefronError::InvalidArgument("at least one fold is required".into()));
    }
    if train == 0 || train > n || train + test > n {
        return Err(SefronError::InvalidArgument(format!(
            "cannot draw {train} train + {test} test samples from {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..k)
        .map(|_| {
            if stratified {
                stratified_split(labels, train, test, &mut rng)
            } else {
                let mut perm: Vec<usize> = (0..n).collect();
                perm.shuffle(&mut rng);
                Ok(Split {
                    train: perm[..train].to_vec(),
                    test: perm[train..train + test].to_vec(),
                })
            }
        })
        .collect()
}

fn proportional(counts: &[usize], total: usize, want: usize) -> Vec<usize> {
    let exact: Vec<f64> = counts.iter().map(|&c| c as f64 * want as f64 / total as f64).collect();
    let mut alloc: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())));
    let mut left = want - alloc.iter().sum::<usize>();
    for c in order {
        if left == 0 {
            break;
        }
        if alloc[c] < counts[c] {
            alloc[c] += 1;
            left -= 1;
        }
    }
    alloc
}

fn stratified_split(labels: &[usize], train: usize, test: usize, rng: &mut ChaCha8Rng) -> Result<Split> {
    let n_classes = labels.iter().max().map_or(0, |&l| l + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (k, &l) in labels.iter().enumerate() {
        by_class[l].push(k);
    }
    let counts: Vec<usize> = by_class.iter().map(Vec::len).collect();
    let n_train = proportional(&counts, labels.len(), train);
    let remaining: Vec<usize> = counts.iter().zip(&n_train).map(|(c, t)| c - t).collect();
    let n_test = proportional(&remaining, remaining.iter().sum::<usize>().max(1), test);
    let mut split = Split { train: Vec::new(), test: Vec::new() };
    for (c, members) in by_class.iter_mut().enumerate() {
        members.shuffle(rng);
        split.train.extend(&members[..n_train[c]]);
        split.test.extend(&members[n_train[c]..n_train[c] + n_test[c]]);
    }
    split.train.shuffle(rng);
    split.test.shuffle(rng);
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn small_csv() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "a.csv", "f1,f2,label\n1,2,a\n3,4,b\n5,6,a\n");
        let d = load_csv(&p, &LabelColumn::Name("label".into())).unwrap();
        assert_eq!((d.len(), d.n_features(), d.n_classes()), (3, 2, 2));
        assert_eq!(d.labels(), &[0, 1, 0]);
        assert_eq!(d.class_names(), &["a".to_string(), "b".to_string()]);
        assert_eq!(d.features(1), &[0.5, 0.5]);
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let empty = write(dir.path(), "e.csv", "");
        assert!(load_csv(&empty, &LabelColumn::Last).is_err());
        let header_only = write(dir.path(), "h.csv", "a,b\n");
        assert!(load_csv(&header_only, &LabelColumn::Last).is_err());

        let ragged = write(dir.path(), "r.csv", "f1,f2,label\n1,2,a\n3,b\n");
        match load_csv(&ragged, &LabelColumn::Last) {
            Err(SefronError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let text = write(dir.path(), "t.csv", "f1,f2,label\n1,2,a\n3,x,b\n");
        match load_csv(&text, &LabelColumn::Last) {
            Err(SefronError::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("not numeric"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let p = write(dir.path(), "ok.csv", "f1,label\n1,a\n");
        assert!(load_csv(&p, &LabelColumn::Name("class".into())).is_err());
    }

    #[test]
    fn bundled_iris() {
        let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/iris.csv");
        let d = load_csv(&p, &LabelColumn::Name("species".into())).unwrap();
        assert_eq!((d.len(), d.n_features(), d.n_classes()), (150, 4, 3));
        assert_eq!(d.class_counts(), vec![50, 50, 50]);
    }

    #[test]
    fn minmax_examples() {
        let (f, _) = normalize_minmax(&[vec![2.0, 5.0, 0.0], vec![4.0, 5.0, 0.5], vec![6.0, 5.0, 1.0]]);
        assert_eq!(f.iter().map(|r| r[0]).collect::<Vec<_>>(), vec![0.0, 0.5, 1.0]);
        assert_eq!(f.iter().map(|r| r[1]).collect::<Vec<_>>(), vec![0.0, 0.0, 0.0]);
        assert_eq!(f.iter().map(|r| r[2]).collect::<Vec<_>>(), vec![0.0, 0.5, 1.0]);
    }

    fn idx_pair(dir: &Path, pixels: &[u8], labels: &[u8], rows: usize, cols: usize) -> (std::path::PathBuf, std::path::PathBuf) {
        let (i, l) = (dir.join("img"), dir.join("lab"));
        write_idx(&i, &l, pixels, labels, rows, cols).unwrap();
        (i, l)
    }

    #[test]
    fn idx_single_white_image() {
        let dir = tempfile::tempdir().unwrap();
        let (i, l) = idx_pair(dir.path(), &[255; 4], &[1], 2, 2);
        let d = load_idx(&i, &l).unwrap();
        assert_eq!(d.features(0), &[1.0; 4]);
        assert_eq!(d.n_classes(), 2);
    }

    #[test]
    fn idx_errors() {
        let dir = tempfile::tempdir().unwrap();
        let (i, l) = idx_pair(dir.path(), &[0; 8], &[0, 1], 2, 2);
        // count mismatch
        let l3 = dir.path().join("lab3");
        std::fs::write(&l3, [0, 0, 8, 1, 0, 0, 0, 3, 0, 1, 2]).unwrap();
        assert!(load_idx(&i, &l3).is_err());
        // magic mismatch
        assert!(load_idx(&l, &l).is_err());
        // truncated payload
        let mut bytes = std::fs::read(&i).unwrap();
        bytes.pop();
        let t = dir.path().join("trunc");
        std::fs::write(&t, bytes).unwrap();
        assert!(load_idx(&t, &l).is_err());
    }

    #[test]
    fn bundled_mnist_subset() {
        let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist");
        let d = load_idx(&root.join("t10k-images-idx3-ubyte"), &root.join("t10k-labels-idx1-ubyte")).unwrap();
        assert_eq!((d.len(), d.n_features(), d.n_classes()), (1000, 784, 10));
    }

    #[test]
    fn folds_are_reproducible_partitions() {
        let labels: Vec<usize> = (0..150).map(|k| k / 50).collect();
        let a = random_folds(&labels, 10, 75, 75, 9, false).unwrap();
        let b = random_folds(&labels, 10, 75, 75, 9, false).unwrap();
        assert_eq!(a, b);
        for s in &a {
            let tr: HashSet<_> = s.train.iter().collect();
            let te: HashSet<_> = s.test.iter().collect();
            assert_eq!((tr.len(), te.len()), (75, 75));
            assert!(tr.is_disjoint(&te));
        }
        assert_ne!(a[0], a[1]);
        let single = random_folds(&vec![0; 2310], 1, 210, 2100, 1, false).unwrap();
        assert_eq!((single[0].train.len(), single[0].test.len()), (210, 2100));
        assert!(random_folds(&labels, 1, 151, 0, 0, false).is_err());
    }

    #[test]
    fn stratified_folds_keep_class_balance() {
        let labels: Vec<usize> = (0..150).map(|k| k / 50).collect();
        for s in random_folds(&labels, 3, 75, 75, 1, true).unwrap() {
            let mut c = [0; 3];
            for &k in &s.train {
                c[labels[k]] += 1;
            }
            assert_eq!(c.iter().sum::<usize>(), 75);
            assert!(c.iter().all(|&x| (24..=26).contains(&x)));
            assert_eq!(s.test.len(), 75);
        }
    }

    proptest! {
        #[test]
        fn normalization_is_idempotent(rows in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 3), 1..20)) {
            let (once, _) = normalize_minmax(&rows);
            let (twice, _) = normalize_minmax(&once);
            for (a, b) in once.iter().flatten().zip(twice.iter().flatten()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn idx_round_trip(pixels in prop::collection::vec(any::<u8>(), 12), labels in prop::collection::vec(0u8..10, 3)) {
            let dir = tempfile::tempdir().unwrap();
            let (i, l) = idx_pair(dir.path(), &pixels, &labels, 2, 2);
            let d = load_idx(&i, &l).unwrap();
            let back: Vec<u8> = d.rows().iter().flatten().map(|v| (v * 255.0).round() as u8).collect();
            prop_assert_eq!(back, pixels);
            prop_assert_eq!(d.labels().iter().map(|&x| x as u8).collect::<Vec<_>>(), labels);
        }
    }
}
