//! Seeded synthetic multi-modal classification datasets.
//!
//! Each modality mixes three feature groups: class-conditional Gaussian
//! informative dims, pure noise dims, and per-row unique "bait" dims whose
//! train-row values can only be memorized, never generalized — the knob that
//! makes one modality overfit faster than another. Per-modality label noise
//! caps how much of the class signal that modality carries. Also home to
//! dataset splitting, persistence, and the multi-label sub-sampling
//! balancer.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::loss::LabelsView;
use crate::rng::RngSeed;
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModalitySpec {
    pub feature_dim: usize,
    pub informative_dim: usize,
    /// Scale of the class-mean signal relative to unit feature noise.
    pub snr: f64,
    /// Probability that a row's informative features are drawn conditioned
    /// on a random other class; caps this modality's achievable accuracy.
    pub label_noise: f64,
    /// Number of per-row unique dims.
    pub bait_dim: usize,
    /// Scale of the bait dims.
    pub bait_strength: f64,
}

impl ModalitySpec {
    fn validate(&self) -> Result<()> {
        if self.informative_dim + self.bait_dim > self.feature_dim {
            return Err(Error::Config(format!(
                "informative_dim {} + bait_dim {} exceed feature_dim {}",
                self.informative_dim, self.bait_dim, self.feature_dim
            )));
        }
        if !(0.0..1.0).contains(&self.label_noise) {
            return Err(Error::Config("label_noise must lie in [0,1)".into()));
        }
        if self.snr < 0.0 || self.bait_strength < 0.0 {
            return Err(Error::Config("snr and bait_strength must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitFractions {
    pub train: f64,
    pub holdout: f64,
    pub test: f64,
}

impl SplitFractions {
    pub fn validate(&self) -> Result<()> {
        for (name, f) in [
            ("split.train", self.train),
            ("split.holdout", self.holdout),
            ("split.test", self.test),
        ] {
            if !(0.0..1.0).contains(&f) && f != 0.0 {
                return Err(Error::Config(format!("{} must lie in [0,1)", name)));
            }
        }
        let sum = self.train + self.holdout + self.test;
        if sum > 1.0 + 1e-12 {
            return Err(Error::Config(format!(
                "split fractions sum to {} > 1 (field: split)",
                sum
            )));
        }
        if self.train <= 0.0 {
            return Err(Error::Config("split.train must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub class_count: usize,
    pub rows: usize,
    pub split: SplitFractions,
    pub modalities: Vec<ModalitySpec>,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.class_count < 2 {
            return Err(Error::Config("class_count must be at least 2".into()));
        }
        if self.rows == 0 {
            return Err(Error::Config("rows must be positive".into()));
        }
        if self.modalities.is_empty() {
            return Err(Error::Config("at least one modality required".into()));
        }
        for m in &self.modalities {
            m.validate()?;
        }
        self.split.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Labels {
    Single(Vec<u32>),
    Multi { classes: usize, hot: Vec<u8> },
}

impl Labels {
    pub fn rows(&self) -> usize {
        match self {
            Labels::Single(v) => v.len(),
            Labels::Multi { classes, hot } => hot.len() / classes,
        }
    }

    pub fn gather(&self, indices: &[u32]) -> Labels {
        match self {
            Labels::Single(v) => Labels::Single(indices.iter().map(|&i| v[i as usize]).collect()),
            Labels::Multi { classes, hot } => {
                let mut out = Vec::with_capacity(indices.len() * classes);
                for &i in indices {
                    let i = i as usize;
                    out.extend_from_slice(&hot[i * classes..(i + 1) * classes]);
                }
                Labels::Multi {
                    classes: *classes,
                    hot: out,
                }
            }
        }
    }

    pub fn view(&self) -> LabelsView<'_> {
        match self {
            Labels::Single(v) => LabelsView::Single(v),
            Labels::Multi { classes, hot } => LabelsView::Multi {
                hot,
                classes: *classes,
            },
        }
    }

    pub fn is_multi(&self) -> bool {
        matches!(self, Labels::Multi { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModalityData {
    pub id: String,
    pub features: Tensor,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<u32>,
    pub holdout: Vec<u32>,
    pub test: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub class_count: usize,
    pub modalities: Vec<ModalityData>,
    pub labels: Labels,
    pub splits: Splits,
}

/// One gathered minibatch: aligned per-modality feature rows plus labels.
pub struct Batch {
    pub inputs: Vec<Tensor>,
    pub labels: Labels,
}

impl Dataset {
    pub fn rows(&self) -> usize {
        self.labels.rows()
    }

    pub fn modality_dims(&self) -> Vec<usize> {
        self.modalities.iter().map(|m| m.features.cols()).collect()
    }

    pub fn batch(&self, indices: &[u32]) -> Result<Batch> {
        let inputs = self
            .modalities
            .iter()
            .map(|m| m.features.gather_rows(indices))
            .collect::<Result<Vec<_>>>()?;
        Ok(Batch {
            inputs,
            labels: self.labels.gather(indices),
        })
    }

    fn check_aligned(&self) -> Result<()> {
        let rows = self.rows();
        for m in &self.modalities {
            if m.features.rows() != rows {
                return Err(Error::Shape {
                    context: "Dataset",
                    detail: format!(
                        "modality {} has {} rows, labels have {}",
                        m.id,
                        m.features.rows(),
                        rows
                    ),
                });
            }
        }
        Ok(())
    }
}

/// Generates the multi-modal classification dataset described by `spec` and
/// splits it. Identical spec + seed gives a bit-identical dataset.
pub fn gen_multimodal(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let root = RngSeed(spec.seed);
    let mut label_rng = root.derive("labels").stream();
    let labels: Vec<u32> = (0..spec.rows)
        .map(|_| label_rng.gen_range(0..spec.class_count as u32))
        .collect();

    let mut modalities = Vec::with_capacity(spec.modalities.len());
    for (m, mspec) in spec.modalities.iter().enumerate() {
        let mut class_rng = root.derive(&format!("class-means:{}", m)).stream();
        // fixed per-class mean directions in the informative subspace
        let means: Vec<Vec<f64>> = (0..spec.class_count)
            .map(|_| {
                (0..mspec.informative_dim)
                    .map(|_| class_rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect();
        let mut rng = root.derive(&format!("features:{}", m)).stream();
        let noise_dim = mspec.feature_dim - mspec.informative_dim - mspec.bait_dim;
        let mut data = Vec::with_capacity(spec.rows * mspec.feature_dim);
        for &y in &labels {
            let effective = if mspec.label_noise > 0.0 && rng.gen::<f64>() < mspec.label_noise {
                rng.gen_range(0..spec.class_count as u32)
            } else {
                y
            };
            let mean = &means[effective as usize];
            for value in mean.iter().take(mspec.informative_dim) {
                let eps: f64 = rng.sample(StandardNormal);
                data.push(mspec.snr * value + eps);
            }
            for _ in 0..noise_dim {
                data.push(rng.sample::<f64, _>(StandardNormal));
            }
            for _ in 0..mspec.bait_dim {
                let eps: f64 = rng.sample(StandardNormal);
                data.push(mspec.bait_strength * eps);
            }
        }
        modalities.push(ModalityData {
            id: format!("m{}", m),
            features: Tensor::from_vec(vec![spec.rows, mspec.feature_dim], data)?,
        });
    }

    let mut dataset = Dataset {
        class_count: spec.class_count,
        modalities,
        labels: Labels::Single(labels),
        splits: Splits::default(),
    };
    dataset.check_aligned()?;
    split(
        &mut dataset,
        spec.split,
        RngSeed(spec.seed).derive("split").0,
    )?;
    Ok(dataset)
}

/// Synthetic multi-hot dataset with one noise modality; per-class priors
/// control the volume skew. Rows drawing no label get one forced from the
/// prior distribution.
pub fn gen_multilabel(rows: usize, priors: &[f64], feature_dim: usize, seed: u64) -> Result<Dataset> {
    if priors.is_empty() || priors.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return Err(Error::Config("class priors must lie in [0,1]".into()));
    }
    if rows == 0 {
        return Err(Error::Config("rows must be positive".into()));
    }
    let classes = priors.len();
    let root = RngSeed(seed);
    let mut rng = root.derive("multilabel").stream();
    let mut hot = vec![0u8; rows * classes];
    let total: f64 = priors.iter().sum();
    for r in 0..rows {
        let mut any = false;
        for (c, &p) in priors.iter().enumerate() {
            if rng.gen::<f64>() < p {
                hot[r * classes + c] = 1;
                any = true;
            }
        }
        if !any {
            let mut u = rng.gen::<f64>() * total;
            let mut chosen = classes - 1;
            for (c, &p) in priors.iter().enumerate() {
                if u < p {
                    chosen = c;
                    break;
                }
                u -= p;
            }
            hot[r * classes + chosen] = 1;
        }
    }
    let mut frng = root.derive("features").stream();
    let data: Vec<f64> = (0..rows * feature_dim)
        .map(|_| frng.sample::<f64, _>(StandardNormal))
        .collect();
    let mut dataset = Dataset {
        class_count: classes,
        modalities: vec![ModalityData {
            id: "m0".into(),
            features: Tensor::from_vec(vec![rows, feature_dim], data)?,
        }],
        labels: Labels::Multi { classes, hot },
        splits: Splits::default(),
    };
    split(
        &mut dataset,
        SplitFractions {
            train: 0.8,
            holdout: 0.1,
            test: 0.1,
        },
        root.derive("split").0,
    )?;
    Ok(dataset)
}

/// Disjoint seeded partition into train/holdout/test tags. Single-label data
/// is stratified per class; multi-hot rows are partitioned globally.
pub fn split(dataset: &mut Dataset, fractions: SplitFractions, seed: u64) -> Result<()> {
    fractions.validate()?;
    let rows = dataset.rows() as u32;
    let mut splits = Splits::default();
    let mut assign = |pool: Vec<u32>, rng: &mut rand_chacha::ChaCha8Rng| {
        let mut pool = pool;
        pool.shuffle(rng);
        let n = pool.len();
        let n_train = (fractions.train * n as f64).round() as usize;
        let n_holdout = (fractions.holdout * n as f64).round() as usize;
        let n_test = (fractions.test * n as f64).round() as usize;
        let mut iter = pool.into_iter();
        splits.train.extend(iter.by_ref().take(n_train));
        splits.holdout.extend(iter.by_ref().take(n_holdout));
        splits.test.extend(iter.by_ref().take(n_test));
        // leftover rows from rounding stay untagged
    };
    let mut rng = RngSeed(seed).derive("split").stream();
    match &dataset.labels {
        Labels::Single(labels) => {
            for class in 0..dataset.class_count as u32 {
                let pool: Vec<u32> = (0..rows).filter(|&r| labels[r as usize] == class).collect();
                assign(pool, &mut rng);
            }
        }
        Labels::Multi { .. } => {
            assign((0..rows).collect(), &mut rng);
        }
    }
    splits.train.sort_unstable();
    splits.holdout.sort_unstable();
    splits.test.sort_unstable();
    dataset.splits = splits;
    Ok(())
}

/// Outcome of the multi-label balancing pass.
pub struct BalanceOutcome {
    pub dataset: Dataset,
    /// Original class indices that survived the volume threshold, in order.
    pub kept_classes: Vec<u32>,
    /// Per-kept-class volume in the filtered source.
    pub source_volumes: Vec<usize>,
    /// Per-kept-class volume in the balanced output.
    pub output_volumes: Vec<usize>,
    /// Original row indices accepted, in acceptance order.
    pub accepted_rows: Vec<u32>,
}

/// Sub-samples and balances a multi-label dataset: classes with volume below
/// `min_volume` are removed, entries are visited in a seeded shuffle, and
/// each entry is accepted with probability `(N − V_c′)/(V_c − V_c′)` for its
/// currently rarest class c (r drawn as an integer in the half-open range
/// `[0, V_c − V_c′)`, accepted iff `r < N − V_c′`).
///
/// Heavy label co-occurrence can push a class past `target_volume` when it
/// co-occurs with rarer classes; that is inherited behavior, not corrected
/// here.
pub fn balance_multilabel(
    dataset: &Dataset,
    min_volume: usize,
    target_volume: usize,
    seed: u64,
) -> Result<BalanceOutcome> {
    let Labels::Multi { classes, hot } = &dataset.labels else {
        return Err(Error::InvalidArgument(
            "balance_multilabel requires multi-hot labels".into(),
        ));
    };
    let classes = *classes;
    let rows = dataset.rows();

    // class volumes in the source
    let mut volumes = vec![0usize; classes];
    for r in 0..rows {
        for c in 0..classes {
            if hot[r * classes + c] != 0 {
                volumes[c] += 1;
            }
        }
    }
    let kept_classes: Vec<u32> = (0..classes as u32)
        .filter(|&c| volumes[c as usize] >= min_volume)
        .collect();
    if kept_classes.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no class reaches the minimum volume {}",
            min_volume
        )));
    }
    let remap: Vec<Option<usize>> = (0..classes)
        .map(|c| kept_classes.iter().position(|&k| k as usize == c))
        .collect();

    // source volumes on the filtered label space, fixed before the pass
    let source_volumes: Vec<usize> = kept_classes.iter().map(|&c| volumes[c as usize]).collect();

    let mut order: Vec<u32> = (0..rows as u32).collect();
    let mut rng = RngSeed(seed).derive("balance").stream();
    order.shuffle(&mut rng);

    let kept = kept_classes.len();
    let mut output_volumes = vec![0usize; kept];
    let mut accepted_rows: Vec<u32> = Vec::new();
    for &row in &order {
        let r = row as usize;
        // surviving classes of this entry
        let entry_classes: Vec<usize> = (0..classes)
            .filter(|&c| hot[r * classes + c] != 0)
            .filter_map(|c| remap[c])
            .collect();
        if entry_classes.is_empty() {
            continue;
        }
        // class with the smallest current output volume (ties: smallest index)
        let c = *entry_classes
            .iter()
            .min_by_key(|&&c| (output_volumes[c], c))
            .expect("nonempty");
        let v_c = source_volumes[c];
        let v_c_out = output_volumes[c];
        debug_assert!(v_c > v_c_out);
        let range = (v_c - v_c_out) as u64;
        let r_draw = rng.gen_range(0..range);
        let threshold = target_volume.saturating_sub(v_c_out) as u64;
        if r_draw < threshold {
            accepted_rows.push(row);
            for &ec in &entry_classes {
                output_volumes[ec] += 1;
            }
        }
    }

    // assemble the balanced dataset on the kept label space
    let mut new_hot = Vec::with_capacity(accepted_rows.len() * kept);
    for &row in &accepted_rows {
        let r = row as usize;
        for &kc in &kept_classes {
            new_hot.push(hot[r * classes + kc as usize]);
        }
    }
    let modalities = dataset
        .modalities
        .iter()
        .map(|m| {
            Ok(ModalityData {
                id: m.id.clone(),
                features: m.features.gather_rows(&accepted_rows)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    // re-tag splits: keep the tag of each surviving row, renumbered
    let mut new_index = vec![None::<u32>; rows];
    for (new, &old) in accepted_rows.iter().enumerate() {
        new_index[old as usize] = Some(new as u32);
    }
    let retag = |tags: &[u32]| -> Vec<u32> {
        let mut out: Vec<u32> = tags
            .iter()
            .filter_map(|&t| new_index[t as usize])
            .collect();
        out.sort_unstable();
        out
    };
    let splits = Splits {
        train: retag(&dataset.splits.train),
        holdout: retag(&dataset.splits.holdout),
        test: retag(&dataset.splits.test),
    };

    Ok(BalanceOutcome {
        dataset: Dataset {
            class_count: kept,
            modalities,
            labels: Labels::Multi {
                classes: kept,
                hot: new_hot,
            },
            splits,
        },
        kept_classes,
        source_volumes,
        output_volumes,
        accepted_rows,
    })
}

pub const DATASET_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    class_count: usize,
    rows: usize,
    modalities: Vec<ManifestModality>,
    labels: ManifestLabels,
    splits: Splits,
}

#[derive(Serialize, Deserialize)]
struct ManifestModality {
    id: String,
    dim: usize,
    file: String,
}

#[derive(Serialize, Deserialize)]
struct ManifestLabels {
    kind: String,
    classes: usize,
    file: String,
}

/// Persists a dataset as a directory: `manifest.json` plus one row-major
/// little-endian f64 matrix per modality and a binary labels file (u32 per
/// row for single-label, one byte per class per row for multi-hot).
pub fn save_dataset(dataset: &Dataset, dir: &Path) -> Result<()> {
    dataset.check_aligned()?;
    fs::create_dir_all(dir)?;
    let mut modalities = Vec::new();
    for m in &dataset.modalities {
        let file = format!("{}.f64", m.id);
        let mut bytes = Vec::with_capacity(m.features.len() * 8);
        for v in m.features.data() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        fs::File::create(dir.join(&file))?.write_all(&bytes)?;
        modalities.push(ManifestModality {
            id: m.id.clone(),
            dim: m.features.cols(),
            file,
        });
    }
    let labels = match &dataset.labels {
        Labels::Single(v) => {
            let mut bytes = Vec::with_capacity(v.len() * 4);
            for y in v {
                bytes.extend_from_slice(&y.to_le_bytes());
            }
            fs::File::create(dir.join("labels.bin"))?.write_all(&bytes)?;
            ManifestLabels {
                kind: "single".into(),
                classes: dataset.class_count,
                file: "labels.bin".into(),
            }
        }
        Labels::Multi { classes, hot } => {
            fs::File::create(dir.join("labels.bin"))?.write_all(hot)?;
            ManifestLabels {
                kind: "multi".into(),
                classes: *classes,
                file: "labels.bin".into(),
            }
        }
    };
    let manifest = Manifest {
        format_version: DATASET_FORMAT_VERSION,
        class_count: dataset.class_count,
        rows: dataset.rows(),
        modalities,
        labels,
        splits: dataset.splits.clone(),
    };
    fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(())
}

pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let manifest: Manifest =
        serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
    if manifest.format_version != DATASET_FORMAT_VERSION {
        return Err(Error::Config(format!(
            "unsupported dataset format version {}",
            manifest.format_version
        )));
    }
    let mut modalities = Vec::new();
    for m in &manifest.modalities {
        let mut bytes = Vec::new();
        fs::File::open(dir.join(&m.file))?.read_to_end(&mut bytes)?;
        let expected = manifest.rows * m.dim * 8;
        if bytes.len() != expected {
            return Err(Error::Config(format!(
                "modality file {} has {} bytes, expected {}",
                m.file,
                bytes.len(),
                expected
            )));
        }
        let data: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        modalities.push(ModalityData {
            id: m.id.clone(),
            features: Tensor::from_vec(vec![manifest.rows, m.dim], data)?,
        });
    }
    let mut bytes = Vec::new();
    fs::File::open(dir.join(&manifest.labels.file))?.read_to_end(&mut bytes)?;
    let labels = match manifest.labels.kind.as_str() {
        "single" => {
            if bytes.len() != manifest.rows * 4 {
                return Err(Error::Config("labels file length mismatch".into()));
            }
            Labels::Single(
                bytes
                    .chunks_exact(4)
                    .map(|c| u32::from_le_bytes(c.try_into().expect("chunk of 4")))
                    .collect(),
            )
        }
        "multi" => {
            if bytes.len() != manifest.rows * manifest.labels.classes {
                return Err(Error::Config("labels file length mismatch".into()));
            }
            Labels::Multi {
                classes: manifest.labels.classes,
                hot: bytes,
            }
        }
        other => {
            return Err(Error::Config(format!("unknown label kind '{}'", other)));
        }
    };
    let dataset = Dataset {
        class_count: manifest.class_count,
        modalities,
        labels,
        splits: manifest.splits,
    };
    dataset.check_aligned()?;
    Ok(dataset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn small_spec(seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            class_count: 4,
            rows: 1000,
            split: SplitFractions {
                train: 0.8,
                holdout: 0.1,
                test: 0.1,
            },
            modalities: vec![
                ModalitySpec {
                    feature_dim: 10,
                    informative_dim: 6,
                    snr: 1.5,
                    label_noise: 0.0,
                    bait_dim: 2,
                    bait_strength: 1.0,
                },
                ModalitySpec {
                    feature_dim: 8,
                    informative_dim: 4,
                    snr: 0.5,
                    label_noise: 0.3,
                    bait_dim: 3,
                    bait_strength: 2.0,
                },
            ],
            seed,
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = gen_multimodal(&small_spec(5)).unwrap();
        let b = gen_multimodal(&small_spec(5)).unwrap();
        assert_eq!(a, b);
        let c = gen_multimodal(&small_spec(6)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn splits_are_disjoint_and_sized() {
        let ds = gen_multimodal(&small_spec(7)).unwrap();
        let mut seen = HashSet::new();
        for idx in ds
            .splits
            .train
            .iter()
            .chain(&ds.splits.holdout)
            .chain(&ds.splits.test)
        {
            assert!(seen.insert(*idx), "row {} tagged twice", idx);
        }
        let n = ds.rows() as f64;
        assert!((ds.splits.train.len() as f64 - 0.8 * n).abs() <= 8.0);
        assert!((ds.splits.holdout.len() as f64 - 0.1 * n).abs() <= 8.0);
        assert!((ds.splits.test.len() as f64 - 0.1 * n).abs() <= 8.0);
    }

    #[test]
    fn split_is_stratified_within_two_percent() {
        let ds = gen_multimodal(&small_spec(9)).unwrap();
        let Labels::Single(labels) = &ds.labels else { unreachable!() };
        let global: Vec<f64> = (0..4)
            .map(|c| labels.iter().filter(|&&y| y == c).count() as f64 / labels.len() as f64)
            .collect();
        for tags in [&ds.splits.train, &ds.splits.holdout, &ds.splits.test] {
            for c in 0..4u32 {
                let frac = tags.iter().filter(|&&r| labels[r as usize] == c).count() as f64
                    / tags.len() as f64;
                assert!(
                    (frac - global[c as usize]).abs() <= 0.02 + 2.0 / tags.len() as f64,
                    "class {} frac {} vs {}",
                    c,
                    frac,
                    global[c as usize]
                );
            }
        }
    }

    #[test]
    fn same_split_seed_gives_identical_tags() {
        let mut a = gen_multimodal(&small_spec(11)).unwrap();
        let mut b = a.clone();
        let fr = SplitFractions {
            train: 0.6,
            holdout: 0.2,
            test: 0.2,
        };
        split(&mut a, fr, 42).unwrap();
        split(&mut b, fr, 42).unwrap();
        assert_eq!(a.splits, b.splits);
    }

    #[test]
    fn fraction_overflow_is_a_config_error() {
        let mut ds = gen_multimodal(&small_spec(12)).unwrap();
        let err = split(
            &mut ds,
            SplitFractions {
                train: 0.8,
                holdout: 0.2,
                test: 0.2,
            },
            1,
        )
        .unwrap_err();
        assert!(err.to_string().contains("split"));
    }

    #[test]
    fn zero_signal_gives_chance_level_linear_probe() {
        // no informative dims, no bait: a class-mean classifier stays at chance
        let spec = SyntheticSpec {
            class_count: 4,
            rows: 2000,
            split: SplitFractions {
                train: 0.5,
                holdout: 0.25,
                test: 0.25,
            },
            modalities: vec![ModalitySpec {
                feature_dim: 10,
                informative_dim: 0,
                snr: 0.0,
                label_noise: 0.0,
                bait_dim: 0,
                bait_strength: 0.0,
            }],
            seed: 13,
        };
        let ds = gen_multimodal(&spec).unwrap();
        let acc = nearest_class_mean_accuracy(&ds);
        assert!((acc - 0.25).abs() < 0.08, "accuracy {}", acc);
    }

    #[test]
    fn strong_signal_gives_high_linear_probe_accuracy() {
        let spec = SyntheticSpec {
            class_count: 4,
            rows: 2000,
            split: SplitFractions {
                train: 0.5,
                holdout: 0.25,
                test: 0.25,
            },
            modalities: vec![ModalitySpec {
                feature_dim: 12,
                informative_dim: 10,
                snr: 4.0,
                label_noise: 0.0,
                bait_dim: 0,
                bait_strength: 0.0,
            }],
            seed: 14,
        };
        let ds = gen_multimodal(&spec).unwrap();
        let acc = nearest_class_mean_accuracy(&ds);
        assert!(acc > 0.97, "accuracy {}", acc);
    }

    /// Nearest-class-mean probe: fit on train rows, score on test rows.
    fn nearest_class_mean_accuracy(ds: &Dataset) -> f64 {
        let Labels::Single(labels) = &ds.labels else { unreachable!() };
        let x = &ds.modalities[0].features;
        let dim = x.cols();
        let mut means = vec![vec![0.0; dim]; ds.class_count];
        let mut counts = vec![0usize; ds.class_count];
        for &r in &ds.splits.train {
            let y = labels[r as usize] as usize;
            counts[y] += 1;
            for (m, v) in means[y].iter_mut().zip(x.row(r as usize)) {
                *m += v;
            }
        }
        for (mean, count) in means.iter_mut().zip(&counts) {
            for v in mean.iter_mut() {
                *v /= (*count).max(1) as f64;
            }
        }
        let mut hits = 0usize;
        for &r in &ds.splits.test {
            let row = x.row(r as usize);
            let mut best = (f64::INFINITY, 0usize);
            for (c, mean) in means.iter().enumerate() {
                let d2: f64 = row.iter().zip(mean).map(|(a, b)| (a - b) * (a - b)).sum();
                if d2 < best.0 {
                    best = (d2, c);
                }
            }
            if best.1 == labels[r as usize] as usize {
                hits += 1;
            }
        }
        hits as f64 / ds.splits.test.len() as f64
    }

    #[test]
    fn balancer_keeps_everything_when_source_at_or_below_target() {
        // single-label degenerate multi-hot input: V_c <= N accepts all rows
        let ds = gen_multilabel(300, &[0.5, 0.5], 4, 21).unwrap();
        let out = balance_multilabel(&ds, 1, 400, 3).unwrap();
        assert_eq!(out.dataset.rows(), 300);
    }

    #[test]
    fn balancer_removes_classes_below_threshold() {
        let ds = gen_multilabel(2000, &[0.5, 0.2, 0.01], 4, 22).unwrap();
        let out = balance_multilabel(&ds, 100, 600, 4).unwrap();
        // class 2 (~20 rows) is below threshold and absent from the output space
        assert_eq!(out.kept_classes, vec![0, 1]);
        assert_eq!(out.dataset.class_count, 2);
    }

    #[test]
    fn balancer_never_exceeds_source_volume_and_respects_threshold() {
        let ds = gen_multilabel(3000, &[0.5, 0.15, 0.05], 4, 23).unwrap();
        let out = balance_multilabel(&ds, 50, 400, 5).unwrap();
        for (k, (&src, &got)) in out
            .source_volumes
            .iter()
            .zip(&out.output_volumes)
            .enumerate()
        {
            assert!(got <= src, "class {} output {} over source {}", k, got, src);
        }
    }

    #[test]
    fn balancer_no_class_reaches_threshold_errors() {
        let ds = gen_multilabel(50, &[0.4, 0.4], 4, 24).unwrap();
        assert!(balance_multilabel(&ds, 1000, 2000, 6).is_err());
    }

    #[test]
    fn save_load_roundtrip_is_exact() {
        let ds = gen_multimodal(&small_spec(31)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&ds, dir.path()).unwrap();
        let back = load_dataset(dir.path()).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn save_load_multilabel_roundtrip() {
        let ds = gen_multilabel(200, &[0.6, 0.3, 0.1], 5, 32).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&ds, dir.path()).unwrap();
        let back = load_dataset(dir.path()).unwrap();
        assert_eq!(ds, back);
    }
}
