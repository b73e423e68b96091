//! Shipped default experiment: a two-modality synthetic task whose
//! modalities overfit at deliberately different rates.
//!
//! Modality "v" carries most of the class signal. Modality "a" pairs a
//! weak, label-noised signal with strong per-row bait dims, so networks fit
//! its train rows fast while gaining little on held-out data. Jointly
//! trained late fusion then beats the best uni-modal network on train
//! accuracy and loses on validation accuracy, which re-weighted training
//! corrects.

use crate::datagen::{ModalitySpec, SplitFractions, SyntheticSpec};
use crate::fusion::{ArchSpec, EncoderSpec};
use crate::nn::optim::OptimizerSpec;
use crate::ogr::MetricKind;
use crate::trainer::TrainConfig;

pub fn acceptance_dataset_spec(seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        class_count: 10,
        rows: 7100,
        split: SplitFractions {
            train: 0.7,
            holdout: 0.15,
            test: 0.15,
        },
        modalities: vec![
            // "v": clean, informative
            ModalitySpec {
                feature_dim: 26,
                informative_dim: 24,
                snr: 0.5,
                label_noise: 0.02,
                bait_dim: 0,
                bait_strength: 0.0,
            },
            // "a": weak signal, heavy bait
            ModalitySpec {
                feature_dim: 40,
                informative_dim: 10,
                snr: 1.0,
                label_noise: 0.4,
                bait_dim: 24,
                bait_strength: 6.0,
            },
        ],
        seed,
    }
}

pub fn acceptance_arch() -> ArchSpec {
    ArchSpec {
        encoders: vec![
            EncoderSpec {
                hidden: vec![80],
                out_dim: 32,
            },
            EncoderSpec {
                hidden: vec![80],
                out_dim: 32,
            },
        ],
        fusion_hidden: 16,
        dropout: 0.0,
    }
}

pub fn acceptance_train_config(seed: u64) -> TrainConfig {
    TrainConfig {
        epochs: 13,
        super_epoch: 5,
        warmup: 10,
        batch_size: 96,
        optimizer: OptimizerSpec::sgd(0.025, 0.9),
        metric: MetricKind::Loss,
        holdout_fraction: 0.1,
        tprime_fraction: 0.1,
        estimation_subsample: 1.0,
        seed,
    }
}
