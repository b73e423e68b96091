//! Versioned model checkpoint serialization.
//!
//! Checkpoints are JSON documents holding layer shapes plus flat float
//! arrays encoded as hex of the IEEE-754 bit patterns (16 hex chars per
//! value), so a save/load round trip is bit-exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fusion::{ModalityEncoder, MultiHeadNet};
use crate::nn::{Activation, DenseLayer, Mlp};
use crate::tensor::Tensor;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CheckpointDoc {
    format_version: u32,
    class_count: usize,
    encoders: Vec<EncoderDoc>,
    heads: Vec<MlpDoc>,
    fusion_head: MlpDoc,
}

#[derive(Serialize, Deserialize)]
struct EncoderDoc {
    id: String,
    out_dim: usize,
    net: MlpDoc,
}

#[derive(Serialize, Deserialize)]
struct MlpDoc {
    dropout_rate: f64,
    dropout_layer: usize,
    layers: Vec<LayerDoc>,
}

#[derive(Serialize, Deserialize)]
struct LayerDoc {
    activation: Activation,
    out_dim: usize,
    in_dim: usize,
    weights_hex: String,
    bias_hex: String,
}

fn floats_to_hex(data: &[f64]) -> String {
    let mut s = String::with_capacity(data.len() * 16);
    for v in data {
        s.push_str(&format!("{:016x}", v.to_bits()));
    }
    s
}

fn hex_to_floats(hex: &str, expected: usize) -> Result<Vec<f64>> {
    if hex.len() != expected * 16 {
        return Err(Error::Config(format!(
            "hex float block has {} chars, expected {}",
            hex.len(),
            expected * 16
        )));
    }
    let mut out = Vec::with_capacity(expected);
    for chunk in hex.as_bytes().chunks(16) {
        let s = std::str::from_utf8(chunk)
            .map_err(|_| Error::Config("invalid hex float block".into()))?;
        let bits = u64::from_str_radix(s, 16)
            .map_err(|_| Error::Config(format!("invalid hex float chunk '{}'", s)))?;
        out.push(f64::from_bits(bits));
    }
    Ok(out)
}

fn mlp_to_doc(mlp: &Mlp) -> MlpDoc {
    MlpDoc {
        dropout_rate: mlp.dropout_rate,
        dropout_layer: mlp.dropout_layer,
        layers: mlp
            .layers
            .iter()
            .map(|l| LayerDoc {
                activation: l.activation,
                out_dim: l.out_dim(),
                in_dim: l.in_dim(),
                weights_hex: floats_to_hex(l.weights.data()),
                bias_hex: floats_to_hex(l.bias.data()),
            })
            .collect(),
    }
}

fn mlp_from_doc(doc: &MlpDoc) -> Result<Mlp> {
    let mut layers = Vec::with_capacity(doc.layers.len());
    for l in &doc.layers {
        let weights = Tensor::from_vec(
            vec![l.out_dim, l.in_dim],
            hex_to_floats(&l.weights_hex, l.out_dim * l.in_dim)?,
        )?;
        let bias = Tensor::from_vec(vec![l.out_dim], hex_to_floats(&l.bias_hex, l.out_dim)?)?;
        layers.push(DenseLayer {
            weights,
            bias,
            activation: l.activation,
        });
    }
    let mut mlp = Mlp::with_layers(layers)?;
    if doc.dropout_rate > 0.0 {
        mlp.set_dropout(doc.dropout_rate, doc.dropout_layer)?;
    }
    Ok(mlp)
}

pub fn net_to_json(net: &MultiHeadNet) -> Result<String> {
    let doc = CheckpointDoc {
        format_version: FORMAT_VERSION,
        class_count: net.class_count,
        encoders: net
            .encoders
            .iter()
            .map(|e| EncoderDoc {
                id: e.id.clone(),
                out_dim: e.out_dim,
                net: mlp_to_doc(&e.net),
            })
            .collect(),
        heads: net.heads.iter().map(mlp_to_doc).collect(),
        fusion_head: mlp_to_doc(&net.fusion_head),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn net_from_json(json: &str) -> Result<MultiHeadNet> {
    let doc: CheckpointDoc = serde_json::from_str(json)?;
    if doc.format_version != FORMAT_VERSION {
        return Err(Error::Config(format!(
            "unsupported checkpoint format version {}",
            doc.format_version
        )));
    }
    let mut encoders = Vec::with_capacity(doc.encoders.len());
    for e in &doc.encoders {
        encoders.push(ModalityEncoder {
            id: e.id.clone(),
            net: mlp_from_doc(&e.net)?,
            out_dim: e.out_dim,
        });
    }
    let heads = doc.heads.iter().map(mlp_from_doc).collect::<Result<Vec<_>>>()?;
    let fusion_head = mlp_from_doc(&doc.fusion_head)?;
    Ok(MultiHeadNet {
        encoders,
        heads,
        fusion_head,
        class_count: doc.class_count,
    })
}

pub fn save_net(net: &MultiHeadNet, path: &Path) -> Result<()> {
    fs::write(path, net_to_json(net)?)?;
    Ok(())
}

pub fn load_net(path: &Path) -> Result<MultiHeadNet> {
    let json = fs::read_to_string(path)?;
    net_from_json(&json)
}

/// SHA-256 of the canonical checkpoint JSON; used to assert that estimation
/// leaves a network untouched.
pub fn digest(net: &MultiHeadNet) -> Result<String> {
    let json = net_to_json(net)?;
    let mut hasher = Sha256::new();
    hasher.update(json.as_bytes());
    Ok(format!("{:x}", hasher.finalize()))
}
