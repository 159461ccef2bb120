//! Model checkpoints: a version line followed by a JSON body holding the
//! model and render configuration, every tensor with its shape, and the run
//! configuration that produced it.

use serde::{Deserialize, Serialize};

use super::model::{Model, ModelConfig};
use super::tensor::Matrix;

pub const CHECKPOINT_HEADER: &str = "DIVRIT-CKPT 1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct NamedTensor {
    name: String,
    shape: [usize; 2],
    data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Body {
    model_config: ModelConfig,
    checksum: String,
    run: serde_json::Value,
    tensors: Vec<NamedTensor>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: Model,
    /// Free-form provenance (run configuration, input hashes).
    pub run: serde_json::Value,
}

impl Checkpoint {
    pub fn new(model: Model, run: serde_json::Value) -> Self {
        Self { model, run }
    }

    pub fn to_text(&self) -> String {
        let body = Body {
            model_config: self.model.config().clone(),
            checksum: self.model.checksum(),
            run: self.run.clone(),
            tensors: self
                .model
                .tensors()
                .into_iter()
                .map(|(name, t)| NamedTensor {
                    name: name.to_string(),
                    shape: [t.rows, t.cols],
                    data: t.data.clone(),
                })
                .collect(),
        };
        let json = serde_json::to_string_pretty(&body).expect("checkpoint body serializes");
        format!("{CHECKPOINT_HEADER}\n{json}\n")
    }

    pub fn from_text(text: &str) -> Result<Self, String> {
        let (header, json) = text.split_once('\n').ok_or("missing checkpoint header")?;
        if header != CHECKPOINT_HEADER {
            return Err(format!("expected {CHECKPOINT_HEADER:?}, found {header:?}"));
        }
        let body: Body = serde_json::from_str(json).map_err(|e| e.to_string())?;
        body.model_config.validate()?;
        let tensors = body
            .tensors
            .into_iter()
            .map(|t| {
                (
                    t.name,
                    Matrix {
                        rows: t.shape[0],
                        cols: t.shape[1],
                        data: t.data,
                    },
                )
            })
            .collect();
        let model = Model::from_parts(body.model_config, tensors)?;
        if model.checksum() != body.checksum {
            return Err("parameter checksum mismatch".into());
        }
        Ok(Self { model, run: body.run })
    }
}
