//! Model files.
//!
//! A model is stored as one compact JSON object:
//!
//! ```text
//! {"format":"supertok-bpe","version":1,"checksum":"<sha256 hex>","model":{...}}
//! ```
//!
//! `model` holds the alphabet id, the atoms as `Kind(value)` strings, the
//! merges (`pair`, `new_id`, `count_at_merge`) in creation order and the
//! training metadata. `checksum` is the SHA-256 of the compact JSON
//! serialization of `model`, recomputed on load after parsing.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{BpeModel, MergeRule, TrainingMeta};
use crate::tokens::{Alphabet, AtomicToken};
use crate::{Error, Result};

pub const MODEL_FORMAT: &str = "supertok-bpe";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    version: u32,
    checksum: String,
    model: ModelBody,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelBody {
    alphabet_id: String,
    atoms: Vec<AtomicToken>,
    merges: Vec<MergeRule>,
    meta: TrainingMeta,
}

fn checksum(body: &ModelBody) -> String {
    let bytes = serde_json::to_vec(body).expect("model body serializes");
    hex::encode(Sha256::digest(&bytes))
}

pub fn save_model(model: &BpeModel) -> Vec<u8> {
    let model = ModelBody {
        alphabet_id: model.alphabet().id().to_string(),
        atoms: model.alphabet().tokens().to_vec(),
        merges: model.merges().to_vec(),
        meta: model.meta().clone(),
    };
    let file = ModelFile {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        checksum: checksum(&model),
        model,
    };
    let mut bytes = serde_json::to_vec(&file).expect("model file serializes");
    bytes.push(b'\n');
    bytes
}

pub fn load_model(bytes: &[u8]) -> Result<BpeModel> {
    let header: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| Error::ModelFormat(format!("not valid JSON: {e}")))?;
    match header.get("format").and_then(|v| v.as_str()) {
        Some(MODEL_FORMAT) => {}
        other => {
            return Err(Error::ModelFormat(format!("unexpected format tag {other:?}")));
        }
    }
    match header.get("version").and_then(|v| v.as_u64()) {
        Some(v) if v == u64::from(MODEL_VERSION) => {}
        other => {
            return Err(Error::ModelFormat(format!(
                "unsupported version {other:?} (expected {MODEL_VERSION})"
            )));
        }
    }
    let file: ModelFile =
        serde_json::from_value(header).map_err(|e| Error::ModelFormat(format!("malformed model: {e}")))?;
    if checksum(&file.model) != file.checksum {
        return Err(Error::ModelFormat("checksum mismatch".into()));
    }
    let body = file.model;
    let alphabet = Alphabet::new(body.alphabet_id, body.atoms)?;
    if alphabet.config_hash() != body.meta.tokenizer_config_hash && !body.meta.tokenizer_config_hash.is_empty() {
        return Err(Error::ModelFormat("tokenizer config hash does not match the stored atoms".into()));
    }
    BpeModel::from_merges(alphabet, body.merges, body.meta)
}
