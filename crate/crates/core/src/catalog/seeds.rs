//! Sidecar files recording the bugs seeded into a program file.
//!
//! ```json
//! {"file":"a.mini","rng_seed":7,"seeds":[{"ordinal":1,"pattern":"PLUS_MINUS_REV",
//!  "fix_pattern":"PLUS_MINUS","location":12,"original":{...},"mutated":{...}}]}
//! ```

use serde_json::{json, Value};
use thiserror::Error;

use crate::engine::SeedRecord;
use crate::registry::Registry;
use crate::tree::{decode_tree, encode_node, TreeError};

#[derive(Debug, Error)]
pub enum SeedFileError {
    #[error("invalid seed file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid seed file: missing or malformed `{0}`")]
    Field(&'static str),
    #[error("invalid seed file: {0}")]
    Node(#[from] TreeError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedEntry {
    pub record: SeedRecord,
    /// Pattern that fixes the seeded bug.
    pub fix_pattern: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedFile {
    pub file: String,
    pub rng_seed: u64,
    pub seeds: Vec<SeedEntry>,
}

impl SeedFile {
    /// Sidecar path for a program file.
    pub fn path_for(program: &std::path::Path) -> std::path::PathBuf {
        let mut name = program.as_os_str().to_owned();
        name.push(".seeds.json");
        name.into()
    }

    pub fn to_json(&self) -> String {
        let seeds: Vec<Value> = self
            .seeds
            .iter()
            .map(|e| {
                let r = &e.record;
                json!({
                    "ordinal": r.ordinal,
                    "pattern": r.pattern,
                    "fix_pattern": e.fix_pattern,
                    "location": r.location,
                    "original": raw(&encode_node(&r.original)),
                    "mutated": raw(&encode_node(&r.mutated)),
                })
            })
            .collect();
        let doc = json!({"file": self.file, "rng_seed": self.rng_seed, "seeds": seeds});
        serde_json::to_string_pretty(&doc).expect("json serialization") + "\n"
    }

    pub fn from_json(text: &str, reg: &Registry) -> Result<SeedFile, SeedFileError> {
        let doc: Value = serde_json::from_str(text)?;
        let file = doc["file"].as_str().ok_or(SeedFileError::Field("file"))?.to_string();
        let rng_seed = doc["rng_seed"].as_u64().ok_or(SeedFileError::Field("rng_seed"))?;
        let mut seeds = Vec::new();
        for s in doc["seeds"].as_array().ok_or(SeedFileError::Field("seeds"))? {
            let text_of = |key: &'static str| {
                s[key]
                    .as_str()
                    .map(str::to_string)
                    .ok_or(SeedFileError::Field(key))
            };
            let node_of = |key: &'static str| -> Result<_, SeedFileError> {
                if !s[key].is_object() {
                    return Err(SeedFileError::Field(key));
                }
                Ok(decode_tree(&s[key].to_string(), reg)?.root)
            };
            seeds.push(SeedEntry {
                fix_pattern: text_of("fix_pattern")?,
                record: SeedRecord {
                    pattern: text_of("pattern")?,
                    location: s["location"].as_u64().ok_or(SeedFileError::Field("location"))?,
                    original: node_of("original")?,
                    mutated: node_of("mutated")?,
                    rng_seed,
                    ordinal: s["ordinal"].as_u64().ok_or(SeedFileError::Field("ordinal"))? as usize,
                },
            });
        }
        Ok(SeedFile {
            file,
            rng_seed,
            seeds,
        })
    }
}

fn raw(encoded: &str) -> Value {
    serde_json::from_str(encoded).expect("encoder emits valid json")
}
