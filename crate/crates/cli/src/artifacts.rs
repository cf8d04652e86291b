//! A trained model directory: the model file plus everything needed to
//! turn raw text into its inputs, tied together by a manifest of hashes.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use sentimix_core::persist::{content_hash, decode_model, encode_model};
use sentimix_core::preprocess::StopListSource;
use sentimix_core::train::TrainHistory;
use sentimix_core::{Model64, StopList, TrainHyper, Vocabulary};
use serde::{Deserialize, Serialize};

use crate::commands::read_input;

pub const MODEL_FILE: &str = "model.bin";
pub const VOCAB_FILE: &str = "vocab.tsv";
pub const ENGLISH_FILE: &str = "english_stoplist.txt";
pub const HINDI_FILE: &str = "hindi_stoplist.txt";
pub const HISTORY_FILE: &str = "history.tsv";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub arch: String,
    pub vocab_size: usize,
    pub seq_len: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// File name to SHA-256.
    pub files: BTreeMap<String, String>,
}

pub struct TrainedModel {
    pub model: Model64,
    pub vocab: Vocabulary,
    pub english: StopList,
    pub hindi: StopList,
    pub history: TrainHistory,
    pub hyper: TrainHyper,
}

fn to_bytes(f: impl FnOnce(&mut Vec<u8>) -> sentimix_core::Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

/// Writes every artifact and the manifest. Output bytes depend only on the
/// trained state, so identical runs give identical directories.
pub fn write_model_dir(dir: &Path, t: &TrainedModel) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let files = [
        (MODEL_FILE, encode_model(&t.model)),
        (VOCAB_FILE, to_bytes(|b| t.vocab.write(b))?),
        (ENGLISH_FILE, to_bytes(|b| t.english.write(b))?),
        (HINDI_FILE, to_bytes(|b| t.hindi.write(b))?),
        (HISTORY_FILE, to_bytes(|b| t.history.write_tsv(b))?),
    ];
    let mut hashes = BTreeMap::new();
    for (name, bytes) in &files {
        let path = dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        hashes.insert(name.to_string(), content_hash(bytes));
    }
    let manifest = Manifest {
        arch: t.model.arch().name().to_string(),
        vocab_size: t.model.config().vocab_size,
        seq_len: t.model.config().seq_len,
        epochs: t.hyper.epochs,
        batch_size: t.hyper.batch_size,
        learning_rate: t.hyper.learning_rate,
        seed: t.hyper.seed,
        files: hashes,
    };
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub struct LoadedModel {
    pub model: Model64,
    pub vocab: Vocabulary,
    pub english: StopList,
    pub hindi: StopList,
}

/// `path` may be the directory or any file inside it.
pub fn model_dir(path: &Path) -> PathBuf {
    if path.is_file() {
        path.parent().map(Path::to_path_buf).unwrap_or_default()
    } else {
        path.to_path_buf()
    }
}

/// Loads a model directory, refusing any artifact whose hash differs from
/// the manifest.
pub fn load_model_dir(path: &Path) -> Result<LoadedModel> {
    let dir = model_dir(path);
    let manifest: Manifest = serde_json::from_slice(&read_input(&dir.join(MANIFEST_FILE))?)
        .with_context(|| format!("parsing {}", dir.join(MANIFEST_FILE).display()))?;
    let load = |name: &str| -> Result<Vec<u8>> {
        let bytes = read_input(&dir.join(name))?;
        let Some(expected) = manifest.files.get(name) else {
            bail!("{MANIFEST_FILE} has no entry for {name}");
        };
        let actual = content_hash(&bytes);
        if &actual != expected {
            bail!("{name} does not match {MANIFEST_FILE} (sha256 {actual}, expected {expected})");
        }
        Ok(bytes)
    };
    let model: Model64 = decode_model(&load(MODEL_FILE)?).context(MODEL_FILE)?;
    let vocab = Vocabulary::read(load(VOCAB_FILE)?.as_slice(), model.config().vocab_size).context(VOCAB_FILE)?;
    let english = StopList::read(load(ENGLISH_FILE)?.as_slice(), StopListSource::File).context(ENGLISH_FILE)?;
    let hindi = StopList::read(load(HINDI_FILE)?.as_slice(), StopListSource::File).context(HINDI_FILE)?;
    if manifest.arch != model.arch().name() || manifest.seq_len != model.config().seq_len {
        bail!("{MANIFEST_FILE} describes a different model than {MODEL_FILE}");
    }
    Ok(LoadedModel { model, vocab, english, hindi })
}
