//! Dataset assembly, splits and the JSONL manifest.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::generate::{synth_motion, SynthRecord};
use super::recipe::SynthRecipe;
use crate::diffusion::rng_stream;
use crate::error::{Error, Result};
use crate::motion::{BodyPart, MotionSequence};
use crate::semantics::{InteractionPair, InteractionSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// Fraction of each recipe's records held out for testing.
pub const TEST_FRACTION: f64 = 1.0 / 6.0;

/// Multiple pairs are joined with this separator in the `part` and `phrase`
/// columns.
pub const PAIR_SEPARATOR: &str = " | ";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub path: String,
    pub caption: String,
    /// Part names, or `none`.
    pub part: String,
    pub phrase: String,
    pub split: Split,
    pub recipe: String,
}

impl ManifestRecord {
    pub fn from_spec(path: String, caption: String, spec: &InteractionSpec, split: Split, recipe: String) -> Self {
        let (part, phrase) = if spec.is_none() {
            ("none".to_string(), String::new())
        } else {
            let parts: Vec<&str> = spec.pairs().iter().map(|p| p.part.name()).collect();
            let phrases: Vec<&str> = spec.pairs().iter().map(|p| p.phrase.as_str()).collect();
            (parts.join(PAIR_SEPARATOR), phrases.join(PAIR_SEPARATOR))
        };
        Self { path, caption, part, phrase, split, recipe }
    }

    pub fn spec(&self) -> Result<InteractionSpec> {
        if self.part == "none" {
            return Ok(InteractionSpec::none(&self.caption));
        }
        let parts: Vec<&str> = self.part.split(PAIR_SEPARATOR).collect();
        let phrases: Vec<&str> = self.phrase.split(PAIR_SEPARATOR).collect();
        if parts.len() != phrases.len() {
            return Err(Error::InvalidArgument(format!("{} parts but {} phrases", parts.len(), phrases.len())));
        }
        let pairs = parts
            .into_iter()
            .zip(phrases)
            .map(|(p, phrase)| Ok(InteractionPair { part: p.parse::<BodyPart>()?, phrase: phrase.to_string() }))
            .collect::<Result<Vec<_>>>()?;
        Ok(InteractionSpec::new(&self.caption, pairs))
    }
}

/// `count` records per recipe, each from its own derived seed.
pub fn synth_dataset(recipes: &[SynthRecipe], count: usize, seed: u64) -> Result<Vec<SynthRecord>> {
    if count == 0 {
        return Err(Error::InvalidArgument("count per recipe must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(recipes.len() * count);
    for (r, recipe) in recipes.iter().enumerate() {
        for i in 0..count {
            let record_seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ ((r as u64) << 32 | i as u64);
            out.push(synth_motion(recipe, record_seed)?);
        }
    }
    Ok(out)
}

/// Per recipe, a seeded shuffle sends `ceil(n * TEST_FRACTION)` records to
/// the test split.
pub fn assign_splits(records: &[SynthRecord], seed: u64) -> Vec<Split> {
    let mut splits = vec![Split::Train; records.len()];
    let mut names: Vec<&str> = records.iter().map(|r| r.recipe.as_str()).collect();
    names.dedup();
    let mut rng = rng_stream(seed, 0x53504c);
    for name in names {
        let mut idx: Vec<usize> = (0..records.len()).filter(|&i| records[i].recipe == name).collect();
        idx.shuffle(&mut rng);
        let n_test = (idx.len() as f64 * TEST_FRACTION).ceil() as usize;
        for &i in idx.iter().take(n_test.min(idx.len().saturating_sub(1))) {
            splits[i] = Split::Test;
        }
    }
    splits
}

/// Writes one motion file per record under `out_dir/motions` and the
/// manifest at `out_dir/manifest.jsonl`.
pub fn build_dataset(recipes: &[SynthRecipe], count: usize, seed: u64, out_dir: &Path) -> Result<Vec<ManifestRecord>> {
    let records = synth_dataset(recipes, count, seed)?;
    let splits = assign_splits(&records, seed);
    let motion_dir = out_dir.join("motions");
    fs::create_dir_all(&motion_dir).map_err(|e| Error::io(&motion_dir, e))?;
    let mut manifest = Vec::with_capacity(records.len());
    let mut counters = std::collections::HashMap::<&str, usize>::new();
    for (rec, split) in records.iter().zip(splits) {
        let n = counters.entry(&rec.recipe).or_default();
        let rel = format!("motions/{}_{:03}.json", rec.recipe, n);
        *n += 1;
        rec.motion.save(&out_dir.join(&rel))?;
        manifest.push(ManifestRecord::from_spec(rel, rec.caption.clone(), &rec.spec, split, rec.recipe.clone()));
    }
    save_manifest(&out_dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

pub const MANIFEST_FILE: &str = "manifest.jsonl";

pub fn save_manifest(path: &Path, records: &[ManifestRecord]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    for r in records {
        let line = serde_json::to_string(r).expect("record serializes");
        writeln!(f, "{line}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

pub fn load_manifest(path: &Path) -> Result<Vec<ManifestRecord>> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ManifestRecord =
            serde_json::from_str(&line).map_err(|e| Error::data(path, format!("line {}: {e}", i + 1)))?;
        rec.spec().map_err(|e| Error::data(path, format!("line {}: {e}", i + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

/// A training or evaluation item with its motion loaded.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetItem {
    pub motion: MotionSequence,
    pub caption: String,
    pub spec: InteractionSpec,
    pub split: Split,
    pub recipe: String,
}

impl DatasetItem {
    pub fn from_record(record: &SynthRecord, split: Split) -> Self {
        Self {
            motion: record.motion.clone(),
            caption: record.caption.clone(),
            spec: record.spec.clone(),
            split,
            recipe: record.recipe.clone(),
        }
    }
}

/// Loads a manifest and every motion it references; paths resolve against
/// the manifest's directory.
pub fn load_dataset(manifest_path: &Path) -> Result<Vec<DatasetItem>> {
    let base: PathBuf = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
    load_manifest(manifest_path)?
        .into_iter()
        .map(|r| {
            Ok(DatasetItem {
                motion: MotionSequence::load(&base.join(&r.path))?,
                spec: r.spec()?,
                caption: r.caption,
                split: r.split,
                recipe: r.recipe,
            })
        })
        .collect()
}

/// In-memory equivalent of building and loading a dataset.
pub fn synth_items(recipes: &[SynthRecipe], count: usize, seed: u64) -> Result<Vec<DatasetItem>> {
    let records = synth_dataset(recipes, count, seed)?;
    let splits = assign_splits(&records, seed);
    Ok(records.iter().zip(splits).map(|(r, s)| DatasetItem::from_record(r, s)).collect())
}
