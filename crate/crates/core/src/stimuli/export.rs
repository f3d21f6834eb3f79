//! Dataset export: binary PGM images plus one CSV row per stimulus.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::oddball::OddballTrial;
use super::onehot::CategoricalDataset;
use super::pairs::PairDataset;
use crate::canon::fmt_f64;
use crate::error::Result;

/// Writes `images/stim_XXXX.pgm` and `stimuli.csv`; returns every written path.
pub fn export_pair_dataset(ds: &PairDataset, dir: &Path) -> Result<Vec<PathBuf>> {
    let img_dir = dir.join("images");
    fs::create_dir_all(&img_dir)?;
    let mut written = Vec::new();
    let mut csv = String::from("id,size,luminosity,split,image_path\n");
    for s in &ds.stimuli {
        let rel = format!("images/stim_{:04}.pgm", s.id);
        s.image.write_pgm(&dir.join(&rel))?;
        written.push(dir.join(&rel));
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            s.id,
            fmt_f64(s.latents.size),
            fmt_f64(s.latents.luminosity),
            s.split.as_str(),
            rel
        );
    }
    let path = dir.join("stimuli.csv");
    fs::write(&path, csv)?;
    written.push(path);
    Ok(written)
}

/// Writes `images/trial_XXXXX_P.pgm` and `trials.csv`.
pub fn export_trials(trials: &[OddballTrial], dir: &Path) -> Result<Vec<PathBuf>> {
    let img_dir = dir.join("images");
    fs::create_dir_all(&img_dir)?;
    let mut written = Vec::new();
    let mut csv = String::from("id,trial,position,category,regularity_score,is_oddball,image_path\n");
    let mut id = 0;
    for (t, trial) in trials.iter().enumerate() {
        for (pos, img) in trial.images.iter().enumerate() {
            let rel = format!("images/trial_{t:05}_{pos}.pgm");
            img.write_pgm(&dir.join(&rel))?;
            written.push(dir.join(&rel));
            let _ = writeln!(
                csv,
                "{id},{t},{pos},{},{},{},{rel}",
                trial.category.name,
                trial.category.regularity_score,
                u8::from(pos == trial.oddball_index),
            );
            id += 1;
        }
    }
    let path = dir.join("trials.csv");
    fs::write(&path, csv)?;
    written.push(path);
    Ok(written)
}

/// One-hot stimuli carry no image; `stimuli.csv` lists features and split.
pub fn export_categorical(ds: &CategoricalDataset, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut csv = String::from("id,feature_a,feature_b,split\n");
    for (id, s) in ds.stimuli.iter().enumerate() {
        let _ = writeln!(csv, "{id},{},{},{}", s.feature_a, s.feature_b, ds.split_of(id).as_str());
    }
    let path = dir.join("stimuli.csv");
    fs::write(&path, csv)?;
    Ok(vec![path])
}
