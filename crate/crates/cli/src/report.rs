//! Plain-text and CSV reports over a finished run. Reads only what the
//! manifest lists, after verifying it, and writes only under `report/`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use relnet_core::canon::fmt_f64;

use crate::error::{HarnessError, Result};
use crate::experiments::{CategoricalSummary, OddballSummary, ParametricSummary, Summary};
use crate::manifest::{load_manifest, MANIFEST_FILE};
use crate::run::load_summary;

pub const REPORT_DIR: &str = "report";

fn opt_step(v: Option<u64>) -> String {
    v.map_or_else(|| "never".to_string(), |s| s.to_string())
}

fn opt_f(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.digits$}"))
}

fn csv_opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Files of one report: `(name, contents)`, summary text first.
pub fn render(summary: &Summary, notes: &[String]) -> Vec<(String, String)> {
    let (mut text, mut files) = match summary {
        Summary::ParametricSimilarity(s) => parametric(s),
        Summary::Oddball(s) => oddball(s),
        Summary::Categorical(s) => categorical(s),
    };
    if !notes.is_empty() {
        text.push_str("\nNotes\n");
        for n in notes {
            let _ = writeln!(text, "  - {n}");
        }
    }
    files.insert(0, ("summary.txt".to_string(), text));
    files
}

fn parametric(s: &ParametricSummary) -> (String, Vec<(String, String)>) {
    let mut t = String::from("Parametric similarity\n\n");
    let _ = writeln!(
        t,
        "Steps to threshold (train MSE < {}, OOD MSE < {}); first step after which the metric stays below",
        s.train_mse_threshold, s.ood_mse_threshold
    );
    let _ = writeln!(t, "{:<12} {:>4} {:>10} {:>10} {:>10} {:>11} {:>11} {:>8}", "arm", "rep", "train", "ood", "both", "train_mse", "ood_mse", "angle");
    let mut csv = String::from("arm,replicate,seed,train_settled_step,ood_settled_step,converged_step,final_train_mse,final_test_mse,final_ood_mse,angle_degrees\n");
    for r in &s.runs {
        let _ = writeln!(
            t,
            "{:<12} {:>4} {:>10} {:>10} {:>10} {:>11.5} {:>11.5} {:>8.2}",
            r.arm,
            r.replicate,
            opt_step(r.train_settled_step),
            opt_step(r.ood_settled_step),
            opt_step(r.converged_step),
            r.final_train_mse,
            r.final_ood_mse,
            r.angle_degrees
        );
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{}",
            r.arm,
            r.replicate,
            r.seed,
            csv_opt(r.train_settled_step),
            csv_opt(r.ood_settled_step),
            csv_opt(r.converged_step),
            fmt_f64(r.final_train_mse),
            fmt_f64(r.final_test_mse),
            fmt_f64(r.final_ood_mse),
            fmt_f64(r.angle_degrees)
        );
    }
    t.push_str("\nMedians over replicates\n");
    for a in &s.aggregates {
        let _ = writeln!(
            t,
            "  {:<12} train {:>10}  ood {:>10}  angle median {:.2} min {:.2}",
            a.arm,
            opt_f(a.median_train_settled_step, 1),
            opt_f(a.median_ood_settled_step, 1),
            a.median_angle_degrees,
            a.min_angle_degrees
        );
    }
    if !s.comparisons.is_empty() {
        t.push_str("\nOOD MSE at the step relational converged\n");
        let mut cmp = String::from("replicate,relational_converged_step,relational_ood_mse,feedforward_ood_mse,ratio\n");
        for c in &s.comparisons {
            let _ = writeln!(
                t,
                "  rep {}: step {}  relational {}  feedforward {}  ratio {}",
                c.replicate,
                opt_step(c.relational_converged_step),
                opt_f(c.relational_ood_mse, 5),
                opt_f(c.feedforward_ood_mse, 5),
                opt_f(c.ratio, 2)
            );
            let _ = writeln!(
                cmp,
                "{},{},{},{},{}",
                c.replicate,
                csv_opt(c.relational_converged_step),
                csv_opt(c.relational_ood_mse.map(fmt_f64)),
                csv_opt(c.feedforward_ood_mse.map(fmt_f64)),
                csv_opt(c.ratio.map(fmt_f64))
            );
        }
        let _ = writeln!(t, "  median ratio {}", opt_f(s.median_ood_ratio, 2));
        return (t, vec![("runs.csv".into(), csv), ("ood_comparison.csv".into(), cmp)]);
    }
    (t, vec![("runs.csv".into(), csv)])
}

fn oddball(s: &OddballSummary) -> (String, Vec<(String, String)>) {
    let mut t = format!("Oddball\n\n{} training trials, {} evaluation trials\n", s.train_trials, s.eval_trials);
    let mut csv = String::from("arm,checkpoint,step,category,regularity_score,error_rate,trial_count\n");
    let mut trend = String::from("arm,checkpoint,step,accuracy,slope,spearman\n");
    for a in &s.arms {
        let _ = writeln!(t, "\n[{}]", a.arm);
        for (i, c) in a.checkpoints.iter().enumerate() {
            let sign = match c.slope.partial_cmp(&0.0) {
                Some(std::cmp::Ordering::Greater) => "positive",
                Some(std::cmp::Ordering::Less) => "negative",
                _ => "zero",
            };
            let _ = writeln!(
                t,
                "  checkpoint {i} (step {}): accuracy {:.3}, slope {:+.4} ({sign}), spearman {}",
                c.step,
                c.accuracy,
                c.slope,
                opt_f(c.spearman, 3)
            );
            let _ = writeln!(
                trend,
                "{},{i},{},{},{},{}",
                a.arm,
                c.step,
                fmt_f64(c.accuracy),
                fmt_f64(c.slope),
                csv_opt(c.spearman.map(fmt_f64))
            );
            for cat in &c.categories {
                let _ = writeln!(
                    csv,
                    "{},{i},{},{},{},{},{}",
                    a.arm,
                    c.step,
                    cat.name,
                    cat.regularity_score,
                    fmt_f64(cat.error_rate),
                    cat.trial_count
                );
            }
        }
        if let Some(last) = a.final_checkpoint() {
            let _ = writeln!(t, "  error rate by category (final checkpoint)");
            let _ = writeln!(t, "    {:<24} {:>10} {:>10}", "category", "regularity", "error");
            for cat in &last.categories {
                let _ = writeln!(t, "    {:<24} {:>10} {:>10.3}", cat.name, cat.regularity_score, cat.error_rate);
            }
        }
        let _ = writeln!(
            t,
            "  decoding: regularity R2 {:.3}, category accuracy {:.3} ({} components, {} folds)",
            a.regularity_decoding.mean_score,
            a.category_decoding.mean_score,
            a.regularity_decoding.n_components_used,
            a.regularity_decoding.n_folds
        );
        for p in &a.profiles {
            let _ = writeln!(
                t,
                "  profile {}: pearson {}, spearman {} over {} categories",
                p.profile,
                opt_f(p.pearson, 3),
                opt_f(p.spearman, 3),
                p.shared.len()
            );
        }
    }
    (t, vec![("error_rates.csv".into(), csv), ("regularity_trend.csv".into(), trend)])
}

fn categorical(s: &CategoricalSummary) -> (String, Vec<(String, String)>) {
    let mut t = format!(
        "Categorical generalization\n\n{} training pairs, {} holdout pairs, targets {:?}\n\n",
        s.train_pairs, s.holdout_pairs, s.targets
    );
    let _ = writeln!(t, "{:<12} {:>4} {:>10} {:>10} {:>12}", "arm", "rep", "train", "holdout", "perfect_at");
    let mut csv = String::from("arm,replicate,seed,train_accuracy,holdout_accuracy,perfect_train_step\n");
    for r in &s.runs {
        let _ = writeln!(
            t,
            "{:<12} {:>4} {:>10.3} {:>10.3} {:>12}",
            r.arm,
            r.replicate,
            r.train_accuracy,
            r.holdout_accuracy,
            opt_step(r.perfect_train_step)
        );
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            r.arm,
            r.replicate,
            r.seed,
            fmt_f64(r.train_accuracy),
            fmt_f64(r.holdout_accuracy),
            csv_opt(r.perfect_train_step)
        );
    }
    t.push('\n');
    for a in &s.aggregates {
        let _ = writeln!(
            t,
            "  {:<12} mean train {:.3}  mean holdout {:.3}  median holdout {:.3}  min holdout {:.3}",
            a.arm, a.mean_train_accuracy, a.mean_holdout_accuracy, a.median_holdout_accuracy, a.min_holdout_accuracy
        );
    }
    (t, vec![("runs.csv".into(), csv)])
}

/// Verify a run and write its report. `target` is the run directory or its
/// manifest. Returns the report files.
pub fn write_report(target: &Path) -> Result<Vec<PathBuf>> {
    let dir = if target.is_file() { target.parent().unwrap_or(Path::new(".")) } else { target };
    let manifest = load_manifest(&dir.join(MANIFEST_FILE))?;
    if !manifest.is_complete() {
        return Err(HarnessError::Corrupt {
            path: dir.join(MANIFEST_FILE),
            detail: format!("run status is {:?}", manifest.status),
        });
    }
    manifest.verify(dir)?;
    let summary = load_summary(dir, &manifest)?;
    let out = dir.join(REPORT_DIR);
    fs::create_dir_all(&out).map_err(|e| HarnessError::io(&out, e))?;
    let mut written = Vec::new();
    for (name, contents) in render(&summary, &manifest.notes) {
        let path = out.join(name);
        fs::write(&path, contents).map_err(|e| HarnessError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
