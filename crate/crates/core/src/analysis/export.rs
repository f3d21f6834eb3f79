use std::fmt::Write as _;

use crate::canon::fmt_f64;

/// `pc1,pc2,label` rows for external plotting.
pub fn scatter_csv(scores: &[Vec<f64>], labels: &[String]) -> String {
    let mut out = String::from("pc1,pc2,label\n");
    for (s, l) in scores.iter().zip(labels) {
        let pc1 = s.first().copied().unwrap_or(0.0);
        let pc2 = s.get(1).copied().unwrap_or(0.0);
        let _ = writeln!(out, "{},{},{}", fmt_f64(pc1), fmt_f64(pc2), l);
    }
    out
}
