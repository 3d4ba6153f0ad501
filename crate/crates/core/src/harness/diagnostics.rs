//! Pairwise correlation of directivity magnitude responses across angles.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::directivity::DirectivityTable;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrices {
    /// Grid angles in degrees, from -180 in steps of the grid.
    pub angles_deg: Vec<f64>,
    /// Over θ_dir, on the concatenated left and right magnitudes.
    pub hrtf: Vec<Vec<f64>>,
    /// Over θ_ori, on the talker magnitudes.
    pub vdp: Vec<Vec<f64>>,
    /// Over `(θ_dir, θ_ori)` pairs, θ_ori varying fastest, on the far-field
    /// product magnitudes at both ears.
    pub combined: Vec<Vec<f64>>,
}

/// Pearson correlation. Constant vectors correlate 1 with an identical
/// vector and 0 with anything else.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return if a == b { 1.0 } else { 0.0 };
    }
    (sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0)
}

/// Symmetric matrix with a unit diagonal.
pub fn correlation_matrix(vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = vectors.len();
    let mut m = vec![vec![1.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let c = pearson(&vectors[i], &vectors[j]);
            m[i][j] = c;
            m[j][i] = c;
        }
    }
    m
}

fn magnitudes(t: &DirectivityTable, az: f64) -> Vec<f64> {
    t.lookup(az).bins.iter().map(|c| c.norm()).collect()
}

pub fn correlation_diagnostic(
    hrtf_left: &DirectivityTable,
    hrtf_right: &DirectivityTable,
    vdp: &DirectivityTable,
    grid_step_deg: f64,
) -> Result<CorrelationMatrices> {
    if !(grid_step_deg > 0.0 && grid_step_deg <= 180.0) {
        return invalid("grid step must lie in (0, 180]");
    }
    if hrtf_left.bins() != hrtf_right.bins() || hrtf_left.bins() != vdp.bins() {
        return invalid("tables must share a frequency grid");
    }
    let n = (360.0 / grid_step_deg).round() as usize;
    let angles_deg: Vec<f64> = (0..n).map(|i| -180.0 + i as f64 * grid_step_deg).collect();
    let ears: Vec<(Vec<f64>, Vec<f64>)> = angles_deg
        .iter()
        .map(|&a| (magnitudes(hrtf_left, a), magnitudes(hrtf_right, a)))
        .collect();
    let talker: Vec<Vec<f64>> = angles_deg.iter().map(|&a| magnitudes(vdp, a)).collect();
    let hrtf_vecs: Vec<Vec<f64>> = ears.iter().map(|(l, r)| l.iter().chain(r).copied().collect()).collect();
    let mut joint = Vec::with_capacity(n * n);
    for (l, r) in &ears {
        for v in &talker {
            joint.push(
                l.iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .chain(r.iter().zip(v).map(|(a, b)| a * b))
                    .collect(),
            );
        }
    }
    Ok(CorrelationMatrices {
        hrtf: correlation_matrix(&hrtf_vecs),
        vdp: correlation_matrix(&talker),
        combined: correlation_matrix(&joint),
        angles_deg,
    })
}

impl CorrelationMatrices {
    /// Writes `hrtf.csv`, `vdp.csv` and `combined.csv`; each has a header
    /// row and a leading column of angle labels.
    pub fn write_csv(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let single: Vec<String> = self.angles_deg.iter().map(|a| a.to_string()).collect();
        let pairs: Vec<String> = self
            .angles_deg
            .iter()
            .flat_map(|d| self.angles_deg.iter().map(move |o| format!("{d}/{o}")))
            .collect();
        for (name, m, labels) in [
            ("hrtf", &self.hrtf, &single),
            ("vdp", &self.vdp, &single),
            ("combined", &self.combined, &pairs),
        ] {
            let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join(format!("{name}.csv")))?);
            writeln!(w, "angle,{}", labels.join(","))?;
            for (label, row) in labels.iter().zip(m) {
                let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                writeln!(w, "{label},{}", cells.join(","))?;
            }
            w.flush()?;
        }
        Ok(())
    }
}
