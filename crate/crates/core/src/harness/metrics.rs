//! Circular error statistics, CDF and polar tables, facing classification.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::estimator::AnglePrediction;
use crate::geometry::{angular_distance, wrap_deg};

/// Circular absolute difference in degrees, in [0, 180].
pub fn angular_error(pred_deg: f64, true_deg: f64) -> f64 {
    angular_distance(pred_deg, true_deg)
}

/// Nearest-rank percentile of ascending `sorted`, `q` in (0, 100].
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = ((q / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Empirical CDF as `(error, fraction ≤ error)` at each distinct error.
pub fn cdf(errors: &[f64]) -> Vec<(f64, f64)> {
    let mut s = errors.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &e) in s.iter().enumerate() {
        let f = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == e => last.1 = f,
            _ => out.push((e, f)),
        }
    }
    out
}

pub const SECTORS: usize = 36;

/// Mean error per 10° sector of the true angle; sector `k` covers
/// `[-180 + 10k, -170 + 10k)`. Empty sectors are `None`.
pub fn sector_means(errors: &[f64], true_deg: &[f64]) -> Vec<Option<f64>> {
    let mut sum = [0.0; SECTORS];
    let mut n = [0usize; SECTORS];
    for (&e, &t) in errors.iter().zip(true_deg) {
        let k = (((wrap_deg(t) + 180.0) / 10.0).floor() as usize).min(SECTORS - 1);
        sum[k] += e;
        n[k] += 1;
    }
    (0..SECTORS).map(|k| (n[k] > 0).then(|| sum[k] / n[k] as f64)).collect()
}

pub fn sector_center_deg(k: usize) -> f64 {
    -175.0 + 10.0 * k as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub p50: f64,
    pub p80: f64,
    pub p90: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(errors: &[f64]) -> Self {
        let mut s = errors.to_vec();
        s.sort_by(f64::total_cmp);
        Self {
            mean: s.iter().sum::<f64>() / s.len() as f64,
            p50: percentile(&s, 50.0),
            p80: percentile(&s, 80.0),
            p90: percentile(&s, 90.0),
            max: s.last().copied().unwrap_or(f64::NAN),
        }
    }
}

/// When someone counts as facing the other.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FacingRule {
    pub sector_deg: f64,
    /// Read `sector_deg` as the full sector width, so the bound per side is
    /// half of it. Off by default: the bound is `sector_deg` on each side.
    pub half_width: bool,
}

impl Default for FacingRule {
    fn default() -> Self {
        Self {
            sector_deg: 25.0,
            half_width: false,
        }
    }
}

impl FacingRule {
    pub fn bound_deg(&self) -> f64 {
        if self.half_width {
            self.sector_deg / 2.0
        } else {
            self.sector_deg
        }
    }

    /// Inclusive at the bound.
    pub fn is_facing(&self, theta_deg: f64) -> bool {
        wrap_deg(theta_deg).abs() <= self.bound_deg()
    }

    pub fn classify(&self, theta_dir_deg: f64, theta_ori_deg: f64) -> FacingClass {
        match (self.is_facing(theta_dir_deg), self.is_facing(theta_ori_deg)) {
            (true, true) => FacingClass::FacingFacing,
            (true, false) => FacingClass::FacingNonFacing,
            (false, true) => FacingClass::NonFacingFacing,
            (false, false) => FacingClass::NonFacingNonFacing,
        }
    }
}

/// Listener state first (from θ_dir), speaker state second (from θ_ori).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FacingClass {
    FacingFacing,
    FacingNonFacing,
    NonFacingFacing,
    NonFacingNonFacing,
}

impl FacingClass {
    pub const ALL: [FacingClass; 4] = [
        FacingClass::FacingFacing,
        FacingClass::FacingNonFacing,
        FacingClass::NonFacingFacing,
        FacingClass::NonFacingNonFacing,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            FacingClass::FacingFacing => "facing & facing",
            FacingClass::FacingNonFacing => "facing & non-facing",
            FacingClass::NonFacingFacing => "non-facing & facing",
            FacingClass::NonFacingNonFacing => "non-facing & non-facing",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacingReport {
    pub rule: FacingRule,
    /// `confusion[true][predicted]`.
    pub confusion: [[usize; 4]; 4],
}

impl FacingReport {
    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    /// Fraction of each true class predicted correctly; `None` when a class
    /// has no samples.
    pub fn class_accuracy(&self) -> [Option<f64>; 4] {
        std::array::from_fn(|k| {
            let n: usize = self.confusion[k].iter().sum();
            (n > 0).then(|| self.confusion[k][k] as f64 / n as f64)
        })
    }
}

pub fn facing_classify(predicted: &[(f64, f64)], truth: &[(f64, f64)], rule: FacingRule) -> FacingReport {
    let mut confusion = [[0; 4]; 4];
    for (p, t) in predicted.iter().zip(truth) {
        let tc = rule.classify(t.0, t.1).index();
        let pc = rule.classify(p.0, p.1).index();
        confusion[tc][pc] += 1;
    }
    FacingReport { rule, confusion }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleReport {
    pub errors: Vec<f64>,
    pub summary: Summary,
    pub cdf: Vec<(f64, f64)>,
    pub sectors: Vec<Option<f64>>,
}

impl AngleReport {
    fn new(pred: &[f64], truth: &[f64]) -> Self {
        let errors: Vec<f64> = pred.iter().zip(truth).map(|(&p, &t)| angular_error(p, t)).collect();
        Self {
            summary: Summary::of(&errors),
            cdf: cdf(&errors),
            sectors: sector_means(&errors, truth),
            errors,
        }
    }

    /// `error,percentile` rows, percentile in [0, 100].
    pub fn write_cdf_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "error,percentile")?;
        for &(e, f) in &self.cdf {
            writeln!(w, "{e},{}", 100.0 * f)?;
        }
        Ok(())
    }

    /// `sector_center,mean_error` rows; empty sectors are left blank.
    pub fn write_polar_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "sector_center,mean_error")?;
        for (k, m) in self.sectors.iter().enumerate() {
            match m {
                Some(v) => writeln!(w, "{},{v}", sector_center_deg(k))?,
                None => writeln!(w, "{},", sector_center_deg(k))?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub count: usize,
    pub theta_dir: AngleReport,
    pub theta_ori: AngleReport,
    pub facing: FacingReport,
}

pub fn evaluate(predictions: &[AnglePrediction], labels: &[(f64, f64)], rule: FacingRule) -> Result<EvalReport> {
    if predictions.is_empty() || predictions.len() != labels.len() {
        return invalid("evaluation needs one prediction per label and at least one sample");
    }
    let pd: Vec<f64> = predictions.iter().map(|p| p.theta_dir_deg).collect();
    let po: Vec<f64> = predictions.iter().map(|p| p.theta_ori_deg).collect();
    let td: Vec<f64> = labels.iter().map(|l| l.0).collect();
    let to: Vec<f64> = labels.iter().map(|l| l.1).collect();
    let pairs: Vec<(f64, f64)> = pd.iter().copied().zip(po.iter().copied()).collect();
    Ok(EvalReport {
        count: labels.len(),
        theta_dir: AngleReport::new(&pd, &td),
        theta_ori: AngleReport::new(&po, &to),
        facing: facing_classify(&pairs, labels, rule),
    })
}

impl EvalReport {
    /// Writes `<prefix>report.json` plus CDF and polar CSVs for both angles.
    pub fn emit(&self, dir: impl AsRef<Path>, prefix: &str) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{prefix}report.json")), serde_json::to_string_pretty(self)?)?;
        for (name, r) in [("dir", &self.theta_dir), ("ori", &self.theta_ori)] {
            let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join(format!("{prefix}cdf_{name}.csv")))?);
            r.write_cdf_csv(&mut f)?;
            f.flush()?;
            let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join(format!("{prefix}polar_{name}.csv")))?);
            r.write_polar_csv(&mut f)?;
            f.flush()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wraparound_errors() {
        assert_eq!(angular_error(10.0, 350.0), 20.0);
        assert_eq!(angular_error(179.0, -179.0), 2.0);
        assert_eq!(angular_error(-45.0, -45.0), 0.0);
    }

    #[test]
    fn nearest_rank() {
        let s: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(percentile(&s, 50.0), 5.0);
        assert_eq!(percentile(&s, 90.0), 9.0);
        assert_eq!(percentile(&s, 91.0), 10.0);
        assert_eq!(percentile(&s, 100.0), 10.0);
    }

    #[test]
    fn cdf_merges_ties() {
        let c = cdf(&[0.0, 2.0, 2.0, 1.0]);
        assert_eq!(c, vec![(0.0, 0.25), (1.0, 0.5), (2.0, 1.0)]);
    }

    #[test]
    fn facing_examples() {
        let r = FacingRule::default();
        assert_eq!(r.classify(0.0, 0.0), FacingClass::FacingFacing);
        assert_eq!(r.classify(0.0, 180.0), FacingClass::FacingNonFacing);
        assert_eq!(r.classify(90.0, 25.0), FacingClass::NonFacingFacing);
        assert_eq!(r.classify(90.0, -25.0), FacingClass::NonFacingFacing);
        let h = FacingRule {
            half_width: true,
            ..r
        };
        assert_eq!(h.classify(12.5, 13.0), FacingClass::FacingNonFacing);
    }

    #[test]
    fn sectors_cover_the_circle() {
        let s = sector_means(&[1.0, 3.0, 5.0], &[-180.0, -171.0, 179.9]);
        assert_eq!(s[0], Some(2.0));
        assert_eq!(s[35], Some(5.0));
        assert_eq!(s.iter().filter(|v| v.is_some()).count(), 2);
    }
}
