//! RMSE, MAE and Lin's concordance correlation coefficient.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::ParticipantRecord;
use crate::error::{Error, Result};
use crate::model::{Model, Pass, NUM_SYMPTOMS, SYMPTOM_NAMES};

fn check_pair(pred: &[f64], truth: &[f64], min_len: usize) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::InvalidInput(format!(
            "prediction length {} differs from truth length {}",
            pred.len(),
            truth.len()
        )));
    }
    if pred.len() < min_len {
        return Err(Error::InvalidInput(format!(
            "need at least {min_len} points, got {}",
            pred.len()
        )));
    }
    Ok(())
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair(pred, truth, 1)?;
    let sq: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((sq / pred.len() as f64).sqrt())
}

pub fn mae(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair(pred, truth, 1)?;
    let abs: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t).abs()).sum();
    Ok(abs / pred.len() as f64)
}

/// Population moments: (mean a, mean b, var a, var b, cov).
fn moments(a: &[f64], b: &[f64]) -> (f64, f64, f64, f64, f64) {
    let n = a.len() as f64;
    let (ma, mb) = (mean(a), mean(b));
    let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        va += dx * dx;
        vb += dy * dy;
        cov += dx * dy;
    }
    (ma, mb, va / n, vb / n, cov / n)
}

/// Lin's CCC with population moments. Two constant vectors with equal means
/// score 1; any other zero denominator scores 0.
pub fn ccc(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair(pred, truth, 2)?;
    let (mp, mt, vp, vt, cov) = moments(pred, truth);
    if vp == 0.0 && vt == 0.0 && mp == mt {
        return Ok(1.0);
    }
    // sum the symmetric terms in a fixed order so ccc(a,b) == ccc(b,a)
    let (lo, hi) = if vp <= vt { (vp, vt) } else { (vt, vp) };
    let diff = mp - mt;
    let denom = lo + hi + diff * diff;
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * cov / denom)
}

/// Pearson correlation; 0 when either side is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b, 2)?;
    let (_, _, va, vb, cov) = moments(a, b);
    if va == 0.0 || vb == 0.0 {
        return Ok(0.0);
    }
    Ok(cov / (va.sqrt() * vb.sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TotalMetrics {
    pub rmse: f64,
    pub mae: f64,
    pub ccc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymptomMetrics {
    pub symptom: String,
    pub rmse: f64,
    pub mae: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub total: TotalMetrics,
    pub per_symptom: Vec<SymptomMetrics>,
    pub n: usize,
}

/// Predicted and true scores for one participant.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub id: String,
    pub scores: [f64; NUM_SYMPTOMS],
    pub labels: [u8; NUM_SYMPTOMS],
}

impl MetricsReport {
    /// Builds a report from predictions, in the order given.
    pub fn from_predictions(preds: &[Prediction]) -> Result<Self> {
        if preds.is_empty() {
            return Err(Error::InvalidInput("cannot evaluate an empty split".into()));
        }
        let total_pred: Vec<f64> = preds.iter().map(|p| p.scores.iter().sum()).collect();
        let total_true: Vec<f64> = preds
            .iter()
            .map(|p| p.labels.iter().map(|&l| l as f64).sum())
            .collect();
        let total = TotalMetrics {
            rmse: rmse(&total_pred, &total_true)?,
            mae: mae(&total_pred, &total_true)?,
            // a single participant has no spread to agree on
            ccc: if preds.len() >= 2 {
                ccc(&total_pred, &total_true)?
            } else {
                0.0
            },
        };
        let mut per_symptom = Vec::with_capacity(NUM_SYMPTOMS);
        for (s, name) in SYMPTOM_NAMES.iter().enumerate() {
            let p: Vec<f64> = preds.iter().map(|x| x.scores[s]).collect();
            let t: Vec<f64> = preds.iter().map(|x| x.labels[s] as f64).collect();
            per_symptom.push(SymptomMetrics {
                symptom: name.to_string(),
                rmse: rmse(&p, &t)?,
                mae: mae(&p, &t)?,
            });
        }
        Ok(Self {
            total,
            per_symptom,
            n: preds.len(),
        })
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<14} {:>8} {:>8} {:>8}", "", "RMSE", "MAE", "CCC");
        let _ = writeln!(
            out,
            "{:<14} {:>8.4} {:>8.4} {:>8.4}",
            "total", self.total.rmse, self.total.mae, self.total.ccc
        );
        for s in &self.per_symptom {
            let _ = writeln!(out, "{:<14} {:>8.4} {:>8.4} {:>8}", s.symptom, s.rmse, s.mae, "-");
        }
        let _ = writeln!(out, "n = {}", self.n);
        out
    }
}

/// Dropout-off predictions for each record, sorted by id.
pub fn predict(model: &Model, records: &[&ParticipantRecord]) -> Result<Vec<Prediction>> {
    let mut sorted: Vec<&ParticipantRecord> = records.to_vec();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    sorted
        .into_iter()
        .map(|r| {
            let out = model.forward(&r.segments, &r.mask(), Pass::Eval)?;
            Ok(Prediction {
                id: r.id.clone(),
                scores: out.symptom_scores,
                labels: r.labels,
            })
        })
        .collect()
}

pub fn evaluate(model: &Model, records: &[&ParticipantRecord]) -> Result<MetricsReport> {
    if records.is_empty() {
        return Err(Error::InvalidInput("cannot evaluate an empty split".into()));
    }
    MetricsReport::from_predictions(&predict(model, records)?)
}
