use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Corpus, Relevance, Split};
use crate::error::{Error, Result};
use crate::json;
use crate::model::{entropy, export_attention, top_k, Pass, NUM_SYMPTOMS, SYMPTOM_NAMES};
use crate::optim::Checkpoint;

use super::run::create_dir;

pub const ATTENTION_DIR: &str = "attention";
pub const ATTENTION_SUMMARY_FILE: &str = "attention_summary.json";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recovery {
    pub hits: usize,
    pub total: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymptomEntropy {
    pub symptom: String,
    pub mean_entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionSummary {
    pub split: Split,
    pub n_participants: usize,
    /// Share of (participant, symptom) pairs with a positive label whose top-1
    /// segment is a planted one. Only present when relevance is known.
    pub planted_recovery: Option<Recovery>,
    pub entropy: Vec<SymptomEntropy>,
}

/// Exports one attention artifact per participant of `split` under
/// `out/attention/` and writes a summary next to it.
pub fn run_attention_report(
    checkpoint: &Checkpoint,
    corpus: &Corpus,
    relevance: Option<&[Relevance]>,
    split: Split,
    out: &Path,
) -> Result<AttentionSummary> {
    let expected = checkpoint.config.model.embed_dim;
    if corpus.d_k != expected {
        return Err(Error::Validation(format!(
            "checkpoint expects {expected}-dimensional embeddings, corpus has {}",
            corpus.d_k
        )));
    }
    let model = checkpoint.model()?;
    let records = corpus.split(split);
    if records.is_empty() {
        return Err(Error::InvalidInput(format!("{} split is empty", split.as_str())));
    }
    let dir = out.join(ATTENTION_DIR);
    create_dir(&dir)?;

    let mut entropy_sum = [0.0; NUM_SYMPTOMS];
    let (mut hits, mut total) = (0, 0);
    for r in &records {
        let output = model.forward(&r.segments, &r.mask(), Pass::Eval)?;
        let record = export_attention(&output, &r.id, r.segment_ids.as_deref());
        json::write_file(dir.join(format!("{}.json", r.id)), &record)?;
        for (s, sum) in entropy_sum.iter_mut().enumerate() {
            *sum += entropy(output.attention.row(s));
        }
        let planted = relevance.and_then(|rel| {
            rel.binary_search_by(|x| x.id.as_str().cmp(&r.id))
                .ok()
                .map(|i| &rel[i])
        });
        if let Some(p) = planted {
            for s in 0..NUM_SYMPTOMS {
                if r.labels[s] == 0 {
                    continue;
                }
                total += 1;
                let top = top_k(output.attention.row(s), 1)[0];
                if p.relevant[s].contains(&top) {
                    hits += 1;
                }
            }
        }
    }
    let n = records.len();
    let summary = AttentionSummary {
        split,
        n_participants: n,
        planted_recovery: (relevance.is_some() && total > 0).then(|| Recovery {
            hits,
            total,
            rate: hits as f64 / total as f64,
        }),
        entropy: SYMPTOM_NAMES
            .iter()
            .zip(entropy_sum)
            .map(|(name, sum)| SymptomEntropy {
                symptom: name.to_string(),
                mean_entropy: sum / n as f64,
            })
            .collect(),
    };
    json::write_file(out.join(ATTENTION_SUMMARY_FILE), &summary)?;
    Ok(summary)
}
