use serde::{Deserialize, Serialize};

use super::config::SYMPTOM_NAMES;
use super::network::ForwardOutput;

pub const TOP_K: usize = 3;

/// Per-participant attention artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionRecord {
    pub participant_id: String,
    pub symptom_names: Vec<String>,
    pub segment_ids: Vec<String>,
    pub weights: Vec<Vec<f64>>,
    pub topk: Vec<Vec<usize>>,
}

/// Indices of the `k` largest entries, largest first; equal weights keep the
/// lower index first.
pub fn top_k(row: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..row.len()).collect();
    // stable sort keeps ascending index order among ties
    idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]));
    idx.truncate(k);
    idx
}

/// Builds the artifact. `segment_ids`, when given, replace the positional ids
/// of the forward output.
pub fn export_attention(
    output: &ForwardOutput,
    participant_id: &str,
    segment_ids: Option<&[String]>,
) -> AttentionRecord {
    let att = &output.attention;
    let n = att.num_segments();
    let weights: Vec<Vec<f64>> = (0..SYMPTOM_NAMES.len()).map(|s| att.row(s).to_vec()).collect();
    let topk = weights.iter().map(|row| top_k(row, TOP_K.min(n))).collect();
    let segment_ids = match segment_ids {
        Some(ids) if ids.len() == n => ids.to_vec(),
        _ => att.segment_ids.clone(),
    };
    AttentionRecord {
        participant_id: participant_id.to_string(),
        symptom_names: SYMPTOM_NAMES.iter().map(|s| s.to_string()).collect(),
        segment_ids,
        weights,
        topk,
    }
}

/// Shannon entropy (nats) of a probability row; zero entries contribute 0.
pub fn entropy(row: &[f64]) -> f64 {
    -row.iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}
