use crate::error::{Error, Result};
use crate::numkern::Matrix;

use super::network::{Model, Pass};
use super::params::Gradients;

/// One participant as fed to a batched pass.
#[derive(Debug, Clone, Copy)]
pub struct BatchItem<'a> {
    pub segments: &'a Matrix,
    pub mask: &'a [bool],
    pub labels: &'a [u8],
}

#[derive(Debug, Clone)]
pub struct BatchResult {
    pub loss: f64,
    pub grads: Gradients,
}

/// Zero rows appended up to `rows`, with the extra positions masked out.
pub fn pad_to(segments: &Matrix, mask: &[bool], rows: usize) -> (Matrix, Vec<bool>) {
    let mut data = segments.as_slice().to_vec();
    data.resize(rows * segments.cols(), 0.0);
    let mut m = mask.to_vec();
    m.resize(rows, false);
    let padded = Matrix::from_vec(rows, segments.cols(), data).expect("sized");
    (padded, m)
}

/// Mean loss and mean gradients over a batch.
///
/// Participants are padded to the longest one and the padding is masked.
/// In a training pass, participant `i` draws its dropout masks with slot `i`
/// of the given key.
pub fn batch_forward_backward(model: &Model, batch: &[BatchItem<'_>], pass: Pass) -> Result<BatchResult> {
    if batch.is_empty() {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    let max_rows = batch.iter().map(|b| b.segments.rows()).max().unwrap_or(0);
    let mut loss_sum = 0.0;
    let mut grads: Option<Gradients> = None;
    for (slot, item) in batch.iter().enumerate() {
        let (padded, mask) = pad_to(item.segments, item.mask, max_rows);
        let item_pass = match pass {
            Pass::Eval => Pass::Eval,
            Pass::Train(key) => Pass::Train(key.with_slot(slot as u32)),
        };
        let out = model.backward(&padded, &mask, item.labels, item_pass)?;
        loss_sum += out.loss;
        match grads.as_mut() {
            None => grads = Some(out.grads),
            Some(acc) => acc.add_assign(&out.grads),
        }
    }
    let n = batch.len() as f64;
    let mut grads = grads.expect("non-empty batch");
    grads.div_scalar(n);
    Ok(BatchResult {
        loss: loss_sum / n,
        grads,
    })
}
