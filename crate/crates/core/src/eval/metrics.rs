use crate::corpus::Stars;
use crate::error::{Error, Result};

fn check(preds: &[Stars], truths: &[Stars]) -> Result<()> {
    if preds.len() != truths.len() {
        return Err(Error::InvalidInput(format!(
            "{} predictions for {} labels",
            preds.len(),
            truths.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::InvalidInput("no predictions to score".into()));
    }
    Ok(())
}

fn diffs<'a>(preds: &'a [Stars], truths: &'a [Stars]) -> impl Iterator<Item = f64> + 'a {
    preds
        .iter()
        .zip(truths)
        .map(|(p, t)| f64::from(p.get()) - f64::from(t.get()))
}

/// Mean absolute error.
pub fn mae(preds: &[Stars], truths: &[Stars]) -> Result<f64> {
    check(preds, truths)?;
    let total: f64 = diffs(preds, truths).map(f64::abs).sum();
    Ok(total / preds.len() as f64)
}

/// Root mean squared error.
pub fn rmse(preds: &[Stars], truths: &[Stars]) -> Result<f64> {
    check(preds, truths)?;
    let total: f64 = diffs(preds, truths).map(|d| d * d).sum();
    Ok((total / preds.len() as f64).sqrt())
}
