//! Residual bounds that need no message computation.

use super::PropagationError;

/// `max_x |log(new(x) / old(x))|` over two tables of the same shape.
///
/// Bounds the residual of every message leaving a factor whose table changed
/// from `old` to `new`, all other messages held fixed.
pub fn factor_change_bound(old: &[f64], new: &[f64]) -> Result<f64, PropagationError> {
    if old.len() != new.len() {
        return Err(PropagationError::ShapeMismatch {
            left: old.len(),
            right: new.len(),
        });
    }
    Ok(old
        .iter()
        .zip(new)
        .map(|(o, n)| (n.ln() - o.ln()).abs())
        .fold(0.0, f64::max))
}

/// [`factor_change_bound`] after normalizing both tables to sum 1.
///
/// Rescaling a factor does not change any normalized message, so this is the
/// bound that matters for normalized BP.
pub fn normalized_factor_change_bound(old: &[f64], new: &[f64]) -> Result<f64, PropagationError> {
    if old.len() != new.len() {
        return Err(PropagationError::ShapeMismatch {
            left: old.len(),
            right: new.len(),
        });
    }
    let log_z_old = old.iter().sum::<f64>().ln();
    let log_z_new = new.iter().sum::<f64>().ln();
    Ok(old
        .iter()
        .zip(new)
        .map(|(o, n)| ((n.ln() - log_z_new) - (o.ln() - log_z_old)).abs())
        .fold(0.0, f64::max))
}

/// Normalized change bound of `table` against the uniform table of the same
/// shape: `max_x |log(t_hat(x) * |X|)|`.
pub fn uniform_deviation_bound(table: &[f64]) -> f64 {
    let log_states = (table.len() as f64).ln();
    let log_z = table.iter().sum::<f64>().ln();
    table
        .iter()
        .map(|t| (t.ln() - log_z + log_states).abs())
        .fold(0.0, f64::max)
}
