//! Ground-truth partition function and single-variable marginals.

mod elimination;
mod enumerate;

use std::collections::HashMap;

use thiserror::Error;

use crate::factor_graph::Node;
use crate::propagation::Belief;

pub use elimination::{eliminate_marginals, grid_column_major_order, min_fill_order};
pub use enumerate::{enumerate_marginals, MAX_ENUMERATION_STATES};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExactError {
    #[error("joint state space too large to enumerate: {states} states")]
    TooLarge { states: f64 },
    #[error("elimination order needs an intermediate table of {entries} entries")]
    WidthTooLarge { entries: f64 },
    #[error("elimination order is not a permutation of the variables")]
    InvalidOrder,
    #[error("no belief for variable {0}")]
    MissingVariable(usize),
}

/// `log Z` and the exact marginal of every variable.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    pub log_z: f64,
    pub marginals: Vec<Vec<f64>>,
}

/// Mean over variables of `KL(p_exact || b)`.
pub fn avg_variable_kl(exact: &ExactResult, beliefs: &[Belief]) -> Result<f64, ExactError> {
    let by_var: HashMap<usize, &[f64]> = beliefs
        .iter()
        .filter_map(|b| match b.target {
            Node::Variable(i) => Some((i, b.probabilities.as_slice())),
            Node::Factor(_) => None,
        })
        .collect();
    if exact.marginals.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (i, p) in exact.marginals.iter().enumerate() {
        let b = by_var.get(&i).ok_or(ExactError::MissingVariable(i))?;
        total += p
            .iter()
            .zip(b.iter())
            .filter(|(&pe, _)| pe > 0.0)
            .map(|(&pe, &pb)| pe * (pe.ln() - pb.ln()))
            .sum::<f64>();
    }
    Ok(total / exact.marginals.len() as f64)
}
