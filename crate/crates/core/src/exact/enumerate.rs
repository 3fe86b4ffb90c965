use super::{ExactError, ExactResult};
use crate::factor_graph::{scope_strides, FactorGraph};
use crate::propagation::metrics::LogSumExp;
use crate::propagation::Odometer;

/// Largest joint state space [`enumerate_marginals`] accepts.
pub const MAX_ENUMERATION_STATES: usize = 1 << 22;

/// Exhaustive sum over every joint assignment, in the log domain.
pub fn enumerate_marginals(g: &FactorGraph) -> Result<ExactResult, ExactError> {
    let cards: Vec<usize> = g.variables().iter().map(|v| v.cardinality).collect();
    let states: f64 = cards.iter().map(|&c| c as f64).product();
    if states > MAX_ENUMERATION_STATES as f64 {
        return Err(ExactError::TooLarge { states });
    }
    let states = states as usize;

    let log_tables: Vec<Vec<f64>> = g
        .factors()
        .iter()
        .map(|f| f.table.iter().map(|t| t.ln()).collect())
        .collect();
    let strides: Vec<Vec<usize>> = g
        .factors()
        .iter()
        .map(|f| scope_strides(&f.scope.iter().map(|&v| cards[v]).collect::<Vec<_>>()))
        .collect();

    let mut total = LogSumExp::default();
    let mut per_state: Vec<Vec<LogSumExp>> = cards.iter().map(|&c| vec![LogSumExp::default(); c]).collect();
    let mut odo = Odometer::new(&cards);
    for _ in 0..states {
        let mut w = 0.0;
        for (f, (table, st)) in g.factors().iter().zip(log_tables.iter().zip(&strides)) {
            let idx: usize = f.scope.iter().zip(st).map(|(&v, &s)| odo.digits[v] * s).sum();
            w += table[idx];
        }
        total.add(w);
        for (acc, &x) in per_state.iter_mut().zip(&odo.digits) {
            acc[x].add(w);
        }
        odo.advance();
    }

    let log_z = total.value();
    let marginals = per_state
        .iter()
        .map(|accs| accs.iter().map(|a| (a.value() - log_z).exp()).collect())
        .collect();
    Ok(ExactResult { log_z, marginals })
}
