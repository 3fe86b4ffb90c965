use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Factor, FactorGraph, GraphError, VariableSpec};

/// Generator recorded alongside every sampled grid.
pub const GRID_RNG_NAME: &str = "ChaCha8Rng";

/// Variable id of grid cell `(row, col)` in an `n x n` grid.
#[inline]
pub fn grid_variable(n: usize, row: usize, col: usize) -> usize {
    row * n + col
}

/// Random `n x n` grid of binary variables with Potts couplings.
///
/// Every variable gets a unary factor `[1, exp(-u)]` and every horizontal or
/// vertical neighbour pair a factor `[[1, exp(-a)], [exp(-a), 1]]`, with `u`
/// and `a` drawn independently from `Uniform[-c, c]`. Boundaries are open.
///
/// Factors (and draws) are produced in a fixed order: unaries in row-major
/// variable order, then horizontal pairs row-major, then vertical pairs
/// row-major.
pub fn gen_potts_grid(n: usize, c: f64, seed: u64) -> Result<FactorGraph, GraphError> {
    if n == 0 {
        return Err(GraphError::InvalidGrid("grid side must be at least 1".into()));
    }
    if !(c.is_finite() && c >= 0.0) {
        return Err(GraphError::InvalidGrid(format!(
            "coupling bound must be finite and >= 0, got {c}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || c * (2.0 * rng.gen::<f64>() - 1.0);

    let variables = (0..n * n).map(|i| VariableSpec::new(i, 2)).collect();
    let mut factors = Vec::with_capacity(n * n + 2 * n * n.saturating_sub(1));
    for i in 0..n * n {
        let u = draw();
        factors.push(Factor::new(factors.len(), vec![i], vec![1.0, (-u).exp()]));
    }
    let push_pair = |factors: &mut Vec<Factor>, i: usize, j: usize, alpha: f64| {
        let off = (-alpha).exp();
        factors.push(Factor::new(factors.len(), vec![i, j], vec![1.0, off, off, 1.0]));
    };
    for row in 0..n {
        for col in 0..n.saturating_sub(1) {
            let alpha = draw();
            push_pair(
                &mut factors,
                grid_variable(n, row, col),
                grid_variable(n, row, col + 1),
                alpha,
            );
        }
    }
    for row in 0..n.saturating_sub(1) {
        for col in 0..n {
            let alpha = draw();
            push_pair(
                &mut factors,
                grid_variable(n, row, col),
                grid_variable(n, row + 1, col),
                alpha,
            );
        }
    }
    FactorGraph::new(variables, factors)
}
