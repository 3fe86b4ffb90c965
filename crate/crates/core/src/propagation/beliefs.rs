use super::metrics::normalize_log;
use super::{MessageState, Odometer, Propagator};
use crate::factor_graph::Node;

/// A normalized marginal estimate for one variable or one factor.
///
/// Factor beliefs are flattened like the factor table.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief {
    pub target: Node,
    pub probabilities: Vec<f64>,
}

impl Belief {
    fn from_log(target: Node, log_probs: &[f64]) -> Self {
        Belief {
            target,
            probabilities: log_probs.iter().map(|l| l.exp()).collect(),
        }
    }
}

impl Propagator<'_> {
    /// Normalized log of `prod_{a ∋ i} m_{a->i}`.
    pub fn log_variable_belief(&self, msgs: &MessageState, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.graph().cardinality(i)];
        for &inc in self.graph().incoming(Node::Variable(i)) {
            for (o, m) in out.iter_mut().zip(msgs.get(inc)) {
                *o += m;
            }
        }
        normalize_log(&mut out);
        out
    }

    /// Normalized log of `t_a * prod_{i ∈ a} m_{i->a}`.
    pub fn log_factor_belief(&self, msgs: &MessageState, a: usize) -> Vec<f64> {
        let inputs: Vec<&[f64]> = self
            .graph()
            .incoming(Node::Factor(a))
            .iter()
            .map(|&e| msgs.get(e))
            .collect();
        let mut odo = Odometer::new(self.scope_cards(a));
        let mut out: Vec<f64> = self
            .log_table(a)
            .iter()
            .map(|&t| {
                let v = t + inputs.iter().enumerate().map(|(k, m)| m[odo.digits[k]]).sum::<f64>();
                odo.advance();
                v
            })
            .collect();
        normalize_log(&mut out);
        out
    }

    pub fn variable_belief(&self, msgs: &MessageState, i: usize) -> Belief {
        Belief::from_log(Node::Variable(i), &self.log_variable_belief(msgs, i))
    }

    pub fn factor_belief(&self, msgs: &MessageState, a: usize) -> Belief {
        Belief::from_log(Node::Factor(a), &self.log_factor_belief(msgs, a))
    }

    pub fn variable_beliefs(&self, msgs: &MessageState) -> Vec<Belief> {
        (0..self.graph().num_variables())
            .map(|i| self.variable_belief(msgs, i))
            .collect()
    }

    /// Factor `a`'s share of the Bethe free energy,
    /// `sum_x b_a(x) (log b_a(x) - log t_a(x))`.
    pub fn factor_free_energy(&self, msgs: &MessageState, a: usize) -> f64 {
        self.log_factor_belief(msgs, a)
            .iter()
            .zip(self.log_table(a))
            .map(|(&lb, &lt)| lb.exp() * (lb - lt))
            .sum()
    }

    /// Variable `i`'s share of the Bethe free energy,
    /// `(1 - d_i) sum_x b_i(x) log b_i(x)`.
    pub fn variable_free_energy(&self, msgs: &MessageState, i: usize) -> f64 {
        let degree = self.graph().factors_of(i).len() as f64;
        if degree == 1.0 {
            return 0.0;
        }
        let neg_entropy: f64 = self.log_variable_belief(msgs, i).iter().map(|&lb| lb.exp() * lb).sum();
        (1.0 - degree) * neg_entropy
    }

    /// `log Z_BP = -F_Bethe` evaluated at the current (possibly inconsistent)
    /// beliefs.
    pub fn bethe_log_z(&self, msgs: &MessageState) -> f64 {
        let g = self.graph();
        let factors: f64 = (0..g.num_factors()).map(|a| self.factor_free_energy(msgs, a)).sum();
        let variables: f64 = (0..g.num_variables()).map(|i| self.variable_free_energy(msgs, i)).sum();
        -(factors + variables)
    }
}

#[cfg(test)]
mod tests {
    use crate::factor_graph::{EdgeId, Factor, FactorGraph, VariableSpec};
    use crate::propagation::Propagator;
    use approx::assert_abs_diff_eq;

    fn single(table: Vec<f64>) -> FactorGraph {
        FactorGraph::new(vec![VariableSpec::new(0, 2)], vec![Factor::new(0, vec![0], table)]).unwrap()
    }

    fn converge_single(g: &FactorGraph) -> crate::propagation::MessageState {
        let prop = Propagator::new(g);
        let mut m = prop.init_uniform();
        let v = prop.compute_update(&m, EdgeId(1));
        m.apply_update(EdgeId(1), &v, 0.0);
        m
    }

    #[test]
    fn bethe_on_single_variable() {
        let g = single(vec![1.0, 1.0]);
        let prop = Propagator::new(&g);
        let m = converge_single(&g);
        assert_abs_diff_eq!(prop.bethe_log_z(&m), 2f64.ln(), epsilon = 1e-14);

        let g = single(vec![1.0, (-1.0f64).exp()]);
        let prop = Propagator::new(&g);
        let m = converge_single(&g);
        assert_abs_diff_eq!(prop.bethe_log_z(&m), (1.0 + (-1.0f64).exp()).ln(), epsilon = 1e-14);
    }

    #[test]
    fn uniform_beliefs_for_uniform_model() {
        let g = crate::factor_graph::gen_potts_grid(3, 0.0, 0).unwrap();
        let prop = Propagator::new(&g);
        let m = prop.init_uniform();
        for b in prop.variable_beliefs(&m) {
            assert!(b.probabilities.iter().all(|&p| (p - 0.5).abs() < 1e-15));
        }
        for a in 0..g.num_factors() {
            let b = prop.factor_belief(&m, a);
            let k = b.probabilities.len() as f64;
            assert!(b.probabilities.iter().all(|&p| (p - 1.0 / k).abs() < 1e-15));
            assert!((b.probabilities.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }
}
