//! Sum-product message passing in the log domain.
//!
//! [`MessageState`] holds one normalized log-message per directed edge.
//! [`Propagator`] owns the log-domain factor tables of a graph and computes
//! updates, beliefs and the Bethe approximation from a message state without
//! mutating it. Performing an update is a separate step,
//! [`MessageState::apply_update`], so schedulers can compute a message only
//! to look at its residual.

mod beliefs;
mod bounds;
pub mod metrics;

use thiserror::Error;

use crate::factor_graph::{EdgeId, FactorGraph, Node};

pub use beliefs::Belief;
pub use bounds::{factor_change_bound, normalized_factor_change_bound, uniform_deviation_bound};
pub use metrics::{dynamic_range, message_kl, residual, ErrorMetrics};

use metrics::{log_add_exp, normalize_log, LogSumExp};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PropagationError {
    #[error("table shapes differ: {left} vs {right} entries")]
    ShapeMismatch { left: usize, right: usize },
}

/// Odometer over the joint states of a scope, last position fastest.
#[derive(Debug, Clone)]
pub(crate) struct Odometer<'a> {
    cards: &'a [usize],
    pub digits: Vec<usize>,
}

impl<'a> Odometer<'a> {
    pub fn new(cards: &'a [usize]) -> Self {
        Odometer {
            cards,
            digits: vec![0; cards.len()],
        }
    }

    #[inline]
    pub fn advance(&mut self) {
        for k in (0..self.cards.len()).rev() {
            self.digits[k] += 1;
            if self.digits[k] < self.cards[k] {
                return;
            }
            self.digits[k] = 0;
        }
    }
}

/// One log-domain message per directed edge.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageState {
    offsets: Vec<usize>,
    values: Vec<f64>,
    versions: Vec<u64>,
}

impl MessageState {
    /// Uniform messages on every edge, versions 0.
    pub fn uniform(g: &FactorGraph) -> Self {
        let mut offsets = Vec::with_capacity(g.num_edges() + 1);
        let mut values = Vec::new();
        offsets.push(0);
        for edge in g.edges() {
            let k = g.cardinality(edge.variable);
            values.extend(std::iter::repeat_n(-(k as f64).ln(), k));
            offsets.push(values.len());
        }
        MessageState {
            offsets,
            versions: vec![0; g.num_edges()],
            values,
        }
    }

    pub fn num_edges(&self) -> usize {
        self.versions.len()
    }

    #[inline]
    pub fn get(&self, e: EdgeId) -> &[f64] {
        &self.values[self.offsets[e.0]..self.offsets[e.0 + 1]]
    }

    pub fn version(&self, e: EdgeId) -> u64 {
        self.versions[e.0]
    }

    /// Performs an update on `e`.
    ///
    /// With `damping == 0` the stored message becomes `new_msg` exactly;
    /// otherwise it becomes the normalized linear blend
    /// `(1 - damping) * new + damping * old`. Returns the stored message.
    pub fn apply_update(&mut self, e: EdgeId, new_msg: &[f64], damping: f64) -> &[f64] {
        debug_assert!((0.0..1.0).contains(&damping));
        let range = self.offsets[e.0]..self.offsets[e.0 + 1];
        let slot = &mut self.values[range];
        assert_eq!(slot.len(), new_msg.len(), "message length mismatch on edge {e}");
        if damping == 0.0 {
            slot.copy_from_slice(new_msg);
        } else {
            let (w_new, w_old) = ((1.0 - damping).ln(), damping.ln());
            for (s, &n) in slot.iter_mut().zip(new_msg) {
                *s = log_add_exp(w_new + n, w_old + *s);
            }
            normalize_log(slot);
        }
        self.versions[e.0] += 1;
        slot
    }

    /// Overwrites a message without touching its version.
    pub fn set(&mut self, e: EdgeId, msg: &[f64]) {
        self.values[self.offsets[e.0]..self.offsets[e.0 + 1]].copy_from_slice(msg);
    }
}

/// Log-domain view of a factor graph used to compute messages.
#[derive(Debug, Clone)]
pub struct Propagator<'g> {
    graph: &'g FactorGraph,
    log_tables: Vec<Vec<f64>>,
    scope_cards: Vec<Vec<usize>>,
}

impl<'g> Propagator<'g> {
    pub fn new(graph: &'g FactorGraph) -> Self {
        let log_tables = graph
            .factors()
            .iter()
            .map(|f| f.table.iter().map(|t| t.ln()).collect())
            .collect();
        let scope_cards = graph
            .factors()
            .iter()
            .map(|f| f.scope.iter().map(|&v| graph.cardinality(v)).collect())
            .collect();
        Propagator {
            graph,
            log_tables,
            scope_cards,
        }
    }

    pub fn graph(&self) -> &'g FactorGraph {
        self.graph
    }

    pub fn log_table(&self, a: usize) -> &[f64] {
        &self.log_tables[a]
    }

    pub(crate) fn scope_cards(&self, a: usize) -> &[usize] {
        &self.scope_cards[a]
    }

    pub fn init_uniform(&self) -> MessageState {
        MessageState::uniform(self.graph)
    }

    /// Computes the new value of message `e` from `msgs` without performing it.
    pub fn compute_update(&self, msgs: &MessageState, e: EdgeId) -> Vec<f64> {
        let mut out = Vec::new();
        self.compute_update_into(msgs, e, &mut out);
        out
    }

    /// Like [`compute_update`](Self::compute_update), reusing `out`'s allocation.
    pub fn compute_update_into(&self, msgs: &MessageState, e: EdgeId, out: &mut Vec<f64>) {
        let edge = *self.graph.edge(e);
        let card = self.graph.cardinality(edge.variable);
        out.clear();
        match edge.from {
            Node::Variable(i) => {
                out.resize(card, 0.0);
                let back = self.graph.reverse(e);
                for &inc in self.graph.incoming(Node::Variable(i)) {
                    if inc == back {
                        continue;
                    }
                    for (o, m) in out.iter_mut().zip(msgs.get(inc)) {
                        *o += m;
                    }
                }
            }
            Node::Factor(a) => {
                let target = edge.slot;
                let incoming = self.graph.incoming(Node::Factor(a));
                let inputs: Vec<&[f64]> = incoming.iter().map(|&inc| msgs.get(inc)).collect();
                let table = &self.log_tables[a];
                let mut acc = vec![LogSumExp::default(); card];
                let mut odo = Odometer::new(&self.scope_cards[a]);
                for &t in table {
                    let mut v = t;
                    for (k, m) in inputs.iter().enumerate() {
                        if k != target {
                            v += m[odo.digits[k]];
                        }
                    }
                    acc[odo.digits[target]].add(v);
                    odo.advance();
                }
                out.extend(acc.iter().map(LogSumExp::value));
            }
        }
        normalize_log(out);
    }

    /// Bound on the residual of every message leaving `node` when computed
    /// from uniform incoming messages.
    ///
    /// For a factor this is `max_x |log(t_hat(x) * |X|)|` with `t_hat` the
    /// table normalized to sum 1; for a variable it is 0.
    pub fn initial_priority(&self, node: Node) -> f64 {
        match node {
            Node::Variable(_) => 0.0,
            Node::Factor(a) => uniform_deviation_bound(&self.graph.factor(a).table),
        }
    }

    /// Per-edge starting priorities: the bound of each edge's source node.
    pub fn initial_priorities(&self) -> Vec<f64> {
        let per_factor: Vec<f64> = (0..self.graph.num_factors())
            .map(|a| self.initial_priority(Node::Factor(a)))
            .collect();
        self.graph
            .edges()
            .iter()
            .map(|edge| match edge.from {
                Node::Variable(_) => 0.0,
                Node::Factor(a) => per_factor[a],
            })
            .collect()
    }
}
