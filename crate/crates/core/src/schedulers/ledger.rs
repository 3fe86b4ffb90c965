//! Total-residual bookkeeping for the estimated-residual schedule.
//!
//! For every directed edge `c -> d` the ledger keeps one accumulator per
//! input edge `b -> c` (`b != d`) holding the summed residuals of `b -> c`
//! since `c -> d` was last performed, plus a source term for changes that do
//! not come through an input message (a factor table differing from the one
//! the current message was computed with). The estimated residual of
//! `c -> d` is the sum of all of these.

use crate::factor_graph::{EdgeId, FactorGraph};

#[derive(Debug, Clone)]
pub struct ResidualLedger {
    offsets: Vec<usize>,
    accumulators: Vec<f64>,
    source: Vec<f64>,
    /// Per edge `b -> c`: `(c -> d, flat accumulator index)` for each dependent.
    feeds: Vec<Vec<(EdgeId, usize)>>,
}

impl ResidualLedger {
    /// A zeroed ledger with the given per-edge source terms.
    pub fn new(g: &FactorGraph, source: Vec<f64>) -> Self {
        assert_eq!(source.len(), g.num_edges());
        let mut offsets = Vec::with_capacity(g.num_edges() + 1);
        offsets.push(0);
        for e in g.edge_ids() {
            offsets.push(offsets[e.0] + g.inputs(e).len());
        }
        let feeds = g
            .edge_ids()
            .map(|e| {
                g.dependents(e)
                    .iter()
                    .map(|&dep| {
                        let k = g.inputs(dep).iter().position(|&x| x == e).unwrap();
                        (dep, offsets[dep.0] + k)
                    })
                    .collect()
            })
            .collect();
        ResidualLedger {
            accumulators: vec![0.0; offsets[g.num_edges()]],
            offsets,
            source,
            feeds,
        }
    }

    /// Accumulators feeding `e`, aligned with `FactorGraph::inputs(e)`.
    pub fn accumulators(&self, e: EdgeId) -> &[f64] {
        &self.accumulators[self.offsets[e.0]..self.offsets[e.0 + 1]]
    }

    pub fn source_term(&self, e: EdgeId) -> f64 {
        self.source[e.0]
    }

    /// Replaces the source term of `e`.
    pub fn set_source_term(&mut self, e: EdgeId, value: f64) {
        debug_assert!(value >= 0.0);
        self.source[e.0] = value;
    }

    /// Upper bound on the residual `e` would have if computed now.
    pub fn priority(&self, e: EdgeId) -> f64 {
        self.source[e.0] + self.accumulators(e).iter().sum::<f64>()
    }

    /// `e` was just performed: everything feeding it is consumed.
    pub fn reset(&mut self, e: EdgeId) {
        self.accumulators[self.offsets[e.0]..self.offsets[e.0 + 1]].fill(0.0);
        self.source[e.0] = 0.0;
    }

    /// Adds the residual of a performed update of `e` to every edge it feeds
    /// and returns those edges.
    pub fn record(&mut self, e: EdgeId, residual: f64) -> impl Iterator<Item = EdgeId> + '_ {
        debug_assert!(residual >= 0.0);
        let accumulators = &mut self.accumulators;
        self.feeds[e.0].iter().map(move |&(dep, idx)| {
            accumulators[idx] += residual;
            dep
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor_graph::gen_potts_grid;

    #[test]
    fn record_and_reset() {
        let g = gen_potts_grid(2, 1.0, 0).unwrap();
        let mut ledger = ResidualLedger::new(&g, vec![0.0; g.num_edges()]);
        let e = g.edge_ids().find(|&e| !g.dependents(e).is_empty()).unwrap();
        let touched: Vec<EdgeId> = ledger.record(e, 0.25).collect();
        assert_eq!(touched, g.dependents(e));
        let touched2: Vec<EdgeId> = ledger.record(e, 0.5).collect();
        assert_eq!(touched, touched2);
        for &dep in &touched {
            assert_eq!(ledger.priority(dep), 0.75);
            let k = g.inputs(dep).iter().position(|&x| x == e).unwrap();
            assert_eq!(ledger.accumulators(dep)[k], 0.75);
            ledger.reset(dep);
            assert_eq!(ledger.priority(dep), 0.0);
        }
    }

    #[test]
    fn source_terms_count_until_reset() {
        let g = gen_potts_grid(2, 1.0, 0).unwrap();
        let source: Vec<f64> = (0..g.num_edges()).map(|k| k as f64).collect();
        let mut ledger = ResidualLedger::new(&g, source);
        assert_eq!(ledger.priority(EdgeId(3)), 3.0);
        ledger.reset(EdgeId(3));
        assert_eq!(ledger.source_term(EdgeId(3)), 0.0);
    }

    proptest::proptest! {
        #[test]
        fn accumulators_only_grow_or_reset(
            ops in proptest::collection::vec((0usize..1000, 0.0f64..2.0, proptest::bool::ANY), 1..200)
        ) {
            let g = gen_potts_grid(3, 1.0, 0).unwrap();
            let mut ledger = ResidualLedger::new(&g, vec![0.0; g.num_edges()]);
            let mut before: Vec<Vec<f64>> = g.edge_ids().map(|e| ledger.accumulators(e).to_vec()).collect();
            for (pick, r, reset) in ops {
                let e = EdgeId(pick % g.num_edges());
                if reset {
                    ledger.reset(e);
                } else {
                    ledger.record(e, r).for_each(drop);
                }
                for f in g.edge_ids() {
                    let now = ledger.accumulators(f);
                    for (old, new) in before[f.0].iter().zip(now) {
                        proptest::prop_assert!(*new >= 0.0);
                        proptest::prop_assert!(*new >= *old || (reset && f == e && *new == 0.0));
                    }
                    proptest::prop_assert!((ledger.priority(f) - now.iter().sum::<f64>()).abs() < 1e-12);
                    before[f.0] = now.to_vec();
                }
            }
        }
    }
}
