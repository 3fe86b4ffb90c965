//! Sum-product variable elimination in the log domain.
//!
//! Each intermediate table is shifted so its largest entry is 0 and the
//! shift is carried in a running offset, so `log Z` is assembled without
//! ever exponentiating large magnitudes.

use std::collections::BTreeSet;

use rayon::prelude::*;

use super::{ExactError, ExactResult};
use crate::factor_graph::{scope_strides, FactorGraph};
use crate::propagation::metrics::{log_sum_exp, LogSumExp};
use crate::propagation::Odometer;

/// Largest intermediate table elimination will build.
pub const MAX_TABLE_ENTRIES: usize = 1 << 24;

#[derive(Debug, Clone)]
struct LogTable {
    /// Ascending variable ids.
    vars: Vec<usize>,
    values: Vec<f64>,
}

impl LogTable {
    fn from_factor(g: &FactorGraph, a: usize) -> Self {
        let f = g.factor(a);
        let cards: Vec<usize> = f.scope.iter().map(|&v| g.cardinality(v)).collect();
        let strides = scope_strides(&cards);
        let mut order: Vec<usize> = (0..f.scope.len()).collect();
        order.sort_by_key(|&k| f.scope[k]);
        let vars: Vec<usize> = order.iter().map(|&k| f.scope[k]).collect();
        let sorted_cards: Vec<usize> = order.iter().map(|&k| cards[k]).collect();
        let mut odo = Odometer::new(&sorted_cards);
        let mut values = Vec::with_capacity(f.table.len());
        for _ in 0..f.table.len() {
            let idx: usize = order.iter().zip(&odo.digits).map(|(&k, &d)| d * strides[k]).sum();
            values.push(f.table[idx].ln());
            odo.advance();
        }
        LogTable { vars, values }
    }
}

struct Eliminator<'a> {
    cards: &'a [usize],
    tables: Vec<LogTable>,
    offset: f64,
}

impl Eliminator<'_> {
    fn eliminate(&mut self, v: usize) -> Result<(), ExactError> {
        let (bucket, rest): (Vec<LogTable>, Vec<LogTable>) = std::mem::take(&mut self.tables)
            .into_iter()
            .partition(|t| t.vars.binary_search(&v).is_ok());
        self.tables = rest;
        if bucket.is_empty() {
            // unconstrained variable: every state has weight 1
            self.offset += (self.cards[v] as f64).ln();
            return Ok(());
        }

        let union: Vec<usize> = bucket
            .iter()
            .flat_map(|t| t.vars.iter().copied())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let union_cards: Vec<usize> = union.iter().map(|&u| self.cards[u]).collect();
        let entries: f64 = union_cards.iter().map(|&c| c as f64).product();
        if entries > MAX_TABLE_ENTRIES as f64 {
            return Err(ExactError::WidthTooLarge { entries });
        }
        let v_pos = union.binary_search(&v).unwrap();
        let result_vars: Vec<usize> = union.iter().copied().filter(|&u| u != v).collect();
        let result_cards: Vec<usize> = result_vars.iter().map(|&u| self.cards[u]).collect();
        let result_strides = scope_strides(&result_cards);
        let result_len: usize = result_cards.iter().product();

        // per table: (position in union, stride within the table)
        let table_maps: Vec<Vec<(usize, usize)>> = bucket
            .iter()
            .map(|t| {
                let cards: Vec<usize> = t.vars.iter().map(|&u| self.cards[u]).collect();
                t.vars
                    .iter()
                    .zip(scope_strides(&cards))
                    .map(|(u, s)| (union.binary_search(u).unwrap(), s))
                    .collect()
            })
            .collect();

        let mut acc = vec![LogSumExp::default(); result_len];
        let mut odo = Odometer::new(&union_cards);
        for _ in 0..entries as usize {
            let mut w = 0.0;
            for (t, map) in bucket.iter().zip(&table_maps) {
                let idx: usize = map.iter().map(|&(p, s)| odo.digits[p] * s).sum();
                w += t.values[idx];
            }
            let mut out = 0;
            let mut r = 0;
            for (p, &d) in odo.digits.iter().enumerate() {
                if p != v_pos {
                    out += d * result_strides[r];
                    r += 1;
                }
            }
            acc[out].add(w);
            odo.advance();
        }

        let mut values: Vec<f64> = acc.iter().map(LogSumExp::value).collect();
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for x in values.iter_mut() {
            *x -= max;
        }
        self.offset += max;
        self.tables.push(LogTable {
            vars: result_vars,
            values,
        });
        Ok(())
    }
}

impl Eliminator<'_> {
    fn log_z(&self) -> f64 {
        self.offset + self.tables.iter().map(|t| t.values[0]).sum::<f64>()
    }

    /// Marginal of `q` once every other variable is gone.
    fn marginal(&self, q: usize) -> Vec<f64> {
        let mut log_m = vec![0.0; self.cards[q]];
        for t in &self.tables {
            if t.vars.is_empty() {
                log_m.iter_mut().for_each(|x| *x += t.values[0]);
            } else {
                debug_assert_eq!(t.vars, [q]);
                log_m.iter_mut().zip(&t.values).for_each(|(x, y)| *x += y);
            }
        }
        let z = log_sum_exp(&log_m);
        log_m.iter().map(|x| (x - z).exp()).collect()
    }
}

/// `log Z` and all single-variable marginals by elimination along `order`.
///
/// Each marginal is an elimination with the query variable skipped. The
/// query at position `k` of `order` resumes from the shared state after the
/// first `k` eliminations; the resumed runs execute in parallel.
pub fn eliminate_marginals(g: &FactorGraph, order: &[usize]) -> Result<ExactResult, ExactError> {
    let n = g.num_variables();
    let mut seen = vec![false; n];
    if order.len() != n {
        return Err(ExactError::InvalidOrder);
    }
    for &v in order {
        if v >= n || seen[v] {
            return Err(ExactError::InvalidOrder);
        }
        seen[v] = true;
    }
    let cards: Vec<usize> = g.variables().iter().map(|v| v.cardinality).collect();
    let mut elim = Eliminator {
        cards: &cards,
        tables: (0..g.num_factors()).map(|a| LogTable::from_factor(g, a)).collect(),
        offset: 0.0,
    };
    // prefixes[k]: state before eliminating order[k]
    let mut prefixes = Vec::with_capacity(n);
    for &v in order {
        prefixes.push((elim.tables.clone(), elim.offset));
        elim.eliminate(v)?;
    }
    let log_z = elim.log_z();
    let mut marginals = prefixes
        .into_par_iter()
        .enumerate()
        .map(|(k, (tables, offset))| {
            let mut resumed = Eliminator {
                cards: &cards,
                tables,
                offset,
            };
            for &v in &order[k + 1..] {
                resumed.eliminate(v)?;
            }
            Ok((order[k], resumed.marginal(order[k])))
        })
        .collect::<Result<Vec<_>, ExactError>>()?;
    marginals.sort_unstable_by_key(|&(q, _)| q);
    Ok(ExactResult {
        log_z,
        marginals: marginals.into_iter().map(|(_, m)| m).collect(),
    })
}

/// Column-major order for an `n x n` grid; induced width `n`.
pub fn grid_column_major_order(n: usize) -> Vec<usize> {
    (0..n).flat_map(|col| (0..n).map(move |row| row * n + col)).collect()
}

/// Greedy min-fill order on the interaction graph; ties go to the smaller
/// degree, then the smaller id.
pub fn min_fill_order(g: &FactorGraph) -> Vec<usize> {
    let n = g.num_variables();
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for f in g.factors() {
        for &u in &f.scope {
            for &w in &f.scope {
                if u != w {
                    adj[u].insert(w);
                }
            }
        }
    }
    let mut alive = vec![true; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let best = (0..n)
            .filter(|&v| alive[v])
            .min_by_key(|&v| {
                let nb: Vec<usize> = adj[v].iter().copied().collect();
                let mut fill = 0usize;
                for (k, &x) in nb.iter().enumerate() {
                    for &y in &nb[k + 1..] {
                        if !adj[x].contains(&y) {
                            fill += 1;
                        }
                    }
                }
                (fill, nb.len(), v)
            })
            .unwrap();
        let nb: Vec<usize> = adj[best].iter().copied().collect();
        for &x in &nb {
            adj[x].remove(&best);
            for &y in &nb {
                if x != y {
                    adj[x].insert(y);
                }
            }
        }
        adj[best].clear();
        alive[best] = false;
        order.push(best);
    }
    order
}
