#![allow(dead_code)]

use bpsched::{Factor, FactorGraph, VariableSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random tree-structured model over `2..=max_vars` binary variables: one
/// unary factor per variable and one pairwise factor per tree edge, every
/// log-entry uniform in `[-scale, scale]`.
pub fn random_tree(seed: u64, max_vars: usize, scale: f64) -> FactorGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=max_vars);
    let entry = |rng: &mut ChaCha8Rng| (scale * (2.0 * rng.gen::<f64>() - 1.0)).exp();
    let mut factors = Vec::new();
    for v in 0..n {
        let table = vec![entry(&mut rng), entry(&mut rng)];
        factors.push(Factor::new(factors.len(), vec![v], table));
    }
    for v in 1..n {
        let parent = rng.gen_range(0..v);
        let scope = if rng.gen::<bool>() {
            vec![parent, v]
        } else {
            vec![v, parent]
        };
        let table = (0..4).map(|_| entry(&mut rng)).collect();
        factors.push(Factor::new(factors.len(), scope, table));
    }
    let variables = (0..n).map(|i| VariableSpec::new(i, 2)).collect();
    FactorGraph::new(variables, factors).unwrap()
}

/// Random normalized log message over `card` states.
pub fn random_log_message(rng: &mut impl Rng, card: usize, spread: f64) -> Vec<f64> {
    let mut m: Vec<f64> = (0..card).map(|_| spread * (2.0 * rng.gen::<f64>() - 1.0)).collect();
    let z = m.iter().map(|x| x.exp()).sum::<f64>().ln();
    m.iter_mut().for_each(|x| *x -= z);
    m
}

/// `m` moved by a random log-perturbation of size up to `step`, renormalized.
pub fn perturb(rng: &mut impl Rng, m: &[f64], step: f64) -> Vec<f64> {
    let mut out: Vec<f64> = m.iter().map(|x| x + step * (2.0 * rng.gen::<f64>() - 1.0)).collect();
    let z = out.iter().map(|x| x.exp()).sum::<f64>().ln();
    out.iter_mut().for_each(|x| *x -= z);
    out
}

pub fn sup_log_ratio(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn log_spread(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    d.iter().copied().fold(f64::NEG_INFINITY, f64::max) - d.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Single factor of random arity and cardinalities with a random positive
/// table, plus the slot of the output variable.
pub struct RandomFactor {
    pub cards: Vec<usize>,
    pub table: Vec<f64>,
    pub target: usize,
}

impl RandomFactor {
    pub fn sample(rng: &mut impl Rng, max_arity: usize, max_card: usize) -> Self {
        let arity = rng.gen_range(1..=max_arity);
        let cards: Vec<usize> = (0..arity).map(|_| rng.gen_range(2..=max_card)).collect();
        let size: usize = cards.iter().product();
        let table = (0..size)
            .map(|_| (3.0 * (2.0 * rng.gen::<f64>() - 1.0)).exp())
            .collect();
        let target = rng.gen_range(0..arity);
        RandomFactor { cards, table, target }
    }

    pub fn graph(&self) -> FactorGraph {
        let variables = self
            .cards
            .iter()
            .enumerate()
            .map(|(i, &c)| VariableSpec::new(i, c))
            .collect();
        let scope = (0..self.cards.len()).collect();
        FactorGraph::new(variables, vec![Factor::new(0, scope, self.table.clone())]).unwrap()
    }

    /// Log of `sum_{x \ x_target} t(x) prod_{k != target} m_k(x_k)` without
    /// normalization; `inputs[target]` is ignored. Direct enumeration with
    /// the last scope variable fastest.
    pub fn raw_update(&self, inputs: &[Vec<f64>]) -> Vec<f64> {
        let mut out = vec![0.0; self.cards[self.target]];
        let mut digits = vec![0usize; self.cards.len()];
        for &t in &self.table {
            let mut w = t;
            for (k, m) in inputs.iter().enumerate() {
                if k != self.target {
                    w *= m[digits[k]].exp();
                }
            }
            out[digits[self.target]] += w;
            for k in (0..digits.len()).rev() {
                digits[k] += 1;
                if digits[k] < self.cards[k] {
                    break;
                }
                digits[k] = 0;
            }
        }
        out.iter().map(|x| x.ln()).collect()
    }
}
