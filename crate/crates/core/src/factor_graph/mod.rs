//! Discrete factor graphs with strictly positive tabular factors.
//!
//! Directed edges are numbered densely so that per-edge state (messages,
//! queue positions, ledger accumulators) can live in flat arrays. The
//! numbering is sorted by the source node and then the destination node,
//! with every variable ordered before every factor:
//!
//! ```text
//! var 0 -> factor a0 < var 0 -> factor a1 < ... < var V-1 -> ...
//!     < factor 0 -> var i0 < factor 0 -> var i1 < ... < factor F-1 -> ...
//! ```
//!
//! Schedulers break priority ties by insertion order, and every initial
//! insertion follows this numbering, so run statistics are reproducible.

mod format;
mod potts;

use std::fmt;

use thiserror::Error;

pub use format::{load_model, save_model, FORMAT_HEADER};
pub use potts::{gen_potts_grid, grid_variable, GRID_RNG_NAME};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("factor {factor}: table entry {index} is {value}, entries must be finite and > 0")]
    NonPositiveEntry { factor: usize, index: usize, value: f64 },
    #[error("factor {factor}: table has {found} entries, scope requires {expected}")]
    ScopeMismatch {
        factor: usize,
        expected: usize,
        found: usize,
    },
    #[error("factor {factor}: unknown variable {variable}")]
    UnknownVariable { factor: usize, variable: usize },
    #[error("factor {factor}: variable {variable} appears twice in the scope")]
    DuplicateScopeVariable { factor: usize, variable: usize },
    #[error("factor {factor}: empty scope")]
    EmptyScope { factor: usize },
    #[error("variable {variable}: cardinality must be at least 1")]
    ZeroCardinality { variable: usize },
    #[error("variable at position {position} has id {id}; ids must be dense and ordered")]
    VariableIdMismatch { position: usize, id: usize },
    #[error("factor at position {position} has id {id}; ids must be dense and ordered")]
    FactorIdMismatch { position: usize, id: usize },
    #[error("invalid grid parameters: {0}")]
    InvalidGrid(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// A discrete variable. Ids are dense, `0..V`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VariableSpec {
    pub id: usize,
    pub cardinality: usize,
}

impl VariableSpec {
    pub fn new(id: usize, cardinality: usize) -> Self {
        VariableSpec { id, cardinality }
    }
}

/// A tabular factor over an ordered scope.
///
/// `table` is flattened row-major with the last scope variable varying
/// fastest. Entries are in the linear domain and strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub id: usize,
    pub scope: Vec<usize>,
    pub table: Vec<f64>,
}

impl Factor {
    pub fn new(id: usize, scope: Vec<usize>, table: Vec<f64>) -> Self {
        Factor { id, scope, table }
    }
}

/// Either endpoint of a directed edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Variable(usize),
    Factor(usize),
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Variable(i) => write!(f, "v{i}"),
            Node::Factor(a) => write!(f, "f{a}"),
        }
    }
}

/// Dense index of a directed edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub usize);

impl EdgeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A directed edge between a variable and a factor that contains it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub from: Node,
    pub to: Node,
    /// The variable endpoint; messages on this edge range over its states.
    pub variable: usize,
    /// The factor endpoint.
    pub factor: usize,
    /// Position of `variable` in the factor's scope.
    pub slot: usize,
}

impl Edge {
    pub fn is_factor_to_variable(&self) -> bool {
        matches!(self.from, Node::Factor(_))
    }
}

/// An immutable, validated factor graph.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorGraph {
    variables: Vec<VariableSpec>,
    factors: Vec<Factor>,
    /// Factors containing each variable, ascending.
    var_factors: Vec<Vec<usize>>,
    edges: Vec<Edge>,
    /// Per variable: edge `i -> var_factors[i][k]`.
    var_out: Vec<Vec<EdgeId>>,
    /// Per variable: edge `var_factors[i][k] -> i`.
    var_in: Vec<Vec<EdgeId>>,
    /// Per factor: edge `a -> scope[slot]`.
    factor_out: Vec<Vec<EdgeId>>,
    /// Per factor: edge `scope[slot] -> a`.
    factor_in: Vec<Vec<EdgeId>>,
    reverse: Vec<EdgeId>,
    /// Edges `b -> c` feeding `c -> d`, i.e. `b` in `N(c) \ d`.
    inputs: Vec<Vec<EdgeId>>,
    /// Edges `c -> d` fed by `b -> c`, i.e. `d` in `N(c) \ b`.
    dependents: Vec<Vec<EdgeId>>,
}

impl FactorGraph {
    /// Validates the model and builds adjacency and the edge numbering.
    pub fn new(variables: Vec<VariableSpec>, factors: Vec<Factor>) -> Result<Self, GraphError> {
        for (position, v) in variables.iter().enumerate() {
            if v.id != position {
                return Err(GraphError::VariableIdMismatch { position, id: v.id });
            }
            if v.cardinality == 0 {
                return Err(GraphError::ZeroCardinality { variable: v.id });
            }
        }
        for (position, f) in factors.iter().enumerate() {
            if f.id != position {
                return Err(GraphError::FactorIdMismatch { position, id: f.id });
            }
            validate_factor(&variables, f)?;
        }

        let num_vars = variables.len();
        let mut var_factors = vec![Vec::new(); num_vars];
        for f in &factors {
            for &v in &f.scope {
                var_factors[v].push(f.id);
            }
        }
        // factor ids are visited in order, so each list is already ascending

        let mut edges = Vec::new();
        let mut var_out = vec![Vec::new(); num_vars];
        for (i, fs) in var_factors.iter().enumerate() {
            for &a in fs {
                let slot = factors[a].scope.iter().position(|&v| v == i).unwrap();
                var_out[i].push(EdgeId(edges.len()));
                edges.push(Edge {
                    from: Node::Variable(i),
                    to: Node::Factor(a),
                    variable: i,
                    factor: a,
                    slot,
                });
            }
        }
        let mut factor_out = Vec::with_capacity(factors.len());
        for f in &factors {
            let mut by_var: Vec<(usize, usize)> = f.scope.iter().enumerate().map(|(slot, &v)| (v, slot)).collect();
            by_var.sort_unstable();
            let mut out = vec![EdgeId(0); f.scope.len()];
            for (v, slot) in by_var {
                out[slot] = EdgeId(edges.len());
                edges.push(Edge {
                    from: Node::Factor(f.id),
                    to: Node::Variable(v),
                    variable: v,
                    factor: f.id,
                    slot,
                });
            }
            factor_out.push(out);
        }

        let mut factor_in: Vec<Vec<EdgeId>> = factors.iter().map(|f| vec![EdgeId(0); f.scope.len()]).collect();
        for out in &var_out {
            for &e in out {
                let edge = edges[e.0];
                factor_in[edge.factor][edge.slot] = e;
            }
        }
        let mut var_in: Vec<Vec<EdgeId>> = var_factors.iter().map(|fs| vec![EdgeId(0); fs.len()]).collect();
        let mut reverse = vec![EdgeId(0); edges.len()];
        for (a, out) in factor_out.iter().enumerate() {
            for (slot, &e) in out.iter().enumerate() {
                let i = factors[a].scope[slot];
                let k = var_factors[i].binary_search(&a).unwrap();
                var_in[i][k] = e;
                let back = factor_in[a][slot];
                reverse[e.0] = back;
                reverse[back.0] = e;
            }
        }

        let mut inputs = Vec::with_capacity(edges.len());
        let mut dependents = Vec::with_capacity(edges.len());
        for (idx, edge) in edges.iter().enumerate() {
            let back = reverse[idx];
            let incoming = match edge.from {
                Node::Variable(i) => &var_in[i],
                Node::Factor(a) => &factor_in[a],
            };
            inputs.push(incoming.iter().copied().filter(|&e| e != back).collect());
            let outgoing = match edge.to {
                Node::Variable(i) => &var_out[i],
                Node::Factor(a) => &factor_out[a],
            };
            dependents.push(outgoing.iter().copied().filter(|&e| e != back).collect());
        }

        Ok(FactorGraph {
            variables,
            factors,
            var_factors,
            edges,
            var_out,
            var_in,
            factor_out,
            factor_in,
            reverse,
            inputs,
            dependents,
        })
    }

    pub fn variables(&self) -> &[VariableSpec] {
        &self.variables
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn num_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn cardinality(&self, variable: usize) -> usize {
        self.variables[variable].cardinality
    }

    pub fn factor(&self, a: usize) -> &Factor {
        &self.factors[a]
    }

    /// Factors whose scope contains `variable`, ascending.
    pub fn factors_of(&self, variable: usize) -> &[usize] {
        &self.var_factors[variable]
    }

    pub fn degree(&self, node: Node) -> usize {
        match node {
            Node::Variable(i) => self.var_factors[i].len(),
            Node::Factor(a) => self.factors[a].scope.len(),
        }
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e.0]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> + '_ {
        (0..self.edges.len()).map(EdgeId)
    }

    /// The opposite direction of `e`.
    pub fn reverse(&self, e: EdgeId) -> EdgeId {
        self.reverse[e.0]
    }

    /// Edges leaving `node`.
    pub fn outgoing(&self, node: Node) -> &[EdgeId] {
        match node {
            Node::Variable(i) => &self.var_out[i],
            Node::Factor(a) => &self.factor_out[a],
        }
    }

    /// Edges arriving at `node`. For a variable, aligned with
    /// [`factors_of`](Self::factors_of); for a factor, aligned with its scope.
    pub fn incoming(&self, node: Node) -> &[EdgeId] {
        match node {
            Node::Variable(i) => &self.var_in[i],
            Node::Factor(a) => &self.factor_in[a],
        }
    }

    /// The messages `b -> c` that `c -> d` is computed from.
    pub fn inputs(&self, e: EdgeId) -> &[EdgeId] {
        &self.inputs[e.0]
    }

    /// The messages `c -> d` whose update reads `b -> c`.
    pub fn dependents(&self, e: EdgeId) -> &[EdgeId] {
        &self.dependents[e.0]
    }

    /// Number of joint states of factor `a`.
    pub fn factor_states(&self, a: usize) -> usize {
        self.factors[a].table.len()
    }

    /// True when both graphs have the same variables, scopes and edge numbering.
    pub fn same_structure(&self, other: &FactorGraph) -> bool {
        self.variables == other.variables
            && self.factors.len() == other.factors.len()
            && self.factors.iter().zip(&other.factors).all(|(a, b)| a.scope == b.scope)
    }
}

fn validate_factor(variables: &[VariableSpec], f: &Factor) -> Result<(), GraphError> {
    if f.scope.is_empty() {
        return Err(GraphError::EmptyScope { factor: f.id });
    }
    let mut expected = 1usize;
    for (k, &v) in f.scope.iter().enumerate() {
        let spec = variables.get(v).ok_or(GraphError::UnknownVariable {
            factor: f.id,
            variable: v,
        })?;
        if f.scope[..k].contains(&v) {
            return Err(GraphError::DuplicateScopeVariable {
                factor: f.id,
                variable: v,
            });
        }
        expected = expected.saturating_mul(spec.cardinality);
    }
    if f.table.len() != expected {
        return Err(GraphError::ScopeMismatch {
            factor: f.id,
            expected,
            found: f.table.len(),
        });
    }
    if let Some((index, &value)) = f.table.iter().enumerate().find(|(_, &x)| !(x.is_finite() && x > 0.0)) {
        return Err(GraphError::NonPositiveEntry {
            factor: f.id,
            index,
            value,
        });
    }
    Ok(())
}

/// Row-major strides of a scope, last variable fastest.
pub fn scope_strides(cardinalities: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; cardinalities.len()];
    for k in (0..cardinalities.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * cardinalities[k + 1];
    }
    strides
}
