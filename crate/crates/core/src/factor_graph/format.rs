//! Line-oriented model text format.
//!
//! ```text
//! FACTORGRAPH 1
//! <V>
//! <card_0> ... <card_{V-1}>
//! <F>
//! <scope size> <var> ...      # one pair of lines per factor
//! <table entries, row-major, last scope variable fastest>
//! ```
//!
//! `#` starts a comment; blank lines are ignored. Entries are written with
//! 17 significant digits so a save/load round trip is exact.

use std::fmt::Write as _;

use super::{Factor, FactorGraph, GraphError, VariableSpec};

pub const FORMAT_HEADER: &str = "FACTORGRAPH 1";

pub fn save_model(g: &FactorGraph) -> String {
    let mut out = String::new();
    writeln!(out, "{FORMAT_HEADER}").unwrap();
    writeln!(out, "{}", g.num_variables()).unwrap();
    let cards: Vec<String> = g.variables().iter().map(|v| v.cardinality.to_string()).collect();
    writeln!(out, "{}", cards.join(" ")).unwrap();
    writeln!(out, "{}", g.num_factors()).unwrap();
    for f in g.factors() {
        write!(out, "{}", f.scope.len()).unwrap();
        for v in &f.scope {
            write!(out, " {v}").unwrap();
        }
        out.push('\n');
        let entries: Vec<String> = f.table.iter().map(|x| format!("{x:.16e}")).collect();
        writeln!(out, "{}", entries.join(" ")).unwrap();
    }
    out
}

pub fn load_model(text: &str) -> Result<FactorGraph, GraphError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let mut last_line = 0;
    let mut next = |what: &str| -> Result<(usize, &str), GraphError> {
        match lines.next() {
            Some((n, l)) => {
                last_line = n;
                Ok((n, l))
            }
            None => Err(GraphError::Parse {
                line: last_line + 1,
                message: format!("unexpected end of input, expected {what}"),
            }),
        }
    };

    let (line, header) = next("header")?;
    if header.split_whitespace().collect::<Vec<_>>() != ["FACTORGRAPH", "1"] {
        return Err(parse_err(line, format!("expected `{FORMAT_HEADER}`, found `{header}`")));
    }
    let (line, text) = next("variable count")?;
    let num_vars: usize = parse_single(line, text, "variable count")?;
    let (line, text) = next("cardinalities")?;
    let cards: Vec<usize> = parse_list(line, text, "cardinality")?;
    if cards.len() != num_vars {
        return Err(parse_err(
            line,
            format!("expected {num_vars} cardinalities, found {}", cards.len()),
        ));
    }
    let (line, text) = next("factor count")?;
    let num_factors: usize = parse_single(line, text, "factor count")?;

    let mut factors = Vec::with_capacity(num_factors);
    for a in 0..num_factors {
        let (line, text) = next("factor scope")?;
        let fields: Vec<usize> = parse_list(line, text, "scope entry")?;
        let (&size, scope) = fields
            .split_first()
            .ok_or_else(|| parse_err(line, "empty scope line".into()))?;
        if scope.len() != size {
            return Err(parse_err(
                line,
                format!("scope declares {size} variables, lists {}", scope.len()),
            ));
        }
        if let Some(&v) = scope.iter().find(|&&v| v >= num_vars) {
            return Err(parse_err(line, format!("unknown variable {v}")));
        }
        let (line, text) = next("factor table")?;
        let table: Vec<f64> = parse_list(line, text, "table entry")?;
        let expected: usize = scope.iter().map(|&v| cards[v]).product();
        if table.len() != expected {
            return Err(parse_err(
                line,
                format!("factor {a}: expected {expected} table entries, found {}", table.len()),
            ));
        }
        factors.push(Factor::new(a, scope.to_vec(), table));
    }
    if let Some((line, _)) = lines.next() {
        return Err(parse_err(
            line,
            format!("trailing content after {num_factors} declared factors"),
        ));
    }

    let variables = cards
        .into_iter()
        .enumerate()
        .map(|(i, c)| VariableSpec::new(i, c))
        .collect();
    FactorGraph::new(variables, factors)
}

fn parse_err(line: usize, message: String) -> GraphError {
    GraphError::Parse { line, message }
}

fn parse_single<T: std::str::FromStr>(line: usize, text: &str, what: &str) -> Result<T, GraphError> {
    let mut it = text.split_whitespace();
    let value = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| parse_err(line, format!("invalid {what}: `{text}`")))?;
    if it.next().is_some() {
        return Err(parse_err(line, format!("expected a single {what}, found `{text}`")));
    }
    Ok(value)
}

fn parse_list<T: std::str::FromStr>(line: usize, text: &str, what: &str) -> Result<Vec<T>, GraphError> {
    text.split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(line, format!("invalid {what}: `{t}`"))))
        .collect()
}
