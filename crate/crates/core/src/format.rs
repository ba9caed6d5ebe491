//! Line-oriented text format for networks.
//!
//! ```text
//! pbn 2
//! perturbation 0.01
//! node x0
//!   f 1 10 x1      # copy of x1
//! node x1
//!   f 0.5 1000 x0 x1
//!   f 0.5 0
//! interest x0
//! ```
//!
//! Truth tables are written most-significant row first, so `1000` over two
//! parents is AND. A bare `interest` line declares an empty interest set; no
//! `interest` line means every node is of interest.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{PbnError, Result};
use crate::model::{BooleanFunction, Model, Node, MAX_ARITY};

struct RawFunction<'a> {
    line: usize,
    prob: f64,
    table: &'a str,
    parents: Vec<&'a str>,
}

struct RawNode<'a> {
    line: usize,
    name: &'a str,
    functions: Vec<RawFunction<'a>>,
}

pub fn parse_model(text: &str) -> Result<Model> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (line, header) = lines
        .next()
        .ok_or_else(|| PbnError::syntax(1, "empty document"))?;
    let n: usize = match header.split_whitespace().collect::<Vec<_>>()[..] {
        ["pbn", count] => count
            .parse()
            .map_err(|_| PbnError::syntax(line, format!("bad node count `{count}`")))?,
        _ => return Err(PbnError::syntax(line, "expected `pbn <n>`")),
    };

    let (line, rate) = lines
        .next()
        .ok_or_else(|| PbnError::syntax(line, "missing `perturbation` line"))?;
    let perturbation: f64 = match rate.split_whitespace().collect::<Vec<_>>()[..] {
        ["perturbation", p] => p
            .parse()
            .map_err(|_| PbnError::syntax(line, format!("bad perturbation rate `{p}`")))?,
        _ => return Err(PbnError::syntax(line, "expected `perturbation <p>`")),
    };

    let mut raw: Vec<RawNode> = Vec::with_capacity(n);
    let mut interest_names: Option<(usize, Vec<&str>)> = None;
    for (line, text) in lines {
        if interest_names.is_some() {
            return Err(PbnError::syntax(line, "content after `interest` line"));
        }
        let mut tokens = text.split_whitespace();
        match tokens.next() {
            Some("node") => {
                let name = tokens
                    .next()
                    .ok_or_else(|| PbnError::syntax(line, "`node` needs a name"))?;
                if tokens.next().is_some() {
                    return Err(PbnError::syntax(line, "trailing tokens after node name"));
                }
                raw.push(RawNode {
                    line,
                    name,
                    functions: Vec::new(),
                });
            }
            Some("f") => {
                let node = raw
                    .last_mut()
                    .ok_or_else(|| PbnError::syntax(line, "function before any `node`"))?;
                let prob_tok = tokens
                    .next()
                    .ok_or_else(|| PbnError::syntax(line, "function needs a probability"))?;
                let prob: f64 = prob_tok
                    .parse()
                    .map_err(|_| PbnError::syntax(line, format!("bad probability `{prob_tok}`")))?;
                let table = tokens
                    .next()
                    .ok_or_else(|| PbnError::syntax(line, "function needs a truth table"))?;
                node.functions.push(RawFunction {
                    line,
                    prob,
                    table,
                    parents: tokens.collect(),
                });
            }
            Some("interest") => interest_names = Some((line, tokens.collect())),
            Some(other) => {
                return Err(PbnError::syntax(line, format!("unexpected `{other}`")));
            }
            None => unreachable!("blank lines are filtered"),
        }
    }

    if raw.len() != n {
        return Err(PbnError::InvalidModel(format!(
            "header declares {n} nodes but {} are defined",
            raw.len()
        )));
    }
    let mut index = HashMap::with_capacity(n);
    for (i, node) in raw.iter().enumerate() {
        if index.insert(node.name, i).is_some() {
            return Err(PbnError::DuplicateNode(node.name.to_string()));
        }
    }
    let lookup = |name: &str| {
        index
            .get(name)
            .copied()
            .ok_or_else(|| PbnError::UnknownNode(name.to_string()))
    };

    let mut nodes = Vec::with_capacity(n);
    for node in &raw {
        if node.functions.is_empty() {
            return Err(PbnError::syntax(
                node.line,
                format!("node `{}` has no functions", node.name),
            ));
        }
        let mut functions = Vec::with_capacity(node.functions.len());
        let mut probs = Vec::with_capacity(node.functions.len());
        for f in &node.functions {
            let parents = f
                .parents
                .iter()
                .map(|p| lookup(p))
                .collect::<Result<Vec<_>>>()?;
            functions.push(parse_table(f.line, f.table, parents)?);
            probs.push(f.prob);
        }
        nodes.push(Node::new(node.name, functions, probs));
    }

    let interest = interest_names
        .map(|(_, names)| names.into_iter().map(lookup).collect::<Result<Vec<_>>>())
        .transpose()?;
    Model::new(nodes, perturbation, interest)
}

fn parse_table(line: usize, table: &str, parents: Vec<usize>) -> Result<BooleanFunction> {
    if parents.len() > MAX_ARITY {
        return Err(PbnError::syntax(
            line,
            format!("{} parents exceeds the limit of {MAX_ARITY}", parents.len()),
        ));
    }
    let rows = 1usize << parents.len();
    if table.len() != rows {
        return Err(PbnError::syntax(
            line,
            format!(
                "truth table has {} entries, {} parents need {rows}",
                table.len(),
                parents.len()
            ),
        ));
    }
    let mut words = vec![0u64; rows.div_ceil(64)];
    for (pos, c) in table.bytes().enumerate() {
        let v = rows - 1 - pos;
        match c {
            b'1' => words[v >> 6] |= 1 << (v & 63),
            b'0' => {}
            _ => return Err(PbnError::syntax(line, "truth table must be binary")),
        }
    }
    BooleanFunction::new(parents, words).map_err(|e| PbnError::syntax(line, e.to_string()))
}

/// Decimal rendering with 12 significant digits, trailing zeros trimmed.
pub fn format_probability(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).max(0) as usize;
    let mut s = format!("{x:.decimals$}");
    if s.contains('.') {
        let trimmed = s.trim_end_matches('0').trim_end_matches('.').len();
        s.truncate(trimmed);
    }
    s
}

pub fn serialize_model(m: &Model) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "pbn {}", m.len());
    let _ = writeln!(out, "perturbation {}", format_probability(m.perturbation()));
    for node in m.nodes() {
        let _ = writeln!(out, "node {}", node.name);
        for (f, &prob) in node.functions.iter().zip(&node.selection_probs) {
            let rows = 1usize << f.arity();
            let table: String = (0..rows)
                .rev()
                .map(|v| if f.output(v) { '1' } else { '0' })
                .collect();
            let _ = write!(out, "  f {} {table}", format_probability(prob));
            for &p in f.parents() {
                let _ = write!(out, " {}", m.node(p).name);
            }
            out.push('\n');
        }
    }
    if !m.interest_is_everything() {
        out.push_str("interest");
        for &i in m.interest() {
            let _ = write!(out, " {}", m.node(i).name);
        }
        out.push('\n');
    }
    out
}
