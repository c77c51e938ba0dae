//! Terms over a signature, stored as a DAG of shared subterms.

use std::collections::HashMap;
use std::fmt;

use crate::algebra::{checked_pow, decode_index, Elem, FiniteAlgebra};
use crate::error::{Error, Result};
use crate::power::{Closure, Origin};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Var(usize),
    App { op: usize, symbol: String, args: Vec<usize> },
}

/// A term whose nodes are topologically ordered: every argument index is
/// smaller than the node using it, and the root is the last node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Term {
    nodes: Vec<Node>,
    vars: Vec<String>,
}

impl Term {
    pub fn var(index: usize, vars: &[&str]) -> Self {
        Term {
            nodes: vec![Node::Var(index)],
            vars: vars.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Builds `symbol(args...)` from existing terms over the same variables.
    pub fn apply(alg: &FiniteAlgebra, symbol: &str, args: &[Term]) -> Result<Self> {
        let op = alg.op_index(symbol)?;
        if alg.arity(op) != args.len() {
            return Err(Error::ArityMismatch {
                symbol: symbol.to_string(),
                expected: alg.arity(op),
                got: args.len(),
            });
        }
        let vars = args.first().map(|t| t.vars.clone()).unwrap_or_default();
        let mut nodes = Vec::new();
        let mut roots = Vec::new();
        for t in args {
            let offset = nodes.len();
            nodes.extend(t.nodes.iter().map(|n| match n {
                Node::Var(v) => Node::Var(*v),
                Node::App { op, symbol, args } => Node::App {
                    op: *op,
                    symbol: symbol.clone(),
                    args: args.iter().map(|a| a + offset).collect(),
                },
            }));
            roots.push(nodes.len() - 1);
        }
        nodes.push(Node::App {
            op,
            symbol: symbol.to_string(),
            args: roots,
        });
        Ok(Term { nodes, vars })
    }

    /// Reads the term of element `target` off a closure's derivation DAG.
    /// Generator `k` becomes variable `vars[k]`.
    pub fn from_closure(alg: &FiniteAlgebra, closure: &Closure, target: usize, vars: &[&str]) -> Self {
        let mut nodes = Vec::new();
        let mut memo: HashMap<usize, usize> = HashMap::new();
        // iterative post-order so deep derivations cannot overflow the stack
        let mut stack = vec![(target, false)];
        while let Some((i, expanded)) = stack.pop() {
            if memo.contains_key(&i) {
                continue;
            }
            match closure.origin(i) {
                Origin::Generator(k) => {
                    memo.insert(i, nodes.len());
                    nodes.push(Node::Var(*k));
                }
                Origin::Apply { op, args } => {
                    if expanded {
                        let mapped = args.iter().map(|a| memo[a]).collect();
                        memo.insert(i, nodes.len());
                        nodes.push(Node::App {
                            op: *op,
                            symbol: alg.symbol(*op).to_string(),
                            args: mapped,
                        });
                    } else {
                        stack.push((i, true));
                        for a in args.iter().rev() {
                            if !memo.contains_key(a) {
                                stack.push((*a, false));
                            }
                        }
                    }
                }
            }
        }
        Term {
            nodes,
            vars: vars.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn arity(&self) -> usize {
        self.vars.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Number of distinct subterms.
    pub fn dag_size(&self) -> usize {
        self.nodes.len()
    }

    /// Evaluates the term at one assignment of its variables, walking the
    /// tree recursively.
    pub fn eval(&self, alg: &FiniteAlgebra, assignment: &[Elem]) -> Result<Elem> {
        if assignment.len() != self.arity() {
            return Err(Error::ArityMismatch {
                symbol: "term".into(),
                expected: self.arity(),
                got: assignment.len(),
            });
        }
        self.eval_node(alg, self.nodes.len() - 1, assignment)
    }

    fn eval_node(&self, alg: &FiniteAlgebra, node: usize, assignment: &[Elem]) -> Result<Elem> {
        match &self.nodes[node] {
            Node::Var(v) => Ok(assignment[*v]),
            Node::App { symbol, args, .. } => {
                let vals = args
                    .iter()
                    .map(|&a| self.eval_node(alg, a, assignment))
                    .collect::<Result<Vec<_>>>()?;
                alg.eval(symbol, &vals)
            }
        }
    }

    /// The term operation as a flat table over all `n^arity` assignments,
    /// computed node by node.
    pub fn table(&self, alg: &FiniteAlgebra) -> Result<Vec<Elem>> {
        let n = alg.size();
        let k = self.arity();
        let len = checked_pow(n, k).ok_or_else(|| Error::Validation("term table too large".into()))?;
        let mut values: Vec<Vec<Elem>> = Vec::with_capacity(self.nodes.len());
        let mut tuple = vec![0; k];
        for node in &self.nodes {
            let column = match node {
                Node::Var(v) => (0..len)
                    .map(|i| {
                        decode_index(n, k, i, &mut tuple);
                        tuple[*v]
                    })
                    .collect(),
                Node::App { symbol, args, .. } => {
                    let op = alg.op_index(symbol)?;
                    if alg.arity(op) != args.len() {
                        return Err(Error::ArityMismatch {
                            symbol: symbol.clone(),
                            expected: alg.arity(op),
                            got: args.len(),
                        });
                    }
                    let mut buf = vec![0; args.len()];
                    (0..len)
                        .map(|i| {
                            for (slot, &a) in buf.iter_mut().zip(args) {
                                *slot = values[a][i];
                            }
                            alg.apply(op, &buf)
                        })
                        .collect()
                }
            };
            values.push(column);
        }
        Ok(values.pop().unwrap_or_default())
    }

    fn render(&self, node: usize, out: &mut String) {
        match &self.nodes[node] {
            Node::Var(v) => out.push_str(&self.vars[*v]),
            Node::App { symbol, args, .. } => {
                out.push_str(symbol);
                if !args.is_empty() {
                    out.push('(');
                    for (i, &a) in args.iter().enumerate() {
                        if i > 0 {
                            out.push_str(", ");
                        }
                        self.render(a, out);
                    }
                    out.push(')');
                }
            }
        }
    }
}

/// Prefix notation, e.g. `+(x, +(y, z))`; constants print as their symbol.
impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        if !self.nodes.is_empty() {
            self.render(self.nodes.len() - 1, &mut s);
        }
        f.write_str(&s)
    }
}
