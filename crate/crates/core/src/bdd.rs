//! Hash-consed reduced ordered binary decision diagrams with exact-rational
//! weighted model counting.
//!
//! A [`Manager`] owns all nodes for one fixed variable order. Diagrams are
//! plain node references ([`Bdd`]) into that manager; mixing references
//! across managers is a logic error. Reduction (no node with equal children,
//! no duplicate `(var, lo, hi)` triples) is maintained on construction, so
//! two diagrams represent the same boolean function exactly when they are
//! the same reference.
//!
//! `wmc` computes the weighted model count of a diagram over the variables
//! in its support: the sum over satisfying assignments of the product of
//! literal weights, with a variable skipped along a path contributing the
//! factor `w_pos + w_neg`. Variables outside the support contribute nothing,
//! which is what conditioning on an assignment and then counting requires.

use crate::rational::Rational;
use std::collections::HashMap;

/// Position in the manager's fixed variable order (dense, 0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u32);

/// A node reference scoped to one manager.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bdd(u32);

impl Bdd {
    pub const FALSE: Bdd = Bdd(0);
    pub const TRUE: Bdd = Bdd(1);

    pub fn is_terminal(self) -> bool {
        self.0 <= 1
    }

    pub fn is_true(self) -> bool {
        self == Bdd::TRUE
    }

    pub fn is_false(self) -> bool {
        self == Bdd::FALSE
    }

    /// `Some(b)` when this is the terminal for `b`.
    pub fn as_const(self) -> Option<bool> {
        match self {
            Bdd::FALSE => Some(false),
            Bdd::TRUE => Some(true),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Node {
    var: VarId,
    lo: Bdd,
    hi: Bdd,
}

/// Binary boolean combinators for [`Manager::apply`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BddOp {
    And,
    Or,
    Xor,
    Iff,
}

/// Positive/negative literal weights for one variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarWeight {
    pub pos: Rational,
    pub neg: Rational,
}

impl VarWeight {
    /// Weight of a coin with the given bias: `pos = bias`, `neg = 1 - bias`.
    pub fn coin(bias: &Rational) -> Self {
        VarWeight {
            pos: bias.clone(),
            neg: Rational::one() - bias,
        }
    }

    /// Indicator weights (both literals weigh one).
    pub fn indicator() -> Self {
        VarWeight {
            pos: Rational::one(),
            neg: Rational::one(),
        }
    }
}

/// Literal weights for every variable in a manager's order.
#[derive(Debug, Clone, Default)]
pub struct WeightMap {
    weights: Vec<VarWeight>,
}

impl WeightMap {
    pub fn new() -> Self {
        WeightMap {
            weights: Vec::new(),
        }
    }

    pub fn push(&mut self, w: VarWeight) {
        self.weights.push(w);
    }

    pub fn set(&mut self, var: VarId, w: VarWeight) {
        let idx = var.0 as usize;
        if idx >= self.weights.len() {
            self.weights.resize(idx + 1, VarWeight::indicator());
        }
        self.weights[idx] = w;
    }

    pub fn get(&self, var: VarId) -> Option<&VarWeight> {
        self.weights.get(var.0 as usize)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BddError {
    #[error("variable v{0} is outside the declared order of {1} variables")]
    UnknownVar(u32, u32),
    #[error("no weight declared for variable v{0}")]
    MissingWeight(u32),
}

/// Node store, unique table, and operation caches for one variable order.
#[derive(Debug, Clone)]
pub struct Manager {
    num_vars: u32,
    /// Indexed by `Bdd`; slots 0 and 1 are placeholders for the terminals.
    nodes: Vec<Node>,
    unique: HashMap<Node, Bdd>,
    apply_cache: HashMap<(BddOp, Bdd, Bdd), Bdd>,
    ite_cache: HashMap<(Bdd, Bdd, Bdd), Bdd>,
    neg_cache: HashMap<Bdd, Bdd>,
}

impl Manager {
    pub fn new(num_vars: u32) -> Self {
        let terminal = Node {
            var: VarId(u32::MAX),
            lo: Bdd::FALSE,
            hi: Bdd::FALSE,
        };
        Manager {
            num_vars,
            nodes: vec![terminal, terminal],
            unique: HashMap::new(),
            apply_cache: HashMap::new(),
            ite_cache: HashMap::new(),
            neg_cache: HashMap::new(),
        }
    }

    /// Appends a fresh variable at the end of the order.
    pub fn add_var(&mut self) -> VarId {
        let v = VarId(self.num_vars);
        self.num_vars += 1;
        v
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    /// Total allocated internal nodes (monotone; used for budget checks).
    pub fn allocated_nodes(&self) -> usize {
        self.nodes.len() - 2
    }

    pub fn mk_const(b: bool) -> Bdd {
        if b {
            Bdd::TRUE
        } else {
            Bdd::FALSE
        }
    }

    pub fn mk_var(&mut self, v: VarId) -> Result<Bdd, BddError> {
        if v.0 >= self.num_vars {
            return Err(BddError::UnknownVar(v.0, self.num_vars));
        }
        Ok(self.get_or_insert(Node {
            var: v,
            lo: Bdd::FALSE,
            hi: Bdd::TRUE,
        }))
    }

    /// `(var, lo, hi)` of an internal node.
    pub fn node(&self, r: Bdd) -> Option<(VarId, Bdd, Bdd)> {
        if r.is_terminal() {
            None
        } else {
            let n = self.nodes[r.0 as usize];
            Some((n.var, n.lo, n.hi))
        }
    }

    fn get_or_insert(&mut self, node: Node) -> Bdd {
        if node.lo == node.hi {
            return node.lo;
        }
        if let Some(&r) = self.unique.get(&node) {
            return r;
        }
        let r = Bdd(self.nodes.len() as u32);
        self.nodes.push(node);
        self.unique.insert(node, r);
        r
    }

    fn top_var(&self, r: Bdd) -> Option<VarId> {
        self.node(r).map(|(v, _, _)| v)
    }

    fn cofactor(&self, r: Bdd, var: VarId, value: bool) -> Bdd {
        match self.node(r) {
            Some((v, lo, hi)) if v == var => {
                if value {
                    hi
                } else {
                    lo
                }
            }
            _ => r,
        }
    }

    pub fn neg(&mut self, a: Bdd) -> Bdd {
        if let Some(b) = a.as_const() {
            return Self::mk_const(!b);
        }
        if let Some(&r) = self.neg_cache.get(&a) {
            return r;
        }
        let (v, lo, hi) = self.node(a).unwrap();
        let nlo = self.neg(lo);
        let nhi = self.neg(hi);
        let r = self.get_or_insert(Node {
            var: v,
            lo: nlo,
            hi: nhi,
        });
        self.neg_cache.insert(a, r);
        r
    }

    pub fn apply(&mut self, op: BddOp, a: Bdd, b: Bdd) -> Bdd {
        if let Some(r) = self.apply_terminal(op, a, b) {
            return r;
        }
        // All four ops are commutative; normalize the cache key.
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        if let Some(&r) = self.apply_cache.get(&(op, a, b)) {
            return r;
        }
        let v = match (self.top_var(a), self.top_var(b)) {
            (Some(va), Some(vb)) => va.min(vb),
            (Some(va), None) => va,
            (None, Some(vb)) => vb,
            (None, None) => unreachable!("terminal pair handled above"),
        };
        let (a0, a1) = (self.cofactor(a, v, false), self.cofactor(a, v, true));
        let (b0, b1) = (self.cofactor(b, v, false), self.cofactor(b, v, true));
        let lo = self.apply(op, a0, b0);
        let hi = self.apply(op, a1, b1);
        let r = self.get_or_insert(Node { var: v, lo, hi });
        self.apply_cache.insert((op, a, b), r);
        r
    }

    fn apply_terminal(&mut self, op: BddOp, a: Bdd, b: Bdd) -> Option<Bdd> {
        match op {
            BddOp::And => match (a, b) {
                (Bdd::FALSE, _) | (_, Bdd::FALSE) => Some(Bdd::FALSE),
                (Bdd::TRUE, x) | (x, Bdd::TRUE) => Some(x),
                _ if a == b => Some(a),
                _ => None,
            },
            BddOp::Or => match (a, b) {
                (Bdd::TRUE, _) | (_, Bdd::TRUE) => Some(Bdd::TRUE),
                (Bdd::FALSE, x) | (x, Bdd::FALSE) => Some(x),
                _ if a == b => Some(a),
                _ => None,
            },
            BddOp::Xor => match (a, b) {
                (Bdd::FALSE, x) | (x, Bdd::FALSE) => Some(x),
                (Bdd::TRUE, x) | (x, Bdd::TRUE) => Some(self.neg(x)),
                _ if a == b => Some(Bdd::FALSE),
                _ => None,
            },
            BddOp::Iff => match (a, b) {
                (Bdd::TRUE, x) | (x, Bdd::TRUE) => Some(x),
                (Bdd::FALSE, x) | (x, Bdd::FALSE) => Some(self.neg(x)),
                _ if a == b => Some(Bdd::TRUE),
                _ => None,
            },
        }
    }

    pub fn ite(&mut self, c: Bdd, t: Bdd, e: Bdd) -> Bdd {
        match c {
            Bdd::TRUE => return t,
            Bdd::FALSE => return e,
            _ => {}
        }
        if t == e {
            return t;
        }
        if t.is_true() && e.is_false() {
            return c;
        }
        if t.is_false() && e.is_true() {
            return self.neg(c);
        }
        if let Some(&r) = self.ite_cache.get(&(c, t, e)) {
            return r;
        }
        let v = [self.top_var(c), self.top_var(t), self.top_var(e)]
            .into_iter()
            .flatten()
            .min()
            .expect("at least one non-terminal");
        let (c0, c1) = (self.cofactor(c, v, false), self.cofactor(c, v, true));
        let (t0, t1) = (self.cofactor(t, v, false), self.cofactor(t, v, true));
        let (e0, e1) = (self.cofactor(e, v, false), self.cofactor(e, v, true));
        let lo = self.ite(c0, t0, e0);
        let hi = self.ite(c1, t1, e1);
        let r = self.get_or_insert(Node { var: v, lo, hi });
        self.ite_cache.insert((c, t, e), r);
        r
    }

    /// Cofactor of `a` under a partial assignment.
    pub fn restrict(&mut self, a: Bdd, assignment: &HashMap<VarId, bool>) -> Bdd {
        let mut memo = HashMap::new();
        self.restrict_rec(a, assignment, &mut memo)
    }

    fn restrict_rec(
        &mut self,
        a: Bdd,
        assignment: &HashMap<VarId, bool>,
        memo: &mut HashMap<Bdd, Bdd>,
    ) -> Bdd {
        if a.is_terminal() {
            return a;
        }
        if let Some(&r) = memo.get(&a) {
            return r;
        }
        let (v, lo, hi) = self.node(a).unwrap();
        let r = if let Some(&value) = assignment.get(&v) {
            let child = if value { hi } else { lo };
            self.restrict_rec(child, assignment, memo)
        } else {
            let nlo = self.restrict_rec(lo, assignment, memo);
            let nhi = self.restrict_rec(hi, assignment, memo);
            self.get_or_insert(Node {
                var: v,
                lo: nlo,
                hi: nhi,
            })
        };
        memo.insert(a, r);
        r
    }

    /// Variables appearing in the diagram, in order.
    pub fn support(&self, a: Bdd) -> Vec<VarId> {
        let mut seen = std::collections::HashSet::new();
        let mut vars = std::collections::BTreeSet::new();
        let mut stack = vec![a];
        while let Some(r) = stack.pop() {
            if r.is_terminal() || !seen.insert(r) {
                continue;
            }
            let (v, lo, hi) = self.node(r).unwrap();
            vars.insert(v);
            stack.push(lo);
            stack.push(hi);
        }
        vars.into_iter().collect()
    }

    /// Weighted model count of `a` over its support variables.
    ///
    /// One memoized bottom-up pass: a node contributes
    /// `w_neg * value(lo) + w_pos * value(hi)`, `value(TRUE) = 1`,
    /// `value(FALSE) = 0`, and every support variable skipped between a node
    /// and its child multiplies in `w_pos + w_neg`.
    pub fn wmc(&self, a: Bdd, weights: &WeightMap) -> Result<Rational, BddError> {
        let support = self.support(a);
        for v in &support {
            if weights.get(*v).is_none() {
                return Err(BddError::MissingWeight(v.0));
            }
        }
        match a.as_const() {
            Some(true) => return Ok(Rational::one()),
            Some(false) => return Ok(Rational::zero()),
            None => {}
        }
        let ctx = WmcCtx {
            weights,
            rank: support
                .iter()
                .enumerate()
                .map(|(i, v)| (*v, i))
                .collect(),
            span: support
                .iter()
                .map(|v| {
                    let w = weights.get(*v).unwrap();
                    &w.pos + &w.neg
                })
                .collect(),
        };
        let mut memo: HashMap<Bdd, Rational> = HashMap::new();
        // The root holds the minimum support variable, so nothing is skipped
        // above it.
        Ok(self.wmc_rec(a, &ctx, &mut memo))
    }

    fn wmc_rec(&self, a: Bdd, ctx: &WmcCtx, memo: &mut HashMap<Bdd, Rational>) -> Rational {
        match a.as_const() {
            Some(true) => return Rational::one(),
            Some(false) => return Rational::zero(),
            None => {}
        }
        if let Some(v) = memo.get(&a) {
            return v.clone();
        }
        let (v, lo, hi) = self.node(a).unwrap();
        let my_rank = ctx.rank[&v];
        let w = ctx.weights.get(v).unwrap();
        let lo_val = self.padded_value(lo, my_rank + 1, ctx, memo);
        let hi_val = self.padded_value(hi, my_rank + 1, ctx, memo);
        let result = &w.neg * &lo_val + &w.pos * &hi_val;
        memo.insert(a, result.clone());
        result
    }

    /// Value of `child` with `w_pos + w_neg` factors multiplied in for the
    /// support variables skipped on this edge (ranks `from_rank..rank(child)`).
    fn padded_value(
        &self,
        child: Bdd,
        from_rank: usize,
        ctx: &WmcCtx,
        memo: &mut HashMap<Bdd, Rational>,
    ) -> Rational {
        let mut value = self.wmc_rec(child, ctx, memo);
        if value.is_zero() {
            return value;
        }
        let child_rank = match self.top_var(child) {
            Some(v) => ctx.rank[&v],
            None => ctx.span.len(),
        };
        for r in from_rank..child_rank {
            value = value * &ctx.span[r];
        }
        value
    }

    /// Internal nodes reachable from `a`, plus distinct terminals reached.
    pub fn node_count(&self, a: Bdd) -> usize {
        self.node_count_many(&[a])
    }

    /// Node count of the union of diagrams (shared nodes counted once).
    pub fn node_count_many(&self, roots: &[Bdd]) -> usize {
        let mut seen = std::collections::HashSet::new();
        let mut terminals = std::collections::HashSet::new();
        let mut internal = 0usize;
        let mut stack: Vec<Bdd> = roots.to_vec();
        while let Some(r) = stack.pop() {
            if r.is_terminal() {
                terminals.insert(r);
                continue;
            }
            if !seen.insert(r) {
                continue;
            }
            internal += 1;
            let (_, lo, hi) = self.node(r).unwrap();
            stack.push(lo);
            stack.push(hi);
        }
        internal + terminals.len()
    }

    /// GraphViz rendering: solid edges to the high child, dashed to the low.
    pub fn to_dot(&self, roots: &[Bdd], var_name: &dyn Fn(VarId) -> String) -> String {
        let mut out = String::from("digraph bdd {\n");
        out.push_str("  rankdir=TB;\n");
        out.push_str("  f [label=\"F\", shape=box];\n");
        out.push_str("  t [label=\"T\", shape=box];\n");
        let id = |r: Bdd| match r {
            Bdd::FALSE => "f".to_string(),
            Bdd::TRUE => "t".to_string(),
            other => format!("n{}", other.0),
        };
        let mut seen = std::collections::HashSet::new();
        let mut stack: Vec<Bdd> = roots.to_vec();
        for (i, r) in roots.iter().enumerate() {
            out.push_str(&format!(
                "  root{i} [label=\"out{i}\", shape=plaintext];\n  root{i} -> {};\n",
                id(*r)
            ));
        }
        while let Some(r) = stack.pop() {
            if r.is_terminal() || !seen.insert(r) {
                continue;
            }
            let (v, lo, hi) = self.node(r).unwrap();
            out.push_str(&format!(
                "  {} [label=\"{}\", shape=circle];\n",
                id(r),
                var_name(v)
            ));
            out.push_str(&format!("  {} -> {} [style=dashed];\n", id(r), id(lo)));
            out.push_str(&format!("  {} -> {};\n", id(r), id(hi)));
            stack.push(lo);
            stack.push(hi);
        }
        out.push_str("}\n");
        out
    }
}

struct WmcCtx<'a> {
    weights: &'a WeightMap,
    rank: HashMap<VarId, usize>,
    /// `w_pos + w_neg` per support rank.
    span: Vec<Rational>,
}
