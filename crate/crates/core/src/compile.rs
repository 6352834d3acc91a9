//! Compilation of validated programs into weighted decision diagrams, and
//! exact probability queries over the result.
//!
//! A [`CompiledModel`] holds one diagram per output bit over the input and
//! coin variables, plus a weight map assigning each coin its bias and each
//! input-bit literal weight one. `Pr[A(x) = y]` is the weighted model count
//! of the per-bit diagrams restricted at `x` and conjoined with the
//! indicator of `y`. `joint_distribution` computes the entire output
//! distribution for one input in a single traversal of the restricted
//! diagrams and counts as one solver run.
//!
//! Variables enter the order in first-use order during a left-to-right walk
//! of the program: a client's coins and input bits end up adjacent, which
//! keeps diagrams for per-client mechanisms linear in the number of clients.

use crate::bdd::{Bdd, BddError, BddOp, Manager, VarId, VarWeight, WeightMap};
use crate::lang::{categorical_chain, ScalarType, TypedExpr, TypedExprKind, ValidatedProgram};
use crate::rational::Rational;
use crate::timing;
use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};

pub const DEFAULT_NODE_BUDGET: usize = 10_000_000;

#[derive(Debug, Clone, Copy)]
pub struct CompileOptions {
    /// Hard cap on allocated diagram nodes; exceeding it aborts compilation.
    pub node_budget: usize,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompileError {
    #[error("node budget of {budget} diagram nodes exceeded")]
    NodeBudgetExceeded { budget: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueryError {
    #[error("expected {expected} input values, got {got}")]
    WrongArity { expected: usize, got: usize },
    #[error("domain violation: {0}")]
    DomainViolation(String),
    #[error(transparent)]
    Bdd(#[from] BddError),
}

/// Diagram variables of one program parameter, most significant bit first.
#[derive(Debug, Clone)]
pub struct ParamVars {
    pub name: String,
    pub ty: ScalarType,
    pub bits: Vec<VarId>,
}

/// One output scalar as diagrams, most significant bit first for integers.
#[derive(Debug, Clone)]
pub enum OutSlot {
    Bool(Bdd),
    Int(Vec<Bdd>),
}

impl OutSlot {
    fn bits(&self) -> &[Bdd] {
        match self {
            OutSlot::Bool(b) => std::slice::from_ref(b),
            OutSlot::Int(bits) => bits,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct CompileStats {
    /// Nodes of the union of all output diagrams (inputs unrestricted).
    pub total_nodes: usize,
    pub num_coins: usize,
    pub num_input_bits: usize,
    pub compile_seconds: f64,
}

/// A compiled program: per-output-bit diagrams plus the literal weight map.
///
/// Frozen after construction as far as queries are concerned; the interior
/// manager only grows scratch nodes. Clone the model to query from several
/// threads.
#[derive(Debug, Clone)]
pub struct CompiledModel {
    manager: RefCell<Manager>,
    params: Vec<ParamVars>,
    coins: Vec<(VarId, Rational)>,
    weights: WeightMap,
    outputs: Vec<OutSlot>,
    output_type: Vec<ScalarType>,
    pub stats: CompileStats,
}

enum SymVal {
    Bool(Bdd),
    Int(Vec<Bdd>),
    Tuple(Vec<SymVal>),
}

struct Compiler {
    mgr: Manager,
    weights: WeightMap,
    coins: Vec<(VarId, Rational)>,
    /// Parameter slots; bits are allocated lazily at first use so the
    /// variable order follows program evaluation order.
    params: Vec<(String, ScalarType, Option<Vec<VarId>>)>,
    scope: Vec<(String, SymValShared)>,
    budget: usize,
}

/// Let-bound values are shared, so keep them behind a cheap clone.
type SymValShared = std::rc::Rc<SymVal>;

impl Compiler {
    fn check_budget(&self) -> Result<(), CompileError> {
        if self.mgr.allocated_nodes() > self.budget {
            Err(CompileError::NodeBudgetExceeded {
                budget: self.budget,
            })
        } else {
            Ok(())
        }
    }

    fn fresh_coin(&mut self, bias: &Rational) -> Bdd {
        let v = self.mgr.add_var();
        self.weights.set(v, VarWeight::coin(bias));
        self.coins.push((v, bias.clone()));
        self.mgr.mk_var(v).expect("freshly added variable")
    }

    fn param_bits(&mut self, name: &str) -> Option<Vec<Bdd>> {
        let idx = self.params.iter().position(|(n, _, _)| n == name)?;
        if self.params[idx].2.is_none() {
            let width = self.params[idx].1.bit_width();
            let vars: Vec<VarId> = (0..width)
                .map(|_| {
                    let v = self.mgr.add_var();
                    self.weights.set(v, VarWeight::indicator());
                    v
                })
                .collect();
            self.params[idx].2 = Some(vars);
        }
        let vars = self.params[idx].2.clone().unwrap();
        Some(
            vars.iter()
                .map(|v| self.mgr.mk_var(*v).expect("allocated variable"))
                .collect(),
        )
    }

    fn lookup(&self, name: &str) -> Option<SymValShared> {
        self.scope
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.clone())
    }

    fn compile_expr(&mut self, e: &TypedExpr) -> Result<SymVal, CompileError> {
        let val = match &e.kind {
            TypedExprKind::BoolConst(b) => SymVal::Bool(Manager::mk_const(*b)),
            TypedExprKind::IntConst { value, width } => {
                SymVal::Int(const_bits(*value, *width as usize))
            }
            TypedExprKind::Var(name) => {
                if let Some(v) = self.lookup(name) {
                    clone_sym(&v)
                } else {
                    let bits = self
                        .param_bits(name)
                        .expect("validation resolved all variables");
                    let (_, ty, _) = self
                        .params
                        .iter()
                        .find(|(n, _, _)| n == name)
                        .expect("parameter exists");
                    match ty {
                        ScalarType::Bool => SymVal::Bool(bits[0]),
                        ScalarType::Int { .. } => SymVal::Int(bits),
                    }
                }
            }
            TypedExprKind::Flip(p) => SymVal::Bool(self.fresh_coin(p)),
            TypedExprKind::Categorical { weights, width } => {
                let chain = categorical_chain(weights);
                let coins: Vec<Bdd> = chain.iter().map(|b| self.fresh_coin(b)).collect();
                // Select the first successful step, or the chain's end.
                let mut value = const_bits(chain.len() as u64, *width as usize);
                for (j, coin) in coins.iter().enumerate().rev() {
                    let this = const_bits(j as u64, *width as usize);
                    value = self.ite_bits(*coin, &this, &value);
                }
                SymVal::Int(value)
            }
            TypedExprKind::Not(inner) => {
                let v = self.compile_expr(inner)?;
                let b = as_bool(&v);
                SymVal::Bool(self.mgr.neg(b))
            }
            TypedExprKind::Bool { op, lhs, rhs } => {
                let l = self.compile_expr(lhs)?;
                let r = self.compile_expr(rhs)?;
                let op = match op {
                    crate::lang::BoolOp::And => BddOp::And,
                    crate::lang::BoolOp::Or => BddOp::Or,
                    crate::lang::BoolOp::Xor => BddOp::Xor,
                    crate::lang::BoolOp::Iff => BddOp::Iff,
                };
                SymVal::Bool(self.mgr.apply(op, as_bool(&l), as_bool(&r)))
            }
            TypedExprKind::IntAdd {
                lhs,
                rhs,
                saturating,
            } => {
                let l = self.compile_expr(lhs)?;
                let r = self.compile_expr(rhs)?;
                SymVal::Int(self.add_bits(as_int(&l), as_int(&r), *saturating))
            }
            TypedExprKind::IntGe(l, r) => {
                let l = self.compile_expr(l)?;
                let r = self.compile_expr(r)?;
                SymVal::Bool(self.ge_bits(as_int(&l), as_int(&r)))
            }
            TypedExprKind::IntEq(l, r) => {
                let l = self.compile_expr(l)?;
                let r = self.compile_expr(r)?;
                SymVal::Bool(self.eq_bits(as_int(&l), as_int(&r)))
            }
            TypedExprKind::Ite {
                cond,
                then_branch,
                else_branch,
            } => {
                let c = self.compile_expr(cond)?;
                let t = self.compile_expr(then_branch)?;
                let f = self.compile_expr(else_branch)?;
                self.ite_sym(as_bool(&c), &t, &f)
            }
            TypedExprKind::Let { name, bound, body } => {
                let bound = self.compile_expr(bound)?;
                self.scope.push((name.clone(), std::rc::Rc::new(bound)));
                let result = self.compile_expr(body);
                self.scope.pop();
                result?
            }
            TypedExprKind::Tuple(elems) => {
                let mut vals = Vec::with_capacity(elems.len());
                for elem in elems {
                    vals.push(self.compile_expr(elem)?);
                }
                SymVal::Tuple(vals)
            }
        };
        self.check_budget()?;
        Ok(val)
    }

    fn ite_bits(&mut self, c: Bdd, t: &[Bdd], e: &[Bdd]) -> Vec<Bdd> {
        t.iter()
            .zip(e)
            .map(|(a, b)| self.mgr.ite(c, *a, *b))
            .collect()
    }

    fn ite_sym(&mut self, c: Bdd, t: &SymVal, e: &SymVal) -> SymVal {
        match (t, e) {
            (SymVal::Bool(a), SymVal::Bool(b)) => SymVal::Bool(self.mgr.ite(c, *a, *b)),
            (SymVal::Int(a), SymVal::Int(b)) => SymVal::Int(self.ite_bits(c, a, b)),
            (SymVal::Tuple(a), SymVal::Tuple(b)) => SymVal::Tuple(
                a.iter()
                    .zip(b)
                    .map(|(x, y)| self.ite_sym(c, x, y))
                    .collect(),
            ),
            _ => unreachable!("validation aligned branch types"),
        }
    }

    /// Ripple-carry addition on equal-width operands, MSB first. Saturating
    /// addition clamps to all-ones on carry out; wrapping drops the carry.
    fn add_bits(&mut self, a: &[Bdd], b: &[Bdd], saturating: bool) -> Vec<Bdd> {
        let width = a.len();
        let mut carry = Bdd::FALSE;
        let mut sum = vec![Bdd::FALSE; width];
        for i in (0..width).rev() {
            let axb = self.mgr.apply(BddOp::Xor, a[i], b[i]);
            sum[i] = self.mgr.apply(BddOp::Xor, axb, carry);
            let ab = self.mgr.apply(BddOp::And, a[i], b[i]);
            let ac = self.mgr.apply(BddOp::And, axb, carry);
            carry = self.mgr.apply(BddOp::Or, ab, ac);
        }
        if saturating {
            sum.iter()
                .map(|s| self.mgr.apply(BddOp::Or, carry, *s))
                .collect()
        } else {
            sum
        }
    }

    /// `a >= b`, compared most significant bit first.
    fn ge_bits(&mut self, a: &[Bdd], b: &[Bdd]) -> Bdd {
        let mut acc = Bdd::TRUE; // equal so far means >=
        for i in (0..a.len()).rev() {
            let nb = self.mgr.neg(b[i]);
            let gt = self.mgr.apply(BddOp::And, a[i], nb);
            let eq = self.mgr.apply(BddOp::Iff, a[i], b[i]);
            let eq_and_acc = self.mgr.apply(BddOp::And, eq, acc);
            acc = self.mgr.apply(BddOp::Or, gt, eq_and_acc);
        }
        acc
    }

    fn eq_bits(&mut self, a: &[Bdd], b: &[Bdd]) -> Bdd {
        let mut acc = Bdd::TRUE;
        for i in 0..a.len() {
            let eq = self.mgr.apply(BddOp::Iff, a[i], b[i]);
            acc = self.mgr.apply(BddOp::And, acc, eq);
        }
        acc
    }
}

fn const_bits(value: u64, width: usize) -> Vec<Bdd> {
    (0..width)
        .map(|i| Manager::mk_const((value >> (width - 1 - i)) & 1 == 1))
        .collect()
}

fn as_bool(v: &SymVal) -> Bdd {
    match v {
        SymVal::Bool(b) => *b,
        _ => unreachable!("validation guaranteed a bool"),
    }
}

fn as_int(v: &SymVal) -> &[Bdd] {
    match v {
        SymVal::Int(bits) => bits,
        _ => unreachable!("validation guaranteed an int"),
    }
}

fn clone_sym(v: &SymVal) -> SymVal {
    match v {
        SymVal::Bool(b) => SymVal::Bool(*b),
        SymVal::Int(bits) => SymVal::Int(bits.clone()),
        SymVal::Tuple(elems) => SymVal::Tuple(elems.iter().map(clone_sym).collect()),
    }
}

/// Compiles a validated program into per-output-bit diagrams.
pub fn compile(
    program: &ValidatedProgram,
    opts: CompileOptions,
) -> Result<CompiledModel, CompileError> {
    let started = timing::start();
    let mut compiler = Compiler {
        mgr: Manager::new(0),
        weights: WeightMap::new(),
        coins: Vec::new(),
        params: program
            .params()
            .iter()
            .map(|p| (p.name.clone(), p.ty, None))
            .collect(),
        scope: Vec::new(),
        budget: opts.node_budget,
    };
    let body = compiler.compile_expr(&program.body)?;

    // Parameters the body never touched still need variables so that
    // queries can restrict over the full input.
    let names: Vec<String> = compiler
        .params
        .iter()
        .filter(|(_, _, bits)| bits.is_none())
        .map(|(n, _, _)| n.clone())
        .collect();
    for name in names {
        compiler.param_bits(&name);
    }

    let outputs: Vec<OutSlot> = match body {
        SymVal::Tuple(elems) => elems
            .into_iter()
            .map(|v| match v {
                SymVal::Bool(b) => OutSlot::Bool(b),
                SymVal::Int(bits) => OutSlot::Int(bits),
                SymVal::Tuple(_) => unreachable!("tuples do not nest"),
            })
            .collect(),
        SymVal::Bool(b) => vec![OutSlot::Bool(b)],
        SymVal::Int(bits) => vec![OutSlot::Int(bits)],
    };

    let params: Vec<ParamVars> = compiler
        .params
        .into_iter()
        .map(|(name, ty, bits)| ParamVars {
            name,
            ty,
            bits: bits.expect("all parameters allocated"),
        })
        .collect();

    let all_bits: Vec<Bdd> = outputs.iter().flat_map(|s| s.bits().to_vec()).collect();
    let stats = CompileStats {
        total_nodes: compiler.mgr.node_count_many(&all_bits),
        num_coins: compiler.coins.len(),
        num_input_bits: params.iter().map(|p| p.bits.len()).sum(),
        compile_seconds: timing::seconds_since(&started),
    };

    Ok(CompiledModel {
        manager: RefCell::new(compiler.mgr),
        params,
        coins: compiler.coins,
        weights: compiler.weights,
        outputs,
        output_type: program.output_type.clone(),
        stats,
    })
}

impl CompiledModel {
    pub fn output_type(&self) -> &[ScalarType] {
        &self.output_type
    }

    pub fn params(&self) -> &[ParamVars] {
        &self.params
    }

    pub fn coins(&self) -> &[(VarId, Rational)] {
        &self.coins
    }

    pub fn weights(&self) -> &WeightMap {
        &self.weights
    }

    /// Flattened output-bit diagrams (integer scalars MSB first).
    pub fn output_bits(&self) -> Vec<Bdd> {
        self.outputs.iter().flat_map(|s| s.bits().to_vec()).collect()
    }

    /// Per-bit assignment of the input vector `x` (one value per parameter).
    pub fn input_assignment(&self, x: &[u64]) -> Result<HashMap<VarId, bool>, QueryError> {
        if x.len() != self.params.len() {
            return Err(QueryError::WrongArity {
                expected: self.params.len(),
                got: x.len(),
            });
        }
        let mut assignment = HashMap::new();
        for (param, value) in self.params.iter().zip(x) {
            if *value >= param.ty.cardinality() {
                return Err(QueryError::DomainViolation(format!(
                    "value {value} out of range for parameter {} of type {}",
                    param.name, param.ty
                )));
            }
            let width = param.bits.len();
            for (i, var) in param.bits.iter().enumerate() {
                assignment.insert(*var, (value >> (width - 1 - i)) & 1 == 1);
            }
        }
        Ok(assignment)
    }

    fn outvec_to_bits(&self, y: &[u64]) -> Result<Vec<bool>, QueryError> {
        if y.len() != self.output_type.len() {
            return Err(QueryError::WrongArity {
                expected: self.output_type.len(),
                got: y.len(),
            });
        }
        let mut bits = Vec::new();
        for (ty, value) in self.output_type.iter().zip(y) {
            if *value >= ty.cardinality() {
                return Err(QueryError::DomainViolation(format!(
                    "output value {value} out of range for type {ty}"
                )));
            }
            let width = ty.bit_width();
            for i in 0..width {
                bits.push((value >> (width - 1 - i)) & 1 == 1);
            }
        }
        Ok(bits)
    }

    fn bits_to_outvec(&self, bits: &[bool]) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.output_type.len());
        let mut idx = 0;
        for ty in &self.output_type {
            let width = ty.bit_width();
            let mut v = 0u64;
            for _ in 0..width {
                v = (v << 1) | (bits[idx] as u64);
                idx += 1;
            }
            out.push(v);
        }
        out
    }

    /// Exact `Pr[A(x) = y]`: restrict every output-bit diagram at `x`,
    /// conjoin the indicator of `y`, and take the weighted model count.
    pub fn prob_of(&self, x: &[u64], y: &[u64]) -> Result<Rational, QueryError> {
        let assignment = self.input_assignment(x)?;
        let want = self.outvec_to_bits(y)?;
        let mut mgr = self.manager.borrow_mut();
        let mut indicator = Bdd::TRUE;
        for (bit, want_bit) in self.output_bits().into_iter().zip(want) {
            let restricted = mgr.restrict(bit, &assignment);
            let lit = if want_bit {
                restricted
            } else {
                mgr.neg(restricted)
            };
            indicator = mgr.apply(BddOp::And, indicator, lit);
        }
        Ok(mgr.wmc(indicator, &self.weights)?)
    }

    /// The full output distribution for input `x`, computed in a single
    /// traversal of the `x`-restricted diagrams. One solver run.
    ///
    /// Outcomes are tracked as packed bit words, so joint queries support up
    /// to 64 output bits (pointwise `prob_of` has no such limit).
    pub fn joint_distribution(
        &self,
        x: &[u64],
    ) -> Result<BTreeMap<Vec<u64>, Rational>, QueryError> {
        let assignment = self.input_assignment(x)?;
        let mgr = self.manager.borrow();
        let bits = self.output_bits();
        if bits.len() > 64 {
            return Err(QueryError::DomainViolation(format!(
                "joint distributions support at most 64 output bits, got {}",
                bits.len()
            )));
        }
        let width = bits.len();
        let mut memo: HashMap<Vec<Bdd>, std::rc::Rc<BTreeMap<u64, Rational>>> = HashMap::new();
        let dist = joint_rec(&mgr, &bits, &assignment, &self.weights, &mut memo);
        Ok(dist
            .iter()
            .map(|(packed, p)| {
                let outcome: Vec<bool> = (0..width).map(|i| (packed >> i) & 1 == 1).collect();
                (self.bits_to_outvec(&outcome), p.clone())
            })
            .collect())
    }

    /// Node count of the model conditioned on one representative input; the
    /// convention behind reported diagram sizes (internal nodes plus
    /// distinct terminals).
    pub fn conditioned_node_count(&self, x: &[u64]) -> Result<usize, QueryError> {
        let assignment = self.input_assignment(x)?;
        let mut mgr = self.manager.borrow_mut();
        let restricted: Vec<Bdd> = self
            .output_bits()
            .into_iter()
            .map(|b| mgr.restrict(b, &assignment))
            .collect();
        Ok(mgr.node_count_many(&restricted))
    }

    /// Node count of the unconditioned model (union of output diagrams).
    pub fn node_count(&self) -> usize {
        let mgr = self.manager.borrow();
        mgr.node_count_many(&self.output_bits())
    }

    /// DOT rendering of the output diagrams (optionally conditioned).
    pub fn to_dot(&self, condition_on: Option<&[u64]>) -> Result<String, QueryError> {
        let names: HashMap<VarId, String> = self
            .params
            .iter()
            .flat_map(|p| {
                p.bits.iter().enumerate().map(move |(i, v)| {
                    let label = if p.bits.len() == 1 {
                        p.name.clone()
                    } else {
                        format!("{}[{}]", p.name, i)
                    };
                    (*v, label)
                })
            })
            .chain(
                self.coins
                    .iter()
                    .enumerate()
                    .map(|(i, (v, _))| (*v, format!("c{i}"))),
            )
            .collect();
        let roots = match condition_on {
            None => self.output_bits(),
            Some(x) => {
                let assignment = self.input_assignment(x)?;
                let mut mgr = self.manager.borrow_mut();
                self.output_bits()
                    .into_iter()
                    .map(|b| mgr.restrict(b, &assignment))
                    .collect()
            }
        };
        let mgr = self.manager.borrow();
        Ok(mgr.to_dot(&roots, &|v| {
            names.get(&v).cloned().unwrap_or_else(|| format!("v{}", v.0))
        }))
    }
}

fn joint_rec(
    mgr: &Manager,
    bits: &[Bdd],
    assignment: &HashMap<VarId, bool>,
    weights: &WeightMap,
    memo: &mut HashMap<Vec<Bdd>, std::rc::Rc<BTreeMap<u64, Rational>>>,
) -> std::rc::Rc<BTreeMap<u64, Rational>> {
    let top = bits
        .iter()
        .filter_map(|b| mgr.node(*b).map(|(v, _, _)| v))
        .min();
    let Some(v) = top else {
        // Every diagram is decided: a single outcome with mass one.
        let outcome = bits
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, b)| acc | ((b.is_true() as u64) << i));
        return std::rc::Rc::new(BTreeMap::from([(outcome, Rational::one())]));
    };
    let key = bits.to_vec();
    if let Some(cached) = memo.get(&key) {
        return cached.clone();
    }

    let cofactor = |value: bool| -> Vec<Bdd> {
        bits.iter()
            .map(|b| match mgr.node(*b) {
                Some((var, lo, hi)) if var == v => {
                    if value {
                        hi
                    } else {
                        lo
                    }
                }
                _ => *b,
            })
            .collect()
    };

    let dist = if let Some(&input_value) = assignment.get(&v) {
        joint_rec(mgr, &cofactor(input_value), assignment, weights, memo)
    } else {
        let w = weights.get(v).expect("coin weight").clone();
        let mut acc: BTreeMap<u64, Rational> = BTreeMap::new();
        if !w.neg.is_zero() {
            let lo = joint_rec(mgr, &cofactor(false), assignment, weights, memo);
            for (outcome, p) in lo.iter() {
                let mass = &w.neg * p;
                *acc.entry(*outcome).or_default() += &mass;
            }
        }
        if !w.pos.is_zero() {
            let hi = joint_rec(mgr, &cofactor(true), assignment, weights, memo);
            for (outcome, p) in hi.iter() {
                let mass = &w.pos * p;
                *acc.entry(*outcome).or_default() += &mass;
            }
        }
        std::rc::Rc::new(acc)
    };
    memo.insert(key, dist.clone());
    dist
}

/// Builds the hand-crafted weighted formula for n-client randomized
/// response directly against the diagram layer, bypassing the language
/// frontend: output bit i is `(!theta_i and x_i) or (theta_i and !x_i)`
/// with `w(theta_i) = lambda` (theta true means the bit flips).
pub fn manual_rr_wbf(n: usize, lambda: &Rational) -> CompiledModel {
    let started = timing::start();
    let mut mgr = Manager::new(0);
    let mut weights = WeightMap::new();
    let mut coins = Vec::new();
    let mut params = Vec::new();
    let mut outputs = Vec::new();
    for i in 0..n {
        let x = mgr.add_var();
        weights.set(x, VarWeight::indicator());
        let theta = mgr.add_var();
        weights.set(theta, VarWeight::coin(lambda));
        coins.push((theta, lambda.clone()));
        params.push(ParamVars {
            name: format!("x{}", i + 1),
            ty: ScalarType::Bool,
            bits: vec![x],
        });
        let xb = mgr.mk_var(x).unwrap();
        let tb = mgr.mk_var(theta).unwrap();
        let nx = mgr.neg(xb);
        let nt = mgr.neg(tb);
        let keep = mgr.apply(BddOp::And, nt, xb);
        let flip = mgr.apply(BddOp::And, tb, nx);
        let bit = mgr.apply(BddOp::Or, keep, flip);
        outputs.push(OutSlot::Bool(bit));
    }
    let all_bits: Vec<Bdd> = outputs.iter().flat_map(|s| s.bits().to_vec()).collect();
    let stats = CompileStats {
        total_nodes: mgr.node_count_many(&all_bits),
        num_coins: n,
        num_input_bits: n,
        compile_seconds: timing::seconds_since(&started),
    };
    CompiledModel {
        manager: RefCell::new(mgr),
        params,
        coins,
        weights,
        outputs,
        output_type: vec![ScalarType::Bool; n],
        stats,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse, validate};
    use crate::mechanisms::{above_threshold, rr, rrcount};

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn compiled(text: &str) -> CompiledModel {
        compile(&validate(parse(text).unwrap()).unwrap(), CompileOptions::default()).unwrap()
    }

    #[test]
    fn identity_program_is_deterministic() {
        let m = compiled("fun(x:bool) { x }");
        assert_eq!(m.prob_of(&[1], &[1]).unwrap(), Rational::one());
        assert_eq!(m.prob_of(&[1], &[0]).unwrap(), Rational::zero());
        let dist = m.joint_distribution(&[0]).unwrap();
        assert_eq!(dist.len(), 1);
        assert_eq!(dist.get(&vec![0u64]).unwrap(), &Rational::one());
    }

    #[test]
    fn randomized_response_pointwise_probabilities() {
        let mech = rr(2, &r(1, 5)).unwrap();
        let m = compile(&mech.program, CompileOptions::default()).unwrap();
        // One flip, one keep.
        assert_eq!(m.prob_of(&[0, 0], &[1, 0]).unwrap(), r(4, 25));
        // No flips and two flips.
        assert_eq!(m.prob_of(&[0, 0], &[0, 0]).unwrap(), r(16, 25));
        assert_eq!(m.prob_of(&[1, 1], &[0, 0]).unwrap(), r(1, 25));
    }

    #[test]
    fn randomized_response_joint_distribution() {
        let mech = rr(2, &r(1, 5)).unwrap();
        let m = compile(&mech.program, CompileOptions::default()).unwrap();
        let dist = m.joint_distribution(&[0, 0]).unwrap();
        assert_eq!(dist.get(&vec![0, 0]).unwrap(), &r(16, 25));
        assert_eq!(dist.get(&vec![0, 1]).unwrap(), &r(4, 25));
        assert_eq!(dist.get(&vec![1, 0]).unwrap(), &r(4, 25));
        assert_eq!(dist.get(&vec![1, 1]).unwrap(), &r(1, 25));
        let total: Rational = dist.values().fold(Rational::zero(), |a, p| a + p);
        assert_eq!(total, Rational::one());
    }

    #[test]
    fn counting_wrapper_joint_distribution() {
        let mech = rrcount(2, &r(1, 5)).unwrap();
        let m = compile(&mech.program, CompileOptions::default()).unwrap();
        let dist = m.joint_distribution(&[0, 0]).unwrap();
        assert_eq!(dist.get(&vec![0]).unwrap(), &r(16, 25));
        assert_eq!(dist.get(&vec![1]).unwrap(), &r(8, 25));
        assert_eq!(dist.get(&vec![2]).unwrap(), &r(1, 25));
    }

    #[test]
    fn joint_and_pointwise_queries_agree() {
        let mech = rrcount(3, &r(1, 3)).unwrap();
        let m = compile(&mech.program, CompileOptions::default()).unwrap();
        for x in mech.input_domain.enumerate() {
            let dist = m.joint_distribution(&x).unwrap();
            for y in mech.output_domain.enumerate() {
                let direct = m.prob_of(&x, &y).unwrap();
                let from_joint = dist.get(&y).cloned().unwrap_or_default();
                assert_eq!(direct, from_joint, "x={x:?} y={y:?}");
            }
        }
    }

    #[test]
    fn manual_formula_matches_compiled_frontend() {
        for n in 1..=6 {
            let lambda = r(1, 5);
            let mech = rr(n, &lambda).unwrap();
            let m = compile(&mech.program, CompileOptions::default()).unwrap();
            let manual = manual_rr_wbf(n, &lambda);
            for x in mech.input_domain.enumerate() {
                let a = m.joint_distribution(&x).unwrap();
                let b = manual.joint_distribution(&x).unwrap();
                assert_eq!(a, b, "n={n} x={x:?}");
            }
        }
    }

    #[test]
    fn manual_formula_mass_is_flip_count_product() {
        let n = 4;
        let lambda = r(1, 3);
        let keep = Rational::one() - &lambda;
        let manual = manual_rr_wbf(n, &lambda);
        let inputs = crate::mechanisms::InputDomain::Bits { n }.enumerate();
        for x in &inputs {
            for y in &inputs {
                let disagree = x.iter().zip(y).filter(|(a, b)| a != b).count() as i32;
                let expected = lambda.pow(disagree) * keep.pow(n as i32 - disagree);
                assert_eq!(manual.prob_of(x, y).unwrap(), expected);
            }
        }
    }

    #[test]
    fn zero_flip_probability_gives_identity_channel() {
        let manual = manual_rr_wbf(3, &Rational::zero());
        let dist = manual.joint_distribution(&[1, 0, 1]).unwrap();
        assert_eq!(dist.len(), 1);
        assert_eq!(dist.get(&vec![1, 0, 1]).unwrap(), &Rational::one());
    }

    #[test]
    fn above_threshold_tiny_instance_distribution() {
        // n=2, k=1, T=1, both lambdas 1/2: the noised threshold is always 1;
        // query i fires when x_i = 1 or its geometric draw is 1.
        let mech = above_threshold(2, 1, 1, &r(1, 2), &r(1, 2)).unwrap();
        let m = compile(&mech.program, CompileOptions::default()).unwrap();
        let dist = m.joint_distribution(&[0, 0]).unwrap();
        assert_eq!(dist.get(&vec![1]).unwrap(), &r(1, 2));
        assert_eq!(dist.get(&vec![2]).unwrap(), &r(1, 4));
        assert_eq!(dist.get(&vec![0]).unwrap(), &r(1, 4));
        assert_eq!(m.joint_distribution(&[1, 0]).unwrap().len(), 1);
    }

    #[test]
    fn node_budget_is_a_hard_error() {
        let mech = rr(6, &r(1, 5)).unwrap();
        let result = compile(&mech.program, CompileOptions { node_budget: 4 });
        assert!(matches!(
            result,
            Err(CompileError::NodeBudgetExceeded { budget: 4 })
        ));
    }

    #[test]
    fn conditioned_size_is_linear_in_clients() {
        for n in 2..=10 {
            let mech = rr(n, &r(1, 5)).unwrap();
            let m = compile(&mech.program, CompileOptions::default()).unwrap();
            assert_eq!(
                m.conditioned_node_count(&vec![0; n]).unwrap(),
                n + 2,
                "n={n}"
            );
        }
    }

    #[test]
    fn domain_violations_are_rejected() {
        let mech = rrcount(2, &r(1, 5)).unwrap();
        let m = compile(&mech.program, CompileOptions::default()).unwrap();
        assert!(matches!(
            m.prob_of(&[2, 0], &[0]),
            Err(QueryError::DomainViolation(_))
        ));
        assert!(matches!(
            m.prob_of(&[0], &[0]),
            Err(QueryError::WrongArity { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn dot_export_mentions_every_parameter() {
        let mech = rr(2, &r(1, 5)).unwrap();
        let m = compile(&mech.program, CompileOptions::default()).unwrap();
        let dot = m.to_dot(None).unwrap();
        assert!(dot.contains("x1") && dot.contains("x2"));
        assert!(dot.contains("style=dashed"));
    }
}
