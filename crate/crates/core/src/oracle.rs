//! Independent brute-force ground truth.
//!
//! The oracle never touches the diagram layer: it enumerates every coin
//! assignment of a program under big-step evaluation semantics and sums
//! exact weights per outcome. Bound computation here is the plain
//! exhaustive scan over all inputs, neighbors, and outputs. Tests compare
//! this module's answers against the compiled pipeline; the only shared
//! code is the syntax tree and the categorical-to-coin-chain lowering, so
//! coin counts line up on both paths.

use crate::lang::{categorical_chain, ScalarType, TypedExpr, TypedExprKind, ValidatedProgram};
use crate::mechanisms::Mechanism;
use crate::rational::Rational;
use crate::synthesis::{AccuracyReport, Bound, PrivacyReport};
use std::collections::BTreeMap;

pub const DEFAULT_COIN_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("program has {coins} coins, above the enumeration cap of {cap}")]
    CoinCapExceeded { coins: usize, cap: usize },
    #[error("domain violation: {0}")]
    DomainViolation(String),
    #[error("mechanism has no target map")]
    NoTargets,
}

/// The ordered coins of a program, discovered by the same left-to-right
/// walk the compiler uses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoinProfile {
    pub biases: Vec<Rational>,
}

pub fn coin_profile(program: &ValidatedProgram) -> CoinProfile {
    let mut biases = Vec::new();
    collect_coins(&program.body, &mut biases);
    CoinProfile { biases }
}

fn collect_coins(e: &TypedExpr, out: &mut Vec<Rational>) {
    match &e.kind {
        TypedExprKind::Flip(p) => out.push(p.clone()),
        TypedExprKind::Categorical { weights, .. } => {
            out.extend(categorical_chain(weights));
        }
        TypedExprKind::BoolConst(_)
        | TypedExprKind::IntConst { .. }
        | TypedExprKind::Var(_) => {}
        TypedExprKind::Not(inner) => collect_coins(inner, out),
        TypedExprKind::Bool { lhs, rhs, .. } => {
            collect_coins(lhs, out);
            collect_coins(rhs, out);
        }
        TypedExprKind::IntAdd { lhs, rhs, .. } => {
            collect_coins(lhs, out);
            collect_coins(rhs, out);
        }
        TypedExprKind::IntGe(l, r) | TypedExprKind::IntEq(l, r) => {
            collect_coins(l, out);
            collect_coins(r, out);
        }
        TypedExprKind::Ite {
            cond,
            then_branch,
            else_branch,
        } => {
            collect_coins(cond, out);
            collect_coins(then_branch, out);
            collect_coins(else_branch, out);
        }
        TypedExprKind::Let { bound, body, .. } => {
            collect_coins(bound, out);
            collect_coins(body, out);
        }
        TypedExprKind::Tuple(elems) => {
            for elem in elems {
                collect_coins(elem, out);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Val {
    Bool(bool),
    Int(u64),
    Tuple(Vec<Val>),
}

struct Eval<'a> {
    params: Vec<(&'a str, Val)>,
    scope: Vec<(&'a str, Val)>,
    coins: &'a [bool],
    next_coin: usize,
}

impl<'a> Eval<'a> {
    fn lookup(&self, name: &str) -> Val {
        self.scope
            .iter()
            .rev()
            .find(|(n, _)| *n == name)
            .or_else(|| self.params.iter().find(|(n, _)| *n == name))
            .map(|(_, v)| v.clone())
            .expect("validation resolved all variables")
    }

    /// Big-step evaluation. Both branches of a conditional are evaluated so
    /// coin consumption follows the static program order regardless of the
    /// outcome.
    fn eval(&mut self, e: &'a TypedExpr) -> Val {
        match &e.kind {
            TypedExprKind::BoolConst(b) => Val::Bool(*b),
            TypedExprKind::IntConst { value, .. } => Val::Int(*value),
            TypedExprKind::Var(name) => self.lookup(name),
            TypedExprKind::Flip(_) => {
                let b = self.coins[self.next_coin];
                self.next_coin += 1;
                Val::Bool(b)
            }
            TypedExprKind::Categorical { weights, .. } => {
                let chain_len = categorical_chain(weights).len();
                let mut outcome = chain_len as u64;
                for j in 0..chain_len {
                    let b = self.coins[self.next_coin];
                    self.next_coin += 1;
                    if b && outcome == chain_len as u64 {
                        outcome = j as u64;
                    }
                }
                Val::Int(outcome)
            }
            TypedExprKind::Not(inner) => match self.eval(inner) {
                Val::Bool(b) => Val::Bool(!b),
                _ => unreachable!(),
            },
            TypedExprKind::Bool { op, lhs, rhs } => {
                let l = self.eval(lhs);
                let r = self.eval(rhs);
                let (Val::Bool(l), Val::Bool(r)) = (l, r) else {
                    unreachable!()
                };
                let b = match op {
                    crate::lang::BoolOp::And => l && r,
                    crate::lang::BoolOp::Or => l || r,
                    crate::lang::BoolOp::Xor => l ^ r,
                    crate::lang::BoolOp::Iff => l == r,
                };
                Val::Bool(b)
            }
            TypedExprKind::IntAdd {
                lhs,
                rhs,
                saturating,
            } => {
                let (Val::Int(l), Val::Int(r)) = (self.eval(lhs), self.eval(rhs)) else {
                    unreachable!()
                };
                let width = match e.ty {
                    crate::lang::Type::Scalar(ScalarType::Int { width }) => width,
                    _ => unreachable!(),
                };
                let max = (1u64 << width) - 1;
                let sum = l + r;
                Val::Int(if *saturating {
                    sum.min(max)
                } else {
                    sum & max
                })
            }
            TypedExprKind::IntGe(l, r) => {
                let (Val::Int(l), Val::Int(r)) = (self.eval(l), self.eval(r)) else {
                    unreachable!()
                };
                Val::Bool(l >= r)
            }
            TypedExprKind::IntEq(l, r) => {
                let (Val::Int(l), Val::Int(r)) = (self.eval(l), self.eval(r)) else {
                    unreachable!()
                };
                Val::Bool(l == r)
            }
            TypedExprKind::Ite {
                cond,
                then_branch,
                else_branch,
            } => {
                let c = self.eval(cond);
                let t = self.eval(then_branch);
                let f = self.eval(else_branch);
                match c {
                    Val::Bool(true) => t,
                    Val::Bool(false) => f,
                    _ => unreachable!(),
                }
            }
            TypedExprKind::Let { name, bound, body } => {
                let bound = self.eval(bound);
                self.scope.push((name, bound));
                let result = self.eval(body);
                self.scope.pop();
                result
            }
            TypedExprKind::Tuple(elems) => {
                Val::Tuple(elems.iter().map(|e| self.eval(e)).collect())
            }
        }
    }
}

fn flatten(v: &Val, out: &mut Vec<u64>) {
    match v {
        Val::Bool(b) => out.push(*b as u64),
        Val::Int(i) => out.push(*i),
        Val::Tuple(elems) => {
            for elem in elems {
                flatten(elem, out);
            }
        }
    }
}

/// Exact output distribution of `program` on input `x` by enumerating all
/// `2^coins` coin assignments. Zero-mass outcomes are omitted.
pub fn enumerate_distribution(
    program: &ValidatedProgram,
    x: &[u64],
    cap: usize,
) -> Result<BTreeMap<Vec<u64>, Rational>, OracleError> {
    let profile = coin_profile(program);
    let coins = profile.biases.len();
    if coins > cap {
        return Err(OracleError::CoinCapExceeded { coins, cap });
    }
    if x.len() != program.params().len() {
        return Err(OracleError::DomainViolation(format!(
            "expected {} inputs, got {}",
            program.params().len(),
            x.len()
        )));
    }
    let params: Vec<(&str, Val)> = program
        .params()
        .iter()
        .zip(x)
        .map(|(p, v)| {
            if *v >= p.ty.cardinality() {
                return Err(OracleError::DomainViolation(format!(
                    "value {v} out of range for parameter {} of type {}",
                    p.name, p.ty
                )));
            }
            Ok((
                p.name.as_str(),
                match p.ty {
                    ScalarType::Bool => Val::Bool(*v == 1),
                    ScalarType::Int { .. } => Val::Int(*v),
                },
            ))
        })
        .collect::<Result<_, _>>()?;

    let mut acc: BTreeMap<Vec<u64>, Rational> = BTreeMap::new();
    let mut assignment = vec![false; coins];
    enumerate_rec(
        program,
        &params,
        &profile.biases,
        &mut assignment,
        0,
        Rational::one(),
        &mut acc,
    );
    Ok(acc)
}

fn enumerate_rec(
    program: &ValidatedProgram,
    params: &[(&str, Val)],
    biases: &[Rational],
    assignment: &mut Vec<bool>,
    depth: usize,
    weight: Rational,
    acc: &mut BTreeMap<Vec<u64>, Rational>,
) {
    if weight.is_zero() {
        return;
    }
    if depth == biases.len() {
        let mut eval = Eval {
            params: params.to_vec(),
            scope: Vec::new(),
            coins: assignment,
            next_coin: 0,
        };
        let value = eval.eval(&program.body);
        let mut out = Vec::new();
        flatten(&value, &mut out);
        *acc.entry(out).or_default() += &weight;
        return;
    }
    let bias = &biases[depth];
    assignment[depth] = false;
    enumerate_rec(
        program,
        params,
        biases,
        assignment,
        depth + 1,
        &weight * &(Rational::one() - bias),
        acc,
    );
    assignment[depth] = true;
    enumerate_rec(
        program,
        params,
        biases,
        assignment,
        depth + 1,
        &weight * bias,
        acc,
    );
}

/// Exhaustive tight privacy bound straight from enumerated distributions:
/// the maximum likelihood ratio over all neighbor pairs and outputs.
pub fn oracle_privacy_bound(
    mech: &Mechanism,
    cap: usize,
) -> Result<PrivacyReport, OracleError> {
    let inputs = mech.input_domain.enumerate();
    let mut dists = Vec::with_capacity(inputs.len());
    for x in &inputs {
        dists.push(enumerate_distribution(&mech.program, x, cap)?);
    }
    let index: std::collections::HashMap<&Vec<u64>, usize> =
        inputs.iter().enumerate().map(|(i, x)| (x, i)).collect();
    let outputs = mech.output_domain.enumerate();

    let mut best = Bound::Finite(Rational::zero());
    let mut witness = None;
    for (i, x) in inputs.iter().enumerate() {
        for xp in mech.input_domain.neighbors(x) {
            let j = index[&xp];
            for y in &outputs {
                let a = dists[i].get(y).cloned().unwrap_or_default();
                let b = dists[j].get(y).cloned().unwrap_or_default();
                if a.is_zero() && b.is_zero() {
                    continue;
                }
                let ratio = if b.is_zero() {
                    Bound::Infinite
                } else {
                    Bound::Finite(&a / &b)
                };
                if ratio > best {
                    best = ratio;
                    witness = Some((x.clone(), xp.clone(), y.clone()));
                }
            }
        }
    }
    let epsilon = best.ln();
    Ok(PrivacyReport {
        p: best,
        epsilon,
        witness,
        solver_runs: inputs.len(),
        inference_seconds: 0.0,
        synthesis_seconds: 0.0,
    })
}

/// Exhaustive tight accuracy bound from enumerated distributions: the
/// minimum over inputs of the output mass within `alpha` of the target.
pub fn oracle_accuracy_bound(
    mech: &Mechanism,
    alpha: u64,
    cap: usize,
) -> Result<AccuracyReport, OracleError> {
    let targets = mech.targets.as_ref().ok_or(OracleError::NoTargets)?;
    let max = mech.output_domain.max_int_value().ok_or_else(|| {
        OracleError::DomainViolation("accuracy needs an integer output domain".into())
    })?;
    let inputs = mech.input_domain.enumerate();
    let mut best: Option<(Rational, Vec<u64>)> = None;
    for x in &inputs {
        let dist = enumerate_distribution(&mech.program, x, cap)?;
        let v = targets.value(x);
        let lo = v.saturating_sub(alpha);
        let hi = (v + alpha).min(max);
        let mut mass = Rational::zero();
        for y in lo..=hi {
            if let Some(p) = dist.get(&vec![y]) {
                mass += p;
            }
        }
        if best.as_ref().is_none_or(|(b, _)| mass < *b) {
            best = Some((mass, x.clone()));
        }
    }
    let (p, witness) = best.ok_or_else(|| {
        OracleError::DomainViolation("mechanism has an empty input domain".into())
    })?;
    Ok(AccuracyReport {
        beta: Rational::one() - &p,
        p,
        alpha,
        witness: Some(witness),
        solver_runs: inputs.len(),
        inference_seconds: 0.0,
        synthesis_seconds: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compile::{compile, CompileOptions};
    use crate::lang::{parse, validate};
    use crate::mechanisms::{rr, rrcount};
    use crate::synthesis::Bound;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn randomized_response_flip_mass() {
        let mech = rr(2, &r(1, 5)).unwrap();
        let dist = enumerate_distribution(&mech.program, &[0, 0], 20).unwrap();
        assert_eq!(dist.get(&vec![1, 0]).unwrap(), &r(4, 25));
        let total: Rational = dist.values().fold(Rational::zero(), |a, p| a + p);
        assert_eq!(total, Rational::one());
    }

    #[test]
    fn deterministic_program_single_outcome() {
        let program = validate(parse("fun(x:bool, y:bool) { (y, x) }").unwrap()).unwrap();
        let dist = enumerate_distribution(&program, &[1, 0], 20).unwrap();
        assert_eq!(dist.len(), 1);
        assert_eq!(dist.get(&vec![0, 1]).unwrap(), &Rational::one());
    }

    #[test]
    fn agrees_with_compiled_pipeline() {
        let mech = rrcount(3, &r(1, 3)).unwrap();
        let model = compile(&mech.program, CompileOptions::default()).unwrap();
        for x in mech.input_domain.enumerate() {
            let brute = enumerate_distribution(&mech.program, &x, 20).unwrap();
            let compiled = model.joint_distribution(&x).unwrap();
            assert_eq!(brute, compiled, "x={x:?}");
        }
    }

    #[test]
    fn coin_cap_is_enforced() {
        let mech = rr(6, &r(1, 5)).unwrap();
        assert!(matches!(
            enumerate_distribution(&mech.program, &[0; 6], 5),
            Err(OracleError::CoinCapExceeded { coins: 6, cap: 5 })
        ));
    }

    #[test]
    fn coin_profile_matches_compiled_coins() {
        let mech = rrcount(4, &r(2, 7)).unwrap();
        let profile = coin_profile(&mech.program);
        let model = compile(&mech.program, CompileOptions::default()).unwrap();
        let compiled: Vec<Rational> = model.coins().iter().map(|(_, b)| b.clone()).collect();
        assert_eq!(profile.biases, compiled);
    }

    #[test]
    fn exhaustive_privacy_bound_closed_form() {
        let mech = rr(3, &r(1, 5)).unwrap();
        let report = oracle_privacy_bound(&mech, 20).unwrap();
        assert_eq!(report.p, Bound::Finite(Rational::from_int(4)));
        assert_eq!(report.solver_runs, 8);

        let uniform = rr(3, &r(1, 2)).unwrap();
        let report = oracle_privacy_bound(&uniform, 20).unwrap();
        assert_eq!(report.p, Bound::Finite(Rational::one()));
    }

    #[test]
    fn accuracy_interval_covering_output_space_is_certain() {
        let mech = rrcount(4, &r(1, 5)).unwrap();
        let report = oracle_accuracy_bound(&mech, 4, 20).unwrap();
        assert_eq!(report.p, Rational::one());
        assert_eq!(report.beta, Rational::zero());
    }
}
