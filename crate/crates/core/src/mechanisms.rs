//! Built-in mechanism generators: programs, domains, neighbor relations,
//! target maps, and their symmetry sets.
//!
//! `rr` is n-client binary randomized response (each client's bit flips
//! independently with probability lambda). `rrcount` wraps it with a
//! counting query. `above_threshold` is the truncated-geometric
//! above-threshold mechanism: noise the threshold, noise each query, and
//! return the first index whose noised value clears the noised threshold
//! (index 0 is the "no query passed" sentinel).

use crate::compile::CompiledModel;
use crate::lang::{bits_needed, validate, Expr, Param, Program, ScalarType, ValidatedProgram};
use crate::rational::Rational;
use crate::synthesis::{AccuracySet, InferenceSet, PrivacySet, ProbMatrix, SynthesisError};
use crate::Error;
use serde::{Deserialize, Serialize};

/// The input space `X^n`: bit vectors, or integer vectors over `{0..max}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InputDomain {
    Bits { n: usize },
    Ints { n: usize, max: u64 },
}

impl InputDomain {
    pub fn len(&self) -> usize {
        match self {
            InputDomain::Bits { n } | InputDomain::Ints { n, .. } => *n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of inputs (callers apply size guards well below `u128` range).
    pub fn size(&self) -> u128 {
        match self {
            InputDomain::Bits { n } => 1u128 << (*n).min(127),
            InputDomain::Ints { n, max } => (*max as u128 + 1).pow(*n as u32),
        }
    }

    pub fn contains(&self, x: &[u64]) -> bool {
        match self {
            InputDomain::Bits { n } => x.len() == *n && x.iter().all(|v| *v <= 1),
            InputDomain::Ints { n, max } => x.len() == *n && x.iter().all(|v| v <= max),
        }
    }

    /// All inputs in counting order (first coordinate most significant).
    pub fn enumerate(&self) -> Vec<Vec<u64>> {
        let (n, max) = match self {
            InputDomain::Bits { n } => (*n, 1u64),
            InputDomain::Ints { n, max } => (*n, *max),
        };
        let mut out = vec![vec![]];
        for _ in 0..n {
            let mut next = Vec::with_capacity(out.len() * (max as usize + 1));
            for prefix in &out {
                for v in 0..=max {
                    let mut item = prefix.clone();
                    item.push(v);
                    next.push(item);
                }
            }
            out = next;
        }
        out
    }

    /// Inputs differing from `x` in exactly one coordinate, coordinate-major
    /// and value-ascending.
    pub fn neighbors(&self, x: &[u64]) -> Vec<Vec<u64>> {
        let max = match self {
            InputDomain::Bits { .. } => 1u64,
            InputDomain::Ints { max, .. } => *max,
        };
        let mut out = Vec::new();
        for i in 0..x.len() {
            for v in 0..=max {
                if v != x[i] {
                    let mut n = x.to_vec();
                    n[i] = v;
                    out.push(n);
                }
            }
        }
        out
    }

    /// Compact rendering: bit vectors as a bit string, integer vectors
    /// dash-separated.
    pub fn render(&self, x: &[u64]) -> String {
        match self {
            InputDomain::Bits { .. } => x.iter().map(|b| b.to_string()).collect(),
            InputDomain::Ints { .. } => x
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("-"),
        }
    }
}

/// The output space `Y`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OutputDomain {
    /// Bit tuples, as produced by randomized response.
    Bits { n: usize },
    /// Integers `0..=max`.
    IntRange { max: u64 },
}

impl OutputDomain {
    pub fn size(&self) -> u128 {
        match self {
            OutputDomain::Bits { n } => 1u128 << (*n).min(127),
            OutputDomain::IntRange { max } => *max as u128 + 1,
        }
    }

    pub fn contains(&self, y: &[u64]) -> bool {
        match self {
            OutputDomain::Bits { n } => y.len() == *n && y.iter().all(|v| *v <= 1),
            OutputDomain::IntRange { max } => y.len() == 1 && y[0] <= *max,
        }
    }

    pub fn enumerate(&self) -> Vec<Vec<u64>> {
        match self {
            OutputDomain::Bits { n } => InputDomain::Bits { n: *n }.enumerate(),
            OutputDomain::IntRange { max } => (0..=*max).map(|v| vec![v]).collect(),
        }
    }

    /// Upper end of an integer output range, when the domain is one.
    pub fn max_int_value(&self) -> Option<u64> {
        match self {
            OutputDomain::IntRange { max } => Some(*max),
            OutputDomain::Bits { .. } => None,
        }
    }

    pub fn render(&self, y: &[u64]) -> String {
        match self {
            OutputDomain::Bits { .. } => y.iter().map(|b| b.to_string()).collect(),
            OutputDomain::IntRange { .. } => y[0].to_string(),
        }
    }
}

/// The target value each input should produce (the query without noise).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetMap {
    /// Number of ones in the input bit vector.
    Count,
}

impl TargetMap {
    pub fn value(&self, x: &[u64]) -> u64 {
        match self {
            TargetMap::Count => x.iter().sum(),
        }
    }
}

/// Mechanism parameters carried into reports.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MechParams {
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Rational>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda1: Option<Rational>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda2: Option<Rational>,
}

/// A randomized algorithm together with its domains, neighbor relation,
/// and optional target map.
#[derive(Debug, Clone)]
pub struct Mechanism {
    pub name: String,
    pub program: ValidatedProgram,
    pub input_domain: InputDomain,
    pub output_domain: OutputDomain,
    pub targets: Option<TargetMap>,
    pub params: MechParams,
}

impl Mechanism {
    /// Neighbors of `x` under the differ-in-exactly-one-entry relation.
    pub fn neighbors(&self, x: &[u64]) -> Result<Vec<Vec<u64>>, Error> {
        if !self.input_domain.contains(x) {
            return Err(Error::InvalidParameter(format!(
                "input {x:?} outside the domain of {}",
                self.name
            )));
        }
        Ok(self.input_domain.neighbors(x))
    }
}

fn check_probability(name: &str, p: &Rational, exclusive: bool) -> Result<(), Error> {
    let bad = if exclusive {
        !(p > &Rational::zero() && p < &Rational::one())
    } else {
        p.is_negative() || p > &Rational::one()
    };
    if bad {
        let range = if exclusive { "(0, 1)" } else { "[0, 1]" };
        return Err(Error::InvalidParameter(format!(
            "{name} = {p} outside {range}"
        )));
    }
    Ok(())
}

fn bool_params(n: usize) -> Vec<Param> {
    (1..=n)
        .map(|i| Param {
            name: format!("x{i}"),
            ty: ScalarType::Bool,
        })
        .collect()
}

/// One randomized-response client bit: flip `x_i` with probability lambda.
fn rr_bit(i: usize, lambda: &Rational) -> Expr {
    let x = Expr::var(&format!("x{i}"));
    Expr::ite(Expr::flip(lambda.clone()), x.clone().not(), x)
}

/// n-client binary randomized response.
pub fn rr(n: usize, lambda: &Rational) -> Result<Mechanism, Error> {
    if n == 0 {
        return Err(Error::InvalidParameter("rr needs n >= 1".into()));
    }
    check_probability("lambda", lambda, false)?;
    let body = if n == 1 {
        rr_bit(1, lambda)
    } else {
        Expr::Tuple((1..=n).map(|i| rr_bit(i, lambda)).collect())
    };
    let program = validate(Program {
        params: bool_params(n),
        body,
    })?;
    Ok(Mechanism {
        name: "rr".into(),
        program,
        input_domain: InputDomain::Bits { n },
        output_domain: OutputDomain::Bits { n },
        targets: None,
        params: MechParams {
            n,
            lambda: Some(lambda.clone()),
            ..MechParams::default()
        },
    })
}

/// Randomized response followed by a counting query; targets are the true
/// counts.
pub fn rrcount(n: usize, lambda: &Rational) -> Result<Mechanism, Error> {
    if n == 0 {
        return Err(Error::InvalidParameter("rrcount needs n >= 1".into()));
    }
    check_probability("lambda", lambda, false)?;
    let width = bits_needed(n as u64);
    let bit_as_int = |i: usize| {
        Expr::ite(
            rr_bit(i, lambda),
            Expr::int(width, 1),
            Expr::int(width, 0),
        )
    };
    let mut body = bit_as_int(1);
    for i in 2..=n {
        body = body.add(bit_as_int(i));
    }
    let program = validate(Program {
        params: bool_params(n),
        body,
    })?;
    Ok(Mechanism {
        name: "rrcount".into(),
        program,
        input_domain: InputDomain::Bits { n },
        output_domain: OutputDomain::IntRange { max: n as u64 },
        targets: Some(TargetMap::Count),
        params: MechParams {
            n,
            lambda: Some(lambda.clone()),
            ..MechParams::default()
        },
    })
}

/// Truncated geometric distribution on `{0..k}`: `Pr[z] = (1-lambda) *
/// lambda^z` for `z < k`, with the tail mass folded onto `k`
/// (`Pr[k] = lambda^k`). Masses sum to exactly one.
pub fn truncated_geometric(lambda: &Rational, k: u64) -> Vec<(u64, Rational)> {
    let mut out = Vec::with_capacity(k as usize + 1);
    let mut lam_pow = Rational::one();
    for z in 0..k {
        out.push((z, (Rational::one() - lambda) * &lam_pow));
        lam_pow *= lambda;
    }
    out.push((k, lam_pow));
    out
}

/// The truncated-geometric above-threshold mechanism.
///
/// Inputs are integer vectors over `{0..k}^n`. The threshold becomes
/// `min(T + G1, k)` with `G1 ~ truncated_geometric(lambda1, k)`; each query
/// value becomes `min(x_i + r_i, k)` with `r_i ~ truncated_geometric(lambda2,
/// k)`. The output is the first (1-based) index whose noised value reaches
/// the noised threshold, or 0 when none does.
pub fn above_threshold(
    n: usize,
    k: u64,
    threshold: u64,
    lambda1: &Rational,
    lambda2: &Rational,
) -> Result<Mechanism, Error> {
    if n == 0 {
        return Err(Error::InvalidParameter("above_threshold needs n >= 1".into()));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("above_threshold needs k >= 1".into()));
    }
    if threshold > k {
        return Err(Error::InvalidParameter(format!(
            "threshold {threshold} outside 0..={k}"
        )));
    }
    check_probability("lambda1", lambda1, true)?;
    check_probability("lambda2", lambda2, true)?;

    let w = bits_needed(k);
    let out_w = bits_needed(n as u64);
    let geometric = |lambda: &Rational| {
        Expr::categorical(
            truncated_geometric(lambda, k)
                .into_iter()
                .map(|(_, p)| p)
                .collect(),
        )
    };
    let clamp_to_k = |e: Expr, name: &str, body: Expr| {
        // let name = e in (if name >= k { k } else { name }) used in body;
        // built as let name = (clamped) in body via a nested let.
        let raw = format!("{name}_raw");
        Expr::let_in(
            &raw,
            e,
            Expr::let_in(
                name,
                Expr::ite(
                    Expr::var(&raw).ge(Expr::int(w, k)),
                    Expr::int(w, k),
                    Expr::var(&raw),
                ),
                body,
            ),
        )
    };

    // Innermost: nothing passed, return the sentinel 0.
    let mut body = Expr::int(out_w, 0);
    for i in (1..=n).rev() {
        let pass = Expr::var(&format!("m{i}")).ge(Expr::var("t_hat"));
        let chosen = Expr::ite(pass, Expr::int(out_w, i as u64), body);
        let sum = Expr::var(&format!("x{i}")).add(Expr::var(&format!("r{i}")));
        body = Expr::let_in(
            &format!("r{i}"),
            geometric(lambda2),
            clamp_to_k(sum, &format!("m{i}"), chosen),
        );
    }
    let body = Expr::let_in(
        "g1",
        geometric(lambda1),
        clamp_to_k(
            Expr::int(w, threshold).add(Expr::var("g1")),
            "t_hat",
            body,
        ),
    );

    let params = (1..=n)
        .map(|i| Param {
            name: format!("x{i}"),
            ty: ScalarType::Int { width: w },
        })
        .collect();
    let program = validate(Program { params, body })?;
    Ok(Mechanism {
        name: "above".into(),
        program,
        input_domain: InputDomain::Ints { n, max: k },
        output_domain: OutputDomain::IntRange { max: n as u64 },
        targets: None,
        params: MechParams {
            n,
            k: Some(k),
            threshold: Some(threshold),
            lambda1: Some(lambda1.clone()),
            lambda2: Some(lambda2.clone()),
            ..MechParams::default()
        },
    })
}

/// The all-zero input vector.
fn zeros(n: usize) -> Vec<u64> {
    vec![0; n]
}

/// `1^i 0^(n-i)`: i ones followed by zeros.
fn ones_prefix(n: usize, i: usize) -> Vec<u64> {
    (0..n).map(|j| if j < i { 1 } else { 0 }).collect()
}

/// Symmetry sets for randomized-response privacy: inference pairs
/// `(1^i 0^(n-i), 0^n)` for `i in 0..=n`, and privacy triples stepping the
/// one-count up and down by one. `|I| = n + 1`, `|C| = 2n`.
pub fn rr_symmetry_sets(n: usize) -> (InferenceSet, PrivacySet) {
    let iset = InferenceSet::new(
        (0..=n)
            .map(|i| (ones_prefix(n, i), zeros(n)))
            .collect(),
    );
    let mut triples = Vec::with_capacity(2 * n);
    for i in 0..n {
        triples.push((ones_prefix(n, i), ones_prefix(n, i + 1), zeros(n)));
    }
    for i in 1..=n {
        triples.push((ones_prefix(n, i), ones_prefix(n, i - 1), zeros(n)));
    }
    (iset, PrivacySet::new(triples))
}

/// Symmetry sets for counting accuracy: one representative input per
/// one-count, with inference pairs covering the alpha-interval around each
/// count. `|A| = n + 1`.
pub fn rrcount_symmetry_sets(n: usize, alpha: u64) -> (InferenceSet, AccuracySet) {
    let mut pairs = Vec::new();
    for i in 0..=n {
        let lo = (i as u64).saturating_sub(alpha);
        let hi = (i as u64 + alpha).min(n as u64);
        for j in lo..=hi {
            pairs.push((ones_prefix(n, i), vec![j]));
        }
    }
    let aset = AccuracySet::new((0..=n).map(|i| ones_prefix(n, i)).collect());
    (InferenceSet::new(pairs), aset)
}

/// The one-solver-run probability matrix for restricted randomized-response
/// privacy.
///
/// `Pr[RR(x) = y]` depends only on the number of disagreeing positions, so
/// every entry `(1^i 0^(n-i), 0^n)` of the restricted inference set equals
/// the mass of the output `1^i 0^(n-i)` in the single distribution of input
/// `0^n`. One `joint_distribution` call fills the whole matrix.
pub fn rr_restricted_matrix(
    model: &CompiledModel,
    n: usize,
) -> Result<ProbMatrix, SynthesisError> {
    let dist = model.joint_distribution(&zeros(n))?;
    let mut matrix = ProbMatrix::new(1);
    for i in 0..=n {
        let y = ones_prefix(n, i);
        let mass = dist.get(&y).cloned().unwrap_or_default();
        matrix.insert(ones_prefix(n, i), zeros(n), mass);
    }
    Ok(matrix)
}
