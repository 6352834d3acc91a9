//! Bound synthesis over inference, privacy, and accuracy sets.
//!
//! `inference` materializes a probability matrix for a set of input/output
//! pairs, running one joint-distribution query per distinct input (the
//! solver-run count). `privacy_bound` scans a set of neighboring triples
//! for the maximum likelihood ratio `Pr[A(x)=y] / Pr[A(x')=y]`, which is a
//! tight `e^eps`; `accuracy_bound` scans a set of inputs for the minimum
//! probability that the output lands within `alpha` of its target, which is
//! a tight `1 - beta`. Exhaustive set constructors and small-domain set
//! validators close the loop: a restricted set is valid exactly when it
//! realizes every ratio (or interval mass) the exhaustive scan can reach.

use crate::compile::{CompiledModel, QueryError};
use crate::mechanisms::{Mechanism, OutputDomain, TargetMap};
use crate::rational::Rational;
use crate::timing;
use std::collections::HashMap;

pub type InputVec = Vec<u64>;
pub type OutVec = Vec<u64>;

pub const DEFAULT_STATE_CAP: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SynthesisError {
    #[error("coverage violation: {0}")]
    CoverageViolation(String),
    #[error("state space of {needed} entries exceeds the cap of {cap}")]
    SizeGuard { needed: u128, cap: usize },
    #[error("empty set: {0}")]
    EmptySet(String),
    #[error("domain violation: {0}")]
    DomainViolation(String),
    #[error(transparent)]
    Query(#[from] QueryError),
}

/// Input/output pairs to run probabilistic inference on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InferenceSet {
    pub pairs: Vec<(InputVec, OutVec)>,
}

impl InferenceSet {
    pub fn new(pairs: Vec<(InputVec, OutVec)>) -> Self {
        InferenceSet { pairs }
    }
}

/// Neighboring `(x, x', y)` triples whose likelihood ratios cover every
/// achievable ratio.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrivacySet {
    pub triples: Vec<(InputVec, InputVec, OutVec)>,
}

impl PrivacySet {
    pub fn new(triples: Vec<(InputVec, InputVec, OutVec)>) -> Self {
        PrivacySet { triples }
    }
}

/// Inputs whose interval masses cover every achievable one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccuracySet {
    pub inputs: Vec<InputVec>,
}

impl AccuracySet {
    pub fn new(inputs: Vec<InputVec>) -> Self {
        AccuracySet { inputs }
    }
}

/// Exact probabilities for the pairs of one inference set, keyed by input
/// row and output rank.
#[derive(Debug, Clone)]
pub struct ProbMatrix {
    outputs: Vec<OutVec>,
    y_rank: HashMap<OutVec, usize>,
    rows: HashMap<InputVec, Vec<Option<Rational>>>,
    input_order: Vec<InputVec>,
    pub solver_runs: usize,
}

impl ProbMatrix {
    pub fn new(solver_runs: usize) -> Self {
        ProbMatrix {
            outputs: Vec::new(),
            y_rank: HashMap::new(),
            rows: HashMap::new(),
            input_order: Vec::new(),
            solver_runs,
        }
    }

    /// Registers an output column and returns its rank.
    pub fn register_output(&mut self, y: OutVec) -> usize {
        match self.y_rank.get(&y) {
            Some(r) => *r,
            None => {
                let r = self.outputs.len();
                self.y_rank.insert(y.clone(), r);
                self.outputs.push(y);
                r
            }
        }
    }

    /// Installs a full row over the registered outputs.
    pub fn insert_row(&mut self, x: InputVec, row: Vec<Option<Rational>>) {
        if !self.rows.contains_key(&x) {
            self.input_order.push(x.clone());
        }
        self.rows.insert(x, row);
    }

    pub fn insert(&mut self, x: InputVec, y: OutVec, p: Rational) {
        let rank = self.register_output(y);
        let row = match self.rows.get_mut(&x) {
            Some(row) => row,
            None => {
                self.input_order.push(x.clone());
                self.rows.entry(x).or_default()
            }
        };
        if row.len() <= rank {
            row.resize(rank + 1, None);
        }
        row[rank] = Some(p);
    }

    pub fn get(&self, x: &[u64], y: &[u64]) -> Option<&Rational> {
        let rank = *self.y_rank.get(y)?;
        self.rows.get(x)?.get(rank)?.as_ref()
    }

    pub fn contains(&self, x: &[u64], y: &[u64]) -> bool {
        self.get(x, y).is_some()
    }

    pub fn num_entries(&self) -> usize {
        self.rows
            .values()
            .map(|row| row.iter().flatten().count())
            .sum()
    }

    /// Registered output columns, in registration order.
    pub fn outputs(&self) -> &[OutVec] {
        &self.outputs
    }

    /// The raw row of an input, indexed by output rank.
    pub fn row(&self, x: &[u64]) -> Option<&[Option<Rational>]> {
        self.rows.get(x).map(|v| v.as_slice())
    }

    /// Entries in deterministic (insertion) order.
    pub fn entries(&self) -> impl Iterator<Item = (&InputVec, &OutVec, &Rational)> {
        self.input_order.iter().flat_map(move |x| {
            let row = &self.rows[x];
            row.iter().enumerate().filter_map(move |(rank, p)| {
                p.as_ref().map(|p| (x, &self.outputs[rank], p))
            })
        })
    }
}

/// A likelihood-ratio value; infinite when the denominator mass is zero but
/// the numerator is not (the mechanism admits no finite bound).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Bound {
    Finite(Rational),
    Infinite,
}

impl Bound {
    pub fn ln(&self) -> f64 {
        match self {
            Bound::Finite(p) => p.to_f64().ln(),
            Bound::Infinite => f64::INFINITY,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Bound::Finite(p) => p.to_f64(),
            Bound::Infinite => f64::INFINITY,
        }
    }

    pub fn to_ratio_string(&self) -> String {
        match self {
            Bound::Finite(p) => p.to_ratio_string(),
            Bound::Infinite => "inf".into(),
        }
    }

    pub fn as_finite(&self) -> Option<&Rational> {
        match self {
            Bound::Finite(p) => Some(p),
            Bound::Infinite => None,
        }
    }
}

impl PartialOrd for Bound {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Bound {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        match (self, other) {
            (Bound::Infinite, Bound::Infinite) => Ordering::Equal,
            (Bound::Infinite, Bound::Finite(_)) => Ordering::Greater,
            (Bound::Finite(_), Bound::Infinite) => Ordering::Less,
            (Bound::Finite(a), Bound::Finite(b)) => a.cmp(b),
        }
    }
}

/// Output of privacy bound synthesis: the maximum likelihood ratio, its
/// logarithm, and the witness triple that attains it.
#[derive(Debug, Clone)]
pub struct PrivacyReport {
    pub p: Bound,
    /// `ln p`, informational only.
    pub epsilon: f64,
    pub witness: Option<(InputVec, InputVec, OutVec)>,
    pub solver_runs: usize,
    pub inference_seconds: f64,
    pub synthesis_seconds: f64,
}

/// Output of accuracy bound synthesis: the minimum interval mass `1 - beta`
/// and the witness input that attains it.
#[derive(Debug, Clone)]
pub struct AccuracyReport {
    pub p: Rational,
    pub beta: Rational,
    pub alpha: u64,
    pub witness: Option<InputVec>,
    pub solver_runs: usize,
    pub inference_seconds: f64,
    pub synthesis_seconds: f64,
}

/// Runs one joint-distribution query per distinct input of `iset` and
/// collects the requested entries. Pairs absent from the distribution get
/// mass zero.
pub fn inference(
    model: &CompiledModel,
    iset: &InferenceSet,
) -> Result<ProbMatrix, SynthesisError> {
    inference_jobs(model, iset, 1)
}

/// `inference` with the distinct-input queries fanned out over `jobs`
/// worker threads, each on its own clone of the model.
pub fn inference_jobs(
    model: &CompiledModel,
    iset: &InferenceSet,
    jobs: usize,
) -> Result<ProbMatrix, SynthesisError> {
    let mut by_input: Vec<(InputVec, Vec<OutVec>)> = Vec::new();
    let mut index: HashMap<InputVec, usize> = HashMap::new();
    for (x, y) in &iset.pairs {
        match index.get(x) {
            Some(i) => by_input[*i].1.push(y.clone()),
            None => {
                index.insert(x.clone(), by_input.len());
                by_input.push((x.clone(), vec![y.clone()]));
            }
        }
    }

    let dists = joint_many(model, by_input.iter().map(|(x, _)| x.clone()).collect(), jobs)?;

    let mut matrix = ProbMatrix::new(by_input.len());
    for ((x, ys), dist) in by_input.into_iter().zip(dists) {
        for y in ys {
            let p = dist.get(&y).cloned().unwrap_or_default();
            matrix.insert(x.clone(), y, p);
        }
    }
    Ok(matrix)
}

/// Joint distributions for a list of inputs, optionally in parallel.
/// Results come back in input order; the query count equals `inputs.len()`.
pub fn joint_many(
    model: &CompiledModel,
    inputs: Vec<InputVec>,
    jobs: usize,
) -> Result<Vec<std::collections::BTreeMap<OutVec, Rational>>, SynthesisError> {
    let jobs = jobs.max(1).min(inputs.len().max(1));
    if jobs <= 1 || inputs.len() <= 1 {
        return inputs
            .iter()
            .map(|x| model.joint_distribution(x).map_err(Into::into))
            .collect();
    }
    let chunk = inputs.len().div_ceil(jobs);
    let chunks: Vec<&[InputVec]> = inputs.chunks(chunk).collect();
    let results: Vec<Vec<Result<_, QueryError>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = chunks
            .into_iter()
            .map(|chunk| {
                let worker = model.clone();
                scope.spawn(move || {
                    chunk
                        .iter()
                        .map(|x| worker.joint_distribution(x))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut out = Vec::with_capacity(inputs.len());
    for batch in results {
        for r in batch {
            out.push(r?);
        }
    }
    Ok(out)
}

/// Algorithm: fill the matrix over the inference set, then scan the privacy
/// set for the maximum ratio. Requires both `(x, y)` and `(x', y)` of every
/// triple to be present in the inference set.
pub fn privacy_bound(
    model: &CompiledModel,
    cset: &PrivacySet,
    iset: &InferenceSet,
) -> Result<PrivacyReport, SynthesisError> {
    let inf_start = timing::start();
    let matrix = inference(model, iset)?;
    let inference_seconds = timing::seconds_since(&inf_start);
    let mut report = privacy_bound_from_matrix(&matrix, cset)?;
    report.inference_seconds = inference_seconds;
    Ok(report)
}

/// The privacy scan over a precomputed matrix.
pub fn privacy_bound_from_matrix(
    matrix: &ProbMatrix,
    cset: &PrivacySet,
) -> Result<PrivacyReport, SynthesisError> {
    // Refuse to run on incomplete coverage rather than failing mid-scan.
    for (x, xp, y) in &cset.triples {
        if !matrix.contains(x, y) || !matrix.contains(xp, y) {
            return Err(SynthesisError::CoverageViolation(format!(
                "privacy triple ({x:?}, {xp:?}, {y:?}) is not covered by the inference set"
            )));
        }
    }
    let start = timing::start();
    let mut scan = RatioScan::new();
    for (x, xp, y) in &cset.triples {
        scan.offer(matrix, x, xp, y)?;
    }
    let (p, witness) = scan.finish();
    Ok(PrivacyReport {
        epsilon: p.ln(),
        p,
        witness,
        solver_runs: matrix.solver_runs,
        inference_seconds: 0.0,
        synthesis_seconds: timing::seconds_since(&start),
    })
}

/// Incremental max-ratio scan over privacy triples.
///
/// Ratios `0/0` are skipped; a positive mass over a zero mass is an
/// infinite ratio. The first triple attaining the maximum (in offer order)
/// is kept as the witness; the scan starts from zero, so it never reports a
/// witness when every ratio is skipped.
pub struct RatioScan {
    best: Bound,
    witness: Option<(InputVec, InputVec, OutVec)>,
}

impl Default for RatioScan {
    fn default() -> Self {
        Self::new()
    }
}

impl RatioScan {
    pub fn new() -> Self {
        RatioScan {
            best: Bound::Finite(Rational::zero()),
            witness: None,
        }
    }

    pub fn offer(
        &mut self,
        matrix: &ProbMatrix,
        x: &[u64],
        xp: &[u64],
        y: &[u64],
    ) -> Result<(), SynthesisError> {
        let (Some(a), Some(b)) = (matrix.get(x, y), matrix.get(xp, y)) else {
            return Err(SynthesisError::CoverageViolation(format!(
                "privacy triple ({x:?}, {xp:?}, {y:?}) is not covered by the inference set"
            )));
        };
        self.offer_masses(a, b, || (x.to_vec(), xp.to_vec(), y.to_vec()));
        Ok(())
    }

    /// Offers the ratio `a / b` directly; the witness closure runs only on
    /// improvement.
    pub fn offer_masses(
        &mut self,
        a: &Rational,
        b: &Rational,
        witness: impl FnOnce() -> (InputVec, InputVec, OutVec),
    ) {
        if a.is_zero() && b.is_zero() {
            return;
        }
        if b.is_zero() {
            if self.best < Bound::Infinite {
                self.best = Bound::Infinite;
                self.witness = Some(witness());
            }
            return;
        }
        // Compare without forming the quotient; divide only on improvement.
        let improves = match &self.best {
            Bound::Infinite => false,
            Bound::Finite(best) => a.div_cmp(b, best) == std::cmp::Ordering::Greater,
        };
        if improves {
            self.best = Bound::Finite(a / b);
            self.witness = Some(witness());
        }
    }

    pub fn finish(self) -> (Bound, Option<(InputVec, InputVec, OutVec)>) {
        (self.best, self.witness)
    }
}

/// The clipped target interval `[v - alpha, v + alpha]` within `0..=max`.
pub fn target_interval(v: u64, alpha: u64, max: u64) -> std::ops::RangeInclusive<u64> {
    v.saturating_sub(alpha)..=(v.saturating_add(alpha)).min(max)
}

/// Algorithm: fill the matrix, then scan the accuracy set for the minimum
/// interval mass. Requires `(x, y)` in the inference set for every `x` in
/// the accuracy set and `y` in the clipped interval around its target.
pub fn accuracy_bound(
    model: &CompiledModel,
    aset: &AccuracySet,
    targets: TargetMap,
    alpha: u64,
    ydom: &OutputDomain,
    iset: &InferenceSet,
) -> Result<AccuracyReport, SynthesisError> {
    let inf_start = timing::start();
    let matrix = inference(model, iset)?;
    let inference_seconds = timing::seconds_since(&inf_start);
    let mut report = accuracy_bound_from_matrix(&matrix, aset, targets, alpha, ydom)?;
    report.inference_seconds = inference_seconds;
    Ok(report)
}

/// The accuracy scan over a precomputed matrix.
pub fn accuracy_bound_from_matrix(
    matrix: &ProbMatrix,
    aset: &AccuracySet,
    targets: TargetMap,
    alpha: u64,
    ydom: &OutputDomain,
) -> Result<AccuracyReport, SynthesisError> {
    let start = timing::start();
    let sums = interval_masses(matrix, aset, targets, alpha, ydom)?;
    let mut best: Option<(Rational, InputVec)> = None;
    for (x, mass) in sums {
        if best.as_ref().is_none_or(|(b, _)| mass < *b) {
            best = Some((mass, x));
        }
    }
    let (p, witness) =
        best.ok_or_else(|| SynthesisError::EmptySet("accuracy set is empty".into()))?;
    Ok(AccuracyReport {
        beta: Rational::one() - &p,
        p,
        alpha,
        witness: Some(witness),
        solver_runs: matrix.solver_runs,
        inference_seconds: 0.0,
        synthesis_seconds: timing::seconds_since(&start),
    })
}

/// Interval mass per accuracy-set input, in set order.
fn interval_masses(
    matrix: &ProbMatrix,
    aset: &AccuracySet,
    targets: TargetMap,
    alpha: u64,
    ydom: &OutputDomain,
) -> Result<Vec<(InputVec, Rational)>, SynthesisError> {
    let max = ydom.max_int_value().ok_or_else(|| {
        SynthesisError::DomainViolation("accuracy needs an integer output domain".into())
    })?;
    let mut out = Vec::with_capacity(aset.inputs.len());
    for x in &aset.inputs {
        let v = targets.value(x);
        let mut mass = Rational::zero();
        for y in target_interval(v, alpha, max) {
            let Some(p) = matrix.get(x, &[y]) else {
                return Err(SynthesisError::CoverageViolation(format!(
                    "accuracy input {x:?} needs pair ({x:?}, {y}) in the inference set"
                )));
            };
            mass += p;
        }
        out.push((x.clone(), mass));
    }
    Ok(out)
}

/// Per-input accuracy probabilities sorted ascending; the first `k` rows.
/// Ties keep accuracy-set order.
pub fn rank_accuracy(
    model: &CompiledModel,
    aset: &AccuracySet,
    targets: TargetMap,
    alpha: u64,
    ydom: &OutputDomain,
    iset: &InferenceSet,
    k: usize,
) -> Result<Vec<(InputVec, Rational)>, SynthesisError> {
    let matrix = inference(model, iset)?;
    let mut sums = interval_masses(&matrix, aset, targets, alpha, ydom)?;
    sums.sort_by(|a, b| a.1.cmp(&b.1));
    sums.truncate(k);
    Ok(sums)
}

fn guard(needed: u128, cap: usize) -> Result<(), SynthesisError> {
    if needed > cap as u128 {
        Err(SynthesisError::SizeGuard { needed, cap })
    } else {
        Ok(())
    }
}

/// The full cross product `X^n x Y` as an inference set.
pub fn exhaustive_inference_set(
    mech: &Mechanism,
    cap: usize,
) -> Result<InferenceSet, SynthesisError> {
    guard(mech.input_domain.size() * mech.output_domain.size(), cap)?;
    let outputs = mech.output_domain.enumerate();
    let mut pairs = Vec::new();
    for x in mech.input_domain.enumerate() {
        for y in &outputs {
            pairs.push((x.clone(), y.clone()));
        }
    }
    Ok(InferenceSet::new(pairs))
}

/// All ordered neighboring pairs crossed with all outputs.
pub fn exhaustive_privacy_set(
    mech: &Mechanism,
    cap: usize,
) -> Result<PrivacySet, SynthesisError> {
    let neighbor_count = match &mech.input_domain {
        crate::mechanisms::InputDomain::Bits { n } => *n as u128,
        crate::mechanisms::InputDomain::Ints { n, max } => (*n as u128) * (*max as u128),
    };
    guard(
        mech.input_domain.size() * neighbor_count * mech.output_domain.size(),
        cap,
    )?;
    let outputs = mech.output_domain.enumerate();
    let mut triples = Vec::new();
    for x in mech.input_domain.enumerate() {
        for xp in mech.input_domain.neighbors(&x) {
            for y in &outputs {
                triples.push((x.clone(), xp.clone(), y.clone()));
            }
        }
    }
    Ok(PrivacySet::new(triples))
}

/// Every input, as an accuracy set.
pub fn exhaustive_accuracy_set(
    mech: &Mechanism,
    cap: usize,
) -> Result<AccuracySet, SynthesisError> {
    guard(mech.input_domain.size(), cap)?;
    Ok(AccuracySet::new(mech.input_domain.enumerate()))
}

/// Result of a set-validity check.
#[derive(Debug, Clone, PartialEq)]
pub struct SetValidation {
    pub valid: bool,
    pub counterexample: Option<String>,
}

/// Checks that every likelihood ratio achievable by any neighboring triple
/// is realized by some triple of `cset` (exact equality of ratios).
/// Returns the first exhaustive triple whose ratio is missing otherwise.
pub fn validate_privacy_set(
    mech: &Mechanism,
    model: &CompiledModel,
    cset: &PrivacySet,
    cap: usize,
) -> Result<SetValidation, SynthesisError> {
    guard(
        mech.input_domain.size() * mech.output_domain.size(),
        cap,
    )?;
    let inputs = mech.input_domain.enumerate();
    let index: HashMap<&InputVec, usize> =
        inputs.iter().enumerate().map(|(i, x)| (x, i)).collect();
    let mut dists = Vec::with_capacity(inputs.len());
    for x in &inputs {
        dists.push(model.joint_distribution(x)?);
    }
    let mass = |i: usize, y: &OutVec| dists[i].get(y).cloned().unwrap_or_default();
    let ratio_of = |a: Rational, b: Rational| -> Option<Bound> {
        if a.is_zero() && b.is_zero() {
            None
        } else if b.is_zero() {
            Some(Bound::Infinite)
        } else {
            Some(Bound::Finite(&a / &b))
        }
    };

    let mut covered: std::collections::BTreeSet<Bound> = std::collections::BTreeSet::new();
    for (x, xp, y) in &cset.triples {
        if !mech.input_domain.contains(x) || !mech.input_domain.contains(xp) {
            return Err(SynthesisError::DomainViolation(format!(
                "privacy triple ({x:?}, {xp:?}) outside the input domain"
            )));
        }
        let (Some(&i), Some(&j)) = (index.get(x), index.get(xp)) else {
            unreachable!("contains() checked above")
        };
        if let Some(r) = ratio_of(mass(i, y), mass(j, y)) {
            covered.insert(r);
        }
    }

    let outputs = mech.output_domain.enumerate();
    for (i, x) in inputs.iter().enumerate() {
        for xp in mech.input_domain.neighbors(x) {
            let j = index[&xp];
            for y in &outputs {
                let Some(r) = ratio_of(mass(i, y), mass(j, y)) else {
                    continue;
                };
                if !covered.contains(&r) {
                    return Ok(SetValidation {
                        valid: false,
                        counterexample: Some(format!(
                            "ratio {} of triple ({x:?}, {xp:?}, {y:?}) is not realized",
                            r.to_ratio_string()
                        )),
                    });
                }
            }
        }
    }
    Ok(SetValidation {
        valid: true,
        counterexample: None,
    })
}

/// Checks that every achievable interval mass is realized by some input of
/// `aset` (exact equality). Returns the first uncovered input otherwise.
pub fn validate_accuracy_set(
    mech: &Mechanism,
    model: &CompiledModel,
    aset: &AccuracySet,
    alpha: u64,
    cap: usize,
) -> Result<SetValidation, SynthesisError> {
    guard(mech.input_domain.size(), cap)?;
    let targets = mech
        .targets
        .ok_or_else(|| SynthesisError::DomainViolation("mechanism has no target map".into()))?;
    let max = mech.output_domain.max_int_value().ok_or_else(|| {
        SynthesisError::DomainViolation("accuracy needs an integer output domain".into())
    })?;
    let interval_mass = |x: &InputVec| -> Result<Rational, SynthesisError> {
        let dist = model.joint_distribution(x)?;
        let mut mass = Rational::zero();
        for y in target_interval(targets.value(x), alpha, max) {
            if let Some(p) = dist.get(&vec![y]) {
                mass += p;
            }
        }
        Ok(mass)
    };

    let mut covered: std::collections::BTreeSet<Rational> = std::collections::BTreeSet::new();
    for x in &aset.inputs {
        if !mech.input_domain.contains(x) {
            return Err(SynthesisError::DomainViolation(format!(
                "accuracy input {x:?} outside the input domain"
            )));
        }
        covered.insert(interval_mass(x)?);
    }
    for x in mech.input_domain.enumerate() {
        let mass = interval_mass(&x)?;
        if !covered.contains(&mass) {
            return Ok(SetValidation {
                valid: false,
                counterexample: Some(format!(
                    "interval mass {mass} of input {x:?} is not realized"
                )),
            });
        }
    }
    Ok(SetValidation {
        valid: true,
        counterexample: None,
    })
}
