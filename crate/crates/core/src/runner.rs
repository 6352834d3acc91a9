//! High-level runs: compile a mechanism, pick exhaustive or restricted
//! sets, synthesize bounds, and package a [`RunReport`]. The command-line
//! front end is a thin wrapper over this module.

use crate::compile::{compile, CompileOptions, CompiledModel};
use crate::mechanisms::{
    self, above_threshold, rr, rr_restricted_matrix, rrcount, Mechanism,
};
use crate::rational::Rational;
use crate::report::RunReport;
use crate::synthesis::{
    self, accuracy_bound_from_matrix, exhaustive_accuracy_set, joint_many,
    privacy_bound_from_matrix, rank_accuracy, AccuracyReport, InferenceSet, PrivacyReport,
    ProbMatrix, RatioScan,
};
use crate::timing;
use crate::Error;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exhaustive,
    Restricted,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Exhaustive => "exhaustive",
            Mode::Restricted => "restricted",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exhaustive" => Ok(Mode::Exhaustive),
            "restricted" => Ok(Mode::Restricted),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone)]
pub enum MechConfig {
    Rr {
        n: usize,
        lambda: Rational,
    },
    RrCount {
        n: usize,
        lambda: Rational,
    },
    Above {
        n: usize,
        k: u64,
        threshold: u64,
        lambda1: Rational,
        lambda2: Rational,
    },
    /// A user program; domains are derived from its signature.
    Program {
        text: String,
    },
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Worker threads for distinct-input inference; 0 picks the host
    /// parallelism.
    pub jobs: usize,
    pub node_budget: usize,
    pub state_cap: usize,
    pub bench_exhaustive_max_n: usize,
    pub bench_restricted_max_n: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            jobs: 1,
            node_budget: crate::compile::DEFAULT_NODE_BUDGET,
            state_cap: synthesis::DEFAULT_STATE_CAP,
            bench_exhaustive_max_n: 10,
            bench_restricted_max_n: 20,
        }
    }
}

impl RunOptions {
    fn effective_jobs(&self) -> usize {
        if self.jobs == 0 {
            std::thread::available_parallelism()
                .map(|p| p.get())
                .unwrap_or(1)
        } else {
            self.jobs
        }
    }
}

pub fn build_mechanism(cfg: &MechConfig) -> Result<Mechanism, Error> {
    match cfg {
        MechConfig::Rr { n, lambda } => rr(*n, lambda),
        MechConfig::RrCount { n, lambda } => rrcount(*n, lambda),
        MechConfig::Above {
            n,
            k,
            threshold,
            lambda1,
            lambda2,
        } => above_threshold(*n, *k, *threshold, lambda1, lambda2),
        MechConfig::Program { text } => mechanism_from_source(text),
    }
}

/// Wraps a user program as a mechanism. Inputs must be all-boolean or
/// all-integer of one width; the output must be a boolean tuple or a single
/// integer.
pub fn mechanism_from_source(text: &str) -> Result<Mechanism, Error> {
    use crate::lang::ScalarType;
    let program = crate::lang::validate(crate::lang::parse(text)?)?;
    let params = program.params();
    if params.is_empty() {
        return Err(Error::Unsupported(
            "programs need at least one input parameter".into(),
        ));
    }
    let input_domain = if params.iter().all(|p| p.ty == ScalarType::Bool) {
        mechanisms::InputDomain::Bits { n: params.len() }
    } else if let ScalarType::Int { width } = params[0].ty {
        if params.iter().all(|p| p.ty == ScalarType::Int { width }) {
            mechanisms::InputDomain::Ints {
                n: params.len(),
                max: (1u64 << width) - 1,
            }
        } else {
            return Err(Error::Unsupported(
                "parameters must share one type (all bool or all int of one width)".into(),
            ));
        }
    } else {
        return Err(Error::Unsupported(
            "parameters must share one type (all bool or all int of one width)".into(),
        ));
    };
    let output_domain = if program.output_type.iter().all(|t| *t == ScalarType::Bool) {
        mechanisms::OutputDomain::Bits {
            n: program.output_type.len(),
        }
    } else if program.output_type.len() == 1 {
        match program.output_type[0] {
            ScalarType::Int { width } => mechanisms::OutputDomain::IntRange {
                max: (1u64 << width) - 1,
            },
            ScalarType::Bool => mechanisms::OutputDomain::Bits { n: 1 },
        }
    } else {
        return Err(Error::Unsupported(
            "output must be a boolean tuple or a single integer".into(),
        ));
    };
    let n = params.len();
    Ok(Mechanism {
        name: "program".into(),
        program,
        input_domain,
        output_domain,
        targets: None,
        params: mechanisms::MechParams {
            n,
            ..Default::default()
        },
    })
}

pub fn compile_mechanism(
    mech: &Mechanism,
    opts: &RunOptions,
) -> Result<CompiledModel, Error> {
    Ok(compile(
        &mech.program,
        CompileOptions {
            node_budget: opts.node_budget,
        },
    )?)
}

/// The full probability matrix over `X^n x Y`, one joint-distribution run
/// per input, without materializing the pair list.
pub fn exhaustive_matrix(
    model: &CompiledModel,
    mech: &Mechanism,
    opts: &RunOptions,
) -> Result<ProbMatrix, Error> {
    let needed = mech.input_domain.size() * mech.output_domain.size();
    if needed > opts.state_cap as u128 {
        return Err(Error::Synthesis(synthesis::SynthesisError::SizeGuard {
            needed,
            cap: opts.state_cap,
        }));
    }
    let inputs = mech.input_domain.enumerate();
    let dists = joint_many(model, inputs.clone(), opts.effective_jobs())
        .map_err(Error::Synthesis)?;
    let mut matrix = ProbMatrix::new(inputs.len());
    let outputs = mech.output_domain.enumerate();
    for y in &outputs {
        matrix.register_output(y.clone());
    }
    for (x, dist) in inputs.into_iter().zip(dists) {
        let row: Vec<Option<Rational>> = outputs
            .iter()
            .map(|y| Some(dist.get(y).cloned().unwrap_or_default()))
            .collect();
        matrix.insert_row(x, row);
    }
    Ok(matrix)
}

fn conditioned_nodes(model: &CompiledModel, mech: &Mechanism) -> usize {
    let zeros = vec![0u64; mech.input_domain.len()];
    model.conditioned_node_count(&zeros).unwrap_or(0)
}

/// Privacy bound synthesis for one mechanism and mode.
pub fn run_privacy(
    mech: &Mechanism,
    mode: Mode,
    opts: &RunOptions,
) -> Result<RunReport, Error> {
    let model = compile_mechanism(mech, opts)?;
    let report = privacy_report(&model, mech, mode, opts)?;
    Ok(RunReport::from_privacy(
        &mech.name,
        mech.params.clone(),
        mode.as_str(),
        &report,
        conditioned_nodes(&model, mech),
        model.stats.compile_seconds,
    ))
}

pub fn privacy_report(
    model: &CompiledModel,
    mech: &Mechanism,
    mode: Mode,
    opts: &RunOptions,
) -> Result<PrivacyReport, Error> {
    match mode {
        Mode::Exhaustive => {
            let inf_start = timing::start();
            let matrix = exhaustive_matrix(model, mech, opts)?;
            let inference_seconds = timing::seconds_since(&inf_start);
            let scan_start = timing::start();
            // Stream the ordered neighbor triples instead of materializing
            // the exhaustive privacy set. Inputs are enumerated in counting
            // order, so a neighbor's row index is a stride away and the
            // whole scan runs on dense rows without hashing.
            let inputs = mech.input_domain.enumerate();
            let outputs = mech.output_domain.enumerate();
            let rows: Vec<&[Option<Rational>]> = inputs
                .iter()
                .map(|x| matrix.row(x).expect("exhaustive matrix is dense"))
                .collect();
            let (n, base) = match &mech.input_domain {
                mechanisms::InputDomain::Bits { n } => (*n, 2u64),
                mechanisms::InputDomain::Ints { n, max } => (*n, max + 1),
            };
            let mut strides = vec![1i64; n];
            for i in (0..n.saturating_sub(1)).rev() {
                strides[i] = strides[i + 1] * base as i64;
            }
            let mut scan = RatioScan::new();
            for (xi, x) in inputs.iter().enumerate() {
                for coord in 0..n {
                    for v in 0..base {
                        if v == x[coord] {
                            continue;
                        }
                        let delta = (v as i64 - x[coord] as i64) * strides[coord];
                        let xpi = (xi as i64 + delta) as usize;
                        for (rank, y) in outputs.iter().enumerate() {
                            let (Some(a), Some(b)) = (&rows[xi][rank], &rows[xpi][rank]) else {
                                continue;
                            };
                            scan.offer_masses(a, b, || {
                                let mut xp = x.clone();
                                xp[coord] = v;
                                (x.clone(), xp, y.clone())
                            });
                        }
                    }
                }
            }
            let (p, witness) = scan.finish();
            Ok(PrivacyReport {
                epsilon: p.ln(),
                p,
                witness,
                solver_runs: matrix.solver_runs,
                inference_seconds,
                synthesis_seconds: timing::seconds_since(&scan_start),
            })
        }
        Mode::Restricted => {
            if mech.name != "rr" {
                return Err(Error::Unsupported(format!(
                    "no restricted privacy sets for mechanism `{}`",
                    mech.name
                )));
            }
            let n = mech.input_domain.len();
            let (_, cset) = mechanisms::rr_symmetry_sets(n);
            let inf_start = timing::start();
            let matrix = rr_restricted_matrix(model, n).map_err(Error::Synthesis)?;
            let inference_seconds = timing::seconds_since(&inf_start);
            let mut report =
                privacy_bound_from_matrix(&matrix, &cset).map_err(Error::Synthesis)?;
            report.inference_seconds = inference_seconds;
            Ok(report)
        }
    }
}

/// Accuracy bound synthesis for one mechanism and mode.
pub fn run_accuracy(
    mech: &Mechanism,
    mode: Mode,
    alpha: u64,
    opts: &RunOptions,
) -> Result<RunReport, Error> {
    let model = compile_mechanism(mech, opts)?;
    let report = accuracy_report(&model, mech, mode, alpha, opts)?;
    Ok(RunReport::from_accuracy(
        &mech.name,
        mech.params.clone(),
        mode.as_str(),
        &report,
        conditioned_nodes(&model, mech),
        model.stats.compile_seconds,
    ))
}

pub fn accuracy_report(
    model: &CompiledModel,
    mech: &Mechanism,
    mode: Mode,
    alpha: u64,
    opts: &RunOptions,
) -> Result<AccuracyReport, Error> {
    let targets = mech.targets.ok_or_else(|| {
        Error::Unsupported(format!("mechanism `{}` has no target map", mech.name))
    })?;
    match mode {
        Mode::Exhaustive => {
            let inf_start = timing::start();
            let matrix = exhaustive_matrix(model, mech, opts)?;
            let inference_seconds = timing::seconds_since(&inf_start);
            let aset = exhaustive_accuracy_set(mech, opts.state_cap).map_err(Error::Synthesis)?;
            let mut report = accuracy_bound_from_matrix(
                &matrix,
                &aset,
                targets,
                alpha,
                &mech.output_domain,
            )
            .map_err(Error::Synthesis)?;
            report.inference_seconds = inference_seconds;
            Ok(report)
        }
        Mode::Restricted => {
            if mech.name != "rrcount" {
                return Err(Error::Unsupported(format!(
                    "no restricted accuracy sets for mechanism `{}`",
                    mech.name
                )));
            }
            let n = mech.input_domain.len();
            let (iset, aset) = mechanisms::rrcount_symmetry_sets(n, alpha);
            let inf_start = timing::start();
            let matrix = synthesis::inference_jobs(model, &iset, opts.effective_jobs())
                .map_err(Error::Synthesis)?;
            let inference_seconds = timing::seconds_since(&inf_start);
            let mut report = accuracy_bound_from_matrix(
                &matrix,
                &aset,
                targets,
                alpha,
                &mech.output_domain,
            )
            .map_err(Error::Synthesis)?;
            report.inference_seconds = inference_seconds;
            Ok(report)
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RankRow {
    pub input: String,
    pub one_minus_beta_exact: String,
    pub one_minus_beta_float: f64,
}

/// The `limit` inputs with the lowest accuracy probability, ascending.
/// Counting mechanisms rank their one-count classes (restricted accuracy
/// set); anything with a target map can rank its full input space.
pub fn run_rank(
    mech: &Mechanism,
    alpha: u64,
    limit: usize,
    opts: &RunOptions,
) -> Result<Vec<RankRow>, Error> {
    let targets = mech.targets.ok_or_else(|| {
        Error::Unsupported(format!("mechanism `{}` has no target map", mech.name))
    })?;
    let model = compile_mechanism(mech, opts)?;
    let (iset, aset) = if mech.name == "rrcount" {
        let n = mech.input_domain.len();
        mechanisms::rrcount_symmetry_sets(n, alpha)
    } else {
        let aset = exhaustive_accuracy_set(mech, opts.state_cap).map_err(Error::Synthesis)?;
        let mut pairs = Vec::new();
        let max = mech.output_domain.max_int_value().ok_or_else(|| {
            Error::Unsupported("ranking needs an integer output domain".into())
        })?;
        for x in &aset.inputs {
            for y in synthesis::target_interval(targets.value(x), alpha, max) {
                pairs.push((x.clone(), vec![y]));
            }
        }
        (InferenceSet::new(pairs), aset)
    };
    let ranked = rank_accuracy(
        &model,
        &aset,
        targets,
        alpha,
        &mech.output_domain,
        &iset,
        limit,
    )
    .map_err(Error::Synthesis)?;
    Ok(ranked
        .into_iter()
        .map(|(x, p)| RankRow {
            input: mech.input_domain.render(&x),
            one_minus_beta_exact: p.to_ratio_string(),
            one_minus_beta_float: p.to_f64(),
        })
        .collect())
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SweepRow {
    pub lambda: String,
    pub lambda_float: f64,
    pub e_eps_exact: String,
    pub e_eps: f64,
    pub one_minus_beta_exact: String,
    pub one_minus_beta: f64,
}

/// Restricted privacy and counting-accuracy bounds over a grid of coin
/// parameters (one row per lambda).
pub fn run_sweep(
    n: usize,
    grid: &[Rational],
    alpha: u64,
    opts: &RunOptions,
) -> Result<Vec<SweepRow>, Error> {
    let mut rows = Vec::with_capacity(grid.len());
    for lambda in grid {
        if !(lambda > &Rational::zero() && lambda < &Rational::one()) {
            return Err(Error::InvalidParameter(format!(
                "sweep lambda {lambda} outside (0, 1)"
            )));
        }
        let rr_mech = rr(n, lambda)?;
        let rr_model = compile_mechanism(&rr_mech, opts)?;
        let privacy = privacy_report(&rr_model, &rr_mech, Mode::Restricted, opts)?;
        let count_mech = rrcount(n, lambda)?;
        let count_model = compile_mechanism(&count_mech, opts)?;
        let accuracy = accuracy_report(&count_model, &count_mech, Mode::Restricted, alpha, opts)?;
        rows.push(SweepRow {
            lambda: lambda.to_ratio_string(),
            lambda_float: lambda.to_f64(),
            e_eps_exact: privacy.p.to_ratio_string(),
            e_eps: privacy.p.to_f64(),
            one_minus_beta_exact: accuracy.p.to_ratio_string(),
            one_minus_beta: accuracy.p.to_f64(),
        });
    }
    Ok(rows)
}

/// Default sweep grid: 1/10 through 9/10.
pub fn default_grid() -> Vec<Rational> {
    (1..=9).map(|i| Rational::new(i, 10)).collect()
}

/// Privacy benchmarks over a range of client counts. Refuses sizes past the
/// configured caps rather than running away.
pub fn run_bench(
    cfg_for_n: impl Fn(usize) -> MechConfig,
    n_values: &[usize],
    modes: &[Mode],
    opts: &RunOptions,
) -> Result<Vec<RunReport>, Error> {
    let mut reports = Vec::new();
    for &n in n_values {
        for &mode in modes {
            let cap = match mode {
                Mode::Exhaustive => opts.bench_exhaustive_max_n,
                Mode::Restricted => opts.bench_restricted_max_n,
            };
            if n > cap {
                return Err(Error::Synthesis(synthesis::SynthesisError::SizeGuard {
                    needed: n as u128,
                    cap,
                }));
            }
            let mech = build_mechanism(&cfg_for_n(n))?;
            reports.push(run_privacy(&mech, mode, opts)?);
        }
    }
    Ok(reports)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct InferRow {
    pub x: String,
    pub y: String,
    pub prob_exact: String,
    pub prob_float: f64,
}

/// Dumps the probability matrix the selected mode would compute.
pub fn run_infer(
    mech: &Mechanism,
    mode: Mode,
    alpha: u64,
    opts: &RunOptions,
) -> Result<Vec<InferRow>, Error> {
    let model = compile_mechanism(mech, opts)?;
    let matrix = match mode {
        Mode::Exhaustive => exhaustive_matrix(&model, mech, opts)?,
        Mode::Restricted => match mech.name.as_str() {
            "rr" => rr_restricted_matrix(&model, mech.input_domain.len())
                .map_err(Error::Synthesis)?,
            "rrcount" => {
                let (iset, _) =
                    mechanisms::rrcount_symmetry_sets(mech.input_domain.len(), alpha);
                synthesis::inference_jobs(&model, &iset, opts.effective_jobs())
                    .map_err(Error::Synthesis)?
            }
            other => {
                return Err(Error::Unsupported(format!(
                    "no restricted sets for mechanism `{other}`"
                )))
            }
        },
    };
    Ok(matrix
        .entries()
        .map(|(x, y, p)| InferRow {
            x: mech.input_domain.render(x),
            y: mech.output_domain.render(y),
            prob_exact: p.to_ratio_string(),
            prob_float: p.to_f64(),
        })
        .collect())
}
