//! Acceptance suite: every release-gating criterion as one test with one
//! pass line. Exact rational equality throughout; wall-clock timings are
//! printed for information only.

mod common;

use common::{gen_program, GenLimits};
use dpbound::compile::{compile, manual_rr_wbf, CompileOptions};
use dpbound::lang::{parse, render_program};
use dpbound::mechanisms::{
    above_threshold, rr, rr_symmetry_sets, rrcount, rrcount_symmetry_sets, Mechanism, TargetMap,
};
use dpbound::oracle::{enumerate_distribution, oracle_accuracy_bound, oracle_privacy_bound};
use dpbound::runner::{self, Mode, RunOptions};
use dpbound::synthesis::{
    accuracy_bound, exhaustive_accuracy_set, exhaustive_inference_set, exhaustive_privacy_set,
    privacy_bound, rank_accuracy, validate_accuracy_set, validate_privacy_set, Bound, PrivacySet,
    DEFAULT_STATE_CAP,
};
use dpbound::Rational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use std::time::Instant;

fn r(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

fn opts() -> RunOptions {
    RunOptions {
        jobs: 0,
        ..RunOptions::default()
    }
}

fn flip_count_distance(x: &[u64], y: &[u64]) -> usize {
    x.iter().zip(y).filter(|(a, b)| a != b).count()
}

fn model_of(mech: &Mechanism) -> dpbound::compile::CompiledModel {
    compile(&mech.program, CompileOptions::default()).unwrap()
}

/// Criterion 1: randomized-response privacy returns exactly 4 at
/// lambda = 1/5 in both modes, for n up to 10, with a witness whose flip
/// counts differ by one.
#[test]
fn c01_rr_privacy_bound_is_exactly_four() {
    let started = Instant::now();
    let four = Bound::Finite(Rational::from_int(4));
    for n in [2usize, 4, 6, 8, 10] {
        let mech = rr(n, &r(1, 5)).unwrap();
        let model = model_of(&mech);
        for mode in [Mode::Restricted, Mode::Exhaustive] {
            let report = runner::privacy_report(&model, &mech, mode, &opts()).unwrap();
            assert_eq!(report.p, four, "n={n} mode={mode:?}");
            let (x, xp, y) = report.witness.expect("witness");
            let d1 = flip_count_distance(&x, &y);
            let d2 = flip_count_distance(&xp, &y);
            assert_eq!(d1.abs_diff(d2), 1, "n={n} mode={mode:?}");
        }
    }
    println!(
        "ACCEPTANCE 1 PASS: rr privacy p = 4 exactly, both modes, n in {{2,4,6,8,10}} ({:.2}s)",
        started.elapsed().as_secs_f64()
    );
}

/// Criterion 2: the synthesized bound equals max((1-l)/l, l/(1-l)) for
/// random rational lambda, and agrees with the brute-force oracle.
#[test]
fn c02_rr_privacy_closed_form_on_random_lambdas() {
    let started = Instant::now();
    let mut rng = rand::rngs::StdRng::seed_from_u64(42);
    for case in 0..20 {
        let den = rng.gen_range(2..=40i64);
        let num = rng.gen_range(1..den);
        let lambda = r(num, den);
        let n = rng.gen_range(1..=6usize);
        let keep = Rational::one() - &lambda;
        let expected = {
            let a = &keep / &lambda;
            let b = &lambda / &keep;
            if a > b {
                a
            } else {
                b
            }
        };
        let mech = rr(n, &lambda).unwrap();
        let model = model_of(&mech);
        let report = runner::privacy_report(&model, &mech, Mode::Restricted, &opts()).unwrap();
        assert_eq!(
            report.p,
            Bound::Finite(expected.clone()),
            "case {case}: n={n} lambda={lambda}"
        );
        let brute = oracle_privacy_bound(&mech, 20).unwrap();
        assert_eq!(report.p, brute.p, "case {case}: n={n} lambda={lambda}");
    }
    println!(
        "ACCEPTANCE 2 PASS: rr privacy equals max((1-l)/l, l/(1-l)) on 20 random lambdas ({:.2}s)",
        started.elapsed().as_secs_f64()
    );
}

/// Criterion 3: counting accuracy reproduces the published values: 24/25
/// at n=2, alpha=1, and worst classes 0.9437184 / 0.9723904 at n=8,
/// alpha=3 (exact rationals, floats shown for reference).
#[test]
fn c03_rrcount_accuracy_published_values() {
    let started = Instant::now();
    let mech = rrcount(2, &r(1, 5)).unwrap();
    let model = model_of(&mech);
    let report = runner::accuracy_report(&model, &mech, Mode::Restricted, 1, &opts()).unwrap();
    assert_eq!(report.p, r(24, 25));
    let witness = report.witness.unwrap();
    let count: u64 = witness.iter().sum();
    assert!(count == 0 || count == 2, "worst class is count 0 or 2");

    let mech = rrcount(8, &r(1, 5)).unwrap();
    let model = model_of(&mech);
    let (iset, aset) = rrcount_symmetry_sets(8, 3);
    let ranked = rank_accuracy(
        &model,
        &aset,
        TargetMap::Count,
        3,
        &mech.output_domain,
        &iset,
        4,
    )
    .unwrap();
    let worst = r(368_640, 390_625); // counts 0 and 8
    let second = r(379_840, 390_625); // counts 1 and 7
    assert_eq!(ranked[0].1, worst);
    assert_eq!(ranked[1].1, worst);
    assert_eq!(ranked[2].1, second);
    assert_eq!(ranked[3].1, second);
    assert_eq!(format!("{}", ranked[0].1.to_f64()), "0.9437184");
    assert_eq!(format!("{}", ranked[2].1.to_f64()), "0.9723904");
    let counts: Vec<u64> = ranked.iter().map(|(x, _)| x.iter().sum()).collect();
    assert_eq!(counts, vec![0, 8, 1, 7]);
    println!(
        "ACCEPTANCE 3 PASS: rrcount accuracy 24/25 (n=2, a=1); worst classes 0.9437184 / 0.9723904 (n=8, a=3) ({:.2}s)",
        started.elapsed().as_secs_f64()
    );
}

/// Criterion 4: restricted-set bounds equal exhaustive-set bounds exactly
/// for n up to 8 (privacy) and every alpha up to n (accuracy).
#[test]
fn c04_restricted_equals_exhaustive() {
    let started = Instant::now();
    let lambda = r(1, 5);
    for n in 1..=8usize {
        let mech = rr(n, &lambda).unwrap();
        let model = model_of(&mech);
        let restricted = runner::privacy_report(&model, &mech, Mode::Restricted, &opts()).unwrap();
        let exhaustive = runner::privacy_report(&model, &mech, Mode::Exhaustive, &opts()).unwrap();
        assert_eq!(restricted.p, exhaustive.p, "privacy n={n}");

        // The generic set-driven algorithm agrees with the one-run matrix.
        let (iset, cset) = rr_symmetry_sets(n);
        let generic = privacy_bound(&model, &cset, &iset).unwrap();
        assert_eq!(generic.p, exhaustive.p, "generic sets n={n}");

        let mech = rrcount(n, &lambda).unwrap();
        let model = model_of(&mech);
        for alpha in 0..=n as u64 {
            let restricted =
                runner::accuracy_report(&model, &mech, Mode::Restricted, alpha, &opts()).unwrap();
            let exhaustive =
                runner::accuracy_report(&model, &mech, Mode::Exhaustive, alpha, &opts()).unwrap();
            assert_eq!(restricted.p, exhaustive.p, "accuracy n={n} alpha={alpha}");
        }
    }
    println!(
        "ACCEPTANCE 4 PASS: restricted bounds equal exhaustive bounds for n <= 8, every alpha ({:.2}s)",
        started.elapsed().as_secs_f64()
    );
}

/// Criterion 5: compiled distributions equal brute-force enumeration on
/// every input, and exhaustive bounds agree across the two pipelines.
#[test]
fn c05_oracle_equivalence() {
    let started = Instant::now();
    let lambda = r(1, 5);
    let mut mechs: Vec<Mechanism> = Vec::new();
    for n in 1..=6 {
        mechs.push(rr(n, &lambda).unwrap());
        mechs.push(rrcount(n, &lambda).unwrap());
    }
    let half = r(1, 2);
    let third = r(1, 3);
    for (n, k, t) in [(1, 1, 1), (2, 2, 1), (2, 3, 2), (3, 2, 2), (3, 3, 3)] {
        mechs.push(above_threshold(n, k, t, &half, &half).unwrap());
        mechs.push(above_threshold(n, k, t, &third, &half).unwrap());
    }
    for mech in &mechs {
        let model = model_of(mech);
        for x in mech.input_domain.enumerate() {
            let brute = enumerate_distribution(&mech.program, &x, 24).unwrap();
            let compiled = model.joint_distribution(&x).unwrap();
            assert_eq!(brute, compiled, "{} x={x:?}", mech.name);
        }
        let report = runner::privacy_report(&model, mech, Mode::Exhaustive, &opts()).unwrap();
        let brute = oracle_privacy_bound(mech, 24).unwrap();
        assert_eq!(report.p, brute.p, "{} privacy", mech.name);
        if mech.targets.is_some() {
            for alpha in [0u64, 1, 2] {
                let report =
                    runner::accuracy_report(&model, mech, Mode::Exhaustive, alpha, &opts())
                        .unwrap();
                let brute = oracle_accuracy_bound(mech, alpha, 24).unwrap();
                assert_eq!(report.p, brute.p, "{} accuracy alpha={alpha}", mech.name);
            }
        }
    }
    println!(
        "ACCEPTANCE 5 PASS: compiled pipeline equals brute-force oracle on {} mechanisms ({:.2}s)",
        mechs.len(),
        started.elapsed().as_secs_f64()
    );
}

/// Criterion 6: the shipped symmetry sets are valid: they realize every
/// achievable ratio / interval mass for n up to 5.
#[test]
fn c06_symmetry_sets_are_valid() {
    let started = Instant::now();
    let lambda = r(1, 5);
    for n in 1..=5usize {
        let mech = rr(n, &lambda).unwrap();
        let model = model_of(&mech);
        let (_, cset) = rr_symmetry_sets(n);
        let result = validate_privacy_set(&mech, &model, &cset, DEFAULT_STATE_CAP).unwrap();
        assert!(result.valid, "privacy set n={n}: {:?}", result.counterexample);

        let mech = rrcount(n, &lambda).unwrap();
        let model = model_of(&mech);
        for alpha in 0..=n as u64 {
            let (_, aset) = rrcount_symmetry_sets(n, alpha);
            let result =
                validate_accuracy_set(&mech, &model, &aset, alpha, DEFAULT_STATE_CAP).unwrap();
            assert!(
                result.valid,
                "accuracy set n={n} alpha={alpha}: {:?}",
                result.counterexample
            );
        }
    }
    println!(
        "ACCEPTANCE 6 PASS: symmetry sets realize every achievable value for n <= 5 ({:.2}s)",
        started.elapsed().as_secs_f64()
    );
}

/// Criterion 7: solver-run accounting: 2^n joint-distribution runs
/// exhaustively, exactly one restricted.
#[test]
fn c07_solver_run_accounting() {
    let started = Instant::now();
    for n in [2usize, 4, 6, 8] {
        let mech = rr(n, &r(1, 5)).unwrap();
        let model = model_of(&mech);
        let exhaustive = runner::privacy_report(&model, &mech, Mode::Exhaustive, &opts()).unwrap();
        assert_eq!(exhaustive.solver_runs, 1 << n, "exhaustive n={n}");
        let restricted = runner::privacy_report(&model, &mech, Mode::Restricted, &opts()).unwrap();
        assert_eq!(restricted.solver_runs, 1, "restricted n={n}");
    }
    println!(
        "ACCEPTANCE 7 PASS: solver runs are 2^n exhaustive and 1 restricted ({:.2}s)",
        started.elapsed().as_secs_f64()
    );
}

/// Criterion 8: conditioned diagram sizes: n + 2 nodes for randomized
/// response; the above-threshold instance (n=6, k=3) stays within twice
/// the published 91 nodes (ordering-dependent, report only).
#[test]
fn c08_diagram_sizes() {
    let started = Instant::now();
    for n in 2..=10usize {
        let mech = rr(n, &r(1, 5)).unwrap();
        let model = model_of(&mech);
        let nodes = model.conditioned_node_count(&vec![0; n]).unwrap();
        assert_eq!(nodes, n + 2, "rr n={n}");
    }
    let mech = above_threshold(6, 3, 1, &r(1, 2), &r(1, 2)).unwrap();
    let model = model_of(&mech);
    let nodes = model.conditioned_node_count(&vec![0; 6]).unwrap();
    println!("above-threshold n=6 k=3 conditioned diagram: {nodes} nodes (reference 91)");
    assert!(nodes <= 182, "above-threshold size {nodes} > 2x reference");
    println!(
        "ACCEPTANCE 8 PASS: rr diagrams have n + 2 nodes (n in 2..=10); above-threshold {nodes} <= 182 ({:.2}s)",
        started.elapsed().as_secs_f64()
    );
}

/// Criterion 9: standing property suites.
#[test]
fn c09_property_suites() {
    let started = Instant::now();
    let mut rng = rand::rngs::StdRng::seed_from_u64(9);

    // Normalization: every built-in mechanism's distribution sums to one on
    // every input.
    let mut mechs: Vec<Mechanism> = Vec::new();
    for n in 1..=5 {
        mechs.push(rr(n, &r(1, 5)).unwrap());
        mechs.push(rrcount(n, &r(1, 3)).unwrap());
    }
    mechs.push(above_threshold(2, 2, 1, &r(1, 2), &r(1, 3)).unwrap());
    mechs.push(above_threshold(3, 2, 2, &r(2, 5), &r(1, 2)).unwrap());
    for mech in &mechs {
        let model = model_of(mech);
        for x in mech.input_domain.enumerate() {
            let dist = model.joint_distribution(&x).unwrap();
            let total: Rational = dist.values().fold(Rational::zero(), |a, p| a + p);
            assert_eq!(total, Rational::one(), "{} x={x:?}", mech.name);
        }
    }

    // Flip-count symmetry: Pr[RR(x) = y] depends only on the number of
    // disagreeing positions. 200 random instance pairs.
    for _ in 0..200 {
        let n = rng.gen_range(2..=8usize);
        let lambda = r(rng.gen_range(1..5), 5);
        let model = manual_rr_wbf(n, &lambda);
        let x1: Vec<u64> = (0..n).map(|_| rng.gen_range(0..=1u64)).collect();
        let y1: Vec<u64> = (0..n).map(|_| rng.gen_range(0..=1u64)).collect();
        let d = flip_count_distance(&x1, &y1);
        // Build a second pair at the same distance.
        let x2: Vec<u64> = (0..n).map(|_| rng.gen_range(0..=1u64)).collect();
        let mut y2 = x2.clone();
        let mut positions: Vec<usize> = (0..n).collect();
        positions.shuffle(&mut rng);
        for &i in positions.iter().take(d) {
            y2[i] ^= 1;
        }
        assert_eq!(
            model.prob_of(&x1, &y1).unwrap(),
            model.prob_of(&x2, &y2).unwrap()
        );
    }

    // Neighboring inputs shift the flip count by exactly one. 200 instances.
    for _ in 0..200 {
        let n = rng.gen_range(1..=8usize);
        let x: Vec<u64> = (0..n).map(|_| rng.gen_range(0..=1u64)).collect();
        let y: Vec<u64> = (0..n).map(|_| rng.gen_range(0..=1u64)).collect();
        let mut xp = x.clone();
        xp[rng.gen_range(0..n)] ^= 1;
        let d1 = flip_count_distance(&x, &y);
        let d2 = flip_count_distance(&xp, &y);
        assert_eq!(d1.abs_diff(d2), 1);
    }

    // Counting distributions depend only on the one-count of the input.
    // 200 random instance pairs.
    for _ in 0..200 {
        let n = rng.gen_range(2..=6usize);
        let lambda = r(rng.gen_range(1..5), 5);
        let mech = rrcount(n, &lambda).unwrap();
        let model = model_of(&mech);
        let count = rng.gen_range(0..=n);
        let mut x1: Vec<u64> = (0..n).map(|i| u64::from(i < count)).collect();
        x1.shuffle(&mut rng);
        let mut x2: Vec<u64> = (0..n).map(|i| u64::from(i < count)).collect();
        x2.shuffle(&mut rng);
        assert_eq!(
            model.joint_distribution(&x1).unwrap(),
            model.joint_distribution(&x2).unwrap()
        );
    }

    // Accuracy probability is non-decreasing in alpha.
    for _ in 0..5 {
        let lambda = r(rng.gen_range(1..10), 10);
        let mech = rrcount(5, &lambda).unwrap();
        let model = model_of(&mech);
        let mut last = Rational::zero();
        for alpha in 0..=5u64 {
            let report =
                runner::accuracy_report(&model, &mech, Mode::Restricted, alpha, &opts()).unwrap();
            assert!(report.p >= last, "alpha={alpha}");
            last = report.p;
        }
    }

    // The privacy value is invariant under reordering of the privacy set.
    for _ in 0..5 {
        let lambda = r(rng.gen_range(1..10), 10);
        let mech = rr(5, &lambda).unwrap();
        let model = model_of(&mech);
        let (iset, cset) = rr_symmetry_sets(5);
        let baseline = privacy_bound(&model, &cset, &iset).unwrap();
        let mut shuffled = cset.triples.clone();
        shuffled.shuffle(&mut rng);
        let report = privacy_bound(&model, &PrivacySet::new(shuffled), &iset).unwrap();
        assert_eq!(report.p, baseline.p);
    }

    // Text round trip on 500 generated programs.
    for seed in 0..500u64 {
        let program = gen_program(seed, GenLimits::default());
        let rendered = render_program(&program);
        assert_eq!(parse(&rendered).unwrap(), program, "seed {seed}");
    }

    // Exhaustive sets exist and respect declared shapes (guards the
    // constructors the suites above rely on).
    let mech = rr(2, &r(1, 5)).unwrap();
    assert_eq!(
        exhaustive_inference_set(&mech, DEFAULT_STATE_CAP)
            .unwrap()
            .pairs
            .len(),
        16
    );
    assert_eq!(
        exhaustive_privacy_set(&mech, DEFAULT_STATE_CAP)
            .unwrap()
            .triples
            .len(),
        32
    );
    assert_eq!(
        exhaustive_accuracy_set(&mech, DEFAULT_STATE_CAP)
            .unwrap()
            .inputs
            .len(),
        4
    );
    let model = model_of(&mech);
    let (iset, aset) = rrcount_symmetry_sets(2, 1);
    let _ = (iset, aset, model);

    println!(
        "ACCEPTANCE 9 PASS: normalization, flip-count symmetries, monotonicity, reorder invariance, 500 round trips ({:.2}s)",
        started.elapsed().as_secs_f64()
    );
}

/// Thin check that accuracy synthesis on restricted sets matches a direct
/// oracle argmin, exercising the reduction from the accuracy definition to
/// interval sums.
#[test]
fn accuracy_argmin_matches_oracle_argmin() {
    let mech = rrcount(4, &r(1, 5)).unwrap();
    let model = model_of(&mech);
    let (iset, aset) = rrcount_symmetry_sets(4, 1);
    let report = accuracy_bound(
        &model,
        &aset,
        TargetMap::Count,
        1,
        &mech.output_domain,
        &iset,
    )
    .unwrap();
    let brute = oracle_accuracy_bound(&mech, 1, 20).unwrap();
    assert_eq!(report.p, brute.p);
}
