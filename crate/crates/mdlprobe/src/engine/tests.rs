use super::*;
use crate::codelength::Label;
use crate::data::Example;
use crate::learners::Grid;
use crate::transforms::Transform;

fn two_class_dataset(n: usize) -> Dataset {
    let examples: Vec<Example> = (0..n)
        .map(|i| {
            let class = i % 2;
            let word = if class == 0 { "red" } else { "blue" };
            let mut ex = Example::new(
                vec!["the".into(), word.into(), "thing".into()],
                Label::Class(class),
            );
            ex.aux.insert("copy".into(), ex.tokens.clone());
            ex
        })
        .collect();
    Dataset {
        name: format!("two-class-{n}"),
        examples,
        space: LabelSpace::Categorical { num_classes: 2 },
        label_names: None,
        checksum: None,
    }
}

fn fixed_nb() -> LearnerSpec {
    LearnerSpec {
        calibrate: false,
        grid: Grid { alphas: Some(vec![0.1]), ..Grid::default() },
        ..LearnerSpec::naive_bayes()
    }
}

fn fixed_prior() -> LearnerSpec {
    LearnerSpec {
        calibrate: false,
        grid: Grid { alphas: Some(vec![1.0]), ..Grid::default() },
        ..LearnerSpec::prior()
    }
}

#[test]
fn first_block_is_uniform_and_exact() {
    let data = two_class_dataset(128);
    let result = run_condition(
        "base",
        &data,
        &Transform::Identity,
        &[fixed_prior()],
        &ScheduleParams::default(),
        &[0],
    )
    .unwrap();
    let run = &result.seed_runs[0];
    assert_eq!(run.blocks[0].chosen_model, "uniform");
    assert_eq!(run.blocks[0].bits, 64.0); // 64 examples at exactly 1 bit each
    assert_eq!(run.ensemble_overhead_bits, 0.0); // single model: no overhead
    let sum: f64 = run.blocks.iter().map(|b| b.bits).sum();
    assert_eq!(run.total_bits, sum);
}

#[test]
fn ensemble_overhead_is_charged_per_nonfirst_block() {
    let data = two_class_dataset(1024);
    // Four prior variants so M = 4; first_cut 4 gives the full 9 blocks.
    let roster: Vec<LearnerSpec> = [1.0, 2.0, 3.0, 4.0]
        .iter()
        .map(|&a| LearnerSpec {
            name: format!("prior_a{a}"),
            grid: Grid { alphas: Some(vec![a]), ..Grid::default() },
            calibrate: false,
            ..LearnerSpec::prior()
        })
        .collect();
    let params = ScheduleParams { num_blocks: 9, first_cut: 4 };
    let result =
        run_condition("base", &data, &Transform::Identity, &roster, &params, &[0]).unwrap();
    let run = &result.seed_runs[0];
    assert_eq!(run.blocks.len(), 9);
    assert_eq!(run.ensemble_overhead_bits, 16.0); // 8 * log2(4)
    let sum: f64 = run.blocks.iter().map(|b| b.bits).sum();
    assert_eq!(run.total_bits, sum + 16.0);
}

#[test]
fn ensemble_never_loses_more_than_the_overhead() {
    let data = two_class_dataset(300);
    let seeds = [3u64, 4];
    let params = ScheduleParams::default();
    let both = run_condition(
        "both",
        &data,
        &Transform::Identity,
        &[fixed_prior(), fixed_nb()],
        &params,
        &seeds,
    )
    .unwrap();
    let only_prior =
        run_condition("p", &data, &Transform::Identity, &[fixed_prior()], &params, &seeds).unwrap();
    let only_nb =
        run_condition("n", &data, &Transform::Identity, &[fixed_nb()], &params, &seeds).unwrap();
    let s = both.schedule.num_blocks() as f64;
    for i in 0..seeds.len() {
        let best_single =
            only_prior.seed_runs[i].total_bits.min(only_nb.seed_runs[i].total_bits);
        let bound = best_single + (s - 1.0) * 2f64.log2();
        assert!(
            both.seed_runs[i].total_bits <= bound + 1e-9,
            "seed {}: ensemble {} > bound {}",
            seeds[i],
            both.seed_runs[i].total_bits,
            bound
        );
    }
}

#[test]
fn unit_schedule_matches_independent_online_loop() {
    // Engine totals must equal a hand-rolled example-by-example online code
    // bit for bit when every block holds one example.
    let data = two_class_dataset(40);
    let schedule = BlockSchedule::unit(40);
    let seed = 7u64;
    let spec = fixed_nb();
    let result = run_condition_with_schedule(
        "unit",
        &data,
        &Transform::Identity,
        std::slice::from_ref(&spec),
        &schedule,
        &[seed],
    )
    .unwrap();

    let perm = shuffled_indices(seed, 40);
    let ordered: Vec<Example> = perm.iter().map(|&i| data.examples[i].clone()).collect();
    let mut oracle = 0.0f64;
    for n in 0..40 {
        if n == 0 {
            oracle += codelength(&uniform_prior(&data.space), &ordered[0].label)
                .unwrap()
                .value();
        } else {
            let (model, _) = fit(&spec, &ordered[..n], &data.space, 0, None).unwrap();
            oracle += model.codelength(&ordered[n].tokens, &ordered[n].label).unwrap().value();
        }
    }
    assert_eq!(result.seed_runs[0].total_bits, oracle);
}

#[test]
fn duplicated_token_stream_is_a_naive_bayes_no_op() {
    // Appending a copy of the tokens (no marker) adds no new presence
    // features, so the binary naive Bayes condition codes identically.
    let data = two_class_dataset(200);
    let seeds = [1u64, 2];
    let params = ScheduleParams::default();
    let base = run_condition(
        "base",
        &data,
        &Transform::Identity,
        &[fixed_nb()],
        &params,
        &seeds,
    )
    .unwrap();
    let duped = run_condition(
        "dup",
        &data,
        &Transform::AppendAuxiliary { field: "copy".into(), marker: String::new() },
        &[fixed_nb()],
        &params,
        &seeds,
    )
    .unwrap();
    for (a, b) in base.seed_runs.iter().zip(&duped.seed_runs) {
        assert!((a.total_bits - b.total_bits).abs() < 1e-9);
    }
}

#[test]
fn conditions_share_permutations() {
    let data = two_class_dataset(150);
    let seeds = [5u64, 6];
    let params = ScheduleParams::default();
    let a = run_condition("a", &data, &Transform::Identity, &[fixed_prior()], &params, &seeds)
        .unwrap();
    let b = run_condition("b", &data, &Transform::ShuffleTokens, &[fixed_prior()], &params, &seeds)
        .unwrap();
    for (ra, rb) in a.seed_runs.iter().zip(&b.seed_runs) {
        assert_eq!(ra.permutation_id, rb.permutation_id);
    }
}

#[test]
fn runs_are_deterministic() {
    let data = two_class_dataset(150);
    let params = ScheduleParams::default();
    let roster = [fixed_prior(), fixed_nb()];
    let seeds = [0u64, 1];
    let a = run_condition("c", &data, &Transform::Identity, &roster, &params, &seeds).unwrap();
    let b = run_condition("c", &data, &Transform::Identity, &roster, &params, &seeds).unwrap();
    assert_eq!(a.seed_runs, b.seed_runs);
    assert_eq!(a.mdl_mean, b.mdl_mean);
}

#[test]
fn configuration_errors() {
    let data = two_class_dataset(150);
    let params = ScheduleParams::default();
    let err = run_condition("c", &data, &Transform::Identity, &[], &params, &[0]).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
    let err = run_condition(
        "c",
        &data,
        &Transform::Identity,
        &[fixed_prior(), fixed_prior()],
        &params,
        &[0],
    )
    .unwrap_err();
    assert!(matches!(err, Error::Config(_)), "duplicate learner names");
    let err =
        run_condition("c", &data, &Transform::Identity, &[fixed_prior()], &params, &[0, 0])
            .unwrap_err();
    assert!(matches!(err, Error::Config(_)), "duplicate seeds");
    let err = run_condition("c", &data, &Transform::Identity, &[fixed_prior()], &params, &[])
        .unwrap_err();
    assert!(matches!(err, Error::Config(_)), "no seeds");
}

#[test]
fn single_seed_has_no_stderr() {
    let data = two_class_dataset(130);
    let r = run_condition(
        "c",
        &data,
        &Transform::Identity,
        &[fixed_prior()],
        &ScheduleParams::default(),
        &[0],
    )
    .unwrap();
    assert!(r.mdl_stderr.is_none());
}

fn synthetic_result(name: &str, totals: &[f64]) -> ConditionResult {
    let seed_runs: Vec<SeedRun> = totals
        .iter()
        .enumerate()
        .map(|(i, &t)| SeedRun {
            seed: i as u64,
            permutation_id: i as u64,
            blocks: Vec::new(),
            ensemble_overhead_bits: 0.0,
            total_bits: t,
        })
        .collect();
    let mdl_mean = totals.iter().sum::<f64>() / totals.len() as f64;
    let mdl_stderr = sample_stderr(totals);
    ConditionResult {
        name: name.into(),
        schedule: BlockSchedule::unit(1),
        seed_runs,
        mdl_mean,
        mdl_stderr,
        block_bits_mean: Vec::new(),
        fit_records: Vec::new(),
    }
}

#[test]
fn paired_delta_hand_example() {
    let a = synthetic_result("a", &[100.0, 102.0, 98.0, 101.0, 99.0]);
    let b = synthetic_result("b", &[90.0, 93.0, 88.0, 91.0, 90.0]);
    let d = compare_conditions(&a, &b).unwrap();
    assert!((d.delta_mean - 9.6).abs() < 1e-12);
    assert_eq!(d.per_seed_deltas, vec![10.0, 9.0, 10.0, 10.0, 9.0]);
    let se = d.delta_stderr.unwrap();
    assert!((se - 0.2449).abs() < 1e-3, "stderr {se}");
    // `a` costs more bits, so it is not helpful relative to `b` ...
    assert_eq!(d.verdict, Verdict::Inconclusive);
    // ... while the reverse comparison is decisively helpful.
    let rev = compare_conditions(&b, &a).unwrap();
    assert!((rev.delta_mean + 9.6).abs() < 1e-12);
    assert_eq!(rev.verdict, Verdict::Helpful);
}

#[test]
fn self_comparison_is_zero_and_inconclusive() {
    let a = synthetic_result("a", &[100.0, 102.0, 98.0]);
    let d = compare_conditions(&a, &a).unwrap();
    assert_eq!(d.delta_mean, 0.0);
    assert!(d.per_seed_deltas.iter().all(|&x| x == 0.0));
    assert_eq!(d.verdict, Verdict::Inconclusive);
}

#[test]
fn unpaired_runs_are_incomparable() {
    let a = synthetic_result("a", &[100.0, 102.0]);
    let b = synthetic_result("b", &[90.0, 93.0, 88.0]);
    assert!(matches!(compare_conditions(&a, &b), Err(Error::Incomparable(_))));
    let mut c = synthetic_result("c", &[90.0, 93.0]);
    c.seed_runs[1].permutation_id = 999;
    assert!(matches!(compare_conditions(&a, &c), Err(Error::Incomparable(_))));
}
