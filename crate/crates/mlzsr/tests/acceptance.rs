//! Acceptance suite. Every check prints one `PASS` or `FAIL` line; the
//! process exits non-zero when any check fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use mlzsr::experiment::{run_benchmark, test_truths, BenchmarkConfig, BenchmarkResult};
use mlzsr::formats::checkpoint::{encode_checkpoint, LabelSource, ModelFile};
use mlzsr::formats::report::write_report;
use mlzsr::formats::scores::{write_scores, ScoreDump};
use mlzsr_core::baselines::costa_beta;
use mlzsr_core::data::{
    generate_synthetic, make_ifs_split, make_lfs_split, sample_unseen, Dataset, SplitMode, SplitSpec, SyntheticConfig,
};
use mlzsr_core::eval::{evaluate, rgs_baseline, EvalReport, Scenario, ScenarioKind};
use mlzsr_core::gradcheck::run_gradchecks;
use mlzsr_core::model::{Parameters, SemanticEncoder};
use mlzsr_core::numerics::{Adam, Matrix, RngState};
use mlzsr_core::scoring::{pool_average, pool_lagm, pool_max, Pooling, ScoreMatrix, SegmentScores};
use mlzsr_core::train::{
    embed_instances, init_models, mean_semantic_loss, mean_visual_loss, train_epoch_semantic, train_epoch_visual,
};

const SEEDS: [u64; 3] = [1, 2, 3];

struct Verdict {
    name: &'static str,
    ok: bool,
    detail: String,
}

fn verdict(name: &'static str, ok: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        name,
        ok,
        detail: detail.into(),
    }
}

struct Benchmarks {
    runs: Vec<BenchmarkResult>,
    rerun: BenchmarkResult,
    elapsed: Duration,
}

fn timed_benchmark(seed: u64) -> (BenchmarkResult, Duration) {
    let start = Instant::now();
    let run = run_benchmark(&BenchmarkConfig::desk(seed)).expect("benchmark runs");
    (run, start.elapsed())
}

fn rgs_bar(run: &BenchmarkResult, kind: ScenarioKind) -> f64 {
    let summary = run.method("rgs").report(kind).summary.expect("rgs carries a summary");
    summary.mean.i_map + 3.0 * summary.sem.i_map
}

fn gradients_match_finite_differences() -> Verdict {
    let start = Instant::now();
    let checks = run_gradchecks(7, 100).unwrap();
    let elapsed = start.elapsed();
    let worst = checks.iter().map(|c| c.max_relative_error).fold(0.0, f64::max);
    let failing: Vec<&str> = checks
        .iter()
        .filter(|c| c.cases < 100 || c.max_relative_error > 1e-4)
        .map(|c| c.name)
        .collect();
    verdict(
        "gradient check",
        failing.is_empty() && elapsed < Duration::from_secs(120),
        format!(
            "{} families x 100 cases, worst relative error {worst:.2e}, {:.1}s, failing {failing:?}",
            checks.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn rank_of(row: &[f64], j: usize) -> usize {
    1 + row.iter().filter(|&&v| v > row[j]).count()
}

fn oracle_ap(positions: &[usize]) -> f64 {
    let total: f64 = positions
        .iter()
        .map(|&r| positions.iter().filter(|&&q| q <= r).count() as f64 / r as f64)
        .sum();
    total / positions.len() as f64
}

struct OracleValues {
    i_map: Option<f64>,
    l_map: Option<f64>,
    prf: Option<[f64; 3]>,
}

fn oracle(scores: &[Vec<f64>], truths: &[Vec<usize>], k: usize) -> OracleValues {
    let labels = scores[0].len();
    let k = k.min(labels);
    let aps: Vec<f64> = scores
        .iter()
        .zip(truths)
        .filter(|(_, t)| !t.is_empty())
        .map(|(row, t)| oracle_ap(&t.iter().map(|&c| rank_of(row, c)).collect::<Vec<_>>()))
        .collect();
    let mut label_aps = Vec::new();
    for c in 0..labels {
        let column: Vec<f64> = scores.iter().map(|r| r[c]).collect();
        let positions: Vec<usize> = (0..scores.len())
            .filter(|&i| truths[i].contains(&c))
            .map(|i| rank_of(&column, i))
            .collect();
        if !positions.is_empty() {
            label_aps.push(oracle_ap(&positions));
        }
    }
    let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    let mut hits = 0usize;
    let mut relevant = 0usize;
    let mut counted = 0usize;
    for (row, t) in scores.iter().zip(truths) {
        if t.is_empty() {
            continue;
        }
        hits += t.iter().filter(|&&c| rank_of(row, c) <= k).count();
        relevant += t.len();
        counted += 1;
    }
    let prf = (counted > 0).then(|| {
        let p = hits as f64 / (k * counted) as f64;
        let r = hits as f64 / relevant as f64;
        let f = if hits == 0 { 0.0 } else { 2.0 * p * r / (p + r) };
        [p, r, f]
    });
    OracleValues {
        i_map: mean(&aps),
        l_map: mean(&label_aps),
        prf,
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn compare_metrics(scores: &[Vec<f64>], truths: &[Vec<usize>], worst: &mut f64, mismatches: &mut usize) {
    let n = scores.len();
    let labels = scores[0].len();
    let flat: Vec<f64> = scores.iter().flatten().copied().collect();
    let sm = ScoreMatrix::new(
        (0..n).collect(),
        (0..labels).collect(),
        Matrix::new(n, labels, flat).unwrap(),
    )
    .unwrap();
    let scenario = Scenario::new(ScenarioKind::Gzsl, (0..labels).collect(), vec![]);
    for k in 1..=labels + 1 {
        let want = oracle(scores, truths, k);
        match (evaluate(&sm, truths, &scenario, k), want.i_map, want.l_map, want.prf) {
            (Ok(r), Some(i), Some(l), Some(prf)) => {
                let v = r.values;
                for (a, b) in [
                    (v.i_map, i),
                    (v.l_map, l),
                    (v.precision, prf[0]),
                    (v.recall, prf[1]),
                    (v.f1, prf[2]),
                ] {
                    *worst = worst.max((a - b).abs());
                }
            }
            (Err(_), None, None, None) => {}
            _ => *mismatches += 1,
        }
    }
}

fn metrics_match_brute_force_oracle() -> Verdict {
    let mut rng = RngState::new(11);
    let mut worst: f64 = 0.0;
    let mut mismatches = 0usize;
    let mut fixtures = 0usize;
    for labels in 1..=5 {
        let perms = permutations(labels);
        for n in 1..=4 {
            let combos = perms.len().pow(n as u32);
            let exhaustive = combos <= 20_000;
            let count = if exhaustive { combos } else { 20_000 };
            for idx in 0..count {
                let mut code = idx;
                let scores: Vec<Vec<f64>> = (0..n)
                    .map(|_| {
                        let p = if exhaustive {
                            let p = &perms[code % perms.len()];
                            code /= perms.len();
                            p
                        } else {
                            &perms[rng.below(perms.len())]
                        };
                        p.iter().map(|&r| r as f64 + 0.5 * rng.uniform(0.0, 0.5)).collect()
                    })
                    .collect();
                let truths: Vec<Vec<usize>> = (0..n)
                    .map(|_| (0..labels).filter(|_| rng.bernoulli(0.4)).collect())
                    .collect();
                compare_metrics(&scores, &truths, &mut worst, &mut mismatches);
                fixtures += 1;
            }
        }
    }
    verdict(
        "metric oracle",
        mismatches == 0 && worst <= 1e-12,
        format!("{fixtures} fixtures, max deviation {worst:.1e}, {mismatches} definedness mismatches"),
    )
}

fn random_guessing_matches_expectation() -> Verdict {
    let instances: Vec<usize> = (0..20).collect();
    let truths: Vec<Vec<usize>> = instances.iter().map(|i| vec![i % 3]).collect();
    let scenario = Scenario::new(ScenarioKind::Gzsl, vec![0, 1, 2], vec![]);
    let r = rgs_baseline(&instances, &[0, 1, 2], &truths, &scenario, 5, 10_000, 3).unwrap();
    let expected = (1.0 + 1.0 / 2.0 + 1.0 / 3.0) / 3.0;
    let mean = r.summary.unwrap().mean.i_map;
    verdict(
        "random guessing",
        (mean - 0.6111).abs() <= 0.01,
        format!("mean I-MAP {mean:.4} over 10^4 trials, exact expectation {expected:.4}"),
    )
}

fn pooling_identities_hold() -> Verdict {
    let mut rng = RngState::new(5);
    let mut bitwise = true;
    let mut worst_violation: f64 = 0.0;
    for _ in 0..1000 {
        let t = rng.between(1, 12);
        let labels = rng.between(1, 6);
        let mut m = Matrix::zeros(t, labels);
        for v in m.as_mut_slice() {
            *v = rng.uniform(-3.0, 3.0);
        }
        let s = SegmentScores(m);
        let avg = pool_average(&s).unwrap();
        let max = pool_max(&s).unwrap();
        bitwise &= pool_lagm(&s, 1)
            .unwrap()
            .iter()
            .zip(&avg)
            .all(|(a, b)| a.to_bits() == b.to_bits());
        let divisors: Vec<usize> = (1..=t).filter(|&g| t.is_multiple_of(g)).collect();
        let groups = divisors[rng.below(divisors.len())];
        assert!(Pooling::LocalAverageGlobalMax { groups }.validate(t).is_ok());
        let lagm = pool_lagm(&s, groups).unwrap();
        for c in 0..labels {
            worst_violation = worst_violation.max(lagm[c] - max[c]).max(avg[c] - lagm[c]);
        }
    }
    verdict(
        "pooling identities",
        bitwise && worst_violation <= 1e-12,
        format!(
            "1000 matrices, single-group LAGM bitwise average: {bitwise}, worst order violation {worst_violation:.1e}"
        ),
    )
}

fn random_config(rng: &mut RngState) -> SyntheticConfig {
    let num_clusters = rng.between(1, 4);
    let per_cluster = rng.between(3, 6);
    let hi = rng.between(2, 3);
    SyntheticConfig {
        num_labels: num_clusters * per_cluster + rng.below(num_clusters),
        num_clusters,
        num_instances: rng.between(20, 80),
        segments: rng.between(4, 7),
        min_segments: 4,
        feature_dim: rng.between(2, 6),
        semantic_dim: rng.between(2, 5),
        labels_per_instance: (2, hi),
        episodes_per_instance: (2, 4),
        second_cluster_prob: rng.uniform(0.0, 1.0),
        seed: rng.next_u64(),
        ..SyntheticConfig::default()
    }
}

fn split_violations(ds: &Dataset, s: &SplitSpec, unseen: &[usize]) -> Vec<String> {
    let mut bad = Vec::new();
    let mut roles = vec![0usize; ds.len()];
    for ids in [&s.train, &s.val, &s.test] {
        for &i in ids {
            roles[i] += 1;
        }
    }
    if roles.iter().any(|&r| r != 1) {
        bad.push("instances not partitioned".to_string());
    }
    let mut want_unseen = unseen.to_vec();
    want_unseen.sort_unstable();
    if s.unseen != want_unseen {
        bad.push("unseen labels differ from the request".to_string());
    }
    let mut labels: Vec<usize> = s.known.iter().chain(&s.unseen).copied().collect();
    labels.sort_unstable();
    if labels != (0..ds.num_labels()).collect::<Vec<_>>() {
        bad.push("labels not partitioned".to_string());
    }
    let has_unseen = |i: usize| ds.instances[i].labels.iter().any(|l| s.unseen.contains(l));
    for &i in s.train.iter().chain(&s.val) {
        if s.known_targets(ds, i).iter().any(|l| s.unseen.contains(l)) {
            bad.push(format!("unseen label in the targets of {i}"));
        }
        if s.mode == SplitMode::Lfs && has_unseen(i) {
            bad.push(format!("instance {i} with an unseen label outside test"));
        }
    }
    if s.mode == SplitMode::Lfs {
        if s.test.iter().any(|&i| !has_unseen(i)) {
            bad.push("test instance without unseen label".to_string());
        }
        if s.val.len() != s.val_count.unwrap() {
            bad.push("validation size".to_string());
        }
    }
    bad
}

fn split_invariants_hold_on_random_datasets() -> Verdict {
    let mut rng = RngState::new(21);
    let mut checked = 0usize;
    let mut violations = Vec::new();
    while checked < 200 {
        let cfg = random_config(&mut rng);
        let ds = generate_synthetic(&cfg).unwrap();
        let unseen = sample_unseen(ds.num_labels(), rng.between(1, 2), rng.next_u64()).unwrap();
        let free = (0..ds.len())
            .filter(|&i| !ds.instances[i].labels.iter().any(|l| unseen.contains(l)))
            .count();
        if free < 2 {
            continue;
        }
        let ifs = make_ifs_split(&ds, &unseen, [0.6, 0.2, 0.2], rng.next_u64()).unwrap();
        let lfs = make_lfs_split(&ds, &unseen, rng.below(free), rng.next_u64()).unwrap();
        for s in [&ifs, &lfs] {
            violations.extend(split_violations(&ds, s, &unseen));
            if let Err(e) = s.check(&ds) {
                violations.push(e.to_string());
            }
        }
        checked += 1;
    }
    verdict(
        "split invariants",
        violations.is_empty(),
        format!("{checked} datasets, IFS and LFS, violations {violations:?}"),
    )
}

fn first_epochs_reduce_training_loss() -> Verdict {
    let cfg = BenchmarkConfig::desk(1);
    let ds = generate_synthetic(&cfg.data).unwrap();
    let split = mlzsr::experiment::benchmark_split(&ds, &cfg).unwrap();
    let tc = cfg.train.clone();
    let (mut visual, semantic) = init_models(&ds, &tc).unwrap();
    let SemanticEncoder::Network(mut sm) = semantic.clone() else {
        panic!("the full model learns its label encoder")
    };
    let es = semantic.embed_labels(&ds.semantics, &split.known).unwrap();
    let mut rng = RngState::new(tc.seed);
    let before = mean_visual_loss(&visual, &semantic, &ds, &split, &tc).unwrap();
    let mut opt = Adam::new(visual.params(), tc.lr_visual);
    train_epoch_visual(&mut visual, &mut opt, &es, &ds, &split, &tc, &mut rng).unwrap();
    let after = mean_visual_loss(&visual, &semantic, &ds, &split, &tc).unwrap();

    let sem_before = mean_semantic_loss(&visual, &SemanticEncoder::Network(sm.clone()), &ds, &split, &tc).unwrap();
    let frozen = embed_instances(&visual, &ds, &split.train).unwrap();
    let mut opt = Adam::new(sm.params(), tc.lr_semantic);
    train_epoch_semantic(&mut sm, &mut opt, &frozen, &ds, &split, &tc, &mut rng).unwrap();
    let sem_after = mean_semantic_loss(&visual, &SemanticEncoder::Network(sm), &ds, &split, &tc).unwrap();
    verdict(
        "epoch loss decrease",
        after < before && sem_after < sem_before,
        format!("visual {before:.4} -> {after:.4}, semantic {sem_before:.4} -> {sem_after:.4}"),
    )
}

fn benchmark_beats_random_guessing(b: &Benchmarks) -> Verdict {
    let mut ok = b.elapsed <= Duration::from_secs(600);
    let mut lines = Vec::new();
    for (seed, run) in SEEDS.iter().zip(&b.runs) {
        for model in ["ranknet", "hinge"] {
            for kind in [ScenarioKind::Gzsl, ScenarioKind::UnseenOnly] {
                let (v, bar) = (run.i_map(model, kind), rgs_bar(run, kind));
                ok &= v > bar;
                lines.push(format!("seed {seed} {model} {kind} {v:.4} vs {bar:.4}"));
            }
            let outcome = run.method(model).outcome.as_ref().unwrap();
            let val_truths: Vec<Vec<usize>> = run
                .split
                .val
                .iter()
                .map(|&i| run.dataset.instances[i].labels.clone())
                .collect();
            let val_rgs = rgs_baseline(
                &run.split.val,
                &run.split.known,
                &val_truths,
                &Scenario::from_split(ScenarioKind::KnownOnly, &run.split),
                5,
                100,
                *seed,
            )
            .unwrap()
            .summary
            .unwrap();
            let bar = val_rgs.mean.i_map + 3.0 * val_rgs.sem.i_map;
            ok &= outcome.checkpoint.best_val_imap > bar;
            lines.push(format!(
                "seed {seed} {model} validation {:.4} vs {bar:.4}",
                outcome.checkpoint.best_val_imap
            ));
        }
    }
    verdict(
        "end-to-end above random",
        ok,
        format!("{:.0}s for 3 seeds; {}", b.elapsed.as_secs_f64(), lines.join("; ")),
    )
}

fn benchmark_needs_label_semantics(b: &Benchmarks) -> Verdict {
    let mut ok = true;
    let mut lines = Vec::new();
    for (seed, run) in SEEDS.iter().zip(&b.runs) {
        let rlr = run.i_map("rlr", ScenarioKind::UnseenOnly);
        for model in ["ranknet", "hinge"] {
            let v = run.i_map(model, ScenarioKind::UnseenOnly);
            ok &= v > rlr;
            lines.push(format!("seed {seed} {model} {v:.4} vs random labels {rlr:.4}"));
        }
    }
    verdict("unseen transfer beats random labels", ok, lines.join("; "))
}

fn benchmark_full_model_beats_ablations(b: &Benchmarks) -> Verdict {
    let mut wins = 0;
    let mut lines = Vec::new();
    for (seed, run) in SEEDS.iter().zip(&b.runs) {
        let full = run.i_map("ranknet", ScenarioKind::Gzsl);
        let nrc = run.i_map("nrc", ScenarioKind::Gzsl);
        let wse = run.i_map("wse", ScenarioKind::Gzsl);
        if full >= nrc && full >= wse {
            wins += 1;
        }
        lines.push(format!("seed {seed} full {full:.4} nrc {nrc:.4} wse {wse:.4}"));
    }
    verdict(
        "full model vs ablations",
        wins >= 2,
        format!("{wins}/3 seeds; {}", lines.join("; ")),
    )
}

fn fusion_is_no_worse_than_the_weaker_model(b: &Benchmarks) -> Verdict {
    let mut ok = true;
    let mut lines = Vec::new();
    for (seed, run) in SEEDS.iter().zip(&b.runs) {
        let fused = run.i_map("fusion", ScenarioKind::Gzsl);
        let floor = run
            .i_map("ranknet", ScenarioKind::Gzsl)
            .min(run.i_map("hinge", ScenarioKind::Gzsl));
        ok &= fused >= floor;
        lines.push(format!("seed {seed} fused {fused:.4} vs {floor:.4}"));
    }
    verdict("fusion", ok, lines.join("; "))
}

struct Artifacts {
    checkpoints: Vec<Vec<u8>>,
    scores: Vec<String>,
    reports: Vec<String>,
}

fn artifacts(run: &BenchmarkResult) -> Artifacts {
    let truths = test_truths(&run.dataset, &run.split);
    let mut out = Artifacts {
        checkpoints: Vec::new(),
        scores: Vec::new(),
        reports: Vec::new(),
    };
    for m in &run.methods {
        if let Some(o) = &m.outcome {
            out.checkpoints.push(encode_checkpoint(&ModelFile {
                checkpoint: o.checkpoint.clone(),
                pooling: Pooling::Average,
                labels: LabelSource::Dataset,
            }));
        }
        if let Some(s) = &m.scores {
            out.scores.push(write_scores(&ScoreDump {
                scores: s.clone(),
                truths: truths.clone(),
                known: run.split.known.clone(),
                unseen: run.split.unseen.clone(),
            }));
        }
        let reports: Vec<EvalReport> = m.reports.clone();
        out.reports.push(write_report(&reports));
    }
    out
}

fn benchmark_reruns_are_bitwise_identical(b: &Benchmarks) -> Verdict {
    let first = artifacts(&b.runs[0]);
    let again = artifacts(&b.rerun);
    let same_ckpt = first.checkpoints == again.checkpoints;
    let same_scores = first.scores == again.scores;
    let same_reports = first.reports == again.reports;
    verdict(
        "determinism",
        same_ckpt && same_scores && same_reports,
        format!(
            "{} checkpoints {same_ckpt}, {} score dumps {same_scores}, {} reports {same_reports}",
            first.checkpoints.len(),
            first.scores.len(),
            first.reports.len()
        ),
    )
}

fn comparative_baselines_beat_random_guessing(b: &Benchmarks) -> Verdict {
    let mut ok = true;
    let mut lines = Vec::new();
    let mut worst_row: f64 = 0.0;
    for (seed, run) in SEEDS.iter().zip(&b.runs) {
        let bar = rgs_bar(run, ScenarioKind::Gzsl);
        for name in ["dsp", "conse", "costa"] {
            let v = run.i_map(name, ScenarioKind::Gzsl);
            ok &= v > bar;
            lines.push(format!("seed {seed} {name} {v:.4} vs {bar:.4}"));
        }
        let labels: Vec<usize> = (0..run.dataset.num_labels()).collect();
        let beta = costa_beta(&run.dataset.semantics, &labels, &run.split.known).unwrap();
        for r in 0..beta.rows() {
            worst_row = worst_row.max((beta.row(r).iter().sum::<f64>() - 1.0).abs());
        }
    }
    ok &= worst_row <= 1e-12;
    verdict(
        "comparative baselines",
        ok,
        format!("beta row sums within {worst_row:.1e}; {}", lines.join("; ")),
    )
}

fn main() -> ExitCode {
    let mut verdicts = vec![
        gradients_match_finite_differences(),
        metrics_match_brute_force_oracle(),
        random_guessing_matches_expectation(),
        pooling_identities_hold(),
        split_invariants_hold_on_random_datasets(),
        first_epochs_reduce_training_loss(),
    ];
    let (runs, times): (Vec<_>, Vec<_>) = SEEDS.iter().map(|&s| timed_benchmark(s)).unzip();
    let benchmarks = Benchmarks {
        runs,
        rerun: timed_benchmark(SEEDS[0]).0,
        elapsed: times.into_iter().sum(),
    };
    let b = &benchmarks;
    verdicts.extend([
        benchmark_beats_random_guessing(b),
        benchmark_needs_label_semantics(b),
        benchmark_full_model_beats_ablations(b),
        fusion_is_no_worse_than_the_weaker_model(b),
        benchmark_reruns_are_bitwise_identical(b),
        comparative_baselines_beat_random_guessing(b),
    ]);
    let mut failed = 0;
    for v in &verdicts {
        println!("{} {}: {}", if v.ok { "PASS" } else { "FAIL" }, v.name, v.detail);
        failed += usize::from(!v.ok);
    }
    println!("acceptance: {} passed, {failed} failed", verdicts.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
