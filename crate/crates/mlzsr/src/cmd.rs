//! Command implementations behind the `mlzsr` binary.

use std::path::{Path, PathBuf};

use mlzsr_core::baselines::{
    conse_predict, costa_predict, dsp_predict, feature_scores, randomize_label_reps, train_conse, train_costa,
    train_dsp,
};
use mlzsr_core::data::{generate_synthetic, make_ifs_split, make_lfs_split, sample_unseen, Dataset, SplitSpec};
use mlzsr_core::eval::{evaluate, rgs_baseline, EvalReport, Scenario, ScenarioKind};
use mlzsr_core::gradcheck::run_gradchecks;
use mlzsr_core::scoring::{fuse_score_matrices, ScoreMatrix};
use mlzsr_core::train::{alternate_train, predict_scores};

use crate::cli::{BaselineName, Cli, Command};
use crate::config::{Config, ModeName, Variant};
use crate::error::{AppError, AppResult};
use crate::formats::checkpoint::{LabelSource, ModelFile};
use crate::formats::linear::BaselineModel;
use crate::formats::log::log_record;
use crate::formats::scores::ScoreDump;
use crate::io::{
    load_baseline, load_checkpoint, load_dataset, load_scores, load_split, save_baseline, save_checkpoint,
    save_checkpoint_text, save_dataset, save_log, save_report, save_scores, save_split, write_atomic,
};
use crate::manifest::RunManifest;

struct Printer {
    quiet: bool,
}

impl Printer {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }
}

fn require_out(out: &Option<PathBuf>) -> AppResult<&Path> {
    out.as_deref()
        .ok_or_else(|| AppError::config("`--out` is required for this command"))
}

fn with_extension(path: &Path, ext: &str) -> PathBuf {
    path.with_extension(ext)
}

pub fn test_truths(ds: &Dataset, split: &SplitSpec) -> Vec<Vec<usize>> {
    split.test.iter().map(|&i| ds.instances[i].labels.clone()).collect()
}

fn all_labels(ds: &Dataset) -> Vec<usize> {
    (0..ds.num_labels()).collect()
}

fn reports_for(
    scores: &ScoreMatrix,
    truths: &[Vec<usize>],
    known: &[usize],
    unseen: &[usize],
    kinds: &[ScenarioKind],
    k: usize,
) -> AppResult<Vec<EvalReport>> {
    kinds
        .iter()
        .map(|&kind| {
            evaluate(scores, truths, &Scenario::new(kind, known.to_vec(), unseen.to_vec()), k).map_err(AppError::from)
        })
        .collect()
}

fn print_reports(p: &Printer, reports: &[EvalReport]) {
    for r in reports {
        let v = r.values;
        p.say(format!(
            "{:<7} i_map {:.4}  l_map {:.4}  p@{k} {:.4}  r@{k} {:.4}  f1@{k} {:.4}",
            r.scenario.as_str(),
            v.i_map,
            v.l_map,
            v.precision,
            v.recall,
            v.f1,
            k = r.k
        ));
    }
}

/// Label table a checkpoint was trained against.
fn label_table(ds: &Dataset, labels: LabelSource) -> AppResult<Dataset> {
    Ok(match labels {
        LabelSource::Dataset => ds.clone(),
        LabelSource::Random { seed } => {
            ds.with_semantics(randomize_label_reps(ds.num_labels(), ds.semantic_dim(), seed)?)?
        }
    })
}

pub fn run(cli: &Cli, args: Vec<String>) -> AppResult<()> {
    let mut cfg = Config::load(cli.config.as_deref())?;
    let p = Printer { quiet: cli.quiet };
    match &cli.command {
        Command::Generate => generate(cli, args, &mut cfg, &p),
        Command::Split { .. } => split(cli, args, &mut cfg, &p),
        Command::Train { .. } => train(cli, args, &mut cfg, &p),
        Command::Eval { .. } => eval(cli, args, &mut cfg, &p),
        Command::Fuse { .. } => fuse(cli, args, &mut cfg, &p),
        Command::Gradcheck { .. } => gradcheck(cli, args, &mut cfg, &p),
    }
}

fn generate(cli: &Cli, args: Vec<String>, cfg: &mut Config, p: &Printer) -> AppResult<()> {
    let out = require_out(&cli.out)?;
    let data = cfg
        .data
        .as_mut()
        .ok_or_else(|| AppError::config("missing table `data` (generate needs a config file with a [data] table)"))?;
    if let Some(s) = cli.seed {
        data.seed = s;
    }
    let ds = generate_synthetic(&data.to_synthetic())?;
    save_dataset(&ds, out)?;

    let mut m = RunManifest::new("generate", args, cfg);
    m.seed("data", cfg.data()?.seed);
    m.output("dataset", out)?;
    m.write_beside(out)?;
    p.say(format!(
        "wrote {} instances, {} labels to {}",
        ds.len(),
        ds.num_labels(),
        out.display()
    ));
    Ok(())
}

fn split(cli: &Cli, args: Vec<String>, cfg: &mut Config, p: &Printer) -> AppResult<()> {
    let Command::Split {
        data,
        mode,
        unseen,
        unseen_count,
        val_count,
        fractions,
    } = &cli.command
    else {
        unreachable!("dispatched on the subcommand")
    };
    let out = require_out(&cli.out)?;
    let s = &mut cfg.split;
    if let Some(m) = mode {
        s.mode = *m;
    }
    if let Some(u) = unseen {
        let mut u = u.clone();
        u.sort_unstable();
        s.unseen = Some(u);
    }
    if let Some(n) = unseen_count {
        s.unseen = None;
        s.unseen_count = *n;
    }
    if let Some(v) = val_count {
        s.val_count = *v;
    }
    if let Some(f) = fractions {
        s.fractions = f
            .as_slice()
            .try_into()
            .map_err(|_| AppError::config(format!("`--fractions` needs 3 values, got {}", f.len())))?;
    }
    if let Some(seed) = cli.seed {
        s.seed = seed;
    }

    let ds = load_dataset(data)?;
    let unseen = match &s.unseen {
        Some(u) => u.clone(),
        None => sample_unseen(ds.num_labels(), s.unseen_count, s.seed)?,
    };
    let spec = match s.mode {
        ModeName::Ifs => make_ifs_split(&ds, &unseen, s.fractions, s.seed)?,
        ModeName::Lfs => make_lfs_split(&ds, &unseen, s.val_count, s.seed)?,
    };
    save_split(&spec, out)?;

    let mut m = RunManifest::new("split", args, cfg);
    m.seed("split", cfg.split.seed);
    m.input("dataset", data)?;
    m.output("split", out)?;
    m.write_beside(out)?;
    p.say(format!(
        "{} train / {} val / {} test instances, {} known / {} unseen labels",
        spec.train.len(),
        spec.val.len(),
        spec.test.len(),
        spec.known.len(),
        spec.unseen.len()
    ));
    Ok(())
}

fn train(cli: &Cli, args: Vec<String>, cfg: &mut Config, p: &Printer) -> AppResult<()> {
    let Command::Train {
        data,
        split,
        variant,
        loss,
        margin,
        max_rounds,
        patience,
        log,
        dump,
    } = &cli.command
    else {
        unreachable!("dispatched on the subcommand")
    };
    let out = require_out(&cli.out)?;
    let t = &mut cfg.train;
    if let Some(v) = variant {
        t.variant = *v;
    }
    if let Some(l) = loss {
        t.loss = *l;
    }
    if let Some(m) = margin {
        t.margin = *m;
    }
    if let Some(r) = max_rounds {
        t.max_rounds = *r;
    }
    if let Some(n) = patience {
        t.patience = *n;
    }
    if let Some(s) = cli.seed {
        t.seed = s;
    }
    let tc = t.to_train_config()?;
    let labels = match t.variant {
        Variant::Rlr => LabelSource::Random {
            seed: t.random_label_seed,
        },
        _ => LabelSource::Dataset,
    };

    let ds = load_dataset(data)?;
    let spec = load_split(split, &ds)?;
    let train_ds = label_table(&ds, labels)?;
    let outcome = alternate_train(&train_ds, &spec, &tc)?;
    for r in &outcome.log {
        p.say(log_record(r));
    }
    let model = ModelFile {
        checkpoint: outcome.checkpoint,
        pooling: tc.pooling,
        labels,
    };
    save_checkpoint(&model, out)?;
    let log_path = log.clone().unwrap_or_else(|| with_extension(out, "log"));
    save_log(&outcome.log, &log_path)?;
    if let Some(d) = dump {
        save_checkpoint_text(&model, d)?;
    }

    let mut m = RunManifest::new("train", args, cfg);
    m.seed("train", cfg.train.seed);
    if let LabelSource::Random { seed } = labels {
        m.seed("random_labels", seed);
    }
    m.input("dataset", data)?;
    m.input("split", split)?;
    m.output("checkpoint", out)?;
    m.output("log", &log_path)?;
    if let Some(d) = dump {
        m.output("checkpoint_text", d)?;
    }
    m.write_beside(out)?;
    p.say(format!(
        "best round {} with validation I-MAP {:.4}; checkpoint at {}",
        model.checkpoint.round,
        model.checkpoint.best_val_imap,
        out.display()
    ));
    Ok(())
}

fn eval(cli: &Cli, args: Vec<String>, cfg: &mut Config, p: &Printer) -> AppResult<()> {
    let Command::Eval {
        data,
        split,
        checkpoint,
        baseline,
        baseline_model,
        save_model,
        scenario,
        k,
        scores,
    } = &cli.command
    else {
        unreachable!("dispatched on the subcommand")
    };
    let out = require_out(&cli.out)?;
    let e = &mut cfg.eval;
    if let Some(s) = scenario {
        e.scenario = *s;
    }
    if let Some(k) = k {
        e.k = *k;
    }
    if let Some(s) = cli.seed {
        e.seed = s;
    }
    if e.conse_top == 0 {
        return Err(AppError::config("`conse_top` must be at least 1"));
    }
    if *baseline == Some(BaselineName::Rgs) && (scores.is_some() || save_model.is_some()) {
        return Err(AppError::config(
            "the random baseline produces no scores or model to save",
        ));
    }
    if *baseline == Some(BaselineName::Rgs) && e.rgs_trials == 0 {
        return Err(AppError::config("`rgs_trials` must be at least 1"));
    }
    let e = e.clone();
    let kinds = e.scenario.kinds();

    let ds = load_dataset(data)?;
    let spec = load_split(split, &ds)?;
    let truths = test_truths(&ds, &spec);
    let labels = all_labels(&ds);
    let mut m = RunManifest::new("eval", args, cfg);
    m.input("dataset", data)?;
    m.input("split", split)?;

    let score_matrix = if let Some(ck) = checkpoint {
        let model = load_checkpoint(ck)?;
        m.input("checkpoint", ck)?;
        let eval_ds = label_table(&ds, model.labels)?;
        Some(predict_scores(
            &model.checkpoint.visual,
            &model.checkpoint.semantic,
            &eval_ds,
            &spec.test,
            &labels,
            model.pooling,
        )?)
    } else if *baseline == Some(BaselineName::Rgs) {
        m.seed("rgs", e.seed);
        None
    } else {
        let fitted = match (baseline, baseline_model) {
            (_, Some(path)) => {
                m.input("baseline_model", path)?;
                load_baseline(path)?
            }
            (Some(BaselineName::Dsp), None) => BaselineModel::Dsp(train_dsp(&ds, &spec, e.linear())?),
            (Some(BaselineName::Conse), None) => {
                let mut c = train_conse(&ds, &spec, e.conse_norm(), e.linear())?;
                c.top = e.conse_top;
                BaselineModel::Conse(c)
            }
            (Some(BaselineName::Costa), None) => BaselineModel::Costa(train_costa(&ds, &spec, e.linear())?),
            _ => {
                return Err(AppError::config(
                    "eval needs --checkpoint, --baseline or --baseline-model",
                ))
            }
        };
        if let Some(path) = save_model {
            save_baseline(&fitted, path)?;
            m.output("baseline_model", path)?;
        }
        let table = &ds.semantics;
        Some(match &fitted {
            BaselineModel::Dsp(d) => feature_scores(&ds, &spec.test, &labels, |x| dsp_predict(d, x, table, &labels))?,
            BaselineModel::Conse(c) => {
                feature_scores(&ds, &spec.test, &labels, |x| conse_predict(c, x, table, &labels))?
            }
            BaselineModel::Costa(c) => feature_scores(&ds, &spec.test, &labels, |x| costa_predict(c, x, &labels))?,
        })
    };

    let reports = match &score_matrix {
        Some(s) => reports_for(s, &truths, &spec.known, &spec.unseen, &kinds, e.k)?,
        None => kinds
            .iter()
            .map(|&kind| {
                rgs_baseline(
                    &spec.test,
                    &labels,
                    &truths,
                    &Scenario::from_split(kind, &spec),
                    e.k,
                    e.rgs_trials,
                    e.seed,
                )
            })
            .collect::<Result<Vec<_>, _>>()?,
    };
    save_report(&reports, out)?;
    m.output("report", out)?;
    if let (Some(path), Some(s)) = (scores, score_matrix) {
        save_scores(
            &ScoreDump {
                scores: s,
                truths,
                known: spec.known.clone(),
                unseen: spec.unseen.clone(),
            },
            path,
        )?;
        m.output("scores", path)?;
    }
    m.write_beside(out)?;
    print_reports(p, &reports);
    Ok(())
}

fn fuse(cli: &Cli, args: Vec<String>, cfg: &mut Config, p: &Printer) -> AppResult<()> {
    let Command::Fuse {
        scores,
        report,
        scenario,
        k,
    } = &cli.command
    else {
        unreachable!("dispatched on the subcommand")
    };
    let out = require_out(&cli.out)?;
    if let Some(s) = scenario {
        cfg.eval.scenario = *s;
    }
    if let Some(k) = k {
        cfg.eval.k = *k;
    }
    let a = load_scores(&scores[0])?;
    let b = load_scores(&scores[1])?;
    if a.known != b.known || a.unseen != b.unseen || a.truths != b.truths {
        return Err(mlzsr_core::Error::Data("score dumps describe different label partitions or truths".into()).into());
    }
    let fused = ScoreDump {
        scores: fuse_score_matrices(&a.scores, &b.scores)?,
        truths: a.truths,
        known: a.known,
        unseen: a.unseen,
    };
    let reports = reports_for(
        &fused.scores,
        &fused.truths,
        &fused.known,
        &fused.unseen,
        &cfg.eval.scenario.kinds(),
        cfg.eval.k,
    )?;
    save_scores(&fused, out)?;
    let report_path = report.clone().unwrap_or_else(|| with_extension(out, "report"));
    save_report(&reports, &report_path)?;

    let mut m = RunManifest::new("fuse", args, cfg);
    m.input("scores", &scores[0])?;
    m.input("scores", &scores[1])?;
    m.output("scores", out)?;
    m.output("report", &report_path)?;
    m.write_beside(out)?;
    print_reports(p, &reports);
    Ok(())
}

fn gradcheck(cli: &Cli, args: Vec<String>, cfg: &mut Config, p: &Printer) -> AppResult<()> {
    let Command::Gradcheck { cases, tolerance } = &cli.command else {
        unreachable!("dispatched on the subcommand")
    };
    let g = &mut cfg.gradcheck;
    if let Some(c) = cases {
        g.cases = *c;
    }
    if let Some(t) = tolerance {
        g.tolerance = Some(*t);
    }
    if let Some(s) = cli.seed {
        g.seed = s;
    }
    if g.cases == 0 {
        return Err(AppError::config("`cases` must be at least 1"));
    }
    if let Some(t) = g.tolerance {
        if !(t > 0.0) {
            return Err(AppError::config(format!("tolerance must be positive, got {t}")));
        }
    }
    let g = g.clone();
    let mut checks = run_gradchecks(g.seed, g.cases)?;
    if let Some(t) = g.tolerance {
        for c in &mut checks {
            c.tolerance = t;
        }
    }
    let mut summary = String::from("# family cases max_relative_error tolerance result\n");
    for c in &checks {
        summary.push_str(&format!(
            "{} {} {:e} {:e} {}\n",
            c.name,
            c.cases,
            c.max_relative_error,
            c.tolerance,
            if c.passed() { "PASS" } else { "FAIL" }
        ));
    }
    p.say(summary.trim_end());
    if let Some(out) = &cli.out {
        write_atomic(out, summary.as_bytes())?;
        let mut m = RunManifest::new("gradcheck", args, cfg);
        m.seed("gradcheck", g.seed);
        m.output("summary", out)?;
        m.write_beside(out)?;
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed()).map(|c| c.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(AppError::Check(format!("gradients disagree for {}", failed.join(", "))))
    }
}
