use std::path::Path;

use nirsc::augment::{balance_with_gan, balance_with_smote, gan::write_training_log, SmoteConfig, SmoteSpace};
use nirsc::eval::{
    confusion, evaluate_test, fit_pipeline, metrics, render_csv, render_markdown, render_text, run_cv, EvalReport,
    Metric, TableRow, TestEvaluation, TrainedPipeline,
};
use nirsc::explain::{explain_pipeline, importance_ranking, ranking_csv, ShapleyConfig};
use nirsc::features::{extract_features, FeatureMask, WindowSpec};
use nirsc::ingest::{make_folds, read_dataset, render_dataset, stratified_split, SplitSpec};
use nirsc::preprocess::{snv_dataset, SnvConfig};
use nirsc::synth::{generate, SynthSpec};
use nirsc::tune::{configure_pipeline, default_space, tune_pipeline, TrialRecord, TunerConfig};
use nirsc::{class_counts, Dataset, Error, Result, RngSeed};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::config::existing;
use crate::output::Outputs;
use crate::{
    AugmentArgs, BalanceMethod, ExperimentArgs, ExplainArgs, FeaturesArgs, NeighborSpace, PredictArgs, PreprocessArgs,
    ReportArgs, SplitArgs, SynthArgs, TrainArgs, TuneArgs,
};

fn load_dataset(path: Option<&Path>) -> Result<Dataset> {
    read_dataset(existing(path, "dataset")?)
}

fn write_dataset(out: &mut Outputs, path: &Path, d: &Dataset) -> Result<()> {
    let mut buf = Vec::new();
    render_dataset(d, &mut buf).map_err(|e| Error::io(path, e))?;
    out.write(path, buf)
}

fn to_json(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    s
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

fn counts_line(d: &Dataset) -> Result<String> {
    let c = class_counts(d)?;
    Ok(format!(
        "{} records ({} non-cancer, {} cancer)",
        d.len(),
        c.non_cancer,
        c.cancer
    ))
}

pub fn synth(a: &SynthArgs, out: &mut Outputs) -> Result<()> {
    let mut spec = match &a.spec {
        Some(p) => SynthSpec::load(existing(Some(p), "synth spec")?)?,
        None => SynthSpec::default(),
    };
    if let Some(s) = a.seed {
        spec.seed = RngSeed(s);
    }
    if let Some(s) = a.separation {
        spec.separation_scale = s;
    }
    if let Some(s) = a.noise_sigma {
        spec.noise_sigma = s;
    }
    let d = generate(&spec)?;
    write_dataset(out, &a.output, &d)?;
    if let Some(p) = &a.save_spec {
        out.write(p, spec.to_json())?;
    }
    println!("{}", counts_line(&d)?);
    Ok(())
}

pub fn split(a: &SplitArgs, out: &mut Outputs) -> Result<()> {
    let d = load_dataset(a.dataset.as_deref())?;
    let spec = SplitSpec {
        test_fraction: a.test_fraction,
        seed: RngSeed(a.seed),
        require_nonempty_strata: a.require_nonempty_strata,
    };
    let (train, test) = stratified_split(&d, &spec)?;
    out.dir(&a.output)?;
    write_dataset(out, &a.output.join("train.csv"), &train)?;
    write_dataset(out, &a.output.join("test.csv"), &test)?;
    if let Some(k) = a.folds {
        let plan = make_folds(&train, k, RngSeed(a.fold_seed))?;
        out.write(&a.output.join("folds.json"), plan.to_json())?;
    }
    println!("train {} / test {}", train.len(), test.len());
    Ok(())
}

pub fn preprocess(a: &PreprocessArgs, out: &mut Outputs) -> Result<()> {
    let d = load_dataset(a.dataset.as_deref())?;
    let s = snv_dataset(&d, &SnvConfig::default())?;
    write_dataset(out, &a.output, &s)?;
    println!("{}", counts_line(&s)?);
    Ok(())
}

pub fn features(a: &FeaturesArgs, out: &mut Outputs) -> Result<()> {
    let mut d = load_dataset(a.dataset.as_deref())?;
    if a.snv {
        d = snv_dataset(&d, &SnvConfig::default())?;
    }
    let spec = WindowSpec {
        window_count: a.window_count,
        overlap_fraction: a.overlap_fraction,
        feature_mask: FeatureMask::preset(&a.feature_mask)?,
    };
    let fm = extract_features(&d, &spec)?;
    let ids: Vec<String> = d.ids().map(str::to_string).collect();
    let labels: Vec<u8> = d.labels().iter().map(|l| l.as_u8()).collect();
    let path = out.claim(&a.output)?;
    fm.write_csv(&ids, &labels, &path)?;
    println!("{} rows × {} features", fm.values.nrows(), fm.values.ncols());
    Ok(())
}

pub fn augment(a: &AugmentArgs, out: &mut Outputs) -> Result<()> {
    let d = load_dataset(a.dataset.as_deref())?;
    let balanced = match a.method {
        BalanceMethod::Smote => {
            let space = match a.smote_space {
                NeighborSpace::Raw => SmoteSpace::Raw,
                NeighborSpace::Snv => SmoteSpace::Snv,
            };
            let cfg = SmoteConfig {
                k_neighbors: a.k_neighbors,
                seed: RngSeed(a.seed),
                fixed_gap: None,
            };
            balance_with_smote(&d, space, &cfg)?
        }
        BalanceMethod::Gan => {
            let mut cfg = nirsc::augment::GanConfig {
                seed: RngSeed(a.seed),
                ..Default::default()
            };
            if let Some(e) = a.gan_epochs {
                cfg.epochs = e;
            }
            let b = balance_with_gan(&d, &cfg, &Default::default())?;
            if let Some(gan) = &b.gan {
                if let Some(p) = &a.generator {
                    let path = out.claim(p)?;
                    gan.generator.save(&path)?;
                }
                if let Some(p) = &a.training_log {
                    let path = out.claim(p)?;
                    write_training_log(&gan.log, &path)?;
                }
            }
            b.dataset
        }
    };
    write_dataset(out, &a.output, &balanced)?;
    println!("{} ({} synthetic)", counts_line(&balanced)?, balanced.len() - d.len());
    Ok(())
}

struct Experiment {
    config: crate::config::ExperimentConfig,
    spec: nirsc::eval::PipelineSpec,
    train: Dataset,
    dir: std::path::PathBuf,
}

fn experiment(args: &ExperimentArgs) -> Result<Experiment> {
    let config = args.resolve()?;
    let spec = config.pipeline_spec()?;
    let dir = config.output_dir()?.to_path_buf();
    let train = read_dataset(config.dataset_path()?)?;
    Ok(Experiment {
        config,
        spec,
        train,
        dir,
    })
}

fn write_report(out: &mut Outputs, dir: &Path, report: &EvalReport) -> Result<()> {
    out.write(&dir.join("report.json"), to_json(report))?;
    let table = render_text(std::slice::from_ref(report));
    out.write(&dir.join("table.txt"), &table)?;
    out.write(&dir.join("table.csv"), render_csv(std::slice::from_ref(report)))?;
    print!("{table}");
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

pub fn cv(a: &ExperimentArgs, out: &mut Outputs) -> Result<()> {
    let e = experiment(a)?;
    let plan = make_folds(&e.train, e.config.folds, e.config.fold_seed())?;
    let report = run_cv(&e.train, &plan, &e.spec)?;
    out.dir(&e.dir)?;
    out.write(&e.dir.join("folds.json"), plan.to_json())?;
    out.write(&e.dir.join("config.json"), to_json(&e.config))?;
    write_report(out, &e.dir, &report)
}

pub fn tune(a: &TuneArgs, out: &mut Outputs) -> Result<()> {
    let mut e = experiment(&a.experiment)?;
    if let Some(b) = a.budget {
        e.config.tuner.budget = b;
    }
    let plan = make_folds(&e.train, e.config.folds, e.config.fold_seed())?;
    let space = default_space(&e.spec);
    let cfg = TunerConfig {
        budget: e.config.tuner.budget,
        seed: e.config.tuner_seed(),
        sampler: e.config.tuner.sampler,
    };
    let t = tune_pipeline(&e.train, &plan, &e.spec, &space, &cfg, Metric::Bacc)?;
    out.dir(&e.dir)?;
    out.write(&e.dir.join("history.csv"), t.result.history_csv())?;
    out.write(&e.dir.join("best.json"), t.result.best_json())?;
    out.write(&e.dir.join("best_spec.json"), to_json(&t.best_spec))?;
    out.write(&e.dir.join("config.json"), to_json(&e.config))?;
    eprintln!(
        "best trial {} of {}: bacc {:.4}",
        t.result.best.trial,
        t.result.history.len(),
        t.result.best.objective
    );
    write_report(out, &e.dir, &t.best_report)
}

pub fn train(a: &TrainArgs, out: &mut Outputs) -> Result<()> {
    let e = experiment(&a.experiment)?;
    let spec = match &a.params {
        Some(p) => {
            let best: TrialRecord = read_json(existing(Some(p), "params")?)?;
            configure_pipeline(&e.spec, &best.point)?
        }
        None => e.spec.clone(),
    };
    out.dir(&e.dir)?;
    let pipeline = match &a.test {
        Some(p) => {
            let test = load_dataset(Some(p))?;
            let (eval, pipeline) = evaluate_test(&e.train, &test, &spec)?;
            out.write(&e.dir.join("test.json"), to_json(&eval))?;
            let table = render_text(std::slice::from_ref(&eval));
            out.write(&e.dir.join("test_table.txt"), &table)?;
            print!("{table}");
            pipeline
        }
        None => fit_pipeline(&e.train, &spec)?,
    };
    out.write(&e.dir.join("model.json"), pipeline.to_json())?;
    eprintln!("trained {} on {} records", pipeline.spec.label(), e.train.len());
    Ok(())
}

pub fn predict(a: &PredictArgs, out: &mut Outputs) -> Result<()> {
    let pipeline = TrainedPipeline::load(existing(a.model.as_deref(), "model")?)?;
    let d = load_dataset(a.dataset.as_deref())?;
    let p = pipeline.predict(&d)?;
    let mut csv = String::from("id,score,label\n");
    for ((id, s), l) in p.ids.iter().zip(&p.scores).zip(&p.labels) {
        csv.push_str(&format!("{id},{s},{}\n", l.as_u8()));
    }
    out.write(&a.output, csv)?;
    let m = metrics(&confusion(&d.labels(), &p.labels)?);
    println!(
        "{} predictions: acc {:.3}, bacc {:.3}, recall {:.3}, precision {:.3}, f {:.3}",
        p.ids.len(),
        m.acc,
        m.bacc,
        m.recall,
        m.precision,
        m.f_score
    );
    Ok(())
}

pub fn explain(a: &ExplainArgs, out: &mut Outputs) -> Result<()> {
    let pipeline = TrainedPipeline::load(existing(a.model.as_deref(), "model")?)?;
    let background = load_dataset(a.background.as_deref())?;
    let samples = load_dataset(a.dataset.as_deref())?;
    let cfg = ShapleyConfig {
        n_permutations: a.permutations,
        background_size: a.background_size,
        mode: a.mode.into(),
        seed: RngSeed(a.seed),
    };
    let est = explain_pipeline(&pipeline, &background, &samples, &cfg)?;
    let ids: Vec<String> = samples.ids().map(str::to_string).collect();
    let ranking = importance_ranking(&est);
    out.dir(&a.output)?;
    out.write(&a.output.join("attributions.csv"), est.attributions_csv(&ids)?)?;
    out.write(&a.output.join("ranking.csv"), ranking_csv(&ranking))?;
    for r in ranking.iter().take(10) {
        println!("{:>3}  {:<40} {:.6}", r.index, r.name, r.mean_abs);
    }
    Ok(())
}

fn write_tables<R: TableRow>(out: &mut Outputs, dir: &Path, rows: &[R]) -> Result<()> {
    let text = render_text(rows);
    out.dir(dir)?;
    out.write(&dir.join("table.txt"), &text)?;
    out.write(&dir.join("table.csv"), render_csv(rows))?;
    out.write(&dir.join("table.md"), render_markdown(rows))?;
    print!("{text}");
    Ok(())
}

pub fn report(a: &ReportArgs, out: &mut Outputs) -> Result<()> {
    let mut cv = Vec::new();
    let mut test = Vec::new();
    for p in &a.inputs {
        let value: serde_json::Value = read_json(existing(Some(p), "report")?)?;
        if value.get("folds").is_some() {
            cv.push(serde_json::from_value::<EvalReport>(value).map_err(|e| Error::json(p, e))?);
        } else {
            test.push(serde_json::from_value::<TestEvaluation>(value).map_err(|e| Error::json(p, e))?);
        }
    }
    match (cv.is_empty(), test.is_empty()) {
        (false, true) => write_tables(out, &a.output, &cv),
        (true, false) => write_tables(out, &a.output, &test),
        _ => Err(Error::invalid(
            "cannot mix cross-validation and test reports in one table",
        )),
    }
}
