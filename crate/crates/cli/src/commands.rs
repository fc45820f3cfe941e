use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use driftex::assign::Dissimilarity;
use driftex::eval::{
    self, BenchmarkData, BenchmarkTargets, CheckerboardConfig, ExperimentGrid, FlagRule,
    MixtureConfig, StatCell,
};
use driftex::io::{self, CsvOptions};
use driftex::pipeline::{self, DetectorConfig, DriftExplainer, ExplanationReport, StreamConfig};
use driftex::proto::ClusterMethod;
use driftex::random::derive_seed;
use driftex::synth::{self, CheckerboardSpec, GaussianMixture, GmmSpec, GroundTruth};
use driftex::timeclf::{ClassifierConfig, ForestConfig, KnnConfig};
use driftex::Dataset;

use crate::{
    BenchmarkArgs, CheckerboardArgs, CheckerboardEvalArgs, ClassifierArgs, ClassifierKind,
    Command, DetectorKind, EvalCommand, ExplainArgs, GenerateCommand, GmmArgs, GridArgs, RuleKind,
    TaskKind,
};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Generate(GenerateCommand::Gmm(a)) => generate_gmm(&a),
        Command::Generate(GenerateCommand::Checkerboard(a)) => generate_checkerboard(&a),
        Command::Explain(a) => explain(&a),
        Command::Eval(EvalCommand::Identifiability(a)) => eval_identifiability(&a),
        Command::Eval(EvalCommand::Prototypes(a)) => eval_prototypes(&a),
        Command::Eval(EvalCommand::Checkerboard(a)) => eval_checkerboard(&a),
        Command::Eval(EvalCommand::Benchmark(a)) => eval_benchmark(&a),
    }
}

fn out_dir(dir: &Path) -> Result<&Path> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn write_file<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&mut std::io::BufWriter<File>) -> driftex::Result<()>,
{
    io::write_atomic(path, write).with_context(|| format!("writing {}", path.display()))
}

fn write_generated(dir: &Path, name: &str, data: &Dataset, truth: &GroundTruth) -> Result<()> {
    let dir = out_dir(dir)?;
    let data_path = dir.join(format!("{name}.csv"));
    let truth_path = dir.join(format!("{name}_truth.csv"));
    write_file(&data_path, |w| io::write_dataset(w, data))?;
    if let Err(e) = write_file(&truth_path, |w| io::write_truth(w, truth)) {
        let _ = std::fs::remove_file(&data_path);
        return Err(e);
    }
    println!(
        "wrote {} samples in {} bins to {}",
        data.len(),
        data.n_bins(),
        data_path.display()
    );
    Ok(())
}

fn generate_gmm(a: &GmmArgs) -> Result<()> {
    let spec = GmmSpec {
        d: a.d,
        n_class: a.n_class,
        n_gauss_per_class: a.n_gauss,
        a: a.a,
        sigma: a.sigma,
        seed: a.seed,
    };
    let mix = GaussianMixture::from_spec(&spec)?;
    let data = mix.sample(a.n, derive_seed(a.seed, &[1]))?;
    let mut i_true = Vec::with_capacity(data.len());
    let mut c_true = Vec::with_capacity(data.len());
    for x in data.features() {
        i_true.push(mix.identifiability(x)?.value());
        c_true.push(mix.characterizing(x)?);
    }
    let truth = GroundTruth {
        i_true,
        c_true: Some(c_true),
    };
    write_generated(&a.output.out_dir, &a.name, &data, &truth)
}

fn generate_checkerboard(a: &CheckerboardArgs) -> Result<()> {
    let spec = CheckerboardSpec::random(a.grid, a.bins, a.seed)?;
    let sample = synth::sample_checkerboard(&spec, a.n_per_bin, derive_seed(a.seed, &[1]))?;
    write_generated(&a.output.out_dir, &a.name, &sample.dataset, &sample.truth)?;
    let changed: Vec<String> = sample.changed_cells.iter().map(|c| c.to_string()).collect();
    println!("changed cells: {}", changed.join(" "));
    Ok(())
}

fn classifier_config(a: &ClassifierArgs, seed: u64) -> ClassifierConfig {
    match a.classifier {
        ClassifierKind::Knn => ClassifierConfig::Knn(KnnConfig {
            k: a.k,
            ..KnnConfig::default()
        }),
        ClassifierKind::Rf => ClassifierConfig::RandomForest(ForestConfig {
            n_trees: a.trees,
            seed,
            ..ForestConfig::default()
        }),
    }
}

fn parse_classifiers(names: &[String], k: usize, trees: usize) -> Result<Vec<ClassifierConfig>> {
    names
        .iter()
        .map(|n| {
            let classifier = match n.trim() {
                "knn" => ClassifierKind::Knn,
                "rf" | "random-forest" => ClassifierKind::Rf,
                other => bail!("unknown model '{other}' (expected knn or rf)"),
            };
            Ok(classifier_config(&ClassifierArgs { classifier, k, trees }, 0))
        })
        .collect()
}

fn parse_methods(names: &[String]) -> Result<Vec<ClusterMethod>> {
    names.iter().map(|n| Ok(n.parse()?)).collect()
}

fn parse_dissimilarity(spec: &str) -> Result<Dissimilarity> {
    let (kind, arg) = match spec.split_once(':') {
        Some((k, a)) => (k.trim(), Some(a.trim())),
        None => (spec.trim(), None),
    };
    match (kind, arg) {
        ("euclidean", None) => Ok(Dissimilarity::Euclidean),
        ("pnorm", Some(p)) => {
            let p: f64 = p.parse().with_context(|| format!("invalid p-norm exponent '{p}'"))?;
            Ok(Dissimilarity::pnorm(p)?)
        }
        ("mahalanobis", Some(path)) => {
            let mut rdr = csv::ReaderBuilder::new()
                .has_headers(false)
                .trim(csv::Trim::All)
                .from_path(path)
                .with_context(|| format!("opening {path}"))?;
            let mut matrix = Vec::new();
            for record in rdr.records() {
                let record = record?;
                let row = record
                    .iter()
                    .map(|v| v.parse::<f64>().with_context(|| format!("{path}: bad entry '{v}'")))
                    .collect::<Result<Vec<f64>>>()?;
                matrix.push(row);
            }
            Ok(Dissimilarity::mahalanobis(matrix)?)
        }
        _ => bail!("unknown dissimilarity '{spec}' (euclidean, pnorm:P or mahalanobis:FILE)"),
    }
}

fn write_report(dir: &Path, report: &ExplanationReport, written: &mut Vec<PathBuf>) -> Result<()> {
    let json = dir.join(format!("report_{:03}.json", report.event));
    let pairs = dir.join(format!("pairs_{:03}.csv", report.event));
    write_file(&json, |w| io::write_report_json(w, report))?;
    written.push(json);
    write_file(&pairs, |w| io::write_pairs_csv(w, report))?;
    written.push(pairs);
    Ok(())
}

fn print_report(report: &ExplanationReport) {
    println!(
        "event {} at position {}: {} bins, {} archived, mean identifiability {:.3}, {} characteristic samples",
        report.event,
        report.change_point,
        report.n_bins,
        report.archive_size,
        report.mean_identifiability,
        report.characteristic.len()
    );
    for f in &report.summary {
        println!(
            "  {:<16} mean |diff| {:>10.4}  mean diff {:>10.4}{}",
            f.name,
            f.mean_abs_difference,
            f.mean_difference,
            if f.no_drift { "  (no drift)" } else { "" }
        );
    }
}

fn explain(a: &ExplainArgs) -> Result<()> {
    let opts = CsvOptions {
        ignore: a.ignore_columns.clone(),
    };
    let table = io::read_stream_file(&a.input, &opts)
        .with_context(|| format!("reading {}", a.input.display()))?;
    let archive_mode = a.detector == DetectorKind::Oracle && a.change_at.is_empty() && table.bins.is_some();
    let detector = match a.detector {
        DetectorKind::Oracle => DetectorConfig::Oracle {
            change_points: a.change_at.clone(),
        },
        DetectorKind::Window => DetectorConfig::WindowMean {
            window: a.window,
            threshold: a.threshold,
        },
    };
    let cfg = StreamConfig {
        detector,
        classifier: classifier_config(&a.classifier, 0),
        method: a.method.parse()?,
        prototypes: a.prototypes,
        m_draw: a.m_draw,
        dissimilarity: parse_dissimilarity(&a.dissimilarity)?,
        seed: a.seed,
        standardize: a.standardize,
        bin_capacity: a.bin_capacity,
    };
    let dir = out_dir(&a.output.out_dir)?;
    let mut written = Vec::new();
    if archive_mode {
        // a time column without change points is one pre-binned archive
        let names = table.feature_names.clone();
        let mut report = pipeline::explain_archive(&table.into_dataset()?, &cfg)?;
        report.feature_names = names;
        report.summary = pipeline::summarize_report(&report);
        write_report(dir, &report, &mut written)?;
        print_report(&report);
        println!("wrote {} files to {}", written.len(), dir.display());
        return Ok(());
    }
    let mut explainer = DriftExplainer::new(cfg)?.with_feature_names(table.feature_names);
    let result = (|| -> Result<()> {
        for x in table.rows {
            if let Some(report) = explainer.push(x)? {
                write_report(dir, &report, &mut written)?;
                print_report(&report);
            }
        }
        if let Some(report) = explainer.finish()? {
            write_report(dir, &report, &mut written)?;
            print_report(&report);
        }
        Ok(())
    })();
    if let Err(e) = result {
        for path in &written {
            let _ = std::fs::remove_file(path);
        }
        return Err(e);
    }
    if written.is_empty() {
        println!("no drift events; nothing written");
    } else {
        println!("wrote {} files to {}", written.len(), dir.display());
    }
    Ok(())
}

fn grid_from(a: &GridArgs) -> Result<ExperimentGrid> {
    let grid = ExperimentGrid {
        configs: a
            .configs
            .iter()
            .map(|c| c.parse::<MixtureConfig>())
            .collect::<driftex::Result<_>>()?,
        classifiers: parse_classifiers(&a.models, a.k, a.trees)?,
        methods: parse_methods(&a.methods)?,
        runs: a.runs,
        seed: a.seed,
        n_train: a.n_train,
        n_eval: a.n_eval,
        prototypes: Some(a.prototypes),
    };
    grid.validate()?;
    Ok(grid)
}

fn write_eval<T: serde::Serialize + ?Sized>(
    dir: &Path,
    kind: &str,
    header: &[&str],
    rows: &[(Vec<String>, &StatCell)],
    full: &T,
) -> Result<()> {
    let dir = out_dir(dir)?;
    let csv_path = dir.join(format!("{kind}.csv"));
    let json_path = dir.join(format!("{kind}.json"));
    write_file(&csv_path, |w| eval::write_table_csv(w, header, rows))?;
    let res = write_file(&json_path, |w| {
        serde_json::to_writer_pretty(&mut *w, full)?;
        w.write_all(b"\n")?;
        Ok(())
    });
    if let Err(e) = res {
        let _ = std::fs::remove_file(&csv_path);
        return Err(e);
    }
    for (keys, cell) in rows {
        println!("{:<40} {:.4} ± {:.4} (n={})", keys.join(" "), cell.mean, cell.std, cell.runs);
    }
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

fn eval_identifiability(a: &GridArgs) -> Result<()> {
    let grid = grid_from(a)?;
    let rows = eval::eval_identifiability(&grid)?;
    let table: Vec<(Vec<String>, &StatCell)> = rows
        .iter()
        .map(|r| (vec![r.config.clone(), r.classifier.clone()], &r.mse))
        .collect();
    write_eval(&a.output.out_dir, "identifiability", &["config", "classifier"], &table, &rows)
}

fn eval_prototypes(a: &GridArgs) -> Result<()> {
    let grid = grid_from(a)?;
    let rows = eval::eval_prototypes(&grid)?;
    let mut table: Vec<(Vec<String>, &StatCell)> = Vec::new();
    for r in &rows {
        let keys = |stat: &str| vec![r.config.clone(), r.method.name().to_string(), stat.to_string()];
        table.push((keys("i"), &r.i_mean));
        table.push((keys("c"), &r.c_mean));
        table.push((keys("prototypes"), &r.prototypes));
    }
    write_eval(&a.output.out_dir, "prototypes", &["config", "method", "statistic"], &table, &rows)
}

fn eval_checkerboard(a: &CheckerboardEvalArgs) -> Result<()> {
    let cfg = CheckerboardConfig {
        runs: a.runs,
        n_per_bin: a.n_per_bin,
        grid: a.grid,
        classifier: classifier_config(&a.classifier, 0),
        method: a.method.parse()?,
        prototypes: a.prototypes,
        rule: match a.rule {
            RuleKind::Presence => FlagRule::CharacteristicPresence,
            RuleKind::Mass => FlagRule::IdentifiabilityMass,
        },
        seed: a.seed,
    };
    let result = eval::eval_checkerboard(&cfg)?;
    let table = vec![
        (vec!["score".to_string()], &result.score),
        (vec!["random-baseline".to_string()], &result.baseline),
    ];
    write_eval(&a.output.out_dir, "checkerboard", &["statistic"], &table, &result)?;
    println!(
        "wins {} losses {} (one-sided sign test p = {:.3e})",
        result.wins, result.losses, result.p_value
    );
    Ok(())
}

fn read_benchmark(a: &BenchmarkArgs) -> Result<BenchmarkData> {
    let mut ignore = a.ignore_columns.clone();
    ignore.push(a.target.clone());
    let table = io::read_table_file(&a.input, &CsvOptions { ignore })
        .with_context(|| format!("reading {}", a.input.display()))?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(&a.input)?;
    let col = rdr
        .headers()?
        .iter()
        .position(|h| h == a.target)
        .with_context(|| format!("no target column '{}'", a.target))?;
    let mut raw = Vec::with_capacity(table.rows.len());
    for record in rdr.records() {
        raw.push(record?.get(col).unwrap_or("").to_string());
    }
    let targets = match a.task {
        TaskKind::Regression => BenchmarkTargets::Regression(
            raw.iter()
                .enumerate()
                .map(|(i, v)| {
                    v.parse::<f64>()
                        .with_context(|| format!("row {}: bad target '{v}'", i + 1))
                })
                .collect::<Result<_>>()?,
        ),
        TaskKind::Classification => BenchmarkTargets::Classification(raw),
    };
    let name = a
        .input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    Ok(BenchmarkData {
        name,
        features: table.rows,
        targets,
    })
}

fn eval_benchmark(a: &BenchmarkArgs) -> Result<()> {
    let data = read_benchmark(a)?;
    let classifiers = parse_classifiers(&a.models, a.k, a.trees)?;
    let rows = eval::eval_benchmarks(std::slice::from_ref(&data), &classifiers, a.runs, a.seed)?;
    let table: Vec<(Vec<String>, &StatCell)> = rows
        .iter()
        .map(|r| (vec![r.dataset.clone(), r.classifier.clone()], &r.mse))
        .collect();
    write_eval(&a.output.out_dir, "benchmark", &["dataset", "classifier"], &table, &rows)
}
