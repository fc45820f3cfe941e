//! Acceptance suite.
//!
//! One test per criterion. Each writes a single verdict line straight to
//! stdout (visible without `--nocapture`) and then asserts, so an unmet
//! criterion fails the target. Tests share a lock so the timing criterion is
//! not disturbed by the others.
//!
//!     cargo test --release -p driftex-cli --test acceptance
//!
//! Criterion 9 reads the electricity CSV from `DRIFTEX_ELECTRICITY_CSV` (or
//! `data/electricity.csv` in the workspace root) and is skipped without it.

use std::collections::HashMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::Command;
use std::sync::Mutex;
use std::time::Instant;

use driftex::assign::{self, hungarian, Cost, CostMatrix, Dissimilarity};
use driftex::eval::{self, CheckerboardConfig, ExperimentGrid, MixtureConfig};
use driftex::io::{self as dio, CsvOptions};
use driftex::pipeline::{self, DetectorConfig, StreamConfig};
use driftex::proto::{weighted_resample, CharacteristicSample, ClusterMethod, WeightVector};
use driftex::random::seeded;
use driftex::synth::{GaussianMixture, GmmSpec, MixtureComponent};
use driftex::{Dataset, Error, FeatureVector, IdentifiabilityScore, TimeBin, TimedSample};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn verdict(id: u32, pass: bool, what: &str, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "criterion {id} [{tag}] {what}: {detail}");
    let _ = out.flush();
}

fn skipped(id: u32, what: &str, detail: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "criterion {id} [SKIP] {what}: {detail}");
    let _ = out.flush();
}

fn fv(v: Vec<f64>) -> FeatureVector {
    FeatureVector::new(v).unwrap()
}

// ---------------------------------------------------------------------------
// 1. identifiability estimation error
// ---------------------------------------------------------------------------

/// Reference value and reported spread per mixture; spreads below 0.01 are not
/// reported and count as zero.
const MSE_TARGETS: [(&str, f64, f64); 3] = [("2/2/2", 0.01, 0.0), ("100/8/2", 0.01, 0.0), ("2/2/10", 0.06, 0.01)];
const MSE_MIN_TOLERANCE: f64 = 0.03;

#[test]
fn criterion_1_identifiability_mse() {
    let _guard = serial();
    let grid = ExperimentGrid {
        configs: MSE_TARGETS.iter().map(|(c, _, _)| c.parse().unwrap()).collect(),
        methods: vec![],
        ..ExperimentGrid::default()
    };
    let rows = eval::eval_identifiability(&grid).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for (config, target, spread) in MSE_TARGETS {
        let tol = MSE_MIN_TOLERANCE.max(2.0 * spread);
        let row = rows.iter().find(|r| r.config == config).unwrap();
        let ok = (row.mse.mean - target).abs() <= tol;
        pass &= ok;
        parts.push(format!(
            "{config} {:.4}±{:.4} (target {target}±{tol}) {}",
            row.mse.mean,
            row.mse.std,
            if ok { "ok" } else { "out" }
        ));
    }
    verdict(1, pass, "k-NN identifiability MSE, 30 runs", &parts.join("; "));
    assert!(pass, "{}", parts.join("; "));
}

// ---------------------------------------------------------------------------
// 2. identifiability at characteristic samples
// ---------------------------------------------------------------------------

const PROTO_TOLERANCE: f64 = 0.1;
const ORDERING_REPEATS: u64 = 3;

fn prototype_means(config: &str, methods: &[ClusterMethod], seed: u64) -> HashMap<ClusterMethod, f64> {
    let grid = ExperimentGrid {
        configs: vec![config.parse::<MixtureConfig>().unwrap()],
        methods: methods.to_vec(),
        seed,
        ..ExperimentGrid::default()
    };
    eval::eval_prototypes(&grid)
        .unwrap()
        .into_iter()
        .map(|r| (r.method, r.i_mean.mean))
        .collect()
}

#[test]
fn criterion_2_prototype_quality() {
    let _guard = serial();
    use ClusterMethod::*;
    let mut parts = Vec::new();
    let mut pass = true;
    let mut check = |parts: &mut Vec<String>, label: &str, got: f64, target: f64| {
        let ok = (got - target).abs() <= PROTO_TOLERANCE;
        pass &= ok;
        parts.push(format!("{label} {got:.3} (target {target}±{PROTO_TOLERANCE}) {}", if ok { "ok" } else { "out" }));
    };
    let easy = prototype_means("2/2/2", &[KMeansResampled], 0);
    check(&mut parts, "2/2/2 k-M", easy[&KMeansResampled], 1.0);

    let mut ordered = 0;
    for rep in 0..ORDERING_REPEATS {
        let hard = prototype_means("2/2/10", &[KMeansResampled, AffinityPropagation, MeanShift], rep);
        let (km, ap, ms) = (hard[&KMeansResampled], hard[&AffinityPropagation], hard[&MeanShift]);
        if rep == 0 {
            check(&mut parts, "2/2/10 k-M", km, 0.56);
            check(&mut parts, "2/2/10 AP", ap, 0.62);
            check(&mut parts, "2/2/10 MS", ms, 0.45);
        }
        if ap >= km && km >= ms {
            ordered += 1;
        }
        parts.push(format!("rep {rep}: k-M {km:.3} AP {ap:.3} MS {ms:.3}"));
    }
    let ordering_ok = 3 * ordered >= 2 * ORDERING_REPEATS as usize;
    pass &= ordering_ok;
    parts.push(format!("AP >= k-M >= MS in {ordered}/{ORDERING_REPEATS} aggregates"));
    verdict(2, pass, "mean i at characteristic samples, 30 runs", &parts.join("; "));
    assert!(pass, "{}", parts.join("; "));
}

// ---------------------------------------------------------------------------
// 3. drift indicator properties
// ---------------------------------------------------------------------------

const NO_DRIFT_MAX: f64 = 0.25;
const DISJOINT_MIN: f64 = 0.9;
const STREAM_SEEDS: u64 = 10;

fn two_bin_stream(n_per_bin: usize, offset: f64, seed: u64) -> Vec<FeatureVector> {
    let mut rng = seeded(seed);
    (0..2 * n_per_bin)
        .map(|i| {
            let shift = if i < n_per_bin { 0.0 } else { offset };
            fv(vec![shift + rng.random::<f64>(), shift + rng.random::<f64>()])
        })
        .collect()
}

fn stream_mean_i(stream: Vec<FeatureVector>, change_at: usize, seed: u64) -> f64 {
    let cfg = StreamConfig {
        detector: DetectorConfig::Oracle {
            change_points: vec![change_at],
        },
        seed,
        ..StreamConfig::default()
    };
    let reports = pipeline::explain_stream(stream, &cfg).unwrap();
    assert_eq!(reports.len(), 1);
    reports[0].mean_identifiability
}

#[test]
fn criterion_3_drift_indicator() {
    let _guard = serial();
    let mut rng = seeded(3);
    let components: Vec<MixtureComponent> = (0..4)
        .map(|_| MixtureComponent {
            mean: (0..3).map(|_| rng.random_range(-2.0..2.0)).collect(),
            first_bin_weight: 0.5,
        })
        .collect();
    let mix = GaussianMixture::new(components, 1.0).unwrap();
    let mut max_analytic = 0.0f64;
    for a in 0..10 {
        for b in 0..10 {
            for c in 0..10 {
                let x = [a as f64 * 0.5 - 2.5, b as f64 * 0.5 - 2.5, c as f64 * 0.5 - 2.5];
                max_analytic = max_analytic.max(mix.identifiability(&x).unwrap().value());
            }
        }
    }
    let analytic_ok = max_analytic == 0.0;

    let n = 500;
    let flat: Vec<f64> = (0..STREAM_SEEDS).map(|s| stream_mean_i(two_bin_stream(n, 0.0, s), n, s)).collect();
    let split: Vec<f64> = (0..STREAM_SEEDS).map(|s| stream_mean_i(two_bin_stream(n, 5.0, s), n, s)).collect();
    let flat_max = flat.iter().cloned().fold(f64::MIN, f64::max);
    let flat_mean = flat.iter().sum::<f64>() / flat.len() as f64;
    let split_min = split.iter().cloned().fold(f64::MAX, f64::min);
    let pass = analytic_ok && flat_max <= NO_DRIFT_MAX && split_min >= DISJOINT_MIN;
    let detail = format!(
        "analytic max i on 10^3 grid = {max_analytic:e}; no-drift mean i max {flat_max:.3} (avg {flat_mean:.3}, bound {NO_DRIFT_MAX}); \
         disjoint mean i min {split_min:.3} (bound {DISJOINT_MIN}); {STREAM_SEEDS} streams each"
    );
    verdict(3, pass, "identifiability vanishes without drift", &detail);
    assert!(pass, "{detail}");
}

// ---------------------------------------------------------------------------
// 4. weighted resampling converges to the characterizing measure
// ---------------------------------------------------------------------------

const TV_BOUND: f64 = 0.02;
const SOURCE_N: usize = 1_000;
const RESAMPLE_M: usize = 100_000;

/// (occurrence probability, identifiability) per support point.
fn supports() -> Vec<Vec<(f64, f64)>> {
    vec![
        vec![(0.3, 0.9), (0.7, 0.2)],
        vec![(0.1, 1.0), (0.2, 0.5), (0.3, 0.25), (0.4, 0.0)],
        vec![
            (0.05, 0.9),
            (0.10, 0.1),
            (0.15, 0.6),
            (0.20, 0.3),
            (0.05, 1.0),
            (0.10, 0.0),
            (0.15, 0.45),
            (0.20, 0.75),
        ],
    ]
}

fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

#[test]
fn criterion_4_resampling() {
    let _guard = serial();
    let mut pass = true;
    let mut parts = Vec::new();
    for (s, support) in supports().into_iter().enumerate() {
        let k = support.len();
        let probs: Vec<f64> = support.iter().map(|p| p.0).collect();
        let mass: Vec<f64> = support.iter().map(|(p, i)| p * i).collect();
        let z: f64 = mass.iter().sum();
        let target: Vec<f64> = mass.iter().map(|m| m / z).collect();

        let mut rng = seeded(40 + s as u64);
        let draw = WeightedIndex::new(&probs).unwrap();
        let source: Vec<usize> = (0..SOURCE_N).map(|_| draw.sample(&mut rng)).collect();
        let weights = WeightVector::new(source.iter().map(|&j| support[j].1).collect()).unwrap();
        let picks = weighted_resample(&weights, RESAMPLE_M, 400 + s as u64).unwrap();
        let mut freq = vec![0.0; k];
        for &p in &picks {
            freq[source[p]] += 1.0 / RESAMPLE_M as f64;
        }
        let mut sample_mass = vec![0.0; k];
        for &j in &source {
            sample_mass[j] += support[j].1;
        }
        let zn: f64 = sample_mass.iter().sum();
        let sample_target: Vec<f64> = sample_mass.iter().map(|m| m / zn).collect();

        let tv = total_variation(&freq, &target);
        let tv_sample = total_variation(&freq, &sample_target);
        pass &= tv < TV_BOUND;
        parts.push(format!("{k} points: TV to W {tv:.4}, to weighted source sample {tv_sample:.4}"));
    }

    let n = 8;
    let picks = weighted_resample(&WeightVector::new(vec![0.0; n]).unwrap(), RESAMPLE_M, 7).unwrap();
    let mut counts = vec![0usize; n];
    for p in picks {
        counts[p] += 1;
    }
    let bound = 4.0 / (RESAMPLE_M as f64).sqrt();
    let dev = counts
        .iter()
        .map(|&c| (c as f64 / RESAMPLE_M as f64 - 1.0 / n as f64).abs())
        .fold(0.0, f64::max);
    pass &= dev < bound;
    parts.push(format!("zero weights: max deviation from uniform {dev:.4} (bound {bound:.4})"));

    let detail = format!("bound TV < {TV_BOUND} at n={SOURCE_N}, m={RESAMPLE_M}; {}", parts.join("; "));
    verdict(4, pass, "weighted resampling", &detail);
    assert!(pass, "{detail}");
}

// ---------------------------------------------------------------------------
// 5. assignment solver
// ---------------------------------------------------------------------------

fn exhaustive(rows: &[Vec<f64>]) -> f64 {
    fn go(rows: &[Vec<f64>], r: usize, used: &mut Vec<bool>) -> f64 {
        if r == rows.len() {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        for c in 0..used.len() {
            if !used[c] {
                used[c] = true;
                best = best.min(rows[r][c] + go(rows, r + 1, used));
                used[c] = false;
            }
        }
        best
    }
    go(rows, 0, &mut vec![false; rows[0].len()])
}

fn char_at(data: &Dataset, index: usize) -> CharacteristicSample {
    CharacteristicSample {
        index,
        sample: data.samples()[index].clone(),
        i_value: IdentifiabilityScore::new(1.0).unwrap(),
        prototype: 0,
    }
}

#[test]
fn criterion_5_hungarian() {
    let _guard = serial();
    let mut rng = seeded(5);
    let mut matched = 0;
    for _ in 0..200 {
        let n = rng.random_range(1..=7);
        let m = rng.random_range(n..=8);
        // integer costs keep the sums exact
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..m).map(|_| rng.random_range(0..50) as f64).collect())
            .collect();
        let costs = CostMatrix::from_finite(&rows).unwrap();
        let cols = hungarian(&costs).unwrap();
        let mut seen = vec![false; m];
        let injective = cols.iter().all(|&c| !std::mem::replace(&mut seen[c], true));
        let total: f64 = cols.iter().enumerate().map(|(r, &c)| rows[r][c]).sum();
        if injective && total == exhaustive(&rows) {
            matched += 1;
        }
    }

    // two characteristic samples in bin 1, one in bin 2
    let pts = [(0.0, 1), (1.0, 1), (5.0, 1), (0.2, 2), (4.0, 2), (9.0, 2)];
    let data = Dataset::new(
        pts.iter()
            .map(|&(x, t)| TimedSample::new(fv(vec![x]), TimeBin::new(t).unwrap()))
            .collect(),
        2,
    )
    .unwrap();
    let chars = vec![char_at(&data, 0), char_at(&data, 1), char_at(&data, 4)];
    let by_bin = assign::associate_all(&chars, &data, &Dissimilarity::Euclidean).unwrap();
    let bin1 = &by_bin[&TimeBin::new(1).unwrap()];
    let bin2 = &by_bin[&TimeBin::new(2).unwrap()];
    let self_pairs_ok = bin1.pairs[..2] == [0, 1] && bin1.costs[..2] == [0.0, 0.0] && bin2.pairs[2] == 4 && bin2.costs[2] == 0.0;
    let cross_ok = bin2.pairs[..2] == [3, 5] && bin1.pairs[2] == 2;

    let blocked = CostMatrix::from_rows(vec![
        vec![Cost::Finite(1.0), Cost::Infeasible, Cost::Infeasible],
        vec![Cost::Finite(2.0), Cost::Infeasible, Cost::Infeasible],
        vec![Cost::Finite(1.0), Cost::Finite(1.0), Cost::Finite(1.0)],
    ])
    .unwrap();
    let infeasible_ok = matches!(hungarian(&blocked), Err(Error::Infeasible { .. }));

    let pass = matched == 200 && self_pairs_ok && cross_ok && infeasible_ok;
    let detail = format!(
        "{matched}/200 random instances match exhaustive optimum; self-pairs {}; cross-bin pairs {}; infeasible instance rejected {}",
        self_pairs_ok, cross_ok, infeasible_ok
    );
    verdict(5, pass, "assignment solver", &detail);
    assert!(pass, "{detail}");
}

// ---------------------------------------------------------------------------
// 6. checkerboard
// ---------------------------------------------------------------------------

const SIGN_TEST_ALPHA: f64 = 0.01;

#[test]
fn criterion_6_checkerboard() {
    let _guard = serial();
    let cfg = CheckerboardConfig::default();
    assert_eq!((cfg.runs, cfg.n_per_bin), (30, 150));
    let res = eval::eval_checkerboard(&cfg).unwrap();
    let pass = res.score.mean < res.baseline.mean && res.p_value < SIGN_TEST_ALPHA;
    let detail = format!(
        "score {:.3}±{:.3} vs random baseline {:.3}; {} wins, {} losses, sign test p = {:.2e} (alpha {SIGN_TEST_ALPHA})",
        res.score.mean, res.score.std, res.baseline.mean, res.wins, res.losses, res.p_value
    );
    verdict(6, pass, "checkerboard beats random flagging", &detail);
    assert!(pass, "{detail}");
}

// ---------------------------------------------------------------------------
// 7. determinism of the command-line tool
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_determinism() {
    let _guard = serial();
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_driftex");
    let root = dir.path().to_str().unwrap();
    let gen = Command::new(bin)
        .args(["generate", "gmm", "--n", "600", "--seed", "11", "--out-dir", root])
        .output()
        .unwrap();
    assert!(gen.status.success());
    let input = dir.path().join("gmm.csv");
    let mut reports = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let run = Command::new(bin)
            .args(["explain", "--input", input.to_str().unwrap(), "--seed", "5"])
            .args(["--out-dir", out.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(run.status.success());
        reports.push(std::fs::read(out.join("report_001.json")).unwrap());
    }
    let pass = !reports[0].is_empty() && reports[0] == reports[1];
    let detail = format!("two invocations, {} bytes each, identical = {}", reports[0].len(), reports[0] == reports[1]);
    verdict(7, pass, "byte-identical reports", &detail);
    assert!(pass, "{detail}");
}

// ---------------------------------------------------------------------------
// 8. scaling
// ---------------------------------------------------------------------------

const SCALING_RATIO_MAX: f64 = 4.5;
const SCALING_N: usize = 2_000;
const SCALING_M: usize = 500;

fn median_explain_secs(n: usize) -> f64 {
    let data = driftex::synth::sample_gmm(&GmmSpec::new(2, 2, 2, 8), n, 9).unwrap();
    let cfg = StreamConfig {
        m_draw: Some(SCALING_M),
        ..StreamConfig::default()
    };
    let mut times: Vec<f64> = (0..3)
        .map(|_| {
            let start = Instant::now();
            pipeline::explain_archive(&data, &cfg).unwrap();
            start.elapsed().as_secs_f64()
        })
        .collect();
    times.sort_by(f64::total_cmp);
    times[1]
}

#[test]
fn criterion_8_scaling() {
    let _guard = serial();
    median_explain_secs(SCALING_N / 4); // warm-up
    let small = median_explain_secs(SCALING_N);
    let large = median_explain_secs(2 * SCALING_N);
    let ratio = large / small;
    let pass = ratio <= SCALING_RATIO_MAX;
    let detail = format!(
        "n={SCALING_N}: {:.1} ms, n={}: {:.1} ms, ratio {ratio:.2} (max {SCALING_RATIO_MAX}, m={SCALING_M})",
        small * 1e3,
        2 * SCALING_N,
        large * 1e3
    );
    verdict(8, pass, "explanation time when the archive doubles", &detail);
    assert!(pass, "{detail}");
}

// ---------------------------------------------------------------------------
// 9. electricity market data
// ---------------------------------------------------------------------------

const ELECTRICITY_SPLIT: usize = 17_423;

fn electricity_path() -> Option<PathBuf> {
    if let Some(p) = std::env::var_os("DRIFTEX_ELECTRICITY_CSV") {
        return Some(PathBuf::from(p));
    }
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/electricity.csv");
    p.exists().then_some(p)
}

#[test]
fn criterion_9_electricity() {
    let _guard = serial();
    let what = "vicprice difference below 5% of its range";
    let Some(path) = electricity_path() else {
        skipped(9, what, "set DRIFTEX_ELECTRICITY_CSV to the electricity CSV to run");
        return;
    };
    let table = dio::read_table_file(&path, &CsvOptions { ignore: vec!["class".into()] }).unwrap();
    let names = table.feature_names.clone();
    let cfg = StreamConfig {
        detector: DetectorConfig::Oracle {
            change_points: vec![ELECTRICITY_SPLIT],
        },
        ..StreamConfig::default()
    };
    let mut explainer = pipeline::DriftExplainer::new(cfg).unwrap().with_feature_names(names);
    let mut reports = Vec::new();
    for x in table.rows {
        reports.extend(explainer.push(x).unwrap());
    }
    reports.extend(explainer.finish().unwrap());
    assert_eq!(reports.len(), 1);
    let report = &reports[0];
    let vic = report.summary.iter().find(|f| f.name == "vicprice").expect("vicprice column");
    let f = vic.feature;
    let pass = vic.no_drift;
    let detail = format!(
        "mean |diff| {:.4} vs range {:.4} ({:.2}%)",
        vic.mean_abs_difference,
        report.feature_ranges[f],
        100.0 * vic.mean_abs_difference / report.feature_ranges[f]
    );
    verdict(9, pass, what, &detail);
    assert!(pass, "{detail}");
}
