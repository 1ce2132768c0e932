//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.

use std::cmp::Ordering;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config as ProptestConfig, TestRunner};

use ecoamlp::automlp::{population_for, run_generation, train_automlp_on, AutoMlpParams};
use ecoamlp::baselines::{ClassifierKind, PreprocessorKind};
use ecoamlp::class_outlier::{
    codb_score, cof, deviation, ecodb_detect, ecof, kdist, knn, min_max_normalize, pcl,
    OutlierParams,
};
use ecoamlp::data::{Dataset, Instance, Schema};
use ecoamlp::distance::Measure;
use ecoamlp::harness::{
    run_experiment, run_repeat, run_sweep, AccessLog, ExperimentConfig, Subset, SweepAxis,
};
use ecoamlp::metrics::{report, ConfusionMatrix};
use ecoamlp::mlp::{InputScaling, MlpConfig, MlpNetwork};
use ecoamlp::rng::Xoshiro256StarStar;

type Check = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn pidd_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/pima-indians-diabetes.csv")
}

// ---------------------------------------------------------------------------
// Brute-force class-outlier oracle, written directly from the definitions and
// sharing no code with the library.

fn oracle_distance(a: &[f64], b: &[f64], correlation: bool) -> f64 {
    if !correlation {
        return a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
    }
    if a == b {
        return 0.0;
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    let r = if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    };
    1.0 - r
}

struct OracleRow {
    id: usize,
    same_label_neighbours: usize,
    deviation: f64,
    kdist: f64,
}

/// Returns (id, score) pairs, strongest outlier first.
fn oracle_ecodb(
    points: &[(usize, Vec<f64>, usize)],
    k: usize,
    n: usize,
    correlation: bool,
) -> Vec<(usize, f64)> {
    let mut rows: Vec<OracleRow> = points
        .iter()
        .map(|(id, x, label)| {
            let mut others: Vec<(f64, usize, usize)> = points
                .iter()
                .filter(|(j, _, _)| j != id)
                .map(|(j, y, l)| (oracle_distance(x, y, correlation), *j, *l))
                .collect();
            others.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let neighbours = &others[..k];
            let deviation = points
                .iter()
                .filter(|(j, _, l)| j != id && l == label)
                .map(|(_, y, _)| oracle_distance(x, y, correlation))
                .sum();
            OracleRow {
                id: *id,
                same_label_neighbours: neighbours.iter().filter(|(_, _, l)| l == label).count(),
                deviation,
                kdist: neighbours.iter().map(|(d, _, _)| d).sum(),
            }
        })
        .collect();
    insertion_sort(&mut rows, |a, b| {
        a.same_label_neighbours
            .cmp(&b.same_label_neighbours)
            .then(tolerant_cmp(b.deviation, a.deviation))
            .then(tolerant_cmp(a.kdist, b.kdist))
            .then(a.id.cmp(&b.id))
    });
    rows.truncate(n);
    if rows.is_empty() {
        return Vec::new();
    }
    let fold = |f: fn(&OracleRow) -> f64| {
        let lo = rows.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = rows.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    };
    let (dlo, dhi) = fold(|r| r.deviation);
    let (klo, khi) = fold(|r| r.kdist);
    let norm = |v: f64, lo: f64, hi: f64| if hi == lo { 0.0 } else { (v - lo) / (hi - lo) };
    let mut scored: Vec<(usize, f64)> = rows
        .iter()
        .map(|r| {
            let p = r.same_label_neighbours as f64 / k as f64;
            (
                r.id,
                k as f64 * p - norm(r.deviation, dlo, dhi) + norm(r.kdist, klo, khi),
            )
        })
        .collect();
    insertion_sort(&mut scored, |a, b| {
        tolerant_cmp(a.1, b.1).then(a.0.cmp(&b.0))
    });
    scored
}

/// Values that agree to within rounding noise count as ties, which the
/// definitions then break by id.
fn tolerant_cmp(a: f64, b: f64) -> Ordering {
    if (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0) {
        Ordering::Equal
    } else {
        a.partial_cmp(&b).unwrap()
    }
}

/// Stable and well-defined for comparators that are not strictly transitive.
fn insertion_sort<T>(items: &mut [T], cmp: impl Fn(&T, &T) -> Ordering) {
    for i in 1..items.len() {
        let mut j = i;
        while j > 0 && cmp(&items[j - 1], &items[j]) == Ordering::Greater {
            items.swap(j - 1, j);
            j -= 1;
        }
    }
}

fn random_points(
    rng: &mut Xoshiro256StarStar,
    size: usize,
    dim: usize,
    grid: bool,
) -> Vec<(usize, Vec<f64>, usize)> {
    (0..size)
        .map(|i| {
            // Sparse, non-monotone ids so id tie-breaks are exercised.
            let id = 1000 - 7 * i;
            let label = rng.index(2);
            let x = (0..dim)
                .map(|_| {
                    if grid {
                        rng.index(3) as f64
                    } else {
                        rng.normal() + label as f64
                    }
                })
                .collect();
            (id, x, label)
        })
        .collect()
}

fn to_dataset(points: &[(usize, Vec<f64>, usize)]) -> Dataset {
    let dim = points[0].1.len();
    let names: Vec<String> = (0..dim).map(|j| format!("f{j}")).collect();
    let schema = Schema::numeric(&names, ["a", "b"]).unwrap();
    let instances = points
        .iter()
        .map(|(id, x, label)| Instance {
            id: *id,
            features: x.clone(),
            label: *label,
        })
        .collect();
    Dataset::new(schema, instances).unwrap()
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let mut rng = Xoshiro256StarStar::seed_from_u64(20_240_101);
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let k = [3, 5, 12][case % 3];
        let n = [3, 5, 10][(case / 3) % 3];
        let correlation = case % 2 == 1;
        // Integer grids create many exact ties, which euclidean distances
        // reproduce bit-for-bit. Correlation ties on such data are only equal
        // up to rounding, and min-max normalisation magnifies that noise, so
        // correlation cases use continuous data with at least 3 features.
        let grid = case % 4 == 0;
        let size = k + 1 + rng.index(40 - k);
        let dim = if correlation {
            3 + rng.index(3)
        } else {
            2 + rng.index(4)
        };
        let points = random_points(&mut rng, size.max(n), dim, grid);
        let data = to_dataset(&points);
        let measure = if correlation {
            Measure::CorrelationSimilarity
        } else {
            Measure::Euclidean
        };
        let params = OutlierParams {
            k,
            n,
            measure,
            ..OutlierParams::default()
        };
        let got = ecodb_detect(&data, &params).map_err(|e| format!("case {case}: {e}"))?;
        let want = oracle_ecodb(&points, k, n, correlation);
        let got_ids: Vec<usize> = got.ranked.iter().map(|s| s.id).collect();
        let want_ids: Vec<usize> = want.iter().map(|w| w.0).collect();
        ensure!(
            got_ids == want_ids,
            "case {case} (k={k}, n={n}, size={size}): ids {got_ids:?} != oracle {want_ids:?}"
        );
        for (g, w) in got.ranked.iter().zip(&want) {
            let diff = (g.score - w.1).abs();
            worst = worst.max(diff);
            ensure!(
                diff <= 1e-9,
                "case {case}: id {} score {} vs oracle {}",
                g.id,
                g.score,
                w.1
            );
        }
        // The top candidate minimises ECOF over the candidate set.
        if let Some(first) = want.first() {
            ensure!(
                want.iter().all(|w| w.1 >= first.1),
                "case {case}: oracle top-1 is not the minimum"
            );
        }
    }
    let elapsed = start.elapsed();
    ensure!(
        elapsed < Duration::from_secs(10),
        "took {elapsed:?}, limit 10 s"
    );
    Ok(format!(
        "50 datasets, max score diff {worst:.1e}, {elapsed:.2?}"
    ))
}

// ---------------------------------------------------------------------------

fn line(points: &[(f64, usize)]) -> Dataset {
    let schema = Schema::numeric(&["x"], ["a", "b"]).unwrap();
    Dataset::from_rows(schema, points.iter().map(|&(x, l)| (vec![x], l)).collect()).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12
}

fn criterion_2() -> Check {
    let e = Measure::Euclidean;
    let ds = line(&[(0.0, 0), (1.0, 0), (10.0, 1)]);
    let nn = knn(&ds, 0, 2, &e).map_err(|e| e.to_string())?;
    ensure!(nn == vec![(1, 1.0), (2, 10.0)], "knn {nn:?}");
    ensure!(kdist(&ds, 0, 2, &e).unwrap() == 11.0, "kdist");
    ensure!(pcl(&ds, 0, 2, &e).unwrap() == 0.5, "pcl k=2");

    let ds = line(&[(0.0, 0), (1.0, 0), (2.0, 0), (3.0, 1), (50.0, 1)]);
    ensure!(close(pcl(&ds, 0, 3, &e).unwrap(), 2.0 / 3.0), "pcl 2/3");
    let ds = line(&[(0.0, 0), (1.0, 0), (3.0, 0), (2.0, 1)]);
    ensure!(deviation(&ds, 0, &e).unwrap() == 4.0, "deviation");
    ensure!(deviation(&ds, 3, &e).unwrap() == 0.0, "singleton deviation");
    let dup = line(&[(5.0, 0), (5.0, 0), (5.0, 1), (9.0, 0)]);
    ensure!(kdist(&dup, 0, 2, &e).unwrap() == 0.0, "duplicate kdist");

    let (score, degenerate) = cof(3, 1.0, 2.0, 4.0, 1.0, 1.0);
    ensure!(score == 7.5 && !degenerate, "cof {score}");
    let (_, degenerate) = cof(3, 1.0, 0.0, 4.0, 1.0, 1.0);
    ensure!(degenerate, "cof zero deviation not flagged");

    for &(k, p, nd, nk) in &[
        (12, 0.25, 0.3, 0.9),
        (3, 2.0 / 3.0, 1.0, 0.0),
        (5, 0.0, 0.0, 1.0),
    ] {
        let want = k as f64 * p - nd + nk;
        ensure!(close(ecof(k, p, nd, nk), want), "ecof({k},{p},{nd},{nk})");
    }
    ensure!(min_max_normalize(2.0, 2.0, 7.0) == 0.0, "norm at min");
    ensure!(min_max_normalize(7.0, 2.0, 7.0) == 1.0, "norm at max");
    ensure!(min_max_normalize(4.5, 2.0, 7.0) == 0.5, "norm midpoint");
    ensure!(min_max_normalize(3.0, 3.0, 3.0) == 0.0, "norm degenerate");

    // Compose a full detection on a fixed fixture and recompute every field.
    let mut rng = Xoshiro256StarStar::seed_from_u64(7);
    let fixture = to_dataset(&random_points(&mut rng, 30, 3, false));
    for measure in [Measure::Euclidean, Measure::CorrelationSimilarity] {
        let params = OutlierParams {
            k: 5,
            n: 6,
            measure: measure.clone(),
            ..OutlierParams::default()
        };
        let r = ecodb_detect(&fixture, &params).unwrap();
        let dev: Vec<f64> = r.ranked.iter().map(|s| s.deviation).collect();
        let kd: Vec<f64> = r.ranked.iter().map(|s| s.kdist).collect();
        let (dlo, dhi) = (
            dev.iter().cloned().fold(f64::INFINITY, f64::min),
            dev.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        );
        let (klo, khi) = (
            kd.iter().cloned().fold(f64::INFINITY, f64::min),
            kd.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        );
        let mut hit = [false; 4];
        for s in &r.ranked {
            ensure!(
                close(s.pcl, pcl(&fixture, s.id, 5, &measure).unwrap()),
                "pcl of {}",
                s.id
            );
            ensure!(
                close(s.deviation, deviation(&fixture, s.id, &measure).unwrap()),
                "deviation of {}",
                s.id
            );
            ensure!(
                close(s.kdist, kdist(&fixture, s.id, 5, &measure).unwrap()),
                "kdist of {}",
                s.id
            );
            let nd = min_max_normalize(s.deviation, dlo, dhi);
            let nk = min_max_normalize(s.kdist, klo, khi);
            ensure!(
                (0.0..=1.0).contains(&nd) && (0.0..=1.0).contains(&nk),
                "norm out of range"
            );
            hit[0] |= nd == 0.0;
            hit[1] |= nd == 1.0;
            hit[2] |= nk == 0.0;
            hit[3] |= nk == 1.0;
            ensure!(close(s.score, ecof(5, s.pcl, nd, nk)), "ecof of {}", s.id);
            let codb = codb_score(&fixture, s.id, &params).unwrap();
            let (want, _) = cof(
                5,
                codb.pcl,
                codb.deviation,
                codb.kdist,
                params.alpha,
                params.beta,
            );
            ensure!(close(codb.score, want), "cof of {}", s.id);
        }
        ensure!(
            hit.iter().all(|&h| h),
            "norm boundaries 0 and 1 not both attained: {hit:?}"
        );
    }
    Ok("knn, pcl, deviation, kdist, cof, ecof, norms".into())
}

// ---------------------------------------------------------------------------

fn criterion_3() -> Check {
    let start = Instant::now();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for fixture in 0..20u64 {
        let mut rng = Xoshiro256StarStar::seed_from_u64(500 + fixture);
        let hidden = 1 + (fixture as usize % 8);
        let dim = 1 + rng.index(6);
        let batch_size = 1 + rng.index(10);
        let rows: Vec<(Vec<f64>, usize)> = (0..batch_size)
            .map(|_| ((0..dim).map(|_| 2.0 * rng.normal()).collect(), rng.index(2)))
            .collect();
        let config = MlpConfig {
            input_dim: dim,
            hidden_units: hidden,
            learning_rate: 0.1,
            weight_init_seed: fixture,
        };
        let mut net = MlpNetwork::init(config).map_err(|e| e.to_string())?;
        if fixture % 2 == 1 {
            let schema = Schema::numeric(
                &(0..dim).map(|j| format!("f{j}")).collect::<Vec<_>>(),
                ["0", "1"],
            )
            .unwrap();
            let ds = Dataset::from_rows(schema, rows.clone()).unwrap();
            net = net.with_input_scaling(Some(InputScaling::min_max(&ds).unwrap()));
        }
        let batch: Vec<(&[f64], usize)> = rows.iter().map(|(x, y)| (x.as_slice(), *y)).collect();
        let analytic = net.batch_gradient(&batch).map_err(|e| e.to_string())?;
        ensure!(analytic.len() == net.param_count(), "gradient length");
        for (i, &g) in analytic.iter().enumerate() {
            let base = net.params()[i];
            let mut plus = net.clone();
            plus.set_param(i, base + h);
            let mut minus = net.clone();
            minus.set_param(i, base - h);
            let numeric =
                (plus.batch_loss(&batch).unwrap() - minus.batch_loss(&batch).unwrap()) / (2.0 * h);
            let rel = (g - numeric).abs() / g.abs().max(numeric.abs()).max(1e-8);
            worst = worst.max(rel);
            ensure!(
                rel < 1e-4,
                "fixture {fixture} (hidden {hidden}) param {i}: analytic {g} numeric {numeric}"
            );
        }
    }
    let elapsed = start.elapsed();
    ensure!(
        elapsed < Duration::from_secs(5),
        "took {elapsed:?}, limit 5 s"
    );
    Ok(format!(
        "20 fixtures, max relative error {worst:.1e}, {elapsed:.2?}"
    ))
}

// ---------------------------------------------------------------------------

fn separable(seed: u64, n: usize) -> Dataset {
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    let schema = Schema::numeric(&["a", "b"], ["0", "1"]).unwrap();
    let rows = (0..n)
        .map(|i| {
            let label = i % 2;
            let c = if label == 1 { 2.0 } else { -2.0 };
            (vec![c + 0.5 * rng.normal(), c + 0.5 * rng.normal()], label)
        })
        .collect();
    Dataset::from_rows(schema, rows).unwrap()
}

fn criterion_4() -> Check {
    let train = separable(1, 80);
    let validation = separable(2, 40);
    let mut monotone_best = 0;
    for seed in 0..10 {
        let params = AutoMlpParams {
            ensemble_size: 4,
            cycles_per_generation: 5,
            generations: 6,
            hidden_range: (2, 16),
            lr_range: (0.01, 1.0),
            seed,
            ..AutoMlpParams::default()
        };
        let mut pop = population_for(&train, &params).map_err(|e| e.to_string())?;
        for _ in 0..params.generations {
            pop = run_generation(pop, &train, &validation, &params).map_err(|e| e.to_string())?;
            ensure!(
                pop.size() == 4,
                "seed {seed}: population size {}",
                pop.size()
            );
            for m in &pop.members {
                let hu = m.network.hidden_units();
                let lr = m.network.learning_rate();
                ensure!((2..=16).contains(&hu), "seed {seed}: hidden units {hu}");
                ensure!(
                    (0.01..=1.0).contains(&lr),
                    "seed {seed}: learning rate {lr}"
                );
            }
        }

        let run = train_automlp_on(&train, &validation, &params).map_err(|e| e.to_string())?;
        let again = train_automlp_on(&train, &validation, &params).map_err(|e| e.to_string())?;
        ensure!(
            run.winner == again.winner,
            "seed {seed}: winner differs between identical runs"
        );
        ensure!(
            run.history == again.history,
            "seed {seed}: history differs between identical runs"
        );
        ensure!(
            run.history == pop.history,
            "seed {seed}: step-wise and end-to-end histories differ"
        );
        ensure!(
            run.history.len() == params.generations,
            "seed {seed}: history length"
        );

        let mut running = f64::INFINITY;
        for rec in &run.history {
            ensure!(rec.members.len() == 4, "seed {seed}: record size");
            for m in &rec.members {
                ensure!(
                    (2..=16).contains(&m.hidden_units),
                    "seed {seed}: recorded hidden units"
                );
                ensure!(
                    (0.01..=1.0).contains(&m.learning_rate),
                    "seed {seed}: recorded learning rate"
                );
            }
            running = running.min(rec.best_error);
            ensure!(
                rec.running_min_error == running,
                "seed {seed}: running minimum bookkeeping"
            );
        }
        for w in run.history.windows(2) {
            ensure!(
                w[1].running_min_error <= w[0].running_min_error,
                "seed {seed}: running minimum increased"
            );
        }
        if run
            .history
            .windows(2)
            .all(|w| w[1].best_error <= w[0].best_error)
        {
            monotone_best += 1;
        }
    }
    Ok(format!(
        "10 seeds; per-generation best error non-increasing in {monotone_best}/10 (informational)"
    ))
}

// ---------------------------------------------------------------------------

fn criterion_5() -> Check {
    let worked = report(&ConfusionMatrix {
        tp: 50,
        tn: 40,
        fp: 5,
        r#fn: 5,
    })
    .map_err(|e| e.to_string())?;
    ensure!(
        worked.accuracy == 0.90,
        "worked example accuracy {}",
        worked.accuracy
    );
    ensure!(
        worked.precision_pos == 50.0 / 55.0 && worked.recall_pos == 50.0 / 55.0,
        "worked example precision/recall"
    );

    let matrices = (0usize..1000, 0usize..1000, 0usize..1000, 0usize..1000)
        .prop_filter("non-empty", |(a, b, c, d)| a + b + c + d > 0)
        .prop_map(|(tp, tn, fp, r#fn)| ConfusionMatrix { tp, tn, fp, r#fn });
    let mut runner = TestRunner::new(ProptestConfig {
        cases: 1000,
        failure_persistence: None,
        ..ProptestConfig::default()
    });
    runner
        .run(&matrices, |m| {
            let r = report(&m).unwrap();
            let recombined = (r.recall_pos * m.positives() as f64
                + r.recall_neg * m.negatives() as f64)
                / m.total() as f64;
            prop_assert!((recombined - r.accuracy).abs() < 1e-12);
            for v in [
                r.accuracy,
                r.precision_pos,
                r.recall_pos,
                r.precision_neg,
                r.recall_neg,
                r.weighted_mean_precision,
                r.weighted_mean_recall,
            ] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("1000 random matrices, worked example exact".into())
}

// ---------------------------------------------------------------------------

fn pidd_config() -> ExperimentConfig {
    ExperimentConfig {
        data_path: pidd_path(),
        repeats: 10,
        seed: 0,
        ..ExperimentConfig::default()
    }
}

fn criterion_6() -> Check {
    let config = pidd_config();
    ensure!(
        config.k == 12
            && config.n_outliers == 10
            && config.ensemble_size == 4
            && config.cycles == 10
            && config.generations == 10,
        "defaults drifted from the reference configuration"
    );
    let start = Instant::now();
    let report = run_experiment(&config).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let median = report.aggregate.test["accuracy"].median;
    ensure!(report.repeats.len() == 10, "expected 10 repeats");
    ensure!(median >= 0.72, "median test accuracy {median:.4} < 0.72");
    ensure!(
        elapsed < Duration::from_secs(120),
        "took {elapsed:?}, limit 2 min"
    );
    let accs: Vec<String> = report
        .test_accuracies()
        .iter()
        .map(|a| format!("{:.3}", a))
        .collect();
    Ok(format!(
        "median test accuracy {median:.4} over seeds 0..9 [{}], {elapsed:.2?}",
        accs.join(" ")
    ))
}

fn criterion_7() -> Check {
    let variants: Vec<String> = PreprocessorKind::ALL
        .iter()
        .map(|p| p.to_string())
        .collect();
    let sweep =
        run_sweep(&pidd_config(), SweepAxis::Preprocessor, &variants).map_err(|e| e.to_string())?;
    ensure!(sweep.rows.len() == 5, "rows {}", sweep.rows.len());
    for row in &sweep.rows {
        for v in [
            row.accuracy,
            row.weighted_mean_recall,
            row.weighted_mean_precision,
        ] {
            ensure!(
                v.is_finite() && (0.0..=1.0).contains(&v),
                "{}: cell {v}",
                row.variant
            );
        }
    }
    let paired = sweep.paired.as_ref().ok_or("paired comparison missing")?;
    ensure!(
        paired.accuracy_differences.len() == 10,
        "paired differences"
    );
    ensure!(
        paired.accuracy_differences.iter().all(|d| d.is_finite()),
        "non-finite paired difference"
    );
    println!("{}", sweep.to_text().trim_end());
    Ok(format!(
        "table populated; ecodb - none median paired difference {:+.2} points, reference gain {} ({})",
        100.0 * paired.median_difference,
        100.0 * paired.reference_gain,
        if paired.meets_reference { "met" } else { "flagged: not met" }
    ))
}

fn criterion_8() -> Check {
    let data = ecoamlp::harness::load_dataset(&pidd_config()).map_err(|e| e.to_string())?;
    let mut configurations = 0;
    for preprocessor in PreprocessorKind::ALL {
        for classifier in ClassifierKind::ALL {
            for stratified in [false, true] {
                let config = ExperimentConfig {
                    preprocessor,
                    classifier,
                    stratified,
                    ..pidd_config()
                };
                let log = AccessLog::new();
                run_repeat(&config, &data, 0, &log).map_err(|e| e.to_string())?;
                let events = log.events();
                let test_reads = events.iter().filter(|a| a.subset == Subset::Test).count();
                ensure!(
                    log.test_isolated(),
                    "{preprocessor}/{classifier}: {events:?}"
                );
                ensure!(
                    test_reads == 1,
                    "{preprocessor}/{classifier}: {test_reads} test reads"
                );
                ensure!(
                    events.last().map(|a| a.subset) == Some(Subset::Test),
                    "test read is not last"
                );
                configurations += 1;
            }
        }
    }
    Ok(format!(
        "{configurations} configurations, test read only at final evaluation"
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("ECODB oracle equivalence", criterion_1),
        ("component formula checks", criterion_2),
        ("gradient check", criterion_3),
        ("AutoMLP bookkeeping", criterion_4),
        ("metrics identities", criterion_5),
        ("end-to-end PIDD accuracy", criterion_6),
        ("preprocessing ablation table", criterion_7),
        ("test-set isolation", criterion_8),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome =
            catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", i + 1),
            Err(why) => {
                failures += 1;
                println!("criterion {} {name}: FAIL ({why})", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failures} failed",
        criteria.len() - failures
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
