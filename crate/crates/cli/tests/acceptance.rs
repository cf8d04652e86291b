//! Acceptance suite: one PASS/FAIL/SKIP line per criterion.
//!
//! Runs without the libtest harness so the lines are always printed. The
//! process fails if any criterion fails, except for deviations listed in
//! `KNOWN_DEVIATIONS`, which still print FAIL.
//!
//! Criterion 8 needs the SemEval Hinglish data: point `SENTIMIX_DATA` at a
//! directory holding `train`, `validation` and `test` files with a `.conll`
//! or `.tsv` extension. Build with `--release` for the full recipe.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sentimix_core::metrics::{confusion, f1_report};
use sentimix_core::nn::gradcheck::{check_architecture, check_layer, GradCheck, LayerCase};
use sentimix_core::persist::{decode_model, encode_model};
use sentimix_core::preprocess::{strip_handles, strip_punct, strip_urls};
use sentimix_core::stemmer::stem;
use sentimix_core::train::{predict_proba, train_with};
use sentimix_core::{combine, ArchId, Model64, Sentiment, TrainHyper};
use tempfile::TempDir;

const GRAD_TRIALS: u64 = 20;
const GRAD_TOLERANCE: f64 = 1e-4;
const GRAD_BUDGET: Duration = Duration::from_secs(120);
const OVERFIT_EPOCHS: usize = 300;
const OVERFIT_LOSS: f64 = 0.05;
const OVERFIT_BUDGET: Duration = Duration::from_secs(60);
const ENSEMBLE_SETS: usize = 1000;
const METRIC_MATRICES: usize = 500;
const METRIC_TOLERANCE: f64 = 1e-12;
const STEM_MIN_PAIRS: usize = 200;
const IDEMPOTENCE_STRINGS: usize = 1000;
const AVG_LEN_TOLERANCE: f64 = 1.0;
const VOCAB_TOLERANCE: f64 = 0.02;
const MIN_TEST_F1: f64 = 0.50;

/// Criteria expected to print FAIL, with the reason. They do not fail the run.
const KNOWN_DEVIATIONS: &[(u32, &str)] =
    &[(5, "the Porter2 reference is itself not idempotent; exact conformance rules out idempotence")];

enum Status {
    Pass,
    Fail,
    Skip,
}

struct Outcome {
    status: Status,
    detail: String,
}

fn pass(detail: String) -> Outcome {
    Outcome { status: Status::Pass, detail }
}

fn fail(detail: String) -> Outcome {
    Outcome { status: Status::Fail, detail }
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn gradients() -> Outcome {
    let start = Instant::now();
    let mut total = GradCheck::default();
    let mut worst = (0.0, String::new());
    let mut record = |name: String, r: GradCheck| {
        if r.max_error >= worst.0 {
            worst = (r.max_error, name);
        }
        total = total.merge(r);
    };
    for case in LayerCase::ALL {
        for seed in 0..GRAD_TRIALS {
            match check_layer(case, seed) {
                Ok(r) => record(format!("{} seed {seed}", case.name()), r),
                Err(e) => return fail(format!("{}: {e}", case.name())),
            }
        }
    }
    for arch in ArchId::ALL {
        for seed in 0..GRAD_TRIALS {
            match check_architecture(arch, support::tiny_config(), 2, seed) {
                Ok(r) => record(format!("{arch} seed {seed}"), r),
                Err(e) => return fail(format!("{arch}: {e}")),
            }
        }
    }
    let elapsed = start.elapsed();
    let cases = LayerCase::ALL.len() + ArchId::ALL.len();
    check(
        total.max_error < GRAD_TOLERANCE && total.kinks * 100 < total.compared && elapsed < GRAD_BUDGET,
        format!(
            "{cases} cases x {GRAD_TRIALS} trials, max rel error {:.2e} < {GRAD_TOLERANCE:e} (worst: {}), \
             {} of {} coordinates skipped at max-pool/relu kinks, {:.1}s",
            total.max_error,
            worst.1,
            total.kinks,
            total.compared + total.kinks,
            elapsed.as_secs_f64()
        ),
    )
}

fn overfit() -> Outcome {
    let data = support::separable(1);
    let hyper = TrainHyper { epochs: OVERFIT_EPOCHS, batch_size: 8, learning_rate: 0.01, seed: 3, shuffle: true };
    let mut ok = true;
    let mut parts = Vec::new();
    for arch in ArchId::ALL {
        let start = Instant::now();
        let run = || -> sentimix_core::Result<(Option<usize>, Vec<u8>)> {
            let mut reached = None;
            let (model, _) = train_with(Model64::build(arch, support::tiny_config(), 7)?, &data, &[], &hyper, |r| {
                if reached.is_none() && r.accuracy == 1.0 && r.loss < OVERFIT_LOSS {
                    reached = Some(r.epoch);
                }
            })?;
            Ok((reached, encode_model(&model)))
        };
        let first = run();
        let elapsed = start.elapsed();
        let second = run();
        match (first, second) {
            (Ok((Some(epoch), a)), Ok((_, b))) => {
                let same = a == b;
                ok &= same && elapsed < OVERFIT_BUDGET;
                parts.push(format!(
                    "{arch} epoch {epoch}{} {:.1}s",
                    if same { "" } else { " NONDETERMINISTIC" },
                    elapsed.as_secs_f64()
                ));
            }
            (Ok((None, _)), _) => {
                ok = false;
                parts.push(format!("{arch} never reached it"));
            }
            (Err(e), _) | (_, Err(e)) => {
                ok = false;
                parts.push(format!("{arch}: {e}"));
            }
        }
    }
    check(
        ok,
        format!(
            "accuracy 1 and loss < {OVERFIT_LOSS} within {OVERFIT_EPOCHS} epochs, reruns identical: {}",
            parts.join(", ")
        ),
    )
}

fn ensemble_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2020);
    let mut mismatches = 0;
    let mut ties = 0;
    for _ in 0..ENSEMBLE_SETS {
        let set = support::random_matrix_set(&mut rng, 4, 50);
        let want = support::brute_force_combine(&set);
        ties += (0..50)
            .filter(|&i| {
                let maxima: Vec<f64> = (0..3).map(|j| set.iter().map(|m| m.rows[i][j]).fold(0.0, f64::max)).collect();
                let top = maxima.iter().cloned().fold(0.0, f64::max);
                maxima.iter().filter(|&&x| x == top).count() > 1
            })
            .count();
        match combine(&set) {
            Ok(got) => mismatches += got.iter().zip(&want).filter(|(a, b)| a != b).count(),
            Err(e) => return fail(format!("combine: {e}")),
        }
    }
    check(
        mismatches == 0,
        format!("{ENSEMBLE_SETS} sets of 4 models x 50 rows, {ties} tied rows, {mismatches} mismatches"),
    )
}

fn metric_oracle() -> Outcome {
    use Sentiment::*;
    let fixture = f1_report(
        &confusion(&[Negative, Negative, Neutral, Positive], &[Negative, Neutral, Neutral, Positive]).unwrap(),
    )
    .unwrap();
    let fixture_ok = (fixture.macro_f1 - 7.0 / 9.0).abs() < METRIC_TOLERANCE
        && (fixture.weighted_f1 - 0.75).abs() < METRIC_TOLERANCE
        && (fixture.accuracy - 0.75).abs() < METRIC_TOLERANCE;

    let mut rng = ChaCha8Rng::seed_from_u64(2021);
    let mut worst = 0.0f64;
    for _ in 0..METRIC_MATRICES {
        let cm = support::random_confusion(&mut rng);
        let got = f1_report(&cm).unwrap();
        let want = support::oracle_metrics(&cm);
        let mut diffs =
            vec![got.macro_f1 - want.macro_f1, got.weighted_f1 - want.weighted_f1, got.accuracy - want.accuracy];
        for c in 0..3 {
            diffs.push(got.classes[c].f1 - want.f1[c]);
            diffs.push(got.classes[c].precision - want.precision[c]);
            diffs.push(got.classes[c].recall - want.recall[c]);
        }
        worst = diffs.iter().fold(worst, |w, d| w.max(d.abs()));
    }
    check(
        fixture_ok && worst < METRIC_TOLERANCE,
        format!(
            "fixture macro {:.12} weighted {:.12} accuracy {:.12}; {METRIC_MATRICES} random matrices, max diff {worst:.1e} (tol {METRIC_TOLERANCE:e})",
            fixture.macro_f1, fixture.weighted_f1, fixture.accuracy
        ),
    )
}

fn stemmer() -> (Outcome, bool) {
    let pairs: Vec<(&str, &str)> =
        support::PORTER2_PAIRS.lines().map(|l| l.split_once('\t').expect("input <TAB> expected")).collect();
    let table: HashMap<&str, &str> = pairs.iter().cloned().collect();
    let wrong = pairs.iter().filter(|(w, want)| stem(w) != *want).count();
    let unstable: Vec<&str> = pairs.iter().filter(|(w, _)| stem(&stem(w)) != stem(w)).map(|(w, _)| *w).collect();
    // every unstable word must move exactly as the reference moves it
    let as_reference = unstable.iter().all(|w| table.get(stem(w).as_str()).is_some_and(|r| stem(&stem(w)) == *r));
    let example = unstable
        .iter()
        .find(|w| **w == "agree")
        .or(unstable.first())
        .map(|w| format!(" (e.g. {w} -> {} -> {})", stem(w), stem(&stem(w))))
        .unwrap_or_default();
    let conformance = pairs.len() >= STEM_MIN_PAIRS && wrong == 0;
    let detail = format!(
        "conformance {}/{} exact; idempotent on {}/{}, the other {} re-stem exactly as the reference does{example}",
        pairs.len() - wrong,
        pairs.len(),
        pairs.len() - unstable.len(),
        pairs.len(),
        unstable.len()
    );
    let expected_deviation = conformance && as_reference && !unstable.is_empty();
    (check(conformance && unstable.is_empty(), detail), expected_deviation)
}

fn preprocessing() -> Outcome {
    let (count, failures) = support::run_preprocess_goldens();
    let mut rng = ChaCha8Rng::seed_from_u64(2022);
    type Strip = fn(&str) -> String;
    let ops: [(&str, Strip); 3] =
        [("strip_handles", strip_handles), ("strip_urls", strip_urls), ("strip_punct", strip_punct)];
    let mut broken = Vec::new();
    for _ in 0..IDEMPOTENCE_STRINGS {
        let s = support::noisy_string(&mut rng);
        for (name, op) in ops {
            let once = op(&s);
            if op(&once) != once {
                broken.push(format!("{name}({s:?})"));
            }
        }
    }
    check(
        failures.is_empty() && broken.is_empty(),
        format!(
            "{}/{count} goldens byte-exact, 3 strip ops idempotent on {IDEMPOTENCE_STRINGS} random strings{}",
            count - failures.len(),
            failures.iter().chain(&broken).take(3).map(|f| format!("; {f}")).collect::<String>()
        ),
    )
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Runs the binary with whitespace-separated `flags` followed by
/// `--name path` pairs; returns stdout, or stderr on failure.
fn sentimix(flags: &str, paths: &[(&str, &Path)]) -> Result<String, String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sentimix"));
    cmd.args(flags.split_whitespace()).arg("--quiet");
    for (name, path) in paths {
        cmd.arg(format!("--{name}")).arg(path);
    }
    let out = cmd.output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(String::from_utf8_lossy(&out.stdout).into_owned())
    } else {
        Err(String::from_utf8_lossy(&out.stderr).trim().to_string())
    }
}

fn determinism() -> Outcome {
    let dir = TempDir::new().unwrap();
    let train = |name: &str| -> Result<Vec<u8>, String> {
        let out = dir.path().join(name);
        sentimix(
            "train --arch bilstm --seed 7 --epochs 5 --batch-size 8 --vocab-size 500 --seq-len 12 \
             --embedding-dim 16 --lstm-units 8 --conv-filters 8",
            &[
                ("input", &fixture("train.tsv")),
                ("validation", &fixture("validation.tsv")),
                ("hindi-stoplist", &fixture("hindi_stoplist.txt")),
                ("out", &out),
            ],
        )?;
        fs::read(out.join("model.bin")).map_err(|e| e.to_string())
    };
    let (a, b) = match (train("a"), train("b")) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return fail(format!("train: {e}")),
    };
    let cli_identical = a == b;
    let reencoded = decode_model::<f64>(&a).map(|m| encode_model(&m) == a).unwrap_or(false);

    let data = support::separable(5);
    let hyper = TrainHyper { epochs: 3, batch_size: 8, ..TrainHyper::default() };
    let mut bitwise = 0;
    for arch in ArchId::ALL {
        let (model, _) =
            train_with(Model64::build(arch, support::tiny_config(), 1).unwrap(), &data, &[], &hyper, |_| {}).unwrap();
        let loaded: Model64 = decode_model(&encode_model(&model)).unwrap();
        let bits = |m: &Model64| -> Vec<u64> {
            predict_proba(m, &data, "x").unwrap().rows.iter().flatten().map(|p| p.to_bits()).collect()
        };
        bitwise += usize::from(bits(&model) == bits(&loaded));
    }
    check(
        cli_identical && reencoded && bitwise == ArchId::ALL.len(),
        format!(
            "two `train --arch bilstm --seed 7 --epochs 5` runs: model files {} ({} bytes); decode/encode {}; \
             predict_proba bitwise equal after round trip for {bitwise}/4 archs",
            if cli_identical { "identical" } else { "DIFFER" },
            a.len(),
            if reencoded { "reproduces the file" } else { "CHANGES the file" },
        ),
    )
}

fn find_split(dir: &Path, name: &str) -> Option<(PathBuf, &'static str)> {
    ["conll", "tsv"].into_iter().find_map(|ext| {
        let p = dir.join(format!("{name}.{ext}"));
        p.is_file().then_some((p, ext))
    })
}

fn parse_stats(out: &str) -> HashMap<String, f64> {
    out.lines().filter_map(|l| l.split_once('\t')).filter_map(|(k, v)| Some((k.to_string(), v.parse().ok()?))).collect()
}

fn dataset() -> Outcome {
    let Some(dir) = std::env::var_os("SENTIMIX_DATA").map(PathBuf::from) else {
        return Outcome { status: Status::Skip, detail: "SENTIMIX_DATA is not set".into() };
    };
    let splits: Vec<_> = ["train", "validation", "test"].iter().map(|s| find_split(&dir, s)).collect();
    let [Some(train), Some(val), Some(test)] = splits.as_slice() else {
        return fail(format!("{} lacks train/validation/test .conll or .tsv files", dir.display()));
    };
    let tmp = TempDir::new().unwrap();
    let total = tmp.path().join(format!("all.{}", train.1));
    let mut joined = fs::read_to_string(&train.0).unwrap_or_default();
    if !joined.ends_with('\n') {
        joined.push('\n');
    }
    joined.push('\n');
    joined.push_str(&fs::read_to_string(&val.0).unwrap_or_default());
    fs::write(&total, joined).unwrap();

    let targets: [(&str, &Path, &str, usize, f64, f64); 4] = [
        ("train+validation", &total, train.1, 17000, 134.9, 60141.0),
        ("train", &train.0, train.1, 14594, 136.2, 60115.0),
        ("validation", &val.0, val.1, 3000, 127.7, 19499.0),
        ("test", &test.0, test.1, 3000, 129.9, 19331.0),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, path, format, count, avg, vocab) in targets {
        let stats = match sentimix(&format!("stats --format {format}"), &[("input", path)]) {
            Ok(out) => parse_stats(&out),
            Err(e) => return fail(format!("stats {name}: {e}")),
        };
        let (n, a, v) = (stats["sentences"], stats["avg_char_length"], stats["vocabulary"]);
        let good =
            n as usize == count && (a - avg).abs() <= AVG_LEN_TOLERANCE && (v - vocab).abs() <= VOCAB_TOLERANCE * vocab;
        ok &= good;
        parts.push(format!(
            "{name} {n}/{count} sents, len {a:.1}/{avg}, vocab {v}/{vocab}{}",
            if good { "" } else { " MISMATCH" }
        ));
    }

    let out = tmp.path().join("reproduce");
    let run = sentimix(
        &format!("reproduce --format {}", train.1),
        &[("input", &train.0), ("validation", &val.0), ("test", &test.0), ("out", &out)],
    );
    let f1 = run.and_then(|_| {
        let summary = fs::read_to_string(out.join("summary.tsv")).map_err(|e| e.to_string())?;
        summary
            .lines()
            .find_map(|l| l.strip_prefix("ensemble\t"))
            .and_then(|v| v.parse::<f64>().ok())
            .ok_or_else(|| "no ensemble line in summary.tsv".to_string())
    });
    match f1 {
        Ok(f1) => {
            ok &= f1 >= MIN_TEST_F1;
            parts.push(format!("ensemble weighted test F1 {f1:.4} (need >= {MIN_TEST_F1})"));
        }
        Err(e) => {
            ok = false;
            parts.push(format!("reproduce failed: {e}"));
        }
    }
    check(ok, parts.join("; "))
}

fn main() {
    // libtest flags such as --nocapture are accepted and ignored; a name
    // filter that matches nothing here skips the suite.
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !filters.is_empty() && !filters.iter().any(|f| "acceptance".contains(f.as_str())) {
        return;
    }

    let mut unexpected = Vec::new();
    let mut run = |n: u32, name: &str, f: &dyn Fn() -> (Outcome, bool)| {
        let start = Instant::now();
        let (outcome, deviation_holds) = f();
        let secs = start.elapsed().as_secs_f64();
        let label = match outcome.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        };
        println!("criterion {n} {label} {name} [{secs:.1}s]: {}", outcome.detail);
        if let Status::Fail = outcome.status {
            match KNOWN_DEVIATIONS.iter().find(|(k, _)| *k == n) {
                Some((_, why)) if deviation_holds => println!("    known deviation: {why}"),
                _ => unexpected.push(n),
            }
        }
    };
    run(1, "gradient correctness", &|| (gradients(), false));
    run(2, "overfit smoke", &|| (overfit(), false));
    run(3, "ensemble oracle", &|| (ensemble_oracle(), false));
    run(4, "metric oracle", &|| (metric_oracle(), false));
    run(5, "stemmer conformance", &stemmer);
    run(6, "preprocessing goldens", &|| (preprocessing(), false));
    run(7, "determinism", &|| (determinism(), false));
    run(8, "dataset statistics and full recipe", &|| (dataset(), false));

    if !unexpected.is_empty() {
        eprintln!("acceptance: criteria {unexpected:?} failed");
        std::process::exit(1);
    }
}
