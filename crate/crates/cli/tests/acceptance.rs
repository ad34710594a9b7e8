//! One verdict line per primary criterion. Runs the bundled benchmark
//! manifest through the `plt` binary and the property suite in-process.

#[path = "../../core/tests/suite/mod.rs"]
mod suite;

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use preflearn::bench::{Reproduction, Verdict};

const SUITE_BUDGET: Duration = Duration::from_secs(300);

fn line(verdict: &str, criterion: &str, detail: &str) {
    println!("{verdict:<7} {criterion:<22} {detail}");
}

/// Fold the manifest checks of one criterion into a single verdict.
fn criterion(result: &Reproduction, name: &str) -> (&'static str, String) {
    let checks: Vec<_> = result.checks.iter().filter(|c| c.criterion == name).collect();
    if checks.is_empty() {
        return ("FAIL", "no checks in the manifest".into());
    }
    let detail = checks
        .iter()
        .map(|c| format!("{}: {} ({})", c.check, c.observed, c.threshold))
        .collect::<Vec<_>>()
        .join("; ");
    let verdict = if checks.iter().any(|c| c.verdict == Verdict::Fail) {
        "FAIL"
    } else if checks.iter().all(|c| c.verdict == Verdict::Waived) {
        "WAIVED"
    } else {
        "PASS"
    };
    (verdict, detail)
}

fn main() -> ExitCode {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let dir = tempfile::tempdir().expect("temporary directory");
    let json = dir.path().join("reproduction.json");
    let mut failed = false;

    let started = Instant::now();
    let output = Command::new(env!("CARGO_BIN_EXE_plt"))
        .current_dir(&root)
        .args(["reproduce", "--manifest", "configs/reproduce.json", "--json"])
        .arg(&json)
        .output()
        .expect("running plt");
    let elapsed = started.elapsed();
    print!("{}", String::from_utf8_lossy(&output.stdout));
    eprint!("{}", String::from_utf8_lossy(&output.stderr));

    let result: Option<Reproduction> = std::fs::read(&json).ok().and_then(|b| serde_json::from_slice(&b).ok());
    match &result {
        Some(r) => {
            for name in ["linear", "quadratic", "nonlinear", "sushi", "determinism", "model_round_trip"] {
                let (verdict, detail) = criterion(r, name);
                failed |= verdict == "FAIL";
                line(verdict, name, &detail);
            }
        }
        None => {
            failed = true;
            line("FAIL", "benchmarks", "plt reproduce wrote no results");
        }
    }
    let code = output.status.code();
    let ok = code == Some(0);
    failed |= !ok;
    line(
        if ok { "PASS" } else { "FAIL" },
        "cli_reproduction",
        &format!("plt reproduce exit {code:?} (expected 0) in {:.1}s", elapsed.as_secs_f64()),
    );

    let started = Instant::now();
    let mut suite_ok = true;
    for (name, check) in suite::all() {
        let t = Instant::now();
        let r = check();
        let detail = format!("{name} ({:.2}s)", t.elapsed().as_secs_f64());
        match r {
            Ok(()) => line("PASS", "property_suite", &detail),
            Err(e) => {
                suite_ok = false;
                line("FAIL", "property_suite", &format!("{detail}: {e}"));
            }
        }
    }
    let total = started.elapsed();
    let in_budget = total < SUITE_BUDGET;
    line(
        if suite_ok && in_budget { "PASS" } else { "FAIL" },
        "property_suite",
        &format!("total {:.1}s (limit {}s)", total.as_secs_f64(), SUITE_BUDGET.as_secs()),
    );
    failed |= !(suite_ok && in_budget);

    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
