use std::process::Command;
use std::time::{Duration, Instant};

use serde_json::Value;

use maad_core::artifact::{parse_package, validate_package};

use crate::common::{fixture, pinned_digest};
use crate::{oracle, Outcome};

/// One `maad run` of the bundled fixture with the replay backend.
pub struct CliRun {
    /// Keeps the output directory alive for later criteria.
    _out_dir: tempfile::TempDir,
    pub exit_code: Option<i32>,
    pub summary: Value,
    pub elapsed: Duration,
    pub package_bytes: Vec<u8>,
    pub stderr: String,
}

impl CliRun {
    pub fn execute() -> Self {
        let out_dir = tempfile::tempdir().unwrap();
        let started = Instant::now();
        let output = Command::new(env!("CARGO_BIN_EXE_maad"))
            .env("MAAD_DATA_DIR", out_dir.path().join("data"))
            .arg("run")
            .arg("--srs")
            .arg(fixture().join("srs.md"))
            .arg("--out")
            .arg(out_dir.path().join("out"))
            .arg("--backend")
            .arg(format!("replay:{}", fixture().join("replay").display()))
            .arg("--knowledge")
            .arg(fixture().join("knowledge"))
            .output()
            .expect("maad binary runs");
        let elapsed = started.elapsed();
        let summary = serde_json::from_slice(&output.stdout).unwrap_or(Value::Null);
        let package_bytes =
            std::fs::read(out_dir.path().join("out/package.json")).unwrap_or_default();
        CliRun {
            exit_code: output.status.code(),
            summary,
            elapsed,
            package_bytes,
            stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
            _out_dir: out_dir,
        }
    }
}

pub fn criterion(run: &CliRun) -> Outcome {
    let mut failures = Vec::new();
    if run.exit_code != Some(0) {
        failures.push(format!(
            "exit code {:?}: {}",
            run.exit_code,
            run.stderr.trim()
        ));
    }
    let pkg: Value = match serde_json::from_slice(&run.package_bytes) {
        Ok(v) => v,
        Err(e) => return Outcome::check(false, format!("package.json unreadable: {e}")),
    };
    if pkg["verdict"] != "confirmed" {
        failures.push(format!("verdict {}", pkg["verdict"]));
    }

    let journal =
        std::fs::read_to_string(run.summary["journal"].as_str().unwrap_or("")).unwrap_or_default();
    let lines: Vec<String> = journal.lines().map(str::to_string).collect();
    let evaluations = oracle::count_events(&lines, "EvaluationCompleted", None);
    if evaluations != 2 || pkg["round_count"] != 2 {
        failures.push(format!(
            "{evaluations} evaluations, round_count {}",
            pkg["round_count"]
        ));
    }

    let violations = parse_package(&run.package_bytes)
        .map(|p| validate_package(&p).len())
        .unwrap_or(usize::MAX);
    if violations != 0 {
        failures.push(format!("{violations} integrity violations"));
    }

    let (covered, tagged) = oracle::asr_coverage(&pkg);
    if covered != tagged || tagged == 0 {
        failures.push(format!("ASR coverage {covered}/{tagged}"));
    }

    let digest = oracle::sha256_hex(&run.package_bytes);
    let canonical = oracle::canonical_json(&pkg);
    if canonical.as_bytes() != run.package_bytes.as_slice() {
        failures.push("package.json is not in canonical form".into());
    }
    let pinned = pinned_digest();
    if digest != pinned || run.summary["package_digest"] != pinned.as_str() {
        failures.push(format!("digest {digest} != pinned {pinned}"));
    }

    if run.elapsed >= Duration::from_secs(10) {
        failures.push(format!("runtime {:.2}s", run.elapsed.as_secs_f64()));
    }

    Outcome::check(
        failures.is_empty(),
        if failures.is_empty() {
            format!(
                "confirmed in {evaluations} rounds, 0 violations, ASR coverage {covered}/{tagged}, digest {}…, {:.2}s",
                &digest[..12],
                run.elapsed.as_secs_f64()
            )
        } else {
            failures.join("; ")
        },
    )
}
