//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! `cargo test -p maad --test acceptance`

#[path = "../common/mod.rs"]
mod common;

mod clarification;
mod end_to_end;
mod evaluator;
mod oracle;
mod parity;
mod replay;
mod retrieval;
mod termination;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    pub fn check(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    payload
        .downcast_ref::<String>()
        .cloned()
        .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "panicked".to_string())
}

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn main() {
    // Shared between the end-to-end and parity criteria.
    let cli_run = end_to_end::CliRun::execute();

    let criteria: Vec<Criterion> = vec![
        (
            "end-to-end fixture run",
            Box::new(|| end_to_end::criterion(&cli_run)),
        ),
        ("termination property", Box::new(termination::criterion)),
        ("diagram DSL round-trip", Box::new(dsl::criterion)),
        (
            "retrieval oracle equivalence",
            Box::new(retrieval::criterion),
        ),
        (
            "evaluator mutation suite",
            Box::new(|| evaluator::criterion(&cli_run)),
        ),
        ("journal replay fidelity", Box::new(replay::criterion)),
        ("clarification gate", Box::new(clarification::criterion)),
        (
            "CLI/service parity",
            Box::new(|| parity::criterion(&cli_run)),
        ),
    ];

    println!("\nacceptance criteria");
    let total = criteria.len();
    let mut failed = 0;
    for (i, (name, run)) in criteria.into_iter().enumerate() {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| Outcome {
            pass: false,
            detail: format!("panic: {}", panic_message(p)),
        });
        if !outcome.pass {
            failed += 1;
        }
        println!(
            "{} [{}/{total}] {name} ({:.2}s): {}",
            if outcome.pass { "PASS" } else { "FAIL" },
            i + 1,
            started.elapsed().as_secs_f64(),
            outcome.detail
        );
    }
    println!("\n{} passed, {failed} failed\n", total - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
