//! Reporting for the acceptance suite. The criteria live in `tests/acceptance.rs`.

use std::fmt;
use std::time::{Duration, Instant};

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Pass(String),
    Fail(String),
    /// Needs input that is not available here, such as the reference data file.
    NotRun(String),
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub number: u32,
    pub title: &'static str,
    pub verdict: Verdict,
    pub elapsed: Duration,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (tag, detail) = match &self.verdict {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => ("FAIL", d),
            Verdict::NotRun(d) => ("NOT RUN", d),
        };
        write!(
            f,
            "criterion {:>2} {:<8} {} ({:.2}s): {}",
            self.number,
            tag,
            self.title,
            self.elapsed.as_secs_f64(),
            detail
        )
    }
}

/// Run one criterion, print its line immediately, and return the outcome.
pub fn check(number: u32, title: &'static str, body: impl FnOnce() -> Verdict) -> Outcome {
    let started = Instant::now();
    let verdict = body();
    let outcome = Outcome {
        number,
        title,
        verdict,
        elapsed: started.elapsed(),
    };
    println!("{outcome}");
    outcome
}

/// Fail when the body passed but overran its time budget.
pub fn within(budget: Duration, outcome: Outcome) -> Outcome {
    match &outcome.verdict {
        Verdict::Pass(d) if outcome.elapsed > budget => Outcome {
            verdict: Verdict::Fail(format!(
                "{d}; took longer than the {:.0}s budget",
                budget.as_secs_f64()
            )),
            ..outcome
        },
        _ => outcome,
    }
}

pub fn pass_if(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

/// Print the tally and return the process exit status: 1 if anything failed.
pub fn summarize(outcomes: &[Outcome]) -> i32 {
    let count = |f: fn(&Verdict) -> bool| outcomes.iter().filter(|o| f(&o.verdict)).count();
    let passed = count(|v| matches!(v, Verdict::Pass(_)));
    let failed = count(|v| matches!(v, Verdict::Fail(_)));
    let not_run = count(|v| matches!(v, Verdict::NotRun(_)));
    println!("acceptance: {passed} passed, {failed} failed, {not_run} not run");
    i32::from(failed > 0)
}
