//! Runner for the acceptance checks: each check runs on its own thread and reports one
//! PASS/FAIL line.

use std::time::{Duration, Instant};

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

pub type Check = fn() -> Result<Verdict, String>;

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: usize,
    pub name: &'static str,
    pub verdict: Verdict,
    pub elapsed: Duration,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {:<28} {} ({:.1} s) {}",
            self.id,
            self.name,
            if self.verdict.pass { "PASS" } else { "FAIL" },
            self.elapsed.as_secs_f64(),
            self.verdict.detail
        )
    }
}

/// Runs every check concurrently; results come back in input order. Errors and panics
/// count as failures.
pub fn run_checks(checks: &[(usize, &'static str, Check)]) -> Vec<Outcome> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = checks
            .iter()
            .map(|&(id, name, check)| {
                scope.spawn(move || {
                    let start = Instant::now();
                    let verdict = match std::panic::catch_unwind(check) {
                        Ok(Ok(v)) => v,
                        Ok(Err(e)) => Verdict::new(false, format!("error: {e}")),
                        Err(_) => Verdict::new(false, "panicked"),
                    };
                    Outcome { id, name, verdict, elapsed: start.elapsed() }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("runner thread failed")).collect()
    })
}

/// True when the values strictly decrease.
pub fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn passing() -> Result<Verdict, String> {
        Ok(Verdict::new(true, "ok"))
    }

    fn erroring() -> Result<Verdict, String> {
        Err("boom".into())
    }

    #[test]
    fn runner_keeps_order_and_maps_errors() {
        let out = run_checks(&[(1, "a", passing), (2, "b", erroring)]);
        assert_eq!(out[0].id, 1);
        assert!(out[0].verdict.pass);
        assert!(!out[1].verdict.pass);
        assert!(out[1].line().contains("FAIL"));
    }

    #[test]
    fn decreasing() {
        assert!(strictly_decreasing(&[3.0, 2.0, 1.0]));
        assert!(!strictly_decreasing(&[3.0, 3.0]));
    }
}
