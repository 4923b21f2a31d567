//! Prints one PASS/FAIL line per acceptance criterion and exits nonzero when any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use gfio_acceptance::{Setup, Verdict, CHECKS, CRITERIA};

fn outcome(run: impl FnOnce() -> gabor_fio::Result<Verdict>) -> (bool, String, f64) {
    let start = Instant::now();
    let (pass, detail) = match catch_unwind(AssertUnwindSafe(run)) {
        Ok(Ok(v)) => (v.pass, v.detail),
        Ok(Err(e)) => (false, format!("error: {e}")),
        Err(_) => (false, "panicked".to_string()),
    };
    (pass, detail, start.elapsed().as_secs_f64())
}

fn status(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn main() {
    let mut setup = Setup::new().expect("default frame");
    let mut failed = 0;
    for (n, label, run) in CRITERIA {
        let (pass, detail, secs) = outcome(|| run(&mut setup));
        failed += usize::from(!pass);
        println!("criterion {n} {label}: {} [{secs:.1}s] {detail}", status(pass));
    }
    println!("acceptance: {} of {} criteria passed", CRITERIA.len() - failed, CRITERIA.len());
    let mut checks_failed = 0;
    for (label, run) in CHECKS {
        let (pass, detail, secs) = outcome(|| run(&mut setup));
        checks_failed += usize::from(!pass);
        println!("check {label}: {} [{secs:.1}s] {detail}", status(pass));
    }
    println!("checks: {} of {} passed", CHECKS.len() - checks_failed, CHECKS.len());
    if failed + checks_failed > 0 {
        std::process::exit(1);
    }
}
