//! Acceptance suite: runs `verify all` on the default configuration and prints
//! one PASS/FAIL line per criterion. Thresholds and runtime bounds are pinned
//! here, independently of the configuration defaults.

use sl2lab::config::RunConfig;
use sl2lab::verify::{run_suite, Report, Suite, Timing};

/// (criterion, record name, pinned thresholds in measurement order, runtime bound in seconds)
const CRITERIA: [(u32, &str, &[f64], f64); 11] = [
    (1, "structure.round_trips", &[1e-10, 1e-10, 1e-12], 5.0),
    (2, "spherical.identities", &[0.0, 1e-10, 1e-6], 120.0),
    (3, "spherical.casimir", &[1e-4, 1e-4, 1e-4, 1e-4, 1e-4], 60.0),
    (4, "spherical.c_function", &[1e-3, 5e-4, 1e-4], 120.0),
    (5, "transforms.algebra", &[1e-4, 1e-6, 1e-3], 300.0),
    (6, "packets.inversion", &[1e-3, 1e-3, 1e-3, 1e-3, 1e-3, 1e-3], 300.0),
    (7, "packets.factorization", &[1e-3, 1e-12, 1e-3], 300.0),
    (8, "packets.operator_identity", &[1e-14, 1e-3, 5e-3], 180.0),
    (9, "packets.projection", &[1e-3, 1e-3, 1e-3], 300.0),
    (10, "packets.seminorms", &[0.05, 0.05, 0.0], 180.0),
    (11, "determinism", &[0.0, 0.0], 1800.0),
];

fn seconds(timings: &[Timing], name: &str) -> f64 {
    timings.iter().find(|t| t.name == name).map(|t| t.seconds).unwrap_or(f64::NAN)
}

fn check(report: &Report, timings: &[Timing]) -> Vec<String> {
    let mut failures = Vec::new();
    for &(n, name, thresholds, budget) in &CRITERIA {
        let Some(rec) = report.criterion(n) else {
            failures.push(format!("criterion {n}: no record"));
            println!("FAIL criterion {n:>2} {name}: missing");
            continue;
        };
        let mut problems = Vec::new();
        if rec.name != name {
            problems.push(format!("record name {} != {name}", rec.name));
        }
        let got: Vec<f64> = rec.measurements.iter().map(|m| m.threshold).collect();
        if got != thresholds {
            problems.push(format!("thresholds {got:?} differ from pinned {thresholds:?}"));
        }
        for m in &rec.measurements {
            if !(m.value <= m.threshold) {
                problems.push(format!("{} = {:e} exceeds {:e}", m.label, m.value, m.threshold));
            }
        }
        let secs = seconds(timings, name);
        if !(secs <= budget) {
            problems.push(format!("runtime {secs:.1}s exceeds {budget}s"));
        }
        let ok = problems.is_empty() && rec.pass;
        println!(
            "{} criterion {n:>2} {name:<28} value {:.3e} threshold {:.1e}, {secs:.2}s (bound {budget}s)",
            if ok { "PASS" } else { "FAIL" },
            rec.value,
            rec.threshold,
        );
        for m in &rec.measurements {
            println!("       {:<60} {:>11.3e} <= {:.1e}", m.label, m.value, m.threshold);
        }
        for p in &problems {
            println!("       problem: {p}");
        }
        if !ok {
            failures.push(format!("criterion {n} ({name}): {}", problems.join("; ")));
        }
    }
    failures
}

#[test]
fn acceptance_criteria() {
    let cfg = RunConfig::default();
    let (report, timings) = run_suite(&cfg, Suite::All).expect("suite runs");
    let failures = check(&report, &timings);
    let invariants: Vec<_> = report.records.iter().filter(|r| r.criterion.is_none()).collect();
    for r in &invariants {
        println!(
            "{} invariant {:<34} value {:.3e} threshold {:.1e}",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.value,
            r.threshold
        );
    }
    let total: f64 = timings.iter().map(|t| t.seconds).sum();
    println!("full suite including the determinism re-run: {total:.1}s (bound 1800s)");
    assert!(total <= 1800.0);
    assert!(failures.is_empty(), "failed criteria:\n{}", failures.join("\n"));
    assert!(invariants.iter().all(|r| r.pass), "an invariant record failed");
    assert!(report.pass);
}
