//! Acceptance criteria 1 to 12 through the experiment registry, at the registered defaults and
//! seed 0. Prints one line per criterion and exits nonzero if any fails.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use coherent_projection::experiments::registry;

const CRITERIA: [&str; 12] = [
    "overlap-oracle",
    "projector-axioms",
    "projected-p-kernel",
    "delta-limit",
    "su2-kernel",
    "gauge-independence",
    "flpr",
    "second-class",
    "trotter-order",
    "three-routes",
    "rkhs-properties",
    "surface-constant",
];

fn main() -> ExitCode {
    let mut failed = Vec::new();
    for (k, (exp, name)) in registry().iter().zip(CRITERIA).enumerate() {
        let number = k + 1;
        assert_eq!(exp.name, name, "registry order changed");
        let start = Instant::now();
        match exp.run(&BTreeMap::new(), 0) {
            Ok(r) => {
                let verdict = if r.passed() { "PASS" } else { "FAIL" };
                println!(
                    "criterion {number:>2} {name:<20} {verdict}  worst residual/tolerance {:.3e}  ({:.1} s)",
                    r.worst_ratio(),
                    start.elapsed().as_secs_f64()
                );
                for row in r.failing() {
                    println!("    {}: residual {:.3e} > tolerance {:.3e}", row.quantity, row.residual, row.tolerance);
                }
                if !r.passed() {
                    failed.push(number);
                }
            }
            Err(e) => {
                println!("criterion {number:>2} {name:<20} FAIL  {e}");
                failed.push(number);
            }
        }
    }
    if failed.is_empty() {
        println!("all {} criteria pass", CRITERIA.len());
        ExitCode::SUCCESS
    } else {
        println!("failing criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
