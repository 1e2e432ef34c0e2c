//! Checks the router against exhaustive search on seeded random graphs.

use apbda::router::route;
use apbda::verify::verify_batch;

fn main() {
    let report = verify_batch(8, 500, 0, route).unwrap();
    println!(
        "{} instances, {} agreed, {} unreachable",
        report.instances, report.passed, report.unreachable
    );
    for m in &report.mismatches {
        println!("seed {}: {}", m.seed, m.reason);
    }
}
