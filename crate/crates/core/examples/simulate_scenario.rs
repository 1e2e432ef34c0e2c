//! Runs the bundled demo scenario and prints its summary.
//!
//! ```text
//! cargo run --example simulate_scenario -- [scenario.toml]
//! ```

use apbda::scenario::load_scenario;
use apbda::sim::run;

fn main() {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/demo.toml").into());
    let scenario = match load_scenario(&path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(1);
        }
    };
    let report = run(&scenario).expect("valid scenario");
    let summary = report.summary(scenario.rl.high_priority_threshold);
    println!("{}", serde_json::to_string_pretty(&summary).unwrap());
    for w in report.windows.iter().step_by(5) {
        println!("window {:>3} reward {:.4} w4 {:.3}", w.window_id, w.reward, w.weights.get(4));
    }
}
