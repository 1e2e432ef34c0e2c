//! Learned weights against frozen uniform weights on the two-regime
//! scenario.
//!
//! ```text
//! cargo run --release --example rl_adaptation -- [seeds] [windows] [first_seed]
//! ```

use apbda::scenario::load_scenario;
use apbda::sim::run;
use rayon::prelude::*;

fn tail_mean(rewards: &[f64]) -> f64 {
    let take = (rewards.len() as f64 * 0.2).ceil() as usize;
    let tail = &rewards[rewards.len() - take..];
    tail.iter().sum::<f64>() / tail.len() as f64
}

fn main() {
    let mut args = std::env::args().skip(1);
    let seeds: u64 = args.next().map_or(5, |s| s.parse().expect("seed count"));
    let windows: usize = args.next().map_or(300, |s| s.parse().expect("window count"));
    let first: u64 = args.next().map_or(0, |s| s.parse().expect("first seed"));
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/two_regime.toml");
    let base = load_scenario(path).expect("bundled scenario");

    let rows: Vec<(u64, f64, f64, f64)> = (first..first + seeds)
        .into_par_iter()
        .map(|seed| {
            let mut learned = base.clone();
            learned.sim.seed = seed;
            let mut frozen = learned.clone();
            frozen.rl.enabled = false;
            let a = run(&learned).expect("run");
            let b = run(&frozen).expect("run");
            let rewards = |r: &apbda::sim::RunReport| -> Vec<f64> {
                assert!(r.windows.len() >= windows, "only {} windows", r.windows.len());
                r.windows[..windows].iter().map(|w| w.reward).collect()
            };
            let w4 = a.windows[windows - 1].weights.get(4);
            (seed, tail_mean(&rewards(&a)), tail_mean(&rewards(&b)), w4)
        })
        .collect();

    println!("seed  learned  frozen   w4");
    for (seed, l, f, w4) in &rows {
        println!("{seed:>4}  {l:.4}   {f:.4}   {w4:.3}");
    }
    let n = rows.len() as f64;
    let stats = |xs: Vec<f64>| {
        let m = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        (m, var)
    };
    let (ml, vl) = stats(rows.iter().map(|r| r.1).collect());
    let (mf, vf) = stats(rows.iter().map(|r| r.2).collect());
    let se = (vl / n + vf / n).sqrt();
    println!("learned {ml:.4}  frozen {mf:.4}  diff {:.4}  2*SE {:.4}", ml - mf, 2.0 * se);
}
