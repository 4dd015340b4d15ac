//! End-to-end claims workflow on a synthetic panel: per-year
//! statistics, annual risk curves, rolling one-year-ahead prediction,
//! and window tuning with an asymmetric loss.
//!
//! Point `--example claims_backtest` style runs at real data by
//! loading a CSV through `backtest::load_claims` instead of the
//! generator below.
//!
//! Run with: cargo run --release --example claims_backtest

use pelvar::backtest::{self, BacktestConfig, ClaimsTable};
use pelvar::dist::{LossModel, ProbLevel};
use pelvar::rng;

fn main() {
    // 15 stationary years of Exponential(0.01) claims
    let model = LossModel::exponential(0.01).unwrap();
    let mut records = Vec::new();
    for y in 0..15 {
        let mut r = rng::stream_rng(7, y as u64);
        for x in rng::sample_model(&model, 800, &mut r) {
            records.push((2005 + y, x));
        }
    }
    let table = ClaimsTable::from_records(records).unwrap();

    println!("per-year statistics:");
    for year in table.years().into_iter().take(3) {
        let s = backtest::describe(&table, year).unwrap();
        println!(
            "  {year}: n={} mean={:.1} sd={:.1} skew={:.2} kurt={:.2} max={:.1}",
            s.n,
            s.mean,
            s.sd,
            s.skewness.unwrap(),
            s.kurtosis.unwrap(),
            s.max
        );
    }

    let grid: Vec<ProbLevel> = [0.9, 0.95, 0.99]
        .iter()
        .map(|&p| ProbLevel::new(p).unwrap())
        .collect();
    println!("risk curves for 2005:");
    for pt in backtest::annual_risk_curves(&table, 2005, &grid).unwrap() {
        println!(
            "  p={:.2} var={:.1} es={:.1} theta={:.4}",
            pt.p,
            pt.var,
            pt.es.unwrap(),
            pt.theta.unwrap()
        );
    }

    let cfg = BacktestConfig {
        first_target: 2012,
        last_target: 2019,
        level: ProbLevel::new(0.95).unwrap(),
        window_var: 4,
        window_theta: 2,
        lambda_under: 2.0,
    };
    println!("one-year-ahead predictions (window_var=4, window_theta=2):");
    for r in backtest::predict_var(&table, &cfg).unwrap() {
        println!(
            "  {}: actual={:.1} var_hat={:.1} pelvar_hat={:.1}",
            r.year, r.actual_var, r.var_hat, r.pelvar_hat
        );
    }

    let windows = [1, 2, 4, 7];
    let (best, scores) = backtest::tune_windows(&table, &cfg, &windows, &windows).unwrap();
    println!(
        "tuned windows: var={} theta={} (searched {} pairs)",
        best.window_var,
        best.window_theta,
        scores.len()
    );
}
