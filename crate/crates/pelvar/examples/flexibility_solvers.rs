//! The two inverse problems around the FES mixture:
//!
//! - probability-equal level: given theta, find the p where the index
//!   equals it (root finding);
//! - FES maximizer: for the same theta, maximize p -> FES_p(X; theta)
//!   directly (golden-section search).
//!
//! The maximizer lands on the same p and its value equals VaR there,
//! which is the identity the two routes cross-validate.
//!
//! Run with: cargo run --example flexibility_solvers

use pelvar::dist::{LossModel, ProbLevel};
use pelvar::measures::{self, RiskSource};

fn main() {
    let models = [
        ("exp(1)", LossModel::exponential(1.0).unwrap()),
        ("normal(0,1)", LossModel::normal(0.0, 1.0).unwrap()),
        ("pareto(2,100)", LossModel::pareto_ii(2.0, 100.0).unwrap()),
    ];
    for (name, model) in &models {
        let src = RiskSource::Analytic(model);
        println!("{name}");
        for &theta in &[0.005, 0.02, 0.1] {
            let p_root = measures::solve_p_theta(src, theta).unwrap();
            let (p_max, value) = measures::fes_maximizer(src, theta).unwrap();
            let var = src.var(p_root);
            println!(
                "  theta={theta:<6} p_root={:.6} p_max={:.6}  max FES={value:.6}  VaR={var:.6}",
                p_root.value(),
                p_max.value()
            );
            assert!((p_root.value() - p_max.value()).abs() < 1e-5);
            assert!((value - var).abs() / var.abs().max(1.0) < 1e-5);
        }
    }

    // round-trip the other way: p -> theta -> p
    let m = LossModel::log_normal(0.0, 1.0).unwrap();
    let src = RiskSource::Analytic(&m);
    println!("lognormal(0,1) round trips:");
    for &p in &[0.8, 0.9, 0.99] {
        let p = ProbLevel::new(p).unwrap();
        let theta = measures::theta_index(src, p).unwrap();
        let back = measures::solve_p_theta(src, theta).unwrap();
        println!(
            "  p={:.3} -> theta={theta:.6} -> p={:.9}",
            p.value(),
            back.value()
        );
    }
}
