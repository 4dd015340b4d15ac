//! VaR, ES, theta, and PELVaR curves for one analytic model and one
//! simulated sample of the same model, side by side.
//!
//! PELVaR coincides with VaR on D_X by construction; the point of the
//! comparison is that the empirical curve converges to the analytic one.
//!
//! Run with: cargo run --example risk_curves

use pelvar::dist::{LossModel, ProbLevel};
use pelvar::empirical::Sample;
use pelvar::measures::{self, RiskSource};
use pelvar::rng;

fn main() {
    let model = LossModel::log_normal(0.0, 1.0).unwrap();
    let mut r = rng::stream_rng(2024, 0);
    let sample = Sample::new(rng::sample_model(&model, 100_000, &mut r)).unwrap();

    println!(
        "{:>7} {:>10} {:>10} {:>10} {:>10}   {:>10} {:>10} {:>10}",
        "p", "var", "es", "theta", "pelvar", "var_emp", "es_emp", "theta_emp"
    );
    for &p in &[0.75, 0.8, 0.85, 0.9, 0.95, 0.975, 0.99, 0.995] {
        let p = ProbLevel::new(p).unwrap();
        let a = RiskSource::Analytic(&model);
        let e = RiskSource::Empirical(&sample);
        println!(
            "{:>7.3} {:>10.4} {:>10.4} {:>10.4} {:>10.4}   {:>10.4} {:>10.4} {:>10.4}",
            p.value(),
            a.var(p),
            a.es(p).unwrap(),
            measures::theta_index(a, p).unwrap(),
            measures::pelvar(a, p).unwrap(),
            e.var(p),
            e.es(p).unwrap(),
            measures::theta_index(e, p).unwrap(),
        );
    }
}
