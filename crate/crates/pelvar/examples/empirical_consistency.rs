//! Convergence of the empirical flexibility index to its closed form
//! as the sample grows, plus the kernel-smoothed index curve.
//!
//! Run with: cargo run --release --example empirical_consistency

use pelvar::dist::{LossModel, ProbLevel};
use pelvar::empirical::{self, KernelConfig, Sample};
use pelvar::rng;

fn main() {
    let p = ProbLevel::new(0.95).unwrap();
    let families = [
        ("exp(1)", LossModel::exponential(1.0).unwrap()),
        ("lognormal(0,0.5)", LossModel::log_normal(0.0, 0.5).unwrap()),
        ("pareto(4,100)", LossModel::pareto_ii(4.0, 100.0).unwrap()),
    ];
    let sizes = [1_000, 10_000, 100_000];

    println!("mean absolute error of the empirical index over 30 replications:");
    for (name, model) in &families {
        let truth = model.theta_closed(p).unwrap();
        let curve = empirical::consistency_probe(model, p, &sizes, 30, 11).unwrap();
        print!("  {name:<18} true={truth:.4} ");
        for pt in &curve {
            print!(" n=10^{}: {:.5}", (pt.n as f64).log10() as u32, pt.mae);
        }
        println!();
    }

    // kernel smoothing flattens the order-statistic steps of the raw curve
    let model = LossModel::exponential(1.0).unwrap();
    let mut r = rng::stream_rng(3, 0);
    let sample = Sample::new(rng::sample_model(&model, 5_000, &mut r)).unwrap();
    let anchors = empirical::theta_anchors(&sample, 41).unwrap();
    println!("smoothed index curve from 41 anchors (n = 5000):");
    for &q in &[0.7, 0.8, 0.9, 0.95] {
        let q = ProbLevel::new(q).unwrap();
        let smooth = empirical::kernel_theta(&anchors, q, KernelConfig::default()).unwrap();
        let raw = empirical::empirical_theta(&sample, q).unwrap();
        let truth = model.theta_closed(q).unwrap();
        println!(
            "  p={:.2} smoothed={smooth:.4} raw={raw:.4} closed={truth:.4}",
            q.value()
        );
    }
}
