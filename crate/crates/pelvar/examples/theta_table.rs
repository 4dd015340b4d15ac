//! Closed-form flexibility indices across standard loss families,
//! laid out as levels × families.
//!
//! Run with: cargo run --example theta_table

use pelvar::dist::{LossModel, ProbLevel};

fn main() {
    let families = [
        ("uniform(0,1)", LossModel::uniform(0.0, 1.0).unwrap()),
        ("exp(1)", LossModel::exponential(1.0).unwrap()),
        ("normal(0,1)", LossModel::normal(0.0, 1.0).unwrap()),
        ("lognormal(0,1)", LossModel::log_normal(0.0, 1.0).unwrap()),
        ("t(4)", LossModel::student_t(4.0, 0.0, 1.0).unwrap()),
        ("pareto(2,100)", LossModel::pareto_ii(2.0, 100.0).unwrap()),
        ("gamma(1.5,1)", LossModel::gamma(1.5, 1.0).unwrap()),
        ("weibull(1.5,1)", LossModel::weibull(1.5, 1.0).unwrap()),
        ("gev(0,1,0.2)", LossModel::gev(0.0, 1.0, 0.2).unwrap()),
    ];
    let levels = [0.9, 0.95, 0.975, 0.99, 0.995];

    print!("{:>8}", "p");
    for (name, _) in &families {
        print!("  {name:>14}");
    }
    println!();
    for &p in &levels {
        let p = ProbLevel::new(p).unwrap();
        print!("{:>8.3}", p.value());
        for (_, model) in &families {
            match model.theta_closed(p) {
                Ok(theta) => print!("  {theta:>14.4}"),
                Err(_) => print!("  {:>14}", "n/a"),
            }
        }
        println!();
    }

    println!();
    println!("D_X lower bounds (theta is defined only above these levels):");
    for (name, model) in &families {
        println!("  {name:<16} {:.4}", model.dx_lower_bound());
    }
}
