//! The Flexible Expected Shortfall (FES) mixture, the θ flexibility
//! index, and PELVaR (probability-equal-level Value at Risk).
//!
//! FES_p(X; θ) = ((1−p)/(1−p+θ))·ES_p(X) + (θ/(1−p+θ))·𝔼[X]
//!
//! interpolates between ES (θ → 0) and the mean (θ → ∞). The index
//!
//! θ_p(X) = (1−p)·(ES_p(X) − VaR_p(X)) / (VaR_p(X) − 𝔼[X])
//!
//! is the unique θ at which the mixture collapses onto VaR_p(X); FES at
//! that θ is PELVaR, a coherent risk measure that reproduces VaR at the
//! chosen level. θ_p is defined on D_X = { p : VaR_p(X) > 𝔼[X] }, is
//! scale and location invariant, and is decreasing in p.

use serde::Serialize;

use crate::dist::{LossModel, ProbLevel};
use crate::empirical::{self, Sample};
use crate::error::{Result, RiskError};

/// A loss description that the measures can be evaluated on: either a
/// parametric model or a sample of observations.
#[derive(Debug, Clone, Copy)]
pub enum RiskSource<'a> {
    Analytic(&'a LossModel),
    Empirical(&'a Sample),
}

impl<'a> RiskSource<'a> {
    pub fn mean(&self) -> f64 {
        match self {
            RiskSource::Analytic(m) => m.mean(),
            RiskSource::Empirical(s) => s.mean(),
        }
    }

    /// Value at Risk: the p-quantile of the loss.
    pub fn var(&self, p: ProbLevel) -> f64 {
        match self {
            RiskSource::Analytic(m) => m.quantile(p),
            RiskSource::Empirical(s) => empirical::empirical_quantile(s, p),
        }
    }

    pub fn es(&self, p: ProbLevel) -> Result<f64> {
        match self {
            RiskSource::Analytic(m) => m.es(p),
            RiskSource::Empirical(s) => empirical::empirical_es(s, p),
        }
    }

    /// Infimum of D_X: F(𝔼[X]) for models, F̂(X̄) for samples.
    pub fn dx_lower_bound(&self) -> f64 {
        match self {
            RiskSource::Analytic(m) => m.dx_lower_bound(),
            RiskSource::Empirical(s) => s.cdf_at(s.mean()),
        }
    }
}

/// Everything the toolkit knows about one (source, level) pair.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RiskAssessment {
    pub p: ProbLevel,
    pub var: f64,
    pub es: f64,
    pub mean: f64,
    pub theta: f64,
    pub fes: f64,
    pub pelvar: f64,
}

/// FES_p(X; θ) for θ > 0. Lies in [𝔼[X], ES_p(X)].
pub fn fes(source: RiskSource, p: ProbLevel, theta: f64) -> Result<f64> {
    if !(theta.is_finite() && theta > 0.0) {
        return Err(RiskError::domain(format!(
            "FES requires theta > 0, got {theta}"
        )));
    }
    let w = 1.0 - p.value();
    let es = source.es(p)?;
    let mean = source.mean();
    Ok((w * es + theta * mean) / (w + theta))
}

/// The flexibility index θ_p(X) by its definition.
pub fn theta_index(source: RiskSource, p: ProbLevel) -> Result<f64> {
    let mean = source.mean();
    let var = source.var(p);
    if var <= mean {
        let bound = source.dx_lower_bound();
        return Err(RiskError::domain(format!(
            "theta index diverges at the boundary of D_X = ({bound:.6}, 1): \
             VaR_{}(X) = {var:.6} does not exceed the mean {mean:.6}",
            p.value()
        )));
    }
    let es = source.es(p)?;
    Ok((1.0 - p.value()) * (es - var) / (var - mean))
}

/// PELVaR_p(X) = FES_p(X; θ_p(X)). Equals VaR_p(X) identically on D_X.
pub fn pelvar(source: RiskSource, p: ProbLevel) -> Result<f64> {
    fes(source, p, theta_index(source, p)?)
}

/// Full assessment at level p; `fes` is evaluated at `theta_override`
/// when given, otherwise at θ_p (making it equal to PELVaR).
pub fn assess(source: RiskSource, p: ProbLevel, theta_override: Option<f64>) -> Result<RiskAssessment> {
    let theta = theta_index(source, p)?;
    let fes_theta = theta_override.unwrap_or(theta);
    let fes_value = fes(source, p, fes_theta)?;
    let pelvar_value = fes(source, p, theta)?;
    Ok(RiskAssessment {
        p,
        var: source.var(p),
        es: source.es(p)?,
        mean: source.mean(),
        theta,
        fes: fes_value,
        pelvar: pelvar_value,
    })
}

/// The probability-equal-level solver: the unique p ∈ D_X with
/// θ_p(X) = θ. Inverse of `theta_index` in p.
///
/// θ_p decreases from +∞ at the D_X boundary to 0 as p → 1, so a sign
/// change of θ_p − θ is bracketed on the whole of D_X. Bisection
/// narrows the bracket below 1e-4, then secant steps polish the root.
pub fn solve_p_theta(source: RiskSource, theta: f64) -> Result<ProbLevel> {
    if !(theta.is_finite() && theta > 0.0) {
        return Err(RiskError::domain(format!(
            "solver requires theta > 0, got {theta}"
        )));
    }
    const EPS: f64 = 1e-9;
    let mut lo = source.dx_lower_bound() + EPS;
    let mut hi = match source {
        RiskSource::Analytic(_) => 1.0 - EPS,
        // highest level with a nonempty exceedance set
        RiskSource::Empirical(s) => (s.len() as f64 - 1.0) / s.len() as f64 - EPS,
    };
    let g = |p: f64| -> Result<f64> { Ok(theta_index(source, ProbLevel::new(p)?)? - theta) };
    let mut g_lo = g(lo)?;
    let g_hi = g(hi)?;
    if g_lo.signum() == g_hi.signum() {
        return Err(RiskError::computation(format!(
            "failed to bracket theta = {theta}: theta_p spans [{:.3e}, {:.3e}] on ({lo:.9}, {hi:.9})",
            g_hi + theta,
            g_lo + theta
        )));
    }
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        let g_mid = g(mid)?;
        if g_mid == 0.0 {
            return ProbLevel::new(mid);
        }
        if g_mid.signum() == g_lo.signum() {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    // secant refinement inside the bracket
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (g(a)?, g(b)?);
    for _ in 0..60 {
        if (b - a).abs() < 1e-14 || fb == fa {
            break;
        }
        let c = (b - fb * (b - a) / (fb - fa)).clamp(lo, hi);
        let fc = g(c)?;
        a = b;
        fa = fb;
        b = c;
        fb = fc;
        if fb.abs() < 1e-13 {
            break;
        }
    }
    ProbLevel::new(b)
}

/// Maximize p ↦ FES_p(X; θ) over (0, 1).
///
/// The mixture tends to 𝔼[X] at both endpoints and is unimodal with its
/// peak exactly where FES crosses VaR, so the maximizer coincides with
/// `solve_p_theta(θ)` and the maximum value is VaR at that level. This
/// routine finds it by direct golden-section search, independent of the
/// root-finding route, so the two can cross-validate each other.
pub fn fes_maximizer(source: RiskSource, theta: f64) -> Result<(ProbLevel, f64)> {
    if !(theta.is_finite() && theta > 0.0) {
        return Err(RiskError::domain(format!(
            "FES maximizer requires theta > 0, got {theta}"
        )));
    }
    let f = |p: f64| -> Result<f64> { fes(source, ProbLevel::new(p)?, theta) };
    let (mut a, mut b) = (1e-9, 1.0 - 1e-9);
    // coarse scan to localize the peak before golden-section
    let mut best = (a, f(a)?);
    for i in 1..=200 {
        let p = a + (b - a) * i as f64 / 200.0;
        let v = f(p)?;
        if v > best.1 {
            best = (p, v);
        }
    }
    let step = (b - a) / 200.0;
    a = (best.0 - step).max(1e-9);
    b = (best.0 + step).min(1.0 - 1e-9);
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > 1e-10 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    let p = ProbLevel::new(0.5 * (a + b))?;
    let value = fes(source, p, theta)?;
    Ok((p, value))
}

/// Verdict of a θ-order comparison on a probability grid.
#[derive(Debug, Clone, Serialize)]
pub struct ThetaOrder {
    /// True iff the right-spread ratio is nondecreasing along the grid.
    pub holds: bool,
    /// (ES_p(Y) − 𝔼Y)/(ES_p(X) − 𝔼X) at each grid point.
    pub ratios: Vec<f64>,
    /// θ_p(X) ≤ θ_p(Y) at each grid point.
    pub pointwise: Vec<bool>,
}

/// Test whether X precedes Y in the θ-order on the given grid: the
/// right-spread ratio (ES_p(Y) − 𝔼Y)/(ES_p(X) − 𝔼X) must be
/// nondecreasing, which is equivalent to θ_p(X) ≤ θ_p(Y) pointwise.
pub fn theta_order_holds(
    x: RiskSource,
    y: RiskSource,
    grid: &[ProbLevel],
) -> Result<ThetaOrder> {
    let lo = x.dx_lower_bound().max(y.dx_lower_bound());
    let usable: Vec<ProbLevel> = grid.iter().copied().filter(|p| p.value() > lo).collect();
    if usable.is_empty() {
        return Err(RiskError::domain(format!(
            "no grid point lies inside D_X ∩ D_Y = ({lo:.6}, 1)"
        )));
    }
    if usable.windows(2).any(|w| w[1].value() <= w[0].value()) {
        return Err(RiskError::domain(
            "theta-order grid must be strictly ascending".to_string(),
        ));
    }
    let mut ratios = Vec::with_capacity(usable.len());
    let mut pointwise = Vec::with_capacity(usable.len());
    for &p in &usable {
        let sx = x.es(p)? - x.mean();
        let sy = y.es(p)? - y.mean();
        ratios.push(sy / sx);
        pointwise.push(theta_index(x, p)? <= theta_index(y, p)? + 1e-10);
    }
    let holds = ratios
        .windows(2)
        .all(|w| w[1] >= w[0] - 1e-10 * w[0].abs().max(1.0));
    Ok(ThetaOrder {
        holds,
        ratios,
        pointwise,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pl(p: f64) -> ProbLevel {
        ProbLevel::new(p).unwrap()
    }

    #[test]
    fn fes_hand_evaluation_exponential() {
        let m = LossModel::exponential(1.0).unwrap();
        let v = fes(RiskSource::Analytic(&m), pl(0.95), 0.05).unwrap();
        // (0.05·3.995732 + 0.05·1)/0.10
        assert_relative_eq!(v, 2.497866136776996, max_relative = 1e-9);
    }

    #[test]
    fn fes_limits() {
        let m = LossModel::exponential(1.0).unwrap();
        let s = RiskSource::Analytic(&m);
        let p = pl(0.95);
        let es = m.es(p).unwrap();
        assert_relative_eq!(fes(s, p, 1e-12).unwrap(), es, max_relative = 1e-9);
        assert_relative_eq!(fes(s, p, 1e12).unwrap(), m.mean(), max_relative = 1e-9);
        assert!(fes(s, p, 0.0).is_err());
        assert!(fes(s, p, -1.0).is_err());
    }

    #[test]
    fn fes_boundary_levels_approach_mean() {
        let m = LossModel::log_normal(0.0, 1.0).unwrap();
        let s = RiskSource::Analytic(&m);
        for &p in &[1e-7, 1.0 - 1e-7] {
            let v = fes(s, pl(p), 0.5).unwrap();
            assert_relative_eq!(v, m.mean(), max_relative = 1e-3);
        }
    }

    #[test]
    fn theta_index_location_scale_invariant() {
        let base = LossModel::normal(0.0, 1.0).unwrap();
        let p = pl(0.9);
        let t0 = theta_index(RiskSource::Analytic(&base), p).unwrap();
        for &(a, b) in &[(0.5, -5.0), (3.0, 0.0), (100.0, 7.0)] {
            let m = LossModel::normal(b, a).unwrap();
            let t = theta_index(RiskSource::Analytic(&m), p).unwrap();
            assert_relative_eq!(t, t0, max_relative = 1e-9);
        }
        // Table 1 value: Normal at p = 0.9
        assert_relative_eq!(t0, 0.0369420760, epsilon = 5e-9);
    }

    #[test]
    fn theta_index_matches_closed_forms() {
        let cases: [(LossModel, f64, f64); 3] = [
            (LossModel::exponential(7.0).unwrap(), 0.95, 0.0250534607),
            (LossModel::student_t(4.0, 0.0, 1.0).unwrap(), 0.95, 0.0251196198),
            (LossModel::uniform(0.0, 1.0).unwrap(), 0.9, 0.0125),
        ];
        for (m, p, want) in cases {
            let got = theta_index(RiskSource::Analytic(&m), pl(p)).unwrap();
            assert_relative_eq!(got, want, epsilon = 5e-9);
            assert_relative_eq!(got, m.theta_closed(pl(p)).unwrap(), max_relative = 1e-10);
        }
    }

    #[test]
    fn theta_index_strictly_decreasing() {
        let m = LossModel::log_normal(0.0, 1.0).unwrap();
        let s = RiskSource::Analytic(&m);
        let lo = m.dx_lower_bound();
        let mut prev = f64::INFINITY;
        for i in 1..30 {
            let p = lo + (0.999 - lo) * i as f64 / 30.0;
            let t = theta_index(s, pl(p)).unwrap();
            assert!(t < prev, "theta not decreasing at p={p}");
            prev = t;
        }
    }

    #[test]
    fn pelvar_equals_var_on_dx() {
        let models = [
            LossModel::exponential(1.0).unwrap(),
            LossModel::uniform(0.0, 1.0).unwrap(),
            LossModel::pareto_ii(2.0, 100.0).unwrap(),
            LossModel::gev(0.0, 1.0, 0.3).unwrap(),
        ];
        for m in &models {
            let s = RiskSource::Analytic(m);
            let lo = m.dx_lower_bound();
            for i in 1..=50 {
                let p = pl(lo + (0.9999 - lo) * i as f64 / 51.0);
                let v = m.quantile(p);
                let pv = pelvar(s, p).unwrap();
                assert!(
                    (pv - v).abs() <= 1e-10 * v.abs().max(1.0),
                    "{m:?} p={} pelvar={pv} var={v}",
                    p.value()
                );
            }
        }
    }

    #[test]
    fn pelvar_specific_values() {
        let m = LossModel::exponential(1.0).unwrap();
        assert_relative_eq!(
            pelvar(RiskSource::Analytic(&m), pl(0.95)).unwrap(),
            2.995732273553991,
            max_relative = 1e-10
        );
        let m = LossModel::uniform(0.0, 1.0).unwrap();
        assert_relative_eq!(
            pelvar(RiskSource::Analytic(&m), pl(0.9)).unwrap(),
            0.9,
            max_relative = 1e-10
        );
        let m = LossModel::pareto_ii(2.0, 100.0).unwrap();
        assert_relative_eq!(
            pelvar(RiskSource::Analytic(&m), pl(0.975)).unwrap(),
            100.0 * (0.025f64.powf(-0.5) - 1.0),
            max_relative = 1e-10
        );
    }

    #[test]
    fn pelvar_outside_dx_is_domain_error() {
        let m = LossModel::normal(0.0, 1.0).unwrap();
        assert!(pelvar(RiskSource::Analytic(&m), pl(0.3)).is_err());
    }

    #[test]
    fn solver_inverts_theta_index() {
        let m = LossModel::exponential(1.0).unwrap();
        let s = RiskSource::Analytic(&m);
        let p = solve_p_theta(s, 0.0250534607).unwrap();
        assert!((p.value() - 0.95).abs() < 5e-4, "p = {}", p.value());
        let m = LossModel::uniform(0.0, 1.0).unwrap();
        let s = RiskSource::Analytic(&m);
        let p = solve_p_theta(s, 0.0125).unwrap();
        assert!((p.value() - 0.9).abs() < 5e-4, "p = {}", p.value());
    }

    #[test]
    fn solver_round_trips() {
        let m = LossModel::log_normal(0.0, 1.0).unwrap();
        let s = RiskSource::Analytic(&m);
        for &theta in &[0.002, 0.02, 0.1, 0.5] {
            let p = solve_p_theta(s, theta).unwrap();
            assert_relative_eq!(theta_index(s, p).unwrap(), theta, max_relative = 1e-8);
        }
        for &p in &[0.75, 0.9, 0.99] {
            let theta = theta_index(s, pl(p)).unwrap();
            let back = solve_p_theta(s, theta).unwrap();
            assert_relative_eq!(back.value(), p, max_relative = 1e-8);
        }
    }

    #[test]
    fn solver_is_monotone_in_theta() {
        let m = LossModel::gamma(1.5, 1.0).unwrap();
        let s = RiskSource::Analytic(&m);
        let p1 = solve_p_theta(s, 0.01).unwrap();
        let p2 = solve_p_theta(s, 0.05).unwrap();
        assert!(p1.value() > p2.value());
    }

    #[test]
    fn maximizer_agrees_with_solver() {
        let m = LossModel::exponential(1.0).unwrap();
        let s = RiskSource::Analytic(&m);
        let (p, value) = fes_maximizer(s, 0.0250534607).unwrap();
        assert!((p.value() - 0.95).abs() < 1e-6, "p = {}", p.value());
        assert_relative_eq!(value, 2.995732273553991, max_relative = 1e-6);

        let m = LossModel::normal(0.0, 1.0).unwrap();
        let s = RiskSource::Analytic(&m);
        let (p, value) = fes_maximizer(s, 0.0369420760).unwrap();
        assert!((p.value() - 0.9).abs() < 1e-6, "p = {}", p.value());
        assert_relative_eq!(value, 1.2815515655446004, max_relative = 1e-6);
    }

    #[test]
    fn maximizer_dominates_neighbors() {
        let m = LossModel::pareto_ii(2.0, 100.0).unwrap();
        let s = RiskSource::Analytic(&m);
        let (p, value) = fes_maximizer(s, 0.02).unwrap();
        for &dp in &[-0.01, 0.01] {
            let q = pl((p.value() + dp).clamp(1e-6, 1.0 - 1e-6));
            assert!(fes(s, q, 0.02).unwrap() <= value + 1e-9);
        }
        // cross-route agreement with the root solver
        let p_root = solve_p_theta(s, 0.02).unwrap();
        assert!((p.value() - p_root.value()).abs() < 1e-6);
    }

    #[test]
    fn theta_order_lognormal_sigmas() {
        let x = LossModel::log_normal(0.0, 0.5).unwrap();
        let y = LossModel::log_normal(0.0, 1.0).unwrap();
        let grid: Vec<ProbLevel> = (1..20).map(|i| pl(0.75 + 0.012 * i as f64)).collect();
        let v = theta_order_holds(RiskSource::Analytic(&x), RiskSource::Analytic(&y), &grid)
            .unwrap();
        assert!(v.holds);
        assert!(v.pointwise.iter().all(|&b| b));
    }

    #[test]
    fn theta_order_t2_vs_lognormal_fails() {
        let x = LossModel::student_t(2.0, 0.0, 1.0).unwrap();
        let y = LossModel::log_normal(0.0, 1.0).unwrap();
        let grid: Vec<ProbLevel> = (1..40).map(|i| pl(0.7 + 0.0074 * i as f64)).collect();
        let v = theta_order_holds(RiskSource::Analytic(&x), RiskSource::Analytic(&y), &grid)
            .unwrap();
        assert!(!v.holds);
        assert!(v.pointwise.iter().any(|&b| !b));
    }

    #[test]
    fn theta_order_reflexive() {
        let x = LossModel::gamma(1.5, 1.0).unwrap();
        let grid: Vec<ProbLevel> = (1..10).map(|i| pl(0.8 + 0.015 * i as f64)).collect();
        let v = theta_order_holds(RiskSource::Analytic(&x), RiskSource::Analytic(&x), &grid)
            .unwrap();
        assert!(v.holds);
        for r in &v.ratios {
            assert_relative_eq!(*r, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn theta_order_empty_grid_is_domain_error() {
        let x = LossModel::normal(0.0, 1.0).unwrap();
        let grid = vec![pl(0.2), pl(0.3)];
        assert!(theta_order_holds(
            RiskSource::Analytic(&x),
            RiskSource::Analytic(&x),
            &grid
        )
        .is_err());
    }

    #[test]
    fn assessment_invariants() {
        let m = LossModel::log_normal(0.0, 1.0).unwrap();
        let a = assess(RiskSource::Analytic(&m), pl(0.95), None).unwrap();
        assert!(a.mean <= a.fes && a.fes <= a.es);
        assert!((a.pelvar - a.var).abs() <= 1e-10 * a.var.abs().max(1.0));
        assert!(a.theta >= 0.0);
    }
}
