//! Dependent scenario generation under Gaussian, Student-t, and Gumbel
//! copulas with arbitrary parametric marginals, a scenario runner for
//! allocation studies, and a subadditivity stress harness comparing
//! VaR, PELVaR, and ES on repeated samples.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::allocation::{self, AllocationReport, PortfolioSample, VarScheme};
use crate::dist::{LossModel, ProbLevel};
use crate::empirical::{self, Bandwidth, Sample};
use crate::error::{Result, RiskError};
use crate::rng;
use crate::special;

/// A copula over d components. The elliptical members use a
/// compound-symmetric correlation matrix (unit diagonal, common
/// off-diagonal r); the Gumbel member is exchangeable by construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CopulaSpec {
    Gaussian { d: usize, r: f64 },
    StudentT { d: usize, r: f64, nu: u32 },
    Gumbel { d: usize, xi: f64 },
}

fn check_compound_symmetric(d: usize, r: f64) -> Result<()> {
    if d == 0 {
        return Err(RiskError::domain("copula dimension must be at least 1".to_string()));
    }
    let lower = if d > 1 { -1.0 / (d as f64 - 1.0) } else { -1.0 };
    if !(r.is_finite() && r > lower && r < 1.0) {
        return Err(RiskError::domain(format!(
            "compound-symmetric correlation must satisfy {lower:.4} < r < 1 \
             for positive definiteness in dimension {d}, got r = {r}"
        )));
    }
    Ok(())
}

impl CopulaSpec {
    pub fn gaussian(d: usize, r: f64) -> Result<Self> {
        check_compound_symmetric(d, r)?;
        Ok(CopulaSpec::Gaussian { d, r })
    }

    pub fn student_t(d: usize, r: f64, nu: u32) -> Result<Self> {
        check_compound_symmetric(d, r)?;
        if nu == 0 {
            return Err(RiskError::domain("t-copula needs nu >= 1".to_string()));
        }
        Ok(CopulaSpec::StudentT { d, r, nu })
    }

    pub fn gumbel(d: usize, xi: f64) -> Result<Self> {
        if d == 0 {
            return Err(RiskError::domain("copula dimension must be at least 1".to_string()));
        }
        if !(xi.is_finite() && xi >= 1.0) {
            return Err(RiskError::domain(format!(
                "gumbel copula needs xi >= 1, got {xi}"
            )));
        }
        Ok(CopulaSpec::Gumbel { d, xi })
    }

    pub fn dim(&self) -> usize {
        match *self {
            CopulaSpec::Gaussian { d, .. }
            | CopulaSpec::StudentT { d, .. }
            | CopulaSpec::Gumbel { d, .. } => d,
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            CopulaSpec::Gaussian { r, .. } => format!("gaussian(r={r})"),
            CopulaSpec::StudentT { r, nu, .. } => format!("student_t(r={r}, nu={nu})"),
            CopulaSpec::Gumbel { xi, .. } => format!("gumbel(xi={xi})"),
        }
    }
}

/// Lower-triangular Cholesky factor of the compound-symmetric
/// correlation matrix (1 − r)I + rJ.
fn cholesky_compound(d: usize, r: f64) -> Result<Vec<Vec<f64>>> {
    let mut a = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..=i {
            let target = if i == j { 1.0 } else { r };
            let mut s = target;
            for (x, y) in a[i][..j].iter().zip(&a[j][..j]) {
                s -= x * y;
            }
            if i == j {
                if s <= 0.0 {
                    return Err(RiskError::domain(format!(
                        "correlation matrix with r = {r} is not positive definite in dimension {d}"
                    )));
                }
                a[i][j] = s.sqrt();
            } else {
                a[i][j] = s / a[j][j];
            }
        }
    }
    Ok(a)
}

/// One positive-stable draw of index `alpha` ∈ (0, 1) by the
/// Chambers–Mallows–Stuck construction, with Laplace transform
/// exp(−s^alpha).
fn positive_stable(alpha: f64, rng: &mut impl Rng) -> f64 {
    let u = rng::open_unit(rng) * std::f64::consts::PI;
    let e = -rng::open_unit(rng).ln();
    let num = (alpha * u).sin();
    let den = u.sin().powf(1.0 / alpha);
    let tail = ((1.0 - alpha) * u).sin() / e;
    num / den * tail.powf((1.0 - alpha) / alpha)
}

/// Draw n rows of copula uniforms and push them through the marginal
/// quantiles; returned as per-component columns.
pub fn sample_copula_columns(
    spec: &CopulaSpec,
    marginals: &[LossModel],
    n: usize,
    rng: &mut impl Rng,
) -> Result<Vec<Vec<f64>>> {
    let d = spec.dim();
    if marginals.len() != d {
        return Err(RiskError::input(format!(
            "{} marginals supplied for a copula of dimension {d}",
            marginals.len()
        )));
    }
    if let Some(bad) = marginals.iter().find(|m| !m.has_finite_mean()) {
        return Err(RiskError::domain(format!(
            "marginal {bad:?} has an infinite mean; scenarios would not be usable"
        )));
    }
    let mut columns = vec![Vec::with_capacity(n); d];
    let push = |columns: &mut Vec<Vec<f64>>, uniforms: &[f64]| -> Result<()> {
        for (j, &u) in uniforms.iter().enumerate() {
            columns[j].push(marginals[j].quantile(ProbLevel::new(u)?));
        }
        Ok(())
    };
    match *spec {
        CopulaSpec::Gaussian { r, .. } => {
            let chol = cholesky_compound(d, r)?;
            let mut z = vec![0.0; d];
            let mut u = vec![0.0; d];
            for _ in 0..n {
                for zj in &mut z {
                    *zj = special::norm_ppf(rng::open_unit(rng));
                }
                for i in 0..d {
                    let v: f64 = (0..=i).map(|k| chol[i][k] * z[k]).sum();
                    u[i] = special::norm_cdf(v).clamp(1e-16, 1.0 - 1e-16);
                }
                push(&mut columns, &u)?;
            }
        }
        CopulaSpec::StudentT { r, nu, .. } => {
            let chol = cholesky_compound(d, r)?;
            let mut z = vec![0.0; d];
            let mut u = vec![0.0; d];
            for _ in 0..n {
                for zj in &mut z {
                    *zj = special::norm_ppf(rng::open_unit(rng));
                }
                // chi-square with integer nu as a sum of squared normals
                let w: f64 = (0..nu)
                    .map(|_| special::norm_ppf(rng::open_unit(rng)).powi(2))
                    .sum();
                let scale = (nu as f64 / w).sqrt();
                for i in 0..d {
                    let v: f64 = (0..=i).map(|k| chol[i][k] * z[k]).sum();
                    u[i] = special::t_cdf(v * scale, nu as f64).clamp(1e-16, 1.0 - 1e-16);
                }
                push(&mut columns, &u)?;
            }
        }
        CopulaSpec::Gumbel { xi, .. } => {
            let mut u = vec![0.0; d];
            for _ in 0..n {
                if xi == 1.0 {
                    for uj in &mut u {
                        *uj = rng::open_unit(rng);
                    }
                } else {
                    // Marshall–Olkin frailty: U_j = exp(−(E_j/S)^{1/xi})
                    let s = positive_stable(1.0 / xi, rng);
                    for uj in &mut u {
                        let e = -rng::open_unit(rng).ln();
                        *uj = (-(e / s).powf(1.0 / xi)).exp().clamp(1e-16, 1.0 - 1e-16);
                    }
                }
                push(&mut columns, &u)?;
            }
        }
    }
    Ok(columns)
}

/// Sample a joint scenario matrix under the copula and marginals.
/// Deterministic given the seed; components are labelled X1..Xd.
pub fn sample_copula(
    spec: &CopulaSpec,
    marginals: &[LossModel],
    n: usize,
    seed: u64,
) -> Result<PortfolioSample> {
    let mut rng = rng::stream_rng(seed, 0);
    let columns = sample_copula_columns(spec, marginals, n, &mut rng)?;
    let labels = (1..=spec.dim()).map(|j| format!("X{j}")).collect();
    PortfolioSample::from_columns(labels, &columns)
}

/// A full scenario study: marginals, dependence, size, levels, seed.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub marginals: Vec<LossModel>,
    pub copula: CopulaSpec,
    pub n: usize,
    pub levels: Vec<ProbLevel>,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1000 {
            return Err(RiskError::input(format!(
                "scenario runs need n >= 1000, got {}",
                self.n
            )));
        }
        if self.levels.is_empty() {
            return Err(RiskError::input("no levels requested".to_string()));
        }
        Ok(())
    }
}

/// Generate one joint sample and allocate at every requested level.
pub fn run_allocation_scenario(
    cfg: &ScenarioConfig,
    scheme: VarScheme,
) -> Result<Vec<AllocationReport>> {
    cfg.validate()?;
    let ps = sample_copula(&cfg.copula, &cfg.marginals, cfg.n, cfg.seed)?;
    cfg.levels
        .iter()
        .map(|&p| allocation::allocate(&ps, p, scheme, Bandwidth::Auto, None, cfg.seed))
        .collect()
}

/// Violation counts for one level of a stress run.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ViolationCounts {
    pub p: ProbLevel,
    pub var: usize,
    pub pelvar: usize,
    pub es: usize,
}

/// Subadditivity stress outcome for one copula.
#[derive(Debug, Clone, Serialize)]
pub struct StressReport {
    pub copula: String,
    pub n: usize,
    pub repetitions: usize,
    pub counts: Vec<ViolationCounts>,
}

/// FES of a sample at the supplied mixing parameter.
fn fes_of(sample: &Sample, p: ProbLevel, theta: f64) -> Result<f64> {
    let w = 1.0 - p.value();
    Ok((w * empirical::empirical_es(sample, p)? + theta * sample.mean()) / (w + theta))
}

/// Count subadditivity violations R(ΣXⱼ) > Σ R(Xⱼ) over B repeated
/// samples for VaR, PELVaR, and ES.
///
/// PELVaR uses the repetition's aggregate index θ̂_p(ΣXⱼ) as the fixed
/// mixing parameter on both sides, so the aggregate side equals the
/// empirical VaR while the component side stays a coherent FES.
/// Repetition b of copula sample uses RNG stream b.
pub fn run_stress(
    marginals: &[LossModel],
    copulas: &[CopulaSpec],
    levels: &[ProbLevel],
    n: usize,
    repetitions: usize,
    seed: u64,
) -> Result<Vec<StressReport>> {
    if repetitions == 0 {
        return Err(RiskError::input("stress runs need at least 1 repetition".to_string()));
    }
    // a violation must exceed floating-point noise on the comparison
    let exceeds = |lhs: f64, rhs: f64| lhs > rhs + 1e-9 * rhs.abs().max(1.0);
    copulas
        .iter()
        .enumerate()
        .map(|(ci, spec)| {
            let per_rep: Vec<Vec<(bool, bool, bool)>> = (0..repetitions)
                .into_par_iter()
                .map(|b| -> Result<Vec<(bool, bool, bool)>> {
                    let mut rng =
                        rng::stream_rng(seed, (ci * repetitions + b) as u64 + 1);
                    let columns = sample_copula_columns(spec, marginals, n, &mut rng)?;
                    let samples: Vec<Sample> = columns
                        .into_iter()
                        .map(Sample::new)
                        .collect::<Result<_>>()?;
                    let agg = Sample::new(
                        (0..n)
                            .map(|i| samples.iter().map(|s| s.values()[i]).sum())
                            .collect(),
                    )?;
                    levels
                        .iter()
                        .map(|&p| {
                            let var_sum = empirical::empirical_quantile(&agg, p);
                            let var_parts: f64 = samples
                                .iter()
                                .map(|s| empirical::empirical_quantile(s, p))
                                .sum();
                            let es_sum = empirical::empirical_es(&agg, p)?;
                            let es_parts = samples
                                .iter()
                                .map(|s| empirical::empirical_es(s, p))
                                .sum::<Result<f64>>()?;
                            let theta = empirical::empirical_theta(&agg, p)?;
                            let pel_sum = fes_of(&agg, p, theta)?;
                            let pel_parts = samples
                                .iter()
                                .map(|s| fes_of(s, p, theta))
                                .sum::<Result<f64>>()?;
                            Ok((
                                exceeds(var_sum, var_parts),
                                exceeds(pel_sum, pel_parts),
                                exceeds(es_sum, es_parts),
                            ))
                        })
                        .collect()
                })
                .collect::<Result<_>>()?;
            let counts = levels
                .iter()
                .enumerate()
                .map(|(li, &p)| ViolationCounts {
                    p,
                    var: per_rep.iter().filter(|r| r[li].0).count(),
                    pelvar: per_rep.iter().filter(|r| r[li].1).count(),
                    es: per_rep.iter().filter(|r| r[li].2).count(),
                })
                .collect();
            Ok(StressReport {
                copula: spec.describe(),
                n,
                repetitions,
                counts,
            })
        })
        .collect()
}

/// Default stress marginals: {Exponential(0.01), Normal(100, 20),
/// ParetoII(2, 100)} — three mean-100 risks of increasing tail weight.
pub fn default_stress_marginals() -> Vec<LossModel> {
    vec![
        LossModel::exponential(0.01).expect("valid"),
        LossModel::normal(100.0, 20.0).expect("valid"),
        LossModel::pareto_ii(2.0, 100.0).expect("valid"),
    ]
}

/// Kendall's τ of two equal-length, tie-free columns in O(n log n)
/// (inversion counting by merge sort).
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len();
    if n != y.len() || n < 2 {
        return Err(RiskError::input(
            "kendall tau needs two equal-length columns of at least 2 values".to_string(),
        ));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_unstable_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let mut buf = vec![0.0; n];
    let inversions = count_inversions(&mut ys, &mut buf);
    let pairs = n as f64 * (n as f64 - 1.0) / 2.0;
    Ok(1.0 - 2.0 * inversions as f64 / pairs)
}

fn count_inversions(a: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = a.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let (left, right) = a.split_at_mut(mid);
    let mut inv = count_inversions(left, &mut buf[..mid])
        + count_inversions(right, &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0, 0, 0);
    while i < left.len() && j < right.len() {
        if left[i] <= right[j] {
            buf[k] = left[i];
            i += 1;
        } else {
            buf[k] = right[j];
            inv += (left.len() - i) as u64;
            j += 1;
        }
        k += 1;
    }
    buf[k..k + left.len() - i].copy_from_slice(&left[i..]);
    buf[k + left.len() - i..n].copy_from_slice(&right[j..]);
    a.copy_from_slice(&buf[..n]);
    inv
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pl(p: f64) -> ProbLevel {
        ProbLevel::new(p).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(CopulaSpec::gaussian(3, 0.999).is_ok());
        assert!(CopulaSpec::gaussian(3, 1.0).is_err());
        assert!(CopulaSpec::gaussian(3, -0.5).is_err()); // below -1/(d-1)
        assert!(CopulaSpec::gaussian(3, -0.4).is_ok());
        assert!(CopulaSpec::gumbel(3, 0.9).is_err());
        assert!(CopulaSpec::gumbel(3, 1.0).is_ok());
        assert!(CopulaSpec::student_t(2, 0.5, 0).is_err());
    }

    #[test]
    fn kendall_tau_basics() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [10.0, 20.0, 30.0, 40.0];
        assert_eq!(kendall_tau(&x, &y).unwrap(), 1.0);
        let rev = [40.0, 30.0, 20.0, 10.0];
        assert_eq!(kendall_tau(&x, &rev).unwrap(), -1.0);
    }

    #[test]
    fn gaussian_independence_has_zero_tau() {
        let spec = CopulaSpec::gaussian(2, 0.0).unwrap();
        let m = vec![
            LossModel::normal(0.0, 1.0).unwrap(),
            LossModel::normal(0.0, 1.0).unwrap(),
        ];
        let mut rng = rng::stream_rng(1, 0);
        let cols = sample_copula_columns(&spec, &m, 20_000, &mut rng).unwrap();
        let tau = kendall_tau(&cols[0], &cols[1]).unwrap();
        assert!(tau.abs() < 3.0 / (20_000f64).sqrt() * 2.0, "tau = {tau}");
    }

    #[test]
    fn gaussian_tau_matches_elliptical_identity() {
        let r = 0.5;
        let spec = CopulaSpec::gaussian(2, r).unwrap();
        let m = vec![
            LossModel::exponential(1.0).unwrap(),
            LossModel::log_normal(0.0, 1.0).unwrap(),
        ];
        let mut rng = rng::stream_rng(2, 0);
        let cols = sample_copula_columns(&spec, &m, 50_000, &mut rng).unwrap();
        let tau = kendall_tau(&cols[0], &cols[1]).unwrap();
        let oracle = 2.0 / std::f64::consts::PI * r.asin();
        assert!((tau - oracle).abs() < 0.02, "tau = {tau}, oracle = {oracle}");
    }

    #[test]
    fn t_copula_tau_matches_elliptical_identity() {
        let r = 0.9;
        let spec = CopulaSpec::student_t(2, r, 2).unwrap();
        let m = vec![
            LossModel::normal(0.0, 1.0).unwrap(),
            LossModel::normal(0.0, 1.0).unwrap(),
        ];
        let mut rng = rng::stream_rng(3, 0);
        let cols = sample_copula_columns(&spec, &m, 100_000, &mut rng).unwrap();
        let tau = kendall_tau(&cols[0], &cols[1]).unwrap();
        let oracle = 2.0 / std::f64::consts::PI * r.asin();
        assert!((tau - oracle).abs() < 0.02, "tau = {tau}, oracle = {oracle}");
    }

    #[test]
    fn gumbel_tau_matches_archimedean_identity() {
        for &xi in &[1.0f64, 3.0] {
            let spec = CopulaSpec::gumbel(2, xi).unwrap();
            let m = vec![
                LossModel::exponential(1.0).unwrap(),
                LossModel::exponential(1.0).unwrap(),
            ];
            let mut rng = rng::stream_rng(4, 0);
            let cols = sample_copula_columns(&spec, &m, 50_000, &mut rng).unwrap();
            let tau = kendall_tau(&cols[0], &cols[1]).unwrap();
            let oracle = 1.0 - 1.0 / xi;
            assert!((tau - oracle).abs() < 0.02, "xi = {xi}: tau = {tau}");
        }
    }

    #[test]
    fn marginals_survive_the_transform() {
        // each column's empirical quantiles track its marginal
        let spec = CopulaSpec::gaussian(2, 0.7).unwrap();
        let m = vec![
            LossModel::exponential(0.01).unwrap(),
            LossModel::pareto_ii(2.0, 100.0).unwrap(),
        ];
        let mut rng = rng::stream_rng(5, 0);
        let cols = sample_copula_columns(&spec, &m, 100_000, &mut rng).unwrap();
        for (col, model) in cols.iter().zip(&m) {
            let s = Sample::new(col.clone()).unwrap();
            for &p in &[0.25, 0.5, 0.9] {
                let emp = empirical::empirical_quantile(&s, pl(p));
                let want = model.quantile(pl(p));
                assert!(
                    (emp - want).abs() / want.abs().max(1.0) < 0.05,
                    "p={p}: {emp} vs {want}"
                );
            }
        }
    }

    #[test]
    fn infinite_mean_marginal_is_rejected() {
        let spec = CopulaSpec::gaussian(1, 0.0).unwrap();
        let m = vec![LossModel::gev(0.0, 1.0, 1.5).unwrap()];
        let mut rng = rng::stream_rng(0, 0);
        assert!(sample_copula_columns(&spec, &m, 1000, &mut rng).is_err());
    }

    #[test]
    fn sampling_is_reproducible() {
        let spec = CopulaSpec::student_t(3, 0.25, 4).unwrap();
        let m = vec![
            LossModel::normal(100.0, 10.0).unwrap(),
            LossModel::student_t(4.0, 100.0, 10.0).unwrap(),
            LossModel::exponential(0.01).unwrap(),
        ];
        let a = sample_copula(&spec, &m, 2000, 11).unwrap();
        let b = sample_copula(&spec, &m, 2000, 11).unwrap();
        assert_eq!(a.aggregate().values(), b.aggregate().values());
    }

    #[test]
    fn stress_smoke_run_counts_are_bounded() {
        let marginals = default_stress_marginals();
        let copulas = [CopulaSpec::gaussian(3, 0.75).unwrap()];
        let levels = [pl(0.9)];
        let reports = run_stress(&marginals, &copulas, &levels, 2000, 5, 7).unwrap();
        assert_eq!(reports.len(), 1);
        let c = &reports[0].counts[0];
        assert!(c.var <= 5 && c.pelvar <= 5 && c.es <= 5);
        assert_eq!(c.es, 0);
        assert_eq!(c.pelvar, 0);
    }

    #[test]
    fn scenario_runner_is_deterministic() {
        let cfg = ScenarioConfig {
            marginals: vec![
                LossModel::normal(100.0, 10.0).unwrap(),
                LossModel::exponential(0.01).unwrap(),
            ],
            copula: CopulaSpec::gaussian(2, 0.25).unwrap(),
            n: 20_000,
            levels: vec![pl(0.95)],
            seed: 3,
        };
        let a = run_allocation_scenario(&cfg, VarScheme::Linear).unwrap();
        let b = run_allocation_scenario(&cfg, VarScheme::Linear).unwrap();
        assert_eq!(a[0].aggregate.var, b[0].aggregate.var);
        assert_eq!(a[0].components[0].es, b[0].components[0].es);
        assert!(a[0].residuals.es <= 1e-9 * a[0].aggregate.es);
    }
}
