//! Euler capital allocation over a scenario matrix of joint component
//! losses: marginal contributions to ES, VaR (linear and kernel
//! schemes), FES, the θ-index, and PELVaR, with full-allocation and
//! zero-sum residual bookkeeping.

use std::io::Write as IoWrite;

use serde::Serialize;

use crate::dist::ProbLevel;
use crate::empirical::{self, Bandwidth, Sample};
use crate::error::{Result, RiskError};
use crate::measures::{self, RiskSource};
use crate::rng;

/// Joint loss scenarios for a d-component portfolio.
#[derive(Debug, Clone)]
pub struct PortfolioSample {
    /// Row-major N×d scenario matrix.
    data: Vec<f64>,
    labels: Vec<String>,
    n: usize,
    d: usize,
    /// Row sums, wrapped as a sample for the empirical measures.
    aggregate: Sample,
}

impl PortfolioSample {
    /// Build from a row-major scenario matrix.
    pub fn new(labels: Vec<String>, data: Vec<f64>) -> Result<Self> {
        let d = labels.len();
        if d == 0 {
            return Err(RiskError::input("a portfolio needs at least one component".to_string()));
        }
        if !data.len().is_multiple_of(d) {
            return Err(RiskError::input(format!(
                "scenario data of length {} is not a multiple of d = {d}",
                data.len()
            )));
        }
        let n = data.len() / d;
        if n < 100 {
            return Err(RiskError::input(format!(
                "allocation needs at least 100 scenarios, got {n}"
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(RiskError::input("scenario matrix contains a non-finite value".to_string()));
        }
        let sums: Vec<f64> = (0..n)
            .map(|i| data[i * d..(i + 1) * d].iter().sum())
            .collect();
        let aggregate = Sample::new(sums)?;
        Ok(PortfolioSample {
            data,
            labels,
            n,
            d,
            aggregate,
        })
    }

    /// Build from per-component columns of equal length.
    pub fn from_columns(labels: Vec<String>, columns: &[Vec<f64>]) -> Result<Self> {
        if labels.len() != columns.len() {
            return Err(RiskError::input(format!(
                "{} labels for {} columns",
                labels.len(),
                columns.len()
            )));
        }
        let n = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n) {
            return Err(RiskError::input("columns have unequal lengths".to_string()));
        }
        let d = columns.len();
        let mut data = Vec::with_capacity(n * d);
        for i in 0..n {
            for col in columns {
                data.push(col[i]);
            }
        }
        PortfolioSample::new(labels, data)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn aggregate(&self) -> &Sample {
        &self.aggregate
    }

    fn value(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.d + j]
    }

    fn component_means(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.d];
        for i in 0..self.n {
            for (j, mj) in m.iter_mut().enumerate() {
                *mj += self.value(i, j);
            }
        }
        for v in &mut m {
            *v /= self.n as f64;
        }
        m
    }
}

/// Which approximation supplies the per-component VaR contributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VarScheme {
    Linear,
    Kernel,
}

/// ES contributions: per-component means over the tail event
/// { X > VaR_p(X) }. Sums to the empirical ES of the aggregate.
pub fn es_contribution(ps: &PortfolioSample, p: ProbLevel) -> Result<Vec<f64>> {
    let q = empirical::empirical_quantile(ps.aggregate(), p);
    let rows: Vec<usize> = (0..ps.n)
        .filter(|&i| ps.aggregate.values()[i] > q)
        .collect();
    if rows.len() < 30 {
        return Err(RiskError::domain(format!(
            "only {} scenarios in the tail set at p = {}; at least 30 are \
             needed for a usable ES allocation",
            rows.len(),
            p.value()
        )));
    }
    let mut out = vec![0.0; ps.d];
    for &i in &rows {
        for (j, oj) in out.iter_mut().enumerate() {
            *oj += ps.value(i, j);
        }
    }
    for v in &mut out {
        *v /= rows.len() as f64;
    }
    Ok(out)
}

/// Linear (covariance) VaR contributions:
/// 𝔼[Xⱼ] + Cov(Xⱼ, X)/Var(X) · (VaR_p(X) − 𝔼[X]).
/// Sums to the aggregate VaR exactly.
pub fn var_contribution_linear(ps: &PortfolioSample, p: ProbLevel) -> Result<Vec<f64>> {
    let agg = ps.aggregate();
    let mean_x = agg.mean();
    let var_x = agg
        .values()
        .iter()
        .map(|v| (v - mean_x).powi(2))
        .sum::<f64>()
        / ps.n as f64;
    if var_x <= 0.0 {
        return Err(RiskError::domain(
            "linear VaR allocation is undefined for a zero-variance aggregate".to_string(),
        ));
    }
    let means = ps.component_means();
    let mut cov = vec![0.0; ps.d];
    for i in 0..ps.n {
        let dx = agg.values()[i] - mean_x;
        for j in 0..ps.d {
            cov[j] += (ps.value(i, j) - means[j]) * dx;
        }
    }
    let q = empirical::empirical_quantile(agg, p);
    Ok((0..ps.d)
        .map(|j| means[j] + cov[j] / ps.n as f64 / var_x * (q - mean_x))
        .collect())
}

/// Kernel VaR contributions with diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct KernelVarContribution {
    pub contributions: Vec<f64>,
    pub bandwidth: f64,
    /// 1/Σwᵢ² for the normalized weights.
    pub effective_sample_size: f64,
    pub warning: Option<String>,
}

/// Kernel-weighted VaR contributions: Σᵢ w_{i,η}·Xⱼ,ᵢ with Gaussian
/// weights centered at the VaR of the noise-smoothed aggregate
/// X + ηZ, Z standard normal.
pub fn var_contribution_kernel(
    ps: &PortfolioSample,
    p: ProbLevel,
    bandwidth: Bandwidth,
    seed: u64,
) -> Result<KernelVarContribution> {
    let agg = ps.aggregate();
    let eta = match bandwidth {
        Bandwidth::Fixed(h) if h > 0.0 => h,
        Bandwidth::Fixed(h) => {
            return Err(RiskError::domain(format!(
                "kernel bandwidth must be positive, got {h}"
            )))
        }
        Bandwidth::Auto => empirical::silverman_bandwidth(agg.values())?,
    };
    let mut noise_rng = rng::stream_rng(seed, 0);
    let perturbed: Vec<f64> = agg
        .values()
        .iter()
        .map(|&x| {
            x + eta * crate::special::norm_ppf(rng::open_unit(&mut noise_rng))
        })
        .collect();
    let v = empirical::empirical_quantile(&Sample::new(perturbed.clone())?, p);
    let mut weights: Vec<f64> = perturbed
        .iter()
        .map(|&x| (-0.5 * ((v - x) / eta).powi(2)).exp())
        .collect();
    let wsum: f64 = weights.iter().sum();
    if wsum <= 0.0 || !wsum.is_finite() {
        return Err(RiskError::computation(format!(
            "kernel weights vanished at bandwidth {eta}"
        )));
    }
    for w in &mut weights {
        *w /= wsum;
    }
    let ess = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
    let warning = (ess < 30.0).then(|| {
        format!("effective sample size {ess:.1} < 30; kernel VaR contributions are noisy")
    });
    let mut contributions = vec![0.0; ps.d];
    for (i, &w) in weights.iter().enumerate() {
        for (j, cj) in contributions.iter_mut().enumerate() {
            *cj += w * ps.value(i, j);
        }
    }
    Ok(KernelVarContribution {
        contributions,
        bandwidth: eta,
        effective_sample_size: ess,
        warning,
    })
}

/// FES contributions: the ES contributions and component means blended
/// with the FES weights. Sums to FES of the aggregate.
pub fn fes_contribution(ps: &PortfolioSample, p: ProbLevel, theta: f64) -> Result<Vec<f64>> {
    if !(theta.is_finite() && theta > 0.0) {
        return Err(RiskError::domain(format!(
            "FES allocation requires theta > 0, got {theta}"
        )));
    }
    let w = 1.0 - p.value();
    let es = es_contribution(ps, p)?;
    let means = ps.component_means();
    Ok((0..ps.d)
        .map(|j| (w * es[j] + theta * means[j]) / (w + theta))
        .collect())
}

fn var_by_scheme(
    ps: &PortfolioSample,
    p: ProbLevel,
    scheme: VarScheme,
    bandwidth: Bandwidth,
    seed: u64,
) -> Result<(Vec<f64>, Option<KernelVarContribution>)> {
    match scheme {
        VarScheme::Linear => Ok((var_contribution_linear(ps, p)?, None)),
        VarScheme::Kernel => {
            let k = var_contribution_kernel(ps, p, bandwidth, seed)?;
            Ok((k.contributions.clone(), Some(k)))
        }
    }
}

/// θ-index contributions:
/// θ_p(X)·[(ESⱼ − VaRⱼ)/(ES − VaR) − (VaRⱼ − 𝔼Xⱼ)/(VaR − 𝔼X)].
/// Zero-sum (exactly under the linear scheme; statistically under the
/// kernel scheme). Entries may be negative: component j relieves tail
/// risk when its conditional index falls below the aggregate θ_p(X).
pub fn theta_contribution(
    ps: &PortfolioSample,
    p: ProbLevel,
    scheme: VarScheme,
    bandwidth: Bandwidth,
    seed: u64,
) -> Result<Vec<f64>> {
    let (var_j, _) = var_by_scheme(ps, p, scheme, bandwidth, seed)?;
    theta_contribution_with(ps, p, &var_j)
}

fn theta_contribution_with(
    ps: &PortfolioSample,
    p: ProbLevel,
    var_j: &[f64],
) -> Result<Vec<f64>> {
    let agg = ps.aggregate();
    let src = RiskSource::Empirical(agg);
    let theta = measures::theta_index(src, p)?;
    let es = empirical::empirical_es(agg, p)?;
    let q = empirical::empirical_quantile(agg, p);
    let mean = agg.mean();
    let es_j = es_contribution(ps, p)?;
    let means = ps.component_means();
    Ok((0..ps.d)
        .map(|j| {
            theta * ((es_j[j] - var_j[j]) / (es - q) - (var_j[j] - means[j]) / (q - mean))
        })
        .collect())
}

/// PELVaR contributions:
/// ((1−p)ESⱼ + θ_p𝔼Xⱼ)/(1−p+θ_p) − θⱼ·(PELVaR − 𝔼X)/(1−p+θ_p).
/// Sums to PELVaR of the aggregate (exactly under the linear scheme).
pub fn pelvar_contribution(
    ps: &PortfolioSample,
    p: ProbLevel,
    scheme: VarScheme,
    bandwidth: Bandwidth,
    seed: u64,
) -> Result<Vec<f64>> {
    let (var_j, _) = var_by_scheme(ps, p, scheme, bandwidth, seed)?;
    pelvar_contribution_with(ps, p, &var_j)
}

fn pelvar_contribution_with(
    ps: &PortfolioSample,
    p: ProbLevel,
    var_j: &[f64],
) -> Result<Vec<f64>> {
    let agg = ps.aggregate();
    let src = RiskSource::Empirical(agg);
    let theta = measures::theta_index(src, p)?;
    let pelvar = measures::pelvar(src, p)?;
    let mean = agg.mean();
    let w = 1.0 - p.value();
    let es_j = es_contribution(ps, p)?;
    let means = ps.component_means();
    let theta_j = theta_contribution_with(ps, p, var_j)?;
    Ok((0..ps.d)
        .map(|j| {
            (w * es_j[j] + theta * means[j]) / (w + theta)
                - theta_j[j] * (pelvar - mean) / (w + theta)
        })
        .collect())
}

/// Aggregate measure values attached to a report.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AggregateValues {
    pub var: f64,
    pub es: f64,
    pub fes: f64,
    pub pelvar: f64,
    pub theta: f64,
    pub mean: f64,
}

/// Per-component rows of an allocation.
#[derive(Debug, Clone, Serialize)]
pub struct ComponentAllocation {
    pub label: String,
    pub mean: f64,
    pub var: f64,
    pub es: f64,
    pub fes: f64,
    pub theta: f64,
    pub pelvar: f64,
    /// Conditional flexibility index (1−p)(ESⱼ−VaRⱼ)/(VaRⱼ−𝔼Xⱼ),
    /// absent when VaRⱼ does not exceed the component mean.
    pub conditional_theta: Option<f64>,
}

/// A complete Euler allocation with residual diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct AllocationReport {
    pub p: ProbLevel,
    pub scheme: VarScheme,
    pub aggregate: AggregateValues,
    pub components: Vec<ComponentAllocation>,
    /// |Σ contributions − aggregate value| per measure (θ checks
    /// against zero).
    pub residuals: Residuals,
    /// Contributions divided by the aggregate value, per measure where
    /// the aggregate is nonzero (θ proportions are not defined).
    pub proportions: Vec<MeasureProportions>,
    pub kernel: Option<KernelVarContribution>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Residuals {
    pub var: f64,
    pub es: f64,
    pub fes: f64,
    pub theta: f64,
    pub pelvar: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MeasureProportions {
    pub measure: String,
    pub shares: Vec<f64>,
}

/// Assemble the full allocation report. `fes_theta` selects the FES
/// mixing parameter; the default is the aggregate θ_p, which makes the
/// FES row coincide with PELVaR.
pub fn allocate(
    ps: &PortfolioSample,
    p: ProbLevel,
    scheme: VarScheme,
    bandwidth: Bandwidth,
    fes_theta: Option<f64>,
    seed: u64,
) -> Result<AllocationReport> {
    let agg = ps.aggregate();
    let src = RiskSource::Empirical(agg);
    let theta = measures::theta_index(src, p)?;
    let fes_theta = fes_theta.unwrap_or(theta);
    let agg_values = AggregateValues {
        var: empirical::empirical_quantile(agg, p),
        es: empirical::empirical_es(agg, p)?,
        fes: measures::fes(src, p, fes_theta)?,
        pelvar: measures::pelvar(src, p)?,
        theta,
        mean: agg.mean(),
    };
    let (var_j, kernel) = var_by_scheme(ps, p, scheme, bandwidth, seed)?;
    let es_j = es_contribution(ps, p)?;
    let fes_j = fes_contribution(ps, p, fes_theta)?;
    let theta_j = theta_contribution_with(ps, p, &var_j)?;
    let pelvar_j = pelvar_contribution_with(ps, p, &var_j)?;
    let means = ps.component_means();
    let w = 1.0 - p.value();
    let components: Vec<ComponentAllocation> = (0..ps.d)
        .map(|j| ComponentAllocation {
            label: ps.labels[j].clone(),
            mean: means[j],
            var: var_j[j],
            es: es_j[j],
            fes: fes_j[j],
            theta: theta_j[j],
            pelvar: pelvar_j[j],
            conditional_theta: (var_j[j] > means[j])
                .then(|| w * (es_j[j] - var_j[j]) / (var_j[j] - means[j])),
        })
        .collect();
    let sum = |f: fn(&ComponentAllocation) -> f64| components.iter().map(f).sum::<f64>();
    let residuals = Residuals {
        var: (sum(|c| c.var) - agg_values.var).abs(),
        es: (sum(|c| c.es) - agg_values.es).abs(),
        fes: (sum(|c| c.fes) - agg_values.fes).abs(),
        theta: sum(|c| c.theta).abs(),
        pelvar: (sum(|c| c.pelvar) - agg_values.pelvar).abs(),
    };
    let share = |vals: Vec<f64>, total: f64| vals.iter().map(|v| v / total).collect();
    let proportions = vec![
        MeasureProportions {
            measure: "var".to_string(),
            shares: share(var_j, agg_values.var),
        },
        MeasureProportions {
            measure: "es".to_string(),
            shares: share(es_j, agg_values.es),
        },
        MeasureProportions {
            measure: "fes".to_string(),
            shares: share(fes_j, agg_values.fes),
        },
        MeasureProportions {
            measure: "pelvar".to_string(),
            shares: share(pelvar_j, agg_values.pelvar),
        },
    ];
    Ok(AllocationReport {
        p,
        scheme,
        aggregate: agg_values,
        components,
        residuals,
        proportions,
        kernel,
    })
}

impl AllocationReport {
    /// One row per component plus an aggregate row.
    pub fn write_csv<W: IoWrite>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "component", "mean", "var", "es", "fes", "theta", "pelvar",
        ])?;
        for c in &self.components {
            w.write_record([
                c.label.as_str(),
                &c.mean.to_string(),
                &c.var.to_string(),
                &c.es.to_string(),
                &c.fes.to_string(),
                &c.theta.to_string(),
                &c.pelvar.to_string(),
            ])?;
        }
        let a = &self.aggregate;
        w.write_record([
            "aggregate",
            &a.mean.to_string(),
            &a.var.to_string(),
            &a.es.to_string(),
            &a.fes.to_string(),
            &a.theta.to_string(),
            &a.pelvar.to_string(),
        ])?;
        w.flush()?;
        Ok(())
    }
}
