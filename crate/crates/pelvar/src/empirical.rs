//! Plug-in estimators from observed samples: empirical quantile and
//! Expected Shortfall, the empirical flexibility index
//!
//! θ̂_{p,n} = (1−p)/(x̂_p − X̄) · (1/m) Σ (Xᵢ − x̂_p) I(Xᵢ > x̂_p),
//!
//! a Nadaraya–Watson smoother for θ̂ curves, and a Monte Carlo probe of
//! estimator consistency against the closed-form index.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{LossModel, ProbLevel};
use crate::error::{Result, RiskError};
use crate::measures;
use crate::rng;

/// An immutable sample of at least two finite observations, with its
/// ascending order statistics cached.
#[derive(Debug, Clone)]
pub struct Sample {
    values: Vec<f64>,
    sorted: Vec<f64>,
    mean: f64,
}

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(RiskError::input(format!(
                "a sample needs at least 2 observations, got {}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(RiskError::input(format!(
                "sample contains a non-finite observation: {bad}"
            )));
        }
        let mut sorted = values.clone();
        sorted.sort_unstable_by(f64::total_cmp);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        Ok(Sample {
            values,
            sorted,
            mean,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Ascending order statistics.
    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn min(&self) -> f64 {
        self.sorted[0]
    }

    pub fn max(&self) -> f64 {
        self.sorted[self.sorted.len() - 1]
    }

    /// Empirical distribution function F̂(x) = #{Xᵢ ≤ x}/n.
    pub fn cdf_at(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.len() as f64
    }
}

/// The ⌈np⌉-th ascending order statistic X₍⌈np⌉₎.
pub fn empirical_quantile(s: &Sample, p: ProbLevel) -> f64 {
    let n = s.len();
    let k = (n as f64 * p.value()).ceil() as usize;
    s.sorted()[k.clamp(1, n) - 1]
}

/// Mean of the observations strictly above the empirical quantile.
pub fn empirical_es(s: &Sample, p: ProbLevel) -> Result<f64> {
    let q = empirical_quantile(s, p);
    let start = s.sorted().partition_point(|&v| v <= q);
    let tail = &s.sorted()[start..];
    if tail.is_empty() {
        return Err(RiskError::domain(format!(
            "no observation exceeds the empirical quantile {q} at p = {}; \
             use a lower level",
            p.value()
        )));
    }
    Ok(tail.iter().sum::<f64>() / tail.len() as f64)
}

/// Empirical flexibility index (1−p)(ês_p − x̂_p)/(x̂_p − X̄).
pub fn empirical_theta(s: &Sample, p: ProbLevel) -> Result<f64> {
    let q = empirical_quantile(s, p);
    if q <= s.mean() {
        return Err(RiskError::domain(format!(
            "p = {} lies outside the empirical D_X: quantile {q} does not \
             exceed the sample mean {}",
            p.value(),
            s.mean()
        )));
    }
    let es = empirical_es(s, p)?;
    Ok((1.0 - p.value()) * (es - q) / (q - s.mean()))
}

/// Smoothing kernel choices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    Gaussian,
}

/// Bandwidth selection for kernel smoothing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KernelConfig {
    pub kernel: Kernel,
    pub bandwidth: Bandwidth,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            kernel: Kernel::Gaussian,
            bandwidth: Bandwidth::Auto,
        }
    }
}

/// Interpolated quantile of ascending `sorted` (the common "type 7"
/// rule: linear in the order-statistic index).
pub fn quantile_type7(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Silverman's rule-of-thumb bandwidth 0.9·min(σ̂, IQR/1.34)·n^{−1/5}.
pub fn silverman_bandwidth(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 2 {
        return Err(RiskError::domain(
            "bandwidth selection needs at least 2 points".to_string(),
        ));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    let sd = var.sqrt();
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let iqr = quantile_type7(&sorted, 0.75) - quantile_type7(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    if spread <= 0.0 {
        return Err(RiskError::domain(
            "cannot select a bandwidth for a degenerate (constant) sample".to_string(),
        ));
    }
    Ok(0.9 * spread * (n as f64).powf(-0.2))
}

/// Nadaraya–Watson smoothing of θ̂ anchors at a query level:
/// Σ w_k θ̂_k with w_k ∝ K((p − p_k)/h).
pub fn kernel_theta(
    anchors: &[(f64, f64)],
    query: ProbLevel,
    cfg: KernelConfig,
) -> Result<f64> {
    if anchors.len() < 2 {
        return Err(RiskError::domain(
            "kernel smoothing needs at least 2 anchor points".to_string(),
        ));
    }
    let p = query.value();
    let (lo, hi) = anchors
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(pk, _)| {
            (a.min(pk), b.max(pk))
        });
    if p < lo || p > hi {
        return Err(RiskError::domain(format!(
            "query level {p} lies outside the anchor range [{lo}, {hi}]"
        )));
    }
    let h = match cfg.bandwidth {
        Bandwidth::Fixed(h) if h > 0.0 => h,
        Bandwidth::Fixed(h) => {
            return Err(RiskError::domain(format!(
                "bandwidth must be positive, got {h}"
            )))
        }
        Bandwidth::Auto => {
            let abscissas: Vec<f64> = anchors.iter().map(|&(pk, _)| pk).collect();
            silverman_bandwidth(&abscissas)?
        }
    };
    let Kernel::Gaussian = cfg.kernel;
    let mut wsum = 0.0;
    let mut num = 0.0;
    for &(pk, tk) in anchors {
        let z = (p - pk) / h;
        let w = (-0.5 * z * z).exp();
        wsum += w;
        num += w * tk;
    }
    if wsum <= 0.0 || !wsum.is_finite() {
        return Err(RiskError::computation(format!(
            "all kernel weights vanished at query {p} with bandwidth {h}"
        )));
    }
    Ok(num / wsum)
}

/// θ̂ anchors on an equispaced level grid inside the empirical D_X,
/// suitable as input to [`kernel_theta`]. Levels whose exceedance set
/// is empty are skipped.
pub fn theta_anchors(s: &Sample, count: usize) -> Result<Vec<(f64, f64)>> {
    let lo = s.cdf_at(s.mean()) + 0.01;
    let hi = 0.999;
    if count < 2 || lo >= hi {
        return Err(RiskError::domain(format!(
            "cannot place {count} anchors on ({lo:.4}, {hi})"
        )));
    }
    let mut anchors = Vec::with_capacity(count);
    for k in 0..count {
        let p = lo + (hi - lo) * k as f64 / (count - 1) as f64;
        if let Ok(theta) = empirical_theta(s, ProbLevel::new(p)?) {
            anchors.push((p, theta));
        }
    }
    if anchors.len() < 2 {
        return Err(RiskError::computation(
            "fewer than 2 usable anchors inside the empirical D_X".to_string(),
        ));
    }
    Ok(anchors)
}

/// One point of a consistency error curve.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ErrorCurvePoint {
    pub n: usize,
    /// Mean absolute error of θ̂_{p,n} against the closed-form index.
    pub mae: f64,
}

/// Monte Carlo consistency probe: for each sample size, draw `reps`
/// independent samples from `model`, estimate θ̂_p on each, and report
/// the mean absolute error against the model's closed-form θ_p.
///
/// Replication r of size index s uses the dedicated RNG stream
/// `s·reps + r`, so the curve is reproducible under any thread count.
pub fn consistency_probe(
    model: &LossModel,
    p: ProbLevel,
    sizes: &[usize],
    reps: usize,
    seed: u64,
) -> Result<Vec<ErrorCurvePoint>> {
    let truth = model.theta_closed(p)?;
    let mut curve = Vec::with_capacity(sizes.len());
    for (si, &n) in sizes.iter().enumerate() {
        let errors: Vec<f64> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let mut rng = rng::stream_rng(seed, (si * reps + r) as u64);
                let xs = rng::sample_model(model, n, &mut rng);
                let s = Sample::new(xs).expect("n >= 2 finite draws");
                match empirical_theta(&s, p) {
                    Ok(est) => (est - truth).abs(),
                    // a tiny sample can fall outside its empirical D_X;
                    // count the full index magnitude as the error
                    Err(_) => truth,
                }
            })
            .collect();
        curve.push(ErrorCurvePoint {
            n,
            mae: errors.iter().sum::<f64>() / reps as f64,
        });
    }
    Ok(curve)
}

/// Convenience: a sample viewed as a risk source for the generic
/// measures in [`crate::measures`].
pub fn as_source(s: &Sample) -> measures::RiskSource<'_> {
    measures::RiskSource::Empirical(s)
}
