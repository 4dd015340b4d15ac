//! Claims-panel analysis: CSV ingestion, per-year descriptive
//! statistics, annual empirical risk curves, and rolling-window
//! one-year-ahead VaR prediction with a flexibility-index variant.
//!
//! The two predictors for a target year t at level p are
//!
//! - VaR-hat: the empirical quantile of the claims pooled over the
//!   `window_var` years before t;
//! - PELVaR-hat: the FES built from the pooled empirical ES and mean of
//!   the same window, with the mixing parameter θ̂ estimated over a
//!   possibly different `window_theta` window.
//!
//! With equal windows the two coincide exactly; decoupling them lets
//! the tail-shape estimate adapt on a different horizon than the level
//! estimate.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::dist::ProbLevel;
use crate::empirical::{self, quantile_type7, Sample};
use crate::error::{Result, RiskError};

/// Claim records grouped by year, amounts kept sorted per year.
#[derive(Debug, Clone)]
pub struct ClaimsTable {
    by_year: BTreeMap<i32, Vec<f64>>,
    n_records: usize,
}

impl ClaimsTable {
    pub fn from_records(records: impl IntoIterator<Item = (i32, f64)>) -> Result<Self> {
        let mut by_year: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
        let mut n_records = 0;
        for (row, (year, amount)) in records.into_iter().enumerate() {
            if !(amount.is_finite() && amount > 0.0) {
                return Err(RiskError::input(format!(
                    "record {}: claim amount must be positive, got {amount}",
                    row + 1
                )));
            }
            by_year.entry(year).or_default().push(amount);
            n_records += 1;
        }
        if by_year.is_empty() {
            return Err(RiskError::input("claims table is empty".to_string()));
        }
        for v in by_year.values_mut() {
            v.sort_unstable_by(f64::total_cmp);
        }
        Ok(ClaimsTable { by_year, n_records })
    }

    pub fn years(&self) -> Vec<i32> {
        self.by_year.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.n_records
    }

    pub fn is_empty(&self) -> bool {
        self.n_records == 0
    }

    /// Sorted claim amounts for one year.
    pub fn claims(&self, year: i32) -> Result<&[f64]> {
        self.by_year
            .get(&year)
            .map(Vec::as_slice)
            .ok_or_else(|| RiskError::input(format!("no claims recorded for year {year}")))
    }

    /// Claims pooled over `[year − window, year − 1]`. Every year in
    /// the window must be present.
    pub fn pooled_window(&self, year: i32, window: usize) -> Result<Vec<f64>> {
        if window == 0 {
            return Err(RiskError::input("window must cover at least 1 year".to_string()));
        }
        let mut pooled = Vec::new();
        for y in (year - window as i32)..year {
            pooled.extend_from_slice(self.claims(y)?);
        }
        Ok(pooled)
    }
}

/// Read a claims CSV with a header row. `year_col` and `amount_col`
/// name the two columns to use.
pub fn load_claims(path: &Path, year_col: &str, amount_col: &str) -> Result<ClaimsTable> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| {
                RiskError::input(format!(
                    "column '{name}' not found; header is {:?}",
                    headers.iter().collect::<Vec<_>>()
                ))
            })
    };
    let yi = find(year_col)?;
    let ai = find(amount_col)?;
    let mut records = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let parse = |idx: usize, what: &str| -> Result<f64> {
            record
                .get(idx)
                .ok_or_else(|| {
                    RiskError::input(format!("row {}: missing {what} field", row + 2))
                })?
                .trim()
                .parse::<f64>()
                .map_err(|e| {
                    RiskError::input(format!("row {}: unparseable {what}: {e}", row + 2))
                })
        };
        let year = parse(yi, "year")? as i32;
        let amount = parse(ai, "amount")?;
        if !(amount.is_finite() && amount > 0.0) {
            return Err(RiskError::input(format!(
                "row {}: claim amount must be positive, got {amount}",
                row + 2
            )));
        }
        records.push((year, amount));
    }
    ClaimsTable::from_records(records)
}

/// Descriptive statistics for one year of claims. Skewness and
/// kurtosis are reported as null for degenerate (constant) samples;
/// kurtosis is the raw fourth standardized moment m₄/m₂² (not excess).
#[derive(Debug, Clone, Serialize)]
pub struct YearStats {
    pub year: i32,
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub skewness: Option<f64>,
    pub kurtosis: Option<f64>,
    /// Interquartile range under the type-7 (interpolated) quartile rule.
    pub iqr: f64,
    pub cv_pct: f64,
    pub min: f64,
    pub max: f64,
}

pub fn describe(table: &ClaimsTable, year: i32) -> Result<YearStats> {
    let xs = table.claims(year)?;
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let sd = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let (skewness, kurtosis) = if m2 > 0.0 {
        let m3 = xs.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
        (Some(m3 / m2.powf(1.5)), Some(m4 / (m2 * m2)))
    } else {
        (None, None)
    };
    Ok(YearStats {
        year,
        n: xs.len(),
        mean,
        sd,
        skewness,
        kurtosis,
        iqr: quantile_type7(xs, 0.75) - quantile_type7(xs, 0.25),
        cv_pct: 100.0 * sd / mean,
        min: xs[0],
        max: xs[xs.len() - 1],
    })
}

/// One point of an annual empirical risk curve. ES is absent when no
/// observation exceeds the quantile; θ is absent outside the empirical
/// D_X or when ES is absent.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CurvePoint {
    pub p: f64,
    pub var: f64,
    pub es: Option<f64>,
    pub theta: Option<f64>,
}

/// Empirical (VaR, ES, θ) curves for one year over a level grid.
pub fn annual_risk_curves(
    table: &ClaimsTable,
    year: i32,
    grid: &[ProbLevel],
) -> Result<Vec<CurvePoint>> {
    let xs = table.claims(year)?;
    if xs.len() < 50 {
        return Err(RiskError::domain(format!(
            "year {year} has only {} claims; at least 50 are needed for \
             stable curves",
            xs.len()
        )));
    }
    let sample = Sample::new(xs.to_vec())?;
    Ok(grid
        .iter()
        .map(|&p| CurvePoint {
            p: p.value(),
            var: empirical::empirical_quantile(&sample, p),
            es: empirical::empirical_es(&sample, p).ok(),
            theta: empirical::empirical_theta(&sample, p).ok(),
        })
        .collect())
}

/// Configuration for the rolling-window backtest.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BacktestConfig {
    pub first_target: i32,
    pub last_target: i32,
    pub level: ProbLevel,
    /// Years pooled for the quantile / ES / mean estimates.
    pub window_var: usize,
    /// Years pooled for the θ̂ estimate.
    pub window_theta: usize,
    /// Penalty multiplier on underestimation in the tuning loss; ≥ 1.
    pub lambda_under: f64,
}

impl BacktestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.first_target > self.last_target {
            return Err(RiskError::input(format!(
                "empty target range {}..{}",
                self.first_target, self.last_target
            )));
        }
        if self.window_var == 0 || self.window_theta == 0 {
            return Err(RiskError::input("windows must cover at least 1 year".to_string()));
        }
        if !(self.lambda_under.is_finite() && self.lambda_under >= 1.0) {
            return Err(RiskError::input(format!(
                "lambda_under must be >= 1, got {}",
                self.lambda_under
            )));
        }
        Ok(())
    }
}

/// One-year-ahead prediction outcome for a single target year.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PredictionRecord {
    pub year: i32,
    pub actual_var: f64,
    pub var_hat: f64,
    pub pelvar_hat: f64,
    /// Signed bias, prediction minus actual.
    pub var_bias: f64,
    pub pelvar_bias: f64,
}

/// Run both predictors over the target years.
pub fn predict_var(table: &ClaimsTable, cfg: &BacktestConfig) -> Result<Vec<PredictionRecord>> {
    cfg.validate()?;
    let p = cfg.level;
    let w = 1.0 - p.value();
    let mut out = Vec::new();
    for year in cfg.first_target..=cfg.last_target {
        let base = Sample::new(table.pooled_window(year, cfg.window_var)?)?;
        let var_hat = empirical::empirical_quantile(&base, p);
        let es_hat = empirical::empirical_es(&base, p)?;
        let theta_hat = if cfg.window_theta == cfg.window_var {
            empirical::empirical_theta(&base, p)?
        } else {
            let shape = Sample::new(table.pooled_window(year, cfg.window_theta)?)?;
            empirical::empirical_theta(&shape, p)?
        };
        let pelvar_hat = (w * es_hat + theta_hat * base.mean()) / (w + theta_hat);
        let actual = Sample::new(table.claims(year)?.to_vec())?;
        let actual_var = empirical::empirical_quantile(&actual, p);
        out.push(PredictionRecord {
            year,
            actual_var,
            var_hat,
            pelvar_hat,
            var_bias: var_hat - actual_var,
            pelvar_bias: pelvar_hat - actual_var,
        });
    }
    Ok(out)
}

/// Asymmetric prediction loss: overestimation costs its size,
/// underestimation costs λ_under times its size.
fn asymmetric_loss(bias: f64, lambda_under: f64) -> f64 {
    if bias >= 0.0 {
        bias
    } else {
        lambda_under * -bias
    }
}

/// One grid point of a window search.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WindowScore {
    pub window_var: usize,
    pub window_theta: usize,
    /// Total asymmetric loss of the PELVaR predictor; absent when the
    /// windows are infeasible for some target year.
    pub score: Option<f64>,
    pub underestimates: Option<usize>,
}

/// Grid search over window pairs, minimizing the total asymmetric loss
/// of the PELVaR predictor over the target years. Returns the winning
/// configuration and the full score table.
pub fn tune_windows(
    table: &ClaimsTable,
    base: &BacktestConfig,
    var_windows: &[usize],
    theta_windows: &[usize],
) -> Result<(BacktestConfig, Vec<WindowScore>)> {
    base.validate()?;
    if base.last_target - base.first_target + 1 < 3 {
        return Err(RiskError::input(
            "window tuning needs at least 3 target years".to_string(),
        ));
    }
    let mut scores = Vec::new();
    let mut best: Option<(f64, BacktestConfig)> = None;
    for &wv in var_windows {
        for &wt in theta_windows {
            let cfg = BacktestConfig {
                window_var: wv,
                window_theta: wt,
                ..*base
            };
            match predict_var(table, &cfg) {
                Ok(records) => {
                    let score: f64 = records
                        .iter()
                        .map(|r| asymmetric_loss(r.pelvar_bias, base.lambda_under))
                        .sum();
                    let under = records.iter().filter(|r| r.pelvar_bias < 0.0).count();
                    scores.push(WindowScore {
                        window_var: wv,
                        window_theta: wt,
                        score: Some(score),
                        underestimates: Some(under),
                    });
                    if best.as_ref().is_none_or(|(s, _)| score < *s) {
                        best = Some((score, cfg));
                    }
                }
                Err(_) => scores.push(WindowScore {
                    window_var: wv,
                    window_theta: wt,
                    score: None,
                    underestimates: None,
                }),
            }
        }
    }
    match best {
        Some((_, cfg)) => Ok((cfg, scores)),
        None => Err(RiskError::domain(
            "no feasible window pair: every grid point failed".to_string(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::LossModel;
    use crate::rng;
    use approx::assert_relative_eq;
    use std::io::Write;

    fn pl(p: f64) -> ProbLevel {
        ProbLevel::new(p).unwrap()
    }

    fn synthetic_panel(years: i32, per_year: usize, seed: u64) -> ClaimsTable {
        let m = LossModel::exponential(0.01).unwrap();
        let mut records = Vec::new();
        for y in 0..years {
            let mut r = rng::stream_rng(seed, y as u64);
            for x in rng::sample_model(&m, per_year, &mut r) {
                records.push((2000 + y, x));
            }
        }
        ClaimsTable::from_records(records).unwrap()
    }

    #[test]
    fn loader_reads_two_rows() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "year,amount\n1981,500\n1981,600").unwrap();
        let t = load_claims(f.path(), "year", "amount").unwrap();
        assert_eq!(t.years(), vec![1981]);
        assert_eq!(t.claims(1981).unwrap(), &[500.0, 600.0]);
    }

    #[test]
    fn loader_rejects_negative_amount_with_row_number() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "year,amount\n1981,500\n1981,-600").unwrap();
        let err = load_claims(f.path(), "year", "amount").unwrap_err();
        assert!(err.to_string().contains("row 3"), "{err}");
    }

    #[test]
    fn loader_reports_missing_column() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "y,a\n1981,500").unwrap();
        assert!(load_claims(f.path(), "year", "amount").is_err());
    }

    #[test]
    fn describe_constant_sample_has_null_shape_moments() {
        let t = ClaimsTable::from_records([(1, 5.0), (1, 5.0), (1, 5.0)]).unwrap();
        let s = describe(&t, 1).unwrap();
        assert_eq!(s.sd, 0.0);
        assert_eq!(s.cv_pct, 0.0);
        assert!(s.skewness.is_none() && s.kurtosis.is_none());
    }

    #[test]
    fn describe_small_sample_hand_check() {
        let t =
            ClaimsTable::from_records([(1, 1.0), (1, 2.0), (1, 3.0), (1, 4.0)]).unwrap();
        let s = describe(&t, 1).unwrap();
        assert_relative_eq!(s.mean, 2.5);
        // type-7 quartiles of {1,2,3,4}: Q1 = 1.75, Q3 = 3.25
        assert_relative_eq!(s.iqr, 1.5);
        assert_relative_eq!(s.min, 1.0);
        assert_relative_eq!(s.max, 4.0);
        // symmetric sample
        assert_relative_eq!(s.skewness.unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn describe_moments_match_brute_force() {
        let m = LossModel::log_normal(0.0, 1.0).unwrap();
        let xs = rng::sample_model(&m, 500, &mut rng::stream_rng(1, 0));
        let t = ClaimsTable::from_records(xs.iter().map(|&x| (1, x))).unwrap();
        let s = describe(&t, 1).unwrap();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let mk = |k: i32| xs.iter().map(|x| (x - mean).powi(k)).sum::<f64>() / n;
        assert!((s.skewness.unwrap() - mk(3) / mk(2).powf(1.5)).abs() < 1e-10);
        assert!((s.kurtosis.unwrap() - mk(4) / (mk(2) * mk(2))).abs() < 1e-10);
        // order invariance
        let rev = ClaimsTable::from_records(xs.iter().rev().map(|&x| (1, x))).unwrap();
        let s2 = describe(&rev, 1).unwrap();
        assert_eq!(s.mean, s2.mean);
        assert_eq!(s.iqr, s2.iqr);
    }

    #[test]
    fn curves_track_the_closed_exponential_forms() {
        let t = synthetic_panel(1, 100_000, 21);
        let m = LossModel::exponential(0.01).unwrap();
        let grid: Vec<ProbLevel> = [0.9, 0.95, 0.99].iter().map(|&p| pl(p)).collect();
        let curves = annual_risk_curves(&t, 2000, &grid).unwrap();
        for (pt, &p) in curves.iter().zip(&[0.9, 0.95, 0.99]) {
            let p = pl(p);
            assert!((pt.var - m.quantile(p)).abs() / m.quantile(p) < 0.05);
            assert!((pt.theta.unwrap() - m.theta_closed(p).unwrap()).abs() < 0.01);
        }
    }

    #[test]
    fn curves_require_enough_claims() {
        let t = ClaimsTable::from_records((0..30).map(|i| (1, 1.0 + i as f64))).unwrap();
        assert!(annual_risk_curves(&t, 1, &[pl(0.9)]).is_err());
    }

    #[test]
    fn outlier_inflates_theta() {
        let base: Vec<(i32, f64)> = (0..200).map(|i| (1, 10.0 + (i % 37) as f64)).collect();
        let mut spiked = base.clone();
        spiked.push((1, 500.0));
        let tb = ClaimsTable::from_records(base).unwrap();
        let ts = ClaimsTable::from_records(spiked).unwrap();
        let cb = annual_risk_curves(&tb, 1, &[pl(0.9)]).unwrap();
        let cs = annual_risk_curves(&ts, 1, &[pl(0.9)]).unwrap();
        assert!(cs[0].theta.unwrap() > cb[0].theta.unwrap());
    }

    #[test]
    fn equal_windows_collapse_pelvar_onto_var() {
        let t = synthetic_panel(10, 400, 22);
        let cfg = BacktestConfig {
            first_target: 2004,
            last_target: 2009,
            level: pl(0.95),
            window_var: 4,
            window_theta: 4,
            lambda_under: 2.0,
        };
        for r in predict_var(&t, &cfg).unwrap() {
            assert!(
                (r.pelvar_hat - r.var_hat).abs() <= 1e-12 * r.var_hat.abs().max(1.0),
                "{r:?}"
            );
        }
    }

    #[test]
    fn stationary_panel_predictions_are_nearly_unbiased() {
        let t = synthetic_panel(12, 2000, 23);
        let cfg = BacktestConfig {
            first_target: 2008,
            last_target: 2011,
            level: pl(0.95),
            window_var: 8,
            window_theta: 4,
            lambda_under: 2.0,
        };
        let true_var = LossModel::exponential(0.01)
            .unwrap()
            .quantile(pl(0.95));
        for r in predict_var(&t, &cfg).unwrap() {
            assert!((r.var_bias / true_var).abs() < 0.10, "{r:?}");
            assert!((r.pelvar_bias / true_var).abs() < 0.10, "{r:?}");
        }
    }

    #[test]
    fn missing_window_year_errors() {
        let t = synthetic_panel(3, 100, 24);
        let cfg = BacktestConfig {
            first_target: 2002,
            last_target: 2002,
            level: pl(0.9),
            window_var: 5,
            window_theta: 2,
            lambda_under: 1.0,
        };
        assert!(predict_var(&t, &cfg).is_err());
    }

    #[test]
    fn tuner_covers_the_grid_and_attains_the_minimum() {
        let t = synthetic_panel(14, 600, 25);
        let base = BacktestConfig {
            first_target: 2008,
            last_target: 2013,
            level: pl(0.95),
            window_var: 1,
            window_theta: 1,
            lambda_under: 2.0,
        };
        let grid = [1usize, 2, 4, 8];
        let (best, table) = tune_windows(&t, &base, &grid, &grid).unwrap();
        assert_eq!(table.len(), 16);
        let min = table
            .iter()
            .filter_map(|s| s.score)
            .fold(f64::INFINITY, f64::min);
        let best_score: f64 = predict_var(&t, &best)
            .unwrap()
            .iter()
            .map(|r| asymmetric_loss(r.pelvar_bias, 2.0))
            .sum();
        assert_relative_eq!(best_score, min, max_relative = 1e-12);
    }

    #[test]
    fn tuner_with_symmetric_loss_is_mae() {
        let t = synthetic_panel(8, 300, 26);
        let base = BacktestConfig {
            first_target: 2004,
            last_target: 2007,
            level: pl(0.9),
            window_var: 1,
            window_theta: 1,
            lambda_under: 1.0,
        };
        let (_, table) = tune_windows(&t, &base, &[2, 3], &[2, 3]).unwrap();
        for s in table.iter().filter(|s| s.score.is_some()) {
            let cfg = BacktestConfig {
                window_var: s.window_var,
                window_theta: s.window_theta,
                ..base
            };
            let mae: f64 = predict_var(&t, &cfg)
                .unwrap()
                .iter()
                .map(|r| r.pelvar_bias.abs())
                .sum();
            assert_relative_eq!(s.score.unwrap(), mae, max_relative = 1e-12);
        }
    }

    #[test]
    fn infeasible_grid_is_an_error() {
        let t = synthetic_panel(3, 100, 27);
        let base = BacktestConfig {
            first_target: 2002,
            last_target: 2002,
            level: pl(0.9),
            window_var: 1,
            window_theta: 1,
            lambda_under: 1.0,
        };
        // force at least 3 target years precondition first
        assert!(tune_windows(&t, &base, &[9], &[9]).is_err());
    }
}
