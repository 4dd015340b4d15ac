//! Parametric loss families with closed or semi-closed quantile, mean,
//! Expected Shortfall and flexibility-index formulas.
//!
//! Every family here is an absolutely continuous loss variable with a
//! finite mean (the one documented exception is the GEV with shape
//! ξ ≥ 1, which is constructible for completeness but has infinite
//! mean and a flexibility index pinned to zero).
//!
//! The Generalized Pareto family uses the mean-excess parameterization
//! `e(x) = α x + β` with α > −1, β > 0, not the EVT location-scale-shape
//! convention. Conversion from the usual (σ, ξ_evt) form with ξ_evt < 1:
//!
//! | mean-excess form | EVT form |
//! |------------------|----------|
//! | α                | ξ_evt / (1 − ξ_evt) |
//! | β                | σ / (1 − ξ_evt) |
//!
//! The Pareto II (Lomax) and exponential special cases are reachable
//! through the GP constructor as `α = 1/(a−1), β = κ/(a−1)` and
//! `α → 0, β = 1/λ`; the Rescaled Beta / Uniform cases correspond to
//! `α = 1/(c+1) − 1 < 0` and are likewise expressed through GP rather
//! than as separate families.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RiskError};
use crate::quad;
use crate::special;

/// Probability level constrained to the open interval (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ProbLevel(f64);

impl ProbLevel {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_finite() && p > 0.0 && p < 1.0 {
            Ok(ProbLevel(p))
        } else {
            Err(RiskError::domain(format!(
                "probability level must lie strictly inside (0,1), got {p}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for ProbLevel {
    type Error = RiskError;
    fn try_from(p: f64) -> Result<Self> {
        ProbLevel::new(p)
    }
}

impl From<ProbLevel> for f64 {
    fn from(p: ProbLevel) -> f64 {
        p.0
    }
}

/// A parametric loss distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum LossModel {
    Uniform { a: f64, b: f64 },
    Normal { mu: f64, sigma: f64 },
    /// Rate parameterization: F(x) = 1 − e^{−λx}, mean 1/λ.
    Exponential { rate: f64 },
    /// Location-scale Student-t; ν > 1 so the mean exists.
    StudentT { nu: f64, loc: f64, scale: f64 },
    LogNormal { mu: f64, sigma: f64 },
    /// Shape-rate parameterization: mean = shape/rate.
    Gamma { shape: f64, rate: f64 },
    /// Shape-scale parameterization: mean = scale · Γ(1 + 1/shape).
    Weibull { shape: f64, scale: f64 },
    /// Lomax: F̄(x) = (κ/(κ+x))^α with α > 1, mean κ/(α−1).
    ParetoII { shape: f64, scale: f64 },
    /// Mean-excess form: e(x) = α x + β, α > −1, β > 0, mean β.
    GeneralizedPareto { alpha: f64, beta: f64 },
    Gev { mu: f64, sigma: f64, xi: f64 },
}

/// GP shape values this close to zero take the exponential limit branch.
const GP_EXP_EPS: f64 = 1e-12;

impl LossModel {
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        if a.is_finite() && b.is_finite() && a < b {
            Ok(LossModel::Uniform { a, b })
        } else {
            Err(RiskError::domain(format!("uniform requires a < b, got [{a}, {b}]")))
        }
    }

    pub fn normal(mu: f64, sigma: f64) -> Result<Self> {
        positive("sigma", sigma)?;
        Ok(LossModel::Normal { mu, sigma })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        positive("rate", rate)?;
        Ok(LossModel::Exponential { rate })
    }

    pub fn student_t(nu: f64, loc: f64, scale: f64) -> Result<Self> {
        positive("scale", scale)?;
        if !(nu.is_finite() && nu > 1.0) {
            return Err(RiskError::domain(format!(
                "student-t requires nu > 1 for a finite mean, got {nu}"
            )));
        }
        Ok(LossModel::StudentT { nu, loc, scale })
    }

    pub fn log_normal(mu: f64, sigma: f64) -> Result<Self> {
        positive("sigma", sigma)?;
        Ok(LossModel::LogNormal { mu, sigma })
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        positive("shape", shape)?;
        positive("rate", rate)?;
        Ok(LossModel::Gamma { shape, rate })
    }

    pub fn weibull(shape: f64, scale: f64) -> Result<Self> {
        positive("shape", shape)?;
        positive("scale", scale)?;
        Ok(LossModel::Weibull { shape, scale })
    }

    pub fn pareto_ii(shape: f64, scale: f64) -> Result<Self> {
        positive("scale", scale)?;
        if !(shape.is_finite() && shape > 1.0) {
            return Err(RiskError::domain(format!(
                "pareto II requires shape > 1 for a finite mean, got {shape}"
            )));
        }
        Ok(LossModel::ParetoII { shape, scale })
    }

    pub fn generalized_pareto(alpha: f64, beta: f64) -> Result<Self> {
        positive("beta", beta)?;
        if !(alpha.is_finite() && alpha > -1.0) {
            return Err(RiskError::domain(format!(
                "generalized pareto requires alpha > -1, got {alpha}"
            )));
        }
        Ok(LossModel::GeneralizedPareto { alpha, beta })
    }

    /// GEV constructor. ξ ≥ 1 is accepted but the mean is infinite
    /// (the model is outside L¹); `has_finite_mean` reports this.
    pub fn gev(mu: f64, sigma: f64, xi: f64) -> Result<Self> {
        positive("sigma", sigma)?;
        if !xi.is_finite() {
            return Err(RiskError::domain("gev shape must be finite".to_string()));
        }
        Ok(LossModel::Gev { mu, sigma, xi })
    }

    /// Re-run the constructor checks; needed after deserializing a
    /// model from a config file, which bypasses the constructors.
    pub fn validate(&self) -> Result<()> {
        match *self {
            LossModel::Uniform { a, b } => LossModel::uniform(a, b),
            LossModel::Normal { mu, sigma } => LossModel::normal(mu, sigma),
            LossModel::Exponential { rate } => LossModel::exponential(rate),
            LossModel::StudentT { nu, loc, scale } => LossModel::student_t(nu, loc, scale),
            LossModel::LogNormal { mu, sigma } => LossModel::log_normal(mu, sigma),
            LossModel::Gamma { shape, rate } => LossModel::gamma(shape, rate),
            LossModel::Weibull { shape, scale } => LossModel::weibull(shape, scale),
            LossModel::ParetoII { shape, scale } => LossModel::pareto_ii(shape, scale),
            LossModel::GeneralizedPareto { alpha, beta } => {
                LossModel::generalized_pareto(alpha, beta)
            }
            LossModel::Gev { mu, sigma, xi } => LossModel::gev(mu, sigma, xi),
        }
        .map(|_| ())
    }

    pub fn has_finite_mean(&self) -> bool {
        !matches!(self, LossModel::Gev { xi, .. } if *xi >= 1.0)
    }

    /// Distribution function F(x).
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            LossModel::Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
            LossModel::Normal { mu, sigma } => special::norm_cdf((x - mu) / sigma),
            LossModel::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            LossModel::StudentT { nu, loc, scale } => special::t_cdf((x - loc) / scale, nu),
            LossModel::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    special::norm_cdf((x.ln() - mu) / sigma)
                }
            }
            LossModel::Gamma { shape, rate } => special::gamma_p(shape, rate * x),
            LossModel::Weibull { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-(x / scale).powf(shape)).exp_m1()
                }
            }
            LossModel::ParetoII { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    1.0 - (scale / (scale + x)).powf(shape)
                }
            }
            LossModel::GeneralizedPareto { alpha, beta } => {
                if x <= 0.0 {
                    0.0
                } else if alpha.abs() < GP_EXP_EPS {
                    -(-x / beta).exp_m1()
                } else {
                    let t = 1.0 + alpha * x / beta;
                    if t <= 0.0 {
                        1.0
                    } else {
                        1.0 - t.powf(-(alpha + 1.0) / alpha)
                    }
                }
            }
            LossModel::Gev { mu, sigma, xi } => {
                let z = (x - mu) / sigma;
                if xi == 0.0 {
                    (-(-z).exp()).exp()
                } else {
                    let t = 1.0 + xi * z;
                    if t <= 0.0 {
                        if xi > 0.0 {
                            0.0
                        } else {
                            1.0
                        }
                    } else {
                        (-t.powf(-1.0 / xi)).exp()
                    }
                }
            }
        }
    }

    /// Density f(x).
    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            LossModel::Uniform { a, b } => {
                if x < a || x > b {
                    0.0
                } else {
                    1.0 / (b - a)
                }
            }
            LossModel::Normal { mu, sigma } => special::norm_pdf((x - mu) / sigma) / sigma,
            LossModel::Exponential { rate } => {
                if x < 0.0 {
                    0.0
                } else {
                    rate * (-rate * x).exp()
                }
            }
            LossModel::StudentT { nu, loc, scale } => {
                special::t_pdf((x - loc) / scale, nu) / scale
            }
            LossModel::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    special::norm_pdf((x.ln() - mu) / sigma) / (x * sigma)
                }
            }
            LossModel::Gamma { shape, rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    (shape * rate.ln() + (shape - 1.0) * x.ln() - rate * x
                        - special::ln_gamma(shape))
                    .exp()
                }
            }
            LossModel::Weibull { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    let z = x / scale;
                    shape / scale * z.powf(shape - 1.0) * (-z.powf(shape)).exp()
                }
            }
            LossModel::ParetoII { shape, scale } => {
                if x < 0.0 {
                    0.0
                } else {
                    shape / scale * (scale / (scale + x)).powf(shape + 1.0)
                }
            }
            LossModel::GeneralizedPareto { alpha, beta } => {
                if x < 0.0 {
                    0.0
                } else if alpha.abs() < GP_EXP_EPS {
                    (-x / beta).exp() / beta
                } else {
                    let t = 1.0 + alpha * x / beta;
                    if t <= 0.0 {
                        0.0
                    } else {
                        (alpha + 1.0) / beta * t.powf(-(alpha + 1.0) / alpha - 1.0)
                    }
                }
            }
            LossModel::Gev { mu, sigma, xi } => {
                let z = (x - mu) / sigma;
                if xi == 0.0 {
                    let e = (-z).exp();
                    e * (-e).exp() / sigma
                } else {
                    let t = 1.0 + xi * z;
                    if t <= 0.0 {
                        0.0
                    } else {
                        let tp = t.powf(-1.0 / xi);
                        tp / t * (-tp).exp() / sigma
                    }
                }
            }
        }
    }

    /// Quantile F⁻¹(p); the Value at Risk at level p.
    pub fn quantile(&self, p: ProbLevel) -> f64 {
        let p = p.value();
        match *self {
            LossModel::Uniform { a, b } => a + (b - a) * p,
            LossModel::Normal { mu, sigma } => mu + sigma * special::norm_ppf(p),
            LossModel::Exponential { rate } => -(1.0 - p).ln() / rate,
            LossModel::StudentT { nu, loc, scale } => loc + scale * special::t_ppf(p, nu),
            LossModel::LogNormal { mu, sigma } => (mu + sigma * special::norm_ppf(p)).exp(),
            LossModel::Gamma { shape, rate } => special::gamma_p_inv(shape, p) / rate,
            LossModel::Weibull { shape, scale } => scale * (-(1.0 - p).ln()).powf(1.0 / shape),
            LossModel::ParetoII { shape, scale } => {
                scale * ((1.0 - p).powf(-1.0 / shape) - 1.0)
            }
            LossModel::GeneralizedPareto { alpha, beta } => {
                if alpha.abs() < GP_EXP_EPS {
                    -beta * (1.0 - p).ln()
                } else {
                    beta / alpha * ((1.0 - p).powf(-alpha / (alpha + 1.0)) - 1.0)
                }
            }
            LossModel::Gev { mu, sigma, xi } => {
                if xi == 0.0 {
                    mu - sigma * (-p.ln()).ln()
                } else {
                    mu + sigma / xi * ((-p.ln()).powf(-xi) - 1.0)
                }
            }
        }
    }

    /// 𝔼[X]. Infinite only for the GEV with ξ ≥ 1.
    pub fn mean(&self) -> f64 {
        match *self {
            LossModel::Uniform { a, b } => 0.5 * (a + b),
            LossModel::Normal { mu, .. } => mu,
            LossModel::Exponential { rate } => 1.0 / rate,
            LossModel::StudentT { loc, .. } => loc,
            LossModel::LogNormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
            LossModel::Gamma { shape, rate } => shape / rate,
            LossModel::Weibull { shape, scale } => {
                scale * special::gamma_fn(1.0 + 1.0 / shape)
            }
            LossModel::ParetoII { shape, scale } => scale / (shape - 1.0),
            LossModel::GeneralizedPareto { beta, .. } => beta,
            LossModel::Gev { mu, sigma, xi } => {
                if xi >= 1.0 {
                    f64::INFINITY
                } else if xi == 0.0 {
                    mu + sigma * special::EULER_GAMMA
                } else {
                    mu + sigma * (special::gamma_fn(1.0 - xi) - 1.0) / xi
                }
            }
        }
    }

    /// Expected Shortfall ES_p = (1/(1−p)) ∫_p^1 F⁻¹(u) du, closed or
    /// semi-closed per family.
    pub fn es(&self, p: ProbLevel) -> Result<f64> {
        let q = self.quantile(p);
        let pv = p.value();
        let w = 1.0 - pv;
        let value = match *self {
            LossModel::Uniform { b, .. } => 0.5 * (q + b),
            LossModel::Normal { mu, sigma } => {
                mu + sigma * special::norm_pdf(special::norm_ppf(pv)) / w
            }
            LossModel::Exponential { rate } => q + 1.0 / rate,
            LossModel::StudentT { nu, loc, scale } => {
                let z = special::t_ppf(pv, nu);
                loc + scale * special::t_pdf(z, nu) * (nu + z * z) / ((nu - 1.0) * w)
            }
            LossModel::LogNormal { mu, sigma } => {
                let z = special::norm_ppf(pv);
                (mu + 0.5 * sigma * sigma).exp() * special::norm_sf(z - sigma) / w
            }
            LossModel::Gamma { shape, rate } => {
                shape / rate * special::gamma_q(shape + 1.0, rate * q) / w
            }
            LossModel::Weibull { shape, scale } => {
                let k = 1.0 + 1.0 / shape;
                scale * special::gamma_fn(k) * special::gamma_q(k, -(1.0 - pv).ln()) / w
            }
            LossModel::ParetoII { shape, scale } => q + (scale + q) / (shape - 1.0),
            LossModel::GeneralizedPareto { alpha, beta } => {
                if alpha.abs() < GP_EXP_EPS {
                    q + beta
                } else {
                    beta / alpha * ((alpha + 1.0) * (1.0 - pv).powf(-alpha / (alpha + 1.0)) - 1.0)
                }
            }
            LossModel::Gev { mu, sigma, xi } => {
                if xi >= 1.0 {
                    return Err(RiskError::domain(
                        "expected shortfall is infinite for GEV with xi >= 1".to_string(),
                    ));
                }
                if xi == 0.0 {
                    let tail =
                        special::EULER_GAMMA + pv * (-pv.ln()).ln() - special::li(pv)?;
                    mu + sigma * tail / w
                } else {
                    let g = special::gamma_lower(1.0 - xi, -pv.ln());
                    mu + sigma / xi * (g / w - 1.0)
                }
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(RiskError::computation(format!(
                "non-finite expected shortfall for {self:?} at p={pv}"
            )))
        }
    }

    /// Generic ES via adaptive quadrature of the quantile over (p, 1).
    ///
    /// Independent numeric route used to cross-check the closed forms.
    pub fn es_quadrature(&self, p: ProbLevel) -> Result<f64> {
        if !self.has_finite_mean() {
            return Err(RiskError::domain(
                "expected shortfall is infinite for models outside L1".to_string(),
            ));
        }
        let pv = p.value();
        let integral = quad::integrate_upper_tail(
            |u| self.quantile(ProbLevel(u.clamp(1e-16, 1.0 - 1e-16))),
            pv,
            1e-10,
        )?;
        Ok(integral / (1.0 - pv))
    }

    /// Infimum of D_X = { p : VaR_p(X) > 𝔼[X] }, i.e. F(𝔼[X]).
    pub fn dx_lower_bound(&self) -> f64 {
        match *self {
            LossModel::Uniform { .. } | LossModel::Normal { .. } | LossModel::StudentT { .. } => {
                0.5
            }
            LossModel::Exponential { .. } => 1.0 - (-1.0f64).exp(),
            LossModel::LogNormal { sigma, .. } => special::norm_cdf(0.5 * sigma),
            LossModel::Gamma { shape, .. } => special::gamma_p(shape, shape),
            LossModel::Weibull { shape, .. } => {
                let m = special::gamma_fn(1.0 + 1.0 / shape);
                1.0 - (-m.powf(shape)).exp()
            }
            LossModel::ParetoII { shape, .. } => 1.0 - ((shape - 1.0) / shape).powf(shape),
            LossModel::GeneralizedPareto { alpha, .. } => {
                if alpha.abs() < GP_EXP_EPS {
                    1.0 - (-1.0f64).exp()
                } else {
                    1.0 - (1.0 + alpha).powf(-(alpha + 1.0) / alpha)
                }
            }
            LossModel::Gev { xi, .. } => {
                if xi >= 1.0 {
                    1.0
                } else if xi == 0.0 {
                    (-(-special::EULER_GAMMA).exp()).exp()
                } else {
                    (-special::gamma_fn(1.0 - xi).powf(-1.0 / xi)).exp()
                }
            }
        }
    }

    /// Closed / semi-closed flexibility index θ_p for this family.
    ///
    /// Must agree with the generic `(1−p)(ES_p − VaR_p)/(VaR_p − 𝔼[X])`
    /// to 1e-8 relative on D_X.
    pub fn theta_closed(&self, p: ProbLevel) -> Result<f64> {
        let pv = p.value();
        if let LossModel::Gev { xi, .. } = *self {
            // piecewise definition: the index vanishes outside L1
            if xi >= 1.0 {
                return Ok(0.0);
            }
        }
        let bound = self.dx_lower_bound();
        if pv <= bound {
            return Err(RiskError::domain(format!(
                "theta index is defined on D_X = ({bound:.6}, 1); p={pv} is outside"
            )));
        }
        let w = 1.0 - pv;
        let value = match *self {
            LossModel::Uniform { .. } => w * w / (2.0 * pv - 1.0),
            LossModel::Normal { .. } => {
                let z = special::norm_ppf(pv);
                special::norm_pdf(z) / z - w
            }
            LossModel::Exponential { .. } => -w / (w.ln() + 1.0),
            LossModel::StudentT { nu, .. } => {
                let z = special::t_ppf(pv, nu);
                special::t_pdf(z, nu) * (nu + z * z) / ((nu - 1.0) * z) - w
            }
            LossModel::LogNormal { sigma, .. } => {
                let z = special::norm_ppf(pv);
                let half = (0.5 * sigma * sigma).exp();
                (half * special::norm_sf(z - sigma) - w * (sigma * z).exp())
                    / ((sigma * z).exp() - half)
            }
            LossModel::ParetoII { shape, .. } => {
                w / ((shape - 1.0) - shape * w.powf(1.0 / shape))
            }
            LossModel::GeneralizedPareto { alpha, beta } => {
                let q = self.quantile(p);
                if alpha.abs() < GP_EXP_EPS {
                    -w / (w.ln() + 1.0)
                } else {
                    w * (alpha * q + beta) / (q - beta)
                }
            }
            LossModel::Gev { xi, .. } => {
                if xi == 0.0 {
                    special::li(pv)? / ((-pv.ln()).ln() + special::EULER_GAMMA) - 1.0
                } else {
                    let t = (-pv.ln()).powf(-xi);
                    let g = special::gamma_lower(1.0 - xi, -pv.ln());
                    (g - w * t) / (t - special::gamma_fn(1.0 - xi))
                }
            }
            // Gamma and Weibull have no elementary closed form; the
            // semi-closed route goes through the incomplete-gamma ES.
            LossModel::Gamma { .. } | LossModel::Weibull { .. } => {
                let q = self.quantile(p);
                w * (self.es(p)? - q) / (q - self.mean())
            }
        };
        if value.is_finite() && value >= 0.0 {
            Ok(value)
        } else {
            Err(RiskError::computation(format!(
                "theta index evaluation failed for {self:?} at p={pv}: {value}"
            )))
        }
    }
}

/// θ-index of the Generalized Pareto family in mean-excess form:
/// `(1−p)(α VaR_p + β)/(VaR_p − β)`.
pub fn gp_theta(alpha: f64, beta: f64, p: ProbLevel) -> Result<f64> {
    LossModel::generalized_pareto(alpha, beta)?.theta_closed(p)
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(RiskError::domain(format!("{name} must be strictly positive, got {v}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pl(p: f64) -> ProbLevel {
        ProbLevel::new(p).unwrap()
    }

    #[test]
    fn prob_level_rejects_boundaries() {
        assert!(ProbLevel::new(0.0).is_err());
        assert!(ProbLevel::new(1.0).is_err());
        assert!(ProbLevel::new(f64::NAN).is_err());
        assert!(ProbLevel::new(0.5).is_ok());
    }

    #[test]
    fn exponential_closed_forms() {
        let m = LossModel::exponential(1.0).unwrap();
        assert_relative_eq!(m.quantile(pl(0.95)), 2.995732273553991, epsilon = 1e-12);
        assert_relative_eq!(m.es(pl(0.95)).unwrap(), 3.995732273553991, epsilon = 1e-12);
        let m = LossModel::exponential(0.01).unwrap();
        assert_relative_eq!(m.mean(), 100.0);
    }

    #[test]
    fn normal_quantile_and_es() {
        let m = LossModel::normal(0.0, 1.0).unwrap();
        // both frozen from bisection/quadrature on an independent normal cdf
        assert_relative_eq!(m.quantile(pl(0.9)), 1.2815515655446004, epsilon = 1e-9);
        assert_relative_eq!(m.es(pl(0.9)).unwrap(), 1.7549833193248683, epsilon = 1e-9);
    }

    #[test]
    fn uniform_midpoint() {
        let m = LossModel::uniform(0.0, 1.0).unwrap();
        assert_relative_eq!(m.quantile(pl(0.5)), 0.5);
        assert_relative_eq!(m.mean(), 0.5);
    }

    #[test]
    fn pareto_mean() {
        let m = LossModel::pareto_ii(2.0, 100.0).unwrap();
        assert_relative_eq!(m.mean(), 100.0);
    }

    #[test]
    fn gev_gumbel_mean_is_euler_constant() {
        let m = LossModel::gev(0.0, 1.0, 0.0).unwrap();
        assert_relative_eq!(m.mean(), 0.5772156649015329, epsilon = 1e-12);
        // cross-check against quadrature of the quantile over (0,1)
        let lo = m.es_quadrature(pl(1e-9)).unwrap() * (1.0 - 1e-9);
        assert_relative_eq!(lo, m.mean(), max_relative = 1e-6);
    }

    #[test]
    fn dx_bounds_match_closed_forms() {
        assert_relative_eq!(LossModel::uniform(0.0, 1.0).unwrap().dx_lower_bound(), 0.5);
        assert_relative_eq!(LossModel::normal(0.0, 1.0).unwrap().dx_lower_bound(), 0.5);
        assert_relative_eq!(
            LossModel::exponential(1.0).unwrap().dx_lower_bound(),
            1.0 - (-1.0f64).exp(),
            epsilon = 1e-15
        );
        assert_relative_eq!(
            LossModel::pareto_ii(2.0, 1.0).unwrap().dx_lower_bound(),
            0.75,
            epsilon = 1e-15
        );
    }

    #[test]
    fn quantile_cdf_roundtrip_all_families() {
        let models = [
            LossModel::uniform(-2.0, 5.0).unwrap(),
            LossModel::normal(3.0, 2.0).unwrap(),
            LossModel::exponential(0.25).unwrap(),
            LossModel::student_t(4.0, 100.0, 10.0).unwrap(),
            LossModel::log_normal(0.0, 1.0).unwrap(),
            LossModel::gamma(1.5, 0.5).unwrap(),
            LossModel::weibull(1.4, 50.5).unwrap(),
            LossModel::pareto_ii(2.0, 100.0).unwrap(),
            LossModel::generalized_pareto(0.5, 1.0).unwrap(),
            LossModel::generalized_pareto(-0.4, 1.0).unwrap(),
            LossModel::gev(0.0, 1.0, 0.2).unwrap(),
            LossModel::gev(0.0, 1.0, 0.0).unwrap(),
            LossModel::gev(0.0, 1.0, -1.0).unwrap(),
        ];
        for m in &models {
            for i in 1..40 {
                let p = i as f64 / 40.0;
                let q = m.quantile(pl(p));
                assert!(
                    (m.cdf(q) - p).abs() < 1e-9,
                    "{m:?} p={p} q={q} cdf={}",
                    m.cdf(q)
                );
            }
        }
    }

    #[test]
    fn quantile_strictly_increasing() {
        let m = LossModel::gamma(0.25, 1.0).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for i in 1..100 {
            let q = m.quantile(pl(i as f64 / 100.0));
            assert!(q > prev);
            prev = q;
        }
    }

    #[test]
    fn theta_closed_agrees_with_generic_definition() {
        let models = [
            LossModel::uniform(0.0, 1.0).unwrap(),
            LossModel::normal(0.0, 1.0).unwrap(),
            LossModel::exponential(3.0).unwrap(),
            LossModel::student_t(4.0, 0.0, 1.0).unwrap(),
            LossModel::log_normal(0.0, 1.0).unwrap(),
            LossModel::gamma(1.5, 1.0).unwrap(),
            LossModel::weibull(1.5, 1.0).unwrap(),
            LossModel::pareto_ii(2.0, 100.0).unwrap(),
            LossModel::generalized_pareto(0.5, 1.0).unwrap(),
            LossModel::gev(0.0, 1.0, 0.2).unwrap(),
            LossModel::gev(0.0, 1.0, 0.0).unwrap(),
        ];
        for m in &models {
            let lo = m.dx_lower_bound();
            for i in 1..=8 {
                let p = lo + (0.999 - lo) * i as f64 / 9.0;
                let p = pl(p);
                let theta = m.theta_closed(p).unwrap();
                let generic = (1.0 - p.value()) * (m.es_quadrature(p).unwrap() - m.quantile(p))
                    / (m.quantile(p) - m.mean());
                assert_relative_eq!(theta, generic, max_relative = 1e-7, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn closed_es_matches_quadrature_es() {
        let models = [
            LossModel::gamma(0.25, 2.0).unwrap(),
            LossModel::weibull(0.75, 10.0).unwrap(),
            LossModel::gev(1.0, 2.0, 0.4).unwrap(),
            LossModel::gev(0.0, 1.0, 0.0).unwrap(),
            LossModel::log_normal(1.0, 0.5).unwrap(),
        ];
        for m in &models {
            for &p in &[0.5, 0.9, 0.975, 0.999] {
                let p = pl(p);
                assert_relative_eq!(
                    m.es(p).unwrap(),
                    m.es_quadrature(p).unwrap(),
                    max_relative = 1e-8
                );
            }
        }
    }

    #[test]
    fn interpolation_chain_on_dx() {
        let m = LossModel::log_normal(0.0, 1.0).unwrap();
        let lo = m.dx_lower_bound();
        for i in 1..20 {
            let p = pl(lo + (0.999 - lo) * i as f64 / 20.0);
            let q = m.quantile(p);
            let es = m.es(p).unwrap();
            assert!(m.mean() < q && q < es);
        }
    }

    #[test]
    fn gp_mean_excess_affinity() {
        // es(p) - quantile(p) = alpha * quantile(p) + beta
        let (alpha, beta) = (0.5, 2.0);
        let m = LossModel::generalized_pareto(alpha, beta).unwrap();
        for &p in &[0.3, 0.7, 0.95, 0.999] {
            let p = pl(p);
            let q = m.quantile(p);
            assert_relative_eq!(
                m.es(p).unwrap() - q,
                alpha * q + beta,
                max_relative = 1e-8
            );
        }
    }

    #[test]
    fn gp_embeds_pareto_ii() {
        // alpha = 1/(a-1), beta = kappa/(a-1)
        let (a, kappa) = (2.0, 100.0);
        let gp = LossModel::generalized_pareto(1.0 / (a - 1.0), kappa / (a - 1.0)).unwrap();
        let lomax = LossModel::pareto_ii(a, kappa).unwrap();
        for i in 1..50 {
            let p = pl(i as f64 / 50.0);
            assert_relative_eq!(gp.quantile(p), lomax.quantile(p), max_relative = 1e-9);
        }
        assert_relative_eq!(
            gp_theta(1.0, 100.0, pl(0.975)).unwrap(),
            lomax.theta_closed(pl(0.975)).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn gp_alpha_zero_embeds_exponential() {
        let gp = LossModel::generalized_pareto(0.0, 2.0).unwrap();
        let ex = LossModel::exponential(0.5).unwrap();
        for i in 1..20 {
            let p = pl(i as f64 / 20.0);
            assert_relative_eq!(gp.quantile(p), ex.quantile(p), max_relative = 1e-12);
        }
        assert_relative_eq!(
            gp.theta_closed(pl(0.95)).unwrap(),
            ex.theta_closed(pl(0.95)).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn gp_rescaled_beta_special_case() {
        // c = 1 gives the uniform distribution on [0, omega]
        let (c, omega) = (1.0, 3.0);
        let gp =
            LossModel::generalized_pareto(1.0 / (c + 1.0) - 1.0, omega / (c + 1.0)).unwrap();
        let unif = LossModel::uniform(0.0, omega).unwrap();
        for i in 1..20 {
            let p = pl(i as f64 / 20.0);
            assert_relative_eq!(gp.quantile(p), unif.quantile(p), max_relative = 1e-9);
        }
    }

    #[test]
    fn theta_outside_dx_is_domain_error() {
        let m = LossModel::normal(0.0, 1.0).unwrap();
        let err = m.theta_closed(pl(0.4)).unwrap_err();
        assert!(err.to_string().contains("D_X"));
    }

    #[test]
    fn gev_heavy_shape_theta_is_zero() {
        let m = LossModel::gev(0.0, 1.0, 1.2).unwrap();
        assert!(!m.has_finite_mean());
        assert_eq!(m.theta_closed(pl(0.99)).unwrap(), 0.0);
        assert!(m.es(pl(0.99)).is_err());
    }

    #[test]
    fn constructor_validation() {
        assert!(LossModel::student_t(1.0, 0.0, 1.0).is_err());
        assert!(LossModel::pareto_ii(1.0, 1.0).is_err());
        assert!(LossModel::generalized_pareto(-1.0, 1.0).is_err());
        assert!(LossModel::normal(0.0, 0.0).is_err());
        assert!(LossModel::uniform(1.0, 1.0).is_err());
    }
}
