//! Conditional distributions: registry, densities, scores, information
//! matrices, sampling, moments and distribution functions.
//!
//! Every quantity is expressed in the natural parameter space θ. Parameters
//! are ordered by role: location, scale, skewness, shape for univariate
//! laws; for the multivariate laws the order is locations 1..N, scales 1..N,
//! correlations (2,1), (3,1), (3,2), ... in row-major lower-triangular
//! order, then shape.

mod multivariate;
mod univariate;

pub(crate) use multivariate::correlation_matrix;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GasError, Result};

/// Largest series dimension supported by the multivariate laws.
pub const MAX_DIM: usize = 4;

/// Bounds on the Student-t type shape (degrees of freedom) parameter.
pub const SHAPE_BOUNDS: (f64, f64) = (2.01, 50.0);
/// Bounds on the skewness parameter of the skewed Student-t.
pub const SKEW_BOUNDS: (f64, f64) = (0.1, 2.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistributionId {
    Norm,
    Std,
    Sstd,
    Ald,
    Poi,
    Gamma,
    Exp,
    Beta,
    Mvnorm,
    Mvt,
}

impl DistributionId {
    pub const ALL: [DistributionId; 10] = [
        DistributionId::Norm,
        DistributionId::Std,
        DistributionId::Sstd,
        DistributionId::Ald,
        DistributionId::Poi,
        DistributionId::Gamma,
        DistributionId::Exp,
        DistributionId::Beta,
        DistributionId::Mvnorm,
        DistributionId::Mvt,
    ];

    pub fn label(self) -> &'static str {
        match self {
            DistributionId::Norm => "norm",
            DistributionId::Std => "std",
            DistributionId::Sstd => "sstd",
            DistributionId::Ald => "ald",
            DistributionId::Poi => "poi",
            DistributionId::Gamma => "gamma",
            DistributionId::Exp => "exp",
            DistributionId::Beta => "beta",
            DistributionId::Mvnorm => "mvnorm",
            DistributionId::Mvt => "mvt",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DistributionId::Norm => "Gaussian",
            DistributionId::Std => "Student-t",
            DistributionId::Sstd => "Skew-Student-t",
            DistributionId::Ald => "Asymmetric Laplace",
            DistributionId::Poi => "Poisson",
            DistributionId::Gamma => "Gamma",
            DistributionId::Exp => "Exponential",
            DistributionId::Beta => "Beta",
            DistributionId::Mvnorm => "Multivariate Gaussian",
            DistributionId::Mvt => "Multivariate Student-t",
        }
    }

    pub fn is_multivariate(self) -> bool {
        matches!(self, DistributionId::Mvnorm | DistributionId::Mvt)
    }

    fn univariate_roles(self) -> &'static [Role] {
        use Role::*;
        match self {
            DistributionId::Norm => &[Location, Scale],
            DistributionId::Std => &[Location, Scale, Shape],
            DistributionId::Sstd => &[Location, Scale, Skewness, Shape],
            DistributionId::Ald => &[Location, Scale, Skewness],
            DistributionId::Poi | DistributionId::Exp => &[Location],
            DistributionId::Gamma | DistributionId::Beta => &[Scale, Shape],
            DistributionId::Mvnorm => &[Location, Scale, Correlation],
            DistributionId::Mvt => &[Location, Scale, Correlation, Shape],
        }
    }
}

impl fmt::Display for DistributionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for DistributionId {
    type Err = GasError;

    fn from_str(s: &str) -> Result<Self> {
        DistributionId::ALL
            .into_iter()
            .find(|d| d.label() == s)
            .ok_or_else(|| GasError::UnknownDistribution(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Location,
    Scale,
    Skewness,
    Shape,
    Correlation,
}

impl Role {
    pub fn label(self) -> &'static str {
        match self {
            Role::Location => "location",
            Role::Scale => "scale",
            Role::Skewness => "skewness",
            Role::Shape => "shape",
            Role::Correlation => "correlation",
        }
    }
}

impl FromStr for Role {
    type Err = GasError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "location" => Ok(Role::Location),
            "scale" => Ok(Role::Scale),
            "skewness" => Ok(Role::Skewness),
            "shape" => Ok(Role::Shape),
            "correlation" => Ok(Role::Correlation),
            other => Err(GasError::InvalidArgument(format!("unknown parameter role `{other}`"))),
        }
    }
}

/// Score scaling: the power γ of the inverse information matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scaling {
    Identity,
    Inv,
    InvSqrt,
}

impl Scaling {
    pub fn gamma(self) -> f64 {
        match self {
            Scaling::Identity => 0.0,
            Scaling::Inv => 1.0,
            Scaling::InvSqrt => 0.5,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Scaling::Identity => "Identity",
            Scaling::Inv => "Inv",
            Scaling::InvSqrt => "InvSqrt",
        }
    }
}

impl FromStr for Scaling {
    type Err = GasError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Identity" => Ok(Scaling::Identity),
            "Inv" => Ok(Scaling::Inv),
            "InvSqrt" => Ok(Scaling::InvSqrt),
            other => Err(GasError::InvalidArgument(format!("unknown scaling type `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Univariate,
    Multivariate,
}

/// Open interval `(lower, upper)`; infinite ends serialize as `null`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    #[serde(serialize_with = "unbounded")]
    pub lower: f64,
    #[serde(serialize_with = "unbounded")]
    pub upper: f64,
}

impl Interval {
    pub const REAL: Interval = Interval { lower: f64::NEG_INFINITY, upper: f64::INFINITY };
    pub const POSITIVE: Interval = Interval { lower: 0.0, upper: f64::INFINITY };

    pub fn new(lower: f64, upper: f64) -> Self {
        Interval { lower, upper }
    }

    pub fn contains(&self, x: f64) -> bool {
        x.is_finite() && x > self.lower && x < self.upper
    }
}

fn unbounded<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_some(v)
    } else {
        s.serialize_none()
    }
}

/// Registry entry describing a conditional density.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistInfo {
    pub label: String,
    pub name: String,
    pub kind: Kind,
    pub dimension: usize,
    pub param_roles: Vec<Role>,
    pub param_names: Vec<String>,
    pub num_params: usize,
    pub supported_scalings: Vec<Scaling>,
    pub bounds: Vec<Interval>,
}

/// Registry lookup.
pub fn dist_info(id: DistributionId, dim: usize) -> Result<DistInfo> {
    Ok(Distribution::new(id, dim)?.info())
}

/// A conditional distribution of a given series dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Distribution {
    pub id: DistributionId,
    pub dim: usize,
}

impl Distribution {
    pub fn new(id: DistributionId, dim: usize) -> Result<Self> {
        let ok = if id.is_multivariate() { (2..=MAX_DIM).contains(&dim) } else { dim == 1 };
        if !ok {
            return Err(GasError::DimensionUnsupported { dist: id.label().into(), dim });
        }
        Ok(Distribution { id, dim })
    }

    pub fn univariate(id: DistributionId) -> Result<Self> {
        Self::new(id, 1)
    }

    pub fn is_multivariate(&self) -> bool {
        self.id.is_multivariate()
    }

    pub fn num_params(&self) -> usize {
        match self.id {
            DistributionId::Mvnorm => 2 * self.dim + self.dim * (self.dim - 1) / 2,
            DistributionId::Mvt => 2 * self.dim + self.dim * (self.dim - 1) / 2 + 1,
            id => id.univariate_roles().len(),
        }
    }

    /// Distinct roles in parameter order (each multivariate role spans
    /// several coordinates).
    pub fn role_groups(&self) -> &'static [Role] {
        self.id.univariate_roles()
    }

    pub fn roles(&self) -> Vec<Role> {
        (0..self.num_params()).map(|i| self.role(i)).collect()
    }

    pub fn supported_scalings(&self) -> Vec<Scaling> {
        match self.id {
            DistributionId::Sstd | DistributionId::Mvnorm | DistributionId::Mvt => {
                vec![Scaling::Identity]
            }
            _ => vec![Scaling::Identity, Scaling::Inv, Scaling::InvSqrt],
        }
    }

    pub fn supports_scaling(&self, scaling: Scaling) -> bool {
        self.supported_scalings().contains(&scaling)
    }

    pub fn bounds(&self) -> Vec<Interval> {
        (0..self.num_params()).map(|i| self.bound(i)).collect()
    }

    /// Role of the parameter at `index`.
    pub fn role(&self, index: usize) -> Role {
        let n = self.dim;
        match self.id {
            DistributionId::Mvnorm | DistributionId::Mvt => match index {
                i if i < n => Role::Location,
                i if i < 2 * n => Role::Scale,
                i if i < 2 * n + n * (n - 1) / 2 => Role::Correlation,
                _ => Role::Shape,
            },
            id => id.univariate_roles()[index],
        }
    }

    /// Open interval of admissible values for the parameter at `index`.
    pub fn bound(&self, index: usize) -> Interval {
        use DistributionId::*;
        match (self.id, self.role(index)) {
            (Norm | Std | Sstd | Ald | Mvnorm | Mvt, Role::Location) => Interval::REAL,
            (Std | Sstd | Mvt, Role::Shape) => Interval::new(SHAPE_BOUNDS.0, SHAPE_BOUNDS.1),
            (Sstd, Role::Skewness) => Interval::new(SKEW_BOUNDS.0, SKEW_BOUNDS.1),
            (_, Role::Correlation) => Interval::new(-1.0, 1.0),
            _ => Interval::POSITIVE,
        }
    }

    pub fn param_names(&self) -> Vec<String> {
        if !self.is_multivariate() {
            return self.roles().iter().map(|r| r.label().to_string()).collect();
        }
        let n = self.dim;
        let mut names: Vec<String> = (1..=n).map(|i| format!("location{i}")).collect();
        names.extend((1..=n).map(|i| format!("scale{i}")));
        for h in 2..=n {
            for k in 1..h {
                names.push(format!("correlation{h}{k}"));
            }
        }
        if self.id == DistributionId::Mvt {
            names.push("shape".into());
        }
        names
    }

    pub fn info(&self) -> DistInfo {
        DistInfo {
            label: self.id.label().into(),
            name: self.id.name().into(),
            kind: if self.is_multivariate() { Kind::Multivariate } else { Kind::Univariate },
            dimension: self.dim,
            param_roles: self.roles(),
            param_names: self.param_names(),
            num_params: self.num_params(),
            supported_scalings: self.supported_scalings(),
            bounds: self.bounds(),
        }
    }

    /// Checks length and strict interiority of θ. Positive-definiteness of
    /// a correlation block is verified where the matrix is factorized.
    pub fn check_params(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.num_params() {
            return Err(GasError::ShapeMismatch { expected: self.num_params(), got: theta.len() });
        }
        for (index, &v) in theta.iter().enumerate() {
            if !self.bound(index).contains(v) {
                return Err(GasError::ParamOutOfBounds { index, value: v });
            }
        }
        Ok(())
    }

    fn check_obs_len(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.dim {
            return Err(GasError::ShapeMismatch { expected: self.dim, got: y.len() });
        }
        Ok(())
    }

    fn support_error(&self, y: &[f64]) -> GasError {
        GasError::SupportViolation { dist: self.id.label().into(), value: y.to_vec() }
    }

    /// log p(y; θ).
    pub fn log_density(&self, y: &[f64], theta: &[f64]) -> Result<f64> {
        self.check_params(theta)?;
        self.check_obs_len(y)?;
        if self.is_multivariate() {
            multivariate::log_density(self, y, theta)
        } else {
            univariate::log_density(self.id, y[0], theta).ok_or_else(|| self.support_error(y))
        }
    }

    /// ∇ = ∂ log p(y; θ) / ∂θ.
    pub fn score(&self, y: &[f64], theta: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.num_params()];
        self.log_density_and_score(y, theta, &mut out)?;
        Ok(out)
    }

    /// Log-density and score in one pass; the score is written to `grad`.
    pub fn log_density_and_score(&self, y: &[f64], theta: &[f64], grad: &mut [f64]) -> Result<f64> {
        self.check_params(theta)?;
        self.check_obs_len(y)?;
        if grad.len() != theta.len() {
            return Err(GasError::ShapeMismatch { expected: theta.len(), got: grad.len() });
        }
        if self.is_multivariate() {
            multivariate::log_density_and_score(self, y, theta, grad)
        } else {
            univariate::log_density_and_score(self.id, y[0], theta, grad)
                .ok_or_else(|| self.support_error(y))
        }
    }

    /// Fisher information E[∇∇'] in the natural parametrization.
    pub fn information(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        if !self.supports_scaling(Scaling::Inv) {
            return Err(GasError::ScalingUnsupported {
                dist: self.id.label().into(),
                scaling: "Inv/InvSqrt".into(),
            });
        }
        self.check_params(theta)?;
        Ok(univariate::information(self.id, theta))
    }

    /// One draw y ~ p(·; θ).
    pub fn sample<R: Rng + ?Sized>(&self, theta: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.sample_into(theta, rng, &mut out)?;
        Ok(out)
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, theta: &[f64], rng: &mut R, out: &mut [f64]) -> Result<()> {
        self.check_params(theta)?;
        self.check_obs_len(out)?;
        if self.is_multivariate() {
            multivariate::sample(self, theta, rng, out)
        } else {
            out[0] = univariate::sample(self.id, theta, rng);
            Ok(())
        }
    }

    /// Conditional mean vector and (co)variance matrix.
    pub fn moments(&self, theta: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>)> {
        self.check_params(theta)?;
        if self.is_multivariate() {
            multivariate::moments(self, theta)
        } else {
            let (m, v) = univariate::moments(self.id, theta);
            if !m.is_finite() || !v.is_finite() {
                return Err(GasError::MomentUndefined(self.id.label().into()));
            }
            Ok((DVector::from_element(1, m), DMatrix::from_element(1, 1, v)))
        }
    }

    /// F(x; θ).
    pub fn cdf(&self, theta: &[f64], x: f64) -> Result<f64> {
        if self.is_multivariate() {
            return Err(GasError::MultivariateUnsupported);
        }
        self.check_params(theta)?;
        if x.is_nan() {
            return Err(GasError::InvalidArgument("cdf evaluated at NaN".into()));
        }
        Ok(univariate::cdf(self.id, theta, x))
    }

    /// inf{x : F(x; θ) ≥ p}.
    pub fn quantile(&self, theta: &[f64], p: f64) -> Result<f64> {
        if self.is_multivariate() {
            return Err(GasError::MultivariateUnsupported);
        }
        self.check_params(theta)?;
        if !(p > 0.0 && p < 1.0) {
            return Err(GasError::InvalidArgument(format!("probability {p} outside (0, 1)")));
        }
        Ok(univariate::quantile(self.id, theta, p))
    }
}

/// A natural-space parameter vector validated against its distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamVector {
    pub dist: Distribution,
    pub values: Vec<f64>,
}

impl ParamVector {
    pub fn new(dist: Distribution, values: Vec<f64>) -> Result<Self> {
        dist.check_params(&values)?;
        if dist.is_multivariate() {
            multivariate::correlation_cholesky(&dist, &values)?;
        }
        Ok(ParamVector { dist, values })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_matches_table() {
        let std = dist_info(DistributionId::Std, 1).unwrap();
        assert_eq!(std.param_roles, vec![Role::Location, Role::Scale, Role::Shape]);
        assert_eq!(std.num_params, 3);
        assert_eq!(std.supported_scalings, vec![Scaling::Identity, Scaling::Inv, Scaling::InvSqrt]);
        assert_eq!(std.bounds[2], Interval::new(2.01, 50.0));

        let mvt = dist_info(DistributionId::Mvt, 3).unwrap();
        assert_eq!(mvt.num_params, 10);
        assert_eq!(mvt.supported_scalings, vec![Scaling::Identity]);
        assert_eq!(dist_info(DistributionId::Mvnorm, 3).unwrap().num_params, 9);

        let poi = dist_info(DistributionId::Poi, 1).unwrap();
        assert_eq!(poi.param_roles, vec![Role::Location]);
        assert_eq!(poi.num_params, 1);

        let sstd = dist_info(DistributionId::Sstd, 1).unwrap();
        assert_eq!(sstd.num_params, 4);
        assert_eq!(sstd.supported_scalings, vec![Scaling::Identity]);
        assert_eq!(sstd.bounds[2], Interval::new(0.1, 2.0));
    }

    #[test]
    fn registry_errors() {
        assert!(matches!("foo".parse::<DistributionId>(), Err(GasError::UnknownDistribution(_))));
        assert!(matches!(
            Distribution::new(DistributionId::Mvt, 5),
            Err(GasError::DimensionUnsupported { .. })
        ));
        assert!(matches!(
            Distribution::new(DistributionId::Norm, 2),
            Err(GasError::DimensionUnsupported { .. })
        ));
        assert!(Distribution::new(DistributionId::Mvnorm, 1).is_err());
    }

    #[test]
    fn mv_param_names_follow_ordering() {
        let d = Distribution::new(DistributionId::Mvnorm, 3).unwrap();
        assert_eq!(
            d.param_names(),
            vec![
                "location1", "location2", "location3", "scale1", "scale2", "scale3",
                "correlation21", "correlation31", "correlation32"
            ]
        );
    }

    #[test]
    fn interval_serializes_unbounded_as_null() {
        let s = serde_json::to_string(&Interval::POSITIVE).unwrap();
        assert_eq!(s, r#"{"lower":0.0,"upper":null}"#);
    }

    #[test]
    fn out_of_bounds_params_rejected() {
        let d = Distribution::univariate(DistributionId::Std).unwrap();
        assert!(matches!(
            d.log_density(&[0.0], &[0.0, 1.0, 60.0]),
            Err(GasError::ParamOutOfBounds { index: 2, .. })
        ));
        assert!(matches!(
            d.log_density(&[0.0], &[0.0, -1.0, 5.0]),
            Err(GasError::ParamOutOfBounds { index: 1, .. })
        ));
    }
}
