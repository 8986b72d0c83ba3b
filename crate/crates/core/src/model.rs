//! Model specification and the score-driven recursion
//!
//! ```text
//! θ̃_{t+1} = κ + A s̃_t + B θ̃_t,    θ_t = Λ(θ̃_t),    θ̃_1 = (I − B)⁻¹ κ
//! ```
//!
//! with diagonal A and B and the scaled score s̃_t = Ĩ_t^{-γ} ∇̃_t.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{Distribution, Role, Scaling};
use crate::error::{GasError, Result};
use crate::links::{self, LinkSpec};

/// |θ̃_i| beyond this after an update is treated as divergence.
pub const STATE_LIMIT: f64 = 50.0;
/// Smallest admissible eigenvalue of Ĩ when the score is scaled.
pub const MIN_EIGENVALUE: f64 = 1e-10;

/// Which parameter roles are time-varying.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GasPar {
    pub location: bool,
    pub scale: bool,
    pub skewness: bool,
    pub shape: bool,
    pub correlation: bool,
}

impl GasPar {
    /// Only the scale moves, or the first role when there is no scale.
    pub fn default_for(dist: &Distribution) -> GasPar {
        let mut par = GasPar::default();
        let groups = dist.role_groups();
        let role = if groups.contains(&Role::Scale) { Role::Scale } else { groups[0] };
        par.set(role, true);
        par
    }

    pub fn get(&self, role: Role) -> bool {
        match role {
            Role::Location => self.location,
            Role::Scale => self.scale,
            Role::Skewness => self.skewness,
            Role::Shape => self.shape,
            Role::Correlation => self.correlation,
        }
    }

    pub fn set(&mut self, role: Role, value: bool) {
        match role {
            Role::Location => self.location = value,
            Role::Scale => self.scale = value,
            Role::Skewness => self.skewness = value,
            Role::Shape => self.shape = value,
            Role::Correlation => self.correlation = value,
        }
    }

    fn enabled(&self) -> impl Iterator<Item = Role> + '_ {
        [Role::Location, Role::Scale, Role::Skewness, Role::Shape, Role::Correlation]
            .into_iter()
            .filter(|r| self.get(*r))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GasSpec {
    pub dist: Distribution,
    pub scaling: Scaling,
    pub gas_par: GasPar,
    pub scalar_parameters: bool,
    pub links: LinkSpec,
}

impl GasSpec {
    pub fn new(dist: Distribution, scaling: Scaling, gas_par: GasPar, scalar_parameters: bool) -> Result<Self> {
        if !dist.supports_scaling(scaling) {
            return Err(GasError::ScalingUnsupported {
                dist: dist.id.label().into(),
                scaling: scaling.label().into(),
            });
        }
        let roles = dist.role_groups();
        if let Some(role) = gas_par.enabled().find(|r| !roles.contains(r)) {
            return Err(GasError::InvalidSpec(format!(
                "{} has no {} parameter",
                dist.id.label(),
                role.label()
            )));
        }
        if gas_par.enabled().next().is_none() {
            return Err(GasError::InvalidSpec("no parameter is time-varying".into()));
        }
        if scalar_parameters && !dist.is_multivariate() {
            return Err(GasError::InvalidSpec("scalar parameters apply to multivariate models only".into()));
        }
        Ok(GasSpec { dist, scaling, gas_par, scalar_parameters, links: LinkSpec::canonical(&dist) })
    }

    /// Replaces the canonical links.
    pub fn with_links(mut self, links: LinkSpec) -> Result<Self> {
        if links.len() != self.num_params() {
            return Err(GasError::ShapeMismatch { expected: self.num_params(), got: links.len() });
        }
        self.links = links;
        Ok(self)
    }

    pub fn num_params(&self) -> usize {
        self.dist.num_params()
    }

    pub fn is_time_varying(&self, index: usize) -> bool {
        self.gas_par.get(self.dist.role(index))
    }

    /// Coordinates sharing one (a, b) pair: one group per time-varying
    /// coordinate, or per time-varying role under scalar parameters.
    pub fn coefficient_groups(&self) -> Vec<Vec<usize>> {
        let j = self.num_params();
        if self.scalar_parameters {
            self.dist
                .role_groups()
                .iter()
                .filter(|r| self.gas_par.get(**r))
                .map(|r| (0..j).filter(|&i| self.dist.role(i) == *r).collect())
                .collect()
        } else {
            (0..j).filter(|&i| self.is_time_varying(i)).map(|i| vec![i]).collect()
        }
    }

    /// Number of free coefficients: all of κ plus one a and one b per group.
    pub fn num_free(&self) -> usize {
        self.num_params() + 2 * self.coefficient_groups().len()
    }
}

/// ξ = (κ, diag A, diag B).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub kappa: Vec<f64>,
    pub a_diag: Vec<f64>,
    pub b_diag: Vec<f64>,
}

impl Coefficients {
    pub fn new(kappa: Vec<f64>, a_diag: Vec<f64>, b_diag: Vec<f64>) -> Self {
        Coefficients { kappa, a_diag, b_diag }
    }

    /// A = B = 0.
    pub fn constant(kappa: Vec<f64>) -> Self {
        let j = kappa.len();
        Coefficients { kappa, a_diag: vec![0.0; j], b_diag: vec![0.0; j] }
    }

    pub fn validate(&self, spec: &GasSpec) -> Result<()> {
        let j = spec.num_params();
        for len in [self.kappa.len(), self.a_diag.len(), self.b_diag.len()] {
            if len != j {
                return Err(GasError::ShapeMismatch { expected: j, got: len });
            }
        }
        for i in 0..j {
            let (k, a, b) = (self.kappa[i], self.a_diag[i], self.b_diag[i]);
            if !k.is_finite() || !a.is_finite() || !b.is_finite() {
                return Err(GasError::InvalidSpec(format!("non-finite coefficient at {i}")));
            }
            if a < 0.0 {
                return Err(GasError::InvalidSpec(format!("a[{i}] = {a} is negative")));
            }
            if b.abs() >= 1.0 {
                return Err(GasError::InvalidSpec(format!("|b[{i}]| = {} is not below 1", b.abs())));
            }
            if !spec.is_time_varying(i) && (a != 0.0 || b != 0.0) {
                return Err(GasError::InvalidSpec(format!("coefficients of static parameter {i} must be 0")));
            }
        }
        for group in spec.coefficient_groups() {
            let first = group[0];
            if group.iter().any(|&i| self.a_diag[i] != self.a_diag[first] || self.b_diag[i] != self.b_diag[first]) {
                return Err(GasError::InvalidSpec("coefficients differ within a role group".into()));
            }
        }
        Ok(())
    }

    /// (I − B)⁻¹ κ.
    pub fn initial_tilde(&self) -> Vec<f64> {
        self.kappa.iter().zip(&self.b_diag).map(|(k, b)| k / (1.0 - b)).collect()
    }

    /// Λ((I − B)⁻¹ κ).
    pub fn unconditional_params(&self, spec: &GasSpec) -> Result<Vec<f64>> {
        spec.links.map(&self.initial_tilde())
    }
}

/// T observations of dimension N, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    dim: usize,
    values: Vec<f64>,
}

impl Series {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || values.len() % dim != 0 {
            return Err(GasError::ShapeMismatch { expected: dim, got: values.len() });
        }
        Ok(Series { dim, values })
    }

    pub fn univariate(values: Vec<f64>) -> Self {
        Series { dim: 1, values }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(1, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(GasError::ShapeMismatch { expected: dim, got: bad.len() });
        }
        Series::new(dim, rows.concat())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.dim..(t + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Observations t ∈ [start, end).
    pub fn slice(&self, start: usize, end: usize) -> Series {
        Series { dim: self.dim, values: self.values[start * self.dim..end * self.dim].to_vec() }
    }

    /// Column `i` as a vector.
    pub fn column(&self, i: usize) -> Vec<f64> {
        self.rows().map(|r| r[i]).collect()
    }
}

/// Buffers for repeated scaled-score evaluations.
pub(crate) struct Scorer<'a> {
    spec: &'a GasSpec,
    theta: Vec<f64>,
    grad: Vec<f64>,
    jdiag: Vec<f64>,
    pub(crate) s: Vec<f64>,
}

impl<'a> Scorer<'a> {
    pub(crate) fn new(spec: &'a GasSpec) -> Self {
        let j = spec.num_params();
        Scorer { spec, theta: vec![0.0; j], grad: vec![0.0; j], jdiag: vec![0.0; j], s: vec![0.0; j] }
    }

    pub(crate) fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Maps θ̃, evaluates log p(y; θ) and leaves s̃ in `self.s`.
    pub(crate) fn eval(&mut self, y: &[f64], tilde: &[f64]) -> Result<f64> {
        let spec = self.spec;
        spec.links.map_into(tilde, &mut self.theta);
        let ll = spec.dist.log_density_and_score(y, &self.theta, &mut self.grad)?;
        if spec.links.correlation.is_some() {
            let jac = spec.links.jacobian(tilde)?;
            let ts = links::tilde_score(&jac, &self.grad)?;
            self.s.copy_from_slice(&ts);
            if spec.scaling != Scaling::Identity {
                let info = links::tilde_info(&jac, &spec.dist.information(&self.theta)?)?;
                scale_score(&info, spec.scaling, &mut self.s)?;
            }
        } else {
            spec.links.jacobian_diag_into(tilde, &mut self.jdiag);
            for ((s, g), d) in self.s.iter_mut().zip(&self.grad).zip(&self.jdiag) {
                *s = g * d;
            }
            if spec.scaling != Scaling::Identity {
                let mut info = spec.dist.information(&self.theta)?;
                let j = info.nrows();
                for r in 0..j {
                    for c in 0..j {
                        info[(r, c)] *= self.jdiag[r] * self.jdiag[c];
                    }
                }
                scale_score(&info, spec.scaling, &mut self.s)?;
            }
        }
        Ok(ll)
    }
}

/// s ← Ĩ^{-γ} s through the symmetric eigendecomposition.
fn scale_score(info: &DMatrix<f64>, scaling: Scaling, s: &mut [f64]) -> Result<()> {
    if info.nrows() == 1 {
        let v = info[(0, 0)];
        if !(v >= MIN_EIGENVALUE) {
            return Err(GasError::SingularInformation(v));
        }
        s[0] /= if scaling == Scaling::Inv { v } else { v.sqrt() };
        return Ok(());
    }
    let eig = SymmetricEigen::new(info.clone());
    let min = eig.eigenvalues.min();
    if !(min >= MIN_EIGENVALUE) {
        return Err(GasError::SingularInformation(min));
    }
    let v = &eig.eigenvectors;
    let proj = v.transpose() * DVector::from_column_slice(s);
    let scaled = DVector::from_fn(proj.len(), |i, _| {
        let l = eig.eigenvalues[i];
        proj[i] / if scaling == Scaling::Inv { l } else { l.sqrt() }
    });
    let out = v * scaled;
    s.copy_from_slice(out.as_slice());
    Ok(())
}

/// s̃ for one observation at θ̃.
pub fn scaled_score(spec: &GasSpec, y: &[f64], tilde: &[f64]) -> Result<Vec<f64>> {
    if tilde.len() != spec.num_params() {
        return Err(GasError::ShapeMismatch { expected: spec.num_params(), got: tilde.len() });
    }
    if tilde.iter().any(|v| !v.is_finite()) {
        return Err(GasError::InvalidArgument("non-finite tilde parameter".into()));
    }
    let mut scorer = Scorer::new(spec);
    scorer.eval(y, tilde)?;
    Ok(scorer.s)
}

/// θ̃_{t+1} = κ + A s̃ + B θ̃_t, in place.
pub(crate) fn update(coeffs: &Coefficients, s: &[f64], tilde: &mut [f64], t: usize) -> Result<()> {
    for (index, x) in tilde.iter_mut().enumerate() {
        let next = coeffs.kappa[index] + coeffs.a_diag[index] * s[index] + coeffs.b_diag[index] * *x;
        if !(next.abs() <= STATE_LIMIT) {
            return Err(GasError::NonFiniteState { t, index });
        }
        *x = next;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterOutput {
    pub tilde_params: Vec<Vec<f64>>,
    pub natural_params: Vec<Vec<f64>>,
    pub scaled_scores: Vec<Vec<f64>>,
    pub loglik_contribs: Vec<f64>,
    pub total_loglik: f64,
    /// θ̃_{T+1}, the one-step-ahead state after the last observation.
    pub next_tilde: Vec<f64>,
}

fn check_observations(spec: &GasSpec, y: &Series) -> Result<()> {
    if y.dim() != spec.dist.dim {
        return Err(GasError::ShapeMismatch { expected: spec.dist.dim, got: y.dim() });
    }
    if y.is_empty() {
        return Err(GasError::InsufficientData { needed: 1, got: 0 });
    }
    Ok(())
}

pub(crate) fn support_at(err: GasError, spec: &GasSpec, t: usize) -> GasError {
    match err {
        GasError::SupportViolation { .. } => GasError::SupportViolationAt { dist: spec.dist.id.label().into(), t },
        other => other,
    }
}

/// The recursion behind both [`filter`] and [`log_likelihood`].
fn run(
    spec: &GasSpec,
    coeffs: &Coefficients,
    y: &Series,
    mut store: Option<&mut FilterOutput>,
) -> Result<(f64, Vec<f64>)> {
    check_observations(spec, y)?;
    coeffs.validate(spec)?;
    let mut tilde = coeffs.initial_tilde();
    let mut scorer = Scorer::new(spec);
    let mut total = 0.0;
    for (t, obs) in y.rows().enumerate() {
        let ll = scorer.eval(obs, &tilde).map_err(|e| support_at(e, spec, t))?;
        total += ll;
        if let Some(out) = store.as_deref_mut() {
            out.tilde_params.push(tilde.clone());
            out.natural_params.push(scorer.theta().to_vec());
            out.scaled_scores.push(scorer.s.clone());
            out.loglik_contribs.push(ll);
        }
        update(coeffs, &scorer.s, &mut tilde, t)?;
    }
    Ok((total, tilde))
}

/// Runs the filter over `y`, storing every path.
pub fn filter(spec: &GasSpec, coeffs: &Coefficients, y: &Series) -> Result<FilterOutput> {
    let t = y.len();
    let mut out = FilterOutput {
        tilde_params: Vec::with_capacity(t),
        natural_params: Vec::with_capacity(t),
        scaled_scores: Vec::with_capacity(t),
        loglik_contribs: Vec::with_capacity(t),
        total_loglik: 0.0,
        next_tilde: Vec::new(),
    };
    let (total, next) = run(spec, coeffs, y, Some(&mut out))?;
    out.total_loglik = total;
    out.next_tilde = next;
    Ok(out)
}

/// Σ log p(y_t; θ_t) without storing paths.
pub fn log_likelihood(spec: &GasSpec, coeffs: &Coefficients, y: &Series) -> Result<f64> {
    Ok(run(spec, coeffs, y, None)?.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutput {
    pub series: Series,
    pub param_paths: Vec<Vec<f64>>,
    pub seed: u64,
}

/// Draws `length` observations starting from state `tilde`, advancing the
/// state in place. Returns the natural parameters used at each step and
/// the observations.
pub(crate) fn simulate_from<R: Rng + ?Sized>(
    spec: &GasSpec,
    coeffs: &Coefficients,
    tilde: &mut [f64],
    length: usize,
    rng: &mut R,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let n = spec.dist.dim;
    let mut scorer = Scorer::new(spec);
    let mut params = Vec::with_capacity(length);
    let mut obs = vec![0.0; length * n];
    let mut theta = vec![0.0; spec.num_params()];
    for t in 0..length {
        spec.links.map_into(tilde, &mut theta);
        let y = &mut obs[t * n..(t + 1) * n];
        spec.dist.sample_into(&theta, rng, y)?;
        scorer.eval(y, tilde).map_err(|e| support_at(e, spec, t))?;
        params.push(theta.clone());
        update(coeffs, &scorer.s, tilde, t)?;
    }
    Ok((params, obs))
}

/// Simulates `length` observations from the model, seeded deterministically.
pub fn simulate(spec: &GasSpec, coeffs: &Coefficients, length: usize, seed: u64) -> Result<SimOutput> {
    if length == 0 {
        return Err(GasError::InvalidArgument("simulation length must be at least 1".into()));
    }
    coeffs.validate(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tilde = coeffs.initial_tilde();
    let (param_paths, obs) = simulate_from(spec, coeffs, &mut tilde, length, &mut rng)?;
    Ok(SimOutput { series: Series::new(spec.dist.dim, obs)?, param_paths, seed })
}

/// κ = (I − B) Λ⁻¹(θ*), so that the process starts from and reverts to θ*
/// in the tilde space.
pub fn target_kappa(spec: &GasSpec, b_diag: &[f64], theta_star: &[f64]) -> Result<Vec<f64>> {
    let j = spec.num_params();
    if b_diag.len() != j {
        return Err(GasError::ShapeMismatch { expected: j, got: b_diag.len() });
    }
    if let Some(b) = b_diag.iter().find(|b| !(b.abs() < 1.0)) {
        return Err(GasError::InvalidArgument(format!("|b| = {} is not below 1", b.abs())));
    }
    spec.dist.check_params(theta_star)?;
    let tilde = spec.links.unmap(theta_star)?;
    Ok(tilde.iter().zip(b_diag).map(|(x, b)| (1.0 - b) * x).collect())
}
