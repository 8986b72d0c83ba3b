//! Link functions between the unconstrained space θ̃ ∈ ℝ^J and the natural
//! parameter space, their inverses and Jacobians.
//!
//! Correlation parameters are generated from angles through the
//! hyperspherical construction R = L L', where row i of the lower-triangular
//! L is a point on the unit sphere:
//!
//! ```text
//! L[0][0] = 1
//! L[i][j] = cos(ω_ij) · Π_{l<j} sin(ω_il)    j < i
//! L[i][i] =            Π_{l<i} sin(ω_il)
//! ```
//!
//! so that R has unit diagonal and is positive semi-definite for any angles.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::distributions::{Distribution, Role, MAX_DIM};
use crate::error::{GasError, Result};
use crate::special::logistic;

/// Saturation point of the logistic link.
pub const LOGISTIC_CLAMP: f64 = 35.0;
/// Values closer than this to a finite bound cannot be unmapped.
pub const BOUND_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Link {
    Identity,
    Exponential { offset: f64 },
    ModifiedLogistic { lower: f64, upper: f64 },
}

impl Link {
    pub fn modified_logistic(lower: f64, upper: f64) -> Result<Link> {
        if !(upper > lower) {
            return Err(GasError::InvalidArgument(format!(
                "logistic link needs upper > lower, got ({lower}, {upper})"
            )));
        }
        Ok(Link::ModifiedLogistic { lower, upper })
    }

    pub fn map(self, x: f64) -> f64 {
        match self {
            Link::Identity => x,
            Link::Exponential { offset } => x.exp() + offset,
            Link::ModifiedLogistic { lower, upper } => {
                lower + (upper - lower) * logistic(x.clamp(-LOGISTIC_CLAMP, LOGISTIC_CLAMP))
            }
        }
    }

    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Link::Identity => 1.0,
            Link::Exponential { .. } => x.exp(),
            Link::ModifiedLogistic { lower, upper } => {
                let p = logistic(x.clamp(-LOGISTIC_CLAMP, LOGISTIC_CLAMP));
                (upper - lower) * p * (1.0 - p)
            }
        }
    }

    pub fn unmap(self, value: f64, index: usize) -> Result<f64> {
        let err = || GasError::ParamOutOfBounds { index, value };
        if !value.is_finite() {
            return Err(err());
        }
        match self {
            Link::Identity => Ok(value),
            Link::Exponential { offset } => {
                if value - offset <= BOUND_EPS {
                    return Err(err());
                }
                Ok((value - offset).ln())
            }
            Link::ModifiedLogistic { lower, upper } => {
                if value - lower <= BOUND_EPS || upper - value <= BOUND_EPS {
                    return Err(err());
                }
                Ok(((value - lower) / (upper - value)).ln())
            }
        }
    }
}

/// Correlation parameters occupying `dim(dim-1)/2` consecutive slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrelationBlock {
    pub start: usize,
    pub dim: usize,
}

impl CorrelationBlock {
    pub fn len(&self) -> usize {
        self.dim * (self.dim - 1) / 2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len()
    }
}

/// Per-coordinate links plus an optional correlation block. Slots covered
/// by the block carry `Link::Identity` as a placeholder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub links: Vec<Link>,
    pub correlation: Option<CorrelationBlock>,
}

impl LinkSpec {
    /// Links implied by the registry bounds: ℝ → identity, (c, ∞) →
    /// exponential with offset c, (a, b) → modified logistic.
    pub fn canonical(dist: &Distribution) -> LinkSpec {
        let mut correlation = None;
        let links = dist
            .roles()
            .iter()
            .zip(dist.bounds())
            .enumerate()
            .map(|(i, (role, b))| {
                if *role == Role::Correlation {
                    correlation.get_or_insert(CorrelationBlock { start: i, dim: dist.dim });
                    Link::Identity
                } else if b.lower.is_infinite() && b.upper.is_infinite() {
                    Link::Identity
                } else if b.upper.is_infinite() {
                    Link::Exponential { offset: b.lower }
                } else {
                    Link::ModifiedLogistic { lower: b.lower, upper: b.upper }
                }
            })
            .collect();
        LinkSpec { links, correlation }
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.len() {
            return Err(GasError::ShapeMismatch { expected: self.len(), got });
        }
        Ok(())
    }

    /// θ = Λ(θ̃).
    pub fn map(&self, tilde: &[f64]) -> Result<Vec<f64>> {
        self.check_len(tilde.len())?;
        let mut out = vec![0.0; tilde.len()];
        self.map_into(tilde, &mut out);
        Ok(out)
    }

    /// Allocation-free [`LinkSpec::map`]; slices must have length J.
    pub fn map_into(&self, tilde: &[f64], out: &mut [f64]) {
        for ((o, &x), link) in out.iter_mut().zip(tilde).zip(&self.links) {
            *o = link.map(x);
        }
        if let Some(block) = self.correlation {
            let r = correlation_from_angles_unchecked(&tilde[block.range()], block.dim);
            let mut idx = block.start;
            for h in 1..block.dim {
                for k in 0..h {
                    out[idx] = r[(h, k)];
                    idx += 1;
                }
            }
        }
    }

    /// θ̃ = Λ⁻¹(θ). Correlation angles are returned in (0, π).
    pub fn unmap(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.check_len(theta.len())?;
        let mut out = Vec::with_capacity(theta.len());
        for (i, (&v, link)) in theta.iter().zip(&self.links).enumerate() {
            out.push(link.unmap(v, i)?);
        }
        if let Some(block) = self.correlation {
            let r = crate::distributions::correlation_matrix(block.dim, &theta[block.range()]);
            let angles = angles_from_correlation(&r).map_err(|_| GasError::ParamOutOfBounds {
                index: block.start,
                value: theta[block.start],
            })?;
            out[block.range()].copy_from_slice(&angles);
        }
        Ok(out)
    }

    /// 𝒥(θ̃) = ∂Λ/∂θ̃, diagonal outside the correlation block.
    pub fn jacobian(&self, tilde: &[f64]) -> Result<DMatrix<f64>> {
        self.check_len(tilde.len())?;
        let mut jac = DMatrix::zeros(self.len(), self.len());
        for (i, (&x, link)) in tilde.iter().zip(&self.links).enumerate() {
            jac[(i, i)] = link.derivative(x);
        }
        if let Some(block) = self.correlation {
            let sub = correlation_jacobian(&tilde[block.range()], block.dim);
            jac.view_mut((block.start, block.start), (block.len(), block.len())).copy_from(&sub);
        }
        Ok(jac)
    }

    /// Diagonal of the Jacobian when there is no correlation block.
    pub(crate) fn jacobian_diag_into(&self, tilde: &[f64], out: &mut [f64]) {
        for ((o, &x), link) in out.iter_mut().zip(tilde).zip(&self.links) {
            *o = link.derivative(x);
        }
    }
}

fn check_dim(n: usize) -> Result<()> {
    if !(2..=MAX_DIM).contains(&n) {
        return Err(GasError::DimensionUnsupported { dist: "correlation".into(), dim: n });
    }
    Ok(())
}

fn cholesky_factor(angles: &[f64], n: usize) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(n, n);
    l[(0, 0)] = 1.0;
    let mut idx = 0;
    for i in 1..n {
        let mut prod = 1.0;
        for j in 0..i {
            let w = angles[idx];
            l[(i, j)] = w.cos() * prod;
            prod *= w.sin();
            idx += 1;
        }
        l[(i, i)] = prod;
    }
    l
}

fn correlation_from_angles_unchecked(angles: &[f64], n: usize) -> DMatrix<f64> {
    let l = cholesky_factor(angles, n);
    let mut r = &l * l.transpose();
    for i in 0..n {
        r[(i, i)] = 1.0;
        for j in 0..i {
            let v = r[(i, j)];
            r[(j, i)] = v;
        }
    }
    r
}

/// Correlation matrix from N(N-1)/2 angles in row-major lower-triangular order.
pub fn correlation_from_angles(angles: &[f64], n: usize) -> Result<DMatrix<f64>> {
    check_dim(n)?;
    if angles.len() != n * (n - 1) / 2 {
        return Err(GasError::ShapeMismatch { expected: n * (n - 1) / 2, got: angles.len() });
    }
    Ok(correlation_from_angles_unchecked(angles, n))
}

/// Inverse of [`correlation_from_angles`] for positive-definite R; angles
/// lie in (0, π).
pub fn angles_from_correlation(r: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = r.nrows();
    check_dim(n)?;
    let chol = nalgebra::Cholesky::new(r.clone())
        .ok_or_else(|| GasError::InvalidArgument("correlation matrix is not positive definite".into()))?;
    let l = chol.l();
    let mut angles = Vec::with_capacity(n * (n - 1) / 2);
    for i in 1..n {
        let mut prod = 1.0;
        for j in 0..i {
            if prod <= BOUND_EPS {
                return Err(GasError::InvalidArgument("degenerate correlation matrix".into()));
            }
            let w = (l[(i, j)] / prod).clamp(-1.0, 1.0).acos();
            angles.push(w);
            prod *= w.sin();
        }
    }
    Ok(angles)
}

/// ∂ρ/∂ω for the correlation block: rows index ρ_hk, columns index ω_ij,
/// both in row-major lower-triangular order.
fn correlation_jacobian(angles: &[f64], n: usize) -> DMatrix<f64> {
    let m = n * (n - 1) / 2;
    let l = cholesky_factor(angles, n);
    let pos = |h: usize, k: usize| h * (h - 1) / 2 + k;
    let mut jac = DMatrix::zeros(m, m);
    for i in 1..n {
        let row: Vec<f64> = (0..i).map(|j| angles[pos(i, j)]).collect();
        for j in 0..i {
            // derivative of row i of L with respect to ω_ij
            let mut dl = vec![0.0; n];
            let prod_excl = |upto: usize| -> f64 {
                (0..upto).filter(|&q| q != j).map(|q| row[q].sin()).product()
            };
            dl[j] = -row[j].sin() * prod_excl(j);
            for mm in j + 1..i {
                dl[mm] = row[mm].cos() * row[j].cos() * prod_excl(mm);
            }
            dl[i] = row[j].cos() * prod_excl(i);
            let col = pos(i, j);
            for h in 1..n {
                for k in 0..h {
                    let other = if h == i {
                        k
                    } else if k == i {
                        h
                    } else {
                        continue;
                    };
                    let d: f64 = (0..n).map(|q| dl[q] * l[(other, q)]).sum();
                    jac[(pos(h, k), col)] = d;
                }
            }
        }
    }
    jac
}

/// ∇̃ = 𝒥'∇.
pub fn tilde_score(jac: &DMatrix<f64>, score: &[f64]) -> Result<Vec<f64>> {
    if jac.nrows() != score.len() || jac.ncols() != score.len() {
        return Err(GasError::ShapeMismatch { expected: jac.nrows(), got: score.len() });
    }
    Ok((0..jac.ncols()).map(|c| (0..jac.nrows()).map(|r| jac[(r, c)] * score[r]).sum()).collect())
}

/// Ĩ = 𝒥' I 𝒥, symmetrized.
pub fn tilde_info(jac: &DMatrix<f64>, info: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if jac.nrows() != info.nrows() || info.nrows() != info.ncols() || jac.ncols() != jac.nrows() {
        return Err(GasError::ShapeMismatch { expected: jac.nrows(), got: info.nrows() });
    }
    let m = jac.transpose() * info * jac;
    Ok((&m + m.transpose()) * 0.5)
}
