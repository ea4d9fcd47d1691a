//! Catalog of increment distributions.
//!
//! Every entry exposes the cumulant generating function `K = log L`, its
//! effective domain `D_L`, gradient and Hessian on the interior, one-sided
//! limits of `K'` at the boundary, the rate function `I = K*` in closed
//! form, the recession function `I_∞` (support function of `D_L`), and
//! samplers for the law and its exponential tilts.

use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result, Side};
use crate::extreal::ExtReal;

/// A one-dimensional convex interval with explicit endpoint closure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainInterval {
    pub lower: ExtReal,
    pub upper: ExtReal,
    pub lower_closed: bool,
    pub upper_closed: bool,
}

impl DomainInterval {
    pub fn new(lower: ExtReal, upper: ExtReal, lower_closed: bool, upper_closed: bool) -> Result<Self> {
        if lower >= upper || lower == ExtReal::PosInf || upper == ExtReal::NegInf {
            return Err(Error::InvalidParameter(format!("empty interval ({lower}, {upper})")));
        }
        if (lower_closed && !lower.is_finite()) || (upper_closed && !upper.is_finite()) {
            return Err(Error::InvalidParameter("closed endpoints must be finite".into()));
        }
        Ok(Self {
            lower,
            upper,
            lower_closed,
            upper_closed,
        })
    }

    pub fn real_line() -> Self {
        Self {
            lower: ExtReal::NegInf,
            upper: ExtReal::PosInf,
            lower_closed: false,
            upper_closed: false,
        }
    }

    pub fn endpoint(&self, side: Side) -> ExtReal {
        match side {
            Side::Lower => self.lower,
            Side::Upper => self.upper,
        }
    }

    pub fn is_closed(&self, side: Side) -> bool {
        match side {
            Side::Lower => self.lower_closed,
            Side::Upper => self.upper_closed,
        }
    }

    pub fn contains(&self, u: f64) -> bool {
        let u = ExtReal::Finite(u);
        let above = if self.lower_closed { u >= self.lower } else { u > self.lower };
        let below = if self.upper_closed { u <= self.upper } else { u < self.upper };
        above && below
    }

    pub fn contains_interior(&self, u: f64) -> bool {
        let u = ExtReal::Finite(u);
        u > self.lower && u < self.upper
    }

    /// Closure membership, ignoring endpoint flags.
    pub fn in_closure(&self, u: f64) -> bool {
        let u = ExtReal::Finite(u);
        u >= self.lower && u <= self.upper
    }

    /// `{c u : u ∈ D}` for `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        assert!(c > 0.0);
        let s = |e: ExtReal| match e {
            ExtReal::Finite(x) => ExtReal::Finite(c * x),
            other => other,
        };
        Self {
            lower: s(self.lower),
            upper: s(self.upper),
            ..*self
        }
    }

    /// `{-u : u ∈ D}`.
    pub fn negated(&self) -> Self {
        Self {
            lower: -self.upper,
            upper: -self.lower,
            lower_closed: self.upper_closed,
            upper_closed: self.lower_closed,
        }
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let (lower, lower_closed) = if self.lower > other.lower {
            (self.lower, self.lower_closed)
        } else if other.lower > self.lower {
            (other.lower, other.lower_closed)
        } else {
            (self.lower, self.lower_closed && other.lower_closed)
        };
        let (upper, upper_closed) = if self.upper < other.upper {
            (self.upper, self.upper_closed)
        } else if other.upper < self.upper {
            (other.upper, other.upper_closed)
        } else {
            (self.upper, self.upper_closed && other.upper_closed)
        };
        Self {
            lower,
            upper,
            lower_closed,
            upper_closed,
        }
    }
}

impl fmt::Display for DomainInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = if self.lower_closed { '[' } else { '(' };
        let r = if self.upper_closed { ']' } else { ')' };
        write!(f, "{l}{}, {}{r}", self.lower, self.upper)
    }
}

/// Effective domain of a convex function: an interval in one dimension,
/// or all of `R^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EffectiveDomain {
    Interval(DomainInterval),
    Full { dim: usize },
}

impl EffectiveDomain {
    pub fn dim(&self) -> usize {
        match self {
            EffectiveDomain::Interval(_) => 1,
            EffectiveDomain::Full { dim } => *dim,
        }
    }

    /// The domain as an interval; `R` for the one-dimensional full space.
    pub fn as_interval(&self) -> Option<DomainInterval> {
        match self {
            EffectiveDomain::Interval(d) => Some(*d),
            EffectiveDomain::Full { dim: 1 } => Some(DomainInterval::real_line()),
            EffectiveDomain::Full { .. } => None,
        }
    }

    pub fn contains_interior(&self, u: &[f64]) -> bool {
        match self {
            EffectiveDomain::Interval(d) => d.contains_interior(u[0]),
            EffectiveDomain::Full { .. } => u.iter().all(|x| x.is_finite()),
        }
    }
}

/// Multivariate normal law `N(μ, Σ)`; `Σ` may be singular.
#[derive(Debug, Clone)]
pub struct Gaussian {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    pinv: DMatrix<f64>,
    sqrt: DMatrix<f64>,
    null_basis: DMatrix<f64>,
    max_eig: f64,
}

impl Gaussian {
    pub fn new(mean: Vec<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 || cov.nrows() != d || cov.ncols() != d {
            return Err(Error::InvalidParameter("covariance must be d×d with d ≥ 1".into()));
        }
        if (&cov - cov.transpose()).abs().max() > 1e-12 * (1.0 + cov.abs().max()) {
            return Err(Error::InvalidParameter("covariance must be symmetric".into()));
        }
        let eig = SymmetricEigen::new(cov.clone());
        let scale = eig.eigenvalues.abs().max().max(1e-300);
        if eig.eigenvalues.iter().any(|&l| l < -1e-12 * scale) {
            return Err(Error::InvalidParameter("covariance must be positive semidefinite".into()));
        }
        let cutoff = 1e-12 * scale;
        let q = &eig.eigenvectors;
        let mut pinv = DMatrix::zeros(d, d);
        let mut sqrt = DMatrix::zeros(d, d);
        let mut null_cols = Vec::new();
        for (k, &l) in eig.eigenvalues.iter().enumerate() {
            let col = q.column(k);
            if l > cutoff {
                pinv += (col * col.transpose()) / l;
                sqrt.set_column(k, &(col * l.sqrt()));
            } else {
                null_cols.push(col.into_owned());
            }
        }
        let null_basis = if null_cols.is_empty() {
            DMatrix::zeros(d, 0)
        } else {
            DMatrix::from_columns(&null_cols)
        };
        if eig.eigenvalues.iter().all(|&l| l <= cutoff) {
            return Err(Error::InvalidParameter("covariance must be non-zero".into()));
        }
        Ok(Self {
            mean: DVector::from_vec(mean),
            cov,
            pinv,
            sqrt,
            null_basis,
            max_eig: eig.eigenvalues.max(),
        })
    }

    pub fn standard(d: usize) -> Self {
        Self::new(vec![0.0; d], DMatrix::identity(d, d)).expect("identity covariance")
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Σ⁺, the Moore–Penrose inverse of the covariance.
    pub fn pinv(&self) -> &DMatrix<f64> {
        &self.pinv
    }

    pub fn is_degenerate(&self) -> bool {
        self.null_basis.ncols() > 0
    }

    fn in_range(&self, w: &DVector<f64>) -> bool {
        if self.null_basis.ncols() == 0 {
            return true;
        }
        let proj = self.null_basis.transpose() * w;
        proj.norm() <= 1e-10 * (1.0 + w.norm())
    }
}

/// An increment law from the catalog.
#[derive(Debug, Clone)]
pub enum CgfModel {
    Gaussian(Gaussian),
    /// `X = Y - 1` with `Y ~ Exp(1)`.
    CenteredExp,
    /// `P(X = ±1) = 1/2`.
    Rademacher,
    /// `X = N - r` with `N ~ Poisson(r)`.
    CenteredPoisson { rate: f64 },
    /// Standard Laplace law with density `e^{-|x|}/2`; bounded `D_L = (-1, 1)`.
    Laplace,
    /// `K(u) = u + (2/3)((1-u)^{3/2} - 1)` on `(-∞, 1]`. A CGF-shaped test
    /// function with finite `K'(1-) = 1`; it has no sampler.
    SyntheticBoundary,
}

impl CgfModel {
    pub fn std_gaussian() -> Self {
        CgfModel::Gaussian(Gaussian::standard(1))
    }

    pub fn gaussian_1d(mu: f64, sigma: f64) -> Result<Self> {
        if sigma <= 0.0 || !sigma.is_finite() || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!("gaussian needs sigma > 0, got {sigma}")));
        }
        Ok(CgfModel::Gaussian(Gaussian::new(
            vec![mu],
            DMatrix::from_element(1, 1, sigma * sigma),
        )?))
    }

    pub fn poisson(rate: f64) -> Result<Self> {
        if rate <= 0.0 || !rate.is_finite() {
            return Err(Error::InvalidParameter(format!("poisson rate must be > 0, got {rate}")));
        }
        Ok(CgfModel::CenteredPoisson { rate })
    }

    pub fn dim(&self) -> usize {
        match self {
            CgfModel::Gaussian(g) => g.dim(),
            _ => 1,
        }
    }

    pub fn domain(&self) -> EffectiveDomain {
        let open_upper_one = DomainInterval {
            lower: ExtReal::NegInf,
            upper: ExtReal::Finite(1.0),
            lower_closed: false,
            upper_closed: false,
        };
        match self {
            CgfModel::Gaussian(g) => EffectiveDomain::Full { dim: g.dim() },
            CgfModel::Rademacher | CgfModel::CenteredPoisson { .. } => {
                EffectiveDomain::Full { dim: 1 }
            }
            CgfModel::CenteredExp => EffectiveDomain::Interval(open_upper_one),
            CgfModel::Laplace => EffectiveDomain::Interval(DomainInterval {
                lower: ExtReal::Finite(-1.0),
                ..open_upper_one
            }),
            CgfModel::SyntheticBoundary => EffectiveDomain::Interval(DomainInterval {
                upper_closed: true,
                ..open_upper_one
            }),
        }
    }

    /// One-dimensional view of `D_L`.
    pub fn domain_interval(&self) -> Option<DomainInterval> {
        self.domain().as_interval()
    }

    /// `E X_1 = ∇K(0)`.
    pub fn mean(&self) -> Vec<f64> {
        match self {
            CgfModel::Gaussian(g) => g.mean.as_slice().to_vec(),
            _ => vec![0.0],
        }
    }

    pub fn has_sampler(&self) -> bool {
        !matches!(self, CgfModel::SyntheticBoundary)
    }

    /// `K(u)`, `+∞` outside `D_L`.
    pub fn cgf(&self, u: &[f64]) -> Result<ExtReal> {
        check_dim(self.dim(), u.len())?;
        Ok(match self {
            CgfModel::Gaussian(g) => {
                let u = DVector::from_column_slice(u);
                let v = g.mean.dot(&u) + 0.5 * (u.transpose() * &g.cov * &u)[(0, 0)];
                ExtReal::from_f64(v)
            }
            _ => self.cgf_1d(u[0]),
        })
    }

    pub(crate) fn cgf_1d(&self, u: f64) -> ExtReal {
        let v = match self {
            CgfModel::Gaussian(g) => g.mean[0] * u + 0.5 * g.cov[(0, 0)] * u * u,
            CgfModel::CenteredExp => {
                if u >= 1.0 {
                    return ExtReal::PosInf;
                }
                -u - (-u).ln_1p()
            }
            CgfModel::Rademacher => {
                let a = u.abs();
                a + (-2.0 * a).exp().ln_1p() - LN_2
            }
            CgfModel::CenteredPoisson { rate } => rate * (u.exp_m1() - u),
            CgfModel::Laplace => {
                if u.abs() >= 1.0 {
                    return ExtReal::PosInf;
                }
                -(-u * u).ln_1p()
            }
            CgfModel::SyntheticBoundary => {
                if u > 1.0 {
                    return ExtReal::PosInf;
                }
                u + 2.0 / 3.0 * (1.5 * (-u).ln_1p()).exp_m1()
            }
        };
        ExtReal::from_f64(v)
    }

    /// `∇K(u)` on the interior of `D_L`.
    pub fn grad(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), u.len())?;
        if !self.domain().contains_interior(u) {
            return Err(Error::OutsideDomain { point: u.to_vec() });
        }
        Ok(match self {
            CgfModel::Gaussian(g) => {
                let u = DVector::from_column_slice(u);
                (&g.mean + &g.cov * u).as_slice().to_vec()
            }
            _ => vec![self.grad_1d(u[0])],
        })
    }

    /// Scalar derivative, valid on the interior.
    pub(crate) fn grad_1d(&self, u: f64) -> f64 {
        match self {
            CgfModel::Gaussian(g) => g.mean[0] + g.cov[(0, 0)] * u,
            CgfModel::CenteredExp => u / (1.0 - u),
            CgfModel::Rademacher => u.tanh(),
            CgfModel::CenteredPoisson { rate } => rate * u.exp_m1(),
            CgfModel::Laplace => 2.0 * u / (1.0 - u * u),
            CgfModel::SyntheticBoundary => 1.0 - (1.0 - u).sqrt(),
        }
    }

    /// One-sided limit of `K'` at a point of the closure of `D_L`
    /// (including `±∞` when the domain is unbounded on that side).
    /// `None` outside the closure.
    pub fn grad_limit_1d(&self, u: ExtReal) -> Option<ExtReal> {
        let dom = self.domain_interval()?;
        match u {
            ExtReal::Finite(x) => {
                if !dom.in_closure(x) {
                    return None;
                }
                if dom.contains_interior(x) {
                    return Some(ExtReal::Finite(self.grad_1d(x)));
                }
                // finite boundary point
                Some(match self {
                    CgfModel::SyntheticBoundary => ExtReal::Finite(1.0),
                    _ if ExtReal::Finite(x) == dom.upper => ExtReal::PosInf,
                    _ => ExtReal::NegInf,
                })
            }
            ExtReal::PosInf => {
                if dom.upper != ExtReal::PosInf {
                    return None;
                }
                Some(match self {
                    CgfModel::Rademacher => ExtReal::Finite(1.0),
                    _ => ExtReal::PosInf,
                })
            }
            ExtReal::NegInf => {
                if dom.lower != ExtReal::NegInf {
                    return None;
                }
                Some(match self {
                    CgfModel::Rademacher | CgfModel::CenteredExp => ExtReal::Finite(-1.0),
                    CgfModel::CenteredPoisson { rate } => ExtReal::Finite(-rate),
                    _ => ExtReal::NegInf,
                })
            }
        }
    }

    /// `∇²K(u)` on the interior.
    pub fn hessian(&self, u: &[f64]) -> Result<DMatrix<f64>> {
        check_dim(self.dim(), u.len())?;
        if !self.domain().contains_interior(u) {
            return Err(Error::OutsideDomain { point: u.to_vec() });
        }
        Ok(match self {
            CgfModel::Gaussian(g) => g.cov.clone(),
            _ => DMatrix::from_element(1, 1, self.hessian_1d(u[0])),
        })
    }

    pub(crate) fn hessian_1d(&self, u: f64) -> f64 {
        match self {
            CgfModel::Gaussian(g) => g.cov[(0, 0)],
            CgfModel::CenteredExp => 1.0 / ((1.0 - u) * (1.0 - u)),
            CgfModel::Rademacher => {
                let c = u.abs().min(350.0).cosh();
                1.0 / (c * c)
            }
            CgfModel::CenteredPoisson { rate } => rate * u.exp(),
            CgfModel::Laplace => {
                let w = 1.0 - u * u;
                2.0 * (1.0 + u * u) / (w * w)
            }
            CgfModel::SyntheticBoundary => 0.5 / (1.0 - u).sqrt(),
        }
    }

    /// The rate function `I(v) = sup_u (u·v − K(u))` in closed form.
    pub fn rate(&self, v: &[f64]) -> Result<ExtReal> {
        check_dim(self.dim(), v.len())?;
        Ok(match self {
            CgfModel::Gaussian(g) => {
                let w = DVector::from_column_slice(v) - &g.mean;
                if !g.in_range(&w) {
                    ExtReal::PosInf
                } else {
                    ExtReal::from_f64(0.5 * (w.transpose() * &g.pinv * &w)[(0, 0)])
                }
            }
            _ => self.rate_1d(v[0]),
        })
    }

    pub(crate) fn rate_1d(&self, v: f64) -> ExtReal {
        let val = match self {
            CgfModel::Gaussian(g) => {
                let w = v - g.mean[0];
                0.5 * w * w / g.cov[(0, 0)]
            }
            CgfModel::CenteredExp => {
                if v <= -1.0 {
                    return ExtReal::PosInf;
                }
                v - v.ln_1p()
            }
            CgfModel::Rademacher => {
                let a = v.abs();
                if a > 1.0 {
                    return ExtReal::PosInf;
                }
                if a == 1.0 {
                    LN_2
                } else {
                    0.5 * ((1.0 + v) * v.ln_1p() + (1.0 - v) * (-v).ln_1p())
                }
            }
            CgfModel::CenteredPoisson { rate } => {
                let y = v + rate;
                if y < 0.0 {
                    return ExtReal::PosInf;
                }
                if y == 0.0 {
                    *rate
                } else {
                    y * (y / rate).ln() - v
                }
            }
            CgfModel::Laplace => {
                let u = v / (1.0 + (1.0 + v * v).sqrt());
                v * u + (-u * u).ln_1p()
            }
            CgfModel::SyntheticBoundary => {
                if v >= 1.0 {
                    v - 1.0 / 3.0
                } else {
                    v * v * (1.0 - v / 3.0)
                }
            }
        };
        ExtReal::from_f64(val)
    }

    /// Closure of `conv supp X_1` in one dimension, the set where `I` may
    /// be finite.
    pub fn rate_domain(&self) -> Option<DomainInterval> {
        let line = DomainInterval::real_line();
        Some(match self {
            CgfModel::Gaussian(g) if g.dim() == 1 => line,
            CgfModel::Gaussian(_) => return None,
            CgfModel::CenteredExp => DomainInterval {
                lower: ExtReal::Finite(-1.0),
                ..line
            },
            CgfModel::Rademacher => DomainInterval {
                lower: ExtReal::Finite(-1.0),
                upper: ExtReal::Finite(1.0),
                lower_closed: true,
                upper_closed: true,
            },
            CgfModel::CenteredPoisson { rate } => DomainInterval {
                lower: ExtReal::Finite(-rate),
                lower_closed: true,
                ..line
            },
            CgfModel::Laplace | CgfModel::SyntheticBoundary => line,
        })
    }

    /// `∇I(v) = (∇K)^{-1}(v)` where `I` is differentiable.
    pub fn rate_grad(&self, v: &[f64]) -> Option<Vec<f64>> {
        if v.len() != self.dim() {
            return None;
        }
        match self {
            CgfModel::Gaussian(g) => {
                let w = DVector::from_column_slice(v) - &g.mean;
                if !g.in_range(&w) {
                    return None;
                }
                Some((&g.pinv * w).as_slice().to_vec())
            }
            _ => {
                let x = v[0];
                let d = match self {
                    CgfModel::CenteredExp if x > -1.0 => x / (1.0 + x),
                    CgfModel::Rademacher if x.abs() < 1.0 => x.atanh(),
                    CgfModel::CenteredPoisson { rate } if x + rate > 0.0 => ((x + rate) / rate).ln(),
                    CgfModel::Laplace => x / (1.0 + (1.0 + x * x).sqrt()),
                    CgfModel::SyntheticBoundary => {
                        if x >= 1.0 {
                            1.0
                        } else {
                            1.0 - (1.0 - x) * (1.0 - x)
                        }
                    }
                    _ => return None,
                };
                Some(vec![d])
            }
        }
    }

    /// `∇²I(v)` where it exists; may be singular (the affine part of the
    /// synthetic entry, degenerate Gaussians).
    pub fn rate_hessian(&self, v: &[f64]) -> Option<DMatrix<f64>> {
        let u = self.rate_grad(v)?;
        match self {
            CgfModel::Gaussian(g) => Some(g.pinv.clone()),
            CgfModel::SyntheticBoundary => {
                let x = v[0];
                Some(DMatrix::from_element(1, 1, if x >= 1.0 { 0.0 } else { 2.0 * (1.0 - x) }))
            }
            _ => Some(DMatrix::from_element(1, 1, 1.0 / self.hessian_1d(u[0]))),
        }
    }

    /// `I_∞(l) = sup{u·l : u ∈ D_L}` for a unit vector `l`.
    pub fn recession(&self, l: &[f64]) -> Result<ExtReal> {
        check_dim(self.dim(), l.len())?;
        let norm = l.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("direction must be a unit vector, |l| = {norm}")));
        }
        Ok(match self.domain() {
            EffectiveDomain::Full { .. } => ExtReal::PosInf,
            EffectiveDomain::Interval(d) => self.recession_1d(&d, l[0]),
        })
    }

    fn recession_1d(&self, d: &DomainInterval, sign: f64) -> ExtReal {
        if sign > 0.0 {
            d.upper
        } else {
            -d.lower
        }
    }

    /// `I_∞(+1)` and `I_∞(-1)` of a one-dimensional model.
    pub fn recession_pm(&self) -> Option<(ExtReal, ExtReal)> {
        let d = self.domain_interval()?;
        Some((self.recession_1d(&d, 1.0), self.recession_1d(&d, -1.0)))
    }

    /// Constants `(c1, c2)` with `I(v) ≥ c1 |v| − c2` for all `v`, taken
    /// from the supporting lines of `K` at `±δ` (on the sphere of radius
    /// `δ` in several dimensions).
    pub fn linear_minorant(&self) -> (f64, f64) {
        match self {
            CgfModel::Gaussian(g) if g.dim() > 1 => {
                let delta = 1.0;
                (delta, delta * g.mean.norm() + 0.5 * delta * delta * g.max_eig)
            }
            _ => {
                let d = self.domain_interval().expect("one-dimensional");
                let reach = d.upper.min(-d.lower);
                let delta = match reach {
                    ExtReal::Finite(r) => (0.5 * r).min(1.0),
                    _ => 1.0,
                };
                let c2 = self
                    .cgf_1d(delta)
                    .max(self.cgf_1d(-delta))
                    .finite()
                    .expect("±δ lies in the interior");
                (delta, c2)
            }
        }
    }

    /// One draw of `X_1`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) -> Result<()> {
        self.draw_tilted(None, rng, out)
    }

    /// One draw from the tilted law `e^{θ·x} P(dx) / L(θ)`; `None` means `θ = 0`.
    pub fn draw_tilted<R: Rng + ?Sized>(
        &self,
        theta: Option<&[f64]>,
        rng: &mut R,
        out: &mut [f64],
    ) -> Result<()> {
        check_dim(self.dim(), out.len())?;
        if let Some(t) = theta {
            check_dim(self.dim(), t.len())?;
            if !self.domain().contains_interior(t) {
                return Err(Error::OutsideDomain { point: t.to_vec() });
            }
        }
        let th = theta.map(|t| t[0]).unwrap_or(0.0);
        let exp = |rate: f64, rng: &mut R| -> f64 {
            Exp::new(rate).expect("positive rate").sample(rng)
        };
        match self {
            CgfModel::Gaussian(g) if g.dim() == 1 => {
                let z: f64 = rng.sample(StandardNormal);
                out[0] = g.mean[0] + g.sqrt[(0, 0)] * z + g.cov[(0, 0)] * theta.map_or(0.0, |t| t[0]);
            }
            CgfModel::Gaussian(g) => {
                let z: DVector<f64> = DVector::from_fn(g.dim(), |_, _| rng.sample(StandardNormal));
                let mut x = &g.mean + &g.sqrt * z;
                if let Some(t) = theta {
                    x += &g.cov * DVector::from_column_slice(t);
                }
                out.copy_from_slice(x.as_slice());
            }
            CgfModel::CenteredExp => out[0] = exp(1.0 - th, rng) - 1.0,
            CgfModel::Rademacher => {
                let p = 0.5 * (1.0 + th.tanh());
                out[0] = if rng.random::<f64>() < p { 1.0 } else { -1.0 };
            }
            CgfModel::CenteredPoisson { rate } => {
                let lam = rate * th.exp();
                let n: f64 = Poisson::new(lam)
                    .map_err(|e| Error::InvalidParameter(e.to_string()))?
                    .sample(rng);
                out[0] = n - rate;
            }
            CgfModel::Laplace => out[0] = exp(1.0 - th, rng) - exp(1.0 + th, rng),
            CgfModel::SyntheticBoundary => return Err(Error::NoSampler(self.to_string())),
        }
        Ok(())
    }

    /// `count` reproducible draws of `X_1`.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        self.sample_impl(None, count, seed)
    }

    /// `count` reproducible draws from the `θ`-tilted law.
    pub fn tilt_sample(&self, theta: &[f64], count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        self.sample_impl(Some(theta), count, seed)
    }

    fn sample_impl(&self, theta: Option<&[f64]>, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let mut x = vec![0.0; self.dim()];
                self.draw_tilted(theta, &mut rng, &mut x)?;
                Ok(x)
            })
            .collect()
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(';')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number '{p}'")))
        })
        .collect()
}

impl FromStr for CgfModel {
    type Err = Error;

    /// Parses `gaussian:mu=0,sigma=1`, `gaussian:mu=0;0,cov=1;0;0;1`,
    /// `cexp`, `rademacher`, `poisson:rate=2`, `laplace`,
    /// `synthetic-boundary`. Vector components are separated by `;`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, params) = match s.split_once(':') {
            Some((n, p)) => (n.trim(), p.trim()),
            None => (s.trim(), ""),
        };
        let mut kv = Vec::new();
        for item in params.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got '{item}'")))?;
            kv.push((k.trim().to_string(), parse_list(v)?));
        }
        let take = |kv: &mut Vec<(String, Vec<f64>)>, key: &str| -> Option<Vec<f64>> {
            let pos = kv.iter().position(|(k, _)| k == key)?;
            Some(kv.remove(pos).1)
        };
        let model = match name {
            "gaussian" | "normal" => {
                let mu = take(&mut kv, "mu").unwrap_or_else(|| vec![0.0]);
                let sigma = take(&mut kv, "sigma");
                let cov = take(&mut kv, "cov");
                let d = mu.len();
                let cov = match (sigma, cov) {
                    (Some(_), Some(_)) => {
                        return Err(Error::Parse("give either sigma or cov, not both".into()))
                    }
                    (Some(s), None) => {
                        let s = if s.len() == 1 { vec![s[0]; d] } else { s };
                        if s.len() != d || s.iter().any(|&x| x <= 0.0) {
                            return Err(Error::Parse("sigma must have d positive entries".into()));
                        }
                        DMatrix::from_diagonal(&DVector::from_iterator(d, s.iter().map(|x| x * x)))
                    }
                    (None, Some(c)) => {
                        if c.len() != d * d {
                            return Err(Error::Parse(format!("cov needs {} entries", d * d)));
                        }
                        DMatrix::from_row_slice(d, d, &c)
                    }
                    (None, None) => DMatrix::identity(d, d),
                };
                CgfModel::Gaussian(Gaussian::new(mu, cov)?)
            }
            "cexp" | "centered-exp" => CgfModel::CenteredExp,
            "rademacher" => CgfModel::Rademacher,
            "poisson" => {
                let r = take(&mut kv, "rate").unwrap_or_else(|| vec![1.0]);
                if r.len() != 1 {
                    return Err(Error::Parse("poisson rate is a scalar".into()));
                }
                CgfModel::poisson(r[0])?
            }
            "laplace" => CgfModel::Laplace,
            "synthetic-boundary" => CgfModel::SyntheticBoundary,
            other => return Err(Error::Parse(format!("unknown model '{other}'"))),
        };
        if let Some((k, _)) = kv.first() {
            return Err(Error::Parse(format!("unknown parameter '{k}' for model '{name}'")));
        }
        Ok(model)
    }
}

impl fmt::Display for CgfModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";");
        match self {
            CgfModel::Gaussian(g) if g.dim() == 1 => {
                write!(f, "gaussian:mu={},sigma={}", g.mean[0], g.cov[(0, 0)].sqrt())
            }
            CgfModel::Gaussian(g) => {
                let cov: Vec<f64> = g.cov.transpose().iter().copied().collect();
                write!(f, "gaussian:mu={},cov={}", join(g.mean.as_slice()), join(&cov))
            }
            CgfModel::CenteredExp => write!(f, "cexp"),
            CgfModel::Rademacher => write!(f, "rademacher"),
            CgfModel::CenteredPoisson { rate } => write!(f, "poisson:rate={rate}"),
            CgfModel::Laplace => write!(f, "laplace"),
            CgfModel::SyntheticBoundary => write!(f, "synthetic-boundary"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn cgf_examples() {
        let g = CgfModel::std_gaussian();
        assert!(close(g.cgf(&[0.6]).unwrap().finite().unwrap(), 0.18, 1e-15));
        let e = CgfModel::CenteredExp;
        let k = e.cgf(&[0.5]).unwrap().finite().unwrap();
        assert!(close(k, -0.5 - 0.5f64.ln(), 1e-15));
        assert!(close(k, 0.1931472, 1e-7));
        assert_eq!(e.cgf(&[1.2]).unwrap(), ExtReal::PosInf);
        assert!(matches!(g.cgf(&[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn grad_examples() {
        assert!(close(CgfModel::std_gaussian().grad(&[0.7]).unwrap()[0], 0.7, 1e-15));
        assert!(close(CgfModel::CenteredExp.grad(&[0.5]).unwrap()[0], 1.0, 1e-15));
        assert!(close(CgfModel::SyntheticBoundary.grad(&[0.75]).unwrap()[0], 0.5, 1e-15));
        assert!(matches!(
            CgfModel::SyntheticBoundary.grad(&[1.0]),
            Err(Error::OutsideDomain { .. })
        ));
        assert!(CgfModel::CenteredExp.grad(&[1.5]).is_err());
    }

    #[test]
    fn recession_examples() {
        assert_eq!(CgfModel::CenteredExp.recession(&[1.0]).unwrap(), ExtReal::Finite(1.0));
        assert_eq!(CgfModel::CenteredExp.recession(&[-1.0]).unwrap(), ExtReal::PosInf);
        assert_eq!(CgfModel::std_gaussian().recession(&[1.0]).unwrap(), ExtReal::PosInf);
        assert!(CgfModel::CenteredExp.recession(&[0.5]).is_err());
        assert_eq!(
            CgfModel::Laplace.recession_pm().unwrap(),
            (ExtReal::Finite(1.0), ExtReal::Finite(1.0))
        );
    }

    #[test]
    fn rate_examples() {
        assert!(close(CgfModel::std_gaussian().rate(&[2.0]).unwrap().finite().unwrap(), 2.0, 1e-15));
        let r = CgfModel::CenteredExp.rate(&[1.0]).unwrap().finite().unwrap();
        assert!(close(r, 1.0 - LN_2, 1e-15));
        assert!(close(r, 0.3068528, 1e-7));
        assert!(close(CgfModel::Rademacher.rate(&[1.0]).unwrap().finite().unwrap(), LN_2, 1e-15));
        assert_eq!(CgfModel::Rademacher.rate(&[1.5]).unwrap(), ExtReal::PosInf);
        assert_eq!(CgfModel::CenteredExp.rate(&[-1.0]).unwrap(), ExtReal::PosInf);
    }

    #[test]
    fn zero_at_origin_and_at_mean() {
        for m in catalog() {
            let d = m.dim();
            assert_eq!(m.cgf(&vec![0.0; d]).unwrap(), ExtReal::ZERO, "{m}");
            assert_eq!(m.rate(&m.mean()).unwrap(), ExtReal::ZERO, "{m}");
        }
    }

    #[test]
    fn boundary_limits_of_the_derivative() {
        let sb = CgfModel::SyntheticBoundary;
        assert_eq!(sb.grad_limit_1d(ExtReal::Finite(1.0)), Some(ExtReal::Finite(1.0)));
        assert_eq!(sb.grad_limit_1d(ExtReal::Finite(1.5)), None);
        assert_eq!(
            CgfModel::CenteredExp.grad_limit_1d(ExtReal::Finite(1.0)),
            Some(ExtReal::PosInf)
        );
        assert_eq!(
            CgfModel::CenteredExp.grad_limit_1d(ExtReal::NegInf),
            Some(ExtReal::Finite(-1.0))
        );
        assert_eq!(
            CgfModel::Rademacher.grad_limit_1d(ExtReal::PosInf),
            Some(ExtReal::Finite(1.0))
        );
    }

    #[test]
    fn parse_round_trip() {
        for s in [
            "gaussian:mu=0,sigma=1",
            "gaussian:mu=0.5,sigma=2",
            "gaussian:mu=0;1,cov=2;0.5;0.5;1",
            "cexp",
            "rademacher",
            "poisson:rate=2",
            "laplace",
            "synthetic-boundary",
        ] {
            let m: CgfModel = s.parse().unwrap();
            assert_eq!(m.to_string(), s);
        }
        assert!("gaussian:mu=0,sd=1".parse::<CgfModel>().is_err());
        assert!("weibull".parse::<CgfModel>().is_err());
        assert!("gaussian:sigma=-1".parse::<CgfModel>().is_err());
    }

    #[test]
    fn samplers_respect_support_and_seed() {
        let r = CgfModel::Rademacher.sample(1000, 7).unwrap();
        assert!(r.iter().all(|x| x[0] == 1.0 || x[0] == -1.0));
        assert_eq!(r, CgfModel::Rademacher.sample(1000, 7).unwrap());
        assert!(matches!(
            CgfModel::SyntheticBoundary.sample(1, 0),
            Err(Error::NoSampler(_))
        ));
        assert!(CgfModel::CenteredExp.tilt_sample(&[1.0], 1, 0).is_err());
    }

    #[test]
    fn tilted_means() {
        let n = 200_000;
        let mean = |xs: &[Vec<f64>]| xs.iter().map(|x| x[0]).sum::<f64>() / xs.len() as f64;
        let g = CgfModel::std_gaussian().tilt_sample(&[1.0], n, 3).unwrap();
        assert!((mean(&g) - 1.0).abs() < 4.0 / (n as f64).sqrt());
        // tilted CenteredExp at 0.5 is Exp(1/2) - 1: mean 1, sd 2
        let e = CgfModel::CenteredExp.tilt_sample(&[0.5], n, 4).unwrap();
        assert!((mean(&e) - 1.0).abs() < 4.0 * 2.0 / (n as f64).sqrt());
        for m in catalog().into_iter().filter(|m| m.dim() == 1 && m.has_sampler()) {
            let th = 0.3;
            let xs = m.tilt_sample(&[th], n, 11).unwrap();
            let sd = m.hessian_1d(th).sqrt();
            assert!(
                (mean(&xs) - m.grad_1d(th)).abs() < 5.0 * sd / (n as f64).sqrt(),
                "{m}"
            );
        }
    }

    pub(crate) fn catalog() -> Vec<CgfModel> {
        vec![
            CgfModel::std_gaussian(),
            CgfModel::gaussian_1d(0.5, 2.0).unwrap(),
            "gaussian:mu=1;-1,cov=2;0.5;0.5;1".parse().unwrap(),
            CgfModel::CenteredExp,
            CgfModel::Rademacher,
            CgfModel::poisson(2.0).unwrap(),
            CgfModel::Laplace,
            CgfModel::SyntheticBoundary,
        ]
    }
}
