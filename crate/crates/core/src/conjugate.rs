//! Numerical Legendre–Fenchel transform and gradient inversion.

use nalgebra::{DMatrix, DVector};

use crate::cgf::{CgfModel, DomainInterval, EffectiveDomain};
use crate::error::{check_dim, Error, Result, Side};
use crate::extreal::ExtReal;

pub const DEFAULT_TOL_1D: f64 = 1e-10;
pub const DEFAULT_TOL_ND: f64 = 1e-8;
const MAX_ITER: usize = 200;

/// A closed convex function given by evaluation oracles.
pub trait ConvexOracle {
    fn domain(&self) -> EffectiveDomain;
    /// `g(u)`, `+∞` outside the domain.
    fn eval(&self, u: &[f64]) -> ExtReal;
    /// `∇g(u)` on the interior.
    fn grad(&self, u: &[f64]) -> Result<Vec<f64>>;
    fn hessian(&self, _u: &[f64]) -> Option<DMatrix<f64>> {
        None
    }
    fn is_strict(&self) -> bool;
    /// Exact one-sided limit of `g'` at an end of a one-dimensional
    /// domain, if the oracle knows it. Otherwise the limit is probed.
    fn grad_limit(&self, _side: Side) -> Option<ExtReal> {
        None
    }

    fn dim(&self) -> usize {
        self.domain().dim()
    }
}

impl ConvexOracle for CgfModel {
    fn domain(&self) -> EffectiveDomain {
        CgfModel::domain(self)
    }
    fn eval(&self, u: &[f64]) -> ExtReal {
        self.cgf(u).unwrap_or(ExtReal::PosInf)
    }
    fn grad(&self, u: &[f64]) -> Result<Vec<f64>> {
        CgfModel::grad(self, u)
    }
    fn hessian(&self, u: &[f64]) -> Option<DMatrix<f64>> {
        CgfModel::hessian(self, u).ok()
    }
    fn is_strict(&self) -> bool {
        match self {
            CgfModel::Gaussian(g) => !g.is_degenerate(),
            _ => true,
        }
    }
    fn grad_limit(&self, side: Side) -> Option<ExtReal> {
        let d = self.domain_interval()?;
        self.grad_limit_1d(d.endpoint(side))
    }
}

type EvalFn = Box<dyn Fn(f64) -> ExtReal + Send + Sync>;
type GradFn = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// A one-dimensional oracle built from closures.
pub struct FnOracle {
    pub domain: DomainInterval,
    pub eval: EvalFn,
    pub grad: GradFn,
    pub hessian: Option<GradFn>,
    pub strict: bool,
    pub limits: [Option<ExtReal>; 2],
}

impl FnOracle {
    pub fn new(
        domain: DomainInterval,
        eval: impl Fn(f64) -> ExtReal + Send + Sync + 'static,
        grad: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            domain,
            eval: Box::new(eval),
            grad: Box::new(grad),
            hessian: None,
            strict: true,
            limits: [None, None],
        }
    }

    pub fn with_hessian(mut self, h: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.hessian = Some(Box::new(h));
        self
    }

    pub fn with_limits(mut self, lower: Option<ExtReal>, upper: Option<ExtReal>) -> Self {
        self.limits = [lower, upper];
        self
    }

    pub fn non_strict(mut self) -> Self {
        self.strict = false;
        self
    }
}

impl ConvexOracle for FnOracle {
    fn domain(&self) -> EffectiveDomain {
        EffectiveDomain::Interval(self.domain)
    }
    fn eval(&self, u: &[f64]) -> ExtReal {
        if !self.domain.contains(u[0]) {
            return ExtReal::PosInf;
        }
        (self.eval)(u[0])
    }
    fn grad(&self, u: &[f64]) -> Result<Vec<f64>> {
        if !self.domain.contains_interior(u[0]) {
            return Err(Error::OutsideDomain { point: u.to_vec() });
        }
        Ok(vec![(self.grad)(u[0])])
    }
    fn hessian(&self, u: &[f64]) -> Option<DMatrix<f64>> {
        let h = self.hessian.as_ref()?;
        Some(DMatrix::from_element(1, 1, h(u[0])))
    }
    fn is_strict(&self) -> bool {
        self.strict
    }
    fn grad_limit(&self, side: Side) -> Option<ExtReal> {
        match side {
            Side::Lower => self.limits[0],
            Side::Upper => self.limits[1],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConjugateResult {
    pub value: ExtReal,
    /// The maximizer, when the supremum is attained (possibly at a closed
    /// endpoint, or as a one-sided limit at a finite open endpoint).
    pub argmax: Option<Vec<f64>>,
    /// Set when the supremum is not an interior critical point.
    pub boundary: Option<Side>,
}

impl ConjugateResult {
    pub fn at_boundary(&self) -> bool {
        self.boundary.is_some()
    }
}

/// Outcome of inverting a gradient.
#[derive(Debug, Clone, PartialEq)]
pub enum GradInverse {
    Interior(Vec<f64>),
    /// `x` lies below the range of `g'` (one-dimensional).
    Below,
    /// `x` lies above the range of `g'` (one-dimensional).
    Above,
}

/// `g*(x) = sup_u (x·u − g(u))`.
pub fn legendre<O: ConvexOracle + ?Sized>(oracle: &O, x: &[f64], tol: f64) -> Result<ConjugateResult> {
    if tol <= 0.0 || !tol.is_finite() {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    check_dim(oracle.dim(), x.len())?;
    match oracle.domain() {
        EffectiveDomain::Interval(d) => legendre_1d(oracle, &d, x[0], tol),
        EffectiveDomain::Full { dim: 1 } => legendre_1d(oracle, &DomainInterval::real_line(), x[0], tol),
        EffectiveDomain::Full { .. } => legendre_nd(oracle, x, tol),
    }
}

/// Solves `∇g(λ) = x` for a strictly convex oracle.
pub fn grad_inverse<O: ConvexOracle + ?Sized>(oracle: &O, x: &[f64], tol: f64) -> Result<GradInverse> {
    if !oracle.is_strict() {
        return Err(Error::NotStrict);
    }
    if tol <= 0.0 || !tol.is_finite() {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    check_dim(oracle.dim(), x.len())?;
    let dom = match oracle.domain() {
        EffectiveDomain::Interval(d) => Some(d),
        EffectiveDomain::Full { dim: 1 } => Some(DomainInterval::real_line()),
        EffectiveDomain::Full { .. } => None,
    };
    match dom {
        Some(d) => Ok(match locate_1d(oracle, &d, x[0], tol)? {
            Located::Root(u) => GradInverse::Interior(vec![u]),
            Located::Edge { side: Side::Lower, .. } => GradInverse::Below,
            Located::Edge { side: Side::Upper, .. } => GradInverse::Above,
        }),
        None => match newton_nd(oracle, x, tol)? {
            NdOutcome::Root(u) => Ok(GradInverse::Interior(u)),
            NdOutcome::Unbounded => Err(Error::no_convergence(
                MAX_ITER,
                "x is not in the range of the gradient",
            )),
        },
    }
}

/// Minimal-norm solution of `∇g(λ) = x` on a full-space domain, without
/// the strictness requirement; `None` when `x` is not in the range of
/// `∇g`.
pub fn grad_inverse_min_norm<O: ConvexOracle + ?Sized>(
    oracle: &O,
    x: &[f64],
    tol: f64,
) -> Result<Option<Vec<f64>>> {
    check_dim(oracle.dim(), x.len())?;
    if !matches!(oracle.domain(), EffectiveDomain::Full { .. }) {
        return Err(Error::Unsupported("minimal-norm inversion needs a full-space domain".into()));
    }
    Ok(match newton_nd(oracle, x, tol)? {
        NdOutcome::Root(u) => Some(u),
        NdOutcome::Unbounded => None,
    })
}

enum Located {
    Root(f64),
    /// No interior critical point: the supremum of `x u − g(u)` is
    /// approached toward `side`. `point` is the finite endpoint, if any.
    Edge {
        side: Side,
        point: Option<f64>,
        value: ExtReal,
    },
}

fn g1<O: ConvexOracle + ?Sized>(o: &O, u: f64) -> ExtReal {
    o.eval(&[u])
}

fn dg1<O: ConvexOracle + ?Sized>(o: &O, u: f64) -> Result<f64> {
    Ok(o.grad(&[u])?[0])
}

fn start_point(d: &DomainInterval) -> f64 {
    if d.contains_interior(0.0) {
        return 0.0;
    }
    match (d.lower, d.upper) {
        (ExtReal::Finite(a), ExtReal::Finite(b)) => 0.5 * (a + b),
        (ExtReal::Finite(a), _) => a + 1.0,
        (_, ExtReal::Finite(b)) => b - 1.0,
        _ => 0.0,
    }
}

fn legendre_1d<O: ConvexOracle + ?Sized>(
    o: &O,
    d: &DomainInterval,
    x: f64,
    tol: f64,
) -> Result<ConjugateResult> {
    Ok(match locate_1d(o, d, x, tol)? {
        Located::Root(u) => {
            let g = g1(o, u)
                .finite()
                .ok_or_else(|| Error::OutsideDomain { point: vec![u] })?;
            ConjugateResult {
                value: ExtReal::Finite(x * u - g),
                argmax: Some(vec![u]),
                boundary: None,
            }
        }
        Located::Edge { side, point, value } => ConjugateResult {
            value,
            argmax: point.map(|p| vec![p]),
            boundary: Some(side),
        },
    })
}

fn locate_1d<O: ConvexOracle + ?Sized>(o: &O, d: &DomainInterval, x: f64, tol: f64) -> Result<Located> {
    let u0 = start_point(d);
    let phi0 = dg1(o, u0)? - x;
    if phi0.abs() <= tol {
        return Ok(Located::Root(u0));
    }
    let side = if phi0 < 0.0 { Side::Upper } else { Side::Lower };
    let sgn = if side == Side::Upper { 1.0 } else { -1.0 };
    // φ(u)·sgn < 0 means the objective still increases toward `side`.
    let ahead = |phi: f64| phi * sgn < 0.0;

    if let Some(lim) = o.grad_limit(side) {
        let lim_ahead = match lim {
            ExtReal::Finite(l) => ahead(l - x) || l == x,
            ExtReal::PosInf => side == Side::Lower,
            ExtReal::NegInf => side == Side::Upper,
        };
        if lim_ahead {
            return edge_value(o, d, side, u0, x, tol);
        }
    }

    let mut prev = u0;
    let mut prev_phi = phi0;
    match d.endpoint(side) {
        ExtReal::Finite(e) => {
            for k in 1..=64 {
                let u = e - (e - u0) * 0.5f64.powi(k);
                if !d.contains_interior(u) || u == prev {
                    break;
                }
                let phi = dg1(o, u)? - x;
                if phi.abs() <= tol {
                    return Ok(Located::Root(u));
                }
                if !ahead(phi) {
                    return bracket_solve(o, x, tol, prev, prev_phi, u, phi).map(Located::Root);
                }
                prev = u;
                prev_phi = phi;
            }
            edge_value(o, d, side, u0, x, tol)
        }
        _ => {
            let mut step = 1.0;
            while step < 2f64.powi(52) {
                let u = u0 + sgn * step;
                let phi = dg1(o, u)? - x;
                if phi.abs() <= tol {
                    return Ok(Located::Root(u));
                }
                if !ahead(phi) {
                    return bracket_solve(o, x, tol, prev, prev_phi, u, phi).map(Located::Root);
                }
                prev = u;
                prev_phi = phi;
                step *= 2.0;
            }
            edge_value(o, d, side, u0, x, tol)
        }
    }
}

/// Supremum of `x u − g(u)` when it is approached toward `side`.
fn edge_value<O: ConvexOracle + ?Sized>(
    o: &O,
    d: &DomainInterval,
    side: Side,
    u0: f64,
    x: f64,
    tol: f64,
) -> Result<Located> {
    let psi = |u: f64| -> ExtReal {
        match g1(o, u) {
            ExtReal::Finite(g) => ExtReal::Finite(x * u - g),
            _ => ExtReal::NegInf,
        }
    };
    match d.endpoint(side) {
        ExtReal::Finite(e) => {
            if d.is_closed(side) {
                if let v @ ExtReal::Finite(_) = psi(e) {
                    return Ok(Located::Edge {
                        side,
                        point: Some(e),
                        value: v,
                    });
                }
            }
            // open end: ψ increases toward e, take the limit along probes
            let mut best = psi(u0);
            for k in 1..=64 {
                let u = e - (e - u0) * 0.5f64.powi(k);
                if !d.contains_interior(u) {
                    break;
                }
                best = best.max(psi(u));
            }
            Ok(Located::Edge {
                side,
                point: Some(e),
                value: best,
            })
        }
        _ => {
            let sgn = if side == Side::Upper { 1.0 } else { -1.0 };
            let mut last = psi(u0);
            let mut step = 1.0;
            let mut inc = f64::INFINITY;
            while step < 2f64.powi(50) {
                let v = psi(u0 + sgn * step);
                inc = match (v, last) {
                    (ExtReal::Finite(a), ExtReal::Finite(b)) => a - b,
                    _ => f64::INFINITY,
                };
                last = v;
                if inc.abs() <= 1e-2 * tol {
                    break;
                }
                step *= 2.0;
            }
            let value = if inc.abs() <= tol { last } else { ExtReal::PosInf };
            Ok(Located::Edge {
                side,
                point: None,
                value,
            })
        }
    }
}

/// Safeguarded Newton (secant when no Hessian) for `g'(u) = x` on a
/// bracket with `φ(a)` and `φ(b)` of opposite signs.
fn bracket_solve<O: ConvexOracle + ?Sized>(
    o: &O,
    x: f64,
    tol: f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
) -> Result<f64> {
    let (mut lo, mut hi, mut flo, mut fhi) = if fa < 0.0 { (a, b, fa, fb) } else { (b, a, fb, fa) };
    let mut u = if (flo - fhi).abs() > 0.0 {
        lo - flo * (hi - lo) / (fhi - flo)
    } else {
        0.5 * (lo + hi)
    };
    let mut prev_step = (hi - lo).abs();
    for _ in 0..MAX_ITER {
        if !(u > lo.min(hi) && u < lo.max(hi)) {
            u = 0.5 * (lo + hi);
        }
        let phi = dg1(o, u)? - x;
        if phi.abs() <= tol {
            return Ok(u);
        }
        if phi < 0.0 {
            lo = u;
            flo = phi;
        } else {
            hi = u;
            fhi = phi;
        }
        let width = (hi - lo).abs();
        if width <= 4.0 * f64::EPSILON * (1.0 + u.abs()) {
            // bracket at machine resolution: g' jumps across x here
            return Ok(u);
        }
        let slope = o
            .hessian(&[u])
            .map(|h| h[(0, 0)])
            .filter(|s| s.is_finite() && *s > 0.0)
            .unwrap_or((fhi - flo) / (hi - lo));
        let mut next = u - phi / slope;
        let inside = next > lo.min(hi) && next < lo.max(hi);
        if !inside || (next - u).abs() > 0.5 * prev_step {
            next = 0.5 * (lo + hi);
        }
        prev_step = (next - u).abs();
        u = next;
    }
    Err(Error::no_convergence(MAX_ITER, format!("solving g'(u) = {x}")))
}

enum NdOutcome {
    Root(Vec<f64>),
    Unbounded,
}

/// Damped Newton for `∇g(u) = x` on a full-space domain. Steps use the
/// pseudo-inverse of the Hessian, so from `u = 0` the iterates stay in
/// its range and converge to the minimal-norm solution. A residual that
/// persists in the Hessian's null space certifies an unbounded
/// supremum.
fn newton_nd<O: ConvexOracle + ?Sized>(o: &O, x: &[f64], tol: f64) -> Result<NdOutcome> {
    let n = x.len();
    let xv = DVector::from_column_slice(x);
    let mut u = DVector::zeros(n);
    let psi = |u: &DVector<f64>| -> f64 {
        match o.eval(u.as_slice()) {
            ExtReal::Finite(g) => xv.dot(u) - g,
            _ => f64::NEG_INFINITY,
        }
    };
    for _ in 0..MAX_ITER {
        let r = &xv - DVector::from_vec(o.grad(u.as_slice())?);
        let h = o
            .hessian(u.as_slice())
            .ok_or_else(|| Error::Unsupported("multi-dimensional conjugate needs a Hessian".into()))?;
        let svd = h.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let pinv = svd
            .pseudo_inverse(1e-12 * smax.max(1e-300))
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let step = &pinv * &r;
        let range_part = &h * &step;
        let null_part = &r - &range_part;
        if r.norm() <= tol {
            return Ok(NdOutcome::Root(u.as_slice().to_vec()));
        }
        if null_part.norm() > tol.max(1e-10 * (1.0 + xv.norm())) && (&r - &null_part).norm() <= tol {
            return Ok(NdOutcome::Unbounded);
        }
        let base = psi(&u);
        let mut t = 1.0;
        let slope = r.dot(&step);
        loop {
            let cand = &u + &step * t;
            if psi(&cand) >= base + 1e-4 * t * slope || t < 1e-12 {
                u = cand;
                break;
            }
            t *= 0.5;
        }
        if u.norm() > 1e12 {
            return Ok(NdOutcome::Unbounded);
        }
    }
    Err(Error::no_convergence(MAX_ITER, "multi-dimensional Newton for ∇g(u) = x"))
}

fn legendre_nd<O: ConvexOracle + ?Sized>(o: &O, x: &[f64], tol: f64) -> Result<ConjugateResult> {
    Ok(match newton_nd(o, x, tol)? {
        NdOutcome::Root(u) => {
            let g = o
                .eval(&u)
                .finite()
                .ok_or_else(|| Error::OutsideDomain { point: u.clone() })?;
            let v = x.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>() - g;
            ConjugateResult {
                value: ExtReal::Finite(v),
                argmax: Some(u),
                boundary: None,
            }
        }
        NdOutcome::Unbounded => ConjugateResult {
            value: ExtReal::PosInf,
            argmax: None,
            boundary: None,
        },
    })
}
