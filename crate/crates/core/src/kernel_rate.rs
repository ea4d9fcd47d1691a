//! Rate function `I_f` of kernel-weighted sums `(1/n) Σ f(k/n) X_k`.
//!
//! `E_f(λ) = ∫_0^1 K(λ f(t)) dt` and `I_f = E_f*`. Two routes are
//! offered: the numerical conjugate of `E_f`, and the explicit integral
//! `∫ I(∇K(λ* f(t))) dt` extended in one dimension by the affine terms
//! `M_+ (x − sup E_f')_+ + M_- (x − inf E_f')_-`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cgf::{CgfModel, DomainInterval, EffectiveDomain};
use crate::conjugate::{self, ConvexOracle, GradInverse};
use crate::error::{check_dim, Error, Result, Side};
use crate::extreal::ExtReal;
use crate::kernel::{ExtremalSet, Kernel};
use crate::paths::{kernel_mass, merge_grids, CadlagPath};
use crate::quad;

const QUAD_TOL: f64 = 1e-13;
/// Uniform cells used to discretize minimizers.
pub const MINIMIZER_CELLS: usize = 8192;

fn one_d(model: &CgfModel) -> Result<DomainInterval> {
    model
        .domain_interval()
        .ok_or_else(|| Error::Unsupported("this operation is one-dimensional".into()))
}

/// Moves `u` into the closure of `d`, and off an open endpoint.
fn inward(d: &DomainInterval, u: f64) -> f64 {
    let mut u = u;
    if let ExtReal::Finite(b) = d.upper {
        if u >= b {
            u = if d.upper_closed { b } else { b.next_down() };
        }
    }
    if let ExtReal::Finite(a) = d.lower {
        if u <= a {
            u = if d.lower_closed { a } else { a.next_up() };
        }
    }
    u
}

fn in_closure(d: &DomainInterval, u: f64) -> bool {
    d.in_closure(u)
}

fn at_open_end(d: &DomainInterval, u: f64) -> bool {
    (ExtReal::Finite(u) == d.upper && !d.upper_closed) || (ExtReal::Finite(u) == d.lower && !d.lower_closed)
}

/// `E_f(λ)`, `+∞` when `λ f(t)` leaves `D_L` on a set of positive measure.
pub fn e_f(model: &CgfModel, kernel: &Kernel, lambda: &[f64]) -> Result<ExtReal> {
    check_dim(model.dim(), lambda.len())?;
    let mut total = 0.0;
    match model.domain_interval() {
        Some(d) => {
            let lam = lambda[0];
            for (t0, t1, a, b) in kernel.pieces() {
                let (ua, ub) = (lam * a, lam * b);
                if !in_closure(&d, ua) || !in_closure(&d, ub) || (ua == ub && at_open_end(&d, ua)) {
                    return Ok(ExtReal::PosInf);
                }
                let g = |t: f64, out: &mut [f64]| {
                    let u = inward(&d, lam * kernel.eval(t));
                    out[0] = model.cgf_1d(u).to_f64();
                    Ok(())
                };
                total += quad::adaptive(&g, t0, t1, 1, QUAD_TOL)?[0];
            }
        }
        None => {
            let g = |t: f64, out: &mut [f64]| {
                let f = kernel.eval(t);
                let u: Vec<f64> = lambda.iter().map(|l| l * f).collect();
                out[0] = model.cgf(&u)?.to_f64();
                Ok(())
            };
            for (t0, t1, _, _) in kernel.pieces() {
                total += quad::adaptive(&g, t0, t1, 1, QUAD_TOL)?[0];
            }
        }
    }
    Ok(ExtReal::from_f64(total))
}

/// `∇E_f(λ) = ∫ f(t) ∇K(λ f(t)) dt` for `λ` in the closure of `D_f`.
/// When `∇K` blows up non-integrably where `λ f` touches `∂D_L`, the
/// slope is reported as [`Error::InfiniteSlope`].
pub fn e_f_grad(model: &CgfModel, kernel: &Kernel, lambda: &[f64]) -> Result<Vec<f64>> {
    check_dim(model.dim(), lambda.len())?;
    if model.dim() == 1 {
        return match ef_prime_closure(model, kernel, ExtReal::Finite(lambda[0]))? {
            ExtReal::Finite(v) => Ok(vec![v]),
            ExtReal::PosInf => Err(Error::InfiniteSlope(Side::Upper)),
            ExtReal::NegInf => Err(Error::InfiniteSlope(Side::Lower)),
        };
    }
    let d = model.dim();
    let g = |t: f64, out: &mut [f64]| {
        let f = kernel.eval(t);
        let u: Vec<f64> = lambda.iter().map(|l| l * f).collect();
        let gr = model.grad(&u)?;
        for (o, v) in out.iter_mut().zip(gr) {
            *o = f * v;
        }
        Ok(())
    };
    let mut total = vec![0.0; d];
    for (t0, t1, _, _) in kernel.pieces() {
        let part = quad::adaptive(&g, t0, t1, d, QUAD_TOL)?;
        total.iter_mut().zip(part).for_each(|(a, b)| *a += b);
    }
    Ok(total)
}

/// `∇²E_f(λ) = ∫ f² ∇²K(λ f)`.
fn e_f_hessian(model: &CgfModel, kernel: &Kernel, lambda: &[f64]) -> Option<DMatrix<f64>> {
    let d = model.dim();
    let g = |t: f64, out: &mut [f64]| {
        let f = kernel.eval(t);
        let u: Vec<f64> = lambda.iter().map(|l| l * f).collect();
        let h = model.hessian(&u)?;
        for (o, v) in out.iter_mut().zip(h.iter()) {
            *o = f * f * v;
        }
        Ok(())
    };
    let mut total = vec![0.0; d * d];
    for (t0, t1, _, _) in kernel.pieces() {
        let part = quad::adaptive(&g, t0, t1, d * d, 1e-10).ok()?;
        total.iter_mut().zip(part).for_each(|(a, b)| *a += b);
    }
    let h = DMatrix::from_column_slice(d, d, &total);
    h.iter().all(|x| x.is_finite()).then_some(h)
}

/// `∫ f_+`, `∫ f_-`, `|{f > 0}|`, `|{f < 0}|`.
fn sign_masses(kernel: &Kernel) -> (f64, f64, f64, f64) {
    let (mut p, mut n, mut lp, mut ln) = (0.0, 0.0, 0.0, 0.0);
    for (t0, t1, a, b) in kernel.pieces() {
        let len = t1 - t0;
        if a >= 0.0 && b >= 0.0 {
            p += 0.5 * len * (a + b);
            if a > 0.0 || b > 0.0 {
                lp += len;
            }
        } else if a <= 0.0 && b <= 0.0 {
            n -= 0.5 * len * (a + b);
            ln += len;
        } else {
            // one sign change at s = a/(a-b) of the piece
            let s = a / (a - b) * len;
            let (l1, l2) = (s, len - s);
            if a > 0.0 {
                p += 0.5 * l1 * a;
                n += 0.5 * l2 * (-b);
                lp += l1;
                ln += l2;
            } else {
                n += 0.5 * l1 * (-a);
                p += 0.5 * l2 * b;
                ln += l1;
                lp += l2;
            }
        }
    }
    (p, n, lp, ln)
}

/// `E_f'(λ)` for `λ` in the closure of `D_f` (one-sided limits at its
/// ends, including `λ = ±∞` when `D_f` is unbounded).
fn ef_prime_closure(model: &CgfModel, kernel: &Kernel, lam: ExtReal) -> Result<ExtReal> {
    let d = one_d(model)?;
    match lam {
        ExtReal::Finite(lam) => {
            let mut total = 0.0;
            for (t0, t1, a, b) in kernel.pieces() {
                let (ua, ub) = (lam * a, lam * b);
                if !in_closure(&d, ua) || !in_closure(&d, ub) {
                    return Err(Error::OutsideDomain { point: vec![lam] });
                }
                for u in [ua, ub] {
                    if !d.contains_interior(u) {
                        let lim = model.grad_limit_1d(ExtReal::Finite(u)).expect("in closure");
                        if !lim.is_finite() && !model.cgf_1d(u).is_finite() {
                            return Ok(if lam > 0.0 { ExtReal::PosInf } else { ExtReal::NegInf });
                        }
                    }
                }
                let g = |t: f64, out: &mut [f64]| {
                    let f = kernel.eval(t);
                    let u = inward(&d, lam * f);
                    out[0] = f * model.grad_limit_1d(ExtReal::Finite(u)).expect("in closure").to_f64();
                    Ok(())
                };
                total += quad::adaptive(&g, t0, t1, 1, QUAD_TOL)?[0];
            }
            Ok(ExtReal::from_f64(total))
        }
        inf => {
            let up = inf == ExtReal::PosInf;
            let (p, n, _, _) = sign_masses(kernel);
            // where f > 0, λ f tends to sign(λ)·∞; where f < 0, to -sign(λ)·∞
            let (lim_pos, lim_neg) = if up {
                (ExtReal::PosInf, ExtReal::NegInf)
            } else {
                (ExtReal::NegInf, ExtReal::PosInf)
            };
            let term = |mass: f64, at: ExtReal, sign: f64| -> Result<ExtReal> {
                if mass == 0.0 {
                    return Ok(ExtReal::ZERO);
                }
                let l = model.grad_limit_1d(at).ok_or_else(|| {
                    Error::InvalidParameter("D_f is bounded on this side".into())
                })?;
                Ok(match l {
                    ExtReal::Finite(v) => ExtReal::Finite(sign * mass * v),
                    ExtReal::PosInf => if sign > 0.0 { ExtReal::PosInf } else { ExtReal::NegInf },
                    ExtReal::NegInf => if sign > 0.0 { ExtReal::NegInf } else { ExtReal::PosInf },
                })
            };
            Ok(term(p, lim_pos, 1.0)? + term(n, lim_neg, -1.0)?)
        }
    }
}

/// `(M_+, M_-)` with the conventions `1/0 = +∞`, `C/0 = R`.
pub fn m_plus_minus(model: &CgfModel, kernel: &Kernel) -> Result<(ExtReal, ExtReal)> {
    let d = one_d(model)?;
    let (up, down) = (d.upper, -d.lower);
    let (fp, fm) = (kernel.max_plus(), kernel.max_minus());
    Ok((
        up.div_nonneg(fp).min(down.div_nonneg(fm)),
        up.div_nonneg(fm).min(down.div_nonneg(fp)),
    ))
}

/// `D_f = D_L / max f_+ ∩ (−D_L) / max f_-`.
pub fn d_f(model: &CgfModel, kernel: &Kernel) -> Result<EffectiveDomain> {
    let dl = model.domain();
    let d = match dl {
        EffectiveDomain::Full { .. } => return Ok(dl),
        EffectiveDomain::Interval(d) => d,
    };
    let (mp, mm) = m_plus_minus(model, kernel)?;
    let (up, down) = (d.upper, -d.lower);
    let (fp, fm) = (kernel.max_plus(), kernel.max_minus());
    // an end of D_f is closed when every constraint attaining it is closed
    let closed = |m: ExtReal, via_up: f64, via_down: f64| -> bool {
        if !m.is_finite() {
            return false;
        }
        let mut ok = true;
        if up.div_nonneg(via_up) == m {
            ok &= d.upper_closed;
        }
        if down.div_nonneg(via_down) == m {
            ok &= d.lower_closed;
        }
        ok
    };
    Ok(EffectiveDomain::Interval(DomainInterval {
        lower: -mm,
        upper: mp,
        lower_closed: closed(mm, fm, fp),
        upper_closed: closed(mp, fp, fm),
    }))
}

/// `(inf E_f', sup E_f')` as one-sided limits at the ends of `D_f`.
pub fn ef_prime_range(model: &CgfModel, kernel: &Kernel) -> Result<(ExtReal, ExtReal)> {
    let (mp, mm) = m_plus_minus(model, kernel)?;
    Ok((ef_prime_closure(model, kernel, -mm)?, ef_prime_closure(model, kernel, mp)?))
}

/// `E_f` as a convex oracle on `D_f`.
pub struct EfOracle<'a> {
    model: &'a CgfModel,
    kernel: &'a Kernel,
    domain: EffectiveDomain,
    range: Option<(ExtReal, ExtReal)>,
}

impl<'a> EfOracle<'a> {
    pub fn new(model: &'a CgfModel, kernel: &'a Kernel) -> Result<Self> {
        let domain = d_f(model, kernel)?;
        let range = match domain {
            EffectiveDomain::Interval(_) | EffectiveDomain::Full { dim: 1 } => {
                Some(ef_prime_range(model, kernel)?)
            }
            _ => None,
        };
        Ok(Self {
            model,
            kernel,
            domain,
            range,
        })
    }

    /// `(inf E_f', sup E_f')` in one dimension.
    pub fn range(&self) -> Option<(ExtReal, ExtReal)> {
        self.range
    }
}

impl ConvexOracle for EfOracle<'_> {
    fn domain(&self) -> EffectiveDomain {
        self.domain
    }
    fn eval(&self, u: &[f64]) -> ExtReal {
        e_f(self.model, self.kernel, u).unwrap_or(ExtReal::PosInf)
    }
    fn grad(&self, u: &[f64]) -> Result<Vec<f64>> {
        e_f_grad(self.model, self.kernel, u)
    }
    fn hessian(&self, u: &[f64]) -> Option<DMatrix<f64>> {
        e_f_hessian(self.model, self.kernel, u)
    }
    fn is_strict(&self) -> bool {
        ConvexOracle::is_strict(self.model)
    }
    fn grad_limit(&self, side: Side) -> Option<ExtReal> {
        let (lo, hi) = self.range?;
        Some(match side {
            Side::Lower => lo,
            Side::Upper => hi,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Interior,
    SingularPlus,
    SingularMinus,
    Infinite,
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Branch::Interior => "interior",
            Branch::SingularPlus => "singular_plus",
            Branch::SingularMinus => "singular_minus",
            Branch::Infinite => "infinite",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelRateResult {
    pub x: Vec<f64>,
    pub value: ExtReal,
    pub branch: Branch,
    /// `λ*` on the interior branch; the clamped endpoint `±M_±` on a
    /// singular branch when it is finite.
    pub lambda_star: Option<Vec<f64>>,
    pub m_plus: Option<ExtReal>,
    pub m_minus: Option<ExtReal>,
    pub sup_ef_prime: Option<ExtReal>,
    pub inf_ef_prime: Option<ExtReal>,
}

struct Setup {
    mean0: Vec<f64>,
    m: Option<(ExtReal, ExtReal)>,
    range: Option<(ExtReal, ExtReal)>,
}

fn setup(model: &CgfModel, kernel: &Kernel, x: &[f64], tol: f64) -> Result<Setup> {
    check_dim(model.dim(), x.len())?;
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("x must be finite".into()));
    }
    let m1 = kernel.m1();
    let mean0 = model.mean().iter().map(|m| m1 * m).collect();
    let one = model.dim() == 1;
    Ok(Setup {
        mean0,
        m: if one { Some(m_plus_minus(model, kernel)?) } else { None },
        range: if one { Some(ef_prime_range(model, kernel)?) } else { None },
    })
}

impl Setup {
    fn result(&self, x: &[f64], value: ExtReal, branch: Branch, lambda: Option<Vec<f64>>) -> KernelRateResult {
        let branch = if value == ExtReal::PosInf { Branch::Infinite } else { branch };
        KernelRateResult {
            x: x.to_vec(),
            value,
            branch,
            lambda_star: lambda,
            m_plus: self.m.map(|m| m.0),
            m_minus: self.m.map(|m| m.1),
            sup_ef_prime: self.range.map(|r| r.1),
            inf_ef_prime: self.range.map(|r| r.0),
        }
    }

    fn at_mean(&self, x: &[f64]) -> Option<KernelRateResult> {
        (x == self.mean0.as_slice())
            .then(|| self.result(x, ExtReal::ZERO, Branch::Interior, Some(vec![0.0; x.len()])))
    }
}

/// `I_f(x)` as the numerical conjugate of `E_f` over `D_f`.
pub fn i_f_conjugate(model: &CgfModel, kernel: &Kernel, x: &[f64], tol: f64) -> Result<KernelRateResult> {
    let s = setup(model, kernel, x, tol)?;
    if let Some(r) = s.at_mean(x) {
        return Ok(r);
    }
    let oracle = EfOracle::new(model, kernel)?;
    let c = conjugate::legendre(&oracle, x, tol)?;
    let branch = match c.boundary {
        None => Branch::Interior,
        Some(Side::Upper) => Branch::SingularPlus,
        Some(Side::Lower) => Branch::SingularMinus,
    };
    let value = c.value.max(ExtReal::ZERO);
    Ok(s.result(x, value, branch, c.argmax))
}

/// `∫_0^1 I(K'(λ f(t))) dt` with one-sided limits at `∂D_L`.
fn rate_along(model: &CgfModel, kernel: &Kernel, lam: ExtReal) -> Result<ExtReal> {
    let d = one_d(model)?;
    match lam {
        ExtReal::Finite(lam) => {
            let g = |t: f64, out: &mut [f64]| {
                let u = inward(&d, lam * kernel.eval(t));
                let v = model.grad_limit_1d(ExtReal::Finite(u)).expect("in closure");
                out[0] = match v {
                    ExtReal::Finite(v) => model.rate_1d(v).to_f64(),
                    _ => f64::INFINITY,
                };
                Ok(())
            };
            let mut total = 0.0;
            for (t0, t1, _, _) in kernel.pieces() {
                match quad::adaptive(&g, t0, t1, 1, QUAD_TOL) {
                    Ok(v) => total += v[0],
                    Err(Error::InvalidParameter(_)) => return Ok(ExtReal::PosInf),
                    Err(e) => return Err(e),
                }
            }
            Ok(ExtReal::from_f64(total))
        }
        inf => {
            let (_, _, lp, ln) = sign_masses(kernel);
            let (at_pos, at_neg) = if inf == ExtReal::PosInf {
                (ExtReal::PosInf, ExtReal::NegInf)
            } else {
                (ExtReal::NegInf, ExtReal::PosInf)
            };
            let part = |len: f64, at: ExtReal| -> ExtReal {
                if len == 0.0 {
                    return ExtReal::ZERO;
                }
                match model.grad_limit_1d(at) {
                    Some(ExtReal::Finite(v)) => model.rate_1d(v).scale(len),
                    _ => ExtReal::PosInf,
                }
            };
            Ok(part(lp, at_pos) + part(ln, at_neg))
        }
    }
}

/// `I_f(x)` by the explicit integral formula, with the affine
/// continuation outside `(inf E_f', sup E_f')` in one dimension.
pub fn i_f_explicit(model: &CgfModel, kernel: &Kernel, x: &[f64], tol: f64) -> Result<KernelRateResult> {
    let s = setup(model, kernel, x, tol)?;
    if let Some(r) = s.at_mean(x) {
        return Ok(r);
    }
    let oracle = EfOracle::new(model, kernel)?;
    if model.dim() > 1 {
        let lam = conjugate::grad_inverse_min_norm(&oracle, x, tol)?.ok_or_else(|| {
            Error::Unsupported("x lies outside the range of ∇E_f; only the conjugate route applies".into())
        })?;
        let d = model.dim();
        let g = |t: f64, out: &mut [f64]| {
            let f = kernel.eval(t);
            let u: Vec<f64> = lam.iter().map(|l| l * f).collect();
            out[0] = model.rate(&model.grad(&u)?)?.to_f64();
            Ok(())
        };
        let mut total = 0.0;
        for (t0, t1, _, _) in kernel.pieces() {
            total += quad::adaptive(&g, t0, t1, 1, QUAD_TOL)?[0];
        }
        debug_assert_eq!(lam.len(), d);
        return Ok(s.result(x, ExtReal::from_f64(total), Branch::Interior, Some(lam)));
    }

    let xv = x[0];
    let (mp, mm) = s.m.expect("one-dimensional");
    let (lo, hi) = s.range.expect("one-dimensional");
    let x_e = ExtReal::Finite(xv);
    if x_e > lo && x_e < hi {
        match conjugate::grad_inverse(&oracle, x, tol)? {
            GradInverse::Interior(l) => {
                let v = rate_along(model, kernel, ExtReal::Finite(l[0]))?;
                return Ok(s.result(x, v, Branch::Interior, Some(l)));
            }
            // x within the solver tolerance of an end of the range
            GradInverse::Above | GradInverse::Below => {}
        }
    }
    let (m, excess, lam, branch) = if x_e >= hi || (x_e > lo && xv - hi.to_f64() >= lo.to_f64() - xv) {
        (mp, (xv - hi.to_f64()).max(0.0), mp, Branch::SingularPlus)
    } else {
        (mm, (lo.to_f64() - xv).max(0.0), -mm, Branch::SingularMinus)
    };
    let affine = m.mul_nonneg(ExtReal::Finite(excess));
    let value = affine + rate_along(model, kernel, lam)?;
    let lambda = lam.finite().map(|l| vec![l]);
    Ok(s.result(x, value, branch, lambda))
}

/// `∇K(λ f(t))` including one-sided limits at `∂D_L` and `λ = ±∞`.
fn grad_along(model: &CgfModel, d: Option<&DomainInterval>, lam: &[ExtReal], f: f64) -> Result<Vec<f64>> {
    match d {
        Some(d) => {
            let v = match lam[0] {
                ExtReal::Finite(l) => model.grad_limit_1d(ExtReal::Finite(inward(d, l * f))),
                inf if f == 0.0 => {
                    let _ = inf;
                    Some(ExtReal::Finite(model.mean()[0]))
                }
                inf => model.grad_limit_1d(if f > 0.0 { inf } else { -inf }),
            };
            match v {
                Some(ExtReal::Finite(v)) => Ok(vec![v]),
                _ => Err(Error::InvalidParameter("derivative is not finite along the minimizer".into())),
            }
        }
        None => {
            let u: Vec<f64> = lam.iter().map(|l| l.to_f64() * f).collect();
            model.grad(&u)
        }
    }
}

/// The minimizer of `I_D` subject to `∫ f dh = x`: `h(t) = ∫_0^t ∇K(λ* f)`
/// on the interior branch; on a singular branch the same with `λ`
/// clamped to the end of `D_f`, plus one jump at the first extremal
/// point of `f` carrying the excess.
pub fn minimizer(model: &CgfModel, kernel: &Kernel, x: &[f64], tol: f64) -> Result<CadlagPath> {
    let r = i_f_explicit(model, kernel, x, tol)?;
    let dim = model.dim();
    let d = model.domain_interval();
    let (lam, jump): (Vec<ExtReal>, Option<(f64, Vec<f64>)>) = match r.branch {
        Branch::Infinite => return Err(Error::OutsideDomain { point: x.to_vec() }),
        Branch::Interior => (
            r.lambda_star
                .clone()
                .expect("interior branch has λ*")
                .into_iter()
                .map(ExtReal::Finite)
                .collect(),
            None,
        ),
        Branch::SingularPlus | Branch::SingularMinus => {
            let plus = r.branch == Branch::SingularPlus;
            let (mp, mm) = (r.m_plus.unwrap(), r.m_minus.unwrap());
            let (lo, hi) = (r.inf_ef_prime.unwrap(), r.sup_ef_prime.unwrap());
            let excess = if plus { x[0] - hi.to_f64() } else { lo.to_f64() - x[0] };
            let lam = if plus { mp } else { -mm };
            let jump = if excess > 0.0 {
                Some(singular_jump(model, kernel, plus, excess)?)
            } else {
                None
            };
            (vec![lam], jump)
        }
    };

    let uniform: Vec<f64> = (0..=MINIMIZER_CELLS).map(|i| i as f64 / MINIMIZER_CELLS as f64).collect();
    let grid = merge_grids(&uniform, kernel.breakpoints());
    let mut slopes = Vec::with_capacity(grid.len() - 1);
    for w in grid.windows(2) {
        let g = |t: f64, out: &mut [f64]| {
            let v = grad_along(model, d.as_ref(), &lam, kernel.eval(t))?;
            out.copy_from_slice(&v);
            Ok(())
        };
        let avg = quad::adaptive(&g, w[0], w[1], dim, 1e-13 * (w[1] - w[0]))?;
        slopes.push(avg.into_iter().map(|v| v / (w[1] - w[0])).collect::<Vec<f64>>());
    }
    let mut jumps: Vec<(f64, Vec<f64>)> = jump.into_iter().collect();

    // make ∫ f dh = x hold to rounding
    let trial = CadlagPath::new(dim, grid.clone(), slopes.clone(), jumps.clone())?;
    let resid: Vec<f64> = x.iter().zip(trial.pair(kernel)).map(|(a, b)| a - b).collect();
    if let Some((t, j)) = jumps.first_mut() {
        let f = kernel.eval(*t);
        for (jc, rc) in j.iter_mut().zip(&resid) {
            *jc += rc / f;
        }
    } else {
        let w: Vec<f64> = grid.windows(2).map(|c| kernel_mass(kernel, c[0], c[1])).collect();
        let denom: f64 = w.iter().zip(grid.windows(2)).map(|(wi, c)| wi * wi / (c[1] - c[0])).sum();
        for (i, c) in grid.windows(2).enumerate() {
            let k = w[i] / (c[1] - c[0]) / denom;
            for (s, rc) in slopes[i].iter_mut().zip(&resid) {
                *s += rc * k;
            }
        }
    }
    CadlagPath::new(dim, grid, slopes, jumps)
}

/// Jump carrying the excess beyond the range of `E_f'`. The binding
/// constraint in `M_±` decides whether it sits at a maximizer or a
/// minimizer of `f`; the first such point in time is used.
fn singular_jump(model: &CgfModel, kernel: &Kernel, plus: bool, excess: f64) -> Result<(f64, Vec<f64>)> {
    let d = one_d(model)?;
    let (up, down) = (d.upper, -d.lower);
    let (fp, fm) = (kernel.max_plus(), kernel.max_minus());
    let (mp, mm) = m_plus_minus(model, kernel)?;
    // candidates: (binding?, extremal sets, jump direction, |f| there)
    let cands = if plus {
        [
            (up.div_nonneg(fp) == mp, kernel.argmax_plus(), 1.0, fp),
            (down.div_nonneg(fm) == mp, kernel.argmax_minus(), -1.0, fm),
        ]
    } else {
        [
            (up.div_nonneg(fm) == mm, kernel.argmax_minus(), 1.0, fm),
            (down.div_nonneg(fp) == mm, kernel.argmax_plus(), -1.0, fp),
        ]
    };
    let mut best: Option<(f64, f64, f64)> = None;
    for (binding, sets, dir, fabs) in cands {
        if !binding || fabs == 0.0 {
            continue;
        }
        if sets.iter().any(|s| matches!(s, ExtremalSet::Interval(..))) {
            return Err(Error::Ambiguous(
                "the extremal set of the kernel has positive length".into(),
            ));
        }
        let t = sets[0].start();
        if best.is_none_or(|(bt, _, _)| t < bt) {
            best = Some((t, dir, fabs));
        }
    }
    let (t, dir, fabs) = best.ok_or_else(|| Error::Unsupported("no binding constraint".into()))?;
    Ok((t, vec![dir * excess / fabs]))
}

/// `½ m_2^{-1} (x − m_1 μ)ᵀ Σ⁺ (x − m_1 μ)` for Gaussian increments.
pub fn i_f_gaussian(model: &CgfModel, kernel: &Kernel, x: &[f64]) -> Result<ExtReal> {
    let g = match model {
        CgfModel::Gaussian(g) => g,
        _ => return Err(Error::Unsupported("closed form needs Gaussian increments".into())),
    };
    check_dim(g.dim(), x.len())?;
    let m1 = kernel.m1();
    let m2 = kernel.m2();
    // scale: E_f is the CGF of N(m1 μ, m2 Σ)
    let scaled = CgfModel::Gaussian(crate::cgf::Gaussian::new(
        g.mean().iter().map(|m| m1 * m).collect(),
        g.cov() * m2,
    )?);
    scaled.rate(x)
}
