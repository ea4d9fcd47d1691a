//! Brute-force oracle for `I_f`: minimize the path action over
//! discretized paths subject to `∫ f dh = x`.
//!
//! The path has `m` linear pieces of length `1/m` with slopes `s_i`, plus
//! jump atoms of direction `±1` at the first maximizer and minimizer of
//! `f` whenever the corresponding `I_∞(±1)` is finite. The program
//!
//! ```text
//! minimize   Σ_i (1/m) I(s_i) + Σ_a I_∞(e_a) μ_a
//! subject to Σ_i (1/m) f(t_i) s_i + Σ_a f(τ_a) e_a μ_a = x,  μ ≥ 0
//! ```
//!
//! (with `t_i` the cell midpoints) is solved by an infeasible-start
//! Newton method on a log-barrier for the atom masses.

use crate::cgf::{CgfModel, DomainInterval};
use crate::error::{Error, Result};
use crate::extreal::ExtReal;
use crate::kernel::Kernel;

const MAX_NEWTON: usize = 200;
const HESS_FLOOR: f64 = 1e-10;
const STALL_OK: f64 = 1e-7;

struct Atom {
    /// `f(τ) e`, the pairing weight.
    weight: f64,
    cost: f64,
}

fn atoms(model: &CgfModel, kernel: &Kernel) -> Vec<Atom> {
    let (up, down) = model.recession_pm().expect("one-dimensional");
    let fmax = kernel.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let fmin = kernel.values().iter().copied().fold(f64::INFINITY, f64::min);
    let mut out = Vec::new();
    for fv in [fmax, fmin] {
        if fv == 0.0 {
            continue;
        }
        for (dir, cost) in [(1.0, up), (-1.0, down)] {
            if let ExtReal::Finite(c) = cost {
                out.push(Atom { weight: fv * dir, cost: c });
            }
        }
    }
    out
}

/// The brute-force value of `I_f(x)` with `m` pieces.
pub fn variational_rate(model: &CgfModel, kernel: &Kernel, x: f64, m: usize, tol: f64) -> Result<ExtReal> {
    if model.dim() != 1 {
        return Err(Error::Unsupported("the path program is one-dimensional".into()));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("need at least one piece".into()));
    }
    if !(tol > 0.0) || !x.is_finite() {
        return Err(Error::InvalidParameter("tolerance must be positive and x finite".into()));
    }
    let dom = model.rate_domain().expect("one-dimensional");
    let mean = model.mean()[0];
    let h = 1.0 / m as f64;
    let a: Vec<f64> = (0..m).map(|i| h * kernel.eval((i as f64 + 0.5) * h)).collect();
    let at = atoms(model, kernel);

    // reach of the constraint
    let unbounded_up = at.iter().any(|q| q.weight > 0.0);
    let unbounded_down = at.iter().any(|q| q.weight < 0.0);
    let (rlo, rhi) = reach(&a, &dom);
    let slack = |e: ExtReal| 1e-12 * (1.0 + e.to_f64().abs());
    let near = |e: ExtReal| e.is_finite() && (x - e.to_f64()).abs() <= slack(e);
    let xe = ExtReal::Finite(x);
    let hit_hi = !unbounded_up && near(rhi.0);
    let hit_lo = !unbounded_down && near(rlo.0);
    if (!unbounded_up && !hit_hi && xe > rhi.0) || (!unbounded_down && !hit_lo && xe < rlo.0) {
        return Ok(ExtReal::PosInf);
    }
    if hit_hi || hit_lo {
        let upper = hit_hi;
        let closed = if upper { rhi.1 } else { rlo.1 };
        if !closed {
            return Ok(ExtReal::PosInf);
        }
        // every slope sits at the end of conv supp favouring the constraint
        let mut total = ExtReal::ZERO;
        for &ai in &a {
            let s = if ai == 0.0 {
                mean
            } else if (ai > 0.0) == upper {
                dom.upper.to_f64()
            } else {
                dom.lower.to_f64()
            };
            total = total + model.rate_1d(s).scale(h);
        }
        return Ok(total);
    }

    let n = m + at.len();
    let mut z = vec![mean; n];
    for v in z.iter_mut().skip(m) {
        *v = 0.1;
    }
    let mut nu = 0.0;
    let mut tau = 1e-3;
    loop {
        newton(model, &dom, &a, &at, x, tau, &mut z, &mut nu, tol)?;
        if tau <= 1e-12 {
            break;
        }
        tau *= 0.1;
    }
    let mut total = ExtReal::ZERO;
    for &s in &z[..m] {
        total = total + model.rate_1d(s).scale(h);
    }
    for (q, &mu) in at.iter().zip(&z[m..]) {
        total = total + ExtReal::Finite(q.cost * mu);
    }
    Ok(total)
}

/// `(inf, sup)` of `Σ a_i s_i` over `s_i ∈ dom I`, each with a flag
/// telling whether it is attained.
fn reach(a: &[f64], dom: &DomainInterval) -> ((ExtReal, bool), (ExtReal, bool)) {
    let mut lo = (ExtReal::ZERO, true);
    let mut hi = (ExtReal::ZERO, true);
    for &ai in a {
        if ai == 0.0 {
            continue;
        }
        let (for_hi, for_lo, c_hi, c_lo) = if ai > 0.0 {
            (dom.upper, dom.lower, dom.upper_closed, dom.lower_closed)
        } else {
            (dom.lower, dom.upper, dom.lower_closed, dom.upper_closed)
        };
        let mul = |e: ExtReal| match e {
            ExtReal::Finite(v) => ExtReal::Finite(ai * v),
            ExtReal::PosInf if ai > 0.0 => ExtReal::PosInf,
            ExtReal::PosInf => ExtReal::NegInf,
            ExtReal::NegInf if ai > 0.0 => ExtReal::NegInf,
            ExtReal::NegInf => ExtReal::PosInf,
        };
        hi = (hi.0 + mul(for_hi), hi.1 && c_hi);
        lo = (lo.0 + mul(for_lo), lo.1 && c_lo);
    }
    (lo, hi)
}

fn grad_hess(model: &CgfModel, s: f64) -> Option<(f64, f64)> {
    let g = model.rate_grad(&[s])?[0];
    let hm = model.rate_hessian(&[s])?[(0, 0)];
    (g.is_finite() && hm.is_finite()).then_some((g, hm))
}

#[allow(clippy::too_many_arguments)]
fn newton(
    model: &CgfModel,
    dom: &DomainInterval,
    a: &[f64],
    at: &[Atom],
    x: f64,
    tau: f64,
    z: &mut [f64],
    nu: &mut f64,
    tol: f64,
) -> Result<()> {
    let m = a.len();
    let h = 1.0 / m as f64;
    let weight = |k: usize| if k < m { a[k] } else { at[k - m].weight };
    let grads = |z: &[f64]| -> Option<Vec<(f64, f64)>> {
        let mut out = Vec::with_capacity(z.len());
        for (k, &v) in z.iter().enumerate() {
            if k < m {
                if !dom.contains_interior(v) {
                    return None;
                }
                let (g, hh) = grad_hess(model, v)?;
                out.push((h * g, h * hh.max(HESS_FLOOR)));
            } else {
                if v <= 0.0 {
                    return None;
                }
                out.push((at[k - m].cost - tau / v, tau / (v * v)));
            }
        }
        Some(out)
    };
    let residual = |z: &[f64], nu: f64, gh: &[(f64, f64)]| -> f64 {
        let dual: f64 = gh
            .iter()
            .enumerate()
            .map(|(k, (g, _))| (g + weight(k) * nu).powi(2))
            .sum();
        let pri: f64 = z.iter().enumerate().map(|(k, v)| weight(k) * v).sum::<f64>() - x;
        (dual + pri * pri).sqrt()
    };
    let stop = 1e-2 * tol.min(1e-10);
    for _ in 0..MAX_NEWTON {
        let gh = grads(z).ok_or_else(|| Error::no_convergence(0, "iterate left the domain"))?;
        let r0 = residual(z, *nu, &gh);
        if r0 <= stop {
            return Ok(());
        }
        let pri: f64 = z.iter().enumerate().map(|(k, v)| weight(k) * v).sum::<f64>() - x;
        // KKT: H dz + A^T w = -g, A dz = -pri, solved via the Schur complement
        let (mut s_aha, mut s_ahg) = (0.0, 0.0);
        for (k, (g, hh)) in gh.iter().enumerate() {
            let w = weight(k);
            s_aha += w * w / hh;
            s_ahg += w * g / hh;
        }
        let w_new = (pri - s_ahg) / s_aha;
        let dz: Vec<f64> = gh
            .iter()
            .enumerate()
            .map(|(k, (g, hh))| -(g + weight(k) * w_new) / hh)
            .collect();
        let dnu = w_new - *nu;
        // fraction to the boundary for atom masses and bounded rate domains
        let mut t: f64 = 1.0;
        for (k, (&v, &d)) in z.iter().zip(&dz).enumerate() {
            if k >= m {
                if d < 0.0 {
                    t = t.min(-0.99 * v / d);
                }
            } else {
                if let (ExtReal::Finite(hi), true) = (dom.upper, d > 0.0) {
                    t = t.min(0.99 * (hi - v) / d);
                }
                if let (ExtReal::Finite(lo), true) = (dom.lower, d < 0.0) {
                    t = t.min(0.99 * (lo - v) / d);
                }
            }
        }
        let mut accepted = false;
        while t > 1e-14 {
            let cand: Vec<f64> = z.iter().zip(&dz).map(|(v, d)| v + t * d).collect();
            if let Some(gc) = grads(&cand) {
                let nc = *nu + t * dnu;
                if residual(&cand, nc, &gc) <= (1.0 - 0.01 * t) * r0 {
                    z.copy_from_slice(&cand);
                    *nu = nc;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            // the barrier makes the KKT system ill-conditioned as τ → 0;
            // a stall at this level only perturbs the multiplier
            if r0 <= STALL_OK {
                return Ok(());
            }
            return Err(Error::no_convergence(MAX_NEWTON, format!("path program stalled at residual {r0:e}")));
        }
    }
    Err(Error::no_convergence(MAX_NEWTON, "path program Newton iterations"))
}
