//! Composite Gauss–Legendre quadrature with adaptive bisection.
//!
//! Integrands in this crate are smooth on each linear piece of a kernel
//! except where `λ f(t)` touches the boundary of the effective domain,
//! which can only happen at piece endpoints. Bisection therefore
//! concentrates near the ends of an interval.

use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::error::{Error, Result};

const NODES: usize = 32;

pub(crate) struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Nodes and weights on `[-1, 1]`, computed once by Newton iteration on
/// the Legendre polynomial.
pub(crate) fn gauss_legendre(n: usize) -> Rule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    Rule { nodes, weights }
}

fn rule() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(NODES))
}

/// Fixed 32-point rule on `[a, b]` for a vector-valued integrand of
/// length `out.len()`. Returns an error if the integrand is not finite
/// at some node.
pub fn fixed<F>(f: &F, a: f64, b: f64, out: &mut [f64]) -> Result<()>
where
    F: Fn(f64, &mut [f64]) -> Result<()> + ?Sized,
{
    let r = rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    out.iter_mut().for_each(|o| *o = 0.0);
    let mut buf = vec![0.0; out.len()];
    for (x, w) in r.nodes.iter().zip(&r.weights) {
        // keep nodes strictly inside when the interval is at rounding scale
        let (lo, hi) = (a.next_up(), b.next_down());
        let t = if lo < hi { (mid + half * x).clamp(lo, hi) } else { mid };
        f(t, &mut buf)?;
        for (o, v) in out.iter_mut().zip(&buf) {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "integrand not finite at t = {}",
                    mid + half * x
                )));
            }
            *o += w * v;
        }
    }
    out.iter_mut().for_each(|o| *o *= half);
    Ok(())
}

/// Adaptive integral of a vector-valued integrand over `[a, b]`.
///
/// The interval with the largest error estimate is bisected until the
/// summed estimate is below `tol` (or below rounding level of the
/// result), or the interval budget is spent. The estimate for an
/// interval is the max over components of `|whole - left - right|`.
pub fn adaptive<F>(f: &F, a: f64, b: f64, dim: usize, tol: f64) -> Result<Vec<f64>>
where
    F: Fn(f64, &mut [f64]) -> Result<()> + ?Sized,
{
    if b <= a {
        return Ok(vec![0.0; dim]);
    }
    let mut whole = vec![0.0; dim];
    fixed(f, a, b, &mut whole)?;
    let mut heap = BinaryHeap::new();
    let mut done = vec![0.0; dim];
    let mut open = Totals::default();
    let first = Piece::split(f, a, b, &whole)?;
    push(first, &mut heap, &mut done, &mut open);
    let mut count = 1;
    while count < MAX_INTERVALS {
        let mass = open.mass + done.iter().map(|x| x.abs()).sum::<f64>();
        if open.err <= tol.max(64.0 * f64::EPSILON * mass) {
            break;
        }
        let Some(p) = heap.pop() else { break };
        open.err -= p.err;
        open.mass -= p.mass();
        let c = 0.5 * (p.a + p.b);
        let l = Piece::split(f, p.a, c, &p.left)?;
        let r = Piece::split(f, c, p.b, &p.right)?;
        push(l, &mut heap, &mut done, &mut open);
        push(r, &mut heap, &mut done, &mut open);
        count += 1;
    }
    for p in heap {
        for (o, (l, r)) in done.iter_mut().zip(p.left.iter().zip(&p.right)) {
            *o += l + r;
        }
    }
    Ok(done)
}

const MAX_INTERVALS: usize = 4096;

struct Piece {
    a: f64,
    b: f64,
    left: Vec<f64>,
    right: Vec<f64>,
    err: f64,
}

impl Piece {
    fn split<F>(f: &F, a: f64, b: f64, whole: &[f64]) -> Result<Self>
    where
        F: Fn(f64, &mut [f64]) -> Result<()> + ?Sized,
    {
        let c = 0.5 * (a + b);
        let mut left = vec![0.0; whole.len()];
        let mut right = vec![0.0; whole.len()];
        fixed(f, a, c, &mut left)?;
        fixed(f, c, b, &mut right)?;
        let err = whole
            .iter()
            .zip(left.iter().zip(&right))
            .map(|(w, (l, r))| (w - l - r).abs())
            .fold(0.0, f64::max);
        Ok(Self { a, b, left, right, err })
    }

    fn mass(&self) -> f64 {
        self.left.iter().zip(&self.right).map(|(l, r)| (l + r).abs()).sum()
    }

    fn tiny(&self) -> bool {
        (self.b - self.a) <= 64.0 * f64::EPSILON * self.a.abs().max(self.b.abs()).max(1.0)
    }
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err).is_eq()
    }
}

impl Eq for Piece {}

impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Summed error estimate and magnitude of the intervals still open.
#[derive(Default)]
struct Totals {
    err: f64,
    mass: f64,
}

/// Intervals too short to bisect are settled immediately.
fn push(p: Piece, heap: &mut BinaryHeap<Piece>, done: &mut [f64], open: &mut Totals) {
    if p.tiny() {
        for (o, (l, r)) in done.iter_mut().zip(p.left.iter().zip(&p.right)) {
            *o += l + r;
        }
    } else {
        open.err += p.err;
        open.mass += p.mass();
        heap.push(p);
    }
}

/// Scalar convenience wrapper around [`adaptive`].
pub fn adaptive_scalar<F>(f: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let g = |t: f64, out: &mut [f64]| {
        out[0] = f(t);
        Ok(())
    };
    Ok(adaptive(&g, a, b, 1, tol)?[0])
}
