//! Completed graphs and distances between càdlàg paths.
//!
//! `ρ₂` is the Hausdorff distance between completed graphs in
//! `[0,1] × ℝ^d` with the Euclidean norm; `ρ₂′` uses the modified graphs
//! that also contain the segment from the origin to `(0, h(0))`.
//! `ρ_*(g, h) = ∫|g − h| + |g(1) − h(1)|`.

use crate::error::{check_dim, Error, Result};
use crate::paths::{merge_grids, CadlagPath};

/// Absolute error certified by [`rho_2`] and [`rho_2_prime`].
pub const HAUSDORFF_TOL: f64 = 1e-10;

/// A connected polygonal chain in `[0,1] × ℝ^d`; coordinate 0 is time.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphChain {
    vertices: Vec<Vec<f64>>,
}

impl GraphChain {
    pub fn new(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let first = vertices
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty chain".into()))?;
        if first.is_empty() {
            return Err(Error::InvalidParameter("vertices need a time coordinate".into()));
        }
        for v in &vertices {
            check_dim(first.len(), v.len())?;
            if v.iter().any(|x| !x.is_finite()) || !(0.0..=1.0).contains(&v[0]) {
                return Err(Error::InvalidParameter(format!("bad vertex {v:?}")));
            }
        }
        if vertices.windows(2).any(|w| w[1][0] < w[0][0]) {
            return Err(Error::InvalidParameter("time must be nondecreasing".into()));
        }
        Ok(GraphChain { vertices })
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    /// Spatial dimension `d`.
    pub fn dim(&self) -> usize {
        self.vertices[0].len() - 1
    }

    /// Consecutive vertex pairs; a single-vertex chain yields one
    /// degenerate segment.
    pub fn segments(&self) -> Vec<(&[f64], &[f64])> {
        if self.vertices.len() == 1 {
            let v = self.vertices[0].as_slice();
            return vec![(v, v)];
        }
        self.vertices
            .windows(2)
            .map(|w| (w[0].as_slice(), w[1].as_slice()))
            .collect()
    }

    pub fn segment_count(&self) -> usize {
        self.vertices.len().saturating_sub(1).max(1)
    }

    /// Distance from a point to the chain.
    pub fn distance_to(&self, p: &[f64]) -> f64 {
        self.segments()
            .into_iter()
            .map(|(a, b)| point_segment(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }
}

fn with_time(t: f64, x: Vec<f64>) -> Vec<f64> {
    let mut v = Vec::with_capacity(x.len() + 1);
    v.push(t);
    v.extend(x);
    v
}

/// Completed graph `Γh`, or `Γ′h` when `modified` is set.
pub fn completed_graph(path: &CadlagPath, modified: bool) -> GraphChain {
    let d = path.dim();
    let mut verts: Vec<Vec<f64>> = Vec::new();
    if modified {
        verts.push(vec![0.0; d + 1]);
    }
    verts.push(with_time(0.0, path.eval(0.0)));
    let jt: Vec<f64> = path.jumps().iter().map(|(t, _)| *t).collect();
    let events = merge_grids(path.grid(), &jt);
    for &t in events.iter().filter(|&&t| t > 0.0) {
        verts.push(with_time(t, path.eval_left(t)));
        if jt.contains(&t) {
            verts.push(with_time(t, path.eval(t)));
        }
    }
    verts.dedup();
    GraphChain { vertices: verts }
}

fn point_segment(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let mut ab2 = 0.0;
    let mut apab = 0.0;
    for i in 0..p.len() {
        let ab = b[i] - a[i];
        ab2 += ab * ab;
        apab += (p[i] - a[i]) * ab;
    }
    let s = if ab2 > 0.0 { (apab / ab2).clamp(0.0, 1.0) } else { 0.0 };
    p.iter()
        .zip(a.iter().zip(b))
        .map(|(pi, (ai, bi))| {
            let q = ai + s * (bi - ai) - pi;
            q * q
        })
        .sum::<f64>()
        .sqrt()
}

fn lerp(a: &[f64], b: &[f64], s: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * (y - x)).collect()
}

fn seg_len(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (y - x) * (y - x)).sum::<f64>().sqrt()
}

/// Raises `best` to `sup_{a ∈ A} dist(a, B)` up to `tol`.
///
/// On a sub-segment `[p, q]` the distance to a single segment is convex,
/// so `min_b max(dist(p,b), dist(q,b))` bounds it from above.
fn directed(a: &GraphChain, b: &GraphChain, tol: f64, best: &mut f64) {
    let bs = b.segments();
    let dist = |p: &[f64]| {
        bs.iter()
            .map(|(u, v)| point_segment(p, u, v))
            .fold(f64::INFINITY, f64::min)
    };
    let upper = |p: &[f64], q: &[f64]| {
        bs.iter()
            .map(|(u, v)| point_segment(p, u, v).max(point_segment(q, u, v)))
            .fold(f64::INFINITY, f64::min)
    };
    for (p, q) in a.segments() {
        let (fp, fq) = (dist(p), dist(q));
        *best = best.max(fp).max(fq);
        let mut stack = vec![(p.to_vec(), q.to_vec())];
        while let Some((p, q)) = stack.pop() {
            if upper(&p, &q) <= *best + tol || seg_len(&p, &q) <= tol {
                continue;
            }
            let m = lerp(&p, &q, 0.5);
            *best = best.max(dist(&m));
            stack.push((p, m.clone()));
            stack.push((m, q));
        }
    }
}

/// Hausdorff distance between two chains, within `tol` below the truth.
pub fn hausdorff(a: &GraphChain, b: &GraphChain, tol: f64) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    let mut best = 0.0;
    directed(a, b, tol, &mut best);
    directed(b, a, tol, &mut best);
    Ok(best)
}

/// `ρ₂(g, h)`.
pub fn rho_2(g: &CadlagPath, h: &CadlagPath) -> Result<f64> {
    check_dim(g.dim(), h.dim())?;
    hausdorff(&completed_graph(g, false), &completed_graph(h, false), HAUSDORFF_TOL)
}

/// `ρ₂′(g, h)`.
pub fn rho_2_prime(g: &CadlagPath, h: &CadlagPath) -> Result<f64> {
    check_dim(g.dim(), h.dim())?;
    hausdorff(&completed_graph(g, true), &completed_graph(h, true), HAUSDORFF_TOL)
}

/// `∫_0^L |p + s q| ds`.
fn affine_norm_integral(p: &[f64], q: &[f64], len: f64) -> f64 {
    if p.len() == 1 {
        let (a, b) = (p[0], q[0]);
        let end = a + b * len;
        if a * end >= 0.0 {
            return 0.5 * (a.abs() + end.abs()) * len;
        }
        // sign change at s0 = -a/b
        let s0 = -a / b;
        return 0.5 * (a.abs() * s0 + end.abs() * (len - s0));
    }
    let qq: f64 = q.iter().map(|x| x * x).sum();
    let pp: f64 = p.iter().map(|x| x * x).sum();
    if qq == 0.0 {
        return pp.sqrt() * len;
    }
    let pq: f64 = p.iter().zip(q).map(|(x, y)| x * y).sum();
    let s0 = -pq / qq;
    let c2 = ((pp - pq * pq / qq) / qq).max(0.0);
    let prim = |s: f64| {
        let r = (s * s + c2).sqrt();
        if c2 == 0.0 {
            0.5 * s * s.abs()
        } else {
            0.5 * (s * r + c2 * (s / c2.sqrt()).asinh())
        }
    };
    qq.sqrt() * (prim(len - s0) - prim(-s0))
}

/// `∫_0^1 |g(s) − h(s)| ds`, exact up to rounding.
pub fn l1_distance(g: &CadlagPath, h: &CadlagPath) -> Result<f64> {
    let diff = CadlagPath::lin_comb(1.0, g, -1.0, h)?;
    let jt: Vec<f64> = diff.jumps().iter().map(|(t, _)| *t).collect();
    let events = merge_grids(diff.grid(), &jt);
    Ok(events
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let len = w[1] - w[0];
            let p = diff.eval(w[0]);
            let q: Vec<f64> = diff
                .eval_left(w[1])
                .iter()
                .zip(&p)
                .map(|(e, s)| (e - s) / len)
                .collect();
            affine_norm_integral(&p, &q, len)
        })
        .sum())
}

/// `ρ_*(g, h)`.
pub fn rho_star(g: &CadlagPath, h: &CadlagPath) -> Result<f64> {
    let l1 = l1_distance(g, h)?;
    let end: f64 = g
        .eval(1.0)
        .iter()
        .zip(h.eval(1.0))
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(l1 + end)
}
