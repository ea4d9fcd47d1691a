//! Càdlàg paths of bounded variation made of linear pieces and jumps.
//!
//! A path is `h(t) = ∫_0^t ḣ_a + Σ_{τ ≤ t} J_τ` with a piecewise-constant
//! derivative on a grid `0 = t_0 < … < t_m = 1` and finitely many jumps.
//! `h(0-) := 0`, so a jump at time 0 encodes `h(0)`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cgf::CgfModel;
use crate::error::{check_dim, Error, Result};
use crate::extreal::ExtReal;
use crate::kernel::Kernel;
use crate::quad;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PathRepr", into = "PathRepr")]
pub struct CadlagPath {
    dim: usize,
    grid: Vec<f64>,
    slopes: Vec<Vec<f64>>,
    jumps: Vec<(f64, Vec<f64>)>,
    /// `h_a(t_i)` at the grid points.
    knots: Vec<Vec<f64>>,
    /// running sums of the jumps, `cum[k] = Σ_{j ≤ k} J_j`.
    cum: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct PathRepr {
    dim: usize,
    grid: Vec<f64>,
    slopes: Vec<Vec<f64>>,
    jumps: Vec<(f64, Vec<f64>)>,
}

impl TryFrom<PathRepr> for CadlagPath {
    type Error = Error;
    fn try_from(r: PathRepr) -> Result<Self> {
        CadlagPath::new(r.dim, r.grid, r.slopes, r.jumps)
    }
}

impl From<CadlagPath> for PathRepr {
    fn from(p: CadlagPath) -> Self {
        PathRepr {
            dim: p.dim,
            grid: p.grid,
            slopes: p.slopes,
            jumps: p.jumps,
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sorted union of two grids on `[0, 1]`.
pub(crate) fn merge_grids(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut g: Vec<f64> = a.iter().chain(b).copied().collect();
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

impl CadlagPath {
    /// Builds a path and brings it to canonical form: adjacent equal
    /// slopes merged, jumps at equal times added, zero jumps dropped.
    pub fn new(
        dim: usize,
        grid: Vec<f64>,
        slopes: Vec<Vec<f64>>,
        jumps: Vec<(f64, Vec<f64>)>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("path dimension must be positive".into()));
        }
        if grid.len() < 2 || grid[0] != 0.0 || *grid.last().unwrap() != 1.0 {
            return Err(Error::InvalidParameter("grid must run from 0 to 1".into()));
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("grid must increase strictly".into()));
        }
        if slopes.len() != grid.len() - 1 {
            return Err(Error::InvalidParameter(format!(
                "{} slopes for {} grid intervals",
                slopes.len(),
                grid.len() - 1
            )));
        }
        for s in &slopes {
            check_dim(dim, s.len())?;
            if s.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParameter("slopes must be finite".into()));
            }
        }
        let mut js = jumps;
        for (t, j) in &js {
            check_dim(dim, j.len())?;
            if !(0.0..=1.0).contains(t) || j.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParameter(format!("bad jump at t = {t}")));
            }
        }
        js.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, Vec<f64>)> = Vec::with_capacity(js.len());
        for (t, j) in js {
            match merged.last_mut() {
                Some((s, v)) if *s == t => axpy(1.0, &j, v),
                _ => merged.push((t, j)),
            }
        }
        merged.retain(|(_, j)| j.iter().any(|&x| x != 0.0));

        let mut g = vec![grid[0]];
        let mut s: Vec<Vec<f64>> = Vec::with_capacity(slopes.len());
        for (i, sl) in slopes.into_iter().enumerate() {
            if s.last() == Some(&sl) {
                *g.last_mut().unwrap() = grid[i + 1];
            } else {
                g.push(grid[i + 1]);
                s.push(sl);
            }
        }
        Ok(Self::assemble(dim, g, s, merged))
    }

    fn assemble(dim: usize, grid: Vec<f64>, slopes: Vec<Vec<f64>>, jumps: Vec<(f64, Vec<f64>)>) -> Self {
        let mut knots = Vec::with_capacity(grid.len());
        let mut acc = vec![0.0; dim];
        knots.push(acc.clone());
        for (i, s) in slopes.iter().enumerate() {
            axpy(grid[i + 1] - grid[i], s, &mut acc);
            knots.push(acc.clone());
        }
        let mut cum = Vec::with_capacity(jumps.len());
        let mut acc = vec![0.0; dim];
        for (_, j) in &jumps {
            axpy(1.0, j, &mut acc);
            cum.push(acc.clone());
        }
        Self {
            dim,
            grid,
            slopes,
            jumps,
            knots,
            cum,
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self::assemble(dim, vec![0.0, 1.0], vec![vec![0.0; dim]], Vec::new())
    }

    /// `t ↦ c t`.
    pub fn linear(c: Vec<f64>) -> Self {
        Self::assemble(c.len(), vec![0.0, 1.0], vec![c], Vec::new())
    }

    /// A path with no absolutely continuous part.
    pub fn pure_jump(dim: usize, jumps: Vec<(f64, Vec<f64>)>) -> Result<Self> {
        Self::new(dim, vec![0.0, 1.0], vec![vec![0.0; dim]], jumps)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn slopes(&self) -> &[Vec<f64>] {
        &self.slopes
    }

    pub fn jumps(&self) -> &[(f64, Vec<f64>)] {
        &self.jumps
    }

    fn cell(&self, t: f64) -> usize {
        let k = self.grid.partition_point(|&g| g <= t);
        k.clamp(1, self.grid.len() - 1) - 1
    }

    /// Absolutely continuous part at `t`.
    pub fn eval_ac(&self, t: f64) -> Vec<f64> {
        let t = t.clamp(0.0, 1.0);
        let i = self.cell(t);
        let mut v = self.knots[i].clone();
        axpy(t - self.grid[i], &self.slopes[i], &mut v);
        v
    }

    fn jump_sum(&self, count: usize, out: &mut [f64]) {
        if count > 0 {
            axpy(1.0, &self.cum[count - 1], out);
        }
    }

    /// `h(t)`.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut v = self.eval_ac(t);
        let k = self.jumps.partition_point(|(s, _)| *s <= t);
        self.jump_sum(k, &mut v);
        v
    }

    /// `h(t-)`, with `h(0-) = 0`.
    pub fn eval_left(&self, t: f64) -> Vec<f64> {
        if t <= 0.0 {
            return vec![0.0; self.dim];
        }
        let mut v = self.eval_ac(t);
        let k = self.jumps.partition_point(|(s, _)| *s < t);
        self.jump_sum(k, &mut v);
        v
    }

    /// Total variation `Σ |ḣ| len + Σ |J|`.
    pub fn var(&self) -> f64 {
        let ac: f64 = self
            .slopes
            .iter()
            .zip(self.grid.windows(2))
            .map(|(s, w)| norm(s) * (w[1] - w[0]))
            .sum();
        ac + self.jumps.iter().map(|(_, j)| norm(j)).sum::<f64>()
    }

    /// `(h_a, h_s)`.
    pub fn lebesgue_split(&self) -> (CadlagPath, CadlagPath) {
        let ac = Self::assemble(self.dim, self.grid.clone(), self.slopes.clone(), Vec::new());
        let js = Self::assemble(
            self.dim,
            vec![0.0, 1.0],
            vec![vec![0.0; self.dim]],
            self.jumps.clone(),
        );
        (ac, js)
    }

    /// Directional decomposition of the singular part.
    pub fn directional(&self) -> SphericalMeasure {
        let mut atoms: Vec<(Vec<f64>, f64)> = Vec::new();
        for (_, j) in &self.jumps {
            let m = norm(j);
            let dir: Vec<f64> = j.iter().map(|x| x / m).collect();
            match atoms
                .iter_mut()
                .find(|(d, _)| d.iter().zip(&dir).all(|(a, b)| (a - b).abs() <= 1e-12))
            {
                Some((_, mass)) => *mass += m,
                None => atoms.push((dir, m)),
            }
        }
        SphericalMeasure { atoms }
    }

    /// `I_D(h) = Σ len · I(ḣ) + Σ_atoms I_∞(ℓ) · mass`.
    pub fn i_d(&self, model: &CgfModel) -> Result<ExtReal> {
        check_dim(model.dim(), self.dim)?;
        let mut total = ExtReal::ZERO;
        for (s, w) in self.slopes.iter().zip(self.grid.windows(2)) {
            total = total + model.rate(s)?.scale(w[1] - w[0]);
            if total == ExtReal::PosInf {
                return Ok(total);
            }
        }
        for (dir, mass) in &self.directional().atoms {
            total = total + model.recession(dir)?.scale(*mass);
        }
        Ok(total)
    }

    /// The partition form `∫ I((h^t)')` where `h^t` interpolates `h`
    /// linearly between the points `t ∪ {0, 1}`, starting from
    /// `h^t(0) = 0`.
    pub fn i_d_partition(&self, model: &CgfModel, points: &[f64]) -> Result<ExtReal> {
        check_dim(model.dim(), self.dim)?;
        let mut p: Vec<f64> = points.iter().copied().filter(|&t| t > 0.0 && t <= 1.0).collect();
        p.push(1.0);
        let p = merge_grids(&[0.0], &p);
        let mut total = ExtReal::ZERO;
        let mut prev = vec![0.0; self.dim];
        for w in p.windows(2) {
            let cur = self.eval(w[1]);
            let len = w[1] - w[0];
            let slope: Vec<f64> = cur.iter().zip(&prev).map(|(a, b)| (a - b) / len).collect();
            total = total + model.rate(&slope)?.scale(len);
            prev = cur;
        }
        Ok(total)
    }

    /// Nested partitions for [`Self::i_d_partition`]: the grid, the jump
    /// times, the dyadic points `j 2^{-k}` and, left of every jump time
    /// `τ`, the points `τ - 8^{-i}` for `i = 1..=k`.
    pub fn refinement_partition(&self, k: u32) -> Vec<f64> {
        let mut pts: Vec<f64> = self.grid.clone();
        let n = 1u64 << k;
        pts.extend((1..=n).map(|j| j as f64 / n as f64));
        for (tau, _) in &self.jumps {
            pts.push(*tau);
            for i in 1..=k {
                let d = 0.125f64.powi(i as i32);
                pts.push(if *tau == 0.0 { d } else { tau - d });
            }
        }
        let pts: Vec<f64> = pts.into_iter().filter(|&t| t > 0.0 && t <= 1.0).collect();
        merge_grids(&[], &pts)
    }

    /// `∫ f dh`, exact for piecewise-linear `f`.
    pub fn pair(&self, kernel: &Kernel) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (s, w) in self.slopes.iter().zip(self.grid.windows(2)) {
            let mass = kernel_mass(kernel, w[0], w[1]);
            axpy(mass, s, &mut out);
        }
        for (t, j) in &self.jumps {
            axpy(kernel.eval(*t), j, &mut out);
        }
        out
    }

    /// `∫ φ dh` for a smooth scalar `φ`, by Gauss–Legendre on each cell.
    pub fn integrate_against<F: Fn(f64) -> f64>(&self, phi: F) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        let g = |t: f64, o: &mut [f64]| {
            o[0] = phi(t);
            Ok(())
        };
        let mut buf = [0.0];
        for (s, w) in self.slopes.iter().zip(self.grid.windows(2)) {
            quad::fixed(&g, w[0], w[1], &mut buf).expect("finite integrand");
            axpy(buf[0], s, &mut out);
        }
        for (t, j) in &self.jumps {
            axpy(phi(*t), j, &mut out);
        }
        out
    }

    /// `sup_{0 ≤ t ≤ 1} h(t)·ℓ`, including left limits at jump times.
    pub fn sup_functional(&self, l: &[f64]) -> Result<f64> {
        check_dim(self.dim, l.len())?;
        if (norm(l) - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter("direction must be a unit vector".into()));
        }
        let mut best = f64::NEG_INFINITY;
        for &t in &self.grid {
            best = best.max(dot(&self.eval(t), l));
            if t > 0.0 {
                best = best.max(dot(&self.eval_left(t), l));
            }
        }
        for (t, _) in &self.jumps {
            best = best.max(dot(&self.eval(*t), l));
            if *t > 0.0 {
                best = best.max(dot(&self.eval_left(*t), l));
            }
        }
        Ok(best)
    }

    /// `a g + b h` on the merged grid.
    pub fn lin_comb(a: f64, g: &CadlagPath, b: f64, h: &CadlagPath) -> Result<CadlagPath> {
        check_dim(g.dim, h.dim)?;
        let grid = merge_grids(&g.grid, &h.grid);
        let slopes = grid
            .windows(2)
            .map(|w| {
                let m = 0.5 * (w[0] + w[1]);
                let mut s = vec![0.0; g.dim];
                axpy(a, &g.slopes[g.cell(m)], &mut s);
                axpy(b, &h.slopes[h.cell(m)], &mut s);
                s
            })
            .collect();
        let jumps = g
            .jumps
            .iter()
            .map(|(t, j)| (*t, j.iter().map(|x| a * x).collect()))
            .chain(h.jumps.iter().map(|(t, j)| (*t, j.iter().map(|x| b * x).collect())))
            .collect();
        CadlagPath::new(g.dim, grid, slopes, jumps)
    }

    /// `t ↦ h(t) 1_{(0,1]}(t)` is the same path with the jump at 0
    /// absorbed; the value at 0 differs only through `h(0)`.
    pub fn value_at_zero(&self) -> Vec<f64> {
        self.eval(0.0)
    }

    /// Line-oriented text form.
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

/// `∫_a^b f` for a piecewise-linear kernel.
pub(crate) fn kernel_mass(kernel: &Kernel, a: f64, b: f64) -> f64 {
    let mut acc = 0.0;
    let mut lo = a;
    for &bp in kernel.breakpoints().iter().filter(|&&bp| bp > a && bp < b) {
        acc += 0.5 * (bp - lo) * (kernel.eval(lo) + kernel.eval(bp));
        lo = bp;
    }
    acc + 0.5 * (b - lo) * (kernel.eval(lo) + kernel.eval(b))
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

impl fmt::Display for CadlagPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "grid: {}", fmt_vec(&self.grid))?;
        for (i, s) in self.slopes.iter().enumerate() {
            writeln!(f, "slope {i}: {}", fmt_vec(s))?;
        }
        for (t, j) in &self.jumps {
            writeln!(f, "jump {t}: {}", fmt_vec(j))?;
        }
        Ok(())
    }
}

fn parse_nums(s: &str) -> Result<Vec<f64>> {
    s.split_whitespace()
        .map(|x| x.parse::<f64>().map_err(|_| Error::Parse(format!("bad number '{x}'"))))
        .collect()
}

impl FromStr for CadlagPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut grid = None;
        let mut slopes: Vec<(usize, Vec<f64>)> = Vec::new();
        let mut jumps = Vec::new();
        for line in s.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (head, body) = line
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("missing ':' in '{line}'")))?;
            let mut words = head.split_whitespace();
            match (words.next(), words.next(), words.next()) {
                (Some("grid"), None, _) => grid = Some(parse_nums(body)?),
                (Some("slope"), Some(i), None) => {
                    let i = i
                        .parse::<usize>()
                        .map_err(|_| Error::Parse(format!("bad slope index '{i}'")))?;
                    slopes.push((i, parse_nums(body)?));
                }
                (Some("jump"), Some(t), None) => {
                    let t = t
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad jump time '{t}'")))?;
                    jumps.push((t, parse_nums(body)?));
                }
                _ => return Err(Error::Parse(format!("unrecognised line '{line}'"))),
            }
        }
        let grid = grid.ok_or_else(|| Error::Parse("missing 'grid:' line".into()))?;
        slopes.sort_by_key(|(i, _)| *i);
        if slopes.iter().enumerate().any(|(k, (i, _))| k != *i) {
            return Err(Error::Parse("slope indices must be 0, 1, 2, ...".into()));
        }
        let dim = slopes
            .first()
            .map(|(_, s)| s.len())
            .or_else(|| jumps.first().map(|(_, j): &(f64, Vec<f64>)| j.len()))
            .ok_or_else(|| Error::Parse("path has no slopes".into()))?;
        CadlagPath::new(dim, grid, slopes.into_iter().map(|(_, s)| s).collect(), jumps)
    }
}

/// A finite atomic measure on the unit sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphericalMeasure {
    pub atoms: Vec<(Vec<f64>, f64)>,
}

impl SphericalMeasure {
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|(_, m)| m).sum()
    }

    /// Mass of the atom at `dir`, zero if absent.
    pub fn mass_at(&self, dir: &[f64]) -> f64 {
        self.atoms
            .iter()
            .filter(|(d, _)| d.iter().zip(dir).all(|(a, b)| (a - b).abs() <= 1e-12))
            .map(|(_, m)| m)
            .sum()
    }
}

/// Reproducible random path with at most `max_pieces` linear pieces and
/// `max_jumps` jumps. Slope and jump components lie in `[-1, 1]`, so
/// `Var ≤ √d (1 + max_jumps)`.
pub fn random_path(dim: usize, max_pieces: usize, max_jumps: usize, seed: u64) -> CadlagPath {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pieces = rng.random_range(1..=max_pieces.max(1));
    let mut inner: Vec<f64> = (1..pieces).map(|_| rng.random::<f64>()).collect();
    inner.retain(|&t| t > 0.0 && t < 1.0);
    let grid = merge_grids(&[0.0, 1.0], &inner);
    let slopes = (0..grid.len() - 1)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect();
    let nj = rng.random_range(0..=max_jumps);
    let jumps = (0..nj)
        .map(|_| {
            let u: f64 = rng.random();
            // occasionally put jumps at the ends or on grid points
            let t = match rng.random_range(0..10) {
                0 => 0.0,
                1 => 1.0,
                2 => grid[rng.random_range(0..grid.len())],
                _ => u,
            };
            (t, (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect())
        })
        .collect();
    CadlagPath::new(dim, grid, slopes, jumps).expect("generator output is valid")
}

/// Upper bound on the variation of [`random_path`] output.
pub fn random_path_var_bound(dim: usize, max_jumps: usize) -> f64 {
    (dim as f64).sqrt() * (1.0 + max_jumps as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jumps_third() -> CadlagPath {
        CadlagPath::pure_jump(1, vec![(1.0 / 3.0, vec![1.0]), (2.0 / 3.0, vec![-1.0])]).unwrap()
    }

    fn line_plus_jump() -> CadlagPath {
        CadlagPath::new(1, vec![0.0, 1.0], vec![vec![1.0]], vec![(0.5, vec![2.0])]).unwrap()
    }

    fn parabola(m: usize) -> CadlagPath {
        // h(t) = 3t²/2 with exact cell-average slopes
        let grid: Vec<f64> = (0..=m).map(|i| i as f64 / m as f64).collect();
        let slopes = grid.windows(2).map(|w| vec![1.5 * (w[0] + w[1])]).collect();
        CadlagPath::new(1, grid, slopes, vec![]).unwrap()
    }

    #[test]
    fn variation_examples() {
        assert_eq!(jumps_third().var(), 2.0);
        assert_eq!(CadlagPath::linear(vec![-2.5]).var(), 2.5);
        assert_eq!(line_plus_jump().var(), 3.0);
    }

    #[test]
    fn lebesgue_split_examples() {
        let (ac, js) = jumps_third().lebesgue_split();
        assert_eq!(ac, CadlagPath::zero(1));
        assert_eq!(js, jumps_third());
        let (ac, js) = line_plus_jump().lebesgue_split();
        assert_eq!(ac, CadlagPath::linear(vec![1.0]));
        assert_eq!(js.jumps(), &[(0.5, vec![2.0])]);
        let (ac, js) = CadlagPath::zero(2).lebesgue_split();
        assert_eq!((ac.var(), js.var()), (0.0, 0.0));
    }

    #[test]
    fn directional_examples() {
        let s = jumps_third().directional();
        assert_eq!(s.mass_at(&[1.0]), 1.0);
        assert_eq!(s.mass_at(&[-1.0]), 1.0);
        let p = CadlagPath::new(1, vec![0.0, 1.0], vec![vec![1.0]], vec![(0.5, vec![-2.0])]).unwrap();
        assert_eq!(p.directional().atoms, vec![(vec![-1.0], 2.0)]);
        let p = CadlagPath::pure_jump(2, vec![(0.5, vec![3.0, 4.0])]).unwrap();
        let a = &p.directional().atoms[0];
        assert!((a.0[0] - 0.6).abs() < 1e-15 && (a.0[1] - 0.8).abs() < 1e-15);
        assert_eq!(a.1, 5.0);
    }

    #[test]
    fn action_examples() {
        let g = CadlagPath::zero(1);
        let gauss = CgfModel::std_gaussian();
        let v = parabola(200).i_d(&gauss).unwrap().to_f64();
        assert!((v - 1.5).abs() < 1e-4, "{v}");
        assert_eq!(line_plus_jump().i_d(&gauss).unwrap(), ExtReal::PosInf);
        let p = CadlagPath::pure_jump(1, vec![(0.5, vec![1.0])]).unwrap();
        assert_eq!(p.i_d(&CgfModel::CenteredExp).unwrap(), ExtReal::Finite(1.0));
        assert_eq!(g.i_d(&gauss).unwrap(), ExtReal::ZERO);
    }

    #[test]
    fn pairing_examples() {
        let t = Kernel::affine(0.0, 1.0).unwrap();
        assert!((parabola(64).pair(&t)[0] - 1.0).abs() < 1e-4);
        let one = Kernel::constant(1.0).unwrap();
        let p = random_path(2, 5, 3, 9);
        let (a, b) = (p.pair(&one), p.eval(1.0));
        assert!((a[0] - b[0]).abs() < 1e-14 && (a[1] - b[1]).abs() < 1e-14);
        let j = CadlagPath::pure_jump(1, vec![(0.5, vec![1.0])]).unwrap();
        assert_eq!(j.pair(&t), vec![0.5]);
    }

    #[test]
    fn pairing_is_exact_for_a_piecewise_kernel() {
        // ∫ f dh with h = 3t²/2 on a fine grid and f a hat function
        let f: Kernel = "pwl:0:0,0.3:1,1:0".parse().unwrap();
        let p = parabola(10);
        let exact = quad::adaptive_scalar(|t| {
            let i = ((t * 10.0).floor() as usize).min(9);
            f.eval(t) * p.slopes()[i][0]
        }, 0.0, 1.0, 1e-15)
        .unwrap();
        assert!((p.pair(&f)[0] - exact).abs() < 1e-6);
        let mut direct = 0.0;
        for i in 0..10 {
            let (a, b) = (i as f64 / 10.0, (i + 1) as f64 / 10.0);
            direct += p.slopes()[i][0]
                * quad::adaptive_scalar(|t| f.eval(t), a, b, 1e-16).unwrap();
        }
        assert!((p.pair(&f)[0] - direct).abs() < 1e-14);
    }

    #[test]
    fn sup_functional_examples() {
        assert_eq!(CadlagPath::linear(vec![1.0]).sup_functional(&[1.0]).unwrap(), 1.0);
        assert_eq!(jumps_third().sup_functional(&[-1.0]).unwrap(), 0.0);
        let p = CadlagPath::new(2, vec![0.0, 1.0], vec![vec![1.0, -1.0]], vec![(0.0, vec![0.0, 1.0])])
            .unwrap();
        assert_eq!(p.eval(0.5), vec![0.5, 0.5]);
        assert_eq!(p.sup_functional(&[1.0, 0.0]).unwrap(), 1.0);
        // a downward jump: the supremum is a left limit
        let q = CadlagPath::new(1, vec![0.0, 1.0], vec![vec![1.0]], vec![(0.5, vec![-1.0])]).unwrap();
        assert_eq!(q.sup_functional(&[1.0]).unwrap(), 0.5);
    }

    #[test]
    fn random_paths_are_canonical_and_reproducible() {
        for seed in [1, 2, 3] {
            let p = random_path(2, 6, 4, seed);
            assert_eq!(p, random_path(2, 6, 4, seed));
            assert!(p.var() <= random_path_var_bound(2, 4));
            assert!(p.slopes().windows(2).all(|w| w[0] != w[1]));
            assert!(p.jumps().windows(2).all(|w| w[0].0 < w[1].0));
            // partition sum of |increments| over a fine partition that
            // includes the grid and points just left of each jump
            let pts = p.refinement_partition(20);
            let mut prev = vec![0.0; 2];
            let mut var = 0.0;
            for &t in std::iter::once(&0.0).chain(&pts) {
                let cur = p.eval(t);
                var += norm(&[cur[0] - prev[0], cur[1] - prev[1]]);
                prev = cur;
            }
            assert!((var - p.var()).abs() < 1e-9, "{var} vs {}", p.var());
        }
    }

    #[test]
    fn canonicalization() {
        let p = CadlagPath::new(
            1,
            vec![0.0, 0.5, 1.0],
            vec![vec![1.0], vec![1.0]],
            vec![(0.5, vec![1.0]), (0.5, vec![-1.0]), (0.2, vec![0.0])],
        )
        .unwrap();
        assert_eq!(p, CadlagPath::linear(vec![1.0]));
        assert!(CadlagPath::new(1, vec![0.0, 0.5], vec![vec![1.0]], vec![]).is_err());
        assert!(CadlagPath::new(1, vec![0.0, 1.0], vec![vec![1.0]], vec![(1.5, vec![1.0])]).is_err());
    }

    #[test]
    fn text_and_json_round_trip() {
        for seed in 0..20 {
            let p = random_path(1 + (seed as usize % 3), 7, 4, seed);
            let q: CadlagPath = p.to_text().parse().unwrap();
            assert_eq!(p, q);
            let j = serde_json::to_string(&p).unwrap();
            let r: CadlagPath = serde_json::from_str(&j).unwrap();
            assert_eq!(p, r);
        }
        assert!("grid: 0 1\nslope 1: 2\n".parse::<CadlagPath>().is_err());
        assert!("slope 0: 2\n".parse::<CadlagPath>().is_err());
    }

    #[test]
    fn eval_and_left_limits() {
        let p = line_plus_jump();
        assert_eq!(p.eval(0.5), vec![2.5]);
        assert_eq!(p.eval_left(0.5), vec![0.5]);
        assert_eq!(p.eval(1.0), vec![3.0]);
        let z = CadlagPath::pure_jump(1, vec![(0.0, vec![1.0])]).unwrap();
        assert_eq!(z.eval(0.0), vec![1.0]);
        assert_eq!(z.eval_left(0.0), vec![0.0]);
    }
}
