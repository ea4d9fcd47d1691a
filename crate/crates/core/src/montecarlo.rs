//! Monte Carlo checks of the kernel-weighted-sum LDP.
//!
//! Tail probabilities `P(l·W_n ≥ a)` for `W_n = (1/n) Σ f(k/n) X_k` are
//! estimated by exponential tilting with the time-inhomogeneous schedule
//! `θ_k = λ* f(k/n) l`, where `λ*` solves `d/dλ E_f(λ l) = a`. Samples are
//! split over a fixed number of workers, each with its own ChaCha stream,
//! so the result depends only on `(seed, workers)`.

use std::thread;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::factorial::ln_binomial;

use crate::cgf::CgfModel;
use crate::conjugate::{self, GradInverse};
use crate::error::{check_dim, Error, Result};
use crate::extreal::ExtReal;
use crate::kernel::Kernel;
use crate::kernel_rate::{self, EfOracle};
use crate::paths::CadlagPath;

/// Minimum sample count accepted by the estimators.
pub const MIN_SAMPLES: usize = 100;

/// Events are tested as `l·W ≥ a − EVENT_SLACK`, so lattice-valued sums
/// that land on `a` up to rounding count as hits.
pub const EVENT_SLACK: f64 = 1e-9;

/// Largest `n` for brute-force enumeration in [`exact_tail_oracle`].
pub const MAX_ENUMERATION: usize = 24;

const LAMBDA_TOL: f64 = 1e-12;

/// Tilting used by an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Tilt {
    Plain,
    /// `θ_k = lambda · f(k/n) · l`; `boundary` flags the fallback to the
    /// edge of `D_f` when `a` is beyond the range of `E_f′`.
    Schedule { lambda: f64, boundary: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub n: usize,
    pub samples: usize,
    pub hits: usize,
    pub tilt: Tilt,
    /// Estimate of `log P`.
    pub log_prob: f64,
    /// Standard error of `log_prob` (delta method, `se(P̂)/P̂`).
    pub std_error: f64,
    /// `−log_prob / n`.
    pub rate_estimate: f64,
}

/// Options for [`estimate_tail_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct TailQuery {
    pub n: usize,
    pub level: f64,
    pub direction: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub workers: usize,
    /// `false` gives the plain (untilted) estimator.
    pub tilted: bool,
}

impl TailQuery {
    pub fn new(n: usize, level: f64, direction: Vec<f64>, samples: usize, seed: u64) -> Self {
        Self {
            n,
            level,
            direction,
            samples,
            seed,
            workers: default_workers(),
            tilted: true,
        }
    }
}

/// Available parallelism, at least 1.
pub fn default_workers() -> usize {
    thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn require_sampler(model: &CgfModel) -> Result<()> {
    if model.has_sampler() {
        Ok(())
    } else {
        Err(Error::NoSampler(model.to_string()))
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    Ok(())
}

/// Draws `X_1..X_n` and returns `(W_n, jumps X_k/n)`; the sum is
/// accumulated as `Σ f(k/n)·(X_k/n)` so it matches [`CadlagPath::pair`].
fn draw_walk(model: &CgfModel, kernel: Option<&Kernel>, n: usize, seed: u64) -> Result<(Vec<f64>, Vec<(f64, Vec<f64>)>)> {
    require_sampler(model)?;
    check_n(n)?;
    let d = model.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = vec![0.0; d];
    let mut jumps = Vec::with_capacity(n);
    let mut x = vec![0.0; d];
    for k in 1..=n {
        model.draw(&mut rng, &mut x)?;
        let t = k as f64 / n as f64;
        let j: Vec<f64> = x.iter().map(|v| v / n as f64).collect();
        if let Some(f) = kernel {
            let w = f.eval(t);
            for (s, ji) in sum.iter_mut().zip(&j) {
                *s += w * ji;
            }
        }
        jumps.push((t, j));
    }
    Ok((sum, jumps))
}

/// One draw of `(1/n) Σ f(k/n) X_k`.
pub fn sample_weighted_sum(model: &CgfModel, kernel: &Kernel, n: usize, seed: u64) -> Result<Vec<f64>> {
    Ok(draw_walk(model, Some(kernel), n, seed)?.0)
}

/// The step path `S_{[n·]}/n` driven by the same draws as
/// [`sample_weighted_sum`] with the same seed.
pub fn sample_traj(model: &CgfModel, n: usize, seed: u64) -> Result<CadlagPath> {
    let (_, jumps) = draw_walk(model, None, n, seed)?;
    CadlagPath::pure_jump(model.dim(), jumps)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `λ*` for the projected problem, with the boundary flag.
fn tilt_parameter(model: &CgfModel, kernel: &Kernel, a: f64, l: &[f64]) -> Result<(f64, bool)> {
    let centre = kernel.m1() * dot(l, &model.mean());
    if a < centre - EVENT_SLACK {
        return Err(Error::InvalidParameter(format!(
            "level {a} is below the mean {centre} of the projected sum"
        )));
    }
    if model.dim() > 1 {
        let CgfModel::Gaussian(g) = model else {
            return Err(Error::Unsupported("multivariate tilting needs a Gaussian model".into()));
        };
        let q: f64 = (0..l.len())
            .map(|i| (0..l.len()).map(|j| l[i] * g.cov()[(i, j)] * l[j]).sum::<f64>())
            .sum();
        if q <= 0.0 {
            return Err(Error::Unsupported("projected sum is deterministic".into()));
        }
        return Ok(((a - centre).max(0.0) / (kernel.m2() * q), false));
    }
    let k_l = if l[0] < 0.0 { kernel.negated() } else { kernel.clone() };
    let oracle = EfOracle::new(model, &k_l)?;
    match conjugate::grad_inverse(&oracle, &[a], LAMBDA_TOL)? {
        GradInverse::Interior(u) => Ok((u[0].max(0.0), false)),
        GradInverse::Below => Ok((0.0, false)),
        GradInverse::Above => {
            let (mp, _) = kernel_rate::m_plus_minus(model, &k_l)?;
            match mp {
                ExtReal::Finite(m) => Ok((m * (1.0 - 1e-9), true)),
                _ => Err(Error::OutsideDomain { point: vec![a] }),
            }
        }
    }
}

/// Per-worker sums of the likelihood weights of hits, relative to `shift`.
#[derive(Debug, Clone, Copy)]
struct Partial {
    hits: usize,
    shift: f64,
    s1: f64,
    s2: f64,
}

impl Partial {
    fn empty() -> Self {
        Self {
            hits: 0,
            shift: f64::NEG_INFINITY,
            s1: 0.0,
            s2: 0.0,
        }
    }

    fn push(&mut self, lw: f64) {
        self.hits += 1;
        if lw > self.shift {
            let r = (self.shift - lw).exp();
            self.s1 *= r;
            self.s2 *= r * r;
            self.shift = lw;
        }
        let e = (lw - self.shift).exp();
        self.s1 += e;
        self.s2 += e * e;
    }

    fn merge(mut self, o: Partial) -> Self {
        if o.hits == 0 {
            return self;
        }
        if self.hits == 0 {
            return o;
        }
        let m = self.shift.max(o.shift);
        let (ra, rb) = ((self.shift - m).exp(), (o.shift - m).exp());
        self.s1 = self.s1 * ra + o.s1 * rb;
        self.s2 = self.s2 * ra * ra + o.s2 * rb * rb;
        self.shift = m;
        self.hits += o.hits;
        self
    }
}

fn run_worker(
    model: &CgfModel,
    thetas: &[Option<Vec<f64>>],
    weights: &[f64],
    l: &[f64],
    a: f64,
    log_norm: f64,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Partial> {
    let n = weights.len();
    let d = model.dim();
    let mut part = Partial::empty();
    let mut x = vec![0.0; d];
    let mut w = vec![0.0; d];
    for _ in 0..count {
        w.iter_mut().for_each(|v| *v = 0.0);
        let mut tx = 0.0;
        for k in 0..n {
            model.draw_tilted(thetas[k].as_deref(), rng, &mut x)?;
            if let Some(th) = &thetas[k] {
                tx += dot(th, &x);
            }
            for (wi, xi) in w.iter_mut().zip(&x) {
                *wi += weights[k] * (xi / n as f64);
            }
        }
        if dot(l, &w) >= a - EVENT_SLACK {
            part.push(log_norm - tx);
        }
    }
    Ok(part)
}

/// Tail estimate with default workers and the optimal tilt.
pub fn estimate_tail(
    model: &CgfModel,
    kernel: &Kernel,
    n: usize,
    a: f64,
    l: &[f64],
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    estimate_tail_with(model, kernel, &TailQuery::new(n, a, l.to_vec(), samples, seed))
}

/// Estimate of `log P(l·W_n ≥ a)`.
pub fn estimate_tail_with(model: &CgfModel, kernel: &Kernel, q: &TailQuery) -> Result<McEstimate> {
    require_sampler(model)?;
    check_n(q.n)?;
    check_dim(model.dim(), q.direction.len())?;
    let l = &q.direction;
    if (dot(l, l).sqrt() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter("direction must be a unit vector".into()));
    }
    if q.samples < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!("need at least {MIN_SAMPLES} samples")));
    }
    if q.workers == 0 {
        return Err(Error::InvalidParameter("need at least one worker".into()));
    }
    let n = q.n;
    let weights: Vec<f64> = (1..=n).map(|k| kernel.eval(k as f64 / n as f64)).collect();
    let tilt = if q.tilted {
        let (lambda, boundary) = tilt_parameter(model, kernel, q.level, l)?;
        Tilt::Schedule { lambda, boundary }
    } else {
        Tilt::Plain
    };
    let lambda = match tilt {
        Tilt::Schedule { lambda, .. } => lambda,
        Tilt::Plain => 0.0,
    };
    let thetas: Vec<Option<Vec<f64>>> = weights
        .iter()
        .map(|&f| (lambda * f != 0.0).then(|| l.iter().map(|li| lambda * f * li).collect()))
        .collect();
    let mut log_norm = 0.0;
    for th in thetas.iter().flatten() {
        log_norm += model
            .cgf(th)?
            .finite()
            .ok_or_else(|| Error::OutsideDomain { point: th.clone() })?;
    }

    let (base, extra) = (q.samples / q.workers, q.samples % q.workers);
    let parts: Vec<Result<Partial>> = thread::scope(|s| {
        let handles: Vec<_> = (0..q.workers)
            .map(|w| {
                let count = base + usize::from(w < extra);
                let (thetas, weights) = (&thetas, &weights);
                s.spawn(move || {
                    let mut rng = ChaCha8Rng::seed_from_u64(q.seed);
                    rng.set_stream(w as u64);
                    run_worker(model, thetas, weights, l, q.level, log_norm, count, &mut rng)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    let mut total = Partial::empty();
    for p in parts {
        total = total.merge(p?);
    }

    let m = q.samples as f64;
    let (log_prob, std_error) = if total.hits == 0 {
        (f64::NEG_INFINITY, f64::INFINITY)
    } else {
        let mean = total.s1 / m;
        let second = total.s2 / m;
        let var = ((second - mean * mean) / (m - 1.0)).max(0.0);
        (total.shift + mean.ln(), var.sqrt() / mean)
    };
    Ok(McEstimate {
        n,
        samples: q.samples,
        hits: total.hits,
        tilt,
        log_prob,
        std_error,
        rate_estimate: -log_prob / n as f64,
    })
}

/// `log P(Z ≥ z)` for a standard normal `Z`.
pub fn log_normal_tail(z: f64) -> f64 {
    let p = 0.5 * erfc(z / std::f64::consts::SQRT_2);
    if p > 1e-300 {
        return p.ln();
    }
    // asymptotic series for the Mills ratio
    let z2 = z * z;
    let series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
    -0.5 * z2 - z.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() + series.ln()
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Exact `log P(W_n ≥ a)` for one-dimensional Gaussian increments, or
/// Rademacher increments with a constant kernel (binomial sum) or
/// `n ≤ MAX_ENUMERATION` (enumeration of sign patterns).
pub fn exact_tail_oracle(model: &CgfModel, kernel: &Kernel, n: usize, a: f64) -> Result<f64> {
    check_n(n)?;
    let nf = n as f64;
    let weights: Vec<f64> = (1..=n).map(|k| kernel.eval(k as f64 / nf)).collect();
    match model {
        CgfModel::Gaussian(g) if g.dim() == 1 => {
            let mean = g.mean()[0] * weights.iter().sum::<f64>() / nf;
            let var = g.cov()[(0, 0)] * weights.iter().map(|w| w * w).sum::<f64>() / (nf * nf);
            if var == 0.0 {
                return Ok(if mean >= a { 0.0 } else { f64::NEG_INFINITY });
            }
            Ok(log_normal_tail((a - mean) / var.sqrt()))
        }
        CgfModel::Rademacher => {
            let c = weights[0];
            if weights.iter().all(|&w| w == c) {
                let terms: Vec<f64> = (0..=n)
                    .filter(|&k| c * (2.0 * k as f64 - nf) / nf >= a - EVENT_SLACK)
                    .map(|k| ln_binomial(n as u64, k as u64) - nf * std::f64::consts::LN_2)
                    .collect();
                return Ok(log_sum_exp(&terms));
            }
            if n > MAX_ENUMERATION {
                return Err(Error::Unsupported(format!(
                    "enumeration is limited to n ≤ {MAX_ENUMERATION} for non-constant kernels"
                )));
            }
            let hits = (0u32..1 << n)
                .filter(|mask| {
                    let s: f64 = weights
                        .iter()
                        .enumerate()
                        .map(|(k, w)| if mask >> k & 1 == 1 { w / nf } else { -w / nf })
                        .sum();
                    s >= a - EVENT_SLACK
                })
                .count();
            Ok((hits as f64).ln() - nf * std::f64::consts::LN_2)
        }
        _ => Err(Error::Unsupported(format!("no exact tail oracle for {model}"))),
    }
}

/// One line of an empirical rate table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    pub a: f64,
    pub rate_estimate: f64,
    /// Standard error of `rate_estimate`, i.e. the log-scale error over `n`.
    pub std_error: f64,
    pub i_f: f64,
    pub exact_rate: Option<f64>,
}

/// Tail estimates over `levels × n_list` with `I_f(a)` and, where an exact
/// oracle exists, the exact finite-`n` rate.
pub fn empirical_rate_curve(
    model: &CgfModel,
    kernel: &Kernel,
    levels: &[f64],
    n_list: &[usize],
    samples: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<RateRow>> {
    if model.dim() != 1 {
        return Err(Error::Unsupported("rate curves are one-dimensional".into()));
    }
    let mut rows = Vec::with_capacity(levels.len() * n_list.len());
    for &a in levels {
        let i_f = kernel_rate::i_f_conjugate(model, kernel, &[a], conjugate::DEFAULT_TOL_1D)?
            .value
            .to_f64();
        for &n in n_list {
            let row_seed = seed.wrapping_add((rows.len() as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let q = TailQuery {
                workers,
                ..TailQuery::new(n, a, vec![1.0], samples, row_seed)
            };
            let est = estimate_tail_with(model, kernel, &q)?;
            let exact_rate = exact_tail_oracle(model, kernel, n, a).ok().map(|lp| -lp / n as f64);
            rows.push(RateRow {
                n,
                a,
                rate_estimate: est.rate_estimate,
                std_error: est.std_error / n as f64,
                i_f,
                exact_rate,
            });
        }
    }
    Ok(rows)
}
