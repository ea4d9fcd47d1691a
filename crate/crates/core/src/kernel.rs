//! Piecewise-linear weight functions on `[0, 1]`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A maximizer (or minimizer) component of a kernel: an isolated point or
/// a plateau.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ExtremalSet {
    Point(f64),
    Interval(f64, f64),
}

impl ExtremalSet {
    pub fn start(&self) -> f64 {
        match *self {
            ExtremalSet::Point(t) | ExtremalSet::Interval(t, _) => t,
        }
    }
}

/// A non-zero continuous piecewise-linear function `f` on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelRepr", into = "KernelRepr")]
pub struct Kernel {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct KernelRepr {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<KernelRepr> for Kernel {
    type Error = Error;
    fn try_from(r: KernelRepr) -> Result<Self> {
        Kernel::new(r.breakpoints, r.values)
    }
}

impl From<Kernel> for KernelRepr {
    fn from(k: Kernel) -> Self {
        KernelRepr {
            breakpoints: k.breakpoints,
            values: k.values,
        }
    }
}

impl Kernel {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 || breakpoints.len() != values.len() {
            return Err(Error::InvalidParameter(
                "kernel needs at least two breakpoints and one value per breakpoint".into(),
            ));
        }
        if breakpoints[0] != 0.0 || *breakpoints.last().unwrap() != 1.0 {
            return Err(Error::InvalidParameter("kernel breakpoints must start at 0 and end at 1".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("kernel breakpoints must increase strictly".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("kernel values must be finite".into()));
        }
        if values.iter().all(|&v| v == 0.0) {
            return Err(Error::InvalidParameter("kernel must not vanish identically".into()));
        }
        Ok(Self { breakpoints, values })
    }

    /// `f(t) = a + b t`.
    pub fn affine(a: f64, b: f64) -> Result<Self> {
        Self::new(vec![0.0, 1.0], vec![a, a + b])
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::affine(c, 0.0)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Linear pieces as `(t0, t1, f(t0), f(t1))`.
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        (0..self.breakpoints.len() - 1).map(move |i| {
            (
                self.breakpoints[i],
                self.breakpoints[i + 1],
                self.values[i],
                self.values[i + 1],
            )
        })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        let i = match self.breakpoints.partition_point(|&b| b <= t) {
            0 => 0,
            k if k >= self.breakpoints.len() => self.breakpoints.len() - 2,
            k => k - 1,
        };
        let (t0, t1) = (self.breakpoints[i], self.breakpoints[i + 1]);
        let (v0, v1) = (self.values[i], self.values[i + 1]);
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    /// `max f_+`.
    pub fn max_plus(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, &v| m.max(v))
    }

    /// `max f_-`.
    pub fn max_minus(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, &v| m.max(-v))
    }

    pub fn lipschitz(&self) -> f64 {
        self.pieces()
            .map(|(t0, t1, v0, v1)| ((v1 - v0) / (t1 - t0)).abs())
            .fold(0.0, f64::max)
    }

    /// `∫ f`.
    pub fn m1(&self) -> f64 {
        self.pieces().map(|(t0, t1, a, b)| 0.5 * (t1 - t0) * (a + b)).sum()
    }

    /// `∫ f²`.
    pub fn m2(&self) -> f64 {
        self.pieces()
            .map(|(t0, t1, a, b)| (t1 - t0) * (a * a + a * b + b * b) / 3.0)
            .sum()
    }

    /// `∫_0^t f`.
    pub fn primitive(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        let mut acc = 0.0;
        for (t0, t1, a, _) in self.pieces() {
            if t <= t0 {
                break;
            }
            let s = t.min(t1);
            acc += (s - t0) * (a + 0.5 * (self.eval(s) - a));
        }
        acc
    }

    /// The set where `f` attains `max f`, in increasing time order.
    pub fn argmax(&self) -> Vec<ExtremalSet> {
        let m = self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        extremal_sets(&self.breakpoints, &self.values, m)
    }

    /// The set where `f` attains `min f`, in increasing time order.
    pub fn argmin(&self) -> Vec<ExtremalSet> {
        let m = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        extremal_sets(&self.breakpoints, &self.values, m)
    }

    /// Maximizers of `f_+` (empty when `f ≤ 0`).
    pub fn argmax_plus(&self) -> Vec<ExtremalSet> {
        if self.max_plus() > 0.0 {
            self.argmax()
        } else {
            Vec::new()
        }
    }

    /// Maximizers of `f_-` (empty when `f ≥ 0`).
    pub fn argmax_minus(&self) -> Vec<ExtremalSet> {
        if self.max_minus() > 0.0 {
            self.argmin()
        } else {
            Vec::new()
        }
    }

    /// `t ↦ -f(t)`.
    pub fn negated(&self) -> Self {
        Self {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|v| -v).collect(),
        }
    }
}

fn extremal_sets(ts: &[f64], vs: &[f64], m: f64) -> Vec<ExtremalSet> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < ts.len() {
        if vs[i] == m {
            let mut j = i;
            while j + 1 < ts.len() && vs[j + 1] == m {
                j += 1;
            }
            out.push(if j > i {
                ExtremalSet::Interval(ts[i], ts[j])
            } else {
                ExtremalSet::Point(ts[i])
            });
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

fn num(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("bad number '{s}'")))
}

impl FromStr for Kernel {
    type Err = Error;

    /// `affine:a,b` (f = a + b t), `pwl:t0:v0,t1:v1,...`, `const:c`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("kernel '{s}' lacks a ':'")))?;
        match kind.trim() {
            "affine" => {
                let parts: Vec<&str> = rest.split(',').collect();
                if parts.len() != 2 {
                    return Err(Error::Parse("affine kernel takes two numbers a,b".into()));
                }
                Kernel::affine(num(parts[0])?, num(parts[1])?)
            }
            "const" => Kernel::constant(num(rest)?),
            "pwl" => {
                let mut ts = Vec::new();
                let mut vs = Vec::new();
                for item in rest.split(',') {
                    let (t, v) = item
                        .split_once(':')
                        .ok_or_else(|| Error::Parse(format!("expected t:v, got '{item}'")))?;
                    ts.push(num(t)?);
                    vs.push(num(v)?);
                }
                Kernel::new(ts, vs)
            }
            other => Err(Error::Parse(format!("unknown kernel kind '{other}'"))),
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self
            .breakpoints
            .iter()
            .zip(&self.values)
            .map(|(t, v)| format!("{t}:{v}"))
            .collect();
        write!(f, "pwl:{}", items.join(","))
    }
}
