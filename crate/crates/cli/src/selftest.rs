//! Small invariant suites run by `ldpkit selftest`.

use std::str::FromStr;

use ldpkit::conjugate::DEFAULT_TOL_1D;
use ldpkit::paths::random_path;
use ldpkit::{kernel_rate, metrics, CadlagPath, CgfModel, ExtReal, Kernel};

use crate::table::Table;

const MODELS: [&str; 6] = [
    "gaussian:mu=0.3,sigma=1.5",
    "cexp",
    "rademacher",
    "poisson:rate=2",
    "laplace",
    "synthetic-boundary",
];

#[derive(Default)]
struct Tally {
    passed: usize,
    failed: usize,
}

impl Tally {
    fn check(&mut self, ok: bool) {
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
        }
    }
}

fn close(a: ldpkit::Result<f64>, b: f64, tol: f64) -> bool {
    a.map(|a| (a - b).abs() <= tol).unwrap_or(false)
}

fn examples() -> Tally {
    let mut t = Tally::default();
    let rate = |m: &str, k: &str, x: f64| -> ldpkit::Result<f64> {
        let m = CgfModel::from_str(m)?;
        let k = Kernel::from_str(k)?;
        Ok(kernel_rate::i_f_explicit(&m, &k, &[x], DEFAULT_TOL_1D)?.value.to_f64())
    };
    t.check(close(rate("gaussian:mu=0,sigma=1", "affine:0,1", 1.0), 1.5, 1e-9));
    t.check(close(rate("cexp", "const:1", 0.0), 0.0, 0.0));
    t.check(close(rate("synthetic-boundary", "affine:0,1", 1.0), 0.9, 1e-6));
    let sup = kernel_rate::ef_prime_range(&CgfModel::SyntheticBoundary, &Kernel::affine(0.0, 1.0).unwrap())
        .map(|r| r.1.to_f64());
    t.check(close(sup, 7.0 / 30.0, 1e-8));
    let z = CadlagPath::zero(1);
    let h = CadlagPath::pure_jump(1, vec![(0.5, vec![1.0])]).unwrap();
    t.check(close(metrics::rho_star(&z, &h), 1.5, 1e-12));
    t
}

fn fenchel_young() -> Tally {
    let mut t = Tally::default();
    for spec in MODELS {
        let m = CgfModel::from_str(spec).expect("catalog spec parses");
        for i in 0..21 {
            let u = -2.0 + 0.2 * i as f64;
            let Ok(ku) = m.cgf(&[u]) else { continue };
            for j in 0..21 {
                let v = -3.0 + 0.3 * j as f64;
                let Ok(iv) = m.rate(&[v]) else { continue };
                let lhs = ku + iv;
                t.check(match lhs {
                    ExtReal::Finite(s) => s >= u * v - 1e-9,
                    ExtReal::PosInf => true,
                    ExtReal::NegInf => false,
                });
            }
        }
    }
    t
}

fn metric_axioms() -> Tally {
    let mut t = Tally::default();
    for s in 0..40u64 {
        let d = 1 + (s % 2) as usize;
        let (g, h, k) = (
            random_path(d, 4, 2, 3 * s),
            random_path(d, 4, 2, 3 * s + 1),
            random_path(d, 4, 2, 3 * s + 2),
        );
        for f in [metrics::rho_2, metrics::rho_2_prime, metrics::rho_star] {
            let (gh, hg) = (f(&g, &h).unwrap(), f(&h, &g).unwrap());
            let (hk, gk) = (f(&h, &k).unwrap(), f(&g, &k).unwrap());
            t.check(gh == hg && gh >= 0.0);
            t.check(gk <= gh + hk + 1e-9);
            t.check(f(&g, &g).unwrap() <= 1e-9);
        }
        let r2 = metrics::rho_2(&g, &h).unwrap();
        let r2p = metrics::rho_2_prime(&g, &h).unwrap();
        let d0: f64 = g
            .eval(0.0)
            .iter()
            .zip(h.eval(0.0))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        t.check(r2p <= r2.max(d0) + 1e-9);
        let l1 = metrics::l1_distance(&g, &h).unwrap();
        let df = d as f64;
        t.check(l1 <= 2.0 * df * (h.var() - h.eval(0.0).iter().map(|x| x * x).sum::<f64>().sqrt() + 1.0) * r2 + std::f64::consts::PI * df * r2 * r2 + 1e-9);
        t.check(l1 <= 2.0 * df * (h.var() + 1.0) * r2p + std::f64::consts::PI * df * r2p * r2p + 1e-9);
    }
    t
}

fn variation() -> Tally {
    let mut t = Tally::default();
    for s in 0..200u64 {
        let h = random_path(1 + (s % 3) as usize, 5, 3, 1000 + s);
        let (a, j) = h.lebesgue_split();
        t.check((h.var() - a.var() - j.var()).abs() <= 1e-12 * (1.0 + h.var()));
    }
    t
}

/// Runs every suite; the flag is set when any check failed.
pub fn run() -> (Table, bool) {
    let suites: [(&str, fn() -> Tally); 4] = [
        ("examples", examples),
        ("fenchel_young", fenchel_young),
        ("metric_axioms", metric_axioms),
        ("variation", variation),
    ];
    let mut table = Table::new(&["suite", "passed", "failed"]);
    let mut any = false;
    for (name, f) in suites {
        let r = f();
        any |= r.failed > 0;
        table.push(vec![name.into(), r.passed.into(), r.failed.into()]);
    }
    (table, any)
}
