//! Acceptance checks. Each test prints one `criterion N: PASS|FAIL` line.

use std::time::Instant;

use ldpkit::cgf::Gaussian;
use ldpkit::kernel_rate::{ef_prime_range, i_f_conjugate, i_f_explicit, minimizer, Branch};
use ldpkit::metrics::{l1_distance, rho_2, rho_2_prime, rho_star};
use ldpkit::montecarlo::{estimate_tail_with, exact_tail_oracle, TailQuery};
use ldpkit::paths::random_path;
use ldpkit::variational::variational_rate;
use ldpkit::{CadlagPath, CgfModel, ExtReal, Kernel};

const TOL: f64 = 1e-10;

fn report(n: u32, ok: bool, detail: String) {
    println!("criterion {n}: {} ({detail})", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n} failed: {detail}");
}

fn linspace(a: f64, b: f64, k: usize) -> Vec<f64> {
    (0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect()
}

fn f_t() -> Kernel {
    Kernel::affine(0.0, 1.0).unwrap()
}

fn one() -> Kernel {
    Kernel::constant(1.0).unwrap()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn criterion_1_gaussian_closed_form() {
    let m = CgfModel::std_gaussian();
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for x in linspace(-3.0, 3.0, 50) {
        let want = 1.5 * x * x;
        let c = i_f_conjugate(&m, &f_t(), &[x], TOL).unwrap().value.to_f64();
        let e = i_f_explicit(&m, &f_t(), &[x], TOL).unwrap().value.to_f64();
        worst = worst.max((c - want).abs()).max((e - want).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    report(1, worst <= 1e-6 && secs < 1.0, format!("max error {worst:.2e}, {secs:.3} s"));
}

#[test]
fn criterion_2_constant_kernel_reduces_to_increment_rate() {
    let cases = [
        (CgfModel::std_gaussian(), linspace(-3.0, 3.0, 50)),
        (CgfModel::CenteredExp, linspace(-0.95, 4.0, 50)),
        (CgfModel::Rademacher, linspace(-0.98, 0.98, 50)),
    ];
    let mut worst: f64 = 0.0;
    for (m, xs) in &cases {
        for &x in xs {
            let want = m.rate(&[x]).unwrap().to_f64();
            let c = i_f_conjugate(m, &one(), &[x], TOL).unwrap().value.to_f64();
            let e = i_f_explicit(m, &one(), &[x], TOL).unwrap().value.to_f64();
            worst = worst.max((c - want).abs()).max((e - want).abs());
        }
    }
    report(2, worst <= 1e-8, format!("max error {worst:.2e}"));
}

#[test]
fn criterion_3_singular_branch() {
    let m = CgfModel::SyntheticBoundary;
    let sup = ef_prime_range(&m, &f_t()).unwrap().1.to_f64();
    let e1 = i_f_explicit(&m, &f_t(), &[1.0], TOL).unwrap();
    let c1 = i_f_conjugate(&m, &f_t(), &[1.0], TOL).unwrap().value.to_f64();
    let h = 1e-3;
    let mut slope_err: f64 = 0.0;
    for x in [0.3, 0.5, 1.0, 2.0, 5.0] {
        let up = i_f_explicit(&m, &f_t(), &[x + h], TOL).unwrap().value.to_f64();
        let dn = i_f_explicit(&m, &f_t(), &[x - h], TOL).unwrap().value.to_f64();
        slope_err = slope_err.max(((up - dn) / (2.0 * h) - 1.0).abs());
    }
    let ok = (sup - 7.0 / 30.0).abs() <= 1e-8
        && (e1.value.to_f64() - 0.9).abs() <= 1e-6
        && (c1 - 0.9).abs() <= 1e-6
        && e1.branch == Branch::SingularPlus
        && slope_err <= 1e-8;
    report(
        3,
        ok,
        format!(
            "sup {sup:.12}, explicit {}, conjugate {c1:.10}, slope error {slope_err:.2e}",
            e1.value
        ),
    );
}

#[test]
fn criterion_4_variational_program() {
    let cases = [
        (CgfModel::std_gaussian(), f_t(), linspace(-2.0, 2.0, 20)),
        (CgfModel::CenteredExp, one(), linspace(-0.9, 3.0, 20)),
        (CgfModel::SyntheticBoundary, f_t(), linspace(-1.0, 1.5, 20)),
    ];
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (m, k, xs) in &cases {
        for &x in xs {
            let c = i_f_conjugate(m, k, &[x], TOL).unwrap().value.to_f64();
            let v = variational_rate(m, k, x, 200, TOL).unwrap().to_f64();
            worst = worst.max((c - v).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report(4, worst <= 5e-3 && secs < 30.0, format!("max gap {worst:.2e}, {secs:.2} s"));
}

/// Adds `eps · p` where `p` is a non-zero absolutely continuous path with
/// `∫ f dp = 0` and `Var(p) ≥ 0.1`.
fn feasible_perturbation(h: &CadlagPath, k: &Kernel, seed: u64, eps: f64) -> CadlagPath {
    let base = CadlagPath::linear(vec![1.0]);
    let p = (0..)
        .map(|i| {
            let q = random_path(1, 6, 0, seed.wrapping_mul(31).wrapping_add(i));
            let c = q.pair(k)[0] / base.pair(k)[0];
            CadlagPath::lin_comb(1.0, &q, -c, &base).unwrap()
        })
        .find(|p| p.var() >= 0.1)
        .unwrap();
    CadlagPath::lin_comb(1.0, h, eps, &p).unwrap()
}

#[test]
fn criterion_5_minimizer_optimality() {
    let cases = [
        (CgfModel::std_gaussian(), f_t(), linspace(-3.0, 3.0, 50)),
        (CgfModel::CenteredExp, one(), linspace(-0.95, 4.0, 50)),
        (CgfModel::Rademacher, one(), linspace(-0.98, 0.98, 50)),
        (CgfModel::SyntheticBoundary, f_t(), linspace(-1.0, 2.0, 50)),
    ];
    let (mut pair_err, mut cost_err): (f64, f64) = (0.0, 0.0);
    let mut not_increasing = 0;
    for (m, k, xs) in &cases {
        for &x in xs {
            let path = minimizer(m, k, &[x], TOL).unwrap();
            pair_err = pair_err.max((path.pair(k)[0] - x).abs());
            let cost = path.i_d(m).unwrap().to_f64();
            let rate = i_f_explicit(m, k, &[x], TOL).unwrap();
            cost_err = cost_err.max((cost - rate.value.to_f64()).abs());
            let probe = matches!(m, CgfModel::Gaussian(_)) && rate.branch == Branch::Interior && x != 0.0;
            if probe {
                for s in 0..10 {
                    let moved = feasible_perturbation(&path, k, 97 * s + x.to_bits() % 89, 0.05);
                    assert!((moved.pair(k)[0] - x).abs() < 1e-9);
                    if moved.i_d(m).unwrap().to_f64() <= cost {
                        not_increasing += 1;
                    }
                }
            }
        }
    }
    let ok = pair_err <= 1e-8 && cost_err <= 1e-6 && not_increasing == 0;
    report(
        5,
        ok,
        format!("pair error {pair_err:.2e}, cost error {cost_err:.2e}, {not_increasing} non-increasing perturbations"),
    );
}

#[test]
fn criterion_5_perturbations_on_other_models() {
    let mut bad = 0;
    for (m, k, x) in [
        (CgfModel::CenteredExp, one(), 1.5),
        (CgfModel::Laplace, f_t(), 0.4),
        (CgfModel::SyntheticBoundary, f_t(), 0.1),
    ] {
        let path = minimizer(&m, &k, &[x], TOL).unwrap();
        let cost = path.i_d(&m).unwrap();
        for s in 0..10 {
            let moved = feasible_perturbation(&path, &k, 1000 + s, 0.02);
            if moved.i_d(&m).unwrap() <= cost {
                bad += 1;
            }
        }
    }
    report(5, bad == 0, format!("{bad} non-increasing perturbations"));
}

#[test]
fn criterion_6_monte_carlo() {
    let start = Instant::now();
    let mut q = TailQuery::new(100, 0.5, vec![1.0], 100_000, 20_240_601);
    q.workers = 4;
    let rad = estimate_tail_with(&CgfModel::Rademacher, &one(), &q).unwrap();
    let rad_exact = exact_tail_oracle(&CgfModel::Rademacher, &one(), 100, 0.5).unwrap();
    let rad_ok = (rad.log_prob - rad_exact).abs() <= 3.0 * rad.std_error;

    let g = CgfModel::std_gaussian();
    let mut gaps = Vec::new();
    let mut g200 = None;
    for n in [50, 100, 200, 400] {
        let mut q = TailQuery::new(n, 0.5, vec![1.0], 100_000, 7 + n as u64);
        q.workers = 4;
        let est = estimate_tail_with(&g, &f_t(), &q).unwrap();
        let exact = -exact_tail_oracle(&g, &f_t(), n, 0.5).unwrap() / n as f64;
        if n == 200 {
            g200 = Some((est.rate_estimate, exact));
        }
        gaps.push((est.rate_estimate - 0.375).abs());
    }
    let (r200, e200) = g200.unwrap();
    let g_ok = ((r200 - e200) / e200).abs() <= 0.05;
    let shrinking = gaps.windows(2).all(|w| w[1] < w[0]);
    let secs = start.elapsed().as_secs_f64();
    report(
        6,
        rad_ok && g_ok && shrinking && secs < 60.0,
        format!(
            "rademacher {:.4} vs exact {rad_exact:.4} (se {:.4}); gaussian n=200 rate {r200:.4} vs {e200:.4}; gaps {gaps:.4?}; {secs:.1} s",
            rad.log_prob, rad.std_error
        ),
    );
}

fn pairs(count: u64, seed: u64) -> impl Iterator<Item = (usize, CadlagPath, CadlagPath)> {
    (0..count).map(move |i| {
        let d = 1 + (i % 2) as usize;
        (d, random_path(d, 6, 3, seed + 2 * i), random_path(d, 6, 3, seed + 2 * i + 1))
    })
}

#[test]
fn criterion_7_l1_bounded_by_graph_distances() {
    let mut violations = 0;
    for (d, g, h) in pairs(1000, 70_000) {
        let l1 = l1_distance(&g, &h).unwrap();
        let df = d as f64;
        let (r, rp) = (rho_2(&g, &h).unwrap(), rho_2_prime(&g, &h).unwrap());
        let first = 2.0 * df * (h.var() - norm(&h.eval(0.0)) + 1.0) * r + std::f64::consts::PI * df * r * r;
        let second = 2.0 * df * (h.var() + 1.0) * rp + std::f64::consts::PI * df * rp * rp;
        if l1 > first || l1 > second {
            violations += 1;
        }
    }
    report(7, violations == 0, format!("{violations} violations in 1000 pairs"));
}

#[test]
fn criterion_8_metric_axioms() {
    const SLACK: f64 = 1e-9;
    let mut bad = 0;
    for (i, (d, g, h)) in pairs(1000, 80_000).enumerate() {
        let k = random_path(d, 6, 3, 90_000 + i as u64);
        let (r, rp) = (rho_2(&g, &h).unwrap(), rho_2_prime(&g, &h).unwrap());
        let d0: Vec<f64> = g.eval(0.0).iter().zip(h.eval(0.0)).map(|(a, b)| a - b).collect();
        if rp > r.max(norm(&d0)) + SLACK {
            bad += 1;
        }
        for f in [rho_2, rho_2_prime, rho_star] {
            let gh = f(&g, &h).unwrap();
            if gh != f(&h, &g).unwrap() || gh < 0.0 {
                bad += 1;
            }
            if f(&g, &k).unwrap() > gh + f(&h, &k).unwrap() + SLACK {
                bad += 1;
            }
            if f(&g, &g).unwrap() > SLACK {
                bad += 1;
            }
        }
    }
    report(8, bad == 0, format!("{bad} violations over 1000 pairs and triples"));
}

fn models() -> Vec<CgfModel> {
    vec![
        CgfModel::std_gaussian(),
        CgfModel::CenteredExp,
        CgfModel::Rademacher,
        CgfModel::poisson(2.0).unwrap(),
        CgfModel::Laplace,
        CgfModel::SyntheticBoundary,
    ]
}

#[test]
fn criterion_9_action_functional_structure() {
    let mut additive = 0;
    for s in 0..1000 {
        let h = random_path(1 + (s % 3) as usize, 6, 4, 100_000 + s);
        let (a, j) = h.lebesgue_split();
        if h.var() != a.var() + j.var() {
            additive += 1;
        }
    }

    let mut minorant = 0;
    for m in models() {
        let (c1, c2) = m.linear_minorant();
        for s in 0..200 {
            let h = random_path(1, 6, 3, 200_000 + s);
            let v = h.i_d(&m).unwrap();
            if v < ExtReal::Finite(c1 * h.var() - c2) {
                minorant += 1;
            }
        }
    }

    let mut worst: f64 = 0.0;
    let mut mismatched = 0;
    for m in [CgfModel::Laplace, CgfModel::CenteredExp, CgfModel::Rademacher, CgfModel::std_gaussian()] {
        for s in 0..30 {
            let h = random_path(1, 5, 3, 300_000 + s);
            let exact = h.i_d(&m).unwrap();
            let part = h.i_d_partition(&m, &h.refinement_partition(12)).unwrap();
            match (exact, part) {
                (ExtReal::Finite(a), ExtReal::Finite(b)) => worst = worst.max((a - b).abs()),
                (ExtReal::PosInf, ExtReal::PosInf) => {}
                // infinite cost: the partition sums must blow up
                (ExtReal::PosInf, ExtReal::Finite(b)) => {
                    let coarse = h.i_d_partition(&m, &h.refinement_partition(6)).unwrap();
                    if !(b > 1e6 && ExtReal::Finite(b) > coarse) {
                        mismatched += 1;
                    }
                }
                _ => mismatched += 1,
            }
        }
    }
    let ok = additive == 0 && minorant == 0 && mismatched == 0 && worst <= 1e-6;
    report(
        9,
        ok,
        format!(
            "{additive} additivity failures, {minorant} minorant failures, partition error {worst:.2e}, {mismatched} mismatched infinities"
        ),
    );
}

/// Path with slopes equal to the cell averages of `cos(2π n t)`, so it
/// interpolates `sin(2π n t)/(2π n)` at 16 points per period.
fn oscillation(n: usize) -> CadlagPath {
    let cells = 16 * n;
    let grid: Vec<f64> = (0..=cells).map(|i| i as f64 / cells as f64).collect();
    let w = 2.0 * std::f64::consts::PI * n as f64;
    let slopes = grid
        .windows(2)
        .map(|c| vec![((w * c[1]).sin() - (w * c[0]).sin()) / (w * (c[1] - c[0]))])
        .collect();
    CadlagPath::new(1, grid, slopes, vec![]).unwrap()
}

fn indicator(parts: &[(f64, f64)]) -> CadlagPath {
    let jumps = parts.iter().flat_map(|&(a, b)| [(a, vec![1.0]), (b, vec![-1.0])]).collect();
    CadlagPath::pure_jump(1, jumps).unwrap()
}

#[test]
fn criterion_10_weak_star_sequence_and_gap_example() {
    let zero = CadlagPath::zero(1);
    let mut stars = Vec::new();
    let mut tests = Vec::new();
    let mut var_ok = true;
    for n in [1, 2, 4, 8, 16, 32, 64] {
        let g = oscillation(n);
        var_ok &= g.var() <= 2.0 / std::f64::consts::PI + 1e-12;
        stars.push(rho_star(&g, &zero).unwrap());
        let worst = (0..10)
            .map(|k| g.integrate_against(|t| t.powi(k))[0].abs())
            .fold(0.0, f64::max);
        tests.push(worst);
    }
    let decreasing = |v: &[f64]| v.windows(2).all(|w| w[1] <= w[0] + 1e-15);
    let sequence_ok = var_ok
        && decreasing(&stars)
        && decreasing(&tests)
        && *stars.last().unwrap() < 1e-2
        && *tests.last().unwrap() < 1e-2;

    let mut dist_err: f64 = 0.0;
    let mut cost_ok = true;
    for n in 4..=40 {
        let nf = n as f64;
        let h = indicator(&[(0.5 - 2.0 / nf, 0.5 - 1.0 / nf), (0.5 + 1.0 / nf, 0.5 + 2.0 / nf)]);
        let g = indicator(&[(0.5 - 1.0 / nf, 0.5 + 1.0 / nf)]);
        dist_err = dist_err.max((rho_2_prime(&g, &h).unwrap() - 1.0 / nf).abs());
        // unbounded domain on one side: both costs are infinite
        let (ig, ih) = (g.i_d(&CgfModel::CenteredExp).unwrap(), h.i_d(&CgfModel::CenteredExp).unwrap());
        cost_ok &= ig == ExtReal::PosInf && ih == ExtReal::PosInf;
        // bounded domain: finite and in ratio one half
        let (lg, lh) = (g.i_d(&CgfModel::Laplace).unwrap().to_f64(), h.i_d(&CgfModel::Laplace).unwrap().to_f64());
        cost_ok &= lg > 0.0 && (lg - 0.5 * lh).abs() <= 1e-8;
    }
    report(
        10,
        sequence_ok && dist_err <= 1e-9 && cost_ok,
        format!(
            "rho_* at n=64 {:.2e}, test functionals {:.2e}, distance error {dist_err:.1e}, costs {}",
            stars.last().unwrap(),
            tests.last().unwrap(),
            if cost_ok { "ok" } else { "wrong" }
        ),
    );
}

#[test]
fn criterion_1_also_holds_for_a_correlated_gaussian() {
    // the d > 1 explicit and conjugate routes agree with the quadratic form
    let cov = nalgebra::DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
    let m = CgfModel::Gaussian(Gaussian::new(vec![0.0, 0.0], cov.clone()).unwrap());
    let k = f_t();
    let inv = cov.try_inverse().unwrap();
    let mut worst: f64 = 0.0;
    for (a, b) in [(0.3, -0.2), (1.0, 1.0), (-0.5, 0.7)] {
        let x = nalgebra::DVector::from_vec(vec![a, b]);
        let want = 0.5 * (x.transpose() * &inv * &x)[(0, 0)] / k.m2();
        let c = i_f_conjugate(&m, &k, &[a, b], 1e-10).unwrap().value.to_f64();
        let e = i_f_explicit(&m, &k, &[a, b], 1e-10).unwrap().value.to_f64();
        worst = worst.max((c - want).abs()).max((e - want).abs());
    }
    report(1, worst <= 1e-6, format!("two-dimensional max error {worst:.2e}"));
}
