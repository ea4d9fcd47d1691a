use proptest::prelude::*;

use ldpkit::conjugate::{grad_inverse, legendre, GradInverse};
use ldpkit::kernel_rate::{i_f_conjugate, i_f_explicit};
use ldpkit::metrics::{rho_2, rho_2_prime, rho_star};
use ldpkit::paths::random_path;
use ldpkit::{CadlagPath, CgfModel, ExtReal, Kernel};

fn model(i: usize) -> CgfModel {
    match i {
        0 => CgfModel::gaussian_1d(0.4, 1.3).unwrap(),
        1 => CgfModel::CenteredExp,
        2 => CgfModel::Rademacher,
        3 => CgfModel::poisson(1.5).unwrap(),
        4 => CgfModel::Laplace,
        _ => CgfModel::SyntheticBoundary,
    }
}

/// Maps `s ∈ [0, 1]` into the interior of the model's domain.
fn interior(i: usize, s: f64) -> f64 {
    let (lo, hi) = match i {
        1 => (-3.0, 0.9),
        4 => (-0.9, 0.9),
        5 => (-3.0, 0.99),
        _ => (-3.0, 3.0),
    };
    lo + (hi - lo) * s
}

fn k(m: &CgfModel, u: f64) -> f64 {
    m.cgf(&[u]).unwrap().to_f64()
}

fn kernel() -> impl Strategy<Value = Kernel> {
    (prop::collection::vec(-1.0..2.0f64, 3), 0.2..0.8f64).prop_filter_map("non-zero kernel", |(v, mid)| {
        Kernel::new(vec![0.0, mid, 1.0], v).ok()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cgf_is_midpoint_convex(i in 0..6usize, s1 in 0.0..1.0f64, s2 in 0.0..1.0f64) {
        let m = model(i);
        let (u1, u2) = (interior(i, s1), interior(i, s2));
        prop_assert!(k(&m, 0.5 * (u1 + u2)) <= 0.5 * (k(&m, u1) + k(&m, u2)) + 1e-12);
    }

    #[test]
    fn fenchel_young(i in 0..6usize, s in 0.0..1.0f64, w in -4.0..4.0f64) {
        let m = model(i);
        let u = interior(i, s);
        let v = m.grad(&[u]).unwrap()[0];
        let iv = m.rate(&[v]).unwrap().to_f64();
        prop_assert!((k(&m, u) + iv - u * v).abs() <= 1e-9 * (1.0 + (u * v).abs()));
        if let ExtReal::Finite(kw) = m.cgf(&[w]).unwrap() {
            prop_assert!(kw + iv >= w * v - 1e-9);
        }
    }

    #[test]
    fn gradient_matches_finite_differences(i in 0..6usize, s in 0.05..0.95f64) {
        let m = model(i);
        let u = interior(i, s);
        let h = 1e-5;
        let fd = (k(&m, u + h) - k(&m, u - h)) / (2.0 * h);
        prop_assert!((fd - m.grad(&[u]).unwrap()[0]).abs() <= 1e-5 * (1.0 + fd.abs()));
    }

    #[test]
    fn numerical_conjugate_matches_closed_rate(i in 0..6usize, s in 0.0..1.0f64) {
        let m = model(i);
        let v = m.grad(&[interior(i, s)]).unwrap()[0];
        let num = legendre(&m, &[v], 1e-12).unwrap().value.to_f64();
        let exact = m.rate(&[v]).unwrap().to_f64();
        prop_assert!((num - exact).abs() <= 1e-8 * (1.0 + exact), "{} vs {}", num, exact);
    }

    #[test]
    fn gradient_inverse_round_trip(i in 0..6usize, s in 0.0..1.0f64) {
        let m = model(i);
        let u = interior(i, s);
        let v = m.grad(&[u]).unwrap();
        match grad_inverse(&m, &v, 1e-12).unwrap() {
            GradInverse::Interior(w) => prop_assert!((w[0] - u).abs() <= 1e-6 * (1.0 + u.abs())),
            other => prop_assert!(false, "{:?}", other),
        }
    }

    #[test]
    fn rate_has_linear_minorant(i in 0..6usize, v in -20.0..20.0f64) {
        let m = model(i);
        let (c1, c2) = m.linear_minorant();
        prop_assert!(m.rate(&[v]).unwrap() >= ExtReal::Finite(c1 * v.abs() - c2));
    }

    #[test]
    fn kernel_rate_routes_agree(i in prop::sample::select(vec![0usize, 2, 4]), f in kernel(), x in -0.8..0.8f64) {
        let m = model(i);
        let c = i_f_conjugate(&m, &f, &[x], 1e-10).unwrap().value;
        let e = i_f_explicit(&m, &f, &[x], 1e-10).unwrap().value;
        match (c, e) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => prop_assert!((a - b).abs() <= 1e-6 * (1.0 + a), "{} vs {}", a, b),
            (a, b) => prop_assert_eq!(a, b),
        }
        prop_assert!(e >= ExtReal::ZERO);
    }

    #[test]
    fn kernel_rate_is_convex_in_x(f in kernel(), x1 in -0.6..0.6f64, x2 in -0.6..0.6f64) {
        let m = CgfModel::Laplace;
        let r = |x: f64| i_f_explicit(&m, &f, &[x], 1e-10).unwrap().value;
        let mid = r(0.5 * (x1 + x2));
        if let (ExtReal::Finite(a), ExtReal::Finite(b)) = (r(x1), r(x2)) {
            prop_assert!(mid.to_f64() <= 0.5 * (a + b) + 1e-9);
        }
    }

    #[test]
    fn path_round_trips(d in 1..4usize, seed in any::<u64>()) {
        let h = random_path(d, 6, 4, seed);
        let text: CadlagPath = h.to_text().parse().unwrap();
        prop_assert_eq!(&text, &h);
        let json: CadlagPath = serde_json::from_str(&serde_json::to_string(&h).unwrap()).unwrap();
        prop_assert_eq!(&json, &h);
    }

    #[test]
    fn variation_is_a_seminorm(d in 1..3usize, seed in any::<u64>(), a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let g = random_path(d, 5, 3, seed);
        let h = random_path(d, 5, 3, seed ^ 0xABCD);
        let c = CadlagPath::lin_comb(a, &g, b, &h).unwrap();
        prop_assert!(c.var() <= a.abs() * g.var() + b.abs() * h.var() + 1e-12);
    }

    #[test]
    fn pairing_is_linear(seed in any::<u64>(), a in -2.0..2.0f64, b in -2.0..2.0f64, f in kernel()) {
        let g = random_path(1, 5, 3, seed);
        let h = random_path(1, 5, 3, seed.wrapping_add(1));
        let c = CadlagPath::lin_comb(a, &g, b, &h).unwrap();
        let want = a * g.pair(&f)[0] + b * h.pair(&f)[0];
        prop_assert!((c.pair(&f)[0] - want).abs() <= 1e-12 * (1.0 + want.abs()));
    }

    #[test]
    fn jumps_are_left_right_differences(seed in any::<u64>()) {
        let h = random_path(2, 5, 4, seed);
        for (t, j) in h.jumps() {
            let (r, l) = (h.eval(*t), h.eval_left(*t));
            for i in 0..2 {
                prop_assert!((r[i] - l[i] - j[i]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn action_dominates_minorant(i in 0..6usize, seed in any::<u64>()) {
        let m = model(i);
        let h = random_path(1, 5, 3, seed);
        let (c1, c2) = m.linear_minorant();
        prop_assert!(h.i_d(&m).unwrap() >= ExtReal::Finite(c1 * h.var() - c2));
    }

    #[test]
    fn metrics_are_symmetric_and_satisfy_the_triangle_inequality(d in 1..3usize, seed in any::<u64>()) {
        let g = random_path(d, 5, 3, seed);
        let h = random_path(d, 5, 3, seed.wrapping_add(1));
        let k = random_path(d, 5, 3, seed.wrapping_add(2));
        for f in [rho_2, rho_2_prime, rho_star] {
            let gh = f(&g, &h).unwrap();
            prop_assert_eq!(gh, f(&h, &g).unwrap());
            prop_assert!(f(&g, &k).unwrap() <= gh + f(&h, &k).unwrap() + 1e-9);
            prop_assert!(f(&g, &g).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn rho_star_dominates_terminal_gap(seed in any::<u64>()) {
        let g = random_path(1, 5, 3, seed);
        let h = random_path(1, 5, 3, seed.wrapping_add(7));
        prop_assert!(rho_star(&g, &h).unwrap() >= (g.eval(1.0)[0] - h.eval(1.0)[0]).abs());
    }
}
