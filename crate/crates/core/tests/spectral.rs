use num_complex::Complex;
use num_rational::Rational64;
use proptest::prelude::*;
use spiral_anchor::bundle::HFamily;
use spiral_anchor::fourier::{build_fg_j1, build_fg_jstar, solve_u, Collocation, FourierSeries};
use spiral_anchor::num::cis;

type Q = Complex<Rational64>;
type C = Complex<f64>;

fn c(re: f64, im: f64) -> C {
    Complex::new(re, im)
}

fn rational_series(base: u32, coeffs: &[(i64, i64, i64, i64)]) -> FourierSeries<Rational64> {
    let m = (coeffs.len() / 2) as i64;
    let modes = coeffs
        .iter()
        .enumerate()
        .map(|(k, &(a, b, d, e))| (k as i64 - m, Q::new(Rational64::new(a, b), Rational64::new(d, e))));
    FourierSeries::from_modes(base, m as usize, modes).unwrap()
}

fn ratio() -> impl Strategy<Value = (i64, i64, i64, i64)> {
    (-500i64..500, 1i64..97, -500i64..500, 1i64..97)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn y_round_trip_is_exact(base in prop::sample::select(vec![2u32, 3, 5]), coeffs in prop::collection::vec(ratio(), 1..12)) {
        let s = rational_series(base, &coeffs);
        prop_assert_eq!(&s.y_apply().y_invert().unwrap(), &s);
        prop_assert_eq!(&s.y_invert().unwrap().y_apply(), &s);
    }

    #[test]
    fn y_apply_is_linear(
        base in 1u32..6,
        a in ratio(),
        b in ratio(),
        coeffs in prop::collection::vec((ratio(), ratio()), 1..10),
    ) {
        let (first, second): (Vec<_>, Vec<_>) = coeffs.into_iter().unzip();
        let (s1, s2) = (rational_series(base, &first), rational_series(base, &second));
        let qa = Q::new(Rational64::new(a.0, a.1), Rational64::new(a.2, a.3));
        let qb = Q::new(Rational64::new(b.0, b.1), Rational64::new(b.2, b.3));
        let combo = s1.map_coeffs(|_, x| x * qa).add(&s2.map_coeffs(|_, x| x * qb));
        let expect = s1.y_apply().map_coeffs(|_, x| x * qa).add(&s2.y_apply().map_coeffs(|_, x| x * qb));
        prop_assert_eq!(combo.y_apply(), expect);
    }

    #[test]
    fn series_is_periodic_in_its_base_period(base in 1u32..6, re in prop::collection::vec(-1.0..1.0f64, 5), t in -10.0..10.0f64) {
        let modes = re.iter().enumerate().map(|(k, x)| (k as i64 - 2, c(*x, 0.5 * x)));
        let s = FourierSeries::from_modes(base, 2, modes).unwrap();
        prop_assert!((s.eval(t) - s.eval(t + s.period())).norm() < 1e-12);
    }
}

#[test]
fn j1_identity_on_a_fine_grid() {
    let v = c(1.0, 0.2);
    let g = FourierSeries::from_modes(1, 4, [(-1, c(0.4, -0.2)), (0, c(0.1, 0.3)), (1, c(-0.2, 0.0)), (4, c(0.05, 0.05))]).unwrap();
    let eps = 0.05;
    let path = build_fg_j1(v, &g, eps).unwrap();
    let worst = (0..512)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / 512.0;
            (path.derivative(t) - (cis(t) * (v + g.eval(t) * eps) - g.coeff(-1) * eps)).norm()
        })
        .fold(0.0, f64::max);
    assert!(worst < 1e-12, "{worst}");
}

#[test]
fn jstar_identities_with_saturated_h() {
    let v = c(1.0, 0.0);
    let g = FourierSeries::from_modes(2, 2, [(-1, c(0.3, 0.1)), (1, c(0.0, 0.2)), (2, c(0.1, 0.0))]).unwrap();
    let h = HFamily::saturated_polynomial(vec![c(0.1, 0.0), c(-1.0, 0.4), c(0.2, 0.1)], 2.0, None).unwrap();
    let (eps, mu) = (0.04, 0.05);
    let sol = solve_u(v, &g, &h, eps, mu, 32, 1e-13).unwrap();
    assert!(sol.residual < 1e-12);
    let path = build_fg_jstar(v, &g, &h, eps, mu, 32, 1e-13).unwrap();
    let yu = sol.u.y_apply();
    let mut worst_u = 0.0f64;
    let mut worst_f = 0.0f64;
    for k in 0..512 {
        let t = std::f64::consts::TAU * k as f64 / 512.0;
        let b = path.bracket_at(t);
        worst_u = worst_u.max((yu.eval(t) - h.eval(b, mu) * mu).norm());
        let rhs = cis(t) * (v + g.eval(t) * eps + yu.eval(t));
        worst_f = worst_f.max((path.derivative(t) - rhs).norm());
    }
    assert!(worst_u < 1e-10, "{worst_u}");
    assert!(worst_f < 1e-10, "{worst_f}");
}

#[test]
fn correction_shrinks_linearly_with_mu() {
    let v = c(1.0, 0.0);
    let g = FourierSeries::from_modes(2, 1, [(1, c(0.2, 0.0))]).unwrap();
    let h = HFamily::saturated_polynomial(vec![c(0.0, 0.0), c(-1.0, 0.0)], 3.0, None).unwrap();
    let grid = Collocation::new(2, 16);
    let norm = |mu: f64| grid.sup_norm(&solve_u(v, &g, &h, 0.01, mu, 16, 1e-14).unwrap().u);
    let (a, b, d) = (norm(0.04), norm(0.02), norm(0.01));
    assert!((a / b - 2.0).abs() < 0.1 && (b / d - 2.0).abs() < 0.05, "{a} {b} {d}");
}
