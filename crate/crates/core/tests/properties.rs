use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex;
use proptest::prelude::*;

use symtomo::density::pure_density;
use symtomo::evolution::{evolve_tomogram, tomogram_moment, QuadraticFlow};
use symtomo::hermite::ProductState;
use symtomo::io::{Meta, TomogramTable};
use symtomo::permutation::SymmetryClass;
use symtomo::quadrature::QuadratureSpec;
use symtomo::symmetrized::{route_a_batch, RouteAOptions};
use symtomo::tomogram::{fock_tomogram_modes, forward_tomogram, inverse_density, TomogramObject, TomogramPoint};

fn frame() -> impl Strategy<Value = (f64, f64)> {
    (0.2f64..1.5, 0.0f64..(2.0 * PI)).prop_map(|(r, a)| (r * a.cos(), r * a.sin()))
}

fn pair_point() -> impl Strategy<Value = TomogramPoint<f64>> {
    (-2.5f64..2.5, -2.5f64..2.5, frame(), frame())
        .prop_map(|(x1, x2, (m1, n1), (m2, n2))| TomogramPoint::pair([x1, x2], [m1, m2], [n1, n2]).unwrap())
}

fn superposition() -> ProductState<f64> {
    let c = Complex::new(FRAC_1_SQRT_2, 0.0);
    ProductState::superposition([(c, vec![0]), (c, vec![1])]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fock_tomogram_is_homogeneous(p in pair_point(), a in 0..4usize, b in 0..4usize, lambda in prop_oneof![-3.0f64..-0.3, 0.3f64..3.0]) {
        let w = fock_tomogram_modes(&[a, b], &p).unwrap();
        let ws = fock_tomogram_modes(&[a, b], &p.scaled(lambda)).unwrap();
        prop_assert!((ws * lambda.abs().powi(2) - w).abs() <= 1e-12 * w.abs().max(1e-3));
    }

    #[test]
    fn fock_tomogram_is_even_in_xi(xi in -3.0f64..3.0, (mu, nu) in frame(), n in 0..6usize) {
        let a = fock_tomogram_modes(&[n], &TomogramPoint::single(xi, mu, nu).unwrap()).unwrap();
        let b = fock_tomogram_modes(&[n], &TomogramPoint::single(-xi, mu, nu).unwrap()).unwrap();
        prop_assert!((a - b).abs() <= 1e-14);
        prop_assert!(a >= 0.0);
    }

    #[test]
    fn relabelling_swaps_modes(p in pair_point(), a in 0..4usize, b in 0..4usize) {
        let w = fock_tomogram_modes(&[a, b], &p).unwrap();
        let s = fock_tomogram_modes(&[b, a], &p.label_swapped()).unwrap();
        prop_assert!((w - s).abs() <= 1e-14);
    }

    #[test]
    fn classes_add_up_to_swap_average(p in pair_point(), a in 0..3usize, b in 0..3usize) {
        let q = QuadratureSpec::default();
        let d = pure_density(&ProductState::<f64>::fock(&[a, b]).unwrap());
        let opts = RouteAOptions { closed_form: true, ..RouteAOptions::default() };
        let pts = [p.clone()];
        let plus = route_a_batch(&d, SymmetryClass::Plus, &pts, &q, opts).unwrap();
        let minus = route_a_batch(&d, SymmetryClass::Minus, &pts, &q, opts).unwrap();
        let w = fock_tomogram_modes(&[a, b], &p).unwrap();
        let ws = fock_tomogram_modes(&[a, b], &p.label_swapped()).unwrap();
        prop_assert!((plus.values[0] + minus.values[0] - 0.5 * (w + ws)).abs() <= 1e-12);
        prop_assert!(plus.values[0] >= -1e-14 && minus.values[0] >= -1e-14);
        prop_assert!((plus.direct[0] + plus.interference[0] - plus.values[0]).abs() <= 1e-13);
    }

    #[test]
    fn flow_is_a_one_parameter_group(p in pair_point(), s in -3.0f64..3.0, t in -3.0f64..3.0, free in any::<bool>()) {
        let flow = if free { QuadraticFlow::free_particle() } else { QuadraticFlow::oscillator() };
        let two = flow.pull_back(&flow.pull_back(&p, s).unwrap(), t).unwrap();
        let one = flow.pull_back(&p, s + t).unwrap();
        for i in 0..2 {
            let (x, m, n) = two.particle(i);
            let (y, m2, n2) = one.particle(i);
            prop_assert!((x - y).abs() + (m - m2).abs() + (n - n2).abs() <= 1e-11);
        }
    }

    #[test]
    fn driven_flow_round_trips(z in (-3.0f64..3.0, -3.0f64..3.0), t in -2.0f64..2.0, k in 0.2f64..3.0, f in -1.0f64..1.0) {
        let flow = QuadraticFlow::from_potential(1.0, &[0.0, f, 0.5 * k]).unwrap();
        let back = flow.retreat(flow.advance([z.0, z.1], t).unwrap(), t).unwrap();
        prop_assert!((back[0] - z.0).abs() + (back[1] - z.1).abs() <= 1e-11);
    }

    #[test]
    fn table_round_trips(rows in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 3), 0..12), seed in any::<u64>()) {
        let meta = Meta::new("eval", "0@1", "plus", "a", &QuadratureSpec::default(), Some(seed));
        let mut t = TomogramTable::new(meta, vec!["xi1".into(), "mu1".into(), "value".into()]);
        for r in rows {
            t.push_row(r).unwrap();
        }
        prop_assert_eq!(&TomogramTable::from_csv(&t.to_csv().unwrap()).unwrap(), &t);
        prop_assert_eq!(&TomogramTable::from_json(&t.to_json().unwrap()).unwrap(), &t);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn single_particle_tomogram_is_normalized((mu, nu) in frame(), n in 0..4usize) {
        let q = QuadratureSpec::default();
        let w = TomogramObject::from_state(&ProductState::<f64>::fock(&[n]).unwrap()).unwrap();
        prop_assert!((tomogram_moment(&w, mu, nu, 0, &q).unwrap() - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn reconstruction_is_hermitian(x in -1.5f64..1.5, xp in -1.5f64..1.5) {
        let q = QuadratureSpec::default();
        let w = TomogramObject::from_state(&superposition()).unwrap();
        let a = inverse_density(&w, &[x], &[xp], &q).unwrap();
        let b = inverse_density(&w, &[xp], &[x], &q).unwrap();
        prop_assert!((a - b.conj()).norm() <= 1e-8);
        let exact = pure_density(&superposition()).evaluate(&[x], &[xp]).unwrap();
        prop_assert!((a - exact).norm() <= 1e-6);
    }
}

#[test]
fn characteristics_match_evolved_density() {
    let q = QuadratureSpec::default();
    let state = superposition();
    let w0 = TomogramObject::from_state(&state).unwrap();
    let flow = QuadraticFlow::oscillator();
    for t in [PI / 4.0, PI / 2.0, PI] {
        let exact = pure_density(&state.evolved(t));
        for (xi, mu, nu) in [(0.3, 1.0, 0.0), (-0.8, 0.6, 0.7), (1.2, -0.4, 1.1), (0.0, 0.9, -0.5)] {
            let p = TomogramPoint::single(xi, mu, nu).unwrap();
            let a = evolve_tomogram(&w0, &flow, t, &p).unwrap();
            let b = forward_tomogram(&exact, &p, &q).unwrap();
            assert!((a - b).abs() <= 1e-5, "t={t} p={p:?}: {a} vs {b}");
        }
    }
}

#[test]
fn superposition_mean_rotates() {
    let q = QuadratureSpec::default();
    let w0 = TomogramObject::from_state(&superposition()).unwrap();
    let flow = QuadraticFlow::oscillator();
    for t in [0.0, 0.7, PI / 2.0, 2.0] {
        let w = symtomo::evolution::EvolvedTomogram::new(&w0, flow.clone(), t);
        let mean_x = tomogram_moment(&w, 1.0, 0.0, 1, &q).unwrap();
        assert!((mean_x - FRAC_1_SQRT_2 * t.cos()).abs() <= 1e-8, "t={t}");
    }
}
