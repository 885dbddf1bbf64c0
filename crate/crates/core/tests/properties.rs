use proptest::prelude::*;

use pucci_core::eigenfield::Eigenfield;
use pucci_core::geometry::{shear_forward, shear_inverse, shear_matrix, Domain};
use pucci_core::symmat::{congruence, pucci_minus, pucci_plus, EllipticityParams, SymMatrix3};

fn sym() -> impl Strategy<Value = SymMatrix3> {
    prop::array::uniform6(-10.0f64..10.0).prop_map(SymMatrix3::from_array)
}

fn ellipticity() -> impl Strategy<Value = EllipticityParams> {
    (0.1f64..3.0, 1.0f64..12.0).prop_map(|(l, w)| EllipticityParams::new(l, l * w).unwrap())
}

fn domain() -> impl Strategy<Value = Domain> {
    (1.0f64..12.0, 0.0f64..1.0, -2.5f64..2.5).prop_map(|(omega, t, a)| {
        let r = omega.sqrt();
        let gamma = (1.0 / r) * (r * r).powf(t);
        Domain::from_omega(omega, gamma.clamp(1.0 / r, r), a).unwrap()
    })
}

fn point() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-6.0f64..6.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn eigenvalues_are_sorted_and_match_invariants(m in sym()) {
        let e = m.eigenvalues().unwrap();
        prop_assert!(e[0] <= e[1] && e[1] <= e[2]);
        let scale = 1.0 + m.norm();
        prop_assert!((e.iter().sum::<f64>() - m.trace()).abs() <= 1e-10 * scale);
        prop_assert!((e[0] * e[1] * e[2] - m.det()).abs() <= 1e-9 * scale.powi(3));
    }

    #[test]
    fn pucci_extremal_relations(m in sym(), n in sym(), ep in ellipticity(), t in 0.0f64..5.0) {
        let p = pucci_plus(&m, &ep).unwrap();
        let q = pucci_minus(&m, &ep).unwrap();
        let tol = 1e-9 * (1.0 + m.norm() + n.norm()) * ep.big_lambda();
        prop_assert!(q <= p + tol);
        prop_assert!((pucci_plus(&m.scale(-1.0), &ep).unwrap() + q).abs() <= tol);
        prop_assert!((pucci_plus(&m.scale(t), &ep).unwrap() - t * p).abs() <= tol * (1.0 + t));
        let sum = SymMatrix3::from_array(std::array::from_fn(|i| m.to_array()[i] + n.to_array()[i]));
        prop_assert!(pucci_plus(&sum, &ep).unwrap() <= p + pucci_plus(&n, &ep).unwrap() + tol);
        prop_assert!(pucci_minus(&sum, &ep).unwrap() >= q + pucci_minus(&n, &ep).unwrap() - tol);
    }

    #[test]
    fn shear_congruence_preserves_inertia(d in prop::array::uniform3(prop_oneof![-5.0f64..-0.1, 0.1f64..5.0]), a in -3.0f64..3.0) {
        let m = SymMatrix3::diag(d[0], d[1], d[2]);
        let c = shear_matrix(a).unwrap();
        let h = congruence(&c, &m).unwrap();
        prop_assert_eq!(m.inertia().unwrap(), h.inertia().unwrap());
    }

    #[test]
    fn shear_round_trip(p in point(), a in -3.1f64..3.1) {
        let back = shear_inverse(shear_forward(p, a).unwrap(), a).unwrap();
        for k in 0..3 {
            prop_assert!((back[k] - p[k]).abs() <= 1e-9 * (1.0 + p[k].abs()));
        }
    }

    #[test]
    fn domain_and_field_are_octant_symmetric(d in domain(), p in point(), signs in prop::array::uniform3(any::<bool>())) {
        let q: [f64; 3] = std::array::from_fn(|k| if signs[k] { -p[k] } else { p[k] });
        prop_assert_eq!(d.contains(p), d.contains(q));
        if d.contains(p) {
            let f = Eigenfield::new(d);
            let (u, v) = (f.eval(p).unwrap().value, f.eval(q).unwrap().value);
            prop_assert!((u - v).abs() <= 1e-12 * (1.0 + u.abs()));
        }
    }

    #[test]
    fn field_is_positive_and_bounded_inside(d in domain(), p in point()) {
        if d.contains(p) {
            let u = Eigenfield::new(d).eval(p).unwrap().value;
            let c = d.amplitudes();
            prop_assert!(u >= -1e-12);
            prop_assert!(u <= c.iter().sum::<f64>() + 1e-12);
        }
    }

    #[test]
    fn sheared_membership_matches_pullback(d in domain(), p in point()) {
        let x = shear_forward(p, d.sp.a()).unwrap();
        prop_assert_eq!(d.contains(p), d.contains_sheared(x));
    }
}
