//! Randomized invariants of the entropy generators.

use proptest::prelude::*;
use traceform::{AdditivityClass, EntropicFunctional, SlopeAtZero};

fn tsallis_q() -> impl Strategy<Value = f64> {
    prop_oneof![0.05f64..0.95, 1.05f64..12.0]
}

fn exponential_q() -> impl Strategy<Value = f64> {
    prop_oneof![-12.0f64..-0.01, 0.01f64..12.0]
}

fn scale_k() -> impl Strategy<Value = f64> {
    0.1f64..4.0
}

fn any_builtin() -> impl Strategy<Value = EntropicFunctional> {
    prop_oneof![
        scale_k().prop_map(|k| EntropicFunctional::shannon(k).unwrap()),
        (tsallis_q(), scale_k()).prop_map(|(q, k)| EntropicFunctional::tsallis(q, k).unwrap()),
        (exponential_q(), scale_k())
            .prop_map(|(q, k)| EntropicFunctional::exponential(q, k).unwrap()),
        scale_k().prop_map(|k| EntropicFunctional::exponential(0.0, k).unwrap()),
    ]
}

proptest! {
    #[test]
    fn construction_upholds_endpoints_and_concavity(f in any_builtin(), p in 0.001f64..0.999) {
        prop_assert!(f.f(0.0).abs() <= 1e-12);
        prop_assert!(f.f(1.0).abs() <= 1e-12);
        prop_assert!(f.d2f(p) <= 0.0, "{} at p={p}: {}", f.name(), f.d2f(p));
        prop_assert!(f.f(p).is_finite());
    }

    #[test]
    fn derivatives_chain_by_finite_differences(f in any_builtin(), p in 0.05f64..0.95) {
        let h = 1e-5;
        let fd1 = (f.f(p + h) - f.f(p - h)) / (2.0 * h);
        prop_assert!((fd1 - f.df(p)).abs() <= 1e-5 * (1.0 + f.df(p).abs()),
            "{}: f' fd {fd1} vs {}", f.name(), f.df(p));
        let fd2 = (f.df(p + h) - f.df(p - h)) / (2.0 * h);
        prop_assert!((fd2 - f.d2f(p)).abs() <= 1e-4 * (1.0 + f.d2f(p).abs()),
            "{}: f'' fd {fd2} vs {}", f.name(), f.d2f(p));
        let fd3 = (f.d2f(p + h) - f.d2f(p - h)) / (2.0 * h);
        prop_assert!((fd3 - f.d3f(p)).abs() <= 1e-3 * (1.0 + f.d3f(p).abs()),
            "{}: f''' fd {fd3} vs {}", f.name(), f.d3f(p));
    }

    #[test]
    fn slope_bookkeeping_matches_limits(f in any_builtin()) {
        prop_assert_eq!(f.slope_at_one(), f.df(1.0));
        match f.slope_at_zero() {
            SlopeAtZero::Finite(c) => {
                // the gap closes like p^(q-1) for Tsallis, so the probe
                // point must be extreme to cover exponents near zero
                prop_assert!((f.df(1e-250) - c).abs() <= 1e-4 * (1.0 + c.abs()),
                    "{}: df near 0 {} vs recorded {c}", f.name(), f.df(1e-250));
            }
            SlopeAtZero::Divergent => {
                prop_assert!(f.df(1e-12) > f.df(1e-3));
                prop_assert!(f.df(1e-200) > f.df(1e-12));
            }
        }
    }

    #[test]
    fn inverse_of_slope_round_trips(f in any_builtin(), p in 0.001f64..0.999) {
        // the inverse is 1/f''-conditioned; at large q the slope flattens to
        // its ceiling within float resolution and no inverse can recover p
        prop_assume!(f.d2f(p).abs() >= 1e-6);
        let h = f.df(p);
        let back = f.inverse_df(h).unwrap();
        prop_assert!((back - p).abs() <= 1e-8, "{}: p={p} -> h={h} -> {back}", f.name());
    }

    #[test]
    fn inverse_saturates_outside_the_slope_range(f in any_builtin()) {
        if let SlopeAtZero::Finite(c) = f.slope_at_zero() {
            prop_assert_eq!(f.inverse_df(c).unwrap(), 0.0);
            prop_assert_eq!(f.inverse_df(c + 1.0).unwrap(), 0.0);
        }
        prop_assert!(f.inverse_df(f.slope_at_one() - 1.0).is_err());
    }

    #[test]
    fn mirror_composes_pointwise(f in any_builtin(), p in 0.0f64..=1.0) {
        let m = f.mirror();
        prop_assert!((m.f(p) - f.f(1.0 - p)).abs() <= 1e-12);
        let back = m.mirror();
        prop_assert!((back.f(p) - f.f(p)).abs() <= 1e-12);
    }

    #[test]
    fn values_scale_linearly_in_k(q in tsallis_q(), k in scale_k(), p in 0.001f64..0.999) {
        let one = EntropicFunctional::tsallis(q, 1.0).unwrap();
        let scaled = EntropicFunctional::tsallis(q, k).unwrap();
        prop_assert!((scaled.f(p) - k * one.f(p)).abs() <= 1e-12 * (1.0 + k * one.f(p).abs()));
        prop_assert!((scaled.df(p) - k * one.df(p)).abs() <= 1e-10 * (1.0 + (k * one.df(p)).abs()));
    }

    #[test]
    fn additivity_class_is_grid_stable(f in any_builtin()) {
        prop_assert_eq!(f.classify_additivity(100), f.classify_additivity(1000));
    }

    #[test]
    fn curvature_ratio_matches_family_gamma(q in exponential_q()) {
        let f = EntropicFunctional::exponential(q, 1.0).unwrap();
        prop_assert!((f.gamma_coefficient() - (-q / 4.0)).abs() <= 1e-12);
        let direct = -f.d3f(0.25) / (4.0 * f.d2f(0.25));
        prop_assert!((direct - f.gamma_coefficient()).abs() <= 1e-9 * (1.0 + direct.abs()));
    }
}

#[test]
fn classification_table_for_reference_parameters() {
    let cases: [(&str, AdditivityClass); 6] = [
        ("shannon", AdditivityClass::Additive),
        ("tsallis:q=2", AdditivityClass::SubAdditive),
        ("tsallis:q=0.5", AdditivityClass::SuperAdditive),
        ("quadratic", AdditivityClass::SubAdditive),
        ("exponential:q=-0.5", AdditivityClass::SubAdditive),
        ("exponential:q=-2", AdditivityClass::Indeterminate),
    ];
    for (spec, want) in cases {
        let f = EntropicFunctional::parse(spec).unwrap();
        assert_eq!(f.classify_additivity(500), want, "{spec}");
    }
}

#[test]
fn parse_round_trips_the_display_name() {
    for spec in [
        "shannon",
        "shannon:k=2",
        "tsallis:q=1.5",
        "tsallis:q=3,k=0.5",
        "exponential:q=-4",
        "quadratic",
        "quadratic:k=0.25",
    ] {
        let f = EntropicFunctional::parse(spec).unwrap();
        let again = EntropicFunctional::parse(f.name()).unwrap();
        assert_eq!(f.name(), again.name(), "{spec}");
        for p in [0.1, 0.5, 0.9] {
            assert_eq!(f.f(p), again.f(p), "{spec} at {p}");
        }
    }
}
