use coherent_projection::coherent::CoherentLabel;
use coherent_projection::examples::{limit_kernel, projected_p_exact};
use proptest::prelude::*;
use statrs::function::erf::erf;

// statrs erf is good to about 5e-11
const ERF_ACCURACY: f64 = 1e-9;

// completing the square at coincident q: e^{-(p''-p')^2/4} (erf(delta - s) + erf(delta + s)) / 2, s = (p''+p')/2
fn coincident_q(p2: f64, p1: f64, delta: f64) -> f64 {
    let s = 0.5 * (p2 + p1);
    (-(p2 - p1).powi(2) / 4.0).exp() * 0.5 * (erf(delta - s) + erf(delta + s))
}

#[test]
fn origin_is_erf() {
    for delta in [0.05, 0.1, 0.2, 0.5] {
        let v = projected_p_exact(&CoherentLabel::pq(0.0, 0.3), &CoherentLabel::pq(0.0, 0.3), delta).unwrap();
        assert!((v.re - erf(delta)).abs() < ERF_ACCURACY && v.im.abs() < 1e-15, "delta {delta}: {v} vs {}", erf(delta));
    }
}

#[test]
fn limit_kernel_values() {
    assert_eq!(limit_kernel(&CoherentLabel::pq(0.0, 1.0), &CoherentLabel::pq(0.0, -2.0)), 1.0);
    assert!((limit_kernel(&CoherentLabel::pq(1.0, 0.0), &CoherentLabel::pq(0.0, 0.0)) - 0.6065306597126334).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projected_p_matches_erf_oracle(p2 in -2.0f64..2.0, p1 in -2.0f64..2.0, q in -3.0f64..3.0, delta in 0.01f64..0.6) {
        let v = projected_p_exact(&CoherentLabel::pq(p2, q), &CoherentLabel::pq(p1, q), delta).unwrap();
        prop_assert!((v.re - coincident_q(p2, p1, delta)).abs() < ERF_ACCURACY);
        prop_assert!(v.im.abs() < 1e-14);
    }
}
