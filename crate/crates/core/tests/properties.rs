use coherent_projection::coherent::{overlap_closed, CoherentLabel};
use coherent_projection::fock::{build_canonical_ops, commutator_defect, hermitian_eig, matrix_exp_skewh, OperatorMatrix, TruncationSpec};
use coherent_projection::projector::{group_average_u1, sinc_integral, spectral_interval, ConstraintSpec, SincQuadrature};
use coherent_projection::rkhs::{gram, psd_certificate, Kernel};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn hermitian(n: usize, raw: &[f64]) -> OperatorMatrix {
    let m = DMatrix::from_fn(n, n, |i, j| C64::new(raw[i * n + j], raw[(i * n + j + 7) % raw.len()]));
    OperatorMatrix::hermitian((&m + m.adjoint()) * C64::new(0.5, 0.0)).unwrap()
}

fn label() -> impl Strategy<Value = (f64, f64)> {
    (-2.5f64..2.5, -2.5f64..2.5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exp_group_law(raw in prop::collection::vec(-1.0f64..1.0, 36), s in -2.0f64..2.0, t in -2.0f64..2.0) {
        let a = hermitian(6, &raw);
        let lhs = matrix_exp_skewh(&a, s + t).unwrap();
        let rhs = matrix_exp_skewh(&a, s).unwrap().mul(&matrix_exp_skewh(&a, t).unwrap());
        prop_assert!((lhs.entries() - rhs.entries()).norm() <= 1e-9);
    }

    #[test]
    fn eigen_reconstruction(raw in prop::collection::vec(-3.0f64..3.0, 64)) {
        let a = hermitian(8, &raw);
        let eig = hermitian_eig(&a).unwrap();
        prop_assert!(eig.residual(&a) <= 1e-10);
    }

    #[test]
    fn overlap_symmetry_and_bound(a in label(), b in label()) {
        let (la, lb) = (CoherentLabel::pq(a.0, a.1), CoherentLabel::pq(b.0, b.1));
        let ab = overlap_closed(&la, &lb).unwrap();
        let ba = overlap_closed(&lb, &la).unwrap();
        prop_assert_eq!(ab, ba.conj());
        prop_assert!(ab.norm() <= 1.0);
        prop_assert!((overlap_closed(&la, &la).unwrap() - 1.0).norm() == 0.0);
    }

    #[test]
    fn coherent_gram_is_psd(points in prop::collection::vec(label(), 3..12)) {
        let labels: Vec<Vec<f64>> = points.iter().map(|&(p, q)| vec![p, q]).collect();
        let k = Kernel::coherent_overlap(1);
        prop_assert!(k.hermitian_defect(&labels) <= 1e-12);
        prop_assert!(psd_certificate(&gram(&k, &labels)).unwrap().passes());
    }

    #[test]
    fn scaled_kernel_keeps_eigen_order(points in prop::collection::vec(label(), 4..10), c in 0.1f64..10.0) {
        let labels: Vec<Vec<f64>> = points.iter().map(|&(p, q)| vec![p, q]).collect();
        let k = Kernel::coherent_overlap(1);
        let g = OperatorMatrix::hermitian(gram(&k, &labels)).unwrap();
        let gs = OperatorMatrix::hermitian(gram(&k.scaled(c), &labels)).unwrap();
        let (e, es) = (hermitian_eig(&g).unwrap(), hermitian_eig(&gs).unwrap());
        for (v, vs) in e.values().iter().zip(es.values()) {
            prop_assert!((v * c - vs).abs() <= 1e-9 * c.max(1.0) * e.values().last().unwrap().abs().max(1.0));
        }
    }

    #[test]
    fn spectral_projector_axioms(diag in prop::collection::vec(-3i32..4, 4..12), delta in 0.3f64..0.7) {
        let phi = OperatorMatrix::real_diagonal(&diag.iter().map(|&d| d as f64).collect::<Vec<_>>());
        let spec = ConstraintSpec::single(phi.clone(), delta).unwrap();
        let e = spectral_interval(&spec).unwrap();
        let cert = e.certify();
        prop_assert!(cert.passes());
        let m = e.matrix().entries();
        prop_assert!((m.trace().re - e.rank() as f64).abs() <= 1e-8);
        prop_assert_eq!(e.rank(), diag.iter().filter(|&&d| d == 0).count());
        let sinc = sinc_integral(&phi, delta, SincQuadrature::default()).unwrap();
        prop_assert!((sinc.matrix().entries() - m).norm() <= 1e-6);
    }

    #[test]
    fn group_average_is_gauge_invariant(diag in prop::collection::vec(-3i32..4, 3..10), tau in -10.0f64..10.0) {
        let phi = OperatorMatrix::real_diagonal(&diag.iter().map(|&d| d as f64).collect::<Vec<_>>());
        let e = group_average_u1(&phi, 2.0 * std::f64::consts::PI).unwrap();
        let u = matrix_exp_skewh(&phi, tau).unwrap();
        prop_assert!((u.entries() * e.matrix().entries() - e.matrix().entries()).norm() <= 1e-8);
    }
}

#[test]
fn canonical_commutator_away_from_edge() {
    for (modes, levels) in [(1, 12), (2, 6)] {
        let spec = TruncationSpec::new(modes, levels).unwrap();
        let ops = build_canonical_ops(&spec).unwrap();
        assert!(commutator_defect(&spec, &ops) <= 1e-12);
    }
}
