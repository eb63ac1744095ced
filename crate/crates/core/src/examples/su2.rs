//! Two oscillators constrained to fixed total excitation: a spin-`s` carrier space.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{build_canonical_ops, OperatorMatrix, TruncationSpec};
use crate::projector::{group_average_u1, Projector};
use crate::special::factorial;

pub struct Su2Generators {
    pub sx: OperatorMatrix,
    pub sy: OperatorMatrix,
    pub sz: OperatorMatrix,
}

fn two_s_integer(two_s: f64) -> Result<u32> {
    if two_s < 0.0 || (two_s - two_s.round()).abs() > 1e-12 {
        return Err(Error::Domain(format!("2s = {two_s} is not a nonnegative integer")));
    }
    Ok(two_s.round() as u32)
}

/// `exp[-sum(|z''|^2 + |z'|^2)/2] (z''^* . z')^{2s} / (2s)!`.
pub fn su2_projected_kernel(z2: &[C64; 2], z1: &[C64; 2], two_s: f64) -> Result<C64> {
    let n = two_s_integer(two_s)?;
    let gauss = (-0.5 * (z2.iter().chain(z1).map(|z| z.norm_sqr()).sum::<f64>())).exp();
    let dot = z2[0].conj() * z1[0] + z2[1].conj() * z1[1];
    Ok(dot.powu(n) * (gauss / factorial(n as usize)))
}

/// `:P1^2 + P2^2 + Q1^2 + Q2^2: - 4s = 2(N1 + N2) - 4s`.
pub fn su2_constraint(spec: &TruncationSpec, two_s: f64) -> Result<OperatorMatrix> {
    if spec.modes() != 2 {
        return Err(Error::Domain("the spin constraint needs two modes".into()));
    }
    let ops = build_canonical_ops(spec)?;
    Ok(OperatorMatrix::combine(&[(2.0, &ops[0].number), (2.0, &ops[1].number)])?.shifted(-2.0 * two_s))
}

/// Projector on the constraint kernel by averaging over the period `pi`.
pub fn su2_projector(spec: &TruncationSpec, two_s: f64) -> Result<Projector> {
    group_average_u1(&su2_constraint(spec, two_s)?, std::f64::consts::PI)
}

pub fn su2_generators(spec: &TruncationSpec) -> Result<Su2Generators> {
    if spec.modes() != 2 {
        return Err(Error::Domain("spin generators need two modes".into()));
    }
    let ops = build_canonical_ops(spec)?;
    let hop = ops[0].a_dag.entries() * ops[1].a.entries();
    let hop_back = hop.adjoint();
    let half = C64::new(0.5, 0.0);
    let sx = OperatorMatrix::hermitian((&hop + &hop_back) * half)?;
    let sy = OperatorMatrix::hermitian((&hop - &hop_back) * C64::new(0.0, -0.5))?;
    let sz = OperatorMatrix::hermitian((ops[0].number.entries() - ops[1].number.entries()) * half)?;
    Ok(Su2Generators { sx, sy, sz })
}

/// Classical symbols `(p1 p2 + q1 q2)/2`, `(q1 p2 - p1 q2)/2`, `(p1^2 + q1^2 - p2^2 - q2^2)/4`.
pub fn su2_symbols(p: [f64; 2], q: [f64; 2]) -> [f64; 3] {
    [
        0.5 * (p[0] * p[1] + q[0] * q[1]),
        0.5 * (q[0] * p[1] - p[0] * q[1]),
        0.25 * (p[0] * p[0] + q[0] * q[0] - p[1] * p[1] - q[1] * q[1]),
    ]
}

/// `max |[S_x, S_y] - i S_z|` over basis pairs whose occupations stay below `levels - 1`.
pub fn su2_algebra_defect(spec: &TruncationSpec, g: &Su2Generators) -> f64 {
    let c: DMatrix<C64> = g.sx.commutator(&g.sy) - g.sz.entries() * C64::new(0.0, 1.0);
    let mut worst = 0.0f64;
    for j in (0..spec.dim()).filter(|&j| spec.is_interior(j)) {
        for i in (0..spec.dim()).filter(|&i| spec.is_interior(i)) {
            worst = worst.max(c[(i, j)].norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spin_zero_is_vacuum_product() {
        let z2 = [C64::new(0.3, 0.1), C64::new(-0.2, 0.5)];
        let z1 = [C64::new(0.0, 0.4), C64::new(0.7, 0.0)];
        let k = su2_projected_kernel(&z2, &z1, 0.0).unwrap();
        let g: f64 = z2.iter().chain(&z1).map(|z| z.norm_sqr()).sum();
        assert!((k.re - (-0.5 * g).exp()).abs() < 1e-15);
    }

    #[test]
    fn origin_spin_half_vanishes() {
        let z = [C64::new(0.0, 0.0); 2];
        assert_eq!(su2_projected_kernel(&z, &z, 1.0).unwrap(), C64::new(0.0, 0.0));
        assert!(su2_projected_kernel(&z, &z, 0.7).is_err());
    }

    #[test]
    fn ranks() {
        let spec = TruncationSpec::new(2, 6).unwrap();
        for two_s in [1.0, 2.0, 3.0] {
            assert_eq!(su2_projector(&spec, two_s).unwrap().rank(), two_s as usize + 1);
        }
        assert_eq!(su2_projector(&spec, 0.7).unwrap().rank(), 0);
    }

    #[test]
    fn generators_commute_with_constraint() {
        let spec = TruncationSpec::new(2, 6).unwrap();
        let g = su2_generators(&spec).unwrap();
        let phi = su2_constraint(&spec, 1.0).unwrap();
        for s in [&g.sx, &g.sy, &g.sz] {
            assert_eq!(s.commutator(&phi).norm(), 0.0);
        }
        assert!(su2_algebra_defect(&spec, &g) < 1e-12);
    }
}
