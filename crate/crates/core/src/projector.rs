//! Constraint projectors: spectral interval, sinc integral, one-parameter group average and the
//! rank-one minimum-uncertainty projector.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::coherent::{CoherentFactory, CoherentLabel};
use crate::error::{Error, Result};
use crate::fock::{hermitian_eig, matrix_exp_skewh, Eigen, OperatorMatrix, StateVector, TruncationSpec};
use crate::quad::GaussLegendre;
use crate::special::{factorial, laguerre, sine_integral};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Route {
    SpectralInterval,
    GroupAvgU1,
    SincIntegral,
    Rank1MinUncertainty,
}

#[derive(Debug, Clone)]
pub struct ConstraintSpec {
    operators: Vec<OperatorMatrix>,
    delta: f64,
}

impl ConstraintSpec {
    pub fn new(operators: Vec<OperatorMatrix>, delta: f64) -> Result<Self> {
        let first = operators.first().ok_or_else(|| Error::Contract("no constraint operators".into()))?;
        let dim = first.dim();
        if operators.iter().any(|o| o.dim() != dim) {
            return Err(Error::Contract("constraint operators differ in dimension".into()));
        }
        if operators.iter().any(|o| !o.is_hermitian()) {
            return Err(Error::Contract("constraint operators must be hermitian".into()));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Domain(format!("delta = {delta} must be positive")));
        }
        Ok(Self { operators, delta })
    }

    pub fn single(op: OperatorMatrix, delta: f64) -> Result<Self> {
        Self::new(vec![op], delta)
    }

    pub fn operators(&self) -> &[OperatorMatrix] {
        &self.operators
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn dim(&self) -> usize {
        self.operators[0].dim()
    }

    /// `sum_a Phi_a Phi_a`.
    pub fn square_sum(&self) -> Result<OperatorMatrix> {
        let sum = self
            .operators
            .iter()
            .map(|o| o.entries() * o.entries())
            .fold(DMatrix::zeros(self.dim(), self.dim()), |acc, m| acc + m);
        OperatorMatrix::hermitian(sum)
    }

    /// Same operators with `delta` at the midpoint of the widest gap in the spectrum of
    /// `sum Phi^2` between `lo^2` and `hi^2` (the interval ends count as gap edges).
    pub fn with_gap_delta(operators: Vec<OperatorMatrix>, lo: f64, hi: f64) -> Result<Self> {
        let probe = Self::new(operators, hi)?;
        let eig = hermitian_eig(&probe.square_sum()?)?;
        let mut edges: Vec<f64> = vec![lo * lo];
        edges.extend(eig.values().iter().copied().filter(|&v| v > lo * lo && v < hi * hi));
        edges.push(hi * hi);
        let (a, b) = edges
            .windows(2)
            .map(|w| (w[0], w[1]))
            .max_by(|x, y| (x.1 - x.0).total_cmp(&(y.1 - y.0)))
            .expect("at least two edges");
        Self::new(probe.operators, (0.5 * (a + b)).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    pub idempotency: f64,
    pub hermiticity: f64,
    pub trace_gap: f64,
    pub dim: usize,
}

impl Certificate {
    pub fn passes(&self) -> bool {
        let d = self.dim as f64;
        self.idempotency <= 1e-10 * d && self.hermiticity <= 1e-12 * d && self.trace_gap <= 1e-8
    }
}

#[derive(Debug, Clone)]
pub struct Projector {
    matrix: OperatorMatrix,
    rank: usize,
    route: Route,
    delta: f64,
    basis: Option<DMatrix<C64>>,
}

impl Projector {
    /// Wraps a hermitian matrix; the rank is the rounded trace.
    pub fn from_matrix(matrix: DMatrix<C64>, route: Route, delta: f64) -> Result<Self> {
        let matrix = OperatorMatrix::hermitian(matrix)?;
        let rank = matrix.entries().trace().re.round().max(0.0) as usize;
        Ok(Self { matrix, rank, route, delta, basis: None })
    }

    /// `E = B B^dag` for orthonormal columns `B`.
    pub fn from_basis(basis: DMatrix<C64>, route: Route, delta: f64) -> Result<Self> {
        let e = &basis * basis.adjoint();
        let mut p = Self::from_matrix(e, route, delta)?;
        p.rank = basis.ncols();
        p.basis = Some(basis);
        Ok(p)
    }

    pub fn matrix(&self) -> &OperatorMatrix {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn route(&self) -> Route {
        self.route
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Orthonormal basis of the range when the construction produced one.
    pub fn basis(&self) -> Option<&DMatrix<C64>> {
        self.basis.as_ref()
    }

    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        match &self.basis {
            Some(b) => b * (b.adjoint() * v),
            None => self.matrix.entries() * v,
        }
    }

    /// `<v''| E |v'>`.
    pub fn sandwich(&self, v2: &StateVector, v1: &StateVector) -> C64 {
        v2.amplitudes().dotc(&self.apply(v1.amplitudes()))
    }

    pub fn certify(&self) -> Certificate {
        let e = self.matrix.entries();
        Certificate {
            idempotency: (e * e - e).norm(),
            hermiticity: (e - e.adjoint()).norm(),
            trace_gap: (e.trace().re - self.rank as f64).abs(),
            dim: self.dim(),
        }
    }
}

const EIGEN_MARGIN: f64 = 1e-6;

/// Indicator of `sum Phi^2 < delta^2` in its eigenbasis.
pub fn spectral_interval(phi: &ConstraintSpec) -> Result<Projector> {
    let eig = hermitian_eig(&phi.square_sum()?)?;
    let d2 = phi.delta() * phi.delta();
    check_margin(&eig, d2)?;
    Projector::from_basis(eig.subspace(|v| v < d2), Route::SpectralInterval, phi.delta())
}

fn check_margin(eig: &Eigen, d2: f64) -> Result<()> {
    let vals = eig.values();
    if let Some(k) = vals.iter().position(|v| (v - d2).abs() <= EIGEN_MARGIN) {
        let e = vals[k];
        let below = vals[..k].iter().rev().find(|&&v| v < e - EIGEN_MARGIN).copied().unwrap_or(0.0);
        let above = vals[k..].iter().find(|&&v| v > e + EIGEN_MARGIN).copied().unwrap_or(2.0 * e + 1.0);
        let mid = if e - below > above - e { 0.5 * (below + e) } else { 0.5 * (e + above) };
        return Err(Error::IllConditioned { eigenvalue: e, margin: EIGEN_MARGIN, suggested: mid.sqrt() });
    }
    Ok(())
}

/// Truncation policy for the improper sinc integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SincQuadrature {
    /// Starting half-width of the `xi` domain.
    pub xi0: f64,
    /// Stop once a doubling changes the matrix by less than this in Frobenius norm.
    pub tol: f64,
    pub max_doublings: u32,
}

impl Default for SincQuadrature {
    fn default() -> Self {
        Self { xi0: 8.0, tol: 1e-7, max_doublings: 80 }
    }
}

/// `int_{-X}^{X} e^{-i xi lam} sin(delta xi) / (pi xi) dxi`.
pub fn sinc_weight(lam: f64, delta: f64, xi: f64) -> f64 {
    (sine_integral((delta + lam) * xi) + sine_integral((delta - lam) * xi)) / PI
}

/// `int e^{-i xi Phi} sin(delta xi)/(pi xi) dxi` over `[-X, X]`, with `X` doubled until the result
/// settles. The integral is evaluated per eigenvalue of `Phi`.
pub fn sinc_integral(phi: &OperatorMatrix, delta: f64, quad: SincQuadrature) -> Result<Projector> {
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("delta = {delta} must be positive")));
    }
    let eig = hermitian_eig(phi)?;
    let vals = eig.values();
    let weights = |xi: f64| -> Vec<f64> { vals.iter().map(|&l| sinc_weight(l, delta, xi)).collect() };
    let mut xi = quad.xi0;
    let mut prev = weights(xi);
    let mut change = f64::INFINITY;
    for _ in 0..quad.max_doublings {
        xi *= 2.0;
        let next = weights(xi);
        // eigenvectors are orthonormal, so the Frobenius change is the weight change
        change = prev.iter().zip(&next).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        prev = next;
        if change < quad.tol {
            let w: Vec<C64> = prev.iter().map(|&x| C64::new(x, 0.0)).collect();
            return Projector::from_matrix(eig.weighted(&w), Route::SincIntegral, delta);
        }
    }
    Err(Error::Quadrature { prev: change, last: quad.tol })
}

/// Eigenvalues on a common lattice `(k + theta) * 2 pi / period`; returns `theta` in `[0, 1)`.
pub fn lattice_offset(values: &[f64], period: f64) -> Result<f64> {
    let spacing = 2.0 * PI / period;
    let frac = |v: f64| {
        let x = v / spacing;
        x - x.floor()
    };
    let theta = frac(*values.first().ok_or_else(|| Error::Precondition("empty spectrum".into()))?);
    for &v in values {
        let d = (frac(v) - theta).abs();
        if d.min(1.0 - d) > 1e-8 {
            return Err(Error::Precondition(format!("eigenvalue {v} is off the lattice of spacing {spacing}")));
        }
    }
    Ok(if theta.min(1.0 - theta) <= 1e-8 { 0.0 } else { theta })
}

/// Projector onto the kernel of `Phi` from the period average of `e^{i lam Phi}`, evaluated in
/// the eigenbasis. An offset lattice has no zero eigenvalue and gives rank 0.
pub fn group_average_u1(phi: &OperatorMatrix, period: f64) -> Result<Projector> {
    if !(period > 0.0) {
        return Err(Error::Domain(format!("period = {period} must be positive")));
    }
    let eig = hermitian_eig(phi)?;
    let spacing = 2.0 * PI / period;
    let theta = lattice_offset(eig.values(), period)?;
    let zero = |v: f64| theta == 0.0 && (v / spacing).abs() <= 1e-8;
    Projector::from_basis(eig.subspace(zero), Route::GroupAvgU1, 0.0)
}

/// `(1/M) sum_m e^{i tau_m Phi}` on `M` equispaced points of the period.
pub fn group_average_trapezoid(phi: &OperatorMatrix, period: f64, points: usize) -> Result<DMatrix<C64>> {
    let eig = hermitian_eig(phi)?;
    Ok(eig.func(|lam| {
        (0..points)
            .map(|m| C64::from_polar(1.0, lam * period * m as f64 / points as f64))
            .sum::<C64>()
            / points as f64
    }))
}

/// `|p0,q0><p0,q0|` for the ground-state coherent vector at `target`.
pub fn rank1_min_uncertainty(target: &CoherentLabel, spec: &TruncationSpec) -> Result<Projector> {
    let v = CoherentFactory::new(*spec)?.ground_vector(target)?;
    let v = v.normalized()?;
    let basis = DMatrix::from_column_slice(v.dim(), 1, v.amplitudes().as_slice());
    Projector::from_basis(basis, Route::Rank1MinUncertainty, 0.0)
}

/// `<m| D(beta) |n>` in the untruncated oscillator.
pub fn displacement_element(m: usize, n: usize, beta: C64) -> C64 {
    let x = beta.norm_sqr();
    let g = (-0.5 * x).exp();
    if m >= n {
        let k = m - n;
        beta.powu(k as u32) * ((factorial(n) / factorial(m)).sqrt() * g * laguerre(n, k as f64, x))
    } else {
        let k = n - m;
        (-beta.conj()).powu(k as u32) * ((factorial(m) / factorial(n)).sqrt() * g * laguerre(m, k as f64, x))
    }
}

/// Levels-below-`block` corner of `int e^{-i lam (P - p0) - i xi (Q - q0)} e^{-(lam^2 + xi^2)/4}
/// dlam dxi / 2 pi` over `[-l, l]^2`, with the total Gaussian weight of the rule.
pub fn weyl_projector_block(target: &CoherentLabel, block: usize, l: f64, order: usize, panels: usize) -> (DMatrix<C64>, f64) {
    let (p0, q0) = (target.p[0], target.q[0]);
    let (xs, ws) = GaussLegendre::cached(order).composite(-l, l, panels);
    let mut acc = DMatrix::<C64>::zeros(block, block);
    let mut mass = 0.0;
    for (&lam, &wl) in xs.iter().zip(&ws) {
        for (&xi, &wx) in xs.iter().zip(&ws) {
            let w = wl * wx * (-(lam * lam + xi * xi) / 4.0).exp() / (2.0 * PI);
            mass += w;
            // -i(lam P + xi Q) = beta a^dag - conj(beta) a with beta = (lam - i xi)/sqrt 2
            let beta = C64::new(lam, -xi) * std::f64::consts::FRAC_1_SQRT_2;
            let phase = C64::from_polar(w, lam * p0 + xi * q0);
            for m in 0..block {
                for n in 0..block {
                    acc[(m, n)] += phase * displacement_element(m, n, beta);
                }
            }
        }
    }
    (acc, mass)
}

/// `|| e^{-iTH} E - E e^{-iTH} E ||_F`.
pub fn compat_check(e: &Projector, h: &OperatorMatrix, t: f64) -> Result<f64> {
    let u = matrix_exp_skewh(h, t)?;
    let ue = u.entries() * e.matrix().entries();
    Ok((&ue - e.matrix().entries() * &ue).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::build_canonical_ops;

    #[test]
    fn large_delta_gives_identity() {
        let e = spectral_interval(&ConstraintSpec::single(OperatorMatrix::real_diagonal(&[0.2, -1.0, 3.0]), 10.0).unwrap()).unwrap();
        assert_eq!(e.rank(), 3);
        assert!((e.matrix().entries() - DMatrix::<C64>::identity(3, 3)).norm() < 1e-14);
    }

    #[test]
    fn small_delta_gives_zero() {
        let e = spectral_interval(&ConstraintSpec::single(OperatorMatrix::real_diagonal(&[0.2, -1.0, 3.0]), 0.1).unwrap()).unwrap();
        assert_eq!(e.rank(), 0);
        assert!(e.matrix().entries().norm() == 0.0);
    }

    #[test]
    fn straddled_eigenvalue_rejected() {
        let err = spectral_interval(&ConstraintSpec::single(OperatorMatrix::real_diagonal(&[0.0, 0.5, 2.0]), 0.5).unwrap()).unwrap_err();
        match err {
            Error::IllConditioned { suggested, .. } => assert!(suggested > 0.5 && suggested < 2.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn diagonal_sinc() {
        let e = sinc_integral(&OperatorMatrix::real_diagonal(&[0.0, 1.0]), 0.5, SincQuadrature::default()).unwrap();
        let m = e.matrix().entries();
        assert!((m[(0, 0)].re - 1.0).abs() < 1e-6 && m[(1, 1)].re.abs() < 1e-6);
    }

    #[test]
    fn sinc_matches_spectral_for_momentum() {
        let ops = build_canonical_ops(&TruncationSpec::new(1, 40).unwrap()).unwrap();
        let spec = ConstraintSpec::single(ops[0].p.clone(), 0.5).unwrap();
        let a = spectral_interval(&spec).unwrap();
        let b = sinc_integral(&ops[0].p, 0.5, SincQuadrature::default()).unwrap();
        assert!((a.matrix().entries() - b.matrix().entries()).norm() <= 1e-6);
        assert_eq!(a.rank(), b.rank());
    }

    #[test]
    fn offset_lattice_has_no_kernel() {
        let phi = OperatorMatrix::real_diagonal(&[-1.4, 0.6, 2.6]);
        assert_eq!(group_average_u1(&phi, PI).unwrap().rank(), 0);
        let uneven = OperatorMatrix::real_diagonal(&[0.0, 0.6, 2.0]);
        assert!(matches!(group_average_u1(&uneven, PI), Err(Error::Precondition(_))));
    }

    #[test]
    fn trapezoid_average_is_indicator() {
        let phi = OperatorMatrix::real_diagonal(&[-2.0, 0.0, 0.0, 4.0]);
        let e = group_average_u1(&phi, PI).unwrap();
        let t = group_average_trapezoid(&phi, PI, 256).unwrap();
        assert!((e.matrix().entries() - t).norm() < 1e-12);
        assert_eq!(e.rank(), 2);
    }

    #[test]
    fn displacement_unitary_columns() {
        let beta = C64::new(0.4, -0.3);
        let col: f64 = (0..60).map(|m| displacement_element(m, 2, beta).norm_sqr()).sum();
        assert!((col - 1.0).abs() < 1e-13);
    }

    #[test]
    fn compat_zero_time() {
        let ops = build_canonical_ops(&TruncationSpec::new(1, 12).unwrap()).unwrap();
        let e = spectral_interval(&ConstraintSpec::single(ops[0].p.clone(), 0.37).unwrap()).unwrap();
        assert!(compat_check(&e, &ops[0].q, 0.0).unwrap() < 1e-13);
    }
}
