//! Constrained propagators: exact projected evolution, evolution by `EHE`, the interleaved
//! lattice, Lagrange-multiplier schedules and lambda averages.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{hermitian_eig, Eigen, OperatorMatrix, StateVector};
use crate::projector::{sinc_weight, ConstraintSpec, Projector, SincQuadrature};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PropRoute {
    ExactProjected,
    ReducedEvolution,
    TrotterInterleaved,
    LambdaScheduled,
    LambdaAveraged,
}

/// Time step on the lattice: `T/N` with `N + 1` multiplier factors around `N` evolution steps,
/// or `T/(N+1)` with `N + 1` paired factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LatticeConvention {
    EpsTOverN,
    EpsTOverNPlus1,
}

/// Slice at which the projector enters a scheduled lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EPlacement {
    Initial,
    Final,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorResult {
    pub value: C64,
    pub route: PropRoute,
    pub dim: usize,
    pub residual_budget: f64,
}

/// Piecewise-constant multipliers: `values[l][a]` for `l = 0..=N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaSchedule {
    values: Vec<Vec<f64>>,
    seed: u64,
    convention: LatticeConvention,
}

impl LambdaSchedule {
    pub fn new(values: Vec<Vec<f64>>, seed: u64, convention: LatticeConvention) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Domain("a schedule needs at least one slice (two rows)".into()));
        }
        let a = values[0].len();
        if a == 0 || values.iter().any(|r| r.len() != a) {
            return Err(Error::Domain("schedule rows must share a nonzero width".into()));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Domain("schedule entries must be finite".into()));
        }
        Ok(Self { values, seed, convention })
    }

    pub fn zeros(slices: usize, constraints: usize, convention: LatticeConvention) -> Result<Self> {
        Self::new(vec![vec![0.0; constraints]; slices + 1], 0, convention)
    }

    /// Entries uniform in `[-amplitude, amplitude]` from a seeded ChaCha stream.
    pub fn random(slices: usize, constraints: usize, seed: u64, amplitude: f64, convention: LatticeConvention) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..=slices)
            .map(|_| (0..constraints).map(|_| rng.random_range(-amplitude..=amplitude)).collect())
            .collect();
        Self::new(values, seed, convention)
    }

    /// Samples `lambda(t)` at the left end of each slice.
    pub fn from_fn(slices: usize, t: f64, convention: LatticeConvention, f: impl Fn(f64) -> Vec<f64>) -> Result<Self> {
        let eps = step(t, slices, convention);
        Self::new((0..=slices).map(|l| f(l as f64 * eps)).collect(), 0, convention)
    }

    pub fn slices(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn convention(&self) -> LatticeConvention {
        self.convention
    }
}

pub(crate) fn step(t: f64, n: usize, convention: LatticeConvention) -> f64 {
    match convention {
        LatticeConvention::EpsTOverN => t / n as f64,
        LatticeConvention::EpsTOverNPlus1 => t / (n + 1) as f64,
    }
}

/// Hamiltonian with its spectral decomposition, shared by all routes.
#[derive(Debug, Clone)]
pub struct Evolution {
    h: OperatorMatrix,
    eig: Eigen,
}

impl Evolution {
    pub fn new(h: OperatorMatrix) -> Result<Self> {
        let eig = hermitian_eig(&h)?;
        Ok(Self { h, eig })
    }

    pub fn hamiltonian(&self) -> &OperatorMatrix {
        &self.h
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    /// `e^{-itH} v`.
    pub fn evolve(&self, t: f64, v: &DVector<C64>) -> DVector<C64> {
        self.eig.apply(|l| C64::from_polar(1.0, -t * l), v)
    }

    pub fn propagator(&self, t: f64) -> DMatrix<C64> {
        self.eig.func(|l| C64::from_polar(1.0, -t * l))
    }

    fn budget(&self) -> f64 {
        1e-13 * self.dim() as f64
    }

    fn check(&self, v2: &StateVector, v1: &StateVector, e: Option<&Projector>) -> Result<()> {
        let d = self.dim();
        if v2.dim() != d || v1.dim() != d || e.is_some_and(|e| e.dim() != d) {
            return Err(Error::Domain("propagator inputs differ in dimension".into()));
        }
        Ok(())
    }

    fn result(&self, value: C64, route: PropRoute) -> PropagatorResult {
        PropagatorResult { value, route, dim: self.dim(), residual_budget: self.budget() }
    }
}

/// `<v''| e^{-iTH} E |v'>`.
pub fn exact_projected(ev: &Evolution, v2: &StateVector, v1: &StateVector, e: &Projector, t: f64) -> Result<PropagatorResult> {
    ev.check(v2, v1, Some(e))?;
    let w = ev.evolve(t, &e.apply(v1.amplitudes()));
    Ok(ev.result(v2.amplitudes().dotc(&w), PropRoute::ExactProjected))
}

/// `<v''| E e^{-iT EHE} E |v'>`, computed inside the range of `E` when a basis is known.
pub fn reduced_evolution(ev: &Evolution, v2: &StateVector, v1: &StateVector, e: &Projector, t: f64) -> Result<PropagatorResult> {
    ev.check(v2, v1, Some(e))?;
    let value = match e.basis() {
        Some(b) => {
            if b.ncols() == 0 {
                C64::new(0.0, 0.0)
            } else {
                let hr = b.adjoint() * ev.h.entries() * b;
                let eig = hermitian_eig(&OperatorMatrix::hermitian(hr)?)?;
                let (a2, a1) = (b.adjoint() * v2.amplitudes(), b.adjoint() * v1.amplitudes());
                a2.dotc(&eig.apply(|l| C64::from_polar(1.0, -t * l), &a1))
            }
        }
        None => {
            let em = e.matrix().entries();
            let ehe = OperatorMatrix::hermitian(em * ev.h.entries() * em)?;
            let eig = hermitian_eig(&ehe)?;
            let w = e.apply(&eig.apply(|l| C64::from_polar(1.0, -t * l), &e.apply(v1.amplitudes())));
            v2.amplitudes().dotc(&w)
        }
    };
    Ok(ev.result(value, PropRoute::ReducedEvolution))
}

/// `<v''| E (e^{-i eps H} E)^N |v'>` with `eps = T/N`.
pub fn trotter_interleaved(ev: &Evolution, v2: &StateVector, v1: &StateVector, e: &Projector, t: f64, n: usize) -> Result<PropagatorResult> {
    ev.check(v2, v1, Some(e))?;
    if n == 0 {
        return Err(Error::Domain("the lattice needs N >= 1".into()));
    }
    let u = ev.propagator(t / n as f64);
    let value = match e.basis() {
        Some(b) => {
            let ur = b.adjoint() * &u * b;
            let mut w = b.adjoint() * v1.amplitudes();
            for _ in 0..n {
                w = &ur * w;
            }
            (b.adjoint() * v2.amplitudes()).dotc(&w)
        }
        None => {
            let em = e.matrix().entries();
            let step_op = em * &u;
            let mut w = e.apply(v1.amplitudes());
            for _ in 0..n {
                w = &step_op * w;
            }
            v2.amplitudes().dotc(&w)
        }
    };
    Ok(ev.result(value, PropRoute::TrotterInterleaved))
}

/// Exponentials `e^{-i s Phi_a}` for a fixed constraint set.
struct ConstraintFlow {
    eigs: Vec<Eigen>,
    ops: Vec<OperatorMatrix>,
    commuting: bool,
}

impl ConstraintFlow {
    fn new(phis: &ConstraintSpec) -> Result<Self> {
        let ops = phis.operators().to_vec();
        let commuting = ops
            .iter()
            .enumerate()
            .all(|(i, a)| ops[i + 1..].iter().all(|b| a.commutator(b).norm() <= 1e-10 * (a.entries().norm() * b.entries().norm()).max(1.0)));
        let eigs = if commuting { ops.iter().map(hermitian_eig).collect::<Result<_>>()? } else { Vec::new() };
        Ok(Self { eigs, ops, commuting })
    }

    /// `e^{-i eps lambda^a Phi_a} v`.
    fn apply(&self, eps: f64, lambda: &[f64], v: DVector<C64>) -> Result<DVector<C64>> {
        if self.commuting {
            Ok(self.eigs.iter().zip(lambda).fold(v, |w, (eig, &l)| {
                if l == 0.0 {
                    w
                } else {
                    eig.apply(|x| C64::from_polar(1.0, -eps * l * x), &w)
                }
            }))
        } else {
            let terms: Vec<(f64, &OperatorMatrix)> = lambda.iter().copied().zip(&self.ops).collect();
            let gen = OperatorMatrix::combine(&terms)?;
            Ok(hermitian_eig(&gen)?.apply(|x| C64::from_polar(1.0, -eps * x), &v))
        }
    }
}

/// Time-ordered lattice with multiplier factors from `sched` and one projector insertion.
pub fn lambda_scheduled(
    ev: &Evolution,
    v2: &StateVector,
    v1: &StateVector,
    phis: &ConstraintSpec,
    sched: &LambdaSchedule,
    e: &Projector,
    placement: EPlacement,
    t: f64,
) -> Result<PropagatorResult> {
    ev.check(v2, v1, Some(e))?;
    if sched.values()[0].len() != phis.operators().len() {
        return Err(Error::Domain("schedule width differs from the number of constraints".into()));
    }
    let flow = ConstraintFlow::new(phis)?;
    let n = sched.slices();
    let eps = step(t, n, sched.convention());
    let mut w = v1.amplitudes().clone();
    if placement == EPlacement::Initial {
        w = e.apply(&w);
    }
    let rows = sched.values();
    match sched.convention() {
        LatticeConvention::EpsTOverNPlus1 => {
            for row in rows {
                w = flow.apply(eps, row, w)?;
                w = ev.evolve(eps, &w);
            }
        }
        LatticeConvention::EpsTOverN => {
            for row in &rows[..n] {
                w = flow.apply(eps, row, w)?;
                w = ev.evolve(eps, &w);
            }
            w = flow.apply(eps, &rows[n], w)?;
        }
    }
    if placement == EPlacement::Final {
        w = e.apply(&w);
    }
    Ok(ev.result(v2.amplitudes().dotc(&w), PropRoute::LambdaScheduled))
}

/// Measures over the multipliers for a single constraint, in the variable `u = eps * lambda`.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaMeasure {
    /// Weight `sin(delta u)/(pi u)` on the first slice, point mass at zero elsewhere.
    SingleSliceSinc { delta: f64, quad: SincQuadrature },
    /// The same weight independently on every slice.
    EverySliceSinc { delta: f64, quad: SincQuadrature },
    /// Uniform samples of the first-slice weight on `[-window, window]`.
    MonteCarlo { delta: f64, window: f64, samples: usize, seed: u64, threshold: f64 },
}

/// Average of the `eps = T/N` scheduled lattice over a multiplier measure.
///
/// The sinc measures act on each eigencomponent of `Phi` through the scalar integral of the weight
/// against `e^{-iu phi}`, so the single-slice average inserts the sinc projector once and the
/// every-slice average inserts it at each slice.
pub fn lambda_averaged(
    ev: &Evolution,
    v2: &StateVector,
    v1: &StateVector,
    phi: &OperatorMatrix,
    measure: &LambdaMeasure,
    t: f64,
    n: usize,
) -> Result<PropagatorResult> {
    ev.check(v2, v1, None)?;
    if n == 0 {
        return Err(Error::Domain("the lattice needs N >= 1".into()));
    }
    let eps = t / n as f64;
    let phi_eig = hermitian_eig(phi)?;
    match measure {
        LambdaMeasure::SingleSliceSinc { delta, quad } => {
            let e = crate::projector::sinc_integral(phi, *delta, *quad)?;
            let mut w = e.apply(v1.amplitudes());
            for _ in 0..n {
                w = ev.evolve(eps, &w);
            }
            Ok(ev.result(v2.amplitudes().dotc(&w), PropRoute::LambdaAveraged))
        }
        LambdaMeasure::EverySliceSinc { delta, quad } => {
            let e = crate::projector::sinc_integral(phi, *delta, *quad)?;
            let mut w = e.apply(v1.amplitudes());
            for _ in 0..n {
                w = e.apply(&ev.evolve(eps, &w));
            }
            Ok(ev.result(v2.amplitudes().dotc(&w), PropRoute::LambdaAveraged))
        }
        LambdaMeasure::MonteCarlo { delta, window, samples, seed, threshold } => {
            if *samples < 2 || !(*window > 0.0) {
                return Err(Error::Domain("Monte Carlo needs >= 2 samples and a positive window".into()));
            }
            // g(u) = sum_k conj(a_k) e^{-iu phi_k} b_k in the eigenbasis of Phi
            let vecs = phi_eig.vectors();
            let a = vecs.adjoint() * ev.evolve(-t, v2.amplitudes());
            let b = vecs.adjoint() * v1.amplitudes();
            let ab: Vec<C64> = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).collect();
            let g = |u: f64| -> C64 { ab.iter().zip(phi_eig.values()).map(|(c, &l)| c * C64::from_polar(1.0, -u * l)).sum() };
            let f = |u: f64| if u == 0.0 { delta / std::f64::consts::PI } else { (delta * u).sin() / (std::f64::consts::PI * u) };
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let (mut sum, mut sum2) = (C64::new(0.0, 0.0), 0.0);
            for _ in 0..*samples {
                let u = rng.random_range(-*window..*window);
                let x = g(u) * (2.0 * window * f(u));
                sum += x;
                sum2 += x.norm_sqr();
            }
            let m = *samples as f64;
            let mean = sum / m;
            let var = ((sum2 / m - mean.norm_sqr()) * m / (m - 1.0)).max(0.0);
            let stderr = (var / m).sqrt();
            if stderr > *threshold {
                return Err(Error::Statistical { stderr, threshold: *threshold });
            }
            Ok(PropagatorResult { value: mean, route: PropRoute::LambdaAveraged, dim: ev.dim(), residual_budget: stderr })
        }
    }
}

/// Total weight `int sin(delta u)/(pi u) du` over `[-X, X]` under the sinc truncation policy.
pub fn sinc_total_weight(delta: f64, quad: SincQuadrature) -> f64 {
    let mut xi = quad.xi0;
    let mut prev = sinc_weight(0.0, delta, xi);
    for _ in 0..quad.max_doublings {
        xi *= 2.0;
        let next = sinc_weight(0.0, delta, xi);
        if (next - prev).abs() < quad.tol {
            return next;
        }
        prev = next;
    }
    prev
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{build_canonical_ops, TruncationSpec};
    use crate::projector::spectral_interval;

    fn toy() -> (Evolution, OperatorMatrix, StateVector, StateVector) {
        let spec = TruncationSpec::new(1, 10).unwrap();
        let ops = build_canonical_ops(&spec).unwrap();
        let h = OperatorMatrix::combine(&[(1.0, &ops[0].number), (0.3, &ops[0].q)]).unwrap();
        let v1 = StateVector::basis(10, 1);
        let v2 = StateVector::basis(10, 2);
        (Evolution::new(h).unwrap(), ops[0].p.clone(), v2, v1)
    }

    #[test]
    fn identity_projector_zero_time() {
        let (ev, _, v2, _) = toy();
        let e = Projector::from_basis(DMatrix::identity(10, 10), crate::projector::Route::SpectralInterval, 1.0).unwrap();
        let r = exact_projected(&ev, &v2, &v2, &e, 0.0).unwrap();
        assert!((r.value - C64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn interleaved_single_step_zero_time() {
        let (ev, p, v2, v1) = toy();
        let e = spectral_interval(&ConstraintSpec::single(p, 0.41).unwrap()).unwrap();
        let a = trotter_interleaved(&ev, &v2, &v1, &e, 0.0, 1).unwrap().value;
        assert!((a - e.sandwich(&v2, &v1)).norm() < 1e-14);
    }

    #[test]
    fn zero_schedule_conventions() {
        let (ev, p, v2, v1) = toy();
        let phis = ConstraintSpec::single(p.clone(), 0.41).unwrap();
        let e = spectral_interval(&phis).unwrap();
        let exact = exact_projected(&ev, &v2, &v1, &e, 0.7).unwrap().value;
        for conv in [LatticeConvention::EpsTOverN, LatticeConvention::EpsTOverNPlus1] {
            let s = LambdaSchedule::zeros(5, 1, conv).unwrap();
            let v = lambda_scheduled(&ev, &v2, &v1, &phis, &s, &e, EPlacement::Initial, 0.7).unwrap().value;
            assert!((v - exact).norm() < 1e-12, "{conv:?}");
        }
    }

    #[test]
    fn seeded_schedules_repeat() {
        let a = LambdaSchedule::random(4, 2, 9, 1.0, LatticeConvention::EpsTOverN).unwrap();
        let b = LambdaSchedule::random(4, 2, 9, 1.0, LatticeConvention::EpsTOverN).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.slices(), 4);
    }

    #[test]
    fn sinc_weight_total() {
        assert!((sinc_total_weight(0.5, SincQuadrature::default()) - 1.0).abs() < 1e-6);
    }
}
