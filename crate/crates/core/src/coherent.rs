//! Canonical coherent states `e^{i alpha} e^{-i q.P} e^{i p.Q} |eta>` in a truncated Fock space.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{apply_mode, build_canonical_ops, hermitian_eig, Eigen, StateVector, TruncationSpec};
use crate::quad::GaussLegendre;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseConvention {
    /// `alpha = 0`
    AlphaZero,
    /// `alpha = p.q`, giving the Schrodinger form `e^{ip.x} eta(x - q)`.
    AlphaPq,
    /// `alpha = p.q / 2`, giving `D(z)|eta>` with `z = (q + ip)/sqrt 2`.
    AlphaPqHalf,
}

impl PhaseConvention {
    pub fn alpha(self, p: &[f64], q: &[f64]) -> f64 {
        let pq: f64 = p.iter().zip(q).map(|(a, b)| a * b).sum();
        match self {
            PhaseConvention::AlphaZero => 0.0,
            PhaseConvention::AlphaPq => pq,
            PhaseConvention::AlphaPqHalf => 0.5 * pq,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherentLabel {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub convention: PhaseConvention,
}

impl CoherentLabel {
    pub fn new(p: Vec<f64>, q: Vec<f64>, convention: PhaseConvention) -> Result<Self> {
        if p.len() != q.len() || p.is_empty() {
            return Err(Error::Domain(format!("label lengths p={} q={} must match and be positive", p.len(), q.len())));
        }
        if p.iter().chain(&q).any(|x| !x.is_finite()) {
            return Err(Error::Domain("label entries must be finite".into()));
        }
        Ok(Self { p, q, convention })
    }

    /// Single-mode label with `alpha = 0`.
    pub fn pq(p: f64, q: f64) -> Self {
        Self { p: vec![p], q: vec![q], convention: PhaseConvention::AlphaZero }
    }

    pub fn modes(&self) -> usize {
        self.p.len()
    }

    pub fn with_convention(mut self, convention: PhaseConvention) -> Self {
        self.convention = convention;
        self
    }

    /// Per-mode `z_j = (q_j + i p_j)/sqrt 2`.
    pub fn z(&self) -> Vec<C64> {
        self.p
            .iter()
            .zip(&self.q)
            .map(|(&p, &q)| C64::new(q, p) * std::f64::consts::FRAC_1_SQRT_2)
            .collect()
    }

    /// Label from complex amplitudes `z_j`.
    pub fn from_z(z: &[C64], convention: PhaseConvention) -> Self {
        let s = std::f64::consts::SQRT_2;
        Self {
            p: z.iter().map(|w| w.im * s).collect(),
            q: z.iter().map(|w| w.re * s).collect(),
            convention,
        }
    }

    pub fn max_abs_z(&self) -> f64 {
        self.z().iter().map(|w| w.norm()).fold(0.0, f64::max)
    }
}

/// Single-mode spectral data for `Q` and `P`, reused across many labels.
#[derive(Debug, Clone)]
pub struct CoherentFactory {
    spec: TruncationSpec,
    q_eig: Eigen,
    p_eig: Eigen,
}

impl CoherentFactory {
    pub fn new(spec: TruncationSpec) -> Result<Self> {
        let single = TruncationSpec::new(1, spec.levels())?;
        let ops = build_canonical_ops(&single)?;
        Ok(Self { spec, q_eig: hermitian_eig(&ops[0].q)?, p_eig: hermitian_eig(&ops[0].p)? })
    }

    pub fn spec(&self) -> &TruncationSpec {
        &self.spec
    }

    fn displacement_factors(&self, p: f64, q: f64) -> (DMatrix<C64>, DMatrix<C64>) {
        let eq = self.q_eig.func(|x| C64::from_polar(1.0, p * x));
        let ep = self.p_eig.func(|x| C64::from_polar(1.0, -q * x));
        (eq, ep)
    }

    pub fn vector(&self, label: &CoherentLabel, fiducial: &StateVector) -> Result<StateVector> {
        if label.modes() != self.spec.modes() {
            return Err(Error::Domain(format!(
                "label has {} modes, truncation has {}",
                label.modes(),
                self.spec.modes()
            )));
        }
        if fiducial.dim() != self.spec.dim() {
            return Err(Error::Domain("fiducial dimension does not match truncation".into()));
        }
        if !fiducial.is_normalized() {
            return Err(Error::Precondition("fiducial must be normalized".into()));
        }
        let mut v = fiducial.amplitudes().clone();
        let factors: Vec<_> = (0..label.modes()).map(|j| self.displacement_factors(label.p[j], label.q[j])).collect();
        for (j, (eq, _)) in factors.iter().enumerate() {
            apply_mode(&self.spec, j, eq, &mut v);
        }
        for (j, (_, ep)) in factors.iter().enumerate() {
            apply_mode(&self.spec, j, ep, &mut v);
        }
        let phase = C64::from_polar(1.0, label.convention.alpha(&label.p, &label.q));
        v *= phase;
        let tail = tail_weight(&self.spec, &v);
        if tail > self.spec.tail_tolerance() {
            let suggested = self.spec.levels() + self.spec.levels() / 2 + 8;
            return Err(Error::Truncation { tail, suggested });
        }
        Ok(StateVector::new(v))
    }

    pub fn ground_vector(&self, label: &CoherentLabel) -> Result<StateVector> {
        self.vector(label, &StateVector::vacuum(&self.spec))
    }
}

/// Norm carried by basis states with some mode on the top two retained levels.
pub fn tail_weight(spec: &TruncationSpec, v: &DVector<C64>) -> f64 {
    let cut = spec.levels().saturating_sub(2);
    v.iter()
        .enumerate()
        .filter(|(i, _)| !spec.below(*i, cut))
        .map(|(_, a)| a.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

pub fn coherent_vector(label: &CoherentLabel, spec: &TruncationSpec, fiducial: &StateVector) -> Result<StateVector> {
    CoherentFactory::new(*spec)?.vector(label, fiducial)
}

/// Closed-form Fock amplitudes of a ground-state coherent vector.
pub fn fock_amplitudes(label: &CoherentLabel, spec: &TruncationSpec) -> StateVector {
    let n = spec.levels();
    let per_mode: Vec<Vec<C64>> = label
        .z()
        .iter()
        .map(|&z| {
            let mut amps = Vec::with_capacity(n);
            let mut a = C64::new((-0.5 * z.norm_sqr()).exp(), 0.0);
            for k in 0..n {
                amps.push(a);
                a *= z / ((k + 1) as f64).sqrt();
            }
            amps
        })
        .collect();
    let pq: f64 = label.p.iter().zip(&label.q).map(|(a, b)| a * b).sum();
    let phase = C64::from_polar(1.0, label.convention.alpha(&label.p, &label.q) - 0.5 * pq);
    let v = DVector::from_fn(spec.dim(), |i, _| {
        spec.occupation(i).iter().zip(&per_mode).map(|(&k, amps)| amps[k]).product::<C64>() * phase
    });
    StateVector::new(v)
}

/// Closed-form overlap of two `alpha = 0` ground-state coherent states.
pub fn overlap_closed(l2: &CoherentLabel, l1: &CoherentLabel) -> Result<C64> {
    if l2.convention != PhaseConvention::AlphaZero || l1.convention != PhaseConvention::AlphaZero {
        return Err(Error::Contract("closed-form overlap requires the alpha = 0 convention".into()));
    }
    overlap_any(l2, l1)
}

/// Ground-state overlap for any convention: the `alpha = 0` form times `e^{-i alpha'' + i alpha'}`.
pub fn overlap_any(l2: &CoherentLabel, l1: &CoherentLabel) -> Result<C64> {
    if l2.modes() != l1.modes() {
        return Err(Error::Domain("labels have different mode counts".into()));
    }
    let exponent: C64 = (0..l2.modes())
        .map(|j| {
            let (p2, q2, p1, q1) = (l2.p[j], l2.q[j], l1.p[j], l1.q[j]);
            C64::new(-0.25 * ((p2 - p1).powi(2) + (q2 - q1).powi(2)), 0.5 * (p2 + p1) * (q2 - q1))
        })
        .sum();
    let phase = l1.convention.alpha(&l1.p, &l1.q) - l2.convention.alpha(&l2.p, &l2.q);
    Ok((exponent + C64::new(0.0, phase)).exp())
}

/// Smallest level count (from 16 in steps of 8) at which the numeric vector of the largest label
/// matches its closed-form amplitudes and the closed-form overlap with the origin to `1e-10`.
pub fn auto_levels(labels: &[CoherentLabel], modes: usize, max_dim: usize) -> Result<TruncationSpec> {
    let worst = labels
        .iter()
        .max_by(|a, b| a.max_abs_z().total_cmp(&b.max_abs_z()))
        .ok_or_else(|| Error::Domain("auto truncation needs at least one label".into()))?;
    let zmax = worst.max_abs_z();
    // single-mode probe at the largest |z|, same orientation as the worst mode
    let j = worst.z().iter().enumerate().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).map(|(j, _)| j).unwrap_or(0);
    let probe = CoherentLabel::pq(worst.p[j], worst.q[j]);
    let origin = CoherentLabel::pq(0.0, 0.0);
    let mut n = 16.max((zmax * zmax) as usize + 8);
    loop {
        // fails once the multi-mode dimension would exceed the cap
        TruncationSpec::with_limits(modes, n, 1e-10, max_dim)?;
        let single = TruncationSpec::with_limits(1, n, 1.0, usize::MAX)?;
        let factory = CoherentFactory::new(single)?;
        let v = factory.ground_vector(&probe)?;
        let v0 = factory.ground_vector(&origin)?;
        let exact = fock_amplitudes(&probe, &single);
        let amp_err = (v.amplitudes() - exact.amplitudes()).camax();
        let ov_err = (v0.inner(&v) - overlap_closed(&origin, &probe)?).norm();
        if amp_err <= 1e-11 && ov_err <= 1e-10 && tail_weight(&single, v.amplitudes()) <= 1e-10 {
            return TruncationSpec::with_limits(modes, n, 1e-10, max_dim);
        }
        n += 8;
    }
}

/// Central difference of `i <p,q| d/dq^j |p,q>` for each mode.
pub fn one_form_check(label: &CoherentLabel, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 0.1) {
        return Err(Error::Domain(format!("step {step} outside (0, 0.1]")));
    }
    let mut probe = label.clone();
    for j in 0..label.modes() {
        probe.q[j] += step;
        probe.p[j] = label.p[j];
    }
    let spec = auto_levels(&[probe], label.modes(), crate::fock::DEFAULT_MAX_DIM)?;
    let factory = CoherentFactory::new(spec)?;
    let v = factory.ground_vector(label)?;
    (0..label.modes())
        .map(|j| {
            let mut plus = label.clone();
            let mut minus = label.clone();
            plus.q[j] += step;
            minus.q[j] -= step;
            let d = v.inner(&factory.ground_vector(&plus)?) - v.inner(&factory.ground_vector(&minus)?);
            Ok((C64::new(0.0, 1.0) * d / (2.0 * step)).re)
        })
        .collect()
}

/// Quadrature of `|p,q><p,q| dp dq / 2 pi` over `[-l, l]^2` for one mode, restricted to levels
/// below `block`. Panels double until successive results differ by less than `1e-7`.
pub fn resolution_of_unity(levels: usize, block: usize, l: f64) -> Result<DMatrix<C64>> {
    let spec = TruncationSpec::new(1, levels)?;
    let rule = GaussLegendre::cached(16);
    let eval = |panels: usize| {
        let (xs, ws) = rule.composite(-l, l, panels);
        let mut acc = DMatrix::<C64>::zeros(block, block);
        for (&p, &wp) in xs.iter().zip(&ws) {
            for (&q, &wq) in xs.iter().zip(&ws) {
                let v = fock_amplitudes(&CoherentLabel::pq(p, q), &spec);
                let a = v.amplitudes().rows(0, block);
                acc += (a * a.adjoint()) * C64::new(wp * wq / (2.0 * std::f64::consts::PI), 0.0);
            }
        }
        acc
    };
    let mut panels = 2;
    let mut prev = eval(panels);
    loop {
        panels *= 2;
        let next = eval(panels);
        let change = (&next - &prev).norm();
        if change < 1e-7 {
            return Ok(next);
        }
        if panels >= 64 {
            return Err(Error::Quadrature { prev: prev.norm(), last: next.norm() });
        }
        prev = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize) -> TruncationSpec {
        TruncationSpec::new(1, n).unwrap()
    }

    #[test]
    fn origin_leaves_fiducial() {
        let s = spec(20);
        let f = CoherentFactory::new(s).unwrap();
        for conv in [PhaseConvention::AlphaZero, PhaseConvention::AlphaPq, PhaseConvention::AlphaPqHalf] {
            let v = f.ground_vector(&CoherentLabel::pq(0.0, 0.0).with_convention(conv)).unwrap();
            assert!((v.amplitudes() - StateVector::vacuum(&s).amplitudes()).norm() < 1e-14);
        }
    }

    #[test]
    fn closed_overlap_value() {
        let v = overlap_closed(&CoherentLabel::pq(0.0, 1.0), &CoherentLabel::pq(0.0, 0.0)).unwrap();
        assert!((v.re - 0.778_800_783_071_404_9).abs() < 1e-15 && v.im.abs() < 1e-15);
    }

    #[test]
    fn convention_mismatch() {
        let a = CoherentLabel::pq(0.0, 1.0).with_convention(PhaseConvention::AlphaPq);
        assert!(matches!(overlap_closed(&a, &CoherentLabel::pq(0.0, 0.0)), Err(Error::Contract(_))));
    }

    #[test]
    fn expectations_are_labels() {
        let l = CoherentLabel::pq(1.0, 2.0);
        let s = auto_levels(&[l.clone()], 1, 20_000).unwrap();
        let v = CoherentFactory::new(s).unwrap().ground_vector(&l).unwrap();
        let ops = build_canonical_ops(&s).unwrap();
        assert!((ops[0].q.expectation(&v) - C64::new(2.0, 0.0)).norm() < 1e-9);
        assert!((ops[0].p.expectation(&v) - C64::new(1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn numeric_matches_closed_amplitudes() {
        let l = CoherentLabel::new(vec![0.7, -0.3], vec![-1.1, 0.4], PhaseConvention::AlphaPqHalf).unwrap();
        let s = auto_levels(&[l.clone()], 2, 20_000).unwrap();
        let v = CoherentFactory::new(s).unwrap().ground_vector(&l).unwrap();
        assert!((v.amplitudes() - fock_amplitudes(&l, &s).amplitudes()).camax() < 1e-10);
    }

    #[test]
    fn one_form_origin() {
        let e = one_form_check(&CoherentLabel::pq(0.0, 0.0), 1e-3).unwrap();
        assert!(e[0].abs() < 1e-10);
    }

    #[test]
    fn one_form_order() {
        let l = CoherentLabel::pq(1.0, 2.0);
        assert!((one_form_check(&l, 1e-3).unwrap()[0] - 1.0).abs() < 1e-5);
        let e1 = one_form_check(&l, 0.02).unwrap()[0] - 1.0;
        let e2 = one_form_check(&l, 0.01).unwrap()[0] - 1.0;
        let ratio = e1 / e2;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn truncation_error_reported() {
        let f = CoherentFactory::new(spec(12)).unwrap();
        let err = f.ground_vector(&CoherentLabel::pq(3.0, 3.0)).unwrap_err();
        assert!(matches!(err, Error::Truncation { .. }));
    }
}
