//! Two oscillators plus a free particle with the first-class constraint `P3 + g L3 = 0`,
//! `L3 = i(a1 a2^dag - a1^dag a2)`, and Hamiltonian `omega (N1 + N2) + P3^2 / 2`.
//!
//! The regularized projector factorizes over the `L3 = m` sectors,
//! `E = sum_m E(L3 = m) (x) E(|P3 + g m| < delta)`, so each route is a sum over `m` of a two-mode
//! factor times a one-dimensional momentum integral.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::coherent::{auto_levels, fock_amplitudes, CoherentLabel, PhaseConvention};
use crate::error::{Error, Result};
use crate::fock::{build_canonical_ops, hermitian_eig, OperatorMatrix, TruncationSpec};
use crate::propagator::{step, LambdaSchedule};
use crate::quad::integrate_adaptive;
use crate::special::{bessel_i, factorial};

const DROP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlprParams {
    pub g: f64,
    pub omega: f64,
    pub delta: f64,
    pub m_cutoff: usize,
}

impl FlprParams {
    pub fn new(g: f64, omega: f64, delta: f64, m_cutoff: usize) -> Result<Self> {
        if !(g > 0.0 && omega > 0.0 && delta > 0.0) {
            return Err(Error::Domain(format!("g = {g}, omega = {omega}, delta = {delta} must be positive")));
        }
        if delta >= g / 10.0 {
            return Err(Error::Domain(format!("delta = {delta} must stay below g/10 = {}", g / 10.0)));
        }
        if m_cutoff == 0 {
            return Err(Error::Domain("m_cutoff must be positive".into()));
        }
        Ok(Self { g, omega, delta, m_cutoff })
    }

    /// Smallest cutoff whose dropped sectors are below `1e-12` for momenta up to `p3_max`.
    pub fn with_auto_cutoff(g: f64, omega: f64, delta: f64, p3_max: f64) -> Result<Self> {
        let probe = Self::new(g, omega, delta, 1)?;
        let mut m = 1;
        while probe.dropped_bound(m, p3_max) >= DROP_TOL {
            m += 1;
        }
        Self::new(g, omega, delta, m)
    }

    /// Gaussian weight of the first dropped sector, `e^{-(g(M+1) - |p3|)^2} 2 delta / sqrt(pi)`.
    pub fn dropped_bound(&self, m_cutoff: usize, p3_max: f64) -> f64 {
        let gap = (self.g * (m_cutoff + 1) as f64 - p3_max).max(0.0);
        (-gap * gap).exp() * 2.0 * self.delta / PI.sqrt()
    }

    fn check_cutoff(&self, p3_max: f64) -> Result<()> {
        let bound = self.dropped_bound(self.m_cutoff, p3_max);
        if bound >= DROP_TOL {
            return Err(Error::Precondition(format!(
                "m_cutoff = {} drops sectors of weight up to {bound:.3e}",
                self.m_cutoff
            )));
        }
        Ok(())
    }

    fn sectors(&self) -> impl Iterator<Item = i32> {
        let m = self.m_cutoff as i32;
        -m..=m
    }
}

/// `(z1, z2)` for the oscillators with `z = (q + ip)/sqrt 2` and `D(z)|0>` states; `(p3, q3)` for
/// the particle with the `alpha = 0` convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlprLabel {
    pub z1: C64,
    pub z2: C64,
    pub p3: f64,
    pub q3: f64,
}

impl FlprLabel {
    pub fn new(z1: C64, z2: C64, p3: f64, q3: f64) -> Self {
        Self { z1, z2, p3, q3 }
    }

    /// Circular amplitudes `w+- = (z1 -+ i z2)/sqrt 2`, the labels of the `L3` eigenmodes.
    pub fn circular(&self) -> (C64, C64) {
        let i = C64::new(0.0, 1.0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        ((self.z1 - i * self.z2) * s, (self.z1 + i * self.z2) * s)
    }

    fn oscillators(&self) -> CoherentLabel {
        CoherentLabel::from_z(&[self.z1, self.z2], PhaseConvention::AlphaPqHalf)
    }

    fn z_norm_sqr(&self) -> f64 {
        self.z1.norm_sqr() + self.z2.norm_sqr()
    }
}

/// `sum over n+ - n- = m` of `a^{n+} b^{n-} / (n+! n-!)`, i.e. `(a/b)^{m/2} I_|m|(2 sqrt(a b))`.
pub fn sector_sum(a: C64, b: C64, m: i32) -> C64 {
    let (x, y) = if m >= 0 { (a, b) } else { (b, a) };
    let m = m.unsigned_abs() as usize;
    if x.norm() < 1e-6 || y.norm() < 1e-6 {
        let xy = x * y;
        let mut term = x.powu(m as u32) / factorial(m);
        let mut sum = term;
        for k in 1..200 {
            term *= xy / (k as f64 * (k + m) as f64);
            sum += term;
            if term.norm() <= 1e-18 * sum.norm().max(1e-300) {
                break;
            }
        }
        return sum;
    }
    let (sx, sy) = (x.sqrt(), y.sqrt());
    (sx / sy).powu(m as u32) * bessel_i(m as i32, sx * sy * 2.0)
}

fn sinc_factor(delta: f64, dq: f64) -> f64 {
    if dq.abs() < 1e-6 {
        2.0 * delta * (1.0 - (delta * dq).powi(2) / 6.0)
    } else {
        2.0 * (delta * dq).sin() / dq
    }
}

/// Two-mode factor `<z''| e^{-i omega T (N1 + N2)} E(L3 = m) |z'>` in closed form.
fn oscillator_sector(l2: &FlprLabel, l1: &FlprLabel, m: i32, omega: f64, t: f64) -> C64 {
    let (p2, m2) = l2.circular();
    let (p1, m1) = l1.circular();
    let u = C64::from_polar(1.0, -omega * t);
    let pre = (-0.5 * (l2.z_norm_sqr() + l1.z_norm_sqr())).exp();
    sector_sum(p2.conj() * p1 * u, m2.conj() * m1 * u, m) * pre
}

/// Sector sum with the particle factor taken at the sector centre `k = -g m`:
/// `e^{-ik^2 T/2 + ik dq} e^{-(k - p'')^2/2 - (k - p')^2/2} 2 sin(delta dq)/(sqrt(pi) dq)`.
pub fn flpr_closed(l2: &FlprLabel, l1: &FlprLabel, params: &FlprParams, t: f64) -> Result<C64> {
    params.check_cutoff(l2.p3.abs().max(l1.p3.abs()))?;
    let dq = l2.q3 - l1.q3;
    let terms: Vec<C64> = params
        .sectors()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|m| {
            let k = -params.g * m as f64;
            let gauss = -0.5 * (k - l2.p3).powi(2) - 0.5 * (k - l1.p3).powi(2);
            let particle = C64::new(gauss, -0.5 * k * k * t + k * dq).exp() * (sinc_factor(params.delta, dq) / PI.sqrt());
            oscillator_sector(l2, l1, m, params.omega, t) * particle
        })
        .collect();
    Ok(terms.into_iter().sum())
}

/// `pi^{-1/2} int_{-gm-delta}^{-gm+delta} e^{-(k-p'')^2/2 - (k-p')^2/2 + ik dq - ik^2 T/2 - i Lambda (gm + k)} dk`.
fn particle_factor(l2: &FlprLabel, l1: &FlprLabel, params: &FlprParams, m: i32, t: f64, lambda: f64) -> Result<C64> {
    let c = -params.g * m as f64;
    let dq = l2.q3 - l1.q3;
    let v = integrate_adaptive(c - params.delta, c + params.delta, 1e-14, |k| {
        let gauss = -0.5 * (k - l2.p3).powi(2) - 0.5 * (k - l1.p3).powi(2);
        C64::new(gauss, k * dq - 0.5 * k * k * t - lambda * (k - c)).exp()
    })?;
    Ok(v / PI.sqrt())
}

/// Spectral data of `L3` on the complete shells `n1 + n2 <= levels - 1` of a two-mode truncation,
/// where it is exact.
#[derive(Debug, Clone)]
pub struct L3Sectors {
    spec: TruncationSpec,
    shells: Vec<usize>,
    values: Vec<i32>,
    vectors: DMatrix<C64>,
}

impl L3Sectors {
    pub fn new(spec: TruncationSpec) -> Result<Self> {
        if spec.modes() != 2 {
            return Err(Error::Domain("L3 needs two modes".into()));
        }
        let ops = build_canonical_ops(&spec)?;
        let l3 = (ops[0].a.entries() * ops[1].a_dag.entries() - ops[0].a_dag.entries() * ops[1].a.entries())
            * C64::new(0.0, 1.0);
        let shells: Vec<usize> = (0..spec.dim())
            .filter(|&i| spec.occupation(i).iter().sum::<usize>() < spec.levels())
            .collect();
        let sub = DMatrix::from_fn(shells.len(), shells.len(), |a, b| l3[(shells[a], shells[b])]);
        let eig = hermitian_eig(&OperatorMatrix::hermitian(sub)?)?;
        let values = eig
            .values()
            .iter()
            .map(|&v| {
                let r = v.round();
                if (v - r).abs() > 1e-8 {
                    Err(Error::Precondition(format!("L3 eigenvalue {v} is not an integer")))
                } else {
                    Ok(r as i32)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { spec, shells, values, vectors: eig.vectors().clone() })
    }

    pub fn spec(&self) -> &TruncationSpec {
        &self.spec
    }

    /// Dimension of `L3 = m` on the complete shells.
    pub fn rank(&self, m: i32) -> usize {
        self.values.iter().filter(|&&v| v == m).count()
    }

    fn coefficients(&self, v: &DVector<C64>) -> DVector<C64> {
        let restricted = DVector::from_fn(self.shells.len(), |a, _| v[self.shells[a]]);
        self.vectors.adjoint() * restricted
    }

    /// `<v''| e^{-i omega T (N1 + N2)} E(L3 = m) |v'>` for every requested sector.
    fn sector_elements(&self, v2: &DVector<C64>, v1: &DVector<C64>, omega: f64, t: f64, sectors: &[i32]) -> Vec<C64> {
        // e^{+i omega T N} on the bra side
        let rotated = DVector::from_fn(v2.len(), |i, _| {
            let n: usize = self.spec.occupation(i).iter().sum();
            v2[i] * C64::from_polar(1.0, omega * t * n as f64)
        });
        let (a, b) = (self.coefficients(&rotated), self.coefficients(v1));
        sectors
            .iter()
            .map(|&m| {
                self.values
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v == m)
                    .map(|(j, _)| a[j].conj() * b[j])
                    .sum()
            })
            .collect()
    }
}

/// Expected `L3 = m` multiplicity on shells `0..levels`: one state per shell `s >= |m|` with
/// `s - |m|` even.
pub fn l3_rank_count(levels: usize, m: i32) -> usize {
    let m = m.unsigned_abs() as usize;
    if m >= levels {
        0
    } else {
        (levels - 1 - m) / 2 + 1
    }
}

#[derive(Debug, Clone)]
pub enum FlprRoute {
    /// Projector sandwich with the exact particle integral.
    Exact,
    /// Constraint flow `e^{-i eps sum_l lambda_l (P3 + g L3)}` inserted before the projector; since the
    /// constraint commutes with the Hamiltonian it collapses to a phase per momentum.
    Scheduled { schedule: LambdaSchedule },
}

fn schedule_lambda(schedule: &LambdaSchedule, t: f64) -> Result<f64> {
    let rows = schedule.values();
    if rows.iter().any(|r| r.len() != 1) {
        return Err(Error::Domain("the constraint has a single multiplier".into()));
    }
    Ok(step(t, schedule.slices(), schedule.convention()) * rows.iter().map(|r| r[0]).sum::<f64>())
}

/// Oscillator truncation large enough for both labels.
pub fn flpr_truncation(l2: &FlprLabel, l1: &FlprLabel) -> Result<TruncationSpec> {
    auto_levels(&[l2.oscillators(), l1.oscillators()], 2, 20_000)
}

pub fn flpr_numeric(l2: &FlprLabel, l1: &FlprLabel, params: &FlprParams, t: f64, route: &FlprRoute) -> Result<C64> {
    params.check_cutoff(l2.p3.abs().max(l1.p3.abs()))?;
    let sectors = L3Sectors::new(flpr_truncation(l2, l1)?)?;
    flpr_numeric_with(&sectors, l2, l1, params, t, route)
}

/// Same as [`flpr_numeric`] with precomputed `L3` data.
pub fn flpr_numeric_with(
    sectors: &L3Sectors,
    l2: &FlprLabel,
    l1: &FlprLabel,
    params: &FlprParams,
    t: f64,
    route: &FlprRoute,
) -> Result<C64> {
    let lambda = match route {
        FlprRoute::Exact => 0.0,
        FlprRoute::Scheduled { schedule } => schedule_lambda(schedule, t)?,
    };
    let spec = sectors.spec();
    let v2 = fock_amplitudes(&l2.oscillators(), spec).into_amplitudes();
    let v1 = fock_amplitudes(&l1.oscillators(), spec).into_amplitudes();
    let ms: Vec<i32> = params.sectors().collect();
    let osc = sectors.sector_elements(&v2, &v1, params.omega, t, &ms);
    let parts = ms
        .par_iter()
        .map(|&m| particle_factor(l2, l1, params, m, t, lambda))
        .collect::<Result<Vec<_>>>()?;
    Ok(osc.iter().zip(&parts).map(|(a, b)| a * b).sum())
}

/// `||(e^{-i Lambda1 Phi} - e^{-i Lambda2 Phi}) E v'|| / ||E v'||` with `Phi = P3 + g L3`, using the
/// closed sector norms `||E(L3 = m) z'||^2 = e^{-|z'|^2} (|w+|/|w-|)^m I_m(2 |w+| |w-|)`.
pub fn flpr_leakage(l1: &FlprLabel, params: &FlprParams, lambda1: f64, lambda2: f64) -> Result<f64> {
    params.check_cutoff(l1.p3.abs())?;
    let (wp, wm) = l1.circular();
    let dl = lambda1 - lambda2;
    let mut num = 0.0;
    let mut den = 0.0;
    for m in params.sectors() {
        let osc = sector_sum(C64::new(wp.norm_sqr(), 0.0), C64::new(wm.norm_sqr(), 0.0), m).re * (-l1.z_norm_sqr()).exp();
        if osc == 0.0 {
            continue;
        }
        let c = -params.g * m as f64;
        let density = |k: f64| (-(k - l1.p3).powi(2)).exp() / PI.sqrt();
        let diff = integrate_adaptive(c - params.delta, c + params.delta, 1e-13, |k| {
            C64::new(4.0 * (0.5 * dl * (k - c)).sin().powi(2) * density(k), 0.0)
        })?;
        let base = integrate_adaptive(c - params.delta, c + params.delta, 1e-13, |k| C64::new(density(k), 0.0))?;
        num += osc * diff.re;
        den += osc * base.re;
    }
    if den <= 0.0 {
        return Err(Error::Precondition("projected state vanishes".into()));
    }
    Ok((num / den).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels() -> (FlprLabel, FlprLabel) {
        (
            FlprLabel::new(C64::new(0.4, -0.2), C64::new(0.1, 0.3), 0.3, -0.5),
            FlprLabel::new(C64::new(-0.3, 0.5), C64::new(0.2, 0.0), -0.2, 0.4),
        )
    }

    #[test]
    fn params_guard_delta() {
        assert!(FlprParams::new(1.0, 1.0, 0.2, 4).is_err());
        let p = FlprParams::with_auto_cutoff(1.0, 1.0, 0.05, 1.0).unwrap();
        assert!(p.dropped_bound(p.m_cutoff, 1.0) < 1e-12);
    }

    #[test]
    fn sector_sum_matches_series_and_bessel() {
        let (a, b) = (C64::new(0.7, 0.2), C64::new(-0.3, 0.9));
        for m in [-3i32, 0, 2] {
            let (x, y) = if m >= 0 { (a, b) } else { (b, a) };
            let mm = m.unsigned_abs() as usize;
            let direct: C64 = (0..60).map(|k| x.powu((k + mm) as u32) * y.powu(k as u32) / (factorial(k) * factorial(k + mm))).sum();
            assert!((sector_sum(a, b, m) - direct).norm() < 1e-13);
        }
        // summing all sectors gives e^{a + b}
        let total: C64 = (-30..=30).map(|m| sector_sum(a, b, m)).sum();
        assert!((total - (a + b).exp()).norm() < 1e-12);
    }

    #[test]
    fn coincident_removable_limit() {
        assert!((sinc_factor(0.05, 0.0) - 0.1).abs() < 1e-16);
        assert!((sinc_factor(0.05, 1e-7) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn l3_ranks_match_count() {
        let s = L3Sectors::new(TruncationSpec::new(2, 9).unwrap()).unwrap();
        for m in -4..=4 {
            assert_eq!(s.rank(m), l3_rank_count(9, m));
        }
    }

    #[test]
    fn oscillator_factor_numeric_agrees() {
        let (l2, l1) = labels();
        let s = L3Sectors::new(flpr_truncation(&l2, &l1).unwrap()).unwrap();
        let v2 = fock_amplitudes(&l2.oscillators(), s.spec()).into_amplitudes();
        let v1 = fock_amplitudes(&l1.oscillators(), s.spec()).into_amplitudes();
        let ms = [-2, -1, 0, 1, 3];
        let num = s.sector_elements(&v2, &v1, 1.3, 0.5, &ms);
        for (m, n) in ms.iter().zip(num) {
            assert!((oscillator_sector(&l2, &l1, *m, 1.3, 0.5) - n).norm() < 1e-11);
        }
    }

    #[test]
    fn lowest_order_phase_tracks_omega() {
        let (l2, l1) = labels();
        // m = 1 leading term is linear in u = e^{-i omega T}
        let base = oscillator_sector(&l2, &l1, 1, 1.0, 0.0);
        let (p2, _) = l2.circular();
        let (p1, _) = l1.circular();
        let lead = p2.conj() * p1 * (-0.5 * (l2.z_norm_sqr() + l1.z_norm_sqr())).exp();
        assert!((base - lead).norm() < 0.2 * lead.norm());
        let t = 0.7;
        let rot = oscillator_sector(&l2, &l1, 1, 2.0, t);
        let lead_t = lead * C64::from_polar(1.0, -2.0 * t);
        assert!((rot - lead_t).norm() < 0.2 * lead.norm());
    }

    #[test]
    fn leakage_vanishes_for_equal_schedules() {
        let (_, l1) = labels();
        let p = FlprParams::with_auto_cutoff(2.5, 1.0, 0.1, 1.0).unwrap();
        assert_eq!(flpr_leakage(&l1, &p, 0.4, 0.4).unwrap(), 0.0);
        assert!(flpr_leakage(&l1, &p, 0.4, -0.6).unwrap() > 0.0);
    }
}
