//! Kernel of the momentum-interval projector `E(-delta < P < delta)` and its `delta -> 0` limit.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::coherent::{CoherentLabel, PhaseConvention};
use crate::error::{Error, Result};
use crate::quad::{integrate_adaptive, GaussLegendre};
use crate::rkhs::{Kernel, KernelFamily};
use crate::special::hermite_functions;

fn check(l: &CoherentLabel) -> Result<()> {
    if l.modes() != 1 || l.convention != PhaseConvention::AlphaZero {
        return Err(Error::Contract("momentum-interval kernel needs single-mode alpha = 0 labels".into()));
    }
    Ok(())
}

/// `pi^{-1/2} int_{-delta}^{delta} exp[-(k-p'')^2/2 + ik(q''-q') - (k-p')^2/2] dk`.
pub fn projected_p_exact(l2: &CoherentLabel, l1: &CoherentLabel, delta: f64) -> Result<C64> {
    check(l2)?;
    check(l1)?;
    exact_pq(l2.p[0], l2.q[0], l1.p[0], l1.q[0], delta)
}

fn exact_pq(p2: f64, q2: f64, p1: f64, q1: f64, delta: f64) -> Result<C64> {
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("delta = {delta} must be positive")));
    }
    let dq = q2 - q1;
    let v = integrate_adaptive(-delta, delta, 1e-15, |k| {
        C64::new(-0.5 * (k - p2).powi(2) - 0.5 * (k - p1).powi(2), k * dq).exp()
    })?;
    Ok(v / PI.sqrt())
}

/// Leading order `2 sin(delta dq)/(sqrt(pi) dq) exp[-(p''^2 + p'^2)/2]`.
pub fn projected_p_leading(l2: &CoherentLabel, l1: &CoherentLabel, delta: f64) -> Result<C64> {
    check(l2)?;
    check(l1)?;
    let dq = l2.q[0] - l1.q[0];
    let s = if dq.abs() < 1e-8 { delta * (1.0 - (delta * dq).powi(2) / 6.0) } else { (delta * dq).sin() / dq };
    Ok(C64::new(2.0 * s / PI.sqrt() * (-0.5 * (l2.p[0].powi(2) + l1.p[0].powi(2))).exp(), 0.0))
}

/// `exp[-(p''^2 + p'^2)/2]`.
pub fn limit_kernel(l2: &CoherentLabel, l1: &CoherentLabel) -> f64 {
    (-0.5 * (l2.p[0].powi(2) + l1.p[0].powi(2))).exp()
}

/// Number-basis compression `<m| E(-delta < P < delta) |n>` of the untruncated projector, using
/// `<k|n> = (-i)^n h_n(k)`.
pub fn compressed_momentum_projector(levels: usize, delta: f64) -> DMatrix<C64> {
    let (ks, ws) = GaussLegendre::cached(32).composite(-delta, delta, 4);
    let mut real = DMatrix::<f64>::zeros(levels, levels);
    for (&k, &w) in ks.iter().zip(&ws) {
        let h = hermite_functions(levels, k);
        for m in 0..levels {
            for n in 0..levels {
                real[(m, n)] += w * h[m] * h[n];
            }
        }
    }
    let i_pow = |k: usize| [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)][k % 4];
    DMatrix::from_fn(levels, levels, |m, n| i_pow(m) * i_pow(n).conj() * real[(m, n)])
}

/// The exact kernel as a function of `delta`, on `[p, q]` labels.
pub fn projected_p_family() -> KernelFamily {
    Arc::new(|delta| {
        exact_pq(0.0, 0.0, 0.0, 0.0, delta)?;
        Ok(Kernel::new(2, format!("projected_p(delta={delta})"), move |x, y| {
            exact_pq(x[0], x[1], y[0], y[1], delta).unwrap_or(C64::new(f64::NAN, f64::NAN))
        }))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erf_value() {
        let l = CoherentLabel::pq(0.0, 0.4);
        let v = projected_p_exact(&l, &l, 0.1).unwrap();
        assert!((v.re - 0.112_462_916_018_284_9).abs() < 1e-14 && v.im.abs() < 1e-16);
    }

    #[test]
    fn coincident_q_leading() {
        let l = CoherentLabel::pq(0.0, 0.4);
        let v = projected_p_leading(&l, &l, 0.1).unwrap();
        assert!((v.re - 0.2 / PI.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn limit_values() {
        assert_eq!(limit_kernel(&CoherentLabel::pq(0.0, 1.0), &CoherentLabel::pq(0.0, -3.0)), 1.0);
        assert!((limit_kernel(&CoherentLabel::pq(1.0, 0.0), &CoherentLabel::pq(0.0, 0.0)) - 0.606_530_659_712_633_4).abs() < 1e-15);
    }

    #[test]
    fn compression_is_hermitian() {
        let e = compressed_momentum_projector(12, 0.3);
        assert!((&e - e.adjoint()).norm() < 1e-15);
    }
}
