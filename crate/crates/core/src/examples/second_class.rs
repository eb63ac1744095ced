//! A single degree of freedom with the second-class pair `P = 1`, `Q = 2`: the projector is the
//! rank-one minimum-uncertainty state at `(p, q) = (1, 2)` and the Hamiltonian is `:P^2/2 + Q^4/4:`.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coherent::{auto_levels, overlap_closed, CoherentFactory, CoherentLabel};
use crate::error::Result;
use crate::fock::{NormalOrdered, OperatorMatrix, TruncationSpec};
use crate::projector::{rank1_min_uncertainty, Projector};
use crate::propagator::{reduced_evolution, Evolution};

pub const CONSTRAINT_POINT: (f64, f64) = (1.0, 2.0);

/// Classical value `p^2/2 + q^4/4` at the constraint point.
pub const ENERGY: f64 = 4.5;

pub fn constraint_label() -> CoherentLabel {
    CoherentLabel::pq(CONSTRAINT_POINT.0, CONSTRAINT_POINT.1)
}

pub fn second_class_hamiltonian(spec: &TruncationSpec) -> Result<OperatorMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let i = C64::new(0.0, 1.0);
    NormalOrdered::new(*spec)
        .linear_power(0, i * s, -i * s, 2, C64::new(0.5, 0.0))
        .linear_power(0, C64::new(s, 0.0), C64::new(s, 0.0), 4, C64::new(0.25, 0.0))
        .build_hermitian()
}

/// `<p'',q''|1,2> <1,2|p',q'> e^{-4.5 i T}`.
pub fn second_class_full(l2: &CoherentLabel, l1: &CoherentLabel, t: f64) -> Result<C64> {
    let c = constraint_label();
    Ok(overlap_closed(l2, &c)? * overlap_closed(&c, l1)? * C64::from_polar(1.0, -ENERGY * t))
}

/// Truncation, Hamiltonian evolution and rank-one projector shared by the numeric routes.
pub struct SecondClassSystem {
    pub factory: CoherentFactory,
    pub evolution: Evolution,
    pub projector: Projector,
}

impl SecondClassSystem {
    pub fn new(labels: &[CoherentLabel]) -> Result<Self> {
        let mut all = labels.to_vec();
        all.push(constraint_label());
        // Q^4 reaches four levels further than the states themselves
        let base = auto_levels(&all, 1, 20_000)?;
        let spec = base.resized(base.levels() + 16)?;
        let projector = rank1_min_uncertainty(&constraint_label(), &spec)?;
        let evolution = Evolution::new(second_class_hamiltonian(&spec)?)?;
        Ok(Self { factory: CoherentFactory::new(spec)?, evolution, projector })
    }

    /// `<v''| E e^{-iT EHE} E |v'>`.
    pub fn reduced(&self, l2: &CoherentLabel, l1: &CoherentLabel, t: f64) -> Result<C64> {
        let (v2, v1) = (self.factory.ground_vector(l2)?, self.factory.ground_vector(l1)?);
        Ok(reduced_evolution(&self.evolution, &v2, &v1, &self.projector, t)?.value)
    }
}

/// Discrete action `-sum_l arg(A_{l+1} / A_l) - T H(1, 2)` of the projected states along a path,
/// with `A_l = <1,2|p_l,q_l>`; only the endpoints matter.
pub fn path_action(path: &[CoherentLabel], t: f64) -> Result<f64> {
    let c = constraint_label();
    let amps = path.iter().map(|l| overlap_closed(&c, l)).collect::<Result<Vec<_>>>()?;
    let geometric: f64 = amps.windows(2).map(|w| (w[1] / w[0]).arg()).sum();
    Ok(-geometric - t * ENERGY)
}

/// Straight line between the endpoints plus seeded jitter on the interior points.
pub fn random_path(start: &CoherentLabel, end: &CoherentLabel, steps: usize, jitter: f64, seed: u64) -> Vec<CoherentLabel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..=steps)
        .map(|l| {
            let s = l as f64 / steps as f64;
            let (mut p, mut q) = (start.p[0] + s * (end.p[0] - start.p[0]), start.q[0] + s * (end.q[0] - start.q[0]));
            if l != 0 && l != steps {
                p += rng.random_range(-jitter..=jitter);
                q += rng.random_range(-jitter..=jitter);
            }
            CoherentLabel::pq(p, q)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_at_constraint_point() {
        let c = constraint_label();
        assert!((second_class_full(&c, &c, 0.0).unwrap() - 1.0).norm() < 1e-15);
        assert!((second_class_full(&c, &c, 1.0).unwrap() - C64::from_polar(1.0, -4.5)).norm() < 1e-15);
    }

    #[test]
    fn reduced_matches_closed_form() {
        let l2 = CoherentLabel::pq(0.5, 1.5);
        let l1 = CoherentLabel::pq(1.2, 2.3);
        let sys = SecondClassSystem::new(&[l2.clone(), l1.clone()]).unwrap();
        for t in [0.0, 0.7] {
            let d = sys.reduced(&l2, &l1, t).unwrap() - second_class_full(&l2, &l1, t).unwrap();
            assert!(d.norm() < 1e-8, "{d}");
        }
    }

    #[test]
    fn action_depends_on_endpoints_only() {
        let (a, b) = (CoherentLabel::pq(0.8, 1.7), CoherentLabel::pq(1.3, 2.2));
        let base = path_action(&random_path(&a, &b, 40, 0.0, 0), 1.0).unwrap();
        for seed in 1..4 {
            let v = path_action(&random_path(&a, &b, 40, 0.05, seed), 1.0).unwrap();
            assert!((v - base).abs() < 1e-10);
        }
    }
}
