//! Two oscillators with fixed excitation difference `n1 - n2 = k`, whose constraint subspace is
//! infinite dimensional: the truncated rank keeps growing with the level count.

use crate::error::{Error, Result};
use crate::fock::{build_canonical_ops, OperatorMatrix, TruncationSpec};
use crate::projector::{spectral_interval, ConstraintSpec, Projector};

/// `N1 - N2 - k`.
pub fn noncompact_constraint(k: i64, spec: &TruncationSpec) -> Result<OperatorMatrix> {
    if spec.modes() != 2 {
        return Err(Error::Domain("the difference constraint needs two modes".into()));
    }
    let ops = build_canonical_ops(spec)?;
    Ok(OperatorMatrix::combine(&[(1.0, &ops[0].number), (-1.0, &ops[1].number)])?.shifted(-(k as f64)))
}

/// Projector on `n1 - n2 = k`; rank `levels - |k|` in a truncation with `levels` per mode.
pub fn noncompact_u1_analogue_projector(k: i64, spec: &TruncationSpec) -> Result<Projector> {
    spectral_interval(&ConstraintSpec::single(noncompact_constraint(k, spec)?, 0.5)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_grow_with_truncation() {
        for (k, levels, rank) in [(0, 10, 10), (3, 10, 7), (-2, 6, 4), (3, 14, 11)] {
            let spec = TruncationSpec::new(2, levels).unwrap();
            let e = noncompact_u1_analogue_projector(k, &spec).unwrap();
            assert_eq!(e.rank(), rank);
            assert!(e.certify().passes());
        }
    }
}
