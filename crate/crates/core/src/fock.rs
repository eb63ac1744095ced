//! Truncated multi-mode oscillator space.
//!
//! Basis index for occupations `(n_1, .., n_J)` is `n_1 N^{J-1} + .. + n_J`, so mode 0 is the
//! slowest-varying axis.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub const DEFAULT_MAX_DIM: usize = 20_000;

const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationSpec {
    modes: usize,
    levels: usize,
    tail_tolerance: f64,
    max_dim: usize,
}

impl TruncationSpec {
    pub fn new(modes: usize, levels: usize) -> Result<Self> {
        Self::with_limits(modes, levels, 1e-10, DEFAULT_MAX_DIM)
    }

    pub fn with_limits(modes: usize, levels: usize, tail_tolerance: f64, max_dim: usize) -> Result<Self> {
        if modes == 0 || levels == 0 {
            return Err(Error::Config(format!("modes={modes}, levels={levels} must be positive")));
        }
        if !(tail_tolerance > 0.0) {
            return Err(Error::Config(format!("tail_tolerance {tail_tolerance} must be positive")));
        }
        let dim = (levels as u128).checked_pow(modes as u32).unwrap_or(u128::MAX);
        if dim > max_dim as u128 {
            return Err(Error::Config(format!("dimension {levels}^{modes} exceeds maximum {max_dim}")));
        }
        Ok(Self { modes, levels, tail_tolerance, max_dim })
    }

    pub fn with_tail_tolerance(self, tail_tolerance: f64) -> Result<Self> {
        Self::with_limits(self.modes, self.levels, tail_tolerance, self.max_dim)
    }

    /// Same limits, different level count.
    pub fn resized(self, levels: usize) -> Result<Self> {
        Self::with_limits(self.modes, levels, self.tail_tolerance, self.max_dim)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn tail_tolerance(&self) -> f64 {
        self.tail_tolerance
    }

    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    pub fn dim(&self) -> usize {
        self.levels.pow(self.modes as u32)
    }

    pub fn index(&self, occupation: &[usize]) -> usize {
        debug_assert_eq!(occupation.len(), self.modes);
        occupation.iter().fold(0, |acc, &n| acc * self.levels + n)
    }

    pub fn occupation(&self, mut index: usize) -> Vec<usize> {
        let mut occ = vec![0; self.modes];
        for slot in occ.iter_mut().rev() {
            *slot = index % self.levels;
            index /= self.levels;
        }
        occ
    }

    /// True when no mode sits on the top truncation level.
    pub fn is_interior(&self, index: usize) -> bool {
        self.occupation(index).iter().all(|&n| n + 1 < self.levels)
    }

    /// True when every mode occupation is below `cut`.
    pub fn below(&self, index: usize, cut: usize) -> bool {
        self.occupation(index).iter().all(|&n| n < cut)
    }

    fn stride(&self, mode: usize) -> usize {
        self.levels.pow((self.modes - 1 - mode) as u32)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    entries: DMatrix<C64>,
    hermitian: bool,
    unitary: bool,
}

impl OperatorMatrix {
    pub fn general(entries: DMatrix<C64>) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(Error::Contract(format!(
                "operator must be square and nonempty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(Self { entries, hermitian: false, unitary: false })
    }

    /// Checks `max |A - A^dag| <= 1e-12 max |A|` and then symmetrizes away the residue.
    pub fn hermitian(entries: DMatrix<C64>) -> Result<Self> {
        let mut op = Self::general(entries)?;
        let defect = op.hermiticity_defect();
        let scale = op.entries.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if defect > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Contract(format!("not hermitian: defect {defect:.3e} vs scale {scale:.3e}")));
        }
        op.entries = (&op.entries + op.entries.adjoint()) * C64::new(0.5, 0.0);
        op.hermitian = true;
        Ok(op)
    }

    pub fn unitary(entries: DMatrix<C64>) -> Result<Self> {
        let mut op = Self::general(entries)?;
        let defect = op.unitarity_defect();
        if defect > 1e-10 * op.dim() as f64 {
            return Err(Error::Contract(format!("not unitary: defect {defect:.3e}")));
        }
        op.unitary = true;
        Ok(op)
    }

    pub fn identity(dim: usize) -> Self {
        Self { entries: DMatrix::identity(dim, dim), hermitian: true, unitary: true }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { entries: DMatrix::zeros(dim, dim), hermitian: true, unitary: false }
    }

    pub fn real_diagonal(diag: &[f64]) -> Self {
        let d = DVector::from_iterator(diag.len(), diag.iter().map(|&x| C64::new(x, 0.0)));
        Self { entries: DMatrix::from_diagonal(&d), hermitian: true, unitary: false }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<C64> {
        self.entries
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..=j {
                worst = worst.max((self.entries[(i, j)] - self.entries[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim();
        (self.entries.adjoint() * &self.entries - DMatrix::<C64>::identity(n, n)).norm()
    }

    pub fn adjoint(&self) -> Self {
        Self { entries: self.entries.adjoint(), hermitian: self.hermitian, unitary: self.unitary }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let entries = &self.entries * &rhs.entries;
        Self { entries, hermitian: false, unitary: self.unitary && rhs.unitary }
    }

    /// Real linear combination; hermitian when every input is.
    pub fn combine(terms: &[(f64, &OperatorMatrix)]) -> Result<Self> {
        let (_, first) = terms
            .first()
            .ok_or_else(|| Error::Contract("empty combination".into()))?;
        let dim = first.dim();
        let mut entries = DMatrix::zeros(dim, dim);
        for (c, op) in terms {
            if op.dim() != dim {
                return Err(Error::Contract("dimension mismatch in combination".into()));
            }
            entries += &op.entries * C64::new(*c, 0.0);
        }
        let hermitian = terms.iter().all(|(_, op)| op.hermitian);
        Ok(Self { entries, hermitian, unitary: false })
    }

    pub fn shifted(&self, c: f64) -> Self {
        let mut entries = self.entries.clone();
        for i in 0..self.dim() {
            entries[(i, i)] += C64::new(c, 0.0);
        }
        Self { entries, hermitian: self.hermitian, unitary: false }
    }

    pub fn commutator(&self, rhs: &Self) -> DMatrix<C64> {
        &self.entries * &rhs.entries - &rhs.entries * &self.entries
    }

    pub fn apply(&self, v: &StateVector) -> StateVector {
        StateVector(&self.entries * &v.0)
    }

    pub fn expectation(&self, v: &StateVector) -> C64 {
        v.inner(&self.apply(v))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(DVector<C64>);

impl StateVector {
    pub fn new(amplitudes: DVector<C64>) -> Self {
        Self(amplitudes)
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[index] = C64::new(1.0, 0.0);
        Self(v)
    }

    pub fn vacuum(spec: &TruncationSpec) -> Self {
        Self::basis(spec.dim(), 0)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.0
    }

    pub fn amplitudes_mut(&mut self) -> &mut DVector<C64> {
        &mut self.0
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= 1e-10
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::Domain(format!("cannot normalize vector of norm {n}")));
        }
        Ok(Self(&self.0 / C64::new(n, 0.0)))
    }

    /// `<self|other>`, antilinear in `self`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.0.dotc(&other.0)
    }
}

pub struct ModeOps {
    pub q: OperatorMatrix,
    pub p: OperatorMatrix,
    pub a: OperatorMatrix,
    pub a_dag: OperatorMatrix,
    pub number: OperatorMatrix,
}

pub fn build_canonical_ops(spec: &TruncationSpec) -> Result<Vec<ModeOps>> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    (0..spec.modes())
        .map(|j| {
            let one = C64::new(1.0, 0.0);
            let build = |alpha: C64, beta: C64| NormalOrdered::new(*spec).linear_power(j, alpha, beta, 1, one);
            Ok(ModeOps {
                q: build(C64::new(s, 0.0), C64::new(s, 0.0)).build_hermitian()?,
                p: build(I * s, -I * s).build_hermitian()?,
                a: OperatorMatrix::general(NormalOrdered::new(*spec).monomial(j, 0, 1, one).build())?,
                a_dag: OperatorMatrix::general(NormalOrdered::new(*spec).monomial(j, 1, 0, one).build())?,
                number: NormalOrdered::new(*spec).monomial(j, 1, 1, one).build_hermitian()?,
            })
        })
        .collect()
}

/// Sum of normal-ordered monomials `c * prod_j a_j^dag^{k_j} a_j^{l_j}`.
///
/// Each monomial is compressed exactly into the truncated space: its matrix element between
/// retained levels equals the untruncated one.
#[derive(Debug, Clone)]
pub struct NormalOrdered {
    spec: TruncationSpec,
    terms: Vec<(C64, Vec<(u32, u32)>)>,
}

impl NormalOrdered {
    pub fn new(spec: TruncationSpec) -> Self {
        Self { spec, terms: Vec::new() }
    }

    pub fn term(mut self, coeff: C64, powers: &[(u32, u32)]) -> Self {
        assert_eq!(powers.len(), self.spec.modes(), "one (k, l) pair per mode");
        self.terms.push((coeff, powers.to_vec()));
        self
    }

    pub fn monomial(self, mode: usize, k: u32, l: u32, coeff: C64) -> Self {
        let mut powers = vec![(0, 0); self.spec.modes()];
        powers[mode] = (k, l);
        self.term(coeff, &powers)
    }

    /// Adds `coeff * :(alpha a^dag + beta a)^n:` on one mode.
    pub fn linear_power(mut self, mode: usize, alpha: C64, beta: C64, n: u32, coeff: C64) -> Self {
        for k in 0..=n {
            let c = coeff * binomial(n, k) * alpha.powu(k) * beta.powu(n - k);
            if c != C64::new(0.0, 0.0) {
                self = self.monomial(mode, k, n - k, c);
            }
        }
        self
    }

    pub fn identity(self, coeff: C64) -> Self {
        let zeros = vec![(0, 0); self.spec.modes()];
        self.term(coeff, &zeros)
    }

    pub fn build(&self) -> DMatrix<C64> {
        let dim = self.spec.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for col in 0..dim {
            let occ = self.spec.occupation(col);
            for (coeff, powers) in &self.terms {
                let mut amp2 = 1.0;
                let mut out = Vec::with_capacity(occ.len());
                let mut alive = true;
                for (&n, &(k, l)) in occ.iter().zip(powers) {
                    let (k, l) = (k as usize, l as usize);
                    if n < l || n - l + k >= self.spec.levels() {
                        alive = false;
                        break;
                    }
                    let mid = n - l;
                    amp2 *= falling(n, l) * falling(mid + k, k);
                    out.push(mid + k);
                }
                if alive {
                    m[(self.spec.index(&out), col)] += coeff * f64::sqrt(amp2);
                }
            }
        }
        m
    }

    pub fn build_hermitian(&self) -> Result<OperatorMatrix> {
        OperatorMatrix::hermitian(self.build())
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `n! / (n-k)!`.
fn falling(n: usize, k: usize) -> f64 {
    ((n - k + 1)..=n).map(|m| m as f64).product()
}

/// Applies a single-mode matrix `u` (levels x levels) along `mode` of a multi-mode vector.
pub fn apply_mode(spec: &TruncationSpec, mode: usize, u: &DMatrix<C64>, v: &mut DVector<C64>) {
    let n = spec.levels();
    let stride = spec.stride(mode);
    let block = stride * n;
    let mut buf = vec![C64::new(0.0, 0.0); n];
    for outer in (0..spec.dim()).step_by(block) {
        for inner in 0..stride {
            let base = outer + inner;
            for (r, slot) in buf.iter_mut().enumerate() {
                *slot = (0..n).map(|c| u[(r, c)] * v[base + c * stride]).sum();
            }
            for (r, val) in buf.iter().enumerate() {
                v[base + r * stride] = *val;
            }
        }
    }
}

/// Spectral decomposition with eigenvalues ascending and eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct Eigen {
    values: Vec<f64>,
    vectors: DMatrix<C64>,
}

impl Eigen {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &DMatrix<C64> {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `V f(L) V^dag`.
    pub fn func(&self, f: impl Fn(f64) -> C64) -> DMatrix<C64> {
        let w: Vec<C64> = self.values.iter().map(|&lam| f(lam)).collect();
        self.weighted(&w)
    }

    /// `V diag(w) V^dag`.
    pub fn weighted(&self, w: &[C64]) -> DMatrix<C64> {
        let mut scaled = self.vectors.clone();
        for (j, &c) in w.iter().enumerate() {
            for x in scaled.column_mut(j).iter_mut() {
                *x *= c;
            }
        }
        scaled * self.vectors.adjoint()
    }

    /// `V f(L) V^dag v` without forming the matrix.
    pub fn apply(&self, f: impl Fn(f64) -> C64, v: &DVector<C64>) -> DVector<C64> {
        let mut coeffs = self.vectors.adjoint() * v;
        for (c, &lam) in coeffs.iter_mut().zip(&self.values) {
            *c *= f(lam);
        }
        &self.vectors * coeffs
    }

    /// Orthonormal columns spanning the eigenvectors selected by `keep`.
    pub fn subspace(&self, keep: impl Fn(f64) -> bool) -> DMatrix<C64> {
        let cols: Vec<usize> = (0..self.dim()).filter(|&j| keep(self.values[j])).collect();
        self.vectors.select_columns(cols.iter())
    }

    pub fn residual(&self, a: &OperatorMatrix) -> f64 {
        let lam = DVector::from_iterator(self.dim(), self.values.iter().map(|&x| C64::new(x, 0.0)));
        (a.entries() * &self.vectors - &self.vectors * DMatrix::from_diagonal(&lam)).norm()
    }
}

/// Hermitian eigendecomposition, run independently on each connected block of the sparsity graph.
pub fn hermitian_eig(a: &OperatorMatrix) -> Result<Eigen> {
    if !a.is_hermitian() {
        return Err(Error::Contract("hermitian_eig requires a hermitian operator".into()));
    }
    let n = a.dim();
    let m = a.entries();
    let blocks = connected_blocks(m);
    let mut values = Vec::with_capacity(n);
    let mut columns: Vec<(f64, usize, DVector<C64>)> = Vec::with_capacity(n);
    let mut resid2 = 0.0;
    for idx in &blocks {
        let b = m.select_rows(idx.iter()).select_columns(idx.iter());
        let eig = SymmetricEigen::try_new(b.clone(), f64::EPSILON, 0)
            .ok_or_else(|| Error::Contract("eigensolver failed to converge".into()))?;
        let lam = DVector::from_iterator(idx.len(), eig.eigenvalues.iter().map(|&x| C64::new(x, 0.0)));
        resid2 += (&b * &eig.eigenvectors - &eig.eigenvectors * DMatrix::from_diagonal(&lam)).norm_squared();
        for (k, &lam) in eig.eigenvalues.iter().enumerate() {
            let mut col = DVector::zeros(n);
            for (r, &gi) in idx.iter().enumerate() {
                col[gi] = eig.eigenvectors[(r, k)];
            }
            columns.push((lam, columns.len(), col));
        }
    }
    columns.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let mut vectors = DMatrix::zeros(n, n);
    for (j, (lam, _, col)) in columns.into_iter().enumerate() {
        values.push(lam);
        vectors.set_column(j, &col);
    }
    let scale = m.norm().max(f64::MIN_POSITIVE);
    debug_assert!(resid2.sqrt() <= 1e-10 * scale, "eigen residual {} vs {}", resid2.sqrt(), scale);
    Ok(Eigen { values, vectors })
}

fn connected_blocks(m: &DMatrix<C64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for j in 0..n {
        for i in 0..j {
            if m[(i, j)] != C64::new(0.0, 0.0) || m[(j, i)] != C64::new(0.0, 0.0) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}

/// `e^{-itA}` for hermitian `A`.
pub fn matrix_exp_skewh(a: &OperatorMatrix, t: f64) -> Result<OperatorMatrix> {
    let eig = hermitian_eig(a)?;
    Ok(exp_from_eigen(&eig, t))
}

pub fn exp_from_eigen(eig: &Eigen, t: f64) -> OperatorMatrix {
    let entries = eig.func(|lam| C64::from_polar(1.0, -t * lam));
    OperatorMatrix { entries, hermitian: false, unitary: true }
}

/// Largest `|[Q_j, P_j] - i|` entry over basis pairs away from the truncation edge.
pub fn commutator_defect(spec: &TruncationSpec, ops: &[ModeOps]) -> f64 {
    let dim = spec.dim();
    let mut worst = 0.0f64;
    for m in ops {
        let c = m.q.commutator(&m.p);
        for j in (0..dim).filter(|&j| spec.is_interior(j)) {
            for i in (0..dim).filter(|&i| spec.is_interior(i)) {
                let target = if i == j { I } else { C64::new(0.0, 0.0) };
                worst = worst.max((c[(i, j)] - target).norm());
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_level_position() {
        let spec = TruncationSpec::new(1, 2).unwrap();
        let ops = build_canonical_ops(&spec).unwrap();
        let q = ops[0].q.entries();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((q[(0, 1)] - C64::new(s, 0.0)).norm() < 1e-15);
        assert!((q[(1, 0)] - C64::new(s, 0.0)).norm() < 1e-15);
        assert_eq!(q[(0, 0)], C64::new(0.0, 0.0));
    }

    #[test]
    fn canonical_commutator_interior() {
        let spec = TruncationSpec::new(1, 40).unwrap();
        let ops = build_canonical_ops(&spec).unwrap();
        assert!(commutator_defect(&spec, &ops) <= 1e-12);
    }

    #[test]
    fn distinct_modes_commute() {
        let spec = TruncationSpec::new(2, 10).unwrap();
        let ops = build_canonical_ops(&spec).unwrap();
        assert_eq!(ops[0].q.commutator(&ops[1].p).norm(), 0.0);
    }

    #[test]
    fn diagonal_eigen_sorted() {
        let a = OperatorMatrix::real_diagonal(&[3.0, 1.0, 2.0]);
        let e = hermitian_eig(&a).unwrap();
        assert_eq!(e.values(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn number_spectrum() {
        let spec = TruncationSpec::new(1, 40).unwrap();
        let ops = build_canonical_ops(&spec).unwrap();
        let e = hermitian_eig(&ops[0].number).unwrap();
        for (k, &v) in e.values().iter().enumerate() {
            assert_eq!(v, k as f64);
        }
    }

    #[test]
    fn exp_of_diagonal() {
        let a = OperatorMatrix::real_diagonal(&[1.0, 2.0]);
        let u = matrix_exp_skewh(&a, std::f64::consts::PI).unwrap();
        assert!(u.is_unitary());
        assert!((u.entries()[(0, 0)] - C64::new(-1.0, 0.0)).norm() < 1e-15);
        assert!((u.entries()[(1, 1)] - C64::new(1.0, 0.0)).norm() < 1e-14);
        let z = matrix_exp_skewh(&a, 0.0).unwrap();
        assert!((z.entries() - DMatrix::<C64>::identity(2, 2)).norm() < 1e-15);
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
        assert!(OperatorMatrix::hermitian(m.clone()).is_err());
        let g = OperatorMatrix::general(m).unwrap();
        assert!(hermitian_eig(&g).is_err());
    }

    #[test]
    fn dimension_overflow() {
        assert!(matches!(TruncationSpec::new(3, 30), Err(Error::Config(_))));
        assert!(TruncationSpec::new(2, 141).is_ok());
    }

    #[test]
    fn mode_application_matches_embedding() {
        let spec = TruncationSpec::new(2, 5).unwrap();
        let ops = build_canonical_ops(&spec).unwrap();
        let single = TruncationSpec::new(1, 5).unwrap();
        let q1 = build_canonical_ops(&single).unwrap().remove(0).q.into_entries();
        let v = DVector::from_fn(25, |i, _| C64::new(i as f64 * 0.1, (i % 3) as f64));
        for mode in 0..2 {
            let mut w = v.clone();
            apply_mode(&spec, mode, &q1, &mut w);
            let direct = ops[mode].q.entries() * &v;
            assert!((w - direct).norm() < 1e-13);
        }
    }
}
