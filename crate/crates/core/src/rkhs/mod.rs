//! Reproducing kernels: Gram certification, span inner products, reproducing-identity checks and
//! kernel reductions.

mod nodal;

pub use nodal::{gaussian_correlation, Amplitude, Correlation, Coupling, NodalForm, PolarGrid};

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{hermitian_eig, OperatorMatrix};
use crate::quad::GaussLegendre;

pub type KernelFn = Arc<dyn Fn(&[f64], &[f64]) -> C64 + Send + Sync>;

/// Evaluatable two-label kernel. Labels are flat coordinate slices of length `arity`; phase-space
/// kernels lay them out as `[p_1..p_J, q_1..q_J]`.
#[derive(Clone)]
pub struct Kernel {
    arity: usize,
    eval: KernelFn,
    provenance: Vec<String>,
    nodal: Option<Arc<NodalForm>>,
}

impl std::fmt::Debug for Kernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Kernel")
            .field("arity", &self.arity)
            .field("provenance", &self.provenance)
            .field("nodal", &self.nodal.is_some())
            .finish()
    }
}

impl Kernel {
    pub fn new(arity: usize, origin: impl Into<String>, eval: impl Fn(&[f64], &[f64]) -> C64 + Send + Sync + 'static) -> Self {
        Self { arity, eval: Arc::new(eval), provenance: vec![origin.into()], nodal: None }
    }

    /// Kernel given by a nodal quadrature form; evaluation sums the nodes.
    pub fn from_nodal(arity: usize, origin: impl Into<String>, form: NodalForm) -> Self {
        let form = Arc::new(form);
        let f = form.clone();
        Self {
            arity,
            eval: Arc::new(move |x, y| f.eval(x, y)),
            provenance: vec![origin.into()],
            nodal: Some(form),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn provenance(&self) -> &[String] {
        &self.provenance
    }

    pub fn nodal(&self) -> Option<&NodalForm> {
        self.nodal.as_deref()
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> C64 {
        debug_assert_eq!(x.len(), self.arity);
        debug_assert_eq!(y.len(), self.arity);
        (self.eval)(x, y)
    }

    fn derived(&self, arity: usize, step: String, eval: KernelFn) -> Self {
        let mut provenance = self.provenance.clone();
        provenance.push(step);
        Self { arity, eval, provenance, nodal: None }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let inner = self.eval.clone();
        self.derived(self.arity, format!("scale({c})"), Arc::new(move |x, y| inner(x, y) * c))
    }

    /// Unprojected overlap of ground-state coherent states with `alpha = 0`, `J` modes.
    pub fn coherent_overlap(modes: usize) -> Self {
        Self::new(2 * modes, "coherent_overlap", move |x, y| {
            let (p2, q2) = x.split_at(modes);
            let (p1, q1) = y.split_at(modes);
            let e: C64 = (0..modes)
                .map(|j| {
                    C64::new(
                        -0.25 * ((p2[j] - p1[j]).powi(2) + (q2[j] - q1[j]).powi(2)),
                        0.5 * (p2[j] + p1[j]) * (q2[j] - q1[j]),
                    )
                })
                .sum();
            e.exp()
        })
    }

    /// Largest `|K(x,y) - conj K(y,x)|` over the sample.
    pub fn hermitian_defect(&self, labels: &[Vec<f64>]) -> f64 {
        let mut worst = 0.0f64;
        for (i, x) in labels.iter().enumerate() {
            for y in &labels[i..] {
                worst = worst.max((self.eval(x, y) - self.eval(y, x).conj()).norm());
            }
        }
        worst
    }
}

/// Gram matrix `G[k,l] = K(x_k, x_l)`, filled from the upper triangle.
pub fn gram(kernel: &Kernel, labels: &[Vec<f64>]) -> DMatrix<C64> {
    let n = labels.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let vals: Vec<C64> = pairs.par_iter().map(|&(i, j)| kernel.eval(&labels[i], &labels[j])).collect();
    let mut g = DMatrix::zeros(n, n);
    for (&(i, j), v) in pairs.iter().zip(vals) {
        if i == j {
            g[(i, i)] = C64::new(v.re, 0.0);
        } else {
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
    }
    g
}

#[derive(Debug, Clone, Copy)]
pub struct PsdReport {
    pub min_eigenvalue: f64,
    pub spectral_norm: f64,
}

impl PsdReport {
    pub fn passes(&self) -> bool {
        self.min_eigenvalue >= -1e-10 * self.spectral_norm
    }
}

pub fn psd_certificate(g: &DMatrix<C64>) -> Result<PsdReport> {
    let eig = hermitian_eig(&OperatorMatrix::hermitian(g.clone())?)?;
    let vals = eig.values();
    let min = vals.first().copied().unwrap_or(0.0);
    let norm = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    Ok(PsdReport { min_eigenvalue: min, spectral_norm: norm })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpanVector {
    pub terms: Vec<(C64, Vec<f64>)>,
}

impl SpanVector {
    pub fn new(terms: Vec<(C64, Vec<f64>)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Domain("span needs at least one term".into()));
        }
        Ok(Self { terms })
    }
}

/// `<phi, psi> = sum_l sum_k conj(beta_l) alpha_k K(x_l, x_k)`.
pub fn span_inner(kernel: &Kernel, phi: &SpanVector, psi: &SpanVector) -> C64 {
    phi.terms
        .iter()
        .flat_map(|(b, xl)| psi.terms.iter().map(move |(a, xk)| b.conj() * a * kernel.eval(xl, xk)))
        .sum()
}

/// Integration measure for the reproducing identity.
#[derive(Debug, Clone)]
pub enum Measure {
    /// Constant density times Lebesgue measure on a box, tensor Gauss-Legendre with panel doubling
    /// until successive integrals differ by less than `tol`.
    TensorBox { bounds: Vec<(f64, f64)>, density: f64, order: usize, tol: f64 },
    /// Gaussian damping `exp(-sigma^2 |p|^2 / 2)` of the momentum integral for a nodal kernel,
    /// evaluated in closed form, then Richardson extrapolation in sigma over `levels` halvings
    /// eliminating the listed powers.
    Regularized { sigma0: f64, levels: usize, powers: Vec<f64> },
}

impl Measure {
    /// `dp dq / 2 pi` over `[-l, l]^2`.
    pub fn phase_space_box(l: f64) -> Self {
        Measure::TensorBox { bounds: vec![(-l, l), (-l, l)], density: 1.0 / (2.0 * PI), order: 16, tol: 1e-10 }
    }
}

#[derive(Debug, Clone)]
pub struct ReproduceReport {
    pub value: C64,
    pub integral: C64,
    pub residual: f64,
    /// Residual after each refinement step.
    pub history: Vec<f64>,
}

pub fn reproduce_check(kernel: &Kernel, measure: &Measure, x2: &[f64], x1: &[f64]) -> Result<ReproduceReport> {
    let value = kernel.eval(x2, x1);
    match measure {
        Measure::TensorBox { bounds, density, order, tol } => {
            if bounds.len() != kernel.arity() {
                return Err(Error::Domain("box dimension must equal kernel arity".into()));
            }
            let rule = GaussLegendre::cached(*order);
            let integrand = |x: &[f64]| kernel.eval(x2, x) * kernel.eval(x, x1);
            let mut panels = 2;
            let mut prev = tensor_integrate(&rule, bounds, panels, &integrand) * *density;
            let mut history = vec![(value - prev).norm()];
            loop {
                panels *= 2;
                let next = tensor_integrate(&rule, bounds, panels, &integrand) * *density;
                history.push((value - next).norm());
                if (next - prev).norm() <= *tol {
                    return Ok(ReproduceReport { value, integral: next, residual: (value - next).norm(), history });
                }
                if panels >= 256 {
                    return Err(Error::Quadrature { prev: prev.norm(), last: next.norm() });
                }
                prev = next;
            }
        }
        Measure::Regularized { sigma0, levels, powers } => {
            let form = kernel
                .nodal()
                .ok_or_else(|| Error::Precondition("regularized measure needs a nodal kernel".into()))?;
            let sigmas: Vec<f64> = (0..*levels).map(|k| sigma0 / 2f64.powi(k as i32)).collect();
            let vals: Vec<C64> = sigmas.iter().map(|&s| form.regularized_reproduce(x2, x1, s)).collect();
            let history: Vec<f64> = vals.iter().map(|v| (v - value).norm()).collect();
            let (integral, _) = richardson(&vals, 2.0, powers);
            Ok(ReproduceReport { value, integral, residual: (value - integral).norm(), history })
        }
    }
}

fn tensor_integrate(rule: &GaussLegendre, bounds: &[(f64, f64)], panels: usize, f: &(dyn Fn(&[f64]) -> C64 + Sync)) -> C64 {
    let axes: Vec<(Vec<f64>, Vec<f64>)> = bounds.iter().map(|&(a, b)| rule.composite(a, b, panels)).collect();
    let sizes: Vec<usize> = axes.iter().map(|a| a.0.len()).collect();
    let total: usize = sizes.iter().product();
    let outer = sizes[0];
    let inner = total / outer;
    let rows: Vec<C64> = (0..outer)
        .into_par_iter()
        .map(|i0| {
            let mut x = vec![0.0; bounds.len()];
            let mut acc = C64::new(0.0, 0.0);
            for rest in 0..inner {
                let mut w = axes[0].1[i0];
                x[0] = axes[0].0[i0];
                let mut r = rest;
                for d in (1..bounds.len()).rev() {
                    let k = r % sizes[d];
                    r /= sizes[d];
                    x[d] = axes[d].0[k];
                    w *= axes[d].1[k];
                }
                acc += f(&x) * w;
            }
            acc
        })
        .collect();
    rows.into_iter().sum()
}

/// Richardson tableau for values at steps `h, h/ratio, h/ratio^2, ..`, eliminating `powers` in order.
/// Returns the extrapolated value and the difference between the last two entries of the final column.
pub fn richardson(values: &[C64], ratio: f64, powers: &[f64]) -> (C64, f64) {
    let mut col = values.to_vec();
    let mut err = f64::INFINITY;
    for &p in powers {
        if col.len() < 2 {
            break;
        }
        let f = ratio.powf(p);
        let next: Vec<C64> = col.windows(2).map(|w| (w[1] * f - w[0]) / (f - 1.0)).collect();
        err = (next[next.len() - 1] - col[col.len() - 1]).norm();
        col = next;
    }
    (col[col.len() - 1], err)
}

/// `K_1(p'', q''; p', q') = K_0(p''/omega, omega q''; p'/omega, omega q')`.
pub fn reduce_rescale(kernel: &Kernel, omega: f64) -> Result<Kernel> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::Domain(format!("omega = {omega} must be positive")));
    }
    if kernel.arity() % 2 != 0 {
        return Err(Error::Domain("rescaling needs a phase-space (p, q) layout".into()));
    }
    let j = kernel.arity() / 2;
    let inner = kernel.eval.clone();
    let map = move |x: &[f64]| -> Vec<f64> {
        x.iter().enumerate().map(|(k, &v)| if k < j { v / omega } else { v * omega }).collect()
    };
    Ok(kernel.derived(kernel.arity(), format!("rescale({omega})"), Arc::new(move |x, y| inner(&map(x), &map(y)))))
}

fn insert_fixed(rest: &[f64], fixed: &[(usize, f64)], arity: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(arity);
    let mut it = rest.iter();
    for k in 0..arity {
        match fixed.iter().find(|(idx, _)| *idx == k) {
            Some(&(_, v)) => out.push(v),
            None => out.push(*it.next().expect("label too short")),
        }
    }
    out
}

/// Fixes the same coordinates on both arguments.
pub fn reduce_restrict(kernel: &Kernel, fixed: &[(usize, f64)]) -> Result<Kernel> {
    if fixed.iter().any(|(k, _)| *k >= kernel.arity()) {
        return Err(Error::Domain("restricted coordinate out of range".into()));
    }
    if fixed.is_empty() {
        return Ok(kernel.clone());
    }
    let arity = kernel.arity();
    let fixed = fixed.to_vec();
    let inner = kernel.eval.clone();
    let step = format!("restrict({fixed:?})");
    Ok(kernel.derived(
        arity - fixed.len(),
        step,
        Arc::new(move |x, y| inner(&insert_fixed(x, &fixed, arity), &insert_fixed(y, &fixed, arity))),
    ))
}

/// `K_3(y'', y') = int int conj(w(s'')) w(s') K(y''+s'', y'+s') ds'' ds'` over one axis,
/// with the weight treated as negligible outside `support`.
pub fn reduce_weight(
    kernel: &Kernel,
    weight: Arc<dyn Fn(f64) -> C64 + Send + Sync>,
    axis: usize,
    support: (f64, f64),
    tol: f64,
) -> Result<Kernel> {
    if axis >= kernel.arity() {
        return Err(Error::Domain("weight axis out of range".into()));
    }
    let arity = kernel.arity();
    let inner = kernel.eval.clone();
    let eval = move |x: &[f64], y: &[f64]| -> C64 {
        let rule = GaussLegendre::cached(16);
        let run = |panels: usize| {
            let (s, w) = rule.composite(support.0, support.1, panels);
            let ws: Vec<C64> = s.iter().zip(&w).map(|(&si, &wi)| weight(si) * wi).collect();
            let mut acc = C64::new(0.0, 0.0);
            for (a, wa) in s.iter().zip(&ws) {
                let xa = insert_fixed(x, &[(axis, *a)], arity);
                for (b, wb) in s.iter().zip(&ws) {
                    let yb = insert_fixed(y, &[(axis, *b)], arity);
                    acc += wa.conj() * wb * inner(&xa, &yb);
                }
            }
            acc
        };
        let mut panels = 2;
        let mut prev = run(panels);
        loop {
            panels *= 2;
            let next = run(panels);
            if (next - prev).norm() <= tol || panels >= 128 {
                return next;
            }
            prev = next;
        }
    };
    Ok(kernel.derived(arity - 1, format!("weight(axis={axis})"), Arc::new(eval)))
}

pub type KernelFamily = Arc<dyn Fn(f64) -> Result<Kernel> + Send + Sync>;

#[derive(Debug, Clone)]
pub struct DeltaLimit {
    pub sigma: f64,
    /// Leading correction exponent in delta, `None` for a constant family.
    pub rho: Option<f64>,
    pub fit_residual: f64,
    pub kernel: Kernel,
}

/// Extrapolates `delta^{-sigma} K_delta` to `delta -> 0` from `d0, d0/2, d0/4, d0/8`.
///
/// `sigma` comes from a log-log fit of `|K_delta(probe, probe)|` unless given, and is snapped to
/// the nearest half-integer when within 0.05. The correction exponent is read off successive
/// differences at the probe and the tableau removes `rho` and `2 rho`.
pub fn reduce_limit_delta(family: KernelFamily, d0: f64, exponent_guess: Option<f64>, probe: &[f64]) -> Result<DeltaLimit> {
    let deltas: Vec<f64> = (0..4).map(|k| d0 / 2f64.powi(k)).collect();
    let kernels: Vec<Kernel> = deltas.iter().map(|&d| family(d)).collect::<Result<_>>()?;
    let diag: Vec<f64> = kernels.iter().map(|k| k.eval(probe, probe).norm()).collect();
    if diag.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Extrapolation { residual: f64::INFINITY });
    }
    let (sigma, fit_residual) = match exponent_guess {
        Some(s) => (s, 0.0),
        None => {
            let xs: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
            let ys: Vec<f64> = diag.iter().map(|v| v.ln()).collect();
            let (slope, resid) = linear_fit(&xs, &ys);
            if resid > 0.05 {
                return Err(Error::Extrapolation { residual: resid });
            }
            let snapped = (slope * 2.0).round() / 2.0;
            (if (slope - snapped).abs() <= 0.05 { snapped } else { slope }, resid)
        }
    };
    let scaled: Vec<f64> = diag.iter().zip(&deltas).map(|(v, d)| v * d.powf(-sigma)).collect();
    let diffs: Vec<f64> = scaled.windows(2).map(|w| w[0] - w[1]).collect();
    let rho = if diffs.iter().all(|d| d.abs() <= 1e-13 * scaled[3].abs().max(f64::MIN_POSITIVE)) {
        None
    } else {
        let r = (diffs[1] / diffs[2]).abs().log2();
        let snapped = (r * 2.0).round() / 2.0;
        Some(if (r - snapped).abs() <= 0.1 { snapped } else { r })
    };
    let powers: Vec<f64> = rho.map(|r| vec![r, 2.0 * r]).unwrap_or_default();
    let ks = kernels.clone();
    let ds = deltas.clone();
    let eval = move |x: &[f64], y: &[f64]| {
        let vals: Vec<C64> = ks.iter().zip(&ds).map(|(k, d)| k.eval(x, y) * d.powf(-sigma)).collect();
        if powers.is_empty() {
            vals[3]
        } else {
            richardson(&vals, 2.0, &powers).0
        }
    };
    let kernel = kernels[0].derived(kernels[0].arity(), format!("limit_delta(sigma={sigma})"), Arc::new(eval));
    Ok(DeltaLimit { sigma, rho, fit_residual, kernel })
}

/// Least-squares slope and RMS residual.
fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let resid = (xs.iter().zip(ys).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum::<f64>() / n).sqrt();
    (slope, resid)
}

/// Log-log slope of `ys` against `xs` with its RMS residual.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    linear_fit(&lx, &ly)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(p: f64, q: f64) -> Vec<f64> {
        vec![p, q]
    }

    #[test]
    fn single_label_gram() {
        let g = gram(&Kernel::coherent_overlap(1), &[l(0.3, -0.2)]);
        assert!((g[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn duplicate_labels() {
        let g = gram(&Kernel::coherent_overlap(1), &[l(0.3, -0.2), l(0.3, -0.2)]);
        let eig = hermitian_eig(&OperatorMatrix::hermitian(g).unwrap()).unwrap();
        assert!(eig.values()[0].abs() < 1e-14);
        assert!((eig.values()[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn span_expansion_identity() {
        let k = Kernel::coherent_overlap(1);
        let (a, b) = (l(0.5, 1.0), l(-0.2, 0.3));
        let s = SpanVector::new(vec![(C64::new(1.0, 0.0), a.clone()), (C64::new(-1.0, 0.0), b.clone())]).unwrap();
        let n2 = span_inner(&k, &s, &s);
        assert!((n2.re - (2.0 - 2.0 * k.eval(&a, &b).re)).abs() < 1e-14);
    }

    #[test]
    fn reproduce_overlap_kernel() {
        let r = reproduce_check(&Kernel::coherent_overlap(1), &Measure::phase_space_box(8.0), &l(0.0, 1.0), &l(0.0, 0.0)).unwrap();
        assert!(r.residual <= 1e-6, "{r:?}");
    }

    #[test]
    fn restrict_momentum() {
        let k2 = reduce_restrict(&Kernel::coherent_overlap(1), &[(0, 0.0)]).unwrap();
        let v = k2.eval(&[1.3], &[0.1]);
        assert!((v.re - (-0.25f64 * 1.44).exp()).abs() < 1e-15 && v.im.abs() < 1e-15);
        let same = reduce_restrict(&Kernel::coherent_overlap(1), &[]).unwrap();
        assert_eq!(same.eval(&l(0.1, 0.2), &l(0.3, 0.4)), Kernel::coherent_overlap(1).eval(&l(0.1, 0.2), &l(0.3, 0.4)));
    }

    #[test]
    fn rescale_diagonal_and_identity() {
        let k = Kernel::coherent_overlap(1);
        let k1 = reduce_rescale(&k, 1.0).unwrap();
        assert_eq!(k1.eval(&l(0.2, 0.7), &l(-0.4, 0.1)), k.eval(&l(0.2, 0.7), &l(-0.4, 0.1)));
        let k2 = reduce_rescale(&k, 2.0).unwrap();
        assert!((k2.eval(&l(0.9, -0.3), &l(0.9, -0.3)) - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(reduce_rescale(&k, 0.0).is_err());
    }

    #[test]
    fn constant_family_limit() {
        let fam: KernelFamily = Arc::new(|_| Ok(Kernel::coherent_overlap(1)));
        let lim = reduce_limit_delta(fam, 0.2, None, &l(0.0, 0.0)).unwrap();
        assert_eq!(lim.sigma, 0.0);
        assert!(lim.rho.is_none());
        let (x, y) = (l(0.4, 0.1), l(-0.3, 0.5));
        assert!((lim.kernel.eval(&x, &y) - Kernel::coherent_overlap(1).eval(&x, &y)).norm() < 1e-15);
    }

    #[test]
    fn richardson_polynomial() {
        // f(h) = 1 + h + h^2
        let vals: Vec<C64> = (0..3).map(|k| {
            let h = 0.1 / 2f64.powi(k);
            C64::new(1.0 + h + h * h, 0.0)
        }).collect();
        let (v, _) = richardson(&vals, 2.0, &[1.0, 2.0]);
        assert!((v.re - 1.0).abs() < 1e-14);
    }
}
