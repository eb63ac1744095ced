//! Kernels whose projection confines the configuration to the annulus `|x^2 - 1| < delta` in the
//! plane: the projected sphere kernel, its reduction to `E(2)` labels with a surface-constant
//! fiducial, and the second-class version with a radial profile `zeta`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::quad::GaussLegendre;
use crate::rkhs::{gaussian_correlation, Amplitude, Correlation, Coupling, Kernel, Measure, NodalForm, PolarGrid};
use crate::special::bessel_i;

pub type SeedFn = Arc<dyn Fn(f64, f64) -> C64 + Send + Sync>;

/// Fiducial function on the plane.
#[derive(Clone)]
pub enum Fiducial {
    /// `(pi w^2)^{-1/2} exp(-|x - center|^2 / (2 w^2))`.
    Gaussian { center: [f64; 2], width: f64 },
    /// Arbitrary seed `xi(x1, x2)`, normalized on each circle before use.
    Seed(SeedFn),
}

impl std::fmt::Debug for Fiducial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Fiducial::Gaussian { center, width } => f.debug_struct("Gaussian").field("center", center).field("width", width).finish(),
            Fiducial::Seed(_) => f.write_str("Seed(..)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodalQuadrature {
    pub panels: usize,
    pub order: usize,
    pub n_phi: usize,
}

#[derive(Debug, Clone)]
pub struct SphereKernelParams {
    pub j: usize,
    pub delta: f64,
    pub eta: Fiducial,
    pub quadrature: NodalQuadrature,
}

impl SphereKernelParams {
    /// Centred unit Gaussian on the annulus `0.8 < r^2 < 1.2`.
    pub fn sphere_default() -> Self {
        Self {
            j: 2,
            delta: 0.2,
            eta: Fiducial::Gaussian { center: [0.0, 0.0], width: 1.0 },
            quadrature: NodalQuadrature { panels: 4, order: 8, n_phi: 2048 },
        }
    }

    /// Off-centre Gaussian seed, which gives a non-uniform angular profile.
    pub fn e2_default() -> Self {
        Self { eta: Fiducial::Gaussian { center: [0.3, 0.0], width: 1.0 }, ..Self::sphere_default() }
    }

    fn validate(&self) -> Result<(f64, f64)> {
        if self.j != 2 {
            return Err(Error::Domain(format!("only J = 2 is implemented, got J = {}", self.j)));
        }
        if !(self.delta > 0.0) {
            return Err(Error::Domain(format!("delta = {} must be positive", self.delta)));
        }
        if let Fiducial::Gaussian { width, .. } = self.eta {
            if !(width > 0.0) {
                return Err(Error::Domain("fiducial width must be positive".into()));
            }
        }
        let lo = (1.0 - self.delta).max(0.0).sqrt();
        Ok((lo, (1.0 + self.delta).sqrt()))
    }

    fn grid(&self, lo: f64, hi: f64) -> Result<PolarGrid> {
        let q = self.quadrature;
        PolarGrid::new(lo, hi, q.panels, q.order, q.n_phi)
    }
}

fn gaussian_fiducial(center: [f64; 2], width: f64) -> impl Fn(f64, f64) -> f64 + Send + Sync + Clone {
    let norm = 1.0 / (PI.sqrt() * width);
    move |y1, y2| norm * (-((y1 - center[0]).powi(2) + (y2 - center[1]).powi(2)) / (2.0 * width * width)).exp()
}

/// `int_annulus eta^*(x - q'') e^{-i(p'' - p').x} eta(x - q') d^2x` on labels `[p1, p2, q1, q2]`.
pub fn sphere_projected_kernel(params: &SphereKernelParams) -> Result<Kernel> {
    let (lo, hi) = params.validate()?;
    let Fiducial::Gaussian { center, width } = params.eta else {
        return Err(Error::Domain("the sphere kernel takes a Gaussian fiducial".into()));
    };
    let grid = params.grid(lo, hi)?;
    let eta = gaussian_fiducial(center, width);
    let amplitude: Amplitude = Arc::new(move |x, r, phi| {
        let (y1, y2) = (r * phi.cos(), r * phi.sin());
        C64::from_polar(eta(y1 - x[2], y2 - x[3]), x[0] * y1 + x[1] * y2)
    });
    let coupling = Coupling::Diagonal(grid.radii().iter().zip(grid.radial_weights()).map(|(r, w)| r * w).collect());
    let correlation = gaussian_correlation(&grid, width);
    let form = NodalForm::new(grid, coupling, amplitude, correlation)?;
    Ok(Kernel::from_nodal(4, format!("sphere(delta={})", params.delta), form))
}

/// Angular profile `eta(r, theta)` with `int |eta(r, c)|^2 dc = 1` on every circle.
pub type AngularProfile = Arc<dyn Fn(f64, f64) -> C64 + Send + Sync>;

const SEED_POINTS: usize = 512;

/// Per-circle normalization of the fiducial. A Gaussian seed at `x0` with width `w` reduces to
/// `exp(kappa cos(theta - theta0)) / sqrt(2 pi I0(2 kappa))`, `kappa = r |x0| / w^2`.
pub fn e2_fiducial(eta: &Fiducial, radii: &[f64]) -> Result<AngularProfile> {
    match eta {
        Fiducial::Gaussian { center, width } => {
            let a = center[0].hypot(center[1]) / (width * width);
            let theta0 = center[1].atan2(center[0]);
            Ok(Arc::new(move |r, theta| {
                let kappa = r * a;
                let norm = (2.0 * PI * bessel_i(0, C64::new(2.0 * kappa, 0.0)).re).sqrt();
                C64::new((kappa * (theta - theta0).cos()).exp() / norm, 0.0)
            }))
        }
        Fiducial::Seed(seed) => {
            let circle_norm = {
                let seed = seed.clone();
                move |r: f64| -> f64 {
                    let h = 2.0 * PI / SEED_POINTS as f64;
                    let s: f64 = (0..SEED_POINTS).map(|m| seed(r * (m as f64 * h).cos(), r * (m as f64 * h).sin()).norm_sqr()).sum();
                    (s * h).sqrt()
                }
            };
            let mut table: Vec<(f64, f64)> = radii.iter().map(|&r| (r, circle_norm(r))).collect();
            if let Some(&(r, n)) = table.iter().find(|(_, n)| !(*n > 1e-150)) {
                return Err(Error::Domain(format!("seed has angular norm {n:e} on the circle r = {r}")));
            }
            table.sort_by(|a, b| a.0.total_cmp(&b.0));
            let seed = seed.clone();
            Ok(Arc::new(move |r, theta| {
                let n = match table.binary_search_by(|e| e.0.total_cmp(&r)) {
                    Ok(k) => table[k].1,
                    Err(_) => circle_norm(r),
                };
                seed(r * theta.cos(), r * theta.sin()) / n
            }))
        }
    }
}

/// `int |eta(r, c)|^2 dc` by a 512-point trapezoid at each radius.
pub fn surface_constant_profile(params: &SphereKernelParams, radii: &[f64]) -> Result<Vec<f64>> {
    params.validate()?;
    let eta = e2_fiducial(&params.eta, radii)?;
    let h = 2.0 * PI / SEED_POINTS as f64;
    Ok(radii.iter().map(|&r| (0..SEED_POINTS).map(|m| eta(r, m as f64 * h).norm_sqr()).sum::<f64>() * h).collect())
}

/// Circular cross-correlations `S_ik(d) = dphi sum_m eta_i(m + d) conj(eta_k(m))` of the angular
/// profile sampled on the grid.
fn profile_correlation(grid: &PolarGrid, eta: &AngularProfile) -> Correlation {
    let n = grid.n_phi();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let spectra: Vec<Vec<C64>> = grid
        .radii()
        .iter()
        .map(|&r| {
            let mut row: Vec<C64> = (0..n).map(|m| eta(r, grid.phi(m))).collect();
            fwd.process(&mut row);
            row
        })
        .collect();
    let scale = grid.d_phi() / n as f64;
    Arc::new(move |i, k, out| {
        for ((o, a), b) in out.iter_mut().zip(&spectra[i]).zip(&spectra[k]) {
            *o = a * b.conj();
        }
        inv.process(out);
        out.iter_mut().for_each(|v| *v *= scale);
    })
}

/// `E(2)` kernel on labels `[a, b, c]`:
/// `int_annulus r dr dphi e^{-i r((a''-a') cos phi + (b''-b') sin phi)} eta^*(r, phi - c'') eta(r, phi - c')`.
pub fn e2_reduced_kernel(params: &SphereKernelParams) -> Result<Kernel> {
    let (lo, hi) = params.validate()?;
    let grid = params.grid(lo, hi)?;
    let eta = e2_fiducial(&params.eta, grid.radii())?;
    let correlation = profile_correlation(&grid, &eta);
    let amp_eta = eta.clone();
    let amplitude: Amplitude = Arc::new(move |x, r, phi| {
        C64::from_polar(1.0, r * (x[0] * phi.cos() + x[1] * phi.sin())) * amp_eta(r, phi - x[2])
    });
    let coupling = Coupling::Diagonal(grid.radii().iter().zip(grid.radial_weights()).map(|(r, w)| r * w).collect());
    let form = NodalForm::new(grid, coupling, amplitude, correlation)?;
    Ok(Kernel::from_nodal(3, format!("e2(delta={})", params.delta), form))
}

/// Radial profile for the second-class kernel.
#[derive(Clone)]
pub enum Zeta {
    /// Normalized Gaussian bump at `r = 1` with the given width, on `[1 - 8w, 1 + 8w]`.
    GaussianBump { width: f64 },
    /// User profile on `[r_lo, r_hi]`, which must already satisfy `int |zeta|^2 r dr = 1`.
    Custom { f: Arc<dyn Fn(f64) -> f64 + Send + Sync>, support: (f64, f64) },
}

impl std::fmt::Debug for Zeta {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Zeta::GaussianBump { width } => f.debug_struct("GaussianBump").field("width", width).finish(),
            Zeta::Custom { support, .. } => f.debug_struct("Custom").field("support", support).finish(),
        }
    }
}

impl Zeta {
    pub fn default_for(delta: f64) -> Self {
        Zeta::GaussianBump { width: 0.5 * delta }
    }

    fn support(&self) -> (f64, f64) {
        match self {
            Zeta::GaussianBump { width } => ((1.0 - 8.0 * width).max(0.0), 1.0 + 8.0 * width),
            Zeta::Custom { support, .. } => *support,
        }
    }

    fn function(&self) -> Result<Arc<dyn Fn(f64) -> f64 + Send + Sync>> {
        match self {
            Zeta::GaussianBump { width } => {
                let w = *width;
                if !(w > 0.0) {
                    return Err(Error::Domain("zeta width must be positive".into()));
                }
                let (lo, hi) = self.support();
                let bump = move |r: f64| (-(r - 1.0).powi(2) / (2.0 * w * w)).exp();
                let norm2 = GaussLegendre::cached(32).integrate(lo, hi, 16, |r| bump(r).powi(2) * r);
                let c = 1.0 / norm2.sqrt();
                Ok(Arc::new(move |r| c * bump(r)))
            }
            Zeta::Custom { f, .. } => Ok(f.clone()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct HypersphereParams {
    pub j: usize,
    pub zeta: Zeta,
    pub quadrature: NodalQuadrature,
}

impl HypersphereParams {
    pub fn default_for(delta: f64) -> Self {
        Self { j: 2, zeta: Zeta::default_for(delta), quadrature: NodalQuadrature { panels: 24, order: 8, n_phi: 1024 } }
    }
}

/// `int dgamma conj(A''(gamma)) A'(gamma)` with `A(gamma) = int zeta(r) r e^{i r p.gamma} eta(r gamma - q) dr`
/// for a centred unit Gaussian `eta`, on labels `[p1, p2, q1, q2]`.
pub fn hypersphere_second_class_kernel(params: &HypersphereParams) -> Result<Kernel> {
    if params.j != 2 {
        return Err(Error::Domain(format!("only J = 2 is implemented, got J = {}", params.j)));
    }
    let (lo, hi) = params.zeta.support();
    let q = params.quadrature;
    let grid = PolarGrid::new(lo, hi, q.panels, q.order, q.n_phi)?;
    let zeta = params.zeta.function()?;
    let norm: f64 = grid.radii().iter().zip(grid.radial_weights()).map(|(&r, &w)| w * zeta(r).powi(2) * r).sum();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::Precondition(format!("int |zeta|^2 r dr = {norm}, expected 1")));
    }
    let c: Vec<f64> = grid.radii().iter().zip(grid.radial_weights()).map(|(&r, &w)| w * zeta(r) * r).collect();
    let eta = gaussian_fiducial([0.0, 0.0], 1.0);
    let amplitude: Amplitude = Arc::new(move |x, r, phi| {
        let (g1, g2) = (phi.cos(), phi.sin());
        C64::from_polar(eta(r * g1 - x[2], r * g2 - x[3]), r * (x[0] * g1 + x[1] * g2))
    });
    let correlation = gaussian_correlation(&grid, 1.0);
    let form = NodalForm::new(grid, Coupling::RankOne(c), amplitude, correlation)?;
    Ok(Kernel::from_nodal(4, "hypersphere", form))
}

/// Regularized measures used by the reproducing checks. Annulus kernels have sharp radial edges,
/// so the smoothing error carries all powers of `sigma`; the smooth `zeta` profile leaves only even ones.
pub fn annulus_measure() -> Measure {
    Measure::Regularized { sigma0: 0.08, levels: 4, powers: vec![1.0, 2.0, 3.0] }
}

pub fn smooth_measure() -> Measure {
    Measure::Regularized { sigma0: 0.08, levels: 4, powers: vec![2.0, 4.0, 6.0] }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_diagonal_at_origin() {
        let p = SphereKernelParams::sphere_default();
        let k = sphere_projected_kernel(&p).unwrap();
        let x = [0.3, -0.1, 0.0, 0.0];
        let v = k.eval(&x, &x);
        let exact = (-(1.0 - p.delta)).exp() - (-(1.0 + p.delta)).exp();
        assert!((v.re - exact).abs() < 1e-12 && v.im.abs() < 1e-14);
    }

    #[test]
    fn only_j_two() {
        let mut p = SphereKernelParams::sphere_default();
        p.j = 3;
        assert!(sphere_projected_kernel(&p).is_err());
        assert!(e2_reduced_kernel(&p).is_err());
    }

    #[test]
    fn surface_constant() {
        let p = SphereKernelParams::e2_default();
        let radii: Vec<f64> = (0..5).map(|k| (0.8 + 0.1 * k as f64).sqrt()).collect();
        for v in surface_constant_profile(&p, &radii).unwrap() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn seed_matches_closed_gaussian() {
        let seed: SeedFn = Arc::new(|x, y| C64::new((-((x - 0.3).powi(2) + y * y) / 2.0).exp(), 0.0));
        let radii = [0.95, 1.0];
        let a = e2_fiducial(&Fiducial::Seed(seed), &radii).unwrap();
        let b = e2_fiducial(&Fiducial::Gaussian { center: [0.3, 0.0], width: 1.0 }, &radii).unwrap();
        for (r, th) in [(0.95, 0.4), (1.0, 2.0), (1.02, -1.0)] {
            assert!((a(r, th) - b(r, th)).norm() < 1e-12);
        }
    }

    #[test]
    fn vanishing_seed_rejected() {
        let seed: SeedFn = Arc::new(|x, _| C64::new(if x * x < 1.5 { 0.0 } else { 1.0 }, 0.0));
        assert!(e2_fiducial(&Fiducial::Seed(seed), &[1.0]).is_err());
    }

    #[test]
    fn zeta_normalization_enforced() {
        let mut p = HypersphereParams::default_for(0.2);
        p.quadrature = NodalQuadrature { panels: 8, order: 8, n_phi: 64 };
        assert!(hypersphere_second_class_kernel(&p).is_ok());
        p.zeta = Zeta::Custom { f: Arc::new(|_| 1.0), support: (0.9, 1.1) };
        assert!(matches!(hypersphere_second_class_kernel(&p), Err(Error::Precondition(_))));
    }
}
