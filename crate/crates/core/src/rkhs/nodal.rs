//! Planar kernels written as node sums on a polar grid,
//! `K(x'', x') = dphi sum_j conj(alpha''_j)^T B alpha'_j` with `alpha_ij(x)` the amplitude at node
//! `(r_i, phi_j)` and a real coupling `B` between radial nodes.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::quad::GaussLegendre;

#[derive(Debug, Clone)]
pub struct PolarGrid {
    radii: Vec<f64>,
    radial_weights: Vec<f64>,
    n_phi: usize,
}

impl PolarGrid {
    /// Composite Gauss-Legendre in `r` on `[r_lo, r_hi]` times a uniform angular grid.
    pub fn new(r_lo: f64, r_hi: f64, panels: usize, order: usize, n_phi: usize) -> Result<Self> {
        if !(0.0 <= r_lo && r_lo < r_hi) || n_phi < 8 || panels == 0 || order == 0 {
            return Err(Error::Domain(format!("bad polar grid [{r_lo}, {r_hi}] x {n_phi}")));
        }
        let (radii, radial_weights) = GaussLegendre::cached(order).composite(r_lo, r_hi, panels);
        Ok(Self { radii, radial_weights, n_phi })
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn radial_weights(&self) -> &[f64] {
        &self.radial_weights
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn d_phi(&self) -> f64 {
        2.0 * PI / self.n_phi as f64
    }

    pub fn phi(&self, j: usize) -> f64 {
        j as f64 * self.d_phi()
    }
}

/// Radial coupling `B`.
#[derive(Debug, Clone)]
pub enum Coupling {
    /// `B = diag(b)`: nodes interact only with themselves.
    Diagonal(Vec<f64>),
    /// `B = c c^T`: all radial nodes along one direction add coherently.
    RankOne(Vec<f64>),
}

/// `(label, r, phi) -> alpha`.
pub type Amplitude = Arc<dyn Fn(&[f64], f64, f64) -> C64 + Send + Sync>;
/// Fills `S_ik(d)` for `d = 0..n_phi`: the measure average of the non-momentum parts of
/// `alpha_{i,j+d} conj(alpha_{k,j})`.
pub type Correlation = Arc<dyn Fn(usize, usize, &mut [C64]) + Send + Sync>;

pub struct NodalForm {
    grid: PolarGrid,
    coupling: Coupling,
    amplitude: Amplitude,
    correlation: Correlation,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for NodalForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NodalForm").field("grid", &self.grid).field("coupling", &self.coupling).finish()
    }
}

impl NodalForm {
    pub fn new(grid: PolarGrid, coupling: Coupling, amplitude: Amplitude, correlation: Correlation) -> Result<Self> {
        let len = match &coupling {
            Coupling::Diagonal(b) => b.len(),
            Coupling::RankOne(c) => c.len(),
        };
        if len != grid.radii.len() {
            return Err(Error::Domain("coupling length must match radial nodes".into()));
        }
        let fft = FftPlanner::new().plan_fft_forward(grid.n_phi);
        Ok(Self { grid, coupling, amplitude, correlation, fft })
    }

    pub fn grid(&self) -> &PolarGrid {
        &self.grid
    }

    fn alpha(&self, x: &[f64]) -> Vec<Vec<C64>> {
        self.grid
            .radii
            .iter()
            .map(|&r| (0..self.grid.n_phi).map(|j| (self.amplitude)(x, r, self.grid.phi(j))).collect())
            .collect()
    }

    /// `beta = dphi B alpha`, so that `K(x'', x) = sum conj(beta''_ij) alpha_ij(x)`.
    fn beta(&self, x: &[f64]) -> Vec<Vec<C64>> {
        let a = self.alpha(x);
        let dphi = self.grid.d_phi();
        match &self.coupling {
            Coupling::Diagonal(b) => a
                .into_iter()
                .zip(b)
                .map(|(row, &bi)| row.into_iter().map(|v| v * (bi * dphi)).collect())
                .collect(),
            Coupling::RankOne(c) => {
                let s = self.collapse(&a, c);
                c.iter().map(|&ci| s.iter().map(|v| v * (ci * dphi)).collect()).collect()
            }
        }
    }

    fn collapse(&self, a: &[Vec<C64>], c: &[f64]) -> Vec<C64> {
        (0..self.grid.n_phi).map(|j| a.iter().zip(c).map(|(row, &ci)| row[j] * ci).sum()).collect()
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> C64 {
        let (ax, ay) = (self.alpha(x), self.alpha(y));
        let dphi = self.grid.d_phi();
        let total: C64 = match &self.coupling {
            Coupling::Diagonal(b) => ax
                .iter()
                .zip(&ay)
                .zip(b)
                .map(|((rx, ry), &bi)| rx.iter().zip(ry).map(|(u, v)| u.conj() * v).sum::<C64>() * bi)
                .sum(),
            Coupling::RankOne(c) => {
                let (sx, sy) = (self.collapse(&ax, c), self.collapse(&ay, c));
                sx.iter().zip(&sy).map(|(u, v)| u.conj() * v).sum()
            }
        };
        total * dphi
    }

    /// `int K(x'', x) K(x, x') dmu_sigma(x)` where the planar momentum integral carries the damping
    /// `exp(-sigma^2 |p|^2 / 2)`. Node pairs then couple through a normalized Gaussian of width
    /// `sigma` in their separation times the correlation `S`; the angular sum is a circular
    /// convolution done by FFT and Parseval.
    pub fn regularized_reproduce(&self, x2: &[f64], x1: &[f64], sigma: f64) -> C64 {
        let n = self.grid.n_phi;
        let spectra = |x: &[f64]| -> Vec<Vec<C64>> {
            self.beta(x)
                .into_iter()
                .map(|mut row| {
                    self.fft.process(&mut row);
                    row
                })
                .collect()
        };
        let (b2, b1) = (spectra(x2), spectra(x1));
        let radii = &self.grid.radii;
        let cos: Vec<f64> = (0..n).map(|d| self.grid.phi(d).cos()).collect();
        let norm = 1.0 / (2.0 * PI * sigma * sigma);
        let rows: Vec<C64> = (0..radii.len())
            .into_par_iter()
            .map(|i| {
                let mut m = vec![C64::new(0.0, 0.0); n];
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..radii.len() {
                    let (ri, rk) = (radii[i], radii[k]);
                    // u >= |r_i - r_k|, so far radial pairs contribute below e^{-40}
                    if (ri - rk).powi(2) > 80.0 * sigma * sigma {
                        continue;
                    }
                    (self.correlation)(i, k, &mut m);
                    for (d, v) in m.iter_mut().enumerate() {
                        let u2 = (ri * ri + rk * rk - 2.0 * ri * rk * cos[d]).max(0.0);
                        *v *= norm * (-u2 / (2.0 * sigma * sigma)).exp();
                    }
                    self.fft.process(&mut m);
                    acc += b2[i].iter().zip(&m).zip(&b1[k]).map(|((a, mm), b)| a.conj() * mm * b).sum::<C64>();
                }
                acc
            })
            .collect();
        rows.into_iter().sum::<C64>() / n as f64
    }
}

/// Correlation `exp(-u^2 / (4 w^2))` of a centred isotropic Gaussian of width `w` with itself at
/// separation `u`.
pub fn gaussian_correlation(grid: &PolarGrid, w: f64) -> Correlation {
    let radii = grid.radii.clone();
    let n = grid.n_phi;
    let cos: Vec<f64> = (0..n).map(|d| grid.phi(d).cos()).collect();
    Arc::new(move |i, k, out| {
        let (ri, rk) = (radii[i], radii[k]);
        for (d, v) in out.iter_mut().enumerate() {
            let u2 = ri * ri + rk * rk - 2.0 * ri * rk * cos[d];
            *v = C64::new((-u2 / (4.0 * w * w)).exp(), 0.0);
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_degenerate() {
        assert!(PolarGrid::new(1.0, 1.0, 2, 4, 64).is_err());
        assert!(PolarGrid::new(0.5, 1.0, 2, 4, 4).is_err());
    }

    #[test]
    fn rank_one_and_diagonal_agree_for_single_radius() {
        let grid = PolarGrid::new(0.9, 1.1, 1, 1, 64).unwrap();
        let amp: Amplitude = Arc::new(|x, r, phi| C64::from_polar(r, x[0] * phi));
        let corr = gaussian_correlation(&grid, 1.0);
        let a = NodalForm::new(grid.clone(), Coupling::Diagonal(vec![4.0]), amp.clone(), corr.clone()).unwrap();
        let b = NodalForm::new(grid, Coupling::RankOne(vec![2.0]), amp, corr).unwrap();
        let (x, y) = ([0.3], [-0.7]);
        assert!((a.eval(&x, &y) - b.eval(&x, &y)).norm() < 1e-13);
    }
}
