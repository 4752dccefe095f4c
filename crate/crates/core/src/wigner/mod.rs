//! Spin Wigner function `W(theta, phi) = sum_{k,q} rho_kq Y_kq(theta, phi)` of a
//! single-ensemble state, with spin `j = N/2` and `|j m> = |k = j + m>`.

mod harmonics;
mod quadrature;
mod threej;

use std::f64::consts::{PI, TAU};

use nalgebra::SymmetricEigen;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::collective_spin::{CMatrix, EnsembleState};
use crate::error::{Result, RspError};

pub use harmonics::{spherical_harmonic, LegendreTable};
pub use quadrature::{clenshaw_curtis, gauss_legendre};
pub use threej::wigner_3j;

const STATE_TOL: f64 = 1e-12;

/// Density matrix of spin `j = N/2` in the `|j m>` basis, `m = k - N/2`
/// ascending (same order as the Fock index).
#[derive(Clone, Debug)]
pub struct AngularState {
    two_j: usize,
    rho: CMatrix,
}

impl AngularState {
    /// Pure state `|psi><psi| / <psi|psi>`.
    pub fn from_ensemble(state: &EnsembleState) -> Result<Self> {
        let norm = state.norm_sqr();
        if norm == 0.0 || !norm.is_finite() {
            return Err(RspError::DegenerateState);
        }
        let v = state.to_vector() / C64::new(norm.sqrt(), 0.0);
        Ok(Self {
            two_j: state.n_atoms(),
            rho: &v * v.adjoint(),
        })
    }

    pub fn from_density(n_atoms: usize, rho: CMatrix) -> Result<Self> {
        let dim = n_atoms + 1;
        if rho.nrows() != dim || rho.ncols() != dim {
            return Err(RspError::Dimension {
                expected: dim,
                found: rho.nrows(),
            });
        }
        if (rho.trace() - C64::new(1.0, 0.0)).norm() > STATE_TOL {
            return Err(RspError::Contract("density matrix must have unit trace"));
        }
        if (&rho - rho.adjoint()).camax() > STATE_TOL {
            return Err(RspError::Contract("density matrix must be Hermitian"));
        }
        let eig = SymmetricEigen::new(rho.clone());
        if eig.eigenvalues.iter().any(|&e| e < -1e-10) {
            return Err(RspError::Contract("density matrix must be positive"));
        }
        Ok(Self {
            two_j: n_atoms,
            rho,
        })
    }

    /// `2j`, which equals the atom number.
    pub fn two_j(&self) -> usize {
        self.two_j
    }

    pub fn rho(&self) -> &CMatrix {
        &self.rho
    }
}

/// Multipole coefficients `rho_kq`, `0 <= k <= 2j`, `|q| <= k`.
#[derive(Clone, Debug)]
pub struct Multipoles {
    two_j: usize,
    coeffs: Vec<C64>,
}

impl Multipoles {
    pub fn rank_max(&self) -> usize {
        self.two_j
    }

    pub fn get(&self, k: usize, q: i64) -> C64 {
        assert!(q.unsigned_abs() as usize <= k && k <= self.two_j);
        self.coeffs[k * k + (q + k as i64) as usize]
    }

    /// `W(theta, phi)` at one point; the imaginary residue is dropped.
    pub fn evaluate(&self, theta: f64, phi: f64) -> f64 {
        let table = LegendreTable::new(self.two_j, theta.cos());
        self.evaluate_with(&table, phi)
    }

    fn evaluate_with(&self, table: &LegendreTable, phi: f64) -> f64 {
        let mut w = C64::new(0.0, 0.0);
        for k in 0..=self.two_j {
            w += self.get(k, 0) * table.get(k, 0);
            for q in 1..=k {
                let p = table.get(k, q);
                let e = C64::from_polar(1.0, q as f64 * phi);
                // Y_{k,-q} = (-1)^q conj(Y_kq)
                let sign = if q % 2 == 1 { -1.0 } else { 1.0 };
                w += p * (self.get(k, q as i64) * e + sign * self.get(k, -(q as i64)) * e.conj());
            }
        }
        debug_assert!(w.im.abs() < 1e-8, "W has imaginary residue {}", w.im);
        w.re
    }
}

/// `rho_kq = sum_{m,m'} (-1)^(j-m) sqrt(2k+1) (j k j; -m q m') <jm|rho|jm'>`.
pub fn multipole_decomposition(state: &AngularState) -> Multipoles {
    let two_j = state.two_j;
    let tj = two_j as i64;
    let mut coeffs = vec![C64::new(0.0, 0.0); (two_j + 1) * (two_j + 1)];
    for k in 0..=two_j {
        let root = ((2 * k + 1) as f64).sqrt();
        let tk = 2 * k as i64;
        for q in -(k as i64)..=(k as i64) {
            let mut acc = C64::new(0.0, 0.0);
            // selection rule -m + q + m' = 0 fixes the column: b = a - q
            for a in 0..=two_j {
                let b = a as i64 - q;
                if b < 0 || b > tj {
                    continue;
                }
                let tm = 2 * a as i64 - tj;
                let tmp = 2 * b - tj;
                let three = wigner_3j(tj, tk, tj, -tm, 2 * q, tmp);
                if three == 0.0 {
                    continue;
                }
                let sign = if (two_j - a) % 2 == 1 { -1.0 } else { 1.0 };
                acc += state.rho[(a, b as usize)] * (sign * root * three);
            }
            coeffs[k * k + (q + k as i64) as usize] = acc;
        }
    }
    Multipoles { two_j, coeffs }
}

/// Sampling layout for a [`SphereMap`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SphereGrid {
    /// Gauss-Legendre in `cos(theta)`, exact for band limit `2 n_theta - 1`.
    GaussLegendre { n_theta: usize, n_phi: usize },
    /// Equally spaced `theta` from pole to pole with Clenshaw-Curtis weights.
    Uniform { n_theta: usize, n_phi: usize },
}

impl SphereGrid {
    /// Smallest Gauss-Legendre grid that integrates a Wigner map of `N` atoms exactly.
    pub fn exact_for(n_atoms: usize) -> Self {
        SphereGrid::GaussLegendre {
            n_theta: 2 * n_atoms + 2,
            n_phi: 4 * n_atoms + 2,
        }
    }

    /// 121 x 241 plotting grid.
    pub fn plot_default() -> Self {
        SphereGrid::Uniform {
            n_theta: 121,
            n_phi: 241,
        }
    }

    fn sizes(&self) -> (usize, usize) {
        match *self {
            SphereGrid::GaussLegendre { n_theta, n_phi } | SphereGrid::Uniform { n_theta, n_phi } => {
                (n_theta, n_phi)
            }
        }
    }

    /// Colatitudes ascending with their `d cos(theta)` weights, plus azimuths
    /// with their `d phi` weights.
    pub fn nodes(&self) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
        let (n_theta, n_phi) = self.sizes();
        let min_theta = match self {
            SphereGrid::GaussLegendre { .. } => 1,
            SphereGrid::Uniform { .. } => 2,
        };
        if n_theta < min_theta || n_phi == 0 {
            return Err(RspError::Parameter {
                name: "grid",
                reason: format!("{n_theta} x {n_phi} is too small"),
            });
        }
        let (x, w) = match self {
            SphereGrid::GaussLegendre { .. } => gauss_legendre(n_theta),
            SphereGrid::Uniform { .. } => clenshaw_curtis(n_theta),
        };
        // rules return x descending, i.e. theta ascending
        let theta = x.iter().map(|&x| x.clamp(-1.0, 1.0).acos()).collect();
        let phi = (0..n_phi).map(|j| TAU * j as f64 / n_phi as f64).collect();
        let phi_w = vec![TAU / n_phi as f64; n_phi];
        Ok((theta, w, phi, phi_w))
    }
}

/// Real function sampled on a `(theta, phi)` grid with quadrature weights.
#[derive(Clone, Debug, Serialize)]
pub struct SphereMap {
    pub theta_nodes: Vec<f64>,
    pub phi_nodes: Vec<f64>,
    pub theta_weights: Vec<f64>,
    pub phi_weights: Vec<f64>,
    /// Row-major, `values[i][j] = f(theta_i, phi_j)`.
    pub values: Vec<Vec<f64>>,
}

impl SphereMap {
    pub fn from_fn(grid: SphereGrid, f: impl Fn(f64, f64) -> f64 + Sync) -> Result<Self> {
        let (theta_nodes, theta_weights, phi_nodes, phi_weights) = grid.nodes()?;
        let values = theta_nodes
            .par_iter()
            .map(|&t| phi_nodes.iter().map(|&p| f(t, p)).collect())
            .collect();
        Ok(Self {
            theta_nodes,
            phi_nodes,
            theta_weights,
            phi_weights,
            values,
        })
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.theta_weights[i] * self.phi_weights[j]
    }

    pub fn total_weight(&self) -> f64 {
        self.theta_weights.iter().sum::<f64>() * self.phi_weights.iter().sum::<f64>()
    }

    /// `integral f dOmega`.
    pub fn integrate(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, v)| v * self.weight(i, j))
                    .sum::<f64>()
            })
            .sum()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Grid indices of the largest value.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut val = f64::NEG_INFINITY;
        for (i, row) in self.values.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v > val {
                    val = v;
                    best = (i, j);
                }
            }
        }
        best
    }
}

/// Samples the spin Wigner function on `grid`.
pub fn wigner_map(state: &AngularState, grid: SphereGrid) -> Result<SphereMap> {
    let multipoles = multipole_decomposition(state);
    let (theta_nodes, theta_weights, phi_nodes, phi_weights) = grid.nodes()?;
    let values = theta_nodes
        .par_iter()
        .map(|&t| {
            let table = LegendreTable::new(multipoles.two_j, t.cos());
            phi_nodes
                .iter()
                .map(|&p| multipoles.evaluate_with(&table, p))
                .collect()
        })
        .collect();
    Ok(SphereMap {
        theta_nodes,
        phi_nodes,
        theta_weights,
        phi_weights,
        values,
    })
}

/// `sqrt(4 pi / (N + 1))`, the integral of any normalized Wigner map.
pub fn wigner_norm(n_atoms: usize) -> f64 {
    (4.0 * PI / (n_atoms + 1) as f64).sqrt()
}
