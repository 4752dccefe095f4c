//! Two-axis two-spin squeezing on the pair ladder `|k_A>|k_B>`.
//!
//! `H = J (S_A^+ S_B^+ + S_A^- S_B^-)` moves both Fock labels together, so
//! starting from `|N_A>|N_B>` the state stays on the ladder
//! `|N_A - m + i>|N_B - m + i>`, `i = 0..=m`, `m = min(N_A, N_B)`. For equal
//! atom numbers this is the diagonal `|k>|k>` with `i = k`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::collective_spin::{ladder_coefficient, norm_sqr};
use crate::error::{Result, RspError};

const NORM_TOL: f64 = 1e-12;

/// Which phase convention a pair state is expressed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairFrame {
    /// Raw output of the squeezing evolution.
    Evolved,
    /// Ready for the protocol: squeezing output after the `exp(i S^z pi/8)`
    /// rotation on both sides, or the spin-EPR state.
    Aligned,
}

/// Amplitudes of a two-ensemble state supported on the pair ladder.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalPairState {
    n_alice: usize,
    n_bob: usize,
    psi: Vec<C64>,
    frame: PairFrame,
}

impl DiagonalPairState {
    /// Balanced pair, `psi[k]` on `|k>_A|k>_B`. Must be normalized.
    pub fn new(n_atoms: usize, psi: Vec<C64>, frame: PairFrame) -> Result<Self> {
        Self::with_atoms(n_atoms, n_atoms, psi, frame)
    }

    pub fn with_atoms(n_alice: usize, n_bob: usize, psi: Vec<C64>, frame: PairFrame) -> Result<Self> {
        let len = n_alice.min(n_bob) + 1;
        if psi.len() != len {
            return Err(RspError::Dimension {
                expected: len,
                found: psi.len(),
            });
        }
        if (norm_sqr(&psi) - 1.0).abs() > NORM_TOL {
            return Err(RspError::Contract("pair state must be normalized"));
        }
        Ok(Self {
            n_alice,
            n_bob,
            psi,
            frame,
        })
    }

    /// Alice's atom number. Equals Bob's for balanced pairs.
    pub fn n_atoms(&self) -> usize {
        self.n_alice
    }

    pub fn n_alice(&self) -> usize {
        self.n_alice
    }

    pub fn n_bob(&self) -> usize {
        self.n_bob
    }

    pub fn is_balanced(&self) -> bool {
        self.n_alice == self.n_bob
    }

    pub fn psi(&self) -> &[C64] {
        &self.psi
    }

    pub fn frame(&self) -> PairFrame {
        self.frame
    }

    /// Number of ladder rungs minus one.
    pub fn ladder_len(&self) -> usize {
        self.n_alice.min(self.n_bob)
    }

    /// Fock labels `(k_A, k_B)` of rung `i`.
    pub fn labels(&self, i: usize) -> (usize, usize) {
        let m = self.ladder_len();
        (self.n_alice - m + i, self.n_bob - m + i)
    }
}

/// Real symmetric tridiagonal matrix stored by its diagonals.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.diag));
        for (i, &v) in self.off.iter().enumerate() {
            m[(i + 1, i)] = v;
            m[(i, i + 1)] = v;
        }
        debug_assert_eq!(m.nrows(), n);
        m
    }
}

/// `H/J` on the balanced diagonal: zero diagonal, `<k+1,k+1|H|k,k> = (N-k)(k+1)`.
pub fn build_2a2s_tridiagonal(n_atoms: usize) -> Result<SymTridiagonal> {
    if n_atoms == 0 {
        return Err(RspError::AtomNumber { got: 0, min: 1 });
    }
    Ok(pair_hamiltonian(n_atoms, n_atoms))
}

/// `H/J` on the ladder of `|N_A>|N_B>`.
pub fn pair_hamiltonian(n_alice: usize, n_bob: usize) -> SymTridiagonal {
    let m = n_alice.min(n_bob);
    let off = (0..m)
        .map(|i| {
            let ka = n_alice - m + i;
            let kb = n_bob - m + i;
            ladder_coefficient(n_alice, ka) * ladder_coefficient(n_bob, kb)
        })
        .collect();
    SymTridiagonal {
        diag: vec![0.0; m + 1],
        off,
    }
}

/// Eigendecomposition of the pair Hamiltonian, reusable across times.
#[derive(Clone, Debug)]
pub struct PairPropagator {
    n_alice: usize,
    n_bob: usize,
    energies: Vec<f64>,
    vectors: DMatrix<f64>,
    /// Overlaps of the eigenvectors with the initial top rung.
    initial: Vec<f64>,
}

impl PairPropagator {
    pub fn new(n_alice: usize, n_bob: usize) -> Result<Self> {
        let h = pair_hamiltonian(n_alice, n_bob);
        let size = h.dim();
        let eig = SymmetricEigen::try_new(h.to_dense(), f64::EPSILON, 0)
            .ok_or(RspError::Eigensolver { size })?;
        let initial = eig.eigenvectors.row(size - 1).iter().copied().collect();
        Ok(Self {
            n_alice,
            n_bob,
            energies: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
            initial,
        })
    }

    pub fn balanced(n_atoms: usize) -> Result<Self> {
        if n_atoms == 0 {
            return Err(RspError::AtomNumber { got: 0, min: 1 });
        }
        Self::new(n_atoms, n_atoms)
    }

    /// `exp(-i H tau) |N_A>|N_B>` as ladder amplitudes.
    pub fn amplitudes(&self, tau: f64) -> Vec<C64> {
        let weights: Vec<C64> = self
            .energies
            .iter()
            .zip(&self.initial)
            .map(|(&e, &c)| C64::from_polar(c, -e * tau))
            .collect();
        (0..self.energies.len())
            .map(|i| {
                self.vectors
                    .row(i)
                    .iter()
                    .zip(&weights)
                    .map(|(&v, w)| w * v)
                    .sum()
            })
            .collect()
    }

    pub fn state(&self, tau: f64) -> DiagonalPairState {
        let mut psi = self.amplitudes(tau);
        // absorb the O(N eps) drift of the eigenvectors
        let norm = norm_sqr(&psi).sqrt();
        psi.iter_mut().for_each(|a| *a /= norm);
        DiagonalPairState {
            n_alice: self.n_alice,
            n_bob: self.n_bob,
            psi,
            frame: PairFrame::Evolved,
        }
    }
}

/// Squeezed pair at dimensionless time `tau = J t / hbar`, before the frame
/// rotation.
pub fn evolve_2a2s(n_atoms: usize, tau: f64) -> Result<DiagonalPairState> {
    if !(tau >= 0.0) {
        return Err(RspError::Parameter {
            name: "tau",
            reason: format!("must be non-negative, got {tau}"),
        });
    }
    Ok(PairPropagator::balanced(n_atoms)?.state(tau))
}

/// Multiplies rung `i` by `exp(i (2k_A - N_A) pi/8) exp(i (2k_B - N_B) pi/8)`.
pub fn apply_frame_rotation(state: &DiagonalPairState) -> DiagonalPairState {
    let psi = state
        .psi
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let (ka, kb) = state.labels(i);
            let sz_sum = (2 * ka) as f64 - state.n_alice as f64 + (2 * kb) as f64 - state.n_bob as f64;
            a * C64::from_polar(1.0, sz_sum * PI / 8.0)
        })
        .collect();
    DiagonalPairState {
        n_alice: state.n_alice,
        n_bob: state.n_bob,
        psi,
        frame: PairFrame::Aligned,
    }
}

/// `sum_k (-1)^k |k>|k> / sqrt(N+1)`.
pub fn epr_minus(n_atoms: usize) -> Result<DiagonalPairState> {
    if n_atoms == 0 {
        return Err(RspError::AtomNumber { got: 0, min: 1 });
    }
    let amp = 1.0 / ((n_atoms + 1) as f64).sqrt();
    let psi = (0..=n_atoms)
        .map(|k| C64::new(if k % 2 == 0 { amp } else { -amp }, 0.0))
        .collect();
    Ok(DiagonalPairState {
        n_alice: n_atoms,
        n_bob: n_atoms,
        psi,
        frame: PairFrame::Aligned,
    })
}

/// Pure-state fidelity `|<target|state>|^2`.
pub fn fidelity(state: &DiagonalPairState, target: &DiagonalPairState) -> Result<f64> {
    if state.n_alice != target.n_alice || state.n_bob != target.n_bob {
        return Err(RspError::Dimension {
            expected: target.psi.len(),
            found: state.psi.len(),
        });
    }
    let overlap: C64 = target
        .psi
        .iter()
        .zip(&state.psi)
        .map(|(t, s)| t.conj() * s)
        .sum();
    Ok(overlap.norm_sqr())
}

pub const SCAN_STEP: f64 = 1e-3;
const REFINE_TOL: f64 = 1e-6;

/// Time maximizing the fidelity of the frame-rotated squeezed state with the
/// spin-EPR state over `(0, pi/2]`.
pub fn find_optimal_time(n_atoms: usize) -> Result<(f64, f64)> {
    if n_atoms < 2 {
        return Err(RspError::AtomNumber { got: n_atoms, min: 2 });
    }
    let prop = PairPropagator::balanced(n_atoms)?;
    let target = epr_minus(n_atoms)?;
    let fid = |tau: f64| -> f64 {
        let state = apply_frame_rotation(&prop.state(tau));
        fidelity(&state, &target).unwrap_or(0.0)
    };

    let steps = (FRAC_PI_2 / SCAN_STEP).floor() as usize;
    let mut taus: Vec<f64> = (1..=steps).map(|j| j as f64 * SCAN_STEP).collect();
    if FRAC_PI_2 - taus[taus.len() - 1] > 1e-12 {
        taus.push(FRAC_PI_2);
    }
    let values: Vec<f64> = taus.iter().map(|&t| fid(t)).collect();
    let (best, &best_val) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("scan is non-empty");
    let worst = values.iter().copied().fold(f64::INFINITY, f64::min);
    if best_val - worst < 1e-12 {
        return Err(RspError::SearchFailed { n: n_atoms });
    }

    let lo = (taus[best] - SCAN_STEP).max(f64::MIN_POSITIVE);
    let hi = (taus[best] + SCAN_STEP).min(FRAC_PI_2);
    let tau = golden_section_max(&fid, lo, hi, REFINE_TOL);
    let refined = fid(tau);
    if refined >= best_val {
        Ok((tau, refined))
    } else {
        Ok((taus[best], best_val))
    }
}

fn golden_section_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// A squeezing evolution result with its bookkeeping.
#[derive(Clone, Debug)]
pub struct SqueezingRun {
    pub n_atoms: usize,
    pub tau: f64,
    pub state: DiagonalPairState,
    pub frame_rotated: bool,
}

impl SqueezingRun {
    pub fn new(n_atoms: usize, tau: f64, frame_rotated: bool) -> Result<Self> {
        let raw = evolve_2a2s(n_atoms, tau)?;
        let state = if frame_rotated {
            apply_frame_rotation(&raw)
        } else {
            raw
        };
        Ok(Self {
            n_atoms,
            tau,
            state,
            frame_rotated,
        })
    }
}

/// `Var(S^x_A + S^x_B)`, `Var(S^y_A - S^y_B)`, `Var(S^z_A - S^z_B)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VarianceTriple {
    pub var_xp: f64,
    pub var_ym: f64,
    pub var_zm: f64,
}

/// Variances of the correlated pair quadratures from ladder sums.
///
/// On the diagonal, `<S^x_A> = <S^y_A> = 0` and the only surviving cross term
/// is `c = <S^+_A S^+_B> = sum_k conj(psi_{k+1}) psi_k (N-k)(k+1)`, giving
/// `Var(S^x_A + S^x_B) = 2D + 4 Re c` and `Var(S^y_A - S^y_B) = 2D + 4 Re c`
/// with `D = sum_k |psi_k|^2 [k(N-k+1) + (k+1)(N-k)]`.
pub fn pair_variances(run: &SqueezingRun) -> Result<VarianceTriple> {
    if !run.frame_rotated || run.state.frame != PairFrame::Aligned {
        return Err(RspError::Contract(
            "pair variances are defined in the rotated frame",
        ));
    }
    let state = &run.state;
    if !state.is_balanced() {
        return Err(RspError::Contract("pair variances need equal atom numbers"));
    }
    let n = state.n_alice;
    let psi = &state.psi;
    let nf = n as f64;
    let diag: f64 = psi
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let kf = k as f64;
            a.norm_sqr() * (kf * (nf - kf + 1.0) + (kf + 1.0) * (nf - kf))
        })
        .sum();
    let cross: C64 = (0..n)
        .map(|k| psi[k + 1].conj() * psi[k] * ((n - k) * (k + 1)) as f64)
        .sum();
    let var_xp = 2.0 * diag + 4.0 * cross.re;
    let var_ym = 2.0 * diag + 4.0 * cross.re;

    let (mut mean, mut second) = (0.0, 0.0);
    for (i, a) in psi.iter().enumerate() {
        let (ka, kb) = state.labels(i);
        let dz = (2.0 * ka as f64 - nf) - (2.0 * kb as f64 - nf);
        mean += a.norm_sqr() * dz;
        second += a.norm_sqr() * dz * dz;
    }
    Ok(VarianceTriple {
        var_xp,
        var_ym,
        var_zm: second - mean * mean,
    })
}

/// Approximate short-time law `2N exp(-2N tau)` for the squeezed variances.
pub fn short_time_variance(n_atoms: usize, tau: f64) -> f64 {
    let n = n_atoms as f64;
    2.0 * n * (-2.0 * n * tau).exp()
}

/// `<psi|H/J|psi>` on the ladder.
pub fn pair_energy(state: &DiagonalPairState) -> f64 {
    let h = pair_hamiltonian(state.n_alice, state.n_bob);
    let psi = &state.psi;
    h.off
        .iter()
        .enumerate()
        .map(|(i, &v)| 2.0 * v * (psi[i + 1].conj() * psi[i]).re)
        .sum()
}
