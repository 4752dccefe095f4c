//! Single-ensemble algebra in the Fock basis `|k>`, `k = 0..=N` atoms in mode `b`.
//!
//! Spin operators use the Schwinger-boson convention `S^x = b^dag a + a^dag b`,
//! so `S^z |k> = (2k - N) |k>` and `[S^x, S^y] = 2i S^z`.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{Float, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Result, RspError};
use crate::lnfact::{binomial, ln_abs_bigint, ln_factorial};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

const NORM_TOL: f64 = 1e-12;

/// Amplitudes of one ensemble over `|0>, ..., |N>`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleState {
    n_atoms: usize,
    amplitudes: Vec<C64>,
    normalized: bool,
}

impl EnsembleState {
    /// Wraps raw amplitudes. The normalized flag is set when the norm is 1.
    pub fn new(n_atoms: usize, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != n_atoms + 1 {
            return Err(RspError::Dimension {
                expected: n_atoms + 1,
                found: amplitudes.len(),
            });
        }
        let normalized = (norm_sqr(&amplitudes) - 1.0).abs() < NORM_TOL;
        Ok(Self {
            n_atoms,
            amplitudes,
            normalized,
        })
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(n_atoms: usize, amplitudes: Vec<C64>) -> Result<Self> {
        let mut state = Self::new(n_atoms, amplitudes)?;
        state.normalize()?;
        Ok(state)
    }

    pub fn fock(n_atoms: usize, k: usize) -> Result<Self> {
        if k > n_atoms {
            return Err(RspError::FockIndex { k, n: n_atoms });
        }
        let mut amplitudes = vec![C64::zero(); n_atoms + 1];
        amplitudes[k] = C64::new(1.0, 0.0);
        Ok(Self {
            n_atoms,
            amplitudes,
            normalized: true,
        })
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amplitudes)
    }

    pub fn normalize(&mut self) -> Result<()> {
        let norm = self.norm_sqr().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(RspError::DegenerateState);
        }
        let inv = 1.0 / norm;
        self.amplitudes.iter_mut().for_each(|a| *a *= inv);
        self.normalized = true;
        Ok(())
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &EnsembleState) -> Result<C64> {
        if self.n_atoms != other.n_atoms {
            return Err(RspError::Dimension {
                expected: self.n_atoms + 1,
                found: other.n_atoms + 1,
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn to_vector(&self) -> nalgebra::DVector<C64> {
        nalgebra::DVector::from_column_slice(&self.amplitudes)
    }
}

pub(crate) fn norm_sqr(amps: &[C64]) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum()
}

#[derive(Serialize, Deserialize)]
struct StateRepr {
    n: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Serialize for EnsembleState {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        StateRepr {
            n: self.n_atoms,
            re: self.amplitudes.iter().map(|a| a.re).collect(),
            im: self.amplitudes.iter().map(|a| a.im).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for EnsembleState {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = StateRepr::deserialize(deserializer)?;
        if repr.re.len() != repr.im.len() {
            return Err(serde::de::Error::custom("re and im lengths differ"));
        }
        let amps = repr
            .re
            .into_iter()
            .zip(repr.im)
            .map(|(re, im)| C64::new(re, im))
            .collect();
        EnsembleState::new(repr.n, amps).map_err(serde::de::Error::custom)
    }
}

/// Collective spin matrices at fixed `N`.
#[derive(Clone, Debug)]
pub struct SpinOperatorSet {
    pub n_atoms: usize,
    pub sx: CMatrix,
    pub sy: CMatrix,
    pub sz: CMatrix,
    pub splus: CMatrix,
    pub sminus: CMatrix,
}

/// `<k+1|S^+|k> = sqrt((N-k)(k+1))`.
#[inline]
pub fn ladder_coefficient(n_atoms: usize, k: usize) -> f64 {
    (((n_atoms - k) * (k + 1)) as f64).sqrt()
}

pub fn build_spin_operators(n_atoms: usize) -> Result<SpinOperatorSet> {
    if n_atoms == 0 {
        return Err(RspError::AtomNumber { got: 0, min: 1 });
    }
    let dim = n_atoms + 1;
    let mut splus = CMatrix::zeros(dim, dim);
    for k in 0..n_atoms {
        splus[(k + 1, k)] = C64::new(ladder_coefficient(n_atoms, k), 0.0);
    }
    let sminus = splus.adjoint();
    let sz = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(dim, |k, _| {
        C64::new(2.0 * k as f64 - n_atoms as f64, 0.0)
    }));
    let sx = &splus + &sminus;
    let i = C64::i();
    let sy = &splus * (-i) + &sminus * i;
    Ok(SpinOperatorSet {
        n_atoms,
        sx,
        sy,
        sz,
        splus,
        sminus,
    })
}

/// Bloch-sphere direction. Angles are reduced so `theta` is in `[0, pi]` and
/// `phi` in `[0, 2pi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationSpec {
    theta: f64,
    phi: f64,
}

impl RotationSpec {
    pub fn new(theta: f64, phi: f64) -> Self {
        let mut theta = theta.rem_euclid(TAU);
        let mut phi = phi;
        if theta > PI {
            theta = TAU - theta;
            phi += PI;
        }
        let mut phi = phi.rem_euclid(TAU);
        if phi >= TAU {
            phi = 0.0;
        }
        Self { theta, phi }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }
}

/// Real matrix `d[(k', k)] = <k'| exp(-i S^y theta / 2) |k>`.
///
/// Each entry is the closed-form alternating sum over `s` with
/// log-factorial prefactors. When the terms cancel beyond what f64 can
/// resolve (large `N` near the equator) the sum is redone exactly with big
/// integers on the dyadic expansions of `cos(theta/2)` and `sin(theta/2)`.
pub fn small_d_matrix(n_atoms: usize, theta: f64) -> DMatrix<f64> {
    let dim = n_atoms + 1;
    let half = 0.5 * theta;
    let (c, s) = (half.cos(), half.sin());
    let ctx = HalfAngle::new(c, s, n_atoms);
    let columns: Vec<Vec<f64>> = if dim > 48 {
        (0..dim)
            .into_par_iter()
            .map(|k| (0..dim).map(|kp| small_d_entry(n_atoms, kp, k, &ctx)).collect())
            .collect()
    } else {
        (0..dim)
            .map(|k| (0..dim).map(|kp| small_d_entry(n_atoms, kp, k, &ctx)).collect())
            .collect()
    };
    DMatrix::from_fn(dim, dim, |kp, k| columns[k][kp])
}

/// Column `k` of [`small_d_matrix`]: `<k'| exp(-i S^y theta / 2) |k>` for all `k'`.
pub fn small_d_column(n_atoms: usize, k: usize, theta: f64) -> Vec<f64> {
    let half = 0.5 * theta;
    let ctx = HalfAngle::new(half.cos(), half.sin(), n_atoms);
    (0..=n_atoms).map(|kp| small_d_entry(n_atoms, kp, k, &ctx)).collect()
}

/// Cached views of `cos(theta/2)`, `sin(theta/2)`.
struct HalfAngle {
    c: f64,
    s: f64,
    ln_c: f64,
    ln_s: f64,
    exact: std::sync::OnceLock<ExactHalfAngle>,
    n_atoms: usize,
}

/// `c = u_root * 2^e`, `s = v_root * 2^e` in the common exponent `e`; squares
/// and their powers kept as big integers.
struct ExactHalfAngle {
    u: BigInt,
    v_pows: Vec<BigInt>,
    two_exp: i64,
}

impl HalfAngle {
    fn new(c: f64, s: f64, n_atoms: usize) -> Self {
        Self {
            c,
            s,
            ln_c: c.abs().ln(),
            ln_s: s.abs().ln(),
            exact: std::sync::OnceLock::new(),
            n_atoms,
        }
    }

    fn exact(&self) -> &ExactHalfAngle {
        self.exact.get_or_init(|| {
            let (mc, ec) = dyadic(self.c);
            let (ms, es) = dyadic(self.s);
            let e = ec.min(es);
            let mc = mc << (ec - e) as usize;
            let ms = ms << (es - e) as usize;
            let u = &mc * &mc;
            let v = &ms * &ms;
            let mut v_pows = Vec::with_capacity(self.n_atoms + 1);
            let mut acc = BigInt::from(1);
            for _ in 0..=self.n_atoms {
                v_pows.push(acc.clone());
                acc *= &v;
            }
            ExactHalfAngle {
                u,
                v_pows,
                two_exp: e,
            }
        })
    }
}

/// `x = m * 2^e` exactly, with `m` a signed integer.
fn dyadic(x: f64) -> (BigInt, i64) {
    if x == 0.0 {
        return (BigInt::zero(), 0);
    }
    let (mantissa, exponent, sign) = x.integer_decode();
    (BigInt::from(mantissa) * sign, exponent as i64)
}

fn pow_log(ln_base: f64, base: f64, power: i64) -> Option<f64> {
    if power == 0 {
        Some(0.0)
    } else if base == 0.0 {
        None
    } else {
        Some(power as f64 * ln_base)
    }
}

fn pow_sign(base: f64, power: i64) -> f64 {
    if base < 0.0 && power % 2 == 1 {
        -1.0
    } else {
        1.0
    }
}

fn small_d_entry(n_atoms: usize, kp: usize, k: usize, ctx: &HalfAngle) -> f64 {
    let (n, kp, k) = (n_atoms as i64, kp as i64, k as i64);
    let s_min = 0.max(k - kp);
    let s_max = k.min(n - kp);
    if s_min > s_max {
        return 0.0;
    }
    let ln_pref = 0.5
        * (ln_factorial(k as usize)
            + ln_factorial((n - k) as usize)
            + ln_factorial(kp as usize)
            + ln_factorial((n - kp) as usize));

    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut abs_sum = 0.0;
    for s in s_min..=s_max {
        let pc = n + k - kp - 2 * s;
        let ps = kp - k + 2 * s;
        let (Some(lc), Some(ls)) = (pow_log(ctx.ln_c, ctx.c, pc), pow_log(ctx.ln_s, ctx.s, ps))
        else {
            continue;
        };
        let ln_term = ln_pref
            - ln_factorial((k - s) as usize)
            - ln_factorial(s as usize)
            - ln_factorial((kp - k + s) as usize)
            - ln_factorial((n - kp - s) as usize)
            + lc
            + ls;
        let parity = if (kp - k + s).rem_euclid(2) == 1 { -1.0 } else { 1.0 };
        let sign = parity * pow_sign(ctx.c, pc) * pow_sign(ctx.s, ps);
        let term = sign * ln_term.exp();
        abs_sum += term.abs();
        // Neumaier summation
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    // f64 keeps ~1e-13 absolute accuracy while the terms stay below this
    if abs_sum < 500.0 {
        return sum + comp;
    }
    exact_small_d_entry(n, kp, k, s_min, s_max, ctx)
}

fn exact_small_d_entry(n: i64, kp: i64, k: i64, s_min: i64, s_max: i64, ctx: &HalfAngle) -> f64 {
    let ex = ctx.exact();
    let len = (s_max - s_min) as usize;
    // sum_r b_r u^(len - r) v^r, Horner in the homogeneous form
    let mut acc = BigInt::zero();
    for r in 0..=len {
        let s = s_min + r as i64;
        let mut b = binomial(k, s) * binomial(n - k, kp - k + s);
        if (kp - k + s).rem_euclid(2) == 1 {
            b = -b;
        }
        acc = acc * &ex.u + b * &ex.v_pows[r];
    }
    if acc.is_zero() {
        return 0.0;
    }
    let pc_min = n + k - kp - 2 * s_max;
    let ps_min = kp - k + 2 * s_min;
    let (Some(lc), Some(ls)) = (
        pow_log(ctx.ln_c, ctx.c, pc_min),
        pow_log(ctx.ln_s, ctx.s, ps_min),
    ) else {
        return 0.0;
    };
    let ln_mag = 0.5
        * (ln_factorial(kp as usize) + ln_factorial((n - kp) as usize)
            - ln_factorial(k as usize)
            - ln_factorial((n - k) as usize))
        + ln_abs_bigint(&acc)
        + (2 * ex.two_exp * len as i64) as f64 * std::f64::consts::LN_2
        + lc
        + ls;
    let parity = if acc.is_negative() { -1.0 } else { 1.0 };
    let sign = parity * pow_sign(ctx.c, pc_min) * pow_sign(ctx.s, ps_min);
    sign * ln_mag.exp()
}

/// `U(theta, phi) = exp(-i S^z phi/2) exp(-i S^y theta/2)` in the Fock basis.
pub fn rotation_matrix(n_atoms: usize, spec: RotationSpec) -> Result<CMatrix> {
    if n_atoms == 0 {
        return Err(RspError::AtomNumber { got: 0, min: 1 });
    }
    Ok(rotation_from_angles(n_atoms, spec.theta(), spec.phi()))
}

/// Same as [`rotation_matrix`] with unreduced angles; also defined for `N = 0`.
pub(crate) fn rotation_from_angles(n_atoms: usize, theta: f64, phi: f64) -> CMatrix {
    let d = small_d_matrix(n_atoms, theta);
    let phases = z_phases(n_atoms, -0.5 * phi);
    CMatrix::from_fn(n_atoms + 1, n_atoms + 1, |kp, k| phases[kp] * d[(kp, k)])
}

/// Diagonal of `exp(i S^z angle)`: entries `exp(i (2k - N) angle)`.
pub fn z_phases(n_atoms: usize, angle: f64) -> Vec<C64> {
    (0..=n_atoms)
        .map(|k| C64::from_polar(1.0, (2.0 * k as f64 - n_atoms as f64) * angle))
        .collect()
}

/// `|k>^(theta, phi) = U(theta, phi) |k>`.
pub fn rotated_fock_state(n_atoms: usize, k: usize, spec: RotationSpec) -> Result<EnsembleState> {
    if k > n_atoms {
        return Err(RspError::FockIndex { k, n: n_atoms });
    }
    let u = rotation_matrix(n_atoms, spec)?;
    let amps = u.column(k).iter().copied().collect();
    let mut state = EnsembleState::new(n_atoms, amps)?;
    state.normalized = true;
    Ok(state)
}

/// `op * state`. The caller asserts whether `op` is unitary, which decides the
/// normalized flag of the result.
pub fn apply_operator(state: &EnsembleState, op: &CMatrix, unitary: bool) -> Result<EnsembleState> {
    let dim = state.n_atoms + 1;
    if op.nrows() != dim || op.ncols() != dim {
        return Err(RspError::Dimension {
            expected: dim,
            found: if op.nrows() != dim { op.nrows() } else { op.ncols() },
        });
    }
    let out = op * state.to_vector();
    Ok(EnsembleState {
        n_atoms: state.n_atoms,
        amplitudes: out.iter().copied().collect(),
        normalized: unitary && state.normalized,
    })
}

/// `(<S^x>, <S^y>, <S^z>)` normalized by `<psi|psi>`.
pub fn spin_expectations(state: &EnsembleState) -> Result<[f64; 3]> {
    let norm = state.norm_sqr();
    if norm == 0.0 || !norm.is_finite() {
        return Err(RspError::DegenerateState);
    }
    let n = state.n_atoms;
    let amps = &state.amplitudes;
    // <S^+> = sum_k conj(psi_{k+1}) psi_k sqrt((N-k)(k+1))
    let splus: C64 = (0..n)
        .map(|k| amps[k + 1].conj() * amps[k] * ladder_coefficient(n, k))
        .sum();
    let sz: f64 = amps
        .iter()
        .enumerate()
        .map(|(k, a)| a.norm_sqr() * (2.0 * k as f64 - n as f64))
        .sum();
    Ok([2.0 * splus.re / norm, 2.0 * splus.im / norm, sz / norm])
}
