//! Remote state preparation on a pair resource.
//!
//! Alice applies `U(theta, pi - phi)^dag = exp(i S^y theta/2) exp(i S^z (pi - phi)/2)`,
//! measures her Fock number `k`, and sends one bit telling Bob whether
//! `2k < N`. In that case Bob applies `exp(-i S^z pi/2)`. With the spin-EPR
//! resource Bob ends up with the rotated Fock state `|k>^(theta, phi)` (or
//! `|k>^(theta, phi + pi)` after the correction), whose spin vector points
//! along the target direction up to the sign of `<S^z>` for `2k < N`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::collective_spin::{
    rotated_fock_state, small_d_column, small_d_matrix, spin_expectations, EnsembleState,
    RotationSpec,
};
use crate::error::{Result, RspError};
use crate::squeezing::{apply_frame_rotation, DiagonalPairState, PairFrame, PairPropagator};

/// Outcomes below this probability carry no conditional state.
pub const ZERO_PROBABILITY: f64 = 1e-14;

/// Result of Alice measuring `k`.
#[derive(Clone, Debug)]
pub struct ProtocolOutcome {
    pub k: usize,
    pub probability: f64,
    /// Bob's normalized state after the correction; `None` when the outcome
    /// has zero probability.
    pub bob_state: Option<EnsembleState>,
    pub bob_spins: Option<[f64; 3]>,
    pub correction_applied: bool,
}

impl ProtocolOutcome {
    pub fn is_defined(&self) -> bool {
        self.bob_state.is_some()
    }
}

/// Bob's outcome in the ideal spin-EPR protocol.
#[derive(Clone, Debug)]
pub struct IdealOutcome {
    pub k: usize,
    pub bob_state: EnsembleState,
    pub bob_spins: [f64; 3],
}

/// Bob corrects when `2k < N` (so `k = N/2` is left alone).
pub fn needs_correction(k: usize, n_alice: usize) -> bool {
    2 * k < n_alice
}

/// Row `k` of Alice's unitary, `<k| exp(i S^y theta/2) exp(i S^z (pi - phi)/2) |k_A>`.
fn alice_row(n_alice: usize, k: usize, spec: RotationSpec) -> Vec<C64> {
    // exp(i S^y theta/2) = d(theta)^T
    let col = small_d_column(n_alice, k, spec.theta());
    let angle = 0.5 * (PI - spec.phi());
    col.iter()
        .enumerate()
        .map(|(ka, &d)| d * C64::from_polar(1.0, (2.0 * ka as f64 - n_alice as f64) * angle))
        .collect()
}

fn aligned(resource: &DiagonalPairState) -> std::borrow::Cow<'_, DiagonalPairState> {
    match resource.frame() {
        PairFrame::Aligned => std::borrow::Cow::Borrowed(resource),
        PairFrame::Evolved => std::borrow::Cow::Owned(apply_frame_rotation(resource)),
    }
}

/// Bob's conditional state for outcome `k` given Alice's row.
/// Outcomes with probability below `cutoff` are reported as undefined.
fn conditional(
    resource: &DiagonalPairState,
    k: usize,
    row: &[C64],
    cutoff: f64,
) -> Result<ProtocolOutcome> {
    let n_bob = resource.n_bob();
    let mut bob = vec![C64::zero(); n_bob + 1];
    for (i, amp) in resource.psi().iter().enumerate() {
        let (ka, kb) = resource.labels(i);
        bob[kb] += amp * row[ka];
    }
    let correction_applied = needs_correction(k, resource.n_alice());
    if correction_applied {
        for (kb, a) in bob.iter_mut().enumerate() {
            *a *= C64::from_polar(1.0, -(2.0 * kb as f64 - n_bob as f64) * PI / 2.0);
        }
    }
    let probability: f64 = bob.iter().map(|a| a.norm_sqr()).sum();
    if !(probability >= cutoff) {
        return Ok(ProtocolOutcome {
            k,
            probability: 0.0,
            bob_state: None,
            bob_spins: None,
            correction_applied,
        });
    }
    let state = EnsembleState::normalized(n_bob, bob)?;
    let spins = spin_expectations(&state)?;
    Ok(ProtocolOutcome {
        k,
        probability,
        bob_state: Some(state),
        bob_spins: Some(spins),
        correction_applied,
    })
}

/// Runs steps 3-5 for every outcome `k = 0..=N_A`. An un-rotated squeezing
/// state gets its frame rotation (step 2) first.
pub fn run_protocol(resource: &DiagonalPairState, spec: RotationSpec) -> Result<Vec<ProtocolOutcome>> {
    let resource = aligned(resource);
    (0..=resource.n_alice())
        .map(|k| {
            let row = alice_row(resource.n_alice(), k, spec);
            conditional(&resource, k, &row, ZERO_PROBABILITY)
        })
        .collect()
}

/// Single outcome of [`run_protocol`].
pub fn run_outcome(resource: &DiagonalPairState, spec: RotationSpec, k: usize) -> Result<ProtocolOutcome> {
    if k > resource.n_alice() {
        return Err(RspError::FockIndex {
            k,
            n: resource.n_alice(),
        });
    }
    let resource = aligned(resource);
    let row = alice_row(resource.n_alice(), k, spec);
    conditional(&resource, k, &row, ZERO_PROBABILITY)
}

/// `P_k(theta) = sum_k' |psi_k'|^2 |<k| exp(i S^y theta/2) |k'>|^2`, independent of `phi`.
pub fn outcome_probabilities(resource: &DiagonalPairState, theta: f64) -> Vec<f64> {
    let n = resource.n_alice();
    let d = small_d_matrix(n, theta);
    (0..=n)
        .map(|k| {
            resource
                .psi()
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    let (ka, _) = resource.labels(i);
                    a.norm_sqr() * d[(ka, k)] * d[(ka, k)]
                })
                .sum()
        })
        .collect()
}

/// `sum_k k P_k`.
pub fn mean_outcome(probs: &[f64]) -> Result<f64> {
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-8 {
        return Err(RspError::Unnormalized { sum });
    }
    Ok(probs.iter().enumerate().map(|(k, p)| k as f64 * p).sum())
}

/// Bob's state and spins in the ideal protocol.
pub fn ideal_outcome(n_atoms: usize, k: usize, spec: RotationSpec) -> Result<IdealOutcome> {
    if k > n_atoms {
        return Err(RspError::FockIndex { k, n: n_atoms });
    }
    let (theta, phi) = (spec.theta(), spec.phi());
    let target = if needs_correction(k, n_atoms) {
        RotationSpec::new(theta, phi + PI)
    } else {
        spec
    };
    let bob_state = rotated_fock_state(n_atoms, k, target)?;
    Ok(IdealOutcome {
        k,
        bob_state,
        bob_spins: ideal_spins(n_atoms, k, theta, phi),
    })
}

/// `(|2k-N| sin(theta) cos(phi), |2k-N| sin(theta) sin(phi), (2k-N) cos(theta))`.
pub fn ideal_spins(n_atoms: usize, k: usize, theta: f64, phi: f64) -> [f64; 3] {
    let signed = 2.0 * k as f64 - n_atoms as f64;
    let mag = signed.abs();
    [
        mag * theta.sin() * phi.cos(),
        mag * theta.sin() * phi.sin(),
        signed * theta.cos(),
    ]
}

/// `E_k = |<S>_actual - <S>_ideal| / 2N`.
pub fn error_k(outcome: &ProtocolOutcome, ideal: &IdealOutcome, n_atoms: usize) -> Result<f64> {
    if outcome.k != ideal.k {
        return Err(RspError::Contract("outcome and ideal refer to different k"));
    }
    let spins = outcome
        .bob_spins
        .ok_or(RspError::ZeroProbability { k: outcome.k })?;
    Ok(bloch_error(&spins, &ideal.bob_spins, n_atoms))
}

fn bloch_error(actual: &[f64; 3], ideal: &[f64; 3], n_atoms: usize) -> f64 {
    let dist = actual
        .iter()
        .zip(ideal)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    dist / (2.0 * n_atoms as f64)
}

/// Per-outcome probabilities and errors at one target direction.
#[derive(Clone, Debug, Serialize)]
pub struct ErrorProfile {
    pub n_atoms: usize,
    pub probabilities: Vec<f64>,
    /// `None` for zero-probability outcomes.
    pub errors: Vec<Option<f64>>,
}

impl ErrorProfile {
    /// `sum_k P_k E_k` over defined outcomes.
    pub fn average(&self) -> f64 {
        self.probabilities
            .iter()
            .zip(&self.errors)
            .filter_map(|(p, e)| e.map(|e| p * e))
            .sum()
    }

    /// Error and kept probability when only `k <= k_cut` or `k >= N - k_cut` survive.
    pub fn postselected(&self, k_cut: usize) -> Result<(f64, f64)> {
        let n = self.n_atoms;
        if 2 * k_cut >= n {
            return Err(RspError::PostSelectionCut { k_cut, n });
        }
        let (mut num, mut kept) = (0.0, 0.0);
        for (k, (p, e)) in self.probabilities.iter().zip(&self.errors).enumerate() {
            if k <= k_cut || k >= n - k_cut {
                if let Some(e) = e {
                    num += p * e;
                    kept += p;
                }
            }
        }
        if kept < ZERO_PROBABILITY {
            return Err(RspError::EmptyPostSelection { k_cut });
        }
        Ok((num / kept, kept))
    }
}

pub fn error_profile(resource: &DiagonalPairState, spec: RotationSpec) -> Result<ErrorProfile> {
    if !resource.is_balanced() {
        return Err(RspError::Contract("error metrics need equal atom numbers"));
    }
    let n = resource.n_atoms();
    let outcomes = run_protocol(resource, spec)?;
    let errors = outcomes
        .iter()
        .map(|o| {
            o.bob_spins
                .map(|s| bloch_error(&s, &ideal_spins(n, o.k, spec.theta(), spec.phi()), n))
        })
        .collect();
    Ok(ErrorProfile {
        n_atoms: n,
        probabilities: outcomes.iter().map(|o| o.probability).collect(),
        errors,
    })
}

/// `E_bar(theta, phi) = sum_k P_k E_k`.
pub fn average_error(resource: &DiagonalPairState, spec: RotationSpec) -> Result<f64> {
    Ok(error_profile(resource, spec)?.average())
}

/// Post-selected average error and the probability of keeping the shot.
pub fn postselected_error(
    resource: &DiagonalPairState,
    spec: RotationSpec,
    k_cut: usize,
) -> Result<(f64, f64)> {
    if 2 * k_cut >= resource.n_atoms() {
        return Err(RspError::PostSelectionCut {
            k_cut,
            n: resource.n_atoms(),
        });
    }
    error_profile(resource, spec)?.postselected(k_cut)
}

/// How Alice's outcome is chosen for each atom number `N_A`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum OutcomeRule {
    /// `k = N_A`
    ExtremalHigh,
    /// `k = 0`
    ExtremalLow,
    Fixed(usize),
}

impl OutcomeRule {
    pub fn outcome(&self, n_alice: usize) -> Option<usize> {
        match *self {
            OutcomeRule::ExtremalHigh => Some(n_alice),
            OutcomeRule::ExtremalLow => Some(0),
            OutcomeRule::Fixed(k) => (k <= n_alice).then_some(k),
        }
    }
}

/// Gaussian shot-to-shot atom-number distribution.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FluctuationSpec {
    pub mean_atoms: f64,
    pub sigma0: f64,
    /// Half-width of the support in units of `sigma0`.
    pub truncation: f64,
    pub outcome_rule: OutcomeRule,
}

impl FluctuationSpec {
    pub fn new(mean_atoms: f64, sigma0: f64, outcome_rule: OutcomeRule) -> Result<Self> {
        let spec = Self {
            mean_atoms,
            sigma0,
            truncation: 4.0,
            outcome_rule,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if !(self.sigma0 > 0.0) || !self.sigma0.is_finite() {
            return Err(RspError::Parameter {
                name: "sigma0",
                reason: format!("must be positive, got {}", self.sigma0),
            });
        }
        if !(self.mean_atoms >= 0.0) || !self.mean_atoms.is_finite() {
            return Err(RspError::Parameter {
                name: "mean_atoms",
                reason: format!("must be non-negative, got {}", self.mean_atoms),
            });
        }
        if !(self.truncation > 0.0) {
            return Err(RspError::Parameter {
                name: "truncation",
                reason: format!("must be positive, got {}", self.truncation),
            });
        }
        Ok(())
    }

    /// `(N, p(N))` on the truncated support, renormalized.
    pub fn weights(&self) -> Vec<(usize, f64)> {
        let half = self.truncation * self.sigma0;
        let lo = (self.mean_atoms - half).ceil().max(0.0) as usize;
        let hi = (self.mean_atoms + half).floor().max(0.0) as usize;
        if lo > hi {
            return vec![(self.mean_atoms.round() as usize, 1.0)];
        }
        let support: Vec<usize> = (lo..=hi).collect();
        let raw: Vec<f64> = support
            .iter()
            .map(|&n| {
                let d = n as f64 - self.mean_atoms;
                (-d * d / (2.0 * self.sigma0 * self.sigma0)).exp()
            })
            .collect();
        let total: f64 = raw.iter().sum();
        support
            .into_iter()
            .zip(raw)
            .map(|(n, w)| (n, w / total))
            .collect()
    }
}

/// Number-averaged spin vector of Bob, each term divided by `N_B`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FluctuationAverage {
    pub spins: [f64; 3],
    /// `(N_A, N_B)` terms left out: empty Bob ensemble, zero-probability
    /// outcome, or a fixed outcome larger than `N_A`.
    pub skipped: usize,
}

/// `sum p(N_A) p(N_B) <S^j_B> / N_B` for a common squeezing time `tau`.
pub fn fluctuating_spin_averages(
    fspec: &FluctuationSpec,
    spec: RotationSpec,
    tau: f64,
) -> Result<FluctuationAverage> {
    Ok(fluctuating_spin_curve(fspec, &[spec], tau)?[0])
}

/// [`fluctuating_spin_averages`] for many directions, evolving each
/// `(N_A, N_B)` pair once.
pub fn fluctuating_spin_curve(
    fspec: &FluctuationSpec,
    specs: &[RotationSpec],
    tau: f64,
) -> Result<Vec<FluctuationAverage>> {
    fspec.validate()?;
    if !(tau >= 0.0) {
        return Err(RspError::Parameter {
            name: "tau",
            reason: format!("must be non-negative, got {tau}"),
        });
    }
    // Extremal rows of the rotation are single products, accurate to full
    // relative precision however small, so only a vanishing outcome is
    // undefined there.
    let cutoff = match fspec.outcome_rule {
        OutcomeRule::Fixed(_) => ZERO_PROBABILITY,
        _ => f64::MIN_POSITIVE,
    };
    let weights = fspec.weights();
    let pairs: Vec<(usize, f64, usize, f64)> = weights
        .iter()
        .flat_map(|&(na, pa)| weights.iter().map(move |&(nb, pb)| (na, pa, nb, pb)))
        .collect();

    let resources: Vec<Option<DiagonalPairState>> = pairs
        .par_iter()
        .map(|&(na, _, nb, _)| {
            if nb == 0 || fspec.outcome_rule.outcome(na).is_none() {
                return Ok(None);
            }
            let prop = PairPropagator::new(na, nb)?;
            Ok(Some(apply_frame_rotation(&prop.state(tau))))
        })
        .collect::<Result<_>>()?;

    specs
        .iter()
        .map(|&spec| {
            let terms: Vec<Option<[f64; 3]>> = pairs
                .par_iter()
                .zip(&resources)
                .map(|(&(na, pa, nb, pb), resource)| {
                    let Some(resource) = resource else {
                        return Ok(None);
                    };
                    let k = fspec.outcome_rule.outcome(na).expect("checked above");
                    let row = alice_row(na, k, spec);
                    let outcome = conditional(resource, k, &row, cutoff)?;
                    Ok(outcome.bob_spins.map(|s| {
                        let w = pa * pb / nb as f64;
                        [w * s[0], w * s[1], w * s[2]]
                    }))
                })
                .collect::<Result<_>>()?;
            let mut spins = [0.0; 3];
            let mut skipped = 0;
            // fixed reduction order
            for term in terms {
                match term {
                    Some(t) => {
                        spins[0] += t[0];
                        spins[1] += t[1];
                        spins[2] += t[2];
                    }
                    None => skipped += 1,
                }
            }
            Ok(FluctuationAverage { spins, skipped })
        })
        .collect()
}
