//! Exact simulation of recursive two-pair entanglement purification
//! (BBPSSW and DEJMPS) with noisy bilateral CNOTs.
//!
//! The register holds four qubits in the order `A1, B1, A2, B2` (Alice and
//! Bob halves of the source pair, then the target pair), qubit 0 being the
//! most significant bit of the computational index. Internally both pairs are
//! rotated into the `phi+` frame by a `Y` on Bob's qubits, so that coincident
//! target measurements herald success. The surviving pair is rotated back
//! and twirled.
//!
//! Gate noise is a single-qubit Pauli channel on each of the four qubits right
//! after the bilateral CNOT:
//!
//! * `depolarizing`: `X`, `Y` or `Z`, each with probability `q/3`;
//! * `adversarial-xz`: `X` on Alice's qubits and `Z` on Bob's, each with
//!   probability `q`;
//! * `none`.
//!
//! A nonzero `measurement_flip` flips each target outcome independently.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::bell::{twirl, BellDiagonal, DensityMatrix4, Pauli};
use crate::error::{check_probability, check_range, Error, Result};
use crate::linalg::{CMat, CMat2, CMat4, C64};
use crate::solve::bisect;

/// Convergence threshold on successive fidelities.
pub const FIXED_POINT_TOL: f64 = 1e-10;

/// Band around `f0` inside which a recursion counts as stationary.
pub const VERDICT_TOL: f64 = 1e-9;

pub const MAX_ROUNDS: usize = 200;

/// Post-selection probabilities below this are treated as zero.
pub const MIN_SUCCESS: f64 = 1e-15;

/// Search interval and tolerance for [`protocol_threshold`].
pub const THRESHOLD_Q_MAX: f64 = 0.2;
pub const THRESHOLD_Q_TOL: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum NoiseModel {
    Depolarizing,
    AdversarialXz,
    None,
}

impl NoiseModel {
    pub const ALL: [NoiseModel; 3] = [
        NoiseModel::Depolarizing,
        NoiseModel::AdversarialXz,
        NoiseModel::None,
    ];

    pub fn label(self) -> &'static str {
        match self {
            NoiseModel::Depolarizing => "depolarizing",
            NoiseModel::AdversarialXz => "adversarial-xz",
            NoiseModel::None => "none",
        }
    }

    /// Pauli error probabilities on the given qubit (`0..4`), excluding
    /// identity.
    fn channel(self, q: f64, qubit: usize) -> Vec<(Pauli, f64)> {
        let alice = qubit.is_multiple_of(2);
        match self {
            NoiseModel::Depolarizing => Pauli::NON_TRIVIAL.iter().map(|&p| (p, q / 3.0)).collect(),
            NoiseModel::AdversarialXz if alice => vec![(Pauli::X, q)],
            NoiseModel::AdversarialXz => vec![(Pauli::Z, q)],
            NoiseModel::None => Vec::new(),
        }
    }
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for NoiseModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NoiseModel::ALL
            .into_iter()
            .find(|m| m.label() == s)
            .ok_or_else(|| Error::UnknownLabel {
                kind: "noise model",
                label: s.to_string(),
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GateNoiseSpec {
    pub model: NoiseModel,
    pub q: f64,
    pub measurement_flip: f64,
}

impl GateNoiseSpec {
    pub fn new(model: NoiseModel, q: f64, measurement_flip: f64) -> Result<Self> {
        check_probability("q", q)?;
        check_probability("measurement_flip", measurement_flip)?;
        Ok(GateNoiseSpec {
            model,
            q,
            measurement_flip,
        })
    }

    pub fn noiseless() -> Self {
        GateNoiseSpec {
            model: NoiseModel::None,
            q: 0.0,
            measurement_flip: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Protocol {
    Bbpssw,
    Dejmps,
}

impl Protocol {
    pub fn label(self) -> &'static str {
        match self {
            Protocol::Bbpssw => "bbpssw",
            Protocol::Dejmps => "dejmps",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Protocol::Bbpssw, Protocol::Dejmps]
            .into_iter()
            .find(|p| p.label() == s)
            .ok_or_else(|| Error::UnknownLabel {
                kind: "protocol",
                label: s.to_string(),
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Verdict {
    ConvergedUp,
    ConvergedDown,
    Stationary,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::ConvergedUp => "converged-up",
            Verdict::ConvergedDown => "converged-down",
            Verdict::Stationary => "stationary",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecursionTrace {
    /// `(fidelity, success probability)` after each round.
    pub rounds: Vec<(f64, f64)>,
    pub verdict: Verdict,
}

impl RecursionTrace {
    pub fn final_fidelity(&self) -> Option<f64> {
        self.rounds.last().map(|r| r.0)
    }
}

/// Four-qubit density matrix.
struct Register(Box<CMat<16>>);

impl Register {
    fn product(a: &CMat4, b: &CMat4) -> Self {
        let mut m = Box::new(CMat::<16>::zeros());
        for i in 0..16 {
            for j in 0..16 {
                m.0[i][j] = a.0[i >> 2][j >> 2] * b.0[i & 3][j & 3];
            }
        }
        Register(m)
    }

    fn mask(qubit: usize) -> usize {
        1 << (3 - qubit)
    }

    /// `rho -> U rho U^dagger` with `U` acting on one qubit.
    fn apply_unitary(&mut self, u: &CMat2, qubit: usize) {
        let bit = Self::mask(qubit);
        let m = &mut self.0 .0;
        for i0 in (0..16).filter(|i| i & bit == 0) {
            let i1 = i0 | bit;
            for j in 0..16 {
                let (r0, r1) = (m[i0][j], m[i1][j]);
                m[i0][j] = u.0[0][0] * r0 + u.0[0][1] * r1;
                m[i1][j] = u.0[1][0] * r0 + u.0[1][1] * r1;
            }
        }
        for row in m.iter_mut() {
            for j0 in (0..16).filter(|j| j & bit == 0) {
                let j1 = j0 | bit;
                let (c0, c1) = (row[j0], row[j1]);
                row[j0] = c0 * u.0[0][0].conj() + c1 * u.0[0][1].conj();
                row[j1] = c0 * u.0[1][0].conj() + c1 * u.0[1][1].conj();
            }
        }
    }

    fn apply_cnot(&mut self, control: usize, target: usize) {
        let (c, t) = (Self::mask(control), Self::mask(target));
        let perm = |i: usize| if i & c != 0 { i ^ t } else { i };
        let old = self.0.clone();
        for i in 0..16 {
            for j in 0..16 {
                self.0 .0[perm(i)][perm(j)] = old.0[i][j];
            }
        }
    }

    fn apply_pauli_channel(&mut self, errors: &[(Pauli, f64)], qubit: usize) {
        let total: f64 = errors.iter().map(|e| e.1).sum();
        if total == 0.0 {
            return;
        }
        let mut out = self.0.scale(1.0 - total);
        for &(pauli, prob) in errors {
            let mut branch = Register(self.0.clone());
            branch.apply_unitary(&pauli.matrix(), qubit);
            out = out + branch.0.scale(prob);
        }
        *self.0 = out;
    }

    /// Unnormalized state of the source pair given equal outcomes on the
    /// target pair.
    fn post_select_coincident(&self) -> CMat4 {
        CMat4::from_fn(|r, s| {
            [0b00, 0b11]
                .iter()
                .map(|mm| self.0 .0[(r << 2) | mm][(s << 2) | mm])
                .sum()
        })
    }
}

/// `I (x) Y`: moves a pair between the singlet and `phi+` frames.
fn frame_change() -> CMat4 {
    crate::linalg::kron2(&CMat2::identity(), &Pauli::Y.matrix())
}

/// `exp(-i angle X / 2)`.
fn rx(angle: f64) -> CMat2 {
    let (s, c) = (angle / 2.0).sin_cos();
    CMat([
        [C64::new(c, 0.0), C64::new(0.0, -s)],
        [C64::new(0.0, -s), C64::new(c, 0.0)],
    ])
}

/// One round of purification on source `a` and target `b`.
///
/// Returns the post-selection probability and the twirled surviving pair.
pub fn purification_round(
    a: &BellDiagonal,
    b: &BellDiagonal,
    noise: &GateNoiseSpec,
    protocol: Protocol,
) -> Result<(f64, BellDiagonal)> {
    check_probability("q", noise.q)?;
    check_probability("measurement_flip", noise.measurement_flip)?;

    let frame = frame_change();
    let ra = a.to_density().matrix().conjugate_by(&frame);
    let rb = b.to_density().matrix().conjugate_by(&frame);
    let mut reg = Register::product(&ra, &rb);

    if protocol == Protocol::Dejmps {
        let (alice, bob) = (
            rx(std::f64::consts::FRAC_PI_2),
            rx(-std::f64::consts::FRAC_PI_2),
        );
        for qubit in 0..4 {
            reg.apply_unitary(if qubit % 2 == 0 { &alice } else { &bob }, qubit);
        }
    }

    reg.apply_cnot(0, 2);
    reg.apply_cnot(1, 3);

    for qubit in 0..4 {
        reg.apply_pauli_channel(&noise.model.channel(noise.q, qubit), qubit);
    }
    if noise.measurement_flip > 0.0 {
        for qubit in [2, 3] {
            reg.apply_pauli_channel(&[(Pauli::X, noise.measurement_flip)], qubit);
        }
    }

    let kept = reg.post_select_coincident();
    let success = kept.trace().re;
    if !(success >= MIN_SUCCESS) {
        return Err(Error::ZeroSuccessProbability);
    }
    let out = kept.scale(1.0 / success).conjugate_by(&frame);
    Ok((success, twirl(&DensityMatrix4::from_matrix_unchecked(out))))
}

/// Iterates [`purification_round`] on identical copies starting from a Werner
/// state of fidelity `f0`.
///
/// BBPSSW re-twirls to a Werner state between rounds; DEJMPS carries the full
/// Bell-diagonal state. Stops when the fidelity changes by less than
/// [`FIXED_POINT_TOL`] or after `max_rounds`.
pub fn recurse_to_fixed_point(
    f0: f64,
    noise: &GateNoiseSpec,
    protocol: Protocol,
    max_rounds: usize,
) -> Result<RecursionTrace> {
    check_range("f0", f0, 0.25, 1.0)?;
    if max_rounds == 0 || max_rounds > MAX_ROUNDS {
        return Err(Error::InvalidRange(format!(
            "max_rounds = {max_rounds} must be in 1..={MAX_ROUNDS}"
        )));
    }
    let mut state = BellDiagonal::werner(f0)?;
    let mut rounds = Vec::new();
    for _ in 0..max_rounds {
        let (success, mut next) = purification_round(&state, &state, noise, protocol)?;
        if protocol == Protocol::Bbpssw {
            next = BellDiagonal::werner(next.fidelity().clamp(0.0, 1.0))?;
        }
        let delta = (next.fidelity() - state.fidelity()).abs();
        rounds.push((next.fidelity(), success));
        state = next;
        if delta < FIXED_POINT_TOL {
            break;
        }
    }
    let last = state.fidelity();
    let verdict = if last > f0 + VERDICT_TOL {
        Verdict::ConvergedUp
    } else if last < f0 - VERDICT_TOL {
        Verdict::ConvergedDown
    } else {
        Verdict::Stationary
    };
    Ok(RecursionTrace { rounds, verdict })
}

/// Largest per-qubit gate error at which recursive purification from `f0`
/// still converges upward, to within `1e-5` in `q`.
pub fn protocol_threshold(model: NoiseModel, protocol: Protocol, f0: f64) -> Result<f64> {
    if !(f0 > 0.5 && f0 <= 1.0) {
        return Err(Error::OutOfRange {
            name: "f0",
            value: f0,
            min: 0.5,
            max: 1.0,
        });
    }
    // +1 above the transition, -1 at or below it.
    let sign = |q: f64| -> Result<f64> {
        let noise = GateNoiseSpec::new(model, q, 0.0)?;
        let trace = recurse_to_fixed_point(f0, &noise, protocol, MAX_ROUNDS)?;
        Ok(if trace.verdict == Verdict::ConvergedUp {
            -1.0
        } else {
            1.0
        })
    };
    let (lo, hi) = (0.0, THRESHOLD_Q_MAX);
    if sign(lo)? > 0.0 || sign(hi)? < 0.0 {
        return Err(Error::NoTransition { lo, hi });
    }
    // Errors inside the bisection cannot be propagated through the closure;
    // record the first one and surface it afterwards.
    let failure = std::cell::RefCell::new(None);
    let q = bisect(
        |q| match sign(q) {
            Ok(s) => s,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                1.0
            }
        },
        lo,
        hi,
        THRESHOLD_Q_TOL,
    )?;
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(q),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pure_singlets_are_preserved() {
        for protocol in [Protocol::Bbpssw, Protocol::Dejmps] {
            let s = BellDiagonal::SINGLET;
            let (p, out) =
                purification_round(&s, &s, &GateNoiseSpec::noiseless(), protocol).unwrap();
            assert_abs_diff_eq!(p, 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(out.fidelity(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn werner_075_bbpssw() {
        let w = BellDiagonal::werner(0.75).unwrap();
        let (p, out) =
            purification_round(&w, &w, &GateNoiseSpec::noiseless(), Protocol::Bbpssw).unwrap();
        assert_abs_diff_eq!(out.fidelity(), 0.78846, epsilon = 5e-6);
        assert_abs_diff_eq!(p, 0.72222, epsilon = 5e-6);
    }

    #[test]
    fn labels_round_trip() {
        for m in NoiseModel::ALL {
            assert_eq!(m.label().parse::<NoiseModel>().unwrap(), m);
        }
        assert_eq!("dejmps".parse::<Protocol>().unwrap(), Protocol::Dejmps);
        assert!("bbpsw".parse::<Protocol>().is_err());
    }

    #[test]
    fn recursion_examples() {
        let none = GateNoiseSpec::noiseless();
        let up = recurse_to_fixed_point(0.75, &none, Protocol::Bbpssw, 200).unwrap();
        assert_eq!(up.verdict, Verdict::ConvergedUp);
        assert!(up.final_fidelity().unwrap() >= 0.999);

        let half = recurse_to_fixed_point(0.5, &none, Protocol::Bbpssw, 200).unwrap();
        assert_ne!(half.verdict, Verdict::ConvergedUp);

        let noisy = GateNoiseSpec::new(NoiseModel::Depolarizing, 0.2, 0.0).unwrap();
        let down = recurse_to_fixed_point(0.9, &noisy, Protocol::Dejmps, 200).unwrap();
        assert_eq!(down.verdict, Verdict::ConvergedDown);

        assert!(recurse_to_fixed_point(0.2, &none, Protocol::Bbpssw, 10).is_err());
        assert!(recurse_to_fixed_point(0.8, &none, Protocol::Bbpssw, 201).is_err());
    }

    #[test]
    fn noiseless_threshold_has_no_transition() {
        let err = protocol_threshold(NoiseModel::None, Protocol::Dejmps, 0.85).unwrap_err();
        assert!(matches!(err, Error::NoTransition { .. }));
        assert!(protocol_threshold(NoiseModel::Depolarizing, Protocol::Dejmps, 0.5).is_err());
    }
}
