//! Fidelities produced by preparation noise, noisy gates and qubit loss.
//!
//! Gate noise is modelled on the quotient of two-qubit Paulis by their action
//! on the singlet: an error on either qubit of a Bell pair only matters through
//! the Bell-index shift it induces (see [`crate::bell`]). Each of the `2n - 2`
//! measured-out qubits suffers a gate error with probability `q`; such errors
//! all reach the surviving pair as the same canceling Pauli class (`Y`), so
//! only the parity of their count matters. The surviving pair additionally
//! takes a direct error on each qubit with probability `q`.

use serde::Serialize;

use crate::bell::Pauli;
use crate::error::{check_probability, check_range, Error, Result};

/// Bell-index shift carried by errors propagated from measured-out qubits.
pub const PROPAGATED_CLASS: Pauli = Pauli::Y;

/// Largest `n` the enumeration oracle accepts (`2^(2n-2)` patterns).
pub const ORACLE_MAX_COPIES: u32 = 8;

/// Tolerance used when grouping survey fidelities into distinct values.
pub const SURVEY_TOL: f64 = 1e-12;

/// Preparation error `p` and gate error `q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NoiseParams {
    pub p: f64,
    pub q: f64,
}

impl NoiseParams {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        check_probability("p", p)?;
        check_probability("q", q)?;
        Ok(NoiseParams { p, q })
    }

    pub fn initial_fidelity(&self) -> f64 {
        (1.0 - self.p) * (1.0 - self.p)
    }

    pub fn gate_fidelity(&self, n: f64) -> Result<f64> {
        fidelity_gate(self.q, n)
    }
}

/// Noise split into loss and fault components, for preparation (`p_*`) and
/// gates (`q_*`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LossParams {
    pub p_loss: f64,
    pub p_fault: f64,
    pub q_l: f64,
    pub q_f: f64,
}

impl LossParams {
    pub fn new(p_loss: f64, p_fault: f64, q_l: f64, q_f: f64) -> Result<Self> {
        check_probability("p_loss", p_loss)?;
        check_probability("p_fault", p_fault)?;
        check_probability("q_l", q_l)?;
        check_probability("q_f", q_f)?;
        Ok(LossParams {
            p_loss,
            p_fault,
            q_l,
            q_f,
        })
    }

    /// Same loss and fault rates for preparation and gates.
    pub fn symmetric(loss: f64, fault: f64) -> Result<Self> {
        Self::new(loss, fault, loss, fault)
    }
}

/// Fidelity after independent `X` and `Z` errors of probability `p` on the
/// two halves of a singlet: `(1 - p)^2`.
pub fn fidelity_initial(p: f64) -> Result<f64> {
    check_probability("p", p)?;
    Ok((1.0 - p) * (1.0 - p))
}

fn check_copies(n: f64) -> Result<f64> {
    check_range("n", n, 1.0, f64::MAX)
}

/// Closed-form worst-case gate fidelity
/// `(1 - 2q + 2q^2 + (1 - 2q)^(2n - 1)) / 2`. Accepts real `n >= 1`.
pub fn fidelity_gate(q: f64, n: f64) -> Result<f64> {
    check_range("q", q, 0.0, 0.5)?;
    check_copies(n)?;
    Ok(fidelity_gate_unchecked(q, n))
}

pub(crate) fn fidelity_gate_unchecked(q: f64, n: f64) -> f64 {
    let d = 1.0 - 2.0 * q;
    0.5 * (1.0 - 2.0 * q + 2.0 * q * q + d.powf(2.0 * n - 1.0))
}

fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Gate fidelity from the two binomial sums over even and odd numbers of
/// propagated errors. Integer `n` only.
pub fn fidelity_gate_sum(q: f64, n: u32) -> Result<f64> {
    check_probability("q", q)?;
    if n == 0 {
        return Err(Error::OutOfRange {
            name: "n",
            value: 0.0,
            min: 1.0,
            max: f64::MAX,
        });
    }
    let m_total = 2 * n - 2;
    let r = 1.0 - q;

    let even: f64 = (0..n)
        .map(|m| {
            binomial(m_total, 2 * m) * q.powi(2 * m as i32) * r.powi((2 * n - 2 * m - 2) as i32)
        })
        .sum();
    let odd: f64 = (0..n.saturating_sub(1))
        .map(|m| {
            binomial(m_total, 2 * m + 1)
                * q.powi(2 * m as i32 + 1)
                * r.powi((2 * n - 2 * m - 3) as i32)
        })
        .sum();

    Ok(r * r * even + q * q * odd)
}

/// Probabilities of each net Bell-index shift (indexed by code, see
/// [`Pauli::bell_code`]) on the surviving pair, for direct errors `X` and `Z`.
///
/// Closed form of the enumeration in [`gate_channel_oracle`]; accepts real
/// `n >= 1`.
pub fn gate_channel(q: f64, n: f64) -> Result<[f64; 4]> {
    check_range("q", q, 0.0, 0.5)?;
    check_copies(n)?;
    Ok(gate_channel_unchecked(q, n))
}

pub(crate) fn gate_channel_unchecked(q: f64, n: f64) -> [f64; 4] {
    let bias = (1.0 - 2.0 * q).powf(2.0 * n - 2.0);
    let even = 0.5 * (1.0 + bias);
    let odd = 0.5 * (1.0 - bias);
    let r = 1.0 - q;
    [
        r * r * even + q * q * odd,
        q * r,
        q * r,
        r * r * odd + q * q * even,
    ]
}

/// Exhaustive enumeration of gate-error patterns.
///
/// Returns the distribution of the net Bell-index shift on the surviving pair
/// when the `2n - 2` measured-out qubits each err with probability `q`
/// (contributing [`PROPAGATED_CLASS`] once per error) and the surviving qubits
/// take `direct_left` / `direct_right` with probability `q` each.
pub fn gate_channel_oracle(
    q: f64,
    n: u32,
    direct_left: Pauli,
    direct_right: Pauli,
) -> Result<[f64; 4]> {
    check_probability("q", q)?;
    if !(2..=ORACLE_MAX_COPIES).contains(&n) {
        return Err(Error::OutOfRange {
            name: "n",
            value: n as f64,
            min: 2.0,
            max: ORACLE_MAX_COPIES as f64,
        });
    }
    let measured = 2 * n - 2;
    let propagated = PROPAGATED_CLASS.bell_code();
    let mut dist = [0.0; 4];

    for pattern in 0u32..(1 << measured) {
        let errors = pattern.count_ones();
        let p_pattern = q.powi(errors as i32) * (1.0 - q).powi((measured - errors) as i32);
        let mut shift = 0;
        for _ in 0..errors {
            shift ^= propagated;
        }
        for left in [false, true] {
            for right in [false, true] {
                let p_left = if left { q } else { 1.0 - q };
                let p_right = if right { q } else { 1.0 - q };
                let mut net = shift;
                if left {
                    net ^= direct_left.bell_code();
                }
                if right {
                    net ^= direct_right.bell_code();
                }
                dist[net] += p_pattern * p_left * p_right;
            }
        }
    }
    Ok(dist)
}

/// Singlet survival probability from [`gate_channel_oracle`].
pub fn fidelity_gate_oracle(
    q: f64,
    n: u32,
    direct_left: Pauli,
    direct_right: Pauli,
) -> Result<f64> {
    Ok(gate_channel_oracle(q, n, direct_left, direct_right)?[0])
}

#[derive(Clone, Debug, Serialize)]
pub struct SurveyEntry {
    pub left: Pauli,
    pub right: Pauli,
    pub fidelity: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PauliPairSurvey {
    pub q: f64,
    pub n: u32,
    /// One entry per direct-error pair, in `X, Y, Z` x `X, Y, Z` order.
    pub entries: Vec<SurveyEntry>,
    /// Distinct fidelities, ascending, grouped within [`SURVEY_TOL`].
    pub distinct: Vec<f64>,
    pub minimum: f64,
}

impl PauliPairSurvey {
    /// Pairs achieving the minimum fidelity.
    pub fn worst_pairs(&self) -> Vec<(Pauli, Pauli)> {
        self.entries
            .iter()
            .filter(|e| e.fidelity <= self.minimum + SURVEY_TOL)
            .map(|e| (e.left, e.right))
            .collect()
    }
}

/// Evaluates the oracle for all nine non-trivial direct-error pairs and checks
/// that the worst one reproduces [`fidelity_gate`].
pub fn pauli_pair_survey(q: f64, n: u32) -> Result<PauliPairSurvey> {
    check_range("q", q, 0.0, 0.5)?;
    let mut entries = Vec::with_capacity(9);
    for left in Pauli::NON_TRIVIAL {
        for right in Pauli::NON_TRIVIAL {
            entries.push(SurveyEntry {
                left,
                right,
                fidelity: fidelity_gate_oracle(q, n, left, right)?,
            });
        }
    }

    let mut sorted: Vec<f64> = entries.iter().map(|e| e.fidelity).collect();
    sorted.sort_by(f64::total_cmp);
    let mut distinct: Vec<f64> = Vec::new();
    for v in sorted {
        match distinct.last() {
            Some(last) if (v - last).abs() <= SURVEY_TOL => {}
            _ => distinct.push(v),
        }
    }
    let minimum = distinct[0];

    let closed = fidelity_gate(q, n as f64)?;
    if (minimum - closed).abs() > SURVEY_TOL {
        return Err(Error::PostCondition(format!(
            "survey minimum {minimum} differs from closed form {closed}"
        )));
    }

    Ok(PauliPairSurvey {
        q,
        n,
        entries,
        distinct,
        minimum,
    })
}

/// Initial fidelity with loss: a lost qubit is replaced by a maximally mixed
/// one (fidelity 1/4).
pub fn loss_fidelity_initial(lp: &LossParams) -> Result<f64> {
    LossParams::new(lp.p_loss, lp.p_fault, lp.q_l, lp.q_f)?;
    Ok((1.0 - lp.p_loss) * (1.0 - lp.p_fault) * (1.0 - lp.p_fault) + lp.p_loss / 4.0)
}

/// Gate fidelity with loss,
/// `q_l/4 + (1-2q_f)^(2n-1) (1-q_l)^(2n-1) / 2 + (1-q_l)(1-2q_f+2q_f^2) / 2`.
///
/// Implemented term for term; note the last term carries a single `(1 - q_l)`
/// factor while the middle one carries `(1 - q_l)^(2n-1)`.
pub fn loss_fidelity_gate(lp: &LossParams, n: f64) -> Result<f64> {
    LossParams::new(lp.p_loss, lp.p_fault, lp.q_l, lp.q_f)?;
    check_copies(n)?;
    Ok(loss_fidelity_gate_unchecked(lp.q_l, lp.q_f, n))
}

pub(crate) fn loss_fidelity_gate_unchecked(q_l: f64, q_f: f64, n: f64) -> f64 {
    let e = 2.0 * n - 1.0;
    q_l / 4.0
        + 0.5 * (1.0 - 2.0 * q_f).powf(e) * (1.0 - q_l).powf(e)
        + 0.5 * (1.0 - q_l) * (1.0 - 2.0 * q_f + 2.0 * q_f * q_f)
}
