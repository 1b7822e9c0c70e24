//! Bell-basis state algebra and two-qubit entanglement measures.
//!
//! The Bell basis is ordered singlet-first, `(psi-, phi-, psi+, phi+)`, and the
//! computational basis is `|00>, |01>, |10>, |11>` with the first qubit most
//! significant.
//!
//! A single-qubit Pauli acting on either half of a Bell state maps it to
//! another Bell state (up to phase). With the codes `I = 0, X = 1, Z = 2,
//! Y = 3` that action is `k -> k ^ code`, which is why the Bell index of
//! `(sigma (x) I)|psi->` is simply the code of `sigma`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{check_probability, check_range, Error, Result};
use crate::linalg::{hermitian_eigen, singular_values, CMat, CMat4, C64, ZERO};
use crate::solve::{bisect, ROOT_TOL};

/// Tolerance on Bell weights and density-matrix invariants.
pub const STATE_TOL: f64 = 1e-12;

/// Smallest eigenvalue a density matrix may have before it is rejected.
pub const PSD_TOL: f64 = 1e-10;

/// Eigenvalues of a density matrix below this are dropped when forming its
/// square root for the concurrence.
const RANK_CUTOFF: f64 = 1e-14;

pub const BELL_LABELS: [&str; 4] = ["psi-", "phi-", "psi+", "phi+"];

/// Bell vectors in the computational basis, singlet first.
pub fn bell_vectors() -> [[C64; 4]; 4] {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    [
        [ZERO, h, -h, ZERO],
        [h, ZERO, ZERO, -h],
        [ZERO, h, h, ZERO],
        [h, ZERO, ZERO, h],
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    pub const NON_TRIVIAL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    /// Index shift this Pauli induces on the singlet-first Bell basis.
    pub fn bell_code(self) -> usize {
        match self {
            Pauli::I => 0,
            Pauli::X => 1,
            Pauli::Z => 2,
            Pauli::Y => 3,
        }
    }

    pub fn from_bell_code(code: usize) -> Pauli {
        match code & 3 {
            0 => Pauli::I,
            1 => Pauli::X,
            2 => Pauli::Z,
            _ => Pauli::Y,
        }
    }

    /// Product modulo phase.
    pub fn compose(self, other: Pauli) -> Pauli {
        Pauli::from_bell_code(self.bell_code() ^ other.bell_code())
    }

    pub fn matrix(self) -> CMat<2> {
        let o = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        match self {
            Pauli::I => CMat([[o, ZERO], [ZERO, o]]),
            Pauli::X => CMat([[ZERO, o], [o, ZERO]]),
            Pauli::Y => CMat([[ZERO, -i], [i, ZERO]]),
            Pauli::Z => CMat([[o, ZERO], [ZERO, -o]]),
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Pauli::I => "I",
            Pauli::X => "X",
            Pauli::Y => "Y",
            Pauli::Z => "Z",
        };
        f.write_str(s)
    }
}

impl FromStr for Pauli {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" => Ok(Pauli::I),
            "X" => Ok(Pauli::X),
            "Y" => Ok(Pauli::Y),
            "Z" => Ok(Pauli::Z),
            _ => Err(Error::UnknownLabel {
                kind: "Pauli",
                label: s.to_string(),
            }),
        }
    }
}

/// A two-qubit Pauli `left (x) right`, phase ignored.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct TwoQubitPauli {
    pub left: Pauli,
    pub right: Pauli,
}

impl TwoQubitPauli {
    pub const IDENTITY: TwoQubitPauli = TwoQubitPauli {
        left: Pauli::I,
        right: Pauli::I,
    };

    pub fn new(left: Pauli, right: Pauli) -> Self {
        TwoQubitPauli { left, right }
    }

    pub fn compose(self, other: TwoQubitPauli) -> TwoQubitPauli {
        TwoQubitPauli {
            left: self.left.compose(other.left),
            right: self.right.compose(other.right),
        }
    }

    /// Net Bell-index shift; local Paulis on either side act identically on
    /// Bell states, so the two codes combine by XOR.
    pub fn bell_code(self) -> usize {
        self.left.bell_code() ^ self.right.bell_code()
    }

    pub fn matrix(self) -> CMat4 {
        crate::linalg::kron2(&self.left.matrix(), &self.right.matrix())
    }
}

impl fmt::Display for TwoQubitPauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.left, self.right)
    }
}

/// A two-qubit state diagonal in the Bell basis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BellDiagonal {
    pub w_psi_minus: f64,
    pub w_phi_minus: f64,
    pub w_psi_plus: f64,
    pub w_phi_plus: f64,
}

impl BellDiagonal {
    pub const SINGLET: BellDiagonal = BellDiagonal {
        w_psi_minus: 1.0,
        w_phi_minus: 0.0,
        w_psi_plus: 0.0,
        w_phi_plus: 0.0,
    };

    /// Builds a state from weights in `(psi-, phi-, psi+, phi+)` order.
    ///
    /// Weights down to `-1e-12` are clamped to zero; the result is then
    /// renormalized. The sum must be within `1e-12` of one.
    pub fn new(weights: [f64; 4]) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < -STATE_TOL) {
            return Err(Error::InvalidState(format!("negative Bell weight {w:e}")));
        }
        let clamped = weights.map(|w| w.max(0.0));
        let sum: f64 = clamped.iter().sum();
        if (sum - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "Bell weights sum to {sum}, expected 1"
            )));
        }
        Ok(Self::from_array(clamped.map(|w| w / sum)))
    }

    /// Werner state: singlet weight `f`, the rest spread evenly.
    pub fn werner(f: f64) -> Result<Self> {
        check_probability("fidelity", f)?;
        let r = (1.0 - f) / 3.0;
        Ok(Self::from_array([f, r, r, r]))
    }

    pub fn maximally_mixed() -> Self {
        Self::from_array([0.25; 4])
    }

    pub(crate) fn from_array(w: [f64; 4]) -> Self {
        BellDiagonal {
            w_psi_minus: w[0],
            w_phi_minus: w[1],
            w_psi_plus: w[2],
            w_phi_plus: w[3],
        }
    }

    pub fn weights(&self) -> [f64; 4] {
        [
            self.w_psi_minus,
            self.w_phi_minus,
            self.w_psi_plus,
            self.w_phi_plus,
        ]
    }

    pub fn fidelity(&self) -> f64 {
        self.w_psi_minus
    }

    pub fn max_weight(&self) -> f64 {
        self.weights().into_iter().fold(0.0, f64::max)
    }

    /// Embeds the state as a 4x4 density matrix.
    pub fn to_density(&self) -> DensityMatrix4 {
        let bells = bell_vectors();
        let mut m = CMat4::zeros();
        for (w, b) in self.weights().iter().zip(bells.iter()) {
            if *w != 0.0 {
                m = m + CMat4::outer(b, b).scale(*w);
            }
        }
        DensityMatrix4(m)
    }

    /// Mixes in Bell-index shifts: `probs[code]` is the probability of
    /// shifting by `code`.
    pub fn apply_shift_channel(&self, probs: &[f64; 4]) -> BellDiagonal {
        let w = self.weights();
        let mut out = [0.0; 4];
        for (k, wk) in w.iter().enumerate() {
            for (code, p) in probs.iter().enumerate() {
                out[k ^ code] += wk * p;
            }
        }
        Self::from_array(out)
    }
}

/// Exact two-qubit density matrix in the computational basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix4(CMat4);

impl DensityMatrix4 {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(m: CMat4) -> Result<Self> {
        let defect = m.hermiticity_defect();
        if defect > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "matrix is not Hermitian (defect {defect:e})"
            )));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let eig = hermitian_eigen(&m)?;
        let min = eig.values[3];
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!(
                "matrix has negative eigenvalue {min:e}"
            )));
        }
        Ok(DensityMatrix4(m))
    }

    /// Skips validation. For matrices produced by trace-preserving maps of
    /// valid states.
    pub(crate) fn from_matrix_unchecked(m: CMat4) -> Self {
        DensityMatrix4(m)
    }

    pub fn pure(psi: &[C64; 4]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "state vector has squared norm {norm}"
            )));
        }
        Ok(DensityMatrix4(CMat4::outer(psi, psi)))
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix4(CMat4::identity().scale(0.25))
    }

    pub fn matrix(&self) -> &CMat4 {
        &self.0
    }

    /// Mixture `(1 - p) self + p U self U^dagger`.
    pub fn mix_with_conjugated(&self, p: f64, u: &CMat4) -> DensityMatrix4 {
        let rotated = self.0.conjugate_by(u);
        DensityMatrix4(self.0.scale(1.0 - p) + rotated.scale(p))
    }
}

/// Binary entropy in bits, with `0 log 0 = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    check_probability("x", x)?;
    Ok(entropy_unchecked(x))
}

fn entropy_unchecked(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    // ln_1p keeps the (1 - x) term accurate for small x
    -(x * x.ln() + (1.0 - x) * (-x).ln_1p()) / std::f64::consts::LN_2
}

/// Entropy of formation of a Bell-diagonal state with singlet fidelity `f`:
/// `H(1/2 + sqrt(f(1 - f)))` above one half, zero at or below.
pub fn eof(f: f64) -> Result<f64> {
    check_probability("fidelity", f)?;
    Ok(eof_unchecked(f))
}

pub(crate) fn eof_unchecked(f: f64) -> f64 {
    if f <= 0.5 {
        return 0.0;
    }
    // 1/2 - sqrt(f(1-f)) rewritten without cancellation
    let root = (f * (1.0 - f)).sqrt();
    let small = (f - 0.5) * (f - 0.5) / (0.5 + root);
    entropy_unchecked(small)
}

/// Inverse of [`eof`] on `[1/2, 1]`.
pub fn eof_inverse(s: f64) -> Result<f64> {
    eof_inverse_tol(s, ROOT_TOL)
}

/// [`eof_inverse`] with an explicit bisection tolerance.
pub fn eof_inverse_tol(s: f64, tol: f64) -> Result<f64> {
    check_range("entropy", s, 0.0, 1.0)?;
    if s == 0.0 {
        return Ok(0.5);
    }
    if s == 1.0 {
        return Ok(1.0);
    }
    bisect(|f| eof_unchecked(f) - s, 0.5, 1.0, tol)
}

/// Bell-basis diagonal of `rho`.
pub fn twirl(rho: &DensityMatrix4) -> BellDiagonal {
    let bells = bell_vectors();
    let w = bells.map(|b| rho.0.expectation(&b).re.max(0.0));
    let sum: f64 = w.iter().sum();
    BellDiagonal::from_array(w.map(|x| x / sum))
}

/// Permutes Bell weights according to the action of `op`.
pub fn pauli_apply(state: &BellDiagonal, op: TwoQubitPauli) -> BellDiagonal {
    let code = op.bell_code();
    let w = state.weights();
    let mut out = [0.0; 4];
    for (k, wk) in w.iter().enumerate() {
        out[k ^ code] = *wk;
    }
    BellDiagonal::from_array(out)
}

/// Spin-flip operator `Y (x) Y`.
fn spin_flip() -> CMat4 {
    TwoQubitPauli::new(Pauli::Y, Pauli::Y).matrix()
}

/// Wootters concurrence.
///
/// The `lambda_i` are the singular values of `sqrt(rho) sqrt(rho~)` with
/// `rho~ = (Y (x) Y) rho* (Y (x) Y)`; their squares are the eigenvalues of
/// `rho rho~`. Working with singular values keeps the vanishing `lambda_i` of
/// rank-deficient states at rounding level.
pub fn concurrence(rho: &DensityMatrix4) -> Result<f64> {
    let eig = hermitian_eigen(&rho.0)?;
    let mut sqrt_rho = CMat4::zeros();
    for k in 0..4 {
        let mu = eig.values[k];
        if mu <= RANK_CUTOFF {
            continue;
        }
        let v: [C64; 4] = std::array::from_fn(|i| eig.vectors.0[i][k]);
        sqrt_rho = sqrt_rho + CMat4::outer(&v, &v).scale(mu.sqrt());
    }
    let flip = spin_flip();
    let sqrt_tilde = flip * sqrt_rho.conj() * flip;
    let lambda = singular_values(&(sqrt_rho * sqrt_tilde))?;
    Ok((lambda[0] - lambda[1] - lambda[2] - lambda[3]).max(0.0))
}

/// Entanglement of formation from the concurrence.
pub fn eof_from_concurrence(c: f64) -> f64 {
    let c = c.clamp(0.0, 1.0);
    if c == 0.0 {
        return 0.0;
    }
    let small = c * c / (2.0 * (1.0 + (1.0 - c * c).sqrt()));
    entropy_unchecked(small)
}

/// Entanglement of formation of an arbitrary two-qubit state.
pub fn eof_general(rho: &DensityMatrix4) -> Result<f64> {
    Ok(eof_from_concurrence(concurrence(rho)?))
}
