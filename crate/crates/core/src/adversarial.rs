//! Exact-channel check that the most destructive one-sided unitary error on a
//! Bell-diagonal state is a Pauli error.
//!
//! A unitary `U = exp(-i theta n.sigma)` applied to Alice's qubit with
//! probability `p` is evaluated on a `(theta, polar, azimuth)` grid. For each
//! point the exact output's entanglement of formation is computed from its
//! concurrence and compared against the twirled (Bell-diagonal) lower bound.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::Serialize;

use crate::bell::{eof_general, eof_unchecked, twirl, BellDiagonal, DensityMatrix4, Pauli};
use crate::error::{check_probability, check_range, Error, Result};
use crate::linalg::{kron2, CMat2, CMat4, C64};

/// Minimum resolution for [`worst_unitary_search`].
pub const MIN_GRID_STEPS: usize = 16;

/// Default resolution of each grid axis.
pub const DEFAULT_GRID_STEPS: usize = 64;

/// Grid values within this of the minimum count as tied.
pub const TIE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UnitaryAxisAngle {
    pub theta: f64,
    pub axis: [f64; 3],
}

impl UnitaryAxisAngle {
    pub fn new(theta: f64, axis: [f64; 3]) -> Result<Self> {
        check_range("theta", theta, 0.0, PI)?;
        let norm2: f64 = axis.iter().map(|a| a * a).sum();
        if (norm2 - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!(
                "rotation axis has squared norm {norm2}"
            )));
        }
        Ok(UnitaryAxisAngle { theta, axis })
    }

    /// Axis from polar and azimuthal angles.
    pub fn from_spherical(theta: f64, polar: f64, azimuth: f64) -> Result<Self> {
        let axis = [
            polar.sin() * azimuth.cos(),
            polar.sin() * azimuth.sin(),
            polar.cos(),
        ];
        Self::new(theta, axis)
    }

    /// `theta = pi/2` about a coordinate axis.
    pub fn pauli(p: Pauli) -> Result<Self> {
        let axis = match p {
            Pauli::X => [1.0, 0.0, 0.0],
            Pauli::Y => [0.0, 1.0, 0.0],
            Pauli::Z => [0.0, 0.0, 1.0],
            Pauli::I => return Self::new(0.0, [0.0, 0.0, 1.0]),
        };
        Self::new(FRAC_PI_2, axis)
    }

    /// `cos(theta) I - i sin(theta) n.sigma`.
    pub fn matrix(&self) -> CMat2 {
        let (s, c) = self.theta.sin_cos();
        let [nx, ny, nz] = self.axis;
        crate::linalg::CMat([
            [C64::new(c, -s * nz), C64::new(-s * ny, -s * nx)],
            [C64::new(s * ny, -s * nx), C64::new(c, s * nz)],
        ])
    }

    /// Angle between the axis and the nearest signed coordinate axis, with
    /// the Pauli for that axis.
    pub fn nearest_pauli(&self) -> (Pauli, f64) {
        let abs = self.axis.map(f64::abs);
        let (k, m) = abs.iter().enumerate().fold(
            (0, -1.0),
            |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
        );
        let pauli = [Pauli::X, Pauli::Y, Pauli::Z][k];
        (pauli, m.min(1.0).acos())
    }
}

/// `(1 - p) rho + p (U (x) I) rho (U (x) I)^dagger` for the Bell-diagonal
/// `state`.
pub fn unitary_noise_channel(
    state: &BellDiagonal,
    p: f64,
    u: &UnitaryAxisAngle,
) -> Result<DensityMatrix4> {
    check_probability("p", p)?;
    Ok(channel_unchecked(state, p, u))
}

fn channel_unchecked(state: &BellDiagonal, p: f64, u: &UnitaryAxisAngle) -> DensityMatrix4 {
    let local: CMat4 = kron2(&u.matrix(), &CMat2::identity());
    state.to_density().mix_with_conjugated(p, &local)
}

/// Bell-index shift probabilities equivalent to the twirled channel:
/// Pauli `i` with probability `p n_i^2 sin^2(theta)`.
pub fn pauli_mixing_probabilities(p: f64, u: &UnitaryAxisAngle) -> [f64; 4] {
    let s2 = u.theta.sin().powi(2);
    let [nx, ny, nz] = u.axis;
    let mut probs = [0.0; 4];
    probs[Pauli::X.bell_code()] = p * nx * nx * s2;
    probs[Pauli::Y.bell_code()] = p * ny * ny * s2;
    probs[Pauli::Z.bell_code()] = p * nz * nz * s2;
    probs[0] = 1.0 - probs[1] - probs[2] - probs[3];
    probs
}

/// Largest discrepancy between the twirled exact channel output and the
/// equivalent Pauli mixture.
pub fn twirled_mixing_check(state: &BellDiagonal, p: f64, u: &UnitaryAxisAngle) -> Result<f64> {
    let exact = twirl(&unitary_noise_channel(state, p, u)?);
    let mixed = state.apply_shift_channel(&pauli_mixing_probabilities(p, u));
    Ok(exact
        .weights()
        .iter()
        .zip(mixed.weights())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// One evaluated grid point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridSample {
    pub theta: f64,
    pub polar: f64,
    pub azimuth: f64,
    /// Entanglement of formation of the exact output.
    pub eof: f64,
    /// Singlet fidelity of the twirled output.
    pub twirled_fidelity: f64,
    /// Entanglement of formation of the twirled output.
    pub twirled_eof: f64,
}

#[derive(Clone, Copy, Debug)]
struct GridSpec {
    theta_steps: usize,
    axis_steps: usize,
}

impl GridSpec {
    fn theta_step(&self) -> f64 {
        PI / (self.theta_steps - 1) as f64
    }

    fn polar_step(&self) -> f64 {
        PI / (self.axis_steps - 1) as f64
    }

    fn azimuth_step(&self) -> f64 {
        2.0 * PI / self.axis_steps as f64
    }

    fn len(&self) -> usize {
        self.theta_steps * self.axis_steps * self.axis_steps
    }

    /// Flat index in lexicographic `(theta, polar, azimuth)` order.
    fn angles(&self, index: usize) -> (f64, f64, f64) {
        let a = self.axis_steps;
        let t = index / (a * a);
        let j = (index / a) % a;
        let l = index % a;
        (
            t as f64 * self.theta_step(),
            j as f64 * self.polar_step(),
            l as f64 * self.azimuth_step(),
        )
    }
}

/// Evaluates the whole grid; theta and polar include both endpoints, azimuth
/// covers `[0, 2 pi)`. Samples are in lexicographic index order.
pub fn entanglement_landscape(
    state: &BellDiagonal,
    p: f64,
    theta_steps: usize,
    axis_steps: usize,
) -> Result<Vec<GridSample>> {
    check_probability("p", p)?;
    if theta_steps < 2 || axis_steps < 2 {
        return Err(Error::InvalidRange(
            "grid needs at least 2 steps per axis".into(),
        ));
    }
    let spec = GridSpec {
        theta_steps,
        axis_steps,
    };
    (0..spec.len())
        .into_par_iter()
        .map(|i| {
            let (theta, polar, azimuth) = spec.angles(i);
            let u = UnitaryAxisAngle::from_spherical(theta, polar, azimuth)?;
            let rho = channel_unchecked(state, p, &u);
            let twirled = twirl(&rho);
            Ok(GridSample {
                theta,
                polar,
                azimuth,
                eof: eof_general(&rho)?,
                twirled_fidelity: twirled.fidelity(),
                twirled_eof: eof_unchecked(twirled.max_weight()),
            })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct WorstUnitary {
    pub unitary: UnitaryAxisAngle,
    pub sample: GridSample,
    pub theta_step: f64,
    /// Larger of the polar and azimuthal grid spacings.
    pub axis_step: f64,
    pub nearest_pauli: Pauli,
    /// Angle between the minimizing axis and `nearest_pauli`'s axis.
    pub axis_offset: f64,
    /// `|theta - pi/2|` at the minimizer.
    pub theta_offset: f64,
    /// Exact entanglement after mixing in `nearest_pauli` with probability `p`.
    pub pauli_eof: f64,
    /// Closed-form entanglement of the corresponding Pauli-mixed
    /// Bell-diagonal state.
    pub pauli_eof_closed_form: f64,
}

impl WorstUnitary {
    /// Minimizer lies within one grid step of a Pauli point.
    pub fn is_near_pauli(&self) -> bool {
        self.theta_offset <= self.theta_step + 1e-12 && self.axis_offset <= self.axis_step + 1e-12
    }
}

#[derive(Clone, Debug, Serialize)]
pub enum SearchOutcome {
    /// The landscape is constant (e.g. `p = 0`); there is nothing to minimize.
    Flat {
        eof: f64,
    },
    Minimum(Box<WorstUnitary>),
}

/// Grid search for the unitary that minimizes the output entanglement.
///
/// Ties within [`TIE_TOL`] are broken first by the smaller twirled fidelity,
/// then by lexicographic `(theta, polar, azimuth)` order.
pub fn worst_unitary_search(
    state: &BellDiagonal,
    p: f64,
    theta_steps: usize,
    axis_steps: usize,
) -> Result<SearchOutcome> {
    check_search_inputs(state, theta_steps, axis_steps)?;
    let samples = entanglement_landscape(state, p, theta_steps, axis_steps)?;
    worst_unitary_in_landscape(state, p, &samples, theta_steps, axis_steps)
}

/// Same as [`worst_unitary_search`] on a landscape that was already
/// evaluated by [`entanglement_landscape`] with the same arguments.
pub fn worst_unitary_in_landscape(
    state: &BellDiagonal,
    p: f64,
    samples: &[GridSample],
    theta_steps: usize,
    axis_steps: usize,
) -> Result<SearchOutcome> {
    check_search_inputs(state, theta_steps, axis_steps)?;
    check_probability("p", p)?;
    let spec = GridSpec {
        theta_steps,
        axis_steps,
    };
    if samples.len() != spec.len() {
        return Err(Error::InvalidRange(format!(
            "landscape has {} samples, grid needs {}",
            samples.len(),
            spec.len()
        )));
    }
    reduce_minimum(state, p, samples, spec)
}

fn check_search_inputs(state: &BellDiagonal, theta_steps: usize, axis_steps: usize) -> Result<()> {
    if theta_steps < MIN_GRID_STEPS || axis_steps < MIN_GRID_STEPS {
        return Err(Error::InvalidRange(format!(
            "grid resolution must be at least {MIN_GRID_STEPS}"
        )));
    }
    if !(state.fidelity() > 0.5) {
        return Err(Error::InvalidState(format!(
            "state fidelity {} must exceed 1/2",
            state.fidelity()
        )));
    }
    Ok(())
}

fn reduce_minimum(
    state: &BellDiagonal,
    p: f64,
    samples: &[GridSample],
    spec: GridSpec,
) -> Result<SearchOutcome> {
    let lo = samples.iter().map(|s| s.eof).fold(f64::INFINITY, f64::min);
    let hi = samples
        .iter()
        .map(|s| s.eof)
        .fold(f64::NEG_INFINITY, f64::max);
    if p == 0.0 || hi - lo <= TIE_TOL {
        return Ok(SearchOutcome::Flat { eof: lo });
    }

    let tied = |s: &&GridSample| s.eof <= lo + TIE_TOL;
    let f_min = samples
        .iter()
        .filter(tied)
        .map(|s| s.twirled_fidelity)
        .fold(f64::INFINITY, f64::min);
    let best = *samples
        .iter()
        .filter(tied)
        .find(|s| s.twirled_fidelity <= f_min + TIE_TOL)
        .expect("minimum is attained");

    let unitary = UnitaryAxisAngle::from_spherical(best.theta, best.polar, best.azimuth)?;
    let (nearest_pauli, axis_offset) = unitary.nearest_pauli();
    let pauli_u = UnitaryAxisAngle::pauli(nearest_pauli)?;
    let pauli_eof = eof_general(&channel_unchecked(state, p, &pauli_u))?;
    let mixed = state.apply_shift_channel(&pauli_mixing_probabilities(p, &pauli_u));

    Ok(SearchOutcome::Minimum(Box::new(WorstUnitary {
        unitary,
        sample: best,
        theta_step: spec.theta_step(),
        axis_step: spec.polar_step().max(spec.azimuth_step()),
        nearest_pauli,
        axis_offset,
        theta_offset: (best.theta - FRAC_PI_2).abs(),
        pauli_eof,
        pauli_eof_closed_form: eof_unchecked(mixed.max_weight()),
    })))
}

/// Smallest entanglement over the three Pauli errors applied with
/// probability `p`, from the Bell-diagonal closed form.
pub fn pauli_minimum_closed_form(state: &BellDiagonal, p: f64) -> Result<f64> {
    check_probability("p", p)?;
    Ok(Pauli::NON_TRIVIAL
        .iter()
        .map(|&pauli| {
            let mut probs = [0.0; 4];
            probs[0] = 1.0 - p;
            probs[pauli.bell_code()] = p;
            eof_unchecked(state.apply_shift_channel(&probs).max_weight())
        })
        .fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::eof;
    use approx::assert_abs_diff_eq;

    fn state(w: [f64; 4]) -> BellDiagonal {
        BellDiagonal::new(w).unwrap()
    }

    #[test]
    fn unitary_is_unitary() {
        let u = UnitaryAxisAngle::from_spherical(0.7, 1.1, 2.3)
            .unwrap()
            .matrix();
        let prod = u * u.adjoint();
        assert!(prod.max_abs_diff(&CMat2::identity()) < 1e-15);
    }

    #[test]
    fn pauli_point_is_pauli_matrix_up_to_phase() {
        for p in Pauli::NON_TRIVIAL {
            let u = UnitaryAxisAngle::pauli(p).unwrap().matrix();
            // U = -i sigma
            let expected = p.matrix();
            let scaled = CMat2::from_fn(|i, j| expected.0[i][j] * C64::new(0.0, -1.0));
            assert!(u.max_abs_diff(&scaled) < 1e-15);
        }
    }

    #[test]
    fn axis_validation() {
        assert!(UnitaryAxisAngle::new(0.3, [1.0, 1.0, 0.0]).is_err());
        assert!(UnitaryAxisAngle::new(4.0, [1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn identity_rotation_leaves_state() {
        let s = state([0.7, 0.2, 0.1, 0.0]);
        let u = UnitaryAxisAngle::new(0.0, [0.0, 0.6, 0.8]).unwrap();
        let out = unitary_noise_channel(&s, 0.4, &u).unwrap();
        assert!(out.matrix().max_abs_diff(s.to_density().matrix()) < 1e-15);
        let v = UnitaryAxisAngle::new(1.2, [0.0, 0.6, 0.8]).unwrap();
        let out = unitary_noise_channel(&s, 0.0, &v).unwrap();
        assert!(out.matrix().max_abs_diff(s.to_density().matrix()) < 1e-15);
    }

    #[test]
    fn x_flip_on_singlet() {
        let u = UnitaryAxisAngle::new(FRAC_PI_2, [1.0, 0.0, 0.0]).unwrap();
        let out = twirl(&unitary_noise_channel(&BellDiagonal::SINGLET, 0.1, &u).unwrap());
        let w = out.weights();
        assert_abs_diff_eq!(w[0], 0.9, epsilon = 1e-14);
        assert_abs_diff_eq!(w[1], 0.1, epsilon = 1e-14);
        assert!(w[2].abs() < 1e-14 && w[3].abs() < 1e-14);
    }

    #[test]
    fn mixing_check_examples() {
        let s = BellDiagonal::werner(0.85).unwrap();
        let u = UnitaryAxisAngle::new(PI / 4.0, [0.0, 0.0, 1.0]).unwrap();
        assert!(twirled_mixing_check(&s, 0.2, &u).unwrap() <= 1e-10);
        let zero = UnitaryAxisAngle::new(0.0, [1.0, 0.0, 0.0]).unwrap();
        assert!(twirled_mixing_check(&s, 0.2, &zero).unwrap() <= 1e-15);
        let r = 1.0 / 3f64.sqrt();
        let diag = UnitaryAxisAngle::new(FRAC_PI_2, [r, r, r]).unwrap();
        assert!(
            twirled_mixing_check(&state([0.85, 0.05, 0.06, 0.04]), 0.3, &diag).unwrap() <= 1e-10
        );
    }

    #[test]
    fn search_finds_pauli_point() {
        let s = state([0.9, 0.1, 0.0, 0.0]);
        match worst_unitary_search(&s, 0.1, 16, 16).unwrap() {
            SearchOutcome::Minimum(w) => {
                assert!(w.is_near_pauli(), "{w:?}");
                assert_abs_diff_eq!(w.pauli_eof, w.pauli_eof_closed_form, epsilon = 1e-8);
                assert!(w.pauli_eof <= w.sample.eof + 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn search_matches_three_pauli_closed_forms() {
        let s = state([0.8, 0.2, 0.0, 0.0]);
        let closed = pauli_minimum_closed_form(&s, 0.15).unwrap();
        match worst_unitary_search(&s, 0.15, 16, 16).unwrap() {
            SearchOutcome::Minimum(w) => {
                assert_abs_diff_eq!(w.pauli_eof, closed, epsilon = 1e-8);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_noise_is_flat() {
        let s = state([0.9, 0.1, 0.0, 0.0]);
        match worst_unitary_search(&s, 0.0, 16, 16).unwrap() {
            SearchOutcome::Flat { eof: e } => {
                assert_abs_diff_eq!(e, eof(0.9).unwrap(), epsilon = 1e-10)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn search_preconditions() {
        let s = state([0.9, 0.1, 0.0, 0.0]);
        assert!(worst_unitary_search(&s, 0.1, 8, 16).is_err());
        assert!(worst_unitary_search(&state([0.4, 0.6, 0.0, 0.0]), 0.1, 16, 16).is_err());
    }
}
