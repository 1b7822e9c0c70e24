use approx::assert_abs_diff_eq;
use nalgebra::{Complex, Matrix4};
use proptest::prelude::*;

use purify_bound::bell::{
    bell_vectors, concurrence, eof, eof_general, eof_inverse, pauli_apply, twirl, BellDiagonal,
    DensityMatrix4, Pauli, TwoQubitPauli,
};
use purify_bound::linalg::{CMat4, C64};
use purify_bound::noise::{
    fidelity_gate, fidelity_gate_oracle, fidelity_gate_sum, loss_fidelity_gate, LossParams,
};
use purify_bound::threshold::{loss_tradeoff, max_feasible_fault};

fn to_nalgebra(m: &CMat4) -> Matrix4<Complex<f64>> {
    Matrix4::from_fn(|i, j| Complex::new(m.0[i][j].re, m.0[i][j].im))
}

/// Wootters concurrence from the eigenvalues of `sqrt(rho) rho~ sqrt(rho)`.
fn concurrence_oracle(rho: &CMat4) -> f64 {
    let r = to_nalgebra(rho);
    let eig = r.symmetric_eigen();
    let sqrt_vals = eig
        .eigenvalues
        .map(|v| Complex::new(v.max(0.0).sqrt(), 0.0));
    let sqrt_r = eig.eigenvectors * Matrix4::from_diagonal(&sqrt_vals) * eig.eigenvectors.adjoint();
    let yy = Matrix4::from_fn(|i, j| {
        let v = if i + j == 3 {
            if i == 0 || i == 3 {
                -1.0
            } else {
                1.0
            }
        } else {
            0.0
        };
        Complex::new(v, 0.0)
    });
    let tilde = yy * r.conjugate() * yy;
    let h = sqrt_r * tilde * sqrt_r;
    let h = (h + h.adjoint()) * Complex::new(0.5, 0.0);
    let mut lambda: Vec<f64> = h
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|v| v.max(0.0).sqrt())
        .collect();
    lambda.sort_by(|a, b| b.total_cmp(a));
    (lambda[0] - lambda[1] - lambda[2] - lambda[3]).max(0.0)
}

fn random_state() -> impl Strategy<Value = DensityMatrix4> {
    prop::array::uniform32(-1.0f64..1.0).prop_map(|g| {
        let gm = CMat4::from_fn(|i, j| C64::new(g[4 * i + j], g[16 + 4 * i + j]));
        let rho = gm * gm.adjoint();
        let tr = rho.trace().re;
        DensityMatrix4::new(rho.scale(1.0 / tr)).unwrap()
    })
}

fn pauli() -> impl Strategy<Value = Pauli> {
    prop::sample::select(Pauli::ALL.to_vec())
}

fn weights() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(0.0f64..1.0)
        .prop_filter("nonzero", |w| w.iter().sum::<f64>() > 1e-3)
        .prop_map(|w| {
            let s: f64 = w.iter().sum();
            w.map(|x| x / s)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn eof_is_monotone(a in 0.5f64..=1.0, b in 0.5f64..=1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(eof(lo).unwrap() <= eof(hi).unwrap());
    }

    #[test]
    fn eof_inverse_round_trip(f in 0.5f64..=1.0) {
        let s = eof(f).unwrap();
        prop_assert!((eof_inverse(s).unwrap() - f).abs() <= 1e-9);
    }

    #[test]
    fn pauli_is_an_involution(left in pauli(), right in pauli(), w in weights()) {
        let op = TwoQubitPauli::new(left, right);
        prop_assert_eq!(op.compose(op), TwoQubitPauli::new(Pauli::I, Pauli::I));
        let state = BellDiagonal::new(w).unwrap();
        let back = pauli_apply(&pauli_apply(&state, op), op).weights();
        for k in 0..4 {
            prop_assert!((back[k] - w[k]).abs() <= 1e-15);
        }
    }

    #[test]
    fn concurrence_matches_nalgebra(rho in random_state()) {
        let ours = concurrence(&rho).unwrap();
        let theirs = concurrence_oracle(rho.matrix());
        prop_assert!((ours - theirs).abs() <= 1e-9, "{} vs {}", ours, theirs);
    }

    #[test]
    fn bell_diagonal_concurrence(w in weights()) {
        let state = BellDiagonal::new(w).unwrap();
        let c = concurrence(&state.to_density()).unwrap();
        prop_assert!((c - (2.0 * state.max_weight() - 1.0).max(0.0)).abs() <= 1e-10);
    }

    #[test]
    fn twirl_preserves_trace_and_fidelity(rho in random_state()) {
        let w = twirl(&rho).weights();
        let f = rho.matrix().expectation(&bell_vectors()[0]).re;
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-15);
        prop_assert!((w[0] - f).abs() <= 1e-15);
    }

    #[test]
    fn twirling_never_raises_eof(rho in random_state()) {
        let twirled = twirl(&rho);
        let after = eof(twirled.max_weight()).unwrap();
        prop_assert!(eof_general(&rho).unwrap() >= after - 1e-10);
    }

    #[test]
    fn gate_fidelity_decreases_in_q(a in 0.0f64..=0.5, b in 0.0f64..=0.5, n in 1.0f64..20.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(fidelity_gate(hi, n).unwrap() <= fidelity_gate(lo, n).unwrap() + 1e-15);
    }

    #[test]
    fn gate_fidelity_decreases_in_n(q in 0.0f64..=0.5, a in 1.0f64..20.0, b in 1.0f64..20.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(fidelity_gate(q, hi).unwrap() <= fidelity_gate(q, lo).unwrap() + 1e-15);
    }

    #[test]
    fn gate_fidelity_forms_agree(q in 0.0f64..=0.5, n in 2u32..=6) {
        let closed = fidelity_gate(q, n as f64).unwrap();
        assert_abs_diff_eq!(closed, fidelity_gate_sum(q, n).unwrap(), epsilon = 1e-12);
        assert_abs_diff_eq!(closed, fidelity_gate_oracle(q, n, Pauli::X, Pauli::Z).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn lossless_gate_fidelity_reduces(q in 0.0f64..=0.5, n in 1.0f64..10.0) {
        let lp = LossParams::new(0.0, 0.0, 0.0, q).unwrap();
        assert_abs_diff_eq!(loss_fidelity_gate(&lp, n).unwrap(), fidelity_gate(q, n).unwrap(), epsilon = 1e-14);
    }

    #[test]
    fn loss_fidelity_decreases_in_loss(a in 0.0f64..=1.0, b in 0.0f64..=1.0, q_f in 0.0f64..=0.5, n in 1.0f64..10.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let at = |q_l| loss_fidelity_gate(&LossParams::new(0.0, 0.0, q_l, q_f).unwrap(), n).unwrap();
        prop_assert!(at(hi) <= at(lo) + 1e-15);
    }
}

#[test]
fn loss_tradeoff_is_non_increasing() {
    let grid: Vec<f64> = (0..=10).map(|i| 0.005 * i as f64).collect();
    let points = loss_tradeoff(&grid, 50.0).unwrap();
    for w in points.windows(2) {
        assert!(w[1].q_l_max <= w[0].q_l_max + 1e-12, "{w:?}");
    }
    assert!(points[0].q_l_max > 0.0);
}

#[test]
fn feasible_fault_shrinks_with_loss() {
    let faults: Vec<f64> = [0.0, 0.01, 0.05, 0.1]
        .iter()
        .map(|&q_l| max_feasible_fault(q_l, 50.0).unwrap())
        .collect();
    for w in faults.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "{faults:?}");
    }
}
