//! Threshold bounds: the n-apex, its maximum over `n`, the boundary of the
//! potentially purifiable `(p, q)` region and the gate-error / loss trade-off.
//!
//! At the n-apex the initial fidelity carries exactly `1/n` ebits and the
//! gate-noise fidelity equals the initial fidelity, so `n` pairs can at best be
//! combined into one perfect pair that the final gates then degrade back to
//! where it started.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::bell::{eof, eof_inverse_tol, eof_unchecked};
use crate::error::{check_range, Error, Result};
use crate::noise::{
    fidelity_gate_unchecked, fidelity_initial, gate_channel_unchecked, loss_fidelity_gate_unchecked,
};
use crate::solve::{bisect, golden_max, grid, ROOT_TOL};

/// Largest copy number searched when maximizing over real `n`.
pub const N_SEARCH_MAX: f64 = 50.0;

/// Tolerance on the three defining residuals of an [`ApexPoint`].
pub const APEX_RESIDUAL_TOL: f64 = 1e-9;

const COARSE_N_MIN: f64 = 1.05;
const COARSE_N_STEP: f64 = 0.05;

/// Inner grid for the maximization over `n` in the loss trade-off.
const LOSS_N_STEP: f64 = 0.02;

/// Solution of the n-apex conditions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ApexPoint {
    pub n: f64,
    pub p: f64,
    pub q: f64,
    pub f_star: f64,
}

impl ApexPoint {
    /// `[|S(F*) - 1/n|, |F_p(p) - F*|, |F_q(q, n) - F*|]`, recomputed from the
    /// stored fields.
    pub fn residuals(&self) -> [f64; 3] {
        [
            (eof_unchecked(self.f_star) - 1.0 / self.n).abs(),
            ((1.0 - self.p) * (1.0 - self.p) - self.f_star).abs(),
            (fidelity_gate_unchecked(self.q, self.n) - self.f_star).abs(),
        ]
    }

    pub fn residual_max(&self) -> f64 {
        self.residuals().into_iter().fold(0.0, f64::max)
    }
}

/// Which side of the n-apex a boundary curve describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Branch {
    /// `F_q = F_p`, exact.
    BelowApex,
    /// `F' = F_p` under an explicit model of `F'`.
    AboveApexModel,
}

impl Branch {
    pub fn label(self) -> &'static str {
        match self {
            Branch::BelowApex => "below-apex",
            Branch::AboveApexModel => "above-apex-model",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Model for the degraded fidelity `F'` above the apex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AboveApexModel {
    /// The combined pair is Bell-diagonal with fidelity
    /// `F1 = S^-1(min(1, n S(F_p)))` and all remaining weight on the single
    /// Bell state least likely to be mapped back onto the singlet by the
    /// final-gate channel; `F'` is that channel's output fidelity.
    AdversarialConcentration,
}

impl AboveApexModel {
    pub fn label(self) -> &'static str {
        match self {
            AboveApexModel::AdversarialConcentration => "adversarial-concentration",
        }
    }
}

impl FromStr for AboveApexModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adversarial-concentration" => Ok(AboveApexModel::AdversarialConcentration),
            _ => Err(Error::UnknownLabel {
                kind: "above-apex model",
                label: s.to_string(),
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundaryCurve {
    pub n: f64,
    /// `(p, q)` pairs with strictly increasing `p`.
    pub points: Vec<(f64, f64)>,
    pub branch: Branch,
}

/// Solves the n-apex conditions for real `n >= 1`.
pub fn apex(n: f64) -> Result<ApexPoint> {
    apex_with_tol(n, ROOT_TOL)
}

/// [`apex`] with an explicit tolerance for both inner root solves. Zero runs
/// them to machine precision.
pub fn apex_with_tol(n: f64, tol: f64) -> Result<ApexPoint> {
    check_range("n", n, 1.0, f64::MAX)?;
    if n == 1.0 {
        return Ok(ApexPoint {
            n,
            p: 0.0,
            q: 0.0,
            f_star: 1.0,
        });
    }
    let f_star = eof_inverse_tol(1.0 / n, tol)?;
    let p = 1.0 - f_star.sqrt();
    let q = bisect(|q| fidelity_gate_unchecked(q, n) - f_star, 0.0, 0.5, tol)?;
    Ok(ApexPoint { n, p, q, f_star })
}

/// n-apex on the grid `n_min, n_min + step, ..., n_max`, ordered by `n`.
pub fn apex_scan(n_min: f64, n_max: f64, step: f64) -> Result<Vec<ApexPoint>> {
    if !(n_min > 1.0) {
        return Err(Error::InvalidRange(format!(
            "n_min = {n_min} must exceed 1"
        )));
    }
    let ns = grid(n_min, n_max, step)?;
    ns.into_par_iter().map(apex).collect()
}

/// Maximizes the apex gate error over real `n` in `(1, 50]`.
///
/// A coarse grid locates the peak, golden-section search refines it to
/// `tolerance` in `n`. If the coarse profile is not unimodal the refinement
/// falls back to a fine grid around the best coarse point.
pub fn max_apex(tolerance: f64) -> Result<ApexPoint> {
    if !(tolerance > 0.0) {
        return Err(Error::InvalidRange(format!(
            "tolerance {tolerance} must be positive"
        )));
    }
    let ns = grid(COARSE_N_MIN, N_SEARCH_MAX, COARSE_N_STEP)?;
    let coarse: Vec<f64> = ns
        .par_iter()
        .map(|&n| apex_with_tol(n, 0.0).map(|a| a.q))
        .collect::<Result<_>>()?;

    let best = coarse
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let lo = ns[best.saturating_sub(1)];
    let hi = ns[(best + 1).min(ns.len() - 1)];

    let q_at = |n: f64| {
        apex_with_tol(n, 0.0)
            .map(|a| a.q)
            .unwrap_or(f64::NEG_INFINITY)
    };

    let n_best = if is_unimodal(&coarse) {
        golden_max(q_at, lo, hi, tolerance, 400).0
    } else {
        let fine = grid(lo, hi, (hi - lo) / 2000.0)?;
        fine.into_iter()
            .map(|n| (n, q_at(n)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(n, _)| n)
            .unwrap_or(lo)
    };
    apex_with_tol(n_best, 0.0)
}

fn is_unimodal(values: &[f64]) -> bool {
    let peak = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    values[..=peak].windows(2).all(|w| w[0] <= w[1])
        && values[peak..].windows(2).all(|w| w[0] >= w[1])
}

fn check_increasing(p_grid: &[f64]) -> Result<()> {
    if p_grid.is_empty() {
        return Err(Error::InvalidRange("empty p grid".into()));
    }
    if p_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidRange(
            "p grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Boundary `F_q(q, n) = F_p(p)` for `p` up to the n-apex.
pub fn region_boundary(n: f64, p_grid: &[f64]) -> Result<BoundaryCurve> {
    if !(n > 1.0) {
        return Err(Error::OutOfRange {
            name: "n",
            value: n,
            min: 1.0,
            max: f64::MAX,
        });
    }
    check_increasing(p_grid)?;
    let top = apex(n)?;
    let points = p_grid
        .iter()
        .map(|&p| {
            check_range("p", p, 0.0, top.p + ROOT_TOL)?;
            let target = (1.0 - p) * (1.0 - p);
            let q = bisect(
                |q| fidelity_gate_unchecked(q, n) - target,
                0.0,
                0.5,
                ROOT_TOL,
            )?;
            Ok((p, q))
        })
        .collect::<Result<_>>()?;
    Ok(BoundaryCurve {
        n,
        points,
        branch: Branch::BelowApex,
    })
}

/// `p` at which `(1 - p)^2 = 1/2`: beyond it the initial pairs are separable.
pub fn ancilla_limit() -> f64 {
    1.0 - std::f64::consts::FRAC_1_SQRT_2
}

/// Fidelity of a perfect-as-possible combination of `n` pairs of fidelity
/// `f_p`, after the final gates under `model`.
pub fn degraded_fidelity(f_p: f64, q: f64, n: f64, model: AboveApexModel) -> Result<f64> {
    check_range("q", q, 0.0, 0.5)?;
    let combined = eof_inverse_tol((n * eof(f_p)?).min(1.0), ROOT_TOL)?;
    Ok(degraded_unchecked(combined, q, n, model))
}

fn degraded_unchecked(combined: f64, q: f64, n: f64, model: AboveApexModel) -> f64 {
    match model {
        AboveApexModel::AdversarialConcentration => {
            let ch = gate_channel_unchecked(q, n);
            let leak = ch[1].min(ch[2]).min(ch[3]);
            combined * ch[0] + (1.0 - combined) * leak
        }
    }
}

/// Boundary `F'(q) = F_p(p)` for `p` between the n-apex and
/// [`ancilla_limit`], under `model`.
pub fn region_boundary_above(
    n: f64,
    p_grid: &[f64],
    model: AboveApexModel,
) -> Result<BoundaryCurve> {
    if !(n > 1.0) {
        return Err(Error::OutOfRange {
            name: "n",
            value: n,
            min: 1.0,
            max: f64::MAX,
        });
    }
    check_increasing(p_grid)?;
    let top = apex(n)?;
    let limit = ancilla_limit();
    let points = p_grid
        .iter()
        .map(|&p| {
            check_range("p", p, top.p - ROOT_TOL, limit + ROOT_TOL)?;
            let f_p = fidelity_initial(p.min(limit))?;
            let combined = eof_inverse_tol((n * eof(f_p)?).min(1.0), ROOT_TOL)?;
            let gap = |q: f64| degraded_unchecked(combined, q, n, model) - f_p;
            let q = if gap(0.0) <= 0.0 {
                0.0
            } else {
                bisect(gap, 0.0, 0.5, ROOT_TOL)?
            };
            Ok((p, q))
        })
        .collect::<Result<_>>()?;
    Ok(BoundaryCurve {
        n,
        points,
        branch: Branch::AboveApexModel,
    })
}

/// One point of the gate-error / loss trade-off.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LossPoint {
    pub q_f: f64,
    pub q_l_max: f64,
    /// Copy number achieving the best margin at `q_l_max`.
    pub n_star: f64,
}

/// Precomputed apex fidelities `S^-1(1/n)` on the inner `n` grid.
struct LossSearch {
    ns: Vec<f64>,
    targets: Vec<f64>,
    n_max: f64,
}

impl LossSearch {
    fn new(n_max: f64) -> Result<Self> {
        if !(n_max > 1.0) {
            return Err(Error::InvalidRange(format!(
                "n_max = {n_max} must exceed 1"
            )));
        }
        let start = (1.0 + LOSS_N_STEP).min(n_max);
        let mut ns = grid(start, n_max, LOSS_N_STEP)?;
        if *ns.last().unwrap() < n_max {
            ns.push(n_max);
        }
        let targets = ns
            .iter()
            .map(|&n| eof_inverse_tol(1.0 / n, ROOT_TOL))
            .collect::<Result<_>>()?;
        Ok(LossSearch { ns, targets, n_max })
    }

    /// Best `(n, margin)` with margin `F_q(loss) - S^-1(1/n)`.
    fn best_margin(&self, q_l: f64, q_f: f64) -> (f64, f64) {
        let (i, best) = self
            .ns
            .iter()
            .zip(&self.targets)
            .map(|(&n, &t)| loss_fidelity_gate_unchecked(q_l, q_f, n) - t)
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let lo = if i == 0 { 1.0 + 1e-9 } else { self.ns[i - 1] };
        let hi = self.ns[(i + 1).min(self.ns.len() - 1)].min(self.n_max);
        let margin = |n: f64| match eof_inverse_tol(1.0 / n, ROOT_TOL) {
            Ok(t) => loss_fidelity_gate_unchecked(q_l, q_f, n) - t,
            Err(_) => f64::NEG_INFINITY,
        };
        let (n_ref, m_ref) = golden_max(margin, lo, hi, 1e-9, 200);
        if m_ref >= best {
            (n_ref, m_ref)
        } else {
            (self.ns[i], best)
        }
    }

    fn largest_loss(&self, q_f: f64) -> Result<LossPoint> {
        check_range("q_f", q_f, 0.0, 0.5)?;
        let (n0, m0) = self.best_margin(0.0, q_f);
        if m0 < 0.0 {
            return Ok(LossPoint {
                q_f,
                q_l_max: 0.0,
                n_star: n0,
            });
        }
        // feasibility is monotone in q_l: the loss fidelity decreases with q_l
        let q_l_max = bisect(
            |q_l| {
                if self.best_margin(q_l, q_f).1 >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            },
            0.0,
            1.0,
            ROOT_TOL,
        )?;
        let (n_star, _) = self.best_margin(q_l_max, q_f);
        Ok(LossPoint {
            q_f,
            q_l_max,
            n_star,
        })
    }
}

/// For each gate fault rate `q_f`, the largest loss rate `q_l` for which some
/// `n` in `(1, n_max]` still meets the apex condition
/// `F_q(q_l, q_f, n) >= S^-1(1/n)`.
pub fn loss_tradeoff(q_f_grid: &[f64], n_max: f64) -> Result<Vec<LossPoint>> {
    let search = LossSearch::new(n_max)?;
    q_f_grid
        .par_iter()
        .map(|&q_f| search.largest_loss(q_f))
        .collect()
}

/// Largest gate fault rate that is still feasible at loss rate `q_l`.
pub fn max_feasible_fault(q_l: f64, n_max: f64) -> Result<f64> {
    check_range("q_l", q_l, 0.0, 1.0)?;
    let search = LossSearch::new(n_max)?;
    if search.best_margin(q_l, 0.0).1 < 0.0 {
        return Ok(0.0);
    }
    bisect(
        |q_f| {
            if search.best_margin(q_l, q_f).1 >= 0.0 {
                1.0
            } else {
                -1.0
            }
        },
        0.0,
        0.5,
        ROOT_TOL,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RepeaterCheck {
    pub feasible: bool,
    /// `S(F_q(q, n)) - 1/n`.
    pub margin: f64,
}

/// Whether the gate fidelity alone still carries `1/n` ebits.
pub fn repeater_check(q: f64, n: f64) -> Result<RepeaterCheck> {
    check_range("q", q, 0.0, 0.5)?;
    if !(n > 1.0) {
        return Err(Error::OutOfRange {
            name: "n",
            value: n,
            min: 1.0,
            max: f64::MAX,
        });
    }
    let margin = eof_unchecked(fidelity_gate_unchecked(q, n)) - 1.0 / n;
    Ok(RepeaterCheck {
        feasible: margin >= 0.0,
        margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn apex_three_matches_reported_values() {
        let a = apex(3.0).unwrap();
        assert!((a.p - 0.140).abs() <= 5e-4, "p = {}", a.p);
        assert!((a.q - 0.052).abs() <= 5e-4, "q = {}", a.q);
        assert!(a.residual_max() <= APEX_RESIDUAL_TOL);
    }

    #[test]
    fn apex_two_satisfies_residuals() {
        let a = apex(2.0).unwrap();
        for r in a.residuals() {
            assert!(r <= APEX_RESIDUAL_TOL);
        }
    }

    #[test]
    fn apex_at_one_is_degenerate() {
        let a = apex(1.0).unwrap();
        assert_eq!((a.p, a.q, a.f_star), (0.0, 0.0, 1.0));
        assert!(apex(0.5).is_err());
    }

    #[test]
    fn apex_large_n_limit() {
        // Approach to the limit is slow (log corrections in the entropy).
        let a = apex(2000.0).unwrap();
        let b = apex(1e6).unwrap();
        assert!(a.p < b.p && b.p < ancilla_limit());
        assert!((b.p - ancilla_limit()).abs() < 1e-3);
        assert!(b.q < a.q && a.q < 1e-3);
    }

    #[test]
    fn scan_single_point() {
        let s = apex_scan(3.0, 3.0, 1.0).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0], apex(3.0).unwrap());
        assert!(apex_scan(1.0, 3.0, 0.1).is_err());
        assert!(apex_scan(4.0, 3.0, 0.1).is_err());
    }

    #[test]
    fn max_apex_brackets() {
        let m = max_apex(1e-10).unwrap();
        assert!(m.n > 2.0 && m.n < 3.0);
        assert!(m.q >= apex(2.0).unwrap().q);
        assert!(m.q >= apex(3.0).unwrap().q);
        assert!(max_apex(0.0).is_err());
    }

    #[test]
    fn unimodal_detection() {
        assert!(is_unimodal(&[1.0, 2.0, 3.0, 2.0, 1.0]));
        assert!(!is_unimodal(&[1.0, 3.0, 2.0, 3.5, 1.0]));
    }

    #[test]
    fn region_boundary_endpoints() {
        let top = apex(2.0).unwrap();
        let curve = region_boundary(2.0, &[0.0, 0.05, top.p]).unwrap();
        assert_eq!(curve.points[0], (0.0, 0.0));
        assert_abs_diff_eq!(curve.points[2].1, top.q, epsilon = 1e-9);
        assert!(curve.points.windows(2).all(|w| w[0].1 < w[1].1));
        assert!(region_boundary(2.0, &[top.p + 0.01]).is_err());
        assert!(region_boundary(2.0, &[0.05, 0.01]).is_err());
    }

    #[test]
    fn region_above_endpoints() {
        let model = AboveApexModel::AdversarialConcentration;
        let top = apex(2.0).unwrap();
        let limit = ancilla_limit();
        let mid = 0.5 * (top.p + limit);
        let curve = region_boundary_above(2.0, &[top.p, mid, limit], model).unwrap();
        assert_abs_diff_eq!(curve.points[0].1, top.q, epsilon = 1e-9);
        assert_abs_diff_eq!(curve.points[2].1, 0.0, epsilon = 1e-9);
        let q_mid = curve.points[1].1;
        assert!(q_mid > 0.0 && q_mid < top.q);
        assert!(region_boundary_above(2.0, &[limit + 0.01], model).is_err());
        assert!("bogus".parse::<AboveApexModel>().is_err());
    }

    #[test]
    fn ancilla_limit_values() {
        let p = ancilla_limit();
        assert!(p > 0.29 && p < 0.30);
        assert_abs_diff_eq!(fidelity_initial(p).unwrap(), 0.5, epsilon = 1e-12);
        assert!(eof(fidelity_initial(p).unwrap()).unwrap() <= 1e-10);
    }

    #[test]
    fn repeater_examples() {
        let r = repeater_check(0.0, 3.0).unwrap();
        assert!(r.feasible);
        assert_abs_diff_eq!(r.margin, 1.0 - 1.0 / 3.0, epsilon = 1e-15);
        for n in [2.0, 2.5, 3.0] {
            let a = apex(n).unwrap();
            assert!(repeater_check(a.q, n).unwrap().margin.abs() < 1e-9);
        }
        assert!(!repeater_check(0.4, 2.0).unwrap().feasible);
    }

    #[test]
    fn loss_free_budget_at_zero_fault() {
        let pts = loss_tradeoff(&[0.0], 20.0).unwrap();
        let pt = pts[0];
        assert!(pt.q_l_max > 0.0);
        // forward check: the returned loss rate is (just) feasible
        let target = eof_inverse_tol(1.0 / pt.n_star, 0.0).unwrap();
        let f = loss_fidelity_gate_unchecked(pt.q_l_max, 0.0, pt.n_star);
        assert!(f - target > -1e-9);
    }
}
