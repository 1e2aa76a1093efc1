//! Discreteness criteria for the reduced radial problem.
//!
//! The central quantity is the two-sided mass product
//!
//! ```text
//! finite case   A(t,s) = int_t^s 1/omega_bar dr * int_s^inf omega_bar dr
//! infinite case A(t,s) = int_s^inf 1/omega_bar dr * int_t^s omega_bar dr
//! ```
//!
//! with `B(t) = sup_{s>t} A(t,s)`: the spectrum over the end is discrete
//! exactly when `B(t) -> 0`. All integrals here are evaluated after dividing
//! by the pivot value `omega_bar(s)`; the scale factors cancel in the
//! product, and the rescaled integrands stay representable for densities
//! like `exp(r^2)` far beyond the range where the raw integrals overflow.

use crate::error::{EndsError, Result};
use crate::profile::{RadialProfile, VolumeClass};
use crate::quad::{
    drift_graded, drift_span, window_sweep_scaled, TailKind, TailValue, DEFAULT_REL_TOL, DIV_CAP,
};
use serde::Serialize;

/// Which of the two criterion branches applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CriterionCase {
    /// Finite volume: `int 1/omega_bar` diverges; pair the inner inverse
    /// mass with the outer volume tail.
    Finite,
    /// Infinite volume: `int omega_bar` diverges; the roles swap.
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Discrete,
    NotDiscrete,
    Inconclusive,
}

/// Three-valued answer for tests whose precondition integrals may be
/// numerically undecided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Trilean {
    True,
    False,
    Unknown,
}

/// `B(t)` together with where the supremum was located.
#[derive(Debug, Clone, Serialize)]
pub struct SupOutcome {
    pub b: TailValue,
    pub s_star: Option<f64>,
    /// The scan kept improving out to the edge of the search grid: the
    /// supremum is attained in the limit `s -> infinity`.
    pub sup_at_infinity: bool,
}

/// One row of the `t`-sweep stored in a [`CriterionTrace`].
#[derive(Debug, Clone, Serialize)]
pub struct CriterionSample {
    pub t: f64,
    pub b: Option<f64>,
    pub divergent: bool,
    pub indeterminate: bool,
    pub s_star: Option<f64>,
    pub sup_at_infinity: bool,
}

/// Full evaluation record of the criterion sweep; every verdict keeps the
/// numbers that produced it.
#[derive(Debug, Clone, Serialize)]
pub struct CriterionTrace {
    pub case: Option<CriterionCase>,
    pub samples: Vec<CriterionSample>,
    pub verdict: Verdict,
    pub rationale: String,
}

/// Verdict below this at the end of the sweep (with a decreasing trend)
/// counts as `B(t) -> 0`.
pub const EPS_DISC: f64 = 1e-3;
/// Values staying at or above this with a non-decreasing trend count as
/// bounded away from zero.
pub const EPS_ESS: f64 = 1e-2;

/// Decision thresholds for the sweep verdict; overridable from the CLI.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Thresholds {
    pub eps_disc: f64,
    pub eps_ess: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { eps_disc: EPS_DISC, eps_ess: EPS_ESS }
    }
}
/// Threshold for the log-derivative fast path.
pub const LOG_DERIV_THRESH: f64 = 1e3;

const U_MAX: f64 = 30.0;
const SCAN_POINTS: usize = 64;
const GOLDEN_REL_TOL: f64 = 1e-6;

/// The sweep grid `t = 1, 2, 4, ..., 4096`.
pub fn t_grid() -> Vec<f64> {
    (0..=12).map(|k| f64::from(1u32 << k)).collect()
}

/// Natural length scale of the pivot-rescaled integrands near `s`: the
/// boundary layer has width `1/|h_bar(s)|`, and integrating in the stretched
/// variable `v = g x` keeps the quadrature grids matched to the layer when
/// `|h_bar|` is large.
pub(crate) fn layer_scale(p: &RadialProfile, s: f64) -> f64 {
    match p.log_derivative(s) {
        Ok(h) if h.is_finite() => h.abs().max(1.0),
        _ => 1.0,
    }
}

// All four rescaled integrals below are `int exp(+-Phi(v)) dv / g` with
// `Phi(v) = int_0^v h_bar(s -+ w/g) dw / g`: the log-density ratio to the
// pivot `omega_bar(s)` is accumulated from the log-derivative instead of
// being formed as a difference `ln omega_bar(r) - ln omega_bar(s)`, which is
// pure cancellation noise once `|ln omega_bar|` exceeds ~1e15 (the scan grid
// reaches s ~ 5e12, where a Gaussian density has `|ln omega_bar|` ~ 2e25).

/// `omega_bar(s) * int_t^s 1/omega_bar dr`, integrated in `x = s - r` so the
/// boundary layer at `r = s` sits at the origin.
pub(crate) fn scaled_inverse_mass(p: &RadialProfile, t: f64, s: f64) -> Result<f64> {
    let g = layer_scale(p, s);
    let q = |v: f64| Ok(p.log_derivative((s - v / g).max(t))? / g);
    Ok(drift_graded(&q, 1.0, g * (s - t), DEFAULT_REL_TOL)? / g)
}

/// `int_t^s omega_bar dr / omega_bar(s)`.
pub(crate) fn scaled_mass(p: &RadialProfile, t: f64, s: f64) -> Result<f64> {
    let g = layer_scale(p, s);
    let q = |v: f64| Ok(p.log_derivative((s - v / g).max(t))? / g);
    Ok(drift_graded(&q, -1.0, g * (s - t), DEFAULT_REL_TOL)? / g)
}

fn scaled_tail(p: &RadialProfile, s: f64, sign: f64) -> TailValue {
    let g = layer_scale(p, s);
    let q = |v: f64| Ok(p.log_derivative(s + v / g)? / g);
    let mut phi = 0.0f64;
    window_sweep_scaled(
        |lo, hi| {
            let (w, phi_hi) = drift_span(&q, lo, hi, phi, sign, DEFAULT_REL_TOL)?;
            phi = phi_hi;
            Ok(w / g)
        },
        0.0,
    )
}

/// `int_s^inf omega_bar dr / omega_bar(s)` as a window-swept tail.
pub(crate) fn scaled_volume_tail(p: &RadialProfile, s: f64) -> Result<TailValue> {
    Ok(scaled_tail(p, s, 1.0))
}

/// `omega_bar(s) * int_s^inf 1/omega_bar dr` as a window-swept tail.
pub(crate) fn scaled_inverse_tail(p: &RadialProfile, s: f64) -> Result<TailValue> {
    Ok(scaled_tail(p, s, -1.0))
}

/// The mass product `A(t,s)` for the given case.
pub fn mass_product(
    p: &RadialProfile,
    t: f64,
    s: f64,
    case: CriterionCase,
) -> Result<TailValue> {
    if !(0.0 <= t && t < s) {
        return Err(EndsError::Range(format!("need 0 <= t < s, got t={t}, s={s}")));
    }
    let (finite_part, tail) = match case {
        CriterionCase::Finite => (scaled_inverse_mass(p, t, s)?, scaled_volume_tail(p, s)?),
        CriterionCase::Infinite => (scaled_mass(p, t, s)?, scaled_inverse_tail(p, s)?),
    };
    if !finite_part.is_finite() {
        return Ok(TailValue::indeterminate());
    }
    Ok(match tail.kind() {
        TailKind::Convergent(v) => TailValue {
            kind: TailKind::Convergent(finite_part * v),
            windows: tail.windows,
        },
        _ => tail,
    })
}

fn a_value(p: &RadialProfile, t: f64, s: f64, case: CriterionCase) -> Result<TailValue> {
    if s <= t {
        return Ok(TailValue::convergent(0.0));
    }
    mass_product(p, t, s, case)
}

/// `B(t) = sup_{s > t} A(t, s)`.
///
/// Coarse scan on `s = t + sinh(u)` for 64 uniform `u`, then golden-section
/// refinement around the best interior bracket. A divergent `A` anywhere, or
/// an `A` exceeding the divergence cap while still growing at the grid edge,
/// makes `B` divergent.
pub fn sup_criterion(p: &RadialProfile, t: f64, case: CriterionCase) -> Result<SupOutcome> {
    let mut s_points = Vec::with_capacity(SCAN_POINTS);
    for i in 1..=SCAN_POINTS {
        let u = U_MAX * (i as f64) / (SCAN_POINTS as f64);
        s_points.push(t + u.sinh());
    }

    let mut values: Vec<(f64, f64)> = Vec::new(); // (s, A)
    let mut saw_indeterminate = false;
    for &s in &s_points {
        match a_value(p, t, s, case)?.kind() {
            TailKind::Convergent(a) => {
                values.push((s, a));
                // unbounded trend: still growing past the divergence cap
                if values.len() >= 3 {
                    let tail3 = &values[values.len() - 3..];
                    if tail3.windows(2).all(|w| w[1].1 >= w[0].1) && a > DIV_CAP {
                        return Ok(SupOutcome {
                            b: TailValue::divergent(),
                            s_star: Some(s),
                            sup_at_infinity: true,
                        });
                    }
                }
            }
            TailKind::Divergent => {
                return Ok(SupOutcome {
                    b: TailValue::divergent(),
                    s_star: Some(s),
                    sup_at_infinity: false,
                })
            }
            TailKind::Indeterminate => saw_indeterminate = true,
        }
    }

    if values.is_empty() {
        return Ok(SupOutcome { b: TailValue::indeterminate(), s_star: None, sup_at_infinity: false });
    }
    let (argmax, &(mut best_s, mut best_a)) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())
        .map(|(i, v)| (i, v))
        .unwrap();
    let at_edge = argmax + 1 == values.len();

    if saw_indeterminate && at_edge {
        // the undecided points sit exactly where the maximum is heading
        return Ok(SupOutcome { b: TailValue::indeterminate(), s_star: None, sup_at_infinity: true });
    }

    if !at_edge {
        // golden-section refinement on the bracket around the best point
        let mut lo = if argmax == 0 { t } else { values[argmax - 1].0 };
        let mut hi = values[argmax + 1].0;
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let eval = |s: f64| -> Result<f64> {
            Ok(match a_value(p, t, s, case)?.kind() {
                TailKind::Convergent(a) => a,
                _ => f64::NEG_INFINITY,
            })
        };
        let mut x1 = hi - phi * (hi - lo);
        let mut x2 = lo + phi * (hi - lo);
        let mut f1 = eval(x1)?;
        let mut f2 = eval(x2)?;
        for _ in 0..80 {
            if hi - lo <= GOLDEN_REL_TOL * (1.0 + hi.abs()) {
                break;
            }
            if f1 < f2 {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + phi * (hi - lo);
                f2 = eval(x2)?;
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - phi * (hi - lo);
                f1 = eval(x1)?;
            }
        }
        let (s_ref, a_ref) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
        if a_ref > best_a {
            best_s = s_ref;
            best_a = a_ref;
        }
    }

    Ok(SupOutcome {
        b: TailValue::convergent(best_a),
        s_star: Some(best_s),
        sup_at_infinity: at_edge,
    })
}

/// The simplified product `S(s)`: finite case `int_0^s 1/omega_bar *
/// int_s^inf omega_bar`, infinite case with the factors swapped.
pub fn simplified_criterion(p: &RadialProfile, s: f64, case: CriterionCase) -> Result<TailValue> {
    if !(s > 0.0) {
        return Err(EndsError::Range(format!("need s > 0, got {s}")));
    }
    mass_product(p, 0.0, s, case)
}

/// Pick the criterion branch from the volume class, verifying the branch
/// precondition. `Err` carries the precondition diagnostic.
pub fn select_case(p: &RadialProfile) -> Result<Option<CriterionCase>> {
    match p.volume_class() {
        VolumeClass::Indeterminate => Ok(None),
        VolumeClass::FiniteVolume => {
            // finite volume forces int 1/omega_bar = inf (Cauchy-Schwarz);
            // verify rather than assume
            match p.reciprocal().tail_integral(0.0).kind() {
                TailKind::Convergent(_) => Err(EndsError::Precondition(
                    "finite volume but int 1/omega_bar also converged numerically".into(),
                )),
                _ => Ok(Some(CriterionCase::Finite)),
            }
        }
        VolumeClass::InfiniteVolume => match p.reciprocal().tail_integral(0.0).kind() {
            TailKind::Convergent(_) => Ok(Some(CriterionCase::Infinite)),
            TailKind::Divergent => Ok(None), // both diverge: essential-spectrum path
            TailKind::Indeterminate => Ok(None),
        },
    }
}

fn decide(values: &[CriterionSample], thr: Thresholds) -> (Verdict, String) {
    if values.iter().any(|v| v.divergent) {
        return (
            Verdict::NotDiscrete,
            "B(t) divergent at some t on the sweep grid".into(),
        );
    }
    let finite: Vec<&CriterionSample> = values.iter().filter(|v| v.b.is_some()).collect();
    if finite.len() < 3 {
        return (Verdict::Inconclusive, "too few decidable B(t) values".into());
    }
    let last3: Vec<f64> = finite[finite.len() - 3..].iter().map(|v| v.b.unwrap()).collect();
    let decreasing = last3[0] >= last3[1] && last3[1] >= last3[2];
    let non_decreasing = last3[0] <= last3[1] && last3[1] <= last3[2];
    let b_end = last3[2];
    if values.iter().any(|v| v.indeterminate) && b_end >= thr.eps_disc {
        return (Verdict::Inconclusive, "indeterminate B(t) on the sweep grid".into());
    }
    if b_end < thr.eps_disc && decreasing {
        (
            Verdict::Discrete,
            format!("B(t_max) = {b_end:.3e} < {:.0e} with decreasing trend", thr.eps_disc),
        )
    } else if b_end >= thr.eps_ess && non_decreasing {
        (
            Verdict::NotDiscrete,
            format!("B(t) = {b_end:.3e} >= {:.0e} with non-decreasing trend", thr.eps_ess),
        )
    } else {
        (
            Verdict::Inconclusive,
            format!("B(t_max) = {b_end:.3e} in the undecided band"),
        )
    }
}

/// Full criterion sweep: case selection, `B(t)` on the dyadic `t`-grid, and
/// the threshold decision rule.
pub fn classify_discreteness(p: &RadialProfile) -> Result<CriterionTrace> {
    classify_discreteness_with(p, Thresholds::default(), &t_grid())
}

/// [`classify_discreteness`] with explicit thresholds and sweep grid.
pub fn classify_discreteness_with(
    p: &RadialProfile,
    thr: Thresholds,
    grid: &[f64],
) -> Result<CriterionTrace> {
    let case = match select_case(p) {
        Ok(Some(c)) => c,
        Ok(None) => {
            // either truly undecidable or the essential-spectrum shortcut
            return Ok(match essential_spectrum_test(p) {
                Trilean::True => CriterionTrace {
                    case: None,
                    samples: Vec::new(),
                    verdict: Verdict::NotDiscrete,
                    rationale: "both int omega_bar and int 1/omega_bar diverge: \
                                essential spectrum is nonempty"
                        .into(),
                },
                _ => CriterionTrace {
                    case: None,
                    samples: Vec::new(),
                    verdict: Verdict::Inconclusive,
                    rationale: "volume class or case precondition undecided".into(),
                },
            });
        }
        Err(e) => {
            return Ok(CriterionTrace {
                case: None,
                samples: Vec::new(),
                verdict: Verdict::Inconclusive,
                rationale: format!("case precondition violated: {e}"),
            })
        }
    };

    let mut samples = Vec::new();
    for &t in grid {
        let out = sup_criterion(p, t, case)?;
        samples.push(CriterionSample {
            t,
            b: out.b.value(),
            divergent: out.b.is_divergent(),
            indeterminate: out.b.is_indeterminate(),
            s_star: out.s_star,
            sup_at_infinity: out.sup_at_infinity,
        });
        if out.b.is_divergent() {
            break; // one divergent B settles the verdict
        }
    }
    let (verdict, rationale) = decide(&samples, thr);
    Ok(CriterionTrace { case: Some(case), samples, verdict, rationale })
}

/// Same decision rule driven by the simplified products `S(s)` on the dyadic
/// `s`-grid; used to cross-check the sweep verdict.
pub fn classify_discreteness_simplified(p: &RadialProfile) -> Result<CriterionTrace> {
    classify_discreteness_simplified_with(p, Thresholds::default(), &t_grid())
}

/// [`classify_discreteness_simplified`] with explicit thresholds and grid.
pub fn classify_discreteness_simplified_with(
    p: &RadialProfile,
    thr: Thresholds,
    grid: &[f64],
) -> Result<CriterionTrace> {
    let case = match select_case(p) {
        Ok(Some(c)) => c,
        // same shortcut paths
        Ok(None) | Err(_) => return classify_discreteness_with(p, thr, grid),
    };
    let mut samples = Vec::new();
    for &s in grid {
        let v = simplified_criterion(p, s, case)?;
        samples.push(CriterionSample {
            t: s,
            b: v.value(),
            divergent: v.is_divergent(),
            indeterminate: v.is_indeterminate(),
            s_star: None,
            sup_at_infinity: false,
        });
        if v.is_divergent() {
            break;
        }
    }
    // S(s) growing without bound is also a divergence signal
    if samples.iter().all(|s| !s.divergent) {
        let finite: Vec<f64> = samples.iter().filter_map(|s| s.b).collect();
        if finite.len() >= 3 {
            let last3 = &finite[finite.len() - 3..];
            if last3.windows(2).all(|w| w[1] >= w[0]) && last3[2] > DIV_CAP {
                return Ok(CriterionTrace {
                    case: Some(case),
                    samples,
                    verdict: Verdict::NotDiscrete,
                    rationale: "S(s) grows past the divergence cap".into(),
                });
            }
        }
    }
    let (verdict, rationale) = decide(&samples, thr);
    Ok(CriterionTrace { case: Some(case), samples, verdict, rationale })
}

#[derive(Debug, Clone, Serialize)]
pub struct LogDerivTrace {
    pub samples: Vec<(f64, f64)>,
    pub verdict: Verdict,
}

/// Fast path for well-behaved profiles: the logarithmic decay rate of the
/// relevant tail integral, `L(s) = -omega_bar(s) / int_s^inf omega_bar dr`
/// (with the reciprocal density in the infinite-volume case). `L -> -inf`
/// means discrete; a stabilising `L` means not discrete.
pub fn log_derivative_criterion(p: &RadialProfile) -> Result<LogDerivTrace> {
    let case = match select_case(p)? {
        Some(c) => c,
        None => {
            return Ok(LogDerivTrace { samples: Vec::new(), verdict: Verdict::Inconclusive })
        }
    };
    let l_at = |s: f64| -> Result<Option<f64>> {
        let tail = match case {
            CriterionCase::Finite => scaled_volume_tail(p, s)?,
            CriterionCase::Infinite => scaled_inverse_tail(p, s)?,
        };
        match tail.kind() {
            TailKind::Convergent(v) => Ok(Some(-1.0 / v)),
            TailKind::Divergent => Err(EndsError::Precondition(
                "tail integral diverges: wrong case for the log-derivative criterion".into(),
            )),
            TailKind::Indeterminate => Ok(None),
        }
    };

    let mut samples: Vec<(f64, f64)> = Vec::new();
    let mut s = 4.0;
    // base grid 4..64, extended by doubling while undecided
    while s <= (1u64 << 30) as f64 {
        if let Some(l) = l_at(s)? {
            samples.push((s, l));
        }
        if samples.len() >= 3 && s >= 64.0 {
            let last3 = &samples[samples.len() - 3..];
            let monotone_down = last3.windows(2).all(|w| w[1].1 <= w[0].1);
            if monotone_down && last3[2].1 < -LOG_DERIV_THRESH {
                return Ok(LogDerivTrace { samples, verdict: Verdict::Discrete });
            }
            let stable = last3
                .windows(2)
                .all(|w| (w[1].1 - w[0].1).abs() <= 0.01 * w[1].1.abs());
            if stable {
                return Ok(LogDerivTrace { samples, verdict: Verdict::NotDiscrete });
            }
        }
        s *= 2.0;
    }
    Ok(LogDerivTrace { samples, verdict: Verdict::Inconclusive })
}

/// Essential-spectrum shortcut: both `int_0^inf omega_bar` and
/// `int_0^inf 1/omega_bar` divergent.
pub fn essential_spectrum_test(p: &RadialProfile) -> Trilean {
    let vol = p.tail_integral(0.0);
    let inv = p.reciprocal().tail_integral(0.0);
    match (vol.kind(), inv.kind()) {
        (TailKind::Divergent, TailKind::Divergent) => Trilean::True,
        (TailKind::Indeterminate, _) | (_, TailKind::Indeterminate) => Trilean::Unknown,
        _ => Trilean::False,
    }
}

/// Certified lower bound `max(0, 1/(8 B(t)) - c^2/4)` for the bottom of the
/// Dirichlet spectrum of the truncated end.
pub fn lambda0_lower_bound(p: &RadialProfile, t: f64, c: f64) -> Result<f64> {
    let case = match select_case(p)? {
        Some(c) => c,
        None => return Ok(0.0),
    };
    let out = sup_criterion(p, t, case)?;
    Ok(match out.b.kind() {
        TailKind::Convergent(b) if b > 0.0 => (1.0 / (8.0 * b) - c * c / 4.0).max(0.0),
        _ => 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(text: &str) -> RadialProfile {
        RadialProfile::parse(text).unwrap()
    }

    #[test]
    fn mass_product_closed_forms() {
        // exp(-r), finite case, t=0, s=2: (e^2 - 1) e^{-2} = 1 - e^{-2}
        let a = mass_product(&p("exp(-r)"), 0.0, 2.0, CriterionCase::Finite).unwrap();
        let expected = 1.0 - (-2f64).exp();
        assert!((a.value().unwrap() - expected).abs() < 1e-9);

        // exp(r), infinite case: equal by duality
        let b = mass_product(&p("exp(r)"), 0.0, 2.0, CriterionCase::Infinite).unwrap();
        assert!((b.value().unwrap() - expected).abs() < 1e-9);

        // constant profile: the volume tail diverges
        let c = mass_product(&p("1"), 0.0, 2.0, CriterionCase::Finite).unwrap();
        assert!(c.is_divergent());
    }

    #[test]
    fn sup_criterion_exponential_reaches_one() {
        let out = sup_criterion(&p("exp(-r)"), 0.0, CriterionCase::Finite).unwrap();
        let b = out.b.value().unwrap();
        assert!((b - 1.0).abs() < 1e-9, "B = {b}");
        assert!(out.sup_at_infinity);

        let out5 = sup_criterion(&p("exp(r)"), 5.0, CriterionCase::Infinite).unwrap();
        assert!((out5.b.value().unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sup_criterion_gaussian_is_small_at_t3() {
        // frozen against a brute-force scan oracle: B(3) <= 0.06
        let out = sup_criterion(&p("exp(-r^2)"), 3.0, CriterionCase::Finite).unwrap();
        let b = out.b.value().unwrap();
        assert!(b > 0.0 && b <= 0.06, "B(3) = {b}");
        assert!(!out.sup_at_infinity);
    }

    #[test]
    fn brute_force_scan_agrees_with_sup_search() {
        // independent oracle: dense scan of A(t, s) on 10^4 points
        let prof = p("exp(-r^2)");
        let t = 3.0;
        let mut best = 0.0f64;
        for i in 1..10_000 {
            let s = t + 10.0 * (i as f64) / 10_000.0;
            if let Some(a) = mass_product(&prof, t, s, CriterionCase::Finite)
                .unwrap()
                .value()
            {
                best = best.max(a);
            }
        }
        let out = sup_criterion(&prof, t, CriterionCase::Finite).unwrap();
        let b = out.b.value().unwrap();
        assert!(b >= best * (1.0 - 1e-6), "search missed the scan maximum: {b} < {best}");
        assert!((b - best).abs() <= 2e-4 * best, "b={b} scan={best}");
    }

    #[test]
    fn simplified_criterion_closed_forms() {
        // exp(-r): S(s) = (e^s - 1) e^{-s}
        let prof = p("exp(-r)");
        for (s, expected) in [(1.0, 0.6321205588285577), (5.0, 0.9932620530009145)] {
            let v = simplified_criterion(&prof, s, CriterionCase::Finite)
                .unwrap()
                .value()
                .unwrap();
            assert!((v - expected).abs() < 1e-9, "S({s}) = {v}");
        }
        // exp(r^3), infinite case, s=2: finite and below 0.1
        let v = simplified_criterion(&p("exp(r^3)"), 2.0, CriterionCase::Infinite)
            .unwrap()
            .value()
            .unwrap();
        assert!(v > 0.0 && v < 0.1, "S(2) = {v}");
        // constant: divergent either way
        assert!(simplified_criterion(&p("1"), 1.0, CriterionCase::Finite)
            .unwrap()
            .is_divergent());
    }

    #[test]
    fn classification_corpus() {
        let expect = [
            ("exp(-r^2)", Verdict::Discrete),
            ("exp(r^2)", Verdict::Discrete),
            ("exp(r^3)", Verdict::Discrete),
            ("exp(-r)", Verdict::NotDiscrete),
            ("exp(r)", Verdict::NotDiscrete),
            ("1", Verdict::NotDiscrete),
            ("r+1", Verdict::NotDiscrete),
            ("(1+r)^(-2)", Verdict::NotDiscrete),
        ];
        for (text, want) in expect {
            let trace = classify_discreteness(&p(text)).unwrap();
            assert_eq!(trace.verdict, want, "{text}: {}", trace.rationale);
        }
    }

    #[test]
    fn b_is_non_increasing_where_finite() {
        for text in ["exp(-r^2)", "exp(-r)", "exp(r)", "exp(r^3)"] {
            let trace = classify_discreteness(&p(text)).unwrap();
            let vals: Vec<f64> = trace.samples.iter().filter_map(|s| s.b).collect();
            for w in vals.windows(2) {
                assert!(
                    w[1] <= w[0] * (1.0 + 1e-9),
                    "{text}: B increased {} -> {}",
                    w[0],
                    w[1]
                );
            }
        }
    }

    #[test]
    fn log_derivative_criterion_corpus() {
        assert_eq!(
            log_derivative_criterion(&p("exp(-r^2)")).unwrap().verdict,
            Verdict::Discrete
        );
        let t = log_derivative_criterion(&p("exp(-r)")).unwrap();
        assert_eq!(t.verdict, Verdict::NotDiscrete);
        for &(_, l) in &t.samples {
            assert!((l + 1.0).abs() < 1e-6, "L should be -1, got {l}");
        }
        assert_eq!(
            log_derivative_criterion(&p("exp(r)")).unwrap().verdict,
            Verdict::NotDiscrete
        );
    }

    #[test]
    fn essential_spectrum_cases() {
        assert_eq!(essential_spectrum_test(&p("1")), Trilean::True);
        assert_eq!(essential_spectrum_test(&p("r+1")), Trilean::True);
        assert_eq!(essential_spectrum_test(&p("exp(-r)")), Trilean::False);
    }

    #[test]
    fn lower_bound_values() {
        // B(0) = 1 for exp(-r): bound = 1/8, consistent with lambda_0 = 1/4
        let b = lambda0_lower_bound(&p("exp(-r)"), 0.0, 0.0).unwrap();
        assert!((b - 0.125).abs() < 1e-8);
        // clamp at zero when the curvature term dominates
        let b = lambda0_lower_bound(&p("exp(-r)"), 0.0, 10.0).unwrap();
        assert_eq!(b, 0.0);
    }

    #[test]
    fn duality_swap_is_exact() {
        for text in ["exp(r)", "exp(r^3)", "exp(r^2)", "r+1"] {
            let prof = p(text);
            let inv = prof.reciprocal();
            for t in [1.0, 4.0] {
                let a = sup_criterion(&prof, t, CriterionCase::Infinite).unwrap();
                let b = sup_criterion(&inv, t, CriterionCase::Finite).unwrap();
                match (a.b.kind(), b.b.kind()) {
                    (TailKind::Convergent(x), TailKind::Convergent(y)) => {
                        assert!((x - y).abs() <= 1e-8 * x.abs().max(1e-300), "{text} t={t}");
                    }
                    (ka, kb) => assert_eq!(ka, kb, "{text} t={t}"),
                }
            }
        }
    }
}
