//! Quadrature building blocks: adaptive Simpson on finite intervals and a
//! dyadic-window sweep for improper integrals with an explicit
//! convergent / divergent / indeterminate outcome.

use crate::error::{EndsError, Result};
use serde::Serialize;

/// Default relative tolerance for definite integrals.
pub const DEFAULT_REL_TOL: f64 = 1e-10;
/// Largest dyadic window exponent scanned by the improper-integral sweep.
pub const K_MAX: u32 = 60;
/// Number of trailing windows examined by the convergence/divergence rules.
pub const DECISION_WINDOWS: usize = 5;
/// A window contribution below this is considered exhausted.
pub const TAIL_TOL_ABS: f64 = 1e-12;
/// Partial sums beyond this cap with non-decreasing windows are divergent.
pub const DIV_CAP: f64 = 1e12;

/// Compensated (Kahan) accumulator; grid sums must not depend on order noise.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Adaptive Simpson quadrature on `[a, b]`.
///
/// Non-finite integrand values short-circuit and are returned as the result,
/// so divergence shows up as `inf` rather than as a hung recursion.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(a <= b) {
        return Err(EndsError::Range(format!("bad interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    let first = simpson_pass(&f, a, b, rel_tol, None)?;
    if !first.is_finite() {
        return Ok(first);
    }
    // The first pass sets its tolerance from the crude whole-interval
    // estimate, which can be far off for boundary-layer integrands. Rerun
    // with the measured magnitude when the two disagree badly.
    let crude = crude_estimate(&f, a, b)?;
    if crude.abs() > 4.0 * first.abs().max(1e-300) {
        return simpson_pass(&f, a, b, rel_tol, Some(first.abs()));
    }
    Ok(first)
}

fn crude_estimate<F>(f: &F, a: f64, b: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let m = 0.5 * (a + b);
    Ok((b - a) / 6.0 * (f(a)? + 4.0 * f(m)? + f(b)?))
}

fn simpson_pass<F>(f: &F, a: f64, b: f64, rel_tol: f64, scale_hint: Option<f64>) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let fa = f(a)?;
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let fb = f(b)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let scale = scale_hint.unwrap_or_else(|| whole.abs());
    let eps = rel_tol * scale.max(1e-300);
    let mut out = KahanSum::default();
    simpson_rec(f, a, b, fa, fm, fb, whole, eps, 60, &mut out)?;
    Ok(out.value())
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
    out: &mut KahanSum,
) -> Result<()>
where
    F: Fn(f64) -> Result<f64>,
{
    if !whole.is_finite() {
        out.add(whole);
        return Ok(());
    }
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    if !flm.is_finite() || !frm.is_finite() {
        out.add(flm + frm);
        return Ok(());
    }
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        out.add(left + right + delta / 15.0);
        return Ok(());
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1, out)?;
    simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1, out)
}

/// One window of an improper-integral sweep.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
    pub contribution: f64,
}

/// Outcome of an improper integral over `[s, infinity)`.
#[derive(Debug, Clone, Serialize)]
pub struct TailValue {
    pub kind: TailKind,
    /// Window trace that justified the verdict.
    pub windows: Vec<Window>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TailKind {
    Convergent(f64),
    Divergent,
    Indeterminate,
}

impl TailValue {
    pub fn kind(&self) -> TailKind {
        self.kind
    }

    pub fn is_convergent(&self) -> bool {
        matches!(self.kind, TailKind::Convergent(_))
    }

    pub fn is_divergent(&self) -> bool {
        self.kind == TailKind::Divergent
    }

    pub fn is_indeterminate(&self) -> bool {
        self.kind == TailKind::Indeterminate
    }

    pub fn value(&self) -> Option<f64> {
        match self.kind {
            TailKind::Convergent(v) => Some(v),
            _ => None,
        }
    }

    pub fn convergent(value: f64) -> TailValue {
        TailValue { kind: TailKind::Convergent(value), windows: Vec::new() }
    }

    pub fn divergent() -> TailValue {
        TailValue { kind: TailKind::Divergent, windows: Vec::new() }
    }

    pub fn indeterminate() -> TailValue {
        TailValue { kind: TailKind::Indeterminate, windows: Vec::new() }
    }
}

/// Dyadic window boundaries covering `[s, 2^(K_MAX+1)]`: the window starting
/// at `s` up to the next power of two, then `[2^k, 2^(k+1)]`.
pub fn window_boundaries(s: f64) -> Vec<f64> {
    let mut bounds = vec![s];
    for k in 0..=K_MAX {
        let b = (k as f64).exp2();
        if b > s {
            bounds.push(b);
        }
    }
    bounds
}

/// Sweep dyadic windows of a non-negative integrand and decide convergence.
///
/// Convergent: the last `DECISION_WINDOWS` contributions are each below
/// `TAIL_TOL_ABS` and decrease geometrically. Divergent: the last
/// `DECISION_WINDOWS` contributions are non-decreasing and the partial sum
/// exceeds `DIV_CAP`, or any contribution is non-finite. Anything else after
/// `K_MAX` windows is indeterminate.
pub fn window_sweep<F>(integrate_window: F, s: f64) -> TailValue
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    window_sweep_impl(integrate_window, s, false)
}

/// Like [`window_sweep`], but the smallness threshold is taken relative to
/// the running partial sum. Used for integrands that were rescaled by a
/// pivot value, where the natural magnitude is not 1.
pub fn window_sweep_scaled<F>(integrate_window: F, s: f64) -> TailValue
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    window_sweep_impl(integrate_window, s, true)
}

fn window_sweep_impl<F>(mut integrate_window: F, s: f64, relative: bool) -> TailValue
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    let bounds = window_boundaries(s);
    let mut windows: Vec<Window> = Vec::new();
    let mut sum = KahanSum::default();

    for pair in bounds.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let w = match integrate_window(lo, hi) {
            Ok(w) => w,
            Err(EndsError::Range(_)) => {
                // tabulated profile ran out of data: an honest "don't know"
                return TailValue { kind: TailKind::Indeterminate, windows };
            }
            Err(_) => return TailValue { kind: TailKind::Indeterminate, windows },
        };
        if !w.is_finite() {
            windows.push(Window { lo, hi, contribution: w });
            return TailValue { kind: TailKind::Divergent, windows };
        }
        sum.add(w);
        windows.push(Window { lo, hi, contribution: w });

        if windows.len() >= DECISION_WINDOWS {
            let last = &windows[windows.len() - DECISION_WINDOWS..];
            let small_cutoff = if relative {
                TAIL_TOL_ABS * sum.value().abs().max(1.0)
            } else {
                TAIL_TOL_ABS
            };
            let small = last.iter().all(|w| w.contribution.abs() < small_cutoff);
            let geometric = last
                .windows(2)
                .all(|p| p[1].contribution <= 0.9 * p[0].contribution + f64::MIN_POSITIVE);
            if small && geometric {
                return TailValue { kind: TailKind::Convergent(sum.value()), windows };
            }
            let non_decreasing = last.windows(2).all(|p| p[1].contribution >= p[0].contribution);
            if non_decreasing && sum.value() > DIV_CAP {
                return TailValue { kind: TailKind::Divergent, windows };
            }
        }
    }
    // logarithmically divergent integrands contribute a near-constant amount
    // per dyadic window, so they reach neither the smallness cutoff nor the
    // sum cap; a window at the far end of the sweep (r ~ 2^60) still
    // contributing above the noise floor means the tail is not summable
    if let Some(w) = windows.last() {
        let floor = if relative { 1e-6 * sum.value().abs().max(1.0) } else { 1e-6 };
        if w.contribution > floor {
            return TailValue { kind: TailKind::Divergent, windows };
        }
    }
    TailValue { kind: TailKind::Indeterminate, windows }
}

/// `ln(e^a + e^b)` without overflow.
pub(crate) fn ln_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `ln` of `int_a^b w` for a segment where `ln w` is roughly linear between
/// the endpoint values: the exponential-fit rule `(w_b - w_a) / (ln w)'`,
/// exact for exponentials of any steepness. A plain trapezoid would
/// overestimate by a factor of the per-segment log increment, which for
/// densities like `exp(r^3)` over dyadic windows is astronomically wrong.
pub(crate) fn ln_segment_integral(ln_wa: f64, ln_wb: f64, dr: f64) -> f64 {
    let x = (ln_wb - ln_wa).abs();
    if x < 1e-8 {
        ln_add_exp(ln_wa, ln_wb) + (dr / 2.0).ln()
    } else {
        ln_wa.max(ln_wb) + (dr * (1.0 - (-x).exp()) / x).ln()
    }
}

/// `int exp(sign * Phi) dv` over `[v_lo, v_hi]` where `Phi' = q` and
/// `Phi(v_lo) = phi_lo`; returns the integral and `Phi(v_hi)`.
///
/// The log-ratio `Phi` is accumulated from the drift `q` by per-segment
/// Simpson rather than recovered as a difference of log-densities: once
/// `|ln omega_bar|` passes ~1e15 such differences are pure cancellation
/// noise, which an adaptive quadrature then refines forever. Each doubling
/// pass applies the exponential-fit rule per segment (exact for exponential
/// integrands); Richardson extrapolation of consecutive passes drives the
/// stopping test.
pub(crate) fn drift_span<Q>(
    q: &Q,
    v_lo: f64,
    v_hi: f64,
    phi_lo: f64,
    sign: f64,
    rel_tol: f64,
) -> Result<(f64, f64)>
where
    Q: Fn(f64) -> Result<f64>,
{
    if !(v_lo <= v_hi) {
        return Err(EndsError::Range(format!("bad interval [{v_lo}, {v_hi}]")));
    }
    if v_lo == v_hi {
        return Ok((0.0, phi_lo));
    }
    let pass = |n: usize| -> Result<(f64, f64)> {
        let dv = (v_hi - v_lo) / n as f64;
        let mut phi = phi_lo;
        let mut sum = KahanSum::default();
        let mut q_lo = q(v_lo)?;
        for k in 0..n {
            let x0 = v_lo + k as f64 * dv;
            let x1 = if k + 1 == n { v_hi } else { x0 + dv };
            let qm = q(0.5 * (x0 + x1))?;
            let q_hi = q(x1)?;
            let la = sign * phi;
            phi += (x1 - x0) / 6.0 * (q_lo + 4.0 * qm + q_hi);
            let lb = sign * phi;
            sum.add(ln_segment_integral(la, lb, x1 - x0).exp());
            q_lo = q_hi;
        }
        Ok((sum.value(), phi))
    };
    let (mut prev, _) = pass(8)?;
    let mut n = 16usize;
    let (mut cur, mut phi) = pass(n)?;
    if !cur.is_finite() {
        return Ok((cur, phi));
    }
    let mut rich_prev = cur + (cur - prev) / 3.0;
    if (cur - prev).abs() <= rel_tol * cur.abs().max(1e-300) {
        return Ok((rich_prev, phi));
    }
    loop {
        prev = cur;
        n *= 2;
        let next = pass(n)?;
        cur = next.0;
        phi = next.1;
        if !cur.is_finite() {
            return Ok((cur, phi));
        }
        let rich = cur + (cur - prev) / 3.0;
        if (rich - rich_prev).abs() <= rel_tol * rich.abs().max(1e-300) || n >= (1 << 13) {
            return Ok((rich, phi));
        }
        rich_prev = rich;
    }
}

/// [`drift_span`] over `[0, length]` with dyadic subdivision away from 0;
/// stops early once windows stop contributing, like [`integrate_graded`].
pub(crate) fn drift_graded<Q>(q: &Q, sign: f64, length: f64, rel_tol: f64) -> Result<f64>
where
    Q: Fn(f64) -> Result<f64>,
{
    if length <= 0.0 {
        return Ok(0.0);
    }
    let mut sum = KahanSum::default();
    let mut phi = 0.0f64;
    let mut lo = 0.0f64;
    let mut hi = 1.0f64.min(length);
    let mut negligible = 0u32;
    loop {
        let (w, phi_hi) = drift_span(q, lo, hi, phi, sign, rel_tol)?;
        if !w.is_finite() {
            return Ok(w);
        }
        phi = phi_hi;
        sum.add(w);
        if hi >= length {
            return Ok(sum.value());
        }
        if w.abs() < 1e-14 * sum.value().abs().max(1e-300) {
            negligible += 1;
            if negligible >= 3 {
                return Ok(sum.value());
            }
        } else {
            negligible = 0;
        }
        lo = hi;
        hi = (2.0 * hi).min(length);
    }
}

/// Integrate `f` over `[0, length]` with dyadic subdivision away from 0.
///
/// Used for integrals whose mass sits in a boundary layer at 0 after a
/// change of variables; stops early once windows stop contributing.
pub fn integrate_graded<F>(f: F, length: f64, rel_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if length <= 0.0 {
        return Ok(0.0);
    }
    let mut sum = KahanSum::default();
    let mut lo = 0.0f64;
    let mut hi = 1.0f64.min(length);
    let mut negligible = 0u32;
    loop {
        let w = adaptive_simpson(&f, lo, hi, rel_tol)?;
        if !w.is_finite() {
            return Ok(w);
        }
        sum.add(w);
        if hi >= length {
            return Ok(sum.value());
        }
        if w.abs() < 1e-14 * sum.value().abs().max(1e-300) {
            negligible += 1;
            if negligible >= 3 {
                return Ok(sum.value());
            }
        } else {
            negligible = 0;
        }
        lo = hi;
        hi = (2.0 * hi).min(length);
    }
}
