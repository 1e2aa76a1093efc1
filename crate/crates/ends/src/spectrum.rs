//! Direct spectral estimates for the reduced radial operator
//! `-(1/omega_bar) (omega_bar u')'`: truncated Dirichlet/Neumann bottom
//! eigenvalues by finite differences, explicit variational upper bounds from
//! Lipschitz test families, capacity estimates, and the characteristic
//! Rayleigh sequences that witness essential spectrum.
//!
//! The discretization works entirely with log-density differences between
//! neighbouring grid nodes, so profiles whose raw values overflow or
//! underflow f64 remain solvable as long as the per-cell variation is
//! moderate.

use crate::criteria::{
    essential_spectrum_test, scaled_inverse_mass, scaled_mass, scaled_inverse_tail, sup_criterion,
    CriterionCase, Trilean,
};
use crate::error::{EndsError, Result};
use crate::profile::{RadialProfile, VolumeClass};
use crate::quad::{adaptive_simpson, drift_graded, TailKind, DEFAULT_REL_TOL};
use serde::Serialize;
use std::sync::OnceLock;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Boundary {
    Dirichlet,
    Neumann,
}

/// One truncated eigenvalue solve.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralEstimate {
    pub t: f64,
    pub r_end: f64,
    pub n: usize,
    pub lambda: f64,
    /// Extrapolated from the `n` and `2n` solves.
    pub richardson: f64,
    pub boundary: Boundary,
}

/// One entry of [`eigenvalue_curve`].
#[derive(Debug, Clone, Serialize)]
pub struct CurvePoint {
    pub estimate: SpectralEstimate,
    /// R-doubling reached a <1% change before hitting the radius cap.
    pub truncation_converged: bool,
    /// Neumann bottom value at the final truncation, computed for
    /// infinite-volume profiles.
    pub mu0: Option<f64>,
}

/// Truncation radii are doubled up to this cap.
pub const R_CAP: f64 = 512.0;

/// Symmetric tridiagonal discretization of the weighted operator on
/// `(t, r_end)` with `n` interior nodes. Neumann ends keep the boundary
/// nodes as unknowns with half mass cells.
fn assemble(
    p: &RadialProfile,
    t: f64,
    r_end: f64,
    n: usize,
    neumann: bool,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let dr = (r_end - t) / (n as f64 + 1.0);
    let nodes = n + 2;
    let mut l = Vec::with_capacity(nodes);
    let mut lh = Vec::with_capacity(nodes - 1);
    for i in 0..nodes {
        l.push(p.ln_evaluate(t + i as f64 * dr)?);
    }
    for i in 0..nodes - 1 {
        lh.push(p.ln_evaluate(t + (i as f64 + 0.5) * dr)?);
    }
    let ratio = |e: f64| -> Result<f64> {
        if e > 700.0 {
            Err(EndsError::Numerical(format!(
                "density varies by e^{e:.0} across one grid cell; refine N or reduce R"
            )))
        } else {
            Ok(e.exp())
        }
    };
    let inv_dr2 = 1.0 / (dr * dr);
    let (first, last) = if neumann { (0, nodes - 1) } else { (1, nodes - 2) };
    let m = last - first + 1;
    let mut diag = vec![0.0; m];
    let mut off = vec![0.0; m.saturating_sub(1)];
    for (j, i) in (first..=last).enumerate() {
        let mut d = 0.0;
        if i > 0 {
            d += ratio(lh[i - 1] - l[i])?;
        }
        if i < nodes - 1 {
            d += ratio(lh[i] - l[i])?;
        }
        if neumann && (i == 0 || i == nodes - 1) {
            d *= 2.0; // half mass cell at a free end
        }
        diag[j] = d * inv_dr2;
    }
    for (j, i) in (first..last).enumerate() {
        let mut o = ratio(lh[i] - 0.5 * (l[i] + l[i + 1]))?;
        if neumann && (i == 0 || i + 1 == nodes - 1) {
            o *= std::f64::consts::SQRT_2;
        }
        off[j] = -o * inv_dr2;
    }
    Ok((diag, off))
}

/// Number of eigenvalues of the symmetric tridiagonal matrix below `x`
/// (Sturm sequence via the LDL^T pivot recurrence).
fn count_below(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0f64;
    for i in 0..diag.len() {
        let e2 = if i > 0 { off[i - 1] * off[i - 1] } else { 0.0 };
        let mut qi = diag[i] - x - e2 / q;
        if qi == 0.0 {
            qi = -1e-300;
        }
        if qi < 0.0 {
            count += 1;
        }
        q = qi;
    }
    count
}

fn smallest_eig(diag: &[f64], off: &[f64]) -> f64 {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let mut radius = 0.0;
        if i > 0 {
            radius += off[i - 1].abs();
        }
        if i < n - 1 {
            radius += off[i].abs();
        }
        lo = lo.min(diag[i] - radius);
        hi = hi.max(diag[i] + radius);
    }
    // tolerance tracks the current bracket: the Gershgorin interval can be
    // astronomically wider than the eigenvalue when the density spans many
    // orders of magnitude, so a tolerance frozen at the initial width would
    // stop long before the eigenvalue is resolved
    while hi - lo > 1e-10_f64.max(1e-14 * lo.abs().max(hi.abs())) {
        let mid = 0.5 * (lo + hi);
        if count_below(diag, off, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solve `(T - shift) x = b` for symmetric positive-definite tridiagonal
/// `T - shift` (Thomas algorithm, no pivoting).
fn solve_shifted(diag: &[f64], off: &[f64], shift: f64, b: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = if n > 1 { off[0] / (diag[0] - shift) } else { 0.0 };
    d[0] = b[0] / (diag[0] - shift);
    for i in 1..n {
        let m = diag[i] - shift - off[i - 1] * c[i - 1];
        if i < n - 1 {
            c[i] = off[i] / m;
        }
        d[i] = (b[i] - off[i - 1] * d[i - 1]) / m;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= c[i] * next;
    }
    x
}

/// Smallest eigenvalue with its (unit) eigenvector by inverse iteration.
fn lowest_eigpair(diag: &[f64], off: &[f64]) -> (f64, Vec<f64>) {
    let lam = smallest_eig(diag, off);
    let shift = lam - 1e-6 * (1.0 + lam.abs());
    let n = diag.len();
    // smooth positive start so the overlap with the ground state is O(1)
    let mut v: Vec<f64> = (0..n)
        .map(|i| (std::f64::consts::PI * (i as f64 + 1.0) / (n as f64 + 1.0)).sin())
        .collect();
    for _ in 0..4 {
        v = solve_shifted(diag, off, shift, &v);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in &mut v {
            *x /= norm;
        }
    }
    (lam, v)
}

fn solve(p: &RadialProfile, t: f64, r_end: f64, n: usize, neumann: bool) -> Result<f64> {
    let (diag, off) = assemble(p, t, r_end, n, neumann)?;
    Ok(smallest_eig(&diag, &off))
}

fn estimate(
    p: &RadialProfile,
    t: f64,
    r_end: f64,
    n: usize,
    boundary: Boundary,
) -> Result<SpectralEstimate> {
    if !(t < r_end) {
        return Err(EndsError::Range(format!("need t < R, got t={t}, R={r_end}")));
    }
    if n < 64 {
        return Err(EndsError::Precondition(format!("need N >= 64, got {n}")));
    }
    let neumann = boundary == Boundary::Neumann;
    let lam = solve(p, t, r_end, n, neumann)?;
    let lam2 = solve(p, t, r_end, 2 * n + 1, neumann)?;
    Ok(SpectralEstimate {
        t,
        r_end,
        n,
        lambda: lam,
        richardson: lam2 + (lam2 - lam) / 3.0,
        boundary,
    })
}

/// Bottom Dirichlet eigenvalue of the truncated end `(t, R)`.
pub fn dirichlet_lambda0(p: &RadialProfile, t: f64, r_end: f64, n: usize) -> Result<SpectralEstimate> {
    estimate(p, t, r_end, n, Boundary::Dirichlet)
}

/// Bottom Neumann eigenvalue of the truncated end `(t, R)`.
pub fn neumann_mu0(p: &RadialProfile, t: f64, r_end: f64, n: usize) -> Result<SpectralEstimate> {
    estimate(p, t, r_end, n, Boundary::Neumann)
}

/// Dirichlet bottom values along a `t`-grid, with truncation chosen by
/// R-doubling until the estimate moves by less than 1% (or the cap or a
/// resolution failure stops the doubling). For infinite-volume profiles the
/// Neumann value at the final truncation is attached as a companion
/// diagnostic.
pub fn eigenvalue_curve(p: &RadialProfile, t_grid: &[f64], n: usize) -> Result<Vec<CurvePoint>> {
    let infinite = p.volume_class() == VolumeClass::InfiniteVolume;
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let mut r_end = t + 8.0;
        let mut current = dirichlet_lambda0(p, t, r_end, n)?;
        let mut converged = false;
        while 2.0 * r_end - t <= R_CAP.max(t + 8.0) {
            let next_r = t + 2.0 * (r_end - t);
            match dirichlet_lambda0(p, t, next_r, n) {
                Ok(next) => {
                    let change = (next.lambda - current.lambda).abs()
                        / current.lambda.abs().max(1e-300);
                    // enlarging the domain cannot raise the Dirichlet
                    // bottom; a rise means the fixed node count stopped
                    // resolving the well, so keep the previous truncation
                    if next.lambda > 1.01 * current.lambda && change >= 0.01 {
                        converged = true;
                        break;
                    }
                    let done = change < 0.01;
                    current = next;
                    r_end = next_r;
                    if done {
                        converged = true;
                        break;
                    }
                }
                // the profile can no longer be resolved at this truncation;
                // keep the last good estimate
                Err(EndsError::Numerical(_)) => break,
                Err(e) => return Err(e),
            }
        }
        let mu0 = if infinite {
            Some(neumann_mu0(p, t, r_end, n)?.lambda)
        } else {
            None
        };
        out.push(CurvePoint { estimate: current, truncation_converged: converged, mu0 });
    }
    Ok(out)
}

/// `int_a^b omega_bar dr / omega_bar(a)` (pivot at the lower end); the
/// log-ratio to the pivot is accumulated from the log-derivative, like the
/// criterion integrals.
fn scaled_mass_from(p: &RadialProfile, a: f64, b: f64) -> Result<f64> {
    let g = crate::criteria::layer_scale(p, a);
    let q = |v: f64| Ok(p.log_derivative((a + v / g).min(b))? / g);
    Ok(drift_graded(&q, 1.0, g * (b - a), DEFAULT_REL_TOL)? / g)
}

/// `omega_bar(a) * int_a^b 1/omega_bar dr` (pivot at the lower end).
fn scaled_inv_from(p: &RadialProfile, a: f64, b: f64) -> Result<f64> {
    let g = crate::criteria::layer_scale(p, a);
    let q = |v: f64| Ok(p.log_derivative((a + v / g).min(b))? / g);
    Ok(drift_graded(&q, -1.0, g * (b - a), DEFAULT_REL_TOL)? / g)
}

/// Variational upper bound for the finite-volume case: the Lipschitz family
/// rising on `[t, s]`, level on `[s, s0]`, and descending past `s0` gives
///
/// ```text
/// (1 + int_t^s w^-1 / int_s^s0 w^-1) / (int_t^s w^-1 * int_s^s0 w)
/// ```
///
/// The descent leg needs `s1 > s0` with `int_s0^s1 w^-1 = int_s^s0 w^-1`,
/// which is root-found to certify feasibility.
pub fn rayleigh_upper_finite(p: &RadialProfile, t: f64, s: f64, s0: f64) -> Result<f64> {
    if !(0.0 <= t && t < s && s < s0) {
        return Err(EndsError::Range(format!("need 0 <= t < s < s0, got {t}, {s}, {s0}")));
    }
    let i1 = scaled_inverse_mass(p, t, s)?; // w(s) int_t^s w^-1
    let i2 = scaled_inverse_mass(p, s, s0)?; // w(s0) int_s^s0 w^-1
    let i3 = scaled_mass_from(p, s, s0)?; // int_s^s0 w / w(s)
    let ls = p.ln_evaluate(s)?;
    let ls0 = p.ln_evaluate(s0)?;

    // feasibility of the descent leg: find s1 with the matching inverse mass
    let target = i2; // scaled by w(s0), same pivot as the probe below
    let mut hi = s0 + (s0 - s);
    let mut found = false;
    for _ in 0..64 {
        if scaled_inv_from(p, s0, hi)? >= target {
            found = true;
            break;
        }
        hi = s0 + 2.0 * (hi - s0);
        if hi > 2f64.powi(30) {
            break;
        }
    }
    if !found {
        return Err(EndsError::Infeasible(format!(
            "no s1 below 2^30 balances the inverse mass of [{s}, {s0}]"
        )));
    }

    // ratio = int_t^s w^-1 / int_s^s0 w^-1, assembled in logs to survive
    // extreme pivot separation
    let ln_ratio = (ls0 - ls) + i1.ln() - i2.ln();
    let ratio = ln_ratio.exp();
    let denom = i1 * i3; // pivots at s cancel exactly
    if denom == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((1.0 + ratio) / denom)
}

/// Variational upper bound for the infinite-volume case:
/// `1 / (int_s^s0 w^-1 * int_t^s w)`. Pass `s0 = inf` for the limiting bound.
pub fn rayleigh_upper_infinite(p: &RadialProfile, t: f64, s: f64, s0: f64) -> Result<f64> {
    if !(0.0 <= t && t < s && s < s0) {
        return Err(EndsError::Range(format!("need 0 <= t < s < s0, got {t}, {s}, {s0}")));
    }
    let mass = scaled_mass(p, t, s)?; // int_t^s w / w(s)
    let inv = if s0.is_infinite() {
        match scaled_inverse_tail(p, s)?.kind() {
            TailKind::Convergent(v) => v,
            TailKind::Divergent => {
                return Err(EndsError::Precondition(
                    "int_s^inf 1/omega_bar diverges: wrong case for this bound".into(),
                ))
            }
            TailKind::Indeterminate => {
                return Err(EndsError::Numerical(
                    "tail integral of 1/omega_bar indeterminate".into(),
                ))
            }
        }
    } else {
        scaled_inv_from(p, s, s0)? // w(s) int_s^s0 w^-1
    };
    let denom = inv * mass; // pivots at s cancel exactly
    if denom == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(1.0 / denom)
}

/// Capacity upper bound `(int_s^inf 1/omega_bar)^-1` for the annulus between
/// the `t` and `s` level sets; divergent tail means capacity 0 (and the
/// family attains it).
pub fn capacity_upper(p: &RadialProfile, _t: f64, s: f64) -> Result<f64> {
    let tail = scaled_inverse_tail(p, s)?;
    match tail.kind() {
        TailKind::Convergent(v) => {
            let ln_cap = p.ln_evaluate(s)? - v.ln();
            Ok(ln_cap.exp()) // saturates to inf when genuinely huge
        }
        TailKind::Divergent => Ok(0.0),
        TailKind::Indeterminate => Err(EndsError::Numerical(
            "capacity tail integral indeterminate".into(),
        )),
    }
}

/// Upper estimate of the Maz'ja constant of the end past `t`: the infimal
/// capacity-to-volume ratio over the same `s`-search as the criterion sup,
/// which is the exact reciprocal of `B_inf(t)`.
pub fn mazja_estimate(p: &RadialProfile, t: f64) -> Result<f64> {
    let out = sup_criterion(p, t, CriterionCase::Infinite)?;
    match out.b.kind() {
        TailKind::Convergent(b) if b > 0.0 => Ok(1.0 / b),
        TailKind::Convergent(_) => Ok(f64::INFINITY),
        TailKind::Divergent => Ok(0.0),
        TailKind::Indeterminate => Err(EndsError::Numerical(
            "criterion sup indeterminate; no Maz'ja estimate".into(),
        )),
    }
}

// --- characteristic sequences -------------------------------------------

fn sigma(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

fn sigma_prime(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp() / (x * x)
    } else {
        0.0
    }
}

fn psi(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        sigma(x) / (sigma(x) + sigma(1.0 - x))
    }
}

fn psi_prime(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    let s = sigma(x);
    let c = sigma(1.0 - x);
    let sum = s + c;
    (sigma_prime(x) * c + s * sigma_prime(1.0 - x)) / (sum * sum)
}

/// The fixed plateau bump: supported in `(4/5, 11/5)`, equal to 1 on `[1, 2]`.
pub fn eta(y: f64) -> f64 {
    psi((y - 0.8) / 0.2) * psi((2.2 - y) / 0.2)
}

pub fn eta_prime(y: f64) -> f64 {
    let a = (y - 0.8) / 0.2;
    let b = (2.2 - y) / 0.2;
    (psi_prime(a) * psi(b) - psi(a) * psi_prime(b)) / 0.2
}

/// `(c0, c1) = (int eta^2 dy, int eta'^2 dy)`.
pub fn eta_constants() -> (f64, f64) {
    static CONSTS: OnceLock<(f64, f64)> = OnceLock::new();
    *CONSTS.get_or_init(|| {
        let c0 = adaptive_simpson(|y| Ok(eta(y) * eta(y)), 0.8, 2.2, 1e-12).unwrap();
        // eta' vanishes on the plateau and at the support ends, so integrate
        // the two ramps separately: over the full support the initial Simpson
        // samples are all zero and the refinement never starts
        let ramp = |a: f64, b: f64| {
            adaptive_simpson(|y| Ok(eta_prime(y) * eta_prime(y)), a, b, 1e-12).unwrap()
        };
        (c0, ramp(0.8, 1.0) + ramp(2.0, 2.2))
    })
}

/// String-coordinate levels `z_k`; the factor 3 keeps consecutive supports
/// `(0.8 z_k, 2.2 z_k)` disjoint and the 1.1 base keeps every quotient
/// strictly below `c1/c0`.
pub fn z_level(k: usize) -> f64 {
    1.1 * 3f64.powi(k as i32 - 1)
}

/// Overlap integral of consecutive bump profiles in the string coordinate;
/// identically zero because the supports are disjoint, and evaluated by
/// quadrature over the hull as a check.
pub fn characteristic_overlap(k: usize) -> f64 {
    let (zk, zk1) = (z_level(k), z_level(k + 1));
    adaptive_simpson(
        |z| Ok(eta(z / zk) * eta(z / zk1)),
        0.8 * zk,
        2.2 * zk1,
        1e-12,
    )
    .unwrap_or(f64::NAN)
    .abs()
}

/// Rayleigh quotient of the characteristic function
/// `f_k = sqrt(z_k) eta(z(r)/z_k)`, where `z(r) = int_0^r 1/omega_bar`.
///
/// In the string coordinate the numerator is exactly `c1` and the
/// denominator is `z_k^2 int eta(y)^2 omega_bar(r(z_k y))^2 dy`; the map
/// `r(z)` is inverted through the substitution `r = sinh(u)`, which keeps
/// the cumulative integral tame for profiles whose `r(z)` grows
/// exponentially.
pub fn characteristic_rayleigh(p: &RadialProfile, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(EndsError::Range("k starts at 1".into()));
    }
    if essential_spectrum_test(p) != Trilean::True {
        return Err(EndsError::Precondition(
            "characteristic sequences require both tail integrals divergent".into(),
        ));
    }
    let zk = z_level(k);
    let z_target = 2.2 * zk;

    // dz/du for r = sinh(u)
    let dz_du = |u: f64| -> Result<f64> {
        let r = u.sinh();
        Ok(u.cosh() * (-p.ln_evaluate(r)?).exp())
    };

    // find u_max with z(u_max) >= z_target by doubling, capped where sinh(u)
    // leaves f64 range
    const U_RANGE: f64 = 700.0;
    let mut u_max = 1.0f64;
    loop {
        let z = adaptive_simpson(&dz_du, 0.0, u_max, 1e-10)?;
        if z >= z_target {
            break;
        }
        if u_max >= U_RANGE {
            return Err(EndsError::Numerical(format!(
                "string coordinate z = {z_target} not reachable within f64 range"
            )));
        }
        u_max = (2.0 * u_max).min(U_RANGE);
    }

    // cumulative z on a fine uniform u-grid (per-cell Simpson)
    let cells = 16384usize;
    let du = u_max / cells as f64;
    let mut z_cum = Vec::with_capacity(cells + 1);
    z_cum.push(0.0);
    let mut acc = 0.0;
    let mut f_lo = dz_du(0.0)?;
    for i in 0..cells {
        let a = i as f64 * du;
        let f_mid = dz_du(a + 0.5 * du)?;
        let f_hi = dz_du(a + du)?;
        acc += du / 6.0 * (f_lo + 4.0 * f_mid + f_hi);
        z_cum.push(acc);
        f_lo = f_hi;
    }

    // invert z -> u by bracketing in the table plus local linear correction
    let u_of_z = |z: f64| -> f64 {
        let idx = z_cum.partition_point(|&v| v < z);
        if idx == 0 {
            return 0.0;
        }
        let i = (idx - 1).min(cells - 1);
        let frac = (z - z_cum[i]) / (z_cum[i + 1] - z_cum[i]).max(f64::MIN_POSITIVE);
        (i as f64 + frac.clamp(0.0, 1.0)) * du
    };

    // composite Simpson in y over the support with log-scaled weight
    let panels = 512usize;
    let (y_lo, y_hi) = (0.8, 2.2);
    let dy = (y_hi - y_lo) / panels as f64;
    let mut ln_w = Vec::with_capacity(2 * panels + 1);
    for j in 0..=2 * panels {
        let y = y_lo + 0.5 * dy * j as f64;
        let r = u_of_z(zk * y).sinh();
        ln_w.push(2.0 * p.ln_evaluate(r)?);
    }
    let peak = ln_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for jp in 0..panels {
        let e0 = eta(y_lo + dy * jp as f64);
        let em = eta(y_lo + dy * (jp as f64 + 0.5));
        let e1 = eta(y_lo + dy * (jp as f64 + 1.0));
        sum += dy / 6.0
            * (e0 * e0 * (ln_w[2 * jp] - peak).exp()
                + 4.0 * em * em * (ln_w[2 * jp + 1] - peak).exp()
                + e1 * e1 * (ln_w[2 * jp + 2] - peak).exp());
    }
    let (_, c1) = eta_constants();
    let ln_quotient = c1.ln() - 2.0 * zk.ln() - peak - sum.ln();
    Ok(ln_quotient.exp()) // underflows to 0 for violently growing densities
}

/// Rayleigh quotient of `e^{-cr/2} phi` under the exponentially perturbed
/// density, against the bound `2 lambda + c^2/2`, where `phi` is the lowest
/// truncated Dirichlet eigenfunction of the unperturbed profile on
/// `(t, t+10)`.
pub fn perturbation_check(p: &RadialProfile, c: f64, t: f64) -> Result<(f64, f64)> {
    if !(c > 0.0) {
        return Err(EndsError::Precondition(format!("need c > 0, got {c}")));
    }
    let n = 2000usize;
    let r_end = t + 10.0;
    let (diag, off) = assemble(p, t, r_end, n, false)?;
    let (lam, v) = lowest_eigpair(&diag, &off);
    // int phi^2 h_bar w dr in the discrete weights (v is unit in those
    // weights, so the sum needs no normalization)
    let dr = (r_end - t) / (n as f64 + 1.0);
    let mut h_term = 0.0;
    for (i, vi) in v.iter().enumerate() {
        let r = t + (i as f64 + 1.0) * dr;
        h_term += vi * vi * p.log_derivative(r)?;
    }
    // int (phi' - (c/2) phi)^2 w = lambda + (c/2) int phi^2 h_bar w + c^2/4,
    // using int phi phi' w = -(1/2) int phi^2 w'
    let quotient = lam + 0.5 * c * h_term + 0.25 * c * c;
    let bound = 2.0 * lam + 0.5 * c * c;
    Ok((quotient, bound))
}

/// Relative defect of the norm identity `||e^{-cr/2} phi||_{w_c} = ||phi||_w`,
/// evaluated with the exponential factors actually multiplied out.
pub fn perturbation_norm_residual(p: &RadialProfile, c: f64, t: f64) -> Result<f64> {
    let n = 2000usize;
    let r_end = t + 10.0;
    let (diag, off) = assemble(p, t, r_end, n, false)?;
    let (_, v) = lowest_eigpair(&diag, &off);
    let dr = (r_end - t) / (n as f64 + 1.0);
    let mut plain = 0.0;
    let mut perturbed = 0.0;
    for (i, vi) in v.iter().enumerate() {
        let r = t + (i as f64 + 1.0) * dr;
        plain += vi * vi;
        let damp = (-0.5 * c * r).exp();
        perturbed += (vi * damp) * (vi * damp) * (c * r).exp();
    }
    Ok((perturbed - plain).abs() / plain)
}
