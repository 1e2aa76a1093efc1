//! Radial volume profiles `omega_bar(r) > 0` on `[0, infinity)`.
//!
//! A profile is either a parsed expression in `r` or a positive sample table.
//! On top of the raw source it carries two exactly-tracked decorations: an
//! inversion flag (for `1/omega_bar`) and an exponential shift `e^{c r}`
//! (for the perturbed metric density). Tracking these outside the tree makes
//! `reciprocal` an exact involution and perturbation composition exact.

use crate::error::{EndsError, Result};
use crate::expr::{parse, Expr, Var, Vocabulary};
use crate::quad::{adaptive_simpson, window_sweep, TailValue, DEFAULT_REL_TOL};
use crate::table::{Extrapolation, Table};
use serde::Serialize;
use std::fmt;
use std::sync::Arc;

/// Positivity probe abscissae used when constructing a profile.
pub const POSITIVITY_PROBES: [f64; 5] = [0.0, 0.1, 1.0, 10.0, 100.0];

/// Finite vs infinite total volume of the end, decided by the tail integral
/// of `omega_bar` at 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VolumeClass {
    FiniteVolume,
    InfiniteVolume,
    Indeterminate,
}

#[derive(Debug, Clone)]
enum Source {
    Formula {
        expr: Expr,
        /// Structural log-derivative `(ln omega_bar)'`; evaluating it avoids
        /// the inf/inf the quotient form hits once omega_bar overflows.
        log_deriv: Expr,
    },
    Table(Table),
}

#[derive(Debug, Clone)]
pub struct RadialProfile {
    source: Arc<Source>,
    invert: bool,
    exp_shift: f64,
    /// Antiderivative of the bare source expression, when known. Only valid
    /// while the profile is neither inverted nor shifted.
    antiderivative: Option<Arc<Expr>>,
    label: String,
}

/// Log-derivative of an expression, built structurally so that it stays
/// finite where the expression itself overflows.
fn log_diff(e: &Expr) -> Expr {
    match e {
        Expr::Exp(a) => a.diff(Var::R),
        Expr::Mul(a, b) => Expr::add(log_diff(a), log_diff(b)),
        Expr::Div(a, b) => Expr::sub(log_diff(a), log_diff(b)),
        Expr::Pow(a, b) => Expr::add(
            Expr::mul(b.diff(Var::R), Expr::Log(a.clone())),
            Expr::mul((**b).clone(), log_diff(a)),
        ),
        other => Expr::div(other.diff(Var::R), other.clone()),
    }
}

impl RadialProfile {
    /// Parse a profile from the radial DSL and reject non-positive values at
    /// the probe points.
    pub fn parse(text: &str) -> Result<RadialProfile> {
        let expr = parse(text, Vocabulary::Radial)?;
        let p = RadialProfile::from_expr(expr, text.trim().to_string());
        p.check_positivity()?;
        Ok(p)
    }

    pub fn from_expr(expr: Expr, label: String) -> RadialProfile {
        let log_deriv = log_diff(&expr);
        RadialProfile {
            source: Arc::new(Source::Formula { expr, log_deriv }),
            invert: false,
            exp_shift: 0.0,
            antiderivative: None,
            label,
        }
    }

    /// Tabulated profile with exact node slopes (used when the sampled
    /// function's derivative is computable directly).
    pub fn from_table_with_slopes(
        samples: &[(f64, f64)],
        slopes: &[f64],
        extrapolation: Extrapolation,
    ) -> Result<RadialProfile> {
        let table = Table::new_with_slopes(samples, slopes, extrapolation)?;
        Ok(RadialProfile {
            source: Arc::new(Source::Table(table)),
            invert: false,
            exp_shift: 0.0,
            antiderivative: None,
            label: format!("table[{} samples]", samples.len()),
        })
    }

    /// Tabulated profile; abscissae must start at 0 and increase strictly.
    pub fn from_table(samples: &[(f64, f64)], extrapolation: Extrapolation) -> Result<RadialProfile> {
        let table = Table::new(samples, extrapolation)?;
        Ok(RadialProfile {
            source: Arc::new(Source::Table(table)),
            invert: false,
            exp_shift: 0.0,
            antiderivative: None,
            label: format!("table[{} samples]", samples.len()),
        })
    }

    /// Tabulated profile from CSV text with header `r,omega_bar`.
    pub fn from_csv_str(text: &str, extrapolation: Extrapolation) -> Result<RadialProfile> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim() == "r,omega_bar" => {}
            _ => {
                return Err(EndsError::Config(
                    "CSV profile must start with header 'r,omega_bar'".into(),
                ))
            }
        }
        let mut samples = Vec::new();
        for (i, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let (r, v) = match (fields.next(), fields.next(), fields.next()) {
                (Some(r), Some(v), None) => (r, v),
                _ => {
                    return Err(EndsError::Config(format!(
                        "CSV line {}: expected two fields",
                        i + 1
                    )))
                }
            };
            let r: f64 = r.trim().parse().map_err(|_| {
                EndsError::Config(format!("CSV line {}: bad abscissa '{r}'", i + 1))
            })?;
            let v: f64 = v.trim().parse().map_err(|_| {
                EndsError::Config(format!("CSV line {}: bad value '{v}'", i + 1))
            })?;
            samples.push((r, v));
        }
        RadialProfile::from_table(&samples, extrapolation)
    }

    pub fn with_antiderivative(mut self, anti: Expr) -> RadialProfile {
        if !self.invert && self.exp_shift == 0.0 {
            self.antiderivative = Some(Arc::new(anti));
        }
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    fn check_positivity(&self) -> Result<()> {
        for &r in &POSITIVITY_PROBES {
            match self.evaluate(r) {
                Ok(v) => {
                    if v > 0.0 {
                        continue;
                    }
                    // underflow to 0 still counts as positive when the log
                    // value is an honest finite number (e.g. e^{-r^2} at
                    // r = 100)
                    if v == 0.0 && self.ln_evaluate(r).map(|l| l.is_finite()).unwrap_or(false) {
                        continue;
                    }
                    return Err(EndsError::NonPositive { r, value: v });
                }
                Err(EndsError::Range(_)) => continue, // table shorter than probe grid
                Err(e) => return Err(e),
            }
        }
        Ok(())
    }

    /// `omega_bar(r)`.
    pub fn evaluate(&self, r: f64) -> Result<f64> {
        if r < 0.0 {
            return Err(EndsError::Range(format!("r = {r} is negative")));
        }
        let base = match &*self.source {
            Source::Formula { expr, .. } => expr.eval(r, 0.0),
            Source::Table(t) => t.eval(r)?,
        };
        if base.is_nan() {
            return Err(EndsError::Numerical(format!(
                "profile '{}' evaluated to NaN at r = {r}",
                self.label
            )));
        }
        let v = if self.invert { 1.0 / base } else { base };
        if self.exp_shift == 0.0 {
            Ok(v)
        } else {
            Ok(v * (self.exp_shift * r).exp())
        }
    }

    /// `ln omega_bar(r)`, finite wherever the log-derivative structure allows.
    pub fn ln_evaluate(&self, r: f64) -> Result<f64> {
        if r < 0.0 {
            return Err(EndsError::Range(format!("r = {r} is negative")));
        }
        let base = match &*self.source {
            Source::Formula { expr, .. } => expr.ln_eval(r, 0.0),
            Source::Table(t) => t.eval(r)?.ln(),
        };
        let signed = if self.invert { -base } else { base };
        Ok(signed + self.exp_shift * r)
    }

    /// `h_bar(r) = omega_bar'(r) / omega_bar(r)`.
    pub fn log_derivative(&self, r: f64) -> Result<f64> {
        if r < 0.0 {
            return Err(EndsError::Range(format!("r = {r} is negative")));
        }
        let base = match &*self.source {
            Source::Formula { log_deriv, .. } => log_deriv.eval(r, 0.0),
            Source::Table(t) => t.derivative(r)? / t.eval(r)?,
        };
        let signed = if self.invert { -base } else { base };
        Ok(signed + self.exp_shift)
    }

    /// Definite integral of the profile over `[a, b]` with the given relative
    /// tolerance; uses the closed-form antiderivative when one is attached.
    pub fn integral_with_tol(&self, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
        if !(0.0 <= a && a <= b) {
            return Err(EndsError::Range(format!("bad interval [{a}, {b}]")));
        }
        if let Some(anti) = &self.antiderivative {
            return Ok(anti.eval(b, 0.0) - anti.eval(a, 0.0));
        }
        adaptive_simpson(|r| self.evaluate(r), a, b, rel_tol)
    }

    pub fn integral(&self, a: f64, b: f64) -> Result<f64> {
        self.integral_with_tol(a, b, DEFAULT_REL_TOL)
    }

    /// Improper integral over `[s, infinity)` decided by the dyadic-window
    /// sweep. Indeterminate is a legitimate outcome, not an error.
    pub fn tail_integral(&self, s: f64) -> TailValue {
        window_sweep(
            |lo, hi| adaptive_simpson(|r| self.evaluate(r), lo, hi, DEFAULT_REL_TOL),
            s,
        )
    }

    /// The profile `1 / omega_bar(r)`. Exact involution.
    pub fn reciprocal(&self) -> RadialProfile {
        RadialProfile {
            source: Arc::clone(&self.source),
            invert: !self.invert,
            exp_shift: -self.exp_shift,
            antiderivative: None,
            label: if self.invert && self.exp_shift == 0.0 {
                self.label
                    .strip_prefix("1/(")
                    .and_then(|s| s.strip_suffix(')'))
                    .map(str::to_string)
                    .unwrap_or_else(|| format!("1/({})", self.label))
            } else {
                format!("1/({})", self.label)
            },
        }
    }

    /// `omega_bar_c(r) = e^{c r} omega_bar(r)` for `c > 0` (the density of
    /// the exponentially perturbed metric). The log-derivative shifts by `c`.
    pub fn perturb_exponential(&self, c: f64) -> Result<RadialProfile> {
        if !(c > 0.0) {
            return Err(EndsError::Precondition(format!(
                "perturbation constant must be positive, got {c}"
            )));
        }
        Ok(self.shifted(c))
    }

    pub(crate) fn shifted(&self, c: f64) -> RadialProfile {
        RadialProfile {
            source: Arc::clone(&self.source),
            invert: self.invert,
            exp_shift: self.exp_shift + c,
            antiderivative: None,
            label: format!("exp({c}*r)*({})", self.label),
        }
    }

    /// Finite vs infinite volume, from the tail integral at 0.
    pub fn volume_class(&self) -> VolumeClass {
        match self.tail_integral(0.0).kind() {
            crate::quad::TailKind::Convergent(_) => VolumeClass::FiniteVolume,
            crate::quad::TailKind::Divergent => VolumeClass::InfiniteVolume,
            crate::quad::TailKind::Indeterminate => VolumeClass::Indeterminate,
        }
    }
}

impl fmt::Display for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}
