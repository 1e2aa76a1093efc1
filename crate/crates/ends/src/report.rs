//! Report assembly: the full per-end pipeline and the machine-readable
//! manifold report. Consistency flags are recomputed from the embedded
//! traces at serialization time, never cached.

use crate::config::{Config, ResolvedEnd};
use crate::criteria::{
    classify_discreteness_simplified_with, classify_discreteness_with, lambda0_lower_bound,
    t_grid, CriterionTrace, Thresholds, Verdict,
};
use crate::endmodel::CurvatureReport;
use crate::error::Result;
use crate::profile::{RadialProfile, VolumeClass};
use crate::quad::TailValue;
use crate::spectrum::{
    dirichlet_lambda0, mazja_estimate, rayleigh_upper_finite, rayleigh_upper_infinite,
    CurvePoint, R_CAP,
};
use crate::stochastic::{completeness_verdict, Completeness};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Default `t`-grid of the spectral cross-checks (the criterion sweep keeps
/// its own, longer grid).
pub fn spectral_t_grid() -> Vec<f64> {
    vec![1.0, 2.0, 4.0, 8.0]
}

#[derive(Debug, Clone, Serialize)]
pub struct CurveRow {
    pub t: f64,
    pub point: Option<CurvePoint>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsRow {
    pub t: f64,
    /// Certified `1/(8 B(t))` bound (zero when unavailable).
    pub lower: f64,
    /// Converged Dirichlet estimate (Richardson), when the solver resolved it.
    pub dirichlet: Option<f64>,
    /// Best variational upper bound over the `(s, s0)` probe grid.
    pub upper: Option<f64>,
    pub upper_probe: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MazjaRow {
    pub t: f64,
    pub estimate: Option<f64>,
    pub error: Option<String>,
}

/// Completeness outcome with the traces reduced to what the verdict used:
/// the Feller window sweep in full, the ODE trace as its endpoint summary.
#[derive(Debug, Clone, Serialize)]
pub struct CompletenessSummary {
    pub verdict: Completeness,
    pub feller: TailValue,
    pub ode_diverging: Option<bool>,
    pub ode_r_end: Option<f64>,
    pub ode_u_end: Option<f64>,
    pub ode_integral_residual: Option<f64>,
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyFlags {
    /// Sweep verdict equals the simplified-product verdict.
    pub theorem_corollary_agree: bool,
    /// `lower <= 1.05 dirichlet <= 1.05^2 upper` on every decidable row.
    pub sandwich_ok: Option<bool>,
    /// Not simultaneously not-discrete and stochastically incomplete.
    pub completeness_consistent: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EndReport {
    pub label: String,
    pub volume_class: VolumeClass,
    pub criterion: CriterionTrace,
    pub simplified: CriterionTrace,
    pub curve: Vec<CurveRow>,
    pub bounds: Vec<BoundsRow>,
    pub mazja: Vec<MazjaRow>,
    pub completeness: CompletenessSummary,
    pub curvature: Option<CurvatureReport>,
    /// Curvature constant used for the lower bounds.
    pub c: f64,
}

impl EndReport {
    pub fn verdict(&self) -> Verdict {
        self.criterion.verdict
    }

    /// Recomputed from the embedded traces.
    pub fn consistency(&self) -> ConsistencyFlags {
        let sandwich: Vec<bool> = self
            .bounds
            .iter()
            .filter_map(|row| {
                let d = row.dirichlet?;
                let upper_ok = row.upper.map_or(true, |u| d <= 1.05 * u);
                Some(row.lower <= 1.05 * d && upper_ok)
            })
            .collect();
        ConsistencyFlags {
            theorem_corollary_agree: self.criterion.verdict == self.simplified.verdict,
            sandwich_ok: if sandwich.is_empty() { None } else { Some(sandwich.iter().all(|&b| b)) },
            completeness_consistent: !(self.criterion.verdict == Verdict::NotDiscrete
                && self.completeness.verdict == Completeness::Incomplete),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifoldReport {
    pub version: String,
    pub config_digest: String,
    pub ends: Vec<EndReport>,
    pub overall: Verdict,
}

impl ManifoldReport {
    /// Spectrum is discrete iff it is discrete on every end; a failed end
    /// decides, otherwise inconclusiveness propagates.
    pub fn combine(verdicts: &[Verdict]) -> Verdict {
        if verdicts.iter().any(|v| *v == Verdict::NotDiscrete) {
            Verdict::NotDiscrete
        } else if verdicts.iter().any(|v| *v == Verdict::Inconclusive) {
            Verdict::Inconclusive
        } else {
            Verdict::Discrete
        }
    }

    pub fn any_inconclusive(&self) -> bool {
        self.ends.iter().any(|e| e.verdict() == Verdict::Inconclusive)
    }

    /// JSON with the consistency flags attached per end, recomputed now.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct EndWithFlags<'a> {
            #[serde(flatten)]
            report: &'a EndReport,
            consistency: ConsistencyFlags,
        }
        #[derive(Serialize)]
        struct Doc<'a> {
            version: &'a str,
            config_digest: &'a str,
            ends: Vec<EndWithFlags<'a>>,
            overall: Verdict,
        }
        let doc = Doc {
            version: &self.version,
            config_digest: &self.config_digest,
            ends: self
                .ends
                .iter()
                .map(|e| EndWithFlags { report: e, consistency: e.consistency() })
                .collect(),
            overall: self.overall,
        };
        serde_json::to_string_pretty(&doc).expect("report serialization cannot fail")
    }
}

pub fn config_digest(config_text: &str) -> String {
    let mut h = Sha256::new();
    h.update(config_text.as_bytes());
    format!("{:x}", h.finalize())
}

fn thresholds(cfg: &Config) -> Thresholds {
    let mut thr = Thresholds::default();
    if let Some(v) = cfg.run.eps_disc {
        thr.eps_disc = v;
    }
    if let Some(v) = cfg.run.eps_ess {
        thr.eps_ess = v;
    }
    thr
}

/// Probe offsets of the variational `(s, s0)` grid: `s = t + off_i`,
/// `s0 = s + off_j`.
const PROBE_OFFSETS: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

/// Best (smallest) variational upper bound at `t` over the probe grid;
/// probes that error are skipped.
pub fn best_upper_bound(p: &RadialProfile, t: f64) -> Option<(f64, (f64, f64))> {
    let finite = p.volume_class() == VolumeClass::FiniteVolume;
    let mut best: Option<(f64, (f64, f64))> = None;
    for ds in PROBE_OFFSETS {
        let s = t + ds;
        for ds0 in PROBE_OFFSETS {
            let s0 = s + ds0;
            let b = if finite {
                rayleigh_upper_finite(p, t, s, s0)
            } else {
                rayleigh_upper_infinite(p, t, s, s0)
            };
            if let Ok(v) = b {
                if v.is_finite() && best.map_or(true, |(bv, _)| v < bv) {
                    best = Some((v, (s, s0)));
                }
            }
        }
        if !finite {
            if let Ok(v) = rayleigh_upper_infinite(p, t, s, f64::INFINITY) {
                if v.is_finite() && best.map_or(true, |(bv, _)| v < bv) {
                    best = Some((v, (s, f64::INFINITY)));
                }
            }
        }
    }
    best
}

/// Dirichlet estimate at `t` with truncation doubled to convergence; `None`
/// with the failure text when the profile cannot be resolved at any radius.
pub fn converged_dirichlet(p: &RadialProfile, t: f64, n: usize) -> CurveRow {
    let mut r_end = t + 8.0;
    let mut current = match dirichlet_lambda0(p, t, r_end, n) {
        Ok(est) => est,
        Err(e) => return CurveRow { t, point: None, error: Some(e.to_string()) },
    };
    let mut converged = false;
    while 2.0 * (r_end - t) + t <= R_CAP.max(t + 8.0) {
        let next_r = t + 2.0 * (r_end - t);
        match dirichlet_lambda0(p, t, next_r, n) {
            Ok(next) => {
                let change =
                    (next.lambda - current.lambda).abs() / current.lambda.abs().max(1e-300);
                // enlarging the domain cannot raise the Dirichlet bottom; a
                // rise means the fixed node count no longer resolves the
                // well, so the previous truncation is the better estimate
                if next.lambda > 1.01 * current.lambda && change >= 0.01 {
                    converged = true;
                    break;
                }
                current = next;
                r_end = next_r;
                if change < 0.01 {
                    converged = true;
                    break;
                }
            }
            Err(_) => break, // keep the last resolvable truncation
        }
    }
    CurveRow {
        t,
        point: Some(CurvePoint { estimate: current, truncation_converged: converged, mu0: None }),
        error: None,
    }
}

/// Full pipeline for one resolved end.
pub fn analyze_end(end: &ResolvedEnd, cfg: &Config) -> Result<EndReport> {
    let p = &end.profile;
    let thr = thresholds(cfg);
    let sweep_grid = cfg.run.t_grid.clone().unwrap_or_else(t_grid);
    let spec_grid = cfg.run.spectral_t_grid.clone().unwrap_or_else(spectral_t_grid);

    let criterion = classify_discreteness_with(p, thr, &sweep_grid)?;
    let simplified = classify_discreteness_simplified_with(p, thr, &sweep_grid)?;

    let curvature = match &end.end2d {
        Some(e2) => Some(e2.curvature_deviation()?),
        None => None,
    };
    let c = end
        .c
        .or_else(|| curvature.as_ref().map(|cr| cr.c_estimate))
        .unwrap_or(0.0);

    let mut curve = Vec::new();
    let mut bounds = Vec::new();
    let mut mazja = Vec::new();
    for &t in &spec_grid {
        let row = converged_dirichlet(p, t, cfg.run.n);
        let dirichlet = row.point.as_ref().map(|pt| pt.estimate.richardson);
        curve.push(row);
        let upper = best_upper_bound(p, t);
        bounds.push(BoundsRow {
            t,
            lower: lambda0_lower_bound(p, t, c)?,
            dirichlet,
            upper: upper.map(|(v, _)| v),
            upper_probe: upper.map(|(_, pr)| pr),
        });
        match mazja_estimate(p, t) {
            Ok(m) => mazja.push(MazjaRow { t, estimate: Some(m), error: None }),
            Err(e) => mazja.push(MazjaRow { t, estimate: None, error: Some(e.to_string()) }),
        }
    }

    let cv = completeness_verdict(p);
    let completeness = CompletenessSummary {
        verdict: cv.verdict,
        feller: cv.feller,
        ode_diverging: cv.u_trace.as_ref().map(|tr| tr.diverging),
        ode_r_end: cv.u_trace.as_ref().and_then(|tr| tr.r.last().copied()),
        ode_u_end: cv.u_trace.as_ref().and_then(|tr| tr.u.last().copied()),
        ode_integral_residual: cv.u_trace.as_ref().map(|tr| tr.integral_residual),
        diagnostic: cv.diagnostic,
    };

    Ok(EndReport {
        label: end.label.clone(),
        volume_class: p.volume_class(),
        criterion,
        simplified,
        curve,
        bounds,
        mazja,
        completeness,
        curvature,
        c,
    })
}

/// Classify every end (in parallel) and assemble the manifold report in
/// config order.
pub fn run_classify(cfg: &Config, config_text: &str, base: &std::path::Path) -> Result<ManifoldReport> {
    use rayon::prelude::*;
    let ends = cfg.resolve(base)?;
    let reports: Result<Vec<EndReport>> =
        ends.par_iter().map(|e| analyze_end(e, cfg)).collect();
    let reports = reports?;
    let overall = ManifoldReport::combine(
        &reports.iter().map(|r| r.verdict()).collect::<Vec<_>>(),
    );
    Ok(ManifoldReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_digest: config_digest(config_text),
        ends: reports,
        overall,
    })
}
