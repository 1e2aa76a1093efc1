//! Run configuration: one TOML file per run, one `[[end]]` section per end.
//!
//! ```toml
//! [run]
//! seed = 42
//! t_grid = [1.0, 2.0, 4.0]
//!
//! [[end]]
//! label = "gaussian"
//! profile = "exp(-r^2)"
//!
//! [[end]]
//! label = "wobbly"
//! omega = "exp(-r^2) * (1 + 0.3*cos(theta))"
//! r_model = 8.0
//! ```

use crate::endmodel::End2D;
use crate::error::{EndsError, Result};
use crate::profile::RadialProfile;
use crate::table::Extrapolation;
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub run: RunSettings,
    #[serde(rename = "end", default)]
    pub ends: Vec<EndConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSettings {
    /// Master seed for everything randomized (Monte Carlo, test functions).
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Sweep grid for the discreteness criterion; dyadic 1..4096 by default.
    pub t_grid: Option<Vec<f64>>,
    /// Grid for the eigenvalue curve and the bounds table.
    pub spectral_t_grid: Option<Vec<f64>>,
    /// Interior nodes of the truncated eigensolver.
    #[serde(default = "default_n")]
    pub n: usize,
    /// `B(t_max)` below this (decreasing) reads as discrete.
    pub eps_disc: Option<f64>,
    /// `B(t_max)` at or above this (non-decreasing) reads as not discrete.
    pub eps_ess: Option<f64>,
    #[serde(default = "default_mc_paths")]
    pub mc_paths: usize,
    #[serde(default = "default_mc_horizon")]
    pub mc_horizon: f64,
    #[serde(default = "default_mc_barrier")]
    pub mc_barrier: f64,
}

fn default_seed() -> u64 {
    42
}
fn default_n() -> usize {
    500
}
fn default_mc_paths() -> usize {
    1000
}
fn default_mc_horizon() -> f64 {
    10.0
}
fn default_mc_barrier() -> f64 {
    50.0
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            seed: default_seed(),
            t_grid: None,
            spectral_t_grid: None,
            n: default_n(),
            eps_disc: None,
            eps_ess: None,
            mc_paths: default_mc_paths(),
            mc_horizon: default_mc_horizon(),
            mc_barrier: default_mc_barrier(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndConfig {
    pub label: Option<String>,
    /// Radial density as a DSL expression in `r`.
    pub profile: Option<String>,
    /// Radial density as a CSV file with header `r,omega_bar`.
    pub csv: Option<PathBuf>,
    /// Full 2D density as an expression in `r` and `theta`; the radial
    /// profile is obtained by reduction.
    pub omega: Option<String>,
    /// Curvature-deviation constant; estimated from the 2D model if absent.
    pub c: Option<f64>,
    #[serde(default = "default_r_model")]
    pub r_model: f64,
    #[serde(default = "default_grid")]
    pub n_r: usize,
    #[serde(default = "default_grid")]
    pub n_theta: usize,
}

fn default_r_model() -> f64 {
    8.0
}
fn default_grid() -> usize {
    64
}

/// An end resolved against the filesystem: the working profile plus the 2D
/// model when one was configured.
pub struct ResolvedEnd {
    pub label: String,
    pub profile: RadialProfile,
    pub end2d: Option<End2D>,
    pub c: Option<f64>,
}

impl Config {
    pub fn from_str(text: &str) -> Result<Config> {
        let cfg: Config =
            toml::from_str(text).map_err(|e| EndsError::Config(e.to_string()))?;
        if cfg.ends.is_empty() {
            return Err(EndsError::Config("config declares no [[end]] sections".into()));
        }
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)?;
        Config::from_str(&text)
    }

    /// Build the working objects for each end. `base` anchors relative CSV
    /// paths (normally the config file's directory).
    pub fn resolve(&self, base: &Path) -> Result<Vec<ResolvedEnd>> {
        self.ends
            .iter()
            .enumerate()
            .map(|(i, e)| e.resolve(base, i))
            .collect()
    }
}

impl EndConfig {
    fn resolve(&self, base: &Path, index: usize) -> Result<ResolvedEnd> {
        let sources =
            self.profile.is_some() as u8 + self.csv.is_some() as u8 + self.omega.is_some() as u8;
        if sources != 1 {
            return Err(EndsError::Config(format!(
                "end #{}: specify exactly one of 'profile', 'csv', 'omega'",
                index + 1
            )));
        }
        let (profile, end2d) = if let Some(text) = &self.profile {
            (RadialProfile::parse(text)?, None)
        } else if let Some(rel) = &self.csv {
            let path = if rel.is_absolute() { rel.clone() } else { base.join(rel) };
            let text = std::fs::read_to_string(&path)?;
            (RadialProfile::from_csv_str(&text, Extrapolation::LogLinear)?, None)
        } else {
            let omega = self.omega.as_deref().unwrap();
            let end = End2D::new(omega, self.r_model, self.n_r, self.n_theta)?;
            (end.reduce_profile()?, Some(end))
        };
        let label = self
            .label
            .clone()
            .unwrap_or_else(|| format!("end-{}: {}", index + 1, profile.label()));
        Ok(ResolvedEnd { label, profile, end2d, c: self.c })
    }
}
