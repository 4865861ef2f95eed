use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::ScenarioParams;
use crate::inner::SolverTolerances;
use crate::outer::PsoParams;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Ma,
    Fpa,
    Ts,
    Pso,
    SingleMa,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [Scheme::Ma, Scheme::Fpa, Scheme::Ts, Scheme::Pso, Scheme::SingleMa];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Ma => "ma",
            Scheme::Fpa => "fpa",
            Scheme::Ts => "ts",
            Scheme::Pso => "pso",
            Scheme::SingleMa => "single-ma",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown scheme {s:?}")))
    }
}

pub fn parse_schemes(list: &str) -> Result<Vec<Scheme>> {
    let mut out: Vec<Scheme> = Vec::new();
    for part in list.split(',').filter(|p| !p.trim().is_empty()) {
        let s: Scheme = part.parse()?;
        if !out.contains(&s) {
            out.push(s);
        }
    }
    if out.is_empty() {
        return Err(Error::Config("scheme list is empty".into()));
    }
    Ok(out)
}

/// Flat experiment configuration. Every field has a default; a config file
/// only needs the keys it changes, and unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub carrier_freq: f64,
    pub tx_power_dbm: f64,
    pub noise_dbm: f64,
    pub link_distance: f64,
    pub num_paths: usize,
    pub pathloss_exponent: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "A_over_lambda")]
    pub a_over_lambda: f64,
    #[serde(rename = "D_min_over_lambda")]
    pub d_min_over_lambda: f64,
    /// Absolute multicast requirements shared by every trial, bits/s/Hz.
    pub r_ms_grid: Vec<f64>,
    /// Extra per-trial requirements spread evenly over `[0, cap]`, where cap
    /// is `relative_cap` times the fixed-array multicast capacity.
    pub relative_points: usize,
    pub relative_cap: f64,
    pub trials: usize,
    pub seed: u64,
    pub schemes: Vec<Scheme>,
    pub max_rounds: usize,
    pub pso_particles: usize,
    pub pso_iterations: usize,
    pub pso_inertia: f64,
    pub pso_cognitive: f64,
    pub pso_social: f64,
    pub pso_penalty: f64,
    pub solver_gap_tol: f64,
    pub solver_feas_tol: f64,
    pub solver_max_iter: usize,
    pub rank_threshold: f64,
    /// Write wall-clock solve times. Off by default so outputs are reproducible byte for byte.
    pub record_timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let scenario = ScenarioParams::default();
        let pso = PsoParams::default();
        let tol = SolverTolerances::default();
        ExperimentConfig {
            carrier_freq: scenario.carrier_freq,
            tx_power_dbm: scenario.tx_power_dbm,
            noise_dbm: scenario.noise_dbm,
            link_distance: scenario.link_distance,
            num_paths: scenario.num_paths,
            pathloss_exponent: scenario.pathloss_exponent,
            n: 4,
            m: 20,
            a_over_lambda: 8.0,
            d_min_over_lambda: 0.5,
            r_ms_grid: (0..=8).map(f64::from).collect(),
            relative_points: 12,
            relative_cap: 0.98,
            trials: 100,
            seed: 1,
            schemes: vec![Scheme::Ma, Scheme::Fpa, Scheme::Ts],
            max_rounds: 5,
            pso_particles: pso.particles,
            pso_iterations: pso.iterations,
            pso_inertia: pso.inertia,
            pso_cognitive: pso.cognitive,
            pso_social: pso.social,
            pso_penalty: pso.penalty,
            solver_gap_tol: tol.gap,
            solver_feas_tol: tol.feasibility,
            solver_max_iter: tol.max_iter,
            rank_threshold: tol.rank_threshold,
            record_timing: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config fields serialize")
    }

    pub fn scenario(&self) -> ScenarioParams {
        ScenarioParams {
            carrier_freq: self.carrier_freq,
            tx_power_dbm: self.tx_power_dbm,
            noise_dbm: self.noise_dbm,
            num_paths: self.num_paths,
            pathloss_exponent: self.pathloss_exponent,
            link_distance: self.link_distance,
        }
    }

    pub fn wavelength(&self) -> f64 {
        self.scenario().wavelength()
    }

    pub fn region_size(&self) -> f64 {
        self.a_over_lambda * self.wavelength()
    }

    pub fn d_min(&self) -> f64 {
        self.d_min_over_lambda * self.wavelength()
    }

    pub fn pso(&self) -> PsoParams {
        PsoParams {
            particles: self.pso_particles,
            iterations: self.pso_iterations,
            inertia: self.pso_inertia,
            cognitive: self.pso_cognitive,
            social: self.pso_social,
            penalty: self.pso_penalty,
        }
    }

    pub fn tolerances(&self) -> SolverTolerances {
        SolverTolerances {
            gap: self.solver_gap_tol,
            feasibility: self.solver_feas_tol,
            max_iter: self.solver_max_iter,
            rank_threshold: self.rank_threshold,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario().validate()?;
        self.pso().validate()?;
        let bad = |msg: &str| Err(Error::Config(msg.into()));
        if self.n == 0 {
            return bad("N must be at least 1");
        }
        if self.m == 0 {
            return bad("M must be at least 1");
        }
        if !(self.a_over_lambda > 0.0 && self.a_over_lambda.is_finite()) {
            return bad("A_over_lambda must be positive");
        }
        if !(self.d_min_over_lambda >= 0.0 && self.d_min_over_lambda.is_finite()) {
            return bad("D_min_over_lambda must be nonnegative");
        }
        if self.r_ms_grid.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
            return bad("r_ms_grid entries must be finite and nonnegative");
        }
        if self.r_ms_grid.windows(2).any(|w| w[1] <= w[0]) {
            return bad("r_ms_grid must be strictly increasing");
        }
        if !(self.relative_cap > 0.0 && self.relative_cap <= 1.0) {
            return bad("relative_cap must lie in (0, 1]");
        }
        if self.schemes.is_empty() {
            return bad("at least one scheme is required");
        }
        if !(self.solver_gap_tol > 0.0 && self.solver_feas_tol > 0.0 && self.solver_max_iter > 0) {
            return bad("solver tolerances must be positive");
        }
        Ok(())
    }

    /// SHA-256 of the canonical TOML form.
    pub fn content_hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
