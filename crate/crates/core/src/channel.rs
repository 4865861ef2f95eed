//! Field-response channel model for a base station with movable antennas.
//!
//! A user's channel is the gain-weighted superposition of per-path array
//! responses, where each path departs at an (elevation, azimuth) pair and the
//! per-antenna phase is `(2π/λ)(x sinθ cosφ + y cosθ)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::linalg::{CVec, ZERO};

pub const SPEED_OF_LIGHT: f64 = 3.0e8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position2D {
    pub x: f64,
    pub y: f64,
}

impl Position2D {
    pub const ORIGIN: Position2D = Position2D { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Position2D { x, y }
    }

    pub fn distance(&self, other: &Position2D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Antenna position vector: the ordered positions of all transmit antennas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Apv {
    pub positions: Vec<Position2D>,
}

/// Relative slack used when comparing pairwise distances against `D_min`, so
/// that placements at exactly the minimum spacing are accepted.
pub const SPACING_RTOL: f64 = 1e-9;

impl Apv {
    pub fn new(positions: Vec<Position2D>) -> Self {
        Apv { positions }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn min_pairwise_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.positions.iter().enumerate() {
            for b in &self.positions[i + 1..] {
                best = best.min(a.distance(b));
            }
        }
        best
    }

    pub fn satisfies_spacing(&self, d_min: f64) -> bool {
        self.min_pairwise_distance() >= d_min * (1.0 - SPACING_RTOL)
    }

    /// Every position inside `[-A/2, A/2]²`.
    pub fn inside_region(&self, region_size: f64) -> bool {
        let half = region_size / 2.0 * (1.0 + SPACING_RTOL);
        self.positions
            .iter()
            .all(|p| p.x.abs() <= half && p.y.abs() <= half)
    }

    pub fn is_feasible(&self, region_size: f64, d_min: f64) -> bool {
        self.inside_region(region_size) && self.satisfies_spacing(d_min)
    }

    /// `[[x1, y1], [x2, y2], ...]`
    pub fn to_json(&self) -> String {
        let coords: Vec<[f64; 2]> = self.positions.iter().map(|p| [p.x, p.y]).collect();
        serde_json::to_string(&coords).expect("finite coordinates serialize")
    }

    pub fn from_json(s: &str) -> crate::Result<Self> {
        let coords: Vec<[f64; 2]> = serde_json::from_str(s)?;
        Ok(Apv::new(
            coords.into_iter().map(|[x, y]| Position2D::new(x, y)).collect(),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    pub elevation: f64,
    pub azimuth: f64,
    pub gain: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserChannel {
    pub paths: Vec<PathSpec>,
}

impl UserChannel {
    /// Single line-of-sight path.
    pub fn los(elevation: f64, azimuth: f64, gain: Complex64) -> Self {
        UserChannel {
            paths: vec![PathSpec {
                elevation,
                azimuth,
                gain,
            }],
        }
    }

    /// Channel coefficient seen by one antenna at `pos`.
    pub fn entry(&self, pos: &Position2D, wavelength: f64) -> Complex64 {
        self.paths
            .iter()
            .map(|p| p.gain * Complex64::cis(phase(pos, p.elevation, p.azimuth, wavelength)))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    pub user1: UserChannel,
    pub user2: UserChannel,
    pub noise_power: f64,
    pub wavelength: f64,
}

impl ChannelRealization {
    pub fn channels(&self, apv: &Apv) -> (CVec, CVec) {
        (
            channel_vector(apv, &self.user1, self.wavelength),
            channel_vector(apv, &self.user2, self.wavelength),
        )
    }

    /// Per-antenna coefficients for both users at one position.
    pub fn entries(&self, pos: &Position2D) -> (Complex64, Complex64) {
        (
            self.user1.entry(pos, self.wavelength),
            self.user2.entry(pos, self.wavelength),
        )
    }
}

/// Scenario constants for random channel generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub carrier_freq: f64,
    pub tx_power_dbm: f64,
    pub noise_dbm: f64,
    pub num_paths: usize,
    pub pathloss_exponent: f64,
    pub link_distance: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            carrier_freq: 5e9,
            tx_power_dbm: 41.0,
            noise_dbm: -80.0,
            num_paths: 7,
            pathloss_exponent: 2.8,
            link_distance: 70.0,
        }
    }
}

impl ScenarioParams {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }

    /// Path loss at the 1 m reference distance, `(λ/4π)²`.
    pub fn ref_gain(&self) -> f64 {
        (self.wavelength() / (4.0 * PI)).powi(2)
    }

    /// Variance of each path gain, `ρ d^-α / L`.
    pub fn path_gain_variance(&self) -> f64 {
        self.ref_gain() * self.link_distance.powf(-self.pathloss_exponent) / self.num_paths as f64
    }

    pub fn tx_power(&self) -> f64 {
        dbm_to_watts(self.tx_power_dbm)
    }

    pub fn noise_power(&self) -> f64 {
        dbm_to_watts(self.noise_dbm)
    }

    pub fn validate(&self) -> crate::Result<()> {
        let ok = self.carrier_freq > 0.0
            && self.num_paths >= 1
            && self.pathloss_exponent > 0.0
            && self.link_distance > 0.0
            && self.tx_power_dbm.is_finite()
            && self.noise_dbm.is_finite();
        if ok {
            Ok(())
        } else {
            Err(crate::Error::Config(format!("invalid scenario parameters: {self:?}")))
        }
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

#[inline]
fn phase(pos: &Position2D, elevation: f64, azimuth: f64, wavelength: f64) -> f64 {
    2.0 * PI / wavelength
        * (pos.x * elevation.sin() * azimuth.cos() + pos.y * elevation.cos())
}

/// Transmit array response `[e^{jρ(t_1)}, ..., e^{jρ(t_N)}]`.
pub fn array_response(apv: &Apv, elevation: f64, azimuth: f64, wavelength: f64) -> CVec {
    CVec::from_iterator(
        apv.len(),
        apv.positions
            .iter()
            .map(|p| Complex64::cis(phase(p, elevation, azimuth, wavelength))),
    )
}

/// `h = Σ_p β_p a(T, θ_p, φ_p)`
pub fn channel_vector(apv: &Apv, user: &UserChannel, wavelength: f64) -> CVec {
    let mut h = CVec::from_element(apv.len(), ZERO);
    for path in &user.paths {
        h += array_response(apv, path.elevation, path.azimuth, wavelength) * path.gain;
    }
    h
}

/// Draws one realization. Each user gets its own ChaCha substream derived
/// from `(seed, stream)`, so realizations are independent of call order.
pub fn sample_channel(params: &ScenarioParams, seed: u64, stream: u64) -> ChannelRealization {
    let variance = params.path_gain_variance();
    let draw_user = |user: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream.wrapping_mul(2).wrapping_add(user));
        let paths = (0..params.num_paths)
            .map(|_| {
                let elevation = rng.random_range(0.0..=PI);
                let azimuth = rng.random_range(0.0..=PI);
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                let gain = Complex64::new(re, im) * (variance / 2.0).sqrt();
                PathSpec {
                    elevation,
                    azimuth,
                    gain,
                }
            })
            .collect();
        UserChannel { paths }
    };
    ChannelRealization {
        user1: draw_user(0),
        user2: draw_user(1),
        noise_power: params.noise_power(),
        wavelength: params.wavelength(),
    }
}
