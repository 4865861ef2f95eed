//! Rate pairs, single-antenna closed forms, time sharing, and the two
//! single-purpose beamforming optima (secrecy only, multicast only).

use nalgebra::Cholesky;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelRealization, Position2D};
use crate::linalg::{abs2_inner, eigh_desc, ensure_same_len, outer, CMat, CVec, ONE, ZERO};
use crate::outer::SamplingGrid;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingSolution {
    /// multicast beamformer
    pub w0: CVec,
    /// confidential beamformer
    pub wc: CVec,
}

impl BeamformingSolution {
    pub fn total_power(&self) -> f64 {
        self.w0.norm_squared() + self.wc.norm_squared()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePair {
    pub multicast_rate: f64,
    pub secrecy_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSplit {
    pub p0: f64,
    pub pc: f64,
}

/// `τ = 2^r - 1`
pub fn tau(r_ms: f64) -> f64 {
    r_ms.exp2() - 1.0
}

/// Raw secrecy rate `log2((σ² + |h1ᴴwc|²) / (σ² + |h2ᴴwc|²))`; may be negative.
pub fn secrecy_rate(h1: &CVec, h2: &CVec, wc: &CVec, noise: f64) -> Result<f64> {
    ensure_same_len(h1, h2)?;
    ensure_same_len(h1, wc)?;
    Ok((noise + abs2_inner(h1, wc)).log2() - (noise + abs2_inner(h2, wc)).log2())
}

/// Common-message rate with the confidential signal treated as interference,
/// minimised over both users.
pub fn multicast_rate(h1: &CVec, h2: &CVec, w0: &CVec, wc: &CVec, noise: f64) -> Result<f64> {
    ensure_same_len(h1, h2)?;
    ensure_same_len(h1, w0)?;
    ensure_same_len(h1, wc)?;
    let user = |h: &CVec| (1.0 + abs2_inner(h, w0) / (noise + abs2_inner(h, wc))).log2();
    Ok(user(h1).min(user(h2)))
}

/// Nonnegative rate pair as reported on a region boundary.
pub fn rate_pair(h1: &CVec, h2: &CVec, bf: &BeamformingSolution, noise: f64) -> Result<RatePair> {
    Ok(RatePair {
        multicast_rate: multicast_rate(h1, h2, &bf.w0, &bf.wc, noise)?.max(0.0),
        secrecy_rate: secrecy_rate(h1, h2, &bf.wc, noise)?.max(0.0),
    })
}

fn check_scalar_inputs(h2: Complex64, power: f64, noise: f64) -> Result<()> {
    if h2.norm_sqr() == 0.0 {
        return Err(Error::DegenerateChannel("eavesdropper channel is zero".into()));
    }
    if !(power > 0.0 && noise > 0.0) {
        return Err(Error::Config("power and noise must be positive".into()));
    }
    Ok(())
}

/// Power split that meets the multicast requirement with equality at the
/// weaker user and gives the rest to the confidential message.
pub fn single_ma_power_allocation(
    h1: Complex64,
    h2: Complex64,
    power: f64,
    r_ms: f64,
    noise: f64,
) -> Result<PowerSplit> {
    let _ = h1;
    check_scalar_inputs(h2, power, noise)?;
    let t = tau(r_ms);
    let g2 = h2.norm_sqr();
    let p0 = t * (power * g2 + noise) / ((t + 1.0) * g2);
    if p0 > power * (1.0 + 1e-12) {
        return Err(Error::Infeasible(format!(
            "multicast requirement {r_ms} bits/s/Hz exceeds single-antenna capacity"
        )));
    }
    let p0 = p0.min(power);
    Ok(PowerSplit {
        p0,
        pc: power - p0,
    })
}

/// Maximum secrecy rate of a single antenna at a fixed position.
pub fn single_ma_secrecy_rate(
    h1: Complex64,
    h2: Complex64,
    power: f64,
    r_ms: f64,
    noise: f64,
) -> Result<f64> {
    single_ma_power_allocation(h1, h2, power, r_ms, noise)?;
    let t = tau(r_ms);
    let g1 = h1.norm_sqr();
    let g2 = h2.norm_sqr();
    let a = (t + 1.0) * noise * g2;
    Ok(((a + (power * g2 - t * noise) * g1) / ((noise + power * g2) * g2)).log2())
}

/// Exhaustive search of the single-antenna position over `grid`. Points where
/// user 2 sees the stronger channel are skipped.
pub fn single_ma_position_search(
    channel: &ChannelRealization,
    grid: &SamplingGrid,
    power: f64,
    r_ms: f64,
) -> Result<(Position2D, f64)> {
    let mut best: Option<(Position2D, f64)> = None;
    for p in &grid.points {
        let (h1, h2) = channel.entries(p);
        if h1.norm_sqr() < h2.norm_sqr() {
            continue;
        }
        let Ok(rate) = single_ma_secrecy_rate(h1, h2, power, r_ms, channel.noise_power) else {
            continue;
        };
        if best.is_none_or(|(_, b)| rate > b) {
            best = Some((*p, rate));
        }
    }
    best.ok_or_else(|| Error::Infeasible("no grid point supports the multicast requirement".into()))
}

/// Per-slot rates used by time sharing: each slot runs at full power with its
/// own best transmission.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotRates {
    pub secrecy: f64,
    pub multicast: f64,
}

impl SlotRates {
    /// Single antenna at a fixed position.
    pub fn single_antenna(h1: Complex64, h2: Complex64, power: f64, noise: f64) -> Self {
        let g1 = h1.norm_sqr();
        let g2 = h2.norm_sqr();
        SlotRates {
            secrecy: ((noise + power * g1) / (noise + power * g2)).log2().max(0.0),
            multicast: (1.0 + power * g1.min(g2) / noise).log2(),
        }
    }

    /// Multi-antenna slots at a fixed placement.
    pub fn fixed_array(h1: &CVec, h2: &CVec, power: f64, noise: f64) -> Result<Self> {
        ensure_same_len(h1, h2)?;
        let (_, secrecy) = secrecy_only_optimal(h1, h2, power, noise);
        let (_, cap) = two_user_max_min(&scale(h1, power, noise), &scale(h2, power, noise));
        Ok(SlotRates {
            secrecy,
            multicast: (1.0 + cap).log2(),
        })
    }

    /// Rate pair at time fraction `alpha` given to the secrecy slot.
    pub fn pair(&self, alpha: f64) -> RatePair {
        RatePair {
            secrecy_rate: alpha * self.secrecy,
            multicast_rate: (1.0 - alpha) * self.multicast,
        }
    }

    /// Best secrecy rate while meeting `r_ms`, `None` above the multicast slot rate.
    pub fn secrecy_at(&self, r_ms: f64) -> Option<f64> {
        if r_ms > self.multicast * (1.0 + 1e-12) {
            return None;
        }
        if self.multicast <= 0.0 {
            return Some(self.secrecy);
        }
        Some((1.0 - r_ms / self.multicast).max(0.0) * self.secrecy)
    }
}

pub fn default_alpha_grid() -> Vec<f64> {
    (0..=100).map(|i| i as f64 / 100.0).collect()
}

/// How the antenna placement is chosen for each time-sharing slot.
#[derive(Debug, Clone)]
pub enum TsApvMode {
    /// Single antenna at one position for both slots.
    SingleFixed(Position2D),
    /// Single movable antenna, repositioned per slot over the grid.
    SinglePerSlot(SamplingGrid),
    /// Multi-antenna array shared by both slots.
    Shared(crate::channel::Apv),
    /// Multi-antenna array re-optimised per slot by sequential search.
    PerSlot(crate::outer::SearchSettings, crate::channel::Apv),
}

/// Union of time-sharing rate pairs over `alpha_grid`.
pub fn time_sharing_region(
    channel: &ChannelRealization,
    mode: &TsApvMode,
    power: f64,
    alpha_grid: &[f64],
) -> Result<Vec<RatePair>> {
    if alpha_grid.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return Err(Error::Config("time-sharing fractions must lie in [0, 1]".into()));
    }
    let slots = time_sharing_slots(channel, mode, power)?;
    Ok(alpha_grid.iter().map(|&a| slots.pair(a)).collect())
}

pub fn time_sharing_slots(
    channel: &ChannelRealization,
    mode: &TsApvMode,
    power: f64,
) -> Result<SlotRates> {
    let noise = channel.noise_power;
    match mode {
        TsApvMode::SingleFixed(p) => {
            let (h1, h2) = channel.entries(p);
            Ok(SlotRates::single_antenna(h1, h2, power, noise))
        }
        TsApvMode::SinglePerSlot(grid) => {
            let mut best = SlotRates {
                secrecy: 0.0,
                multicast: 0.0,
            };
            for p in &grid.points {
                let (h1, h2) = channel.entries(p);
                let s = SlotRates::single_antenna(h1, h2, power, noise);
                best.secrecy = best.secrecy.max(s.secrecy);
                best.multicast = best.multicast.max(s.multicast);
            }
            Ok(best)
        }
        TsApvMode::Shared(apv) => {
            let (h1, h2) = channel.channels(apv);
            SlotRates::fixed_array(&h1, &h2, power, noise)
        }
        TsApvMode::PerSlot(settings, initial) => {
            crate::outer::time_sharing_slots_per_slot(channel, power, settings, initial).map(|t| t.slots)
        }
    }
}

/// Normalised channel `h √P / σ`, under which all SNR terms become `|gᴴu|²`
/// for a unit-norm direction `u` at full power.
pub fn scale(h: &CVec, power: f64, noise: f64) -> CVec {
    h * Complex64::new((power / noise).sqrt(), 0.0)
}

/// Largest value of `(1 + |g1ᴴu|²) / (1 + |g2ᴴu|²)` over unit `u`, with its
/// maximiser. Solved as a generalized Hermitian eigenproblem by Cholesky
/// reduction.
pub fn max_secrecy_ratio(g1: &CVec, g2: &CVec) -> (CVec, f64) {
    let n = g1.len();
    let a = CMat::identity(n, n) + outer(g1);
    let b = CMat::identity(n, n) + outer(g2);
    let chol = Cholesky::new(b).expect("identity plus PSD is positive definite");
    let l = chol.l();
    let linv = l.clone().try_inverse().expect("triangular factor is invertible");
    let reduced = &linv * a * linv.adjoint();
    let (vals, vecs) = eigh_desc(&reduced);
    let v = vecs.column(0).into_owned();
    let u = linv.adjoint() * v;
    let u = &u / Complex64::new(u.norm(), 0.0);
    (u, vals[0].max(1.0))
}

/// Confidential-only transmission at full power: maximises the secrecy rate
/// with no multicast requirement.
pub fn secrecy_only_optimal(h1: &CVec, h2: &CVec, power: f64, noise: f64) -> (CVec, f64) {
    let (u, ratio) = max_secrecy_ratio(&scale(h1, power, noise), &scale(h2, power, noise));
    (u * Complex64::new(power.sqrt(), 0.0), ratio.log2())
}

/// Two-user max-min beam: maximises `min_k |g_kᴴw|²` over unit `w`.
/// Returns the unit beamformer and the optimal value.
///
/// Either the beam matched to the weaker user already serves the stronger
/// one, or the optimum balances both users inside `span{g1, g2}`.
pub fn two_user_max_min(g1: &CVec, g2: &CVec) -> (CVec, f64) {
    let n = g1.len();
    let a = g1.norm_squared();
    let b = g2.norm_squared();
    if a == 0.0 || b == 0.0 {
        let mut w = CVec::from_element(n, ZERO);
        if n > 0 {
            w[0] = ONE;
        }
        return (w, 0.0);
    }
    let c = g1.dotc(g2);
    let cabs = c.norm();
    let (weak, weak_norm2) = if a <= b { (g1, a) } else { (g2, b) };
    if cabs >= weak_norm2 {
        let w = weak / Complex64::new(weak_norm2.sqrt(), 0.0);
        return (w, weak_norm2);
    }
    let phase = if cabs > 0.0 { c / cabs } else { ONE };
    let w = g1 * Complex64::new(b - cabs, 0.0) + g2 * (phase.conj() * (a - cabs));
    let w = &w / Complex64::new(w.norm(), 0.0);
    (w, (a * b - cabs * cabs) / (a + b - 2.0 * cabs))
}

/// Multicast-only transmission at full power, solved as a max-min SDP with
/// rank-one extraction. Returns the beamformer and the common rate.
pub fn multicast_only_optimal(h1: &CVec, h2: &CVec, power: f64, noise: f64) -> Result<(CVec, f64)> {
    ensure_same_len(h1, h2)?;
    let g1 = scale(h1, power, noise);
    let g2 = scale(h2, power, noise);
    let (u, value) = crate::inner::max_min_sdp(&g1, &g2)?;
    Ok((u * Complex64::new(power.sqrt(), 0.0), (1.0 + value).log2()))
}
