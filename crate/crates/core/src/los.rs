//! Line-of-sight special case: beam gains of an equally spaced array, the
//! integer spacing that steers full gain to both users for the multicast beam
//! while nulling the eavesdropper for the confidential beam, and the rate
//! pairs it achieves.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{array_response, Apv, Position2D, SPACING_RTOL};
use crate::linalg::CVec;
use crate::rates::{multicast_rate, secrecy_rate, RatePair};
use crate::{Error, Result};

/// Elevation and azimuth of a direction, in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub elevation: f64,
    pub azimuth: f64,
}

impl Direction {
    pub fn new(elevation: f64, azimuth: f64) -> Self {
        Direction { elevation, azimuth }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LosScenario {
    pub users: [Direction; 2],
    pub beam_c: Direction,
    pub beam_0: Direction,
    pub betas: [Complex64; 2],
    pub wavelength: f64,
}

impl LosScenario {
    /// All four directions uniform on `[0, π]²`, gains `CN(0, variance)`.
    pub fn random<R: Rng>(rng: &mut R, wavelength: f64, variance: f64) -> Self {
        let mut dir = || Direction::new(rng.random_range(0.0..PI), rng.random_range(0.0..PI));
        let users = [dir(), dir()];
        let beam_c = dir();
        let beam_0 = dir();
        let s = (variance / 2.0).sqrt();
        let mut gain = || {
            let re: f64 = rng.sample(rand_distr::StandardNormal);
            let im: f64 = rng.sample(rand_distr::StandardNormal);
            Complex64::new(re * s, im * s)
        };
        let betas = [gain(), gain()];
        LosScenario {
            users,
            beam_c,
            beam_0,
            betas,
            wavelength,
        }
    }

    pub fn channel(&self, apv: &Apv, k: usize) -> CVec {
        let u = self.users[k];
        array_response(apv, u.elevation, u.azimuth, self.wavelength) * self.betas[k]
    }

    /// Unit-norm steering beam `a(T, θ, φ)/√N`.
    pub fn steering(&self, apv: &Apv, dir: Direction) -> CVec {
        let a = array_response(apv, dir.elevation, dir.azimuth, self.wavelength);
        a / Complex64::new((apv.len() as f64).sqrt(), 0.0)
    }
}

/// Direction along which the equally spaced array is laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArrayAxis {
    /// `t_n = [(n-1)d, 0]`: only the `sinθ cosφ` term enters the phase slope.
    #[default]
    Horizontal,
    /// `t_n = [(n-1)d, (n-1)d]`: the phase slope also picks up `cosθ`.
    Diagonal,
}

impl ArrayAxis {
    fn projection(&self, dir: Direction) -> f64 {
        let x = dir.elevation.sin() * dir.azimuth.cos();
        match self {
            ArrayAxis::Horizontal => x,
            ArrayAxis::Diagonal => x + dir.elevation.cos(),
        }
    }

    fn step(&self) -> (f64, f64) {
        match self {
            ArrayAxis::Horizontal => (1.0, 0.0),
            ArrayAxis::Diagonal => (1.0, 1.0),
        }
    }
}

/// Phase-slope residuals `r_{i,k}` in cycles per metre of array step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualSet {
    pub c1: f64,
    pub c2: f64,
    pub o1: f64,
    pub o2: f64,
}

pub fn residuals(s: &LosScenario, axis: ArrayAxis) -> ResidualSet {
    let r = |beam: Direction, user: Direction| {
        (axis.projection(user) - axis.projection(beam)) / s.wavelength
    };
    ResidualSet {
        c1: r(s.beam_c, s.users[0]),
        c2: r(s.beam_c, s.users[1]),
        o1: r(s.beam_0, s.users[0]),
        o2: r(s.beam_0, s.users[1]),
    }
}

/// Fractional part of `q·d` in `[0, 1)`, using the exact product error so
/// that large `d` keeps full precision.
pub fn frac_mul(q: f64, d: f64) -> f64 {
    let p = q * d;
    let e = q.mul_add(d, -p);
    let f = (p - p.floor()) + e;
    let f = f - f.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// `|Σ_n e^{j2π f n}|²/N` from the fractional phase `f` in cycles.
fn gain_from_frac(f: f64, n: usize) -> f64 {
    let nf = n as f64;
    let f = if f > 0.5 { f - 1.0 } else { f };
    let half = PI * f;
    let s = half.sin();
    if 2.0 * s * s < 1e-12 {
        let x = 2.0 * half;
        return nf * (1.0 - (nf * nf - 1.0) * x * x / 12.0);
    }
    let sn = (nf * half).sin();
    (sn * sn) / (s * s) / nf
}

/// `(1/N)(1 - cos 2πNrd)/(1 - cos 2πrd)`, with the limit `N` at the
/// coherent points.
pub fn ula_beam_gain(d: f64, n: usize, r: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    gain_from_frac(frac_mul(r, d), n)
}

/// Beam gains at integer spacing `d` in units of `unit` metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamGains {
    pub c1: f64,
    pub c2: f64,
    pub o1: f64,
    pub o2: f64,
}

impl BeamGains {
    pub fn at(rs: &ResidualSet, n: usize, d: u64, unit: f64) -> Self {
        let g = |r: f64| gain_from_frac(frac_mul(r * unit, d as f64), n);
        BeamGains {
            c1: g(rs.c1),
            c2: g(rs.c2),
            o1: g(rs.o1),
            o2: g(rs.o2),
        }
    }

    /// Largest distance from the ideal `(N, 0, N, N)`.
    pub fn worst_deviation(&self, n: usize) -> f64 {
        let nf = n as f64;
        (nf - self.c1).max(nf - self.o1).max(nf - self.o2).max(self.c2)
    }
}

/// Default upper end of the integer spacing scan.
pub const DEFAULT_D_MAX: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spacing {
    pub d: u64,
    /// Largest phase deviation over all conditions, in radians.
    pub achieved_eps: f64,
}

/// Phase deviations at `d`: every entry must lie in `(0, ε)`.
fn deviations(q: &[f64; 4], n: usize, d: u64) -> [f64; 8] {
    let tau = 2.0 * PI;
    let nf = n as f64;
    let mut out = [0.0; 8];
    for (k, &qk) in q.iter().enumerate() {
        let f1 = frac_mul(qk, d as f64);
        let f_n = {
            let v = nf * f1;
            v - v.floor()
        };
        out[2 * k] = tau * f_n;
        out[2 * k + 1] = if k == 1 {
            // c2: phase within ε/2 of π
            let dev = 2.0 * (tau * f1 - PI).abs();
            if dev == 0.0 {
                f64::MIN_POSITIVE
            } else {
                dev
            }
        } else {
            tau * f1
        };
    }
    out
}

fn qualifies(dev: &[f64; 8], eps: f64) -> bool {
    dev.iter().all(|&v| v > 0.0 && v < eps)
}

/// Next `d` with `frac(q d)` in `[a, a + len)`, via the three-gap structure of
/// irrational rotations: from any hit the next return time is one of
/// `g1`, `g2`, `g1 + g2`.
struct HitWalker {
    q: f64,
    a: f64,
    len: f64,
    g1: u64,
    u1: f64,
    g2: u64,
    u2: f64,
}

impl HitWalker {
    fn new(q: f64, a: f64, len: f64, scan_limit: u64) -> Option<Self> {
        let mut g1 = None;
        let mut g2 = None;
        let mut k = 1u64;
        while (g1.is_none() || g2.is_none()) && k <= scan_limit {
            let f = frac_mul(q, k as f64);
            if g1.is_none() && f > 0.0 && f < len {
                g1 = Some((k, f));
            }
            if g2.is_none() && f > 1.0 - len {
                g2 = Some((k, 1.0 - f));
            }
            k += 1;
        }
        let ((g1, u1), (g2, u2)) = (g1?, g2?);
        Some(HitWalker {
            q,
            a,
            len,
            g1,
            u1,
            g2,
            u2,
        })
    }

    fn offset(&self, d: u64) -> f64 {
        let f = frac_mul(self.q, d as f64) - self.a;
        if f < 0.0 {
            f + 1.0
        } else {
            f
        }
    }

    fn first_from(&self, start: u64) -> u64 {
        let mut d = start;
        while self.offset(d) >= self.len {
            d += 1;
        }
        d
    }

    fn next(&self, d: u64) -> u64 {
        let x = self.offset(d);
        let step = match (x + self.u1 < self.len, x >= self.u2) {
            (true, true) => self.g1.min(self.g2),
            (true, false) => self.g1,
            (false, true) => self.g2,
            (false, false) => self.g1 + self.g2,
        };
        d + step
    }
}

/// Smallest positive integer `d <= d_max` satisfying every phase condition:
/// the confidential beam and the multicast beam aligned with user 1, the
/// multicast beam aligned with user 2, and the confidential beam half a turn
/// off user 2, each to within `ε` (both for one element step and for `N`).
pub fn find_spacing(rs: &ResidualSet, n: usize, eps: f64, unit: f64, d_max: u64) -> Option<Spacing> {
    find_spacing_from(rs, n, eps, unit, 1, d_max)
}

/// As [`find_spacing`], starting the scan at `d_start`.
pub fn find_spacing_from(
    rs: &ResidualSet,
    n: usize,
    eps: f64,
    unit: f64,
    d_start: u64,
    d_max: u64,
) -> Option<Spacing> {
    if !(eps > 0.0 && eps < 2.0 * PI) || !(unit > 0.0) || n == 0 {
        return None;
    }
    let nf = n as f64;
    let l = eps / (2.0 * PI);
    // With N odd, N/2 turns is never close to a whole turn.
    if n % 2 == 1 && nf * l / 2.0 + l <= 0.5 {
        return None;
    }
    let q = [rs.c1 * unit, rs.c2 * unit, rs.o1 * unit, rs.o2 * unit];
    if conditions_incompatible(&q, n, l, d_max) {
        return None;
    }
    // Drive the walk with the user-1 confidential alignment; when `Nε < 2π`
    // both of its conditions confine the fractional phase to (0, ε/2πN).
    let len = if nf * l <= 1.0 { l / nf } else { l };
    let margin = 1e-12;
    let walker = HitWalker::new(q[0], 1.0 - margin, len + 2.0 * margin, 1 << 32)?;
    let mut d = walker.first_from(d_start.max(1));
    while d <= d_max {
        let dev = deviations(&q, n, d);
        if qualifies(&dev, eps) {
            let achieved = dev.iter().copied().fold(0.0, f64::max);
            return Some(Spacing { d, achieved_eps: achieved });
        }
        d = walker.next(d);
    }
    None
}

/// Fractional phases `f` with `f` and `N f` both inside the target window:
/// `(0, l)` for an aligned beam, `(1/2 - l/2, 1/2 + l/2)` for the null.
fn admissible(n: usize, l: f64, null: bool) -> Vec<(f64, f64)> {
    let nf = n as f64;
    let (lo, hi) = if null { (0.5 - l / 2.0, 0.5 + l / 2.0) } else { (0.0, l) };
    (0..n)
        .filter_map(|m| {
            let a = (m as f64 / nf).max(lo);
            let b = ((m as f64 + l) / nf).min(hi);
            (a < b).then_some((a, b))
        })
        .collect()
}

/// The residuals satisfy `r_c1 - r_c2 = r_01 - r_02` identically (both equal
/// the user-1 minus user-2 projection), so the null phase is pinned to
/// `f_c1 - f_01 + f_02 (mod 1)`. Returns true when that sum can never land in
/// the null window for any `d <= d_max`.
fn conditions_incompatible(q: &[f64; 4], n: usize, l: f64, d_max: u64) -> bool {
    let drift = ((q[0] - q[1]) - (q[2] - q[3])).abs() * d_max as f64;
    let scale = q.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if drift > 1e-3 || ((q[0] - q[1]) - (q[2] - q[3])).abs() > 1e-12 * scale {
        return false;
    }
    let margin = drift + 1e-9;
    let aligned = admissible(n, l, false);
    let null = admissible(n, l, true);
    for a in &aligned {
        for b in &aligned {
            for c in &aligned {
                let lo = a.0 - b.1 + c.0 - margin;
                let hi = a.1 - b.0 + c.1 + margin;
                for j in &null {
                    let k0 = (j.0 - hi).floor() as i64;
                    let k1 = (j.1 - lo).ceil() as i64;
                    for k in k0..=k1 {
                        let k = k as f64;
                        if lo + k < j.1 && hi + k > j.0 {
                            return false;
                        }
                    }
                }
            }
        }
    }
    true
}

/// Lower bound on the confidential gain at user 2 when the other three gains
/// are all at least `N(1 - ε)`, for any placement: the Fubini-Study angles
/// from the multicast beam to both users and from the confidential beam to
/// user 1 are each at most `arccos √(1 - ε)`.
pub fn null_gain_floor(n: usize, eps: f64) -> f64 {
    let theta = (1.0 - eps).max(0.0).sqrt().acos();
    let angle = (3.0 * theta).min(PI / 2.0);
    n as f64 * angle.cos().powi(2)
}

/// Linear scan used as a reference for the walker.
pub fn find_spacing_scan(rs: &ResidualSet, n: usize, eps: f64, unit: f64, d_max: u64) -> Option<Spacing> {
    let q = [rs.c1 * unit, rs.c2 * unit, rs.o1 * unit, rs.o2 * unit];
    (1..=d_max).find_map(|d| {
        let dev = deviations(&q, n, d);
        qualifies(&dev, eps).then(|| Spacing {
            d,
            achieved_eps: dev.iter().copied().fold(0.0, f64::max),
        })
    })
}

/// Tightens a spacing: searches at half the achieved deviation and keeps
/// walking until the worst beam-gain deviation strictly drops.
pub fn refine_spacing(rs: &ResidualSet, n: usize, prev: &Spacing, unit: f64, d_max: u64) -> Option<Spacing> {
    let target = BeamGains::at(rs, n, prev.d, unit).worst_deviation(n);
    let eps = prev.achieved_eps / 2.0;
    let mut start = prev.d + 1;
    loop {
        let s = find_spacing_from(rs, n, eps, unit, start, d_max)?;
        if BeamGains::at(rs, n, s.d, unit).worst_deviation(n) < target {
            return Some(s);
        }
        start = s.d + 1;
    }
}

/// Equally spaced array with step `d·unit` along `axis`, starting at the origin.
pub fn lemma1_apv(d: u64, unit: f64, n: usize, axis: ArrayAxis, d_min: f64) -> Result<Apv> {
    let step = d as f64 * unit;
    let (ax, ay) = axis.step();
    let pitch = step * ax.hypot(ay);
    if pitch < d_min * (1.0 - SPACING_RTOL) {
        return Err(Error::Config(format!("array step {pitch} m is below the minimum spacing {d_min} m")));
    }
    Ok(Apv::new(
        (0..n)
            .map(|i| Position2D::new(i as f64 * step * ax, i as f64 * step * ay))
            .collect(),
    ))
}

/// Rate pair with ideal gains `(N, 0, N, N)` and powers `(P̃c, P̃0)`.
pub fn theorem1_rates(pc: f64, p0: f64, betas: [Complex64; 2], n: usize, noise: f64) -> RatePair {
    let nf = n as f64;
    let b1 = betas[0].norm_sqr();
    let b2 = betas[1].norm_sqr();
    let conf = pc * nf * b1;
    let secrecy = (1.0 + conf / noise).log2();
    let r01 = (1.0 + p0 * nf * b1 / (noise + conf)).log2();
    let r02 = (1.0 + p0 * nf * b2 / noise).log2();
    RatePair {
        multicast_rate: r01.min(r02),
        secrecy_rate: secrecy,
    }
}

/// `P̃c = Pc |wcᴴa(T, θ1, φ1)|²/N`, `P̃0 = P - P̃c`, for a unit-norm `wc`.
pub fn theorem1_power_mapping(
    total_power: f64,
    pc: f64,
    wc: &CVec,
    apv: &Apv,
    s: &LosScenario,
) -> Result<(f64, f64)> {
    crate::linalg::ensure_same_len(wc, &CVec::zeros(apv.len()))?;
    let u = s.users[0];
    let a = array_response(apv, u.elevation, u.azimuth, s.wavelength);
    let pc_t = pc * wc.dotc(&a).norm_sqr() / apv.len() as f64;
    Ok((pc_t, total_power - pc_t))
}

/// Rates of unit beams `wc`, `w0` carrying powers `pc`, `p0` at placement `apv`.
pub fn los_rates(
    s: &LosScenario,
    apv: &Apv,
    wc: &CVec,
    w0: &CVec,
    pc: f64,
    p0: f64,
    noise: f64,
) -> Result<RatePair> {
    let h1 = s.channel(apv, 0);
    let h2 = s.channel(apv, 1);
    let wc = wc * Complex64::new(pc.sqrt(), 0.0);
    let w0 = w0 * Complex64::new(p0.sqrt(), 0.0);
    Ok(RatePair {
        multicast_rate: multicast_rate(&h1, &h2, &w0, &wc, noise)?,
        secrecy_rate: secrecy_rate(&h1, &h2, &wc, noise)?,
    })
}

/// Rates of the steering beams at the constructed placement.
pub fn lemma1_rates(
    s: &LosScenario,
    apv: &Apv,
    pc: f64,
    p0: f64,
    noise: f64,
) -> Result<RatePair> {
    let wc = s.steering(apv, s.beam_c);
    let w0 = s.steering(apv, s.beam_0);
    los_rates(s, apv, &wc, &w0, pc, p0, noise)
}
