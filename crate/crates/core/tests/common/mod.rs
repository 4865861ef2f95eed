#![allow(dead_code)]

use std::f64::consts::PI;

use ma_physi::linalg::{CMat, CVec};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn crandn<R: Rng>(rng: &mut R, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

pub fn abs2(a: &CVec, b: &CVec) -> f64 {
    a.dotc(b).norm_sqr()
}

/// Single-antenna optimum with the multicast constraint tight at user 2.
pub fn siso_rate(g1: f64, g2: f64, p: f64, r_ms: f64, noise: f64) -> f64 {
    let t = 2f64.powf(r_ms) - 1.0;
    let a = (t + 1.0) * noise * g2;
    ((a + (p * g2 - t * noise) * g1) / ((noise + p * g2) * g2)).log2()
}

/// `log2 λmax(σ²I + P h1h1ᴴ, σ²I + P h2h2ᴴ)` via a Cholesky whitening.
pub fn geneig_rate(h1: &CVec, h2: &CVec, p: f64, noise: f64) -> f64 {
    let n = h1.len();
    let id = CMat::identity(n, n) * Complex64::new(noise, 0.0);
    let a = &id + h1 * h1.adjoint() * Complex64::new(p, 0.0);
    let b = &id + h2 * h2.adjoint() * Complex64::new(p, 0.0);
    let l = b.cholesky().expect("positive definite").l();
    let li = l.solve_lower_triangular(&CMat::identity(n, n)).unwrap();
    let c = &li * a * li.adjoint();
    let c = (&c + c.adjoint()) * Complex64::new(0.5, 0.0);
    let ev = c.symmetric_eigenvalues();
    ev.iter().copied().fold(f64::MIN, f64::max).log2()
}

/// Descending eigenvalues of a Hermitian matrix.
pub fn eigs_desc(m: &CMat) -> Vec<f64> {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let mut v: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

pub fn rank_ratio(m: &CMat) -> f64 {
    let e = eigs_desc(m);
    if e[0] <= 1e-300 {
        0.0
    } else {
        (e.get(1).copied().unwrap_or(0.0) / e[0]).max(0.0)
    }
}

/// Unit vector in C² up to global phase.
fn unit2(a: f64, phi: f64) -> [Complex64; 2] {
    [Complex64::new(a.cos(), 0.0), Complex64::from_polar(a.sin(), phi)]
}

fn proj(h: &[Complex64; 2], u: &[Complex64; 2]) -> f64 {
    (h[0].conj() * u[0] + h[1].conj() * u[1]).norm_sqr()
}

/// Exhaustive rank-one search for two antennas. Directions of both beams are
/// sampled on a `k⁴` grid over `(a, φ)` boxes; for each pair the confidential
/// power is the largest one that still meets the multicast requirement.
pub struct BruteForce {
    pub h1: [Complex64; 2],
    pub h2: [Complex64; 2],
    pub p: f64,
    pub noise: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Box4 {
    pub lo: [f64; 4],
    pub hi: [f64; 4],
}

impl Box4 {
    pub fn full() -> Self {
        Box4 {
            lo: [0.0, 0.0, 0.0, 0.0],
            hi: [PI / 2.0, 2.0 * PI, PI / 2.0, 2.0 * PI],
        }
    }
}

impl BruteForce {
    pub fn new(h1: &CVec, h2: &CVec, p: f64, noise: f64, r_ms: f64) -> Self {
        BruteForce {
            h1: [h1[0], h1[1]],
            h2: [h2[0], h2[1]],
            p,
            noise,
            tau: 2f64.powf(r_ms) - 1.0,
        }
    }

    fn rate(&self, uc: &[Complex64; 2], u0: &[Complex64; 2]) -> Option<f64> {
        let (a1, a2) = (proj(&self.h1, uc), proj(&self.h2, uc));
        let mut pc_max = self.p;
        for (b, a) in [(proj(&self.h1, u0), a1), (proj(&self.h2, u0), a2)] {
            let lim = (self.p * b - self.tau * self.noise) / (b + self.tau * a);
            pc_max = pc_max.min(lim);
        }
        if pc_max < 0.0 {
            return None;
        }
        let pc = if a1 > a2 { pc_max } else { 0.0 };
        Some(((self.noise + pc * a1) / (self.noise + pc * a2)).log2())
    }

    /// Best rate over a `k⁴` grid on `b` and the coordinates of the best point.
    pub fn search(&self, b: Box4, k: usize) -> Option<(f64, [f64; 4])> {
        let axis = |d: usize| -> Vec<f64> {
            (0..k)
                .map(|i| b.lo[d] + (b.hi[d] - b.lo[d]) * i as f64 / (k - 1) as f64)
                .collect()
        };
        let (ac, pc, a0, p0) = (axis(0), axis(1), axis(2), axis(3));
        let u0s: Vec<([Complex64; 2], [f64; 2])> = a0
            .iter()
            .flat_map(|&a| p0.iter().map(move |&f| (unit2(a, f), [a, f])))
            .collect();
        let mut best: Option<(f64, [f64; 4])> = None;
        for &a in &ac {
            for &f in &pc {
                let uc = unit2(a, f);
                for (u0, c0) in &u0s {
                    if let Some(r) = self.rate(&uc, u0) {
                        if best.is_none_or(|(v, _)| r > v) {
                            best = Some((r, [a, f, c0[0], c0[1]]));
                        }
                    }
                }
            }
        }
        best
    }

    /// Zoomed grid of the same size around `center`, `width` per axis.
    pub fn refine(&self, center: [f64; 4], width: [f64; 4], k: usize) -> Option<(f64, [f64; 4])> {
        let mut b = Box4 { lo: [0.0; 4], hi: [0.0; 4] };
        for d in 0..4 {
            b.lo[d] = center[d] - width[d];
            b.hi[d] = center[d] + width[d];
        }
        self.search(b, k)
    }

    /// Largest `min_k P|h_kᴴu|²/σ²` over a fine direction grid.
    pub fn multicast_snr(&self, k: usize) -> f64 {
        let mut best: f64 = 0.0;
        for i in 0..k {
            for j in 0..k {
                let u = unit2(PI / 2.0 * i as f64 / (k - 1) as f64, 2.0 * PI * j as f64 / k as f64);
                best = best.max(proj(&self.h1, &u).min(proj(&self.h2, &u)));
            }
        }
        self.p * best / self.noise
    }
}

/// Beam gain `|Σ_k e^{j2π k r d}|²/N` summed directly.
pub fn direct_gain(n: usize, phase_per_step: f64) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..n {
        acc += Complex64::cis(2.0 * PI * k as f64 * phase_per_step);
    }
    acc.norm_sqr() / n as f64
}

pub fn paired(xs: &[Option<f64>], ys: &[Option<f64>]) -> Option<(f64, f64)> {
    let pairs: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter_map(|(x, y)| Some(((*x)?, (*y)?)))
        .collect();
    if pairs.is_empty() {
        return None;
    }
    let k = pairs.len() as f64;
    Some((
        pairs.iter().map(|p| p.0).sum::<f64>() / k,
        pairs.iter().map(|p| p.1).sum::<f64>() / k,
    ))
}
