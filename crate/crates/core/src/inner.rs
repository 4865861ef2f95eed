//! Beamforming optimisation for a fixed antenna placement.
//!
//! The secrecy rate maximisation under a multicast requirement is lifted to
//! covariance matrices, the rank constraints are dropped, and the linear
//! fractional objective is turned into a linear one with the Charnes-Cooper
//! substitution `Qc = Z/ξ, Q0 = Γ/ξ`:
//!
//! ```text
//!   maximize   ξ + h1ᴴ Z h1 / σ²
//!   subject to ξ + h2ᴴ Z h2 / σ² = 1
//!              hkᴴ Γ hk - τ (ξ σ² + hkᴴ Z hk) >= 0,   k = 1, 2
//!              Tr(Z + Γ) <= P ξ
//!              Z, Γ ⪰ 0, ξ >= 0
//! ```
//!
//! Every constraint touches `Z` and `Γ` only through `h1`, `h2` and the trace,
//! so the optimum lives in `span{h1, h2}` and the SDP is solved there with at
//! most 2×2 blocks, then lifted back.

use nalgebra::{DMatrix, DVector, SVD};
use num_complex::Complex64;

use crate::linalg::{eigh_desc, hermitize, outer, rank_ratio, span_basis, trace_re, CMat, CVec, ZERO};
use crate::rates::{scale, tau, two_user_max_min, BeamformingSolution};
use crate::sdp::{sdp_solve, Block, BlockMat, SdpProblem, SdpSettings, SdpStatus};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct InnerProblem {
    pub h1: CVec,
    pub h2: CVec,
    pub power_budget: f64,
    pub multicast_req: f64,
    pub noise: f64,
}

impl InnerProblem {
    pub fn new(h1: CVec, h2: CVec, power_budget: f64, multicast_req: f64, noise: f64) -> Result<Self> {
        crate::linalg::ensure_same_len(&h1, &h2)?;
        if !(power_budget > 0.0 && noise > 0.0) {
            return Err(Error::Config("power budget and noise must be positive".into()));
        }
        if !(multicast_req >= 0.0) {
            return Err(Error::Config("multicast requirement must be nonnegative".into()));
        }
        Ok(InnerProblem {
            h1,
            h2,
            power_budget,
            multicast_req,
            noise,
        })
    }

    pub fn tau(&self) -> f64 {
        tau(self.multicast_req)
    }

    pub fn dim(&self) -> usize {
        self.h1.len()
    }

    /// `(h1, h2)` scaled by `√P/σ`.
    pub fn normalized(&self) -> (CVec, CVec) {
        (
            scale(&self.h1, self.power_budget, self.noise),
            scale(&self.h2, self.power_budget, self.noise),
        )
    }

    /// Largest supportable multicast rate at full power.
    pub fn multicast_capacity(&self) -> f64 {
        let (g1, g2) = self.normalized();
        (1.0 + two_user_max_min(&g1, &g2).1).log2()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverTolerances {
    pub gap: f64,
    pub feasibility: f64,
    pub max_iter: usize,
    /// `λ₂/λ₁` above which a covariance is not considered rank one.
    pub rank_threshold: f64,
}

impl Default for SolverTolerances {
    fn default() -> Self {
        SolverTolerances {
            gap: 1e-8,
            feasibility: 1e-9,
            max_iter: 100,
            rank_threshold: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::NumericalFailure => "numerical-failure",
        }
    }
}

impl std::str::FromStr for SolveStatus {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "optimal" => Ok(SolveStatus::Optimal),
            "infeasible" => Ok(SolveStatus::Infeasible),
            "numerical-failure" => Ok(SolveStatus::NumericalFailure),
            other => Err(Error::Config(format!("unknown status {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct InnerSolution {
    pub status: SolveStatus,
    /// Charnes-Cooper variables in physical units (watts).
    pub z: CMat,
    pub gamma: CMat,
    pub xi: f64,
    /// `ξ + h1ᴴZh1/σ²`, equal to `2^Rc` at the optimum.
    pub objective: f64,
    pub qc: CMat,
    pub q0: CMat,
    pub rank_ratio_z: f64,
    pub rank_ratio_gamma: f64,
    pub rel_gap: f64,
    pub iterations: usize,
}

impl InnerSolution {
    fn empty(n: usize, status: SolveStatus) -> Self {
        InnerSolution {
            status,
            z: CMat::zeros(n, n),
            gamma: CMat::zeros(n, n),
            xi: 0.0,
            objective: f64::NAN,
            qc: CMat::zeros(n, n),
            q0: CMat::zeros(n, n),
            rank_ratio_z: 0.0,
            rank_ratio_gamma: 0.0,
            rel_gap: f64::NAN,
            iterations: 0,
        }
    }

    /// `log2(objective)`, present only for optimal solutions.
    pub fn secrecy_rate(&self) -> Option<f64> {
        (self.status == SolveStatus::Optimal).then(|| self.objective.max(1.0).log2())
    }

    pub fn is_rank_one(&self, threshold: f64) -> bool {
        self.rank_ratio_z <= threshold && self.rank_ratio_gamma <= threshold
    }
}

/// Relative tolerance on `τ` against the multicast capacity.
const CAPACITY_RTOL: f64 = 1e-9;
/// Below this distance to capacity the only feasible point has `Z = 0`.
const BOUNDARY_RTOL: f64 = 1e-7;
/// A covariance with trace below this fraction of `ξ` is reported as zero.
const ZERO_TRACE_RTOL: f64 = 1e-7;

pub fn solve_inner(p: &InnerProblem, tol: &SolverTolerances) -> InnerSolution {
    let n = p.dim();
    let (g1, g2) = p.normalized();
    let t = p.tau();
    let (w_mc, cap) = two_user_max_min(&g1, &g2);

    if t > cap * (1.0 + CAPACITY_RTOL) {
        return InnerSolution::empty(n, SolveStatus::Infeasible);
    }
    if t > 0.0 && t >= cap * (1.0 - BOUNDARY_RTOL) {
        // All power must go to the common message; the secrecy rate is zero.
        let gamma = outer(&w_mc) * Complex64::new(p.power_budget, 0.0);
        return InnerSolution {
            status: SolveStatus::Optimal,
            z: CMat::zeros(n, n),
            q0: gamma.clone(),
            gamma,
            xi: 1.0,
            objective: 1.0,
            qc: CMat::zeros(n, n),
            rank_ratio_z: 0.0,
            rank_ratio_gamma: 0.0,
            rel_gap: 0.0,
            iterations: 0,
        };
    }

    let basis = span_basis(&g1, &g2);
    let d = basis.ncols();
    if d == 0 {
        // Both channels vanish: nothing reaches either user.
        let mut sol = InnerSolution::empty(n, SolveStatus::Optimal);
        sol.xi = 1.0;
        sol.objective = 1.0;
        sol.rel_gap = 0.0;
        return sol;
    }
    let r1 = basis.adjoint() * &g1;
    let r2 = basis.adjoint() * &g2;
    let problem = charnes_cooper_sdp(&r1, &r2, t);
    let settings = SdpSettings {
        gap_tol: tol.gap,
        feas_tol: tol.feasibility,
        max_iter: tol.max_iter,
    };
    let sol = match sdp_solve(&problem, &settings) {
        Ok(s) => s,
        Err(_) => return InnerSolution::empty(n, SolveStatus::NumericalFailure),
    };
    let status = match sol.status {
        SdpStatus::Optimal => SolveStatus::Optimal,
        SdpStatus::PrimalInfeasible => SolveStatus::Infeasible,
        _ => SolveStatus::NumericalFailure,
    };

    let z_red = hermitize(sol.x.0[0].as_herm());
    let g_red = hermitize(sol.x.0[1].as_herm());
    let xi = sol.x.0[2].as_diag()[0];

    let lift = |m: &CMat| &basis * m * basis.adjoint() * Complex64::new(p.power_budget, 0.0);
    let z = lift(&z_red);
    let gamma = lift(&g_red);
    let objective = xi + crate::linalg::quad_form(&z_red, &r1);

    let ratio = |m: &CMat| {
        if trace_re(m) <= ZERO_TRACE_RTOL * xi.max(f64::MIN_POSITIVE) {
            0.0
        } else {
            rank_ratio(&eigh_desc(m).0)
        }
    };
    let (qc, q0) = if xi > 0.0 {
        let inv = Complex64::new(1.0 / xi, 0.0);
        (&z * inv, &gamma * inv)
    } else {
        (CMat::zeros(n, n), CMat::zeros(n, n))
    };
    let status = if status == SolveStatus::Optimal && !(xi > 0.0) {
        SolveStatus::NumericalFailure
    } else {
        status
    };
    InnerSolution {
        status,
        rank_ratio_z: ratio(&z_red),
        rank_ratio_gamma: ratio(&g_red),
        z,
        gamma,
        xi,
        objective,
        qc,
        q0,
        rel_gap: sol.rel_gap,
        iterations: sol.iterations,
    }
}

/// Standard-form data for the Charnes-Cooper SDP in normalised units
/// (`g = h√P/σ`, `Z ← Z/P`). Variables: `Z`, `Γ` (d×d Hermitian) and the
/// nonnegative vector `[ξ, s1, s2, s3]` of ξ and three slacks.
pub(crate) fn charnes_cooper_sdp(g1: &CVec, g2: &CVec, t: f64) -> SdpProblem {
    let d = g1.len();
    let h1 = outer(g1);
    let h2 = outer(g2);
    let zero = CMat::zeros(d, d);
    let eye = CMat::identity(d, d);
    let lp = |v: [f64; 4]| Block::Diag(DVector::from_row_slice(&v));
    let neg = |m: &CMat, s: f64| m * Complex64::new(-s, 0.0);

    let c = BlockMat(vec![Block::Herm(neg(&h1, 1.0)), Block::Herm(zero.clone()), lp([-1.0, 0.0, 0.0, 0.0])]);
    let mut a = vec![BlockMat(vec![
        Block::Herm(h2.clone()),
        Block::Herm(zero.clone()),
        lp([1.0, 0.0, 0.0, 0.0]),
    ])];
    let mut b = vec![1.0];
    for (k, hk) in [&h1, &h2].into_iter().enumerate() {
        let mut slack = [-t, 0.0, 0.0, 0.0];
        slack[1 + k] = -1.0;
        a.push(BlockMat(vec![Block::Herm(neg(hk, t)), Block::Herm(hk.clone()), lp(slack)]));
        b.push(0.0);
    }
    a.push(BlockMat(vec![Block::Herm(eye.clone()), Block::Herm(eye), lp([-1.0, 0.0, 0.0, 1.0])]));
    b.push(0.0);
    SdpProblem { c, a, b }
}

#[derive(Debug, Clone)]
pub struct Recovery {
    pub beamformers: BeamformingSolution,
    /// Set when either covariance exceeded the rank-one threshold and was
    /// reduced by purification before extraction.
    pub rank_warning: bool,
}

/// Extracts `(w0, wc)` from the Charnes-Cooper solution.
pub fn recover_beamformers(sol: &InnerSolution, p: &InnerProblem, tol: &SolverTolerances) -> Result<Recovery> {
    if sol.status != SolveStatus::Optimal {
        return Err(Error::Solver(format!("cannot recover beamformers from a {} solution", sol.status.as_str())));
    }
    let funcs = [outer(&p.h1), outer(&p.h2), CMat::identity(p.dim(), p.dim())];
    let mut warning = false;
    let mut extract = |q: &CMat, ratio: f64| -> CVec {
        let q = if ratio > tol.rank_threshold {
            warning = true;
            purify_rank_one(q, &funcs)
        } else {
            q.clone()
        };
        principal_beam(&q)
    };
    let wc = extract(&sol.qc, sol.rank_ratio_z);
    let w0 = extract(&sol.q0, sol.rank_ratio_gamma);
    Ok(Recovery {
        beamformers: BeamformingSolution { w0, wc },
        rank_warning: warning,
    })
}

/// `√λ₁ u₁` of a PSD matrix.
pub fn principal_beam(q: &CMat) -> CVec {
    let n = q.nrows();
    if n == 0 || trace_re(q) <= 0.0 {
        return CVec::from_element(n, ZERO);
    }
    let (vals, vecs) = eigh_desc(q);
    vecs.column(0).into_owned() * Complex64::new(vals[0].max(0.0).sqrt(), 0.0)
}

/// Rank reduction that preserves `tr(F_k X)` for every `F_k`. Reduces a PSD
/// `X` of rank `r` while `r² > funcs.len()`; with three functionals (two
/// channels and the trace) every PSD matrix reaches rank one.
pub fn purify_rank_one(x: &CMat, funcs: &[CMat]) -> CMat {
    let (vals, vecs) = eigh_desc(x);
    let top = vals.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return CMat::zeros(x.nrows(), x.ncols());
    }
    let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > 1e-12 * top).collect();
    let mut v = CMat::from_fn(x.nrows(), keep.len(), |i, j| {
        vecs[(i, keep[j])] * vals[keep[j]].sqrt()
    });
    let m = funcs.len();
    while v.ncols() > 1 && v.ncols() * v.ncols() > m {
        let r = v.ncols();
        let reduced: Vec<CMat> = funcs.iter().map(|f| v.adjoint() * f * &v).collect();
        let basis = hermitian_basis(r);
        let dim = basis.len();
        let mut sys = DMatrix::<f64>::zeros(dim, dim);
        for (i, fr) in reduced.iter().enumerate() {
            for (j, bj) in basis.iter().enumerate() {
                sys[(i, j)] = crate::linalg::trace_prod(fr, bj);
            }
        }
        let svd = SVD::new(sys, false, true);
        let vt = svd.v_t.expect("requested right singular vectors");
        let (idx, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty");
        let mut delta = CMat::zeros(r, r);
        for (j, bj) in basis.iter().enumerate() {
            delta += bj * Complex64::new(vt[(idx, j)], 0.0);
        }
        let (dvals, _) = eigh_desc(&delta);
        let (delta, lmax) = if dvals[0] >= -dvals[r - 1] {
            (delta, dvals[0])
        } else {
            (-delta, -dvals[r - 1])
        };
        if lmax <= 0.0 {
            break;
        }
        let shrink = CMat::identity(r, r) - delta * Complex64::new(1.0 / lmax, 0.0);
        let (svals, svecs) = eigh_desc(&shrink);
        let cols: Vec<usize> = (0..r).filter(|&i| svals[i] > 1e-12).collect();
        let factor = CMat::from_fn(r, cols.len(), |i, j| svecs[(i, cols[j])] * svals[cols[j]].sqrt());
        let next = &v * factor;
        if next.ncols() >= r {
            break;
        }
        v = next;
    }
    &v * v.adjoint()
}

/// Real basis of the r×r Hermitian matrices.
fn hermitian_basis(r: usize) -> Vec<CMat> {
    let mut out = Vec::with_capacity(r * r);
    for i in 0..r {
        let mut e = CMat::zeros(r, r);
        e[(i, i)] = Complex64::new(1.0, 0.0);
        out.push(e);
    }
    for i in 0..r {
        for j in i + 1..r {
            let mut re = CMat::zeros(r, r);
            re[(i, j)] = Complex64::new(1.0, 0.0);
            re[(j, i)] = Complex64::new(1.0, 0.0);
            out.push(re);
            let mut im = CMat::zeros(r, r);
            im[(i, j)] = Complex64::new(0.0, 1.0);
            im[(j, i)] = Complex64::new(0.0, -1.0);
            out.push(im);
        }
    }
    out
}

/// Two-user max-min multicast SDP in normalised units:
/// `maximize t s.t. gkᴴΓgk >= t, Tr Γ <= 1`. Returns a rank-one unit-power
/// beam and the optimal value of `t`.
pub fn max_min_sdp(g1: &CVec, g2: &CVec) -> Result<(CVec, f64)> {
    let n = g1.len();
    let h1 = outer(g1);
    let h2 = outer(g2);
    let lp = |v: [f64; 4]| Block::Diag(DVector::from_row_slice(&v));
    let c = BlockMat(vec![Block::Herm(CMat::zeros(n, n)), lp([-1.0, 0.0, 0.0, 0.0])]);
    let a = vec![
        BlockMat(vec![Block::Herm(h1.clone()), lp([-1.0, -1.0, 0.0, 0.0])]),
        BlockMat(vec![Block::Herm(h2.clone()), lp([-1.0, 0.0, -1.0, 0.0])]),
        BlockMat(vec![Block::Herm(CMat::identity(n, n)), lp([0.0, 0.0, 0.0, 1.0])]),
    ];
    let problem = SdpProblem { c, a, b: vec![0.0, 0.0, 1.0] };
    let sol = sdp_solve(&problem, &SdpSettings::default())?;
    if sol.status != SdpStatus::Optimal {
        return Err(Error::Solver(format!("max-min multicast SDP ended with {:?}", sol.status)));
    }
    let gamma = hermitize(sol.x.0[0].as_herm());
    let purified = purify_rank_one(&gamma, &[h1, h2, CMat::identity(n, n)]);
    let w = principal_beam(&purified);
    let norm = w.norm();
    let w = if norm > 1.0 { &w / Complex64::new(norm, 0.0) } else { w };
    let value = g1.dotc(&w).norm_sqr().min(g2.dotc(&w).norm_sqr());
    Ok((w, value))
}
