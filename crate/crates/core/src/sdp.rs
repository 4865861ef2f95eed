//! Dense primal-dual interior-point solver for small block SDPs.
//!
//! Standard form, with `X` block diagonal over complex Hermitian PSD blocks
//! and nonnegative diagonal blocks:
//!
//! ```text
//!   minimize   <C, X>
//!   subject to <A_i, X> = b_i,  i = 1..m
//!              X ⪰ 0
//! ```
//!
//! with dual `maximize bᵀy s.t. Σ y_i A_i + S = C, S ⪰ 0`. Iterates follow
//! the HKM search direction with a Mehrotra predictor-corrector, starting from
//! an infeasible scaled identity. Intended for blocks up to 16×16 and a
//! handful of constraints; everything is dense.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::linalg::{hermitize, trace_prod, CMat};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockSpec {
    Hermitian(usize),
    NonNeg(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Block {
    Herm(CMat),
    Diag(DVector<f64>),
}

impl Block {
    pub fn zeros(spec: BlockSpec) -> Self {
        match spec {
            BlockSpec::Hermitian(n) => Block::Herm(CMat::zeros(n, n)),
            BlockSpec::NonNeg(n) => Block::Diag(DVector::zeros(n)),
        }
    }

    pub fn identity(spec: BlockSpec, scale: f64) -> Self {
        match spec {
            BlockSpec::Hermitian(n) => {
                Block::Herm(CMat::identity(n, n) * Complex64::new(scale, 0.0))
            }
            BlockSpec::NonNeg(n) => Block::Diag(DVector::from_element(n, scale)),
        }
    }

    fn spec(&self) -> BlockSpec {
        match self {
            Block::Herm(m) => BlockSpec::Hermitian(m.nrows()),
            Block::Diag(v) => BlockSpec::NonNeg(v.len()),
        }
    }

    fn dim(&self) -> usize {
        match self {
            Block::Herm(m) => m.nrows(),
            Block::Diag(v) => v.len(),
        }
    }

    pub fn as_herm(&self) -> &CMat {
        match self {
            Block::Herm(m) => m,
            Block::Diag(_) => panic!("expected a Hermitian block"),
        }
    }

    pub fn as_diag(&self) -> &DVector<f64> {
        match self {
            Block::Diag(v) => v,
            Block::Herm(_) => panic!("expected a diagonal block"),
        }
    }

    fn inner(&self, other: &Block) -> f64 {
        match (self, other) {
            (Block::Herm(a), Block::Herm(b)) => trace_prod(a, b),
            (Block::Diag(a), Block::Diag(b)) => a.dot(b),
            _ => panic!("block kind mismatch"),
        }
    }

    fn axpy(&mut self, alpha: f64, other: &Block) {
        match (self, other) {
            (Block::Herm(a), Block::Herm(b)) => *a += b * Complex64::new(alpha, 0.0),
            (Block::Diag(a), Block::Diag(b)) => a.axpy(alpha, b, 1.0),
            _ => panic!("block kind mismatch"),
        }
    }

    fn norm_sq(&self) -> f64 {
        match self {
            Block::Herm(a) => a.norm_squared(),
            Block::Diag(a) => a.norm_squared(),
        }
    }
}

/// Block-diagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMat(pub Vec<Block>);

impl BlockMat {
    pub fn zeros(specs: &[BlockSpec]) -> Self {
        BlockMat(specs.iter().map(|&s| Block::zeros(s)).collect())
    }

    pub fn identity(specs: &[BlockSpec], scale: f64) -> Self {
        BlockMat(specs.iter().map(|&s| Block::identity(s, scale)).collect())
    }

    pub fn specs(&self) -> Vec<BlockSpec> {
        self.0.iter().map(Block::spec).collect()
    }

    pub fn inner(&self, other: &BlockMat) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a.inner(b)).sum()
    }

    pub fn axpy(&mut self, alpha: f64, other: &BlockMat) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            a.axpy(alpha, b);
        }
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(Block::norm_sq).sum::<f64>().sqrt()
    }

    fn total_dim(&self) -> usize {
        self.0.iter().map(Block::dim).sum()
    }
}

#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub c: BlockMat,
    pub a: Vec<BlockMat>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpSettings {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iter: usize,
}

impl Default for SdpSettings {
    fn default() -> Self {
        SdpSettings {
            gap_tol: 1e-8,
            feas_tol: 1e-9,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    MaxIterations,
    Stalled,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub x: BlockMat,
    pub y: DVector<f64>,
    pub s: BlockMat,
    pub primal_obj: f64,
    pub dual_obj: f64,
    /// `max(|pobj - dobj|, <X,S>) / (1 + |pobj| + |dobj|)`
    pub rel_gap: f64,
    pub primal_infeas: f64,
    pub dual_infeas: f64,
    pub iterations: usize,
}

impl SdpProblem {
    pub fn validate(&self) -> crate::Result<()> {
        let specs = self.c.specs();
        if self.a.len() != self.b.len() {
            return Err(crate::Error::DimensionMismatch {
                expected: self.a.len(),
                got: self.b.len(),
            });
        }
        for ai in &self.a {
            if ai.specs() != specs {
                return Err(crate::Error::Solver(
                    "constraint block structure differs from objective".into(),
                ));
            }
        }
        Ok(())
    }

    fn apply_a(&self, x: &BlockMat) -> DVector<f64> {
        DVector::from_iterator(self.a.len(), self.a.iter().map(|ai| ai.inner(x)))
    }

    fn apply_at(&self, y: &DVector<f64>) -> BlockMat {
        let mut out = BlockMat::zeros(&self.c.specs());
        for (ai, &yi) in self.a.iter().zip(y.iter()) {
            out.axpy(yi, ai);
        }
        out
    }
}

/// Per-block data reused by both the predictor and the corrector solve.
struct Factors {
    s_inv: BlockMat,
    /// `X A_j S⁻¹` for each constraint j.
    x_a_sinv: Vec<BlockMat>,
    schur: Cholesky<f64, nalgebra::Dyn>,
}

fn mul3(x: &Block, a: &Block, z: &Block) -> Block {
    match (x, a, z) {
        (Block::Herm(x), Block::Herm(a), Block::Herm(z)) => Block::Herm(x * a * z),
        (Block::Diag(x), Block::Diag(a), Block::Diag(z)) => {
            Block::Diag(x.component_mul(a).component_mul(z))
        }
        _ => panic!("block kind mismatch"),
    }
}

fn inverse(b: &Block) -> Option<Block> {
    match b {
        Block::Herm(m) => Cholesky::new(hermitize(m)).map(|c| Block::Herm(c.inverse())),
        Block::Diag(v) => {
            if v.iter().all(|&x| x > 0.0) {
                Some(Block::Diag(v.map(|x| 1.0 / x)))
            } else {
                None
            }
        }
    }
}

/// Largest step `α` keeping `X + α dX` PSD (infinite if `dX` is PSD).
fn max_step(x: &Block, dx: &Block) -> f64 {
    match (x, dx) {
        (Block::Herm(x), Block::Herm(dx)) => {
            let Some(chol) = Cholesky::new(hermitize(x)) else {
                return 0.0;
            };
            let l = chol.l();
            let Some(linv) = l.try_inverse() else {
                return 0.0;
            };
            let w = &linv * dx * linv.adjoint();
            let lmin = SymmetricEigen::new(hermitize(&w))
                .eigenvalues
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            if lmin < 0.0 {
                -1.0 / lmin
            } else {
                f64::INFINITY
            }
        }
        (Block::Diag(x), Block::Diag(dx)) => x
            .iter()
            .zip(dx.iter())
            .filter(|(_, &d)| d < 0.0)
            .map(|(&xi, &d)| -xi / d)
            .fold(f64::INFINITY, f64::min),
        _ => panic!("block kind mismatch"),
    }
}

fn max_step_all(x: &BlockMat, dx: &BlockMat) -> f64 {
    x.0.iter()
        .zip(&dx.0)
        .map(|(a, b)| max_step(a, b))
        .fold(f64::INFINITY, f64::min)
}

fn block_mul(a: &Block, b: &Block) -> Block {
    match (a, b) {
        (Block::Herm(a), Block::Herm(b)) => Block::Herm(a * b),
        (Block::Diag(a), Block::Diag(b)) => Block::Diag(a.component_mul(b)),
        _ => panic!("block kind mismatch"),
    }
}

fn blockmat_mul(a: &BlockMat, b: &BlockMat) -> BlockMat {
    BlockMat(a.0.iter().zip(&b.0).map(|(x, y)| block_mul(x, y)).collect())
}

/// Non-Hermitian products are only ever paired with Hermitian constraint
/// matrices, where `Re tr(A K) = Re tr(A herm(K))`; the direction itself is
/// symmetrised explicitly.
fn hermitize_all(m: &BlockMat) -> BlockMat {
    BlockMat(
        m.0.iter()
            .map(|b| match b {
                Block::Herm(h) => Block::Herm(hermitize(h)),
                Block::Diag(d) => Block::Diag(d.clone()),
            })
            .collect(),
    )
}

struct Direction {
    dx: BlockMat,
    dy: DVector<f64>,
    ds: BlockMat,
}

impl SdpProblem {
    fn factor(&self, x: &BlockMat, s: &BlockMat) -> Option<Factors> {
        let s_inv = BlockMat(s.0.iter().map(inverse).collect::<Option<Vec<_>>>()?);
        let x_a_sinv: Vec<BlockMat> = self
            .a
            .iter()
            .map(|aj| {
                BlockMat(
                    x.0.iter()
                        .zip(&aj.0)
                        .zip(&s_inv.0)
                        .map(|((xb, ab), sb)| mul3(xb, ab, sb))
                        .collect(),
                )
            })
            .collect();
        let m = self.a.len();
        let mut schur = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let v = self.a[i].inner(&x_a_sinv[j]);
                schur[(i, j)] = v;
                schur[(j, i)] = v;
            }
        }
        let schur = Cholesky::new(schur)?;
        Some(Factors {
            s_inv,
            x_a_sinv,
            schur,
        })
    }

    /// Solves the Newton system for target `X S = σμI - corr`.
    fn direction(
        &self,
        x: &BlockMat,
        rp: &DVector<f64>,
        rd: &BlockMat,
        f: &Factors,
        sigma_mu: f64,
        corr: Option<&BlockMat>,
    ) -> Direction {
        // K = (σμ I - X S - corr) S⁻¹ - X Rd S⁻¹ = σμ S⁻¹ - X - corr S⁻¹ - X Rd S⁻¹
        let mut k = f.s_inv.clone();
        for b in &mut k.0 {
            match b {
                Block::Herm(m) => *m *= Complex64::new(sigma_mu, 0.0),
                Block::Diag(v) => *v *= sigma_mu,
            }
        }
        k.axpy(-1.0, x);
        if let Some(c) = corr {
            k.axpy(-1.0, &blockmat_mul(c, &f.s_inv));
        }
        let x_rd_sinv = BlockMat(
            x.0.iter()
                .zip(&rd.0)
                .zip(&f.s_inv.0)
                .map(|((xb, rb), sb)| mul3(xb, rb, sb))
                .collect(),
        );
        k.axpy(-1.0, &x_rd_sinv);
        let k = hermitize_all(&k);

        let rhs = DVector::from_iterator(
            self.a.len(),
            self.a.iter().zip(rp.iter()).map(|(ai, &r)| r - ai.inner(&k)),
        );
        let mut dy = f.schur.solve(&rhs);

        // dX = K + Σ dy_j X A_j S⁻¹, which equals R S⁻¹ - X dS S⁻¹
        let mut dx = k;
        for (g, &d) in f.x_a_sinv.iter().zip(dy.iter()) {
            dx.axpy(d, g);
        }
        // Iterative refinement: near the optimum the Schur matrix is badly
        // conditioned and the step would otherwise leak primal infeasibility.
        for _ in 0..2 {
            let res = rp - self.apply_a(&dx);
            if !(res.norm() > 1e-15 * (1.0 + rp.norm())) {
                break;
            }
            let fix = f.schur.solve(&res);
            for (g, &d) in f.x_a_sinv.iter().zip(fix.iter()) {
                dx.axpy(d, g);
            }
            dy += fix;
        }
        let mut ds = rd.clone();
        for (ai, &d) in self.a.iter().zip(dy.iter()) {
            ds.axpy(-d, ai);
        }
        let dx = hermitize_all(&dx);
        Direction { dx, dy, ds }
    }
}

const POLISH_STEPS: usize = 3;
const POLISH_FACTOR: f64 = 1e-4;

pub fn sdp_solve(problem: &SdpProblem, settings: &SdpSettings) -> crate::Result<SdpSolution> {
    problem.validate()?;
    let specs = problem.c.specs();
    let n = problem.c.total_dim() as f64;
    let m = problem.a.len();

    let b = DVector::from_column_slice(&problem.b);
    let norm_b = b.norm();
    let norm_c = problem.c.norm();
    let a_norms: Vec<f64> = problem.a.iter().map(BlockMat::norm).collect();

    let x_scale = a_norms
        .iter()
        .zip(problem.b.iter())
        .map(|(na, bi)| n * (1.0 + bi.abs()) / (1.0 + na))
        .fold(10f64.max(n.sqrt()), f64::max);
    let s_scale = a_norms
        .iter()
        .copied()
        .fold(10f64.max(n.sqrt()).max(norm_c), f64::max);

    let mut x = BlockMat::identity(&specs, x_scale);
    let mut s = BlockMat::identity(&specs, s_scale);
    let mut y = DVector::<f64>::zeros(m);

    let status;
    let mut iterations = 0;
    let mut stall = 0;
    let mut prev_merit = f64::INFINITY;
    // Last iterate meeting the tolerances; a few extra steps tighten the
    // complementarity so that rank-one optima come out numerically rank one.
    let mut converged: Option<(BlockMat, DVector<f64>, BlockMat)> = None;
    let mut polish = 0;

    let summary = |x: &BlockMat, y: &DVector<f64>, s: &BlockMat| {
        let rp = &b - problem.apply_a(x);
        let mut rd = problem.c.clone();
        rd.axpy(-1.0, &problem.apply_at(y));
        rd.axpy(-1.0, s);
        let pobj = problem.c.inner(x);
        let dobj = b.dot(y);
        let xs = x.inner(s);
        let denom = 1.0 + pobj.abs() + dobj.abs();
        let gap = (pobj - dobj).abs().max(xs) / denom;
        let pinf = rp.norm() / (1.0 + norm_b);
        let dinf = rd.norm() / (1.0 + norm_c);
        (rp, rd, pobj, dobj, gap, pinf, dinf, xs)
    };

    loop {
        let (rp, rd, pobj, dobj, gap, pinf, dinf, xs) = summary(&x, &y, &s);

        if gap <= settings.gap_tol && pinf <= settings.feas_tol && dinf <= settings.feas_tol {
            converged = Some((x.clone(), y.clone(), s.clone()));
            if polish >= POLISH_STEPS || gap <= settings.gap_tol * POLISH_FACTOR {
                status = SdpStatus::Optimal;
                break;
            }
            polish += 1;
        } else if converged.is_some() {
            status = SdpStatus::Optimal;
            break;
        }
        // Infeasibility certificates from diverging iterates.
        if dobj > 0.0 {
            let mut aty_s = problem.apply_at(&y);
            aty_s.axpy(1.0, &s);
            if aty_s.norm() / dobj < 1e-8 && dobj > 1e8 * (1.0 + norm_c) {
                status = SdpStatus::PrimalInfeasible;
                break;
            }
        }
        if pobj < 0.0 {
            let ax = problem.apply_a(&x);
            if ax.norm() / -pobj < 1e-8 && -pobj > 1e8 * (1.0 + norm_b) {
                status = SdpStatus::DualInfeasible;
                break;
            }
        }
        if iterations >= settings.max_iter {
            status = SdpStatus::MaxIterations;
            break;
        }

        let merit = gap.max(pinf).max(dinf);
        if merit > 0.9 * prev_merit {
            stall += 1;
        } else {
            stall = 0;
        }
        prev_merit = prev_merit.min(merit);
        if stall >= 8 {
            status = SdpStatus::Stalled;
            break;
        }

        let mu = xs / n;
        let Some(f) = problem.factor(&x, &s) else {
            status = SdpStatus::Stalled;
            break;
        };

        // predictor
        let aff = problem.direction(&x, &rp, &rd, &f, 0.0, None);
        let ap = max_step_all(&x, &aff.dx).min(1.0);
        let ad = max_step_all(&s, &aff.ds).min(1.0);
        let mut x_aff = x.clone();
        x_aff.axpy(ap, &aff.dx);
        let mut s_aff = s.clone();
        s_aff.axpy(ad, &aff.ds);
        let mu_aff = x_aff.inner(&s_aff) / n;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // corrector
        let corr = blockmat_mul(&aff.dx, &aff.ds);
        let dir = problem.direction(&x, &rp, &rd, &f, sigma * mu, Some(&corr));
        let gamma = 0.9 + 0.09 * ap.min(ad);
        let ap = (gamma * max_step_all(&x, &dir.dx)).min(1.0);
        let ad = (gamma * max_step_all(&s, &dir.ds)).min(1.0);
        if ap < 1e-12 && ad < 1e-12 {
            status = SdpStatus::Stalled;
            break;
        }
        x.axpy(ap, &dir.dx);
        y.axpy(ad, &dir.dy, 1.0);
        s.axpy(ad, &dir.ds);
        iterations += 1;
    }

    let mut status = status;
    if let Some((cx, cy, cs)) = converged {
        let (_, _, _, _, gap, pinf, dinf, _) = summary(&x, &y, &s);
        let still = gap <= settings.gap_tol && pinf <= settings.feas_tol && dinf <= settings.feas_tol;
        if !(status == SdpStatus::Optimal && still) {
            (x, y, s) = (cx, cy, cs);
        }
        status = SdpStatus::Optimal;
    }
    let (_, _, pobj, dobj, gap, pinf, dinf, _) = summary(&x, &y, &s);
    Ok(SdpSolution {
        status,
        x,
        y,
        s,
        primal_obj: pobj,
        dual_obj: dobj,
        rel_gap: gap,
        primal_infeas: pinf,
        dual_infeas: dinf,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigh_desc, outer, cvec_from_parts};

    fn herm_from(n: usize, seed: u64) -> CMat {
        // deterministic pseudo-random Hermitian matrix
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = Complex64::new(next(), next());
            }
        }
        hermitize(&m)
    }

    #[test]
    fn spectral_identity() {
        for (n, seed) in [(2, 1), (4, 2), (8, 3), (16, 4)] {
            let cmat = herm_from(n, seed);
            let spec = [BlockSpec::Hermitian(n)];
            // maximize tr(CX) == minimize tr(-CX)
            let problem = SdpProblem {
                c: BlockMat(vec![Block::Herm(-cmat.clone())]),
                a: vec![BlockMat::identity(&spec, 1.0)],
                b: vec![1.0],
            };
            let sol = sdp_solve(&problem, &SdpSettings::default()).unwrap();
            assert_eq!(sol.status, SdpStatus::Optimal);
            let lmax = eigh_desc(&cmat).0[0];
            assert!((-sol.primal_obj - lmax).abs() < 1e-7 * (1.0 + lmax.abs()), "n={n}");
            assert!(
                (sol.primal_obj - sol.dual_obj).abs() <= 1e-8 * (1.0 + sol.primal_obj.abs())
            );
        }
    }

    #[test]
    fn mixed_blocks_lp_part() {
        // minimize x1 + 2 x2 s.t. x1 + x2 = 1, x >= 0  -> 1
        let spec = [BlockSpec::NonNeg(2)];
        let problem = SdpProblem {
            c: BlockMat(vec![Block::Diag(DVector::from_vec(vec![1.0, 2.0]))]),
            a: vec![BlockMat(vec![Block::Diag(DVector::from_vec(vec![1.0, 1.0]))])],
            b: vec![1.0],
        };
        let sol = sdp_solve(&problem, &SdpSettings::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.primal_obj - 1.0).abs() < 1e-8);
        let _ = spec;
    }

    #[test]
    fn detects_primal_infeasibility() {
        // tr(X) = -1 with X PSD has no solution
        let spec = [BlockSpec::Hermitian(2)];
        let problem = SdpProblem {
            c: BlockMat::identity(&spec, 1.0),
            a: vec![BlockMat::identity(&spec, 1.0)],
            b: vec![-1.0],
        };
        let sol = sdp_solve(&problem, &SdpSettings::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::PrimalInfeasible);
    }

    #[test]
    fn rank_one_data_max_quad_form() {
        // maximize g^H X g s.t. tr X = 1 -> |g|^2, X = g g^H / |g|^2
        let g = cvec_from_parts(&[(1.0, 2.0), (-0.5, 0.3), (0.1, -0.9)]);
        let spec = [BlockSpec::Hermitian(3)];
        let problem = SdpProblem {
            c: BlockMat(vec![Block::Herm(-outer(&g))]),
            a: vec![BlockMat::identity(&spec, 1.0)],
            b: vec![1.0],
        };
        let sol = sdp_solve(&problem, &SdpSettings::default()).unwrap();
        assert!((-sol.primal_obj - g.norm_squared()).abs() < 1e-7 * g.norm_squared());
        let (vals, _) = eigh_desc(sol.x.0[0].as_herm());
        assert!(vals[1] / vals[0] < 1e-6);
    }

    #[test]
    fn deterministic() {
        let cmat = herm_from(4, 9);
        let spec = [BlockSpec::Hermitian(4)];
        let problem = SdpProblem {
            c: BlockMat(vec![Block::Herm(cmat)]),
            a: vec![BlockMat::identity(&spec, 1.0)],
            b: vec![1.0],
        };
        let a = sdp_solve(&problem, &SdpSettings::default()).unwrap();
        let b = sdp_solve(&problem, &SdpSettings::default()).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.primal_obj.to_bits(), b.primal_obj.to_bits());
    }
}
