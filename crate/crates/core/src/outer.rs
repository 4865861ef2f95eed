//! Antenna placement: sampling grids, sequential per-antenna enumeration, and
//! the fixed-array and particle-swarm baselines.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{Apv, ChannelRealization, Position2D, SPACING_RTOL};
use crate::inner::{solve_inner, InnerProblem, SolveStatus, SolverTolerances};
use crate::linalg::CVec;
use crate::rates::{max_secrecy_ratio, scale, tau, two_user_max_min, SlotRates};
use crate::{Error, Result};

/// `M × M` grid over the square region `[-A/2, A/2]²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingGrid {
    pub region_size: f64,
    pub points_per_dim: usize,
    pub spacing: f64,
    /// Row-major: index `(i-1)·M + (j-1)` holds point `(i, j)`.
    pub points: Vec<Position2D>,
}

pub fn build_grid(region_size: f64, points_per_dim: usize) -> Result<SamplingGrid> {
    if points_per_dim == 0 {
        return Err(Error::Config("grid needs at least one point per dimension".into()));
    }
    if !(region_size > 0.0 && region_size.is_finite()) {
        return Err(Error::Config(format!("region size must be positive, got {region_size}")));
    }
    let m = points_per_dim;
    let spacing = region_size / m as f64;
    let half = region_size / 2.0;
    let coord = |i: usize| -half + i as f64 * region_size / m as f64;
    let mut points = Vec::with_capacity(m * m);
    for i in 1..=m {
        for j in 1..=m {
            points.push(Position2D::new(coord(i), coord(j)));
        }
    }
    Ok(SamplingGrid {
        region_size,
        points_per_dim: m,
        spacing,
        points,
    })
}

impl SamplingGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index of the grid point at `p`, if any, up to rounding.
    pub fn index_of(&self, p: &Position2D) -> Option<usize> {
        let tol = 1e-9 * self.spacing;
        self.points.iter().position(|q| q.distance(p) <= tol)
    }
}

/// Indices of grid points at least `d_min` away from every antenna other than `n`.
pub fn feasible_points(grid: &SamplingGrid, apv: &Apv, n: usize, d_min: f64) -> Result<Vec<usize>> {
    if n >= apv.len() {
        return Err(Error::DimensionMismatch {
            expected: apv.len(),
            got: n,
        });
    }
    let limit = d_min * (1.0 - SPACING_RTOL);
    Ok((0..grid.len())
        .filter(|&i| {
            let p = &grid.points[i];
            apv.positions
                .iter()
                .enumerate()
                .all(|(k, q)| k == n || p.distance(q) >= limit)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSettings {
    pub grid: SamplingGrid,
    pub d_min: f64,
    pub max_rounds: usize,
    /// A round that improves the objective by less than this stops the search.
    pub improvement_tol: f64,
}

impl SearchSettings {
    pub fn new(grid: SamplingGrid, d_min: f64) -> Self {
        SearchSettings {
            grid,
            d_min,
            max_rounds: 5,
            improvement_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchState {
    pub apv: Apv,
    /// Best objective found, `NaN` when no placement was feasible.
    pub objective: f64,
    pub status: SolveStatus,
    /// Completed rounds.
    pub iteration: usize,
    /// Incumbent objective after the start and after every single-antenna step.
    pub history: Vec<f64>,
    pub evaluations: usize,
}

impl SearchState {
    pub fn secrecy_rate(&self) -> Option<f64> {
        (self.status == SolveStatus::Optimal).then(|| self.objective.max(1.0).log2())
    }
}

/// Inner objective with exact pruning: a candidate is only solved when its
/// zero-requirement bound beats `floor` and the requirement is within its
/// multicast capacity. Returns `2^Rc` on success.
pub struct InnerObjective {
    pub power: f64,
    pub noise: f64,
    pub r_ms: f64,
    pub tol: SolverTolerances,
    pub solves: usize,
    pub failures: usize,
}

impl InnerObjective {
    pub fn new(power: f64, noise: f64, r_ms: f64, tol: SolverTolerances) -> Self {
        InnerObjective {
            power,
            noise,
            r_ms,
            tol,
            solves: 0,
            failures: 0,
        }
    }

    pub fn evaluate(&mut self, h1: &CVec, h2: &CVec, floor: f64) -> Option<f64> {
        let g1 = scale(h1, self.power, self.noise);
        let g2 = scale(h2, self.power, self.noise);
        let (_, bound) = max_secrecy_ratio(&g1, &g2);
        if bound <= floor {
            return None;
        }
        let (_, cap) = two_user_max_min(&g1, &g2);
        if tau(self.r_ms) > cap * (1.0 + 1e-9) {
            return None;
        }
        let problem = InnerProblem {
            h1: h1.clone(),
            h2: h2.clone(),
            power_budget: self.power,
            multicast_req: self.r_ms,
            noise: self.noise,
        };
        self.solves += 1;
        let sol = solve_inner(&problem, &self.tol);
        match sol.status {
            SolveStatus::Optimal => Some(sol.objective),
            SolveStatus::Infeasible => None,
            SolveStatus::NumericalFailure => {
                self.failures += 1;
                None
            }
        }
    }
}

/// Sequential search maximising the inner objective.
pub fn sequential_search(
    channel: &ChannelRealization,
    settings: &SearchSettings,
    power: f64,
    r_ms: f64,
    initial: &Apv,
    tol: &SolverTolerances,
) -> Result<SearchState> {
    let mut obj = InnerObjective::new(power, channel.noise_power, r_ms, *tol);
    sequential_search_with(channel, settings, initial, |h1, h2, floor| obj.evaluate(h1, h2, floor))
}

/// Cycles over the antennas, moving each to the best feasible grid point with
/// the others fixed. `objective(h1, h2, floor)` may return `None` for
/// infeasible candidates or for any candidate it can prove is `<= floor`.
/// The current position always stays a candidate, so an off-grid start is
/// never made worse. Ties keep the incumbent, then the first grid point in
/// row-major order.
pub fn sequential_search_with<F>(
    channel: &ChannelRealization,
    settings: &SearchSettings,
    initial: &Apv,
    mut objective: F,
) -> Result<SearchState>
where
    F: FnMut(&CVec, &CVec, f64) -> Option<f64>,
{
    let grid = &settings.grid;
    if initial.is_empty() {
        return Err(Error::Config("initial placement has no antennas".into()));
    }
    if !initial.is_feasible(grid.region_size, settings.d_min) {
        return Err(Error::Config("initial placement violates the region or spacing constraints".into()));
    }
    let entries: Vec<(Complex64, Complex64)> = grid.points.iter().map(|p| channel.entries(p)).collect();
    let (mut h1, mut h2) = channel.channels(initial);
    let mut apv = initial.clone();
    let mut evaluations = 1;
    let mut best = objective(&h1, &h2, f64::NEG_INFINITY);
    let mut history: Vec<f64> = best.into_iter().collect();
    let mut rounds = 0;

    while rounds < settings.max_rounds {
        let round_start = best;
        for n in 0..apv.len() {
            let candidates = feasible_points(grid, &apv, n, settings.d_min)?;
            let (keep1, keep2) = (h1[n], h2[n]);
            let mut choice: Option<usize> = None;
            for i in candidates {
                if grid.points[i] == apv.positions[n] {
                    continue;
                }
                h1[n] = entries[i].0;
                h2[n] = entries[i].1;
                evaluations += 1;
                let floor = best.unwrap_or(f64::NEG_INFINITY);
                if let Some(v) = objective(&h1, &h2, floor) {
                    if v > floor {
                        best = Some(v);
                        choice = Some(i);
                    }
                }
            }
            match choice {
                Some(i) => {
                    apv.positions[n] = grid.points[i];
                    h1[n] = entries[i].0;
                    h2[n] = entries[i].1;
                }
                None => {
                    h1[n] = keep1;
                    h2[n] = keep2;
                }
            }
            if let Some(v) = best {
                history.push(v);
            }
        }
        rounds += 1;
        let improved = match (round_start, best) {
            (Some(a), Some(b)) => b - a >= settings.improvement_tol * a.abs().max(1.0),
            (None, Some(_)) => true,
            _ => false,
        };
        if !improved {
            break;
        }
    }

    Ok(SearchState {
        apv,
        objective: best.unwrap_or(f64::NAN),
        status: if best.is_some() {
            SolveStatus::Optimal
        } else {
            SolveStatus::Infeasible
        },
        iteration: rounds,
        history,
        evaluations,
    })
}

/// Feasible starting placement: the grid point nearest the centre for one
/// antenna, otherwise the sub-lattice points spaced at least `d_min` apart
/// that lie nearest the centre, falling back to random rejection sampling.
pub fn initial_apv<R: Rng>(grid: &SamplingGrid, n: usize, d_min: f64, rng: &mut R) -> Result<Apv> {
    if n == 0 {
        return Err(Error::Config("need at least one antenna".into()));
    }
    let by_center = |idx: &[usize]| {
        let mut idx = idx.to_vec();
        idx.sort_by(|&a, &b| {
            let da = grid.points[a].distance(&Position2D::ORIGIN);
            let db = grid.points[b].distance(&Position2D::ORIGIN);
            da.total_cmp(&db).then(a.cmp(&b))
        });
        idx
    };
    let m = grid.points_per_dim;
    let stride = ((d_min / grid.spacing) * (1.0 - SPACING_RTOL)).ceil().max(1.0) as usize;
    let lattice: Vec<usize> = (0..m)
        .step_by(stride)
        .flat_map(|i| (0..m).step_by(stride).map(move |j| i * m + j))
        .collect();
    if lattice.len() >= n {
        let chosen = by_center(&lattice);
        let apv = Apv::new(chosen[..n].iter().map(|&i| grid.points[i]).collect());
        if apv.satisfies_spacing(d_min) {
            return Ok(apv);
        }
    }
    const ATTEMPTS: usize = 10_000;
    for _ in 0..ATTEMPTS {
        let mut picked: Vec<Position2D> = Vec::with_capacity(n);
        for _ in 0..n {
            let p = grid.points[rng.random_range(0..grid.len())];
            if picked.iter().all(|q| q.distance(&p) >= d_min * (1.0 - SPACING_RTOL)) {
                picked.push(p);
            }
        }
        if picked.len() == n {
            return Ok(Apv::new(picked));
        }
    }
    Err(Error::Config(format!(
        "could not place {n} antennas at spacing {d_min} on a {m}x{m} grid"
    )))
}

/// Centred uniform linear array along x with half-wavelength spacing.
pub fn fpa_apv(n: usize, wavelength: f64) -> Apv {
    let d = wavelength / 2.0;
    let offset = (n as f64 - 1.0) / 2.0;
    Apv::new((0..n).map(|i| Position2D::new((i as f64 - offset) * d, 0.0)).collect())
}

/// Fixed-array baseline: the inner problem at the centred half-wavelength ULA.
pub fn fpa_baseline(
    channel: &ChannelRealization,
    n: usize,
    power: f64,
    r_ms: f64,
    tol: &SolverTolerances,
) -> (Apv, SolveStatus, f64) {
    let apv = fpa_apv(n, channel.wavelength);
    let (h1, h2) = channel.channels(&apv);
    let problem = InnerProblem {
        h1,
        h2,
        power_budget: power,
        multicast_req: r_ms,
        noise: channel.noise_power,
    };
    let sol = solve_inner(&problem, tol);
    (apv, sol.status, sol.objective)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsoParams {
    pub particles: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub penalty: f64,
}

impl Default for PsoParams {
    fn default() -> Self {
        PsoParams {
            particles: 20,
            iterations: 50,
            inertia: 0.7,
            cognitive: 1.5,
            social: 1.5,
            penalty: 1e3,
        }
    }
}

impl PsoParams {
    pub fn validate(&self) -> Result<()> {
        if self.particles == 0 {
            return Err(Error::Config("PSO needs at least one particle".into()));
        }
        let finite = [self.inertia, self.cognitive, self.social, self.penalty];
        if finite.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Config("PSO weights must be finite and nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsoResult {
    pub apv: Apv,
    /// Secrecy rate in bits for a feasible result, otherwise the best penalised fitness.
    pub fitness: f64,
    pub feasible: bool,
    pub evaluations: usize,
}

/// Penalised PSO fitness: the secrecy rate (or `-1` when the multicast
/// requirement cannot be met) minus `μ Σ max(0, D_min - dist)²`.
/// The flag reports whether the placement is fully feasible.
pub fn pso_fitness(
    channel: &ChannelRealization,
    apv: &Apv,
    power: f64,
    r_ms: f64,
    d_min: f64,
    penalty: f64,
    tol: &SolverTolerances,
) -> (f64, bool) {
    let mut violation = 0.0;
    for (i, a) in apv.positions.iter().enumerate() {
        for b in &apv.positions[i + 1..] {
            violation += (d_min - a.distance(b)).max(0.0).powi(2);
        }
    }
    let (h1, h2) = channel.channels(apv);
    let problem = InnerProblem {
        h1,
        h2,
        power_budget: power,
        multicast_req: r_ms,
        noise: channel.noise_power,
    };
    let sol = solve_inner(&problem, tol);
    let (rate, ok) = match sol.secrecy_rate() {
        Some(r) => (r, true),
        None => (-1.0, false),
    };
    let spacing_ok = apv.satisfies_spacing(d_min);
    (rate - penalty * violation, ok && spacing_ok)
}

/// Particle swarm over the `2N` antenna coordinates, clipped to the region.
#[allow(clippy::too_many_arguments)]
pub fn pso_baseline<R: Rng>(
    channel: &ChannelRealization,
    n: usize,
    power: f64,
    r_ms: f64,
    region_size: f64,
    d_min: f64,
    params: &PsoParams,
    tol: &SolverTolerances,
    rng: &mut R,
) -> Result<PsoResult> {
    params.validate()?;
    let dim = 2 * n;
    let half = region_size / 2.0;
    let vmax = region_size / 4.0;
    let to_apv = |x: &[f64]| Apv::new(x.chunks(2).map(|c| Position2D::new(c[0], c[1])).collect());
    let fit = |x: &[f64]| pso_fitness(channel, &to_apv(x), power, r_ms, d_min, params.penalty, tol);

    let mut pos: Vec<Vec<f64>> = (0..params.particles)
        .map(|_| (0..dim).map(|_| rng.random_range(-half..=half)).collect())
        .collect();
    let mut vel: Vec<Vec<f64>> = (0..params.particles)
        .map(|_| (0..dim).map(|_| rng.random_range(-vmax..=vmax) / 2.0).collect())
        .collect();
    let mut evaluations = 0;
    let mut personal: Vec<(Vec<f64>, f64)> = Vec::with_capacity(params.particles);
    let mut global: (Vec<f64>, f64) = (pos[0].clone(), f64::NEG_INFINITY);
    let mut best_feasible: Option<(Vec<f64>, f64)> = None;
    let record = |x: &[f64], f: f64, ok: bool, best_feasible: &mut Option<(Vec<f64>, f64)>| {
        if ok && best_feasible.as_ref().is_none_or(|(_, b)| f > *b) {
            *best_feasible = Some((x.to_vec(), f));
        }
    };
    for x in &pos {
        let (f, ok) = fit(x);
        evaluations += 1;
        record(x, f, ok, &mut best_feasible);
        if f > global.1 {
            global = (x.clone(), f);
        }
        personal.push((x.clone(), f));
    }
    for _ in 0..params.iterations {
        for p in 0..params.particles {
            for d in 0..dim {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                let v = params.inertia * vel[p][d]
                    + params.cognitive * r1 * (personal[p].0[d] - pos[p][d])
                    + params.social * r2 * (global.0[d] - pos[p][d]);
                vel[p][d] = v.clamp(-vmax, vmax);
                pos[p][d] = (pos[p][d] + vel[p][d]).clamp(-half, half);
            }
            let (f, ok) = fit(&pos[p]);
            evaluations += 1;
            record(&pos[p], f, ok, &mut best_feasible);
            if f > personal[p].1 {
                personal[p] = (pos[p].clone(), f);
            }
            if f > global.1 {
                global = (pos[p].clone(), f);
            }
        }
    }
    Ok(match best_feasible {
        Some((x, f)) => PsoResult {
            apv: to_apv(&x),
            fitness: f,
            feasible: true,
            evaluations,
        },
        None => PsoResult {
            apv: to_apv(&global.0),
            fitness: global.1,
            feasible: false,
            evaluations,
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsPlacement {
    pub slots: SlotRates,
    pub secrecy_apv: Apv,
    pub multicast_apv: Apv,
}

/// Time-sharing slot rates with the placement re-optimised for each slot:
/// the secrecy slot maximises the generalized-eigenvalue ratio and the
/// multicast slot maximises the max-min capacity.
pub fn time_sharing_slots_per_slot(
    channel: &ChannelRealization,
    power: f64,
    settings: &SearchSettings,
    initial: &Apv,
) -> Result<TsPlacement> {
    let noise = channel.noise_power;
    let secrecy = sequential_search_with(channel, settings, initial, |h1, h2, _| {
        Some(max_secrecy_ratio(&scale(h1, power, noise), &scale(h2, power, noise)).1)
    })?;
    let multicast = sequential_search_with(channel, settings, initial, |h1, h2, _| {
        Some(1.0 + two_user_max_min(&scale(h1, power, noise), &scale(h2, power, noise)).1)
    })?;
    Ok(TsPlacement {
        slots: SlotRates {
            secrecy: secrecy.objective.log2(),
            multicast: multicast.objective.log2(),
        },
        secrecy_apv: secrecy.apv,
        multicast_apv: multicast.apv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_channel, ScenarioParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scenario() -> (ScenarioParams, ChannelRealization) {
        let params = ScenarioParams::default();
        let ch = sample_channel(&params, 7, 0);
        (params, ch)
    }

    #[test]
    fn grid_examples() {
        let g = build_grid(2.0, 1).unwrap();
        assert_eq!(g.points, vec![Position2D::new(1.0, 1.0)]);
        let g = build_grid(2.0, 2).unwrap();
        let expected = [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)];
        for (p, (x, y)) in g.points.iter().zip(expected) {
            assert_eq!((p.x, p.y), (x, y));
        }
        assert_eq!(g.spacing, 1.0);
        let g = build_grid(3.0, 7).unwrap();
        assert!(g.points.iter().all(|p| p.x > -1.5 && p.x <= 1.5 && p.y > -1.5 && p.y <= 1.5));
        assert!(build_grid(1.0, 0).is_err());
        assert!(build_grid(0.0, 3).is_err());
    }

    #[test]
    fn nine_point_exclusion() {
        let g = build_grid(9.0, 9).unwrap();
        let center = g.points[4 * 9 + 4];
        let apv = Apv::new(vec![Position2D::new(100.0, 100.0), center]);
        let feasible = feasible_points(&g, &apv, 0, 1.5 * g.spacing).unwrap();
        assert_eq!(feasible.len(), 81 - 9);
        let brute = g.points.iter().filter(|p| p.distance(&center) < 1.5 * g.spacing).count();
        assert_eq!(brute, 9);
        assert_eq!(feasible_points(&g, &apv, 0, 0.0).unwrap().len(), 81);
    }

    #[test]
    fn single_point_grid_returns_that_point() {
        let (params, ch) = scenario();
        let g = build_grid(2.0 * params.wavelength(), 1).unwrap();
        let apv = Apv::new(vec![g.points[0]]);
        let settings = SearchSettings::new(g, params.wavelength() / 2.0);
        let tol = SolverTolerances::default();
        let st = sequential_search(&ch, &settings, params.tx_power(), 0.5, &apv, &tol).unwrap();
        assert_eq!(st.apv, apv);
        let (h1, h2) = ch.channels(&apv);
        let p = InnerProblem::new(h1, h2, params.tx_power(), 0.5, params.noise_power()).unwrap();
        assert_eq!(st.objective, solve_inner(&p, &tol).objective);
    }

    #[test]
    fn single_antenna_search_is_full_scan() {
        let (params, ch) = scenario();
        let lambda = params.wavelength();
        let g = build_grid(2.0 * lambda, 8).unwrap();
        let tol = SolverTolerances::default();
        let r_ms = 1.0;
        let mut brute = f64::NEG_INFINITY;
        for p in &g.points {
            let (h1, h2) = ch.channels(&Apv::new(vec![*p]));
            let prob = InnerProblem::new(h1, h2, params.tx_power(), r_ms, params.noise_power()).unwrap();
            let s = solve_inner(&prob, &tol);
            if s.status == SolveStatus::Optimal {
                brute = brute.max(s.objective);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let start = initial_apv(&g, 1, lambda / 2.0, &mut rng).unwrap();
        let settings = SearchSettings::new(g, lambda / 2.0);
        let st = sequential_search(&ch, &settings, params.tx_power(), r_ms, &start, &tol).unwrap();
        assert!((st.objective - brute).abs() <= 1e-7 * brute, "{} vs {}", st.objective, brute);
    }

    #[test]
    fn search_is_monotone_feasible_and_deterministic() {
        let params = ScenarioParams::default();
        let lambda = params.wavelength();
        let tol = SolverTolerances::default();
        for seed in 0..3 {
            let ch = sample_channel(&params, seed, 0);
            let g = build_grid(4.0 * lambda, 8).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let start = initial_apv(&g, 2, lambda / 2.0, &mut rng).unwrap();
            let settings = SearchSettings::new(g, lambda / 2.0);
            let a = sequential_search(&ch, &settings, params.tx_power(), 0.5, &start, &tol).unwrap();
            let b = sequential_search(&ch, &settings, params.tx_power(), 0.5, &start, &tol).unwrap();
            assert_eq!(a, b);
            assert!(a.history.windows(2).all(|w| w[1] >= w[0]));
            assert!(a.objective >= a.history[0]);
            assert!(a.apv.is_feasible(4.0 * lambda, lambda / 2.0));
            assert!(a.iteration <= settings.max_rounds);
        }
    }

    #[test]
    fn initial_placements() {
        let lambda = 0.06;
        let g = build_grid(4.0 * lambda, 20).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let one = initial_apv(&g, 1, lambda / 2.0, &mut rng).unwrap();
        let nearest = g
            .points
            .iter()
            .map(|p| p.distance(&Position2D::ORIGIN))
            .fold(f64::INFINITY, f64::min);
        assert!((one.positions[0].distance(&Position2D::ORIGIN) - nearest).abs() < 1e-15);
        let four = initial_apv(&g, 4, lambda / 2.0, &mut rng).unwrap();
        assert!(four.satisfies_spacing(lambda / 2.0));
        let again = initial_apv(&g, 4, lambda / 2.0, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(four, again);
        let tiny = build_grid(lambda, 2).unwrap();
        assert!(initial_apv(&tiny, 5, lambda, &mut rng).is_err());
    }

    #[test]
    fn fpa_geometry() {
        let lambda = 0.06;
        assert_eq!(fpa_apv(1, lambda).positions, vec![Position2D::ORIGIN]);
        let a = fpa_apv(4, lambda);
        assert!((a.min_pairwise_distance() - lambda / 2.0).abs() < 1e-15);
        assert!(a.satisfies_spacing(lambda / 2.0));
        let cx: f64 = a.positions.iter().map(|p| p.x).sum();
        assert!(cx.abs() < 1e-15);
    }

    #[test]
    fn search_from_fpa_dominates_fpa() {
        let params = ScenarioParams::default();
        let lambda = params.wavelength();
        let tol = SolverTolerances::default();
        for seed in 0..3 {
            let ch = sample_channel(&params, seed, 0);
            let (apv, status, fpa) = fpa_baseline(&ch, 2, params.tx_power(), 0.5, &tol);
            let g = build_grid(4.0 * lambda, 6).unwrap();
            let settings = SearchSettings::new(g, lambda / 2.0);
            let st = sequential_search(&ch, &settings, params.tx_power(), 0.5, &apv, &tol).unwrap();
            if status == SolveStatus::Optimal {
                assert!(st.objective >= fpa);
            }
        }
    }

    #[test]
    fn pso_single_particle_returns_own_fitness() {
        let (params, ch) = scenario();
        let lambda = params.wavelength();
        let tol = SolverTolerances::default();
        let pso = PsoParams {
            particles: 1,
            iterations: 0,
            ..PsoParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let res = pso_baseline(&ch, 1, params.tx_power(), 0.0, 2.0 * lambda, lambda / 2.0, &pso, &tol, &mut rng)
            .unwrap();
        assert!(res.feasible);
        let (f, ok) = pso_fitness(&ch, &res.apv, params.tx_power(), 0.0, lambda / 2.0, pso.penalty, &tol);
        assert!(ok);
        assert_eq!(f, res.fitness);
    }

    #[test]
    fn pso_near_fine_grid_optimum() {
        let (params, ch) = scenario();
        let lambda = params.wavelength();
        let tol = SolverTolerances::default();
        let region = 2.0 * lambda;
        let g = build_grid(region, 40).unwrap();
        let best_grid = g
            .points
            .iter()
            .map(|p| {
                let (h1, h2) = ch.channels(&Apv::new(vec![*p]));
                let prob = InnerProblem::new(h1, h2, params.tx_power(), 0.5, params.noise_power()).unwrap();
                solve_inner(&prob, &tol).secrecy_rate().unwrap_or(f64::NEG_INFINITY)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let pso = PsoParams {
            particles: 8,
            iterations: 15,
            ..PsoParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let res = pso_baseline(&ch, 1, params.tx_power(), 0.5, region, lambda / 2.0, &pso, &tol, &mut rng)
            .unwrap();
        assert!(res.feasible);
        assert!(res.fitness <= best_grid + 0.05, "{} vs {}", res.fitness, best_grid);
    }

    #[test]
    fn per_slot_time_sharing_beats_shared_placement() {
        let params = ScenarioParams::default();
        let lambda = params.wavelength();
        let ch = sample_channel(&params, 11, 0);
        let g = build_grid(4.0 * lambda, 6).unwrap();
        let start = fpa_apv(2, lambda);
        let settings = SearchSettings::new(g, lambda / 2.0);
        let per = time_sharing_slots_per_slot(&ch, params.tx_power(), &settings, &start).unwrap().slots;
        let (h1, h2) = ch.channels(&start);
        let shared = SlotRates::fixed_array(&h1, &h2, params.tx_power(), params.noise_power()).unwrap();
        assert!(per.secrecy >= shared.secrecy - 1e-12);
        assert!(per.multicast >= shared.multicast - 1e-12);
    }
}
