use std::collections::BTreeMap;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Scheme};
use crate::channel::{sample_channel, Apv, ChannelRealization, Position2D, SPACING_RTOL};
use crate::inner::{recover_beamformers, solve_inner, InnerProblem, SolveStatus, SolverTolerances};
use crate::outer::{
    build_grid, fpa_apv, initial_apv, pso_baseline, sequential_search, time_sharing_slots_per_slot,
    SamplingGrid, SearchSettings,
};
use crate::rates::{
    multicast_rate, scale, single_ma_position_search, time_sharing_slots, two_user_max_min, SlotRates, TsApvMode,
};
use crate::{Error, Result};

/// One row of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub scheme: Scheme,
    pub trial: usize,
    pub seed: u64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "A_over_lambda")]
    pub a_over_lambda: f64,
    #[serde(rename = "r_ms_bits")]
    pub r_ms: f64,
    #[serde(rename = "Rc_bits")]
    pub rc: Option<f64>,
    #[serde(rename = "R0_bits")]
    pub r0: Option<f64>,
    pub status: SolveStatus,
    pub elapsed_ms: Option<f64>,
    pub apv_json: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub r_ms: f64,
    /// Mean and standard deviation over the feasible trials.
    pub mean_rc: Option<f64>,
    pub std_rc: Option<f64>,
    pub feasible_fraction: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionCurve {
    pub scheme: Scheme,
    pub points: Vec<CurvePoint>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepOutput {
    pub records: Vec<TrialRecord>,
    pub curves: Vec<RegionCurve>,
    /// Trials in which time sharing beat PHY-SI at some requirement.
    pub crossover_trials: Vec<usize>,
}

/// Per-trial movable-array placements keyed by requirement, carried between
/// sweep values as warm starts.
pub type WarmStarts = Vec<BTreeMap<u64, Apv>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    M,
    A,
    N,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "M" | "m" => Ok(SweepAxis::M),
            "A" | "a" => Ok(SweepAxis::A),
            "N" | "n" => Ok(SweepAxis::N),
            other => Err(Error::Config(format!("unknown sweep axis {other:?}"))),
        }
    }
}

impl SweepAxis {
    pub fn apply(&self, cfg: &ExperimentConfig, value: f64) -> Result<ExperimentConfig> {
        let mut c = cfg.clone();
        let count = || {
            if value >= 1.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(Error::Config(format!("{self:?} sweep values must be positive integers, got {value}")))
            }
        };
        match self {
            SweepAxis::M => c.m = count()?,
            SweepAxis::N => c.n = count()?,
            SweepAxis::A => c.a_over_lambda = value,
        }
        c.validate()?;
        Ok(c)
    }
}

struct Outcome {
    status: SolveStatus,
    rc: Option<f64>,
    r0: Option<f64>,
    apv_json: String,
}

struct Trial<'a> {
    cfg: &'a ExperimentConfig,
    index: usize,
    channel: ChannelRealization,
    power: f64,
    noise: f64,
    tol: SolverTolerances,
    settings: SearchSettings,
    fpa: Apv,
}

fn key(r: f64) -> u64 {
    r.to_bits()
}

impl<'a> Trial<'a> {
    fn new(cfg: &'a ExperimentConfig, index: usize) -> Result<Self> {
        let scenario = cfg.scenario();
        let channel = sample_channel(&scenario, cfg.seed, index as u64);
        let grid = build_grid(cfg.region_size(), cfg.m)?;
        let mut settings = SearchSettings::new(grid, cfg.d_min());
        settings.max_rounds = cfg.max_rounds;
        Ok(Trial {
            cfg,
            index,
            power: scenario.tx_power(),
            noise: scenario.noise_power(),
            tol: cfg.tolerances(),
            fpa: fpa_apv(cfg.n, scenario.wavelength()),
            channel,
            settings,
        })
    }

    fn grid(&self) -> &SamplingGrid {
        &self.settings.grid
    }

    fn rng(&self, salt: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
        rng.set_stream(((self.index as u64) << 20) ^ salt);
        rng
    }

    fn record(&self, scheme: Scheme, n: usize, r_ms: f64, out: Outcome, elapsed: Option<f64>) -> TrialRecord {
        TrialRecord {
            scheme,
            trial: self.index,
            seed: self.cfg.seed,
            n,
            m: self.cfg.m,
            a_over_lambda: self.cfg.a_over_lambda,
            r_ms,
            rc: out.rc,
            r0: out.r0,
            status: out.status,
            elapsed_ms: elapsed,
            apv_json: out.apv_json,
        }
    }

    fn timed<T>(&self, f: impl FnOnce() -> T) -> (T, Option<f64>) {
        let start = Instant::now();
        let v = f();
        let ms = self.cfg.record_timing.then(|| start.elapsed().as_secs_f64() * 1e3);
        (v, ms)
    }

    fn problem(&self, apv: &Apv, r_ms: f64) -> InnerProblem {
        let (h1, h2) = self.channel.channels(apv);
        InnerProblem {
            h1,
            h2,
            power_budget: self.power,
            multicast_req: r_ms,
            noise: self.noise,
        }
    }

    fn objective_at(&self, apv: &Apv, r_ms: f64) -> Option<f64> {
        let sol = solve_inner(&self.problem(apv, r_ms), &self.tol);
        (sol.status == SolveStatus::Optimal).then_some(sol.objective)
    }

    fn outcome(&self, apv: &Apv, r_ms: f64) -> Outcome {
        let problem = self.problem(apv, r_ms);
        let sol = solve_inner(&problem, &self.tol);
        let apv_json = apv.to_json();
        if sol.status != SolveStatus::Optimal {
            return Outcome {
                status: sol.status,
                rc: None,
                r0: None,
                apv_json,
            };
        }
        let r0 = match recover_beamformers(&sol, &problem, &self.tol) {
            Ok(rec) => {
                if rec.rank_warning {
                    log::warn!("trial {}: covariance not rank one at r_ms = {r_ms}", self.index);
                }
                let bf = rec.beamformers;
                multicast_rate(&problem.h1, &problem.h2, &bf.w0, &bf.wc, self.noise).ok()
            }
            Err(_) => None,
        };
        Outcome {
            status: SolveStatus::Optimal,
            rc: Some(sol.objective.max(1.0).log2()),
            r0,
            apv_json,
        }
    }

    fn fpa_capacity(&self) -> f64 {
        let (h1, h2) = self.channel.channels(&self.fpa);
        let g1 = scale(&h1, self.power, self.noise);
        let g2 = scale(&h2, self.power, self.noise);
        (1.0 + two_user_max_min(&g1, &g2).1).log2()
    }

    /// Absolute grid merged with the relative points below `cap_bits`.
    fn requirements(&self, cap_bits: f64) -> Vec<f64> {
        let mut grid = self.cfg.r_ms_grid.clone();
        let p = self.cfg.relative_points;
        let top = self.cfg.relative_cap * cap_bits;
        for k in 0..p {
            let frac = if p == 1 { 0.0 } else { k as f64 / (p - 1) as f64 };
            grid.push(top * frac);
        }
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        grid
    }

    fn feasible(&self, apv: &Apv) -> bool {
        apv.len() == self.cfg.n && apv.is_feasible(self.grid().region_size, self.settings.d_min)
    }

    /// Grows or trims a placement to `N` antennas, adding fixed-array
    /// positions first and then grid points nearest the centre.
    fn resize(&self, apv: &Apv) -> Apv {
        let n = self.cfg.n;
        let mut pos: Vec<Position2D> = apv.positions.iter().take(n).copied().collect();
        let limit = self.settings.d_min * (1.0 - SPACING_RTOL);
        let mut extra: Vec<Position2D> = self.fpa.positions.clone();
        let mut by_center = self.grid().points.clone();
        by_center.sort_by(|a, b| {
            a.distance(&Position2D::ORIGIN)
                .total_cmp(&b.distance(&Position2D::ORIGIN))
        });
        extra.extend(by_center);
        for p in extra {
            if pos.len() >= n {
                break;
            }
            if pos.iter().all(|q| q.distance(&p) >= limit) {
                pos.push(p);
            }
        }
        Apv::new(pos)
    }

    /// Sequential search at every requirement, from the largest down, each
    /// started from the best of: the carried placement, the placement found
    /// at the next larger requirement, and the fixed array.
    fn run_ma(&self, reqs: &[f64], carried: Option<&BTreeMap<u64, Apv>>) -> Result<Vec<(f64, Outcome, Apv, Option<f64>)>> {
        let mut out = Vec::with_capacity(reqs.len());
        let mut previous: Option<Apv> = None;
        for &r in reqs.iter().rev() {
            let (res, ms) = self.timed(|| -> Result<(Outcome, Apv)> {
                let mut starts: Vec<Apv> = Vec::new();
                if let Some(a) = carried.and_then(|c| c.get(&key(r))) {
                    starts.push(self.resize(a));
                }
                if let Some(p) = &previous {
                    starts.push(p.clone());
                }
                starts.push(self.fpa.clone());
                starts.retain(|a| self.feasible(a));
                if starts.is_empty() {
                    let mut rng = self.rng(1);
                    starts.push(initial_apv(self.grid(), self.cfg.n, self.settings.d_min, &mut rng)?);
                }
                let mut best = starts[0].clone();
                let mut best_obj = f64::NEG_INFINITY;
                for s in &starts {
                    if let Some(v) = self.objective_at(s, r) {
                        if v > best_obj {
                            best_obj = v;
                            best = s.clone();
                        }
                    }
                }
                let st = sequential_search(&self.channel, &self.settings, self.power, r, &best, &self.tol)?;
                let outcome = if st.status == SolveStatus::Optimal {
                    self.outcome(&st.apv, r)
                } else {
                    Outcome {
                        status: SolveStatus::Infeasible,
                        rc: None,
                        r0: None,
                        apv_json: st.apv.to_json(),
                    }
                };
                Ok((outcome, st.apv))
            });
            let (outcome, apv) = res?;
            previous = Some(apv.clone());
            out.push((r, outcome, apv, ms));
        }
        out.reverse();
        Ok(out)
    }

    fn ts_outcome(slots: &SlotRates, r: f64, apv_json: String) -> Outcome {
        match slots.secrecy_at(r) {
            Some(rc) => Outcome {
                status: SolveStatus::Optimal,
                rc: Some(rc),
                r0: Some(r),
                apv_json,
            },
            None => Outcome {
                status: SolveStatus::Infeasible,
                rc: None,
                r0: None,
                apv_json,
            },
        }
    }

    fn run(&self, carried: Option<&BTreeMap<u64, Apv>>) -> Result<(Vec<TrialRecord>, BTreeMap<u64, Apv>)> {
        let reqs = self.requirements(self.fpa_capacity());
        let n = self.cfg.n;
        let mut records = Vec::new();
        let mut placements = BTreeMap::new();
        for &scheme in &self.cfg.schemes {
            match scheme {
                Scheme::Fpa => {
                    for &r in &reqs {
                        let (o, ms) = self.timed(|| self.outcome(&self.fpa, r));
                        records.push(self.record(scheme, n, r, o, ms));
                    }
                }
                Scheme::Ma => {
                    for (r, o, apv, ms) in self.run_ma(&reqs, carried)? {
                        placements.insert(key(r), apv);
                        records.push(self.record(scheme, n, r, o, ms));
                    }
                }
                Scheme::Ts => {
                    let start = if self.feasible(&self.fpa) {
                        self.fpa.clone()
                    } else {
                        initial_apv(self.grid(), n, self.settings.d_min, &mut self.rng(2))?
                    };
                    let (ts, ms) =
                        self.timed(|| time_sharing_slots_per_slot(&self.channel, self.power, &self.settings, &start));
                    let ts = ts?;
                    let apvs = format!(
                        "{{\"secrecy\":{},\"multicast\":{}}}",
                        ts.secrecy_apv.to_json(),
                        ts.multicast_apv.to_json()
                    );
                    for &r in &reqs {
                        records.push(self.record(scheme, n, r, Self::ts_outcome(&ts.slots, r, apvs.clone()), ms));
                    }
                }
                Scheme::Pso => {
                    let pso = self.cfg.pso();
                    for (i, &r) in reqs.iter().enumerate() {
                        let (res, ms) = self.timed(|| {
                            let mut rng = self.rng(1000 + i as u64);
                            pso_baseline(
                                &self.channel,
                                n,
                                self.power,
                                r,
                                self.grid().region_size,
                                self.settings.d_min,
                                &pso,
                                &self.tol,
                                &mut rng,
                            )
                        });
                        let res = res?;
                        let o = if res.feasible {
                            self.outcome(&res.apv, r)
                        } else {
                            Outcome {
                                status: SolveStatus::Infeasible,
                                rc: None,
                                r0: None,
                                apv_json: res.apv.to_json(),
                            }
                        };
                        records.push(self.record(scheme, n, r, o, ms));
                    }
                }
                Scheme::SingleMa => {
                    for &r in &reqs {
                        let (o, ms) = self.timed(|| self.single_ma_outcome(r));
                        records.push(self.record(scheme, 1, r, o, ms));
                    }
                }
            }
        }
        Ok((records, placements))
    }

    fn single_ma_outcome(&self, r: f64) -> Outcome {
        match single_ma_position_search(&self.channel, self.grid(), self.power, r) {
            Ok((p, rc)) => Outcome {
                status: SolveStatus::Optimal,
                rc: Some(rc.max(0.0)),
                r0: Some(r),
                apv_json: Apv::new(vec![p]).to_json(),
            },
            Err(_) => Outcome {
                status: SolveStatus::Infeasible,
                rc: None,
                r0: None,
                apv_json: "[]".into(),
            },
        }
    }
}

#[cfg(feature = "parallel")]
fn map_trials<T: Send>(trials: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    (0..trials).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_trials<T>(trials: usize, f: impl Fn(usize) -> T) -> Vec<T> {
    (0..trials).map(f).collect()
}

/// Canonical order: scheme, trial, requirement.
pub fn sort_records(records: &mut [TrialRecord]) {
    records.sort_by(|a, b| {
        (a.scheme, a.n, a.m, a.trial)
            .cmp(&(b.scheme, b.n, b.m, b.trial))
            .then(a.a_over_lambda.total_cmp(&b.a_over_lambda))
            .then(a.r_ms.total_cmp(&b.r_ms))
    });
}

/// Mean curves over the absolute requirement grid.
pub fn region_curves(records: &[TrialRecord], schemes: &[Scheme], grid: &[f64]) -> Vec<RegionCurve> {
    schemes
        .iter()
        .map(|&scheme| {
            let points = grid
                .iter()
                .map(|&r| {
                    let rows: Vec<&TrialRecord> =
                        records.iter().filter(|x| x.scheme == scheme && x.r_ms == r).collect();
                    let vals: Vec<f64> = rows.iter().filter_map(|x| x.rc).collect();
                    let (mean, std) = if vals.is_empty() {
                        (None, None)
                    } else {
                        let m = vals.iter().sum::<f64>() / vals.len() as f64;
                        let v = vals.iter().map(|x| (x - m).powi(2)).sum::<f64>() / vals.len() as f64;
                        (Some(m), Some(v.sqrt()))
                    };
                    CurvePoint {
                        r_ms: r,
                        mean_rc: mean,
                        std_rc: std,
                        feasible_fraction: if rows.is_empty() {
                            0.0
                        } else {
                            vals.len() as f64 / rows.len() as f64
                        },
                        trials: rows.len(),
                    }
                })
                .collect();
            RegionCurve { scheme, points }
        })
        .collect()
}

/// Means of two schemes at `r_ms` over the trials where both are feasible.
pub fn paired_means(records: &[TrialRecord], a: Scheme, b: Scheme, r_ms: f64) -> Option<(f64, f64, usize)> {
    let lookup = |s: Scheme| -> BTreeMap<usize, f64> {
        records
            .iter()
            .filter(|x| x.scheme == s && x.r_ms == r_ms)
            .filter_map(|x| x.rc.map(|v| (x.trial, v)))
            .collect()
    };
    let (ma, mb) = (lookup(a), lookup(b));
    let common: Vec<(f64, f64)> = ma.iter().filter_map(|(t, va)| mb.get(t).map(|vb| (*va, *vb))).collect();
    if common.is_empty() {
        return None;
    }
    let k = common.len() as f64;
    Some((
        common.iter().map(|c| c.0).sum::<f64>() / k,
        common.iter().map(|c| c.1).sum::<f64>() / k,
        common.len(),
    ))
}

/// Rate-region sweep over the configured requirement grid.
pub fn run_region_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    run_region_sweep_warm(cfg, None).map(|(out, _)| out)
}

/// Region sweep whose movable-array searches also start from `warm`.
pub fn run_region_sweep_warm(cfg: &ExperimentConfig, warm: Option<&WarmStarts>) -> Result<(SweepOutput, WarmStarts)> {
    cfg.validate()?;
    let results = map_trials(cfg.trials, |t| {
        let trial = Trial::new(cfg, t)?;
        trial.run(warm.and_then(|w| w.get(t)))
    });
    let mut records = Vec::new();
    let mut placements = Vec::with_capacity(cfg.trials);
    for r in results {
        let (rec, pl) = r?;
        records.extend(rec);
        placements.push(pl);
    }
    sort_records(&mut records);
    let curves = region_curves(&records, &cfg.schemes, &cfg.r_ms_grid);
    Ok((
        SweepOutput {
            records,
            curves,
            crossover_trials: Vec::new(),
        },
        placements,
    ))
}

/// One region sweep per value along `axis`, with identical channel draws and
/// each value's movable-array searches warm-started from the previous value.
pub fn run_parameter_sweep(cfg: &ExperimentConfig, axis: SweepAxis, values: &[f64]) -> Result<Vec<(f64, SweepOutput)>> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let configs: Vec<ExperimentConfig> = values.iter().map(|&v| axis.apply(cfg, v)).collect::<Result<_>>()?;
    let mut warm: Option<WarmStarts> = None;
    let mut out = Vec::with_capacity(values.len());
    for (v, c) in values.iter().zip(&configs) {
        let (res, placements) = run_region_sweep_warm(c, warm.as_ref())?;
        warm = Some(placements);
        out.push((*v, res));
    }
    Ok(out)
}

/// Single movable antenna: PHY-SI with exhaustive placement against time
/// sharing with the placement chosen per slot.
pub fn run_single_ma_demo(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    let mut cfg = cfg.clone();
    cfg.n = 1;
    cfg.schemes = vec![Scheme::SingleMa, Scheme::Ts];
    cfg.validate()?;
    let cfg = &cfg;
    let results = map_trials(cfg.trials, |t| -> Result<(Vec<TrialRecord>, bool)> {
        let trial = Trial::new(cfg, t)?;
        let mode = TsApvMode::SinglePerSlot(trial.grid().clone());
        let slots = time_sharing_slots(&trial.channel, &mode, trial.power)?;
        let reqs = trial.requirements(slots.multicast);
        let mut records = Vec::new();
        let mut phy = BTreeMap::new();
        for &r in &reqs {
            let (o, ms) = trial.timed(|| trial.single_ma_outcome(r));
            phy.insert(key(r), o.rc);
            records.push(trial.record(Scheme::SingleMa, 1, r, o, ms));
        }
        let mut crossover = false;
        for &r in &reqs {
            let o = Trial::ts_outcome(&slots, r, "[]".into());
            if let (Some(ts), Some(Some(p))) = (o.rc, phy.get(&key(r))) {
                if ts > p + 1e-9 {
                    crossover = true;
                }
            }
            records.push(trial.record(Scheme::Ts, 1, r, o, None));
        }
        Ok((records, crossover))
    });
    let mut records = Vec::new();
    let mut crossover_trials = Vec::new();
    for (t, r) in results.into_iter().enumerate() {
        let (rec, cross) = r?;
        records.extend(rec);
        if cross {
            log::info!("trial {t}: time sharing exceeds PHY-SI at some requirement");
            crossover_trials.push(t);
        }
    }
    sort_records(&mut records);
    let curves = region_curves(&records, &cfg.schemes, &cfg.r_ms_grid);
    Ok(SweepOutput {
        records,
        curves,
        crossover_trials,
    })
}
