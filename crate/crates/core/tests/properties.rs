mod common;

use common::*;
use ma_physi::channel::{array_response, channel_vector, Apv, PathSpec, Position2D, UserChannel};
use ma_physi::harness::{read_records, write_records, run_region_sweep, ExperimentConfig, Scheme, TrialRecord};
use ma_physi::inner::{recover_beamformers, solve_inner, InnerProblem, SolveStatus, SolverTolerances};
use ma_physi::linalg::CVec;
use ma_physi::los::ula_beam_gain;
use ma_physi::outer::{build_grid, fpa_apv, sequential_search, SearchSettings};
use ma_physi::rates::{
    multicast_only_optimal, secrecy_only_optimal, secrecy_rate, single_ma_power_allocation, single_ma_secrecy_rate,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const LAMBDA: f64 = 0.06;

fn cvec(n: usize) -> impl Strategy<Value = CVec> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), n)
        .prop_map(|v| CVec::from_iterator(v.len(), v.into_iter().map(|(a, b)| Complex64::new(a, b))))
        .prop_filter("nonzero", |v| v.norm() > 1e-3)
}

fn position() -> impl Strategy<Value = Position2D> {
    (-0.3f64..0.3, -0.3f64..0.3).prop_map(|(x, y)| Position2D::new(x, y))
}

fn user() -> impl Strategy<Value = UserChannel> {
    prop::collection::vec((0.0..std::f64::consts::PI, 0.0..std::f64::consts::PI, -1.0f64..1.0, -1.0f64..1.0), 1..6)
        .prop_map(|ps| UserChannel {
            paths: ps
                .into_iter()
                .map(|(elevation, azimuth, re, im)| PathSpec {
                    elevation,
                    azimuth,
                    gain: Complex64::new(re, im),
                })
                .collect(),
        })
}

fn seeded_pair(seed: u64, n: usize) -> (CVec, CVec) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (crandn(&mut rng, n), crandn(&mut rng, n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn array_response_has_unit_entries(pos in prop::collection::vec(position(), 1..6),
                                       el in 0.0..std::f64::consts::PI, az in 0.0..std::f64::consts::PI) {
        let a = array_response(&Apv::new(pos), el, az, LAMBDA);
        for z in a.iter() {
            prop_assert!((z.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn channel_is_linear_in_path_gains(pos in prop::collection::vec(position(), 1..5), u in user(),
                                       cr in -3.0f64..3.0, ci in -3.0f64..3.0) {
        let apv = Apv::new(pos);
        let c = Complex64::new(cr, ci);
        let mut scaled = u.clone();
        for p in &mut scaled.paths {
            p.gain *= c;
        }
        let h = channel_vector(&apv, &u, LAMBDA);
        let hs = channel_vector(&apv, &scaled, LAMBDA);
        prop_assert!((hs - h * c).norm() < 1e-12 * (1.0 + c.norm()) * 10.0);
    }

    #[test]
    fn moving_one_antenna_changes_only_its_entry(pos in prop::collection::vec(position(), 2..6), u in user(),
                                                 k in 0usize..6, dx in -0.1f64..0.1, dy in -0.1f64..0.1) {
        let k = k % pos.len();
        let mut moved = pos.clone();
        moved[k] = Position2D::new(pos[k].x + dx, pos[k].y + dy);
        let h = channel_vector(&Apv::new(pos.clone()), &u, LAMBDA);
        let g = channel_vector(&Apv::new(moved), &u, LAMBDA);
        for i in 0..pos.len() {
            if i != k {
                prop_assert_eq!(h[i], g[i]);
            }
        }
    }

    #[test]
    fn secrecy_rate_is_antisymmetric(h1 in cvec(3), h2 in cvec(3), wc in cvec(3), noise in 0.01f64..10.0) {
        let a = secrecy_rate(&h1, &h2, &wc, noise).unwrap();
        let b = secrecy_rate(&h2, &h1, &wc, noise).unwrap();
        prop_assert_eq!(a, -b);
    }

    #[test]
    fn scalar_closed_form_equals_rate_of_split(a in (0.05f64..3.0, 0.0f64..6.3), b in (0.05f64..3.0, 0.0f64..6.3),
                                               p in 0.1f64..100.0, frac in 0.0f64..0.95) {
        let (mut h1, mut h2) = (Complex64::from_polar(a.0, a.1), Complex64::from_polar(b.0, b.1));
        if h1.norm_sqr() < h2.norm_sqr() {
            std::mem::swap(&mut h1, &mut h2);
        }
        let r = frac * (1.0 + p * h2.norm_sqr()).log2();
        let split = single_ma_power_allocation(h1, h2, p, r, 1.0).unwrap();
        let wc = CVec::from_element(1, Complex64::new(split.pc.sqrt(), 0.0));
        let via_split = secrecy_rate(&CVec::from_element(1, h1), &CVec::from_element(1, h2), &wc, 1.0).unwrap();
        let closed = single_ma_secrecy_rate(h1, h2, p, r, 1.0).unwrap();
        prop_assert!((closed - via_split).abs() <= 1e-10 * closed.abs().max(1.0));
    }

    #[test]
    fn secrecy_only_beats_random_beams(seed in any::<u64>(), p in 0.5f64..50.0) {
        let (h1, h2) = seeded_pair(seed, 3);
        let (_, best) = secrecy_only_optimal(&h1, &h2, p, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        for _ in 0..200 {
            let mut w = crandn(&mut rng, 3);
            w *= Complex64::new(p.sqrt() / w.norm(), 0.0);
            prop_assert!(secrecy_rate(&h1, &h2, &w, 1.0).unwrap() <= best + 1e-9);
        }
    }

    #[test]
    fn ula_gain_bounded_and_coherent_at_integers(d in 1u32..1000, n in 1usize..9, r in -5.0f64..5.0, k in -50i32..50) {
        let g = ula_beam_gain(d as f64, n, r);
        prop_assert!((-1e-12..=n as f64 + 1e-9).contains(&g));
        let coherent = ula_beam_gain(d as f64, n, k as f64 / d as f64);
        prop_assert!((coherent - n as f64).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn inner_optimum_nonincreasing_in_requirement(seed in any::<u64>(), n in 1usize..5, p in 1.0f64..100.0) {
        let (h1, h2) = seeded_pair(seed, n);
        let tol = SolverTolerances::default();
        let cap = InnerProblem::new(h1.clone(), h2.clone(), p, 0.0, 1.0).unwrap().multicast_capacity();
        let mut prev = f64::INFINITY;
        for i in 0..6 {
            let r = cap * i as f64 / 6.0;
            let sol = solve_inner(&InnerProblem::new(h1.clone(), h2.clone(), p, r, 1.0).unwrap(), &tol);
            let rc = sol.secrecy_rate().unwrap();
            prop_assert!(rc <= prev + 1e-8);
            prev = rc;
        }
    }

    #[test]
    fn inner_rate_is_scale_covariant(seed in any::<u64>(), c in 1e-3f64..1e3, frac in 0.0f64..0.9) {
        let (h1, h2) = seeded_pair(seed, 3);
        let tol = SolverTolerances::default();
        let cap = InnerProblem::new(h1.clone(), h2.clone(), 10.0, 0.0, 1.0).unwrap().multicast_capacity();
        let r = frac * cap;
        let a = solve_inner(&InnerProblem::new(h1.clone(), h2.clone(), 10.0, r, 1.0).unwrap(), &tol);
        let b = solve_inner(&InnerProblem::new(h1, h2, 10.0 * c, r, c).unwrap(), &tol);
        prop_assert!((a.secrecy_rate().unwrap() - b.secrecy_rate().unwrap()).abs() < 1e-7);
    }

    #[test]
    fn inner_feasible_iff_below_multicast_capacity(seed in any::<u64>(), n in 1usize..5, frac in 0.5f64..1.5) {
        let (h1, h2) = seeded_pair(seed, n);
        let (_, cap) = multicast_only_optimal(&h1, &h2, 10.0, 1.0).unwrap();
        let r = frac * cap;
        prop_assume!((r - cap).abs() > 1e-6);
        let sol = solve_inner(&InnerProblem::new(h1, h2, 10.0, r, 1.0).unwrap(), &SolverTolerances::default());
        prop_assert_eq!(sol.status == SolveStatus::Optimal, r <= cap);
        if r > cap {
            prop_assert_eq!(sol.status, SolveStatus::Infeasible);
        }
    }

    #[test]
    fn near_capacity_requirements_solve(seed in any::<u64>(), n in 1usize..5, p in 1.0f64..1e4, frac in 0.9f64..0.9999) {
        let (h1, h2) = seeded_pair(seed, n);
        let cap = InnerProblem::new(h1.clone(), h2.clone(), p, 0.0, 1.0).unwrap().multicast_capacity();
        let sol = solve_inner(&InnerProblem::new(h1, h2, p, frac * cap, 1.0).unwrap(), &SolverTolerances::default());
        prop_assert_eq!(sol.status, SolveStatus::Optimal);
    }

    #[test]
    fn recovered_beams_are_feasible(seed in any::<u64>(), n in 1usize..5, p in 1.0f64..100.0, frac in 0.0f64..0.95) {
        let (h1, h2) = seeded_pair(seed, n);
        let tol = SolverTolerances::default();
        let cap = InnerProblem::new(h1.clone(), h2.clone(), p, 0.0, 1.0).unwrap().multicast_capacity();
        let r = frac * cap;
        let problem = InnerProblem::new(h1.clone(), h2.clone(), p, r, 1.0).unwrap();
        let sol = solve_inner(&problem, &tol);
        let rec = recover_beamformers(&sol, &problem, &tol).unwrap();
        let bf = rec.beamformers;
        prop_assert!(bf.total_power() <= p * (1.0 + 1e-6));
        let t = 2f64.powf(r) - 1.0;
        for h in [&h1, &h2] {
            let sinr = abs2(h, &bf.w0) / (1.0 + abs2(h, &bf.wc));
            prop_assert!(sinr >= t * (1.0 - 1e-6));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn search_stays_feasible_and_dominates_its_start(seed in 0u64..10_000, m in 4usize..9, r in 0.0f64..6.0) {
        let cfg = ExperimentConfig::default();
        let scenario = cfg.scenario();
        let channel = ma_physi::channel::sample_channel(&scenario, seed, 0);
        let region = 4.0 * LAMBDA;
        let grid = build_grid(region, m).unwrap();
        let settings = SearchSettings::new(grid, LAMBDA / 2.0);
        let start = fpa_apv(3, LAMBDA);
        let tol = SolverTolerances::default();
        let st = sequential_search(&channel, &settings, scenario.tx_power(), r, &start, &tol).unwrap();
        prop_assert!(st.apv.is_feasible(region, LAMBDA / 2.0));
        prop_assert!(st.history.len() <= 1 + settings.max_rounds * 3);
        let h: Vec<f64> = st.history.iter().map(|v| if v.is_nan() { f64::NEG_INFINITY } else { *v }).collect();
        prop_assert!(h.windows(2).all(|w| w[1] >= w[0]));
        let (h1, h2) = channel.channels(&start);
        let fpa = solve_inner(&InnerProblem::new(h1, h2, scenario.tx_power(), r, scenario.noise_power()).unwrap(), &tol);
        if let Some(v) = fpa.secrecy_rate() {
            prop_assert!(st.secrecy_rate().unwrap() >= v - 1e-9);
        }
    }

    #[test]
    fn region_sweep_contract(seed in any::<u64>(), m in 3usize..6) {
        let cfg = ExperimentConfig {
            n: 2,
            m,
            a_over_lambda: 2.0,
            trials: 2,
            seed,
            r_ms_grid: vec![0.0, 3.0, 6.0, 30.0],
            relative_points: 4,
            schemes: vec![Scheme::Ma, Scheme::Fpa],
            ..ExperimentConfig::default()
        };
        let out = run_region_sweep(&cfg).unwrap();
        prop_assert_eq!(&out, &run_region_sweep(&cfg).unwrap());
        let scenario = cfg.scenario();
        for t in 0..cfg.trials {
            let channel = ma_physi::channel::sample_channel(&scenario, seed, t as u64);
            let (h1, h2) = channel.channels(&fpa_apv(2, LAMBDA));
            let (_, cap) = multicast_only_optimal(&h1, &h2, scenario.tx_power(), scenario.noise_power()).unwrap();
            for s in [Scheme::Ma, Scheme::Fpa] {
                let rows: Vec<&TrialRecord> = out.records.iter().filter(|x| x.trial == t && x.scheme == s).collect();
                // Absolute grid plus the relative points, minus the shared zero.
                prop_assert_eq!(rows.len(), 4 + 4 - 1);
                let rc: Vec<f64> = rows.iter().filter_map(|x| x.rc).collect();
                prop_assert!(rc.windows(2).all(|w| w[1] <= w[0] + 1e-9));
                if s == Scheme::Fpa {
                    for x in &rows {
                        if (x.r_ms - cap).abs() > 1e-6 {
                            prop_assert_eq!(x.status == SolveStatus::Optimal, x.r_ms < cap);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn records_round_trip(rows in prop::collection::vec(
        (0usize..5, 0usize..100, any::<u64>(), 1usize..9, -1e3f64..1e3, proptest::option::of(-1e3f64..1e3), any::<bool>()), 0..20)) {
        let records: Vec<TrialRecord> = rows
            .into_iter()
            .map(|(s, trial, seed, n, r, rc, timed)| TrialRecord {
                scheme: Scheme::ALL[s],
                trial,
                seed,
                n,
                m: 20,
                a_over_lambda: 8.0,
                r_ms: r,
                rc,
                r0: rc.map(|v| v / 3.0),
                status: if rc.is_some() { SolveStatus::Optimal } else { SolveStatus::Infeasible },
                elapsed_ms: timed.then_some(1.25),
                apv_json: "[[0.0,0.03],[-0.03,0.0]]".into(),
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.csv");
        write_records(&path, &records).unwrap();
        prop_assert_eq!(read_records(&path).unwrap(), records);
    }
}
