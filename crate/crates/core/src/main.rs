use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use ma_physi::harness::io::CurveGroup;
use ma_physi::harness::{
    parse_schemes, run_parameter_sweep, run_region_sweep, run_single_ma_demo, write_manifest, write_records,
    ExperimentConfig, Manifest, RegionCurve, SweepAxis, TrialRecord,
};
use ma_physi::inner::{recover_beamformers, solve_inner, InnerProblem};
use ma_physi::linalg::CVec;
use ma_physi::los::{
    find_spacing, lemma1_apv, lemma1_rates, null_gain_floor, residuals, theorem1_power_mapping, theorem1_rates,
    ArrayAxis, BeamGains, LosScenario, DEFAULT_D_MAX,
};
use ma_physi::rates::rate_pair;
use ma_physi::{Error, Result};

#[derive(Parser)]
#[command(name = "ma-physi", version, about = "Secrecy rate regions with movable antennas")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for records.csv and manifest.json
    #[arg(long, global = true, default_value = "results")]
    out: PathBuf,
    /// Comma-separated subset of ma,fpa,ts,pso,single-ma
    #[arg(long, global = true)]
    schemes: Option<String>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Worker threads (0 = all cores)
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Rate-region sweep over the multicast requirement
    Region,
    /// Region sweeps along one of M, A or N
    Sweep {
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated values, e.g. 5,10,20
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Single movable antenna: PHY-SI against time sharing
    SingleMa,
    /// Solve one beamforming problem from a JSON channel file
    Inner {
        #[arg(long)]
        channel: PathBuf,
    },
    /// Integer-spaced line-of-sight construction
    LosDemo {
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = DEFAULT_D_MAX)]
        d_max: u64,
        #[arg(long, default_value_t = 0.5)]
        pc_fraction: f64,
    },
    /// Configuration helpers
    Config {
        #[command(subcommand)]
        action: ConfigAction,
    },
}

#[derive(Subcommand)]
enum ConfigAction {
    PrintDefault,
}

/// Channel file for `inner`: complex entries as `[re, im]` pairs.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelFile {
    h1: Vec<[f64; 2]>,
    h2: Vec<[f64; 2]>,
    r_ms: f64,
    tx_power_dbm: Option<f64>,
    noise_dbm: Option<f64>,
}

fn to_cvec(v: &[[f64; 2]]) -> CVec {
    CVec::from_iterator(v.len(), v.iter().map(|[re, im]| Complex64::new(*re, *im)))
}

fn load_config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(t) = c.trials {
        cfg.trials = t;
    }
    if let Some(s) = &c.schemes {
        cfg.schemes = parse_schemes(s)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn init_threads(n: usize) {
    #[cfg(feature = "parallel")]
    if n > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool: {e}");
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
}

fn print_curves(curves: &[RegionCurve]) {
    for c in curves {
        println!("{}", c.scheme);
        for p in &c.points {
            let mean = p.mean_rc.map_or("-".to_string(), |m| format!("{m:.4}"));
            println!("  r_ms {:>6.3}  Rc {:>8}  feasible {:.2}", p.r_ms, mean, p.feasible_fraction);
        }
    }
}

fn save(out: &Path, records: &[TrialRecord], manifest: &Manifest) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_records(&out.join("records.csv"), records)?;
    write_manifest(&out.join("manifest.json"), manifest)?;
    println!("wrote {} records to {}", records.len(), out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let common = &cli.common;
    match cli.command {
        Command::Config {
            action: ConfigAction::PrintDefault,
        } => {
            print!("{}", ExperimentConfig::default().to_toml());
        }
        Command::Region => {
            let cfg = load_config(common)?;
            init_threads(common.threads);
            let out = run_region_sweep(&cfg)?;
            print_curves(&out.curves);
            let mut m = Manifest::new("region", &cfg, out.records.len())?;
            m.curves.push(CurveGroup {
                axis: None,
                value: None,
                curves: out.curves,
            });
            save(&common.out, &out.records, &m)?;
        }
        Command::SingleMa => {
            let cfg = load_config(common)?;
            init_threads(common.threads);
            let out = run_single_ma_demo(&cfg)?;
            print_curves(&out.curves);
            println!(
                "time sharing exceeded PHY-SI in {} of {} trials",
                out.crossover_trials.len(),
                cfg.trials
            );
            let mut m = Manifest::new("single-ma", &cfg, out.records.len())?;
            m.curves.push(CurveGroup {
                axis: None,
                value: None,
                curves: out.curves,
            });
            m.crossover_trials = out.crossover_trials;
            save(&common.out, &out.records, &m)?;
        }
        Command::Sweep { axis, values } => {
            let cfg = load_config(common)?;
            init_threads(common.threads);
            let results = run_parameter_sweep(&cfg, axis, &values)?;
            let mut records = Vec::new();
            let mut groups = Vec::new();
            for (v, out) in results {
                println!("{axis:?} = {v}");
                print_curves(&out.curves);
                records.extend(out.records);
                groups.push(CurveGroup {
                    axis: Some(format!("{axis:?}")),
                    value: Some(v),
                    curves: out.curves,
                });
            }
            let mut m = Manifest::new("sweep", &cfg, records.len())?;
            m.curves = groups;
            save(&common.out, &records, &m)?;
        }
        Command::Inner { channel } => {
            let cfg = load_config(common)?;
            let text = std::fs::read_to_string(&channel).map_err(|e| Error::io(&channel, e))?;
            let file: ChannelFile = serde_json::from_str(&text)?;
            let mut scenario = cfg.scenario();
            if let Some(p) = file.tx_power_dbm {
                scenario.tx_power_dbm = p;
            }
            if let Some(n) = file.noise_dbm {
                scenario.noise_dbm = n;
            }
            let problem = InnerProblem::new(
                to_cvec(&file.h1),
                to_cvec(&file.h2),
                scenario.tx_power(),
                file.r_ms,
                scenario.noise_power(),
            )?;
            let tol = cfg.tolerances();
            let sol = solve_inner(&problem, &tol);
            println!("status      {}", sol.status.as_str());
            println!("iterations  {}", sol.iterations);
            println!("rel gap     {:.3e}", sol.rel_gap);
            println!("rank ratio  Z {:.3e}  Gamma {:.3e}", sol.rank_ratio_z, sol.rank_ratio_gamma);
            if let Some(rc) = sol.secrecy_rate() {
                println!("Rc (SDP)    {rc:.6}");
                let rec = recover_beamformers(&sol, &problem, &tol)?;
                let rates = rate_pair(&problem.h1, &problem.h2, &rec.beamformers, problem.noise)?;
                println!("Rc          {:.6}", rates.secrecy_rate);
                println!("R0          {:.6}", rates.multicast_rate);
                println!("power       {:.6e} / {:.6e}", rec.beamformers.total_power(), problem.power_budget);
                if rec.rank_warning {
                    println!("warning: relaxation was not rank one, purified");
                }
            }
        }
        Command::LosDemo {
            n,
            eps,
            d_max,
            pc_fraction,
        } => {
            let cfg = load_config(common)?;
            let scenario = cfg.scenario();
            let lambda = scenario.wavelength();
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let s = LosScenario::random(&mut rng, lambda, scenario.path_gain_variance());
            let rs = residuals(&s, ArrayAxis::default());
            println!("residuals   c1 {:.6} c2 {:.6} o1 {:.6} o2 {:.6} (1/m)", rs.c1, rs.c2, rs.o1, rs.o2);
            let power = scenario.tx_power();
            let noise = scenario.noise_power();
            let pc = pc_fraction * power;
            let ideal = theorem1_rates(pc, power - pc, s.betas, n, noise);
            println!(
                "ideal gains Rc {:.4}  R0 {:.4}",
                ideal.secrecy_rate, ideal.multicast_rate
            );
            match find_spacing(&rs, n, eps, lambda, d_max) {
                Some(sp) => {
                    let g = BeamGains::at(&rs, n, sp.d, lambda);
                    println!("spacing     d = {} wavelengths, phase error {:.4}", sp.d, sp.achieved_eps);
                    println!("gains       c1 {:.4} c2 {:.4} o1 {:.4} o2 {:.4}", g.c1, g.c2, g.o1, g.o2);
                    let apv = lemma1_apv(sp.d, lambda, n, ArrayAxis::default(), cfg.d_min())?;
                    let r = lemma1_rates(&s, &apv, pc, power - pc, noise)?;
                    println!("rates       Rc {:.4}  R0 {:.4}", r.secrecy_rate, r.multicast_rate);
                    let wc = s.steering(&apv, s.beam_c);
                    let (pct, p0t) = theorem1_power_mapping(power, pc, &wc, &apv, &s)?;
                    let mapped = theorem1_rates(pct, p0t, s.betas, n, noise);
                    println!(
                        "mapped      Pc {pct:.4e}  P0 {p0t:.4e}  Rc {:.4}  R0 {:.4}",
                        mapped.secrecy_rate, mapped.multicast_rate
                    );
                }
                None => {
                    println!("no spacing up to d = {d_max} meets the phase tolerance {eps}");
                    println!(
                        "any placement with three gains above N(1 - {eps}) leaves user 2 a confidential gain of at least {:.4} (N = {n})",
                        null_gain_floor(n, eps)
                    );
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
