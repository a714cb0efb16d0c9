//! The five experiment commands. Each writes its files into the configured
//! output directory and returns the JSON report it also saved there.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Deserialize;
use serde_json::{json, Value};

use super::config::{parse_field, Manifest, RunConfig};
use super::svg::fan_chart;
use crate::error::{Error, Result};
use crate::random_forcing::{ensemble_with, sample_noise, NoiseModel};
use crate::saturation::{certificate_csv, saturation_certificate};
use crate::solver::{asymptotic_limit_check, ForcingInput, Solver, Trajectory};
use crate::spectral::{FieldRecord, SobolevIndex, SpectralField, TorusGrid};
use crate::synthesis::{ControlSchedule, Planner, ScheduleFile};

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Initial state, e.g. "0.5 sin x + 0.3 cos 2x" or "@state.json".
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub u0: String,
    /// Schedule JSON, or a noise run `{"noise": {...}, "periods": n, "seed": s}`.
    #[arg(long)]
    pub forcing: Option<PathBuf>,
    /// Final time; defaults to the schedule duration.
    #[arg(long)]
    pub t_final: Option<f64>,
    /// Report the L² distance of the final state to this field.
    #[arg(long, allow_hyphen_values = true)]
    pub target: Option<String>,
    /// Replay with halved step limits, as plan verification does.
    #[arg(long)]
    pub refined: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SteerArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub u0: String,
    #[arg(long, allow_hyphen_values = true)]
    pub u1: String,
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: f64,
    /// Fixed horizon; without it the schedule takes as long as it needs.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Highest mode of `u1 - u0` to steer; defaults to the cutoff.
    #[arg(long)]
    pub modes: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SaturateArgs {
    /// Cutoff whose modes must be covered; defaults to the config cutoff.
    #[arg(long)]
    pub cutoff: Option<usize>,
    #[arg(long, default_value_t = 8)]
    pub j_max: usize,
}

#[derive(Debug, Clone, Args)]
pub struct EnsembleArgs {
    #[arg(long, default_value = "0.1 sin x", allow_hyphen_values = true)]
    pub u0: String,
    /// Ball radius M; defaults to twice the norm of u0.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, default_value_t = 20)]
    pub periods: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Extra initial states drawn from the ball of radius M.
    #[arg(long, default_value_t = 0)]
    pub ball_samples: usize,
    /// Test harness: replace every noise sample by zero forcing.
    #[arg(long, hide = true)]
    pub zero_noise: bool,
}

#[derive(Debug, Clone, Args)]
pub struct LimitArgs {
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub u0: String,
    #[arg(long, default_value = "sin x", allow_hyphen_values = true)]
    pub eta: String,
    #[arg(long, default_value = "cos x", allow_hyphen_values = true)]
    pub zeta: String,
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.1,0.05,0.025")]
    pub deltas: Vec<f64>,
}

/// Output directory writer.
struct Outputs {
    dir: PathBuf,
}

impl Outputs {
    fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
        })
    }

    fn text(&self, name: &str, body: &str) -> Result<()> {
        fs::write(self.dir.join(name), body)?;
        Ok(())
    }

    fn json<T: serde::Serialize>(&self, name: &str, value: &T) -> Result<()> {
        self.text(name, &(serde_json::to_string_pretty(value)? + "\n"))
    }

    fn trajectory(&self, name: &str, traj: &Trajectory) -> Result<()> {
        self.text(name, &traj.to_csv_string())
    }

    fn finish(
        &self,
        command: &str,
        cfg: &RunConfig,
        inputs: Value,
        started: Instant,
    ) -> Result<Manifest> {
        let manifest = Manifest::new(command, cfg, inputs, started.elapsed().as_secs_f64());
        self.json("manifest.json", &manifest)?;
        Ok(manifest)
    }
}

#[derive(Deserialize)]
struct NoiseRun {
    noise: NoiseModel,
    periods: usize,
    #[serde(default)]
    seed: u64,
}

enum ForcingFile {
    Schedule(ControlSchedule),
    Noise(NoiseRun),
}

fn read_forcing(path: &Path) -> Result<ForcingFile> {
    let text = fs::read_to_string(path)?;
    let is_noise = serde_json::from_str::<Value>(&text).is_ok_and(|v| v.get("noise").is_some());
    if is_noise {
        let run: NoiseRun = serde_json::from_str(&text).map_err(|e| Error::Parse {
            message: e.to_string(),
            segment: None,
        })?;
        run.noise.validate()?;
        Ok(ForcingFile::Noise(run))
    } else {
        Ok(ForcingFile::Schedule(ScheduleFile::parse(&text)?.segments))
    }
}

fn replay(
    solver: &Solver,
    schedule: &ControlSchedule,
    u0: &SpectralField,
    t_final: f64,
) -> Result<Trajectory> {
    let grid = u0.grid();
    let forcing = match schedule.to_forcing(grid)? {
        Some(f) => f,
        None if t_final > 0.0 => ForcingInput::zero(grid, t_final)?,
        None => return Ok(Trajectory::starting_at(u0)),
    };
    solver.solve(u0, &forcing, t_final)
}

/// Periods of noise applied back to back, stitched into one trajectory.
fn noise_trajectory(solver: &Solver, u0: &SpectralField, run: &NoiseRun) -> Result<Trajectory> {
    let mut out = Trajectory::starting_at(u0);
    let mut u = u0.clone();
    let mut work = 0.0;
    for k in 0..run.periods {
        let forcing = sample_noise(&run.noise, k as u64, run.seed)?;
        let offset = k as f64 * run.noise.period;
        let piece = match solver.solve(&u, &forcing, run.noise.period) {
            Ok(p) => p,
            Err(Error::NonFinite { time, partial }) => {
                let stitched = partial.map(|p| {
                    let mut whole = out.clone();
                    append(&mut whole, &p, offset, work);
                    Box::new(whole)
                });
                return Err(Error::NonFinite {
                    time: time + offset,
                    partial: stitched,
                });
            }
            Err(e) => return Err(e),
        };
        append(&mut out, &piece, offset, work);
        u = piece.final_state().clone();
        work = out.diagnostics.last().map_or(0.0, |d| d.forcing_work);
    }
    Ok(out)
}

fn append(out: &mut Trajectory, piece: &Trajectory, offset: f64, work: f64) {
    for ((t, s), d) in piece
        .times
        .iter()
        .zip(&piece.states)
        .zip(&piece.diagnostics)
    {
        out.push(t + offset, s.clone(), work + d.forcing_work);
    }
}

pub fn cmd_simulate(cfg: &RunConfig, args: &SimulateArgs) -> Result<Value> {
    let started = Instant::now();
    let grid = cfg.grid()?;
    let solver = if args.refined {
        cfg.solver()?.refined()
    } else {
        cfg.solver()?
    };
    let u0 = parse_field(&args.u0, grid)?;
    let target = args
        .target
        .as_deref()
        .map(|t| parse_field(t, grid))
        .transpose()?;
    let out = Outputs::create(&cfg.output_dir)?;

    let forcing = args.forcing.as_deref().map(read_forcing).transpose()?;
    let result = match forcing {
        Some(ForcingFile::Noise(run)) => noise_trajectory(&solver, &u0, &run),
        other => {
            let schedule = match other {
                Some(ForcingFile::Schedule(s)) => s,
                _ => ControlSchedule::empty(),
            };
            let t_final = match (args.t_final, schedule.is_empty()) {
                (Some(t), _) => t,
                (None, false) => schedule.total_duration(),
                (None, true) => {
                    return Err(Error::InvalidConfig(
                        "--t-final is required without a forcing file".into(),
                    ))
                }
            };
            replay(&solver, &schedule, &u0, t_final)
        }
    };
    let traj = match result {
        Ok(t) => t,
        Err(Error::NonFinite { time, partial }) => {
            if let Some(p) = &partial {
                out.trajectory("trajectory_partial.csv", p)?;
            }
            return Err(Error::NonFinite { time, partial });
        }
        Err(e) => return Err(e),
    };
    out.trajectory("trajectory.csv", &traj)?;
    let last = traj.final_state();
    out.json("final_state.json", &FieldRecord::from(last.clone()))?;
    let report = json!({
        "final_time": traj.final_time(),
        "snapshots": traj.len(),
        "final_l2": last.l2_norm(),
        "final_h1": last.sobolev_norm(SobolevIndex::H1),
        "final_error": target.map(|t| last.distance(&t)),
    });
    out.json("report.json", &report)?;
    let inputs = json!({"u0": args.u0, "forcing": args.forcing, "t_final": args.t_final, "target": args.target, "refined": args.refined});
    out.finish("simulate", cfg, inputs, started)?;
    Ok(report)
}

pub fn cmd_steer(cfg: &RunConfig, args: &SteerArgs) -> Result<Value> {
    let started = Instant::now();
    let grid = cfg.grid()?;
    let u0 = parse_field(&args.u0, grid)?;
    let u1 = parse_field(&args.u1, grid)?;
    let modes = args.modes.unwrap_or(grid.cutoff());
    let planner = Planner::new(grid, cfg.planner_config())?;
    let out = Outputs::create(&cfg.output_dir)?;
    let inputs = json!({"u0": args.u0, "u1": args.u1, "epsilon": args.epsilon, "horizon": args.horizon, "modes": modes});

    let planned = match args.horizon {
        Some(t) => planner.steer_in_time(&u0, &u1, t, args.epsilon, modes),
        None => planner.steer(&u0, &u1, args.epsilon, modes),
    };
    let (schedule, report) = match planned {
        Ok(p) => p,
        Err(Error::BudgetExhausted { reason, partial }) => {
            if let Some(p) = &partial {
                out.json("partial_schedule.json", p.as_ref())?;
            }
            return Err(Error::BudgetExhausted { reason, partial });
        }
        Err(e) => return Err(e),
    };
    out.trajectory("verification.csv", &report.checkpoints)?;
    let manifest = Manifest::new("steer", cfg, inputs.clone(), 0.0);
    out.json(
        "schedule.json",
        &ScheduleFile {
            segments: schedule,
            manifest: manifest.provenance(),
        },
    )?;
    let report = serde_json::to_value(&report)?;
    out.json("report.json", &report)?;
    out.finish("steer", cfg, inputs, started)?;
    Ok(report)
}

pub fn cmd_saturate(cfg: &RunConfig, args: &SaturateArgs) -> Result<Value> {
    let started = Instant::now();
    let cutoff = args.cutoff.unwrap_or(cfg.cutoff);
    let rows = saturation_certificate(cutoff, args.j_max)?;
    let out = Outputs::create(&cfg.output_dir)?;
    out.text("certificate.csv", &certificate_csv(&rows))?;
    let full = rows.iter().find(|r| r.modes_covered == cutoff);
    let verdict = match full {
        Some(r) => format!("PASS full coverage of {cutoff} modes at j = {}", r.level),
        None => format!(
            "FAIL coverage of {cutoff} modes not reached by j = {}",
            args.j_max
        ),
    };
    out.text("verdict.txt", &(verdict.clone() + "\n"))?;
    let report = json!({
        "cutoff": cutoff,
        "rows": rows,
        "pass": full.is_some(),
        "level": full.map(|r| r.level),
        "verdict": verdict,
    });
    out.json("report.json", &report)?;
    out.finish(
        "saturate",
        cfg,
        json!({"cutoff": cutoff, "j_max": args.j_max}),
        started,
    )?;
    Ok(report)
}

/// `count` states in the closed ball of radius `radius` in `H^s`, spread
/// over modes `≤ 4` with radii uniform in `[0, radius]`.
pub fn sample_ball(
    grid: TorusGrid,
    s: SobolevIndex,
    radius: f64,
    count: usize,
    seed: u64,
) -> Vec<SpectralField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    let top = grid.cutoff().min(4);
    (0..count)
        .map(|_| {
            let terms: Vec<(usize, f64, f64)> = (1..=top)
                .map(|k| (k, rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
            let dir = SpectralField::trig(grid, &terms);
            let r: f64 = rng.random::<f64>() * radius;
            dir.scale(r / dir.sobolev_norm(s))
        })
        .collect()
}

pub fn cmd_ensemble(cfg: &RunConfig, args: &EnsembleArgs) -> Result<Value> {
    let started = Instant::now();
    let grid = cfg.grid()?;
    let s = cfg.sobolev()?;
    let u0 = parse_field(&args.u0, grid)?;
    let threshold = args.threshold.unwrap_or(2.0 * u0.sobolev_norm(s));
    if !(threshold >= 0.0) {
        return Err(Error::InvalidConfig("threshold must be nonnegative".into()));
    }
    if args.trials < 30 {
        log::warn!(
            "{} trials: the Wilson intervals are only indicative",
            args.trials
        );
    }
    let mut states = vec![u0];
    states.extend(sample_ball(grid, s, threshold, args.ball_samples, cfg.seed));
    let solver = cfg.solver()?;
    let model = cfg.noise;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let summary = pool.install(|| {
        ensemble_with(
            &solver,
            &states,
            threshold,
            args.periods,
            args.trials,
            s,
            cfg.seed,
            |seed, k| {
                if args.zero_noise {
                    ForcingInput::zero(grid, model.period)
                } else {
                    sample_noise(&model, k, seed)
                }
            },
        )
    })?;

    let out = Outputs::create(&cfg.output_dir)?;
    let mut csv = Vec::new();
    summary.write_csv(&mut csv)?;
    out.text("chains.csv", &String::from_utf8(csv).expect("ascii output"))?;
    let mut curve_csv = String::from("u0,n,p_hat,lower,upper\n");
    for (i, c) in summary.curves.iter().enumerate() {
        for n in 0..c.p_hat.len() {
            curve_csv.push_str(&format!(
                "{i},{},{},{},{}\n",
                n + 1,
                c.p_hat[n],
                c.lower[n],
                c.upper[n]
            ));
        }
    }
    out.text("hitting.csv", &curve_csv)?;
    out.json("summary.json", &summary)?;
    let records: Vec<FieldRecord> = states.iter().cloned().map(FieldRecord::from).collect();
    out.json("initial_states.json", &records)?;
    let title = format!(
        "norm growth, s = {}, M = {threshold:.4}, {} trials",
        s.value(),
        args.trials
    );
    out.text("fan.svg", &fan_chart(&summary.chains[0], threshold, &title))?;

    let main = &summary.curves[0];
    let report = json!({
        "threshold": threshold,
        "periods": args.periods,
        "trials": args.trials,
        "initial_states": states.len(),
        "p_hat_final": main.final_estimate(),
        "monotone": summary.curves.iter().all(|c| c.is_monotone()),
        "p1_hat": summary.p1_hat,
        "censored": summary.curves.iter().map(|c| c.censored).sum::<usize>(),
    });
    out.json("report.json", &report)?;
    let inputs = json!({
        "u0": args.u0, "threshold": threshold, "periods": args.periods, "trials": args.trials,
        "ball_samples": args.ball_samples, "zero_noise": args.zero_noise,
    });
    out.finish("ensemble", cfg, inputs, started)?;
    Ok(report)
}

pub fn cmd_verify_limit(cfg: &RunConfig, args: &LimitArgs) -> Result<Value> {
    let started = Instant::now();
    let grid = cfg.grid()?;
    let u0 = parse_field(&args.u0, grid)?;
    let eta = parse_field(&args.eta, grid)?;
    let zeta = parse_field(&args.zeta, grid)?;
    let errors = asymptotic_limit_check(&cfg.solver()?, &u0, &eta, &zeta, &args.deltas)?;
    let out = Outputs::create(&cfg.output_dir)?;
    let mut csv = String::from("delta,error\n");
    for (d, e) in args.deltas.iter().zip(&errors) {
        csv.push_str(&format!("{d},{e:.12e}\n"));
    }
    out.text("limit.csv", &csv)?;
    let decreasing = errors.windows(2).all(|w| w[1] < w[0]);
    let ratio = errors.last().unwrap_or(&0.0) / errors.first().unwrap_or(&1.0);
    let report = json!({
        "deltas": args.deltas,
        "errors": errors,
        "strictly_decreasing": decreasing,
        "last_over_first": ratio,
        "pass": decreasing && ratio <= 0.5,
    });
    out.json("report.json", &report)?;
    let inputs = json!({"u0": args.u0, "eta": args.eta, "zeta": args.zeta, "deltas": args.deltas});
    out.finish("verify-limit", cfg, inputs, started)?;
    Ok(report)
}
