//! The five subcommands. Each one computes its result, writes its files into
//! the output directory and returns `key=value` summary lines.

use std::path::{Path, PathBuf};

use triq::analytic::{analytic_state, RateSet};
use triq::ddseq::{cycle_duration, cycle_sample_times, run_protected_with_dt, run_unprotected, ProtectedRun};
use triq::linalg::DensityMatrix;
use triq::measures::{disentanglement_time, fit_decay_rate, DecayCurve};
use triq::noise::{
    calibrate_ou_sigma, default_dt, evolve_protocol, Bath, Calibration, CalibrationTarget, NoiseModel, OuBath,
};
use triq::tomo::{fidelity_report, mle_reconstruct_detailed, parse_records, simulate_all, write_records};

use crate::config::{BathMode, DdKind, ExperimentConfig};
use crate::error::{CliError, CliResult, Origin};
use crate::output::{curve_csv, protection_factors, svg_plot, write_file, Series};

pub type Summary = Vec<(String, String)>;

fn entry(key: &str, value: impl ToString) -> (String, String) {
    (key.to_string(), value.to_string())
}

fn config_error(key: &str, message: &str) -> CliError {
    CliError::Config { origin: Origin::Default, key: key.into(), message: message.into() }
}

fn prepare_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Bath σ from the config, or calibrated against the mean T2 when absent.
fn bath_sigma(cfg: &ExperimentConfig, seed: u64) -> CliResult<(f64, Option<Calibration>)> {
    match cfg.bath.sigma {
        Some(s) => Ok((s, None)),
        None => {
            let cal = calibrate(cfg, seed)?;
            Ok((cal.sigma, Some(cal)))
        }
    }
}

fn calibrate(cfg: &ExperimentConfig, seed: u64) -> CliResult<Calibration> {
    let mut target = CalibrationTarget::new(cfg.mean_t2(), cfg.bath.tau_c, cfg.calibration.trajectories, seed);
    target.sigma_bounds = cfg.calibration.sigma_bounds;
    if let Some(dt) = cfg.dt {
        target.dt = dt;
    }
    Ok(calibrate_ou_sigma(&target)?)
}

fn noise_model(cfg: &ExperimentConfig, sigma: Option<f64>, seed: Option<u64>) -> NoiseModel {
    let base = NoiseModel::from_spins(&cfg.spins);
    match (cfg.bath.mode, sigma, seed) {
        (BathMode::Correlated, Some(sigma), Some(seed)) => base.with_bath(Bath::Correlated(OuBath {
            sigma,
            tau_c: cfg.bath.tau_c,
            trajectories: cfg.bath.trajectories,
            seed,
        })),
        _ => base,
    }
}

pub struct DecayOutcome {
    pub states: Vec<DensityMatrix>,
    pub curve: DecayCurve,
    pub csv: String,
    /// Closed-form curve on the same grid, when the model has one.
    pub analytic_csv: Option<String>,
    pub analytic: Option<DecayCurve>,
    pub disentanglement_time: Option<f64>,
    pub decay_rate: Option<f64>,
    pub sigma: Option<f64>,
}

pub fn compute_decay(cfg: &ExperimentConfig) -> CliResult<DecayOutcome> {
    let kind = cfg.require_state()?;
    let rho0 = kind.prepare();
    let times = cfg.grid.times();
    let (sigma, seed) = match cfg.bath.mode {
        BathMode::Markovian => (None, None),
        BathMode::Correlated => {
            let seed = cfg.require_seed()?;
            (Some(bath_sigma(cfg, seed)?.0), Some(seed))
        }
    };
    let noise = noise_model(cfg, sigma, seed);
    let dt = cfg.dt.unwrap_or_else(|| default_dt(&cfg.spins, None));
    let states = if times.is_empty() {
        Vec::new()
    } else {
        evolve_protocol(&rho0, &cfg.spins, &noise, None, &times, dt)?.states
    };
    let curve = DecayCurve::from_states(&times, &states, &rho0)?;
    let csv = curve_csv(&curve, None)?;

    let analytic = if cfg.bath.mode == BathMode::Markovian && !cfg.spins.include_hamiltonian {
        let rates = RateSet::from_spins(&cfg.spins);
        let states: Vec<DensityMatrix> =
            times.iter().map(|&t| analytic_state(kind, t, &rates)).collect::<triq::Result<_>>()?;
        Some(DecayCurve::from_states(&times, &states, &rho0)?)
    } else {
        None
    };
    let analytic_csv = analytic.as_ref().map(|c| curve_csv(c, None)).transpose()?;
    Ok(DecayOutcome {
        disentanglement_time: disentanglement_time(&curve, 0.0).ok(),
        decay_rate: fit_decay_rate(&curve).ok().map(|f| f.rate),
        states,
        curve,
        csv,
        analytic_csv,
        analytic,
        sigma,
    })
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6}")).unwrap_or_else(|| "none".into())
}

pub fn cmd_decay(cfg: &ExperimentConfig) -> CliResult<Summary> {
    let kind = cfg.require_state()?;
    let out = compute_decay(cfg)?;
    prepare_dir(&cfg.output)?;
    let stem = format!("decay_{}", kind.name());
    let csv_path = cfg.output.join(format!("{stem}.csv"));
    write_file(&csv_path, &out.csv)?;
    let mut series = vec![Series {
        label: "N3_tri",
        times: &out.curve.times,
        values: &out.curve.n_tri,
        color: "#1f4e9c",
        dashed: false,
    }];
    let mut summary = vec![entry("csv", csv_path.display())];
    if let (Some(text), Some(curve)) = (&out.analytic_csv, &out.analytic) {
        let path = cfg.output.join(format!("{stem}_analytic.csv"));
        write_file(&path, text)?;
        summary.push(entry("analytic_csv", path.display()));
        series.push(Series { label: "closed form", times: &curve.times, values: &curve.n_tri, color: "#c0392b", dashed: true });
    }
    let svg_path = cfg.output.join(format!("{stem}.svg"));
    write_file(&svg_path, &svg_plot(&format!("{} decay", kind.name()), "tripartite negativity", &series))?;
    summary.push(entry("plot", svg_path.display()));
    if let Some(s) = out.sigma {
        summary.push(entry("bath_sigma_rad_s", format!("{s:.6}")));
    }
    summary.push(entry("disentanglement_time_s", fmt_opt(out.disentanglement_time)));
    summary.push(entry("decay_rate_per_s", fmt_opt(out.decay_rate)));
    Ok(summary)
}

pub struct ProtectOutcome {
    pub protected: ProtectedRun,
    pub unprotected: ProtectedRun,
    pub factors: Vec<f64>,
    pub protected_csv: String,
    pub unprotected_csv: String,
    pub sigma: f64,
}

pub fn compute_protect(cfg: &ExperimentConfig) -> CliResult<ProtectOutcome> {
    let kind = cfg.require_state()?;
    if cfg.dd.sequence == DdKind::None {
        return Err(config_error("dd.sequence", "protect needs xy16s or kddxy"));
    }
    if cfg.bath.mode != BathMode::Correlated {
        return Err(config_error("bath.mode", "protect needs the correlated bath"));
    }
    let seed = cfg.require_seed()?;
    let schedule = cfg.dd.schedule()?.expect("sequence checked above");
    let total = match cfg.dd.cycles {
        Some(n) => n as f64 * cycle_duration(&schedule),
        None => cfg.grid.t_end,
    };
    // Fail on an impossible schedule before spending time on calibration.
    let times = cycle_sample_times(&schedule, total)?;
    let (sigma, _) = bath_sigma(cfg, seed)?;
    let noise = noise_model(cfg, Some(sigma), Some(seed));
    let dt = cfg.dt.unwrap_or_else(|| default_dt(&cfg.spins, Some(&schedule)));
    let rho0 = kind.prepare();
    let protected = run_protected_with_dt(&rho0, &cfg.spins, &noise, &schedule, total, dt)?;
    let unprotected = run_unprotected(&rho0, &cfg.spins, &noise, &times, dt)?;
    let factors = protection_factors(&protected.curve, &unprotected.curve);
    Ok(ProtectOutcome {
        protected_csv: curve_csv(&protected.curve, Some(&factors))?,
        unprotected_csv: curve_csv(&unprotected.curve, None)?,
        protected,
        unprotected,
        factors,
        sigma,
    })
}

pub fn cmd_protect(cfg: &ExperimentConfig) -> CliResult<Summary> {
    let kind = cfg.require_state()?;
    let out = compute_protect(cfg)?;
    prepare_dir(&cfg.output)?;
    let stem = format!("protect_{}_{}", kind.name(), cfg.dd.sequence.name());
    let p_path = cfg.output.join(format!("{stem}.csv"));
    let u_path = cfg.output.join(format!("{stem}_unprotected.csv"));
    let svg_path = cfg.output.join(format!("{stem}.svg"));
    write_file(&p_path, &out.protected_csv)?;
    write_file(&u_path, &out.unprotected_csv)?;
    let (pc, uc) = (&out.protected.curve, &out.unprotected.curve);
    write_file(
        &svg_path,
        &svg_plot(
            &format!("{} under {}", kind.name(), cfg.dd.sequence.name()),
            "tripartite negativity",
            &[
                Series { label: "protected", times: &pc.times, values: &pc.n_tri, color: "#1f4e9c", dashed: false },
                Series { label: "free", times: &uc.times, values: &uc.n_tri, color: "#c0392b", dashed: true },
            ],
        ),
    )?;
    let last = out.factors.len() - 1;
    Ok(vec![
        entry("csv", p_path.display()),
        entry("unprotected_csv", u_path.display()),
        entry("plot", svg_path.display()),
        entry("bath_sigma_rad_s", format!("{:.6}", out.sigma)),
        entry("final_time_s", format!("{:.6}", pc.times[last])),
        entry("final_protection_factor", format!("{:.6}", out.factors[last])),
    ])
}

pub fn cmd_calibrate(cfg: &ExperimentConfig) -> CliResult<Summary> {
    if cfg.bath.mode != BathMode::Correlated {
        return Err(config_error("bath.mode", "calibrate needs the correlated bath"));
    }
    let seed = cfg.require_seed()?;
    let cal = calibrate(cfg, seed)?;
    prepare_dir(&cfg.output)?;
    let path = cfg.output.join("calibration.conf");
    let text = format!(
        "# 1/e coherence time reached: {:.6} s (target {:.6} s)\nbath.mode = correlated\nbath.sigma_rad_s = {:.12e}\nbath.tau_c_s = {:.12e}\n",
        cal.coherence_time,
        cfg.mean_t2(),
        cal.sigma,
        cfg.bath.tau_c
    );
    write_file(&path, &text)?;
    Ok(vec![
        entry("noise_model", path.display()),
        entry("target_t2_s", format!("{:.6}", cfg.mean_t2())),
        entry("bath_sigma_rad_s", format!("{:.6}", cal.sigma)),
        entry("coherence_time_s", format!("{:.6}", cal.coherence_time)),
    ])
}

pub struct TomoOutcome {
    pub reference: DensityMatrix,
    pub estimate: DensityMatrix,
    pub fidelity: f64,
    pub iterations: usize,
    pub records: Option<String>,
}

pub fn compute_tomo(cfg: &ExperimentConfig) -> CliResult<TomoOutcome> {
    let kind = cfg.require_state()?;
    let reference = kind.prepare();
    let (records, text) = match &cfg.tomo.records {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            (parse_records(&text)?, None)
        }
        None => {
            let seed = if cfg.tomo.noise_sigma > 0.0 { cfg.require_seed()? } else { cfg.seed.unwrap_or(0) };
            let recs = simulate_all(&reference, cfg.tomo.noise_sigma, seed)?;
            let text = write_records(&recs);
            (recs, Some(text))
        }
    };
    let report = mle_reconstruct_detailed(&records)?;
    let fidelity = fidelity_report(&report.rho, &reference)?;
    Ok(TomoOutcome { reference, estimate: report.rho, fidelity, iterations: report.iterations, records: text })
}

pub fn cmd_tomo(cfg: &ExperimentConfig) -> CliResult<Summary> {
    let kind = cfg.require_state()?;
    let out = compute_tomo(cfg)?;
    prepare_dir(&cfg.output)?;
    let stem = format!("tomo_{}", kind.name());
    let est: PathBuf = cfg.output.join(format!("{stem}_estimate.json"));
    let refp = cfg.output.join(format!("{stem}_reference.json"));
    write_file(&est, &out.estimate.to_interchange())?;
    write_file(&refp, &out.reference.to_interchange())?;
    let mut summary = vec![entry("estimate", est.display()), entry("reference", refp.display())];
    if let Some(text) = &out.records {
        let path = cfg.output.join(format!("{stem}_records.csv"));
        write_file(&path, text)?;
        summary.push(entry("records", path.display()));
    }
    summary.push(entry("iterations", out.iterations));
    summary.push(entry("fidelity", format!("{:.9}", out.fidelity)));
    Ok(summary)
}

pub fn cmd_schedule_dump(cfg: &ExperimentConfig) -> CliResult<Summary> {
    let Some(schedule) = cfg.dd.schedule()? else {
        return Err(config_error("dd.sequence", "nothing to dump for 'none'"));
    };
    prepare_dir(&cfg.output)?;
    let path = cfg.output.join(format!("schedule_{}.csv", cfg.dd.sequence.name()));
    write_file(&path, &schedule.to_table())?;
    Ok(vec![
        entry("table", path.display()),
        entry("pulses_per_cycle", schedule.pulse_count()),
        entry("cycle_duration_s", format!("{:.9e}", cycle_duration(&schedule))),
    ])
}
