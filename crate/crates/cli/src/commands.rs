use std::path::Path;

use pspin_core::acceptance::{
    run_selected, three_spin, CriterionResult, FlippedPsi, Level, CRITERIA,
};
use pspin_core::fdt::{fdt_pair, solve_direct, solve_fixed_point, FdtProblem, FdtSolution};
use pspin_core::langevin::{
    compare_to_limit, grid_observables, simulate, LangevinParams, LangevinRun,
};
use pspin_core::model::gamma_of_beta;
use pspin_core::twotime::{
    apply_psi, fdt_violation, load_checkpoint, response_bound_check, save_checkpoint, solve_soft,
    solve_spherical, TwoTimeGrid, DEFAULT_I_HAT_WINDOW,
};
use pspin_core::{CriticalProfile, MixturePolynomial, Phi, SoftPotential};
use serde_json::{json, Value};

use crate::artifact::{num, RunOutput};
use crate::config::*;
use crate::error::CliError;

const CHECKPOINT_FILE: &str = "grid.ttg";

pub const CRITICAL_COLUMNS: [&str; 10] = [
    "beta",
    "beta_c",
    "x_star",
    "q",
    "q_trivial",
    "gamma",
    "d_infinity",
    "i_gamma",
    "exp_criterion",
    "exp_necessary",
];

fn mixture(terms: &Terms) -> Result<MixturePolynomial, CliError> {
    Ok(MixturePolynomial::new(terms.iter().copied())?)
}

pub fn critical(cfg: &CriticalConfig, out: &Path) -> Result<Value, CliError> {
    let mix = mixture(&cfg.mixture)?;
    let profiles = cfg
        .beta_values()
        .into_iter()
        .map(|beta| CriticalProfile::compute(&mix, beta, cfg.tol))
        .collect::<Result<Vec<_>, _>>()?;
    let mut run = RunOutput::new(out, "critical", cfg)?;
    let mut csv = run.csv("critical.csv", &CRITICAL_COLUMNS)?;
    for p in &profiles {
        csv.row(&[
            num(p.beta),
            num(p.beta_c),
            num(p.x_star),
            num(p.q),
            p.q_is_trivial.to_string(),
            num(p.gamma),
            num(p.d_infinity),
            num(p.i_gamma),
            p.exp_criterion.to_string(),
            p.exp_necessary.to_string(),
        ])?;
    }
    csv.finish()?;
    let (beta_c, x_star) = profiles
        .first()
        .map_or((f64::NAN, f64::NAN), |p| (p.beta_c, p.x_star));
    run.finish(json!({ "rows": profiles.len(), "beta_c": beta_c, "x_star": x_star }))
}

pub fn solve_fdt(cfg: &FdtConfig, out: &Path) -> Result<Value, CliError> {
    let phi = match (&cfg.mixture, cfg.phi_constant) {
        (Some(terms), None) => {
            let mix = mixture(terms)?;
            let gamma = match cfg.gamma {
                Some(g) => g,
                None => gamma_of_beta(&mix, cfg.beta)?,
            };
            Phi::mixture(&mix, cfg.beta, gamma)
        }
        (None, Some(c)) => Phi::constant(c),
        _ => unreachable!("validated when loading"),
    };
    let problem = FdtProblem::new(phi, cfg.b, cfg.delta, cfg.horizon)?;
    let sol: FdtSolution = match cfg.method {
        FdtMethod::Direct => solve_direct(&problem)?,
        FdtMethod::FixedPoint => solve_fixed_point(&problem, cfg.tol, cfg.max_iter)?,
    };
    let (c, r) = fdt_pair(&sol, problem.b);
    let mut run = RunOutput::new(out, "solve-fdt", cfg)?;
    let mut csv = run.csv("fdt.csv", &["tau", "D", "D_prime", "C", "R"])?;
    for (k, tau) in sol.times().enumerate() {
        csv.nums(&[tau, sol.d[k], sol.d_prime[k], c[k], r[k]])?;
    }
    csv.finish()?;
    run.finish(json!({
        "d_infinity": problem.d_infinity,
        "mu": sol.mu,
        "d_at_horizon": sol.d.last(),
        "iterations": sol.iterations,
        "residual": sol.residual,
    }))
}

fn write_grid(run: &mut RunOutput, grid: &TwoTimeGrid, stride: usize) -> Result<(), CliError> {
    let n = grid.steps();
    let mut csv = run.csv("twotime.csv", &["s", "t", "C", "R", "chi"])?;
    for i in (0..=n).step_by(stride) {
        for j in (0..=i).step_by(stride) {
            csv.nums(&[
                grid.time(i),
                grid.time(j),
                grid.correlation(i, j),
                grid.response(i, j),
                grid.integrated_response(i, j),
            ])?;
        }
    }
    csv.finish()?;
    let mut diag = run.csv("diagonal.csv", &["s", "K", "mu"])?;
    for i in (0..=n).step_by(stride) {
        diag.nums(&[grid.time(i), grid.k[i], grid.mu[i]])?;
    }
    diag.finish()
}

fn save_grid(run: &mut RunOutput, grid: &TwoTimeGrid) -> Result<(), CliError> {
    save_checkpoint(grid, &run.path(CHECKPOINT_FILE))?;
    run.register(CHECKPOINT_FILE, "TTGRID1")
}

pub fn solve_twotime(cfg: &TwoTimeConfig, out: &Path) -> Result<Value, CliError> {
    let mix = mixture(&cfg.mixture)?;
    let grid = match cfg.soft {
        None => solve_spherical(&mix, cfg.beta, cfg.delta, cfg.horizon)?,
        Some(s) => {
            let pot = SoftPotential::new(s.l, s.k)?;
            solve_soft(&mix, cfg.beta, pot, s.k0, cfg.delta, cfg.horizon)?
        }
    };
    let mut run = RunOutput::new(out, "solve-twotime", cfg)?;
    write_grid(&mut run, &grid, cfg.csv_stride)?;
    if cfg.checkpoint {
        save_grid(&mut run, &grid)?;
    }
    let mut summary = json!({
        "steps": grid.steps(),
        "response_bound_ratio": response_bound_check(&grid),
        "k_min": grid.k.iter().copied().fold(f64::INFINITY, f64::min),
        "k_max": grid.k.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        "mu_end": grid.mu.last(),
    });
    if cfg.diagnostics {
        let d = fdt_violation(&grid, &mix, cfg.beta, DEFAULT_I_HAT_WINDOW);
        let t_min = 0.5 * cfg.horizon;
        summary["fdt_violation"] = json!({
            "rho": d.rho,
            "i_hat": d.i_hat,
            "diagonal_identity_error": d.diagonal_identity_error,
            "g_sup_late": d.g_sup(t_min, (cfg.horizon - t_min).min(3.0)),
        });
    }
    run.finish(summary)
}

pub fn psi_iterate(cfg: &PsiConfig, out: &Path) -> Result<Value, CliError> {
    let mix = mixture(&cfg.mixture)?;
    let mut current = match &cfg.start_checkpoint {
        None => solve_spherical(&mix, 0.0, cfg.delta, cfg.horizon)?,
        Some(path) => {
            let g = load_checkpoint(path)?;
            if !g.is_spherical() || g.delta != cfg.delta || g.horizon != cfg.horizon {
                return Err(CliError::Config(format!(
                    "start checkpoint {} must be a spherical grid with delta {} and horizon {}",
                    path.display(),
                    cfg.delta,
                    cfg.horizon
                )));
            }
            g
        }
    };
    let solution = solve_spherical(&mix, cfg.beta, cfg.delta, cfg.horizon)?;
    let mut run = RunOutput::new(out, "psi-iterate", cfg)?;
    let mut csv = run.csv(
        "psi.csv",
        &[
            "iteration",
            "change_c",
            "change_r",
            "distance_c",
            "distance_r",
        ],
    )?;
    csv.nums(&[
        0.0,
        0.0,
        0.0,
        current.c.sup_distance(&solution.c),
        current.r.sup_distance(&solution.r),
    ])?;
    let mut last = (0.0, 0.0);
    for it in 1..=cfg.iterations {
        let next = apply_psi(&current, &mix, cfg.beta)?;
        last = (
            next.c.sup_distance(&current.c),
            next.r.sup_distance(&current.r),
        );
        csv.nums(&[
            it as f64,
            last.0,
            last.1,
            next.c.sup_distance(&solution.c),
            next.r.sup_distance(&solution.r),
        ])?;
        current = next;
    }
    csv.finish()?;
    if cfg.checkpoint {
        save_grid(&mut run, &current)?;
    }
    run.finish(json!({
        "iterations": cfg.iterations,
        "last_change_c": last.0,
        "last_change_r": last.1,
        "distance_to_solution": current.c.sup_distance(&solution.c).max(current.r.sup_distance(&solution.r)),
    }))
}

fn run_simulation(
    cfg: &SimulateConfig,
) -> Result<(MixturePolynomial, SoftPotential, LangevinRun), CliError> {
    let mix = mixture(&cfg.mixture)?;
    let pot = SoftPotential::new(cfg.potential.l, cfg.potential.k)?;
    let params = LangevinParams {
        n: cfg.n,
        dt: cfg.dt,
        horizon: cfg.horizon,
        replicas: cfg.replicas,
        seed: cfg.seed,
        save_stride: cfg.save_stride,
    };
    let run = simulate(&mix, cfg.beta, pot, &params)?;
    Ok((mix, pot, run))
}

pub fn simulate_cmd(cfg: &SimulateConfig, out: &Path) -> Result<Value, CliError> {
    let (_, _, sim) = run_simulation(cfg)?;
    let mut run = RunOutput::new(out, "simulate", cfg)?;
    let mut csv = run.csv("langevin.csv", &["s", "t", "C", "C_se", "chi", "chi_se"])?;
    for (a, &s) in sim.times.iter().enumerate() {
        for (b, &t) in sim.times[..=a].iter().enumerate() {
            csv.nums(&[
                s,
                t,
                sim.c_mean.get(a, b),
                sim.c_se.get(a, b),
                sim.chi_mean.get(a, b),
                sim.chi_se.get(a, b),
            ])?;
        }
    }
    csv.finish()?;
    let k = sim.k_mean();
    run.finish(json!({
        "stored_times": sim.times.len(),
        "replicas": sim.replica_c.len(),
        "k_end": k.last(),
    }))
}

pub fn compare(cfg: &CompareConfig, out: &Path) -> Result<Value, CliError> {
    let (mix, pot, sim) = run_simulation(&cfg.simulation())?;
    let grid = match &cfg.grid {
        GridSource::Checkpoint(path) => load_checkpoint(path)?,
        GridSource::Solve { delta } => solve_soft(&mix, cfg.beta, pot, 1.0, *delta, cfg.horizon)?,
    };
    let d = compare_to_limit(&sim, &grid)?;
    let mut run = RunOutput::new(out, "compare", cfg)?;
    let mut csv = run.csv(
        "compare.csv",
        &[
            "s",
            "t",
            "C_N",
            "C_se",
            "C_limit",
            "chi_N",
            "chi_se",
            "chi_limit",
        ],
    )?;
    for (a, &s) in sim.times.iter().enumerate() {
        for (b, &t) in sim.times[..=a].iter().enumerate() {
            let (c, chi) = grid_observables(&grid, s, t);
            csv.nums(&[
                s,
                t,
                sim.c_mean.get(a, b),
                sim.c_se.get(a, b),
                c,
                sim.chi_mean.get(a, b),
                sim.chi_se.get(a, b),
                chi,
            ])?;
        }
    }
    csv.finish()?;
    run.finish(json!({
        "c_sup": d.c_sup,
        "c_rms": d.c_rms,
        "chi_sup": d.chi_sup,
        "chi_rms": d.chi_rms,
        "c_sup_se": d.c_sup_se,
        "chi_sup_se": d.chi_sup_se,
        "excess_over_3se": d.excess_over_3se,
        "pairs": d.pairs,
    }))
}

fn criterion_json(r: &CriterionResult) -> Value {
    json!({
        "id": r.id,
        "passed": r.passed,
        "seconds": r.seconds,
        "error": r.error,
        "checks": r.checks.iter().map(|c| json!({
            "name": c.name,
            "value": c.value,
            "bound": c.bound,
            "passed": c.passed,
        })).collect::<Vec<_>>(),
    })
}

/// Runs the acceptance criteria; progress goes to standard error.
pub fn verify(level: Level, only: Option<&[String]>, flip_psi: bool) -> Result<Value, CliError> {
    let selected: Vec<&str> = match only {
        None => CRITERIA.to_vec(),
        Some(ids) => {
            for id in ids {
                if !CRITERIA.contains(&id.as_str()) {
                    return Err(CliError::Config(format!("unknown criterion {id}")));
                }
            }
            CRITERIA
                .iter()
                .copied()
                .filter(|c| ids.iter().any(|i| i == c))
                .collect()
        }
    };
    let progress = |r: &CriterionResult| {
        eprintln!(
            "{} {:<4} {:>7.1}s  {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.id,
            r.seconds,
            r.summary()
        );
    };
    let mix = three_spin();
    let results = if flip_psi {
        run_selected(level, &FlippedPsi(&mix), &selected, progress)
    } else {
        run_selected(level, &mix, &selected, progress)
    };
    let failing: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    Ok(json!({
        "version": pspin_core::VERSION,
        "level": match level { Level::Quick => "quick", Level::Full => "full" },
        "psi_sign_flip": flip_psi,
        "passed": failing.is_empty(),
        "failing": failing,
        "criteria": results.iter().map(criterion_json).collect::<Vec<_>>(),
    }))
}
