//! Subcommand implementations.  Outputs are plain text and CSV, written
//! deterministically so identical configs produce identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use llb_spectral::analysis::{
    self, audit_energy, convergence_csv, energy_residuals, holder_quotient, integrate_with_ledger,
    lipschitz_probe, NonlinearMap,
};
use llb_spectral::basis::{build_basis, BoundaryKind, DomainSpec};
use llb_spectral::error::{Error, Result};
use llb_spectral::field::{self, NormKind};
use llb_spectral::operators::ModelParams;
use llb_spectral::vec3;
use llb_spectral::verify::{run_battery, Level};

use crate::config::RunConfig;

/// Exit status carried back to `main`.
pub enum Outcome {
    Pass,
    AuditFailure(String),
}

pub fn run_command(config_path: &Path) -> Result<Outcome> {
    let cfg = RunConfig::load(config_path)?;
    let basis = cfg.build_basis()?;
    let u0 = cfg.initial.build(&basis)?;
    if let Some(w) = cfg.params.regime_warning() {
        eprintln!("warning: {w}");
    }

    std::fs::create_dir_all(&cfg.output_dir)?;
    let (trajectory, ledger) = integrate_with_ledger(u0.clone(), &cfg.params, &cfg.solver)?;

    std::fs::write(cfg.output_dir.join("ledger.csv"), ledger.to_csv())?;
    field::save_checkpoint(
        trajectory.final_state(),
        &cfg.output_dir.join("final_state.txt"),
    )?;

    let report = audit_energy(&ledger, &cfg.params, cfg.solver.dt, cfg.c_tol)?;
    let (r1, r2) = energy_residuals(&ledger, &cfg.params)?;
    let max_signed = |r: &[f64]| r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    // sup-in-time L2 check: the norm never exceeds its initial value beyond
    // discretization slack.
    let tol =
        cfg.c_tol * cfg.solver.dt * (1.0 + ledger.rows()[0].l2_sq + ledger.rows()[0].h1semi_sq);
    let l2_max = ledger
        .rows()
        .iter()
        .map(|r| r.l2_sq.sqrt())
        .fold(0.0f64, f64::max);
    let l2_0 = ledger.rows()[0].l2_sq.sqrt();
    let sup_ok = l2_max <= l2_0 + tol;

    let holder = holder_quotient(&trajectory, cfg.alpha)?;

    let final_state = trajectory.final_state();
    let grid = basis.synthesize(final_state.coeffs())?;
    let pointwise_max_sq = grid
        .values()
        .iter()
        .map(|v| vec3::norm_sq(*v))
        .fold(0.0f64, f64::max);

    let mut summary = String::new();
    let _ = writeln!(summary, "llb run summary");
    let _ = writeln!(summary, "scheme = {}", cfg.solver.scheme.as_str());
    let _ = writeln!(summary, "dt = {:?}", cfg.solver.dt);
    let _ = writeln!(summary, "t_end = {:?}", cfg.solver.t_end);
    let _ = writeln!(
        summary,
        "modes_per_dim = {}",
        cfg.modes_per_dim
            .iter()
            .map(|n| n.to_string())
            .collect::<Vec<_>>()
            .join(",")
    );
    let _ = writeln!(summary, "samples_recorded = {}", trajectory.samples().len());
    let _ = writeln!(summary, "final_l2 = {:?}", final_state.norm(NormKind::L2)?);
    let _ = writeln!(summary, "final_h1 = {:?}", final_state.norm(NormKind::H1)?);
    let _ = writeln!(summary, "final_l4 = {:?}", final_state.norm(NormKind::L4)?);
    let _ = writeln!(summary, "final_pointwise_max_sq = {:?}", pointwise_max_sq);
    let _ = writeln!(
        summary,
        "final_xneg[beta={:?}] = {:?}",
        cfg.beta,
        final_state.norm(NormKind::XnegBeta(cfg.beta))?
    );
    let _ = writeln!(summary, "residual1_max_signed = {:?}", max_signed(&r1));
    let _ = writeln!(summary, "residual2_max_signed = {:?}", max_signed(&r2));
    let _ = writeln!(summary, "audit_tolerance = {:?}", tol);
    let _ = writeln!(
        summary,
        "holder_quotient[alpha={:?}] = {:?}",
        cfg.alpha, holder
    );
    let _ = writeln!(
        summary,
        "sup_l2_bound = {}",
        if sup_ok { "PASS" } else { "FAIL" }
    );
    let _ = writeln!(
        summary,
        "energy_audit = {}",
        if report.pass() { "PASS" } else { "FAIL" }
    );
    std::fs::write(cfg.output_dir.join("summary.txt"), &summary)?;
    std::fs::write(cfg.output_dir.join("energy_audit.txt"), report.to_text())?;
    print!("{summary}");

    if report.pass() && sup_ok {
        Ok(Outcome::Pass)
    } else {
        Ok(Outcome::AuditFailure(format!(
            "energy audit: {}\n{}",
            if report.pass() { "pass" } else { "fail" },
            report.to_text()
        )))
    }
}

pub fn verify_command(level: Level, out_dir: &Path) -> Result<Outcome> {
    std::fs::create_dir_all(out_dir)?;
    let reports = run_battery(level)?;
    let mut all_pass = true;
    let mut failures = String::new();
    for r in &reports {
        let status = if r.pass() { "PASS" } else { "FAIL" };
        println!("{status}  {}", r.title);
        let fname = format!("audit_{}.txt", r.title.replace(['[', ']', '='], "_"));
        std::fs::write(out_dir.join(fname), r.to_text())?;
        if !r.pass() {
            all_pass = false;
            for c in r.checks.iter().filter(|c| !c.pass) {
                let _ = writeln!(
                    failures,
                    "{}: {} residual {:.3e} exceeds tolerance {:.3e}",
                    r.title, c.name, c.residual, c.tolerance
                );
            }
        }
    }
    if all_pass {
        println!("verification battery: all audits passed");
        Ok(Outcome::Pass)
    } else {
        Ok(Outcome::AuditFailure(failures))
    }
}

pub fn converge_command(
    config_path: &Path,
    modes: &[usize],
    beta_bar: Option<f64>,
    p_bar: f64,
) -> Result<Outcome> {
    if modes.len() < 2 {
        return Err(Error::Config(
            "converge needs at least two mode counts (e.g. --modes 8,16,32,64)".into(),
        ));
    }
    let cfg = RunConfig::load(config_path)?;
    // --beta-bar wins; otherwise the config's audit.beta (itself defaulted
    // to max(1, d/6 + 1/2))
    let beta_bar = beta_bar.unwrap_or(cfg.beta);
    let largest = *modes.last().unwrap();
    let basis = build_basis(&cfg.domain, &[largest])?;
    let u0 = cfg.initial.build(&basis)?;
    let rows = analysis::convergence_study(&u0, &cfg.params, &cfg.solver, modes, beta_bar, p_bar)?;

    std::fs::create_dir_all(&cfg.output_dir)?;
    let csv = convergence_csv(&rows);
    std::fs::write(cfg.output_dir.join("convergence.csv"), &csv)?;
    print!("{csv}");

    let mut monotone = true;
    for w in rows.windows(2) {
        if w[1].d_c > 1.1 * w[0].d_c || w[1].d_lp > 1.1 * w[0].d_lp {
            monotone = false;
        }
    }
    if monotone {
        Ok(Outcome::Pass)
    } else {
        Ok(Outcome::AuditFailure(
            "Cauchy differences failed to decrease monotonically (10% slack)".into(),
        ))
    }
}

pub fn probe_command(
    map: &str,
    ball: f64,
    samples: usize,
    seed: u64,
    modes: usize,
) -> Result<Outcome> {
    let map = NonlinearMap::parse(map)?;
    let domain = DomainSpec::new(&[std::f64::consts::PI], BoundaryKind::Neumann)?;
    let basis = build_basis(&domain, &[modes])?;
    let params = ModelParams::new(1.0, 1.0, 1.0, 1.0)?;
    let ratio = lipschitz_probe(map, &basis, &params, ball, samples, seed)?;
    println!("map = {map:?}  ball = {ball:?}  samples = {samples}  seed = {seed}  modes = {modes}");
    println!("empirical_max_ratio = {ratio:?}");
    println!("lambda_max = {:?}", basis.lambda_max());
    println!("lambda_sum = {:?}", basis.lambda_sum());
    if map == NonlinearMap::F1 && ratio > basis.lambda_max() * (1.0 + 1e-12) {
        return Ok(Outcome::AuditFailure(format!(
            "F1 ratio {ratio} exceeds the diagonal bound lambda_max = {}",
            basis.lambda_max()
        )));
    }
    Ok(Outcome::Pass)
}
