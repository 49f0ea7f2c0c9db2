//! Built-in verification battery behind the `verify` command.
//!
//! Each audit builds its own canned problem, so a correct build passes with
//! no external data.  The quick level keeps well under a minute; full adds
//! the convergence, cross-method and regularity studies.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::analysis::{
    self, audit_energy, audit_nonlinear_bounds, holder_quotient, integrate_with_ledger,
    lipschitz_probe, projection_checks, AuditCheck, AuditReport, EnergyLedger, NonlinearMap,
};
use crate::basis::{build_basis, BasisSpec, BoundaryKind, DomainSpec, ModeIndex};
use crate::error::Result;
use crate::field::{inner, NormKind, SpectralField};
use crate::integrator::{integrate, Scheme, SolverConfig};
use crate::operators::{self, ModelParams};
use crate::oracle;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Quick,
    Full,
}

impl Level {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Level::Quick),
            "full" => Ok(Level::Full),
            other => Err(crate::Error::Config(format!(
                "unknown level `{other}` (expected quick|full)"
            ))),
        }
    }
}

fn domain_1d() -> DomainSpec {
    DomainSpec::new(&[PI], BoundaryKind::Neumann).unwrap()
}

fn basis_1d(n: usize) -> Arc<BasisSpec> {
    build_basis(&domain_1d(), &[n]).unwrap()
}

fn unit_params() -> ModelParams {
    ModelParams::new(1.0, 1.0, 1.0, 1.0).unwrap()
}

/// Analytic-solution agreement for both schemes.
fn audit_oracles() -> Result<AuditReport> {
    let mut report = AuditReport::new("oracle_agreement");
    let b = basis_1d(4);
    let p = unit_params();

    // constant Bernoulli data, imex at dt = 1e-4: first-order scheme, the
    // measured error sits near 6.5e-6
    let exact_sq = oracle::constant_field_exact(1.0, &p, 0.5).powi(2);
    let u0 = SpectralField::constant(&b, [1.0, 0.0, 0.0])?;
    let cfg = SolverConfig::new(1e-4, 0.5, Scheme::ImexEuler, 1 << 30)?;
    let traj = integrate(u0, &p, &cfg)?;
    let amp = traj.final_state().coeffs()[0][0] / PI.sqrt();
    report.push(AuditCheck::new(
        "bernoulli_imex_dt1e-4",
        (amp * amp - exact_sq).abs(),
        2e-5,
    ));

    // same problem under rk4 at dt = 1e-3
    let u0 = SpectralField::constant(&b, [1.0, 0.0, 0.0])?;
    let cfg = SolverConfig::new(1e-3, 0.5, Scheme::Rk4, 1 << 30)?;
    let traj = integrate(u0, &p, &cfg)?;
    let amp = traj.final_state().coeffs()[0][0] / PI.sqrt();
    report.push(AuditCheck::new(
        "bernoulli_rk4_dt1e-3",
        (amp * amp - exact_sq).abs(),
        1e-10,
    ));

    // single-mode linear decay, rk4
    let p0 = ModelParams::new(1.0, 1.0, 1.0, 0.0)?;
    let mode = ModeIndex::new(&[1])?;
    let u0 = SpectralField::single_mode(&b, &mode, 0, 1.0)?;
    let cfg = SolverConfig::new(1e-3, 1.0, Scheme::Rk4, 1 << 30)?;
    let traj = integrate(u0, &p0, &cfg)?;
    let slot = b.slot_of(&mode).unwrap();
    let got = traj.final_state().coeffs()[slot][0];
    let want = oracle::single_mode_exact(&b, &mode, 1.0, &p0, 1.0)?;
    report.push(AuditCheck::new(
        "single_mode_rk4_dt1e-3",
        (got - want).abs(),
        1e-10,
    ));
    Ok(report)
}

/// Energy estimates on a smooth random run, plus the sign-mutation self-test
/// that shows the audit has teeth.
fn audit_energy_battery(level: Level) -> Result<AuditReport> {
    let n = 32;
    let b = basis_1d(n);
    let p = unit_params();
    let dt = 1e-3;
    let u0 = SpectralField::random(&b, 2024, 2.0)?;
    let cfg = SolverConfig::new(
        dt,
        if level == Level::Quick { 0.5 } else { 1.0 },
        Scheme::ImexEuler,
        1,
    )?;
    let (_, ledger) = integrate_with_ledger(u0.clone(), &p, &cfg)?;
    let mut report = audit_energy(&ledger, &p, dt, 10.0)?;
    report.title = "energy_estimates".into();

    // mutation test: advance with the kappa2 sign flipped; the same audit
    // must reject the ledger
    let mut mutated = EnergyLedger::new();
    let mut u = u0;
    mutated.record(0.0, &u, &p)?;
    let steps = (0.2 / dt) as usize;
    for k in 1..=steps {
        // imex step whose explicit part carries +kappa2*F3 instead of
        // -kappa2*F3 (the implicit scaffold is unchanged)
        let mut g = operators::cross_laplacian(&u)?;
        g.scale(p.gamma);
        let f3 = operators::cubic_term(&u, &p)?;
        g.scaled_add(p.kappa2, &u)?;
        g.scaled_add(p.kappa2, &f3)?;
        let eigs: Vec<f64> = u.basis().eigenvalues().to_vec();
        let mut next = u.clone();
        for ((c, gk), lam) in next.coeffs_mut().iter_mut().zip(g.coeffs()).zip(eigs) {
            let denom = 1.0 + dt * (p.kappa1 * lam + p.kappa2);
            for i in 0..3 {
                c[i] = (c[i] + dt * gk[i]) / denom;
            }
        }
        u = next;
        mutated.record(k as f64 * dt, &u, &p)?;
    }
    let mutated_report = audit_energy(&mutated, &p, dt, 10.0)?;
    report.push(AuditCheck::new(
        "kappa2_sign_mutation_detected",
        if mutated_report.pass() { 1.0 } else { -1.0 },
        0.0,
    ));
    Ok(report)
}

fn audit_projection() -> Result<AuditReport> {
    let b = basis_1d(32);
    let probes: Vec<SpectralField> = (0..100)
        .map(|s| SpectralField::random(&b, s, 0.3))
        .collect::<Result<_>>()?;
    let mut report = AuditReport::new("projection_bounds");
    for beta in [0.5, 1.0, 2.0] {
        let r = projection_checks(&probes, &[4, 8, 16], beta)?;
        for c in r.checks {
            report.push(AuditCheck::new(
                format!("{}[beta={beta}]", c.name),
                c.residual,
                c.tolerance,
            ));
        }
    }

    // projection-convergence tail on the canonical (1+lambda)^{-1} profile
    let big = basis_1d(512);
    let mut probe = SpectralField::zero(&big);
    for (slot, c) in probe.coeffs_mut().iter_mut().enumerate() {
        c[0] = 1.0 / (1.0 + big.eigenvalue(slot));
    }
    let mut prev = f64::INFINITY;
    let mut monotone = true;
    let mut final_tail = f64::NAN;
    for n in [4usize, 8, 16, 32, 64, 128, 256] {
        let tail = probe.projection_tail(n, 0.5);
        if tail > prev {
            monotone = false;
        }
        prev = tail;
        final_tail = tail;
    }
    report.push(AuditCheck::new(
        "tail_monotone_decrease",
        if monotone { -1.0 } else { 1.0 },
        0.0,
    ));
    report.push(AuditCheck::new("tail_at_n256", final_tail, 1e-3));
    Ok(report)
}

fn audit_lipschitz() -> Result<AuditReport> {
    let b = basis_1d(16);
    let p = unit_params();
    let mut report = AuditReport::new("lipschitz_bounds");

    let r1 = lipschitz_probe(NonlinearMap::F1, &b, &p, 1.0, 64, 31)?;
    report.push(AuditCheck::new(
        "f1_ratio_vs_lambda_max",
        r1 - b.lambda_max(),
        1e-12 * b.lambda_max(),
    ));
    report.push(AuditCheck::new(
        "f1_ratio_vs_lambda_sum",
        r1 - b.lambda_sum(),
        0.0,
    ));

    let p_mu0 = ModelParams::new(1.0, 1.0, 1.0, 0.0)?;
    let r3 = lipschitz_probe(NonlinearMap::F3, &b, &p_mu0, 1.0, 32, 32)?;
    report.push(AuditCheck::new("f3_mu0_identity", (r3 - 1.0).abs(), 1e-12));

    for map in [NonlinearMap::F2, NonlinearMap::F3] {
        let mut prev = 0.0;
        let mut monotone = true;
        for &r in &[1.0, 3.0, 10.0] {
            let ratio = lipschitz_probe(map, &b, &p, r, 48, 99)?;
            if ratio <= prev {
                monotone = false;
            }
            prev = ratio;
        }
        report.push(AuditCheck::new(
            format!("{map:?}_ratio_grows_with_ball"),
            if monotone { -1.0 } else { 1.0 },
            0.0,
        ));
    }
    Ok(report)
}

fn audit_orthogonality() -> Result<AuditReport> {
    let b = basis_1d(32);
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let u = SpectralField::random(&b, seed, 0.5)?;
        let f2 = operators::cross_laplacian(&u)?;
        let ip = inner(&f2, &u)?;
        let h1 = u.norm(NormKind::H1)?;
        worst = worst.max(ip.abs() / (h1 * h1));
    }
    let mut report = AuditReport::new("gyromagnetic_orthogonality");
    report.push(AuditCheck::new(
        "max_inner_over_h1sq_100_fields",
        worst,
        1e-10,
    ));
    Ok(report)
}

fn audit_dense_projection() -> Result<AuditReport> {
    let b = basis_1d(12);
    let p = unit_params();
    let mut report = AuditReport::new("dense_projection_agreement");
    for seed in [3u64, 4] {
        let u = SpectralField::random(&b, seed, 0.8)?;
        let fast2 = operators::cross_laplacian(&u)?;
        let fast3 = operators::cubic_term(&u, &p)?;
        let basis = Arc::clone(&b);
        let coeffs = u.coeffs().to_vec();
        let eval = move |x: &[f64]| {
            let mut v = [0.0; 3];
            let mut lap = [0.0; 3];
            for (slot, mode) in basis.modes().iter().enumerate() {
                let e = crate::basis::eval_eigenfunction(basis.domain(), mode, x);
                let lam = basis.eigenvalue(slot);
                for i in 0..3 {
                    v[i] += coeffs[slot][i] * e;
                    lap[i] -= lam * coeffs[slot][i] * e;
                }
            }
            (v, lap)
        };
        let e2 = eval.clone();
        let dense2 = oracle::dense_project(
            &b,
            &move |x| {
                let (v, lap) = e2(x);
                crate::vec3::cross(v, lap)
            },
            4,
        )?;
        let mu = p.mu;
        let e3 = eval.clone();
        let dense3 = oracle::dense_project(
            &b,
            &move |x| {
                let (v, _) = e3(x);
                let s = 1.0 + mu * crate::vec3::norm_sq(v);
                [v[0] * s, v[1] * s, v[2] * s]
            },
            4,
        )?;
        report.push(AuditCheck::new(
            format!("cross_laplacian_vs_dense[seed={seed}]"),
            fast2.diff(&dense2)?.norm(NormKind::L2)?,
            1e-10,
        ));
        report.push(AuditCheck::new(
            format!("cubic_vs_dense[seed={seed}]"),
            fast3.diff(&dense3)?.norm(NormKind::L2)?,
            1e-10,
        ));
    }
    Ok(report)
}

fn audit_weak_form() -> Result<AuditReport> {
    let b = basis_1d(16);
    let p = unit_params();
    let dt = 1e-3;
    let u0 = SpectralField::random(&b, 17, 2.0)?;
    let cfg = SolverConfig::new(dt, 0.25, Scheme::ImexEuler, 1)?;
    let traj = integrate(u0, &p, &cfg)?;
    let tests: Vec<(ModeIndex, usize)> = b.modes()[..4]
        .iter()
        .flat_map(|m| (0..3).map(move |c| (*m, c)))
        .collect();
    let residuals = operators::weak_residuals(&traj, &tests, 0.25)?;
    let max = residuals.iter().map(|r| r.abs()).fold(0.0f64, f64::max);
    let mut report = AuditReport::new("weak_form_residual");
    report.push(AuditCheck::new("max_over_s4_tests", max, 10.0 * dt));
    Ok(report)
}

fn audit_convergence() -> Result<AuditReport> {
    let big = basis_1d(64);
    let p = unit_params();
    let u0 = SpectralField::random(&big, 2024, 2.0)?;
    let cfg = SolverConfig::new(1e-3, 0.5, Scheme::ImexEuler, 25)?;
    let rows = analysis::convergence_study(&u0, &p, &cfg, &[8, 16, 32, 64], 1.0, 8.0)?;
    let mut report = AuditReport::new("galerkin_convergence");
    for w in rows.windows(2) {
        report.push(AuditCheck::new(
            format!("d_C[{}->{}]_decreases", w[1].n, w[1].n_next),
            w[1].d_c - 1.1 * w[0].d_c,
            0.0,
        ));
        report.push(AuditCheck::new(
            format!("d_Lp[{}->{}]_decreases", w[1].n, w[1].n_next),
            w[1].d_lp - 1.1 * w[0].d_lp,
            0.0,
        ));
    }
    Ok(report)
}

fn audit_nonlinear_family() -> Result<AuditReport> {
    let p = unit_params();
    let cfg = SolverConfig::new(1e-3, 0.5, Scheme::ImexEuler, 1)?;
    let mut ledgers = Vec::new();
    let domain = domain_1d();
    for n in [16usize, 32, 64] {
        let b = build_basis(&domain, &[n])?;
        let big = basis_1d(64);
        let u0 = SpectralField::random(&big, 2024, 2.0)?.restrict(&b)?;
        let (_, l) = integrate_with_ledger(u0, &p, &cfg)?;
        ledgers.push((n, l));
    }
    let refs: Vec<(usize, &EnergyLedger)> = ledgers.iter().map(|(n, l)| (*n, l)).collect();
    audit_nonlinear_bounds(&refs)
}

fn audit_holder() -> Result<AuditReport> {
    let b = basis_1d(32);
    let p = unit_params();
    let u0 = SpectralField::random(&b, 2024, 2.0)?;
    let mut quotients = Vec::new();
    for record in [16usize, 8] {
        let cfg = SolverConfig::new(1e-3, 1.0, Scheme::ImexEuler, record)?;
        let traj = integrate(u0.clone(), &p, &cfg)?;
        quotients.push(holder_quotient(&traj, 0.25)?);
    }
    let change = (quotients[1] - quotients[0]).abs() / quotients[0].max(1e-300);
    let mut report = AuditReport::new("holder_quotient_stability");
    report.push(AuditCheck::new(
        "relative_change_under_sampling_refinement",
        change,
        0.05,
    ));
    Ok(report)
}

fn audit_cross_method() -> Result<AuditReport> {
    let domain = domain_1d();
    let p = unit_params();
    let b = build_basis(&domain, &[64])?;
    // smooth two-mode data with orthogonal component directions
    let mut u0 = SpectralField::zero(&b);
    let m1 = b.slot_of(&ModeIndex::new(&[1])?).unwrap();
    let m2 = b.slot_of(&ModeIndex::new(&[2])?).unwrap();
    u0.coeffs_mut()[m1][0] = 0.6;
    u0.coeffs_mut()[m2][1] = 0.4;

    // rk4 guard at n = 64: dt * (kappa1 * 63^2 + kappa2) <= 2.5
    let cfg = SolverConfig::new(5e-4, 0.5, Scheme::Rk4, 1 << 30)?;
    let spectral = integrate(u0.clone(), &p, &cfg)?;

    let coeffs = u0.coeffs().to_vec();
    let basis = Arc::clone(&b);
    let init = move |x: f64| {
        let mut v = [0.0; 3];
        for (slot, mode) in basis.modes().iter().enumerate() {
            let e = crate::basis::eval_eigenfunction(basis.domain(), mode, &[x]);
            for i in 0..3 {
                v[i] += coeffs[slot][i] * e;
            }
        }
        v
    };
    // small enough that the first-order-in-time component stays below the
    // h^2 spatial error at both resolutions
    let dt_fd = 2e-6;
    let mut report = AuditReport::new("cross_method_agreement");
    let mut errs = Vec::new();
    for m in [128usize, 256] {
        let fd = oracle::fd_reference(&domain, &init, &p, m, dt_fd, 0.5, 1 << 30)?;
        let err = oracle::fd_l2_difference(spectral.final_state(), fd.final_state(), fd.h)?;
        errs.push(err);
    }
    report.push(AuditCheck::new("l2_error_h_pi_over_256", errs[1], 1e-3));
    report.push(AuditCheck::new(
        "second_order_improvement",
        3.0 - errs[0] / errs[1],
        0.0,
    ));
    Ok(report)
}

fn audit_dt_halving() -> Result<AuditReport> {
    let b = basis_1d(32);
    let p = unit_params();
    let u0 = SpectralField::random(&b, 2024, 2.0)?;
    let mut maxima = Vec::new();
    for &dt in &[1e-3, 5e-4] {
        let cfg = SolverConfig::new(dt, 1.0, Scheme::ImexEuler, 1)?;
        let (_, ledger) = integrate_with_ledger(u0.clone(), &p, &cfg)?;
        let (r1, _) = analysis::energy_residuals(&ledger, &p)?;
        maxima.push(r1.iter().map(|x| x.abs()).fold(0.0f64, f64::max));
    }
    let ratio = maxima[0] / maxima[1];
    let mut report = AuditReport::new("dt_halving");
    report.push(AuditCheck::new(
        "residual1_halving_ratio_minus_2",
        (ratio - 2.0).abs(),
        0.4,
    ));
    Ok(report)
}

/// Run the battery; quick stays well under a minute.
pub fn run_battery(level: Level) -> Result<Vec<AuditReport>> {
    let mut reports = vec![
        audit_oracles()?,
        audit_projection()?,
        audit_lipschitz()?,
        audit_orthogonality()?,
        audit_dense_projection()?,
        audit_energy_battery(level)?,
        audit_weak_form()?,
    ];
    if level == Level::Full {
        reports.push(audit_convergence()?);
        reports.push(audit_nonlinear_family()?);
        reports.push(audit_holder()?);
        reports.push(audit_cross_method()?);
        reports.push(audit_dt_halving()?);
    }
    Ok(reports)
}
