//! Runtime audits of the a priori estimates on concrete trajectories.
//!
//! Continuous-time identities pick up O(dt) slack from the scheme and the
//! trapezoid time quadrature, so every tolerance here is of the form
//! c_tol * dt * scale and the residuals are required to shrink under dt
//! halving.  Coefficient-tail statements (projection bounds) are exact and
//! audited at 1e-12.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::basis::BasisSpec;
use crate::error::{Error, Result};
use crate::field::{NormKind, SpectralField};
use crate::integrator::{integrate_observed, SolverConfig, Trajectory};
use crate::operators::{self, ModelParams};
use crate::vec3;

/// Exactness slack for coefficient-tail (projection) statements.
pub const EXACT_TOL: f64 = 1e-12;

/// One ledger row: every integrand of the energy and nonlinearity estimates,
/// plus running trapezoid integrals of each.
#[derive(Debug, Clone, Copy)]
pub struct LedgerRow {
    pub t: f64,
    pub l2_sq: f64,
    pub h1semi_sq: f64,
    pub lap_sq: f64,
    pub l4_quart: f64,
    pub cross_l32_sq: f64,
    pub cubic_l2_sq: f64,
    pub int_l2_sq: f64,
    pub int_h1semi_sq: f64,
    pub int_lap_sq: f64,
    pub int_l4_quart: f64,
    pub int_cross_l32_sq: f64,
    pub int_cubic_l2_sq: f64,
}

impl LedgerRow {
    pub const CSV_HEADER: &'static str = "t,l2_sq,h1semi_sq,lap_sq,l4_quart,cross_l32_sq,\
cubic_l2_sq,int_l2_sq,int_h1semi_sq,int_lap_sq,int_l4_quart,int_cross_l32_sq,int_cubic_l2_sq";

    fn values(&self) -> [f64; 6] {
        [
            self.l2_sq,
            self.h1semi_sq,
            self.lap_sq,
            self.l4_quart,
            self.cross_l32_sq,
            self.cubic_l2_sq,
        ]
    }

    fn integrals(&self) -> [f64; 6] {
        [
            self.int_l2_sq,
            self.int_h1semi_sq,
            self.int_lap_sq,
            self.int_l4_quart,
            self.int_cross_l32_sq,
            self.int_cubic_l2_sq,
        ]
    }
}

/// Time series of the audited norms along one run.
#[derive(Debug, Clone, Default)]
pub struct EnergyLedger {
    rows: Vec<LedgerRow>,
}

impl EnergyLedger {
    pub fn new() -> Self {
        EnergyLedger { rows: Vec::new() }
    }

    pub fn rows(&self) -> &[LedgerRow] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Append a row for the state at time t, extending the cumulative
    /// trapezoid integrals.
    pub fn record(&mut self, t: f64, u: &SpectralField, params: &ModelParams) -> Result<()> {
        if let Some(last) = self.rows.last() {
            if !(t > last.t) {
                return Err(Error::Config(format!(
                    "ledger times must strictly increase ({} then {t})",
                    last.t
                )));
            }
        }
        let l2 = u.norm(NormKind::L2)?;
        let h1s = u.norm(NormKind::H1Semi)?;
        let basis = u.basis();

        // |Lap u|^2 is a weighted coefficient sum
        let lap_sq: f64 = u
            .coeffs()
            .iter()
            .zip(basis.eigenvalues())
            .map(|(c, &lam)| lam * lam * vec3::norm_sq(*c))
            .sum();

        let l4 = u.norm(NormKind::L4)?;

        // |u x Lap u| in L^{3/2}, unprojected, on a converging refined grid
        let lap = operators::laplacian(u)?;
        let cross_l32_sq = {
            let coeffs_u = u.coeffs();
            let coeffs_l = lap.coeffs();
            let val = crate::field::integrate_refined_with(basis, &|factor| {
                let gu = basis.synthesize_refined(coeffs_u, factor)?;
                let gl = basis.synthesize_refined(coeffs_l, factor)?;
                let mut sum = 0.0;
                for (a, b) in gu.values().iter().zip(gl.values()) {
                    sum += vec3::norm_sq(vec3::cross(*a, *b)).powf(0.75);
                }
                Ok(sum * gu.cell_weight())
            })?;
            val.max(0.0).powf(4.0 / 3.0) // (integral of |w|^{3/2})^{2/(3/2)} = norm^2
        };

        // |(1 + mu|u|^2) u|_{L2}^2, unprojected
        let mu = params.mu;
        let cubic_l2_sq = u.integrate_refined(&|v| {
            let s = 1.0 + mu * vec3::norm_sq(v);
            s * s * vec3::norm_sq(v)
        })?;

        let values = [
            l2 * l2,
            h1s * h1s,
            lap_sq,
            l4.powi(4),
            cross_l32_sq,
            cubic_l2_sq,
        ];
        for v in values {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::NonFinite(format!("ledger entry {v} at t = {t}")));
            }
        }

        let integrals = match self.rows.last() {
            None => [0.0; 6],
            Some(prev) => {
                let h = t - prev.t;
                let pv = prev.values();
                let pi = prev.integrals();
                std::array::from_fn(|i| pi[i] + 0.5 * h * (pv[i] + values[i]))
            }
        };

        self.rows.push(LedgerRow {
            t,
            l2_sq: values[0],
            h1semi_sq: values[1],
            lap_sq: values[2],
            l4_quart: values[3],
            cross_l32_sq: values[4],
            cubic_l2_sq: values[5],
            int_l2_sq: integrals[0],
            int_h1semi_sq: integrals[1],
            int_lap_sq: integrals[2],
            int_l4_quart: integrals[3],
            int_cross_l32_sq: integrals[4],
            int_cubic_l2_sq: integrals[5],
        });
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(LedgerRow::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
                r.t,
                r.l2_sq,
                r.h1semi_sq,
                r.lap_sq,
                r.l4_quart,
                r.cross_l32_sq,
                r.cubic_l2_sq,
                r.int_l2_sq,
                r.int_h1semi_sq,
                r.int_lap_sq,
                r.int_l4_quart,
                r.int_cross_l32_sq,
                r.int_cubic_l2_sq
            );
        }
        out
    }
}

/// Run the integrator with the ledger hook attached to every step.
pub fn integrate_with_ledger(
    u0: SpectralField,
    params: &ModelParams,
    config: &SolverConfig,
) -> Result<(Trajectory, EnergyLedger)> {
    let mut ledger = EnergyLedger::new();
    let p = params.clone();
    let traj = integrate_observed(u0, params, config, &mut |t, u| ledger.record(t, u, &p))?;
    Ok((traj, ledger))
}

/// One named residual check.
#[derive(Debug, Clone)]
pub struct AuditCheck {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl AuditCheck {
    pub fn new(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        let pass = residual.is_finite() && residual <= tolerance;
        AuditCheck {
            name: name.into(),
            residual,
            tolerance,
            pass,
        }
    }
}

/// Named residuals with pass flags; serialized as a structured text document.
#[derive(Debug, Clone)]
pub struct AuditReport {
    pub title: String,
    pub checks: Vec<AuditCheck>,
}

impl AuditReport {
    pub fn new(title: impl Into<String>) -> Self {
        AuditReport {
            title: title.into(),
            checks: Vec::new(),
        }
    }

    pub fn push(&mut self, check: AuditCheck) {
        self.checks.push(check);
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "audit-report: {}", self.title);
        let _ = writeln!(
            out,
            "overall: {}",
            if self.pass() { "PASS" } else { "FAIL" }
        );
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{}  residual = {:.6e}  tolerance = {:.6e}  {}",
                if c.pass { "pass" } else { "FAIL" },
                c.residual,
                c.tolerance,
                c.name
            );
        }
        out
    }
}

/// Per-sample residuals of the two energy estimates.
///
/// residual1(t) = |u(t)|^2 + 2 k1 Int |grad u|^2 + 2 k2 (Int |u|^2 + mu Int |u|_L4^4) - |u0|^2
/// residual2(t) = |grad u(t)|^2 + 2 k1 Int |Lap u|^2 - |grad u0|^2
///
/// The first is an identity of the Galerkin flow (discretely O(dt), either
/// sign); the second drops nonnegative terms and is nonpositive up to O(dt).
pub fn energy_residuals(
    ledger: &EnergyLedger,
    params: &ModelParams,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if ledger.is_empty() {
        return Err(Error::Degenerate("empty ledger".into()));
    }
    let rows = ledger.rows();
    let e0 = rows[0].l2_sq;
    let g0 = rows[0].h1semi_sq;
    let mut r1 = Vec::with_capacity(rows.len());
    let mut r2 = Vec::with_capacity(rows.len());
    for r in rows {
        r1.push(
            r.l2_sq
                + 2.0 * params.kappa1 * r.int_h1semi_sq
                + 2.0 * params.kappa2 * (r.int_l2_sq + params.mu * r.int_l4_quart)
                - e0,
        );
        r2.push(r.h1semi_sq + 2.0 * params.kappa1 * r.int_lap_sq - g0);
    }
    Ok((r1, r2))
}

/// Audit the two estimates at tolerance tol = c_tol * dt * (1 + scale),
/// where `scale` defaults to the initial energy content of the run.
///
/// Reported residuals are the signed maxima over samples; an inequality that
/// holds shows up as a nonpositive residual.  The absolute maxima over t > 0
/// are reported alongside, as the dt-halving diagnostics.
pub fn audit_energy(
    ledger: &EnergyLedger,
    params: &ModelParams,
    dt: f64,
    c_tol: f64,
) -> Result<AuditReport> {
    let (r1, r2) = energy_residuals(ledger, params)?;
    let scale = ledger.rows()[0].l2_sq + ledger.rows()[0].h1semi_sq;
    let tol = c_tol * dt * (1.0 + scale);
    let mut report = AuditReport::new("energy_estimates");
    let max_signed = |r: &[f64]| r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let max_abs_tail = |r: &[f64]| r[1..].iter().map(|x| x.abs()).fold(0.0f64, f64::max);
    report.push(AuditCheck::new(
        "residual1_max_signed",
        max_signed(&r1),
        tol,
    ));
    report.push(AuditCheck::new(
        "residual2_max_signed",
        max_signed(&r2),
        tol,
    ));
    if r1.len() > 1 {
        report.push(AuditCheck::new("residual1_max_abs", max_abs_tail(&r1), tol));
        // residual2 accumulates the dropped nonnegative dissipation terms,
        // which are O(1); only its positive part is O(dt).
        report.push(AuditCheck::new(
            "residual2_first_step_abs",
            r2[1].abs(),
            tol,
        ));
    }
    Ok(report)
}

/// Audit of the nonlinearity integrals: the time integrals of the cross and
/// cubic norms must not grow with the mode count.
pub fn audit_nonlinear_bounds(ledgers: &[(usize, &EnergyLedger)]) -> Result<AuditReport> {
    if ledgers.len() < 2 {
        return Err(Error::Degenerate(
            "need ledgers for at least 2 mode counts".into(),
        ));
    }
    let mut sorted: Vec<(usize, &EnergyLedger)> = ledgers.to_vec();
    sorted.sort_by_key(|(n, _)| *n);
    let finals: Vec<(usize, f64, f64)> = sorted
        .iter()
        .map(|(n, l)| {
            let last = l.rows().last().expect("nonempty ledger");
            (*n, last.int_cross_l32_sq, last.int_cubic_l2_sq)
        })
        .collect();
    let head = finals.len().min(3);
    let cross_ref = finals[..head]
        .iter()
        .map(|(_, c, _)| *c)
        .fold(0.0f64, f64::max);
    let cubic_ref = finals[..head]
        .iter()
        .map(|(_, _, c)| *c)
        .fold(0.0f64, f64::max);
    let eps = 0.1;

    let mut report = AuditReport::new("nonlinearity_bounds");
    for (n, cross, cubic) in &finals {
        report.push(AuditCheck::new(
            format!("int_cross_l32_sq[n={n}]"),
            cross - (1.0 + eps) * cross_ref,
            EXACT_TOL * (1.0 + cross_ref),
        ));
        report.push(AuditCheck::new(
            format!("int_cubic_l2_sq[n={n}]"),
            cubic - (1.0 + eps) * cubic_ref,
            EXACT_TOL * (1.0 + cubic_ref),
        ));
    }
    Ok(report)
}

/// Largest Hoelder quotient |u(t) - u(tau)| / (t - tau)^alpha in L^{3/2}
/// over the recorded sample pairs.
pub fn holder_quotient(trajectory: &Trajectory, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 0.25) {
        return Err(Error::Config(format!(
            "alpha must lie in (0, 1/4] (got {alpha})"
        )));
    }
    let samples = trajectory.samples();
    if samples.len() < 2 {
        return Err(Error::Degenerate(
            "need at least 2 samples for the Hoelder quotient".into(),
        ));
    }
    let mut best = 0.0f64;
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            let (ti, ui) = &samples[i];
            let (tj, uj) = &samples[j];
            let d = uj.diff(ui)?;
            let num = d.norm(NormKind::L3_2)?;
            if num == 0.0 {
                continue;
            }
            best = best.max(num / (tj - ti).powf(alpha));
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonlinearMap {
    F1,
    F2,
    F3,
}

impl NonlinearMap {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "f1" => Ok(NonlinearMap::F1),
            "f2" => Ok(NonlinearMap::F2),
            "f3" => Ok(NonlinearMap::F3),
            other => Err(Error::Config(format!(
                "unknown map `{other}` (expected f1|f2|f3)"
            ))),
        }
    }
}

/// Empirical Lipschitz ratio sup |F(u) - F(v)| / |u - v| over seeded random
/// pairs drawn with L2 norm at most `ball_radius`.
pub fn lipschitz_probe(
    map: NonlinearMap,
    basis: &Arc<BasisSpec>,
    params: &ModelParams,
    ball_radius: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if samples < 2 {
        return Err(Error::Degenerate("need at least 2 probe samples".into()));
    }
    if !(ball_radius > 0.0) {
        return Err(Error::Config("ball radius must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> Result<SpectralField> {
        let mut f = SpectralField::zero(basis);
        for c in f.coeffs_mut() {
            for x in c.iter_mut() {
                *x = rng.sample(StandardNormal);
            }
        }
        let n = f.norm(NormKind::L2)?;
        if n > 0.0 {
            let target = ball_radius * rng.random_range(0.0f64..1.0).max(1e-3);
            f.scale(target / n);
        }
        Ok(f)
    };
    let apply = |u: &SpectralField| -> Result<SpectralField> {
        match map {
            NonlinearMap::F1 => operators::laplacian(u),
            NonlinearMap::F2 => operators::cross_laplacian(u),
            NonlinearMap::F3 => operators::cubic_term(u, params),
        }
    };

    let mut best: Option<f64> = None;
    for _ in 0..samples {
        let u = draw(&mut rng)?;
        let v = draw(&mut rng)?;
        let duv = u.diff(&v)?.norm(NormKind::L2)?;
        if duv < 1e-14 {
            continue; // degenerate pair
        }
        let dfuv = apply(&u)?.diff(&apply(&v)?)?.norm(NormKind::L2)?;
        let ratio = dfuv / duv;
        best = Some(best.map_or(ratio, |b: f64| b.max(ratio)));
    }
    best.ok_or_else(|| Error::Degenerate("all probe pairs were degenerate".into()))
}

/// Projection bounds: contraction in L2 and X^{-beta}, and decay of the
/// X^beta tail (the projection-convergence statement).
///
/// All three are coefficient-tail computations, exact to roundoff; the tail
/// uses the eigenfunction-expansion form sum_(i>n) (1+lambda_i)^beta <x,e_i>^2.
pub fn projection_checks(
    probes: &[SpectralField],
    prefixes: &[usize],
    beta: f64,
) -> Result<AuditReport> {
    if !(beta > 0.0) {
        return Err(Error::Config(format!("beta must be positive (got {beta})")));
    }
    if probes.is_empty() || prefixes.is_empty() {
        return Err(Error::Degenerate("no probes or prefixes".into()));
    }
    let mut report = AuditReport::new(format!("projection_bounds[beta={beta}]"));

    let mut worst_l2 = f64::NEG_INFINITY;
    let mut worst_xneg = f64::NEG_INFINITY;
    for (pi, v) in probes.iter().enumerate() {
        let l2_full = v.norm(NormKind::L2)?;
        let xneg_full = v.norm(NormKind::XnegBeta(beta))?;
        for &n in prefixes {
            let l2_trunc = v.truncated_norm(n, NormKind::L2)?;
            let xneg_trunc = v.truncated_norm(n, NormKind::XnegBeta(beta))?;
            worst_l2 = worst_l2.max(l2_trunc - l2_full);
            worst_xneg = worst_xneg.max(xneg_trunc - xneg_full);
        }
        // tail decay: nonincreasing in n
        let mut prev = f64::INFINITY;
        let mut monotone = true;
        for &n in prefixes {
            let tail = v.projection_tail(n, beta);
            if tail > prev * (1.0 + EXACT_TOL) + EXACT_TOL {
                monotone = false;
            }
            prev = tail;
        }
        if !monotone {
            report.push(AuditCheck::new(
                format!("tail_monotone[probe={pi}]"),
                1.0,
                0.0,
            ));
        }
    }
    report.push(AuditCheck::new(
        "l2_contraction_excess",
        worst_l2,
        EXACT_TOL,
    ));
    report.push(AuditCheck::new(
        "xneg_contraction_excess",
        worst_xneg,
        EXACT_TOL,
    ));
    Ok(report)
}

/// Cauchy differences between consecutive Galerkin resolutions.
#[derive(Debug, Clone, Copy)]
pub struct ConvergenceRow {
    pub n: usize,
    pub n_next: usize,
    pub d_c: f64,
    pub d_lp: f64,
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut out = String::from("n,n_next,d_C,d_Lp\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{:?},{:?}", r.n, r.n_next, r.d_c, r.d_lp);
    }
    out
}

/// Run the same initial data through a nested family of mode counts and
/// measure, for consecutive pairs,
///   d_C  = max_t |u_n(t) - u_n'(t)| in X^{-beta_bar}
///   d_Lp = (Int |u_n - u_n'|_{L4}^{p_bar} dt)^{1/p_bar}
/// with the smaller solution zero-padded into the larger basis.
///
/// `u0` must live in the largest basis of the family; each run starts from
/// its restriction (the projection onto that span).
pub fn convergence_study(
    u0: &SpectralField,
    params: &ModelParams,
    config: &SolverConfig,
    mode_counts: &[usize],
    beta_bar: f64,
    p_bar: f64,
) -> Result<Vec<ConvergenceRow>> {
    if mode_counts.len() < 2 {
        return Err(Error::Config(
            "convergence study needs at least two mode counts".into(),
        ));
    }
    for w in mode_counts.windows(2) {
        if !(w[0] < w[1]) {
            return Err(Error::Config("mode counts must strictly increase".into()));
        }
    }
    if !(beta_bar > 0.0) || !(p_bar >= 1.0) {
        return Err(Error::Config("need beta_bar > 0 and p_bar >= 1".into()));
    }
    let dim = u0.basis().domain().dim();
    if dim != 1 {
        // the family is parameterized by modes per dimension; tensor domains
        // would need a policy for distributing counts across dimensions
        return Err(Error::Config(
            "convergence studies are defined on 1-D domains".into(),
        ));
    }
    if u0.basis().modes_per_dim()[0] != *mode_counts.last().unwrap() {
        return Err(Error::BasisMismatch(format!(
            "u0 must live in the largest basis (n = {})",
            mode_counts.last().unwrap()
        )));
    }

    let domain = u0.basis().domain().clone();
    let mut trajectories = Vec::with_capacity(mode_counts.len());
    for &n in mode_counts {
        let basis = crate::basis::build_basis(&domain, &[n])?;
        let start = u0.restrict(&basis)?;
        trajectories.push(integrate_observed(start, params, config, &mut |_, _| {
            Ok(())
        })?);
    }

    let mut rows = Vec::new();
    for pair in trajectories.windows(2) {
        let (small, large) = (&pair[0], &pair[1]);
        if small.samples().len() != large.samples().len() {
            return Err(Error::Shape("runs recorded different sample counts".into()));
        }
        let big_basis = large.basis();
        let mut d_c = 0.0f64;
        let mut lp_accum = 0.0f64;
        let mut prev: Option<(f64, f64)> = None;
        for ((ts, us), (tl, ul)) in small.samples().iter().zip(large.samples()) {
            if (ts - tl).abs() > 1e-9 {
                return Err(Error::Shape("sample times differ across runs".into()));
            }
            let diff = us.embed(big_basis)?.diff(ul)?;
            d_c = d_c.max(diff.norm(NormKind::XnegBeta(beta_bar))?);
            let l4 = diff.norm(NormKind::L4)?;
            let integrand = l4.powf(p_bar);
            if let Some((pt, pv)) = prev {
                lp_accum += 0.5 * (tl - pt) * (pv + integrand);
            }
            prev = Some((*tl, integrand));
        }
        rows.push(ConvergenceRow {
            n: small.basis().modes_per_dim()[0],
            n_next: large.basis().modes_per_dim()[0],
            d_c,
            d_lp: lp_accum.max(0.0).powf(1.0 / p_bar),
        });
    }
    Ok(rows)
}

/// Uniform-in-n boundedness of the projected nonlinearity integrals
/// (the H1(0,T) bound shadow): Int |F2(u_n)|^2 in X^{-beta} and
/// Int |F3(u_n)|^2 in L2, by trapezoid over trajectory samples.
pub fn projected_nonlinearity_integrals(trajectory: &Trajectory, beta: f64) -> Result<(f64, f64)> {
    let params = trajectory.params();
    let mut acc = (0.0f64, 0.0f64);
    let mut prev: Option<(f64, f64, f64)> = None;
    for (t, u) in trajectory.samples() {
        let f2 = operators::cross_laplacian(u)?;
        let f3 = operators::cubic_term(u, params)?;
        let a = f2.norm(NormKind::XnegBeta(beta))?.powi(2);
        let b = f3.norm(NormKind::L2)?.powi(2);
        if let Some((pt, pa, pb)) = prev {
            let h = t - pt;
            acc.0 += 0.5 * h * (pa + a);
            acc.1 += 0.5 * h * (pb + b);
        }
        prev = Some((*t, a, b));
    }
    Ok(acc)
}
