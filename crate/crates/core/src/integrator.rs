//! Time integration of the Galerkin ODE system.
//!
//! The IMEX Euler step treats the diagonal linear part (kappa1*Lap - kappa2)
//! implicitly and the gyromagnetic and cubic nonlinearities explicitly; one
//! diagonal solve per step, unconditionally stable on the linear part.  The
//! classical RK4 step is fully explicit and guarded by
//! dt * (kappa1 * lambda_max + kappa2) <= 2.5.

use std::path::Path;
use std::sync::Arc;

use crate::basis::BasisSpec;
use crate::error::{Error, Result};
use crate::field::{self, NormKind, SpectralField};
use crate::operators::{self, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    ImexEuler,
    Rk4,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::ImexEuler => "imex_euler",
            Scheme::Rk4 => "rk4",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "imex_euler" => Ok(Scheme::ImexEuler),
            "rk4" => Ok(Scheme::Rk4),
            other => Err(Error::Config(format!(
                "unknown scheme `{other}` (expected imex_euler|rk4)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub record_every: usize,
    /// Step-doubling local error tolerance; `None` keeps the step fixed
    /// (the default, for reproducibility).
    pub adapt_tol: Option<f64>,
}

impl SolverConfig {
    pub fn new(dt: f64, t_end: f64, scheme: Scheme, record_every: usize) -> Result<Self> {
        let c = SolverConfig {
            dt,
            t_end,
            scheme,
            record_every,
            adapt_tol: None,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!(
                "dt must be positive (got {})",
                self.dt
            )));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::Config(format!(
                "t_end must be positive (got {})",
                self.t_end
            )));
        }
        if self.dt >= self.t_end {
            return Err(Error::Config(format!(
                "dt = {} must be smaller than t_end = {}",
                self.dt, self.t_end
            )));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        if let Some(tol) = self.adapt_tol {
            if !(tol > 0.0) {
                return Err(Error::Config(format!(
                    "adaptation tolerance must be positive (got {tol})"
                )));
            }
        }
        Ok(())
    }
}

/// Recorded solver run: (t_j, state) samples plus the configuration echo.
#[derive(Debug, Clone)]
pub struct Trajectory {
    samples: Vec<(f64, SpectralField)>,
    params: ModelParams,
    config: SolverConfig,
}

impl Trajectory {
    pub fn samples(&self) -> &[(f64, SpectralField)] {
        &self.samples
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn basis(&self) -> &Arc<BasisSpec> {
        self.samples[0].1.basis()
    }

    pub fn final_state(&self) -> &SpectralField {
        &self.samples.last().unwrap().1
    }

    pub fn horizon(&self) -> f64 {
        self.samples.last().unwrap().0
    }

    fn check_invariants(samples: &[(f64, SpectralField)]) -> Result<()> {
        if samples.is_empty() {
            return Err(Error::Degenerate("trajectory has no samples".into()));
        }
        if samples[0].0 != 0.0 {
            return Err(Error::Config(format!(
                "trajectory must start at t = 0 (got {})",
                samples[0].0
            )));
        }
        for w in samples.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::Config("sample times must strictly increase".into()));
            }
            w[0].1.require_same_basis(&w[1].1)?;
        }
        Ok(())
    }

    /// Write the trajectory as a manifest plus one field checkpoint per
    /// sample into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut manifest = String::new();
        manifest.push_str("llb-trajectory v1\n");
        manifest.push_str(&format!(
            "params = {:?} {:?} {:?} {:?}\n",
            self.params.kappa1, self.params.kappa2, self.params.gamma, self.params.mu
        ));
        if let Some(prov) = &self.params.provenance {
            manifest.push_str(&format!(
                "provenance = {:?} {:?} {:?}\n",
                prov.temperature, prov.t_curie, prov.chi_parallel
            ));
        }
        manifest.push_str(&format!(
            "config = dt {:?} t_end {:?} scheme {} record_every {} adapt {}\n",
            self.config.dt,
            self.config.t_end,
            self.config.scheme.as_str(),
            self.config.record_every,
            match self.config.adapt_tol {
                Some(tol) => format!("{tol:?}"),
                None => "off".into(),
            }
        ));
        manifest.push_str(&format!("samples = {}\n", self.samples.len()));
        for (i, (t, u)) in self.samples.iter().enumerate() {
            let name = format!("sample_{i:06}.txt");
            manifest.push_str(&format!("{t:?} {name}\n"));
            field::save_checkpoint(u, &dir.join(name))?;
        }
        std::fs::write(dir.join("manifest.txt"), manifest)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Trajectory> {
        let text = std::fs::read_to_string(dir.join("manifest.txt"))?;
        let mut lines = text.lines().enumerate();
        let perr = |line: usize, msg: String| Error::Parse {
            line: line + 1,
            msg,
        };
        let (ln, header) = lines
            .next()
            .ok_or_else(|| perr(0, "empty manifest".into()))?;
        if header.trim() != "llb-trajectory v1" {
            return Err(perr(ln, format!("unexpected header `{header}`")));
        }
        let (ln, pline) = lines
            .next()
            .ok_or_else(|| perr(0, "missing params".into()))?;
        let pvals: Vec<f64> = pline
            .trim_start_matches("params =")
            .split_whitespace()
            .map(|s| s.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| perr(ln, format!("bad params: {e}")))?;
        if pvals.len() != 4 {
            return Err(perr(ln, "params needs 4 values".into()));
        }
        let mut params = ModelParams::new(pvals[0], pvals[1], pvals[2], pvals[3])?;
        let (mut ln, mut cline) = lines
            .next()
            .ok_or_else(|| perr(0, "missing config".into()))?;
        if let Some(rest) = cline.strip_prefix("provenance =") {
            let vals: Vec<f64> = rest
                .split_whitespace()
                .map(|s| s.parse())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| perr(ln, format!("bad provenance: {e}")))?;
            if vals.len() != 3 {
                return Err(perr(ln, "provenance needs 3 values".into()));
            }
            params.provenance = Some(crate::operators::Provenance {
                temperature: vals[0],
                t_curie: vals[1],
                chi_parallel: vals[2],
            });
            params.validate()?;
            (ln, cline) = lines
                .next()
                .ok_or_else(|| perr(0, "missing config".into()))?;
        }
        let ctoks: Vec<&str> = cline
            .trim_start_matches("config =")
            .split_whitespace()
            .collect();
        if ctoks.len() != 10 {
            return Err(perr(ln, "malformed config line".into()));
        }
        let dt: f64 = ctoks[1]
            .parse()
            .map_err(|e| perr(ln, format!("bad dt: {e}")))?;
        let t_end: f64 = ctoks[3]
            .parse()
            .map_err(|e| perr(ln, format!("bad t_end: {e}")))?;
        let scheme = Scheme::parse(ctoks[5])?;
        let record_every: usize = ctoks[7]
            .parse()
            .map_err(|e| perr(ln, format!("bad record_every: {e}")))?;
        let mut config = SolverConfig::new(dt, t_end, scheme, record_every)?;
        if ctoks[9] != "off" {
            config.adapt_tol = Some(
                ctoks[9]
                    .parse()
                    .map_err(|e| perr(ln, format!("bad adapt tolerance: {e}")))?,
            );
            config.validate()?;
        }
        let (ln, sline) = lines
            .next()
            .ok_or_else(|| perr(0, "missing samples".into()))?;
        let n: usize = sline
            .trim_start_matches("samples =")
            .trim()
            .parse()
            .map_err(|e| perr(ln, format!("bad sample count: {e}")))?;
        let mut samples = Vec::with_capacity(n);
        for _ in 0..n {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| perr(0, "truncated manifest".into()))?;
            let (tstr, name) = line
                .split_once(' ')
                .ok_or_else(|| perr(ln, "expected `<t> <file>`".into()))?;
            let t: f64 = tstr
                .parse()
                .map_err(|e| perr(ln, format!("bad time: {e}")))?;
            let u = field::load_checkpoint(&dir.join(name.trim()))?;
            samples.push((t, u));
        }
        Trajectory::check_invariants(&samples)?;
        Ok(Trajectory {
            samples,
            params,
            config,
        })
    }
}

/// One IMEX Euler step: per mode,
/// c_new = (c + dt * g(u)) / (1 + dt (kappa1 lambda + kappa2))
/// with g = gamma * F2(u) + kappa2 * (u - F3(u)), the explicit nonlinear
/// part (the "+u" of F3 folds into the implicit denominator).
pub fn step_imex(u: &SpectralField, params: &ModelParams, dt: f64) -> Result<SpectralField> {
    if !(dt > 0.0) {
        return Err(Error::Config(format!("dt must be positive (got {dt})")));
    }
    let g = explicit_part(u, params)?;
    let mut out = u.clone();
    let eigs = u.basis().eigenvalues().to_vec();
    for ((c, gk), lam) in out.coeffs_mut().iter_mut().zip(g.coeffs()).zip(eigs) {
        let denom = 1.0 + dt * (params.kappa1 * lam + params.kappa2);
        for i in 0..3 {
            c[i] = (c[i] + dt * gk[i]) / denom;
        }
    }
    Ok(out)
}

/// The explicitly treated nonlinearity gamma*F2(u) - kappa2*mu*P(|u|^2 u).
fn explicit_part(u: &SpectralField, params: &ModelParams) -> Result<SpectralField> {
    let mut g = if params.gamma != 0.0 {
        let mut f2 = operators::cross_laplacian(u)?;
        f2.scale(params.gamma);
        f2
    } else {
        SpectralField::zero(u.basis())
    };
    if params.kappa2 != 0.0 && params.mu != 0.0 {
        // kappa2 * (u - F3(u)) = -kappa2 * mu * P(|u|^2 u)
        let f3 = operators::cubic_term(u, params)?;
        g.scaled_add(params.kappa2, u)?;
        g.scaled_add(-params.kappa2, &f3)?;
    }
    Ok(g)
}

pub fn rk4_guard(basis: &BasisSpec, params: &ModelParams, dt: f64) -> Result<()> {
    let stiff = dt * (params.kappa1 * basis.lambda_max() + params.kappa2);
    if stiff > 2.5 {
        return Err(Error::StabilityGuard(format!(
            "rk4 requires dt * (kappa1 * lambda_max + kappa2) <= 2.5 (got {stiff:.3})"
        )));
    }
    Ok(())
}

/// Classical four-stage explicit step on the full right-hand side.
pub fn step_rk4(u: &SpectralField, params: &ModelParams, dt: f64) -> Result<SpectralField> {
    if !(dt > 0.0) {
        return Err(Error::Config(format!("dt must be positive (got {dt})")));
    }
    rk4_guard(u.basis(), params, dt)?;
    let k1 = operators::rhs(u, params)?;
    let mut u2 = u.clone();
    u2.scaled_add(0.5 * dt, &k1)?;
    let k2 = operators::rhs(&u2, params)?;
    let mut u3 = u.clone();
    u3.scaled_add(0.5 * dt, &k2)?;
    let k3 = operators::rhs(&u3, params)?;
    let mut u4 = u.clone();
    u4.scaled_add(dt, &k3)?;
    let k4 = operators::rhs(&u4, params)?;
    let mut out = u.clone();
    out.scaled_add(dt / 6.0, &k1)?;
    out.scaled_add(dt / 3.0, &k2)?;
    out.scaled_add(dt / 3.0, &k3)?;
    out.scaled_add(dt / 6.0, &k4)?;
    Ok(out)
}

fn step(u: &SpectralField, params: &ModelParams, scheme: Scheme, dt: f64) -> Result<SpectralField> {
    match scheme {
        Scheme::ImexEuler => step_imex(u, params, dt),
        Scheme::Rk4 => step_rk4(u, params, dt),
    }
}

/// A state can overflow inside a step (the nonlinear evaluation hits inf
/// before the post-step check runs); fold that into the blow-up diagnostic.
fn step_checked(
    u: &SpectralField,
    params: &ModelParams,
    scheme: Scheme,
    dt: f64,
    step_index: usize,
    t_next: f64,
) -> Result<SpectralField> {
    match step(u, params, scheme, dt) {
        Ok(next) => Ok(next),
        Err(Error::NonFinite(_)) => Err(Error::Blowup {
            step: step_index,
            t: t_next,
            l2: u.norm(NormKind::L2).unwrap_or(f64::NAN),
        }),
        Err(e) => Err(e),
    }
}

/// Advance from 0 to t_end, recording every `record_every`-th accepted step
/// (plus the initial and final states) and invoking `observer` on every
/// accepted state.  Deterministic for fixed inputs.
pub fn integrate_observed(
    u0: SpectralField,
    params: &ModelParams,
    config: &SolverConfig,
    observer: &mut dyn FnMut(f64, &SpectralField) -> Result<()>,
) -> Result<Trajectory> {
    // a diverging state can overflow the observer's norm integrals while the
    // coefficients are still finite; report that as blow-up, not as a bare
    // arithmetic error
    fn observe(
        observer: &mut dyn FnMut(f64, &SpectralField) -> Result<()>,
        t: f64,
        u: &SpectralField,
        step: usize,
    ) -> Result<()> {
        match observer(t, u) {
            Err(Error::NonFinite(_)) => Err(Error::Blowup {
                step,
                t,
                l2: u.norm(NormKind::L2).unwrap_or(f64::NAN),
            }),
            other => other,
        }
    }
    config.validate()?;
    params.validate()?;
    u0.check_finite()?;
    if config.scheme == Scheme::Rk4 {
        rk4_guard(u0.basis(), params, config.dt)?;
    }

    let mut samples: Vec<(f64, SpectralField)> = Vec::new();
    observe(observer, 0.0, &u0, 0)?;
    samples.push((0.0, u0.clone()));

    let mut u = u0;
    let mut accepted = 0usize;

    if let Some(tol) = config.adapt_tol {
        // Step doubling: accept the two-half-step solution when the halving
        // difference is within tolerance, otherwise shrink.
        let mut t = 0.0;
        let mut dt = config.dt;
        while t < config.t_end - 1e-12 * config.t_end {
            let dt_try = dt.min(config.t_end - t);
            let coarse = step_checked(&u, params, config.scheme, dt_try, accepted + 1, t + dt_try)?;
            let half = step_checked(
                &u,
                params,
                config.scheme,
                0.5 * dt_try,
                accepted + 1,
                t + dt_try,
            )?;
            let fine = step_checked(
                &half,
                params,
                config.scheme,
                0.5 * dt_try,
                accepted + 1,
                t + dt_try,
            )?;
            let err = coarse.diff(&fine)?.norm(NormKind::L2)?;
            if err > tol && dt_try > 1e-12 {
                dt = 0.5 * dt_try;
                continue;
            }
            t += dt_try;
            u = fine;
            check_state(&u, accepted + 1, t)?;
            accepted += 1;
            observe(observer, t, &u, accepted)?;
            if accepted.is_multiple_of(config.record_every) {
                samples.push((t, u.clone()));
            }
            if err < 0.125 * tol && 2.0 * dt <= config.dt {
                dt *= 2.0;
            }
        }
        if samples.last().unwrap().0 < t {
            samples.push((t, u.clone()));
        }
    } else {
        let n_full = ((config.t_end + 1e-12) / config.dt).floor() as usize;
        let remainder = config.t_end - n_full as f64 * config.dt;
        for k in 0..n_full {
            let t = (k + 1) as f64 * config.dt;
            u = step_checked(&u, params, config.scheme, config.dt, k + 1, t)?;
            check_state(&u, k + 1, t)?;
            accepted += 1;
            observe(observer, t, &u, k + 1)?;
            if accepted.is_multiple_of(config.record_every) {
                samples.push((t, u.clone()));
            }
        }
        if remainder > 1e-12 * config.dt.max(1.0) {
            u = step_checked(
                &u,
                params,
                config.scheme,
                remainder,
                n_full + 1,
                config.t_end,
            )?;
            check_state(&u, n_full + 1, config.t_end)?;
            observe(observer, config.t_end, &u, n_full + 1)?;
            samples.push((config.t_end, u.clone()));
        } else if samples.last().unwrap().0 < n_full as f64 * config.dt {
            samples.push((n_full as f64 * config.dt, u.clone()));
        }
    }

    Trajectory::check_invariants(&samples)?;
    Ok(Trajectory {
        samples,
        params: params.clone(),
        config: config.clone(),
    })
}

pub fn integrate(
    u0: SpectralField,
    params: &ModelParams,
    config: &SolverConfig,
) -> Result<Trajectory> {
    integrate_observed(u0, params, config, &mut |_, _| Ok(()))
}

fn check_state(u: &SpectralField, step: usize, t: f64) -> Result<()> {
    let mut sq = 0.0;
    for c in u.coeffs() {
        for x in c {
            sq += x * x;
        }
    }
    if !sq.is_finite() {
        return Err(Error::Blowup {
            step,
            t,
            l2: sq.sqrt(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_basis, BoundaryKind, DomainSpec, ModeIndex};
    use crate::oracle;
    use std::f64::consts::PI;

    fn neumann_basis(n: usize) -> Arc<BasisSpec> {
        let d = DomainSpec::new(&[PI], BoundaryKind::Neumann).unwrap();
        build_basis(&d, &[n]).unwrap()
    }

    fn params(k1: f64, k2: f64, g: f64, mu: f64) -> ModelParams {
        ModelParams::new(k1, k2, g, mu).unwrap()
    }

    fn pointwise_amplitude(u: &SpectralField) -> [f64; 3] {
        // for spatially constant fields: value = c_0 * e_0
        let e0 = 1.0 / u.basis().domain().measure().sqrt();
        let c = u.coeffs()[0];
        [c[0] * e0, c[1] * e0, c[2] * e0]
    }

    #[test]
    fn imex_hand_computed_constant_step() {
        // (1 - 0.1*1*1) / (1 + 0.1) pointwise
        let b = neumann_basis(4);
        let u = SpectralField::constant(&b, [1.0, 0.0, 0.0]).unwrap();
        let p = params(1.0, 1.0, 0.7, 1.0);
        let v = step_imex(&u, &p, 0.1).unwrap();
        let amp = pointwise_amplitude(&v);
        assert!((amp[0] - 0.9 / 1.1).abs() < 1e-12, "{}", amp[0]);
        assert!(amp[1].abs() < 1e-14 && amp[2].abs() < 1e-14);
    }

    #[test]
    fn imex_scalar_implicit_single_mode() {
        // mu = 0, gamma = 0, lambda = 1, kappa1 = kappa2 = 1, dt = 0.1:
        // amplitude factor 1/1.2
        let b = neumann_basis(4);
        let mode = ModeIndex::new(&[1]).unwrap();
        let u = SpectralField::single_mode(&b, &mode, 0, 1.0).unwrap();
        let p = params(1.0, 1.0, 0.0, 0.0);
        let v = step_imex(&u, &p, 0.1).unwrap();
        let slot = b.slot_of(&mode).unwrap();
        assert!((v.coeffs()[slot][0] - 1.0 / 1.2).abs() < 1e-14);
    }

    #[test]
    fn zero_field_stays_zero() {
        let b = neumann_basis(4);
        let p = params(1.0, 1.0, 1.0, 1.0);
        let z = SpectralField::zero(&b);
        assert!(step_imex(&z, &p, 0.1).unwrap().norm(NormKind::L2).unwrap() == 0.0);
        assert!(step_rk4(&z, &p, 0.01).unwrap().norm(NormKind::L2).unwrap() == 0.0);
        let cfg = SolverConfig::new(0.01, 0.1, Scheme::ImexEuler, 1).unwrap();
        let traj = integrate(z, &p, &cfg).unwrap();
        for (_, u) in traj.samples() {
            assert!(u.norm(NormKind::L2).unwrap() == 0.0);
        }
    }

    #[test]
    fn rk4_guard_enforced() {
        let b = neumann_basis(32); // lambda_max = 961
        let p = params(1.0, 1.0, 0.0, 0.0);
        let u = SpectralField::random(&b, 1, 1.0).unwrap();
        assert!(step_rk4(&u, &p, 0.01).is_err());
        assert!(step_rk4(&u, &p, 0.001).is_ok());
        let cfg = SolverConfig::new(0.01, 1.0, Scheme::Rk4, 1).unwrap();
        assert!(integrate(u, &p, &cfg).is_err());
    }

    #[test]
    fn rk4_at_least_fourth_order_on_bernoulli() {
        // the dt^4 error coefficient of this problem nearly cancels at
        // t = 0.5, so halving gains a factor ~37; assert at least 4th order
        let b = neumann_basis(3);
        let p = params(1.0, 1.0, 0.5, 1.0);
        let r0 = 1.0;
        let mut errs = Vec::new();
        for &dt in &[0.02, 0.01] {
            let u0 = SpectralField::constant(&b, [r0, 0.0, 0.0]).unwrap();
            let cfg = SolverConfig::new(dt, 0.5, Scheme::Rk4, 1 << 30).unwrap();
            let traj = integrate(u0, &p, &cfg).unwrap();
            let amp = pointwise_amplitude(traj.final_state())[0];
            let exact = oracle::constant_field_exact(r0, &p, 0.5);
            errs.push((amp - exact).abs());
        }
        let ratio = errs[0] / errs[1];
        assert!(ratio >= 12.0, "rk4 order ratio {ratio} (errors {errs:?})");
    }

    #[test]
    fn rk4_fourth_order_on_linear_decay() {
        // clean dt^4 regime: halving gains ~16
        let b = neumann_basis(4);
        let p = params(1.0, 1.0, 0.0, 0.0);
        let mode = ModeIndex::new(&[1]).unwrap();
        let slot = b.slot_of(&mode).unwrap();
        let mut errs = Vec::new();
        for &dt in &[0.05, 0.025] {
            let u0 = SpectralField::single_mode(&b, &mode, 0, 1.0).unwrap();
            let cfg = SolverConfig::new(dt, 1.0, Scheme::Rk4, 1 << 30).unwrap();
            let traj = integrate(u0, &p, &cfg).unwrap();
            let got = traj.final_state().coeffs()[slot][0];
            errs.push((got - (-2.0f64).exp()).abs());
        }
        let ratio = errs[0] / errs[1];
        assert!(
            (12.0..24.0).contains(&ratio),
            "rk4 order ratio {ratio} (errors {errs:?})"
        );
    }

    #[test]
    fn rk4_linear_single_mode_machine_precision() {
        let b = neumann_basis(4);
        let p = params(1.0, 1.0, 0.0, 0.0);
        let mode = ModeIndex::new(&[1]).unwrap();
        let u0 = SpectralField::single_mode(&b, &mode, 2, 1.0).unwrap();
        let cfg = SolverConfig::new(1e-3, 1.0, Scheme::Rk4, 1000).unwrap();
        let traj = integrate(u0, &p, &cfg).unwrap();
        let slot = b.slot_of(&mode).unwrap();
        let amp = traj.final_state().coeffs()[slot][2];
        assert!(
            (amp - (-2.0f64).exp()).abs() < 1e-10,
            "{} vs {}",
            amp,
            (-2.0f64).exp()
        );
    }

    #[test]
    fn imex_bernoulli_first_order_accuracy() {
        // honest accuracy of the first-order scheme on the constant-field
        // problem: error ~ 0.065 * dt, and halves with dt
        let b = neumann_basis(3);
        let p = params(1.0, 1.0, 0.0, 1.0);
        let exact = oracle::constant_field_exact(1.0, &p, 0.5).powi(2);
        let mut errs = Vec::new();
        for &dt in &[1e-3, 5e-4] {
            let u0 = SpectralField::constant(&b, [1.0, 0.0, 0.0]).unwrap();
            let cfg = SolverConfig::new(dt, 0.5, Scheme::ImexEuler, 1 << 30).unwrap();
            let traj = integrate(u0, &p, &cfg).unwrap();
            let amp = pointwise_amplitude(traj.final_state())[0];
            errs.push((amp * amp - exact).abs());
        }
        assert!(errs[0] < 1e-4, "imex error at dt=1e-3: {}", errs[0]);
        let ratio = errs[0] / errs[1];
        assert!((1.7..2.3).contains(&ratio), "first-order halving: {ratio}");
    }

    #[test]
    fn direction_preserved_for_constant_data() {
        let b = neumann_basis(4);
        let p = params(1.0, 1.0, 2.0, 1.0);
        let dir = [1.0, 2.0, -0.5];
        let u0 = SpectralField::constant(&b, dir).unwrap();
        let cfg = SolverConfig::new(1e-3, 0.3, Scheme::ImexEuler, 50).unwrap();
        let traj = integrate(u0, &p, &cfg).unwrap();
        let nd = crate::vec3::norm(dir);
        for (t, u) in traj.samples() {
            // spatially constant: all non-constant coefficients stay zero
            for (slot, c) in u.coeffs().iter().enumerate().skip(1) {
                assert!(
                    crate::vec3::norm(*c) < 1e-12,
                    "t = {t}: mode {slot} excited"
                );
            }
            let amp = pointwise_amplitude(u);
            let na = crate::vec3::norm(amp);
            if na > 0.0 {
                let cosang = crate::vec3::dot(amp, dir) / (na * nd);
                assert!((cosang - 1.0).abs() < 1e-10, "t = {t}: angle drift");
            }
        }
    }

    #[test]
    fn blowup_detected_with_diagnostic() {
        // the explicit cubic overshoots for dt * mu * |u|^2 >> 1 and the
        // amplitude roughly cubes every step; the integrator must abort with
        // the step index rather than return garbage
        let b = neumann_basis(2);
        let p = params(1.0, 1.0, 0.0, 1.0);
        let u0 = SpectralField::constant(&b, [10.0, 0.0, 0.0]).unwrap();
        let cfg = SolverConfig::new(0.1, 10.0, Scheme::ImexEuler, 1).unwrap();
        let res = integrate(u0, &p, &cfg);
        match res {
            Err(Error::Blowup { step, t, .. }) => {
                assert!(step > 0 && t > 0.0);
            }
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn recording_and_final_sample() {
        let b = neumann_basis(3);
        let p = params(1.0, 1.0, 0.0, 0.0);
        let u0 = SpectralField::random(&b, 5, 1.0).unwrap();
        let cfg = SolverConfig::new(0.01, 0.1, Scheme::ImexEuler, 3).unwrap();
        let traj = integrate(u0, &p, &cfg).unwrap();
        let times: Vec<f64> = traj.samples().iter().map(|(t, _)| *t).collect();
        assert_eq!(times[0], 0.0);
        assert!((times.last().unwrap() - 0.1).abs() < 1e-12);
        for w in times.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn adaptive_mode_tracks_the_analytic_solution() {
        let b = neumann_basis(3);
        let p = params(1.0, 1.0, 0.0, 1.0);
        let u0 = SpectralField::constant(&b, [1.0, 0.0, 0.0]).unwrap();
        let mut cfg = SolverConfig::new(1e-2, 0.5, Scheme::ImexEuler, 1).unwrap();
        cfg.adapt_tol = Some(1e-7);
        let traj = integrate(u0, &p, &cfg).unwrap();
        let amp = pointwise_amplitude(traj.final_state())[0];
        let exact = oracle::constant_field_exact(1.0, &p, traj.horizon());
        assert!(
            (amp - exact).abs() < 1e-4,
            "adaptive end state {amp} vs {exact}"
        );
    }

    #[test]
    fn trajectory_save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let b = neumann_basis(4);
        let p = ModelParams::from_temperature(1.0, 1.0, 700.0, 600.0, 2.0).unwrap();
        let u0 = SpectralField::random(&b, 11, 1.0).unwrap();
        let mut cfg = SolverConfig::new(0.01, 0.05, Scheme::ImexEuler, 2).unwrap();
        cfg.adapt_tol = Some(1e-6);
        let traj = integrate(u0, &p, &cfg).unwrap();
        traj.save(dir.path()).unwrap();
        let back = Trajectory::load(dir.path()).unwrap();
        assert_eq!(traj.samples().len(), back.samples().len());
        for ((t0, u0), (t1, u1)) in traj.samples().iter().zip(back.samples()) {
            assert_eq!(t0, t1);
            assert_eq!(u0.coeffs(), u1.coeffs());
        }
        assert_eq!(traj.params(), back.params());
        assert_eq!(traj.config(), back.config());
    }
}
