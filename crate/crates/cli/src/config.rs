//! Flat `key = value` run configuration with section prefixes.
//!
//! The format is deliberately dependency-free and diff-friendly: one
//! assignment per line, `#` comments, sections spelled out in the key
//! (domain., model., solver., audit., run.).  Unknown keys are rejected
//! with the offending line number.

use std::collections::BTreeSet;
use std::sync::Arc;

use llb_spectral::basis::{build_basis, BasisSpec, BoundaryKind, DomainSpec, ModeIndex};
use llb_spectral::error::{Error, Result};
use llb_spectral::field::{self, SpectralField};
use llb_spectral::integrator::{Scheme, SolverConfig};
use llb_spectral::operators::ModelParams;

/// Fully validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub domain: DomainSpec,
    pub modes_per_dim: Vec<usize>,
    pub params: ModelParams,
    pub solver: SolverConfig,
    pub beta: f64,
    pub alpha: f64,
    pub c_tol: f64,
    pub initial: InitialData,
    pub output_dir: std::path::PathBuf,
}

/// Initial-condition presets, plus loading a coefficient checkpoint.
#[derive(Debug, Clone)]
pub enum InitialData {
    Zero,
    Constant([f64; 3]),
    ModesFile(std::path::PathBuf),
    Random { seed: u64, decay: f64 },
    Checkpoint(std::path::PathBuf),
}

impl InitialData {
    fn parse(value: &str) -> Result<Self> {
        if value == "zero" {
            return Ok(InitialData::Zero);
        }
        if let Some(rest) = value.strip_prefix("constant:") {
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.len() != 3 {
                return Err(Error::Config(format!(
                    "constant preset needs 3 components (got `{rest}`)"
                )));
            }
            let mut v = [0.0f64; 3];
            for (i, p) in parts.iter().enumerate() {
                v[i] = p
                    .trim()
                    .parse()
                    .map_err(|e| Error::Config(format!("bad constant component: {e}")))?;
            }
            return Ok(InitialData::Constant(v));
        }
        if let Some(rest) = value.strip_prefix("modes:") {
            return Ok(InitialData::ModesFile(rest.trim().into()));
        }
        if let Some(rest) = value.strip_prefix("random:") {
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.len() != 2 {
                return Err(Error::Config(format!(
                    "random preset is random:<seed>,<decay> (got `{rest}`)"
                )));
            }
            let seed = parts[0]
                .trim()
                .parse()
                .map_err(|e| Error::Config(format!("bad seed: {e}")))?;
            let decay = parts[1]
                .trim()
                .parse()
                .map_err(|e| Error::Config(format!("bad decay: {e}")))?;
            return Ok(InitialData::Random { seed, decay });
        }
        if let Some(rest) = value.strip_prefix("checkpoint:") {
            return Ok(InitialData::Checkpoint(rest.trim().into()));
        }
        // bare value: treat as a checkpoint path
        Ok(InitialData::Checkpoint(value.into()))
    }

    /// Build the initial field in the given basis.
    pub fn build(&self, basis: &Arc<BasisSpec>) -> Result<SpectralField> {
        match self {
            InitialData::Zero => Ok(SpectralField::zero(basis)),
            InitialData::Constant(v) => SpectralField::constant(basis, *v),
            InitialData::Random { seed, decay } => SpectralField::random(basis, *seed, *decay),
            InitialData::ModesFile(path) => {
                let text = std::fs::read_to_string(path)?;
                let mut f = SpectralField::zero(basis);
                let dim = basis.domain().dim();
                for (ln, line) in text.lines().enumerate() {
                    let line = line.trim();
                    if line.is_empty() || line.starts_with('#') {
                        continue;
                    }
                    let toks: Vec<&str> = line.split_whitespace().collect();
                    if toks.len() != dim + 3 {
                        return Err(Error::Parse {
                            line: ln + 1,
                            msg: format!(
                                "expected {dim} mode indices and 3 coefficients, got `{line}`"
                            ),
                        });
                    }
                    let mut idx = Vec::with_capacity(dim);
                    for t in &toks[..dim] {
                        idx.push(t.parse::<usize>().map_err(|e| Error::Parse {
                            line: ln + 1,
                            msg: format!("bad mode index: {e}"),
                        })?);
                    }
                    let mode = ModeIndex::new(&idx)?;
                    let slot = basis.slot_of(&mode).ok_or_else(|| Error::Parse {
                        line: ln + 1,
                        msg: format!("mode {mode} not retained by the basis"),
                    })?;
                    for (i, t) in toks[dim..].iter().enumerate() {
                        f.coeffs_mut()[slot][i] = t.parse().map_err(|e| Error::Parse {
                            line: ln + 1,
                            msg: format!("bad coefficient: {e}"),
                        })?;
                    }
                }
                f.check_finite()?;
                Ok(f)
            }
            InitialData::Checkpoint(path) => {
                let f = field::load_checkpoint(path)?;
                if !f.basis().same_layout(basis) {
                    return Err(Error::BasisMismatch(
                        "checkpoint basis differs from the configured basis".into(),
                    ));
                }
                // rebuild on the configured basis instance
                SpectralField::from_coeffs(basis, f.coeffs().to_vec())
            }
        }
    }
}

struct RawConfig {
    entries: Vec<(usize, String, String)>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        let mut seen = BTreeSet::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: ln + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if !seen.insert(key.clone()) {
                return Err(Error::Parse {
                    line: ln + 1,
                    msg: format!("duplicate key `{key}`"),
                });
            }
            entries.push((ln + 1, key, value));
        }
        Ok(RawConfig { entries })
    }

    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        let pos = self.entries.iter().position(|(_, k, _)| k == key)?;
        let (ln, _, v) = self.entries.remove(pos);
        Some((ln, v))
    }
}

fn parse_at<T: std::str::FromStr>(ln: usize, key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e| Error::Parse {
        line: ln,
        msg: format!("bad value for `{key}`: {e}"),
    })
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut raw = RawConfig::parse(text)?;
        let mut missing = Vec::new();
        let mut require = |raw: &mut RawConfig, key: &str| match raw.take(key) {
            Some(x) => Some(x),
            None => {
                missing.push(key.to_string());
                None
            }
        };

        let dim = require(&mut raw, "domain.dim");
        let lengths = require(&mut raw, "domain.lengths");
        let bc = require(&mut raw, "domain.bc");
        let modes = require(&mut raw, "domain.modes_per_dim");
        let kappa1 = require(&mut raw, "model.kappa1");
        let gamma = require(&mut raw, "model.gamma");
        let dt = require(&mut raw, "solver.dt");
        let t_end = require(&mut raw, "solver.t_end");
        let scheme = require(&mut raw, "solver.scheme");
        let initial = require(&mut raw, "run.initial");
        let output_dir = require(&mut raw, "run.output_dir");
        if !missing.is_empty() {
            return Err(Error::Config(format!(
                "missing required keys: {}",
                missing.join(", ")
            )));
        }
        let (dim, lengths, bc, modes) =
            (dim.unwrap(), lengths.unwrap(), bc.unwrap(), modes.unwrap());
        let (kappa1, gamma) = (kappa1.unwrap(), gamma.unwrap());
        let (dt, t_end, scheme) = (dt.unwrap(), t_end.unwrap(), scheme.unwrap());
        let (initial, output_dir) = (initial.unwrap(), output_dir.unwrap());

        let dim: usize = parse_at(dim.0, "domain.dim", &dim.1)?;
        let lengths_v: Result<Vec<f64>> = lengths
            .1
            .split(',')
            .map(|s| parse_at(lengths.0, "domain.lengths", s.trim()))
            .collect();
        let lengths_v = lengths_v?;
        if lengths_v.len() != dim {
            return Err(Error::Parse {
                line: lengths.0,
                msg: format!(
                    "domain.lengths has {} entries for domain.dim = {dim}",
                    lengths_v.len()
                ),
            });
        }
        let bc_kind = BoundaryKind::parse(&bc.1).map_err(|e| Error::Parse {
            line: bc.0,
            msg: e.to_string(),
        })?;
        let domain = DomainSpec::new(&lengths_v, bc_kind)?;
        let modes_v: Result<Vec<usize>> = modes
            .1
            .split(',')
            .map(|s| parse_at(modes.0, "domain.modes_per_dim", s.trim()))
            .collect();
        let modes_v = modes_v?;
        if modes_v.len() != dim {
            return Err(Error::Parse {
                line: modes.0,
                msg: format!(
                    "domain.modes_per_dim has {} entries for domain.dim = {dim}",
                    modes_v.len()
                ),
            });
        }

        let kappa1_v: f64 = parse_at(kappa1.0, "model.kappa1", &kappa1.1)?;
        let gamma_v: f64 = parse_at(gamma.0, "model.gamma", &gamma.1)?;

        // either direct kappa2/mu or the physical triple (T, Tc, chi_par)
        let direct_k2 = raw.take("model.kappa2");
        let direct_mu = raw.take("model.mu");
        let temp = raw.take("model.temperature");
        let t_c = raw.take("model.t_curie");
        let chi = raw.take("model.chi_parallel");
        let params = match (direct_k2, direct_mu, temp, t_c, chi) {
            (Some(k2), Some(mu), None, None, None) => ModelParams::new(
                kappa1_v,
                parse_at(k2.0, "model.kappa2", &k2.1)?,
                gamma_v,
                parse_at(mu.0, "model.mu", &mu.1)?,
            )?,
            (None, None, Some(t), Some(tc), Some(ch)) => ModelParams::from_temperature(
                kappa1_v,
                gamma_v,
                parse_at(t.0, "model.temperature", &t.1)?,
                parse_at(tc.0, "model.t_curie", &tc.1)?,
                parse_at(ch.0, "model.chi_parallel", &ch.1)?,
            )?,
            _ => {
                return Err(Error::Config(
                    "model needs either {kappa2, mu} or {temperature, t_curie, chi_parallel}, \
not a mixture"
                        .into(),
                ))
            }
        };

        let dt_v: f64 = parse_at(dt.0, "solver.dt", &dt.1)?;
        let t_end_v: f64 = parse_at(t_end.0, "solver.t_end", &t_end.1)?;
        let scheme_v = Scheme::parse(&scheme.1).map_err(|e| Error::Parse {
            line: scheme.0,
            msg: e.to_string(),
        })?;
        let record_every = match raw.take("solver.record_every") {
            Some((ln, v)) => parse_at(ln, "solver.record_every", &v)?,
            None => 1usize,
        };
        let mut solver = SolverConfig::new(dt_v, t_end_v, scheme_v, record_every)?;
        if let Some((ln, v)) = raw.take("solver.adapt") {
            let flag: bool = parse_at(ln, "solver.adapt", &v)?;
            if flag {
                let tol = match raw.take("solver.adapt_tol") {
                    Some((ln2, v2)) => parse_at(ln2, "solver.adapt_tol", &v2)?,
                    None => 1e-8,
                };
                solver.adapt_tol = Some(tol);
            }
        } else {
            raw.take("solver.adapt_tol"); // tolerated but inert when adapt is off
        }
        solver.validate()?;

        let beta = match raw.take("audit.beta") {
            Some((ln, v)) => parse_at(ln, "audit.beta", &v)?,
            None => default_beta(dim),
        };
        let alpha = match raw.take("audit.alpha") {
            Some((ln, v)) => parse_at(ln, "audit.alpha", &v)?,
            None => 0.25,
        };
        let c_tol = match raw.take("audit.c_tol") {
            Some((ln, v)) => parse_at(ln, "audit.c_tol", &v)?,
            None => 10.0,
        };
        if !(beta > 0.0) {
            return Err(Error::Config(format!(
                "audit.beta must be positive (got {beta})"
            )));
        }
        if !(alpha > 0.0 && alpha <= 0.25) {
            return Err(Error::Config(format!(
                "audit.alpha must lie in (0, 1/4] (got {alpha})"
            )));
        }

        let initial_v = InitialData::parse(&initial.1).map_err(|e| Error::Parse {
            line: initial.0,
            msg: e.to_string(),
        })?;
        let output_v: std::path::PathBuf = output_dir.1.into();

        if let Some((ln, key, _)) = raw.entries.first() {
            return Err(Error::Parse {
                line: *ln,
                msg: format!("unknown key `{key}`"),
            });
        }

        Ok(RunConfig {
            domain,
            modes_per_dim: modes_v,
            params,
            solver,
            beta,
            alpha,
            c_tol,
            initial: initial_v,
            output_dir: output_v,
        })
    }

    pub fn load(path: &std::path::Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        RunConfig::parse(&text)
    }

    pub fn build_basis(&self) -> Result<Arc<BasisSpec>> {
        build_basis(&self.domain, &self.modes_per_dim)
    }
}

/// beta_bar default honoring beta > d/6 on smooth box extensions, floored
/// at 1.
pub fn default_beta(dim: usize) -> f64 {
    (dim as f64 / 6.0 + 0.5).max(1.0)
}
