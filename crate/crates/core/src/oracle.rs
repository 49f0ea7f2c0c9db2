//! Independent references the fast paths are validated against.
//!
//! Nothing here shares transform code with the basis module: eigenfunctions
//! are evaluated from their closed forms per point, the analytic solutions
//! come from the scalar reductions of the model, and the finite-difference
//! solver discretizes the PDE on its own nodal grid.  These ship in the
//! library (not test-only) so `verify` can run them in the field.

use std::sync::Arc;

use crate::basis::{eval_eigenfunction, BasisSpec, BoundaryKind, DomainSpec, ModeIndex, MAX_DIM};
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::operators::ModelParams;
use crate::vec3;

/// Magnitude of the spatially constant solution at time t.
///
/// A constant field keeps its direction (the cross term vanishes) and its
/// magnitude solves r' = -kappa2 * r * (1 + mu r^2), a Bernoulli equation
/// with closed form
///
/// ```text
/// r(t)^2 = r0^2 e^{-2 kappa2 t} / (1 + mu r0^2 (1 - e^{-2 kappa2 t}))
/// ```
pub fn constant_field_exact(r0: f64, params: &ModelParams, t: f64) -> f64 {
    let decay = (-2.0 * params.kappa2 * t).exp();
    let r2 = r0 * r0 * decay / (1.0 + params.mu * r0 * r0 * (1.0 - decay));
    r2.max(0.0).sqrt()
}

/// Amplitude of a single eigenmode under the linear flow (mu = 0):
/// amplitude * exp(-(kappa1 lambda + kappa2) t).  Any gamma is admissible
/// because a one-mode field is everywhere parallel to a fixed direction.
pub fn single_mode_exact(
    basis: &BasisSpec,
    mode: &ModeIndex,
    amplitude: f64,
    params: &ModelParams,
    t: f64,
) -> Result<f64> {
    if params.mu != 0.0 {
        return Err(Error::Config(format!(
            "single-mode closed form requires mu = 0 (got {})",
            params.mu
        )));
    }
    let slot = basis
        .slot_of(mode)
        .ok_or_else(|| Error::Shape(format!("mode {mode} not retained")))?;
    let lam = basis.eigenvalue(slot);
    Ok(amplitude * (-(params.kappa1 * lam + params.kappa2) * t).exp())
}

/// L2 projection onto the retained modes by direct high-resolution
/// quadrature of <f, e_k>, independent of the tabulated transform path.
pub fn dense_project(
    basis: &Arc<BasisSpec>,
    f: &dyn Fn(&[f64]) -> [f64; 3],
    oversample: usize,
) -> Result<SpectralField> {
    let domain = basis.domain();
    let dim = domain.dim();
    let base = basis.quad_points_per_dim();
    let mut m = [1usize; MAX_DIM];
    for j in 0..dim {
        m[j] = base[j] * oversample.max(1);
    }
    let mut h = [0.0f64; MAX_DIM];
    let mut cell = 1.0;
    for j in 0..dim {
        h[j] = domain.lengths()[j] / m[j] as f64;
        cell *= h[j];
    }

    let mut coeffs = vec![[0.0f64; 3]; basis.n_modes()];
    let total: usize = m[..dim].iter().product();
    let mut x = [0.0f64; MAX_DIM];
    for flat in 0..total {
        let mut rem = flat;
        for j in (0..dim).rev() {
            let q = rem % m[j];
            rem /= m[j];
            x[j] = (q as f64 + 0.5) * h[j];
        }
        let v = f(&x[..dim]);
        for (slot, mode) in basis.modes().iter().enumerate() {
            let e = eval_eigenfunction(domain, mode, &x[..dim]);
            for i in 0..3 {
                coeffs[slot][i] += v[i] * e;
            }
        }
    }
    for c in coeffs.iter_mut() {
        for v in c.iter_mut() {
            *v *= cell;
        }
    }
    SpectralField::from_coeffs(basis, coeffs)
}

/// Nodal trajectory of the 1-D finite-difference reference solver.
#[derive(Debug, Clone)]
pub struct FdTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<[f64; 3]>>,
    pub points: Vec<f64>,
    pub h: f64,
}

impl FdTrajectory {
    pub fn final_state(&self) -> &Vec<[f64; 3]> {
        self.states.last().unwrap()
    }
}

/// Second-order finite-difference cross-solver on a 1-D box, using the same
/// IMEX splitting as the spectral integrator.  Neumann conditions enter by
/// ghost-point reflection, Dirichlet by boundary zeroing.
pub fn fd_reference(
    domain: &DomainSpec,
    u0: &dyn Fn(f64) -> [f64; 3],
    params: &ModelParams,
    grid_points: usize,
    dt: f64,
    t_end: f64,
    record_every: usize,
) -> Result<FdTrajectory> {
    if domain.dim() != 1 {
        return Err(Error::Config(
            "the finite-difference reference solver is one-dimensional".into(),
        ));
    }
    if grid_points < 3 {
        return Err(Error::Config("need at least 3 grid points".into()));
    }
    if !(dt > 0.0) || !(t_end > dt) {
        return Err(Error::Config("need 0 < dt < t_end".into()));
    }
    params.validate()?;

    let l = domain.lengths()[0];
    let m = grid_points;
    let h = l / m as f64;
    let points: Vec<f64> = (0..m).map(|q| (q as f64 + 0.5) * h).collect();
    let mut v: Vec<[f64; 3]> = points.iter().map(|&x| u0(x)).collect();

    let inv_h2 = 1.0 / (h * h);
    let lap = |w: &[[f64; 3]], i: usize| -> [f64; 3] {
        let left = if i == 0 {
            match domain.bc() {
                BoundaryKind::Neumann => w[0],
                BoundaryKind::Dirichlet => [-w[0][0], -w[0][1], -w[0][2]],
            }
        } else {
            w[i - 1]
        };
        let right = if i == m - 1 {
            match domain.bc() {
                BoundaryKind::Neumann => w[m - 1],
                BoundaryKind::Dirichlet => [-w[m - 1][0], -w[m - 1][1], -w[m - 1][2]],
            }
        } else {
            w[i + 1]
        };
        std::array::from_fn(|c| (left[c] - 2.0 * w[i][c] + right[c]) * inv_h2)
    };

    // Tridiagonal factors of (1 + dt kappa2) I - dt kappa1 L, constant in
    // time; ghost elimination modifies the boundary diagonal.
    let off = -dt * params.kappa1 * inv_h2;
    let diag_mid = 1.0 + dt * params.kappa2 + 2.0 * dt * params.kappa1 * inv_h2;
    let diag_bnd = match domain.bc() {
        BoundaryKind::Neumann => 1.0 + dt * params.kappa2 + dt * params.kappa1 * inv_h2,
        BoundaryKind::Dirichlet => 1.0 + dt * params.kappa2 + 3.0 * dt * params.kappa1 * inv_h2,
    };
    let diag = |i: usize| {
        if i == 0 || i == m - 1 {
            diag_bnd
        } else {
            diag_mid
        }
    };

    let n_steps = ((t_end + 1e-12) / dt).floor() as usize;
    let remainder = t_end - n_steps as f64 * dt;
    if remainder > 1e-9 * dt {
        return Err(Error::Config(
            "t_end must be an integer multiple of dt for the reference solver".into(),
        ));
    }

    let mut times = vec![0.0];
    let mut states = vec![v.clone()];
    let mut rhs_buf = vec![[0.0f64; 3]; m];
    let mut cprime = vec![0.0f64; m];
    let mut dprime = vec![[0.0f64; 3]; m];

    for step in 1..=n_steps {
        // CFL-style guard on the explicitly treated terms
        let amp = v.iter().map(|w| vec3::norm(*w)).fold(0.0f64, f64::max);
        let explicit_scale =
            dt * (params.gamma * amp * 4.0 * inv_h2 + params.kappa2 * params.mu * amp * amp);
        if explicit_scale > 2.0 {
            return Err(Error::StabilityGuard(format!(
                "explicit terms too stiff at step {step}: dt * scale = {explicit_scale:.3}"
            )));
        }

        // explicit part g = gamma u x Lu - kappa2 mu |u|^2 u
        for i in 0..m {
            let lu = lap(&v, i);
            let c = vec3::cross(v[i], lu);
            let s = params.kappa2 * params.mu * vec3::norm_sq(v[i]);
            for k in 0..3 {
                rhs_buf[i][k] = v[i][k] + dt * (params.gamma * c[k] - s * v[i][k]);
            }
        }

        // Thomas solve, all three components at once
        let mut beta = diag(0);
        cprime[0] = off / beta;
        dprime[0] = std::array::from_fn(|k| rhs_buf[0][k] / beta);
        for i in 1..m {
            beta = diag(i) - off * cprime[i - 1];
            cprime[i] = off / beta;
            dprime[i] = std::array::from_fn(|k| (rhs_buf[i][k] - off * dprime[i - 1][k]) / beta);
        }
        v[m - 1] = dprime[m - 1];
        for i in (0..m - 1).rev() {
            v[i] = std::array::from_fn(|k| dprime[i][k] - cprime[i] * v[i + 1][k]);
        }

        if v.iter().any(|w| w.iter().any(|x| !x.is_finite())) {
            return Err(Error::Blowup {
                step,
                t: step as f64 * dt,
                l2: f64::NAN,
            });
        }
        if step % record_every == 0 || step == n_steps {
            times.push(step as f64 * dt);
            states.push(v.clone());
        }
    }

    Ok(FdTrajectory {
        times,
        states,
        points,
        h,
    })
}

/// Discrete L2 distance between a spectral field (sampled on the FD grid)
/// and an FD nodal state.
pub fn fd_l2_difference(spectral: &SpectralField, fd_state: &[[f64; 3]], h: f64) -> Result<f64> {
    let basis = spectral.basis();
    if basis.domain().dim() != 1 {
        return Err(Error::Config("fd comparison is one-dimensional".into()));
    }
    let m = fd_state.len();
    let grid = basis.synthesize_on(spectral.coeffs(), [m, 1, 1])?;
    let mut sq = 0.0;
    for (a, b) in grid.values().iter().zip(fd_state) {
        let d: [f64; 3] = std::array::from_fn(|k| a[k] - b[k]);
        sq += vec3::norm_sq(d);
    }
    Ok((sq * h).sqrt())
}
