//! Right-hand-side maps of the Galerkin system and the weak-form pairing.
//!
//! The evolution is
//!
//! ```text
//! du/dt = kappa1 * Lap(u) + gamma * P(u x Lap u) - kappa2 * P((1 + mu|u|^2) u)
//! ```
//!
//! with P the L2 projection onto the retained modes.  P of a pointwise
//! product is computed by quadrature on the dealiased grid, which makes it
//! the exact projection: the integrand against any test mode is a product of
//! at most four basis functions.

use crate::basis::ModeIndex;
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::integrator::Trajectory;
use crate::vec3;

/// Model coefficients of the reduced equation (equal damping parameters).
///
/// Optionally carries the physical provenance (temperature, Curie
/// temperature, longitudinal susceptibility) the derived coefficients came
/// from.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub kappa1: f64,
    pub kappa2: f64,
    pub gamma: f64,
    pub mu: f64,
    pub provenance: Option<Provenance>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub temperature: f64,
    pub t_curie: f64,
    pub chi_parallel: f64,
}

impl ModelParams {
    pub fn new(kappa1: f64, kappa2: f64, gamma: f64, mu: f64) -> Result<Self> {
        let p = ModelParams {
            kappa1,
            kappa2,
            gamma,
            mu,
            provenance: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// Derive kappa2 = kappa1 / chi_par and mu = 3T / (5(T - Tc)).
    pub fn from_temperature(
        kappa1: f64,
        gamma: f64,
        temperature: f64,
        t_curie: f64,
        chi_parallel: f64,
    ) -> Result<Self> {
        if !(t_curie > 0.0) || !(temperature > t_curie) {
            return Err(Error::Config(format!(
                "need T > Tc > 0 (got T = {temperature}, Tc = {t_curie})"
            )));
        }
        if !(chi_parallel > 0.0) {
            return Err(Error::Config(format!(
                "longitudinal susceptibility must be positive (got {chi_parallel})"
            )));
        }
        let p = ModelParams {
            kappa1,
            kappa2: kappa1 / chi_parallel,
            gamma,
            mu: 3.0 * temperature / (5.0 * (temperature - t_curie)),
            provenance: Some(Provenance {
                temperature,
                t_curie,
                chi_parallel,
            }),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [self.kappa1, self.kappa2, self.gamma, self.mu];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("model parameters must be finite".into()));
        }
        if !(self.kappa1 > 0.0) {
            return Err(Error::Config(format!(
                "kappa1 must be positive (got {})",
                self.kappa1
            )));
        }
        if self.kappa2 < 0.0 || self.gamma < 0.0 || self.mu < 0.0 {
            return Err(Error::Config(
                "kappa2, gamma and mu must be nonnegative".into(),
            ));
        }
        if let Some(p) = &self.provenance {
            let k2 = self.kappa1 / p.chi_parallel;
            let mu = 3.0 * p.temperature / (5.0 * (p.temperature - p.t_curie));
            if (self.kappa2 - k2).abs() > 1e-12 * k2.abs().max(1.0)
                || (self.mu - mu).abs() > 1e-12 * mu.abs().max(1.0)
            {
                return Err(Error::Config(
                    "stored kappa2/mu disagree with their provenance".into(),
                ));
            }
        }
        Ok(())
    }

    /// The analysis assumes strictly positive coefficients; zero values are
    /// admitted for testing but worth a warning at the CLI.
    pub fn regime_warning(&self) -> Option<String> {
        let mut zero = Vec::new();
        if self.kappa2 == 0.0 {
            zero.push("kappa2");
        }
        if self.gamma == 0.0 {
            zero.push("gamma");
        }
        if self.mu == 0.0 {
            zero.push("mu");
        }
        if zero.is_empty() {
            None
        } else {
            Some(format!(
                "parameters outside the strictly-positive regime: {} = 0",
                zero.join(", ")
            ))
        }
    }
}

/// F1: the Laplacian, diagonal on eigencoefficients.
pub fn laplacian(u: &SpectralField) -> Result<SpectralField> {
    u.check_finite()?;
    let mut out = u.clone();
    let eigs = u.basis().eigenvalues().to_vec();
    for (c, lam) in out.coeffs_mut().iter_mut().zip(eigs) {
        for x in c.iter_mut() {
            *x *= -lam;
        }
    }
    Ok(out)
}

/// F2: the projected gyromagnetic term P(u x Lap u).
pub fn cross_laplacian(u: &SpectralField) -> Result<SpectralField> {
    let basis = u.basis();
    let lap = laplacian(u)?;
    let gu = basis.synthesize(u.coeffs())?;
    let gl = basis.synthesize(lap.coeffs())?;
    let mut grid = gu.clone();
    for (w, (a, b)) in grid
        .values_mut()
        .iter_mut()
        .zip(gu.values().iter().zip(gl.values()))
    {
        *w = vec3::cross(*a, *b);
    }
    SpectralField::from_coeffs(basis, basis.analyze(&grid)?)
}

/// F3: the projected cubic term P((1 + mu |u|^2) u).
pub fn cubic_term(u: &SpectralField, params: &ModelParams) -> Result<SpectralField> {
    let basis = u.basis();
    let mut grid = basis.synthesize(u.coeffs())?;
    let mu = params.mu;
    for v in grid.values_mut() {
        let s = 1.0 + mu * vec3::norm_sq(*v);
        for x in v.iter_mut() {
            *x *= s;
        }
    }
    SpectralField::from_coeffs(basis, basis.analyze(&grid)?)
}

/// Full right-hand side kappa1*F1 + gamma*F2 - kappa2*F3.
pub fn rhs(u: &SpectralField, params: &ModelParams) -> Result<SpectralField> {
    let mut out = laplacian(u)?;
    out.scale(params.kappa1);
    if params.gamma != 0.0 {
        out.scaled_add(params.gamma, &cross_laplacian(u)?)?;
    }
    out.scaled_add(-params.kappa2, &cubic_term(u, params)?)?;
    Ok(out)
}

/// Weak-form residual of Definition-style testing against phi = e_k on one
/// component:
///
/// ```text
/// <u(t),phi> - <u0,phi> + kappa1 I[<grad u, grad phi>]
///   + gamma I[<u x grad u, grad phi>] + kappa2 I[<(1+mu|u|^2)u, phi>]
/// ```
///
/// Time integrals use the trapezoid rule over the recorded samples, so the
/// residual of the exact Galerkin flow is pure time-discretization error.
/// `t` must coincide with a recorded sample time.
pub fn weak_residual(
    trajectory: &Trajectory,
    test_mode: &ModeIndex,
    component: usize,
    t: f64,
) -> Result<f64> {
    let r = weak_residuals(trajectory, &[(*test_mode, component)], t)?;
    Ok(r[0])
}

/// Batched version of [`weak_residual`]: one trajectory sweep for many
/// (mode, component) pairs.
pub fn weak_residuals(
    trajectory: &Trajectory,
    tests: &[(ModeIndex, usize)],
    t: f64,
) -> Result<Vec<f64>> {
    let samples = trajectory.samples();
    if samples.is_empty() {
        return Err(Error::Degenerate("empty trajectory".into()));
    }
    let horizon = samples.last().unwrap().0;
    if t < 0.0 || t > horizon + 1e-12 {
        return Err(Error::OutsideHorizon { t, horizon });
    }
    let end = samples
        .iter()
        .position(|(tj, _)| (tj - t).abs() <= 1e-9 * t.abs().max(1.0))
        .ok_or_else(|| Error::Config(format!("t = {t} is not a recorded sample time")))?;

    let basis = trajectory.basis();
    let params = trajectory.params();
    let dim = basis.domain().dim();
    let mut slots = Vec::with_capacity(tests.len());
    for (mode, component) in tests {
        let slot = basis
            .slot_of(mode)
            .ok_or_else(|| Error::Shape(format!("test mode {mode} not retained")))?;
        if *component >= 3 {
            return Err(Error::Shape(format!("component {component} out of range")));
        }
        slots.push((slot, *component));
    }

    // Precompute grad(e_k) tables for each requested mode and direction.
    let mut grad_tables: Vec<Vec<Vec<f64>>> = Vec::with_capacity(tests.len());
    for (mode, _) in tests {
        let per_dir: Result<Vec<Vec<f64>>> = (0..dim)
            .map(|d| basis.mode_gradient_values(mode, d))
            .collect();
        grad_tables.push(per_dir?);
    }

    // Per-sample integrand values g_i(s) for each test, integrated by
    // trapezoid in time.
    let n_tests = tests.len();
    let mut acc = vec![0.0f64; n_tests];
    let mut prev: Option<Vec<f64>> = None;
    let mut prev_t = 0.0;
    for (tj, u) in &samples[..=end] {
        let gu = basis.synthesize(u.coeffs())?;
        let grads: Result<Vec<_>> = (0..dim)
            .map(|d| basis.synthesize_gradient(u.coeffs(), d, 1))
            .collect();
        let grads = grads?;
        let cell = gu.cell_weight();
        let mu = params.mu;

        let mut vals = vec![0.0f64; n_tests];
        for (ti, ((slot, comp), tables)) in slots.iter().zip(&grad_tables).enumerate() {
            // kappa1 <grad u, grad phi> = kappa1 * lambda_k * c_{k,comp}
            let lam = basis.eigenvalue(*slot);
            let c = u.coeffs()[*slot][*comp];
            let mut g = params.kappa1 * lam * c;

            // gamma <u x grad_d u, grad_d phi> over directions d
            if params.gamma != 0.0 {
                let mut cross_term = 0.0;
                for (d, gd) in grads.iter().enumerate() {
                    let dphi = &tables[d];
                    let mut s = 0.0;
                    for ((a, b), w) in gu.values().iter().zip(gd.values()).zip(dphi) {
                        s += vec3::cross(*a, *b)[*comp] * w;
                    }
                    cross_term += s * cell;
                }
                g += params.gamma * cross_term;
            }

            vals[ti] = g;
        }

        // kappa2 <(1+mu|u|^2)u, e_k e_comp> by quadrature, exact at base
        // resolution (product of four basis factors)
        let mut cubic_grid = gu.clone();
        for v in cubic_grid.values_mut() {
            let s = 1.0 + mu * vec3::norm_sq(*v);
            for x in v.iter_mut() {
                *x *= s;
            }
        }
        let cubic_coeffs = basis.analyze(&cubic_grid)?;
        for (ti, (slot, comp)) in slots.iter().enumerate() {
            vals[ti] += params.kappa2 * cubic_coeffs[*slot][*comp];
        }

        if let Some(p) = prev {
            let h = tj - prev_t;
            for (a, (pv, nv)) in acc.iter_mut().zip(p.iter().zip(&vals)) {
                *a += 0.5 * h * (pv + nv);
            }
        }
        prev = Some(vals);
        prev_t = *tj;
    }

    let u_t = &samples[end].1;
    let u_0 = &samples[0].1;
    Ok(slots
        .iter()
        .zip(acc)
        .map(|((slot, comp), integral)| {
            u_t.coeffs()[*slot][*comp] - u_0.coeffs()[*slot][*comp] + integral
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_basis, BasisSpec, BoundaryKind, DomainSpec};
    use crate::field::{inner, NormKind};
    use crate::oracle;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn neumann_basis(n: usize) -> Arc<BasisSpec> {
        let d = DomainSpec::new(&[PI], BoundaryKind::Neumann).unwrap();
        build_basis(&d, &[n]).unwrap()
    }

    fn params(k1: f64, k2: f64, g: f64, mu: f64) -> ModelParams {
        ModelParams::new(k1, k2, g, mu).unwrap()
    }

    #[test]
    fn params_from_temperature_match_formulas() {
        let p = ModelParams::from_temperature(2.0, 1.0, 700.0, 600.0, 0.25).unwrap();
        assert!((p.kappa2 - 8.0).abs() < 1e-12);
        assert!((p.mu - 3.0 * 700.0 / 500.0).abs() < 1e-12);
        p.validate().unwrap();
        assert!(ModelParams::from_temperature(1.0, 1.0, 500.0, 600.0, 0.25).is_err());
        assert!(ModelParams::new(0.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn laplacian_examples() {
        let b = neumann_basis(4);
        let f = SpectralField::constant(&b, [1.0, -2.0, 0.5]).unwrap();
        let lap = laplacian(&f).unwrap();
        assert!(lap.norm(NormKind::L2).unwrap() == 0.0);

        // single mode with lambda = 4, coefficient a -> -4a
        let mode = ModeIndex::new(&[2]).unwrap();
        let f = SpectralField::single_mode(&b, &mode, 1, 0.7).unwrap();
        let lap = laplacian(&f).unwrap();
        let slot = b.slot_of(&mode).unwrap();
        assert!((lap.coeffs()[slot][1] + 4.0 * 0.7).abs() < 1e-15);
    }

    #[test]
    fn laplacian_pairing_is_negative_gradient_norm() {
        let b = neumann_basis(8);
        let u = SpectralField::random(&b, 17, 0.8).unwrap();
        let lap = laplacian(&u).unwrap();
        let lhs = inner(&lap, &u).unwrap();
        let h1s = u.norm(NormKind::H1Semi).unwrap();
        assert!((lhs + h1s * h1s).abs() < 1e-12 * h1s.max(1.0).powi(2));
    }

    #[test]
    fn cross_laplacian_vanishes_for_parallel_fields() {
        // all components proportional to one spatial profile
        let b = neumann_basis(5);
        let mut u = SpectralField::zero(&b);
        let dir = [0.3, -0.5, 0.8];
        for (slot, c) in u.coeffs_mut().iter_mut().enumerate() {
            let a = 1.0 / (1.0 + slot as f64);
            for i in 0..3 {
                c[i] = a * dir[i];
            }
        }
        let f2 = cross_laplacian(&u).unwrap();
        assert!(f2.norm(NormKind::L2).unwrap() < 1e-13);

        let c = SpectralField::constant(&b, [1.0, 2.0, 3.0]).unwrap();
        assert!(
            cross_laplacian(&c)
                .unwrap()
                .norm(NormKind::L2)
                .unwrap()
                .abs()
                < 1e-15
        );
    }

    #[test]
    fn cross_laplacian_matches_dense_projection_oracle() {
        let b = neumann_basis(6);
        // two modes with orthogonal component directions
        let mut u = SpectralField::zero(&b);
        u.coeffs_mut()[1][0] = 0.9;
        u.coeffs_mut()[2][1] = -0.6;
        let fast = cross_laplacian(&u).unwrap();

        let basis = Arc::clone(&b);
        let coeffs = u.coeffs().to_vec();
        let dense = oracle::dense_project(
            &b,
            &|x| {
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
                vec3::cross(v, lap)
            },
            4,
        )
        .unwrap();
        let d = fast.diff(&dense).unwrap().norm(NormKind::L2).unwrap();
        assert!(d < 1e-10, "fast vs dense projection: {d}");
    }

    #[test]
    fn cubic_term_examples() {
        let b = neumann_basis(5);
        let u = SpectralField::random(&b, 4, 1.0).unwrap();

        // mu = 0: identity on the span
        let p0 = params(1.0, 1.0, 1.0, 0.0);
        let f3 = cubic_term(&u, &p0).unwrap();
        let d = f3.diff(&u).unwrap().norm(NormKind::L2).unwrap();
        assert!(d < 1e-12);

        // constants are closed under the map
        let p = params(1.0, 1.0, 1.0, 2.0);
        let cval = [0.4, -0.2, 0.1];
        let c = SpectralField::constant(&b, cval).unwrap();
        let f3c = cubic_term(&c, &p).unwrap();
        let s = 1.0 + 2.0 * vec3::norm_sq(cval);
        let mut expect = c.clone();
        expect.scale(s);
        let d = f3c.diff(&expect).unwrap().norm(NormKind::L2).unwrap();
        assert!(d < 1e-13, "{d}");
    }

    #[test]
    fn cubic_term_matches_dense_projection_oracle() {
        let b = neumann_basis(6);
        let u = SpectralField::random(&b, 21, 0.6).unwrap();
        let p = params(1.0, 1.0, 1.0, 1.3);
        let fast = cubic_term(&u, &p).unwrap();

        let basis = Arc::clone(&b);
        let coeffs = u.coeffs().to_vec();
        let dense = oracle::dense_project(
            &b,
            &|x| {
                let mut v = [0.0; 3];
                for (slot, mode) in basis.modes().iter().enumerate() {
                    let e = crate::basis::eval_eigenfunction(basis.domain(), mode, x);
                    for i in 0..3 {
                        v[i] += coeffs[slot][i] * e;
                    }
                }
                let s = 1.0 + 1.3 * vec3::norm_sq(v);
                [v[0] * s, v[1] * s, v[2] * s]
            },
            4,
        )
        .unwrap();
        let d = fast.diff(&dense).unwrap().norm(NormKind::L2).unwrap();
        assert!(d < 1e-10, "fast vs dense projection: {d}");
    }

    #[test]
    fn rhs_zero_and_constant_cases() {
        let b = neumann_basis(4);
        let p = params(1.0, 2.0, 3.0, 0.5);
        let z = SpectralField::zero(&b);
        assert!(rhs(&z, &p).unwrap().norm(NormKind::L2).unwrap() == 0.0);

        let cval = [0.5, 0.1, -0.3];
        let c = SpectralField::constant(&b, cval).unwrap();
        let r = rhs(&c, &p).unwrap();
        let s = -p.kappa2 * (1.0 + p.mu * vec3::norm_sq(cval));
        let mut expect = c.clone();
        expect.scale(s);
        let d = r.diff(&expect).unwrap().norm(NormKind::L2).unwrap();
        assert!(d < 1e-13, "{d}");
    }

    #[test]
    fn rhs_pairing_identity() {
        // <rhs(u), u> = -kappa1 |grad u|^2 - kappa2 (|u|^2 + mu |u|_L4^4)
        let b = neumann_basis(8);
        let p = params(0.7, 1.3, 2.0, 0.9);
        for seed in [5u64, 6, 7] {
            let u = SpectralField::random(&b, seed, 0.8).unwrap();
            let lhs = inner(&rhs(&u, &p).unwrap(), &u).unwrap();
            let h1s = u.norm(NormKind::H1Semi).unwrap();
            let l2 = u.norm(NormKind::L2).unwrap();
            let l4 = u.norm(NormKind::L4).unwrap();
            let rhs_val = -p.kappa1 * h1s * h1s - p.kappa2 * (l2 * l2 + p.mu * l4.powi(4));
            assert!(
                (lhs - rhs_val).abs() < 1e-10 * rhs_val.abs().max(1.0),
                "{lhs} vs {rhs_val}"
            );
        }
    }

    #[test]
    fn gyromagnetic_orthogonality() {
        let b = neumann_basis(8);
        for seed in 0..20u64 {
            let u = SpectralField::random(&b, seed, 0.5).unwrap();
            let f2 = cross_laplacian(&u).unwrap();
            let ip = inner(&f2, &u).unwrap();
            let h1 = u.norm(NormKind::H1).unwrap();
            assert!(ip.abs() <= 1e-10 * h1 * h1, "seed {seed}: {ip}");
        }
    }
}
