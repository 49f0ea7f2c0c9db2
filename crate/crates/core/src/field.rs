//! The Galerkin state: a coefficient tensor over the eigenbasis, plus every
//! norm the a priori estimates use.
//!
//! Coefficient-space norms (L2, H1, fractional) are exact weighted sums.
//! Grid-based Lp norms integrate |u(x)|^p on the dealiased quadrature grid
//! and refine the grid until two successive refinements agree to 1e-10; for
//! integrands within quadrature exactness (p = 4) the first comparison
//! already matches.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::basis::{build_basis, BasisSpec, BoundaryKind, DomainSpec, ModeIndex};
use crate::error::{Error, Result};
use crate::vec3;

/// Relative agreement required between successive grid refinements.
const REFINE_TOL: f64 = 1e-10;
/// Largest refinement factor tried before giving up.
const MAX_REFINE_FACTOR: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    L2,
    H1Semi,
    H1,
    L4,
    L6,
    L3_2,
    Xbeta(f64),
    XnegBeta(f64),
}

/// A 3-component field in the span of the retained modes.
#[derive(Debug, Clone)]
pub struct SpectralField {
    basis: Arc<BasisSpec>,
    coeffs: Vec<[f64; 3]>,
}

impl SpectralField {
    pub fn zero(basis: &Arc<BasisSpec>) -> Self {
        SpectralField {
            basis: Arc::clone(basis),
            coeffs: vec![[0.0; 3]; basis.n_modes()],
        }
    }

    pub fn from_coeffs(basis: &Arc<BasisSpec>, coeffs: Vec<[f64; 3]>) -> Result<Self> {
        if coeffs.len() != basis.n_modes() {
            return Err(Error::Shape(format!(
                "{} coefficients for {} modes",
                coeffs.len(),
                basis.n_modes()
            )));
        }
        let f = SpectralField {
            basis: Arc::clone(basis),
            coeffs,
        };
        f.check_finite()?;
        Ok(f)
    }

    /// Spatially constant field with the given 3-vector value.
    ///
    /// Constants live in the span only for Neumann conditions.
    pub fn constant(basis: &Arc<BasisSpec>, value: [f64; 3]) -> Result<Self> {
        if basis.domain().bc() != BoundaryKind::Neumann {
            return Err(Error::Config(
                "constant fields require the Neumann basis (no constant Dirichlet mode)".into(),
            ));
        }
        let mut f = Self::zero(basis);
        // slot 0 is the lambda = 0 constant mode; e_0 = |D|^{-1/2}
        let scale = basis.domain().measure().sqrt();
        f.coeffs[0] = [value[0] * scale, value[1] * scale, value[2] * scale];
        Ok(f)
    }

    /// Put `amplitude` on one component of a single mode.
    pub fn single_mode(
        basis: &Arc<BasisSpec>,
        mode: &ModeIndex,
        component: usize,
        amplitude: f64,
    ) -> Result<Self> {
        let slot = basis
            .slot_of(mode)
            .ok_or_else(|| Error::Shape(format!("mode {mode} not retained by the basis")))?;
        if component >= 3 {
            return Err(Error::Shape(format!("component {component} out of range")));
        }
        let mut f = Self::zero(basis);
        f.coeffs[slot][component] = amplitude;
        Ok(f)
    }

    /// Seeded smooth random field: per-mode Gaussian draws damped by
    /// (1 + lambda)^(-decay), normalized to unit L2 norm.
    ///
    /// The draw for a mode depends only on (seed, mode index, component), so
    /// the same seed produces consistent data across nested mode counts.
    pub fn random(basis: &Arc<BasisSpec>, seed: u64, decay: f64) -> Result<Self> {
        let mut f = Self::zero(basis);
        for (slot, mode) in basis.modes().iter().enumerate() {
            let damp = (1.0 + basis.eigenvalue(slot)).powf(-decay);
            for c in 0..3 {
                let mut rng = ChaCha8Rng::seed_from_u64(mode_stream_seed(seed, mode, c));
                let g: f64 = rng.sample(StandardNormal);
                f.coeffs[slot][c] = g * damp;
            }
        }
        let n = f.norm(NormKind::L2)?;
        if n == 0.0 {
            return Err(Error::Degenerate("random field drew exactly zero".into()));
        }
        f.scale(1.0 / n);
        Ok(f)
    }

    pub fn basis(&self) -> &Arc<BasisSpec> {
        &self.basis
    }

    pub fn coeffs(&self) -> &[[f64; 3]] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [[f64; 3]] {
        &mut self.coeffs
    }

    pub fn check_finite(&self) -> Result<()> {
        for (slot, c) in self.coeffs.iter().enumerate() {
            if c.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "coefficient of mode {} is {:?}",
                    self.basis.modes()[slot],
                    c
                )));
            }
        }
        Ok(())
    }

    pub fn scale(&mut self, a: f64) {
        for c in self.coeffs.iter_mut() {
            for x in c.iter_mut() {
                *x *= a;
            }
        }
    }

    /// self += a * other
    pub fn scaled_add(&mut self, a: f64, other: &SpectralField) -> Result<()> {
        self.require_same_basis(other)?;
        for (c, o) in self.coeffs.iter_mut().zip(other.coeffs.iter()) {
            for i in 0..3 {
                c[i] += a * o[i];
            }
        }
        Ok(())
    }

    /// self - other as a new field.
    pub fn diff(&self, other: &SpectralField) -> Result<SpectralField> {
        let mut out = self.clone();
        out.scaled_add(-1.0, other)?;
        Ok(out)
    }

    pub(crate) fn require_same_basis(&self, other: &SpectralField) -> Result<()> {
        if !self.basis.same_layout(&other.basis) {
            return Err(Error::BasisMismatch(format!(
                "{:?} vs {:?}",
                self.basis, other.basis
            )));
        }
        Ok(())
    }

    pub fn norm(&self, kind: NormKind) -> Result<f64> {
        self.check_finite()?;
        let weighted = |w: &dyn Fn(f64) -> f64| -> f64 {
            self.coeffs
                .iter()
                .zip(self.basis.eigenvalues())
                .map(|(c, &lam)| w(lam) * vec3::norm_sq(*c))
                .sum::<f64>()
                .sqrt()
        };
        match kind {
            NormKind::L2 => Ok(weighted(&|_| 1.0)),
            NormKind::H1Semi => Ok(weighted(&|lam| lam)),
            NormKind::H1 => Ok(weighted(&|lam| 1.0 + lam)),
            NormKind::Xbeta(beta) => Ok(weighted(&|lam| (1.0 + lam).powf(2.0 * beta))),
            NormKind::XnegBeta(beta) => {
                if !(beta > 0.0) {
                    return Err(Error::Config(format!(
                        "XnegBeta needs beta > 0 (got {beta})"
                    )));
                }
                Ok(weighted(&|lam| (1.0 + lam).powf(-2.0 * beta)))
            }
            NormKind::L4 => self.lp_norm(4.0),
            NormKind::L6 => self.lp_norm(6.0),
            NormKind::L3_2 => self.lp_norm(1.5),
        }
    }

    /// Lp norm of the pointwise Euclidean magnitude, by converging grid
    /// refinement.
    fn lp_norm(&self, p: f64) -> Result<f64> {
        let ip = self.integrate_refined(&|v| vec3::norm_sq(v).powf(p / 2.0))?;
        Ok(ip.max(0.0).powf(1.0 / p))
    }

    /// Midpoint integral of a pointwise function of the field, refined until
    /// two successive grids agree.
    pub fn integrate_refined(&self, f: &dyn Fn([f64; 3]) -> f64) -> Result<f64> {
        integrate_refined_with(&self.basis, &|factor| {
            Ok(self
                .basis
                .synthesize_refined(&self.coeffs, factor)?
                .integrate(f))
        })
    }

    /// Fractional-space tail of the projection error, following the
    /// eigenfunction expansion: sum over dropped slots of
    /// (1 + lambda)^beta |c|^2.  This is the quantity whose decay realizes
    /// Pi_n x -> x in X^beta.
    pub fn projection_tail(&self, n_keep: usize, beta: f64) -> f64 {
        self.coeffs
            .iter()
            .zip(self.basis.eigenvalues())
            .skip(n_keep)
            .map(|(c, &lam)| (1.0 + lam).powf(beta) * vec3::norm_sq(*c))
            .sum()
    }

    /// Norm of the leading-n truncation Pi_n(self), in coefficient space.
    pub fn truncated_norm(&self, n_keep: usize, kind: NormKind) -> Result<f64> {
        let mut t = self.clone();
        for c in t.coeffs.iter_mut().skip(n_keep) {
            *c = [0.0; 3];
        }
        t.norm(kind)
    }

    /// Keep only the first `n_keep` slots (the projection Pi_n within one
    /// basis).
    pub fn truncate(&self, n_keep: usize) -> SpectralField {
        let mut t = self.clone();
        for c in t.coeffs.iter_mut().skip(n_keep) {
            *c = [0.0; 3];
        }
        t
    }

    /// Re-express in a larger basis whose mode set contains ours.
    pub fn embed(&self, target: &Arc<BasisSpec>) -> Result<SpectralField> {
        let mut out = SpectralField::zero(target);
        for (slot, mode) in self.basis.modes().iter().enumerate() {
            let t = target.slot_of(mode).ok_or_else(|| {
                Error::BasisMismatch(format!("mode {mode} missing from the target basis"))
            })?;
            out.coeffs[t] = self.coeffs[slot];
        }
        Ok(out)
    }

    /// Restrict to a smaller nested basis (drops outside modes exactly when
    /// they carry no coefficient is NOT required: restriction is Pi_n).
    pub fn restrict(&self, target: &Arc<BasisSpec>) -> Result<SpectralField> {
        let mut out = SpectralField::zero(target);
        for (slot, mode) in target.modes().iter().enumerate() {
            let s = self.basis.slot_of(mode).ok_or_else(|| {
                Error::BasisMismatch(format!("mode {mode} missing from the source basis"))
            })?;
            out.coeffs[slot] = self.coeffs[s];
        }
        Ok(out)
    }
}

/// Run `eval(factor)` at doubling refinement factors until two successive
/// values agree to `REFINE_TOL` (mixed absolute/relative).
pub(crate) fn integrate_refined_with(
    _basis: &Arc<BasisSpec>,
    eval: &dyn Fn(usize) -> Result<f64>,
) -> Result<f64> {
    let mut factor = 1usize;
    let mut prev = eval(factor)?;
    if !prev.is_finite() {
        return Err(Error::NonFinite(format!("grid integral is {prev}")));
    }
    while factor < MAX_REFINE_FACTOR {
        factor *= 2;
        let next = eval(factor)?;
        if !next.is_finite() {
            return Err(Error::NonFinite(format!("grid integral is {next}")));
        }
        if (next - prev).abs() <= REFINE_TOL * next.abs().max(1.0) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Quadrature(format!(
        "integral did not settle to {REFINE_TOL} within refinement factor {MAX_REFINE_FACTOR}"
    )))
}

/// L2 inner product via Parseval on coefficients.
pub fn inner(u: &SpectralField, v: &SpectralField) -> Result<f64> {
    u.require_same_basis(v)?;
    Ok(u.coeffs
        .iter()
        .zip(v.coeffs.iter())
        .map(|(a, b)| vec3::dot(*a, *b))
        .sum())
}

fn mode_stream_seed(seed: u64, mode: &ModeIndex, component: usize) -> u64 {
    // splitmix64-style mixing of (seed, k, component)
    let mut z = seed ^ 0x9e37_79b9_7f4a_7c15;
    for &k in mode.indices() {
        z = z
            .wrapping_add(k as u64 + 1)
            .wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z ^= z >> 27;
    }
    z = z.wrapping_add((component as u64).wrapping_mul(0x94d0_49bb_1331_11eb));
    z ^= z >> 31;
    z
}

// --- checkpoint format -----------------------------------------------------
//
// Self-describing text document; floats use Rust's shortest round-trip
// encoding, so write/read is bit-exact.  Coefficients appear in the basis's
// (lambda, lex) mode order, one "cx cy cz" line per mode.

const CHECKPOINT_HEADER: &str = "llb-field-checkpoint v1";

pub fn write_checkpoint(field: &SpectralField) -> Result<String> {
    field.check_finite()?;
    let b = field.basis();
    let d = b.domain();
    let mut out = String::new();
    let _ = writeln!(out, "{CHECKPOINT_HEADER}");
    let _ = writeln!(out, "bc = {}", d.bc().as_str());
    let lengths: Vec<String> = d.lengths().iter().map(|l| format!("{l:?}")).collect();
    let _ = writeln!(out, "lengths = {}", lengths.join(","));
    let modes: Vec<String> = b.modes_per_dim().iter().map(|n| n.to_string()).collect();
    let _ = writeln!(out, "modes_per_dim = {}", modes.join(","));
    let _ = writeln!(out, "coeffs = {}", b.n_modes());
    for c in field.coeffs() {
        let _ = writeln!(out, "{:?} {:?} {:?}", c[0], c[1], c[2]);
    }
    Ok(out)
}

pub fn read_checkpoint(text: &str) -> Result<SpectralField> {
    let mut lines = text.lines().enumerate();
    let perr = |line: usize, msg: String| Error::Parse {
        line: line + 1,
        msg,
    };

    let (ln, header) = lines
        .next()
        .ok_or_else(|| perr(0, "empty checkpoint".into()))?;
    if header.trim() != CHECKPOINT_HEADER {
        return Err(perr(ln, format!("unexpected header `{header}`")));
    }

    let mut bc: Option<BoundaryKind> = None;
    let mut lengths: Option<Vec<f64>> = None;
    let mut modes_per_dim: Option<Vec<usize>> = None;
    let mut n_coeffs: Option<usize> = None;
    for _ in 0..4 {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| perr(0, "truncated checkpoint header".into()))?;
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| perr(ln, format!("expected `key = value`, got `{line}`")))?;
        let value = value.trim();
        match key.trim() {
            "bc" => bc = Some(BoundaryKind::parse(value).map_err(|e| perr(ln, e.to_string()))?),
            "lengths" => {
                let v: std::result::Result<Vec<f64>, _> =
                    value.split(',').map(|s| s.trim().parse::<f64>()).collect();
                lengths = Some(v.map_err(|e| perr(ln, format!("bad length: {e}")))?);
            }
            "modes_per_dim" => {
                let v: std::result::Result<Vec<usize>, _> = value
                    .split(',')
                    .map(|s| s.trim().parse::<usize>())
                    .collect();
                modes_per_dim = Some(v.map_err(|e| perr(ln, format!("bad mode count: {e}")))?);
            }
            "coeffs" => {
                n_coeffs = Some(
                    value
                        .parse()
                        .map_err(|e| perr(ln, format!("bad coefficient count: {e}")))?,
                )
            }
            other => return Err(perr(ln, format!("unknown checkpoint key `{other}`"))),
        }
    }
    let bc = bc.ok_or_else(|| perr(0, "missing bc".into()))?;
    let lengths = lengths.ok_or_else(|| perr(0, "missing lengths".into()))?;
    let modes_per_dim = modes_per_dim.ok_or_else(|| perr(0, "missing modes_per_dim".into()))?;
    let n_coeffs = n_coeffs.ok_or_else(|| perr(0, "missing coeffs".into()))?;

    let domain = DomainSpec::new(&lengths, bc)?;
    let basis = build_basis(&domain, &modes_per_dim)?;
    if n_coeffs != basis.n_modes() {
        return Err(Error::Shape(format!(
            "checkpoint lists {n_coeffs} coefficients but the basis has {} modes",
            basis.n_modes()
        )));
    }

    let mut coeffs = Vec::with_capacity(n_coeffs);
    for _ in 0..n_coeffs {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| perr(0, "truncated coefficient block".into()))?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(perr(ln, format!("expected 3 floats, got `{line}`")));
        }
        let mut c = [0.0f64; 3];
        for (i, p) in parts.iter().enumerate() {
            c[i] = p
                .parse()
                .map_err(|e| perr(ln, format!("bad coefficient: {e}")))?;
        }
        coeffs.push(c);
    }
    if let Some((ln, extra)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(perr(ln, format!("trailing content `{extra}`")));
    }
    SpectralField::from_coeffs(&basis, coeffs)
}

pub fn save_checkpoint(field: &SpectralField, path: &std::path::Path) -> Result<()> {
    std::fs::write(path, write_checkpoint(field)?)?;
    Ok(())
}

pub fn load_checkpoint(path: &std::path::Path) -> Result<SpectralField> {
    let text = std::fs::read_to_string(path)?;
    read_checkpoint(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn neumann_basis(n: usize) -> Arc<BasisSpec> {
        let d = DomainSpec::new(&[PI], BoundaryKind::Neumann).unwrap();
        build_basis(&d, &[n]).unwrap()
    }

    #[test]
    fn parseval_two_entries() {
        let b = neumann_basis(4);
        let mut f = SpectralField::zero(&b);
        f.coeffs_mut()[1][0] = 3.0;
        f.coeffs_mut()[2][0] = 4.0;
        assert_eq!(f.norm(NormKind::L2).unwrap(), 5.0);
    }

    #[test]
    fn l4_of_constant_field() {
        // |u| = c everywhere on [0, pi]: L4 = c * pi^(1/4)
        let b = neumann_basis(3);
        let c = 0.8;
        let f = SpectralField::constant(&b, [c, 0.0, 0.0]).unwrap();
        let l4 = f.norm(NormKind::L4).unwrap();
        assert!((l4 - c * PI.powf(0.25)).abs() < 1e-12, "{l4}");
    }

    #[test]
    fn xneg_norm_two_term_sum() {
        // v = e_1 + e_2 with lambda 1 and 4, beta = 1:
        // |v|^2 in X^{-1} = 2^-2 + 5^-2 = 0.29
        let b = neumann_basis(3);
        let mut f = SpectralField::zero(&b);
        f.coeffs_mut()[1][0] = 1.0;
        f.coeffs_mut()[2][0] = 1.0;
        let n = f.norm(NormKind::XnegBeta(1.0)).unwrap();
        assert!((n * n - 0.29).abs() < 1e-14, "{}", n * n);
    }

    #[test]
    fn xbeta_half_equals_h1() {
        use rand::Rng;
        let b = neumann_basis(6);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let coeffs: Vec<[f64; 3]> = (0..6)
            .map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
            .collect();
        let f = SpectralField::from_coeffs(&b, coeffs).unwrap();
        let a = f.norm(NormKind::Xbeta(0.5)).unwrap();
        let h1 = f.norm(NormKind::H1).unwrap();
        assert!((a - h1).abs() < 1e-13 * h1);
    }

    #[test]
    fn norm_monotonicity_in_beta() {
        let b = neumann_basis(8);
        let f = SpectralField::random(&b, 42, 1.0).unwrap();
        let l2 = f.norm(NormKind::L2).unwrap();
        for beta in [0.25, 0.5, 1.0, 2.0] {
            let lo = f.norm(NormKind::XnegBeta(beta)).unwrap();
            let hi = f.norm(NormKind::Xbeta(beta)).unwrap();
            assert!(lo <= l2 + 1e-14 && l2 <= hi + 1e-14, "beta {beta}");
        }
    }

    #[test]
    fn l32_hoelder_bound_against_l2() {
        // |u|_{L^{3/2}} <= |D|^{1/6} |u|_{L^2} on a box
        let b = neumann_basis(8);
        for seed in 0..10u64 {
            let f = SpectralField::random(&b, seed, 0.5).unwrap();
            let l32 = f.norm(NormKind::L3_2).unwrap();
            let l2 = f.norm(NormKind::L2).unwrap();
            let bound = PI.powf(1.0 / 6.0) * l2;
            assert!(l32 <= bound * (1.0 + 1e-10), "{l32} vs {bound}");
        }
    }

    #[test]
    fn inner_is_parseval_and_matches_quadrature() {
        let b = neumann_basis(6);
        let u = SpectralField::random(&b, 1, 0.7).unwrap();
        let v = SpectralField::random(&b, 2, 0.7).unwrap();
        let uu = inner(&u, &u).unwrap();
        let l2 = u.norm(NormKind::L2).unwrap();
        assert!((uu - l2 * l2).abs() < 1e-13);

        // dense quadrature oracle for <u, v>
        let gu = b.synthesize_refined(u.coeffs(), 4).unwrap();
        let gv = b.synthesize_refined(v.coeffs(), 4).unwrap();
        let quad: f64 = gu
            .values()
            .iter()
            .zip(gv.values())
            .map(|(a, b)| vec3::dot(*a, *b))
            .sum::<f64>()
            * gu.cell_weight();
        assert!((inner(&u, &v).unwrap() - quad).abs() < 1e-12);

        // orthogonal single-mode fields
        let e1 = SpectralField::single_mode(&b, &ModeIndex::new(&[1]).unwrap(), 0, 1.0).unwrap();
        let e2 = SpectralField::single_mode(&b, &ModeIndex::new(&[2]).unwrap(), 0, 1.0).unwrap();
        assert_eq!(inner(&e1, &e2).unwrap(), 0.0);
    }

    #[test]
    fn basis_mismatch_rejected() {
        let a = SpectralField::zero(&neumann_basis(4));
        let b = SpectralField::zero(&neumann_basis(5));
        assert!(inner(&a, &b).is_err());
    }

    #[test]
    fn non_finite_rejected() {
        let b = neumann_basis(3);
        let mut f = SpectralField::zero(&b);
        f.coeffs_mut()[1][2] = f64::NAN;
        assert!(f.norm(NormKind::L2).is_err());
    }

    #[test]
    fn random_field_is_stable_across_mode_counts() {
        // shared modes draw identical raw coefficients (up to normalization)
        let small = neumann_basis(4);
        let large = neumann_basis(8);
        let fs = SpectralField::random(&small, 9, 1.5).unwrap();
        let fl = SpectralField::random(&large, 9, 1.5).unwrap();
        let ratio = fl.coeffs()[1][0] / fs.coeffs()[1][0];
        for slot in 0..4 {
            for c in 0..3 {
                let a = fs.coeffs()[slot][c] * ratio;
                let bb = fl.coeffs()[slot][c];
                assert!((a - bb).abs() < 1e-12, "slot {slot} comp {c}: {a} vs {bb}");
            }
        }
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let d = DomainSpec::new(&[PI, 1.0 / 3.0], BoundaryKind::Dirichlet).unwrap();
        let b = build_basis(&d, &[3, 2]).unwrap();
        let f = SpectralField::random(&b, 77, 0.3).unwrap();
        let text = write_checkpoint(&f).unwrap();
        let g = read_checkpoint(&text).unwrap();
        assert_eq!(
            f.coeffs(),
            g.coeffs(),
            "coefficients must round-trip exactly"
        );
        assert!(f.basis().same_layout(g.basis()));
        // and the round-tripped document is identical bytes
        assert_eq!(text, write_checkpoint(&g).unwrap());
    }

    #[test]
    fn checkpoint_rejects_malformed_input() {
        assert!(read_checkpoint("").is_err());
        assert!(read_checkpoint("llb-field-checkpoint v1\nbc = cosmic\n").is_err());
        let b = neumann_basis(2);
        let f = SpectralField::zero(&b);
        let text = write_checkpoint(&f).unwrap();
        let truncated: String = text.lines().take(5).collect::<Vec<_>>().join("\n");
        assert!(read_checkpoint(&truncated).is_err());
    }

    #[test]
    fn embed_and_restrict_are_inverses_on_the_small_span() {
        let small = neumann_basis(4);
        let large = neumann_basis(9);
        let f = SpectralField::random(&small, 3, 1.0).unwrap();
        let up = f.embed(&large).unwrap();
        let back = up.restrict(&small).unwrap();
        assert_eq!(f.coeffs(), back.coeffs());
        assert!(up.embed(&small).is_err(), "embedding into a smaller basis");
    }

    #[test]
    fn projection_tail_decreases() {
        let b = neumann_basis(32);
        let mut f = SpectralField::zero(&b);
        for (slot, c) in f.coeffs_mut().iter_mut().enumerate() {
            c[0] = 1.0 / (1.0 + slot as f64 * slot as f64);
        }
        let mut prev = f64::INFINITY;
        for n in [2, 4, 8, 16, 32] {
            let tail = f.projection_tail(n, 0.5);
            assert!(tail <= prev);
            prev = tail;
        }
        assert_eq!(f.projection_tail(32, 0.5), 0.0);
    }
}
