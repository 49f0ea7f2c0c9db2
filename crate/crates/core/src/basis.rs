//! Laplacian eigenbasis on axis-aligned boxes.
//!
//! Eigenpairs of -Δ with Neumann or Dirichlet conditions on a box are
//! closed-form tensor products of 1-D cosines/sines, so the whole spectrum is
//! exact and every projection statement is checkable without an eigensolver.
//! Quadrature uses equispaced midpoint grids with M_j = 2 N_j + 1 points per
//! dimension, which integrates products of four retained basis functions
//! exactly (the cubic nonlinearity paired against a test mode needs exactly
//! that degree).

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Neumann,
    Dirichlet,
}

impl BoundaryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryKind::Neumann => "neumann",
            BoundaryKind::Dirichlet => "dirichlet",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "neumann" => Ok(BoundaryKind::Neumann),
            "dirichlet" => Ok(BoundaryKind::Dirichlet),
            other => Err(Error::Config(format!(
                "unknown boundary condition `{other}` (expected neumann|dirichlet)"
            ))),
        }
    }

    /// Smallest admissible 1-D mode number: Neumann keeps the constant mode.
    fn k_min(self) -> usize {
        match self {
            BoundaryKind::Neumann => 0,
            BoundaryKind::Dirichlet => 1,
        }
    }
}

/// Axis-aligned box domain.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    lengths: Vec<f64>,
    bc: BoundaryKind,
}

impl DomainSpec {
    pub fn new(lengths: &[f64], bc: BoundaryKind) -> Result<Self> {
        if lengths.is_empty() || lengths.len() > MAX_DIM {
            return Err(Error::Config(format!(
                "dimension must be 1, 2 or 3 (got {})",
                lengths.len()
            )));
        }
        for (j, &l) in lengths.iter().enumerate() {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::Config(format!(
                    "length of dimension {j} must be positive and finite (got {l})"
                )));
            }
        }
        Ok(DomainSpec {
            lengths: lengths.to_vec(),
            bc,
        })
    }

    pub fn dim(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn bc(&self) -> BoundaryKind {
        self.bc
    }

    /// Box measure |D|.
    pub fn measure(&self) -> f64 {
        self.lengths.iter().product()
    }
}

/// Per-dimension mode numbers. Neumann admits k_j = 0, Dirichlet starts at 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeIndex {
    k: [usize; MAX_DIM],
    dim: usize,
}

impl ModeIndex {
    pub fn new(indices: &[usize]) -> Result<Self> {
        if indices.is_empty() || indices.len() > MAX_DIM {
            return Err(Error::Config(format!(
                "mode index dimension must be 1..=3 (got {})",
                indices.len()
            )));
        }
        let mut k = [0usize; MAX_DIM];
        k[..indices.len()].copy_from_slice(indices);
        Ok(ModeIndex {
            k,
            dim: indices.len(),
        })
    }

    pub fn indices(&self) -> &[usize] {
        &self.k[..self.dim]
    }

    fn padded(&self) -> [usize; MAX_DIM] {
        self.k
    }
}

impl std::fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let idx: Vec<String> = self.indices().iter().map(|k| k.to_string()).collect();
        write!(f, "({})", idx.join(","))
    }
}

/// Tabulated 1-D eigenfunction values on a tensor midpoint grid.
///
/// Dimensions beyond the domain's are padded with a single unit point so all
/// loops can run as if in 3-D.
struct GridTables {
    m: [usize; MAX_DIM],
    /// values[j][(k - k_min) * m_j + q]
    values: [Vec<f64>; MAX_DIM],
    derivs: [Vec<f64>; MAX_DIM],
    cell_weight: f64,
}

/// Nodal values of a 3-component field on a tensor midpoint grid.
#[derive(Debug, Clone)]
pub struct GridValues {
    m: [usize; MAX_DIM],
    values: Vec<[f64; 3]>,
    cell_weight: f64,
}

impl GridValues {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[[f64; 3]] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [[f64; 3]] {
        &mut self.values
    }

    pub fn points_per_dim(&self) -> &[usize; MAX_DIM] {
        &self.m
    }

    /// Quadrature weight of one cell (product of per-dimension spacings).
    pub fn cell_weight(&self) -> f64 {
        self.cell_weight
    }

    /// Midpoint-rule integral of a pointwise function of the field value.
    pub fn integrate(&self, f: impl Fn([f64; 3]) -> f64) -> f64 {
        let sum: f64 = self.values.iter().map(|&v| f(v)).sum();
        sum * self.cell_weight
    }
}

/// The spectral trial space: ordered eigenpairs plus exact transforms.
///
/// Immutable after construction; transforms are pure and may run concurrently.
pub struct BasisSpec {
    domain: DomainSpec,
    modes_per_dim: Vec<usize>,
    base_quad: [usize; MAX_DIM],
    modes: Vec<ModeIndex>,
    eigenvalues: Vec<f64>,
    slot_of: HashMap<[usize; MAX_DIM], usize>,
    tables: Mutex<HashMap<[usize; MAX_DIM], Arc<GridTables>>>,
}

/// Construct the eigenbasis with `modes_per_dim[j]` modes in dimension j.
///
/// Modes are ordered by (eigenvalue, lexicographic index) so "the first n
/// modes" is deterministic and the spans are nested across mode counts.
pub fn build_basis(domain: &DomainSpec, modes_per_dim: &[usize]) -> Result<Arc<BasisSpec>> {
    if modes_per_dim.len() != domain.dim() {
        return Err(Error::Config(format!(
            "modes_per_dim has {} entries for a {}-dimensional domain",
            modes_per_dim.len(),
            domain.dim()
        )));
    }
    if modes_per_dim.contains(&0) {
        return Err(Error::Config(
            "modes_per_dim entries must be at least 1".into(),
        ));
    }

    let dim = domain.dim();
    let k_min = domain.bc().k_min();

    // Tensor enumeration, then total order by (lambda, lex k).
    let mut modes: Vec<ModeIndex> = Vec::new();
    let ranges: Vec<std::ops::Range<usize>> =
        (0..dim).map(|j| k_min..k_min + modes_per_dim[j]).collect();
    let mut idx = vec![0usize; dim];
    'outer: loop {
        let ks: Vec<usize> = (0..dim).map(|j| ranges[j].start + idx[j]).collect();
        modes.push(ModeIndex::new(&ks)?);
        for j in (0..dim).rev() {
            idx[j] += 1;
            if idx[j] < modes_per_dim[j] {
                continue 'outer;
            }
            idx[j] = 0;
            if j == 0 {
                break 'outer;
            }
        }
    }

    let lambda_of = |mode: &ModeIndex| -> f64 {
        mode.indices()
            .iter()
            .zip(domain.lengths())
            .map(|(&k, &l)| {
                let w = k as f64 * PI / l;
                w * w
            })
            .sum()
    };
    modes.sort_by(|a, b| {
        let (la, lb) = (lambda_of(a), lambda_of(b));
        la.partial_cmp(&lb)
            .unwrap()
            .then_with(|| a.indices().cmp(b.indices()))
    });

    let eigenvalues: Vec<f64> = modes.iter().map(lambda_of).collect();
    let slot_of: HashMap<[usize; MAX_DIM], usize> = modes
        .iter()
        .enumerate()
        .map(|(i, m)| (m.padded(), i))
        .collect();

    let mut base_quad = [1usize; MAX_DIM];
    for j in 0..dim {
        base_quad[j] = 2 * modes_per_dim[j] + 1;
    }

    Ok(Arc::new(BasisSpec {
        domain: domain.clone(),
        modes_per_dim: modes_per_dim.to_vec(),
        base_quad,
        modes,
        eigenvalues,
        slot_of,
        tables: Mutex::new(HashMap::new()),
    }))
}

impl BasisSpec {
    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn modes_per_dim(&self) -> &[usize] {
        &self.modes_per_dim
    }

    /// Total number of retained modes n.
    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn modes(&self) -> &[ModeIndex] {
        &self.modes
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvalue(&self, slot: usize) -> f64 {
        self.eigenvalues[slot]
    }

    pub fn lambda_max(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    pub fn lambda_sum(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    /// Base quadrature points per dimension (padded dims report 1).
    pub fn quad_points_per_dim(&self) -> &[usize; MAX_DIM] {
        &self.base_quad
    }

    /// Position of a mode in the (lambda, lex) ordering, if retained.
    pub fn slot_of(&self, mode: &ModeIndex) -> Option<usize> {
        if mode.dim != self.domain.dim() {
            return None;
        }
        self.slot_of.get(&mode.padded()).copied()
    }

    /// True when the two bases describe the same trial space.
    pub fn same_layout(&self, other: &BasisSpec) -> bool {
        self.domain == other.domain && self.modes_per_dim == other.modes_per_dim
    }

    fn row_index(&self, k: usize) -> usize {
        k - self.domain.bc().k_min()
    }

    fn tables_for(&self, m: [usize; MAX_DIM]) -> Arc<GridTables> {
        if let Some(t) = self.tables.lock().unwrap().get(&m) {
            return Arc::clone(t);
        }
        let t = Arc::new(self.build_tables(m));
        self.tables
            .lock()
            .unwrap()
            .entry(m)
            .or_insert_with(|| Arc::clone(&t));
        t
    }

    fn build_tables(&self, m: [usize; MAX_DIM]) -> GridTables {
        let dim = self.domain.dim();
        let bc = self.domain.bc();
        let mut values: [Vec<f64>; MAX_DIM] = [Vec::new(), Vec::new(), Vec::new()];
        let mut derivs: [Vec<f64>; MAX_DIM] = [Vec::new(), Vec::new(), Vec::new()];
        let mut cell_weight = 1.0;
        for j in 0..MAX_DIM {
            if j >= dim {
                values[j] = vec![1.0];
                derivs[j] = vec![0.0];
                continue;
            }
            let l = self.domain.lengths()[j];
            let n = self.modes_per_dim[j];
            let mj = m[j];
            let h = l / mj as f64;
            cell_weight *= h;
            let mut val = vec![0.0; n * mj];
            let mut der = vec![0.0; n * mj];
            let pts: Vec<f64> = (0..mj).map(|q| (q as f64 + 0.5) * h).collect();
            for r in 0..n {
                let k = r + bc.k_min();
                let (amp, wav) = mode_1d(bc, l, k);
                for q in 0..mj {
                    let arg = wav * pts[q];
                    match bc {
                        BoundaryKind::Neumann => {
                            val[r * mj + q] = amp * arg.cos();
                            der[r * mj + q] = -amp * wav * arg.sin();
                        }
                        BoundaryKind::Dirichlet => {
                            val[r * mj + q] = amp * arg.sin();
                            der[r * mj + q] = amp * wav * arg.cos();
                        }
                    }
                }
            }
            values[j] = val;
            derivs[j] = der;
        }
        GridTables {
            m,
            values,
            derivs,
            cell_weight,
        }
    }

    fn check_coeff_len(&self, coeffs: &[[f64; 3]]) -> Result<()> {
        if coeffs.len() != self.n_modes() {
            return Err(Error::Shape(format!(
                "{} coefficients for a basis of {} modes",
                coeffs.len(),
                self.n_modes()
            )));
        }
        Ok(())
    }

    fn refined_m(&self, factor: usize) -> [usize; MAX_DIM] {
        let mut m = [1usize; MAX_DIM];
        for (mj, &base) in m.iter_mut().zip(&self.base_quad).take(self.domain.dim()) {
            *mj = base * factor;
        }
        m
    }

    /// Evaluate the expansion on the base (dealiased) quadrature grid.
    pub fn synthesize(&self, coeffs: &[[f64; 3]]) -> Result<GridValues> {
        self.synthesize_refined(coeffs, 1)
    }

    /// Evaluate on the base grid refined by an integer factor per dimension.
    pub fn synthesize_refined(&self, coeffs: &[[f64; 3]], factor: usize) -> Result<GridValues> {
        self.synthesize_on(coeffs, self.refined_m(factor))
    }

    /// Evaluate on an arbitrary tensor midpoint grid.
    pub fn synthesize_on(&self, coeffs: &[[f64; 3]], m: [usize; MAX_DIM]) -> Result<GridValues> {
        self.check_coeff_len(coeffs)?;
        let tab = self.tables_for(m);
        Ok(self.contract(coeffs, &tab, None))
    }

    /// Evaluate the partial derivative along `dir` on a refined grid.
    pub fn synthesize_gradient(
        &self,
        coeffs: &[[f64; 3]],
        dir: usize,
        factor: usize,
    ) -> Result<GridValues> {
        self.check_coeff_len(coeffs)?;
        if dir >= self.domain.dim() {
            return Err(Error::Shape(format!(
                "gradient direction {dir} in a {}-dimensional domain",
                self.domain.dim()
            )));
        }
        let tab = self.tables_for(self.refined_m(factor));
        Ok(self.contract(coeffs, &tab, Some(dir)))
    }

    /// Rows per dimension of the coefficient tensor (padded dims report 1).
    fn rows_per_dim(&self) -> [usize; MAX_DIM] {
        let mut n = [1usize; MAX_DIM];
        for (j, &nj) in self.modes_per_dim.iter().enumerate() {
            n[j] = nj;
        }
        n
    }

    /// Scatter the (lambda, lex)-ordered coefficients into the dense
    /// per-dimension tensor layout.
    fn scatter(&self, coeffs: &[[f64; 3]]) -> Vec<f64> {
        let [n1, n2, n3] = self.rows_per_dim();
        let mut ten = vec![0.0f64; n1 * n2 * n3 * 3];
        for (slot, mode) in self.modes.iter().enumerate() {
            let [k1, k2, k3] = mode.padded();
            let (r1, r2, r3) = (self.row_index(k1), self.row(k2, 1), self.row(k3, 2));
            let base = ((r1 * n2 + r2) * n3 + r3) * 3;
            ten[base..base + 3].copy_from_slice(&coeffs[slot]);
        }
        ten
    }

    /// Factored tensor contraction: one dimension at a time, O(sum_j M<=j
    /// N>j) instead of the dense O(n * M).  The dense per-mode summation
    /// stays available as the validation reference.
    fn contract(
        &self,
        coeffs: &[[f64; 3]],
        tab: &GridTables,
        grad_dir: Option<usize>,
    ) -> GridValues {
        let [m1, m2, m3] = tab.m;
        let [n1, n2, n3] = self.rows_per_dim();
        let pick = |j: usize| -> &Vec<f64> {
            if grad_dir == Some(j) {
                &tab.derivs[j]
            } else {
                &tab.values[j]
            }
        };

        // (r1 r2 r3) -> (q1 r2 r3) -> (q1 q2 r3) -> (q1 q2 q3), 3 components;
        // accumulate per output point so each pass streams the output once
        let mut cur = self.scatter(coeffs);
        let mut lead = 1usize; // product of already-transformed grid dims
        let mut trail = n2 * n3; // product of untouched coefficient dims
        for (j, (nj, mj)) in [(n1, m1), (n2, m2), (n3, m3)].into_iter().enumerate() {
            if nj == 1 && mj == 1 && j >= self.domain.dim() {
                // padded dimension: identity factor
                trail = match j {
                    0 => n3,
                    _ => 1,
                };
                continue;
            }
            let t = pick(j);
            // q-major transpose of the 1-D table for sequential reads
            let mut tt = vec![0.0f64; nj * mj];
            for r in 0..nj {
                for q in 0..mj {
                    tt[q * nj + r] = t[r * mj + q];
                }
            }
            let width = trail * 3;
            let mut next = vec![0.0f64; lead * mj * width];
            for l in 0..lead {
                let src = &cur[l * nj * width..(l + 1) * nj * width];
                for q in 0..mj {
                    let row = &tt[q * nj..(q + 1) * nj];
                    let dst = &mut next[(l * mj + q) * width..(l * mj + q + 1) * width];
                    for (r, &w) in row.iter().enumerate() {
                        let block = &src[r * width..(r + 1) * width];
                        for (d, &s) in dst.iter_mut().zip(block) {
                            *d += w * s;
                        }
                    }
                }
            }
            cur = next;
            lead *= mj;
            trail = match j {
                0 => n3,
                _ => 1,
            };
        }

        let mut out = vec![[0.0f64; 3]; m1 * m2 * m3];
        for (o, chunk) in out.iter_mut().zip(cur.chunks_exact(3)) {
            o.copy_from_slice(chunk);
        }
        GridValues {
            m: tab.m,
            values: out,
            cell_weight: tab.cell_weight,
        }
    }

    /// Dense per-mode, per-node summation; the reference the factored
    /// transform is validated against.
    #[doc(hidden)]
    pub fn synthesize_dense_reference(
        &self,
        coeffs: &[[f64; 3]],
        factor: usize,
    ) -> Result<GridValues> {
        self.check_coeff_len(coeffs)?;
        let tab = self.tables_for(self.refined_m(factor));
        let [m1, m2, m3] = tab.m;
        let mut out = vec![[0.0f64; 3]; m1 * m2 * m3];
        for (slot, mode) in self.modes.iter().enumerate() {
            let c = coeffs[slot];
            if c == [0.0; 3] {
                continue;
            }
            let [k1, k2, k3] = mode.padded();
            let (r1, r2, r3) = (self.row_index(k1), self.row(k2, 1), self.row(k3, 2));
            let row1 = &tab.values[0][r1 * m1..(r1 + 1) * m1];
            let row2 = &tab.values[1][r2 * m2..(r2 + 1) * m2];
            let row3 = &tab.values[2][r3 * m3..(r3 + 1) * m3];
            for (q1, &v1) in row1.iter().enumerate() {
                for (q2, &v2) in row2.iter().enumerate() {
                    let v12 = v1 * v2;
                    let base = (q1 * m2 + q2) * m3;
                    for (q3, &v3) in row3.iter().enumerate() {
                        let p = v12 * v3;
                        let o = &mut out[base + q3];
                        o[0] += p * c[0];
                        o[1] += p * c[1];
                        o[2] += p * c[2];
                    }
                }
            }
        }
        Ok(GridValues {
            m: tab.m,
            values: out,
            cell_weight: tab.cell_weight,
        })
    }

    // Row index helper that tolerates padded dimensions (k = 0 there).
    fn row(&self, k: usize, j: usize) -> usize {
        if j >= self.domain.dim() {
            0
        } else {
            self.row_index(k)
        }
    }

    /// Quadrature realization of the L2 projection: coefficients <v, e_k>.
    ///
    /// Requires nodal values on the base quadrature grid.  For integrands
    /// whose products with a test mode stay within quadrature exactness this
    /// is the exact projection.
    pub fn analyze(&self, grid: &GridValues) -> Result<Vec<[f64; 3]>> {
        if grid.m != self.base_quad {
            return Err(Error::Shape(format!(
                "grid {:?} does not match the basis quadrature grid {:?}",
                grid.m, self.base_quad
            )));
        }
        let tab = self.tables_for(self.base_quad);
        let [m1, m2, m3] = tab.m;
        let mut coeffs = vec![[0.0f64; 3]; self.n_modes()];
        for (slot, mode) in self.modes.iter().enumerate() {
            let [k1, k2, k3] = mode.padded();
            let (r1, r2, r3) = (self.row_index(k1), self.row(k2, 1), self.row(k3, 2));
            let row1 = &tab.values[0][r1 * m1..(r1 + 1) * m1];
            let row2 = &tab.values[1][r2 * m2..(r2 + 1) * m2];
            let row3 = &tab.values[2][r3 * m3..(r3 + 1) * m3];
            let mut acc = [0.0f64; 3];
            for (q1, &v1) in row1.iter().enumerate() {
                for (q2, &v2) in row2.iter().enumerate() {
                    let v12 = v1 * v2;
                    let base = (q1 * m2 + q2) * m3;
                    for (q3, &v3) in row3.iter().enumerate() {
                        let p = v12 * v3;
                        let g = &grid.values[base + q3];
                        acc[0] += p * g[0];
                        acc[1] += p * g[1];
                        acc[2] += p * g[2];
                    }
                }
            }
            for c in 0..3 {
                coeffs[slot][c] = acc[c] * tab.cell_weight;
            }
        }
        Ok(coeffs)
    }

    /// 1-D eigenfunction derivative values of every retained mode of `dir`
    /// on the base grid, for weak-form pairings against grad(e_k).
    pub(crate) fn mode_gradient_values(&self, mode: &ModeIndex, dir: usize) -> Result<Vec<f64>> {
        if dir >= self.domain.dim() {
            return Err(Error::Shape("gradient direction out of range".into()));
        }
        let tab = self.tables_for(self.base_quad);
        let [m1, m2, m3] = tab.m;
        let [k1, k2, k3] = mode.padded();
        let (r1, r2, r3) = (self.row_index(k1), self.row(k2, 1), self.row(k3, 2));
        let pick = |j: usize, r: usize, mj: usize| -> &[f64] {
            let t = if j == dir {
                &tab.derivs[j]
            } else {
                &tab.values[j]
            };
            &t[r * mj..(r + 1) * mj]
        };
        let (row1, row2, row3) = (pick(0, r1, m1), pick(1, r2, m2), pick(2, r3, m3));
        let mut out = vec![0.0; m1 * m2 * m3];
        for (q1, &v1) in row1.iter().enumerate() {
            for (q2, &v2) in row2.iter().enumerate() {
                let v12 = v1 * v2;
                let base = (q1 * m2 + q2) * m3;
                for (q3, &v3) in row3.iter().enumerate() {
                    out[base + q3] = v12 * v3;
                }
            }
        }
        Ok(out)
    }
}

impl std::fmt::Debug for BasisSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BasisSpec")
            .field("domain", &self.domain)
            .field("modes_per_dim", &self.modes_per_dim)
            .field("n_modes", &self.n_modes())
            .finish()
    }
}

/// Normalization amplitude and wavenumber of the 1-D mode k on [0, L].
fn mode_1d(bc: BoundaryKind, l: f64, k: usize) -> (f64, f64) {
    let wav = k as f64 * PI / l;
    let amp = match bc {
        BoundaryKind::Neumann => {
            if k == 0 {
                (1.0 / l).sqrt()
            } else {
                (2.0 / l).sqrt()
            }
        }
        BoundaryKind::Dirichlet => (2.0 / l).sqrt(),
    };
    (amp, wav)
}

/// Closed-form eigenfunction evaluation at a point, independent of the
/// tabulated transform path (used by the dense oracle).
pub fn eval_eigenfunction(domain: &DomainSpec, mode: &ModeIndex, x: &[f64]) -> f64 {
    let mut v = 1.0;
    for (j, (&k, &xj)) in mode.indices().iter().zip(x.iter()).enumerate() {
        let l = domain.lengths()[j];
        let (amp, wav) = mode_1d(domain.bc(), l, k);
        let arg = wav * xj;
        v *= match domain.bc() {
            BoundaryKind::Neumann => amp * arg.cos(),
            BoundaryKind::Dirichlet => amp * arg.sin(),
        };
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis_1d(bc: BoundaryKind, n: usize) -> Arc<BasisSpec> {
        let d = DomainSpec::new(&[PI], bc).unwrap();
        build_basis(&d, &[n]).unwrap()
    }

    #[test]
    fn neumann_eigenvalues_on_pi_box() {
        let b = basis_1d(BoundaryKind::Neumann, 3);
        assert_eq!(b.eigenvalues(), &[0.0, 1.0, 4.0]);
        // e_0 = 1/sqrt(pi): constant nodal value
        let mut c = vec![[0.0; 3]; 3];
        c[0][0] = 1.0;
        let g = b.synthesize(&c).unwrap();
        for v in g.values() {
            assert!((v[0] - 1.0 / PI.sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn dirichlet_eigenvalues_on_pi_box() {
        let b = basis_1d(BoundaryKind::Dirichlet, 2);
        assert_eq!(b.eigenvalues(), &[1.0, 4.0]);
        assert_eq!(b.modes()[0].indices(), &[1]);
        // e_k(x) = sqrt(2/pi) sin(k x)
        let d = b.domain();
        for (k, x) in [(1usize, 0.3), (2, 1.1)] {
            let e = eval_eigenfunction(d, &ModeIndex::new(&[k]).unwrap(), &[x]);
            let expect = (2.0 / PI).sqrt() * (k as f64 * x).sin();
            assert!((e - expect).abs() < 1e-15, "{e} vs {expect}");
        }
    }

    #[test]
    fn tensor_eigenvalues_2d() {
        let d = DomainSpec::new(&[PI, PI], BoundaryKind::Neumann).unwrap();
        let b = build_basis(&d, &[2, 2]).unwrap();
        assert_eq!(b.eigenvalues(), &[0.0, 1.0, 1.0, 2.0]);
        // lex tiebreak between (0,1) and (1,0)
        assert_eq!(b.modes()[1].indices(), &[0, 1]);
        assert_eq!(b.modes()[2].indices(), &[1, 0]);
    }

    #[test]
    fn invalid_domain_rejected() {
        assert!(DomainSpec::new(&[], BoundaryKind::Neumann).is_err());
        assert!(DomainSpec::new(&[1.0, 2.0, 3.0, 4.0], BoundaryKind::Neumann).is_err());
        assert!(DomainSpec::new(&[-1.0], BoundaryKind::Neumann).is_err());
        let d = DomainSpec::new(&[1.0], BoundaryKind::Neumann).unwrap();
        assert!(build_basis(&d, &[0]).is_err());
        assert!(build_basis(&d, &[2, 2]).is_err());
    }

    #[test]
    fn discrete_gram_is_identity() {
        for bc in [BoundaryKind::Neumann, BoundaryKind::Dirichlet] {
            let d = DomainSpec::new(&[PI, 1.5], bc).unwrap();
            let b = build_basis(&d, &[4, 3]).unwrap();
            let n = b.n_modes();
            for i in 0..n {
                let mut c = vec![[0.0; 3]; n];
                c[i][0] = 1.0;
                let g = b.synthesize(&c).unwrap();
                let back = b.analyze(&g).unwrap();
                for (j, bk) in back.iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (bk[0] - expect).abs() < 1e-12,
                        "gram[{i}][{j}] = {} ({bc:?})",
                        bk[0]
                    );
                }
            }
        }
    }

    #[test]
    fn parseval_on_quadrature_grid() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for bc in [BoundaryKind::Neumann, BoundaryKind::Dirichlet] {
            let d = DomainSpec::new(&[2.0, PI], bc).unwrap();
            let b = build_basis(&d, &[3, 5]).unwrap();
            let coeffs: Vec<[f64; 3]> = (0..b.n_modes())
                .map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
                .collect();
            let g = b.synthesize(&coeffs).unwrap();
            let quad_l2 = g.integrate(crate::vec3::norm_sq).sqrt();
            let coeff_l2: f64 = coeffs
                .iter()
                .map(|c| crate::vec3::norm_sq(*c))
                .sum::<f64>()
                .sqrt();
            assert!(
                (quad_l2 - coeff_l2).abs() < 1e-12,
                "parseval: {quad_l2} vs {coeff_l2} ({bc:?})"
            );
        }
    }

    #[test]
    fn synthesize_matches_per_node_summation() {
        // direct dense summation oracle over the closed forms
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let d = DomainSpec::new(&[PI, 2.0], BoundaryKind::Neumann).unwrap();
        let b = build_basis(&d, &[3, 2]).unwrap();
        let coeffs: Vec<[f64; 3]> = (0..b.n_modes())
            .map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
            .collect();
        let g = b.synthesize(&coeffs).unwrap();
        let [m1, m2, _] = *g.points_per_dim();
        let (h1, h2) = (PI / m1 as f64, 2.0 / m2 as f64);
        for q1 in 0..m1 {
            for q2 in 0..m2 {
                let x = [(q1 as f64 + 0.5) * h1, (q2 as f64 + 0.5) * h2];
                let mut direct = 0.0;
                for (slot, mode) in b.modes().iter().enumerate() {
                    direct += coeffs[slot][1] * eval_eigenfunction(&d, mode, &x);
                }
                let got = g.values()[q1 * m2 + q2][1];
                assert!((got - direct).abs() < 1e-12, "{got} vs {direct}");
            }
        }
    }

    #[test]
    fn analyze_zeroes_out_of_span_mode() {
        // sample e_{N+1} from a larger basis; retained coefficients vanish
        let big = basis_1d(BoundaryKind::Neumann, 8);
        let small = basis_1d(BoundaryKind::Neumann, 4);
        // mode k=4 is outside span{e_0..e_3}
        let slot = big.slot_of(&ModeIndex::new(&[4]).unwrap()).unwrap();
        let mut c = vec![[0.0; 3]; big.n_modes()];
        c[slot][0] = 1.0;
        let g = big.synthesize_on(&c, *small.quad_points_per_dim()).unwrap();
        let back = small.analyze(&g).unwrap();
        for (i, v) in back.iter().enumerate() {
            assert!(v[0].abs() < 1e-12, "coefficient {i} = {}", v[0]);
        }
    }

    #[test]
    fn constant_grid_analyzes_to_constant_mode() {
        let d = DomainSpec::new(&[PI, 2.0], BoundaryKind::Neumann).unwrap();
        let b = build_basis(&d, &[3, 3]).unwrap();
        let a = 0.7;
        let mut g = b.synthesize(&vec![[0.0; 3]; b.n_modes()]).unwrap();
        for v in g.values_mut() {
            v[2] = a;
        }
        let c = b.analyze(&g).unwrap();
        let measure = d.measure();
        for (slot, mode) in b.modes().iter().enumerate() {
            let expect = if mode.indices() == [0, 0] {
                a * measure.sqrt()
            } else {
                0.0
            };
            assert!(
                (c[slot][2] - expect).abs() < 1e-12,
                "mode {mode}: {}",
                c[slot][2]
            );
        }
    }

    #[test]
    fn zero_coefficients_give_zero_grid() {
        let b = basis_1d(BoundaryKind::Dirichlet, 5);
        let g = b.synthesize(&[[0.0; 3]; 5]).unwrap();
        assert!(g.values().iter().all(|v| *v == [0.0; 3]));
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let b = basis_1d(BoundaryKind::Neumann, 4);
        assert!(b.synthesize(&[[0.0; 3]; 3]).is_err());
        let other = basis_1d(BoundaryKind::Neumann, 5);
        let g = other.synthesize(&[[0.0; 3]; 5]).unwrap();
        assert!(b.analyze(&g).is_err());
    }

    #[test]
    fn quadrature_exact_for_quartic_products_vs_refined() {
        // integral of a product of four retained modes: base grid equals a
        // heavily refined grid
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(29);
        for bc in [BoundaryKind::Neumann, BoundaryKind::Dirichlet] {
            let b = basis_1d(bc, 6);
            let coeffs: Vec<[f64; 3]> = (0..6)
                .map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
                .collect();
            let base = b.synthesize(&coeffs).unwrap();
            let fine = b.synthesize_refined(&coeffs, 8).unwrap();
            let i_base = base.integrate(|v| crate::vec3::norm_sq(v).powi(2));
            let i_fine = fine.integrate(|v| crate::vec3::norm_sq(v).powi(2));
            assert!(
                (i_base - i_fine).abs() < 1e-12 * i_fine.max(1.0),
                "quartic dealiasing: {i_base} vs {i_fine} ({bc:?})"
            );
        }
    }

    #[test]
    fn parseval_and_round_trip_across_random_domains() {
        // seeded sweep over dimension, lengths, boundary kind and mode counts
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(123);
        for case in 0..20 {
            let dim = rng.random_range(1..=3usize);
            let lengths: Vec<f64> = (0..dim).map(|_| rng.random_range(0.3..4.0)).collect();
            let bc = if rng.random_range(0..2) == 0 {
                BoundaryKind::Neumann
            } else {
                BoundaryKind::Dirichlet
            };
            let modes: Vec<usize> = (0..dim).map(|_| rng.random_range(1..=4usize)).collect();
            let d = DomainSpec::new(&lengths, bc).unwrap();
            let b = build_basis(&d, &modes).unwrap();
            let coeffs: Vec<[f64; 3]> = (0..b.n_modes())
                .map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
                .collect();
            let g = b.synthesize(&coeffs).unwrap();
            let quad_l2 = g.integrate(crate::vec3::norm_sq).sqrt();
            let coeff_l2 = coeffs
                .iter()
                .map(|c| crate::vec3::norm_sq(*c))
                .sum::<f64>()
                .sqrt();
            assert!(
                (quad_l2 - coeff_l2).abs() < 1e-12 * coeff_l2.max(1.0),
                "case {case} ({bc:?}, {lengths:?}, {modes:?}): parseval"
            );
            let back = b.analyze(&g).unwrap();
            for (slot, (a, c)) in back.iter().zip(&coeffs).enumerate() {
                for i in 0..3 {
                    assert!(
                        (a[i] - c[i]).abs() < 1e-12,
                        "case {case} slot {slot}: round trip"
                    );
                }
            }
        }
    }

    #[test]
    fn factored_transform_matches_dense_reference() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        let cases: Vec<(Vec<f64>, Vec<usize>)> = vec![
            (vec![PI], vec![5]),
            (vec![PI, 2.0], vec![4, 3]),
            (vec![1.0, 2.0, 0.7], vec![3, 2, 2]),
        ];
        for bc in [BoundaryKind::Neumann, BoundaryKind::Dirichlet] {
            for (lengths, modes) in &cases {
                let d = DomainSpec::new(lengths, bc).unwrap();
                let b = build_basis(&d, modes).unwrap();
                let coeffs: Vec<[f64; 3]> = (0..b.n_modes())
                    .map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
                    .collect();
                for factor in [1usize, 3] {
                    let fast = b.synthesize_refined(&coeffs, factor).unwrap();
                    let dense = b.synthesize_dense_reference(&coeffs, factor).unwrap();
                    for (a, c) in fast.values().iter().zip(dense.values()) {
                        for i in 0..3 {
                            assert!(
                                (a[i] - c[i]).abs() < 1e-13,
                                "{bc:?} {lengths:?} factor {factor}: {} vs {}",
                                a[i],
                                c[i]
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn transforms_are_safe_to_share_across_threads() {
        let d = DomainSpec::new(&[PI, 2.0], BoundaryKind::Neumann).unwrap();
        let b = build_basis(&d, &[4, 4]).unwrap();
        let handles: Vec<_> = (0..4u64)
            .map(|s| {
                let b = Arc::clone(&b);
                std::thread::spawn(move || {
                    use rand::{Rng, SeedableRng};
                    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(s);
                    let coeffs: Vec<[f64; 3]> = (0..b.n_modes())
                        .map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
                        .collect();
                    // concurrent refined synthesis shares the table cache
                    let g = b.synthesize_refined(&coeffs, 2).unwrap();
                    let back = b.synthesize(&coeffs).unwrap();
                    (
                        g.integrate(crate::vec3::norm_sq),
                        back.integrate(crate::vec3::norm_sq),
                    )
                })
            })
            .collect();
        for h in handles {
            let (a, c) = h.join().unwrap();
            assert!((a - c).abs() < 1e-12 * a.max(1.0));
        }
    }

    #[test]
    fn eigenvalues_nondecreasing_in_slot_order() {
        let d = DomainSpec::new(&[1.0, 2.0, 0.5], BoundaryKind::Dirichlet).unwrap();
        let b = build_basis(&d, &[3, 2, 2]).unwrap();
        for w in b.eigenvalues().windows(2) {
            assert!(w[0] <= w[1]);
        }
        assert!(b.eigenvalues()[0] > 0.0, "dirichlet has no zero mode");
    }
}
