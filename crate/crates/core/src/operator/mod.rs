//! Finite-cube Hamiltonians `H_□ = Δ_□ + g V`, their spectra and Green
//! functions `G = (H − E)^{−1}`.

pub mod io;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::dynamics::{translate, FrequencyMatrix, TorusPoint};
use crate::error::{Error, Result};
use crate::lattice::{gamma, Cube, ScaleSchedule, Site};
use crate::randelette::{RandeletteEnsemble, ThetaSample};

/// Unscaled potential `v(T^x ω, θ)` as a function of the lattice site.
pub trait SitePotential: Sync {
    fn value(&self, x: &[i64]) -> Result<f64>;
}

/// The grand-ensemble potential along one orbit.
#[derive(Debug, Clone)]
pub struct HullPotential<'a> {
    pub ensemble: &'a RandeletteEnsemble,
    pub theta: &'a ThetaSample,
    pub freqs: &'a FrequencyMatrix,
    pub omega: TorusPoint,
}

impl SitePotential for HullPotential<'_> {
    fn value(&self, x: &[i64]) -> Result<f64> {
        self.ensemble.hull_eval(self.theta, &translate(&self.omega, x, self.freqs)?)
    }
}

/// Any closure of the site.
pub struct FnPotential<F>(pub F);

impl<F: Fn(&[i64]) -> f64 + Sync> SitePotential for FnPotential<F> {
    fn value(&self, x: &[i64]) -> Result<f64> {
        Ok((self.0)(x))
    }
}

/// Potential values tabulated on a cube (lexicographic order), so that
/// sub-cube operators never re-evaluate the hull.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialField {
    pub cube: Cube,
    pub values: Vec<f64>,
}

impl PotentialField {
    pub fn sample(cube: &Cube, potential: &dyn SitePotential) -> Result<Self> {
        let values = cube.sites().iter().map(|x| potential.value(x)).collect::<Result<Vec<_>>>()?;
        Ok(Self { cube: cube.clone(), values })
    }

    pub fn from_values(cube: Cube, values: Vec<f64>) -> Result<Self> {
        if values.len() != cube.site_count() {
            return Err(Error::DimensionMismatch { expected: cube.site_count(), got: values.len() });
        }
        Ok(Self { cube, values })
    }

    pub fn at(&self, x: &[i64]) -> Result<f64> {
        self.cube
            .index_of(x)
            .map(|i| self.values[i])
            .ok_or_else(|| Error::IndexOutOfRange(format!("site {x:?} outside the sampled cube")))
    }

    pub fn restrict(&self, sub: &Cube) -> Result<Self> {
        if !self.cube.contains_cube(sub) {
            return Err(Error::Precondition(format!("{sub:?} is not inside the sampled cube")));
        }
        let values = sub.sites().iter().map(|x| self.at(x)).collect::<Result<Vec<_>>>()?;
        Ok(Self { cube: sub.clone(), values })
    }
}

/// Dense symmetric matrix of `H_□` with Dirichlet truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    pub cube: Cube,
    pub matrix: DMatrix<f64>,
}

impl HamiltonianMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn index_of(&self, x: &[i64]) -> Result<usize> {
        self.cube
            .index_of(x)
            .ok_or_else(|| Error::IndexOutOfRange(format!("site {x:?} outside {:?}", self.cube)))
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        self.matrix.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }
}

/// `H_□` with diagonal `g · v(x)` and unit hopping between neighbours inside the cube.
pub fn assemble_field(field: &PotentialField, g: f64) -> HamiltonianMatrix {
    let cube = &field.cube;
    let n = cube.site_count();
    let mut matrix = DMatrix::zeros(n, n);
    for (i, x) in cube.sites().into_iter().enumerate() {
        matrix[(i, i)] = g * field.values[i];
        for axis in 0..cube.dim() {
            let mut y = x.clone();
            y[axis] += 1;
            if let Some(j) = cube.index_of(&y) {
                matrix[(i, j)] = 1.0;
                matrix[(j, i)] = 1.0;
            }
        }
    }
    HamiltonianMatrix { cube: cube.clone(), matrix }
}

pub fn assemble(cube: &Cube, potential: &dyn SitePotential, g: f64) -> Result<HamiltonianMatrix> {
    Ok(assemble_field(&PotentialField::sample(cube, potential)?, g))
}

/// Relative residual tolerance accepted from the eigensolver.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Eigenvalues in ascending order with orthonormal eigenvectors as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub cube: Cube,
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
    /// `max_j ‖Hψ_j − λ_jψ_j‖ / max(1, ‖H‖_∞)`.
    pub residual: f64,
}

/// Sorted eigenpairs of a symmetric matrix and the relative residual.
fn eigen_decompose(matrix: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>, f64)> {
    let n = matrix.nrows();
    let scale = matrix
        .row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(1.0, f64::max);
    let eig = SymmetricEigen::try_new(matrix.clone(), f64::EPSILON, 100 * n.max(10)).ok_or_else(|| {
        Error::Convergence(format!("symmetric eigensolver failed on a {n}×{n} matrix with ‖H‖∞ = {scale:e}"))
    })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |i, c| eig.eigenvectors[(i, order[c])]);

    let hv = matrix * &eigenvectors;
    let mut worst: f64 = 0.0;
    for (c, lambda) in eigenvalues.iter().enumerate() {
        worst = worst.max((hv.column(c) - eigenvectors.column(c) * *lambda).norm());
    }
    let residual = worst / scale;
    if !(residual <= RESIDUAL_TOLERANCE) {
        return Err(Error::Convergence(format!(
            "eigen-residual {residual:e} exceeds {RESIDUAL_TOLERANCE:e} (n = {n}, ‖H‖∞ = {scale:e})"
        )));
    }
    Ok((eigenvalues, eigenvectors, residual))
}

pub fn spectrum(h: &HamiltonianMatrix) -> Result<SpectralData> {
    let (eigenvalues, eigenvectors, residual) = eigen_decompose(&h.matrix)?;
    Ok(SpectralData { cube: h.cube.clone(), eigenvalues, eigenvectors, residual })
}

impl SpectralData {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `dist(Σ, E)`.
    pub fn distance(&self, energy: f64) -> f64 {
        let i = self.eigenvalues.partition_point(|&l| l < energy);
        let above = self.eigenvalues.get(i).map(|l| l - energy);
        let below = i.checked_sub(1).map(|j| energy - self.eigenvalues[j]);
        above.into_iter().chain(below).fold(f64::INFINITY, f64::min)
    }

    /// Below this distance `E` counts as numerically in the spectrum.
    pub fn resonance_floor(&self) -> f64 {
        let scale = self.eigenvalues.iter().map(|l| l.abs()).fold(1.0, f64::max);
        64.0 * f64::EPSILON * scale
    }

    fn check_energy(&self, energy: f64) -> Result<()> {
        let distance = self.distance(energy);
        if !(distance > self.resonance_floor()) {
            return Err(Error::ResonantEnergy { energy, distance });
        }
        Ok(())
    }

    fn index_of(&self, x: &[i64]) -> Result<usize> {
        self.cube
            .index_of(x)
            .ok_or_else(|| Error::IndexOutOfRange(format!("site {x:?} outside {:?}", self.cube)))
    }

    /// `G(x, y; E) = Σ_j ψ_j(x) ψ_j(y) / (λ_j − E)`.
    pub fn green(&self, energy: f64, x: &[i64], y: &[i64]) -> Result<GreenQuery> {
        self.check_energy(energy)?;
        let (i, j) = (self.index_of(x)?, self.index_of(y)?);
        let value = self
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(c, l)| self.eigenvectors[(i, c)] * self.eigenvectors[(j, c)] / (l - energy))
            .sum();
        Ok(GreenQuery { energy, x: x.to_vec(), y: y.to_vec(), value, distance: self.distance(energy) })
    }

    /// `G(x, ·; E)` over the whole cube, in lexicographic order.
    pub fn green_row(&self, energy: f64, x: &[i64]) -> Result<Vec<f64>> {
        self.check_energy(energy)?;
        let i = self.index_of(x)?;
        let weights: DVector<f64> = DVector::from_iterator(
            self.len(),
            self.eigenvalues.iter().enumerate().map(|(c, l)| self.eigenvectors[(i, c)] / (l - energy)),
        );
        Ok((&self.eigenvectors * weights).iter().copied().collect())
    }

    /// Eigenvector `j` in lexicographic site order.
    pub fn eigenvector(&self, j: usize) -> Vec<f64> {
        self.eigenvectors.column(j).iter().copied().collect()
    }

    /// Number of eigenvalues in the closed interval.
    pub fn count_in(&self, lo: f64, hi: f64) -> usize {
        self.eigenvalues.partition_point(|&l| l <= hi) - self.eigenvalues.partition_point(|&l| l < lo)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreenQuery {
    pub energy: f64,
    pub x: Site,
    pub y: Site,
    pub value: f64,
    pub distance: f64,
}

/// Resolvent by direct LU solves. Unlike the eigen-expansion, small entries
/// keep their relative accuracy, which matters when `g` is huge and the
/// Green function decays below the absolute rounding level of the spectrum.
pub struct Resolvent {
    cube: Cube,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl Resolvent {
    pub fn new(h: &HamiltonianMatrix, energy: f64) -> Result<Self> {
        let n = h.dim();
        let shifted = &h.matrix - DMatrix::identity(n, n) * energy;
        let lu = shifted.lu();
        if !lu.is_invertible() {
            return Err(Error::ResonantEnergy { energy, distance: 0.0 });
        }
        Ok(Self { cube: h.cube.clone(), lu })
    }

    /// `G(·, y; E)`, equal to `G(y, ·; E)` by symmetry.
    pub fn column(&self, y: &[i64]) -> Result<Vec<f64>> {
        let j = self
            .cube
            .index_of(y)
            .ok_or_else(|| Error::IndexOutOfRange(format!("site {y:?} outside {:?}", self.cube)))?;
        let n = self.cube.site_count();
        let mut rhs = DVector::zeros(n);
        rhs[j] = 1.0;
        let sol = self
            .lu
            .solve(&rhs)
            .ok_or_else(|| Error::Convergence("singular LU factor".into()))?;
        if sol.iter().any(|v| !v.is_finite()) {
            return Err(Error::Convergence("non-finite resolvent entry".into()));
        }
        Ok(sol.iter().copied().collect())
    }
}

/// Both sides of the geometric resolvent identity
/// `G_host(u, y) = −Σ_{(w,w') ∈ ∂inner} G_inner(u, w) G_host(w', y)`.
///
/// The minus sign comes from the `+1` hopping: `H_host = H_inner ⊕ H_rest + Γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GriCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

pub fn gri_residual(
    field: &PotentialField,
    inner: &Cube,
    g: f64,
    energy: f64,
    u: &[i64],
    y: &[i64],
) -> Result<GriCheck> {
    let host = &field.cube;
    if !host.contains_cube(inner) {
        return Err(Error::Precondition("inner cube must lie inside the host".into()));
    }
    if !inner.contains(u) {
        return Err(Error::Precondition(format!("u = {u:?} is not in the inner cube")));
    }
    if inner.contains(y) || !host.contains(y) {
        return Err(Error::Precondition(format!("y = {y:?} must lie in host \\ inner")));
    }
    let host_spec = spectrum(&assemble_field(field, g))?;
    let inner_spec = spectrum(&assemble_field(&field.restrict(inner)?, g))?;
    let lhs = host_spec.green(energy, u, y)?.value;
    let inner_row = inner_spec.green_row(energy, u)?;
    let host_col = host_spec.green_row(energy, y)?;
    let mut rhs = 0.0;
    for (w, w_out) in inner.boundary() {
        if let Some(j) = host.index_of(&w_out) {
            let i = inner.index_of(&w).expect("boundary site is inside");
            rhs -= inner_row[i] * host_col[j];
        }
    }
    Ok(GriCheck { lhs, rhs, residual: (lhs - rhs).abs() })
}

/// Combes–Thomas initial-scale condition `g δ_0 > 2d + 4d e^{4γ(m, L_0)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialScaleCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub pass: bool,
}

fn initial_scale_rhs(l0: u64, d: usize, m: f64) -> Result<f64> {
    let d = d as f64;
    Ok(2.0 * d + 4.0 * d * (4.0 * gamma(m, l0)?).exp())
}

pub fn initial_scale_predicate(sched: &ScaleSchedule, d: usize, m: f64) -> Result<InitialScaleCheck> {
    if d == 0 {
        return Err(Error::param("d", "lattice dimension must be at least 1"));
    }
    let lhs = sched.resonance_threshold(0)?;
    let rhs = initial_scale_rhs(sched.l0, d, m)?;
    Ok(InitialScaleCheck { lhs, rhs, ratio: lhs / rhs, pass: lhs > rhs })
}

/// The coupling at which the initial-scale ratio equals `margin`.
pub fn tuned_coupling(l0: u64, d: usize, m: f64, margin: f64) -> Result<f64> {
    if !(margin > 0.0) {
        return Err(Error::param("margin", "must be positive"));
    }
    let target = margin * initial_scale_rhs(l0, d, m)?;
    // g δ_0 = g^{1/2} e^{−4√L_0}
    Ok((target * (4.0 * (l0 as f64).sqrt()).exp()).powi(2))
}
