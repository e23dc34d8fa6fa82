//! Finite-difference solution of the 1-D time-independent Schrödinger
//! equation for `V(x) = ½ m ω² x² + λ x⁴`.
//!
//! The second derivative uses the three-point central difference, giving a
//! symmetric tridiagonal Hamiltonian. Physical solves impose ψ = 0 at both
//! grid ends and diagonalize the interior block.

pub mod tridiag;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use tridiag::{lowest_eigenpairs, sturm_count, Eigenpairs};

pub const DEFAULT_X_MAX: f64 = 5.0;
pub const DEFAULT_POINTS: usize = 500;
pub const DEFAULT_LEVELS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumGrid {
    pub x_max: f64,
    pub n_points: usize,
    pub x: Vec<f64>,
    pub dx: f64,
}

impl QuantumGrid {
    pub fn new(x_max: f64, n_points: usize) -> Result<Self> {
        make_grid(x_max, n_points)
    }
}

pub fn make_grid(x_max: f64, n_points: usize) -> Result<QuantumGrid> {
    if n_points < 3 {
        return Err(Error::Config(format!(
            "grid needs at least 3 points, got {n_points}"
        )));
    }
    if !(x_max > 0.0) || !x_max.is_finite() {
        return Err(Error::Config(format!("x_max must be positive, got {x_max}")));
    }
    let dx = 2.0 * x_max / (n_points - 1) as f64;
    let mut x: Vec<f64> = (0..n_points).map(|i| -x_max + i as f64 * dx).collect();
    x[n_points - 1] = x_max;
    Ok(QuantumGrid {
        x_max,
        n_points,
        x,
        dx,
    })
}

/// Parameters of the anharmonic potential, in atomic units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub m: f64,
    pub omega: f64,
    pub lambda: f64,
    pub hbar: f64,
}

impl Default for PotentialSpec {
    fn default() -> Self {
        Self {
            m: 1.0,
            omega: 1.0,
            lambda: 0.0,
            hbar: 1.0,
        }
    }
}

impl PotentialSpec {
    pub fn with_lambda(self, lambda: f64) -> Self {
        Self { lambda, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.m, self.omega, self.lambda, self.hbar]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.m <= 0.0 || self.hbar <= 0.0 || self.omega < 0.0 {
            return Err(Error::Domain(format!("invalid potential parameters {self:?}")));
        }
        if self.lambda < 0.0 {
            return Err(Error::Domain(format!(
                "lambda must be non-negative, got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    pub fn potential_at(&self, x: f64) -> f64 {
        let x2 = x * x;
        0.5 * self.m * self.omega * self.omega * x2 + self.lambda * x2 * x2
    }
}

pub fn eval_potential(grid: &QuantumGrid, spec: &PotentialSpec) -> Vec<f64> {
    grid.x.iter().map(|&x| spec.potential_at(x)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalHamiltonian {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
    /// Grid spacing, used as the normalization weight for eigenvectors.
    pub dx: f64,
}

impl TridiagonalHamiltonian {
    pub fn from_parts(potential: &[f64], dx: f64, spec: &PotentialSpec) -> Self {
        let kinetic = spec.hbar * spec.hbar / (spec.m * dx * dx);
        Self {
            diag: potential.iter().map(|v| kinetic + v).collect(),
            offdiag: vec![-0.5 * kinetic; potential.len().saturating_sub(1)],
            dx,
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Dense copy, mostly for checks against dense solvers.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            a[i][i] = self.diag[i];
            if i + 1 < n {
                a[i][i + 1] = self.offdiag[i];
                a[i + 1][i] = self.offdiag[i];
            }
        }
        a
    }
}

/// Full N×N Hamiltonian over every grid node.
pub fn build_hamiltonian(
    grid: &QuantumGrid,
    potential: &[f64],
    spec: &PotentialSpec,
) -> Result<TridiagonalHamiltonian> {
    if potential.len() != grid.n_points {
        return Err(Error::Shape(format!(
            "potential has {} values for a {}-point grid",
            potential.len(),
            grid.n_points
        )));
    }
    Ok(TridiagonalHamiltonian::from_parts(potential, grid.dx, spec))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub energies: Vec<f64>,
    /// One array per state, `Σ ψ² dx = 1`.
    pub wavefunctions: Vec<Vec<f64>>,
}

pub fn eigensolve_lowest(h: &TridiagonalHamiltonian, k: usize) -> Result<Spectrum> {
    let pairs = lowest_eigenpairs(&h.diag, &h.offdiag, k, h.dx)?;
    for (j, w) in pairs.values.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::Solver {
                state: j + 1,
                reason: format!("eigenvalues not strictly ascending ({} then {})", w[0], w[1]),
            });
        }
    }
    Ok(Spectrum {
        energies: pairs.values,
        wavefunctions: pairs.vectors,
    })
}

/// Lowest `k` states with Dirichlet walls at `±x_max`: the interior block is
/// diagonalized and the boundary amplitudes are exactly zero.
pub fn solve_grid(
    grid: &QuantumGrid,
    potential: &[f64],
    spec: &PotentialSpec,
    k: usize,
) -> Result<Spectrum> {
    spec.validate()?;
    let n = grid.n_points;
    if potential.len() != n {
        return Err(Error::Shape(format!(
            "potential has {} values for a {n}-point grid",
            potential.len()
        )));
    }
    if k == 0 || k > n - 2 {
        return Err(Error::Config(format!(
            "requested {k} states from {} interior points",
            n - 2
        )));
    }
    let interior = TridiagonalHamiltonian::from_parts(&potential[1..n - 1], grid.dx, spec);
    let mut spectrum = eigensolve_lowest(&interior, k)?;
    for psi in &mut spectrum.wavefunctions {
        psi.insert(0, 0.0);
        psi.push(0.0);
    }
    Ok(spectrum)
}

pub fn solve_spec(grid: &QuantumGrid, spec: &PotentialSpec, k: usize) -> Result<Spectrum> {
    solve_grid(grid, &eval_potential(grid, spec), spec, k)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n_points: usize,
    pub energies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// `diffs[i][n] = |E_n(N_i) − E_n(N_{i+1})|`.
    pub diffs: Vec<Vec<f64>>,
}

impl ConvergenceTable {
    /// Ratios of successive differences for level `n`.
    pub fn ratios(&self, level: usize) -> Vec<f64> {
        self.diffs
            .windows(2)
            .map(|w| w[0][level] / w[1][level])
            .collect()
    }
}

pub fn convergence_study(
    spec: &PotentialSpec,
    x_max: f64,
    n_list: &[usize],
    k: usize,
) -> Result<ConvergenceTable> {
    if n_list.is_empty() {
        return Err(Error::Config("empty grid-size list".into()));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(format!("grid sizes must ascend: {n_list:?}")));
    }
    let rows = n_list
        .iter()
        .map(|&n| {
            let grid = make_grid(x_max, n)?;
            let spectrum = solve_spec(&grid, spec, k)?;
            Ok(ConvergenceRow {
                n_points: n,
                energies: spectrum.energies,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let diffs = rows
        .windows(2)
        .map(|w| {
            w[0].energies
                .iter()
                .zip(&w[1].energies)
                .map(|(a, b)| (a - b).abs())
                .collect()
        })
        .collect();
    Ok(ConvergenceTable { rows, diffs })
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumRow {
    pub lambda: f64,
    pub energies: Vec<f64>,
    pub potential: Vec<f64>,
}

/// Potential arrays paired with their lowest energies, one row per λ.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumDataset {
    pub rows: Vec<QuantumRow>,
    pub x_max: f64,
    pub n_points: usize,
    pub spec: PotentialSpec,
}

impl QuantumDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn levels(&self) -> usize {
        self.rows.first().map_or(0, |r| r.energies.len())
    }

    pub fn validate(&self) -> Result<()> {
        for (i, row) in self.rows.iter().enumerate() {
            if row.potential.len() != self.n_points {
                return Err(Error::Shape(format!(
                    "row {i} has {} potential values, expected {}",
                    row.potential.len(),
                    self.n_points
                )));
            }
            if row.energies.len() != self.levels() {
                return Err(Error::Shape(format!("row {i} has a different level count")));
            }
            if row.energies.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Domain(format!("row {i} energies are not ascending")));
            }
        }
        Ok(())
    }
}

/// `count` values evenly spaced on `[0, lambda_max]` (a single value is 0).
pub fn lambda_sweep(count: usize, lambda_max: f64) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..count)
            .map(|i| lambda_max * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// Rows follow the order of `lambdas`; rows are computed in parallel.
pub fn gen_quantum_dataset(
    spec_base: &PotentialSpec,
    lambdas: &[f64],
    grid: &QuantumGrid,
    k: usize,
) -> Result<QuantumDataset> {
    if lambdas.is_empty() {
        return Err(Error::Config("no lambda values given".into()));
    }
    if let Some(bad) = lambdas.iter().find(|l| !(**l >= 0.0) || !l.is_finite()) {
        return Err(Error::Config(format!("lambda must be non-negative, got {bad}")));
    }
    let rows = lambdas
        .par_iter()
        .map(|&lambda| {
            let spec = spec_base.with_lambda(lambda);
            let potential = eval_potential(grid, &spec);
            let spectrum = solve_grid(grid, &potential, &spec, k).map_err(|e| Error::Lambda {
                lambda,
                source: Box::new(e),
            })?;
            Ok(QuantumRow {
                lambda,
                energies: spectrum.energies,
                potential,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(QuantumDataset {
        rows,
        x_max: grid.x_max,
        n_points: grid.n_points,
        spec: *spec_base,
    })
}
