//! Dirichlet sine eigenbasis of −Δ on an interval or a rectangle.
//!
//! Coefficients are taken with respect to the L²-orthonormal eigenfunctions
//!
//! ```text
//! φ_k(x) = Π_i √(2/L_i) · sin(k_i π x_i / L_i),     λ_k = Σ_i (k_i π / L_i)²
//! ```
//!
//! so Parseval carries no weights. Physical values live on the interior nodes
//! `x_n = n·L/(N+1)`, `n = 1..N`, of a uniform grid with `N = 2M` points per
//! axis. On that grid the discrete sine sums are exactly orthogonal for all
//! frequencies below `N+1`, which makes the transform pair mutually inverse on
//! retained modes and integrates cubic products of retained modes without
//! aliasing.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Serializable description of a basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSpec {
    pub dim: usize,
    pub modes: usize,
    pub lengths: Vec<f64>,
}

impl BasisSpec {
    pub fn build(&self) -> Result<SpectralBasis> {
        SpectralBasis::new(self.dim, self.modes, &self.lengths)
    }
}

#[derive(Debug, Clone)]
struct Axis {
    length: f64,
    nodes: Vec<f64>,
    /// Quadrature weight `L/(N+1)`.
    weight: f64,
    /// `synth[n * modes + k] = φ_{k+1}(x_n)`.
    synth: Vec<f64>,
}

impl Axis {
    fn new(length: f64, modes: usize, points: usize) -> Axis {
        let spacing = length / (points + 1) as f64;
        let norm = (2.0 / length).sqrt();
        let nodes: Vec<f64> = (1..=points).map(|n| n as f64 * spacing).collect();
        let mut synth = vec![0.0; points * modes];
        for n in 0..points {
            for k in 0..modes {
                // exact integer phase keeps the table symmetric to round-off
                let phase = std::f64::consts::PI * ((n + 1) * (k + 1)) as f64 / (points + 1) as f64;
                synth[n * modes + k] = norm * phase.sin();
            }
        }
        Axis {
            length,
            nodes,
            weight: spacing,
            synth,
        }
    }

    fn points(&self) -> usize {
        self.nodes.len()
    }
}

#[derive(Debug, Clone)]
pub struct SpectralBasis {
    dim: usize,
    modes_per_axis: usize,
    axes: Vec<Axis>,
    eigenvalues: Vec<f64>,
    wavenumbers: Vec<[usize; 2]>,
}

impl SpectralBasis {
    /// Builds the basis with `modes_per_axis` modes along each of `dim` axes.
    pub fn new(dim: usize, modes_per_axis: usize, lengths: &[f64]) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::config(format!("basis dim must be 1 or 2, got {dim}")));
        }
        if modes_per_axis == 0 {
            return Err(Error::config("basis needs at least one mode per axis"));
        }
        if lengths.len() != dim {
            return Err(Error::config(format!(
                "basis of dim {dim} needs {dim} lengths, got {}",
                lengths.len()
            )));
        }
        if let Some(bad) = lengths.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::config(format!("domain lengths must be positive, got {bad}")));
        }

        let points = dealiased_points(modes_per_axis);
        let axes: Vec<Axis> = lengths
            .iter()
            .map(|&l| Axis::new(l, modes_per_axis, points))
            .collect();

        let axis_eig = |axis: usize, k: usize| {
            let w = k as f64 * std::f64::consts::PI / lengths[axis];
            w * w
        };
        let mut eigenvalues = Vec::new();
        let mut wavenumbers = Vec::new();
        if dim == 1 {
            for k in 1..=modes_per_axis {
                eigenvalues.push(axis_eig(0, k));
                wavenumbers.push([k, 0]);
            }
        } else {
            for k1 in 1..=modes_per_axis {
                for k2 in 1..=modes_per_axis {
                    eigenvalues.push(axis_eig(0, k1) + axis_eig(1, k2));
                    wavenumbers.push([k1, k2]);
                }
            }
        }

        Ok(SpectralBasis {
            dim,
            modes_per_axis,
            axes,
            eigenvalues,
            wavenumbers,
        })
    }

    pub fn spec(&self) -> BasisSpec {
        BasisSpec {
            dim: self.dim,
            modes: self.modes_per_axis,
            lengths: self.lengths(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modes_per_axis(&self) -> usize {
        self.modes_per_axis
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.axes.iter().map(|a| a.length).collect()
    }

    /// Total number of retained modes (`M` or `M²`).
    pub fn mode_count(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Total number of physical grid nodes.
    pub fn grid_len(&self) -> usize {
        self.axes.iter().map(Axis::points).product()
    }

    pub fn points_per_axis(&self) -> usize {
        self.axes[0].points()
    }

    /// Eigenvalues of −Δ in lexicographic mode order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// First Dirichlet eigenvalue, the Poincaré constant.
    pub fn lambda1(&self) -> f64 {
        self.eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Wavenumbers `(k1, k2)` of mode `j`; `k2 = 0` in 1D.
    pub fn wavenumber(&self, j: usize) -> [usize; 2] {
        self.wavenumbers[j]
    }

    /// Position of the mode with the given wavenumbers, if retained.
    pub fn mode_index(&self, k: &[usize]) -> Option<usize> {
        let m = self.modes_per_axis;
        let valid = |x: usize| (1..=m).contains(&x);
        match (self.dim, k) {
            (1, [k1]) if valid(*k1) => Some(k1 - 1),
            (2, [k1, k2]) if valid(*k1) && valid(*k2) => Some((k1 - 1) * m + (k2 - 1)),
            _ => None,
        }
    }

    /// Physical coordinates of grid node `i` (row-major over axes).
    pub fn node(&self, i: usize) -> [f64; 2] {
        if self.dim == 1 {
            [self.axes[0].nodes[i], 0.0]
        } else {
            let n2 = self.axes[1].points();
            [self.axes[0].nodes[i / n2], self.axes[1].nodes[i % n2]]
        }
    }

    /// Volume element of the grid quadrature.
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.weight).product()
    }

    /// Integral over the domain of a field sampled on the grid.
    pub fn quadrature(&self, values: &[f64]) -> Result<f64> {
        check_len("quadrature grid", self.grid_len(), values.len())?;
        Ok(self.cell_volume() * values.iter().sum::<f64>())
    }

    pub fn to_physical(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        check_len("modal coefficients", self.mode_count(), coeffs.len())?;
        let mut out = vec![0.0; self.grid_len()];
        self.synthesize(coeffs, &mut out);
        Ok(out)
    }

    pub fn to_modal(&self, values: &[f64]) -> Result<Vec<f64>> {
        check_len("grid values", self.grid_len(), values.len())?;
        let mut out = vec![0.0; self.mode_count()];
        self.analyze(values, &mut out);
        Ok(out)
    }

    /// `to_physical` into a caller buffer; lengths must already match.
    pub(crate) fn synthesize(&self, coeffs: &[f64], out: &mut [f64]) {
        let m = self.modes_per_axis;
        match self.dim {
            1 => {
                let ax = &self.axes[0];
                for (n, o) in out.iter_mut().enumerate() {
                    let row = &ax.synth[n * m..(n + 1) * m];
                    *o = dot(row, coeffs);
                }
            }
            _ => {
                let (ax1, ax2) = (&self.axes[0], &self.axes[1]);
                let (n1, n2) = (ax1.points(), ax2.points());
                // tmp[k1][i2] = Σ_k2 c[k1][k2] φ_k2(y_i2)
                let mut tmp = vec![0.0; m * n2];
                for k1 in 0..m {
                    let c = &coeffs[k1 * m..(k1 + 1) * m];
                    for i2 in 0..n2 {
                        tmp[k1 * n2 + i2] = dot(&ax2.synth[i2 * m..(i2 + 1) * m], c);
                    }
                }
                for i1 in 0..n1 {
                    let row = &ax1.synth[i1 * m..(i1 + 1) * m];
                    let o = &mut out[i1 * n2..(i1 + 1) * n2];
                    o.iter_mut().for_each(|x| *x = 0.0);
                    for (k1, &s) in row.iter().enumerate() {
                        let t = &tmp[k1 * n2..(k1 + 1) * n2];
                        for (x, &y) in o.iter_mut().zip(t) {
                            *x += s * y;
                        }
                    }
                }
            }
        }
    }

    /// `to_modal` into a caller buffer; lengths must already match.
    pub(crate) fn analyze(&self, values: &[f64], out: &mut [f64]) {
        let m = self.modes_per_axis;
        match self.dim {
            1 => {
                let ax = &self.axes[0];
                out.iter_mut().for_each(|x| *x = 0.0);
                for (n, &v) in values.iter().enumerate() {
                    let row = &ax.synth[n * m..(n + 1) * m];
                    for (o, &s) in out.iter_mut().zip(row) {
                        *o += s * v;
                    }
                }
                out.iter_mut().for_each(|x| *x *= ax.weight);
            }
            _ => {
                let (ax1, ax2) = (&self.axes[0], &self.axes[1]);
                let (n1, n2) = (ax1.points(), ax2.points());
                // tmp[k1][i2] = Σ_i1 φ_k1(x_i1) g[i1][i2]
                let mut tmp = vec![0.0; m * n2];
                for i1 in 0..n1 {
                    let row = &ax1.synth[i1 * m..(i1 + 1) * m];
                    let g = &values[i1 * n2..(i1 + 1) * n2];
                    for (k1, &s) in row.iter().enumerate() {
                        let t = &mut tmp[k1 * n2..(k1 + 1) * n2];
                        for (x, &y) in t.iter_mut().zip(g) {
                            *x += s * y;
                        }
                    }
                }
                let w = ax1.weight * ax2.weight;
                for k1 in 0..m {
                    let t = &tmp[k1 * n2..(k1 + 1) * n2];
                    for k2 in 0..m {
                        let mut acc = 0.0;
                        for (i2, &y) in t.iter().enumerate() {
                            acc += ax2.synth[i2 * m + k2] * y;
                        }
                        out[k1 * m + k2] = w * acc;
                    }
                }
            }
        }
    }

    /// L² norm via Parseval.
    pub fn l2_norm(&self, coeffs: &[f64]) -> Result<f64> {
        check_len("modal coefficients", self.mode_count(), coeffs.len())?;
        Ok(dot(coeffs, coeffs).sqrt())
    }

    /// ‖∇u‖ via Parseval: `Σ λ_j a_j²`.
    pub fn grad_norm(&self, coeffs: &[f64]) -> Result<f64> {
        check_len("modal coefficients", self.mode_count(), coeffs.len())?;
        Ok(self.grad_norm_sq(coeffs).sqrt())
    }

    pub(crate) fn grad_norm_sq(&self, coeffs: &[f64]) -> f64 {
        self.eigenvalues
            .iter()
            .zip(coeffs)
            .map(|(l, a)| l * a * a)
            .sum()
    }

    /// L² inner product of two modal fields.
    pub fn inner(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_len("modal coefficients", self.mode_count(), x.len())?;
        check_len("modal coefficients", self.mode_count(), y.len())?;
        Ok(dot(x, y))
    }

    /// Samples `f(x, y)` at every grid node (`y = 0` in 1D).
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        (0..self.grid_len())
            .map(|i| {
                let [x, y] = self.node(i);
                f(x, y)
            })
            .collect()
    }
}

/// Grid points per axis for `modes` retained modes.
///
/// At least ⌈3M/2⌉; we use 2M so that quartic integrands (the potential of a
/// cubic source) and cubic products projected on retained modes are exact.
pub fn dealiased_points(modes: usize) -> usize {
    (2 * modes).max((3 * modes).div_ceil(2))
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}
