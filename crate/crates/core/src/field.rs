//! Periodic fields on the flat torus `C^n / (Z + iZ)^n`, `n ∈ {1, 2}`.
//!
//! The torus is sampled on a uniform grid with `N` points on each of the `2n`
//! real axes, ordered `[x_1, y_1, x_2, y_2]` with the last axis fastest
//! (row-major). The reference metric is the flat identity, so the reference
//! volume is 1 and every integral against `omega^n` is a grid mean.
//!
//! Top-degree forms are handled as scalar densities. [`mixed_top`] returns the
//! coefficient against `omega^n / n!`; [`wedge_density`] divides by `n!` to give
//! the density relative to `omega^n`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::herm::Herm;
use crate::spectral::spectral;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    n: usize,
    #[serde(rename = "N")]
    size: usize,
}

impl GridSpec {
    pub fn new(n: usize, size: usize) -> Result<Self> {
        if n != 1 && n != 2 {
            return Err(LabError::InvalidGrid(format!(
                "complex dimension {n} not in {{1, 2}}"
            )));
        }
        if size < 8 || !size.is_power_of_two() {
            return Err(LabError::InvalidGrid(format!(
                "samples per axis {size} must be a power of two >= 8"
            )));
        }
        Ok(Self { n, size })
    }

    /// Complex dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Samples per real axis.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn axes(&self) -> usize {
        2 * self.n
    }

    pub fn len(&self) -> usize {
        self.size.pow(self.axes() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.size as f64
    }

    /// `n!`, the ratio between `omega^n` and the unit top form.
    pub fn factorial(&self) -> f64 {
        if self.n == 2 {
            2.0
        } else {
            1.0
        }
    }

    pub fn multi_index(&self, mut idx: usize) -> [usize; 4] {
        let mut out = [0usize; 4];
        for axis in (0..self.axes()).rev() {
            out[axis] = idx % self.size;
            idx /= self.size;
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .take(self.axes())
            .fold(0, |acc, &m| acc * self.size + (m % self.size))
    }

    /// Real coordinates `[x_1, y_1, x_2, y_2]` of a grid point in `[0, 1)`.
    pub fn coords(&self, idx: usize) -> [f64; 4] {
        let m = self.multi_index(idx);
        let h = self.spacing();
        [
            m[0] as f64 * h,
            m[1] as f64 * h,
            m[2] as f64 * h,
            m[3] as f64 * h,
        ]
    }

    fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self != other {
            return Err(LabError::GridMismatch(format!(
                "(n={}, N={}) vs (n={}, N={})",
                self.n, self.size, other.n, other.size
            )));
        }
        Ok(())
    }
}

/// Real periodic function sampled on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(LabError::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(LabError::Format(format!(
                "non-finite value at grid point {i}"
            )));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_vec(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    /// Samples `f(x_1, y_1, x_2, y_2)` at the grid points.
    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 4]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.coords(i))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        let values = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self {
            grid: self.grid,
            values,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn shift(&self, c: f64) -> Self {
        self.map(|v| v + c)
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + s * b)
    }

    pub fn mean(&self) -> f64 {
        integrate(self)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn argmin(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v < self.values[best] {
                best = i;
            }
        }
        best
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn osc(&self) -> f64 {
        self.max() - self.min()
    }

    /// Root mean square.
    pub fn l2_norm(&self) -> f64 {
        self.mul(self).mean().sqrt()
    }

    /// Subtracts the grid mean.
    pub fn centered(&self) -> Self {
        let m = self.mean();
        self.shift(-m)
    }

    /// Composes with a lattice translation by whole grid steps.
    pub fn translate(&self, steps: &[isize]) -> Self {
        let g = self.grid;
        let n = g.size() as isize;
        let mut out = vec![0.0; g.len()];
        for (idx, o) in out.iter_mut().enumerate() {
            let m = g.multi_index(idx);
            let mut src = [0usize; 4];
            for a in 0..g.axes() {
                let s = steps.get(a).copied().unwrap_or(0);
                src[a] = (m[a] as isize + s).rem_euclid(n) as usize;
            }
            *o = self.values[g.flat_index(&src)];
        }
        Self {
            grid: g,
            values: out,
        }
    }

    /// `∂_i f` for each complex direction.
    pub fn gradient(&self) -> Vec<[Complex64; 2]> {
        let sp = spectral(self.grid);
        let hat = sp.forward_real(&self.values);
        let n = self.grid.n();
        let mut out = vec![[Complex64::new(0.0, 0.0); 2]; self.grid.len()];
        for i in 0..n {
            let spec: Vec<Complex64> = hat
                .iter()
                .enumerate()
                .map(|(k, &c)| c * sp.d_symbol(k, i))
                .collect();
            for (o, v) in out.iter_mut().zip(sp.inverse(spec)) {
                o[i] = v;
            }
        }
        out
    }

    /// Removes every Fourier mode with a Nyquist index on some axis. Those
    /// modes are invisible to all derivative operators.
    ///
    /// Along each axis the Nyquist component of a line is its alternating
    /// mean, so the projection needs no transform.
    pub fn without_nyquist(&self) -> Self {
        let g = self.grid;
        let size = g.size();
        let axes = g.axes();
        let mut values = self.values.clone();
        let total = values.len();
        let sign = |m: usize| if m.is_multiple_of(2) { 1.0 } else { -1.0 };
        for axis in 0..axes {
            let stride = size.pow((axes - 1 - axis) as u32);
            for outer in (0..total).step_by(stride * size) {
                for base in outer..outer + stride {
                    let alt = (0..size)
                        .map(|m| sign(m) * values[base + m * stride])
                        .sum::<f64>()
                        / size as f64;
                    for m in 0..size {
                        values[base + m * stride] -= sign(m) * alt;
                    }
                }
            }
        }
        Self { grid: g, values }
    }

    /// Band-limited interpolation onto a grid `factor` times finer per axis.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        let g = self.grid;
        let fine = GridSpec::new(g.n(), g.size() * factor)?;
        let coarse_sp = spectral(g);
        let fine_sp = spectral(fine);
        let hat = coarse_sp.forward_real(&self.values);
        let mut spec = vec![Complex64::new(0.0, 0.0); fine.len()];
        let nc = g.size();
        let nf = fine.size();
        for (idx, &c) in hat.iter().enumerate() {
            let m = g.multi_index(idx);
            let mut fm = [0usize; 4];
            for a in 0..g.axes() {
                fm[a] = if 2 * m[a] <= nc {
                    m[a]
                } else {
                    nf - (nc - m[a])
                };
            }
            spec[fine.flat_index(&fm)] = c * (fine.len() as f64 / g.len() as f64);
        }
        Ok(Self {
            grid: fine,
            values: fine_sp.inverse_real(spec),
        })
    }
    /// Spectral truncation onto a coarser grid, dropping coarse Nyquist
    /// modes. Adjoint of [`ScalarField::refine`] under the grid-mean pairing
    /// on Nyquist-free fields.
    pub fn truncate(&self, coarse: GridSpec) -> Result<Self> {
        let g = self.grid;
        if coarse.n() != g.n()
            || coarse.size() > g.size()
            || !g.size().is_multiple_of(coarse.size())
        {
            return Err(LabError::GridMismatch(format!(
                "cannot truncate a size {} grid to size {}",
                g.size(),
                coarse.size()
            )));
        }
        let fine_sp = spectral(g);
        let coarse_sp = spectral(coarse);
        let hat = fine_sp.forward_real(&self.values);
        let nc = coarse.size();
        let nf = g.size();
        let mut spec = vec![Complex64::new(0.0, 0.0); coarse.len()];
        for (idx, s) in spec.iter_mut().enumerate() {
            let m = coarse.multi_index(idx);
            if m.iter().take(coarse.axes()).any(|&a| 2 * a == nc) {
                continue;
            }
            let mut fm = [0usize; 4];
            for a in 0..coarse.axes() {
                fm[a] = if 2 * m[a] < nc {
                    m[a]
                } else {
                    nf - (nc - m[a])
                };
            }
            *s = hat[g.flat_index(&fm)] * (coarse.len() as f64 / g.len() as f64);
        }
        Ok(Self {
            grid: coarse,
            values: coarse_sp.inverse_real(spec),
        })
    }
}

/// Per-point `n x n` Hermitian matrix field.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianField {
    grid: GridSpec,
    data: Vec<Herm>,
}

impl HermitianField {
    pub fn new(grid: GridSpec, data: Vec<Herm>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(LabError::GridMismatch(format!(
                "{} matrices for a grid of {} points",
                data.len(),
                grid.len()
            )));
        }
        if data.iter().any(|m| m.dim() != grid.n()) {
            return Err(LabError::GridMismatch(
                "matrix dimension differs from n".into(),
            ));
        }
        Ok(Self { grid, data })
    }

    pub(crate) fn from_vec(grid: GridSpec, data: Vec<Herm>) -> Self {
        Self { grid, data }
    }

    pub fn constant(grid: GridSpec, m: Herm) -> Self {
        Self {
            grid,
            data: vec![m; grid.len()],
        }
    }

    pub fn identity(grid: GridSpec) -> Self {
        Self::constant(grid, Herm::identity(grid.n()))
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn matrices(&self) -> &[Herm] {
        &self.data
    }

    pub fn at(&self, idx: usize) -> &Herm {
        &self.data[idx]
    }

    pub fn map(&self, f: impl Fn(&Herm) -> Herm) -> Self {
        Self {
            grid: self.grid,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn map_scalar(&self, f: impl Fn(&Herm) -> f64) -> ScalarField {
        ScalarField::from_vec(self.grid, self.data.iter().map(f).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(&Herm, &Herm) -> Herm) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        let data = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| f(a, b))
            .collect();
        Self {
            grid: self.grid,
            data,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a.add(b))
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|a| a.scale(s))
    }

    /// Entry `(i, j)` as a complex field.
    pub fn entry(&self, i: usize, j: usize) -> Vec<Complex64> {
        self.data.iter().map(|m| m.get(i, j)).collect()
    }

    pub fn max_asymmetry(&self) -> f64 {
        self.data.iter().map(Herm::asymmetry).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(Herm::max_abs).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> ScalarField {
        self.map_scalar(Herm::trace)
    }

    pub fn min_eigenvalue(&self) -> ScalarField {
        self.map_scalar(Herm::min_eig)
    }

    /// `Σ_{ij} ∂_i ∂_{\bar j} M_{ji}`, the formal adjoint of
    /// `h ↦ tr(M · ∂∂̄h)` under the grid mean.
    pub fn ddbar_adjoint(&self) -> ScalarField {
        let g = self.grid;
        let sp = spectral(g);
        let n = g.n();
        let mut acc = vec![Complex64::new(0.0, 0.0); g.len()];
        for i in 0..n {
            for j in 0..n {
                let hat = sp.forward_complex(&self.entry(j, i));
                for (k, (a, h)) in acc.iter_mut().zip(hat.iter()).enumerate() {
                    *a += sp.ddbar_symbol(k, i, j) * h;
                }
            }
        }
        ScalarField::from_vec(g, sp.inverse_real(acc))
    }
}

/// `f_{i\bar j} = ∂²f / ∂z^i ∂\bar z^j`, computed spectrally.
pub fn complex_hessian(f: &ScalarField) -> HermitianField {
    let g = f.grid();
    let sp = spectral(g);
    let hat = sp.forward_real(f.values());
    let n = g.n();
    let mut data = vec![Herm::zeros(n); g.len()];
    if n == 1 {
        let spec = hat
            .iter()
            .enumerate()
            .map(|(k, &c)| c * sp.ddbar_symbol(k, 0, 0))
            .collect();
        for (m, v) in data.iter_mut().zip(sp.inverse_real(spec)) {
            m.set(0, 0, Complex64::new(v, 0.0));
        }
    } else {
        // Both diagonal entries are real, so one transform carries them as
        // the real and imaginary parts.
        let i = Complex64::new(0.0, 1.0);
        let diag = hat
            .iter()
            .enumerate()
            .map(|(k, &c)| c * (sp.ddbar_symbol(k, 0, 0) + i * sp.ddbar_symbol(k, 1, 1)))
            .collect();
        let off = hat
            .iter()
            .enumerate()
            .map(|(k, &c)| c * sp.ddbar_symbol(k, 0, 1))
            .collect();
        for ((m, d), v) in data.iter_mut().zip(sp.inverse(diag)).zip(sp.inverse(off)) {
            m.set(0, 0, Complex64::new(d.re, 0.0));
            m.set(1, 1, Complex64::new(d.im, 0.0));
            m.set(0, 1, v);
            m.set(1, 0, v.conj());
        }
    }
    HermitianField::from_vec(g, data)
}

/// Integral against the reference volume form (total volume 1).
pub fn integrate(density: &ScalarField) -> f64 {
    // Pairwise summation keeps the roundoff of large grids at the 1e-16 level.
    fn sum(v: &[f64]) -> f64 {
        if v.len() <= 64 {
            v.iter().sum()
        } else {
            let (a, b) = v.split_at(v.len() / 2);
            sum(a) + sum(b)
        }
    }
    sum(density.values()) / density.values().len() as f64
}

/// Pointwise mixed discriminant: the coefficient of `alpha_A ^ beta_B` against
/// `omega^n / n!`. For `n = 1` the second argument is ignored.
pub fn mixed_top(a: &HermitianField, b: &HermitianField) -> Result<ScalarField> {
    a.grid().check_same(&b.grid())?;
    Ok(ScalarField::from_vec(
        a.grid(),
        a.matrices()
            .iter()
            .zip(b.matrices())
            .map(|(x, y)| x.mixed_discriminant(y))
            .collect(),
    ))
}

/// Density of a top-degree wedge relative to `omega^n` (`mixed_top / n!`).
pub fn wedge_density(a: &HermitianField, b: &HermitianField) -> Result<ScalarField> {
    let f = a.grid().factorial();
    Ok(mixed_top(a, b)?.scale(1.0 / f))
}

/// Rank-one field `(∂f ⊗ conj(∂g) + ∂g ⊗ conj(∂f)) / 2`.
pub fn gradient_outer(f: &ScalarField, g: &ScalarField) -> Result<HermitianField> {
    f.grid().check_same(&g.grid())?;
    let n = f.grid().n();
    let df = f.gradient();
    let dg = if f == g { df.clone() } else { g.gradient() };
    let data = df
        .iter()
        .zip(dg.iter())
        .map(|(a, b)| Herm::outer_sym(&a[..n], &b[..n]))
        .collect();
    Ok(HermitianField::from_vec(f.grid(), data))
}

/// Density of `√-1 ∂f ∧ ∂̄g ∧ β_B` in the [`mixed_top`] normalization.
pub fn gradient_pairing(
    f: &ScalarField,
    g: &ScalarField,
    b: &HermitianField,
) -> Result<ScalarField> {
    f.grid().check_same(&b.grid())?;
    mixed_top(&gradient_outer(f, g)?, b)
}
