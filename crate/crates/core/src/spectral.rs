//! FFT machinery on the periodic grid.
//!
//! Transforms are applied axis by axis with `rustfft`. The forward transform
//! is unnormalized and the inverse divides by the number of grid points.
//! Odd-order derivative symbols vanish on the Nyquist index, and so does the
//! `z`-wavenumber `xi = kx - i ky` used by every operator here. That keeps the
//! discrete `∂∂̄` symbol exactly rank one, `-pi^2 xi xi^*`, so discrete
//! integration by parts holds to roundoff.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::field::GridSpec;

pub(crate) struct Spectral {
    grid: GridSpec,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// `xi_i = kx_i - i ky_i` per spectral index and complex direction.
    xi: Vec<[Complex64; 2]>,
}

type PlanCache = Mutex<HashMap<(usize, usize), Arc<Spectral>>>;

fn cache() -> &'static PlanCache {
    static CACHE: OnceLock<PlanCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

pub(crate) fn spectral(grid: GridSpec) -> Arc<Spectral> {
    let key = (grid.n(), grid.size());
    let mut map = cache().lock().expect("spectral cache poisoned");
    map.entry(key)
        .or_insert_with(|| Arc::new(Spectral::new(grid)))
        .clone()
}

/// First-derivative wavenumber for FFT index `m` on an axis of length `size`.
pub(crate) fn wavenumber(m: usize, size: usize) -> f64 {
    if 2 * m < size {
        m as f64
    } else if 2 * m == size {
        0.0
    } else {
        m as f64 - size as f64
    }
}

impl Spectral {
    fn new(grid: GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        let size = grid.size();
        let fwd = planner.plan_fft_forward(size);
        let inv = planner.plan_fft_inverse(size);
        let n = grid.n();
        let xi = (0..grid.len())
            .map(|idx| {
                let axes = grid.multi_index(idx);
                let mut out = [Complex64::new(0.0, 0.0); 2];
                for (i, o) in out.iter_mut().enumerate().take(n) {
                    let kx = wavenumber(axes[2 * i], size);
                    let ky = wavenumber(axes[2 * i + 1], size);
                    *o = Complex64::new(kx, -ky);
                }
                out
            })
            .collect();
        Self { grid, fwd, inv, xi }
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let size = self.grid.size();
        let axes = self.grid.axes();
        let total = data.len();
        let plan = if inverse { &self.inv } else { &self.fwd };
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        let mut lines = vec![Complex64::new(0.0, 0.0); total];
        for axis in 0..axes {
            let stride = size.pow((axes - 1 - axis) as u32);
            if stride == 1 {
                plan.process_with_scratch(data, &mut scratch);
                continue;
            }
            let block = stride * size;
            // Gather every line along `axis` into contiguous storage.
            let mut line = 0;
            for outer in (0..total).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    let dst = &mut lines[line * size..(line + 1) * size];
                    for (m, d) in dst.iter_mut().enumerate() {
                        *d = data[base + m * stride];
                    }
                    line += 1;
                }
            }
            plan.process_with_scratch(&mut lines, &mut scratch);
            let mut line = 0;
            for outer in (0..total).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    let src = &lines[line * size..(line + 1) * size];
                    for (m, s) in src.iter().enumerate() {
                        data[base + m * stride] = *s;
                    }
                    line += 1;
                }
            }
        }
        if inverse {
            let scale = 1.0 / total as f64;
            for v in data.iter_mut() {
                *v *= scale;
            }
        }
    }

    pub(crate) fn forward_real(&self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, false);
        data
    }

    pub(crate) fn forward_complex(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut data = values.to_vec();
        self.transform(&mut data, false);
        data
    }

    pub(crate) fn inverse(&self, mut spec: Vec<Complex64>) -> Vec<Complex64> {
        self.transform(&mut spec, true);
        spec
    }

    pub(crate) fn inverse_real(&self, spec: Vec<Complex64>) -> Vec<f64> {
        self.inverse(spec).into_iter().map(|c| c.re).collect()
    }

    /// Symbol of `∂_i ∂_{\bar j}`: `-pi^2 xi_i conj(xi_j)`.
    #[inline]
    pub(crate) fn ddbar_symbol(&self, idx: usize, i: usize, j: usize) -> Complex64 {
        let xi = &self.xi[idx];
        -PI * PI * xi[i] * xi[j].conj()
    }

    /// Symbol of `∂_i = (∂_x - i ∂_y) / 2`: `i pi xi_i`.
    #[inline]
    pub(crate) fn d_symbol(&self, idx: usize, i: usize) -> Complex64 {
        Complex64::new(0.0, PI) * self.xi[idx][i]
    }

    /// Largest magnitude of the `∂∂̄` symbol trace over the grid,
    /// `pi^2 max |xi|^2`.
    pub(crate) fn max_ddbar(&self) -> f64 {
        self.xi
            .iter()
            .map(|x| PI * PI * (0..self.grid.n()).map(|i| x[i].norm_sqr()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_identity() {
        let grid = GridSpec::new(2, 8).unwrap();
        let sp = spectral(grid);
        let vals: Vec<f64> = (0..grid.len())
            .map(|i| ((i * 37) % 11) as f64 - 5.0)
            .collect();
        let back = sp.inverse_real(sp.forward_real(&vals));
        for (a, b) in vals.iter().zip(back.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn nyquist_wavenumber_is_zeroed() {
        assert_eq!(wavenumber(4, 8), 0.0);
        assert_eq!(wavenumber(3, 8), 3.0);
        assert_eq!(wavenumber(5, 8), -3.0);
    }
}
