//! Band-limited random potentials.
//!
//! Fourier coefficients are independent standard Gaussians damped by
//! `(1 + |k|^2)^{-2}` and truncated to `|k_a| <= N/4` (or a chosen cutoff) on
//! every real axis, with
//! the mean mode removed. The field is then scaled so that the largest
//! eigenvalue magnitude of its complex Hessian over the grid equals the
//! requested amplitude. An amplitude below 1 therefore always yields a
//! Kähler potential.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::field::{complex_hessian, GridSpec, ScalarField};
use crate::spectral::{spectral, wavenumber};

/// Deterministic generator of random potentials keyed by a `u64` seed.
pub struct PotentialSampler {
    rng: ChaCha8Rng,
    grid: GridSpec,
    cutoff: usize,
}

impl PotentialSampler {
    pub fn new(grid: GridSpec, seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            grid,
            cutoff: grid.size() / 4,
        }
    }

    /// Largest wavenumber per real axis, clamped below the Nyquist index.
    pub fn with_cutoff(mut self, cutoff: usize) -> Self {
        self.cutoff = cutoff.min(self.grid.size() / 2 - 1);
        self
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    /// Mean-zero band-limited field with unit-free shape (not normalized).
    pub fn raw(&mut self) -> ScalarField {
        let g = self.grid;
        let cutoff = self.cutoff as f64;
        let mut spec = vec![Complex64::new(0.0, 0.0); g.len()];
        for (idx, s) in spec.iter_mut().enumerate() {
            let m = g.multi_index(idx);
            let mut k2 = 0.0;
            let mut inside = true;
            for &ma in m.iter().take(g.axes()) {
                let k = wavenumber(ma, g.size());
                if k.abs() > cutoff || 2 * ma == g.size() {
                    inside = false;
                }
                k2 += k * k;
            }
            let re: f64 = StandardNormal.sample(&mut self.rng);
            let im: f64 = StandardNormal.sample(&mut self.rng);
            if inside && k2 > 0.0 {
                *s = Complex64::new(re, im) / (1.0 + k2).powi(2);
            }
        }
        let values = spectral(g).inverse_real(spec);
        ScalarField::from_vec(g, values)
    }

    /// Random potential whose complex Hessian has spectral radius `amplitude`.
    pub fn potential(&mut self, amplitude: f64) -> ScalarField {
        let raw = self.raw();
        let radius = complex_hessian(&raw)
            .matrices()
            .iter()
            .map(|m| m.min_eig().abs().max(m.max_eig().abs()))
            .fold(0.0, f64::max);
        if radius == 0.0 {
            return raw;
        }
        raw.scale(amplitude / radius)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        use rand::Rng;
        self.rng.gen_range(lo..hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_for_seed() {
        let g = GridSpec::new(1, 16).unwrap();
        let a = PotentialSampler::new(g, 7).potential(0.3);
        let b = PotentialSampler::new(g, 7).potential(0.3);
        let c = PotentialSampler::new(g, 8).potential(0.3);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn amplitude_controls_hessian_radius() {
        let g = GridSpec::new(2, 8).unwrap();
        let f = PotentialSampler::new(g, 1).potential(0.4);
        let h = complex_hessian(&f);
        let radius = h
            .matrices()
            .iter()
            .map(|m| m.min_eig().abs().max(m.max_eig().abs()))
            .fold(0.0, f64::max);
        assert!((radius - 0.4).abs() < 1e-12);
        assert!(f.mean().abs() < 1e-14);
    }
}
