//! Small Hermitian matrices (complex dimension 1 or 2).
//!
//! Every per-point matrix in the lab is at most 2x2, so the type is a fixed
//! array with the active dimension carried alongside. Entries are stored
//! row-major: `a[i * n + j]` is the `(i, j)` entry.

use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Herm {
    n: usize,
    a: [Complex64; 4],
}

impl Herm {
    pub fn zeros(n: usize) -> Self {
        assert!(n == 1 || n == 2, "complex dimension must be 1 or 2");
        Self { n, a: [ZERO; 4] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = ONE;
        }
        m
    }

    pub fn diag(entries: &[f64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &d) in entries.iter().enumerate() {
            m.a[i * entries.len() + i] = Complex64::new(d, 0.0);
        }
        m
    }

    /// Builds from row-major entries. The input is Hermitized.
    pub fn from_row_major(n: usize, entries: &[Complex64]) -> Self {
        assert_eq!(entries.len(), n * n);
        let mut m = Self::zeros(n);
        m.a[..n * n].copy_from_slice(entries);
        m.hermitize()
    }

    /// Rank-one matrix `v w^*`, Hermitized: `(v w^* + w v^*) / 2`.
    pub fn outer_sym(v: &[Complex64], w: &[Complex64]) -> Self {
        let n = v.len();
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.a[i * n + j] = 0.5 * (v[i] * w[j].conj() + w[i] * v[j].conj());
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.a[i * self.n + j] = v;
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.a[..self.n * self.n]
    }

    pub fn hermitize(mut self) -> Self {
        let n = self.n;
        for i in 0..n {
            let d = self.a[i * n + i].re;
            self.a[i * n + i] = Complex64::new(d, 0.0);
            for j in (i + 1)..n {
                let avg = 0.5 * (self.a[i * n + j] + self.a[j * n + i].conj());
                self.a[i * n + j] = avg;
                self.a[j * n + i] = avg.conj();
            }
        }
        self
    }

    /// Largest entrywise deviation from Hermitian symmetry.
    pub fn asymmetry(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i).re).sum()
    }

    pub fn det(&self) -> f64 {
        match self.n {
            1 => self.a[0].re,
            _ => self.a[0].re * self.a[3].re - self.a[1].norm_sqr(),
        }
    }

    /// Cofactor (adjugate) matrix, so that `A * adj(A) = det(A) I`.
    pub fn adjugate(&self) -> Self {
        match self.n {
            1 => Self::identity(1),
            _ => {
                let mut m = Self::zeros(2);
                m.a[0] = self.a[3];
                m.a[3] = self.a[0];
                m.a[1] = -self.a[1];
                m.a[2] = -self.a[2];
                m
            }
        }
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(self.adjugate().scale(1.0 / d))
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        match self.n {
            1 => [self.a[0].re, self.a[0].re],
            _ => {
                let p = 0.5 * (self.a[0].re + self.a[3].re);
                let q = 0.5 * (self.a[0].re - self.a[3].re);
                let r = (q * q + self.a[1].norm_sqr()).sqrt();
                [p - r, p + r]
            }
        }
    }

    pub fn min_eig(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn max_eig(&self) -> f64 {
        match self.n {
            1 => self.a[0].re,
            _ => self.eigenvalues()[1],
        }
    }

    pub fn scale(mut self, s: f64) -> Self {
        for v in self.a.iter_mut() {
            *v *= s;
        }
        self
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        let mut m = *self;
        for (x, y) in m.a.iter_mut().zip(other.a.iter()) {
            *x += *y;
        }
        m
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// Plain matrix product (not Hermitian in general).
    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut s = ZERO;
                for k in 0..n {
                    s += self.get(i, k) * other.get(k, j);
                }
                m.a[i * n + j] = s;
            }
        }
        m
    }

    /// `tr(A B)`; real whenever both factors are Hermitian.
    pub fn trace_product(&self, other: &Self) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            for k in 0..n {
                s += (self.get(i, k) * other.get(k, i)).re;
            }
        }
        s
    }

    /// `A B A` for Hermitian `A`, `B`; the result is Hermitian.
    pub fn sandwich(&self, inner: &Self) -> Self {
        self.matmul(inner).matmul(self).hermitize()
    }

    /// Quadratic form `v^* A w`.
    #[allow(clippy::needless_range_loop)]
    pub fn form(&self, v: &[Complex64], w: &[Complex64]) -> Complex64 {
        let n = self.n;
        let mut s = ZERO;
        for i in 0..n {
            for j in 0..n {
                s += v[i].conj() * self.get(i, j) * w[j];
            }
        }
        s
    }

    /// `A v`.
    #[allow(clippy::needless_range_loop)]
    pub fn apply(&self, v: &[Complex64]) -> [Complex64; 2] {
        let n = self.n;
        let mut out = [ZERO; 2];
        for i in 0..n {
            for j in 0..n {
                out[i] += self.get(i, j) * v[j];
            }
        }
        out
    }

    /// Mixed discriminant used for top-degree wedge densities.
    ///
    /// For `n = 2` this is `tr A tr B - tr(AB)`, the coefficient of
    /// `alpha ^ beta` against `omega^2 / 2!`. For `n = 1` it is the single entry
    /// of `A`.
    pub fn mixed_discriminant(&self, other: &Self) -> f64 {
        match self.n {
            1 => self.a[0].re,
            _ => self.trace() * other.trace() - self.trace_product(other),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.entries().iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eigenvalues_match_det_and_trace() {
        let m = Herm::from_row_major(2, &[c(2.0, 0.0), c(0.3, -0.4), c(0.3, 0.4), c(-1.0, 0.0)]);
        let [l0, l1] = m.eigenvalues();
        assert!((l0 + l1 - m.trace()).abs() < 1e-14);
        assert!((l0 * l1 - m.det()).abs() < 1e-14);
        assert!(l0 <= l1);
    }

    #[test]
    fn inverse_round_trip() {
        let m = Herm::from_row_major(2, &[c(2.0, 0.0), c(0.3, -0.4), c(0.3, 0.4), c(1.5, 0.0)]);
        let inv = m.inverse().unwrap();
        let id = m.matmul(&inv);
        assert!(id.sub(&Herm::identity(2)).max_abs() < 1e-14);
    }

    #[test]
    fn mixed_discriminant_of_identities() {
        let id = Herm::identity(2);
        assert_eq!(id.mixed_discriminant(&id), 2.0);
        let a = Herm::from_row_major(2, &[c(0.7, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(-0.3, 0.0)]);
        assert!((a.mixed_discriminant(&id) - a.trace()).abs() < 1e-15);
        // MD(A, A) = 2 det A for 2x2.
        assert!((a.mixed_discriminant(&a) - 2.0 * a.det()).abs() < 1e-15);
    }

    #[test]
    fn singular_matrix_has_no_inverse() {
        assert!(Herm::zeros(2).inverse().is_none());
    }
}
