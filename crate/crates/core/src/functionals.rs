//! Energy functionals on the space of potentials and their variations.
//!
//! All integrals are grid means (total volume 1) and every top-degree form
//! is a density against `omega^n`. With `G = I + phi_{i\bar j}`, `D = det G`
//! and the rank-one field `P = ∂phi ⊗ conj(∂phi)`:
//!
//! * `I = mean(phi (1 - D))`, equivalently the gradient-pairing sum
//! * `J`, `D_func = mean(phi) - J`, `j(chi, phi)` via mixed discriminants
//! * `frakJ = c_0 D_func + j`, `frakJ_beta = frakJ + beta J`
//! * `E_beta = mean(H^2 D)` with the residual `H` of [`h_tilde`]

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::field::{
    complex_hessian, gradient_outer, integrate, mixed_top, HermitianField, ScalarField,
};
use crate::geometry::{c_beta, h_tilde, trace_chi, KahlerState, TwistData};
use crate::herm::Herm;

fn pairing_field(state: &KahlerState) -> HermitianField {
    gradient_outer(state.phi(), state.phi()).expect("same grid")
}

/// Aubin's `I` from the volume-difference formula.
pub fn aubin_i(state: &KahlerState) -> f64 {
    integrate(&state.phi().zip_map(state.det(), |p, d| p * (1.0 - d)))
}

/// Aubin's `I` from the gradient-pairing sum
/// `Σ_{i<n} ∫ √-1 ∂phi ∧ ∂̄phi ∧ omega^i ∧ omega_phi^{n-1-i}`.
pub fn aubin_i_pairing(state: &KahlerState) -> f64 {
    let p = pairing_field(state);
    match state.grid().n() {
        1 => integrate(&p.trace()),
        _ => {
            let with_g = mixed_top(&p, state.metric()).expect("same grid");
            integrate(&with_g.zip_map(&p.trace(), |a, b| 0.5 * (a + b)))
        }
    }
}

/// Aubin's `J`.
pub fn aubin_j(state: &KahlerState) -> f64 {
    match state.grid().n() {
        // J = I / 2 when n = 1; the volume form of I needs no derivatives.
        1 => 0.5 * aubin_i(state),
        _ => {
            let p = pairing_field(state);
            let with_g = mixed_top(&p, state.metric()).expect("same grid");
            integrate(&with_g.zip_map(&p.trace(), |a, b| (a / 3.0 + 2.0 * b / 3.0) / 2.0))
        }
    }
}

/// `D = mean(phi) - J`.
pub fn d_functional(state: &KahlerState) -> f64 {
    integrate(state.phi()) - aubin_j(state)
}

/// `j(chi, phi) = -Σ_i C(n, i+1) ∫ phi chi ∧ omega^{n-1-i} ∧ (√-1∂∂̄phi)^i`.
pub fn j_chi(state: &KahlerState, twist: &TwistData) -> f64 {
    let phi = state.phi();
    let chi = twist.chi();
    let density = match state.grid().n() {
        1 => chi.map_scalar(|m| m.get(0, 0).re),
        _ => {
            let md = mixed_top(chi, state.hessian()).expect("same grid");
            chi.trace().zip_map(&md, |t, m| t + 0.5 * m)
        }
    };
    -integrate(&phi.mul(&density))
}

/// Entropy `mean(D log D)`.
pub fn entropy(state: &KahlerState) -> f64 {
    integrate(&state.det().map(|d| d * d.ln()))
}

/// `frakJ = c_0 D_func + j(chi, phi)` with `c_0 = tr chi_0`.
pub fn frak_j(state: &KahlerState, twist: &TwistData) -> f64 {
    twist.c0() * d_functional(state) + j_chi(state, twist)
}

pub fn frak_j_beta(state: &KahlerState, twist: &TwistData) -> f64 {
    frak_j(state, twist) + twist.beta() * aubin_j(state)
}

/// `E_beta = mean(H^2 D)`.
pub fn e_beta(state: &KahlerState, twist: &TwistData) -> f64 {
    integrate(&h_tilde(state, twist).map(|h| h * h).mul(state.det()))
}

/// Twisted K-energy `entropy + c_0 D_func + j(chi, phi)`.
pub fn k_twisted(state: &KahlerState, twist: &TwistData) -> f64 {
    entropy(state) + frak_j(state, twist)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FunctionalReport {
    #[serde(rename = "I")]
    pub i: f64,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub j_chi: f64,
    pub entropy: f64,
    pub k_twisted: f64,
    #[serde(rename = "frakJ")]
    pub frak_j: f64,
    #[serde(rename = "frakJ_beta")]
    pub frak_j_beta: f64,
    #[serde(rename = "E_beta")]
    pub e_beta: f64,
    pub c_beta: f64,
    /// Residuals of the built-in identities (zero up to roundoff when they hold).
    pub consistency: BTreeMap<String, f64>,
}

impl FunctionalReport {
    pub fn evaluate(state: &KahlerState, twist: &TwistData) -> Self {
        let n = state.grid().n() as f64;
        let i = aubin_i(state);
        let i_pair = aubin_i_pairing(state);
        let j = aubin_j(state);
        let d = integrate(state.phi()) - j;
        let jc = j_chi(state, twist);
        let ent = entropy(state);
        let fj = twist.c0() * d + jc;
        let fjb = fj + twist.beta() * j;
        let k = ent + fj;
        let mut consistency = BTreeMap::new();
        consistency.insert("I_dual".to_string(), i - i_pair);
        consistency.insert("k_split".to_string(), k - (ent - twist.beta() * j + fjb));
        consistency.insert("IJ_lower".to_string(), (i / (n + 1.0) - j).max(0.0));
        consistency.insert("IJ_upper".to_string(), (j - n * i / (n + 1.0)).max(0.0));
        Self {
            i,
            j,
            d,
            j_chi: jc,
            entropy: ent,
            k_twisted: k,
            frak_j: fj,
            frak_j_beta: fjb,
            e_beta: e_beta(state, twist),
            c_beta: c_beta(twist),
            consistency,
        }
    }

    pub const CSV_HEADER: &'static str =
        "I,J,D,j_chi,entropy,k_twisted,frakJ,frakJ_beta,E_beta,c_beta";

    pub fn csv_row(&self) -> String {
        [
            self.i,
            self.j,
            self.d,
            self.j_chi,
            self.entropy,
            self.k_twisted,
            self.frak_j,
            self.frak_j_beta,
            self.e_beta,
            self.c_beta,
        ]
        .iter()
        .map(|v| format!("{v:e}"))
        .collect::<Vec<_>>()
        .join(",")
    }
}

/// `δ frakJ_beta(u) = -mean(u H D)`.
pub fn first_variation_jbeta(state: &KahlerState, twist: &TwistData, u: &ScalarField) -> f64 {
    let h = h_tilde(state, twist);
    -integrate(&u.mul(&h).mul(state.det()))
}

/// Second derivative of `frakJ_beta` along `phi + t u + t^2 a / 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SecondVariation {
    /// The two-term expression without the `beta mean(a)` contribution.
    pub displayed: f64,
    /// `displayed + beta mean(a)`, the exact derivative.
    pub full: f64,
}

/// `w = G^{-1} ∂u` at every point.
fn raised_gradient(state: &KahlerState, u: &ScalarField) -> Vec<[Complex64; 2]> {
    let n = state.grid().n();
    u.gradient()
        .iter()
        .zip(state.inverse().matrices())
        .map(|(du, ginv)| ginv.apply(&du[..n]))
        .collect()
}

/// `|∂u|^2_phi = ∂u^* G^{-1} ∂u`.
pub fn gradient_norm_sq(state: &KahlerState, u: &ScalarField) -> ScalarField {
    let n = state.grid().n();
    let data = u
        .gradient()
        .iter()
        .zip(state.inverse().matrices())
        .map(|(du, ginv)| ginv.form(&du[..n], &du[..n]).re)
        .collect();
    ScalarField::from_vec(state.grid(), data)
}

pub fn second_variation_jbeta(
    state: &KahlerState,
    twist: &TwistData,
    u: &ScalarField,
    a: &ScalarField,
) -> SecondVariation {
    let n = state.grid().n();
    let c = c_beta(twist);
    let tr = trace_chi(state, twist);
    let grad2 = gradient_norm_sq(state, u);
    let w = raised_gradient(state, u);
    let chi_w: Vec<f64> = w
        .iter()
        .zip(twist.chi().matrices())
        .map(|(w, x)| x.form(&w[..n], &w[..n]).re)
        .collect();
    let chi_w = ScalarField::from_vec(state.grid(), chi_w);
    let first = a.sub(&grad2).mul(&tr.map(|t| c - t)).mul(state.det());
    let second = chi_w.mul(state.det());
    let displayed = integrate(&first) - integrate(&second);
    SecondVariation {
        displayed,
        full: displayed + twist.beta() * integrate(a),
    }
}

/// `δ E_beta(u) = 2 mean(H^{\bar j} u^i chi_{i\bar j} D) - 2 beta mean(H_i u^i)`.
///
/// This form is reached by integrating by parts with the product rule, which
/// holds on the grid only up to aliasing; [`first_variation_ebeta_direct`] is
/// the exact derivative of the discrete functional.
pub fn first_variation_ebeta(state: &KahlerState, twist: &TwistData, u: &ScalarField) -> f64 {
    let n = state.grid().n();
    let h = h_tilde(state, twist);
    let dh = h.gradient();
    let w = raised_gradient(state, u);
    let hw = raised_gradient(state, &h);
    let beta = twist.beta();
    let data = w
        .iter()
        .zip(&hw)
        .zip(&dh)
        .zip(twist.chi().matrices())
        .zip(state.det().values())
        .map(|((((w, hw), dh), x), &d)| {
            let chi_term = x.form(&w[..n], &hw[..n]).re * d;
            let beta_term: f64 = (0..n).map(|i| (w[i].conj() * dh[i]).re).sum();
            2.0 * chi_term - 2.0 * beta * beta_term
        })
        .collect();
    integrate(&ScalarField::from_vec(state.grid(), data))
}

/// `δH(u) = -tr(G^{-1} U G^{-1} chi) + beta tr(G^{-1} U) / D` with `U = u_{i\bar j}`.
pub fn h_tilde_variation(state: &KahlerState, twist: &TwistData, u: &ScalarField) -> ScalarField {
    let uh = complex_hessian(u);
    let beta = twist.beta();
    let data = uh
        .matrices()
        .iter()
        .zip(state.inverse().matrices())
        .zip(twist.chi().matrices())
        .zip(state.det().values())
        .map(|(((um, ginv), x), &d)| {
            -ginv.sandwich(um).trace_product(x) + beta * ginv.trace_product(um) / d
        })
        .collect();
    ScalarField::from_vec(state.grid(), data)
}

/// `δE_beta(u)` before integration by parts,
/// `2 mean(H δH D) + mean(H^2 D Δ_phi u)`.
pub fn first_variation_ebeta_direct(
    state: &KahlerState,
    twist: &TwistData,
    u: &ScalarField,
) -> f64 {
    let h = h_tilde(state, twist);
    let dh = h_tilde_variation(state, twist, u);
    let lap = laplacian(state, u);
    let a = integrate(&h.mul(&dh).mul(state.det()));
    let b = integrate(&h.mul(&h).mul(state.det()).mul(&lap));
    2.0 * a + b
}

/// `Δ_phi u = tr(G^{-1} u_{i\bar j})`.
pub fn laplacian(state: &KahlerState, u: &ScalarField) -> ScalarField {
    let uh = complex_hessian(u);
    let data = uh
        .matrices()
        .iter()
        .zip(state.inverse().matrices())
        .map(|(um, ginv)| ginv.trace_product(um))
        .collect();
    ScalarField::from_vec(state.grid(), data)
}

/// Criticality threshold for [`second_variation_ebeta`].
pub const CRITICAL_TOL: f64 = 1e-8;

/// Bilinear second derivative of `E_beta` at a critical state.
pub fn second_variation_ebeta(
    state: &KahlerState,
    twist: &TwistData,
    u: &ScalarField,
    v: &ScalarField,
) -> Result<f64> {
    let residual = h_tilde(state, twist).sup_norm();
    if residual > CRITICAL_TOL {
        return Err(LabError::NotCritical { residual });
    }
    let n = state.grid().n();
    let beta = twist.beta();
    let g = state.grid();
    let raised_chi = |f: &ScalarField| -> ScalarField {
        let fh = complex_hessian(f);
        let data = fh
            .matrices()
            .iter()
            .zip(state.inverse().matrices())
            .zip(twist.chi().matrices())
            .map(|((m, ginv), x)| ginv.sandwich(m).trace_product(x))
            .collect();
        ScalarField::from_vec(g, data)
    };
    let tu = raised_chi(u);
    let tv = raised_chi(v);
    let lap_ratio = laplacian(state, v).zip_map(state.det(), |l, d| l / d);
    let q = tv.scale(-1.0).axpy(beta, &lap_ratio);

    let main = 2.0 * integrate(&tv.mul(&tu).mul(state.det()));

    let wu = raised_gradient(state, u);
    let wf = raised_gradient(state, &lap_ratio);
    let t2: Vec<f64> = wu
        .iter()
        .zip(&wf)
        .zip(twist.chi().matrices())
        .zip(state.det().values())
        .map(|(((a, b), x), &d)| x.form(&a[..n], &b[..n]).re * d)
        .collect();
    let t2 = integrate(&ScalarField::from_vec(g, t2));

    let du = u.gradient();
    let wq = raised_gradient(state, &q);
    let t3: Vec<f64> = du
        .iter()
        .zip(&wq)
        .map(|(a, b)| (0..n).map(|i| (a[i].conj() * b[i]).re).sum())
        .collect();
    let t3 = integrate(&ScalarField::from_vec(g, t3));

    Ok(main + 2.0 * beta * t2 - 2.0 * beta * t3)
}

/// Evaluates a functional at `phi + t u`, failing if the metric degenerates.
pub fn along<F>(phi: &ScalarField, u: &ScalarField, t: f64, f: F) -> Result<f64>
where
    F: Fn(&KahlerState) -> f64,
{
    let s = KahlerState::new(phi.axpy(t, u))?;
    Ok(f(&s))
}

/// Pointwise Hermitian field `chi` raised by the metric: `G^{-1} chi G^{-1}`.
pub fn raised_chi(state: &KahlerState, twist: &TwistData) -> HermitianField {
    state.inverse().zip_map(twist.chi(), Herm::sandwich)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GridSpec;
    use crate::random::PotentialSampler;
    use std::f64::consts::PI;

    fn grid(n: usize, size: usize) -> GridSpec {
        GridSpec::new(n, size).unwrap()
    }

    fn twist(g: GridSpec, seed: u64, beta: f64) -> TwistData {
        let chi0 = if g.n() == 1 {
            Herm::diag(&[-1.0])
        } else {
            Herm::diag(&[-1.0, -0.6])
        };
        let psi = PotentialSampler::new(g, seed).potential(0.2);
        TwistData::new(chi0, psi, beta, 1.0).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn flat_state_is_zero() {
        for n in [1, 2] {
            let g = grid(n, 8);
            let s = KahlerState::new(ScalarField::zeros(g)).unwrap();
            let t = TwistData::constant(g, Herm::identity(n).scale(-1.0), 0.3, 1.0).unwrap();
            let r = FunctionalReport::evaluate(&s, &t);
            for v in [r.i, r.j, r.d, r.j_chi, r.entropy, r.frak_j_beta, r.e_beta] {
                assert!(v.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn constant_potential() {
        for n in [1, 2] {
            let g = grid(n, 8);
            let t = twist(g, 1, 0.4);
            let c = 0.37;
            let s = KahlerState::new(ScalarField::constant(g, c)).unwrap();
            assert_eq!(aubin_i(&s), 0.0);
            assert_eq!(aubin_j(&s), 0.0);
            assert!((d_functional(&s) - c).abs() < 1e-15);
            let want_j = -c * t.chi0().trace();
            assert!((j_chi(&s, &t) - want_j).abs() < 1e-13);
            assert!(frak_j_beta(&s, &t).abs() < 1e-13);
        }
    }

    #[test]
    fn aubin_i_cosine_mode() {
        // Quadrature of phi (1 - D) at N = 256 gives eps^2 π^2 / 2.
        let g = grid(1, 64);
        let eps = 0.05;
        let s =
            KahlerState::new(ScalarField::from_fn(g, |x| eps * (2.0 * PI * x[0]).cos())).unwrap();
        let want = 0.012337005501361697; // eps^2 π^2 / 2
        assert!((aubin_i(&s) - want).abs() < 1e-15);
        assert!((aubin_i_pairing(&s) - want).abs() < 1e-15);
        assert!((aubin_j(&s) - want / 2.0).abs() < 1e-15);
    }

    #[test]
    fn identities_on_random_states() {
        for n in [1, 2] {
            let g = grid(n, 8);
            let t = twist(g, 2, 0.3);
            let mut sampler = PotentialSampler::new(g, 40 + n as u64);
            for _ in 0..5 {
                let amp = sampler.uniform(0.1, 0.9);
                let s = KahlerState::new(sampler.potential(amp)).unwrap();
                let r = FunctionalReport::evaluate(&s, &t);
                assert!(r.consistency["I_dual"].abs() < 1e-12);
                assert!(r.consistency["k_split"].abs() < 1e-12);
                assert!(r.consistency["IJ_lower"] < 1e-15);
                assert!(r.consistency["IJ_upper"] < 1e-15);
                assert!(r.i >= 0.0 && r.e_beta >= 0.0 && r.entropy >= 0.0);
            }
        }
    }

    #[test]
    fn shift_invariance() {
        let g = grid(2, 8);
        let t = twist(g, 3, 0.5);
        let phi = PotentialSampler::new(g, 9).potential(0.5);
        let a = FunctionalReport::evaluate(&KahlerState::new(phi.clone()).unwrap(), &t);
        let b = FunctionalReport::evaluate(&KahlerState::new(phi.shift(0.8)).unwrap(), &t);
        assert!((a.i - b.i).abs() < 1e-10);
        assert!((a.j - b.j).abs() < 1e-10);
        assert!((a.e_beta - b.e_beta).abs() < 1e-10);
        assert!((a.entropy - b.entropy).abs() < 1e-10);
        assert!((a.frak_j_beta - b.frak_j_beta).abs() < 1e-10);
        assert!((b.d - a.d - 0.8).abs() < 1e-10);
    }

    #[test]
    fn beta_adds_j() {
        let g = grid(1, 16);
        let s = KahlerState::new(PotentialSampler::new(g, 5).potential(0.6)).unwrap();
        let t0 = twist(g, 4, 0.0);
        let t1 = t0.with_beta(0.7);
        let diff = frak_j_beta(&s, &t1) - frak_j_beta(&s, &t0);
        assert!((diff - 0.7 * aubin_j(&s)).abs() < 1e-15);
    }

    #[test]
    fn entropy_taylor() {
        let g = grid(1, 32);
        let s = KahlerState::new(PotentialSampler::new(g, 6).potential(1e-3)).unwrap();
        let var = integrate(&s.det().map(|d| (d - 1.0) * (d - 1.0)));
        assert!(rel(entropy(&s), 0.5 * var) < 1e-2);
    }

    #[test]
    fn first_variations_match_finite_differences() {
        let eps = 1e-4;
        for (n, size, ibp_tol) in [(1, 64, 1e-5), (2, 16, 1e-3)] {
            let g = grid(n, size);
            let t = twist(g, 7, 0.4);
            let mut sampler = PotentialSampler::new(g, 70 + n as u64);
            let phi = sampler.potential(0.5);
            let u = sampler.potential(1.0);
            let s = KahlerState::new(phi.clone()).unwrap();

            let fd = (along(&phi, &u, eps, |s| frak_j_beta(s, &t)).unwrap()
                - along(&phi, &u, -eps, |s| frak_j_beta(s, &t)).unwrap())
                / (2.0 * eps);
            let an = first_variation_jbeta(&s, &t, &u);
            assert!(rel(fd, an) < 1e-6, "n={n}: {fd} vs {an}");

            let fd = (along(&phi, &u, eps, |s| e_beta(s, &t)).unwrap()
                - along(&phi, &u, -eps, |s| e_beta(s, &t)).unwrap())
                / (2.0 * eps);
            let displayed = first_variation_ebeta(&s, &t, &u);
            let direct = first_variation_ebeta_direct(&s, &t, &u);
            assert!(rel(fd, direct) < 1e-7, "n={n}: {fd} vs {direct}");
            // The integrated-by-parts form only agrees up to aliasing error.
            assert!(rel(fd, displayed) < ibp_tol, "n={n}: {fd} vs {displayed}");
        }
    }

    #[test]
    fn first_variation_of_constant_direction_vanishes() {
        let g = grid(2, 8);
        let t = twist(g, 8, 0.4);
        let s = KahlerState::new(PotentialSampler::new(g, 8).potential(0.5)).unwrap();
        let one = ScalarField::constant(g, 1.0);
        assert!(first_variation_jbeta(&s, &t, &one).abs() < 1e-13);
        assert_eq!(first_variation_ebeta(&s, &t, &one), 0.0);
    }

    #[test]
    fn flow_gradient_identity() {
        let g = grid(2, 8);
        let t = twist(g, 10, 0.4);
        let s = KahlerState::new(PotentialSampler::new(g, 10).potential(0.5)).unwrap();
        let h = h_tilde(&s, &t);
        assert!((first_variation_jbeta(&s, &t, &h) + e_beta(&s, &t)).abs() < 1e-14);
    }

    #[test]
    fn second_variation_jbeta_matches_fd() {
        let eps = 1e-3;
        for n in [1, 2] {
            let g = grid(n, 8);
            let t = twist(g, 11, 0.6);
            let mut sampler = PotentialSampler::new(g, 110 + n as u64);
            let phi = sampler.potential(0.5);
            let u = sampler.potential(0.8);
            let a = sampler.potential(0.8).shift(0.3);
            let s = KahlerState::new(phi.clone()).unwrap();
            let path = |e: f64| {
                let p = phi.axpy(e, &u).axpy(0.5 * e * e, &a);
                frak_j_beta(&KahlerState::new(p).unwrap(), &t)
            };
            let fd = (path(eps) - 2.0 * path(0.0) + path(-eps)) / (eps * eps);
            let sv = second_variation_jbeta(&s, &t, &u, &a);
            assert!(rel(fd, sv.full) < 1e-5, "n={n}: {fd} vs {}", sv.full);
            assert!(rel(fd, sv.displayed) > 1e-3);
        }
    }

    #[test]
    fn second_variation_ebeta_at_flat_state() {
        let eps = 1e-3;
        for n in [1, 2] {
            let g = grid(n, 8);
            let chi0 = if n == 1 {
                Herm::diag(&[-1.0])
            } else {
                Herm::diag(&[-1.0, -0.6])
            };
            let t = TwistData::constant(g, chi0, 0.4, 1.0).unwrap();
            let flat = ScalarField::zeros(g);
            let s = KahlerState::new(flat.clone()).unwrap();
            let u = PotentialSampler::new(g, 12).potential(0.5);
            let fd = (along(&flat, &u, eps, |s| e_beta(s, &t)).unwrap() - 2.0 * e_beta(&s, &t)
                + along(&flat, &u, -eps, |s| e_beta(s, &t)).unwrap())
                / (eps * eps);
            let an = second_variation_ebeta(&s, &t, &u, &u).unwrap();
            assert!(rel(fd, an) < 1e-4, "n={n}: {fd} vs {an}");
            // Perfect square at the flat state.
            let uh = complex_hessian(&u);
            let sq = uh.map_scalar(|m| {
                let v = -m.trace_product(t.chi0()) + 0.4 * m.trace();
                v * v
            });
            assert!(rel(an, 2.0 * integrate(&sq)) < 1e-12);
            let one = ScalarField::constant(g, 1.0);
            assert_eq!(second_variation_ebeta(&s, &t, &one, &one).unwrap(), 0.0);
        }
    }

    #[test]
    fn second_variation_ebeta_requires_critical_state() {
        let g = grid(1, 8);
        let t = twist(g, 13, 0.0);
        let s = KahlerState::new(ScalarField::zeros(g)).unwrap();
        let u = ScalarField::zeros(g);
        assert!(matches!(
            second_variation_ebeta(&s, &t, &u, &u),
            Err(LabError::NotCritical { .. })
        ));
    }
}
