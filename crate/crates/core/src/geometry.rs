//! Metric data of a Kähler potential and the twisting form `chi`.
//!
//! With the flat reference metric `g = I`, a potential `phi` has metric
//! `g_phi = I + phi_{i\bar j}`, volume ratio `omega_phi^n / omega^n = det g_phi`
//! and trace `tr_phi chi = tr(g_phi^{-1} chi)`. The twisting form is
//! `chi = chi_0 + psi_{i\bar j}`, closed by construction.

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::field::{complex_hessian, wedge_density, GridSpec, HermitianField, ScalarField};
use crate::herm::Herm;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignClass {
    NegativeDefinite,
    NegativeSemiDefinite,
    PositiveDefinite,
    PositiveSemiDefinite,
    Indefinite,
}

impl SignClass {
    pub fn is_nonpositive(self) -> bool {
        matches!(
            self,
            SignClass::NegativeDefinite | SignClass::NegativeSemiDefinite
        )
    }
}

/// The closed (1,1)-form `chi` with the parameters `beta` and `alpha`.
#[derive(Clone, Debug)]
pub struct TwistData {
    chi0: Herm,
    psi: ScalarField,
    beta: f64,
    alpha: f64,
    chi: HermitianField,
    sign: SignClass,
}

const SIGN_TOL: f64 = 1e-12;

impl TwistData {
    pub fn new(chi0: Herm, psi: ScalarField, beta: f64, alpha: f64) -> Result<Self> {
        let grid = psi.grid();
        if chi0.dim() != grid.n() {
            return Err(LabError::GridMismatch(format!(
                "chi0 is {}x{} but n = {}",
                chi0.dim(),
                chi0.dim(),
                grid.n()
            )));
        }
        if !(beta.is_finite() && alpha.is_finite()) {
            return Err(LabError::Format("beta and alpha must be finite".into()));
        }
        let chi0 = chi0.hermitize();
        let hess = complex_hessian(&psi);
        let chi = hess.map(|h| h.add(&chi0));
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for m in chi.matrices() {
            let [a, b] = m.eigenvalues();
            lo = lo.min(a);
            hi = hi.max(if m.dim() == 1 { a } else { b });
        }
        let sign = if hi < -SIGN_TOL {
            SignClass::NegativeDefinite
        } else if hi <= SIGN_TOL && lo < -SIGN_TOL {
            SignClass::NegativeSemiDefinite
        } else if lo > SIGN_TOL {
            SignClass::PositiveDefinite
        } else if lo >= -SIGN_TOL && hi > SIGN_TOL {
            SignClass::PositiveSemiDefinite
        } else {
            SignClass::Indefinite
        };
        Ok(Self {
            chi0,
            psi,
            beta,
            alpha,
            chi,
            sign,
        })
    }

    /// Constant `chi = chi_0` (no exact part).
    pub fn constant(grid: GridSpec, chi0: Herm, beta: f64, alpha: f64) -> Result<Self> {
        Self::new(chi0, ScalarField::zeros(grid), beta, alpha)
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        Self {
            beta,
            ..self.clone()
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.psi.grid()
    }

    pub fn chi0(&self) -> &Herm {
        &self.chi0
    }

    pub fn psi(&self) -> &ScalarField {
        &self.psi
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `chi_{i\bar j}` at every grid point.
    pub fn chi(&self) -> &HermitianField {
        &self.chi
    }

    pub fn sign_class(&self) -> SignClass {
        self.sign
    }

    /// Warnings about parameters outside the admissible range
    /// `0 <= beta < (n+1)/n * alpha` (alpha is user supplied, so these are
    /// advisory only).
    pub fn warnings(&self) -> Vec<String> {
        let n = self.grid().n() as f64;
        let mut out = Vec::new();
        if self.alpha <= 0.0 {
            out.push(format!("alpha = {} is not positive", self.alpha));
        }
        if self.beta < 0.0 {
            out.push(format!("beta = {} is negative", self.beta));
        }
        let bound = (n + 1.0) / n * self.alpha;
        if self.beta >= bound {
            out.push(format!(
                "beta = {} is not below (n+1)/n * alpha = {}",
                self.beta, bound
            ));
        }
        out
    }

    /// `c_0 = n [chi]·Omega^{n-1} / Omega^n`, by quadrature of `n chi ∧ omega^{n-1}`.
    pub fn c0(&self) -> f64 {
        self.chi.trace().mean()
    }
}

/// `c_beta = n [chi]·Omega^{n-1}/Omega^n - beta / V` with `V = 1`.
pub fn c_beta(twist: &TwistData) -> f64 {
    twist.c0() - twist.beta
}

/// A Kähler potential with its metric data.
#[derive(Clone, Debug)]
pub struct KahlerState {
    phi: ScalarField,
    hessian: HermitianField,
    metric: HermitianField,
    det: ScalarField,
    inverse: HermitianField,
    eigenvalues: Vec<[f64; 2]>,
    min_eig: f64,
}

impl KahlerState {
    /// Builds the metric `I + phi_{i\bar j}` and certifies positivity pointwise.
    pub fn new(phi: ScalarField) -> Result<Self> {
        let g = phi.grid();
        let hessian = complex_hessian(&phi);
        if g.n() == 1 {
            return Self::new_scalar(phi, hessian);
        }
        let id = Herm::identity(g.n());
        let len = g.len();
        let mut metric = Vec::with_capacity(len);
        let mut eigenvalues = Vec::with_capacity(len);
        let mut det = Vec::with_capacity(len);
        let mut inverse = Vec::with_capacity(len);
        let (mut index, mut min_eig) = (0, f64::INFINITY);
        for (i, h) in hessian.matrices().iter().enumerate() {
            let m = h.add(&id);
            let e = m.eigenvalues();
            if !(e[0] >= min_eig) {
                index = i;
                min_eig = e[0];
            }
            let d = m.det();
            inverse.push(m.adjugate().scale(1.0 / d));
            metric.push(m);
            eigenvalues.push(e);
            det.push(d);
        }
        if !(min_eig > 0.0) {
            return Err(LabError::NotKahler {
                index,
                eigenvalue: min_eig,
            });
        }
        let metric = HermitianField::from_vec(g, metric);
        let det = ScalarField::from_vec(g, det);
        let inverse = HermitianField::from_vec(g, inverse);
        Ok(Self {
            phi,
            hessian,
            metric,
            det,
            inverse,
            eigenvalues,
            min_eig,
        })
    }

    /// `n = 1`: the metric is the scalar `D = 1 + phi_{z\bar z}`.
    fn new_scalar(phi: ScalarField, hessian: HermitianField) -> Result<Self> {
        let g = phi.grid();
        let det: Vec<f64> = hessian
            .matrices()
            .iter()
            .map(|h| 1.0 + h.get(0, 0).re)
            .collect();
        let (index, min_eig) =
            det.iter()
                .copied()
                .enumerate()
                .fold(
                    (0, f64::INFINITY),
                    |acc, x| if !(x.1 >= acc.1) { x } else { acc },
                );
        if !(min_eig > 0.0) {
            return Err(LabError::NotKahler {
                index,
                eigenvalue: min_eig,
            });
        }
        let scalar = |v: f64| Herm::diag(&[v]);
        let metric = HermitianField::from_vec(g, det.iter().map(|&d| scalar(d)).collect());
        let inverse = HermitianField::from_vec(g, det.iter().map(|&d| scalar(1.0 / d)).collect());
        let eigenvalues = det.iter().map(|&d| [d, d]).collect();
        let det = ScalarField::from_vec(g, det);
        Ok(Self {
            phi,
            hessian,
            metric,
            det,
            inverse,
            eigenvalues,
            min_eig,
        })
    }

    pub fn grid(&self) -> GridSpec {
        self.phi.grid()
    }

    pub fn phi(&self) -> &ScalarField {
        &self.phi
    }

    pub fn hessian(&self) -> &HermitianField {
        &self.hessian
    }

    pub fn metric(&self) -> &HermitianField {
        &self.metric
    }

    /// `omega_phi^n / omega^n`.
    pub fn det(&self) -> &ScalarField {
        &self.det
    }

    pub fn inverse(&self) -> &HermitianField {
        &self.inverse
    }

    /// Ascending metric eigenvalues per point (`[λ, λ]` when `n = 1`).
    pub fn eigenvalues(&self) -> &[[f64; 2]] {
        &self.eigenvalues
    }

    /// Positivity margin: smallest metric eigenvalue over the grid.
    pub fn min_eig(&self) -> f64 {
        self.min_eig
    }

    pub fn max_eig(&self) -> f64 {
        let n = self.grid().n();
        self.eigenvalues
            .iter()
            .map(|e| e[n - 1])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Convenience wrapper matching the twist-aware call sites.
pub fn make_state(phi: ScalarField, twist: &TwistData) -> Result<KahlerState> {
    if phi.grid() != twist.grid() {
        return Err(LabError::GridMismatch(
            "potential and twist live on different grids".into(),
        ));
    }
    KahlerState::new(phi)
}

/// `tr_{omega_phi} chi = g_phi^{i\bar j} chi_{i\bar j}`.
pub fn trace_chi(state: &KahlerState, twist: &TwistData) -> ScalarField {
    let data = state
        .inverse()
        .matrices()
        .iter()
        .zip(twist.chi().matrices())
        .map(|(ginv, chi)| ginv.trace_product(chi))
        .collect();
    ScalarField::from_vec(state.grid(), data)
}

/// `n chi ∧ omega_phi^{n-1} / omega_phi^n`, evaluated through the wedge calculus.
pub fn trace_chi_wedge(state: &KahlerState, twist: &TwistData) -> ScalarField {
    let n = state.grid().n() as f64;
    let top = wedge_density(twist.chi(), state.metric()).expect("same grid");
    top.zip_map(state.det(), |w, d| n * w / d)
}

/// Residual `H = tr_phi chi - c_beta - beta/V · omega^n / omega_phi^n`.
pub fn h_tilde(state: &KahlerState, twist: &TwistData) -> ScalarField {
    let c = c_beta(twist);
    let beta = twist.beta();
    trace_chi(state, twist).zip_map(state.det(), |t, d| t - c - beta / d)
}

/// Ricci form `-∂∂̄ log det g_phi`.
pub fn ricci(state: &KahlerState) -> HermitianField {
    complex_hessian(&state.det().map(f64::ln)).scale(-1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RicciBounds {
    /// Largest Ricci eigenvalue over the grid.
    pub sup: f64,
    /// Smallest Ricci eigenvalue over the grid.
    pub inf: f64,
}

impl RicciBounds {
    /// Membership in `{sup Ric <= C}`.
    pub fn in_upper_class(&self, c: f64) -> bool {
        self.sup <= c
    }

    /// Membership in `{inf Ric >= C}`.
    pub fn in_lower_class(&self, c: f64) -> bool {
        self.inf >= c
    }
}

pub fn ricci_bounds(state: &KahlerState) -> RicciBounds {
    let ric = ricci(state);
    let mut sup = f64::NEG_INFINITY;
    let mut inf = f64::INFINITY;
    for m in ric.matrices() {
        inf = inf.min(m.min_eig());
        sup = sup.max(m.max_eig());
    }
    RicciBounds { sup, inf }
}

/// Which positivity hypothesis of the flow convergence statement to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConeVariant {
    /// `(-c_beta omega + (n-1) chi) ∧ omega^{n-2} > 0`.
    Theorem,
    /// `(-n c_beta omega + (n-1) chi) ∧ omega^{n-2} > 0`.
    Proof,
}

impl ConeVariant {
    pub fn kappa(self, n: usize) -> f64 {
        match self {
            ConeVariant::Theorem => 1.0,
            ConeVariant::Proof => n as f64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConeReport {
    pub variant: ConeVariant,
    pub kappa: f64,
    pub c_beta: f64,
    /// Smallest eigenvalue of `-kappa c_beta I + (n-1) chi` over the grid.
    pub cone_margin: f64,
    /// Smallest eigenvalue of `-chi + beta (omega^n/omega_phi^n) g_phi`.
    pub ellipticity_margin: f64,
}

impl ConeReport {
    pub fn passes(&self) -> bool {
        self.cone_margin > 0.0 && self.ellipticity_margin > 0.0
    }
}

/// Pointwise matrix `-chi + beta/V (omega^n/omega_phi^n) g_phi`; the
/// linearized flow operator is elliptic where it is positive definite.
pub fn ellipticity_matrix(state: &KahlerState, twist: &TwistData) -> HermitianField {
    let beta = twist.beta();
    let data = state
        .metric()
        .matrices()
        .iter()
        .zip(twist.chi().matrices())
        .zip(state.det().values())
        .map(|((g, chi), &d)| g.scale(beta / d).sub(chi))
        .collect();
    HermitianField::from_vec(state.grid(), data)
}

/// Smallest ellipticity eigenvalue and where it occurs.
pub fn ellipticity_margin(state: &KahlerState, twist: &TwistData) -> (usize, f64) {
    ellipticity_matrix(state, twist)
        .matrices()
        .iter()
        .map(Herm::min_eig)
        .enumerate()
        .fold(
            (0, f64::INFINITY),
            |acc, x| if x.1 < acc.1 { x } else { acc },
        )
}

/// Coefficients `a^{i\bar j}` of the linearized flow operator
/// `L = a^{i\bar j} ∂_i ∂_{\bar j}`, as the matrix
/// `g_phi^{-1} (-chi + beta (omega^n/omega_phi^n) g_phi) g_phi^{-1}`.
pub fn flow_operator(state: &KahlerState, twist: &TwistData) -> HermitianField {
    let e = ellipticity_matrix(state, twist);
    state.inverse().zip_map(&e, |ginv, m| ginv.sandwich(m))
}

pub fn cone_condition(
    state: &KahlerState,
    twist: &TwistData,
    variant: ConeVariant,
) -> Result<ConeReport> {
    let n = state.grid().n();
    if n < 2 {
        return Err(LabError::NotApplicable(
            "cone condition needs n >= 2 (the omega^{n-2} factor is vacuous)".into(),
        ));
    }
    let c = c_beta(twist);
    let kappa = variant.kappa(n);
    let shift = Herm::identity(n).scale(-kappa * c);
    let cone_margin = twist
        .chi()
        .matrices()
        .iter()
        .map(|chi| shift.add(&chi.scale((n - 1) as f64)).min_eig())
        .fold(f64::INFINITY, f64::min);
    let (_, ellipticity_margin) = ellipticity_margin(state, twist);
    Ok(ConeReport {
        variant,
        kappa,
        c_beta: c,
        cone_margin,
        ellipticity_margin,
    })
}
