//! Negative gradient flow `phi_t = H` of `frakJ_beta` and its monitors.
//!
//! The flow is stepped with explicit Euler. Each step size is capped by the
//! stability bound of the linearized operator
//! `L = a^{i\bar j} ∂_i ∂_{\bar j}` on the grid, halved on rejection and
//! doubled after every accepted step.

use serde::{Deserialize, Serialize};

use crate::check::CheckResult;
use crate::error::{LabError, Result};
use crate::field::{integrate, ScalarField};
use crate::functionals::{e_beta, frak_j_beta};
use crate::geometry::{
    c_beta, cone_condition, h_tilde, ConeReport, ConeVariant, KahlerState, TwistData,
};
use crate::herm::Herm;
use crate::spectral::spectral;

/// Smallest step size before a run is declared divergent.
pub const MIN_DT: f64 = 1e-12;

/// Largest admissible growth of `sup|H|` over one step.
const GROWTH_LIMIT: f64 = 1.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    /// Initial step size.
    pub dt0: f64,
    /// Fraction of the explicit stability limit `2 / (max a · max symbol)`
    /// used as the step cap.
    pub cfl: f64,
    pub tol_residual: f64,
    pub max_steps: usize,
    pub record_every: usize,
    pub cone_variant: ConeVariant,
    /// Store the potential at every recorded step.
    pub keep_snapshots: bool,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            dt0: 1e-2,
            cfl: 0.4,
            tol_residual: 1e-8,
            max_steps: 200_000,
            record_every: 1,
            cone_variant: ConeVariant::Theorem,
            keep_snapshots: false,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt0 > 0.0 && self.tol_residual > 0.0 && self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(LabError::Format(
                "flow config needs dt0 > 0, tol_residual > 0 and 0 < cfl <= 1".into(),
            ));
        }
        if self.record_every == 0 {
            return Err(LabError::Format("record_every must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowStatus {
    Converged,
    Budget,
}

/// Variant of the lower bound on metric eigenvalues.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EigenBound {
    /// Denominator `min phi_t(0) - c_beta`.
    Literal,
    /// Denominator `-c_beta - min phi_t(0)`, the one the maximum principle gives.
    Corrected,
}

impl EigenBound {
    pub fn denominator(self, min_dot0: f64, c_beta: f64) -> f64 {
        match self {
            EigenBound::Literal => min_dot0 - c_beta,
            EigenBound::Corrected => -c_beta - min_dot0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowRecord {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub j_beta: f64,
    pub e_beta: f64,
    pub min_dot: f64,
    pub max_dot: f64,
    pub pos_margin: f64,
    pub ellip_margin: f64,
    pub eig_margin: f64,
    pub eig_margin_corrected: f64,
    pub a_max: f64,
    pub osc_phi: f64,
    pub mean_phi: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowTrace {
    pub records: Vec<FlowRecord>,
    /// Potentials at the recorded steps (only with `keep_snapshots`).
    #[serde(skip)]
    pub snapshots: Vec<ScalarField>,
    pub status: FlowStatus,
    pub steps: usize,
    pub rejections: usize,
    /// `sup|H|` over the modes the flow can move, i.e. without Nyquist modes.
    pub final_residual: f64,
    /// `sup|H|` over all grid values. The gap to `final_residual` is the
    /// spatial truncation error of the discrete critical equation.
    pub final_residual_full: f64,
    /// `min/max phi_t(0)` measured on a spectrally refined grid.
    pub initial_min_dot: f64,
    pub initial_max_dot: f64,
    /// Largest observed `sup|phi_t(k+1) - phi_t(k)| / dt`.
    pub dot_rate: f64,
    pub max_dt: f64,
    pub c_beta: f64,
    pub cone: Option<ConeReport>,
}

impl FlowTrace {
    pub const CSV_HEADER: &'static str =
        "t,J_beta,E_beta,min_dot,max_dot,pos_margin,ellip_margin,eig_margin,A_max,osc_phi,eig_margin_corrected";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let row = [
                r.t,
                r.j_beta,
                r.e_beta,
                r.min_dot,
                r.max_dot,
                r.pos_margin,
                r.ellip_margin,
                r.eig_margin,
                r.a_max,
                r.osc_phi,
                r.eig_margin_corrected,
            ];
            out.push_str(
                &row.iter()
                    .map(|v| format!("{v:e}"))
                    .collect::<Vec<_>>()
                    .join(","),
            );
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct FlowOutcome {
    pub trace: FlowTrace,
    pub state: KahlerState,
}

/// Explicit stability limit `2 / (max eig a · pi^2 max |xi|^2)` of `phi_t = L phi`.
/// Ellipticity margin with its location, and the largest eigenvalue of the
/// coefficient matrix of the linearized operator.
#[derive(Clone, Copy, Debug)]
struct OperatorBounds {
    index: usize,
    margin: f64,
    lam_max: f64,
}

fn operator_bounds(state: &KahlerState, twist: &TwistData) -> OperatorBounds {
    let beta = twist.beta();
    let mut out = OperatorBounds {
        index: 0,
        margin: f64::INFINITY,
        lam_max: 0.0,
    };
    if state.grid().n() == 1 {
        // e = beta - chi and a = e / D^2.
        for (i, (chi, &d)) in twist
            .chi()
            .matrices()
            .iter()
            .zip(state.det().values())
            .enumerate()
        {
            let e = beta - chi.get(0, 0).re;
            if !(e >= out.margin) {
                out.index = i;
                out.margin = e;
            }
            out.lam_max = out.lam_max.max(e / (d * d));
        }
        return out;
    }
    let points = state
        .metric()
        .matrices()
        .iter()
        .zip(state.inverse().matrices())
        .zip(twist.chi().matrices())
        .zip(state.det().values());
    for (i, (((g, ginv), chi), &d)) in points.enumerate() {
        let e = g.scale(beta / d).sub(chi);
        let m = e.min_eig();
        if !(m >= out.margin) {
            out.index = i;
            out.margin = m;
        }
        out.lam_max = out.lam_max.max(ginv.sandwich(&e).max_eig());
    }
    out
}

fn cap(bounds: &OperatorBounds, grid: crate::field::GridSpec) -> f64 {
    2.0 / (bounds.lam_max * spectral(grid).max_ddbar())
}

/// Explicit stability limit `2 / (max eig a · max |symbol|)` of the
/// linearized flow at `state`.
pub fn stable_dt(state: &KahlerState, twist: &TwistData) -> f64 {
    cap(&operator_bounds(state, twist), state.grid())
}

fn require_elliptic(state: &KahlerState, twist: &TwistData) -> Result<OperatorBounds> {
    let b = operator_bounds(state, twist);
    if b.margin > 0.0 {
        Ok(b)
    } else {
        Err(LabError::NotElliptic {
            index: b.index,
            margin: b.margin,
        })
    }
}

/// One explicit Euler step `phi' = phi + dt H`.
///
/// Nyquist modes of `H` are dropped: they lie in the kernel of every
/// derivative operator, so they would never be damped.
pub fn step(state: &KahlerState, twist: &TwistData, dt: f64) -> Result<KahlerState> {
    require_elliptic(state, twist)?;
    let h = h_tilde(state, twist).without_nyquist();
    advance(state, &h, twist, dt).map(|(next, _)| next)
}

fn advance(
    state: &KahlerState,
    h: &ScalarField,
    twist: &TwistData,
    dt: f64,
) -> Result<(KahlerState, OperatorBounds)> {
    let next = KahlerState::new(state.phi().axpy(dt, h)).map_err(|e| LabError::StepRejected {
        reason: format!("positivity lost ({e})"),
    })?;
    let b = operator_bounds(&next, twist);
    if !(b.margin > 0.0) {
        return Err(LabError::StepRejected {
            reason: format!(
                "ellipticity lost at grid point {} (margin {:e})",
                b.index, b.margin
            ),
        });
    }
    Ok((next, b))
}

/// `min/max phi_t(0)` from a band-limited interpolation onto a finer grid.
pub fn refined_velocity_bounds(phi0: &ScalarField, twist: &TwistData) -> Result<(f64, f64)> {
    let factor = if phi0.grid().n() == 1 { 4 } else { 2 };
    let fine_phi = phi0.refine(factor)?;
    let fine_psi = twist.psi().refine(factor)?;
    let fine_twist = TwistData::new(*twist.chi0(), fine_psi, twist.beta(), twist.alpha())?;
    let h = h_tilde(&KahlerState::new(fine_phi)?, &fine_twist);
    Ok((h.min(), h.max()))
}

/// Smallest eigenvalue of `g_phi + chi / denom` over the grid.
fn eig_margin(state: &KahlerState, twist: &TwistData, denom: f64) -> f64 {
    if !(denom > 0.0) {
        return f64::NAN;
    }
    state
        .metric()
        .matrices()
        .iter()
        .zip(twist.chi().matrices())
        .map(|(g, x)| g.add(&x.scale(1.0 / denom)).min_eig())
        .fold(f64::INFINITY, f64::min)
}

/// `max chi^{i\bar j} g_{i\bar j}`, NaN where `chi` is singular.
fn a_monitor(state: &KahlerState, twist: &TwistData) -> f64 {
    state
        .metric()
        .matrices()
        .iter()
        .zip(twist.chi().matrices())
        .map(|(g, x)| x.inverse().map_or(f64::NAN, |xi| xi.trace_product(g)))
        .fold(f64::NEG_INFINITY, f64::max)
}

struct Recorder<'a> {
    twist: &'a TwistData,
    min_dot0: f64,
    c_beta: f64,
}

impl Recorder<'_> {
    fn record(
        &self,
        state: &KahlerState,
        h: &ScalarField,
        ellip: f64,
        step: usize,
        t: f64,
        dt: f64,
    ) -> FlowRecord {
        let twist = self.twist;
        FlowRecord {
            step,
            t,
            dt,
            j_beta: frak_j_beta(state, twist),
            e_beta: e_beta(state, twist),
            min_dot: h.min(),
            max_dot: h.max(),
            pos_margin: state.min_eig(),
            ellip_margin: ellip,
            eig_margin: eig_margin(
                state,
                twist,
                EigenBound::Literal.denominator(self.min_dot0, self.c_beta),
            ),
            eig_margin_corrected: eig_margin(
                state,
                twist,
                EigenBound::Corrected.denominator(self.min_dot0, self.c_beta),
            ),
            a_max: a_monitor(state, twist),
            osc_phi: state.phi().osc(),
            mean_phi: integrate(state.phi()),
        }
    }
}

/// Runs the flow from `phi0` until `sup|H| < tol_residual` or the step budget
/// is exhausted. The residual is measured without Nyquist modes: the flow
/// cannot move them, and for `n = 2` the discrete critical state keeps a
/// Nyquist component at the level of the spatial truncation error.
pub fn run(phi0: &ScalarField, twist: &TwistData, config: &FlowConfig) -> Result<FlowOutcome> {
    config.validate()?;
    if phi0.grid() != twist.grid() {
        return Err(LabError::GridMismatch(
            "initial potential and twist differ".into(),
        ));
    }
    let mut state = KahlerState::new(phi0.clone())?;
    let mut bounds = require_elliptic(&state, twist)?;
    let cone = if state.grid().n() == 2 {
        Some(cone_condition(&state, twist, config.cone_variant)?)
    } else {
        None
    };
    let (initial_min_dot, initial_max_dot) = refined_velocity_bounds(phi0, twist)?;
    let recorder = Recorder {
        twist,
        min_dot0: initial_min_dot,
        c_beta: c_beta(twist),
    };

    let mut h = h_tilde(&state, twist);
    let mut velocity = h.without_nyquist();
    let mut residual = velocity.sup_norm();
    let mut records = vec![recorder.record(&state, &h, bounds.margin, 0, 0.0, 0.0)];
    let mut snapshots = Vec::new();
    if config.keep_snapshots {
        snapshots.push(state.phi().clone());
    }
    let mut t = 0.0;
    let mut steps = 0;
    let mut rejections = 0;
    let mut dot_rate: f64 = 0.0;
    let mut max_dt: f64 = 0.0;
    let mut dt = config.dt0.min(config.cfl * cap(&bounds, state.grid()));
    let status = loop {
        if residual < config.tol_residual {
            break FlowStatus::Converged;
        }
        if steps >= config.max_steps {
            break FlowStatus::Budget;
        }
        let attempt = advance(&state, &velocity, twist, dt).and_then(|(next, b)| {
            let h_next = h_tilde(&next, twist);
            let v_next = h_next.without_nyquist();
            let r = v_next.sup_norm();
            if r > GROWTH_LIMIT * residual {
                Err(LabError::StepRejected {
                    reason: format!("sup|H| grew from {residual:e} to {r:e}"),
                })
            } else {
                Ok((next, b, h_next, v_next, r))
            }
        });
        match attempt {
            Ok((next, b, h_next, v_next, r)) => {
                dot_rate = dot_rate.max(h_next.sub(&h).sup_norm() / dt);
                max_dt = max_dt.max(dt);
                t += dt;
                steps += 1;
                state = next;
                bounds = b;
                h = h_next;
                velocity = v_next;
                residual = r;
                let done = residual < config.tol_residual || steps >= config.max_steps;
                if steps % config.record_every == 0 || done {
                    records.push(recorder.record(&state, &h, bounds.margin, steps, t, dt));
                    if config.keep_snapshots {
                        snapshots.push(state.phi().clone());
                    }
                }
                dt = (2.0 * dt).min(config.cfl * cap(&bounds, state.grid()));
            }
            Err(LabError::StepRejected { .. }) => {
                rejections += 1;
                dt *= 0.5;
                if dt < MIN_DT {
                    return Err(LabError::Diverged { steps, dt });
                }
            }
            Err(e) => return Err(e),
        }
    };
    let trace = FlowTrace {
        records,
        snapshots,
        status,
        steps,
        rejections,
        final_residual: residual,
        final_residual_full: h.sup_norm(),
        initial_min_dot,
        initial_max_dot,
        dot_rate,
        max_dt,
        c_beta: c_beta(twist),
        cone,
    };
    Ok(FlowOutcome { trace, state })
}

/// Exact solution of the `n = 1` critical equation `chi = c_beta D + beta`,
/// i.e. `phi_{z\bar z} = (chi - beta - c_beta) / c_beta`, with zero mean.
pub fn linear_oracle_n1(twist: &TwistData) -> Result<ScalarField> {
    let g = twist.grid();
    if g.n() != 1 {
        return Err(LabError::NotApplicable(
            "the linear oracle needs n = 1".into(),
        ));
    }
    let c = c_beta(twist);
    if c.abs() < 1e-14 {
        return Err(LabError::DegenerateConstant { c_beta: c });
    }
    let beta = twist.beta();
    let rhs = twist.chi().map_scalar(|m| (m.get(0, 0).re - beta - c) / c);
    let sp = spectral(g);
    let mut hat = sp.forward_real(rhs.values());
    for (idx, v) in hat.iter_mut().enumerate() {
        let sym = sp.ddbar_symbol(idx, 0, 0).re;
        *v = if sym != 0.0 {
            *v / sym
        } else {
            num_complex::Complex64::new(0.0, 0.0)
        };
    }
    Ok(ScalarField::from_vec(g, sp.inverse_real(hat)))
}

/// `sup|chi - c_beta D - beta|` for `n = 1`.
pub fn oracle_residual(state: &KahlerState, twist: &TwistData) -> f64 {
    let c = c_beta(twist);
    let beta = twist.beta();
    twist
        .chi()
        .matrices()
        .iter()
        .zip(state.det().values())
        .map(|(x, &d)| (x.get(0, 0).re - c * d - beta).abs())
        .fold(0.0, f64::max)
}

pub const MAXIMUM_PRINCIPLE: &str = "maximum principle for the flow velocity";
pub const EIGEN_BOUND: &str = "lower bound of the metric eigenvalues along the flow";

/// `min phi_t(0) <= phi_t(t) <= max phi_t(0)` at every record, with slack
/// `1e-6 + 10 dt L` where `L` is the observed rate of change of `phi_t`.
pub fn maximum_principle_check(trace: &FlowTrace) -> CheckResult {
    let slack = 1e-6 + 10.0 * trace.max_dt * trace.dot_rate;
    let lo = trace.initial_min_dot;
    let hi = trace.initial_max_dot;
    let mut worst = f64::NEG_INFINITY;
    let mut worst_idx = None;
    for (k, r) in trace.records.iter().enumerate() {
        let v = (lo - r.min_dot).max(r.max_dot - hi);
        if v > worst {
            worst = v;
            worst_idx = Some(k);
        }
    }
    let result = CheckResult::leq("maximum_principle", MAXIMUM_PRINCIPLE, worst, 0.0, slack);
    let idx = if result.pass { None } else { worst_idx };
    result.with_index(idx).with_detail(format!(
        "initial range [{lo:e}, {hi:e}], worst excursion {worst:e}"
    ))
}

pub const MONOTONE: &str = "frakJ_beta is non-increasing along the flow";
pub const GRADIENT_IDENTITY: &str = "d frakJ_beta / dt = -E_beta along the flow";

/// `frakJ_beta` never increases between records by more than
/// `slack (1 + |frakJ_beta|)`.
pub fn monotonicity_check(trace: &FlowTrace, slack: f64) -> CheckResult {
    let mut worst = f64::NEG_INFINITY;
    let mut at = None;
    for (k, w) in trace.records.windows(2).enumerate() {
        let rise = (w[1].j_beta - w[0].j_beta) / (1.0 + w[0].j_beta.abs());
        if rise > worst {
            worst = rise;
            at = Some(k + 1);
        }
    }
    let worst = worst.max(0.0);
    let result = CheckResult::leq("monotone_frakJ", MONOTONE, worst, 0.0, slack);
    let idx = if result.pass { None } else { at };
    result.with_index(idx)
}

/// Relative error `|dJ/dt + E| / E` between consecutive records, with
/// `dJ/dt` a difference quotient and `E` the trapezoid average.
///
/// Intervals whose increment `|ΔJ|` is below `1e-11 (1 + |J|)` are skipped:
/// there the quotient is dominated by roundoff in `J`.
pub fn gradient_identity_check(trace: &FlowTrace, rel_tol: f64) -> CheckResult {
    let mut worst: f64 = 0.0;
    let mut at = None;
    let mut used = 0;
    for (k, w) in trace.records.windows(2).enumerate() {
        let dt = w[1].t - w[0].t;
        let dj = w[1].j_beta - w[0].j_beta;
        if dt <= 0.0 || dj.abs() < 1e-11 * (1.0 + w[0].j_beta.abs()) {
            continue;
        }
        let e = 0.5 * (w[0].e_beta + w[1].e_beta);
        let err = (dj / dt + e).abs() / e;
        used += 1;
        if !(err <= worst) {
            worst = err;
            at = Some(k + 1);
        }
    }
    let result = CheckResult::leq("gradient_identity", GRADIENT_IDENTITY, worst, 0.0, rel_tol);
    let idx = if result.pass { None } else { at };
    result
        .with_index(idx)
        .with_detail(format!("{used} resolvable intervals"))
}

/// `g_phi >= -chi / denom` at every record (via the stored margins).
pub fn eigen_bound_check(
    trace: &FlowTrace,
    twist: &TwistData,
    variant: EigenBound,
) -> Result<CheckResult> {
    let max_chi = twist
        .chi()
        .matrices()
        .iter()
        .map(Herm::max_eig)
        .fold(f64::NEG_INFINITY, f64::max);
    if !(max_chi < 0.0) {
        return Err(LabError::NotApplicable(
            "chi is not negative definite".into(),
        ));
    }
    let denom = variant.denominator(trace.initial_min_dot, trace.c_beta);
    if !(denom > 0.0) {
        return Err(LabError::NotApplicable(format!(
            "denominator {denom:e} is not positive"
        )));
    }
    let margins: Vec<f64> = trace
        .records
        .iter()
        .map(|r| match variant {
            EigenBound::Literal => r.eig_margin,
            EigenBound::Corrected => r.eig_margin_corrected,
        })
        .collect();
    let (idx, worst) = margins
        .iter()
        .copied()
        .enumerate()
        .fold(
            (0, f64::INFINITY),
            |acc, x| if x.1 < acc.1 { x } else { acc },
        );
    let name = match variant {
        EigenBound::Literal => "eigen_bound_literal",
        EigenBound::Corrected => "eigen_bound_corrected",
    };
    let result = CheckResult::leq(name, EIGEN_BOUND, -worst, 0.0, 1e-8);
    let at = if result.pass { None } else { Some(idx) };
    Ok(result
        .with_index(at)
        .with_detail(format!("denominator {denom:e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GridSpec;
    use crate::random::PotentialSampler;

    fn grid(n: usize, size: usize) -> GridSpec {
        GridSpec::new(n, size).unwrap()
    }

    fn twist_n1(g: GridSpec, amp: f64, beta: f64) -> TwistData {
        let psi = PotentialSampler::new(g, 21).potential(amp);
        TwistData::new(Herm::diag(&[-1.0]), psi, beta, 1.0).unwrap()
    }

    #[test]
    fn critical_state_is_fixed_point() {
        let g = grid(2, 8);
        let t = TwistData::constant(g, Herm::diag(&[-1.0, -0.5]), 0.3, 1.0).unwrap();
        let s = KahlerState::new(ScalarField::constant(g, 0.25)).unwrap();
        let next = step(&s, &t, 1e-3).unwrap();
        assert_eq!(next.phi(), s.phi());
        let out = run(&ScalarField::zeros(g), &t, &FlowConfig::default()).unwrap();
        assert_eq!(out.trace.status, FlowStatus::Converged);
        assert_eq!(out.trace.steps, 0);
        assert_eq!(out.trace.records.len(), 1);
    }

    #[test]
    fn euler_step_is_first_order() {
        // One step vs two half steps differ by O(dt^2).
        let g = grid(1, 16);
        let t = twist_n1(g, 0.2, 0.3);
        let s = KahlerState::new(ScalarField::zeros(g)).unwrap();
        let diff = |dt: f64| {
            let one = step(&s, &t, dt).unwrap();
            let half = step(&step(&s, &t, dt / 2.0).unwrap(), &t, dt / 2.0).unwrap();
            one.phi().sub(half.phi()).sup_norm()
        };
        let (a, b) = (diff(1e-3), diff(5e-4));
        let order = (a / b).log2();
        assert!((order - 2.0).abs() < 0.05, "order {order}");
    }

    #[test]
    fn not_elliptic_at_entry() {
        let g = grid(1, 8);
        let t = TwistData::constant(g, Herm::diag(&[1.0]), 0.0, 1.0).unwrap();
        let s = KahlerState::new(ScalarField::zeros(g)).unwrap();
        assert!(matches!(
            step(&s, &t, 1e-3),
            Err(LabError::NotElliptic { .. })
        ));
        let err = run(&ScalarField::zeros(g), &t, &FlowConfig::default()).unwrap_err();
        assert!(matches!(err, LabError::NotElliptic { .. }));
    }

    #[test]
    fn oracle_solves_critical_equation() {
        let g = grid(1, 32);
        assert_eq!(
            linear_oracle_n1(&twist_n1(g, 0.0, 0.3)).unwrap().sup_norm(),
            0.0
        );
        for beta in [0.0, 0.5] {
            let t = twist_n1(g, 0.3, beta);
            let phi = linear_oracle_n1(&t).unwrap();
            let s = KahlerState::new(phi.clone()).unwrap();
            assert!(oracle_residual(&s, &t) < 1e-12);
            assert!(h_tilde(&s, &t).sup_norm() < 1e-12);
            // Closed form: phi = psi / c_beta.
            let want = t.psi().centered().scale(1.0 / c_beta(&t));
            assert!(phi.sub(&want).sup_norm() < 1e-13);
        }
        let t = TwistData::constant(g, Herm::diag(&[0.5]), 0.5, 1.0).unwrap();
        assert!(matches!(
            linear_oracle_n1(&t),
            Err(LabError::DegenerateConstant { .. })
        ));
        let t2 = TwistData::constant(grid(2, 8), Herm::diag(&[-1.0, -1.0]), 0.0, 1.0).unwrap();
        assert!(matches!(
            linear_oracle_n1(&t2),
            Err(LabError::NotApplicable(_))
        ));
    }

    #[test]
    fn n1_flow_converges_to_oracle() {
        let g = grid(1, 16);
        let t = twist_n1(g, 0.3, 0.3);
        let out = run(&ScalarField::zeros(g), &t, &FlowConfig::default()).unwrap();
        assert_eq!(out.trace.status, FlowStatus::Converged);
        let oracle = linear_oracle_n1(&t).unwrap();
        let diff = out
            .state
            .phi()
            .centered()
            .sub(&oracle.centered())
            .sup_norm();
        assert!(diff < 1e-8, "{diff}");
        assert!(maximum_principle_check(&out.trace).pass);
        let r = eigen_bound_check(&out.trace, &t, EigenBound::Corrected).unwrap();
        assert!(r.pass, "{r:?}");
        let csv = out.trace.to_csv();
        assert_eq!(csv.lines().count(), out.trace.records.len() + 1);
        for w in out.trace.records.windows(2) {
            assert!(w[1].t > w[0].t);
        }
        assert!(monotonicity_check(&out.trace, 1e-9).pass);
        // The identity error is first order in the step size.
        let base = gradient_identity_check(&out.trace, 0.01);
        let cfg = FlowConfig {
            cfl: 0.2,
            ..FlowConfig::default()
        };
        let refined = run(&ScalarField::zeros(g), &t, &cfg).unwrap().trace;
        let fine = gradient_identity_check(&refined, 0.01);
        assert!(fine.pass, "{fine:?}");
        let ratio = base.lhs / fine.lhs;
        assert!((1.8..2.2).contains(&ratio), "{ratio}");
    }

    #[test]
    fn corrupted_trace_fails_monotonicity_and_identity() {
        let g = grid(1, 16);
        let t = twist_n1(g, 0.3, 0.3);
        let cfg = FlowConfig {
            max_steps: 40,
            cfl: 0.1,
            ..FlowConfig::default()
        };
        let mut trace = run(&ScalarField::zeros(g), &t, &cfg).unwrap().trace;
        assert!(monotonicity_check(&trace, 1e-9).pass);
        assert!(gradient_identity_check(&trace, 0.01).pass);
        trace.records[5].j_beta = trace.records[4].j_beta + 1e-6;
        let m = monotonicity_check(&trace, 1e-9);
        assert!(!m.pass);
        assert_eq!(m.worst_index, Some(5));
        assert!(!gradient_identity_check(&trace, 0.01).pass);
    }

    #[test]
    fn corrupted_trace_fails_maximum_principle() {
        let g = grid(1, 16);
        let t = twist_n1(g, 0.3, 0.3);
        let cfg = FlowConfig {
            max_steps: 50,
            ..FlowConfig::default()
        };
        let mut trace = run(&ScalarField::zeros(g), &t, &cfg).unwrap().trace;
        assert!(maximum_principle_check(&trace).pass);
        trace.records[7].max_dot = trace.initial_max_dot + 1.0;
        let r = maximum_principle_check(&trace);
        assert!(!r.pass);
        assert_eq!(r.worst_index, Some(7));
    }

    #[test]
    fn eigen_bound_preconditions() {
        let g = grid(1, 16);
        let t = TwistData::constant(g, Herm::diag(&[0.5]), 1.0, 1.0).unwrap();
        let trace = run(&ScalarField::zeros(g), &t, &FlowConfig::default())
            .unwrap()
            .trace;
        assert!(matches!(
            eigen_bound_check(&trace, &t, EigenBound::Corrected),
            Err(LabError::NotApplicable(_))
        ));
    }
}
