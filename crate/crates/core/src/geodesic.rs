//! Mabuchi geodesics as minimizers of the discrete path energy.
//!
//! A path is `K + 1` potentials at uniform times on `[0, T]`. Its energy is
//! `Σ_k Δt mean(s_k^2 D(m_k))` with segment velocities
//! `s_k = (phi_{k+1} - phi_k) / Δt` and volume ratios evaluated at the
//! midpoint potentials `m_k`. Interior nodes are optimized with
//! preconditioned L-BFGS; the result is certified by the defect
//! `phi_tt - |∂phi_t|^2_phi` at the interior nodes.

use std::cell::Cell;

use serde::Serialize;

use crate::check::CheckResult;
use crate::error::{LabError, Result};
use crate::field::{complex_hessian, integrate, GridSpec, HermitianField, ScalarField};
use crate::flow::FlowTrace;
use crate::functionals::{e_beta, first_variation_jbeta, frak_j_beta, gradient_norm_sq};
use crate::geometry::{KahlerState, SignClass, TwistData};
use crate::herm::Herm;
use crate::lbfgs::{self, Stop};

/// Smallest admissible number of segments.
pub const MIN_SEGMENTS: usize = 8;

#[derive(Clone, Debug)]
pub struct Path {
    nodes: Vec<ScalarField>,
    duration: f64,
}

impl Path {
    pub fn new(nodes: Vec<ScalarField>, duration: f64) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(LabError::NotApplicable(
                "a path needs at least two nodes".into(),
            ));
        }
        if !(duration > 0.0) {
            return Err(LabError::NotApplicable(
                "path duration must be positive".into(),
            ));
        }
        let g = nodes[0].grid();
        if nodes.iter().any(|f| f.grid() != g) {
            return Err(LabError::GridMismatch(
                "path nodes live on different grids".into(),
            ));
        }
        Ok(Self { nodes, duration })
    }

    /// Affine interpolation `(1 - t) phi0 + t phi1` with `k` segments on `[0, 1]`.
    pub fn linear(phi0: &ScalarField, phi1: &ScalarField, k: usize) -> Result<Self> {
        if phi0.grid() != phi1.grid() {
            return Err(LabError::GridMismatch(
                "endpoints live on different grids".into(),
            ));
        }
        let diff = phi1.sub(phi0);
        let nodes = (0..=k)
            .map(|j| phi0.axpy(j as f64 / k as f64, &diff))
            .collect();
        Self::new(nodes, 1.0)
    }

    pub fn nodes(&self) -> &[ScalarField] {
        &self.nodes
    }

    pub fn segments(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn dt(&self) -> f64 {
        self.duration / self.segments() as f64
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn grid(&self) -> GridSpec {
        self.nodes[0].grid()
    }

    pub fn states(&self) -> Result<Vec<KahlerState>> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(j, f)| {
                KahlerState::new(f.clone()).map_err(|_| LabError::PositivityLoss { node: j })
            })
            .collect()
    }

    pub fn reversed(&self) -> Self {
        let mut nodes = self.nodes.clone();
        nodes.reverse();
        Self {
            nodes,
            duration: self.duration,
        }
    }
}

/// Volume ratio and cofactor matrix of `I + phi_{i\bar j}`; `None` outside the cone.
fn volume_data(phi: &ScalarField) -> Option<(ScalarField, HermitianField)> {
    let n = phi.grid().n();
    let id = Herm::identity(n);
    let g = complex_hessian(phi).map(|h| h.add(&id));
    if g.matrices().iter().any(|m| !(m.min_eig() > 0.0)) {
        return None;
    }
    Some((g.map_scalar(Herm::det), g.map(Herm::adjugate)))
}

struct Segment {
    speed: ScalarField,
    det: ScalarField,
    cof: HermitianField,
}

fn segments(nodes: &[ScalarField], dt: f64) -> std::result::Result<Vec<Segment>, usize> {
    nodes
        .windows(2)
        .enumerate()
        .map(|(k, w)| {
            let mid = w[0].add(&w[1]).scale(0.5);
            let (det, cof) = volume_data(&mid).ok_or(k)?;
            Ok(Segment {
                speed: w[1].sub(&w[0]).scale(1.0 / dt),
                det,
                cof,
            })
        })
        .collect()
}

fn energy_of(segs: &[Segment], dt: f64) -> f64 {
    segs.iter()
        .map(|s| dt * integrate(&s.speed.mul(&s.speed).mul(&s.det)))
        .sum()
}

/// Oversampling of the energy quadrature. Twice the grid resolves the cubic
/// integrand of band-limited nodes exactly; collocation on the grid itself
/// aliases and admits spurious descent toward the cone boundary.
const PAD: usize = 2;

fn padded(nodes: &[ScalarField]) -> Vec<ScalarField> {
    nodes
        .iter()
        .map(|f| f.refine(PAD).expect("refined grid is valid"))
        .collect()
}

fn padded_segments(nodes: &[ScalarField], dt: f64) -> Result<Vec<Segment>> {
    segments(&padded(nodes), dt).map_err(|k| LabError::PositivityLoss { node: k })
}

/// Discrete path energy `Σ_k Δt mean(s_k^2 D(m_k))`.
pub fn path_energy(path: &Path) -> Result<f64> {
    Ok(energy_of(
        &padded_segments(&path.nodes, path.dt())?,
        path.dt(),
    ))
}

/// Energy and its gradient with respect to the interior nodes under the
/// grid-mean pairing; `Err(segment)` if a midpoint leaves the cone.
fn energy_and_gradient(
    nodes: &[ScalarField],
    dt: f64,
) -> std::result::Result<(f64, Vec<ScalarField>), usize> {
    let coarse = nodes[0].grid();
    let segs = segments(&padded(nodes), dt)?;
    let grad = energy_gradient(&segs, dt)
        .into_iter()
        .map(|g| {
            g.truncate(coarse)
                .expect("coarse grid divides the padded grid")
        })
        .collect();
    Ok((energy_of(&segs, dt), grad))
}

/// Gradient of the energy with respect to interior node `j` under the grid
/// mean pairing.
fn energy_gradient(segs: &[Segment], dt: f64) -> Vec<ScalarField> {
    let weighted: Vec<ScalarField> = segs
        .iter()
        .map(|s| {
            let s2 = s.speed.mul(&s.speed);
            let data = s
                .cof
                .matrices()
                .iter()
                .zip(s2.values())
                .map(|(c, &v)| (*c).scale(v))
                .collect();
            HermitianField::new(s.cof.grid(), data)
                .expect("finite")
                .ddbar_adjoint()
        })
        .collect();
    (1..segs.len())
        .map(|j| {
            let a = &segs[j - 1];
            let b = &segs[j];
            let flux = a.speed.mul(&a.det).sub(&b.speed.mul(&b.det)).scale(2.0);
            flux.add(&weighted[j - 1].add(&weighted[j]).scale(0.5 * dt))
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct GeodesicOptions {
    pub memory: usize,
    pub max_iter: usize,
    /// Largest sup-norm change of a node on the first trial step.
    pub max_step: f64,
}

impl Default for GeodesicOptions {
    fn default() -> Self {
        Self {
            memory: 12,
            max_iter: 4000,
            max_step: 0.5,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GeodesicResult {
    #[serde(skip)]
    pub path: Path,
    pub energy: f64,
    /// `sqrt(energy)` on a unit-time path.
    pub distance: f64,
    /// `Σ_k Δt ‖s_k‖`, equal to `distance` for constant speed.
    pub arc_length: f64,
    pub speeds: Vec<f64>,
    /// Relative standard deviation of the segment speeds.
    pub speed_variance: f64,
    pub residual_sup: f64,
    pub residual_l2: f64,
    pub grad_norm: f64,
    pub iterations: usize,
}

/// `phi_tt - |∂phi_t|^2_phi` at interior nodes by centered differences.
pub fn geodesic_defect(path: &Path) -> Result<Vec<ScalarField>> {
    let dt = path.dt();
    let nodes = path.nodes();
    (1..path.segments())
        .map(|j| {
            let state = KahlerState::new(nodes[j].clone())
                .map_err(|_| LabError::PositivityLoss { node: j })?;
            let acc = nodes[j + 1]
                .add(&nodes[j - 1])
                .axpy(-2.0, &nodes[j])
                .scale(1.0 / (dt * dt));
            let vel = nodes[j + 1].sub(&nodes[j - 1]).scale(0.5 / dt);
            Ok(acc.sub(&gradient_norm_sq(&state, &vel)))
        })
        .collect()
}

fn summarize(path: Path, grad_norm: f64, iterations: usize) -> Result<GeodesicResult> {
    let dt = path.dt();
    let segs = padded_segments(path.nodes(), dt)?;
    let energy = energy_of(&segs, dt) * path.duration();
    let speeds: Vec<f64> = segs
        .iter()
        .map(|s| integrate(&s.speed.mul(&s.speed).mul(&s.det)).sqrt())
        .collect();
    let arc_length = speeds.iter().sum::<f64>() * dt;
    let mean = speeds.iter().sum::<f64>() / speeds.len() as f64;
    let var = speeds.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / speeds.len() as f64;
    let speed_variance = if mean > 0.0 { var.sqrt() / mean } else { 0.0 };
    let defect = geodesic_defect(&path)?;
    let residual_sup = defect.iter().map(ScalarField::sup_norm).fold(0.0, f64::max);
    let residual_l2 = defect
        .iter()
        .map(|d| dt * integrate(&d.mul(d)))
        .sum::<f64>()
        .sqrt();
    Ok(GeodesicResult {
        path,
        energy,
        distance: energy.sqrt(),
        arc_length,
        speeds,
        speed_variance,
        residual_sup,
        residual_l2,
        grad_norm,
        iterations,
    })
}

/// Per-point solve of the time tridiagonal `(2/Δt)(w_{j-1} + w_j, -w_j)`.
fn tridiagonal_precond(weights: &[ScalarField], dt: f64, rhs: &[f64], m: usize) -> Vec<f64> {
    let inner = weights.len() - 1;
    let mut out = vec![0.0; rhs.len()];
    let mut c = vec![0.0; inner];
    let mut d = vec![0.0; inner];
    let s = 2.0 / dt;
    for p in 0..m {
        for j in 0..inner {
            let a = if j > 0 {
                -s * weights[j].values()[p]
            } else {
                0.0
            };
            let b = s * (weights[j].values()[p] + weights[j + 1].values()[p]);
            let cj = if j + 1 < inner {
                -s * weights[j + 1].values()[p]
            } else {
                0.0
            };
            let r = rhs[j * m + p];
            let denom = if j > 0 { b - a * c[j - 1] } else { b };
            c[j] = cj / denom;
            d[j] = if j > 0 {
                (r - a * d[j - 1]) / denom
            } else {
                r / denom
            };
        }
        for j in (0..inner).rev() {
            let next = if j + 1 < inner {
                out[(j + 1) * m + p]
            } else {
                0.0
            };
            out[j * m + p] = d[j] - c[j] * next;
        }
    }
    out
}

fn solve(
    phi0: &ScalarField,
    phi1: &ScalarField,
    k: usize,
    tol: f64,
    opts: &GeodesicOptions,
) -> Result<GeodesicResult> {
    let start = Path::linear(phi0, phi1, k)?;
    let g = phi0.grid();
    let m = g.len();
    let dt = start.dt();
    let weights: Vec<ScalarField> = segments(start.nodes(), dt)
        .map_err(|k| LabError::PositivityLoss { node: k })?
        .into_iter()
        .map(|s| s.det)
        .collect();

    let assemble = |x: &[f64]| -> Vec<ScalarField> {
        let mut nodes = Vec::with_capacity(k + 1);
        nodes.push(phi0.clone());
        for j in 0..k - 1 {
            nodes.push(ScalarField::from_vec(g, x[j * m..(j + 1) * m].to_vec()));
        }
        nodes.push(phi1.clone());
        nodes
    };
    let failed_node = Cell::new(None);
    let objective = |x: &[f64]| -> Option<(f64, Vec<f64>)> {
        match energy_and_gradient(&assemble(x), dt) {
            Ok((f, grad)) => Some((
                f,
                grad.into_iter()
                    .flat_map(ScalarField::into_values)
                    .map(|v| v / m as f64)
                    .collect(),
            )),
            Err(seg) => {
                failed_node.set(Some(seg.clamp(1, k - 1)));
                None
            }
        }
    };
    // Interior updates stay free of Nyquist modes, which the padded energy
    // does not see consistently.
    let precond = |r: &[f64]| -> Vec<f64> {
        let scaled: Vec<f64> = r.iter().map(|v| v * m as f64).collect();
        tridiagonal_precond(&weights, dt, &scaled, m)
            .chunks(m)
            .flat_map(|c| {
                ScalarField::from_vec(g, c.to_vec())
                    .without_nyquist()
                    .into_values()
            })
            .collect()
    };
    let measure = |grad: &[f64]| -> f64 {
        let sum: f64 = grad.iter().map(|v| (v * m as f64 / dt).powi(2)).sum();
        (dt * sum / m as f64).sqrt()
    };
    let x0: Vec<f64> = start.nodes()[1..k]
        .iter()
        .flat_map(|f| f.values().to_vec())
        .collect();
    let settings = lbfgs::Settings {
        memory: opts.memory,
        max_iter: opts.max_iter,
        tol,
        max_step: opts.max_step,
    };
    let out = lbfgs::minimize(x0, objective, precond, measure, &settings);
    match out.stop {
        Stop::Converged => {}
        Stop::Infeasible => {
            return Err(LabError::PositivityLoss {
                node: failed_node.get().unwrap_or(1),
            });
        }
        Stop::MaxIter | Stop::Stalled => {
            return Err(LabError::NoConvergence {
                iterations: out.iterations,
                grad_norm: out.measure,
            });
        }
    }
    let path = Path::new(assemble(&out.x), 1.0)?;
    summarize(path, out.measure, out.iterations)
}

/// Geodesic segment from `phi0` to `phi1` with `k` time steps, optimized until
/// the space-time gradient norm is at most `tol`.
pub fn geodesic_segment(
    phi0: &ScalarField,
    phi1: &ScalarField,
    k: usize,
    tol: f64,
) -> Result<GeodesicResult> {
    geodesic_segment_with(phi0, phi1, k, tol, &GeodesicOptions::default())
}

pub fn geodesic_segment_with(
    phi0: &ScalarField,
    phi1: &ScalarField,
    k: usize,
    tol: f64,
    opts: &GeodesicOptions,
) -> Result<GeodesicResult> {
    if k < MIN_SEGMENTS {
        return Err(LabError::NotApplicable(format!(
            "need at least {MIN_SEGMENTS} segments, got {k}"
        )));
    }
    if phi0.grid() != phi1.grid() {
        return Err(LabError::GridMismatch(
            "endpoints live on different grids".into(),
        ));
    }
    KahlerState::new(phi0.clone()).map_err(|_| LabError::PositivityLoss { node: 0 })?;
    KahlerState::new(phi1.clone()).map_err(|_| LabError::PositivityLoss { node: k })?;
    match solve(phi0, phi1, k, tol, opts) {
        Err(LabError::PositivityLoss { .. }) => {
            let retry = GeodesicOptions {
                max_step: 0.5 * opts.max_step,
                ..opts.clone()
            };
            solve(phi0, phi1, k, tol, &retry)
        }
        other => other,
    }
}

fn require_geodesic(result: &GeodesicResult, tolerance: f64) -> Result<()> {
    if result.residual_sup > tolerance {
        return Err(LabError::NotGeodesic {
            residual: result.residual_sup,
            tolerance,
        });
    }
    Ok(())
}

pub const CONVEXITY: &str = "convexity of frakJ_beta along geodesics for nonpositive chi";
pub const BRIDGE: &str = "frakJ_beta(phi1) - frakJ_beta(phi0) <= d(phi0, phi1) sqrt(E_beta(phi1))";
pub const NPC: &str = "nonpositive curvature midpoint comparison";
pub const TRIANGLE: &str = "triangle inequality for the geodesic distance";

/// `frakJ_beta` at every node of the path.
pub fn functional_profile(path: &Path, twist: &TwistData) -> Result<Vec<f64>> {
    Ok(path
        .states()?
        .iter()
        .map(|s| frak_j_beta(s, twist))
        .collect())
}

/// Second differences of `frakJ_beta` along a certified geodesic must be
/// at least `-(10 residual + 1e-8)`.
pub fn convexity_probe(
    result: &GeodesicResult,
    twist: &TwistData,
    tolerance: f64,
) -> Result<CheckResult> {
    require_geodesic(result, tolerance)?;
    if !twist.sign_class().is_nonpositive() {
        return Err(LabError::NotApplicable(
            "chi is not negative semi-definite".into(),
        ));
    }
    let values = functional_profile(&result.path, twist)?;
    let (idx, worst) = values
        .windows(3)
        .map(|w| w[0] - 2.0 * w[1] + w[2])
        .enumerate()
        .fold(
            (0, f64::INFINITY),
            |acc, x| if x.1 < acc.1 { x } else { acc },
        );
    let tol = 10.0 * result.residual_sup + 1e-8;
    let check = CheckResult::leq("convexity", CONVEXITY, -worst, 0.0, tol);
    let at = if check.pass { None } else { Some(idx + 1) };
    Ok(check.with_index(at))
}

/// End slope `mean(rho_t (c_beta - tr chi + beta / D) D)` at the final node,
/// with a second-order one-sided difference for `rho_t`.
pub fn f_beta_estimate(result: &GeodesicResult, twist: &TwistData, tolerance: f64) -> Result<f64> {
    require_geodesic(result, tolerance)?;
    let path = &result.path;
    let k = path.segments();
    let nodes = path.nodes();
    let vel = nodes[k]
        .scale(3.0)
        .axpy(-4.0, &nodes[k - 1])
        .add(&nodes[k - 2])
        .scale(0.5 / path.dt());
    let end = KahlerState::new(nodes[k].clone())?;
    Ok(first_variation_jbeta(&end, twist, &vel))
}

/// Checks the bound of the increment of `frakJ_beta` by distance times
/// `sqrt(E_beta)`.
pub fn bridge_inequality_check(
    phi0: &ScalarField,
    phi1: &ScalarField,
    twist: &TwistData,
    k: usize,
    tol: f64,
) -> Result<CheckResult> {
    let s0 = KahlerState::new(phi0.clone())?;
    let s1 = KahlerState::new(phi1.clone())?;
    let lhs = frak_j_beta(&s1, twist) - frak_j_beta(&s0, twist);
    let e1 = e_beta(&s1, twist);
    let (distance, residual) = if phi0 == phi1 {
        (0.0, 0.0)
    } else {
        let geo = geodesic_segment(phi0, phi1, k, tol)?;
        (geo.distance, geo.residual_sup)
    };
    Ok(CheckResult::leq(
        "bridge_inequality",
        BRIDGE,
        lhs,
        distance * e1.sqrt(),
        10.0 * residual + 1e-8,
    ))
}

#[derive(Clone, Debug, Serialize)]
pub struct TriangleDistances {
    pub xy: f64,
    pub xz: f64,
    pub yz: f64,
    pub xm: f64,
    pub max_residual: f64,
}

/// Distances of a triangle and of `x` to the midpoint of the side `yz`.
pub fn triangle_distances(
    x: &ScalarField,
    y: &ScalarField,
    z: &ScalarField,
    k: usize,
    tol: f64,
) -> Result<TriangleDistances> {
    if !k.is_multiple_of(2) {
        return Err(LabError::NotApplicable(
            "midpoint needs an even number of segments".into(),
        ));
    }
    let dist = |a: &ScalarField, b: &ScalarField| -> Result<(f64, f64, Option<GeodesicResult>)> {
        if a == b {
            return Ok((0.0, 0.0, None));
        }
        let r = geodesic_segment(a, b, k, tol)?;
        Ok((r.distance, r.residual_sup, Some(r)))
    };
    let (xy, r1, _) = dist(x, y)?;
    let (xz, r2, _) = dist(x, z)?;
    let (yz, r3, geo) = dist(y, z)?;
    let mid = match &geo {
        Some(g) => g.path.nodes()[k / 2].clone(),
        None => y.clone(),
    };
    let (xm, r4, _) = dist(x, &mid)?;
    Ok(TriangleDistances {
        xy,
        xz,
        yz,
        xm,
        max_residual: r1.max(r2).max(r3).max(r4),
    })
}

/// `d(x, m)^2 <= d(x,y)^2 / 2 + d(x,z)^2 / 2 - d(y,z)^2 / 4` for the
/// geodesic midpoint `m` of `y` and `z`.
pub fn npc_midpoint_check(
    x: &ScalarField,
    y: &ScalarField,
    z: &ScalarField,
    k: usize,
    tol: f64,
) -> Result<CheckResult> {
    let d = triangle_distances(x, y, z, k, tol)?;
    let lhs = d.xm * d.xm;
    let rhs = 0.5 * d.xy * d.xy + 0.5 * d.xz * d.xz - 0.25 * d.yz * d.yz;
    Ok(CheckResult::leq(
        "npc_midpoint",
        NPC,
        lhs,
        rhs,
        10.0 * d.max_residual + 1e-7,
    ))
}

pub fn triangle_check(d: &TriangleDistances) -> CheckResult {
    CheckResult::leq(
        "triangle_inequality",
        TRIANGLE,
        d.xz,
        d.xy + d.yz,
        10.0 * d.max_residual,
    )
}

#[derive(Clone, Debug, Serialize)]
pub struct RaySegment {
    /// Flow time of the target snapshot.
    pub t: f64,
    pub distance: f64,
    pub residual: f64,
    pub f_beta: f64,
    /// Smallest `frakJ_beta` over the nodes of the segment.
    pub min_j: f64,
    /// `E_beta` at the target snapshot.
    pub e_end: f64,
    /// `E_beta(target) / t^2`.
    pub effectiveness: f64,
    /// Sup-norm change of the unit initial direction from the previous segment.
    pub direction_change: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RayReport {
    pub critical_value: f64,
    pub segments: Vec<RaySegment>,
    pub checks: Vec<CheckResult>,
}

pub const RAY_SLOPE: &str = "semi-destabilising ray: end slope F_beta <= 0";
pub const RAY_LOWER: &str = "frakJ_beta bounded below along the ray by the critical value";
pub const RAY_ENERGY: &str = "E_beta at the ray end decays to the residual level";

/// Geodesic segments from `seed` to the flow snapshots at the given record
/// indices, with the certificates of a semi-destabilising ray.
pub fn ray_from_flow(
    trace: &FlowTrace,
    record_indices: &[usize],
    seed: &ScalarField,
    twist: &TwistData,
    k: usize,
    tol: f64,
    residual_tol: f64,
) -> Result<RayReport> {
    if trace.snapshots.len() != trace.records.len() {
        return Err(LabError::NotApplicable(
            "flow trace was recorded without snapshots".into(),
        ));
    }
    let last = trace
        .snapshots
        .last()
        .expect("trace has the initial record");
    let critical = KahlerState::new(last.clone())?;
    let critical_value = frak_j_beta(&critical, twist);
    let final_residual = trace.final_residual;

    let mut segments = Vec::new();
    let mut prev_dir: Option<ScalarField> = None;
    for &i in record_indices {
        let target = &trace.snapshots[i];
        let t = trace.records[i].t;
        let end = KahlerState::new(target.clone())?;
        let e_end = e_beta(&end, twist);
        let (distance, residual, f_beta, min_j, dir) = if target == seed {
            let v = frak_j_beta(&end, twist);
            (0.0, 0.0, 0.0, v, ScalarField::zeros(seed.grid()))
        } else {
            let geo = geodesic_segment(seed, target, k, tol)?;
            let f = f_beta_estimate(&geo, twist, residual_tol)?;
            let profile = functional_profile(&geo.path, twist)?;
            let min_j = profile.iter().copied().fold(f64::INFINITY, f64::min);
            let p = geo.path.nodes();
            let dir = p[1]
                .sub(&p[0])
                .scale(1.0 / (geo.path.dt() * geo.distance.max(f64::MIN_POSITIVE)));
            (geo.distance, geo.residual_sup, f, min_j, dir)
        };
        let direction_change = prev_dir
            .as_ref()
            .map_or(f64::NAN, |p| p.sub(&dir).sup_norm());
        prev_dir = Some(dir);
        segments.push(RaySegment {
            t,
            distance,
            residual,
            f_beta,
            min_j,
            e_end,
            effectiveness: if t > 0.0 { e_end / (t * t) } else { f64::NAN },
            direction_change,
        });
    }

    let mut checks = Vec::new();
    let worst_slope = segments
        .iter()
        .map(|s| s.f_beta)
        .fold(f64::NEG_INFINITY, f64::max);
    checks.push(CheckResult::leq(
        "ray_slope",
        RAY_SLOPE,
        worst_slope,
        0.0,
        1e-6,
    ));
    let lowest = segments
        .iter()
        .map(|s| s.min_j)
        .fold(f64::INFINITY, f64::min);
    checks.push(CheckResult::leq(
        "ray_lower_bound",
        RAY_LOWER,
        critical_value,
        lowest,
        1e-6,
    ));
    let e_final = e_beta(&critical, twist);
    checks.push(CheckResult::leq(
        "ray_terminal_energy",
        RAY_ENERGY,
        e_final,
        final_residual * final_residual,
        1e-12 * final_residual * final_residual + 1e-300,
    ));
    Ok(RayReport {
        critical_value,
        segments,
        checks,
    })
}

/// Whether the twist satisfies the sign hypothesis of the convexity results.
pub fn convexity_applies(twist: &TwistData) -> bool {
    matches!(
        twist.sign_class(),
        SignClass::NegativeDefinite | SignClass::NegativeSemiDefinite
    ) && twist.beta() >= 0.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::PotentialSampler;

    fn grid(n: usize, size: usize) -> GridSpec {
        GridSpec::new(n, size).unwrap()
    }

    #[test]
    fn energy_of_simple_paths() {
        let g = grid(1, 16);
        let phi = PotentialSampler::new(g, 1).potential(0.5);
        let constant = Path::new(vec![phi.clone(); 9], 1.0).unwrap();
        assert_eq!(path_energy(&constant).unwrap(), 0.0);
        let shifted = Path::linear(&phi, &phi.shift(0.7), 8).unwrap();
        assert!((path_energy(&shifted).unwrap() - 0.49).abs() < 1e-14);
    }

    #[test]
    fn energy_gradient_matches_finite_differences() {
        for (n, size) in [(1, 8), (1, 32), (2, 8), (2, 16)] {
            let g = grid(n, size);
            let mut s = PotentialSampler::new(g, 3);
            let a = s.potential(0.4);
            let b = s.potential(0.4);
            let mut nodes = Path::linear(&a, &b, 8).unwrap().nodes().to_vec();
            let bump = s.potential(0.2);
            nodes[3] = nodes[3].add(&bump);
            let dt = 1.0 / 8.0;
            let (_, grad) = energy_and_gradient(&nodes, dt).unwrap();
            let dir = s.potential(0.3);
            let eps = 1e-5;
            let eval = |e: f64| {
                let mut p = nodes.clone();
                p[3] = p[3].axpy(e, &dir);
                energy_and_gradient(&p, dt).unwrap().0
            };
            let fd = (eval(eps) - eval(-eps)) / (2.0 * eps);
            let an = integrate(&grad[2].mul(&dir));
            assert!(
                (fd - an).abs() < 1e-7 * an.abs().max(1e-3),
                "n={n}: {fd} vs {an}"
            );
        }
    }

    #[test]
    fn constant_shift_geodesic() {
        let g = grid(2, 8);
        let phi = PotentialSampler::new(g, 4).potential(0.4);
        let r = geodesic_segment(&phi, &phi.shift(-0.3), 8, 1e-9).unwrap();
        assert!((r.distance - 0.3).abs() < 1e-10);
        assert!(r.residual_sup < 1e-10);
        assert!(r.speed_variance < 1e-12);
    }

    #[test]
    fn small_mode_geodesic_and_symmetry() {
        let g = grid(1, 16);
        let eps = 1e-3;
        let phi1 = PotentialSampler::new(g, 5).potential(1.0).scale(eps);
        let zero = ScalarField::zeros(g);
        let r = geodesic_segment(&zero, &phi1, 8, 1e-12).unwrap();
        // The straight line is stationary to leading order, so its energy
        // matches the geodesic energy up to O(eps^4).
        let lap = volume_data(&phi1).unwrap().0.shift(-1.0);
        let sq = phi1.mul(&phi1);
        let oracle = integrate(&sq) + 0.5 * integrate(&sq.mul(&lap));
        assert!((r.energy - oracle).abs() < eps.powi(4));
        assert!(r.residual_sup < 1e-4 * eps);
        let back = geodesic_segment(&phi1, &zero, 8, 1e-12).unwrap();
        assert!((r.distance - back.distance).abs() < 1e-9);
    }

    #[test]
    fn too_few_segments() {
        let g = grid(1, 8);
        let z = ScalarField::zeros(g);
        assert!(matches!(
            geodesic_segment(&z, &z.shift(1.0), 4, 1e-8),
            Err(LabError::NotApplicable(_))
        ));
    }
}
