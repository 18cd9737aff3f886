//! The acceptance suite: eleven criteria, each a list of check rows.
//!
//! Flow runs are shared between criteria and computed on first use.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::OnceLock;

use kjlab_core::flow::{
    self, eigen_bound_check, gradient_identity_check, linear_oracle_n1, maximum_principle_check,
    monotonicity_check, oracle_residual, EigenBound, FlowConfig, FlowOutcome, FlowStatus,
};
use kjlab_core::functionals::{
    first_variation_ebeta, first_variation_ebeta_direct, frak_j_beta, FunctionalReport,
};
use kjlab_core::geodesic::{
    self, bridge_inequality_check, convexity_probe, geodesic_segment, npc_midpoint_check,
    triangle_check, triangle_distances, GeodesicResult,
};
use kjlab_core::random::PotentialSampler;
use kjlab_core::{CheckResult, GridSpec, Herm, KahlerState, LabError, ScalarField, TwistData};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::report::Row;
use crate::scenario::{Scenario, TaskConfig};
use crate::tasks::{self, variation_errors, worst_of};

pub const CONE_FIXTURE: &str = include_str!("../fixtures/cone_ok.json");
pub const NOT_ELLIPTIC_FIXTURE: &str = include_str!("../fixtures/not_elliptic.json");

const UNIQUE: &str = "critical metrics are unique up to a constant and share the critical value";
const LOWER_BOUND: &str = "frakJ_beta is bounded below by its critical value";
const CONSTANT_SHIFT: &str = "constant shifts are geodesics of length |c|";
const REFINEMENT: &str = "geodesic residual converges at second order in the time step";
const CONE_GATE: &str = "cone and ellipticity conditions gate flow convergence";

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteSettings {
    pub seed: u64,
    /// Grid size of the `n = 1` flow, variation, lower-bound and identity checks.
    pub n1_size: usize,
    /// Grid size of the `n = 2` variation and identity checks.
    pub n2_size: usize,
    pub variation_pairs: usize,
    pub flow_starts: usize,
    pub lower_bound_states: usize,
    pub refinement_size: usize,
    pub refinement_segments: Vec<usize>,
    /// Grid size and segment count of the bridge and triangle batches.
    pub geodesic_size: usize,
    pub geodesic_segments: usize,
    pub bridge_pairs: usize,
    pub triangles: usize,
    pub identity_states: usize,
    /// Include the `n = 2` parts (variations, shipped flow fixtures).
    pub n2_checks: bool,
}

impl Default for SuiteSettings {
    fn default() -> Self {
        Self {
            seed: 7,
            n1_size: 64,
            n2_size: 16,
            variation_pairs: 20,
            flow_starts: 5,
            lower_bound_states: 100,
            refinement_size: 64,
            refinement_segments: vec![8, 16, 32, 64],
            geodesic_size: 32,
            geodesic_segments: 16,
            bridge_pairs: 50,
            triangles: 20,
            identity_states: 200,
            n2_checks: true,
        }
    }
}

impl SuiteSettings {
    /// Defaults with the seed of the scenario and, for an `n = 1` grid, its size.
    pub fn for_scenario(sc: &Scenario) -> Result<Self> {
        let grid = sc.grid()?;
        let mut s = Self {
            seed: sc.seed,
            ..Self::default()
        };
        match grid.n() {
            1 => s.n1_size = grid.size(),
            _ => s.n2_size = grid.size(),
        }
        Ok(s)
    }

    /// Replaces the fields present in a JSON object.
    pub fn with_overrides(&self, overrides: &serde_json::Value) -> Result<Self> {
        let mut base = serde_json::to_value(self).expect("settings serialize");
        let (Some(map), Some(obj)) = (base.as_object_mut(), overrides.as_object()) else {
            return Err(CliError::Config("verify settings must be an object".into()));
        };
        for (k, v) in obj {
            if !map.contains_key(k) {
                return Err(CliError::Config(format!("unknown suite setting {k}")));
            }
            map.insert(k.clone(), v.clone());
        }
        let s: Self = serde_json::from_value(base).map_err(|e| CliError::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        for size in [
            self.n1_size,
            self.n2_size,
            self.refinement_size,
            self.geodesic_size,
        ] {
            GridSpec::new(1, size).map_err(|e| CliError::Config(e.to_string()))?;
        }
        if self.flow_starts == 0
            || self.refinement_segments.len() < 2
            || !self.geodesic_segments.is_multiple_of(2)
        {
            return Err(CliError::Config(
                "need a flow start, two refinement levels and an even segment count".into(),
            ));
        }
        Ok(())
    }

    fn seed_for(&self, stream: u64, i: usize) -> u64 {
        self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (stream << 32) ^ i as u64
    }

    fn sampler(&self, grid: GridSpec, stream: u64, i: usize) -> PotentialSampler {
        PotentialSampler::new(grid, self.seed_for(stream, i))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Criterion {
    pub id: usize,
    pub title: &'static str,
    pub rows: Vec<Row>,
    pub notes: Vec<String>,
    pub error: Option<String>,
}

impl Criterion {
    fn new(id: usize) -> Self {
        Self {
            id,
            title: TITLES[id - 1],
            rows: Vec::new(),
            notes: Vec::new(),
            error: None,
        }
    }

    pub fn pass(&self) -> bool {
        self.error.is_none() && self.rows.iter().all(|r| !r.failed())
    }

    fn assert(&mut self, c: CheckResult) {
        self.rows.push(Row::asserted(c));
    }

    fn report(&mut self, c: CheckResult) {
        self.rows.push(Row::reported(c));
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }
}

pub const TITLES: [&str; 11] = [
    "variation formulas match finite differences",
    "gradient-flow identity and monotonicity",
    "maximum principle",
    "n = 1 oracle equivalence",
    "critical value equality and uniqueness",
    "lower bound",
    "geodesic certificates",
    "bridge inequality",
    "NPC midpoint inequality",
    "identity suite",
    "cone-condition gating",
];

/// The fixed `n = 1` twist: `chi = -1 + i∂∂̄psi` with a random `psi` whose
/// Hessian radius is 0.3, and `beta = 0.4`.
pub fn n1_twist(settings: &SuiteSettings, size: usize) -> kjlab_core::Result<TwistData> {
    let grid = GridSpec::new(1, size)?;
    let psi = settings.sampler(grid, 1, 0).potential(0.3);
    TwistData::new(Herm::diag(&[-1.0]), psi, 0.4, 1.0)
}

fn n2_twist(settings: &SuiteSettings) -> kjlab_core::Result<TwistData> {
    let grid = GridSpec::new(2, settings.n2_size)?;
    let psi = settings.sampler(grid, 2, 0).potential(0.2);
    TwistData::new(Herm::diag(&[-1.0, -0.8]), psi, 0.4, 1.0)
}

/// Potentials built from three low Fourier modes, used where the spatial
/// truncation error must stay far below the time discretization error.
pub fn low_mode_endpoints(grid: GridSpec) -> (ScalarField, ScalarField) {
    let phi0 = ScalarField::from_fn(grid, |x| 0.1 / (PI * PI) * (2.0 * PI * x[0]).cos());
    let phi1 = ScalarField::from_fn(grid, |x| {
        0.12 / (PI * PI) * (2.0 * PI * x[1]).sin()
            + 0.05 / (2.0 * PI * PI) * (2.0 * PI * (x[0] + x[1])).cos()
    });
    (phi0, phi1)
}

struct N1Flows {
    twist: TwistData,
    /// Base run (cfl 0.4), its refinement (cfl 0.2) from the same start, then
    /// runs from further random starts.
    runs: Vec<(String, FlowOutcome)>,
    oracle: ScalarField,
}

struct N2Fixture {
    twist: TwistData,
    outcome: FlowOutcome,
}

/// Lazily computed flows shared by several criteria.
pub struct Suite {
    pub settings: SuiteSettings,
    n1: OnceLock<std::result::Result<N1Flows, String>>,
    n2: OnceLock<std::result::Result<N2Fixture, String>>,
}

fn fixture(text: &str) -> Result<Scenario> {
    Scenario::from_json(text, Path::new("."))
}

fn fixture_flow(sc: &Scenario) -> Result<(TwistData, ScalarField, FlowConfig)> {
    let TaskConfig::Flow(task) = &sc.task else {
        return Err(CliError::Config("fixture is not a flow scenario".into()));
    };
    Ok((
        sc.twist()?,
        sc.potential(&task.start, 1)?,
        task.config.clone(),
    ))
}

impl Suite {
    pub fn new(settings: SuiteSettings) -> Self {
        Self {
            settings,
            n1: OnceLock::new(),
            n2: OnceLock::new(),
        }
    }

    fn n1(&self) -> std::result::Result<&N1Flows, String> {
        self.n1
            .get_or_init(|| self.compute_n1().map_err(|e| e.to_string()))
            .as_ref()
            .map_err(Clone::clone)
    }

    fn n2(&self) -> std::result::Result<&N2Fixture, String> {
        self.n2
            .get_or_init(|| self.compute_n2().map_err(|e| e.to_string()))
            .as_ref()
            .map_err(Clone::clone)
    }

    fn compute_n1(&self) -> Result<N1Flows> {
        let s = &self.settings;
        let twist = n1_twist(s, s.n1_size).map_err(CliError::lab("n = 1 twist"))?;
        let oracle = linear_oracle_n1(&twist).map_err(CliError::lab("n = 1 oracle"))?;
        let grid = twist.grid();
        let base = FlowConfig {
            tol_residual: 1e-9,
            record_every: 1,
            ..FlowConfig::default()
        };
        let mut runs = Vec::new();
        for i in 0..s.flow_starts {
            let phi0 = s.sampler(grid, 3, i).potential(0.3);
            let config = if i == 0 {
                base.clone()
            } else {
                FlowConfig {
                    record_every: 50,
                    ..base.clone()
                }
            };
            let out = flow::run(&phi0, &twist, &config)
                .map_err(CliError::lab(format!("n = 1 flow {i}")))?;
            runs.push((format!("start {i}"), out));
            if i == 0 {
                let refined = FlowConfig {
                    cfl: 0.5 * base.cfl,
                    ..base.clone()
                };
                let out = flow::run(&phi0, &twist, &refined)
                    .map_err(CliError::lab("refined n = 1 flow"))?;
                runs.push(("start 0 refined".to_string(), out));
            }
        }
        Ok(N1Flows {
            twist,
            runs,
            oracle,
        })
    }

    fn compute_n2(&self) -> Result<N2Fixture> {
        let (twist, phi0, config) = fixture_flow(&fixture(CONE_FIXTURE)?)?;
        let outcome =
            flow::run(&phi0, &twist, &config).map_err(CliError::lab("n = 2 cone fixture"))?;
        Ok(N2Fixture { twist, outcome })
    }

    pub fn run(&self, id: usize) -> Criterion {
        let mut c = Criterion::new(id);
        let result = match id {
            1 => self.variations(&mut c),
            2 => self.identity(&mut c),
            3 => self.maximum_principle(&mut c),
            4 => self.oracle(&mut c),
            5 => self.uniqueness(&mut c),
            6 => self.lower_bound(&mut c),
            7 => self.geodesics(&mut c),
            8 => self.bridge(&mut c),
            9 => self.npc(&mut c),
            10 => self.identities(&mut c),
            11 => self.cone(&mut c),
            _ => Err(format!("no criterion {id}")),
        };
        if let Err(e) = result {
            c.error = Some(e);
        }
        c
    }

    fn variations(&self, c: &mut Criterion) -> std::result::Result<(), String> {
        let s = &self.settings;
        let mut cases = vec![(1, n1_twist(s, s.n1_size).map_err(|e| e.to_string())?)];
        if s.n2_checks {
            cases.push((2, n2_twist(s).map_err(|e| e.to_string())?));
        }
        for (n, twist) in cases {
            let grid = twist.grid();
            let (mut j, mut e, mut ibp) = (vec![], vec![], vec![]);
            for i in 0..s.variation_pairs {
                let phi = s.sampler(grid, 4, i).potential(0.3);
                let u = s.sampler(grid, 5, i).potential(0.5);
                let v = variation_errors(&phi, &u, &twist, 1e-3).map_err(|e| e.to_string())?;
                j.push(CheckResult::leq(
                    "first_variation_frakJ",
                    tasks::FIRST_VARIATION_J,
                    v.jbeta,
                    0.0,
                    1e-6,
                ));
                e.push(CheckResult::leq(
                    "first_variation_E",
                    tasks::FIRST_VARIATION_E,
                    v.ebeta,
                    0.0,
                    1e-5,
                ));
                let st = KahlerState::new(phi).map_err(|e| e.to_string())?;
                let direct = first_variation_ebeta_direct(&st, &twist, &u);
                let rel = (first_variation_ebeta(&st, &twist, &u) - direct).abs() / direct.abs();
                ibp.push(CheckResult::leq(
                    "first_variation_E_ibp",
                    tasks::FIRST_VARIATION_E,
                    rel,
                    0.0,
                    1e-5,
                ));
            }
            let tag = format!("n{n}_N{}", grid.size());
            if let Some(r) = worst_of(&format!("first_variation_frakJ_{tag}"), &j) {
                c.assert(r);
            }
            if let Some(r) = worst_of(&format!("first_variation_E_{tag}"), &e) {
                c.assert(r);
            }
            if let Some(r) = worst_of(&format!("first_variation_E_ibp_form_{tag}"), &ibp) {
                c.report(r);
            }
        }
        Ok(())
    }

    fn identity(&self, c: &mut Criterion) -> std::result::Result<(), String> {
        let n1 = self.n1()?;
        let base = gradient_identity_check(&n1.runs[0].1.trace, 0.01);
        let fine = gradient_identity_check(&n1.runs[1].1.trace, 0.01);
        c.note(format!(
            "n = 1 identity error: {:.3e} at cfl 0.4, {:.3e} at cfl 0.2 (ratio {:.2})",
            base.lhs,
            fine.lhs,
            base.lhs / fine.lhs
        ));
        let mut fine = fine;
        fine.name = "gradient_identity_refined_n1".into();
        c.assert(fine);
        let mut base = base;
        base.name = "gradient_identity_base_n1".into();
        c.report(base);
        for (name, out) in &n1.runs {
            let mut m = monotonicity_check(&out.trace, 1e-9);
            m.name = format!("monotone_frakJ_n1_{}", name.replace(' ', "_"));
            c.assert(m);
        }
        if self.settings.n2_checks {
            let n2 = self.n2()?;
            let mut m = monotonicity_check(&n2.outcome.trace, 1e-9);
            m.name = "monotone_frakJ_n2_fixture".into();
            c.assert(m);
            let mut id = gradient_identity_check(&n2.outcome.trace, 0.01);
            id.name = "gradient_identity_base_n2_fixture".into();
            c.report(id);
        }
        Ok(())
    }

    fn maximum_principle(&self, c: &mut Criterion) -> std::result::Result<(), String> {
        let n1 = self.n1()?;
        let mut traces: Vec<(String, &FlowOutcome, &TwistData)> = n1
            .runs
            .iter()
            .map(|(name, out)| (format!("n1_{}", name.replace(' ', "_")), out, &n1.twist))
            .collect();
        if self.settings.n2_checks {
            let n2 = self.n2()?;
            traces.push(("n2_fixture".into(), &n2.outcome, &n2.twist));
        }
        for (name, out, twist) in traces {
            if out.trace.status != FlowStatus::Converged {
                return Err(format!("flow {name} did not converge"));
            }
            let mut m = maximum_principle_check(&out.trace);
            m.name = format!("maximum_principle_{name}");
            c.assert(m);
            for (variant, asserted) in [(EigenBound::Corrected, true), (EigenBound::Literal, false)]
            {
                if let Ok(mut e) = eigen_bound_check(&out.trace, twist, variant) {
                    e.name = format!("{}_{name}", e.name);
                    if asserted {
                        c.assert(e);
                    } else {
                        c.report(e);
                    }
                }
            }
        }
        Ok(())
    }

    fn oracle(&self, c: &mut Criterion) -> std::result::Result<(), String> {
        let n1 = self.n1()?;
        let os = KahlerState::new(n1.oracle.clone()).map_err(|e| e.to_string())?;
        c.assert(CheckResult::leq(
            "oracle_residual",
            tasks::ORACLE,
            oracle_residual(&os, &n1.twist),
            0.0,
            1e-12,
        ));
        for (name, out) in &n1.runs[..2] {
            let diff = out
                .state
                .phi()
                .centered()
                .sub(&n1.oracle.centered())
                .sup_norm();
            c.assert(CheckResult::leq(
                &format!("flow_matches_oracle_{}", name.replace(' ', "_")),
                tasks::ORACLE,
                diff,
                0.0,
                1e-6,
            ));
        }
        Ok(())
    }

    fn uniqueness(&self, c: &mut Criterion) -> std::result::Result<(), String> {
        let n1 = self.n1()?;
        let runs: Vec<&FlowOutcome> = n1
            .runs
            .iter()
            .filter(|(name, _)| !name.ends_with("refined"))
            .map(|(_, o)| o)
            .collect();
        let values: Vec<f64> = runs
            .iter()
            .map(|o| frak_j_beta(&o.state, &n1.twist))
            .collect();
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        c.assert(CheckResult::leq(
            "critical_value_spread",
            UNIQUE,
            hi - lo,
            0.0,
            1e-6,
        ));
        let reference = runs[0].state.phi().centered();
        let spread = runs
            .iter()
            .map(|o| o.state.phi().centered().sub(&reference).sup_norm())
            .fold(0.0, f64::max);
        c.assert(CheckResult::leq(
            "critical_potential_spread",
            UNIQUE,
            spread,
            0.0,
            1e-5,
        ));
        c.note(format!(
            "{} starts, critical values in [{lo:.12e}, {hi:.12e}]",
            runs.len()
        ));
        Ok(())
    }

    fn lower_bound(&self, c: &mut Criterion) -> std::result::Result<(), String> {
        let s = &self.settings;
        let n1 = self.n1()?;
        let critical = frak_j_beta(
            &KahlerState::new(n1.oracle.clone()).map_err(|e| e.to_string())?,
            &n1.twist,
        );
        let mut cases = vec![("n1", &n1.twist, critical)];
        if s.n2_checks {
            let n2 = self.n2()?;
            cases.push((
                "n2_fixture",
                &n2.twist,
                frak_j_beta(&n2.outcome.state, &n2.twist),
            ));
        }
        for (tag, twist, critical) in cases {
            let grid = twist.grid();
            let mut sampler = s.sampler(grid, 6, 0);
            let mut lowest = f64::INFINITY;
            for _ in 0..s.lower_bound_states {
                let amp = sampler.uniform(0.05, 0.8);
                let phi = sampler.potential(amp);
                let st = KahlerState::new(phi).map_err(|e| e.to_string())?;
                lowest = lowest.min(frak_j_beta(&st, twist));
            }
            c.assert(
                CheckResult::leq(
                    &format!("lower_bound_{tag}"),
                    LOWER_BOUND,
                    critical,
                    lowest,
                    1e-8,
                )
                .with_detail(format!("{} states", s.lower_bound_states)),
            );
        }
        Ok(())
    }

    fn geodesics(&self, c: &mut Criterion) -> std::result::Result<(), String> {
        let s = &self.settings;
        let err = |e: LabError| e.to_string();
        // Constant shift.
        let grid = GridSpec::new(1, s.n1_size).map_err(err)?;
        let phi0 = s.sampler(grid, 7, 0).potential(0.3);
        let shift = 0.7;
        let geo = geodesic_segment(&phi0, &phi0.shift(shift), 8, 1e-10).map_err(err)?;
        c.assert(CheckResult::close(
            "constant_shift_distance",
            CONSTANT_SHIFT,
            geo.distance,
            shift,
            1e-10,
        ));
        c.assert(CheckResult::leq(
            "constant_shift_residual",
            CONSTANT_SHIFT,
            geo.residual_sup,
            0.0,
            1e-10,
        ));

        // Refinement on low-mode endpoints.
        let grid = GridSpec::new(1, s.refinement_size).map_err(err)?;
        let twist = n1_twist(s, s.refinement_size).map_err(err)?;
        let (a, b) = low_mode_endpoints(grid);
        let mut solved: Vec<(usize, GeodesicResult)> = Vec::new();
        for &k in &s.refinement_segments {
            let g = geodesic_segment(&a, &b, k, 1e-10).map_err(err)?;
            c.note(format!(
                "K = {k}: distance {:.12e}, residual {:.3e}",
                g.distance, g.residual_sup
            ));
            solved.push((k, g));
        }
        let xs: Vec<f64> = solved.iter().map(|(k, _)| (*k as f64).ln()).collect();
        let ys: Vec<f64> = solved.iter().map(|(_, g)| g.residual_sup.ln()).collect();
        let order = -least_squares_slope(&xs, &ys);
        c.assert(CheckResult::leq(
            "geodesic_refinement_order",
            REFINEMENT,
            1.8,
            order,
            0.0,
        ));
        let speeds: Vec<CheckResult> = solved
            .iter()
            .map(|(_, g)| {
                CheckResult::leq("speed_constancy", tasks::SPEED, g.speed_variance, 0.0, 1e-3)
            })
            .collect();
        c.assert(worst_of("speed_constancy", &speeds).expect("at least two levels"));
        let mut convex = Vec::new();
        for (_, g) in &solved {
            convex.push(convexity_probe(g, &twist, 1e-2).map_err(err)?);
        }
        c.assert(worst_of("convexity", &convex).expect("at least two levels"));
        Ok(())
    }

    fn bridge(&self, c: &mut Criterion) -> std::result::Result<(), String> {
        let s = &self.settings;
        let twist = n1_twist(s, s.geodesic_size).map_err(|e| e.to_string())?;
        let grid = twist.grid();
        let mut sampler = s.sampler(grid, 8, 0);
        let mut checks = Vec::new();
        for _ in 0..s.bridge_pairs {
            let (a0, a1) = (sampler.uniform(0.1, 0.4), sampler.uniform(0.1, 0.4));
            let phi0 = sampler.potential(a0);
            let phi1 = sampler.potential(a1);
            checks.push(
                bridge_inequality_check(&phi0, &phi1, &twist, s.geodesic_segments, 1e-9)
                    .map_err(|e| e.to_string())?,
            );
        }
        if let Some(r) = worst_of("bridge_inequality", &checks) {
            c.assert(r);
        }
        let identical = bridge_inequality_check(
            &twist.psi().scale(0.0),
            &twist.psi().scale(0.0),
            &twist,
            8,
            1e-9,
        )
        .map_err(|e| e.to_string())?;
        c.assert(CheckResult {
            name: "bridge_inequality_equal_endpoints".into(),
            ..identical
        });
        Ok(())
    }

    fn npc(&self, c: &mut Criterion) -> std::result::Result<(), String> {
        let s = &self.settings;
        let err = |e: LabError| e.to_string();
        let grid = GridSpec::new(1, s.geodesic_size).map_err(err)?;
        let k = s.geodesic_segments;
        let mut sampler = s.sampler(grid, 9, 0);
        let (mut npc, mut tri) = (Vec::new(), Vec::new());
        for _ in 0..s.triangles {
            let amps = [
                sampler.uniform(0.1, 0.4),
                sampler.uniform(0.1, 0.4),
                sampler.uniform(0.1, 0.4),
            ];
            let [x, y, z] = amps.map(|a| sampler.potential(a));
            let d = triangle_distances(&x, &y, &z, k, 1e-9).map_err(err)?;
            let lhs = d.xm * d.xm;
            let rhs = 0.5 * d.xy * d.xy + 0.5 * d.xz * d.xz - 0.25 * d.yz * d.yz;
            npc.push(CheckResult::leq(
                "npc_midpoint",
                geodesic::NPC,
                lhs,
                rhs,
                10.0 * d.max_residual + 1e-7,
            ));
            tri.push(triangle_check(&d));
        }
        if let Some(r) = worst_of("npc_midpoint", &npc) {
            c.assert(r);
        }
        if let Some(r) = worst_of("triangle_inequality", &tri) {
            c.assert(r);
        }
        let zero = ScalarField::zeros(grid);
        let d = triangle_distances(&zero, &zero.shift(0.5), &zero.shift(-0.5), k, 1e-10)
            .map_err(err)?;
        let lhs = d.xm * d.xm;
        let rhs = 0.5 * d.xy * d.xy + 0.5 * d.xz * d.xz - 0.25 * d.yz * d.yz;
        c.assert(CheckResult::close(
            "npc_collinear_constants_equality",
            geodesic::NPC,
            lhs,
            rhs,
            1e-9,
        ));
        let general = npc_midpoint_check(&zero, &zero.shift(0.5), &zero.shift(-0.5), k, 1e-10)
            .map_err(err)?;
        c.assert(CheckResult {
            name: "npc_collinear_constants".into(),
            ..general
        });
        Ok(())
    }

    fn identities(&self, c: &mut Criterion) -> std::result::Result<(), String> {
        let s = &self.settings;
        let mut cases = vec![n1_twist(s, s.n1_size).map_err(|e| e.to_string())?];
        if s.n2_checks {
            cases.push(n2_twist(s).map_err(|e| e.to_string())?);
        }
        let per_case = s.identity_states.div_ceil(cases.len());
        for twist in cases {
            let grid = twist.grid();
            let tag = format!("n{}_N{}", grid.n(), grid.size());
            let mut sampler = s.sampler(grid, 10, 0);
            let (mut ksplit, mut idual, mut ij) = (vec![], vec![], vec![]);
            for _ in 0..per_case {
                let amp = sampler.uniform(0.05, 0.9);
                let st = KahlerState::new(sampler.potential(amp)).map_err(|e| e.to_string())?;
                let r = FunctionalReport::evaluate(&st, &twist);
                let k = &r.consistency;
                ksplit.push(CheckResult::leq(
                    "k_split",
                    tasks::K_SPLIT,
                    k["k_split"].abs(),
                    0.0,
                    1e-10,
                ));
                idual.push(CheckResult::leq(
                    "I_dual",
                    tasks::I_DUAL,
                    k["I_dual"].abs(),
                    0.0,
                    1e-10,
                ));
                ij.push(CheckResult::leq(
                    "IJ_bounds",
                    tasks::IJ_BOUNDS,
                    k["IJ_lower"].max(k["IJ_upper"]),
                    0.0,
                    1e-12,
                ));
            }
            for (name, checks) in [("k_split", ksplit), ("I_dual", idual), ("IJ_bounds", ij)] {
                if let Some(r) = worst_of(&format!("{name}_{tag}"), &checks) {
                    c.assert(r);
                }
            }
        }
        Ok(())
    }

    fn cone(&self, c: &mut Criterion) -> std::result::Result<(), String> {
        if !self.settings.n2_checks {
            c.note("n = 2 fixtures skipped by settings");
            return Ok(());
        }
        let n2 = self.n2()?;
        let trace = &n2.outcome.trace;
        let cone = trace.cone.as_ref().ok_or("n = 2 run has no cone report")?;
        c.assert(
            CheckResult::leq("fixture_cone_margin", CONE_GATE, 0.0, cone.cone_margin, 0.0)
                .fail_if(cone.cone_margin <= 0.0),
        );
        c.assert(
            CheckResult::leq(
                "fixture_ellipticity_margin",
                CONE_GATE,
                0.0,
                cone.ellipticity_margin,
                0.0,
            )
            .fail_if(cone.ellipticity_margin <= 0.0),
        );
        c.assert(
            CheckResult::leq(
                "fixture_converges",
                CONE_GATE,
                trace.final_residual_full,
                1e-6,
                0.0,
            )
            .fail_if(trace.status != FlowStatus::Converged || trace.final_residual_full >= 1e-6)
            .with_detail(format!("{:?} after {} steps", trace.status, trace.steps)),
        );
        c.note(format!(
            "fixture: {} steps, projected residual {:.3e}, full residual {:.3e}",
            trace.steps, trace.final_residual, trace.final_residual_full
        ));

        let sc = fixture(NOT_ELLIPTIC_FIXTURE).map_err(|e| e.to_string())?;
        let (twist, phi0, config) = fixture_flow(&sc).map_err(|e| e.to_string())?;
        let first = flow::run(&phi0, &twist, &config).err();
        let second = flow::run(&phi0, &twist, &config).err();
        let expected = matches!(
            first,
            Some(LabError::NotElliptic { .. } | LabError::StepRejected { .. })
        );
        let detail = format!("{first:?}");
        let check = CheckResult::close(
            "violating_fixture_reports_not_elliptic",
            CONE_GATE,
            1.0,
            1.0,
            0.0,
        )
        .fail_if(!expected || first != second)
        .with_detail(detail);
        c.assert(check);
        Ok(())
    }
}

trait FailIf {
    fn fail_if(self, cond: bool) -> Self;
}

impl FailIf for CheckResult {
    fn fail_if(self, cond: bool) -> Self {
        if cond {
            self.fail()
        } else {
            self
        }
    }
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Runs every criterion in order.
pub fn run_all(settings: &SuiteSettings) -> Vec<Criterion> {
    let suite = Suite::new(settings.clone());
    (1..=11).map(|id| suite.run(id)).collect()
}
