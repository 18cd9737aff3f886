//! Task runners behind the CLI verbs.

use std::path::Path;

use kjlab_core::flow::{
    self, eigen_bound_check, gradient_identity_check, linear_oracle_n1, maximum_principle_check,
    monotonicity_check, oracle_residual, EigenBound, FlowStatus,
};
use kjlab_core::functionals::{
    along, e_beta, first_variation_ebeta_direct, first_variation_jbeta, frak_j_beta,
    FunctionalReport,
};
use kjlab_core::geodesic::{
    self, convexity_applies, convexity_probe, functional_profile, geodesic_defect,
    geodesic_segment, GeodesicResult,
};
use kjlab_core::random::PotentialSampler;
use kjlab_core::{CheckResult, KahlerState, ScalarField, TwistData};
use serde_json::json;

use crate::error::{CliError, Result};
use crate::report::{csv_table, OutputDir, Row, Summary};
use crate::scenario::{
    FlowTask, FunctionalsTask, GeodesicTask, Scenario, TaskConfig, TaskKind, VerifyTask,
};
use crate::suite;

pub const FLOW_CONVERGED: &str = "negative gradient flow converges to a critical metric";
pub const ORACLE: &str = "n = 1 critical equation is linear in the Hessian";
pub const SPEED: &str = "geodesics have constant speed";
pub const GEODESIC_EQUATION: &str = "phi_tt = |d phi_t|^2 along geodesics";
pub const SYMMETRY: &str = "geodesic distance is symmetric";
pub const K_SPLIT: &str = "twisted K-energy splits as E - beta J + frakJ_beta";
pub const I_DUAL: &str = "dual formulas for Aubin's I agree";
pub const IJ_BOUNDS: &str = "I/(n+1) <= J <= n I/(n+1)";
pub const FIRST_VARIATION_J: &str = "first variation of frakJ_beta is -mean(u H D)";
pub const FIRST_VARIATION_E: &str = "first variation of E_beta";

/// Runs `scenario` as the verb `verb`, writing artifacts into `out`.
///
/// Errors after the output directory exists are recorded in
/// `summary.json` and reflected in the exit code of the returned summary.
pub fn run_scenario(scenario: &Scenario, verb: TaskKind, out: &Path) -> Result<Summary> {
    if scenario.task.kind() != verb {
        return Err(CliError::Config(format!(
            "scenario task is {} but the verb is {}",
            scenario.task.kind().name(),
            verb.name()
        )));
    }
    let dir = OutputDir::create(out)?;
    let mut summary = Summary::new(
        verb.name(),
        scenario.name.clone(),
        scenario.grid()?,
        scenario.seed,
    );
    let result = match &scenario.task {
        TaskConfig::Functionals(t) => run_functionals(scenario, t, &dir, &mut summary),
        TaskConfig::Flow(t) => run_flow(scenario, t, &dir, &mut summary),
        TaskConfig::Geodesic(t) => run_geodesic(scenario, t, &dir, &mut summary),
        TaskConfig::Verify(t) => run_verify(scenario, t, &mut summary),
    };
    if let Err(e) = result {
        summary.set_error(&e);
    }
    dir.write_summary(&summary)?;
    Ok(summary)
}

fn state(phi: &ScalarField, what: &str) -> Result<KahlerState> {
    KahlerState::new(phi.clone()).map_err(CliError::lab(what.to_string()))
}

/// Largest relative deviation of the analytic first variations from
/// fourth-order centered differences along `u`.
pub struct VariationErrors {
    pub jbeta: f64,
    pub ebeta: f64,
}

pub fn variation_errors(
    phi: &ScalarField,
    u: &ScalarField,
    twist: &TwistData,
    step: f64,
) -> kjlab_core::Result<VariationErrors> {
    let s = KahlerState::new(phi.clone())?;
    let fd = |f: &dyn Fn(&KahlerState) -> f64| -> kjlab_core::Result<f64> {
        let v = |t: f64| along(phi, u, t, f);
        Ok((v(-2.0 * step)? - 8.0 * v(-step)? + 8.0 * v(step)? - v(2.0 * step)?) / (12.0 * step))
    };
    let rel = |approx: f64, exact: f64| (approx - exact).abs() / exact.abs().max(1e-300);
    let jb = fd(&|s| frak_j_beta(s, twist))?;
    let eb = fd(&|s| e_beta(s, twist))?;
    Ok(VariationErrors {
        jbeta: rel(jb, first_variation_jbeta(&s, twist, u)),
        ebeta: rel(eb, first_variation_ebeta_direct(&s, twist, u)),
    })
}

/// Folds per-item checks into one row that passes iff all of them do and
/// shows the worst item.
pub fn worst_of(name: &str, checks: &[CheckResult]) -> Option<CheckResult> {
    let excess = |c: &CheckResult| {
        if c.lhs.is_nan() || c.rhs.is_nan() {
            f64::INFINITY
        } else {
            c.lhs - c.rhs - c.tolerance
        }
    };
    let (idx, worst) = checks
        .iter()
        .enumerate()
        .max_by(|a, b| excess(a.1).total_cmp(&excess(b.1)))?;
    let mut row = worst.clone();
    row.name = name.to_string();
    row.pass = checks.iter().all(|c| c.pass);
    row.worst_index = Some(idx);
    row.detail = format!("{} items, worst shown", checks.len());
    Some(row)
}

fn run_functionals(
    sc: &Scenario,
    task: &FunctionalsTask,
    dir: &OutputDir,
    summary: &mut Summary,
) -> Result<()> {
    let twist = sc.twist()?;
    summary.warnings = twist.warnings();
    let mut potentials = Vec::new();
    for (i, p) in task.potentials.iter().enumerate() {
        potentials.push(sc.potential(p, 10 + i as u64)?);
    }
    let grid = sc.grid()?;
    for i in 0..task.random {
        potentials.push(
            PotentialSampler::new(grid, sc.derived_seed(100 + i as u64)).potential(task.amplitude),
        );
    }

    let mut reports = Vec::new();
    let mut rows = Vec::new();
    let (mut ksplit, mut idual, mut ij, mut var_j, mut var_e) =
        (vec![], vec![], vec![], vec![], vec![]);
    for (i, phi) in potentials.iter().enumerate() {
        let s = state(phi, &format!("potential {i}"))?;
        let r = FunctionalReport::evaluate(&s, &twist);
        let c = &r.consistency;
        ksplit.push(CheckResult::leq(
            "k_split",
            K_SPLIT,
            c["k_split"].abs(),
            0.0,
            1e-10,
        ));
        idual.push(CheckResult::leq(
            "I_dual",
            I_DUAL,
            c["I_dual"].abs(),
            0.0,
            1e-10,
        ));
        ij.push(CheckResult::leq(
            "IJ_bounds",
            IJ_BOUNDS,
            c["IJ_lower"].max(c["IJ_upper"]),
            0.0,
            1e-12,
        ));
        if task.variations {
            let u = PotentialSampler::new(grid, sc.derived_seed(1000 + i as u64)).potential(0.5);
            let v = variation_errors(phi, &u, &twist, 1e-3)
                .map_err(CliError::lab(format!("variations at {i}")))?;
            var_j.push(CheckResult::leq(
                "first_variation_frakJ",
                FIRST_VARIATION_J,
                v.jbeta,
                0.0,
                1e-6,
            ));
            var_e.push(CheckResult::leq(
                "first_variation_E",
                FIRST_VARIATION_E,
                v.ebeta,
                0.0,
                1e-5,
            ));
        }
        let mut row = vec![i as f64];
        row.extend(
            r.csv_row()
                .split(',')
                .map(|v| v.parse::<f64>().unwrap_or(f64::NAN)),
        );
        rows.push(row);
        if task.write_fields {
            dir.write_field(&format!("phi_{i:04}.field"), phi)?;
        }
        reports.push(r);
    }
    for (name, checks) in [
        ("k_split", ksplit),
        ("I_dual", idual),
        ("IJ_bounds", ij),
        ("first_variation_frakJ", var_j),
        ("first_variation_E", var_e),
    ] {
        if let Some(c) = worst_of(name, &checks) {
            summary.push(Row::asserted(c));
        }
    }
    let header = format!("index,{}", FunctionalReport::CSV_HEADER);
    dir.write_text("functionals.csv", &csv_table(&header, rows))?;
    summary.results = json!({ "reports": reports });
    Ok(())
}

fn run_flow(sc: &Scenario, task: &FlowTask, dir: &OutputDir, summary: &mut Summary) -> Result<()> {
    let twist = sc.twist()?;
    summary.warnings = twist.warnings();
    let grid = sc.grid()?;
    let oracle = if task.oracle && grid.n() == 1 {
        Some(linear_oracle_n1(&twist).map_err(CliError::lab("spectral oracle"))?)
    } else {
        None
    };
    let phi0 = sc.potential(&task.start, 1)?;
    let mut config = task.config.clone();
    config.keep_snapshots |= task.write_snapshots || task.ray.is_some();
    let out = flow::run(&phi0, &twist, &config).map_err(CliError::lab("flow"))?;
    let trace = &out.trace;

    dir.write_text("flow.csv", &trace.to_csv())?;
    dir.write_field("final_phi.field", out.state.phi())?;
    if task.write_snapshots {
        for (i, phi) in trace.snapshots.iter().enumerate() {
            dir.write_field(&format!("snapshot_{i:05}.field"), phi)?;
        }
    }

    summary.push(Row::asserted(
        CheckResult::leq(
            "converged",
            FLOW_CONVERGED,
            trace.final_residual,
            config.tol_residual,
            0.0,
        )
        .with_detail(format!("{:?} after {} steps", trace.status, trace.steps)),
    ));
    summary.push(Row::asserted(maximum_principle_check(trace)));
    summary.push(Row::asserted(monotonicity_check(trace, 1e-9)));
    summary.push(Row::reported(gradient_identity_check(trace, 0.01)));
    for (variant, asserted) in [(EigenBound::Corrected, true), (EigenBound::Literal, false)] {
        // Not applicable unless chi < 0 and the bound's denominator is positive.
        if let Ok(c) = eigen_bound_check(trace, &twist, variant) {
            summary.push(if asserted {
                Row::asserted(c)
            } else {
                Row::reported(c)
            });
        }
    }
    if let Some(oracle) = &oracle {
        let os = state(oracle, "oracle")?;
        summary.push(Row::asserted(CheckResult::leq(
            "oracle_residual",
            ORACLE,
            oracle_residual(&os, &twist),
            0.0,
            1e-12,
        )));
        let diff = out
            .state
            .phi()
            .centered()
            .sub(&oracle.centered())
            .sup_norm();
        summary.push(Row::asserted(CheckResult::leq(
            "flow_matches_oracle",
            ORACLE,
            diff,
            0.0,
            1e-6,
        )));
    }

    let mut results = json!({
        "status": trace.status,
        "steps": trace.steps,
        "rejections": trace.rejections,
        "final_residual": trace.final_residual,
        "final_residual_full": trace.final_residual_full,
        "c_beta": trace.c_beta,
        "initial_min_dot": trace.initial_min_dot,
        "initial_max_dot": trace.initial_max_dot,
        "final_frakJ_beta": trace.records.last().map(|r| r.j_beta),
        "records": trace.records.len(),
        "cone": trace.cone,
    });

    if let Some(ray) = &task.ray {
        if trace.status != FlowStatus::Converged {
            return Err(CliError::Config("a ray needs a converged flow".into()));
        }
        let seed = sc.potential(&ray.seed, 4)?;
        let last = trace.records.len() - 1;
        let targets = ray.targets.clamp(1, last.max(1));
        let indices: Vec<usize> = (1..=targets)
            .map(|k| (k * last).div_ceil(targets))
            .collect();
        let report = geodesic::ray_from_flow(
            trace,
            &indices,
            &seed,
            &twist,
            ray.segments,
            ray.tol,
            ray.residual_tol,
        )
        .map_err(CliError::lab("ray from flow"))?;
        summary.extend(report.checks.iter().cloned().map(Row::asserted));
        let rows = report.segments.iter().map(|s| {
            vec![
                s.t,
                s.distance,
                s.residual,
                s.f_beta,
                s.min_j,
                s.e_end,
                s.effectiveness,
                s.direction_change,
            ]
        });
        dir.write_text(
            "ray.csv",
            &csv_table(
                "t,distance,residual,F_beta,min_frakJ_beta,E_end,effectiveness,direction_change",
                rows,
            ),
        )?;
        results["ray"] = serde_json::to_value(&report).expect("ray report serializes");
    }
    summary.results = results;
    Ok(())
}

fn geodesic_rows(result: &GeodesicResult, twist: &TwistData) -> Result<Vec<Vec<f64>>> {
    let path = &result.path;
    let profile = functional_profile(path, twist).map_err(CliError::lab("frakJ_beta profile"))?;
    let defect = geodesic_defect(path).map_err(CliError::lab("geodesic defect"))?;
    let states = path.states().map_err(CliError::lab("path states"))?;
    let k = path.segments();
    Ok((0..=k)
        .map(|j| {
            let d = if j == 0 || j == k {
                f64::NAN
            } else {
                defect[j - 1].sup_norm()
            };
            let speed = if j < k { result.speeds[j] } else { f64::NAN };
            vec![
                j as f64,
                j as f64 * path.dt(),
                profile[j],
                e_beta(&states[j], twist),
                d,
                speed,
            ]
        })
        .collect())
}

fn run_geodesic(
    sc: &Scenario,
    task: &GeodesicTask,
    dir: &OutputDir,
    summary: &mut Summary,
) -> Result<()> {
    let twist = sc.twist()?;
    summary.warnings = twist.warnings();
    let phi0 = sc.potential(&task.phi0, 2)?;
    let phi1 = sc.potential(&task.phi1, 3)?;
    let geo = geodesic_segment(&phi0, &phi1, task.segments, task.tol)
        .map_err(CliError::lab("geodesic"))?;

    summary.push(Row::asserted(CheckResult::leq(
        "geodesic_residual",
        GEODESIC_EQUATION,
        geo.residual_sup,
        task.residual_tol,
        0.0,
    )));
    summary.push(Row::asserted(CheckResult::leq(
        "speed_constancy",
        SPEED,
        geo.speed_variance,
        0.0,
        1e-3,
    )));
    if convexity_applies(&twist) && geo.residual_sup <= task.residual_tol {
        let c =
            convexity_probe(&geo, &twist, task.residual_tol).map_err(CliError::lab("convexity"))?;
        summary.push(Row::asserted(c));
    }
    // Bridge inequality on the solved segment.
    let s0 = state(&phi0, "phi0")?;
    let s1 = state(&phi1, "phi1")?;
    let lhs = frak_j_beta(&s1, &twist) - frak_j_beta(&s0, &twist);
    let rhs = geo.distance * e_beta(&s1, &twist).sqrt();
    summary.push(Row::asserted(CheckResult::leq(
        "bridge_inequality",
        geodesic::BRIDGE,
        lhs,
        rhs,
        10.0 * geo.residual_sup + 1e-8,
    )));
    let mut results = serde_json::to_value(&geo).expect("geodesic result serializes");
    if task.symmetry {
        let back = geodesic_segment(&phi1, &phi0, task.segments, task.tol)
            .map_err(CliError::lab("reversed geodesic"))?;
        summary.push(Row::asserted(CheckResult::close(
            "distance_symmetry",
            SYMMETRY,
            geo.distance,
            back.distance,
            1e-9,
        )));
        results["reverse_distance"] = json!(back.distance);
    }

    let header = "node,s,frakJ_beta,E_beta,defect_sup,speed";
    dir.write_text(
        "geodesic.csv",
        &csv_table(header, geodesic_rows(&geo, &twist)?),
    )?;
    if task.write_nodes {
        for (j, node) in geo.path.nodes().iter().enumerate() {
            dir.write_field(&format!("node_{j:04}.field"), node)?;
        }
    }
    summary.results = results;
    Ok(())
}

fn run_verify(sc: &Scenario, task: &VerifyTask, summary: &mut Summary) -> Result<()> {
    let mut settings = suite::SuiteSettings::for_scenario(sc)?;
    if let Some(overrides) = &task.settings {
        settings = settings.with_overrides(overrides)?;
    }
    let criteria = suite::run_all(&settings);
    let mut list = Vec::new();
    for c in &criteria {
        summary.extend(c.rows.iter().cloned());
        if let Some(e) = &c.error {
            summary.pass = false;
            summary.warnings.push(format!("criterion {}: {e}", c.id));
        }
        list.push(json!({ "id": c.id, "title": c.title, "pass": c.pass(), "notes": c.notes, "error": c.error }));
    }
    summary.results = json!({ "settings": settings, "criteria": list });
    Ok(())
}
