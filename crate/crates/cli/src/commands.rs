use qswitch_core::analytic::{
    self, cross_check, eta_postselected, optimize_control, Constraints, Scenario, Setting, Target,
};
use qswitch_core::channels::Outcome;
use qswitch_core::circuit::{
    conditional_medium, engine_circuit, sample_and_tomograph, statevector_run, PrepMode, CONTROL, MEDIUM,
};
use qswitch_core::engine::{
    coherent_cycle, definite_cycle, incoherent_cycle, BranchResult, CycleReport, Inequality, Mode, Violation,
};
use qswitch_core::qmat::{trace_distance, ComplexMatrix, C64};
use qswitch_core::states::{Family, GibbsParams, InitialStateSpec};
use qswitch_core::Error;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{linspace, strength, Format, Resolved};
use crate::output::{flags, num, Cell, Table};
use crate::CliError;

const EXACT_TOLERANCE: f64 = 1e-9;
const SIGMA_BAND: f64 = 5.0;
const COVERAGE_TARGET: f64 = 0.99;

fn core(e: Error) -> CliError {
    match e {
        Error::Consistency(m) => CliError::Consistency(m),
        other => CliError::Runtime(other.to_string()),
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn render(table: Table, format: Option<Format>) -> String {
    match format.unwrap_or(Format::Csv) {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json(),
    }
}

fn json_only(cfg: &Resolved, command: &str) -> Result<(), CliError> {
    if cfg.format == Some(Format::Csv) {
        return Err(CliError::Config(format!("{command} writes JSON only")));
    }
    Ok(())
}

fn inequality_name(i: Inequality) -> &'static str {
    match i {
        Inequality::Lower => "lower",
        Inequality::Upper => "upper",
        Inequality::Coherence => "coherence",
        Inequality::Degenerate => "degenerate",
    }
}

fn violation_flags(prefix: &str, violations: &[Violation]) -> Vec<String> {
    violations
        .iter()
        .map(|v| match v.outcome {
            Some(o) => format!("{prefix}{}:{}", o.name(), inequality_name(v.inequality)),
            None => format!("{prefix}{}", inequality_name(v.inequality)),
        })
        .collect()
}

fn checked(spec: &InitialStateSpec, a: f64, a_prime: f64, phi_prime: f64) -> Result<(), CliError> {
    let setting = Setting {
        a: strength(a)?,
        a_prime: strength(a_prime)?,
        phi_prime,
        spec: *spec,
    };
    cross_check(&setting).map_err(core)
}

#[derive(Serialize)]
struct CycleRecord {
    family: Option<Family>,
    a: f64,
    a_prime: f64,
    phi_prime: f64,
    spec: Option<InitialStateSpec>,
    report: CycleReport,
}

pub fn cycle(cfg: &Resolved) -> Result<String, CliError> {
    json_only(cfg, "cycle")?;
    let a = cfg.a;
    let a_prime = cfg.partner(a);
    let records = if cfg.mode == Mode::Definite {
        let report = definite_cycle(strength(a)?, cfg.gibbs.beta_eps()).map_err(core)?;
        vec![CycleRecord {
            family: None,
            a,
            a_prime: a,
            phi_prime: 0.0,
            spec: None,
            report,
        }]
    } else {
        let mut records = Vec::new();
        for &family in &cfg.families {
            let spec = cfg.spec(family, cfg.gibbs)?;
            checked(&spec, a, a_prime, cfg.phi_prime)?;
            let report = match cfg.mode {
                Mode::Incoherent => incoherent_cycle(strength(a)?, strength(a_prime)?, &spec),
                _ => coherent_cycle(strength(a)?, strength(a_prime)?, cfg.phi_prime, &spec, cfg.beta_d_inv),
            }
            .map_err(core)?;
            records.push(CycleRecord {
                family: Some(family),
                a,
                a_prime,
                phi_prime: cfg.phi_prime,
                spec: Some(spec),
                report,
            });
        }
        records
    };
    to_json(&records)
}

pub const SWEEP_HEADER: &[&str] = &[
    "family",
    "a",
    "a_prime",
    "p_plus",
    "p_minus",
    "w_ext_plus",
    "w_ext_minus",
    "w_ext_avg",
    "q_hot_avg",
    "eta_plus",
    "eta_minus",
    "delta_eta_coh",
    "eta_inc",
    "flags",
];

fn branch_columns(br: Option<&BranchResult>, name: &str, notes: &mut Vec<String>) -> (f64, f64, f64) {
    let Some(br) = br else {
        notes.push(format!("{name}:missing"));
        return (0.0, 0.0, 0.0);
    };
    match &br.cycle {
        None => (br.probability, 0.0, 0.0),
        Some(c) => {
            let eta = match c.efficiency {
                Some(e) => e,
                None => {
                    notes.push(format!("{name}:no_heat"));
                    0.0
                }
            };
            (br.probability, c.w_ext, eta)
        }
    }
}

fn sweep_row(cfg: &Resolved, family: Family, a: f64) -> Result<Vec<Cell>, CliError> {
    let a_prime = cfg.partner(a);
    let spec = cfg.spec(family, cfg.gibbs)?;
    checked(&spec, a, a_prime, cfg.phi_prime)?;
    let (sa, sap) = (strength(a)?, strength(a_prime)?);
    let coh = coherent_cycle(sa, sap, cfg.phi_prime, &spec, cfg.beta_d_inv).map_err(core)?;
    let inc = incoherent_cycle(sa, sap, &spec).map_err(core)?;
    let mut notes = violation_flags("", &coh.violations);
    let (p_plus, w_plus, eta_plus) = branch_columns(coh.branch(Outcome::Plus), "plus", &mut notes);
    let (p_minus, w_minus, eta_minus) = branch_columns(coh.branch(Outcome::Minus), "minus", &mut notes);
    if !coh.is_valid() {
        notes.push("delta_eta_zeroed".into());
    }
    notes.extend(violation_flags("inc:", &inc.violations));
    Ok(vec![
        family.name().into(),
        a.into(),
        a_prime.into(),
        p_plus.into(),
        p_minus.into(),
        w_plus.into(),
        w_minus.into(),
        coh.avg_w_ext.into(),
        coh.avg_q_hot.into(),
        eta_plus.into(),
        eta_minus.into(),
        coh.delta_eta.into(),
        inc.eta.into(),
        flags(&notes),
    ])
}

fn family_grid<T: Copy + Sync>(families: &[Family], grid: &[T]) -> Vec<(Family, T)> {
    families
        .iter()
        .flat_map(|&f| grid.iter().map(move |&x| (f, x)))
        .collect()
}

pub fn sweep(cfg: &Resolved) -> Result<String, CliError> {
    let mut grid = cfg.a_grid.clone();
    grid.sort_by(f64::total_cmp);
    let points = family_grid(&cfg.families, &grid);
    let rows = points
        .par_iter()
        .map(|&(family, a)| sweep_row(cfg, family, a))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(render(
        Table {
            header: SWEEP_HEADER,
            rows,
        },
        cfg.format,
    ))
}

pub const MAP_HEADER: &[&str] = &[
    "family",
    "beta_eps",
    "a",
    "a_prime",
    "delta_eta",
    "eta_minus_opt",
    "eta_plus_at_opt",
    "feasible",
    "flags",
];

fn scenario(cfg: &Resolved, family: Family, a: f64, a_prime: f64, gibbs: GibbsParams) -> Result<Scenario, CliError> {
    let mut s = Scenario::new(family, strength(a)?, strength(a_prime)?, gibbs);
    s.phi_prime = cfg.phi_prime;
    s.xi_fraction = cfg.xi_fraction;
    Ok(s)
}

/// Infeasibility is a result here; anything else is a failure.
fn feasible<T>(r: qswitch_core::Result<T>) -> Result<Option<T>, CliError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::Infeasible(_)) => Ok(None),
        Err(e) => Err(core(e)),
    }
}

fn map_row(cfg: &Resolved, family: Family, beta_eps: f64, a: f64, a_prime: f64) -> Result<Vec<Cell>, CliError> {
    let gibbs = GibbsParams::new(beta_eps).map_err(|e| CliError::Config(e.to_string()))?;
    let sc = scenario(cfg, family, a, a_prime, gibbs)?;
    let mut notes = Vec::new();
    let tilde = feasible(optimize_control(&sc, Target::EtaTilde, Constraints::On))?;
    let delta = match tilde {
        Some(opt) => feasible(analytic::delta_eta(&sc.setting(opt.spec)))?,
        None => None,
    };
    if delta.is_none() {
        notes.push("eta_tilde_infeasible".to_string());
    }
    let minus = feasible(optimize_control(
        &sc,
        Target::Postselected(Outcome::Minus),
        Constraints::On,
    ))?;
    let plus_at = match &minus {
        Some(opt) => feasible(eta_postselected(&sc.setting(opt.spec), Outcome::Plus, Constraints::On))?,
        None => None,
    };
    if minus.is_none() {
        notes.push("minus_infeasible".into());
    }
    if plus_at.is_none() {
        notes.push("plus_infeasible".into());
    }
    Ok(vec![
        family.name().into(),
        beta_eps.into(),
        a.into(),
        a_prime.into(),
        delta.unwrap_or(0.0).into(),
        minus.map(|m| m.opt.value).unwrap_or(0.0).into(),
        plus_at.unwrap_or(0.0).into(),
        delta.is_some().into(),
        flags(&notes),
    ])
}

pub fn map(cfg: &Resolved) -> Result<String, CliError> {
    let axis = linspace(0.0, 1.0, cfg.map_points);
    let mut cells = Vec::new();
    for &family in &cfg.families {
        for &beta_eps in &cfg.beta_eps_list {
            for &a in &axis {
                for &a_prime in &axis {
                    cells.push((family, beta_eps, a, a_prime));
                }
            }
        }
    }
    let rows = cells
        .par_iter()
        .map(|&(f, b, a, ap)| map_row(cfg, f, b, a, ap))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(render(
        Table {
            header: MAP_HEADER,
            rows,
        },
        cfg.format,
    ))
}

pub const OPTIMAL_THETA_HEADER: &[&str] = &[
    "family",
    "objective",
    "a",
    "beta_eps",
    "theta_opt",
    "value",
    "constrained",
    "feasible",
];

const OBJECTIVES: [(&str, Target); 3] = [
    ("eta_tilde", Target::EtaTilde),
    ("eta_postselected_plus", Target::Postselected(Outcome::Plus)),
    ("eta_postselected_minus", Target::Postselected(Outcome::Minus)),
];

pub fn optimal_theta(cfg: &Resolved) -> Result<String, CliError> {
    let mut grid = cfg.a_grid.clone();
    grid.sort_by(f64::total_cmp);
    let mut cells = Vec::new();
    for &family in &cfg.families {
        for (name, target) in OBJECTIVES {
            for &beta_eps in &cfg.beta_eps_list {
                for &a in &grid {
                    cells.push((family, name, target, beta_eps, a));
                }
            }
        }
    }
    let rows = cells
        .par_iter()
        .map(|&(family, name, target, beta_eps, a)| -> Result<Vec<Cell>, CliError> {
            let gibbs = GibbsParams::new(beta_eps).map_err(|e| CliError::Config(e.to_string()))?;
            let sc = scenario(cfg, family, a, 1.0 - a, gibbs)?;
            let opt = feasible(optimize_control(&sc, target, Constraints::On))?;
            let (theta, value, constrained) = opt
                .map(|o| (o.opt.theta_opt, o.opt.value, o.opt.constrained))
                .unwrap_or((0.0, 0.0, true));
            Ok(vec![
                family.name().into(),
                name.into(),
                a.into(),
                beta_eps.into(),
                theta.into(),
                value.into(),
                constrained.into(),
                opt.is_some().into(),
            ])
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(render(
        Table {
            header: OPTIMAL_THETA_HEADER,
            rows,
        },
        cfg.format,
    ))
}

#[derive(Serialize)]
struct ExactBranch {
    outcome: &'static str,
    probability_circuit: f64,
    probability_engine: f64,
    trace_distance: Option<f64>,
}

#[derive(Serialize)]
struct ShotPath {
    qubits: Vec<usize>,
    rho_hat: Vec<Vec<[String; 2]>>,
    exact: Vec<Vec<[String; 2]>>,
    std_errors: Vec<Vec<String>>,
    /// `null` where the standard error vanishes.
    z_scores: Vec<Vec<Option<f64>>>,
    within: usize,
    elements: usize,
}

#[derive(Serialize)]
struct ComparePoint {
    family: Family,
    a: f64,
    a_prime: f64,
    exact: Vec<ExactBranch>,
    shots: ShotPath,
}

#[derive(Serialize)]
struct CompareSummary {
    points: usize,
    max_trace_distance: f64,
    max_probability_error: f64,
    exact_pass: bool,
    elements: usize,
    within_5_sigma: usize,
    coverage: f64,
    shot_pass: bool,
    pass: bool,
}

#[derive(Serialize)]
struct CompareReport {
    shots: u64,
    repetitions: u32,
    seed: u64,
    resamples: usize,
    phi_prime: f64,
    summary: CompareSummary,
    points: Vec<ComparePoint>,
}

fn complex_rows(m: &ComplexMatrix) -> Vec<Vec<[String; 2]>> {
    (0..m.dim())
        .map(|i| {
            (0..m.dim())
                .map(|j| [num(m.get(i, j).re), num(m.get(i, j).im)])
                .collect()
        })
        .collect()
}

fn medium_matrix(a_bar: f64, coherence: C64) -> ComplexMatrix {
    let re = |x: f64| C64::new(x, 0.0);
    ComplexMatrix::from_rows([[re(a_bar), coherence], [coherence.conj(), re(1.0 - a_bar)]])
}

fn compare_point(cfg: &Resolved, family: Family, a: f64) -> Result<ComparePoint, CliError> {
    let a_prime = cfg.partner(a);
    let spec = cfg.spec(family, cfg.gibbs)?;
    let (sa, sap) = (strength(a)?, strength(a_prime)?);
    let ec = engine_circuit(Mode::Coherent, &spec, sa, sap, cfg.phi_prime, PrepMode::Dilation).map_err(core)?;
    let readout = ec.circuit.prefix(ec.stroke_start);
    let psi = statevector_run(&readout);
    let branches = qswitch_core::engine::coherent_branches(sa, sap, cfg.phi_prime, &ec.realized).map_err(core)?;
    let mut exact = Vec::new();
    for (outcome, br) in Outcome::BOTH.into_iter().zip(branches) {
        let (p, state) = conditional_medium(&psi, outcome).map_err(core)?;
        let distance = match (state, br.cycle) {
            (Some(st), Some(c)) => {
                Some(trace_distance(st.matrix(), &medium_matrix(c.a_bar, c.coherence)).map_err(core)?)
            }
            _ => None,
        };
        exact.push(ExactBranch {
            outcome: outcome.name(),
            probability_circuit: p,
            probability_engine: br.probability,
            trace_distance: distance,
        });
    }
    let qubits = vec![CONTROL, MEDIUM];
    let est = sample_and_tomograph(&readout, &qubits, cfg.tomography).map_err(core)?;
    let n = est.rho_hat.matrix().dim();
    let mut z_scores = vec![vec![None; n]; n];
    let mut within = 0;
    for (i, row) in z_scores.iter_mut().enumerate() {
        for (j, z) in row.iter_mut().enumerate() {
            let err = (est.rho_hat.get(i, j) - est.exact.get(i, j)).norm();
            let sigma = est.std_errors[i][j];
            if sigma > 0.0 {
                *z = Some(err / sigma);
            }
            if err <= SIGMA_BAND * sigma {
                within += 1;
            }
        }
    }
    Ok(ComparePoint {
        family,
        a,
        a_prime,
        exact,
        shots: ShotPath {
            qubits,
            rho_hat: complex_rows(est.rho_hat.matrix()),
            exact: complex_rows(est.exact.matrix()),
            std_errors: est
                .std_errors
                .iter()
                .map(|r| r.iter().map(|&x| num(x)).collect())
                .collect(),
            z_scores,
            within,
            elements: n * n,
        },
    })
}

pub fn circuit_compare(cfg: &Resolved) -> Result<String, CliError> {
    json_only(cfg, "circuit-compare")?;
    let mut grid = cfg.a_grid.clone();
    grid.sort_by(f64::total_cmp);
    let cells = family_grid(&cfg.families, &grid);
    let points = cells
        .par_iter()
        .map(|&(family, a)| compare_point(cfg, family, a))
        .collect::<Result<Vec<_>, _>>()?;
    let mut max_td: f64 = 0.0;
    let mut max_dp: f64 = 0.0;
    for b in points.iter().flat_map(|p| &p.exact) {
        max_td = max_td.max(b.trace_distance.unwrap_or(0.0));
        max_dp = max_dp.max((b.probability_circuit - b.probability_engine).abs());
    }
    let elements: usize = points.iter().map(|p| p.shots.elements).sum();
    let within: usize = points.iter().map(|p| p.shots.within).sum();
    let coverage = if elements > 0 {
        within as f64 / elements as f64
    } else {
        1.0
    };
    let exact_pass = max_td < EXACT_TOLERANCE && max_dp < EXACT_TOLERANCE;
    let shot_pass = coverage >= COVERAGE_TARGET;
    let report = CompareReport {
        shots: cfg.tomography.shots,
        repetitions: cfg.tomography.repetitions,
        seed: cfg.tomography.seed,
        resamples: cfg.tomography.resamples,
        phi_prime: cfg.phi_prime,
        summary: CompareSummary {
            points: points.len(),
            max_trace_distance: max_td,
            max_probability_error: max_dp,
            exact_pass,
            elements,
            within_5_sigma: within,
            coverage,
            shot_pass,
            pass: exact_pass && shot_pass,
        },
        points,
    };
    to_json(&report)
}
