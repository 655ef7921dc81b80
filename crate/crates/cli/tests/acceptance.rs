//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, LN_2, PI};
use std::process::Command;

use qswitch_core::analytic::{abar_inc, cross_check, eta_tilde, Constraints, Setting};
use qswitch_core::channels::{
    apply_channel, apply_switch, measurement_kraus, switch_decomposition, switch_kraus, MeasurementStrength, Outcome,
};
use qswitch_core::circuit::{
    conditional_medium, engine_circuit, sample_and_tomograph, statevector_run, PrepMode, TomographyOptions, CONTROL,
    MEDIUM,
};
use qswitch_core::engine::{coherent_cycle, delta_eta_from_vectors, incoherent_cycle, work_vectors, CycleReport, Mode};
use qswitch_core::qmat::{
    c, partial_trace, trace_distance, von_neumann_entropy, ComplexMatrix, DensityOperator, Subsystem, C64,
};
use qswitch_core::states::{ControlAngles, Family, GibbsParams, InitialStateSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = Result<Option<String>, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn s(x: f64) -> MeasurementStrength {
    MeasurementStrength::new(x).unwrap()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_density(r: &mut impl Rng, dim: usize) -> DensityOperator {
    let entries: Vec<C64> = (0..dim * dim)
        .map(|_| c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)))
        .collect();
    let g = ComplexMatrix::from_vec(dim, entries).unwrap();
    let m = &g * &g.adjoint();
    let tr = m.trace().re;
    DensityOperator::try_new(m.scale_real(1.0 / tr)).unwrap()
}

fn random_spec(r: &mut impl Rng, family: Family) -> InitialStateSpec {
    let g = GibbsParams::new(r.gen_range(0.0..5.0)).unwrap();
    let angles = ControlAngles::new(r.gen_range(0.0..=PI), r.gen_range(0.0..2.0 * PI)).unwrap();
    match family {
        Family::Uncorrelated => InitialStateSpec::uncorrelated(angles, r.gen_range(0.0..=1.0), g),
        Family::Separable => {
            let z0 = r.gen_range(0.5..=1.0);
            InitialStateSpec::separable(angles, z0, r.gen_range(0.0..=z0), g)
        }
        Family::Entangled => {
            let z0 = r.gen_range(0.5..=1.0);
            let z1 = r.gen_range(0.0..=z0);
            let [p0, p1] = g.populations();
            let bound = (p0 * p1 * z0 * (1.0 - z1)).sqrt().min(g.xi_max());
            let xi = r.gen_range(0.0..=1.0) * bound * (1.0 - 1e-9);
            InitialStateSpec::entangled(angles, z0, z1, xi, r.gen_range(0.0..2.0 * PI), g)
        }
    }
    .unwrap()
}

fn random_tuple(r: &mut impl Rng) -> (InitialStateSpec, f64, f64, f64) {
    let family = Family::ALL[r.gen_range(0..3)];
    let spec = random_spec(r, family);
    (
        spec,
        r.gen_range(0.0..=1.0),
        r.gen_range(0.0..=1.0),
        r.gen_range(0.0..2.0 * PI),
    )
}

fn experiment(family: Family) -> InitialStateSpec {
    let g = GibbsParams::from_temperature(1.65).unwrap();
    let angles = ControlAngles::new(FRAC_PI_2, FRAC_PI_4).unwrap();
    match family {
        Family::Uncorrelated => InitialStateSpec::uncorrelated(angles, 1.0, g),
        Family::Separable => InitialStateSpec::separable(angles, 1.0, 0.0, g),
        Family::Entangled => InitialStateSpec::entangled(angles, 1.0, 0.0, g.xi_max(), 0.0, g),
    }
    .unwrap()
}

fn grid() -> Vec<f64> {
    (0..=50).map(|k| k as f64 / 50.0).collect()
}

fn channel_law() -> Verdict {
    let mut r = rng(1);
    for _ in 0..1000 {
        let rho = random_density(&mut r, 2);
        for k in 0..=10 {
            let lambda = k as f64 / 10.0;
            let out = apply_channel(s(lambda), &rho).map_err(|e| e.to_string())?;
            let target = ComplexMatrix::from_real_diag(&[lambda, 1.0 - lambda]);
            let dev = out.matrix().max_abs_diff(&target);
            ensure(dev <= 1e-14, || format!("output deviates by {dev:e} at λ = {lambda}"))?;
            let res = measurement_kraus(s(lambda)).completeness_residual();
            ensure(res < 1e-12, || format!("completeness residual {res:e}"))?;
        }
    }
    Ok(None)
}

fn switch_reconstruction() -> Verdict {
    let mut r = rng(2);
    for _ in 0..1000 {
        let rho = random_density(&mut r, 4);
        let (a, ap) = (s(r.gen_range(0.0..=1.0)), s(r.gen_range(0.0..=1.0)));
        ensure(switch_kraus(a, ap).completeness_residual() < 1e-12, || {
            "SWITCH Kraus set incomplete".into()
        })?;
        let brute = apply_switch(a, ap, &rho).map_err(|e| e.to_string())?;
        let dec = switch_decomposition(a, ap, &rho).map_err(|e| e.to_string())?;
        let dev = dec.reconstruct().max_abs_diff(brute.matrix());
        ensure(dev < 1e-12, || format!("decomposition deviates by {dev:e}"))?;
    }
    Ok(None)
}

fn incoherent_reduction() -> Verdict {
    let mut r = rng(3);
    for _ in 0..1000 {
        let (spec, a, ap, _) = random_tuple(&mut r);
        let rho = qswitch_core::states::initial_state(&spec).map_err(|e| e.to_string())?;
        let out = apply_switch(s(a), s(ap), &rho).map_err(|e| e.to_string())?;
        let medium = partial_trace(&out, Subsystem::First).map_err(|e| e.to_string())?;
        let abar = abar_inc(&spec, s(a), s(ap));
        let dev = medium
            .matrix()
            .max_abs_diff(&ComplexMatrix::from_real_diag(&[abar, 1.0 - abar]));
        ensure(dev < 1e-12, || format!("reduced state deviates by {dev:e}"))?;
    }
    Ok(None)
}

fn averaging_identities() -> Verdict {
    let mut r = rng(4);
    for _ in 0..1000 {
        let (spec, a, ap, phi_prime) = random_tuple(&mut r);
        let coh = coherent_cycle(s(a), s(ap), phi_prime, &spec, 0.0).map_err(|e| e.to_string())?;
        let inc = incoherent_cycle(s(a), s(ap), &spec).map_err(|e| e.to_string())?;
        let avg: f64 = coh
            .branches
            .iter()
            .map(|b| b.probability * b.cycle.as_ref().map_or(0.0, |c| c.a_bar))
            .sum();
        ensure((avg - inc.a_bar_inc).abs() < 1e-12, || {
            format!("Σ p ā = {avg}, ā_inc = {}", inc.a_bar_inc)
        })?;
        ensure((coh.avg_q_hot - inc.avg_q_hot).abs() < 1e-12, || {
            "heat averages differ".into()
        })?;
    }
    Ok(None)
}

fn cycle_physics() -> Verdict {
    let mut r = rng(5);
    for _ in 0..1000 {
        let (spec, a, ap, phi_prime) = random_tuple(&mut r);
        let coh = coherent_cycle(s(a), s(ap), phi_prime, &spec, 0.0).map_err(|e| e.to_string())?;
        for cycle in coh.branches.iter().filter_map(|b| b.cycle.as_ref()) {
            let du: f64 = cycle.strokes.iter().map(|st| st.delta_u()).sum();
            ensure(du.abs() < 1e-10, || format!("ΔU sums to {du:e}"))?;
            let ds = cycle.strokes[1].delta_s();
            ensure(ds.abs() < 1e-9, || format!("work stroke changes entropy by {ds:e}"))?;
            if cycle.conditions.all() {
                ensure(
                    cycle.q_hot >= -1e-12 && cycle.w_ext >= -1e-12 && cycle.q_cold <= 1e-12,
                    || format!("signs broken with conditions met: {cycle:?}"),
                )?;
            }
        }
    }
    Ok(None)
}

fn sco_gain_positivity() -> Verdict {
    let mut r = rng(6);
    let mut worst: f64 = 0.0;
    for _ in 0..2000 {
        let (spec, a, ap, phi_prime) = random_tuple(&mut r);
        let coh = coherent_cycle(s(a), s(ap), phi_prime, &spec, 0.0).map_err(|e| e.to_string())?;
        let Some(raw) = coh.unconstrained else { continue };
        let v = work_vectors(s(a), s(ap), phi_prime, &spec).map_err(|e| e.to_string())?;
        let geometric = delta_eta_from_vectors(&v, spec.gibbs.beta_eps()).map_err(|e| e.to_string())?;
        ensure(raw.delta_eta >= -1e-12 && geometric >= -1e-12, || {
            format!("negative gain {raw:?} {geometric}")
        })?;
        worst = worst.max((raw.delta_eta - geometric).abs());
    }
    ensure(worst < 1e-10, || format!("paths differ by {worst:e}"))?;
    Ok(None)
}

fn closed_form_equivalence() -> Verdict {
    for (k, family) in Family::ALL.into_iter().enumerate() {
        let mut r = rng(70 + k as u64);
        for _ in 0..10_000 {
            let spec = random_spec(&mut r, family);
            let setting = Setting {
                a: s(r.gen_range(0.0..=1.0)),
                a_prime: s(r.gen_range(0.0..=1.0)),
                phi_prime: r.gen_range(0.0..2.0 * PI),
                spec,
            };
            cross_check(&setting).map_err(|e| format!("{family}: {e}"))?;
        }
    }
    Ok(None)
}

fn branch(r: &CycleReport, o: Outcome) -> (f64, f64, f64) {
    let b = r.branch(o).unwrap();
    let c = b.cycle.as_ref().unwrap();
    (b.probability, c.w_ext, c.efficiency.unwrap_or(0.0))
}

fn experimental_scenario() -> Verdict {
    let specs = Family::ALL.map(experiment);
    let mut rows = Vec::new();
    for a in grid() {
        let mut coh = Vec::new();
        for sp in &specs {
            let inc = incoherent_cycle(s(a), s(1.0 - a), sp).map_err(|e| e.to_string())?;
            ensure(inc.eta.abs() < 1e-12, || format!("(a) η_inc = {} at a = {a}", inc.eta))?;
            coh.push(coherent_cycle(s(a), s(1.0 - a), 0.0, sp, 0.0).map_err(|e| e.to_string())?);
        }
        rows.push((a, coh));
    }
    let (unc, sep, qe) = (0, 1, 2);
    for (a, coh) in &rows {
        for o in Outcome::BOTH {
            let (pu, ps, pq) = (branch(&coh[unc], o).0, branch(&coh[sep], o).0, branch(&coh[qe], o).0);
            ensure((ps - pq).abs() < 1e-12, || format!("(b) p_sep ≠ p_qe at a = {a}"))?;
            ensure((2.0 * ps - 1.0).abs() <= (2.0 * pu - 1.0).abs() + 1e-12, || {
                format!("(b) asymmetry at a = {a}")
            })?;
        }
    }
    let mut literal_failures = 0;
    for (a, coh) in rows.iter().filter(|(a, _)| *a > 0.0 && *a < 1.0) {
        let e_unc = branch(&coh[unc], Outcome::Minus).2;
        let e_sep = branch(&coh[sep], Outcome::Minus).2;
        let e_qe = branch(&coh[qe], Outcome::Minus).2;
        ensure(e_qe > e_sep && e_sep > e_unc, || {
            format!("(c) ranking fails at a = {a}")
        })?;
        if branch(&coh[qe], Outcome::Plus).2 <= e_sep {
            literal_failures += 1;
        }
    }
    for idx in [0, 50] {
        for o in Outcome::BOTH {
            ensure(branch(&rows[idx].1[qe], o).1 > 0.0, || {
                format!("(d) no entangled work at a = {}", rows[idx].0)
            })?;
        }
    }
    let argmax = |f: &dyn Fn(&[CycleReport]) -> f64| {
        (0..rows.len())
            .max_by(|&i, &j| f(&rows[i].1).total_cmp(&f(&rows[j].1)))
            .unwrap()
    };
    ensure(argmax(&|c| branch(&c[sep], Outcome::Minus).1) == 25, || {
        "(e) separable W⁻ peak off centre".into()
    })?;
    ensure(argmax(&|c| -branch(&c[qe], Outcome::Plus).2) == 25, || {
        "(f) entangled η⁺ minimum off centre".into()
    })?;
    Ok(Some(format!(
        "(c) checked as η⁻_qe > η⁻_sep > η⁻_unc; the η⁺_qe form fails at {literal_failures}/49 interior points"
    )))
}

fn landauer_accounting() -> Verdict {
    let mut checked = 0;
    for family in Family::ALL {
        let spec = experiment(family);
        for a in [0.2, 0.35, 0.5, 0.65] {
            let base = coherent_cycle(s(a), s(1.0 - a), 0.0, &spec, 0.0).map_err(|e| e.to_string())?;
            let inc = incoherent_cycle(s(a), s(1.0 - a), &spec).map_err(|e| e.to_string())?;
            if !base.is_valid() || base.t_d_crit <= 0.0 {
                continue;
            }
            for (factor, sign) in [(1.0 - 1e-6, 1.0), (1.0 + 1e-6, -1.0)] {
                let t_d = base.t_d_crit * factor;
                let rep = coherent_cycle(s(a), s(1.0 - a), 0.0, &spec, t_d).map_err(|e| e.to_string())?;
                ensure(rep.w_cost == -t_d * LN_2, || {
                    format!("W_cost = {} for T_D = {t_d}", rep.w_cost)
                })?;
                let eta = rep.unconstrained.map(|e| e.eta).unwrap_or(0.0);
                let gap = eta - inc.eta;
                ensure(gap * sign > 0.0, || {
                    format!("{family} a = {a}: gap {gap:e} at T_D/T_crit = {factor}")
                })?;
            }
            checked += 1;
        }
    }
    ensure(checked >= 4, || format!("only {checked} usable points"))?;
    Ok(None)
}

fn correlation_monotonicity() -> Verdict {
    let g = GibbsParams::new(1.0).unwrap();
    let mut checked = 0;
    for theta in [0.6, 1.0, FRAC_PI_2, 2.2] {
        for (a, ap) in [(0.3, 0.6), (0.45, 0.5), (0.2, 0.35), (0.5, 0.5)] {
            let mut values = Vec::new();
            for f in [0.0, 0.25, 0.5, 0.75, 1.0] {
                let angles = ControlAngles::new(theta, 0.3).unwrap();
                let spec = InitialStateSpec::entangled(angles, 1.0, 0.0, f * g.xi_max(), 0.0, g).unwrap();
                values.push(
                    eta_tilde(
                        &Setting {
                            a: s(a),
                            a_prime: s(ap),
                            phi_prime: 0.0,
                            spec,
                        },
                        Constraints::On,
                    )
                    .ok(),
                );
            }
            let Some(values) = values.into_iter().collect::<Option<Vec<f64>>>() else {
                continue;
            };
            checked += 1;
            for w in values.windows(2) {
                ensure(w[1] >= w[0] - 1e-12, || {
                    format!("η̃ drops from {} to {} at θ = {theta}", w[0], w[1])
                })?;
            }
        }
    }
    ensure(checked >= 4, || format!("only {checked} feasible settings"))?;
    Ok(None)
}

fn circuit_equivalence() -> Verdict {
    let mut worst: f64 = 0.0;
    for family in Family::ALL {
        let spec = experiment(family);
        for a in grid() {
            let (sa, sap) = (s(a), s(1.0 - a));
            let ec =
                engine_circuit(Mode::Coherent, &spec, sa, sap, 0.0, PrepMode::Dilation).map_err(|e| e.to_string())?;
            let before = statevector_run(&ec.circuit.prefix(ec.stroke_start));
            let after = statevector_run(&ec.circuit);
            let branches = qswitch_core::engine::coherent_branches(sa, sap, 0.0, &spec).map_err(|e| e.to_string())?;
            for (o, br) in Outcome::BOTH.into_iter().zip(branches) {
                let (p, state) = conditional_medium(&before, o).map_err(|e| e.to_string())?;
                ensure((p - br.probability).abs() < 1e-10, || {
                    format!("{family} a = {a}: probability {p}")
                })?;
                let (Some(state), Some(cyc)) = (state, br.cycle) else {
                    continue;
                };
                let exact = ComplexMatrix::from_rows([
                    [c(cyc.a_bar, 0.0), cyc.coherence],
                    [cyc.coherence.conj(), c(1.0 - cyc.a_bar, 0.0)],
                ]);
                worst = worst.max(trace_distance(state.matrix(), &exact).map_err(|e| e.to_string())?);
                let rotated = conditional_medium(&after, o).map_err(|e| e.to_string())?.1.unwrap();
                let ds = von_neumann_entropy(&rotated) - von_neumann_entropy(&state);
                ensure(ds.abs() < 1e-8, || {
                    format!("{family} a = {a}: stroke changes entropy by {ds:e}")
                })?;
            }
        }
    }
    ensure(worst < 1e-9, || format!("max trace distance {worst:e}"))?;
    Ok(Some(format!("max trace distance {worst:.1e}")))
}

fn circuit_statistics() -> Verdict {
    let spec = experiment(Family::Entangled);
    let circuits: Vec<_> = [0.3, 0.5, 0.8]
        .iter()
        .map(|&a| engine_circuit(Mode::Coherent, &spec, s(a), s(1.0 - a), 0.0, PrepMode::Dilation).unwrap())
        .map(|ec| ec.circuit.prefix(ec.stroke_start))
        .collect();
    let (mut inside, mut total) = (0usize, 0usize);
    for seed in 1..=100u64 {
        let circuit = &circuits[seed as usize % circuits.len()];
        let est = sample_and_tomograph(
            circuit,
            &[CONTROL, MEDIUM],
            TomographyOptions {
                seed,
                ..Default::default()
            },
        )
        .map_err(|e| e.to_string())?;
        for i in 0..4 {
            for j in 0..4 {
                total += 1;
                if (est.rho_hat.get(i, j) - est.exact.get(i, j)).norm() <= 5.0 * est.std_errors[i][j] {
                    inside += 1;
                }
            }
        }
    }
    let coverage = inside as f64 / total as f64;
    ensure(coverage >= 0.99, || format!("coverage {coverage}"))?;
    let shots = [500u64, 2000, 8000, 32000];
    let mut errors = Vec::new();
    for &n in &shots {
        let est = sample_and_tomograph(
            &circuits[0],
            &[CONTROL, MEDIUM],
            TomographyOptions {
                shots: n,
                seed: 9,
                ..Default::default()
            },
        )
        .map_err(|e| e.to_string())?;
        errors.push(est.std_errors.iter().flatten().sum::<f64>() / 16.0);
    }
    for k in 1..shots.len() {
        let ratio = errors[k - 1] / errors[k];
        ensure((1.0..=4.0).contains(&ratio), || {
            format!(
                "std-error ratio {ratio} between {} and {} shots",
                shots[k - 1],
                shots[k]
            )
        })?;
    }
    Ok(Some(format!("coverage {:.2}%", 100.0 * coverage)))
}

fn run_cli(args: &[&str], threads: &str) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_qswitch"))
        .args(args)
        .env("RAYON_NUM_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr))
    })?;
    Ok(out.stdout)
}

fn determinism() -> Verdict {
    let runs: [&[&str]; 4] = [
        &["sweep"],
        &["optimal-theta", "--a-grid", "0:1:6", "--beta-eps", "0.1,10"],
        &["map", "--map-points", "6", "--beta-eps", "1"],
        &[
            "circuit-compare",
            "--a-grid",
            "0.2,0.5",
            "--shots",
            "2000",
            "--reps",
            "3",
            "--resamples",
            "40",
            "--seed",
            "5",
        ],
    ];
    for args in runs {
        let first = run_cli(args, "1")?;
        let second = run_cli(args, "4")?;
        ensure(!first.is_empty() && first == second, || {
            format!("{args:?} output differs between runs")
        })?;
    }
    Ok(None)
}

fn main() {
    let criteria: [Criterion; 13] = [
        ("channel law", channel_law),
        ("SWITCH reconstruction", switch_reconstruction),
        ("incoherent reduction", incoherent_reduction),
        ("averaging identities", averaging_identities),
        ("cycle physics", cycle_physics),
        ("positivity of the SCO gain", sco_gain_positivity),
        ("closed-form equivalence", closed_form_equivalence),
        ("experimental scenario", experimental_scenario),
        ("Landauer accounting", landauer_accounting),
        ("monotonicity in correlations", correlation_monotonicity),
        ("circuit equivalence", circuit_equivalence),
        ("circuit statistics", circuit_statistics),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        match std::panic::catch_unwind(check) {
            Ok(Ok(note)) => match note {
                Some(n) => println!("PASS {:>2} {name} ({n})", k + 1),
                None => println!("PASS {:>2} {name}", k + 1),
            },
            Ok(Err(why)) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", k + 1);
            }
            Err(_) => {
                failed += 1;
                println!("FAIL {:>2} {name}: panicked", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
