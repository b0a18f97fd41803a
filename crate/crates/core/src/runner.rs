//! End-to-end experiment execution: the model → spectrum → initial state →
//! circuit → correction pipeline, deterministic sweeps, and the figure
//! presets.

use std::path::Path;
use std::time::Instant;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::config::{ExperimentSpec, TimeGrid};
use crate::dynamics::{
    build_ideal_generator, build_imperfect_generator, evolve_local_dephasing, EvolutionKind,
    EvolutionSpec, KrylovPropagator, PropagatedState,
};
use crate::error::{Error, Result};
use crate::hilbert::{PauliString, PureState, SectorBasis, SparseOperator};
use crate::model::{
    build_leg_hamiltonian, build_parent_hamiltonian, build_r, build_u0, ChainSpec, LadderSpec,
    Leg,
};
use crate::otoc::{
    correct, extract_kappa, otoc_circuit, otoc_exact_series, sample_shots, ObservablePair,
    OtocSeries, VariantKind,
};
use crate::output::{palette_color, render_csv, write_svg, Curve, CSV_HEADER};
use crate::spectral::{full_spectrum, ground_state};
use crate::tfd::{build_phi, build_tfd, extrapolate_t0, optimize_beta};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Output of one complete run.
pub struct RunRecord {
    pub spec_hash: u64,
    pub version: String,
    /// Wall-clock seconds (informational; not part of the deterministic
    /// output).
    pub wall_time: f64,
    pub series: OtocSeries,
}

/// splitmix64 step; used to derive independent sub-seeds deterministically.
fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Per-value seed for sweeps and per-branch/per-time seeds for sampling.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    splitmix64(base ^ splitmix64(index.wrapping_add(1)))
}

/// Inverse temperature for the run: explicit override, the rung-singlet
/// limit (exact at β=0), or the fidelity-optimal β₀(λ).
fn resolve_beta(spec: &ExperimentSpec, model: &LadderSpec) -> Result<f64> {
    if let Some(beta) = spec.beta_override {
        return Ok(beta);
    }
    if model.is_infinite() {
        return Ok(0.0);
    }
    Ok(optimize_beta(model)?.beta0)
}

/// Parent-Hamiltonian ground state on the 2n-qubit S^z = 0 sector.
pub fn parent_ground(model: &LadderSpec) -> Result<PureState> {
    let basis = SectorBasis::with_sector(2 * model.chain.n, 0)?;
    if model.is_infinite() {
        return crate::model::rung_singlet_state(model.chain.n, &basis);
    }
    let parent = build_parent_hamiltonian(model, &basis)?;
    Ok(ground_state(&parent.op, 2)?.state)
}

/// Executes the full pipeline for one spec.
pub fn run(spec: &ExperimentSpec) -> Result<RunRecord> {
    let start = Instant::now();
    spec.validate()?;
    let pair = spec.observable_pair()?;
    let times = spec.times.points();
    let chain = ChainSpec::new(spec.n, spec.j)?;
    let model = LadderSpec::new(chain.clone(), spec.lambda)?;

    let chain_basis = SectorBasis::full(spec.n);
    let h_chain = crate::model::build_chain_hamiltonian(&chain, &chain_basis)?;
    let spectrum = full_spectrum(&h_chain)?;
    let beta = resolve_beta(spec, &model)?;

    let o_th = otoc_exact_series(&spectrum, &pair, beta, &times, VariantKind::Oth)?;

    // circuit initial state: ground state of the parent Hamiltonian,
    // embedded into the full two-leg space only when W breaks the sector
    let g_sector = parent_ground(&model)?;
    let initial = if pair.w().is_none_or(|w| w.preserves_sector()) {
        g_sector
    } else {
        g_sector.embed(&SectorBasis::full(2 * spec.n))?
    };

    let (o_g, n_g, o_sig, n_sig) = if let Some(shots) = spec.shots {
        let seed_o = derive_seed(spec.seed, 0xa11ce);
        let seed_n = derive_seed(spec.seed, 0xb0b);
        let (o_g, o_sig) = sampled_branch(
            &initial, pair.w(), &pair, &model, &spec.evolution, &times, shots, spec.readout_x,
            seed_o,
        )?;
        let (n_g, n_sig) = sampled_branch(
            &initial, None, &pair, &model, &spec.evolution, &times, shots, spec.readout_x,
            seed_n,
        )?;
        (o_g, n_g, o_sig, n_sig)
    } else {
        let circuit = otoc_circuit(&initial, &pair, &model, &spec.evolution, &times)?;
        // readout errors rescale both pair expectations by (1−2x)²
        let f = (1.0 - 2.0 * spec.readout_x).powi(2);
        let scale = |v: Vec<f64>| v.into_iter().map(|x| x * f).collect::<Vec<f64>>();
        (
            scale(circuit.o),
            scale(circuit.n),
            scale(circuit.o_se),
            scale(circuit.n_se),
        )
    };

    let (o_corr, sigma_corr) = correct(&o_g, &o_sig, &n_g, &n_sig)?;
    let normalize = |v: &[f64]| -> Vec<f64> {
        let v0 = v.first().copied().unwrap_or(f64::NAN);
        if v0.abs() < 1e-12 {
            vec![f64::NAN; v.len()]
        } else {
            v.iter().map(|x| x / v0).collect()
        }
    };
    let o_g_norm = normalize(&o_g);
    let o_th_norm = normalize(&o_th);

    // reference protocol on |φ(β)⟩ — needs the full two-leg space, so only
    // filled where that space is small
    let o_tfd = if (1usize << (2 * spec.n)) <= 4096 && beta.is_finite() {
        let full2n = SectorBasis::full(2 * spec.n);
        let u0 = build_u0(spec.n, &full2n)?;
        let phi = build_phi(&build_tfd(&spectrum, beta)?, &u0)?;
        otoc_circuit(&phi, &pair, &model, &EvolutionSpec::ideal(), &times)?.o
    } else {
        vec![f64::NAN; times.len()]
    };

    let kappa = extract_kappa(&times, &o_corr).ok();

    let series = OtocSeries {
        times,
        o_g,
        n_g,
        o_corr,
        o_th,
        o_tfd,
        o_g_norm,
        o_th_norm,
        sigma_corr,
        kappa,
        metadata: spec.clone(),
    };
    Ok(RunRecord {
        spec_hash: spec.hash(),
        version: VERSION.to_string(),
        wall_time: start.elapsed().as_secs_f64(),
        series,
    })
}

/// One branch of the shot-sampled circuit: walks the evolution and draws
/// `shots` projective samples at every grid point with a per-time seed.
#[allow(clippy::too_many_arguments)]
fn sampled_branch(
    initial: &PureState,
    w: Option<&PauliString>,
    pair: &ObservablePair,
    model: &LadderSpec,
    evo: &EvolutionSpec,
    times: &[f64],
    shots: usize,
    readout_x: f64,
    branch_seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    evo.validate()?;
    let prepared = match w {
        Some(p) => initial.apply_pauli(p)?,
        None => initial.clone(),
    };
    let basis = prepared.basis().clone();
    let mut ests = Vec::with_capacity(times.len());
    let mut sigs = Vec::with_capacity(times.len());
    let mut sample = |i: usize, ps: &PropagatedState| -> Result<()> {
        let (e, s) = sample_shots(ps, pair, shots, readout_x, derive_seed(branch_seed, i as u64))?;
        ests.push(e);
        sigs.push(s);
        Ok(())
    };

    match evo.kind {
        EvolutionKind::IdealDirect
        | EvolutionKind::RemnantCoupling
        | EvolutionKind::AsymmetricLegs
        | EvolutionKind::Depolarization => {
            let generator = match evo.kind {
                EvolutionKind::RemnantCoupling | EvolutionKind::AsymmetricLegs => {
                    build_imperfect_generator(model, &basis, evo)?
                }
                _ => build_ideal_generator(model, &basis)?,
            };
            let prop = KrylovPropagator::new(generator)?;
            let mut v = prepared.amplitudes().to_vec();
            let mut now = 0.0;
            for (i, &t) in times.iter().enumerate() {
                prop.evolve_in_place(&mut v, t - now)?;
                now = t;
                let state = PureState::from_amplitudes(basis.clone(), v.clone());
                let ps = if evo.kind == EvolutionKind::Depolarization {
                    PropagatedState::Depolarized {
                        state,
                        decay: (-evo.gamma * t).exp(),
                    }
                } else {
                    PropagatedState::Pure(state)
                };
                sample(i, &ps)?;
            }
        }
        EvolutionKind::IdealViaR => {
            let h1 = build_leg_hamiltonian(&model.chain, &basis, Leg::First)?;
            let h2 = build_leg_hamiltonian(&model.chain, &basis, Leg::Second)?;
            let h_sum = SparseOperator::linear_combination(&[(1.0, &h1), (1.0, &h2)])?;
            let r2 = build_r(model.chain.n, Leg::Second, &basis)?;
            let intended = build_ideal_generator(model, &basis)?;
            let defect = h_sum.conjugate_by(&r2)?.add_max_abs(&intended.scaled(-1.0))?;
            if defect > 1e-10 {
                return Err(Error::ParticleHoleViolated(defect));
            }
            let prop = KrylovPropagator::new(h_sum)?;
            let mut v = r2.apply(&prepared)?.amplitudes().to_vec();
            let mut now = 0.0;
            for (i, &t) in times.iter().enumerate() {
                prop.evolve_in_place(&mut v, t - now)?;
                now = t;
                // undo the frame rotation (R is a Hermitian unitary)
                let back = r2.apply(&PureState::from_amplitudes(basis.clone(), v.clone()))?;
                sample(i, &PropagatedState::Pure(back))?;
            }
        }
        EvolutionKind::CollectiveDephasing => {
            let generator = build_ideal_generator(model, &basis)?;
            let prop = KrylovPropagator::new(generator)?;
            let mut comps = sector_components(&prepared);
            let mut now = 0.0;
            for (i, &t) in times.iter().enumerate() {
                for (_, amps) in comps.iter_mut() {
                    prop.evolve_in_place(amps, t - now)?;
                }
                now = t;
                let components = comps
                    .iter()
                    .map(|(m, amps)| (*m, PureState::from_amplitudes(basis.clone(), amps.clone())))
                    .collect();
                sample(
                    i,
                    &PropagatedState::SectorDamped {
                        components,
                        gamma_t: evo.gamma * t,
                    },
                )?;
            }
        }
        EvolutionKind::LocalDephasing => {
            // each grid point re-runs the trajectory ensemble from t = 0;
            // quadratic in grid length, intended for small systems
            let generator = build_ideal_generator(model, &basis)?;
            for (i, &t) in times.iter().enumerate() {
                let ens = evolve_local_dephasing(&prepared, &generator, t, evo)?;
                sample(i, &PropagatedState::Ensemble(ens))?;
            }
        }
    }
    Ok((ests, sigs))
}

fn sector_components(state: &PureState) -> Vec<(i64, Vec<C64>)> {
    let basis = state.basis();
    if let Some(m) = basis.sector() {
        return vec![(m, state.amplitudes().to_vec())];
    }
    let n = basis.num_qubits();
    let mut by_m: std::collections::BTreeMap<i64, Vec<C64>> = Default::default();
    for (i, amp) in state.amplitudes().iter().enumerate() {
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        by_m
            .entry(crate::hilbert::magnetization(basis.state(i), n))
            .or_insert_with(|| vec![C64::new(0.0, 0.0); basis.dim()])[i] = *amp;
    }
    by_m.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Svg,
    Both,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "svg" => Ok(OutputFormat::Svg),
            "both" => Ok(OutputFormat::Both),
            other => Err(Error::InvalidSpec(format!("unknown format '{other}'"))),
        }
    }
}

impl OutputFormat {
    fn wants_csv(self) -> bool {
        self != OutputFormat::Svg
    }
    fn wants_svg(self) -> bool {
        self != OutputFormat::Csv
    }
}

/// Standard plot of one record: Õ_g (dotted stand-in: thin), Õ_th, O_corr
/// with its 1σ band.
fn record_curves(record: &RunRecord) -> Vec<Curve> {
    let s = &record.series;
    let pts = |v: &[f64]| -> Vec<(f64, f64)> {
        s.times.iter().copied().zip(v.iter().copied()).collect()
    };
    vec![
        Curve {
            label: "O_corr".into(),
            points: pts(&s.o_corr),
            band: Some(s.sigma_corr.clone()),
            color: palette_color(0),
        },
        Curve {
            label: "O_g_norm".into(),
            points: pts(&s.o_g_norm),
            band: None,
            color: palette_color(1),
        },
        Curve {
            label: "O_th_norm".into(),
            points: pts(&s.o_th_norm),
            band: None,
            color: palette_color(2),
        },
    ]
}

/// Runs one spec and writes `<stem>.csv` / `<stem>.svg` into `out`.
pub fn run_to_files(
    spec: &ExperimentSpec,
    out: &Path,
    stem: &str,
    format: OutputFormat,
) -> Result<RunRecord> {
    let record = run(spec)?;
    std::fs::create_dir_all(out)?;
    if format.wants_csv() {
        std::fs::write(out.join(format!("{stem}.csv")), render_csv(&record.series))?;
    }
    if format.wants_svg() {
        let svg = crate::output::render_svg(stem, "Jt", "OTOC", &record_curves(&record));
        write_svg(&out.join(format!("{stem}.svg")), &svg)?;
    }
    Ok(record)
}

/// Outcome of a sweep: a merged long-format CSV (leading axis column) and
/// the per-value results; failures are recorded and do not abort the sweep.
pub struct SweepOutcome {
    pub merged_csv: String,
    pub records: Vec<(String, std::result::Result<RunRecord, String>)>,
}

/// Fan-out over `values` of the field `axis`, with bounded parallelism.
/// Per-value seeds derive from (base seed, value index), so the merged
/// output is independent of the parallelism level.
pub fn sweep(
    base: &ExperimentSpec,
    axis: &str,
    values: &[String],
    parallel: usize,
) -> Result<SweepOutcome> {
    // fail fast on an axis that names no spec field
    base.clone().set(axis, values.first().map(String::as_str).unwrap_or("0"))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel.max(1))
        .build()
        .map_err(|e| Error::InvalidSpec(format!("thread pool: {e}")))?;

    let results: Vec<std::result::Result<RunRecord, String>> = pool.install(|| {
        values
            .par_iter()
            .enumerate()
            .map(|(i, value)| {
                let mut spec = base.clone();
                spec.set(axis, value).map_err(|e| e.to_string())?;
                spec.seed = derive_seed(base.seed, i as u64);
                run(&spec).map_err(|e| e.to_string())
            })
            .collect()
    });

    let mut merged = format!("{axis},{CSV_HEADER}\n");
    let mut records = Vec::with_capacity(values.len());
    for (value, result) in values.iter().zip(results) {
        match &result {
            Ok(record) => {
                for line in render_csv(&record.series).lines().skip(1) {
                    merged.push_str(value);
                    merged.push(',');
                    merged.push_str(line);
                    merged.push('\n');
                }
            }
            Err(e) => {
                merged.push_str(&format!("# {axis}={value} failed: {}\n", e.replace('\n', " ")));
            }
        }
        records.push((value.clone(), result));
    }
    Ok(SweepOutcome {
        merged_csv: merged,
        records,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    FigA,
}

impl std::str::FromStr for Figure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig2" => Ok(Figure::Fig2),
            "fig3" => Ok(Figure::Fig3),
            "fig4" => Ok(Figure::Fig4),
            "fig5" => Ok(Figure::Fig5),
            "fig6" => Ok(Figure::Fig6),
            "figA" | "figa" => Ok(Figure::FigA),
            other => Err(Error::InvalidSpec(format!(
                "unknown figure '{other}' (expected fig2..fig6 or figA)"
            ))),
        }
    }
}

fn preset_base(n: usize, lambda: &str, w: &str, v: &str, seed: u64) -> ExperimentSpec {
    let mut spec = ExperimentSpec::default();
    spec.n = n;
    spec.set("lambda", lambda).expect("preset lambda");
    spec.w = w.to_string();
    spec.v = v.to_string();
    spec.seed = seed;
    spec
}

/// The plain pipeline runs behind each figure preset, as (stem, spec)
/// pairs; fig2/figA additionally have non-pipeline outputs handled by
/// [`reproduce`].
pub fn preset_specs(figure: Figure) -> Vec<(String, ExperimentSpec)> {
    let mut out = Vec::new();
    match figure {
        Figure::Fig2 | Figure::FigA => {}
        Figure::Fig3 => {
            // three couplings with shot noise, W = σ^z_5, V = σ^x_4
            for (i, lambda) in ["1", "4", "inf"].iter().enumerate() {
                let mut spec = preset_base(8, lambda, "Z@5", "X@4", 3000 + i as u64);
                spec.shots = Some(1000);
                out.push((format!("fig3_otoc_lambda_{lambda}"), spec));
            }
            // slope panel: expectation-level runs over the λ grid
            for (i, lambda) in ["1", "2", "4", "10", "inf"].iter().enumerate() {
                let spec = preset_base(8, lambda, "Z@5", "X@4", 3100 + i as u64);
                out.push((format!("fig3_kappa_lambda_{lambda}"), spec));
            }
        }
        Figure::Fig4 => {
            let pairs = [("Z@5", "X@4"), ("Z@6", "X@3"), ("Z@6", "X@2")];
            for (pi, (panel, lambda)) in [("a", "inf"), ("b", "4"), ("c", "1")].iter().enumerate()
            {
                for (wi, (w, v)) in pairs.iter().enumerate() {
                    let seed = 4000 + (pi * 3 + wi) as u64;
                    let mut spec = preset_base(8, lambda, w, v, seed);
                    spec.shots = Some(1000);
                    out.push((
                        format!("fig4{panel}_{}_{}", w.to_lowercase().replace('@', ""), v.to_lowercase().replace('@', "")),
                        spec,
                    ));
                }
            }
        }
        Figure::Fig5 | Figure::Fig6 => {
            let (tag, lambda, seed0) = if figure == Figure::Fig5 {
                ("fig5", "inf", 5000u64)
            } else {
                ("fig6", "1", 6000u64)
            };
            let pairs = [("Z@5", "X@4"), ("Z@6", "X@3")];
            let panels: [(&str, EvolutionKind, f64, f64); 4] = [
                ("a_depolarization", EvolutionKind::Depolarization, 1.0, 0.0),
                ("b_local_dephasing", EvolutionKind::LocalDephasing, 0.25, 0.0),
                ("c_remnant_coupling", EvolutionKind::RemnantCoupling, 0.0, 0.5),
                ("d_asymmetric_legs", EvolutionKind::AsymmetricLegs, 0.0, 0.2),
            ];
            for (pi, (panel, kind, gamma, epsilon)) in panels.iter().enumerate() {
                for (wi, (w, v)) in pairs.iter().enumerate() {
                    let seed = seed0 + (pi * 2 + wi) as u64;
                    let mut spec = preset_base(8, lambda, w, v, seed);
                    spec.evolution.kind = *kind;
                    spec.evolution.gamma = *gamma;
                    spec.evolution.epsilon = *epsilon;
                    if *kind == EvolutionKind::LocalDephasing {
                        // expectation level with the trajectory error band;
                        // per-shot sampling of a trajectory ensemble over the
                        // full grid is quadratic in grid length
                        spec.evolution.trajectories = 200;
                        spec.evolution.seed = seed;
                    } else {
                        spec.shots = Some(1000);
                    }
                    out.push((
                        format!("{tag}{panel}_{}_{}", w.to_lowercase().replace('@', ""), v.to_lowercase().replace('@', "")),
                        spec,
                    ));
                }
            }
        }
    }
    out
}

/// Reproduces the preset sweep behind one figure into `out`: one CSV per
/// panel run plus an SVG per panel run; fig2 emits fidelity/T₀ tables and
/// figA emits exact variant series plus the slope table.
pub fn reproduce(figure: Figure, out: &Path, format: OutputFormat, parallel: usize) -> Result<()> {
    std::fs::create_dir_all(out)?;
    match figure {
        Figure::Fig2 => reproduce_fig2(out, format),
        Figure::FigA => reproduce_fig_a(out, format),
        _ => {
            let specs = preset_specs(figure);
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(parallel.max(1))
                .build()
                .map_err(|e| Error::InvalidSpec(format!("thread pool: {e}")))?;
            let results: Vec<Result<RunRecord>> = pool.install(|| {
                specs
                    .par_iter()
                    .map(|(stem, spec)| run_to_files(spec, out, stem, format))
                    .collect()
            });
            for ((stem, _), result) in specs.iter().zip(&results) {
                if let Err(e) = result {
                    return Err(Error::InvalidSpec(format!("{stem}: {e}")));
                }
            }
            if figure == Figure::Fig3 {
                write_fig3_kappa_table(&specs, &results, out)?;
            }
            Ok(())
        }
    }
}

fn write_fig3_kappa_table(
    specs: &[(String, ExperimentSpec)],
    results: &[Result<RunRecord>],
    out: &Path,
) -> Result<()> {
    let mut csv = String::from("lambda,t0,kappa_th,kappa_g\n");
    for ((stem, spec), result) in specs.iter().zip(results) {
        if !stem.starts_with("fig3_kappa") {
            continue;
        }
        let record = result.as_ref().expect("checked above");
        let s = &record.series;
        let kappa_th = extract_kappa(&s.times, &s.o_th_norm).unwrap_or(f64::NAN);
        let kappa_g = extract_kappa(&s.times, &s.o_g_norm).unwrap_or(f64::NAN);
        let t0 = if spec.lambda.is_infinite() {
            f64::INFINITY
        } else {
            let model = LadderSpec::new(ChainSpec::new(spec.n, spec.j)?, spec.lambda)?;
            optimize_beta(&model)?.t0
        };
        csv.push_str(&format!("{},{t0},{kappa_th},{kappa_g}\n", spec.lambda));
    }
    std::fs::write(out.join("fig3_kappa.csv"), csv)?;
    Ok(())
}

/// Fidelity panels: F(β₀, λ) and T₀(λ) tables over n and λ, plus the
/// T₀ finite-size extrapolation.
fn reproduce_fig2(out: &Path, format: OutputFormat) -> Result<()> {
    let lambdas = [0.5, 1.0, 2.0, 4.0, 8.0];
    let ns = [2usize, 4, 6, 8];
    let mut rows = Vec::new();
    for &n in &ns {
        for &lambda in &lambdas {
            let model = LadderSpec::new(ChainSpec::new(n, 1.0)?, lambda)?;
            let r = optimize_beta(&model)?;
            rows.push((n, lambda, r.beta0, r.t0, r.f));
        }
    }
    if format.wants_csv() {
        let mut csv = String::from("n,lambda,beta0,t0,f\n");
        for &(n, lambda, beta0, t0, f) in &rows {
            csv.push_str(&format!("{n},{lambda},{beta0:.17e},{t0:.17e},{f:.17e}\n"));
        }
        std::fs::write(out.join("fig2_fidelity.csv"), csv)?;

        let mut csv = String::from("lambda,slope,intercept,t0_inf\n");
        for &lambda in &lambdas {
            let points: Vec<(usize, f64)> = rows
                .iter()
                .filter(|r| r.1 == lambda && r.0 >= 4)
                .map(|r| (r.0, r.3))
                .collect();
            let (slope, intercept, t0_inf) = extrapolate_t0(&points)?;
            csv.push_str(&format!("{lambda},{slope:.17e},{intercept:.17e},{t0_inf:.17e}\n"));
        }
        std::fs::write(out.join("fig2_t0_extrapolation.csv"), csv)?;
    }
    if format.wants_svg() {
        let mut curves = Vec::new();
        for (i, &n) in ns.iter().enumerate() {
            curves.push(Curve {
                label: format!("n = {n}"),
                points: rows
                    .iter()
                    .filter(|r| r.0 == n)
                    .map(|r| (r.1, r.4))
                    .collect(),
                band: None,
                color: palette_color(i),
            });
        }
        let svg = crate::output::render_svg("fidelity vs coupling", "lambda", "F", &curves);
        write_svg(&out.join("fig2_fidelity.svg"), &svg)?;
    }
    Ok(())
}

/// Exact variant OTOCs at three temperatures plus the slope table.
fn reproduce_fig_a(out: &Path, format: OutputFormat) -> Result<()> {
    let n = 8;
    let chain = ChainSpec::new(n, 1.0)?;
    let basis = SectorBasis::full(n);
    let spectrum = full_spectrum(&crate::model::build_chain_hamiltonian(&chain, &basis)?)?;
    let pair = ExperimentSpec {
        n,
        w: "Z@5".into(),
        v: "X@4".into(),
        ..ExperimentSpec::default()
    }
    .observable_pair()?;
    let times = TimeGrid::default().points();
    let temperatures = [0.125, 1.0, 8.0];
    let kinds = [
        ("O1", VariantKind::O1),
        ("O2", VariantKind::O2),
        ("O3", VariantKind::O3),
        ("Oth", VariantKind::Oth),
    ];

    let mut kappa_csv = String::from("temperature,kappa_O1,kappa_O2,kappa_O3,kappa_Oth\n");
    for &temp in &temperatures {
        let beta = 1.0 / temp;
        let mut columns = Vec::new();
        for (_, kind) in &kinds {
            columns.push(otoc_exact_series(&spectrum, &pair, beta, &times, *kind)?);
        }
        let normalized: Vec<Vec<f64>> = columns
            .iter()
            .map(|c| c.iter().map(|x| x / c[0]).collect())
            .collect();
        if format.wants_csv() {
            let mut csv =
                String::from("t,O1,O2,O3,Oth,O1_norm,O2_norm,O3_norm,Oth_norm\n");
            for (i, &t) in times.iter().enumerate() {
                csv.push_str(&format!("{t:.17e}"));
                for c in columns.iter().chain(normalized.iter()) {
                    csv.push_str(&format!(",{:.17e}", c[i]));
                }
                csv.push('\n');
            }
            std::fs::write(out.join(format!("figA_variants_T_{temp}.csv")), csv)?;
        }
        if format.wants_svg() {
            let curves: Vec<Curve> = kinds
                .iter()
                .zip(&normalized)
                .enumerate()
                .map(|(i, ((name, _), c))| Curve {
                    label: name.to_string(),
                    points: times.iter().copied().zip(c.iter().copied()).collect(),
                    band: None,
                    color: palette_color(i),
                })
                .collect();
            let svg = crate::output::render_svg(
                &format!("variant OTOCs, k_B T/J = {temp}"),
                "Jt",
                "normalized OTOC",
                &curves,
            );
            write_svg(&out.join(format!("figA_variants_T_{temp}.svg")), &svg)?;
        }
        kappa_csv.push_str(&format!("{temp}"));
        for c in &normalized {
            let k = extract_kappa(&times, c).unwrap_or(f64::NAN);
            kappa_csv.push_str(&format!(",{k:.17e}"));
        }
        kappa_csv.push('\n');
    }
    if format.wants_csv() {
        std::fs::write(out.join("figA_kappa.csv"), kappa_csv)?;
    }
    Ok(())
}

/// `fidelity` subcommand front-end: β₀/T₀/F for one (n, λ).
pub fn fidelity_scan(n: usize, lambda: f64) -> Result<crate::tfd::FidelityResult> {
    let model = LadderSpec::new(ChainSpec::new(n, 1.0)?, lambda)?;
    optimize_beta(&model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::output::parse_csv;

    fn quick_spec() -> ExperimentSpec {
        let mut spec = ExperimentSpec::default();
        spec.n = 3;
        spec.set("lambda", "inf").unwrap();
        spec.w = "Z@2".into();
        spec.v = "X@1".into();
        spec.times = TimeGrid { start: 0.0, stop: 1.0, step: 0.25 };
        spec
    }

    #[test]
    fn infinite_coupling_run_is_exact() {
        // at λ=∞ the initial state is exact at β=0, so O_corr = Õ_th
        let record = run(&quick_spec()).unwrap();
        let s = &record.series;
        for (corr, th) in s.o_corr.iter().zip(&s.o_th_norm) {
            assert!((corr - th).abs() < 1e-9, "{corr} vs {th}");
        }
        // reference circuit on |φ(0)⟩ matches the thermal value too
        for (tfd, th) in s.o_tfd.iter().zip(&s.o_th) {
            assert!((tfd - th).abs() < 1e-9);
        }
    }

    #[test]
    fn identical_spec_and_seed_reproduce_csv() {
        let mut spec = quick_spec();
        spec.shots = Some(200);
        let a = render_csv(&run(&spec).unwrap().series);
        let b = render_csv(&run(&spec).unwrap().series);
        assert_eq!(a, b);
        let mut other_seed = spec.clone();
        other_seed.seed = 7;
        let c = render_csv(&run(&other_seed).unwrap().series);
        assert_ne!(a, c, "different seed gives different samples");
    }

    #[test]
    fn shot_run_has_positive_finite_sigma() {
        let mut spec = quick_spec();
        spec.shots = Some(1000);
        let record = run(&spec).unwrap();
        for (i, s) in record.series.sigma_corr.iter().enumerate() {
            assert!(s.is_finite(), "sigma at point {i}");
            assert!(*s >= 0.0);
        }
        assert!(record.series.sigma_corr.iter().any(|s| *s > 0.0));
    }

    #[test]
    fn sampled_branch_agrees_with_expectation_level() {
        // large shot budget: sampled estimates converge to expectations
        let mut spec = quick_spec();
        spec.times = TimeGrid { start: 0.0, stop: 0.5, step: 0.5 };
        let exact = run(&spec).unwrap();
        spec.shots = Some(200_000);
        let sampled = run(&spec).unwrap();
        for i in 0..exact.series.times.len() {
            let diff = (exact.series.o_g[i] - sampled.series.o_g[i]).abs();
            let se = sampled.series.sigma_corr[i].max(1e-3);
            assert!(diff < 5.0 * se, "point {i}: diff {diff}, se {se}");
        }
    }

    #[test]
    fn sweep_is_deterministic_and_survives_failures() {
        let base = quick_spec();
        let values: Vec<String> =
            ["1", "not_a_number", "4"].iter().map(|s| s.to_string()).collect();
        let serial = sweep(&base, "lambda", &values, 1).unwrap();
        let parallel = sweep(&base, "lambda", &values, 4).unwrap();
        assert_eq!(serial.merged_csv, parallel.merged_csv);
        assert!(serial.merged_csv.contains("# lambda=not_a_number failed"));
        assert!(serial.records[0].1.is_ok());
        assert!(serial.records[1].1.is_err());
        assert!(serial.records[2].1.is_ok());
        assert_ne!(
            derive_seed(base.seed, 0),
            derive_seed(base.seed, 2),
            "per-value seeds differ"
        );
    }

    #[test]
    fn run_csv_roundtrips() {
        let record = run(&quick_spec()).unwrap();
        let csv = render_csv(&record.series);
        let rows = parse_csv(&csv).unwrap();
        assert_eq!(rows.len(), record.series.times.len());
        for (row, &t) in rows.iter().zip(&record.series.times) {
            assert_eq!(row[0], t);
        }
    }

    #[test]
    fn presets_are_valid_specs() {
        for figure in [Figure::Fig3, Figure::Fig4, Figure::Fig5, Figure::Fig6] {
            let specs = preset_specs(figure);
            assert!(!specs.is_empty());
            for (stem, spec) in &specs {
                spec.validate().unwrap_or_else(|e| panic!("{stem}: {e}"));
                assert_eq!(spec.n, 8);
            }
        }
        assert!(preset_specs(Figure::Fig2).is_empty());
        let stems: Vec<String> = preset_specs(Figure::Fig5)
            .into_iter()
            .map(|(s, _)| s)
            .collect();
        assert!(stems.iter().any(|s| s.contains("depolarization")));
        assert!(stems.iter().any(|s| s.contains("local_dephasing")));
    }

    #[test]
    fn noisy_kinds_run_through_the_pipeline() {
        // smoke test every evolution kind end to end at tiny size
        for (kind, gamma, eps) in [
            (EvolutionKind::IdealViaR, 0.0, 0.0),
            (EvolutionKind::CollectiveDephasing, 0.3, 0.0),
            (EvolutionKind::Depolarization, 0.5, 0.0),
            (EvolutionKind::LocalDephasing, 0.25, 0.0),
            (EvolutionKind::RemnantCoupling, 0.0, 0.4),
            (EvolutionKind::AsymmetricLegs, 0.0, 0.2),
        ] {
            let mut spec = quick_spec();
            spec.times = TimeGrid { start: 0.0, stop: 0.6, step: 0.3 };
            spec.evolution.kind = kind;
            spec.evolution.gamma = gamma;
            spec.evolution.epsilon = eps;
            spec.evolution.trajectories = 20;
            let record = run(&spec).unwrap_or_else(|e| panic!("{kind:?}: {e}"));
            assert!((record.series.o_corr[0] - 1.0).abs() < 0.35, "{kind:?} t=0 sanity");
            // sampled path for the same kind
            spec.shots = Some(300);
            run(&spec).unwrap_or_else(|e| panic!("{kind:?} sampled: {e}"));
        }
    }

    #[test]
    fn depolarization_correction_is_exact_at_expectation_level() {
        let mut clean = quick_spec();
        clean.times = TimeGrid { start: 0.0, stop: 1.0, step: 0.5 };
        let mut noisy = clean.clone();
        noisy.evolution.kind = EvolutionKind::Depolarization;
        noisy.evolution.gamma = 1.0;
        let a = run(&clean).unwrap();
        let b = run(&noisy).unwrap();
        for (x, y) in a.series.o_corr.iter().zip(&b.series.o_corr) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn readout_cancels_in_correction() {
        let mut clean = quick_spec();
        clean.times = TimeGrid { start: 0.0, stop: 1.0, step: 0.5 };
        let mut noisy = clean.clone();
        noisy.readout_x = 0.1;
        let a = run(&clean).unwrap();
        let b = run(&noisy).unwrap();
        for i in 0..a.series.times.len() {
            assert!((a.series.o_corr[i] - b.series.o_corr[i]).abs() < 1e-12);
            let want = a.series.o_g[i] * (1.0 - 0.2f64).powi(2);
            assert!((b.series.o_g[i] - want).abs() < 1e-12);
        }
    }
}
