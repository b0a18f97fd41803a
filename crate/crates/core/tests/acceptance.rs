//! Acceptance suite: fourteen end-to-end criteria covering the whole
//! pipeline. Each criterion prints one pass/fail line with its measured
//! margin and wall time; tolerances and runtime budgets are pinned in the
//! table at the bottom.
//!
//! Criterion 11 carries its own oracle: a dense density-matrix integrator
//! (RK4) for the local-dephasing Lindblad equation, built independently of
//! the trajectory unraveling it checks.

use std::collections::HashMap;
use std::sync::Mutex;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use otoc_ladder::config::{ExperimentSpec, TimeGrid};
use otoc_ladder::dynamics::{
    build_ideal_generator, evolve_ideal, evolve_via_r, local_dephasing_trajectory,
    pauli_cross_element, EvolutionKind, EvolutionSpec, KrylovPropagator,
};
use otoc_ladder::hilbert::{Axis, PauliString, PureState, SectorBasis};
use otoc_ladder::model::{
    build_chain_hamiltonian, build_chain_r, build_leg_hamiltonian, build_r, build_u0,
    particle_hole_defect, ChainSpec, LadderSpec, Leg,
};
use otoc_ladder::otoc::{
    error_bound, extract_kappa, otoc_circuit, otoc_exact_series, ObservablePair, VariantKind,
};
use otoc_ladder::output::render_csv;
use otoc_ladder::runner::{parent_ground, run};
use otoc_ladder::spectral::{full_spectrum, Spectrum};
use otoc_ladder::tfd::{build_phi, build_tfd, fidelity, optimize_beta};
use otoc_ladder::{Error, Result};

fn fail(msg: String) -> Error {
    Error::InvalidSpec(msg)
}

fn ensure(cond: bool, msg: String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(fail(msg))
    }
}

/// Shared cache of (β₀, F) per (n, λ): the fidelity optimization at n = 8 is
/// the most expensive single step and several criteria reuse its output.
struct Ctx {
    beta: Mutex<HashMap<(usize, u64), (f64, f64)>>,
}

impl Ctx {
    fn new() -> Self {
        Ctx {
            beta: Mutex::new(HashMap::new()),
        }
    }

    fn beta0_f(&self, n: usize, lambda: f64) -> Result<(f64, f64)> {
        let key = (n, lambda.to_bits());
        if let Some(&hit) = self.beta.lock().unwrap().get(&key) {
            return Ok(hit);
        }
        let model = LadderSpec::new(ChainSpec::new(n, 1.0)?, lambda)?;
        let r = optimize_beta(&model)?;
        let out = (r.beta0, r.f);
        self.beta.lock().unwrap().insert(key, out);
        Ok(out)
    }
}

fn grid(stop: f64, step: f64) -> Vec<f64> {
    TimeGrid { start: 0.0, stop, step }.points()
}

fn chain_spectrum(n: usize) -> Result<Spectrum> {
    let chain = ChainSpec::new(n, 1.0)?;
    let basis = SectorBasis::full(n);
    full_spectrum(&build_chain_hamiltonian(&chain, &basis)?)
}

/// |φ(β)⟩ = (U₀⊗1)|tfd(β)⟩ on the full 2n-qubit space.
fn phi_state(spectrum: &Spectrum, beta: f64) -> Result<PureState> {
    let n = spectrum.basis().num_qubits();
    let full2n = SectorBasis::full(2 * n);
    build_phi(&build_tfd(spectrum, beta)?, &build_u0(n, &full2n)?)
}

fn zx_pair(n: usize, w_site: usize, v_site: usize) -> Result<ObservablePair> {
    ObservablePair::new(
        n,
        Some(PauliString::single(w_site, Axis::Z)),
        PauliString::single(v_site, Axis::X),
    )
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let v0 = v[0];
    v.iter().map(|x| x / v0).collect()
}

/// 1. Circuit on |φ(β)⟩ reproduces the exact thermal OTOC pointwise.
fn protocol_identity(_: &Ctx) -> Result<String> {
    let times = grid(3.0, 0.1);
    let spectrum = chain_spectrum(4)?;
    let model = LadderSpec::new(ChainSpec::new(4, 1.0)?, 1.0)?;
    let pair = zx_pair(4, 2, 1)?; // W = Z@3, V = X@2 (1-based)
    let mut worst: f64 = 0.0;
    for beta in [0.0, 0.5, 1.0, 4.0] {
        let phi = phi_state(&spectrum, beta)?;
        let circuit = otoc_circuit(&phi, &pair, &model, &EvolutionSpec::ideal(), &times)?;
        let exact = otoc_exact_series(&spectrum, &pair, beta, &times, VariantKind::Oth)?;
        for (a, b) in circuit.o.iter().zip(&exact) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure(worst < 1e-10, format!("max |O_tfd − O_th| = {worst:.3e}"))?;
    Ok(format!("max |O_tfd − O_th| = {worst:.3e} over 4 temperatures"))
}

/// 2. n = 2 closed form: λ·sinh β₀ = 1 with perfect fidelity.
fn closed_form_beta0(ctx: &Ctx) -> Result<String> {
    let mut worst: f64 = 0.0;
    for lambda in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
        let (beta0, f) = ctx.beta0_f(2, lambda)?;
        worst = worst.max((lambda * beta0.sinh() - 1.0).abs());
        ensure(
            f > 1.0 - 1e-9,
            format!("F = {f} at lambda = {lambda} (need > 1 − 1e−9)"),
        )?;
    }
    ensure(worst < 1e-5, format!("|λ sinh β₀ − 1| = {worst:.3e}"))?;
    Ok(format!("|λ sinh β₀ − 1| ≤ {worst:.3e}, F ≥ 1 − 1e−9"))
}

/// 3. Limiting fidelities: F(β=0, λ=∞) = 1 and F(β→∞, λ=0) = 1.
fn limiting_fidelities(_: &Ctx) -> Result<String> {
    // β = 400 stands in for β → ∞: the first excited TFD weight is
    // e^{−200·gap} < 1e−30 for every chain size tested here
    const BETA_LARGE: f64 = 400.0;
    let mut worst: f64 = 0.0;
    for n in [2usize, 4, 6, 8] {
        let chain = ChainSpec::new(n, 1.0)?;
        let spectrum = chain_spectrum(n)?;
        let g_inf = parent_ground(&LadderSpec::new(chain, f64::INFINITY)?)?;
        let f_top = fidelity(&g_inf, &phi_state(&spectrum, 0.0)?)?;
        let g_zero = parent_ground(&LadderSpec::new(chain, 0.0)?)?;
        let f_bottom = fidelity(&g_zero, &phi_state(&spectrum, BETA_LARGE)?)?;
        worst = worst.max((1.0 - f_top).abs()).max((1.0 - f_bottom).abs());
    }
    ensure(worst < 1e-9, format!("max |1 − F| = {worst:.3e}"))?;
    Ok(format!("max |1 − F| = {worst:.3e} over n ∈ {{2,4,6,8}}"))
}

/// 4. Fidelity floor F(β₀, λ) ≥ 0.88 across the (n, λ) grid.
fn fidelity_floor(ctx: &Ctx) -> Result<String> {
    let mut fmin = f64::INFINITY;
    for n in [4usize, 6, 8] {
        for lambda in [0.5, 1.0, 2.0, 4.0, 8.0] {
            let (_, f) = ctx.beta0_f(n, lambda)?;
            ensure(
                f >= 0.88,
                format!("F = {f:.4} at n = {n}, lambda = {lambda} (floor 0.88)"),
            )?;
            fmin = fmin.min(f);
        }
    }
    Ok(format!("min F = {fmin:.4} ≥ 0.88 over 15 (n, λ) points"))
}

/// 5. Particle-hole identity R†HR = −H* and the via-R evolution route.
fn particle_hole_route(_: &Ctx) -> Result<String> {
    let mut defect: f64 = 0.0;
    for n in 2..=8 {
        let basis = SectorBasis::full(n);
        let h = build_chain_hamiltonian(&ChainSpec::new(n, 1.0)?, &basis)?;
        defect = defect.max(particle_hole_defect(&h, &build_chain_r(n, &basis)?)?);
    }
    ensure(defect < 1e-12, format!("max |R†HR + H*| = {defect:.3e}"))?;

    let model = LadderSpec::new(ChainSpec::new(4, 1.0)?, 1.0)?;
    let state = parent_ground(&model)?;
    let basis = state.basis().clone();
    let generator = build_ideal_generator(&model, &basis)?;
    let h1 = build_leg_hamiltonian(&model.chain, &basis, Leg::First)?;
    let h2 = build_leg_hamiltonian(&model.chain, &basis, Leg::Second)?;
    let h_sum =
        otoc_ladder::hilbert::SparseOperator::linear_combination(&[(1.0, &h1), (1.0, &h2)])?;
    let r2 = build_r(4, Leg::Second, &basis)?;
    let direct = evolve_ideal(&state, &generator, 1.0)?;
    let via_r = evolve_via_r(&state, &h_sum, &r2, &generator, 1.0)?;
    let worst = direct
        .amplitudes()
        .iter()
        .zip(via_r.amplitudes())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0_f64, f64::max);
    ensure(worst < 1e-9, format!("via-R amplitude deviation {worst:.3e}"))?;
    Ok(format!(
        "max |R†HR + H*| = {defect:.3e} (n ≤ 8); via-R deviation {worst:.3e}"
    ))
}

/// 6. The W = 1 reference branch on |φ(β)⟩ is constant in time.
fn reference_branch_constancy(_: &Ctx) -> Result<String> {
    let times = grid(3.0, 0.1);
    let spectrum = chain_spectrum(4)?;
    let phi = phi_state(&spectrum, 1.0)?;
    let model = LadderSpec::new(ChainSpec::new(4, 1.0)?, 1.0)?;
    let pair = zx_pair(4, 2, 1)?;
    let circuit = otoc_circuit(&phi, &pair, &model, &EvolutionSpec::ideal(), &times)?;
    let max = circuit.n.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = circuit.n.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = max - min;
    ensure(spread < 1e-10, format!("N spread {spread:.3e}"))?;
    Ok(format!("N spread {spread:.3e} over Jt ∈ [0, 3]"))
}

/// 7. Initial-state error bound: max_t |O_g − O_th| ≤ 2√(1−F).
fn initial_state_error_bound(ctx: &Ctx) -> Result<String> {
    let mut report = Vec::new();
    for lambda in [1.0, 4.0] {
        let (beta0, f) = ctx.beta0_f(8, lambda)?;
        let spec = ExperimentSpec {
            n: 8,
            lambda,
            beta_override: Some(beta0),
            w: "Z@5".into(),
            v: "X@4".into(),
            ..ExperimentSpec::default()
        };
        let series = run(&spec)?.series;
        let worst = series
            .o_g
            .iter()
            .zip(&series.o_th)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        let bound = error_bound(&spec.observable_pair()?, f)?;
        ensure(
            worst <= bound,
            format!("lambda = {lambda}: max |O_g − O_th| = {worst:.4} > bound {bound:.4}"),
        )?;
        report.push(format!("λ={lambda}: {worst:.3} ≤ {bound:.3}"));
    }
    Ok(report.join("; "))
}

/// 8. Correction efficacy: O_corr tracks Õ_th better than Õ_g does. The
/// mechanism the ratio cancels is the early decay of Õ_g, which grows with
/// the W–V separation: the separated pairs must improve strictly, while the
/// adjacent pair (whose raw estimate already tracks Õ_th from t = 0) must
/// merely not degrade materially (within 5%).
fn correction_efficacy(ctx: &Ctx) -> Result<String> {
    let (beta0, _) = ctx.beta0_f(8, 1.0)?;
    let mut report = Vec::new();
    for (w, v, strict) in [
        ("Z@5", "X@4", false),
        ("Z@6", "X@3", true),
        ("Z@6", "X@2", true),
    ] {
        let spec = ExperimentSpec {
            n: 8,
            lambda: 1.0,
            beta_override: Some(beta0),
            w: w.into(),
            v: v.into(),
            ..ExperimentSpec::default()
        };
        let series = run(&spec)?.series;
        let avg = |xs: &[f64], ys: &[f64]| -> f64 {
            let diffs: Vec<f64> = xs
                .iter()
                .zip(ys)
                .filter(|(a, _)| a.is_finite())
                .map(|(a, b)| (a - b).abs())
                .collect();
            diffs.iter().sum::<f64>() / diffs.len() as f64
        };
        let corrected = avg(&series.o_corr, &series.o_th_norm);
        let raw = avg(&series.o_g_norm, &series.o_th_norm);
        let limit = if strict { raw } else { 1.05 * raw };
        ensure(
            corrected < limit,
            format!("pair ({w}, {v}): avg|O_corr − Õ_th| = {corrected:.4} vs avg|Õ_g − Õ_th| = {raw:.4}"),
        )?;
        report.push(format!("({w},{v}): {:.2}×", corrected / raw));
    }
    Ok(format!("corrected/raw error ratios {}", report.join(", ")))
}

/// 9. Depolarization cancels exactly in the corrected ratio.
fn depolarization_robustness(_: &Ctx) -> Result<String> {
    let base = ExperimentSpec {
        n: 8,
        lambda: f64::INFINITY,
        w: "Z@5".into(),
        v: "X@4".into(),
        ..ExperimentSpec::default()
    };
    let clean = run(&base)?.series;
    let noisy_spec = ExperimentSpec {
        evolution: EvolutionSpec {
            kind: EvolutionKind::Depolarization,
            gamma: 1.0,
            ..EvolutionSpec::ideal()
        },
        ..base
    };
    let noisy = run(&noisy_spec)?.series;
    let worst = clean
        .o_corr
        .iter()
        .zip(&noisy.o_corr)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0_f64, f64::max);
    ensure(worst < 1e-10, format!("max |O_corr(γ=J) − O_corr(0)| = {worst:.3e}"))?;
    Ok(format!("max |O_corr(γ=J) − O_corr(0)| = {worst:.3e}"))
}

/// 10. Readout errors: exact (1−2x)² rescaling at expectation level, and the
/// sampled corrected estimate stays within 3σ of the noiseless value.
fn readout_robustness(_: &Ctx) -> Result<String> {
    let base = ExperimentSpec {
        beta_override: Some(1.0),
        times: TimeGrid { start: 0.0, stop: 3.0, step: 0.1 },
        ..ExperimentSpec::default() // n = 4, λ = 1, W = Z@3, V = X@2
    };
    let clean = run(&base)?.series;
    let mut worst: f64 = 0.0;
    for x in [0.05, 0.1, 0.2] {
        let series = run(&ExperimentSpec { readout_x: x, ..base.clone() })?.series;
        let scale = (1.0 - 2.0 * x).powi(2);
        for i in 0..series.times.len() {
            worst = worst.max((series.o_g[i] - scale * clean.o_g[i]).abs());
            worst = worst.max((series.o_corr[i] - clean.o_corr[i]).abs());
        }
    }
    ensure(worst < 1e-12, format!("expectation-level deviation {worst:.3e}"))?;

    let sampled_spec = ExperimentSpec {
        lambda: f64::INFINITY,
        beta_override: None,
        shots: Some(10_000),
        readout_x: 0.1,
        seed: 20_260_823,
        times: TimeGrid { start: 0.0, stop: 3.0, step: 0.25 },
        ..ExperimentSpec::default()
    };
    let reference = run(&ExperimentSpec {
        shots: None,
        readout_x: 0.0,
        ..sampled_spec.clone()
    })?
    .series;
    let sampled = run(&sampled_spec)?.series;
    let mut worst_z: f64 = 0.0;
    for i in 0..sampled.times.len() {
        let z = (sampled.o_corr[i] - reference.o_corr[i]).abs()
            / (3.0 * sampled.sigma_corr[i] + 1e-9);
        worst_z = worst_z.max(z);
        ensure(
            z <= 1.0,
            format!(
                "t = {}: sampled O_corr off by {:.4} vs 3σ = {:.4}",
                sampled.times[i],
                (sampled.o_corr[i] - reference.o_corr[i]).abs(),
                3.0 * sampled.sigma_corr[i]
            ),
        )?;
    }
    Ok(format!(
        "rescaling exact to {worst:.3e}; sampled within 3σ (max {:.2}σ)",
        3.0 * worst_z
    ))
}

/// Dense density-matrix RK4 integration of the local-dephasing Lindblad
/// equation dρ/dt = −i[G,ρ] + γ Σ_k (Z_k ρ Z_k − ρ), used as an independent
/// oracle for the trajectory unraveling.
fn lindblad_dense(
    state: &PureState,
    generator: &otoc_ladder::hilbert::SparseOperator,
    obs: &PauliString,
    grid_times: &[f64],
    gamma: f64,
) -> Result<Vec<f64>> {
    let basis = state.basis().clone();
    let dim = basis.dim();
    let sites = basis.num_qubits();

    // dense generator, column by column
    let mut g = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
    for j in 0..dim {
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[j] = C64::new(1.0, 0.0);
        let col = generator.apply(&PureState::from_amplitudes(basis.clone(), amps))?;
        for (i, a) in col.amplitudes().iter().enumerate() {
            g[(i, j)] = *a;
        }
    }

    // elementwise damping: D_ij = γ Σ_k (z_k(i)·z_k(j) − 1)
    let z = |i: usize, k: usize| -> f64 {
        if basis.state(i) & (1 << k) != 0 {
            1.0
        } else {
            -1.0
        }
    };
    let mut damp = DMatrix::from_element(dim, dim, 0.0_f64);
    for i in 0..dim {
        for j in 0..dim {
            damp[(i, j)] = gamma
                * (0..sites)
                    .map(|k| z(i, k) * z(j, k) - 1.0)
                    .sum::<f64>();
        }
    }

    // dense observable via matrix elements (out-of-sector parts project away,
    // matching the pure-state expectation convention)
    let unit = |j: usize| -> PureState {
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[j] = C64::new(1.0, 0.0);
        PureState::from_amplitudes(basis.clone(), amps)
    };
    let mut o = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
    for i in 0..dim {
        let ei = unit(i);
        for j in 0..dim {
            o[(i, j)] = pauli_cross_element(&ei, obs, &unit(j))?;
        }
    }

    let rhs = |rho: &DMatrix<C64>| -> DMatrix<C64> {
        let comm = &g * rho - rho * &g;
        let mut out = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
        for i in 0..dim {
            for j in 0..dim {
                out[(i, j)] = C64::new(0.0, -1.0) * comm[(i, j)] + damp[(i, j)] * rho[(i, j)];
            }
        }
        out
    };

    let amps = state.amplitudes();
    let mut rho = DMatrix::from_fn(dim, dim, |i, j| amps[i] * amps[j].conj());
    let dt = 0.002;
    let mut now = 0.0;
    let mut out = Vec::with_capacity(grid_times.len());
    for &t in grid_times {
        let steps = ((t - now) / dt).round() as usize;
        let h = if steps > 0 { (t - now) / steps as f64 } else { 0.0 };
        for _ in 0..steps {
            let k1 = rhs(&rho);
            let k2 = rhs(&(&rho + &k1 * C64::new(0.5 * h, 0.0)));
            let k3 = rhs(&(&rho + &k2 * C64::new(0.5 * h, 0.0)));
            let k4 = rhs(&(&rho + &k3 * C64::new(h, 0.0)));
            rho += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4)
                * C64::new(h / 6.0, 0.0);
        }
        now = t;
        let mut tr = C64::new(0.0, 0.0);
        for i in 0..dim {
            for j in 0..dim {
                tr += o[(i, j)] * rho[(j, i)];
            }
        }
        out.push(tr.re);
    }
    Ok(out)
}

/// 11. Local-dephasing trajectory ensemble agrees with dense Lindblad
/// integration within 3 standard errors at every probe time.
fn local_dephasing_oracle(_: &Ctx) -> Result<String> {
    const TRAJECTORIES: usize = 2000;
    const GAMMA: f64 = 0.25; // J/4
    let model = LadderSpec::new(ChainSpec::new(3, 1.0)?, 1.0)?;
    let state = parent_ground(&model)?; // 2n = 6 sites, S^z = 0 sector
    let basis = state.basis().clone();
    let generator = build_ideal_generator(&model, &basis)?;
    let pair = ObservablePair::new(3, None, PauliString::single(1, Axis::X))?;
    let obs = pair.mirrored_observable()?; // V† ⊗ V^T
    let grid_times: Vec<f64> = (1..=10).map(|i| 0.2 * i as f64).collect();

    let exact = lindblad_dense(&state, &generator, &obs, &grid_times, GAMMA)?;

    let prop = KrylovPropagator::new(generator)?;
    let mut samples: Vec<Vec<f64>> = vec![Vec::with_capacity(TRAJECTORIES); grid_times.len()];
    for idx in 0..TRAJECTORIES {
        local_dephasing_trajectory(&state, &prop, &grid_times, GAMMA, 1234, idx as u64, |gi, s| {
            samples[gi].push(s.expectation_pauli(&obs).re);
            Ok(())
        })?;
    }

    let mut worst_z: f64 = 0.0;
    for (gi, vals) in samples.iter().enumerate() {
        let k = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / k;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
        let se = (var / k).sqrt();
        let z = (mean - exact[gi]).abs() / (3.0 * se + 1e-9);
        worst_z = worst_z.max(z);
        ensure(
            z <= 1.0,
            format!(
                "t = {:.1}: trajectory mean {mean:.5} vs Lindblad {:.5}, 3 SE = {:.5}",
                grid_times[gi],
                exact[gi],
                3.0 * se
            ),
        )?;
    }
    Ok(format!(
        "{TRAJECTORIES} trajectories within 3 SE of dense Lindblad at 10 times (max {:.2} SE)",
        3.0 * worst_z
    ))
}

/// κ of the normalized exact thermal-variant OTOC on the standard grid.
fn kappa_exact(
    spectrum: &Spectrum,
    pair: &ObservablePair,
    beta: f64,
    kind: VariantKind,
) -> Result<f64> {
    let times = grid(3.0, 0.02);
    let series = otoc_exact_series(spectrum, pair, beta, &times, kind)?;
    extract_kappa(&times, &normalized(&series))
}

/// 12. κ trends: monotone saturation in λ and the variant-dependent
/// temperature trends.
fn kappa_trends(ctx: &Ctx) -> Result<String> {
    let spectrum = chain_spectrum(8)?;
    let pair = zx_pair(8, 4, 3)?; // W = Z@5, V = X@4 (1-based)

    let mut kappas = Vec::new();
    for lambda in [1.0, 2.0, 4.0, 10.0, f64::INFINITY] {
        let beta = if lambda.is_infinite() {
            0.0
        } else {
            ctx.beta0_f(8, lambda)?.0
        };
        kappas.push((lambda, kappa_exact(&spectrum, &pair, beta, VariantKind::Oth)?));
    }
    for w in kappas.windows(2) {
        ensure(
            w[1].1 >= w[0].1 * (1.0 - 1e-3),
            format!(
                "κ not nondecreasing: κ({}) = {:.4} > κ({}) = {:.4}",
                w[0].0, w[0].1, w[1].0, w[1].1
            ),
        )?;
    }
    let ratio = kappas[3].1 / kappas[4].1;
    ensure(
        (0.9..=1.1).contains(&ratio),
        format!("κ(10)/κ(∞) = {ratio:.4} outside [0.9, 1.1]"),
    )?;

    // variant trends over k_B T / J ∈ {1/8, 1, 8}  (β = 8, 1, 1/8)
    let betas = [8.0, 1.0, 0.125];
    let mut by_kind = HashMap::new();
    for kind in [VariantKind::Oth, VariantKind::O3, VariantKind::O1, VariantKind::O2] {
        let ks: Vec<f64> = betas
            .iter()
            .map(|&b| kappa_exact(&spectrum, &pair, b, kind))
            .collect::<Result<_>>()?;
        by_kind.insert(kind, ks);
    }
    for kind in [VariantKind::Oth, VariantKind::O3] {
        let ks = &by_kind[&kind];
        ensure(
            ks[0] < ks[1] && ks[1] < ks[2],
            format!("{kind:?}: κ not increasing with T: {ks:?}"),
        )?;
    }
    let k1 = &by_kind[&VariantKind::O1];
    ensure(
        k1[0] > k1[1] && k1[1] > k1[2],
        format!("O1: κ not decreasing with T: {k1:?}"),
    )?;
    let k2 = &by_kind[&VariantKind::O2];
    let (lo, hi) = (
        k2.iter().cloned().fold(f64::INFINITY, f64::min),
        k2.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    let spread = (hi - lo) / hi;
    ensure(spread < 0.25, format!("O2: κ varies by {:.0}%", 100.0 * spread))?;

    Ok(format!(
        "κ(λ) nondecreasing, κ(10)/κ(∞) = {ratio:.3}; variant T-trends hold (O2 spread {:.0}%)",
        100.0 * spread
    ))
}

/// 13. All four regularizations coincide at infinite temperature.
fn variant_convergence(_: &Ctx) -> Result<String> {
    let spectrum = chain_spectrum(4)?;
    let pair = zx_pair(4, 2, 1)?;
    let times = grid(3.0, 0.02);
    let reference = otoc_exact_series(&spectrum, &pair, 0.0, &times, VariantKind::Oth)?;
    let mut worst: f64 = 0.0;
    for kind in [VariantKind::O1, VariantKind::O2, VariantKind::O3] {
        let series = otoc_exact_series(&spectrum, &pair, 0.0, &times, kind)?;
        for (a, b) in series.iter().zip(&reference) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure(worst < 1e-10, format!("max spread {worst:.3e}"))?;
    Ok(format!("max |Oᵢ − O_th| = {worst:.3e} at β = 0"))
}

/// 14. Identical spec and seed give byte-identical CSV output.
fn run_determinism(_: &Ctx) -> Result<String> {
    let spec = ExperimentSpec {
        n: 3,
        lambda: f64::INFINITY,
        w: "Z@3".into(),
        v: "X@2".into(),
        times: TimeGrid { start: 0.0, stop: 1.0, step: 0.1 },
        shots: Some(500),
        seed: 42,
        ..ExperimentSpec::default()
    };
    let a = render_csv(&run(&spec)?.series);
    let b = render_csv(&run(&spec)?.series);
    ensure(a == b, "repeated run produced different CSV bytes".into())?;
    Ok(format!("{} identical bytes across repeated sampled runs", a.len()))
}

#[test]
fn acceptance() {
    type Criterion = fn(&Ctx) -> Result<String>;
    // (number, name, runtime budget in seconds, body)
    let table: Vec<(usize, &str, f64, Criterion)> = vec![
        (1, "protocol-identity", 10.0, protocol_identity),
        (2, "closed-form-beta0-n2", 5.0, closed_form_beta0),
        (3, "limiting-fidelities", 60.0, limiting_fidelities),
        (4, "fidelity-floor", 600.0, fidelity_floor),
        (5, "particle-hole-route", 30.0, particle_hole_route),
        (6, "reference-branch-constancy", 10.0, reference_branch_constancy),
        (7, "initial-state-error-bound", 300.0, initial_state_error_bound),
        (8, "correction-efficacy", 600.0, correction_efficacy),
        (9, "depolarization-robustness", 120.0, depolarization_robustness),
        (10, "readout-robustness", 120.0, readout_robustness),
        (11, "local-dephasing-oracle", 300.0, local_dephasing_oracle),
        (12, "kappa-trends", 900.0, kappa_trends),
        (13, "variant-convergence", 60.0, variant_convergence),
        (14, "run-determinism", 30.0, run_determinism),
    ];

    let ctx = Ctx::new();
    let mut failures = Vec::new();
    for (number, name, budget, body) in table {
        let start = Instant::now();
        let outcome = body(&ctx);
        let elapsed = start.elapsed().as_secs_f64();
        let on_time = elapsed < budget;
        match outcome {
            Ok(detail) if on_time => {
                println!("[PASS] {number:>2} {name} ({elapsed:.1}s) — {detail}");
            }
            Ok(detail) => {
                println!(
                    "[FAIL] {number:>2} {name} ({elapsed:.1}s) — over budget {budget:.0}s — {detail}"
                );
                failures.push(name);
            }
            Err(e) => {
                println!("[FAIL] {number:>2} {name} ({elapsed:.1}s) — {e}");
                failures.push(name);
            }
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
