//! Fast self-check suite behind the `verify` subcommand: exercises the core
//! protocol identities at small sizes so a user can validate a build in
//! seconds.

use crate::config::{ExperimentSpec, TimeGrid};
use crate::dynamics::{apply_readout_error, pair_expectation, EvolutionSpec};
use crate::error::Result;
use crate::hilbert::{Axis, PauliString, SectorBasis};
use crate::model::{
    build_chain_hamiltonian, build_chain_r, build_u0, particle_hole_defect, ChainSpec,
    LadderSpec,
};
use crate::otoc::{otoc_circuit, otoc_exact_series, ObservablePair, VariantKind};
use crate::output::render_csv;
use crate::runner::run;
use crate::spectral::full_spectrum;
use crate::tfd::{build_phi, build_tfd, optimize_beta};

pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, body: impl FnOnce() -> Result<String>) -> CheckResult {
    match body() {
        Ok(detail) => CheckResult { name, passed: true, detail },
        Err(e) => CheckResult {
            name,
            passed: false,
            detail: e.to_string(),
        },
    }
}

fn ensure(cond: bool, msg: String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(crate::error::Error::InvalidSpec(msg))
    }
}

/// Runs every check; all are independent, none should take more than a
/// couple of seconds.
pub fn run_all() -> Vec<CheckResult> {
    vec![
        check("protocol-identity", protocol_identity),
        check("reference-branch-constant", reference_branch_constant),
        check("rotation-insertion-invariance", rotation_insertion_invariance),
        check("particle-hole-identity", particle_hole_identity),
        check("variant-convergence-infinite-T", variant_convergence),
        check("closed-form-beta0-n2", closed_form_beta0),
        check("readout-rescaling-identity", readout_rescaling),
        check("run-determinism", run_determinism),
    ]
}

fn small_setup(
    n: usize,
    beta: f64,
) -> Result<(
    crate::spectral::Spectrum,
    crate::hilbert::PureState,
    LadderSpec,
    ObservablePair,
)> {
    let chain = ChainSpec::new(n, 1.0)?;
    let basis = SectorBasis::full(n);
    let spectrum = full_spectrum(&build_chain_hamiltonian(&chain, &basis)?)?;
    let full2n = SectorBasis::full(2 * n);
    let phi = build_phi(&build_tfd(&spectrum, beta)?, &build_u0(n, &full2n)?)?;
    let model = LadderSpec::new(chain, 1.0)?;
    let pair = ObservablePair::new(
        n,
        Some(PauliString::single(n - 1, Axis::Z)),
        PauliString::single(n - 2, Axis::X),
    )?;
    Ok((spectrum, phi, model, pair))
}

/// Circuit on |φ(β)⟩ equals the exact thermal OTOC.
fn protocol_identity() -> Result<String> {
    let times: Vec<f64> = (0..6).map(|i| i as f64 * 0.4).collect();
    let mut worst: f64 = 0.0;
    for beta in [0.0, 1.0] {
        let (spectrum, phi, model, pair) = small_setup(3, beta)?;
        let circuit = otoc_circuit(&phi, &pair, &model, &EvolutionSpec::ideal(), &times)?;
        let exact = otoc_exact_series(&spectrum, &pair, beta, &times, VariantKind::Oth)?;
        for (a, b) in circuit.o.iter().zip(&exact) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure(worst < 1e-10, format!("max |O_tfd - O_th| = {worst:.3e}"))?;
    Ok(format!("max deviation {worst:.3e}"))
}

/// The W = 1 branch on |φ(β)⟩ is constant in time.
fn reference_branch_constant() -> Result<String> {
    let times: Vec<f64> = (0..11).map(|i| i as f64 * 0.3).collect();
    let (_, phi, model, pair) = small_setup(3, 0.7)?;
    let circuit = otoc_circuit(&phi, &pair, &model, &EvolutionSpec::ideal(), &times)?;
    let max = circuit.n.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = circuit.n.iter().cloned().fold(f64::INFINITY, f64::min);
    ensure(max - min < 1e-10, format!("N spread {:.3e}", max - min))?;
    Ok(format!("N spread {:.3e}", max - min))
}

/// Measuring the bare mirrored observable from |tfd⟩ equals measuring the
/// rotated observable from (U₀⊗1)|tfd⟩.
fn rotation_insertion_invariance() -> Result<String> {
    let n = 3;
    let (spectrum, phi, model, pair) = small_setup(n, 0.7)?;
    let times = [0.0, 0.8, 1.6];
    let tfd = build_tfd(&spectrum, 0.7)?;
    let circuit_rot = otoc_circuit(&phi, &pair, &model, &EvolutionSpec::ideal(), &times)?;
    // unrotated frame: evolve |tfd⟩ and measure V†⊗V^T directly
    let basis = tfd.state.basis().clone();
    let generator = crate::dynamics::build_ideal_generator(&model, &basis)?;
    let obs = pair.mirrored_observable()?;
    let w = pair.w().expect("pair has W");
    let mut worst: f64 = 0.0;
    for (&t, rot) in times.iter().zip(&circuit_rot.o) {
        let evolved =
            crate::dynamics::evolve_ideal(&tfd.state.apply_pauli(w)?, &generator, t)?;
        let plain = evolved.expectation_pauli(&obs).re;
        worst = worst.max((plain - rot).abs());
    }
    ensure(worst < 1e-10, format!("max deviation {worst:.3e}"))?;
    Ok(format!("max deviation {worst:.3e}"))
}

/// R†HR = −H* on the single chain for n up to 6.
fn particle_hole_identity() -> Result<String> {
    let mut worst: f64 = 0.0;
    for n in 2..=6 {
        let chain = ChainSpec::new(n, 1.0)?;
        let basis = SectorBasis::full(n);
        let h = build_chain_hamiltonian(&chain, &basis)?;
        let r = build_chain_r(n, &basis)?;
        worst = worst.max(particle_hole_defect(&h, &r)?);
    }
    ensure(worst < 1e-12, format!("max defect {worst:.3e}"))?;
    Ok(format!("max defect {worst:.3e} over n = 2..=6"))
}

/// All four regularizations coincide at infinite temperature.
fn variant_convergence() -> Result<String> {
    let (spectrum, _, _, pair) = small_setup(3, 0.0)?;
    let times = [0.0, 0.5, 1.0];
    let reference = otoc_exact_series(&spectrum, &pair, 0.0, &times, VariantKind::Oth)?;
    let mut worst: f64 = 0.0;
    for kind in [VariantKind::O1, VariantKind::O2, VariantKind::O3] {
        let v = otoc_exact_series(&spectrum, &pair, 0.0, &times, kind)?;
        for (a, b) in v.iter().zip(&reference) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure(worst < 1e-10, format!("max spread {worst:.3e}"))?;
    Ok(format!("max spread {worst:.3e}"))
}

/// n = 2 closed form: λ·sinh β₀ = 1 at the fidelity optimum.
fn closed_form_beta0() -> Result<String> {
    let mut worst: f64 = 0.0;
    for lambda in [0.5, 2.0] {
        let model = LadderSpec::new(ChainSpec::new(2, 1.0)?, lambda)?;
        let r = optimize_beta(&model)?;
        worst = worst.max((lambda * r.beta0.sinh() - 1.0).abs());
        ensure(r.f > 1.0 - 1e-9, format!("F = {} at lambda = {lambda}", r.f))?;
    }
    ensure(worst < 1e-5, format!("|λ sinh β₀ − 1| = {worst:.3e}"))?;
    Ok(format!("|λ sinh β₀ − 1| ≤ {worst:.3e}"))
}

/// Readout channel rescales the pair expectation by (1−2x)².
fn readout_rescaling() -> Result<String> {
    let dist = [0.4, 0.3, 0.2, 0.1];
    let ideal = pair_expectation(&dist);
    let mut worst: f64 = 0.0;
    for x in [0.05, 0.1, 0.2] {
        let noisy = pair_expectation(&apply_readout_error(&dist, x)?);
        worst = worst.max((noisy - (1.0 - 2.0 * x).powi(2) * ideal).abs());
    }
    ensure(worst < 1e-12, format!("max deviation {worst:.3e}"))?;
    Ok(format!("max deviation {worst:.3e}"))
}

/// Identical spec + seed gives byte-identical CSV.
fn run_determinism() -> Result<String> {
    let mut spec = ExperimentSpec {
        n: 3,
        w: "Z@2".into(),
        v: "X@1".into(),
        times: TimeGrid { start: 0.0, stop: 0.6, step: 0.3 },
        shots: Some(200),
        ..ExperimentSpec::default()
    };
    spec.set("lambda", "inf")?;
    let a = render_csv(&run(&spec)?.series);
    let b = render_csv(&run(&spec)?.series);
    ensure(a == b, "repeated run differs".into())?;
    Ok(format!("{} identical bytes", a.len()))
}
