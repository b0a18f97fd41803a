//! Time evolution: Krylov-subspace propagation for the ideal two-leg
//! unitary (directly or via the particle-hole conjugation trick), analytic
//! noise channels (collective dephasing, depolarization), quantum-trajectory
//! local dephasing, coherent imperfections, and the readout-error channel.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hilbert::{magnetization, PauliString, PureState, SectorBasis, SparseOperator};
use crate::model::{build_leg_hamiltonian, build_rung_coupling, LadderSpec, Leg};
use crate::spectral::{axpy, dot, norm, scale};

/// Which evolution/noise channel to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvolutionKind {
    IdealDirect,
    IdealViaR,
    CollectiveDephasing,
    Depolarization,
    LocalDephasing,
    RemnantCoupling,
    AsymmetricLegs,
}

/// Channel parameters. `gamma` is a rate (units of J/ħ), `epsilon` a
/// dimensionless imperfection strength, `trajectories`/`seed` control the
/// stochastic unraveling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionSpec {
    pub kind: EvolutionKind,
    pub gamma: f64,
    pub epsilon: f64,
    pub trajectories: usize,
    pub seed: u64,
}

impl EvolutionSpec {
    pub fn ideal() -> Self {
        EvolutionSpec {
            kind: EvolutionKind::IdealDirect,
            gamma: 0.0,
            epsilon: 0.0,
            trajectories: 1,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.gamma < 0.0 || !self.gamma.is_finite() {
            return Err(Error::InvalidSpec("gamma must be finite and >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::InvalidSpec("epsilon must be in [0, 1)".into()));
        }
        if self.kind == EvolutionKind::LocalDephasing && self.trajectories == 0 {
            return Err(Error::InvalidSpec(
                "local dephasing needs at least 1 trajectory".into(),
            ));
        }
        Ok(())
    }
}

/// Equal-weight ensemble of trajectory states.
pub struct TrajectoryEnsemble {
    pub states: Vec<PureState>,
    pub weights: Vec<f64>,
}

impl TrajectoryEnsemble {
    /// Ensemble-averaged ⟨P⟩ and its standard error.
    pub fn expectation_pauli(&self, p: &PauliString) -> Result<(C64, f64)> {
        let mut vals = Vec::with_capacity(self.states.len());
        for s in &self.states {
            vals.push(s.expectation_pauli(p));
        }
        let mean: C64 = vals
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| v * *w)
            .sum();
        let k = vals.len() as f64;
        let var_re: f64 = vals
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| w * (v.re - mean.re).powi(2))
            .sum();
        let se = if k > 1.0 { (var_re / (k - 1.0)).sqrt() } else { 0.0 };
        Ok((mean, se))
    }
}

/// State after a (possibly non-unitary) channel, kept in a form that allows
/// exact expectation values without a dense density matrix.
pub enum PropagatedState {
    Pure(PureState),
    /// Decomposition over total-S^z eigenvalues m; coherences between m and
    /// m′ are damped by exp(−γt (m−m′)²).
    SectorDamped {
        components: Vec<(i64, PureState)>,
        gamma_t: f64,
    },
    /// e^{−γt}·(pure part) + (1−e^{−γt})·(maximally mixed).
    Depolarized { state: PureState, decay: f64 },
    Ensemble(TrajectoryEnsemble),
}

impl PropagatedState {
    /// ⟨P⟩ under the channel output. For `Ensemble` this is the trajectory
    /// mean (see [`TrajectoryEnsemble::expectation_pauli`] for the error bar).
    pub fn expectation_pauli(&self, p: &PauliString) -> Result<C64> {
        match self {
            PropagatedState::Pure(s) => Ok(s.expectation_pauli(p)),
            PropagatedState::SectorDamped { components, gamma_t } => {
                let mut total = C64::new(0.0, 0.0);
                for (m, psi_m) in components {
                    for (mp, psi_mp) in components {
                        let damp = (-gamma_t * ((m - mp) as f64).powi(2)).exp();
                        total += pauli_cross_element(psi_m, p, psi_mp)? * damp;
                    }
                }
                Ok(total)
            }
            PropagatedState::Depolarized { state, decay } => {
                let pure = state.expectation_pauli(p);
                // identity part: tr(P)/dim = phase for the empty string, 0 otherwise
                let mixed = if p.factors().is_empty() {
                    p.phase()
                } else {
                    C64::new(0.0, 0.0)
                };
                Ok(pure * *decay + mixed * (1.0 - decay))
            }
            PropagatedState::Ensemble(e) => Ok(e.expectation_pauli(p)?.0),
        }
    }
}

/// ⟨bra|P|ket⟩ for states on the same basis; components P maps out of the
/// basis are projected away, matching `expectation_pauli`.
pub fn pauli_cross_element(bra: &PureState, p: &PauliString, ket: &PureState) -> Result<C64> {
    if !bra.basis().compatible(ket.basis()) {
        return Err(Error::BasisMismatch("cross element between bases".into()));
    }
    let basis = ket.basis();
    let mut total = C64::new(0.0, 0.0);
    for (j, amp) in ket.amplitudes().iter().enumerate() {
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        let (target, phase) = p.apply_to_bits(basis.state(j));
        if let Some(i) = basis.index(target) {
            total += bra.amplitudes()[i].conj() * phase * amp;
        }
    }
    Ok(total)
}

/// Krylov-subspace propagator for exp(−iHt) with a Hermitian generator.
/// Subspace dimension is capped at 30 and substeps adapt to keep the local
/// error estimate below 1e−10.
pub struct KrylovPropagator {
    h: SparseOperator,
    max_dim: usize,
    tol: f64,
}

impl KrylovPropagator {
    pub fn new(h: SparseOperator) -> Result<Self> {
        if h.hermiticity_defect() > 1e-10 {
            return Err(Error::InvalidSpec(
                "Krylov propagator needs a Hermitian generator".into(),
            ));
        }
        Ok(KrylovPropagator {
            h,
            max_dim: 30,
            tol: 1e-10,
        })
    }

    pub fn generator(&self) -> &SparseOperator {
        &self.h
    }

    pub fn basis(&self) -> &Arc<SectorBasis> {
        self.h.basis()
    }

    /// |ψ(t)⟩ = exp(−iHt)|ψ⟩. `t` may be any real number (negative evolves
    /// backwards).
    pub fn evolve(&self, state: &PureState, t: f64) -> Result<PureState> {
        if !state.basis().compatible(self.h.basis()) {
            return Err(Error::BasisMismatch(
                "state and generator on different bases".into(),
            ));
        }
        if t == 0.0 {
            return Ok(state.clone());
        }
        let mut v = state.amplitudes().to_vec();
        self.evolve_in_place(&mut v, t)?;
        Ok(PureState::from_amplitudes(state.basis().clone(), v))
    }

    /// In-place version used by grid walkers to avoid reallocation.
    pub fn evolve_in_place(&self, v: &mut [C64], t: f64) -> Result<()> {
        if t == 0.0 {
            return Ok(());
        }
        let total = t.abs();
        let sign = t.signum();
        let mut remaining = total;
        let mut dt = total;
        let floor = 1e-12 * total.max(1.0);
        while remaining > 0.0 {
            let step = dt.min(remaining);
            match self.try_step(v, sign * step)? {
                Some(err) => {
                    remaining -= step;
                    if err < self.tol / 100.0 {
                        dt = (step * 2.0).min(total);
                    } else {
                        dt = step;
                    }
                }
                None => {
                    dt = step / 2.0;
                    if dt < floor {
                        return Err(Error::StepUnderflow(dt));
                    }
                }
            }
        }
        Ok(())
    }

    /// One Krylov step over `dt`. Returns the accepted error estimate or
    /// `None` when the step must be halved.
    fn try_step(&self, v: &mut [C64], dt: f64) -> Result<Option<f64>> {
        let vnorm = norm(v);
        if vnorm == 0.0 {
            return Ok(Some(0.0));
        }
        let dim = v.len();
        let mut basis: Vec<Vec<C64>> = Vec::with_capacity(self.max_dim);
        let mut first = v.to_vec();
        scale(&mut first, 1.0 / vnorm);
        basis.push(first);
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut w = vec![C64::new(0.0, 0.0); dim];

        let mut happy = false;
        let mut tail_beta = 0.0;
        loop {
            let j = alphas.len();
            self.h.apply_to_slice(&basis[j], &mut w);
            if j > 0 {
                axpy(C64::new(-betas[j - 1], 0.0), &basis[j - 1], &mut w);
            }
            let alpha = dot(&basis[j], &w).re;
            axpy(C64::new(-alpha, 0.0), &basis[j], &mut w);
            alphas.push(alpha);
            // one reorthogonalization pass keeps the small subspace clean
            for b in &basis {
                let c = dot(b, &w);
                axpy(-c, b, &mut w);
            }
            let beta = norm(&w);
            if beta < 1e-14 * (1.0 + alpha.abs()) {
                happy = true;
                break;
            }
            if alphas.len() == self.max_dim {
                tail_beta = beta;
                break;
            }
            // early exit once the local estimate is already far below tol
            if alphas.len() >= 4 {
                let y = expi_tridiag(&alphas, &betas, dt);
                let est = beta * y[alphas.len() - 1].norm();
                if est < self.tol / 10.0 {
                    tail_beta = beta;
                    break;
                }
            }
            betas.push(beta);
            let mut next = w.clone();
            scale(&mut next, 1.0 / beta);
            basis.push(next);
        }

        let m = alphas.len();
        let y = expi_tridiag(&alphas, &betas[..m - 1], dt);
        let err = if happy { 0.0 } else { tail_beta * y[m - 1].norm() };
        if !happy && err > self.tol {
            return Ok(None);
        }
        for x in v.iter_mut() {
            *x = C64::new(0.0, 0.0);
        }
        for (j, b) in basis.iter().enumerate() {
            axpy(y[j] * vnorm, b, v);
        }
        Ok(Some(err))
    }
}

/// exp(−i·dt·T)·e₁ for a real symmetric tridiagonal T given by
/// `alphas` (diagonal) and `betas` (off-diagonal).
fn expi_tridiag(alphas: &[f64], betas: &[f64], dt: f64) -> Vec<C64> {
    let m = alphas.len();
    let mut t = nalgebra::DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alphas[i];
        if i + 1 < m && i < betas.len() {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = nalgebra::SymmetricEigen::new(t);
    let mut y = vec![C64::new(0.0, 0.0); m];
    for k in 0..m {
        let phase = C64::from_polar(1.0, -dt * eig.eigenvalues[k]);
        let c = phase * eig.eigenvectors[(0, k)];
        for i in 0..m {
            y[i] += c * eig.eigenvectors[(i, k)];
        }
    }
    y
}

/// Generator H₁ − H₂* of the ideal two-leg evolution.
pub fn build_ideal_generator(
    model: &LadderSpec,
    basis: &Arc<SectorBasis>,
) -> Result<SparseOperator> {
    let h1 = build_leg_hamiltonian(&model.chain, basis, Leg::First)?;
    let h2 = build_leg_hamiltonian(&model.chain, basis, Leg::Second)?;
    SparseOperator::linear_combination(&[(1.0, &h1), (-1.0, &h2.conjugated())])
}

/// exp(−i(H₁−H₂*)t)|ψ⟩.
pub fn evolve_ideal(state: &PureState, generator: &SparseOperator, t: f64) -> Result<PureState> {
    KrylovPropagator::new(generator.clone())?.evolve(state, t)
}

/// Particle-hole realization (1⊗R†)·exp(−i(H₁+H₂)t)·(1⊗R). The guard
/// verifies that conjugating `h_sum` by `r2` actually reproduces the
/// intended generator before trusting the trick.
pub fn evolve_via_r(
    state: &PureState,
    h_sum: &SparseOperator,
    r2: &SparseOperator,
    intended_generator: &SparseOperator,
    t: f64,
) -> Result<PureState> {
    let conjugated = h_sum.conjugate_by(r2)?;
    let defect = conjugated.add_max_abs(&intended_generator.scaled(-1.0))?;
    if defect > 1e-10 {
        return Err(Error::ParticleHoleViolated(defect));
    }
    let rotated = r2.apply(state)?;
    let evolved = KrylovPropagator::new(h_sum.clone())?.evolve(&rotated, t)?;
    r2.apply(&evolved) // R is Hermitian and involutory, so R† = R
}

/// Collective dephasing: unitary evolution plus damping e^{−γt(m−m′)²} of
/// coherences between total-S^z sectors. States confined to one sector come
/// out exactly as the ideal evolution.
pub fn evolve_collective_dephasing(
    state: &PureState,
    generator: &SparseOperator,
    t: f64,
    gamma: f64,
) -> Result<PropagatedState> {
    if gamma < 0.0 {
        return Err(Error::InvalidSpec("gamma must be >= 0".into()));
    }
    let evolved = evolve_ideal(state, generator, t)?;
    let basis = evolved.basis().clone();
    if basis.sector().is_some() {
        return Ok(PropagatedState::SectorDamped {
            components: vec![(basis.sector().unwrap(), evolved)],
            gamma_t: gamma * t,
        });
    }
    let n = basis.num_qubits();
    let mut by_sector: std::collections::BTreeMap<i64, Vec<C64>> = Default::default();
    for (i, amp) in evolved.amplitudes().iter().enumerate() {
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        let m = magnetization(basis.state(i), n);
        by_sector
            .entry(m)
            .or_insert_with(|| vec![C64::new(0.0, 0.0); basis.dim()])[i] = *amp;
    }
    let components = by_sector
        .into_iter()
        .map(|(m, amps)| (m, PureState::from_amplitudes(basis.clone(), amps)))
        .collect();
    Ok(PropagatedState::SectorDamped {
        components,
        gamma_t: gamma * t,
    })
}

/// Depolarization: ideal evolution with weight e^{−γt} plus the maximally
/// mixed state with weight 1−e^{−γt}.
pub fn evolve_depolarization(
    state: &PureState,
    generator: &SparseOperator,
    t: f64,
    gamma: f64,
) -> Result<PropagatedState> {
    if gamma < 0.0 {
        return Err(Error::InvalidSpec("gamma must be >= 0".into()));
    }
    Ok(PropagatedState::Depolarized {
        state: evolve_ideal(state, generator, t)?,
        decay: (-gamma * t).exp(),
    })
}

/// Per-trajectory RNG stream: reproducible regardless of scheduling.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_add(1));
    rng
}

/// Jump times in [0, t) for a Poisson process of total rate `rate`, paired
/// with uniformly random sites in [0, num_sites).
fn draw_jumps(rng: &mut ChaCha8Rng, t: f64, rate: f64, num_sites: usize) -> Vec<(f64, usize)> {
    let mut jumps = Vec::new();
    if rate <= 0.0 {
        return jumps;
    }
    let mut clock = 0.0;
    loop {
        let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        clock += -u.ln() / rate;
        if clock >= t {
            break;
        }
        jumps.push((clock, rng.gen_range(0..num_sites)));
    }
    jumps
}

/// Walks one local-dephasing trajectory through an increasing time grid,
/// invoking `visit(grid_index, state)` at every grid point. Jump times come
/// from a Poisson process of total rate 2nγ; each jump applies σ^z at a
/// uniformly random site (the jump operators are unitary, so the
/// deterministic segments are exactly the ideal evolution).
pub fn local_dephasing_trajectory<F>(
    state: &PureState,
    propagator: &KrylovPropagator,
    grid: &[f64],
    gamma: f64,
    seed: u64,
    trajectory_index: u64,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(usize, &PureState) -> Result<()>,
{
    let basis = state.basis().clone();
    let num_sites = basis.num_qubits();
    let t_max = grid.last().copied().unwrap_or(0.0);
    let mut rng = trajectory_rng(seed, trajectory_index);
    let jumps = draw_jumps(&mut rng, t_max, num_sites as f64 * gamma, num_sites);

    let mut v = state.amplitudes().to_vec();
    let mut now = 0.0;
    let mut next_jump = 0usize;
    for (gi, &tg) in grid.iter().enumerate() {
        while next_jump < jumps.len() && jumps[next_jump].0 <= tg {
            let (tj, site) = jumps[next_jump];
            propagator.evolve_in_place(&mut v, tj - now)?;
            apply_z_in_place(&basis, &mut v, site);
            now = tj;
            next_jump += 1;
        }
        propagator.evolve_in_place(&mut v, tg - now)?;
        now = tg;
        let snapshot = PureState::from_amplitudes(basis.clone(), v.clone());
        visit(gi, &snapshot)?;
    }
    Ok(())
}

fn apply_z_in_place(basis: &SectorBasis, v: &mut [C64], site: usize) {
    for (i, amp) in v.iter_mut().enumerate() {
        if basis.state(i) & (1 << site) == 0 {
            *amp = -*amp;
        }
    }
}

/// Full trajectory ensemble at a single time (small systems / oracles).
pub fn evolve_local_dephasing(
    state: &PureState,
    generator: &SparseOperator,
    t: f64,
    spec: &EvolutionSpec,
) -> Result<TrajectoryEnsemble> {
    spec.validate()?;
    let prop = KrylovPropagator::new(generator.clone())?;
    let grid = [t];
    let k = spec.trajectories;
    let mut states = Vec::with_capacity(k);
    for idx in 0..k {
        local_dephasing_trajectory(state, &prop, &grid, spec.gamma, spec.seed, idx as u64, |_, s| {
            states.push(s.clone());
            Ok(())
        })?;
    }
    Ok(TrajectoryEnsemble {
        states,
        weights: vec![1.0 / k as f64; k],
    })
}

/// Coherent imperfections: remnant rung coupling (generator
/// H₁ − H₂* + ε·H₁₂) or asymmetric legs (generator (1−ε)H₁ − (1+ε)H₂*).
pub fn build_imperfect_generator(
    model: &LadderSpec,
    basis: &Arc<SectorBasis>,
    spec: &EvolutionSpec,
) -> Result<SparseOperator> {
    spec.validate()?;
    let h1 = build_leg_hamiltonian(&model.chain, basis, Leg::First)?;
    let h2s = build_leg_hamiltonian(&model.chain, basis, Leg::Second)?.conjugated();
    match spec.kind {
        EvolutionKind::RemnantCoupling => {
            let h12 = build_rung_coupling(&model.chain, basis)?;
            SparseOperator::linear_combination(&[(1.0, &h1), (-1.0, &h2s), (spec.epsilon, &h12)])
        }
        EvolutionKind::AsymmetricLegs => SparseOperator::linear_combination(&[
            (1.0 - spec.epsilon, &h1),
            (-(1.0 + spec.epsilon), &h2s),
        ]),
        _ => Err(Error::InvalidSpec(
            "build_imperfect_generator handles remnant_coupling and asymmetric_legs".into(),
        )),
    }
}

pub fn evolve_imperfect(
    state: &PureState,
    model: &LadderSpec,
    spec: &EvolutionSpec,
    t: f64,
) -> Result<PureState> {
    let generator = build_imperfect_generator(model, state.basis(), spec)?;
    evolve_ideal(state, &generator, t)
}

/// Outcome distribution over the measured pair (s₁, s₂) ∈ {±1}²; index
/// `(b₁<<1)|b₂` with bit 0 ↔ outcome +1.
pub type OutcomeDistribution = [f64; 4];

/// Expectation of the product s₁·s₂.
pub fn pair_expectation(dist: &OutcomeDistribution) -> f64 {
    dist[0b00] - dist[0b01] - dist[0b10] + dist[0b11]
}

/// Independent symmetric readout errors: each measured bit flips with
/// probability x, mixing outcomes with weights (1−x)², x(1−x), x².
pub fn apply_readout_error(dist: &OutcomeDistribution, x: f64) -> Result<OutcomeDistribution> {
    if !(0.0..=0.5).contains(&x) {
        return Err(Error::InvalidSpec("readout error x must be in [0, 1/2]".into()));
    }
    let total: f64 = dist.iter().sum();
    if (total - 1.0).abs() > 1e-9 || dist.iter().any(|&p| p < -1e-12) {
        return Err(Error::InvalidSpec("outcome distribution not normalized".into()));
    }
    let mut out = [0.0; 4];
    for (j, &p) in dist.iter().enumerate() {
        for i in 0..4usize {
            let flips = (i ^ j).count_ones();
            let w = x.powi(flips as i32) * (1.0 - x).powi(2 - flips as i32);
            out[i] += w * p;
        }
    }
    Ok(out)
}
