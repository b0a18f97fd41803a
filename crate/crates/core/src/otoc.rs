//! OTOC quantities: exact thermal definitions in the chain eigenbasis, the
//! two-leg circuit estimator, the corrected ratio O_corr = O_g/N_g, shot
//! sampling with readout errors, the initial-state error bound, and the
//! half-height slope κ.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::config::ExperimentSpec;
use crate::dynamics::{
    apply_readout_error, build_ideal_generator, build_imperfect_generator,
    local_dephasing_trajectory, pauli_cross_element, EvolutionKind, EvolutionSpec,
    KrylovPropagator, OutcomeDistribution, PropagatedState,
};
use crate::error::{Error, Result};
use crate::hilbert::{
    magnetization, pauli_string_to_operator, Axis, PauliString, PureState, SparseOperator,
};
use crate::model::{build_leg_hamiltonian, build_r, r_string, LadderSpec, Leg};
use crate::spectral::Spectrum;

/// The perturbation W (leg 1, optional) and probe V (leg 1) of one OTOC
/// experiment, plus the mirrored copy of V on leg 2.
#[derive(Debug, Clone)]
pub struct ObservablePair {
    n: usize,
    w: Option<PauliString>,
    v: PauliString,
}

impl ObservablePair {
    pub fn new(n: usize, w: Option<PauliString>, v: PauliString) -> Result<Self> {
        if v.factors().is_empty() {
            return Err(Error::InvalidSpec("V must be a nontrivial Pauli".into()));
        }
        for p in w.iter().chain(std::iter::once(&v)) {
            if p.max_site().is_some_and(|s| s >= n) {
                return Err(Error::InvalidSpec(format!(
                    "operator site beyond leg 1 (n = {n})"
                )));
            }
            if (p.phase() - C64::new(1.0, 0.0)).norm() > 1e-15 {
                return Err(Error::InvalidSpec(
                    "W and V must be bare Pauli strings (unit phase)".into(),
                ));
            }
        }
        Ok(ObservablePair { n, w, v })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn w(&self) -> Option<&PauliString> {
        self.w.as_ref()
    }

    pub fn v(&self) -> &PauliString {
        &self.v
    }

    /// V^T placed on leg 2 (sites shifted by n); X^T=X, Y^T=−Y, Z^T=Z.
    pub fn v_mirror(&self) -> PauliString {
        self.v.transpose().shifted(self.n)
    }

    /// The measured operator V† ⊗ V^T on 2n qubits.
    pub fn mirrored_observable(&self) -> Result<PauliString> {
        self.v.dagger().product(&self.v_mirror())
    }

    /// Sign picked up by V† under conjugation with U₀ = Πσ^y on leg 1:
    /// each X or Z factor flips.
    pub fn u0_sign(&self) -> f64 {
        let flips = self
            .v
            .factors()
            .iter()
            .filter(|(_, a)| !matches!(a, Axis::Y))
            .count();
        if flips % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// The operator to measure when the initial state lives in the rotated
    /// frame (|φ(β)⟩ = (U₀⊗1)|tfd⟩ or the parent ground state |g(λ)⟩):
    /// U₀-conjugation of V† reduces to the sign [`Self::u0_sign`].
    pub fn rotated_observable(&self) -> Result<PauliString> {
        let sign = C64::new(self.u0_sign(), 0.0);
        Ok(self.mirrored_observable()?.with_phase(sign))
    }

    /// Bare single-leg Pauli strings actually measured in hardware: V's
    /// axes at its own sites (leg 1) and at the mirror sites (leg 2).
    pub fn bare_legs(&self) -> (PauliString, PauliString) {
        let p1 = PauliString::new(self.v.factors().to_vec()).expect("validated factors");
        let p2 = PauliString::new(
            self.v
                .factors()
                .iter()
                .map(|&(s, a)| (s + self.n, a))
                .collect(),
        )
        .expect("validated factors");
        (p1, p2)
    }

    /// Sign relating the product of bare leg outcomes to the rotated-frame
    /// observable (transpose phases × U₀ sign); −1 for any single-site V.
    pub fn measurement_sign(&self) -> Result<f64> {
        let phase = self.rotated_observable()?.phase();
        if phase.im.abs() > 1e-12 || (phase.re.abs() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSpec(
                "measured observable must have a ±1 phase".into(),
            ));
        }
        Ok(phase.re)
    }
}

/// Thermal-OTOC regularization variants; y = e^{−βH/4}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VariantKind {
    /// tr(y² W† V†(t) y² W V(t)) / Z
    O1,
    /// tr(y⁴ W† V†(t) W V(t)) / Z
    O2,
    /// tr(y W† y V†(t) y W y V(t)) / Z
    O3,
    /// tr(y² W† V†(t) W y² V(t)) / Z
    Oth,
}

/// Real/imaginary matrix pair; complex products run as four real GEMMs.
struct CMat {
    re: DMatrix<f64>,
    im: DMatrix<f64>,
}

impl CMat {
    fn from_complex(m: &DMatrix<C64>) -> Self {
        CMat {
            re: m.map(|z| z.re),
            im: m.map(|z| z.im),
        }
    }

    fn mul(&self, other: &CMat) -> CMat {
        CMat {
            re: &self.re * &other.re - &self.im * &other.im,
            im: &self.re * &other.im + &self.im * &other.re,
        }
    }

    fn adjoint(&self) -> CMat {
        CMat {
            re: self.re.transpose(),
            im: -self.im.transpose(),
        }
    }

    fn scale_rows(&mut self, d: &[f64]) {
        for (i, &s) in d.iter().enumerate() {
            self.re.row_mut(i).scale_mut(s);
            self.im.row_mut(i).scale_mut(s);
        }
    }

    fn scale_cols(&mut self, d: &[f64]) {
        for (j, &s) in d.iter().enumerate() {
            self.re.column_mut(j).scale_mut(s);
            self.im.column_mut(j).scale_mut(s);
        }
    }

    /// tr(self · other) = Σ_ij self_ij other_ji.
    fn trace_product(&self, other: &CMat) -> C64 {
        let n = self.re.nrows();
        let mut re = 0.0;
        let mut im = 0.0;
        for i in 0..n {
            for j in 0..n {
                let (ar, ai) = (self.re[(i, j)], self.im[(i, j)]);
                let (br, bi) = (other.re[(j, i)], other.im[(j, i)]);
                re += ar * br - ai * bi;
                im += ar * bi + ai * br;
            }
        }
        C64::new(re, im)
    }
}

/// Exact thermal OTOC over a time grid, evaluated in the chain eigenbasis.
/// Every variant reduces to tr(A·V(t)†·B·V(t))/Z for fixed A, B.
pub fn otoc_exact_series(
    spectrum: &Spectrum,
    pair: &ObservablePair,
    beta: f64,
    times: &[f64],
    kind: VariantKind,
) -> Result<Vec<f64>> {
    if beta < 0.0 || !beta.is_finite() {
        return Err(Error::InvalidSpec("beta must be finite and >= 0".into()));
    }
    let basis = spectrum.basis();
    if basis.sector().is_some() || basis.num_qubits() != pair.n {
        return Err(Error::BasisMismatch(
            "otoc_exact needs the full chain spectrum matching the pair".into(),
        ));
    }
    let dim = spectrum.dim();
    let e0 = spectrum.ground_energy();
    let energies = &spectrum.energies;

    let u = CMat {
        re: spectrum.eigenvector_matrix(),
        im: DMatrix::zeros(dim, dim),
    };
    let ut = CMat {
        re: u.re.transpose(),
        im: DMatrix::zeros(dim, dim),
    };
    let to_eigen = |p: &PauliString| -> Result<CMat> {
        let dense = pauli_string_to_operator(p, basis)?.to_dense();
        Ok(ut.mul(&CMat::from_complex(&dense)).mul(&u))
    };

    let w_eigen = match pair.w() {
        Some(w) => to_eigen(w)?,
        None => CMat {
            re: DMatrix::identity(dim, dim),
            im: DMatrix::zeros(dim, dim),
        },
    };
    let v_eigen = to_eigen(&pair.v)?;

    let d = |p: f64| -> Vec<f64> {
        energies
            .iter()
            .map(|&e| (-beta * p * (e - e0) / 4.0).exp())
            .collect()
    };
    let w_dag = w_eigen.adjoint();
    let (mut a, mut b) = match kind {
        VariantKind::O1 => {
            let mut a = w_dag;
            a.scale_rows(&d(2.0));
            let mut b = w_eigen;
            b.scale_rows(&d(2.0));
            (a, b)
        }
        VariantKind::O2 => {
            let mut a = w_dag;
            a.scale_rows(&d(4.0));
            (a, w_eigen)
        }
        VariantKind::O3 => {
            let d1 = d(1.0);
            let mut a = w_dag;
            a.scale_rows(&d1);
            a.scale_cols(&d1);
            let mut b = w_eigen;
            b.scale_rows(&d1);
            b.scale_cols(&d1);
            (a, b)
        }
        VariantKind::Oth => {
            let mut a = w_dag;
            a.scale_rows(&d(2.0));
            let mut b = w_eigen;
            b.scale_cols(&d(2.0));
            (a, b)
        }
    };
    // keep borrow checker and the reader on the same page: a, b are fixed now
    let (a, b) = (&mut a, &mut b);

    let zs: f64 = d(4.0).iter().sum();
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        // V(t) in the eigenbasis: M_ij = e^{i(E_i−E_j)t} Ṽ_ij
        let mut m = CMat {
            re: DMatrix::zeros(dim, dim),
            im: DMatrix::zeros(dim, dim),
        };
        for i in 0..dim {
            for j in 0..dim {
                let phi = (energies[i] - energies[j]) * t;
                let (s, c) = phi.sin_cos();
                m.re[(i, j)] = c * v_eigen.re[(i, j)] - s * v_eigen.im[(i, j)];
                m.im[(i, j)] = c * v_eigen.im[(i, j)] + s * v_eigen.re[(i, j)];
            }
        }
        let x = m.mul(a);
        let y = m.adjoint().mul(b);
        let val = x.trace_product(&y) / zs;
        // Oth and O3 are identically real for Hermitian W, V; O1 and O2 are
        // not (their traces are of squared non-normal matrices), so for
        // those the real part — the Hermitian average of the correlator —
        // is the reported value.
        if matches!(kind, VariantKind::Oth | VariantKind::O3) && val.im.abs() > 1e-9 {
            return Err(Error::InvalidSpec(format!(
                "otoc_exact produced imaginary part {:.3e}; W, V not Hermitian?",
                val.im
            )));
        }
        out.push(val.re);
    }
    Ok(out)
}

pub fn otoc_exact(
    spectrum: &Spectrum,
    pair: &ObservablePair,
    beta: f64,
    t: f64,
    kind: VariantKind,
) -> Result<f64> {
    Ok(otoc_exact_series(spectrum, pair, beta, &[t], kind)?[0])
}

/// Expectation-level output of the two-branch circuit: the perturbed branch
/// O (W applied) and the reference branch N (W = 1), with per-time
/// trajectory standard errors where the channel is stochastic.
pub struct CircuitSeries {
    pub o: Vec<f64>,
    pub n: Vec<f64>,
    pub o_se: Vec<f64>,
    pub n_se: Vec<f64>,
}

/// Runs the two-leg interference circuit at expectation level over `times`.
/// `initial` must be a rotated-frame state (|φ(β)⟩ or |g(λ)⟩) on 2n qubits;
/// the measured observable compensates the U₀ conjugation sign.
pub fn otoc_circuit(
    initial: &PureState,
    pair: &ObservablePair,
    model: &LadderSpec,
    evo: &EvolutionSpec,
    times: &[f64],
) -> Result<CircuitSeries> {
    evo.validate()?;
    validate_grid(times)?;
    if initial.basis().num_qubits() != 2 * pair.n {
        return Err(Error::BasisMismatch(
            "circuit initial state must live on 2n qubits".into(),
        ));
    }
    let obs = pair.rotated_observable()?;
    let (o, o_se) = circuit_branch(initial, pair.w(), &obs, model, evo, times)?;
    let (n, n_se) = circuit_branch(initial, None, &obs, model, evo, times)?;
    Ok(CircuitSeries { o, n, o_se, n_se })
}

fn validate_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidSpec("empty time grid".into()));
    }
    if times[0] < 0.0 || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidSpec(
            "time grid must be nondecreasing and nonnegative".into(),
        ));
    }
    Ok(())
}

fn circuit_branch(
    initial: &PureState,
    w: Option<&PauliString>,
    obs: &PauliString,
    model: &LadderSpec,
    evo: &EvolutionSpec,
    times: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let prepared = match w {
        Some(p) => initial.apply_pauli(p)?,
        None => initial.clone(),
    };
    let basis = prepared.basis().clone();
    let zeros = vec![0.0; times.len()];
    match evo.kind {
        EvolutionKind::IdealDirect => {
            let g = build_ideal_generator(model, &basis)?;
            Ok((walk_expectations(&g, &prepared, times, obs)?, zeros))
        }
        EvolutionKind::RemnantCoupling | EvolutionKind::AsymmetricLegs => {
            let g = build_imperfect_generator(model, &basis, evo)?;
            Ok((walk_expectations(&g, &prepared, times, obs)?, zeros))
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
            let rotated = r2.apply(&prepared)?;
            // measure R(obs)R = ±obs on the co-rotated trajectory
            let r_str = r_string(model.chain.n, model.chain.n);
            let obs_r = conjugate_by_z_string(obs, &r_str);
            Ok((walk_expectations(&h_sum, &rotated, times, &obs_r)?, zeros))
        }
        EvolutionKind::Depolarization => {
            let g = build_ideal_generator(model, &basis)?;
            let mut vals = walk_expectations(&g, &prepared, times, obs)?;
            for (v, &t) in vals.iter_mut().zip(times) {
                *v *= (-evo.gamma * t).exp(); // obs is traceless
            }
            Ok((vals, zeros))
        }
        EvolutionKind::CollectiveDephasing => {
            let g = build_ideal_generator(model, &basis)?;
            let prop = KrylovPropagator::new(g)?;
            // sector components evolve independently; coherences damp
            let n2 = basis.num_qubits();
            let mut comps: Vec<(i64, Vec<C64>)> = Vec::new();
            if let Some(m) = basis.sector() {
                comps.push((m, prepared.amplitudes().to_vec()));
            } else {
                let mut by_m: std::collections::BTreeMap<i64, Vec<C64>> = Default::default();
                for (i, amp) in prepared.amplitudes().iter().enumerate() {
                    if amp.norm_sqr() == 0.0 {
                        continue;
                    }
                    by_m
                        .entry(magnetization(basis.state(i), n2))
                        .or_insert_with(|| vec![C64::new(0.0, 0.0); basis.dim()])[i] = *amp;
                }
                comps.extend(by_m);
            }
            let mut now = 0.0;
            let mut vals = Vec::with_capacity(times.len());
            for &t in times {
                for (_, v) in comps.iter_mut() {
                    prop.evolve_in_place(v, t - now)?;
                }
                now = t;
                let states: Vec<(i64, PureState)> = comps
                    .iter()
                    .map(|(m, v)| (*m, PureState::from_amplitudes(basis.clone(), v.clone())))
                    .collect();
                let mut total = C64::new(0.0, 0.0);
                for (m, sm) in &states {
                    for (mp, smp) in &states {
                        let damp = (-evo.gamma * t * ((m - mp) as f64).powi(2)).exp();
                        total += pauli_cross_element(sm, obs, smp)? * damp;
                    }
                }
                vals.push(real_checked(total)?);
            }
            Ok((vals, zeros))
        }
        EvolutionKind::LocalDephasing => {
            let g = build_ideal_generator(model, &basis)?;
            let prop = KrylovPropagator::new(g)?;
            let k = evo.trajectories;
            let mut sums = vec![0.0; times.len()];
            let mut sq = vec![0.0; times.len()];
            for idx in 0..k {
                local_dephasing_trajectory(
                    &prepared,
                    &prop,
                    times,
                    evo.gamma,
                    evo.seed,
                    idx as u64,
                    |gi, s| {
                        let val = real_checked(s.expectation_pauli(obs))?;
                        sums[gi] += val;
                        sq[gi] += val * val;
                        Ok(())
                    },
                )?;
            }
            let kf = k as f64;
            let means: Vec<f64> = sums.iter().map(|s| s / kf).collect();
            let ses: Vec<f64> = sq
                .iter()
                .zip(&means)
                .map(|(&s2, &m)| {
                    if k > 1 {
                        ((s2 / kf - m * m).max(0.0) / (kf - 1.0)).sqrt()
                    } else {
                        0.0
                    }
                })
                .collect();
            Ok((means, ses))
        }
    }
}

/// Sign flip of a Pauli string conjugated by a σ^z product: each X or Y
/// factor on a supported site anticommutes.
fn conjugate_by_z_string(obs: &PauliString, z_string: &PauliString) -> PauliString {
    let support: std::collections::HashSet<usize> =
        z_string.factors().iter().map(|&(s, _)| s).collect();
    let flips = obs
        .factors()
        .iter()
        .filter(|(s, a)| support.contains(s) && !matches!(a, Axis::Z))
        .count();
    let sign = if flips % 2 == 0 { 1.0 } else { -1.0 };
    obs.clone().with_phase(C64::new(sign, 0.0))
}

fn real_checked(z: C64) -> Result<f64> {
    if z.im.abs() > 1e-8 {
        return Err(Error::InvalidSpec(format!(
            "expected a real expectation value, got imaginary part {:.3e}",
            z.im
        )));
    }
    Ok(z.re)
}

/// Sequential grid walk measuring ⟨obs⟩ at every time point.
fn walk_expectations(
    generator: &SparseOperator,
    state: &PureState,
    times: &[f64],
    obs: &PauliString,
) -> Result<Vec<f64>> {
    let prop = KrylovPropagator::new(generator.clone())?;
    let basis = state.basis().clone();
    let mut v = state.amplitudes().to_vec();
    let mut now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        prop.evolve_in_place(&mut v, t - now)?;
        now = t;
        let snapshot = PureState::from_amplitudes(basis.clone(), v.clone());
        out.push(real_checked(snapshot.expectation_pauli(obs))?);
    }
    Ok(out)
}

/// Joint outcome distribution of the commuting ±1 observables (P₁ on leg 1,
/// P₂ on leg 2) from ⟨P₁⟩, ⟨P₂⟩, ⟨P₁P₂⟩.
fn joint_distribution(a: f64, b: f64, e: f64) -> OutcomeDistribution {
    let mut dist = [
        (1.0 + a + b + e) / 4.0,
        (1.0 + a - b - e) / 4.0,
        (1.0 - a + b - e) / 4.0,
        (1.0 - a - b + e) / 4.0,
    ];
    // wash out float dust so the multinomial sampler sees a distribution
    let mut total = 0.0;
    for p in dist.iter_mut() {
        *p = p.max(0.0);
        total += *p;
    }
    for p in dist.iter_mut() {
        *p /= total;
    }
    dist
}

/// Simulates projective measurement of the mirrored pair: builds the exact
/// outcome distribution, applies the readout channel, draws `shots`
/// samples, and returns (mean estimate of the rotated-frame observable,
/// standard error). Trajectory ensembles draw one trajectory per shot.
pub fn sample_shots(
    state: &PropagatedState,
    pair: &ObservablePair,
    shots: usize,
    x_readout: f64,
    seed: u64,
) -> Result<(f64, f64)> {
    if shots == 0 {
        return Err(Error::InvalidSpec("shots must be >= 1".into()));
    }
    let (p1, p2) = pair.bare_legs();
    let p12 = p1.product(&p2)?;
    let sign = pair.measurement_sign()?;

    let dist_of = |a: C64, b: C64, e: C64| -> Result<OutcomeDistribution> {
        apply_readout_error(
            &joint_distribution(real_checked(a)?, real_checked(b)?, real_checked(e)?),
            x_readout,
        )
    };

    use rand::Rng;
    let mut rng = crate::dynamics::trajectory_rng(seed, 0);
    let mut sum = 0.0;
    match state {
        PropagatedState::Ensemble(ens) => {
            let dists: Vec<OutcomeDistribution> = ens
                .states
                .iter()
                .map(|s| {
                    dist_of(
                        s.expectation_pauli(&p1),
                        s.expectation_pauli(&p2),
                        s.expectation_pauli(&p12),
                    )
                })
                .collect::<Result<_>>()?;
            let cumulative: Vec<f64> = ens
                .weights
                .iter()
                .scan(0.0, |acc, w| {
                    *acc += w;
                    Some(*acc)
                })
                .collect();
            for _ in 0..shots {
                let u: f64 = rng.gen();
                let ti = cumulative.partition_point(|&c| c < u).min(dists.len() - 1);
                sum += draw_product(&mut rng, &dists[ti]);
            }
        }
        other => {
            let dist = dist_of(
                other.expectation_pauli(&p1)?,
                other.expectation_pauli(&p2)?,
                other.expectation_pauli(&p12)?,
            )?;
            for _ in 0..shots {
                sum += draw_product(&mut rng, &dist);
            }
        }
    }
    let mean = sum / shots as f64;
    let se = if shots > 1 {
        ((1.0 - mean * mean).max(0.0) / (shots as f64 - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok((sign * mean, se))
}

fn draw_product(rng: &mut impl rand::Rng, dist: &OutcomeDistribution) -> f64 {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut outcome = 3;
    for (i, &p) in dist.iter().enumerate() {
        acc += p;
        if u < acc {
            outcome = i;
            break;
        }
    }
    // product s1·s2: +1 when the two outcome bits agree
    if outcome == 0 || outcome == 3 {
        1.0
    } else {
        -1.0
    }
}

/// O_corr = O/N elementwise with first-order error propagation. Points with
/// |N| below 1e−9 come out as NaN (undefined ratio).
pub fn correct(
    o: &[f64],
    o_sigma: &[f64],
    n: &[f64],
    n_sigma: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if o.len() != n.len() || o.len() != o_sigma.len() || o.len() != n_sigma.len() {
        return Err(Error::InvalidSpec("correct: series lengths differ".into()));
    }
    let mut ratio = Vec::with_capacity(o.len());
    let mut sigma = Vec::with_capacity(o.len());
    for i in 0..o.len() {
        if n[i].abs() < 1e-9 {
            ratio.push(f64::NAN);
            sigma.push(f64::NAN);
        } else {
            ratio.push(o[i] / n[i]);
            let s = ((o_sigma[i] / n[i]).powi(2)
                + (o[i] * n_sigma[i] / (n[i] * n[i])).powi(2))
            .sqrt();
            sigma.push(s);
        }
    }
    Ok((ratio, sigma))
}

/// Initial-state error bound 2‖V‖²√(1−F); ‖V‖ = 1 for Pauli strings.
pub fn error_bound(pair: &ObservablePair, f: f64) -> Result<f64> {
    if !(0.0..=1.0 + 1e-12).contains(&f) {
        return Err(Error::InvalidSpec("fidelity must be in [0, 1]".into()));
    }
    let v_norm_sq = pair.v.phase().norm_sqr().max(1.0); // unit phase enforced at construction
    Ok(2.0 * v_norm_sq * (1.0 - f).max(0.0).sqrt())
}

/// |slope| of the normalized OTOC at its first downward crossing of 0.5:
/// least-squares line through the 5 grid points centered on the crossing.
pub fn extract_kappa(times: &[f64], values: &[f64]) -> Result<f64> {
    if times.len() != values.len() || times.len() < 5 {
        return Err(Error::InvalidSpec(
            "kappa extraction needs >= 5 aligned points".into(),
        ));
    }
    let mut cross = None;
    for i in 0..values.len() - 1 {
        if values[i] >= 0.5 && values[i + 1] < 0.5 {
            cross = Some(i);
            break;
        }
    }
    let Some(i) = cross else {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        return Err(Error::NoCrossing(min));
    };
    // interpolated crossing time, then the nearest grid index
    let frac = (values[i] - 0.5) / (values[i] - values[i + 1]);
    let tc = times[i] + frac * (times[i + 1] - times[i]);
    let center = if (tc - times[i]).abs() <= (times[i + 1] - tc).abs() {
        i
    } else {
        i + 1
    };
    let lo = center.saturating_sub(2).min(times.len() - 5);
    let window = lo..lo + 5;
    let xs = &times[window.clone()];
    let ys = &values[window];
    let xbar = xs.iter().sum::<f64>() / 5.0;
    let ybar = ys.iter().sum::<f64>() / 5.0;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    Ok((sxy / sxx).abs())
}

/// Assembled result of a full experiment, one row per time point.
pub struct OtocSeries {
    pub times: Vec<f64>,
    pub o_g: Vec<f64>,
    pub n_g: Vec<f64>,
    pub o_corr: Vec<f64>,
    pub o_th: Vec<f64>,
    /// Reference protocol value on |φ(β)⟩; NaN where not computed (the
    /// full two-leg space is needed, so only small systems fill this).
    pub o_tfd: Vec<f64>,
    pub o_g_norm: Vec<f64>,
    pub o_th_norm: Vec<f64>,
    pub sigma_corr: Vec<f64>,
    pub kappa: Option<f64>,
    pub metadata: ExperimentSpec,
}
