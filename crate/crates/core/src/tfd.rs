//! Thermofield-double (TFD) construction, the rotated target state
//! |φ(β)⟩ = (U₀⊗1)|tfd(β)⟩, fidelity maximization over β, and the 1/n
//! extrapolation of the effective temperature T₀.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::{PureState, SectorBasis, SparseOperator};
use crate::model::{build_chain_hamiltonian, build_parent_hamiltonian, u0_string, LadderSpec};
use crate::spectral::{full_spectrum, ground_state, Spectrum};

/// Thermofield double Σ_E w_E |E⟩⊗|E*⟩ with w_E = e^{−β(E−E₀)/2}/√Z.
pub struct TfdResult {
    pub beta: f64,
    /// Shifted partition function Σ_E e^{−β(E−E₀)}; the physical Z is
    /// `z * exp(−β * energy_shift)`.
    pub z: f64,
    /// Ground energy E₀ subtracted inside the exponentials.
    pub energy_shift: f64,
    pub state: PureState,
}

/// Outcome of maximizing F(β,λ) = |⟨g(λ)|φ(β)⟩|² over β.
pub struct FidelityResult {
    pub lambda: f64,
    pub beta0: f64,
    pub t0: f64,
    pub f: f64,
    /// Coarse-scan samples (β, F).
    pub scan: Vec<(f64, f64)>,
    /// All distinct local maxima found on the scan grid.
    pub local_maxima: Vec<(f64, f64)>,
    /// False when the scan shows more than one genuine local maximum.
    pub unimodal: bool,
}

/// Builds |tfd(β)⟩ on 2n qubits from a complete chain spectrum. β may be
/// `f64::INFINITY` (ground-level limit, degeneracy-aware).
pub fn build_tfd(spectrum: &Spectrum, beta: f64) -> Result<TfdResult> {
    if beta < 0.0 || beta.is_nan() {
        return Err(Error::InvalidSpec("beta must be in [0, ∞]".into()));
    }
    let chain_basis = spectrum.basis();
    if chain_basis.sector().is_some() {
        return Err(Error::BasisMismatch(
            "tfd construction needs the full chain spectrum, not a sector".into(),
        ));
    }
    let n = chain_basis.num_qubits();
    let dim = chain_basis.dim();
    if spectrum.dim() != dim {
        return Err(Error::IncompleteSpectrum {
            got: spectrum.dim(),
            need: dim,
        });
    }
    // |E*⟩ = conj(|E⟩) = |E⟩: the chain Hamiltonian is real, which
    // full_spectrum asserted; double-check the vectors anyway.
    for v in &spectrum.eigenvectors {
        if v.amplitudes().iter().any(|a| a.im.abs() > 1e-12) {
            return Err(Error::InvalidSpec(
                "chain eigenvectors must be real for |E*⟩ = |E⟩".into(),
            ));
        }
    }
    let e0 = spectrum.ground_energy();
    let (weights, z) = boltzmann_half_weights(&spectrum.energies, beta, e0);

    let basis2n = SectorBasis::full(2 * n);
    let mut amps = vec![C64::new(0.0, 0.0); basis2n.dim()];
    // amplitude(a, b) = Σ_E w_E U[a,E] U[b,E]; assembled as (U·diag(w))·Uᵀ
    let u = spectrum.eigenvector_matrix();
    let mut uw = u.clone();
    for (k, w) in weights.iter().enumerate() {
        uw.column_mut(k).scale_mut(*w);
    }
    let a_mat = &uw * u.transpose();
    for a in 0..dim {
        for b in 0..dim {
            amps[a | (b << n)] = C64::new(a_mat[(a, b)], 0.0);
        }
    }
    Ok(TfdResult {
        beta,
        z,
        energy_shift: e0,
        state: PureState::from_amplitudes(basis2n, amps),
    })
}

/// Energy-shifted half-Boltzmann weights e^{−β(E−E₀)/2}/√Z and the shifted Z.
fn boltzmann_half_weights(energies: &[f64], beta: f64, e0: f64) -> (Vec<f64>, f64) {
    let weights: Vec<f64> = if beta.is_infinite() {
        let tol = 1e-10 * (1.0 + e0.abs());
        energies
            .iter()
            .map(|&e| if e - e0 <= tol { 1.0 } else { 0.0 })
            .collect()
    } else {
        energies
            .iter()
            .map(|&e| (-0.5 * beta * (e - e0)).exp())
            .collect()
    };
    let z: f64 = weights.iter().map(|w| w * w).sum();
    let s = 1.0 / z.sqrt();
    (weights.iter().map(|w| w * s).collect(), z)
}

/// |φ(β)⟩ = (U₀⊗1)|tfd(β)⟩.
pub fn build_phi(tfd: &TfdResult, u0: &SparseOperator) -> Result<PureState> {
    u0.apply(&tfd.state)
}

/// F = |⟨g|φ⟩|². Sector-restricted states are embedded into the full space
/// when the bases differ.
pub fn fidelity(g: &PureState, phi: &PureState) -> Result<f64> {
    let overlap = if g.basis().compatible(phi.basis()) {
        g.inner(phi)?
    } else if g.basis().num_qubits() == phi.basis().num_qubits() {
        let full = SectorBasis::full(g.basis().num_qubits());
        g.embed(&full)?.inner(&phi.embed(&full)?)?
    } else {
        return Err(Error::BasisMismatch(
            "fidelity between states on different qubit counts".into(),
        ));
    };
    Ok(overlap.norm_sqr())
}

const BETA_GRID_MIN: f64 = 1e-3;
const BETA_GRID_MAX: f64 = 1e3;
const BETA_GRID_POINTS: usize = 60;
const BETA_REL_TOL: f64 = 1e-6;

/// Maximizes F(β,λ) over β for a finite λ > 0: a 60-point logarithmic grid
/// scan over β ∈ [1e−3, 1e3] followed by golden-section refinement.
pub fn optimize_beta(spec: &LadderSpec) -> Result<FidelityResult> {
    if spec.lambda <= 0.0 || spec.lambda.is_infinite() {
        return Err(Error::InvalidSpec(
            "optimize_beta needs finite lambda > 0; the limits are handled analytically".into(),
        ));
    }
    let n = spec.chain.n;
    let chain_basis = SectorBasis::full(n);
    let h_chain = build_chain_hamiltonian(&spec.chain, &chain_basis)?;
    let spectrum = full_spectrum(&h_chain)?;

    let sector = SectorBasis::with_sector(2 * n, 0)?;
    let h_parent = build_parent_hamiltonian(spec, &sector)?;
    let g = ground_state(&h_parent.op, 2)?;
    let full2n = SectorBasis::full(2 * n);
    let g_full = g.state.embed(&full2n)?;

    // c_E = ⟨g| (U₀|E⟩) ⊗ |E*⟩: F(β) = |Σ_E w_E(β) c_E|² with w the
    // normalized half-Boltzmann weights, so each β evaluation is O(2^n).
    let overlaps = eigenlevel_overlaps(&g_full, &spectrum)?;
    let e0 = spectrum.ground_energy();
    let energies = spectrum.energies.clone();
    let eval = |beta: f64| -> f64 {
        let (w, _) = boltzmann_half_weights(&energies, beta, e0);
        let s: C64 = w.iter().zip(&overlaps).map(|(wi, c)| c * *wi).sum();
        s.norm_sqr()
    };

    let log_lo = BETA_GRID_MIN.ln();
    let log_hi = BETA_GRID_MAX.ln();
    let grid: Vec<f64> = (0..BETA_GRID_POINTS)
        .map(|i| {
            (log_lo + (log_hi - log_lo) * i as f64 / (BETA_GRID_POINTS - 1) as f64).exp()
        })
        .collect();
    let scan: Vec<(f64, f64)> = grid.par_iter().map(|&b| (b, eval(b))).collect();

    // Secondary local maxima count as genuine (non-unimodal scan) only when
    // they rise more than 1e−9 above the valley separating them from the
    // global maximum; this ignores float noise on flat plateaus.
    let m = scan.len();
    let best = (0..m).max_by(|&a, &b| scan[a].1.total_cmp(&scan[b].1)).unwrap();
    let mut local_maxima: Vec<(f64, f64)> = vec![scan[best]];
    for i in 0..m {
        if i == best {
            continue;
        }
        let is_local_max = (i == 0 || scan[i].1 >= scan[i - 1].1)
            && (i == m - 1 || scan[i].1 > scan[i + 1].1);
        if !is_local_max {
            continue;
        }
        let range = if i < best { i..=best } else { best..=i };
        let valley = scan[range].iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        if scan[i].1 - valley > 1e-9 {
            local_maxima.push(scan[i]);
        }
    }
    let unimodal = local_maxima.len() <= 1;
    let lo = if best == 0 { grid[0] } else { grid[best - 1] };
    let hi = if best == m - 1 { grid[m - 1] } else { grid[best + 1] };
    let (beta0, f) = golden_section_max(&eval, lo.ln(), hi.ln(), BETA_REL_TOL);

    Ok(FidelityResult {
        lambda: spec.lambda,
        beta0,
        t0: 1.0 / beta0,
        f,
        scan,
        local_maxima,
        unimodal,
    })
}

/// Per-eigenlevel overlap coefficients c_E = ⟨g|(U₀|E⟩)⊗|E*⟩.
fn eigenlevel_overlaps(g_full: &PureState, spectrum: &Spectrum) -> Result<Vec<C64>> {
    let n = spectrum.basis().num_qubits();
    let dim = spectrum.dim();
    let u0 = u0_string(n);
    let g = g_full.amplitudes();
    let mut out = Vec::with_capacity(dim);
    for v in &spectrum.eigenvectors {
        let rotated = v.apply_pauli(&u0)?;
        let ra = rotated.amplitudes();
        let va = v.amplitudes();
        let mut c = C64::new(0.0, 0.0);
        for b in 0..dim {
            if va[b].re == 0.0 {
                continue;
            }
            let mut row = C64::new(0.0, 0.0);
            for a in 0..dim {
                row += g[a | (b << n)].conj() * ra[a];
            }
            c += row * va[b].re;
        }
        out.push(c);
    }
    Ok(out)
}

/// Golden-section maximization of `f(exp(x))` on [xlo, xhi]; returns
/// (argmax β, max value) once the bracket's relative width in β is below tol.
fn golden_section_max(f: &dyn Fn(f64) -> f64, mut xlo: f64, mut xhi: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = xhi - INV_PHI * (xhi - xlo);
    let mut x2 = xlo + INV_PHI * (xhi - xlo);
    let mut f1 = f(x1.exp());
    let mut f2 = f(x2.exp());
    while xhi - xlo > tol {
        if f1 >= f2 {
            xhi = x2;
            x2 = x1;
            f2 = f1;
            x1 = xhi - INV_PHI * (xhi - xlo);
            f1 = f(x1.exp());
        } else {
            xlo = x1;
            x1 = x2;
            f1 = f2;
            x2 = xlo + INV_PHI * (xhi - xlo);
            f2 = f(x2.exp());
        }
    }
    let xm = 0.5 * (xlo + xhi);
    (xm.exp(), f(xm.exp()))
}

/// Least-squares line through (1/n, T₀); returns (slope, intercept,
/// T₀ extrapolated to n → ∞ = intercept).
pub fn extrapolate_t0(points: &[(usize, f64)]) -> Result<(f64, f64, f64)> {
    let mut ns: Vec<usize> = points.iter().map(|p| p.0).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 3 {
        return Err(Error::InvalidSpec(
            "extrapolation needs at least 3 distinct n".into(),
        ));
    }
    let m = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| 1.0 / p.0 as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let xbar = xs.iter().sum::<f64>() / m;
    let ybar = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    Ok((slope, intercept, intercept))
}
