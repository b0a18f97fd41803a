//! Eigensolvers: dense full diagonalization for the chain (all Hamiltonians
//! here are real symmetric in the computational basis, which is checked, not
//! assumed) and a Lanczos iteration with full reorthogonalization for the
//! ladder ground state and gap.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hilbert::{PureState, SectorBasis, SparseOperator};
use crate::model::{build_parent_hamiltonian, ChainSpec, LadderSpec};

/// Dense-diagonalization size limit (chain with n <= 12).
pub const DENSE_LIMIT: usize = 4096;

/// Iterative-solver convergence target on eigenpair residuals.
pub const LANCZOS_TOL: f64 = 1e-9;

/// Complete orthonormal eigensystem, energies ascending.
pub struct Spectrum {
    pub energies: Vec<f64>,
    pub eigenvectors: Vec<PureState>,
    basis: Arc<SectorBasis>,
}

impl Spectrum {
    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn ground_energy(&self) -> f64 {
        self.energies[0]
    }

    /// Eigenvector matrix as a real dense matrix (columns are eigenstates).
    ///
    /// Valid because the input operator was verified real symmetric.
    pub fn eigenvector_matrix(&self) -> DMatrix<f64> {
        let dim = self.dim();
        let mut u = DMatrix::zeros(dim, dim);
        for (k, v) in self.eigenvectors.iter().enumerate() {
            for (i, a) in v.amplitudes().iter().enumerate() {
                u[(i, k)] = a.re;
            }
        }
        u
    }
}

/// Lowest eigenpair plus the gap to the next level.
pub struct GroundResult {
    pub energy: f64,
    pub state: PureState,
    pub gap: f64,
}

/// Full dense eigendecomposition of a real-symmetric sparse operator.
pub fn full_spectrum(h: &SparseOperator) -> Result<Spectrum> {
    let dim = h.dim();
    if dim > DENSE_LIMIT {
        return Err(Error::DimensionTooLarge {
            dim,
            max: DENSE_LIMIT,
        });
    }
    if h.max_imag() > 1e-12 || h.hermiticity_defect() > 1e-12 {
        return Err(Error::InvalidSpec(
            "full_spectrum expects a real symmetric operator".into(),
        ));
    }
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for (r, c, v) in h.entries() {
        m[(r, c)] += v.re;
    }
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let basis = h.basis().clone();
    let mut energies = Vec::with_capacity(dim);
    let mut eigenvectors = Vec::with_capacity(dim);
    for &k in &order {
        energies.push(eig.eigenvalues[k]);
        let amps: Vec<C64> = eig
            .eigenvectors
            .column(k)
            .iter()
            .map(|&x| C64::new(x, 0.0))
            .collect();
        eigenvectors.push(PureState::from_amplitudes(basis.clone(), amps));
    }
    Ok(Spectrum {
        energies,
        eigenvectors,
        basis,
    })
}

/// Lowest `k` eigenpairs of a Hermitian sparse operator via Lanczos with
/// full reorthogonalization. `k >= 2` so the gap is resolved.
pub fn ground_state(h: &SparseOperator, k: usize) -> Result<GroundResult> {
    if k < 2 {
        return Err(Error::InvalidSpec("ground_state needs k >= 2".into()));
    }
    let (energies, mut vectors) = lanczos_lowest(h, k, LANCZOS_TOL)?;
    let mut state = PureState::from_amplitudes(h.basis().clone(), vectors.swap_remove(0));
    fix_phase(&mut state);
    Ok(GroundResult {
        energy: energies[0],
        state,
        gap: (energies[1] - energies[0]).max(0.0),
    })
}

/// Deterministic tie-break: rotate the first amplitude with magnitude above
/// 1e-8 to be real positive.
pub fn fix_phase(state: &mut PureState) {
    if let Some(a) = state.amplitudes().iter().find(|a| a.norm() > 1e-8) {
        let phase = a.conj() / a.norm();
        *state = state.scaled(phase);
    }
}

/// Lanczos with full reorthogonalization; returns the `k` lowest Ritz values
/// and vectors once every residual is below `tol`.
pub fn lanczos_lowest(
    h: &SparseOperator,
    k: usize,
    tol: f64,
) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    let dim = h.dim();
    if dim <= 64 || dim <= 4 * k {
        // small spaces: dense is both faster and exact
        let spectrum = full_spectrum(h)?;
        let take = k.min(dim);
        if take < k {
            return Err(Error::IncompleteSpectrum { got: take, need: k });
        }
        return Ok((
            spectrum.energies[..k].to_vec(),
            spectrum.eigenvectors[..k]
                .iter()
                .map(|v| v.amplitudes().to_vec())
                .collect(),
        ));
    }

    let cap = (10.0 * (dim as f64).sqrt()) as usize + 500;
    let mut rng = ChaCha8Rng::seed_from_u64(0x4c414e435a); // fixed: deterministic solves
    let mut basis: Vec<Vec<C64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new(); // betas[j] couples v_j and v_{j+1}

    let mut v = random_unit(&mut rng, dim);
    basis.push(v.clone());
    let mut best_residual = f64::INFINITY;
    let mut w = vec![C64::new(0.0, 0.0); dim];

    for j in 0..cap {
        h.apply_to_slice(&v, &mut w);
        let alpha = dot(&basis[j], &w).re;
        alphas.push(alpha);
        // full reorthogonalization, two passes
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                axpy(-c, b, &mut w);
            }
        }
        let beta = norm(&w);
        if beta < 1e-13 {
            // invariant subspace: restart direction or finish
            if basis.len() >= k {
                if let Some(result) = ritz_if_converged(h, &basis, &alphas, &betas, k, tol, true)?
                {
                    return Ok(result);
                }
            }
            let mut r = random_unit(&mut rng, dim);
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(b, &r);
                    axpy(-c, b, &mut r);
                }
            }
            let n = norm(&r);
            if n < 1e-13 {
                break; // space exhausted
            }
            scale(&mut r, 1.0 / n);
            betas.push(0.0);
            v = r;
            basis.push(v.clone());
            continue;
        }
        scale(&mut w, 1.0 / beta);
        betas.push(beta);
        v = w.clone();
        basis.push(v.clone());

        let m = basis.len() - 1;
        if m >= k + 2 && (m % 10 == 0 || m + 1 >= cap) {
            match ritz_if_converged(h, &basis[..m], &alphas, &betas[..m - 1], k, tol, false)? {
                Some(result) => return Ok(result),
                None => {
                    // track progress for the error report
                    best_residual = best_residual.min(current_residual_estimate(
                        &alphas,
                        &betas[..m],
                        k,
                    ));
                }
            }
        }
    }
    // final attempt with everything we have
    let m = alphas.len();
    if let Some(result) = ritz_if_converged(h, &basis[..m], &alphas, &betas[..m - 1], k, tol, true)?
    {
        return Ok(result);
    }
    Err(Error::NoConvergence {
        iterations: m,
        residual: best_residual,
    })
}

fn tridiag_eigen(alphas: &[f64], betas: &[f64]) -> SymmetricEigen<f64, nalgebra::Dyn> {
    let m = alphas.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alphas[i];
        if i + 1 < m {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    SymmetricEigen::new(t)
}

fn current_residual_estimate(alphas: &[f64], betas: &[f64], k: usize) -> f64 {
    let m = alphas.len();
    let eig = tridiag_eigen(alphas, &betas[..m - 1]);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    order
        .iter()
        .take(k)
        .map(|&c| (betas[m - 1] * eig.eigenvectors[(m - 1, c)]).abs())
        .fold(0.0, f64::max)
}

/// Diagonalize the tridiagonal projection over `m = alphas.len()` steps and,
/// when the lowest `k` Ritz residuals are below `tol`, assemble and verify
/// the Ritz vectors.
fn ritz_if_converged(
    h: &SparseOperator,
    basis: &[Vec<C64>],
    alphas: &[f64],
    betas: &[f64],
    k: usize,
    tol: f64,
    force: bool,
) -> Result<Option<(Vec<f64>, Vec<Vec<C64>>)>> {
    let m = alphas.len();
    if m < k {
        return Ok(None);
    }
    let eig = tridiag_eigen(alphas, betas);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let dim = basis[0].len();
    let mut values = Vec::with_capacity(k);
    let mut vectors = Vec::with_capacity(k);
    let mut worst = 0.0f64;
    for &c in order.iter().take(k) {
        let theta = eig.eigenvalues[c];
        let mut y = vec![C64::new(0.0, 0.0); dim];
        for (j, b) in basis.iter().take(m).enumerate() {
            axpy(C64::new(eig.eigenvectors[(j, c)], 0.0), b, &mut y);
        }
        let n = norm(&y);
        scale(&mut y, 1.0 / n);
        // true residual ||H y - theta y||
        let mut hy = vec![C64::new(0.0, 0.0); dim];
        h.apply_to_slice(&y, &mut hy);
        let mut r2 = 0.0f64;
        for i in 0..dim {
            r2 += (hy[i] - y[i] * theta).norm_sqr();
        }
        worst = worst.max(r2.sqrt());
        values.push(theta);
        vectors.push(y);
    }
    if worst < tol {
        Ok(Some((values, vectors)))
    } else if force {
        Err(Error::NoConvergence {
            iterations: m,
            residual: worst,
        })
    } else {
        Ok(None)
    }
}

/// Gap of `H_parent(λ)` within the S^z = 0 sector per λ. Infinite λ maps to
/// an infinite gap.
pub fn gap_curve(chain: &ChainSpec, lambdas: &[f64]) -> Result<Vec<(f64, f64)>> {
    let basis = SectorBasis::with_sector(2 * chain.n, 0)?;
    let mut out = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        if lambda.is_infinite() {
            out.push((lambda, f64::INFINITY));
            continue;
        }
        let ladder = LadderSpec::new(*chain, lambda)?;
        let h = build_parent_hamiltonian(&ladder, &basis)?;
        let g = ground_state(&h.op, 2)?;
        out.push((lambda, g.gap));
    }
    Ok(out)
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<C64> {
    let mut v: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let n = norm(&v);
    scale(&mut v, 1.0 / n);
    v
}

pub(crate) fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn axpy(c: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += c * xi;
    }
}

pub(crate) fn norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn scale(v: &mut [C64], c: f64) {
    for x in v.iter_mut() {
        *x *= c;
    }
}
