//! Builders for the long-range XX chain, the two-leg parent Hamiltonian,
//! and the symmetry operators `R` (particle-hole) and `U0` (leg-1 spin flip).
//!
//! Conventions: sites are 0-based in code (site k = bit k); the paper's
//! 1-based labels shift by one. Leg 1 occupies sites `0..n`, leg 2 sites
//! `n..2n`. Open boundary conditions, unit lattice spacing, `hbar = 1`.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{
    pauli_string_to_operator, Axis, PauliString, PureState, SectorBasis, SparseOperator,
};

/// Single long-range XX chain: `H = Σ J/r³ (XX + YY)` over opposite-parity
/// site pairs, with the power fixed to 3.
#[derive(Clone, Copy, Debug)]
pub struct ChainSpec {
    pub n: usize,
    pub j: f64,
    pub alpha: f64,
}

impl ChainSpec {
    pub fn new(n: usize, j: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSpec(format!("chain needs n >= 2, got {n}")));
        }
        if j <= 0.0 {
            return Err(Error::InvalidSpec(format!("J must be positive, got {j}")));
        }
        Ok(ChainSpec { n, j, alpha: 3.0 })
    }
}

/// Two coupled chains: `H_parent(λ) = H1 + H2 + λ H12`. `λ = ∞` is
/// representable and means the rung coupling dominates.
#[derive(Clone, Copy, Debug)]
pub struct LadderSpec {
    pub chain: ChainSpec,
    pub lambda: f64,
}

impl LadderSpec {
    pub fn new(chain: ChainSpec, lambda: f64) -> Result<Self> {
        if lambda < 0.0 || lambda.is_nan() {
            return Err(Error::InvalidSpec(format!(
                "lambda must be >= 0, got {lambda}"
            )));
        }
        Ok(LadderSpec { chain, lambda })
    }

    pub fn is_infinite(&self) -> bool {
        self.lambda.is_infinite()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Leg {
    First,
    Second,
}

/// Parent Hamiltonian with a flag for the symbolic `λ = ∞` case, where the
/// operator is `H12` alone and the ground state is the rung-singlet product.
pub struct ParentHamiltonian {
    pub op: SparseOperator,
    pub rung_only: bool,
}

fn check_basis_qubits(basis: &SectorBasis, need: usize) -> Result<()> {
    if basis.num_qubits() == need {
        Ok(())
    } else {
        Err(Error::BasisMismatch(format!(
            "basis covers {} qubits, operator needs {}",
            basis.num_qubits(),
            need
        )))
    }
}

/// XX+YY flip-flop triplets for one chain embedded at `offset`, scaled by
/// `scale`. Each opposite-parity pair (a, b) couples once with `J/|a-b|³`;
/// `XX + YY` moves `|..1_a 0_b..>` to `|..0_a 1_b..>` with amplitude 2.
fn chain_triplets(
    spec: &ChainSpec,
    basis: &SectorBasis,
    offset: usize,
    scale: f64,
    triplets: &mut Vec<(usize, usize, C64)>,
) {
    for a in 0..spec.n {
        for b in (a + 1)..spec.n {
            if (b - a) % 2 == 0 {
                continue;
            }
            let r = (b - a) as f64;
            let coeff = 2.0 * scale * spec.j / r.powf(spec.alpha);
            hop_triplets(basis, offset + a, offset + b, coeff, triplets);
        }
    }
}

fn hop_triplets(
    basis: &SectorBasis,
    a: usize,
    b: usize,
    coeff: f64,
    triplets: &mut Vec<(usize, usize, C64)>,
) {
    let mask = (1u64 << a) | (1u64 << b);
    for j in 0..basis.dim() {
        let s = basis.state(j);
        let bit_a = (s >> a) & 1;
        let bit_b = (s >> b) & 1;
        if bit_a != bit_b {
            if let Some(i) = basis.index(s ^ mask) {
                triplets.push((i, j, C64::new(coeff, 0.0)));
            }
        }
    }
}

/// Single-chain Hamiltonian on an n-qubit basis.
pub fn build_chain_hamiltonian(spec: &ChainSpec, basis: &Arc<SectorBasis>) -> Result<SparseOperator> {
    check_basis_qubits(basis, spec.n)?;
    let mut triplets = Vec::new();
    chain_triplets(spec, basis, 0, 1.0, &mut triplets);
    Ok(SparseOperator::from_triplets(basis.clone(), triplets, true))
}

/// One leg's chain Hamiltonian embedded in a 2n-qubit basis.
pub fn build_leg_hamiltonian(
    spec: &ChainSpec,
    basis: &Arc<SectorBasis>,
    leg: Leg,
) -> Result<SparseOperator> {
    check_basis_qubits(basis, 2 * spec.n)?;
    let offset = match leg {
        Leg::First => 0,
        Leg::Second => spec.n,
    };
    let mut triplets = Vec::new();
    chain_triplets(spec, basis, offset, 1.0, &mut triplets);
    Ok(SparseOperator::from_triplets(basis.clone(), triplets, true))
}

/// Rung coupling `H12 = J Σ_k (X_k X_{k+n} + Y_k Y_{k+n})` on a 2n-qubit basis.
pub fn build_rung_coupling(spec: &ChainSpec, basis: &Arc<SectorBasis>) -> Result<SparseOperator> {
    check_basis_qubits(basis, 2 * spec.n)?;
    let mut triplets = Vec::new();
    for k in 0..spec.n {
        hop_triplets(basis, k, k + spec.n, 2.0 * spec.j, &mut triplets);
    }
    Ok(SparseOperator::from_triplets(basis.clone(), triplets, true))
}

/// `H_parent(λ) = H1 + H2 + λ H12`, or `H12` alone (flagged) for `λ = ∞`.
pub fn build_parent_hamiltonian(
    spec: &LadderSpec,
    basis: &Arc<SectorBasis>,
) -> Result<ParentHamiltonian> {
    check_basis_qubits(basis, 2 * spec.chain.n)?;
    if spec.is_infinite() {
        return Ok(ParentHamiltonian {
            op: build_rung_coupling(&spec.chain, basis)?,
            rung_only: true,
        });
    }
    let mut triplets = Vec::new();
    chain_triplets(&spec.chain, basis, 0, 1.0, &mut triplets);
    chain_triplets(&spec.chain, basis, spec.chain.n, 1.0, &mut triplets);
    if spec.lambda != 0.0 {
        for k in 0..spec.chain.n {
            hop_triplets(
                basis,
                k,
                k + spec.chain.n,
                2.0 * spec.lambda * spec.chain.j,
                &mut triplets,
            );
        }
    }
    Ok(ParentHamiltonian {
        op: SparseOperator::from_triplets(basis.clone(), triplets, true),
        rung_only: false,
    })
}

/// Particle-hole operator for one leg of a 2n-qubit system: the product of
/// `σ^z` over the leg's even sites in the paper's 1-based labeling.
pub fn build_r(n: usize, leg: Leg, basis: &Arc<SectorBasis>) -> Result<SparseOperator> {
    check_basis_qubits(basis, 2 * n)?;
    let offset = match leg {
        Leg::First => 0,
        Leg::Second => n,
    };
    pauli_string_to_operator(&r_string(n, offset), basis)
}

/// Same operator on a single n-qubit chain basis.
pub fn build_chain_r(n: usize, basis: &Arc<SectorBasis>) -> Result<SparseOperator> {
    check_basis_qubits(basis, n)?;
    pauli_string_to_operator(&r_string(n, 0), basis)
}

/// Z-string over the 1-based-even sites of a chain starting at `offset`.
pub fn r_string(n: usize, offset: usize) -> PauliString {
    let factors = (0..n)
        .filter(|k| (k + 1) % 2 == 0)
        .map(|k| (offset + k, Axis::Z))
        .collect();
    PauliString::new(factors).expect("distinct sites")
}

/// `U0 = Π_{k=1..n} σ^y_k` on leg 1 of a 2n-qubit basis (maps leg-1
/// magnetization m to -m, so the basis must be sector-free for odd n).
pub fn build_u0(n: usize, basis: &Arc<SectorBasis>) -> Result<SparseOperator> {
    check_basis_qubits(basis, 2 * n)?;
    pauli_string_to_operator(&u0_string(n), basis)
}

pub fn u0_string(n: usize) -> PauliString {
    PauliString::new((0..n).map(|k| (k, Axis::Y)).collect()).expect("distinct sites")
}

/// Max-abs entry of `R† H R + H*`; zero when the particle-hole identity holds.
pub fn particle_hole_defect(h: &SparseOperator, r: &SparseOperator) -> Result<f64> {
    h.conjugate_by(r)?.add_max_abs(&h.conjugated())
}

/// Check `-H* = R† H R` for the chain Hamiltonian by a direct matrix
/// comparison (small n only).
pub fn verify_particle_hole(spec: &ChainSpec) -> Result<bool> {
    if spec.n > 8 {
        return Err(Error::DimensionTooLarge {
            dim: 1 << spec.n,
            max: 256,
        });
    }
    let basis = SectorBasis::full(spec.n);
    let h = build_chain_hamiltonian(spec, &basis)?;
    let r = build_chain_r(spec.n, &basis)?;
    Ok(particle_hole_defect(&h, &r)? < 1e-12)
}

/// Diagonal operator `S^z_tot = Σ_i σ^z_i`.
pub fn build_sz_total(basis: &Arc<SectorBasis>) -> SparseOperator {
    let n = basis.num_qubits();
    let triplets = (0..basis.dim())
        .map(|i| {
            let m = crate::hilbert::magnetization(basis.state(i), n) as f64;
            (i, i, C64::new(m, 0.0))
        })
        .collect();
    SparseOperator::from_triplets(basis.clone(), triplets, true)
}

/// Product of rung singlets `(|↑↓> - |↓↑>)/√2`, the ground state of `H12`.
///
/// Works in the full 2n-qubit basis or the S^z = 0 sector basis.
pub fn rung_singlet_state(n: usize, basis: &Arc<SectorBasis>) -> Result<PureState> {
    check_basis_qubits(basis, 2 * n)?;
    let mut amplitudes = vec![C64::new(0.0, 0.0); basis.dim()];
    let norm = (1.0f64 / 2.0f64.powi(n as i32)).sqrt();
    for choice in 0u64..(1 << n) {
        // bit k of `choice` set: rung k contributes |↑_k ↓_{k+n}> with +
        let leg1 = choice;
        let leg2 = !choice & ((1 << n) - 1);
        let bits = leg1 | (leg2 << n);
        let sign = if (n as u32 - choice.count_ones()) % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        let idx = basis.index(bits).ok_or_else(|| {
            Error::BasisMismatch("singlet product state not representable in basis".into())
        })?;
        amplitudes[idx] = C64::new(sign * norm, 0.0);
    }
    Ok(PureState::from_amplitudes(basis.clone(), amplitudes))
}
