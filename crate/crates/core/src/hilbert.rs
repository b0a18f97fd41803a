//! Bit-string Hilbert-space machinery.
//!
//! Basis states are unsigned integers where bit `k` is the state of site `k`
//! (0-based), with an up-spin stored as a set bit. A [`SectorBasis`] either
//! spans the full `2^n`-dimensional space or is restricted to one eigenspace
//! of the total magnetization `S^z = Σ σ^z_i` (each up-spin contributes +1,
//! each down-spin -1).

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Pauli axis of a single factor in a [`PauliString`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Magnetization of a bit string: `2*popcount - num_qubits`.
pub fn magnetization(bits: u64, num_qubits: usize) -> i64 {
    2 * bits.count_ones() as i64 - num_qubits as i64
}

/// Ordered basis of computational bit strings, optionally restricted to a
/// total-S^z sector.
#[derive(Debug)]
pub struct SectorBasis {
    num_qubits: usize,
    sector: Option<i64>,
    states: Vec<u64>,
    index_of: HashMap<u64, usize>,
}

impl SectorBasis {
    /// Full `2^n`-dimensional basis.
    pub fn full(num_qubits: usize) -> Arc<Self> {
        enumerate_sector(num_qubits, None).expect("full basis is always valid")
    }

    /// Basis restricted to the `S^z = sector` eigenspace.
    pub fn with_sector(num_qubits: usize, sector: i64) -> Result<Arc<Self>> {
        enumerate_sector(num_qubits, Some(sector))
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn sector(&self) -> Option<i64> {
        self.sector
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    /// Bit string of basis state `i`.
    pub fn state(&self, i: usize) -> u64 {
        self.states[i]
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    /// Dense index of a bit string, or `None` if it lies outside the sector.
    pub fn index(&self, bits: u64) -> Option<usize> {
        if self.sector.is_none() {
            // Full basis is the identity map; skip the hash lookup.
            let b = bits as usize;
            (b < self.states.len()).then_some(b)
        } else {
            self.index_of.get(&bits).copied()
        }
    }

    /// Two bases are compatible when they describe the same space.
    pub fn compatible(&self, other: &SectorBasis) -> bool {
        self.num_qubits == other.num_qubits && self.sector == other.sector
    }
}

/// Enumerate the bit strings of a sector in ascending order.
///
/// For `sector = None` the basis is the full computational basis.
pub fn enumerate_sector(num_qubits: usize, sector: Option<i64>) -> Result<Arc<SectorBasis>> {
    if num_qubits == 0 || num_qubits > 30 {
        return Err(Error::InvalidSpec(format!(
            "num_qubits = {num_qubits} out of supported range 1..=30"
        )));
    }
    if let Some(s) = sector {
        let n = num_qubits as i64;
        if s.abs() > n || (s + n) % 2 != 0 {
            return Err(Error::InvalidSector {
                num_qubits,
                sector: s,
            });
        }
    }
    let states: Vec<u64> = match sector {
        None => (0..1u64 << num_qubits).collect(),
        Some(s) => (0..1u64 << num_qubits)
            .filter(|&b| magnetization(b, num_qubits) == s)
            .collect(),
    };
    let index_of = if sector.is_some() {
        states.iter().enumerate().map(|(i, &b)| (b, i)).collect()
    } else {
        HashMap::new()
    };
    Ok(Arc::new(SectorBasis {
        num_qubits,
        sector,
        states,
        index_of,
    }))
}

fn check_compatible(a: &SectorBasis, b: &SectorBasis) -> Result<()> {
    if a.compatible(b) {
        Ok(())
    } else {
        Err(Error::BasisMismatch(format!(
            "({} qubits, sector {:?}) vs ({} qubits, sector {:?})",
            a.num_qubits(),
            a.sector(),
            b.num_qubits(),
            b.sector()
        )))
    }
}

/// Product of single-site Pauli factors with an overall unit phase.
#[derive(Clone, Debug)]
pub struct PauliString {
    factors: Vec<(usize, Axis)>,
    phase: C64,
}

impl PauliString {
    pub fn identity() -> Self {
        PauliString {
            factors: Vec::new(),
            phase: C64::new(1.0, 0.0),
        }
    }

    /// Build from (site, axis) factors. Sites must be unique.
    pub fn new(mut factors: Vec<(usize, Axis)>) -> Result<Self> {
        factors.sort_by_key(|&(site, _)| site);
        if factors.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidSpec(
                "pauli string with repeated site".into(),
            ));
        }
        Ok(PauliString {
            factors,
            phase: C64::new(1.0, 0.0),
        })
    }

    pub fn single(site: usize, axis: Axis) -> Self {
        PauliString {
            factors: vec![(site, axis)],
            phase: C64::new(1.0, 0.0),
        }
    }

    pub fn with_phase(mut self, phase: C64) -> Self {
        self.phase *= phase;
        self
    }

    pub fn factors(&self) -> &[(usize, Axis)] {
        &self.factors
    }

    pub fn phase(&self) -> C64 {
        self.phase
    }

    pub fn max_site(&self) -> Option<usize> {
        self.factors.last().map(|&(s, _)| s)
    }

    /// Number of bit-flipping (X or Y) factors.
    pub fn xy_count(&self) -> usize {
        self.factors
            .iter()
            .filter(|&&(_, a)| a != Axis::Z)
            .count()
    }

    /// True when the string maps every S^z sector to itself.
    pub fn preserves_sector(&self) -> bool {
        self.xy_count() % 2 == 0
    }

    /// Transpose in the computational basis: X^T = X, Z^T = Z, Y^T = -Y.
    pub fn transpose(&self) -> Self {
        let y_count = self
            .factors
            .iter()
            .filter(|&&(_, a)| a == Axis::Y)
            .count();
        let sign = if y_count % 2 == 0 { 1.0 } else { -1.0 };
        PauliString {
            factors: self.factors.clone(),
            phase: self.phase * sign,
        }
    }

    pub fn dagger(&self) -> Self {
        PauliString {
            factors: self.factors.clone(),
            phase: self.phase.conj(),
        }
    }

    /// Shift every site index by `offset`.
    pub fn shifted(&self, offset: usize) -> Self {
        PauliString {
            factors: self
                .factors
                .iter()
                .map(|&(s, a)| (s + offset, a))
                .collect(),
            phase: self.phase,
        }
    }

    /// Tensor product with another string on disjoint sites.
    pub fn product(&self, other: &PauliString) -> Result<Self> {
        let mut factors = self.factors.clone();
        factors.extend_from_slice(&other.factors);
        Ok(Self::new(factors)?.with_phase(self.phase * other.phase))
    }

    /// Action on a computational basis state: `P|bits> = phase |out_bits>`.
    ///
    /// Convention: up-spin = set bit, `σ^z|up> = +|up>`, `σ^y|up> = i|down>`.
    pub fn apply_to_bits(&self, bits: u64) -> (u64, C64) {
        let mut out = bits;
        let mut phase = self.phase;
        for &(site, axis) in &self.factors {
            let up = (bits >> site) & 1 == 1;
            match axis {
                Axis::Z => {
                    if !up {
                        phase = -phase;
                    }
                }
                Axis::X => out ^= 1 << site,
                Axis::Y => {
                    phase *= if up {
                        C64::new(0.0, 1.0)
                    } else {
                        C64::new(0.0, -1.0)
                    };
                    out ^= 1 << site;
                }
            }
        }
        (out, phase)
    }
}

/// Sparse complex matrix in CSR form, tagged with the basis it acts in.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    basis: Arc<SectorBasis>,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<C64>,
    pub hermitian_hint: bool,
}

impl SparseOperator {
    /// Build from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(
        basis: Arc<SectorBasis>,
        mut triplets: Vec<(usize, usize, C64)>,
        hermitian_hint: bool,
    ) -> Self {
        let dim = basis.dim();
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_counts = vec![0usize; dim];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            debug_assert!(r < dim && c < dim);
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c as u32);
                values.push(v);
                row_counts[r] += 1;
                last = Some((r, c));
            }
        }
        let mut row_ptr = vec![0usize; dim + 1];
        for r in 0..dim {
            row_ptr[r + 1] = row_ptr[r] + row_counts[r];
        }
        SparseOperator {
            basis,
            row_ptr,
            col_idx,
            values,
            hermitian_hint,
        }
    }

    pub fn identity(basis: Arc<SectorBasis>) -> Self {
        let dim = basis.dim();
        let triplets = (0..dim).map(|i| (i, i, C64::new(1.0, 0.0))).collect();
        Self::from_triplets(basis, triplets, true)
    }

    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterate over the stored entries as (row, col, value).
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim()).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1])
                .map(move |k| (r, self.col_idx[k] as usize, self.values[k]))
        })
    }

    /// Matrix-vector product into a preallocated buffer.
    pub fn apply_to_slice(&self, x: &[C64], y: &mut [C64]) {
        y.fill(C64::new(0.0, 0.0));
        for r in 0..self.dim() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k] as usize];
            }
            y[r] = acc;
        }
    }

    /// Matrix-vector product `op |s>`.
    pub fn apply(&self, s: &PureState) -> Result<PureState> {
        check_compatible(&self.basis, &s.basis)?;
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        self.apply_to_slice(&s.amplitudes, &mut out);
        Ok(PureState::from_amplitudes(self.basis.clone(), out))
    }

    /// `<s| op |s>`.
    pub fn expectation(&self, s: &PureState) -> Result<C64> {
        check_compatible(&self.basis, &s.basis)?;
        let mut acc = C64::new(0.0, 0.0);
        for r in 0..self.dim() {
            let mut row = C64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                row += self.values[k] * s.amplitudes[self.col_idx[k] as usize];
            }
            acc += s.amplitudes[r].conj() * row;
        }
        Ok(acc)
    }

    /// Weighted sum `Σ c_k op_k` of operators over the same basis.
    pub fn linear_combination(terms: &[(f64, &SparseOperator)]) -> Result<SparseOperator> {
        let (_, first) = terms
            .first()
            .ok_or_else(|| Error::InvalidSpec("empty linear combination".into()))?;
        let basis = first.basis.clone();
        let mut triplets = Vec::new();
        let mut hermitian = true;
        for &(c, op) in terms {
            check_compatible(&basis, &op.basis)?;
            hermitian &= op.hermitian_hint;
            for (r, col, v) in op.entries() {
                triplets.push((r, col, v * c));
            }
        }
        Ok(SparseOperator::from_triplets(basis, triplets, hermitian))
    }

    pub fn scaled(&self, c: f64) -> SparseOperator {
        let triplets = self.entries().map(|(r, col, v)| (r, col, v * c)).collect();
        SparseOperator::from_triplets(self.basis.clone(), triplets, self.hermitian_hint)
    }

    /// Elementwise complex conjugate (transpose-free).
    pub fn conjugated(&self) -> SparseOperator {
        let triplets = self
            .entries()
            .map(|(r, c, v)| (r, c, v.conj()))
            .collect();
        SparseOperator::from_triplets(self.basis.clone(), triplets, self.hermitian_hint)
    }

    /// Largest |A_ij + B_ij| over the union of sparsity patterns.
    pub fn add_max_abs(&self, other: &SparseOperator) -> Result<f64> {
        check_compatible(&self.basis, &other.basis)?;
        let mut max = 0.0f64;
        for r in 0..self.dim() {
            let a = &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]];
            let av = &self.values[self.row_ptr[r]..self.row_ptr[r + 1]];
            let b = &other.col_idx[other.row_ptr[r]..other.row_ptr[r + 1]];
            let bv = &other.values[other.row_ptr[r]..other.row_ptr[r + 1]];
            let (mut i, mut j) = (0usize, 0usize);
            while i < a.len() || j < b.len() {
                let v = if j >= b.len() || (i < a.len() && a[i] < b[j]) {
                    i += 1;
                    av[i - 1]
                } else if i >= a.len() || b[j] < a[i] {
                    j += 1;
                    bv[j - 1]
                } else {
                    i += 1;
                    j += 1;
                    av[i - 1] + bv[j - 1]
                };
                max = max.max(v.norm());
            }
        }
        Ok(max)
    }

    /// `P† A P` for a signed-permutation operator `P` (one entry per column).
    pub fn conjugate_by(&self, p: &SparseOperator) -> Result<SparseOperator> {
        check_compatible(&self.basis, &p.basis)?;
        let dim = self.dim();
        // p has exactly one nonzero per row and per column; invert the map
        let mut row_of_col = vec![usize::MAX; dim];
        let mut phase_of_col = vec![C64::new(0.0, 0.0); dim];
        for (r, c, v) in p.entries() {
            if row_of_col[c] != usize::MAX {
                return Err(Error::InvalidSpec(
                    "conjugate_by requires a signed permutation".into(),
                ));
            }
            row_of_col[c] = r;
            phase_of_col[c] = v;
        }
        if row_of_col.iter().any(|&r| r == usize::MAX) {
            return Err(Error::InvalidSpec(
                "conjugate_by requires a signed permutation".into(),
            ));
        }
        // (P†AP)_{cd} = conj(phase_c) A_{row_c, row_d} phase_d; reindex entries
        let mut col_of_row = vec![0usize; dim];
        for (c, &r) in row_of_col.iter().enumerate() {
            col_of_row[r] = c;
        }
        let triplets = self
            .entries()
            .map(|(r, c, v)| {
                let nr = col_of_row[r];
                let nc = col_of_row[c];
                (nr, nc, phase_of_col[nr].conj() * v * phase_of_col[nc])
            })
            .collect();
        Ok(SparseOperator::from_triplets(
            self.basis.clone(),
            triplets,
            self.hermitian_hint,
        ))
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<C64> {
        let dim = self.dim();
        let mut m = nalgebra::DMatrix::zeros(dim, dim);
        for (r, c, v) in self.entries() {
            m[(r, c)] += v;
        }
        m
    }

    /// Largest imaginary part over all entries.
    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    /// Largest |A_ij - conj(A_ji)|; zero for an exactly Hermitian matrix.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut dagger: HashMap<(usize, usize), C64> = HashMap::with_capacity(self.nnz());
        for (r, c, v) in self.entries() {
            *dagger.entry((c, r)).or_insert(C64::new(0.0, 0.0)) += v.conj();
        }
        let mut max = 0.0f64;
        for (r, c, v) in self.entries() {
            let d = dagger.remove(&(r, c)).unwrap_or(C64::new(0.0, 0.0));
            max = max.max((v - d).norm());
        }
        for (_, d) in dagger {
            max = max.max(d.norm());
        }
        max
    }

    pub fn trace(&self) -> C64 {
        self.entries()
            .filter(|&(r, c, _)| r == c)
            .map(|(_, _, v)| v)
            .sum()
    }
}

/// Complex amplitude vector over a basis.
#[derive(Clone, Debug)]
pub struct PureState {
    basis: Arc<SectorBasis>,
    amplitudes: Vec<C64>,
    normalized: bool,
}

impl PureState {
    pub fn from_amplitudes(basis: Arc<SectorBasis>, amplitudes: Vec<C64>) -> Self {
        assert_eq!(basis.dim(), amplitudes.len());
        let norm2: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        PureState {
            basis,
            amplitudes,
            normalized: (norm2.sqrt() - 1.0).abs() < 1e-10,
        }
    }

    /// Computational basis state |bits>.
    pub fn basis_state(basis: Arc<SectorBasis>, bits: u64) -> Result<Self> {
        let idx = basis.index(bits).ok_or(Error::BasisMismatch(format!(
            "bit string {bits:#b} not in basis"
        )))?;
        let mut amplitudes = vec![C64::new(0.0, 0.0); basis.dim()];
        amplitudes[idx] = C64::new(1.0, 0.0);
        Ok(PureState {
            basis,
            amplitudes,
            normalized: true,
        })
    }

    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            for a in &mut self.amplitudes {
                *a /= n;
            }
        }
        self.normalized = true;
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        check_compatible(&self.basis, &other.basis)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn scaled(&self, c: C64) -> PureState {
        PureState::from_amplitudes(
            self.basis.clone(),
            self.amplitudes.iter().map(|a| a * c).collect(),
        )
    }

    /// Embed a sector-restricted state into the full basis.
    pub fn embed(&self, full: &Arc<SectorBasis>) -> Result<PureState> {
        if full.sector().is_some() || full.num_qubits() != self.basis.num_qubits() {
            return Err(Error::BasisMismatch(
                "embed target must be the full basis on the same qubits".into(),
            ));
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); full.dim()];
        for (i, &a) in self.amplitudes.iter().enumerate() {
            amplitudes[self.basis.state(i) as usize] = a;
        }
        Ok(PureState::from_amplitudes(full.clone(), amplitudes))
    }

    /// Restrict a full-basis state to a sector. Errors when more than `tol`
    /// of the norm lies outside the sector.
    pub fn restrict(&self, sector: &Arc<SectorBasis>, tol: f64) -> Result<PureState> {
        if sector.num_qubits() != self.basis.num_qubits() || self.basis.sector().is_some() {
            return Err(Error::BasisMismatch(
                "restrict expects a full-basis state and a sector basis".into(),
            ));
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); sector.dim()];
        let mut inside = 0.0f64;
        for (i, &a) in self.amplitudes.iter().enumerate() {
            if let Some(j) = sector.index(i as u64) {
                amplitudes[j] = a;
                inside += a.norm_sqr();
            }
        }
        let total: f64 = self.amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (total - inside).abs() > tol {
            return Err(Error::BasisMismatch(format!(
                "state has weight {:.3e} outside the requested sector",
                total - inside
            )));
        }
        Ok(PureState::from_amplitudes(sector.clone(), amplitudes))
    }

    /// `<self| P |self>` for a Pauli string, computed directly from bit
    /// strings. Components that `P` maps outside the basis contribute zero,
    /// which equals projecting `P` onto the basis subspace.
    pub fn expectation_pauli(&self, p: &PauliString) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (j, &a) in self.amplitudes.iter().enumerate() {
            if a == C64::new(0.0, 0.0) {
                continue;
            }
            let (out, phase) = p.apply_to_bits(self.basis.state(j));
            if let Some(i) = self.basis.index(out) {
                acc += self.amplitudes[i].conj() * phase * a;
            }
        }
        acc
    }

    /// Apply a Pauli string, dropping components the basis cannot represent.
    ///
    /// Errors when the string would move a sector basis out of its sector.
    pub fn apply_pauli(&self, p: &PauliString) -> Result<PureState> {
        if self.basis.sector().is_some() && !p.preserves_sector() {
            return Err(Error::SectorViolation);
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); self.basis.dim()];
        for (j, &a) in self.amplitudes.iter().enumerate() {
            let (out, phase) = p.apply_to_bits(self.basis.state(j));
            if let Some(i) = self.basis.index(out) {
                amplitudes[i] += phase * a;
            }
        }
        Ok(PureState::from_amplitudes(self.basis.clone(), amplitudes))
    }

    /// `<S^z_tot>` of the state.
    pub fn sz_total_expectation(&self) -> f64 {
        let n = self.basis.num_qubits();
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| magnetization(self.basis.state(i), n) as f64 * a.norm_sqr())
            .sum()
    }

    /// Norm of `(S^z_tot - m) |self>` minimized over no shift: `||S^z|ψ>||`
    /// when the state should be an S^z = 0 eigenstate.
    pub fn sz_total_residual(&self) -> f64 {
        let n = self.basis.num_qubits();
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let m = magnetization(self.basis.state(i), n) as f64;
                (m * m) * a.norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Build the sparse matrix of a Pauli string in a basis.
///
/// The result has at most one nonzero per column. Strings with an odd number
/// of X/Y factors change the sector and are rejected against sector bases.
pub fn pauli_string_to_operator(
    p: &PauliString,
    basis: &Arc<SectorBasis>,
) -> Result<SparseOperator> {
    if let Some(site) = p.max_site() {
        if site >= basis.num_qubits() {
            return Err(Error::InvalidSpec(format!(
                "pauli site {site} outside {}-qubit system",
                basis.num_qubits()
            )));
        }
    }
    if basis.sector().is_some() && !p.preserves_sector() {
        return Err(Error::SectorViolation);
    }
    let mut triplets = Vec::with_capacity(basis.dim());
    for j in 0..basis.dim() {
        let (out, phase) = p.apply_to_bits(basis.state(j));
        if let Some(i) = basis.index(out) {
            triplets.push((i, j, phase));
        }
    }
    let hermitian = p.phase().im == 0.0;
    Ok(SparseOperator::from_triplets(
        basis.clone(),
        triplets,
        hermitian,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn sector_two_qubits() {
        let b = enumerate_sector(2, Some(0)).unwrap();
        assert_eq!(b.dim(), 2);
        assert_eq!(b.states(), &[0b01, 0b10]);
        let full = enumerate_sector(2, None).unwrap();
        assert_eq!(full.dim(), 4);
    }

    #[test]
    fn sector_16_qubits_matches_binomial() {
        let b = enumerate_sector(16, Some(0)).unwrap();
        // brute-force oracle: count 16-bit words with popcount 8
        let count = (0u32..1 << 16).filter(|w| w.count_ones() == 8).count();
        assert_eq!(count, 12870);
        assert_eq!(b.dim(), count);
    }

    #[test]
    fn sector_parity_mismatch_rejected() {
        assert!(matches!(
            enumerate_sector(2, Some(1)),
            Err(Error::InvalidSector { .. })
        ));
        assert!(matches!(
            enumerate_sector(3, Some(4)),
            Err(Error::InvalidSector { .. })
        ));
    }

    #[test]
    fn sectors_partition_full_space() {
        for n in 1..=8usize {
            let mut total = 0;
            let mut s = -(n as i64);
            while s <= n as i64 {
                total += enumerate_sector(n, Some(s)).unwrap().dim();
                s += 2;
            }
            assert_eq!(total, 1 << n);
        }
    }

    #[test]
    fn pauli_z_diagonal() {
        let b = SectorBasis::full(1);
        let op = pauli_string_to_operator(&PauliString::single(0, Axis::Z), &b).unwrap();
        let d = op.to_dense();
        // state 0 = down (-1), state 1 = up (+1)
        assert_eq!(d[(0, 0)], c(-1.0, 0.0));
        assert_eq!(d[(1, 1)], c(1.0, 0.0));
    }

    #[test]
    fn pauli_x_offdiagonal() {
        let b = SectorBasis::full(1);
        let op = pauli_string_to_operator(&PauliString::single(0, Axis::X), &b).unwrap();
        let d = op.to_dense();
        assert_eq!(d[(0, 1)], c(1.0, 0.0));
        assert_eq!(d[(1, 0)], c(1.0, 0.0));
        assert_eq!(d[(0, 0)], c(0.0, 0.0));
    }

    #[test]
    fn xx_in_sector_is_swap() {
        let b = enumerate_sector(2, Some(0)).unwrap();
        let xx = PauliString::new(vec![(0, Axis::X), (1, Axis::X)]).unwrap();
        let op = pauli_string_to_operator(&xx, &b).unwrap();
        let d = op.to_dense();
        assert_eq!(d[(0, 1)], c(1.0, 0.0));
        assert_eq!(d[(1, 0)], c(1.0, 0.0));
        assert_eq!(d[(0, 0)], c(0.0, 0.0));
        assert_eq!(d[(1, 1)], c(0.0, 0.0));
    }

    #[test]
    fn sector_violating_string_rejected() {
        let b = enumerate_sector(2, Some(0)).unwrap();
        let x = PauliString::single(0, Axis::X);
        assert!(matches!(
            pauli_string_to_operator(&x, &b),
            Err(Error::SectorViolation)
        ));
    }

    #[test]
    fn pauli_squares_to_identity() {
        // every Pauli string squares to the identity
        let b = SectorBasis::full(3);
        let strings = [
            PauliString::new(vec![(0, Axis::X), (1, Axis::Y), (2, Axis::Z)]).unwrap(),
            PauliString::new(vec![(0, Axis::Y), (2, Axis::Y)]).unwrap(),
            PauliString::single(1, Axis::Z),
        ];
        for p in &strings {
            let op = pauli_string_to_operator(p, &b).unwrap();
            let sq = op.to_dense() * op.to_dense();
            for i in 0..b.dim() {
                for j in 0..b.dim() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((sq[(i, j)] - c(want, 0.0)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn apply_involution_and_expectation() {
        let b = SectorBasis::full(2);
        let z0 = pauli_string_to_operator(&PauliString::single(0, Axis::Z), &b).unwrap();
        let up = PureState::basis_state(b.clone(), 0b01).unwrap();
        let once = z0.apply(&up).unwrap();
        let twice = z0.apply(&once).unwrap();
        for (a, b) in up.amplitudes().iter().zip(twice.amplitudes()) {
            assert!((a - b).norm() < 1e-15);
        }
        // <up|Z|up> on site 0 = +1
        assert!((z0.expectation(&up).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn singlet_expectations() {
        // rung singlet (|up,down> - |down,up>)/sqrt(2) on 2 qubits
        let b = SectorBasis::full(2);
        let s = 0.5f64.sqrt();
        let mut amps = vec![c(0.0, 0.0); 4];
        amps[0b01] = c(s, 0.0); // site0 up, site1 down
        amps[0b10] = c(-s, 0.0);
        let singlet = PureState::from_amplitudes(b.clone(), amps);
        let zz = pauli_string_to_operator(
            &PauliString::new(vec![(0, Axis::Z), (1, Axis::Z)]).unwrap(),
            &b,
        )
        .unwrap();
        let xx = pauli_string_to_operator(
            &PauliString::new(vec![(0, Axis::X), (1, Axis::X)]).unwrap(),
            &b,
        )
        .unwrap();
        assert!((zz.expectation(&singlet).unwrap() - c(-1.0, 0.0)).norm() < 1e-12);
        assert!((xx.expectation(&singlet).unwrap() - c(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn expectation_pauli_matches_operator_route() {
        // brute-force cross-check on a pseudo-random state, n <= 6
        let n = 5;
        let b = SectorBasis::full(n);
        let mut amps = Vec::with_capacity(b.dim());
        let mut x = 0x9e3779b97f4a7c15u64;
        for _ in 0..b.dim() {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1);
            let re = ((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1);
            let im = ((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
            amps.push(c(re, im));
        }
        let mut s = PureState::from_amplitudes(b.clone(), amps);
        s.normalize();
        let p = PauliString::new(vec![(0, Axis::X), (2, Axis::Y), (4, Axis::Z)]).unwrap();
        let op = pauli_string_to_operator(&p, &b).unwrap();
        let via_op = op.expectation(&s).unwrap();
        let direct = s.expectation_pauli(&p);
        assert!((via_op - direct).norm() < 1e-12);
        // dense-matrix oracle
        let d = op.to_dense();
        let mut acc = c(0.0, 0.0);
        for i in 0..b.dim() {
            for j in 0..b.dim() {
                acc += s.amplitudes()[i].conj() * d[(i, j)] * s.amplitudes()[j];
            }
        }
        assert!((via_op - acc).norm() < 1e-12);
    }

    #[test]
    fn transpose_rule() {
        let y = PauliString::single(0, Axis::Y).transpose();
        assert_eq!(y.phase(), c(-1.0, 0.0));
        let x = PauliString::single(0, Axis::X).transpose();
        assert_eq!(x.phase(), c(1.0, 0.0));
        let z = PauliString::single(0, Axis::Z).transpose();
        assert_eq!(z.phase(), c(1.0, 0.0));
    }
}
