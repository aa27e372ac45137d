//! Occupation-number state algebra and linear-optical operations.
//!
//! Once a multi-photon state is expressed over discrete eigenmodes, its
//! physics reduces to bookkeeping over occupation vectors: a state is a map
//! from "photons per (spatial mode, eigenmode) slot" to a complex amplitude.
//! This module provides that representation plus the operations built on
//! it — beamsplitters acting on every eigenmode independently,
//! photon-number postselection (with or without resolving a single
//! eigenmode), change of eigenmode basis, spectral filtering as a partial
//! trace, finite-bandwidth detector statistics, and the density operator a
//! mode-mismatched homodyne measurement observes.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use ndarray::Array2;
use num_complex::Complex64;

use crate::eigenmode::{basis_with_leading, two_mode_split, EigenBasis, ModeDecomposition};
use crate::error::{Error, Result};
use crate::sdf::JointSDF;
use crate::spectral::{inner_product, require_normalized, SpectralFunction};
use crate::states::{factorial, is_fock_state};
use crate::tolerances;

/// Default cap on the total photon number an occupation state may hold.
pub const DEFAULT_TRUNCATION: usize = 6;

/// Spatial-mode label used for states that never carried an explicit one
/// (e.g. a density operator obtained from a single-mode joint amplitude).
pub const DEFAULT_MODE_LABEL: char = 'a';

/// One bookkeeping slot: a spatial mode crossed with an eigenmode index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Slot {
    pub mode: char,
    pub eigenmode: usize,
}

impl Slot {
    pub fn new(mode: char, eigenmode: usize) -> Self {
        Self { mode, eigenmode }
    }
}

/// A normalized superposition of photon-occupation vectors over an ordered
/// list of (spatial mode, eigenmode) slots.
///
/// Conditional states produced by measurements are stored renormalized; the
/// success probability travels separately (see [`Postselection`]).
#[derive(Debug, Clone)]
pub struct OccupationState {
    slots: Vec<Slot>,
    amplitudes: BTreeMap<Vec<usize>, Complex64>,
    truncation: usize,
}

impl OccupationState {
    /// The vacuum over the given slots.
    pub fn vacuum(slots: Vec<Slot>, truncation: usize) -> Result<Self> {
        let n = slots.len();
        let mut amplitudes = BTreeMap::new();
        amplitudes.insert(vec![0; n], Complex64::new(1.0, 0.0));
        Self::from_amplitudes(slots, amplitudes, truncation)
    }

    /// A single occupation vector with amplitude 1.
    pub fn basis_state(
        slots: Vec<Slot>,
        occupation: Vec<usize>,
        truncation: usize,
    ) -> Result<Self> {
        let mut amplitudes = BTreeMap::new();
        amplitudes.insert(occupation, Complex64::new(1.0, 0.0));
        Self::from_amplitudes(slots, amplitudes, truncation)
    }

    /// Builds a state from explicit amplitudes. The map must be normalized
    /// (Σ|amplitude|² = 1 within 1e−9) and every occupation vector must
    /// match the slot count and respect the truncation.
    pub fn from_amplitudes(
        slots: Vec<Slot>,
        amplitudes: BTreeMap<Vec<usize>, Complex64>,
        truncation: usize,
    ) -> Result<Self> {
        let state = Self::raw(slots, amplitudes, truncation)?;
        let n2 = state.norm_sqr();
        if (n2 - 1.0).abs() > tolerances::NORMALIZATION_CHECK {
            return Err(Error::Usage(format!(
                "occupation amplitudes must be normalized: Σ|amplitude|² = {n2}"
            )));
        }
        Ok(state)
    }

    /// Builds without the normalization check (structure checks still run)
    /// and returns the state renormalized together with its original Σ|a|².
    pub(crate) fn from_unnormalized(
        slots: Vec<Slot>,
        amplitudes: BTreeMap<Vec<usize>, Complex64>,
        truncation: usize,
    ) -> Result<(Self, f64)> {
        let raw = Self::raw(slots, amplitudes, truncation)?;
        let n2 = raw.norm_sqr();
        if n2 <= tolerances::PROBABILITY_FLOOR {
            return Err(Error::Unnormalizable);
        }
        let scale = 1.0 / n2.sqrt();
        let amplitudes = raw.amplitudes.into_iter().map(|(occ, a)| (occ, a * scale)).collect();
        Ok((Self { slots: raw.slots, amplitudes, truncation: raw.truncation }, n2))
    }

    fn raw(
        slots: Vec<Slot>,
        mut amplitudes: BTreeMap<Vec<usize>, Complex64>,
        truncation: usize,
    ) -> Result<Self> {
        if slots.is_empty() {
            return Err(Error::Usage("an occupation state needs at least one slot".into()));
        }
        for (i, s) in slots.iter().enumerate() {
            if slots[..i].contains(s) {
                return Err(Error::Usage(format!("duplicate slot ({}, {})", s.mode, s.eigenmode)));
            }
        }
        for occ in amplitudes.keys() {
            if occ.len() != slots.len() {
                return Err(Error::Usage(format!(
                    "occupation vector {occ:?} does not match the {} slots",
                    slots.len()
                )));
            }
            let total: usize = occ.iter().sum();
            if total > truncation {
                return Err(Error::Truncation { photons: total, limit: truncation });
            }
        }
        amplitudes.retain(|_, a| a.norm() > tolerances::COEFFICIENT_PRUNE);
        Ok(Self { slots, amplitudes, truncation })
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn amplitudes(&self) -> &BTreeMap<Vec<usize>, Complex64> {
        &self.amplitudes
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    /// Position of a slot in the occupation vectors, if present.
    pub fn slot_index(&self, mode: char, eigenmode: usize) -> Option<usize> {
        self.slots.iter().position(|s| s.mode == mode && s.eigenmode == eigenmode)
    }

    /// Positions of every slot belonging to a spatial mode.
    pub fn mode_slot_indices(&self, mode: char) -> Vec<usize> {
        (0..self.slots.len()).filter(|&i| self.slots[i].mode == mode).collect()
    }

    /// Eigenmode indices a spatial mode uses, sorted.
    pub fn eigenmodes_of(&self, mode: char) -> Vec<usize> {
        let mut v: Vec<usize> =
            self.slots.iter().filter(|s| s.mode == mode).map(|s| s.eigenmode).collect();
        v.sort_unstable();
        v
    }

    /// Amplitude of one occupation vector (zero when absent).
    pub fn amplitude(&self, occupation: &[usize]) -> Complex64 {
        self.amplitudes.get(occupation).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// |⟨other, self⟩|² when both states share the same slot layout.
    pub fn overlap_probability(&self, other: &Self) -> Result<f64> {
        if self.slots != other.slots {
            return Err(Error::Usage("states have different slot layouts".into()));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (occ, a) in &self.amplitudes {
            acc += other.amplitude(occ).conj() * a;
        }
        Ok(acc.norm_sqr())
    }
}

/// Extends a state with fresh vacuum slots for a new spatial mode.
pub fn add_vacuum_mode(
    state: &OccupationState,
    mode: char,
    eigenmodes: &[usize],
) -> Result<OccupationState> {
    if state.slots.iter().any(|s| s.mode == mode) {
        return Err(Error::Usage(format!("mode {mode} is already present")));
    }
    if eigenmodes.is_empty() {
        return Err(Error::Usage("a mode needs at least one eigenmode slot".into()));
    }
    let mut slots = state.slots.clone();
    slots.extend(eigenmodes.iter().map(|&e| Slot::new(mode, e)));
    let extra = eigenmodes.len();
    let amplitudes = state
        .amplitudes
        .iter()
        .map(|(occ, &a)| {
            let mut v = occ.clone();
            v.extend(std::iter::repeat_n(0, extra));
            (v, a)
        })
        .collect();
    OccupationState::from_amplitudes(slots, amplitudes, state.truncation)
}

/// Applies `coef · a†(slot)` to a raw amplitude map:
/// |…m…⟩ → coef·√(m+1)·|…m+1…⟩ per entry.
pub(crate) fn apply_creation(
    amplitudes: &BTreeMap<Vec<usize>, Complex64>,
    slot: usize,
    coef: Complex64,
) -> BTreeMap<Vec<usize>, Complex64> {
    let mut out = BTreeMap::new();
    for (occ, &a) in amplitudes {
        let mut v = occ.clone();
        v[slot] += 1;
        *out.entry(v).or_insert(Complex64::new(0.0, 0.0)) +=
            a * coef * ((occ[slot] + 1) as f64).sqrt();
    }
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Phase-asymmetric beamsplitter acting on every shared eigenmode:
/// a† → t·a† + r·b†, b† → r·a† − t·b† with r = √(1−t²).
///
/// Both spatial modes must be present with identical eigenmode index sets —
/// corresponding spectral modes must match one another at the splitter. The
/// map is unitary (photon-number conserving), so the output is normalized
/// to working precision.
pub fn beamsplitter(
    state: &OccupationState,
    mode_a: char,
    mode_b: char,
    transmissivity: f64,
) -> Result<OccupationState> {
    if !(0.0..=1.0).contains(&transmissivity) {
        return Err(Error::Usage(format!(
            "transmissivity must lie in [0, 1], got {transmissivity}"
        )));
    }
    if mode_a == mode_b {
        return Err(Error::Usage("beamsplitter needs two distinct modes".into()));
    }
    let eig_a = state.eigenmodes_of(mode_a);
    let eig_b = state.eigenmodes_of(mode_b);
    if eig_a.is_empty() || eig_b.is_empty() {
        return Err(Error::Usage(format!(
            "both modes must be present: {mode_a} has {} slots, {mode_b} has {}",
            eig_a.len(),
            eig_b.len()
        )));
    }
    if eig_a != eig_b {
        return Err(Error::Usage(format!(
            "eigenmode sets must match at the beamsplitter: {mode_a} uses {eig_a:?}, \
             {mode_b} uses {eig_b:?}"
        )));
    }
    let t = transmissivity;
    let r = (1.0 - t * t).max(0.0).sqrt();

    let mut amplitudes = state.amplitudes.clone();
    for &xi in &eig_a {
        let ia = state.slot_index(mode_a, xi).expect("slot exists");
        let ib = state.slot_index(mode_b, xi).expect("slot exists");
        amplitudes = splitter_pair_transform(&amplitudes, ia, ib, t, r, state.truncation)?;
    }
    OccupationState::from_amplitudes(state.slots.clone(), amplitudes, state.truncation)
}

/// Transforms one (a-slot, b-slot) pair of every monomial through the
/// binomial expansion of (t·a†+r·b†)^m (r·a†−t·b†)^n.
fn splitter_pair_transform(
    amplitudes: &BTreeMap<Vec<usize>, Complex64>,
    ia: usize,
    ib: usize,
    t: f64,
    r: f64,
    truncation: usize,
) -> Result<BTreeMap<Vec<usize>, Complex64>> {
    let mut out: BTreeMap<Vec<usize>, Complex64> = BTreeMap::new();
    for (occ, &c) in amplitudes {
        let m = occ[ia];
        let n = occ[ib];
        for p in 0..=m {
            for q in 0..=n {
                let into_a = p + q;
                let into_b = m + n - into_a;
                let total: usize = occ.iter().sum::<usize>() - m - n + into_a + into_b;
                if total > truncation {
                    return Err(Error::Truncation { photons: total, limit: truncation });
                }
                let coeff = binomial(m, p)
                    * binomial(n, q)
                    * t.powi(p as i32)
                    * r.powi((m - p + q) as i32)
                    * (-t).powi((n - q) as i32)
                    * (factorial(into_a) * factorial(into_b) / (factorial(m) * factorial(n)))
                        .sqrt();
                let mut new_occ = occ.clone();
                new_occ[ia] = into_a;
                new_occ[ib] = into_b;
                *out.entry(new_occ).or_insert(Complex64::new(0.0, 0.0)) += c * coeff;
            }
        }
    }
    out.retain(|_, a| a.norm() > tolerances::COEFFICIENT_PRUNE);
    Ok(out)
}

/// Outcome of a photon-number postselection: the success probability and
/// the conditional state as weighted pure branches (a single branch unless
/// tracing introduced mixing).
#[derive(Debug, Clone)]
pub struct Postselection {
    pub probability: f64,
    /// (weight, normalized pure state); weights sum to 1.
    pub branches: Vec<(f64, OccupationState)>,
}

impl Postselection {
    pub fn is_pure(&self) -> bool {
        self.branches.len() == 1
    }

    /// The conditional state when no mixing arose.
    pub fn state(&self) -> Result<&OccupationState> {
        if self.branches.len() == 1 {
            Ok(&self.branches[0].1)
        } else {
            Err(Error::Usage(format!(
                "conditional state is a mixture of {} branches",
                self.branches.len()
            )))
        }
    }
}

/// Conditions on finding exactly `k` photons in a spatial mode.
///
/// Without an eigenmode restriction the projector keeps every amplitude
/// whose total occupation of the mode is `k`; the mode's slots stay in the
/// state. With `eigenmode = Some(ξ)` the projector fixes the (mode, ξ) slot
/// at `k`; the measured mode is then removed entirely — the detected slot
/// because its value is known, the mode's remaining slots by tracing (each
/// distinct traced occupation pattern becomes one branch of a mixture).
///
/// A mode absent from the state counts as empty (occupation 0).
pub fn postselect(
    state: &OccupationState,
    mode: char,
    k: usize,
    eigenmode: Option<usize>,
) -> Result<Postselection> {
    if k > state.truncation {
        return Err(Error::Usage(format!(
            "cannot condition on {k} photons above the truncation {}",
            state.truncation
        )));
    }
    match eigenmode {
        None => postselect_mode_total(state, mode, k),
        Some(xi) => postselect_eigenmode(state, mode, xi, k),
    }
}

fn postselect_mode_total(state: &OccupationState, mode: char, k: usize) -> Result<Postselection> {
    let idx = state.mode_slot_indices(mode);
    let mut kept = BTreeMap::new();
    for (occ, &a) in &state.amplitudes {
        let total: usize = idx.iter().map(|&i| occ[i]).sum();
        if total == k {
            kept.insert(occ.clone(), a);
        }
    }
    let probability: f64 = kept.values().map(|a| a.norm_sqr()).sum();
    if probability <= tolerances::PROBABILITY_FLOOR {
        return Err(Error::ZeroProbability(format!("no amplitude has {k} photons in mode {mode}")));
    }
    let (conditional, _) =
        OccupationState::from_unnormalized(state.slots.clone(), kept, state.truncation)?;
    Ok(Postselection { probability, branches: vec![(1.0, conditional)] })
}

fn postselect_eigenmode(
    state: &OccupationState,
    mode: char,
    xi: usize,
    k: usize,
) -> Result<Postselection> {
    let measured = state
        .slot_index(mode, xi)
        .ok_or_else(|| Error::Usage(format!("slot ({mode}, {xi}) is not present in the state")))?;
    let traced: Vec<usize> =
        state.mode_slot_indices(mode).into_iter().filter(|&i| i != measured).collect();
    let remaining: Vec<usize> =
        (0..state.slots.len()).filter(|i| state.slots[*i].mode != mode).collect();
    if remaining.is_empty() {
        return Err(Error::Usage(
            "conditioning would remove every slot; keep at least one other mode".into(),
        ));
    }
    // Group surviving amplitudes by the traced slots' occupation pattern:
    // patterns are perfectly distinguishable in principle, so each one is a
    // separate pure branch; coherence survives only within a branch.
    let mut groups: BTreeMap<Vec<usize>, BTreeMap<Vec<usize>, Complex64>> = BTreeMap::new();
    for (occ, &a) in &state.amplitudes {
        if occ[measured] != k {
            continue;
        }
        let pattern: Vec<usize> = traced.iter().map(|&i| occ[i]).collect();
        let rest: Vec<usize> = remaining.iter().map(|&i| occ[i]).collect();
        *groups.entry(pattern).or_default().entry(rest).or_insert(Complex64::new(0.0, 0.0)) += a;
    }
    let slots: Vec<Slot> = remaining.iter().map(|&i| state.slots[i]).collect();
    let mut probability = 0.0;
    let mut weighted = Vec::new();
    for (_, group) in groups {
        let weight: f64 = group.values().map(|a| a.norm_sqr()).sum();
        if weight <= tolerances::PROBABILITY_FLOOR {
            continue;
        }
        probability += weight;
        let (branch, _) =
            OccupationState::from_unnormalized(slots.clone(), group, state.truncation)?;
        weighted.push((weight, branch));
    }
    if probability <= tolerances::PROBABILITY_FLOOR {
        return Err(Error::ZeroProbability(format!(
            "no amplitude has {k} photons in slot ({mode}, {xi})"
        )));
    }
    let branches = weighted.into_iter().map(|(w, b)| (w / probability, b)).collect();
    Ok(Postselection { probability, branches })
}

/// A photon-number density operator of one designated mode.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    mode: char,
    matrix: Array2<Complex64>,
}

impl DensityOperator {
    /// Validates Hermiticity (1e−12), unit trace (1e−9) and positivity
    /// (eigenvalues ≥ −1e−9).
    pub fn new(mode: char, matrix: Array2<Complex64>) -> Result<Self> {
        let (d, d2) = matrix.dim();
        if d == 0 || d != d2 {
            return Err(Error::Usage(format!(
                "density matrix must be square and non-empty, got {d}×{d2}"
            )));
        }
        for i in 0..d {
            for j in 0..d {
                let defect = (matrix[(i, j)] - matrix[(j, i)].conj()).norm();
                if defect > tolerances::DENSITY_HERMITICITY {
                    return Err(Error::Usage(format!(
                        "density matrix is not Hermitian: |ρ[{i},{j}] − ρ[{j},{i}]*| = {defect:.3e}"
                    )));
                }
            }
        }
        let trace: f64 = (0..d).map(|i| matrix[(i, i)].re).sum();
        if (trace - 1.0).abs() > tolerances::DENSITY_TRACE {
            return Err(Error::Usage(format!("density matrix trace is {trace}, expected 1")));
        }
        let m = DMatrix::from_fn(d, d, |i, j| matrix[(i, j)]);
        let eigs = m.symmetric_eigenvalues();
        if let Some(bad) = eigs.iter().find(|&&e| e < -tolerances::DENSITY_EIGENVALUE) {
            return Err(Error::Usage(format!("density matrix has negative eigenvalue {bad:.3e}")));
        }
        Ok(Self { mode, matrix })
    }

    pub fn mode(&self) -> char {
        self.mode
    }

    /// Photon cutoff + 1.
    pub fn dimension(&self) -> usize {
        self.matrix.dim().0
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.matrix
    }

    pub fn element(&self, i: usize, j: usize) -> Complex64 {
        self.matrix[(i, j)]
    }

    /// Photon-number probabilities ρ[m,m].
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dimension()).map(|i| self.matrix[(i, i)].re).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dimension()).map(|i| self.matrix[(i, i)].re).sum()
    }

    /// tr(ρ²) — 1 exactly for a pure state.
    pub fn purity(&self) -> f64 {
        let d = self.dimension();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                acc += self.matrix[(i, j)] * self.matrix[(j, i)];
            }
        }
        acc.re
    }

    /// ⟨v|ρ|v⟩ against a pure photon-number amplitude vector of matching
    /// dimension.
    pub fn fidelity_pure(&self, amplitudes: &[Complex64]) -> Result<f64> {
        let d = self.dimension();
        if amplitudes.len() != d {
            return Err(Error::Usage(format!(
                "amplitude vector has length {}, density matrix has dimension {d}",
                amplitudes.len()
            )));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                acc += amplitudes[i].conj() * self.matrix[(i, j)] * amplitudes[j];
            }
        }
        Ok(acc.re)
    }
}

/// Partial trace of a branch mixture onto the photon number of one slot:
/// ρ[i,i′] = Σ_b w_b Σ_rest A_b[(i,rest)]·conj(A_b[(i′,rest)]).
///
/// The matrix dimension is the largest occupation the slot reaches across
/// branches, plus one.
pub fn observed_density(
    branches: &[(f64, OccupationState)],
    mode: char,
    eigenmode: usize,
) -> Result<DensityOperator> {
    if branches.is_empty() {
        return Err(Error::Usage("no branches to observe".into()));
    }
    let weight_sum: f64 = branches.iter().map(|(w, _)| w).sum();
    if (weight_sum - 1.0).abs() > tolerances::DENSITY_TRACE
        || branches.iter().any(|(w, _)| *w < 0.0)
    {
        return Err(Error::Usage(format!(
            "branch weights must be nonnegative and sum to 1, got {weight_sum}"
        )));
    }
    let mut cutoff = 0usize;
    for (_, b) in branches {
        let slot = b.slot_index(mode, eigenmode).ok_or_else(|| {
            Error::Usage(format!("slot ({mode}, {eigenmode}) is not present in a branch"))
        })?;
        for occ in b.amplitudes().keys() {
            cutoff = cutoff.max(occ[slot]);
        }
    }
    let d = cutoff + 1;
    let mut matrix = Array2::from_elem((d, d), Complex64::new(0.0, 0.0));
    for (w, b) in branches {
        let slot = b.slot_index(mode, eigenmode).expect("checked above");
        // Collect amplitude vectors over the slot's count, keyed by the
        // occupations of everything else (the traced remainder).
        let mut by_rest: BTreeMap<Vec<usize>, Vec<Complex64>> = BTreeMap::new();
        for (occ, &a) in b.amplitudes() {
            let mut rest = occ.clone();
            let i = rest.remove(slot);
            by_rest.entry(rest).or_insert_with(|| vec![Complex64::new(0.0, 0.0); d])[i] += a;
        }
        for v in by_rest.values() {
            for i in 0..d {
                for j in 0..d {
                    matrix[(i, j)] += *w * v[i] * v[j].conj();
                }
            }
        }
    }
    DensityOperator::new(mode, matrix)
}

/// [`observed_density`] of a single pure state.
pub fn observed_density_pure(
    state: &OccupationState,
    mode: char,
    eigenmode: usize,
) -> Result<DensityOperator> {
    observed_density(&[(1.0, state.clone())], mode, eigenmode)
}

/// All ways to write `total` as an ordered sum of `parts` nonnegative terms.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut tail in compositions(total - first, parts - 1) {
            let mut v = Vec::with_capacity(parts);
            v.push(first);
            v.append(&mut tail);
            out.push(v);
        }
    }
    out
}

/// Re-expresses one spatial mode's occupations over a new eigenmode basis.
///
/// Every old eigenmode must lie in the span of the new basis (columns of
/// the overlap matrix complete within 1e−6); photon creation in ξ_i becomes
/// Σ_j ⟨y_j, ξ_i⟩ · creation in y_j, expanded multinomially per monomial.
/// The mode's new slots are appended after the untouched other-mode slots,
/// indexed 0‥new_basis.len().
pub fn change_basis(
    state: &OccupationState,
    mode: char,
    old_basis: &EigenBasis,
    new_basis: &EigenBasis,
) -> Result<OccupationState> {
    let mode_slots = state.mode_slot_indices(mode);
    if mode_slots.is_empty() {
        return Err(Error::Usage(format!("mode {mode} is not present in the state")));
    }
    for &i in &mode_slots {
        if state.slots[i].eigenmode >= old_basis.len() {
            return Err(Error::Usage(format!(
                "slot ({mode}, {}) has no function in the old basis of {} entries",
                state.slots[i].eigenmode,
                old_basis.len()
            )));
        }
    }
    let d_new = new_basis.len();
    let mut u = Array2::from_elem((d_new, old_basis.len()), Complex64::new(0.0, 0.0));
    for j in 0..d_new {
        for i in 0..old_basis.len() {
            u[(j, i)] = inner_product(new_basis.function(j), old_basis.function(i))?;
        }
    }
    for &si in &mode_slots {
        let i = state.slots[si].eigenmode;
        let covered: f64 = (0..d_new).map(|j| u[(j, i)].norm_sqr()).sum();
        if (covered - 1.0).abs() > tolerances::INCOMPLETE_BASIS_WARN {
            return Err(Error::Usage(format!(
                "new basis does not span old eigenmode {i}: coverage {covered}"
            )));
        }
    }

    let other: Vec<usize> =
        (0..state.slots.len()).filter(|i| state.slots[*i].mode != mode).collect();
    let mut slots: Vec<Slot> = other.iter().map(|&i| state.slots[i]).collect();
    slots.extend((0..d_new).map(|e| Slot::new(mode, e)));

    let mut amplitudes: BTreeMap<Vec<usize>, Complex64> = BTreeMap::new();
    for (occ, &c) in &state.amplitudes {
        // Expand Π_i (Σ_j U[j,i] b†_j)^{m_i}|0⟩ into new-slot occupations t,
        // tracking the monomial coefficient; normalization factors
        // √(Π t_j!)/√(Π m_i!) convert between monomials and number states.
        let mut t_map: BTreeMap<Vec<usize>, Complex64> = BTreeMap::new();
        t_map.insert(vec![0; d_new], Complex64::new(1.0, 0.0));
        let mut m_fact = 1.0;
        for &si in &mode_slots {
            let m = occ[si];
            if m == 0 {
                continue;
            }
            m_fact *= factorial(m);
            let i = state.slots[si].eigenmode;
            let mut next: BTreeMap<Vec<usize>, Complex64> = BTreeMap::new();
            for comp in compositions(m, d_new) {
                let mut coeff = Complex64::new(factorial(m), 0.0);
                for j in 0..d_new {
                    coeff /= factorial(comp[j]);
                    coeff *= u[(j, i)].powu(comp[j] as u32);
                }
                if coeff.norm() <= tolerances::COEFFICIENT_PRUNE {
                    continue;
                }
                for (t, &a) in &t_map {
                    let new_t: Vec<usize> = t.iter().zip(&comp).map(|(x, y)| x + y).collect();
                    *next.entry(new_t).or_insert(Complex64::new(0.0, 0.0)) += a * coeff;
                }
            }
            t_map = next;
        }
        for (t, a) in t_map {
            let t_fact: f64 = t.iter().map(|&x| factorial(x)).product();
            let scale = (t_fact / m_fact).sqrt();
            let mut new_occ: Vec<usize> = other.iter().map(|&i| occ[i]).collect();
            new_occ.extend(t);
            *amplitudes.entry(new_occ).or_insert(Complex64::new(0.0, 0.0)) += c * a * scale;
        }
    }
    OccupationState::from_amplitudes(slots, amplitudes, state.truncation)
}

/// Density operator an ideal photon counter sees behind a spectral filter
/// matched to `filter`, for an n-photon state with every photon in one
/// spectral function (a Fock input).
///
/// The factor splits as λ₁·filter + λ₀·rest; expanding (λ₁a†+λ₀b†)^n and
/// tracing the rejected component leaves the diagonal
/// ρ[i,i] = C(n,i)·|λ₁|^{2i}·λ₀^{2(n−i)}.
pub fn spectral_filter(sdf: &JointSDF, filter: &SpectralFunction) -> Result<DensityOperator> {
    require_normalized(filter, "filter mode")?;
    if !sdf.is_normalized(tolerances::NORMALIZATION_CHECK) {
        return Err(Error::Usage("filter input must be normalized".into()));
    }
    let check = is_fock_state(sdf, tolerances::FOCK_RESIDUAL)?;
    if !check.is_fock {
        return Err(Error::Usage(format!(
            "input is not a single-function n-photon state (product residual {:.3e}); \
             decompose it and use the occupation-state path (spectral_filter_occupation)",
            check.residual
        )));
    }
    let split = two_mode_split(&check.factor, filter)?;
    let n = sdf.photon_count();
    let p1 = split.lambda1.norm_sqr();
    let p0 = split.lambda0 * split.lambda0;
    let d = n + 1;
    let mut matrix = Array2::from_elem((d, d), Complex64::new(0.0, 0.0));
    for i in 0..=n {
        matrix[(i, i)] =
            Complex64::new(binomial(n, i) * p1.powi(i as i32) * p0.powi((n - i) as i32), 0.0);
    }
    DensityOperator::new(DEFAULT_MODE_LABEL, matrix)
}

/// General spectral-filter path for occupation states: re-expresses `mode`
/// (whose slot indices refer to `basis`) over a basis led by the filter
/// function, then traces everything but the filter slot.
pub fn spectral_filter_occupation(
    state: &OccupationState,
    mode: char,
    basis: &EigenBasis,
    filter: &SpectralFunction,
) -> Result<DensityOperator> {
    require_normalized(filter, "filter mode")?;
    let aligned = basis_with_leading(filter, basis.functions())?;
    let rotated = change_basis(state, mode, basis, &aligned)?;
    observed_density_pure(&rotated, mode, 0)
}

/// Photon-number statistics behind a filter/detector of mode overlap λ₁.
#[derive(Debug, Clone)]
pub struct DetectorStatistics {
    probabilities: Vec<f64>,
}

impl DetectorStatistics {
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::Usage("statistics need at least P_0".into()));
        }
        if probabilities.iter().any(|p| !(0.0..=1.0 + 1e-12).contains(p)) {
            return Err(Error::Usage("every P_m must lie in [0, 1]".into()));
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > tolerances::DENSITY_TRACE {
            return Err(Error::Usage(format!("probabilities sum to {sum}, expected 1")));
        }
        Ok(Self { probabilities })
    }

    /// P_m for m = 0…n.
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, m: usize) -> f64 {
        self.probabilities.get(m).copied().unwrap_or(0.0)
    }

    /// Σ m·P_m.
    pub fn mean(&self) -> f64 {
        self.probabilities.iter().enumerate().map(|(m, p)| m as f64 * p).sum()
    }
}

/// Counting statistics for n photons sharing one spectral function, seen by
/// a detector whose acceptance mode has overlap amplitude λ₁ with it:
/// P_m = C(n,m)·|λ₁|^{2m}·(1−|λ₁|²)^{n−m}. |λ₁| = 1 reproduces the ideal
/// P_m = δ_{m,n}.
pub fn detector_statistics(n: usize, lambda1: Complex64) -> Result<DetectorStatistics> {
    let p1 = lambda1.norm_sqr();
    if p1 > 1.0 + 1e-12 {
        return Err(Error::Usage(format!("|λ₁| must not exceed 1, got {}", p1.sqrt())));
    }
    let p1 = p1.min(1.0);
    let p0 = 1.0 - p1;
    let probabilities =
        (0..=n).map(|m| binomial(n, m) * p1.powi(m as i32) * p0.powi((n - m) as i32)).collect();
    DetectorStatistics::new(probabilities)
}

/// Density operator a homodyne-style measurement with probe mode φ observes
/// for the superposition Σ_n c_n·|ψ_n⟩, each component supplied as a
/// decomposition over a shared basis whose first function is the probe.
///
/// Matrix elements follow
/// ρ_obs[i,i′] = Σ_{n,n′} c_n*·c_n′·λ_{n,i}*·λ_{n′,i′}·δ_{n−i,n′−i′}
/// — the conjugation sits on the first factor, the Hermiticity-consistent
/// reading — generalized so that coherence requires the full non-probe
/// occupation pattern to match, not only its photon total (the two coincide
/// whenever each component keeps its non-probe photons in a single
/// pattern). For complex amplitudes this convention yields the transpose of
/// the ρ[i,i′] = Σ A·A* partial-trace convention used elsewhere; diagonals,
/// purity and spectra agree, and the two coincide for real amplitudes.
pub fn homodyne_observe(
    components: &[(Complex64, ModeDecomposition)],
    probe: &SpectralFunction,
) -> Result<DensityOperator> {
    require_normalized(probe, "probe mode")?;
    if components.is_empty() {
        return Err(Error::Usage("no components supplied".into()));
    }
    let weight: f64 = components.iter().map(|(c, _)| c.norm_sqr()).sum();
    if (weight - 1.0).abs() > tolerances::NORMALIZATION_CHECK {
        return Err(Error::Usage(format!(
            "component weights must satisfy Σ|c_n|² = 1, got {weight}"
        )));
    }
    let basis_len = components[0].1.basis().len();
    let mut cutoff = 0usize;
    let mut master: BTreeMap<Vec<usize>, Complex64> = BTreeMap::new();
    for (c, dec) in components {
        let basis = dec.basis();
        if basis.len() != basis_len {
            return Err(Error::Usage("all components must share one decomposition basis".into()));
        }
        let align = inner_product(basis.function(0), probe)?.norm();
        if (align - 1.0).abs() > tolerances::PERFECT_OVERLAP {
            return Err(Error::Usage(format!(
                "decomposition basis must lead with the probe mode: |⟨ξ₀, φ⟩| = {align}"
            )));
        }
        cutoff = cutoff.max(dec.photon_count());
        let occupations = dec.occupation_amplitudes();
        let norm = occupations.values().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm <= tolerances::PROBABILITY_FLOOR {
            return Err(Error::Unnormalizable);
        }
        for (occ, amp) in occupations {
            *master.entry(occ).or_insert(Complex64::new(0.0, 0.0)) += c * amp / norm;
        }
    }
    let d = cutoff + 1;
    // Group by the non-probe occupation pattern; within a group collect the
    // amplitude per probe count i, then add conj(v[i])·v[i′].
    let mut by_rest: BTreeMap<Vec<usize>, Vec<Complex64>> = BTreeMap::new();
    for (occ, amp) in master {
        let i = occ[0];
        let rest: Vec<usize> = occ[1..].to_vec();
        by_rest.entry(rest).or_insert_with(|| vec![Complex64::new(0.0, 0.0); d])[i] += amp;
    }
    let mut matrix = Array2::from_elem((d, d), Complex64::new(0.0, 0.0));
    for v in by_rest.values() {
        for i in 0..d {
            for j in 0..d {
                matrix[(i, j)] += v[i].conj() * v[j];
            }
        }
    }
    DensityOperator::new(DEFAULT_MODE_LABEL, matrix)
}
