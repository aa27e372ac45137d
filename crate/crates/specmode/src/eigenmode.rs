//! Orthonormal spectral-mode bases and coefficient decompositions.
//!
//! A continuous joint amplitude becomes tractable once expanded over a
//! discrete orthonormal basis {ξ_i}: an n-photon single-spatial-mode state
//! reduces to coefficients λ per nondecreasing index combination, and from
//! those to occupation amplitudes over the basis modes. This module builds
//! such bases (Gram–Schmidt, including bases whose first element is a given
//! function), performs the decomposition and its inverse, and covers the
//! two special cases used throughout: the split of a single-photon function
//! against one reference mode, and the Schmidt decomposition of two-photon
//! states across two spatial modes.
//!
//! Generated basis functions follow one phase convention — first nonzero
//! amplitude real-positive — so decompositions are reproducible. The one
//! deliberate exception: [`basis_containing`] keeps the supplied function
//! verbatim as element 0.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use ndarray::{Array2, ArrayD, IxDyn};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sdf::JointSDF;
use crate::spectral::{inner_product, require_normalized, FrequencyGrid, SpectralFunction};
use crate::states::factorial;
use crate::tolerances;

/// An ordered orthonormal set of spectral functions on one grid.
#[derive(Debug, Clone)]
pub struct EigenBasis {
    grid: FrequencyGrid,
    functions: Vec<SpectralFunction>,
}

impl EigenBasis {
    pub fn grid(&self) -> FrequencyGrid {
        self.grid
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn function(&self, i: usize) -> &SpectralFunction {
        &self.functions[i]
    }

    pub fn functions(&self) -> &[SpectralFunction] {
        &self.functions
    }

    /// Max deviation of ⟨ξ_i, ξ_j⟩ from δ_ij over all pairs.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, f) in self.functions.iter().enumerate() {
            for (j, g) in self.functions.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                let got = inner_product(f, g).unwrap();
                worst = worst.max((got - expected).norm());
            }
        }
        worst
    }

    /// Overlaps ⟨ξ_j, f⟩ for every basis function, in order.
    pub fn overlaps(&self, f: &SpectralFunction) -> Result<Vec<Complex64>> {
        self.functions.iter().map(|xi| inner_product(xi, f)).collect()
    }
}

/// Subtracts the projection of `v` onto every accepted basis function.
/// Two passes keep the result orthogonal to working precision even when the
/// input is nearly dependent on the accepted set.
fn project_out(v: &SpectralFunction, accepted: &[SpectralFunction]) -> SpectralFunction {
    let mut out = v.clone();
    for _ in 0..2 {
        for xi in accepted {
            let c = inner_product(xi, &out).unwrap();
            out = out.add_scaled(-c, xi).unwrap();
        }
    }
    out
}

/// Orthonormalizes `seeds` in order; a seed whose residual norm after
/// projection onto the accepted set falls below `tol` is dropped as linearly
/// dependent. Output functions carry the canonical phase.
pub fn gram_schmidt(seeds: &[SpectralFunction], tol: f64) -> Result<EigenBasis> {
    if seeds.is_empty() {
        return Err(Error::EmptyBasis);
    }
    let grid = seeds[0].grid();
    let mut functions: Vec<SpectralFunction> = Vec::new();
    for seed in seeds {
        if seed.grid() != grid {
            return Err(Error::Usage("seeds live on different grids".into()));
        }
        let residual = project_out(seed, &functions);
        if residual.norm() < tol {
            continue;
        }
        functions.push(residual.normalized()?.with_canonical_phase());
    }
    if functions.is_empty() {
        return Err(Error::EmptyBasis);
    }
    Ok(EigenBasis { grid, functions })
}

/// Families of candidate functions used to extend a basis to a target size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FillerFamily {
    /// Hermite–Gauss functions `H_k(x)·exp(−x²/2)`, `x = (ω−center)/(width·√2)`,
    /// in order k = 0, 1, 2, … — member 0 is the Gaussian pulse shape itself.
    HermiteGauss { center: f64, width: f64 },
    /// Single-node indicator functions, in grid order.
    GridIndicators,
}

/// The k-th normalized Hermite–Gauss function on the grid.
///
/// Evaluated through the weighted recurrence
/// `h_{k+1} = 2x·h_k − 2k·h_{k−1}` on `h_k = H_k(x)·exp(−x²/2)` directly (the
/// Gaussian weight rides along, so no intermediate overflows), rescaling each
/// step; the result is grid-normalized at the end.
pub fn hermite_gauss(
    grid: FrequencyGrid,
    center: f64,
    width: f64,
    k: usize,
) -> Result<SpectralFunction> {
    if width <= 0.0 || !width.is_finite() {
        return Err(Error::Config(format!("width must be positive, got {width}")));
    }
    let xs: Vec<f64> =
        grid.nodes().map(|w| (w - center) / (width * std::f64::consts::SQRT_2)).collect();
    let mut prev: Vec<f64> = vec![0.0; xs.len()];
    let mut cur: Vec<f64> = xs.iter().map(|x| (-0.5 * x * x).exp()).collect();
    for m in 0..k {
        let next: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| 2.0 * x * cur[i] - 2.0 * (m as f64) * prev[i])
            .collect();
        let peak = next.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let scale = if peak > 0.0 { 1.0 / peak } else { 1.0 };
        prev = cur.iter().map(|v| v * scale).collect();
        cur = next.iter().map(|v| v * scale).collect();
    }
    let samples = cur.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
    Ok(SpectralFunction::from_samples(grid, samples)?.normalized()?.with_canonical_phase())
}

fn filler_member(family: FillerFamily, grid: FrequencyGrid, k: usize) -> Result<SpectralFunction> {
    match family {
        FillerFamily::HermiteGauss { center, width } => hermite_gauss(grid, center, width, k),
        FillerFamily::GridIndicators => {
            let mut samples = vec![Complex64::new(0.0, 0.0); grid.points()];
            samples[k] = Complex64::new(1.0 / grid.step().sqrt(), 0.0);
            SpectralFunction::from_samples(grid, samples)
        }
    }
}

/// Builds an orthonormal basis of `size` functions whose element 0 is `f`
/// verbatim, extended by Gram–Schmidt over the filler family in family
/// order (dependent members skipped).
pub fn basis_containing(
    f: &SpectralFunction,
    filler: FillerFamily,
    size: usize,
) -> Result<EigenBasis> {
    require_normalized(f, "basis seed")?;
    let grid = f.grid();
    if size == 0 {
        return Err(Error::Usage("requested basis size 0".into()));
    }
    if size > grid.points() {
        return Err(Error::Dimension { requested: size, achievable: grid.points() });
    }
    let mut functions = vec![f.clone()];
    let candidate_cap = match filler {
        FillerFamily::GridIndicators => grid.points(),
        // The family is formally unbounded but its rank is capped by the
        // grid; going a few multiples past that only re-discovers dependence.
        FillerFamily::HermiteGauss { .. } => 4 * grid.points() + 16,
    };
    let mut k = 0;
    while functions.len() < size && k < candidate_cap {
        let candidate = filler_member(filler, grid, k)?;
        k += 1;
        let residual = project_out(&candidate, &functions);
        if residual.norm() < tolerances::GRAM_SCHMIDT_DROP {
            continue;
        }
        functions.push(residual.normalized()?.with_canonical_phase());
    }
    if functions.len() < size {
        return Err(Error::Dimension { requested: size, achievable: functions.len() });
    }
    Ok(EigenBasis { grid, functions })
}

/// Builds an orthonormal basis whose element 0 is `f` verbatim, extended by
/// Gram–Schmidt over `candidates` in order (dependent ones skipped). Unlike
/// [`basis_containing`] there is no size target: the result spans
/// {f} ∪ candidates exactly, which callers use to re-express states in a
/// basis aligned with a measurement or filter mode.
pub fn basis_with_leading(
    f: &SpectralFunction,
    candidates: &[SpectralFunction],
) -> Result<EigenBasis> {
    require_normalized(f, "basis seed")?;
    let grid = f.grid();
    let mut functions = vec![f.clone()];
    for candidate in candidates {
        if candidate.grid() != grid {
            return Err(Error::Usage("candidates live on a different grid".into()));
        }
        let residual = project_out(candidate, &functions);
        if residual.norm() < tolerances::GRAM_SCHMIDT_DROP {
            continue;
        }
        functions.push(residual.normalized()?.with_canonical_phase());
    }
    Ok(EigenBasis { grid, functions })
}

/// Coefficients of an n-photon single-spatial-mode state over an eigenmode
/// basis: one complex λ per nondecreasing index combination
/// (i_1 ≤ … ≤ i_n), the raw per-ordering coefficients summed into that
/// canonical key.
#[derive(Debug, Clone)]
pub struct ModeDecomposition {
    basis: EigenBasis,
    photon_count: usize,
    coefficients: BTreeMap<Vec<usize>, Complex64>,
    residual: f64,
}

impl ModeDecomposition {
    /// Assembles a decomposition from explicit coefficients. Keys must be
    /// nondecreasing index combinations of length `photon_count` with
    /// indices inside the basis.
    pub fn from_coefficients(
        basis: EigenBasis,
        photon_count: usize,
        coefficients: BTreeMap<Vec<usize>, Complex64>,
    ) -> Result<Self> {
        for key in coefficients.keys() {
            if key.len() != photon_count
                || key.windows(2).any(|w| w[0] > w[1])
                || key.iter().any(|&i| i >= basis.len())
            {
                return Err(Error::Usage(format!(
                    "invalid coefficient key {key:?} for {photon_count} photons over a \
                     {}-function basis",
                    basis.len()
                )));
            }
        }
        Ok(Self { basis, photon_count, coefficients, residual: 0.0 })
    }

    /// The vacuum component: zero photons, single empty key with amplitude 1.
    pub fn vacuum(basis: EigenBasis) -> Self {
        let mut coefficients = BTreeMap::new();
        coefficients.insert(Vec::new(), Complex64::new(1.0, 0.0));
        Self { basis, photon_count: 0, coefficients, residual: 0.0 }
    }

    pub fn basis(&self) -> &EigenBasis {
        &self.basis
    }

    pub fn photon_count(&self) -> usize {
        self.photon_count
    }

    /// λ per nondecreasing index combination.
    pub fn coefficients(&self) -> &BTreeMap<Vec<usize>, Complex64> {
        &self.coefficients
    }

    /// ‖ψ − reconstruct(self)‖ as measured at decomposition time; folds
    /// together basis incompleteness and any exchange-asymmetric part of the
    /// input (only the symmetric part is representable).
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Occupation amplitudes λ′ = √(Π m_i!)·λ, keyed by the occupation
    /// vector (photons per basis mode, length = basis size).
    ///
    /// For a state with unit quadrature norm, Σ|λ′|² equals the permutation
    /// sum 𝒩 of its exchange-symmetric part — both sides see only that part.
    pub fn occupation_amplitudes(&self) -> BTreeMap<Vec<usize>, Complex64> {
        let d = self.basis.len();
        self.coefficients
            .iter()
            .map(|(key, &lambda)| {
                let mut occ = vec![0usize; d];
                for &i in key {
                    occ[i] += 1;
                }
                let weight: f64 = occ.iter().map(|&m| factorial(m)).product();
                (occ, lambda * weight.sqrt())
            })
            .collect()
    }

    /// Σ|λ′|² over all occupation vectors.
    pub fn occupation_norm_sqr(&self) -> f64 {
        self.occupation_amplitudes().values().map(|a| a.norm_sqr()).sum()
    }
}

/// Contracts the conjugated basis onto every photon axis:
/// `C[j_1..j_n] = Σ_k Π_i conj(ξ_{j_i}[k_i]) ψ[k] step^n`.
fn contract_against_basis(sdf: &JointSDF, basis: &EigenBasis) -> Result<ArrayD<Complex64>> {
    if sdf.grid() != basis.grid() {
        return Err(Error::Usage("state and basis live on different grids".into()));
    }
    let d = basis.len();
    let n = sdf.photon_count();

    if let Some(factors) = sdf.factors() {
        // Product state: the contraction factorizes into per-photon overlap
        // vectors o_i[j] = ⟨ξ_j, f_i⟩.
        let overlaps: Vec<Vec<Complex64>> =
            factors.iter().map(|f| basis.overlaps(f)).collect::<Result<_>>()?;
        let shape = vec![d; n];
        return Ok(ArrayD::from_shape_fn(IxDyn(&shape), |idx| {
            overlaps.iter().enumerate().map(|(ax, o)| o[idx[ax]]).product()
        }));
    }

    let points = sdf.grid().points();
    let step = sdf.grid().step();
    // (d × points) matrix of conj(ξ_j[k])·step: one application contracts
    // the leading axis; rotating the result keeps the axes in input order.
    let xi_conj = Array2::from_shape_fn((d, points), |(j, k)| {
        basis.function(j).amplitudes()[k].conj() * step
    });
    let mut cur = sdf.to_dense()?;
    for _ in 0..n {
        let lead = cur.shape()[0];
        let rest_len = cur.len() / lead;
        let rest_shape: Vec<usize> = cur.shape()[1..].to_vec();
        let flat = cur
            .to_shape((lead, rest_len))
            .expect("standard-layout tensor reshapes to (lead, rest)")
            .to_owned();
        let prod = xi_conj.dot(&flat);
        let mut new_shape = vec![d];
        new_shape.extend(rest_shape);
        let arr = prod
            .into_shape_with_order(IxDyn(&new_shape))
            .expect("product reshapes back to tensor form");
        let rotate: Vec<usize> = (1..arr.ndim()).chain([0]).collect();
        cur = arr.permuted_axes(IxDyn(&rotate)).as_standard_layout().to_owned();
    }
    Ok(cur)
}

/// Decomposes a single-spatial-mode state over `basis`.
///
/// Raw coefficients for every ordered index tuple are summed into the
/// nondecreasing canonical key. The reported residual is
/// ‖ψ − reconstruct‖; values above the warning threshold indicate an
/// incomplete basis (or an exchange-asymmetric input, whose antisymmetric
/// part is not representable).
pub fn decompose(sdf: &JointSDF, basis: &EigenBasis) -> Result<ModeDecomposition> {
    if !sdf.is_single_mode() {
        return Err(Error::Usage(
            "decompose applies to one spatial mode; split multimode states first".into(),
        ));
    }
    let raw = contract_against_basis(sdf, basis)?;
    let n = sdf.photon_count();
    let mut coefficients: BTreeMap<Vec<usize>, Complex64> = BTreeMap::new();
    for (idx, &value) in raw.indexed_iter() {
        let mut key: Vec<usize> = (0..n).map(|ax| idx[ax]).collect();
        key.sort_unstable();
        *coefficients.entry(key).or_insert(Complex64::new(0.0, 0.0)) += value;
    }
    coefficients.retain(|_, v| v.norm() > tolerances::COEFFICIENT_PRUNE);

    let dec =
        ModeDecomposition { basis: basis.clone(), photon_count: n, coefficients, residual: 0.0 };
    // ‖reconstruct‖² = Σ|λ′|²/n! (orbit tensors of distinct keys are
    // orthogonal), so the residual needs no materialization.
    let represented = dec.occupation_norm_sqr() / factorial(n);
    let residual = (sdf.norm_sqr() - represented).max(0.0).sqrt();
    if residual > tolerances::INCOMPLETE_BASIS_WARN {
        log::warn!(
            "decomposition leaves residual {residual:.3e}: the basis does not span the \
             state (or the state has an exchange-asymmetric part)"
        );
    }
    Ok(ModeDecomposition { residual, ..dec })
}

/// Rebuilds the dense joint amplitude a decomposition represents: the
/// projection of the original state onto its exchange-symmetric part within
/// the basis span. Round-trips symmetric spanned states; for asymmetric
/// inputs it reproduces the (unnormalized) symmetric part.
pub fn reconstruct(dec: &ModeDecomposition) -> Result<JointSDF> {
    let n = dec.photon_count();
    if n == 0 {
        return Err(Error::Usage(
            "the vacuum component has no joint amplitude to reconstruct".into(),
        ));
    }
    let grid = dec.basis().grid();
    let points = grid.points();
    let shape = vec![points; n];
    let mut tensor: ArrayD<Complex64> = ArrayD::zeros(IxDyn(&shape));
    for (key, &lambda) in dec.coefficients() {
        let mut occ_fact = 1.0;
        let mut run = 1usize;
        for w in key.windows(2) {
            if w[0] == w[1] {
                run += 1;
                occ_fact *= run as f64;
            } else {
                run = 1;
            }
        }
        let scale = lambda * (occ_fact / factorial(n));
        for ordering in distinct_permutations(key) {
            let funcs: Vec<&SpectralFunction> =
                ordering.iter().map(|&i| dec.basis().function(i)).collect();
            for (idx, slot) in tensor.indexed_iter_mut() {
                let mut term = scale;
                for (ax, f) in funcs.iter().enumerate() {
                    term *= f.amplitudes()[idx[ax]];
                }
                *slot += term;
            }
        }
    }
    JointSDF::from_dense(grid, vec![n], tensor)
}

/// All distinct orderings of a sorted multiset.
pub(crate) fn distinct_permutations(key: &[usize]) -> Vec<Vec<usize>> {
    use itertools::Itertools;
    key.iter().copied().permutations(key.len()).unique().collect()
}

/// A single-photon function split against one reference mode:
/// ψ = λ_1·φ + λ_0·φ̄ with λ_0 ≥ 0 and ⟨φ, φ̄⟩ = 0.
#[derive(Debug, Clone)]
pub struct TwoModeSplit {
    /// The reference mode φ.
    pub desired: SpectralFunction,
    /// The orthogonal complement φ̄; the zero function when
    /// `perfect_overlap` is set (undefined but unused).
    pub rest: SpectralFunction,
    pub lambda1: Complex64,
    pub lambda0: f64,
    /// Set when λ_0 is numerically zero: ψ is φ up to phase.
    pub perfect_overlap: bool,
}

/// Splits normalized `psi` against normalized reference mode `phi`.
pub fn two_mode_split(psi: &SpectralFunction, phi: &SpectralFunction) -> Result<TwoModeSplit> {
    require_normalized(psi, "split input")?;
    require_normalized(phi, "reference mode")?;
    let lambda1 = inner_product(phi, psi)?;
    let lambda0 = (1.0 - lambda1.norm_sqr()).max(0.0).sqrt();
    if lambda0 <= tolerances::PERFECT_OVERLAP {
        return Ok(TwoModeSplit {
            desired: phi.clone(),
            rest: SpectralFunction::zero(phi.grid()),
            lambda1,
            lambda0,
            perfect_overlap: true,
        });
    }
    let mut rest = psi.add_scaled(-lambda1, phi)?;
    rest = SpectralFunction::from_samples(
        rest.grid(),
        rest.amplitudes().iter().map(|a| a / lambda0).collect(),
    )?;
    Ok(TwoModeSplit { desired: phi.clone(), rest, lambda1, lambda0, perfect_overlap: false })
}

/// Raw two-photon coefficient matrix Λ[i,j] = ⟨ξ_i ⊗ ξ_j, ψ⟩ and the
/// unrepresented residual ‖ψ − Σ Λ_ij ξ_i⊗ξ_j‖.
pub fn coefficient_matrix(sdf: &JointSDF, basis: &EigenBasis) -> Result<(Array2<Complex64>, f64)> {
    if sdf.photon_count() != 2 {
        return Err(Error::Usage("coefficient matrix is defined for two photons".into()));
    }
    let raw = contract_against_basis(sdf, basis)?;
    let d = basis.len();
    let matrix = Array2::from_shape_fn((d, d), |(i, j)| raw[IxDyn(&[i, j])]);
    let represented: f64 = matrix.iter().map(|a| a.norm_sqr()).sum();
    let residual = (sdf.norm_sqr() - represented).max(0.0).sqrt();
    if residual > tolerances::INCOMPLETE_BASIS_WARN {
        log::warn!("two-photon coefficient matrix leaves residual {residual:.3e}");
    }
    Ok((matrix, residual))
}

/// Schmidt form of a two-photon state across two spatial modes:
/// ψ = Σ_k s_k · u_k ⊗ v_k with s_k ≥ 0 descending and each side
/// orthonormal.
#[derive(Debug, Clone)]
pub struct SchmidtDecomposition {
    /// Nonnegative coefficients, descending; squares sum to 1 for a
    /// normalized spanned input.
    pub coefficients: Vec<f64>,
    /// Modes of the first spatial mode, aligned with `coefficients`.
    pub modes_a: Vec<SpectralFunction>,
    /// Modes of the second spatial mode.
    pub modes_b: Vec<SpectralFunction>,
    /// Basis-incompleteness residual inherited from the coefficient matrix.
    pub residual: f64,
}

/// Schmidt coefficients below this are trimmed from the output.
const SCHMIDT_TRIM: f64 = 1e-12;

/// Singular-value decomposition of the coefficient matrix of a normalized
/// (1,1)-partitioned two-photon state.
pub fn schmidt_decompose(biphoton: &JointSDF, basis: &EigenBasis) -> Result<SchmidtDecomposition> {
    if biphoton.partition() != [1, 1] {
        return Err(Error::Usage(
            "Schmidt decomposition applies to one photon in each of two spatial modes".into(),
        ));
    }
    if !biphoton.is_normalized(tolerances::NORMALIZATION_CHECK) {
        return Err(Error::Usage("Schmidt decomposition requires a normalized state".into()));
    }
    let (matrix, residual) = coefficient_matrix(biphoton, basis)?;
    let d = basis.len();
    let m = DMatrix::from_fn(d, d, |i, j| matrix[(i, j)]);
    let svd = m.svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");

    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .expect("singular values are finite")
    });

    let mut coefficients = Vec::new();
    let mut modes_a = Vec::new();
    let mut modes_b = Vec::new();
    for &k in &order {
        let s = svd.singular_values[k];
        if s < SCHMIDT_TRIM {
            continue;
        }
        coefficients.push(s);
        let mut a = SpectralFunction::zero(basis.grid());
        for i in 0..d {
            a = a.add_scaled(u[(i, k)], basis.function(i))?;
        }
        let mut b = SpectralFunction::zero(basis.grid());
        for j in 0..d {
            b = b.add_scaled(v_t[(k, j)], basis.function(j))?;
        }
        // The pair carries one shared phase freedom (e^{iα}, e^{−iα}); fix
        // it by making the a-side canonical and rotating the b-side along.
        let a_fixed = a.with_canonical_phase();
        let rotation = leading_phase(&a_fixed) / leading_phase(&a);
        let b_fixed = SpectralFunction::from_samples(
            basis.grid(),
            b.amplitudes().iter().map(|z| z / rotation).collect(),
        )?;
        modes_a.push(a_fixed);
        modes_b.push(b_fixed);
    }
    Ok(SchmidtDecomposition { coefficients, modes_a, modes_b, residual })
}

/// Phase of the first significant amplitude, as a unit complex number.
fn leading_phase(f: &SpectralFunction) -> Complex64 {
    f.amplitudes()
        .iter()
        .find(|a| a.norm() > 1e-14)
        .map(|a| a / a.norm())
        .unwrap_or(Complex64::new(1.0, 0.0))
}
