//! Ready-made experiments built from the lower layers: two-photon
//! (Hong–Ou–Mandel) interference for independent and jointly-described
//! photon pairs, four-photon interference of two pulse pairs, pulsed
//! pair sources with a truncated pair-number expansion, and the two
//! heralded preparations such a source supports — odd-photon "kitten"
//! states from a weakly tapped degenerate source and photon-number states
//! from a spectrally resolved detector on one arm.
//!
//! Every experiment is computed two ways where a closed form exists: the
//! closed form is reported next to a full occupation-state simulation
//! (beamsplitter + postselection), so disagreements surface as data rather
//! than silent substitution.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use ndarray::{Array2, ArrayD, IxDyn};
use num_complex::Complex64;

use crate::eigenmode::{
    basis_with_leading, coefficient_matrix, distinct_permutations, gram_schmidt, EigenBasis,
};
use crate::error::{Error, Result};
use crate::optics::{
    add_vacuum_mode, apply_creation, beamsplitter, change_basis, observed_density, postselect,
    DensityOperator, OccupationState, Slot, DEFAULT_TRUNCATION,
};
use crate::sdf::JointSDF;
use crate::spectral::{
    gaussian_pulse, inner_product, overlap_gamma, require_normalized, FrequencyGrid,
    SpectralFunction,
};
use crate::states::{factorial, fit_product_factor, normalization_factor, ProductFactorFit};
use crate::tolerances;

/// Pair couplings above this magnitude put a source outside the weak-gain
/// regime its truncated pair-number expansion is built for; construction
/// logs a warning.
pub const STRONG_COUPLING: f64 = 0.3;

/// Heralding that silently drops more than this fraction of the detection
/// weight (extra photons beside the detector mode) logs a warning.
pub const HERALD_NEGLECT_WARN: f64 = 1e-2;

// ---------------------------------------------------------------------------
// Two-photon (Hong–Ou–Mandel) interference
// ---------------------------------------------------------------------------

/// Coincidence outcome of two-photon interference at a balanced
/// beamsplitter, carrying both the closed form and the simulation it is
/// checked against.
#[derive(Debug, Clone)]
pub struct HOMResult {
    /// Exchange overlap of the two photons: |⟨φ,ϕ⟩|² for independent
    /// photons, Re⟨ψ, ψ∘swap⟩ for a joint two-photon amplitude. Lies in
    /// [0, 1] for independent photons and in [−1, 1] in general.
    pub gamma: f64,
    /// Coincidence probability from the closed form ½(1 − gamma).
    pub p_c_closed: f64,
    /// Coincidence probability from the occupation-state simulation
    /// (balanced beamsplitter, then exactly one photon per output).
    pub p_c_simulated: f64,
}

impl HOMResult {
    /// The simulated coincidence probability. Exchange-symmetric inputs
    /// keep it in [0, ½]; anti-symmetric amplitudes push it up to 1.
    pub fn p_c(&self) -> f64 {
        self.p_c_simulated
    }
}

/// Two independently prepared photons, one per input port, meeting at a
/// balanced beamsplitter.
///
/// Both pulse shapes must be normalized. The closed form ½(1 − |⟨φ,ϕ⟩|²)
/// is returned together with a simulation that expresses both photons over
/// the span of {φ, ϕ} and counts coincidences after the splitter.
pub fn hom_separable(phi: &SpectralFunction, chi: &SpectralFunction) -> Result<HOMResult> {
    require_normalized(phi, "first photon")?;
    require_normalized(chi, "second photon")?;
    let gamma = overlap_gamma(phi, chi)?;
    let p_c_closed = 0.5 * (1.0 - gamma);

    let basis = gram_schmidt(&[phi.clone(), chi.clone()], tolerances::GRAM_SCHMIDT_DROP)?;
    let u = basis.overlaps(phi)?;
    let v = basis.overlaps(chi)?;
    let d = basis.len();
    let matrix = Array2::from_shape_fn((d, d), |(i, j)| u[i] * v[j]);
    let (state, _) = biphoton_occupation(&matrix)?;
    let p_c_simulated = coincidence_probability(&state)?;
    Ok(HOMResult { gamma, p_c_closed, p_c_simulated })
}

/// A photon pair described by one joint two-photon amplitude (partition
/// 1 + 1), one photon per input port of a balanced beamsplitter.
///
/// The pair coefficients Λ[i,j] over `basis` drive both paths: the closed
/// form ¼·Σ_{i≠j}|Λij − Λji|² (the anti-symmetric part of the amplitude is
/// what coincides) and the occupation-state simulation. When the basis
/// leaves part of the amplitude unrepresented a warning is logged and both
/// values refer to the represented part, renormalized.
pub fn hom_entangled(biphoton: &JointSDF, basis: &EigenBasis) -> Result<HOMResult> {
    if biphoton.partition() != [1, 1] {
        return Err(Error::Usage(format!(
            "two-photon interference needs one photon per spatial mode, got partition {:?}",
            biphoton.partition()
        )));
    }
    if !biphoton.is_normalized(tolerances::NORMALIZATION_CHECK) {
        return Err(Error::Usage("the joint amplitude must be normalized".into()));
    }
    let (matrix, _residual) = coefficient_matrix(biphoton, basis)?;
    let represented: f64 = matrix.iter().map(|a| a.norm_sqr()).sum();
    if represented <= tolerances::PROBABILITY_FLOOR {
        return Err(Error::Unnormalizable);
    }
    let d = basis.len();
    let mut gamma = 0.0;
    let mut anti = 0.0;
    for i in 0..d {
        for j in 0..d {
            let lij = matrix[(i, j)] / represented.sqrt();
            let lji = matrix[(j, i)] / represented.sqrt();
            gamma += (lij.conj() * lji).re;
            if i != j {
                anti += (lij - lji).norm_sqr();
            }
        }
    }
    let p_c_closed = 0.25 * anti;
    let (state, _) = biphoton_occupation(&matrix)?;
    let p_c_simulated = coincidence_probability(&state)?;
    Ok(HOMResult { gamma, p_c_closed, p_c_simulated })
}

/// One photon in spatial mode 'a', one in 'b', with joint eigenmode
/// coefficients Λ[i,j]; renormalizes, returning the original Σ|Λ|².
fn biphoton_occupation(matrix: &Array2<Complex64>) -> Result<(OccupationState, f64)> {
    let d = matrix.nrows();
    let mut slots: Vec<Slot> = (0..d).map(|e| Slot::new('a', e)).collect();
    slots.extend((0..d).map(|e| Slot::new('b', e)));
    let mut amplitudes = BTreeMap::new();
    for ((i, j), &a) in matrix.indexed_iter() {
        if a.norm() <= tolerances::COEFFICIENT_PRUNE {
            continue;
        }
        let mut occ = vec![0usize; 2 * d];
        occ[i] += 1;
        occ[d + j] += 1;
        *amplitudes.entry(occ).or_insert(Complex64::new(0.0, 0.0)) += a;
    }
    OccupationState::from_unnormalized(slots, amplitudes, DEFAULT_TRUNCATION)
}

/// Balanced beamsplitter on modes 'a'/'b', then the probability of exactly
/// one photon in output 'a' (for two photons in total, a coincidence).
fn coincidence_probability(state: &OccupationState) -> Result<f64> {
    let split = beamsplitter(state, 'a', 'b', FRAC_1_SQRT_2)?;
    match postselect(&split, 'a', 1, None) {
        Ok(sel) => Ok(sel.probability),
        Err(Error::ZeroProbability(_)) => Ok(0.0),
        Err(e) => Err(e),
    }
}

// ---------------------------------------------------------------------------
// Four-photon interference
// ---------------------------------------------------------------------------

/// Outcome of sending the pulse pair (φ1, φ2) into each input port of a
/// balanced beamsplitter and asking for all four photons in output A.
#[derive(Debug, Clone)]
pub struct FourPhotonResult {
    /// Pairwise overlap |⟨φ1,φ2⟩|².
    pub gamma: f64,
    /// Permutation-sum normalization 1 + γ of one input pair.
    pub n2: f64,
    /// Permutation-sum normalization of the four-photon bunch
    /// φ1⊗φ1⊗φ2⊗φ2 in a single spatial mode.
    pub n4: f64,
    /// Simulated probability of finding all four photons in output A.
    pub p_4a: f64,
    /// The benchmark closed form ¼(γ + 1/(1+γ)). It matches the simulation
    /// at γ = 0 and γ = 1 but not between — compare against
    /// [`FourPhotonResult::p_4a_from_norms`], which matches everywhere.
    pub p_4a_closed: f64,
}

impl FourPhotonResult {
    /// 𝒩₄ / (16·𝒩₂²): the bunching probability the permutation sums imply;
    /// agrees with `p_4a` to working precision at every overlap.
    pub fn p_4a_from_norms(&self) -> f64 {
        self.n4 / (16.0 * self.n2 * self.n2)
    }
}

/// Four-photon interference of two pulse pairs: each input port of a
/// balanced beamsplitter carries the (normalized) two-photon state with
/// one photon in φ1 and one in φ2; the output event is all four photons
/// in port A.
pub fn four_photon_interference(
    phi1: &SpectralFunction,
    phi2: &SpectralFunction,
) -> Result<FourPhotonResult> {
    require_normalized(phi1, "first pulse")?;
    require_normalized(phi2, "second pulse")?;
    let gamma = overlap_gamma(phi1, phi2)?;
    let n2 =
        normalization_factor(&JointSDF::product(vec![phi1.clone(), phi2.clone()], vec![2])?)?.value;
    let n4 = normalization_factor(&JointSDF::product(
        vec![phi1.clone(), phi1.clone(), phi2.clone(), phi2.clone()],
        vec![4],
    )?)?
    .value;
    let p_4a_closed = 0.25 * (gamma + 1.0 / (1.0 + gamma));

    let basis = gram_schmidt(&[phi1.clone(), phi2.clone()], tolerances::GRAM_SCHMIDT_DROP)?;
    let u = basis.overlaps(phi1)?;
    let v = basis.overlaps(phi2)?;
    let d = basis.len();
    let mut slots: Vec<Slot> = (0..d).map(|e| Slot::new('a', e)).collect();
    slots.extend((0..d).map(|e| Slot::new('b', e)));
    let mut map = BTreeMap::new();
    map.insert(vec![0usize; 2 * d], Complex64::new(1.0, 0.0));
    for (offset, coeffs) in [(0usize, &u), (0, &v), (d, &u), (d, &v)] {
        map = apply_mode_creation(&map, offset, coeffs);
    }
    let (state, _) = OccupationState::from_unnormalized(slots, map, DEFAULT_TRUNCATION)?;
    let split = beamsplitter(&state, 'a', 'b', FRAC_1_SQRT_2)?;
    let p_4a = match postselect(&split, 'a', 4, None) {
        Ok(sel) => sel.probability,
        Err(Error::ZeroProbability(_)) => 0.0,
        Err(e) => return Err(e),
    };
    Ok(FourPhotonResult { gamma, n2, n4, p_4a, p_4a_closed })
}

/// Σ_e coeffs[e] · a†(offset+e) applied to a raw amplitude map.
fn apply_mode_creation(
    map: &BTreeMap<Vec<usize>, Complex64>,
    offset: usize,
    coeffs: &[Complex64],
) -> BTreeMap<Vec<usize>, Complex64> {
    let mut out = BTreeMap::new();
    for (e, &c) in coeffs.iter().enumerate() {
        if c.norm() <= tolerances::COEFFICIENT_PRUNE {
            continue;
        }
        for (occ, a) in apply_creation(map, offset + e, c) {
            *out.entry(occ).or_insert(Complex64::new(0.0, 0.0)) += a;
        }
    }
    out
}

/// A pair of normalized pulses on `grid` whose overlap |⟨φ1,φ2⟩|² equals
/// `gamma` to machine precision: φ2 = √γ·φ1 + √(1−γ)·φ1⊥. At γ = 1 the two
/// are identical samples; at γ = 0 they are exactly orthogonal. Useful for
/// sweeping interference curves against an exactly known overlap.
pub fn exact_overlap_pair(
    grid: FrequencyGrid,
    gamma: f64,
) -> Result<(SpectralFunction, SpectralFunction)> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Config(format!("overlap gamma must lie in [0, 1], got {gamma}")));
    }
    let span = grid.omega_max() - grid.omega_min();
    let center = grid.omega_min() + 0.5 * span;
    let sigma = span / 12.0;
    let seed0 = gaussian_pulse(grid, center, sigma, 0.0)?;
    let seed1 = gaussian_pulse(grid, center, sigma, 2.5 / sigma)?;
    let basis = gram_schmidt(&[seed0, seed1], tolerances::GRAM_SCHMIDT_DROP)?;
    if basis.len() < 2 {
        return Err(Error::Config("grid too coarse to host two independent pulses".into()));
    }
    let phi1 = basis.function(0).clone();
    if gamma == 1.0 {
        return Ok((phi1.clone(), phi1));
    }
    if gamma == 0.0 {
        return Ok((phi1, basis.function(1).clone()));
    }
    let phi2 = SpectralFunction::zero(grid)
        .add_scaled(Complex64::new(gamma.sqrt(), 0.0), basis.function(0))?
        .add_scaled(Complex64::new((1.0 - gamma).sqrt(), 0.0), basis.function(1))?;
    Ok((phi1, phi2))
}

// ---------------------------------------------------------------------------
// Pulsed pair sources
// ---------------------------------------------------------------------------

/// A pulsed two-photon downconversion-style source: a complex pair
/// coupling, the normalized pair amplitude ψ(ω1, ω2), whether both photons
/// of a pair share one spatial mode (degenerate) or occupy two, and the
/// pair-number cutoff of the expansion.
#[derive(Debug, Clone)]
pub struct PDCSource {
    coupling: Complex64,
    sdf: JointSDF,
    degenerate: bool,
    n_max: usize,
}

impl PDCSource {
    /// Validates and wraps an explicit pair amplitude. `sdf` must be a
    /// normalized two-photon amplitude; couplings above
    /// [`STRONG_COUPLING`] log a warning.
    pub fn new(coupling: Complex64, sdf: JointSDF, degenerate: bool, n_max: usize) -> Result<Self> {
        if sdf.photon_count() != 2 {
            return Err(Error::Usage(format!(
                "a pair source needs a two-photon amplitude, got {} photons",
                sdf.photon_count()
            )));
        }
        if !sdf.is_normalized(tolerances::NORMALIZATION_CHECK) {
            return Err(Error::Usage("the pair amplitude must be normalized".into()));
        }
        if !coupling.is_finite() {
            return Err(Error::Config(format!("pair coupling must be finite, got {coupling}")));
        }
        let source = Self { coupling, sdf, degenerate, n_max };
        if source.strong_coupling() {
            log::warn!(
                "pair coupling |λ| = {:.3} exceeds {STRONG_COUPLING}; the truncated \
                 pair-number expansion degrades",
                source.coupling.norm()
            );
        }
        Ok(source)
    }

    /// A correlated 2D Gaussian pair amplitude
    /// ψ(ω1, ω2) ∝ exp(−[c·(x+y)² + (1−c)·(x²+y²)] / (4σ²)),
    /// x = ω1 − ω0, y = ω2 − ω0. At c = 0 this is an exact product of two
    /// Gaussian pulses (a spectrally uncorrelated pair); c → 1 concentrates
    /// it on the anti-diagonal ω1 + ω2 = 2ω0 (frequency anti-correlation,
    /// the energy-conservation limit). Requires c ∈ [0, 1).
    pub fn gaussian(
        grid: FrequencyGrid,
        center: f64,
        width: f64,
        correlation: f64,
        coupling: Complex64,
        degenerate: bool,
        n_max: usize,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&correlation) {
            return Err(Error::Config(format!(
                "correlation must lie in [0, 1), got {correlation}"
            )));
        }
        if width <= 0.0 || !width.is_finite() {
            return Err(Error::Config(format!("width must be positive, got {width}")));
        }
        let points = grid.points();
        let mut tensor = ArrayD::zeros(IxDyn(&[points, points]));
        for i in 0..points {
            for j in 0..points {
                let x = grid.node(i) - center;
                let y = grid.node(j) - center;
                let q = correlation * (x + y) * (x + y) + (1.0 - correlation) * (x * x + y * y);
                tensor[IxDyn(&[i, j])] = Complex64::new((-q / (4.0 * width * width)).exp(), 0.0);
            }
        }
        let sdf = JointSDF::from_dense(grid, vec![1, 1], tensor)?.normalized()?;
        Self::new(coupling, sdf, degenerate, n_max)
    }

    pub fn coupling(&self) -> Complex64 {
        self.coupling
    }

    pub fn sdf(&self) -> &JointSDF {
        &self.sdf
    }

    pub fn degenerate(&self) -> bool {
        self.degenerate
    }

    /// Pair-number cutoff of the expansion.
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Whether the coupling magnitude exceeds [`STRONG_COUPLING`].
    pub fn strong_coupling(&self) -> bool {
        self.coupling.norm() > STRONG_COUPLING
    }

    /// The same source with its pair amplitude replaced by the closest
    /// product û⊗û (û the dominant single-photon factor of ψ): the
    /// spectrally uncorrelated baseline against which correlation effects
    /// of this source are measured.
    pub fn separable_counterpart(&self) -> Result<Self> {
        let dense = self.sdf.to_dense()?;
        let grid = self.sdf.grid();
        let fit = fit_product_factor(&dense.view(), grid.step())?;
        let inv_sqrt_step = 1.0 / grid.step().sqrt();
        let samples: Vec<Complex64> = fit.axis_vector.iter().map(|v| v * inv_sqrt_step).collect();
        let factor =
            SpectralFunction::from_samples(grid, samples)?.normalized()?.with_canonical_phase();
        let sdf = JointSDF::product(vec![factor.clone(), factor], self.sdf.partition().to_vec())?;
        Self::new(self.coupling, sdf, self.degenerate, self.n_max)
    }
}

/// The truncated source state Σ_{k=0}^{n_max} (λ^k / k!)·(pair operator)^k
/// |0⟩, normalized, with the pair operator Σ_{ij} Λ[i,j]·a†(ξ_i)·b†(ξ_j)
/// (degenerate sources create both photons in spatial mode 'a';
/// non-degenerate sources use 'a' and 'b').
///
/// Λ is the coefficient matrix of ψ over `basis`; an unrepresented part
/// logs a warning through that computation. When the last retained pair
/// sector still carries more than [`tolerances::TRUNCATION_WEIGHT`] of the
/// state weight a warning is logged — the cutoff is then visibly biting.
pub fn pdc_state(source: &PDCSource, basis: &EigenBasis) -> Result<OccupationState> {
    let (matrix, _residual) = coefficient_matrix(source.sdf(), basis)?;
    let d = basis.len();
    let truncation = DEFAULT_TRUNCATION.max(2 * source.n_max());
    let mut slots: Vec<Slot> = (0..d).map(|e| Slot::new('a', e)).collect();
    if !source.degenerate() {
        slots.extend((0..d).map(|e| Slot::new('b', e)));
    }
    let width = slots.len();
    let partner_offset = if source.degenerate() { 0 } else { d };

    let mut sector: BTreeMap<Vec<usize>, Complex64> = BTreeMap::new();
    sector.insert(vec![0; width], Complex64::new(1.0, 0.0));
    let mut master = sector.clone();
    let mut sector_weights = vec![1.0f64];
    let mut prefactor = Complex64::new(1.0, 0.0);
    for k in 1..=source.n_max() {
        sector = apply_pair_operator(&sector, &matrix, partner_offset);
        prefactor *= source.coupling() / k as f64;
        let weight: f64 = sector.values().map(|a| (a * prefactor).norm_sqr()).sum();
        sector_weights.push(weight);
        for (occ, a) in &sector {
            *master.entry(occ.clone()).or_insert(Complex64::new(0.0, 0.0)) += a * prefactor;
        }
    }
    let total: f64 = sector_weights.iter().sum();
    let tail = sector_weights.last().copied().unwrap_or(0.0) / total;
    if source.n_max() > 0 && tail > tolerances::TRUNCATION_WEIGHT {
        log::warn!(
            "pair-number cutoff {} leaves {tail:.3e} of the state weight in the last \
             retained sector",
            source.n_max()
        );
    }
    let (state, _) = OccupationState::from_unnormalized(slots, master, truncation)?;
    Ok(state)
}

/// Σ_{ij} Λ[i,j]·a†(slot i)·a†(slot partner_offset + j) applied to a raw
/// amplitude map.
fn apply_pair_operator(
    map: &BTreeMap<Vec<usize>, Complex64>,
    matrix: &Array2<Complex64>,
    partner_offset: usize,
) -> BTreeMap<Vec<usize>, Complex64> {
    let mut out = BTreeMap::new();
    for ((i, j), &c) in matrix.indexed_iter() {
        if c.norm() <= tolerances::COEFFICIENT_PRUNE {
            continue;
        }
        let first = apply_creation(map, i, c);
        for (occ, a) in apply_creation(&first, partner_offset + j, Complex64::new(1.0, 0.0)) {
            *out.entry(occ).or_insert(Complex64::new(0.0, 0.0)) += a;
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Heralded preparations
// ---------------------------------------------------------------------------

/// Outcome of a heralded state preparation.
#[derive(Debug, Clone)]
pub struct ConditionedPreparationResult {
    /// The heralded state as weighted pure branches (a single branch means
    /// the preparation is pure); weights sum to 1.
    pub branches: Vec<(f64, OccupationState)>,
    /// The density operator a homodyne probe sees, when the preparation
    /// pipeline observes one (kitten preparation); `None` otherwise.
    pub observed: Option<DensityOperator>,
    /// Success probability of the heralding event.
    pub probability: f64,
    /// Tr(ρ²) of the observed density when present, otherwise of the
    /// heralded state itself (1 for a single pure branch).
    pub purity: f64,
    /// Whether every photon-number sector of the heralded state is an
    /// n-fold repetition of a single spectral mode.
    pub fock_verdict: bool,
    /// Excess vacuum weight the probe sees relative to the same pipeline
    /// run on the source's spectrally uncorrelated counterpart; 0 when no
    /// probe is involved.
    pub vacuum_mixing_fraction: f64,
    /// Fraction of the heralding weight dropped by reading the detector as
    /// "exactly m photons, all in its own mode" (weak-gain approximation);
    /// 0 when nothing is dropped.
    pub neglected_fraction: f64,
    /// The single spectral mode carrying the prepared photons, when the
    /// preparation extracts one.
    pub extracted_mode: Option<SpectralFunction>,
}

/// Odd-photon-number ("kitten") preparation from a degenerate pair source.
///
/// A tap of reflectivity η picks off part of the source output, a detector
/// heralds exactly one photon in eigenmode ξ0 = basis[0] of the reflected
/// arm (its other eigenmodes traced out), and the transmitted state is
/// observed by a homodyne probe matched to the heralded marginal mode
/// Σ_j Λ[0,j]·ξ_j.
///
/// The vacuum-mixing fraction is differential: the same tap, coupling and
/// cutoff are run on [`PDCSource::separable_counterpart`] heralded in its
/// own single mode — the uncorrelated, perfectly mode-matched ideal, whose
/// probe sees no vacuum at all — and the excess probe vacuum weight of
/// this source over that baseline is reported. Spectral correlation (or a
/// detector away from the source's own mode structure) shows up as a
/// strictly positive fraction even though the probe is matched to the
/// heralded marginal.
pub fn kitten_preparation(
    source: &PDCSource,
    reflectivity: f64,
    detector_mode: &SpectralFunction,
    basis: &EigenBasis,
) -> Result<ConditionedPreparationResult> {
    if !source.degenerate() {
        return Err(Error::Usage(
            "kitten preparation needs a degenerate source (both photons of a pair in \
             one spatial mode)"
                .into(),
        ));
    }
    if !(0.0..=1.0).contains(&reflectivity) {
        return Err(Error::Usage(format!("reflectivity must lie in [0, 1], got {reflectivity}")));
    }
    check_detector_alignment(detector_mode, basis)?;
    let main = kitten_pipeline(source, reflectivity, basis)?;
    // The baseline heralds the uncorrelated counterpart in its own single
    // mode: the basis is re-led by that mode, so the baseline detector is
    // exactly the mode every baseline photon occupies.
    let counterpart = source.separable_counterpart()?;
    let counterpart_mode =
        counterpart.sdf().factors().expect("the counterpart amplitude is a product")[0].clone();
    let baseline_basis = basis_with_leading(&counterpart_mode, basis.functions())?;
    let baseline = kitten_pipeline(&counterpart, reflectivity, &baseline_basis)?;
    let vacuum_mixing_fraction =
        main.observed.element(0, 0).re - baseline.observed.element(0, 0).re;
    Ok(ConditionedPreparationResult {
        branches: main.branches,
        observed: Some(main.observed),
        probability: main.probability,
        purity: main.purity,
        fock_verdict: main.fock_verdict,
        vacuum_mixing_fraction,
        neglected_fraction: 0.0,
        extracted_mode: None,
    })
}

struct HeraldRun {
    probability: f64,
    branches: Vec<(f64, OccupationState)>,
    observed: DensityOperator,
    purity: f64,
    fock_verdict: bool,
}

fn kitten_pipeline(source: &PDCSource, reflectivity: f64, basis: &EigenBasis) -> Result<HeraldRun> {
    let state = pdc_state(source, basis)?;
    let eigenmodes: Vec<usize> = (0..basis.len()).collect();
    let tapped = add_vacuum_mode(&state, 'c', &eigenmodes)?;
    let split = beamsplitter(&tapped, 'a', 'c', (1.0 - reflectivity).sqrt())?;
    let herald = postselect(&split, 'c', 1, Some(0))?;

    // Probe matched to the heralded marginal Σ_j Λ[0,j]·ξ_j.
    let (matrix, _) = coefficient_matrix(source.sdf(), basis)?;
    let mut probe = SpectralFunction::zero(basis.grid());
    for j in 0..basis.len() {
        probe = probe.add_scaled(matrix[(0, j)], basis.function(j))?;
    }
    let probe = probe.normalized()?.with_canonical_phase();
    let aligned = basis_with_leading(&probe, basis.functions())?;
    let mut rotated = Vec::with_capacity(herald.branches.len());
    for (w, branch) in &herald.branches {
        rotated.push((*w, change_basis(branch, 'a', basis, &aligned)?));
    }
    let observed = observed_density(&rotated, 'a', 0)?;
    let purity = observed.purity();
    let fock_verdict = herald.is_pure() && sectors_are_fock(&herald.branches[0].1)?;
    Ok(HeraldRun {
        probability: herald.probability,
        branches: herald.branches,
        observed,
        purity,
        fock_verdict,
    })
}

/// Photon-number preparation from a non-degenerate pair source.
///
/// A spectrally resolved detector on spatial mode 'a' heralds exactly m
/// photons in eigenmode ξ0 = basis[0]. Detection terms carrying extra 'a'
/// photons outside ξ0 are dropped (the weak-gain reading of an m-photon
/// detector); their share of the detection weight is reported as
/// `neglected_fraction` and logged above [`HERALD_NEGLECT_WARN`]. The
/// surviving mode-'b' state is exactly m photons in the single mode
/// Σ_j Λ[0,j]·ξ_j, which is extracted and returned.
pub fn conditional_fock(
    source: &PDCSource,
    m: usize,
    detector_mode: &SpectralFunction,
    basis: &EigenBasis,
) -> Result<ConditionedPreparationResult> {
    if source.degenerate() {
        return Err(Error::Usage(
            "photon-number preparation needs a non-degenerate source (the two photons \
             of a pair in separate spatial modes)"
                .into(),
        ));
    }
    if m > source.n_max() {
        return Err(Error::Usage(format!(
            "cannot herald {m} photons from a source truncated at {} pairs",
            source.n_max()
        )));
    }
    check_detector_alignment(detector_mode, basis)?;
    let state = pdc_state(source, basis)?;
    let d = basis.len();
    let a0 = state
        .slot_index('a', 0)
        .ok_or_else(|| Error::Usage("source state lacks the detector slot".into()))?;
    debug_assert_eq!(a0, 0, "pair states lay out mode 'a' first");

    let mut full = 0.0f64;
    let mut strict_map: BTreeMap<Vec<usize>, Complex64> = BTreeMap::new();
    let mut strict = 0.0f64;
    for (occ, &a) in state.amplitudes() {
        if occ[0] != m {
            continue;
        }
        full += a.norm_sqr();
        if occ[1..d].iter().any(|&x| x > 0) {
            continue;
        }
        strict += a.norm_sqr();
        strict_map.insert(occ[d..].to_vec(), a);
    }
    if full <= tolerances::PROBABILITY_FLOOR {
        return Err(Error::ZeroProbability(format!(
            "no amplitude puts {m} photons at the detector"
        )));
    }
    let neglected_fraction = ((full - strict) / full).max(0.0);
    if neglected_fraction > HERALD_NEGLECT_WARN {
        log::warn!(
            "heralding drops {neglected_fraction:.3e} of the detection weight (extra \
             photons beside the detector mode); the source is outside the weak-gain \
             regime"
        );
    }
    let slots: Vec<Slot> = (0..d).map(|e| Slot::new('b', e)).collect();
    let (conditional, _) =
        OccupationState::from_unnormalized(slots, strict_map, state.truncation())?;

    let (fock_verdict, extracted_mode) = if m == 0 {
        (true, None)
    } else {
        let entries: Vec<(Vec<usize>, Complex64)> =
            conditional.amplitudes().iter().map(|(occ, &a)| (occ.clone(), a)).collect();
        let fit = sector_product_fit(&entries, d, m)?;
        let mut mode = SpectralFunction::zero(basis.grid());
        for (k, &c) in fit.axis_vector.iter().enumerate() {
            mode = mode.add_scaled(c, basis.function(k))?;
        }
        let mode = mode.normalized()?.with_canonical_phase();
        (fit.residual <= tolerances::FOCK_RESIDUAL, Some(mode))
    };
    Ok(ConditionedPreparationResult {
        branches: vec![(1.0, conditional)],
        observed: None,
        probability: full,
        purity: 1.0,
        fock_verdict,
        vacuum_mixing_fraction: 0.0,
        neglected_fraction,
        extracted_mode,
    })
}

/// The detector eigenmode must be the leading basis function.
fn check_detector_alignment(detector: &SpectralFunction, basis: &EigenBasis) -> Result<()> {
    require_normalized(detector, "detector mode")?;
    if basis.is_empty() {
        return Err(Error::EmptyBasis);
    }
    let overlap = inner_product(basis.function(0), detector)?.norm();
    if (overlap - 1.0).abs() > tolerances::PERFECT_OVERLAP {
        return Err(Error::Usage(format!(
            "the detector mode must be the leading basis function (|overlap| = \
             {overlap:.6})"
        )));
    }
    Ok(())
}

/// True when every photon-number sector of a pure single-spatial-mode
/// occupation state is an n-fold repetition of one eigenmode vector
/// (vacuum and single-photon sectors trivially are).
fn sectors_are_fock(state: &OccupationState) -> Result<bool> {
    let d = state.slots().len();
    let mut sectors: BTreeMap<usize, Vec<(Vec<usize>, Complex64)>> = BTreeMap::new();
    for (occ, &a) in state.amplitudes() {
        let n: usize = occ.iter().sum();
        sectors.entry(n).or_default().push((occ.clone(), a));
    }
    for (n, entries) in sectors {
        if n < 2 {
            continue;
        }
        let fit = sector_product_fit(&entries, d, n)?;
        if fit.residual > tolerances::FOCK_RESIDUAL {
            return Ok(false);
        }
    }
    Ok(true)
}

/// ℓ2-normalizes one photon-number sector, expands it into the symmetric
/// index tensor B[t1‥tn] = amp(occ(t))·√(Π mᵢ!/n!), and fits a single
/// repeated factor. The expansion is unitary: Σ|B|² = Σ|amp|², so the fit
/// residual is the distance of the normalized sector from the closest
/// n-fold product.
fn sector_product_fit(
    entries: &[(Vec<usize>, Complex64)],
    d: usize,
    n: usize,
) -> Result<ProductFactorFit> {
    let norm: f64 = entries.iter().map(|(_, a)| a.norm_sqr()).sum::<f64>().sqrt();
    if norm * norm <= tolerances::PROBABILITY_FLOOR {
        return Err(Error::Unnormalizable);
    }
    let mut tensor = ArrayD::zeros(IxDyn(&vec![d; n]));
    for (occ, a) in entries {
        let occ_fact: f64 = occ.iter().map(|&m| factorial(m)).product();
        let value = a / norm * (occ_fact / factorial(n)).sqrt();
        let key: Vec<usize> =
            occ.iter().enumerate().flat_map(|(slot, &m)| std::iter::repeat_n(slot, m)).collect();
        for t in distinct_permutations(&key) {
            tensor[IxDyn(&t)] = value;
        }
    }
    fit_product_factor(&tensor.view(), 1.0)
}
