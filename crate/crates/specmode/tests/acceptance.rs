//! End-to-end acceptance gate: nine numbered criteria covering four-photon
//! interference, permutation-sum normalization (with an independent
//! bosonic-expansion oracle), Hong–Ou–Mandel limits, spectral filtering,
//! homodyne observation, conditioned photon-number preparation, kitten
//! preparation and the cross-module property families.
//!
//! Each test prints exactly one `criterion N (...): PASS` line or panics
//! with a `FAIL` line listing every offending value. Tolerances are pinned
//! inline next to the checks they guard.

use std::collections::BTreeMap;
use std::time::Instant;

use ndarray::{ArrayD, IxDyn};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use specmode::eigenmode::{
    decompose, gram_schmidt, hermite_gauss, reconstruct, EigenBasis, ModeDecomposition,
};
use specmode::experiments::{
    conditional_fock, exact_overlap_pair, four_photon_interference, hom_entangled, hom_separable,
    kitten_preparation, PDCSource,
};
use specmode::optics::{
    beamsplitter, homodyne_observe, observed_density, spectral_filter, OccupationState, Slot,
    DEFAULT_TRUNCATION,
};
use specmode::sdf::JointSDF;
use specmode::states::{is_fock_state, normalization_factor, symmetrize};
use specmode::tolerances;
use specmode::{gaussian_pulse, overlap_gamma, FrequencyGrid, SpectralFunction};

fn verdict(number: usize, label: &str, failures: &[String]) {
    if failures.is_empty() {
        println!("criterion {number} ({label}): PASS");
    } else {
        panic!("criterion {number} ({label}): FAIL\n  {}", failures.join("\n  "));
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// The standard 64-node working grid.
fn grid64() -> FrequencyGrid {
    FrequencyGrid::new(-8.0, 8.0, 64).expect("valid grid")
}

/// A random normalized spectral function with uniform complex samples.
fn random_function(rng: &mut ChaCha8Rng, grid: FrequencyGrid) -> SpectralFunction {
    loop {
        let samples: Vec<Complex64> = (0..grid.points())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let f = SpectralFunction::from_samples(grid, samples).expect("matching length");
        if f.norm() > 0.3 {
            return f.normalized().expect("nonzero norm");
        }
    }
}

/// A random normalized Gaussian pulse on the working grid.
fn random_pulse(rng: &mut ChaCha8Rng, grid: FrequencyGrid) -> SpectralFunction {
    gaussian_pulse(
        grid,
        rng.gen_range(-1.0..1.0),
        rng.gen_range(0.5..1.5),
        rng.gen_range(-1.0..1.0),
    )
    .expect("valid pulse")
}

/// Orthonormal Hermite–Gauss basis of `size` members centered at `center`.
fn hg_basis(grid: FrequencyGrid, center: f64, width: f64, size: usize) -> EigenBasis {
    let seeds: Vec<SpectralFunction> =
        (0..size).map(|k| hermite_gauss(grid, center, width, k).expect("valid member")).collect();
    gram_schmidt(&seeds, tolerances::GRAM_SCHMIDT_DROP).expect("independent members")
}

/// Width of the leading eigenmode of the correlated Gaussian pair amplitude
/// with unit marginal width: carving exp(−[(x²+y²) + 2c·xy]/4) into
/// single-photon modes gives Hermite–Gauss functions of this width.
fn eigenmode_width(c: f64) -> f64 {
    let rho = (1.0 - (1.0 - c * c).sqrt()) / c;
    ((1.0 + rho * rho) / (1.0 - rho * rho)).sqrt()
}

/// Independent normalization oracle: expands the discrete joint amplitude
/// over photon creation operators on orthonormal grid-bin modes (one set
/// per spatial mode), collects occupation amplitudes, and returns the
/// squared bosonic norm. No permutation sums, permanents or overlap
/// matrices are involved.
fn bosonic_norm_oracle(sdf: &JointSDF) -> f64 {
    let dense = sdf.to_dense().expect("oracle tensors stay tiny");
    let n = sdf.photon_count();
    let points = sdf.grid().points();
    let scale = sdf.grid().step().powf(n as f64 / 2.0);
    let block_of: Vec<usize> =
        sdf.partition().iter().enumerate().flat_map(|(b, &k)| std::iter::repeat_n(b, k)).collect();
    let slots = sdf.partition().len() * points;
    let mut grouped: BTreeMap<Vec<usize>, Complex64> = BTreeMap::new();
    for (idx, &value) in dense.indexed_iter() {
        let mut occupancy = vec![0usize; slots];
        for ax in 0..n {
            occupancy[block_of[ax] * points + idx[ax]] += 1;
        }
        *grouped.entry(occupancy).or_insert(Complex64::new(0.0, 0.0)) += value * scale;
    }
    grouped
        .iter()
        .map(|(occupancy, amp)| {
            let weight: f64 = occupancy.iter().map(|&m| factorial(m)).product();
            amp.norm_sqr() * weight
        })
        .sum()
}

#[test]
fn criterion_1_four_photon_interference_against_the_closed_form() {
    const ENDPOINT_TOL: f64 = 1e-6;
    const SWEEP_TOL: f64 = 1e-6;
    let started = Instant::now();
    let grid = grid64();
    let mut failures = Vec::new();

    let mut cross_check: f64 = 0.0;
    for k in 0..=10 {
        let gamma = k as f64 / 10.0;
        let (phi1, phi2) = exact_overlap_pair(grid, gamma).expect("valid overlap");
        let result = four_photon_interference(&phi1, &phi2).expect("simulation runs");
        let benchmark = 0.25 * (gamma + 1.0 / (1.0 + gamma));
        if (result.p_4a - benchmark).abs() > SWEEP_TOL {
            failures.push(format!(
                "γ = {gamma:.1}: simulated P_4A = {:.9} vs benchmark ¼(γ + 1/(1+γ)) = \
                 {benchmark:.9} (diff {:+.3e})",
                result.p_4a,
                result.p_4a - benchmark
            ));
        }
        let norms_value = result.n4 / (16.0 * result.n2 * result.n2);
        cross_check = cross_check.max((result.p_4a - norms_value).abs());
    }

    let (phi1, phi2) = exact_overlap_pair(grid, 1.0).expect("valid overlap");
    let at_one = four_photon_interference(&phi1, &phi2).expect("simulation runs").p_4a;
    if (at_one - 0.375).abs() > ENDPOINT_TOL {
        failures.push(format!("γ = 1: P_4A = {at_one:.9}, expected 0.375"));
    }
    let (phi1, phi2) = exact_overlap_pair(grid, 0.0).expect("valid overlap");
    let at_zero = four_photon_interference(&phi1, &phi2).expect("simulation runs").p_4a;
    if (at_zero - 0.25).abs() > ENDPOINT_TOL {
        failures.push(format!("γ = 0: P_4A = {at_zero:.9}, expected 0.25"));
    }

    let elapsed = started.elapsed();
    if elapsed.as_secs_f64() >= 10.0 {
        failures.push(format!("runtime {elapsed:?} exceeds the 10 s budget"));
    }
    if !failures.is_empty() {
        failures.push(format!(
            "note: the simulation and the permutation-sum prediction 𝒩₄/(16·𝒩₂²) agree \
             to {cross_check:.3e} at every sweep point; the benchmark closed form matches \
             them only at γ = 0 and γ = 1"
        ));
    }
    verdict(1, "four-photon interference", &failures);
}

#[test]
fn criterion_2_four_photon_normalization_closed_form() {
    const TOL: f64 = 1e-6;
    let grid = grid64();
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let mut failures = Vec::new();
    let mut cross_check: f64 = 0.0;

    for pair in 0..10 {
        let phi1 = random_pulse(&mut rng, grid);
        let phi2 = random_pulse(&mut rng, grid);
        let gamma = overlap_gamma(&phi1, &phi2).expect("normalized inputs");
        let bunch = JointSDF::product(vec![phi1.clone(), phi1, phi2.clone(), phi2], vec![4])
            .expect("four-photon product");
        let n4 = normalization_factor(&bunch).expect("within budget").value;
        let benchmark = 4.0 * (1.0 + gamma + gamma * gamma);
        if (n4 - benchmark).abs() > TOL {
            failures.push(format!(
                "pair {pair}: γ = {gamma:.6}, 𝒩₄ = {n4:.9} vs benchmark 4(1+γ+γ²) = \
                 {benchmark:.9} (diff {:+.3e})",
                n4 - benchmark
            ));
        }
        cross_check = cross_check.max((n4 - 4.0 * (1.0 + 4.0 * gamma + gamma * gamma)).abs());
    }

    if !failures.is_empty() {
        failures.push(format!(
            "note: every measured 𝒩₄ satisfies 4(1 + 4γ + γ²) within {cross_check:.3e}; \
             the two forms coincide only at γ = 0 and γ = 1"
        ));
    }
    verdict(2, "four-photon permutation-sum normalization", &failures);
}

#[test]
fn criterion_3_hom_dip_and_two_photon_limits() {
    const SWEEP_TOL: f64 = 1e-4;
    const SYMMETRIC_TOL: f64 = 1e-9;
    const DISTINGUISHABLE_TOL: f64 = 1e-12;
    let grid = grid64();
    let mut failures = Vec::new();

    // Delayed Gaussian pulses of unit width: P_c(τ) = ½(1 − e^{−τ²}).
    let reference = gaussian_pulse(grid, 0.0, 1.0, 0.0).expect("valid pulse");
    for k in 0..=25 {
        let tau = 0.1 * k as f64;
        let delayed = gaussian_pulse(grid, 0.0, 1.0, tau).expect("valid pulse");
        let result = hom_separable(&reference, &delayed).expect("simulation runs");
        let expected = 0.5 * (1.0 - (-tau * tau).exp());
        if (result.p_c_simulated - expected).abs() > SWEEP_TOL {
            failures.push(format!(
                "τ = {tau:.1}: P_c = {:.9}, expected {expected:.9}",
                result.p_c_simulated
            ));
        }
    }

    // An exchange-symmetric entangled pair never coincides.
    let source = PDCSource::gaussian(grid, 0.0, 1.0, 0.6, Complex64::new(0.1, 0.0), false, 1)
        .expect("valid source");
    let basis = hg_basis(grid, 0.0, eigenmode_width(0.6), 8);
    let symmetric = hom_entangled(source.sdf(), &basis).expect("simulation runs");
    if symmetric.p_c_simulated >= SYMMETRIC_TOL {
        failures.push(format!(
            "exchange-symmetric pair: P_c = {:.3e}, expected < {SYMMETRIC_TOL:.0e}",
            symmetric.p_c_simulated
        ));
    }

    // One photon per port in orthogonal modes coincides half the time.
    let xi0 = hermite_gauss(grid, 0.0, 1.0, 0).expect("valid member");
    let xi1 = hermite_gauss(grid, 0.0, 1.0, 1).expect("valid member");
    let distinguishable =
        JointSDF::product(vec![xi0.clone(), xi1.clone()], vec![1, 1]).expect("two-photon product");
    let pair_basis = gram_schmidt(&[xi0, xi1], tolerances::GRAM_SCHMIDT_DROP).expect("basis");
    let split = hom_entangled(&distinguishable, &pair_basis).expect("simulation runs");
    if (split.p_c_simulated - 0.5).abs() > DISTINGUISHABLE_TOL {
        failures.push(format!(
            "orthogonal-mode pair: P_c = {:.15}, expected 0.5 exactly",
            split.p_c_simulated
        ));
    }

    verdict(3, "Hong–Ou–Mandel interference", &failures);
}

#[test]
fn criterion_4_normalization_bounds_and_bosonic_oracle() {
    const BOUND_TOL: f64 = 1e-9;
    const SYMMETRIZED_TOL: f64 = 1e-6;
    const ORACLE_TOL: f64 = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(72);
    let mut failures = Vec::new();

    // Bounds 1 ≤ 𝒩 ≤ n! over random product states, and saturation after
    // symmetrizing.
    let mut worst_low: f64 = f64::INFINITY;
    let mut worst_high: f64 = -f64::INFINITY;
    let mut worst_saturation: f64 = 0.0;
    for sample in 0..1000 {
        let n = rng.gen_range(1..=3usize);
        let points = rng.gen_range(8..=16usize);
        let grid = FrequencyGrid::new(-4.0, 4.0, points).expect("valid grid");
        let factors: Vec<SpectralFunction> =
            (0..n).map(|_| random_function(&mut rng, grid)).collect();
        let sdf = JointSDF::product(factors, vec![n]).expect("product state");
        let value = normalization_factor(&sdf).expect("within budget").value;
        worst_low = worst_low.min(value);
        worst_high = worst_high.max(value - factorial(n));
        if !(1.0 - BOUND_TOL..=factorial(n) + BOUND_TOL).contains(&value) {
            failures
                .push(format!("sample {sample}: 𝒩 = {value:.12} outside [1, {}!] for n = {n}", n));
        }
        let symmetric = symmetrize(&sdf).expect("nonzero symmetric part");
        let saturated = normalization_factor(&symmetric).expect("within budget").value;
        worst_saturation = worst_saturation.max((saturated - factorial(n)).abs());
        if (saturated - factorial(n)).abs() > SYMMETRIZED_TOL {
            failures.push(format!(
                "sample {sample}: symmetrized 𝒩 = {saturated:.12}, expected {n}! = {}",
                factorial(n)
            ));
        }
    }

    // Independent bosonic-expansion oracle on tiny grids, covering both the
    // factored (product) and dense permutation-sum code paths, including a
    // two-spatial-mode partition.
    let mut worst_oracle: f64 = 0.0;
    for sample in 0..300 {
        let n = rng.gen_range(1..=3usize);
        let points = rng.gen_range(2..=4usize);
        let grid = FrequencyGrid::new(-1.0, 1.0, points).expect("valid grid");
        let style = sample % 3;
        let sdf = match style {
            0 => {
                let factors: Vec<SpectralFunction> =
                    (0..n).map(|_| random_function(&mut rng, grid)).collect();
                JointSDF::product(factors, vec![n]).expect("product state")
            }
            1 if n > 1 => {
                let factors: Vec<SpectralFunction> =
                    (0..n).map(|_| random_function(&mut rng, grid)).collect();
                JointSDF::product(factors, vec![1, n - 1]).expect("split product")
            }
            _ => {
                let shape = vec![points; n];
                let tensor = ArrayD::from_shape_fn(IxDyn(&shape), |_| {
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                });
                JointSDF::from_dense(grid, vec![n], tensor)
                    .expect("dense state")
                    .normalized()
                    .expect("nonzero tensor")
            }
        };
        let value = normalization_factor(&sdf).expect("within budget").value;
        let oracle = bosonic_norm_oracle(&sdf);
        worst_oracle = worst_oracle.max((value - oracle).abs());
        if (value - oracle).abs() > ORACLE_TOL {
            failures.push(format!(
                "sample {sample}: 𝒩 = {value:.15} vs bosonic-expansion oracle \
                 {oracle:.15} (partition {:?})",
                sdf.partition()
            ));
        }
    }

    if failures.is_empty() {
        println!(
            "  margins: min 𝒩 − 1 = {:+.3e}, max 𝒩 − n! = {:+.3e}, \
             symmetrized saturation {:.3e}, oracle gap {:.3e}",
            worst_low - 1.0,
            worst_high,
            worst_saturation,
            worst_oracle
        );
    }
    verdict(4, "normalization bounds and oracle", &failures);
}

#[test]
fn criterion_5_spectral_filter_diagonal_and_trace() {
    const TOL: f64 = 1e-9;
    let grid = grid64();
    let mut failures = Vec::new();

    // Three photons against a filter of squared overlap ½ land binomially.
    let (filter, carrier) = exact_overlap_pair(grid, 0.5).expect("valid overlap");
    let fock3 = JointSDF::product(vec![carrier.clone(); 3], vec![3]).expect("three photons");
    let rho = spectral_filter(&fock3, &filter).expect("filter runs");
    let expected = [0.125, 0.375, 0.375, 0.125];
    for (m, want) in expected.iter().enumerate() {
        let got = rho.element(m, m).re;
        if (got - want).abs() > TOL {
            failures.push(format!("n = 3, |λ₁|² = 0.5: ρ[{m},{m}] = {got:.12}, expected {want}"));
        }
    }

    // The distribution keeps unit trace for every tested photon number and
    // filter overlap.
    for n in 1..=4usize {
        for &gamma in &[0.2, 0.5, 0.8] {
            let (filter, carrier) = exact_overlap_pair(grid, gamma).expect("valid overlap");
            let fock = JointSDF::product(vec![carrier.clone(); n], vec![n]).expect("product");
            let rho = spectral_filter(&fock, &filter).expect("filter runs");
            if (rho.trace() - 1.0).abs() > TOL {
                failures.push(format!(
                    "n = {n}, |λ₁|² = {gamma}: trace = {:.12}, expected 1",
                    rho.trace()
                ));
            }
        }
    }

    verdict(5, "spectral filter statistics", &failures);
}

#[test]
fn criterion_6_homodyne_perfect_match_and_orthogonal_probe() {
    const TOL: f64 = 1e-9;
    let grid = grid64();
    let basis = hg_basis(grid, 0.0, 1.0, 4);
    let probe = basis.function(0).clone();
    let mut failures = Vec::new();

    // All photons in the probe mode: the observation is the pure input.
    let one = Complex64::new(1.0, 0.0);
    let components = [
        (Complex64::new(0.6, 0.0), ModeDecomposition::vacuum(basis.clone())),
        (
            Complex64::new(0.48, 0.0),
            ModeDecomposition::from_coefficients(
                basis.clone(),
                1,
                BTreeMap::from([(vec![0], one)]),
            )
            .expect("valid key"),
        ),
        (
            Complex64::new(0.64, 0.0),
            ModeDecomposition::from_coefficients(
                basis.clone(),
                2,
                BTreeMap::from([(vec![0, 0], one)]),
            )
            .expect("valid key"),
        ),
    ];
    let rho = homodyne_observe(&components, &probe).expect("observation runs");
    let input = [Complex64::new(0.6, 0.0), Complex64::new(0.48, 0.0), Complex64::new(0.64, 0.0)];
    let fidelity = rho.fidelity_pure(&input).expect("matching dimension");
    if (fidelity - 1.0).abs() > TOL {
        failures.push(format!("perfect match: fidelity = {fidelity:.12}, expected 1"));
    }
    if (rho.purity() - 1.0).abs() > TOL {
        failures.push(format!("perfect match: purity = {:.12}, expected 1", rho.purity()));
    }

    // Photons orthogonal to the probe leave only vacuum in view.
    let sideband =
        ModeDecomposition::from_coefficients(basis.clone(), 2, BTreeMap::from([(vec![1, 1], one)]))
            .expect("valid key");
    let rho = homodyne_observe(&[(one, sideband)], &probe).expect("observation runs");
    let mut vacuum = vec![Complex64::new(0.0, 0.0); rho.dimension()];
    vacuum[0] = one;
    let fidelity = rho.fidelity_pure(&vacuum).expect("matching dimension");
    if (fidelity - 1.0).abs() > TOL {
        failures.push(format!("orthogonal probe: vacuum fidelity = {fidelity:.12}, expected 1"));
    }

    verdict(6, "homodyne observation limits", &failures);
}

#[test]
fn criterion_7_conditioned_preparation_yields_photon_number_states() {
    const RESIDUAL_TOL: f64 = 1e-6;
    const MODE_TOL: f64 = 1e-6;
    let grid = grid64();
    let mut rng = ChaCha8Rng::seed_from_u64(73);
    let mut failures = Vec::new();

    for sample in 0..20 {
        let center = rng.gen_range(-1.0..1.0);
        let width = rng.gen_range(0.7..1.3);
        let correlation = rng.gen_range(0.3..0.85);
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
        let source = PDCSource::gaussian(
            grid,
            center,
            width,
            correlation,
            Complex64::from_polar(0.1, phase),
            false,
            2,
        )
        .expect("valid source");
        let basis = hg_basis(grid, center, width * eigenmode_width(correlation), 8);
        let detector = basis.function(0).clone();
        let result = conditional_fock(&source, 2, &detector, &basis).expect("preparation runs");

        // Rebuild the surviving joint amplitude and test it independently.
        let branch = &result.branches[0].1;
        let mut coefficients: BTreeMap<Vec<usize>, Complex64> = BTreeMap::new();
        for (occ, &amp) in branch.amplitudes() {
            let mut key = Vec::new();
            for (mode, &count) in occ.iter().enumerate() {
                key.extend(std::iter::repeat_n(mode, count));
            }
            let weight: f64 = occ.iter().map(|&m| factorial(m)).product();
            coefficients.insert(key, amp / weight.sqrt());
        }
        let dec = ModeDecomposition::from_coefficients(basis.clone(), 2, coefficients)
            .expect("valid keys");
        let sdf =
            reconstruct(&dec).expect("reconstruction runs").normalized().expect("nonzero state");
        let check = is_fock_state(&sdf, RESIDUAL_TOL).expect("single mode");
        if !check.is_fock || check.residual >= RESIDUAL_TOL {
            failures.push(format!(
                "sample {sample}: conditioned state residual {:.3e} (verdict {})",
                check.residual, check.is_fock
            ));
        }

        // The prepared mode must be the detector-mode marginal of the pair
        // amplitude, computed here straight from the dense tensor.
        let dense = source.sdf().to_dense().expect("pair tensor");
        let step = grid.step();
        let marginal_samples: Vec<Complex64> = (0..grid.points())
            .map(|j| {
                (0..grid.points())
                    .map(|i| detector.amplitudes()[i].conj() * dense[IxDyn(&[i, j])] * step)
                    .sum()
            })
            .collect();
        let marginal = SpectralFunction::from_samples(grid, marginal_samples)
            .expect("matching length")
            .normalized()
            .expect("nonzero marginal");
        let from_check = overlap_gamma(&check.factor, &marginal).expect("normalized");
        if 1.0 - from_check > MODE_TOL {
            failures.push(format!(
                "sample {sample}: extracted factor misses the marginal, 1 − γ = {:.3e}",
                1.0 - from_check
            ));
        }
        let extracted = result.extracted_mode.as_ref().expect("mode extracted");
        let from_result = overlap_gamma(extracted, &marginal).expect("normalized");
        if 1.0 - from_result > MODE_TOL {
            failures.push(format!(
                "sample {sample}: reported mode misses the marginal, 1 − γ = {:.3e}",
                1.0 - from_result
            ));
        }
        if !result.fock_verdict {
            failures.push(format!("sample {sample}: reported verdict is false"));
        }
    }

    verdict(7, "conditioned photon-number preparation", &failures);
}

#[test]
fn criterion_8_kitten_purity_and_vacuum_mixing() {
    const PURITY_TOL: f64 = 1e-6;
    const MIXING_FLOOR: f64 = 1e-3;
    let grid = grid64();
    let mut failures = Vec::new();

    // A spectrally uncorrelated source heralds a pure state.
    let separable = PDCSource::gaussian(grid, 0.0, 1.0, 0.0, Complex64::new(0.1, 0.0), true, 2)
        .expect("valid source");
    let basis = hg_basis(grid, 0.0, 1.0, 8);
    let result =
        kitten_preparation(&separable, 0.05, basis.function(0), &basis).expect("preparation runs");
    if (result.purity - 1.0).abs() > PURITY_TOL {
        failures.push(format!(
            "separable source: purity = {:.9}, expected 1 within {PURITY_TOL:.0e}",
            result.purity
        ));
    }

    // A frequency-anti-correlated source mixes strictly positive excess
    // vacuum into the probe. Only the direction of the effect is asserted;
    // its magnitude depends on tap, coupling and detector geometry.
    let correlated = PDCSource::gaussian(grid, 0.0, 1.0, 0.8, Complex64::new(0.1, 0.0), true, 2)
        .expect("valid source");
    let detector_basis = hg_basis(grid, 0.0, 0.8, 10);
    let result = kitten_preparation(&correlated, 0.1, detector_basis.function(0), &detector_basis)
        .expect("preparation runs");
    if result.vacuum_mixing_fraction <= MIXING_FLOOR {
        failures.push(format!(
            "anti-correlated source: vacuum mixing fraction = {:.6e}, expected > {MIXING_FLOOR:.0e}",
            result.vacuum_mixing_fraction
        ));
    }

    verdict(8, "kitten-state preparation", &failures);
}

#[test]
fn criterion_9_property_families_within_the_time_budget() {
    let started = Instant::now();
    let grid = grid64();
    let mut rng = ChaCha8Rng::seed_from_u64(74);
    let mut failures = Vec::new();

    let random_state = |rng: &mut ChaCha8Rng| -> OccupationState {
        let slots =
            vec![Slot::new('a', 0), Slot::new('a', 1), Slot::new('b', 0), Slot::new('b', 1)];
        loop {
            let mut map: BTreeMap<Vec<usize>, Complex64> = BTreeMap::new();
            for _ in 0..rng.gen_range(1..=4) {
                let occ: Vec<usize> = (0..4).map(|_| rng.gen_range(0..=1usize)).collect();
                *map.entry(occ).or_insert(Complex64::new(0.0, 0.0)) +=
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
            let norm_sqr: f64 = map.values().map(|a| a.norm_sqr()).sum();
            if norm_sqr < 1e-6 {
                continue;
            }
            for a in map.values_mut() {
                *a /= norm_sqr.sqrt();
            }
            return OccupationState::from_amplitudes(slots, map, DEFAULT_TRUNCATION)
                .expect("normalized state");
        }
    };

    for round in 0..20 {
        // Beamsplitter unitarity and involution.
        let state = random_state(&mut rng);
        let t = rng.gen_range(0.0..=1.0);
        let once = beamsplitter(&state, 'a', 'b', t).expect("transforms");
        if (once.norm_sqr() - 1.0).abs() > 1e-9 {
            failures.push(format!("round {round}: beamsplitter broke normalization"));
        }
        let twice = beamsplitter(&once, 'a', 'b', t).expect("transforms");
        let mut worst: f64 = 0.0;
        for (occ, &a) in state.amplitudes() {
            let b = twice.amplitudes().get(occ).copied().unwrap_or_default();
            worst = worst.max((a - b).norm());
        }
        if worst > 1e-9 {
            failures.push(format!(
                "round {round}: beamsplitter twice moved an amplitude by {worst:.3e}"
            ));
        }

        // Density-operator physicality.
        let rho = observed_density(
            &[(0.4, random_state(&mut rng)), (0.6, random_state(&mut rng))],
            'a',
            0,
        )
        .expect("partial trace runs");
        if (rho.trace() - 1.0).abs() > 1e-9 {
            failures.push(format!("round {round}: density trace {:.12}", rho.trace()));
        }
        let d = rho.dimension();
        for i in 0..d {
            for j in 0..d {
                if (rho.element(i, j) - rho.element(j, i).conj()).norm() > 1e-12 {
                    failures.push(format!("round {round}: density not Hermitian"));
                }
            }
        }
        if rho.diagonal().iter().any(|&p| p < -1e-12) {
            failures.push(format!("round {round}: negative occupation probability"));
        }

        // Basis orthonormality.
        let seeds: Vec<SpectralFunction> = (0..3).map(|_| random_pulse(&mut rng, grid)).collect();
        let basis = gram_schmidt(&seeds, tolerances::GRAM_SCHMIDT_DROP).expect("basis");
        if basis.orthonormality_defect() > 1e-9 {
            failures.push(format!(
                "round {round}: orthonormality defect {:.3e}",
                basis.orthonormality_defect()
            ));
        }

        // Decompose/reconstruct round trip on a symmetric spanned state.
        let f = random_pulse(&mut rng, grid);
        let g = random_pulse(&mut rng, grid);
        let basis =
            gram_schmidt(&[f.clone(), g.clone()], tolerances::GRAM_SCHMIDT_DROP).expect("basis");
        if basis.len() == 2 {
            let pair = JointSDF::product(vec![f, g], vec![2]).expect("product");
            let symmetric = symmetrize(&pair).expect("nonzero symmetric part");
            let dec = decompose(&symmetric, &basis).expect("decomposes");
            if dec.residual() > 1e-6 {
                failures.push(format!("round {round}: round-trip residual {:.3e}", dec.residual()));
            }
            let rebuilt = reconstruct(&dec).expect("reconstructs");
            let distance = rebuilt.distance(&symmetric).expect("same shape");
            if distance > 1e-9 {
                failures.push(format!("round {round}: round-trip distance {distance:.3e}"));
            }
        }
    }

    let elapsed = started.elapsed();
    if elapsed.as_secs_f64() >= 60.0 {
        failures.push(format!("runtime {elapsed:?} exceeds the 60 s budget"));
    }
    verdict(9, "property families and time budget", &failures);
}
