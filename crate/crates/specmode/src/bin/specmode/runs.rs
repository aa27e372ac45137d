//! One driver per subcommand: builds grids, pulses, sources and bases from
//! the effective configuration, runs the experiment (sweeps fan out over the
//! current worker pool, results collected in sweep order), and packs an
//! [`Outcome`].

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::json;
use specmode::eigenmode::{
    basis_containing, coefficient_matrix, decompose, schmidt_decompose, EigenBasis, FillerFamily,
    ModeDecomposition,
};
use specmode::experiments::{
    conditional_fock, exact_overlap_pair, four_photon_interference, hom_entangled, hom_separable,
    kitten_preparation, PDCSource,
};
use specmode::optics::{homodyne_observe, spectral_filter};
use specmode::sdf::JointSDF;
use specmode::states::normalization_factor;
use specmode::{
    gaussian_pulse, inner_product, overlap_gamma, rect_window, Error, FrequencyGrid, Result,
    SpectralFunction,
};

use crate::config::{BasisSpec, GridSpec, PulseShape, PulseSpec, RunConfig, SweepRange};
use crate::output::{
    complex_value, density_value, occupation_value, probability_value, Outcome, Table,
};

// --------------------------------------------------------------------------
// Shared builders

fn build_grid(spec: &GridSpec) -> Result<FrequencyGrid> {
    FrequencyGrid::new(spec.omega_min, spec.omega_max, spec.points)
}

fn build_pulse(grid: FrequencyGrid, spec: &PulseSpec) -> Result<SpectralFunction> {
    let pulse = match spec.shape {
        PulseShape::Gaussian => gaussian_pulse(grid, spec.center, spec.width, spec.delay)?,
        PulseShape::Rect => {
            if spec.delay != 0.0 {
                return Err(Error::Config(
                    "rect pulses carry no delay; set delay = 0 or use a gaussian".into(),
                ));
            }
            rect_window(grid, spec.center - spec.width / 2.0, spec.center + spec.width / 2.0)?
        }
    };
    pulse.normalized()
}

/// Two-photon Gaussian source from `[source]`. Experiments that are defined
/// for one spatial-mode topology pass it as `required`; a conflicting
/// explicit `source.degenerate` is a configuration error, not silently
/// flipped.
fn build_source(grid: FrequencyGrid, cfg: &RunConfig, required: Option<bool>) -> Result<PDCSource> {
    let degenerate = match (required, cfg.source.degenerate) {
        (Some(needed), Some(stated)) if needed != stated => {
            return Err(Error::Config(format!(
                "this experiment runs on a {} source; set source.degenerate = {} or leave \
                 it unset",
                if needed { "degenerate (single-spatial-mode)" } else { "two-spatial-mode" },
                needed
            )));
        }
        (Some(needed), _) => needed,
        (None, stated) => stated.unwrap_or(false),
    };
    PDCSource::gaussian(
        grid,
        cfg.pulse.center,
        cfg.pulse.width,
        cfg.source.correlation,
        Complex64::from_polar(cfg.source.coupling, cfg.source.coupling_phase),
        degenerate,
        cfg.source.n_max,
    )
}

/// Orthonormal basis led by `seed`, padded with Hermite–Gauss functions
/// centered on the source pulse.
fn build_basis(seed: &SpectralFunction, center: f64, spec: &BasisSpec) -> Result<EigenBasis> {
    basis_containing(seed, FillerFamily::HermiteGauss { center, width: spec.width }, spec.size)
}

// --------------------------------------------------------------------------
// Plan resolution: single point vs sweep

enum Plan {
    Single(f64),
    Sweep(Vec<f64>),
}

/// Flag precedence: explicit single value, then an explicit sweep flag, then
/// a `[sweep]` section naming this experiment's knob, then the built-in
/// default.
fn resolve_plan(
    single: Option<f64>,
    sweep: Option<SweepRange>,
    cfg: &RunConfig,
    knob: &str,
    fallback: Plan,
) -> Plan {
    if let Some(value) = single {
        return Plan::Single(value);
    }
    if let Some(range) = sweep {
        return Plan::Sweep(range.values());
    }
    if let Some(spec) = &cfg.sweep {
        if spec.parameter == knob {
            return Plan::Sweep(SweepRange::from(spec).values());
        }
        log::warn!(
            "config sweeps {:?} but this experiment sweeps {knob:?}; section ignored",
            spec.parameter
        );
    }
    fallback
}

/// For experiments with nothing to sweep.
fn reject_unused_sweep(cfg: &RunConfig, name: &str) {
    if let Some(spec) = &cfg.sweep {
        log::warn!(
            "experiment {name} has no sweepable parameter; [sweep] over {:?} ignored",
            spec.parameter
        );
    }
}

fn sweep_rows<F>(values: &[f64], point: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(f64) -> Result<Vec<f64>> + Sync,
{
    values.par_iter().map(|&x| point(x)).collect()
}

// --------------------------------------------------------------------------
// Experiments

/// Two-pulse Hong–Ou–Mandel coincidence over a relative delay.
pub fn hom(cfg: &RunConfig, single: Option<f64>, sweep: Option<SweepRange>) -> Result<Outcome> {
    let grid = build_grid(&cfg.grid)?;
    let phi = build_pulse(grid, &cfg.pulse)?;
    let point = |tau: f64| {
        let arm = PulseSpec { delay: cfg.pulse.delay + tau, ..cfg.pulse };
        hom_separable(&phi, &build_pulse(grid, &arm)?)
    };
    let columns = vec!["tau", "gamma", "p_c"];
    match resolve_plan(single, sweep, cfg, "delay", Plan::Sweep(default_delay_sweep().values())) {
        Plan::Single(tau) => {
            let r = point(tau)?;
            let report = json!({
                "delay": tau,
                "gamma": r.gamma,
                "p_c_closed": probability_value("p_c_closed", r.p_c_closed)?,
                "p_c_simulated": probability_value("p_c_simulated", r.p_c_simulated)?,
            });
            Ok(Outcome::single(report, Table::new(columns, vec![vec![tau, r.gamma, r.p_c()]])))
        }
        Plan::Sweep(values) => {
            let rows = sweep_rows(&values, |tau| {
                let r = point(tau)?;
                Ok(vec![tau, r.gamma, r.p_c()])
            })?;
            Ok(Outcome::sweep(Table::new(columns, rows)))
        }
    }
}

fn default_delay_sweep() -> SweepRange {
    SweepRange { start: 0.0, stop: 5.0, steps: 51 }
}

/// Coincidence after a balanced beamsplitter for the correlated two-photon
/// source, swept over its correlation parameter.
pub fn hom_entangled_run(
    cfg: &RunConfig,
    single: Option<f64>,
    sweep: Option<SweepRange>,
) -> Result<Outcome> {
    let grid = build_grid(&cfg.grid)?;
    let family_seed = build_pulse(
        grid,
        &PulseSpec {
            shape: PulseShape::Gaussian,
            center: cfg.pulse.center,
            width: cfg.basis.width,
            delay: 0.0,
        },
    )?;
    let basis = build_basis(&family_seed, cfg.pulse.center, &cfg.basis)?;
    let point = |correlation: f64| {
        let mut shifted = cfg.clone();
        shifted.source.correlation = correlation;
        let source = build_source(grid, &shifted, None)?;
        hom_entangled(source.sdf(), &basis)
    };
    let columns = vec!["correlation", "gamma", "p_c"];
    match resolve_plan(single, sweep, cfg, "correlation", Plan::Single(cfg.source.correlation)) {
        Plan::Single(c) => {
            let r = point(c)?;
            let report = json!({
                "correlation": c,
                "gamma": r.gamma,
                "p_c_closed": probability_value("p_c_closed", r.p_c_closed)?,
                "p_c_simulated": probability_value("p_c_simulated", r.p_c_simulated)?,
            });
            Ok(Outcome::single(report, Table::new(columns, vec![vec![c, r.gamma, r.p_c()]])))
        }
        Plan::Sweep(values) => {
            let rows = sweep_rows(&values, |c| {
                let r = point(c)?;
                Ok(vec![c, r.gamma, r.p_c()])
            })?;
            Ok(Outcome::sweep(Table::new(columns, rows)))
        }
    }
}

/// Four photons (two per input) on a balanced beamsplitter, postselected on
/// all four exiting one port, over the pairwise overlap γ.
pub fn four_photon(
    cfg: &RunConfig,
    single: Option<f64>,
    sweep: Option<SweepRange>,
) -> Result<Outcome> {
    let grid = build_grid(&cfg.grid)?;
    let point = |gamma: f64| {
        let (phi1, phi2) = exact_overlap_pair(grid, gamma)?;
        four_photon_interference(&phi1, &phi2)
    };
    let columns = vec!["gamma", "n2", "n4", "p_4a", "p_4a_closed"];
    let fallback = Plan::Sweep(SweepRange { start: 0.0, stop: 1.0, steps: 11 }.values());
    match resolve_plan(single, sweep, cfg, "gamma", fallback) {
        Plan::Single(gamma) => {
            let r = point(gamma)?;
            let report = json!({
                "gamma": r.gamma,
                "n2": r.n2,
                "n4": r.n4,
                "p_4a": probability_value("p_4a", r.p_4a)?,
                "p_4a_closed": probability_value("p_4a_closed", r.p_4a_closed)?,
                "p_4a_from_norms": probability_value("p_4a_from_norms", r.p_4a_from_norms())?,
            });
            let row = vec![r.gamma, r.n2, r.n4, r.p_4a, r.p_4a_closed];
            Ok(Outcome::single(report, Table::new(columns, vec![row])))
        }
        Plan::Sweep(values) => {
            let rows = sweep_rows(&values, |gamma| {
                let r = point(gamma)?;
                Ok(vec![r.gamma, r.n2, r.n4, r.p_4a, r.p_4a_closed])
            })?;
            Ok(Outcome::sweep(Table::new(columns, rows)))
        }
    }
}

/// Photon-number statistics of an n-photon pulse behind a spectral filter.
pub fn filter(cfg: &RunConfig, photons: Option<usize>) -> Result<Outcome> {
    reject_unused_sweep(cfg, "filter");
    let n = photons.unwrap_or(cfg.experiment.photons);
    if n == 0 {
        return Err(Error::Config("filter needs at least one photon".into()));
    }
    let grid = build_grid(&cfg.grid)?;
    let pulse = build_pulse(grid, &cfg.pulse)?;
    let mode = build_pulse(grid, &cfg.reference.as_pulse())?;
    let sdf = JointSDF::product(vec![pulse.clone(); n], vec![n])?;
    let rho = spectral_filter(&sdf, &mode)?;
    let lambda1 = inner_product(&mode, &pulse)?;
    let report = json!({
        "photons": n,
        "lambda1": complex_value(lambda1),
        "transmission": probability_value("transmission", lambda1.norm_sqr())?,
        "purity": probability_value("purity", rho.purity())?,
        "density": density_value(&rho)?,
    });
    let rows = rho.diagonal().iter().enumerate().map(|(m, &p)| vec![m as f64, p]).collect();
    Ok(Outcome::single(report, Table::new(vec!["m", "p_m"], rows)))
}

/// Density matrix a homodyne probe observes for an n-photon pulse.
pub fn homodyne(cfg: &RunConfig, photons: Option<usize>) -> Result<Outcome> {
    reject_unused_sweep(cfg, "homodyne");
    let n = photons.unwrap_or(cfg.experiment.photons);
    let grid = build_grid(&cfg.grid)?;
    let pulse = build_pulse(grid, &cfg.pulse)?;
    let probe = build_pulse(grid, &cfg.reference.as_pulse())?;
    let basis = build_basis(&probe, cfg.pulse.center, &cfg.basis)?;
    let component = if n == 0 {
        ModeDecomposition::vacuum(basis)
    } else {
        let sdf = JointSDF::product(vec![pulse.clone(); n], vec![n])?;
        decompose(&sdf, &basis)?
    };
    let residual = component.residual();
    let rho = homodyne_observe(&[(Complex64::new(1.0, 0.0), component)], &probe)?;
    let report = json!({
        "photons": n,
        "overlap": complex_value(inner_product(&probe, &pulse)?),
        "decomposition_residual": residual,
        "purity": probability_value("purity", rho.purity())?,
        "density": density_value(&rho)?,
    });
    let rows = rho.diagonal().iter().enumerate().map(|(i, &p)| vec![i as f64, p]).collect();
    Ok(Outcome::single(report, Table::new(vec!["i", "p_i"], rows)))
}

/// Heralded odd-photon preparation from a tapped degenerate source.
pub fn kitten(cfg: &RunConfig, single: Option<f64>, sweep: Option<SweepRange>) -> Result<Outcome> {
    let grid = build_grid(&cfg.grid)?;
    let source = build_source(grid, cfg, Some(true))?;
    let detector = build_pulse(grid, &cfg.reference.as_pulse())?;
    let basis = build_basis(&detector, cfg.pulse.center, &cfg.basis)?;
    let columns = vec!["reflectivity", "probability", "purity", "vacuum_mixing_fraction"];
    let point = |eta: f64| kitten_preparation(&source, eta, &detector, &basis);
    match resolve_plan(
        single,
        sweep,
        cfg,
        "reflectivity",
        Plan::Single(cfg.experiment.reflectivity),
    ) {
        Plan::Single(eta) => {
            let r = point(eta)?;
            let observed = r.observed.as_ref().ok_or_else(|| {
                Error::Usage("internal: kitten preparation carries no observed density".into())
            })?;
            let report = json!({
                "reflectivity": eta,
                "probability": probability_value("probability", r.probability)?,
                "purity": probability_value("purity", r.purity)?,
                "vacuum_mixing_fraction": r.vacuum_mixing_fraction,
                "fock_verdict": r.fock_verdict,
                "density": density_value(observed)?,
            });
            let row = vec![eta, r.probability, r.purity, r.vacuum_mixing_fraction];
            Ok(Outcome::single(report, Table::new(columns, vec![row])))
        }
        Plan::Sweep(values) => {
            let rows = sweep_rows(&values, |eta| {
                let r = point(eta)?;
                Ok(vec![eta, r.probability, r.purity, r.vacuum_mixing_fraction])
            })?;
            Ok(Outcome::sweep(Table::new(columns, rows)))
        }
    }
}

/// Conditional m-photon preparation from a two-mode source.
pub fn cond_fock(cfg: &RunConfig, m: Option<usize>) -> Result<Outcome> {
    reject_unused_sweep(cfg, "cond-fock");
    let m = m.unwrap_or(cfg.experiment.m);
    let grid = build_grid(&cfg.grid)?;
    let source = build_source(grid, cfg, Some(false))?;
    let detector = build_pulse(grid, &cfg.reference.as_pulse())?;
    let basis = build_basis(&detector, cfg.pulse.center, &cfg.basis)?;
    let r = conditional_fock(&source, m, &detector, &basis)?;
    let conditional = &r.branches[0].1;
    let extracted_overlap = match &r.extracted_mode {
        Some(mode) => json!(inner_product(mode, &detector)?.norm()),
        None => serde_json::Value::Null,
    };
    let report = json!({
        "m": m,
        "probability": probability_value("probability", r.probability)?,
        "purity": probability_value("purity", r.purity)?,
        "fock_verdict": r.fock_verdict,
        "neglected_fraction": r.neglected_fraction,
        "conditional": occupation_value(conditional.amplitudes()),
        "extracted_detector_overlap": extracted_overlap,
    });
    let row = vec![m as f64, r.probability, r.neglected_fraction];
    Ok(Outcome::single(
        report,
        Table::new(vec!["m", "probability", "neglected_fraction"], vec![row]),
    ))
}

/// Exchange-symmetry normalization factor of a product state built from n1
/// copies of the pulse and n2 copies of the reference mode.
pub fn normalization(cfg: &RunConfig, n1: Option<usize>, n2: Option<usize>) -> Result<Outcome> {
    reject_unused_sweep(cfg, "normalization");
    let n1 = n1.unwrap_or(cfg.experiment.n1);
    let n2 = n2.unwrap_or(cfg.experiment.n2);
    let n = n1 + n2;
    if n == 0 {
        return Err(Error::Config("normalization needs at least one photon".into()));
    }
    let grid = build_grid(&cfg.grid)?;
    let pulse = build_pulse(grid, &cfg.pulse)?;
    let reference = build_pulse(grid, &cfg.reference.as_pulse())?;
    let mut factors = vec![pulse.clone(); n1];
    factors.extend(vec![reference.clone(); n2]);
    let sdf = JointSDF::product(factors, vec![n])?;
    let report = normalization_factor(&sdf)?;
    let gamma = overlap_gamma(&pulse, &reference)?;
    let value = json!({
        "photons": n,
        "value": report.value,
        "max_value": report.max_value(),
        "symmetry_ratio": report.symmetry_ratio(),
        "fully_symmetric": report.fully_symmetric,
        "max_asymmetry": report.max_asymmetry,
        "gamma": gamma,
    });
    let row = vec![n as f64, report.value, report.symmetry_ratio()];
    Ok(Outcome::single(value, Table::new(vec!["photons", "value", "symmetry_ratio"], vec![row])))
}

/// Eigenmode coefficient table Λ[i,j] = ⟨ξ_i ⊗ ξ_j, ψ⟩ and Schmidt spectrum
/// of the two-photon source amplitude. Entries below 1e−12 are omitted from
/// the table.
pub fn decompose_run(cfg: &RunConfig) -> Result<Outcome> {
    reject_unused_sweep(cfg, "decompose");
    let grid = build_grid(&cfg.grid)?;
    let source = build_source(grid, cfg, None)?;
    let family_seed = build_pulse(
        grid,
        &PulseSpec {
            shape: PulseShape::Gaussian,
            center: cfg.pulse.center,
            width: cfg.basis.width,
            delay: 0.0,
        },
    )?;
    let basis = build_basis(&family_seed, cfg.pulse.center, &cfg.basis)?;
    let (matrix, residual) = coefficient_matrix(source.sdf(), &basis)?;
    let schmidt = schmidt_decompose(source.sdf(), &basis)?;
    let mut rows = Vec::new();
    let mut entries = std::collections::BTreeMap::new();
    for ((i, j), &amplitude) in matrix.indexed_iter() {
        if amplitude.norm() <= 1e-12 {
            continue;
        }
        rows.push(vec![i as f64, j as f64, amplitude.re, amplitude.im, amplitude.norm()]);
        entries.insert(vec![i, j], amplitude);
    }
    let report = json!({
        "photon_count": source.sdf().photon_count(),
        "basis_size": basis.len(),
        "residual": residual,
        "coefficients": occupation_value(&entries),
        "schmidt": schmidt.coefficients,
    });
    let table = Table::new(vec!["i", "j", "re", "im", "abs"], rows);
    Ok(Outcome::table_with_report(report, table))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_plans_follow_flag_precedence() {
        let cfg = RunConfig::default();
        match resolve_plan(
            Some(2.0),
            Some(SweepRange { start: 0.0, stop: 1.0, steps: 3 }),
            &cfg,
            "delay",
            Plan::Single(0.0),
        ) {
            Plan::Single(x) => assert_eq!(x, 2.0),
            Plan::Sweep(_) => panic!("single flag must win"),
        }
        match resolve_plan(
            None,
            Some(SweepRange { start: 0.0, stop: 1.0, steps: 3 }),
            &cfg,
            "delay",
            Plan::Single(0.0),
        ) {
            Plan::Sweep(values) => assert_eq!(values.len(), 3),
            Plan::Single(_) => panic!("sweep flag must win over fallback"),
        }
    }

    #[test]
    fn config_sweep_applies_only_to_its_knob() {
        let cfg = RunConfig {
            sweep: Some(crate::config::SweepSpec {
                parameter: "delay".into(),
                start: 0.0,
                stop: 1.0,
                steps: 5,
            }),
            ..RunConfig::default()
        };
        match resolve_plan(None, None, &cfg, "delay", Plan::Single(0.0)) {
            Plan::Sweep(values) => assert_eq!(values.len(), 5),
            Plan::Single(_) => panic!("matching config sweep must apply"),
        }
        match resolve_plan(None, None, &cfg, "gamma", Plan::Single(0.25)) {
            Plan::Single(x) => assert_eq!(x, 0.25),
            Plan::Sweep(_) => panic!("mismatched config sweep must not apply"),
        }
    }
}
