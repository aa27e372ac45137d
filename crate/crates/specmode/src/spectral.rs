//! Frequency grids, single-photon spectral functions, and the inner product
//! every other module builds on.
//!
//! All functions live on a uniform grid of angular frequencies. Quadrature is
//! the uniform-weight rule: every node carries weight `step`, so
//! `⟨f, g⟩ = Σ_k conj(f_k) g_k · step`. Accuracy is controlled by grid
//! density and span; the pulse constructors warn when a pulse's ±4σ support
//! is not covered.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Uniform discretization of angular frequency.
///
/// Frequencies are in arbitrary angular units (delays in inverse units); the
/// physics here carries no absolute scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    omega_min: f64,
    omega_max: f64,
    points: usize,
}

impl FrequencyGrid {
    /// Builds a uniform grid with `points` nodes spanning `[omega_min, omega_max]`.
    pub fn new(omega_min: f64, omega_max: f64, points: usize) -> Result<Self> {
        if !omega_min.is_finite() || !omega_max.is_finite() {
            return Err(Error::Config("grid bounds must be finite".into()));
        }
        if points < 2 {
            return Err(Error::Config(format!("grid needs at least 2 points, got {points}")));
        }
        if omega_max <= omega_min {
            return Err(Error::Config(format!(
                "degenerate span: omega_max ({omega_max}) must exceed omega_min ({omega_min})"
            )));
        }
        Ok(Self { omega_min, omega_max, points })
    }

    pub fn omega_min(&self) -> f64 {
        self.omega_min
    }

    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// Node spacing; also the quadrature weight of every node.
    pub fn step(&self) -> f64 {
        (self.omega_max - self.omega_min) / (self.points - 1) as f64
    }

    /// Frequency of node `k`.
    pub fn node(&self, k: usize) -> f64 {
        debug_assert!(k < self.points);
        self.omega_min + k as f64 * self.step()
    }

    /// All node frequencies in order.
    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points).map(|k| self.node(k))
    }
}

/// A complex amplitude vector on a grid: single-photon spectral functions,
/// basis functions, filter and probe responses.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFunction {
    grid: FrequencyGrid,
    amplitudes: Vec<Complex64>,
}

impl SpectralFunction {
    /// Wraps raw samples. The length must match the grid.
    pub fn from_samples(grid: FrequencyGrid, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != grid.points() {
            return Err(Error::Usage(format!(
                "sample count {} does not match grid points {}",
                amplitudes.len(),
                grid.points()
            )));
        }
        Ok(Self { grid, amplitudes })
    }

    pub fn grid(&self) -> FrequencyGrid {
        self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Quadrature norm `sqrt(⟨f, f⟩)`.
    pub fn norm(&self) -> f64 {
        let s: f64 = self.amplitudes.iter().map(|a| a.norm_sqr()).sum();
        (s * self.grid.step()).sqrt()
    }

    /// True when `|⟨f,f⟩ − 1| ≤ tol`.
    pub fn is_normalized(&self, tol: f64) -> bool {
        let n = self.norm();
        (n * n - 1.0).abs() <= tol
    }

    /// Returns the function scaled to unit quadrature norm.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n <= 0.0 || !n.is_finite() {
            return Err(Error::Unnormalizable);
        }
        let inv = 1.0 / n;
        Ok(Self { grid: self.grid, amplitudes: self.amplitudes.iter().map(|a| a * inv).collect() })
    }

    /// Returns the function multiplied by the global phase that makes its
    /// first nonzero amplitude real and positive.
    ///
    /// This is the reproducibility convention for generated basis functions.
    pub fn with_canonical_phase(&self) -> Self {
        let phase = self
            .amplitudes
            .iter()
            .find(|a| a.norm() > PHASE_PIVOT_FLOOR)
            .map(|a| a.conj() / a.norm())
            .unwrap_or(Complex64::new(1.0, 0.0));
        Self { grid: self.grid, amplitudes: self.amplitudes.iter().map(|a| a * phase).collect() }
    }

    /// Pointwise linear combination `self + c·other` on a shared grid.
    pub fn add_scaled(&self, c: Complex64, other: &Self) -> Result<Self> {
        check_same_grid(self, other)?;
        Ok(Self {
            grid: self.grid,
            amplitudes: self
                .amplitudes
                .iter()
                .zip(&other.amplitudes)
                .map(|(a, b)| a + c * b)
                .collect(),
        })
    }

    /// Zero function on `grid`.
    pub fn zero(grid: FrequencyGrid) -> Self {
        Self { grid, amplitudes: vec![Complex64::new(0.0, 0.0); grid.points()] }
    }
}

/// Amplitudes below this magnitude are not trusted to define a phase pivot.
const PHASE_PIVOT_FLOOR: f64 = 1e-14;

fn check_same_grid(f: &SpectralFunction, g: &SpectralFunction) -> Result<()> {
    if f.grid() != g.grid() {
        return Err(Error::Usage("spectral functions live on different grids".into()));
    }
    Ok(())
}

/// Grid inner product `Σ_k conj(f_k) g_k · step`, conjugate-linear in the
/// first argument.
pub fn inner_product(f: &SpectralFunction, g: &SpectralFunction) -> Result<Complex64> {
    check_same_grid(f, g)?;
    let s: Complex64 = f.amplitudes().iter().zip(g.amplitudes()).map(|(a, b)| a.conj() * b).sum();
    Ok(s * f.grid().step())
}

/// Distinguishability overlap `γ = |⟨f, g⟩|²` for normalized functions.
pub fn overlap_gamma(f: &SpectralFunction, g: &SpectralFunction) -> Result<f64> {
    require_normalized(f, "overlap_gamma first argument")?;
    require_normalized(g, "overlap_gamma second argument")?;
    Ok(inner_product(f, g)?.norm_sqr())
}

pub(crate) fn require_normalized(f: &SpectralFunction, what: &str) -> Result<()> {
    if !f.is_normalized(crate::tolerances::NORMALIZATION_CHECK) {
        return Err(Error::Usage(format!("{what} is not normalized (norm {})", f.norm())));
    }
    Ok(())
}

/// Normalized Gaussian pulse `exp(−(ω−ω0)²/(4σ²)) · exp(−iωτ)`.
///
/// `delay` τ shifts the pulse in time through a linear spectral phase. Pulses
/// whose ±4σ support exceeds the grid span are truncated; that degrades the
/// quadrature silently, so it is surfaced as a warning.
pub fn gaussian_pulse(
    grid: FrequencyGrid,
    center: f64,
    width: f64,
    delay: f64,
) -> Result<SpectralFunction> {
    if width <= 0.0 || !width.is_finite() {
        return Err(Error::Config(format!("pulse width must be positive, got {width}")));
    }
    if grid.omega_min() > center - 4.0 * width || grid.omega_max() < center + 4.0 * width {
        log::warn!(
            "grid [{}, {}] does not cover ±4σ around ω0 = {center} (σ = {width}); \
             the pulse is truncated",
            grid.omega_min(),
            grid.omega_max()
        );
    }
    let amplitudes = grid
        .nodes()
        .map(|w| {
            let x = (w - center) / (2.0 * width);
            Complex64::from_polar((-x * x).exp(), -w * delay)
        })
        .collect();
    SpectralFunction::from_samples(grid, amplitudes)?.normalized()
}

/// Normalized indicator function of `[omega_lo, omega_hi]` on the grid.
pub fn rect_window(grid: FrequencyGrid, omega_lo: f64, omega_hi: f64) -> Result<SpectralFunction> {
    if omega_lo >= omega_hi {
        return Err(Error::Config(format!("window bounds out of order: [{omega_lo}, {omega_hi}]")));
    }
    if omega_lo < grid.omega_min() || omega_hi > grid.omega_max() {
        return Err(Error::Config(format!(
            "window [{omega_lo}, {omega_hi}] exceeds grid span [{}, {}]",
            grid.omega_min(),
            grid.omega_max()
        )));
    }
    let amplitudes: Vec<Complex64> = grid
        .nodes()
        .map(|w| {
            if w >= omega_lo && w <= omega_hi {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    if amplitudes.iter().all(|a| a.norm_sqr() == 0.0) {
        return Err(Error::Config(format!(
            "window [{omega_lo}, {omega_hi}] contains no grid nodes"
        )));
    }
    SpectralFunction::from_samples(grid, amplitudes)?.normalized()
}
