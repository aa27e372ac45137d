//! Joint spectral amplitudes of multi-photon states.
//!
//! An n-photon state carries a complex amplitude ψ(ω_1,…,ω_n) — one tensor
//! axis per photon, every axis living on the same [`FrequencyGrid`]. Photons
//! are grouped into spatial modes by a partition (n_1,…,n_m); exchange
//! symmetry is only meaningful within a mode block.
//!
//! Separable states (products of single-photon functions) are kept in factor
//! form and only materialized into a dense tensor on demand: all the algebra
//! on products (norms, overlaps, permutations) factorizes exactly, which is
//! both faster and more accurate than contracting a large dense array.

use ndarray::{ArrayD, ArrayViewD, IxDyn};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{inner_product, FrequencyGrid, SpectralFunction};

/// Hard cap on dense tensor materialization (`grid.points ^ photons`).
/// 2^26 complex values ≈ 1 GiB; beyond that the dense representation is a
/// usage mistake, not a workload.
pub const MAX_TENSOR_ELEMENTS: usize = 1 << 26;

#[derive(Debug, Clone)]
enum Repr {
    /// One normalized factor per photon, in axis order.
    Product(Vec<SpectralFunction>),
    /// Dense rank-n tensor, one axis per photon, axis length = grid.points.
    Dense(ArrayD<Complex64>),
}

/// Joint spectral amplitude of an n-photon state.
#[derive(Debug, Clone)]
pub struct JointSDF {
    grid: FrequencyGrid,
    partition: Vec<usize>,
    repr: Repr,
}

fn check_partition(partition: &[usize], photons: usize) -> Result<()> {
    if partition.is_empty() || partition.contains(&0) {
        return Err(Error::Usage(
            "partition must list at least one photon per spatial mode".into(),
        ));
    }
    let total: usize = partition.iter().sum();
    if total != photons {
        return Err(Error::Usage(format!(
            "partition {partition:?} sums to {total}, but the state has {photons} photons"
        )));
    }
    Ok(())
}

fn check_element_budget(points: usize, photons: usize) -> Result<()> {
    let mut elements: usize = 1;
    for _ in 0..photons {
        elements = elements.saturating_mul(points);
        if elements > MAX_TENSOR_ELEMENTS {
            return Err(Error::Budget(format!(
                "dense tensor of {photons} photons on {points} grid points exceeds \
                 the {MAX_TENSOR_ELEMENTS}-element budget"
            )));
        }
    }
    Ok(())
}

impl JointSDF {
    /// Separable state with an explicit spatial-mode partition. Factor order
    /// follows the partition: the first `partition[0]` factors are mode 0,
    /// and so on. Each factor must be normalized.
    pub fn product(factors: Vec<SpectralFunction>, partition: Vec<usize>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Usage("empty factor list".into()));
        }
        let grid = factors[0].grid();
        for f in &factors {
            if f.grid() != grid {
                return Err(Error::Usage("factors live on different grids".into()));
            }
            crate::spectral::require_normalized(f, "tensor-product factor")?;
        }
        check_partition(&partition, factors.len())?;
        Ok(Self { grid, partition, repr: Repr::Product(factors) })
    }

    /// Dense state from a rank-n tensor (axis order follows the partition).
    pub fn from_dense(
        grid: FrequencyGrid,
        partition: Vec<usize>,
        tensor: ArrayD<Complex64>,
    ) -> Result<Self> {
        let n = tensor.ndim();
        if n == 0 {
            return Err(Error::Usage("tensor must have at least one axis".into()));
        }
        if tensor.shape().iter().any(|&len| len != grid.points()) {
            return Err(Error::Usage(format!(
                "tensor shape {:?} does not match grid with {} points",
                tensor.shape(),
                grid.points()
            )));
        }
        check_element_budget(grid.points(), n)?;
        check_partition(&partition, n)?;
        Ok(Self { grid, partition, repr: Repr::Dense(tensor) })
    }

    pub fn grid(&self) -> FrequencyGrid {
        self.grid
    }

    /// Photons per spatial mode, in axis order.
    pub fn partition(&self) -> &[usize] {
        &self.partition
    }

    pub fn photon_count(&self) -> usize {
        self.partition.iter().sum()
    }

    pub fn is_single_mode(&self) -> bool {
        self.partition.len() == 1
    }

    /// The separable factors, if this state is stored in product form.
    pub fn factors(&self) -> Option<&[SpectralFunction]> {
        match &self.repr {
            Repr::Product(fs) => Some(fs),
            Repr::Dense(_) => None,
        }
    }

    /// Materializes the dense tensor (subject to the element budget).
    pub fn to_dense(&self) -> Result<ArrayD<Complex64>> {
        match &self.repr {
            Repr::Dense(t) => Ok(t.clone()),
            Repr::Product(fs) => {
                check_element_budget(self.grid.points(), fs.len())?;
                let shape: Vec<usize> = vec![self.grid.points(); fs.len()];
                Ok(ArrayD::from_shape_fn(IxDyn(&shape), |idx| {
                    fs.iter().enumerate().map(|(ax, f)| f.amplitudes()[idx[ax]]).product()
                }))
            }
        }
    }

    /// Quadrature norm squared `⟨ψ, ψ⟩` (weight `step` per axis).
    pub fn norm_sqr(&self) -> f64 {
        match &self.repr {
            Repr::Product(fs) => fs.iter().map(|f| f.norm() * f.norm()).product(),
            Repr::Dense(t) => {
                let s: f64 = t.iter().map(|a| a.norm_sqr()).sum();
                s * self.grid.step().powi(self.photon_count() as i32)
            }
        }
    }

    /// True when `|⟨ψ,ψ⟩ − 1| ≤ tol` (the separable-norm convention).
    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    /// Returns the state scaled to unit quadrature norm.
    pub fn normalized(&self) -> Result<Self> {
        let n2 = self.norm_sqr();
        if n2 <= 0.0 || !n2.is_finite() {
            return Err(Error::Unnormalizable);
        }
        match &self.repr {
            Repr::Product(fs) => {
                let factors: Result<Vec<_>> = fs.iter().map(|f| f.normalized()).collect();
                Ok(Self {
                    grid: self.grid,
                    partition: self.partition.clone(),
                    repr: Repr::Product(factors?),
                })
            }
            Repr::Dense(t) => Ok(Self {
                grid: self.grid,
                partition: self.partition.clone(),
                repr: Repr::Dense(t.mapv(|a| a / n2.sqrt())),
            }),
        }
    }

    /// Tensor inner product `⟨self, other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if self.grid != other.grid() || self.photon_count() != other.photon_count() {
            return Err(Error::Usage(
                "inner product requires matching grids and photon counts".into(),
            ));
        }
        match (&self.repr, &other.repr) {
            (Repr::Product(a), Repr::Product(b)) => {
                a.iter().zip(b).map(|(f, g)| inner_product(f, g)).product()
            }
            _ => {
                let a = self.to_dense()?;
                let b = other.to_dense()?;
                Ok(dense_inner(&a.view(), &b.view(), self.grid.step()))
            }
        }
    }

    /// Quadrature distance `‖self − other‖`, computed by direct elementwise
    /// subtraction so that near-identical states resolve to machine
    /// precision (the inner-product identity would amplify roundoff to
    /// ~1e−8 under the square root).
    pub fn distance(&self, other: &Self) -> Result<f64> {
        if self.grid != other.grid() || self.photon_count() != other.photon_count() {
            return Err(Error::Usage("distance requires matching grids and photon counts".into()));
        }
        let a = self.to_dense()?;
        let b = other.to_dense()?;
        let s: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm_sqr()).sum();
        Ok((s * self.grid.step().powi(self.photon_count() as i32)).sqrt())
    }

    /// The state with photon axes reordered by `perm` (axis `i` of the result
    /// is axis `perm[i]` of the input). Callers are responsible for keeping
    /// the permutation within spatial-mode blocks.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.photon_count() {
            return Err(Error::Usage("permutation length must equal photon count".into()));
        }
        let repr = match &self.repr {
            Repr::Product(fs) => Repr::Product(perm.iter().map(|&p| fs[p].clone()).collect()),
            Repr::Dense(t) => Repr::Dense(t.view().permuted_axes(IxDyn(perm)).to_owned()),
        };
        Ok(Self { grid: self.grid, partition: self.partition.clone(), repr })
    }

    /// Ranges of photon axes belonging to each spatial-mode block.
    pub fn block_ranges(&self) -> Vec<std::ops::Range<usize>> {
        block_ranges(&self.partition)
    }
}

/// Convenience: single-spatial-mode separable state from normalized factors.
pub fn tensor_product_sdf(factors: Vec<SpectralFunction>) -> Result<JointSDF> {
    let n = factors.len();
    JointSDF::product(factors, vec![n])
}

pub(crate) fn block_ranges(partition: &[usize]) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::with_capacity(partition.len());
    let mut start = 0;
    for &len in partition {
        out.push(start..start + len);
        start += len;
    }
    out
}

/// All photon-axis permutations that keep each spatial-mode block on itself
/// (the product group S_{n_1} × … × S_{n_m}). Order is deterministic.
pub(crate) fn block_permutations(partition: &[usize]) -> Vec<Vec<usize>> {
    use itertools::Itertools;
    let ranges = block_ranges(partition);
    let per_block: Vec<Vec<Vec<usize>>> =
        ranges.iter().map(|r| r.clone().permutations(r.len()).collect()).collect();
    per_block
        .into_iter()
        .multi_cartesian_product()
        .map(|parts| parts.into_iter().flatten().collect())
        .collect()
}

pub(crate) fn dense_inner(
    a: &ArrayViewD<'_, Complex64>,
    b: &ArrayViewD<'_, Complex64>,
    step: f64,
) -> Complex64 {
    debug_assert_eq!(a.shape(), b.shape());
    let s: Complex64 = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
    s * step.powi(a.ndim() as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::gaussian_pulse;
    use approx::assert_abs_diff_eq;

    fn grid() -> FrequencyGrid {
        FrequencyGrid::new(-8.0, 8.0, 81).unwrap()
    }

    fn pulses(taus: &[f64]) -> Vec<SpectralFunction> {
        taus.iter().map(|&t| gaussian_pulse(grid(), 0.0, 1.0, t).unwrap()).collect()
    }

    #[test]
    fn product_is_normalized_and_matches_dense_norm() {
        let sdf = tensor_product_sdf(pulses(&[0.0, 0.7, 1.3])).unwrap();
        assert_abs_diff_eq!(sdf.norm_sqr(), 1.0, epsilon = 1e-12);
        let dense = JointSDF::from_dense(grid(), vec![3], sdf.to_dense().unwrap()).unwrap();
        assert_abs_diff_eq!(dense.norm_sqr(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn single_factor_is_rank_one() {
        let f = gaussian_pulse(grid(), 0.0, 1.0, 0.0).unwrap();
        let sdf = tensor_product_sdf(vec![f.clone()]).unwrap();
        let dense = sdf.to_dense().unwrap();
        assert_eq!(dense.ndim(), 1);
        for (a, b) in dense.iter().zip(f.amplitudes()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn product_inner_matches_dense_inner() {
        let a = tensor_product_sdf(pulses(&[0.0, 0.5])).unwrap();
        let b = tensor_product_sdf(pulses(&[0.3, 1.1])).unwrap();
        let fast = a.inner(&b).unwrap();
        let slow = dense_inner(
            &a.to_dense().unwrap().view(),
            &b.to_dense().unwrap().view(),
            grid().step(),
        );
        assert_abs_diff_eq!(fast.re, slow.re, epsilon = 1e-12);
        assert_abs_diff_eq!(fast.im, slow.im, epsilon = 1e-12);
    }

    #[test]
    fn permuted_product_swaps_factors() {
        let sdf = tensor_product_sdf(pulses(&[0.0, 2.0])).unwrap();
        let swapped = sdf.permuted(&[1, 0]).unwrap();
        let direct = tensor_product_sdf(pulses(&[2.0, 0.0])).unwrap();
        assert_abs_diff_eq!(swapped.distance(&direct).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn permuted_dense_matches_permuted_product() {
        let sdf = tensor_product_sdf(pulses(&[0.0, 0.9, 1.7])).unwrap();
        let dense = JointSDF::from_dense(grid(), vec![3], sdf.to_dense().unwrap()).unwrap();
        let perm = [2, 0, 1];
        let d = dense.permuted(&perm).unwrap();
        let p = sdf.permuted(&perm).unwrap();
        assert_abs_diff_eq!(d.distance(&p).unwrap(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn block_permutations_respect_partition() {
        let perms = block_permutations(&[2, 1]);
        assert_eq!(perms.len(), 2);
        assert!(perms.contains(&vec![0, 1, 2]));
        assert!(perms.contains(&vec![1, 0, 2]));
        assert_eq!(block_permutations(&[4]).len(), 24);
        assert_eq!(block_permutations(&[2, 2]).len(), 4);
    }

    #[test]
    fn partition_must_sum_to_photon_count() {
        let err = JointSDF::product(pulses(&[0.0, 1.0]), vec![3]);
        assert!(matches!(err, Err(Error::Usage(_))));
        let err = JointSDF::product(pulses(&[0.0, 1.0]), vec![1, 0, 1]);
        assert!(matches!(err, Err(Error::Usage(_))));
    }

    #[test]
    fn element_budget_enforced() {
        let g = FrequencyGrid::new(-8.0, 8.0, 1024).unwrap();
        let f = gaussian_pulse(g, 0.0, 1.0, 0.0).unwrap();
        let sdf = JointSDF::product(vec![f; 3], vec![3]).unwrap();
        assert!(matches!(sdf.to_dense(), Err(Error::Budget(_))));
    }

    #[test]
    fn non_normalized_factor_rejected() {
        let f = gaussian_pulse(grid(), 0.0, 1.0, 0.0).unwrap();
        let double = f.add_scaled(Complex64::new(1.0, 0.0), &f).unwrap();
        assert!(matches!(tensor_product_sdf(vec![double]), Err(Error::Usage(_))));
    }
}
