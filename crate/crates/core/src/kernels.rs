//! Kernel families, median-heuristic bandwidth, Gram matrices and the induced
//! squared distance `h~(i, j) = G[i][i] + G[j][j] - 2 G[i][j]`.

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{GroupedDataset, Observations, Point};
use crate::error::{Error, Result};
use crate::fixed::FixedGrid;

/// Gaussian bandwidth, either given or resolved from the pooled sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Bandwidth {
    Fixed(f64),
    MedianHeuristic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum KernelFamily {
    /// `exp(-|x - y|^2 / sigma)`
    Gaussian { bandwidth: Bandwidth },
    /// `(|x| + |y| - |x - y|) / 2`
    Energy,
    /// `x . y`
    Linear,
    /// `sum_v 1(x = v) 1(y = v) / p_v` on levels `1..=m`
    ChiSquare { probs: Vec<f64> },
}

/// Kernel selector plus an optional user-asserted bound `0 <= h <= B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub bound: Option<f64>,
}

const SIMPLEX_TOL: f64 = 1e-9;

impl KernelSpec {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        Self::from_family(KernelFamily::Gaussian { bandwidth: Bandwidth::Fixed(sigma) })
    }

    pub fn gaussian_median() -> Self {
        KernelSpec { family: KernelFamily::Gaussian { bandwidth: Bandwidth::MedianHeuristic }, bound: None }
    }

    pub fn energy() -> Self {
        KernelSpec { family: KernelFamily::Energy, bound: None }
    }

    pub fn linear() -> Self {
        KernelSpec { family: KernelFamily::Linear, bound: None }
    }

    pub fn chi_square(probs: Vec<f64>) -> Result<Self> {
        Self::from_family(KernelFamily::ChiSquare { probs })
    }

    /// Chi-square kernel with uniform level probabilities.
    pub fn chi_square_uniform(levels: usize) -> Result<Self> {
        Self::chi_square(vec![1.0 / levels as f64; levels])
    }

    pub fn from_family(family: KernelFamily) -> Result<Self> {
        let spec = KernelSpec { family, bound: None };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_bound(mut self, bound: f64) -> Result<Self> {
        self.bound = Some(bound);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.family {
            KernelFamily::Gaussian { bandwidth: Bandwidth::Fixed(s) } if !(*s > 0.0 && s.is_finite()) => {
                return Err(Error::InvalidKernel(format!("gaussian bandwidth must be positive, got {s}")));
            }
            KernelFamily::ChiSquare { probs } => check_simplex(probs)?,
            _ => {}
        }
        if let Some(b) = self.bound {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::InvalidKernel(format!("bound B must be positive, got {b}")));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self.family {
            KernelFamily::Gaussian { .. } => "gaussian",
            KernelFamily::Energy => "energy",
            KernelFamily::Linear => "linear",
            KernelFamily::ChiSquare { .. } => "chisquare",
        }
    }

    /// Resolved Gaussian bandwidth, if any.
    pub fn bandwidth(&self) -> Option<f64> {
        match self.family {
            KernelFamily::Gaussian { bandwidth: Bandwidth::Fixed(s) } => Some(s),
            _ => None,
        }
    }

    /// Replaces a median-heuristic placeholder by its value on `data` and checks
    /// the kernel against the data domain.
    pub fn resolve(&self, data: &GroupedDataset) -> Result<KernelSpec> {
        self.validate()?;
        self.check_domain(data.observations())?;
        let mut out = self.clone();
        if let KernelFamily::Gaussian { bandwidth: Bandwidth::MedianHeuristic } = self.family {
            out.family = KernelFamily::Gaussian { bandwidth: Bandwidth::Fixed(median_heuristic(data)?) };
        }
        Ok(out)
    }

    fn check_domain(&self, obs: &Observations) -> Result<()> {
        match (&self.family, obs) {
            (KernelFamily::ChiSquare { probs }, Observations::Discrete { levels, values }) => {
                if let Some(&v) = values.iter().find(|&&v| v > probs.len()) {
                    return Err(Error::DiscreteOutOfRange { level: v, levels: probs.len().min(*levels) });
                }
                Ok(())
            }
            (KernelFamily::ChiSquare { .. }, Observations::Continuous { .. }) => {
                Err(Error::DomainMismatch("chi-square kernel needs discrete levels".into()))
            }
            (_, Observations::Discrete { .. }) => {
                Err(Error::DomainMismatch(format!("{} kernel needs real vectors", self.name())))
            }
            _ => Ok(()),
        }
    }
}

/// Checks that `probs` is strictly positive and sums to one.
pub fn check_simplex(probs: &[f64]) -> Result<()> {
    if probs.is_empty() || probs.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
        return Err(Error::InvalidSimplex("probabilities must be positive".into()));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::InvalidSimplex(format!("probabilities sum to {total}")));
    }
    Ok(())
}

#[inline]
fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

#[inline]
fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[inline]
fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// Evaluates `h(x, y)`.
pub fn kernel_eval(spec: &KernelSpec, x: Point<'_>, y: Point<'_>) -> Result<f64> {
    match (&spec.family, x, y) {
        (KernelFamily::Gaussian { bandwidth }, Point::Vector(a), Point::Vector(b)) => {
            let Bandwidth::Fixed(sigma) = bandwidth else {
                return Err(Error::UnresolvedBandwidth);
            };
            check_len(a, b)?;
            Ok((-sq_dist(a, b) / sigma).exp())
        }
        (KernelFamily::Energy, Point::Vector(a), Point::Vector(b)) => {
            check_len(a, b)?;
            Ok((norm(a) + norm(b) - sq_dist(a, b).sqrt()) / 2.0)
        }
        (KernelFamily::Linear, Point::Vector(a), Point::Vector(b)) => {
            check_len(a, b)?;
            Ok(dot(a, b))
        }
        (KernelFamily::ChiSquare { probs }, Point::Level(a), Point::Level(b)) => {
            if a == 0 || a > probs.len() {
                return Err(Error::DiscreteOutOfRange { level: a, levels: probs.len() });
            }
            if b == 0 || b > probs.len() {
                return Err(Error::DiscreteOutOfRange { level: b, levels: probs.len() });
            }
            Ok(if a == b { 1.0 / probs[a - 1] } else { 0.0 })
        }
        (family, _, _) => Err(Error::DomainMismatch(format!("{family:?} on mismatched points"))),
    }
}

fn check_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!("points of length {} and {}", a.len(), b.len())));
    }
    Ok(())
}

/// Median of the squared Euclidean distances over all unordered pairs of the
/// pooled sample; for an even number of pairs, the mean of the two middle
/// order statistics.
pub fn median_heuristic(data: &GroupedDataset) -> Result<f64> {
    let Observations::Continuous { dim, values } = data.observations() else {
        return Err(Error::DomainMismatch("median heuristic needs real vectors".into()));
    };
    let n = data.len();
    if n < 2 {
        return Err(Error::TooFewPoints("median heuristic needs two points".into()));
    }
    let dim = *dim;
    let mut d2: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let xi = &values[i * dim..(i + 1) * dim];
            ((i + 1)..n).map(move |j| sq_dist(xi, &values[j * dim..(j + 1) * dim]))
        })
        .collect();
    if d2.iter().all(|&v| v == 0.0) {
        return Err(Error::AllPointsIdentical);
    }
    let m = d2.len();
    let median = if m % 2 == 1 {
        *d2.select_nth_unstable_by(m / 2, f64::total_cmp).1
    } else {
        let (lower, hi, _) = d2.select_nth_unstable_by(m / 2, f64::total_cmp);
        let hi = *hi;
        let lo = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo + hi) / 2.0
    };
    if median <= 0.0 {
        return Err(Error::InvalidKernel("median squared distance is zero".into()));
    }
    Ok(median)
}

/// What a pairwise matrix was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MatrixSource {
    Kernel(KernelSpec),
    /// `|x - y|^exponent`, the DISCO building block.
    DistancePower {
        exponent: f64,
    },
    /// `exp(-|x - y|^2 / (4 alpha))`, the ECF weight.
    EcfWeight {
        alpha: f64,
    },
}

impl MatrixSource {
    pub fn describe(&self) -> String {
        match self {
            MatrixSource::Kernel(k) => format!("{} kernel", k.name()),
            MatrixSource::DistancePower { exponent } => format!("distance^{exponent}"),
            MatrixSource::EcfWeight { alpha } => format!("ecf weight (alpha={alpha})"),
        }
    }
}

/// Dense symmetric `N x N` matrix of pairwise values.
#[derive(Debug)]
pub struct GramMatrix {
    n: usize,
    values: Vec<f64>,
    source: MatrixSource,
    fixed: OnceLock<FixedGram>,
}

/// Integer copy of a Gram matrix on one fixed-point grid; block sums over it
/// are exact and independent of summation order.
#[derive(Debug)]
pub(crate) struct FixedGram {
    pub(crate) grid: FixedGrid,
    pub(crate) values: Vec<i128>,
}

impl Clone for GramMatrix {
    fn clone(&self) -> Self {
        GramMatrix { n: self.n, values: self.values.clone(), source: self.source.clone(), fixed: OnceLock::new() }
    }
}

impl PartialEq for GramMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.values == other.values && self.source == other.source
    }
}

impl GramMatrix {
    /// Builds the matrix by evaluating `f` on the upper triangle and mirroring.
    pub fn from_fn<F>(n: usize, source: MatrixSource, f: F) -> Self
    where
        F: Fn(usize, usize) -> f64 + Sync,
    {
        let rows: Vec<Vec<f64>> = (0..n).into_par_iter().map(|i| (i..n).map(|j| f(i, j)).collect()).collect();
        let mut values = vec![0.0; n * n];
        for (i, row) in rows.into_iter().enumerate() {
            for (off, v) in row.into_iter().enumerate() {
                let j = i + off;
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        GramMatrix { n, values, source, fixed: OnceLock::new() }
    }

    /// Wraps explicit values; the matrix must be square and exactly symmetric.
    pub fn from_values(n: usize, values: Vec<f64>, source: MatrixSource) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::DimensionMismatch(format!("{} values for a {n}x{n} matrix", values.len())));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if values[i * n + j].to_bits() != values[j * n + i].to_bits() {
                    return Err(Error::InvalidArgument(format!("matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
        }
        Ok(GramMatrix { n, values, source, fixed: OnceLock::new() })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn source(&self) -> &MatrixSource {
        &self.source
    }

    /// The kernel, when the matrix is a kernel Gram matrix.
    pub fn kernel(&self) -> Option<&KernelSpec> {
        match &self.source {
            MatrixSource::Kernel(k) => Some(k),
            _ => None,
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn fixed(&self) -> &FixedGram {
        self.fixed.get_or_init(|| {
            let max_abs = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let terms = (self.n as u64).saturating_mul(self.n as u64);
            let grid = FixedGrid::new(max_abs, terms);
            let values = self.values.iter().map(|&v| grid.quantize(v)).collect();
            FixedGram { grid, values }
        })
    }

    /// `h~(i, j) = G[i][i] + G[j][j] - 2 G[i][j]`, clamped at zero.
    pub fn tilde_h(&self, i: usize, j: usize) -> Result<f64> {
        if i >= self.n || j >= self.n {
            return Err(Error::IndexOutOfRange { i, j, n: self.n });
        }
        Ok(self.tilde_h_unchecked(i, j))
    }

    #[inline]
    pub(crate) fn tilde_h_unchecked(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        (self.get(i, i) + self.get(j, j) - 2.0 * self.get(i, j)).max(0.0)
    }
}

/// Free-function form of [`GramMatrix::tilde_h`].
pub fn tilde_h(g: &GramMatrix, i: usize, j: usize) -> Result<f64> {
    g.tilde_h(i, j)
}

/// Gram matrix `G[i][j] = h(Z_i, Z_j)`. A median-heuristic bandwidth is
/// resolved against the pooled sample first; the resolved value is kept in
/// the matrix's kernel spec.
pub fn gram_matrix(spec: &KernelSpec, data: &GroupedDataset) -> Result<GramMatrix> {
    let spec = spec.resolve(data)?;
    let n = data.len();
    let g = match (&spec.family, data.observations()) {
        (KernelFamily::Gaussian { bandwidth: Bandwidth::Fixed(sigma) }, Observations::Continuous { dim, values }) => {
            let (d, sigma) = (*dim, *sigma);
            GramMatrix::from_fn(n, MatrixSource::Kernel(spec.clone()), |i, j| {
                if i == j {
                    1.0
                } else {
                    (-sq_dist(&values[i * d..(i + 1) * d], &values[j * d..(j + 1) * d]) / sigma).exp()
                }
            })
        }
        (KernelFamily::Energy, Observations::Continuous { dim, values }) => {
            let d = *dim;
            let norms: Vec<f64> = values.chunks_exact(d).map(norm).collect();
            GramMatrix::from_fn(n, MatrixSource::Kernel(spec.clone()), |i, j| {
                let dist = sq_dist(&values[i * d..(i + 1) * d], &values[j * d..(j + 1) * d]).sqrt();
                (norms[i] + norms[j] - dist) / 2.0
            })
        }
        (KernelFamily::Linear, Observations::Continuous { dim, values }) => {
            let d = *dim;
            GramMatrix::from_fn(n, MatrixSource::Kernel(spec.clone()), |i, j| {
                dot(&values[i * d..(i + 1) * d], &values[j * d..(j + 1) * d])
            })
        }
        (KernelFamily::ChiSquare { probs }, Observations::Discrete { values, .. }) => {
            GramMatrix::from_fn(n, MatrixSource::Kernel(spec.clone()), |i, j| {
                if values[i] == values[j] {
                    1.0 / probs[values[i] - 1]
                } else {
                    0.0
                }
            })
        }
        _ => return Err(Error::DomainMismatch(format!("{} kernel on this data", spec.name()))),
    };
    Ok(g)
}

/// Matrix of `f(|Z_i - Z_j|^2)` over continuous data.
pub(crate) fn squared_distance_matrix<F>(data: &GroupedDataset, source: MatrixSource, f: F) -> Result<GramMatrix>
where
    F: Fn(f64) -> f64 + Sync,
{
    let Observations::Continuous { dim, values } = data.observations() else {
        return Err(Error::DomainMismatch("distance-based statistic needs real vectors".into()));
    };
    let d = *dim;
    Ok(GramMatrix::from_fn(data.len(), source, |i, j| {
        f(sq_dist(&values[i * d..(i + 1) * d], &values[j * d..(j + 1) * d]))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn v(x: &[f64]) -> Point<'_> {
        Point::Vector(x)
    }

    #[test]
    fn gaussian_at_zero_distance() {
        let k = KernelSpec::gaussian(1.0).unwrap();
        assert_eq!(kernel_eval(&k, v(&[0.3, -1.0]), v(&[0.3, -1.0])).unwrap(), 1.0);
    }

    #[test]
    fn energy_scalar_values() {
        let k = KernelSpec::energy();
        assert_eq!(kernel_eval(&k, v(&[0.0]), v(&[1.0])).unwrap(), 0.0);
    }

    #[test]
    fn chi_square_values() {
        let k = KernelSpec::chi_square(vec![0.5, 0.5]).unwrap();
        assert_eq!(kernel_eval(&k, Point::Level(1), Point::Level(1)).unwrap(), 2.0);
        assert_eq!(kernel_eval(&k, Point::Level(1), Point::Level(2)).unwrap(), 0.0);
    }

    #[test]
    fn linear_dot_product() {
        let k = KernelSpec::linear();
        assert_eq!(kernel_eval(&k, v(&[3.0, 4.0]), v(&[3.0, 4.0])).unwrap(), 25.0);
    }

    #[test]
    fn domain_mismatch_and_unresolved() {
        let chi = KernelSpec::chi_square(vec![0.5, 0.5]).unwrap();
        assert!(matches!(kernel_eval(&chi, v(&[1.0]), v(&[1.0])), Err(Error::DomainMismatch(_))));
        let med = KernelSpec::gaussian_median();
        assert_eq!(kernel_eval(&med, v(&[1.0]), v(&[1.0])), Err(Error::UnresolvedBandwidth));
        let ds = GroupedDataset::from_scalars(&[&[0.0], &[1.0]]).unwrap();
        assert!(matches!(gram_matrix(&chi, &ds), Err(Error::DomainMismatch(_))));
    }

    #[test]
    fn invalid_specs() {
        assert!(KernelSpec::gaussian(0.0).is_err());
        assert!(KernelSpec::chi_square(vec![0.5, 0.6]).is_err());
        assert!(KernelSpec::chi_square(vec![1.0, 0.0]).is_err());
        assert!(KernelSpec::energy().with_bound(-1.0).is_err());
        assert_eq!(KernelSpec::energy().with_bound(10.0).unwrap().bound, Some(10.0));
    }

    #[test]
    fn median_of_three_points() {
        let ds = GroupedDataset::from_scalars(&[&[0.0, 1.0], &[2.0]]).unwrap();
        assert_eq!(median_heuristic(&ds).unwrap(), 1.0);
    }

    #[test]
    fn median_even_pair_count() {
        // 4 points -> 6 pairs: {1,4,9,1,4,1} -> sorted 1,1,1,4,4,9 -> (1+4)/2
        let ds = GroupedDataset::from_scalars(&[&[0.0, 1.0], &[2.0, 3.0]]).unwrap();
        assert_eq!(median_heuristic(&ds).unwrap(), 2.5);
    }

    #[test]
    fn median_rejects_identical_points() {
        let ds = GroupedDataset::from_scalars(&[&[2.0, 2.0], &[2.0]]).unwrap();
        assert_eq!(median_heuristic(&ds), Err(Error::AllPointsIdentical));
    }

    #[test]
    fn median_translation_and_scale() {
        let base = [0.3, -1.2, 2.5, 0.9, 4.4, -0.7];
        let shifted: Vec<f64> = base.iter().map(|x| x + 17.0).collect();
        let scaled: Vec<f64> = base.iter().map(|x| x * 3.0).collect();
        let m = |x: &[f64]| median_heuristic(&GroupedDataset::from_scalars(&[&x[..3], &x[3..]]).unwrap()).unwrap();
        assert_relative_eq!(m(&base), m(&shifted), max_relative = 1e-12);
        assert_relative_eq!(m(&scaled), 9.0 * m(&base), max_relative = 1e-12);
    }

    #[test]
    fn median_resolved_into_gram_source() {
        let ds = GroupedDataset::from_scalars(&[&[0.0, 1.0], &[2.0]]).unwrap();
        let g = gram_matrix(&KernelSpec::gaussian_median(), &ds).unwrap();
        assert_eq!(g.kernel().unwrap().bandwidth(), Some(1.0));
    }

    #[test]
    fn linear_gram_on_three_scalars() {
        let ds = GroupedDataset::from_scalars(&[&[0.0, 1.0], &[2.0]]).unwrap();
        let g = gram_matrix(&KernelSpec::linear(), &ds).unwrap();
        assert_eq!(g.values(), &[0.0, 0.0, 0.0, 0.0, 1.0, 2.0, 0.0, 2.0, 4.0]);
    }

    #[test]
    fn singleton_gram() {
        let g = GramMatrix::from_fn(1, MatrixSource::Kernel(KernelSpec::linear()), |_, _| 7.0);
        assert_eq!(g.values(), &[7.0]);
    }

    #[test]
    fn gaussian_gram_range() {
        let xs: Vec<f64> = (0..12).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        let ds = GroupedDataset::from_scalars(&[&xs[..6], &xs[6..]]).unwrap();
        let g = gram_matrix(&KernelSpec::gaussian_median(), &ds).unwrap();
        for i in 0..12 {
            assert_eq!(g.get(i, i), 1.0);
            for j in 0..12 {
                assert!(g.get(i, j) <= 1.0 && g.get(i, j) > 0.0);
            }
        }
    }

    #[test]
    fn tilde_h_examples() {
        let ds = GroupedDataset::from_scalars(&[&[0.0], &[3.0]]).unwrap();
        let g = gram_matrix(&KernelSpec::energy(), &ds).unwrap();
        assert_eq!(g.tilde_h(0, 0).unwrap(), 0.0);
        assert_eq!(g.tilde_h(0, 1).unwrap(), 3.0);
        assert_eq!(g.get(1, 1), 3.0);
        let ds = GroupedDataset::from_scalars(&[&[1.0], &[2.0]]).unwrap();
        let g = gram_matrix(&KernelSpec::linear(), &ds).unwrap();
        assert_eq!(g.tilde_h(0, 1).unwrap(), 1.0);
        assert_eq!(g.tilde_h(0, 2), Err(Error::IndexOutOfRange { i: 0, j: 2, n: 2 }));
    }

    fn points(d: usize, n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-5.0f64..5.0, d * n)
    }

    proptest! {
        #[test]
        fn kernels_are_symmetric(d in 1usize..5, xs in points(4, 2), sigma in 0.1f64..10.0) {
            let (x, y) = (&xs[..d], &xs[4..4 + d]);
            for k in [KernelSpec::gaussian(sigma).unwrap(), KernelSpec::energy(), KernelSpec::linear()] {
                let a = kernel_eval(&k, v(x), v(y)).unwrap();
                let b = kernel_eval(&k, v(y), v(x)).unwrap();
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }

        #[test]
        fn energy_tilde_h_is_distance(d in 1usize..5, xs in points(4, 6)) {
            let rows: Vec<Vec<f64>> = xs.chunks(4).map(|c| c[..d].to_vec()).collect();
            let ds = GroupedDataset::from_rows(&rows, vec![3, 3]).unwrap();
            let g = gram_matrix(&KernelSpec::energy(), &ds).unwrap();
            for i in 0..6 {
                for j in 0..6 {
                    let dist = sq_dist(&rows[i], &rows[j]).sqrt();
                    let th = g.tilde_h(i, j).unwrap();
                    prop_assert!((th - dist).abs() <= 1e-9 * dist.max(1e-300) || (dist == 0.0 && th < 1e-12));
                }
            }
        }

        #[test]
        fn gaussian_tilde_h_clamp_is_tiny(xs in points(2, 8), sigma in 0.05f64..20.0) {
            let rows: Vec<Vec<f64>> = xs.chunks(2).map(|c| c.to_vec()).collect();
            let ds = GroupedDataset::from_rows(&rows, vec![4, 4]).unwrap();
            let g = gram_matrix(&KernelSpec::gaussian(sigma).unwrap(), &ds).unwrap();
            for i in 0..8 {
                for j in 0..8 {
                    let raw = g.get(i, i) + g.get(j, j) - 2.0 * g.get(i, j);
                    prop_assert!(raw >= -1e-12);
                }
            }
        }

        #[test]
        fn median_is_permutation_invariant(mut xs in points(1, 9), rot in 0usize..9) {
            let a = median_heuristic(&GroupedDataset::from_scalars(&[&xs[..4], &xs[4..]]).unwrap());
            xs.rotate_left(rot);
            xs.reverse();
            let b = median_heuristic(&GroupedDataset::from_scalars(&[&xs[..5], &xs[5..]]).unwrap());
            prop_assert_eq!(a, b);
        }
    }
}
