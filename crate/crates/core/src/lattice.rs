//! Finite-volume lattice Anderson Hamiltonians `H = H0|_box + lambda * V_omega|_box`.
//!
//! `H0` is the nearest-neighbour adjacency operator of `Z^d` (zero diagonal,
//! spectrum `[-2d, 2d]` in infinite volume) plus an optional periodic
//! background potential. Sites of the box `{0..L-1}^d` are numbered row-major,
//! the last coordinate running fastest.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::band::SymBand;
use crate::error::{Error, Result};
use crate::rng::realization_rng;

/// Default cap on `L^d`.
pub const DEFAULT_MAX_SITES: usize = 1_000_000;

/// Rejection-sampling budget per truncated Gaussian draw.
const MAX_REJECTIONS: u32 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Boundary {
    /// Simple truncation: no hopping across the box faces.
    Dirichlet,
    /// Wrap-around hopping on every axis.
    Periodic,
}

impl Boundary {
    pub fn as_str(self) -> &'static str {
        match self {
            Boundary::Dirichlet => "dirichlet",
            Boundary::Periodic => "periodic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LatticeSpec {
    pub dimension: usize,
    pub size: usize,
    pub boundary: Boundary,
}

impl LatticeSpec {
    pub fn new(dimension: usize, size: usize, boundary: Boundary) -> Result<Self> {
        let spec = Self {
            dimension,
            size,
            boundary,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dimension) {
            return Err(Error::spec("dimension", "must be 1, 2 or 3"));
        }
        if self.size == 0 {
            return Err(Error::spec("size", "must be >= 1"));
        }
        if self.boundary == Boundary::Periodic && self.size < 2 {
            return Err(Error::spec("size", "periodic boundary requires size >= 2"));
        }
        Ok(())
    }

    /// `|box| = L^d`, or [`Error::SizeOverflow`] above `max_sites`.
    pub fn checked_sites(&self, max_sites: usize) -> Result<usize> {
        let sites = (self.size as u128).pow(self.dimension as u32);
        if sites > max_sites as u128 {
            return Err(Error::SizeOverflow {
                sites,
                max: max_sites,
            });
        }
        Ok(sites as usize)
    }

    /// Number of sites; assumes this lattice passed [`checked_sites`](Self::checked_sites).
    pub fn sites(&self) -> usize {
        self.size.pow(self.dimension as u32)
    }

    /// Index offset of one step along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.size.pow((self.dimension - 1 - axis) as u32)
    }

    pub fn coord(&self, site: usize, axis: usize) -> usize {
        (site / self.stride(axis)) % self.size
    }

    pub fn site_of(&self, coords: &[usize]) -> usize {
        coords
            .iter()
            .enumerate()
            .map(|(a, &c)| (c % self.size) * self.stride(a))
            .sum()
    }

    /// The site with every coordinate at `L / 2`.
    pub fn center(&self) -> usize {
        (0..self.dimension)
            .map(|a| (self.size / 2) * self.stride(a))
            .sum()
    }

    /// Nearest-neighbour edges `(i, j)` with `i < j`, listed with multiplicity:
    /// on a periodic axis of length 2 the forward and wrap edges coincide.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.sites();
        let mut out = Vec::with_capacity(n * self.dimension);
        for site in 0..n {
            for axis in 0..self.dimension {
                let s = self.stride(axis);
                let c = self.coord(site, axis);
                if c + 1 < self.size {
                    out.push((site, site + s));
                } else if self.boundary == Boundary::Periodic {
                    let wrapped = site - (self.size - 1) * s;
                    out.push((wrapped.min(site), wrapped.max(site)));
                }
            }
        }
        out
    }
}

/// A `Z^d`-periodic background potential sampled on one period cell.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PeriodicPotential {
    pub period: Vec<usize>,
    /// Row-major over the period cell, `prod(period)` entries.
    pub values: Vec<f64>,
}

impl PeriodicPotential {
    pub fn zero(dimension: usize) -> Self {
        Self {
            period: vec![1; dimension],
            values: vec![0.0],
        }
    }

    pub fn validate(&self, dimension: usize) -> Result<()> {
        if self.period.len() != dimension {
            return Err(Error::spec(
                "background.period",
                format!(
                    "has {} components, lattice dimension is {dimension}",
                    self.period.len()
                ),
            ));
        }
        if self.period.contains(&0) {
            return Err(Error::spec("background.period", "components must be >= 1"));
        }
        let cell: usize = self.period.iter().product();
        if self.values.len() != cell {
            return Err(Error::spec(
                "background.values",
                format!(
                    "expected {cell} values (product of the period), got {}",
                    self.values.len()
                ),
            ));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::spec("background.values", "values must be finite"));
        }
        Ok(())
    }

    /// `V0` at the site with the given coordinates; depends only on `coords mod period`.
    pub fn value_at(&self, coords: &[usize]) -> f64 {
        let mut idx = 0;
        for (c, p) in coords.iter().zip(&self.period) {
            idx = idx * p + c % p;
        }
        self.values[idx]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

/// Single-site law of the iid random potential. Both laws have compact
/// support and bounded density.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "law", rename_all = "snake_case"))]
pub enum DisorderLaw {
    Uniform {
        a: f64,
        b: f64,
    },
    /// Mean-zero Gaussian of deviation `sigma` conditioned on `|w| <= cutoff * sigma`.
    TruncatedGaussian {
        sigma: f64,
        cutoff: f64,
    },
}

impl DisorderLaw {
    pub const DEFAULT_CUTOFF: f64 = 3.0;

    pub fn validate(&self) -> Result<()> {
        match *self {
            DisorderLaw::Uniform { a, b } => {
                if !(a.is_finite() && b.is_finite()) {
                    return Err(Error::spec("disorder", "uniform bounds must be finite"));
                }
                if a >= b {
                    return Err(Error::spec("disorder", "uniform law requires a < b"));
                }
            }
            DisorderLaw::TruncatedGaussian { sigma, cutoff } => {
                if !(sigma.is_finite() && sigma > 0.0) {
                    return Err(Error::spec("disorder", "sigma must be > 0"));
                }
                if !(cutoff.is_finite() && cutoff > 0.0) {
                    return Err(Error::spec("disorder", "cutoff must be > 0"));
                }
            }
        }
        Ok(())
    }

    /// `max |w|` over the support.
    pub fn support_max(&self) -> f64 {
        match *self {
            DisorderLaw::Uniform { a, b } => a.abs().max(b.abs()),
            DisorderLaw::TruncatedGaussian { sigma, cutoff } => cutoff * sigma,
        }
    }

    /// First absolute moment `E|w|`.
    pub fn mean_abs(&self) -> f64 {
        match *self {
            DisorderLaw::Uniform { a, b } => {
                if a >= 0.0 {
                    0.5 * (a + b)
                } else if b <= 0.0 {
                    -0.5 * (a + b)
                } else {
                    (a * a + b * b) / (2.0 * (b - a))
                }
            }
            DisorderLaw::TruncatedGaussian { sigma, cutoff } => {
                let mass = libm::erf(cutoff / core::f64::consts::SQRT_2);
                let tail = 1.0 - libm::exp(-0.5 * cutoff * cutoff);
                sigma * libm::sqrt(2.0 / core::f64::consts::PI) * tail / mass
            }
        }
    }

    /// Fills `out` with iid draws.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) -> Result<()> {
        match *self {
            DisorderLaw::Uniform { a, b } => {
                let dist = Uniform::new(a, b)
                    .map_err(|_| Error::spec("disorder", "uniform law requires a < b"))?;
                for w in out.iter_mut() {
                    *w = dist.sample(rng);
                }
            }
            DisorderLaw::TruncatedGaussian { sigma, cutoff } => {
                for w in out.iter_mut() {
                    let mut tries = 0;
                    *w = loop {
                        let z: f64 = StandardNormal.sample(rng);
                        if z.abs() <= cutoff {
                            break sigma * z;
                        }
                        tries += 1;
                        if tries >= MAX_REJECTIONS {
                            return Err(Error::NumericalFailure(format!(
                                "truncated Gaussian rejection sampler exceeded {MAX_REJECTIONS} tries"
                            )));
                        }
                    };
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DisorderSpec {
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub law: DisorderLaw,
    pub master_seed: u64,
}

impl DisorderSpec {
    pub fn validate(&self) -> Result<()> {
        self.law.validate()
    }

    pub fn support_max(&self) -> f64 {
        self.law.support_max()
    }

    /// The disorder field of realization `realization_index`: a deterministic
    /// function of `(master_seed, realization_index)`.
    pub fn sample(&self, n_sites: usize, realization_index: u64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; n_sites];
        let mut rng = realization_rng(self.master_seed, realization_index);
        self.law.sample_into(&mut rng, &mut out)?;
        Ok(out)
    }
}

/// One random operator family.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelSpec {
    pub lattice: LatticeSpec,
    pub background: PeriodicPotential,
    pub disorder: DisorderSpec,
    pub lambda: f64,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        self.lattice.validate()?;
        self.background.validate(self.lattice.dimension)?;
        self.disorder.validate()?;
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(Error::spec("lambda", "lambda must be >= 0"));
        }
        Ok(())
    }

    /// Gershgorin bound `2d + max|V0| + lambda * max|w|` on every sample's spectrum.
    pub fn spectral_radius_bound(&self) -> f64 {
        2.0 * self.lattice.dimension as f64
            + self.background.max_abs()
            + self.lambda * self.disorder.support_max()
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self {
            lambda,
            ..self.clone()
        }
    }
}

/// One assembled finite-volume matrix.
///
/// Couplings within half-bandwidth `L^(d-1)` are kept in a [`SymBand`];
/// the axis-0 wrap couplings of a periodic box with `L >= 3` fall outside
/// that band and are listed separately in `wraps`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSample {
    pub lattice: LatticeSpec,
    pub band: SymBand<f64>,
    /// Unit couplings `(i, j)`, `i < j`, outside the band.
    pub wraps: Vec<(usize, usize)>,
    pub realization_index: Option<u64>,
    pub disorder_values: Vec<f64>,
    /// Gershgorin bound of the generating model, used to scale tolerances.
    pub scale: f64,
}

impl HamiltonianSample {
    pub fn n(&self) -> usize {
        self.band.n()
    }

    pub fn bandwidth(&self) -> usize {
        self.band.bandwidth()
    }

    pub fn diagonal(&self, i: usize) -> f64 {
        self.band.get(i, i)
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = (i.min(j), i.max(j));
        if hi - lo <= self.band.bandwidth() {
            self.band.get(hi, lo)
        } else {
            self.wraps.iter().filter(|&&p| p == (lo, hi)).count() as f64
        }
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n();
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in i.saturating_sub(self.bandwidth())..=i {
                let v = self.band.get(i, j);
                m[i * n + j] = v;
                m[j * n + i] = v;
            }
        }
        for &(i, j) in &self.wraps {
            m[i * n + j] += 1.0;
            m[j * n + i] += 1.0;
        }
        m
    }

    /// Plain tridiagonal matrix (1D Dirichlet, or any 1D box with `L <= 2`).
    pub fn is_tridiagonal(&self) -> bool {
        self.wraps.is_empty() && self.bandwidth() <= 1
    }

    pub fn trace(&self) -> f64 {
        (0..self.n()).map(|i| self.diagonal(i)).sum()
    }

    /// `H x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.band.mul_vec(x);
        for &(i, j) in &self.wraps {
            y[i] += x[j];
            y[j] += x[i];
        }
        y
    }
}

/// Band storage plus the wrap-around edges of the periodic axis.
type Parts = (SymBand<f64>, Vec<(usize, usize)>);

fn assemble_parts(
    lattice: &LatticeSpec,
    background: &PeriodicPotential,
    diag_extra: impl Fn(usize) -> f64,
    max_sites: usize,
) -> Result<Parts> {
    lattice.validate()?;
    background.validate(lattice.dimension)?;
    let n = lattice.checked_sites(max_sites)?;
    let bw = lattice.stride(0);
    let mut band = SymBand::zeros(n, bw);
    let mut coords = [0usize; 3];
    for site in 0..n {
        for (a, c) in coords.iter_mut().enumerate().take(lattice.dimension) {
            *c = lattice.coord(site, a);
        }
        let v0 = background.value_at(&coords[..lattice.dimension]);
        band.set(site, site, v0 + diag_extra(site));
    }
    let mut wraps = Vec::new();
    for (i, j) in lattice.edges() {
        if j - i <= band.bandwidth() {
            band.add(j, i, 1.0);
        } else {
            wraps.push((i, j));
        }
    }
    Ok((band, wraps))
}

/// `H0` restricted to the box: unit hopping on neighbour pairs, `V0` on the diagonal.
pub fn build_h0(
    lattice: &LatticeSpec,
    background: &PeriodicPotential,
) -> Result<HamiltonianSample> {
    build_h0_with_limit(lattice, background, DEFAULT_MAX_SITES)
}

pub fn build_h0_with_limit(
    lattice: &LatticeSpec,
    background: &PeriodicPotential,
    max_sites: usize,
) -> Result<HamiltonianSample> {
    let (band, wraps) = assemble_parts(lattice, background, |_| 0.0, max_sites)?;
    let n = band.n();
    Ok(HamiltonianSample {
        lattice: *lattice,
        band,
        wraps,
        realization_index: None,
        disorder_values: vec![0.0; n],
        scale: 2.0 * lattice.dimension as f64 + background.max_abs(),
    })
}

/// Realization `realization_index` of the model.
pub fn assemble(model: &ModelSpec, realization_index: u64) -> Result<HamiltonianSample> {
    model.validate()?;
    let n = model.lattice.checked_sites(DEFAULT_MAX_SITES)?;
    let omega = model.disorder.sample(n, realization_index)?;
    assemble_with_disorder(model, omega, Some(realization_index))
}

/// Assembles `H0 + lambda * diag(omega)` for an explicit disorder field.
pub fn assemble_with_disorder(
    model: &ModelSpec,
    omega: Vec<f64>,
    realization_index: Option<u64>,
) -> Result<HamiltonianSample> {
    model.validate()?;
    let n = model.lattice.checked_sites(DEFAULT_MAX_SITES)?;
    if omega.len() != n {
        return Err(Error::InvalidQuery(format!(
            "disorder field has {} values for {n} sites",
            omega.len()
        )));
    }
    let lambda = model.lambda;
    let (band, wraps) = assemble_parts(
        &model.lattice,
        &model.background,
        |m| lambda * omega[m],
        DEFAULT_MAX_SITES,
    )?;
    let support = omega
        .iter()
        .fold(model.disorder.support_max(), |m, w| m.max(w.abs()));
    Ok(HamiltonianSample {
        lattice: model.lattice,
        band,
        wraps,
        realization_index,
        disorder_values: omega,
        scale: 2.0 * model.lattice.dimension as f64 + model.background.max_abs() + lambda * support,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    pub(crate) fn uniform_model(
        d: usize,
        l: usize,
        boundary: Boundary,
        lambda: f64,
        seed: u64,
    ) -> ModelSpec {
        ModelSpec {
            lattice: LatticeSpec::new(d, l, boundary).unwrap(),
            background: PeriodicPotential::zero(d),
            disorder: DisorderSpec {
                law: DisorderLaw::Uniform { a: -1.0, b: 1.0 },
                master_seed: seed,
            },
            lambda,
        }
    }

    fn dense(h: &HamiltonianSample) -> Vec<Vec<f64>> {
        let n = h.n();
        let m = h.to_dense();
        (0..n).map(|i| m[i * n..(i + 1) * n].to_vec()).collect()
    }

    #[test]
    fn path_graph_l3() {
        let lat = LatticeSpec::new(1, 3, Boundary::Dirichlet).unwrap();
        let h = build_h0(&lat, &PeriodicPotential::zero(1)).unwrap();
        assert_eq!(
            dense(&h),
            vec![
                vec![0.0, 1.0, 0.0],
                vec![1.0, 0.0, 1.0],
                vec![0.0, 1.0, 0.0]
            ]
        );
        assert!(h.is_tridiagonal());
    }

    #[test]
    fn cycle_l3_has_corner_entries() {
        let lat = LatticeSpec::new(1, 3, Boundary::Periodic).unwrap();
        let h = build_h0(&lat, &PeriodicPotential::zero(1)).unwrap();
        assert_eq!(
            dense(&h),
            vec![
                vec![0.0, 1.0, 1.0],
                vec![1.0, 0.0, 1.0],
                vec![1.0, 1.0, 0.0]
            ]
        );
        assert_eq!(h.entry(0, 2), 1.0);
        assert_eq!(h.entry(2, 0), 1.0);
    }

    #[test]
    fn two_torus_doubles_edges() {
        // Sites (0,0)=0, (0,1)=1, (1,0)=2, (1,1)=3; every axis of length 2
        // carries its forward edge and a coinciding wrap edge.
        let lat = LatticeSpec::new(2, 2, Boundary::Periodic).unwrap();
        let h = build_h0(&lat, &PeriodicPotential::zero(2)).unwrap();
        let expect = vec![
            vec![0.0, 2.0, 2.0, 0.0],
            vec![2.0, 0.0, 0.0, 2.0],
            vec![2.0, 0.0, 0.0, 2.0],
            vec![0.0, 2.0, 2.0, 0.0],
        ];
        assert_eq!(dense(&h), expect);
        assert!(h.wraps.is_empty());
    }

    #[test]
    fn periodic_row_sums_equal_2d() {
        for (d, l) in [(1, 5), (2, 4), (3, 3), (2, 2)] {
            let lat = LatticeSpec::new(d, l, Boundary::Periodic).unwrap();
            let h = build_h0(&lat, &PeriodicPotential::zero(d)).unwrap();
            let n = h.n();
            let m = h.to_dense();
            for i in 0..n {
                let s: f64 = (0..n).filter(|&j| j != i).map(|j| m[i * n + j]).sum();
                assert_eq!(s, 2.0 * d as f64, "d={d} L={l} row {i}");
            }
        }
    }

    #[test]
    fn dirichlet_bandwidth_is_slab_size() {
        let lat = LatticeSpec::new(3, 4, Boundary::Dirichlet).unwrap();
        let h = build_h0(&lat, &PeriodicPotential::zero(3)).unwrap();
        assert_eq!(h.bandwidth(), 16);
        assert!(h.wraps.is_empty());
        let lat = LatticeSpec::new(2, 5, Boundary::Periodic).unwrap();
        let h = build_h0(&lat, &PeriodicPotential::zero(2)).unwrap();
        assert_eq!(h.bandwidth(), 5);
        assert_eq!(h.wraps.len(), 5);
    }

    #[test]
    fn size_overflow_is_signalled() {
        let lat = LatticeSpec::new(3, 101, Boundary::Dirichlet).unwrap();
        let err = build_h0(&lat, &PeriodicPotential::zero(3)).unwrap_err();
        assert!(matches!(
            err,
            Error::SizeOverflow {
                sites: 1_030_301,
                max: DEFAULT_MAX_SITES
            }
        ));
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(LatticeSpec::new(4, 3, Boundary::Dirichlet).is_err());
        assert!(LatticeSpec::new(1, 0, Boundary::Dirichlet).is_err());
        assert!(LatticeSpec::new(2, 1, Boundary::Periodic).is_err());
        assert!(DisorderLaw::Uniform { a: 0.0, b: 0.0 }.validate().is_err());
        assert!(DisorderLaw::TruncatedGaussian {
            sigma: 0.0,
            cutoff: 3.0
        }
        .validate()
        .is_err());
        let mut m = uniform_model(1, 4, Boundary::Dirichlet, 0.5, 1);
        m.lambda = -0.5;
        assert_eq!(
            m.validate().unwrap_err().to_string(),
            "invalid lambda: lambda must be >= 0"
        );
    }

    #[test]
    fn periodic_background_is_translation_invariant() {
        let v0 = PeriodicPotential {
            period: vec![2, 3],
            values: vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6],
        };
        v0.validate(2).unwrap();
        for x in 0..7 {
            for y in 0..7 {
                let base = v0.value_at(&[x, y]);
                assert_eq!(v0.value_at(&[x + 2, y]), base);
                assert_eq!(v0.value_at(&[x, y + 3]), base);
                assert_eq!(v0.value_at(&[x + 4, y + 6]), base);
            }
        }
        let lat = LatticeSpec::new(2, 6, Boundary::Dirichlet).unwrap();
        let h = build_h0(&lat, &v0).unwrap();
        assert_eq!(h.diagonal(lat.site_of(&[3, 4])), v0.value_at(&[1, 1]));
    }

    #[test]
    fn disorder_sampling_is_deterministic_and_in_support() {
        let spec = DisorderSpec {
            law: DisorderLaw::Uniform { a: -1.0, b: 1.0 },
            master_seed: 99,
        };
        let a = spec.sample(100_000, 3).unwrap();
        let b = spec.sample(100_000, 3).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|w| (-1.0..=1.0).contains(w)));
        let mean = a.iter().sum::<f64>() / a.len() as f64;
        assert!(mean.abs() <= 0.02, "mean {mean}");
        assert_ne!(a, spec.sample(100_000, 4).unwrap());

        let g = DisorderSpec {
            law: DisorderLaw::TruncatedGaussian {
                sigma: 0.5,
                cutoff: 3.0,
            },
            master_seed: 1,
        };
        let w = g.sample(50_000, 0).unwrap();
        assert!(w.iter().all(|x| x.abs() <= 1.5));
        let mean_abs = w.iter().map(|x| x.abs()).sum::<f64>() / w.len() as f64;
        assert!((mean_abs - g.law.mean_abs()).abs() < 0.01);
    }

    #[test]
    fn zero_lambda_matches_h0() {
        let m = uniform_model(2, 5, Boundary::Periodic, 0.0, 11);
        let h0 = build_h0(&m.lattice, &m.background).unwrap();
        for r in [0, 7] {
            let h = assemble(&m, r).unwrap();
            assert_eq!(h.band, h0.band);
            assert_eq!(h.wraps, h0.wraps);
        }
    }

    #[test]
    fn diagonal_is_v0_plus_lambda_omega() {
        let mut m = uniform_model(2, 4, Boundary::Dirichlet, 0.7, 5);
        m.background = PeriodicPotential {
            period: vec![1, 2],
            values: vec![0.25, -0.5],
        };
        let h = assemble(&m, 2).unwrap();
        for s in 0..h.n() {
            let v0 = m
                .background
                .value_at(&[m.lattice.coord(s, 0), m.lattice.coord(s, 1)]);
            assert_eq!(h.diagonal(s), v0 + 0.7 * h.disorder_values[s]);
        }
        assert!(h.scale <= m.spectral_radius_bound());
    }

    #[test]
    fn uniform_mean_abs() {
        assert_eq!(DisorderLaw::Uniform { a: -1.0, b: 1.0 }.mean_abs(), 0.5);
        assert_eq!(DisorderLaw::Uniform { a: 1.0, b: 3.0 }.mean_abs(), 2.0);
        assert_eq!(DisorderLaw::Uniform { a: -3.0, b: -1.0 }.mean_abs(), 2.0);
        assert!((DisorderLaw::Uniform { a: -1.0, b: 3.0 }.mean_abs() - 1.25).abs() < 1e-15);
    }
}
