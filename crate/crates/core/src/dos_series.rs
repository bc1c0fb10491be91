//! Weak-disorder expansion of the averaged resolvent diagonal outside the
//! free spectrum.
//!
//! For `|E| > 2d` the resolvent of `H = H0 + lambda V` has the Neumann series
//! `R(z) = sum_k R0(z) [-lambda V R0(z)]^k`, `z = E + i eps`. Term `k` of
//! `E{<0|R(z)|0>}` is estimated by Monte Carlo on a finite box centred at the
//! origin, next to the directly computed `E{<0|R(z)|0>}` on the very same
//! disorder fields.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{assemble_with_disorder, build_h0, LatticeSpec, ModelSpec, DEFAULT_MAX_SITES};
use crate::runner::RealizationMap;
use crate::spectral::Resolvent;

/// Box-truncation budget: `exp(-d0 L_box / 4)` must stay below this.
pub const TRUNCATION_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConvergenceCheck {
    pub lambda: f64,
    pub energy: f64,
    pub dimension: usize,
    pub d0: f64,
    /// `E|w_0|`.
    pub moment: f64,
    pub c1_assumed: f64,
    /// `lambda * moment * c1 / d0^(d + 1)`.
    pub ratio: f64,
    /// Largest per-order growth `|T_k' / T_k|^(1 / (k' - k))` between
    /// consecutive statistically resolved terms, once terms exist.
    pub empirical_ratio: Option<f64>,
    pub verdict: bool,
}

/// Monte Carlo mean of a complex quantity with its standard error
/// `sqrt(sum |x - mean|^2 / (R - 1)) / sqrt(R)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComplexEstimate {
    pub re: f64,
    pub im: f64,
    pub stderr: f64,
}

impl ComplexEstimate {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    fn from_samples(xs: &[Complex64]) -> Self {
        if xs.iter().all(|&x| x == xs[0]) {
            return Self {
                re: xs[0].re,
                im: xs[0].im,
                stderr: 0.0,
            };
        }
        let r = xs.len() as f64;
        let mean = xs.iter().fold(Complex64::new(0.0, 0.0), |a, &x| a + x) / r;
        let stderr = if xs.len() < 2 {
            0.0
        } else {
            let ss: f64 = xs.iter().map(|&x| (x - mean).norm_sqr()).sum();
            libm::sqrt(ss / (r - 1.0) / r)
        };
        Self {
            re: mean.re,
            im: mean.im,
            stderr,
        }
    }

    /// `|T| <= 3 * stderr`: indistinguishable from zero.
    pub fn is_null(&self) -> bool {
        self.value().norm() <= 3.0 * self.stderr
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DosSeriesResult {
    pub energy: f64,
    pub epsilon: f64,
    pub lambda: f64,
    /// `T_k`, `k = 0..=K`.
    pub terms: Vec<ComplexEstimate>,
    /// `sum_{j <= k} T_j`, with standard errors of the per-realization sums.
    pub partial_sums: Vec<ComplexEstimate>,
    /// `E{<0|(H - z)^{-1}|0>}`.
    pub direct: ComplexEstimate,
    /// Standard error of the per-realization difference `partial_sums[k] - direct`.
    pub difference_stderr: Vec<f64>,
    pub box_size: usize,
    pub realizations: u64,
    pub convergence: ConvergenceCheck,
}

impl DosSeriesResult {
    pub fn order(&self) -> usize {
        self.terms.len() - 1
    }

    /// `|partial_sums[k] - direct|`.
    pub fn gap(&self, k: usize) -> f64 {
        (self.partial_sums[k].value() - self.direct.value()).norm()
    }

    /// `sqrt(se(partial_sums[k])^2 + se(direct)^2)`.
    pub fn combined_stderr(&self, k: usize) -> f64 {
        libm::hypot(self.partial_sums[k].stderr, self.direct.stderr)
    }

    /// Smoothed density from the series, `Im sum_k T_k`, without the `1/pi`.
    pub fn dos_series_raw(&self) -> f64 {
        self.partial_sums[self.order()].im
    }

    pub fn dos_direct_raw(&self) -> f64 {
        self.direct.im
    }

    pub fn dos_series_normalized(&self) -> f64 {
        self.dos_series_raw() / PI
    }

    pub fn dos_direct_normalized(&self) -> f64 {
        self.dos_direct_raw() / PI
    }
}

fn free_gap(model: &ModelSpec, e: f64) -> Result<f64> {
    let d0 = e.abs() - 2.0 * model.lattice.dimension as f64;
    if !(d0 > 0.0) {
        return Err(Error::InvalidQuery(format!(
            "E = {e} is not outside the free spectrum [-{0}, {0}]",
            2 * model.lattice.dimension
        )));
    }
    Ok(d0)
}

/// Evaluates the absolute-convergence predicate `lambda E|w| C1 / d0^(d+1) < 1`.
pub fn convergence_check(model: &ModelSpec, e: f64, c1_assumed: f64) -> Result<ConvergenceCheck> {
    model.validate()?;
    if !(c1_assumed > 0.0 && c1_assumed.is_finite()) {
        return Err(Error::InvalidQuery(format!(
            "c1 must be positive, got {c1_assumed}"
        )));
    }
    let d0 = free_gap(model, e)?;
    let d = model.lattice.dimension;
    let moment = model.disorder.law.mean_abs();
    let ratio = model.lambda * moment * c1_assumed / libm::pow(d0, (d + 1) as f64);
    Ok(ConvergenceCheck {
        lambda: model.lambda,
        energy: e,
        dimension: d,
        d0,
        moment,
        c1_assumed,
        ratio,
        empirical_ratio: None,
        verdict: ratio < 1.0,
    })
}

/// Parameters of one series evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesRun {
    pub energy: f64,
    /// Imaginary part of `z`; negative values give `E - i|eps|`.
    pub epsilon: f64,
    pub order: usize,
    pub box_size: usize,
    pub realizations: u64,
}

struct Sample {
    terms: Vec<Complex64>,
    direct: Complex64,
}

fn series_sample(
    model: &ModelSpec,
    r0: &Resolvent,
    z: Complex64,
    center: usize,
    omega: Vec<f64>,
    order: usize,
    realization: Option<u64>,
) -> Result<Sample> {
    let lambda = model.lambda;
    let mut u = r0.column(center);
    let mut terms = Vec::with_capacity(order + 1);
    terms.push(u[center]);
    for _ in 0..order {
        for (x, &w) in u.iter_mut().zip(&omega) {
            *x *= -(lambda * w);
        }
        r0.solve_in_place(&mut u);
        terms.push(u[center]);
    }
    let h = assemble_with_disorder(model, omega, realization)?;
    let direct = Resolvent::new(&h, z)?.column(center)[center];
    Ok(Sample { terms, direct })
}

/// Series terms, their partial sums and the direct resolvent average.
pub fn dos_series_run<M: RealizationMap>(
    model: &ModelSpec,
    run: &SeriesRun,
    c1_assumed: f64,
    allow_divergent: bool,
    runner: &M,
) -> Result<DosSeriesResult> {
    let mut check = convergence_check(model, run.energy, c1_assumed)?;
    if !check.verdict && !allow_divergent {
        return Err(Error::InvalidQuery(format!(
            "convergence predicate fails (ratio {:.4} >= 1); override to run anyway",
            check.ratio
        )));
    }
    if !run.epsilon.is_finite() {
        return Err(Error::InvalidQuery("epsilon must be finite".into()));
    }
    if run.realizations == 0 {
        return Err(Error::InvalidQuery("realization count must be >= 1".into()));
    }
    let truncation = libm::exp(-check.d0 * run.box_size as f64 / 4.0);
    if !(truncation < TRUNCATION_TOLERANCE) {
        return Err(Error::InvalidQuery(format!(
            "box size {} too small: exp(-d0 L / 4) = {truncation:e} >= {TRUNCATION_TOLERANCE:e}",
            run.box_size
        )));
    }
    let lattice = LatticeSpec {
        size: run.box_size,
        ..model.lattice
    };
    lattice.validate()?;
    let sites = lattice.checked_sites(DEFAULT_MAX_SITES)?;
    let box_model = ModelSpec {
        lattice,
        ..model.clone()
    };
    let center = lattice.center();
    let z = Complex64::new(run.energy, run.epsilon);
    let h0 = build_h0(&lattice, &model.background)?;
    let r0 = Resolvent::new(&h0, z)?;

    let samples: Vec<Sample> = if model.lambda == 0.0 {
        vec![series_sample(
            &box_model,
            &r0,
            z,
            center,
            vec![0.0; sites],
            run.order,
            None,
        )?]
    } else {
        let per = runner.map(run.realizations, |r| {
            let omega = box_model
                .disorder
                .sample(sites, r)
                .map_err(|e| e.at(r, None))?;
            series_sample(&box_model, &r0, z, center, omega, run.order, Some(r))
                .map_err(|e| e.at(r, None))
        });
        per.into_iter().collect::<Result<_>>()?
    };

    let column = |f: &dyn Fn(&Sample) -> Complex64| -> ComplexEstimate {
        let xs: Vec<Complex64> = samples.iter().map(f).collect();
        ComplexEstimate::from_samples(&xs)
    };
    let terms: Vec<ComplexEstimate> = (0..=run.order).map(|k| column(&|s| s.terms[k])).collect();
    let partial_sums: Vec<ComplexEstimate> = (0..=run.order)
        .map(|k| column(&|s| s.terms[..=k].iter().sum()))
        .collect();
    let direct = column(&|s| s.direct);
    let difference_stderr = (0..=run.order)
        .map(|k| column(&|s| s.terms[..=k].iter().sum::<Complex64>() - s.direct).stderr)
        .collect();

    let resolved: Vec<(usize, f64)> = terms
        .iter()
        .enumerate()
        .filter(|(_, t)| !t.is_null())
        .map(|(k, t)| (k, t.value().norm()))
        .collect();
    check.empirical_ratio = resolved
        .windows(2)
        .map(|w| libm::pow(w[1].1 / w[0].1, 1.0 / (w[1].0 - w[0].0) as f64))
        .reduce(f64::max);

    Ok(DosSeriesResult {
        energy: run.energy,
        epsilon: run.epsilon,
        lambda: model.lambda,
        terms,
        partial_sums,
        direct,
        difference_stderr,
        box_size: run.box_size,
        realizations: if model.lambda == 0.0 {
            run.realizations
        } else {
            samples.len() as u64
        },
        convergence: check,
    })
}

/// Term `T_k` alone. `k = 0` is deterministic.
pub fn series_term<M: RealizationMap>(
    model: &ModelSpec,
    run: &SeriesRun,
    runner: &M,
) -> Result<ComplexEstimate> {
    let res = dos_series_run(model, run, 1.0, true, runner)?;
    Ok(res.terms[run.order])
}
