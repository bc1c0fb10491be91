//! Monte Carlo disorder averages of eigenvalue counts.
//!
//! `N_lambda(E)` is estimated by the finite-volume proxy
//! `#{eigenvalues <= E} / |box|`, averaged over independent realizations.
//! Counts are integers, so the reduction accumulates exact integer sums and
//! the result cannot depend on evaluation order.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lattice::{assemble, assemble_with_disorder, ModelSpec, DEFAULT_MAX_SITES};
use crate::rng::mix_seed;
use crate::runner::RealizationMap;
use crate::spectral::{distance_with, Counter};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IdsEstimate {
    pub model: ModelSpec,
    pub energies: Vec<f64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub realizations: u64,
    /// Largest threshold jitter any count needed.
    pub max_jitter: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IdsSurface {
    pub energies: Vec<f64>,
    pub lambdas: Vec<f64>,
    /// Indexed `[lambda][energy]`.
    pub mean: Vec<Vec<f64>>,
    pub stderr: Vec<Vec<f64>>,
    pub realizations: u64,
    pub couple_seeds: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WegnerResult {
    pub energy: f64,
    /// Descending.
    pub etas: Vec<f64>,
    pub prob: Vec<f64>,
    /// Binomial standard error `sqrt(p (1 - p) / R)`.
    pub stderr: Vec<f64>,
    pub volume: usize,
    pub realizations: u64,
}

/// Exact integer moments of per-realization counts.
#[derive(Debug, Clone)]
struct CountMoments {
    sum: Vec<u128>,
    sum_sq: Vec<u128>,
}

impl CountMoments {
    fn new(len: usize) -> Self {
        Self {
            sum: vec![0; len],
            sum_sq: vec![0; len],
        }
    }

    fn push(&mut self, counts: &[usize], weight: u64) {
        for (k, &c) in counts.iter().enumerate() {
            let c = c as u128;
            self.sum[k] += c * weight as u128;
            self.sum_sq[k] += c * c * weight as u128;
        }
    }

    /// Mean and standard error of `count / sites`.
    fn finish(&self, realizations: u64, sites: usize) -> (Vec<f64>, Vec<f64>) {
        let r = realizations as u128;
        let norm = realizations as f64 * sites as f64;
        let mean = self.sum.iter().map(|&s| s as f64 / norm).collect();
        let stderr = self
            .sum
            .iter()
            .zip(&self.sum_sq)
            .map(|(&s, &sq)| {
                if r < 2 {
                    return 0.0;
                }
                // R * sum c^2 - (sum c)^2 >= 0, exact.
                let num = r * sq - s * s;
                let var = num as f64 / (r as f64 * (r - 1) as f64) / (sites as f64 * sites as f64);
                libm::sqrt(var / r as f64)
            })
            .collect();
        (mean, stderr)
    }
}

fn check_energies(energies: &[f64]) -> Result<()> {
    if energies.is_empty() {
        return Err(Error::InvalidQuery("energy grid is empty".into()));
    }
    if energies.iter().any(|e| !e.is_finite()) || energies.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidQuery(
            "energy grid must be finite and strictly ascending".into(),
        ));
    }
    Ok(())
}

fn check_realizations(r: u64) -> Result<()> {
    if r == 0 {
        return Err(Error::InvalidQuery("realization count must be >= 1".into()));
    }
    Ok(())
}

fn counts_for(
    counter: &Counter<'_>,
    energies: &[f64],
    realization: u64,
) -> Result<(Vec<usize>, f64)> {
    let mut jitter: f64 = 0.0;
    let counts = energies
        .iter()
        .map(|&e| {
            let c = counter
                .count_below(e)
                .map_err(|err| err.at(realization, Some(e)))?;
            jitter = jitter.max(c.jitter_applied);
            Ok(c.count)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((counts, jitter))
}

/// First error in realization order, or all values.
fn collect_ordered<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    results.into_iter().collect()
}

/// `N_lambda(E)` on `energies` from `realizations` disorder samples.
pub fn estimate_ids<M: RealizationMap>(
    model: &ModelSpec,
    energies: &[f64],
    realizations: u64,
    runner: &M,
) -> Result<IdsEstimate> {
    model.validate()?;
    check_energies(energies)?;
    check_realizations(realizations)?;
    let sites = model.lattice.checked_sites(DEFAULT_MAX_SITES)?;
    let mut moments = CountMoments::new(energies.len());
    let mut max_jitter: f64 = 0.0;
    if model.lambda == 0.0 {
        // Every realization is the same matrix.
        let h = assemble(model, 0)?;
        let (counts, jitter) = counts_for(&Counter::new(&h), energies, 0)?;
        moments.push(&counts, realizations);
        max_jitter = jitter;
    } else {
        let per = runner.map(realizations, |r| {
            let h = assemble(model, r).map_err(|e| e.at(r, None))?;
            counts_for(&Counter::new(&h), energies, r)
        });
        for (counts, jitter) in collect_ordered(per)? {
            moments.push(&counts, 1);
            max_jitter = max_jitter.max(jitter);
        }
    }
    let (mean, stderr) = moments.finish(realizations, sites);
    Ok(IdsEstimate {
        model: model.clone(),
        energies: energies.to_vec(),
        mean,
        stderr,
        realizations,
        max_jitter,
    })
}

/// Master seed used for row `row` of an uncoupled surface.
pub fn uncoupled_row_seed(master_seed: u64, row: usize) -> u64 {
    mix_seed(master_seed, u64::MAX - row as u64)
}

/// `N_lambda(E)` over a `(lambda, E)` grid. With `couple_seeds` every row
/// reuses the same disorder fields (common random numbers).
pub fn estimate_surface<M: RealizationMap>(
    model_base: &ModelSpec,
    energies: &[f64],
    lambdas: &[f64],
    realizations: u64,
    couple_seeds: bool,
    runner: &M,
) -> Result<IdsSurface> {
    model_base.validate()?;
    check_energies(energies)?;
    check_realizations(realizations)?;
    if lambdas.is_empty() {
        return Err(Error::InvalidQuery("lambda grid is empty".into()));
    }
    if lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0))
        || lambdas.windows(2).any(|w| w[0] > w[1])
    {
        return Err(Error::InvalidQuery(
            "lambda grid must be finite, >= 0 and ascending".into(),
        ));
    }
    let (mut mean, mut stderr) = (Vec::new(), Vec::new());
    if couple_seeds {
        let sites = model_base.lattice.checked_sites(DEFAULT_MAX_SITES)?;
        let per = runner.map(realizations, |r| {
            let omega = model_base
                .disorder
                .sample(sites, r)
                .map_err(|e| e.at(r, None))?;
            lambdas
                .iter()
                .map(|&l| {
                    let h =
                        assemble_with_disorder(&model_base.with_lambda(l), omega.clone(), Some(r))
                            .map_err(|e| e.at(r, None))?;
                    Ok(counts_for(&Counter::new(&h), energies, r)?.0)
                })
                .collect::<Result<Vec<Vec<usize>>>>()
        });
        let per = collect_ordered(per)?;
        for row in 0..lambdas.len() {
            let mut m = CountMoments::new(energies.len());
            for counts in &per {
                m.push(&counts[row], 1);
            }
            let (mu, se) = m.finish(realizations, sites);
            mean.push(mu);
            stderr.push(se);
        }
    } else {
        for (row, &l) in lambdas.iter().enumerate() {
            let mut model = model_base.with_lambda(l);
            model.disorder.master_seed = uncoupled_row_seed(model_base.disorder.master_seed, row);
            let est = estimate_ids(&model, energies, realizations, runner)?;
            mean.push(est.mean);
            stderr.push(est.stderr);
        }
    }
    Ok(IdsSurface {
        energies: energies.to_vec(),
        lambdas: lambdas.to_vec(),
        mean,
        stderr,
        realizations,
        couple_seeds,
    })
}

/// `P{dist(spectrum(H), E) <= eta}` for each `eta`.
pub fn wegner_probability<M: RealizationMap>(
    model: &ModelSpec,
    e: f64,
    etas: &[f64],
    realizations: u64,
    runner: &M,
) -> Result<WegnerResult> {
    model.validate()?;
    check_realizations(realizations)?;
    if !e.is_finite() {
        return Err(Error::InvalidQuery(format!("energy {e} is not finite")));
    }
    if etas.is_empty()
        || etas.iter().any(|x| !(*x > 0.0 && x.is_finite()))
        || etas.windows(2).any(|w| w[0] <= w[1])
    {
        return Err(Error::InvalidQuery(
            "etas must be positive and strictly descending".into(),
        ));
    }
    let volume = model.lattice.checked_sites(DEFAULT_MAX_SITES)?;
    let per = runner.map(realizations, |r| {
        let h = assemble(model, r).map_err(|err| err.at(r, None))?;
        distance_with(&Counter::new(&h), e).map_err(|err| err.at(r, Some(e)))
    });
    let distances = collect_ordered(per)?;
    let rf = realizations as f64;
    let prob: Vec<f64> = etas
        .iter()
        .map(|&eta| distances.iter().filter(|&&d| d <= eta).count() as f64 / rf)
        .collect();
    let stderr = prob
        .iter()
        .map(|&p| libm::sqrt(p * (1.0 - p) / rf))
        .collect();
    Ok(WegnerResult {
        energy: e,
        etas: etas.to_vec(),
        prob,
        stderr,
        volume,
        realizations,
    })
}
