//! Built-in checks: inertia counts against the dense oracle on random
//! models, and invariants of the free IDS.

use idslab_core::estimator::estimate_ids;
use idslab_core::free_ids::{n0_exact_1d, n0_quadrature};
use idslab_core::lattice::assemble;
use idslab_core::spectral::{dense_eigenvalues, Counter};
use idslab_core::{
    Boundary, DisorderLaw, DisorderSpec, LatticeSpec, ModelSpec, PeriodicPotential, RealizationMap,
    Result,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Energies probed per model.
pub const ENERGIES_PER_MODEL: usize = 20;
/// Largest matrix order drawn.
pub const MAX_SITES: usize = 400;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub models: usize,
    pub comparisons: usize,
    /// `(model index, E, inertia count, dense count)` for every disagreement.
    pub mismatches: Vec<(usize, f64, usize, usize)>,
    pub max_jitter: f64,
    pub largest_n: usize,
}

impl OracleReport {
    pub fn pass(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Model `index` of the randomized suite: d in {1, 2}, at most 400 sites,
/// either boundary, lambda in [0, 2], either disorder law.
pub fn random_model(seed: u64, index: u64) -> ModelSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(idslab_core::rng::mix_seed(seed, index));
    let dimension = rng.random_range(1..=2usize);
    let boundary = if rng.random_bool(0.5) {
        Boundary::Periodic
    } else {
        Boundary::Dirichlet
    };
    let max_l = if dimension == 1 { MAX_SITES } else { 20 };
    let min_l = if boundary == Boundary::Periodic { 2 } else { 1 };
    let size = rng.random_range(min_l..=max_l);
    let law = if rng.random_bool(0.5) {
        let a = rng.random_range(-1.5..0.0);
        DisorderLaw::Uniform {
            a,
            b: a + rng.random_range(0.5..2.0),
        }
    } else {
        DisorderLaw::TruncatedGaussian {
            sigma: rng.random_range(0.2..1.0),
            cutoff: DisorderLaw::DEFAULT_CUTOFF,
        }
    };
    ModelSpec {
        lattice: LatticeSpec {
            dimension,
            size,
            boundary,
        },
        background: PeriodicPotential::zero(dimension),
        disorder: DisorderSpec {
            law,
            master_seed: rng.random(),
        },
        lambda: rng.random_range(0.0..=2.0),
    }
}

struct ModelOutcome {
    comparisons: usize,
    mismatches: Vec<(f64, usize, usize)>,
    max_jitter: f64,
    n: usize,
}

fn check_model(seed: u64, index: u64) -> Result<ModelOutcome> {
    let model = random_model(seed, index);
    let mut rng = ChaCha8Rng::seed_from_u64(idslab_core::rng::mix_seed(!seed, index));
    let h = assemble(&model, rng.random_range(0..1000))?;
    let ev = dense_eigenvalues(&h)?;
    let counter = Counter::new(&h);
    let reach = model.spectral_radius_bound() + 0.5;
    let mut out = ModelOutcome {
        comparisons: 0,
        mismatches: Vec::new(),
        max_jitter: 0.0,
        n: h.n(),
    };
    for _ in 0..ENERGIES_PER_MODEL {
        let e = rng.random_range(-reach..reach);
        let c = counter.count_below(e)?;
        let oracle = ev.iter().filter(|&&x| x <= e + c.jitter_applied).count();
        out.max_jitter = out.max_jitter.max(c.jitter_applied);
        out.comparisons += 1;
        if c.count != oracle {
            out.mismatches.push((e, c.count, oracle));
        }
        // The band factorization must agree too when the Sturm path was taken.
        if h.is_tridiagonal() {
            if let Some(b) = counter.count_banded(e + c.jitter_applied) {
                out.comparisons += 1;
                if b != oracle {
                    out.mismatches.push((e, b, oracle));
                }
            }
        }
    }
    Ok(out)
}

/// Compares inertia counts with dense eigenvalue counts on `n_models` random models.
pub fn oracle_equivalence<M: RealizationMap>(
    n_models: usize,
    seed: u64,
    runner: &M,
) -> Result<OracleReport> {
    let outcomes = runner.map(n_models as u64, |i| check_model(seed, i));
    let mut report = OracleReport {
        models: n_models,
        comparisons: 0,
        mismatches: Vec::new(),
        max_jitter: 0.0,
        largest_n: 0,
    };
    for (i, o) in outcomes.into_iter().enumerate() {
        let o = o?;
        report.comparisons += o.comparisons;
        report.max_jitter = report.max_jitter.max(o.max_jitter);
        report.largest_n = report.largest_n.max(o.n);
        report
            .mismatches
            .extend(o.mismatches.into_iter().map(|(e, a, b)| (i, e, a, b)));
    }
    Ok(report)
}

/// Energies `-2, -1.95, ..., 2`.
pub fn free_grid_1d() -> Vec<f64> {
    (0..=80).map(|k| -2.0 + 4.0 * k as f64 / 80.0).collect()
}

/// Largest `|count / L - arccos(-E/2)/pi|` for the free Dirichlet chain.
pub fn free_ids_max_deviation<M: RealizationMap>(size: usize, runner: &M) -> Result<f64> {
    let model = ModelSpec {
        lattice: LatticeSpec {
            dimension: 1,
            size,
            boundary: Boundary::Dirichlet,
        },
        background: PeriodicPotential::zero(1),
        disorder: DisorderSpec {
            law: DisorderLaw::Uniform { a: -1.0, b: 1.0 },
            master_seed: 0,
        },
        lambda: 0.0,
    };
    let energies = free_grid_1d();
    let est = estimate_ids(&model, &energies, 1, runner)?;
    Ok(energies
        .iter()
        .zip(&est.mean)
        .map(|(&e, &m)| (m - n0_exact_1d(e)).abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &str, pass: bool, detail: String) -> Check {
    Check {
        name: name.into(),
        pass,
        detail,
    }
}

/// Symmetry, monotonicity and band-edge values of the free IDS, plus the
/// L = 4096 chain against the closed form.
pub fn free_ids_invariants<M: RealizationMap>(runner: &M) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let dev = free_ids_max_deviation(4096, runner)?;
    out.push(check(
        "free_ids_chain_4096",
        dev <= 0.01,
        format!("max_abs_dev={dev:e}"),
    ));

    for d in 1..=3usize {
        let res = if d == 3 { 96 } else { 512 };
        let edge = 2.0 * d as f64;
        let grid: Vec<f64> = (0..=40)
            .map(|k| -edge - 0.5 + (2.0 * edge + 1.0) * k as f64 / 40.0)
            .collect();
        let vals = grid
            .iter()
            .map(|&e| n0_quadrature(d, e, res))
            .collect::<Result<Vec<f64>>>()?;
        let monotone = vals.windows(2).all(|w| w[0] <= w[1]);
        let edges = vals[0] == 0.0 && vals[vals.len() - 1] == 1.0;
        let sym = [0.3, 0.77, 1.4]
            .iter()
            .map(|&e| Ok((n0_quadrature(d, e, res)? + n0_quadrature(d, -e, res)? - 1.0).abs()))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        out.push(check(
            &format!("free_ids_monotone_d{d}"),
            monotone,
            String::new(),
        ));
        out.push(check(
            &format!("free_ids_edges_d{d}"),
            edges,
            format!("{} {}", vals[0], vals[vals.len() - 1]),
        ));
        out.push(check(
            &format!("free_ids_symmetry_d{d}"),
            sym <= 1e-12,
            format!("max_dev={sym:e}"),
        ));
    }
    let quad = free_grid_1d()
        .iter()
        .map(|&e| Ok((n0_quadrature(1, e, 4096)? - n0_exact_1d(e)).abs()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    out.push(check(
        "free_ids_quadrature_vs_closed_form",
        quad <= 1e-3,
        format!("max_abs_dev={quad:e}"),
    ));
    Ok(out)
}
