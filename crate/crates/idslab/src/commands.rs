//! Command dispatch: compute in memory, then write outputs and the run record.

use std::path::PathBuf;
use std::time::Instant;

use idslab_core::analysis::{
    combes_thomas_fit, compute_guaranteed_exponents, fit_power_law, holder_in_disorder,
    holder_in_energy, modulus_of_continuity, weak_disorder_table,
};
use idslab_core::dos_series::{dos_series_run, SeriesRun};
use idslab_core::estimator::{estimate_ids, estimate_surface, wegner_probability};
use idslab_core::free_ids::FreeIdsTable;
use idslab_core::ModelSpec;
use serde::Serialize;

use crate::config::{RunConfig, Task};
use crate::error::{ComputeContext, RunError};
use crate::output::{self, Provenance, Verdict};
use crate::parallel::{with_threads, Parallel};
use crate::record::{config_hash, write_files, Cache, Outputs, RunRecord, RECORD_FILE};
use crate::selftest;

/// Quadrature resolution for free-IDS references in d >= 2.
const FREE_IDS_RESOLUTION: usize = 2048;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses every core.
    pub threads: Option<usize>,
    /// Overrides the config's `output_dir`.
    pub out_dir: Option<PathBuf>,
    /// Defaults to `IDSLAB_CACHE_DIR` or `./.idslab-cache`.
    pub cache_dir: Option<PathBuf>,
    /// `false` disables the cache regardless of the config.
    pub use_cache: bool,
}

impl RunOptions {
    pub fn new() -> Self {
        Self {
            use_cache: true,
            ..Self::default()
        }
    }
}

/// Output directory: option, then config, then `idslab-out/<command>-<hash>`.
pub fn output_dir(config: &RunConfig, opts: &RunOptions, hash: &str) -> PathBuf {
    opts.out_dir
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("idslab-out").join(format!("{}-{hash}", config.command)))
}

/// Runs `config`, writing outputs and `run_record.json` into the output directory.
pub fn run(config: &RunConfig, opts: &RunOptions) -> Result<RunRecord, RunError> {
    let hash = config_hash(config);
    let out_dir = output_dir(config, opts, &hash);
    let cache = (opts.use_cache && config.cache).then(|| {
        Cache::new(
            opts.cache_dir
                .clone()
                .unwrap_or_else(crate::record::default_cache_dir),
        )
    });

    if let Some((mut record, outputs)) = cache.as_ref().and_then(|c| c.load(&hash)) {
        write_files(&out_dir, &outputs)?;
        record.cached = true;
        write_record(&out_dir, &record)?;
        return Ok(record);
    }

    let start = Instant::now();
    let outputs = with_threads(opts.threads, || compute(config, &hash))?;
    let record = RunRecord {
        config_hash: hash,
        artifact_version: crate::ARTIFACT_VERSION.into(),
        command: config.command.as_str().into(),
        wall_time: start.elapsed().as_secs_f64(),
        files: outputs.manifest(),
        cached: false,
        verdict: outputs.verdict,
    };
    write_files(&out_dir, &outputs)?;
    if let Err(e) = write_record(&out_dir, &record) {
        for (name, _) in &outputs.files {
            let _ = std::fs::remove_file(out_dir.join(name));
        }
        return Err(e);
    }
    if let Some(c) = &cache {
        c.store(&record, &outputs)?;
    }
    Ok(record)
}

fn write_record(dir: &std::path::Path, record: &RunRecord) -> Result<(), RunError> {
    let path = dir.join(RECORD_FILE);
    std::fs::write(&path, output::json(record)).map_err(RunError::io(path))
}

#[derive(Serialize)]
struct Summary<'a, T: Serialize> {
    command: &'static str,
    config_hash: &'a str,
    artifact_version: &'static str,
    model: Option<&'a ModelSpec>,
    #[serde(flatten)]
    details: T,
}

fn summary<T: Serialize>(config: &RunConfig, hash: &str, details: T) -> Vec<u8> {
    output::json(&Summary {
        command: config.command.as_str(),
        config_hash: hash,
        artifact_version: crate::ARTIFACT_VERSION,
        model: config.model.as_ref(),
        details,
    })
}

/// All computation happens here; nothing touches the filesystem.
pub fn compute(config: &RunConfig, hash: &str) -> Result<Outputs, RunError> {
    let runner = Parallel;
    let seed = config.seed().unwrap_or(0);
    let prov = Provenance {
        config_hash: hash,
        seed,
    };
    let mut out = Outputs::default();
    let model = || {
        config
            .model
            .as_ref()
            .expect("validated config carries a model")
    };

    match &config.task {
        Task::Ids {
            energies,
            realizations,
        } => {
            let m = model();
            let est = estimate_ids(m, energies, *realizations, &runner).module("estimator")?;
            out.add("ids.csv", output::ids_csv(prov, &est));
            let mut n0_max_abs_dev = None;
            if m.lambda == 0.0 && m.background.is_zero() {
                let table = FreeIdsTable::reference(
                    m.lattice.dimension,
                    energies.clone(),
                    FREE_IDS_RESOLUTION,
                )
                .module("free_ids")?;
                n0_max_abs_dev = Some(
                    est.mean
                        .iter()
                        .zip(&table.values)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max),
                );
                out.add("free_ids.csv", output::free_ids_csv(prov, &table));
            }
            #[derive(Serialize)]
            struct D {
                realizations: u64,
                max_jitter: f64,
                #[serde(skip_serializing_if = "Option::is_none")]
                n0_max_abs_dev: Option<f64>,
            }
            let d = D {
                realizations: est.realizations,
                max_jitter: est.max_jitter,
                n0_max_abs_dev,
            };
            out.add("summary.json", summary(config, hash, d));
        }
        Task::Surface {
            energies,
            lambdas,
            realizations,
            couple_seeds,
        } => {
            let m = model();
            let s = estimate_surface(m, energies, lambdas, *realizations, *couple_seeds, &runner)
                .module("estimator")?;
            out.add("surface.csv", output::surface_csv(prov, m, &s));
            #[derive(Serialize)]
            struct D {
                realizations: u64,
                couple_seeds: bool,
            }
            out.add(
                "summary.json",
                summary(
                    config,
                    hash,
                    D {
                        realizations: s.realizations,
                        couple_seeds: s.couple_seeds,
                    },
                ),
            );
        }
        Task::HolderE {
            energies,
            realizations,
            window,
            separations,
            q1,
            q_star,
        } => {
            let m = model();
            let ex = compute_guaranteed_exponents(*q1, *q_star).module("analysis")?;
            let est = estimate_ids(m, energies, *realizations, &runner).module("estimator")?;
            let pairs = modulus_of_continuity(&est.energies, &est.mean, *window, separations)
                .module("analysis")?;
            let fit = holder_in_energy(&est, *window, separations).module("analysis")?;
            let pass = fit.lower_bound() >= ex.q_guaranteed;
            out.add("ids.csv", output::ids_csv(prov, &est));
            out.add("modulus.csv", output::modulus_csv(prov, &pairs));
            out.add(
                "verdict.json",
                output::json(&Verdict::from_fit(
                    "holder_energy",
                    &fit,
                    ex.q_guaranteed,
                    pass,
                )),
            );
            out.verdict = Some(pass);
        }
        Task::HolderLambda {
            lambdas,
            energy,
            realizations,
            couple_seeds,
            q1,
            q_star,
        } => {
            let m = model();
            let ex = compute_guaranteed_exponents(*q1, *q_star).module("analysis")?;
            let s = estimate_surface(
                m,
                &[*energy],
                lambdas,
                *realizations,
                *couple_seeds,
                &runner,
            )
            .module("estimator")?;
            let fit = holder_in_disorder(&s, *energy).module("analysis")?;
            let pass = fit.lower_bound() >= ex.q2_guaranteed;
            out.add("surface.csv", output::surface_csv(prov, m, &s));
            out.add(
                "verdict.json",
                output::json(&Verdict::from_fit(
                    "holder_disorder",
                    &fit,
                    ex.q2_guaranteed,
                    pass,
                )),
            );
            out.verdict = Some(pass);
        }
        Task::WeakDisorder {
            lambdas,
            energy,
            realizations,
            couple_seeds,
            n0_ref,
            max_deviation,
        } => {
            let m = model();
            let s = estimate_surface(
                m,
                &[*energy],
                lambdas,
                *realizations,
                *couple_seeds,
                &runner,
            )
            .module("estimator")?;
            let reference = match n0_ref {
                Some(v) => Some(*v),
                None if lambdas.contains(&0.0) => None,
                None if m.background.is_zero() => Some(
                    FreeIdsTable::reference(
                        m.lattice.dimension,
                        vec![*energy],
                        FREE_IDS_RESOLUTION,
                    )
                    .module("free_ids")?
                    .values[0],
                ),
                None => {
                    return Err(RunError::Compute {
                        module: "analysis",
                        source: idslab_core::Error::InvalidQuery(
                            "no lambda = 0 row and no n0_ref for a nonzero background".into(),
                        ),
                    })
                }
            };
            let table = weak_disorder_table(&s, *energy, reference).module("analysis")?;
            let smallest = table
                .rows
                .iter()
                .find(|r| r.lambda > 0.0)
                .or(table.rows.first());
            let within = match (max_deviation, smallest) {
                (Some(tol), Some(r)) => r.deviation <= tol + 2.0 * r.stderr,
                _ => true,
            };
            let pass = table.converges && within;
            let mut v = Verdict::new("weak_disorder", pass);
            v.window = Some((lambdas[0], lambdas[lambdas.len() - 1]));
            if let Some(f) = &table.decay_fit {
                v.q_hat = Some(f.exponent);
                v.ci = Some(f.ci);
                v.r_squared = Some(f.r_squared);
                v.n_pairs = Some(f.n_pairs);
            }
            v.criterion = Some(match max_deviation {
                Some(tol) => format!(
                    "deviation from N0 = {} nonincreasing as lambda decreases (2 combined stderr); smallest-lambda deviation <= {tol} + 2 stderr",
                    table.n0_ref
                ),
                None => format!("deviation from N0 = {} nonincreasing as lambda decreases (2 combined stderr)", table.n0_ref),
            });
            out.add("surface.csv", output::surface_csv(prov, m, &s));
            out.add("weak_disorder.csv", output::weak_disorder_csv(prov, &table));
            out.add("verdict.json", output::json(&v));
            out.verdict = Some(pass);
        }
        Task::Wegner {
            energy,
            etas,
            realizations,
            slope_min,
            slope_max,
        } => {
            let m = model();
            let w =
                wegner_probability(m, *energy, etas, *realizations, &runner).module("estimator")?;
            let pairs: Vec<(f64, f64)> =
                w.etas.iter().copied().zip(w.prob.iter().copied()).collect();
            let fit = fit_power_law(&pairs).module("analysis")?;
            let pass = fit.exponent >= *slope_min && fit.exponent <= *slope_max;
            let mut v = Verdict::from_fit("wegner", &fit, *slope_min, pass);
            v.window = Some((etas[etas.len() - 1], etas[0]));
            v.criterion = Some(format!(
                "log-log slope of P(dist <= eta) in [{slope_min}, {slope_max}]"
            ));
            out.add("wegner.csv", output::wegner_csv(prov, &w));
            out.add("verdict.json", output::json(&v));
            out.verdict = Some(pass);
        }
        Task::CtDecay { energy, max_range } => {
            let m = model();
            let f = combes_thomas_fit(m.lattice.dimension, *energy, *max_range, m.lattice.size)
                .module("analysis")?;
            let mut v = Verdict::new("combes_thomas", f.pass);
            v.window = Some((1.0, *max_range as f64));
            v.q_guaranteed = Some(f.d0 / 2.0);
            v.q_hat = Some(f.rate);
            v.r_squared = Some(f.r_squared);
            v.n_pairs = Some(f.decay.len());
            v.criterion = Some("decay rate >= d0/2".into());
            out.add("ct_decay.csv", output::ct_decay_csv(prov, &f));
            out.add("verdict.json", output::json(&v));
            out.verdict = Some(f.pass);
        }
        Task::DosSeries {
            energy,
            epsilon,
            order,
            box_size,
            realizations,
            c1,
            allow_divergent,
        } => {
            let m = model();
            let run = SeriesRun {
                energy: *energy,
                epsilon: *epsilon,
                order: *order,
                box_size: *box_size,
                realizations: *realizations,
            };
            let r = dos_series_run(m, &run, *c1, *allow_divergent, &runner).module("dos_series")?;
            let k = r.order();
            let agree = r.gap(k) <= 3.0 * r.combined_stderr(k);
            let t1_null = r.terms.get(1).is_none_or(|t| t.is_null());
            let pass = agree && t1_null;
            let mut v = Verdict::new("neumann_series", pass);
            v.q_hat = Some(r.gap(k));
            v.ci = Some(3.0 * r.combined_stderr(k));
            v.criterion =
                Some("|partial_sum[K] - direct| <= 3 combined stderr and |T_1| <= 3 stderr".into());
            #[derive(Serialize)]
            struct D<'a> {
                energy: f64,
                epsilon: f64,
                box_size: usize,
                realizations: u64,
                convergence: &'a idslab_core::dos_series::ConvergenceCheck,
                partial_sums: &'a [idslab_core::dos_series::ComplexEstimate],
                direct: &'a idslab_core::dos_series::ComplexEstimate,
                difference_stderr: &'a [f64],
                dos_convention: &'static str,
                dos_series_raw: f64,
                dos_series_over_pi: f64,
                dos_direct_raw: f64,
                dos_direct_over_pi: f64,
            }
            let d = D {
                energy: r.energy,
                epsilon: r.epsilon,
                box_size: r.box_size,
                realizations: r.realizations,
                convergence: &r.convergence,
                partial_sums: &r.partial_sums,
                direct: &r.direct,
                difference_stderr: &r.difference_stderr,
                dos_convention: "raw = Im <0|(H - E - i eps)^-1|0>; over_pi = raw / pi",
                dos_series_raw: r.dos_series_raw(),
                dos_series_over_pi: r.dos_series_normalized(),
                dos_direct_raw: r.dos_direct_raw(),
                dos_direct_over_pi: r.dos_direct_normalized(),
            };
            out.add("dos_series.csv", output::dos_series_csv(prov, &r));
            out.add("summary.json", summary(config, hash, d));
            out.add("verdict.json", output::json(&v));
            out.verdict = Some(pass);
        }
        Task::Selftest { models } => {
            let oracle = selftest::oracle_equivalence(*models, seed, &runner).module("spectral")?;
            let mut checks = vec![selftest::Check {
                name: "oracle_equivalence".into(),
                pass: oracle.pass(),
                detail: format!(
                    "models={} comparisons={} mismatches={} max_jitter={:e}",
                    oracle.models,
                    oracle.comparisons,
                    oracle.mismatches.len(),
                    oracle.max_jitter
                ),
            }];
            checks.extend(selftest::free_ids_invariants(&runner).module("free_ids")?);
            let rows: Vec<(String, bool, String)> = checks
                .iter()
                .map(|c| (c.name.clone(), c.pass, c.detail.clone()))
                .collect();
            let pass = checks.iter().all(|c| c.pass);
            out.add("selftest.csv", output::selftest_csv(prov, &rows));
            out.verdict = Some(pass);
        }
    }
    Ok(out)
}
