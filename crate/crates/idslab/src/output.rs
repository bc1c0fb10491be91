//! CSV and JSON renderers. Every CSV starts with a `# config_hash=... seed=...`
//! comment line, then a header row in the fixed column order.

use idslab_core::analysis::{CombesThomasFit, HolderFit, WeakDisorderTable};
use idslab_core::dos_series::DosSeriesResult;
use idslab_core::estimator::{IdsEstimate, IdsSurface, WegnerResult};
use idslab_core::free_ids::FreeIdsTable;
use idslab_core::ModelSpec;
use serde::Serialize;

/// Provenance written at the top of each CSV.
#[derive(Debug, Clone, Copy)]
pub struct Provenance<'a> {
    pub config_hash: &'a str,
    pub seed: u64,
}

fn num(x: f64) -> String {
    // Shortest round-trip form; stable across platforms.
    format!("{x:?}")
}

fn csv_bytes<const N: usize>(
    p: Provenance<'_>,
    header: [&str; N],
    rows: impl IntoIterator<Item = [String; N]>,
) -> Vec<u8> {
    let mut buf = format!("# config_hash={} seed={}\n", p.config_hash, p.seed).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header).expect("in-memory write");
        for row in rows {
            w.write_record(&row).expect("in-memory write");
        }
        w.flush().expect("in-memory write");
    }
    buf
}

const IDS_HEADER: [&str; 9] = [
    "lambda", "E", "mean", "stderr", "R", "L", "d", "boundary", "seed",
];

fn ids_row(m: &ModelSpec, lambda: f64, e: f64, mean: f64, se: f64, r: u64) -> [String; 9] {
    [
        num(lambda),
        num(e),
        num(mean),
        num(se),
        r.to_string(),
        m.lattice.size.to_string(),
        m.lattice.dimension.to_string(),
        m.lattice.boundary.as_str().to_string(),
        m.disorder.master_seed.to_string(),
    ]
}

pub fn ids_csv(p: Provenance<'_>, est: &IdsEstimate) -> Vec<u8> {
    let m = &est.model;
    let rows = (0..est.energies.len()).map(|i| {
        ids_row(
            m,
            m.lambda,
            est.energies[i],
            est.mean[i],
            est.stderr[i],
            est.realizations,
        )
    });
    csv_bytes(p, IDS_HEADER, rows)
}

/// Rows in `lambda`-major order. `model` supplies the lattice and seed columns.
pub fn surface_csv(p: Provenance<'_>, model: &ModelSpec, s: &IdsSurface) -> Vec<u8> {
    let rows = s.lambdas.iter().enumerate().flat_map(|(i, &l)| {
        (0..s.energies.len()).map(move |j| {
            ids_row(
                model,
                l,
                s.energies[j],
                s.mean[i][j],
                s.stderr[i][j],
                s.realizations,
            )
        })
    });
    csv_bytes(p, IDS_HEADER, rows)
}

pub fn free_ids_csv(p: Provenance<'_>, t: &FreeIdsTable) -> Vec<u8> {
    csv_bytes(
        p,
        ["E", "N0"],
        t.energies
            .iter()
            .zip(&t.values)
            .map(|(e, v)| [num(*e), num(*v)]),
    )
}

pub fn modulus_csv(p: Provenance<'_>, pairs: &[(f64, f64)]) -> Vec<u8> {
    csv_bytes(p, ["h", "m"], pairs.iter().map(|(h, m)| [num(*h), num(*m)]))
}

pub fn wegner_csv(p: Provenance<'_>, w: &WegnerResult) -> Vec<u8> {
    let rows = (0..w.etas.len()).map(|i| {
        [
            num(w.etas[i]),
            num(w.prob[i]),
            num(w.stderr[i]),
            w.realizations.to_string(),
            w.volume.to_string(),
        ]
    });
    csv_bytes(p, ["eta", "prob", "stderr", "R", "volume"], rows)
}

pub fn weak_disorder_csv(p: Provenance<'_>, t: &WeakDisorderTable) -> Vec<u8> {
    let rows = t
        .rows
        .iter()
        .map(|r| [num(r.lambda), num(r.deviation), num(r.stderr)]);
    csv_bytes(p, ["lambda", "deviation", "stderr"], rows)
}

pub fn ct_decay_csv(p: Provenance<'_>, f: &CombesThomasFit) -> Vec<u8> {
    csv_bytes(
        p,
        ["k", "abs_g"],
        f.decay.iter().map(|(k, g)| [k.to_string(), num(*g)]),
    )
}

pub fn dos_series_csv(p: Provenance<'_>, r: &DosSeriesResult) -> Vec<u8> {
    let rows = r
        .terms
        .iter()
        .enumerate()
        .map(|(k, t)| [k.to_string(), num(t.re), num(t.im), num(t.stderr)]);
    csv_bytes(p, ["k", "re", "im", "stderr"], rows)
}

pub fn selftest_csv(p: Provenance<'_>, checks: &[(String, bool, String)]) -> Vec<u8> {
    let rows = checks
        .iter()
        .map(|(name, pass, detail)| [name.clone(), pass.to_string(), detail.clone()]);
    csv_bytes(p, ["check", "pass", "detail"], rows)
}

/// Theorem verdict report. The first six keys are fixed; the rest describe the fit.
#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub theorem: &'static str,
    pub window: Option<(f64, f64)>,
    pub q_guaranteed: Option<f64>,
    pub q_hat: Option<f64>,
    pub ci: Option<f64>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_squared: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_pairs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub narrow_span: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_dominated: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub criterion: Option<String>,
}

impl Verdict {
    pub fn new(theorem: &'static str, pass: bool) -> Self {
        Self {
            theorem,
            window: None,
            q_guaranteed: None,
            q_hat: None,
            ci: None,
            pass,
            r_squared: None,
            n_pairs: None,
            narrow_span: None,
            noise_dominated: None,
            criterion: None,
        }
    }

    pub fn from_fit(theorem: &'static str, fit: &HolderFit, q_guaranteed: f64, pass: bool) -> Self {
        Self {
            window: fit.window,
            q_guaranteed: Some(q_guaranteed),
            q_hat: Some(fit.exponent),
            ci: Some(fit.ci),
            r_squared: Some(fit.r_squared),
            n_pairs: Some(fit.n_pairs),
            narrow_span: Some(fit.narrow_span),
            noise_dominated: Some(fit.noise_dominated),
            ..Self::new(theorem, pass)
        }
    }
}

pub fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("serializable summary");
    v.push(b'\n');
    v
}
