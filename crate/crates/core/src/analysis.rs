//! Power-law fits of moduli of continuity and the theorem checks built on them.
//!
//! The continuity theorems bound `|N(E) - N(E')|` (resp. in `lambda`) from
//! above by `C |E - E'|^q`. An upper bound cannot pin an exponent from
//! above, so a check passes when the fitted exponent, less its
//! leave-one-out spread, is at least the guaranteed one.

use alloc::format;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::estimator::{IdsEstimate, IdsSurface};
use crate::free_ids::in_window;
use crate::lattice::{build_h0, Boundary, LatticeSpec, PeriodicPotential};
use crate::spectral::Resolvent;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Variable {
    Energy,
    Disorder,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HolderFit {
    pub exponent: f64,
    /// Intercept of the log-log fit, i.e. `ln C`.
    pub log_constant: f64,
    pub r_squared: f64,
    pub n_pairs: usize,
    /// Largest leave-one-out change of the slope.
    pub ci: f64,
    pub window: Option<(f64, f64)>,
    pub variable: Option<Variable>,
    /// Separations span less than a decade.
    pub narrow_span: bool,
    /// Some increment is below three standard errors of the data.
    pub noise_dominated: bool,
}

impl HolderFit {
    /// `exponent - ci`.
    pub fn lower_bound(&self) -> f64 {
        self.exponent - self.ci
    }
}

/// Exponents guaranteed by the continuity theorems:
/// `q = q1 q* / (q1 + 2)` in energy and `q2 = 2q / (q + 3)` in disorder.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TheoremExponents {
    pub q1_input: f64,
    pub q_star: f64,
    pub q_guaranteed: f64,
    pub q2_guaranteed: f64,
}

pub fn compute_guaranteed_exponents(q1: f64, q_star: f64) -> Result<TheoremExponents> {
    if !(q1 > 0.0 && q1 <= 1.0) {
        return Err(Error::InvalidQuery(format!(
            "q1 must lie in (0, 1], got {q1}"
        )));
    }
    if !(q_star > 0.0 && q_star <= 1.0) {
        return Err(Error::InvalidQuery(format!(
            "q* must lie in (0, 1], got {q_star}"
        )));
    }
    let q = q1 * q_star / (q1 + 2.0);
    Ok(TheoremExponents {
        q1_input: q1,
        q_star,
        q_guaranteed: q,
        q2_guaranteed: 2.0 * q / (q + 3.0),
    })
}

struct Line {
    slope: f64,
    intercept: f64,
    r_squared: f64,
}

fn ols(x: &[f64], y: &[f64]) -> Option<Line> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0f64 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Some(Line {
        slope,
        intercept,
        r_squared,
    })
}

/// Least squares of `ln m` on `ln h`. Pairs with `m = 0` are dropped.
pub fn fit_power_law(pairs: &[(f64, f64)]) -> Result<HolderFit> {
    for &(h, m) in pairs {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidQuery(format!(
                "separation {h} must be positive and finite"
            )));
        }
        if !(m >= 0.0 && m.is_finite()) {
            return Err(Error::InvalidQuery(format!(
                "increment {m} must be finite and >= 0"
            )));
        }
    }
    let kept: Vec<(f64, f64)> = pairs
        .iter()
        .filter(|p| p.1 > 0.0)
        .map(|&(h, m)| (libm::log(h), libm::log(m)))
        .collect();
    if kept.len() < 3 {
        return Err(Error::Degenerate(format!(
            "{} nonzero increments, need >= 3; exponent undefined",
            kept.len()
        )));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = kept.iter().copied().unzip();
    let line = ols(&x, &y).ok_or_else(|| Error::Degenerate("all separations equal".into()))?;
    let mut ci: f64 = 0.0;
    for skip in 0..x.len() {
        let xs: Vec<f64> = x
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != skip)
            .map(|(_, v)| *v)
            .collect();
        let ys: Vec<f64> = y
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != skip)
            .map(|(_, v)| *v)
            .collect();
        if let Some(l) = ols(&xs, &ys) {
            ci = ci.max((l.slope - line.slope).abs());
        }
    }
    let (xmin, xmax) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    Ok(HolderFit {
        exponent: line.slope,
        log_constant: line.intercept,
        r_squared: line.r_squared,
        n_pairs: kept.len(),
        ci,
        window: None,
        variable: None,
        narrow_span: xmax - xmin < core::f64::consts::LN_10,
        noise_dominated: false,
    })
}

/// Doubling separations `step, 2 step, 4 step, ...` up to half of `width`.
pub fn dyadic_separations(step: f64, width: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut h = step;
    while h <= 0.5 * width * (1.0 + 1e-9) {
        out.push(h);
        h *= 2.0;
    }
    out
}

/// Sup-modulus of continuity: for each separation `h`, the largest
/// `|f(x) - f(x')|` over grid pairs inside `window` with `|x - x'| = h`.
pub fn modulus_of_continuity(
    grid: &[f64],
    values: &[f64],
    window: (f64, f64),
    separations: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let idx: Vec<usize> = (0..grid.len())
        .filter(|&i| in_window(grid[i], window))
        .collect();
    let mut out = Vec::with_capacity(separations.len());
    for &h in separations {
        let tol = 1e-9 * (1.0 + h.abs());
        let mut best: Option<f64> = None;
        for (a, &i) in idx.iter().enumerate() {
            for &j in &idx[a + 1..] {
                let gap = grid[j] - grid[i];
                if gap > h + tol {
                    break;
                }
                if (gap - h).abs() <= tol {
                    let m = (values[j] - values[i]).abs();
                    best = Some(best.map_or(m, |b: f64| b.max(m)));
                }
            }
        }
        let m = best.ok_or_else(|| {
            Error::InvalidQuery(format!("separation {h} not realizable on the grid"))
        })?;
        out.push((h, m));
    }
    Ok(out)
}

/// Hoelder exponent of `E -> N(E)` on `window`.
pub fn holder_in_energy(
    est: &IdsEstimate,
    window: (f64, f64),
    separations: &[f64],
) -> Result<HolderFit> {
    if window.0 >= window.1 {
        return Err(Error::InvalidQuery("empty window".into()));
    }
    let covered = est.energies.first().is_some_and(|&e| e <= window.0 + 1e-12)
        && est.energies.last().is_some_and(|&e| e >= window.1 - 1e-12);
    if !covered {
        return Err(Error::InvalidQuery(
            "window not covered by the energy grid".into(),
        ));
    }
    let pairs = modulus_of_continuity(&est.energies, &est.mean, window, separations)?;
    let max_se = est
        .energies
        .iter()
        .zip(&est.stderr)
        .filter(|(e, _)| in_window(**e, window))
        .fold(0.0f64, |m, (_, s)| m.max(*s));
    let mut fit = fit_power_law(&pairs)?;
    fit.noise_dominated = pairs.iter().any(|&(_, m)| m < 3.0 * max_se);
    fit.window = Some(window);
    fit.variable = Some(Variable::Energy);
    Ok(fit)
}

fn energy_column(energies: &[f64], e: f64) -> Result<usize> {
    energies
        .iter()
        .position(|&x| (x - e).abs() <= 1e-9 * (1.0 + e.abs()))
        .ok_or_else(|| Error::InvalidQuery(format!("energy {e} is not on the grid")))
}

/// Hoelder exponent of `lambda -> N_lambda(E)` over all pairs of rows.
pub fn holder_in_disorder(surface: &IdsSurface, e: f64) -> Result<HolderFit> {
    let col = energy_column(&surface.energies, e)?;
    let mut distinct: Vec<f64> = surface.lambdas.clone();
    distinct.dedup();
    if distinct.len() < 4 {
        return Err(Error::InvalidQuery(format!(
            "need >= 4 distinct lambda values, got {}",
            distinct.len()
        )));
    }
    let mut pairs = Vec::new();
    let mut max_se: f64 = 0.0;
    for i in 0..surface.lambdas.len() {
        max_se = max_se.max(surface.stderr[i][col]);
        for j in i + 1..surface.lambdas.len() {
            let h = (surface.lambdas[j] - surface.lambdas[i]).abs();
            if h > 0.0 {
                pairs.push((h, (surface.mean[j][col] - surface.mean[i][col]).abs()));
            }
        }
    }
    let mut fit = fit_power_law(&pairs)?;
    fit.noise_dominated = pairs.iter().any(|&(_, m)| m < 3.0 * max_se);
    fit.window = Some((distinct[0], distinct[distinct.len() - 1]));
    fit.variable = Some(Variable::Disorder);
    Ok(fit)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeakDisorderRow {
    pub lambda: f64,
    pub deviation: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeakDisorderTable {
    pub energy: f64,
    pub n0_ref: f64,
    /// Ascending in `lambda`.
    pub rows: Vec<WeakDisorderRow>,
    /// Deviations shrink as `lambda` decreases, within two combined standard errors.
    pub converges: bool,
    /// Power-law fit of deviation against `lambda > 0`, when one exists.
    pub decay_fit: Option<HolderFit>,
}

/// `|N_lambda(E) - N_0(E)|` per row. `n0_ref` defaults to the `lambda = 0` row.
pub fn weak_disorder_table(
    surface: &IdsSurface,
    e: f64,
    n0_ref: Option<f64>,
) -> Result<WeakDisorderTable> {
    let col = energy_column(&surface.energies, e)?;
    let n0 = match n0_ref {
        Some(v) => v,
        None => {
            let row = surface
                .lambdas
                .iter()
                .position(|&l| l == 0.0)
                .ok_or_else(|| {
                    Error::InvalidQuery("no lambda = 0 row and no reference N0 supplied".into())
                })?;
            surface.mean[row][col]
        }
    };
    let mut rows: Vec<WeakDisorderRow> = surface
        .lambdas
        .iter()
        .enumerate()
        .map(|(i, &lambda)| WeakDisorderRow {
            lambda,
            deviation: (surface.mean[i][col] - n0).abs(),
            stderr: surface.stderr[i][col],
        })
        .collect();
    rows.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    let converges = rows.windows(2).all(|w| {
        let combined = libm::sqrt(w[0].stderr * w[0].stderr + w[1].stderr * w[1].stderr);
        w[0].deviation <= w[1].deviation + 2.0 * combined
    });
    let decay: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.lambda > 0.0)
        .map(|r| (r.lambda, r.deviation))
        .collect();
    let decay_fit = fit_power_law(&decay).ok().map(|mut f| {
        f.variable = Some(Variable::Disorder);
        f
    });
    Ok(WeakDisorderTable {
        energy: e,
        n0_ref: n0,
        rows,
        converges,
        decay_fit,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CombesThomasFit {
    pub energy: f64,
    /// `d0(E) = |E| - 2d`.
    pub d0: f64,
    pub rate: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    /// `|<x0|R0(E)|x0 + k e>|` for `k = 1..=max_range`.
    pub decay: Vec<(usize, f64)>,
    /// `rate >= d0 / 2`.
    pub pass: bool,
}

/// Exponential decay rate of the free resolvent along one lattice axis,
/// from the centre of a Dirichlet box of side `l`.
pub fn combes_thomas_fit(d: usize, e: f64, max_range: usize, l: usize) -> Result<CombesThomasFit> {
    let d0 = e.abs() - 2.0 * d as f64;
    if !(d0 > 0.0) {
        return Err(Error::InvalidQuery(format!(
            "E = {e} lies inside the free spectrum [-{0}, {0}]",
            2 * d
        )));
    }
    if max_range < 2 {
        return Err(Error::InvalidQuery("max_range must be >= 2".into()));
    }
    if l < 4 * max_range {
        return Err(Error::InvalidQuery(format!(
            "box side {l} must be >= 4 * max_range = {}",
            4 * max_range
        )));
    }
    let lattice = LatticeSpec::new(d, l, Boundary::Dirichlet)?;
    let h0 = build_h0(&lattice, &PeriodicPotential::zero(d))?;
    let x0 = lattice.center();
    let column = Resolvent::new(&h0, Complex64::new(e, 0.0))?.column(x0);
    let decay: Vec<(usize, f64)> = (1..=max_range)
        .map(|k| (k, column[x0 + k].norm()))
        .collect();
    if decay.iter().any(|&(_, g)| !(g > 0.0)) {
        return Err(Error::Degenerate(
            "resolvent element underflowed to zero".into(),
        ));
    }
    let x: Vec<f64> = decay.iter().map(|&(k, _)| k as f64).collect();
    let y: Vec<f64> = decay.iter().map(|&(_, g)| libm::log(g)).collect();
    let line = ols(&x, &y).ok_or_else(|| Error::Degenerate("decay fit".into()))?;
    let rate = -line.slope;
    Ok(CombesThomasFit {
        energy: e,
        d0,
        rate,
        prefactor: libm::exp(line.intercept),
        r_squared: line.r_squared,
        decay,
        pass: rate >= 0.5 * d0,
    })
}
