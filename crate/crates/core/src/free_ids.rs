//! Reference IDS `N0(E)` of the free adjacency operator on `Z^d`.
//!
//! With dispersion `sum_i 2 cos(theta_i)`,
//! `N0(E) = (2 pi)^-d * vol{theta in [-pi, pi]^d : sum_i 2 cos(theta_i) <= E}`.
//! In one dimension this is `arccos(-E/2) / pi`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::analysis::{
    dyadic_separations, fit_power_law, modulus_of_continuity, HolderFit, Variable,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FreeIdsMethod {
    ClosedForm1d,
    Quadrature,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FreeIdsTable {
    pub dimension: usize,
    pub energies: Vec<f64>,
    pub values: Vec<f64>,
    pub method: FreeIdsMethod,
}

/// `arccos(-E/2) / pi`, clamped to 0 below the band and 1 above it.
pub fn n0_exact_1d(e: f64) -> f64 {
    if e <= -2.0 {
        0.0
    } else if e >= 2.0 {
        1.0
    } else {
        libm::acos(-0.5 * e) / PI
    }
}

fn midpoint_dispersion(resolution: usize) -> Vec<f64> {
    let h = 2.0 * PI / resolution as f64;
    let mut c: Vec<f64> = (0..resolution)
        .map(|k| 2.0 * libm::cos(-PI + (k as f64 + 0.5) * h))
        .collect();
    c.sort_by(f64::total_cmp);
    c
}

/// Midpoint-rule quadrature of the level-set volume on a `resolution^d` grid.
/// The error is `O(1 / resolution)`.
pub fn n0_quadrature(d: usize, e: f64, resolution: usize) -> Result<f64> {
    if !(1..=3).contains(&d) {
        return Err(Error::InvalidQuery(alloc::format!(
            "quadrature dimension must be 1..=3, got {d}"
        )));
    }
    if resolution < 64 {
        return Err(Error::InvalidQuery(alloc::format!(
            "resolution must be >= 64, got {resolution}"
        )));
    }
    if e >= 2.0 * d as f64 {
        return Ok(1.0);
    }
    let c = midpoint_dispersion(resolution);
    let below = |t: f64| c.partition_point(|&x| x <= t) as u64;
    let count: u64 = match d {
        1 => below(e),
        2 => c.iter().map(|&a| below(e - a)).sum(),
        _ => c
            .iter()
            .flat_map(|&a| c.iter().map(move |&b| a + b))
            .map(|ab| below(e - ab))
            .sum(),
    };
    Ok(count as f64 / libm::pow(resolution as f64, d as f64))
}

impl FreeIdsTable {
    pub fn exact_1d(energies: Vec<f64>) -> Result<Self> {
        check_grid(&energies)?;
        let values = energies.iter().map(|&e| n0_exact_1d(e)).collect();
        Ok(Self {
            dimension: 1,
            energies,
            values,
            method: FreeIdsMethod::ClosedForm1d,
        })
    }

    pub fn quadrature(d: usize, energies: Vec<f64>, resolution: usize) -> Result<Self> {
        check_grid(&energies)?;
        let values = energies
            .iter()
            .map(|&e| n0_quadrature(d, e, resolution))
            .collect::<Result<_>>()?;
        Ok(Self {
            dimension: d,
            energies,
            values,
            method: FreeIdsMethod::Quadrature,
        })
    }

    /// Closed form in one dimension, quadrature otherwise.
    pub fn reference(d: usize, energies: Vec<f64>, resolution: usize) -> Result<Self> {
        if d == 1 {
            Self::exact_1d(energies)
        } else {
            Self::quadrature(d, energies, resolution)
        }
    }
}

fn check_grid(energies: &[f64]) -> Result<()> {
    if energies.iter().any(|e| !e.is_finite()) || energies.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidQuery(
            "energy grid must be finite and strictly ascending".into(),
        ));
    }
    Ok(())
}

/// Local Hoelder exponent of `N0` on `window`: a power-law fit of the
/// sup-modulus of continuity at dyadic multiples of the grid step.
pub fn measure_q1(table: &FreeIdsTable, window: (f64, f64)) -> Result<HolderFit> {
    let d = table.dimension as f64;
    if window.0 < -2.0 * d - 1e-12 || window.1 > 2.0 * d + 1e-12 || window.0 >= window.1 {
        return Err(Error::InvalidQuery(
            "window must be a proper subinterval of [-2d, 2d]".into(),
        ));
    }
    let inside: Vec<f64> = table
        .energies
        .iter()
        .copied()
        .filter(|&e| in_window(e, window))
        .collect();
    if inside.len() < 8 {
        return Err(Error::InvalidQuery(alloc::format!(
            "window holds {} grid points, need >= 8",
            inside.len()
        )));
    }
    let step = inside[1] - inside[0];
    let seps = dyadic_separations(step, inside[inside.len() - 1] - inside[0]);
    let pairs = modulus_of_continuity(&table.energies, &table.values, window, &seps)?;
    let mut fit = fit_power_law(&pairs)?;
    fit.window = Some(window);
    fit.variable = Some(Variable::Energy);
    Ok(fit)
}

pub(crate) fn in_window(e: f64, w: (f64, f64)) -> bool {
    e >= w.0 - 1e-12 && e <= w.1 + 1e-12
}
