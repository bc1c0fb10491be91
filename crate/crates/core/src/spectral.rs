//! Exact finite-matrix spectral primitives.
//!
//! Eigenvalues are counted by Sylvester inertia: the number of negative
//! pivots of `L D L^T = H - E` equals `#{eigenvalues < E}`. Periodic boxes
//! are first reordered by folding axis 0 (`0, L-1, 1, L-2, ...`), which makes
//! the wrap couplings banded again at twice the half-bandwidth. The
//! reordering is a permutation congruence, so the inertia is unchanged.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::band::{BandLdlt, SymBand};
use crate::error::{Error, Result};
use crate::lattice::HamiltonianSample;

/// Largest dimension the dense rotation oracle accepts.
pub const DENSE_LIMIT: usize = 4096;

/// Threshold perturbations tried, in units of the sample's scale, when a
/// factorization meets a zero pivot.
pub const JITTER_LADDER: [f64; 3] = [1e-12, 1e-10, 1e-8];

const MAX_JACOBI_SWEEPS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountResult {
    /// `#{eigenvalues <= E + jitter_applied}`.
    pub count: usize,
    pub jitter_applied: f64,
}

/// Sturm recurrence for a symmetric tridiagonal matrix: number of negative
/// pivots of `T - shift`, or `None` when a pivot magnitude is `<= tol`.
pub fn sturm_count(diag: &[f64], off: &[f64], shift: f64, tol: f64) -> Option<usize> {
    let mut count = 0;
    let mut q = 1.0;
    for (i, &a) in diag.iter().enumerate() {
        q = if i == 0 {
            a - shift
        } else {
            (a - shift) - off[i - 1] * off[i - 1] / q
        };
        if q.abs() <= tol {
            return None;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    Some(count)
}

/// Negative-pivot count of a symmetric band matrix shifted by `shift`.
pub fn band_inertia_count(band: &SymBand<f64>, shift: f64, tol: f64) -> Option<usize> {
    let mut a = band.clone();
    a.shift_diagonal(shift);
    let mut negatives = 0;
    a.factor_with(|_, d| {
        if d < 0.0 {
            negatives += 1;
        }
        d.abs() > tol
    })
    .ok()
    .map(|_| negatives)
}

/// Site order used for factorization, and the matching band.
#[derive(Debug, Clone)]
struct Banded {
    band: SymBand<f64>,
    /// `perm[site]` = row of `site` in `band`; `None` for the identity.
    perm: Option<Vec<usize>>,
}

impl Banded {
    fn new(h: &HamiltonianSample) -> Self {
        if h.wraps.is_empty() {
            return Self {
                band: h.band.clone(),
                perm: None,
            };
        }
        let lat = &h.lattice;
        let l = lat.size;
        let w = lat.stride(0);
        let fold = |c: usize| {
            if 2 * c < l {
                2 * c
            } else {
                2 * (l - 1 - c) + 1
            }
        };
        let perm: Vec<usize> = (0..h.n()).map(|s| fold(s / w) * w + s % w).collect();
        let mut band = SymBand::zeros(h.n(), 2 * w);
        for i in 0..h.n() {
            for j in i.saturating_sub(h.bandwidth())..=i {
                let v = h.band.get(i, j);
                if v != 0.0 {
                    band.add(perm[i], perm[j], v);
                }
            }
        }
        for &(i, j) in &h.wraps {
            band.add(perm[i], perm[j], 1.0);
        }
        Self {
            band,
            perm: Some(perm),
        }
    }
}

/// Repeated eigenvalue counts on one sample.
#[derive(Debug, Clone)]
pub struct Counter<'a> {
    h: &'a HamiltonianSample,
    banded: Banded,
    tridiag: Option<(Vec<f64>, Vec<f64>)>,
    pivot_tol: f64,
}

impl<'a> Counter<'a> {
    pub fn new(h: &'a HamiltonianSample) -> Self {
        let tridiag = h.is_tridiagonal().then(|| {
            let n = h.n();
            let diag = (0..n).map(|i| h.diagonal(i)).collect();
            let off = (1..n).map(|i| h.band.get(i, i - 1)).collect();
            (diag, off)
        });
        Self {
            h,
            banded: Banded::new(h),
            tridiag,
            pivot_tol: f64::EPSILON * h.scale.max(1.0),
        }
    }

    pub fn sample(&self) -> &HamiltonianSample {
        self.h
    }

    /// One inertia attempt at exactly `e`; `None` on a zero pivot.
    pub fn count_at(&self, e: f64) -> Option<usize> {
        match &self.tridiag {
            Some((d, o)) => sturm_count(d, o, e, self.pivot_tol),
            None => band_inertia_count(&self.banded.band, e, self.pivot_tol),
        }
    }

    /// Band-factorization count, bypassing the Sturm fast path.
    pub fn count_banded(&self, e: f64) -> Option<usize> {
        band_inertia_count(&self.banded.band, e, self.pivot_tol)
    }

    /// `#{eigenvalues <= E}` with the jitter/dense fallback ladder.
    pub fn count_below(&self, e: f64) -> Result<CountResult> {
        if !e.is_finite() {
            return Err(Error::InvalidQuery(format!("energy {e} is not finite")));
        }
        if let Some(count) = self.count_at(e) {
            return Ok(CountResult {
                count,
                jitter_applied: 0.0,
            });
        }
        let scale = self.h.scale.max(1.0);
        for j in JITTER_LADDER {
            let jitter = j * scale;
            if let Some(count) = self.count_at(e + jitter) {
                return Ok(CountResult {
                    count,
                    jitter_applied: jitter,
                });
            }
        }
        if self.h.n() <= DENSE_LIMIT {
            let ev = dense_eigenvalues(self.h)?;
            return Ok(CountResult {
                count: ev.iter().filter(|&&x| x <= e).count(),
                jitter_applied: 0.0,
            });
        }
        Err(Error::NumericalFailure(format!(
            "inertia count at E = {e} broke down after every jitter"
        )))
    }
}

/// Number of eigenvalues `<= E` (see [`Counter::count_below`]).
pub fn count_below(h: &HamiltonianSample, e: f64) -> Result<CountResult> {
    Counter::new(h).count_below(e)
}

/// Cyclic Jacobi rotations on a dense row-major copy. Returns ascending
/// eigenvalues and, if requested, the matching eigenvectors as columns of a
/// row-major `n x n` matrix.
fn jacobi(mut a: Vec<f64>, n: usize, want_vectors: bool) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let mut v = want_vectors.then(|| {
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            v[i * n + i] = 1.0;
        }
        v
    });
    let frob2: f64 = a.iter().map(|x| x * x).sum();
    let target = (f64::EPSILON * f64::EPSILON) * frob2;
    let mut converged = n <= 1;
    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off <= target || off == 0.0 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let (app, aqq) = (a[p * n + p], a[q * n + q]);
                if apq.abs() <= f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                let tau = s / (1.0 + c);
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[r * n + p];
                    let arq = a[r * n + q];
                    let np = arp - s * (arq + tau * arp);
                    let nq = arq + s * (arp - tau * arq);
                    a[r * n + p] = np;
                    a[p * n + r] = np;
                    a[r * n + q] = nq;
                    a[q * n + r] = nq;
                }
                if let Some(v) = v.as_mut() {
                    for r in 0..n {
                        let vrp = v[r * n + p];
                        let vrq = v[r * n + q];
                        v[r * n + p] = vrp - s * (vrq + tau * vrp);
                        v[r * n + q] = vrq + s * (vrp - tau * vrq);
                    }
                }
            }
        }
    }
    if !converged {
        return Err(Error::NumericalFailure(format!(
            "Jacobi did not converge in {MAX_JACOBI_SWEEPS} sweeps"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = v.map(|v| {
        let mut out = vec![0.0; n * n];
        for (col, &src) in order.iter().enumerate() {
            for r in 0..n {
                out[r * n + col] = v[r * n + src];
            }
        }
        out
    });
    Ok((values, vectors))
}

fn check_dense(h: &HamiltonianSample) -> Result<()> {
    if h.n() > DENSE_LIMIT {
        return Err(Error::InvalidQuery(format!(
            "dense oracle limited to n <= {DENSE_LIMIT}, got {}",
            h.n()
        )));
    }
    Ok(())
}

/// All eigenvalues, ascending, by cyclic Jacobi rotations. Test oracle.
pub fn dense_eigenvalues(h: &HamiltonianSample) -> Result<Vec<f64>> {
    check_dense(h)?;
    Ok(jacobi(h.to_dense(), h.n(), false)?.0)
}

/// Eigenvalues with eigenvectors (columns of a row-major `n x n` matrix).
pub fn dense_eigen(h: &HamiltonianSample) -> Result<(Vec<f64>, Vec<f64>)> {
    check_dense(h)?;
    let (vals, vecs) = jacobi(h.to_dense(), h.n(), true)?;
    Ok((vals, vecs.unwrap_or_default()))
}

/// Factored `H - z` for repeated resolvent applications.
#[derive(Debug, Clone)]
pub struct Resolvent {
    factor: BandLdlt<Complex64>,
    perm: Option<Vec<usize>>,
    n: usize,
    z: Complex64,
}

impl Resolvent {
    pub fn new(h: &HamiltonianSample, z: Complex64) -> Result<Self> {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::InvalidQuery(format!("z = {z} is not finite")));
        }
        let scale = h.scale.max(1.0);
        if z.im == 0.0 && z.re.abs() <= h.scale {
            let dist = distance_to_spectrum(h, z.re)?;
            if dist <= 1e-12 * scale {
                return Err(Error::InvalidQuery(format!(
                    "z = {} lies on the spectrum",
                    z.re
                )));
            }
        }
        let banded = Banded::new(h);
        let n = h.n();
        let bw = banded.band.bandwidth();
        let mut c: SymBand<Complex64> = SymBand::zeros(n, bw);
        for i in 0..n {
            for j in i.saturating_sub(bw)..=i {
                let v = banded.band.get(i, j);
                if v != 0.0 {
                    c.set(i, j, Complex64::new(v, 0.0));
                }
            }
        }
        c.shift_diagonal(z);
        let factor = c
            .factor_with(|_, d| d.norm() > 0.0 && d.is_finite())
            .map_err(|b| {
                Error::NumericalFailure(format!("zero pivot at row {} factoring H - ({z})", b.row))
            })?;
        Ok(Self {
            factor,
            perm: banded.perm,
            n,
            z,
        })
    }

    pub fn z(&self) -> Complex64 {
        self.z
    }

    /// Overwrites `b` (site order) with `(H - z)^{-1} b`.
    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        match &self.perm {
            None => self.factor.solve_in_place(b),
            Some(p) => {
                let mut work = vec![Complex64::new(0.0, 0.0); self.n];
                for (s, &row) in p.iter().enumerate() {
                    work[row] = b[s];
                }
                self.factor.solve_in_place(&mut work);
                for (s, &row) in p.iter().enumerate() {
                    b[s] = work[row];
                }
            }
        }
    }

    /// Column `y` of the resolvent: `(H - z)^{-1} e_y`.
    pub fn column(&self, y: usize) -> Vec<Complex64> {
        let mut u = vec![Complex64::new(0.0, 0.0); self.n];
        u[y] = Complex64::new(1.0, 0.0);
        self.solve_in_place(&mut u);
        u
    }
}

fn complex_residual(h: &HamiltonianSample, z: Complex64, u: &[Complex64], y: usize) -> f64 {
    let re: Vec<f64> = u.iter().map(|c| c.re).collect();
    let im: Vec<f64> = u.iter().map(|c| c.im).collect();
    let hr = h.mul_vec(&re);
    let hi = h.mul_vec(&im);
    let mut r2 = 0.0;
    for i in 0..u.len() {
        let mut r = Complex64::new(hr[i], hi[i]) - z * u[i];
        if i == y {
            r -= 1.0;
        }
        r2 += r.norm_sqr();
    }
    libm::sqrt(r2)
}

/// `<x| (H - z)^{-1} |y>` by a banded complex symmetric solve.
pub fn resolvent_element(
    h: &HamiltonianSample,
    z: Complex64,
    x: usize,
    y: usize,
) -> Result<Complex64> {
    let n = h.n();
    if x >= n || y >= n {
        return Err(Error::InvalidQuery(format!(
            "site index out of range for n = {n}"
        )));
    }
    let r = Resolvent::new(h, z)?;
    let u = r.column(y);
    let res = complex_residual(h, z, &u, y);
    if !(res <= 1e-9) {
        return Err(Error::NumericalFailure(format!(
            "resolvent residual {res:e} exceeds 1e-9"
        )));
    }
    Ok(u[x])
}

/// `min_i |lambda_i - E|`, by inertia bisection on both neighbours of `E`.
pub fn distance_to_spectrum(h: &HamiltonianSample, e: f64) -> Result<f64> {
    let counter = Counter::new(h);
    distance_with(&counter, e)
}

/// [`distance_to_spectrum`] reusing a prepared [`Counter`].
pub fn distance_with(counter: &Counter<'_>, e: f64) -> Result<f64> {
    let h = counter.sample();
    let n = h.n();
    let scale = h.scale.max(1.0);
    let (lo_edge, hi_edge) = (-h.scale - 1.0, h.scale + 1.0);
    let c = counter.count_below(e)?.count;
    let tol = 1e-13 * scale;

    // Smallest x with count(x) >= target, bracketed by (lo, hi].
    let bisect = |mut lo: f64, mut hi: f64, target: usize| -> Result<f64> {
        for _ in 0..200 {
            if hi - lo <= tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if counter.count_below(mid)?.count >= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    };

    let mut best = f64::INFINITY;
    if c > 0 {
        let below = bisect(lo_edge.min(e - 1.0), e, c)?;
        best = best.min((e - below).abs());
    }
    if c < n {
        let above = bisect(e, hi_edge.max(e + 1.0), c + 1)?;
        best = best.min((above - e).abs());
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{
        assemble, build_h0, Boundary, DisorderLaw, DisorderSpec, LatticeSpec, ModelSpec,
        PeriodicPotential,
    };

    fn free(d: usize, l: usize, b: Boundary) -> HamiltonianSample {
        build_h0(
            &LatticeSpec::new(d, l, b).unwrap(),
            &PeriodicPotential::zero(d),
        )
        .unwrap()
    }

    fn model(d: usize, l: usize, b: Boundary, lambda: f64, seed: u64) -> ModelSpec {
        ModelSpec {
            lattice: LatticeSpec::new(d, l, b).unwrap(),
            background: PeriodicPotential::zero(d),
            disorder: DisorderSpec {
                law: DisorderLaw::Uniform { a: -1.0, b: 1.0 },
                master_seed: seed,
            },
            lambda,
        }
    }

    #[test]
    fn single_site() {
        let h = free(1, 1, Boundary::Dirichlet);
        assert_eq!(count_below(&h, 1.0).unwrap().count, 1);
        assert_eq!(count_below(&h, -1.0).unwrap().count, 0);
    }

    #[test]
    fn exact_hit_is_jittered() {
        let h = free(1, 1, Boundary::Dirichlet);
        let r = count_below(&h, 0.0).unwrap();
        assert_eq!(r.count, 1);
        assert!(r.jitter_applied > 0.0);
    }

    #[test]
    fn path_and_cycle_counts() {
        let path = free(1, 3, Boundary::Dirichlet);
        assert_eq!(count_below(&path, 1.0).unwrap().count, 2);
        let cycle = free(1, 3, Boundary::Periodic);
        assert_eq!(count_below(&cycle, 0.0).unwrap().count, 2);
        let ev = dense_eigenvalues(&cycle).unwrap();
        assert!(
            (ev[0] + 1.0).abs() < 1e-12
                && (ev[1] + 1.0).abs() < 1e-12
                && (ev[2] - 2.0).abs() < 1e-12
        );
    }

    #[test]
    fn dense_oracle_closed_forms() {
        let zero = free(1, 4, Boundary::Dirichlet);
        let mut z = zero.clone();
        for i in 1..4 {
            z.band.set(i, i - 1, 0.0);
        }
        assert_eq!(dense_eigenvalues(&z).unwrap(), vec![0.0; 4]);
        let ev = dense_eigenvalues(&free(1, 3, Boundary::Dirichlet)).unwrap();
        let s2 = core::f64::consts::SQRT_2;
        for (a, b) in ev.iter().zip([-s2, 0.0, s2]) {
            assert!((a - b).abs() < 1e-8);
        }
        let torus = dense_eigenvalues(&free(2, 2, Boundary::Periodic)).unwrap();
        for (a, b) in torus.iter().zip([-4.0, 0.0, 0.0, 4.0]) {
            assert!((a - b).abs() < 1e-12, "{torus:?}");
        }
    }

    #[test]
    fn dense_oracle_residuals_and_trace() {
        let h = assemble(&model(2, 6, Boundary::Periodic, 1.3, 4), 0).unwrap();
        let n = h.n();
        let (vals, vecs) = dense_eigen(&h).unwrap();
        for k in 0..n {
            let col: Vec<f64> = (0..n).map(|r| vecs[r * n + k]).collect();
            let hv = h.mul_vec(&col);
            let res: f64 = hv
                .iter()
                .zip(&col)
                .map(|(a, b)| (a - vals[k] * b).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(res <= 1e-10 * h.scale, "pair {k}: residual {res}");
        }
        let sum: f64 = vals.iter().sum();
        assert!((sum - h.trace()).abs() <= 1e-8 * n as f64 * h.scale);
    }

    #[test]
    fn sturm_matches_band_on_tridiagonal() {
        let h = assemble(&model(1, 300, Boundary::Dirichlet, 1.5, 8), 2).unwrap();
        let c = Counter::new(&h);
        for k in 0..60 {
            let e = -3.6 + 0.12 * k as f64 + 0.0013;
            assert_eq!(c.count_at(e), c.count_banded(e));
        }
    }

    #[test]
    fn extremes() {
        for b in [Boundary::Dirichlet, Boundary::Periodic] {
            let h = assemble(&model(2, 7, b, 2.0, 1), 3).unwrap();
            assert_eq!(count_below(&h, -h.scale - 1.0).unwrap().count, 0);
            assert_eq!(count_below(&h, h.scale + 1.0).unwrap().count, h.n());
        }
    }

    #[test]
    fn resolvent_scalar_inverse() {
        let h = free(1, 1, Boundary::Dirichlet);
        let g = resolvent_element(&h, Complex64::new(0.0, 1.0), 0, 0).unwrap();
        assert!((g - Complex64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn resolvent_1d_green_function_ratio() {
        let l = 512;
        let h = free(1, l, Boundary::Dirichlet);
        let x0 = l / 2;
        let z = Complex64::new(3.0, 0.0);
        let r = Resolvent::new(&h, z).unwrap();
        let col = r.column(x0);
        let rho = (3.0 - 5f64.sqrt()) / 2.0;
        assert!((col[x0].re + 1.0 / 5f64.sqrt()).abs() < 1e-10);
        for k in 0..10 {
            let ratio = (col[x0 + k + 1] / col[x0 + k]).norm();
            assert!((ratio - 0.3819660).abs() < 1e-4);
            let exact = -rho.powi(k as i32) / 5f64.sqrt();
            assert!((col[x0 + k].re - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn resolvent_symmetry_and_periodic_path() {
        let h = assemble(&model(2, 5, Boundary::Periodic, 0.8, 6), 1).unwrap();
        let z = Complex64::new(0.3, 0.05);
        for (x, y) in [(0, 24), (3, 17), (12, 12)] {
            let a = resolvent_element(&h, z, x, y).unwrap();
            let b = resolvent_element(&h, z, y, x).unwrap();
            assert!((a - b).norm() <= 1e-9);
        }
    }

    #[test]
    fn resolvent_on_spectrum_rejected() {
        let h = free(1, 3, Boundary::Dirichlet);
        assert!(matches!(
            resolvent_element(&h, Complex64::new(0.0, 0.0), 0, 0),
            Err(Error::InvalidQuery(_))
        ));
    }

    #[test]
    fn distance_examples() {
        let h = free(1, 3, Boundary::Dirichlet);
        assert!(distance_to_spectrum(&h, 0.0).unwrap() <= 1e-8 * h.scale);
        let d = distance_to_spectrum(&h, 3.0).unwrap();
        assert!((d - (3.0 - core::f64::consts::SQRT_2)).abs() < 1e-6);
        let s = assemble(&model(2, 5, Boundary::Periodic, 1.0, 2), 0).unwrap();
        let ev = dense_eigenvalues(&s).unwrap();
        for &x in ev.iter().step_by(4) {
            assert!(distance_to_spectrum(&s, x).unwrap() <= 1e-8 * s.scale);
        }
        for e in [-1.234, 0.05, 2.7] {
            let exact = ev
                .iter()
                .map(|x| (x - e).abs())
                .fold(f64::INFINITY, f64::min);
            assert!((distance_to_spectrum(&s, e).unwrap() - exact).abs() <= 1e-8 * s.scale);
        }
    }
}
