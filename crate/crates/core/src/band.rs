//! Symmetric band matrices and their `L D L^T` factorization without pivoting.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::NumAssign;

/// Lower band of a symmetric `n x n` matrix with half-bandwidth `bw`.
/// Entry `(i, j)` with `0 <= i - j <= bw` lives at `data[i * (bw + 1) + (i - j)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBand<T> {
    n: usize,
    bw: usize,
    data: Vec<T>,
}

/// Zero pivot met during elimination.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Breakdown {
    pub row: usize,
}

impl<T: Copy + NumAssign> SymBand<T> {
    pub fn zeros(n: usize, bw: usize) -> Self {
        let bw = bw.min(n.saturating_sub(1));
        Self {
            n,
            bw,
            data: vec![T::zero(); n * (bw + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (i - j)
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> T {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            T::zero()
        } else {
            self.data[self.idx(i, j)]
        }
    }

    /// Adds `v` to the symmetric pair `(i, j)` / `(j, i)`.
    ///
    /// # Panics
    /// If the pair lies outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(
            i - j <= self.bw,
            "entry ({i}, {j}) outside bandwidth {}",
            self.bw
        );
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(
            i - j <= self.bw,
            "entry ({i}, {j}) outside bandwidth {}",
            self.bw
        );
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    pub fn shift_diagonal(&mut self, s: T) {
        for i in 0..self.n {
            let k = i * (self.bw + 1);
            self.data[k] -= s;
        }
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        for i in 0..self.n {
            let row = &self.data[i * (self.bw + 1)..(i + 1) * (self.bw + 1)];
            y[i] += row[0] * x[i];
            for (off, &a) in row.iter().enumerate().skip(1) {
                if off > i {
                    break;
                }
                let j = i - off;
                y[i] += a * x[j];
                y[j] += a * x[i];
            }
        }
        y
    }

    /// In-place `L D L^T` elimination. `pivot(row, d)` sees every pivot in
    /// order and may abort the factorization by returning `false`.
    pub fn factor_with(
        mut self,
        mut pivot: impl FnMut(usize, T) -> bool,
    ) -> Result<BandLdlt<T>, Breakdown> {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        for j in 0..n {
            let d = self.data[j * w];
            if !pivot(j, d) {
                return Err(Breakdown { row: j });
            }
            let end = (n - 1).min(j + bw);
            for i in j + 1..=end {
                let aij = self.data[i * w + (i - j)];
                if aij.is_zero() {
                    continue;
                }
                let f = aij / d;
                for k in j + 1..=i {
                    let akj = self.data[k * w + (k - j)];
                    if !akj.is_zero() {
                        self.data[i * w + (i - k)] -= f * akj;
                    }
                }
            }
            for i in j + 1..=end {
                self.data[i * w + (i - j)] /= d;
            }
        }
        Ok(BandLdlt { band: self })
    }
}

/// Factors `L D L^T` stored in band form: `D` on the diagonal, unit-lower `L` below.
#[derive(Debug, Clone)]
pub struct BandLdlt<T> {
    band: SymBand<T>,
}

impl<T: Copy + NumAssign> BandLdlt<T> {
    pub fn pivots(&self) -> impl Iterator<Item = T> + '_ {
        let w = self.band.bw + 1;
        (0..self.band.n).map(move |i| self.band.data[i * w])
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [T]) {
        let (n, bw) = (self.band.n, self.band.bw);
        let w = bw + 1;
        let l = &self.band.data;
        assert_eq!(b.len(), n);
        for i in 0..n {
            let mut acc = b[i];
            for k in i.saturating_sub(bw)..i {
                acc -= l[i * w + (i - k)] * b[k];
            }
            b[i] = acc;
        }
        for i in 0..n {
            b[i] /= l[i * w];
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            for k in i + 1..=(n - 1).min(i + bw) {
                acc -= l[k * w + (k - i)] * b[k];
            }
            b[i] = acc;
        }
    }
}
