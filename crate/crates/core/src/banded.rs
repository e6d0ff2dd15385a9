//! Symmetric banded LDLᵀ factorization.
//!
//! The discrete Laplacian (and the solver Jacobians built on it) are
//! symmetric with bandwidth equal to one grid row, so an in-place banded
//! LDLᵀ gives an exact direct solve in O(n·b²) time and O(n·b) memory.
//! No pivoting: the matrices here are either M-matrices or diagonal
//! perturbations of one, and stay strongly diagonally dominated until far
//! past the amplitudes the continuation reaches.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BandedError {
    #[error("zero pivot at row {0}: matrix is numerically singular")]
    ZeroPivot(usize),
    #[error("row {0} has an entry beyond the declared bandwidth")]
    Bandwidth(usize),
}

/// Symmetric banded matrix in lower-band storage.
///
/// Entry (i, j) with 0 ≤ i−j ≤ b lives at `band[i*(b+1) + (i−j)]`;
/// offset 0 is the diagonal.
pub struct SymBandMatrix {
    n: usize,
    b: usize,
    band: Vec<f64>,
}

impl SymBandMatrix {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        Self {
            n,
            b: bandwidth,
            band: vec![0.0; n * (bandwidth + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.b
    }

    /// Set entry (i, j), j ≤ i. Panics outside the band.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(j <= i && i - j <= self.b);
        self.band[i * (self.b + 1) + (i - j)] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(j <= i && i - j <= self.b);
        self.band[i * (self.b + 1) + (i - j)] += v;
    }

    /// Reset all entries to zero, keeping the allocation.
    pub fn clear(&mut self) {
        self.band.fill(0.0);
    }

    /// Factor in place into L·D·Lᵀ. The receiver's storage is reused for L
    /// (unit diagonal implicit) and D.
    pub fn factor(mut self) -> Result<BandedLdl, BandedError> {
        let n = self.n;
        let b = self.b;
        let w = b + 1;
        let band = &mut self.band;
        for i in 0..n {
            let j0 = i.saturating_sub(b);
            // row i of L, columns j0..i, then the pivot
            for j in j0..i {
                let k0 = j.saturating_sub(b).max(j0);
                // dot over k in [k0, j): L[i,k]*D[k]*L[j,k]
                let mut s = band[i * w + (i - j)];
                for k in k0..j {
                    let lik = band[i * w + (i - k)];
                    let ljk = band[j * w + (j - k)];
                    let dk = band[k * w];
                    s -= lik * dk * ljk;
                }
                let dj = band[j * w];
                band[i * w + (i - j)] = s / dj;
            }
            let mut d = band[i * w];
            for k in j0..i {
                let lik = band[i * w + (i - k)];
                d -= lik * lik * band[k * w];
            }
            if d == 0.0 || !d.is_finite() {
                return Err(BandedError::ZeroPivot(i));
            }
            band[i * w] = d;
        }
        Ok(BandedLdl {
            n,
            b,
            band: self.band,
        })
    }
}

/// Factored form; solves via forward/diagonal/backward substitution.
pub struct BandedLdl {
    n: usize,
    b: usize,
    band: Vec<f64>,
}

impl BandedLdl {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Solve A x = rhs in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        let w = self.b + 1;
        // L y = rhs
        for i in 0..self.n {
            let j0 = i.saturating_sub(self.b);
            let mut s = x[i];
            for j in j0..i {
                s -= self.band[i * w + (i - j)] * x[j];
            }
            x[i] = s;
        }
        // D z = y
        for i in 0..self.n {
            x[i] /= self.band[i * w];
        }
        // Lᵀ x = z
        for i in (0..self.n).rev() {
            let imax = (i + self.b).min(self.n - 1);
            let mut s = x[i];
            for j in (i + 1)..=imax {
                s -= self.band[j * w + (j - i)] * x[j];
            }
            x[i] = s;
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
