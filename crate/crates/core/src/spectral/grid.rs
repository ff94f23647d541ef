use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Periodic Fourier lattice on the box `[0, 2πM)³`.
///
/// Lattice index `i` along an axis maps to the signed integer `j` in
/// `[-n/2, n/2)` and to the wavenumber `j / M`. Storage is row-major with
/// the last axis fastest.
#[derive(Debug, Clone)]
pub struct FourierGrid {
    n: usize,
    box_scale: f64,
    wavenumbers: Vec<f64>,
    signed: Vec<i64>,
    retained: Vec<bool>,
}

impl PartialEq for FourierGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.box_scale.to_bits() == other.box_scale.to_bits()
    }
}

impl FourierGrid {
    pub const DIMENSION: usize = 3;

    pub fn new(n_per_axis: usize, box_scale: f64) -> Result<Self> {
        if n_per_axis < 4 || !n_per_axis.is_multiple_of(2) {
            return Err(Error::param("n_per_axis", format!("must be even and >= 4, got {n_per_axis}")));
        }
        if !(box_scale.is_finite() && box_scale > 0.0) {
            return Err(Error::param("box_scale", format!("must be positive, got {box_scale}")));
        }
        let n = n_per_axis;
        let signed: Vec<i64> = (0..n).map(|i| if i < n / 2 { i as i64 } else { i as i64 - n as i64 }).collect();
        let wavenumbers = signed.iter().map(|&j| j as f64 / box_scale).collect();
        // two-thirds rule: keep |j| < n/3
        let retained = signed.iter().map(|&j| 3 * j.unsigned_abs() < n as u64).collect();
        Ok(Self { n, box_scale, wavenumbers, signed, retained })
    }

    pub fn n_per_axis(&self) -> usize {
        self.n
    }

    pub fn box_scale(&self) -> f64 {
        self.box_scale
    }

    /// Number of lattice modes, `n³`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Physical period `2πM` of each axis.
    pub fn period(&self) -> f64 {
        2.0 * PI * self.box_scale
    }

    pub fn volume(&self) -> f64 {
        self.period().powi(3)
    }

    /// Smallest nonzero wavenumber magnitude, `1/M`.
    pub fn spacing(&self) -> f64 {
        1.0 / self.box_scale
    }

    #[inline]
    pub fn flat(&self, i0: usize, i1: usize, i2: usize) -> usize {
        (i0 * self.n + i1) * self.n + i2
    }

    #[inline]
    pub fn unflat(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    /// Flat index of the mode with signed lattice coordinates `j`.
    pub fn index_of(&self, j: [i64; 3]) -> Option<usize> {
        let n = self.n as i64;
        let mut out = [0usize; 3];
        for (o, &ji) in out.iter_mut().zip(&j) {
            if ji < -n / 2 || ji >= n / 2 {
                return None;
            }
            *o = ji.rem_euclid(n) as usize;
        }
        Some(self.flat(out[0], out[1], out[2]))
    }

    #[inline]
    pub fn signed_index(&self, idx: usize) -> [i64; 3] {
        let [a, b, c] = self.unflat(idx);
        [self.signed[a], self.signed[b], self.signed[c]]
    }

    #[inline]
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        let [a, b, c] = self.unflat(idx);
        [self.wavenumbers[a], self.wavenumbers[b], self.wavenumbers[c]]
    }

    #[inline]
    pub fn kmag2(&self, idx: usize) -> f64 {
        let k = self.wavevector(idx);
        k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
    }

    /// Per-axis wavenumbers in storage order.
    pub fn axis_wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Whether the two-thirds dealias mask keeps this mode.
    #[inline]
    pub fn is_retained(&self, idx: usize) -> bool {
        let [a, b, c] = self.unflat(idx);
        self.retained[a] && self.retained[b] && self.retained[c]
    }

    /// Flat index of `-k` (the Nyquist plane maps to itself).
    #[inline]
    pub fn mirror(&self, idx: usize) -> usize {
        let n = self.n;
        let [a, b, c] = self.unflat(idx);
        self.flat((n - a) % n, (n - b) % n, (n - c) % n)
    }

    /// Largest retained wavenumber component.
    pub fn k_max_retained(&self) -> f64 {
        let jmax = self
            .signed
            .iter()
            .zip(&self.retained)
            .filter(|(_, &r)| r)
            .map(|(j, _)| j.unsigned_abs())
            .max()
            .unwrap_or(0);
        jmax as f64 / self.box_scale
    }

    /// Physical coordinate of grid point `i` along an axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        self.period() * i as f64 / self.n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavenumbers_are_lattice_over_scale() {
        let g = FourierGrid::new(8, 2.0).unwrap();
        assert_eq!(g.axis_wavenumbers(), &[0.0, 0.5, 1.0, 1.5, -2.0, -1.5, -1.0, -0.5]);
        let idx = g.index_of([1, -2, 3]).unwrap();
        assert_eq!(g.signed_index(idx), [1, -2, 3]);
        assert_eq!(g.wavevector(idx), [0.5, -1.0, 1.5]);
    }

    #[test]
    fn dealias_keeps_below_one_third() {
        let g = FourierGrid::new(12, 1.0).unwrap();
        // n/3 = 4: keep |j| <= 3
        assert!(g.is_retained(g.index_of([3, -3, 0]).unwrap()));
        assert!(!g.is_retained(g.index_of([4, 0, 0]).unwrap()));
        assert!(!g.is_retained(g.index_of([0, -4, 0]).unwrap()));
        assert!(!g.is_retained(g.index_of([-6, 0, 0]).unwrap()));
        let kept = (0..g.len()).filter(|&i| g.is_retained(i)).count();
        assert_eq!(kept, 7 * 7 * 7);
        assert_eq!(g.k_max_retained(), 3.0);
    }

    #[test]
    fn mirror_is_involution() {
        let g = FourierGrid::new(6, 1.0).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.mirror(g.mirror(i)), i);
            let j = g.signed_index(i);
            let m = g.signed_index(g.mirror(i));
            for a in 0..3 {
                if j[a] != -3 {
                    assert_eq!(m[a], -j[a]);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(FourierGrid::new(7, 1.0).is_err());
        assert!(FourierGrid::new(2, 1.0).is_err());
        assert!(FourierGrid::new(8, 0.0).is_err());
    }
}
