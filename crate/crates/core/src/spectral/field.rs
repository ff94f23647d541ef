use num_complex::Complex64;
use rayon::prelude::*;

use super::grid::FourierGrid;
use crate::error::{Error, Result};

/// Storage order of the six independent entries of a symmetric 3×3 tensor.
pub const SYM_PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

/// Storage order of the three independent entries of an antisymmetric tensor.
pub const ANTISYM_PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// Component slot of entry `(i, j)` in symmetric storage.
#[inline]
pub const fn sym_index(i: usize, j: usize) -> usize {
    match (i, j) {
        (0, 0) => 0,
        (1, 1) => 1,
        (2, 2) => 2,
        (0, 1) | (1, 0) => 3,
        (0, 2) | (2, 0) => 4,
        _ => 5,
    }
}

/// Common view of the spectral field types: a grid plus one coefficient
/// array per stored component.
pub trait SpectralField {
    fn grid(&self) -> &FourierGrid;
    fn components(&self) -> &[Vec<Complex64>];
    fn components_mut(&mut self) -> &mut [Vec<Complex64>];
    /// Multiplicity of each stored component in the Frobenius inner product.
    fn multiplicities(&self) -> &'static [f64];

    /// Largest `|c(k) - conj(c(-k))|` over all components and modes.
    fn hermitian_defect(&self) -> f64 {
        let g = self.grid();
        self.components()
            .iter()
            .map(|c| {
                (0..c.len()).into_par_iter().map(|i| (c[i] - c[g.mirror(i)].conj()).norm()).reduce(|| 0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Replace every coefficient by its Hermitian average so the physical
    /// field is exactly real.
    fn enforce_hermitian(&mut self) {
        let g = self.grid().clone();
        for c in self.components_mut() {
            let src = c.clone();
            c.par_iter_mut().enumerate().for_each(|(i, v)| {
                *v = 0.5 * (src[i] + src[g.mirror(i)].conj());
            });
        }
    }

    /// Zero every mode outside the two-thirds mask.
    fn apply_dealias(&mut self) {
        let g = self.grid().clone();
        for c in self.components_mut() {
            c.par_iter_mut().enumerate().for_each(|(i, v)| {
                if !g.is_retained(i) {
                    *v = Complex64::default();
                }
            });
        }
    }

    fn is_finite(&self) -> bool {
        self.components().iter().all(|c| c.par_iter().all(|v| v.re.is_finite() && v.im.is_finite()))
    }
}

macro_rules! field_type {
    ($(#[$meta:meta])* $name:ident, $ncomp:expr, $mult:expr) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            grid: FourierGrid,
            comps: [Vec<Complex64>; $ncomp],
        }

        impl $name {
            pub const COMPONENTS: usize = $ncomp;

            pub fn zeros(grid: &FourierGrid) -> Self {
                let len = grid.len();
                Self { grid: grid.clone(), comps: std::array::from_fn(|_| vec![Complex64::default(); len]) }
            }

            pub fn from_components(grid: &FourierGrid, comps: [Vec<Complex64>; $ncomp]) -> Result<Self> {
                if comps.iter().any(|c| c.len() != grid.len()) {
                    return Err(Error::GridMismatch);
                }
                Ok(Self { grid: grid.clone(), comps })
            }

            pub fn component(&self, c: usize) -> &[Complex64] {
                &self.comps[c]
            }

            pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
                &mut self.comps[c]
            }

            pub fn into_components(self) -> [Vec<Complex64>; $ncomp] {
                self.comps
            }

            /// Coefficients of every component at one mode.
            #[inline]
            pub fn mode(&self, idx: usize) -> [Complex64; $ncomp] {
                std::array::from_fn(|c| self.comps[c][idx])
            }

            #[inline]
            pub fn set_mode(&mut self, idx: usize, v: [Complex64; $ncomp]) {
                for (c, x) in v.into_iter().enumerate() {
                    self.comps[c][idx] = x;
                }
            }

            pub fn same_grid(&self, other: &FourierGrid) -> Result<()> {
                if &self.grid == other {
                    Ok(())
                } else {
                    Err(Error::GridMismatch)
                }
            }

            /// `self += alpha * other`
            pub fn axpy(&mut self, alpha: f64, other: &Self) -> Result<()> {
                self.same_grid(&other.grid)?;
                for (a, b) in self.comps.iter_mut().zip(&other.comps) {
                    a.par_iter_mut().zip(b.par_iter()).for_each(|(x, y)| *x += alpha * y);
                }
                Ok(())
            }

            pub fn scale(&mut self, alpha: f64) {
                for a in self.comps.iter_mut() {
                    a.par_iter_mut().for_each(|x| *x *= alpha);
                }
            }

            /// Largest coefficient modulus difference.
            pub fn max_abs_diff(&self, other: &Self) -> f64 {
                self.comps
                    .iter()
                    .zip(&other.comps)
                    .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).norm()))
                    .fold(0.0, f64::max)
            }

            pub fn max_abs(&self) -> f64 {
                self.comps.iter().flat_map(|a| a.iter().map(|x| x.norm())).fold(0.0, f64::max)
            }
        }

        impl SpectralField for $name {
            fn grid(&self) -> &FourierGrid {
                &self.grid
            }
            fn components(&self) -> &[Vec<Complex64>] {
                &self.comps
            }
            fn components_mut(&mut self) -> &mut [Vec<Complex64>] {
                &mut self.comps
            }
            fn multiplicities(&self) -> &'static [f64] {
                &$mult
            }
        }
    };
}

field_type!(
    /// Fourier coefficients of a real velocity-like field.
    SpectralVectorField,
    3,
    [1.0, 1.0, 1.0]
);

field_type!(
    /// Fourier coefficients of a real symmetric tensor field, stored in
    /// [`SYM_PAIRS`] order.
    SpectralTensorField,
    6,
    [1.0, 1.0, 1.0, 2.0, 2.0, 2.0]
);

field_type!(
    /// Fourier coefficients of a real antisymmetric tensor field, stored in
    /// [`ANTISYM_PAIRS`] order (the upper triangle).
    AntisymmetricTensorField,
    3,
    [2.0, 2.0, 2.0]
);

impl SpectralVectorField {
    /// Largest `|k·v̂(k)|` relative to the largest `|k||v̂(k)|`.
    pub fn max_divergence_relative(&self) -> f64 {
        let g = &self.grid;
        let (num, den) = (0..g.len())
            .into_par_iter()
            .map(|i| {
                let k = g.wavevector(i);
                let v = self.mode(i);
                let d = k[0] * v[0] + k[1] * v[1] + k[2] * v[2];
                let scale = g.kmag2(i).sqrt() * v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
                (d.norm(), scale)
            })
            .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }
}

impl SpectralTensorField {
    /// Coefficients of `tr τ`.
    pub fn trace(&self) -> Vec<Complex64> {
        (0..self.grid.len()).into_par_iter().map(|i| self.comps[0][i] + self.comps[1][i] + self.comps[2][i]).collect()
    }

    /// Full 3×3 matrix of coefficients at one mode.
    #[inline]
    pub fn mode_matrix(&self, idx: usize) -> [[Complex64; 3]; 3] {
        std::array::from_fn(|i| std::array::from_fn(|j| self.comps[sym_index(i, j)][idx]))
    }
}

impl AntisymmetricTensorField {
    /// Full 3×3 matrix at one mode (lower triangle by antisymmetry).
    #[inline]
    pub fn mode_matrix(&self, idx: usize) -> [[Complex64; 3]; 3] {
        let w = self.mode(idx);
        let z = Complex64::default();
        [[z, w[0], w[1]], [-w[0], z, w[2]], [-w[1], -w[2], z]]
    }
}

/// Weighted Frobenius inner product `V Σ_k conj(f̂)·ĝ` (real part), i.e. the
/// `L²` inner product over the box.
pub fn inner_product<F: SpectralField>(f: &F, g: &F) -> Result<f64> {
    if f.grid() != g.grid() {
        return Err(Error::GridMismatch);
    }
    let vol = f.grid().volume();
    let mut total = 0.0;
    for ((a, b), w) in f.components().iter().zip(g.components()).zip(f.multiplicities()) {
        total += w * deterministic_sum(a.len(), |i| (a[i].conj() * b[i]).re);
    }
    Ok(vol * total)
}

/// Sum over `0..len` in fixed-size chunks so the result does not depend on
/// thread scheduling.
pub(crate) fn deterministic_sum<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    const CHUNK: usize = 4096;
    let partial: Vec<f64> = (0..len.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(len);
            (lo..hi).map(&f).sum::<f64>()
        })
        .collect();
    partial.iter().sum()
}
