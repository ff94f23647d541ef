//! Fourier grids, spectral field types and the operators shared by the
//! solver and diagnostics.

mod fft;
mod field;
mod grid;
mod ops;
mod params;

pub use fft::Fft3;
pub(crate) use field::deterministic_sum;
pub use field::{
    inner_product, sym_index, AntisymmetricTensorField, SpectralField, SpectralTensorField, SpectralVectorField,
    ANTISYM_PAIRS, SYM_PAIRS,
};
pub use grid::FourierGrid;
pub use ops::{
    advect, deformation, g_a_term, h2_norm_sq, leray_project, leray_project_in_place, sobolev_seminorm_sq,
    tensor_divergence, velocity_gradient, vorticity_tensor, PhysicalVelocity, PseudoSpectral,
};
pub use params::FluidParams;
