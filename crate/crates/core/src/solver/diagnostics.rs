use num_complex::Complex64 as C;
use rayon::prelude::*;

use super::SimState;
use crate::spectral::{deformation, FourierGrid, PseudoSpectral, SpectralTensorField, SYM_PAIRS};

/// One row of the solver time series; field order matches
/// [`crate::rates::SOLVER_COLUMNS`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub t: f64,
    pub u_l2sq: f64,
    pub u_h1sq: f64,
    pub u_h2sq: f64,
    pub tau_l2sq: f64,
    pub tau_h1sq: f64,
    pub tau_h2sq: f64,
    pub eps_l2sq: f64,
    pub div_u: f64,
    pub trace_tau_max: f64,
    pub energy: f64,
    pub align_cos: f64,
}

impl Diagnostics {
    pub fn row(&self) -> [f64; 11] {
        [
            self.u_l2sq,
            self.u_h1sq,
            self.u_h2sq,
            self.tau_l2sq,
            self.tau_h1sq,
            self.tau_h2sq,
            self.eps_l2sq,
            self.div_u,
            self.trace_tau_max,
            self.energy,
            self.align_cos,
        ]
    }

    /// `‖τ‖² + 2ω(1-ω)‖∇u‖²`.
    pub fn dissipation(&self, omega: f64) -> f64 {
        self.tau_l2sq + 2.0 * omega * (1.0 - omega) * self.u_h1sq
    }
}

const TENSOR_MULT: [f64; 6] = [1.0, 1.0, 1.0, 2.0, 2.0, 2.0];

/// Chunked parallel sum of `N` per-mode quantities over the retained modes,
/// independent of thread scheduling.
pub(crate) fn mode_sums<const N: usize, F>(grid: &FourierGrid, f: F) -> [f64; N]
where
    F: Fn(usize) -> [f64; N] + Sync,
{
    const CHUNK: usize = 4096;
    let len = grid.len();
    let partial: Vec<[f64; N]> = (0..len.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = [0.0; N];
            for i in c * CHUNK..((c + 1) * CHUNK).min(len) {
                if grid.is_retained(i) {
                    for (a, v) in acc.iter_mut().zip(f(i)) {
                        *a += v;
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = [0.0; N];
    for p in partial {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    total
}

/// Deformation of a single mode in symmetric storage.
#[inline]
pub(crate) fn mode_deformation(k: [f64; 3], u: &[C; 3]) -> [C; 6] {
    SYM_PAIRS.map(|(j, l)| C::new(0.0, 0.5) * (k[l] * u[j] + k[j] * u[l]))
}

/// `‖τ‖² + 2ω(1-ω)‖∇u‖²` of a single mode, without the volume factor.
#[inline]
pub(crate) fn mode_dissipation(kmag2: f64, u: &[C; 3], tau: &[C; 6], omega: f64) -> f64 {
    let uu: f64 = u.iter().map(|x| x.norm_sqr()).sum();
    let tt: f64 = tau.iter().zip(TENSOR_MULT).map(|(x, m)| m * x.norm_sqr()).sum();
    tt + 2.0 * omega * (1.0 - omega) * kmag2 * uu
}

/// Spectral norms plus the physical-space trace maximum.
pub fn diagnostics(state: &SimState, engine: &PseudoSpectral) -> Diagnostics {
    let g = state.grid();
    let omega = state.params.omega();
    let (u, tau) = (&state.u, &state.tau);
    let s = mode_sums::<11, _>(g, |i| {
        let k = g.wavevector(i);
        let k2 = g.kmag2(i);
        let um = u.mode(i);
        let tm = tau.mode(i);
        let uu: f64 = um.iter().map(|x| x.norm_sqr()).sum();
        let tt: f64 = tm.iter().zip(TENSOR_MULT).map(|(x, m)| m * x.norm_sqr()).sum();
        let d = mode_deformation(k, &um);
        let mut ee = 0.0;
        let mut td = 0.0;
        let mut dd = 0.0;
        for c in 0..6 {
            let dc = 2.0 * omega * d[c];
            ee += TENSOR_MULT[c] * (tm[c] - dc).norm_sqr();
            td += TENSOR_MULT[c] * (tm[c].conj() * dc).re;
            dd += TENSOR_MULT[c] * dc.norm_sqr();
        }
        let div = k[0] * um[0] + k[1] * um[1] + k[2] * um[2];
        [uu, k2 * uu, k2 * k2 * uu, tt, k2 * tt, k2 * k2 * tt, ee, div.norm_sqr(), td, dd, 0.0]
    });
    let vol = g.volume();
    let [uu, uh1, uh2, tt, th1, th2, ee, div, td, dd, _] = s.map(|x| x * vol);
    let trace = tau.trace();
    let trace_tau_max =
        engine.to_physical(&[&trace])[0].par_iter().fold(|| 0.0f64, |m, x| m.max(x.abs())).reduce(|| 0.0, f64::max);
    let align_cos = if tt > 0.0 && dd > 0.0 { td / (tt.sqrt() * dd.sqrt()) } else { 0.0 };
    let p = &state.params;
    Diagnostics {
        t: state.time,
        u_l2sq: uu,
        u_h1sq: uh1,
        u_h2sq: uh2,
        tau_l2sq: tt,
        tau_h1sq: th1,
        tau_h2sq: th2,
        eps_l2sq: ee,
        div_u: div.sqrt(),
        trace_tau_max,
        energy: omega * p.reynolds() * uu + 0.5 * p.weissenberg() * tt,
        align_cos,
    }
}

/// `ε = τ - 2ωD(u)`.
pub fn elastic_residual(state: &SimState) -> SpectralTensorField {
    let mut eps = state.tau.clone();
    eps.axpy(-2.0 * state.params.omega(), &deformation(&state.u)).expect("fields share a grid");
    eps
}

/// `ωRe‖u‖² + ½We‖τ‖²`; at `Re = We = 1` this is `ω‖u‖² + ½‖τ‖²`.
pub fn energy(state: &SimState) -> f64 {
    let g = state.grid();
    let [uu, tt] = mode_sums::<2, _>(g, |i| {
        let uu: f64 = state.u.mode(i).iter().map(|x| x.norm_sqr()).sum();
        let tt: f64 = state.tau.mode(i).iter().zip(TENSOR_MULT).map(|(x, m)| m * x.norm_sqr()).sum();
        [uu, tt]
    })
    .map(|x| x * g.volume());
    let p = &state.params;
    p.omega() * p.reynolds() * uu + 0.5 * p.weissenberg() * tt
}

pub fn dissipation_rate(state: &SimState) -> f64 {
    let g = state.grid();
    let omega = state.params.omega();
    let [d] = mode_sums::<1, _>(g, |i| [mode_dissipation(g.kmag2(i), &state.u.mode(i), &state.tau.mode(i), omega)]);
    d * g.volume()
}
