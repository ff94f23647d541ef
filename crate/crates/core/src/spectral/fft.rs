use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

/// Parallel 3-D complex FFT on an `n³` row-major array.
///
/// `forward` is normalized so that coefficients are Fourier-series
/// amplitudes (`1/n³` factor); `inverse` is the plain synthesis sum.
#[derive(Clone)]
pub struct Fft3 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft3").field("n", &self.n).finish()
    }
}

impl Fft3 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { n, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
        let scale = 1.0 / data.len() as f64;
        data.par_iter_mut().for_each(|c| *c *= scale);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        assert_eq!(data.len(), n * n * n, "array does not match FFT size");
        let scratch_len = plan.get_inplace_scratch_len();

        // last axis is contiguous
        data.par_chunks_mut(n).for_each_init(
            || vec![Complex64::default(); scratch_len],
            |scratch, line| plan.process_with_scratch(line, scratch),
        );

        // middle axis: each i0-plane is independent
        data.par_chunks_mut(n * n).for_each_init(
            || (vec![Complex64::default(); scratch_len], vec![Complex64::default(); n]),
            |(scratch, line), plane| {
                for i2 in 0..n {
                    for i1 in 0..n {
                        line[i1] = plane[i1 * n + i2];
                    }
                    plan.process_with_scratch(line, scratch);
                    for i1 in 0..n {
                        plane[i1 * n + i2] = line[i1];
                    }
                }
            },
        );

        // first axis: gather lines into a transposed buffer
        let mut buf = vec![Complex64::default(); data.len()];
        {
            let src = &*data;
            buf.par_chunks_mut(n).enumerate().for_each_init(
                || vec![Complex64::default(); scratch_len],
                |scratch, (l, line)| {
                    for (i0, v) in line.iter_mut().enumerate() {
                        *v = src[i0 * n * n + l];
                    }
                    plan.process_with_scratch(line, scratch);
                },
            );
        }
        data.par_chunks_mut(n * n).enumerate().for_each(|(i0, plane)| {
            for (l, v) in plane.iter_mut().enumerate() {
                *v = buf[l * n + i0];
            }
        });
    }
}
