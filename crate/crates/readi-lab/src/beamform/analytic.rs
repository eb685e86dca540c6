//! Analytic-signal conversion of RF channel data.
//!
//! Forward FFT, zero the negative-frequency bins, double the positive bins
//! (DC and Nyquist stay unscaled), inverse FFT. The real part of the output
//! equals the input.

use ndarray::Array3;
use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use super::Real;
use crate::simulate::MultistaticDataset;

use super::PartiallyDecodedGroup;

struct HilbertPlan<T: Real> {
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    len: usize,
}

impl<T: Real> HilbertPlan<T> {
    fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        HilbertPlan {
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
            len,
        }
    }

    fn run(&self, input: &[T], out: &mut [Complex<T>]) {
        let n = self.len;
        debug_assert_eq!(input.len(), n);
        for (o, &x) in out.iter_mut().zip(input) {
            *o = Complex::new(x, T::zero());
        }
        if n < 2 {
            return;
        }
        self.forward.process(out);
        let two = T::from_f64(2.0);
        let half = n / 2;
        let pos_end = if n % 2 == 0 { half } else { half + 1 };
        for bin in out.iter_mut().take(pos_end).skip(1) {
            *bin = *bin * two;
        }
        for bin in out.iter_mut().skip(half + 1) {
            *bin = Complex::new(T::zero(), T::zero());
        }
        self.inverse.process(out);
        let scale = T::from_f64(1.0 / n as f64);
        for o in out.iter_mut() {
            *o = *o * scale;
        }
    }
}

/// Analytic signal of one real record.
pub fn analytic_signal<T: Real>(input: &[T]) -> Vec<Complex<T>> {
    let plan = HilbertPlan::new(input.len());
    let mut out = vec![Complex::new(T::zero(), T::zero()); input.len()];
    plan.run(input, &mut out);
    out
}

fn analytic_array<T: Real>(samples: &Array3<T>) -> Array3<Complex<T>> {
    let (a, b, t) = samples.dim();
    let plan = HilbertPlan::new(t);
    let mut out = Array3::from_elem((a, b, t), Complex::new(T::zero(), T::zero()));
    for i in 0..a {
        for j in 0..b {
            let src = samples.slice(ndarray::s![i, j, ..]);
            let mut dst = out.slice_mut(ndarray::s![i, j, ..]);
            plan.run(src.as_slice().unwrap(), dst.as_slice_mut().unwrap());
        }
    }
    out
}

fn complex_array<T: Real>(samples: &Array3<T>) -> Array3<Complex<T>> {
    samples.mapv(|x| Complex::new(x, T::zero()))
}

/// Per-channel analytic conversion of a decoded dataset.
pub fn analytic_multistatic<T: Real>(
    dataset: &MultistaticDataset<T>,
) -> MultistaticDataset<Complex<T>> {
    MultistaticDataset {
        samples: analytic_array(&dataset.samples),
        sample_rate: dataset.sample_rate,
        start_time: dataset.start_time,
    }
}

/// Per-channel analytic conversion of a partially decoded group.
pub fn analytic_group<T: Real>(
    group: &PartiallyDecodedGroup<T>,
) -> PartiallyDecodedGroup<Complex<T>> {
    PartiallyDecodedGroup {
        group_index: group.group_index,
        signals: analytic_array(&group.signals),
        sample_rate: group.sample_rate,
        start_time: group.start_time,
    }
}

/// Plain real→complex reinterpretation (zero imaginary part), for exact
/// arithmetic paths that must bypass the Hilbert transform.
pub fn complex_multistatic<T: Real>(
    dataset: &MultistaticDataset<T>,
) -> MultistaticDataset<Complex<T>> {
    MultistaticDataset {
        samples: complex_array(&dataset.samples),
        sample_rate: dataset.sample_rate,
        start_time: dataset.start_time,
    }
}

/// Plain real→complex reinterpretation of a partially decoded group.
pub fn complex_group<T: Real>(
    group: &PartiallyDecodedGroup<T>,
) -> PartiallyDecodedGroup<Complex<T>> {
    PartiallyDecodedGroup {
        group_index: group.group_index,
        signals: complex_array(&group.signals),
        sample_rate: group.sample_rate,
        start_time: group.start_time,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_has_unit_envelope() {
        // Whole number of periods → |analytic| ≈ 1 everywhere.
        let n = 256;
        let f = 8.0 / n as f64;
        let x: Vec<f64> = (0..n)
            .map(|k| (2.0 * std::f64::consts::PI * f * k as f64).cos())
            .collect();
        let a = analytic_signal(&x);
        for (k, v) in a.iter().enumerate() {
            assert!((v.norm() - 1.0).abs() < 1e-6, "sample {k}: {}", v.norm());
        }
    }

    #[test]
    fn real_part_is_preserved() {
        let x: Vec<f64> = (0..100).map(|k| ((k * k) as f64 * 0.013).sin()).collect();
        let a = analytic_signal(&x);
        for (v, &orig) in a.iter().zip(&x) {
            assert!((v.re - orig).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_input_gives_zero_output() {
        let a = analytic_signal(&[0.0f64; 33]);
        assert!(a.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn odd_lengths_are_supported() {
        let n = 255;
        let f = 5.0 / n as f64;
        let x: Vec<f64> = (0..n)
            .map(|k| (2.0 * std::f64::consts::PI * f * k as f64).cos())
            .collect();
        let a = analytic_signal(&x);
        for v in &a {
            assert!((v.norm() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn conversion_is_linear() {
        let x: Vec<f64> = (0..64).map(|k| (k as f64 * 0.3).sin()).collect();
        let y: Vec<f64> = (0..64).map(|k| (k as f64 * 0.11).cos()).collect();
        let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 2.0 * a - 3.0 * b).collect();
        let ax = analytic_signal(&x);
        let ay = analytic_signal(&y);
        let asum = analytic_signal(&sum);
        for k in 0..64 {
            let expect = ax[k] * 2.0 - ay[k] * 3.0;
            assert!((asum[k] - expect).norm() < 1e-9);
        }
    }
}
