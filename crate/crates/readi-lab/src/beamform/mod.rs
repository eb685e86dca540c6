//! Reconstruction core: FORCES decode + delay-and-sum, READI grouping and
//! partial decoding, grouped DAS, low-resolution image formation, coherent
//! compounding, coherence-factor weighting, and the uFORCES baseline.

mod analytic;
mod das;

pub use analytic::{
    analytic_group, analytic_multistatic, analytic_signal, complex_group, complex_multistatic,
};
pub use das::{
    das_reconstruct, forces_reconstruct, grouped_das, readi_beamform, readi_low_res,
    uforces_reconstruct, uniform_sparse_elements,
};

use ndarray::{Array2, Array3, ArrayView3, Axis, Zip};
use num_complex::Complex;
use num_traits::{Float, FloatConst, NumAssign, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hadamard::{inverse_scale, GroupingScheme, HadamardMatrix};
use crate::simulate::{EncodedDataset, MultistaticDataset};

#[derive(Debug, Error)]
pub enum BeamformError {
    #[error("encoding rank {rank} does not match {expected} dataset rows")]
    RankMismatch { rank: usize, expected: usize },
    #[error("grouping ({n_groups}×{group_size}) does not cover {n_events} events")]
    GroupingMismatch {
        n_events: usize,
        n_groups: usize,
        group_size: usize,
    },
    #[error("group index {index} out of range 1..={count}")]
    GroupIndexOutOfRange { index: usize, count: usize },
    #[error("dataset uses {needed} channels but the geometry has {available} elements")]
    GeometryMismatch { needed: usize, available: usize },
    #[error("images share no common grid")]
    GridMismatch,
    #[error("cannot compound an empty image list")]
    EmptyCompound,
    #[error("invalid sparse transmit set: {0}")]
    InvalidSparseSet(String),
}

/// Real scalar the beamforming kernels are generic over (f32 or f64).
pub trait Real: Float + FloatConst + NumAssign + rustfft::FftNum {
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Real for f32 {
    fn from_f64(x: f64) -> f32 {
        x as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn from_f64(x: f64) -> f64 {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
}

/// Scalar that can be mixed by ±1 matrices and rescaled: the payload type of
/// datasets through encode / decode / grouping (real or complex, f32 or f64).
pub trait Sample:
    Copy
    + Send
    + Sync
    + 'static
    + Zero
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
{
    fn scale_by(self, k: f64) -> Self;
}

impl Sample for f32 {
    fn scale_by(self, k: f64) -> f32 {
        self * k as f32
    }
}

impl Sample for f64 {
    fn scale_by(self, k: f64) -> f64 {
        self * k
    }
}

impl<T: Real> Sample for Complex<T> {
    fn scale_by(self, k: f64) -> Complex<T> {
        self * T::from_f64(k)
    }
}

/// Rectangular pixel grid over the imaged region. Pixels sit at
/// `min + k·pixel_size` along each axis; images are stored `[axial, lateral]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImagingGrid {
    /// [min, max] lateral extent in meters.
    pub lateral: [f64; 2],
    /// [min, max] axial extent in meters.
    pub axial: [f64; 2],
    /// (lateral, axial) pixel size in meters.
    pub pixel_size: [f64; 2],
}

impl ImagingGrid {
    pub fn n_lateral(&self) -> usize {
        ((self.lateral[1] - self.lateral[0]) / self.pixel_size[0] * (1.0 + 1e-12)).floor()
            as usize
            + 1
    }

    pub fn n_axial(&self) -> usize {
        ((self.axial[1] - self.axial[0]) / self.pixel_size[1] * (1.0 + 1e-12)).floor() as usize
            + 1
    }

    pub fn lateral_pos(&self, col: usize) -> f64 {
        self.lateral[0] + col as f64 * self.pixel_size[0]
    }

    pub fn axial_pos(&self, row: usize) -> f64 {
        self.axial[0] + row as f64 * self.pixel_size[1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Rect,
    Hann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    Nearest,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamformConfig {
    pub speed_of_sound: f64,
    pub receive_fnumber: f64,
    pub apodization_window: Window,
    pub cf_weighting: bool,
    pub interpolation: Interpolation,
}

impl Default for BeamformConfig {
    fn default() -> Self {
        BeamformConfig {
            speed_of_sound: 1540.0,
            receive_fnumber: 1.0,
            apodization_window: Window::Rect,
            cf_weighting: true,
            interpolation: Interpolation::Linear,
        }
    }
}

/// Where an image came from, carried along for artifact naming.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageProvenance {
    Das,
    Forces,
    Readi(usize),
    Uforces,
    Compound,
    Warped,
}

/// Beamformed image of complex (analytic-RF) pixels on an [`ImagingGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexImage<T: Real> {
    pub grid: ImagingGrid,
    /// `[axial, lateral]` pixel array.
    pub pixels: Array2<Complex<T>>,
    pub provenance: ImageProvenance,
}

impl<T: Real> ComplexImage<T> {
    /// Pixel magnitudes as f64, the input to display mapping and NCC.
    pub fn envelope(&self) -> Array2<f64> {
        self.pixels.mapv(|p| p.norm().to_f64())
    }

    /// (row, col) of the largest envelope value.
    pub fn argmax_envelope(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut best_v = -1.0;
        for ((r, c), p) in self.pixels.indexed_iter() {
            let v = p.norm().to_f64();
            if v > best_v {
                best_v = v;
                best = (r, c);
            }
        }
        best
    }

    /// Relative L2 difference `‖a − b‖₂ / ‖a‖₂`, accumulated in f64.
    pub fn rel_l2_diff(&self, other: &ComplexImage<T>) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (a, b) in self.pixels.iter().zip(other.pixels.iter()) {
            let dr = a.re.to_f64() - b.re.to_f64();
            let di = a.im.to_f64() - b.im.to_f64();
            num += dr * dr + di * di;
            den += a.re.to_f64() * a.re.to_f64() + a.im.to_f64() * a.im.to_f64();
        }
        if den == 0.0 {
            return if num == 0.0 { 0.0 } else { f64::INFINITY };
        }
        (num / den).sqrt()
    }
}

/// Encoded ensemble resliced into `S` sequential groups of `Q` events.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedDataset<F> {
    pub scheme: GroupingScheme,
    /// `S` blocks of `[Q, receive, time]` samples, events in original order.
    pub groups: Vec<Array3<F>>,
    pub sample_rate: f64,
    pub start_time: f64,
}

impl<F> GroupedDataset<F> {
    /// Samples of the 1-based group `s`.
    pub fn group(&self, s: usize) -> &Array3<F> {
        &self.groups[s - 1]
    }
}

/// One event group after partial decoding with `H_Q⁻¹`: signal `v` mixes the
/// responses of element `v` of every element group.
#[derive(Debug, Clone, PartialEq)]
pub struct PartiallyDecodedGroup<F> {
    /// 1-based group index `s`.
    pub group_index: usize,
    /// `[Q, receive, time]` signals.
    pub signals: Array3<F>,
    pub sample_rate: f64,
    pub start_time: f64,
}

/// Mixes dataset rows by a ±1 matrix and rescales: `out_r = k·Σ_c M[r,c]·in_c`.
fn mix_rows<F: Sample>(input: ArrayView3<'_, F>, matrix: &HadamardMatrix, k: f64) -> Array3<F> {
    let n = input.shape()[0];
    assert_eq!(matrix.rank(), n);
    let mut out = Array3::<F>::zeros(input.raw_dim());
    for r in 0..n {
        let mut acc = out.index_axis_mut(Axis(0), r);
        for c in 0..n {
            let src = input.index_axis(Axis(0), c);
            if matrix.entry(r + 1, c + 1) > 0 {
                Zip::from(&mut acc).and(&src).for_each(|a, &s| *a = *a + s);
            } else {
                Zip::from(&mut acc).and(&src).for_each(|a, &s| *a = *a - s);
            }
        }
    }
    if k != 1.0 {
        out.mapv_inplace(|x| x.scale_by(k));
    }
    out
}

/// FORCES encoding `G = H·S`: one full-aperture event per matrix row.
pub fn encode_forces<F: Sample>(
    dataset: &MultistaticDataset<F>,
    h: &HadamardMatrix,
) -> Result<EncodedDataset<F>, BeamformError> {
    if h.rank() != dataset.n_tx() {
        return Err(BeamformError::RankMismatch {
            rank: h.rank(),
            expected: dataset.n_tx(),
        });
    }
    Ok(EncodedDataset {
        samples: mix_rows(dataset.samples.view(), h, 1.0),
        sample_rate: dataset.sample_rate,
        start_time: dataset.start_time,
        encoding_rank: h.rank(),
    })
}

/// FORCES decoding `S = (1/n)·Hᵀ·G`, the inverse of [`encode_forces`].
pub fn decode_forces<F: Sample>(
    encoded: &EncodedDataset<F>,
    h: &HadamardMatrix,
) -> Result<MultistaticDataset<F>, BeamformError> {
    if h.rank() != encoded.n_events() {
        return Err(BeamformError::RankMismatch {
            rank: h.rank(),
            expected: encoded.n_events(),
        });
    }
    let (den, ht) = inverse_scale(h);
    Ok(MultistaticDataset {
        samples: mix_rows(encoded.samples.view(), &ht, 1.0 / den as f64),
        sample_rate: encoded.sample_rate,
        start_time: encoded.start_time,
    })
}

/// Reslices the ensemble into sequential groups; no samples are modified.
pub fn group_dataset<F: Sample>(
    encoded: &EncodedDataset<F>,
    scheme: GroupingScheme,
) -> Result<GroupedDataset<F>, BeamformError> {
    if scheme.n_total != encoded.n_events() {
        return Err(BeamformError::GroupingMismatch {
            n_events: encoded.n_events(),
            n_groups: scheme.n_groups,
            group_size: scheme.group_size,
        });
    }
    let q = scheme.group_size;
    let groups = (0..scheme.n_groups)
        .map(|s| {
            encoded
                .samples
                .slice(ndarray::s![s * q..(s + 1) * q, .., ..])
                .to_owned()
        })
        .collect();
    Ok(GroupedDataset {
        scheme,
        groups,
        sample_rate: encoded.sample_rate,
        start_time: encoded.start_time,
    })
}

/// Partially decodes the 1-based group `s` with `H_Q⁻¹`.
pub fn partial_decode<F: Sample>(
    grouped: &GroupedDataset<F>,
    s: usize,
    h_q: &HadamardMatrix,
) -> Result<PartiallyDecodedGroup<F>, BeamformError> {
    if s < 1 || s > grouped.scheme.n_groups {
        return Err(BeamformError::GroupIndexOutOfRange {
            index: s,
            count: grouped.scheme.n_groups,
        });
    }
    if h_q.rank() != grouped.scheme.group_size {
        return Err(BeamformError::RankMismatch {
            rank: h_q.rank(),
            expected: grouped.scheme.group_size,
        });
    }
    let (den, ht) = inverse_scale(h_q);
    Ok(PartiallyDecodedGroup {
        group_index: s,
        signals: mix_rows(grouped.group(s).view(), &ht, 1.0 / den as f64),
        sample_rate: grouped.sample_rate,
        start_time: grouped.start_time,
    })
}

/// Coherent pixel-wise sum of images on a common grid.
pub fn compound<T: Real>(images: &[ComplexImage<T>]) -> Result<ComplexImage<T>, BeamformError> {
    let first = images.first().ok_or(BeamformError::EmptyCompound)?;
    let mut pixels = first.pixels.clone();
    for img in &images[1..] {
        if img.grid != first.grid || img.pixels.dim() != first.pixels.dim() {
            return Err(BeamformError::GridMismatch);
        }
        Zip::from(&mut pixels)
            .and(&img.pixels)
            .for_each(|a, &b| *a += b);
    }
    Ok(ComplexImage {
        grid: first.grid,
        pixels,
        provenance: ImageProvenance::Compound,
    })
}

/// Coherence factor of a pixel's contributing samples:
/// `|Σ S_k|² / (K·Σ|S_k|²)`, normalized into [0, 1]. All-zero samples give 0.
pub fn coherence_factor<T: Real>(samples: &[Complex<T>]) -> T {
    let mut sum = Complex::<T>::zero();
    let mut power = T::zero();
    for &s in samples {
        sum += s;
        power += s.norm_sqr();
    }
    if power == T::zero() || samples.is_empty() {
        return T::zero();
    }
    sum.norm_sqr() / (T::from_f64(samples.len() as f64) * power)
}

/// Log-compresses an envelope to an 8-bit display image:
/// `20·log10(|p|/max)` clipped to `[−dynamic_range_db, 0]` → `[0, 255]`.
pub fn envelope_log<T: Real>(image: &ComplexImage<T>, dynamic_range_db: f64) -> Array2<u8> {
    assert!(dynamic_range_db > 0.0);
    let env = image.envelope();
    let max = env.iter().cloned().fold(0.0f64, f64::max);
    env.mapv(|v| {
        if max == 0.0 || v == 0.0 {
            return 0u8;
        }
        let db = (20.0 * (v / max).log10()).clamp(-dynamic_range_db, 0.0);
        ((db + dynamic_range_db) / dynamic_range_db * 255.0).round() as u8
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hadamard::sylvester;
    use num_complex::Complex64;

    fn dataset_from(rows: Vec<Vec<f64>>) -> MultistaticDataset<f64> {
        let n = rows.len();
        let t = rows[0].len();
        let mut samples = Array3::zeros((n, 1, t));
        for (i, row) in rows.iter().enumerate() {
            for (k, &v) in row.iter().enumerate() {
                samples[[i, 0, k]] = v;
            }
        }
        MultistaticDataset {
            samples,
            sample_rate: 1.0,
            start_time: 0.0,
        }
    }

    #[test]
    fn rank_one_encoding_is_identity() {
        let ds = dataset_from(vec![vec![1.0, -2.0, 3.0]]);
        let h = sylvester(1).unwrap();
        let g = encode_forces(&ds, &h).unwrap();
        assert_eq!(g.samples, ds.samples);
        let back = decode_forces(&g, &h).unwrap();
        assert_eq!(back.samples, ds.samples);
    }

    #[test]
    fn impulse_on_first_transmit_encodes_to_signed_copies() {
        // Only s₁ nonzero → g_e = h_{e,1}·s₁ for all events.
        let ds = dataset_from(vec![vec![2.0, -1.0], vec![0.0; 2], vec![0.0; 2], vec![0.0; 2]]);
        let h = sylvester(4).unwrap();
        let g = encode_forces(&ds, &h).unwrap();
        for e in 0..4 {
            let sign = h.entry(e + 1, 1) as f64;
            for t in 0..2 {
                assert_eq!(g.samples[[e, 0, t]], sign * ds.samples[[0, 0, t]]);
            }
        }
    }

    #[test]
    fn two_event_decode_recovers_half_sum_and_difference() {
        // G = [a+b, a−b] decodes to S = [a, b].
        let a = [1.0, 4.0, -2.0];
        let b = [3.0, 0.5, 7.0];
        let mut samples = Array3::zeros((2, 1, 3));
        for t in 0..3 {
            samples[[0, 0, t]] = a[t] + b[t];
            samples[[1, 0, t]] = a[t] - b[t];
        }
        let enc = EncodedDataset {
            samples,
            sample_rate: 1.0,
            start_time: 0.0,
            encoding_rank: 2,
        };
        let dec = decode_forces(&enc, &sylvester(2).unwrap()).unwrap();
        for t in 0..3 {
            assert!((dec.samples[[0, 0, t]] - a[t]).abs() < 1e-12);
            assert!((dec.samples[[1, 0, t]] - b[t]).abs() < 1e-12);
        }
    }

    #[test]
    fn encode_decode_round_trip() {
        let rows: Vec<Vec<f64>> = (0..8)
            .map(|i| (0..5).map(|t| ((i * 7 + t * 3) as f64).sin()).collect())
            .collect();
        let ds = dataset_from(rows);
        let h = sylvester(8).unwrap();
        let g = encode_forces(&ds, &h).unwrap();
        let back = decode_forces(&g, &h).unwrap();
        let mut num = 0.0;
        let mut den = 0.0;
        for (x, y) in back.samples.iter().zip(ds.samples.iter()) {
            num += (x - y) * (x - y);
            den += y * y;
        }
        assert!(num.sqrt() <= 1e-10 * den.sqrt());
    }

    #[test]
    fn zero_dataset_decodes_to_zero() {
        let enc = EncodedDataset {
            samples: Array3::<f64>::zeros((4, 2, 6)),
            sample_rate: 1.0,
            start_time: 0.0,
            encoding_rank: 4,
        };
        let dec = decode_forces(&enc, &sylvester(4).unwrap()).unwrap();
        assert!(dec.samples.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn rank_mismatch_is_reported() {
        let ds = dataset_from(vec![vec![0.0; 3]; 4]);
        assert!(matches!(
            encode_forces(&ds, &sylvester(8).unwrap()),
            Err(BeamformError::RankMismatch { .. })
        ));
    }

    #[test]
    fn grouping_slices_sequentially() {
        let mut samples = Array3::zeros((8, 1, 1));
        for e in 0..8 {
            samples[[e, 0, 0]] = e as f64 + 1.0;
        }
        let enc = EncodedDataset {
            samples,
            sample_rate: 1.0,
            start_time: 0.0,
            encoding_rank: 8,
        };
        let scheme = GroupingScheme::new(8, 4).unwrap();
        let grouped = group_dataset(&enc, scheme).unwrap();
        // Q=2: group 3 holds events {5, 6}.
        assert_eq!(grouped.group(3)[[0, 0, 0]], 5.0);
        assert_eq!(grouped.group(3)[[1, 0, 0]], 6.0);

        // Concatenating the groups in order reproduces the ensemble.
        let mut flat = Vec::new();
        for s in 1..=4 {
            flat.extend(grouped.group(s).iter().cloned());
        }
        assert_eq!(flat, enc.samples.iter().cloned().collect::<Vec<_>>());

        // S=1 is the whole ensemble unchanged.
        let single = group_dataset(&enc, GroupingScheme::new(8, 1).unwrap()).unwrap();
        assert_eq!(single.group(1), &enc.samples);
    }

    #[test]
    fn partial_decode_matches_the_four_event_worked_case() {
        // N=4, S=2, Q=2 with distinct constant signals:
        // d'₁ = [s₁+s₃, s₂+s₄], d'₂ = [s₁−s₃, s₂−s₄].
        let s: Vec<Vec<f64>> = vec![vec![1.0], vec![10.0], vec![100.0], vec![1000.0]];
        let ds = dataset_from(s);
        let h4 = sylvester(4).unwrap();
        let enc = encode_forces(&ds, &h4).unwrap();
        let grouped = group_dataset(&enc, GroupingScheme::new(4, 2).unwrap()).unwrap();
        let h2 = sylvester(2).unwrap();
        let d1 = partial_decode(&grouped, 1, &h2).unwrap();
        let d2 = partial_decode(&grouped, 2, &h2).unwrap();
        assert_eq!(d1.signals[[0, 0, 0]], 1.0 + 100.0);
        assert_eq!(d1.signals[[1, 0, 0]], 10.0 + 1000.0);
        assert_eq!(d2.signals[[0, 0, 0]], 1.0 - 100.0);
        assert_eq!(d2.signals[[1, 0, 0]], 10.0 - 1000.0);
    }

    #[test]
    fn partial_decode_with_unit_groups_is_a_copy() {
        let ds = dataset_from(vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        let h2 = sylvester(2).unwrap();
        let enc = encode_forces(&ds, &h2).unwrap();
        let grouped = group_dataset(&enc, GroupingScheme::new(2, 2).unwrap()).unwrap();
        let h1 = sylvester(1).unwrap();
        for s in 1..=2 {
            let d = partial_decode(&grouped, s, &h1).unwrap();
            assert_eq!(&d.signals, grouped.group(s));
        }
    }

    #[test]
    fn partial_decode_has_the_group_mixing_structure() {
        // d'_{v,s} = Σ_l h⁽ˢ⁾_{s,l}·s_{v+Q(l−1)} for static noiseless input.
        let n = 8;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..6).map(|t| ((i * 11 + t * 5) as f64 * 0.37).cos()).collect())
            .collect();
        let ds = dataset_from(rows);
        let h_n = sylvester(n).unwrap();
        let enc = encode_forces(&ds, &h_n).unwrap();
        for s_groups in [2usize, 4] {
            let scheme = GroupingScheme::new(n, s_groups).unwrap();
            let q = scheme.group_size;
            let grouped = group_dataset(&enc, scheme).unwrap();
            let h_s = sylvester(s_groups).unwrap();
            let h_q = sylvester(q).unwrap();
            for s in 1..=s_groups {
                let d = partial_decode(&grouped, s, &h_q).unwrap();
                for v in 1..=q {
                    for t in 0..6 {
                        let mut expect = 0.0;
                        for l in 1..=s_groups {
                            expect += h_s.entry(s, l) as f64
                                * ds.samples[[v + q * (l - 1) - 1, 0, t]];
                        }
                        let got = d.signals[[v - 1, 0, t]];
                        assert!(
                            (got - expect).abs() <= 1e-10 * expect.abs().max(1.0),
                            "S={s_groups} s={s} v={v} t={t}: {got} vs {expect}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn coherence_factor_examples() {
        let one = Complex64::new(1.0, 0.0);
        assert!((coherence_factor(&[one; 4]) - 1.0).abs() < 1e-12);
        assert!((coherence_factor(&[one, -one])).abs() < 1e-12);
        let mixed = [one, one, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)];
        assert!((coherence_factor(&mixed) - 0.5).abs() < 1e-12);
        assert_eq!(coherence_factor::<f64>(&[Complex64::new(0.0, 0.0); 3]), 0.0);
    }

    #[test]
    fn coherence_factor_stays_in_unit_interval() {
        // Cauchy–Schwarz puts |Σs|² ≤ K·Σ|s|²; spot-check pseudo-random sets.
        let mut state = 1234567u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        for k in 1..20 {
            let samples: Vec<Complex64> =
                (0..k).map(|_| Complex64::new(next(), next())).collect();
            let cf = coherence_factor(&samples);
            assert!((-1e-12..=1.0 + 1e-12).contains(&cf), "cf={cf}");
        }
    }

    #[test]
    fn display_mapping_endpoints() {
        let grid = ImagingGrid {
            lateral: [0.0, 1e-3],
            axial: [1e-3, 2e-3],
            pixel_size: [1e-3, 1e-3],
        };
        let mut pixels = Array2::from_elem((2, 2), Complex64::new(0.0, 0.0));
        pixels[[0, 0]] = Complex64::new(1.0, 0.0);
        pixels[[0, 1]] = Complex64::new(0.5, 0.0);
        pixels[[1, 0]] = Complex64::new(1e-9, 0.0);
        let img = ComplexImage {
            grid,
            pixels,
            provenance: ImageProvenance::Das,
        };
        let disp = envelope_log(&img, 60.0);
        assert_eq!(disp[[0, 0]], 255);
        assert_eq!(disp[[1, 0]], 0); // far below the dynamic range floor
        assert_eq!(disp[[1, 1]], 0); // exact zero
        let half_db = 20.0 * 0.5f64.log10(); // ≈ −6.02 dB
        let expect = ((half_db + 60.0) / 60.0 * 255.0).round() as u8;
        assert_eq!(disp[[0, 1]], expect);

        let zero = ComplexImage {
            grid,
            pixels: Array2::from_elem((2, 2), Complex64::new(0.0, 0.0)),
            provenance: ImageProvenance::Das,
        };
        assert!(envelope_log(&zero, 60.0).iter().all(|&v| v == 0));
    }

    #[test]
    fn compound_requires_matching_grids() {
        let grid = ImagingGrid {
            lateral: [0.0, 1e-3],
            axial: [1e-3, 2e-3],
            pixel_size: [1e-3, 1e-3],
        };
        let img = ComplexImage {
            grid,
            pixels: Array2::from_elem((2, 2), Complex64::new(1.0, 0.0)),
            provenance: ImageProvenance::Das,
        };
        let one = compound(&[img.clone()]).unwrap();
        assert_eq!(one.pixels, img.pixels);
        let two = compound(&[img.clone(), img.clone()]).unwrap();
        assert_eq!(two.pixels[[0, 0]], Complex64::new(2.0, 0.0));

        let mut other = img.clone();
        other.grid.axial = [1e-3, 3e-3];
        assert!(matches!(
            compound(&[img, other]),
            Err(BeamformError::GridMismatch)
        ));
        let empty: Vec<ComplexImage<f64>> = vec![];
        assert!(matches!(
            compound(&empty),
            Err(BeamformError::EmptyCompound)
        ));
    }
}
