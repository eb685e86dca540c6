//! Delay-and-sum kernels.
//!
//! All reconstruction operators flatten to the same per-pixel loop: a list of
//! (signal, assigned transmit element, weight) contributions, each sampled at
//! the two-way delay `(|d_tx(r)| + |d_rx(r)|)/c` for every apodized receive
//! element. Sharing one kernel keeps the FORCES / READI equality bit-honest:
//! for `S = 1` both produce the identical sequence of float operations.
//!
//! Delays that fall outside the record contribute zero. Pixel loops run in
//! parallel over image rows; each pixel is accumulated serially in a fixed
//! order, so results do not depend on the thread count.

use ndarray::Array2;
use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;

use super::{
    analytic_group, analytic_multistatic, decode_forces, partial_decode, BeamformConfig,
    BeamformError, ComplexImage, GroupedDataset, ImageProvenance, ImagingGrid, Interpolation,
    PartiallyDecodedGroup, Real, Window,
};
use crate::hadamard::{inverse_scale, HadamardMatrix};
use crate::simulate::{ArrayGeometry, EncodedDataset, MultistaticDataset};

#[derive(Debug, Clone, Copy)]
struct PlanEntry<T> {
    signal: usize,
    element: usize,
    weight: T,
}

fn sample_at<T: Real>(record: &[Complex<T>], pos: f64, interp: Interpolation) -> Complex<T> {
    let last = (record.len() - 1) as f64;
    match interp {
        Interpolation::Nearest => {
            let k = pos.round();
            if k < 0.0 || k > last {
                Complex::zero()
            } else {
                record[k as usize]
            }
        }
        Interpolation::Linear => {
            if pos < 0.0 || pos > last {
                return Complex::zero();
            }
            let i0 = pos.floor() as usize;
            let frac = pos - i0 as f64;
            let a = record[i0] * T::from_f64(1.0 - frac);
            if frac == 0.0 || i0 + 1 >= record.len() {
                a
            } else {
                a + record[i0 + 1] * T::from_f64(frac)
            }
        }
    }
}

/// Runs the shared pixel loop for a contribution plan over `[n_signals,
/// n_rx, n_t]` analytic data. Receive elements are the first `n_rx` array
/// elements (co-located with the transmit elements).
fn beamform_plan<T: Real>(
    signals: &ndarray::Array3<Complex<T>>,
    plan: &[PlanEntry<T>],
    sample_rate: f64,
    start_time: f64,
    grid: &ImagingGrid,
    geometry: &ArrayGeometry,
    cfg: &BeamformConfig,
) -> Result<Array2<Complex<T>>, BeamformError> {
    let (_, n_rx, n_t) = signals.dim();
    if n_rx > geometry.n_elements
        || plan.iter().any(|e| e.element >= geometry.n_elements)
    {
        return Err(BeamformError::GeometryMismatch {
            needed: n_rx.max(
                plan.iter().map(|e| e.element + 1).max().unwrap_or(0),
            ),
            available: geometry.n_elements,
        });
    }
    let flat = signals
        .as_slice()
        .expect("channel data is stored contiguously");
    let el_pos = geometry.positions();
    let n_lat = grid.n_lateral();
    let n_ax = grid.n_axial();
    let fs = sample_rate;
    let c = cfg.speed_of_sound;

    let rows: Vec<Vec<Complex<T>>> = (0..n_ax)
        .into_par_iter()
        .map(|row| {
            let z = grid.axial_pos(row);
            let half_aperture = z.abs() / (2.0 * cfg.receive_fnumber);
            let mut out = vec![Complex::<T>::zero(); n_lat];
            let mut dists = vec![0.0f64; el_pos.len()];
            let mut apod = vec![T::zero(); n_rx];
            for (col, out_px) in out.iter_mut().enumerate() {
                let x = grid.lateral_pos(col);
                for (d, &ex) in dists.iter_mut().zip(&el_pos) {
                    let dx = ex - x;
                    *d = (dx * dx + z * z).sqrt();
                }
                for (j, a) in apod.iter_mut().enumerate() {
                    let u = (el_pos[j] - x) / half_aperture;
                    *a = if u.abs() <= 1.0 {
                        match cfg.apodization_window {
                            Window::Rect => T::from_f64(1.0),
                            Window::Hann => T::from_f64(
                                0.5 * (1.0 + (std::f64::consts::PI * u).cos()),
                            ),
                        }
                    } else {
                        T::zero()
                    };
                }
                let mut acc = Complex::<T>::zero();
                let mut power = T::zero();
                let mut count = 0usize;
                for entry in plan {
                    let tx_dist = dists[entry.element];
                    let base = entry.signal * n_rx * n_t;
                    for j in 0..n_rx {
                        let a = apod[j];
                        if a == T::zero() {
                            continue;
                        }
                        let tau = (tx_dist + dists[j]) / c;
                        let pos = (tau - start_time) * fs;
                        let record = &flat[base + j * n_t..base + (j + 1) * n_t];
                        let contrib =
                            sample_at(record, pos, cfg.interpolation) * a * entry.weight;
                        acc += contrib;
                        if cfg.cf_weighting {
                            power += contrib.norm_sqr();
                            count += 1;
                        }
                    }
                }
                *out_px = if cfg.cf_weighting {
                    if power == T::zero() {
                        Complex::zero()
                    } else {
                        let cf = acc.norm_sqr() / (T::from_f64(count as f64) * power);
                        acc * cf
                    }
                } else {
                    acc
                };
            }
            out
        })
        .collect();

    let mut pixels = Array2::from_elem((n_ax, n_lat), Complex::<T>::zero());
    for (row, data) in rows.into_iter().enumerate() {
        for (col, v) in data.into_iter().enumerate() {
            pixels[[row, col]] = v;
        }
    }
    Ok(pixels)
}

/// Multistatic delay-and-sum on analytic channel data: signal `i` is delayed
/// as if transmitted by element `i`.
pub fn das_reconstruct<T: Real>(
    dataset: &MultistaticDataset<Complex<T>>,
    grid: &ImagingGrid,
    geometry: &ArrayGeometry,
    cfg: &BeamformConfig,
) -> Result<ComplexImage<T>, BeamformError> {
    let plan: Vec<PlanEntry<T>> = (0..dataset.n_tx())
        .map(|i| PlanEntry {
            signal: i,
            element: i,
            weight: T::from_f64(1.0),
        })
        .collect();
    let pixels = beamform_plan(
        &dataset.samples,
        &plan,
        dataset.sample_rate,
        dataset.start_time,
        grid,
        geometry,
        cfg,
    )?;
    Ok(ComplexImage {
        grid: *grid,
        pixels,
        provenance: ImageProvenance::Das,
    })
}

/// Full FORCES reconstruction: decode with `H⁻¹`, convert to the analytic
/// signal, delay-and-sum. Coherence-factor weighting applies per the config.
pub fn forces_reconstruct<T: Real>(
    encoded: &EncodedDataset<T>,
    h: &HadamardMatrix,
    grid: &ImagingGrid,
    geometry: &ArrayGeometry,
    cfg: &BeamformConfig,
) -> Result<ComplexImage<T>, BeamformError> {
    let decoded = decode_forces(encoded, h)?;
    let analytic = analytic_multistatic(&decoded);
    let mut image = das_reconstruct(&analytic, grid, geometry, cfg)?;
    image.provenance = ImageProvenance::Forces;
    Ok(image)
}

/// Modified delay-and-sum: signal `v` of a partially decoded group is
/// delayed as if transmitted by element `v + Q·(l−1)` of element group `l`.
pub fn grouped_das<T: Real>(
    group: &PartiallyDecodedGroup<Complex<T>>,
    l: usize,
    grid: &ImagingGrid,
    geometry: &ArrayGeometry,
    cfg: &BeamformConfig,
) -> Result<ComplexImage<T>, BeamformError> {
    let q = group.signals.dim().0;
    let n_groups = geometry.n_elements / q;
    if l < 1 || l > n_groups {
        return Err(BeamformError::GroupIndexOutOfRange {
            index: l,
            count: n_groups,
        });
    }
    let plan: Vec<PlanEntry<T>> = (0..q)
        .map(|v| PlanEntry {
            signal: v,
            element: v + q * (l - 1),
            weight: T::from_f64(1.0),
        })
        .collect();
    let pixels = beamform_plan(
        &group.signals,
        &plan,
        group.sample_rate,
        group.start_time,
        grid,
        geometry,
        cfg,
    )?;
    Ok(ComplexImage {
        grid: *grid,
        pixels,
        provenance: ImageProvenance::Das,
    })
}

/// Low-resolution image of one partially decoded (complex) group: the sum
/// over element groups `l` of grouped-DAS sub-images weighted by
/// `ĥ⁽ˢ⁾_{l,s}`, fused into a single pixel pass so coherence-factor
/// weighting sees every contributing sample.
pub fn readi_beamform<T: Real>(
    group: &PartiallyDecodedGroup<Complex<T>>,
    h_s: &HadamardMatrix,
    grid: &ImagingGrid,
    geometry: &ArrayGeometry,
    cfg: &BeamformConfig,
) -> Result<ComplexImage<T>, BeamformError> {
    let q = group.signals.dim().0;
    let n_groups = h_s.rank();
    if n_groups * q != geometry.n_elements {
        return Err(BeamformError::GeometryMismatch {
            needed: n_groups * q,
            available: geometry.n_elements,
        });
    }
    let s = group.group_index;
    let (den, ht) = inverse_scale(h_s);
    let mut plan = Vec::with_capacity(n_groups * q);
    for l in 1..=n_groups {
        let weight = T::from_f64(ht.entry(l, s) as f64 / den as f64);
        for v in 0..q {
            plan.push(PlanEntry {
                signal: v,
                element: v + q * (l - 1),
                weight,
            });
        }
    }
    let pixels = beamform_plan(
        &group.signals,
        &plan,
        group.sample_rate,
        group.start_time,
        grid,
        geometry,
        cfg,
    )?;
    Ok(ComplexImage {
        grid: *grid,
        pixels,
        provenance: ImageProvenance::Readi(s),
    })
}

/// READI reconstruction of the 1-based group `s`: partial decode with
/// `H_Q⁻¹`, analytic conversion, then the weighted grouped-DAS sum.
pub fn readi_low_res<T: Real>(
    grouped: &GroupedDataset<T>,
    s: usize,
    h_s: &HadamardMatrix,
    h_q: &HadamardMatrix,
    grid: &ImagingGrid,
    geometry: &ArrayGeometry,
    cfg: &BeamformConfig,
) -> Result<ComplexImage<T>, BeamformError> {
    if h_s.rank() != grouped.scheme.n_groups {
        return Err(BeamformError::RankMismatch {
            rank: h_s.rank(),
            expected: grouped.scheme.n_groups,
        });
    }
    let decoded = partial_decode(grouped, s, h_q)?;
    let analytic = analytic_group(&decoded);
    readi_beamform(&analytic, h_s, grid, geometry, cfg)
}

/// Evenly spread 0-based element indices for a sparse transmit set of `q`
/// encoded events (`q − 1` designated single elements).
pub fn uniform_sparse_elements(n_elements: usize, q: usize) -> Vec<usize> {
    let picks = q - 1;
    (0..picks)
        .map(|m| {
            (((2 * m + 1) * n_elements) as f64 / (2 * picks) as f64).floor() as usize
        })
        .map(|e| e.min(n_elements - 1))
        .collect()
}

/// Encodes a sparse uFORCES acquisition from a multistatic dataset: event
/// `k` drives the designated single elements with columns 2..Q of `H_Q` and
/// every remaining element with column 1 (the aggregate).
pub fn uforces_encode<F: super::Sample>(
    dataset: &MultistaticDataset<F>,
    h_q: &HadamardMatrix,
    elements: &[usize],
) -> Result<EncodedDataset<F>, BeamformError> {
    let q = h_q.rank();
    let n = dataset.n_tx();
    validate_sparse_set(q, n, elements)?;
    let selected: std::collections::HashSet<usize> = elements.iter().copied().collect();
    let (n_rx, n_t) = (dataset.n_rx(), dataset.n_samples());
    let mut samples = ndarray::Array3::<F>::zeros((q, n_rx, n_t));
    for k in 1..=q {
        let mut acc = samples.index_axis_mut(ndarray::Axis(0), k - 1);
        for i in 0..n {
            let col = if selected.contains(&i) {
                // Position of i in the designated list, offset past the
                // aggregate column.
                elements.iter().position(|&e| e == i).unwrap() + 2
            } else {
                1
            };
            let src = dataset.samples.index_axis(ndarray::Axis(0), i);
            if h_q.entry(k, col) > 0 {
                ndarray::Zip::from(&mut acc)
                    .and(&src)
                    .for_each(|a, &s| *a = *a + s);
            } else {
                ndarray::Zip::from(&mut acc)
                    .and(&src)
                    .for_each(|a, &s| *a = *a - s);
            }
        }
    }
    Ok(EncodedDataset {
        samples,
        sample_rate: dataset.sample_rate,
        start_time: dataset.start_time,
        encoding_rank: q,
    })
}

fn validate_sparse_set(q: usize, n: usize, elements: &[usize]) -> Result<(), BeamformError> {
    if q >= n {
        return Err(BeamformError::InvalidSparseSet(format!(
            "event count {q} must be smaller than the element count {n}"
        )));
    }
    if elements.len() != q - 1 {
        return Err(BeamformError::InvalidSparseSet(format!(
            "expected {} designated elements, got {}",
            q - 1,
            elements.len()
        )));
    }
    let mut seen = std::collections::HashSet::new();
    for &e in elements {
        if e >= n || !seen.insert(e) {
            return Err(BeamformError::InvalidSparseSet(format!(
                "element index {e} out of range or repeated"
            )));
        }
    }
    Ok(())
}

/// Sparse uFORCES reconstruction: decode the `Q` events with `H_Q⁻¹`,
/// discard the aggregate signal, and delay-and-sum the remaining `Q − 1`
/// single-element signals.
pub fn uforces_reconstruct<T: Real>(
    encoded: &EncodedDataset<T>,
    h_q: &HadamardMatrix,
    elements: &[usize],
    grid: &ImagingGrid,
    geometry: &ArrayGeometry,
    cfg: &BeamformConfig,
) -> Result<ComplexImage<T>, BeamformError> {
    let q = h_q.rank();
    if q != encoded.n_events() {
        return Err(BeamformError::RankMismatch {
            rank: q,
            expected: encoded.n_events(),
        });
    }
    validate_sparse_set(q, geometry.n_elements, elements)?;
    let (den, ht) = inverse_scale(h_q);
    let decoded = super::mix_rows(encoded.samples.view(), &ht, 1.0 / den as f64);
    // Row 0 aggregates the undesignated elements and is discarded.
    let singles = decoded.slice(ndarray::s![1.., .., ..]).to_owned();
    let analytic = analytic_multistatic(&MultistaticDataset {
        samples: singles,
        sample_rate: encoded.sample_rate,
        start_time: encoded.start_time,
    });
    let plan: Vec<PlanEntry<T>> = elements
        .iter()
        .enumerate()
        .map(|(idx, &e)| PlanEntry {
            signal: idx,
            element: e,
            weight: T::from_f64(1.0),
        })
        .collect();
    let pixels = beamform_plan(
        &analytic.samples,
        &plan,
        encoded.sample_rate,
        encoded.start_time,
        grid,
        geometry,
        cfg,
    )?;
    Ok(ComplexImage {
        grid: *grid,
        pixels,
        provenance: ImageProvenance::Uforces,
    })
}

/// Decoded single-element signals of a uFORCES acquisition, for inspection
/// and testing: entry `v` is the recovered response of `elements[v]`.
pub fn uforces_decode_singles<T: Real>(
    encoded: &EncodedDataset<T>,
    h_q: &HadamardMatrix,
) -> Result<MultistaticDataset<T>, BeamformError> {
    if h_q.rank() != encoded.n_events() {
        return Err(BeamformError::RankMismatch {
            rank: h_q.rank(),
            expected: encoded.n_events(),
        });
    }
    let (den, ht) = inverse_scale(h_q);
    let decoded = super::mix_rows(encoded.samples.view(), &ht, 1.0 / den as f64);
    Ok(MultistaticDataset {
        samples: decoded.slice(ndarray::s![1.., .., ..]).to_owned(),
        sample_rate: encoded.sample_rate,
        start_time: encoded.start_time,
    })
}
