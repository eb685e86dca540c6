//! Analytic pulse-echo forward model for point-scatterer scenes.
//!
//! Elements are isotropic points on the lateral axis; a scatterer at `r`
//! echoes the transmit pulse back with the two-way delay
//! `(|d_i(r)| + |d_j(r)|)/c`. No attenuation, directivity, or
//! frequency-dependent effects — the model stays analytic so reconstruction
//! tests have a closed-form oracle. Scene motion is discretized per transmit
//! event (the scene is frozen within one pulse-echo cycle).

use ndarray::Array3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hadamard::HadamardMatrix;

#[derive(Debug, Error)]
pub enum SimulateError {
    #[error("sample rate {got} Hz is below 4× the center frequency ({required} Hz)")]
    Undersampled { required: f64, got: f64 },
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("encoding rank {rank} does not match {n_elements} transmit elements")]
    RankMismatch { rank: usize, n_elements: usize },
}

/// Uniform linear array on the lateral axis, centered at 0, elements at
/// depth 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub n_elements: usize,
    /// Element spacing in meters.
    pub pitch: f64,
}

impl ArrayGeometry {
    pub fn new(n_elements: usize, pitch: f64) -> Self {
        ArrayGeometry { n_elements, pitch }
    }

    /// Lateral coordinate of the 0-based element `idx`, symmetric about 0.
    pub fn position(&self, idx: usize) -> f64 {
        (idx as f64 - (self.n_elements as f64 - 1.0) / 2.0) * self.pitch
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n_elements).map(|i| self.position(i)).collect()
    }

    /// Distance from element `idx` to a (lateral, axial) point in meters.
    pub fn distance(&self, idx: usize, point: [f64; 2]) -> f64 {
        let dx = self.position(idx) - point[0];
        (dx * dx + point[1] * point[1]).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Envelope {
    Rectangular,
    Hann,
}

/// Sinusoidal transmit pulse: `sin(2π f_c t)` gated to `cycles/f_c` seconds
/// and shaped by the envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseDefinition {
    pub center_frequency: f64,
    pub cycles: u32,
    pub envelope: Envelope,
    pub sample_rate: f64,
}

impl PulseDefinition {
    pub fn validate(&self) -> Result<(), SimulateError> {
        let required = 4.0 * self.center_frequency;
        if self.sample_rate < required {
            return Err(SimulateError::Undersampled {
                required,
                got: self.sample_rate,
            });
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.cycles as f64 / self.center_frequency
    }

    /// Continuous pulse evaluation; zero outside `[0, duration]`.
    pub fn eval(&self, t: f64) -> f64 {
        let dur = self.duration();
        if t < 0.0 || t > dur || dur == 0.0 {
            return 0.0;
        }
        let carrier = (2.0 * std::f64::consts::PI * self.center_frequency * t).sin();
        let env = match self.envelope {
            Envelope::Rectangular => 1.0,
            Envelope::Hann => 0.5 * (1.0 - (2.0 * std::f64::consts::PI * t / dur).cos()),
        };
        carrier * env
    }
}

/// Samples the pulse on `[0, duration)` at the pulse's sample rate.
pub fn pulse_waveform(pulse: &PulseDefinition) -> Result<Vec<f64>, SimulateError> {
    pulse.validate()?;
    let n = (pulse.duration() * pulse.sample_rate).round() as usize;
    Ok((0..n)
        .map(|k| pulse.eval(k as f64 / pulse.sample_rate))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scatterer {
    /// (lateral, axial) in meters; axial must be > 0 (in front of the array).
    pub position: [f64; 2],
    /// (lateral, axial) velocity in m/s.
    #[serde(default)]
    pub velocity: [f64; 2],
    pub reflectivity: f64,
}

/// Time-parameterized point-scatterer scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScattererScene {
    pub scatterers: Vec<Scatterer>,
    /// Speed of sound in m/s.
    pub speed_of_sound: f64,
    /// Pulse repetition frequency in Hz (one transmit event per period).
    pub prf: f64,
    /// Additive white Gaussian noise level on raw channel data, in dB
    /// relative to the RMS of the noiseless dataset. `None` disables noise.
    #[serde(default)]
    pub noise_snr_db: Option<f64>,
    #[serde(default)]
    pub rng_seed: u64,
}

impl ScattererScene {
    pub fn validate(&self) -> Result<(), SimulateError> {
        if !(self.speed_of_sound > 0.0) {
            return Err(SimulateError::InvalidScene(format!(
                "speed of sound must be positive, got {}",
                self.speed_of_sound
            )));
        }
        if !(self.prf > 0.0) {
            return Err(SimulateError::InvalidScene(format!(
                "prf must be positive, got {}",
                self.prf
            )));
        }
        Ok(())
    }
}

/// Scatterer positions frozen at the given 1-based transmit event:
/// `position + velocity·(event − 1)/prf`.
pub fn scene_at_event(scene: &ScattererScene, event_index: usize) -> Vec<[f64; 2]> {
    debug_assert!(event_index >= 1);
    let dt = (event_index - 1) as f64 / scene.prf;
    scene
        .scatterers
        .iter()
        .map(|s| {
            [
                s.position[0] + s.velocity[0] * dt,
                s.position[1] + s.velocity[1] * dt,
            ]
        })
        .collect()
}

/// The N×M×T tensor of per-(transmit element, receive element) signals.
///
/// Sample layout is `[transmit, receive, time]`. The scalar type is `f64`
/// straight out of the simulator and `Complex<_>` after analytic conversion.
#[derive(Debug, Clone, PartialEq)]
pub struct MultistaticDataset<F> {
    pub samples: Array3<F>,
    pub sample_rate: f64,
    pub start_time: f64,
}

impl<F> MultistaticDataset<F> {
    pub fn n_tx(&self) -> usize {
        self.samples.shape()[0]
    }
    pub fn n_rx(&self) -> usize {
        self.samples.shape()[1]
    }
    pub fn n_samples(&self) -> usize {
        self.samples.shape()[2]
    }
}

/// Aperture-encoded ensemble: one signal per transmit *event* rather than
/// per transmit element. Layout `[event, receive, time]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedDataset<F> {
    pub samples: Array3<F>,
    pub sample_rate: f64,
    pub start_time: f64,
    pub encoding_rank: usize,
}

impl<F> EncodedDataset<F> {
    pub fn n_events(&self) -> usize {
        self.samples.shape()[0]
    }
    pub fn n_rx(&self) -> usize {
        self.samples.shape()[1]
    }
    pub fn n_samples(&self) -> usize {
        self.samples.shape()[2]
    }
}

fn check_positions(positions: &[[f64; 2]]) -> Result<(), SimulateError> {
    for (k, p) in positions.iter().enumerate() {
        if !(p[1] > 0.0) {
            return Err(SimulateError::InvalidScene(format!(
                "scatterer {k} at axial {} m is behind the array",
                p[1]
            )));
        }
    }
    Ok(())
}

/// Record length covering the farthest two-way echo over all events.
fn record_samples(
    scene: &ScattererScene,
    geometry: &ArrayGeometry,
    pulse: &PulseDefinition,
    n_events: usize,
) -> usize {
    let mut max_dist: f64 = 0.0;
    for e in 1..=n_events.max(1) {
        for p in scene_at_event(scene, e) {
            for i in 0..geometry.n_elements {
                max_dist = max_dist.max(geometry.distance(i, p));
            }
        }
    }
    let t_max = 2.0 * max_dist / scene.speed_of_sound + pulse.duration();
    (t_max * pulse.sample_rate).ceil() as usize + 2
}

/// Adds `refl · p(t − delay)` into one channel record.
fn add_echo(
    channel: &mut [f64],
    pulse: &PulseDefinition,
    fs: f64,
    delay: f64,
    refl: f64,
) {
    let lo = (delay * fs).ceil().max(0.0) as usize;
    let hi = (((delay + pulse.duration()) * fs).floor() as usize).min(channel.len() - 1);
    for n in lo..=hi.max(lo).min(channel.len() - 1) {
        channel[n] += refl * pulse.eval(n as f64 / fs - delay);
    }
}

fn add_noise(samples: &mut Array3<f64>, snr_db: f64, seed: u64) {
    let n_total = samples.len();
    if n_total == 0 {
        return;
    }
    let rms = (samples.iter().map(|x| x * x).sum::<f64>() / n_total as f64).sqrt();
    if rms == 0.0 {
        return;
    }
    let sigma = rms * 10f64.powf(-snr_db / 20.0);
    let (n_a, n_b, n_t) = samples.dim();
    for a in 0..n_a {
        for b in 0..n_b {
            // One independent, reproducible stream per (event, channel) so
            // parallel simulation stays deterministic.
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream((a * n_b + b) as u64 + 1);
            for t in 0..n_t {
                let z: f64 = StandardNormal.sample(&mut rng);
                samples[[a, b, t]] += sigma * z;
            }
        }
    }
}

/// Per-(element, element) channel data with the scene frozen at
/// `event_index` (1-based): `s_ij(t) = Σ_k ρ_k·p(t − (|d_i| + |d_j|)/c)`.
///
/// Every element both transmits and receives, so the receive count equals
/// the element count. Optional white noise is applied at the scene's SNR.
pub fn simulate_multistatic(
    scene: &ScattererScene,
    geometry: &ArrayGeometry,
    pulse: &PulseDefinition,
    event_index: usize,
) -> Result<MultistaticDataset<f64>, SimulateError> {
    scene.validate()?;
    pulse.validate()?;
    let positions = scene_at_event(scene, event_index);
    check_positions(&positions)?;

    let n = geometry.n_elements;
    let n_t = record_samples(scene, geometry, pulse, event_index);
    let fs = pulse.sample_rate;
    let c = scene.speed_of_sound;
    let mut samples = Array3::<f64>::zeros((n, n, n_t));

    for (k, p) in positions.iter().enumerate() {
        let refl = scene.scatterers[k].reflectivity;
        let dists: Vec<f64> = (0..n).map(|i| geometry.distance(i, *p)).collect();
        for i in 0..n {
            for j in 0..n {
                let delay = (dists[i] + dists[j]) / c;
                add_echo(
                    samples
                        .slice_mut(ndarray::s![i, j, ..])
                        .as_slice_mut()
                        .unwrap(),
                    pulse,
                    fs,
                    delay,
                    refl,
                );
            }
        }
    }

    if let Some(snr) = scene.noise_snr_db {
        add_noise(&mut samples, snr, scene.rng_seed);
    }

    Ok(MultistaticDataset {
        samples,
        sample_rate: fs,
        start_time: 0.0,
    })
}

/// Full-aperture encoded acquisition: event `e` transmits all elements with
/// the ±1 signs of row `e` of the encoding matrix, with the scene advanced
/// to each event. For a static scene this equals `H × multistatic`.
pub fn simulate_forces(
    scene: &ScattererScene,
    geometry: &ArrayGeometry,
    pulse: &PulseDefinition,
    encoding: &HadamardMatrix,
) -> Result<EncodedDataset<f64>, SimulateError> {
    scene.validate()?;
    pulse.validate()?;
    let n = geometry.n_elements;
    if encoding.rank() != n {
        return Err(SimulateError::RankMismatch {
            rank: encoding.rank(),
            n_elements: n,
        });
    }

    let n_t = record_samples(scene, geometry, pulse, n);
    let fs = pulse.sample_rate;
    let c = scene.speed_of_sound;
    let mut samples = Array3::<f64>::zeros((n, n, n_t));

    for e in 1..=n {
        let positions = scene_at_event(scene, e);
        check_positions(&positions)?;
        for (k, p) in positions.iter().enumerate() {
            let refl = scene.scatterers[k].reflectivity;
            let dists: Vec<f64> = (0..n).map(|i| geometry.distance(i, *p)).collect();
            for i in 0..n {
                let signed = refl * encoding.entry(e, i + 1) as f64;
                for j in 0..n {
                    let delay = (dists[i] + dists[j]) / c;
                    add_echo(
                        samples
                            .slice_mut(ndarray::s![e - 1, j, ..])
                            .as_slice_mut()
                            .unwrap(),
                        pulse,
                        fs,
                        delay,
                        signed,
                    );
                }
            }
        }
    }

    if let Some(snr) = scene.noise_snr_db {
        add_noise(&mut samples, snr, scene.rng_seed);
    }

    Ok(EncodedDataset {
        samples,
        sample_rate: fs,
        start_time: 0.0,
        encoding_rank: n,
    })
}
