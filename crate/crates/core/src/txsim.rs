//! Transmitter model: known QAM data, RRC pulse shaping, DAC-side added skew,
//! and a linear IQ modulator carrying the device's intrinsic skew and
//! quadrature phase error.
//!
//! Skew always acts on the Q arm; I is the timing reference. A positive skew
//! means Q lags I.

use crate::error::{Error, Result};
use crate::waveform::{apply_fir_centered, rrc_taps, ComplexSignal, FractionalDelay, RealSignal};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Symbols at each end of a frame that are excluded from every metric.
pub const GUARD_SYMBOLS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TxConfig {
    pub baud_hz: f64,
    pub mod_order: u32,
    pub rolloff: f64,
    /// Samples per symbol of the generated DAC waveforms.
    pub sps_dac: usize,
    /// Skew deliberately added on the DAC (swept in experiments).
    pub added_skew_s: f64,
    /// Skew of the modulator under test.
    pub intrinsic_skew_s: f64,
    pub quad_phase_err_rad: f64,
    pub n_symbols: usize,
    pub prbs_seed: u64,
    pub rrc_span_symbols: usize,
    /// Optional pre-emphasis FIR at the DAC rate, referenced to its middle tap.
    /// `None` is the identity.
    pub pre_emphasis_taps: Option<Vec<f64>>,
}

impl Default for TxConfig {
    fn default() -> Self {
        Self {
            baud_hz: 34e9,
            mod_order: 16,
            rolloff: 0.2,
            sps_dac: 8,
            added_skew_s: 0.0,
            intrinsic_skew_s: -3.0e-12,
            quad_phase_err_rad: 0.0,
            n_symbols: 1 << 15,
            prbs_seed: 1,
            rrc_span_symbols: 32,
            pre_emphasis_taps: None,
        }
    }
}

impl TxConfig {
    pub fn symbol_period_s(&self) -> f64 {
        1.0 / self.baud_hz
    }

    pub fn dac_rate_hz(&self) -> f64 {
        self.baud_hz * self.sps_dac as f64
    }

    /// One-sided occupied bandwidth of the shaped signal, `(1 + rolloff) * baud / 2`.
    pub fn band_edge_hz(&self) -> f64 {
        0.5 * self.baud_hz * (1.0 + self.rolloff)
    }

    /// Every violated constraint, not just the first.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.baud_hz.is_finite() && self.baud_hz > 0.0) {
            v.push(format!("baud_hz must be positive, got {}", self.baud_hz));
        }
        if ![4, 16, 64].contains(&self.mod_order) {
            v.push(format!(
                "mod_order must be 4, 16 or 64, got {}",
                self.mod_order
            ));
        }
        if !(0.0..=1.0).contains(&self.rolloff) {
            v.push(format!("rolloff must be in [0, 1], got {}", self.rolloff));
        }
        if self.sps_dac < 2 {
            v.push(format!("sps_dac must be at least 2, got {}", self.sps_dac));
        }
        if self.n_symbols < 4096 {
            v.push(format!(
                "n_symbols must be at least 4096, got {}",
                self.n_symbols
            ));
        }
        if self.rrc_span_symbols < 8 {
            v.push(format!(
                "rrc_span_symbols must be at least 8, got {}",
                self.rrc_span_symbols
            ));
        }
        if self.baud_hz > 0.0 {
            let limit = 0.5 / self.baud_hz;
            for (name, s) in [
                ("added_skew", self.added_skew_s),
                ("intrinsic_skew", self.intrinsic_skew_s),
            ] {
                if !(s.is_finite() && s.abs() < limit) {
                    v.push(format!(
                        "{name} {:.3} ps exceeds half a symbol ({:.3} ps)",
                        s * 1e12,
                        limit * 1e12
                    ));
                }
            }
        }
        if !self.quad_phase_err_rad.is_finite() {
            v.push("quad_phase_err_rad must be finite".into());
        }
        if let Some(taps) = &self.pre_emphasis_taps {
            if taps.is_empty() || taps.iter().any(|t| !t.is_finite()) {
                v.push("pre_emphasis_taps must be a nonempty finite sequence".into());
            }
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v))
        }
    }
}

/// Gray-mapped square QAM with unit average power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constellation {
    order: u32,
    levels: u32,
    bits_per_dim: u32,
    scale: f64,
}

impl Constellation {
    pub fn new(order: u32) -> Result<Self> {
        let (levels, bits_per_dim) = match order {
            4 => (2, 1),
            16 => (4, 2),
            64 => (8, 3),
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "unsupported modulation order {order}"
                )))
            }
        };
        let scale = 1.0 / (2.0 * (order as f64 - 1.0) / 3.0).sqrt();
        Ok(Self {
            order,
            levels,
            bits_per_dim,
            scale,
        })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        2 * self.bits_per_dim as usize
    }

    pub fn bits_per_dim(&self) -> usize {
        self.bits_per_dim as usize
    }

    /// Amplitude scale: level index `i` sits at `(2i - (L-1)) * scale`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn levels(&self) -> usize {
        self.levels as usize
    }

    /// Gray label of PAM level index `idx`.
    pub fn gray_label(&self, idx: usize) -> u32 {
        let idx = idx as u32;
        idx ^ (idx >> 1)
    }

    fn level_of_label(&self, label: u32) -> u32 {
        let mut b = label;
        let mut shift = label >> 1;
        while shift != 0 {
            b ^= shift;
            shift >>= 1;
        }
        b
    }

    fn amplitude(&self, level: u32) -> f64 {
        (2.0 * level as f64 - (self.levels as f64 - 1.0)) * self.scale
    }

    /// Maps `bits_per_symbol` bits (MSB first, I bits then Q bits) to a point.
    pub fn map(&self, bits: &[u8]) -> Complex64 {
        let b = self.bits_per_dim as usize;
        let label = |chunk: &[u8]| chunk.iter().fold(0u32, |acc, &x| (acc << 1) | x as u32);
        let li = self.level_of_label(label(&bits[..b]));
        let lq = self.level_of_label(label(&bits[b..2 * b]));
        Complex64::new(self.amplitude(li), self.amplitude(lq))
    }

    /// Nearest PAM level index for one real dimension.
    pub fn slice_dim(&self, a: f64) -> usize {
        let idx = ((a / self.scale + (self.levels as f64 - 1.0)) / 2.0).round();
        idx.clamp(0.0, self.levels as f64 - 1.0) as usize
    }

    /// Hard decision, appending the decided bits to `out`.
    pub fn demap_into(&self, y: Complex64, out: &mut Vec<u8>) {
        let b = self.bits_per_dim;
        for a in [y.re, y.im] {
            let label = self.gray_label(self.slice_dim(a));
            for k in (0..b).rev() {
                out.push(((label >> k) & 1) as u8);
            }
        }
    }

    pub fn points(&self) -> Vec<Complex64> {
        let l = self.levels;
        (0..l)
            .flat_map(|i| (0..l).map(move |q| (i, q)))
            .map(|(i, q)| Complex64::new(self.amplitude(i), self.amplitude(q)))
            .collect()
    }

    fn bits_of_point(&self, li: u32, lq: u32, out: &mut Vec<u8>) {
        let b = self.bits_per_dim;
        for level in [li, lq] {
            let label = self.gray_label(level as usize);
            for k in (0..b).rev() {
                out.push(((label >> k) & 1) as u8);
            }
        }
    }
}

/// Known transmitted data: points and their Gray bits.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolFrame {
    pub symbols: Vec<Complex64>,
    pub bits: Vec<u8>,
    pub mod_order: u32,
}

impl SymbolFrame {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn constellation(&self) -> Constellation {
        Constellation::new(self.mod_order).expect("frame built from a valid order")
    }
}

/// Seeded, balanced pseudo-random frame.
///
/// Every constellation point occurs equally often in the first
/// `M * floor(n / M)` symbols (shuffled), so the mean power is exactly one
/// whenever `n_symbols` is a multiple of `M`; any remainder is drawn uniformly.
pub fn generate_symbols(cfg: &TxConfig) -> Result<SymbolFrame> {
    let c = Constellation::new(cfg.mod_order)?;
    let m = cfg.mod_order as usize;
    let l = c.levels;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.prbs_seed);
    let mut indices: Vec<u32> = (0..cfg.n_symbols / m).flat_map(|_| 0..m as u32).collect();
    use rand::Rng;
    for _ in 0..cfg.n_symbols % m {
        indices.push(rng.random_range(0..m as u32));
    }
    indices.shuffle(&mut rng);

    let mut symbols = Vec::with_capacity(cfg.n_symbols);
    let mut bits = Vec::with_capacity(cfg.n_symbols * c.bits_per_symbol());
    for idx in indices {
        let (li, lq) = (idx / l, idx % l);
        symbols.push(Complex64::new(c.amplitude(li), c.amplitude(lq)));
        c.bits_of_point(li, lq, &mut bits);
    }
    Ok(SymbolFrame {
        symbols,
        bits,
        mod_order: cfg.mod_order,
    })
}

fn shape(frame: &SymbolFrame, cfg: &TxConfig) -> Result<ComplexSignal> {
    let sps = cfg.sps_dac;
    let mut taps = rrc_taps(cfg.rolloff, cfg.rrc_span_symbols, sps)?;
    let g = (sps as f64).sqrt();
    taps.iter_mut().for_each(|t| *t *= g);
    let mut impulses = vec![Complex64::new(0.0, 0.0); frame.len() * sps];
    for (k, &s) in frame.symbols.iter().enumerate() {
        impulses[k * sps] = s;
    }
    let train = ComplexSignal::new(impulses, cfg.dac_rate_hz())?;
    apply_fir_centered(&train, &taps)
}

/// DAC drive waveforms: RRC-shaped I and Q at `sps_dac`, with the added skew
/// applied to Q and the optional pre-emphasis applied to both.
pub fn drive_waveforms(frame: &SymbolFrame, cfg: &TxConfig) -> Result<(RealSignal, RealSignal)> {
    cfg.validate()?;
    if frame.len() != cfg.n_symbols {
        return Err(Error::LengthMismatch {
            left: frame.len(),
            right: cfg.n_symbols,
        });
    }
    let mut shaped = shape(frame, cfg)?;
    if let Some(taps) = &cfg.pre_emphasis_taps {
        shaped = apply_fir_centered(&shaped, taps)?;
    }
    let i = shaped.re();
    let mut q = shaped.im();
    if cfg.added_skew_s != 0.0 {
        q = q.fractional_delay(cfg.added_skew_s)?;
    }
    Ok((i, q))
}

/// Output of the IQ modulator.
#[derive(Debug, Clone)]
pub struct ModulatedField {
    /// Optical field at unit mean power.
    pub field: ComplexSignal,
    /// Factor applied to reach unit power.
    pub scale: f64,
}

/// Linear IQ modulator: `E = I + Q'·exp(j(pi/2 + phase_err))`, where `Q'` is
/// Q delayed by the intrinsic skew.
pub fn modulate(i: &RealSignal, q: &RealSignal, cfg: &TxConfig) -> Result<ModulatedField> {
    if i.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: i.len(),
            right: q.len(),
        });
    }
    if i.sample_rate_hz() != q.sample_rate_hz() {
        return Err(Error::InvalidParameter(format!(
            "I and Q sample rates differ: {} vs {}",
            i.sample_rate_hz(),
            q.sample_rate_hz()
        )));
    }
    let q_dev = if cfg.intrinsic_skew_s != 0.0 {
        q.fractional_delay(cfg.intrinsic_skew_s)?
    } else {
        q.clone()
    };
    let theta = cfg.quad_phase_err_rad;
    // exp(j(pi/2 + theta)) = -sin(theta) + j cos(theta)
    let q_axis = Complex64::new(-theta.sin(), theta.cos());
    let samples: Vec<Complex64> = i
        .samples()
        .iter()
        .zip(q_dev.samples())
        .map(|(&a, &b)| Complex64::new(a, 0.0) + q_axis * b)
        .collect();
    let raw = ComplexSignal::new(samples, i.sample_rate_hz())?;
    let p = raw.power();
    if !(p > 0.0) {
        return Err(Error::Degenerate("modulator output has zero power".into()));
    }
    let scale = 1.0 / p.sqrt();
    Ok(ModulatedField {
        field: raw.scaled(Complex64::new(scale, 0.0)),
        scale,
    })
}

/// Frame generation, drive waveforms and modulation in one call.
pub fn transmit(cfg: &TxConfig) -> Result<(SymbolFrame, ComplexSignal)> {
    let frame = generate_symbols(cfg)?;
    let (i, q) = drive_waveforms(&frame, cfg)?;
    let m = modulate(&i, &q, cfg)?;
    Ok((frame, m.field))
}
