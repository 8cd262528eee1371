//! Gray-coded square QAM constellations, viewed per real dimension.
//!
//! A square constellation with `q*q` points factors into two independent
//! pulse-amplitude (PAM) coordinates with `q` levels each. All detection in
//! this crate happens in that per-dimension view: a complex symbol vector of
//! length `N` becomes a real vector of length `2N` whose entries live on the
//! common PAM grid. Levels are the odd integers `-(q-1), .., q-1` scaled so
//! that a uniform symbol has unit energy per complex dimension.

use crate::{Error, Result};

/// Supported modulation orders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modulation {
    Qpsk,
    Qam16,
    Qam64,
}

impl Modulation {
    /// Number of PAM levels per real dimension.
    pub fn q(self) -> usize {
        match self {
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
            Modulation::Qam64 => 8,
        }
    }

    /// Bits carried by one real dimension.
    pub fn bits_per_real_dim(self) -> usize {
        match self {
            Modulation::Qpsk => 1,
            Modulation::Qam16 => 2,
            Modulation::Qam64 => 3,
        }
    }

    /// Canonical lowercase name, as used in configs and CSV output.
    pub fn name(self) -> &'static str {
        match self {
            Modulation::Qpsk => "qpsk",
            Modulation::Qam16 => "16qam",
            Modulation::Qam64 => "64qam",
        }
    }
}

impl std::fmt::Display for Modulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qpsk" | "4qam" => Ok(Modulation::Qpsk),
            "16qam" => Ok(Modulation::Qam16),
            "64qam" => Ok(Modulation::Qam64),
            other => Err(Error::Config(format!(
                "modulation: unknown value {other:?} (expected qpsk, 16qam or 64qam)"
            ))),
        }
    }
}

/// One PAM axis of a Gray-labelled square QAM constellation.
#[derive(Debug, Clone)]
pub struct Constellation {
    modulation: Modulation,
    pam: Vec<f64>,
    index_to_gray: Vec<usize>,
    gray_to_index: Vec<usize>,
}

impl Constellation {
    /// Builds the unit-energy PAM grid and its Gray labelling.
    pub fn new(modulation: Modulation) -> Self {
        let q = modulation.q();
        let scale = (3.0 / (2.0 * (q * q - 1) as f64)).sqrt();
        let pam: Vec<f64> = (0..q)
            .map(|i| (2.0 * i as f64 - (q - 1) as f64) * scale)
            .collect();
        let index_to_gray: Vec<usize> = (0..q).map(|k| k ^ (k >> 1)).collect();
        let mut gray_to_index = vec![0usize; q];
        for (k, &g) in index_to_gray.iter().enumerate() {
            gray_to_index[g] = k;
        }
        Constellation { modulation, pam, index_to_gray, gray_to_index }
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    /// Number of levels per real dimension.
    pub fn q(&self) -> usize {
        self.pam.len()
    }

    pub fn bits_per_real_dim(&self) -> usize {
        self.modulation.bits_per_real_dim()
    }

    /// PAM levels in ascending order.
    pub fn pam_levels(&self) -> &[f64] {
        &self.pam
    }

    /// Largest level magnitude, used to size random initial boxes.
    pub fn max_amplitude(&self) -> f64 {
        self.pam[self.q() - 1].abs().max(self.pam[0].abs())
    }

    /// Gray label of the level at `index` (levels sorted ascending).
    pub fn gray_label(&self, index: usize) -> usize {
        self.index_to_gray[index]
    }

    /// Maps a bit group to a PAM level. Bits are most significant first.
    ///
    /// Groups of `bits_per_real_dim` bits form a Gray label; adjacent levels
    /// differ in exactly one bit.
    pub fn level_for_bits(&self, bits: &[bool]) -> Result<f64> {
        if bits.len() != self.bits_per_real_dim() {
            return Err(Error::Dimension(format!(
                "expected {} bits per real dimension, got {}",
                self.bits_per_real_dim(),
                bits.len()
            )));
        }
        let mut label = 0usize;
        for &b in bits {
            label = (label << 1) | usize::from(b);
        }
        Ok(self.pam[self.gray_to_index[label]])
    }

    /// Maps a bit vector to a real symbol vector of length `n_real`.
    pub fn modulate(&self, bits: &[bool], n_real: usize) -> Result<Vec<f64>> {
        let bpd = self.bits_per_real_dim();
        if bits.len() != n_real * bpd {
            return Err(Error::Dimension(format!(
                "modulate: need {} bits for {} real dimensions, got {}",
                n_real * bpd,
                n_real,
                bits.len()
            )));
        }
        bits.chunks(bpd).map(|c| self.level_for_bits(c)).collect()
    }

    /// Index of the nearest PAM level. Exact midpoint ties resolve to the
    /// smaller coordinate.
    pub fn quantize_index(&self, x: f64) -> usize {
        let mut best = 0usize;
        let mut best_d = (x - self.pam[0]).abs();
        for (k, &a) in self.pam.iter().enumerate().skip(1) {
            let d = (x - a).abs();
            if d < best_d {
                best = k;
                best_d = d;
            }
        }
        best
    }

    /// Nearest PAM level to an arbitrary real coordinate.
    pub fn quantize(&self, x: f64) -> f64 {
        self.pam[self.quantize_index(x)]
    }

    /// Quantizes every coordinate of a real symbol vector.
    pub fn quantize_all(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.quantize(x)).collect()
    }

    /// Quantizes every coordinate and recovers the transmitted bit stream.
    pub fn demap(&self, symbols: &[f64]) -> Vec<bool> {
        let bpd = self.bits_per_real_dim();
        let mut bits = Vec::with_capacity(symbols.len() * bpd);
        for &x in symbols {
            let label = self.index_to_gray[self.quantize_index(x)];
            for shift in (0..bpd).rev() {
                bits.push((label >> shift) & 1 == 1);
            }
        }
        bits
    }
}

/// Hamming distance between two equal-length bit vectors.
pub fn count_bit_errors(tx: &[bool], rx: &[bool]) -> Result<usize> {
    if tx.len() != rx.len() {
        return Err(Error::Dimension(format!(
            "bit vectors differ in length: {} vs {}",
            tx.len(),
            rx.len()
        )));
    }
    Ok(tx.iter().zip(rx).filter(|(a, b)| a != b).count())
}
