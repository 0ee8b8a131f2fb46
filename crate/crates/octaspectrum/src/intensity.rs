//! Intensity of the limiting Poisson length spectrum.
//!
//! Each word class `[w]` contributes an independent Poisson count with mean
//! `|[w]| / (2|w|·3^|w|)`; the spectrum restricted to a window `[a, b]` is
//! Poisson with the summed intensity of the classes whose translation length
//! falls in the window.

use num_traits::ToPrimitive;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::kahan;
use crate::words::{enumerate_classes_opts, EnumerationOptions, SpectralLine, WordClass};
use crate::Result;

/// Poisson mean of the cycle count labelled by the class:
/// `orbit_size / (2·|w|·3^|w|)`, always in `(0, 1]`.
pub fn class_intensity(wc: &WordClass) -> f64 {
    let denom = 3u128
        .checked_pow(wc.length as u32)
        .and_then(|p| p.checked_mul(2 * wc.length as u128))
        .expect("class construction already bounds the length");
    wc.orbit_size as f64 / denom as f64
}

/// The spectrum lines of a closed window together with their total
/// intensity.
#[derive(Clone, Debug)]
pub struct IntensityReport {
    pub interval: [f64; 2],
    pub lines: Vec<SpectralLine>,
    pub total_intensity: f64,
    /// Word-length cap `⌊r(b)⌋` the enumeration ran with.
    pub word_length_cap: u32,
}

/// Enumerate the window `[a, b]` and attach intensities; lines ordered by
/// `(word length, canonical word)`.
pub fn interval_intensity(a: f64, b: f64) -> Result<IntensityReport> {
    interval_intensity_opts(a, b, &EnumerationOptions::default())
}

pub fn interval_intensity_opts(
    a: f64,
    b: f64,
    opts: &EnumerationOptions,
) -> Result<IntensityReport> {
    let enumeration = enumerate_classes_opts(a, b, opts)?;
    let mut lines = enumeration.lines;
    lines.sort_by(|x, y| {
        x.word_class
            .length
            .cmp(&y.word_class.length)
            .then_with(|| x.word_class.canonical.cmp(&y.word_class.canonical))
    });
    let total_intensity = kahan::sum(lines.iter().map(|l| l.intensity));
    Ok(IntensityReport {
        interval: [a, b],
        lines,
        total_intensity,
        word_length_cap: enumeration.word_length_cap,
    })
}

fn trace_component(x: &num_bigint::BigInt) -> i64 {
    x.to_i64().unwrap_or_else(|| {
        if x.sign() == num_bigint::Sign::Minus {
            i64::MIN
        } else {
            i64::MAX
        }
    })
}

impl Serialize for SpectralLine {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("SpectralLine", 6)?;
        s.serialize_field("canonical", &self.word_class.canonical.to_string())?;
        s.serialize_field("orbit_size", &self.word_class.orbit_size)?;
        s.serialize_field("trace_re", &trace_component(&self.word_class.trace.re))?;
        s.serialize_field("trace_im", &trace_component(&self.word_class.trace.im))?;
        s.serialize_field("length", &self.word_class.translation_length)?;
        s.serialize_field("lambda", &self.intensity)?;
        s.end()
    }
}

impl Serialize for IntensityReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("IntensityReport", 4)?;
        s.serialize_field("interval", &self.interval)?;
        s.serialize_field("r_max", &self.word_length_cap)?;
        s.serialize_field("lines", &self.lines)?;
        s.serialize_field("total", &self.total_intensity)?;
        s.end()
    }
}
