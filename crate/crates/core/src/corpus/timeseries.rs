use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Label;
use crate::{Error, Result};

/// Uniform binning of a real-valued range plus the window length used to cut
/// the symbol stream into sequences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinConfig {
    pub low: f64,
    pub high: f64,
    pub bin_width: f64,
    pub window_length: usize,
}

impl BinConfig {
    pub fn new(low: f64, high: f64, bin_width: f64, window_length: usize) -> Result<Self> {
        let cfg = BinConfig {
            low,
            high,
            bin_width,
            window_length,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if !(self.low < self.high) {
            return Err(Error::invalid(format!(
                "bin range low {} must be below high {}",
                self.low, self.high
            )));
        }
        if !(self.bin_width > 0.0) || !self.bin_width.is_finite() {
            return Err(Error::invalid("bin width must be positive"));
        }
        Ok(())
    }

    pub fn num_bins(&self) -> usize {
        ((self.high - self.low) / self.bin_width).ceil() as usize
    }

    /// Bin index of `v`; `v == high` falls into the last bin.
    pub fn bin_index(&self, v: f64) -> Option<usize> {
        if !(v >= self.low && v <= self.high) {
            return None;
        }
        let raw = ((v - self.low) / self.bin_width).floor() as usize;
        Some(raw.min(self.num_bins() - 1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointLabel {
    Normal,
    Anomaly,
}

impl PointLabel {
    /// Per-point labels for a series of length `n` with anomalies at `indices`.
    pub fn from_indices(n: usize, indices: &[usize]) -> Result<Vec<PointLabel>> {
        let mut labels = vec![PointLabel::Normal; n];
        for &i in indices {
            *labels.get_mut(i).ok_or_else(|| {
                Error::Malformed(format!("anomaly index {i} beyond series length {n}"))
            })? = PointLabel::Anomaly;
        }
        Ok(labels)
    }
}

/// Maps every value to a `bin_<index>` token.
pub fn discretize_time_series(values: &[f64], cfg: &BinConfig) -> Result<Vec<String>> {
    cfg.validate()?;
    values
        .iter()
        .enumerate()
        .map(|(index, &value)| {
            cfg.bin_index(value)
                .map(|b| format!("bin_{b}"))
                .ok_or(Error::OutOfRange {
                    index,
                    value,
                    low: cfg.low,
                    high: cfg.high,
                })
        })
        .collect()
}

/// Cuts `symbols` into consecutive non-overlapping windows of exactly
/// `window_length`; the trailing remainder is dropped. A window is novel iff
/// it contains at least one anomalous point.
pub fn windowize<T: Clone>(
    symbols: &[T],
    point_labels: &[PointLabel],
    window_length: usize,
) -> Result<Vec<(Vec<T>, Label)>> {
    if window_length < 1 {
        return Err(Error::invalid("window length must be at least 1"));
    }
    if symbols.len() != point_labels.len() {
        return Err(Error::LengthMismatch {
            what: "symbols vs point labels",
            left: symbols.len(),
            right: point_labels.len(),
        });
    }
    Ok(symbols
        .chunks_exact(window_length)
        .zip(point_labels.chunks_exact(window_length))
        .map(|(w, l)| {
            let label = if l.contains(&PointLabel::Anomaly) {
                Label::Novel
            } else {
                Label::Normal
            };
            (w.to_vec(), label)
        })
        .collect())
}

/// One float per line.
pub fn read_time_series(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    fs::read_to_string(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse()
                .map_err(|_| Error::Malformed(format!("line {}: `{}` is not a number", i + 1, l)))
        })
        .collect()
}

/// JSON list of anomalous point indices.
pub fn read_anomaly_indices(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn nab() -> BinConfig {
        BinConfig::new(0.0, 100.0, 0.1, 40).unwrap()
    }

    #[test]
    fn bin_examples() {
        let cfg = nab();
        assert_eq!(cfg.num_bins(), 1000);
        let toks = discretize_time_series(&[0.062, 99.898, 100.0, 0.0], &cfg).unwrap();
        assert_eq!(toks, vec!["bin_0", "bin_998", "bin_999", "bin_0"]);
    }

    #[test]
    fn out_of_range_names_index() {
        let err = discretize_time_series(&[1.0, 100.5], &nab()).unwrap_err();
        match err {
            Error::OutOfRange { index, value, .. } => {
                assert_eq!(index, 1);
                assert_eq!(value, 100.5);
            }
            e => panic!("unexpected {e}"),
        }
        assert!(discretize_time_series(&[f64::NAN], &nab()).is_err());
    }

    #[test]
    fn bad_config() {
        assert!(BinConfig::new(1.0, 1.0, 0.1, 4).is_err());
        assert!(BinConfig::new(0.0, 1.0, 0.0, 4).is_err());
    }

    #[test]
    fn windows() {
        let sym: Vec<u32> = (0..100).collect();
        let mut labels = vec![PointLabel::Normal; 100];
        let w = windowize(&sym, &labels, 40).unwrap();
        assert_eq!(w.len(), 2);
        assert!(w.iter().all(|(_, l)| *l == Label::Normal));
        assert_eq!(w[1].0[0], 40);
        labels[45] = PointLabel::Anomaly;
        let w = windowize(&sym, &labels, 40).unwrap();
        assert_eq!(w[0].1, Label::Normal);
        assert_eq!(w[1].1, Label::Novel);
        assert!(windowize(&sym, &labels, 0).is_err());
        assert!(windowize(&sym[..3], &labels, 2).is_err());
    }

    proptest! {
        #[test]
        fn every_in_range_value_maps_to_one_bin(
            low in -50.0f64..50.0, span in 0.5f64..100.0, width in 0.01f64..3.0, frac in 0.0f64..=1.0
        ) {
            let cfg = BinConfig::new(low, low + span, width, 1).unwrap();
            let v = low + frac * span;
            let b = cfg.bin_index(v.min(cfg.high)).unwrap();
            prop_assert!(b < cfg.num_bins());
        }

        #[test]
        fn window_count(t in 0usize..300, w in 1usize..50) {
            let sym = vec![0u8; t];
            let labels = vec![PointLabel::Normal; t];
            prop_assert_eq!(windowize(&sym, &labels, w).unwrap().len(), t / w);
        }
    }
}
