use std::fmt;

use crate::cells::check_tau;
use crate::error::{Error, Result};

/// Per-layer timescale constants, bottom layer first.
#[derive(Debug, Clone, PartialEq)]
pub struct TimescaleSchedule {
    taus: Vec<f64>,
}

/// Named presets that carry a fixed layer count.
pub const PRESETS: [(&str, [f64; 4]); 3] = [
    ("mtgru-1", [1.0, 1.25, 1.5, 1.7]),
    ("mtgru-2", [1.0, 1.42, 2.0, 2.5]),
    ("mtgru-3", [1.0, 1.0, 1.25, 1.25]),
];

impl TimescaleSchedule {
    pub fn new(taus: Vec<f64>) -> Result<Self> {
        if taus.is_empty() {
            return Err(Error::arg("timescale schedule needs at least one layer"));
        }
        for &t in &taus {
            check_tau(t)?;
        }
        Ok(Self { taus })
    }

    /// All-ones schedule: a plain GRU stack.
    pub fn gru(layers: usize) -> Result<Self> {
        Self::new(vec![1.0; layers])
    }

    /// `gru` (needs `layers`), `mtgru-1`, `mtgru-2`, `mtgru-3`.
    pub fn preset(name: &str, layers: usize) -> Result<Self> {
        if name == "gru" {
            return Self::gru(layers);
        }
        PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, taus)| Self::new(taus.to_vec()))
            .unwrap_or_else(|| Err(Error::arg(format!("unknown schedule preset `{name}`"))))
    }

    /// A preset name or a comma-separated τ list such as `1,1.5`.
    pub fn parse(spec: &str, layers: usize) -> Result<Self> {
        let spec = spec.trim();
        if spec.chars().next().is_some_and(|c| c.is_ascii_digit()) {
            let taus = spec
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::arg(format!("bad timescale `{t}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            Self::new(taus)
        } else {
            Self::preset(spec, layers)
        }
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    pub fn is_gru(&self) -> bool {
        self.taus.iter().all(|&t| t == 1.0)
    }
}

impl fmt::Display for TimescaleSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.taus.iter().map(|t| format!("{t}")).collect();
        write!(f, "{}", parts.join(","))
    }
}
