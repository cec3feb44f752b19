use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::SweepRow;
use crate::compiler::LoweringPath;
use crate::error::{Error, Result};

pub const DEFAULT_THRESHOLDS: [f64; 2] = [0.10, 0.20];

/// Longest supported word under a threshold. Ordered so that a looser
/// threshold never compares below a stricter one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum MaxSupported {
    /// Even the shortest enumerated word misses the threshold.
    NoneSupported,
    Length(u64),
    /// Every enumerated word up to the sweep's `max_len` stays under.
    AboveMax(u64),
}

impl fmt::Display for MaxSupported {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaxSupported::NoneSupported => f.write_str("none"),
            MaxSupported::Length(w) => write!(f, "{w}"),
            MaxSupported::AboveMax(m) => write!(f, "> {m}"),
        }
    }
}

impl From<MaxSupported> for String {
    fn from(m: MaxSupported) -> String {
        m.to_string()
    }
}

impl TryFrom<String> for MaxSupported {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        let t = s.trim();
        let parse = |v: &str| {
            v.trim()
                .parse::<u64>()
                .map_err(|_| Error::InvalidConfig(format!("bad word length {s:?}")))
        };
        if t == "none" {
            Ok(MaxSupported::NoneSupported)
        } else if let Some(rest) = t.strip_prefix('>') {
            Ok(MaxSupported::AboveMax(parse(rest)?))
        } else {
            Ok(MaxSupported::Length(parse(t)?))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEntry {
    pub path: LoweringPath,
    pub residue: u64,
    pub threshold: f64,
    pub max_supported: MaxSupported,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub entries: Vec<ThresholdEntry>,
}

impl ThresholdReport {
    pub fn get(&self, path: LoweringPath, residue: u64, threshold: f64) -> Option<MaxSupported> {
        self.entries
            .iter()
            .find(|e| e.path == path && e.residue == residue && (e.threshold - threshold).abs() < 1e-12)
            .map(|e| e.max_supported)
    }
}

/// For each (path, residue, threshold): the largest enumerated `w` such
/// that every enumerated `w' <= w` has `abs_error_exact < threshold`.
/// Replicated rows are averaged per word length first.
pub fn threshold_table(rows: &[SweepRow], thresholds: &[f64], max_len: u64) -> ThresholdReport {
    let mut groups: BTreeMap<(LoweringPath, u64), BTreeMap<u64, (f64, u32)>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.replication != 0) {
        let slot = groups
            .entry((r.path, r.residue))
            .or_default()
            .entry(r.word_len)
            .or_insert((0.0, 0));
        slot.0 += r.abs_error_exact;
        slot.1 += 1;
    }
    let mut entries = Vec::new();
    for ((path, residue), by_len) in &groups {
        for &threshold in thresholds {
            let mut best = MaxSupported::NoneSupported;
            let mut exceeded = false;
            for (&w, &(sum, n)) in by_len {
                if sum / n as f64 >= threshold {
                    exceeded = true;
                    break;
                }
                best = MaxSupported::Length(w);
            }
            if !exceeded {
                best = MaxSupported::AboveMax(max_len);
            }
            entries.push(ThresholdEntry {
                path: *path,
                residue: *residue,
                threshold,
                max_supported: best,
            });
        }
    }
    ThresholdReport { entries }
}

/// Lengths measured on hardware for the two paths, kept for comparison
/// in reports.
pub fn reference_thresholds() -> ThresholdReport {
    use LoweringPath::{CustomSquare, DefaultDrag};
    use MaxSupported::{AboveMax, Length};
    let e = |path, residue, threshold, max_supported| ThresholdEntry {
        path,
        residue,
        threshold,
        max_supported,
    };
    ThresholdReport {
        entries: vec![
            e(DefaultDrag, 0, 0.10, Length(66)),
            e(DefaultDrag, 0, 0.20, Length(132)),
            e(DefaultDrag, 3, 0.10, Length(58)),
            e(DefaultDrag, 3, 0.20, Length(135)),
            e(CustomSquare, 0, 0.10, Length(539)),
            e(CustomSquare, 0, 0.20, AboveMax(1000)),
            e(CustomSquare, 3, 0.10, Length(795)),
            e(CustomSquare, 3, 0.20, AboveMax(1000)),
        ],
    }
}
