//! Engine run reports, serialized as JSON lines (schema version 1).

use std::collections::BTreeMap;

use serde::Serialize;

/// The five analysis engines the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineKind {
    HbCompressed,
    HbVectorClock,
    HbGoldilocks,
    LsCompressed,
    LsEraser,
}

impl EngineKind {
    pub const ALL: [EngineKind; 5] = [
        EngineKind::HbCompressed,
        EngineKind::HbVectorClock,
        EngineKind::HbGoldilocks,
        EngineKind::LsCompressed,
        EngineKind::LsEraser,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            EngineKind::HbCompressed => "hb-compressed",
            EngineKind::HbVectorClock => "hb-vc",
            EngineKind::HbGoldilocks => "hb-goldilocks",
            EngineKind::LsCompressed => "ls-compressed",
            EngineKind::LsEraser => "ls-eraser",
        }
    }

    /// Does this engine read a grammar rather than a plain trace?
    pub fn is_compressed(&self) -> bool {
        matches!(self, EngineKind::HbCompressed | EngineKind::LsCompressed)
    }

    /// Happens-before or lockset?
    pub fn is_hb(&self) -> bool {
        matches!(
            self,
            EngineKind::HbCompressed | EngineKind::HbVectorClock | EngineKind::HbGoldilocks
        )
    }
}

impl std::str::FromStr for EngineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EngineKind::ALL
            .iter()
            .find(|e| e.as_str() == s)
            .copied()
            .ok_or_else(|| format!("unknown engine {s:?}"))
    }
}

impl std::fmt::Display for EngineKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Input dimensions and timing common to all reports.
#[derive(Debug, Clone, Serialize, Default)]
pub struct RunStats {
    pub events: u64,
    pub threads: usize,
    pub locks: usize,
    pub vars: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grammar_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compression_ratio: Option<f64>,
    /// Engine time only; parsing and compression are reported separately.
    pub wall_ms: f64,
}

/// Outcome of a happens-before engine run.
#[derive(Debug, Clone, Serialize)]
pub struct RaceReport {
    pub v: u32,
    pub engine: String,
    pub input: String,
    pub race_found: bool,
    /// Baseline engines only: (earlier index, later index, variable).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_race: Option<(u32, u32, String)>,
    pub stats: RunStats,
}

/// Outcome of a lockset engine run.
#[derive(Debug, Clone, Serialize)]
pub struct ViolationReport {
    pub v: u32,
    pub engine: String,
    pub input: String,
    pub violations: Vec<String>,
    /// Streaming engine only: first access emptying each intersection.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_empty: Option<BTreeMap<String, u32>>,
    pub stats: RunStats,
}

impl RaceReport {
    pub fn new(engine: EngineKind, input: &str, race_found: bool) -> Self {
        RaceReport {
            v: 1,
            engine: engine.as_str().to_string(),
            input: input.to_string(),
            race_found,
            first_race: None,
            stats: RunStats::default(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

impl ViolationReport {
    pub fn new(engine: EngineKind, input: &str, violations: Vec<String>) -> Self {
        ViolationReport {
            v: 1,
            engine: engine.as_str().to_string(),
            input: input.to_string(),
            violations,
            first_empty: None,
            stats: RunStats::default(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn engine_names_roundtrip() {
        for e in EngineKind::ALL {
            assert_eq!(e.as_str().parse::<EngineKind>().unwrap(), e);
        }
        assert!("hb-magic".parse::<EngineKind>().is_err());
    }

    #[test]
    fn compressed_reports_have_no_first_race() {
        let r = RaceReport::new(EngineKind::HbCompressed, "t.slp", true);
        let json = r.to_json();
        assert!(json.contains("\"v\":1"));
        assert!(!json.contains("first_race"));
    }
}
