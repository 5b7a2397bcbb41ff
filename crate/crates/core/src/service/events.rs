//! Append-only event log. Each line is one JSON object tagged by `event`.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::allocation::AllocationPlan;
use crate::error::{Error, Result};
use crate::mask::RunLengthMask;
use crate::scoring::Ambiguity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Vote,
    Segment,
}

impl TaskKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TaskKind::Vote => "vote",
            TaskKind::Segment => "segment",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vote" => Ok(TaskKind::Vote),
            "segment" => Ok(TaskKind::Segment),
            other => Err(Error::parse(format!("unknown task kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchImage {
    pub image_id: String,
    pub width: usize,
    pub height: usize,
    pub source: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    BatchCreated {
        batch_id: u64,
        kind: TaskKind,
        extra: usize,
        images: Vec<BatchImage>,
        at: u64,
    },
    TaskOpened {
        task_id: u64,
        batch_id: u64,
        kind: TaskKind,
        image_ids: Vec<String>,
        round: u32,
        at: u64,
    },
    TaskAssigned {
        task_id: u64,
        worker_id: String,
        at: u64,
    },
    TaskExpired {
        task_id: u64,
        at: u64,
    },
    VotesSubmitted {
        task_id: u64,
        worker_id: String,
        votes: Vec<bool>,
        at: u64,
    },
    LabelMaterialized {
        image_id: String,
        label: Ambiguity,
        at: u64,
    },
    AnnotationSubmitted {
        task_id: u64,
        worker_id: String,
        image_id: String,
        /// Per-image collection timestamp, strictly increasing.
        timestamp: u64,
        mask: RunLengthMask,
    },
    TaskDone {
        task_id: u64,
        at: u64,
    },
    ScoresRecorded {
        batch_id: u64,
        method: String,
        scores: BTreeMap<String, f64>,
        at: u64,
    },
    RoundPlanned {
        batch_id: u64,
        plan: AllocationPlan,
        at: u64,
    },
}

pub fn parse_log(text: &str) -> Result<Vec<Event>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::parse(format!("log line {}: {e}", i + 1))))
        .collect()
}

pub fn read_log(path: &Path) -> Result<Vec<Event>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(std::fs::File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::parse(format!("log line {}: {e}", i + 1)))?);
    }
    Ok(out)
}
