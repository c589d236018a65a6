use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A time interval, closed at `start` and open at `end`. A missing end means
/// the interval is still current.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub start: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<DateTime<Utc>>,
}

impl Interval {
    pub fn new(start: DateTime<Utc>, end: Option<DateTime<Utc>>) -> Result<Self> {
        let interval = Self { start, end };
        interval.validate()?;
        Ok(interval)
    }

    pub fn open(start: DateTime<Utc>) -> Self {
        Self { start, end: None }
    }

    pub fn validate(&self) -> Result<()> {
        match self.end {
            Some(end) if end < self.start => Err(Error::InvalidTemporal(format!(
                "interval end {end} precedes start {}",
                self.start
            ))),
            _ => Ok(()),
        }
    }

    pub fn contains(&self, t: DateTime<Utc>) -> bool {
        self.start <= t && self.end.map_or(true, |end| t < end)
    }

    /// Half-open overlap. A degenerate query interval (start == end) is
    /// treated as the single instant `start`.
    pub fn overlaps(&self, other: &Interval) -> bool {
        if other.end == Some(other.start) {
            return self.contains(other.start);
        }
        if self.end == Some(self.start) {
            return other.contains(self.start);
        }
        let starts_before_other_ends = other.end.map_or(true, |end| self.start < end);
        let other_starts_before_self_ends = self.end.map_or(true, |end| other.start < end);
        starts_before_other_ends && other_starts_before_self_ends
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalAnnotation {
    pub transaction_time: Interval,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valid_time: Option<Interval>,
}

impl TemporalAnnotation {
    pub fn starting(start: DateTime<Utc>) -> Self {
        Self {
            transaction_time: Interval::open(start),
            valid_time: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.transaction_time.validate()?;
        if let Some(valid) = &self.valid_time {
            valid.validate()?;
        }
        Ok(())
    }
}

/// Who produced a version, how, and from where.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceInfo {
    pub agent: String,
    pub process: String,
    pub source: String,
    pub recorded_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotation: Option<String>,
}

impl ProvenanceInfo {
    pub fn validate(&self) -> Result<()> {
        if self.agent.trim().is_empty() {
            return Err(Error::InvalidProvenance("agent is empty".into()));
        }
        if self.source.trim().is_empty() {
            return Err(Error::InvalidProvenance("source is empty".into()));
        }
        Ok(())
    }
}
