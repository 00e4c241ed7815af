//! Sliding-window segmentation of a corpus into overlapping time windows.

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};

pub const SECONDS_PER_DAY: i64 = 86_400;
/// Fixed-length calendar units; a year is 365 days and a month 30 days.
pub const SECONDS_PER_YEAR: i64 = 365 * SECONDS_PER_DAY;
pub const SECONDS_PER_MONTH: i64 = 30 * SECONDS_PER_DAY;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    /// Window length in seconds.
    pub length: i64,
    /// Overlap between consecutive windows in seconds.
    pub overlap: i64,
    /// First window start. `None` means the earliest timestamp truncated to midnight UTC.
    pub origin: Option<i64>,
}

impl WindowSpec {
    pub fn from_days(length_days: i64, overlap_days: i64) -> Self {
        WindowSpec {
            length: length_days * SECONDS_PER_DAY,
            overlap: overlap_days * SECONDS_PER_DAY,
            origin: None,
        }
    }

    pub fn step(&self) -> i64 {
        self.length - self.overlap
    }

    pub fn validate(&self) -> Result<()> {
        if self.length <= 0 {
            return Err(Error::InvalidSpec(format!(
                "window length must be positive, got {}",
                self.length
            )));
        }
        if self.overlap < 0 || self.overlap >= self.length {
            return Err(Error::InvalidSpec(format!(
                "window overlap {} must lie in [0, length {})",
                self.overlap, self.length
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub index: usize,
    pub start: i64,
    /// Exclusive.
    pub end: i64,
    /// Corpus document indices with `start <= timestamp < end`, ascending.
    pub members: Vec<usize>,
}

impl Window {
    pub fn contains(&self, timestamp: i64) -> bool {
        self.start <= timestamp && timestamp < self.end
    }
}

pub fn midnight_utc(timestamp: i64) -> i64 {
    timestamp.div_euclid(SECONDS_PER_DAY) * SECONDS_PER_DAY
}

/// Window boundaries for documents spanning up to `last_timestamp`.
///
/// Window 0 always exists. Another window is added while the time left
/// uncovered after the previous window's end is at least
/// `min(overlap, length - overlap)`; a shorter tail is not worth a window that
/// would mostly repeat its predecessor. With `overlap == 0` every document up
/// to `last_timestamp` is covered.
pub fn window_bounds(spec: &WindowSpec, origin: i64, last_timestamp: i64) -> Result<Vec<(i64, i64)>> {
    spec.validate()?;
    let mut bounds = vec![(origin, origin + spec.length)];
    loop {
        let prev_end = bounds.last().unwrap().1;
        if last_timestamp < prev_end || last_timestamp - prev_end < spec.overlap.min(spec.step()) {
            break;
        }
        let start = origin + bounds.len() as i64 * spec.step();
        bounds.push((start, start + spec.length));
    }
    Ok(bounds)
}

/// Splits the corpus into overlapping windows. Empty windows are kept so
/// indices map onto calendar time.
pub fn segment(corpus: &Corpus, spec: &WindowSpec) -> Result<Vec<Window>> {
    spec.validate()?;
    let (first, last) = corpus
        .timestamp_range()
        .ok_or_else(|| Error::InvalidSpec("cannot segment an empty corpus".into()))?;
    let origin = spec.origin.unwrap_or_else(|| midnight_utc(first));
    let bounds = window_bounds(spec, origin, last)?;
    let docs = corpus.documents();

    Ok(bounds
        .into_iter()
        .enumerate()
        .map(|(index, (start, end))| {
            // documents are sorted by timestamp, so members form a contiguous run
            let lo = docs.partition_point(|d| d.timestamp < start);
            let hi = docs.partition_point(|d| d.timestamp < end);
            Window {
                index,
                start,
                end,
                members: (lo..hi).collect(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;

    fn corpus_at(timestamps: &[i64]) -> Corpus {
        let docs = timestamps
            .iter()
            .enumerate()
            .map(|(i, &t)| Document {
                id: format!("d{i:04}"),
                timestamp: t,
                text: String::new(),
                tokens: vec![],
            })
            .collect();
        Corpus::from_documents(docs).unwrap()
    }

    #[test]
    fn rejects_overlap_not_below_length() {
        let c = corpus_at(&[0, 10]);
        let spec = WindowSpec {
            length: 10,
            overlap: 10,
            origin: None,
        };
        assert!(matches!(segment(&c, &spec), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn one_length_without_overlap_is_one_window() {
        let day = SECONDS_PER_DAY;
        let c = corpus_at(&[0, 3 * day, 9 * day + 5]);
        let w = segment(&c, &WindowSpec::from_days(10, 0)).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].members, vec![0, 1, 2]);
    }

    #[test]
    fn zero_overlap_covers_every_document() {
        let day = SECONDS_PER_DAY;
        let c = corpus_at(&[0, 10 * day, 10 * day + 1]);
        let w = segment(&c, &WindowSpec::from_days(10, 0)).unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(w[1].members, vec![1, 2]);
    }

    #[test]
    fn empty_windows_are_kept() {
        let day = SECONDS_PER_DAY;
        let c = corpus_at(&[0, 100 * day]);
        let w = segment(&c, &WindowSpec::from_days(10, 0)).unwrap();
        assert_eq!(w.len(), 11);
        assert!(w[5].members.is_empty());
        assert_eq!(w[10].members, vec![1]);
    }

    #[test]
    fn origin_defaults_to_midnight() {
        let c = corpus_at(&[SECONDS_PER_DAY + 3600]);
        let w = segment(&c, &WindowSpec::from_days(1, 0)).unwrap();
        assert_eq!(w[0].start, SECONDS_PER_DAY);
        assert_eq!(midnight_utc(-1), -SECONDS_PER_DAY);
    }
}
