use serde::{Deserialize, Serialize};

use crate::error::{DataError, Result};
use crate::record::{is_permutation_of, FeatureRecord};

/// Rank-position counts per fine slot: `counts[slot][pos]` is how many
/// samples ranked that slot at (0-based) position `pos`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankStats {
    pub slots: Vec<String>,
    pub counts: Vec<Vec<usize>>,
    pub total: usize,
}

impl RankStats {
    /// Counts rank positions over explicit orderings.
    pub fn from_orders<'a, I>(orders: I, slots: &[String]) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        let m = slots.len();
        let mut counts = vec![vec![0usize; m]; m];
        let mut total = 0;
        for order in orders {
            if !is_permutation_of(order, slots) {
                return Err(DataError::Manifest(format!(
                    "ordering {order:?} is not a permutation of {slots:?}"
                )));
            }
            for (pos, name) in order.iter().enumerate() {
                let slot = slots.iter().position(|s| s == name).expect("validated");
                counts[slot][pos] += 1;
            }
            total += 1;
        }
        Ok(Self {
            slots: slots.to_vec(),
            counts,
            total,
        })
    }

    /// Counts rank positions over records; every record must carry a
    /// ranking, otherwise the offending sample ids are reported.
    pub fn from_records(records: &[FeatureRecord], slots: &[String]) -> Result<Self> {
        let missing: Vec<String> = records
            .iter()
            .filter(|r| r.ranking.is_none())
            .map(|r| r.sample_id.clone())
            .collect();
        if !missing.is_empty() {
            return Err(DataError::MissingRankings(missing));
        }
        Self::from_orders(
            records.iter().map(|r| r.ranking.as_deref().expect("checked")),
            slots,
        )
    }

    /// Count of samples per rank position; each equals `total`.
    pub fn position_totals(&self) -> Vec<usize> {
        let m = self.slots.len();
        (0..m)
            .map(|pos| self.counts.iter().map(|row| row[pos]).sum())
            .collect()
    }

    pub fn count(&self, slot: &str, position: usize) -> Option<usize> {
        let idx = self.slots.iter().position(|s| s == slot)?;
        self.counts[idx].get(position).copied()
    }
}

impl std::fmt::Display for RankStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let width = self
            .slots
            .iter()
            .map(|s| s.len())
            .max()
            .unwrap_or(4)
            .max(4);
        write!(f, "{:width$}", "slot")?;
        for pos in 1..=self.slots.len() {
            write!(f, "  rank@{pos:<4}")?;
        }
        writeln!(f)?;
        for (slot, row) in self.slots.iter().zip(&self.counts) {
            write!(f, "{slot:width$}")?;
            for c in row {
                write!(f, "  {c:<9}")?;
            }
            writeln!(f)?;
        }
        write!(f, "samples: {}", self.total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn slots() -> Vec<String> {
        vec!["A".into(), "E".into(), "I".into()]
    }

    fn record(id: &str, ranking: &[&str]) -> FeatureRecord {
        FeatureRecord {
            sample_id: id.into(),
            label: 0,
            text: vec![0.0],
            fine: BTreeMap::new(),
            ranking: Some(ranking.iter().map(|s| s.to_string()).collect()),
        }
    }

    #[test]
    fn hand_counted_table() {
        let records = vec![
            record("1", &["I", "A", "E"]),
            record("2", &["A", "I", "E"]),
            record("3", &["I", "E", "A"]),
        ];
        let stats = RankStats::from_records(&records, &slots()).unwrap();
        assert_eq!(stats.count("I", 0), Some(2));
        assert_eq!(stats.count("A", 0), Some(1));
        assert_eq!(stats.count("E", 0), Some(0));
        assert_eq!(stats.count("E", 2), Some(2));
        assert_eq!(stats.position_totals(), vec![3, 3, 3]);
    }

    #[test]
    fn identical_rankings_concentrate() {
        let records: Vec<FeatureRecord> = (0..5)
            .map(|i| record(&i.to_string(), &["E", "A", "I"]))
            .collect();
        let stats = RankStats::from_records(&records, &slots()).unwrap();
        assert_eq!(stats.count("E", 0), Some(5));
        assert_eq!(stats.count("A", 0), Some(0));
        assert_eq!(stats.count("I", 0), Some(0));
    }

    #[test]
    fn missing_rankings_list_ids() {
        let mut records = vec![record("id-with", &["A", "E", "I"])];
        records.push(FeatureRecord {
            ranking: None,
            ..record("id-without", &["A", "E", "I"])
        });
        let err = RankStats::from_records(&records, &slots())
            .unwrap_err()
            .to_string();
        assert!(err.contains("id-without") && !err.contains("id-with,"), "{err}");
    }
}
