use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{DataError, Result};

/// One sample: pooled text feature, pooled fine-slot features, class
/// label, and an optional ranking over the fine slots
/// (most-contributing first; the text slot is implicit).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub sample_id: String,
    pub label: usize,
    pub text: Vec<f64>,
    pub fine: BTreeMap<String, Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranking: Option<Vec<String>>,
}

impl FeatureRecord {
    fn fail(&self, reason: impl Into<String>) -> DataError {
        DataError::Record {
            sample_id: self.sample_id.clone(),
            reason: reason.into(),
        }
    }

    /// Checks dimensions, label range, slot coverage, and that any
    /// ranking is a permutation of the slot set.
    pub fn validate(&self, d: usize, k: usize, slots: &[String]) -> Result<()> {
        if self.text.len() != d {
            return Err(self.fail(format!("text dim {} != {d}", self.text.len())));
        }
        if !self.text.iter().all(|v| v.is_finite()) {
            return Err(self.fail("non-finite text feature"));
        }
        if self.label >= k {
            return Err(self.fail(format!("label {} out of range for K={k}", self.label)));
        }
        if self.fine.len() != slots.len() {
            return Err(self.fail(format!(
                "expected {} fine slots, found {}",
                slots.len(),
                self.fine.len()
            )));
        }
        for slot in slots {
            match self.fine.get(slot) {
                None => return Err(self.fail(format!("missing fine slot {slot}"))),
                Some(f) if f.len() != d => {
                    return Err(self.fail(format!("slot {slot} dim {} != {d}", f.len())))
                }
                Some(f) if !f.iter().all(|v| v.is_finite()) => {
                    return Err(self.fail(format!("non-finite feature in slot {slot}")))
                }
                Some(_) => {}
            }
        }
        if let Some(ranking) = &self.ranking {
            if !is_permutation_of(ranking, slots) {
                return Err(self.fail(format!(
                    "ranking {ranking:?} is not a permutation of slots {slots:?}"
                )));
            }
        }
        Ok(())
    }
}

/// True when `candidate` lists exactly the elements of `slots`, each
/// once, in any order.
pub fn is_permutation_of(candidate: &[String], slots: &[String]) -> bool {
    if candidate.len() != slots.len() {
        return false;
    }
    let mut sorted_c: Vec<&String> = candidate.iter().collect();
    let mut sorted_s: Vec<&String> = slots.iter().collect();
    sorted_c.sort();
    sorted_s.sort();
    sorted_c == sorted_s
}
