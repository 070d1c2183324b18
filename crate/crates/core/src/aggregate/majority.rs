use alloc::vec;

use super::ColumnRule;
use crate::error::Result;
use crate::model::{GroundTruth, Label, LabelMatrix};

/// Plurality vote; ties go to the smallest label.
#[derive(Debug, Clone, Copy)]
pub struct MajorityRule {
    k: usize,
    m: usize,
}

impl MajorityRule {
    pub fn new(k: usize, m: usize) -> Self {
        MajorityRule { k, m }
    }
}

impl ColumnRule for MajorityRule {
    fn k(&self) -> usize {
        self.k
    }

    fn m(&self) -> usize {
        self.m
    }

    fn decide(&self, column: &[Label]) -> Label {
        // k is small; a stack buffer would need a const bound
        let mut votes = vec![0u32; self.k];
        for &x in column {
            votes[x as usize - 1] += 1;
        }
        let mut best = 0;
        for g in 1..self.k {
            if votes[g] > votes[best] {
                best = g;
            }
        }
        best as Label + 1
    }
}

pub fn majority_vote(labels: &LabelMatrix) -> Result<GroundTruth> {
    MajorityRule::new(labels.k(), labels.m()).apply(labels)
}
