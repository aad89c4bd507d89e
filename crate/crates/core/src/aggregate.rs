//! Majority-vote label aggregation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FeatureVector};
use crate::error::{Error, Result};
use crate::lf::{LabelMatrix, ABSTAIN};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregatedLabels {
    labels: Vec<i8>,
    labeled_count: usize,
}

impl AggregatedLabels {
    pub fn from_labels(labels: Vec<i8>) -> Result<Self> {
        if let Some(bad) = labels.iter().find(|v| !matches!(v, -1..=1)) {
            return Err(Error::Input(format!("label {bad} outside {{-1, 0, 1}}")));
        }
        let labeled_count = labels.iter().filter(|&&v| v != ABSTAIN).count();
        Ok(Self {
            labels,
            labeled_count,
        })
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn labeled_count(&self) -> usize {
        self.labeled_count
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Two columns: `point_id,label`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["point_id", "label"])?;
        for (i, l) in self.labels.iter().enumerate() {
            w.write_record([i.to_string(), l.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path.as_ref())?;
        let mut labels = Vec::new();
        for (r, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line()).unwrap_or(r as u64 + 2);
            let parse_err = |col: &str, v: &str| Error::Parse {
                line,
                column: col.into(),
                value: v.into(),
            };
            let id: usize = rec[0].trim().parse().map_err(|_| parse_err("point_id", &rec[0]))?;
            if id != r {
                return Err(Error::Schema(format!("line {line}: point ids must be contiguous from 0")));
            }
            labels.push(rec[1].trim().parse().map_err(|_| parse_err("label", &rec[1]))?);
        }
        Self::from_labels(labels)
    }
}

/// Strict majority among non-abstaining LFs; ties and empty rows abstain.
pub fn majority_vote(mat: &LabelMatrix) -> AggregatedLabels {
    let labels: Vec<i8> = (0..mat.rows())
        .map(|i| {
            let (mut zeros, mut ones) = (0usize, 0usize);
            for &v in mat.row(i) {
                match v {
                    0 => zeros += 1,
                    1 => ones += 1,
                    _ => {}
                }
            }
            match ones.cmp(&zeros) {
                std::cmp::Ordering::Greater => 1,
                std::cmp::Ordering::Less => 0,
                std::cmp::Ordering::Equal => ABSTAIN,
            }
        })
        .collect();
    AggregatedLabels::from_labels(labels).expect("votes are in range")
}

/// Features and labels of the points that received a label, in point order.
#[derive(Clone, Debug)]
pub struct TrainingSet {
    pub point_ids: Vec<usize>,
    pub features: Vec<FeatureVector>,
    pub labels: Vec<u8>,
}

impl TrainingSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

pub fn training_set(agg: &AggregatedLabels, d: &Dataset) -> Result<TrainingSet> {
    training_set_from(agg, &d.model_features())
}

/// Like [`training_set`], with precomputed model features.
pub fn training_set_from(agg: &AggregatedLabels, features: &[FeatureVector]) -> Result<TrainingSet> {
    if agg.len() != features.len() {
        return Err(Error::Dimension {
            expected: features.len(),
            got: agg.len(),
        });
    }
    if agg.labeled_count() == 0 {
        return Err(Error::NoTrainingData);
    }
    let mut out = TrainingSet {
        point_ids: Vec::with_capacity(agg.labeled_count()),
        features: Vec::with_capacity(agg.labeled_count()),
        labels: Vec::with_capacity(agg.labeled_count()),
    };
    for (i, &l) in agg.labels().iter().enumerate() {
        if l != ABSTAIN {
            out.point_ids.push(i);
            out.features.push(features[i].clone());
            out.labels.push(l as u8);
        }
    }
    Ok(out)
}
