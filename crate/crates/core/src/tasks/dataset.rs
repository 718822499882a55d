//! The assembled probing dataset handed to probe training.

use super::TaskError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TaskKind {
    Wc,
    Sl,
    CbShape,
    CbColor,
    SomoClose,
    SomoFar,
    Mwc,
}

impl TaskKind {
    pub const ALL: [TaskKind; 7] = [
        TaskKind::Wc,
        TaskKind::Sl,
        TaskKind::CbShape,
        TaskKind::CbColor,
        TaskKind::SomoClose,
        TaskKind::SomoFar,
        TaskKind::Mwc,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TaskKind::Wc => "wc",
            TaskKind::Sl => "sl",
            TaskKind::CbShape => "cb_shape",
            TaskKind::CbColor => "cb_color",
            TaskKind::SomoClose => "somo_close",
            TaskKind::SomoFar => "somo_far",
            TaskKind::Mwc => "mwc",
        }
    }

    pub fn parse(name: &str) -> Option<TaskKind> {
        TaskKind::ALL.into_iter().find(|t| t.as_str() == name)
    }

    /// Number of classes for single-label tasks; None for the per-word
    /// flag tasks (WC, MWC), which train one binary probe per word.
    pub fn n_classes(&self) -> Option<usize> {
        match self {
            TaskKind::Sl | TaskKind::CbShape | TaskKind::CbColor => Some(6),
            TaskKind::SomoClose | TaskKind::SomoFar => Some(2),
            TaskKind::Wc | TaskKind::Mwc => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Split {
    Train,
    Val,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
        }
    }

    pub fn parse(name: &str) -> Option<Split> {
        match name {
            "train" => Some(Split::Train),
            "val" => Some(Split::Val),
            _ => None,
        }
    }
}

/// Task-appropriate target labels, parallel to the dataset's samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TaskLabels {
    /// One flag per sample (SOMO).
    Binary(Vec<u8>),
    /// One class in 0..5 per sample (SL, CB).
    Class(Vec<usize>),
    /// One flag vector per sample (WC, MWC), all of equal width.
    MultiFlag(Vec<Vec<u8>>),
}

impl TaskLabels {
    pub fn len(&self) -> usize {
        match self {
            TaskLabels::Binary(v) => v.len(),
            TaskLabels::Class(v) => v.len(),
            TaskLabels::MultiFlag(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Inputs, targets, and split tags for one probing task. All fields are
/// parallel: sample i has entity `entity_ids[i]`, representation
/// `inputs[i]`, and split `splits[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbingDataset {
    pub task: TaskKind,
    pub entity_ids: Vec<String>,
    pub inputs: Vec<Vec<f64>>,
    pub labels: TaskLabels,
    pub splits: Vec<Split>,
}

impl ProbingDataset {
    pub fn new(
        task: TaskKind,
        entity_ids: Vec<String>,
        inputs: Vec<Vec<f64>>,
        labels: TaskLabels,
        splits: Vec<Split>,
    ) -> Result<Self, TaskError> {
        let n = entity_ids.len();
        for len in [inputs.len(), labels.len(), splits.len()] {
            if len != n {
                return Err(TaskError::FieldLengthMismatch { left: n, right: len });
            }
        }
        if let Some(first) = inputs.first() {
            let dim = first.len();
            for row in &inputs {
                if row.len() != dim {
                    return Err(TaskError::FieldLengthMismatch {
                        left: dim,
                        right: row.len(),
                    });
                }
            }
        }
        if let TaskLabels::MultiFlag(flags) = &labels {
            if let Some(first) = flags.first() {
                let width = first.len();
                for row in flags {
                    if row.len() != width {
                        return Err(TaskError::FieldLengthMismatch {
                            left: width,
                            right: row.len(),
                        });
                    }
                }
            }
        }
        Ok(Self {
            task,
            entity_ids,
            inputs,
            labels,
            splits,
        })
    }

    pub fn len(&self) -> usize {
        self.entity_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entity_ids.is_empty()
    }

    /// Sample indices of each split, in dataset order.
    pub fn split_indices(&self, split: Split) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.splits[i] == split).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn task_names_round_trip() {
        for task in TaskKind::ALL {
            assert_eq!(TaskKind::parse(task.as_str()), Some(task));
        }
        assert_eq!(TaskKind::parse("nope"), None);
    }

    #[test]
    fn split_names_round_trip() {
        assert_eq!(Split::parse("train"), Some(Split::Train));
        assert_eq!(Split::parse("val"), Some(Split::Val));
        assert_eq!(Split::parse("test"), None);
    }

    #[test]
    fn parallel_fields_are_enforced() {
        let err = ProbingDataset::new(
            TaskKind::Sl,
            vec!["a".into(), "b".into()],
            vec![vec![1.0]],
            TaskLabels::Class(vec![0, 1]),
            vec![Split::Train, Split::Val],
        );
        assert!(matches!(err, Err(TaskError::FieldLengthMismatch { .. })));

        let ragged = ProbingDataset::new(
            TaskKind::Sl,
            vec!["a".into(), "b".into()],
            vec![vec![1.0], vec![1.0, 2.0]],
            TaskLabels::Class(vec![0, 1]),
            vec![Split::Train, Split::Val],
        );
        assert!(matches!(ragged, Err(TaskError::FieldLengthMismatch { .. })));
    }

    #[test]
    fn split_indices_partition_samples() {
        let ds = ProbingDataset::new(
            TaskKind::SomoFar,
            vec!["a".into(), "b".into(), "c".into()],
            vec![vec![0.0], vec![1.0], vec![2.0]],
            TaskLabels::Binary(vec![0, 1, 0]),
            vec![Split::Train, Split::Val, Split::Train],
        )
        .unwrap();
        assert_eq!(ds.split_indices(Split::Train), vec![0, 2]);
        assert_eq!(ds.split_indices(Split::Val), vec![1]);
    }
}
