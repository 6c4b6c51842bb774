use serde::{Deserialize, Serialize};

use crate::eval::{render_table, TableColumn};
use crate::scalar::Scalar;
use crate::simnet::WeightConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainMode {
    Grid,
    Sgd,
    Es,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TrajectoryPoint<F: Scalar> {
    pub loss: F,
    pub accuracy: F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EvaluatedConfig<F: Scalar> {
    pub label: String,
    pub config: WeightConfig<F>,
    pub loss: F,
    pub accuracy: F,
}

/// Outcome of a training run.
///
/// `trajectory` has `iterations + 1` entries: the starting point followed by
/// one entry per step. For descent it is the current iterate; for grid
/// search and evolution it is the best seen so far.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TrainReport<F: Scalar> {
    pub mode: TrainMode,
    pub best: WeightConfig<F>,
    pub best_loss: F,
    pub best_accuracy: F,
    pub trajectory: Vec<TrajectoryPoint<F>>,
    pub iterations: usize,
    pub wall_time_ms: f64,
    /// Configs worth tabulating: every grid point, or start and result.
    pub evaluated: Vec<EvaluatedConfig<F>>,
    /// Gradient coordinates that hit a non-differentiable point.
    #[serde(default)]
    pub flagged: Vec<String>,
}

impl<F: Scalar> TrainReport<F> {
    /// Weight table with one column per evaluated config.
    pub fn render_table(&self) -> String {
        let columns: Vec<TableColumn<'_, F>> = self
            .evaluated
            .iter()
            .map(|e| TableColumn {
                name: e.label.clone(),
                config: &e.config,
                accuracy: e.accuracy,
            })
            .collect();
        render_table(&columns)
    }

    /// Drops timing so two runs can be compared for exact equality.
    pub fn without_timing(mut self) -> Self {
        self.wall_time_ms = 0.0;
        self
    }
}
