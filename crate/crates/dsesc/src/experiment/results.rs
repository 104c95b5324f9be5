//! Serialized experiment output (`results.json`).

use serde::{Deserialize, Serialize};

use crate::experiment::config::{AffinitySource, ExperimentConfig, Modules};
use crate::metrics::MetricReport;

/// Records which reading of the ambiguous formulas this build runs with, so
/// result files are self-describing.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct Interpretation {
    /// The contrastive softmax denominator ranges over all columns of ZC.
    pub contrastive_denominator: String,
    /// Spectral step uses the symmetric-normalized Laplacian.
    pub laplacian: String,
}

impl Default for Interpretation {
    fn default() -> Self {
        Interpretation {
            contrastive_denominator: "infonce-over-zc-columns".into(),
            laplacian: "symmetric-normalized".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default, PartialEq)]
pub struct CurveData {
    pub l1: Vec<f64>,
    pub l2: Vec<f64>,
    pub l3: Vec<f64>,
    pub total: Vec<f64>,
}

/// Clustering of one affinity source: predicted labels plus metrics when
/// ground truth is available.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SourceEvaluation {
    pub source: AffinitySource,
    pub labels: Vec<usize>,
    pub metrics: Option<MetricReport>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AblationCell {
    pub modules: Modules,
    pub source: AffinitySource,
    pub metrics: MetricReport,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SweepRow {
    pub gamma: f64,
    pub metrics: MetricReport,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ResultsFile {
    pub config: ExperimentConfig,
    pub interpretation: Interpretation,
    pub pretrain_curve: Vec<f64>,
    pub loss_curves: CurveData,
    pub evaluations: Vec<SourceEvaluation>,
    #[serde(default)]
    pub ablation: Option<Vec<AblationCell>>,
    #[serde(default)]
    pub sweep: Option<Vec<SweepRow>>,
}

impl ResultsFile {
    pub fn new(config: ExperimentConfig) -> Self {
        ResultsFile {
            config,
            interpretation: Interpretation::default(),
            pretrain_curve: Vec::new(),
            loss_curves: CurveData::default(),
            evaluations: Vec::new(),
            ablation: None,
            sweep: None,
        }
    }

    /// True when every emitted metric value is finite.
    pub fn metrics_finite(&self) -> bool {
        let eval_ok = self
            .evaluations
            .iter()
            .all(|e| e.metrics.map_or(true, |m| m.is_finite()));
        let ablation_ok = self
            .ablation
            .iter()
            .flatten()
            .all(|c| c.metrics.is_finite());
        let sweep_ok = self.sweep.iter().flatten().all(|r| r.metrics.is_finite());
        eval_ok && ablation_ok && sweep_ok
    }

    pub fn evaluation(&self, source: AffinitySource) -> Option<&SourceEvaluation> {
        self.evaluations.iter().find(|e| e.source == source)
    }
}
