//! Class-weighted linear SVM and classification metrics.

mod metrics;
mod svm;

pub use metrics::{evaluate, ClassMetrics, ConfusionMatrix, MetricsReport};
pub use svm::{
    class_weights, primal_gradient, primal_objective, top_coefficients, train, ClassWeights, LinearModel, SvmParams,
    TrainingTrace, MODEL_HEADER,
};
