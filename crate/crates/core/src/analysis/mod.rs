//! Evaluation and interpretation: micro/macro F1, prediction-consistency
//! ratios, erasure-based attribution, crucial-word extraction, and the
//! word-frequency profile that makes selection bias visible.

mod attribution;
mod metrics;

pub use attribution::{
    erasure_attribution, frequency_profile, top_k_percent, write_attribution_csv,
    write_frequency_csv, AttributionVector, FrequencyReport, FrequencyRow,
};
pub use metrics::{
    certified_ratio, micro_macro_f1, per_label_f1, write_metrics_json, MetricsReport,
};
