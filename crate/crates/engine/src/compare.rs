//! Full-graph vs sampling comparison record.

use gasline_core::matrix::Matrix;
use gasline_core::sampling::SamplingCounters;
use serde::Serialize;

use crate::report::ExecutionReport;

/// Flat, serializable comparison of one engine run against one sampling run
/// over the same model, graph, and parameters. Ratios are sampling relative
/// to full-graph (`> 1` means sampling did more).
#[derive(Clone, Debug, Serialize)]
pub struct ComparisonRecord {
    pub flops_ratio: f64,
    pub wall_time_ratio: f64,
    pub redundancy_factor: f64,
    pub max_output_deviation: f64,
    pub full_flops: u64,
    pub sampling_flops: u64,
    pub full_time_ms: f64,
    pub sampling_time_ms: f64,
    pub num_targets: u64,
}

/// Build the record. `full_targets` are the engine's output rows restricted
/// to the sampled targets, in the same order as `sampling_outputs`.
pub fn compare_runs(
    full_report: &ExecutionReport,
    full_targets: &Matrix,
    sampling_outputs: &Matrix,
    sampling_counters: &SamplingCounters,
    sampling_time_ms: f64,
    redundancy_factor: f64,
) -> ComparisonRecord {
    assert_eq!(
        full_targets.shape(),
        sampling_outputs.shape(),
        "target outputs must align"
    );
    let full_flops = full_report.total_flops();
    let full_time_ms = full_report.total_time_ms();
    let ratio = |a: f64, b: f64| if b == 0.0 { f64::INFINITY } else { a / b };
    ComparisonRecord {
        flops_ratio: ratio(sampling_counters.flops as f64, full_flops as f64),
        wall_time_ratio: ratio(sampling_time_ms, full_time_ms),
        redundancy_factor,
        max_output_deviation: full_targets.max_abs_diff(sampling_outputs) as f64,
        full_flops,
        sampling_flops: sampling_counters.flops,
        full_time_ms,
        sampling_time_ms,
        num_targets: full_targets.rows() as u64,
    }
}

impl ComparisonRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::{step_name, StepMetrics};

    #[test]
    fn self_comparison_is_all_ones_and_zero_deviation() {
        let mut report = ExecutionReport::default();
        report.push(
            step_name(0, "transform"),
            StepMetrics {
                time_ms: 2.0,
                flops: 100,
                bytes_shipped: 0,
                rows: 10,
            },
        );
        let out = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let counters = SamplingCounters {
            node_rows: 10,
            edge_evals: 0,
            flops: 100,
        };
        let record = compare_runs(&report, &out, &out, &counters, 2.0, 1.0);
        assert_eq!(record.flops_ratio, 1.0);
        assert_eq!(record.wall_time_ratio, 1.0);
        assert_eq!(record.redundancy_factor, 1.0);
        assert_eq!(record.max_output_deviation, 0.0);
    }

    #[test]
    fn json_contains_the_documented_fields() {
        let report = ExecutionReport::default();
        let out = Matrix::zeros(0, 2);
        let record = compare_runs(&report, &out, &out, &SamplingCounters::default(), 0.0, 1.0);
        let value: serde_json::Value = serde_json::from_str(&record.to_json()).unwrap();
        for key in [
            "flops_ratio",
            "wall_time_ratio",
            "redundancy_factor",
            "max_output_deviation",
            "full_flops",
            "sampling_flops",
            "full_time_ms",
            "sampling_time_ms",
            "num_targets",
        ] {
            assert!(value.get(key).is_some(), "missing {key}");
        }
        assert_eq!(value.as_object().unwrap().len(), 9);
    }
}
