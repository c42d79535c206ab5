//! Per-step execution metrics and their flat JSON form.

use serde::Serialize;
use std::collections::BTreeMap;

/// Counters for one plan step, summed over partitions.
#[derive(Clone, Copy, Debug, Default, Serialize, PartialEq)]
pub struct StepMetrics {
    pub time_ms: f64,
    pub flops: u64,
    pub bytes_shipped: u64,
    pub rows: u64,
}

/// One entry per plan step, in plan order. Serializes as a flat JSON object
/// keyed by step name (`s<idx>_<kind>`), nothing else.
#[derive(Clone, Debug, Default)]
pub struct ExecutionReport {
    steps: Vec<(String, StepMetrics)>,
}

impl ExecutionReport {
    pub fn push(&mut self, name: String, metrics: StepMetrics) {
        self.steps.push((name, metrics));
    }

    pub fn steps(&self) -> &[(String, StepMetrics)] {
        &self.steps
    }

    pub fn total_flops(&self) -> u64 {
        self.steps.iter().map(|(_, m)| m.flops).sum()
    }

    pub fn total_bytes_shipped(&self) -> u64 {
        self.steps.iter().map(|(_, m)| m.bytes_shipped).sum()
    }

    pub fn total_time_ms(&self) -> f64 {
        self.steps.iter().map(|(_, m)| m.time_ms).sum()
    }

    /// Metrics for the step named `name`.
    pub fn step(&self, name: &str) -> Option<&StepMetrics> {
        self.steps.iter().find(|(n, _)| n == name).map(|(_, m)| m)
    }

    /// Flat JSON object: step name to metrics. Zero-padded step indices keep
    /// the sorted key order equal to plan order.
    pub fn to_json(&self) -> String {
        let map: BTreeMap<&str, &StepMetrics> =
            self.steps.iter().map(|(n, m)| (n.as_str(), m)).collect();
        serde_json::to_string_pretty(&map).expect("report serializes")
    }
}

/// Canonical step name: `s007_message_passing`.
pub fn step_name(index: usize, kind: &str) -> String {
    format!("s{index:03}_{kind}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_is_flat_and_ordered() {
        let mut report = ExecutionReport::default();
        report.push(
            step_name(0, "transform"),
            StepMetrics {
                time_ms: 1.5,
                flops: 640,
                bytes_shipped: 0,
                rows: 10,
            },
        );
        report.push(step_name(1, "message_passing"), StepMetrics::default());
        let json = report.to_json();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        let obj = value.as_object().unwrap();
        assert_eq!(obj.len(), 2);
        assert_eq!(obj["s000_transform"]["flops"], 640);
        assert_eq!(
            obj["s000_transform"]
                .as_object()
                .unwrap()
                .keys()
                .collect::<Vec<_>>(),
            vec!["bytes_shipped", "flops", "rows", "time_ms"]
        );
    }
}
