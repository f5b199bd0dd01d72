use std::collections::BTreeMap;
use std::time::Duration;

use cascade_core::dynamics::StateDiagnostics;
use cascade_core::qsystem::SystemParams;
use serde::Serialize;

use crate::runners::RunOutput;
use crate::scenario::Scenario;
use crate::RunOptions;

#[derive(Clone, Debug, Serialize)]
pub struct NumericalChecks {
    /// Worst trace, hermiticity and positivity figures over every state computed.
    pub states: StateDiagnostics,
    pub values: BTreeMap<String, f64>,
}

/// Written once per run next to the CSV files.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub version: &'static str,
    pub kind: String,
    pub scenario_file: Option<String>,
    pub params: SystemParams,
    pub settings: BTreeMap<String, String>,
    pub propagator: String,
    pub jobs: usize,
    pub duration_seconds: f64,
    pub outputs: Vec<String>,
    pub numerical_checks: NumericalChecks,
    pub notes: Vec<String>,
}

impl RunManifest {
    pub fn new(sc: &Scenario, opts: &RunOptions, jobs: usize, elapsed: Duration, outputs: Vec<String>, run: RunOutput) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION"),
            kind: sc.kind.clone(),
            scenario_file: opts.source.as_ref().map(|p| p.display().to_string()),
            params: sc.params,
            settings: sc.resolved(),
            propagator: sc.propagator.clone(),
            jobs,
            duration_seconds: elapsed.as_secs_f64(),
            outputs,
            numerical_checks: NumericalChecks { states: run.diagnostics, values: run.checks },
            notes: run.notes,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }
}
