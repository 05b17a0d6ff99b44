//! Experiment orchestration: specs, sweeps, file outputs and the self-test.

pub mod instance;
pub mod output;
pub mod run;
pub mod selftest;
pub mod spec;

pub use instance::{CouplingSource, Instance, InstanceResult};
pub use output::{emit_outputs, plot_spec, write_coupling, write_scaling_csv, PlotSpec, TRIALS_HEADER};
pub use run::{
    coupling_with_sidecar, dipole_coupling, run_experiment, run_scaling, to_db, CouplingSidecar, ExperimentOutput, ScalingRow,
    SummaryRow, TrialRecord,
};
pub use selftest::{run_selftest, SelfTestCheck};
pub use spec::{Awareness, ExperimentKind, ExperimentSpec, DEFAULT_SPACINGS};
