//! Command-line front end: model files, subcommands, CSV/SVG output and
//! run manifests.

pub mod commands;
pub mod modelfile;
pub mod output;

use pdmp::PdmpError;

pub use commands::{replay, run, Command, Common, RunManifest};
pub use modelfile::{parse_model_file, parse_model_str, serialize_model, ModelFileError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_INCONCLUSIVE: i32 = 4;

/// Exit code for a failed command.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<ModelFileError>() || cause.is::<commands::ValidationFailed>() {
            return EXIT_INVALID;
        }
        if let Some(e) = cause.downcast_ref::<PdmpError>() {
            return match e {
                PdmpError::EnvOutOfRange { .. }
                | PdmpError::NegativeState { .. }
                | PdmpError::DimensionMismatch { .. }
                | PdmpError::InvalidModel(_)
                | PdmpError::InvalidConfig(_)
                | PdmpError::Reducible
                | PdmpError::Unsupported(_) => EXIT_INVALID,
                PdmpError::RateBoundViolated { .. }
                | PdmpError::StepUnderflow { .. }
                | PdmpError::NoInteriorMeasure(_)
                | PdmpError::NonIntegrable(_)
                | PdmpError::SingularInteraction
                | PdmpError::InfeasibleMeans(_) => EXIT_NUMERICAL,
            };
        }
    }
    EXIT_OTHER
}
