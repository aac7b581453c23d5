//! Classroom simulator: scripted student populations driving the session
//! service, plus the haptics identification quiz.

pub mod http;
pub mod quiz;
pub mod run;
pub mod scenario;

pub use http::{run_http, HttpOptions};
pub use quiz::{haptics_quiz, ConfusionMatrix, QuizAborted, Responder, ResponderScript, ScriptedResponder};
pub use run::{plan, run_inprocess, run_inprocess_with_store, Mode, SimulationReport};
pub use scenario::{Scenario, StudentProfile};

use nudge_core::ServiceError;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("connection error: {0}")]
    Connection(String),
    #[error("server answered {status}: {body}")]
    Http { status: u16, body: String },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error(transparent)]
    Service(#[from] ServiceError),
}
