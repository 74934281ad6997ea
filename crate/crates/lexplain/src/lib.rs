//! Command line, completion backends and the two-step prompt chain on top
//! of `lexplain-core`.

pub mod chain;
pub mod cli;
pub mod gateway;

pub use chain::{run_chain, run_repeated, run_repeated_parallel, ChainFailure, ChainRun, ChainStage};
pub use gateway::{CompletionClient, GatewayError, HttpClient, LlmConfig, LlmResponse, MockClient};
