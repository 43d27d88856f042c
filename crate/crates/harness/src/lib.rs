//! Evaluation harness: the security scenario suite and the latency/cost
//! benchmark, both driving an in-process node through its command queue.

pub mod bench;
pub mod security;
mod table;

pub use bench::{latency_bench, run_latency_bench, BenchClock, BenchConfig, BenchError, LatencyReport};
pub use security::{run_security_suite, security_suite, ScenarioReport, ScenarioRow};
