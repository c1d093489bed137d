//! IO, providers, persistence, HTTP service and CLI around the core engine.

pub mod api;
pub mod assist;
pub mod bank;
pub mod cli;
pub mod document;
pub mod provider;
pub mod reporting;
pub mod semantic;
pub mod store;
