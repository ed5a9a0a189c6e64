//! Property-based environment generation and replay for OSEK/VDX-style
//! kernels.
//!
//! Given a kernel-style codebase (a mini-C subset or a pre-extracted facts
//! file), an OIL-style system configuration, and a safety property, the
//! crate:
//!
//! 1. extracts def/use and call facts and builds an entity/relation graph
//!    ([`facts`], [`minic`], [`graph`]);
//! 2. slices the property into its target variables, end-level functions,
//!    root-level API functions, and the reduced verification target
//!    ([`slicer`]);
//! 3. simulates OSEK/VDX task management with precondition checking and
//!    assertion monitors ([`sim`]);
//! 4. generates and replays constraint-respecting random scenarios at both
//!    the API ("root") and kernel-internal ("end") level, with coverage
//!    accounting ([`scenario`]);
//! 5. emits bounded-model-checking and replay harnesses plus the
//!    reduced-target manifest ([`emit`]).
//!
//! The `envgen` binary exposes the pipeline as subcommands; file formats
//! are documented in `docs/FORMATS.md`.

pub mod config;
pub mod emit;
pub mod error;
pub mod facts;
pub mod graph;
pub mod minic;
pub mod oil;
pub mod property;
pub mod scenario;
pub mod sim;
pub mod slicer;

pub use error::{Error, Result};
