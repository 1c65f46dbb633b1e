//! File formats, parallel drivers and the command implementations behind the
//! `twophoton` binary. The physics lives in [`twophoton_core`].

pub mod commands;
pub mod envelope;
pub mod events_io;
pub mod format;
pub mod parallel;
pub mod table_io;
pub mod validate;

pub use envelope::OutputEnvelope;
