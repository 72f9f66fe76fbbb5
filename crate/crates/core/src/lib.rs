pub mod analysis;
pub mod backend;
pub mod bpe;
pub mod container;
pub mod error;
pub mod reorder;
pub mod report;
pub mod pipeline;
pub mod varint;
pub mod wrt;

pub use error::{Error, Result};
