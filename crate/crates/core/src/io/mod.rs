//! File formats: PNML nets, plain-text traces, JSON state graphs and runs,
//! DOT export and region tables.

mod dot;
mod pnml;
mod table;
mod text;

pub use dot::export_dot;
pub use pnml::{
    parse_pnml, write_pnml, write_pnml_document, write_synthesis_pnml, PnmlDocument, TOOL_NAME,
};
pub use table::{region_table_json, region_table_text};
pub use text::{parse_run, parse_state_graph, parse_traces, write_run, write_state_graph};

use thiserror::Error;

use crate::convert::ConvertError;
use crate::net::NetError;
use crate::semantics::SemanticsError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IoError {
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("PNML line {line}: <{element}>: {message}")]
    Pnml {
        line: u32,
        element: String,
        message: String,
    },
    #[error("line {line}: {message}")]
    Text { line: usize, message: String },
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error(transparent)]
    Convert(#[from] ConvertError),
}

pub type Result<T, E = IoError> = std::result::Result<T, E>;
