//! Readers for the DL_POLY `CONTROL`, `FIELD` and `HISTORY` files and
//! writers for the `RDF` and `POP` tables.

mod directives;
mod field;
mod history;
mod output;

pub use directives::{parse_directives, Directives};
pub use field::{parse_field, write_field, MoleculeSpec, SiteSpec, Topology};
pub use history::{
    open_history, write_history_frame, write_history_header, Frame, FrameRead, HistoryReader,
};
pub use output::{pair_order, write_pop, write_rdf, RdfTable};

use std::io;

use thiserror::Error;

use crate::geometry::GeometryError;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("{file} line {line}: {message}")]
    Syntax {
        file: &'static str,
        line: usize,
        message: String,
    },
    #[error("{file}: {message}")]
    Structure { file: &'static str, message: String },
    #[error("HISTORY line {line}: {source}")]
    Cell {
        line: usize,
        #[source]
        source: GeometryError,
    },
    #[error("HISTORY frame {frame}: {found} atoms in file but FIELD describes {expected}")]
    AtomCount {
        frame: u64,
        found: usize,
        expected: usize,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Parses a real number as written by Fortran programs (`1.0D+00` allowed).
/// Non-finite values are rejected.
pub(crate) fn parse_real(token: &str) -> Option<f64> {
    let value = match token.parse::<f64>() {
        Ok(v) => v,
        Err(_) => token.replace(['d', 'D'], "e").parse::<f64>().ok()?,
    };
    value.is_finite().then_some(value)
}

#[cfg(test)]
mod tests {
    use super::parse_real;

    #[test]
    fn fortran_reals() {
        assert_eq!(parse_real("1.5"), Some(1.5));
        assert_eq!(parse_real("1.5D+01"), Some(15.0));
        assert_eq!(parse_real("-2.0d-1"), Some(-0.2));
        assert_eq!(parse_real("2.5E+00"), Some(2.5));
        assert_eq!(parse_real("NaN"), None);
        assert_eq!(parse_real("inf"), None);
        assert_eq!(parse_real("abc"), None);
    }
}
