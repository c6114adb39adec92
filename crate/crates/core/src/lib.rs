pub mod dense;
pub mod error;
pub mod experiments;
pub mod extension;
pub mod gelfand;
pub mod geometry;
pub mod model;
pub mod parse;
pub mod pwexp;
pub mod report;
pub mod sampling;
pub mod seq;
pub mod vonneumann;

pub use dense::{CMatrix, HermitianMatrix};
pub use error::{Error, Result};
pub use extension::{ExtensionOperator, RestrictionOperator};
pub use gelfand::MinusOneFunctional;
pub use geometry::{gap_metric, SpanFamily};
pub use model::{DiagonalSequence, HilbertModel, MomentumLine, Sign};
pub use parse::LiteralModel;
pub use pwexp::PiecewiseExpPoly;
pub use report::{ExperimentReport, Row};
pub use seq::{Polynomial, SeqVector};
pub use vonneumann::{ExtensionParameter, RankOneRestriction};

pub use num_complex::Complex64;
