//! Segmentation diversity metrics, image ambiguity scoring, and redundancy
//! budget allocation for crowdsourced foreground segmentation.
//!
//! The modules build on each other:
//!
//! * [`mask`]: binary masks, run-length encoding, polygons, components.
//! * [`diversity`]: per-annotation diversity against a majority reference
//!   and batch totals.
//! * [`scoring`]: ambiguity labels and per-image unambiguity scores.
//! * [`allocation`]: choosing which images get redundant annotations, and
//!   budget-vs-diversity curves.
//! * [`eval`]: precision/recall, label agreement, reports.
//! * [`service`]: the task server and its event log.

pub mod allocation;
pub mod distance;
pub mod diversity;
pub mod error;
pub mod eval;
pub mod mask;
pub mod scoring;
pub mod service;
pub mod synth;

pub use allocation::{AllocationPlan, DiversityCurve, Strategy};
pub use diversity::{AnnotationSet, DiversityScore, DiversityTable, Measure};
pub use error::{Error, Result};
pub use mask::{BoundingBox, PixelMask, PolygonOutline, RunLengthMask};
pub use scoring::{Ambiguity, AmbiguityLabel};
