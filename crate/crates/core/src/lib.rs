//! Deterministic synthesis of annotated document-understanding corpora:
//! translated page renderings, diacritic-controlled Arabic text crops,
//! HTML-grounded tables and charts with tabular annotations, plus the
//! metrics used to score models trained on them.

pub mod arabic;
pub mod canvas;
pub mod charts;
pub mod corpus;
pub mod evaluate;
pub mod fonts;
pub mod ingest;
pub mod layout;
pub mod metrics;
pub mod pipeline;
pub mod reflow;
pub mod render;
pub mod rng;
pub mod script;
pub mod tables;
pub mod translation;
