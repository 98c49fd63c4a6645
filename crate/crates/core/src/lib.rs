//! Extraction of wind energy siting ordinances from legal documents.
//!
//! The pipeline converts ordinance documents to text ([`ingest`]), distills
//! them down to wind-relevant passages ([`distill`]), then walks a
//! per-feature decision tree of prompts ([`tree`], [`ordinance`]) against a
//! chat-completion backend ([`gateway`]). [`eval`] scores the resulting
//! records against ground truth.

pub mod cli;
pub mod distill;
pub mod eval;
pub mod gateway;
pub mod ingest;
pub mod ordinance;
mod par;
pub mod text;
pub mod tree;
