//! Core library for a multi-modal content moderation pipeline.
//!
//! The pipeline covers three tasks over Arabic-style text and memes:
//!
//! 1. hope / hate / not_applicable classification of short texts, via a
//!    three-voter ensemble with a hope-rescue stage,
//! 2. a multi-task cascade (emotion, offensive, and — only for offensive
//!    texts — hate/not_hate),
//! 3. hateful-meme detection from fused text/image embeddings (RBF-SVM or
//!    a dual-branch MLP) or from remote predictors behind a record/replay
//!    gateway.
//!
//! Modules map one-to-one onto the pipeline stages: [`corpus`] for dataset
//! ingestion and rebalancing, [`embeddings`] for provider-backed 512-dim
//! vectors with a content-addressed cache, [`fusion`] for modality
//! combination, [`svm`] and [`mlp`] for the trained classifiers,
//! [`gateway`] for prompt templates and remote predictors, [`pipeline`]
//! for task orchestration, and [`metrics`] for macro-averaged evaluation.

pub mod corpus;
pub mod embeddings;
pub mod fusion;
pub mod gateway;
pub mod metrics;
pub mod mlp;
pub mod par;
pub mod pipeline;
pub mod svm;
