//! Independent learners in finite discounted symmetric stochastic games.
//!
//! The crate covers the game model ([`game`]), quantized policy spaces
//! ([`policy`]), exact dynamic programming and equilibrium checks
//! ([`solver`]), ε-revision paths ([`revision`]), the per-agent learning
//! rules ([`learner`]) and multi-trial experiments ([`experiment`]), with a
//! command line in [`cli`].

pub mod cli;
pub mod config;
pub mod experiment;
pub mod game;
pub mod games;
pub mod learner;
pub mod policy;
pub mod report;
pub mod revision;
pub mod seeding;
pub mod solver;
