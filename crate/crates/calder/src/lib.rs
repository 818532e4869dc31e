//! Calder: a dataflow compiler and heterogeneous execution toolkit.
//!
//! The pipeline: parse a CAL-style actor language into a [`graph::NetworkGraph`],
//! lower each actor to a knowledge-tracking controller ([`am::ActorMachine`]),
//! then execute the network on a multi-threaded software runtime
//! ([`runtime`]), on a cycle-counting accelerator simulator ([`hwsim`]), or on
//! both at once bridged by a boundary actor ([`plink`]). Profiling
//! ([`profile`]) feeds a MILP partitioning model ([`milp`]) for automatic
//! hardware/software design-space exploration, and [`codegen`] emits the
//! hardware controller sources as text artifacts.

pub mod am;
pub mod ast;
pub mod bundle;
pub mod codegen;
pub mod diag;
pub mod eval;
pub mod graph;
pub mod hwsim;
pub mod lexer;
pub mod milp;
pub mod parser;
pub mod plink;
pub mod profile;
pub mod reference;
pub mod ring;
pub mod runtime;
pub mod testutil;
pub mod xcf;
