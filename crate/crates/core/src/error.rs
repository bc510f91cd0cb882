// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetlistError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown gate kind `{0}`")]
    UnknownKind(String),
    #[error("combinational cycle through `{0}`")]
    Cycle(String),
    #[error("undriven signal `{0}`")]
    Undriven(String),
    #[error("signal `{0}` defined twice")]
    Duplicate(String),
    #[error("wrong input count on `{0}`")]
    Arity(String),
    #[error("invalid delay on `{0}`")]
    BadDelay(String),
    #[error("unknown flip-flop `{0}`")]
    UnknownFf(String),
    #[error("delay document: {0}")]
    Delays(String),
    #[error("placement line {line}: {msg}")]
    Placement { line: usize, msg: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("config parse: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MilpError {
    #[error("model references undeclared variable {0}")]
    UnknownVar(usize),
    #[error("objective is unbounded")]
    Unbounded,
    #[error("big-M constant {m} does not dominate violation {need}")]
    WeakBigM { m: f64, need: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RetimingError {
    #[error("net {0} gets negative retimed weight")]
    Negative(String),
    #[error("lag on port is not zero")]
    PortLag,
    #[error("flip-flop loop without logic")]
    FfLoop,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FalsePathError {
    #[error("path crosses flip-flop `{0}`")]
    Sequential(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("netlists differ in ports: {0}")]
    Signature(String),
    #[error("input vector {cycle} has {got} bits, expected {want}")]
    Width { cycle: usize, got: usize, want: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DuplicationError {
    #[error("no relevant path pairs")]
    NoPairs,
    #[error("gate `{0}` lies on both sides of a root")]
    Overlap(String),
    #[error("plan exceeds {0} copied gates")]
    TooLarge(usize),
    #[error("retiming: {0}")]
    Retiming(String),
    #[error(transparent)]
    Milp(#[from] MilpError),
}
