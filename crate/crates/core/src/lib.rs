//! Block-level reversible circuits for constant modular multiplication
//! `x -> C·x mod M` and for the modular exponentiation that chains them.
//!
//! Circuits are read off the execution traces of GCD-style reductions of
//! `(M, C)`: every reduction step, reversed, becomes a modular addition,
//! subtraction or doubling between two registers. The crate also carries
//! a binary-expansion baseline, an exact least-cost search for small
//! moduli, a block-semantics simulator used as the correctness oracle, and
//! a sweep harness for comparing the methods.

pub mod bench;
pub mod circuit;
pub mod error;
pub mod modexp;
pub mod numtheory;
pub mod optimal;
pub mod simulator;
pub mod synthesis;

pub use circuit::{
    circuit_cost, circuit_depth, op_cost, AdderRegime, Affine, BlockCircuit, BlockOp,
    CostModel, DepthFormula, DepthModel, ModelFile, Opcode, Register,
};
pub use error::{Error, Result};
pub use numtheory::{Modulus, Multiplier, SpecialForm, SpecialKind};
pub use simulator::{run_circuit, verify, MachineState, VerifyMode, VerifyReport};
pub use synthesis::{synthesize, GcdTrace, Move, SynthesisConfig, TraceOrigin};
