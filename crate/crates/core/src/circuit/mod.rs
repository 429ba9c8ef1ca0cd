//! Two-register block-level circuit IR.
//!
//! A circuit is an ordered list of whole-register modular operations on the
//! pair `(R1, R2)`. Gate-level structure lives only in the cost and depth
//! models.

mod model;
mod text;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numtheory::{Modulus, Multiplier};

pub use model::{
    ceil_log2, circuit_cost, circuit_depth, op_cost, AdderRegime, Affine, CostModel,
    DepthFormula, DepthModel, GateCount, ModelFile,
};
pub use text::{parse, serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Register {
    R1,
    R2,
}

impl Register {
    pub fn other(self) -> Register {
        match self {
            Register::R1 => Register::R2,
            Register::R2 => Register::R1,
        }
    }
}

impl fmt::Display for Register {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Register::R1 => "R1",
            Register::R2 => "R2",
        })
    }
}

/// Opcode names, used as keys of the cost and depth tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Opcode {
    Fanout,
    Add,
    Sub,
    Dbl,
    Hlv,
    Neg,
    CswapLayer,
}

impl Opcode {
    pub const ALL: [Opcode; 7] = [
        Opcode::Fanout,
        Opcode::Add,
        Opcode::Sub,
        Opcode::Dbl,
        Opcode::Hlv,
        Opcode::Neg,
        Opcode::CswapLayer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Opcode::Fanout => "FANOUT",
            Opcode::Add => "ADD",
            Opcode::Sub => "SUB",
            Opcode::Dbl => "DBL",
            Opcode::Hlv => "HLV",
            Opcode::Neg => "NEG",
            Opcode::CswapLayer => "CSWAP_LAYER",
        }
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One block on the two-register datapath. `Add(t)` and `Sub(t)` write
/// register `t` and read the other one, so target and source always differ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BlockOp {
    /// CNOT copy of R1 onto a zeroed R2.
    Fanout,
    Add(Register),
    Sub(Register),
    Dbl(Register),
    Hlv(Register),
    Neg(Register),
    /// Conditional-swap wrapper used by exponentiation assemblies.
    CswapLayer,
}

impl BlockOp {
    pub fn opcode(&self) -> Opcode {
        match self {
            BlockOp::Fanout => Opcode::Fanout,
            BlockOp::Add(_) => Opcode::Add,
            BlockOp::Sub(_) => Opcode::Sub,
            BlockOp::Dbl(_) => Opcode::Dbl,
            BlockOp::Hlv(_) => Opcode::Hlv,
            BlockOp::Neg(_) => Opcode::Neg,
            BlockOp::CswapLayer => Opcode::CswapLayer,
        }
    }

    /// The block undoing this one on `(Z_M)^2`. FANOUT and CSWAP_LAYER are
    /// their own inverses.
    pub fn inverse(&self) -> BlockOp {
        match *self {
            BlockOp::Add(r) => BlockOp::Sub(r),
            BlockOp::Sub(r) => BlockOp::Add(r),
            BlockOp::Dbl(r) => BlockOp::Hlv(r),
            BlockOp::Hlv(r) => BlockOp::Dbl(r),
            other => other,
        }
    }

    pub fn is_arithmetic(&self) -> bool {
        !matches!(self, BlockOp::Fanout | BlockOp::CswapLayer)
    }
}

impl fmt::Display for BlockOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            BlockOp::Fanout => f.write_str("FANOUT"),
            BlockOp::CswapLayer => f.write_str("CSWAP_LAYER"),
            BlockOp::Add(t) => write!(f, "ADD {} {}", t, t.other()),
            BlockOp::Sub(t) => write!(f, "SUB {} {}", t, t.other()),
            BlockOp::Dbl(r) => write!(f, "DBL {r}"),
            BlockOp::Hlv(r) => write!(f, "HLV {r}"),
            BlockOp::Neg(r) => write!(f, "NEG {r}"),
        }
    }
}

/// A synthesized multiplication circuit. Applied to `(x, 0)` it must leave
/// `C·x mod M` in `result` and zero in the other register; the simulator
/// checks that, construction does not.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockCircuit {
    modulus: Modulus,
    multiplier: Multiplier,
    ops: Vec<BlockOp>,
    result: Register,
}

impl BlockCircuit {
    pub fn new(
        modulus: Modulus,
        multiplier: Multiplier,
        ops: Vec<BlockOp>,
        result: Register,
    ) -> Result<Self> {
        validate_ops(&ops)?;
        Ok(Self { modulus, multiplier, ops, result })
    }

    /// The identity circuit for `C = 1`.
    pub fn identity(modulus: Modulus) -> Self {
        let one = Multiplier::from_u64(1, &modulus).expect("1 is coprime to any modulus");
        Self { modulus, multiplier: one, ops: Vec::new(), result: Register::R1 }
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn multiplier(&self) -> &Multiplier {
        &self.multiplier
    }

    pub fn width(&self) -> u32 {
        self.modulus.bits()
    }

    pub fn ops(&self) -> &[BlockOp] {
        &self.ops
    }

    pub fn result_register(&self) -> Register {
        self.result
    }

    /// Number of blocks other than FANOUT and CSWAP_LAYER.
    pub fn arithmetic_ops(&self) -> usize {
        self.ops.iter().filter(|op| op.is_arithmetic()).count()
    }

    /// The same circuit between two CSWAP_LAYER wrappers, as it sits inside
    /// an exponentiation.
    pub fn conditional(&self) -> BlockCircuit {
        let mut ops = Vec::with_capacity(self.ops.len() + 2);
        ops.push(BlockOp::CswapLayer);
        ops.extend_from_slice(&self.ops);
        ops.push(BlockOp::CswapLayer);
        BlockCircuit { ops, ..self.clone() }
    }

    /// Replaces the op list, re-checking structural invariants.
    pub fn with_ops(&self, ops: Vec<BlockOp>) -> Result<BlockCircuit> {
        BlockCircuit::new(self.modulus.clone(), self.multiplier.clone(), ops, self.result)
    }
}

/// Structural rules: CSWAP_LAYER only as an outer wrapper (first and/or last
/// op), FANOUT at most once and first among the wrapped ops.
fn validate_ops(ops: &[BlockOp]) -> Result<()> {
    let mut body = ops;
    if let [BlockOp::CswapLayer, rest @ ..] = body {
        body = rest;
    }
    if let [rest @ .., BlockOp::CswapLayer] = body {
        body = rest;
    }
    for (i, op) in body.iter().enumerate() {
        match op {
            BlockOp::CswapLayer => {
                return Err(Error::InvariantViolation(
                    "CSWAP_LAYER is only allowed as an outer wrapper".into(),
                ))
            }
            BlockOp::Fanout if i != 0 => {
                return Err(Error::InvariantViolation("FANOUT must be the first op".into()))
            }
            _ => {}
        }
    }
    Ok(())
}
