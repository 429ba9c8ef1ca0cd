//! Line-oriented text format:
//!
//! ```text
//! MODULUS 21
//! MULTIPLIER 13
//! WIDTH 5
//! RESULT R2
//! FANOUT
//! ADD R2 R1
//! END
//! ```
//!
//! `#` starts a comment. Body lines are `FANOUT`, `ADD Ra Rb`, `SUB Ra Rb`,
//! `DBL Ra`, `HLV Ra`, `NEG Ra` and `CSWAP_LAYER`.

use std::fmt::Write;

use num_bigint::BigUint;

use super::{BlockCircuit, BlockOp, Register};
use crate::error::{Error, Result};
use crate::numtheory::{Modulus, Multiplier};

pub fn serialize(circuit: &BlockCircuit) -> String {
    let mut out = String::new();
    writeln!(out, "MODULUS {}", circuit.modulus()).unwrap();
    writeln!(out, "MULTIPLIER {}", circuit.multiplier()).unwrap();
    writeln!(out, "WIDTH {}", circuit.width()).unwrap();
    writeln!(out, "RESULT {}", circuit.result_register()).unwrap();
    for op in circuit.ops() {
        writeln!(out, "{op}").unwrap();
    }
    out.push_str("END\n");
    out
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn register(token: &str, line: usize) -> Result<Register> {
    match token {
        "R1" => Ok(Register::R1),
        "R2" => Ok(Register::R2),
        other => Err(parse_error(line, format!("unknown register {other:?}"))),
    }
}

fn header<'a>(
    lines: &mut impl Iterator<Item = (usize, Vec<&'a str>)>,
    key: &str,
    last_line: usize,
) -> Result<(usize, &'a str)> {
    match lines.next() {
        Some((line, tokens)) if tokens[0] == key => match tokens.as_slice() {
            [_, value] => Ok((line, *value)),
            _ => Err(parse_error(line, format!("{key} takes exactly one value"))),
        },
        Some((line, tokens)) => Err(parse_error(line, format!("expected {key}, found {}", tokens[0]))),
        None => Err(parse_error(last_line, format!("missing {key}"))),
    }
}

fn number(value: &str, line: usize) -> Result<BigUint> {
    value.parse().map_err(|_| parse_error(line, format!("invalid number {value:?}")))
}

fn body_op(tokens: &[&str], line: usize) -> Result<BlockOp> {
    let binary = |make: fn(Register) -> BlockOp, target: &str, source: &str| -> Result<BlockOp> {
        let (t, s) = (register(target, line)?, register(source, line)?);
        if t == s {
            return Err(Error::InvariantViolation(format!(
                "line {line}: target and source are both {t}"
            )));
        }
        Ok(make(t))
    };
    match tokens {
        ["FANOUT"] => Ok(BlockOp::Fanout),
        ["CSWAP_LAYER"] => Ok(BlockOp::CswapLayer),
        ["ADD", t, s] => binary(BlockOp::Add, t, s),
        ["SUB", t, s] => binary(BlockOp::Sub, t, s),
        ["DBL", r] => Ok(BlockOp::Dbl(register(r, line)?)),
        ["HLV", r] => Ok(BlockOp::Hlv(register(r, line)?)),
        ["NEG", r] => Ok(BlockOp::Neg(register(r, line)?)),
        _ => Err(parse_error(line, format!("unrecognized op {:?}", tokens.join(" ")))),
    }
}

pub fn parse(text: &str) -> Result<BlockCircuit> {
    let all: Vec<(usize, Vec<&str>)> = text
        .lines()
        .enumerate()
        .map(|(i, raw)| (i + 1, raw.split('#').next().unwrap_or("").split_whitespace().collect()))
        .filter(|(_, tokens): &(usize, Vec<&str>)| !tokens.is_empty())
        .collect();
    let last_line = text.lines().count().max(1);
    let mut lines = all.into_iter();

    let (line, value) = header(&mut lines, "MODULUS", last_line)?;
    let modulus = Modulus::new(number(value, line)?)
        .map_err(|e| Error::InvariantViolation(format!("line {line}: {e}")))?;
    let (line, value) = header(&mut lines, "MULTIPLIER", last_line)?;
    let multiplier = Multiplier::new(number(value, line)?, &modulus)
        .map_err(|e| Error::InvariantViolation(format!("line {line}: {e}")))?;
    let (line, value) = header(&mut lines, "WIDTH", last_line)?;
    let width: u32 = value.parse().map_err(|_| parse_error(line, format!("invalid width {value:?}")))?;
    if width != modulus.bits() {
        return Err(Error::InvariantViolation(format!(
            "line {line}: width {width} does not match the {}-bit modulus",
            modulus.bits()
        )));
    }
    let (line, value) = header(&mut lines, "RESULT", last_line)?;
    let result = register(value, line)?;

    let mut ops = Vec::new();
    let mut ended = false;
    for (line, tokens) in lines.by_ref() {
        if tokens == ["END"] {
            ended = true;
            break;
        }
        ops.push(body_op(&tokens, line)?);
    }
    if !ended {
        return Err(parse_error(last_line, "missing END"));
    }
    if let Some((line, _)) = lines.next() {
        return Err(parse_error(line, "content after END"));
    }
    BlockCircuit::new(modulus, multiplier, ops, result)
}
