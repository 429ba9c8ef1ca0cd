//! Block-semantics simulator and verification oracle.
//!
//! Every arithmetic block is a bijection on `(Z_M)^2`, so a circuit is a
//! permutation of register states and can be checked input by input.

use std::collections::HashSet;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::circuit::{BlockCircuit, BlockOp, Register};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MachineState {
    pub r1: BigUint,
    pub r2: BigUint,
    pub modulus: BigUint,
}

impl MachineState {
    pub fn new(r1: BigUint, r2: BigUint, modulus: BigUint) -> Self {
        debug_assert!(r1 < modulus && r2 < modulus);
        Self { r1, r2, modulus }
    }

    pub fn get(&self, r: Register) -> &BigUint {
        match r {
            Register::R1 => &self.r1,
            Register::R2 => &self.r2,
        }
    }

    fn get_mut(&mut self, r: Register) -> &mut BigUint {
        match r {
            Register::R1 => &mut self.r1,
            Register::R2 => &mut self.r2,
        }
    }
}

fn half_mod(a: &BigUint, m: &BigUint) -> BigUint {
    if a.bit(0) {
        (a + m) >> 1
    } else {
        a >> 1
    }
}

pub fn apply_op(state: &MachineState, op: &BlockOp) -> Result<MachineState> {
    let mut next = state.clone();
    let m = &state.modulus;
    match *op {
        BlockOp::Fanout => {
            if !state.r2.is_zero() {
                return Err(Error::FanoutOnNonzero);
            }
            next.r2 = state.r1.clone();
        }
        // block-level model of an active wrapper pair: no data change
        BlockOp::CswapLayer => {}
        BlockOp::Add(t) => {
            let sum = state.get(t) + state.get(t.other());
            *next.get_mut(t) = if &sum >= m { sum - m } else { sum };
        }
        BlockOp::Sub(t) => {
            let (a, b) = (state.get(t), state.get(t.other()));
            *next.get_mut(t) = if a >= b { a - b } else { a + m - b };
        }
        BlockOp::Dbl(r) => {
            let d = state.get(r) << 1;
            *next.get_mut(r) = if &d >= m { d - m } else { d };
        }
        BlockOp::Hlv(r) => *next.get_mut(r) = half_mod(state.get(r), m),
        BlockOp::Neg(r) => {
            let a = state.get(r);
            *next.get_mut(r) = if a.is_zero() { BigUint::zero() } else { m - a };
        }
    }
    Ok(next)
}

/// Runs the circuit on `(x, 0)`.
pub fn run_circuit(circuit: &BlockCircuit, x: &BigUint) -> Result<MachineState> {
    let m = circuit.modulus().value().clone();
    let mut state = MachineState::new(x % &m, BigUint::zero(), m);
    for op in circuit.ops() {
        state = apply_op(&state, op)?;
    }
    Ok(state)
}

/// Like [`run_circuit`], returning the initial state and the state after
/// every op.
pub fn run_circuit_states(circuit: &BlockCircuit, x: &BigUint) -> Result<Vec<MachineState>> {
    let m = circuit.modulus().value().clone();
    let mut states = vec![MachineState::new(x % &m, BigUint::zero(), m)];
    for op in circuit.ops() {
        let next = apply_op(states.last().unwrap(), op)?;
        states.push(next);
    }
    Ok(states)
}

/// Word-sized simulation for moduli below 2^63.
fn run_small(ops: &[BlockOp], m: u64, x: u64) -> Result<(u64, u64)> {
    let mut regs = [x, 0u64];
    let idx = |r: Register| match r {
        Register::R1 => 0,
        Register::R2 => 1,
    };
    for op in ops {
        match *op {
            BlockOp::Fanout => {
                if regs[1] != 0 {
                    return Err(Error::FanoutOnNonzero);
                }
                regs[1] = regs[0];
            }
            BlockOp::CswapLayer => {}
            BlockOp::Add(t) => {
                let (a, b) = (regs[idx(t)], regs[idx(t.other())]);
                let s = a + b;
                regs[idx(t)] = if s >= m { s - m } else { s };
            }
            BlockOp::Sub(t) => {
                let (a, b) = (regs[idx(t)], regs[idx(t.other())]);
                regs[idx(t)] = if a >= b { a - b } else { a + m - b };
            }
            BlockOp::Dbl(r) => {
                let d = regs[idx(r)] << 1;
                regs[idx(r)] = if d >= m { d - m } else { d };
            }
            BlockOp::Hlv(r) => {
                let a = regs[idx(r)];
                regs[idx(r)] = if a & 1 == 1 { (a >> 1) + (m >> 1) + 1 } else { a >> 1 };
            }
            BlockOp::Neg(r) => {
                let a = regs[idx(r)];
                regs[idx(r)] = if a == 0 { 0 } else { m - a };
            }
        }
    }
    Ok((regs[0], regs[1]))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerifyMode {
    /// Every `x` in `[0, M)`; requires `M <= 2^20`.
    Exhaustive,
    /// `count` draws from a 64-bit LCG seeded with `seed`; repeated draws
    /// are tested once.
    Sampled { count: usize, seed: u64 },
}

pub const EXHAUSTIVE_LIMIT_BITS: u32 = 20;

/// Knuth's MMIX linear congruential generator.
#[derive(Clone, Debug)]
pub struct Lcg(u64);

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        self.0
    }

    /// Uniform-ish draw from `[0, bound)` by reducing a wide random value.
    pub fn below(&mut self, bound: &BigUint) -> BigUint {
        let words = bound.bits() / 64 + 2;
        let digits: Vec<u64> = (0..words).map(|_| self.next_u64()).collect();
        BigUint::from_slice(
            &digits.iter().flat_map(|w| [*w as u32, (*w >> 32) as u32]).collect::<Vec<_>>(),
        ) % bound
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum FailureKind {
    Mismatch { result: String, other: String },
    NotInjective,
    Error(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerifyFailure {
    pub x: String,
    pub kind: FailureKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub modulus: String,
    pub multiplier: String,
    pub mode: String,
    pub seed: Option<u64>,
    pub tested: usize,
    pub passed: usize,
    pub failure_count: usize,
    /// The first few failures; `failure_count` has the total.
    pub failures: Vec<VerifyFailure>,
}

const KEPT_FAILURES: usize = 16;

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.failure_count == 0
    }

    fn record(&mut self, x: &BigUint, kind: FailureKind) {
        self.failure_count += 1;
        if self.failures.len() < KEPT_FAILURES {
            self.failures.push(VerifyFailure { x: x.to_string(), kind });
        }
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<12} {}", "modulus", self.modulus)?;
        writeln!(f, "{:<12} {}", "multiplier", self.multiplier)?;
        writeln!(f, "{:<12} {}", "mode", self.mode)?;
        if let Some(seed) = self.seed {
            writeln!(f, "{:<12} {}", "seed", seed)?;
        }
        writeln!(f, "{:<12} {}", "tested", self.tested)?;
        writeln!(f, "{:<12} {}", "passed", self.passed)?;
        writeln!(f, "{:<12} {}", "failed", self.failure_count)?;
        for failure in &self.failures {
            match &failure.kind {
                FailureKind::Mismatch { result, other } => writeln!(
                    f,
                    "  x={:<10} result={} other={}",
                    failure.x, result, other
                )?,
                FailureKind::NotInjective => writeln!(f, "  x={:<10} collides", failure.x)?,
                FailureKind::Error(e) => writeln!(f, "  x={:<10} error: {}", failure.x, e)?,
            }
        }
        write!(f, "{}", if self.ok() { "PASS" } else { "FAIL" })
    }
}

/// Checks `result = C·x mod M` and `other = 0` for each tested `x`, plus
/// injectivity of the final states over the tested inputs.
pub fn verify(circuit: &BlockCircuit, mode: VerifyMode) -> Result<VerifyReport> {
    let m = circuit.modulus().value();
    let c = circuit.multiplier().value();
    let inputs: Box<dyn Iterator<Item = BigUint>> = match mode {
        VerifyMode::Exhaustive => {
            if circuit.modulus().bits() > EXHAUSTIVE_LIMIT_BITS {
                return Err(Error::Config(format!(
                    "exhaustive verification is limited to {EXHAUSTIVE_LIMIT_BITS}-bit moduli"
                )));
            }
            let limit = m.to_u64().expect("checked width");
            Box::new((0..limit).map(BigUint::from))
        }
        VerifyMode::Sampled { count, seed } => {
            let mut rng = Lcg::new(seed);
            let bound = m.clone();
            Box::new((0..count).map(move |_| rng.below(&bound)))
        }
    };
    let mut report = VerifyReport {
        modulus: m.to_string(),
        multiplier: c.to_string(),
        mode: match mode {
            VerifyMode::Exhaustive => "exhaustive".into(),
            VerifyMode::Sampled { count, .. } => format!("sampled({count})"),
        },
        seed: match mode {
            VerifyMode::Exhaustive => None,
            VerifyMode::Sampled { seed, .. } => Some(seed),
        },
        tested: 0,
        passed: 0,
        failure_count: 0,
        failures: Vec::new(),
    };
    let result_reg = circuit.result_register();
    let small = m.to_u64().filter(|&v| v < 1 << 62);

    if let Some(mw) = small {
        let cw = c.to_u64().unwrap();
        let mut seen: HashSet<(u64, u64)> = HashSet::new();
        let mut inputs_seen: HashSet<u64> = HashSet::new();
        for x in inputs {
            let xw = x.to_u64().unwrap();
            if !inputs_seen.insert(xw) {
                continue;
            }
            report.tested += 1;
            match run_small(circuit.ops(), mw, xw) {
                Ok((r1, r2)) => {
                    let (res, other) = if result_reg == Register::R1 { (r1, r2) } else { (r2, r1) };
                    let expected = ((cw as u128 * xw as u128) % mw as u128) as u64;
                    if !seen.insert((r1, r2)) {
                        report.record(&x, FailureKind::NotInjective);
                    } else if res != expected || other != 0 {
                        report.record(
                            &x,
                            FailureKind::Mismatch { result: res.to_string(), other: other.to_string() },
                        );
                    } else {
                        report.passed += 1;
                    }
                }
                Err(e) => report.record(&x, FailureKind::Error(e.to_string())),
            }
        }
    } else {
        let mut seen: HashSet<(BigUint, BigUint)> = HashSet::new();
        let mut inputs_seen: HashSet<BigUint> = HashSet::new();
        for x in inputs {
            if !inputs_seen.insert(x.clone()) {
                continue;
            }
            report.tested += 1;
            match run_circuit(circuit, &x) {
                Ok(state) => {
                    let res = state.get(result_reg).clone();
                    let other = state.get(result_reg.other()).clone();
                    let expected = (c * &x) % m;
                    if !seen.insert((state.r1, state.r2)) {
                        report.record(&x, FailureKind::NotInjective);
                    } else if res != expected || !other.is_zero() {
                        report.record(
                            &x,
                            FailureKind::Mismatch { result: res.to_string(), other: other.to_string() },
                        );
                    } else {
                        report.passed += 1;
                    }
                }
                Err(e) => report.record(&x, FailureKind::Error(e.to_string())),
            }
        }
    }
    Ok(report)
}
