use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::One;
use serde::{Deserialize, Serialize};

use super::word::Word;
use crate::circuit::{BlockCircuit, BlockOp, CostModel, Register};
use crate::error::{Error, Result};
use crate::numtheory::{Modulus, Multiplier};

/// Longest trace any builder will produce before giving up.
pub const MAX_TRACE_MOVES: usize = 1 << 20;

/// One reduction step on the pair `(A, B)`. Declaration order is the
/// tie-breaking order of the lookahead search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Move {
    HalveA,
    HalveB,
    SubA,
    SubB,
    AddA,
    AddB,
}

impl Move {
    pub const ALL: [Move; 6] =
        [Move::HalveA, Move::HalveB, Move::SubA, Move::SubB, Move::AddA, Move::AddB];

    /// `A <- A - B` style moves applied to `(a, b)`, or `None` when the move
    /// is illegal: halving an odd value, a difference below 1, or a sum at
    /// or above `cap`.
    pub(crate) fn apply<W: Word>(self, a: &W, b: &W, cap: &W) -> Option<(W, W)> {
        match self {
            Move::HalveA => a.is_even_word().then(|| (a.half(), b.clone())),
            Move::HalveB => b.is_even_word().then(|| (a.clone(), b.half())),
            Move::SubA => (a > b).then(|| (a.minus(b), b.clone())),
            Move::SubB => (b > a).then(|| (a.clone(), b.minus(a))),
            Move::AddA => {
                let s = a.plus(b);
                (&s < cap).then_some((s, b.clone()))
            }
            Move::AddB => {
                let s = a.plus(b);
                (&s < cap).then_some((a.clone(), s))
            }
        }
    }

    /// Whether `self` immediately undoes `previous`.
    pub fn undoes(self, previous: Move) -> bool {
        matches!(
            (previous, self),
            (Move::AddA, Move::SubA)
                | (Move::SubA, Move::AddA)
                | (Move::AddB, Move::SubB)
                | (Move::SubB, Move::AddB)
        )
    }

    /// The block that replays this move backwards on the register pair.
    pub fn block(self) -> BlockOp {
        match self {
            Move::SubA => BlockOp::Add(Register::R1),
            Move::SubB => BlockOp::Add(Register::R2),
            Move::AddA => BlockOp::Sub(Register::R1),
            Move::AddB => BlockOp::Sub(Register::R2),
            Move::HalveA => BlockOp::Dbl(Register::R1),
            Move::HalveB => BlockOp::Dbl(Register::R2),
        }
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Move::HalveA => "HALVE_A",
            Move::HalveB => "HALVE_B",
            Move::SubA => "SUB_A",
            Move::SubB => "SUB_B",
            Move::AddA => "ADD_A",
            Move::AddB => "ADD_B",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TraceOrigin {
    EuclidSubtractive,
    Binary,
    Lookahead,
}

/// The pairs visited while reducing `(A, B)` to `(1, 1)`, and the moves
/// between them. `pairs.len() == moves.len() + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GcdTrace {
    pairs: Vec<(BigUint, BigUint)>,
    moves: Vec<Move>,
    origin: TraceOrigin,
}

impl GcdTrace {
    /// Replays `moves` from `(a, b)`, rejecting any illegal step. Sums are
    /// not capped here.
    pub fn from_moves(a: BigUint, b: BigUint, moves: Vec<Move>, origin: TraceOrigin) -> Result<Self> {
        let unbounded = (&a + &b) << (moves.len() + 1);
        let mut pairs = Vec::with_capacity(moves.len() + 1);
        pairs.push((a, b));
        for (i, mv) in moves.iter().enumerate() {
            let (a, b) = pairs.last().unwrap();
            let next = mv
                .apply(a, b, &unbounded)
                .ok_or_else(|| Error::InvalidTrace(format!("move {i} ({mv}) is illegal at ({a}, {b})")))?;
            pairs.push(next);
        }
        Ok(Self { pairs, moves, origin })
    }

    pub(crate) fn from_parts(pairs: Vec<(BigUint, BigUint)>, moves: Vec<Move>, origin: TraceOrigin) -> Self {
        debug_assert_eq!(pairs.len(), moves.len() + 1);
        Self { pairs, moves, origin }
    }

    pub fn pairs(&self) -> &[(BigUint, BigUint)] {
        &self.pairs
    }

    pub fn moves(&self) -> &[Move] {
        &self.moves
    }

    pub fn origin(&self) -> TraceOrigin {
        self.origin
    }

    pub fn start(&self) -> &(BigUint, BigUint) {
        &self.pairs[0]
    }

    pub fn end(&self) -> &(BigUint, BigUint) {
        self.pairs.last().unwrap()
    }

    /// Checks the structural invariants: ends at `(1, 1)`, every pair is
    /// coprime, and each step is one legal move.
    pub fn validate(&self) -> Result<()> {
        if self.pairs.len() != self.moves.len() + 1 {
            return Err(Error::InvalidTrace("pair and move counts disagree".into()));
        }
        let (a, b) = self.end();
        if !a.is_one() || !b.is_one() {
            return Err(Error::InvalidTrace(format!("trace ends at ({a}, {b})")));
        }
        let replay = GcdTrace::from_moves(
            self.pairs[0].0.clone(),
            self.pairs[0].1.clone(),
            self.moves.clone(),
            self.origin,
        )?;
        if replay.pairs != self.pairs {
            return Err(Error::InvalidTrace("pairs do not follow from moves".into()));
        }
        if let Some((a, b)) = self.pairs.iter().find(|(a, b)| !a.gcd(b).is_one()) {
            return Err(Error::InvalidTrace(format!("({a}, {b}) is not coprime")));
        }
        Ok(())
    }

    /// Toffoli cost of the blocks this trace turns into at width `n`.
    pub fn cost(&self, model: &CostModel, n: u32) -> Result<u64> {
        self.moves.iter().map(|m| model.toffoli(m.block().opcode(), n)).sum()
    }
}

fn check_coprime(a: &BigUint, b: &BigUint) -> Result<()> {
    if a.bits() == 0 || b.bits() == 0 {
        return Err(Error::InvalidTrace("trace values must be positive".into()));
    }
    if !a.gcd(b).is_one() {
        return Err(Error::NotCoprime(a.to_string(), b.to_string()));
    }
    Ok(())
}

/// Fits `(a, b)` and the cap into `u128` when a sum of two capped values
/// cannot overflow.
pub(crate) fn small_words(a: &BigUint, b: &BigUint, cap: &BigUint) -> Option<(u128, u128, u128)> {
    if cap.bits() >= 127 {
        return None;
    }
    Some((u128::from_big(a)?, u128::from_big(b)?, u128::from_big(cap)?))
}

pub(crate) fn to_trace<W: Word>(pairs: Vec<(W, W)>, moves: Vec<Move>, origin: TraceOrigin) -> GcdTrace {
    let pairs = pairs.into_iter().map(|(a, b)| (a.to_big(), b.to_big())).collect();
    GcdTrace::from_parts(pairs, moves, origin)
}

fn euclid_moves<W: Word>(mut a: W, mut b: W) -> Result<(Vec<(W, W)>, Vec<Move>)> {
    let mut pairs = vec![(a.clone(), b.clone())];
    let mut moves = Vec::new();
    while !(a.is_unit() && b.is_unit()) {
        if moves.len() >= MAX_TRACE_MOVES {
            return Err(Error::TraceTooLong(MAX_TRACE_MOVES));
        }
        if a > b {
            a = a.minus(&b);
            moves.push(Move::SubA);
        } else {
            b = b.minus(&a);
            moves.push(Move::SubB);
        }
        pairs.push((a.clone(), b.clone()));
    }
    Ok((pairs, moves))
}

/// Subtractive Euclid: the larger element is replaced by the difference
/// until `(1, 1)`.
pub fn euclid_trace(a: &BigUint, b: &BigUint) -> Result<GcdTrace> {
    check_coprime(a, b)?;
    let origin = TraceOrigin::EuclidSubtractive;
    match small_words(a, b, &(a + b)) {
        Some((x, y, _)) => euclid_moves(x, y).map(|(p, m)| to_trace(p, m, origin)),
        None => euclid_moves(a.clone(), b.clone()).map(|(p, m)| to_trace(p, m, origin)),
    }
}

/// The binary-GCD move taken from `(a, b)`: halve the even element, or
/// subtract the smaller odd element from the larger one.
pub(crate) fn binary_step<W: Word>(a: &W, b: &W) -> Move {
    if a.is_even_word() {
        Move::HalveA
    } else if b.is_even_word() {
        Move::HalveB
    } else if a < b {
        Move::SubB
    } else {
        Move::SubA
    }
}

pub(crate) fn binary_moves<W: Word>(a: W, b: W) -> (Vec<(W, W)>, Vec<Move>) {
    let mut pairs = vec![(a, b)];
    let mut moves = Vec::new();
    loop {
        let (a, b) = pairs.last().unwrap();
        if a.is_unit() && b.is_unit() {
            break;
        }
        let mv = binary_step(a, b);
        let next = match mv {
            Move::HalveA => (a.half(), b.clone()),
            Move::HalveB => (a.clone(), b.half()),
            Move::SubA => (a.minus(b), b.clone()),
            _ => (a.clone(), b.minus(a)),
        };
        moves.push(mv);
        pairs.push(next);
    }
    (pairs, moves)
}

/// Cost of finishing from `(a, b)` with plain binary GCD, given the price
/// of one halving and one subtraction.
pub(crate) fn binary_completion_cost<W: Word>(a: &W, b: &W, halve: u64, subtract: u64) -> u64 {
    let (mut a, mut b) = (a.clone(), b.clone());
    let mut cost = 0;
    loop {
        cost += (a.strip_twos() + b.strip_twos()) * halve;
        match a.cmp(&b) {
            std::cmp::Ordering::Equal => return cost,
            std::cmp::Ordering::Less => b.sub_assign_word(&a),
            std::cmp::Ordering::Greater => a.sub_assign_word(&b),
        }
        cost += subtract;
    }
}

/// Binary GCD: halve whichever element is even; with both odd, replace the
/// larger by the difference. Stops at `(1, 1)`.
pub fn binary_gcd_trace(a: &BigUint, b: &BigUint) -> Result<GcdTrace> {
    check_coprime(a, b)?;
    let origin = TraceOrigin::Binary;
    Ok(match small_words(a, b, &(a + b)) {
        Some((x, y, _)) => {
            let (p, m) = binary_moves(x, y);
            to_trace(p, m, origin)
        }
        None => {
            let (p, m) = binary_moves(a.clone(), b.clone());
            to_trace(p, m, origin)
        }
    })
}

/// Reads a circuit off a trace that starts at `(M, C)`: FANOUT builds
/// `(x, x)` for the final `(1, 1)`, then the moves replay backwards as
/// blocks, keeping register `i` at `(trace value)·x mod M`. The `M` side
/// ends at zero and `C·x` lands in R2.
pub fn trace_to_circuit(trace: &GcdTrace, modulus: &Modulus) -> Result<BlockCircuit> {
    let (a, b) = trace.start();
    if trace.moves().is_empty() && a.is_one() && b.is_one() {
        return Ok(BlockCircuit::identity(modulus.clone()));
    }
    if a != modulus.value() {
        return Err(Error::InvalidTrace(format!("trace starts at ({a}, {b}), not at M = {modulus}")));
    }
    let (end_a, end_b) = trace.end();
    if !end_a.is_one() || !end_b.is_one() {
        return Err(Error::InvalidTrace(format!("trace ends at ({end_a}, {end_b})")));
    }
    let multiplier = Multiplier::new(b.clone(), modulus)?;
    let mut ops = Vec::with_capacity(trace.moves().len() + 1);
    ops.push(BlockOp::Fanout);
    ops.extend(trace.moves().iter().rev().map(|m| m.block()));
    BlockCircuit::new(modulus.clone(), multiplier, ops, Register::R2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    fn pairs(trace: &GcdTrace) -> Vec<(u64, u64)> {
        use num_traits::ToPrimitive;
        trace.pairs().iter().map(|(a, b)| (a.to_u64().unwrap(), b.to_u64().unwrap())).collect()
    }

    #[test]
    fn euclid_fibonacci() {
        let t = euclid_trace(&big(21), &big(13)).unwrap();
        assert_eq!(pairs(&t), vec![(21, 13), (8, 13), (8, 5), (3, 5), (3, 2), (1, 2), (1, 1)]);
        assert_eq!(t.origin(), TraceOrigin::EuclidSubtractive);
        t.validate().unwrap();
    }

    #[test]
    fn euclid_trivial_and_long_tail() {
        let t = euclid_trace(&big(1), &big(1)).unwrap();
        assert!(t.moves().is_empty());
        let t = euclid_trace(&big(21), &big(11)).unwrap();
        let p = pairs(&t);
        let tail = &p[p.len() - 10..];
        let expected: Vec<(u64, u64)> = (1..=10).rev().map(|a| (a, 1)).collect();
        assert_eq!(tail, expected.as_slice());
        assert!(t.moves()[t.moves().len() - 9..].iter().all(|m| *m == Move::SubA));
    }

    #[test]
    fn euclid_rejects_common_factor() {
        assert!(matches!(euclid_trace(&big(21), &big(14)), Err(Error::NotCoprime(..))));
    }

    #[test]
    fn binary_gcd_example() {
        let t = binary_gcd_trace(&big(21), &big(11)).unwrap();
        assert_eq!(
            pairs(&t),
            vec![(21, 11), (10, 11), (5, 11), (5, 6), (5, 3), (2, 3), (1, 3), (1, 2), (1, 1)]
        );
        let t = binary_gcd_trace(&big(1), &big(2)).unwrap();
        assert_eq!(pairs(&t), vec![(1, 2), (1, 1)]);
        let t = binary_gcd_trace(&big(21), &big(13)).unwrap();
        assert!(t.moves().len() <= 2 * (5 + 4));
        t.validate().unwrap();
    }

    #[test]
    fn completion_cost_matches_trace() {
        let model = CostModel::default();
        for (a, b) in [(21u64, 11u64), (1017, 7), (49447, 1234), (3, 1), (1, 1)] {
            let t = binary_gcd_trace(&big(a), &big(b)).unwrap();
            let expected = t.cost(&model, 10).unwrap();
            let got = binary_completion_cost(&(a as u128), &(b as u128), 32, 30);
            assert_eq!(got, expected, "({a}, {b})");
            assert_eq!(binary_completion_cost(&big(a), &big(b), 32, 30), expected);
        }
    }

    #[test]
    fn euclid_circuit_for_thirteen() {
        let m = Modulus::from_u64(21).unwrap();
        let c = trace_to_circuit(&euclid_trace(&big(21), &big(13)).unwrap(), &m).unwrap();
        assert_eq!(c.result_register(), Register::R2);
        assert_eq!(c.ops().len(), 7);
        assert_eq!(c.ops()[0], BlockOp::Fanout);
        for (i, op) in c.ops()[1..].iter().enumerate() {
            let target = if i % 2 == 0 { Register::R2 } else { Register::R1 };
            assert_eq!(*op, BlockOp::Add(target));
        }
    }

    #[test]
    fn trivial_trace_is_identity() {
        let m = Modulus::from_u64(21).unwrap();
        let t = euclid_trace(&big(1), &big(1)).unwrap();
        let c = trace_to_circuit(&t, &m).unwrap();
        assert!(c.ops().is_empty());
    }

    #[test]
    fn trace_must_start_at_modulus() {
        let m = Modulus::from_u64(21).unwrap();
        let t = euclid_trace(&big(13), &big(21)).unwrap();
        assert!(matches!(trace_to_circuit(&t, &m), Err(Error::InvalidTrace(_))));
    }

    #[test]
    fn from_moves_rejects_illegal_step() {
        assert!(GcdTrace::from_moves(big(5), big(3), vec![Move::HalveA], TraceOrigin::Lookahead).is_err());
        assert!(GcdTrace::from_moves(big(3), big(5), vec![Move::SubA], TraceOrigin::Lookahead).is_err());
    }

    #[test]
    fn undo_pairs() {
        assert!(Move::SubA.undoes(Move::AddA));
        assert!(Move::AddB.undoes(Move::SubB));
        assert!(!Move::AddB.undoes(Move::SubA));
        assert!(!Move::HalveA.undoes(Move::AddA));
    }
}
