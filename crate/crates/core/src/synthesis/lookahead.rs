//! Lookahead reduction: at each step, score every irredundant move sequence
//! of the configured depth by its own block cost plus the cost of finishing
//! with plain binary GCD, then commit the first move of the best one.
//!
//! The best sequence, extended by its binary-GCD completion, is kept as the
//! incumbent plan. A fresh search result replaces the plan only when it is
//! no more expensive than what remains of the plan, so the committed total
//! never exceeds the first step's score, which in turn never exceeds plain
//! binary GCD from the start.

use std::collections::VecDeque;

use num_bigint::BigUint;

use super::trace::{binary_completion_cost, binary_moves, small_words, to_trace, GcdTrace, Move, TraceOrigin, MAX_TRACE_MOVES};
use super::word::Word;
use crate::circuit::CostModel;
use crate::error::{Error, Result};

/// Block prices of the three move families at one width.
#[derive(Clone, Copy, Debug)]
pub(crate) struct MovePrices {
    /// SUB moves replay as ADD blocks.
    pub subtract: u64,
    /// ADD moves replay as SUB blocks.
    pub add: u64,
    /// HALVE moves replay as DBL blocks.
    pub halve: u64,
}

impl MovePrices {
    pub fn from_model(model: &CostModel, n: u32) -> Result<Self> {
        Ok(Self {
            subtract: model.toffoli(Move::SubA.block().opcode(), n)?,
            add: model.toffoli(Move::AddA.block().opcode(), n)?,
            halve: model.toffoli(Move::HalveA.block().opcode(), n)?,
        })
    }

    pub fn of(&self, mv: Move) -> u64 {
        match mv {
            Move::SubA | Move::SubB => self.subtract,
            Move::AddA | Move::AddB => self.add,
            Move::HalveA | Move::HalveB => self.halve,
        }
    }
}

struct Search<'a, W: Word> {
    depth: usize,
    cap: &'a W,
    prices: MovePrices,
    path: Vec<Move>,
    visited: Vec<(W, W)>,
    best: Option<(u64, Vec<Move>, (W, W))>,
}

impl<W: Word> Search<'_, W> {
    fn consider(&mut self, cost: u64, end: &(W, W)) {
        let score =
            cost + binary_completion_cost(&end.0, &end.1, self.prices.halve, self.prices.subtract);
        // strict improvement keeps the first sequence in move order on ties
        if self.best.as_ref().map_or(true, |(s, _, _)| score < *s) {
            self.best = Some((score, self.path.clone(), end.clone()));
        }
    }

    fn explore(&mut self, cost: u64) {
        let (a, b) = self.visited.last().unwrap().clone();
        if a.is_unit() && b.is_unit() {
            self.consider(cost, &(a, b));
            return;
        }
        if self.path.len() == self.depth {
            self.consider(cost, &(a, b));
            return;
        }
        for mv in Move::ALL {
            if self.path.last().is_some_and(|prev| mv.undoes(*prev)) {
                continue;
            }
            let Some(next) = mv.apply(&a, &b, self.cap) else { continue };
            if self.visited.contains(&next) {
                continue;
            }
            self.path.push(mv);
            self.visited.push(next);
            self.explore(cost + self.prices.of(mv));
            self.visited.pop();
            self.path.pop();
        }
    }
}

/// Best-scoring sequence from `(a, b)`: `(score, moves, end pair)`.
fn best_sequence<W: Word>(a: &W, b: &W, cap: &W, depth: usize, prices: MovePrices) -> (u64, Vec<Move>, (W, W)) {
    let mut search = Search {
        depth,
        cap,
        prices,
        path: Vec::with_capacity(depth),
        visited: vec![(a.clone(), b.clone())],
        best: None,
    };
    search.explore(0);
    // the binary-GCD prefix is always a candidate
    search.best.expect("binary GCD moves are never pruned")
}

fn lookahead_moves<W: Word>(
    a: W,
    b: W,
    cap: &W,
    depth: usize,
    prices: MovePrices,
) -> Result<(Vec<(W, W)>, Vec<Move>)> {
    let mut pairs = vec![(a, b)];
    let mut moves = Vec::new();
    let mut plan: VecDeque<Move> = VecDeque::new();
    let mut remaining = u64::MAX;
    loop {
        let (a, b) = pairs.last().unwrap().clone();
        if a.is_unit() && b.is_unit() {
            break;
        }
        if moves.len() >= MAX_TRACE_MOVES {
            return Err(Error::TraceTooLong(MAX_TRACE_MOVES));
        }
        let (score, seq, end) = best_sequence(&a, &b, cap, depth, prices);
        if score <= remaining {
            plan.clear();
            plan.extend(seq);
            let (_, tail) = binary_moves(end.0, end.1);
            plan.extend(tail);
            remaining = score;
        }
        let mv = plan.pop_front().expect("plan reaches (1, 1)");
        remaining -= prices.of(mv);
        let next = mv.apply(&a, &b, cap).expect("planned moves are legal");
        moves.push(mv);
        pairs.push(next);
    }
    Ok((pairs, moves))
}

/// Lookahead trace from `(a, b)` with sums capped below
/// `value_cap · max(a, b)`.
pub(crate) fn lookahead_trace_with(
    a: &BigUint,
    b: &BigUint,
    depth: usize,
    value_cap: u32,
    prices: MovePrices,
) -> Result<GcdTrace> {
    let cap = a.max(b) * value_cap;
    let origin = TraceOrigin::Lookahead;
    match small_words(a, b, &cap) {
        Some((x, y, c)) => {
            lookahead_moves(x, y, &c, depth, prices).map(|(p, m)| to_trace(p, m, origin))
        }
        None => lookahead_moves(a.clone(), b.clone(), &cap, depth, prices)
            .map(|(p, m)| to_trace(p, m, origin)),
    }
}
