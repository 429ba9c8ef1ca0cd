//! Exact least-cost circuits for small moduli by Dijkstra search over all
//! register pairs `(a, b)` in `Z_M x Z_M`, each pair standing for the state
//! `(a·x, b·x)`.
//!
//! Circuits start either at `(1, 1)` after a FANOUT or at `(1, 0)` without
//! one, and end at `(C, 0)` or `(0, C)`. FANOUT costs no Toffoli gates, so
//! both starts sit at distance zero.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use crate::circuit::{BlockCircuit, BlockOp, CostModel, Register};
use crate::error::{Error, Result};
use crate::numtheory::{gcd, Modulus, Multiplier};

pub const DEFAULT_MAX_BITS: u32 = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OptimalConfig {
    pub max_bits: u32,
    /// Include NEG edges.
    pub allow_neg: bool,
}

impl Default for OptimalConfig {
    fn default() -> Self {
        Self { max_bits: DEFAULT_MAX_BITS, allow_neg: true }
    }
}

const EDGES: [BlockOp; 10] = [
    BlockOp::Add(Register::R1),
    BlockOp::Add(Register::R2),
    BlockOp::Sub(Register::R1),
    BlockOp::Sub(Register::R2),
    BlockOp::Dbl(Register::R1),
    BlockOp::Dbl(Register::R2),
    BlockOp::Hlv(Register::R1),
    BlockOp::Hlv(Register::R2),
    BlockOp::Neg(Register::R1),
    BlockOp::Neg(Register::R2),
];

const NO_PRED: u8 = u8::MAX;
const FANOUT_START: u8 = u8::MAX - 1;
const PLAIN_START: u8 = u8::MAX - 2;

/// Distances and predecessor links for every state of one modulus.
pub struct OptimalSearch {
    modulus: Modulus,
    m: u32,
    dist: Vec<u32>,
    pred: Vec<u32>,
    pred_edge: Vec<u8>,
}

fn step(op: BlockOp, a: u32, b: u32, m: u32) -> (u32, u32) {
    let add = |x: u32, y: u32| if x + y >= m { x + y - m } else { x + y };
    let sub = |x: u32, y: u32| if x >= y { x - y } else { x + m - y };
    let dbl = |x: u32| add(x, x);
    let hlv = |x: u32| if x & 1 == 0 { x >> 1 } else { (x >> 1) + (m >> 1) + 1 };
    let neg = |x: u32| if x == 0 { 0 } else { m - x };
    match op {
        BlockOp::Add(Register::R1) => (add(a, b), b),
        BlockOp::Add(Register::R2) => (a, add(b, a)),
        BlockOp::Sub(Register::R1) => (sub(a, b), b),
        BlockOp::Sub(Register::R2) => (a, sub(b, a)),
        BlockOp::Dbl(Register::R1) => (dbl(a), b),
        BlockOp::Dbl(Register::R2) => (a, dbl(b)),
        BlockOp::Hlv(Register::R1) => (hlv(a), b),
        BlockOp::Hlv(Register::R2) => (a, hlv(b)),
        BlockOp::Neg(Register::R1) => (neg(a), b),
        BlockOp::Neg(Register::R2) => (a, neg(b)),
        BlockOp::Fanout | BlockOp::CswapLayer => unreachable!("not a search edge"),
    }
}

impl OptimalSearch {
    pub fn run(modulus: &Modulus, model: &CostModel, cfg: &OptimalConfig) -> Result<Self> {
        let bits = modulus.bits();
        if bits > cfg.max_bits {
            return Err(Error::ModulusTooLarge { bits, cap: cfg.max_bits });
        }
        let m = modulus.as_u64().and_then(|v| u32::try_from(v).ok()).filter(|&v| v < 1 << 16).ok_or(
            Error::ModulusTooLarge { bits, cap: 16 },
        )?;
        let edge_count = if cfg.allow_neg { EDGES.len() } else { EDGES.len() - 2 };
        let weights: Vec<u32> = EDGES[..edge_count]
            .iter()
            .map(|op| model.toffoli(op.opcode(), bits).map(|w| w as u32))
            .collect::<Result<_>>()?;

        let states = (m as usize) * (m as usize);
        let index = |a: u32, b: u32| (a * m + b) as usize;
        let mut dist = vec![u32::MAX; states];
        let mut pred = vec![0u32; states];
        let mut pred_edge = vec![NO_PRED; states];
        let mut heap = BinaryHeap::new();
        for (a, b, tag) in [(1, 0, PLAIN_START), (1, 1, FANOUT_START)] {
            let s = index(a, b);
            dist[s] = 0;
            pred_edge[s] = tag;
            heap.push(Reverse((0u32, s as u32)));
        }
        while let Some(Reverse((d, s))) = heap.pop() {
            if d > dist[s as usize] {
                continue;
            }
            let (a, b) = (s / m, s % m);
            for (e, op) in EDGES[..edge_count].iter().enumerate() {
                let (na, nb) = step(*op, a, b, m);
                let t = index(na, nb);
                let nd = d + weights[e];
                if nd < dist[t] {
                    dist[t] = nd;
                    pred[t] = s;
                    pred_edge[t] = e as u8;
                    heap.push(Reverse((nd, t as u32)));
                }
            }
        }
        Ok(Self { modulus: modulus.clone(), m, dist, pred, pred_edge })
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    /// The cheaper of the two end states for `c`, preferring `(c, 0)`.
    fn target(&self, c: u32) -> Option<(usize, Register)> {
        let r1 = (c * self.m) as usize;
        let r2 = c as usize;
        let (d1, d2) = (self.dist[r1], self.dist[r2]);
        if d1 == u32::MAX && d2 == u32::MAX {
            None
        } else if d1 <= d2 {
            Some((r1, Register::R1))
        } else {
            Some((r2, Register::R2))
        }
    }

    /// Minimal Toffoli cost of a circuit for `c`, if `c` is reachable.
    pub fn cost(&self, c: u64) -> Option<u64> {
        let c = u32::try_from(c).ok().filter(|&c| c > 0 && c < self.m)?;
        self.target(c).map(|(s, _)| self.dist[s] as u64)
    }

    /// Costs of all multipliers coprime to `M`.
    pub fn costs(&self) -> BTreeMap<u64, u64> {
        let big_m = BigUint::from(self.m);
        (1..self.m as u64)
            .filter(|&c| gcd(&BigUint::from(c), &big_m) == BigUint::from(1u32))
            .filter_map(|c| self.cost(c).map(|cost| (c, cost)))
            .collect()
    }

    pub fn circuit(&self, c: &Multiplier) -> Result<BlockCircuit> {
        let cv = c.value().to_u32().filter(|&v| v < self.m).ok_or_else(|| Error::MultiplierOutOfRange {
            multiplier: c.to_string(),
            modulus: self.modulus.to_string(),
        })?;
        let (mut s, result) = self
            .target(cv)
            .ok_or_else(|| Error::InvariantViolation(format!("{cv} is unreachable mod {}", self.m)))?;
        let mut ops = Vec::new();
        loop {
            match self.pred_edge[s] {
                PLAIN_START => break,
                FANOUT_START => {
                    ops.push(BlockOp::Fanout);
                    break;
                }
                NO_PRED => unreachable!("reachable states have predecessors"),
                e => {
                    ops.push(EDGES[e as usize]);
                    s = self.pred[s] as usize;
                }
            }
        }
        ops.reverse();
        BlockCircuit::new(self.modulus.clone(), c.clone(), ops, result)
    }
}

pub fn optimal_costs(m: &Modulus, model: &CostModel) -> Result<BTreeMap<u64, u64>> {
    Ok(OptimalSearch::run(m, model, &OptimalConfig::default())?.costs())
}

pub fn optimal_circuit(c: &Multiplier, m: &Modulus, model: &CostModel) -> Result<BlockCircuit> {
    OptimalSearch::run(m, model, &OptimalConfig::default())?.circuit(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{circuit_cost, op_cost};
    use crate::simulator::{verify, VerifyMode};

    fn m(v: u64) -> Modulus {
        Modulus::from_u64(v).unwrap()
    }

    #[test]
    fn costs_mod_21() {
        let model = CostModel::default();
        let costs = optimal_costs(&m(21), &model).unwrap();
        assert_eq!(costs[&1], 0);
        assert!(costs[&13] <= 6 * op_cost(&BlockOp::Add(Register::R1), 5, &model).unwrap());
        assert_eq!(costs.len(), 12);
    }

    #[test]
    fn doubling_mod_35() {
        let model = CostModel::default();
        let md = m(35);
        let costs = optimal_costs(&md, &model).unwrap();
        assert_eq!(costs[&2], op_cost(&BlockOp::Dbl(Register::R1), 6, &model).unwrap());
        let circuit = optimal_circuit(&Multiplier::from_u64(2, &md).unwrap(), &md, &model).unwrap();
        assert_eq!(circuit.ops(), &[BlockOp::Dbl(Register::R1)]);
    }

    #[test]
    fn identity_and_reconstruction() {
        let model = CostModel::default();
        let md = m(21);
        let search = OptimalSearch::run(&md, &model, &OptimalConfig::default()).unwrap();
        assert!(search.circuit(&Multiplier::from_u64(1, &md).unwrap()).unwrap().ops().is_empty());
        for (c, cost) in search.costs() {
            let circuit = search.circuit(&Multiplier::from_u64(c, &md).unwrap()).unwrap();
            assert_eq!(circuit_cost(&circuit, &model).unwrap().toffoli, cost);
            assert!(verify(&circuit, VerifyMode::Exhaustive).unwrap().ok(), "C={c}");
        }
    }

    #[test]
    fn thirteen_bounded_by_euclid() {
        let model = CostModel::default();
        let md = m(21);
        let c = Multiplier::from_u64(13, &md).unwrap();
        let opt = optimal_circuit(&c, &md, &model).unwrap();
        let euclid = crate::synthesis::euclid_synthesize(&c, &md).unwrap();
        assert!(circuit_cost(&opt, &model).unwrap().toffoli <= circuit_cost(&euclid, &model).unwrap().toffoli);
    }

    #[test]
    fn cap_enforced() {
        let cfg = OptimalConfig { max_bits: 6, allow_neg: true };
        assert!(matches!(
            OptimalSearch::run(&m(65), &CostModel::default(), &cfg),
            Err(Error::ModulusTooLarge { bits: 7, cap: 6 })
        ));
    }

    #[test]
    fn without_neg_is_never_cheaper() {
        let model = CostModel::default();
        let md = m(77);
        let with = OptimalSearch::run(&md, &model, &OptimalConfig::default()).unwrap().costs();
        let without =
            OptimalSearch::run(&md, &model, &OptimalConfig { allow_neg: false, ..Default::default() })
                .unwrap()
                .costs();
        for (c, cost) in &with {
            assert!(cost <= &without[c]);
        }
    }

    #[test]
    fn deterministic() {
        let model = CostModel::default();
        let md = m(91);
        let a = OptimalSearch::run(&md, &model, &OptimalConfig::default()).unwrap();
        let b = OptimalSearch::run(&md, &model, &OptimalConfig::default()).unwrap();
        for c in [2u64, 3, 17, 45, 90] {
            let mult = Multiplier::from_u64(c, &md).unwrap();
            assert_eq!(a.circuit(&mult).unwrap(), b.circuit(&mult).unwrap());
        }
    }
}
