//! Circuit construction for `x -> C·x mod M`.
//!
//! The main route reduces `(M, C)` to `(1, 1)` with a GCD-style algorithm and
//! replays the reduction backwards as register blocks. A binary-expansion
//! baseline and direct circuits for (negated) powers of two sit alongside.

mod lookahead;
mod trace;
mod word;

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::One;

use crate::circuit::{circuit_cost, BlockCircuit, BlockOp, CostModel, Register};
use crate::error::{Error, Result};
use crate::numtheory::{detect_special, mod_inverse, Modulus, Multiplier, SpecialForm};
use crate::simulator::run_circuit;

use lookahead::{lookahead_trace_with, MovePrices};
pub use trace::{
    binary_gcd_trace, euclid_trace, trace_to_circuit, GcdTrace, Move, TraceOrigin, MAX_TRACE_MOVES,
};

pub const MAX_LOOKAHEAD_DEPTH: usize = 5;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynthesisConfig {
    /// Moves scored per decision, 1 to 5.
    pub lookahead_depth: usize,
    pub cost_model: CostModel,
    /// Intermediate trace values stay below `value_cap · M`.
    pub value_cap: u32,
    pub use_special_cases: bool,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self { lookahead_depth: 3, cost_model: CostModel::default(), value_cap: 4, use_special_cases: true }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_LOOKAHEAD_DEPTH).contains(&self.lookahead_depth) {
            return Err(Error::Config(format!(
                "lookahead depth must be in 1..={MAX_LOOKAHEAD_DEPTH}, got {}",
                self.lookahead_depth
            )));
        }
        if self.value_cap < 2 {
            return Err(Error::Config(format!("value cap must be at least 2, got {}", self.value_cap)));
        }
        Ok(())
    }
}

/// Lookahead trace from `(a, b)`; `a` is normally `M`.
pub fn lookahead_trace(a: &BigUint, b: &BigUint, cfg: &SynthesisConfig) -> Result<GcdTrace> {
    cfg.validate()?;
    if a.bits() == 0 || b.bits() == 0 {
        return Err(Error::InvalidTrace("trace values must be positive".into()));
    }
    if !num_integer::Integer::gcd(a, b).is_one() {
        return Err(Error::NotCoprime(a.to_string(), b.to_string()));
    }
    let n = (a.max(b).bits() as u32).max(3);
    let prices = MovePrices::from_model(&cfg.cost_model, n)?;
    lookahead_trace_with(a, b, cfg.lookahead_depth, cfg.value_cap, prices)
}

/// Same as [`lookahead_trace`] but prices moves at the modulus width.
fn lookahead_trace_for(c: &Multiplier, m: &Modulus, cfg: &SynthesisConfig) -> Result<GcdTrace> {
    cfg.validate()?;
    let prices = MovePrices::from_model(&cfg.cost_model, m.bits())?;
    lookahead_trace_with(m.value(), c.value(), cfg.lookahead_depth, cfg.value_cap, prices)
}

/// Binary-expansion circuit. Horner's rule on R1 turns the FANOUT copy into
/// `C·x`; the copy in R2 is then cleared by running the Horner chain of
/// `C^-1` backwards (HLV and SUB blocks) and subtracting R1 once more.
pub fn baseline_synthesize(c: &Multiplier, m: &Modulus) -> Result<BlockCircuit> {
    if c.is_one() {
        return Ok(BlockCircuit::identity(m.clone()));
    }
    let inverse = mod_inverse(c.value(), m)?;
    let mut ops = vec![BlockOp::Fanout];
    ops.extend(horner_chain(c.value(), Register::R1));
    // (Cx, Cx) -> (Cx, x) forwards; emitted inverted and reversed
    let uncompute = horner_chain(&inverse, Register::R2);
    ops.extend(uncompute.iter().rev().map(BlockOp::inverse));
    ops.push(BlockOp::Sub(Register::R2));
    BlockCircuit::new(m.clone(), c.clone(), ops, Register::R1)
}

/// MSB-first double-and-add on `acc`, skipping the leading one bit.
fn horner_chain(value: &BigUint, acc: Register) -> Vec<BlockOp> {
    let bits = value.bits();
    let mut ops = Vec::new();
    for i in (0..bits.saturating_sub(1)).rev() {
        ops.push(BlockOp::Dbl(acc));
        if value.bit(i) {
            ops.push(BlockOp::Add(acc));
        }
    }
    ops
}

/// Single-register circuit for a special form: `k` doublings or halvings on
/// R1, then a negation for the negated kinds.
pub fn special_synthesize(form: SpecialForm, m: &Modulus) -> Result<BlockCircuit> {
    let c = Multiplier::new(form.multiplier(m), m)?;
    let step = if form.kind.is_inverse() { BlockOp::Hlv(Register::R1) } else { BlockOp::Dbl(Register::R1) };
    let mut ops = vec![step; form.exponent as usize];
    if form.kind.is_negated() {
        ops.push(BlockOp::Neg(Register::R1));
    }
    BlockCircuit::new(m.clone(), c, ops, Register::R1)
}

/// Every block is linear over `Z_M` and FANOUT onto zero is a linear copy,
/// so the image of `x = 1` fixes the whole map.
fn check_linear_image(circuit: &BlockCircuit) -> Result<()> {
    let state = run_circuit(circuit, &BigUint::one())?;
    let r = circuit.result_register();
    if state.get(r) != circuit.multiplier().value() || state.get(r.other()).bits() != 0 {
        return Err(Error::InvariantViolation(format!(
            "synthesized circuit for C={} mod {} maps 1 to ({}, {})",
            circuit.multiplier(),
            circuit.modulus(),
            state.r1,
            state.r2
        )));
    }
    Ok(())
}

/// Identity for `C = 1`, a direct circuit for special forms (when enabled),
/// otherwise the lookahead GCD circuit.
pub fn synthesize(c: &Multiplier, m: &Modulus, cfg: &SynthesisConfig) -> Result<BlockCircuit> {
    cfg.validate()?;
    if c.is_one() {
        return Ok(BlockCircuit::identity(m.clone()));
    }
    let circuit = match cfg.use_special_cases.then(|| detect_special(c, m)).flatten() {
        Some(form) => special_synthesize(form, m)?,
        None => trace_to_circuit(&lookahead_trace_for(c, m, cfg)?, m)?,
    };
    check_linear_image(&circuit)?;
    Ok(circuit)
}

pub fn euclid_synthesize(c: &Multiplier, m: &Modulus) -> Result<BlockCircuit> {
    if c.is_one() {
        return Ok(BlockCircuit::identity(m.clone()));
    }
    trace_to_circuit(&euclid_trace(m.value(), c.value())?, m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Heuristic,
    Baseline,
    Euclid,
    Optimal,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Heuristic, Method::Baseline, Method::Euclid, Method::Optimal];

    pub fn name(self) -> &'static str {
        match self {
            Method::Heuristic => "heuristic",
            Method::Baseline => "baseline",
            Method::Euclid => "euclid",
            Method::Optimal => "optimal",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method {s:?}")))
    }
}

/// Runs one construction method. `Optimal` searches the full state space and
/// is limited to small moduli.
pub fn synthesize_with(method: Method, c: &Multiplier, m: &Modulus, cfg: &SynthesisConfig) -> Result<BlockCircuit> {
    match method {
        Method::Heuristic => synthesize(c, m, cfg),
        Method::Baseline => baseline_synthesize(c, m),
        Method::Euclid => euclid_synthesize(c, m),
        Method::Optimal => crate::optimal::optimal_circuit(c, m, &cfg.cost_model),
    }
}

/// The cheapest of the heuristic, baseline and Euclid circuits under the
/// configured model; earlier methods win ties.
pub fn synthesize_auto(c: &Multiplier, m: &Modulus, cfg: &SynthesisConfig) -> Result<BlockCircuit> {
    let mut best: Option<(u64, BlockCircuit)> = None;
    for method in [Method::Heuristic, Method::Baseline, Method::Euclid] {
        let circuit = match synthesize_with(method, c, m, cfg) {
            Ok(circuit) => circuit,
            // Euclid can run away on lopsided pairs at large widths
            Err(Error::TraceTooLong(_)) if method == Method::Euclid => continue,
            Err(e) => return Err(e),
        };
        let cost = circuit_cost(&circuit, &cfg.cost_model)?.toffoli;
        if best.as_ref().map_or(true, |(b, _)| cost < *b) {
            best = Some((cost, circuit));
        }
    }
    Ok(best.expect("heuristic always produces a circuit").1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numtheory::SpecialKind;
    use crate::simulator::{run_circuit_states, verify, VerifyMode};
    use num_traits::ToPrimitive;

    fn m(v: u64) -> Modulus {
        Modulus::from_u64(v).unwrap()
    }

    fn c(v: u64, md: &Modulus) -> Multiplier {
        Multiplier::from_u64(v, md).unwrap()
    }

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    fn trace_pairs(t: &GcdTrace) -> Vec<(u64, u64)> {
        t.pairs().iter().map(|(a, b)| (a.to_u64().unwrap(), b.to_u64().unwrap())).collect()
    }

    #[test]
    fn lookahead_for_eleven_mod_21() {
        let cfg = SynthesisConfig::default();
        let t = lookahead_trace(&big(21), &big(11), &cfg).unwrap();
        t.validate().unwrap();
        assert!(t.moves().len() <= 7, "{:?}", trace_pairs(&t));
        let reference = GcdTrace::from_moves(
            big(21),
            big(11),
            vec![Move::SubA, Move::HalveA, Move::SubB, Move::SubB, Move::SubA, Move::HalveA, Move::HalveA],
            TraceOrigin::Lookahead,
        )
        .unwrap();
        assert_eq!(trace_pairs(&reference), vec![(21, 11), (10, 11), (5, 11), (5, 6), (5, 1), (4, 1), (2, 1), (1, 1)]);
        let model = &cfg.cost_model;
        assert!(t.cost(model, 5).unwrap() <= reference.cost(model, 5).unwrap());
    }

    #[test]
    fn lookahead_opening_for_seven_mod_1017() {
        let t = lookahead_trace(&big(1017), &big(7), &SynthesisConfig::default()).unwrap();
        assert_eq!(t.moves()[0], Move::AddA);
        assert_eq!(&t.moves()[1..9], &[Move::HalveA; 8]);
        assert_eq!(trace_pairs(&t)[9], (4, 7));
        t.validate().unwrap();
    }

    #[test]
    fn lookahead_trivial() {
        let t = lookahead_trace(&big(1), &big(1), &SynthesisConfig::default()).unwrap();
        assert!(t.moves().is_empty());
    }

    #[test]
    fn lookahead_circuit_for_1017_ends_with_sub() {
        let md = m(1017);
        let t = lookahead_trace(&big(1017), &big(7), &SynthesisConfig::default()).unwrap();
        let circuit = trace_to_circuit(&t, &md).unwrap();
        assert_eq!(*circuit.ops().last().unwrap(), BlockOp::Sub(Register::R1));
        let states = run_circuit_states(&circuit, &big(1)).unwrap();
        let before_last = &states[states.len() - 2];
        assert_eq!((before_last.r1.clone(), before_last.r2.clone()), (big(7), big(7)));
        assert!(verify(&circuit, VerifyMode::Exhaustive).unwrap().ok());
    }

    #[test]
    fn config_limits() {
        let cfg = SynthesisConfig { lookahead_depth: 6, ..Default::default() };
        assert!(lookahead_trace(&big(21), &big(11), &cfg).is_err());
        let cfg = SynthesisConfig { lookahead_depth: 0, ..Default::default() };
        assert!(cfg.validate().is_err());
        assert!(lookahead_trace(&big(21), &big(14), &SynthesisConfig::default()).is_err());
    }

    #[test]
    fn baseline_thirteen_mod_21() {
        let md = m(21);
        let circuit = baseline_synthesize(&c(13, &md), &md).unwrap();
        let states = run_circuit_states(&circuit, &big(1)).unwrap();
        // after FANOUT, the accumulator walks 1, 2, 3, 6, 12, 13
        let acc: Vec<u64> = states[1..7].iter().map(|s| s.r1.to_u64().unwrap()).collect();
        assert_eq!(acc, vec![1, 2, 3, 6, 12, 13]);
        assert!(verify(&circuit, VerifyMode::Exhaustive).unwrap().ok());
        // 13^-1 = 13 mod 21: 5 blocks compute, 5 uncompute, one final SUB
        assert_eq!(circuit.arithmetic_ops(), 11);
    }

    #[test]
    fn baseline_identity() {
        let md = m(21);
        assert!(baseline_synthesize(&c(1, &md), &md).unwrap().ops().is_empty());
    }

    #[test]
    fn baseline_op_count_formula() {
        let mut rng = crate::simulator::Lcg::new(11);
        let mut checked = 0;
        while checked < 20 {
            let modulus = (rng.next_u64() % 100_000) | 1;
            let Ok(md) = Modulus::from_u64(modulus.max(3)) else { continue };
            let cv = rng.next_u64() % modulus;
            let Ok(mult) = Multiplier::from_u64(cv, &md) else { continue };
            if mult.is_one() {
                continue;
            }
            let inv = mod_inverse(mult.value(), &md).unwrap();
            let chain = |v: &BigUint| v.bits() as usize - 1 + v.count_ones() as usize - 1;
            let circuit = baseline_synthesize(&mult, &md).unwrap();
            assert_eq!(circuit.arithmetic_ops(), chain(mult.value()) + chain(&inv) + 1);
            checked += 1;
        }
    }

    #[test]
    fn special_circuits() {
        let md = m(21);
        let pow = special_synthesize(SpecialForm { kind: SpecialKind::PowerOfTwo, exponent: 3 }, &md).unwrap();
        assert_eq!(pow.ops(), &[BlockOp::Dbl(Register::R1); 3]);
        assert_eq!(pow.multiplier().value(), &big(8));
        let inv = special_synthesize(SpecialForm { kind: SpecialKind::InversePowerOfTwo, exponent: 1 }, &md).unwrap();
        assert_eq!(inv.ops(), &[BlockOp::Hlv(Register::R1)]);
        assert_eq!(inv.multiplier().value(), &big(11));
        let neg = special_synthesize(SpecialForm { kind: SpecialKind::NegPowerOfTwo, exponent: 0 }, &md).unwrap();
        assert_eq!(neg.ops(), &[BlockOp::Neg(Register::R1)]);
        assert_eq!(neg.multiplier().value(), &big(20));
        for circuit in [pow, inv, neg] {
            assert!(verify(&circuit, VerifyMode::Exhaustive).unwrap().ok());
        }
    }

    #[test]
    fn dispatch() {
        let md = m(21);
        let cfg = SynthesisConfig::default();
        let two = synthesize(&c(2, &md), &md, &cfg).unwrap();
        assert_eq!(two.ops(), &[BlockOp::Dbl(Register::R1)]);
        assert!(synthesize(&c(1, &md), &md, &cfg).unwrap().ops().is_empty());

        let euclid = euclid_synthesize(&c(13, &md), &md).unwrap();
        let ours = synthesize(&c(13, &md), &md, &cfg).unwrap();
        let cost = |x: &BlockCircuit| circuit_cost(x, &cfg.cost_model).unwrap().toffoli;
        assert!(cost(&ours) <= cost(&euclid));

        let no_special = SynthesisConfig { use_special_cases: false, ..Default::default() };
        let eleven = synthesize(&c(11, &md), &md, &no_special).unwrap();
        assert!(eleven.arithmetic_ops() <= 7);
        assert_eq!(eleven.ops()[0], BlockOp::Fanout);
        assert!(verify(&eleven, VerifyMode::Exhaustive).unwrap().ok());
    }

    #[test]
    fn auto_is_cheapest() {
        let md = m(1017);
        let cfg = SynthesisConfig::default();
        let cost = |x: &BlockCircuit| circuit_cost(x, &cfg.cost_model).unwrap().toffoli;
        for cv in [7u64, 13, 500, 1000] {
            let mult = c(cv, &md);
            let auto = synthesize_auto(&mult, &md, &cfg).unwrap();
            for method in [Method::Heuristic, Method::Baseline, Method::Euclid] {
                assert!(cost(&auto) <= cost(&synthesize_with(method, &mult, &md, &cfg).unwrap()));
            }
        }
    }

    #[test]
    fn method_names_round_trip() {
        for method in Method::ALL {
            assert_eq!(method.name().parse::<Method>().unwrap(), method);
        }
        assert!("fastest".parse::<Method>().is_err());
    }
}
