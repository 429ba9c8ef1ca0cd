//! Modular exponentiation `b^z mod M` as a chain of `2n` conditional
//! multiplication blocks. Position `i` multiplies by `b^(2^i) mod M` when
//! bit `i` of `z` is set; a pair of CSWAP layers with a zero register turns
//! the block off otherwise.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde_json::json;

use crate::circuit::{circuit_cost, circuit_depth, AdderRegime, BlockCircuit, CostModel, DepthModel, Opcode};
use crate::error::{Error, Result};
use crate::numtheory::{gcd, Modulus, Multiplier};
use crate::simulator::run_circuit;
use crate::synthesis::{synthesize, SynthesisConfig};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModExpPlan {
    modulus: Modulus,
    base: BigUint,
    multipliers: Vec<Multiplier>,
}

impl ModExpPlan {
    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn base(&self) -> &BigUint {
        &self.base
    }

    /// Width of the exponent register, `2n`.
    pub fn exponent_bits(&self) -> usize {
        self.multipliers.len()
    }

    pub fn multipliers(&self) -> &[Multiplier] {
        &self.multipliers
    }
}

/// `C_i = b^(2^i) mod M` for `i < 2n`, by repeated squaring.
pub fn modexp_plan(m: &Modulus, base: &BigUint) -> Result<ModExpPlan> {
    let b = base % m.value();
    if !gcd(&b, m.value()).is_one() {
        return Err(Error::BaseNotCoprime(base.to_string(), m.to_string()));
    }
    let count = 2 * m.bits() as usize;
    let mut multipliers = Vec::with_capacity(count);
    let mut c = b;
    for _ in 0..count {
        multipliers.push(Multiplier::new(c.clone(), m)?);
        c = (&c * &c) % m.value();
    }
    Ok(ModExpPlan { modulus: m.clone(), base: base.clone(), multipliers })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModExpOptions {
    /// Cost `C = 1` positions like a `C = 2` block instead of leaving them
    /// empty.
    pub keep_identity_gates: bool,
    /// Synthesize each distinct multiplier once.
    pub use_cache: bool,
}

impl Default for ModExpOptions {
    fn default() -> Self {
        Self { keep_identity_gates: false, use_cache: true }
    }
}

/// One conditional position.
#[derive(Clone, Debug)]
pub struct ModExpBlock {
    pub position: usize,
    /// The unconditional block; its CSWAP wrappers are implied.
    pub circuit: Arc<BlockCircuit>,
    /// Stand-in used for costing an identity position when identity gates
    /// are kept.
    pub costed_as: Option<Arc<BlockCircuit>>,
}

impl ModExpBlock {
    fn costed(&self) -> &BlockCircuit {
        self.costed_as.as_deref().unwrap_or(&self.circuit)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ModExpTotals {
    pub toffoli: u64,
    pub cnot: u64,
    pub depth: u64,
    pub qubits: u64,
    pub ancillae: u64,
    pub positions: usize,
    pub distinct_blocks: usize,
}

/// Ancillae of the exponentiation datapath: `5n + 2` with ripple-carry
/// adders, where each adder needs one, and `5n + 1` plus the adder's own
/// ancillae otherwise.
pub fn modexp_ancillae(n: u32, depth_model: &DepthModel) -> u64 {
    5 * n as u64 + 1 + depth_model.adder_ancillae(n)
}

/// The ripple-carry ancilla figure, `5n + 2`.
pub fn reference_ancillae(n: u32) -> u64 {
    5 * n as u64 + 2
}

#[derive(Clone, Debug)]
pub struct ModExpCircuit {
    plan: ModExpPlan,
    blocks: Vec<ModExpBlock>,
    cost_model: CostModel,
    depth_model: DepthModel,
    totals: ModExpTotals,
}

pub fn build_modexp(
    m: &Modulus,
    base: &BigUint,
    cfg: &SynthesisConfig,
    depth_model: &DepthModel,
) -> Result<ModExpCircuit> {
    build_modexp_with(m, base, cfg, depth_model, ModExpOptions::default())
}

pub fn build_modexp_with(
    m: &Modulus,
    base: &BigUint,
    cfg: &SynthesisConfig,
    depth_model: &DepthModel,
    options: ModExpOptions,
) -> Result<ModExpCircuit> {
    cfg.validate()?;
    let plan = modexp_plan(m, base)?;
    let synth = |c: &Multiplier| synthesize(c, m, cfg).map(Arc::new);

    let circuits: Vec<Arc<BlockCircuit>> = if options.use_cache {
        let mut distinct: Vec<&Multiplier> = Vec::new();
        for c in plan.multipliers() {
            if !distinct.contains(&c) {
                distinct.push(c);
            }
        }
        let built = distinct.par_iter().map(|c| synth(c)).collect::<Result<Vec<_>>>()?;
        let cache: HashMap<&Multiplier, Arc<BlockCircuit>> = distinct.into_iter().zip(built).collect();
        plan.multipliers().iter().map(|c| cache[c].clone()).collect()
    } else {
        plan.multipliers().par_iter().map(synth).collect::<Result<_>>()?
    };

    let stand_in = if options.keep_identity_gates && plan.multipliers().iter().any(Multiplier::is_one) {
        Some(synth(&Multiplier::new(BigUint::from(2u32) % m.value(), m)?)?)
    } else {
        None
    };
    let blocks = circuits
        .into_iter()
        .enumerate()
        .map(|(position, circuit)| {
            let costed_as = if circuit.multiplier().is_one() { stand_in.clone() } else { None };
            ModExpBlock { position, circuit, costed_as }
        })
        .collect();

    let mut out = ModExpCircuit {
        plan,
        blocks,
        cost_model: cfg.cost_model.clone(),
        depth_model: depth_model.clone(),
        totals: ModExpTotals::default(),
    };
    out.totals = out.compute_totals(depth_model)?;
    Ok(out)
}

impl ModExpCircuit {
    pub fn plan(&self) -> &ModExpPlan {
        &self.plan
    }

    pub fn blocks(&self) -> &[ModExpBlock] {
        &self.blocks
    }

    pub fn totals(&self) -> &ModExpTotals {
        &self.totals
    }

    pub fn depth_model(&self) -> &DepthModel {
        &self.depth_model
    }

    /// One circuit per distinct multiplier, in order of first appearance.
    pub fn distinct_circuits(&self) -> Vec<&BlockCircuit> {
        let mut out: Vec<&BlockCircuit> = Vec::new();
        for block in &self.blocks {
            if !out.iter().any(|c| c.multiplier() == block.circuit.multiplier()) {
                out.push(&block.circuit);
            }
        }
        out
    }

    fn compute_totals(&self, depth_model: &DepthModel) -> Result<ModExpTotals> {
        let n = self.plan.modulus.bits();
        let swap_toffoli = self.cost_model.toffoli(Opcode::CswapLayer, n)?;
        let swap_cnot = self.cost_model.cnot(Opcode::CswapLayer, n);
        let swap_depth = depth_model.op_depth(Opcode::CswapLayer, n)?;
        let mut totals = ModExpTotals {
            positions: self.blocks.len(),
            distinct_blocks: self.distinct_circuits().len(),
            ancillae: modexp_ancillae(n, depth_model),
            ..Default::default()
        };
        totals.qubits = n as u64 + totals.ancillae;
        for block in &self.blocks {
            let costed = block.costed();
            let gates = circuit_cost(costed, &self.cost_model)?;
            totals.toffoli += gates.toffoli + 2 * swap_toffoli;
            totals.cnot += gates.cnot + 2 * swap_cnot;
            totals.depth += circuit_depth(costed, depth_model)? + 2 * swap_depth;
        }
        Ok(totals)
    }

    /// Totals recomputed under another adder regime.
    pub fn totals_under(&self, regime: AdderRegime) -> Result<ModExpTotals> {
        self.compute_totals(&self.depth_model.with_regime(regime))
    }

    /// Runs the blocks selected by the bits of `z` on the input 1.
    pub fn simulate(&self, z: &BigUint) -> Result<BigUint> {
        if z.bits() > self.blocks.len() as u64 {
            return Err(Error::Config(format!(
                "exponent {z} exceeds {} bits",
                self.blocks.len()
            )));
        }
        let mut x = BigUint::one();
        for block in &self.blocks {
            if !z.bit(block.position as u64) {
                continue;
            }
            let state = run_circuit(&block.circuit, &x)?;
            let reg = block.circuit.result_register();
            if !state.get(reg.other()).is_zero() {
                return Err(Error::InvariantViolation(format!(
                    "block {} leaves a nonzero ancilla register",
                    block.position
                )));
            }
            x = state.get(reg).clone();
        }
        Ok(x)
    }

    pub fn summary_json(&self) -> Result<serde_json::Value> {
        let n = self.plan.modulus.bits();
        let ripple = self.totals_under(AdderRegime::Ripple)?;
        let lookahead = self.totals_under(AdderRegime::Lookahead)?;
        let t = &self.totals;
        Ok(json!({
            "modulus": self.plan.modulus.to_string(),
            "base": self.plan.base.to_string(),
            "bits": n,
            "adder": self.depth_model.regime.to_string(),
            "positions": t.positions,
            "distinct_blocks": t.distinct_blocks,
            "toffoli": t.toffoli,
            "cnot": t.cnot,
            "depth": t.depth,
            "qubits": t.qubits,
            "ancillae": t.ancillae,
            "data_register": n,
            "second_register": n,
            "adder_ancillae": self.depth_model.adder_ancillae(n),
            "depth_ripple": ripple.depth,
            "depth_lookahead": lookahead.depth,
            "ancillae_ripple": ripple.ancillae,
            "ancillae_lookahead": lookahead.ancillae,
            "reference_ancillae": reference_ancillae(n),
            "cost_model_hash": self.cost_model.hash(),
        }))
    }
}
