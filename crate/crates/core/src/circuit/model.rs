use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{BlockCircuit, BlockOp, Opcode};
use crate::error::{Error, Result};

/// `slope·n + intercept`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Affine {
    pub slope: u64,
    #[serde(default)]
    pub intercept: u64,
}

impl Affine {
    pub const fn new(slope: u64, intercept: u64) -> Self {
        Self { slope, intercept }
    }

    pub fn eval(&self, n: u32) -> u64 {
        self.slope * n as u64 + self.intercept
    }
}

/// Per-opcode Toffoli and CNOT counts as affine functions of the width.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostModel {
    pub name: String,
    pub toffoli: BTreeMap<Opcode, Affine>,
    #[serde(default)]
    pub cnot: BTreeMap<Opcode, Affine>,
}

impl Default for CostModel {
    /// ADD/SUB = 3n, DBL/HLV = 3n+2, NEG = n, CSWAP_LAYER = n, FANOUT = 0
    /// Toffoli; FANOUT = n and CSWAP_LAYER = 2n CNOT.
    fn default() -> Self {
        let toffoli = BTreeMap::from([
            (Opcode::Fanout, Affine::new(0, 0)),
            (Opcode::Add, Affine::new(3, 0)),
            (Opcode::Sub, Affine::new(3, 0)),
            (Opcode::Dbl, Affine::new(3, 2)),
            (Opcode::Hlv, Affine::new(3, 2)),
            (Opcode::Neg, Affine::new(1, 0)),
            (Opcode::CswapLayer, Affine::new(1, 0)),
        ]);
        let cnot = BTreeMap::from([
            (Opcode::Fanout, Affine::new(1, 0)),
            (Opcode::CswapLayer, Affine::new(2, 0)),
        ]);
        Self { name: "default".into(), toffoli, cnot }
    }
}

impl CostModel {
    pub fn toffoli(&self, opcode: Opcode, n: u32) -> Result<u64> {
        self.toffoli
            .get(&opcode)
            .map(|f| f.eval(n))
            .ok_or_else(|| Error::UnknownOpcode(opcode.to_string()))
    }

    /// CNOT count of one block; opcodes without an entry use none.
    pub fn cnot(&self, opcode: Opcode, n: u32) -> u64 {
        self.cnot.get(&opcode).map_or(0, |f| f.eval(n))
    }

    /// Content hash of the coefficients (the name is not hashed). Records
    /// are only comparable when their hashes agree.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(&(&self.toffoli, &self.cnot))
            .expect("maps of plain integers serialize");
        let digest = Sha256::digest(canonical.as_bytes());
        hex::encode(&digest[..8])
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdderRegime {
    /// Linear-depth ripple-carry adders with a single ancilla.
    Ripple,
    /// Logarithmic-depth carry-lookahead adders.
    #[default]
    Lookahead,
}

impl fmt::Display for AdderRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AdderRegime::Ripple => "ripple",
            AdderRegime::Lookahead => "lookahead",
        })
    }
}

impl std::str::FromStr for AdderRegime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ripple" => Ok(AdderRegime::Ripple),
            "lookahead" => Ok(AdderRegime::Lookahead),
            other => Err(Error::Config(format!("unknown adder regime {other:?}"))),
        }
    }
}

/// `linear·n + log·ceil(log2 n) + intercept`, in Toffoli-depth units.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepthFormula {
    #[serde(default)]
    pub linear: u64,
    #[serde(default)]
    pub log: u64,
    #[serde(default)]
    pub intercept: u64,
}

impl DepthFormula {
    pub const fn new(linear: u64, log: u64, intercept: u64) -> Self {
        Self { linear, log, intercept }
    }

    pub fn eval(&self, n: u32) -> u64 {
        self.linear * n as u64 + self.log * ceil_log2(n) as u64 + self.intercept
    }
}

pub fn ceil_log2(n: u32) -> u32 {
    if n <= 1 {
        0
    } else {
        32 - (n - 1).leading_zeros()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepthModel {
    pub regime: AdderRegime,
    pub ripple: BTreeMap<Opcode, DepthFormula>,
    pub lookahead: BTreeMap<Opcode, DepthFormula>,
}

impl Default for DepthModel {
    fn default() -> Self {
        Self::new(AdderRegime::default())
    }
}

impl DepthModel {
    pub fn new(regime: AdderRegime) -> Self {
        Self { regime, ripple: default_ripple_depths(), lookahead: default_lookahead_depths() }
    }

    pub fn with_regime(&self, regime: AdderRegime) -> Self {
        Self { regime, ..self.clone() }
    }

    fn table(&self) -> &BTreeMap<Opcode, DepthFormula> {
        match self.regime {
            AdderRegime::Ripple => &self.ripple,
            AdderRegime::Lookahead => &self.lookahead,
        }
    }

    pub fn op_depth(&self, opcode: Opcode, n: u32) -> Result<u64> {
        self.table()
            .get(&opcode)
            .map(|f| f.eval(n))
            .ok_or_else(|| Error::UnknownOpcode(opcode.to_string()))
    }

    /// Ancillae of one adder: 1 for ripple-carry, `2n - ceil(log2 n) - 2`
    /// for carry-lookahead.
    pub fn adder_ancillae(&self, n: u32) -> u64 {
        match self.regime {
            AdderRegime::Ripple => 1,
            AdderRegime::Lookahead => (2 * n as u64).saturating_sub(ceil_log2(n) as u64 + 2),
        }
    }
}

fn default_ripple_depths() -> BTreeMap<Opcode, DepthFormula> {
    let additive = DepthFormula::new(2, 0, 4);
    let doubling = DepthFormula::new(3, 0, 6);
    BTreeMap::from([
        (Opcode::Fanout, DepthFormula::new(0, 0, 0)),
        (Opcode::Add, additive),
        (Opcode::Sub, additive),
        (Opcode::Neg, additive),
        (Opcode::Dbl, doubling),
        (Opcode::Hlv, doubling),
        // n Fredkin gates on one shared control run one after another
        (Opcode::CswapLayer, DepthFormula::new(1, 0, 0)),
    ])
}

fn default_lookahead_depths() -> BTreeMap<Opcode, DepthFormula> {
    let additive = DepthFormula::new(0, 4, 3);
    let doubling = DepthFormula::new(0, 6, 12);
    BTreeMap::from([
        (Opcode::Fanout, DepthFormula::new(0, 0, 0)),
        (Opcode::Add, additive),
        (Opcode::Sub, additive),
        (Opcode::Neg, additive),
        (Opcode::Dbl, doubling),
        (Opcode::Hlv, doubling),
        // control fan-out and clear (2 log n) around one parallel swap layer
        (Opcode::CswapLayer, DepthFormula::new(0, 2, 1)),
    ])
}

/// On-disk form of a cost and depth configuration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelFile {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub adder_regime: AdderRegime,
    #[serde(default = "default_toffoli")]
    pub toffoli: BTreeMap<Opcode, Affine>,
    #[serde(default = "default_cnot")]
    pub cnot: BTreeMap<Opcode, Affine>,
    #[serde(default = "default_ripple_depths")]
    pub depth_ripple: BTreeMap<Opcode, DepthFormula>,
    #[serde(default = "default_lookahead_depths")]
    pub depth_lookahead: BTreeMap<Opcode, DepthFormula>,
}

fn default_name() -> String {
    CostModel::default().name
}

fn default_toffoli() -> BTreeMap<Opcode, Affine> {
    CostModel::default().toffoli
}

fn default_cnot() -> BTreeMap<Opcode, Affine> {
    CostModel::default().cnot
}

impl Default for ModelFile {
    fn default() -> Self {
        Self::from_models(&CostModel::default(), &DepthModel::default())
    }
}

impl ModelFile {
    pub fn from_models(cost: &CostModel, depth: &DepthModel) -> Self {
        Self {
            name: cost.name.clone(),
            adder_regime: depth.regime,
            toffoli: cost.toffoli.clone(),
            cnot: cost.cnot.clone(),
            depth_ripple: depth.ripple.clone(),
            depth_lookahead: depth.lookahead.clone(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model file serializes")
    }

    pub fn cost_model(&self) -> CostModel {
        CostModel { name: self.name.clone(), toffoli: self.toffoli.clone(), cnot: self.cnot.clone() }
    }

    pub fn depth_model(&self) -> DepthModel {
        DepthModel {
            regime: self.adder_regime,
            ripple: self.depth_ripple.clone(),
            lookahead: self.depth_lookahead.clone(),
        }
    }
}

/// Toffoli count of one block at width `n`.
pub fn op_cost(op: &BlockOp, n: u32, model: &CostModel) -> Result<u64> {
    if n < 3 {
        return Err(Error::Config(format!("width must be at least 3, got {n}")));
    }
    model.toffoli(op.opcode(), n)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateCount {
    pub toffoli: u64,
    pub cnot: u64,
}

impl std::ops::Add for GateCount {
    type Output = GateCount;

    fn add(self, rhs: GateCount) -> GateCount {
        GateCount { toffoli: self.toffoli + rhs.toffoli, cnot: self.cnot + rhs.cnot }
    }
}

pub fn circuit_cost(circuit: &BlockCircuit, model: &CostModel) -> Result<GateCount> {
    let n = circuit.width();
    circuit.ops().iter().try_fold(GateCount::default(), |acc, op| {
        let toffoli = op_cost(op, n, model)?;
        Ok(acc + GateCount { toffoli, cnot: model.cnot(op.opcode(), n) })
    })
}

/// Both registers feed every block, so blocks form one sequential chain and
/// the depth is the sum of per-block depths.
pub fn circuit_depth(circuit: &BlockCircuit, model: &DepthModel) -> Result<u64> {
    let n = circuit.width();
    circuit.ops().iter().map(|op| model.op_depth(op.opcode(), n)).sum()
}
