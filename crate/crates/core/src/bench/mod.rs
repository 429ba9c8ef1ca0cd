//! Sweeps over semiprime moduli and coprime multipliers, comparing the
//! construction methods under one cost model.

mod cache;
mod report;

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use num_bigint::BigUint;
use num_traits::One;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::circuit::{circuit_cost, circuit_depth, BlockCircuit, DepthModel};
use crate::error::{Error, Result};
use crate::numtheory::{enumerate_semiprimes, gcd, neg_inverse_small, ranked_semiprime, Modulus, Multiplier};
use crate::optimal::{OptimalConfig, OptimalSearch};
use crate::simulator::{verify, VerifyMode, EXHAUSTIVE_LIMIT_BITS};
use crate::synthesis::{synthesize_with, Method, SynthesisConfig};

pub use cache::{cache_key, cache_lookup, cache_store, CacheKey};
pub use report::{
    aggregate, read_csv, write_csv, write_errors, write_ratio_csv, write_summary_csv, RatioPoint, Summary,
    SummaryRow, CSV_HEADER, RATIO_HEADER,
};

/// Widths at or below this use every coprime multiplier by default.
pub const ALL_MULTIPLIERS_MAX_BITS: u32 = 12;
/// Default multiplier count for wider moduli.
pub const DEFAULT_MULTIPLIER_CAP: usize = 5000;
/// Above this width only `C = -1/17 mod M` is swept by default.
pub const SINGLE_MULTIPLIER_MIN_BITS: u32 = 65;
/// Widths enumerated exhaustively; wider ones use one ranked semiprime.
pub const ENUMERATED_MAX_BITS: u32 = 15;
/// Exhaustive verification up to this width, sampled above.
pub const EXHAUSTIVE_VERIFY_MAX_BITS: u32 = 12;

/// One `(M, C, method)` measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub bits: u32,
    pub modulus: String,
    pub multiplier: String,
    pub method: String,
    pub toffoli: u64,
    pub cnot: u64,
    pub depth: u64,
    pub ops: usize,
    pub qubits: u64,
    pub seconds: f64,
    pub model_hash: String,
    /// Set when synthesis or verification failed; the counts are then zero.
    #[serde(default)]
    pub error: Option<String>,
}

impl BenchRecord {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub bits: Vec<u32>,
    /// Explicit moduli; replaces enumeration by width when set.
    pub moduli: Option<Vec<Modulus>>,
    /// Multipliers per modulus; `None` applies the width-based default.
    pub multiplier_cap: Option<usize>,
    /// Multipliers are taken in ascending order from here.
    pub first_multiplier: u64,
    pub methods: Vec<Method>,
    /// Worker threads; 0 uses all cores.
    pub jobs: usize,
    pub synthesis: SynthesisConfig,
    pub depth_model: DepthModel,
    pub optimal: OptimalConfig,
    pub cache_dir: Option<PathBuf>,
    /// When false the seconds column is zero, making output byte-stable.
    pub record_timing: bool,
    pub verify_samples: usize,
    pub verify_seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            bits: vec![7],
            moduli: None,
            multiplier_cap: None,
            first_multiplier: 2,
            methods: vec![Method::Heuristic, Method::Baseline],
            jobs: 0,
            synthesis: SynthesisConfig::default(),
            depth_model: DepthModel::default(),
            optimal: OptimalConfig::default(),
            cache_dir: None,
            record_timing: true,
            verify_samples: 256,
            verify_seed: 1,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.synthesis.validate()?;
        if self.methods.is_empty() {
            return Err(Error::Config("no methods selected".into()));
        }
        if self.first_multiplier < 1 {
            return Err(Error::Config("multipliers start at 1".into()));
        }
        if self.methods.contains(&Method::Optimal) {
            let widest = match &self.moduli {
                Some(list) => list.iter().map(Modulus::bits).max().unwrap_or(0),
                None => self.bits.iter().copied().max().unwrap_or(0),
            };
            if widest > self.optimal.max_bits {
                return Err(Error::ModulusTooLarge { bits: widest, cap: self.optimal.max_bits });
            }
        }
        Ok(())
    }

    /// Moduli in sweep order.
    pub fn sweep_moduli(&self) -> Result<Vec<Modulus>> {
        if let Some(list) = &self.moduli {
            return Ok(list.clone());
        }
        let mut out = Vec::new();
        for &bits in &self.bits {
            if bits <= ENUMERATED_MAX_BITS {
                out.extend(enumerate_semiprimes(bits)?);
            } else {
                out.push(ranked_semiprime(bits)?);
            }
        }
        Ok(out)
    }

    /// Multipliers swept for one modulus, ascending.
    pub fn sweep_multipliers(&self, m: &Modulus) -> Result<Vec<Multiplier>> {
        let cap = match self.multiplier_cap {
            Some(cap) => cap,
            None if m.bits() <= ALL_MULTIPLIERS_MAX_BITS => usize::MAX,
            None if m.bits() < SINGLE_MULTIPLIER_MIN_BITS => DEFAULT_MULTIPLIER_CAP,
            None => return Ok(vec![Multiplier::new(neg_inverse_small(17, m)?, m)?]),
        };
        let one = BigUint::one();
        let mut out = Vec::new();
        let mut c = BigUint::from(self.first_multiplier);
        while out.len() < cap && &c < m.value() {
            if gcd(&c, m.value()) == one {
                out.push(Multiplier::new(c.clone(), m)?);
            }
            c += 1u32;
        }
        Ok(out)
    }

    /// Hash of every setting that changes a record besides `(M, C, method)`.
    pub fn fingerprint(&self) -> String {
        let s = &self.synthesis;
        let canonical = serde_json::to_string(&(
            s.cost_model.hash(),
            s.lookahead_depth,
            s.value_cap,
            s.use_special_cases,
            &self.depth_model,
            self.optimal.allow_neg,
            self.record_timing,
        ))
        .expect("plain data serializes");
        hex::encode(&Sha256::digest(canonical.as_bytes())[..8])
    }
}

/// Qubits of one multiplication block: two registers plus the adder's
/// ancillae.
pub fn block_qubits(n: u32, depth_model: &DepthModel) -> u64 {
    2 * n as u64 + depth_model.adder_ancillae(n)
}

struct Measured {
    circuit: BlockCircuit,
    seconds: f64,
}

fn measure(
    cfg: &SweepConfig,
    m: &Modulus,
    c: &Multiplier,
    method: Method,
    search: Option<&(Arc<OptimalSearch>, f64)>,
) -> Result<Measured> {
    let start = Instant::now();
    let (circuit, extra) = match (method, search) {
        // the shared search time is split evenly across the modulus's rows
        (Method::Optimal, Some((search, share))) => (search.circuit(c)?, *share),
        _ => (synthesize_with(method, c, m, &cfg.synthesis)?, 0.0),
    };
    let seconds = start.elapsed().as_secs_f64() + extra;
    Ok(Measured { circuit, seconds })
}

fn record_for(
    cfg: &SweepConfig,
    m: &Modulus,
    c: &Multiplier,
    method: Method,
    search: Option<&(Arc<OptimalSearch>, f64)>,
) -> BenchRecord {
    let n = m.bits();
    let mut record = BenchRecord {
        bits: n,
        modulus: m.to_string(),
        multiplier: c.to_string(),
        method: method.name().to_string(),
        toffoli: 0,
        cnot: 0,
        depth: 0,
        ops: 0,
        qubits: 0,
        seconds: 0.0,
        model_hash: cfg.synthesis.cost_model.hash(),
        error: None,
    };
    let outcome = (|| -> Result<()> {
        let Measured { circuit, seconds } = measure(cfg, m, c, method, search)?;
        let mode = if n <= EXHAUSTIVE_VERIFY_MAX_BITS.min(EXHAUSTIVE_LIMIT_BITS) {
            VerifyMode::Exhaustive
        } else {
            VerifyMode::Sampled { count: cfg.verify_samples, seed: cfg.verify_seed }
        };
        let report = verify(&circuit, mode)?;
        if !report.ok() {
            return Err(Error::InvariantViolation(format!(
                "verification failed on {} of {} inputs",
                report.failure_count, report.tested
            )));
        }
        let gates = circuit_cost(&circuit, &cfg.synthesis.cost_model)?;
        record.toffoli = gates.toffoli;
        record.cnot = gates.cnot;
        record.depth = circuit_depth(&circuit, &cfg.depth_model)?;
        record.ops = circuit.arithmetic_ops();
        record.qubits = block_qubits(n, &cfg.depth_model);
        if cfg.record_timing {
            record.seconds = seconds;
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        record = BenchRecord { error: Some(e.to_string()), ..record };
        record.toffoli = 0;
        record.cnot = 0;
        record.depth = 0;
        record.ops = 0;
        record.qubits = 0;
        record.seconds = 0.0;
    }
    record
}

fn run_sweep(cfg: &SweepConfig) -> Result<Vec<BenchRecord>> {
    let fingerprint = cfg.fingerprint();
    let mut records = Vec::new();
    for m in cfg.sweep_moduli()? {
        let multipliers = cfg.sweep_multipliers(&m)?;
        let search = if cfg.methods.contains(&Method::Optimal) && !multipliers.is_empty() {
            let start = Instant::now();
            let search = OptimalSearch::run(&m, &cfg.synthesis.cost_model, &cfg.optimal)?;
            let share = start.elapsed().as_secs_f64() / multipliers.len() as f64;
            Some((Arc::new(search), share))
        } else {
            None
        };
        log::info!("sweeping M={m} ({} bits), {} multipliers", m.bits(), multipliers.len());
        let tasks: Vec<(&Multiplier, Method)> =
            multipliers.iter().flat_map(|c| cfg.methods.iter().map(move |&method| (c, method))).collect();
        let batch: Vec<BenchRecord> = tasks
            .par_iter()
            .map(|&(c, method)| {
                let key = cache_key(&m, c, method, &fingerprint);
                if let Some(dir) = &cfg.cache_dir {
                    match cache_lookup(dir, &key) {
                        Ok(Some(hit)) => return hit,
                        Ok(None) => {}
                        Err(e) => log::warn!("cache entry {} ignored: {e}", key.file_name()),
                    }
                }
                let record = record_for(cfg, &m, c, method, search.as_ref());
                if let (Some(dir), true) = (&cfg.cache_dir, record.is_ok()) {
                    if let Err(e) = cache_store(dir, &key, &record) {
                        log::warn!("cache store failed for {}: {e}", key.file_name());
                    }
                }
                record
            })
            .collect();
        records.extend(batch);
    }
    Ok(records)
}

/// Runs the sweep. Records come back ordered by modulus, multiplier and
/// method; per-record failures are reported in the record's error field.
pub fn bench_sweep(cfg: &SweepConfig) -> Result<Vec<BenchRecord>> {
    cfg.validate()?;
    if let Some(dir) = &cfg.cache_dir {
        std::fs::create_dir_all(dir)?;
    }
    if cfg.jobs == 0 {
        return run_sweep(cfg);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_sweep(cfg))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> SweepConfig {
        SweepConfig {
            bits: vec![7],
            methods: vec![Method::Heuristic, Method::Baseline, Method::Optimal],
            record_timing: false,
            ..Default::default()
        }
    }

    #[test]
    fn seven_bit_sweep_shape() {
        let cfg = small_cfg();
        let moduli = cfg.sweep_moduli().unwrap();
        assert_eq!(moduli.len(), 7);
        let expected: usize = moduli.iter().map(|m| cfg.sweep_multipliers(m).unwrap().len() * 3).sum();
        let records = bench_sweep(&cfg).unwrap();
        assert_eq!(records.len(), expected);
        assert!(records.iter().all(BenchRecord::is_ok));
        for chunk in records.chunks(3) {
            assert_eq!(chunk[0].multiplier, chunk[2].multiplier);
            assert!(chunk[0].toffoli >= chunk[2].toffoli, "{chunk:?}");
        }
    }

    #[test]
    fn multiplier_policy() {
        let cfg = SweepConfig::default();
        let m = Modulus::from_u64(21).unwrap();
        let cs: Vec<String> = cfg.sweep_multipliers(&m).unwrap().iter().map(|c| c.to_string()).collect();
        assert_eq!(cs, ["2", "4", "5", "8", "10", "11", "13", "16", "17", "19", "20"]);
        let capped = SweepConfig { multiplier_cap: Some(3), first_multiplier: 5, ..Default::default() };
        let cs: Vec<String> = capped.sweep_multipliers(&m).unwrap().iter().map(|c| c.to_string()).collect();
        assert_eq!(cs, ["5", "8", "10"]);
        let wide = ranked_semiprime(128).unwrap();
        let only = cfg.sweep_multipliers(&wide).unwrap();
        assert_eq!(only.len(), 1);
        assert_eq!(only[0].value(), &neg_inverse_small(17, &wide).unwrap());
    }

    #[test]
    fn optimal_outside_cap_rejected() {
        let cfg = SweepConfig { bits: vec![13], methods: vec![Method::Optimal], ..Default::default() };
        assert!(matches!(bench_sweep(&cfg), Err(Error::ModulusTooLarge { .. })));
    }

    #[test]
    fn errors_are_captured() {
        // Euclid on (M, 2) for a wide M needs about M/2 subtractions
        let m = ranked_semiprime(64).unwrap();
        let cfg = SweepConfig {
            moduli: Some(vec![m]),
            multiplier_cap: Some(1),
            methods: vec![Method::Euclid, Method::Heuristic],
            record_timing: false,
            verify_samples: 8,
            ..Default::default()
        };
        let records = bench_sweep(&cfg).unwrap();
        assert_eq!(records.len(), 2);
        assert!(records[0].error.as_deref().unwrap().contains("exceeded"));
        assert_eq!(records[0].toffoli, 0);
        assert!(records[1].is_ok());
    }

    #[test]
    fn sweep_with_cache_matches() {
        let dir = tempfile::tempdir().unwrap();
        let plain = SweepConfig {
            bits: vec![8],
            multiplier_cap: Some(6),
            record_timing: false,
            ..Default::default()
        };
        let cached = SweepConfig { cache_dir: Some(dir.path().to_path_buf()), ..plain.clone() };
        let a = bench_sweep(&plain).unwrap();
        let b = bench_sweep(&cached).unwrap();
        let c = bench_sweep(&cached).unwrap();
        assert_eq!(a, b);
        assert_eq!(b, c);
    }

    #[test]
    fn fingerprint_tracks_model() {
        let a = SweepConfig::default();
        let mut b = SweepConfig::default();
        b.synthesis.cost_model.toffoli.insert(crate::circuit::Opcode::Add, crate::circuit::Affine::new(4, 0));
        assert_ne!(a.fingerprint(), b.fingerprint());
    }
}
