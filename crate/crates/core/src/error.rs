use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid modulus {0}: must be odd and at least 3")]
    InvalidModulus(String),
    #[error("multiplier {multiplier} is out of range for modulus {modulus}")]
    MultiplierOutOfRange { multiplier: String, modulus: String },
    #[error("{0} and {1} are not coprime")]
    NotCoprime(String, String),
    #[error("{0} is not invertible modulo {1}")]
    NotInvertible(String, String),
    #[error("base {0} is not coprime to modulus {1}")]
    BaseNotCoprime(String, String),
    #[error("fewer than {rank} primes with {bits} bits")]
    RankOutOfRange { bits: u32, rank: usize },
    #[error("no cost entry for opcode {0}")]
    UnknownOpcode(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error("FANOUT applied with a nonzero second register")]
    FanoutOnNonzero,
    #[error("modulus of {bits} bits exceeds the optimal-search cap of {cap} bits")]
    ModulusTooLarge { bits: u32, cap: u32 },
    #[error("trace exceeded {0} moves")]
    TraceTooLong(usize),
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("records mix cost models {0} and {1}")]
    MixedModels(String, String),
    #[error("corrupt cache entry {0}")]
    CacheCorrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
