//! Exact integer utilities: GCD, inverses, powers, special multiplier forms,
//! and generation of benchmark moduli.

use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An odd modulus `M >= 3` together with its bit width.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Modulus {
    value: BigUint,
    bits: u32,
}

impl Modulus {
    pub fn new(value: BigUint) -> Result<Self> {
        if value < BigUint::from(3u32) || value.is_even() {
            return Err(Error::InvalidModulus(value.to_string()));
        }
        let bits = value.bits() as u32;
        Ok(Self { value, bits })
    }

    pub fn from_u64(value: u64) -> Result<Self> {
        Self::new(BigUint::from(value))
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }

    /// `n`, the index of the highest set bit plus one.
    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// The value as a machine word, when it fits.
    pub fn as_u64(&self) -> Option<u64> {
        self.value.to_u64()
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.value.fmt(f)
    }
}

impl fmt::Debug for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Modulus({})", self.value)
    }
}

/// A multiplier `C` in `[1, M)` coprime to its modulus.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Multiplier(BigUint);

impl Multiplier {
    pub fn new(value: BigUint, modulus: &Modulus) -> Result<Self> {
        if value.is_zero() || &value >= modulus.value() {
            return Err(Error::MultiplierOutOfRange {
                multiplier: value.to_string(),
                modulus: modulus.to_string(),
            });
        }
        if !gcd(&value, modulus.value()).is_one() {
            return Err(Error::NotCoprime(value.to_string(), modulus.to_string()));
        }
        Ok(Self(value))
    }

    pub fn from_u64(value: u64, modulus: &Modulus) -> Result<Self> {
        Self::new(BigUint::from(value), modulus)
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }
}

impl fmt::Display for Multiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Debug for Multiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Multiplier({})", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SpecialKind {
    /// `C = 2^k`
    PowerOfTwo,
    /// `C * 2^k = 1`
    InversePowerOfTwo,
    /// `-C = 2^k`
    NegPowerOfTwo,
    /// `-C * 2^k = 1`
    NegInversePowerOfTwo,
}

impl SpecialKind {
    pub const ALL: [SpecialKind; 4] = [
        SpecialKind::PowerOfTwo,
        SpecialKind::InversePowerOfTwo,
        SpecialKind::NegPowerOfTwo,
        SpecialKind::NegInversePowerOfTwo,
    ];

    pub fn is_negated(self) -> bool {
        matches!(self, SpecialKind::NegPowerOfTwo | SpecialKind::NegInversePowerOfTwo)
    }

    pub fn is_inverse(self) -> bool {
        matches!(self, SpecialKind::InversePowerOfTwo | SpecialKind::NegInversePowerOfTwo)
    }
}

/// A multiplier that is a (possibly negated) power of two or inverse power
/// of two modulo `M`. These get a direct doubling/halving circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpecialForm {
    pub kind: SpecialKind,
    pub exponent: u32,
}

impl SpecialForm {
    /// The residue this form denotes modulo `m`.
    pub fn multiplier(&self, m: &Modulus) -> BigUint {
        let two = BigUint::from(2u32);
        let power = two.modpow(&BigUint::from(self.exponent), m.value());
        let base = if self.kind.is_inverse() {
            mod_inverse(&power, m).expect("2 is invertible modulo an odd modulus")
        } else {
            power
        };
        if self.kind.is_negated() {
            (m.value() - base) % m.value()
        } else {
            base
        }
    }
}

pub fn gcd(a: &BigUint, b: &BigUint) -> BigUint {
    a.gcd(b)
}

/// Least positive `d` with `c·d = 1 (mod m)`, by extended Euclid.
pub fn mod_inverse(c: &BigUint, m: &Modulus) -> Result<BigUint> {
    let modulus = BigInt::from_biguint(Sign::Plus, m.value().clone());
    let value = BigInt::from_biguint(Sign::Plus, c % m.value());
    let ext = value.extended_gcd(&modulus);
    if !ext.gcd.is_one() {
        return Err(Error::NotInvertible(c.to_string(), m.to_string()));
    }
    let d = ext.x.mod_floor(&modulus);
    Ok(d.to_biguint().expect("mod_floor by a positive modulus is non-negative"))
}

pub fn pow_mod(base: &BigUint, exponent: &BigUint, m: &Modulus) -> BigUint {
    base.modpow(exponent, m.value())
}

/// `(-1/k) mod m`, the multiplier used for large-width spot checks.
pub fn neg_inverse_small(k: u64, m: &Modulus) -> Result<BigUint> {
    let inv = mod_inverse(&BigUint::from(k), m)?;
    Ok((m.value() - inv) % m.value())
}

/// Scans `k = 0 .. 2n-1`, trying the four kinds in declaration order at each
/// `k`, and returns the first match.
pub fn detect_special(c: &Multiplier, m: &Modulus) -> Option<SpecialForm> {
    let modulus = m.value();
    // 2^-1 mod M for odd M
    let half = (modulus + 1u32) >> 1;
    let mut power = BigUint::one();
    let mut inverse = BigUint::one();
    for k in 0..2 * m.bits() {
        let neg_power = (modulus - &power) % modulus;
        let neg_inverse = (modulus - &inverse) % modulus;
        let candidates = [&power, &inverse, &neg_power, &neg_inverse];
        for (kind, value) in SpecialKind::ALL.iter().zip(candidates) {
            if value == c.value() {
                return Some(SpecialForm { kind: *kind, exponent: k });
            }
        }
        power = (power << 1u32) % modulus;
        inverse = (inverse * &half) % modulus;
    }
    None
}

const SMALL_PRIMES: [u32; 24] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
];

/// Miller-Rabin with a fixed witness schedule. The first twelve prime bases
/// make it deterministic below 2^64; above that all 24 bases are used.
pub fn is_prime(n: &BigUint) -> bool {
    if n < &BigUint::from(2u32) {
        return false;
    }
    for &p in SMALL_PRIMES.iter() {
        let p = BigUint::from(p);
        if n == &p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }
    let one = BigUint::one();
    let n_minus_one = n - &one;
    let s = n_minus_one.trailing_zeros().unwrap_or(0);
    let d = &n_minus_one >> s;
    let witnesses = if n.bits() <= 64 { &SMALL_PRIMES[..12] } else { &SMALL_PRIMES[..] };
    'witness: for &a in witnesses {
        let mut x = BigUint::from(a).modpow(&d, n);
        if x == one || x == n_minus_one {
            continue;
        }
        for _ in 1..s {
            x = (&x * &x) % n;
            if x == n_minus_one {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// The `rank`-th largest prime `p` with `2^(bits-1) <= p < 2^bits`.
pub fn nth_largest_prime(bits: u32, rank: usize) -> Result<BigUint> {
    if bits < 2 || rank == 0 {
        return Err(Error::RankOutOfRange { bits, rank });
    }
    let low = BigUint::one() << (bits - 1);
    let mut candidate = (BigUint::one() << bits) - 1u32;
    let mut found = 0;
    while candidate >= low {
        if is_prime(&candidate) {
            found += 1;
            if found == rank {
                return Ok(candidate);
            }
        }
        if candidate.is_zero() {
            break;
        }
        candidate -= 1u32;
    }
    Err(Error::RankOutOfRange { bits, rank })
}

fn sieve(limit: usize) -> Vec<usize> {
    let mut composite = vec![false; limit + 1];
    let mut primes = Vec::new();
    for i in 2..=limit {
        if !composite[i] {
            primes.push(i);
            let mut j = i * i;
            while j <= limit {
                composite[j] = true;
                j += i;
            }
        }
    }
    primes
}

/// All `M = p·q` with distinct primes `5 <= p < q` and `2^(n-1) <= M < 2^n`,
/// ascending.
pub fn enumerate_semiprimes(bits: u32) -> Result<Vec<Modulus>> {
    if !(5..=20).contains(&bits) {
        return Err(Error::Config(format!(
            "semiprime enumeration supports 5..=20 bits, got {bits}"
        )));
    }
    let low = 1usize << (bits - 1);
    let high = 1usize << bits;
    let primes: Vec<usize> = sieve(high / 5).into_iter().filter(|&p| p >= 5).collect();
    let mut out = Vec::new();
    for (i, &p) in primes.iter().enumerate() {
        if p * p >= high {
            break;
        }
        for &q in &primes[i + 1..] {
            let m = p * q;
            if m >= high {
                break;
            }
            if m >= low {
                out.push(m);
            }
        }
    }
    out.sort_unstable();
    out.into_iter().map(|m| Modulus::from_u64(m as u64)).collect()
}

/// The modulus used for wide benchmark rows: the product of the largest and
/// the tenth-largest `bits/2`-bit primes.
pub fn ranked_semiprime(bits: u32) -> Result<Modulus> {
    if bits % 2 != 0 || bits < 8 {
        return Err(Error::Config(format!(
            "ranked semiprimes need an even width of at least 8 bits, got {bits}"
        )));
    }
    let p = nth_largest_prime(bits / 2, 1)?;
    let q = nth_largest_prime(bits / 2, 10)?;
    Modulus::new(p * q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    fn m(v: u64) -> Modulus {
        Modulus::from_u64(v).unwrap()
    }

    #[test]
    fn gcd_examples() {
        assert_eq!(gcd(&big(21), &big(13)), big(1));
        assert_eq!(gcd(&big(7), &big(7)), big(7));
        assert_eq!(gcd(&big(1017), &big(7)), big(1));
    }

    #[test]
    fn modulus_rejects_even_and_small() {
        assert!(Modulus::from_u64(1).is_err());
        assert!(Modulus::from_u64(20).is_err());
        let m21 = m(21);
        assert_eq!(m21.bits(), 5);
        assert_eq!(m(1011113).bits(), 20);
    }

    #[test]
    fn multiplier_requires_coprime_and_range() {
        let m21 = m(21);
        assert!(Multiplier::from_u64(13, &m21).is_ok());
        assert!(matches!(Multiplier::from_u64(7, &m21), Err(Error::NotCoprime(..))));
        assert!(Multiplier::from_u64(0, &m21).is_err());
        assert!(Multiplier::from_u64(21, &m21).is_err());
    }

    #[test]
    fn mod_inverse_examples() {
        // 569 * 1777 = 1011113
        assert_eq!(mod_inverse(&big(13), &m(1011113)).unwrap(), big(77778));
        assert_eq!(mod_inverse(&big(1), &m(21)).unwrap(), big(1));
        assert_eq!(mod_inverse(&big(13), &m(21)).unwrap(), big(13));
        assert!(matches!(mod_inverse(&big(7), &m(21)), Err(Error::NotInvertible(..))));
    }

    #[test]
    fn pow_mod_examples() {
        let m21 = m(21);
        assert_eq!(pow_mod(&big(2), &big(8), &m21), big(4));
        assert_eq!(pow_mod(&big(2), &big(0), &m21), big(1));
        assert_eq!(pow_mod(&big(2), &big(2), &m21), big(4));
    }

    #[test]
    fn detect_special_examples() {
        let m21 = m(21);
        let c = |v| Multiplier::from_u64(v, &m21).unwrap();
        assert_eq!(
            detect_special(&c(2), &m21),
            Some(SpecialForm { kind: SpecialKind::PowerOfTwo, exponent: 1 })
        );
        assert_eq!(
            detect_special(&c(11), &m21),
            Some(SpecialForm { kind: SpecialKind::InversePowerOfTwo, exponent: 1 })
        );
        // 13 = -8 = -(2^3) mod 21
        assert_eq!(
            detect_special(&c(13), &m21),
            Some(SpecialForm { kind: SpecialKind::NegPowerOfTwo, exponent: 3 })
        );
        assert_eq!(
            detect_special(&c(20), &m21),
            Some(SpecialForm { kind: SpecialKind::NegPowerOfTwo, exponent: 0 })
        );
    }

    #[test]
    fn detect_special_none_when_outside_orbit() {
        // 2 has order 5 mod 31, so ±2^k covers only ten residues.
        let m31 = m(31);
        assert_eq!(detect_special(&Multiplier::from_u64(3, &m31).unwrap(), &m31), None);
    }

    #[test]
    fn detect_special_matches_scan_oracle() {
        for modulus in [21u64, 35, 65, 77, 91, 253, 1017] {
            let md = m(modulus);
            let n = md.bits() as u64;
            for c in 1..modulus {
                let Ok(mult) = Multiplier::from_u64(c, &md) else { continue };
                // Oracle: brute-force the four congruences directly in u64.
                let mut expected = None;
                'scan: for k in 0..2 * n {
                    let p = (0..k).fold(1u64, |acc, _| acc * 2 % modulus);
                    for (kind, hit) in [
                        (SpecialKind::PowerOfTwo, c == p),
                        (SpecialKind::InversePowerOfTwo, c * p % modulus == 1),
                        (SpecialKind::NegPowerOfTwo, (modulus - c) == p),
                        (SpecialKind::NegInversePowerOfTwo, (modulus - c) * p % modulus == 1),
                    ] {
                        if hit {
                            expected = Some(SpecialForm { kind, exponent: k as u32 });
                            break 'scan;
                        }
                    }
                }
                let found = detect_special(&mult, &md);
                assert_eq!(found, expected, "M={modulus} C={c}");
                if let Some(form) = found {
                    assert_eq!(form.multiplier(&md), big(c));
                }
            }
        }
    }

    #[test]
    fn semiprimes_small_widths() {
        let seven: Vec<u64> =
            enumerate_semiprimes(7).unwrap().iter().map(|m| m.as_u64().unwrap()).collect();
        assert_eq!(seven, vec![65, 77, 85, 91, 95, 115, 119]);
        let eight = enumerate_semiprimes(8).unwrap();
        assert_eq!(eight.len(), 16);
        assert_eq!(eight.first().unwrap().as_u64(), Some(133));
        assert_eq!(eight.last().unwrap().as_u64(), Some(253));
    }

    #[test]
    fn semiprimes_match_trial_division() {
        for bits in 7..=10u32 {
            let mut oracle = Vec::new();
            for v in (1u64 << (bits - 1))..(1u64 << bits) {
                let mut rest = v;
                let mut factors = Vec::new();
                let mut d = 2;
                while d * d <= rest {
                    while rest % d == 0 {
                        factors.push(d);
                        rest /= d;
                    }
                    d += 1;
                }
                if rest > 1 {
                    factors.push(rest);
                }
                if factors.len() == 2 && factors[0] != factors[1] && factors[0] >= 5 {
                    oracle.push(v);
                }
            }
            let got: Vec<u64> =
                enumerate_semiprimes(bits).unwrap().iter().map(|m| m.as_u64().unwrap()).collect();
            assert_eq!(got, oracle, "bits={bits}");
        }
    }

    #[test]
    fn ranked_primes() {
        assert_eq!(nth_largest_prime(8, 1).unwrap(), big(251));
        assert_eq!(nth_largest_prime(8, 10).unwrap(), big(197));
        assert_eq!(nth_largest_prime(3, 1).unwrap(), big(7));
        assert_eq!(nth_largest_prime(16, 1).unwrap(), big(65536 - 15));
        assert_eq!(nth_largest_prime(16, 10).unwrap(), big(65536 - 123));
        assert!(matches!(nth_largest_prime(3, 3), Err(Error::RankOutOfRange { .. })));
        assert_eq!(ranked_semiprime(16).unwrap().as_u64(), Some(49447));
    }

    #[test]
    fn ranked_primes_wide() {
        let two = BigUint::from(2u32);
        assert_eq!(nth_largest_prime(32, 1).unwrap(), two.pow(32) - 5u32);
        assert_eq!(nth_largest_prime(32, 10).unwrap(), two.pow(32) - 267u32);
        assert_eq!(nth_largest_prime(64, 1).unwrap(), two.pow(64) - 59u32);
        assert_eq!(nth_largest_prime(64, 10).unwrap(), two.pow(64) - 363u32);
        assert_eq!(nth_largest_prime(128, 1).unwrap(), two.pow(128) - 159u32);
        assert_eq!(nth_largest_prime(128, 10).unwrap(), two.pow(128) - 1193u32);
    }

    #[test]
    fn primality_against_sieve() {
        let primes = sieve(5000);
        for v in 0..5000usize {
            assert_eq!(is_prime(&BigUint::from(v)), primes.binary_search(&v).is_ok(), "{v}");
        }
        // Strong pseudoprime to bases 2..=37 product-free check: 3215031751 = 151·751·28351.
        assert!(!is_prime(&big(3_215_031_751)));
    }

    #[test]
    fn neg_inverse_seventeen() {
        let md = m(49447);
        let c = neg_inverse_small(17, &md).unwrap();
        assert_eq!((c * 17u32 + 1u32) % md.value(), BigUint::zero());
    }
}
