//! Exhaustive sweeps over small parameter ranges.

use num_bigint::BigUint;

use gcdsynth::numtheory::{enumerate_semiprimes, gcd};
use gcdsynth::optimal::{OptimalConfig, OptimalSearch};
use gcdsynth::synthesis::{baseline_synthesize, binary_gcd_trace, lookahead_trace, synthesize};
use gcdsynth::{circuit_cost, CostModel, Modulus, Multiplier, SynthesisConfig};

fn trial_factor(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        while n % p == 0 {
            out.push(p);
            n /= p;
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn coprime_multipliers(m: u64) -> impl Iterator<Item = u64> {
    (2..m).filter(move |c| gcd(&BigUint::from(*c), &BigUint::from(m)) == BigUint::from(1u32))
}

#[test]
fn semiprime_sets_are_well_formed() {
    for bits in 7..=12 {
        let set = enumerate_semiprimes(bits).unwrap();
        assert!(!set.is_empty());
        for m in set {
            let v = m.as_u64().unwrap();
            assert_eq!(64 - v.leading_zeros(), bits);
            let f = trial_factor(v);
            assert_eq!(f.len(), 2, "{v}");
            assert!(f[0] != f[1] && f[0] >= 5, "{v}");
        }
    }
}

#[test]
fn lookahead_never_costs_more_than_binary() {
    let model = CostModel::default();
    let cfg = SynthesisConfig::default();
    for m in (5u64..1024).step_by(2) {
        let mb = BigUint::from(m);
        let n = 64 - m.leading_zeros();
        for c in coprime_multipliers(m) {
            let cb = BigUint::from(c);
            let look = lookahead_trace(&mb, &cb, &cfg).unwrap().cost(&model, n).unwrap();
            let bin = binary_gcd_trace(&mb, &cb).unwrap().cost(&model, n).unwrap();
            assert!(look <= bin, "M={m} C={c}: {look} > {bin}");
        }
    }
}

#[test]
fn optimal_is_a_floor() {
    let model = CostModel::default();
    let cfg = SynthesisConfig::default();
    for m in (5u64..1024).step_by(2) {
        let modulus = Modulus::from_u64(m).unwrap();
        let search = OptimalSearch::run(&modulus, &model, &OptimalConfig::default()).unwrap();
        for c in coprime_multipliers(m) {
            let mult = Multiplier::from_u64(c, &modulus).unwrap();
            let floor = search.cost(c).unwrap();
            let heuristic = circuit_cost(&synthesize(&mult, &modulus, &cfg).unwrap(), &model).unwrap().toffoli;
            let baseline = circuit_cost(&baseline_synthesize(&mult, &modulus).unwrap(), &model).unwrap().toffoli;
            assert!(floor <= heuristic && floor <= baseline, "M={m} C={c}: {floor} {heuristic} {baseline}");
        }
    }
}
