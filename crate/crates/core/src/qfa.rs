//! Measure-once one-way quantum finite automata.
//!
//! [`Mo1Qfa`] is the general model: a finite alphabet, one unitary per
//! symbol, an initial state and a projector onto the accepting subspace.
//! [`make_modp_qfa`] builds the two-state automaton for the unary language
//! of words whose length is divisible by a prime `p`, where every symbol
//! rotates the qubit about the x axis by `k * 4pi / p`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Entrywise tolerance for unitarity, normalisation and projector checks.
pub const MATRIX_TOL: f64 = 1e-12;

/// The single input symbol of the unary MOD^p language.
pub const MODP_SYMBOL: char = 'a';

/// Parameters of the MOD^p automaton: the prime modulus and the rotation multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModpSpec {
    p: u64,
    k: u64,
}

impl ModpSpec {
    pub fn new(p: u64, k: u64) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        check_multiplier(p, k)?;
        Ok(Self { p, k })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    /// Rotation angle applied per symbol, `k * 4pi / p`.
    pub fn rotation_angle(&self) -> f64 {
        self.k as f64 * 4.0 * PI / self.p as f64
    }
}

fn check_multiplier(p: u64, k: u64) -> Result<()> {
    if k == 0 || k >= p {
        return Err(Error::MultiplierOutOfRange { k, max: p - 1 });
    }
    Ok(())
}

/// Deterministic trial division.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Amplitudes of an automaton state.
#[derive(Debug, Clone, PartialEq)]
pub struct QfaStateVector {
    pub amplitudes: DVector<Complex64>,
}

impl QfaStateVector {
    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn dimension(&self) -> usize {
        self.amplitudes.len()
    }
}

/// A measure-once one-way quantum finite automaton.
#[derive(Debug, Clone)]
pub struct Mo1Qfa {
    alphabet: Vec<char>,
    transitions: Vec<DMatrix<Complex64>>,
    initial_state: DVector<Complex64>,
    accepting_projector: DMatrix<Complex64>,
}

impl Mo1Qfa {
    /// Builds an automaton, checking that every transition is unitary, the
    /// initial state is normalised, and the projector is Hermitian and idempotent.
    pub fn new(
        alphabet: Vec<char>,
        transitions: Vec<DMatrix<Complex64>>,
        initial_state: DVector<Complex64>,
        accepting_projector: DMatrix<Complex64>,
    ) -> Result<Self> {
        let dim = initial_state.len();
        if dim == 0 {
            return Err(Error::InvalidAutomaton("dimension must be positive".into()));
        }
        if alphabet.len() != transitions.len() {
            return Err(Error::InvalidAutomaton(format!(
                "{} symbols but {} transition matrices",
                alphabet.len(),
                transitions.len()
            )));
        }
        for (i, s) in alphabet.iter().enumerate() {
            if alphabet[..i].contains(s) {
                return Err(Error::InvalidAutomaton(format!("duplicate symbol {s:?}")));
            }
        }
        let id = DMatrix::<Complex64>::identity(dim, dim);
        for (s, u) in alphabet.iter().zip(&transitions) {
            if u.shape() != (dim, dim) {
                return Err(Error::InvalidAutomaton(format!(
                    "transition for {s:?} has shape {:?}, expected ({dim}, {dim})",
                    u.shape()
                )));
            }
            if max_abs_diff(&(u * u.adjoint()), &id) > MATRIX_TOL {
                return Err(Error::InvalidAutomaton(format!(
                    "transition for {s:?} is not unitary"
                )));
            }
        }
        if (initial_state.norm() - 1.0).abs() > MATRIX_TOL {
            return Err(Error::InvalidAutomaton(format!(
                "initial state has norm {}",
                initial_state.norm()
            )));
        }
        let proj = &accepting_projector;
        if proj.shape() != (dim, dim) {
            return Err(Error::InvalidAutomaton("projector has the wrong shape".into()));
        }
        if max_abs_diff(proj, &proj.adjoint()) > MATRIX_TOL {
            return Err(Error::InvalidAutomaton("projector is not Hermitian".into()));
        }
        if max_abs_diff(&(proj * proj), proj) > MATRIX_TOL {
            return Err(Error::InvalidAutomaton("projector is not idempotent".into()));
        }
        Ok(Self {
            alphabet,
            transitions,
            initial_state,
            accepting_projector,
        })
    }

    pub fn dimension(&self) -> usize {
        self.initial_state.len()
    }

    pub fn alphabet(&self) -> &[char] {
        &self.alphabet
    }

    pub fn transition(&self, symbol: char) -> Option<&DMatrix<Complex64>> {
        self.symbol_index(symbol).map(|i| &self.transitions[i])
    }

    pub fn initial_state(&self) -> &DVector<Complex64> {
        &self.initial_state
    }

    pub fn accepting_projector(&self) -> &DMatrix<Complex64> {
        &self.accepting_projector
    }

    fn symbol_index(&self, symbol: char) -> Option<usize> {
        self.alphabet.iter().position(|&s| s == symbol)
    }

    /// Applies the transition of each symbol in tape order.
    pub fn run_word(&self, word: &str) -> Result<QfaStateVector> {
        let indices = word
            .chars()
            .enumerate()
            .map(|(position, symbol)| {
                self.symbol_index(symbol)
                    .ok_or(Error::UnknownSymbol { symbol, position })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut state = self.initial_state.clone();
        for i in indices {
            state = &self.transitions[i] * state;
        }
        Ok(QfaStateVector { amplitudes: state })
    }

    /// `|| P_acc U_W |q0> ||^2`.
    pub fn acceptance_probability(&self, word: &str) -> Result<f64> {
        let state = self.run_word(word)?;
        Ok((&self.accepting_projector * state.amplitudes).norm_squared())
    }
}

fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// The two-state MOD^p automaton: start and accept in `|0>`, rotate about x per symbol.
pub fn make_modp_qfa(spec: ModpSpec) -> Mo1Qfa {
    let half = spec.rotation_angle() / 2.0;
    let c = Complex64::new(half.cos(), 0.0);
    let s = Complex64::new(0.0, -half.sin());
    let u = DMatrix::from_row_slice(2, 2, &[c, s, s, c]);
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let initial = DVector::from_vec(vec![one, zero]);
    let projector = DMatrix::from_row_slice(2, 2, &[one, zero, zero, zero]);
    Mo1Qfa::new(vec![MODP_SYMBOL], vec![u], initial, projector)
        .expect("MOD^p automaton is valid by construction")
}

/// The unary word of the given length.
pub fn unary_word(len: usize) -> String {
    std::iter::repeat_n(MODP_SYMBOL, len).collect()
}

/// Closed-form acceptance probability `cos^2(2 pi k len / p)`.
pub fn modp_expected_probability(spec: ModpSpec, length: u64) -> f64 {
    // Reduce before converting so very long words keep full precision.
    let residue = ((spec.k as u128 * length as u128) % spec.p as u128) as f64;
    (2.0 * PI * residue / spec.p as f64).cos().powi(2)
}

/// Largest false-acceptance probability of the single automaton, reached
/// near lengths `p/2 (mod p)`: `cos^2(pi / p)`.
///
/// Panics if `p < 2`.
pub fn worst_case_false_positive(p: u64) -> f64 {
    assert!(p >= 2, "modulus must be at least 2");
    (PI / p as f64).cos().powi(2)
}

/// Probability that every automaton of a parallel ensemble accepts, each run
/// independently with its own multiplier.
pub fn ensemble_acceptance(p: u64, k_set: &[u64], length: u64) -> Result<f64> {
    if k_set.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let mut prob = 1.0;
    for &k in k_set {
        prob *= modp_expected_probability(ModpSpec::new(p, k)?, length);
    }
    Ok(prob)
}

/// The classical `p`-state cycle automaton for MOD^p.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassicalModpDfa {
    p: u64,
    residue: u64,
}

impl ClassicalModpDfa {
    pub fn new(p: u64) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(Self { p, residue: 0 })
    }

    pub fn residue(&self) -> u64 {
        self.residue
    }

    pub fn step(&mut self) {
        self.residue = if self.residue + 1 == self.p {
            0
        } else {
            self.residue + 1
        };
    }

    pub fn accepts(&self) -> bool {
        self.residue == 0
    }
}

/// Runs the cycle DFA over a unary word of the given length.
///
/// Panics if `p` is not prime.
pub fn classical_membership(p: u64, length: u64) -> bool {
    let mut dfa = ClassicalModpDfa::new(p).expect("modulus must be prime");
    for _ in 0..length {
        dfa.step();
    }
    dfa.accepts()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const PRIMES: [u64; 6] = [2, 3, 5, 7, 11, 13];

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn modp_transition_matches_closed_form() {
        let qfa = make_modp_qfa(ModpSpec::new(11, 1).unwrap());
        let u = qfa.transition('a').unwrap();
        // cos(2pi/11), sin(2pi/11)
        let cos = 0.841_253_532_831_181_2;
        let sin = 0.540_640_817_455_597_6;
        assert!((u[(0, 0)] - c(cos, 0.0)).norm() < 1e-15);
        assert!((u[(0, 1)] - c(0.0, -sin)).norm() < 1e-15);
        assert!((u[(1, 0)] - c(0.0, -sin)).norm() < 1e-15);
        assert!((u[(1, 1)] - c(cos, 0.0)).norm() < 1e-15);
        let id = DMatrix::<Complex64>::identity(2, 2);
        assert!(max_abs_diff(&(u * u.adjoint()), &id) < 1e-12);
    }

    #[test]
    fn p2_is_minus_identity() {
        let qfa = make_modp_qfa(ModpSpec::new(2, 1).unwrap());
        let u = qfa.transition('a').unwrap();
        assert!((u[(0, 0)] - c(-1.0, 0.0)).norm() < 1e-15);
        assert!((u[(1, 1)] - c(-1.0, 0.0)).norm() < 1e-15);
        assert!(u[(0, 1)].norm() < 1e-15 && u[(1, 0)].norm() < 1e-15);
    }

    #[test]
    fn rejects_non_prime_and_bad_multiplier() {
        assert!(matches!(ModpSpec::new(9, 1), Err(Error::NotPrime(9))));
        assert!(matches!(ModpSpec::new(1, 1), Err(Error::NotPrime(1))));
        assert!(matches!(
            ModpSpec::new(11, 0),
            Err(Error::MultiplierOutOfRange { .. })
        ));
        assert!(matches!(
            ModpSpec::new(11, 11),
            Err(Error::MultiplierOutOfRange { .. })
        ));
    }

    #[test]
    fn run_word_cases() {
        let qfa = make_modp_qfa(ModpSpec::new(11, 1).unwrap());
        let empty = qfa.run_word("").unwrap();
        assert_eq!(&empty.amplitudes, qfa.initial_state());

        let one = qfa.run_word("a").unwrap();
        assert!((one.amplitudes[0] - c(0.841_253_532_831_181_2, 0.0)).norm() < 1e-12);
        assert!((one.amplitudes[1] - c(0.0, -0.540_640_817_455_597_6)).norm() < 1e-12);

        let full = qfa.run_word(&unary_word(11)).unwrap();
        // |0> up to global phase
        assert!(full.amplitudes[1].norm() < 1e-9);
        assert!((full.amplitudes[0].norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unknown_symbol_reports_position() {
        let qfa = make_modp_qfa(ModpSpec::new(11, 1).unwrap());
        match qfa.run_word("aab") {
            Err(Error::UnknownSymbol { symbol, position }) => {
                assert_eq!(symbol, 'b');
                assert_eq!(position, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn acceptance_probability_cases() {
        let spec = ModpSpec::new(11, 1).unwrap();
        let qfa = make_modp_qfa(spec);
        assert_eq!(qfa.acceptance_probability("").unwrap(), 1.0);
        let p3 = qfa.acceptance_probability("aaa").unwrap();
        assert!((p3 - 0.020_254).abs() < 1e-5, "{p3}");
        let p11 = qfa.acceptance_probability(&unary_word(11)).unwrap();
        assert!((p11 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn expected_probability_cases() {
        let s11 = ModpSpec::new(11, 1).unwrap();
        assert_eq!(modp_expected_probability(s11, 0), 1.0);
        // cos^2(6pi/11) = 0.0202535131927513...
        assert!((modp_expected_probability(s11, 3) - 0.020_253_513_192_751_305).abs() < 1e-14);
        let s7 = ModpSpec::new(7, 1).unwrap();
        // cos^2(6pi/7) = 0.8117449009293667...
        assert!((modp_expected_probability(s7, 3) - 0.811_744_900_929_366_8).abs() < 1e-14);
    }

    #[test]
    fn worst_case_cases() {
        assert!(worst_case_false_positive(2) < 1e-30);
        assert!((worst_case_false_positive(11) - 0.920_626_766_415_590_6).abs() < 1e-14);
        assert!(worst_case_false_positive(13) > 0.8);
    }

    #[test]
    fn ensemble_cases() {
        let all: Vec<u64> = (1..=10).collect();
        assert_eq!(ensemble_acceptance(11, &all, 22).unwrap(), 1.0);
        assert_eq!(ensemble_acceptance(11, &[3, 7], 0).unwrap(), 1.0);
        // prod_{k=1}^{10} cos^2(2pi k/11) = 4^-10 (high-precision evaluation)
        let prod = ensemble_acceptance(11, &all, 1).unwrap();
        assert!((prod - 2f64.powi(-20)).abs() < 1e-18, "{prod}");
        let single = ensemble_acceptance(11, &[1], 3).unwrap();
        assert!((single - 0.020_254).abs() < 1e-5);
        assert!(matches!(
            ensemble_acceptance(11, &[], 3),
            Err(Error::EmptyEnsemble)
        ));
        assert!(ensemble_acceptance(11, &[11], 3).is_err());
    }

    #[test]
    fn classical_cases() {
        assert!(classical_membership(11, 0));
        assert!(classical_membership(11, 22));
        assert!(!classical_membership(11, 3));
        let mut dfa = ClassicalModpDfa::new(3).unwrap();
        for expected in [1, 2, 0, 1] {
            dfa.step();
            assert_eq!(dfa.residue(), expected);
        }
    }

    #[test]
    fn generic_automaton_validation() {
        let one = c(1.0, 0.0);
        let zero = c(0.0, 0.0);
        let id = DMatrix::<Complex64>::identity(3, 3);
        let not_unitary = DMatrix::from_element(3, 3, one);
        let init = DVector::from_vec(vec![one, zero, zero]);
        let proj = DMatrix::from_diagonal(&DVector::from_vec(vec![one, one, zero]));
        assert!(Mo1Qfa::new(vec!['x', 'y'], vec![id.clone(), id.clone()], init.clone(), proj.clone()).is_ok());
        assert!(Mo1Qfa::new(vec!['x'], vec![not_unitary], init.clone(), proj.clone()).is_err());
        assert!(Mo1Qfa::new(vec!['x', 'x'], vec![id.clone(), id.clone()], init.clone(), proj.clone()).is_err());
        let unnormalised = DVector::from_vec(vec![one, one, zero]);
        assert!(Mo1Qfa::new(vec!['x'], vec![id.clone()], unnormalised, proj.clone()).is_err());
        let bad_proj = DMatrix::from_diagonal(&DVector::from_vec(vec![c(0.5, 0.0), one, zero]));
        assert!(Mo1Qfa::new(vec!['x'], vec![id], init, bad_proj).is_err());
    }

    #[test]
    fn norm_preserved_over_long_words() {
        let qfa = make_modp_qfa(ModpSpec::new(11, 1).unwrap());
        let state = qfa.run_word(&unary_word(10_000)).unwrap();
        assert!((state.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn closed_form_equivalence_small_primes() {
        for p in PRIMES {
            for k in 1..p {
                let spec = ModpSpec::new(p, k).unwrap();
                let qfa = make_modp_qfa(spec);
                for w in 0..=3 * p {
                    let sim = qfa.acceptance_probability(&unary_word(w as usize)).unwrap();
                    let closed = modp_expected_probability(spec, w);
                    assert!((sim - closed).abs() < 1e-9, "p={p} k={k} w={w}");
                }
            }
        }
    }

    #[test]
    fn false_acceptance_peaks_near_half_period() {
        for p in [3u64, 5, 7, 11, 13] {
            let spec = ModpSpec::new(p, 1).unwrap();
            let best = (1..p)
                .max_by(|&a, &b| {
                    modp_expected_probability(spec, a)
                        .total_cmp(&modp_expected_probability(spec, b))
                })
                .unwrap();
            let half = p as f64 / 2.0;
            assert!((best as f64 - half).abs() <= 0.5, "p={p} argmax={best}");
            let peak = modp_expected_probability(spec, best);
            assert!((peak - worst_case_false_positive(p)).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn periodicity(pi in 0usize..6, k_raw in 1u64..13, w in 0u64..200) {
            let p = PRIMES[pi];
            let k = 1 + (k_raw - 1) % (p - 1);
            let spec = ModpSpec::new(p, k).unwrap();
            let qfa = make_modp_qfa(spec);
            let a = qfa.acceptance_probability(&unary_word(w as usize)).unwrap();
            let b = qfa.acceptance_probability(&unary_word((w + p) as usize)).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }

        #[test]
        fn oracle_agreement(pi in 0usize..6, w in 0u64..5000) {
            let p = PRIMES[pi];
            let spec = ModpSpec::new(p, 1).unwrap();
            let member = classical_membership(p, w);
            prop_assert_eq!(member, w % p == 0);
            if member {
                prop_assert!((modp_expected_probability(spec, w) - 1.0).abs() < 1e-9);
            }
        }
    }
}
