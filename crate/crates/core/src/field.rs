//! Prime-field arithmetic over arbitrary-precision integers.
//!
//! Every value is kept as its canonical representative in `[0, p)`. The same
//! code path serves `p = 17` and 2000-bit moduli.

use std::fmt;
use std::sync::{Arc, OnceLock};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};

/// Default Miller-Rabin round count (error probability below `2^-80`).
pub const DEFAULT_MR_ROUNDS: u32 = 40;

/// A prime modulus. Cloning is cheap; clones compare equal by value.
#[derive(Clone)]
pub struct FieldSpec {
    p: Arc<BigUint>,
}

impl FieldSpec {
    /// Builds a field after checking `p` with [`DEFAULT_MR_ROUNDS`] rounds of Miller-Rabin.
    pub fn new(p: BigUint) -> Result<Self> {
        if !is_probable_prime(&p, DEFAULT_MR_ROUNDS) {
            return Err(Error::InvalidPrime(p.to_string()));
        }
        Ok(Self { p: Arc::new(p) })
    }

    /// Skips the primality test; only `p >= 2` is enforced.
    pub fn new_unchecked(p: BigUint) -> Result<Self> {
        if p < BigUint::from(2u32) {
            return Err(Error::InvalidPrime(p.to_string()));
        }
        Ok(Self { p: Arc::new(p) })
    }

    pub fn from_u64(p: u64) -> Result<Self> {
        Self::new(BigUint::from(p))
    }

    pub fn modulus(&self) -> &BigUint {
        &self.p
    }

    pub fn bits(&self) -> u64 {
        self.p.bits()
    }

    /// Reduces `value` into the field.
    pub fn element(&self, value: impl Into<BigUint>) -> FieldElement {
        FieldElement {
            value: self.reduce(value.into()),
            spec: self.clone(),
        }
    }

    pub fn zero(&self) -> FieldElement {
        self.element(0u32)
    }

    pub fn one(&self) -> FieldElement {
        self.element(1u32)
    }

    /// Uniform element of `F_p`.
    pub fn random_element<R: RngCore + ?Sized>(&self, rng: &mut R) -> FieldElement {
        FieldElement {
            value: random_below(&self.p, rng),
            spec: self.clone(),
        }
    }

    pub(crate) fn random_raw<R: RngCore + ?Sized>(&self, rng: &mut R) -> BigUint {
        random_below(&self.p, rng)
    }

    pub(crate) fn reduce(&self, v: BigUint) -> BigUint {
        if v < *self.p {
            v
        } else {
            v % &*self.p
        }
    }

    pub(crate) fn add_raw(&self, a: &BigUint, b: &BigUint) -> BigUint {
        let s = a + b;
        if s >= *self.p {
            s - &*self.p
        } else {
            s
        }
    }

    pub(crate) fn sub_raw(&self, a: &BigUint, b: &BigUint) -> BigUint {
        if a >= b {
            a - b
        } else {
            &*self.p - (b - a)
        }
    }

    pub(crate) fn neg_raw(&self, a: &BigUint) -> BigUint {
        if a.is_zero() {
            BigUint::zero()
        } else {
            &*self.p - a
        }
    }

    pub(crate) fn mul_raw(&self, a: &BigUint, b: &BigUint) -> BigUint {
        (a * b) % &*self.p
    }

    pub(crate) fn inv_raw(&self, a: &BigUint) -> Result<BigUint> {
        mod_inverse(a, &self.p).ok_or(Error::ZeroInverse)
    }
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.p, &other.p) || self.p == other.p
    }
}

impl Eq for FieldSpec {}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.p)
    }
}

/// An element of `F_p`, always canonical.
#[derive(Clone, PartialEq, Eq)]
pub struct FieldElement {
    value: BigUint,
    spec: FieldSpec,
}

impl FieldElement {
    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn into_value(self) -> BigUint {
        self.value
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    fn same_field(&self, other: &Self) -> Result<()> {
        if self.spec == other.spec {
            Ok(())
        } else {
            Err(Error::MismatchedField)
        }
    }

    fn with_value(&self, value: BigUint) -> Self {
        Self {
            value,
            spec: self.spec.clone(),
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.same_field(other)?;
        Ok(self.with_value(self.spec.add_raw(&self.value, &other.value)))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.same_field(other)?;
        Ok(self.with_value(self.spec.sub_raw(&self.value, &other.value)))
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.same_field(other)?;
        Ok(self.with_value(self.spec.mul_raw(&self.value, &other.value)))
    }

    pub fn neg(&self) -> Self {
        self.with_value(self.spec.neg_raw(&self.value))
    }

    /// Multiplicative inverse by the extended Euclidean algorithm.
    pub fn inverse(&self) -> Result<Self> {
        Ok(self.with_value(self.spec.inv_raw(&self.value)?))
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.spec.p)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.value, f)
    }
}

/// Inverse of `a` modulo `m`, or `None` when `gcd(a, m) != 1`.
///
/// Lehmer's variant of the extended Euclidean algorithm: quotient sequences
/// are simulated on the leading 63 bits and applied to the full-size values
/// as one 2x2 cofactor matrix, so most steps cost no bignum division.
pub fn mod_inverse(a: &BigUint, m: &BigUint) -> Option<BigUint> {
    if m.is_zero() {
        return None;
    }
    // Invariant: u = su * a (mod m), v = sv * a (mod m).
    let mut u = m.clone();
    let mut v = a % m;
    let mut su = BigInt::zero();
    let mut sv = BigInt::one();
    while !v.is_zero() {
        let shift = u.bits().saturating_sub(63);
        let mut uh = (&u >> shift).to_i128().expect("63 bits");
        let mut vh = (&v >> shift).to_i128().expect("63 bits");
        let (mut ca, mut cb, mut cc, mut cd) = (1i128, 0i128, 0i128, 1i128);
        while vh + cc != 0 && vh + cd != 0 {
            let q = (uh + ca) / (vh + cc);
            if q != (uh + cb) / (vh + cd) {
                break;
            }
            (ca, cc) = (cc, ca - q * cc);
            (cb, cd) = (cd, cb - q * cd);
            (uh, vh) = (vh, uh - q * vh);
        }
        if cb == 0 {
            let (q, r) = u.div_rem(&v);
            u = std::mem::replace(&mut v, r);
            let next = &su - BigInt::from_biguint(Sign::Plus, q) * &sv;
            su = std::mem::replace(&mut sv, next);
        } else {
            let (bu, bv) = (BigInt::from(u), BigInt::from(v));
            let (ca, cb, cc, cd) = (ca as i64, cb as i64, cc as i64, cd as i64);
            u = (&bu * ca + &bv * cb).to_biguint().expect("nonnegative remainder");
            v = (&bu * cc + &bv * cd).to_biguint().expect("nonnegative remainder");
            let next_su = &su * ca + &sv * cb;
            sv = &su * cc + &sv * cd;
            su = next_su;
        }
    }
    if !u.is_one() {
        return None;
    }
    let m_int = BigInt::from_biguint(Sign::Plus, m.clone());
    su.mod_floor(&m_int).to_biguint()
}

fn small_primes() -> &'static [u32] {
    static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        const LIMIT: usize = 2000;
        let mut composite = vec![false; LIMIT];
        let mut out = Vec::new();
        for i in 2..LIMIT {
            if !composite[i] {
                out.push(i as u32);
                for j in (i * i..LIMIT).step_by(i) {
                    composite[j] = true;
                }
            }
        }
        out
    })
}

/// Miller-Rabin with `rounds` pseudo-random bases, after trial division by
/// the primes below 2000. `false` is always correct; `true` is wrong with
/// probability at most `4^-rounds`.
pub fn is_probable_prime(n: &BigUint, rounds: u32) -> bool {
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    for &sp in small_primes() {
        let sp = BigUint::from(sp);
        if *n == sp {
            return true;
        }
        if (n % &sp).is_zero() {
            return false;
        }
    }

    let one = BigUint::one();
    let n_minus_one = n - &one;
    let s = n_minus_one.trailing_zeros().unwrap_or(0);
    let d = &n_minus_one >> s;

    // Fixed stream so the test is a pure function of (n, rounds).
    let mut rng = ChaCha20Rng::seed_from_u64(0x4d52_5f42_4153_4553);
    let base_range = n - 3u32;
    'witness: for _ in 0..rounds.max(1) {
        let a = random_below(&base_range, &mut rng) + &two;
        let mut x = a.modpow(&d, n);
        if x == one || x == n_minus_one {
            continue;
        }
        for _ in 1..s {
            x = (&x * &x) % n;
            if x == n_minus_one {
                continue 'witness;
            }
            if x == one {
                return false;
            }
        }
        return false;
    }
    true
}

/// Draws a prime with exactly `bits` bits from `rng`. The output is a pure
/// function of `bits` and the rng state.
pub fn gen_prime<R: RngCore + ?Sized>(bits: u64, rng: &mut R) -> Result<BigUint> {
    if bits < 2 {
        return Err(Error::InvalidPrime(format!("no prime has {bits} bits")));
    }
    loop {
        let mut candidate = random_bits(bits, rng);
        candidate.set_bit(bits - 1, true);
        candidate.set_bit(0, true);
        if is_probable_prime(&candidate, DEFAULT_MR_ROUNDS) {
            return Ok(candidate);
        }
    }
}

/// Uniform integer in `[0, 2^bits)`.
pub fn random_bits<R: RngCore + ?Sized>(bits: u64, rng: &mut R) -> BigUint {
    if bits == 0 {
        return BigUint::zero();
    }
    let nbytes = bits.div_ceil(8) as usize;
    let mut buf = vec![0u8; nbytes];
    rng.fill_bytes(&mut buf);
    let excess = nbytes as u64 * 8 - bits;
    buf[0] &= 0xffu8 >> excess;
    BigUint::from_bytes_be(&buf)
}

/// Uniform integer in `[0, bound)` by rejection sampling. `bound` must be nonzero.
pub fn random_below<R: RngCore + ?Sized>(bound: &BigUint, rng: &mut R) -> BigUint {
    assert!(!bound.is_zero(), "random_below: empty range");
    let bits = bound.bits();
    loop {
        let x = random_bits(bits, rng);
        if x < *bound {
            return x;
        }
    }
}
