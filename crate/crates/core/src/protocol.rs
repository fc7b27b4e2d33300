//! The two-party key exchange built on the semidirect product of the additive
//! group of `k x k` matrices with the multiplicative semigroup, twisted by
//! conjugation-like action:
//!
//! ```text
//! (G1, H1) * (G2, H2) = (H2 G1 H2 + G2, H1 H2)
//! ```
//!
//! `(M, H)^e = (sum_{i<e} H^i M H^i, H^e)`, so both parties end up with
//! `K = sum_{i<m+n} H^i M H^i`.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::RngCore;

use crate::error::{Error, Result};
use crate::field::{random_below, FieldSpec};
use crate::matrix::MatrixFp;

/// Public parameters: the field, and invertible `M` (additive part) and `H`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProtocolParams {
    m: MatrixFp,
    h: MatrixFp,
}

impl ProtocolParams {
    pub fn new(m: MatrixFp, h: MatrixFp) -> Result<Self> {
        if m.spec() != h.spec() {
            return Err(Error::MismatchedField);
        }
        if m.k() != h.k() {
            return Err(Error::ShapeMismatch("M and H differ in dimension".into()));
        }
        m.inverse()?;
        h.inverse()?;
        Ok(Self { m, h })
    }

    /// Independent uniform invertible `M` and `H`.
    pub fn random<R: RngCore + ?Sized>(spec: &FieldSpec, k: usize, rng: &mut R) -> Self {
        let m = MatrixFp::random_invertible(spec, k, rng);
        let h = MatrixFp::random_invertible(spec, k, rng);
        Self { m, h }
    }

    pub fn spec(&self) -> &FieldSpec {
        self.m.spec()
    }

    pub fn k(&self) -> usize {
        self.m.k()
    }

    /// The additive generator `M`.
    pub fn m(&self) -> &MatrixFp {
        &self.m
    }

    /// The multiplicative generator `H`.
    pub fn h(&self) -> &MatrixFp {
        &self.h
    }

    pub fn base(&self) -> SemidirectElement {
        SemidirectElement {
            g: self.m.clone(),
            h: self.h.clone(),
        }
    }
}

/// A pair `(G, H)` in the semidirect product.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SemidirectElement {
    g: MatrixFp,
    h: MatrixFp,
}

impl SemidirectElement {
    pub fn new(g: MatrixFp, h: MatrixFp) -> Result<Self> {
        if g.spec() != h.spec() {
            return Err(Error::MismatchedField);
        }
        if g.k() != h.k() {
            return Err(Error::ShapeMismatch("components differ in dimension".into()));
        }
        Ok(Self { g, h })
    }

    /// `(0, I)`, the neutral element.
    pub fn identity(spec: &FieldSpec, k: usize) -> Self {
        Self {
            g: MatrixFp::zero(spec, k),
            h: MatrixFp::identity(spec, k),
        }
    }

    /// Additive component.
    pub fn g(&self) -> &MatrixFp {
        &self.g
    }

    /// Multiplicative component.
    pub fn h(&self) -> &MatrixFp {
        &self.h
    }

    pub fn into_parts(self) -> (MatrixFp, MatrixFp) {
        (self.g, self.h)
    }

    /// `(G1, H1) * (G2, H2) = (H2 G1 H2 + G2, H1 H2)`.
    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        let g = other
            .h
            .checked_mul(&self.g)?
            .checked_mul(&other.h)?
            .checked_add(&other.g)?;
        let h = self.h.checked_mul(&other.h)?;
        Ok(Self { g, h })
    }

    /// Left-to-right square-and-multiply; relies on associativity.
    pub fn pow(&self, e: &PrivateExponent) -> Self {
        let e = &e.0;
        let mut acc = self.clone();
        for bit in (0..e.bits() - 1).rev() {
            acc = acc.checked_mul(&acc).expect("same shape");
            if e.bit(bit) {
                acc = acc.checked_mul(self).expect("same shape");
            }
        }
        acc
    }
}

/// A party's secret exponent, `e >= 1`.
#[derive(Clone, PartialEq, Eq)]
pub struct PrivateExponent(BigUint);

impl PrivateExponent {
    pub fn new(e: BigUint) -> Result<Self> {
        if e.is_zero() {
            return Err(Error::InvalidExponent("exponent must be at least 1".into()));
        }
        Ok(Self(e))
    }

    pub fn from_u64(e: u64) -> Result<Self> {
        Self::new(BigUint::from(e))
    }

    /// Uniform in `[2, 2^bits)`. Needs `bits >= 2`.
    pub fn random<R: RngCore + ?Sized>(bits: u64, rng: &mut R) -> Result<Self> {
        if bits < 2 {
            return Err(Error::InvalidExponent(format!(
                "range [2, 2^{bits}) is empty"
            )));
        }
        let span = (BigUint::one() << bits) - 2u32;
        Ok(Self(random_below(&span, rng) + 2u32))
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }
}

impl fmt::Debug for PrivateExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("PrivateExponent(<redacted>)")
    }
}

/// One side of the exchange. `exponent` and `h_power` are secret.
#[derive(Clone)]
pub struct PartyState {
    exponent: PrivateExponent,
    public_part: MatrixFp,
    h_power: MatrixFp,
}

impl PartyState {
    /// Computes `(M, H)^e = (public_part, H^e)`.
    pub fn new(params: &ProtocolParams, exponent: PrivateExponent) -> Self {
        let (public_part, h_power) = params.base().pow(&exponent).into_parts();
        Self {
            exponent,
            public_part,
            h_power,
        }
    }

    /// The value sent over the wire (`A` or `B`).
    pub fn public_part(&self) -> &MatrixFp {
        &self.public_part
    }

    pub fn exponent(&self) -> &PrivateExponent {
        &self.exponent
    }

    pub fn h_power(&self) -> &MatrixFp {
        &self.h_power
    }

    /// First component of `(other, ?) * (own public, H^e)`:
    /// `H^e * other * H^e + own public`.
    pub fn derive_shared(&self, other_public: &MatrixFp) -> Result<SharedKey> {
        let k = self
            .h_power
            .checked_mul(other_public)?
            .checked_mul(&self.h_power)?
            .checked_add(&self.public_part)?;
        Ok(SharedKey(k))
    }
}

impl fmt::Debug for PartyState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PartyState")
            .field("public_part", &self.public_part)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SharedKey(MatrixFp);

impl SharedKey {
    pub fn new(k: MatrixFp) -> Self {
        Self(k)
    }

    pub fn matrix(&self) -> &MatrixFp {
        &self.0
    }

    pub fn into_matrix(self) -> MatrixFp {
        self.0
    }
}

/// `sum_{i=0}^{e-1} H^i M H^i` accumulated term by term. O(e) products; a
/// reference for small exponents only.
pub fn public_sum_oracle(m: &MatrixFp, h: &MatrixFp, e: usize) -> Result<MatrixFp> {
    if e == 0 {
        return Err(Error::InvalidExponent("exponent must be at least 1".into()));
    }
    let mut acc = MatrixFp::zero(m.spec(), m.k());
    let mut hi = MatrixFp::identity(h.spec(), h.k());
    for _ in 0..e {
        acc = acc.checked_add(&hi.checked_mul(m)?.checked_mul(&hi)?)?;
        hi = hi.checked_mul(h)?;
    }
    Ok(acc)
}

/// Runs both sides and checks that the two derived keys agree.
pub fn run_exchange(
    params: &ProtocolParams,
    m: PrivateExponent,
    n: PrivateExponent,
) -> Result<(PartyState, PartyState, SharedKey)> {
    let alice = PartyState::new(params, m);
    let bob = PartyState::new(params, n);
    let k_alice = alice.derive_shared(bob.public_part())?;
    let k_bob = bob.derive_shared(alice.public_part())?;
    if k_alice != k_bob {
        return Err(Error::KeyMismatch);
    }
    Ok((alice, bob, k_alice))
}
