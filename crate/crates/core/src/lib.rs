//! Matrix semidirect-product key exchange over `F_p`, and an eavesdropper
//! attack that recovers the shared key from the public transcript alone.
//!
//! Layout:
//! - [`field`]: arbitrary-precision prime-field arithmetic, Miller-Rabin, prime generation.
//! - [`matrix`]: dense `k x k` matrices over `F_p`, inversion, powers,
//!   polynomial evaluation and the augmented-identity left kernel.
//! - [`protocol`]: the semidirect product, fast powering and the two-party exchange.
//! - [`attack`]: key recovery from `(M, H, A, B)`.
//! - [`bench`]: seeded experiment harness producing per-trial records.
//! - [`io`]: text file formats for parameters, transcripts and results.
//! - [`selftest`]: fixed-value and small-size invariant checks.

pub mod attack;
pub mod bench;
mod error;
pub mod field;
pub mod io;
pub mod matrix;
pub mod protocol;
pub mod selftest;

pub use attack::{attack, AttackInput, AttackStats, CommutingPair, SolutionVector};
pub use error::{Error, Result};
pub use field::{FieldElement, FieldSpec};
pub use matrix::{FlatRow, KernelBasis, MatrixFp};
pub use protocol::{PartyState, PrivateExponent, ProtocolParams, SemidirectElement, SharedKey};
