//! Quick built-in checks: the `p = 17, k = 2` worked instance plus the core
//! invariants at small sizes. Some checks take the function under test as a
//! parameter so that a deliberately broken variant can be shown to fail.

use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::attack::{self, assemble_pair, compute_z, recover_key, sample_solution, solve_kernel, AttackInput};
use crate::error::Result;
use crate::field::FieldSpec;
use crate::matrix::{poly_eval, FlatRow, MatrixFp};
use crate::protocol::{public_sum_oracle, run_exchange, PartyState, PrivateExponent, ProtocolParams};

pub type CheckResult = std::result::Result<(), String>;
pub type BuildSystemFn = fn(&MatrixFp, &MatrixFp, &MatrixFp) -> Result<Vec<FlatRow>>;
pub type FlattenFn = fn(&MatrixFp) -> FlatRow;
type NamedCheck = (&'static str, fn() -> CheckResult);
pub type UnflattenFn = fn(&FlatRow, usize) -> Result<MatrixFp>;

#[derive(Debug)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub result: CheckResult,
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> CheckResult {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: crate::Error) -> String {
    e.to_string()
}

fn small_instances(p: u64, ks: &[usize], count: usize, seed: u64) -> Vec<(ProtocolParams, MatrixFp)> {
    let f = FieldSpec::from_u64(p).expect("prime");
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let params = ProtocolParams::random(&f, ks[i % ks.len()], &mut rng);
            let e = PrivateExponent::random(f.bits(), &mut rng).expect("bits >= 2");
            let a = PartyState::new(&params, e).public_part().clone();
            (params, a)
        })
        .collect()
}

pub fn check_worked_instance() -> CheckResult {
    let f = FieldSpec::from_u64(17).map_err(err)?;
    let mat = |rows: &[&[u64]]| MatrixFp::from_u64_rows(&f, rows).map_err(err);
    let params = ProtocolParams::new(mat(&[&[2, 0], &[0, 3]])?, mat(&[&[1, 1], &[0, 1]])?).map_err(err)?;
    let m = PrivateExponent::from_u64(2).map_err(err)?;
    let n = PrivateExponent::from_u64(3).map_err(err)?;
    let (alice, bob, key) = run_exchange(&params, m, n).map_err(err)?;
    let (a, b, k) = (mat(&[&[4, 5], &[0, 6]])?, mat(&[&[6, 15], &[0, 9]])?, mat(&[&[10, 16], &[0, 15]])?);
    ensure(*alice.public_part() == a, || format!("A = {}", alice.public_part()))?;
    ensure(*bob.public_part() == b, || format!("B = {}", bob.public_part()))?;
    ensure(*key.matrix() == k, || format!("K = {}", key.matrix()))?;
    let input = AttackInput::from_transcript(&params, a, b).map_err(err)?;
    let (recovered, _) = attack::attack(&input, &mut ChaCha20Rng::seed_from_u64(0), 64).map_err(err)?;
    ensure(*recovered.matrix() == k, || format!("recovered {}", recovered.matrix()))
}

/// Every kernel vector `(f, g)` must satisfy `f(H) M = Z g(H)`.
pub fn check_kernel_substitution(build: BuildSystemFn) -> CheckResult {
    for (params, a) in small_instances(17, &[2, 3], 40, 1) {
        let (m, h) = (params.m(), params.h());
        let z = compute_z(m, h, &a).map_err(err)?;
        let basis = solve_kernel(params.spec(), &build(m, h, &z).map_err(err)?).map_err(err)?;
        let k = params.k();
        for i in 0..basis.dim() {
            let v = basis.vector(i);
            let lhs = poly_eval(&v[..k], h).and_then(|x| x.checked_mul(m)).map_err(err)?;
            let rhs = poly_eval(&v[k..], h).and_then(|x| z.checked_mul(&x)).map_err(err)?;
            ensure(lhs == rhs, || format!("f(H)M != Z g(H) for kernel vector {i} (k = {k})"))?;
        }
    }
    Ok(())
}

pub fn check_flatten_round_trip(flatten: FlattenFn, unflatten: UnflattenFn) -> CheckResult {
    let f = FieldSpec::from_u64(17).map_err(err)?;
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    for k in 1..=4 {
        for _ in 0..10 {
            let x = MatrixFp::random(&f, k, &mut rng);
            let back = unflatten(&flatten(&x), k).map_err(err)?;
            ensure(back == x, || format!("round trip changed a {k}x{k} matrix"))?;
        }
    }
    Ok(())
}

fn check_inverse_and_pow() -> CheckResult {
    let f = FieldSpec::from_u64(19).map_err(err)?;
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    for k in 1..=4 {
        let x = MatrixFp::random_invertible(&f, k, &mut rng);
        let id = MatrixFp::identity(&f, k);
        ensure(x.checked_mul(&x.inverse().map_err(err)?).map_err(err)? == id, || "X X^-1 != I".into())?;
        let mut naive = id;
        for e in 0..=20u32 {
            ensure(x.pow(&BigUint::from(e)) == naive, || format!("X^{e} mismatch"))?;
            naive = naive.checked_mul(&x).map_err(err)?;
        }
    }
    Ok(())
}

fn check_exchange_and_closed_form() -> CheckResult {
    let f = FieldSpec::from_u64(17).map_err(err)?;
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    for k in 2..=3 {
        for (m, n) in [(1u64, 1u64), (2, 5), (7, 9)] {
            let params = ProtocolParams::random(&f, k, &mut rng);
            let (_, _, key) = run_exchange(
                &params,
                PrivateExponent::from_u64(m).map_err(err)?,
                PrivateExponent::from_u64(n).map_err(err)?,
            )
            .map_err(err)?;
            let expected = public_sum_oracle(params.m(), params.h(), (m + n) as usize).map_err(err)?;
            ensure(*key.matrix() == expected, || format!("key != closed form for m={m}, n={n}"))?;
        }
    }
    Ok(())
}

fn check_commuting_pairs() -> CheckResult {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    for (params, a) in small_instances(17, &[2, 3], 30, 6) {
        let (m, h) = (params.m(), params.h());
        let z = compute_z(m, h, &a).map_err(err)?;
        let basis = solve_kernel(params.spec(), &attack::build_system(m, h, &z).map_err(err)?).map_err(err)?;
        let sol = sample_solution(&basis, &mut rng).map_err(err)?;
        let Ok(pair) = assemble_pair(&sol, h) else { continue };
        let commutes = |x: &MatrixFp| -> Result<bool> { Ok(x.checked_mul(h)? == h.checked_mul(x)?) };
        ensure(commutes(&pair.r).map_err(err)?, || "RH != HR".into())?;
        ensure(commutes(&pair.s).map_err(err)?, || "SH != HS".into())?;
        let rms = pair.r.checked_mul(m).and_then(|x| x.checked_mul(&pair.s)).map_err(err)?;
        ensure(rms == z, || "RMS != Z".into())?;
        let b = PartyState::new(&params, PrivateExponent::from_u64(3).map_err(err)?).public_part().clone();
        recover_key(&pair, &b, &a).map_err(err)?;
    }
    Ok(())
}

pub fn run_all() -> Vec<CheckOutcome> {
    let checks: [NamedCheck; 6] = [
        ("worked instance p=17 k=2", check_worked_instance),
        ("kernel substitution", || check_kernel_substitution(attack::build_system)),
        ("flatten round trip", || check_flatten_round_trip(MatrixFp::flatten, MatrixFp::unflatten)),
        ("inverse and powering", check_inverse_and_pow),
        ("exchange closed form", check_exchange_and_closed_form),
        ("commuting pair hypothesis", check_commuting_pairs),
    ];
    checks
        .into_iter()
        .map(|(name, f)| CheckOutcome { name, result: f() })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for c in run_all() {
            assert!(c.result.is_ok(), "{}: {:?}", c.name, c.result);
        }
    }

    fn build_system_unnegated(m: &MatrixFp, h: &MatrixFp, z: &MatrixFp) -> Result<Vec<FlatRow>> {
        let mut rows = attack::build_system(m, h, z)?;
        let k = m.k();
        for r in &mut rows[k..] {
            *r = r.neg();
        }
        Ok(rows)
    }

    #[test]
    fn flipped_sign_convention_is_caught() {
        assert!(check_kernel_substitution(build_system_unnegated).is_err());
    }

    fn flatten_column_major(x: &MatrixFp) -> FlatRow {
        x.transpose().flatten()
    }

    #[test]
    fn inconsistent_flatten_order_is_caught() {
        assert!(check_flatten_round_trip(flatten_column_major, MatrixFp::unflatten).is_err());
    }
}
