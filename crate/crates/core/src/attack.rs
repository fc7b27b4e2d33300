//! Shared-key recovery from the public transcript `(M, H, A, B)`.
//!
//! If `R` and `S` commute with `H` and `R M S = Z` where `Z = H A H + M - A`,
//! then `R B S + A` is the shared key. Such a pair is found as `R = f(H)`,
//! `S = g(H)^{-1}` for polynomials of degree below `k` satisfying
//! `f(H) M = Z g(H)`, which is a homogeneous linear system in the `2k`
//! coefficients. The private exponents are never recovered.

use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_traits::Zero;
use rand::RngCore;

use crate::error::{Error, Result};
use crate::field::{FieldElement, FieldSpec};
use crate::matrix::{left_kernel, poly_eval, FlatRow, KernelBasis, MatrixFp};
use crate::protocol::{ProtocolParams, SharedKey};

pub const DEFAULT_MAX_RETRIES: usize = 64;

/// What an eavesdropper sees. Holds no private data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttackInput {
    m: MatrixFp,
    h: MatrixFp,
    a: MatrixFp,
    b: MatrixFp,
}

impl AttackInput {
    pub fn new(m: MatrixFp, h: MatrixFp, a: MatrixFp, b: MatrixFp) -> Result<Self> {
        for x in [&h, &a, &b] {
            if x.spec() != m.spec() {
                return Err(Error::MismatchedField);
            }
            if x.k() != m.k() {
                return Err(Error::ShapeMismatch("transcript matrices differ in dimension".into()));
            }
        }
        h.inverse()?;
        Ok(Self { m, h, a, b })
    }

    pub fn from_transcript(params: &ProtocolParams, a: MatrixFp, b: MatrixFp) -> Result<Self> {
        Self::new(params.m().clone(), params.h().clone(), a, b)
    }

    pub fn spec(&self) -> &FieldSpec {
        self.m.spec()
    }

    pub fn k(&self) -> usize {
        self.m.k()
    }

    pub fn m(&self) -> &MatrixFp {
        &self.m
    }

    pub fn h(&self) -> &MatrixFp {
        &self.h
    }

    pub fn a(&self) -> &MatrixFp {
        &self.a
    }

    pub fn b(&self) -> &MatrixFp {
        &self.b
    }
}

/// Coefficients `(f_0..f_{k-1}, g_0..g_{k-1})`, not all zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolutionVector {
    f_coeffs: Vec<FieldElement>,
    g_coeffs: Vec<FieldElement>,
}

impl SolutionVector {
    pub fn new(f_coeffs: Vec<FieldElement>, g_coeffs: Vec<FieldElement>) -> Result<Self> {
        if f_coeffs.len() != g_coeffs.len() {
            return Err(Error::ShapeMismatch("f and g have different lengths".into()));
        }
        if f_coeffs.iter().chain(&g_coeffs).all(FieldElement::is_zero) {
            return Err(Error::ZeroSolution);
        }
        Ok(Self { f_coeffs, g_coeffs })
    }

    /// Splits a length-`2k` vector into its `f` and `g` halves.
    pub fn from_raw(spec: &FieldSpec, v: &[BigUint]) -> Result<Self> {
        if !v.len().is_multiple_of(2) {
            return Err(Error::ShapeMismatch("odd-length solution vector".into()));
        }
        let (f, g) = v.split_at(v.len() / 2);
        let lift = |xs: &[BigUint]| xs.iter().map(|x| spec.element(x.clone())).collect();
        Self::new(lift(f), lift(g))
    }

    pub fn f_coeffs(&self) -> &[FieldElement] {
        &self.f_coeffs
    }

    pub fn g_coeffs(&self) -> &[FieldElement] {
        &self.g_coeffs
    }

    pub fn to_raw(&self) -> Vec<BigUint> {
        self.f_coeffs
            .iter()
            .chain(&self.g_coeffs)
            .map(|c| c.value().clone())
            .collect()
    }
}

/// `R = f(H)` and `S = g(H)^{-1}`; both commute with `H`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommutingPair {
    pub r: MatrixFp,
    pub s: MatrixFp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AttackStats {
    /// Dimension of the solution space.
    pub kernel_dim: usize,
    /// Samples drawn, including the successful one.
    pub retries: usize,
    pub elapsed: Duration,
}

impl AttackStats {
    pub fn elapsed_ms(&self) -> f64 {
        self.elapsed.as_secs_f64() * 1e3
    }
}

/// `Z = H A H + M - A`, which equals `H^m M H^m` on a real transcript.
pub fn compute_z(m: &MatrixFp, h: &MatrixFp, a: &MatrixFp) -> Result<MatrixFp> {
    h.checked_mul(a)?.checked_mul(h)?.checked_add(m)?.checked_sub(a)
}

/// Rows `flatten(H^i M)` for `i < k`, followed by `flatten(-(Z H^i))`.
///
/// The second block is negated so that a left-kernel vector
/// `(f_0..f_{k-1}, g_0..g_{k-1})` satisfies `f(H) M = Z g(H)` as is.
pub fn build_system(m: &MatrixFp, h: &MatrixFp, z: &MatrixFp) -> Result<Vec<FlatRow>> {
    let k = m.k();
    if z.k() != k || h.k() != k {
        return Err(Error::ShapeMismatch("M, H and Z differ in dimension".into()));
    }
    let mut f_rows = Vec::with_capacity(k);
    let mut g_rows = Vec::with_capacity(k);
    let mut hm = m.clone();
    let mut zh = z.clone();
    for i in 0..k {
        if i > 0 {
            hm = h.checked_mul(&hm)?;
            zh = zh.checked_mul(h)?;
        }
        f_rows.push(hm.flatten());
        g_rows.push(zh.flatten().neg());
    }
    f_rows.extend(g_rows);
    Ok(f_rows)
}

/// Basis of all `(f, g)` solving the system.
pub fn solve_kernel(spec: &FieldSpec, system: &[FlatRow]) -> Result<KernelBasis> {
    let basis = left_kernel(spec, system)?;
    if basis.is_empty() {
        return Err(Error::EmptyKernel);
    }
    Ok(basis)
}

/// Uniformly random nonzero element of the span of `basis`.
pub fn sample_solution<R: RngCore + ?Sized>(basis: &KernelBasis, rng: &mut R) -> Result<SolutionVector> {
    let spec = basis.spec();
    let Some(len) = basis.vectors().first().map(Vec::len) else {
        return Err(Error::EmptyKernel);
    };
    loop {
        let mut acc = vec![BigUint::zero(); len];
        for v in basis.vectors() {
            let c = spec.random_raw(rng);
            if c.is_zero() {
                continue;
            }
            for (a, x) in acc.iter_mut().zip(v) {
                *a = spec.add_raw(a, &spec.mul_raw(&c, x));
            }
        }
        if acc.iter().any(|x| !x.is_zero()) {
            return SolutionVector::from_raw(spec, &acc);
        }
    }
}

/// Fails with [`Error::SingularG`] when `g(H)` has no inverse.
pub fn assemble_pair(sol: &SolutionVector, h: &MatrixFp) -> Result<CommutingPair> {
    let r = poly_eval(sol.f_coeffs(), h)?;
    let g_of_h = poly_eval(sol.g_coeffs(), h)?;
    let s = match g_of_h.inverse() {
        Ok(s) => s,
        Err(Error::SingularMatrix) => return Err(Error::SingularG),
        Err(e) => return Err(e),
    };
    Ok(CommutingPair { r, s })
}

/// `R B S + A`.
pub fn recover_key(pair: &CommutingPair, b: &MatrixFp, a: &MatrixFp) -> Result<SharedKey> {
    let k = pair.r.checked_mul(b)?.checked_mul(&pair.s)?.checked_add(a)?;
    Ok(SharedKey::new(k))
}

/// Full pipeline. Wall-clock time covers all four steps.
pub fn attack<R: RngCore + ?Sized>(
    input: &AttackInput,
    rng: &mut R,
    max_retries: usize,
) -> Result<(SharedKey, AttackStats)> {
    let start = Instant::now();
    let z = compute_z(&input.m, &input.h, &input.a)?;
    let system = build_system(&input.m, &input.h, &z)?;
    let basis = solve_kernel(input.spec(), &system)?;

    let mut retries = 0;
    let pair = loop {
        if retries == max_retries {
            return Err(Error::RetriesExceeded(max_retries));
        }
        retries += 1;
        let sol = sample_solution(&basis, rng)?;
        match assemble_pair(&sol, &input.h) {
            Ok(pair) => break pair,
            Err(Error::SingularG) => continue,
            Err(e) => return Err(e),
        }
    };
    let key = recover_key(&pair, &input.b, &input.a)?;
    let stats = AttackStats {
        kernel_dim: basis.dim(),
        retries,
        elapsed: start.elapsed(),
    };
    Ok((key, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::rank;
    use crate::protocol::{public_sum_oracle, run_exchange, PrivateExponent};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn f17() -> FieldSpec {
        FieldSpec::from_u64(17).unwrap()
    }

    fn mat(f: &FieldSpec, rows: &[&[u64]]) -> MatrixFp {
        MatrixFp::from_u64_rows(f, rows).unwrap()
    }

    fn worked(f: &FieldSpec) -> (MatrixFp, MatrixFp) {
        (mat(f, &[&[2, 0], &[0, 3]]), mat(f, &[&[1, 1], &[0, 1]]))
    }

    fn elems(f: &FieldSpec, xs: &[u64]) -> Vec<FieldElement> {
        xs.iter().map(|&x| f.element(x)).collect()
    }

    fn to_u64(row: &FlatRow) -> Vec<u64> {
        row.values().iter().map(|v| v.try_into().unwrap()).collect()
    }

    #[test]
    fn compute_z_examples() {
        let f = f17();
        let (m, h) = worked(&f);
        let a = mat(&f, &[&[4, 5], &[0, 6]]);
        let z = compute_z(&m, &h, &a).unwrap();
        assert_eq!(z, mat(&f, &[&[2, 10], &[0, 3]]));
        let h2 = h.pow(&BigUint::from(2u32));
        assert_eq!(z, h2.checked_mul(&m).unwrap().checked_mul(&h2).unwrap());

        let id = MatrixFp::identity(&f, 2);
        assert_eq!(compute_z(&m, &id, &a).unwrap(), m);
        assert_eq!(compute_z(&m, &h, &MatrixFp::zero(&f, 2)).unwrap(), m);
    }

    #[test]
    fn build_system_examples() {
        let f = f17();
        let (m, h) = worked(&f);
        let z = compute_z(&m, &h, &mat(&f, &[&[4, 5], &[0, 6]])).unwrap();
        let rows = build_system(&m, &h, &z).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0], m.flatten());
        assert_eq!(to_u64(&rows[1]), vec![2, 3, 0, 3]);

        let id = MatrixFp::identity(&f, 2);
        let rows = build_system(&m, &id, &m).unwrap();
        assert_eq!(rows, vec![m.flatten(), m.flatten(), m.neg().flatten(), m.neg().flatten()]);
    }

    #[test]
    fn identity_h_kernel_is_three_dimensional() {
        let f = f17();
        let (m, _) = worked(&f);
        let id = MatrixFp::identity(&f, 2);
        let basis = solve_kernel(&f, &build_system(&m, &id, &m).unwrap()).unwrap();
        assert_eq!(basis.dim(), 3);
        // every basis vector satisfies f0 + f1 = g0 + g1
        for v in basis.vectors() {
            assert_eq!(f.add_raw(&v[0], &v[1]), f.add_raw(&v[2], &v[3]));
        }
    }

    #[test]
    fn empty_kernel_is_an_error() {
        let f = f17();
        let unit = |i: usize| {
            let mut v = vec![BigUint::zero(); 4];
            v[i] = BigUint::from(1u32);
            FlatRow::new(&f, v)
        };
        let rows: Vec<FlatRow> = (0..4).map(unit).collect();
        assert_eq!(solve_kernel(&f, &rows), Err(Error::EmptyKernel));
        let empty = KernelBasis::new(&f, vec![]);
        assert_eq!(
            sample_solution(&empty, &mut ChaCha20Rng::seed_from_u64(0)),
            Err(Error::EmptyKernel)
        );
    }

    #[test]
    fn sample_solution_examples() {
        let f = f17();
        let v: Vec<BigUint> = [1u32, 2, 3, 4].iter().map(|&x| BigUint::from(x)).collect();
        let basis = KernelBasis::new(&f, vec![v.clone()]);
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for _ in 0..50 {
            let s = sample_solution(&basis, &mut rng).unwrap().to_raw();
            // s = c * v with c = s[0] since v[0] = 1
            let c = &s[0];
            assert!(!c.is_zero());
            let scaled: Vec<BigUint> = v.iter().map(|x| f.mul_raw(c, x)).collect();
            assert_eq!(s, scaled);
        }

        let (m, _) = worked(&f);
        let id = MatrixFp::identity(&f, 2);
        let basis = solve_kernel(&f, &build_system(&m, &id, &m).unwrap()).unwrap();
        let s = sample_solution(&basis, &mut rng).unwrap().to_raw();
        let mut with_sample = basis.vectors().to_vec();
        with_sample.push(s);
        assert_eq!(rank(&f, &with_sample), basis.dim());

        let a = sample_solution(&basis, &mut ChaCha20Rng::seed_from_u64(77)).unwrap();
        let b = sample_solution(&basis, &mut ChaCha20Rng::seed_from_u64(77)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn assemble_pair_examples() {
        let f = f17();
        let (_, h) = worked(&f);
        let id = MatrixFp::identity(&f, 2);

        let sol = SolutionVector::new(elems(&f, &[1, 0]), elems(&f, &[1, 0])).unwrap();
        assert_eq!(assemble_pair(&sol, &h).unwrap(), CommutingPair { r: id.clone(), s: id });

        let sol = SolutionVector::new(elems(&f, &[1, 0]), elems(&f, &[0, 0])).unwrap();
        assert_eq!(assemble_pair(&sol, &h), Err(Error::SingularG));

        let sol = SolutionVector::new(elems(&f, &[0, 1]), elems(&f, &[0, 1])).unwrap();
        let pair = assemble_pair(&sol, &h).unwrap();
        assert_eq!(pair.r, h);
        assert_eq!(pair.s, mat(&f, &[&[1, 16], &[0, 1]]));
    }

    #[test]
    fn zero_solution_vector_rejected() {
        let f = f17();
        assert!(SolutionVector::new(elems(&f, &[0, 0]), elems(&f, &[0, 0])).is_err());
    }

    #[test]
    fn recover_key_examples() {
        let f = f17();
        let (m, h) = worked(&f);
        let id = MatrixFp::identity(&f, 2);

        // H = I: R = S = I is a valid pair, K = A + B = 5M.
        let a = m.scale(&f.element(2u32)).unwrap();
        let b = m.scale(&f.element(3u32)).unwrap();
        let pair = CommutingPair { r: id.clone(), s: id.clone() };
        assert_eq!(
            *recover_key(&pair, &b, &a).unwrap().matrix(),
            m.scale(&f.element(5u32)).unwrap()
        );
        assert_eq!(*recover_key(&pair, &MatrixFp::zero(&f, 2), &a).unwrap().matrix(), a);

        // Worked instance: every valid pair recovers K.
        let a = mat(&f, &[&[4, 5], &[0, 6]]);
        let b = mat(&f, &[&[6, 15], &[0, 9]]);
        let expected = mat(&f, &[&[10, 16], &[0, 15]]);
        let z = compute_z(&m, &h, &a).unwrap();
        let basis = solve_kernel(&f, &build_system(&m, &h, &z).unwrap()).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for _ in 0..20 {
            let sol = sample_solution(&basis, &mut rng).unwrap();
            if let Ok(pair) = assemble_pair(&sol, &h) {
                assert_eq!(*recover_key(&pair, &b, &a).unwrap().matrix(), expected);
            }
        }
    }

    #[test]
    fn attack_on_worked_instance() {
        let f = f17();
        let (m, h) = worked(&f);
        let input = AttackInput::new(
            m,
            h,
            mat(&f, &[&[4, 5], &[0, 6]]),
            mat(&f, &[&[6, 15], &[0, 9]]),
        )
        .unwrap();
        let (key, stats) = attack(&input, &mut ChaCha20Rng::seed_from_u64(1), 64).unwrap();
        assert_eq!(*key.matrix(), mat(&f, &[&[10, 16], &[0, 15]]));
        assert!(stats.retries >= 1 && stats.kernel_dim >= 1);
    }

    #[test]
    fn attack_on_identity_h_reports_dimension_three() {
        let f = f17();
        let (m, _) = worked(&f);
        let id = MatrixFp::identity(&f, 2);
        let a = m.scale(&f.element(2u32)).unwrap();
        let b = m.scale(&f.element(3u32)).unwrap();
        let input = AttackInput::new(m.clone(), id, a, b).unwrap();
        let (key, stats) = attack(&input, &mut ChaCha20Rng::seed_from_u64(2), 64).unwrap();
        assert_eq!(stats.kernel_dim, 3);
        assert_eq!(*key.matrix(), m.scale(&f.element(5u32)).unwrap());
    }

    #[test]
    fn attack_gives_up_after_max_retries() {
        let f = f17();
        // a zero budget allows no samples at all
        let (m, h) = worked(&f);
        let input = AttackInput::new(m.clone(), h, m.clone(), m).unwrap();
        assert_eq!(
            attack(&input, &mut ChaCha20Rng::seed_from_u64(0), 0),
            Err(Error::RetriesExceeded(0))
        );
    }

    #[test]
    fn attack_input_rejects_singular_h() {
        let f = f17();
        let (m, _) = worked(&f);
        let singular = mat(&f, &[&[1, 1], &[2, 2]]);
        assert_eq!(
            AttackInput::new(m.clone(), singular, m.clone(), m),
            Err(Error::SingularMatrix)
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn attack_recovers_key(p in prop_oneof![Just(17u64), Just(19), Just(135257)], k in 2usize..5, seed in any::<u64>()) {
            let f = FieldSpec::from_u64(p).unwrap();
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let params = ProtocolParams::random(&f, k, &mut rng);
            let m = PrivateExponent::random(f.bits(), &mut rng).unwrap();
            let n = PrivateExponent::random(f.bits(), &mut rng).unwrap();
            let (alice, bob, key) = run_exchange(&params, m, n).unwrap();
            let input = AttackInput::from_transcript(&params, alice.public_part().clone(), bob.public_part().clone()).unwrap();
            let (recovered, stats) = attack(&input, &mut rng, DEFAULT_MAX_RETRIES).unwrap();
            prop_assert_eq!(recovered, key);
            prop_assert!(stats.kernel_dim >= 1);
        }

        #[test]
        fn z_telescopes(k in 1usize..4, seed in any::<u64>(), e in 1usize..=16) {
            let f = f17();
            let params = ProtocolParams::random(&f, k, &mut ChaCha20Rng::seed_from_u64(seed));
            let a = public_sum_oracle(params.m(), params.h(), e).unwrap();
            let he = params.h().pow(&BigUint::from(e));
            prop_assert_eq!(
                compute_z(params.m(), params.h(), &a).unwrap(),
                he.checked_mul(params.m()).unwrap().checked_mul(&he).unwrap()
            );
        }
    }
}
