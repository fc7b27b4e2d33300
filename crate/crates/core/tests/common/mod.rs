//! Test-only reference linear algebra over small prime fields in plain
//! `u64` arithmetic. Computes the left kernel as the right nullspace of the
//! transpose, independently of the library's augmented-identity reduction.

#![allow(dead_code)]

use make_core::FlatRow;

fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn powmod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a, p);
        }
        a = mulmod(a, a, p);
        e >>= 1;
    }
    r
}

/// Fermat inverse; `p` prime, `a != 0`.
fn inv(a: u64, p: u64) -> u64 {
    powmod(a, p - 2, p)
}

/// Reduced row echelon form in place; returns pivot columns.
fn rref(m: &mut [Vec<u64>], p: u64) -> Vec<usize> {
    let cols = m.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(i) = (r..m.len()).find(|&i| m[i][c] != 0) else { continue };
        m.swap(r, i);
        let s = inv(m[r][c], p);
        for x in m[r].iter_mut() {
            *x = mulmod(*x, s, p);
        }
        let pivot_row = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i != r && row[c] != 0 {
                let f = row[c];
                for (x, &y) in row.iter_mut().zip(&pivot_row) {
                    *x = (*x + p - mulmod(f, y, p)) % p;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == m.len() {
            break;
        }
    }
    pivots
}

pub fn to_u64_rows(rows: &[FlatRow]) -> Vec<Vec<u64>> {
    rows.iter()
        .map(|r| r.values().iter().map(|v| u64::try_from(v).unwrap()).collect())
        .collect()
}

pub fn rank(rows: &[Vec<u64>], p: u64) -> usize {
    let mut m = rows.to_vec();
    rref(&mut m, p).len()
}

/// Basis of `{v : sum_i v_i rows_i = 0}` via the nullspace of `rows^T`.
pub fn left_kernel_via_transpose(rows: &[Vec<u64>], p: u64) -> Vec<Vec<u64>> {
    let n = rows.len();
    let width = rows[0].len();
    let mut t: Vec<Vec<u64>> = (0..width).map(|j| (0..n).map(|i| rows[i][j]).collect()).collect();
    let pivots = rref(&mut t, p);
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&fc| {
            let mut v = vec![0u64; n];
            v[fc] = 1;
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = (p - t[r][fc]) % p;
            }
            v
        })
        .collect()
}
