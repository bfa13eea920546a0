//! Integer Hermite normal form and coset representatives of `Z^n / M Z^n`.

use alloc::vec;
use alloc::vec::Vec;

/// Lower-triangular column HNF of a nonsingular integer matrix (row-major,
/// columns are generators). Returns the diagonal of `H`, which is all the
/// coset machinery needs, together with `H` itself.
pub fn lower_hnf(m: &[i128], n: usize) -> Option<(Vec<i128>, Vec<u128>)> {
    let mut h = m.to_vec();
    let at = |i: usize, j: usize| i * n + j;
    for i in 0..n {
        // Clear row i to the right of the pivot with unimodular column ops.
        for j in i + 1..n {
            let (a, b) = (h[at(i, i)], h[at(i, j)]);
            if b == 0 {
                continue;
            }
            let (g, x, y) = ext_gcd(a, b);
            let (p, q) = (a / g, b / g);
            // [col_i, col_j] <- [x col_i + y col_j, -q col_i + p col_j]
            for r in 0..n {
                let ci = h[at(r, i)];
                let cj = h[at(r, j)];
                h[at(r, i)] = x * ci + y * cj;
                h[at(r, j)] = -q * ci + p * cj;
            }
        }
        if h[at(i, i)] == 0 {
            return None;
        }
        if h[at(i, i)] < 0 {
            for r in 0..n {
                h[at(r, i)] = -h[at(r, i)];
            }
        }
    }
    let diag = (0..n).map(|i| h[at(i, i)] as u128).collect();
    Some((h, diag))
}

/// Returns `(g, x, y)` with `a x + b y = g = gcd(a, b) > 0`.
fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i128, 0i128);
    let (mut old_t, mut t) = (0i128, 1i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

/// Mixed-radix decoding of `index` into the box `0 <= z_i < diag_i`.
pub fn box_point(diag: &[u128], mut index: u128) -> Vec<i64> {
    let mut z = vec![0i64; diag.len()];
    for (zi, d) in z.iter_mut().zip(diag) {
        *zi = (index % d) as i64;
        index /= d;
    }
    z
}
