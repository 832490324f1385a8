//! Coprimality screening modulo a large prime.
//!
//! If the images of `f` and `g` modulo `p` keep their degrees and have a
//! constant gcd, then `gcd(f, g) = 1` over Q. The converse can fail, in which
//! case callers fall back to the exact Euclidean algorithm.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;

use super::{Poly, Rational};

const P: u64 = (1u64 << 61) - 1;

fn mulmod(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % P as u128) as u64
}

fn powmod(mut a: u64, mut e: u64) -> u64 {
    let mut r = 1u64;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a);
        }
        a = mulmod(a, a);
        e >>= 1;
    }
    r
}

fn inv(a: u64) -> u64 {
    powmod(a, P - 2)
}

fn reduce_int(x: &BigInt) -> u64 {
    let m = x.mod_floor(&BigInt::from(P));
    m.to_u64().expect("residue fits in u64")
}

fn reduce(c: &Rational) -> Option<u64> {
    let d = reduce_int(c.denom());
    if d == 0 {
        return None;
    }
    Some(mulmod(reduce_int(c.numer()), inv(d)))
}

fn image(f: &Poly) -> Option<Vec<u64>> {
    let v = f.coeffs().iter().map(reduce).collect::<Option<Vec<_>>>()?;
    if v.last().is_some_and(|&c| c == 0) {
        return None;
    }
    Some(v)
}

fn trim(v: &mut Vec<u64>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

fn rem(a: &mut Vec<u64>, b: &[u64]) {
    let db = b.len() - 1;
    let il = inv(b[db]);
    while a.len() > db {
        let top = a.len() - 1;
        let c = mulmod(a[top], il);
        if c != 0 {
            let off = top - db;
            for (j, &bj) in b.iter().enumerate() {
                let t = mulmod(c, bj);
                a[off + j] = (a[off + j] + P - t) % P;
            }
        }
        a.pop();
        trim(a);
    }
}

/// Returns `true` only when `f` and `g` are provably coprime over Q.
pub(crate) fn certainly_coprime(f: &Poly, g: &Poly) -> bool {
    let (Some(mut a), Some(mut b)) = (image(f), image(g)) else {
        return false;
    };
    if a.len() < b.len() {
        std::mem::swap(&mut a, &mut b);
    }
    loop {
        if b.is_empty() {
            return a.len() == 1;
        }
        if b.len() == 1 {
            return true;
        }
        rem(&mut a, &b);
        std::mem::swap(&mut a, &mut b);
    }
}
