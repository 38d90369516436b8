//! The row-packing bijection `ℕ² → ℕ`, `φ(i, j) = 2^j - 1 + i·2^(j+1)`.
//!
//! Row `j` lands on the residue class `2^j - 1 mod 2^(j+1)`, so reading the
//! cells left to right gives the ruler sequence `0 1 0 2 0 1 0 3 …`.

use crate::error::{Error, Result};

/// `φ(i, j)`, or `None` when it does not fit in a `u64`.
pub fn phi(i: u64, j: u32) -> Option<u64> {
    if j >= 64 {
        return None;
    }
    let offset = (1u128 << j) - 1;
    let stride = 1u128 << (j + 1);
    let k = offset + stride * i as u128;
    u64::try_from(k).ok()
}

pub fn phi_checked(i: u64, j: u32) -> Result<u64> {
    phi(i, j).ok_or(Error::Overflow(i))
}

/// Inverse of [`phi`]: `k + 1 = 2^j (2i + 1)`.
pub fn phi_inv(k: u64) -> (u64, u32) {
    let m = k as u128 + 1;
    let j = m.trailing_zeros();
    let odd = m >> j;
    (((odd - 1) / 2) as u64, j)
}

/// The affine map `x ↦ φ(x, j)` as `(offset, stride)`.
pub(crate) fn row_embedding(j: u32) -> Option<(u64, u64)> {
    if j >= 63 {
        return None;
    }
    Some(((1u64 << j) - 1, 1u64 << (j + 1)))
}
