//! Signed feature hashing for categorical columns (64-bit FNV-1a).

use crate::error::{Error, Result};

const FNV_OFFSET_BASIS: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET_BASIS, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(FNV_PRIME)
    })
}

/// Bucket index and sign for a categorical `value` of `column`.
///
/// The digest input is `column + ":" + value`. The bucket is the low
/// `log2(buckets)` bits of the digest and the sign is the next bit up
/// (0 → +1, 1 → −1).
pub fn hash_feature(value: &str, column: &str, buckets: usize) -> Result<(usize, f64)> {
    if buckets == 0 || !buckets.is_power_of_two() {
        return Err(Error::Invalid(format!(
            "hash bucket count must be a power of two, got {buckets}"
        )));
    }
    let mut key = Vec::with_capacity(column.len() + 1 + value.len());
    key.extend_from_slice(column.as_bytes());
    key.push(b':');
    key.extend_from_slice(value.as_bytes());
    let digest = fnv1a64(&key);
    let bits = buckets.trailing_zeros();
    let index = (digest & (buckets as u64 - 1)) as usize;
    let sign = if (digest >> bits) & 1 == 0 { 1.0 } else { -1.0 };
    Ok((index, sign))
}
