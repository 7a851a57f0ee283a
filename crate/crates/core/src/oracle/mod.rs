//! Expected outputs computed with host big-integer arithmetic.
//!
//! Nothing here runs or inspects addition-machine code. `None` means the
//! expected output is unspecified for that input and only halting is
//! checked.

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::isa::IntVal;

fn two(x: &[IntVal]) -> Option<(&IntVal, &IntVal)> {
    match x {
        [a, b] => Some((a, b)),
        _ => None,
    }
}

pub fn product(x: &[IntVal]) -> Option<Vec<IntVal>> {
    let (a, b) = two(x)?;
    Some(alloc::vec![a * b])
}

/// `floor(y / z)`; division by zero yields 0.
pub fn floor_div(x: &[IntVal]) -> Option<Vec<IntVal>> {
    let (y, z) = two(x)?;
    if z.is_zero() {
        return Some(alloc::vec![BigInt::zero()]);
    }
    Some(alloc::vec![y.div_floor(z)])
}

/// The powers of two whose sum is `|x|`, smallest first.
pub fn set_bit_powers(x: &[IntVal]) -> Option<Vec<IntVal>> {
    let [x] = x else { return None };
    let m = x.magnitude();
    Some(
        (0..m.bits())
            .filter(|&i| m.bit(i))
            .map(|i| BigInt::one() << i)
            .collect(),
    )
}

/// Product of nonnegative operands; negative operands give no output.
pub fn nonnegative_product(x: &[IntVal]) -> Option<Vec<IntVal>> {
    let (a, b) = two(x)?;
    if a.is_negative() || b.is_negative() {
        return Some(Vec::new());
    }
    Some(alloc::vec![a * b])
}

/// Input `m, q_1, ..., q_m, k`; expected `q_k`, unspecified unless `1 <= k <= m`.
pub fn queue_recall(x: &[IntVal]) -> Option<Vec<IntVal>> {
    let m: usize = x.first()?.try_into().ok()?;
    if x.len() != m + 2 {
        return None;
    }
    let k: usize = x[m + 1].clone().try_into().ok()?;
    if k == 0 || k > m {
        return None;
    }
    Some(alloc::vec![x[k].clone()])
}

/// `2^k * max(x, 1)` for the least `k >= 1` with `2^k >= x`.
pub fn nonautomatic_single(x: &[IntVal]) -> Option<Vec<IntVal>> {
    let [x] = x else { return None };
    let base = if x < &BigInt::one() { BigInt::one() } else { x.clone() };
    let mut k = 1u64;
    while (BigInt::one() << k) < *x {
        k += 1;
    }
    Some(alloc::vec![base << k])
}

/// Input `y, x`: 0 when `y <= 0` or `x <= y`, otherwise `2^k * x` for the
/// least `k >= 1` with `2^k * y >= x`.
pub fn nonautomatic_pair(v: &[IntVal]) -> Option<Vec<IntVal>> {
    let (y, x) = two(v)?;
    if !y.is_positive() || x <= y {
        return Some(alloc::vec![BigInt::zero()]);
    }
    let mut k = 1u64;
    while (y << k) < *x {
        k += 1;
    }
    Some(alloc::vec![x << k])
}

/// Number of bits of the magnitude; 0 for 0.
pub fn bit_length(x: &IntVal) -> u64 {
    x.magnitude().bits()
}

/// Least `m` with `2^m * |z| >= |y|`, 0 when `z = 0`.
pub fn division_size(y: &IntVal, z: &IntVal) -> u64 {
    if z.is_zero() {
        return 0;
    }
    let (y, z) = (y.abs(), z.abs());
    let mut m = bit_length(&y).saturating_sub(bit_length(&z));
    while m > 0 && (&z << (m - 1)) >= y {
        m -= 1;
    }
    while (&z << m) < y {
        m += 1;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn division_rounds_down() {
        assert_eq!(floor_div(&ints(&[-7, 2])), Some(ints(&[-4])));
        assert_eq!(floor_div(&ints(&[7, -2])), Some(ints(&[-4])));
        assert_eq!(floor_div(&ints(&[5, 7])), Some(ints(&[0])));
    }

    #[test]
    fn powers() {
        assert_eq!(set_bit_powers(&ints(&[100])), Some(ints(&[4, 32, 64])));
        assert_eq!(set_bit_powers(&ints(&[0])), Some(vec![]));
    }

    #[test]
    fn nonautomatic_values() {
        assert_eq!(nonautomatic_single(&ints(&[5])), Some(ints(&[40])));
        assert_eq!(nonautomatic_single(&ints(&[0])), Some(ints(&[2])));
        assert_eq!(nonautomatic_pair(&ints(&[3, 10])), Some(ints(&[40])));
        assert_eq!(nonautomatic_pair(&ints(&[0, 7])), Some(ints(&[0])));
    }

    #[test]
    fn queue_lookup() {
        assert_eq!(queue_recall(&ints(&[3, 6, 5, 27, 1])), Some(ints(&[6])));
        assert_eq!(queue_recall(&ints(&[3, 6, 5, 27, 4])), None);
    }

    #[test]
    fn division_size_parameter() {
        assert_eq!(division_size(&BigInt::from(0), &BigInt::from(3)), 0);
        assert_eq!(division_size(&BigInt::from(12), &BigInt::from(3)), 2);
        assert_eq!(division_size(&BigInt::from(13), &BigInt::from(3)), 3);
    }
}
