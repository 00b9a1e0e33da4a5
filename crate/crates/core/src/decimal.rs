//! Fixed-point decimal numbers for currency-style model values.
//!
//! A [`Decimal`] is an `i128` count of units of `10^-scale`. Addition and
//! subtraction are exact; multiplication and division take an explicit target
//! scale and round half-to-even. Equality and ordering are numeric, so
//! `1.5 == 1.50`, while `Display` keeps the stored scale (`"1.50"`).

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

/// Largest scale accepted anywhere. Keeps `10^scale` well inside `i128`.
pub const MAX_SCALE: u32 = 18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum DecimalError {
    #[error("decimal overflow")]
    Overflow,
    #[error("division by zero")]
    DivideByZero,
    #[error("invalid decimal literal")]
    Invalid,
    #[error("scale {0} exceeds the maximum of {MAX_SCALE}")]
    ScaleTooLarge(u32),
}

#[derive(Clone, Copy)]
pub struct Decimal {
    units: i128,
    scale: u32,
}

fn pow10(exp: u32) -> Result<i128, DecimalError> {
    10i128.checked_pow(exp).ok_or(DecimalError::Overflow)
}

/// Divides `num` by `den` (den > 0), rounding half to even.
fn div_half_even(num: i128, den: i128) -> i128 {
    debug_assert!(den > 0);
    let q = num.div_euclid(den);
    let r = num.rem_euclid(den);
    // q is floored; compare the remainder against half the divisor.
    match (2 * r).cmp(&den) {
        Ordering::Less => q,
        Ordering::Greater => q + 1,
        Ordering::Equal => {
            if q % 2 == 0 {
                q
            } else {
                q + 1
            }
        }
    }
}

impl Decimal {
    pub const ZERO: Decimal = Decimal { units: 0, scale: 0 };

    pub fn new(units: i128, scale: u32) -> Self {
        assert!(scale <= MAX_SCALE, "scale out of range");
        Decimal { units, scale }
    }

    pub fn from_int(value: i64) -> Self {
        Decimal {
            units: value as i128,
            scale: 0,
        }
    }

    pub fn units(&self) -> i128 {
        self.units
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn is_zero(&self) -> bool {
        self.units == 0
    }

    pub fn is_negative(&self) -> bool {
        self.units < 0
    }

    /// Units expressed at a larger scale. Fails on overflow.
    fn units_at(&self, scale: u32) -> Result<i128, DecimalError> {
        debug_assert!(scale >= self.scale);
        self.units
            .checked_mul(pow10(scale - self.scale)?)
            .ok_or(DecimalError::Overflow)
    }

    /// Re-expresses the value with exactly `scale` fractional digits,
    /// rounding half to even when digits are dropped.
    pub fn rescale(&self, scale: u32) -> Result<Decimal, DecimalError> {
        if scale > MAX_SCALE {
            return Err(DecimalError::ScaleTooLarge(scale));
        }
        let units = if scale >= self.scale {
            self.units_at(scale)?
        } else {
            div_half_even(self.units, pow10(self.scale - scale)?)
        };
        Ok(Decimal { units, scale })
    }

    /// Rounds to at most `scale` fractional digits without padding.
    pub fn round_to(&self, scale: u32) -> Result<Decimal, DecimalError> {
        if self.scale <= scale {
            Ok(*self)
        } else {
            self.rescale(scale)
        }
    }

    pub fn checked_add(&self, other: &Decimal) -> Result<Decimal, DecimalError> {
        let scale = self.scale.max(other.scale);
        let units = self
            .units_at(scale)?
            .checked_add(other.units_at(scale)?)
            .ok_or(DecimalError::Overflow)?;
        Ok(Decimal { units, scale })
    }

    pub fn checked_sub(&self, other: &Decimal) -> Result<Decimal, DecimalError> {
        self.checked_add(&other.neg())
    }

    pub fn neg(&self) -> Decimal {
        Decimal {
            units: -self.units,
            scale: self.scale,
        }
    }

    /// Exact product rounded half-even to at most `scale` digits.
    pub fn checked_mul(&self, other: &Decimal, scale: u32) -> Result<Decimal, DecimalError> {
        let units = self
            .units
            .checked_mul(other.units)
            .ok_or(DecimalError::Overflow)?;
        let product_scale = self.scale + other.scale;
        if product_scale > 2 * MAX_SCALE {
            return Err(DecimalError::Overflow);
        }
        if product_scale <= scale {
            return Ok(Decimal {
                units,
                scale: product_scale,
            });
        }
        let units = div_half_even(units, pow10(product_scale - scale)?);
        Ok(Decimal { units, scale })
    }

    /// Quotient rounded half-even to exactly `scale` digits.
    pub fn checked_div(&self, other: &Decimal, scale: u32) -> Result<Decimal, DecimalError> {
        if other.units == 0 {
            return Err(DecimalError::DivideByZero);
        }
        if scale > MAX_SCALE {
            return Err(DecimalError::ScaleTooLarge(scale));
        }
        // self/other = (a / 10^sa) / (b / 10^sb); want units at `scale`:
        // a * 10^(scale + sb - sa) / b
        let (mut num, mut den) = (self.units, other.units);
        let shift = scale as i64 + other.scale as i64 - self.scale as i64;
        if shift >= 0 {
            num = num
                .checked_mul(pow10(shift as u32)?)
                .ok_or(DecimalError::Overflow)?;
        } else {
            den = den
                .checked_mul(pow10((-shift) as u32)?)
                .ok_or(DecimalError::Overflow)?;
        }
        if den < 0 {
            num = num.checked_neg().ok_or(DecimalError::Overflow)?;
            den = den.checked_neg().ok_or(DecimalError::Overflow)?;
        }
        Ok(Decimal {
            units: div_half_even(num, den),
            scale,
        })
    }

    /// Renders with `,` thousands separators, for human display only.
    pub fn to_grouped_string(&self) -> String {
        let plain = self.to_string();
        let (sign, rest) = match plain.strip_prefix('-') {
            Some(rest) => ("-", rest),
            None => ("", plain.as_str()),
        };
        let (int, frac) = match rest.split_once('.') {
            Some((i, f)) => (i, Some(f)),
            None => (rest, None),
        };
        let mut grouped = String::with_capacity(int.len() + int.len() / 3);
        for (i, ch) in int.chars().enumerate() {
            if i > 0 && (int.len() - i) % 3 == 0 {
                grouped.push(',');
            }
            grouped.push(ch);
        }
        match frac {
            Some(f) => format!("{sign}{grouped}.{f}"),
            None => format!("{sign}{grouped}"),
        }
    }

    fn normalized(&self) -> (i128, u32) {
        let (mut units, mut scale) = (self.units, self.scale);
        while scale > 0 && units % 10 == 0 {
            units /= 10;
            scale -= 1;
        }
        (units, scale)
    }
}

impl Default for Decimal {
    fn default() -> Self {
        Decimal::ZERO
    }
}

impl PartialEq for Decimal {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Decimal {}

impl Hash for Decimal {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.normalized().hash(state);
    }
}

impl Ord for Decimal {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, sa) = self.normalized();
        let (b, sb) = other.normalized();
        let scale = sa.max(sb);
        // Normalized scales are ≤ MAX_SCALE; widening can still overflow for
        // huge magnitudes, in which case signs and magnitude order suffice.
        let lhs = a.checked_mul(10i128.pow(scale - sa));
        let rhs = b.checked_mul(10i128.pow(scale - sb));
        match (lhs, rhs) {
            (Some(l), Some(r)) => l.cmp(&r),
            (None, _) => {
                if a < 0 {
                    Ordering::Less
                } else {
                    Ordering::Greater
                }
            }
            (_, None) => {
                if b < 0 {
                    Ordering::Greater
                } else {
                    Ordering::Less
                }
            }
        }
    }
}

impl PartialOrd for Decimal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.units < 0 { "-" } else { "" };
        let abs = self.units.unsigned_abs();
        if self.scale == 0 {
            return write!(f, "{sign}{abs}");
        }
        let div = 10u128.pow(self.scale);
        write!(
            f,
            "{sign}{}.{:0width$}",
            abs / div,
            abs % div,
            width = self.scale as usize
        )
    }
}

impl fmt::Debug for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Decimal {
    type Err = DecimalError;

    /// Accepts `-?digits(.digits)?`. No exponents, no separators.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (negative, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (int, frac) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int.is_empty() || !int.bytes().all(|b| b.is_ascii_digit()) {
            return Err(DecimalError::Invalid);
        }
        if body.contains('.') && frac.is_empty() {
            return Err(DecimalError::Invalid);
        }
        if !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(DecimalError::Invalid);
        }
        let scale = frac.len() as u32;
        if scale > MAX_SCALE {
            return Err(DecimalError::ScaleTooLarge(scale));
        }
        let mut units: i128 = 0;
        for b in int.bytes().chain(frac.bytes()) {
            units = units
                .checked_mul(10)
                .and_then(|u| u.checked_add((b - b'0') as i128))
                .ok_or(DecimalError::Overflow)?;
        }
        if negative {
            units = -units;
        }
        Ok(Decimal { units, scale })
    }
}
