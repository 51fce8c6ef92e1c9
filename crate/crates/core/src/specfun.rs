//! Bessel and Hankel functions of integer order and positive real argument.
//!
//! `J_n` comes from Miller's downward recurrence normalized with
//! `J_0 + 2 sum J_2k = 1`, `Y_0` and `Y_1` from their Neumann series in the
//! same `J_k`, and `Y_n` from the (stable) forward recurrence. Both sequences
//! are carried as `mantissa * 2^exponent` so that orders in the hundreds at
//! arguments of order one neither overflow nor underflow. The plain `f64`
//! entry points report [`Error::OverflowRegime`] when a value leaves the
//! representable range; the `*_scaled` variants never do.

use std::f64::consts::FRAC_2_PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest supported order.
pub const MAX_ORDER: usize = 1024;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const RESCALE_THRESHOLD: f64 = 1e180;
const RESCALE_BITS: i64 = 600;
const LAMBDA_SINGULAR: f64 = 1e-14;

/// `x * 2^e` without intermediate overflow of the power.
pub(crate) fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
        if !x.is_finite() {
            return x;
        }
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e as i32)
}

/// Splits `x` into `m * 2^e` with `0.5 <= |m| < 1`.
fn frexp(x: f64) -> (f64, i64) {
    if x == 0.0 || !x.is_finite() {
        return (x, 0);
    }
    let bits = x.to_bits();
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    if exp_bits == 0 {
        let (m, e) = frexp(x * 2f64.powi(64));
        return (m, e - 64);
    }
    let m = f64::from_bits((bits & !(0x7ff_u64 << 52)) | (1022_u64 << 52));
    (m, exp_bits - 1022)
}

/// A real number stored as `mant * 2^exp`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scaled {
    pub mant: f64,
    pub exp: i64,
}

impl Scaled {
    pub fn new(mant: f64, exp: i64) -> Self {
        let (m, e) = frexp(mant);
        if m == 0.0 {
            Scaled { mant: 0.0, exp: 0 }
        } else {
            Scaled { mant: m, exp: exp + e }
        }
    }

    /// The value as an `f64`; may be infinite or flush to zero.
    pub fn to_f64(self) -> f64 {
        ldexp(self.mant, self.exp)
    }

    /// Natural log of the magnitude (`-inf` for zero).
    pub fn ln_abs(self) -> f64 {
        self.mant.abs().ln() + self.exp as f64 * std::f64::consts::LN_2
    }

    pub fn mul(self, other: Scaled) -> Scaled {
        Scaled::new(self.mant * other.mant, self.exp + other.exp)
    }
}

/// A complex number stored as `mant * 2^exp`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledComplex {
    pub mant: Complex64,
    pub exp: i64,
}

impl ScaledComplex {
    pub fn new(mant: Complex64, exp: i64) -> Self {
        let big = mant.re.abs().max(mant.im.abs());
        if big == 0.0 {
            return ScaledComplex { mant: Complex64::new(0.0, 0.0), exp: 0 };
        }
        let (_, e) = frexp(big);
        let s = ldexp(1.0, -e);
        ScaledComplex { mant: mant * s, exp: exp + e }
    }

    /// `re + i im`, aligned to a common exponent.
    pub fn from_parts(re: Scaled, im: Scaled) -> Self {
        let exp = match (re.mant == 0.0, im.mant == 0.0) {
            (true, true) => 0,
            (true, false) => im.exp,
            (false, true) => re.exp,
            (false, false) => re.exp.max(im.exp),
        };
        let mant = Complex64::new(ldexp(re.mant, re.exp - exp), ldexp(im.mant, im.exp - exp));
        ScaledComplex::new(mant, exp)
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(ldexp(self.mant.re, self.exp), ldexp(self.mant.im, self.exp))
    }

    pub fn scale(self, factor: Complex64) -> Self {
        ScaledComplex::new(self.mant * factor, self.exp)
    }

    pub fn add(self, other: ScaledComplex) -> Self {
        if self.mant.norm_sqr() == 0.0 {
            return other;
        }
        if other.mant.norm_sqr() == 0.0 {
            return self;
        }
        let exp = self.exp.max(other.exp);
        let a = self.mant * ldexp(1.0, self.exp - exp);
        let b = other.mant * ldexp(1.0, other.exp - exp);
        ScaledComplex::new(a + b, exp)
    }

    pub fn sub(self, other: ScaledComplex) -> Self {
        self.add(other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn div(self, other: ScaledComplex) -> Self {
        ScaledComplex::new(self.mant / other.mant, self.exp - other.exp)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesselPair {
    pub order: usize,
    pub argument: f64,
    pub j: f64,
    pub y: f64,
}

/// `J_n`, `Y_n` in overflow-safe form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledBesselPair {
    pub order: usize,
    pub argument: f64,
    pub j: Scaled,
    pub y: Scaled,
}

fn check_argument(n_max: usize, z: f64) -> Result<()> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::NonPositiveArgument(z));
    }
    if n_max > MAX_ORDER {
        return Err(Error::OrderTooLarge(n_max));
    }
    Ok(())
}

/// Starting order of the downward recurrence. Arguments larger than the
/// requested order push the start out to `2z` so that `J_start` is negligible.
fn miller_start(n_max: usize, z: f64) -> usize {
    let base = n_max.max((2.0 * z).ceil() as usize);
    let start = base + (10.0 + 2.0 * (base as f64).sqrt()).ceil() as usize;
    start + start % 2
}

/// Normalized `J_0 ..= J_top` for `top >= n_max`.
fn bessel_j_scaled(n_max: usize, z: f64) -> Vec<Scaled> {
    let start = miller_start(n_max, z);
    let mut mant = vec![0.0; start + 1];
    let mut exps = vec![0_i64; start + 1];
    let mut exp = 0_i64;
    let mut above = 0.0_f64;
    let mut here = 1e-30_f64;
    mant[start] = here;
    for k in (1..=start).rev() {
        let mut below = (2.0 * k as f64 / z) * here - above;
        if below.abs() > RESCALE_THRESHOLD {
            let s = ldexp(1.0, -RESCALE_BITS);
            below *= s;
            here *= s;
            exp += RESCALE_BITS;
        }
        mant[k - 1] = below;
        exps[k - 1] = exp;
        above = here;
        here = below;
    }
    // J_0 + 2 sum_{k>=1} J_2k = 1, summed from small terms up.
    let mut norm = 0.0;
    for k in (0..=start).rev().filter(|k| k % 2 == 0) {
        let w = if k == 0 { 1.0 } else { 2.0 };
        norm += w * ldexp(mant[k], exps[k] - exp);
    }
    (0..=start)
        .map(|k| Scaled::new(mant[k] / norm, exps[k] - exp))
        .collect()
}

/// `Y_0(z)` and `Y_1(z)` from the Neumann series in the normalized `J_k`.
fn neumann_y01(j: &[f64], z: f64) -> (f64, f64) {
    let log_term = (0.5 * z).ln() + EULER_GAMMA;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let top = (j.len() - 2) / 2;
    for k in (1..=top).rev() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        s0 += sign * j[2 * k] / k as f64;
        s1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / k as f64;
    }
    let y0 = FRAC_2_PI * log_term * j[0] - 2.0 * FRAC_2_PI * s0;
    let y1 = FRAC_2_PI * (log_term * j[1] - j[0] / z) + FRAC_2_PI * s1;
    (y0, y1)
}

/// `J_n(z)` and `Y_n(z)` for `n = 0..=n_max` in scaled form.
pub fn bessel_jy_scaled(n_max: usize, z: f64) -> Result<Vec<ScaledBesselPair>> {
    check_argument(n_max, z)?;
    let j = bessel_j_scaled(n_max.max(1), z);
    let j_plain: Vec<f64> = j.iter().map(|v| v.to_f64()).collect();
    let (y0, y1) = neumann_y01(&j_plain, z);

    let mut ys = Vec::with_capacity(n_max + 2);
    ys.push(Scaled::new(y0, 0));
    ys.push(Scaled::new(y1, 0));
    let mut exp = 0_i64;
    let mut prev = y0;
    let mut cur = y1;
    for k in 1..n_max {
        let mut next = (2.0 * k as f64 / z) * cur - prev;
        if next.abs() > RESCALE_THRESHOLD {
            let s = ldexp(1.0, -RESCALE_BITS);
            next *= s;
            cur *= s;
            exp += RESCALE_BITS;
        }
        ys.push(Scaled::new(next, exp));
        prev = cur;
        cur = next;
    }
    Ok((0..=n_max)
        .map(|n| ScaledBesselPair { order: n, argument: z, j: j[n], y: ys[n] })
        .collect())
}

/// `J_n(z)` and `Y_n(z)` for `n = 0..=n_max` as plain `f64`.
///
/// `J_n` may underflow to zero at large order; `Y_n` leaving the finite
/// range is reported as [`Error::OverflowRegime`].
pub fn bessel_jy(n_max: usize, z: f64) -> Result<Vec<BesselPair>> {
    bessel_jy_scaled(n_max, z)?
        .into_iter()
        .map(|p| {
            let y = p.y.to_f64();
            if !y.is_finite() || y.abs() < 1e-300 {
                return Err(Error::OverflowRegime { order: p.order, argument: z });
            }
            Ok(BesselPair { order: p.order, argument: z, j: p.j.to_f64(), y })
        })
        .collect()
}

/// `H_n^{(1)}(z)` and its derivative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HankelValue {
    pub order: i64,
    pub argument: f64,
    pub h: Complex64,
    pub h_prime: Complex64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledHankel {
    pub order: i64,
    pub argument: f64,
    pub h: ScaledComplex,
    pub h_prime: ScaledComplex,
}

impl ScaledHankel {
    /// `H_n'(z) / H_n(z)`, free of overflow.
    pub fn log_derivative(&self) -> Complex64 {
        self.h_prime.div(self.h).to_complex()
    }
}

fn order_index(n: i64) -> Result<usize> {
    let m = n.unsigned_abs() as usize;
    if m > MAX_ORDER {
        return Err(Error::OrderTooLarge(m));
    }
    Ok(m)
}

pub fn hankel1_scaled(n: i64, z: f64) -> Result<ScaledHankel> {
    let m = order_index(n)?;
    let pairs = bessel_jy_scaled(m.max(1), z)?;
    let h_of = |k: usize| ScaledComplex::from_parts(pairs[k].j, pairs[k].y);
    let h = h_of(m);
    let h_prime = if m == 0 {
        h_of(1).scale(Complex64::new(-1.0, 0.0))
    } else {
        h_of(m - 1).sub(h.scale(Complex64::new(m as f64 / z, 0.0)))
    };
    // H_{-n} = (-1)^n H_n
    let sign = if n < 0 && m % 2 == 1 { -1.0 } else { 1.0 };
    Ok(ScaledHankel {
        order: n,
        argument: z,
        h: h.scale(Complex64::new(sign, 0.0)),
        h_prime: h_prime.scale(Complex64::new(sign, 0.0)),
    })
}

/// Hankel function of the first kind and its derivative.
pub fn hankel1(n: i64, z: f64) -> Result<HankelValue> {
    let s = hankel1_scaled(n, z)?;
    let h = s.h.to_complex();
    let h_prime = s.h_prime.to_complex();
    if !(h.re.is_finite() && h.im.is_finite() && h_prime.re.is_finite() && h_prime.im.is_finite()) {
        return Err(Error::OverflowRegime { order: n.unsigned_abs() as usize, argument: z });
    }
    Ok(HankelValue { order: n, argument: z, h, h_prime })
}

/// Scalars `alpha_1n`, `alpha_2n` and `Lambda_n` at a given radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeScalars {
    pub n: i64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub radius: f64,
    pub alpha1: Complex64,
    pub alpha2: Complex64,
    pub lambda_n: Complex64,
}

/// `kappa H_n'(kappa r) / H_n(kappa r)`.
pub fn alpha(n: i64, kappa: f64, radius: f64) -> Result<Complex64> {
    Ok(hankel1_scaled(n, kappa * radius)?.log_derivative() * kappa)
}

pub fn mode_scalars(n: i64, kappa1: f64, kappa2: f64, radius: f64) -> Result<ModeScalars> {
    if !(kappa1 > 0.0 && kappa2 > kappa1) {
        return Err(Error::InvalidMaterial(format!(
            "wavenumbers must satisfy 0 < kappa1 < kappa2 (got {kappa1}, {kappa2})"
        )));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidRadii(format!("radius must be positive, got {radius}")));
    }
    let alpha1 = alpha(n, kappa1, radius)?;
    let alpha2 = alpha(n, kappa2, radius)?;
    let nr = n as f64 / radius;
    let lambda_n = Complex64::new(nr * nr, 0.0) - alpha1 * alpha2;
    if lambda_n.norm() < LAMBDA_SINGULAR {
        return Err(Error::DegenerateMode { n, magnitude: lambda_n.norm() });
    }
    Ok(ModeScalars { n, kappa1, kappa2, radius, alpha1, alpha2, lambda_n })
}

/// `|H_n(k1 R)/H_n(k1 R_hat) - H_n(k2 R)/H_n(k2 R_hat)|`, evaluated in
/// scaled arithmetic so that large orders do not overflow.
pub fn hankel_ratio_gap(n: i64, kappa1: f64, kappa2: f64, r_hat: f64, r: f64) -> Result<f64> {
    let ratio = |kappa: f64| -> Result<ScaledComplex> {
        let outer = hankel1_scaled(n, kappa * r)?;
        let inner = hankel1_scaled(n, kappa * r_hat)?;
        Ok(outer.h.div(inner.h))
    };
    let gap = ratio(kappa1)?.sub(ratio(kappa2)?);
    Ok(gap.to_complex().norm())
}

/// Right-hand side of the ratio-gap estimate,
/// `k2 (k2 - k1) (R^2 - R_hat^2) (R_hat/R)^|n| / (|n| - 1)`.
pub fn hankel_ratio_bound(n: i64, kappa1: f64, kappa2: f64, r_hat: f64, r: f64) -> f64 {
    let m = n.unsigned_abs() as f64;
    kappa2 * (kappa2 - kappa1) * (r * r - r_hat * r_hat) * (r_hat / r).powf(m) / (m - 1.0)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    // Reference values from an arbitrary-precision library.
    const REFERENCE: &[(usize, f64, f64, f64)] = &[
        (0, 1.0, 0.765197686557966551449717526103, 0.0882569642156769579829267660235),
        (1, 1.0, 0.440050585744933515959682203719, -0.781212821300288716547150000048),
        (0, 2.0, 0.22389077914123566805182745465, 0.510375672649745119596606592727),
        (1, 2.0, 0.576724807756873387202448242269, -0.107032431540937546888370772277),
        (5, 3.0, 0.043028434877047583924911260463, -1.90594595382867373221833479103),
        (0, 19.0, 0.146629439659651204257528702436, -0.109519691385341484271081453249),
        (1, 19.0, -0.105701431142409266799101862549, -0.149560113862653291665570677616),
        (40, 10.0, 6.03089531234690663174329362867e-21, -1362803297269337395.37175486053),
        (100, PI, 4.27930348508518317502212956093e-139, -7.44203114043013136423391405073e+135),
        (3, 0.5, 0.00256372999458724407535447158978, -42.0594943047238826876589358945),
    ];

    #[test]
    fn matches_reference_values() {
        for &(n, z, j, y) in REFERENCE {
            let p = bessel_jy(n, z).unwrap()[n];
            assert!(rel(p.j, j) < 1e-12, "J_{n}({z}) = {} vs {j}", p.j);
            assert!(rel(p.y, y) < 1e-12, "Y_{n}({z}) = {} vs {y}", p.y);
        }
    }

    #[test]
    fn j0_matches_power_series() {
        // sum (-1)^k (z/2)^{2k} / (k!)^2, summed until terms vanish
        let z: f64 = 2.0;
        let mut term: f64 = 1.0;
        let mut series = 0.0;
        let mut k = 0.0;
        while term.abs() > 1e-18 {
            series += term;
            k += 1.0;
            term *= -(z / 2.0).powi(2) / (k * k);
        }
        let j0 = bessel_jy(0, z).unwrap()[0].j;
        assert!(rel(j0, series) < 1e-14);
    }

    #[test]
    fn wronskian_small_orders() {
        let pairs = bessel_jy(6, 3.0).unwrap();
        for w in pairs.windows(2) {
            let lhs = w[1].j * w[0].y - w[0].j * w[1].y;
            assert!(rel(lhs, 2.0 / (3.0 * PI)) < 1e-12);
        }
    }

    #[test]
    fn product_asymptotics_at_order_100() {
        let p = bessel_jy(100, PI).unwrap()[100];
        let scaled = 100.0 * (p.j * p.y).abs();
        assert!(rel(scaled, 1.0 / PI) < 0.02, "n|J Y| = {scaled}");
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(bessel_jy(3, 0.0), Err(Error::NonPositiveArgument(_))));
        assert!(matches!(bessel_jy(3, -1.0), Err(Error::NonPositiveArgument(_))));
        assert!(matches!(bessel_jy(2000, 1.0), Err(Error::OrderTooLarge(_))));
    }

    #[test]
    fn overflow_is_reported_for_plain_values() {
        // Y_300(0.5) ~ 1e800
        match bessel_jy(300, 0.5) {
            Err(Error::OverflowRegime { order, .. }) => assert!(order > 100 && order <= 300),
            other => panic!("expected overflow, got {other:?}"),
        }
        // the scaled form has no such limit
        let p = bessel_jy_scaled(300, 0.5).unwrap();
        assert!(p[300].y.ln_abs() > 1500.0);
    }

    #[test]
    fn hankel_symmetry_and_derivative() {
        let h3 = hankel1(3, 2.5).unwrap();
        let hm3 = hankel1(-3, 2.5).unwrap();
        assert_eq!(hm3.h, -h3.h);
        assert_eq!(hm3.h_prime, -h3.h_prime);

        let h0 = hankel1(0, 1.0).unwrap();
        let h1 = hankel1(1, 1.0).unwrap();
        assert_eq!(h0.h_prime, -h1.h);

        let z = 4.0;
        let d = 1e-6;
        let hp = hankel1(7, z).unwrap().h_prime;
        let fd = (hankel1(7, z + d).unwrap().h - hankel1(7, z - d).unwrap().h) / (2.0 * d);
        assert!((hp - fd).norm() / hp.norm() < 1e-7);
    }

    #[test]
    fn mode_scalars_zero_mode() {
        let (k1, k2) = (PI / 2.0, PI);
        let m = mode_scalars(0, k1, k2, 1.0).unwrap();
        let a = |k: f64| {
            let h = hankel1(0, k).unwrap();
            k * h.h_prime / h.h
        };
        assert!((m.alpha1 - a(k1)).norm() < 1e-13);
        assert!((m.alpha2 - a(k2)).norm() < 1e-13);
        assert!((m.lambda_n + a(k1) * a(k2)).norm() < 1e-12);
    }

    #[test]
    fn mode_scalars_parity_and_asymptotics() {
        let (k1, k2) = (PI / 2.0, PI);
        let p = mode_scalars(17, k1, k2, 1.0).unwrap();
        let m = mode_scalars(-17, k1, k2, 1.0).unwrap();
        assert_eq!(p.alpha1, m.alpha1);
        assert_eq!(p.alpha2, m.alpha2);
        assert_eq!(p.lambda_n, m.lambda_n);

        let big = mode_scalars(200, k1, k2, 1.0).unwrap();
        let limit = 5.0 * PI * PI / 8.0;
        assert!((big.lambda_n - limit).norm() <= 10.0 / 200.0);
    }

    #[test]
    fn mode_scalars_rejects_bad_wavenumbers() {
        assert!(mode_scalars(1, PI, PI / 2.0, 1.0).is_err());
        assert!(mode_scalars(1, 1.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn ratio_gap_cases() {
        let (k1, k2) = (PI / 2.0, PI);
        assert_eq!(hankel_ratio_gap(12, k2, k2, 0.5, 1.0).unwrap(), 0.0);

        let g60 = hankel_ratio_gap(60, k1, k2, 0.5, 1.0).unwrap();
        assert!(g60 <= PI * (PI / 2.0) * 0.75 * 0.5f64.powi(60) / 59.0);
        assert!(g60 > 0.0);

        let g30 = hankel_ratio_gap(30, k1, k2, 0.5, 1.0).unwrap();
        let g40 = hankel_ratio_gap(40, k1, k2, 0.5, 1.0).unwrap();
        assert!(g40 / g30 <= 0.5f64.powi(10) * (29.0 / 39.0) * 4.0);
    }

    #[test]
    fn scaled_roundtrip() {
        for &x in &[1.0, -3.5, 1e-310, 7e300, 0.0] {
            let s = Scaled::new(x, 0);
            assert_eq!(s.to_f64(), x);
        }
        let big = Scaled::new(1.5, 3000);
        assert!(big.to_f64().is_infinite());
        assert!((big.ln_abs() - (1.5f64.ln() + 3000.0 * std::f64::consts::LN_2)).abs() < 1e-9);
    }
}
