//! Double-double arithmetic (~31 significant digits) for the Mittag-Leffler
//! series kernel, where plain f64 cannot survive the alternating-series
//! cancellation at moderate arguments.
//!
//! Only the operations the series needs are implemented: add/sub/mul/div,
//! exp, ln, a restricted sin, and a signed log-gamma via Stirling's series
//! with upward recurrence. `f64::mul_add` supplies the exact-product split.

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    pub const LN2: Dd = Dd {
        hi: 0.693_147_180_559_945_3,
        lo: 2.319_046_813_846_299_6e-17,
    };
    pub const HALF_LN_TWO_PI: Dd = Dd {
        hi: 0.918_938_533_204_672_8,
        lo: -3.878_294_158_067_241_4e-17,
    };
    pub const PI: Dd = Dd {
        hi: 3.141_592_653_589_793,
        lo: 1.224_646_799_147_353_2e-16,
    };

    #[inline]
    pub fn from_f64(a: f64) -> Dd {
        Dd { hi: a, lo: 0.0 }
    }

    /// Exact product of two f64 values.
    #[inline]
    pub fn from_prod(a: f64, b: f64) -> Dd {
        let (p, e) = two_prod(a, b);
        Dd { hi: p, lo: e }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    pub fn add(self, o: Dd) -> Dd {
        let (s1, e1) = two_sum(self.hi, o.hi);
        let (s2, e2) = two_sum(self.lo, o.lo);
        let (s1, e1) = quick_two_sum(s1, e1 + s2);
        let (hi, lo) = quick_two_sum(s1, e1 + e2);
        Dd { hi, lo }
    }

    #[inline]
    pub fn add_f64(self, o: f64) -> Dd {
        self.add(Dd::from_f64(o))
    }

    #[inline]
    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    pub fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    #[inline]
    pub fn mul_f64(self, o: f64) -> Dd {
        self.mul(Dd::from_f64(o))
    }

    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul_f64(q1));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul_f64(q2));
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }.add_f64(q3)
    }

    #[inline]
    pub fn recip(self) -> Dd {
        Dd::ONE.div(self)
    }

    /// exp(self); argument must keep exp within f64 range.
    pub fn exp(self) -> Dd {
        if self.hi < -700.0 {
            // below the normal range; the series treats this as zero
            return Dd::ZERO;
        }
        let m = (self.hi / Dd::LN2.hi).round();
        let r = self.sub(Dd::LN2.mul_f64(m));
        // Taylor on |r| <= ~0.35; the 1/k factor must stay a dd division
        let mut sum = Dd::ONE.add(r);
        let mut term = r;
        for k in 2..40 {
            term = term.mul(r).div(Dd::from_f64(k as f64));
            sum = sum.add(term);
            if term.hi.abs() < 1e-36 * sum.hi.abs() {
                break;
            }
        }
        let scale = f64_exp2(m as i32);
        Dd {
            hi: sum.hi * scale,
            lo: sum.lo * scale,
        }
    }

    /// ln(self); requires a positive value. One Newton step from the f64 seed.
    pub fn ln(self) -> Dd {
        debug_assert!(self.hi > 0.0);
        let y0 = self.hi.ln();
        // y = y0 + (x * exp(-y0) - 1)
        let e = Dd::from_f64(-y0).exp();
        let d = self.mul(e).sub(Dd::ONE);
        Dd::from_f64(y0).add(d)
    }

    /// sin(self) for |self| <= ~1.6 (only used after pi-reduction).
    pub fn sin_restricted(self) -> Dd {
        let x2 = self.mul(self);
        let mut term = self;
        let mut sum = self;
        for k in 1..25 {
            let denom = (2 * k) as f64 * (2 * k + 1) as f64;
            term = term.mul(x2).div(Dd::from_f64(-denom));
            sum = sum.add(term);
            if term.hi.abs() < 1e-36 * (sum.hi.abs() + 1e-300) {
                break;
            }
        }
        sum
    }
}

#[inline]
fn f64_exp2(n: i32) -> f64 {
    // 2^n for |n| within f64 range; exact.
    f64::from_bits(((1023 + n) as u64) << 52)
}

/// Stirling coefficients B_{2j} / (2j (2j-1)) as exact rational pairs.
const STIRLING: [(f64, f64); 12] = [
    (1.0, 12.0),
    (-1.0, 360.0),
    (1.0, 1260.0),
    (-1.0, 1680.0),
    (1.0, 1188.0),
    (-691.0, 360360.0),
    (1.0, 156.0),
    (-3617.0, 122400.0),
    (43867.0, 244188.0),
    (-174611.0, 125400.0),
    (77683.0, 5796.0),
    (-236364091.0, 1506960.0),
];

/// ln Gamma(x) for x > 0, accurate to roughly 1e-30 relative.
///
/// Shifts the argument above 32 by the recurrence Gamma(x+1) = x Gamma(x),
/// then applies Stirling's series.
pub(crate) fn lgamma_dd(x: Dd) -> Dd {
    debug_assert!(x.hi > 0.0);
    let mut shift = Dd::ONE;
    let mut y = x;
    while y.hi < 32.0 {
        shift = shift.mul(y);
        y = y.add_f64(1.0);
    }
    let ln_y = y.ln();
    // (y - 1/2) ln y - y + ln(2 pi)/2 + sum c_j y^{1-2j}
    let mut acc = y
        .add_f64(-0.5)
        .mul(ln_y)
        .sub(y)
        .add(Dd::HALF_LN_TWO_PI);
    let y2 = y.mul(y).recip();
    let mut p = y.recip();
    for (num, den) in STIRLING {
        acc = acc.add(p.mul(Dd::from_f64(num).div(Dd::from_f64(den))));
        p = p.mul(y2);
    }
    if shift.hi != 1.0 || shift.lo != 0.0 {
        acc = acc.sub(shift.ln());
    }
    acc
}

/// sin(pi x) with exact integer reduction.
fn sin_pi_dd(x: Dd) -> Dd {
    let n = x.hi.round();
    let r = x.add_f64(-n);
    let s = Dd::PI.mul(r).sin_restricted();
    if (n as i64) % 2 == 0 {
        s
    } else {
        s.neg()
    }
}

/// ln |Gamma(x)| and the sign of Gamma(x) for any non-pole real x.
///
/// Returns None at poles (x a nonpositive integer), where 1/Gamma is zero.
pub(crate) fn lgamma_signed_dd(x: Dd) -> Option<(Dd, f64)> {
    if x.hi > 0.5 {
        return Some((lgamma_dd(x), 1.0));
    }
    // reflection: Gamma(x) = pi / (sin(pi x) Gamma(1-x))
    let s = sin_pi_dd(x);
    if s.hi == 0.0 {
        return None;
    }
    let ln_abs = Dd::PI
        .ln()
        .sub(Dd::from_f64(s.hi.abs()).add_f64(s.lo * s.hi.signum()).ln())
        .sub(lgamma_dd(Dd::ONE.sub(x)));
    Some((ln_abs, s.hi.signum()))
}
