//! Small numerical helpers shared by the bound evaluation and the sweeps.

/// Kahan-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// A real number stored as `sign * exp(log_abs)`. Zero has `sign == 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLog {
    pub sign: i8,
    pub log_abs: f64,
}

impl SignedLog {
    pub const ONE: SignedLog = SignedLog {
        sign: 1,
        log_abs: 0.0,
    };

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            SignedLog {
                sign: 0,
                log_abs: f64::NEG_INFINITY,
            }
        } else {
            SignedLog {
                sign: if x > 0.0 { 1 } else { -1 },
                log_abs: x.abs().ln(),
            }
        }
    }

    pub fn mul(self, other: SignedLog) -> Self {
        if self.sign == 0 || other.sign == 0 {
            return SignedLog::from_f64(0.0);
        }
        SignedLog {
            sign: self.sign * other.sign,
            log_abs: self.log_abs + other.log_abs,
        }
    }

    /// `self - other`, computed without leaving log space when both are
    /// positive.
    pub fn sub(self, other: SignedLog) -> Self {
        if other.sign == 0 {
            return self;
        }
        if self.sign == 0 {
            return SignedLog {
                sign: -other.sign,
                log_abs: other.log_abs,
            };
        }
        if self.sign != other.sign {
            // |a| + |b| with the sign of a
            let (hi, lo) = if self.log_abs >= other.log_abs {
                (self.log_abs, other.log_abs)
            } else {
                (other.log_abs, self.log_abs)
            };
            return SignedLog {
                sign: self.sign,
                log_abs: hi + (lo - hi).exp().ln_1p(),
            };
        }
        // same sign: sign * (|a| - |b|)
        let d = other.log_abs - self.log_abs;
        if d == 0.0 {
            return SignedLog::from_f64(0.0);
        }
        if d < 0.0 {
            // |a| > |b|
            SignedLog {
                sign: self.sign,
                log_abs: self.log_abs + (-(d.exp())).ln_1p(),
            }
        } else {
            SignedLog {
                sign: -self.sign,
                log_abs: other.log_abs + (-((-d).exp())).ln_1p(),
            }
        }
    }

    pub fn to_f64(self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            f64::from(self.sign) * self.log_abs.exp()
        }
    }
}

/// Product of `f(x)` over the slice, either directly or in signed log space.
pub fn product(values: impl Iterator<Item = f64>, log_space: bool) -> SignedLog {
    if log_space {
        values.fold(SignedLog::ONE, |acc, v| acc.mul(SignedLog::from_f64(v)))
    } else {
        SignedLog::from_f64(values.product())
    }
}
