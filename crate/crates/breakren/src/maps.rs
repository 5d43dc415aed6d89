//! Test families of circle maps with one break at ξ₀ = 0.
//!
//! Every family has a lift `F(x) = ⌊x⌋ + β + G({x})` where `G` is an
//! increasing diffeomorphism of `[0,1]` with `G(0) = 0`, `G(1) = 1`. The break
//! comes from `G′(0) ≠ G′(1)`. Non-trivial families are built as
//! `G = M ∘ H` with `M` the fractional-linear profile carrying the break and
//! `H` a perturbation of the identity that is flat to first order at both
//! ends, so the break size stays exactly `c`.

use std::fmt;
use std::str::FromStr;

use crate::error::{validation, Error, Result};
use crate::numerics::{log_sum_derivative, CirclePoint, Real};
use crate::quad;

/// Precision at which preset parameters are parsed. Values are then carried
/// exactly to any higher working precision, so one preset string names one
/// map independent of the working precision.
pub const PARAM_BITS: u32 = 53;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    /// Rigid rotation by β; diagnostic only, `c = 1`.
    Rotation,
    Moebius,
    /// `H(u) = u + ε u²(1−u)²`.
    Smooth { eps: Real },
    /// `H(u) = u + ε K(u − x*)`, `K` an odd C¹ kernel whose derivative is the
    /// even profile `|t|(log 1/|t|)^{−γ}` cut off smoothly at `|t| = 1/(2e)`.
    Zygmund { eps: Real, gamma: Real, xstar: Real },
}

/// Value and derivatives of the fundamental-interval profile `G` at one point.
#[derive(Clone, Debug)]
pub struct Jet {
    pub v: Real,
    pub d1: Real,
    pub d2: Real,
}

#[derive(Clone, Debug)]
pub struct BreakMap {
    family: Family,
    c: Real,
    beta: Real,
}

/// Orbit summary returned by [`BreakMap::iterate`].
#[derive(Clone, Debug)]
pub struct Iterate {
    pub point: CirclePoint,
    /// `Σ log f′` along the orbit.
    pub log_derivative: Real,
    /// Indices `j > 0` at which the orbit landed exactly on the break.
    pub break_hits: Vec<usize>,
}

fn param(v: f64) -> Real {
    Real::from_f64(PARAM_BITS, v)
}

impl BreakMap {
    pub fn rotation(beta: Real) -> BreakMap {
        BreakMap { family: Family::Rotation, c: param(1.0), beta }
    }

    pub fn moebius(c: Real, beta: Real) -> Result<BreakMap> {
        check_c(&c)?;
        Ok(BreakMap { family: Family::Moebius, c, beta })
    }

    pub fn smooth(c: Real, beta: Real, eps: Real) -> Result<BreakMap> {
        check_c(&c)?;
        if eps.is_negative() {
            return Err(validation("smooth family needs eps >= 0"));
        }
        let m = BreakMap { family: Family::Smooth { eps }, c, beta };
        m.check_positive()?;
        Ok(m)
    }

    pub fn zygmund(c: Real, beta: Real, eps: Real, gamma: Real, xstar: Real) -> Result<BreakMap> {
        check_c(&c)?;
        if eps.is_negative() {
            return Err(validation("zygmund family needs eps >= 0"));
        }
        if !gamma.is_positive() {
            return Err(validation("zygmund family needs gamma > 0"));
        }
        if xstar < 0.1 || xstar > 0.9 {
            return Err(validation("xstar must lie in [0.1, 0.9]"));
        }
        let r0 = support_radius(64).to_f64();
        let xs = xstar.to_f64();
        if xs - r0 <= 0.0 || xs + r0 >= 1.0 {
            return Err(validation(format!(
                "kernel support [{:.4}, {:.4}] leaves (0,1); move xstar toward 1/2",
                xs - r0,
                xs + r0
            )));
        }
        let m = BreakMap { family: Family::Zygmund { eps, gamma, xstar }, c, beta };
        m.check_positive()?;
        Ok(m)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            Family::Rotation => "rotation",
            Family::Moebius => "moebius",
            Family::Smooth { .. } => "smooth",
            Family::Zygmund { .. } => "zygmund",
        }
    }

    /// Break size `c`.
    pub fn c(&self) -> &Real {
        &self.c
    }

    pub fn beta(&self) -> &Real {
        &self.beta
    }

    pub fn with_beta(&self, beta: Real) -> BreakMap {
        BreakMap { family: self.family.clone(), c: self.c.clone(), beta }
    }

    /// Regularity exponent used by the gauges: the family γ, or `None` for
    /// families with a Lipschitz `f″`.
    pub fn gamma(&self) -> Option<f64> {
        match &self.family {
            Family::Zygmund { gamma, .. } => Some(gamma.to_f64()),
            _ => None,
        }
    }

    /// Whether `f″` is part of the contract (`γ > 1` for the zygmund family).
    pub fn supports_d2(&self) -> bool {
        match &self.family {
            Family::Zygmund { gamma, .. } => *gamma > 1.0,
            _ => true,
        }
    }

    /// `G`, `G′`, `G″` at `u ∈ [0,1]`, at the precision of `u`.
    pub fn profile(&self, u: &Real) -> Jet {
        let bits = u.prec();
        match &self.family {
            Family::Rotation => Jet { v: u.clone(), d1: Real::one(bits), d2: Real::zero(bits) },
            Family::Moebius => moebius_jet(&self.c, u),
            Family::Smooth { eps } => {
                let one_u = 1i64 - u;
                let w = u * &one_u;
                let h = u + &(eps * &w.square());
                let h1 = 1i64 + &(eps * &(&w * 2i64) * &(1i64 - &(u * 2i64)));
                let h2 = eps * &(2i64 - &(u * 12i64) + &(u.square() * 12i64));
                compose(&self.c, h, h1, h2)
            }
            Family::Zygmund { eps, gamma, xstar } => {
                let t = u - xstar;
                let k = kernel(&t, gamma);
                let h = u + &(eps * &k.v);
                let h1 = 1i64 + &(eps * &k.d1);
                let h2 = eps * &k.d2;
                compose(&self.c, h, h1, h2)
            }
        }
    }

    /// One step of the lift on a circle point.
    pub fn step(&self, p: &CirclePoint) -> CirclePoint {
        let g = self.profile_value(&p.frac);
        advance(p.wind, &self.beta, g)
    }

    /// One step plus `f′` and `f″` at the starting point. At the break the
    /// derivatives are the one-sided limits selected by `side`.
    pub fn step_jet(&self, p: &CirclePoint, side: Side) -> (CirclePoint, Real, Real) {
        let jet = self.profile(&p.frac);
        let next = advance(p.wind, &self.beta, jet.v);
        if side == Side::Left && p.frac.is_zero() {
            let left = self.profile(&Real::one(p.frac.prec()));
            (next, left.d1, left.d2)
        } else {
            (next, jet.d1, jet.d2)
        }
    }

    fn profile_value(&self, u: &Real) -> Real {
        match &self.family {
            Family::Rotation => u.clone(),
            Family::Moebius => moebius_value(&self.c, u),
            _ => self.profile(u).v,
        }
    }

    pub fn eval_lift(&self, x: &Real) -> Result<Real> {
        Ok(self.step(&CirclePoint::from_lift(x)?).lift())
    }

    pub fn eval_d1(&self, x: &Real, side: Side) -> Result<Real> {
        let p = CirclePoint::from_lift(x)?;
        Ok(self.step_jet(&p, side).1)
    }

    /// `f″`; a capability error for the zygmund family with `γ ≤ 1`.
    pub fn eval_d2(&self, x: &Real, side: Side) -> Result<Real> {
        if !self.supports_d2() {
            return Err(Error::Capability("f'' is not defined for gamma <= 1".into()));
        }
        let p = CirclePoint::from_lift(x)?;
        Ok(self.step_jet(&p, side).2)
    }

    /// `fⁿ(x)` and `Σ log f′` along the orbit. A start on the break uses
    /// `side`; later exact hits are recorded and use the right derivative.
    pub fn iterate(&self, x: &CirclePoint, n: usize, side: Side) -> Result<Iterate> {
        let mut p = x.clone();
        let mut factors = Vec::with_capacity(n);
        let mut hits = Vec::new();
        for j in 0..n {
            let s = if j == 0 { side } else { Side::Right };
            if j > 0 && p.is_break() {
                hits.push(j);
            }
            let (next, d1, _) = self.step_jet(&p, s);
            factors.push(d1);
            p = next;
        }
        let log_derivative = if factors.is_empty() {
            Real::zero(x.frac.prec())
        } else {
            log_sum_derivative(&factors)?
        };
        Ok(Iterate { point: p, log_derivative, break_hits: hits })
    }

    /// Total variation ν of `log f′` over the circle, jump included.
    pub fn log_derivative_variation(&self) -> Result<Real> {
        let lc = self.c.ln().abs();
        match &self.family {
            Family::Rotation => Ok(Real::zero(PARAM_BITS)),
            Family::Moebius => Ok(lc * 4i64),
            Family::Smooth { .. } => {
                let inner = quad::integrate_pieces(|x| self.log_slope_f64(x), &[0.0, 0.5, 1.0], 1e-11)?;
                Ok(Real::from_f64(64, inner) + &(lc * 2i64))
            }
            Family::Zygmund { gamma, xstar, .. } => {
                let r0 = support_radius(64).to_f64();
                let xs = xstar.to_f64();
                let knots = [0.0, xs - r0, xs - r0 / 2.0, xs, xs + r0 / 2.0, xs + r0, 1.0];
                let inner = if *gamma > 1.0 {
                    quad::integrate_pieces(|x| self.log_slope_f64(x), &knots, 1e-11)?
                } else {
                    self.grid_variation(&knots, 1 << 14)
                };
                Ok(Real::from_f64(64, inner) + &(lc * 2i64))
            }
        }
    }

    fn log_slope_f64(&self, x: f64) -> f64 {
        let j = self.profile(&Real::from_f64(64, x));
        (j.d2 / &j.d1).to_f64().abs()
    }

    fn grid_variation(&self, knots: &[f64], per_piece: usize) -> f64 {
        let mut tv = 0.0;
        for w in knots.windows(2) {
            let mut prev = None;
            for i in 0..=per_piece {
                let x = w[0] + (w[1] - w[0]) * i as f64 / per_piece as f64;
                let v = self.profile(&Real::from_f64(64, x)).d1.ln().to_f64();
                if let Some(p) = prev {
                    tv += f64::abs(v - p);
                }
                prev = Some(v);
            }
        }
        tv
    }

    fn check_positive(&self) -> Result<()> {
        const N: usize = 10_000;
        for i in 0..=N {
            let u = Real::from_f64(64, i as f64 / N as f64);
            let j = self.profile(&u);
            if !j.d1.is_positive() {
                return Err(validation(format!(
                    "derivative profile not positive at u = {} (f' = {:e})",
                    u.to_f64(),
                    j.d1.to_f64()
                )));
            }
        }
        Ok(())
    }

    /// Canonical preset string, parseable by [`FromStr`].
    pub fn preset(&self) -> String {
        let b = self.beta.to_decimal();
        match &self.family {
            Family::Rotation => format!("rotation:beta={b}"),
            Family::Moebius => format!("moebius:c={},beta={b}", self.c.to_f64()),
            Family::Smooth { eps } => {
                format!("smooth:c={},eps={},beta={b}", self.c.to_f64(), eps.to_f64())
            }
            Family::Zygmund { eps, gamma, xstar } => format!(
                "zygmund:c={},gamma={},eps={},xstar={},beta={b}",
                self.c.to_f64(),
                gamma.to_f64(),
                eps.to_f64(),
                xstar.to_f64()
            ),
        }
    }
}

impl fmt::Display for BreakMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.preset())
    }
}

impl FromStr for BreakMap {
    type Err = Error;

    /// `family[:key=value,...]`, e.g. `zygmund:c=2,gamma=0.75,eps=0.05,xstar=0.5`.
    fn from_str(s: &str) -> Result<BreakMap> {
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut c = param(2.0);
        let mut beta = Real::zero(PARAM_BITS);
        let mut eps = None;
        let mut gamma = param(0.75);
        let mut xstar = param(0.5);
        for kv in rest.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| validation(format!("expected key=value, got {kv:?}")))?;
            let v = v.trim();
            match k.trim() {
                "c" => c = Real::parse(PARAM_BITS, v)?,
                // β may carry a tuned value with more bits than a parameter
                "beta" => beta = Real::parse(decimal_bits(v), v)?,
                "eps" => eps = Some(Real::parse(PARAM_BITS, v)?),
                "gamma" => gamma = Real::parse(PARAM_BITS, v)?,
                "xstar" => xstar = Real::parse(PARAM_BITS, v)?,
                other => return Err(validation(format!("unknown preset key {other:?}"))),
            }
        }
        match name.trim() {
            "rotation" => Ok(BreakMap::rotation(beta)),
            "moebius" => BreakMap::moebius(c, beta),
            "smooth" => BreakMap::smooth(c, beta, eps.unwrap_or_else(|| param(0.1))),
            "zygmund" => BreakMap::zygmund(c, beta, eps.unwrap_or_else(|| param(0.05)), gamma, xstar),
            other => Err(validation(format!("unknown family {other:?}"))),
        }
    }
}

/// Enough bits to hold every significant digit of `v`, at least 256.
fn decimal_bits(v: &str) -> u32 {
    let mantissa = v.split(['e', 'E']).next().unwrap_or(v);
    let digits = mantissa.chars().filter(char::is_ascii_digit).count() as u32;
    (digits * 10 / 3 + 8).max(256)
}

fn check_c(c: &Real) -> Result<()> {
    if !c.is_positive() || *c == 1.0 {
        return Err(validation("break size c must be positive and different from 1"));
    }
    Ok(())
}

fn advance(wind: i64, beta: &Real, g: Real) -> CirclePoint {
    let y = g + beta;
    let fl = y.floor();
    let k = fl.to_i64_exact().expect("lift step stays in range");
    let mut frac = y - &fl;
    let mut wind = wind + k;
    if frac >= 1.0 {
        wind += 1;
        frac = Real::zero(frac.prec());
    }
    CirclePoint { wind, frac }
}

/// `s = 1/c − 1`, so that `M(u) = (1+s)u/(1+su)`.
fn moebius_s(c: &Real, bits: u32) -> Real {
    c.with_prec(bits.max(c.prec())).recip() - 1i64
}

fn moebius_value(c: &Real, u: &Real) -> Real {
    let s = moebius_s(c, u.prec());
    (1i64 + &s) * u / (1i64 + &(&s * u))
}

fn moebius_jet(c: &Real, u: &Real) -> Jet {
    let s = moebius_s(c, u.prec());
    let one_s = 1i64 + &s;
    let den = 1i64 + &(&s * u);
    let inv = den.recip();
    let v = &one_s * u * &inv;
    let d1 = &one_s * &inv.square();
    let d2 = -(&s * &one_s * &inv.square() * &inv) * 2i64;
    Jet { v, d1, d2 }
}

/// `M ∘ H` by the chain rule.
fn compose(c: &Real, h: Real, h1: Real, h2: Real) -> Jet {
    let m = moebius_jet(c, &h);
    Jet { v: m.v, d1: &m.d1 * &h1, d2: &m.d2 * &h1.square() + &(&m.d1 * &h2) }
}

/// Support radius `1/(2e)` of the zygmund kernel.
pub fn support_radius(bits: u32) -> Real {
    (Real::one(bits).exp() * 2i64).recip()
}

/// `S(x) = e^{−1/x}` for `x > 0`, with `S′`, `S″`.
fn smooth_step_base(x: &Real) -> (Real, Real, Real) {
    let bits = x.prec();
    if !x.is_positive() {
        return (Real::zero(bits), Real::zero(bits), Real::zero(bits));
    }
    let inv = x.recip();
    let s = (-&inv).exp();
    let inv2 = inv.square();
    let s1 = &s * &inv2;
    let s2 = &s * &inv2.square() * &(1i64 - &(x * 2i64));
    (s, s1, s2)
}

/// Zygmund kernel `K = Ψ·χ` with its first two derivatives at `t`.
pub fn kernel(t: &Real, gamma: &Real) -> Jet {
    let bits = t.prec();
    let zero = || Real::zero(bits);
    let a = t.abs();
    let r0 = support_radius(bits);
    if a.is_zero() || a >= r0 {
        return Jet { v: zero(), d1: zero(), d2: zero() };
    }
    let sg = t.signum_i() as i64;
    let l = -a.ln();
    let lam = (-(gamma * &l.ln())).exp();
    let gl = gamma / &l;
    let psi = &a.square() * &lam * (sg as f64 * 0.5);
    let psi1 = &a * &lam * &(1i64 + &(&gl * 0.5));
    let psi2 = &lam * &(1i64 + &(&gl * 1.5) + &(gamma * &(gamma + 1i64) / &l.square() * 0.5)) * sg;

    let w = &a * 2i64 / &r0 - 1i64;
    if !w.is_positive() {
        return Jet { v: psi, d1: psi1, d2: psi2 };
    }
    let (sa, sa1, sa2) = smooth_step_base(&(1i64 - &w));
    let (sb, sb1, sb2) = smooth_step_base(&w);
    // A(w) = S(1−w), B(w) = S(w)
    let (ca, ca1, ca2) = (sa, -sa1, sa2);
    let d = &ca + &sb;
    let dw = &ca1 + &sb1;
    let chi = &ca / &d;
    let num = &ca1 * &sb - &(&ca * &sb1);
    let num_w = &ca2 * &sb - &(&ca * &sb2);
    let d2 = d.square();
    let chi_w = &num / &d2;
    let chi_ww = &num_w / &d2 - &(&num * &dw * 2i64 / &(&d2 * &d));
    let dwdt = r0.recip() * (2 * sg);
    let chi1 = &chi_w * &dwdt;
    let chi2 = &chi_ww * &dwdt.square();
    Jet {
        v: &psi * &chi,
        d1: &psi1 * &chi + &(&psi * &chi1),
        d2: &psi2 * &chi + &(&psi1 * &chi1 * 2i64) + &(&psi * &chi2),
    }
}
