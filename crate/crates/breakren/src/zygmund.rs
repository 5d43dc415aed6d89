//! Regularity gauges `Z_γ`, `Ω`, `P_γ`, `T_γ` and second symmetric
//! differences of `f′`.
//!
//! The gauges are bounds, so they are evaluated in double precision. The
//! second differences are cancellation-heavy and run on [`Real`].

use crate::error::{domain, Result};
use crate::maps::{BreakMap, Family, Side};
use crate::numerics::Real;
use crate::quad;

/// `(log 1/x)^{−γ}`, with `Z(0) = 0`.
pub fn z(gamma: f64, x: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&x) {
        return Err(domain(format!("Z needs x in [0,1), got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    Ok((-x.ln()).powf(-gamma))
}

/// Modulus `Ω(δ, γ)` of functions whose derivative has Zygmund modulus `Z_γ`.
pub fn omega(gamma: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(domain(format!("Omega needs delta in (0,1), got {delta}")));
    }
    let l = -delta.ln();
    if gamma < 1.0 {
        Ok(delta * l.powf(1.0 - gamma))
    } else if gamma == 1.0 {
        if l <= 1.0 {
            return Err(domain("Omega at gamma = 1 needs delta < 1/e"));
        }
        Ok(delta * l.ln())
    } else {
        Ok(delta)
    }
}

/// Partial sum of `P_γ(x) = Σ_{n≥1} Z_γ(x 2^{−n})` with a certified tail.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PSeries {
    pub partial: f64,
    pub terms: usize,
    /// `Σ_{n>terms}` lies in `[tail_lower, tail_upper]` by integral comparison.
    pub tail_lower: f64,
    pub tail_upper: f64,
}

impl PSeries {
    /// Midpoint of the certified bracket for the full series.
    pub fn value(&self) -> f64 {
        self.partial + 0.5 * (self.tail_lower + self.tail_upper)
    }

    pub fn upper(&self) -> f64 {
        self.partial + self.tail_upper
    }
}

pub fn p_series(gamma: f64, x: f64, terms: usize) -> Result<PSeries> {
    if gamma <= 1.0 {
        return Err(domain("P_gamma diverges for gamma <= 1"));
    }
    if !(x > 0.0 && x < 1.0) {
        return Err(domain(format!("P_gamma needs x in (0,1), got {x}")));
    }
    let l = -x.ln();
    let ln2 = std::f64::consts::LN_2;
    let mut partial = 0.0;
    for n in 1..=terms {
        partial += (l + n as f64 * ln2).powf(-gamma);
    }
    // Σ_{n>N} g(n) for decreasing g lies between ∫_{N+1}^∞ g and ∫_N^∞ g.
    let tail = |from: f64| (l + from * ln2).powf(1.0 - gamma) / ((gamma - 1.0) * ln2);
    Ok(PSeries {
        partial,
        terms,
        tail_lower: tail(terms as f64 + 1.0),
        tail_upper: tail(terms as f64),
    })
}

/// `P_γ(x)` with enough terms that the tail bracket is narrower than `width`.
pub fn p_gamma(gamma: f64, x: f64, width: f64) -> Result<PSeries> {
    // the bracket width is the single term Z(x 2^{-N-1}) or smaller
    let l = -x.ln();
    let ln2 = std::f64::consts::LN_2;
    let need = ((width.powf(-1.0 / gamma) - l) / ln2).ceil().max(1.0);
    let terms = need.min(1.0e7) as usize;
    p_series(gamma, x, terms)
}

/// `T_γ(s, t) = s ∫_s^1 Z_γ(xt)/x dx + ∫_0^s Z_γ(xt) dx`.
pub fn t_gamma(gamma: f64, s: f64, t: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&s) || !(t > 0.0 && t < 1.0) {
        return Err(domain(format!("T needs s in [0,1/2] and t in (0,1), got s={s}, t={t}")));
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    let zz = |x: f64| if x <= 0.0 { 0.0 } else { (-(x * t).ln()).powf(-gamma) };
    let scale = zz(1.0).max(1e-300);
    let tol = 1e-10 * scale;
    let outer = quad::integrate(|x| zz(x) / x, s, 1.0, tol)?;
    let inner = quad::integrate(zz, 0.0, s, tol)?;
    Ok(s * outer + inner)
}

/// `Δ²f′(ξ, τ)` together with a flag for windows that touch the break.
#[derive(Clone, Debug)]
pub struct SecondDifference {
    pub value: Real,
    pub straddles_break: bool,
}

/// `f′(ξ+τ) + f′(ξ−τ) − 2f′(ξ)` with `f′` extended periodically.
pub fn second_symmetric_difference(map: &BreakMap, xi: &Real, tau: &Real) -> Result<SecondDifference> {
    if !(tau.is_positive() && *tau <= 0.5) {
        return Err(domain("tau must lie in (0, 1/2]"));
    }
    let lo = xi - tau;
    let hi = xi + tau;
    let straddles = lo.floor() != hi.floor() || lo.floor() == lo || hi.floor() == hi;
    let d = |x: &Real| map.eval_d1(x, Side::Right);
    let value = d(&hi)? + d(&lo)? - &(d(xi)? * 2i64);
    Ok(SecondDifference { value, straddles_break: straddles })
}

#[derive(Clone, Debug)]
pub struct ClassRatio {
    /// `sup |Δ²f′(ξ,τ)| / (τ Z_γ(τ))` over break-free windows.
    pub sup: f64,
    pub argmax_xi: f64,
    pub argmax_tau: f64,
    pub excluded: usize,
}

/// Empirical class constant over the given grids.
pub fn class_ratio(map: &BreakMap, gamma: f64, taus: &[f64], xis: &[f64], bits: u32) -> Result<ClassRatio> {
    let mut out = ClassRatio { sup: 0.0, argmax_xi: f64::NAN, argmax_tau: f64::NAN, excluded: 0 };
    for &tau in taus {
        let gauge = tau * z(gamma, tau)?;
        let t = Real::from_f64(bits, tau);
        for &xi in xis {
            let d = second_symmetric_difference(map, &Real::from_f64(bits, xi), &t)?;
            if d.straddles_break {
                out.excluded += 1;
                continue;
            }
            let r = d.value.abs().to_f64() / gauge;
            if r > out.sup {
                out = ClassRatio { sup: r, argmax_xi: xi, argmax_tau: tau, ..out };
            }
        }
    }
    Ok(out)
}

/// `τ = 2^{−k}` for `k = lo..=hi`.
pub fn dyadic_taus(lo: u32, hi: u32) -> Vec<f64> {
    (lo..=hi).map(|k| (-(k as f64)).exp2()).collect()
}

/// 2048 uniform points plus dyadic refinements toward `x*` and the break.
pub fn standard_xi_grid(map: &BreakMap) -> Vec<f64> {
    let mut xs: Vec<f64> = (0..2048).map(|i| (i as f64 + 0.5) / 2048.0).collect();
    let mut centers = vec![0.0, 1.0];
    if let Family::Zygmund { xstar, .. } = map.family() {
        centers.push(xstar.to_f64());
    }
    for c in centers {
        xs.push(c);
        for k in 4..=40 {
            let h = (-(k as f64)).exp2();
            xs.push(c + h);
            xs.push(c - h);
        }
    }
    xs.retain(|x| *x > 0.0 && *x < 1.0);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}
