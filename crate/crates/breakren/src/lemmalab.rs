//! Distortion probes on break-free intervals.
//!
//! For `K` monotone on `I = [a, b]` and `x ∈ I`,
//! `R_a(x) = R([a,x]; K)`, `R_b(x) = R([x,b]; K)` and `z = (b − x)/(b − a)`.
//! Each probe returns a quantity with the gauge it is expected to be
//! bounded by; whether the ratio stays bounded as `|I| → 0` is for the caller
//! to judge.

use crate::error::{domain, Error, Result};
use crate::maps::{BreakMap, Side};
use crate::numerics::Real;
use crate::renorm::MoebiusMap;
use crate::zygmund;

/// A `C¹` (optionally `C²`) increasing function on an interval.
pub trait Diffeo {
    fn value(&self, x: &Real) -> Result<Real>;
    fn d1(&self, x: &Real, side: Side) -> Result<Real>;
    fn d2(&self, x: &Real, side: Side) -> Result<Real>;
    /// Rejects intervals on which the function is not smooth.
    fn check_interval(&self, _a: &Real, _b: &Real) -> Result<()> {
        Ok(())
    }
}

impl Diffeo for BreakMap {
    fn value(&self, x: &Real) -> Result<Real> {
        self.eval_lift(x)
    }

    fn d1(&self, x: &Real, side: Side) -> Result<Real> {
        self.eval_d1(x, side)
    }

    fn d2(&self, x: &Real, side: Side) -> Result<Real> {
        self.eval_d2(x, side)
    }

    fn check_interval(&self, a: &Real, b: &Real) -> Result<()> {
        let fa = a.floor();
        let inside = b.floor() > fa && (b.floor() > &fa + 1i64 || !b.floor().eq(b));
        if inside {
            return Err(domain(format!("[{:e}, {:e}] contains the break", a.to_f64(), b.to_f64())));
        }
        Ok(())
    }
}

impl Diffeo for MoebiusMap {
    fn value(&self, x: &Real) -> Result<Real> {
        Ok(self.eval(x).v)
    }

    fn d1(&self, x: &Real, _side: Side) -> Result<Real> {
        Ok(self.eval(x).d1)
    }

    fn d2(&self, x: &Real, _side: Side) -> Result<Real> {
        Ok(self.eval(x).d2.expect("fractional-linear maps carry d2"))
    }
}

/// `Σ c_k x^k`.
#[derive(Clone, Debug)]
pub struct Polynomial(pub Vec<f64>);

impl Polynomial {
    fn horner(coeffs: &[f64], x: &Real) -> Real {
        let mut acc = Real::zero(x.prec());
        for c in coeffs.iter().rev() {
            acc = acc * x + &Real::from_f64(x.prec(), *c);
        }
        acc
    }

    fn derivative(coeffs: &[f64]) -> Vec<f64> {
        coeffs.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect()
    }
}

impl Diffeo for Polynomial {
    fn value(&self, x: &Real) -> Result<Real> {
        Ok(Self::horner(&self.0, x))
    }

    fn d1(&self, x: &Real, _side: Side) -> Result<Real> {
        Ok(Self::horner(&Self::derivative(&self.0), x))
    }

    fn d2(&self, x: &Real, _side: Side) -> Result<Real> {
        Ok(Self::horner(&Self::derivative(&Self::derivative(&self.0)), x))
    }
}

/// `[a, b]` with `a < b` and `b − a < 1`.
#[derive(Clone, Debug)]
pub struct ProbeInterval {
    pub a: Real,
    pub b: Real,
}

impl ProbeInterval {
    pub fn new(a: Real, b: Real) -> Result<ProbeInterval> {
        if !(a < b) {
            return Err(domain("degenerate interval"));
        }
        if &b - &a >= 1.0 {
            return Err(domain("interval length must be below 1"));
        }
        Ok(ProbeInterval { a, b })
    }

    pub fn len(&self) -> Real {
        &self.b - &self.a
    }

    /// `a + t(b − a)`; the relative coordinate of this point is `1 − t`.
    pub fn at(&self, t: f64) -> Real {
        &self.a + &(self.len() * t)
    }
}

/// Interior probe positions `t` with `x = a + t(b − a)`.
pub const PROBE_T: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

/// `|K(I)|/|I|`.
pub fn ratio_distortion<K: Diffeo + ?Sized>(k: &K, a: &Real, b: &Real) -> Result<Real> {
    if !(a < b) {
        return Err(domain("degenerate interval"));
    }
    k.check_interval(a, b)?;
    Ok((k.value(b)? - &k.value(a)?) / &(b - a))
}

/// `R_a`, `R_b` and their analytic derivatives at an interior point.
#[derive(Clone, Debug)]
pub struct Distortions {
    pub z: Real,
    pub ra: Real,
    pub rb: Real,
    pub ra_d1: Real,
    pub rb_d1: Real,
    pub ra_d2: Option<Real>,
    pub rb_d2: Option<Real>,
}

pub fn distortions<K: Diffeo + ?Sized>(k: &K, iv: &ProbeInterval, x: &Real) -> Result<Distortions> {
    if !(&iv.a < x && x < &iv.b) {
        return Err(domain("probe point must be interior"));
    }
    k.check_interval(&iv.a, &iv.b)?;
    let xa = x - &iv.a;
    let bx = &iv.b - x;
    let kx = k.value(x)?;
    let ra = (&kx - &k.value(&iv.a)?) / &xa;
    let rb = (k.value(&iv.b)? - &kx) / &bx;
    let k1 = k.d1(x, Side::Right)?;
    let ra_d1 = (&k1 - &ra) / &xa;
    let rb_d1 = (&rb - &k1) / &bx;
    let (ra_d2, rb_d2) = match k.d2(x, Side::Right) {
        Ok(k2) => (Some((&k2 - &(&ra_d1 * 2i64)) / &xa), Some((&(&rb_d1 * 2i64) - &k2) / &bx)),
        Err(Error::Capability(_)) => (None, None),
        Err(e) => return Err(e),
    };
    Ok(Distortions { z: bx / &iv.len(), ra, rb, ra_d1, rb_d1, ra_d2, rb_d2 })
}

fn gauge_len(iv: &ProbeInterval) -> f64 {
    iv.len().to_f64()
}

fn right_end_d1<K: Diffeo + ?Sized>(k: &K, b: &Real) -> Result<Real> {
    // a break at the right end is approached from the left
    let side = if b.floor().eq(b) { Side::Left } else { Side::Right };
    k.d1(b, side)
}

/// `R_a/R_b − 1` against its main term `(K′(a) − K′(b))/(2K′(b))`.
#[derive(Clone, Debug)]
pub struct RatioResidual {
    pub lhs: Real,
    pub main_term: Real,
    /// `|I|Z_γ(|I|) + |K′(a) − K′(b)|Ω(|I|, γ)`.
    pub bound: f64,
}

impl RatioResidual {
    pub fn residual(&self) -> f64 {
        (&self.lhs - &self.main_term).abs().to_f64()
    }

    pub fn ratio(&self) -> f64 {
        self.residual() / self.bound
    }
}

pub fn ratio_residual<K: Diffeo + ?Sized>(k: &K, gamma: f64, iv: &ProbeInterval, x: &Real) -> Result<RatioResidual> {
    let d = distortions(k, iv, x)?;
    let ka = k.d1(&iv.a, Side::Right)?;
    let kb = right_end_d1(k, &iv.b)?;
    let main_term = (&ka - &kb) / &(&kb * 2i64);
    let h = gauge_len(iv);
    let bound = h * zygmund::z(gamma, h)? + (&ka - &kb).abs().to_f64() * zygmund::omega(gamma, h)?;
    Ok(RatioResidual { lhs: d.ra / &d.rb - 1i64, main_term, bound })
}

/// Convexity of the distortions and the interpolation defect of `K′`.
#[derive(Clone, Debug)]
pub struct ConvexityProbe {
    pub z: f64,
    /// `(x − a)(b − x)|R_b′(x) − R_a′(x)|/(b − a)`.
    pub defect: Real,
    /// `|I|Z_γ(|I|)`.
    pub bound: f64,
    /// `|zK′(a) + (1 − z)K′(b) − K′(x)|`.
    pub interpolation: Real,
    /// `|I|T_γ(min(z, 1 − z), |I|)`.
    pub interpolation_bound: f64,
}

pub fn convexity_defect<K: Diffeo + ?Sized>(k: &K, gamma: f64, iv: &ProbeInterval, x: &Real) -> Result<ConvexityProbe> {
    let d = distortions(k, iv, x)?;
    let len = iv.len();
    let defect = (x - &iv.a) * &(&iv.b - x) * &(&d.rb_d1 - &d.ra_d1).abs() / &len;
    let ka = k.d1(&iv.a, Side::Right)?;
    let kb = right_end_d1(k, &iv.b)?;
    let kx = k.d1(x, Side::Right)?;
    let one_z = 1i64 - &d.z;
    let interpolation = (&d.z * &ka + &(&one_z * &kb) - &kx).abs();
    let h = gauge_len(iv);
    let z = d.z.to_f64();
    let s = if z <= 0.5 { z } else { 1.0 - z };
    Ok(ConvexityProbe {
        z,
        defect,
        bound: h * zygmund::z(gamma, h)?,
        interpolation,
        interpolation_bound: h * zygmund::t_gamma(gamma, s, h)?,
    })
}

/// `|R_b′ − R_a′|` and `(x − a)(b − x)|R_a″ − R_b″|` against `P_γ(|I|)`.
#[derive(Clone, Debug)]
pub struct DerivativeGap {
    pub gap: Real,
    pub p_bound: f64,
    pub second: Real,
    /// `|I|P_γ(|I|)`.
    pub second_bound: f64,
}

pub fn derivative_gap<K: Diffeo + ?Sized>(k: &K, gamma: f64, iv: &ProbeInterval, x: &Real) -> Result<DerivativeGap> {
    if gamma <= 1.0 {
        return Err(Error::Capability(format!("derivative gap needs gamma > 1, got {gamma}")));
    }
    let d = distortions(k, iv, x)?;
    let (Some(a2), Some(b2)) = (&d.ra_d2, &d.rb_d2) else {
        return Err(Error::Capability("derivative gap needs K''".into()));
    };
    let h = gauge_len(iv);
    let p = zygmund::p_gamma(gamma, h, 1e-6 * zygmund::z(gamma, h)?)?.value();
    Ok(DerivativeGap {
        gap: (&d.rb_d1 - &d.ra_d1).abs(),
        p_bound: p,
        second: (x - &iv.a) * &(&iv.b - x) * &(a2 - b2).abs(),
        second_bound: h * p,
    })
}

/// One line of a lemma sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub lemma_id: &'static str,
    pub interval_length: f64,
    pub probe_t: f64,
    pub quantity: f64,
    pub bound: f64,
    pub ratio: f64,
}

impl SweepRow {
    fn new(lemma_id: &'static str, len: f64, t: f64, quantity: f64, bound: f64) -> SweepRow {
        SweepRow { lemma_id, interval_length: len, probe_t: t, quantity, bound, ratio: quantity / bound }
    }
}

pub const RATIO_ID: &str = "ratio-main-term";
pub const CONVEXITY_ID: &str = "convexity";
pub const INTERPOLATION_ID: &str = "interpolation";
pub const GAP_ID: &str = "derivative-gap";
pub const SECOND_GAP_ID: &str = "second-derivative-gap";

/// Intervals `[c − h/4, c + 3h/4]` with `h = 2^{−k}`.
pub fn dyadic_intervals(center: f64, ks: std::ops::RangeInclusive<u32>, bits: u32) -> Result<Vec<ProbeInterval>> {
    ks.map(|k| {
        let h = Real::from_i64(bits, 2).powf(-(k as f64));
        let c = Real::from_f64(bits, center);
        ProbeInterval::new(&c - &(&h / 4i64), &c + &(&h * 3i64 / 4i64))
    })
    .collect()
}

/// Runs every applicable probe at the five interior points of each interval.
pub fn sweep<K: Diffeo + ?Sized>(k: &K, gamma: f64, intervals: &[ProbeInterval]) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for iv in intervals {
        let len = iv.len().to_f64();
        for t in PROBE_T {
            let x = iv.at(t);
            let r = ratio_residual(k, gamma, iv, &x)?;
            rows.push(SweepRow::new(RATIO_ID, len, t, r.residual(), r.bound));
            let c = convexity_defect(k, gamma, iv, &x)?;
            rows.push(SweepRow::new(CONVEXITY_ID, len, t, c.defect.to_f64(), c.bound));
            rows.push(SweepRow::new(INTERPOLATION_ID, len, t, c.interpolation.to_f64(), c.interpolation_bound));
            match derivative_gap(k, gamma, iv, &x) {
                Ok(g) => {
                    rows.push(SweepRow::new(GAP_ID, len, t, g.gap.to_f64(), g.p_bound));
                    rows.push(SweepRow::new(SECOND_GAP_ID, len, t, g.second.to_f64(), g.second_bound));
                }
                Err(Error::Capability(_)) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok(rows)
}

/// Largest ratio per lemma id, in first-seen order.
pub fn max_ratios(rows: &[SweepRow]) -> Vec<(&'static str, f64)> {
    let mut out: Vec<(&'static str, f64)> = Vec::new();
    for r in rows {
        match out.iter_mut().find(|(id, _)| *id == r.lemma_id) {
            Some((_, m)) => *m = m.max(r.ratio),
            None => out.push((r.lemma_id, r.ratio)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const BITS: u32 = 192;

    fn r(v: f64) -> Real {
        Real::from_f64(BITS, v)
    }

    #[test]
    fn affine_has_no_defects() {
        let k = Polynomial(vec![0.25, 1.5]);
        let iv = ProbeInterval::new(r(0.1), r(0.3)).unwrap();
        assert!((ratio_distortion(&k, &iv.a, &iv.b).unwrap().to_f64() - 1.5).abs() < 1e-50);
        for t in PROBE_T {
            let x = iv.at(t);
            let q = ratio_residual(&k, 2.0, &iv, &x).unwrap();
            assert!(q.lhs.abs().to_f64() < 1e-50 && q.main_term.is_zero());
            let c = convexity_defect(&k, 2.0, &iv, &x).unwrap();
            assert!(c.defect.to_f64() < 1e-50 && c.interpolation.to_f64() < 1e-50);
            assert!(derivative_gap(&k, 2.0, &iv, &x).unwrap().gap.to_f64() < 1e-45);
        }
    }

    #[test]
    fn polynomial_interpolation_defects() {
        let h = 0.125;
        let iv = ProbeInterval::new(r(0.0), r(h)).unwrap();
        let quad = Polynomial(vec![0.0, 0.0, 0.5]);
        let cubic = Polynomial(vec![0.0, 0.0, 0.0, 1.0]);
        for t in PROBE_T {
            let x = iv.at(t);
            let c = convexity_defect(&quad, 2.0, &iv, &x).unwrap();
            assert!(c.interpolation.to_f64() < 1e-50);
            let c = convexity_defect(&cubic, 2.0, &iv, &x).unwrap();
            let z = 1.0 - t;
            assert!((c.interpolation.to_f64() - 3.0 * h * h * z * (1.0 - z)).abs() < 1e-15);
        }
    }

    #[test]
    fn fractional_linear_ratio_is_constant() {
        let m = crate::renorm::canonical_moebius(&r(2.5)).unwrap();
        let iv = ProbeInterval::new(r(0.2), r(0.45)).unwrap();
        let want = (m.eval(&iv.a).d1 / &m.eval(&iv.b).d1).sqrt() - 1i64;
        for t in PROBE_T {
            let q = ratio_residual(&m, 2.0, &iv, &iv.at(t)).unwrap();
            assert!((&q.lhs - &want).abs().to_f64() < 1e-50);
        }
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let map = BreakMap::smooth(Real::from_i64(53, 2), Real::from_f64(53, 0.3), Real::from_f64(53, 0.5)).unwrap();
        let iv = ProbeInterval::new(r(0.2), r(0.6)).unwrap();
        let x = iv.at(0.3);
        let eps = Real::from_i64(BITS, 2).powf(-60.0);
        let d = distortions(&map, &iv, &x).unwrap();
        let ra = |y: &Real| ratio_distortion(&map, &iv.a, y).unwrap();
        let rb = |y: &Real| ratio_distortion(&map, y, &iv.b).unwrap();
        let fd_a = (ra(&(&x + &eps)) - &ra(&(&x - &eps))) / &(&eps * 2i64);
        let fd_b = (rb(&(&x + &eps)) - &rb(&(&x - &eps))) / &(&eps * 2i64);
        assert!(((&fd_a - &d.ra_d1) / &d.ra_d1).abs().to_f64() < 1e-30);
        assert!(((&fd_b - &d.rb_d1) / &d.rb_d1).abs().to_f64() < 1e-30);
    }

    #[test]
    fn multiplicative_under_composition() {
        let map = BreakMap::moebius(Real::from_i64(53, 3), Real::from_f64(53, 0.1)).unwrap();
        let (a, b) = (r(0.1), r(0.35));
        let fa = map.eval_lift(&a).unwrap();
        let fb = map.eval_lift(&b).unwrap();
        let r1 = ratio_distortion(&map, &a, &b).unwrap();
        let r2 = ratio_distortion(&map, &fa, &fb).unwrap();
        let direct = (map.eval_lift(&fb).unwrap() - &map.eval_lift(&fa).unwrap()) / &(&b - &a);
        assert!((r1 * &r2 - &direct).abs().to_f64() < 1e-50);
    }

    #[test]
    fn breaks_and_capabilities() {
        let map = BreakMap::moebius(Real::from_i64(53, 2), Real::zero(53)).unwrap();
        let iv = ProbeInterval::new(r(0.9), r(1.1)).unwrap();
        assert!(distortions(&map, &iv, &r(1.0)).is_err());
        assert!(ratio_distortion(&map, &r(0.5), &r(0.5)).is_err());
        let iv = ProbeInterval::new(r(0.5), r(1.0)).unwrap();
        assert!(convexity_defect(&map, 2.0, &iv, &r(0.7)).is_ok());
        assert!(matches!(derivative_gap(&map, 0.5, &iv, &r(0.7)), Err(Error::Capability(_))));
    }
}
