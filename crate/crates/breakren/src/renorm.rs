//! Renormalization pairs, their fractional-linear approximants, the Υ
//! functionals and the coefficient residual.
//!
//! Coordinates: `f_n(z) = (F^{q_n}(x) − p_n)/(−δ_{n−1})` with
//! `x = −zδ_{n−1}` for `z ∈ [−1, 0]`, and `g_n` the same with
//! `(q_{n−1}, p_{n−1})` on `[0, a_n]`, where `δ_k = ξ_{q_k} − p_k`. Odd levels
//! need no special casing: the sign of `δ_{n−1}` flips the orientation.

use crate::error::{domain, validation, Error, Result};
use crate::maps::{BreakMap, Side};
use crate::numerics::{CirclePoint, Real};
use crate::partition::DynamicalPartition;

fn side_of(d: &Real) -> Side {
    if d.is_negative() {
        Side::Left
    } else {
        Side::Right
    }
}

/// `(a_n, b_n, c_n, m_n, m̃_n, m̂_n)` at one level.
#[derive(Clone, Debug)]
pub struct RenormCoeffs {
    pub n: usize,
    pub a: Real,
    /// `−(ξ_{q_n+q_{n−1}} − ξ₀)/(ξ₀ − ξ_{q_{n−1}})`.
    pub b: Real,
    /// `(|I_0^{n−1}| − |I^n_{q_{n−1}}|)/|I_0^{n−1}|`.
    pub b_dual: Real,
    pub c: Real,
    pub m: Real,
    pub m_tilde: Real,
    pub m_hat: Real,
    /// `log m_n + ½Σ_j [log f′(ξ_{j+q_n}) − log f′(ξ_j)] − log c_n`; zero in
    /// exact arithmetic.
    pub product_identity: Real,
}

impl RenormCoeffs {
    /// `r_n = a_n + b_n m_n − c_n`.
    pub fn residual(&self) -> Real {
        &self.a + &(&self.b * &self.m) - &self.c
    }

    pub fn residual_over_a(&self) -> Real {
        self.residual() / &self.a
    }
}

pub fn coefficients(map: &BreakMap, part: &DynamicalPartition) -> Result<RenormCoeffs> {
    let bits = part.bits;
    let dn = part.delta_n();
    let dn1 = part.delta_n1();
    let ds = part.delta_sum();
    let a = &dn / &(-&dn1);
    let b = &ds / &dn1;
    let b_dual = (dn1.abs() - &(&ds - &dn1).abs()) / &dn1.abs();
    let c = if part.n % 2 == 0 { map.c().with_prec(bits) } else { map.c().with_prec(bits).recip() };

    let q = part.q_n as usize;
    let q1 = part.q_n1 as usize;
    let side_long = side_of(&dn1);
    let side_short = side_of(&dn);

    let mut log_m = Real::zero(bits);
    let mut log_mt = Real::zero(bits);
    for i in 0..q {
        let s = if i == 0 { side_long } else { Side::Right };
        log_m += part.log_d1(i, s) - &part.log_d1(i + q1, Side::Right);
        let di = part.d1_at(i, s);
        log_mt += (di - &part.d1[i + q1]) / di;
    }
    let log_m = log_m / 2i64;
    let log_mt = log_mt / 2i64;

    let mut log_mh = Real::zero(bits);
    let mut g_side = Real::zero(bits);
    for j in 0..q1 {
        let s = if j == 0 { side_short } else { Side::Right };
        let dj = part.d1_at(j, s);
        let dq = &part.d1[j + q];
        log_mh += (dq - dj) / dq;
        g_side += part.log_d1(j + q, Side::Right) - &part.log_d1(j, s);
    }
    let log_mh = log_mh / 2i64;
    let product_identity = &log_m + &(g_side / 2i64) - &c.ln();

    Ok(RenormCoeffs {
        n: part.n,
        a,
        b,
        b_dual,
        c,
        m: log_m.exp(),
        m_tilde: log_mt.exp(),
        m_hat: log_mh.exp(),
        product_identity,
    })
}

/// `r_{n+1} − c_{n+1}a_{n+1}(c_n − a_n − b_n m_n)`.
pub fn recursion_residual(prev: &RenormCoeffs, next: &RenormCoeffs) -> Real {
    let inner = &prev.c - &prev.a - &(&prev.b * &prev.m);
    next.residual() - &(&next.c * &next.a * &inner)
}

#[derive(Clone, Debug)]
pub struct MultiplierReport {
    /// `|m̃_n − m_n|`.
    pub tilde_gap: Real,
    /// `|m̂_n − c_n/m_n|`.
    pub hat_gap: Real,
    pub product_identity: Real,
}

/// Compares `m̃_n` with `m_n` and `m̂_n` with `c_n/m_n`.
pub fn multiplier_consistency(map: &BreakMap, coeffs: &RenormCoeffs) -> Result<MultiplierReport> {
    if !map.supports_d2() {
        return Err(Error::Capability("multiplier comparison needs f'' (gamma > 1)".into()));
    }
    Ok(MultiplierReport {
        tilde_gap: (&coeffs.m_tilde - &coeffs.m).abs(),
        hat_gap: (&coeffs.m_hat - &(&coeffs.c / &coeffs.m)).abs(),
        product_identity: coeffs.product_identity.abs(),
    })
}

/// Value and derivatives of a one-dimensional map at one point.
#[derive(Clone, Debug)]
pub struct Jet1 {
    pub v: Real,
    pub d1: Real,
    pub d2: Option<Real>,
}

/// `F^{steps}` from `x` with the first two derivatives.
#[derive(Clone, Debug)]
pub struct OrbitJet {
    pub end: CirclePoint,
    pub d1: Real,
    pub d2: Real,
}

pub fn orbit_jet(map: &BreakMap, x: &CirclePoint, steps: usize, side: Side) -> OrbitJet {
    let bits = x.frac.prec();
    let mut d1 = Real::one(bits);
    let mut d2 = Real::zero(bits);
    let mut p = x.clone();
    for j in 0..steps {
        let s = if j == 0 { side } else { Side::Right };
        let (next, f1, f2) = map.step_jet(&p, s);
        d2 = &f2 * &d1.square() + &(&f1 * &d2);
        d1 = &f1 * &d1;
        p = next;
    }
    OrbitJet { end: p, d1, d2 }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairSide {
    /// `f_n` on `[−1, 0]`.
    F,
    /// `g_n` on `[0, a_n]`.
    G,
}

/// The renormalized first-return pair `(f_n, g_n)`.
#[derive(Clone, Debug)]
pub struct RenormPair<'a> {
    map: &'a BreakMap,
    pub n: usize,
    pub bits: u32,
    pub a: Real,
    pub delta_n: Real,
    pub delta_n1: Real,
    p_n: i64,
    q_n: i64,
    p_n1: i64,
    q_n1: i64,
    pub with_d2: bool,
}

impl<'a> RenormPair<'a> {
    pub fn new(map: &'a BreakMap, part: &DynamicalPartition) -> RenormPair<'a> {
        let delta_n = part.delta_n();
        let delta_n1 = part.delta_n1();
        RenormPair {
            map,
            n: part.n,
            bits: part.bits,
            a: &delta_n / &(-&delta_n1),
            delta_n,
            delta_n1,
            p_n: part.p_n,
            q_n: part.q_n,
            p_n1: part.p_n1,
            q_n1: part.q_n1,
            with_d2: map.supports_d2(),
        }
    }

    pub fn domain(&self, side: PairSide) -> (Real, Real) {
        match side {
            PairSide::F => (Real::from_i64(self.bits, -1), Real::zero(self.bits)),
            PairSide::G => (Real::zero(self.bits), self.a.clone()),
        }
    }

    pub fn eval(&self, side: PairSide, z: &Real) -> Result<Jet1> {
        let (lo, hi) = self.domain(side);
        if z < &lo || z > &hi {
            return Err(domain(format!("z = {:e} outside the domain of {side:?}_{}", z.to_f64(), self.n)));
        }
        let scale = -&self.delta_n1;
        let x = -(z * &self.delta_n1);
        let (steps, shift, s) = match side {
            PairSide::F => (self.q_n, self.p_n, side_of(&self.delta_n1)),
            PairSide::G => (self.q_n1, self.p_n1, side_of(&self.delta_n)),
        };
        let j = orbit_jet(self.map, &CirclePoint::from_lift(&x)?, steps as usize, s);
        Ok(Jet1 {
            v: j.end.offset(shift) / &scale,
            d1: j.d1,
            d2: self.with_d2.then(|| j.d2 * &scale),
        })
    }

    pub fn f(&self, z: &Real) -> Result<Jet1> {
        self.eval(PairSide::F, z)
    }

    pub fn g(&self, z: &Real) -> Result<Jet1> {
        self.eval(PairSide::G, z)
    }
}

/// `z ↦ (p + qz)/(r + sz)` on `[lo, hi]`.
#[derive(Clone, Debug)]
pub struct MoebiusMap {
    pub name: String,
    pub p: Real,
    pub q: Real,
    pub r: Real,
    pub s: Real,
    pub lo: Real,
    pub hi: Real,
}

impl MoebiusMap {
    pub fn new(name: &str, [p, q, r, s]: [Real; 4], lo: Real, hi: Real) -> Result<MoebiusMap> {
        let det = &q * &r - &(&p * &s);
        if det.is_zero() {
            return Err(Error::Degenerate(format!("{name}: q*r - p*s = 0")));
        }
        let dl = &r + &(&s * &lo);
        let dh = &r + &(&s * &hi);
        if dl.signum_i() * dh.signum_i() <= 0 {
            return Err(Error::Degenerate(format!(
                "{name}: pole of the denominator r + s*z inside [{:e}, {:e}] (s = {:e})",
                lo.to_f64(),
                hi.to_f64(),
                s.to_f64()
            )));
        }
        Ok(MoebiusMap { name: name.to_string(), p, q, r, s, lo, hi })
    }

    pub fn det(&self) -> Real {
        &self.q * &self.r - &(&self.p * &self.s)
    }

    pub fn eval(&self, z: &Real) -> Jet1 {
        let d = &self.r + &(&self.s * z);
        let inv = d.recip();
        let v = (&self.p + &(&self.q * z)) * &inv;
        let d1 = self.det() * &inv.square();
        let d2 = -(&d1 * &self.s * &inv * 2i64);
        Jet1 { v, d1, d2: Some(d2) }
    }
}

/// `M_T(z) = zT/(1 + z(T − 1))` on `[0, 1]`.
pub fn canonical_moebius(t: &Real) -> Result<MoebiusMap> {
    if !t.is_positive() {
        return Err(domain("M_T needs T > 0"));
    }
    let bits = t.prec();
    MoebiusMap::new(
        "M_T",
        [Real::zero(bits), t.clone(), Real::one(bits), t - 1i64],
        Real::zero(bits),
        Real::one(bits),
    )
}

#[derive(Clone, Debug)]
pub struct Approximants {
    pub f: MoebiusMap,
    pub g: MoebiusMap,
    pub f_tilde: MoebiusMap,
    pub g_hat: MoebiusMap,
}

fn f_form(name: &str, a: &Real, b: &Real, m: &Real) -> Result<MoebiusMap> {
    let bits = a.prec();
    MoebiusMap::new(
        name,
        [a.clone(), a + &(b * m), Real::one(bits), 1i64 - m],
        Real::from_i64(bits, -1),
        Real::zero(bits),
    )
}

pub fn moebius_approximants(k: &RenormCoeffs) -> Result<Approximants> {
    let bits = k.a.prec();
    let (a, b, c, m) = (&k.a, &k.b, &k.c, &k.m);
    let ac = a * c;
    let g = MoebiusMap::new("G_n", [-&ac, c - &(b * m), ac.clone(), m - c], Real::zero(bits), a.clone())?;
    let mh = &k.m_hat;
    let amh = a * mh;
    let g_hat = MoebiusMap::new("G^_n", [-&amh, mh - b, amh.clone(), 1i64 - mh], Real::zero(bits), a.clone())?;
    Ok(Approximants { f: f_form("F_n", a, b, m)?, g, f_tilde: f_form("F~_n", a, b, &k.m_tilde)?, g_hat })
}

/// Grid sup of `Σ_{j≤k} |f^{(j)} − F^{(j)}|`.
#[derive(Clone, Debug)]
pub struct NormReport {
    pub approximant: String,
    pub c0: Real,
    pub c1: Real,
    pub c2: Option<Real>,
    /// Sup of the single order-j difference.
    pub sup_d1: Real,
    pub sup_d2: Option<Real>,
    /// Point where the highest available order attains its sup.
    pub argmax: f64,
    pub grid: usize,
}

impl NormReport {
    pub fn order(&self, k: usize) -> Option<&Real> {
        match k {
            0 => Some(&self.c0),
            1 => Some(&self.c1),
            _ => self.c2.as_ref(),
        }
    }
}

/// Samples of one side of the pair on a uniform grid with endpoints.
#[derive(Clone, Debug)]
pub struct SideSamples {
    pub side: PairSide,
    pub z: Vec<Real>,
    pub jets: Vec<Jet1>,
}

impl SideSamples {
    pub fn new(pair: &RenormPair<'_>, side: PairSide, points: usize) -> Result<SideSamples> {
        let (lo, hi) = pair.domain(side);
        let n = points.max(2);
        let mut z = Vec::with_capacity(n);
        let mut jets = Vec::with_capacity(n);
        for k in 0..n {
            let zk = grid_point(&lo, &hi, k, n);
            jets.push(pair.eval(side, &zk)?);
            z.push(zk);
        }
        Ok(SideSamples { side, z, jets })
    }

    /// Doubles the grid density by evaluating all midpoints.
    pub fn refine(&self, pair: &RenormPair<'_>) -> Result<SideSamples> {
        let mut z = Vec::with_capacity(2 * self.z.len() - 1);
        let mut jets = Vec::with_capacity(2 * self.z.len() - 1);
        for k in 0..self.z.len() {
            z.push(self.z[k].clone());
            jets.push(self.jets[k].clone());
            if k + 1 < self.z.len() {
                let mid = (&self.z[k] + &self.z[k + 1]) / 2i64;
                jets.push(pair.eval(self.side, &mid)?);
                z.push(mid);
            }
        }
        Ok(SideSamples { side: self.side, z, jets })
    }

    pub fn compare(&self, approx: &MoebiusMap) -> NormReport {
        let bits = self.z[0].prec();
        let mut c0 = Real::zero(bits);
        let mut c1 = Real::zero(bits);
        let mut c2: Option<Real> = self.jets[0].d2.as_ref().map(|_| Real::zero(bits));
        let mut s1 = Real::zero(bits);
        let mut s2 = c2.clone();
        let mut argmax = self.z[0].to_f64();
        for (z, j) in self.z.iter().zip(&self.jets) {
            let m = approx.eval(z);
            let e0 = (&j.v - &m.v).abs();
            let e1 = (&j.d1 - &m.d1).abs();
            let k1 = &e0 + &e1;
            let top = match (&j.d2, &m.d2) {
                (Some(a), Some(b)) => {
                    let e2 = (a - b).abs();
                    let k2 = &k1 + &e2;
                    let better = c2.as_ref().is_some_and(|c| k2 > *c);
                    if better {
                        c2 = Some(k2);
                    }
                    if s2.as_ref().is_some_and(|s| e2 > *s) {
                        s2 = Some(e2);
                    }
                    better
                }
                _ => k1 > c1,
            };
            if top {
                argmax = z.to_f64();
            }
            c0 = c0.max(&e0);
            c1 = c1.max(&k1);
            s1 = s1.max(&e1);
        }
        NormReport {
            approximant: approx.name.clone(),
            c0,
            c1,
            c2,
            sup_d1: s1,
            sup_d2: s2,
            argmax,
            grid: self.z.len(),
        }
    }
}

fn grid_point(lo: &Real, hi: &Real, k: usize, n: usize) -> Real {
    if k == 0 {
        lo.clone()
    } else if k + 1 == n {
        hi.clone()
    } else {
        lo + &((hi - lo) * (k as i64) / ((n - 1) as i64))
    }
}

/// Grid policy for C^k distances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridPolicy {
    pub base: usize,
    pub max: usize,
    /// Relative change below which refinement stops.
    pub rel_change: f64,
}

impl Default for GridPolicy {
    fn default() -> Self {
        GridPolicy { base: 257, max: 1025, rel_change: 0.01 }
    }
}

/// C^k distances of one side of the pair to several approximants.
///
/// The grid doubles until every reported top-order sup moves by less than
/// `rel_change`, or the grid reaches `max`. Sups already under the noise
/// floor `2^{−bits/2}` do not drive refinement.
pub fn distance(
    pair: &RenormPair<'_>,
    side: PairSide,
    approx: &[&MoebiusMap],
    grid: GridPolicy,
) -> Result<Vec<NormReport>> {
    let floor = Real::from_i64(64, 2).powf(-(pair.bits as f64) / 2.0);
    let mut samples = SideSamples::new(pair, side, grid.base)?;
    let mut reports: Vec<NormReport> = approx.iter().map(|m| samples.compare(m)).collect();
    while samples.z.len() < grid.max {
        let next = samples.refine(pair)?;
        let fresh: Vec<NormReport> = approx.iter().map(|m| next.compare(m)).collect();
        let settled = reports.iter().zip(&fresh).all(|(old, new)| {
            let top = |r: &NormReport| r.c2.clone().unwrap_or_else(|| r.c1.clone());
            let (o, n) = (top(old), top(new));
            n < floor || ((&n - &o).abs() / &n).to_f64() < grid.rel_change
        });
        samples = next;
        reports = fresh;
        if settled {
            break;
        }
    }
    Ok(reports)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// `Υ̃_n` on `I_0^{n−1}` under `f^{q_n}`.
    Tilde,
    /// `Υ̂_n` on `I_0^n` under `f^{q_{n−1}}`.
    Hat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Multiplier {
    /// `m̃_n` for Υ̃ and `m̂_n` for Υ̂.
    Paper,
    /// `m_n` for Υ̃ and `c_n/m_n` for Υ̂.
    Oracle,
}

#[derive(Clone, Debug)]
pub struct UpsilonPoint {
    pub z0: Real,
    pub ups: Real,
    /// `dΥ/dz₀`; at the endpoints only when `f″` is available.
    pub d1: Option<Real>,
    /// `d²Υ/dz₀²`; interior points only.
    pub d2: Option<Real>,
    /// Relative coordinate of the image computed by direct iteration.
    pub z_direct: Real,
    pub z_direct_d1: Real,
    pub z_direct_d2: Option<Real>,
}

impl UpsilonPoint {
    /// `z₀(1 − z₀)Υ′`; zero at the endpoints.
    pub fn weighted_d1(&self) -> Option<Real> {
        let w = &self.z0 * &(1i64 - &self.z0);
        if w.is_zero() {
            return Some(w);
        }
        self.d1.as_ref().map(|d| d * &w)
    }

    /// `z₀(1 − z₀)Υ″`; zero at the endpoints.
    pub fn weighted_d2(&self) -> Option<Real> {
        let w = &self.z0 * &(1i64 - &self.z0);
        if w.is_zero() {
            return Some(w);
        }
        self.d2.as_ref().map(|d| d * &w)
    }
}

#[derive(Clone, Debug)]
pub struct UpsilonEval {
    pub n: usize,
    pub variant: Variant,
    pub multiplier: Multiplier,
    pub mult: Real,
    pub points: Vec<UpsilonPoint>,
}

impl UpsilonEval {
    pub fn max_abs(&self) -> f64 {
        self.points.iter().map(|p| p.ups.abs().to_f64()).fold(0.0, f64::max)
    }

    fn max_of(&self, get: impl Fn(&UpsilonPoint) -> Option<Real>) -> Option<f64> {
        let mut best = 0.0f64;
        for p in &self.points {
            if let Some(v) = get(p) {
                best = best.max(v.abs().to_f64());
            }
        }
        Some(best)
    }

    /// `max |z₀(1−z₀)Υ′|`.
    pub fn max_weighted_d1(&self) -> Option<f64> {
        self.max_of(UpsilonPoint::weighted_d1)
    }

    /// `max |Υ′|` over the points where it is available.
    pub fn max_d1(&self) -> Option<f64> {
        self.max_of(|p| p.d1.clone())
    }

    /// `max |z₀(1−z₀)Υ″|`.
    pub fn max_weighted_d2(&self) -> Option<f64> {
        self.max_of(UpsilonPoint::weighted_d2)
    }
}

/// `z₀ = k/(N−1)`, `k = 0..N`, at `bits`.
pub fn unit_grid(points: usize, bits: u32) -> Vec<Real> {
    let lo = Real::zero(bits);
    let hi = Real::one(bits);
    (0..points).map(|k| grid_point(&lo, &hi, k, points)).collect()
}

/// Υ̃_n or Υ̂_n on a `z₀` grid.
pub fn upsilon(
    map: &BreakMap,
    part: &DynamicalPartition,
    coeffs: &RenormCoeffs,
    variant: Variant,
    multiplier: Multiplier,
    z0_grid: &[Real],
) -> Result<UpsilonEval> {
    let bits = part.bits;
    let with_d2 = map.supports_d2();
    let q = part.q_n as usize;
    let q1 = part.q_n1 as usize;
    let zero = CirclePoint::origin(bits);
    // a, b as circle points; h maps [a,b] with h(a) = hA, h(b) = hB
    let (a, b, steps, ha, hb, side) = match variant {
        Variant::Tilde => (
            part.orbit[q1].shifted(-part.p_n1),
            zero,
            q,
            part.orbit[q + q1].shifted(-part.p_n1),
            part.orbit[q].clone(),
            side_of(&part.delta_n1()),
        ),
        Variant::Hat => (
            zero,
            part.orbit[q].shifted(-part.p_n),
            q1,
            part.orbit[q1].clone(),
            part.orbit[q + q1].shifted(-part.p_n),
            side_of(&part.delta_n()),
        ),
    };
    let mult = match (variant, multiplier) {
        (Variant::Tilde, Multiplier::Paper) => coeffs.m_tilde.clone(),
        (Variant::Tilde, Multiplier::Oracle) => coeffs.m.clone(),
        (Variant::Hat, Multiplier::Paper) => coeffs.m_hat.clone(),
        (Variant::Hat, Multiplier::Oracle) => &coeffs.c / &coeffs.m,
    };
    let log_mult = mult.ln();
    let ab = a.minus(&b, bits);
    let ba = -&ab;
    let span = hb.minus(&ha, bits);
    let chord = &span / &ba;

    let mut points = Vec::with_capacity(z0_grid.len());
    for z0 in z0_grid {
        if *z0 < 0.0 || *z0 > 1.0 {
            return Err(domain("z0 must lie in [0,1]"));
        }
        let x = CirclePoint::from_lift(&(b.lift() + &(z0 * &ab)))?;
        let at_b = z0.is_zero();
        let at_a = *z0 == 1.0;
        let x = if at_b {
            b.clone()
        } else if at_a {
            a.clone()
        } else {
            x
        };
        let j = orbit_jet(map, &x, steps, side);
        let h1 = &j.d1;
        let h2 = &j.d2;
        let z_direct = hb.minus(&j.end, bits) / &span;
        let z_direct_d1 = -(h1 * &ab / &span);
        let z_direct_d2 = with_d2.then(|| -(h2 * &ab.square() / &span));
        let (ups, dx, dxx) = if at_b {
            let ups = chord.ln() - &h1.ln() + &log_mult;
            let dx = with_d2.then(|| h1 / &span - &ba.recip() - &(h2 / &(h1 * 2i64)));
            (ups, dx, None)
        } else if at_a {
            let ups = h1.ln() - &chord.ln() + &log_mult;
            let dx = with_d2.then(|| h2 / &(h1 * 2i64) + &(h1 / &span) - &ba.recip());
            (ups, dx, None)
        } else {
            let hma = j.end.minus(&ha, bits);
            let hbm = hb.minus(&j.end, bits);
            let xma = x.minus(&a, bits);
            let bmx = b.minus(&x, bits);
            let ups = (&hma / &xma).ln() - &(&hbm / &bmx).ln() + &log_mult;
            let dx = h1 / &hma - &xma.recip() + &(h1 / &hbm) - &bmx.recip();
            let dxx = with_d2.then(|| {
                let h1s = h1.square();
                h2 / &hma - &(&h1s / &hma.square()) + &xma.square().recip() + &(h2 / &hbm) + &(&h1s / &hbm.square())
                    - &bmx.square().recip()
            });
            (ups, Some(dx), dxx)
        };
        points.push(UpsilonPoint {
            z0: z0.clone(),
            ups,
            d1: dx.map(|d| d * &ab),
            d2: dxx.map(|d| d * &ab.square()),
            z_direct,
            z_direct_d1,
            z_direct_d2,
        });
    }
    Ok(UpsilonEval { n: part.n, variant, multiplier, mult, points })
}

/// `z_{q_n}(z₀) = z₀m/((1−z₀)e^Υ + z₀m)` with its first two derivatives.
pub fn z_qn_formula(eval: &UpsilonEval, point: &UpsilonPoint) -> Jet1 {
    let m = &eval.mult;
    let z0 = &point.z0;
    let e = point.ups.exp();
    let one_z = 1i64 - z0;
    let den = &one_z * &e + &(z0 * m);
    let v = z0 * m / &den;
    let w = z0 * &one_z;
    let (d1, d2) = match &point.d1 {
        None => (None, None),
        Some(u1) => {
            let num = m * &e * &(1i64 - &(&w * u1));
            let d1 = &num / &den.square();
            let d2 = point.d2.as_ref().map(|u2| {
                let num_d = m * &e * &(u1 * &(z0 * 2i64 - &(&w * u1)) - &(&w * u2));
                let den_d = m - &e + &(&one_z * &e * u1);
                &num_d / &den.square() - &(&num * &den_d * 2i64 / &(den.square() * &den))
            });
            (Some(d1), d2)
        }
    };
    match d1 {
        Some(d1) => Jet1 { v, d1, d2 },
        None => Jet1 { v, d1: Real::zero(z0.prec()), d2: None },
    }
}

/// Maximum residuals of the representation identities at one level.
#[derive(Clone, Debug, Default)]
pub struct IdentityReport {
    /// `f_n(z) = a_n − (a_n+b_n) z_{q_n}(−z)`.
    pub f_via_z: f64,
    /// `g_n(z) = −b_n − (1−b_n) ẑ(1 − z/a_n)`.
    pub g_via_zhat: f64,
    /// `F̃_n(z) = a_n − (a_n+b_n) M_{m̃_n}(−z)`.
    pub f_tilde_via_m: f64,
    /// `g_{n+1}(z) = −f_n(−a_n z)/a_n`.
    pub cross_level: Option<f64>,
    /// `g′_{n+1}(0) − f′_n(0)`.
    pub cross_level_derivative: Option<f64>,
}

impl IdentityReport {
    pub fn max(&self) -> f64 {
        [
            self.f_via_z,
            self.g_via_zhat,
            self.f_tilde_via_m,
            self.cross_level.unwrap_or(0.0),
            self.cross_level_derivative.unwrap_or(0.0),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Checks the representation identities on the grids of the Υ evaluations.
///
/// `tilde` and `hat` must be paper-mode or oracle-mode evaluations at level
/// `n`; the identities hold for either multiplier. `next` is the level-`n+1`
/// pair for the cross-level checks.
pub fn representation_identities(
    pair: &RenormPair<'_>,
    coeffs: &RenormCoeffs,
    tilde: &UpsilonEval,
    hat: &UpsilonEval,
    next: Option<&RenormPair<'_>>,
) -> Result<IdentityReport> {
    if tilde.variant != Variant::Tilde || hat.variant != Variant::Hat {
        return Err(validation("identity check needs one tilde and one hat evaluation"));
    }
    let (a, b) = (&coeffs.a, &coeffs.b);
    let apb = a + b;
    let mut rep = IdentityReport::default();
    for p in &tilde.points {
        let z = -&p.z0;
        let f = pair.f(&z)?;
        let zq = z_qn_formula(tilde, p);
        let r = (&f.v - &(a - &(&apb * &zq.v))).abs().to_f64();
        rep.f_via_z = rep.f_via_z.max(r);
    }
    for p in &hat.points {
        let z = a * &(1i64 - &p.z0);
        let z = if p.z0.is_zero() { a.clone() } else { z };
        let g = pair.g(&z)?;
        let zh = z_qn_formula(hat, p);
        let r = (&g.v - &(-b - &((1i64 - b) * &zh.v))).abs().to_f64();
        rep.g_via_zhat = rep.g_via_zhat.max(r);
    }
    let ft = f_form("F~_n", a, b, &coeffs.m_tilde)?;
    let mt = canonical_moebius(&coeffs.m_tilde)?;
    for p in &tilde.points {
        let z = -&p.z0;
        let lhs = ft.eval(&z).v;
        let rhs = a - &(&apb * &mt.eval(&p.z0).v);
        rep.f_tilde_via_m = rep.f_tilde_via_m.max((lhs - rhs).abs().to_f64());
    }
    if let Some(nx) = next {
        let mut worst = 0.0f64;
        let pts = tilde.points.len().max(2);
        let (_, hi) = nx.domain(PairSide::G);
        let an = pair.a.with_prec(nx.bits);
        for k in 0..pts {
            let z = grid_point(&Real::zero(nx.bits), &hi, k, pts);
            let arg = -(&an * &z);
            let arg = if arg < -1.0 { Real::from_i64(nx.bits, -1) } else { arg };
            let lhs = nx.g(&z)?.v;
            let rhs = -(pair.f(&arg)?.v / &an);
            worst = worst.max((lhs - rhs).abs().to_f64());
        }
        rep.cross_level = Some(worst);
        let d = nx.g(&Real::zero(nx.bits))?.d1 - &pair.f(&Real::zero(pair.bits))?.d1;
        rep.cross_level_derivative = Some(d.abs().to_f64());
    }
    Ok(rep)
}
