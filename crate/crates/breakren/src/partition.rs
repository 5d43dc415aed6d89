//! Dynamical partitions of the circle by the orbit of the break point.
//!
//! At level `n` the circle is cut into the `q_{n−1}` intervals
//! `I_j^n = [ξ_j, ξ_{j+q_n} − p_n]` and the `q_n` intervals
//! `I_i^{n−1} = [ξ_{i+q_{n−1}} − p_{n−1}, ξ_i]`, both written for even `n`;
//! for odd `n` every interval is traversed the other way. Endpoints are kept
//! as [`CirclePoint`]s so shared endpoints are bit-identical.

use std::fmt;

use crate::contfrac::ContinuedFraction;
use crate::error::{validation, Error, Result};
use crate::maps::{BreakMap, Side};
use crate::numerics::{CirclePoint, PrecisionPolicy, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntervalFamily {
    /// `I_j^n`, `j < q_{n−1}`.
    Short,
    /// `I_i^{n−1}`, `i < q_n`.
    Long,
}

impl fmt::Display for IntervalFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IntervalFamily::Short => "I^n",
            IntervalFamily::Long => "I^{n-1}",
        })
    }
}

#[derive(Clone, Debug)]
pub struct Interval {
    pub family: IntervalFamily,
    pub index: usize,
    /// Orbit point `ξ_index` that generates the interval.
    pub anchor: CirclePoint,
    /// The endpoint reached after `q_n` (short) or `q_{n−1}` (long) steps,
    /// shifted back by `p_n` or `p_{n−1}`.
    pub partner: CirclePoint,
}

impl Interval {
    /// `partner − anchor`; sign `(−1)^n` for short intervals and `(−1)^{n−1}`
    /// for long ones.
    pub fn signed_length(&self, bits: u32) -> Real {
        self.partner.minus(&self.anchor, bits)
    }

    pub fn length(&self, bits: u32) -> Real {
        self.signed_length(bits).abs()
    }

    /// Endpoints in increasing lift order.
    pub fn ordered(&self, bits: u32) -> (&CirclePoint, &CirclePoint) {
        if self.signed_length(bits).is_negative() {
            (&self.partner, &self.anchor)
        } else {
            (&self.anchor, &self.partner)
        }
    }

    pub fn label(&self) -> String {
        match self.family {
            IntervalFamily::Short => format!("I_{}^n", self.index),
            IntervalFamily::Long => format!("I_{}^(n-1)", self.index),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DynamicalPartition {
    pub n: usize,
    pub bits: u32,
    pub p_n: i64,
    pub q_n: i64,
    pub p_n1: i64,
    pub q_n1: i64,
    /// `ξ_j` for `j = 0..=2q_n + q_{n−1}`.
    pub orbit: Vec<CirclePoint>,
    /// `f′(ξ_j)`, right-sided at the break.
    pub d1: Vec<Real>,
    /// `f′(ξ₀ − 0)`.
    pub d1_left0: Real,
    pub intervals: Vec<Interval>,
    /// Orbit indices `j > 0` with `ξ_j` exactly on the break.
    pub break_hits: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub expected_count: usize,
    pub count: usize,
    /// `Σ|gaps| + |Σ lengths − 1|` over the circle.
    pub coverage_residual: Real,
    pub tolerance: Real,
    /// First pair of circle-adjacent intervals whose overlap exceeds the tolerance.
    pub first_overlap: Option<(String, String)>,
    /// Intervals whose orientation disagrees with the parity of `n`.
    pub misoriented: Vec<String>,
}

impl ValidationReport {
    pub fn count_ok(&self) -> bool {
        self.count == self.expected_count
    }

    pub fn coverage_ok(&self) -> bool {
        self.coverage_residual <= self.tolerance
    }

    pub fn passed(&self) -> bool {
        self.count_ok() && self.coverage_ok() && self.first_overlap.is_none() && self.misoriented.is_empty()
    }

    pub fn describe(&self) -> String {
        let mut parts = Vec::new();
        if !self.count_ok() {
            parts.push(format!("{} intervals, expected {}", self.count, self.expected_count));
        }
        if let Some((a, b)) = &self.first_overlap {
            parts.push(format!("{a} overlaps {b}"));
        }
        if !self.coverage_ok() {
            parts.push(format!(
                "coverage residual {:e} above {:e}",
                self.coverage_residual.to_f64(),
                self.tolerance.to_f64()
            ));
        }
        if let Some(m) = self.misoriented.first() {
            parts.push(format!("{m} has the wrong orientation"));
        }
        if parts.is_empty() {
            return format!(
                "{} intervals, coverage residual {:e} within {:e}",
                self.count,
                self.coverage_residual.to_f64(),
                self.tolerance.to_f64()
            );
        }
        parts.join("; ")
    }
}

/// Tolerance `2^{−bits + 16n}` shared by the structural checks.
pub fn level_tolerance(bits: u32, n: usize) -> Real {
    let e = -(bits as i64) + 16 * n as i64;
    Real::from_i64(64, 2).powf(e as f64)
}

fn parity(n: usize) -> i32 {
    if n % 2 == 0 {
        1
    } else {
        -1
    }
}

impl DynamicalPartition {
    /// Builds and validates the level-`n` partition at `policy.bits(n)`.
    pub fn build(map: &BreakMap, cf: &ContinuedFraction, n: usize, policy: &PrecisionPolicy) -> Result<Self> {
        let p = Self::build_unchecked(map, cf, n, policy.bits(n))?;
        let report = p.validate();
        if !report.passed() {
            let msg = format!("level {n} partition invalid: {}", report.describe());
            let class_precision = policy.bits(n) < 64 + 16 * n as u32;
            return Err(if class_precision { Error::Precision(msg) } else { validation(msg) });
        }
        Ok(p)
    }

    /// Computes the orbit and intervals without validating them.
    pub fn build_unchecked(map: &BreakMap, cf: &ContinuedFraction, n: usize, bits: u32) -> Result<Self> {
        if n == 0 || n > cf.len() {
            return Err(validation(format!("level {n} outside 1..={}", cf.len())));
        }
        let nn = n as i64;
        let (p_n, q_n, p_n1, q_n1) = (cf.p(nn), cf.q(nn), cf.p(nn - 1), cf.q(nn - 1));
        let len = (2 * q_n + q_n1) as usize;
        let mut orbit = Vec::with_capacity(len + 1);
        let mut d1 = Vec::with_capacity(len + 1);
        let mut hits = Vec::new();
        let mut x = CirclePoint::origin(bits);
        let (_, left0, _) = map.step_jet(&x, Side::Left);
        for j in 0..=len {
            if j > 0 && x.is_break() {
                hits.push(j);
            }
            let (next, d, _) = map.step_jet(&x, Side::Right);
            orbit.push(x);
            d1.push(d);
            x = next;
        }
        let mut intervals = Vec::with_capacity((q_n + q_n1) as usize);
        for j in 0..q_n1 as usize {
            intervals.push(Interval {
                family: IntervalFamily::Short,
                index: j,
                anchor: orbit[j].clone(),
                partner: orbit[j + q_n as usize].shifted(-p_n),
            });
        }
        for i in 0..q_n as usize {
            intervals.push(Interval {
                family: IntervalFamily::Long,
                index: i,
                anchor: orbit[i].clone(),
                partner: orbit[i + q_n1 as usize].shifted(-p_n1),
            });
        }
        Ok(DynamicalPartition {
            n,
            bits,
            p_n,
            q_n,
            p_n1,
            q_n1,
            orbit,
            d1,
            d1_left0: left0,
            intervals,
            break_hits: hits,
        })
    }

    pub fn parity(&self) -> i32 {
        parity(self.n)
    }

    /// `δ_n = ξ_{q_n} − p_n`.
    pub fn delta_n(&self) -> Real {
        self.orbit[self.q_n as usize].offset(self.p_n)
    }

    /// `δ_{n−1} = ξ_{q_{n−1}} − p_{n−1}`.
    pub fn delta_n1(&self) -> Real {
        self.orbit[self.q_n1 as usize].offset(self.p_n1)
    }

    /// `ξ_{q_n+q_{n−1}} − p_n − p_{n−1}`.
    pub fn delta_sum(&self) -> Real {
        self.orbit[(self.q_n + self.q_n1) as usize].offset(self.p_n + self.p_n1)
    }

    /// `log f′(ξ_j)`; at `j = 0` the side is chosen explicitly.
    pub fn log_d1(&self, j: usize, side: Side) -> Real {
        if j == 0 && side == Side::Left {
            self.d1_left0.ln()
        } else {
            self.d1[j].ln()
        }
    }

    pub fn d1_at(&self, j: usize, side: Side) -> &Real {
        if j == 0 && side == Side::Left {
            &self.d1_left0
        } else {
            &self.d1[j]
        }
    }

    pub fn validate(&self) -> ValidationReport {
        let bits = self.bits;
        let wide = bits + 64;
        let expected = (self.q_n + self.q_n1) as usize;
        let tol = level_tolerance(bits, self.n);
        let mut misoriented = Vec::new();
        for iv in &self.intervals {
            let want = match iv.family {
                IntervalFamily::Short => self.parity(),
                IntervalFamily::Long => -self.parity(),
            };
            if iv.signed_length(bits).signum_i() != want {
                misoriented.push(iv.label());
            }
        }
        // sort by the fractional part of the left endpoint
        let mut order: Vec<(Real, usize)> = self
            .intervals
            .iter()
            .enumerate()
            .map(|(k, iv)| (iv.ordered(bits).0.frac.clone(), k))
            .collect();
        order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        let mut residual = Real::zero(wide);
        let mut total = Real::zero(wide);
        let mut first_overlap = None;
        let m = order.len();
        for k in 0..m {
            let a = &self.intervals[order[k].1];
            let b = &self.intervals[order[(k + 1) % m].1];
            total += a.length(wide);
            let gap = circle_gap(a.ordered(bits).1, b.ordered(bits).0, wide);
            if first_overlap.is_none() && m > 1 && -&gap > tol {
                first_overlap = Some((a.label(), b.label()));
            }
            residual += gap.abs();
        }
        residual += (total - 1i64).abs();
        ValidationReport {
            expected_count: expected,
            count: self.intervals.len(),
            coverage_residual: residual,
            tolerance: tol,
            first_overlap,
            misoriented,
        }
    }

    /// Moves one endpoint of interval `k` by `amount`; for fault-injection tests.
    pub fn perturb_endpoint(&mut self, k: usize, amount: &Real) {
        let iv = &mut self.intervals[k];
        iv.partner.frac = &iv.partner.frac + amount;
    }

    /// The fundamental segment `I_0^n` as (anchor ξ₀, partner).
    pub fn short0(&self) -> &Interval {
        &self.intervals[0]
    }

    /// `I_0^{n−1}`.
    pub fn long0(&self) -> &Interval {
        &self.intervals[self.q_n1 as usize]
    }

    /// Orbits of interior samples of `I_0^n` and `I_0^{n−1}`.
    pub fn sample_orbits(&self, map: &BreakMap, samples: usize) -> Result<SampleOrbits> {
        let bits = self.bits;
        let mut short = Vec::with_capacity(samples);
        let mut long = Vec::with_capacity(samples);
        for k in 0..samples {
            let t = Real::from_f64(bits, (k as f64 + 0.5) / samples as f64);
            short.push(self.sample_orbit(map, self.short0(), &t, (self.q_n + self.q_n1) as usize)?);
            long.push(self.sample_orbit(map, self.long0(), &t, (2 * self.q_n) as usize)?);
        }
        Ok(SampleOrbits { short, long })
    }

    fn sample_orbit(&self, map: &BreakMap, iv: &Interval, t: &Real, steps: usize) -> Result<SampleOrbit> {
        let bits = self.bits;
        let len = iv.signed_length(bits);
        let x = CirclePoint::from_lift(&(&iv.anchor.lift() + &(&len * t)))?;
        let mut points = Vec::with_capacity(steps + 1);
        let mut logs = Vec::with_capacity(steps + 1);
        let mut acc = Real::zero(bits);
        let mut p = x;
        for _ in 0..steps {
            let (next, d, _) = map.step_jet(&p, Side::Right);
            points.push(p);
            logs.push(acc.clone());
            acc += d.ln();
            p = next;
        }
        points.push(p);
        logs.push(acc);
        Ok(SampleOrbit { t: t.clone(), points, log_prefix: logs })
    }

    /// `d_n = max |f^{q_n}(x) − x|` on the circle over orbit points and samples.
    pub fn d_norm(&self, samples: &SampleOrbits) -> Real {
        let bits = self.bits;
        let q = self.q_n as usize;
        let mut best = Real::zero(bits);
        for j in 0..(self.q_n + self.q_n1) as usize {
            best = best.max(&self.orbit[j + q].shifted(-self.p_n).minus(&self.orbit[j], bits).abs());
        }
        for s in &samples.short {
            for j in 0..self.q_n1 as usize {
                best = best.max(&s.displacement(j, q, self.p_n, bits).abs());
            }
        }
        for s in &samples.long {
            for i in 0..q {
                best = best.max(&s.displacement(i, q, self.p_n, bits).abs());
            }
        }
        best
    }

    /// Denjoy and Finzi bounds at level `n`, with the coefficient bounds that
    /// follow from them.
    pub fn finzi_check(&self, map: &BreakMap, samples: &SampleOrbits) -> Result<FinziReport> {
        let bits = self.bits;
        let nu = map.log_derivative_variation()?.to_f64();
        let q = self.q_n as usize;
        let q1 = self.q_n1 as usize;
        let mut denjoy = Extremes::default();
        // orbit points; ξ₀ may sit on either side of the break
        let mut prefix = Vec::with_capacity(q + q1 + q + 1);
        let mut acc = Real::zero(bits);
        for k in 0..(2 * q + q1) {
            prefix.push(acc.clone());
            acc += self.d1[k].ln();
        }
        prefix.push(acc);
        for j in 0..(q + q1) {
            denjoy.push((&prefix[j + q] - &prefix[j]).to_f64());
        }
        let left_shift = self.d1_left0.ln() - &self.d1[0].ln();
        denjoy.push((&prefix[q] - &prefix[0] + &left_shift).to_f64());
        for s in &samples.short {
            for j in 0..q1 {
                denjoy.push((&s.log_prefix[j + q] - &s.log_prefix[j]).to_f64());
            }
        }
        for s in &samples.long {
            for i in 0..q {
                denjoy.push((&s.log_prefix[i + q] - &s.log_prefix[i]).to_f64());
            }
        }

        let mut deriv_ratio = Extremes::default();
        let mut coord_ratio = Extremes::default();
        let l0 = self.long0();
        let len0 = l0.signed_length(bits);
        for s in &samples.long {
            let x = &s.points[0];
            let z0 = l0.anchor.minus(x, bits) / &(-&len0);
            let w0 = &z0 * &(1i64 - &z0);
            for i in 0..q {
                let iv = &self.intervals[q1 + i];
                let leni = iv.signed_length(bits);
                let r = (&s.log_prefix[i] + &(&len0 / &leni).ln()).to_f64();
                deriv_ratio.push(r);
                let zi = iv.anchor.minus(&s.points[i], bits) / &(-&leni);
                let wi = &zi * &(1i64 - &zi);
                coord_ratio.push((&w0 / &wi).ln().to_f64());
            }
        }

        let dn1 = self.delta_n1();
        let a = self.delta_n() / &(-&dn1);
        let b = self.delta_sum() / &dn1;
        Ok(FinziReport {
            nu,
            log_deriv_qn: denjoy,
            log_deriv_ratio: deriv_ratio,
            log_coord_ratio: coord_ratio,
            a_plus_b: (&a + &b).to_f64(),
            one_minus_b_over_a: ((1i64 - &b) / &a).to_f64(),
            one_minus_b: (1i64 - &b).to_f64(),
        })
    }
}

/// Circle distance from `a` forward to `b`, folded into `(−½, ½]`.
fn circle_gap(a: &CirclePoint, b: &CirclePoint, bits: u32) -> Real {
    let d = b.minus(a, bits);
    let k = (&d + 0.5).floor();
    let k = k.to_i64_exact().unwrap_or(0);
    if k == 0 {
        d
    } else {
        b.shifted(-k).minus(a, bits)
    }
}

/// Orbit of one interior sample with prefix sums of `log f′`.
#[derive(Clone, Debug)]
pub struct SampleOrbit {
    pub t: Real,
    pub points: Vec<CirclePoint>,
    /// `log (f^j)′(x)` for `j = 0..=steps`.
    pub log_prefix: Vec<Real>,
}

impl SampleOrbit {
    /// `f^{q}(x_j) − x_j − p` on the lift.
    pub fn displacement(&self, j: usize, q: usize, p: i64, bits: u32) -> Real {
        self.points[j + q].shifted(-p).minus(&self.points[j], bits)
    }
}

#[derive(Clone, Debug)]
pub struct SampleOrbits {
    /// Starting in `I_0^n`, `q_n + q_{n−1}` steps.
    pub short: Vec<SampleOrbit>,
    /// Starting in `I_0^{n−1}`, `2q_n` steps.
    pub long: Vec<SampleOrbit>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Extremes {
    pub min: f64,
    pub max: f64,
}

impl Default for Extremes {
    fn default() -> Self {
        Extremes { min: f64::INFINITY, max: f64::NEG_INFINITY }
    }
}

impl Extremes {
    pub fn push(&mut self, v: f64) {
        self.min = self.min.min(v);
        self.max = self.max.max(v);
    }

    pub fn abs_max(&self) -> f64 {
        self.min.abs().max(self.max.abs())
    }
}

#[derive(Clone, Debug)]
pub struct FinziReport {
    pub nu: f64,
    /// `log (f^{q_n})′` over orbit points and samples.
    pub log_deriv_qn: Extremes,
    /// `log[(f^i)′(x)(α₀ − β₀)/(α_i − β_i)]`.
    pub log_deriv_ratio: Extremes,
    /// `log[z₀(1−z₀)/(z_i(1−z_i))]`.
    pub log_coord_ratio: Extremes,
    pub a_plus_b: f64,
    pub one_minus_b_over_a: f64,
    pub one_minus_b: f64,
}

impl FinziReport {
    pub fn denjoy_ok(&self, slack: f64) -> bool {
        self.log_deriv_qn.abs_max() <= self.nu + slack
    }

    pub fn finzi_ok(&self, slack: f64) -> bool {
        self.log_deriv_ratio.abs_max() <= self.nu + slack && self.log_coord_ratio.abs_max() <= 2.0 * self.nu + slack
    }

    pub fn coefficient_bounds_ok(&self, slack: f64) -> bool {
        let e = self.nu.exp() * (1.0 + slack);
        self.a_plus_b <= e && self.one_minus_b_over_a <= e && self.one_minus_b > 0.0 && self.one_minus_b < 1.0
    }
}
