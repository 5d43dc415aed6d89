//! Continued fractions, rotation numbers and parameter tuning.

use crate::error::{domain, validation, Error, Result};
use crate::maps::BreakMap;
use crate::numerics::{CirclePoint, Real};

/// Partial quotients `k_1..k_N` with exact convergents.
///
/// Index conventions follow the usual recurrence: `p_{−1} = 1, q_{−1} = 0,
/// p_0 = 0, q_0 = 1`. Accessors take `n ≥ −1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContinuedFraction {
    quotients: Vec<u64>,
    // p[n + 1] = p_n
    p: Vec<i64>,
    q: Vec<i64>,
}

impl ContinuedFraction {
    pub fn new(quotients: &[u64]) -> Result<ContinuedFraction> {
        let mut p = vec![1i64, 0];
        let mut q = vec![0i64, 1];
        for (i, &k) in quotients.iter().enumerate() {
            if k == 0 {
                return Err(validation(format!("partial quotient k_{} must be >= 1", i + 1)));
            }
            let k = i64::try_from(k).map_err(|_| validation("partial quotient too large"))?;
            let next = |v: &Vec<i64>| {
                k.checked_mul(v[v.len() - 1])
                    .and_then(|x| x.checked_add(v[v.len() - 2]))
                    .ok_or_else(|| validation("convergent overflows 64-bit integers"))
            };
            let pn = next(&p)?;
            let qn = next(&q)?;
            p.push(pn);
            q.push(qn);
        }
        Ok(ContinuedFraction { quotients: quotients.to_vec(), p, q })
    }

    pub fn golden(n: usize) -> ContinuedFraction {
        ContinuedFraction::new(&vec![1; n]).expect("golden quotients are valid")
    }

    pub fn quotients(&self) -> &[u64] {
        &self.quotients
    }

    pub fn len(&self) -> usize {
        self.quotients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quotients.is_empty()
    }

    pub fn p(&self, n: i64) -> i64 {
        self.p[(n + 1) as usize]
    }

    pub fn q(&self, n: i64) -> i64 {
        self.q[(n + 1) as usize]
    }

    /// `k_n` for `n ≥ 1`.
    pub fn k(&self, n: usize) -> u64 {
        self.quotients[n - 1]
    }

    /// `p_N / q_N` at `bits`.
    pub fn value(&self, bits: u32) -> Real {
        let n = self.len() as i64;
        Real::from_i64(bits, self.p(n)) / self.q(n)
    }
}

/// Convergents `(p_n, q_n)` for `n = 1..N`.
pub fn convergents(quotients: &[u64]) -> Result<Vec<(i64, i64)>> {
    let cf = ContinuedFraction::new(quotients)?;
    Ok((1..=cf.len() as i64).map(|n| (cf.p(n), cf.q(n))).collect())
}

/// Result of a Gauss-map expansion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expansion {
    pub quotients: Vec<u64>,
    /// The input was rational to working precision and the expansion ended
    /// before `N` quotients.
    pub terminated: bool,
}

/// First `n` partial quotients of `rho ∈ (0,1)`.
///
/// A running bound on the accumulated rounding error decides whether each
/// quotient is trustworthy. If the remainder vanishes within that bound while
/// the bound is still below `2^{−bits/2}`, the input is treated as rational
/// and the expansion stops with `terminated = true`.
pub fn expand(rho: &Real, n: usize) -> Result<Expansion> {
    if !(rho.is_positive() && *rho < 1.0) {
        return Err(domain("rho must lie in (0,1)"));
    }
    let bits = rho.prec();
    let ulp = Real::one(bits) / Real::from_i64(bits, 2).powf(bits as f64);
    let rational_floor = Real::one(bits) / Real::from_i64(bits, 2).powf((bits / 2) as f64);
    let mut y = rho.clone();
    let mut err = ulp.clone();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let lower = &y - &err;
        if !lower.is_positive() {
            return Err(Error::Precision(format!(
                "expansion unreliable after k_{}: remainder lost in rounding",
                out.len()
            )));
        }
        let x = y.recip();
        let err_x = &err / &(&y * &lower) + &(&x * &ulp);
        let k = x.floor();
        let up = &k + 1i64;
        let to_lo = &x - &k;
        let to_hi = &up - &x;
        let near = to_lo.min(&to_hi);
        if near <= err_x {
            if err_x < rational_floor {
                let kk = if to_lo <= to_hi { k } else { up };
                out.push(as_quotient(&kk, out.len())?);
                return Ok(Expansion { quotients: out, terminated: true });
            }
            return Err(Error::Precision(format!(
                "expansion unreliable after k_{}: quotient {} ambiguous",
                out.len(),
                out.len() + 1
            )));
        }
        out.push(as_quotient(&k, out.len())?);
        y = to_lo;
        err = err_x;
    }
    Ok(Expansion { quotients: out, terminated: false })
}

fn as_quotient(k: &Real, good: usize) -> Result<u64> {
    k.to_i64_exact()
        .filter(|&v| v >= 1)
        .map(|v| v as u64)
        .ok_or_else(|| Error::Precision(format!("expansion unreliable after k_{good}: quotient out of range")))
}

/// `(Fᵀ(0) − 0)/T` for the lift `F`.
pub fn estimate_rotation(map: &BreakMap, iterations: usize, bits: u32) -> Result<Real> {
    if iterations == 0 {
        return Err(domain("need at least one iteration"));
    }
    let mut p = CirclePoint::origin(bits);
    for _ in 0..iterations {
        p = map.step(&p);
    }
    Ok(p.lift() / iterations as i64)
}

/// Which way β has to move for the orbit of the break to match the target.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Increase,
    Decrease,
}

fn expected_sign(m: i64) -> i32 {
    if m % 2 == 0 {
        1
    } else {
        -1
    }
}

fn judge(observed: i32, expected: i32) -> Option<Verdict> {
    if observed == expected {
        None
    } else if expected < 0 {
        Some(Verdict::Decrease)
    } else {
        Some(Verdict::Increase)
    }
}

/// The level-N combinatorial certificate for the orbit of `ξ₀ = 0`.
///
/// It demands `sign(F^{q_m}(0) − p_m) = (−1)^m` for `m = 1..N` and
/// `sign(F^{q_N+q_{N−1}}(0) − p_N − p_{N−1}) = (−1)^{N−1}`, which together
/// pin the rotation number between `p_N/q_N` and the next mediant, i.e.
/// fix the first `N` partial quotients. A zero counts as a mismatch.
pub fn certificate(map: &BreakMap, cf: &ContinuedFraction, bits: u32) -> Verdict {
    let n = cf.len() as i64;
    let total = (cf.q(n) + cf.q(n - 1)) as usize;
    let mut p = CirclePoint::origin(bits);
    let mut m = 1i64;
    for j in 1..=total {
        p = map.step(&p);
        while m <= n && cf.q(m) as usize == j {
            let s = p.offset(cf.p(m)).signum_i();
            if let Some(v) = judge(s, expected_sign(m)) {
                return v;
            }
            m += 1;
        }
    }
    let s = p.offset(cf.p(n) + cf.p(n - 1)).signum_i();
    judge(s, expected_sign(n - 1)).unwrap_or(Verdict::Pass)
}

/// Bisects β ∈ [0,1] until the orbit of the break realizes `cf`.
///
/// The returned β is a dyadic rational exactly representable at `bits`.
pub fn tune_parameter(map: &BreakMap, cf: &ContinuedFraction, bits: u32) -> Result<Real> {
    if cf.is_empty() {
        return Err(validation("tuning needs at least one partial quotient"));
    }
    if cf.len() > 20 {
        return Err(validation("tuning supports at most 20 partial quotients"));
    }
    let mut lo = Real::zero(bits);
    let mut hi = Real::one(bits);
    if certificate(&map.with_beta(lo.clone()), cf, bits) != Verdict::Increase
        || certificate(&map.with_beta(hi.clone()), cf, bits) != Verdict::Decrease
    {
        return Err(validation("beta in [0,1] does not bracket the target"));
    }
    for _ in 0..bits {
        let mid = (&lo + &hi) / 2i64;
        if mid == lo || mid == hi {
            break;
        }
        match certificate(&map.with_beta(mid.clone()), cf, bits) {
            Verdict::Pass => return Ok(mid),
            Verdict::Increase => lo = mid,
            Verdict::Decrease => hi = mid,
        }
    }
    Err(Error::Precision(format!(
        "bisection exhausted {bits} bits without meeting the level-{} certificate",
        cf.len()
    )))
}
