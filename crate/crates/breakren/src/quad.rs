//! Adaptive Simpson quadrature in double precision.
//!
//! Used only for diagnostic integrals (ν, T_γ) whose consumers compare
//! against bounds with slack far above 1e-12.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 48;

/// `∫_a^b f` to absolute tolerance `tol`.
///
/// Subintervals narrower than `1e-9·|b − a|` are accepted as they are and
/// their error estimates pooled; the call fails if the pool exceeds `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut st = State { min_width: 1e-9 * (b - a).abs(), pooled: 0.0 };
    let v = simpson(&f, &mut st, [a, b], [fa, fm, fb], whole, tol, MAX_DEPTH)?;
    if st.pooled > tol {
        return Err(Error::Precision(format!(
            "quadrature error estimate {:e} above tolerance {tol:e}",
            st.pooled
        )));
    }
    Ok(v)
}

/// Sums [`integrate`] over consecutive breakpoints, splitting `tol` evenly.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, knots: &[f64], tol: f64) -> Result<f64> {
    let pieces = knots.len().saturating_sub(1).max(1) as f64;
    let mut acc = 0.0;
    for w in knots.windows(2) {
        acc += integrate(&f, w[0], w[1], tol / pieces)?;
    }
    Ok(acc)
}

struct State {
    min_width: f64,
    pooled: f64,
}

fn simpson<F: Fn(f64) -> f64>(
    f: &F,
    st: &mut State,
    [a, b]: [f64; 2],
    [fa, fm, fb]: [f64; 3],
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if !delta.is_finite() {
        return Err(Error::Precision(format!("quadrature hit a non-finite value near {m}")));
    }
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if (b - a).abs() < st.min_width {
        st.pooled += delta.abs() / 15.0;
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Precision(format!(
            "quadrature did not reach tolerance {tol:e} near {m}"
        )));
    }
    let l = simpson(f, st, [a, m], [fa, flm, fm], left, tol / 2.0, depth - 1)?;
    let r = simpson(f, st, [m, b], [fm, frm, fb], right, tol / 2.0, depth - 1)?;
    Ok(l + r)
}
