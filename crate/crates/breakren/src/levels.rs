//! Per-level convergence tables.

use crate::contfrac::ContinuedFraction;
use crate::error::{Error, Result};
use crate::maps::BreakMap;
use crate::numerics::{PrecisionPolicy, Real};
use crate::partition::DynamicalPartition;
use crate::renorm::{
    coefficients, distance, moebius_approximants, unit_grid, upsilon, GridPolicy, Multiplier, NormReport, PairSide,
    RenormCoeffs, RenormPair, Variant,
};

#[derive(Clone, Copy, Debug)]
pub struct LevelOptions {
    pub policy: PrecisionPolicy,
    pub grid: GridPolicy,
    /// Points of the `z₀` grid for Υ; zero skips Υ.
    pub upsilon_points: usize,
    /// Interior samples per partition interval for `d_n`.
    pub d_samples: usize,
}

impl Default for LevelOptions {
    fn default() -> Self {
        LevelOptions { policy: PrecisionPolicy::default(), grid: GridPolicy::default(), upsilon_points: 257, d_samples: 64 }
    }
}

/// Grid sups of `|Υ|`, `|Υ′|`, `|z₀(1−z₀)Υ′|` and `|z₀(1−z₀)Υ″|`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct UpsilonStats {
    pub ups: f64,
    pub d1: Option<f64>,
    pub weighted_d1: Option<f64>,
    pub weighted_d2: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct LevelRow {
    pub n: usize,
    pub q_n: i64,
    pub bits: u32,
    pub coeffs: RenormCoeffs,
    pub d_n: Real,
    /// `f_n` against `F_n` and `F̃_n`; `None` if the approximant degenerates.
    pub f: Option<NormReport>,
    pub f_tilde: Option<NormReport>,
    /// `g_n` against `G_n` and `Ĝ_n`.
    pub g: Option<NormReport>,
    pub g_hat: Option<NormReport>,
    pub upsilon_tilde: Option<UpsilonStats>,
    pub upsilon_hat: Option<UpsilonStats>,
    pub degenerate: Vec<String>,
}

impl LevelRow {
    pub fn r_n(&self) -> f64 {
        self.coeffs.residual().to_f64()
    }

    pub fn r_over_a(&self) -> f64 {
        self.coeffs.residual_over_a().to_f64()
    }
}

fn stats(ev: &crate::renorm::UpsilonEval) -> UpsilonStats {
    UpsilonStats {
        ups: ev.max_abs(),
        d1: ev.max_d1(),
        weighted_d1: ev.max_weighted_d1(),
        weighted_d2: ev.points.iter().any(|p| p.d2.is_some()).then(|| ev.max_weighted_d2()).flatten(),
    }
}

/// Builds the partition, coefficients, pair and approximants at level `n`.
pub fn level(map: &BreakMap, cf: &ContinuedFraction, n: usize, opts: &LevelOptions) -> Result<LevelRow> {
    let part = DynamicalPartition::build(map, cf, n, &opts.policy)?;
    let coeffs = coefficients(map, &part)?;
    let samples = part.sample_orbits(map, opts.d_samples)?;
    let d_n = part.d_norm(&samples);
    let pair = RenormPair::new(map, &part);
    let mut degenerate = Vec::new();
    let (mut f, mut f_tilde, mut g, mut g_hat) = (None, None, None, None);
    match moebius_approximants(&coeffs) {
        Ok(ap) => {
            let fs = distance(&pair, PairSide::F, &[&ap.f, &ap.f_tilde], opts.grid)?;
            let gs = distance(&pair, PairSide::G, &[&ap.g, &ap.g_hat], opts.grid)?;
            let mut fs = fs.into_iter();
            let mut gs = gs.into_iter();
            f = fs.next();
            f_tilde = fs.next();
            g = gs.next();
            g_hat = gs.next();
        }
        Err(Error::Degenerate(msg)) => degenerate.push(msg),
        Err(e) => return Err(e),
    }
    let (mut upsilon_tilde, mut upsilon_hat) = (None, None);
    if opts.upsilon_points >= 2 {
        let grid = unit_grid(opts.upsilon_points, part.bits);
        upsilon_tilde = Some(stats(&upsilon(map, &part, &coeffs, Variant::Tilde, Multiplier::Paper, &grid)?));
        upsilon_hat = Some(stats(&upsilon(map, &part, &coeffs, Variant::Hat, Multiplier::Paper, &grid)?));
    }
    Ok(LevelRow {
        n,
        q_n: part.q_n,
        bits: part.bits,
        coeffs,
        d_n,
        f,
        f_tilde,
        g,
        g_hat,
        upsilon_tilde,
        upsilon_hat,
        degenerate,
    })
}

pub fn levels(
    map: &BreakMap,
    cf: &ContinuedFraction,
    ns: impl IntoIterator<Item = usize>,
    opts: &LevelOptions,
) -> Result<Vec<LevelRow>> {
    ns.into_iter().map(|n| level(map, cf, n, opts)).collect()
}
