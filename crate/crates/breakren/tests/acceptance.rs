//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria that are known not to hold on the shipped presets are listed in
//! `EXPECTED_FAIL`. They are still evaluated at full strength and printed as
//! FAIL; the test errors if any other criterion fails, or if a listed one
//! starts passing.

use std::time::Instant;

use breakren::contfrac::{certificate, convergents, expand, tune_parameter, Verdict};
use breakren::levels::{levels, LevelOptions, LevelRow};
use breakren::partition::{level_tolerance, DynamicalPartition};
use breakren::rate::{fit_rate, spread, Model};
use breakren::renorm::{
    representation_identities, unit_grid, upsilon, z_qn_formula, Multiplier, RenormPair, Variant,
};
use breakren::zygmund::{class_ratio, dyadic_taus, omega, p_gamma, standard_xi_grid, t_gamma, z};
use breakren::{BreakMap, ContinuedFraction, PrecisionPolicy, Real};

const MOEBIUS: &str = "moebius:c=2";
const SMOOTH: &str = "smooth:c=2,eps=0.1";
const ZYG_075: &str = "zygmund:c=2,gamma=0.75,eps=0.05,xstar=0.5";
const ZYG_2: &str = "zygmund:c=2,gamma=2,eps=0.05,xstar=0.5";
const ROTATION: &str = "rotation";

/// Largest admissible max/min over a window for "bounded" sequences.
const SPREAD_CAP: f64 = 10.0;
/// Criterion 2.
const LAMBDA_CAP: f64 = 0.9;
const R2_FLOOR: f64 = 0.9;
/// Slack on the Denjoy and Finzi inequalities.
const DENJOY_SLACK: f64 = 1e-10;
/// `|m̃_n − m_n|` fitted rate must stay below this.
const MULT_LAMBDA_CAP: f64 = 0.9;
/// class_ratio at τ = 2^{−30} over its value at τ = 2^{−4}, smooth preset.
const SMOOTH_CLASS_DECAY: f64 = 1e-3;

const EXPECTED_FAIL: &[(u8, &str)] = &[
    (2, "the C1 error oscillates with the parity of n: r² ≈ 0.83, and a_n·‖g″−G″‖ rises at odd n"),
    (3, "weighted errors decay geometrically, so n^0.75·e_n is not bounded below"),
    (4, "weighted errors decay geometrically, so n^2·e_n is not bounded below"),
    (5, "Υ̃ decays geometrically, so the weighted sup is not bounded below"),
    (8, "Σ Z(x2^{−n}) exceeds (γ−1)^{−1}(log 1/x)^{1−γ} by the factor 1/ln 2"),
];

struct Line {
    id: u8,
    title: &'static str,
    pass: bool,
    detail: Vec<String>,
}

impl Line {
    fn new(id: u8, title: &'static str) -> Line {
        Line { id, title, pass: true, detail: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: String) {
        self.pass &= ok;
        self.detail.push(format!("{} {what}", if ok { "ok" } else { "FAIL" }));
    }
}

fn tuned(preset: &str, n_max: usize) -> (BreakMap, ContinuedFraction) {
    let cf = ContinuedFraction::golden(n_max + 2);
    let map: BreakMap = preset.parse().unwrap();
    let beta = tune_parameter(&map, &cf, PrecisionPolicy::default().bits(cf.len())).unwrap();
    (map.with_beta(beta), cf)
}

fn sweep(preset: &str, n_max: usize) -> (BreakMap, ContinuedFraction, Vec<LevelRow>) {
    let t = Instant::now();
    let (map, cf) = tuned(preset, n_max);
    let rows = levels(&map, &cf, 1..=n_max, &LevelOptions::default()).unwrap();
    eprintln!("swept {preset} to n={n_max} in {:.1}s", t.elapsed().as_secs_f64());
    (map, cf, rows)
}

fn pow2(e: i64) -> f64 {
    (e as f64).exp2()
}

fn window<'a>(rows: &'a [LevelRow], lo: usize, hi: usize) -> impl Iterator<Item = &'a LevelRow> {
    rows.iter().filter(move |r| r.n >= lo && r.n <= hi)
}

/// `w(n)·x_n` over the window, `None` where `x_n` is unavailable.
fn weighted(rows: &[LevelRow], lo: usize, hi: usize, w: impl Fn(f64) -> f64, x: impl Fn(&LevelRow) -> Option<f64>) -> Vec<f64> {
    window(rows, lo, hi).map(|r| x(r).map_or(f64::NAN, |v| w(r.n as f64) * v)).collect()
}

fn bounded(line: &mut Line, label: &str, seq: &[f64]) {
    let s = spread(seq);
    line.check(seq.iter().all(|v| v.is_finite()) && s <= SPREAD_CAP, format!("{label}: max/min {s:.3e} (cap {SPREAD_CAP})"));
}

fn criterion1(rows: &[LevelRow], map: &BreakMap, cf: &ContinuedFraction) -> Line {
    let mut line = Line::new(1, "Moebius oracle identity, n = 1..12");
    let mut worst_f = f64::NEG_INFINITY;
    let mut worst_g = f64::NEG_INFINITY;
    let mut fails = Vec::new();
    for r in window(rows, 1, 12) {
        let tol = level_tolerance(r.bits, r.n).to_f64();
        let f = r.f.as_ref().and_then(|f| f.c2.as_ref()).map_or(f64::INFINITY, Real::to_f64);
        let g = r.g.as_ref().map_or(f64::INFINITY, |g| g.c1.to_f64());
        worst_f = worst_f.max(f.log2() - tol.log2());
        worst_g = worst_g.max(g.log2() - tol.log2());
        if !(f <= tol && g <= tol) {
            fails.push(r.n);
        }
    }
    line.check(fails.is_empty(), format!("C2(f) and C1(g) within 2^(-bits+16n), headroom {worst_f:.0}/{worst_g:.0} bits, failing levels {fails:?}"));
    // Υ vanishes with the exact multipliers
    let pol = PrecisionPolicy::default();
    let mut ups_worst = 0.0f64;
    let mut ok = true;
    for n in [2, 6, 10] {
        let part = DynamicalPartition::build(map, cf, n, &pol).unwrap();
        let k = breakren::renorm::coefficients(map, &part).unwrap();
        let grid = unit_grid(33, part.bits);
        let tol = level_tolerance(part.bits, n).to_f64();
        for v in [Variant::Tilde, Variant::Hat] {
            let e = upsilon(map, &part, &k, v, Multiplier::Oracle, &grid).unwrap();
            ups_worst = ups_worst.max(e.max_abs());
            ok &= e.max_abs() <= tol;
        }
    }
    line.check(ok, format!("oracle-mode |Υ| max {ups_worst:.2e}"));
    line
}

fn criterion2(rows: &[LevelRow]) -> Line {
    let mut line = Line::new(2, "smooth trend, window 4..12");
    let ns: Vec<usize> = window(rows, 4, 12).map(|r| r.n).collect();
    let e: Vec<f64> = window(rows, 4, 12).map(|r| r.f.as_ref().map_or(f64::NAN, |f| f.c1.to_f64())).collect();
    match fit_rate(&ns, &e, Model::Exponential).unwrap().fit() {
        Some(f) => {
            line.check(f.lambda() < LAMBDA_CAP, format!("lambda {:.3} < {LAMBDA_CAP}", f.lambda()));
            line.check(f.r_squared >= R2_FLOOR, format!("r2 {:.3} >= {R2_FLOOR}", f.r_squared));
        }
        None => line.check(false, "C1 errors below the noise floor".into()),
    }
    let scaled = weighted(rows, 4, 12, |_| 1.0, |r| Some(r.coeffs.a.to_f64() * r.g.as_ref()?.sup_d2.as_ref()?.to_f64()));
    let rises: Vec<usize> = scaled.windows(2).enumerate().filter(|(_, w)| !(w[1] < w[0])).map(|(i, _)| ns[i + 1]).collect();
    line.check(rises.is_empty(), format!("a_n*sup|g''-G''| decreasing, rises at n = {rises:?}"));
    let shown: Vec<String> = scaled.iter().map(|v| format!("{v:.2e}")).collect();
    line.detail.push(format!("note a_n*sup|g''-G''| = [{}]", shown.join(", ")));
    line
}

fn criterion3(rows: &[LevelRow]) -> Line {
    let mut line = Line::new(3, "gamma = 0.75 boundedness, window 4..14");
    let g = 0.75;
    bounded(&mut line, "n^0.75 C1(f - F~)", &weighted(rows, 4, 14, |n| n.powf(g), |r| Some(r.f_tilde.as_ref()?.c1.to_f64())));
    bounded(&mut line, "n^0.75 C1(g - G^)", &weighted(rows, 4, 14, |n| n.powf(g), |r| Some(r.g_hat.as_ref()?.c1.to_f64())));
    line
}

fn criterion4(rows: &[LevelRow]) -> Line {
    let mut line = Line::new(4, "gamma = 2 boundedness, window 4..14");
    bounded(&mut line, "n^2 C1(f - F)", &weighted(rows, 4, 14, |n| n * n, |r| Some(r.f.as_ref()?.c1.to_f64())));
    bounded(&mut line, "n sup|f''-F''|", &weighted(rows, 4, 14, |n| n, |r| Some(r.f.as_ref()?.sup_d2.as_ref()?.to_f64())));
    bounded(&mut line, "n^2 |r_n|/a_n", &weighted(rows, 4, 14, |n| n * n, |r| Some(r.r_over_a().abs())));
    line
}

fn criterion5(z075: &[LevelRow], z2: &[LevelRow]) -> Line {
    let mut line = Line::new(5, "Upsilon~ bounds, window 4..14");
    for (rows, g, name) in [(z075, 0.75, "g0.75"), (z2, 2.0, "g2")] {
        let ups = |r: &LevelRow| r.upsilon_tilde;
        bounded(&mut line, &format!("{name} n^g max|U~|"), &weighted(rows, 4, 14, |n| n.powf(g), |r| Some(ups(r)?.ups)));
        bounded(
            &mut line,
            &format!("{name} n^g max|z(1-z)U~'|"),
            &weighted(rows, 4, 14, |n| n.powf(g), |r| ups(r)?.weighted_d1),
        );
    }
    bounded(&mut line, "g2 n max|U~'|", &weighted(z2, 4, 14, |n| n, |r| r.upsilon_tilde?.d1));
    bounded(&mut line, "g2 n max|z(1-z)U~''|", &weighted(z2, 4, 14, |n| n, |r| r.upsilon_tilde?.weighted_d2));
    line
}

fn criterion6() -> Line {
    let mut line = Line::new(6, "structural invariants, every preset, n <= 12");
    let pol = PrecisionPolicy::default();
    for preset in [MOEBIUS, SMOOTH, ZYG_075, ZYG_2, ROTATION] {
        let (map, cf) = tuned(preset, 12);
        let mut bad = Vec::new();
        let mut d = Vec::new();
        for n in 1..=12 {
            let part = DynamicalPartition::build_unchecked(&map, &cf, n, pol.bits(n)).unwrap();
            let rep = part.validate();
            if !rep.coverage_ok() {
                bad.push(format!("n={n} coverage"));
            }
            if !rep.count_ok() || rep.count as i64 != cf.q(n as i64) + cf.q(n as i64 - 1) {
                bad.push(format!("n={n} count"));
            }
            let samples = part.sample_orbits(&map, 16).unwrap();
            let fz = part.finzi_check(&map, &samples).unwrap();
            if !fz.denjoy_ok(DENJOY_SLACK) {
                bad.push(format!("n={n} denjoy {:.3e} > nu {:.3e}", fz.log_deriv_qn.abs_max(), fz.nu));
            }
            if !fz.finzi_ok(DENJOY_SLACK) {
                bad.push(format!("n={n} finzi"));
            }
            if !fz.coefficient_bounds_ok(DENJOY_SLACK) {
                bad.push(format!("n={n} a+b={:.4} 1-b={:.4}", fz.a_plus_b, fz.one_minus_b));
            }
            d.push(part.d_norm(&samples).to_f64());
        }
        let rises: Vec<usize> = d.windows(2).enumerate().filter(|(_, w)| !(w[1] < w[0])).map(|(i, _)| i + 2).collect();
        if !rises.is_empty() {
            bad.push(format!("d_n rises at {rises:?}"));
        }
        line.check(bad.is_empty(), format!("{preset}: {}", if bad.is_empty() { "all checks".into() } else { bad.join("; ") }));
    }
    line
}

fn criterion7(sweeps: &[(&str, &BreakMap, &ContinuedFraction, &[LevelRow])]) -> Line {
    let mut line = Line::new(7, "formula equivalences");
    let pol = PrecisionPolicy::default();
    for &(preset, map, cf, rows) in sweeps {
        let mut z_worst = f64::NEG_INFINITY;
        let mut id_worst = f64::NEG_INFINITY;
        let mut ok = true;
        for n in 2..=10 {
            let part = DynamicalPartition::build(map, cf, n, &pol).unwrap();
            let next = DynamicalPartition::build(map, cf, n + 1, &pol).unwrap();
            let k = breakren::renorm::coefficients(map, &part).unwrap();
            let pair = RenormPair::new(map, &part);
            let pair1 = RenormPair::new(map, &next);
            let grid = unit_grid(33, part.bits);
            let tilde = upsilon(map, &part, &k, Variant::Tilde, Multiplier::Paper, &grid).unwrap();
            let hat = upsilon(map, &part, &k, Variant::Hat, Multiplier::Paper, &grid).unwrap();
            let half = pow2(-(part.bits as i64) / 2);
            for p in &tilde.points {
                let zf = z_qn_formula(&tilde, p);
                let mut r = (&zf.v - &p.z_direct).abs().to_f64();
                // without f″ there is no Υ′ at the endpoints, hence no z′ from the formula
                if p.d1.is_some() {
                    r = r.max((&zf.d1 - &p.z_direct_d1).abs().to_f64());
                }
                z_worst = z_worst.max(r.log2() - half.log2());
                ok &= r <= half;
            }
            let rep = representation_identities(&pair, &k, &tilde, &hat, Some(&pair1)).unwrap();
            id_worst = id_worst.max(rep.max().log2() - half.log2());
            ok &= rep.max() <= half;
        }
        line.check(ok, format!("{preset}: z_qn and identities within 2^(-bits/2), worst margin {z_worst:.0}/{id_worst:.0} bits"));
        let mut dual_ok = true;
        let mut prod_ok = true;
        for r in window(rows, 1, 12) {
            let tol = level_tolerance(r.bits, r.n);
            dual_ok &= (&r.coeffs.b - &r.coeffs.b_dual).abs() <= tol;
            if map.supports_d2() {
                prod_ok &= r.coeffs.product_identity.abs() <= tol;
            }
        }
        line.check(dual_ok, format!("{preset}: b_n dual definitions agree"));
        if map.supports_d2() {
            line.check(prod_ok, format!("{preset}: product identity to 2^(-bits+16n)"));
        }
    }
    let (_, _, _, smooth) = sweeps.iter().find(|s| s.0 == SMOOTH).unwrap();
    let ns: Vec<usize> = window(smooth, 4, 12).map(|r| r.n).collect();
    let gaps: Vec<f64> = window(smooth, 4, 12).map(|r| (&r.coeffs.m_tilde - &r.coeffs.m).abs().to_f64()).collect();
    let fit = fit_rate(&ns, &gaps, Model::Exponential).unwrap();
    let lam = fit.fit().map_or(f64::NAN, |f| f.lambda());
    line.check(lam < MULT_LAMBDA_CAP, format!("smooth |m~ - m| rate {lam:.3} < {MULT_LAMBDA_CAP}"));
    line
}

fn criterion8() -> Line {
    let mut line = Line::new(8, "Zygmund gauges");
    let e = std::f64::consts::E;
    let ln2 = std::f64::consts::LN_2;
    let units = (z(1.0, 1.0 / e).unwrap() - 1.0).abs() < 1e-15
        && (z(2.0, (-2.0f64).exp()).unwrap() - 0.25).abs() < 1e-15
        && omega(2.0, 0.01).unwrap() == 0.01
        && (omega(0.5, (-4.0f64).exp()).unwrap() - 2.0 * (-4.0f64).exp()).abs() < 1e-16
        && (p_gamma(2.0, 0.5, 1e-12).unwrap().value() - (std::f64::consts::PI.powi(2) / 6.0 - 1.0) / (ln2 * ln2)).abs() < 1e-9
        && t_gamma(0.75, 0.0, 0.1).unwrap() == 0.0
        && t_gamma(0.75, 0.1, 0.01).unwrap() < t_gamma(0.75, 0.3, 0.01).unwrap();
    line.check(units, "Z/Omega/P/T unit examples".into());

    let mut worst = 0.0f64;
    let mut worst_corrected = 0.0f64;
    for g in [1.5, 2.0, 3.0] {
        for k in 1..=40 {
            let x = pow2(-k);
            let p = p_gamma(g, x, 1e-9 * z(g, x).unwrap()).unwrap().upper();
            let bound = (-x.ln()).powf(1.0 - g) / (g - 1.0);
            worst = worst.max(p / bound);
            worst_corrected = worst_corrected.max(p / (bound / ln2));
        }
    }
    line.check(worst <= 1.0, format!("P <= (g-1)^-1 (log 1/x)^(1-g): worst ratio {worst:.4}"));
    line.check(worst_corrected <= 1.0, format!("P <= same bound / ln 2: worst ratio {worst_corrected:.4}"));

    let taus = dyadic_taus(4, 30);
    let per_tau = |preset: &str| -> Vec<f64> {
        let map: BreakMap = preset.parse().unwrap();
        let xis = standard_xi_grid(&map);
        taus.iter().map(|&t| class_ratio(&map, 0.75, &[t], &xis, 192).unwrap().sup).collect()
    };
    let zr = per_tau(ZYG_075);
    let head = zr[..14].iter().cloned().fold(0.0, f64::max);
    let tail = zr[14..].iter().cloned().fold(0.0, f64::max);
    line.check(zr.iter().all(|v| v.is_finite()) && tail <= SPREAD_CAP * head, format!("zygmund class ratio: tail max {tail:.3e}, head max {head:.3e}"));
    let sr = per_tau(SMOOTH);
    let decay = sr[sr.len() - 1] / sr[0];
    line.check(decay <= SMOOTH_CLASS_DECAY, format!("smooth class ratio decays by {decay:.2e}"));
    line
}

fn criterion9() -> Line {
    let mut line = Line::new(9, "continued fractions");
    let bits = 512;
    let five = Real::from_i64(bits, 5);
    let golden = (five.sqrt() - 1i64) / 2i64;
    let silver = Real::from_i64(bits, 2).sqrt() - 1i64;
    let ge = expand(&golden, 40).unwrap();
    let se = expand(&silver, 40).unwrap();
    line.check(ge.quotients.iter().all(|&k| k == 1) && se.quotients.iter().all(|&k| k == 2), "golden/silver expansions, 40 quotients".into());
    // p_n, q_n by hand: Fibonacci for golden, Pell for silver
    let (mut fib, mut pell) = (vec![(0i64, 1i64), (1, 1)], vec![(0i64, 1i64), (1, 2)]);
    for n in 2..30 {
        let (a, b) = (fib[n - 1], fib[n - 2]);
        fib.push((a.0 + b.0, a.1 + b.1));
        let (a, b) = (pell[n - 1], pell[n - 2]);
        pell.push((2 * a.0 + b.0, 2 * a.1 + b.1));
    }
    let ok = convergents(&[1; 29]).unwrap() == fib[1..].to_vec() && convergents(&[2; 29]).unwrap() == pell[1..].to_vec();
    line.check(ok, "convergent recurrences".into());
    for preset in [MOEBIUS, SMOOTH, ZYG_075, ZYG_2, ROTATION] {
        let (map, cf) = tuned(preset, 14);
        let v = certificate(&map, &cf, PrecisionPolicy::default().bits(cf.len()));
        line.check(v == Verdict::Pass, format!("{preset} certificate {v:?}"));
    }
    line
}

#[test]
fn acceptance() {
    let (mmap, mcf, mrows) = sweep(MOEBIUS, 12);
    let (smap, scf, srows) = sweep(SMOOTH, 12);
    let (zamap, zacf, zarows) = sweep(ZYG_075, 14);
    let (zbmap, zbcf, zbrows) = sweep(ZYG_2, 14);

    let lines = vec![
        criterion1(&mrows, &mmap, &mcf),
        criterion2(&srows),
        criterion3(&zarows),
        criterion4(&zbrows),
        criterion5(&zarows, &zbrows),
        criterion6(),
        criterion7(&[
            (MOEBIUS, &mmap, &mcf, &mrows),
            (SMOOTH, &smap, &scf, &srows),
            (ZYG_075, &zamap, &zacf, &zarows),
            (ZYG_2, &zbmap, &zbcf, &zbrows),
        ]),
        criterion8(),
        criterion9(),
    ];

    let mut surprises = Vec::new();
    for l in &lines {
        println!("criterion {}: {} - {}", l.id, if l.pass { "PASS" } else { "FAIL" }, l.title);
        for d in &l.detail {
            println!("    {d}");
        }
        let known = EXPECTED_FAIL.iter().find(|(id, _)| *id == l.id);
        if let Some((_, why)) = known {
            if !l.pass {
                println!("    expected failure: {why}");
            }
        }
        if l.pass == known.is_some() {
            surprises.push(l.id);
        }
    }
    assert!(surprises.is_empty(), "criteria with unexpected outcome: {surprises:?}");
}
