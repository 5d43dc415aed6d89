//! One function per subcommand. Each returns the lines to print.

use std::path::Path;

use breakren::contfrac::{certificate, Verdict};
use breakren::lemmalab::{self, SweepRow};
use breakren::levels::{level, LevelRow};
use breakren::maps::Family;
use breakren::partition::DynamicalPartition;
use breakren::rate::{fit_rate, FitOutcome, Model};
use breakren::renorm::{
    coefficients, distance, moebius_approximants, unit_grid, upsilon, Multiplier, NormReport, PairSide, RenormPair,
    Variant,
};
use breakren::{zygmund, Real};

use crate::config::{Config, Experiment};
use crate::output::{log_plot, write_csv, write_json};
use crate::CliError;

pub const RENORM_HEADER: [&str; 17] = [
    "n", "q_n", "a_n", "b_n", "c_n", "m_n", "m_tilde_n", "m_hat_n", "d_n", "C0_f", "C1_f", "C2_f", "C0_g", "C1_g",
    "C2_g", "r_n", "r_n_over_a_n",
];

pub const PARTITION_HEADER: [&str; 5] = ["j", "xi_j", "interval_family", "interval_index", "length"];

pub const LEMMA_HEADER: [&str; 6] = ["lemma_id", "interval_length", "probe_t", "quantity", "bound", "ratio"];

pub fn tune(cfg: &Config) -> Result<Vec<String>, CliError> {
    let ex = Experiment::tuned(cfg)?;
    let verdict = certificate(&ex.map, &ex.cf, ex.policy.bits(ex.cf.len()));
    if verdict != Verdict::Pass {
        return Err(CliError::Assertion(format!("tuned map fails the certificate: {verdict:?}")));
    }
    Ok(vec![
        format!("beta={}", ex.map.beta().to_decimal()),
        format!("preset={}", ex.map.preset()),
        format!("certificate=pass levels={}", ex.cf.len()),
    ])
}

pub fn partition(cfg: &Config, out: &Path) -> Result<Vec<String>, CliError> {
    let n: usize = cfg.parsed("n", cfg.n_max()?)?;
    let mut cfg = cfg.clone();
    if n > cfg.n_max()? {
        cfg.set("n_max", &n.to_string())?;
    }
    let ex = Experiment::tuned(&cfg)?;
    let part = DynamicalPartition::build(&ex.map, &ex.cf, n, &ex.policy)?;
    let rows: Vec<Vec<String>> = part
        .intervals
        .iter()
        .map(|iv| {
            vec![
                iv.index.to_string(),
                iv.anchor.frac.to_decimal(),
                iv.family.to_string(),
                iv.index.to_string(),
                iv.length(part.bits).to_decimal(),
            ]
        })
        .collect();
    let path = write_csv(out, &format!("partition_n{n}.csv"), &PARTITION_HEADER, &rows)?;
    let report = part.validate();
    let lines = vec![format!("wrote {}", path.display()), report.describe()];
    if !report.passed() {
        return Err(CliError::Assertion(lines.join("\n")));
    }
    Ok(lines)
}

fn opt_cell(v: Option<&Real>) -> String {
    v.map(Real::to_decimal).unwrap_or_default()
}

fn norm_cells(r: Option<&NormReport>) -> [String; 3] {
    match r {
        None => Default::default(),
        Some(r) => [r.c0.to_decimal(), r.c1.to_decimal(), opt_cell(r.c2.as_ref())],
    }
}

pub fn renorm_row(row: &LevelRow, tilde: bool) -> Vec<String> {
    let k = &row.coeffs;
    let (f, g) = if tilde { (&row.f_tilde, &row.g_hat) } else { (&row.f, &row.g) };
    let mut cells = vec![
        row.n.to_string(),
        row.q_n.to_string(),
        k.a.to_decimal(),
        k.b.to_decimal(),
        k.c.to_decimal(),
        k.m.to_decimal(),
        k.m_tilde.to_decimal(),
        k.m_hat.to_decimal(),
        row.d_n.to_decimal(),
    ];
    cells.extend(norm_cells(f.as_ref()));
    cells.extend(norm_cells(g.as_ref()));
    cells.push(k.residual().to_decimal());
    cells.push(k.residual_over_a().to_decimal());
    cells
}

pub fn renorm_table(cfg: &Config, out: &Path) -> Result<Vec<String>, CliError> {
    let ex = Experiment::tuned(cfg)?;
    let mut opts = cfg.level_options()?;
    opts.upsilon_points = 0;
    let tilde = match cfg.get("approximant").unwrap_or("plain") {
        "plain" => false,
        "tilde" => true,
        other => return Err(CliError::Usage(format!("approximant must be plain or tilde, got {other:?}"))),
    };
    let n_min: usize = cfg.parsed("n_min", 1)?;
    let mut rows = Vec::new();
    let mut lines = vec![format!("preset={}", ex.map.preset())];
    for n in n_min..=ex.n_max {
        let row = level(&ex.map, &ex.cf, n, &opts)?;
        for d in &row.degenerate {
            lines.push(format!("n={n}: {d}"));
        }
        rows.push(renorm_row(&row, tilde));
    }
    let path = write_csv(out, "renorm_table.csv", &RENORM_HEADER, &rows)?;
    lines.push(format!("wrote {}", path.display()));
    if cfg.parsed("plot", true)? {
        let plot = log_plot(
            "renorm_table.csv",
            &format!("distance to the fractional-linear approximants, {}", cfg.get("preset").unwrap_or("moebius:c=2")),
            "n",
            &["C1_f", "C1_g", "d_n", "r_n_over_a_n"],
        );
        let p = write_json(out, "renorm_table.vl.json", &plot)?;
        lines.push(format!("wrote {}", p.display()));
    }
    Ok(lines)
}

fn parse_window(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Usage(format!("window must read lo..hi, got {s:?}"));
    let (lo, hi) = s.split_once("..").ok_or_else(bad)?;
    Ok((lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?))
}

pub fn rate_fit(cfg: &Config) -> Result<Vec<String>, CliError> {
    let input = cfg.required("input")?;
    let column = cfg.get("column").unwrap_or("C1_f");
    let model = match cfg.get("model").unwrap_or("exponential") {
        "exponential" | "exp" => Model::Exponential,
        "polynomial" | "poly" => Model::Polynomial,
        other => return Err(CliError::Usage(format!("unknown model {other:?}"))),
    };
    let mut rd = csv::Reader::from_path(input).map_err(|e| CliError::Io(format!("{input}: {e}")))?;
    let header = rd.headers().map_err(|e| CliError::Io(e.to_string()))?.clone();
    let find = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| CliError::Usage(format!("{input} has no column {name:?}")))
    };
    let (ni, ci) = (find("n")?, find(column)?);
    let window = cfg.get("window").map(parse_window).transpose()?;
    let (mut ns, mut es) = (Vec::new(), Vec::new());
    for rec in rd.records() {
        let rec = rec.map_err(|e| CliError::Io(e.to_string()))?;
        let n: usize = rec[ni].parse().map_err(|_| CliError::Usage(format!("bad level {:?}", &rec[ni])))?;
        let lo = window.map_or(4, |w| w.0);
        if n < lo || window.is_some_and(|w| n > w.1) {
            continue;
        }
        let cell = &rec[ci];
        if cell.is_empty() {
            return Err(CliError::Assertion(format!("column {column} is empty at n = {n}")));
        }
        let e: f64 = cell.parse().map_err(|_| CliError::Usage(format!("bad value {cell:?}")))?;
        ns.push(n);
        es.push(e.abs());
    }
    match fit_rate(&ns, &es, model)? {
        FitOutcome::BelowNoiseFloor => Ok(vec![format!("column={column} below noise floor")]),
        FitOutcome::Fit(f) => {
            let rate = match model {
                Model::Exponential => format!("lambda={:.6}", f.lambda()),
                Model::Polynomial => format!("gamma={:.6}", f.gamma()),
            };
            Ok(vec![format!(
                "column={column} model={model:?} window={}..{} slope={:.6} {rate} r2={:.6}",
                f.window.0, f.window.1, f.slope, f.r_squared
            )])
        }
    }
}

fn gauge_gamma(cfg: &Config, map: &breakren::BreakMap) -> Result<f64, CliError> {
    match map.gamma() {
        Some(g) => Ok(g),
        None => cfg.parsed("gamma", 2.0),
    }
}

/// Ratio caps, about three times the largest ratio seen on the shipped
/// presets at the default window (n ≤ 10, |I| = 2^-6..2^-24).
fn caps(cfg: &Config) -> Result<Vec<(&'static str, f64)>, CliError> {
    Ok(vec![
        (lemmalab::RATIO_ID, cfg.parsed("cap_ratio", 0.15)?),
        (lemmalab::CONVEXITY_ID, cfg.parsed("cap_convexity", 0.1)?),
        (lemmalab::INTERPOLATION_ID, cfg.parsed("cap_interpolation", 0.6)?),
        (lemmalab::GAP_ID, cfg.parsed("cap_gap", 0.075)?),
        (lemmalab::SECOND_GAP_ID, cfg.parsed("cap_second_gap", 0.01)?),
        (UPSILON_ID, cfg.parsed("cap_upsilon", 1.5)?),
    ])
}

pub const UPSILON_ID: &str = "upsilon-tilde";

fn upsilon_rows(cfg: &Config, gamma: f64) -> Result<Vec<SweepRow>, CliError> {
    let ex = Experiment::tuned(cfg)?;
    let fault: f64 = cfg.parsed("fault_mtilde", 1.0)?;
    let points: usize = cfg.parsed("upsilon_points", 65)?;
    let n_min: usize = cfg.parsed("n_min", 4)?;
    let mut rows = Vec::new();
    for n in n_min..=ex.n_max {
        let part = DynamicalPartition::build(&ex.map, &ex.cf, n, &ex.policy)?;
        let mut k = coefficients(&ex.map, &part)?;
        k.m_tilde = &k.m_tilde * fault;
        let ev = upsilon(&ex.map, &part, &k, Variant::Tilde, Multiplier::Paper, &unit_grid(points, part.bits))?;
        let (mut worst, mut at) = (0.0f64, 0.0f64);
        for p in &ev.points {
            let v = p.ups.abs().to_f64();
            if v > worst {
                worst = v;
                at = p.z0.to_f64();
            }
        }
        let bound = (n as f64).powf(-gamma);
        let len = part.delta_n1().abs().to_f64();
        rows.push(SweepRow { lemma_id: UPSILON_ID, interval_length: len, probe_t: at, quantity: worst, bound, ratio: worst / bound });
    }
    Ok(rows)
}

pub fn lemma_suite(cfg: &Config, out: &Path) -> Result<Vec<String>, CliError> {
    let map = cfg.map()?;
    let gamma = gauge_gamma(cfg, &map)?;
    let default_center = match map.family() {
        Family::Zygmund { xstar, .. } => xstar.to_f64(),
        _ => 0.5,
    };
    let center: f64 = cfg.parsed("center", default_center)?;
    let k_min: u32 = cfg.parsed("k_min", 6)?;
    let k_max: u32 = cfg.parsed("k_max", 24)?;
    if k_min > k_max || k_min < 2 || k_max > 60 {
        return Err(CliError::Usage("need 2 <= k_min <= k_max <= 60".into()));
    }
    let bits = cfg.policy()?.base_bits.max(64 + 4 * k_max);
    let intervals = lemmalab::dyadic_intervals(center, k_min..=k_max, bits)?;
    let mut rows = lemmalab::sweep(&map, gamma, &intervals)?;
    rows.extend(upsilon_rows(cfg, gamma)?);
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.lemma_id.to_string(),
                format!("{:e}", r.interval_length),
                format!("{}", r.probe_t),
                format!("{:e}", r.quantity),
                format!("{:e}", r.bound),
                format!("{:e}", r.ratio),
            ]
        })
        .collect();
    let path = write_csv(out, "lemma_sweep.csv", &LEMMA_HEADER, &cells)?;
    let mut lines = vec![format!("wrote {}", path.display())];
    let caps = caps(cfg)?;
    let mut violations = Vec::new();
    for (id, worst) in lemmalab::max_ratios(&rows) {
        let cap = caps.iter().find(|(c, _)| *c == id).map_or(f64::INFINITY, |c| c.1);
        lines.push(format!("{id}: max ratio {worst:.4e} (cap {cap})"));
        if !(worst <= cap) {
            let row = rows.iter().find(|r| r.lemma_id == id && !(r.ratio <= cap)).expect("violating row");
            violations.push(format!(
                "{id} ratio {:.4e} > cap {cap} at interval_length={:e} probe_t={}",
                row.ratio, row.interval_length, row.probe_t
            ));
        }
    }
    if !violations.is_empty() {
        return Err(CliError::Assertion(format!("{}\n{}", lines.join("\n"), violations.join("\n"))));
    }
    Ok(lines)
}

pub fn zygmund_check(cfg: &Config, out: &Path) -> Result<Vec<String>, CliError> {
    let map = cfg.map()?;
    let gamma = gauge_gamma(cfg, &map)?;
    let lo: u32 = cfg.parsed("tau_min", 4)?;
    let hi: u32 = cfg.parsed("tau_max", 40)?;
    let bits = cfg.policy()?.base_bits;
    let xis = zygmund::standard_xi_grid(&map);
    let mut rows = Vec::new();
    let mut overall = 0.0f64;
    for tau in zygmund::dyadic_taus(lo, hi) {
        let r = zygmund::class_ratio(&map, gamma, &[tau], &xis, bits)?;
        overall = overall.max(r.sup);
        rows.push(vec![format!("{tau:e}"), format!("{:e}", r.sup), format!("{}", r.argmax_xi), r.excluded.to_string()]);
    }
    let path = write_csv(out, "zygmund_check.csv", &["tau", "sup_ratio", "argmax_xi", "excluded"], &rows)?;
    Ok(vec![format!("wrote {}", path.display()), format!("gamma={gamma} sup_ratio={overall:.6e}")])
}

pub fn oracle(cfg: &Config) -> Result<Vec<String>, CliError> {
    let map = cfg.map()?;
    if !matches!(map.family(), Family::Moebius) {
        return Err(CliError::Usage("the oracle runs on the moebius family only".into()));
    }
    let ex = Experiment::tuned(cfg)?;
    let opts = cfg.level_options()?;
    let mut lines = Vec::new();
    for n in 1..=ex.n_max {
        let headroom = ex.policy.bits(n) as i64 - (ex.policy.per_level_bits as usize * n) as i64;
        if headroom < 64 {
            return Err(breakren::Error::Precision(format!(
                "level {n}: {} bits leave {headroom} bits below the tolerance 2^(-bits+{}n); need 64",
                ex.policy.bits(n),
                ex.policy.per_level_bits
            ))
            .into());
        }
        let part = DynamicalPartition::build(&ex.map, &ex.cf, n, &ex.policy)?;
        let k = coefficients(&ex.map, &part)?;
        let ap = moebius_approximants(&k)?;
        let pair = RenormPair::new(&ex.map, &part);
        let f = distance(&pair, PairSide::F, &[&ap.f], opts.grid)?.remove(0);
        let g = distance(&pair, PairSide::G, &[&ap.g], opts.grid)?.remove(0);
        let tol = Real::from_i64(64, 2).powf(-(part.bits as f64) + (ex.policy.per_level_bits as usize * n) as f64);
        let fc2 = f.c2.clone().expect("moebius maps carry f''");
        let line = format!("n={n} bits={} |f-F|_C2={:.3e} |g-G|_C1={:.3e} tol={:.3e}", part.bits, fc2.to_f64(), g.c1.to_f64(), tol.to_f64());
        if fc2 > tol || g.c1 > tol {
            let (side, at) = if fc2 > tol { ("f", f.argmax) } else { ("g", g.argmax) };
            lines.push(line);
            return Err(CliError::Assertion(format!("{}\noracle failed at n={n} on the {side} side, argmax z={at}", lines.join("\n"))));
        }
        lines.push(line);
    }
    lines.push("oracle: pass".into());
    Ok(lines)
}
