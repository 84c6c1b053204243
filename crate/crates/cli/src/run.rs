use std::io::Write;
use std::path::Path;

use vperc_core::estimators::{
    conditional_variance, crossing_probability, max_color_revealment_samples, exact_suite, large_cell_probability,
    max_revealment_samples, noise_correlation, one_arm_probability, srs_disagreement, threshold_window,
    validate_sweep, MCEstimate, SuiteParams,
};
use vperc_core::explorer::{run_algorithm, run_algorithm_colors};
use vperc_core::geometry::{sample_configuration, Rect, Tessellation};
use vperc_core::io::{write_config_binary, write_config_csv, write_polygons_csv, ResultRow, ResultSet};
use vperc_core::perturb::two_stage_sample;
use vperc_core::seeding::{replica_rng, splitmix64};

use crate::args::{Command, Format, Global, Variant};
use crate::plot;

/// Failure classes and their exit codes.
#[derive(Debug)]
pub enum Failure {
    Invalid(String),
    Unresolved(String),
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Unresolved(_) => 2,
            _ => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Failure::Invalid(_) => "invalid_input",
            Failure::Unresolved(_) => "unresolved",
            Failure::Io(_) => "io",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Invalid(m) | Failure::Unresolved(m) | Failure::Io(m) => m,
        }
    }

    /// One-line JSON error record.
    pub fn record(&self) -> String {
        serde_json::json!({ "error": self.kind(), "message": self.message(), "exit_code": self.exit_code() })
            .to_string()
    }
}

impl From<vperc_core::Error> for Failure {
    fn from(e: vperc_core::Error) -> Self {
        use vperc_core::Error::*;
        match e {
            OracleUnresolved { .. } | WindowUnresolved { .. } => Failure::Unresolved(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Io(format!("{}: {e}", path.display()))
}

type Out<T> = Result<T, Failure>;

/// Stream used for the single trace of `revealment`, apart from the replica streams.
const TRACE_STREAM: u64 = 0x7472_6163_6500_0001;

fn emit(g: &Global, bytes: &[u8]) -> Out<()> {
    match &g.out {
        Some(path) => std::fs::write(path, bytes).map_err(io_err(path)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes).and_then(|_| stdout.flush()).map_err(|e| Failure::Io(format!("stdout: {e}")))
        }
    }
}

fn emit_results(g: &Global, set: &ResultSet) -> Out<()> {
    match g.format {
        Format::Csv => emit(g, set.to_csv().as_bytes()),
        Format::Json => emit(g, (set.to_json() + "\n").as_bytes()),
        Format::Binary => Err(Failure::Invalid("binary output is only available for sample".into())),
    }
}

fn rate_row(op: &str, params: String, hits: usize, total: usize, seed: u64) -> ResultRow {
    let q = if total == 0 { 0.0 } else { hits as f64 / total as f64 };
    let stderr = (total > 1).then(|| (q * (1.0 - q) / (total - 1) as f64).sqrt());
    ResultRow { op: op.into(), params, mean: q, stderr, reps: total, seed }
}

fn rect_str(r: &Rect) -> String {
    format!("{},{},{},{}", r.a, r.b, r.c, r.d)
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 { s[m] } else { (s[m - 1] + s[m]) / 2.0 }
}

fn with_param(mut e: MCEstimate, key: &str, value: String) -> MCEstimate {
    e.params.push((key.into(), value));
    e
}

pub fn run(command: Command, g: &Global) -> Out<()> {
    let seed = g.seed;
    let rect = g.rect;
    let mut set = ResultSet::new(seed);
    match command {
        Command::Sample { n, p, polygons } => {
            let mut rng = replica_rng(seed, 0);
            let config = sample_configuration(n, p, &mut rng)?;
            if let Some(path) = polygons {
                let tess = Tessellation::build(&config)?;
                let file = std::fs::File::create(&path).map_err(io_err(&path))?;
                write_polygons_csv(&tess, std::io::BufWriter::new(file))?;
            }
            let mut buf = Vec::new();
            match g.format {
                Format::Csv => write_config_csv(&config, &mut buf)?,
                Format::Binary => write_config_binary(&config, &mut buf)?,
                Format::Json => {
                    buf = serde_json::to_vec_pretty(&config).map_err(|e| Failure::Io(e.to_string()))?;
                    buf.push(b'\n');
                }
            }
            return emit(g, &buf);
        }
        Command::CrossingProb { n, p, reps } => {
            for &n in &n {
                for &p in &p {
                    set.push("crossing_prob", &crossing_probability(n, p, &rect, reps, seed)?);
                }
            }
        }
        Command::NoiseCorr { n, p, eps, kind, reps } => {
            for &kind in &kind {
                for &e in &eps {
                    for &n in &n {
                        set.push("noise_corr", &noise_correlation(n, p, e, &rect, reps, kind, seed)?);
                    }
                }
            }
        }
        Command::CondVar { n, k, p, reps, inner_reps } => {
            if let Some(bad) = k.iter().find(|&&k| !(k.is_finite() && k > 1.0)) {
                return Err(Failure::Invalid(format!("k must be a finite real > 1, got {bad}")));
            }
            for &k in &k {
                for &n in &n {
                    set.push("cond_var", &conditional_variance(n, k, p, &rect, reps, inner_reps, seed)?);
                }
            }
        }
        Command::Threshold { n, eps_level, grid, reps } => {
            for &n in &n {
                let w = threshold_window(n, eps_level, &rect, &grid.0, reps, seed)?;
                for ((_, est), fit) in w.grid.iter().zip(&w.fitted) {
                    set.push("crossing_curve", &with_param(est.clone(), "fitted", fit.to_string()));
                }
                set.push_row(ResultRow {
                    op: "threshold_window".into(),
                    params: format!(
                        "n={n};eps_level={eps_level};p_lo={};p_hi={};rect={}",
                        w.p_lo,
                        w.p_hi,
                        rect_str(&rect)
                    ),
                    mean: w.width(),
                    stderr: None,
                    reps,
                    seed,
                });
            }
        }
        Command::OneArm { n, p, center, reps } => {
            for &n in &n {
                set.push("one_arm", &one_arm_probability(n, p, center, reps, seed)?);
            }
        }
        Command::LargeCell { n, reps } => {
            for &n in &n {
                set.push("large_cell", &large_cell_probability(n, reps, seed)?);
            }
        }
        Command::Revealment { n, k, reps, inner_reps, variant, threshold, trace_out } => {
            if let Some(t) = threshold {
                if !(0.0..=1.0).contains(&t) {
                    return Err(Failure::Invalid(format!("threshold must lie in [0, 1], got {t}")));
                }
            }
            for &n in &n {
                let maxima = match variant {
                    Variant::Presence => max_revealment_samples(n, k, &rect, reps, inner_reps, seed)?,
                    Variant::Color => max_color_revealment_samples(n, &rect, reps, inner_reps, seed)?,
                };
                let mut common = vec![
                    ("n".to_string(), n.to_string()),
                    ("variant".to_string(), format!("{variant:?}").to_ascii_lowercase()),
                    ("inner_reps".to_string(), inner_reps.to_string()),
                    ("rect".to_string(), rect_str(&rect)),
                ];
                if variant == Variant::Presence {
                    common.insert(1, ("k".to_string(), k.to_string()));
                }
                let mut params = common.clone();
                params.push(("median".into(), median(&maxima).to_string()));
                set.push("max_revealment", &MCEstimate::from_samples(&maxima, seed, params)?);
                if let Some(t) = threshold {
                    let hits: Vec<f64> = maxima.iter().map(|&m| if m > t { 1.0 } else { 0.0 }).collect();
                    let mut params = common;
                    params.push(("threshold".into(), t.to_string()));
                    set.push("revealment_tail", &MCEstimate::from_samples(&hits, seed, params)?);
                }
            }
            if let Some(path) = trace_out {
                let n = n[0];
                let mut rng = replica_rng(splitmix64(seed ^ TRACE_STREAM), 0);
                let trace = match variant {
                    Variant::Presence => {
                        let ts = two_stage_sample(n, k, 0.5, &mut rng)?;
                        run_algorithm(&ts, &rect, &mut rng)?
                    }
                    Variant::Color => {
                        let config = sample_configuration(n, 0.5, &mut rng)?;
                        run_algorithm_colors(&config, &rect, &mut rng)?
                    }
                };
                std::fs::write(&path, trace.to_json() + "\n").map_err(io_err(&path))?;
            }
        }
        Command::Srs { n, eps, reps } => {
            for &e in &eps {
                for &n in &n {
                    set.push("srs", &srs_disagreement(n, e, &rect, reps, seed)?);
                }
            }
        }
        Command::ExactSuite { instances, min_points, max_points, p, coins, eps, m_max } => {
            let params = SuiteParams { instances, min_points, max_points, p, coins, eps: eps.clone(), m_max, rect, seed };
            let reports = exact_suite(&params)?;
            let base = format!(
                "p={p};points={min_points}..{max_points};coins={coins};eps={};m_max={m_max};rect={}",
                eps.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("/"),
                rect_str(&rect)
            );
            let total = reports.len();
            let count = |f: &dyn Fn(&vperc_core::estimators::InstanceReport) -> bool| {
                reports.iter().filter(|r| f(r)).count()
            };
            set.push_row(rate_row("margulis_russo", base.clone(), count(&|r| r.margulis_russo.holds), total, seed));
            set.push_row(rate_row("osss", base.clone(), count(&|r| r.osss.holds), total, seed));
            set.push_row(rate_row(
                "schramm_steif",
                base.clone(),
                count(&|r| r.schramm_steif.iter().all(|x| x.holds)),
                total,
                seed,
            ));
            set.push_row(rate_row(
                "influence_bound",
                base.clone(),
                count(&|r| r.influence_bounds.iter().all(|x| x.holds)),
                total,
                seed,
            ));
            set.push_row(rate_row("all_checks", base.clone(), count(&|r| r.all_hold()), total, seed));
            let gap = reports.iter().map(|r| (r.margulis_russo.lhs - r.margulis_russo.rhs).abs()).fold(0.0, f64::max);
            set.push_row(ResultRow {
                op: "margulis_russo_max_gap".into(),
                params: base.clone(),
                mean: gap,
                stderr: None,
                reps: total,
                seed,
            });
            if total >= 2 {
                let bks: Vec<f64> = reports.iter().map(|r| r.bks).collect();
                let delta: Vec<f64> = reports.iter().map(|r| r.delta_max).collect();
                for (op, samples) in [("bks", bks), ("delta_max", delta)] {
                    let mut row = ResultRow::from_estimate(op, &MCEstimate::from_samples(&samples, seed, Vec::new())?);
                    row.params = base.clone();
                    set.push_row(row);
                }
            }
        }
        Command::Validate { n, reps } => {
            for &n in &n {
                let r = validate_sweep(n, &rect, reps, seed)?;
                let base = format!("n={n};rect={}", rect_str(&rect));
                let disagree = reps - r.oracle_agree - r.oracle_unresolved;
                set.push_row(rate_row("generic", base.clone(), r.generic, reps, seed));
                set.push_row(rate_row("duality_xor", base.clone(), r.xor_holds, r.generic, seed));
                set.push_row(rate_row("oracle_agreement", base.clone(), r.oracle_agree, reps, seed));
                set.push_row(rate_row("oracle_refinement_resolved", base.clone(), r.resolved_by_refinement, disagree, seed));
                set.push_row(rate_row("oracle_unresolved", base, r.oracle_unresolved, reps, seed));
            }
        }
        Command::Plot { input, kind } => {
            let Some(out) = &g.out else {
                return Err(Failure::Invalid("plot needs --out".into()));
            };
            let text = std::fs::read_to_string(&input).map_err(io_err(&input))?;
            let svg = plot::render(&text, kind).map_err(Failure::Invalid)?;
            return std::fs::write(out, svg).map_err(io_err(out));
        }
    }
    emit_results(g, &set)
}

/// Runs `f` on a pool of `threads` workers (0 or absent: all cores).
pub fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Out<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Failure::Invalid(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
