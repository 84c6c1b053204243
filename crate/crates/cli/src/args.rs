use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vperc_core::estimators::NoiseKind;
use vperc_core::geometry::{Point, Rect};

#[derive(Parser, Debug)]
#[command(name = "vperc", version, about = "Monte Carlo and exact experiments for planar Voronoi percolation")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Master seed; replica r uses a seed mixed from (seed, r).
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, env = "VPERC_THREADS")]
    pub threads: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Crossing rectangle a,b,c,d.
    #[arg(long, global = true, value_parser = parse_rect, default_value = "0,1,0,1")]
    pub rect: Rect,
    /// Flat key=value file; flags given on the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    /// Only for `sample`.
    Binary,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Presence,
    Color,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    Curve,
    Trace,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Draw one colored configuration.
    Sample {
        #[arg(long)]
        n: f64,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        /// Also write the cell polygons as CSV.
        #[arg(long)]
        polygons: Option<PathBuf>,
    },
    /// Blue left-right crossing probability.
    CrossingProb {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0.5")]
        p: Vec<f64>,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
    },
    /// Covariance of the crossing before and after a perturbation.
    NoiseCorr {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<f64>,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, value_delimiter = ',', default_value = "0.1")]
        eps: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "eps-noise")]
        kind: Vec<NoiseKind>,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
    },
    /// Variance of the crossing probability given the dense process.
    CondVar {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "2")]
        k: Vec<f64>,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        /// Dense configurations.
        #[arg(long, alias = "outer-reps", default_value_t = 400)]
        reps: usize,
        /// Thinnings per dense configuration.
        #[arg(long, default_value_t = 16)]
        inner_reps: usize,
    },
    /// Crossing curve in p and the window where it leaves eps-level.
    Threshold {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<f64>,
        #[arg(long, default_value_t = 0.25)]
        eps_level: f64,
        /// lo:hi:step
        #[arg(long, value_parser = parse_grid, default_value = "0:1:0.005")]
        grid: Grid,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
    },
    /// Blue path from a small box to distance sqrt(mesh).
    OneArm {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<f64>,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, value_parser = parse_point, default_value = "0.5,0.5")]
        center: Point,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
    },
    /// Probability that some cell has radius above n^(-1/3).
    LargeCell {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<f64>,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
    },
    /// Maximum query frequency of the exploration algorithm.
    Revealment {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<f64>,
        #[arg(long, default_value_t = 4.0)]
        k: f64,
        /// Configurations on which the maximum is estimated.
        #[arg(long, default_value_t = 20)]
        reps: usize,
        /// Runs per configuration.
        #[arg(long, default_value_t = 50)]
        inner_reps: usize,
        #[arg(long, value_enum, default_value_t = Variant::Presence)]
        variant: Variant,
        /// Also report the fraction of maxima above this level.
        #[arg(long)]
        threshold: Option<f64>,
        /// Write one exploration trace as JSON.
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Disagreement rate of the coupled triple.
    Srs {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0.1")]
        eps: Vec<f64>,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
    },
    /// Exact inequality checks on small random instances.
    ExactSuite {
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[arg(long, default_value_t = 2)]
        min_points: usize,
        #[arg(long, default_value_t = 12)]
        max_points: usize,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, default_value_t = 16)]
        coins: usize,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.3")]
        eps: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        m_max: u32,
    },
    /// Duality and rasterization-oracle sweep.
    Validate {
        #[arg(long, value_delimiter = ',', default_value = "200")]
        n: Vec<f64>,
        #[arg(long, default_value_t = 10000)]
        reps: usize,
    },
    /// Render results or a trace as SVG.
    Plot {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = PlotKind::Curve)]
        kind: PlotKind,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid(pub Vec<f64>);

fn parse_floats(s: &str, count: usize) -> Result<Vec<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    if v.len() != count {
        return Err(format!("expected {count} comma-separated numbers, got {}", v.len()));
    }
    Ok(v)
}

pub fn parse_rect(s: &str) -> Result<Rect, String> {
    let v = parse_floats(s, 4)?;
    Rect::new(v[0], v[1], v[2], v[3]).map_err(|e| e.to_string())
}

pub fn parse_point(s: &str) -> Result<Point, String> {
    let v = parse_floats(s, 2)?;
    let p = Point::new(v[0], v[1]);
    if !p.in_unit_square() {
        return Err(format!("point {s} lies outside the unit square"));
    }
    Ok(p)
}

pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    let [lo, hi, step] = parts[..] else {
        return Err("grid must be lo:hi:step".into());
    };
    if !(0.0 <= lo && lo < hi && hi <= 1.0 && step > 0.0 && step.is_finite()) {
        return Err("grid needs 0 <= lo < hi <= 1 and step > 0".into());
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    if count > 1_000_000 {
        return Err("grid has too many points".into());
    }
    let mut v: Vec<f64> = (0..=count).map(|i| lo + i as f64 * step).collect();
    if hi - v[count] > 1e-9 * step {
        v.push(hi);
    }
    Ok(Grid(v))
}
