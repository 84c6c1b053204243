//! File formats: configuration CSV and binary frames, polygon CSV for
//! tessellations, and estimate tables.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::MCEstimate;
use crate::geometry::{Color, ColoredPoint, Configuration, Point, Tessellation};
use crate::seeding::{RNG_NAME, SEED_MIX};

/// Magic bytes of the binary configuration frame.
pub const FRAME_MAGIC: &[u8; 4] = b"VPCF";
pub const FRAME_VERSION: u16 = 1;

/// Version of the estimate table layout.
pub const RESULTS_FORMAT_VERSION: u32 = 1;

fn malformed(e: impl std::fmt::Display) -> Error {
    Error::Malformed(e.to_string())
}

#[derive(Serialize, Deserialize)]
struct PointRow {
    x: f64,
    y: f64,
    color: String,
}

fn color_name(c: Color) -> &'static str {
    match c {
        Color::Red => "red",
        Color::Blue => "blue",
    }
}

fn parse_color(s: &str) -> Result<Color> {
    match s.trim().to_ascii_lowercase().as_str() {
        "blue" | "1" => Ok(Color::Blue),
        "red" | "0" => Ok(Color::Red),
        other => Err(Error::Malformed(format!("unknown color {other:?}"))),
    }
}

/// Writes `x,y,color` rows with colors `red` / `blue`.
pub fn write_config_csv<W: Write>(config: &Configuration, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in &config.points {
        w.serialize(PointRow { x: p.location.x, y: p.location.y, color: color_name(p.color).into() })
            .map_err(malformed)?;
    }
    if config.points.is_empty() {
        w.write_record(["x", "y", "color"]).map_err(malformed)?;
    }
    w.flush().map_err(malformed)
}

/// Reads `x,y,color` rows; intensity and blue probability are not stored in
/// the CSV and must be supplied.
pub fn read_config_csv<R: Read>(input: R, intensity: f64, blue_prob: f64) -> Result<Configuration> {
    let mut r = csv::Reader::from_reader(input);
    let mut points = Vec::new();
    for row in r.deserialize::<PointRow>() {
        let row = row.map_err(malformed)?;
        let location = Point::new(row.x, row.y);
        if !location.in_unit_square() {
            return Err(Error::Malformed(format!("point ({}, {}) lies outside the unit square", row.x, row.y)));
        }
        points.push(ColoredPoint { location, color: parse_color(&row.color)? });
    }
    Ok(Configuration::from_points(points, intensity, blue_prob))
}

/// Little-endian frame: magic, `u16` version, `u64` count, `f64` intensity,
/// `f64` blue probability, then `x: f64, y: f64, color: u8` per point.
pub fn write_config_binary<W: Write>(config: &Configuration, mut out: W) -> Result<()> {
    let io = |e: std::io::Error| malformed(e);
    out.write_all(FRAME_MAGIC).map_err(io)?;
    out.write_u16::<LittleEndian>(FRAME_VERSION).map_err(io)?;
    out.write_u64::<LittleEndian>(config.len() as u64).map_err(io)?;
    out.write_f64::<LittleEndian>(config.intensity).map_err(io)?;
    out.write_f64::<LittleEndian>(config.blue_prob).map_err(io)?;
    for p in &config.points {
        out.write_f64::<LittleEndian>(p.location.x).map_err(io)?;
        out.write_f64::<LittleEndian>(p.location.y).map_err(io)?;
        out.write_u8(p.color as u8).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_config_binary<R: Read>(mut input: R) -> Result<Configuration> {
    let io = |e: std::io::Error| malformed(e);
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic).map_err(io)?;
    if &magic != FRAME_MAGIC {
        return Err(Error::Malformed("bad frame magic".into()));
    }
    let version = input.read_u16::<LittleEndian>().map_err(io)?;
    if version != FRAME_VERSION {
        return Err(Error::Malformed(format!("unsupported frame version {version}")));
    }
    let count = input.read_u64::<LittleEndian>().map_err(io)?;
    let intensity = input.read_f64::<LittleEndian>().map_err(io)?;
    let blue_prob = input.read_f64::<LittleEndian>().map_err(io)?;
    let mut points = Vec::with_capacity(count.min(1 << 24) as usize);
    for _ in 0..count {
        let x = input.read_f64::<LittleEndian>().map_err(io)?;
        let y = input.read_f64::<LittleEndian>().map_err(io)?;
        let color = match input.read_u8().map_err(io)? {
            0 => Color::Red,
            1 => Color::Blue,
            b => return Err(Error::Malformed(format!("bad color byte {b}"))),
        };
        points.push(ColoredPoint { location: Point::new(x, y), color });
    }
    let mut rest = [0u8; 1];
    if input.read(&mut rest).map_err(io)? != 0 {
        return Err(Error::Malformed("trailing bytes after frame".into()));
    }
    Ok(Configuration::from_points(points, intensity, blue_prob))
}

#[derive(Serialize)]
struct VertexRow {
    site: usize,
    vertex: usize,
    x: f64,
    y: f64,
}

/// One row per cell vertex: `site,vertex,x,y`, vertices counter-clockwise.
pub fn write_polygons_csv<W: Write>(tess: &Tessellation, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (site, cell) in tess.cells().enumerate() {
        for (vertex, v) in cell.vertices.iter().enumerate() {
            w.serialize(VertexRow { site, vertex, x: v.x, y: v.y }).map_err(malformed)?;
        }
    }
    w.flush().map_err(malformed)
}

/// One estimate with its provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub op: String,
    /// `key=value` pairs joined by `;`.
    pub params: String,
    pub mean: f64,
    /// Absent for derived quantities without a sampling error.
    pub stderr: Option<f64>,
    pub reps: usize,
    pub seed: u64,
}

impl ResultRow {
    pub fn from_estimate(op: &str, e: &MCEstimate) -> Self {
        ResultRow {
            op: op.into(),
            params: e.params.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";"),
            mean: e.mean,
            stderr: Some(e.std_error),
            reps: e.reps,
            seed: e.seed,
        }
    }
}

/// Estimates of one run, with the generator and seed that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultSet {
    pub format_version: u32,
    pub rng: String,
    pub seed_mix: String,
    pub master_seed: u64,
    pub rows: Vec<ResultRow>,
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    format_version: u32,
    rng: String,
    master_seed: u64,
    op: String,
    params: String,
    mean: f64,
    stderr: Option<f64>,
    reps: usize,
    seed: u64,
}

impl ResultSet {
    pub fn new(master_seed: u64) -> Self {
        ResultSet {
            format_version: RESULTS_FORMAT_VERSION,
            rng: RNG_NAME.into(),
            seed_mix: SEED_MIX.into(),
            master_seed,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, op: &str, e: &MCEstimate) {
        self.rows.push(ResultRow::from_estimate(op, e));
    }

    pub fn push_row(&mut self, row: ResultRow) {
        self.rows.push(row);
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("results serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(malformed)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(CsvRow {
                format_version: self.format_version,
                rng: self.rng.clone(),
                master_seed: self.master_seed,
                op: r.op.clone(),
                params: r.params.clone(),
                mean: r.mean,
                stderr: r.stderr,
                reps: r.reps,
                seed: r.seed,
            })
            .expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
    }

    pub fn from_csv(s: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(s.as_bytes());
        let mut set: Option<ResultSet> = None;
        for row in r.deserialize::<CsvRow>() {
            let row = row.map_err(malformed)?;
            let set = set.get_or_insert_with(|| ResultSet {
                format_version: row.format_version,
                rng: row.rng.clone(),
                seed_mix: SEED_MIX.into(),
                master_seed: row.master_seed,
                rows: Vec::new(),
            });
            if row.format_version != set.format_version || row.master_seed != set.master_seed {
                return Err(Error::Malformed("rows disagree on format version or master seed".into()));
            }
            set.rows.push(ResultRow {
                op: row.op,
                params: row.params,
                mean: row.mean,
                stderr: row.stderr,
                reps: row.reps,
                seed: row.seed,
            });
        }
        set.ok_or_else(|| Error::Malformed("empty result set".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sample_configuration;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample() -> Configuration {
        sample_configuration(40.0, 0.5, &mut ChaCha8Rng::seed_from_u64(1)).unwrap()
    }

    #[test]
    fn csv_round_trip() {
        let c = sample();
        let mut buf = Vec::new();
        write_config_csv(&c, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x,y,color\n"));
        assert_eq!(read_config_csv(buf.as_slice(), 40.0, 0.5).unwrap(), c);
        assert!(read_config_csv("x,y,color\n0.5,2.0,red\n".as_bytes(), 1.0, 0.5).is_err());
        assert!(read_config_csv("x,y,color\n0.5,0.5,green\n".as_bytes(), 1.0, 0.5).is_err());
    }

    #[test]
    fn binary_round_trip_and_layout() {
        let c = sample();
        let mut buf = Vec::new();
        write_config_binary(&c, &mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 2 + 8 + 8 + 8 + 17 * c.len());
        assert_eq!(&buf[..4], b"VPCF");
        assert_eq!(u16::from_le_bytes([buf[4], buf[5]]), 1);
        assert_eq!(read_config_binary(buf.as_slice()).unwrap(), c);
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_config_binary(bad.as_slice()).is_err());
        assert!(read_config_binary(&buf[..buf.len() - 1]).is_err());
        let mut extra = buf;
        extra.push(0);
        assert!(read_config_binary(extra.as_slice()).is_err());
    }

    #[test]
    fn polygons_cover_every_cell() {
        let c = sample();
        let t = Tessellation::build(&c).unwrap();
        let mut buf = Vec::new();
        write_polygons_csv(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let total: usize = t.cells().map(|cell| cell.vertices.len()).sum();
        assert_eq!(text.lines().count(), total + 1);
        assert!(text.starts_with("site,vertex,x,y\n"));
    }

    #[test]
    fn results_round_trip() {
        let e = MCEstimate::from_samples(&[0.0, 1.0, 1.0], 5, vec![("n".into(), "10".into())]).unwrap();
        let mut set = ResultSet::new(5);
        set.push("crossing-prob", &e);
        set.push_row(ResultRow { op: "window".into(), params: "p_lo=0.4".into(), mean: 0.2, stderr: None, reps: 3, seed: 5 });
        assert_eq!(ResultSet::from_json(&set.to_json()).unwrap(), set);
        let csv = set.to_csv();
        assert!(csv.starts_with("format_version,rng,master_seed,op,params,mean,stderr,reps,seed\n"));
        assert_eq!(ResultSet::from_csv(&csv).unwrap(), set);
        assert!(ResultSet::from_csv("").is_err());
    }
}
