//! File formats: field trajectories (CSV or binary), complex time series and
//! spectra as CSV, JSON documents and content hashes.
//!
//! Trajectory frames hold `channels x grid_points` complex samples in
//! channel-major order. The LLE writes one channel, the Maxwell-Bloch solver
//! one per signal mode. Grid sample `j` sits at `phi_j = 2 pi j / grid_points`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{CombSpectrum, Samples, TimeSeries};
use crate::error::{Error, Result};
use crate::lle::RingField;
use crate::mbe::MbeState;

pub const BINARY_MAGIC: &[u8; 8] = b"MSRTRJ01";
const CSV_BANNER: &str = "# maser-soliton trajectory v1";

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, schemars::JsonSchema,
)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryFormat {
    #[default]
    Csv,
    Binary,
}

impl TrajectoryFormat {
    pub fn extension(self) -> &'static str {
        match self {
            TrajectoryFormat::Csv => "csv",
            TrajectoryFormat::Binary => "bin",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrajectoryHeader {
    pub solver: String,
    pub channels: usize,
    pub grid_points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub t: f64,
    pub fields: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub header: TrajectoryHeader,
    pub frames: Vec<Frame>,
}

impl Trajectory {
    pub fn new(solver: impl Into<String>, channels: usize, grid_points: usize) -> Self {
        Trajectory {
            header: TrajectoryHeader {
                solver: solver.into(),
                channels,
                grid_points,
            },
            frames: Vec::new(),
        }
    }

    pub fn from_lle(snapshots: &[RingField]) -> Self {
        let n = snapshots.first().map_or(0, |s| s.len());
        let mut tr = Trajectory::new("lle", 1, n);
        tr.frames = snapshots
            .iter()
            .map(|s| Frame {
                t: s.t_bar,
                fields: s.samples.clone(),
            })
            .collect();
        tr
    }

    pub fn from_mbe(snapshots: &[MbeState]) -> Self {
        let (modes, n) = snapshots
            .first()
            .map_or((0, 0), |s| (s.mode_count(), s.grid_points));
        let mut tr = Trajectory::new("mbe", modes, n);
        tr.frames = snapshots
            .iter()
            .map(|s| Frame {
                t: s.t,
                fields: s.f.clone(),
            })
            .collect();
        tr
    }

    pub fn channel<'a>(&self, frame: &'a Frame, ch: usize) -> &'a [Complex64] {
        let n = self.header.grid_points;
        &frame.fields[ch * n..(ch + 1) * n]
    }

    /// Spatial mean of channel `ch` per frame; frames must be evenly spaced.
    pub fn mean_series(&self, ch: usize) -> Result<TimeSeries> {
        if ch >= self.header.channels {
            return Err(Error::config(format!(
                "channel {ch} out of range ({} channels)",
                self.header.channels
            )));
        }
        let n = self.header.grid_points as f64;
        let samples: Vec<Complex64> = self
            .frames
            .iter()
            .map(|f| self.channel(f, ch).iter().sum::<Complex64>() / n)
            .collect();
        let times: Vec<f64> = self.frames.iter().map(|f| f.t).collect();
        let dt = uniform_step(&times)?;
        Ok(TimeSeries::complex(samples, dt)?
            .with_start(times[0])
            .with_label(format!("{ch}")))
    }

    fn check_frame(&self, frame: &Frame) -> Result<()> {
        let want = self.header.channels * self.header.grid_points;
        if frame.fields.len() != want {
            return Err(Error::Format(format!(
                "frame at t = {} has {} samples, header says {want}",
                frame.t,
                frame.fields.len()
            )));
        }
        Ok(())
    }
}

/// Sample interval of `times`, which must be uniform to 1e-6 relative.
fn uniform_step(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::Format(
            "need at least two samples to infer the interval".into(),
        ));
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    for w in times.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-6 * dt.abs() {
            return Err(Error::Format(format!(
                "non-uniform sampling near t = {}",
                w[0]
            )));
        }
    }
    Ok(dt)
}

/// Incremental trajectory writer.
pub struct TrajectoryWriter<W: Write> {
    out: W,
    format: TrajectoryFormat,
    header: TrajectoryHeader,
    line: String,
}

impl<W: Write> TrajectoryWriter<W> {
    pub fn new(mut out: W, format: TrajectoryFormat, header: TrajectoryHeader) -> Result<Self> {
        match format {
            TrajectoryFormat::Csv => {
                writeln!(out, "{CSV_BANNER}")?;
                writeln!(out, "# solver={}", header.solver)?;
                writeln!(out, "# channels={}", header.channels)?;
                writeln!(out, "# grid_points={}", header.grid_points)?;
                writeln!(out, "# phi_j=2*pi*j/grid_points")?;
                let mut cols = String::from("t");
                for c in 0..header.channels {
                    for j in 0..header.grid_points {
                        cols.push_str(&format!(",re_{c}_{j},im_{c}_{j}"));
                    }
                }
                writeln!(out, "{cols}")?;
            }
            TrajectoryFormat::Binary => {
                out.write_all(BINARY_MAGIC)?;
                out.write_all(&(header.channels as u32).to_le_bytes())?;
                out.write_all(&(header.grid_points as u32).to_le_bytes())?;
                let name = header.solver.as_bytes();
                out.write_all(&(name.len() as u32).to_le_bytes())?;
                out.write_all(name)?;
            }
        }
        Ok(TrajectoryWriter {
            out,
            format,
            header,
            line: String::new(),
        })
    }

    pub fn write_frame(&mut self, frame: &Frame) -> Result<()> {
        let want = self.header.channels * self.header.grid_points;
        if frame.fields.len() != want {
            return Err(Error::Format(format!(
                "frame has {} samples, expected {want}",
                frame.fields.len()
            )));
        }
        match self.format {
            TrajectoryFormat::Csv => {
                use std::fmt::Write as _;
                self.line.clear();
                let _ = write!(self.line, "{}", frame.t);
                for x in &frame.fields {
                    let _ = write!(self.line, ",{},{}", x.re, x.im);
                }
                writeln!(self.out, "{}", self.line)?;
            }
            TrajectoryFormat::Binary => {
                self.out.write_all(&frame.t.to_le_bytes())?;
                for x in &frame.fields {
                    self.out.write_all(&x.re.to_le_bytes())?;
                    self.out.write_all(&x.im.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

pub fn write_trajectory(path: &Path, format: TrajectoryFormat, tr: &Trajectory) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    let mut w = TrajectoryWriter::new(file, format, tr.header.clone())?;
    for f in &tr.frames {
        tr.check_frame(f)?;
        w.write_frame(f)?;
    }
    w.finish()?;
    Ok(())
}

/// Read either trajectory format, detected from the leading bytes.
pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    parse_trajectory(&bytes)
}

pub fn parse_trajectory(bytes: &[u8]) -> Result<Trajectory> {
    if bytes.starts_with(BINARY_MAGIC) {
        parse_binary(bytes)
    } else {
        parse_csv(bytes)
    }
}

fn parse_binary(bytes: &[u8]) -> Result<Trajectory> {
    let short = || Error::Format("binary trajectory truncated".into());
    let u32_at = |o: usize| -> Result<usize> {
        let b: [u8; 4] = bytes.get(o..o + 4).ok_or_else(short)?.try_into().unwrap();
        Ok(u32::from_le_bytes(b) as usize)
    };
    let channels = u32_at(8)?;
    let grid_points = u32_at(12)?;
    let name_len = u32_at(16)?;
    let name = bytes.get(20..20 + name_len).ok_or_else(short)?;
    let solver = String::from_utf8(name.to_vec())
        .map_err(|_| Error::Format("solver name is not UTF-8".into()))?;
    let mut tr = Trajectory::new(solver, channels, grid_points);

    let body = &bytes[20 + name_len..];
    let frame_bytes = 8 * (1 + 2 * channels * grid_points);
    if body.len() % frame_bytes != 0 {
        return Err(Error::Format(format!(
            "binary body of {} bytes is not a whole number of {frame_bytes}-byte frames",
            body.len()
        )));
    }
    let f64_at =
        |chunk: &[u8], i: usize| f64::from_le_bytes(chunk[8 * i..8 * i + 8].try_into().unwrap());
    for chunk in body.chunks_exact(frame_bytes) {
        let t = f64_at(chunk, 0);
        let fields = (0..channels * grid_points)
            .map(|k| Complex64::new(f64_at(chunk, 1 + 2 * k), f64_at(chunk, 2 + 2 * k)))
            .collect();
        tr.frames.push(Frame { t, fields });
    }
    Ok(tr)
}

fn parse_csv(bytes: &[u8]) -> Result<Trajectory> {
    let mut solver = None;
    let mut channels = None;
    let mut grid_points = None;
    let mut saw_banner = false;
    for line in BufReader::new(bytes).lines() {
        let line = line?;
        let Some(meta) = line.strip_prefix('#') else {
            break;
        };
        let meta = meta.trim();
        if line == CSV_BANNER {
            saw_banner = true;
        } else if let Some((k, v)) = meta.split_once('=') {
            match k {
                "solver" => solver = Some(v.to_string()),
                "channels" => channels = v.parse().ok(),
                "grid_points" => grid_points = v.parse().ok(),
                _ => {}
            }
        }
    }
    if !saw_banner {
        return Err(Error::Format(
            "not a trajectory file (missing banner)".into(),
        ));
    }
    let (Some(solver), Some(channels), Some(grid_points)) = (solver, channels, grid_points) else {
        return Err(Error::Format(
            "trajectory header lacks solver, channels or grid_points".into(),
        ));
    };
    let mut tr = Trajectory::new(solver, channels, grid_points);
    let width = 1 + 2 * channels * grid_points;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(bytes);
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
        if rec.len() != width {
            return Err(Error::Format(format!(
                "row {row} has {} columns, expected {width}",
                rec.len()
            )));
        }
        let vals = parse_row(&rec, row)?;
        let fields = vals[1..]
            .chunks_exact(2)
            .map(|p| Complex64::new(p[0], p[1]))
            .collect();
        tr.frames.push(Frame { t: vals[0], fields });
    }
    Ok(tr)
}

fn parse_row(rec: &csv::StringRecord, row: usize) -> Result<Vec<f64>> {
    rec.iter()
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Format(format!("row {row}: cannot parse {s:?} as a number")))
        })
        .collect()
}

/// Write a series as `t,re,im` (complex) or `t,value` (real) rows.
pub fn write_series_csv<W: Write>(out: W, ts: &TimeSeries) -> Result<()> {
    let v = match ts.samples() {
        Samples::Complex(v) => return write_samples_csv(out, v, ts.dt(), ts.start()),
        Samples::Real(v) => v,
    };
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["t", "value"]).map_err(csv_err)?;
    for (i, x) in v.iter().enumerate() {
        w.serialize((ts.time(i), x)).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Write raw complex samples at `t0 + i dt` as `t,re,im` rows. Unlike
/// [`write_series_csv`] this accepts records of any length.
pub fn write_samples_csv<W: Write>(out: W, samples: &[Complex64], dt: f64, t0: f64) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["t", "re", "im"]).map_err(csv_err)?;
    for (i, x) in samples.iter().enumerate() {
        w.serialize((t0 + i as f64 * dt, x.re, x.im))
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Parse a `t,re,im` or `t,value` CSV; `#` lines are comments.
pub fn parse_series_csv<R: Read>(input: R) -> Result<TimeSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(input);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Format(e.to_string()))?
        .clone();
    let names: Vec<&str> = headers.iter().map(str::trim).collect();
    let complex = match names.as_slice() {
        ["t", "re", "im"] => true,
        ["t", "value"] => false,
        other => {
            return Err(Error::Format(format!(
                "expected columns t,re,im or t,value, got {}",
                other.join(",")
            )));
        }
    };
    let mut times = Vec::new();
    let mut re = Vec::new();
    let mut im = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
        let vals = parse_row(&rec, row)?;
        times.push(vals[0]);
        re.push(vals[1]);
        if complex {
            im.push(vals[2]);
        }
    }
    let dt = uniform_step(&times)?;
    let samples = if complex {
        Samples::Complex(
            re.into_iter()
                .zip(im)
                .map(|(a, b)| Complex64::new(a, b))
                .collect(),
        )
    } else {
        Samples::Real(re)
    };
    Ok(TimeSeries::new(samples, dt, "")?.with_start(times[0]))
}

pub fn read_series_csv(path: &Path) -> Result<TimeSeries> {
    parse_series_csv(BufReader::new(File::open(path)?))
}

pub fn write_spectrum_csv<W: Write>(out: W, spec: &CombSpectrum) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["frequency", "power", "power_db"])
        .map_err(csv_err)?;
    for ((f, p), db) in spec.frequencies.iter().zip(&spec.power).zip(&spec.power_db) {
        w.serialize((f, p, db)).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value).map_err(|e| Error::Io(e.to_string()))?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut hasher = Sha256::new();
    let mut f = File::open(path)?;
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}
