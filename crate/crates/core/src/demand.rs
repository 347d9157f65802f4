//! Travel demand: trip-record ingestion, kernel density estimation of pickup
//! and drop-off locations on the grid, and the random passenger stream.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use chrono::NaiveDateTime;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::roadnet::{GridNetwork, NodeId};
use crate::sharing::Passenger;

/// Random stream used throughout the simulator.
pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Consecutive s = d rejections tolerated before the distribution is declared degenerate.
pub const MAX_REJECTIONS: usize = 1000;

const TIME_FORMAT: &str = "%Y-%m-%d %H:%M:%S";

/// Longitude/latitude bounding box. Grid row 0 is the northern edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bbox {
    pub lon_min: f64,
    pub lon_max: f64,
    pub lat_min: f64,
    pub lat_max: f64,
}

impl Bbox {
    /// Manhattan and the inner boroughs.
    pub const NYC: Bbox = Bbox { lon_min: -74.03, lon_max: -73.75, lat_min: 40.63, lat_max: 40.85 };

    pub fn validate(&self) -> Result<()> {
        let finite = [self.lon_min, self.lon_max, self.lat_min, self.lat_max].iter().all(|v| v.is_finite());
        if !finite || self.lon_min >= self.lon_max || self.lat_min >= self.lat_max {
            return Err(Error::BadBbox(format!("{self:?}")));
        }
        Ok(())
    }

    pub fn contains(&self, lon: f64, lat: f64) -> bool {
        (self.lon_min..=self.lon_max).contains(&lon) && (self.lat_min..=self.lat_max).contains(&lat)
    }

    /// Center (lon, lat) of grid cell `n` when the box is cut into q×q cells.
    pub fn cell_center(&self, q: usize, n: NodeId) -> (f64, f64) {
        let dlon = (self.lon_max - self.lon_min) / q as f64;
        let dlat = (self.lat_max - self.lat_min) / q as f64;
        (self.lon_min + (n.col as f64 + 0.5) * dlon, self.lat_max - (n.row as f64 + 0.5) * dlat)
    }
}

/// One raw taxi trip.
#[derive(Debug, Clone, PartialEq)]
pub struct TripRecord {
    pub pickup_lon: f64,
    pub pickup_lat: f64,
    pub dropoff_lon: f64,
    pub dropoff_lat: f64,
    pub pickup_time: NaiveDateTime,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub records: Vec<TripRecord>,
    /// Rows skipped because a field failed to parse.
    pub malformed: usize,
    /// Well-formed rows with a pickup or drop-off outside the box.
    pub outside_bbox: usize,
}

const COLUMNS: [&str; 5] =
    ["tpep_pickup_datetime", "pickup_longitude", "pickup_latitude", "dropoff_longitude", "dropoff_latitude"];

/// Reads up to `limit` in-box records (in file order) from a yellow-cab CSV file.
pub fn ingest_records(path: &Path, bbox: &Bbox, limit: usize) -> Result<Ingested> {
    bbox.validate()?;
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(BufReader::new(File::open(path)?));
    let headers = reader.headers()?.clone();
    let mut cols = [0usize; 5];
    for (slot, name) in cols.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::MissingColumn { path: path.to_path_buf(), column: name.to_string() })?;
    }

    let mut out = Ingested { records: Vec::new(), malformed: 0, outside_bbox: 0 };
    for row in reader.records() {
        if out.records.len() >= limit {
            break;
        }
        let Ok(row) = row else {
            out.malformed += 1;
            continue;
        };
        let Some(rec) = parse_row(&row, &cols) else {
            out.malformed += 1;
            continue;
        };
        if bbox.contains(rec.pickup_lon, rec.pickup_lat) && bbox.contains(rec.dropoff_lon, rec.dropoff_lat) {
            out.records.push(rec);
        } else {
            out.outside_bbox += 1;
        }
    }
    if out.records.is_empty() {
        return Err(Error::NoRecords { path: path.to_path_buf(), malformed: out.malformed, outside: out.outside_bbox });
    }
    Ok(out)
}

fn parse_row(row: &csv::StringRecord, cols: &[usize; 5]) -> Option<TripRecord> {
    let num = |i: usize| -> Option<f64> {
        let v: f64 = row.get(cols[i])?.trim().parse().ok()?;
        v.is_finite().then_some(v)
    };
    let pickup_time = NaiveDateTime::parse_from_str(row.get(cols[0])?.trim(), TIME_FORMAT).ok()?;
    Some(TripRecord {
        pickup_lon: num(1)?,
        pickup_lat: num(2)?,
        dropoff_lon: num(3)?,
        dropoff_lat: num(4)?,
        pickup_time,
    })
}

/// Writes records in the yellow-cab column layout that [`ingest_records`] reads.
pub fn write_trip_records(path: &Path, records: &[TripRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(COLUMNS)?;
    for r in records {
        w.write_record([
            r.pickup_time.format(TIME_FORMAT).to_string(),
            r.pickup_lon.to_string(),
            r.pickup_lat.to_string(),
            r.dropoff_lon.to_string(),
            r.dropoff_lat.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Synthetic trip records with a few dense hotspots over a uniform background,
/// for demos and tests when no real trip file is at hand.
pub fn synthetic_records(n: usize, bbox: &Bbox, seed: u64) -> Vec<TripRecord> {
    let mut rng = rng_from_seed(seed);
    let w = bbox.lon_max - bbox.lon_min;
    let h = bbox.lat_max - bbox.lat_min;
    // (lon fraction, lat fraction, spread fraction, weight)
    let hotspots = [(0.35, 0.60, 0.08, 0.35), (0.45, 0.40, 0.10, 0.25), (0.70, 0.25, 0.06, 0.15)];
    let start = NaiveDateTime::parse_from_str("2016-01-15 08:00:00", TIME_FORMAT).expect("literal");
    let point = |rng: &mut SimRng| loop {
        let pick: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = None;
        for &(fx, fy, spread, weight) in &hotspots {
            acc += weight;
            if pick < acc {
                chosen = Some((fx, fy, spread));
                break;
            }
        }
        let (x, y) = match chosen {
            Some((fx, fy, spread)) => {
                let nx = Normal::new(fx, spread).expect("positive spread");
                let ny = Normal::new(fy, spread).expect("positive spread");
                (nx.sample(rng), ny.sample(rng))
            }
            None => (rng.random::<f64>(), rng.random::<f64>()),
        };
        if (0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y) {
            break (bbox.lon_min + x * w, bbox.lat_min + y * h);
        }
    };
    (0..n)
        .map(|i| {
            let (plon, plat) = point(&mut rng);
            let (dlon, dlat) = point(&mut rng);
            TripRecord {
                pickup_lon: plon,
                pickup_lat: plat,
                dropoff_lon: dlon,
                dropoff_lat: dlat,
                pickup_time: start + chrono::Duration::seconds(i as i64 * 7),
            }
        })
        .collect()
}

/// Pickup and drop-off probability mass over the q² grid nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdDistribution {
    q: usize,
    pickup_pmf: Vec<f64>,
    dropoff_pmf: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DistributionFile {
    q: usize,
    pickup_pmf: Vec<f64>,
    dropoff_pmf: Vec<f64>,
    checksum: String,
}

fn validate_pmf(name: &str, q: usize, pmf: &[f64]) -> Result<()> {
    if pmf.len() != q * q {
        return Err(Error::BadDistribution(format!("{name} has {} entries, expected {}", pmf.len(), q * q)));
    }
    if pmf.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::BadDistribution(format!("{name} has a negative or non-finite entry")));
    }
    let sum: f64 = pmf.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::BadDistribution(format!("{name} sums to {sum}")));
    }
    Ok(())
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let sum: f64 = v.iter().sum();
    v.iter_mut().for_each(|p| *p /= sum);
    v
}

impl OdDistribution {
    pub fn new(q: usize, pickup_pmf: Vec<f64>, dropoff_pmf: Vec<f64>) -> Result<Self> {
        validate_pmf("pickup_pmf", q, &pickup_pmf)?;
        validate_pmf("dropoff_pmf", q, &dropoff_pmf)?;
        Ok(Self { q, pickup_pmf, dropoff_pmf })
    }

    pub fn uniform(q: usize) -> Self {
        let n = q * q;
        Self { q, pickup_pmf: vec![1.0 / n as f64; n], dropoff_pmf: vec![1.0 / n as f64; n] }
    }

    /// Builds a distribution from unnormalized non-negative weights.
    pub fn from_weights(q: usize, pickup: Vec<f64>, dropoff: Vec<f64>) -> Result<Self> {
        Self::new(q, normalized(pickup), normalized(dropoff))
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn pickup_pmf(&self) -> &[f64] {
        &self.pickup_pmf
    }

    pub fn dropoff_pmf(&self) -> &[f64] {
        &self.dropoff_pmf
    }

    pub fn checksum(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.q as u64).to_le_bytes());
        for p in self.pickup_pmf.iter().chain(&self.dropoff_pmf) {
            hasher.update(p.to_le_bytes());
        }
        hex::encode(hasher.finalize())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = DistributionFile {
            q: self.q,
            pickup_pmf: self.pickup_pmf.clone(),
            dropoff_pmf: self.dropoff_pmf.clone(),
            checksum: self.checksum(),
        };
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, &file)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file: DistributionFile = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        let dist = Self::new(file.q, file.pickup_pmf, file.dropoff_pmf)?;
        let computed = dist.checksum();
        if computed != file.checksum {
            return Err(Error::ChecksumMismatch { stored: file.checksum, computed });
        }
        Ok(dist)
    }

    pub fn sampler(&self) -> Result<OdSampler> {
        let bad = |e: rand::distr::weighted::Error| Error::BadDistribution(e.to_string());
        Ok(OdSampler {
            q: self.q,
            pickup: WeightedIndex::new(&self.pickup_pmf).map_err(bad)?,
            dropoff: WeightedIndex::new(&self.dropoff_pmf).map_err(bad)?,
        })
    }
}

/// Gaussian-kernel density estimate of pickups and drop-offs, each evaluated
/// independently at the q×q cell centers and normalized to a pmf.
///
/// `bandwidth` is in degrees and applies to both axes. When absent, Scott's
/// rule `h = sigma * n^(-1/6)` is used per axis; an axis with zero spread
/// falls back to half a cell.
pub fn estimate_kde(records: &[TripRecord], q: usize, bbox: &Bbox, bandwidth: Option<f64>) -> Result<OdDistribution> {
    if q < 2 {
        return Err(Error::GridTooSmall(q));
    }
    bbox.validate()?;
    if records.is_empty() {
        return Err(Error::BadDistribution("no records to estimate from".into()));
    }
    if let Some(h) = bandwidth {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::BadBandwidth(h));
        }
    }
    let pickups: Vec<(f64, f64)> = records.iter().map(|r| (r.pickup_lon, r.pickup_lat)).collect();
    let dropoffs: Vec<(f64, f64)> = records.iter().map(|r| (r.dropoff_lon, r.dropoff_lat)).collect();
    let pickup_pmf = kde_on_grid(&pickups, q, bbox, bandwidth);
    let dropoff_pmf = kde_on_grid(&dropoffs, q, bbox, bandwidth);
    OdDistribution::new(q, pickup_pmf, dropoff_pmf)
}

fn scott(values: impl Iterator<Item = f64> + Clone, n: usize, fallback: f64) -> f64 {
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = if n > 1 { values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
    let h = var.sqrt() * (n as f64).powf(-1.0 / 6.0);
    if h > 0.0 && h.is_finite() {
        h
    } else {
        fallback
    }
}

fn kde_on_grid(points: &[(f64, f64)], q: usize, bbox: &Bbox, bandwidth: Option<f64>) -> Vec<f64> {
    let n = points.len();
    let (hx, hy) = match bandwidth {
        Some(h) => (h, h),
        None => (
            scott(points.iter().map(|p| p.0), n, 0.5 * (bbox.lon_max - bbox.lon_min) / q as f64),
            scott(points.iter().map(|p| p.1), n, 0.5 * (bbox.lat_max - bbox.lat_min) / q as f64),
        ),
    };
    // Evaluate in log space: with tiny bandwidths every kernel term underflows.
    let mut logs = vec![0.0; q * q];
    let mut exps = vec![0.0; n];
    for (idx, slot) in logs.iter_mut().enumerate() {
        let (cx, cy) = bbox.cell_center(q, NodeId::new(idx / q, idx % q));
        let mut max = f64::NEG_INFINITY;
        for (e, &(x, y)) in exps.iter_mut().zip(points) {
            let zx = (x - cx) / hx;
            let zy = (y - cy) / hy;
            *e = -0.5 * (zx * zx + zy * zy);
            max = max.max(*e);
        }
        let sum: f64 = exps.iter().map(|e| (e - max).exp()).sum();
        *slot = max + sum.ln();
    }
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    normalized(logs.iter().map(|l| (l - max).exp()).collect())
}

/// Draws (origin, destination) pairs from an [`OdDistribution`].
#[derive(Debug, Clone)]
pub struct OdSampler {
    q: usize,
    pickup: WeightedIndex<f64>,
    dropoff: WeightedIndex<f64>,
}

impl OdSampler {
    /// Origin and destination drawn independently; draws with s = d are redrawn.
    pub fn sample_passenger<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(NodeId, NodeId)> {
        for _ in 0..MAX_REJECTIONS {
            let s = self.pickup.sample(rng);
            let d = self.dropoff.sample(rng);
            if s != d {
                return Ok((NodeId::new(s / self.q, s % self.q), NodeId::new(d / self.q, d % self.q)));
            }
        }
        Err(Error::DegenerateDistribution(MAX_REJECTIONS))
    }

    pub fn sample_origin<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.pickup.sample(rng)
    }
}

/// Poisson arrivals: exponential interarrival times with rate `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrivalProcess {
    pub lambda: f64,
    pub seed: u64,
}

impl ArrivalProcess {
    pub fn new(lambda: f64, seed: u64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::BadRate(lambda));
        }
        Ok(Self { lambda, seed })
    }

    /// One strictly positive exponential draw.
    pub fn next_interarrival<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let exp = Exp::new(self.lambda).expect("rate validated at construction");
        loop {
            let e: f64 = exp.sample(rng);
            if e > 0.0 {
                return e;
            }
        }
    }
}

/// Which closed form to use for the chance that a partner shows up within a window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CdfMode {
    /// `1 - exp(-lambda u) / 2`, the difference-of-exponentials form.
    #[default]
    Paper,
    /// `1 - exp(-lambda u)`, the plain exponential CDF.
    Standard,
}

impl std::str::FromStr for CdfMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "paper" => Ok(Self::Paper),
            "standard" => Ok(Self::Standard),
            other => Err(format!("unknown cdf mode `{other}` (expected paper or standard)")),
        }
    }
}

pub fn window_arrival_prob(lambda: f64, u: f64, mode: CdfMode) -> Result<f64> {
    if u.is_nan() || u < 0.0 {
        return Err(Error::NegativeWindow(u));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::BadRate(lambda));
    }
    let tail = (-lambda * u).exp();
    Ok(match mode {
        CdfMode::Paper => 1.0 - 0.5 * tail,
        CdfMode::Standard => 1.0 - tail,
    })
}

/// Generates `n` passengers: cumulative exponential arrival times and
/// independently drawn origin/destination, all from `proc.seed`.
pub fn generate_stream(
    net: &GridNetwork,
    sampler: &OdSampler,
    proc: &ArrivalProcess,
    n: usize,
    epsilon: f64,
) -> Result<Vec<Passenger>> {
    if sampler.q != net.q() {
        return Err(Error::BadParameter(format!(
            "distribution grid q = {} does not match network q = {}",
            sampler.q,
            net.q()
        )));
    }
    let mut rng = rng_from_seed(proc.seed);
    let mut t = 0.0;
    (0..n)
        .map(|i| {
            t += proc.next_interarrival(&mut rng);
            let (s, d) = sampler.sample_passenger(&mut rng)?;
            Passenger::new(net, i as u32, s, d, epsilon, t)
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct StreamRow {
    id: u32,
    t: f64,
    s: String,
    d: String,
    epsilon: f64,
}

/// Saves a passenger stream as CSV (`id,t,s,d,epsilon`) for replay.
pub fn write_stream(path: &Path, passengers: &[Passenger]) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    for p in passengers {
        w.serialize(StreamRow { id: p.id, t: p.t, s: p.s.to_string(), d: p.d.to_string(), epsilon: p.epsilon })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_stream(path: &Path, net: &GridNetwork) -> Result<Vec<Passenger>> {
    let mut r = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let bad = |msg: String| Error::Stream { path: path.to_path_buf(), msg };
    let mut out: Vec<Passenger> = Vec::new();
    for row in r.deserialize::<StreamRow>() {
        let row = row?;
        let s: NodeId = row.s.parse().map_err(bad)?;
        let d: NodeId = row.d.parse().map_err(bad)?;
        if !net.contains(s) || !net.contains(d) {
            return Err(bad(format!("passenger {} lies outside the grid", row.id)));
        }
        if let Some(prev) = out.last() {
            if row.t < prev.t {
                return Err(bad(format!("arrival times decrease at passenger {}", row.id)));
            }
        }
        out.push(Passenger::new(net, row.id, s, d, row.epsilon, row.t)?);
    }
    Ok(out)
}
