//! Trajectory data: SARCOS ingestion, synthetic sinusoidal excitation,
//! subsampling, contiguous splitting, numerical differentiation and a
//! versioned CSV format.

use std::f64::consts::PI;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::Sample;
use crate::kinchain::KinematicChain;

pub const TRAJECTORY_FORMAT: &str = "cascade-gp-trajectory/1";
pub const SARCOS_RATE: f64 = 50.0;
pub const SARCOS_DOF: usize = 7;

/// Time series of joint states and torques, one row per time step.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTrajectory {
    pub t: Vec<f64>,
    /// `T x N` blocks.
    pub q: DMatrix<f64>,
    pub qd: DMatrix<f64>,
    pub qdd: DMatrix<f64>,
    pub tau: DMatrix<f64>,
    /// Commanded accelerations, when the source records them.
    pub qdd_desired: Option<DMatrix<f64>>,
    pub rate: f64,
    pub meta: String,
}

impl RawTrajectory {
    pub fn validate(&self) -> Result<()> {
        let (rows, n) = (self.t.len(), self.q.ncols());
        for (what, m) in [("qd", &self.qd), ("qdd", &self.qdd), ("tau", &self.tau)] {
            if m.shape() != (rows, n) {
                return Err(Error::InvalidArgument(format!(
                    "column block {what} is {}x{}, expected {rows}x{n}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        if self.q.nrows() != rows {
            return Err(Error::dim("position rows", rows, self.q.nrows()));
        }
        if let Some(d) = &self.qdd_desired {
            if d.shape() != (rows, n) {
                return Err(Error::InvalidArgument("qdd_desired block has the wrong shape".into()));
            }
        }
        if !(self.rate > 0.0) || !self.rate.is_finite() {
            return Err(Error::InvalidArgument(format!("sample rate must be positive, got {}", self.rate)));
        }
        if let Some(i) = self.t.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument(format!("timestamps not strictly increasing at row {}", i + 1)));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn dof(&self) -> usize {
        self.q.ncols()
    }

    pub fn duration(&self) -> f64 {
        self.len() as f64 / self.rate
    }

    /// Rows at `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            t: indices.iter().map(|&i| self.t[i]).collect(),
            q: self.q.select_rows(indices),
            qd: self.qd.select_rows(indices),
            qdd: self.qdd.select_rows(indices),
            tau: self.tau.select_rows(indices),
            qdd_desired: self.qdd_desired.as_ref().map(|m| m.select_rows(indices)),
            rate: self.rate,
            meta: self.meta.clone(),
        }
    }

    pub fn rows(&self, range: std::ops::Range<usize>) -> Self {
        let idx: Vec<usize> = range.collect();
        self.select(&idx)
    }

    /// Swaps in the commanded accelerations, if recorded.
    pub fn with_desired_accelerations(mut self) -> Result<Self> {
        let d = self
            .qdd_desired
            .take()
            .ok_or_else(|| Error::MissingColumn("qdd_desired".into()))?;
        self.qdd = d;
        Ok(self)
    }

    /// Replaces velocities and accelerations by numerical derivatives of the
    /// positions.
    pub fn with_numerical_derivatives(mut self, smoothing_window: usize) -> Result<Self> {
        for j in 0..self.dof() {
            let col: Vec<f64> = self.q.column(j).iter().copied().collect();
            let (v, a) = differentiate(&col, self.rate, smoothing_window)?;
            self.qd.set_column(j, &DVector::from_vec(v));
            self.qdd.set_column(j, &DVector::from_vec(a));
        }
        Ok(self)
    }

    /// Row `i` as a [`Sample`] with up to `history_len` positions per joint,
    /// newest first. Early rows get whatever shorter history exists.
    pub fn sample(&self, i: usize, history_len: usize) -> Sample {
        let row = |m: &DMatrix<f64>| DVector::from_iterator(m.ncols(), m.row(i).iter().copied());
        let depth = history_len.min(i + 1);
        let q_history = if depth > 0 {
            (0..self.dof())
                .map(|j| (0..depth).map(|b| self.q[(i - b, j)]).collect())
                .collect()
        } else {
            Vec::new()
        };
        Sample {
            t: self.t[i],
            q: row(&self.q),
            qd: row(&self.qd),
            qdd: row(&self.qdd),
            tau: row(&self.tau),
            q_history,
        }
    }

    pub fn samples(&self, history_len: usize) -> Vec<Sample> {
        (0..self.len()).map(|i| self.sample(i, history_len)).collect()
    }

    /// Content hash over shape, rate and every value.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.len() as u64).to_le_bytes());
        h.update((self.dof() as u64).to_le_bytes());
        h.update(self.rate.to_le_bytes());
        let mut feed = |v: &[f64]| v.iter().for_each(|x| h.update(x.to_le_bytes()));
        feed(&self.t);
        for m in [&self.q, &self.qd, &self.qdd, &self.tau] {
            feed(m.as_slice());
        }
        if let Some(d) = &self.qdd_desired {
            feed(d.as_slice());
        }
        hex::encode(h.finalize())
    }

    pub fn column_names(&self) -> Vec<String> {
        let n = self.dof();
        let mut names = vec!["t".to_string()];
        for prefix in ["q", "qd", "qdd", "tau"] {
            names.extend((1..=n).map(|j| format!("{prefix}_{j}")));
        }
        if self.qdd_desired.is_some() {
            names.extend((1..=n).map(|j| format!("qdd_des_{j}")));
        }
        names
    }
}

fn parse_error(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Builds a trajectory from 28-column SARCOS rows (7 positions, velocities,
/// accelerations, torques).
fn sarcos_from_rows(rows: Vec<Vec<f64>>, meta: String) -> Result<RawTrajectory> {
    let t = rows.len();
    let block = |b: usize| DMatrix::from_fn(t, SARCOS_DOF, |i, j| rows[i][b * SARCOS_DOF + j]);
    let traj = RawTrajectory {
        t: (0..t).map(|i| i as f64 / SARCOS_RATE).collect(),
        q: block(0),
        qd: block(1),
        qdd: block(2),
        tau: block(3),
        qdd_desired: None,
        rate: SARCOS_RATE,
        meta,
    };
    sarcos_plausibility(&traj);
    Ok(traj)
}

fn sarcos_plausibility(traj: &RawTrajectory) {
    if traj.len() < 2 {
        return;
    }
    if traj.q.iter().any(|v| v.abs() > 2.0 * PI) {
        log::warn!("SARCOS positions exceed 2 pi; the column layout may be wrong");
    }
    let var = |j: usize| {
        let c = traj.tau.column(j);
        let m = c.mean();
        c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / c.len() as f64
    };
    let proximal = (0..3).map(var).sum::<f64>();
    let distal = (4..7).map(var).sum::<f64>();
    if proximal < distal {
        log::warn!("SARCOS torque variance is larger on distal joints; the column layout may be wrong");
    }
}

/// Loads SARCOS inverse-dynamics data from delimiter-separated text or a
/// MATLAB v5 file. Timestamps are synthesized at 50 Hz.
pub fn load_sarcos(path: impl AsRef<Path>) -> Result<RawTrajectory> {
    let path = path.as_ref();
    let meta = format!("sarcos:{}", path.display());
    let is_mat = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("mat"));
    let cols = 4 * SARCOS_DOF;
    let rows = if is_mat {
        read_mat_table(path, cols)?
    } else {
        let reader = BufReader::new(fs::File::open(path)?);
        let mut rows = Vec::new();
        for (ln, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cells: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|c| !c.is_empty()).collect();
            if cells.len() != cols {
                return Err(parse_error(path, ln + 1, format!("expected {cols} columns, found {}", cells.len())));
            }
            let row = cells
                .iter()
                .enumerate()
                .map(|(c, s)| {
                    s.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| parse_error(path, ln + 1, format!("column {}: `{s}` is not a finite number", c + 1)))
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        rows
    };
    if rows.is_empty() {
        return Err(parse_error(path, 1, "no data rows"));
    }
    sarcos_from_rows(rows, meta)
}

/// First two-dimensional real array with `cols` columns, as rows.
fn read_mat_table(path: &Path, cols: usize) -> Result<Vec<Vec<f64>>> {
    let mat = matfile::MatFile::parse(fs::File::open(path)?).map_err(|e| parse_error(path, 0, format!("MAT file: {e}")))?;
    let array = mat
        .arrays()
        .iter()
        .find(|a| a.size().len() == 2 && a.size()[1] == cols)
        .ok_or_else(|| parse_error(path, 0, format!("no variable with {cols} columns")))?;
    let values: Vec<f64> = match array.data() {
        matfile::NumericData::Double { real, .. } => real.clone(),
        matfile::NumericData::Single { real, .. } => real.iter().map(|&v| v as f64).collect(),
        _ => return Err(parse_error(path, 0, format!("variable `{}` is not floating point", array.name()))),
    };
    let n = array.size()[0];
    let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..cols).map(|c| values[c * n + i]).collect()).collect();
    if let Some(i) = rows.iter().position(|r| r.iter().any(|v| !v.is_finite())) {
        return Err(parse_error(path, i + 1, "non-finite value"));
    }
    Ok(rows)
}

/// Keeps every `floor(rate / target_hz)`-th row starting from the first.
pub fn subsample(traj: &RawTrajectory, target_hz: f64) -> Result<RawTrajectory> {
    if !(target_hz > 0.0) || target_hz > traj.rate * (1.0 + 1e-9) {
        return Err(Error::InvalidArgument(format!(
            "cannot resample {} Hz data to {target_hz} Hz",
            traj.rate
        )));
    }
    let step = ((traj.rate / target_hz) * (1.0 + 1e-9)).floor().max(1.0) as usize;
    let idx: Vec<usize> = (0..traj.len()).step_by(step).collect();
    let mut out = traj.select(&idx);
    out.rate = traj.rate / step as f64;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub n_subsets: usize,
    /// Fraction of rows held out from the tail. Zero when the test set comes
    /// from a separate file.
    pub test_fraction: f64,
}

/// Contiguous training chunks plus a tail test set (empty when
/// `test_fraction` is zero). Chunk lengths differ by at most one row and
/// cover the training region exactly.
pub fn split(traj: &RawTrajectory, spec: &SplitSpec) -> Result<(Vec<RawTrajectory>, RawTrajectory)> {
    if spec.n_subsets < 1 || !(0.0..1.0).contains(&spec.test_fraction) {
        return Err(Error::InvalidArgument(format!(
            "split needs n_subsets >= 1 and 0 <= test_fraction < 1, got {spec:?}"
        )));
    }
    let total = traj.len();
    let n_test = (total as f64 * spec.test_fraction).round() as usize;
    let n_train = total - n_test;
    if n_train < spec.n_subsets || (spec.test_fraction > 0.0 && n_test == 0) {
        return Err(Error::DegenerateDataset {
            got: total,
            need: spec.n_subsets + usize::from(spec.test_fraction > 0.0),
        });
    }
    let base = n_train / spec.n_subsets;
    let extra = n_train % spec.n_subsets;
    let mut start = 0;
    let chunks = (0..spec.n_subsets)
        .map(|k| {
            let len = base + usize::from(k < extra);
            let c = traj.rows(start..start + len);
            start += len;
            c
        })
        .collect();
    Ok((chunks, traj.rows(n_train..total)))
}

/// Random sum-of-sines joint velocity excitation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SineExcitationSpec {
    /// Sinusoids per joint.
    pub n_sinusoids: usize,
    /// Velocity amplitude range (rad/s).
    pub amplitude: [f64; 2],
    /// Frequency range (Hz).
    pub frequency: [f64; 2],
    pub duration: f64,
    pub rate: f64,
    pub seed: u64,
    /// Starting posture; zeros when absent.
    pub q0: Option<Vec<f64>>,
    /// Gaussian torque noise as a fraction of each joint's clean torque std.
    pub torque_noise: f64,
    /// Viscous friction per joint (N m s/rad); one value applies to all.
    pub viscous_friction: Vec<f64>,
}

impl Default for SineExcitationSpec {
    fn default() -> Self {
        Self {
            n_sinusoids: 3,
            amplitude: [0.1, 0.6],
            frequency: [0.05, 0.4],
            duration: 60.0,
            rate: 10.0,
            seed: 0,
            q0: None,
            torque_noise: 0.0,
            viscous_friction: Vec::new(),
        }
    }
}

impl SineExcitationSpec {
    pub fn validate(&self, dof: usize) -> Result<()> {
        let range_ok = |r: [f64; 2]| r[0] >= 0.0 && r[1] >= r[0] && r[1].is_finite();
        if !range_ok(self.amplitude) || !range_ok(self.frequency) || !(self.frequency[0] > 0.0) {
            return Err(Error::InvalidArgument(
                "sine excitation ranges must be ordered and non-negative, with positive frequencies".into(),
            ));
        }
        if !(self.duration > 0.0) || !(self.rate > 0.0) {
            return Err(Error::InvalidArgument("duration and rate must be positive".into()));
        }
        if !(self.torque_noise >= 0.0) {
            return Err(Error::InvalidArgument("torque noise must be non-negative".into()));
        }
        if let Some(q0) = &self.q0 {
            if q0.len() != dof {
                return Err(Error::dim("q0", dof, q0.len()));
            }
        }
        if !matches!(self.viscous_friction.len(), 0 | 1) && self.viscous_friction.len() != dof {
            return Err(Error::dim("viscous_friction", dof, self.viscous_friction.len()));
        }
        Ok(())
    }

    fn friction(&self, j: usize) -> f64 {
        match self.viscous_friction.len() {
            0 => 0.0,
            1 => self.viscous_friction[0],
            _ => self.viscous_friction[j],
        }
    }
}

/// Joint velocities that are sums of sines, with positions and
/// accelerations in closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SineMotion {
    pub q0: Vec<f64>,
    /// Per joint: `(amplitude, angular frequency, phase)` of each sinusoid.
    pub waves: Vec<Vec<(f64, f64, f64)>>,
}

impl SineMotion {
    /// The motion [`generate_sine_dataset`] uses for `spec`.
    pub fn random(dof: usize, spec: &SineExcitationSpec) -> Result<Self> {
        spec.validate(dof)?;
        Ok(Self::draw(dof, spec, &mut ChaCha8Rng::seed_from_u64(spec.seed)))
    }

    fn draw(dof: usize, spec: &SineExcitationSpec, rng: &mut ChaCha8Rng) -> Self {
        let mut draw = |r: [f64; 2]| if r[1] > r[0] { rng.random_range(r[0]..r[1]) } else { r[0] };
        let waves = (0..dof)
            .map(|_| {
                (0..spec.n_sinusoids)
                    .map(|_| {
                        let a = draw(spec.amplitude);
                        let w = 2.0 * PI * draw(spec.frequency);
                        let phi = draw([0.0, 2.0 * PI]);
                        (a, w, phi)
                    })
                    .collect()
            })
            .collect();
        Self {
            q0: spec.q0.clone().unwrap_or_else(|| vec![0.0; dof]),
            waves,
        }
    }

    pub fn dof(&self) -> usize {
        self.q0.len()
    }

    /// `(q, qd, qdd)` at time `t`; the motion starts from `q0` at `t = 0`.
    pub fn at(&self, t: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.dof();
        let (mut q, mut qd, mut qdd) = (self.q0.clone(), vec![0.0; n], vec![0.0; n]);
        for j in 0..n {
            for &(amp, w, phi) in &self.waves[j] {
                q[j] += amp / w * (phi.cos() - (w * t + phi).cos());
                qd[j] += amp * (w * t + phi).sin();
                qdd[j] += amp * w * (w * t + phi).cos();
            }
        }
        (q, qd, qdd)
    }
}

/// Sinusoidal excitation in closed form: velocities are the sum of sines,
/// positions its exact integral, accelerations its exact derivative.
/// Torques come from the chain's inverse dynamics plus optional viscous
/// friction and noise.
pub fn generate_sine_dataset(chain: &KinematicChain, spec: &SineExcitationSpec) -> Result<RawTrajectory> {
    let n = chain.dof();
    spec.validate(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let motion = SineMotion::draw(n, spec, &mut rng);
    let rows = (spec.duration * spec.rate).round() as usize;
    let times: Vec<f64> = (0..rows).map(|i| i as f64 / spec.rate).collect();

    let mut q = DMatrix::zeros(rows, n);
    let mut qd = DMatrix::zeros(rows, n);
    let mut qdd = DMatrix::zeros(rows, n);
    for (i, &t) in times.iter().enumerate() {
        let (p, v, a) = motion.at(t);
        for j in 0..n {
            q[(i, j)] = p[j];
            qd[(i, j)] = v[j];
            qdd[(i, j)] = a[j];
        }
    }

    let gravity = chain.gravity();
    let mut tau = DMatrix::zeros(rows, n);
    for i in 0..rows {
        let row = |m: &DMatrix<f64>| m.row(i).iter().copied().collect::<Vec<_>>();
        let t = chain.rnea_unchecked(&row(&q), &row(&qd), &row(&qdd), &gravity);
        for j in 0..n {
            tau[(i, j)] = t[j] + spec.friction(j) * qd[(i, j)];
        }
    }
    if spec.torque_noise > 0.0 {
        let sd: Vec<f64> = (0..n)
            .map(|j| {
                let c = tau.column(j);
                let m = c.mean();
                (c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / rows.max(1) as f64).sqrt()
            })
            .collect();
        for i in 0..rows {
            for j in 0..n {
                let e: f64 = rng.sample(StandardNormal);
                tau[(i, j)] += spec.torque_noise * sd[j] * e;
            }
        }
    }

    let traj = RawTrajectory {
        t: times,
        q,
        qd,
        qdd,
        tau,
        qdd_desired: None,
        rate: spec.rate,
        meta: format!("sine:seed={}", spec.seed),
    };
    traj.validate()?;
    Ok(traj)
}

/// Central-difference velocity and acceleration of a uniformly sampled
/// signal, after an optional centered moving average of `smoothing_window`
/// samples (0 or 1 disables it). Endpoints use second-order one-sided
/// stencils.
pub fn differentiate(positions: &[f64], rate: f64, smoothing_window: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = positions.len();
    if n < 3 {
        return Err(Error::DegenerateDataset { got: n, need: 3 });
    }
    if !(rate > 0.0) {
        return Err(Error::InvalidArgument("rate must be positive".into()));
    }
    let q: Vec<f64> = if smoothing_window > 1 {
        let half = smoothing_window / 2;
        (0..n)
            .map(|i| {
                let r = half.min(i).min(n - 1 - i);
                positions[i - r..=i + r].iter().sum::<f64>() / (2 * r + 1) as f64
            })
            .collect()
    } else {
        positions.to_vec()
    };
    let h = 1.0 / rate;
    let mut v = vec![0.0; n];
    let mut a = vec![0.0; n];
    for i in 1..n - 1 {
        v[i] = (q[i + 1] - q[i - 1]) / (2.0 * h);
        a[i] = (q[i + 1] - 2.0 * q[i] + q[i - 1]) / (h * h);
    }
    v[0] = (-3.0 * q[0] + 4.0 * q[1] - q[2]) / (2.0 * h);
    v[n - 1] = (3.0 * q[n - 1] - 4.0 * q[n - 2] + q[n - 3]) / (2.0 * h);
    if n >= 4 {
        a[0] = (2.0 * q[0] - 5.0 * q[1] + 4.0 * q[2] - q[3]) / (h * h);
        a[n - 1] = (2.0 * q[n - 1] - 5.0 * q[n - 2] + 4.0 * q[n - 3] - q[n - 4]) / (h * h);
    } else {
        a[0] = a[1];
        a[2] = a[1];
    }
    Ok((v, a))
}

/// Column names, rate and provenance stored next to a trajectory CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySchema {
    pub format: String,
    pub dof: usize,
    pub rate: f64,
    pub columns: Vec<String>,
    pub meta: String,
    pub fingerprint: String,
}

pub fn schema_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".schema.json");
    PathBuf::from(s)
}

/// Writes `# cascade-gp-trajectory/1`, a header row and the data, plus the
/// schema sidecar.
pub fn save_trajectory(traj: &RawTrajectory, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    traj.validate()?;
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(out, "# {TRAJECTORY_FORMAT}")?;
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(traj.column_names()).map_err(csv_error)?;
        let mut record = Vec::new();
        for i in 0..traj.len() {
            record.clear();
            record.push(traj.t[i].to_string());
            let blocks = [&traj.q, &traj.qd, &traj.qdd, &traj.tau];
            for m in blocks.into_iter().chain(traj.qdd_desired.as_ref()) {
                record.extend(m.row(i).iter().map(f64::to_string));
            }
            w.write_record(&record).map_err(csv_error)?;
        }
        w.flush()?;
    }
    out.flush()?;
    let schema = TrajectorySchema {
        format: TRAJECTORY_FORMAT.into(),
        dof: traj.dof(),
        rate: traj.rate,
        columns: traj.column_names(),
        meta: traj.meta.clone(),
        fingerprint: traj.fingerprint(),
    };
    fs::write(schema_path(path), serde_json::to_string_pretty(&schema)?)?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidArgument(format!("CSV: {other:?}")),
    }
}

/// Reads a trajectory CSV. Columns are located by name; the rate comes from
/// the schema sidecar when present and from the timestamps otherwise.
pub fn load_trajectory(path: impl AsRef<Path>) -> Result<RawTrajectory> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let (first, body) = text.split_once('\n').unwrap_or((&text, ""));
    if first.trim() != format!("# {TRAJECTORY_FORMAT}") {
        return Err(parse_error(path, 1, format!("expected header `# {TRAJECTORY_FORMAT}`")));
    }
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(body.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| parse_error(path, 2, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let t_col = find("t").ok_or_else(|| Error::MissingColumn("t".into()))?;
    let n = (1..).take_while(|j| find(&format!("q_{j}")).is_some()).count();
    if n == 0 {
        return Err(Error::MissingColumn("q_1".into()));
    }
    let block_cols = |prefix: &str| -> Result<Vec<usize>> {
        (1..=n)
            .map(|j| {
                let name = format!("{prefix}_{j}");
                find(&name).ok_or(Error::MissingColumn(name))
            })
            .collect()
    };
    let cols: Vec<Vec<usize>> = ["q", "qd", "qdd", "tau"].iter().map(|p| block_cols(p)).collect::<Result<_>>()?;
    let desired = block_cols("qdd_des").ok();

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let line = k + 3;
        let record = record.map_err(|e| parse_error(path, line, e.to_string()))?;
        let row = record
            .iter()
            .enumerate()
            .map(|(c, s)| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_error(path, line, format!("column {} (`{}`): `{s}` is not a finite number", c + 1, headers[c])))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let t_len = rows.len();
    let block = |c: &[usize]| DMatrix::from_fn(t_len, n, |i, j| rows[i][c[j]]);
    let t: Vec<f64> = rows.iter().map(|r| r[t_col]).collect();

    let sidecar = schema_path(path);
    let (rate, meta) = if sidecar.exists() {
        let schema: TrajectorySchema = serde_json::from_str(&fs::read_to_string(&sidecar)?)?;
        (schema.rate, schema.meta)
    } else if t.len() >= 2 {
        let mut gaps: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
        gaps.sort_by(f64::total_cmp);
        (1.0 / gaps[gaps.len() / 2], format!("csv:{}", path.display()))
    } else {
        return Err(parse_error(path, 3, "cannot infer the sample rate from fewer than two rows"));
    };
    let traj = RawTrajectory {
        t,
        q: block(&cols[0]),
        qd: block(&cols[1]),
        qdd: block(&cols[2]),
        tau: block(&cols[3]),
        qdd_desired: desired.as_deref().map(block),
        rate,
        meta,
    };
    traj.validate()?;
    Ok(traj)
}
