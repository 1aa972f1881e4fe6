//! Synthetic regression instances `Y = X theta0 + W` with `X_ij ~ N(0, 1/n)`.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::noise::{Contamination, ContaminationModel};

/// How contaminated coordinates are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Each error independently contaminated with probability `eps`.
    #[default]
    Bernoulli,
    /// Exactly `round(eps n)` contaminated errors.
    ExactCount,
}

/// The regression coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Truth {
    #[default]
    Zero,
    /// i.i.d. `N(0, tau0_sq)` coordinates, so `|theta0|^2/p ~ tau0_sq`.
    Random { tau0_sq: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub n: usize,
    pub p: usize,
    pub noise: ContaminationModel,
    pub seed: u64,
    /// Independent ChaCha stream under `seed`; Monte Carlo uses one per rep.
    pub stream: u64,
    pub placement: Placement,
    pub truth: Truth,
}

impl DatasetSpec {
    pub fn new(n: usize, p: usize, noise: ContaminationModel, seed: u64) -> Self {
        Self { n, p, noise, seed, stream: 0, placement: Placement::default(), truth: Truth::default() }
    }

    pub fn stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn placement(mut self, placement: Placement) -> Self {
        self.placement = placement;
        self
    }

    pub fn truth(mut self, truth: Truth) -> Self {
        self.truth = truth;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub theta0: DVector<f64>,
    pub noise: ContaminationModel,
    pub seed: u64,
    /// Number of contaminated errors.
    pub contaminated: usize,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// `n / p`.
    pub fn m(&self) -> f64 {
        self.n() as f64 / self.p() as f64
    }

    /// Writes `y,x_1,..,x_p` with a header row. The truth is not part of
    /// the layout.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["y".to_string()];
        header.extend((1..=self.p()).map(|j| format!("x_{j}")));
        out.write_record(&header).map_err(csv_err)?;
        let mut row = Vec::with_capacity(self.p() + 1);
        for i in 0..self.n() {
            row.clear();
            row.push(self.y[i].to_string());
            row.extend(self.x.row(i).iter().map(|v| v.to_string()));
            out.write_record(&row).map_err(csv_err)?;
        }
        out.flush().map_err(|e| Error::Format(e.to_string()))
    }

    /// Reads the [`write_csv`](Self::write_csv) layout; lines starting with
    /// `#` are skipped. The truth is unknown and set to zero.
    pub fn read_csv<R: Read>(r: R, noise: ContaminationModel) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(r);
        let header = rdr.headers().map_err(csv_err)?.clone();
        if header.get(0) != Some("y") || header.len() < 2 {
            return Err(Error::Format("expected header y,x_1,...,x_p".into()));
        }
        for (j, name) in header.iter().enumerate().skip(1) {
            if name != format!("x_{j}") {
                return Err(Error::Format(format!("column {j} is `{name}`, expected x_{j}")));
            }
        }
        let p = header.len() - 1;
        let mut y = Vec::new();
        let mut x = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            if rec.len() != p + 1 {
                return Err(Error::Format(format!("row {} has {} fields, expected {}", y.len() + 1, rec.len(), p + 1)));
            }
            let mut vals = rec.iter().map(|s| {
                s.parse::<f64>().map_err(|_| Error::Format(format!("not a number: `{s}`")))
            });
            y.push(vals.next().unwrap()?);
            for v in vals {
                x.push(v?);
            }
        }
        let n = y.len();
        if n == 0 {
            return Err(Error::Format("no data rows".into()));
        }
        Ok(Self {
            x: DMatrix::from_row_slice(n, p, &x),
            y: DVector::from_vec(y),
            theta0: DVector::zeros(p),
            noise,
            seed: 0,
            contaminated: 0,
        })
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

/// Default instance: zero truth, Bernoulli placement, stream 0.
pub fn gen_dataset(n: usize, p: usize, noise: ContaminationModel, seed: u64) -> Result<Dataset> {
    gen_dataset_with(&DatasetSpec::new(n, p, noise, seed))
}

/// Draws, in order, the design (column-major), the errors and the truth
/// from one ChaCha stream, so the truth never perturbs `X` or `W`.
pub fn gen_dataset_with(spec: &DatasetSpec) -> Result<Dataset> {
    let DatasetSpec { n, p, noise, seed, stream, placement, truth } = *spec;
    if !(n > p && p >= 1) {
        return Err(invalid(format!("need n > p >= 1, got n = {n}, p = {p}")));
    }
    if !noise.is_proper() {
        return Err(invalid("contamination at infinity cannot be sampled"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);

    let scale = 1.0 / (n as f64).sqrt();
    let x = DMatrix::from_fn(n, p, |_, _| scale * rng.sample::<f64, _>(StandardNormal));

    let eps = noise.epsilon();
    let sigma = noise.sigma_base();
    let mut w: Vec<f64> = (0..n).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect();
    let hit: Vec<usize> = match placement {
        Placement::Bernoulli => (0..n).filter(|_| rng.random::<f64>() < eps).collect(),
        Placement::ExactCount => {
            let k = ((eps * n as f64).round() as usize).min(n);
            let mut idx = index::sample(&mut rng, n, k).into_vec();
            idx.sort_unstable();
            idx
        }
    };
    let contaminated = match noise.kind() {
        Contamination::None => 0,
        Contamination::SymmetricTwoPoint { mu } => {
            for &i in &hit {
                w[i] = if rng.random::<bool>() { mu } else { -mu };
            }
            hit.len()
        }
        Contamination::PointMass { mu } => {
            for &i in &hit {
                w[i] = mu;
            }
            hit.len()
        }
        Contamination::AtInfinity => unreachable!(),
    };

    let theta0 = match truth {
        Truth::Zero => DVector::zeros(p),
        Truth::Random { tau0_sq } => {
            if !(tau0_sq >= 0.0 && tau0_sq.is_finite()) {
                return Err(invalid(format!("tau0^2 must be finite and nonnegative, got {tau0_sq}")));
            }
            let s = tau0_sq.sqrt();
            DVector::from_fn(p, |_, _| s * rng.sample::<f64, _>(StandardNormal))
        }
    };
    let y = &x * &theta0 + DVector::from_vec(w);
    Ok(Dataset { x, y, theta0, noise, seed, contaminated })
}
