//! Price ingestion, return statistics and the mean-variance portfolio QUBO.
//!
//! Returns are simple daily returns `p_t / p_{t-1} - 1`; `mu` and `sigma` are
//! left at daily scale (no annualization), so the risk-aversion factor is
//! interpreted against daily moments.

use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::QuboProblem;

/// Trading days in the generated history (about five years).
pub const SYNTHETIC_DAYS: usize = 1260;

const INTRA_CLUSTER_CORR: f64 = 0.6;
const INTER_CLUSTER_CORR: f64 = 0.05;

#[derive(Clone, Debug, PartialEq)]
pub struct PriceSeries {
    symbols: Vec<String>,
    dates: Vec<NaiveDate>,
    /// One row per date, one column per symbol.
    close: Vec<Vec<f64>>,
}

impl PriceSeries {
    pub fn new(symbols: Vec<String>, dates: Vec<NaiveDate>, close: Vec<Vec<f64>>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::Model("price series has no assets".into()));
        }
        if dates.len() < 2 {
            return Err(Error::Model(format!("need at least 2 dates, got {}", dates.len())));
        }
        if close.len() != dates.len() {
            return Err(Error::Dimension {
                expected: dates.len(),
                got: close.len(),
            });
        }
        for (t, pair) in dates.windows(2).enumerate() {
            if pair[1] <= pair[0] {
                return Err(Error::Model(format!(
                    "dates not strictly increasing at position {}: {} after {}",
                    t + 1,
                    pair[1],
                    pair[0]
                )));
            }
        }
        for (t, row) in close.iter().enumerate() {
            if row.len() != symbols.len() {
                return Err(Error::Dimension {
                    expected: symbols.len(),
                    got: row.len(),
                });
            }
            if let Some((k, p)) = row.iter().enumerate().find(|(_, p)| !(p.is_finite() && **p > 0.0)) {
                return Err(Error::Model(format!(
                    "non-positive price {p} for {} on {}",
                    symbols[k], dates[t]
                )));
            }
        }
        Ok(PriceSeries {
            symbols,
            dates,
            close,
        })
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn close(&self) -> &[Vec<f64>] {
        &self.close
    }

    pub fn n_assets(&self) -> usize {
        self.symbols.len()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        let header = std::iter::once("date").chain(self.symbols.iter().map(String::as_str));
        w.write_record(header).map_err(|e| csv_error(path, e))?;
        for (date, row) in self.dates.iter().zip(&self.close) {
            let record = std::iter::once(date.to_string()).chain(row.iter().map(|p| p.to_string()));
            w.write_record(record).map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Ingest {
            row: 0,
            column: String::new(),
            message: format!("{other:?}"),
        },
    }
}

/// Reads a `date,SYM1,SYM2,...` CSV with ISO-8601 dates.
///
/// Blank cells are forward-filled from the previous date; a blank cell on the
/// first row is an error. Row numbers in errors count the header as row 1.
pub fn load_prices(path: impl AsRef<Path>) -> Result<PriceSeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);

    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.get(0).map(str::to_ascii_lowercase).as_deref() != Some("date") {
        return Err(Error::Ingest {
            row: 1,
            column: header.get(0).unwrap_or_default().to_string(),
            message: "first column must be \"date\"".into(),
        });
    }
    let symbols: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    if symbols.is_empty() {
        return Err(Error::Ingest {
            row: 1,
            column: "date".into(),
            message: "no asset columns".into(),
        });
    }

    let mut dates = Vec::new();
    let mut close: Vec<Vec<f64>> = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let row = k + 2;
        let record = record.map_err(|e| Error::Ingest {
            row,
            column: String::new(),
            message: e.to_string(),
        })?;
        let raw_date = record.get(0).unwrap_or_default();
        let date = NaiveDate::parse_from_str(raw_date, "%Y-%m-%d").map_err(|e| Error::Ingest {
            row,
            column: "date".into(),
            message: format!("unparseable date {raw_date:?}: {e}"),
        })?;
        if let Some(prev) = dates.last() {
            if date <= *prev {
                return Err(Error::Ingest {
                    row,
                    column: "date".into(),
                    message: format!("date {date} does not follow {prev}"),
                });
            }
        }
        let mut prices = Vec::with_capacity(symbols.len());
        for (c, symbol) in symbols.iter().enumerate() {
            let cell = record.get(c + 1).unwrap_or_default();
            let err = |message: String| Error::Ingest {
                row,
                column: symbol.clone(),
                message,
            };
            let price = if cell.is_empty() {
                match close.last() {
                    Some(prev) => prev[c],
                    None => return Err(err("missing value on the first date".into())),
                }
            } else {
                let p: f64 = cell
                    .parse()
                    .map_err(|_| err(format!("unparseable price {cell:?}")))?;
                if !(p.is_finite() && p > 0.0) {
                    return Err(err(format!("price {cell} is not strictly positive")));
                }
                p
            };
            prices.push(price);
        }
        dates.push(date);
        close.push(prices);
    }
    PriceSeries::new(symbols, dates, close)
}

/// Geometric random-walk prices with block-correlated innovations.
///
/// Asset `i` belongs to cluster `i % clusters`. Innovations share a global
/// factor (pairwise correlation 0.05) and a cluster factor (within-cluster
/// correlation 0.6). Deterministic for a fixed seed.
pub fn synthesize_market(n: usize, seed: u64, clusters: usize) -> Result<PriceSeries> {
    if n < 2 {
        return Err(Error::Config(format!("need at least 2 assets, got {n}")));
    }
    if clusters == 0 {
        return Err(Error::Config("need at least one cluster".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let drift: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.0003..0.0009)).collect();
    let vol: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..0.025)).collect();
    let start: Vec<f64> = (0..n).map(|_| rng.gen_range(20.0..500.0)).collect();

    let w_global = INTER_CLUSTER_CORR.sqrt();
    let w_cluster = (INTRA_CLUSTER_CORR - INTER_CLUSTER_CORR).sqrt();
    let w_idio = (1.0 - INTRA_CLUSTER_CORR).sqrt();

    let mut dates = Vec::with_capacity(SYNTHETIC_DAYS);
    let mut day = NaiveDate::from_ymd_opt(2019, 1, 1).expect("valid date");
    while dates.len() < SYNTHETIC_DAYS {
        if !matches!(day.weekday(), Weekday::Sat | Weekday::Sun) {
            dates.push(day);
        }
        day += Duration::days(1);
    }

    let mut close = Vec::with_capacity(SYNTHETIC_DAYS);
    close.push(start);
    let mut cluster_shock = vec![0.0; clusters];
    for _ in 1..SYNTHETIC_DAYS {
        let global: f64 = rng.sample(StandardNormal);
        for s in cluster_shock.iter_mut() {
            *s = rng.sample(StandardNormal);
        }
        let prev = close.last().expect("non-empty");
        let row = (0..n)
            .map(|i| {
                let idio: f64 = rng.sample(StandardNormal);
                let eps = w_global * global + w_cluster * cluster_shock[i % clusters] + w_idio * idio;
                prev[i] * (drift[i] + vol[i] * eps).exp()
            })
            .collect();
        close.push(row);
    }
    let symbols = (0..n).map(|i| format!("A{i:02}")).collect();
    PriceSeries::new(symbols, dates, close)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MarketJson", into = "MarketJson")]
pub struct MarketModel {
    symbols: Vec<String>,
    mu: Vec<f64>,
    sigma: Vec<Vec<f64>>,
    corr: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct MarketJson {
    symbols: Vec<String>,
    mu: Vec<f64>,
    sigma: Vec<Vec<f64>>,
    corr: Vec<Vec<f64>>,
}

impl From<MarketModel> for MarketJson {
    fn from(m: MarketModel) -> Self {
        MarketJson {
            symbols: m.symbols,
            mu: m.mu,
            sigma: m.sigma,
            corr: m.corr,
        }
    }
}

impl TryFrom<MarketJson> for MarketModel {
    type Error = Error;

    fn try_from(raw: MarketJson) -> Result<Self> {
        let model = MarketModel::new(raw.symbols, raw.mu, raw.sigma)?;
        let n = model.n();
        if raw.corr.len() != n || raw.corr.iter().any(|r| r.len() != n) {
            return Err(Error::Model("correlation matrix has the wrong shape".into()));
        }
        for i in 0..n {
            for j in 0..n {
                if (raw.corr[i][j] - model.corr[i][j]).abs() > 1e-9 {
                    return Err(Error::Model(format!(
                        "correlation ({i}, {j}) is inconsistent with the covariance"
                    )));
                }
            }
        }
        Ok(model)
    }
}

impl MarketModel {
    /// Validates `sigma` and derives the correlation matrix from it.
    pub fn new(symbols: Vec<String>, mu: Vec<f64>, sigma: Vec<Vec<f64>>) -> Result<Self> {
        let n = symbols.len();
        if n == 0 {
            return Err(Error::Model("market has no assets".into()));
        }
        if mu.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: mu.len(),
            });
        }
        if sigma.len() != n || sigma.iter().any(|r| r.len() != n) {
            return Err(Error::Model("covariance matrix has the wrong shape".into()));
        }
        if mu.iter().chain(sigma.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::Model("non-finite moment".into()));
        }
        for i in 0..n {
            if sigma[i][i] <= 0.0 {
                return Err(Error::Model(format!(
                    "asset {} has zero return variance; correlation is undefined",
                    symbols[i]
                )));
            }
            for j in (i + 1)..n {
                let scale = sigma[i][j].abs().max(1.0);
                if (sigma[i][j] - sigma[j][i]).abs() > 1e-12 * scale {
                    return Err(Error::Model(format!("covariance is not symmetric at ({i}, {j})")));
                }
            }
        }
        let min_eig = DMatrix::from_fn(n, n, |i, j| sigma[i][j])
            .symmetric_eigen()
            .eigenvalues
            .min();
        if min_eig < -1e-8 {
            return Err(Error::Model(format!(
                "covariance is not positive semi-definite (smallest eigenvalue {min_eig:e})"
            )));
        }
        let corr = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            1.0
                        } else {
                            (sigma[i][j] / (sigma[i][i] * sigma[j][j]).sqrt()).clamp(-1.0, 1.0)
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(MarketModel {
            symbols,
            mu,
            sigma,
            corr,
        })
    }

    /// Simple daily returns, their mean, and the `T - 1` sample covariance.
    pub fn from_prices(prices: &PriceSeries) -> Result<Self> {
        let n = prices.n_assets();
        let returns: Vec<Vec<f64>> = prices
            .close()
            .windows(2)
            .map(|w| (0..n).map(|i| w[1][i] / w[0][i] - 1.0).collect())
            .collect();
        let t = returns.len();
        if t < 2 {
            return Err(Error::Model(format!(
                "need at least 2 returns to estimate a covariance, got {t}"
            )));
        }
        let mu: Vec<f64> = (0..n)
            .map(|i| returns.iter().map(|r| r[i]).sum::<f64>() / t as f64)
            .collect();
        let mut sigma = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let s = returns
                    .iter()
                    .map(|r| (r[i] - mu[i]) * (r[j] - mu[j]))
                    .sum::<f64>()
                    / (t - 1) as f64;
                sigma[i][j] = s;
                sigma[j][i] = s;
            }
        }
        Self::new(prices.symbols().to_vec(), mu, sigma)
    }

    pub fn n(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn sigma(&self) -> &[Vec<f64>] {
        &self.sigma
    }

    pub fn corr(&self) -> &[Vec<f64>] {
        &self.corr
    }

    /// The model restricted to the first `n` assets.
    pub fn head(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.n() {
            return Err(Error::Config(format!(
                "cannot take {n} assets from a market of {}",
                self.n()
            )));
        }
        Ok(MarketModel {
            symbols: self.symbols[..n].to_vec(),
            mu: self.mu[..n].to_vec(),
            sigma: self.sigma[..n].iter().map(|r| r[..n].to_vec()).collect(),
            corr: self.corr[..n].iter().map(|r| r[..n].to_vec()).collect(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PortfolioConfig {
    gamma: f64,
}

impl PortfolioConfig {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::Config(format!("risk aversion must be >= 0, got {gamma}")));
        }
        Ok(PortfolioConfig { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// `-mu^T w + gamma w^T Sigma w` as a QUBO: `q_ii = -mu_i + gamma Sigma_ii`,
/// `q_ij = gamma Sigma_ij`.
pub fn build_portfolio_qubo(m: &MarketModel, c: &PortfolioConfig) -> QuboProblem {
    let n = m.n();
    let g = c.gamma();
    let q = (0..n)
        .flat_map(|i| {
            (0..n).map(move |j| {
                let risk = g * m.sigma[i][j];
                if i == j {
                    risk - m.mu[i]
                } else {
                    risk
                }
            })
        })
        .collect();
    QuboProblem::from_dense(n, q, 0.0).expect("covariance is symmetric and finite")
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PortfolioStats {
    pub ret: f64,
    pub volatility: f64,
}

/// Return and volatility of the equal-weight portfolio over the selected assets.
pub fn portfolio_stats(m: &MarketModel, selection: &[u8]) -> Result<PortfolioStats> {
    if selection.len() != m.n() {
        return Err(Error::Dimension {
            expected: m.n(),
            got: selection.len(),
        });
    }
    let chosen: Vec<usize> = (0..m.n()).filter(|&i| selection[i] != 0).collect();
    if chosen.is_empty() {
        return Err(Error::Stats("empty selection".into()));
    }
    let w = 1.0 / chosen.len() as f64;
    let ret = chosen.iter().map(|&i| w * m.mu[i]).sum();
    let var: f64 = chosen
        .iter()
        .flat_map(|&i| chosen.iter().map(move |&j| (i, j)))
        .map(|(i, j)| w * w * m.sigma[i][j])
        .sum();
    Ok(PortfolioStats {
        ret,
        volatility: var.max(0.0).sqrt(),
    })
}
