//! Chain storage, posterior summaries and histogram export.

use crate::theta::{ThetaVector, PARAM_NAMES};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

/// MCMC sample record.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub dim: usize,
    /// One sampling-space vector per iteration (burn-in included).
    pub samples: Vec<Vec<f64>>,
    pub accepted: Vec<bool>,
    pub burn_in: usize,
    pub seed: u64,
    /// Dataset label the chain was fit against.
    pub label: String,
    pub adaptation_skips: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ChainMeta {
    dim: usize,
    burn_in: usize,
    seed: u64,
    label: String,
    adaptation_skips: usize,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.accepted.is_empty() {
            return 0.0;
        }
        self.accepted.iter().filter(|&&a| a).count() as f64 / self.accepted.len() as f64
    }

    /// Samples after the stored burn-in marker.
    pub fn post_burn_in(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.samples.iter().skip(self.burn_in)
    }

    /// Write `<stem>.csv` (one row per iteration, scaled parameters plus
    /// the acceptance flag) and `<stem>.meta.toml`.
    pub fn save(&self, stem: &Path) -> Result<()> {
        let csv_path = stem.with_extension("csv");
        let mut body = String::with_capacity(self.len() * 48 + 64);
        if self.dim == 5 {
            body.push_str(&PARAM_NAMES.join(","));
        } else {
            let names: Vec<String> = (0..self.dim).map(|d| format!("x{d}")).collect();
            body.push_str(&names.join(","));
        }
        body.push_str(",accepted\n");
        for (sample, &acc) in self.samples.iter().zip(&self.accepted) {
            for (d, v) in sample.iter().enumerate() {
                if d > 0 {
                    body.push(',');
                }
                body.push_str(&format!("{v}"));
            }
            body.push_str(if acc { ",1\n" } else { ",0\n" });
        }
        write_atomic(&csv_path, body.as_bytes())?;

        let meta = ChainMeta {
            dim: self.dim,
            burn_in: self.burn_in,
            seed: self.seed,
            label: self.label.clone(),
            adaptation_skips: self.adaptation_skips,
        };
        let text = toml::to_string(&meta).map_err(|e| Error::Parse {
            path: stem.display().to_string(),
            message: e.to_string(),
        })?;
        write_atomic(&stem.with_extension("meta.toml"), text.as_bytes())?;
        Ok(())
    }

    pub fn load(stem: &Path) -> Result<Self> {
        let meta_path = stem.with_extension("meta.toml");
        let meta: ChainMeta = toml::from_str(&std::fs::read_to_string(&meta_path)?)
            .map_err(|e| Error::Parse {
                path: meta_path.display().to_string(),
                message: e.to_string(),
            })?;
        let csv_path = stem.with_extension("csv");
        let text = std::fs::read_to_string(&csv_path)?;
        let mut samples = Vec::new();
        let mut accepted = Vec::new();
        for (idx, line) in text.lines().skip(1).enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != meta.dim + 1 {
                return Err(Error::Parse {
                    path: csv_path.display().to_string(),
                    message: format!("row {}: expected {} fields", idx + 2, meta.dim + 1),
                });
            }
            let mut row = Vec::with_capacity(meta.dim);
            for f in &fields[..meta.dim] {
                row.push(f.parse::<f64>().map_err(|e| Error::Parse {
                    path: csv_path.display().to_string(),
                    message: format!("row {}: {e}", idx + 2),
                })?);
            }
            samples.push(row);
            accepted.push(fields[meta.dim] == "1");
        }
        Ok(Self {
            dim: meta.dim,
            samples,
            accepted,
            burn_in: meta.burn_in,
            seed: meta.seed,
            label: meta.label,
            adaptation_skips: meta.adaptation_skips,
        })
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = PathBuf::from(path);
    let mut name = tmp.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".tmp");
    tmp.set_file_name(name);
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Binned marginal.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub parameter: String,
    /// `bins + 1` edges.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

/// Binned joint distribution of a parameter pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram2d {
    pub parameters: (String, String),
    pub x_edges: Vec<f64>,
    pub y_edges: Vec<f64>,
    /// Row-major, `counts[iy * x_bins + ix]`.
    pub counts: Vec<u64>,
}

/// Posterior summary statistics over the post-burn-in segment.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    /// Arithmetic mean per sampling-space coordinate.
    pub mmse: Vec<f64>,
    /// Sample standard deviation per coordinate.
    pub std: Vec<f64>,
    /// Noise variance statistics in variance space (5-parameter chains).
    pub sigma2_mmse: Option<f64>,
    pub sigma2_std: Option<f64>,
    pub acceptance_rate: f64,
    pub n_post_burn_in: usize,
    pub marginals: Vec<Histogram>,
    /// Joint histograms for (d_n, d_p) and (d_e, t_plus).
    pub joints: Vec<Histogram2d>,
}

impl PosteriorSummary {
    /// Summary as a [`ThetaVector`] (5-parameter chains only).
    pub fn mmse_theta(&self) -> Option<ThetaVector> {
        (self.mmse.len() == 5).then(|| {
            ThetaVector::from_array([
                self.mmse[0],
                self.mmse[1],
                self.mmse[2],
                self.mmse[3],
                self.mmse[4],
            ])
        })
    }
}

fn histogram(name: &str, values: &[f64], bins: usize) -> Histogram {
    let (mut lo, mut hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if !(hi > lo) {
        // degenerate chain: widen artificially so every count lands somewhere
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|b| lo + b as f64 * width).collect();
    let mut counts = vec![0u64; bins];
    for &v in values {
        let idx = (((v - lo) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    Histogram {
        parameter: name.to_string(),
        edges,
        counts,
    }
}

fn histogram2d(
    names: (&str, &str),
    xs: &[f64],
    ys: &[f64],
    bins: usize,
) -> Histogram2d {
    let hx = histogram(names.0, xs, bins);
    let hy = histogram(names.1, ys, bins);
    let mut counts = vec![0u64; bins * bins];
    let (x_lo, x_hi) = (hx.edges[0], hx.edges[bins]);
    let (y_lo, y_hi) = (hy.edges[0], hy.edges[bins]);
    let wx = (x_hi - x_lo) / bins as f64;
    let wy = (y_hi - y_lo) / bins as f64;
    for (&x, &y) in xs.iter().zip(ys) {
        let ix = (((x - x_lo) / wx) as usize).min(bins - 1);
        let iy = (((y - y_lo) / wy) as usize).min(bins - 1);
        counts[iy * bins + ix] += 1;
    }
    Histogram2d {
        parameters: (names.0.to_string(), names.1.to_string()),
        x_edges: hx.edges,
        y_edges: hy.edges,
        counts,
    }
}

/// Posterior mean, spread and histograms over the stationary segment.
///
/// `burn_in` overrides the marker stored in the chain.
pub fn summarize(chain: &Chain, burn_in: usize, bins: usize) -> Result<PosteriorSummary> {
    if burn_in >= chain.len() {
        return Err(Error::Invalid(format!(
            "burn-in {} leaves no samples of {}",
            burn_in,
            chain.len()
        )));
    }
    if bins == 0 {
        return Err(Error::Invalid("histogram bin count must be positive".into()));
    }
    let post: Vec<&Vec<f64>> = chain.samples.iter().skip(burn_in).collect();
    let n = post.len() as f64;
    let dim = chain.dim;

    let mut mmse = vec![0.0; dim];
    for s in &post {
        for d in 0..dim {
            mmse[d] += s[d];
        }
    }
    for m in &mut mmse {
        *m /= n;
    }
    let mut std = vec![0.0; dim];
    if post.len() > 1 {
        for s in &post {
            for d in 0..dim {
                let r = s[d] - mmse[d];
                std[d] += r * r;
            }
        }
        for s in &mut std {
            *s = (*s / (n - 1.0)).sqrt();
        }
    }

    let names: Vec<String> = if dim == 5 {
        PARAM_NAMES.iter().map(|s| s.to_string()).collect()
    } else {
        (0..dim).map(|d| format!("x{d}")).collect()
    };
    let column = |d: usize| -> Vec<f64> { post.iter().map(|s| s[d]).collect() };
    let marginals = (0..dim)
        .map(|d| histogram(&names[d], &column(d), bins))
        .collect();

    let mut joints = Vec::new();
    if dim == 5 {
        joints.push(histogram2d(("d_n", "d_p"), &column(0), &column(1), bins));
        joints.push(histogram2d(("d_e", "t_plus"), &column(2), &column(3), bins));
    }

    let (sigma2_mmse, sigma2_std) = if dim == 5 {
        let s2: Vec<f64> = post.iter().map(|s| s[4].exp()).collect();
        let mean = s2.iter().sum::<f64>() / n;
        let var = if s2.len() > 1 {
            s2.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        (Some(mean), Some(var.sqrt()))
    } else {
        (None, None)
    };

    Ok(PosteriorSummary {
        mmse,
        std,
        sigma2_mmse,
        sigma2_std,
        acceptance_rate: chain.acceptance_rate(),
        n_post_burn_in: post.len(),
        marginals,
        joints,
    })
}

/// Write a marginal histogram as CSV (`bin_lo,bin_hi,count`).
pub fn write_histogram_csv(path: &Path, h: &Histogram) -> Result<()> {
    let mut body = String::from("bin_lo,bin_hi,count\n");
    for (b, &c) in h.counts.iter().enumerate() {
        body.push_str(&format!("{},{},{}\n", h.edges[b], h.edges[b + 1], c));
    }
    write_atomic(path, body.as_bytes())
}

/// Write a joint histogram as CSV (`x_lo,x_hi,y_lo,y_hi,count`).
pub fn write_histogram2d_csv(path: &Path, h: &Histogram2d) -> Result<()> {
    let bins_x = h.x_edges.len() - 1;
    let bins_y = h.y_edges.len() - 1;
    let mut body = String::from("x_lo,x_hi,y_lo,y_hi,count\n");
    for iy in 0..bins_y {
        for ix in 0..bins_x {
            body.push_str(&format!(
                "{},{},{},{},{}\n",
                h.x_edges[ix],
                h.x_edges[ix + 1],
                h.y_edges[iy],
                h.y_edges[iy + 1],
                h.counts[iy * bins_x + ix]
            ));
        }
    }
    write_atomic(path, body.as_bytes())
}
