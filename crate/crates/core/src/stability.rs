//! Rank-stability analytics over method × dataset × LLM score grids.
//!
//! Given a grid of nDCG@10 values, this module computes:
//! - per-(dataset, llm) method rankings with average-rank tie handling
//! - RankCV: the coefficient of variation of a method's cross-dataset ranks
//!   under a fixed LLM configuration, `σ/μ × 100` with the sample (n−1)
//!   standard deviation
//! - pairwise Spearman rank agreement between LLM configurations, with
//!   two-sided p-values from either a t approximation or a seeded Monte
//!   Carlo permutation test
//! - two-way variance partitioning of a method × LLM score matrix into
//!   LLM main effect, method main effect, and interaction + residual
//! - per-query score-delta distributions with linearly interpolated quartiles
//!
//! All computations are pure and deterministic; permutation tests take an
//! explicit seed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StabilityError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("grid parse error at {path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("score grid is incomplete: missing {0} cell(s), first: {1}")]
    IncompleteGrid(usize, String),
    #[error("scores must be finite: {0}")]
    NonFinite(String),
    #[error("need at least {need} {what}, got {got}")]
    TooFew {
        what: &'static str,
        need: usize,
        got: usize,
    },
    #[error("rank vectors must cover identical method sets (difference: {0})")]
    MethodMismatch(String),
    #[error("spearman correlation undefined for a constant rank vector")]
    ConstantRanks,
    #[error("query sets differ; only in left: [{left}], only in right: [{right}]")]
    QueryMismatch { left: String, right: String },
}

/// Scores indexed by `(method, dataset, llm)`. Axes are the sorted unions of
/// what was inserted; analyses that need a complete grid call [`ScoreGrid::complete`].
#[derive(Debug, Clone, Default)]
pub struct ScoreGrid {
    values: BTreeMap<(String, String, String), f64>,
}

impl ScoreGrid {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, method: &str, dataset: &str, llm: &str, value: f64) {
        self.values.insert(
            (method.to_string(), dataset.to_string(), llm.to_string()),
            value,
        );
    }

    pub fn get(&self, method: &str, dataset: &str, llm: &str) -> Option<f64> {
        self.values
            .get(&(method.to_string(), dataset.to_string(), llm.to_string()))
            .copied()
    }

    pub fn methods(&self) -> Vec<String> {
        self.axis(|k| &k.0)
    }

    pub fn datasets(&self) -> Vec<String> {
        self.axis(|k| &k.1)
    }

    pub fn llms(&self) -> Vec<String> {
        self.axis(|k| &k.2)
    }

    fn axis<F: Fn(&(String, String, String)) -> &String>(&self, pick: F) -> Vec<String> {
        let set: BTreeSet<&String> = self.values.keys().map(|k| pick(k)).collect();
        set.into_iter().cloned().collect()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Verify all `methods × datasets × llms` cells exist and are finite.
    pub fn complete(&self) -> Result<(), StabilityError> {
        let mut missing = Vec::new();
        for m in self.methods() {
            for d in self.datasets() {
                for l in self.llms() {
                    match self.get(&m, &d, &l) {
                        None => missing.push(format!("({m}, {d}, {l})")),
                        Some(v) if !v.is_finite() => {
                            return Err(StabilityError::NonFinite(format!("({m}, {d}, {l})")))
                        }
                        Some(_) => {}
                    }
                }
            }
        }
        if missing.is_empty() {
            Ok(())
        } else {
            let first = missing[0].clone();
            Err(StabilityError::IncompleteGrid(missing.len(), first))
        }
    }

    /// Scores of all methods for one `(dataset, llm)` slice.
    pub fn slice(&self, dataset: &str, llm: &str) -> BTreeMap<String, f64> {
        self.values
            .iter()
            .filter(|((_, d, l), _)| d == dataset && l == llm)
            .map(|((m, _, _), v)| (m.clone(), *v))
            .collect()
    }

    /// Per-method mean over datasets for one llm (used for aggregate views).
    pub fn mean_over_datasets(&self, llm: &str) -> BTreeMap<String, f64> {
        let datasets = self.datasets();
        let mut out = BTreeMap::new();
        for m in self.methods() {
            let scores: Vec<f64> = datasets
                .iter()
                .filter_map(|d| self.get(&m, d, llm))
                .collect();
            if !scores.is_empty() {
                out.insert(m, scores.iter().sum::<f64>() / scores.len() as f64);
            }
        }
        out
    }

    /// Parse `method,dataset,llm,metric,value` CSV, keeping rows whose metric
    /// equals `metric`.
    pub fn from_csv_str(content: &str, metric: &str, origin: &str) -> Result<Self, StabilityError> {
        let mut grid = ScoreGrid::new();
        for (idx, line) in content.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if idx == 0 && line.starts_with("method,") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(StabilityError::Parse {
                    path: origin.to_string(),
                    line: line_no,
                    message: format!("expected 5 columns, got {}", fields.len()),
                });
            }
            if fields[3] != metric {
                continue;
            }
            let value: f64 = fields[4].parse().map_err(|e| StabilityError::Parse {
                path: origin.to_string(),
                line: line_no,
                message: format!("bad value `{}`: {e}", fields[4]),
            })?;
            grid.insert(fields[0], fields[1], fields[2], value);
        }
        Ok(grid)
    }

    pub fn from_csv_path(path: &Path, metric: &str) -> Result<Self, StabilityError> {
        let content = std::fs::read_to_string(path).map_err(|source| StabilityError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_csv_str(&content, metric, &path.display().to_string())
    }
}

/// Rank methods by descending score: 1 = best. Ties receive the average of
/// the positions they span (fractional ranks).
pub fn rank_methods(scores: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>, StabilityError> {
    if let Some((m, _)) = scores.iter().find(|(_, v)| !v.is_finite()) {
        return Err(StabilityError::NonFinite(m.clone()));
    }
    let mut ordered: Vec<(&String, f64)> = scores.iter().map(|(m, v)| (m, *v)).collect();
    ordered.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite").then_with(|| a.0.cmp(b.0)));
    let mut ranks = BTreeMap::new();
    let mut i = 0;
    while i < ordered.len() {
        let mut j = i;
        while j + 1 < ordered.len() && ordered[j + 1].1 == ordered[i].1 {
            j += 1;
        }
        // positions i..=j (0-based) share the average of ranks i+1..=j+1
        let avg = (i + 1 + j + 1) as f64 / 2.0;
        for entry in &ordered[i..=j] {
            ranks.insert(entry.0.clone(), avg);
        }
        i = j + 1;
    }
    Ok(ranks)
}

/// Per-(dataset, llm) method ranks over a complete grid.
#[derive(Debug, Clone)]
pub struct RankMatrix {
    pub ranks: BTreeMap<(String, String), BTreeMap<String, f64>>,
}

impl RankMatrix {
    pub fn from_grid(grid: &ScoreGrid) -> Result<Self, StabilityError> {
        grid.complete()?;
        let mut ranks = BTreeMap::new();
        for d in grid.datasets() {
            for l in grid.llms() {
                let slice = grid.slice(&d, &l);
                ranks.insert((d.clone(), l.clone()), rank_methods(&slice)?);
            }
        }
        Ok(RankMatrix { ranks })
    }

    /// Ranks of one method across datasets under a fixed llm, dataset order.
    pub fn method_ranks(&self, method: &str, llm: &str) -> Vec<f64> {
        self.ranks
            .iter()
            .filter(|((_, l), _)| l == llm)
            .filter_map(|(_, per_method)| per_method.get(method).copied())
            .collect()
    }
}

/// RankCV: sample standard deviation of ranks over datasets divided by their
/// mean, as a percentage. Zero iff the ranks are constant.
pub fn rank_cv(ranks: &[f64]) -> Result<f64, StabilityError> {
    if ranks.len() < 2 {
        return Err(StabilityError::TooFew {
            what: "datasets",
            need: 2,
            got: ranks.len(),
        });
    }
    if ranks.iter().any(|r| !r.is_finite()) {
        return Err(StabilityError::NonFinite("rank".to_string()));
    }
    let n = ranks.len() as f64;
    let mean = ranks.iter().sum::<f64>() / n;
    let var = ranks.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(var.sqrt() / mean * 100.0)
}

/// One row of the RankCV table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankCvEntry {
    pub method: String,
    pub llm: String,
    pub rank_cv_pct: f64,
}

/// RankCV for every (method, llm) pair of a complete grid.
pub fn rank_cv_table(grid: &ScoreGrid) -> Result<Vec<RankCvEntry>, StabilityError> {
    let matrix = RankMatrix::from_grid(grid)?;
    let mut out = Vec::new();
    for m in grid.methods() {
        for l in grid.llms() {
            let ranks = matrix.method_ranks(&m, &l);
            out.push(RankCvEntry {
                method: m.clone(),
                llm: l.clone(),
                rank_cv_pct: rank_cv(&ranks)?,
            });
        }
    }
    Ok(out)
}

/// `method,llm,rank_cv_pct` CSV with a header.
pub fn rank_cv_csv(entries: &[RankCvEntry]) -> String {
    let mut out = String::from("method,llm,rank_cv_pct\n");
    for e in entries {
        writeln!(out, "{},{},{:.6}", e.method, e.llm, e.rank_cv_pct)
            .expect("writing to string cannot fail");
    }
    out
}

/// How the two-sided Spearman p-value is computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PValueMethod {
    /// `t = ρ√((n−2)/(1−ρ²))` against a Student-t with n−2 degrees of freedom.
    TApprox,
    /// Seeded Monte Carlo permutation of one rank vector.
    Permutation { permutations: u32, seed: u64 },
}

impl PValueMethod {
    pub fn label(&self) -> &'static str {
        match self {
            PValueMethod::TApprox => "t_approx",
            PValueMethod::Permutation { .. } => "permutation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpearmanResult {
    pub rho: f64,
    pub p: f64,
    pub method: String,
}

/// Spearman rank correlation between two method rankings, with a two-sided
/// significance test. Ranks may be fractional (ties already averaged);
/// ρ is the Pearson correlation of the rank vectors, which handles ties.
pub fn spearman(
    ranks_a: &BTreeMap<String, f64>,
    ranks_b: &BTreeMap<String, f64>,
    method: PValueMethod,
) -> Result<SpearmanResult, StabilityError> {
    let keys_a: BTreeSet<&String> = ranks_a.keys().collect();
    let keys_b: BTreeSet<&String> = ranks_b.keys().collect();
    if keys_a != keys_b {
        let diff: Vec<String> = keys_a
            .symmetric_difference(&keys_b)
            .map(|s| s.to_string())
            .collect();
        return Err(StabilityError::MethodMismatch(diff.join(", ")));
    }
    let n = ranks_a.len();
    if n < 3 {
        return Err(StabilityError::TooFew {
            what: "methods",
            need: 3,
            got: n,
        });
    }
    let a: Vec<f64> = ranks_a.values().copied().collect();
    let b: Vec<f64> = ranks_b.values().copied().collect();
    let rho = pearson(&a, &b)?;
    let p = match method {
        PValueMethod::TApprox => t_approx_p(rho, n),
        PValueMethod::Permutation { permutations, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut shuffled = b.clone();
            let mut exceed = 0u64;
            for _ in 0..permutations {
                shuffled.shuffle(&mut rng);
                let r = pearson(&a, &shuffled)?;
                if r.abs() >= rho.abs() - 1e-12 {
                    exceed += 1;
                }
            }
            (exceed + 1) as f64 / (u64::from(permutations) + 1) as f64
        }
    };
    Ok(SpearmanResult {
        rho,
        p,
        method: method.label().to_string(),
    })
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64, StabilityError> {
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - mean_a) * (y - mean_b);
        var_a += (x - mean_a).powi(2);
        var_b += (y - mean_b).powi(2);
    }
    if var_a == 0.0 || var_b == 0.0 {
        return Err(StabilityError::ConstantRanks);
    }
    Ok(cov / (var_a.sqrt() * var_b.sqrt()))
}

fn t_approx_p(rho: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    let denom = 1.0 - rho * rho;
    if denom <= f64::EPSILON {
        return 0.0;
    }
    let t = rho * (df / denom).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("valid t distribution");
    2.0 * (1.0 - dist.cdf(t.abs()))
}

/// Significance marker for a p-value: `**` below 0.01, `*` below 0.05,
/// `ns` otherwise.
pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        "ns"
    }
}

/// Percentages of score variance attributed to each source. The three
/// components sum to 100 unless the matrix is constant, in which case all
/// are zero and `degenerate` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariancePartition {
    pub pct_llm: f64,
    pub pct_method: f64,
    pub pct_interaction_residual: f64,
    pub degenerate: bool,
}

/// Two-way sum-of-squares decomposition of a `methods × llms` score matrix.
///
/// With rows m ∈ M and columns ℓ ∈ L:
/// `SS_total = Σ (x − x̄)²`, `SS_llm = |M| Σ_ℓ (x̄_ℓ − x̄)²`,
/// `SS_method = |L| Σ_m (x̄_m − x̄)²`, interaction = remainder.
pub fn variance_partition(matrix: &[Vec<f64>]) -> Result<VariancePartition, StabilityError> {
    let n_methods = matrix.len();
    if n_methods < 2 {
        return Err(StabilityError::TooFew {
            what: "methods (rows)",
            need: 2,
            got: n_methods,
        });
    }
    let n_llms = matrix[0].len();
    if n_llms < 2 {
        return Err(StabilityError::TooFew {
            what: "llms (columns)",
            need: 2,
            got: n_llms,
        });
    }
    for row in matrix {
        if row.len() != n_llms {
            return Err(StabilityError::IncompleteGrid(
                1,
                "ragged matrix row".to_string(),
            ));
        }
        if let Some(v) = row.iter().find(|v| !v.is_finite()) {
            return Err(StabilityError::NonFinite(v.to_string()));
        }
    }

    let total_n = (n_methods * n_llms) as f64;
    let grand: f64 = matrix.iter().flatten().sum::<f64>() / total_n;
    let ss_total: f64 = matrix
        .iter()
        .flatten()
        .map(|x| (x - grand).powi(2))
        .sum();
    if ss_total == 0.0 {
        return Ok(VariancePartition {
            pct_llm: 0.0,
            pct_method: 0.0,
            pct_interaction_residual: 0.0,
            degenerate: true,
        });
    }
    let ss_llm: f64 = (0..n_llms)
        .map(|l| {
            let col_mean = matrix.iter().map(|row| row[l]).sum::<f64>() / n_methods as f64;
            (col_mean - grand).powi(2)
        })
        .sum::<f64>()
        * n_methods as f64;
    let ss_method: f64 = matrix
        .iter()
        .map(|row| {
            let row_mean = row.iter().sum::<f64>() / n_llms as f64;
            (row_mean - grand).powi(2)
        })
        .sum::<f64>()
        * n_llms as f64;
    let ss_inter = ss_total - ss_llm - ss_method;
    Ok(VariancePartition {
        pct_llm: ss_llm / ss_total * 100.0,
        pct_method: ss_method / ss_total * 100.0,
        pct_interaction_residual: ss_inter / ss_total * 100.0,
        degenerate: false,
    })
}

/// Per-query score deltas (`reformulated − baseline`) with summary statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaDistribution {
    pub deltas: BTreeMap<String, f64>,
    pub summary: DeltaSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaSummary {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Compute per-query deltas between matched score maps. Errors if the query
/// sets differ, listing the symmetric difference.
pub fn delta_distribution(
    baseline: &BTreeMap<String, f64>,
    reformulated: &BTreeMap<String, f64>,
) -> Result<DeltaDistribution, StabilityError> {
    let keys_b: BTreeSet<&String> = baseline.keys().collect();
    let keys_r: BTreeSet<&String> = reformulated.keys().collect();
    if keys_b != keys_r {
        let only_left: Vec<String> = keys_r.difference(&keys_b).map(|s| s.to_string()).collect();
        let only_right: Vec<String> = keys_b.difference(&keys_r).map(|s| s.to_string()).collect();
        return Err(StabilityError::QueryMismatch {
            left: only_left.join(", "),
            right: only_right.join(", "),
        });
    }
    if baseline.is_empty() {
        return Err(StabilityError::TooFew {
            what: "queries",
            need: 1,
            got: 0,
        });
    }
    let deltas: BTreeMap<String, f64> = baseline
        .iter()
        .map(|(q, b)| (q.clone(), reformulated[q] - b))
        .collect();
    let mut sorted: Vec<f64> = deltas.values().copied().collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite deltas"));
    let summary = DeltaSummary {
        n: sorted.len(),
        min: sorted[0],
        q1: quantile(&sorted, 0.25),
        median: quantile(&sorted, 0.5),
        q3: quantile(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
    };
    Ok(DeltaDistribution { deltas, summary })
}

/// Linearly interpolated quantile of a sorted slice: position `p(n−1)`,
/// interpolating between the adjacent order statistics.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty() && (0.0..=1.0).contains(&p));
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(m, v)| (m.to_string(), *v)).collect()
    }

    #[test]
    fn rank_methods_descending() {
        let ranks = rank_methods(&scores(&[("A", 0.9), ("B", 0.5), ("C", 0.1)])).unwrap();
        assert_eq!(ranks["A"], 1.0);
        assert_eq!(ranks["B"], 2.0);
        assert_eq!(ranks["C"], 3.0);
    }

    #[test]
    fn rank_methods_average_ties() {
        let ranks = rank_methods(&scores(&[("A", 0.5), ("B", 0.5)])).unwrap();
        assert_eq!(ranks["A"], 1.5);
        assert_eq!(ranks["B"], 1.5);
    }

    #[test]
    fn rank_methods_rejects_nan() {
        assert!(rank_methods(&scores(&[("A", f64::NAN), ("B", 0.5)])).is_err());
    }

    #[test]
    fn rank_cv_formula_cases() {
        assert_eq!(rank_cv(&[4.0, 4.0, 4.0]).unwrap(), 0.0);
        // mean 2, sample sd 1 → 50%
        assert!((rank_cv(&[1.0, 2.0, 3.0]).unwrap() - 50.0).abs() < 1e-12);
        assert!(rank_cv(&[1.0]).is_err());
    }

    #[test]
    fn spearman_identical_and_reversed() {
        let a = scores(&[("m1", 1.0), ("m2", 2.0), ("m3", 3.0), ("m4", 4.0)]);
        let rev = scores(&[("m1", 4.0), ("m2", 3.0), ("m3", 2.0), ("m4", 1.0)]);
        let same = spearman(&a, &a, PValueMethod::TApprox).unwrap();
        assert!((same.rho - 1.0).abs() < 1e-12);
        assert!(same.p < 1e-9);
        let opposite = spearman(&a, &rev, PValueMethod::TApprox).unwrap();
        assert!((opposite.rho + 1.0).abs() < 1e-12);
    }

    #[test]
    fn spearman_closed_form_n5() {
        // d² = 4 → ρ = 1 − 6·4/(5·24) = 0.8
        let a = scores(&[("m1", 1.0), ("m2", 2.0), ("m3", 3.0), ("m4", 4.0), ("m5", 5.0)]);
        let b = scores(&[("m1", 2.0), ("m2", 1.0), ("m3", 4.0), ("m4", 3.0), ("m5", 5.0)]);
        let r = spearman(&a, &b, PValueMethod::TApprox).unwrap();
        assert!((r.rho - 0.8).abs() < 1e-12);
    }

    #[test]
    fn spearman_rejects_constant_vector() {
        let a = scores(&[("m1", 1.0), ("m2", 2.0), ("m3", 3.0)]);
        let c = scores(&[("m1", 2.0), ("m2", 2.0), ("m3", 2.0)]);
        assert!(matches!(
            spearman(&a, &c, PValueMethod::TApprox),
            Err(StabilityError::ConstantRanks)
        ));
    }

    #[test]
    fn spearman_rejects_mismatched_methods() {
        let a = scores(&[("m1", 1.0), ("m2", 2.0), ("m3", 3.0)]);
        let b = scores(&[("m1", 1.0), ("m2", 2.0), ("mX", 3.0)]);
        assert!(matches!(
            spearman(&a, &b, PValueMethod::TApprox),
            Err(StabilityError::MethodMismatch(_))
        ));
    }

    #[test]
    fn spearman_is_symmetric() {
        let a = scores(&[("m1", 3.0), ("m2", 1.0), ("m3", 2.0), ("m4", 4.0)]);
        let b = scores(&[("m1", 2.0), ("m2", 4.0), ("m3", 1.0), ("m4", 3.0)]);
        let ab = spearman(&a, &b, PValueMethod::TApprox).unwrap();
        let ba = spearman(&b, &a, PValueMethod::TApprox).unwrap();
        assert!((ab.rho - ba.rho).abs() < 1e-12);
        assert!((ab.p - ba.p).abs() < 1e-12);
    }

    #[test]
    fn stars_follow_thresholds() {
        assert_eq!(significance_stars(0.005), "**");
        assert_eq!(significance_stars(0.03), "*");
        assert_eq!(significance_stars(0.2), "ns");
    }

    #[test]
    fn additive_matrix_has_zero_interaction() {
        // x(m, l) = a_m + b_l
        let a = [0.1, 0.4, 0.2, 0.7];
        let b = [0.05, 0.2, 0.1];
        let matrix: Vec<Vec<f64>> = a
            .iter()
            .map(|am| b.iter().map(|bl| am + bl).collect())
            .collect();
        let part = variance_partition(&matrix).unwrap();
        assert!(part.pct_interaction_residual.abs() < 1e-9);
        let sum = part.pct_llm + part.pct_method + part.pct_interaction_residual;
        assert!((sum - 100.0).abs() < 1e-9);
    }

    #[test]
    fn constant_columns_zero_llm_effect() {
        let matrix = vec![vec![0.3, 0.3], vec![0.8, 0.8], vec![0.5, 0.5]];
        let part = variance_partition(&matrix).unwrap();
        assert!(part.pct_llm.abs() < 1e-12);
        assert!((part.pct_method - 100.0).abs() < 1e-9);
    }

    #[test]
    fn constant_matrix_is_degenerate() {
        let matrix = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        let part = variance_partition(&matrix).unwrap();
        assert!(part.degenerate);
        assert_eq!(part.pct_llm, 0.0);
        assert_eq!(part.pct_method, 0.0);
    }

    #[test]
    fn delta_identical_runs_all_zero() {
        let base = scores(&[("q1", 0.4), ("q2", 0.6)]);
        let d = delta_distribution(&base, &base).unwrap();
        assert!(d.deltas.values().all(|v| *v == 0.0));
        assert_eq!(d.summary.median, 0.0);
    }

    #[test]
    fn delta_constant_shift() {
        let base = scores(&[("q1", 0.2), ("q2", 0.2), ("q3", 0.2)]);
        let reform = scores(&[("q1", 0.5), ("q2", 0.5), ("q3", 0.5)]);
        let d = delta_distribution(&base, &reform).unwrap();
        assert!((d.summary.median - 0.3).abs() < 1e-12);
        assert!((d.summary.q3 - d.summary.q1).abs() < 1e-12);
    }

    #[test]
    fn delta_mismatched_queries_lists_difference() {
        let base = scores(&[("q1", 0.2), ("q2", 0.3)]);
        let reform = scores(&[("q1", 0.2), ("q3", 0.3)]);
        let err = delta_distribution(&base, &reform).unwrap_err();
        match err {
            StabilityError::QueryMismatch { left, right } => {
                assert_eq!(left, "q3");
                assert_eq!(right, "q2");
            }
            other => panic!("expected QueryMismatch, got {other:?}"),
        }
    }

    #[test]
    fn quantile_linear_interpolation() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert!((quantile(&v, 0.5) - 2.5).abs() < 1e-12);
        assert!((quantile(&v, 0.25) - 1.75).abs() < 1e-12);
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
    }

    #[test]
    fn grid_csv_round_trip_and_completeness() {
        let csv = "method,dataset,llm,metric,value\n\
                   q2d,ds1,llm1,ndcg@10,0.5\n\
                   q2d,ds2,llm1,ndcg@10,0.6\n\
                   genqr,ds1,llm1,ndcg@10,0.4\n\
                   genqr,ds2,llm1,ndcg@10,0.3\n\
                   q2d,ds1,llm1,recall@100,0.9\n";
        let grid = ScoreGrid::from_csv_str(csv, "ndcg@10", "test").unwrap();
        assert_eq!(grid.methods(), vec!["genqr", "q2d"]);
        grid.complete().unwrap();
        assert_eq!(grid.get("q2d", "ds2", "llm1"), Some(0.6));
        let mut incomplete = grid.clone();
        incomplete.insert("mugi", "ds1", "llm1", 0.2);
        assert!(matches!(
            incomplete.complete(),
            Err(StabilityError::IncompleteGrid(1, _))
        ));
    }
}
