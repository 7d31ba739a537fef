use nalgebra::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::certificate::CertificateVerdict;
use super::record::{ExperimentRecord, RecordMeta};
use crate::channels::{CoeffMatrix, RandomChannel};
use crate::error::{Error, Result};
use crate::fields;
use crate::free_words::{coefficient_element, triple_norm_bound};
use crate::free_words::{GroupAlgebraElement, Word, DEFAULT_SUPPORT_CAP};
use crate::haar::{sample_haar_unitary, sample_tuple, Seed, UnitaryTuple};
use crate::linalg::{trace, CMatrix, SpectralNormMethod};
use crate::spectral_opt::von_neumann_entropy;
use crate::spectral_opt::{
    maximize_l2_distance, maximize_output_sup_norm, minimize_output_entropy, OptConfig, OptResult,
};

/// Stream offsets under a cell's master seed.
pub mod streams {
    /// Unitary `i` of a tuple uses `TUPLE + i`.
    pub const TUPLE: u64 = 0;
    /// Random coefficient matrices.
    pub const COEFFICIENTS: u64 = 1 << 32;
    /// Optimiser start `s` uses `OPTIMIZER + s`.
    pub const OPTIMIZER: u64 = 1 << 40;
}

/// Relative slack granted to asymptotic bounds at finite `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SlackPolicy {
    pub at_256: f64,
    pub at_512: f64,
}

impl Default for SlackPolicy {
    fn default() -> Self {
        Self {
            at_256: 0.15,
            at_512: 0.10,
        }
    }
}

impl SlackPolicy {
    /// `None` below `n = 256`, where asymptotic bounds are recorded only.
    pub fn for_n(&self, n: usize) -> Option<f64> {
        if n >= 512 {
            Some(self.at_512)
        } else if n >= 256 {
            Some(self.at_256)
        } else {
            None
        }
    }
}

/// An assertion made by a run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Common surface of every run result.
pub trait Outcome {
    fn name(&self) -> &'static str;
    fn records(&self, meta: &RecordMeta) -> Vec<ExperimentRecord>;
    fn checks(&self) -> Vec<Check>;
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    Ok(())
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidDimension("n must be at least 1".into()));
    }
    Ok(())
}

fn check_seeds(seeds: &[u64]) -> Result<()> {
    if seeds.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one seed is required".into(),
        ));
    }
    Ok(())
}

/// Haar tuple of `k` unitaries for a cell; `k = 1` is allowed here.
pub fn cell_tuple(n: usize, k: usize, seed: u64) -> Result<UnitaryTuple<f64>> {
    tuple_from(n, k, Seed::new(seed, streams::TUPLE))
}

fn tuple_from(n: usize, k: usize, base: Seed) -> Result<UnitaryTuple<f64>> {
    check_k(k)?;
    if k == 1 {
        UnitaryTuple::from_matrices(vec![sample_haar_unitary(n, base)?])
    } else {
        sample_tuple(n, k, base)
    }
}

fn cell_channel(n: usize, k: usize, seed: u64) -> Result<RandomChannel<f64>> {
    Ok(RandomChannel::new(cell_tuple(n, k, seed)?))
}

fn cell_opt_config(cfg: &OptConfig, seed: u64) -> OptConfig {
    OptConfig {
        seed: Seed::new(seed, streams::OPTIMIZER),
        ..cfg.clone()
    }
}

fn sum_of_generators(k: usize) -> GroupAlgebraElement<f64> {
    GroupAlgebraElement::from_terms(
        k,
        (1..=k as i32).map(|i| {
            (
                Word::reduce(&[i], k).expect("generator index is valid"),
                Complex::new(1.0, 0.0),
            )
        }),
    )
    .expect("generators form a valid element")
}

fn opt_summary(res: &OptResult<f64>) -> (usize, usize) {
    (
        res.converged_flags.iter().filter(|&&c| c).count(),
        res.iterations_used.iter().sum(),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KestenCell {
    pub n: usize,
    pub seed: u64,
    pub norm: f64,
}

/// `‖U_1 + ... + U_k‖` across sizes and seeds, with the free-group bracket.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KestenSweep {
    pub k: usize,
    /// Operator norm of the limit: `2 sqrt(k-1)` for `k >= 2`, 1 for `k = 1`.
    pub free_limit: f64,
    pub bracket_lower: f64,
    /// Moment order actually used for `bracket_lower`.
    pub bracket_order: usize,
    pub bracket_upper: f64,
    pub cells: Vec<KestenCell>,
}

pub const KESTEN_MOMENT_ORDER: usize = 20;

pub fn run_kesten_sweep(k: usize, n_list: &[usize], seeds: &[u64]) -> Result<KestenSweep> {
    check_k(k)?;
    check_seeds(seeds)?;
    if n_list.is_empty() {
        return Err(Error::InvalidParameter("n list is empty".into()));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "n list must be strictly ascending".into(),
        ));
    }
    n_list.iter().try_for_each(|&n| check_n(n))?;

    let f = sum_of_generators(k);
    let (bracket_lower, bracket_order) =
        f.norm_lower_bound_within(KESTEN_MOMENT_ORDER, DEFAULT_SUPPORT_CAP);
    let grid: Vec<(usize, u64)> = n_list
        .iter()
        .flat_map(|&n| seeds.iter().map(move |&s| (n, s)))
        .collect();
    let cells = grid
        .par_iter()
        .map(|&(n, seed)| {
            let tuple = cell_tuple(n, k, seed)?;
            let sum = tuple
                .matrices()
                .iter()
                .skip(1)
                .fold(tuple.matrices()[0].clone(), |acc, u| acc + u);
            let norm = crate::linalg::spectral_norm(&sum, SpectralNormMethod::dense_only())?;
            Ok(KestenCell { n, seed, norm })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KestenSweep {
        k,
        free_limit: if k == 1 {
            1.0
        } else {
            2.0 * ((k - 1) as f64).sqrt()
        },
        bracket_lower,
        bracket_order,
        bracket_upper: f.haagerup_bound(),
        cells,
    })
}

impl KestenSweep {
    pub fn norms_at(&self, n: usize) -> Vec<f64> {
        self.cells
            .iter()
            .filter(|c| c.n == n)
            .map(|c| c.norm)
            .collect()
    }

    pub fn median_norm(&self, n: usize) -> f64 {
        median(&self.norms_at(n))
    }

    /// Median of `|‖Σ U_i‖ - free_limit|` at size `n`.
    pub fn median_abs_deviation(&self, n: usize) -> f64 {
        let dev: Vec<f64> = self
            .norms_at(n)
            .iter()
            .map(|x| (x - self.free_limit).abs())
            .collect();
        median(&dev)
    }
}

impl Outcome for KestenSweep {
    fn name(&self) -> &'static str {
        "kesten"
    }

    fn records(&self, meta: &RecordMeta) -> Vec<ExperimentRecord> {
        self.cells
            .iter()
            .map(|c| {
                ExperimentRecord::new(
                    self.name(),
                    fields! { "k" => self.k, "n" => c.n, "seed" => c.seed },
                    fields! {
                        "norm" => c.norm,
                        "free_limit" => self.free_limit,
                        "abs_deviation" => (c.norm - self.free_limit).abs(),
                        "bracket_lower" => self.bracket_lower,
                        "bracket_order" => self.bracket_order,
                        "bracket_upper" => self.bracket_upper,
                    },
                    meta,
                )
            })
            .collect()
    }

    fn checks(&self) -> Vec<Check> {
        let kf = self.k as f64;
        let worst = self.cells.iter().map(|c| c.norm).fold(0.0, f64::max);
        vec![
            Check::new(
                "norm <= k",
                worst <= kf + 1e-9,
                format!("largest norm {worst:.6}, k = {}", self.k),
            ),
            Check::new(
                "bracket ordered",
                self.bracket_lower <= self.bracket_upper + 1e-9,
                format!(
                    "[{:.6}, {:.6}] at order {}",
                    self.bracket_lower, self.bracket_upper, self.bracket_order
                ),
            ),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WordMean {
    pub word: Vec<i32>,
    pub tau: f64,
    pub mean_re: f64,
    pub mean_im: f64,
}

impl WordMean {
    pub fn abs_error(&self) -> f64 {
        Complex::new(self.mean_re - self.tau, self.mean_im).norm()
    }
}

/// Sample means of `n^{-1} Tr w(U_1, ..., U_k)` against `τ(w)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistributionCheck {
    pub k: usize,
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub asserted: bool,
    pub words: Vec<WordMean>,
}

pub const MAX_CHECKED_WORD_LEN: usize = 6;

/// `w(U_1, ..., U_k)` with `u_i -> U_i` and `u_i^{-1} -> U_i^*`.
pub fn evaluate_word(word: &Word, tuple: &UnitaryTuple<f64>) -> CMatrix<f64> {
    let n = tuple.dim_n();
    word.letters()
        .iter()
        .fold(CMatrix::identity(n, n), |acc, &l| {
            let u = &tuple.matrices()[l.unsigned_abs() as usize - 1];
            if l > 0 {
                acc * u
            } else {
                acc * u.adjoint()
            }
        })
}

/// Sample `s` uses the tuple streams starting at `s k`.
pub fn run_distribution_check(
    k: usize,
    n: usize,
    words: &[Word],
    samples: usize,
    seed: u64,
    tolerance: f64,
    slack: &SlackPolicy,
) -> Result<DistributionCheck> {
    check_k(k)?;
    check_n(n)?;
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be positive".into()));
    }
    for w in words {
        if w.len() > MAX_CHECKED_WORD_LEN {
            return Err(Error::InvalidParameter(format!(
                "word {:?} is longer than {MAX_CHECKED_WORD_LEN}",
                w.letters()
            )));
        }
        Word::reduce(w.letters(), k)?;
    }
    let traces: Vec<Vec<Complex<f64>>> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let base = Seed::new(seed, streams::TUPLE + (s * k) as u64);
            let tuple = tuple_from(n, k, base)?;
            Ok(words
                .iter()
                .map(|w| trace(&evaluate_word(w, &tuple)) / n as f64)
                .collect())
        })
        .collect::<Result<_>>()?;
    let words = words
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let sum: Complex<f64> = traces.iter().map(|t| t[i]).sum();
            let mean = sum / samples as f64;
            let tau = if w.is_identity() { 1.0 } else { 0.0 };
            WordMean {
                word: w.letters().to_vec(),
                tau,
                mean_re: mean.re,
                mean_im: mean.im,
            }
        })
        .collect();
    Ok(DistributionCheck {
        k,
        n,
        samples,
        seed,
        tolerance,
        asserted: slack.for_n(n).is_some(),
        words,
    })
}

impl Outcome for DistributionCheck {
    fn name(&self) -> &'static str {
        "distribution"
    }

    fn records(&self, meta: &RecordMeta) -> Vec<ExperimentRecord> {
        self.words
            .iter()
            .map(|w| {
                ExperimentRecord::new(
                    self.name(),
                    fields! {
                        "k" => self.k,
                        "n" => self.n,
                        "seed" => self.seed,
                        "samples" => self.samples,
                        "word" => w.word,
                        "tolerance" => self.tolerance,
                    },
                    fields! {
                        "tau" => w.tau,
                        "mean_re" => w.mean_re,
                        "mean_im" => w.mean_im,
                        "abs_error" => w.abs_error(),
                    },
                    meta,
                )
            })
            .collect()
    }

    fn checks(&self) -> Vec<Check> {
        self.words
            .iter()
            .filter(|w| self.asserted || w.word.is_empty())
            .map(|w| {
                let tol = if w.word.is_empty() {
                    1e-12
                } else {
                    self.tolerance
                };
                Check::new(
                    format!("word {:?}", w.word),
                    w.abs_error() < tol,
                    format!("|mean - tau| = {:.3e}, tolerance {tol:.1e}", w.abs_error()),
                )
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoeffKind {
    Traceless,
    General,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapCell {
    pub seed: u64,
    pub index: usize,
    pub kind: CoeffKind,
    pub hs_norm: f64,
    pub empirical: f64,
    pub bound: f64,
    pub lower: f64,
}

/// Empirical `‖Φ^*(A)‖` against the free bracket `[lower, bound]` of `|||A|||`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HaagerupGap {
    pub k: usize,
    pub n: usize,
    pub moment_order: usize,
    pub slack: Option<f64>,
    pub lower_tolerance: f64,
    pub cells: Vec<GapCell>,
}

/// Relative shortfall below the moment lower bound that is still accepted.
pub const GAP_LOWER_TOLERANCE: f64 = 0.2;

/// For every seed, `num_matrices` traceless and `num_matrices` general
/// Gaussian coefficient matrices. Matrix `i` of kind `t` (0 traceless,
/// 1 general) uses coefficient stream `2i + t`.
pub fn run_haagerup_gap(
    k: usize,
    n: usize,
    num_matrices: usize,
    seeds: &[u64],
    moment_order: usize,
    slack: &SlackPolicy,
) -> Result<HaagerupGap> {
    check_k(k)?;
    check_n(n)?;
    check_seeds(seeds)?;
    if moment_order == 0 {
        return Err(Error::InvalidParameter(
            "moment order must be positive".into(),
        ));
    }
    let per_seed = seeds
        .par_iter()
        .map(|&seed| {
            let channel = cell_channel(n, k, seed)?;
            let mut cells = Vec::with_capacity(2 * num_matrices);
            for index in 0..num_matrices {
                for (t, kind) in [CoeffKind::Traceless, CoeffKind::General]
                    .into_iter()
                    .enumerate()
                {
                    let mut rng =
                        Seed::new(seed, streams::COEFFICIENTS + (2 * index + t) as u64).rng();
                    let a = match kind {
                        CoeffKind::Traceless => CoeffMatrix::random_traceless(k, &mut rng),
                        CoeffKind::General => CoeffMatrix::random(k, &mut rng),
                    };
                    let (lower, _) = coefficient_element(&a)
                        .norm_lower_bound_within(moment_order, DEFAULT_SUPPORT_CAP);
                    cells.push(GapCell {
                        seed,
                        index,
                        kind,
                        hs_norm: a.hs_norm(),
                        empirical: channel.empirical_triple_norm(&a)?,
                        bound: triple_norm_bound(&a, k)?,
                        lower,
                    });
                }
            }
            Ok(cells)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HaagerupGap {
        k,
        n,
        moment_order,
        slack: slack.for_n(n),
        lower_tolerance: GAP_LOWER_TOLERANCE,
        cells: per_seed.into_iter().flatten().collect(),
    })
}

impl Outcome for HaagerupGap {
    fn name(&self) -> &'static str {
        "haagerup_gap"
    }

    fn records(&self, meta: &RecordMeta) -> Vec<ExperimentRecord> {
        self.cells
            .iter()
            .map(|c| {
                ExperimentRecord::new(
                    self.name(),
                    fields! {
                        "k" => self.k,
                        "n" => self.n,
                        "seed" => c.seed,
                        "index" => c.index,
                        "kind" => c.kind,
                        "moment_order" => self.moment_order,
                        "slack" => self.slack,
                    },
                    fields! {
                        "hs_norm" => c.hs_norm,
                        "empirical_triple_norm" => c.empirical,
                        "triple_norm_bound" => c.bound,
                        "bracket_lower" => c.lower,
                        "ratio_to_bound" => c.empirical / c.bound,
                    },
                    meta,
                )
            })
            .collect()
    }

    fn checks(&self) -> Vec<Check> {
        let mut checks = vec![{
            let bad = self
                .cells
                .iter()
                .filter(|c| c.lower > c.bound + 1e-9)
                .count();
            Check::new(
                "bracket ordered",
                bad == 0,
                format!("{bad} of {} cells with lower > bound", self.cells.len()),
            )
        }];
        if let Some(s) = self.slack {
            let above = self
                .cells
                .iter()
                .filter(|c| c.empirical > c.bound * (1.0 + s))
                .count();
            let below = self
                .cells
                .iter()
                .filter(|c| c.empirical < c.lower * (1.0 - self.lower_tolerance))
                .count();
            checks.push(Check::new(
                "empirical <= bound (1 + slack)",
                above == 0,
                format!("{above} of {} cells above, slack {s}", self.cells.len()),
            ));
            checks.push(Check::new(
                "empirical >= lower (1 - tolerance)",
                below == 0,
                format!("{below} of {} cells below", self.cells.len()),
            ));
        }
        checks
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptCell {
    pub seed: u64,
    pub best: f64,
    pub best_start: usize,
    pub converged_starts: usize,
    pub total_iterations: usize,
}

fn opt_cell(seed: u64, res: &OptResult<f64>) -> OptCell {
    let (converged_starts, total_iterations) = opt_summary(res);
    OptCell {
        seed,
        best: res.best_value,
        best_start: res.best_start,
        converged_starts,
        total_iterations,
    }
}

/// Largest `‖Φ(ψψ^*) - I/k‖_2` found per seed against `3/k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MainEstimate {
    pub k: usize,
    pub n: usize,
    pub starts: usize,
    pub max_iters: usize,
    pub limit_bound: f64,
    pub slack: Option<f64>,
    pub cells: Vec<OptCell>,
}

pub fn run_main_estimate(
    k: usize,
    n: usize,
    cfg: &OptConfig,
    seeds: &[u64],
    slack: &SlackPolicy,
) -> Result<MainEstimate> {
    check_k(k)?;
    check_n(n)?;
    check_seeds(seeds)?;
    let cells = seeds
        .par_iter()
        .map(|&seed| {
            let channel = cell_channel(n, k, seed)?;
            Ok(opt_cell(
                seed,
                &maximize_l2_distance(&channel, &cell_opt_config(cfg, seed)),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MainEstimate {
        k,
        n,
        starts: cfg.starts,
        max_iters: cfg.max_iters,
        limit_bound: 3.0 / k as f64,
        slack: slack.for_n(n),
        cells,
    })
}

impl MainEstimate {
    /// `3/k (1 + slack)`, or `None` when there is no slack at this `n` or the
    /// threshold exceeds the largest possible distance `sqrt(1 - 1/k)`.
    pub fn asserted_threshold(&self) -> Option<f64> {
        let t = self.limit_bound * (1.0 + self.slack?);
        (t < (1.0 - 1.0 / self.k as f64).sqrt()).then_some(t)
    }
}

impl Outcome for MainEstimate {
    fn name(&self) -> &'static str {
        "main_estimate"
    }

    fn records(&self, meta: &RecordMeta) -> Vec<ExperimentRecord> {
        self.cells
            .iter()
            .map(|c| {
                ExperimentRecord::new(
                    self.name(),
                    fields! {
                        "k" => self.k,
                        "n" => self.n,
                        "seed" => c.seed,
                        "starts" => self.starts,
                        "max_iters" => self.max_iters,
                        "slack" => self.slack,
                    },
                    fields! {
                        "best_l2_distance" => c.best,
                        "best_start" => c.best_start,
                        "converged_starts" => c.converged_starts,
                        "total_iterations" => c.total_iterations,
                        "limit_bound" => self.limit_bound,
                        "asserted_threshold" => self.asserted_threshold(),
                    },
                    meta,
                )
            })
            .collect()
    }

    fn checks(&self) -> Vec<Check> {
        let Some(t) = self.asserted_threshold() else {
            return Vec::new();
        };
        self.cells
            .iter()
            .map(|c| {
                Check::new(
                    format!("seed {} best <= 3/k (1 + slack)", c.seed),
                    c.best <= t,
                    format!("{:.6} vs {t:.6}", c.best),
                )
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MoeCell {
    pub seed: u64,
    pub entropy: OptCell,
    pub sup_norm: OptCell,
}

/// Minimum output entropy and largest complementary output norm per seed,
/// against `ln k - 9/k` and `4(k-1)/k^2`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MoeSweep {
    pub k: usize,
    pub n: usize,
    pub starts: usize,
    pub max_iters: usize,
    pub entropy_bound: f64,
    pub sup_norm_limit: f64,
    pub slack: Option<f64>,
    pub cells: Vec<MoeCell>,
}

pub fn run_moe(
    k: usize,
    n: usize,
    cfg: &OptConfig,
    seeds: &[u64],
    slack: &SlackPolicy,
) -> Result<MoeSweep> {
    check_k(k)?;
    check_n(n)?;
    check_seeds(seeds)?;
    let cells = seeds
        .par_iter()
        .map(|&seed| {
            let channel = cell_channel(n, k, seed)?;
            let cell_cfg = cell_opt_config(cfg, seed);
            Ok(MoeCell {
                seed,
                entropy: opt_cell(seed, &minimize_output_entropy(&channel, &cell_cfg)),
                sup_norm: opt_cell(seed, &maximize_output_sup_norm(&channel, &cell_cfg)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let kf = k as f64;
    Ok(MoeSweep {
        k,
        n,
        starts: cfg.starts,
        max_iters: cfg.max_iters,
        entropy_bound: kf.ln() - 9.0 / kf,
        sup_norm_limit: 4.0 * (kf - 1.0) / (kf * kf),
        slack: slack.for_n(n),
        cells,
    })
}

impl Outcome for MoeSweep {
    fn name(&self) -> &'static str {
        "moe"
    }

    fn records(&self, meta: &RecordMeta) -> Vec<ExperimentRecord> {
        self.cells
            .iter()
            .map(|c| {
                ExperimentRecord::new(
                    self.name(),
                    fields! {
                        "k" => self.k,
                        "n" => self.n,
                        "seed" => c.seed,
                        "starts" => self.starts,
                        "max_iters" => self.max_iters,
                        "slack" => self.slack,
                    },
                    fields! {
                        "min_entropy" => c.entropy.best,
                        "entropy_converged_starts" => c.entropy.converged_starts,
                        "entropy_bound" => self.entropy_bound,
                        "max_sup_norm" => c.sup_norm.best,
                        "sup_norm_converged_starts" => c.sup_norm.converged_starts,
                        "sup_norm_limit" => self.sup_norm_limit,
                    },
                    meta,
                )
            })
            .collect()
    }

    fn checks(&self) -> Vec<Check> {
        let inv_k = 1.0 / self.k as f64;
        let mut checks: Vec<Check> = self
            .cells
            .iter()
            .map(|c| {
                Check::new(
                    format!("seed {} sup norm >= 1/k", c.seed),
                    c.sup_norm.best >= inv_k - 1e-12,
                    format!("{:.6}", c.sup_norm.best),
                )
            })
            .collect();
        let Some(s) = self.slack else {
            return checks;
        };
        let kf = self.k as f64;
        // The entropy slack applies to the 9/k deficit.
        let entropy_floor = kf.ln() - 9.0 / kf * (1.0 + s);
        let sup_ceiling = self.sup_norm_limit * (1.0 + s);
        for c in &self.cells {
            if entropy_floor > 0.0 {
                checks.push(Check::new(
                    format!("seed {} entropy >= ln k - 9/k (1 + slack)", c.seed),
                    c.entropy.best >= entropy_floor,
                    format!("{:.6} vs {entropy_floor:.6}", c.entropy.best),
                ));
            }
            if sup_ceiling < 1.0 {
                checks.push(Check::new(
                    format!("seed {} sup norm <= 4(k-1)/k^2 (1 + slack)", c.seed),
                    c.sup_norm.best <= sup_ceiling,
                    format!("{:.6} vs {sup_ceiling:.6}", c.sup_norm.best),
                ));
            }
        }
        checks
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProductCell {
    pub seed: u64,
    pub entropy: f64,
    pub overlap: f64,
}

/// Entropy of `(Φ ⊗ Φ̄)(|Ω><Ω|)` against `2 ln k - ln k / k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProductBound {
    pub k: usize,
    pub n: usize,
    pub bound: f64,
    pub cells: Vec<ProductCell>,
}

pub const OVERLAP_TOLERANCE: f64 = 1e-10;

/// `<Ω_k| C |Ω_k>` for a `k^2 x k^2` matrix indexed by `i k + i'`.
pub fn bell_overlap(c: &CMatrix<f64>, k: usize) -> f64 {
    let mut sum = Complex::new(0.0, 0.0);
    for i in 0..k {
        for j in 0..k {
            sum += c[(i * (k + 1), j * (k + 1))];
        }
    }
    sum.re / k as f64
}

pub fn run_product_bound(k: usize, n: usize, seeds: &[u64]) -> Result<ProductBound> {
    check_k(k)?;
    check_n(n)?;
    check_seeds(seeds)?;
    let cells = seeds
        .par_iter()
        .map(|&seed| {
            let out = cell_channel(n, k, seed)?.bell_output();
            Ok(ProductCell {
                seed,
                entropy: von_neumann_entropy(&out)?,
                overlap: bell_overlap(out.matrix(), k),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let log_k = (k as f64).ln();
    Ok(ProductBound {
        k,
        n,
        bound: 2.0 * log_k - log_k / k as f64,
        cells,
    })
}

impl Outcome for ProductBound {
    fn name(&self) -> &'static str {
        "product_bound"
    }

    fn records(&self, meta: &RecordMeta) -> Vec<ExperimentRecord> {
        self.cells
            .iter()
            .map(|c| {
                ExperimentRecord::new(
                    self.name(),
                    fields! { "k" => self.k, "n" => self.n, "seed" => c.seed },
                    fields! {
                        "bell_entropy" => c.entropy,
                        "bell_overlap" => c.overlap,
                        "product_upper" => self.bound,
                    },
                    meta,
                )
            })
            .collect()
    }

    fn checks(&self) -> Vec<Check> {
        let inv_k = 1.0 / self.k as f64;
        let mut checks = Vec::new();
        for c in &self.cells {
            checks.push(Check::new(
                format!("seed {} overlap = 1/k", c.seed),
                (c.overlap - inv_k).abs() <= OVERLAP_TOLERANCE,
                format!("{:.3e} off", (c.overlap - inv_k).abs()),
            ));
            if self.k >= 3 {
                checks.push(Check::new(
                    format!("seed {} entropy <= 2 ln k - ln k / k", c.seed),
                    c.entropy <= self.bound,
                    format!("{:.6} vs {:.6}", c.entropy, self.bound),
                ));
            }
        }
        checks
    }
}

/// One verdict per seed, from a real channel.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateRun {
    pub starts: usize,
    pub max_iters: usize,
    pub verdicts: Vec<(u64, CertificateVerdict)>,
}

pub fn run_certificate(
    k: usize,
    n: usize,
    cfg: &OptConfig,
    seeds: &[u64],
) -> Result<CertificateRun> {
    check_k(k)?;
    check_n(n)?;
    check_seeds(seeds)?;
    let verdicts = seeds
        .par_iter()
        .map(|&seed| {
            let channel = cell_channel(n, k, seed)?;
            let s_hat = maximize_l2_distance(&channel, &cell_opt_config(cfg, seed)).best_value;
            let bell = von_neumann_entropy(&channel.bell_output())?;
            Ok((
                seed,
                CertificateVerdict::evaluate(k as u64, Some(n), s_hat, Some(bell)),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CertificateRun {
        starts: cfg.starts,
        max_iters: cfg.max_iters,
        verdicts,
    })
}

impl Outcome for CertificateRun {
    fn name(&self) -> &'static str {
        "certificate"
    }

    fn records(&self, meta: &RecordMeta) -> Vec<ExperimentRecord> {
        self.verdicts
            .iter()
            .map(|(seed, v)| {
                ExperimentRecord::new(
                    self.name(),
                    fields! {
                        "k" => v.k,
                        "n" => v.n,
                        "seed" => seed,
                        "starts" => self.starts,
                        "max_iters" => self.max_iters,
                    },
                    fields! {
                        "s_hat" => v.s_hat,
                        "single_lower" => v.single_lower,
                        "product_upper" => v.product_upper,
                        "bell_entropy" => v.bell_entropy,
                        "margin" => v.margin,
                        "violation" => v.violation,
                    },
                    meta,
                )
            })
            .collect()
    }

    fn checks(&self) -> Vec<Check> {
        self.verdicts
            .iter()
            .map(|(seed, v)| {
                Check::new(
                    format!("seed {seed} fields finite"),
                    v.is_finite(),
                    format!("margin {:.6}", v.margin),
                )
            })
            .collect()
    }
}
