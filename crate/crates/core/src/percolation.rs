//! Monte Carlo bond percolation over an [`EntangledGraph`].
//!
//! A trial converts every bond independently and measures the giant connected
//! component (GCC) as the largest cluster over the node count (or, optionally,
//! over the nodes still taking part after pre-processing). Converted directed edges join their endpoints regardless of
//! direction.
//!
//! Each trial draws from its own stream keyed by `(seed, point, trial)`, so a
//! sweep is reproducible bit for bit whatever the number of worker threads.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::graph::{EntangledGraph, GhzTriple, NodeId};
use crate::rng::{trial_stream, Stream};
use crate::union_find::UnionFind;

/// How an antiparallel pair of directed edges converts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BidirectionalRule {
    /// Each directed edge is its own trial.
    Independent,
    /// `u -> v` and `v -> u` form one trial with probability `1 - (1 - p)^2`.
    #[default]
    Doubled,
}

/// Denominator of the GCC fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GccNormalization {
    /// Every node of the graph.
    #[default]
    AllNodes,
    /// Nodes that still hold entanglement or were never measured.
    Participants,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PercolationConfig {
    pub p_values: Vec<f64>,
    pub trials_per_point: usize,
    pub seed: u64,
    pub bidirectional_rule: BidirectionalRule,
    pub ghz_edges: Vec<GhzTriple>,
    pub normalization: GccNormalization,
    /// Reuse one uniform draw per bond across all sweep points.
    pub coupled: bool,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("p values must be strictly increasing inside [0, 1]")]
    BadGrid,
    #[error("trials per point must be positive")]
    NoTrials,
    #[error("grid step must be positive")]
    BadStep,
}

impl PercolationConfig {
    pub fn new(p_values: Vec<f64>, trials_per_point: usize, seed: u64) -> Result<Self, ConfigError> {
        let cfg = Self {
            p_values,
            trials_per_point,
            seed,
            bidirectional_rule: BidirectionalRule::default(),
            ghz_edges: Vec::new(),
            normalization: GccNormalization::default(),
            coupled: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.trials_per_point == 0 {
            return Err(ConfigError::NoTrials);
        }
        let in_range = self.p_values.iter().all(|p| (0.0..=1.0).contains(p));
        let increasing = self.p_values.windows(2).all(|w| w[0] < w[1]);
        if self.p_values.is_empty() || !in_range || !increasing {
            return Err(ConfigError::BadGrid);
        }
        Ok(())
    }
}

/// `0, step, 2 step, ..., 1` with the endpoint included.
pub fn uniform_grid(step: f64) -> Result<Vec<f64>, ConfigError> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(ConfigError::BadStep);
    }
    let count = (1.0 / step).round() as usize;
    let mut grid: Vec<f64> = (0..=count).map(|i| (i as f64 * step).min(1.0)).collect();
    grid.dedup();
    if *grid.last().unwrap() < 1.0 {
        grid.push(1.0);
    }
    Ok(grid)
}

/// One conversion unit: a (possibly doubled) edge or a GHZ triple.
#[derive(Debug, Clone, Copy)]
struct Bond {
    nodes: [u32; 3],
    arity: u8,
    copies: i32,
    native: f64,
}

impl Bond {
    fn probability(&self, p_override: Option<f64>) -> f64 {
        match p_override {
            Some(p) => 1.0 - (1.0 - p).powi(self.copies),
            None => self.native,
        }
    }
}

/// Bond list prepared once per graph and reused across trials.
#[derive(Debug, Clone)]
pub struct Percolator {
    node_count: usize,
    denominator: usize,
    bonds: Vec<Bond>,
}

impl Percolator {
    pub fn new(
        g: &EntangledGraph,
        rule: BidirectionalRule,
        extra_ghz: &[GhzTriple],
        normalization: GccNormalization,
    ) -> Self {
        let mut bonds = Vec::with_capacity(g.edge_count());
        if g.is_directed() && rule == BidirectionalRule::Doubled {
            // pair u -> v copies with v -> u copies, leftovers stay single
            let mut by_pair: BTreeMap<(NodeId, NodeId), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
            for e in g.edges() {
                let key = (e.source.min(e.target), e.source.max(e.target));
                let slot = by_pair.entry(key).or_default();
                if e.source < e.target {
                    slot.0.push(e.state.scp());
                } else {
                    slot.1.push(e.state.scp());
                }
            }
            for ((u, v), (fwd, back)) in by_pair {
                let paired = fwd.len().min(back.len());
                for i in 0..paired {
                    bonds.push(Bond {
                        nodes: [u as u32, v as u32, 0],
                        arity: 2,
                        copies: 2,
                        native: 1.0 - (1.0 - fwd[i]) * (1.0 - back[i]),
                    });
                }
                for &s in fwd[paired..].iter().chain(&back[paired..]) {
                    bonds.push(Bond {
                        nodes: [u as u32, v as u32, 0],
                        arity: 2,
                        copies: 1,
                        native: s,
                    });
                }
            }
        } else {
            for e in g.edges() {
                bonds.push(Bond {
                    nodes: [e.source as u32, e.target as u32, 0],
                    arity: 2,
                    copies: 1,
                    native: e.state.scp(),
                });
            }
        }
        for t in g.ghz_triples().iter().chain(extra_ghz) {
            bonds.push(Bond {
                nodes: t.nodes.map(|v| v as u32),
                arity: 3,
                copies: 1,
                native: t.scp,
            });
        }
        let denominator = match normalization {
            GccNormalization::Participants => g.participant_count().max(1),
            GccNormalization::AllNodes => g.node_count(),
        };
        Self {
            node_count: g.node_count(),
            denominator,
            bonds,
        }
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    pub fn denominator(&self) -> usize {
        self.denominator
    }

    fn fraction(&self, largest: usize) -> f64 {
        largest as f64 / self.denominator as f64
    }

    /// One trial: every bond converts independently.
    pub fn trial(&self, p_override: Option<f64>, rng: &mut Stream, uf: &mut UnionFind) -> f64 {
        uf.reset();
        for b in &self.bonds {
            if rng.gen::<f64>() < b.probability(p_override) {
                merge(uf, b);
            }
        }
        self.fraction(uf.largest())
    }

    /// GCC fractions for every grid point from a single set of uniform draws.
    pub fn coupled_trial(&self, p_values: &[f64], rng: &mut Stream, uf: &mut UnionFind) -> Vec<f64> {
        let draws: Vec<f64> = self.bonds.iter().map(|_| rng.gen::<f64>()).collect();
        p_values
            .iter()
            .map(|&p| {
                uf.reset();
                for (b, &u) in self.bonds.iter().zip(&draws) {
                    if u < b.probability(Some(p)) {
                        merge(uf, b);
                    }
                }
                self.fraction(uf.largest())
            })
            .collect()
    }

    fn union_find(&self) -> UnionFind {
        UnionFind::new(self.node_count)
    }
}

fn merge(uf: &mut UnionFind, b: &Bond) {
    uf.union(b.nodes[0], b.nodes[1]);
    if b.arity == 3 {
        uf.union(b.nodes[0], b.nodes[2]);
    }
}

/// Single trial on `g`. With `p_override`, every bond uses that conversion
/// probability (doubled pairs `1 - (1 - p)^2`); otherwise each edge uses its
/// own SCP.
pub fn percolate_once(
    g: &EntangledGraph,
    p_override: Option<f64>,
    rule: BidirectionalRule,
    trial_seed: u64,
) -> f64 {
    let perc = Percolator::new(g, rule, &[], GccNormalization::default());
    let mut uf = perc.union_find();
    perc.trial(p_override, &mut trial_stream(trial_seed, 0, 0), &mut uf)
}

/// Largest cluster fraction when exactly the flagged edges (by
/// index into `g.edges()`) and GHZ triples convert. Union-find route.
pub fn gcc_of_outcome(g: &EntangledGraph, edges: &[bool], ghz: &[bool], normalization: GccNormalization) -> f64 {
    let perc = Percolator::new(g, BidirectionalRule::Independent, &[], normalization);
    let mut uf = perc.union_find();
    for (e, _) in g.edges().iter().zip(edges).filter(|(_, &c)| c) {
        uf.union(e.source as u32, e.target as u32);
    }
    for (t, _) in g.ghz_triples().iter().zip(ghz).filter(|(_, &c)| c) {
        uf.union(t.nodes[0] as u32, t.nodes[1] as u32);
        uf.union(t.nodes[0] as u32, t.nodes[2] as u32);
    }
    perc.fraction(uf.largest())
}

/// Breadth-first reference for [`gcc_of_outcome`].
pub fn bfs_gcc_oracle(g: &EntangledGraph, edges: &[bool], ghz: &[bool], normalization: GccNormalization) -> f64 {
    let n = g.node_count();
    let mut adj = vec![Vec::new(); n];
    for (e, _) in g.edges().iter().zip(edges).filter(|(_, &c)| c) {
        adj[e.source].push(e.target);
        adj[e.target].push(e.source);
    }
    for (t, _) in g.ghz_triples().iter().zip(ghz).filter(|(_, &c)| c) {
        let [a, b, c] = t.nodes;
        for (x, y) in [(a, b), (b, c), (a, c)] {
            adj[x].push(y);
            adj[y].push(x);
        }
    }
    let mut seen = vec![false; n];
    let mut best = 0;
    let mut queue = VecDeque::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut size = 0;
        while let Some(v) = queue.pop_front() {
            size += 1;
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        best = best.max(size);
    }
    let denom = match normalization {
        GccNormalization::Participants => g.participant_count().max(1),
        GccNormalization::AllNodes => n,
    };
    best as f64 / denom as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub p: f64,
    pub gcc_mean: f64,
    pub gcc_std: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PercolationCurve {
    pub rows: Vec<CurveRow>,
}

pub const CURVE_HEADER: &str = "p,gcc_mean,gcc_std,trials";

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct CurveParseError {
    pub line: usize,
    pub message: String,
}

/// Mean and sample standard deviation.
fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl PercolationCurve {
    pub fn from_samples(p_values: &[f64], samples: &[Vec<f64>]) -> Self {
        let rows = p_values
            .iter()
            .zip(samples)
            .map(|(&p, xs)| {
                let (gcc_mean, gcc_std) = mean_std(xs);
                CurveRow {
                    p,
                    gcc_mean,
                    gcc_std,
                    trials: xs.len(),
                }
            })
            .collect();
        Self { rows }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CURVE_HEADER);
        out.push('\n');
        for r in &self.rows {
            writeln!(out, "{:.6},{:.6},{:.6},{}", r.p, r.gcc_mean, r.gcc_std, r.trials).unwrap();
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, CurveParseError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, l)) if l.trim() == CURVE_HEADER => {}
            Some((i, _)) => {
                return Err(CurveParseError {
                    line: i + 1,
                    message: format!("expected header `{CURVE_HEADER}`"),
                })
            }
            None => {
                return Err(CurveParseError {
                    line: 1,
                    message: "empty curve file".into(),
                })
            }
        }
        let mut rows = Vec::new();
        for (i, l) in lines {
            let bad = |what: &str| CurveParseError {
                line: i + 1,
                message: format!("invalid {what}"),
            };
            let cols: Vec<&str> = l.trim().split(',').collect();
            if cols.len() != 4 {
                return Err(bad("column count"));
            }
            rows.push(CurveRow {
                p: cols[0].parse().map_err(|_| bad("p"))?,
                gcc_mean: cols[1].parse().map_err(|_| bad("gcc_mean"))?,
                gcc_std: cols[2].parse().map_err(|_| bad("gcc_std"))?,
                trials: cols[3].parse().map_err(|_| bad("trials"))?,
            });
        }
        Ok(Self { rows })
    }
}

/// Runs `trials_per_point` trials at every grid point.
pub fn sweep(g: &EntangledGraph, cfg: &PercolationConfig) -> Result<PercolationCurve, ConfigError> {
    Ok(PercolationCurve::from_samples(&cfg.p_values, &sweep_samples(g, cfg)?))
}

/// Raw GCC samples per grid point, `[point][trial]`.
pub fn sweep_samples(g: &EntangledGraph, cfg: &PercolationConfig) -> Result<Vec<Vec<f64>>, ConfigError> {
    cfg.validate()?;
    let perc = Percolator::new(g, cfg.bidirectional_rule, &cfg.ghz_edges, cfg.normalization);
    let points = cfg.p_values.len();
    let trials = cfg.trials_per_point;
    if cfg.coupled {
        let per_trial: Vec<Vec<f64>> = (0..trials)
            .into_par_iter()
            .map_init(
                || perc.union_find(),
                |uf, t| {
                    let mut rng = trial_stream(cfg.seed, u32::MAX, t as u32);
                    perc.coupled_trial(&cfg.p_values, &mut rng, uf)
                },
            )
            .collect();
        return Ok((0..points).map(|i| per_trial.iter().map(|row| row[i]).collect()).collect());
    }
    let flat: Vec<f64> = (0..points * trials)
        .into_par_iter()
        .map_init(
            || perc.union_find(),
            |uf, k| {
                let (i, t) = (k / trials, k % trials);
                let mut rng = trial_stream(cfg.seed, i as u32, t as u32);
                perc.trial(Some(cfg.p_values[i]), &mut rng, uf)
            },
        )
        .collect();
    Ok(flat.chunks(trials).map(<[f64]>::to_vec).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdMethod {
    /// First crossing of `gcc_mean >= theta`, linearly interpolated.
    GccCrossing { theta: f64 },
    /// Grid point of maximal GCC variance.
    SusceptibilityPeak,
}

impl Default for ThresholdMethod {
    fn default() -> Self {
        ThresholdMethod::GccCrossing { theta: DEFAULT_THETA }
    }
}

pub const DEFAULT_THETA: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThresholdError {
    #[error("no threshold: curve never reaches GCC {0}")]
    NoCrossing(f64),
    #[error("no threshold: GCC variance vanishes on the whole curve")]
    NoFluctuations,
    #[error("empty curve")]
    EmptyCurve,
    #[error("theta {0} outside (0, 1)")]
    BadTheta(f64),
}

pub fn estimate_threshold(curve: &PercolationCurve, method: ThresholdMethod) -> Result<f64, ThresholdError> {
    let rows = &curve.rows;
    if rows.is_empty() {
        return Err(ThresholdError::EmptyCurve);
    }
    match method {
        ThresholdMethod::GccCrossing { theta } => {
            if !(theta > 0.0 && theta < 1.0) {
                return Err(ThresholdError::BadTheta(theta));
            }
            let i = rows
                .iter()
                .position(|r| r.gcc_mean >= theta)
                .ok_or(ThresholdError::NoCrossing(theta))?;
            if i == 0 {
                return Ok(rows[0].p);
            }
            let (lo, hi) = (rows[i - 1], rows[i]);
            let t = (theta - lo.gcc_mean) / (hi.gcc_mean - lo.gcc_mean);
            Ok(lo.p + t * (hi.p - lo.p))
        }
        ThresholdMethod::SusceptibilityPeak => {
            let (best, var) = rows
                .iter()
                .map(|r| r.gcc_std * r.gcc_std)
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
            if var <= 0.0 {
                return Err(ThresholdError::NoFluctuations);
            }
            Ok(rows[best].p)
        }
    }
}
