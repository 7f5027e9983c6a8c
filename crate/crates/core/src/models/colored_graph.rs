//! Monochromatic edge counts of a uniform random `c`-coloring of a fixed
//! graph.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::pair::{CondStats, PairModel};
use crate::stats::{derive_stream, StreamRng};
use crate::targets::TargetLaw;

/// Simple undirected graph as sorted neighbor lists.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    adj: Vec<Vec<u32>>,
    edges: usize,
    complete: bool,
}

impl Graph {
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n < 2 {
            return Err(invalid("a graph needs at least 2 vertices"));
        }
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(invalid(format!("edge ({u}, {v}) out of range for {n} vertices")));
            }
            if u == v {
                return Err(invalid(format!("self-loop at vertex {u}")));
            }
            adj[u].push(v as u32);
            adj[v].push(u as u32);
        }
        for (u, a) in adj.iter_mut().enumerate() {
            a.sort_unstable();
            if a.windows(2).any(|w| w[0] == w[1]) {
                return Err(invalid(format!("repeated edge at vertex {u}")));
            }
        }
        let total: usize = adj.iter().map(Vec::len).sum();
        if total == 0 {
            return Err(invalid("graph has no edges"));
        }
        let complete = adj.iter().all(|a| a.len() == n - 1);
        Ok(Self {
            adj,
            edges: total / 2,
            complete,
        })
    }

    pub fn complete(n: usize) -> Result<Self> {
        let mut e = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for u in 0..n {
            for v in u + 1..n {
                e.push((u, v));
            }
        }
        Self::from_edges(n, &e)
    }

    pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(invalid(format!("edge probability {p} not in (0, 1]")));
        }
        let mut rng = derive_stream(seed, u64::MAX, 2);
        let mut e = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random::<f64>() < p {
                    e.push((u, v));
                }
            }
        }
        Self::from_edges(n, &e)
    }

    /// Random `d`-regular graph by the configuration model, retrying until
    /// the pairing is simple.
    pub fn random_regular(n: usize, d: usize, seed: u64) -> Result<Self> {
        if d == 0 || d >= n || (n * d) % 2 == 1 {
            return Err(invalid(format!("no {d}-regular graph on {n} vertices")));
        }
        let mut rng = derive_stream(seed, u64::MAX, 3);
        let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
        for _ in 0..10_000 {
            stubs.shuffle(&mut rng);
            let pairs: Vec<(usize, usize)> = stubs.chunks(2).map(|c| (c[0], c[1])).collect();
            if let Ok(g) = Self::from_edges(n, &pairs) {
                return Ok(g);
            }
        }
        Err(Error::Construction(format!(
            "no simple {d}-regular pairing found on {n} vertices"
        )))
    }

    /// Edge list, one `u v` pair per line, 0-indexed; `#` starts a comment.
    /// The vertex count is one more than the largest index unless given.
    pub fn parse_edge_list(text: &str, n: Option<usize>) -> Result<Self> {
        let mut e = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace().map(str::parse::<usize>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(u)), Some(Ok(v)), None) => e.push((u, v)),
                _ => {
                    return Err(invalid(format!(
                        "edge list line {}: expected two vertex indices",
                        ln + 1
                    )))
                }
            }
        }
        let max = e.iter().map(|&(u, v)| u.max(v)).max().map_or(0, |m| m + 1);
        Self::from_edges(n.unwrap_or(max).max(max), &e)
    }

    pub fn read_edge_list(path: &Path, n: Option<usize>) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read edge list {}: {e}", path.display())))?;
        Self::parse_edge_list(&text, n)
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.adj[v]
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }
}

/// Graph source in an experiment configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphSpec {
    Complete { n: usize },
    ErdosRenyi { n: usize, p: f64, seed: u64 },
    RandomRegular { n: usize, d: usize, seed: u64 },
    EdgeList { path: String, n: Option<usize> },
    Edges { n: usize, edges: Vec<(usize, usize)> },
}

impl GraphSpec {
    pub fn build(&self) -> Result<Graph> {
        match self {
            GraphSpec::Complete { n } => Graph::complete(*n),
            GraphSpec::ErdosRenyi { n, p, seed } => Graph::erdos_renyi(*n, *p, *seed),
            GraphSpec::RandomRegular { n, d, seed } => Graph::random_regular(*n, *d, *seed),
            GraphSpec::EdgeList { path, n } => Graph::read_edge_list(Path::new(path), *n),
            GraphSpec::Edges { n, edges } => Graph::from_edges(*n, edges),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ColoredGraphModel {
    graph: Graph,
    colors: u32,
    sigma: f64,
    target: TargetLaw,
}

/// Per-vertex sums over the `c` resample outcomes, given the neighbor
/// color counts.
#[derive(Clone, Copy)]
struct Outcomes {
    own: f64,
    sq: f64,
    signed: f64,
    cube: f64,
}

impl ColoredGraphModel {
    pub fn new(graph: Graph, colors: u32) -> Result<Self> {
        if colors < 2 {
            return Err(invalid(format!("need at least 2 colors, got {colors}")));
        }
        let c = colors as f64;
        let sigma = (graph.edge_count() as f64 / c * (1.0 - 1.0 / c)).sqrt();
        Ok(Self {
            graph,
            colors,
            sigma,
            target: TargetLaw::normal(1.0)?,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn colors(&self) -> u32 {
        self.colors
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `√(1/c) + √(d*/m) + √(c/m)` with the absolute constant set to 1.
    pub fn theoretical_bound_factor(&self) -> f64 {
        let c = self.colors as f64;
        let m = self.graph.edge_count() as f64;
        (1.0 / c).sqrt() + (self.graph.max_degree() as f64 / m).sqrt() + (c / m).sqrt()
    }

    fn check(&self, xi: &[u32]) -> Result<()> {
        if xi.len() != self.graph.n() {
            return Err(invalid(format!(
                "coloring has length {}, expected {}",
                xi.len(),
                self.graph.n()
            )));
        }
        if let Some(&bad) = xi.iter().find(|&&v| v >= self.colors) {
            return Err(invalid(format!("color {bad} out of range for {} colors", self.colors)));
        }
        Ok(())
    }

    /// Monochromatic edge count.
    pub fn monochromatic(&self, xi: &[u32]) -> usize {
        (0..self.graph.n())
            .map(|u| {
                self.graph
                    .neighbors(u)
                    .iter()
                    .filter(|&&v| (v as usize) > u && xi[v as usize] == xi[u])
                    .count()
            })
            .sum()
    }

    /// Sums over resample colors `y` of `f(cnt(own) − cnt(y))` for the
    /// moment functions, from the neighbor histogram `hist` (touched
    /// colors only) and the degree.
    fn outcomes(&self, own_count: u32, touched: &[(u32, u32)], degree: usize) -> Outcomes {
        let c = self.colors as usize;
        let o = own_count as f64;
        let mut out = Outcomes {
            own: o - degree as f64 / c as f64,
            sq: 0.0,
            signed: 0.0,
            cube: 0.0,
        };
        // colors absent from the neighborhood contribute f(o) each
        let absent = (c - touched.len()) as f64;
        out.sq += absent * o * o;
        out.signed += absent * o * o;
        out.cube += absent * o * o * o;
        for &(_, k) in touched {
            let d = o - k as f64;
            out.sq += d * d;
            out.signed += d * d.abs();
            out.cube += d * d * d;
        }
        out
    }

    /// Applies `count` independent single-vertex recolorings in turn and
    /// returns `(W, W')`.
    pub fn resample_coordinates(&self, xi: &[u32], rng: &mut StreamRng, count: usize) -> (f64, f64) {
        let w = self.statistic(&xi.to_vec());
        let mut y = xi.to_vec();
        let mut mono = self.monochromatic(&y) as i64;
        for _ in 0..count {
            let i = rng.random_range(0..y.len());
            let new = rng.random_range(0..self.colors);
            let cnt = |col: u32, y: &[u32]| {
                self.graph
                    .neighbors(i)
                    .iter()
                    .filter(|&&v| y[v as usize] == col)
                    .count() as i64
            };
            mono += cnt(new, &y) - cnt(y[i], &y);
            y[i] = new;
        }
        (w, self.w_from_mono(mono as f64))
    }

    fn w_from_mono(&self, mono: f64) -> f64 {
        (mono - self.graph.edge_count() as f64 / self.colors as f64) / self.sigma
    }

    fn stats_general(&self, xi: &[u32]) -> [f64; 4] {
        let mut hist = vec![0u32; self.colors as usize];
        let mut touched: Vec<(u32, u32)> = Vec::new();
        let mut acc = [0.0; 4];
        for u in 0..self.graph.n() {
            for &v in self.graph.neighbors(u) {
                hist[xi[v as usize] as usize] += 1;
            }
            for &v in self.graph.neighbors(u) {
                let col = xi[v as usize];
                if hist[col as usize] > 0 {
                    touched.push((col, hist[col as usize]));
                    hist[col as usize] = 0;
                }
            }
            let own = touched.iter().find(|t| t.0 == xi[u]).map_or(0, |t| t.1);
            let o = self.outcomes(own, &touched, self.graph.degree(u));
            self.accumulate(&mut acc, &o);
            touched.clear();
        }
        acc
    }

    // On K_n the neighborhood of u is everything but u, so the histogram
    // follows from the global color counts.
    fn stats_complete(&self, xi: &[u32]) -> [f64; 4] {
        let c = self.colors as usize;
        let n = self.graph.n();
        let mut global = vec![0u32; c];
        for &v in xi {
            global[v as usize] += 1;
        }
        // multiplicity of each count value among colors
        let mut sorted = global.clone();
        sorted.sort_unstable();
        let mut by_count: Vec<(u32, u32)> = Vec::new();
        for v in sorted {
            match by_count.last_mut() {
                Some(last) if last.0 == v => last.1 += 1,
                _ => by_count.push((v, 1)),
            }
        }
        let mut acc = [0.0; 4];
        let mut cache: Vec<(u32, Outcomes)> = Vec::new();
        for &col in xi {
            let own_global = global[col as usize];
            if let Some((_, o)) = cache.iter().find(|e| e.0 == own_global) {
                self.accumulate(&mut acc, o);
                continue;
            }
            // neighbor counts are the global counts, less one for the own
            // color: Σ_v mult[v] f(o − v) − f(−1) + f(0)
            let own = own_global - 1;
            let o_f = own as f64;
            let mut s = [0.0; 3];
            for &(v, mult) in &by_count {
                let d = o_f - v as f64;
                let m = mult as f64;
                s[0] += m * d * d;
                s[1] += m * d * d.abs();
                s[2] += m * d * d * d;
            }
            s[0] -= 1.0;
            s[1] += 1.0;
            s[2] += 1.0;
            let o = Outcomes {
                own: o_f - (n - 1) as f64 / c as f64,
                sq: s[0],
                signed: s[1],
                cube: s[2],
            };
            self.accumulate(&mut acc, &o);
            cache.push((own_global, o));
        }
        acc
    }

    fn accumulate(&self, acc: &mut [f64; 4], o: &Outcomes) {
        let c = self.colors as f64;
        acc[0] += o.sq / c;
        acc[1] += o.signed / c;
        acc[2] += o.cube / c;
        acc[3] += o.own;
    }
}

impl PairModel for ColoredGraphModel {
    type Config = Vec<u32>;

    fn name(&self) -> &'static str {
        "colored_graph"
    }

    fn params(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.graph.n(),
            "c": self.colors,
            "edges": self.graph.edge_count(),
            "max_degree": self.graph.max_degree(),
        })
    }

    fn n(&self) -> usize {
        self.graph.n()
    }

    fn lambda(&self) -> f64 {
        2.0 / self.graph.n() as f64
    }

    fn target(&self) -> &TargetLaw {
        &self.target
    }

    /// `d*/σ`: recoloring a vertex moves the monochromatic count by at
    /// most its degree.
    fn delta_max(&self) -> Option<f64> {
        Some(self.graph.max_degree() as f64 / self.sigma)
    }

    fn residual_is_zero(&self) -> bool {
        true
    }

    fn sample_config(&self, rng: &mut StreamRng) -> Vec<u32> {
        (0..self.graph.n()).map(|_| rng.random_range(0..self.colors)).collect()
    }

    fn statistic(&self, xi: &Vec<u32>) -> f64 {
        self.w_from_mono(self.monochromatic(xi) as f64)
    }

    fn cond_stats(&self, xi: &Vec<u32>) -> Result<CondStats> {
        self.check(xi)?;
        let acc = if self.graph.is_complete() {
            self.stats_complete(xi)
        } else {
            self.stats_general(xi)
        };
        let nf = self.graph.n() as f64;
        let s = self.sigma;
        let w = self.statistic(xi);
        Ok(CondStats {
            w,
            ed: acc[3] / (nf * s),
            ed2: acc[0] / (nf * s * s),
            edabs: acc[1] / (nf * s * s),
            ed3: acc[2] / (nf * s * s * s),
        })
    }

    fn sample_pair(&self, xi: &Vec<u32>, rng: &mut StreamRng) -> (f64, f64) {
        self.resample_coordinates(xi, rng, 1)
    }
}
