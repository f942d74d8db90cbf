//! Undirected interference networks.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// An undirected simple graph on nodes `0..n`.
///
/// Neighbor lists are sorted and duplicate-free, the adjacency is symmetric
/// and no node is its own neighbor. The value is immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    adjacency: Vec<Vec<usize>>,
}

impl Network {
    /// Graph on `n` nodes with no edges.
    pub fn empty(n: usize) -> Self {
        Network {
            adjacency: vec![Vec::new(); n],
        }
    }

    fn from_sets(sets: Vec<BTreeSet<usize>>) -> Self {
        Network {
            adjacency: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
        }
    }

    /// Builds a network from index pairs. Both orientations and repeated rows
    /// collapse to a single undirected edge.
    pub fn from_edge_list(rows: &[(usize, usize)], n: usize) -> Result<Self> {
        let mut sets = vec![BTreeSet::new(); n];
        for (row, &(i, j)) in rows.iter().enumerate() {
            if i >= n || j >= n {
                return Err(Error::ingestion(
                    row,
                    format!("edge ({i}, {j}) references a node outside 0..{n}"),
                ));
            }
            if i == j {
                return Err(Error::ingestion(row, format!("self-link on node {i}")));
            }
            sets[i].insert(j);
            sets[j].insert(i);
        }
        Ok(Self::from_sets(sets))
    }

    /// Each undirected edge once, as `(i, j)` with `i < j`, in lexicographic order.
    pub fn to_edge_list(&self) -> Vec<(usize, usize)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, nb)| nb.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
            .collect()
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn isolated_count(&self) -> usize {
        self.adjacency.iter().filter(|nb| nb.is_empty()).count()
    }

    pub fn degree_histogram(&self) -> DegreeHistogram {
        DegreeHistogram::from_degrees(self.adjacency.iter().map(Vec::len))
    }

    pub fn summarize(&self) -> DegreeSummary {
        self.degree_histogram().summary()
    }

    /// Checks symmetry, absence of self-links and sortedness. Constructors
    /// uphold these; the check exists for tests and for callers that want to
    /// assert it on foreign data.
    pub fn validate(&self) -> Result<()> {
        for (i, nb) in self.adjacency.iter().enumerate() {
            if nb.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Parameter(format!(
                    "neighbor list of {i} is unsorted or has duplicates"
                )));
            }
            for &j in nb {
                if j == i {
                    return Err(Error::Parameter(format!("self-link on node {i}")));
                }
                if j >= self.n() || self.adjacency[j].binary_search(&i).is_err() {
                    return Err(Error::Parameter(format!("edge {i}-{j} is not symmetric")));
                }
            }
        }
        Ok(())
    }

    /// Reads a `src,dst` CSV edge list. When `n` is `None` the node count is
    /// one more than the largest index seen.
    pub fn read_edge_list_csv<R: Read>(reader: R, n: Option<usize>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let src = headers.iter().position(|h| h == "src");
        let dst = headers.iter().position(|h| h == "dst");
        let (Some(src), Some(dst)) = (src, dst) else {
            return Err(Error::ingestion(None, "edge list header must contain `src,dst`"));
        };
        let mut rows = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            let parse = |col: usize| -> Result<usize> {
                let raw = record.get(col).unwrap_or("");
                raw.parse::<usize>().map_err(|_| {
                    Error::ingestion(row, format!("`{raw}` is not a non-negative node index"))
                })
            };
            rows.push((parse(src)?, parse(dst)?));
        }
        let n = n.unwrap_or_else(|| rows.iter().map(|&(i, j)| i.max(j) + 1).max().unwrap_or(0));
        Self::from_edge_list(&rows, n)
    }

    pub fn write_edge_list_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["src", "dst"])?;
        for (i, j) in self.to_edge_list() {
            wtr.write_record([i.to_string(), j.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Parameters of the Watts–Strogatz generator with an extra edge-deletion
/// stage.
///
/// Plain rewiring keeps one endpoint of every ring edge, so it never isolates
/// a node. Deleting each edge independently afterwards is what produces
/// isolated units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WattsStrogatz {
    pub n: usize,
    /// Ring neighbors per node before rewiring (even).
    pub k: usize,
    /// Per-edge rewiring probability.
    pub beta: f64,
    /// Per-edge deletion probability applied after rewiring.
    pub delete_prob: f64,
}

impl WattsStrogatz {
    /// Calibrated setting: roughly 10% isolated nodes, mean degree 2 and a
    /// maximum degree around 7 at `n = 1000`.
    ///
    /// `k = 6` with full rewiring gives each node 3 kept edges plus about
    /// Poisson(3) incoming ones; keeping each edge with probability 1/3 leaves
    /// an expected degree of exactly 2.
    pub fn calibrated(n: usize) -> Self {
        WattsStrogatz {
            n,
            k: 6,
            beta: 1.0,
            delete_prob: 2.0 / 3.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::Parameter(format!("n = {} must be at least 3", self.n)));
        }
        if !self.k.is_multiple_of(2) || self.k >= self.n {
            return Err(Error::Parameter(format!(
                "k = {} must be even and smaller than n = {}",
                self.k, self.n
            )));
        }
        check_probability("beta", self.beta)?;
        check_probability("delete_prob", self.delete_prob)?;
        Ok(())
    }

    pub fn generate(&self, seed: u64) -> Result<Network> {
        self.validate()?;
        let n = self.n;
        let mut rng = rng_from_seed(seed);
        let mut sets = vec![BTreeSet::new(); n];
        for u in 0..n {
            for j in 1..=self.k / 2 {
                let v = (u + j) % n;
                sets[u].insert(v);
                sets[v].insert(u);
            }
        }
        // Rewire layer by layer; node u keeps its endpoint and the far end is
        // redrawn uniformly among admissible targets.
        for j in 1..=self.k / 2 {
            for u in 0..n {
                let v = (u + j) % n;
                if rng.random::<f64>() >= self.beta {
                    continue;
                }
                if sets[u].len() >= n - 1 || !sets[u].contains(&v) {
                    continue;
                }
                let w = loop {
                    let w = rng.random_range(0..n);
                    if w != u && !sets[u].contains(&w) {
                        break w;
                    }
                };
                sets[u].remove(&v);
                sets[v].remove(&u);
                sets[u].insert(w);
                sets[w].insert(u);
            }
        }
        if self.delete_prob > 0.0 {
            let edges: Vec<(usize, usize)> = sets
                .iter()
                .enumerate()
                .flat_map(|(i, nb)| nb.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
                .collect();
            for (i, j) in edges {
                if rng.random::<f64>() < self.delete_prob {
                    sets[i].remove(&j);
                    sets[j].remove(&i);
                }
            }
        }
        Ok(Network::from_sets(sets))
    }
}

/// G(n, p) with `p = mean_degree / (n - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErdosRenyi {
    pub n: usize,
    pub mean_degree: f64,
}

impl ErdosRenyi {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Parameter(format!("n = {} must be at least 2", self.n)));
        }
        let max = (self.n - 1) as f64;
        if !(self.mean_degree > 0.0 && self.mean_degree <= max) {
            return Err(Error::Parameter(format!(
                "mean degree {} must lie in (0, {max}]",
                self.mean_degree
            )));
        }
        Ok(())
    }

    pub fn link_probability(&self) -> f64 {
        self.mean_degree / (self.n - 1) as f64
    }

    pub fn generate(&self, seed: u64) -> Result<Network> {
        self.validate()?;
        let prob = self.link_probability();
        let mut rng = rng_from_seed(seed);
        let mut adjacency = vec![Vec::new(); self.n];
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if rng.random::<f64>() < prob {
                    adjacency[i].push(j);
                    adjacency[j].push(i);
                }
            }
        }
        // i ascends in the outer loop, so every list is already sorted.
        Ok(Network { adjacency })
    }
}

/// Choice of random-graph generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphGenerator {
    WattsStrogatz {
        k: usize,
        beta: f64,
        delete_prob: f64,
    },
    ErdosRenyi {
        mean_degree: f64,
    },
}

impl GraphGenerator {
    pub fn calibrated() -> Self {
        let ws = WattsStrogatz::calibrated(0);
        GraphGenerator::WattsStrogatz {
            k: ws.k,
            beta: ws.beta,
            delete_prob: ws.delete_prob,
        }
    }

    pub fn generate(&self, n: usize, seed: u64) -> Result<Network> {
        match *self {
            GraphGenerator::WattsStrogatz {
                k,
                beta,
                delete_prob,
            } => WattsStrogatz {
                n,
                k,
                beta,
                delete_prob,
            }
            .generate(seed),
            GraphGenerator::ErdosRenyi { mean_degree } => {
                ErdosRenyi { n, mean_degree }.generate(seed)
            }
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match *self {
            GraphGenerator::WattsStrogatz {
                k,
                beta,
                delete_prob,
            } => WattsStrogatz {
                n,
                k,
                beta,
                delete_prob,
            }
            .validate(),
            GraphGenerator::ErdosRenyi { mean_degree } => ErdosRenyi { n, mean_degree }.validate(),
        }
    }
}

pub(crate) fn check_probability(name: &str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} = {value} must lie in [0, 1]")))
    }
}

/// Empirical degree distribution: degree → number of nodes.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DegreeHistogram {
    counts: BTreeMap<usize, usize>,
}

impl DegreeHistogram {
    pub fn from_degrees(degrees: impl IntoIterator<Item = usize>) -> Self {
        let mut counts = BTreeMap::new();
        for d in degrees {
            *counts.entry(d).or_insert(0) += 1;
        }
        DegreeHistogram { counts }
    }

    /// Builds a histogram from `(degree, count)` pairs; zero counts are dropped.
    pub fn from_counts(pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut counts = BTreeMap::new();
        for (d, c) in pairs {
            if c > 0 {
                *counts.entry(d).or_insert(0) += c;
            }
        }
        DegreeHistogram { counts }
    }

    /// Reads a `degree,count` CSV.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::ingestion(None, format!("histogram file lacks column `{name}`")))
        };
        let (cd, cc) = (col("degree")?, col("count")?);
        let mut pairs = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            let parse = |c: usize, what: &str| -> Result<usize> {
                let v = record.get(c).unwrap_or("");
                v.parse().map_err(|_| Error::ingestion(row, format!("bad {what} `{v}`")))
            };
            pairs.push((parse(cd, "degree")?, parse(cc, "count")?));
        }
        let hist = Self::from_counts(pairs);
        if hist.total() == 0 {
            return Err(Error::ingestion(None, "histogram has no nodes"));
        }
        Ok(hist)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["degree", "count"])?;
        for (d, c) in self.iter() {
            wtr.write_record([d.to_string(), c.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn count(&self, degree: usize) -> usize {
        self.counts.get(&degree).copied().unwrap_or(0)
    }

    /// `(degree, count)` in increasing degree order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.counts.iter().map(|(&d, &c)| (d, c))
    }

    /// `(degree, probability)` over all degrees.
    pub fn pmf(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        let total = self.total() as f64;
        self.iter().map(move |(d, c)| (d, c as f64 / total))
    }

    pub fn max_degree(&self) -> usize {
        self.counts.keys().next_back().copied().unwrap_or(0)
    }

    pub fn positive_count(&self) -> usize {
        self.total() - self.count(0)
    }

    /// Same histogram with the isolated mass removed.
    pub fn positive_part(&self) -> DegreeHistogram {
        DegreeHistogram {
            counts: self
                .counts
                .iter()
                .filter(|(&d, _)| d > 0)
                .map(|(&d, &c)| (d, c))
                .collect(),
        }
    }

    /// E[f(γ)] under the histogram, `None` when empty.
    pub fn mean_of(&self, f: impl Fn(usize) -> f64) -> Option<f64> {
        let total = self.total();
        if total == 0 {
            return None;
        }
        let sum: f64 = self.iter().map(|(d, c)| c as f64 * f(d)).sum();
        Some(sum / total as f64)
    }

    /// E[f(γ) | γ > 0], `None` when every node is isolated.
    pub fn positive_mean_of(&self, f: impl Fn(usize) -> f64) -> Option<f64> {
        self.positive_part().mean_of(f)
    }

    pub fn summary(&self) -> DegreeSummary {
        let n = self.total();
        let nf = n as f64;
        let sum: usize = self.iter().map(|(d, c)| d * c).sum();
        let isolated = self.count(0);
        DegreeSummary {
            n,
            mean_degree: if n == 0 { 0.0 } else { sum as f64 / nf },
            max_degree: self.max_degree(),
            isolated_fraction: if n == 0 { 0.0 } else { isolated as f64 / nf },
            mean_inverse_degree_positive: self.positive_mean_of(|d| 1.0 / d as f64),
            mean_degree_positive: if n > isolated {
                Some(sum as f64 / (n - isolated) as f64)
            } else {
                None
            },
        }
    }
}

/// Degree moments of a network. `None` marks a moment that is undefined
/// because no node has a neighbor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeSummary {
    pub n: usize,
    pub mean_degree: f64,
    pub max_degree: usize,
    /// Share of nodes with degree 0.
    pub isolated_fraction: f64,
    /// E(1/γ | γ > 0).
    pub mean_inverse_degree_positive: Option<f64>,
    /// E(γ | γ > 0).
    pub mean_degree_positive: Option<f64>,
}

impl DegreeSummary {
    /// Pr(γ > 0).
    pub fn p_gamma(&self) -> f64 {
        1.0 - self.isolated_fraction
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net(rows: &[(usize, usize)], n: usize) -> Network {
        Network::from_edge_list(rows, n).unwrap()
    }

    #[test]
    fn ring_without_rewiring_or_deletion() {
        let g = WattsStrogatz {
            n: 10,
            k: 2,
            beta: 0.0,
            delete_prob: 0.0,
        }
        .generate(123)
        .unwrap();
        assert_eq!(g.degrees(), vec![2; 10]);
        assert_eq!(g.edge_count(), 10);
        for i in 0..10 {
            assert!(g.neighbors(i).contains(&((i + 1) % 10)));
        }
    }

    #[test]
    fn full_deletion_isolates_everyone() {
        let g = WattsStrogatz {
            n: 6,
            k: 2,
            beta: 0.0,
            delete_prob: 1.0,
        }
        .generate(9)
        .unwrap();
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.summarize().isolated_fraction, 1.0);
    }

    #[test]
    fn rewiring_preserves_edge_count_and_invariants() {
        let ws = WattsStrogatz {
            n: 200,
            k: 6,
            beta: 0.5,
            delete_prob: 0.0,
        };
        let g = ws.generate(1).unwrap();
        g.validate().unwrap();
        assert_eq!(g.edge_count(), 600);
        assert_eq!(g, ws.generate(1).unwrap());
        assert_ne!(g, ws.generate(2).unwrap());
    }

    #[test]
    fn invalid_generator_parameters() {
        let bad = [
            WattsStrogatz { n: 2, k: 0, beta: 0.0, delete_prob: 0.0 },
            WattsStrogatz { n: 10, k: 3, beta: 0.0, delete_prob: 0.0 },
            WattsStrogatz { n: 10, k: 10, beta: 0.0, delete_prob: 0.0 },
            WattsStrogatz { n: 10, k: 2, beta: 1.5, delete_prob: 0.0 },
            WattsStrogatz { n: 10, k: 2, beta: 0.5, delete_prob: -0.1 },
        ];
        for ws in bad {
            assert!(matches!(ws.generate(0), Err(Error::Parameter(_))), "{ws:?}");
        }
        assert!(ErdosRenyi { n: 1, mean_degree: 0.5 }.generate(0).is_err());
        assert!(ErdosRenyi { n: 10, mean_degree: 0.0 }.generate(0).is_err());
        assert!(ErdosRenyi { n: 10, mean_degree: 9.5 }.generate(0).is_err());
    }

    #[test]
    fn erdos_renyi_extremes() {
        let g = ErdosRenyi { n: 2, mean_degree: 1e-12 }.generate(3).unwrap();
        assert_eq!(g.edge_count(), 0);
        let g = ErdosRenyi { n: 5, mean_degree: 4.0 }.generate(3).unwrap();
        assert_eq!(g.edge_count(), 10);
        assert_eq!(g.degrees(), vec![4; 5]);
    }

    #[test]
    fn edge_list_dedup_and_symmetry() {
        let g = net(&[(0, 1), (1, 0), (0, 1)], 3);
        assert_eq!(g.to_edge_list(), vec![(0, 1)]);
        assert_eq!(g.degrees(), vec![1, 1, 0]);
    }

    #[test]
    fn edge_list_errors() {
        assert!(matches!(
            Network::from_edge_list(&[(0, 0)], 2),
            Err(Error::Ingestion { row: Some(0), .. })
        ));
        assert!(matches!(
            Network::from_edge_list(&[(0, 1), (1, 5)], 3),
            Err(Error::Ingestion { row: Some(1), .. })
        ));
        let g = net(&[], 4);
        assert_eq!(g.summarize().isolated_fraction, 1.0);
    }

    #[test]
    fn csv_round_trip() {
        let g = net(&[(0, 1), (2, 1), (3, 4)], 6);
        let mut buf = Vec::new();
        g.write_edge_list_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "src,dst\n0,1\n1,2\n3,4\n");
        let back = Network::read_edge_list_csv(buf.as_slice(), Some(6)).unwrap();
        assert_eq!(back, g);
        let inferred = Network::read_edge_list_csv(buf.as_slice(), None).unwrap();
        assert_eq!(inferred.n(), 5);
    }

    #[test]
    fn csv_bad_rows() {
        let err = Network::read_edge_list_csv("src,dst\n0,1\n1,x\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, Error::Ingestion { row: Some(1), .. }));
        let err = Network::read_edge_list_csv("a,b\n0,1\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, Error::Ingestion { row: None, .. }));
    }

    #[test]
    fn histogram_csv() {
        let hist = DegreeHistogram::from_counts([(0, 1), (1, 2), (3, 0)]);
        let mut buf = Vec::new();
        hist.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "degree,count\n0,1\n1,2\n");
        assert_eq!(DegreeHistogram::read_csv(buf.as_slice()).unwrap(), hist);
        assert!(DegreeHistogram::read_csv("degree,count\n1,x\n".as_bytes()).is_err());
        assert!(DegreeHistogram::read_csv("degree,count\n1,0\n".as_bytes()).is_err());
    }

    #[test]
    fn summary_moments() {
        let s = DegreeHistogram::from_degrees([0, 2, 2]).summary();
        assert!((s.mean_degree - 4.0 / 3.0).abs() < 1e-15);
        assert!((s.p_gamma() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.mean_degree_positive, Some(2.0));
        assert_eq!(s.mean_inverse_degree_positive, Some(0.5));

        let s = DegreeHistogram::from_degrees([0, 0, 0]).summary();
        assert_eq!(s.isolated_fraction, 1.0);
        assert_eq!(s.mean_inverse_degree_positive, None);
        assert_eq!(s.mean_degree_positive, None);

        // (1 + 1 + 0.5 + 0.25) / 4
        let s = DegreeHistogram::from_degrees([1, 1, 2, 4]).summary();
        assert!((s.mean_inverse_degree_positive.unwrap() - 0.6875).abs() < 1e-15);
        assert_eq!(s.max_degree, 4);
    }
}
