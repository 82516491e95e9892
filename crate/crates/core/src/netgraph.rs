//! Graphs, the matrix families attached to them, and random generators.
//!
//! Vertices are 0-based inside the crate. Everything that crosses an I/O
//! boundary (JSON, CSV, reports) is 1-based.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{dim_check, Error, Result};
use crate::matrix::SymMatrix;

/// Simple undirected graph on `n` vertices.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Self { n, edges: BTreeSet::new() }
    }

    /// Builds a graph from 0-based pairs. Pairs are normalized to `i < j`;
    /// duplicates collapse. Self-loops and out-of-range vertices are errors.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::InvalidInput(format!("self-loop at vertex {}", a + 1)));
            }
            if a >= n || b >= n {
                return Err(Error::InvalidInput(format!(
                    "edge ({}, {}) out of range for n = {n}",
                    a + 1,
                    b + 1
                )));
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(Self { n, edges: set })
    }

    /// Star centred on vertex 0.
    pub fn star(n: usize) -> Self {
        Self { n, edges: (1..n).map(|j| (0, j)).collect() }
    }

    pub fn path(n: usize) -> Self {
        Self { n, edges: (1..n).map(|j| (j - 1, j)).collect() }
    }

    pub fn ring(n: usize) -> Self {
        let mut g = Self::path(n);
        if n >= 3 {
            g.edges.insert((0, n - 1));
        }
        g
    }

    pub fn complete(n: usize) -> Self {
        Self { n, edges: all_pairs(n).collect() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges as 0-based `(i, j)` with `i < j`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        (0..self.n).filter(|&j| j != i && self.has_edge(i, j)).collect()
    }
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let one_based: Vec<_> = self.edges.iter().map(|&(i, j)| (i + 1, j + 1)).collect();
        write!(f, "Graph(n={}, edges={:?})", self.n, one_based)
    }
}

/// All unordered pairs `i < j` in lexicographic order.
pub fn all_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    n: usize,
    edges: Vec<[usize; 2]>,
}

impl Serialize for Graph {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GraphJson { n: self.n, edges: self.edges.iter().map(|&(i, j)| [i + 1, j + 1]).collect() }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Graph {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = GraphJson::deserialize(d)?;
        let mut edges = Vec::with_capacity(raw.edges.len());
        for [i, j] in raw.edges {
            if i == 0 || j == 0 {
                return Err(serde::de::Error::custom("graph vertices are 1-based"));
            }
            if i >= j {
                return Err(serde::de::Error::custom(format!("edge [{i}, {j}] must have i < j")));
            }
            edges.push((i - 1, j - 1));
        }
        Graph::new(raw.n, edges).map_err(serde::de::Error::custom)
    }
}

/// Admissible families of state matrices for a graph.
///
/// The Laplacian variants describe consensus dynamics `x' = -L x`: the state
/// matrix is `-L` while membership predicates test `L` itself. See
/// [`MatrixClass::class_form`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixClass {
    Qualitative,
    Laplacian,
    Adjacency,
    UnweightedLaplacian,
    UnweightedAdjacency,
}

impl MatrixClass {
    pub const ALL: [MatrixClass; 5] = [
        MatrixClass::Qualitative,
        MatrixClass::Laplacian,
        MatrixClass::Adjacency,
        MatrixClass::UnweightedLaplacian,
        MatrixClass::UnweightedAdjacency,
    ];

    pub fn is_laplacian(self) -> bool {
        matches!(self, MatrixClass::Laplacian | MatrixClass::UnweightedLaplacian)
    }

    pub fn is_adjacency(self) -> bool {
        matches!(self, MatrixClass::Adjacency | MatrixClass::UnweightedAdjacency)
    }

    pub fn is_unweighted(self) -> bool {
        matches!(self, MatrixClass::UnweightedLaplacian | MatrixClass::UnweightedAdjacency)
    }

    /// `-1` for Laplacian classes (state matrix `-L`), `+1` otherwise.
    pub fn state_sign(self) -> f64 {
        if self.is_laplacian() {
            -1.0
        } else {
            1.0
        }
    }

    /// Maps a state matrix to the matrix the membership predicate tests
    /// (and back: the map is an involution).
    pub fn class_form(self, x: &SymMatrix) -> SymMatrix {
        if self.is_laplacian() {
            x.scale(-1.0)
        } else {
            x.clone()
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MatrixClass::Qualitative => "qualitative",
            MatrixClass::Laplacian => "laplacian",
            MatrixClass::Adjacency => "adjacency",
            MatrixClass::UnweightedLaplacian => "unweighted_laplacian",
            MatrixClass::UnweightedAdjacency => "unweighted_adjacency",
        }
    }
}

impl fmt::Display for MatrixClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MatrixClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        MatrixClass::ALL
            .into_iter()
            .find(|c| c.name() == key)
            .ok_or_else(|| Error::InvalidInput(format!("unknown matrix class '{s}'")))
    }
}

/// Edge weights keyed by 0-based `(i, j)`, `i < j`.
pub type EdgeWeights = BTreeMap<(usize, usize), f64>;

pub fn unit_weights(g: &Graph) -> EdgeWeights {
    g.edges().map(|e| (e, 1.0)).collect()
}

/// Off-diagonal support of `x`: edge `(i, j)` iff `|x_ij| > edge_threshold`.
pub fn graph_from_matrix(x: &SymMatrix, edge_threshold: f64) -> Graph {
    let n = x.n();
    Graph { n, edges: all_pairs(n).filter(|&(i, j)| x.get(i, j).abs() > edge_threshold).collect() }
}

/// Membership of `x` in the class attached to `g`, with one tolerance for
/// both the sign/zero/row-sum constraints and the support test.
///
/// For the Laplacian classes `x` is the Laplacian `L`, not the state matrix.
pub fn is_member(x: &SymMatrix, g: &Graph, class: MatrixClass, tol: f64) -> Result<bool> {
    dim_check("matrix vs graph size", g.n(), x.n())?;
    let n = x.n();
    for (i, j) in all_pairs(n) {
        let v = x.get(i, j);
        let edge = g.has_edge(i, j);
        if (v.abs() > tol) != edge {
            return Ok(false);
        }
        let ok = match class {
            MatrixClass::Qualitative => true,
            MatrixClass::Laplacian => v <= tol,
            MatrixClass::Adjacency => v >= -tol,
            MatrixClass::UnweightedLaplacian => {
                if edge {
                    (v + 1.0).abs() <= tol
                } else {
                    true
                }
            }
            MatrixClass::UnweightedAdjacency => {
                if edge {
                    (v - 1.0).abs() <= tol
                } else {
                    true
                }
            }
        };
        if !ok {
            return Ok(false);
        }
    }
    if class.is_laplacian() && x.row_sums().iter().any(|s| s.abs() > tol) {
        return Ok(false);
    }
    if class.is_adjacency() && x.diag().iter().any(|d| d.abs() > tol) {
        return Ok(false);
    }
    Ok(true)
}

fn check_weights(g: &Graph, w: &EdgeWeights) -> Result<()> {
    for (&(i, j), &v) in w {
        if !g.has_edge(i, j) || i >= j {
            return Err(Error::InvalidInput(format!("weight for non-edge ({}, {})", i + 1, j + 1)));
        }
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "weight {v} on ({}, {}) must be positive",
                i + 1,
                j + 1
            )));
        }
    }
    if let Some((i, j)) = g.edges().find(|e| !w.contains_key(e)) {
        return Err(Error::InvalidInput(format!("missing weight for edge ({}, {})", i + 1, j + 1)));
    }
    Ok(())
}

/// Weighted Laplacian. Each diagonal entry is the negated off-diagonal sum
/// of its row, accumulated in the order [`SymMatrix::row_sums`] uses, so the
/// row sums come out exactly zero.
pub fn laplacian_of(g: &Graph, w: &EdgeWeights) -> Result<SymMatrix> {
    check_weights(g, w)?;
    let mut l = SymMatrix::zeros(g.n());
    for (&(i, j), &v) in w {
        l.set(i, j, -v);
    }
    for i in 0..g.n() {
        let s: f64 = (0..g.n()).filter(|&j| j != i).map(|j| -l.get(i, j)).sum();
        l.set(i, i, s);
    }
    Ok(l)
}

pub fn adjacency_of(g: &Graph, w: &EdgeWeights) -> Result<SymMatrix> {
    check_weights(g, w)?;
    let mut a = SymMatrix::zeros(g.n());
    for (&(i, j), &v) in w {
        a.set(i, j, v);
    }
    Ok(a)
}

/// Planar point in the unit of the generator's `side`.
pub type Point = [f64; 2];

/// Geometric link model: `n` points i.i.d. uniform in `[0, side]^2`, an edge
/// whenever two points are closer than `radius`.
pub fn random_geometric_graph(n: usize, side: f64, radius: f64, seed: u64) -> (Graph, Vec<Point>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Point> =
        (0..n).map(|_| [rng.gen::<f64>() * side, rng.gen::<f64>() * side]).collect();
    let edges = all_pairs(n).filter(|&(i, j)| {
        let (dx, dy) = (pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]);
        (dx * dx + dy * dy).sqrt() < radius
    });
    (Graph { n, edges: edges.collect() }, pts)
}

/// Smallest magnitude drawn for weighted classes; keeps the support exact
/// under the 1e-12 membership tolerance.
const MIN_WEIGHT: f64 = 1e-9;
/// Qualitative off-diagonals avoid `(-DEAD_ZONE, DEAD_ZONE)`.
const DEAD_ZONE: f64 = 0.05;

fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let v: f64 = rng.gen();
        if v > MIN_WEIGHT {
            return v;
        }
    }
}

/// Draws a member of `class` on graph `g`. For the Laplacian classes the
/// returned matrix is `L` (class form), not the state matrix.
pub fn random_in_class(g: &Graph, class: MatrixClass, seed: u64) -> SymMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: EdgeWeights = g
        .edges()
        .map(|e| {
            let w = match class {
                MatrixClass::Qualitative => {
                    let mag = rng.gen_range(DEAD_ZONE..=1.0);
                    if rng.gen::<bool>() {
                        mag
                    } else {
                        -mag
                    }
                }
                c if c.is_unweighted() => 1.0,
                _ => open_unit(&mut rng),
            };
            (e, w)
        })
        .collect();
    match class {
        MatrixClass::Qualitative => {
            let mut x = SymMatrix::zeros(g.n());
            for (&(i, j), &v) in &weights {
                x.set(i, j, v);
            }
            for i in 0..g.n() {
                x.set(i, i, rng.gen_range(-1.0..=1.0));
            }
            x
        }
        c if c.is_laplacian() => laplacian_of(g, &weights).expect("weights keyed by edges"),
        _ => adjacency_of(g, &weights).expect("weights keyed by edges"),
    }
}
