//! Graph topologies, symmetric propensities, and the replicator-equilibrium
//! predicates on occupation vectors.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vertex = i64;
pub type EdgeId = i64;

/// One entry of an adjacency list.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub vertex: Vertex,
    pub propensity: f64,
    pub edge: EdgeId,
}

/// Non-oriented edge with its propensity; `lo <= hi`, `lo == hi` for a loop.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub lo: Vertex,
    pub hi: Vertex,
    pub propensity: f64,
}

#[derive(Clone, Debug)]
pub enum Graph {
    /// The integer line with unit propensities. Edge `{i, i+1}` has id `i`.
    Line { center: Vertex },
    /// The square lattice with unit propensities; see [`grid_vertex`] for
    /// the labelling. Edge `2v` joins `v` to its `+x` neighbour, edge
    /// `2v + 1` joins it to its `+y` neighbour.
    Grid,
    Finite(FiniteGraph),
}

#[derive(Clone, Debug)]
pub struct FiniteGraph {
    vertices: Vec<Vertex>,
    index: HashMap<Vertex, usize>,
    adjacency: Vec<Vec<Neighbor>>,
    edges: Vec<Edge>,
}

pub enum Neighbors<'a> {
    Line(std::array::IntoIter<Neighbor, 2>),
    Grid(std::array::IntoIter<Neighbor, 4>),
    Finite(std::slice::Iter<'a, Neighbor>),
}

impl Iterator for Neighbors<'_> {
    type Item = Neighbor;

    #[inline]
    fn next(&mut self) -> Option<Neighbor> {
        match self {
            Neighbors::Line(it) => it.next(),
            Neighbors::Grid(it) => it.next(),
            Neighbors::Finite(it) => it.next().copied(),
        }
    }
}

pub fn build_line(center: Vertex) -> Graph {
    Graph::Line { center }
}

pub fn build_grid() -> Graph {
    Graph::Grid
}

/// Label of the lattice point `(x, y)`: Cantor pairing of the zig-zag images,
/// so labels near the origin stay small.
pub fn grid_vertex(x: i64, y: i64) -> Vertex {
    let a = zigzag(x) as i64;
    let b = zigzag(y) as i64;
    (a + b) * (a + b + 1) / 2 + b
}

/// Inverse of [`grid_vertex`].
pub fn grid_coords(v: Vertex) -> (i64, i64) {
    let mut w = (((8.0 * v as f64 + 1.0).sqrt() - 1.0) / 2.0) as i64;
    while w * (w + 1) / 2 > v {
        w -= 1;
    }
    while (w + 1) * (w + 2) / 2 <= v {
        w += 1;
    }
    let b = v - w * (w + 1) / 2;
    let a = w - b;
    (unzigzag(a), unzigzag(b))
}

fn zigzag(v: i64) -> u64 {
    ((v << 1) ^ (v >> 63)) as u64
}

fn unzigzag(u: i64) -> i64 {
    (u >> 1) ^ -(u & 1)
}

pub fn build_cycle(length: usize) -> Result<Graph> {
    if length < 3 {
        return Err(Error::InvalidGraph(format!(
            "a cycle needs at least 3 vertices, got {length}"
        )));
    }
    let l = length as Vertex;
    let edges = (0..l).map(|i| (i, (i + 1) % l, 1.0)).collect::<Vec<_>>();
    FiniteGraph::from_edges(0..l, &edges).map(Graph::Finite)
}

/// Complete multipartite graph on `parts`, with optional loops on singleton
/// parts. `propensities[p][q]` is the propensity between parts `p` and `q`
/// (diagonal entries are used for loops); `None` means unit propensities.
pub fn build_complete_multipartite(
    parts: &[Vec<Vertex>],
    loops: &[Vertex],
    propensities: Option<&[Vec<f64>]>,
) -> Result<Graph> {
    let d = parts.len();
    let mut part_of = BTreeMap::new();
    for (p, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(Error::InvalidGraph(format!("part {p} is empty")));
        }
        for &v in part {
            if part_of.insert(v, p).is_some() {
                return Err(Error::InvalidGraph(format!(
                    "vertex {v} appears in more than one part"
                )));
            }
        }
    }
    let prop = |p: usize, q: usize| -> Result<f64> {
        let a = match propensities {
            None => 1.0,
            Some(m) => *m.get(p).and_then(|r| r.get(q)).ok_or_else(|| {
                Error::InvalidGraph(format!("propensity matrix must be {d}x{d}"))
            })?,
        };
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidGraph(format!(
                "propensity between parts {p} and {q} must be positive"
            )));
        }
        Ok(a)
    };
    if let Some(m) = propensities {
        for p in 0..d {
            for q in 0..d {
                if prop(p, q)? != prop(q, p)? {
                    return Err(Error::InvalidGraph(
                        "part propensities must be symmetric".into(),
                    ));
                }
            }
        }
        if m.len() != d {
            return Err(Error::InvalidGraph(format!(
                "propensity matrix must be {d}x{d}"
            )));
        }
    }
    let mut edges = Vec::new();
    for &v in loops {
        let p = *part_of.get(&v).ok_or(Error::UnknownVertex(v))?;
        if parts[p].len() != 1 {
            return Err(Error::InvalidGraph(format!(
                "loop at {v} lies in a part of size {}",
                parts[p].len()
            )));
        }
        edges.push((v, v, prop(p, p)?));
    }
    for p in 0..d {
        for q in p + 1..d {
            let a = prop(p, q)?;
            for &i in &parts[p] {
                for &j in &parts[q] {
                    edges.push((i, j, a));
                }
            }
        }
    }
    FiniteGraph::from_edges(part_of.keys().copied(), &edges).map(Graph::Finite)
}

/// Graph given by an explicit list of `(i, j, a_ij)` edges.
pub fn build_edge_list(edges: &[(Vertex, Vertex, f64)]) -> Result<Graph> {
    let vertices: BTreeSet<Vertex> = edges.iter().flat_map(|&(i, j, _)| [i, j]).collect();
    FiniteGraph::from_edges(vertices, edges).map(Graph::Finite)
}

impl FiniteGraph {
    fn from_edges(
        vertices: impl IntoIterator<Item = Vertex>,
        edges: &[(Vertex, Vertex, f64)],
    ) -> Result<Self> {
        let mut vertices: Vec<Vertex> = vertices.into_iter().collect();
        vertices.sort_unstable();
        vertices.dedup();
        let index: HashMap<Vertex, usize> =
            vertices.iter().enumerate().map(|(k, &v)| (v, k)).collect();
        let mut adjacency = vec![Vec::new(); vertices.len()];
        let mut seen = BTreeSet::new();
        let mut list = Vec::with_capacity(edges.len());
        for (id, &(i, j, a)) in edges.iter().enumerate() {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::InvalidGraph(format!(
                    "propensity of {{{i},{j}}} must be positive, got {a}"
                )));
            }
            let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
            if !seen.insert((lo, hi)) {
                return Err(Error::InvalidGraph(format!("duplicate edge {{{lo},{hi}}}")));
            }
            let (&li, &hi_idx) = match (index.get(&lo), index.get(&hi)) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(Error::UnknownVertex(if index.contains_key(&lo) { hi } else { lo })),
            };
            let edge = id as EdgeId;
            adjacency[li].push(Neighbor { vertex: hi, propensity: a, edge });
            if lo != hi {
                adjacency[hi_idx].push(Neighbor { vertex: lo, propensity: a, edge });
            }
            list.push(Edge { lo, hi, propensity: a });
        }
        for adj in &mut adjacency {
            adj.sort_by_key(|n| n.vertex);
        }
        Ok(FiniteGraph {
            vertices,
            index,
            adjacency,
            edges: list,
        })
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }
}

impl Graph {
    pub fn contains(&self, v: Vertex) -> bool {
        match self {
            Graph::Line { .. } => true,
            Graph::Grid => v >= 0,
            Graph::Finite(g) => g.index.contains_key(&v),
        }
    }

    /// Neighbours of `v` in increasing vertex order. Empty for unknown vertices.
    #[inline]
    pub fn neighbors(&self, v: Vertex) -> Neighbors<'_> {
        match self {
            Graph::Line { .. } => Neighbors::Line(
                [
                    Neighbor { vertex: v - 1, propensity: 1.0, edge: v - 1 },
                    Neighbor { vertex: v + 1, propensity: 1.0, edge: v },
                ]
                .into_iter(),
            ),
            Graph::Grid => {
                let (x, y) = grid_coords(v);
                let mut nb = [
                    Neighbor { vertex: grid_vertex(x - 1, y), propensity: 1.0, edge: 2 * grid_vertex(x - 1, y) },
                    Neighbor { vertex: grid_vertex(x + 1, y), propensity: 1.0, edge: 2 * v },
                    Neighbor { vertex: grid_vertex(x, y - 1), propensity: 1.0, edge: 2 * grid_vertex(x, y - 1) + 1 },
                    Neighbor { vertex: grid_vertex(x, y + 1), propensity: 1.0, edge: 2 * v + 1 },
                ];
                nb.sort_by_key(|n| n.vertex);
                Neighbors::Grid(nb.into_iter())
            }
            Graph::Finite(g) => match g.index.get(&v) {
                Some(&k) => Neighbors::Finite(g.adjacency[k].iter()),
                None => Neighbors::Finite([].iter()),
            },
        }
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.neighbors(v).count()
    }

    /// `a_{i,j}`, or `None` when `i` and `j` are not adjacent.
    pub fn try_propensity(&self, i: Vertex, j: Vertex) -> Option<f64> {
        match self {
            Graph::Line { .. } => ((i - j).abs() == 1).then_some(1.0),
            _ => self.neighbors(i).find(|n| n.vertex == j).map(|n| n.propensity),
        }
    }

    pub fn propensity(&self, i: Vertex, j: Vertex) -> Result<f64> {
        self.try_propensity(i, j).ok_or(Error::NotAdjacent(i, j))
    }

    pub fn adjacent(&self, i: Vertex, j: Vertex) -> bool {
        self.try_propensity(i, j).is_some()
    }

    pub fn edge_between(&self, i: Vertex, j: Vertex) -> Option<EdgeId> {
        match self {
            Graph::Line { .. } => ((i - j).abs() == 1).then_some(i.min(j)),
            _ => self.neighbors(i).find(|n| n.vertex == j).map(|n| n.edge),
        }
    }

    /// Endpoints `(lo, hi)` of an edge id.
    pub fn endpoints(&self, edge: EdgeId) -> Option<(Vertex, Vertex)> {
        match self {
            Graph::Line { .. } => Some((edge, edge + 1)),
            Graph::Grid => {
                let v = edge.div_euclid(2);
                let (x, y) = grid_coords(v);
                let w = if edge % 2 == 0 { grid_vertex(x + 1, y) } else { grid_vertex(x, y + 1) };
                Some((v.min(w), v.max(w)))
            }
            Graph::Finite(g) => g.edges.get(usize::try_from(edge).ok()?).map(|e| (e.lo, e.hi)),
        }
    }

    pub fn vertices(&self) -> Option<&[Vertex]> {
        match self {
            Graph::Line { .. } | Graph::Grid => None,
            Graph::Finite(g) => Some(g.vertices()),
        }
    }

    pub fn is_line(&self) -> bool {
        matches!(self, Graph::Line { .. })
    }

    /// Outer boundary of `set`: vertices outside it adjacent to some member.
    pub fn outer_boundary(&self, set: &BTreeSet<Vertex>) -> BTreeSet<Vertex> {
        set.iter()
            .flat_map(|&v| self.neighbors(v).map(|n| n.vertex))
            .filter(|u| !set.contains(u))
            .collect()
    }
}

/// Slot of the directed edge `from -> to` along `edge`, for per-direction
/// counters. Loops use the even slot.
#[inline]
pub fn directed_slot(from: Vertex, to: Vertex, edge: EdgeId) -> i64 {
    2 * edge + i64::from(from > to)
}

/// Serializable description of a graph, as embedded in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum GraphSpec {
    #[serde(rename = "line")]
    Line {
        #[serde(default)]
        center: Vertex,
    },
    #[serde(rename = "grid")]
    Grid,
    #[serde(rename = "cycle")]
    Cycle { length: usize },
    #[serde(rename = "multipartite")]
    Multipartite {
        parts: Vec<Vec<Vertex>>,
        #[serde(default)]
        loops: Vec<Vertex>,
        #[serde(default)]
        propensities: Option<Vec<Vec<f64>>>,
    },
    #[serde(rename = "explicit-edge-list")]
    EdgeList { edges: Vec<(Vertex, Vertex, f64)> },
}

/// Short command-line form: `line`, `line:<center>`, `cycle:<length>`, `grid`.
impl std::str::FromStr for GraphSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("cannot parse graph `{s}`"));
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        match (kind, arg) {
            ("line", None) => Ok(GraphSpec::Line { center: 0 }),
            ("line", Some(c)) => Ok(GraphSpec::Line {
                center: c.parse().map_err(|_| bad())?,
            }),
            ("grid", None) => Ok(GraphSpec::Grid),
            ("cycle", Some(l)) => Ok(GraphSpec::Cycle {
                length: l.parse().map_err(|_| bad())?,
            }),
            _ => Err(bad()),
        }
    }
}

impl GraphSpec {
    pub fn build(&self) -> Result<Graph> {
        match self {
            GraphSpec::Line { center } => Ok(build_line(*center)),
            GraphSpec::Grid => Ok(build_grid()),
            GraphSpec::Cycle { length } => build_cycle(*length),
            GraphSpec::Multipartite {
                parts,
                loops,
                propensities,
            } => build_complete_multipartite(parts, loops, propensities.as_deref()),
            GraphSpec::EdgeList { edges } => build_edge_list(edges),
        }
    }
}

/// Finitely supported probability vector on the vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupationVector {
    entries: BTreeMap<Vertex, f64>,
}

impl OccupationVector {
    /// Entries must be nonnegative and sum to one within `1e-9`; zero entries
    /// are dropped.
    pub fn new(entries: impl IntoIterator<Item = (Vertex, f64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (v, x) in entries {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(Error::InvalidArgument(format!("entry {x} at {v}")));
            }
            if x > 0.0 {
                *map.entry(v).or_insert(0.0) += x;
            }
        }
        let total: f64 = map.values().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "occupation vector sums to {total}"
            )));
        }
        Ok(OccupationVector { entries: map })
    }

    /// Normalizes positive weights onto the simplex.
    pub fn normalized(weights: impl IntoIterator<Item = (Vertex, f64)>) -> Result<Self> {
        let w: Vec<(Vertex, f64)> = weights.into_iter().collect();
        let total: f64 = w.iter().map(|&(_, x)| x).sum();
        if !(total > 0.0) {
            return Err(Error::InvalidArgument("weights sum to zero".into()));
        }
        Self::new(w.into_iter().map(|(v, x)| (v, x / total)))
    }

    /// Empirical density `(Z_n(i) - 1) / n` from visit counts.
    pub fn from_counts(counts: impl IntoIterator<Item = (Vertex, u64)>) -> Result<Self> {
        Self::normalized(counts.into_iter().map(|(v, c)| (v, c as f64)))
    }

    pub fn get(&self, v: Vertex) -> f64 {
        self.entries.get(&v).copied().unwrap_or(0.0)
    }

    pub fn support(&self) -> BTreeSet<Vertex> {
        self.entries.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vertex, f64)> + '_ {
        self.entries.iter().map(|(&v, &x)| (v, x))
    }

    /// Same vector with vertices relabelled by `map`.
    pub fn relabel(&self, map: impl Fn(Vertex) -> Vertex) -> Self {
        OccupationVector {
            entries: self.entries.iter().map(|(&v, &x)| (map(v), x)).collect(),
        }
    }
}

/// `N_i(x)` on the support and its outer boundary, and `H(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicatorQuantities {
    pub n: BTreeMap<Vertex, f64>,
    pub h: f64,
}

pub fn replicator_quantities(g: &Graph, x: &OccupationVector) -> ReplicatorQuantities {
    let mut n: BTreeMap<Vertex, f64> = x.iter().map(|(v, _)| (v, 0.0)).collect();
    for (j, xj) in x.iter() {
        for nb in g.neighbors(j) {
            // a is symmetric, so a_{i,j} x_j is pushed from j to each i ~ j
            *n.entry(nb.vertex).or_insert(0.0) += nb.propensity * xj;
        }
    }
    let h = x.iter().map(|(i, xi)| xi * n[&i]).sum();
    ReplicatorQuantities { n, h }
}

/// Replicator field `F_i(x) = x_i (N_i(x) - H(x))` on the support.
pub fn replicator_field(g: &Graph, x: &OccupationVector) -> BTreeMap<Vertex, f64> {
    let q = replicator_quantities(g, x);
    x.iter().map(|(i, xi)| (i, xi * (q.n[&i] - q.h))).collect()
}

pub const DEFAULT_PREDICATE_TOL: f64 = 1e-9;

/// Stability predicate: the matrix `[a_{i,j} - 2H(x)]` on the support has no
/// eigenvalue above `tol`, and every boundary vertex has `N_i - H < -tol`.
pub fn check_px(g: &Graph, x: &OccupationVector, tol: f64) -> bool {
    let q = replicator_quantities(g, x);
    let support: Vec<Vertex> = x.iter().map(|(v, _)| v).collect();
    let matrix = restricted_matrix(g, &support, q.h);
    let spectral_ok = jacobi_eigenvalues(matrix)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
        <= tol;
    if !spectral_ok {
        return false;
    }
    q.n.iter()
        .filter(|(v, _)| x.get(**v) == 0.0)
        .all(|(_, ni)| ni - q.h < -tol)
}

/// `[a_{i,j} - 2h]_{i,j in support}` with `a = 0` off the adjacency.
pub fn restricted_matrix(g: &Graph, support: &[Vertex], h: f64) -> Vec<Vec<f64>> {
    support
        .iter()
        .map(|&i| {
            support
                .iter()
                .map(|&j| g.try_propensity(i, j).unwrap_or(0.0) - 2.0 * h)
                .collect()
        })
        .collect()
}

const JACOBI_TOL: f64 = 1e-10;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, unsorted.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    let scale = a
        .iter()
        .flatten()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
        .max(1.0);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum::<f64>()
            .sqrt();
        if off <= JACOBI_TOL * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// Recognizes a complete d-partite graph with possible loops on `set`, with
/// loops only on singleton parts and propensities constant per part pair.
/// Returns the partition (each part sorted, parts ordered by least element).
pub fn is_complete_d_partite_with_loops(
    g: &Graph,
    set: &BTreeSet<Vertex>,
) -> Option<Vec<Vec<Vertex>>> {
    if set.is_empty() {
        return None;
    }
    let verts: Vec<Vertex> = set.iter().copied().collect();
    let n = verts.len();
    // parts are the connected components of the (loop-free) complement
    let mut part = vec![usize::MAX; n];
    let mut parts: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        if part[start] != usize::MAX {
            continue;
        }
        let id = parts.len();
        let mut members = vec![start];
        part[start] = id;
        let mut head = 0;
        while head < members.len() {
            let u = members[head];
            head += 1;
            for w in 0..n {
                if part[w] == usize::MAX && w != u && !g.adjacent(verts[u], verts[w]) {
                    part[w] = id;
                    members.push(w);
                }
            }
        }
        parts.push(members);
    }
    for (i, &vi) in verts.iter().enumerate() {
        for (j, &vj) in verts.iter().enumerate().skip(i + 1) {
            let adj = g.adjacent(vi, vj);
            if (part[i] == part[j]) == adj {
                return None;
            }
        }
        if g.adjacent(vi, vi) && parts[part[i]].len() != 1 {
            return None;
        }
    }
    let d = parts.len();
    let mut pair_value: Vec<Option<f64>> = vec![None; d * d];
    for (i, &vi) in verts.iter().enumerate() {
        for (j, &vj) in verts.iter().enumerate() {
            if let Some(a) = g.try_propensity(vi, vj) {
                let slot = &mut pair_value[part[i] * d + part[j]];
                match slot {
                    None => *slot = Some(a),
                    Some(b) if *b != a => return None,
                    _ => {}
                }
            }
        }
    }
    let mut out: Vec<Vec<Vertex>> = parts
        .into_iter()
        .map(|p| {
            let mut vs: Vec<Vertex> = p.into_iter().map(|k| verts[k]).collect();
            vs.sort_unstable();
            vs
        })
        .collect();
    out.sort();
    Some(out)
}
