//! Short-range base graphs: Delaunay graphs over point sets and regular
//! lattices, each carrying the metric greedy routing measures against.

use crate::delaunay;
use crate::error::{Error, Result};
use crate::population::{PointSet, GRID_SCALE};

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    /// Euclidean distance between positions in the unit square.
    Continuum(PointSet),
    /// L1 distance over lattice coordinates, wrapping where `cyclic[d]`.
    Lattice { dims: Vec<usize>, cyclic: Vec<bool> },
}

/// Undirected graph in compressed adjacency form plus its geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseGraph {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    geometry: Geometry,
}

impl BaseGraph {
    /// Builds a graph from an undirected edge list, validating it.
    pub fn from_edges(n: usize, edges: &[(u32, u32)], geometry: Geometry) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewVertices { needed: 2, got: n });
        }
        let expected_n = match &geometry {
            Geometry::Continuum(p) => p.len(),
            Geometry::Lattice { dims, .. } => dims.iter().product(),
        };
        if expected_n != n {
            return Err(Error::InvalidParameter(format!("geometry has {expected_n} vertices, graph has {n}")));
        }
        let mut lists: Vec<Vec<u32>> = vec![Vec::new(); n];
        for &(i, j) in edges {
            if i as usize >= n || j as usize >= n {
                return Err(Error::InvalidParameter(format!("edge ({i}, {j}) out of range")));
            }
            if i == j {
                return Err(Error::InvalidParameter(format!("self-loop at {i}")));
            }
            lists[i as usize].push(j);
            lists[j as usize].push(i);
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::with_capacity(2 * edges.len());
        offsets.push(0);
        for mut l in lists {
            l.sort_unstable();
            l.dedup();
            targets.extend_from_slice(&l);
            offsets.push(targets.len());
        }
        Ok(Self { offsets, targets, geometry })
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    /// Edges `(i, j)` with `i < j` in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.len()).flat_map(move |i| {
            self.neighbors(i).iter().filter(move |&&j| (j as usize) > i).map(move |&j| (i as u32, j))
        })
    }

    /// An integer key that orders vertex pairs exactly as their distance
    /// does: squared grid distance for continua, L1 distance for lattices.
    #[inline]
    pub fn distance_key(&self, i: usize, j: usize) -> u64 {
        match &self.geometry {
            Geometry::Continuum(p) => {
                let (a, b) = (p.grid()[i], p.grid()[j]);
                let dx = a[0].abs_diff(b[0]) as u64;
                let dy = a[1].abs_diff(b[1]) as u64;
                dx * dx + dy * dy
            }
            Geometry::Lattice { dims, cyclic } => {
                let (mut i, mut j) = (i, j);
                let mut total = 0u64;
                for (&side, &wrap) in dims.iter().zip(cyclic) {
                    let (ci, cj) = (i % side, j % side);
                    i /= side;
                    j /= side;
                    let d = ci.abs_diff(cj);
                    total += if wrap { d.min(side - d) } else { d } as u64;
                }
                total
            }
        }
    }

    /// Metric distance between two vertices.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let key = self.distance_key(i, j);
        match self.geometry {
            Geometry::Continuum(_) => (key as f64).sqrt() / GRID_SCALE as f64,
            Geometry::Lattice { .. } => key as f64,
        }
    }

    /// First ordered pair `(x, z)` for which `x` has no neighbour strictly
    /// closer to `z`, if any. Quadratic; meant for verification.
    pub fn find_greedy_violation(&self) -> Option<(usize, usize)> {
        let n = self.len();
        for x in 0..n {
            for z in 0..n {
                if x == z {
                    continue;
                }
                let here = self.distance_key(x, z);
                if !self.neighbors(x).iter().any(|&y| self.distance_key(y as usize, z) < here) {
                    return Some((x, z));
                }
            }
        }
        None
    }

    /// Checks symmetry, absence of self-loops and duplicates, and connectivity.
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        for i in 0..n {
            let nb = self.neighbors(i);
            if nb.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidParameter(format!("adjacency of {i} not strictly sorted")));
            }
            for &j in nb {
                if j as usize == i {
                    return Err(Error::InvalidParameter(format!("self-loop at {i}")));
                }
                if self.neighbors(j as usize).binary_search(&(i as u32)).is_err() {
                    return Err(Error::InvalidParameter(format!("edge {i}->{j} not symmetric")));
                }
            }
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut reached = 1;
        while let Some(v) = stack.pop() {
            for &w in self.neighbors(v) {
                if !seen[w as usize] {
                    seen[w as usize] = true;
                    reached += 1;
                    stack.push(w as usize);
                }
            }
        }
        if reached != n {
            return Err(Error::InvalidParameter(format!("graph is disconnected ({reached} of {n} reachable)")));
        }
        Ok(())
    }
}

/// Delaunay graph of a point set.
pub fn delaunay(points: PointSet) -> Result<BaseGraph> {
    let tri = delaunay::triangulate(points.grid())?;
    BaseGraph::from_edges(points.len(), &tri.edges, Geometry::Continuum(points))
}

/// Lattice with immediate-neighbour adjacency, wrapping in every dimension
/// when `cyclic` is set.
pub fn lattice(dims: &[usize], cyclic: bool) -> Result<BaseGraph> {
    lattice_with(dims, &vec![cyclic; dims.len()])
}

pub fn lattice_with(dims: &[usize], cyclic: &[bool]) -> Result<BaseGraph> {
    if dims.is_empty() || dims.contains(&0) || cyclic.len() != dims.len() {
        return Err(Error::InvalidParameter(format!("bad lattice shape {dims:?} / {cyclic:?}")));
    }
    let n = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
    let n = match n {
        Some(n) if n >= 2 && n <= u32::MAX as usize => n,
        _ => return Err(Error::InvalidParameter(format!("lattice {dims:?} must have between 2 and 2^32 vertices"))),
    };
    let mut edges = Vec::with_capacity(n * dims.len());
    let mut stride = 1usize;
    for (&side, &wrap) in dims.iter().zip(cyclic) {
        for v in 0..n {
            let c = (v / stride) % side;
            if c + 1 < side {
                edges.push((v as u32, (v + stride) as u32));
            } else if wrap && side > 2 {
                edges.push(((v + stride - side * stride) as u32, v as u32));
            }
        }
        stride *= side;
    }
    BaseGraph::from_edges(n, &edges, Geometry::Lattice { dims: dims.to_vec(), cyclic: cyclic.to_vec() })
}
