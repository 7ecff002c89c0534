//! Incremental Delaunay triangulation (Bowyer–Watson) with a vertex at
//! infinity.
//!
//! Hull edges are closed off by ghost triangles `(u, v, GHOST)` whose outside
//! lies to the left of `u -> v`, so no bounding super-triangle is needed and
//! hull adjacency is never distorted. Points are inserted in Hilbert order and
//! located by a visibility walk from the last created triangle.

use crate::error::{Error, Result};
use crate::predicates::{in_circumcircle, orient, strictly_between, Pt};

const GHOST: u32 = u32::MAX;
const DEAD: u32 = u32::MAX - 1;

#[derive(Debug, Clone, Copy)]
struct Tri {
    /// Counter-clockwise vertices; a ghost keeps `GHOST` in slot 2.
    v: [u32; 3],
    /// `n[i]` is the triangle across the edge opposite `v[i]`.
    n: [u32; 3],
}

impl Tri {
    fn is_ghost(&self) -> bool {
        self.v[2] == GHOST
    }

    fn is_dead(&self) -> bool {
        self.v[0] == DEAD
    }
}

/// A finished triangulation: finite triangles and the undirected edge set.
#[derive(Debug, Clone)]
pub struct Triangulation {
    /// Counter-clockwise triangles.
    pub triangles: Vec<[u32; 3]>,
    /// Edges `(i, j)` with `i < j`, sorted.
    pub edges: Vec<(u32, u32)>,
}

pub fn triangulate(points: &[Pt]) -> Result<Triangulation> {
    let n = points.len();
    if n < 2 {
        return Err(Error::TooFewVertices { needed: 2, got: n });
    }
    if n > (u32::MAX - 2) as usize {
        return Err(Error::InvalidParameter("too many points".into()));
    }
    let mut seen = std::collections::HashSet::with_capacity(n);
    for (i, p) in points.iter().enumerate() {
        if !seen.insert(*p) {
            return Err(Error::DuplicatePoint(i));
        }
    }
    drop(seen);

    let order = hilbert_order(points);
    let (a, b) = (order[0], order[1]);
    let third = order[2..]
        .iter()
        .position(|&c| orient(points[a as usize], points[b as usize], points[c as usize]) != 0);
    let Some(third) = third.map(|k| k + 2) else {
        return Ok(collinear(points));
    };

    let mut t = Builder::new(points, a, b, order[third]);
    for (k, &p) in order.iter().enumerate().skip(2) {
        if k != third {
            t.insert(p);
        }
    }
    Ok(t.finish())
}

/// All points on one line: the Delaunay graph is the path along the line.
fn collinear(points: &[Pt]) -> Triangulation {
    let mut idx: Vec<u32> = (0..points.len() as u32).collect();
    idx.sort_unstable_by_key(|&i| points[i as usize]);
    let mut edges: Vec<(u32, u32)> = idx.windows(2).map(|w| (w[0].min(w[1]), w[0].max(w[1]))).collect();
    edges.sort_unstable();
    Triangulation { triangles: Vec::new(), edges }
}

struct Builder<'a> {
    pts: &'a [Pt],
    tris: Vec<Tri>,
    free: Vec<u32>,
    hint: u32,
    // Scratch space reused across insertions.
    mark: Vec<u32>,
    stamp: u32,
    stack: Vec<u32>,
    cavity: Vec<u32>,
    boundary: Vec<(u32, u32, u32)>,
    created: Vec<(u32, u32)>,
}

impl<'a> Builder<'a> {
    fn new(pts: &'a [Pt], a: u32, b: u32, c: u32) -> Self {
        let (a, b, c) = if orient(pts[a as usize], pts[b as usize], pts[c as usize]) > 0 { (a, b, c) } else { (b, a, c) };
        // 0: real triangle; 1..=3: ghosts across its edges opposite a, b, c.
        let tris = vec![
            Tri { v: [a, b, c], n: [1, 2, 3] },
            Tri { v: [c, b, GHOST], n: [3, 2, 0] },
            Tri { v: [a, c, GHOST], n: [1, 3, 0] },
            Tri { v: [b, a, GHOST], n: [2, 1, 0] },
        ];
        let builder = Self {
            pts,
            tris,
            free: Vec::new(),
            hint: 0,
            mark: vec![0; 4],
            stamp: 0,
            stack: Vec::new(),
            cavity: Vec::new(),
            boundary: Vec::new(),
            created: Vec::new(),
        };
        builder.check_links();
        builder
    }

    fn pt(&self, v: u32) -> Pt {
        self.pts[v as usize]
    }

    fn in_conflict(&self, t: u32, p: u32) -> bool {
        let tri = &self.tris[t as usize];
        let pp = self.pt(p);
        if tri.is_ghost() {
            let (u, w) = (self.pt(tri.v[0]), self.pt(tri.v[1]));
            let o = orient(u, w, pp);
            o > 0 || (o == 0 && strictly_between(u, w, pp))
        } else {
            let [a, b, c] = tri.v;
            in_circumcircle([self.pt(a), self.pt(b), self.pt(c), pp], [a, b, c, p])
        }
    }

    /// Visibility walk from the hint to a triangle in conflict with `p`.
    fn locate(&self, p: u32) -> u32 {
        let pp = self.pt(p);
        let mut t = self.hint;
        if self.tris[t as usize].is_ghost() {
            t = self.tris[t as usize].n[2];
        }
        let mut steps = 0usize;
        let limit = 4 * self.tris.len() + 16;
        'walk: while steps < limit {
            steps += 1;
            let tri = self.tris[t as usize];
            // Rotate the starting edge so the walk cannot settle into a cycle
            // on degenerate configurations.
            let start = steps % 3;
            for k in 0..3 {
                let i = (start + k) % 3;
                let (u, w) = (tri.v[(i + 1) % 3], tri.v[(i + 2) % 3]);
                if orient(self.pt(u), self.pt(w), pp) < 0 {
                    let next = tri.n[i];
                    if self.tris[next as usize].is_ghost() {
                        return next;
                    }
                    t = next;
                    continue 'walk;
                }
            }
            return t;
        }
        // Exhaustive fallback; unreachable for Delaunay meshes.
        (0..self.tris.len() as u32)
            .find(|&t| !self.tris[t as usize].is_dead() && self.in_conflict(t, p))
            .expect("some triangle conflicts with a new point")
    }

    fn alloc(&mut self, tri: Tri) -> u32 {
        if let Some(t) = self.free.pop() {
            self.tris[t as usize] = tri;
            t
        } else {
            self.tris.push(tri);
            self.mark.push(0);
            (self.tris.len() - 1) as u32
        }
    }

    fn insert(&mut self, p: u32) {
        let start = self.locate(p);
        debug_assert!(self.in_conflict(start, p));

        self.stamp += 1;
        let stamp = self.stamp;
        self.cavity.clear();
        self.boundary.clear();
        self.stack.clear();
        self.stack.push(start);
        self.mark[start as usize] = stamp;
        while let Some(t) = self.stack.pop() {
            self.cavity.push(t);
            for i in 0..3 {
                let nb = self.tris[t as usize].n[i];
                if self.mark[nb as usize] == stamp {
                    continue;
                }
                if self.in_conflict(nb, p) {
                    self.mark[nb as usize] = stamp;
                    self.stack.push(nb);
                } else {
                    let tri = &self.tris[t as usize];
                    self.boundary.push((tri.v[(i + 1) % 3], tri.v[(i + 2) % 3], nb));
                }
            }
        }

        for k in 0..self.cavity.len() {
            let t = self.cavity[k];
            self.tris[t as usize].v = [DEAD; 3];
            self.free.push(t);
        }

        // Fan the cavity boundary to p. Edge (u, w) becomes triangle (u, w, p).
        self.created.clear();
        for k in 0..self.boundary.len() {
            let (u, w, outside) = self.boundary[k];
            let t = self.alloc(Tri { v: [u, w, p], n: [GHOST, GHOST, outside] });
            let out = &mut self.tris[outside as usize];
            let j = (0..3).find(|&j| out.v[j] != u && out.v[j] != w).expect("shared edge");
            out.n[j] = t;
            self.created.push((u, t));
        }
        // Triangle (u, w, p) shares edge (w, p) with the triangle starting at w.
        for k in 0..self.created.len() {
            let (_, t) = self.created[k];
            let w = self.tris[t as usize].v[1];
            let next = self
                .created
                .iter()
                .find(|(u, _)| *u == w)
                .map(|&(_, t2)| t2)
                .expect("cavity boundary is a closed cycle");
            self.tris[t as usize].n[0] = next;
            self.tris[next as usize].n[1] = t;
        }
        // Ghosts keep the infinite vertex in slot 2.
        for k in 0..self.created.len() {
            let (_, t) = self.created[k];
            let tri = &mut self.tris[t as usize];
            if tri.v[0] == GHOST {
                tri.v.rotate_left(1);
                tri.n.rotate_left(1);
            } else if tri.v[1] == GHOST {
                tri.v.rotate_right(1);
                tri.n.rotate_right(1);
            }
        }
        self.hint = self.created[0].1;
        #[cfg(debug_assertions)]
        if self.tris.len() < 256 {
            self.check_links();
        }
    }

    fn check_links(&self) {
        for (t, tri) in self.tris.iter().enumerate() {
            if tri.is_dead() {
                continue;
            }
            for i in 0..3 {
                let (u, w) = (tri.v[(i + 1) % 3], tri.v[(i + 2) % 3]);
                let nb = &self.tris[tri.n[i] as usize];
                let back = (0..3).find(|&j| nb.n[j] == t as u32).expect("neighbour links back");
                let (x, y) = (nb.v[(back + 1) % 3], nb.v[(back + 2) % 3]);
                assert!((x, y) == (w, u), "edge mismatch between {t} and {}", tri.n[i]);
            }
        }
    }

    fn finish(self) -> Triangulation {
        let triangles: Vec<[u32; 3]> = self
            .tris
            .iter()
            .filter(|t| !t.is_dead() && !t.is_ghost())
            .map(|t| t.v)
            .collect();
        let mut edges: Vec<(u32, u32)> = triangles
            .iter()
            .flat_map(|&[a, b, c]| [(a, b), (b, c), (c, a)])
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        Triangulation { triangles, edges }
    }
}

/// Insertion order along a Hilbert curve over the top 16 bits of each axis.
fn hilbert_order(points: &[Pt]) -> Vec<u32> {
    let mut keyed: Vec<(u64, u32)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (hilbert_index(16, p[0] >> 15, p[1] >> 15), i as u32))
        .collect();
    keyed.sort_unstable();
    keyed.into_iter().map(|(_, i)| i).collect()
}

fn hilbert_index(order: u32, mut x: u32, mut y: u32) -> u64 {
    let n: u32 = 1 << order;
    x = x.min(n - 1);
    y = y.min(n - 1);
    let mut d = 0u64;
    let mut s = n / 2;
    while s > 0 {
        let rx = u32::from(x & s > 0);
        let ry = u32::from(y & s > 0);
        d += s as u64 * s as u64 * ((3 * rx) ^ ry) as u64;
        if ry == 0 {
            if rx == 1 {
                x = n - 1 - x;
                y = n - 1 - y;
            }
            std::mem::swap(&mut x, &mut y);
        }
        s /= 2;
    }
    d
}
