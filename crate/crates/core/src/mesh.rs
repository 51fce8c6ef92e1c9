//! Conforming triangulations of the annular region between the obstacle and
//! the artificial circle, with newest-vertex bisection.
//!
//! Every triangle is stored counterclockwise as `[peak, a, b]`: the
//! refinement edge is `(a, b)`, opposite the newest vertex `peak`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VertexTag {
    Interior,
    Obstacle,
    Outer,
}

impl VertexTag {
    pub fn code(self) -> u8 {
        match self {
            VertexTag::Interior => 0,
            VertexTag::Obstacle => 1,
            VertexTag::Outer => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(VertexTag::Interior),
            1 => Some(VertexTag::Obstacle),
            2 => Some(VertexTag::Outer),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeTag {
    Interior,
    Obstacle,
    Outer,
}

/// Geometry of the obstacle boundary, used to place new boundary vertices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ObstacleShape {
    Polygon,
    Circle { radius: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    /// Sorted vertex indices.
    pub vertices: [usize; 2],
    pub tag: EdgeTag,
    pub triangles: [usize; 2],
    pub triangle_count: usize,
}

impl Edge {
    pub fn neighbors(&self) -> &[usize] {
        &self.triangles[..self.triangle_count]
    }
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    pub tags: Vec<VertexTag>,
    pub triangles: Vec<[usize; 3]>,
    pub edges: Vec<Edge>,
    /// `triangle_edges[t][k]` is the edge opposite local vertex `k`.
    pub triangle_edges: Vec<[usize; 3]>,
    pub outer_radius: f64,
    pub obstacle: ObstacleShape,
    pub generation: u64,
}

/// Triangles selected for refinement.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MarkedSet {
    indices: Vec<usize>,
}

impl MarkedSet {
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        MarkedSet { indices }
    }

    pub fn all(mesh: &Mesh) -> Self {
        MarkedSet { indices: (0..mesh.triangles.len()).collect() }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Maximum strategy: every triangle with `eta > theta * max eta`.
pub fn mark(etas: &[f64], theta: f64) -> Result<MarkedSet> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::ThetaOutOfRange(theta));
    }
    let max = etas.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return Ok(MarkedSet::default());
    }
    let cut = theta * max;
    Ok(MarkedSet::new(etas.iter().enumerate().filter(|(_, &e)| e > cut).map(|(i, _)| i).collect()))
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn norm(p: Point) -> f64 {
    p[0].hypot(p[1])
}

/// Angle of a point in `[0, 2 pi)`.
pub fn polar_angle(p: Point) -> f64 {
    let t = p[1].atan2(p[0]);
    if t < 0.0 {
        t + 2.0 * PI
    } else {
        t
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct LoadOptions {
    /// Reverse clockwise triangles instead of rejecting them.
    pub fix_orientation: bool,
}

impl Mesh {
    /// Builds and validates a mesh; the refinement edge of each triangle is
    /// set to its longest edge (ties go to the lowest opposite vertex index).
    pub fn new(
        vertices: Vec<Point>,
        tags: Vec<VertexTag>,
        triangles: Vec<[usize; 3]>,
        obstacle: ObstacleShape,
    ) -> Result<Mesh> {
        let triangles = triangles.into_iter().map(|t| rotate_longest_first(&vertices, t)).collect();
        Self::assemble(vertices, tags, triangles, obstacle, 0)
    }

    fn assemble(
        vertices: Vec<Point>,
        tags: Vec<VertexTag>,
        triangles: Vec<[usize; 3]>,
        obstacle: ObstacleShape,
        generation: u64,
    ) -> Result<Mesh> {
        if tags.len() != vertices.len() {
            return Err(Error::Config("one tag per vertex is required".into()));
        }
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidTriangle(t));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::SingularElement(t));
            }
            let area = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if area <= 0.0 {
                return Err(Error::OrientationError(t));
            }
        }

        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut te = [0; 3];
            for k in 0..3 {
                let (a, b) = key(tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let idx = *lookup.entry((a, b)).or_insert_with(|| {
                    edges.push(Edge {
                        vertices: [a, b],
                        tag: EdgeTag::Interior,
                        triangles: [t, usize::MAX],
                        triangle_count: 0,
                    });
                    edges.len() - 1
                });
                let e = &mut edges[idx];
                if e.triangle_count == 2 {
                    return Err(Error::NonConforming(a, b, "edge shared by more than two triangles".into()));
                }
                if e.triangle_count == 1 && e.triangles[0] == t {
                    return Err(Error::NonConforming(a, b, "degenerate triangle".into()));
                }
                e.triangles[e.triangle_count] = t;
                e.triangle_count += 1;
                te[k] = idx;
            }
            triangle_edges.push(te);
        }

        for e in &mut edges {
            if e.triangle_count == 2 {
                continue;
            }
            let [a, b] = e.vertices;
            e.tag = match (tags[a], tags[b]) {
                (VertexTag::Outer, VertexTag::Outer) => EdgeTag::Outer,
                (VertexTag::Obstacle, VertexTag::Obstacle) => EdgeTag::Obstacle,
                _ => {
                    return Err(Error::NonConforming(
                        a,
                        b,
                        "boundary edge whose vertices are not both on the same boundary".into(),
                    ))
                }
            };
        }

        let outer: Vec<f64> = (0..vertices.len())
            .filter(|&v| tags[v] == VertexTag::Outer)
            .map(|v| norm(vertices[v]))
            .collect();
        if outer.len() < 3 {
            return Err(Error::EmptyBoundary(outer.len()));
        }
        let outer_radius = outer.iter().sum::<f64>() / outer.len() as f64;
        if let Some(r) = outer.iter().find(|&&r| (r - outer_radius).abs() > 1e-12 * outer_radius) {
            return Err(Error::InvalidRadii(format!(
                "outer vertex at radius {r} is off the circle of radius {outer_radius}"
            )));
        }
        if let ObstacleShape::Circle { radius } = obstacle {
            for v in (0..vertices.len()).filter(|&v| tags[v] == VertexTag::Obstacle) {
                let r = norm(vertices[v]);
                if (r - radius).abs() > 1e-12 * radius {
                    return Err(Error::InvalidRadii(format!(
                        "obstacle vertex {v} at radius {r} is off the circle of radius {radius}"
                    )));
                }
            }
        }

        Ok(Mesh { vertices, tags, triangles, edges, triangle_edges, outer_radius, obstacle, generation })
    }

    /// Structured annulus `inner < |x| < outer` with `segments` cells around and
    /// `layers` cells across, each cell split along the same diagonal.
    pub fn annulus(inner: f64, outer: f64, segments: usize, layers: usize) -> Result<Mesh> {
        if !(inner > 0.0 && inner < outer) {
            return Err(Error::InvalidRadii(format!("need 0 < inner < outer, got {inner}, {outer}")));
        }
        if segments < 8 || layers < 1 {
            return Err(Error::Config(format!(
                "annulus needs at least 8 segments and 1 layer, got {segments} x {layers}"
            )));
        }
        let mut vertices = Vec::with_capacity(segments * (layers + 1));
        let mut tags = Vec::with_capacity(segments * (layers + 1));
        for l in 0..=layers {
            let r = if l == layers { outer } else { inner + (outer - inner) * l as f64 / layers as f64 };
            let tag = match l {
                0 => VertexTag::Obstacle,
                l if l == layers => VertexTag::Outer,
                _ => VertexTag::Interior,
            };
            for j in 0..segments {
                let t = 2.0 * PI * j as f64 / segments as f64;
                vertices.push([r * t.cos(), r * t.sin()]);
                tags.push(tag);
            }
        }
        let idx = |l: usize, j: usize| l * segments + j % segments;
        let mut triangles = Vec::with_capacity(2 * segments * layers);
        for l in 0..layers {
            for j in 0..segments {
                let (a, b, c, d) = (idx(l, j), idx(l, j + 1), idx(l + 1, j + 1), idx(l + 1, j));
                triangles.push([a, d, c]);
                triangles.push([a, c, b]);
            }
        }
        Mesh::new(vertices, tags, triangles, ObstacleShape::Circle { radius: inner })
    }

    pub fn with_obstacle(mut self, obstacle: ObstacleShape) -> Result<Mesh> {
        self.obstacle = obstacle;
        Mesh::assemble(self.vertices, self.tags, self.triangles, obstacle, self.generation)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn corners(&self, t: usize) -> [Point; 3] {
        let tri = self.triangles[t];
        [self.vertices[tri[0]], self.vertices[tri[1]], self.vertices[tri[2]]]
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        signed_area(a, b, c)
    }

    /// Longest edge of the triangle.
    pub fn diameter(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        dist(a, b).max(dist(b, c)).max(dist(c, a))
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e].vertices;
        dist(self.vertices[a], self.vertices[b])
    }

    pub fn edge_midpoint(&self, e: usize) -> Point {
        let [a, b] = self.edges[e].vertices;
        let (p, q) = (self.vertices[a], self.vertices[b]);
        [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.corners(t);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Smallest interior angle over all triangles, in degrees.
    pub fn min_angle_degrees(&self) -> f64 {
        let mut best = f64::INFINITY;
        for t in 0..self.triangles.len() {
            let p = self.corners(t);
            for k in 0..3 {
                let (o, u, v) = (p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
                let (du, dv) = ([u[0] - o[0], u[1] - o[1]], [v[0] - o[0], v[1] - o[1]]);
                let cos = (du[0] * dv[0] + du[1] * dv[1]) / (norm(du) * norm(dv));
                best = best.min(cos.clamp(-1.0, 1.0).acos().to_degrees());
            }
        }
        best
    }

    /// `V - E + F` with `F` counting triangles.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges.len() as i64 + self.triangles.len() as i64
    }

    pub fn edges_tagged(&self, tag: EdgeTag) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).filter(move |&e| self.edges[e].tag == tag)
    }

    /// Outer-circle vertices sorted by polar angle, with their angles.
    pub fn outer_vertices(&self) -> (Vec<usize>, Vec<f64>) {
        let mut v: Vec<(f64, usize)> = (0..self.vertices.len())
            .filter(|&i| self.tags[i] == VertexTag::Outer)
            .map(|i| (polar_angle(self.vertices[i]), i))
            .collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        (v.iter().map(|x| x.1).collect(), v.iter().map(|x| x.0).collect())
    }

    /// Conformity check: interior edges have two neighbors, boundary edges one,
    /// and all triangles are positively oriented.
    pub fn check_invariants(&self) -> Result<()> {
        for (t, tri) in self.triangles.iter().enumerate() {
            if signed_area(self.vertices[tri[0]], self.vertices[tri[1]], self.vertices[tri[2]]) <= 0.0 {
                return Err(Error::OrientationError(t));
            }
        }
        for e in &self.edges {
            let expected = if e.tag == EdgeTag::Interior { 2 } else { 1 };
            if e.triangle_count != expected {
                return Err(Error::NonConforming(e.vertices[0], e.vertices[1], "wrong neighbor count".into()));
            }
        }
        for &v in self.tags.iter().enumerate().filter(|(_, t)| **t == VertexTag::Outer).map(|(i, _)| i).collect::<Vec<_>>().iter() {
            let r = norm(self.vertices[v]);
            if (r - self.outer_radius).abs() > 1e-12 * self.outer_radius {
                return Err(Error::InvalidRadii(format!("outer vertex {v} off circle")));
            }
        }
        Ok(())
    }

    /// Newest-vertex bisection: the refinement edge of every marked triangle
    /// is bisected, and the closure marks the refinement edge of every
    /// triangle touching a marked edge until the marking is consistent.
    pub fn refine(&self, marked: &MarkedSet) -> Result<Mesh> {
        if let Some(&bad) = marked.indices().iter().find(|&&t| t >= self.triangles.len()) {
            return Err(Error::InvalidTriangle(bad));
        }
        let mut edge_marked = vec![false; self.edges.len()];
        for &t in marked.indices() {
            edge_marked[self.triangle_edges[t][0]] = true;
        }
        self.refine_edges(edge_marked)
    }

    /// Bisects every edge, splitting each triangle into four.
    pub fn refine_uniform(&self) -> Result<Mesh> {
        self.refine_edges(vec![true; self.edges.len()])
    }

    fn refine_edges(&self, mut edge_marked: Vec<bool>) -> Result<Mesh> {
        let mut stack: Vec<usize> = (0..self.edges.len()).filter(|&e| edge_marked[e]).collect();
        while let Some(e) = stack.pop() {
            for &t in self.edges[e].neighbors() {
                let refinement_edge = self.triangle_edges[t][0];
                if !edge_marked[refinement_edge] {
                    edge_marked[refinement_edge] = true;
                    stack.push(refinement_edge);
                }
            }
        }

        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::with_capacity(self.edges.len());
        for (i, e) in self.edges.iter().enumerate() {
            edge_index.insert((e.vertices[0], e.vertices[1]), i);
        }

        let mut vertices = self.vertices.clone();
        let mut tags = self.tags.clone();
        let mut midpoint: Vec<Option<usize>> = vec![None; self.edges.len()];
        for (e, _) in edge_marked.iter().enumerate().filter(|(_, m)| **m) {
            let edge = &self.edges[e];
            let [a, b] = edge.vertices;
            let (p, q) = (self.vertices[a], self.vertices[b]);
            let mut m = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
            let tag = match edge.tag {
                EdgeTag::Interior => VertexTag::Interior,
                EdgeTag::Outer => {
                    m = project(m, self.outer_radius);
                    VertexTag::Outer
                }
                EdgeTag::Obstacle => {
                    if let ObstacleShape::Circle { radius } = self.obstacle {
                        m = project(m, radius);
                    }
                    VertexTag::Obstacle
                }
            };
            vertices.push(m);
            tags.push(tag);
            midpoint[e] = Some(vertices.len() - 1);
        }

        let marked_mid = |a: usize, b: usize| -> Option<usize> {
            edge_index.get(&key(a, b)).and_then(|&e| midpoint[e])
        };
        let mut triangles = Vec::with_capacity(self.triangles.len() * 2);
        for tri in &self.triangles {
            bisect(*tri, &marked_mid, &mut triangles);
        }
        Mesh::assemble(vertices, tags, triangles, self.obstacle, self.generation + 1)
    }

    /// Text format: `vertices V triangles T`, then `x y tag` lines, then
    /// `i j k` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(48 * (self.vertices.len() + self.triangles.len()));
        let _ = writeln!(out, "vertices {} triangles {}", self.vertices.len(), self.triangles.len());
        for (p, t) in self.vertices.iter().zip(&self.tags) {
            let _ = writeln!(out, "{:?} {:?} {}", p[0], p[1], t.code());
        }
        for t in &self.triangles {
            let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
        }
        out
    }

    pub fn parse(text: &str, obstacle: ObstacleShape, options: LoadOptions) -> Result<Mesh> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let err = |line: usize, message: String| Error::ParseError { line, message };

        let (hline, header) = lines.next().ok_or_else(|| err(1, "empty mesh file".into()))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 4 || h[0] != "vertices" || h[2] != "triangles" {
            return Err(err(hline, format!("expected `vertices V triangles T`, got `{header}`")));
        }
        let nv: usize = h[1].parse().map_err(|_| err(hline, format!("bad vertex count `{}`", h[1])))?;
        let nt: usize = h[3].parse().map_err(|_| err(hline, format!("bad triangle count `{}`", h[3])))?;

        let mut vertices = Vec::with_capacity(nv);
        let mut tags = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (ln, l) = lines.next().ok_or_else(|| err(0, "unexpected end of file in vertex block".into()))?;
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 3 {
                return Err(err(ln, format!("expected `x y tag`, got `{l}`")));
            }
            let x: f64 = f[0].parse().map_err(|_| err(ln, format!("bad coordinate `{}`", f[0])))?;
            let y: f64 = f[1].parse().map_err(|_| err(ln, format!("bad coordinate `{}`", f[1])))?;
            let tag = f[2]
                .parse::<u8>()
                .ok()
                .and_then(VertexTag::from_code)
                .ok_or_else(|| err(ln, format!("bad tag `{}`", f[2])))?;
            vertices.push([x, y]);
            tags.push(tag);
        }
        let mut triangles = Vec::with_capacity(nt);
        let mut seen: HashMap<[usize; 3], usize> = HashMap::with_capacity(nt);
        for t in 0..nt {
            let (ln, l) = lines.next().ok_or_else(|| err(0, "unexpected end of file in triangle block".into()))?;
            let f: Vec<usize> = l
                .split_whitespace()
                .map(|s| s.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| err(ln, format!("bad triangle `{l}`")))?;
            if f.len() != 3 {
                return Err(err(ln, format!("expected `i j k`, got `{l}`")));
            }
            if let Some(&v) = f.iter().find(|&&v| v >= nv) {
                return Err(err(ln, format!("vertex index {v} out of range")));
            }
            let mut tri = [f[0], f[1], f[2]];
            let mut sorted = tri;
            sorted.sort_unstable();
            if seen.insert(sorted, t).is_some() {
                return Err(Error::NonConforming(sorted[0], sorted[1], format!("duplicated triangle on line {ln}")));
            }
            if signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]) < 0.0 {
                if options.fix_orientation {
                    tri.swap(1, 2);
                } else {
                    return Err(Error::OrientationError(t));
                }
            }
            triangles.push(tri);
        }
        if let Some((ln, l)) = lines.next() {
            return Err(err(ln, format!("trailing content `{l}`")));
        }
        Mesh::new(vertices, tags, triangles, obstacle)
    }

    pub fn load(path: impl AsRef<Path>, obstacle: ObstacleShape, options: LoadOptions) -> Result<Mesh> {
        let text = std::fs::read_to_string(path)?;
        Mesh::parse(&text, obstacle, options)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Default-options load of a polygonal-obstacle mesh file.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    Mesh::load(path, ObstacleShape::Polygon, LoadOptions::default())
}

pub fn generate_annulus(inner: f64, outer: f64, segments: usize, layers: usize) -> Result<Mesh> {
    Mesh::annulus(inner, outer, segments, layers)
}

pub fn refine(mesh: &Mesh, marked: &MarkedSet) -> Result<Mesh> {
    mesh.refine(marked)
}

/// Per-triangle scalar export, one `triangle_index value` line each.
pub fn triangle_scalars_text(values: &[f64]) -> String {
    let mut out = String::with_capacity(values.len() * 28);
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(out, "{i} {v:?}");
    }
    out
}

fn project(p: Point, radius: f64) -> Point {
    let r = norm(p);
    [p[0] * radius / r, p[1] * radius / r]
}

fn rotate_longest_first(vertices: &[Point], tri: [usize; 3]) -> [usize; 3] {
    // edge opposite local vertex k
    let len = |k: usize| dist(vertices[tri[(k + 1) % 3]], vertices[tri[(k + 2) % 3]]);
    let mut best = 0;
    for k in 1..3 {
        let (lk, lb) = (len(k), len(best));
        if lk > lb || (lk == lb && tri[k] < tri[best]) {
            best = k;
        }
    }
    [tri[best], tri[(best + 1) % 3], tri[(best + 2) % 3]]
}

fn bisect(tri: [usize; 3], midpoint: &impl Fn(usize, usize) -> Option<usize>, out: &mut Vec<[usize; 3]>) {
    let [peak, a, b] = tri;
    match midpoint(a, b) {
        Some(m) => {
            bisect([m, peak, a], midpoint, out);
            bisect([m, b, peak], midpoint, out);
        }
        None => out.push(tri),
    }
}
