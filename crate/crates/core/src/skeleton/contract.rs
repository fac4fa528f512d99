//! Skeleton extraction by implicit Laplacian contraction followed by
//! clustering of the contracted vertices.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, HashMap};

use crate::geometry::{Point3, Vec3};
use crate::mesh::SurfaceMesh;
use crate::skeleton::CurveSkeleton;
use crate::solve::{ReducedSolver, SolveConfig};
use crate::sparse::{SparseMatrix, TripletBuilder};
use crate::{Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkeletonParams<T> {
    /// Initial contraction weight; `None` uses `1 / (10 sqrt(mean one-ring area))`.
    pub initial_contraction: Option<T>,
    /// Factor applied to the contraction weight after each iteration.
    pub contraction_growth: T,
    /// Base attraction weight, scaled per vertex by `sqrt(A0 / A)`.
    pub attraction: T,
    pub max_iterations: usize,
    /// Contraction stops once the area falls below this fraction of the original.
    pub area_ratio: T,
    /// An iteration that shrinks the bounding-box diagonal below this
    /// fraction of the previous one is rejected and contraction stops.
    pub extent_tolerance: T,
    /// Clustering radius; `None` uses twice the mean contracted edge length.
    pub collapse_radius: Option<T>,
    /// Leaf chains of at most this many bones hanging off a branch joint are removed.
    pub max_spur_bones: usize,
}

impl<T: Real> Default for SkeletonParams<T> {
    fn default() -> Self {
        Self {
            initial_contraction: None,
            contraction_growth: T::lit(2.0),
            attraction: T::one(),
            max_iterations: 30,
            area_ratio: T::lit(1e-4),
            extent_tolerance: T::lit(0.9),
            collapse_radius: None,
            max_spur_bones: 2,
        }
    }
}

/// Cotangent Laplacian that tolerates the slivers contraction produces:
/// weights are clamped to `[0, 1e4]` and flat triangles contribute nothing.
fn contraction_laplacian<T: Real>(x: &[Point3<T>], tris: &[[usize; 3]]) -> SparseMatrix<T> {
    let n = x.len();
    let cap = T::lit(1e4);
    let mut b = TripletBuilder::with_capacity(n, n, 12 * tris.len());
    for tri in tris {
        let p = tri.map(|v| x[v]);
        let twice_area = (p[1] - p[0]).cross(p[2] - p[0]).norm();
        if !(twice_area > T::zero()) {
            continue;
        }
        for k in 0..3 {
            let (a, c, o) = (k, (k + 1) % 3, (k + 2) % 3);
            let cot = (p[a] - p[o]).dot(p[c] - p[o]) / twice_area;
            let w = (cot * T::lit(0.5)).max(T::zero()).min(cap);
            let (i, j) = (tri[a], tri[c]);
            b.push(i, j, w);
            b.push(j, i, w);
            b.push(i, i, -w);
            b.push(j, j, -w);
        }
    }
    b.build()
}

fn one_ring_areas<T: Real>(x: &[Point3<T>], tris: &[[usize; 3]]) -> Vec<T> {
    let mut a = vec![T::zero(); x.len()];
    for tri in tris {
        let p = tri.map(|v| x[v]);
        let area = (p[1] - p[0]).cross(p[2] - p[0]).norm() * T::lit(0.5);
        for &v in tri {
            a[v] += area;
        }
    }
    a
}

fn extent<T: Real>(x: &[Point3<T>]) -> T {
    let mut lo = x[0];
    let mut hi = x[0];
    for p in x {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (hi - lo).norm()
}

/// Contracted vertex positions.
fn contract<T: Real>(surface: &SurfaceMesh<T>, params: &SkeletonParams<T>) -> Result<Vec<Point3<T>>> {
    let tris = &surface.triangles;
    let n = surface.vertex_count();
    let mut x = surface.vertices.clone();
    let a0 = one_ring_areas(&x, tris);
    let total0: T = surface.total_area();
    let mean_ring = a0.iter().copied().sum::<T>() / T::count(n.max(1));
    let mut wl = params
        .initial_contraction
        .unwrap_or_else(|| T::one() / (T::lit(10.0) * mean_ring.sqrt()));
    let all_free = vec![false; n];
    let config = SolveConfig::direct();
    let mut prev_area = total0;
    for it in 0..params.max_iterations {
        let a = one_ring_areas(&x, tris);
        let wh: Vec<T> = a
            .iter()
            .zip(&a0)
            .map(|(&ai, &a0i)| params.attraction * (a0i / ai.max(a0i * T::lit(1e-12))).sqrt())
            .collect();
        let l = contraction_laplacian(&x, tris);
        let system = SparseMatrix::from_diagonal(&wh).add(&l.scale(-wl))?;
        let solver = ReducedSolver::new(&system, &all_free, &config).map_err(|_| Error::ContractionDiverged(it))?;
        let mut next = vec![Vec3::zero(); n];
        for axis in 0..3 {
            let rhs: Vec<T> = x.iter().zip(&wh).map(|(p, w)| p[axis] * *w).collect();
            let sol = solver.solve(&rhs, &rhs, None).map_err(|_| Error::ContractionDiverged(it))?;
            for (p, v) in next.iter_mut().zip(sol.x) {
                p[axis] = v;
            }
        }
        if next.iter().any(|p| !p.is_finite()) {
            return Err(Error::ContractionDiverged(it));
        }
        let area: T = one_ring_areas(&next, tris).into_iter().sum::<T>() / T::lit(3.0);
        // Once the surface has thinned to curves, further contraction only
        // shortens them; keep the previous iterate.
        if !(area < prev_area) || extent(&next) < params.extent_tolerance * extent(&x) {
            break;
        }
        x = next;
        prev_area = area;
        if area < params.area_ratio * total0 {
            break;
        }
        wl *= params.contraction_growth;
    }
    Ok(x)
}

type Cell = (i64, i64, i64);

fn cell_of<T: Real>(p: Point3<T>, h: T) -> Cell {
    let c = |v: T| (v / h).floor().to_i64().unwrap_or(0);
    (c(p.x), c(p.y), c(p.z))
}

/// Greedy cover of the contracted points by radius-`r` balls, then nearest
/// seed assignment. Returns the cluster index of every vertex.
fn cluster<T: Real>(y: &[Point3<T>], r: T) -> Vec<usize> {
    let mut grid: HashMap<Cell, Vec<usize>> = HashMap::new();
    let mut seeds: Vec<usize> = Vec::new();
    let near = |grid: &HashMap<Cell, Vec<usize>>, seeds: &[usize], p: Point3<T>| -> Option<(usize, T)> {
        let (cx, cy, cz) = cell_of(p, r);
        let mut best: Option<(usize, T)> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(list) = grid.get(&(cx + dx, cy + dy, cz + dz)) {
                        for &s in list {
                            let d = (y[seeds[s]] - p).norm();
                            if best.map_or(true, |(_, bd)| d < bd) {
                                best = Some((s, d));
                            }
                        }
                    }
                }
            }
        }
        best
    };
    for (v, &p) in y.iter().enumerate() {
        if near(&grid, &seeds, p).map_or(true, |(_, d)| d > r) {
            grid.entry(cell_of(p, r)).or_default().push(seeds.len());
            seeds.push(v);
        }
    }
    y.iter().map(|&p| near(&grid, &seeds, p).map(|(s, _)| s).unwrap_or(0)).collect()
}

#[derive(PartialEq)]
struct Candidate(f64, usize, usize);

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed so the heap pops the shortest edge first.
        other.0.total_cmp(&self.0).then((other.1, other.2).cmp(&(self.1, self.2)))
    }
}

fn sorted_face(mut f: [usize; 3]) -> Option<[usize; 3]> {
    f.sort_unstable();
    (f[0] != f[1] && f[1] != f[2]).then_some(f)
}

/// Collapses the shortest edges of the cluster complex until no triangle is
/// left, so the remaining edges form a graph. Returns the surviving cluster
/// of every input cluster and the adjacency of the survivors.
fn remove_faces<T: Real>(
    centers: &[Point3<T>],
    counts: &[usize],
    edges: &BTreeSet<(usize, usize)>,
    faces: &[[usize; 3]],
) -> (Vec<usize>, Vec<BTreeSet<usize>>) {
    let n = centers.len();
    let mut pos = centers.to_vec();
    let mut weight: Vec<T> = counts.iter().map(|&c| T::count(c)).collect();
    let mut merged_into: Vec<usize> = (0..n).collect();
    let mut adj = vec![BTreeSet::new(); n];
    for &(i, j) in edges {
        adj[i].insert(j);
        adj[j].insert(i);
    }
    let mut face_set: BTreeSet<[usize; 3]> = BTreeSet::new();
    let mut incident = vec![BTreeSet::new(); n];
    for f in faces.iter().filter_map(|&f| sorted_face(f)) {
        if face_set.insert(f) {
            for &v in &f {
                incident[v].insert(f);
            }
        }
    }
    let cost = |pos: &[Point3<T>], a: usize, b: usize| (pos[a] - pos[b]).norm().to_f64().unwrap_or(f64::INFINITY);
    let mut heap: BinaryHeap<Candidate> = edges.iter().map(|&(a, b)| Candidate(cost(&pos, a, b), a, b)).collect();
    while !face_set.is_empty() {
        let Some(Candidate(c, a, b)) = heap.pop() else { break };
        if merged_into[a] != a || merged_into[b] != b || !adj[a].contains(&b) || c != cost(&pos, a, b) {
            continue;
        }
        if !incident[a].iter().any(|f| f.contains(&b)) {
            continue;
        }
        let total = weight[a] + weight[b];
        pos[a] = Point3::from((pos[a] * weight[a] + pos[b] * weight[b]) * (T::one() / total));
        weight[a] = total;
        merged_into[b] = a;
        for w in std::mem::take(&mut adj[b]) {
            adj[w].remove(&b);
            if w != a {
                adj[w].insert(a);
                adj[a].insert(w);
            }
        }
        for f in std::mem::take(&mut incident[b]) {
            face_set.remove(&f);
            for &v in &f {
                incident[v].remove(&f);
            }
            if let Some(g) = sorted_face(f.map(|v| if v == b { a } else { v })) {
                if face_set.insert(g) {
                    for &v in &g {
                        incident[v].insert(g);
                    }
                }
            }
        }
        for &w in &adj[a] {
            heap.push(Candidate(cost(&pos, a.min(w), a.max(w)), a.min(w), a.max(w)));
        }
    }
    let root: Vec<usize> = (0..n)
        .map(|mut c| {
            while merged_into[c] != c {
                c = merged_into[c];
            }
            c
        })
        .collect();
    (root, adj)
}

/// Removes leaf chains of at most `max_bones` bones that end at a branch
/// joint, shortest first. Returns the surviving joints.
fn prune_spurs(adj: &mut [BTreeSet<usize>], max_bones: usize) -> Vec<bool> {
    let nj = adj.len();
    let mut alive = vec![true; nj];
    loop {
        let mut best: Option<Vec<usize>> = None;
        for leaf in 0..nj {
            if !alive[leaf] || adj[leaf].len() != 1 {
                continue;
            }
            let mut chain = vec![leaf];
            let (mut prev, mut cur) = (leaf, *adj[leaf].iter().next().unwrap());
            while adj[cur].len() == 2 && chain.len() <= max_bones {
                chain.push(cur);
                let next = *adj[cur].iter().find(|&&w| w != prev).unwrap();
                prev = cur;
                cur = next;
            }
            if adj[cur].len() >= 3 && chain.len() <= max_bones && best.as_ref().map_or(true, |b| chain.len() < b.len()) {
                best = Some(chain);
            }
        }
        let Some(chain) = best else { break };
        for v in chain {
            alive[v] = false;
            for w in std::mem::take(&mut adj[v]) {
                adj[w].remove(&v);
            }
        }
    }
    alive
}

/// Extracts a curve skeleton from a closed manifold surface and binds every
/// surface vertex to a joint.
pub fn skeletonize<T: Real>(surface: &SurfaceMesh<T>, params: &SkeletonParams<T>) -> Result<CurveSkeleton<T>> {
    if surface.vertex_count() == 0 || !surface.is_closed_manifold() {
        return Err(Error::NonManifold("skeletonization needs a closed manifold surface".into()));
    }
    if params.max_iterations == 0 || !(params.contraction_growth >= T::one()) {
        return Err(Error::InvalidArgument("contraction needs at least one iteration and growth >= 1".into()));
    }
    let y = contract(surface, params)?;
    let edges: Vec<(usize, usize)> = surface.edge_triangles().into_keys().collect();
    let radius = params.collapse_radius.unwrap_or_else(|| {
        let total: T = edges.iter().map(|&(i, j)| (y[i] - y[j]).norm()).sum();
        T::lit(2.0) * total / T::count(edges.len().max(1))
    });
    let radius = radius.max(T::min_positive_value().sqrt());
    let initial = cluster(&y, radius);
    let nc0 = initial.iter().max().map_or(0, |m| m + 1);
    let mut centers = vec![Vec3::zero(); nc0];
    let mut sizes = vec![0usize; nc0];
    for (v, &c) in initial.iter().enumerate() {
        centers[c] += y[v];
        sizes[c] += 1;
    }
    let centers: Vec<Point3<T>> =
        centers.iter().zip(&sizes).map(|(s, &c)| *s * (T::one() / T::count(c))).collect();
    let mut links = BTreeSet::new();
    for &(i, j) in &edges {
        let (a, b) = (initial[i], initial[j]);
        if a != b {
            links.insert((a.min(b), a.max(b)));
        }
    }
    let faces: Vec<[usize; 3]> = surface.triangles.iter().map(|t| t.map(|v| initial[v])).collect();
    let (root, full_adj) = remove_faces(&centers, &sizes, &links, &faces);

    let mut compact = vec![usize::MAX; nc0];
    let mut nc = 0;
    for c in 0..nc0 {
        if root[c] == c {
            compact[c] = nc;
            nc += 1;
        }
    }
    let cluster_of: Vec<usize> = initial.iter().map(|&c| compact[root[c]]).collect();
    let mut adj = vec![BTreeSet::new(); nc];
    for (c, nbrs) in full_adj.iter().enumerate() {
        if root[c] == c {
            adj[compact[c]] = nbrs.iter().map(|&w| compact[w]).collect();
        }
    }
    let mut sums = vec![Vec3::zero(); nc];
    let mut counts = vec![0usize; nc];
    for (v, &c) in cluster_of.iter().enumerate() {
        sums[c] += surface.vertices[v];
        counts[c] += 1;
    }
    let joints: Vec<Point3<T>> =
        sums.iter().zip(&counts).map(|(s, &c)| *s * (T::one() / T::count(c))).collect();
    let alive = prune_spurs(&mut adj, params.max_spur_bones);

    let mut new_index = vec![usize::MAX; nc];
    let mut kept = Vec::new();
    for c in 0..nc {
        if alive[c] {
            new_index[c] = kept.len();
            kept.push(joints[c]);
        }
    }
    let mut bones = Vec::new();
    for (i, nbrs) in adj.iter().enumerate() {
        for &j in nbrs.range(i + 1..) {
            bones.push([new_index[i], new_index[j]]);
        }
    }
    let bind = cluster_of
        .iter()
        .enumerate()
        .map(|(v, &c)| {
            if alive[c] {
                new_index[c]
            } else {
                let p = surface.vertices[v];
                (0..kept.len())
                    .min_by(|&a, &b| (kept[a] - p).norm().partial_cmp(&(kept[b] - p).norm()).unwrap())
                    .unwrap_or(0)
            }
        })
        .collect();
    CurveSkeleton::new(kept, bones, bind)
}
