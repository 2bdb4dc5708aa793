//! Binary BVH over arbitrary primitive bounds, built with a binned SAH.

use alloc::vec::Vec;

use crate::math::Vec3;

pub const SAH_BINS: usize = 16;
/// Depth past which splits fall back to the median, bounding traversal
/// stack use.
const MAX_SAH_DEPTH: usize = 40;
pub const TRAVERSAL_STACK: usize = 96;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub const EMPTY: Aabb = Aabb {
        min: Vec3::splat(f64::INFINITY),
        max: Vec3::splat(f64::NEG_INFINITY),
    };

    pub fn from_points(points: &[Vec3]) -> Aabb {
        points.iter().fold(Aabb::EMPTY, |b, p| b.grow(*p))
    }

    #[inline]
    pub fn grow(self, p: Vec3) -> Aabb {
        Aabb { min: self.min.min(p), max: self.max.max(p) }
    }

    #[inline]
    pub fn union(self, o: Aabb) -> Aabb {
        Aabb { min: self.min.min(o.min), max: self.max.max(o.max) }
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x || self.min.y > self.max.y || self.min.z > self.max.z
    }

    #[inline]
    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn centroid(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn surface_area(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let e = self.extent();
        2.0 * (e.x * e.y + e.y * e.z + e.z * e.x)
    }

    pub fn diagonal(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.extent().length()
        }
    }

    pub fn contains(&self, o: &Aabb) -> bool {
        o.is_empty()
            || (self.min.x <= o.min.x
                && self.min.y <= o.min.y
                && self.min.z <= o.min.z
                && self.max.x >= o.max.x
                && self.max.y >= o.max.y
                && self.max.z >= o.max.z)
    }

    /// Box corners.
    pub fn corners(&self) -> [Vec3; 8] {
        let (a, b) = (self.min, self.max);
        [
            Vec3::new(a.x, a.y, a.z),
            Vec3::new(b.x, a.y, a.z),
            Vec3::new(a.x, b.y, a.z),
            Vec3::new(b.x, b.y, a.z),
            Vec3::new(a.x, a.y, b.z),
            Vec3::new(b.x, a.y, b.z),
            Vec3::new(a.x, b.y, b.z),
            Vec3::new(b.x, b.y, b.z),
        ]
    }

    /// Slab test. Returns the entry distance when the ray overlaps the box
    /// within `[t_min, t_max]`.
    #[inline]
    pub fn hit(&self, origin: Vec3, inv_dir: Vec3, t_min: f64, t_max: f64) -> Option<f64> {
        let mut t0 = t_min;
        let mut t1 = t_max;
        for axis in 0..3 {
            let a = (self.min[axis] - origin[axis]) * inv_dir[axis];
            let b = (self.max[axis] - origin[axis]) * inv_dir[axis];
            // NaN: origin on a slab plane with a zero direction component.
            // Such a ray lies in the face plane; count the slab as overlapped.
            if a.is_nan() || b.is_nan() {
                continue;
            }
            let (near, far) = if a <= b { (a, b) } else { (b, a) };
            if near > t0 {
                t0 = near;
            }
            if far < t1 {
                t1 = far;
            }
        }
        // Conservative widening keeps grazing hits on flat boxes.
        if t0 <= t1 * (1.0 + 4.0 * f64::EPSILON) {
            Some(t0)
        } else {
            None
        }
    }
}

/// Node of a flattened BVH. Interior nodes have `count == 0` and their
/// children at `first` and `first + 1`; leaves cover `order[first..first+count]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub bounds: Aabb,
    pub first: u32,
    pub count: u32,
}

impl Node {
    #[inline]
    pub fn is_leaf(&self) -> bool {
        self.count > 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bvh {
    pub nodes: Vec<Node>,
    /// Primitive indices in leaf order.
    pub order: Vec<u32>,
    pub max_leaf: usize,
}

/// Result of a structural check over a built hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BvhAudit {
    pub leaves: usize,
    pub max_depth: usize,
}

impl Bvh {
    /// Binned-SAH build. Nodes holding at most `max_leaf` primitives become
    /// leaves when splitting does not lower the SAH cost.
    pub fn build(bounds: &[Aabb], max_leaf: usize) -> Bvh {
        assert!(!bounds.is_empty(), "bvh over no primitives");
        let max_leaf = max_leaf.max(1);
        let centroids: Vec<Vec3> = bounds.iter().map(|b| b.centroid()).collect();
        let mut order: Vec<u32> = (0..bounds.len() as u32).collect();
        let mut nodes = Vec::with_capacity(2 * bounds.len());
        nodes.push(Node { bounds: Aabb::EMPTY, first: 0, count: 0 });
        let mut builder = Builder { bounds, centroids: &centroids, max_leaf, nodes: &mut nodes };
        builder.split(0, &mut order, 0, 0);
        Bvh { nodes, order, max_leaf }
    }

    pub fn bounds(&self) -> Aabb {
        self.nodes[0].bounds
    }

    /// Verifies every primitive sits in exactly one leaf, leaves respect
    /// the size limit and child boxes nest in their parents.
    pub fn audit(&self, prim_bounds: &[Aabb]) -> Result<BvhAudit, &'static str> {
        let mut seen = alloc::vec![0u32; prim_bounds.len()];
        let mut leaves = 0;
        let mut max_depth = 0;
        let mut visits = 0usize;
        let mut stack = alloc::vec![(0usize, 0usize)];
        while let Some((i, depth)) = stack.pop() {
            visits += 1;
            if visits > self.nodes.len() {
                return Err("cycle in node graph");
            }
            max_depth = max_depth.max(depth);
            let node = &self.nodes[i];
            if node.is_leaf() {
                leaves += 1;
                if node.count as usize > self.max_leaf {
                    return Err("leaf exceeds size limit");
                }
                for &p in &self.order[node.first as usize..(node.first + node.count) as usize] {
                    seen[p as usize] += 1;
                    if !node.bounds.contains(&prim_bounds[p as usize]) {
                        return Err("primitive outside leaf bounds");
                    }
                }
            } else {
                for c in [node.first as usize, node.first as usize + 1] {
                    if c >= self.nodes.len() {
                        return Err("child index out of range");
                    }
                    if !node.bounds.contains(&self.nodes[c].bounds) {
                        return Err("child bounds escape parent");
                    }
                    stack.push((c, depth + 1));
                }
            }
        }
        if seen.iter().any(|&n| n != 1) {
            return Err("primitive not in exactly one leaf");
        }
        Ok(BvhAudit { leaves, max_depth })
    }
}

struct Builder<'a> {
    bounds: &'a [Aabb],
    centroids: &'a [Vec3],
    max_leaf: usize,
    nodes: &'a mut Vec<Node>,
}

#[derive(Clone, Copy)]
struct Bin {
    bounds: Aabb,
    count: usize,
}

impl Builder<'_> {
    fn split(&mut self, node: usize, prims: &mut [u32], offset: usize, depth: usize) {
        let node_bounds = prims.iter().fold(Aabb::EMPTY, |b, &p| b.union(self.bounds[p as usize]));
        let n = prims.len();
        self.nodes[node].bounds = node_bounds;
        let make_leaf = |nodes: &mut Vec<Node>| {
            nodes[node].first = offset as u32;
            nodes[node].count = n as u32;
        };
        if n == 1 {
            make_leaf(self.nodes);
            return;
        }
        let cb = prims.iter().fold(Aabb::EMPTY, |b, &p| b.grow(self.centroids[p as usize]));
        let sah = if depth < MAX_SAH_DEPTH { self.best_sah_split(prims, &cb) } else { None };
        let leaf_cost = n as f64;
        let mid = match sah {
            Some((axis, split_bin, cost)) => {
                if n <= self.max_leaf && cost >= leaf_cost {
                    make_leaf(self.nodes);
                    return;
                }
                let (lo, scale) = bin_mapping(&cb, axis);
                partition(prims, |p| bin_index(self.centroids[p as usize][axis], lo, scale) < split_bin)
            }
            None => {
                if n <= self.max_leaf {
                    make_leaf(self.nodes);
                    return;
                }
                let axis = cb.extent().max_axis();
                prims.sort_unstable_by(|&a, &b| {
                    self.centroids[a as usize][axis]
                        .total_cmp(&self.centroids[b as usize][axis])
                        .then(a.cmp(&b))
                });
                n / 2
            }
        };
        let left = self.nodes.len();
        self.nodes[node].first = left as u32;
        self.nodes[node].count = 0;
        self.nodes.push(Node { bounds: Aabb::EMPTY, first: 0, count: 0 });
        self.nodes.push(Node { bounds: Aabb::EMPTY, first: 0, count: 0 });
        let (l, r) = prims.split_at_mut(mid);
        self.split(left, l, offset, depth + 1);
        self.split(left + 1, r, offset + mid, depth + 1);
    }

    /// Best `(axis, first right bin, cost)` over all axes, in units of
    /// primitive intersection cost with traversal costing 1/8 of that.
    fn best_sah_split(&self, prims: &[u32], cb: &Aabb) -> Option<(usize, usize, f64)> {
        let parent_area = prims
            .iter()
            .fold(Aabb::EMPTY, |b, &p| b.union(self.bounds[p as usize]))
            .surface_area();
        let mut best: Option<(usize, usize, f64)> = None;
        for axis in 0..3 {
            if !(cb.extent()[axis] > 0.0) {
                continue;
            }
            let (lo, scale) = bin_mapping(cb, axis);
            let mut bins = [Bin { bounds: Aabb::EMPTY, count: 0 }; SAH_BINS];
            for &p in prims {
                let b = &mut bins[bin_index(self.centroids[p as usize][axis], lo, scale)];
                b.count += 1;
                b.bounds = b.bounds.union(self.bounds[p as usize]);
            }
            // Sweep from the right to get suffix areas and counts.
            let mut right_area = [0.0; SAH_BINS];
            let mut right_count = [0usize; SAH_BINS];
            let mut acc = Aabb::EMPTY;
            let mut cnt = 0;
            for i in (1..SAH_BINS).rev() {
                acc = acc.union(bins[i].bounds);
                cnt += bins[i].count;
                right_area[i] = acc.surface_area();
                right_count[i] = cnt;
            }
            let mut acc = Aabb::EMPTY;
            let mut cnt = 0;
            for split in 1..SAH_BINS {
                acc = acc.union(bins[split - 1].bounds);
                cnt += bins[split - 1].count;
                if cnt == 0 || right_count[split] == 0 {
                    continue;
                }
                let cost = if parent_area > 0.0 {
                    0.125 + (acc.surface_area() * cnt as f64 + right_area[split] * right_count[split] as f64) / parent_area
                } else {
                    0.125 + prims.len() as f64
                };
                if best.is_none_or(|b| cost < b.2) {
                    best = Some((axis, split, cost));
                }
            }
        }
        best
    }
}

#[inline]
fn bin_mapping(cb: &Aabb, axis: usize) -> (f64, f64) {
    let lo = cb.min[axis];
    let ext = cb.max[axis] - lo;
    (lo, SAH_BINS as f64 / ext)
}

#[inline]
fn bin_index(c: f64, lo: f64, scale: f64) -> usize {
    let i = ((c - lo) * scale) as usize;
    i.min(SAH_BINS - 1)
}

/// In-place stable-enough partition; returns the count of elements for
/// which `pred` holds, all moved to the front.
fn partition(prims: &mut [u32], pred: impl Fn(u32) -> bool) -> usize {
    let mut i = 0;
    for j in 0..prims.len() {
        if pred(prims[j]) {
            prims.swap(i, j);
            i += 1;
        }
    }
    i
}
