//! Static 3-D kd-tree for nearest-centroid queries.
//!
//! Ties on distance resolve to the lowest id, which the clustering and the
//! inference fallback both rely on.

const DIMS: usize = 3;

#[derive(Debug, Clone, Default)]
pub struct KdTree {
    // Implicit layout: the subtree over `lo..hi` stores its splitting node at
    // `(lo + hi) / 2`, split axis = depth % 3.
    points: Vec<[f64; DIMS]>,
    ids: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: u32,
    pub dist2: f64,
}

impl KdTree {
    pub fn build(items: impl IntoIterator<Item = (u32, [f64; DIMS])>) -> Self {
        let mut items: Vec<(u32, [f64; DIMS])> = items.into_iter().collect();
        build_rec(&mut items, 0);
        let (ids, points) = items.into_iter().unzip();
        Self { points, ids }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Nearest point to `q`, skipping `exclude`. `None` when the tree holds
    /// no other point.
    pub fn nearest(&self, q: &[f64; DIMS], exclude: Option<u32>) -> Option<Neighbor> {
        let mut best: Option<Neighbor> = None;
        self.search(0, self.ids.len(), 0, q, exclude, &mut best);
        best
    }

    fn search(
        &self,
        lo: usize,
        hi: usize,
        depth: usize,
        q: &[f64; DIMS],
        exclude: Option<u32>,
        best: &mut Option<Neighbor>,
    ) {
        if lo >= hi {
            return;
        }
        let mid = (lo + hi) / 2;
        let p = &self.points[mid];
        let id = self.ids[mid];
        if Some(id) != exclude {
            let dist2 = dist2(p, q);
            let better = match best {
                None => true,
                Some(b) => dist2 < b.dist2 || (dist2 == b.dist2 && id < b.id),
            };
            if better {
                *best = Some(Neighbor { id, dist2 });
            }
        }
        let axis = depth % DIMS;
        let diff = q[axis] - p[axis];
        let (near, far) = if diff < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.search(near.0, near.1, depth + 1, q, exclude, best);
        // `<=` keeps equidistant points on the far side reachable for the id tie-break.
        if best.is_none_or(|b| diff * diff <= b.dist2) {
            self.search(far.0, far.1, depth + 1, q, exclude, best);
        }
    }
}

fn build_rec(items: &mut [(u32, [f64; DIMS])], depth: usize) {
    if items.len() <= 1 {
        return;
    }
    let axis = depth % DIMS;
    let mid = items.len() / 2;
    items.select_nth_unstable_by(mid, |a, b| a.1[axis].total_cmp(&b.1[axis]));
    let (left, rest) = items.split_at_mut(mid);
    build_rec(left, depth + 1);
    build_rec(&mut rest[1..], depth + 1);
}

pub fn dist2(a: &[f64; DIMS], b: &[f64; DIMS]) -> f64 {
    (0..DIMS).map(|i| (a[i] - b[i]).powi(2)).sum()
}
