use rustc_hash::FxHashMap;

use crate::geometry::Point3;

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub point: Point3,
    pub parent: Option<usize>,
    /// Cost-to-come from the root along parent links.
    pub cost: f64,
}

type Cell = (i64, i64, i64);

/// Tree rooted at the start vertex (index 0). A hash grid with cell size
/// equal to the rewiring radius answers neighbourhood queries.
#[derive(Debug, Clone)]
pub struct PlanGraph {
    vertices: Vec<Vertex>,
    children: Vec<Vec<usize>>,
    grid: FxHashMap<Cell, Vec<usize>>,
    cell: f64,
}

impl PlanGraph {
    pub fn new(root: Point3, cell: f64) -> Self {
        let mut g = Self {
            vertices: Vec::with_capacity(1024),
            children: Vec::with_capacity(1024),
            grid: FxHashMap::default(),
            cell: cell.max(1e-6),
        };
        g.push(Vertex {
            point: root,
            parent: None,
            cost: 0.0,
        });
        g
    }

    fn cell_of(&self, p: &Point3) -> Cell {
        (
            (p.x / self.cell).floor() as i64,
            (p.y / self.cell).floor() as i64,
            (p.z / self.cell).floor() as i64,
        )
    }

    fn push(&mut self, v: Vertex) -> usize {
        let idx = self.vertices.len();
        let c = self.cell_of(&v.point);
        self.grid.entry(c).or_default().push(idx);
        self.vertices.push(v);
        self.children.push(Vec::new());
        idx
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, i: usize) -> &Vertex {
        &self.vertices[i]
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn point(&self, i: usize) -> Point3 {
        self.vertices[i].point
    }

    pub fn cost(&self, i: usize) -> f64 {
        self.vertices[i].cost
    }

    /// Adds `p` as a child of `parent`.
    pub fn add(&mut self, p: Point3, parent: usize) -> usize {
        let cost = self.vertices[parent].cost + self.vertices[parent].point.distance(&p);
        let idx = self.push(Vertex {
            point: p,
            parent: Some(parent),
            cost,
        });
        self.children[parent].push(idx);
        idx
    }

    /// Index of the vertex closest to `q` (linear scan; ties keep the lowest index).
    pub fn nearest(&self, q: &Point3) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, v) in self.vertices.iter().enumerate() {
            let d = v.point.distance_squared(q);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Vertices within `r` of `q`, ascending index order.
    pub fn near(&self, q: &Point3, r: f64) -> Vec<usize> {
        let span = (r / self.cell).ceil() as i64;
        let c = self.cell_of(q);
        let r2 = r * r;
        let mut out = Vec::new();
        for dx in -span..=span {
            for dy in -span..=span {
                for dz in -span..=span {
                    if let Some(ids) = self.grid.get(&(c.0 + dx, c.1 + dy, c.2 + dz)) {
                        out.extend(ids.iter().copied().filter(|&i| self.vertices[i].point.distance_squared(q) <= r2));
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Re-parents `child` under `new_parent` and refreshes the costs of its subtree.
    pub fn rewire(&mut self, child: usize, new_parent: usize) {
        if let Some(old) = self.vertices[child].parent {
            self.children[old].retain(|&c| c != child);
        }
        self.vertices[child].parent = Some(new_parent);
        self.children[new_parent].push(child);
        let mut stack = vec![child];
        while let Some(v) = stack.pop() {
            let p = self.vertices[v].parent.expect("non-root has a parent");
            self.vertices[v].cost = self.vertices[p].cost + self.vertices[p].point.distance(&self.vertices[v].point);
            stack.extend(self.children[v].iter().copied());
        }
    }

    /// Whether `ancestor` lies on the root path of `v` (inclusive).
    pub fn is_ancestor(&self, ancestor: usize, mut v: usize) -> bool {
        loop {
            if v == ancestor {
                return true;
            }
            match self.vertices[v].parent {
                Some(p) => v = p,
                None => return false,
            }
        }
    }

    /// Root-to-`idx` waypoint list.
    pub fn path_to(&self, idx: usize) -> Vec<Point3> {
        let mut out = Vec::new();
        let mut cur = Some(idx);
        while let Some(i) = cur {
            out.push(self.vertices[i].point);
            cur = self.vertices[i].parent;
        }
        out.reverse();
        out
    }

    /// Parent links acyclic, every vertex reaches the root, and each cost
    /// equals parent cost plus edge length.
    pub fn check_invariants(&self, tol: f64) -> Result<(), String> {
        if self.vertices.first().map(|v| v.parent.is_some() || v.cost != 0.0) != Some(false) {
            return Err("root must have no parent and zero cost".into());
        }
        for (i, v) in self.vertices.iter().enumerate().skip(1) {
            let Some(p) = v.parent else {
                return Err(format!("vertex {i} has no parent"));
            };
            let want = self.vertices[p].cost + self.vertices[p].point.distance(&v.point);
            if (want - v.cost).abs() > tol {
                return Err(format!("vertex {i}: cost {} != {}", v.cost, want));
            }
            let mut steps = 0;
            let mut cur = i;
            while let Some(pp) = self.vertices[cur].parent {
                cur = pp;
                steps += 1;
                if steps > self.vertices.len() {
                    return Err(format!("cycle through vertex {i}"));
                }
            }
            if cur != 0 {
                return Err(format!("vertex {i} not rooted at 0"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_rewire_path() {
        let mut g = PlanGraph::new(Point3::ORIGIN, 1.0);
        let a = g.add(Point3::new(1.0, 0.0, 0.0), 0);
        let b = g.add(Point3::new(1.0, 1.0, 0.0), a);
        let c = g.add(Point3::new(2.0, 1.0, 0.0), b);
        assert_eq!(g.cost(c), 3.0);
        g.rewire(b, 0);
        assert!((g.cost(b) - 2f64.sqrt()).abs() < 1e-12);
        assert!((g.cost(c) - (2f64.sqrt() + 1.0)).abs() < 1e-12);
        g.check_invariants(1e-9).unwrap();
        assert_eq!(g.path_to(c), vec![Point3::ORIGIN, Point3::new(1.0, 1.0, 0.0), Point3::new(2.0, 1.0, 0.0)]);
        assert!(g.is_ancestor(0, c));
        assert!(!g.is_ancestor(a, c));
    }

    #[test]
    fn near_matches_scan() {
        let mut g = PlanGraph::new(Point3::ORIGIN, 0.7);
        for i in 0..200 {
            let t = i as f64 * 0.37;
            g.add(Point3::new(t.sin() * 3.0, t.cos() * 2.0, (t * 0.1).sin()), 0);
        }
        let q = Point3::new(0.5, 0.5, 0.0);
        let want: Vec<usize> = (0..g.len()).filter(|&i| g.point(i).distance(&q) <= 1.3).collect();
        assert_eq!(g.near(&q, 1.3), want);
        let brute = (0..g.len()).min_by(|&a, &b| g.point(a).distance(&q).total_cmp(&g.point(b).distance(&q))).unwrap();
        assert_eq!(g.point(g.nearest(&q)).distance(&q), g.point(brute).distance(&q));
    }
}
