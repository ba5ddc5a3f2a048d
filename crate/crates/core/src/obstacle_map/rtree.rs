//! Guttman R-tree over points with quadratic node splitting.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::geometry::{Aabb, Point3};

pub const DEFAULT_FANOUT: usize = 16;

/// Padding applied to box extents when comparing sizes, so flat or
/// degenerate boxes (coplanar points) still order sensibly.
const MEASURE_PAD: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub point: Point3,
    pub id: u64,
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { bbox: Aabb, entries: Vec<Entry> },
    Branch { bbox: Aabb, children: Vec<Node> },
}

impl Node {
    fn empty_leaf() -> Self {
        Node::Leaf {
            bbox: Aabb::from_point(Point3::ORIGIN),
            entries: Vec::new(),
        }
    }

    fn bbox(&self) -> &Aabb {
        match self {
            Node::Leaf { bbox, .. } | Node::Branch { bbox, .. } => bbox,
        }
    }

    fn count(&self) -> usize {
        match self {
            Node::Leaf { entries, .. } => entries.len(),
            Node::Branch { children, .. } => children.len(),
        }
    }

    fn recompute_bbox(&mut self) {
        match self {
            Node::Leaf { bbox, entries } => {
                if let Some(b) = Aabb::from_points(entries.iter().map(|e| &e.point)) {
                    *bbox = b;
                }
            }
            Node::Branch { bbox, children } => {
                if let Some((first, rest)) = children.split_first() {
                    *bbox = rest.iter().fold(*first.bbox(), |acc, c| acc.union(c.bbox()));
                }
            }
        }
    }

    fn drain_entries(self, out: &mut Vec<Entry>) {
        match self {
            Node::Leaf { entries, .. } => out.extend(entries),
            Node::Branch { children, .. } => {
                for c in children {
                    c.drain_entries(out);
                }
            }
        }
    }
}

fn measure(b: &Aabb) -> f64 {
    let e = b.extent();
    (e.x + MEASURE_PAD) * (e.y + MEASURE_PAD) * (e.z + MEASURE_PAD)
}

fn enlargement(b: &Aabb, add: &Aabb) -> f64 {
    measure(&b.union(add)) - measure(b)
}

/// Quadratic split: seeds are the pair wasting the most space, remaining
/// items go one at a time to the group whose box grows least.
fn quadratic_split<T>(mut items: Vec<T>, bbox_of: impl Fn(&T) -> Aabb, min_fill: usize) -> (Vec<T>, Vec<T>) {
    let n = items.len();
    let boxes: Vec<Aabb> = items.iter().map(&bbox_of).collect();
    let (mut s1, mut s2, mut worst) = (0, 1, f64::NEG_INFINITY);
    for i in 0..n {
        for j in i + 1..n {
            let d = measure(&boxes[i].union(&boxes[j])) - measure(&boxes[i]) - measure(&boxes[j]);
            if d > worst {
                worst = d;
                s1 = i;
                s2 = j;
            }
        }
    }
    // Remove the higher index first so the lower one stays valid.
    let b_item = items.swap_remove(s2);
    let a_item = items.swap_remove(s1);
    let mut box_a = bbox_of(&a_item);
    let mut box_b = bbox_of(&b_item);
    let mut ga = vec![a_item];
    let mut gb = vec![b_item];

    while !items.is_empty() {
        if ga.len() + items.len() == min_fill {
            ga.append(&mut items);
            break;
        }
        if gb.len() + items.len() == min_fill {
            gb.append(&mut items);
            break;
        }
        let mut pick = 0;
        let mut best_diff = f64::NEG_INFINITY;
        let mut pick_d = (0.0, 0.0);
        for (k, it) in items.iter().enumerate() {
            let b = bbox_of(it);
            let d1 = enlargement(&box_a, &b);
            let d2 = enlargement(&box_b, &b);
            let diff = (d1 - d2).abs();
            if diff > best_diff {
                best_diff = diff;
                pick = k;
                pick_d = (d1, d2);
            }
        }
        let it = items.swap_remove(pick);
        let b = bbox_of(&it);
        let to_a = match pick_d.0.partial_cmp(&pick_d.1) {
            Some(Ordering::Less) => true,
            Some(Ordering::Greater) => false,
            _ => match measure(&box_a).partial_cmp(&measure(&box_b)) {
                Some(Ordering::Less) => true,
                Some(Ordering::Greater) => false,
                _ => ga.len() <= gb.len(),
            },
        };
        if to_a {
            box_a = box_a.union(&b);
            ga.push(it);
        } else {
            box_b = box_b.union(&b);
            gb.push(it);
        }
    }
    (ga, gb)
}

#[derive(Debug, Clone)]
pub struct RTree {
    root: Node,
    len: usize,
    max_entries: usize,
    min_entries: usize,
}

impl Default for RTree {
    fn default() -> Self {
        Self::new(DEFAULT_FANOUT)
    }
}

impl RTree {
    /// `fanout` is the maximum node size; minimum fill is 40% of it.
    pub fn new(fanout: usize) -> Self {
        let max_entries = fanout.max(4);
        Self {
            root: Node::empty_leaf(),
            len: 0,
            max_entries,
            min_entries: (max_entries * 2 / 5).max(2),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn fanout(&self) -> usize {
        self.max_entries
    }

    pub fn clear(&mut self) {
        self.root = Node::empty_leaf();
        self.len = 0;
    }

    pub fn insert(&mut self, entry: Entry) {
        if self.len == 0 {
            self.root = Node::Leaf {
                bbox: Aabb::from_point(entry.point),
                entries: vec![entry],
            };
            self.len = 1;
            return;
        }
        if let Some(sibling) = insert_rec(&mut self.root, entry, self.max_entries, self.min_entries) {
            let old = std::mem::replace(&mut self.root, Node::empty_leaf());
            let mut root = Node::Branch {
                bbox: *old.bbox(),
                children: vec![old, sibling],
            };
            root.recompute_bbox();
            self.root = root;
        }
        self.len += 1;
    }

    /// Removes the entry with `id` located at `point`. Underfull nodes on the
    /// path are dissolved and their entries reinserted.
    pub fn remove(&mut self, id: u64, point: &Point3) -> bool {
        if self.len == 0 {
            return false;
        }
        let mut orphans = Vec::new();
        if !remove_rec(&mut self.root, id, point, self.min_entries, &mut orphans) {
            return false;
        }
        self.len -= 1;
        loop {
            match &mut self.root {
                Node::Branch { children, .. } if children.len() == 1 => {
                    self.root = children.pop().unwrap();
                }
                Node::Branch { children, .. } if children.is_empty() => {
                    self.root = Node::empty_leaf();
                }
                _ => break,
            }
        }
        self.len -= orphans.len();
        if self.len == 0 {
            self.root = Node::empty_leaf();
        }
        for e in orphans {
            self.insert(e);
        }
        true
    }

    /// Nearest entry by Euclidean distance (best-first branch and bound).
    pub fn nearest(&self, q: &Point3) -> Option<(Entry, f64)> {
        if self.len == 0 {
            return None;
        }
        let mut best: Option<(Entry, f64)> = None;
        let mut best_d2 = f64::INFINITY;
        let mut heap = BinaryHeap::new();
        heap.push(Candidate {
            dist2: self.root.bbox().distance_squared(q),
            node: &self.root,
        });
        while let Some(Candidate { dist2, node }) = heap.pop() {
            if dist2 >= best_d2 {
                break;
            }
            match node {
                Node::Leaf { entries, .. } => {
                    for e in entries {
                        let d2 = e.point.distance_squared(q);
                        if d2 < best_d2 {
                            best_d2 = d2;
                            best = Some((*e, d2));
                        }
                    }
                }
                Node::Branch { children, .. } => {
                    for c in children {
                        let d2 = c.bbox().distance_squared(q);
                        if d2 < best_d2 {
                            heap.push(Candidate {
                                dist2: d2,
                                node: c,
                            });
                        }
                    }
                }
            }
        }
        best.map(|(e, d2)| (e, d2.sqrt()))
    }

    /// Visits entries inside `range` until `f` returns `false`. Returns
    /// `false` when stopped early.
    pub fn visit_in_box<F: FnMut(&Entry) -> bool>(&self, range: &Aabb, mut f: F) -> bool {
        if self.len == 0 {
            return true;
        }
        visit_rec(&self.root, range, &mut f)
    }

    pub fn in_box(&self, range: &Aabb) -> Vec<Entry> {
        let mut out = Vec::new();
        self.visit_in_box(range, |e| {
            out.push(*e);
            true
        });
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = &Entry> + '_ {
        let mut stack = vec![&self.root];
        let mut leaf: std::slice::Iter<'_, Entry> = [].iter();
        std::iter::from_fn(move || loop {
            if let Some(e) = leaf.next() {
                return Some(e);
            }
            match stack.pop()? {
                Node::Leaf { entries, .. } => leaf = entries.iter(),
                Node::Branch { children, .. } => stack.extend(children.iter()),
            }
        })
    }

    pub fn depth(&self) -> usize {
        let mut d = 1;
        let mut n = &self.root;
        while let Node::Branch { children, .. } = n {
            d += 1;
            n = &children[0];
        }
        d
    }

    /// Structural invariants: uniform leaf depth, node fill bounds, tight
    /// bounding boxes and a consistent entry count.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.len == 0 {
            return Ok(());
        }
        let mut leaf_depth = None;
        let n = check_rec(&self.root, true, 1, &mut leaf_depth, self.min_entries, self.max_entries)?;
        if n != self.len {
            return Err(format!("len {} but {} entries reachable", self.len, n));
        }
        Ok(())
    }
}

fn choose_subtree(children: &[Node], p: &Point3) -> usize {
    let add = Aabb::from_point(*p);
    let mut best = 0;
    let mut best_key = (f64::INFINITY, f64::INFINITY);
    for (i, c) in children.iter().enumerate() {
        let key = (enlargement(c.bbox(), &add), measure(c.bbox()));
        if key.0 < best_key.0 || (key.0 == best_key.0 && key.1 < best_key.1) {
            best_key = key;
            best = i;
        }
    }
    best
}

fn insert_rec(node: &mut Node, entry: Entry, max: usize, min: usize) -> Option<Node> {
    match node {
        Node::Leaf { bbox, entries } => {
            entries.push(entry);
            if entries.len() > max {
                let all = std::mem::take(entries);
                let (a, b) = quadratic_split(all, |e| Aabb::from_point(e.point), min);
                *entries = a;
                node.recompute_bbox();
                let mut sib = Node::Leaf {
                    bbox: Aabb::from_point(b[0].point),
                    entries: b,
                };
                sib.recompute_bbox();
                Some(sib)
            } else {
                *bbox = bbox.union_point(&entry.point);
                None
            }
        }
        Node::Branch { bbox, children } => {
            let idx = choose_subtree(children, &entry.point);
            if let Some(sib) = insert_rec(&mut children[idx], entry, max, min) {
                children.push(sib);
            }
            if children.len() > max {
                let all = std::mem::take(children);
                let (a, b) = quadratic_split(all, |c| *c.bbox(), min);
                *children = a;
                node.recompute_bbox();
                let mut sib = Node::Branch {
                    bbox: *b[0].bbox(),
                    children: b,
                };
                sib.recompute_bbox();
                Some(sib)
            } else {
                *bbox = bbox.union_point(&entry.point);
                None
            }
        }
    }
}

fn remove_rec(node: &mut Node, id: u64, p: &Point3, min: usize, orphans: &mut Vec<Entry>) -> bool {
    let found = match node {
        Node::Leaf { entries, .. } => match entries.iter().position(|e| e.id == id) {
            Some(k) => {
                entries.swap_remove(k);
                true
            }
            None => false,
        },
        Node::Branch { children, .. } => {
            let mut hit = None;
            for (i, c) in children.iter_mut().enumerate() {
                if c.bbox().contains(p) && remove_rec(c, id, p, min, orphans) {
                    hit = Some(i);
                    break;
                }
            }
            match hit {
                Some(i) => {
                    if children[i].count() < min {
                        let dead = children.swap_remove(i);
                        dead.drain_entries(orphans);
                    }
                    true
                }
                None => false,
            }
        }
    };
    if found {
        node.recompute_bbox();
    }
    found
}

fn visit_rec<F: FnMut(&Entry) -> bool>(node: &Node, range: &Aabb, f: &mut F) -> bool {
    match node {
        Node::Leaf { entries, .. } => {
            for e in entries {
                if range.contains(&e.point) && !f(e) {
                    return false;
                }
            }
            true
        }
        Node::Branch { children, .. } => {
            for c in children {
                if c.bbox().intersects(range) && !visit_rec(c, range, f) {
                    return false;
                }
            }
            true
        }
    }
}

fn check_rec(
    node: &Node,
    is_root: bool,
    depth: usize,
    leaf_depth: &mut Option<usize>,
    min: usize,
    max: usize,
) -> Result<usize, String> {
    let n = node.count();
    if n > max {
        return Err(format!("node with {n} > {max} entries"));
    }
    if !is_root && n < min {
        return Err(format!("node with {n} < {min} entries"));
    }
    let mut tight = node.clone();
    tight.recompute_bbox();
    if tight.bbox() != node.bbox() {
        return Err("bounding box not tight".into());
    }
    match node {
        Node::Leaf { entries, .. } => {
            match leaf_depth {
                Some(d) if *d != depth => return Err("leaves at different depths".into()),
                _ => *leaf_depth = Some(depth),
            }
            Ok(entries.len())
        }
        Node::Branch { children, .. } => {
            let mut total = 0;
            for c in children {
                if !node.bbox().contains_box(c.bbox()) {
                    return Err("child box escapes parent".into());
                }
                total += check_rec(c, false, depth + 1, leaf_depth, min, max)?;
            }
            Ok(total)
        }
    }
}

struct Candidate<'a> {
    dist2: f64,
    node: &'a Node,
}

impl PartialEq for Candidate<'_> {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}

impl Eq for Candidate<'_> {}

impl PartialOrd for Candidate<'_> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Candidate<'_> {
    // Min-heap on box distance.
    fn cmp(&self, o: &Self) -> Ordering {
        o.dist2.total_cmp(&self.dist2)
    }
}
