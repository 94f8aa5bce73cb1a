//! Reference path from the empty box to the full box: a skeleton of growing
//! rectangles, interpolated by adding columns cell by cell and by turning a
//! column into a row, with every added particle created on the boundary ring
//! and walked to its target site.

use num_rational::Rational64;
use serde::Serialize;

use crate::landscape::{classify_domino, RectSpec};
use crate::model::{hamiltonian, Configuration, DerivedConstants, ModelError, ModelParams, Site};
use crate::moves::{apply_in_place, delta_h, Bond, MoveError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RefPathError {
    #[error("the reference path is built for the strongly anisotropic regime only")]
    NotStrong,
    #[error("box side {l0} too small: need l0 > {min}")]
    BoxTooSmall { l0: usize, min: i64 },
    #[error("anchor {0:?} is not an interior site")]
    BadAnchor(Site),
    #[error("no straight empty route between {0:?} and the boundary")]
    NoRoute(Site),
    #[error("column-to-row needs l1 > l2, got R({0},{1})")]
    NotWide(i64, i64),
    #[error(transparent)]
    Move(#[from] MoveError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SkeletonEntry {
    pub s: i64,
    /// `None` for the empty box.
    pub rect: Option<RectSpec>,
    /// Growth phase: `"origin"`, `"a"` (dominoes), `"b"` (horizontal growth at
    /// height `l2*`), `"c"` (vertical growth against the box side).
    pub step: &'static str,
}

fn check_inputs(dc: &DerivedConstants, l0: usize) -> Result<(), RefPathError> {
    if !dc.is_strong() {
        return Err(RefPathError::NotStrong);
    }
    let min = ((dc.u1 + dc.u2) / dc.eps).floor().to_integer();
    if (l0 as i64) <= min || (l0 as i64) < 2 * dc.l2star {
        return Err(RefPathError::BoxTooSmall { l0, min: min.max(2 * dc.l2star - 1) });
    }
    Ok(())
}

/// Skeleton rectangles indexed by semi-perimeter `s = 0, 2, 3, ..., 2 l0`.
pub fn build_skeleton(dc: &DerivedConstants, l0: usize) -> Result<Vec<SkeletonEntry>, RefPathError> {
    check_inputs(dc, l0)?;
    let (ls, big_l) = (dc.l2star, l0 as i64);
    let mut out = vec![SkeletonEntry { s: 0, rect: None, step: "origin" }];
    for s in 2..=2 * big_l {
        let (rect, step) = if s < 3 * ls - 2 {
            (classify_domino(s).expect("s >= 2").0, "a")
        } else if s <= ls + big_l - 1 {
            (RectSpec::new(s - ls, ls), "b")
        } else {
            (RectSpec::new(big_l, s - big_l), "c")
        };
        out.push(SkeletonEntry { s, rect: Some(rect), step });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StageTag {
    /// Skeleton semi-perimeter the current interpolation starts from.
    pub s: i64,
    /// Interpolation step: `origin`, `a.1`, `a.2`, `a.3`, `b.1`, `c.1`.
    pub step: &'static str,
    /// Elementary operation: `create`, `walk`, `attach`, `slide`, `detach`,
    /// `annihilate`.
    pub op: &'static str,
}

#[derive(Debug, Clone)]
pub struct ReferencePath {
    pub l0: usize,
    pub start: Configuration,
    pub bonds: Vec<Bond>,
    /// One per state; `tags[0]` describes the start.
    pub tags: Vec<StageTag>,
    pub energies: Vec<Rational64>,
    /// State index at which each skeleton rectangle is reached.
    pub skeleton_index: Vec<(i64, usize)>,
}

impl ReferencePath {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn max_energy(&self) -> Rational64 {
        *self.energies.iter().max().expect("nonempty path")
    }

    pub fn argmax(&self) -> Vec<usize> {
        let m = self.max_energy();
        (0..self.len()).filter(|&i| self.energies[i] == m).collect()
    }

    /// Replay the path, yielding every state in order.
    pub fn states(&self) -> impl Iterator<Item = Configuration> + '_ {
        let mut cur = Some(self.start.clone());
        let mut i = 0;
        std::iter::from_fn(move || {
            let out = cur.take()?;
            if i < self.bonds.len() {
                let mut next = out.clone();
                apply_in_place(&mut next, &self.bonds[i]).expect("bonds validated at construction");
                cur = Some(next);
                i += 1;
            }
            Some(out)
        })
    }

    pub fn configuration_at(&self, index: usize) -> Option<Configuration> {
        self.states().nth(index)
    }

    pub fn last(&self) -> Configuration {
        let mut c = self.start.clone();
        for b in &self.bonds {
            apply_in_place(&mut c, b).expect("valid bond");
        }
        c
    }

    /// The same path traversed backwards (time reversal).
    pub fn reversed(&self) -> ReferencePath {
        let bonds = self.bonds.iter().rev().map(reverse_bond).collect();
        let mut tags = self.tags.clone();
        tags.reverse();
        let mut energies = self.energies.clone();
        energies.reverse();
        let n = self.len();
        let skeleton_index = self.skeleton_index.iter().rev().map(|&(s, i)| (s, n - 1 - i)).collect();
        ReferencePath { l0: self.l0, start: self.last(), bonds, tags, energies, skeleton_index }
    }
}

pub fn reverse_bond(b: &Bond) -> Bond {
    match *b {
        Bond::Exchange { from, to } => Bond::Exchange { from: to, to: from },
        Bond::Create { outside, site } => Bond::Annihilate { site, outside },
        Bond::Annihilate { site, outside } => Bond::Create { outside, site },
    }
}

/// Axis-aligned rectangle in global coordinates.
#[derive(Debug, Clone, Copy)]
struct Rect {
    x0: i64,
    y0: i64,
    w: i64,
    h: i64,
}

struct Builder {
    l0: i64,
    p: ModelParams,
    cfg: Configuration,
    h: Rational64,
    bonds: Vec<Bond>,
    tags: Vec<StageTag>,
    energies: Vec<Rational64>,
    tag: StageTag,
}

fn site(x: i64, y: i64) -> Site {
    (x as usize, y as usize)
}

impl Builder {
    fn push(&mut self, b: Bond, op: &'static str) -> Result<(), RefPathError> {
        let dh = delta_h(&self.cfg, &b, &self.p);
        if !apply_in_place(&mut self.cfg, &b)? {
            return Ok(());
        }
        self.h += dh;
        self.bonds.push(b);
        self.energies.push(self.h);
        self.tags.push(StageTag { op, ..self.tag });
        Ok(())
    }

    fn mv(&mut self, from: (i64, i64), to: (i64, i64), op: &'static str) -> Result<(), RefPathError> {
        debug_assert!(self.cfg.get(from.0 as usize, from.1 as usize));
        debug_assert!(!self.cfg.get(to.0 as usize, to.1 as usize));
        self.push(Bond::Exchange { from: site(from.0, from.1), to: site(to.0, to.1) }, op)
    }

    fn empty(&self, x: i64, y: i64) -> bool {
        !self.cfg.get(x as usize, y as usize)
    }

    /// Shortest straight line of empty sites from `target` to the ring;
    /// returns the ring site and the outward direction.
    fn route(&self, (x, y): (i64, i64), include_target: bool) -> Option<((i64, i64), (i64, i64))> {
        let l = self.l0;
        let dirs = [(-1, 0), (1, 0), (0, -1), (0, 1)];
        let mut best: Option<(i64, (i64, i64))> = None;
        for (dx, dy) in dirs {
            let len = match (dx, dy) {
                (-1, 0) => x,
                (1, 0) => l + 1 - x,
                (0, -1) => y,
                _ => l + 1 - y,
            };
            let clear = (1..=len).all(|k| self.empty(x + k * dx, y + k * dy))
                && (!include_target || self.empty(x, y));
            if clear && best.is_none_or(|(b, _)| len < b) {
                best = Some((len, (dx, dy)));
            }
        }
        best.map(|(len, d)| ((x + len * d.0, y + len * d.1), d))
    }

    /// Create a particle on the nearest ring site and walk it to `target`.
    fn add_particle(&mut self, target: (i64, i64)) -> Result<(), RefPathError> {
        let (ring, d) = self.route(target, true).ok_or(RefPathError::NoRoute(site(target.0, target.1)))?;
        let outside = (ring.0 + d.0, ring.1 + d.1);
        self.push(Bond::Create { outside, site: site(ring.0, ring.1) }, "create")?;
        let mut cur = ring;
        while cur != target {
            let next = (cur.0 - d.0, cur.1 - d.1);
            let op = if next == target { "attach" } else { "walk" };
            self.mv(cur, next, op)?;
            cur = next;
        }
        Ok(())
    }

    /// Walk the particle at `from` straight to the ring and annihilate it.
    fn remove_particle(&mut self, from: (i64, i64)) -> Result<(), RefPathError> {
        let (ring, d) = self.route(from, false).ok_or(RefPathError::NoRoute(site(from.0, from.1)))?;
        let mut cur = from;
        let mut op = "detach";
        while cur != ring {
            let next = (cur.0 + d.0, cur.1 + d.1);
            self.mv(cur, next, op)?;
            op = "walk";
            cur = next;
        }
        let outside = (ring.0 + d.0, ring.1 + d.1);
        self.push(Bond::Annihilate { site: site(ring.0, ring.1), outside }, "annihilate")
    }

    /// Grow a column on the right (or on the left against the box side),
    /// filling it bottom to top.  Returns the new rectangle and whether the
    /// column went on the right.
    fn add_column(&mut self, r: Rect) -> Result<(Rect, bool), RefPathError> {
        let right = r.x0 + r.w <= self.l0;
        let x = if right { r.x0 + r.w } else { r.x0 - 1 };
        for y in r.y0..r.y0 + r.h {
            self.add_particle((x, y))?;
        }
        let nr = if right { Rect { w: r.w + 1, ..r } } else { Rect { x0: r.x0 - 1, w: r.w + 1, ..r } };
        Ok((nr, right))
    }

    /// Turn the right (or left) column of `r` into a new top (or bottom) row.
    fn column_to_row(&mut self, r: Rect, right_column: bool) -> Result<Rect, RefPathError> {
        let (l1, l2) = (r.w, r.h);
        if l1 <= l2 {
            return Err(RefPathError::NotWide(l1, l2));
        }
        let top = r.y0 + r.h <= self.l0;
        // local (u, v): u runs towards the removed column, v towards the new row
        let gx = |u: i64| if right_column { r.x0 + u } else { r.x0 + r.w - 1 - u };
        let gy = |v: i64| if top { r.y0 + v } else { r.y0 + r.h - 1 - v };
        let g = |u: i64, v: i64| (gx(u), gy(v));
        let (cu, t) = (l1 - 1, l2);

        self.add_particle(g(cu - 1, t))?;
        // lift the column by one site
        let mut lo = 0;
        for v in (lo..t).rev() {
            self.mv(g(cu, v), g(cu, v + 1), "slide")?;
        }
        lo += 1;
        let transfers = if l1 >= l2 + 2 { l2 } else { l2 - 1 };
        let mut c = cu - 1;
        for k in 0..transfers {
            // shift the new row one site away from the column
            self.mv(g(c, t), g(c - 1, t), "slide")?;
            for u in c + 1..cu {
                self.mv(g(u, t), g(u - 1, t), "slide")?;
            }
            c -= 1;
            self.mv(g(cu, t), g(cu - 1, t), "slide")?;
            if k + 1 < l2 {
                for v in (lo..t).rev() {
                    self.mv(g(cu, v), g(cu, v + 1), "slide")?;
                }
                lo += 1;
            }
        }
        if l1 == l2 + 1 {
            self.remove_particle(g(cu, t))?;
        } else {
            while c > 0 {
                self.add_particle(g(c - 1, t))?;
                c -= 1;
            }
        }
        let x0 = if right_column { r.x0 } else { r.x0 + 1 };
        let y0 = if top { r.y0 } else { r.y0 - 1 };
        Ok(Rect { x0, y0, w: l1 - 1, h: l2 + 1 })
    }
}

/// Build the reference path with the first particle at `anchor`.
pub fn build_reference_path(dc: &DerivedConstants, l0: usize, anchor: Site) -> Result<ReferencePath, RefPathError> {
    let skeleton = build_skeleton(dc, l0)?;
    let big_l = l0 as i64;
    if !(1..=l0).contains(&anchor.0) || !(1..=l0).contains(&anchor.1) {
        return Err(RefPathError::BadAnchor(anchor));
    }
    let p = ModelParams::new(dc.u1, dc.u2, dc.delta, 1.0, l0)?;
    let start = Configuration::empty(l0);
    let h0 = hamiltonian(&start, &p);
    let tag = StageTag { s: 0, step: "origin", op: "start" };
    let mut b = Builder {
        l0: big_l,
        p,
        cfg: start.clone(),
        h: h0,
        bonds: Vec::new(),
        tags: vec![tag],
        energies: vec![h0],
        tag,
    };
    let mut skeleton_index = vec![(0, 0)];
    b.add_particle((anchor.0 as i64, anchor.1 as i64))?;
    let mut rect = Rect { x0: anchor.0 as i64, y0: anchor.1 as i64, w: 1, h: 1 };
    skeleton_index.push((2, b.energies.len() - 1));

    let ls = dc.l2star;
    for pair in skeleton.windows(2).skip(1) {
        let (cur, next) = (pair[0].rect.expect("rect"), pair[1].rect.expect("rect"));
        let s = pair[0].s;
        debug_assert_eq!((rect.w, rect.h), (cur.l1, cur.l2));
        let step = if s < 3 * ls - 2 {
            match s % 3 {
                0 => "a.3",
                1 => "a.1",
                _ => "a.2",
            }
        } else if pair[1].step == "b" {
            "b.1"
        } else {
            "c.1"
        };
        b.tag = StageTag { s, step, op: "" };
        if (next.l1, next.l2) == (cur.l1 + 1, cur.l2) {
            rect = b.add_column(rect)?.0;
        } else if cur.l1 < big_l {
            let (grown, right) = b.add_column(rect)?;
            rect = b.column_to_row(grown, right)?;
        } else {
            let shrunk = b.column_to_row(rect, true)?;
            rect = b.add_column(shrunk)?.0;
        }
        debug_assert_eq!((rect.w, rect.h), (next.l1, next.l2));
        skeleton_index.push((pair[1].s, b.energies.len() - 1));
    }
    Ok(ReferencePath { l0, start, bonds: b.bonds, tags: b.tags, energies: b.energies, skeleton_index })
}

/// Maximal energy along the reference path anchored at the lower-left corner;
/// an upper bound on the communication height between the empty and the full
/// box.
pub fn phi_upper_bound(dc: &DerivedConstants, l0: usize) -> Result<Rational64, RefPathError> {
    Ok(build_reference_path(dc, l0, (1, 1))?.max_energy())
}
