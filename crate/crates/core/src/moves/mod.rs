//! Oriented bonds, the three move operators, energy/semiperimeter bookkeeping
//! and line-activity analysis around a single exchange.

mod patterns;

pub use patterns::{local_pattern_check, local_pattern_check_all, UnknownLemma, LemmaId, PatternCounterexample, PatternVerdict};

use num_rational::Rational64;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{clusterized_mask, summarize};
use crate::model::{hamiltonian, Configuration, ModelParams, Site};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MoveError {
    #[error("bond {0:?} is not an oriented bond of the box")]
    InvalidBond(Bond),
    #[error("line activity is only defined for exchange bonds (got {0:?})")]
    NotExchange(Bond),
    #[error("the exchange along {0:?} does not move a particle")]
    TrivialExchange(Bond),
}

/// A point of the plane that may lie outside the box.
pub type Point = (i64, i64);

/// An oriented nearest-neighbour bond.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Bond {
    /// Both endpoints in the box; the occupancies are swapped.
    Exchange { from: Site, to: Site },
    /// From a ring site to a site outside the box; the ring site is emptied.
    Annihilate { site: Site, outside: Point },
    /// From outside the box to a ring site; the ring site is filled.
    Create { outside: Point, site: Site },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveKind {
    Exchange,
    Create,
    Annihilate,
}

impl Bond {
    pub fn kind(&self) -> MoveKind {
        match self {
            Bond::Exchange { .. } => MoveKind::Exchange,
            Bond::Create { .. } => MoveKind::Create,
            Bond::Annihilate { .. } => MoveKind::Annihilate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Move {
    pub kind: MoveKind,
    pub bond: Bond,
    #[serde(serialize_with = "crate::model::ser_rational")]
    pub dh: Rational64,
    /// `s(after) - s(before)`.
    pub ds: i64,
}

const DIRS: [Point; 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

/// Every oriented bond of the box in a fixed order: exchanges first, then
/// annihilations, then creations.  There are `4S(S-1) + 8S` of them for box
/// side `S = l0 + 2`.
pub fn all_bonds(l0: usize) -> Vec<Bond> {
    let side = (l0 + 2) as i64;
    let inside = |x: i64, y: i64| (0..side).contains(&x) && (0..side).contains(&y);
    let mut exch = Vec::new();
    let mut out = Vec::new();
    let mut inn = Vec::new();
    for y in 0..side {
        for x in 0..side {
            for (dx, dy) in DIRS {
                let (nx, ny) = (x + dx, y + dy);
                let here = (x as usize, y as usize);
                if inside(nx, ny) {
                    exch.push(Bond::Exchange { from: here, to: (nx as usize, ny as usize) });
                } else {
                    out.push(Bond::Annihilate { site: here, outside: (nx, ny) });
                    inn.push(Bond::Create { outside: (nx, ny), site: here });
                }
            }
        }
    }
    exch.extend(out);
    exch.extend(inn);
    exch
}

pub fn bond_count(l0: usize) -> usize {
    let s = l0 + 2;
    4 * s * (s - 1) + 8 * s
}

pub fn is_valid_bond(l0: usize, b: &Bond) -> bool {
    let side = (l0 + 2) as i64;
    let inside = |(x, y): Point| (0..side).contains(&x) && (0..side).contains(&y);
    let pt = |(x, y): Site| (x as i64, y as i64);
    let adjacent = |a: Point, c: Point| (a.0 - c.0).abs() + (a.1 - c.1).abs() == 1;
    match *b {
        Bond::Exchange { from, to } => inside(pt(from)) && inside(pt(to)) && adjacent(pt(from), pt(to)),
        Bond::Annihilate { site, outside } | Bond::Create { outside, site } => {
            inside(pt(site)) && !inside(outside) && adjacent(pt(site), outside)
        }
    }
}

/// `T_b` applied in place; returns whether the configuration changed.
pub fn apply_in_place(cfg: &mut Configuration, b: &Bond) -> Result<bool, MoveError> {
    if !is_valid_bond(cfg.l0(), b) {
        return Err(MoveError::InvalidBond(*b));
    }
    Ok(match *b {
        Bond::Exchange { from, to } => {
            let (a, c) = (cfg.get(from.0, from.1), cfg.get(to.0, to.1));
            cfg.set(from.0, from.1, c);
            cfg.set(to.0, to.1, a);
            a != c
        }
        Bond::Annihilate { site, .. } => {
            let was = cfg.get(site.0, site.1);
            cfg.set(site.0, site.1, false);
            was
        }
        Bond::Create { site, .. } => {
            let was = cfg.get(site.0, site.1);
            cfg.set(site.0, site.1, true);
            !was
        }
    })
}

/// `T_b` applied to a copy.  Swaps of equal occupancies, creation on an
/// occupied site and annihilation on an empty site return an identical copy.
pub fn apply(cfg: &Configuration, b: &Bond) -> Result<Configuration, MoveError> {
    let mut out = cfg.clone();
    apply_in_place(&mut out, b)?;
    Ok(out)
}

/// Binding energy felt by a particle sitting at `site`, ignoring `skip`.
fn site_binding(cfg: &Configuration, p: &ModelParams, site: Site, skip: Option<Site>) -> Rational64 {
    let mut e = Rational64::from(0);
    if !cfg.is_interior(site.0, site.1) {
        return e;
    }
    let (x, y) = (site.0 as i64, site.1 as i64);
    for (dx, dy) in DIRS {
        let (nx, ny) = (x + dx, y + dy);
        if Some((nx as usize, ny as usize)) == skip && nx >= 0 && ny >= 0 {
            continue;
        }
        if cfg.interior_occupied(nx, ny) {
            e += if dy == 0 { p.u1 } else { p.u2 };
        }
    }
    e
}

/// Exact energy change of `T_b`, computed locally.
pub fn delta_h(cfg: &Configuration, b: &Bond, p: &ModelParams) -> Rational64 {
    let zero = Rational64::from(0);
    match *b {
        Bond::Exchange { from, to } => {
            let (a, c) = (cfg.get(from.0, from.1), cfg.get(to.0, to.1));
            if a == c {
                return zero;
            }
            let (src, dst) = if a { (from, to) } else { (to, from) };
            site_binding(cfg, p, src, Some(dst)) - site_binding(cfg, p, dst, Some(src))
        }
        Bond::Annihilate { site, .. } => {
            if cfg.get(site.0, site.1) {
                site_binding(cfg, p, site, None) - p.delta
            } else {
                zero
            }
        }
        Bond::Create { site, .. } => {
            if cfg.get(site.0, site.1) {
                zero
            } else {
                p.delta - site_binding(cfg, p, site, None)
            }
        }
    }
}

/// All bonds whose move changes the configuration, with exact `dH` and `ds`.
pub fn enumerate_moves(cfg: &Configuration, p: &ModelParams) -> Vec<Move> {
    let s0 = summarize(cfg).s;
    let mut moves = Vec::new();
    for b in all_bonds(cfg.l0()) {
        let mut next = cfg.clone();
        if !apply_in_place(&mut next, &b).expect("bond from the enumeration") {
            continue;
        }
        moves.push(Move { kind: b.kind(), bond: b, dh: delta_h(cfg, &b, p), ds: summarize(&next).s - s0 });
    }
    moves
}

/// Check `dH` of a move against a full re-evaluation of the Hamiltonian.
pub fn delta_h_by_recomputation(cfg: &Configuration, b: &Bond, p: &ModelParams) -> Result<Rational64, MoveError> {
    let next = apply(cfg, b)?;
    Ok(hamiltonian(&next, p) - hamiltonian(cfg, p))
}

/// A horizontal or vertical line of the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(tag = "axis", content = "index", rename_all = "lowercase")]
pub enum Line {
    /// All sites with this `y`.
    Row(i64),
    /// All sites with this `x`.
    Col(i64),
}

/// Named sites and lines around an exchange, oriented along the move: the
/// particle goes from `x1` to `x2`; `x3`/`x4` flank `x2`, `x5` is beyond it;
/// `y1`/`y2` flank `x1`, `y3` is behind it; `z1`/`z2` flank `y3` and `z3` is
/// behind it; `t` is beyond `y1` and `s` beyond `y2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MoveFrame {
    pub x1: Point,
    pub x2: Point,
    pub x3: Point,
    pub x4: Point,
    pub x5: Point,
    pub y1: Point,
    pub y2: Point,
    pub y3: Point,
    pub z1: Point,
    pub z2: Point,
    pub z3: Point,
    pub t: Point,
    pub s: Point,
    /// `r1` is the line of the move, `r2` crosses `x2`, `r3`/`r4`/`r5` cross
    /// `x3`/`x4`/`x5`, `r6` crosses `x1` and `r7` crosses `y3`.
    pub lines: [Line; 7],
}

impl MoveFrame {
    pub fn new(x1: Point, x2: Point) -> Self {
        let d = (x2.0 - x1.0, x2.1 - x1.1);
        debug_assert_eq!(d.0.abs() + d.1.abs(), 1);
        // perpendicular direction
        let q = (-d.1, d.0);
        let add = |a: Point, b: Point| (a.0 + b.0, a.1 + b.1);
        let neg = |a: Point| (-a.0, -a.1);
        let x3 = add(x2, q);
        let x4 = add(x2, neg(q));
        let x5 = add(x2, d);
        let y1 = add(x1, q);
        let y2 = add(x1, neg(q));
        let y3 = add(x1, neg(d));
        let horizontal = d.1 == 0;
        let along = |p: Point| if horizontal { Line::Row(p.1) } else { Line::Col(p.0) };
        let across = |p: Point| if horizontal { Line::Col(p.0) } else { Line::Row(p.1) };
        let lines = [along(x1), across(x2), along(x3), along(x4), across(x5), across(x1), across(y3)];
        Self {
            x1,
            x2,
            x3,
            x4,
            x5,
            y1,
            y2,
            y3,
            z1: add(y3, q),
            z2: add(y3, neg(q)),
            z3: add(y3, neg(d)),
            t: add(y1, q),
            s: add(y2, neg(q)),
            lines,
        }
    }

    /// Frame label (1-based) of a line, if it is one of `r1..r7`.
    pub fn label(&self, line: Line) -> Option<usize> {
        self.lines.iter().position(|&l| l == line).map(|i| i + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineActivityReport {
    pub activated: Vec<Line>,
    pub deactivated: Vec<Line>,
    pub frame: MoveFrame,
}

impl LineActivityReport {
    pub fn activated_labels(&self) -> Vec<usize> {
        self.activated.iter().filter_map(|&l| self.frame.label(l)).collect()
    }

    pub fn deactivated_labels(&self) -> Vec<usize> {
        self.deactivated.iter().filter_map(|&l| self.frame.label(l)).collect()
    }

    /// Change of `p1 + p2` implied by the activity changes.
    pub fn ds(&self) -> i64 {
        self.activated.len() as i64 - self.deactivated.len() as i64
    }
}

fn active_lines(cfg: &Configuration) -> (Vec<bool>, Vec<bool>) {
    let cl = clusterized_mask(cfg);
    let side = cfg.side();
    let mut rows = vec![false; side];
    let mut cols = vec![false; side];
    for (i, &b) in cl.iter().enumerate() {
        if b {
            rows[i / side] = true;
            cols[i % side] = true;
        }
    }
    (rows, cols)
}

/// Lines whose intersection with the clusterized part becomes non-empty
/// (activated) or empty (deactivated) under an exchange move.
pub fn line_activity(cfg: &Configuration, b: &Bond) -> Result<LineActivityReport, MoveError> {
    let Bond::Exchange { from, to } = *b else {
        return Err(MoveError::NotExchange(*b));
    };
    if !is_valid_bond(cfg.l0(), b) {
        return Err(MoveError::InvalidBond(*b));
    }
    let (a, c) = (cfg.get(from.0, from.1), cfg.get(to.0, to.1));
    if a == c {
        return Err(MoveError::TrivialExchange(*b));
    }
    let (src, dst) = if a { (from, to) } else { (to, from) };
    let next = apply(cfg, b)?;
    let (r0, c0) = active_lines(cfg);
    let (r1, c1) = active_lines(&next);
    let mut activated = Vec::new();
    let mut deactivated = Vec::new();
    for y in 0..r0.len() {
        match (r0[y], r1[y]) {
            (false, true) => activated.push(Line::Row(y as i64)),
            (true, false) => deactivated.push(Line::Row(y as i64)),
            _ => {}
        }
    }
    for x in 0..c0.len() {
        match (c0[x], c1[x]) {
            (false, true) => activated.push(Line::Col(x as i64)),
            (true, false) => deactivated.push(Line::Col(x as i64)),
            _ => {}
        }
    }
    let frame = MoveFrame::new((src.0 as i64, src.1 as i64), (dst.0 as i64, dst.1 as i64));
    Ok(LineActivityReport { activated, deactivated, frame })
}
