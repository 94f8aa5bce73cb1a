//! Closed-form rectangle energies, domino and standard shapes, the table of
//! estimated barriers, region maps, and membership tests for the basin `B`
//! and the critical sets `P1`, `P2`, `P~`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use serde::Serialize;

use crate::geometry::{summarize, GeometrySummary};
use crate::model::{Configuration, DerivedConstants};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LandscapeError {
    #[error("semi-perimeter {0} is too small for a domino rectangle (need s >= 2)")]
    DominoTooSmall(i64),
    #[error("semi-perimeter {s} is too small for a standard rectangle (need s > {min})")]
    StandardTooSmall { s: i64, min: i64 },
    #[error("side lengths must be positive, got ({0}, {1})")]
    BadSides(i64, i64),
    #[error("unknown barrier kind {0:?}")]
    UnknownKind(String),
}

/// A full `l1 x l2` rectangle with lower-left interior corner `anchor`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct RectSpec {
    pub l1: i64,
    pub l2: i64,
    pub anchor: (usize, usize),
}

impl RectSpec {
    pub fn new(l1: i64, l2: i64) -> Self {
        Self { l1, l2, anchor: (1, 1) }
    }

    pub fn s(&self) -> i64 {
        self.l1 + self.l2
    }

    pub fn fits(&self, l0: usize) -> bool {
        self.l1 >= 1
            && self.l2 >= 1
            && self.anchor.0 >= 1
            && self.anchor.1 >= 1
            && self.anchor.0 + self.l1 as usize - 1 <= l0
            && self.anchor.1 + self.l2 as usize - 1 <= l0
    }

    pub fn configuration(&self, l0: usize) -> Configuration {
        Configuration::rectangle(l0, self.anchor.0, self.anchor.1, self.l1 as usize, self.l2 as usize)
    }
}

impl fmt::Display for RectSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R({},{})", self.l1, self.l2)
    }
}

pub fn rect_energy(l1: i64, l2: i64, dc: &DerivedConstants) -> Rational64 {
    dc.rect_energy(l1, l2)
}

/// Energy of any configuration from its geometric descriptors.
pub fn summary_energy(g: &GeometrySummary, dc: &DerivedConstants) -> Rational64 {
    dc.rect_energy(g.p1, g.p2) + dc.eps * g.v + dc.u1 * g.g2p + dc.u2 * g.g1p + dc.delta * g.n
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum DominoTag {
    #[serde(rename = "0-dom")]
    Zero,
    #[serde(rename = "1-dom")]
    One,
    #[serde(rename = "2-dom")]
    Two,
}

impl fmt::Display for DominoTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DominoTag::Zero => "0-dom",
            DominoTag::One => "1-dom",
            DominoTag::Two => "2-dom",
        })
    }
}

/// Domino rectangle of semi-perimeter `s`, horizontal side about twice the
/// vertical one.
pub fn classify_domino(s: i64) -> Result<(RectSpec, DominoTag), LandscapeError> {
    if s < 2 {
        return Err(LandscapeError::DominoTooSmall(s));
    }
    Ok(match s.rem_euclid(3) {
        0 => (RectSpec::new(2 * s / 3, s / 3), DominoTag::Zero),
        1 => (RectSpec::new((2 * s - 2) / 3, (s + 2) / 3), DominoTag::One),
        _ => (RectSpec::new((2 * s - 1) / 3, (s + 1) / 3), DominoTag::Two),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum StandardTag {
    #[serde(rename = "0-st")]
    Zero,
    #[serde(rename = "1-st")]
    One,
}

impl fmt::Display for StandardTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StandardTag::Zero => "0-st",
            StandardTag::One => "1-st",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StandardClass {
    pub rect: RectSpec,
    pub tag: StandardTag,
    /// `(l1 + 1, l2 - 1)` of a 1-standard rectangle.
    pub quasi: Option<RectSpec>,
}

/// Standard rectangle of semi-perimeter `s` (sides differ by about `lbar`).
pub fn classify_standard(s: i64, dc: &DerivedConstants) -> Result<StandardClass, LandscapeError> {
    let lbar = dc.lbar;
    if s <= lbar + 2 {
        return Err(LandscapeError::StandardTooSmall { s, min: lbar + 2 });
    }
    Ok(if (s - lbar).rem_euclid(2) == 0 {
        StandardClass { rect: RectSpec::new((s + lbar) / 2, (s - lbar) / 2), tag: StandardTag::Zero, quasi: None }
    } else {
        let (l1, l2) = ((s + lbar - 1) / 2, (s - lbar + 1) / 2);
        StandardClass { rect: RectSpec::new(l1, l2), tag: StandardTag::One, quasi: Some(RectSpec::new(l1 + 1, l2 - 1)) }
    })
}

/// Circumscribed rectangle of the Wulff shape.
pub fn wulff_rect(dc: &DerivedConstants) -> RectSpec {
    RectSpec::new(dc.l1star, dc.l2star)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BarrierKind {
    AddRow,
    AddColumn,
    RemoveRow,
    RemoveColumn,
    RowToColumn,
    ColumnToRow,
}

impl BarrierKind {
    pub const ALL: [BarrierKind; 6] = [
        BarrierKind::AddRow,
        BarrierKind::AddColumn,
        BarrierKind::RemoveRow,
        BarrierKind::RemoveColumn,
        BarrierKind::RowToColumn,
        BarrierKind::ColumnToRow,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            BarrierKind::AddRow => "add-row",
            BarrierKind::AddColumn => "add-column",
            BarrierKind::RemoveRow => "remove-row",
            BarrierKind::RemoveColumn => "remove-column",
            BarrierKind::RowToColumn => "row-to-column",
            BarrierKind::ColumnToRow => "column-to-row",
        }
    }
}

impl fmt::Display for BarrierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BarrierKind {
    type Err = LandscapeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BarrierKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| LandscapeError::UnknownKind(s.into()))
    }
}

/// Estimated energy barrier of a canonical rectangle-to-rectangle operation
/// starting from `R(l1, l2)`.
pub fn barrier(kind: BarrierKind, l1: i64, l2: i64, dc: &DerivedConstants) -> Result<Rational64, LandscapeError> {
    if l1 < 1 || l2 < 1 {
        return Err(LandscapeError::BadSides(l1, l2));
    }
    let (u1, u2, d, e) = (dc.u1, dc.u2, dc.delta, dc.eps);
    Ok(match kind {
        BarrierKind::AddRow => d * 2 - u2,
        BarrierKind::AddColumn => d * 2 - u1,
        BarrierKind::RemoveRow => e * (l1 - 2) + u1 + u2,
        BarrierKind::RemoveColumn => e * (l2 - 2) + u1 + u2,
        BarrierKind::RowToColumn if l1 < l2 => d,
        BarrierKind::RowToColumn => u1 + u2 + e * (l1 - l2),
        BarrierKind::ColumnToRow if l1 > l2 => d - u2 + u1,
        BarrierKind::ColumnToRow => d - u2 + u1 + e * (l2 - l1 + 1),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BarrierRegion {
    #[serde(rename = "A'")]
    A,
    #[serde(rename = "B'")]
    B,
    #[serde(rename = "C'")]
    C,
    #[serde(rename = "D'")]
    D,
}

impl fmt::Display for BarrierRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BarrierRegion::A => "A'",
            BarrierRegion::B => "B'",
            BarrierRegion::C => "C'",
            BarrierRegion::D => "D'",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BarrierComparison {
    pub region: BarrierRegion,
    /// Operations attaining the minimal estimated barrier.
    pub minimal: Vec<BarrierKind>,
    #[serde(serialize_with = "crate::model::ser_rational")]
    pub value: Rational64,
}

/// Region of the `(l1, l2)` plane and the cheapest of the three operations
/// that compete once `l1 > l2` (removing a column, adding a column, turning
/// a row into a column).  For `l1 <= l2` turning a row into a column is the
/// cheapest move overall, reported as region `B'` unless the point lies on
/// the degenerate line `l1 = 2 l2 - 2`.
pub fn compare_barriers(l1: i64, l2: i64, dc: &DerivedConstants) -> Result<BarrierComparison, LandscapeError> {
    let ls = dc.l2star;
    let region = if l2 <= ls - 1 && l1 == 2 * l2 - 2 {
        BarrierRegion::D
    } else if l1 <= l2 {
        BarrierRegion::B
    } else if l2 <= ls - 1 && l1 > 2 * l2 - 2 {
        BarrierRegion::A
    } else if l2 >= ls && l1 >= l2 + ls - 2 {
        BarrierRegion::C
    } else {
        BarrierRegion::B
    };
    let candidates = if l1 <= l2 && region != BarrierRegion::D {
        vec![BarrierKind::RowToColumn]
    } else {
        vec![BarrierKind::RemoveColumn, BarrierKind::AddColumn, BarrierKind::RowToColumn]
    };
    let values: Vec<(BarrierKind, Rational64)> =
        candidates.into_iter().map(|k| barrier(k, l1, l2, dc).map(|v| (k, v))).collect::<Result<_, _>>()?;
    let value = values.iter().map(|&(_, v)| v).min().expect("nonempty");
    let minimal = values.iter().filter(|&&(_, v)| v == value).map(|&(k, _)| k).collect();
    Ok(BarrierComparison { region, minimal, value })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum TRegion {
    #[serde(rename = "T'1")]
    T1,
    #[serde(rename = "T'2")]
    T2,
    #[serde(rename = "T'3")]
    T3,
    #[serde(rename = "outside")]
    Outside,
}

impl fmt::Display for TRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TRegion::T1 => "T'1",
            TRegion::T2 => "T'2",
            TRegion::T3 => "T'3",
            TRegion::Outside => "outside",
        })
    }
}

/// The attractive region of the minimal-barrier arrows: a subcritical band
/// near `l1 = 2 l2`, the horizontal strip `l2 = l2*`, and the wrapped strips
/// with `l1` equal to the box side or one less.  Overlaps resolve in that
/// order.
pub fn region_t(l1: i64, l2: i64, dc: &DerivedConstants, l0: usize) -> TRegion {
    let (ls, big_l) = (dc.l2star, l0 as i64);
    if (l2 < ls && 2 * l2 - 3 <= l1 && l1 <= 2 * l2 - 1) || (l1, l2) == (2 * ls - 3, ls) {
        TRegion::T1
    } else if l2 == ls && l2 + ls - 2 <= l1 && l1 < big_l {
        TRegion::T2
    } else if ls <= l2 && big_l - 1 <= l1 && l1 <= big_l {
        TRegion::T3
    } else {
        TRegion::Outside
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MembershipVerdict {
    pub member: bool,
    /// The clause that made the configuration a member.
    pub rule: Option<String>,
    /// Descriptor values the decision used.
    pub reasons: BTreeMap<String, i64>,
    /// Conditions that failed, for non-members.
    pub unmet: Vec<String>,
}

impl MembershipVerdict {
    fn decide(reasons: BTreeMap<String, i64>, checks: &[(&str, bool)], rule: &str) -> Self {
        let unmet: Vec<String> = checks.iter().filter(|(_, ok)| !ok).map(|(n, _)| n.to_string()).collect();
        let member = unmet.is_empty();
        Self { member, rule: member.then(|| rule.to_string()), reasons, unmet }
    }
}

fn descriptor_map(g: &GeometrySummary) -> BTreeMap<String, i64> {
    let mut m = BTreeMap::new();
    for (k, v) in [
        ("s", g.s),
        ("p1", g.p1),
        ("p2", g.p2),
        ("v", g.v),
        ("n", g.n),
        ("g1'", g.g1p),
        ("g2'", g.g2p),
        ("p_min", g.p_min()),
        ("p_max", g.p_max()),
        ("clusters", g.clusters as i64),
    ] {
        m.insert(k.to_string(), v);
    }
    if let Some(r) = g.rect {
        m.insert("box_w".into(), r.w as i64);
        m.insert("box_h".into(), r.h as i64);
    }
    m
}

/// Clause of the basin `B` satisfied by the descriptors, if any.
pub fn b_clause(g: &GeometrySummary, dc: &DerivedConstants) -> Option<usize> {
    b_clause_of(g.p1, g.p2, g.v, dc)
}

/// `b_clause` from the projections and vacancy count alone.
pub fn b_clause_of(p1: i64, p2: i64, v: i64, dc: &DerivedConstants) -> Option<usize> {
    let (s, ss, ls) = (p1 + p2, dc.sstar, dc.l2star);
    if s <= ss - 2 {
        Some(1)
    } else if p2 <= ls - 1 {
        Some(2)
    } else if s == ss - 1 && v >= p1.min(p2) - 1 {
        Some(3)
    } else if s >= ss && p2 == ls && v >= p1.max(p2) - 1 {
        Some(4)
    } else {
        None
    }
}

pub fn in_b(cfg: &Configuration, dc: &DerivedConstants) -> MembershipVerdict {
    in_b_summary(&summarize(cfg), dc)
}

pub fn in_b_summary(g: &GeometrySummary, dc: &DerivedConstants) -> MembershipVerdict {
    let reasons = descriptor_map(g);
    match b_clause(g, dc) {
        Some(c) => MembershipVerdict {
            member: true,
            rule: Some(
                match c {
                    1 => "clause 1: s <= s*-2",
                    2 => "clause 2: s >= s*-1 and p2 <= l2*-1",
                    3 => "clause 3: s = s*-1, p2 >= l2*, v >= p_min-1",
                    _ => "clause 4: s >= s*, p2 = l2*, v >= p_max-1",
                }
                .to_string(),
            ),
            reasons,
            unmet: Vec::new(),
        },
        None => MembershipVerdict { member: false, rule: None, reasons, unmet: vec!["no clause of B holds".into()] },
    }
}

fn box_is(g: &GeometrySummary, l1: i64, l2: i64) -> bool {
    g.rect.is_some_and(|r| r.w as i64 == l1 && r.h as i64 == l2)
}

pub fn in_p1(cfg: &Configuration, dc: &DerivedConstants) -> MembershipVerdict {
    in_p1_summary(&summarize(cfg), dc)
}

pub fn in_p1_summary(g: &GeometrySummary, dc: &DerivedConstants) -> MembershipVerdict {
    let (r, _) = classify_domino(dc.sstar).expect("s* >= 2");
    let v = MembershipVerdict::decide(
        descriptor_map(g),
        &[
            ("n = 0", g.n == 0),
            ("v = l1(s*) - 1", g.v == r.l1 - 1),
            ("clusterized part connected", g.connected()),
            ("g1' = 0", g.g1p == 0),
            ("g2' = 1", g.g2p == 1),
            ("circumscribed rectangle l1(s*) x l2(s*)", box_is(g, r.l1, r.l2)),
        ],
        "P1",
    );
    debug_assert!(!v.member || summary_energy(g, dc) == dc.gamma);
    v
}

pub fn in_p2(cfg: &Configuration, dc: &DerivedConstants) -> MembershipVerdict {
    in_p2_summary(&summarize(cfg), dc)
}

pub fn in_p2_summary(g: &GeometrySummary, dc: &DerivedConstants) -> MembershipVerdict {
    let (r, _) = classify_domino(dc.sstar - 1).expect("s* - 1 >= 2");
    let v = MembershipVerdict::decide(
        descriptor_map(g),
        &[
            ("n = 1", g.n == 1),
            ("v = l2(s*-1) - 1", g.v == r.l2 - 1),
            ("clusterized part connected", g.connected()),
            ("monotone", g.monotone),
            ("circumscribed rectangle l1(s*-1) x l2(s*-1)", box_is(g, r.l1, r.l2)),
        ],
        "P2",
    );
    debug_assert!(!v.member || summary_energy(g, dc) == dc.gamma);
    v
}

pub fn in_p(cfg: &Configuration, dc: &DerivedConstants) -> MembershipVerdict {
    in_p_summary(&summarize(cfg), dc)
}

pub fn in_p_summary(g: &GeometrySummary, dc: &DerivedConstants) -> MembershipVerdict {
    let p1 = in_p1_summary(g, dc);
    if p1.member {
        return p1;
    }
    let p2 = in_p2_summary(g, dc);
    if p2.member {
        return p2;
    }
    let mut unmet: Vec<String> = p1.unmet.iter().map(|u| format!("P1: {u}")).collect();
    unmet.extend(p2.unmet.iter().map(|u| format!("P2: {u}")));
    MembershipVerdict { member: false, rule: None, reasons: p1.reasons, unmet }
}

/// Gate of the weakly anisotropic regime; `None` for strong parameters.
pub fn in_p_weak(cfg: &Configuration, dc: &DerivedConstants) -> Option<MembershipVerdict> {
    if dc.is_strong() {
        return None;
    }
    let g = summarize(cfg);
    let s = dc.l1star + dc.l2star - 1;
    let (l1, l2) = match classify_standard(s, dc) {
        Ok(c) => (c.rect.l1, c.rect.l2),
        Err(_) => {
            let reasons = descriptor_map(&g);
            return Some(MembershipVerdict {
                member: false,
                rule: None,
                reasons,
                unmet: vec!["standard rectangle undefined at l1*+l2*-1".into()],
            });
        }
    };
    Some(MembershipVerdict::decide(
        descriptor_map(&g),
        &[
            ("n = 1", g.n == 1),
            ("v = l2(l1*+l2*-1) - 1", g.v == l2 - 1),
            ("clusterized part connected", g.connected()),
            ("monotone", g.monotone),
            ("circumscribed rectangle (l1+1) x l2 at l1*+l2*-1", box_is(&g, l1 + 1, l2)),
        ],
        "P~",
    ))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InequalityFamily {
    pub name: String,
    pub applicable: bool,
    pub passed: bool,
    pub checked: usize,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InequalityReport {
    pub k_max: i64,
    pub families: Vec<InequalityFamily>,
}

impl InequalityReport {
    pub fn all_passed(&self) -> bool {
        self.families.iter().all(|f| !f.applicable || f.passed)
    }
}

struct FamilyBuilder {
    name: String,
    checked: usize,
    failures: Vec<String>,
}

impl FamilyBuilder {
    fn new(name: &str) -> Self {
        Self { name: name.into(), checked: 0, failures: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    fn finish(self, applicable: bool) -> InequalityFamily {
        InequalityFamily {
            passed: self.failures.is_empty(),
            name: self.name,
            applicable,
            checked: if applicable { self.checked } else { 0 },
            failures: if applicable { self.failures } else { Vec::new() },
        }
    }
}

/// Skeleton rectangle of semi-perimeter `s` before the box side matters:
/// dominoes below `3 l2* - 2`, then rectangles of height `l2*`.
fn skeleton_rect(s: i64, dc: &DerivedConstants) -> RectSpec {
    if s < 3 * dc.l2star - 2 {
        classify_domino(s).expect("s >= 2").0
    } else {
        RectSpec::new(s - dc.l2star, dc.l2star)
    }
}

/// Maximal energy of the reference path between the skeleton rectangles of
/// semi-perimeter `s` and `s + 1`, in the infinite-box limit.
pub fn skeleton_step_peak(s: i64, dc: &DerivedConstants) -> Rational64 {
    let r = skeleton_rect(s, dc);
    let h = dc.rect_energy(r.l1, r.l2);
    if s < 3 * dc.l2star - 2 && s % 3 == 0 {
        h - dc.eps * (s / 3) + dc.delta + dc.u1
    } else {
        h + dc.delta * 2 - dc.u1
    }
}

/// Evaluate, in exact arithmetic, the closed-form inequalities the
/// energy-landscape argument relies on, for `k = 0..=k_max` and the stated
/// offset ranges.
pub fn verify_proof_inequalities(dc: &DerivedConstants, k_max: i64) -> InequalityReport {
    let strong = dc.is_strong();
    let (u1, u2, d, e, g, ls) = (dc.u1, dc.u2, dc.delta, dc.eps, dc.gamma, dc.l2star);
    let h = |l1: i64, l2: i64| dc.rect_energy(l1, l2);
    let mut families = Vec::new();

    // H(R(l1(k), l2)) + m Delta > Gamma for k >= 1: exits with several free
    // particles are always above the critical energy.
    let batteries: [(&str, i64, i64, i64); 6] = [
        ("three free particles, height l2*-2, width 2l2*+k-3", -3, -2, 3),
        ("three free particles, height l2*-1, width 2l2*+k-4", -4, -1, 3),
        ("three free particles, height l2*-2, width 2l2*+k-4", -4, -2, 3),
        ("three free particles, height l2*-1, width 2l2*+k-5", -5, -1, 3),
        ("four free particles, height l2*-2, width 2l2*+k-5", -5, -2, 4),
        ("four free particles, height l2*-1, width 2l2*+k-6", -6, -1, 4),
    ];
    for (name, dw, dh, m) in batteries {
        let mut f = FamilyBuilder::new(name);
        for k in 1..=k_max {
            let (l1, l2) = (2 * ls + k + dw, ls + dh);
            if l1 < 1 || l2 < 1 {
                continue;
            }
            let lhs = h(l1, l2) + d * m;
            f.check(lhs > g, || format!("k={k}: H(R({l1},{l2}))+{m}D = {lhs} <= {g}"));
        }
        families.push(f.finish(strong));
    }

    // Tall rectangles R(2l2*-k-x, l2*+k) with m free particles.
    for (name, m, xs) in [
        ("three free particles, tall rectangles, 2 <= x <= 5", 3, 2..=5),
        ("four free particles, tall rectangles, 2 <= x <= 6", 4, 2..=6),
    ] {
        let mut f = FamilyBuilder::new(name);
        for k in 0..=k_max {
            for x in xs.clone() {
                let (l1, l2) = (2 * ls - k - x, ls + k);
                if l1 < 1 {
                    continue;
                }
                let lhs = h(l1, l2) + d * m;
                f.check(lhs > g, || format!("k={k} x={x}: {lhs} <= {g}"));
            }
        }
        families.push(f.finish(strong));
    }

    // Height l2* with p_max - 1 vacancies and m free particles, x <= 1.
    for (name, m) in [
        ("three free particles, height l2*, p_max-1 vacancies", 3),
        ("four free particles, height l2*, p_max-1 vacancies", 4),
    ] {
        let mut f = FamilyBuilder::new(name);
        for x in (1 - k_max)..=1 {
            let l1 = 2 * ls - x;
            let lhs = h(l1, ls) + e * (2 * ls - x - 1) + d * m;
            f.check(lhs > g, || format!("x={x}: {lhs} <= {g}"));
        }
        families.push(f.finish(strong));
    }

    // One free particle on R(2l2*+k-1, l2*) with p_max-1 vacancies.
    let mut f = FamilyBuilder::new("one free particle, height l2*, p_max-1 vacancies");
    for k in 0..=k_max {
        let lhs = h(2 * ls + k - 1, ls) + e * (2 * ls + k - 2) + d;
        f.check(lhs > g, || format!("k={k}: {lhs} <= {g}"));
    }
    families.push(f.finish(strong));

    // A protuberance instead of the free particle: equality exactly at k = 0.
    let mut f = FamilyBuilder::new("protuberance on a long side, height l2*, p_max-1 vacancies");
    for k in 0..=k_max {
        let lhs = h(2 * ls + k - 1, ls) + e * (2 * ls + k - 2) + u1;
        let ok = if k == 0 { lhs == g } else { lhs > g };
        f.check(ok, || format!("k={k}: {lhs} vs {g}"));
    }
    families.push(f.finish(strong));

    // One free particle on R(2l2*-k-2, l2*+k) with p_min-1 vacancies: the
    // gate P2 at k = 0, strictly above afterwards.
    let mut f = FamilyBuilder::new("one free particle, tall rectangles, p_min-1 vacancies");
    for k in 0..=k_max {
        let l1 = 2 * ls - k - 2;
        if l1 < 1 {
            continue;
        }
        let lhs = h(l1, ls + k) + e * (ls + k - 1) + d;
        let ok = if k == 0 { lhs == g } else { lhs > g };
        f.check(ok, || format!("k={k}: {lhs} vs {g}"));
    }
    families.push(f.finish(strong));

    let mut f = FamilyBuilder::new("one free particle on R(2l2*-1, l2*) with 2l2*-2 vacancies");
    let lhs = h(2 * ls - 1, ls) + e * (2 * ls - 2) + d;
    f.check(lhs > g, || format!("{lhs} <= {g}"));
    families.push(f.finish(strong));

    // Domino energies increase along each residue class.
    let mut f = FamilyBuilder::new("domino energies increase with size");
    let h0 = |n: i64| u1 * n + u2 * (2 * n) - e * (2 * n * n);
    let h1 = |n: i64| u1 * (n + 1) + u2 * (2 * n) - e * (2 * n * (n + 1));
    let h2 = |n: i64| u1 * (n + 1) + u2 * (2 * n + 1) - e * ((n + 1) * (2 * n + 1));
    for n in 0..ls {
        if n >= 1 {
            let r = classify_domino(3 * n).unwrap().0;
            f.check(h0(n) == h(r.l1, r.l2), || format!("0-dom closed form at n={n}"));
        }
        let r = classify_domino(3 * n + 1).map(|x| x.0);
        if let Ok(r) = r {
            f.check(h1(n) == h(r.l1, r.l2), || format!("1-dom closed form at n={n}"));
        }
        if n + 1 < ls {
            f.check(h0(n + 1) > h0(n), || format!("0-dom not increasing at n={n}"));
            f.check(h1(n + 1) > h1(n), || format!("1-dom not increasing at n={n}"));
        }
        if n <= ls - 2 {
            let r = classify_domino(3 * n + 2).unwrap().0;
            f.check(h2(n) == h(r.l1, r.l2), || format!("2-dom closed form at n={n}"));
            if n + 1 <= ls - 2 {
                f.check(h2(n + 1) > h2(n), || format!("2-dom not increasing at n={n}"));
            }
        }
    }
    families.push(f.finish(strong));

    // Column-to-row dominates adding a column on 0-domino steps.
    let mut f = FamilyBuilder::new("column-to-row peak above add-column peak on 0-domino steps");
    let mut s = 3;
    while s <= 3 * ls - 3 {
        let lhs = -e * (s / 3) + d + u1;
        let rhs = d * 2 - u1;
        f.check(lhs > rhs, || format!("s={s}: {lhs} <= {rhs}"));
        s += 3;
    }
    families.push(f.finish(strong));

    // The maximum of the step peaks is the column-to-row step out of
    // R(2l2*-2, l2*-1) and equals Gamma; beyond it the peaks decrease.
    let mut f = FamilyBuilder::new("reference-path maximum is Gamma at the last 0-domino step");
    let top = 3 * ls - 3;
    let peak = skeleton_step_peak(top, dc);
    f.check(peak == g, || format!("peak at s={top} is {peak}, Gamma {g}"));
    for s in 2..=(3 * ls - 2) {
        if s != top {
            let p = skeleton_step_peak(s, dc);
            f.check(p < peak, || format!("s={s}: {p} >= {peak}"));
        }
    }
    let mut prev = None;
    for s in (3 * ls - 1)..=(3 * ls - 1 + k_max) {
        let p = skeleton_step_peak(s, dc);
        f.check(p < peak, || format!("s={s}: {p} >= {peak}"));
        if let Some(q) = prev {
            f.check(p < q, || format!("s={s}: peaks not decreasing"));
        }
        prev = Some(p);
    }
    families.push(f.finish(strong));

    InequalityReport { k_max, families }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::summarize;
    use crate::model::{derive_constants, hamiltonian, ModelParams};

    fn small() -> DerivedConstants {
        derive_constants(&ModelParams::small(1.0), true).unwrap()
    }

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    #[test]
    fn rectangle_energies() {
        let dc = small();
        assert_eq!(rect_energy(1, 1, &dc), r(18, 5));
        assert_eq!(rect_energy(5, 3, &dc), r(8, 1));
        assert_eq!(rect_energy(4, 3, &dc), r(41, 5));
    }

    #[test]
    fn dominoes() {
        assert_eq!(classify_domino(6).unwrap(), (RectSpec::new(4, 2), DominoTag::Zero));
        assert_eq!(classify_domino(7).unwrap(), (RectSpec::new(4, 3), DominoTag::One));
        assert_eq!(classify_domino(8).unwrap(), (RectSpec::new(5, 3), DominoTag::Two));
        assert_eq!(classify_domino(2).unwrap().0, RectSpec::new(1, 1));
        assert!(classify_domino(1).is_err());
        for s in 2..60 {
            assert_eq!(classify_domino(s).unwrap().0.s(), s);
        }
    }

    #[test]
    fn standard_rectangles() {
        let dc = small();
        assert_eq!(dc.lbar, 6);
        let c = classify_standard(10, &dc).unwrap();
        assert_eq!((c.rect, c.tag, c.quasi), (RectSpec::new(8, 2), StandardTag::Zero, None));
        let c = classify_standard(11, &dc).unwrap();
        assert_eq!((c.rect, c.tag, c.quasi), (RectSpec::new(8, 3), StandardTag::One, Some(RectSpec::new(9, 2))));
        assert!(classify_standard(8, &dc).is_err());
        for s in 9..40 {
            let c = classify_standard(s, &dc).unwrap();
            assert_eq!(c.tag == StandardTag::Zero, (s - dc.lbar) % 2 == 0);
            assert_eq!(c.rect.s(), s);
        }
    }

    #[test]
    fn barrier_table() {
        let dc = small();
        assert_eq!(barrier(BarrierKind::AddColumn, 4, 3, &dc).unwrap(), r(21, 5));
        assert_eq!(barrier(BarrierKind::RemoveColumn, 5, 3, &dc).unwrap(), r(22, 5));
        assert_eq!(barrier(BarrierKind::RowToColumn, 3, 3, &dc).unwrap(), r(4, 1));
        assert_eq!(barrier(BarrierKind::RowToColumn, 2, 3, &dc).unwrap(), dc.delta);
        assert!(barrier(BarrierKind::AddRow, 0, 3, &dc).is_err());
        assert_eq!("column-to-row".parse::<BarrierKind>().unwrap(), BarrierKind::ColumnToRow);
        assert!("jump".parse::<BarrierKind>().is_err());
    }

    #[test]
    fn barrier_regions() {
        let dc = small();
        let c = compare_barriers(5, 2, &dc).unwrap();
        assert_eq!((c.region, c.minimal), (BarrierRegion::A, vec![BarrierKind::RemoveColumn]));
        let c = compare_barriers(4, 3, &dc).unwrap();
        assert_eq!((c.region, c.minimal), (BarrierRegion::C, vec![BarrierKind::AddColumn]));
        let c = compare_barriers(2, 2, &dc).unwrap();
        assert_eq!(c.region, BarrierRegion::D);
        assert_eq!(c.minimal, vec![BarrierKind::RemoveColumn, BarrierKind::RowToColumn]);
        let c = compare_barriers(2, 5, &dc).unwrap();
        assert_eq!((c.region, c.minimal), (BarrierRegion::B, vec![BarrierKind::RowToColumn]));
    }

    #[test]
    fn t_regions() {
        let dc = small();
        assert_eq!(region_t(3, 2, &dc, 12), TRegion::T1);
        assert_eq!(region_t(3, 3, &dc, 12), TRegion::T1);
        assert_eq!(region_t(7, 3, &dc, 12), TRegion::T2);
        assert_eq!(region_t(12, 5, &dc, 12), TRegion::T3);
        assert_eq!(region_t(6, 5, &dc, 12), TRegion::Outside);
        // a 0-domino lies outside the band 2 l2 - 3 <= l1 <= 2 l2 - 1
        assert_eq!(region_t(4, 2, &dc, 12), TRegion::Outside);
    }

    #[test]
    fn wulff() {
        assert_eq!(wulff_rect(&small()), RectSpec::new(8, 3));
        let dc = derive_constants(&ModelParams::paperlike(1.0), true).unwrap();
        assert_eq!(wulff_rect(&dc), RectSpec::new(15, 5));
    }

    fn w1() -> Configuration {
        let mut sites = Vec::new();
        for x in 3..=7 {
            sites.push((x, 3));
        }
        for x in 3..=6 {
            sites.push((x, 4));
        }
        sites.extend([(4, 5), (6, 5)]);
        Configuration::with_sites(12, &sites)
    }

    fn w2() -> Configuration {
        // R(4,3) with two vacancies at the top right and a ring particle
        let mut c = Configuration::rectangle(12, 3, 3, 4, 3);
        c.set(6, 5, false);
        c.set(5, 5, false);
        c.set(0, 8, true);
        c
    }

    #[test]
    fn basin_membership() {
        let dc = small();
        let v = in_b(&Configuration::rectangle(12, 1, 1, 3, 3), &dc);
        assert!(v.member && v.rule.as_deref().unwrap().starts_with("clause 1"));
        let v = in_b(&Configuration::rectangle(12, 1, 1, 9, 2), &dc);
        assert!(v.member && v.rule.as_deref().unwrap().starts_with("clause 2"));
        let v = in_b(&Configuration::rectangle(12, 1, 1, 5, 3), &dc);
        assert!(!v.member && v.rule.is_none());
        assert!(in_b(&Configuration::empty(12), &dc).member);
        assert!(!in_b(&Configuration::full(12), &dc).member);
    }

    #[test]
    fn gate_membership() {
        let dc = small();
        let p = ModelParams::small(1.0);
        let v = in_p1(&w1(), &dc);
        assert!(v.member, "{v:?}");
        assert_eq!(hamiltonian(&w1(), &p), dc.gamma);
        assert!(!in_p2(&w1(), &dc).member);

        let v = in_p2(&w2(), &dc);
        assert!(v.member, "{v:?}");
        assert_eq!(hamiltonian(&w2(), &p), r(63, 5));
        assert!(in_b(&w2(), &dc).member);
        assert_eq!(in_p(&w2(), &dc).rule.as_deref(), Some("P2"));

        let full = Configuration::rectangle(12, 1, 1, 5, 3);
        assert!(!in_p(&full, &dc).member);
        assert!(in_p_weak(&full, &dc).is_none());
        let g = summarize(&w2());
        assert_eq!(summary_energy(&g, &dc), dc.gamma);
    }

    #[test]
    fn weak_gate_witness() {
        let p = ModelParams::new(r(3, 1), r(2, 1), r(24, 5), 1.0, 20).unwrap();
        let dc = derive_constants(&p, false).unwrap();
        assert!(!dc.is_strong());
        let c = classify_standard(dc.l1star + dc.l2star - 1, &dc).unwrap();
        let (w, h) = (c.rect.l1 + 1, c.rect.l2);
        let mut cfg = Configuration::rectangle(20, 1, 1, w as usize, h as usize);
        // remove l2 - 1 sites from the right end of the top row
        for i in 0..(h - 1) {
            cfg.set((w - i) as usize, h as usize, false);
        }
        cfg.set(0, 10, true);
        let v = in_p_weak(&cfg, &dc).unwrap();
        assert!(v.member, "{v:?}");
        let wulff = wulff_rect(&dc).configuration(20);
        assert!(!in_p_weak(&wulff, &dc).unwrap().member);
    }

    #[test]
    fn inequalities_hold_for_strong_sets() {
        for p in [ModelParams::small(1.0), ModelParams::paperlike(1.0)] {
            let dc = derive_constants(&p, true).unwrap();
            let rep = verify_proof_inequalities(&dc, 10);
            for f in &rep.families {
                assert!(f.applicable && f.passed, "{}: {:?}", f.name, f.failures);
            }
        }
    }

    #[test]
    fn inequalities_weak_set_not_applicable() {
        let p = ModelParams::new(r(3, 1), r(2, 1), r(24, 5), 1.0, 20).unwrap();
        let dc = derive_constants(&p, false).unwrap();
        let rep = verify_proof_inequalities(&dc, 10);
        assert!(rep.families.iter().all(|f| !f.applicable && f.checked == 0));
        assert!(rep.all_passed());
    }
}
