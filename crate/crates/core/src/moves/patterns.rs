//! Exhaustive verification of line-activity properties of a single horizontal
//! exchange on a finite local frame.
//!
//! The moving particle goes from `x1 = (0,0)` to `x2 = (1,0)`.  Only the eight
//! sites `x1, x2` and their neighbours can change clusterized status, and all
//! of their neighbours lie in the frame of sites within distance two of `x1`
//! or `x2`.  Everything outside the frame enters only through one bit per
//! tracked line ("does this line contain clusterized sites other than the
//! eight dynamic ones?"), which is forced to true when a static frame site on
//! the line is occupied with an occupied frame neighbour and is otherwise
//! free.  Enumerating the 2^16 frame patterns times the free line bits covers
//! every configuration of an arbitrarily large box up to what the lemmas can
//! see.  Moves that touch the boundary ring behave like interior moves with
//! the ring sites empty, and vertical moves are the transpose, so the
//! horizontal interior enumeration is exhaustive.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LemmaId {
    /// `r2` and `r5` never become inactive.
    R2R5NeverDeactivate,
    /// `r6` and `r7` never become active.
    R6R7NeverActivate,
    /// If `r1` becomes inactive, no line becomes active.
    Lemma0I,
    /// If `r1` becomes active, only `r3`/`r4` may become inactive.
    Lemma0II,
    /// `|ds| <= 5`.
    DsBound5,
    /// Vacancy and free-particle lower bounds attached to a positive `ds`
    /// when the smaller projection is at least 4.
    Lemma12VacancyBounds,
}

impl LemmaId {
    pub const ALL: [LemmaId; 6] = [
        LemmaId::R2R5NeverDeactivate,
        LemmaId::R6R7NeverActivate,
        LemmaId::Lemma0I,
        LemmaId::Lemma0II,
        LemmaId::DsBound5,
        LemmaId::Lemma12VacancyBounds,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            LemmaId::R2R5NeverDeactivate => "r2r5-never-deactivate",
            LemmaId::R6R7NeverActivate => "r6r7-never-activate",
            LemmaId::Lemma0I => "lemma0-i",
            LemmaId::Lemma0II => "lemma0-ii",
            LemmaId::DsBound5 => "ds-bound-5",
            LemmaId::Lemma12VacancyBounds => "lemma12-vacancy-bounds",
        }
    }
}

impl fmt::Display for LemmaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown lemma id {0:?}")]
pub struct UnknownLemma(pub String);

impl FromStr for LemmaId {
    type Err = UnknownLemma;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LemmaId::ALL.into_iter().find(|l| l.name() == s).ok_or_else(|| UnknownLemma(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PatternCounterexample {
    /// Frame occupancy before the move: rows top first, `x` from -2 to 3,
    /// `#` occupied, `.` empty, space outside the frame; `x1` is the occupied
    /// site at column 2 of the middle row.
    pub grid: String,
    /// Per line `r1..r7`: the outside-activity bit used (`None` when forced by
    /// the frame itself).
    pub line_bits: [Option<bool>; 7],
    pub activated: Vec<usize>,
    pub deactivated: Vec<usize>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PatternVerdict {
    pub lemma: LemmaId,
    pub passed: bool,
    /// Number of (frame pattern, line-bit assignment) cases examined.
    pub cases: u64,
    pub counterexample_count: u64,
    /// The first few counterexamples.
    pub counterexamples: Vec<PatternCounterexample>,
}

const W: i32 = 6;
const H: i32 = 5;
const X0: i32 = 2;
const Y0: i32 = 2;

#[inline]
fn bit(x: i32, y: i32) -> u32 {
    1 << ((y + Y0) * W + (x + X0))
}

#[inline]
fn in_grid(x: i32, y: i32) -> bool {
    (-X0..W - X0).contains(&x) && (-Y0..H - Y0).contains(&y)
}

fn in_frame(x: i32, y: i32) -> bool {
    let d1 = x.abs() + y.abs();
    let d2 = (x - 1).abs() + y.abs();
    d1 <= 2 || d2 <= 2
}

const NB: [(i32, i32); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
const DYNAMIC: [(i32, i32); 8] = [(0, 0), (1, 0), (0, 1), (0, -1), (-1, 0), (1, 1), (1, -1), (2, 0)];

#[derive(Clone, Copy)]
enum Axis {
    Row(i32),
    Col(i32),
}

/// `r1..r7` for the horizontal move `(0,0) -> (1,0)`.
const LINES: [Axis; 7] =
    [Axis::Row(0), Axis::Col(1), Axis::Row(1), Axis::Row(-1), Axis::Col(2), Axis::Col(0), Axis::Col(-1)];

fn on_line(line: Axis, (x, y): (i32, i32)) -> bool {
    match line {
        Axis::Row(r) => y == r,
        Axis::Col(c) => x == c,
    }
}

struct Frame {
    free_cells: Vec<(i32, i32)>,
    static_cells: Vec<(i32, i32)>,
    frame_mask: u32,
}

impl Frame {
    fn new() -> Self {
        let mut free_cells = Vec::new();
        let mut static_cells = Vec::new();
        let mut frame_mask = 0;
        for y in -Y0..H - Y0 {
            for x in -X0..W - X0 {
                if !in_frame(x, y) {
                    continue;
                }
                frame_mask |= bit(x, y);
                if (x, y) != (0, 0) && (x, y) != (1, 0) {
                    free_cells.push((x, y));
                }
                if !DYNAMIC.contains(&(x, y)) {
                    static_cells.push((x, y));
                }
            }
        }
        Self { free_cells, static_cells, frame_mask }
    }

    fn occupancy(&self, pattern: u32) -> u32 {
        let mut occ = 0;
        for (i, &(x, y)) in self.free_cells.iter().enumerate() {
            if pattern >> i & 1 == 1 {
                occ |= bit(x, y);
            }
        }
        occ
    }
}

#[inline]
fn occupied(occ: u32, x: i32, y: i32) -> bool {
    in_grid(x, y) && occ & bit(x, y) != 0
}

fn has_occupied_neighbour(occ: u32, (x, y): (i32, i32)) -> bool {
    NB.iter().any(|&(dx, dy)| occupied(occ, x + dx, y + dy))
}

fn clusterized(occ: u32, c: (i32, i32)) -> bool {
    occupied(occ, c.0, c.1) && has_occupied_neighbour(occ, c)
}

fn render(frame: &Frame, occ: u32) -> String {
    let mut s = String::new();
    for y in (-Y0..H - Y0).rev() {
        for x in -X0..W - X0 {
            s.push(if frame.frame_mask & bit(x, y) == 0 {
                ' '
            } else if occ & bit(x, y) != 0 {
                '#'
            } else {
                '.'
            });
        }
        s.push('\n');
    }
    s
}

/// Outcome of one case for all lemmas at once.
struct CaseOutcome {
    activated: Vec<usize>,
    deactivated: Vec<usize>,
    failures: Vec<(LemmaId, String)>,
}

fn evaluate_case(frame: &Frame, occ_before: u32, line_bits: &[bool; 7]) -> CaseOutcome {
    let occ_after = (occ_before & !bit(0, 0)) | bit(1, 0);
    let cl_before: Vec<bool> = DYNAMIC.iter().map(|&c| clusterized(occ_before, c)).collect();
    let cl_after: Vec<bool> = DYNAMIC.iter().map(|&c| clusterized(occ_after, c)).collect();

    let mut activated = Vec::new();
    let mut deactivated = Vec::new();
    let mut active_after = [false; 7];
    for (li, &line) in LINES.iter().enumerate() {
        let dyn_b = DYNAMIC.iter().zip(&cl_before).any(|(&c, &b)| b && on_line(line, c));
        let dyn_a = DYNAMIC.iter().zip(&cl_after).any(|(&c, &b)| b && on_line(line, c));
        let before = line_bits[li] || dyn_b;
        let after = line_bits[li] || dyn_a;
        active_after[li] = after;
        if !before && after {
            activated.push(li + 1);
        } else if before && !after {
            deactivated.push(li + 1);
        }
    }
    let ds = activated.len() as i64 - deactivated.len() as i64;
    let mut failures = Vec::new();
    let has = |v: &Vec<usize>, r: usize| v.contains(&r);

    if has(&deactivated, 2) || has(&deactivated, 5) {
        failures.push((LemmaId::R2R5NeverDeactivate, "r2 or r5 became inactive".into()));
    }
    if has(&activated, 6) || has(&activated, 7) {
        failures.push((LemmaId::R6R7NeverActivate, "r6 or r7 became active".into()));
    }
    if has(&deactivated, 1) && !activated.is_empty() {
        failures.push((LemmaId::Lemma0I, format!("r1 inactive but {activated:?} active")));
    }
    if has(&activated, 1) && deactivated.iter().any(|&r| r != 3 && r != 4) {
        failures.push((LemmaId::Lemma0II, format!("r1 active and {deactivated:?} inactive")));
    }
    if ds.abs() > 5 {
        failures.push((LemmaId::DsBound5, format!("ds = {ds}")));
    }

    if ds >= 1 {
        // Lower bound on the vacancies of the new state, linear in the smaller
        // projection P: every newly active line holds only dynamic sites of the
        // clusterized part, so it contributes at least P minus those sites,
        // and vacant crossings of a new row and a new column are counted once.
        let new_rows: Vec<i32> = activated
            .iter()
            .filter_map(|&r| match LINES[r - 1] {
                Axis::Row(y) => Some(y),
                Axis::Col(_) => None,
            })
            .collect();
        let new_cols: Vec<i32> = activated
            .iter()
            .filter_map(|&r| match LINES[r - 1] {
                Axis::Col(x) => Some(x),
                Axis::Row(_) => None,
            })
            .collect();
        let cl_after_at = |c: (i32, i32)| DYNAMIC.iter().position(|&d| d == c).map(|i| cl_after[i]).unwrap_or(false);
        let on_row = |y: i32| DYNAMIC.iter().zip(&cl_after).filter(|(&c, &b)| b && c.1 == y).count() as i64;
        let on_col = |x: i32| DYNAMIC.iter().zip(&cl_after).filter(|(&c, &b)| b && c.0 == x).count() as i64;
        let mut constant = 0i64;
        for &y in &new_rows {
            constant += on_row(y);
        }
        for &x in &new_cols {
            constant += on_col(x);
        }
        for &y in &new_rows {
            for &x in &new_cols {
                if !cl_after_at((x, y)) {
                    constant += 1;
                }
            }
        }
        // Vacant crossings of old active lines that are visible in the frame.
        let row_known = |y: i32| {
            LINES.iter().zip(&active_after).any(|(&l, &a)| a && matches!(l, Axis::Row(r) if r == y))
                || frame.static_cells.iter().any(|&c| c.1 == y && clusterized(occ_after, c))
        };
        let col_known = |x: i32| {
            LINES.iter().zip(&active_after).any(|(&l, &a)| a && matches!(l, Axis::Col(r) if r == x))
                || frame.static_cells.iter().any(|&c| c.0 == x && clusterized(occ_after, c))
        };
        let mut seen_vacant = 0i64;
        for y in -Y0..H - Y0 {
            for x in -X0..W - X0 {
                if frame.frame_mask & bit(x, y) == 0 || new_rows.contains(&y) || new_cols.contains(&x) {
                    continue;
                }
                let surely_not_cl = match DYNAMIC.iter().position(|&d| d == (x, y)) {
                    Some(i) => !cl_after[i],
                    None => !occupied(occ_after, x, y),
                };
                if surely_not_cl && row_known(y) && col_known(x) {
                    seen_vacant += 1;
                }
            }
        }
        let slope = (new_rows.len() + new_cols.len()) as i64;
        let v_lb = |p: i64| slope * p - constant + seen_vacant;

        // Free particles of the old state that are certain: dynamic sites with
        // no occupied neighbour, and occupied static sites with no occupied
        // frame neighbour lying on a line whose outside bit is false.
        let mut n_lb = DYNAMIC
            .iter()
            .filter(|&&c| occupied(occ_before, c.0, c.1) && !has_occupied_neighbour(occ_before, c))
            .count() as i64;
        for &c in &frame.static_cells {
            if occupied(occ_before, c.0, c.1) && !has_occupied_neighbour(occ_before, c) {
                let surely_free = LINES.iter().enumerate().any(|(li, &l)| on_line(l, c) && !line_bits[li]);
                if surely_free {
                    n_lb += 1;
                }
            }
        }

        // Both sides are linear in P with the bound's slope ds <= slope, so
        // the smallest admissible P is the worst case.
        let p0 = 4i64;
        let k = ds;
        if k == 1 {
            if v_lb(p0) < p0 - 3 {
                failures.push((LemmaId::Lemma12VacancyBounds, format!("ds=1: v >= {} < P-3 at P={p0}", v_lb(p0))));
            }
            if v_lb(p0) < p0 - 1 && n_lb < 2 {
                failures.push((
                    LemmaId::Lemma12VacancyBounds,
                    format!("ds=1, v can be {} < P-1 at P={p0} with n(old) = {n_lb} < 2", v_lb(p0)),
                ));
            }
        } else if (2..=5).contains(&k) {
            if n_lb < k - 1 {
                failures.push((LemmaId::Lemma12VacancyBounds, format!("ds={k}: n(old) can be {n_lb} < {}", k - 1)));
            }
            if v_lb(p0) < k * p0 - (k + 3) {
                failures.push((
                    LemmaId::Lemma12VacancyBounds,
                    format!("ds={k}: v can be {} < {} at P={p0}", v_lb(p0), k * p0 - (k + 3)),
                ));
            }
        }
    }
    CaseOutcome { activated, deactivated, failures }
}

/// Run the exhaustive enumeration for one property.
pub fn local_pattern_check(lemma: LemmaId) -> PatternVerdict {
    run(&[lemma]).pop().expect("one verdict per lemma")
}

/// Run the enumeration once and report every property.
pub fn local_pattern_check_all() -> Vec<PatternVerdict> {
    run(&LemmaId::ALL)
}

const KEEP: usize = 8;

fn run(lemmas: &[LemmaId]) -> Vec<PatternVerdict> {
    let frame = Frame::new();
    let mut verdicts: Vec<PatternVerdict> = lemmas
        .iter()
        .map(|&lemma| PatternVerdict { lemma, passed: true, cases: 0, counterexample_count: 0, counterexamples: Vec::new() })
        .collect();
    let mut cases = 0u64;
    for pattern in 0u32..(1 << frame.free_cells.len()) {
        let occ = frame.occupancy(pattern) | bit(0, 0);
        // lines whose outside bit is forced true by the frame itself
        let mut forced = [false; 7];
        for &c in &frame.static_cells {
            if clusterized(occ, c) {
                for (li, &l) in LINES.iter().enumerate() {
                    if on_line(l, c) {
                        forced[li] = true;
                    }
                }
            }
        }
        let free: Vec<usize> = (0..7).filter(|&i| !forced[i]).collect();
        for assignment in 0u32..(1 << free.len()) {
            let mut bits = forced;
            let mut shown = [None; 7];
            for (j, &li) in free.iter().enumerate() {
                bits[li] = assignment >> j & 1 == 1;
                shown[li] = Some(bits[li]);
            }
            cases += 1;
            let outcome = evaluate_case(&frame, occ, &bits);
            for (id, detail) in outcome.failures {
                let Some(v) = verdicts.iter_mut().find(|v| v.lemma == id) else { continue };
                v.counterexample_count += 1;
                if v.counterexamples.len() < KEEP {
                    v.counterexamples.push(PatternCounterexample {
                        grid: render(&frame, occ),
                        line_bits: shown,
                        activated: outcome.activated.clone(),
                        deactivated: outcome.deactivated.clone(),
                        detail,
                    });
                }
            }
        }
    }
    for v in &mut verdicts {
        v.cases = cases;
        v.passed = v.counterexample_count == 0;
    }
    verdicts
}
