//! Exact, exhaustive checks: minimax communication heights on enumerable
//! state spaces, stability levels, and the streaming scan of the moves that
//! leave the subcritical basin `B`.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::hash::Hash;
use std::time::Instant;

use num_rational::Rational64;
use serde::Serialize;

use crate::geometry::{summarize, RectBox};
use crate::landscape::{b_clause_of, classify_domino, in_p1, in_p2};
use crate::model::{energy_units, Configuration, DerivedConstants, EnergyScale, ModelParams};
use crate::moves::{all_bonds, apply_in_place, Bond};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("the two states do not communicate inside the subspace")]
    Disconnected,
    #[error("state is outside the subspace")]
    OutsideSubspace,
    #[error("the full state space of a box with {0} sites is too large to enumerate")]
    TooLarge(usize),
    #[error("the boundary scan is defined for the strongly anisotropic regime only")]
    NotStrong,
    #[error("window {w}x{h} cannot contain R({l1},{l2}); the scan would be vacuous")]
    WindowTooSmall { w: usize, h: usize, l1: i64, l2: i64 },
    #[error("window does not fit in the box interior or exceeds 64 cells")]
    BadWindow,
}

/// A state space explored lazily through its move graph.
pub trait StateSpace {
    type State: Clone + Eq + Hash;
    fn energy(&self, s: &Self::State) -> i64;
    fn neighbours(&self, s: &Self::State) -> Vec<Self::State>;
    fn contains(&self, _s: &Self::State) -> bool {
        true
    }
}

/// Best-first search on the path maximum of the energy; returns the first
/// state satisfying `stop` together with the minimax level reaching it.
fn bottleneck_search<S: StateSpace>(
    space: &S,
    start: &S::State,
    cap: Option<i64>,
    mut stop: impl FnMut(&S::State) -> bool,
) -> Option<(S::State, i64)> {
    let mut best: HashMap<S::State, i64> = HashMap::new();
    let mut order: Vec<S::State> = Vec::new();
    let mut heap = BinaryHeap::new();
    let h0 = space.energy(start);
    best.insert(start.clone(), h0);
    order.push(start.clone());
    heap.push(Reverse((h0, 0usize)));
    while let Some(Reverse((level, id))) = heap.pop() {
        let state = order[id].clone();
        if best[&state] < level {
            continue;
        }
        if stop(&state) {
            return Some((state, level));
        }
        for nb in space.neighbours(&state) {
            let l = level.max(space.energy(&nb));
            if cap.is_some_and(|c| l > c) {
                continue;
            }
            match best.get(&nb) {
                Some(&old) if old <= l => {}
                _ => {
                    best.insert(nb.clone(), l);
                    order.push(nb);
                    heap.push(Reverse((l, order.len() - 1)));
                }
            }
        }
    }
    None
}

/// `Φ(a, b)`: minimum over paths inside the space of the maximal energy along
/// the path, in the space's energy units.
pub fn communication_height<S: StateSpace>(space: &S, a: &S::State, b: &S::State) -> Result<i64, OracleError> {
    if !space.contains(a) || !space.contains(b) {
        return Err(OracleError::OutsideSubspace);
    }
    bottleneck_search(space, a, None, |s| s == b).map(|(_, l)| l).ok_or(OracleError::Disconnected)
}

/// `V_x = Φ(x, I_x) - H(x)` with `I_x` the states of strictly lower energy;
/// `None` when no lower state is reachable (the stability level is infinite).
pub fn stability_level<S: StateSpace>(space: &S, x: &S::State) -> Option<i64> {
    let hx = space.energy(x);
    bottleneck_search(space, x, None, |s| space.energy(s) < hx).map(|(_, l)| l - hx)
}

/// Whether a state of energy below `H(x)` is reachable from `x` along a
/// path that never exceeds `level`.
pub fn descends_below<S: StateSpace>(space: &S, x: &S::State, level: i64) -> bool {
    let hx = space.energy(x);
    bottleneck_search(space, x, Some(level), |s| space.energy(s) < hx).is_some()
}

/// An explicit graph with energies on the nodes.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    pub energies: Vec<i64>,
    pub adj: Vec<Vec<usize>>,
}

impl WeightedGraph {
    pub fn new(energies: Vec<i64>, edges: &[(usize, usize)]) -> Self {
        let mut adj = vec![Vec::new(); energies.len()];
        for &(u, v) in edges {
            if u != v && !adj[u].contains(&v) {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
        Self { energies, adj }
    }
}

impl StateSpace for WeightedGraph {
    type State = usize;

    fn energy(&self, s: &usize) -> i64 {
        self.energies[*s]
    }

    fn neighbours(&self, s: &usize) -> Vec<usize> {
        self.adj[*s].clone()
    }
}

/// Minimax over every simple path by exhaustive depth-first enumeration.
pub fn minimax_by_paths(g: &WeightedGraph, a: usize, b: usize) -> Option<i64> {
    fn dfs(g: &WeightedGraph, u: usize, b: usize, level: i64, seen: &mut Vec<bool>, best: &mut Option<i64>) {
        if u == b {
            *best = Some(best.map_or(level, |x: i64| x.min(level)));
            return;
        }
        for &v in &g.adj[u] {
            if !seen[v] {
                seen[v] = true;
                dfs(g, v, b, level.max(g.energies[v]), seen, best);
                seen[v] = false;
            }
        }
    }
    let mut seen = vec![false; g.energies.len()];
    seen[a] = true;
    let mut best = None;
    dfs(g, a, b, g.energies[a], &mut seen, &mut best);
    best
}

/// Minimax by thresholds: the least level `t` at which `a` and `b` lie in
/// one connected component of the states with energy at most `t`.
pub fn minimax_by_threshold(energies: &[i64], adj: impl Fn(usize) -> Vec<usize>, a: usize, b: usize) -> Option<i64> {
    let n = energies.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| energies[i]);
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut active = vec![false; n];
    let mut i = 0;
    while i < n {
        let level = energies[order[i]];
        while i < n && energies[order[i]] == level {
            let u = order[i];
            active[u] = true;
            for v in adj(u) {
                if active[v] {
                    let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
                    parent[ru] = rv;
                }
            }
            i += 1;
        }
        if active[a] && active[b] && find(&mut parent, a) == find(&mut parent, b) {
            return Some(level);
        }
    }
    None
}

/// Every configuration of a tiny box, indexed by the occupancy bitmask of
/// its sites (site index `y * side + x`).
#[derive(Debug, Clone)]
pub struct FullSpace {
    pub l0: usize,
    pub scale: EnergyScale,
    energies: Vec<i64>,
    /// Oriented bonds as bit operations: `(kind, i, j)`.
    bonds: Vec<(u8, u32, u32)>,
}

impl FullSpace {
    pub const MAX_SITES: usize = 20;

    pub fn new(p: &ModelParams) -> Result<Self, OracleError> {
        let side = p.l0 + 2;
        let sites = side * side;
        if sites > Self::MAX_SITES {
            return Err(OracleError::TooLarge(sites));
        }
        let scale = EnergyScale::new(p);
        let energies = (0..1u32 << sites).map(|code| energy_units(&Self::decode_l0(p.l0, code), &scale)).collect();
        let idx = |(x, y): (usize, usize)| (y * side + x) as u32;
        let bonds = all_bonds(p.l0)
            .into_iter()
            .map(|b| match b {
                Bond::Exchange { from, to } => (0u8, idx(from), idx(to)),
                Bond::Annihilate { site, .. } => (1, idx(site), 0),
                Bond::Create { site, .. } => (2, idx(site), 0),
            })
            .collect();
        Ok(Self { l0: p.l0, scale, energies, bonds })
    }

    fn decode_l0(l0: usize, code: u32) -> Configuration {
        let side = l0 + 2;
        let mut c = Configuration::empty(l0);
        for i in 0..side * side {
            if code >> i & 1 == 1 {
                c.set_idx(i, true);
            }
        }
        c
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn decode(&self, code: u32) -> Configuration {
        Self::decode_l0(self.l0, code)
    }

    pub fn encode(&self, cfg: &Configuration) -> u32 {
        cfg.raw().iter().enumerate().filter(|(_, &b)| b).fold(0, |acc, (i, _)| acc | 1 << i)
    }

    /// Distinct configurations reachable in one move.
    pub fn neighbour_codes(&self, code: u32) -> Vec<u32> {
        let mut out: Vec<u32> = Vec::new();
        for &(kind, i, j) in &self.bonds {
            let (bi, bj) = (code >> i & 1, code >> j & 1);
            let next = match kind {
                0 if bi != bj => code ^ (1 << i) ^ (1 << j),
                1 if bi == 1 => code ^ (1 << i),
                2 if bi == 0 => code | (1 << i),
                _ => continue,
            };
            if !out.contains(&next) {
                out.push(next);
            }
        }
        out
    }

    pub fn energies(&self) -> &[i64] {
        &self.energies
    }

    /// Number of oriented bonds that turn `from` into `to`.
    pub fn bond_multiplicity(&self, from: u32, to: u32) -> usize {
        self.bonds
            .iter()
            .filter(|&&(kind, i, j)| {
                let (bi, bj) = (from >> i & 1, from >> j & 1);
                let next = match kind {
                    0 if bi != bj => from ^ (1 << i) ^ (1 << j),
                    1 if bi == 1 => from ^ (1 << i),
                    2 if bi == 0 => from | (1 << i),
                    _ => return false,
                };
                next == to
            })
            .count()
    }

    /// Check `mu(a) P(a, b) = mu(b) P(b, a)` on every communicating pair, in
    /// log space: `ln P(a,b) - ln P(b,a) = -beta (H(b) - H(a))`.
    pub fn detailed_balance(&self, beta: f64) -> DetailedBalanceReport {
        let n_bonds = self.bonds.len() as f64;
        let mut report = DetailedBalanceReport { pairs: 0, multiplicity_mismatches: 0, max_log_error: 0.0 };
        for a in 0..self.len() as u32 {
            for b in self.neighbour_codes(a) {
                if b <= a {
                    continue;
                }
                report.pairs += 1;
                let (m_ab, m_ba) = (self.bond_multiplicity(a, b), self.bond_multiplicity(b, a));
                if m_ab != m_ba {
                    report.multiplicity_mismatches += 1;
                }
                let dh = self.scale.to_f64(self.energies[b as usize] - self.energies[a as usize]);
                let ln_p = |m: usize, up: f64| (m as f64 / n_bonds).ln() - beta * up.max(0.0);
                let err = (ln_p(m_ab, dh) - ln_p(m_ba, -dh) + beta * dh).abs();
                report.max_log_error = report.max_log_error.max(err);
            }
        }
        report
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetailedBalanceReport {
    /// Unordered communicating pairs examined.
    pub pairs: usize,
    /// Pairs whose forward and backward bond counts differ.
    pub multiplicity_mismatches: usize,
    pub max_log_error: f64,
}

impl DetailedBalanceReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.pairs > 0 && self.multiplicity_mismatches == 0 && self.max_log_error <= tol
    }
}

impl StateSpace for FullSpace {
    type State = u32;

    fn energy(&self, s: &u32) -> i64 {
        self.energies[*s as usize]
    }

    fn neighbours(&self, s: &u32) -> Vec<u32> {
        self.neighbour_codes(*s)
    }
}

/// Configurations whose clusterized part lies in a window, with bounded
/// particle and free-particle counts.  With `nucleation`, one extra free
/// particle is allowed while the clusterized part is empty, so that the first
/// pair can meet.
#[derive(Debug, Clone)]
pub struct SubSpace {
    pub params: ModelParams,
    pub scale: EnergyScale,
    pub window: RectBox,
    pub max_particles: usize,
    pub max_free: i64,
    pub nucleation: bool,
    bonds: Vec<Bond>,
}

impl SubSpace {
    pub fn new(params: &ModelParams, window: RectBox, max_particles: usize, max_free: i64) -> Self {
        Self {
            params: params.clone(),
            scale: EnergyScale::new(params),
            window,
            max_particles,
            max_free,
            nucleation: false,
            bonds: all_bonds(params.l0),
        }
    }

    pub fn with_nucleation(mut self) -> Self {
        self.nucleation = true;
        self
    }
}

impl StateSpace for SubSpace {
    type State = Configuration;

    fn energy(&self, s: &Configuration) -> i64 {
        energy_units(s, &self.scale)
    }

    fn neighbours(&self, s: &Configuration) -> Vec<Configuration> {
        let mut out = Vec::new();
        for b in &self.bonds {
            let changes = match *b {
                Bond::Exchange { from, to } => s.get(from.0, from.1) != s.get(to.0, to.1),
                Bond::Annihilate { site, .. } => s.get(site.0, site.1),
                Bond::Create { site, .. } => !s.get(site.0, site.1),
            };
            if !changes {
                continue;
            }
            let mut next = s.clone();
            apply_in_place(&mut next, b).expect("bond from the enumeration");
            if !out.contains(&next) && self.contains(&next) {
                out.push(next);
            }
        }
        out
    }

    fn contains(&self, s: &Configuration) -> bool {
        if s.particles() > self.max_particles {
            return false;
        }
        let g = summarize(s);
        let w = &self.window;
        let free_cap = if self.nucleation && g.cl_size == 0 { self.max_free + 1 } else { self.max_free };
        g.n <= free_cap
            && g.rect.is_none_or(|r| r.x0 >= w.x0 && r.y0 >= w.y0 && r.x0 + r.w <= w.x0 + w.w && r.y0 + r.h <= w.y0 + w.h)
    }
}

/// A box stored as one bitmask per row, for the boundary scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct RowBoard {
    rows: [u32; 32],
}

#[derive(Debug, Clone, Copy)]
struct Frame {
    l0: usize,
    side: usize,
    imask: u32,
    scale: EnergyScale,
}

impl Frame {
    #[inline]
    fn get(&self, b: &RowBoard, x: usize, y: usize) -> bool {
        b.rows[y] >> x & 1 == 1
    }

    #[inline]
    fn interior_row(&self, b: &RowBoard, y: usize) -> u32 {
        if (1..=self.l0).contains(&y) {
            b.rows[y] & self.imask
        } else {
            0
        }
    }

    fn binding(&self, b: &RowBoard, x: usize, y: usize, skip: (usize, usize)) -> i64 {
        if !(1..=self.l0).contains(&x) || !(1..=self.l0).contains(&y) {
            return 0;
        }
        let mut e = 0;
        for (nx, ny, w) in [(x - 1, y, self.scale.u1), (x + 1, y, self.scale.u1), (x, y - 1, self.scale.u2), (x, y + 1, self.scale.u2)] {
            if (nx, ny) != skip && (1..=self.l0).contains(&nx) && (1..=self.l0).contains(&ny) && self.get(b, nx, ny) {
                e += w;
            }
        }
        e
    }

    /// `(p1, p2, |cl|, particles)` of the clusterized part.
    fn descriptors(&self, b: &RowBoard) -> (i64, i64, i64, i64) {
        let (mut cols, mut p2, mut k, mut total) = (0u32, 0i64, 0i64, 0i64);
        for y in 0..self.side {
            total += b.rows[y].count_ones() as i64;
            if !(1..=self.l0).contains(&y) {
                continue;
            }
            let r = self.interior_row(b, y);
            let cl = r & ((r << 1) | (r >> 1) | self.interior_row(b, y - 1) | self.interior_row(b, y + 1));
            if cl != 0 {
                cols |= cl;
                p2 += 1;
                k += cl.count_ones() as i64;
            }
        }
        (cols.count_ones() as i64, p2, k, total)
    }

    fn to_configuration(&self, b: &RowBoard) -> Configuration {
        let mut c = Configuration::empty(self.l0);
        for y in 0..self.side {
            for x in 0..self.side {
                if self.get(b, x, y) {
                    c.set(x, y, true);
                }
            }
        }
        c
    }

    /// Apply a bond; returns the energy change, or `None` if nothing changes.
    fn apply(&self, b: &mut RowBoard, bond: &Bond) -> Option<i64> {
        match *bond {
            Bond::Exchange { from, to } => {
                let (a, c) = (self.get(b, from.0, from.1), self.get(b, to.0, to.1));
                if a == c {
                    return None;
                }
                let (src, dst) = if a { (from, to) } else { (to, from) };
                let dh = self.binding(b, src.0, src.1, dst) - self.binding(b, dst.0, dst.1, src);
                b.rows[src.1] &= !(1 << src.0);
                b.rows[dst.1] |= 1 << dst.0;
                Some(dh)
            }
            Bond::Annihilate { site, .. } => {
                if !self.get(b, site.0, site.1) {
                    return None;
                }
                let dh = self.binding(b, site.0, site.1, (usize::MAX, usize::MAX)) - self.scale.delta;
                b.rows[site.1] &= !(1 << site.0);
                Some(dh)
            }
            Bond::Create { site, .. } => {
                if self.get(b, site.0, site.1) {
                    return None;
                }
                let dh = self.scale.delta - self.binding(b, site.0, site.1, (usize::MAX, usize::MAX));
                b.rows[site.1] |= 1 << site.0;
                Some(dh)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ScanLimits {
    pub max_particles: usize,
    /// At most this many free particles (0 or 1).
    pub max_free: usize,
}

/// One minimizing exit move `(η̄, η)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimizerPair {
    pub before: String,
    pub after: String,
    #[serde(serialize_with = "crate::model::ser_rational")]
    pub h_before: Rational64,
    #[serde(serialize_with = "crate::model::ser_rational")]
    pub h_after: Rational64,
    pub before_in_p2: bool,
    pub energy_order: bool,
    /// Number of free-particle placements this pair stands for.
    pub multiplicity: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryScanReport {
    pub window: RectBox,
    pub limits: ScanLimits,
    /// `min max{H(η̄), H(η)}` over exiting moves; `None` if no exiting move
    /// stays at or below `Γ`.
    #[serde(serialize_with = "ser_opt_rational")]
    pub h_min: Option<Rational64>,
    #[serde(serialize_with = "crate::model::ser_rational")]
    pub gamma: Rational64,
    /// Minimizing pairs, counted with free-particle multiplicity.
    pub minimizers: usize,
    pub minimizers_not_in_p2: usize,
    pub minimizers_energy_order_violated: usize,
    /// Up to 64 minimizing pairs, failures first.
    pub examples: Vec<MinimizerPair>,
    /// Smallest exit level from a member of the first clause of `B`.
    #[serde(serialize_with = "ser_opt_rational")]
    pub clause1_min: Option<Rational64>,
    pub clusters_scanned: usize,
    pub states_scanned: usize,
    pub exit_pairs: usize,
    /// `P1` members met in the scan, and those from which no state of lower
    /// energy is reachable without exceeding `Γ`.
    pub p1_members: usize,
    pub p1_without_continuation: usize,
    /// Up to 8 `P1` members without such a continuation.
    pub p1_stuck_examples: Vec<String>,
    pub elapsed_ms: u128,
}

fn ser_opt_rational<S: serde::Serializer>(r: &Option<Rational64>, s: S) -> Result<S::Ok, S::Error> {
    match r {
        Some(r) => crate::model::ser_rational(r, s),
        None => s.serialize_none(),
    }
}

impl BoundaryScanReport {
    /// Exit level equals `Γ`, and every minimizer starts in `P2` and goes
    /// downhill.
    pub fn passed(&self) -> bool {
        self.h_min == Some(self.gamma)
            && self.minimizers > 0
            && self.minimizers_not_in_p2 == 0
            && self.minimizers_energy_order_violated == 0
    }
}

struct ScanState {
    h_min: Option<i64>,
    minimizers: usize,
    not_in_p2: usize,
    order_violated: usize,
    examples: Vec<MinimizerPair>,
    clause1_min: Option<i64>,
    exit_pairs: usize,
}

/// Stream every `η̄ ∈ B` whose clusterized part lies in `window` (at most
/// `limits.max_particles` particles, at most `limits.max_free` free ones),
/// enumerate all its moves to `η ∉ B`, and collect the minimal exit level.
///
/// Configurations with `H(η̄) > Γ` are skipped, since they cannot reach an
/// exit level at or below `Γ`.  A free particle at lattice distance three
/// or more from the clusterized part interacts with no move that changes
/// the clusterized part, so all such placements are represented by one,
/// carried with its multiplicity.
pub fn scan_boundary_of_b(
    p: &ModelParams,
    dc: &DerivedConstants,
    window: RectBox,
    limits: ScanLimits,
) -> Result<BoundaryScanReport, OracleError> {
    let started = Instant::now();
    if !dc.is_strong() {
        return Err(OracleError::NotStrong);
    }
    let (l1, l2) = (2 * dc.l2star - 1, dc.l2star);
    if (window.w as i64) < l1 || (window.h as i64) < l2 {
        return Err(OracleError::WindowTooSmall { w: window.w, h: window.h, l1, l2 });
    }
    let l0 = p.l0;
    if window.w * window.h > 64
        || window.x0 < 1
        || window.y0 < 1
        || window.x0 + window.w > l0 + 1
        || window.y0 + window.h > l0 + 1
        || l0 + 2 > 32
    {
        return Err(OracleError::BadWindow);
    }
    let scale = EnergyScale::new(p);
    let frame = Frame { l0, side: l0 + 2, imask: ((1u32 << l0) - 1) << 1, scale };
    let gamma = scale.units(dc.gamma).expect("Γ is a combination of the energy parameters");
    let bonds = all_bonds(l0);
    let (w, h) = (window.w, window.h);
    let cells = w * h;
    let last_col: u64 = (0..h).fold(0, |m, r| m | 1 << (r * w + w - 1));
    let first_col: u64 = (0..h).fold(0, |m, r| m | 1 << (r * w));
    let all: u64 = if cells == 64 { u64::MAX } else { (1u64 << cells) - 1 };

    let mut st = ScanState {
        h_min: None,
        minimizers: 0,
        not_in_p2: 0,
        order_violated: 0,
        examples: Vec::new(),
        clause1_min: None,
        exit_pairs: 0,
    };
    let (mut clusters_scanned, mut states_scanned, mut p1_members, mut p1_without) = (0usize, 0usize, 0usize, 0usize);
    let mut p1_stuck = Vec::new();
    let interior = RectBox { x0: 1, y0: 1, w: l0, h: l0 };
    let whole = SubSpace::new(p, interior, usize::MAX, i64::MAX);
    let side = l0 + 2;

    for m in 0..=all {
        let k = m.count_ones() as usize;
        if k > limits.max_particles || k == 1 {
            continue;
        }
        let nb = ((m << 1) & !first_col) | ((m >> 1) & !last_col) | (m << w) | (m >> w);
        if m & !nb & all != 0 {
            continue;
        }
        let hb = (m & (m >> 1) & !last_col).count_ones() as i64;
        let vb = (m & (m >> w)).count_ones() as i64;
        let h_cl = -scale.u1 * hb - scale.u2 * vb + scale.delta * k as i64;
        if h_cl > gamma {
            continue;
        }
        let mut board = RowBoard { rows: [0; 32] };
        let (mut cols, mut rows) = (0u64, 0u64);
        for bit in 0..cells {
            if m >> bit & 1 == 1 {
                let (x, y) = (window.x0 + bit % w, window.y0 + bit / w);
                board.rows[y] |= 1 << x;
                cols |= 1 << (bit % w);
                rows |= 1 << (bit / w);
            }
        }
        let (p1, p2) = (cols.count_ones() as i64, rows.count_ones() as i64);
        let v = p1 * p2 - k as i64;
        let Some(clause) = b_clause_of(p1, p2, v, dc) else { continue };
        clusters_scanned += 1;

        // placements of the optional free particle
        let mut variants: Vec<(RowBoard, i64, usize)> = Vec::new();
        if k <= limits.max_particles {
            variants.push((board, h_cl, 1));
        }
        if limits.max_free >= 1 && k < limits.max_particles && h_cl + scale.delta <= gamma {
            let dist = distance_map(&frame, &board);
            let mut far: Option<(usize, usize)> = None;
            let mut far_count = 0usize;
            for y in 0..side {
                for x in 0..side {
                    match dist[y * side + x] {
                        0 | 1 => {}
                        2 => {
                            let mut b = board;
                            b.rows[y] |= 1 << x;
                            variants.push((b, h_cl + scale.delta, 1));
                        }
                        _ => {
                            far_count += 1;
                            far.get_or_insert((x, y));
                        }
                    }
                }
            }
            if let Some((x, y)) = far {
                let mut b = board;
                b.rows[y] |= 1 << x;
                variants.push((b, h_cl + scale.delta, far_count));
            }
        }

        for (bar, h_bar, mult) in variants {
            states_scanned += mult;
            let is_p1 = h_bar == gamma && mult == 1 && bar == board && in_p1(&frame.to_configuration(&bar), dc).member;
            if is_p1 {
                p1_members += 1;
            }
            let mut continued = false;
            for bond in &bonds {
                let mut next = bar;
                let Some(dh) = frame.apply(&mut next, bond) else { continue };
                let h_next = h_bar + dh;
                let level = h_bar.max(h_next);
                if level > gamma {
                    continue;
                }
                let (q1, q2, qk, _) = frame.descriptors(&next);
                if b_clause_of(q1, q2, q1 * q2 - qk, dc).is_some() {
                    continued |= h_next < gamma;
                    continue;
                }
                st.exit_pairs += mult;
                if clause == 1 {
                    st.clause1_min = Some(st.clause1_min.map_or(level, |c| c.min(level)));
                }
                match st.h_min {
                    Some(cur) if level > cur => continue,
                    Some(cur) if level == cur => {}
                    _ => {
                        st.h_min = Some(level);
                        st.minimizers = 0;
                        st.not_in_p2 = 0;
                        st.order_violated = 0;
                        st.examples.clear();
                    }
                }
                let cfg_bar = frame.to_configuration(&bar);
                let in2 = in_p2(&cfg_bar, dc).member;
                let order = h_bar >= h_next;
                st.minimizers += mult;
                if !in2 {
                    st.not_in_p2 += mult;
                }
                if !order {
                    st.order_violated += mult;
                }
                let failing = !in2 || !order;
                if st.examples.len() < 64 || failing {
                    let pair = MinimizerPair {
                        before: cfg_bar.to_grid(),
                        after: frame.to_configuration(&next).to_grid(),
                        h_before: scale.to_rational(h_bar),
                        h_after: scale.to_rational(h_next),
                        before_in_p2: in2,
                        energy_order: order,
                        multiplicity: mult,
                    };
                    if failing {
                        st.examples.insert(0, pair);
                        st.examples.truncate(64);
                    } else {
                        st.examples.push(pair);
                    }
                }
            }
            if is_p1 && !continued {
                // no single downhill step: look for a descent along a plateau at Γ
                continued = descends_below(&whole, &frame.to_configuration(&bar), gamma);
            }
            if is_p1 && !continued {
                p1_without += 1;
                if p1_stuck.len() < 8 {
                    p1_stuck.push(frame.to_configuration(&bar).to_grid());
                }
            }
        }
    }

    Ok(BoundaryScanReport {
        window,
        limits,
        h_min: st.h_min.map(|u| scale.to_rational(u)),
        gamma: dc.gamma,
        minimizers: st.minimizers,
        minimizers_not_in_p2: st.not_in_p2,
        minimizers_energy_order_violated: st.order_violated,
        examples: st.examples,
        clause1_min: st.clause1_min.map(|u| scale.to_rational(u)),
        clusters_scanned,
        states_scanned,
        exit_pairs: st.exit_pairs,
        p1_members,
        p1_without_continuation: p1_without,
        p1_stuck_examples: p1_stuck,
        elapsed_ms: started.elapsed().as_millis(),
    })
}

/// Lattice distance from the occupied sites, capped at 3.
fn distance_map(frame: &Frame, b: &RowBoard) -> Vec<u8> {
    let side = frame.side;
    let mut d = vec![3u8; side * side];
    let mut frontier = Vec::new();
    for y in 0..side {
        for x in 0..side {
            if frame.get(b, x, y) {
                d[y * side + x] = 0;
                frontier.push((x, y));
            }
        }
    }
    for level in 1..=2u8 {
        let mut next = Vec::new();
        for (x, y) in frontier {
            for (nx, ny) in [(x.wrapping_sub(1), y), (x + 1, y), (x, y.wrapping_sub(1)), (x, y + 1)] {
                if nx < side && ny < side && d[ny * side + nx] > level {
                    d[ny * side + nx] = level;
                    next.push((nx, ny));
                }
            }
        }
        frontier = next;
    }
    d
}

/// The gate structure on the scanned family: the exit minimizers are the
/// `P2` configurations prescribed for threshold `Γ`, and every `P1` member
/// continues to lower energy without exceeding `Γ`.
#[derive(Debug, Clone, Serialize)]
pub struct GateVerdict {
    pub passed: bool,
    pub scan: BoundaryScanReport,
    /// Moves from the `P1` witness that exit `B` stay above `Γ`.
    pub witness_p1_ok: bool,
    /// Attaching the free particle of the `P2` witness to the long side exits
    /// `B` at level exactly `Γ`.
    pub witness_p2_ok: bool,
}

/// Gate witnesses for boxes with `l0 >= 8`.  `W1 ∈ P1`: an
/// `l1(s*) x l2(s*)` box whose second-highest row misses its last cell and
/// whose top row holds two separated particles.  `W2 ∈ P2`: an
/// `l1(s*-1) x l2(s*-1)` box whose top row misses its last `l2(s*-1) - 1`
/// cells, plus a free particle two sites above the box's top-left corner.
pub fn gate_witnesses(dc: &DerivedConstants, l0: usize) -> (Configuration, Configuration) {
    let (r1, _) = classify_domino(dc.sstar).expect("s* >= 2");
    let (r2, _) = classify_domino(dc.sstar - 1).expect("s* >= 3");
    let (x0, y0) = (3usize, 3usize);
    let (a1, b1) = (r1.l1 as usize, r1.l2 as usize);
    let mut w1 = Configuration::rectangle(l0, x0, y0, a1, b1 - 1);
    w1.set(x0 + a1 - 1, y0 + b1 - 2, false);
    w1.set(x0 + 1, y0 + b1 - 1, true);
    w1.set(x0 + 3, y0 + b1 - 1, true);
    let (a2, b2) = (r2.l1 as usize, r2.l2 as usize);
    let mut w2 = Configuration::rectangle(l0, x0, y0, a2, b2);
    for x in (x0 + a2 - (b2 - 1))..x0 + a2 {
        w2.set(x, y0 + b2 - 1, false);
    }
    w2.set(x0, y0 + b2 + 1, true);
    (w1, w2)
}

/// Run the boundary scan and the witness checks.
pub fn verify_gate_structure(
    p: &ModelParams,
    dc: &DerivedConstants,
    window: RectBox,
    limits: ScanLimits,
) -> Result<GateVerdict, OracleError> {
    let scan = scan_boundary_of_b(p, dc, window, limits)?;
    let scale = EnergyScale::new(p);
    let gamma = scale.units(dc.gamma).expect("Γ in scaled units");
    let (w1, w2) = gate_witnesses(dc, p.l0);
    let in_b_units = |c: &Configuration| {
        let g = summarize(c);
        b_clause_of(g.p1, g.p2, g.v, dc).is_some()
    };
    let witness_p1_ok = in_p1(&w1, dc).member
        && crate::moves::enumerate_moves(&w1, p).iter().all(|mv| {
            let next = crate::moves::apply(&w1, &mv.bond).expect("enumerated move");
            let level = energy_units(&w1, &scale).max(energy_units(&next, &scale));
            in_b_units(&next) || level > gamma
        });
    let witness_p2_ok = in_p2(&w2, dc).member
        && crate::moves::enumerate_moves(&w2, p).iter().any(|mv| {
            let next = crate::moves::apply(&w2, &mv.bond).expect("enumerated move");
            let level = energy_units(&w2, &scale).max(energy_units(&next, &scale));
            !in_b_units(&next) && level == gamma && summarize(&next).n == 0
        });
    let passed = scan.passed() && scan.p1_without_continuation == 0 && witness_p1_ok && witness_p2_ok;
    Ok(GateVerdict { passed, scan, witness_p1_ok, witness_p2_ok })
}
