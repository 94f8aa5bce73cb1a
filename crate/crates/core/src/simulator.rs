//! Metropolis Kawasaki dynamics with an open boundary, and the Monte Carlo
//! experiments built on it: first-hitting times, gate crossings, fates of
//! rectangles and recurrence to the standard states.
//!
//! Time is counted in attempted moves.  The rejection-free kernel draws the
//! number of attempted moves spent in each state from the exact geometric law,
//! so both kernels define the same process.

use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;
use serde::Serialize;

use crate::geometry::summarize;
use crate::landscape::{in_p_summary, RectSpec};
use crate::model::{
    derive_constants, energy_units, rational_to_f64, Configuration, DerivedConstants, EnergyScale, ModelError,
    ModelParams,
};
use crate::moves::{all_bonds, apply_in_place, bond_count, delta_h, Bond};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("step cap must be positive")]
    ZeroCap,
    #[error("at least one target is required")]
    NoTargets,
    #[error("at least one run is required")]
    NoRuns,
    #[error("start configuration has box side {got}, expected {expected}")]
    WrongBox { got: usize, expected: usize },
    #[error("rectangle {0}x{1} does not fit the box")]
    RectDoesNotFit(i64, i64),
    #[error("beta grid must be non-empty and strictly increasing")]
    BetaGrid,
    #[error("only {completed} of {runs} runs reached the target at beta = {beta}")]
    InsufficientRuns { beta: f64, completed: usize, runs: usize },
    #[error("unknown {what}: {text}")]
    Parse { what: &'static str, text: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    PlainMetropolis,
    RejectionFree,
}

impl FromStr for Kernel {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plain" | "plain-metropolis" | "metropolis" => Ok(Kernel::PlainMetropolis),
            "rejection-free" | "rf" | "nfold" => Ok(Kernel::RejectionFree),
            _ => Err(SimError::Parse { what: "kernel", text: s.to_string() }),
        }
    }
}

/// Absorbing sets of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Target {
    /// The empty box.
    Zero,
    /// Full interior, empty ring.
    One,
    /// The gate `P = P1 ∪ P2`.
    Gate,
    /// A single `l1 x l2` rectangle anywhere in the interior, nothing else.
    Rect { l1: i64, l2: i64 },
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Zero => write!(f, "zero"),
            Target::One => write!(f, "one"),
            Target::Gate => write!(f, "P"),
            Target::Rect { l1, l2 } => write!(f, "R({l1},{l2})"),
        }
    }
}

impl Serialize for Target {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Parse `l1xl2`, `l1,l2` or `R(l1,l2)`.
pub fn parse_rect(text: &str) -> Option<(i64, i64)> {
    let t = text.trim();
    let t = t.strip_prefix("R(").and_then(|r| r.strip_suffix(')')).unwrap_or(t);
    let (a, b) = t.split_once(['x', ',', 'X'])?;
    let (a, b) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
    (a > 0 && b > 0).then_some((a, b))
}

impl FromStr for Target {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "zero" | "0" | "empty" => Ok(Target::Zero),
            "one" | "1" | "full" => Ok(Target::One),
            "P" | "p" | "gate" => Ok(Target::Gate),
            other => parse_rect(other)
                .map(|(l1, l2)| Target::Rect { l1, l2 })
                .ok_or_else(|| SimError::Parse { what: "target", text: s.to_string() }),
        }
    }
}

/// Where gate membership is tested along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateCheck {
    /// Only states at energy `Γ` with `s ∈ {s*-1, s*}`; members of `P` always
    /// satisfy both.
    Window,
    /// Every state at energy `Γ`, for audits.
    Full,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub params: ModelParams,
    pub dc: DerivedConstants,
    pub seed: u64,
    pub runs: usize,
    pub cap: u64,
    pub targets: Vec<Target>,
    pub kernel: Kernel,
    pub gate_check: GateCheck,
}

impl SimConfig {
    /// Rejection-free kernel, target `{1}`, windowed gate detection.
    pub fn new(params: ModelParams, seed: u64, runs: usize, cap: u64) -> Result<Self, SimError> {
        let dc = derive_constants(&params, false)?;
        let cfg = Self {
            params,
            dc,
            seed,
            runs,
            cap,
            targets: vec![Target::One],
            kernel: Kernel::RejectionFree,
            gate_check: GateCheck::Window,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_targets(mut self, targets: Vec<Target>) -> Self {
        self.targets = targets;
        self
    }

    pub fn with_kernel(mut self, kernel: Kernel) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.params = self.params.with_beta(beta);
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.cap == 0 {
            return Err(SimError::ZeroCap);
        }
        if self.targets.is_empty() {
            return Err(SimError::NoTargets);
        }
        if self.runs == 0 {
            return Err(SimError::NoRuns);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySample {
    pub seed: u64,
    pub run: u64,
    pub start: String,
    /// Target hit first; `None` when the cap was reached.
    pub outcome: Option<Target>,
    /// Attempted moves until the hit (or the cap).
    pub steps: u64,
    /// Whether `P` was visited before the terminal target.
    pub gate_hit: bool,
    #[serde(serialize_with = "crate::model::ser_rational")]
    pub max_energy: Rational64,
}

impl TrajectorySample {
    pub fn outcome_label(&self) -> String {
        self.outcome.map_or_else(|| "cap".to_string(), |t| t.to_string())
    }
}

/// Independent stream for run `run` of master seed `seed`.
pub fn run_rng(seed: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    rng
}

#[derive(Debug, Clone, Copy)]
enum FastBond {
    Exchange(u32, u32),
    Annihilate(u32),
    Create(u32),
}

const NO_CLASS: u16 = u16::MAX;

/// Precomputed, read-only tables of the dynamics on one box at one `β`.
#[derive(Debug, Clone)]
pub struct Dynamics {
    l0: usize,
    scale: EnergyScale,
    bonds: Vec<FastBond>,
    /// Interior neighbours of interior sites with their bond weights.
    nbrs: Vec<Vec<(u32, i64)>>,
    /// Bonds whose energy change depends on a site touched by a given bond.
    influence: Vec<Vec<u32>>,
    ring: Vec<bool>,
    /// Class 0 collects downhill moves; the others one uphill `ΔH` each.
    class_of_dh: Vec<u16>,
    class_accept: Vec<f64>,
    gamma_units: Option<i64>,
    dc: DerivedConstants,
}

impl Dynamics {
    pub fn new(p: &ModelParams, dc: &DerivedConstants) -> Self {
        let l0 = p.l0;
        let side = l0 + 2;
        let scale = EnergyScale::new(p);
        let cfg = Configuration::empty(l0);
        let idx = |(x, y): (usize, usize)| (y * side + x) as u32;
        let bonds: Vec<FastBond> = all_bonds(l0)
            .into_iter()
            .map(|b| match b {
                Bond::Exchange { from, to } => FastBond::Exchange(idx(from), idx(to)),
                Bond::Annihilate { site, .. } => FastBond::Annihilate(idx(site)),
                Bond::Create { site, .. } => FastBond::Create(idx(site)),
            })
            .collect();
        let mut nbrs = vec![Vec::new(); side * side];
        let mut ring = vec![false; side * side];
        for y in 0..side {
            for x in 0..side {
                let i = y * side + x;
                ring[i] = !cfg.is_interior(x, y);
                if ring[i] {
                    continue;
                }
                for (dx, dy, w) in [(1i64, 0i64, scale.u1), (-1, 0, scale.u1), (0, 1, scale.u2), (0, -1, scale.u2)] {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if cfg.is_interior(nx as usize, ny as usize) {
                        nbrs[i].push(((ny as usize * side + nx as usize) as u32, w));
                    }
                }
            }
        }
        let mut at_site = vec![Vec::new(); side * side];
        for (k, b) in bonds.iter().enumerate() {
            match *b {
                FastBond::Exchange(a, c) => {
                    at_site[a as usize].push(k as u32);
                    at_site[c as usize].push(k as u32);
                }
                FastBond::Annihilate(a) | FastBond::Create(a) => at_site[a as usize].push(k as u32),
            }
        }
        let mut influence = vec![Vec::new(); side * side];
        for y in 0..side {
            for x in 0..side {
                let i = y * side + x;
                let mut list: Vec<u32> = at_site[i].clone();
                for (dx, dy) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if cfg.in_box(nx, ny) {
                        list.extend(&at_site[ny as usize * side + nx as usize]);
                    }
                }
                list.sort_unstable();
                list.dedup();
                influence[i] = list;
            }
        }
        let influence = bonds
            .iter()
            .map(|b| match *b {
                FastBond::Exchange(a, c) => {
                    let mut l: Vec<u32> = influence[a as usize].iter().chain(&influence[c as usize]).copied().collect();
                    l.sort_unstable();
                    l.dedup();
                    l
                }
                FastBond::Annihilate(a) | FastBond::Create(a) => influence[a as usize].clone(),
            })
            .collect();
        // every attainable uphill energy change gets its own class
        let mut bindings = Vec::new();
        for a in 0..=2 {
            for b in 0..=2 {
                bindings.push(a * scale.u1 + b * scale.u2);
            }
        }
        let mut ups: Vec<i64> = Vec::new();
        for &b1 in &bindings {
            ups.push(scale.delta - b1);
            ups.push(b1 - scale.delta);
            for &b2 in &bindings {
                ups.push(b1 - b2);
            }
        }
        ups.retain(|&d| d > 0);
        ups.sort_unstable();
        ups.dedup();
        let max_up = *ups.last().unwrap_or(&0);
        let mut class_of_dh = vec![NO_CLASS; max_up as usize + 1];
        let mut class_accept = vec![1.0];
        class_of_dh[0] = 0;
        for &d in &ups {
            class_of_dh[d as usize] = class_accept.len() as u16;
            class_accept.push((-p.beta * scale.to_f64(d)).exp());
        }
        Self {
            l0,
            scale,
            bonds,
            nbrs,
            influence,
            ring,
            class_of_dh,
            class_accept,
            gamma_units: scale.units(dc.gamma),
            dc: dc.clone(),
        }
    }

    pub fn l0(&self) -> usize {
        self.l0
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    pub fn scale(&self) -> &EnergyScale {
        &self.scale
    }

    #[inline]
    fn binding(&self, occ: &Configuration, site: u32, skip: u32) -> i64 {
        self.nbrs[site as usize].iter().filter(|&&(j, _)| j != skip && occ.get_idx(j as usize)).map(|&(_, w)| w).sum()
    }

    /// Energy change in scaled units, `None` when the move changes nothing.
    #[inline]
    fn dh(&self, occ: &Configuration, k: usize) -> Option<i64> {
        match self.bonds[k] {
            FastBond::Exchange(a, c) => {
                let (oa, oc) = (occ.get_idx(a as usize), occ.get_idx(c as usize));
                if oa == oc {
                    return None;
                }
                let (src, dst) = if oa { (a, c) } else { (c, a) };
                Some(self.binding(occ, src, dst) - self.binding(occ, dst, src))
            }
            FastBond::Annihilate(a) => occ.get_idx(a as usize).then(|| self.binding(occ, a, u32::MAX) - self.scale.delta),
            FastBond::Create(a) => (!occ.get_idx(a as usize)).then(|| self.scale.delta - self.binding(occ, a, u32::MAX)),
        }
    }

    #[inline]
    fn class(&self, dh: i64) -> u16 {
        if dh <= 0 {
            0
        } else {
            self.class_of_dh[dh as usize]
        }
    }
}

/// One trajectory's mutable state.
#[derive(Debug, Clone)]
pub struct Chain<'a> {
    dy: &'a Dynamics,
    cfg: Configuration,
    energy: i64,
    particles: usize,
    ring_particles: usize,
    time: u64,
    tracked: bool,
    members: Vec<Vec<u32>>,
    pos: Vec<u32>,
    bond_class: Vec<u16>,
}

impl<'a> Chain<'a> {
    /// With `tracked`, the per-class move lists needed by the rejection-free
    /// kernel are maintained.
    pub fn new(dy: &'a Dynamics, start: &Configuration, tracked: bool) -> Result<Self, SimError> {
        if start.l0() != dy.l0 {
            return Err(SimError::WrongBox { got: start.l0(), expected: dy.l0 });
        }
        let ring_particles = start.occupied_sites().filter(|&(x, y)| start.is_ring(x, y)).count();
        let n = dy.bonds.len();
        let mut c = Self {
            dy,
            cfg: start.clone(),
            energy: energy_units(start, &dy.scale),
            particles: start.particles(),
            ring_particles,
            time: 0,
            tracked,
            members: vec![Vec::new(); dy.class_accept.len()],
            pos: vec![u32::MAX; n],
            bond_class: vec![NO_CLASS; n],
        };
        if tracked {
            for k in 0..n {
                c.refresh(k);
            }
        }
        Ok(c)
    }

    pub fn configuration(&self) -> &Configuration {
        &self.cfg
    }

    pub fn energy(&self) -> Rational64 {
        self.dy.scale.to_rational(self.energy)
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    fn refresh(&mut self, k: usize) {
        let new = self.dy.dh(&self.cfg, k).map_or(NO_CLASS, |d| self.dy.class(d));
        let old = self.bond_class[k];
        if new == old {
            return;
        }
        if old != NO_CLASS {
            let list = &mut self.members[old as usize];
            let at = self.pos[k] as usize;
            let last = *list.last().expect("member list holds k");
            list.swap_remove(at);
            if last as usize != k {
                self.pos[last as usize] = at as u32;
            }
        }
        if new != NO_CLASS {
            let list = &mut self.members[new as usize];
            self.pos[k] = list.len() as u32;
            list.push(k as u32);
        }
        self.bond_class[k] = new;
    }

    fn flip(&mut self, site: u32, value: bool) {
        self.cfg.set_idx(site as usize, value);
        let d = if value { 1 } else { -1 };
        self.particles = (self.particles as i64 + d) as usize;
        if self.dy.ring[site as usize] {
            self.ring_particles = (self.ring_particles as i64 + d) as usize;
        }
    }

    fn perform(&mut self, k: usize, dh: i64) {
        match self.dy.bonds[k] {
            FastBond::Exchange(a, c) => {
                let oa = self.cfg.get_idx(a as usize);
                self.flip(a, !oa);
                self.flip(c, oa);
            }
            FastBond::Annihilate(a) => self.flip(a, false),
            FastBond::Create(a) => self.flip(a, true),
        }
        self.energy += dh;
        if self.tracked {
            let dy = self.dy;
            for &b in &dy.influence[k] {
                self.refresh(b as usize);
            }
        }
    }

    /// One attempted move of the plain Metropolis kernel; returns whether the
    /// configuration changed.
    pub fn step_plain<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        self.time += 1;
        let k = rng.random_range(0..self.dy.bonds.len());
        let Some(dh) = self.dy.dh(&self.cfg, k) else {
            return false;
        };
        let a = self.dy.class_accept[self.dy.class(dh) as usize];
        if a < 1.0 && rng.random::<f64>() >= a {
            return false;
        }
        self.perform(k, dh);
        true
    }

    /// Total acceptance mass `Σ_b e^{-β[ΔH_b]+}` over configuration-changing
    /// bonds; the per-step exit probability is this over the bond count.
    pub fn exit_mass(&self) -> f64 {
        self.members.iter().zip(&self.dy.class_accept).map(|(m, &a)| m.len() as f64 * a).sum()
    }

    /// Jump to the next distinct configuration, advancing time by the sampled
    /// number of attempted moves; returns `false` if the cap is reached first
    /// (time is then set to the cap).  Requires a tracked chain.
    pub fn step_rejection_free<R: Rng + ?Sized>(&mut self, rng: &mut R, cap: u64) -> bool {
        debug_assert!(self.tracked);
        let mass = self.exit_mass();
        let p = mass / self.dy.bonds.len() as f64;
        let dwell = if p >= 1.0 {
            1
        } else {
            Geometric::new(p).expect("exit probability in (0, 1)").sample(rng).saturating_add(1)
        };
        if self.time.saturating_add(dwell) > cap {
            self.time = cap;
            return false;
        }
        self.time += dwell;
        let mut r = rng.random::<f64>() * mass;
        let mut pick = None;
        for (c, m) in self.members.iter().enumerate() {
            if m.is_empty() {
                continue;
            }
            let w = m.len() as f64 * self.dy.class_accept[c];
            pick = Some((c, m));
            if r < w {
                break;
            }
            r -= w;
        }
        let (_, list) = pick.expect("some move is always possible");
        let k = list[rng.random_range(0..list.len())] as usize;
        let dh = self.dy.dh(&self.cfg, k).expect("classified bonds change the configuration");
        self.perform(k, dh);
        true
    }

    fn in_gate(&self, mode: GateCheck) -> bool {
        if Some(self.energy) != self.dy.gamma_units {
            return false;
        }
        let g = summarize(&self.cfg);
        let ss = self.dy.dc.sstar;
        if mode == GateCheck::Window && g.s != ss && g.s != ss - 1 {
            return false;
        }
        in_p_summary(&g, &self.dy.dc).member
    }

    fn hits(&self, target: Target, gate_now: bool) -> bool {
        let l0 = self.dy.l0;
        match target {
            Target::Zero => self.particles == 0,
            Target::One => self.ring_particles == 0 && self.particles == l0 * l0,
            Target::Gate => gate_now,
            Target::Rect { l1, l2 } => {
                if self.ring_particles != 0 || self.particles as i64 != l1 * l2 {
                    return false;
                }
                let g = summarize(&self.cfg);
                g.n == 0 && g.clusters == 1 && g.rect.is_some_and(|r| r.w as i64 == l1 && r.h as i64 == l2) && g.v == 0
            }
        }
    }
}

/// A single attempted move on a bare configuration: a uniformly chosen
/// oriented bond, accepted with probability `e^{-β[ΔH]+}`.  Returns whether
/// the configuration changed.
pub fn step<R: Rng + ?Sized>(cfg: &mut Configuration, rng: &mut R, p: &ModelParams) -> bool {
    let k = rng.random_range(0..bond_count(cfg.l0()));
    let b = all_bonds(cfg.l0())[k];
    let dh = rational_to_f64(delta_h(cfg, &b, p));
    if dh > 0.0 && rng.random::<f64>() >= (-p.beta * dh).exp() {
        return false;
    }
    apply_in_place(cfg, &b).expect("bond from the enumeration")
}

/// Run one trajectory from `start` until a target is hit or the cap is
/// reached.
pub fn run_until_hit<R: Rng + ?Sized>(
    dy: &Dynamics,
    start: &Configuration,
    targets: &[Target],
    cap: u64,
    kernel: Kernel,
    gate_check: GateCheck,
    rng: &mut R,
) -> Result<(Option<Target>, u64, bool, Rational64), SimError> {
    if targets.is_empty() {
        return Err(SimError::NoTargets);
    }
    if cap == 0 {
        return Err(SimError::ZeroCap);
    }
    let mut chain = Chain::new(dy, start, kernel == Kernel::RejectionFree)?;
    let mut max_e = chain.energy;
    let mut gate_hit = false;
    loop {
        let gate_now = chain.in_gate(gate_check);
        gate_hit |= gate_now;
        if let Some(t) = targets.iter().copied().find(|&t| chain.hits(t, gate_now)) {
            return Ok((Some(t), chain.time, gate_hit, dy.scale.to_rational(max_e)));
        }
        let moved = loop {
            if chain.time >= cap {
                break false;
            }
            let moved = match kernel {
                Kernel::PlainMetropolis => chain.step_plain(rng),
                Kernel::RejectionFree => chain.step_rejection_free(rng, cap),
            };
            if moved {
                break true;
            }
        };
        if !moved {
            return Ok((None, chain.time, false, dy.scale.to_rational(max_e)));
        }
        max_e = max_e.max(chain.energy);
    }
}

/// Run `cfg.runs` independent trajectories, in parallel, with results ordered
/// by run index.  `start` builds the initial configuration of run `i` from
/// that run's random stream.
pub fn run_many<F>(cfg: &SimConfig, label: &str, start: F) -> Result<Vec<TrajectorySample>, SimError>
where
    F: Fn(u64, &mut ChaCha8Rng) -> Configuration + Sync,
{
    cfg.validate()?;
    let dy = Dynamics::new(&cfg.params, &cfg.dc);
    (0..cfg.runs as u64)
        .into_par_iter()
        .map(|run| {
            let mut rng = run_rng(cfg.seed, run);
            let init = start(run, &mut rng);
            let (outcome, steps, gate_hit, max_energy) =
                run_until_hit(&dy, &init, &cfg.targets, cfg.cap, cfg.kernel, cfg.gate_check, &mut rng)?;
            Ok(TrajectorySample { seed: cfg.seed, run, start: label.to_string(), outcome, steps, gate_hit, max_energy })
        })
        .collect()
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let (k, n) = (successes as f64, n as f64);
    let ph = k / n;
    let denom = 1.0 + z * z / n;
    let centre = (ph + z * z / (2.0 * n)) / denom;
    let half = z * (ph * (1.0 - ph) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Empirical `q`-quantile (smallest order statistic with CDF at least `q`).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let k = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[k - 1]
}

/// Kolmogorov–Smirnov distance between the empirical law of `xs` and the
/// unit-mean exponential law.
pub fn ks_exponential(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = 1.0 - (-x).exp();
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic p-value of the two-sample KS statistic `d`.
pub fn ks_two_sample_p(d: f64, na: usize, nb: usize) -> f64 {
    let ne = (na * nb) as f64 / (na + nb) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let term = 2.0 * (-1f64).powi(j - 1) * (-2.0 * (j as f64 * lambda).powi(2)).exp();
        sum += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct BetaStats {
    pub beta: f64,
    pub runs: usize,
    pub completed: usize,
    pub mean: f64,
    pub median: f64,
    pub q10: f64,
    pub q90: f64,
    /// The `1 - e^{-1}` quantile of the hitting time.
    pub t_beta: f64,
    pub mean_over_t_beta: f64,
    /// KS distance of `τ / T_β` to the unit-mean exponential law.
    pub ks: f64,
    pub gate_fraction: f64,
    #[serde(skip)]
    pub samples: Vec<TrajectorySample>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HittingReport {
    pub per_beta: Vec<BetaStats>,
    /// Least-squares slope of `ln(mean τ)` against `β`.
    pub slope: f64,
    pub intercept: f64,
    #[serde(serialize_with = "crate::model::ser_rational")]
    pub gamma: Rational64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { f64::NAN };
    (slope, my - slope * mx)
}

/// Summaries of hitting times from `start` to the configured targets,
/// computed over the completed runs.
pub fn beta_stats(beta: f64, samples: Vec<TrajectorySample>) -> BetaStats {
    let runs = samples.len();
    let mut done: Vec<f64> = samples.iter().filter(|s| s.outcome.is_some()).map(|s| s.steps as f64).collect();
    done.sort_by(f64::total_cmp);
    let completed = done.len();
    let gate_fraction =
        if completed == 0 { 0.0 } else { samples.iter().filter(|s| s.gate_hit).count() as f64 / completed as f64 };
    if completed == 0 {
        return BetaStats {
            beta,
            runs,
            completed,
            mean: f64::NAN,
            median: f64::NAN,
            q10: f64::NAN,
            q90: f64::NAN,
            t_beta: f64::NAN,
            mean_over_t_beta: f64::NAN,
            ks: f64::NAN,
            gate_fraction,
            samples,
        };
    }
    let mean = done.iter().sum::<f64>() / completed as f64;
    let t_beta = quantile(&done, 1.0 - (-1f64).exp());
    let scaled: Vec<f64> = done.iter().map(|t| t / t_beta).collect();
    BetaStats {
        beta,
        runs,
        completed,
        mean,
        median: quantile(&done, 0.5),
        q10: quantile(&done, 0.1),
        q90: quantile(&done, 0.9),
        t_beta,
        mean_over_t_beta: mean / t_beta,
        ks: ks_exponential(&scaled),
        gate_fraction,
        samples,
    }
}

/// Step cap `⌈e^{β(Γ + 2)}⌉` of the hitting-time experiment.
pub fn hitting_cap(dc: &DerivedConstants, beta: f64) -> u64 {
    (beta * (rational_to_f64(dc.gamma) + 2.0)).exp().ceil() as u64
}

/// One batch of runs from the empty box at inverse temperature `beta`,
/// without any completion requirement.
pub fn hitting_batch(cfg: &SimConfig, beta: f64) -> Result<BetaStats, SimError> {
    let c = cfg.clone().with_beta(beta);
    let empty = Configuration::empty(c.params.l0);
    Ok(beta_stats(beta, run_many(&c, "zero", |_, _| empty.clone())?))
}

/// Hitting times from the empty box to the configured targets over a grid
/// of inverse temperatures.  Every `β` must complete at least half its runs.
pub fn hitting_stats(cfg: &SimConfig, beta_grid: &[f64]) -> Result<HittingReport, SimError> {
    if beta_grid.is_empty() || beta_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SimError::BetaGrid);
    }
    let mut per_beta = Vec::new();
    for &beta in beta_grid {
        let st = hitting_batch(cfg, beta)?;
        if st.completed < 2 || 2 * st.completed < st.runs {
            return Err(SimError::InsufficientRuns { beta, completed: st.completed, runs: st.runs });
        }
        per_beta.push(st);
    }
    let xs: Vec<f64> = per_beta.iter().map(|s| s.beta).collect();
    let ys: Vec<f64> = per_beta.iter().map(|s| s.mean.ln()).collect();
    let (slope, intercept) = fit_line(&xs, &ys);
    Ok(HittingReport { per_beta, slope, intercept, gamma: cfg.dc.gamma })
}

#[derive(Debug, Clone, Serialize)]
pub struct FateReport {
    pub rect: RectSpec,
    pub beta: f64,
    pub runs: usize,
    pub zero_first: usize,
    pub one_first: usize,
    pub capped: usize,
    pub freq_zero: f64,
    pub freq_one: f64,
    pub wilson_zero: (f64, f64),
    pub wilson_one: (f64, f64),
    #[serde(skip)]
    pub samples: Vec<TrajectorySample>,
}

/// Lower-left corner that centres an `l1 x l2` rectangle in the box.
pub fn centred_corner(l0: usize, l1: i64, l2: i64) -> (usize, usize) {
    ((l0 - l1 as usize) / 2 + 1, (l0 - l2 as usize) / 2 + 1)
}

/// Start from a centred rectangle and record whether the empty or the full
/// box is reached first.
pub fn fate(start: RectSpec, cfg: &SimConfig) -> Result<FateReport, SimError> {
    let l0 = cfg.params.l0;
    if !start.fits(l0) {
        return Err(SimError::RectDoesNotFit(start.l1, start.l2));
    }
    let (x0, y0) = centred_corner(l0, start.l1, start.l2);
    let init = Configuration::rectangle(l0, x0, y0, start.l1 as usize, start.l2 as usize);
    let c = cfg.clone().with_targets(vec![Target::Zero, Target::One]);
    let label = format!("R({},{})", start.l1, start.l2);
    let samples = run_many(&c, &label, |_, _| init.clone())?;
    let count = |t| samples.iter().filter(|s| s.outcome == Some(t)).count();
    let (zero_first, one_first) = (count(Target::Zero), count(Target::One));
    let runs = samples.len();
    Ok(FateReport {
        rect: start,
        beta: cfg.params.beta,
        runs,
        zero_first,
        one_first,
        capped: runs - zero_first - one_first,
        freq_zero: zero_first as f64 / runs as f64,
        freq_one: one_first as f64 / runs as f64,
        wilson_zero: wilson_interval(zero_first, runs, 1.96),
        wilson_one: wilson_interval(one_first, runs, 1.96),
        samples,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RecurrenceReport {
    pub beta: f64,
    pub cap: u64,
    pub states: usize,
    pub hits: usize,
    pub fraction: f64,
    pub wilson: (f64, f64),
    #[serde(skip)]
    pub samples: Vec<TrajectorySample>,
}

/// Uniform configuration with `count` particles in the interior.
pub fn random_interior_state<R: Rng + ?Sized>(l0: usize, count: usize, rng: &mut R) -> Configuration {
    let mut c = Configuration::empty(l0);
    for i in sample(rng, l0 * l0, count.min(l0 * l0)) {
        c.set(i % l0 + 1, i / l0 + 1, true);
    }
    c
}

/// Step cap `⌈e^{β(V* + 2)}⌉` of the recurrence experiment.
pub fn recurrence_cap(dc: &DerivedConstants, beta: f64) -> u64 {
    (beta * (rational_to_f64(dc.vstar) + 2.0)).exp().ceil() as u64
}

/// Fraction of starts that reach the empty or the full box within
/// `e^{β(V* + 2)}` attempted moves.  Without explicit states, run `i` starts
/// from a uniform interior configuration whose particle count is uniform in
/// `0..=max_particles`.
pub fn recurrence(
    cfg: &SimConfig,
    states: Option<&[Configuration]>,
    max_particles: usize,
) -> Result<RecurrenceReport, SimError> {
    let mut c = cfg.clone().with_targets(vec![Target::Zero, Target::One]);
    c.cap = recurrence_cap(&cfg.dc, cfg.params.beta);
    if let Some(s) = states {
        c.runs = s.len();
    }
    let l0 = c.params.l0;
    let samples = run_many(&c, "random", |run, rng| match states {
        Some(s) => s[run as usize].clone(),
        None => {
            let count = rng.random_range(0..=max_particles);
            random_interior_state(l0, count, rng)
        }
    })?;
    let hits = samples.iter().filter(|s| s.outcome.is_some()).count();
    Ok(RecurrenceReport {
        beta: c.params.beta,
        cap: c.cap,
        states: samples.len(),
        hits,
        fraction: hits as f64 / samples.len() as f64,
        wilson: wilson_interval(hits, samples.len(), 1.96),
        samples,
    })
}

/// Exact one-step transition probability `P(η, η')` for `η ≠ η'`: the number
/// of oriented bonds realising the move over the bond count, times the
/// Metropolis acceptance.
pub fn transition_probability(from: &Configuration, to: &Configuration, p: &ModelParams) -> f64 {
    let mut count = 0usize;
    let mut dh = None;
    for b in all_bonds(from.l0()) {
        let mut next = from.clone();
        if apply_in_place(&mut next, &b).expect("bond from the enumeration") && &next == to {
            count += 1;
            dh = Some(delta_h(from, &b, p));
        }
    }
    match dh {
        None => 0.0,
        Some(d) => {
            let up = rational_to_f64(d).max(0.0);
            count as f64 / bond_count(from.l0()) as f64 * (-p.beta * up).exp()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::hamiltonian;

    fn small(beta: f64) -> (ModelParams, DerivedConstants) {
        let p = ModelParams::small(beta);
        let dc = derive_constants(&p, true).unwrap();
        (p, dc)
    }

    #[test]
    fn target_parsing() {
        assert_eq!("zero".parse::<Target>().unwrap(), Target::Zero);
        assert_eq!("P".parse::<Target>().unwrap(), Target::Gate);
        assert_eq!("R(4,3)".parse::<Target>().unwrap(), Target::Rect { l1: 4, l2: 3 });
        assert_eq!("5x2".parse::<Target>().unwrap(), Target::Rect { l1: 5, l2: 2 });
        assert!("nonsense".parse::<Target>().is_err());
        assert_eq!(Target::Rect { l1: 4, l2: 3 }.to_string(), "R(4,3)");
    }

    #[test]
    fn chain_tracks_energy_and_classes() {
        let (p, dc) = small(1.0);
        let dy = Dynamics::new(&p, &dc);
        let start = Configuration::rectangle(12, 3, 3, 4, 3);
        let mut chain = Chain::new(&dy, &start, true).unwrap();
        let mut rng = run_rng(7, 0);
        for _ in 0..5000 {
            chain.step_rejection_free(&mut rng, u64::MAX);
        }
        assert_eq!(chain.energy(), hamiltonian(chain.configuration(), &p));
        let fresh = Chain::new(&dy, chain.configuration(), true).unwrap();
        assert!((fresh.exit_mass() - chain.exit_mass()).abs() < 1e-9);
        for (a, b) in fresh.members.iter().zip(&chain.members) {
            assert_eq!(a.len(), b.len());
        }
    }

    #[test]
    fn exit_mass_matches_move_enumeration() {
        let (p, dc) = small(1.3);
        let dy = Dynamics::new(&p, &dc);
        let cfg = Configuration::with_sites(12, &[(0, 4), (3, 3), (4, 3), (4, 4), (8, 9), (13, 13)]);
        let chain = Chain::new(&dy, &cfg, true).unwrap();
        let expected: f64 = crate::moves::enumerate_moves(&cfg, &p)
            .iter()
            .map(|m| (-p.beta * rational_to_f64(m.dh).max(0.0)).exp())
            .sum();
        assert!((chain.exit_mass() - expected).abs() < 1e-9);
    }

    #[test]
    fn trivial_hits() {
        let (p, dc) = small(1.0);
        let dy = Dynamics::new(&p, &dc);
        let mut rng = run_rng(1, 0);
        let full = Configuration::full(12);
        let r = run_until_hit(&dy, &full, &[Target::One], 10, Kernel::RejectionFree, GateCheck::Window, &mut rng);
        assert_eq!(r.unwrap().0, Some(Target::One));
        let empty = Configuration::empty(12);
        let r = run_until_hit(
            &dy,
            &empty,
            &[Target::Zero, Target::One],
            10,
            Kernel::PlainMetropolis,
            GateCheck::Window,
            &mut rng,
        )
        .unwrap();
        assert_eq!((r.0, r.1), (Some(Target::Zero), 0));
    }

    #[test]
    fn gate_is_seen_on_a_gate_start() {
        let (p, dc) = small(1.0);
        let dy = Dynamics::new(&p, &dc);
        let mut sites: Vec<(usize, usize)> = (3..=7).map(|x| (x, 3)).collect();
        sites.extend((3..=6).map(|x| (x, 4)));
        sites.extend([(4, 5), (6, 5)]);
        let w1 = Configuration::with_sites(12, &sites);
        let mut rng = run_rng(3, 0);
        let r = run_until_hit(&dy, &w1, &[Target::Gate], 10, Kernel::RejectionFree, GateCheck::Window, &mut rng);
        assert_eq!(r.unwrap().0, Some(Target::Gate));
    }

    #[test]
    fn cap_is_reported_as_outcome() {
        let (p, _) = small(1.0);
        let cfg = SimConfig::new(p, 5, 3, 50).unwrap();
        let out = run_many(&cfg, "zero", |_, _| Configuration::empty(12)).unwrap();
        assert!(out.iter().all(|s| s.outcome.is_none() && s.steps == 50 && !s.gate_hit));
    }

    #[test]
    fn runs_are_deterministic() {
        let (p, _) = small(1.0);
        let cfg = SimConfig::new(p.with_l0(3), 11, 6, 100_000).unwrap().with_targets(vec![Target::One]);
        let a = run_many(&cfg, "zero", |_, _| Configuration::empty(3)).unwrap();
        let b = run_many(&cfg, "zero", |_, _| Configuration::empty(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn creation_from_empty_box_is_accepted_with_boltzmann_weight() {
        let (p, _) = small(0.5);
        let mut rng = run_rng(2, 0);
        let trials = 200_000;
        let mut created = 0;
        for _ in 0..trials {
            let mut c = Configuration::empty(2);
            if step(&mut c, &mut rng, &p.with_l0(2)) {
                created += 1;
            }
        }
        // of the 8S boundary bonds, the 4S pointing inwards fire w.p. e^{-βΔ}
        let side = 4.0;
        let expect = 4.0 * side / bond_count(2) as f64 * (-0.5f64 * 3.6).exp();
        let got = created as f64 / trials as f64;
        assert!((got - expect).abs() < 4.0 * (expect / trials as f64).sqrt(), "{got} vs {expect}");
    }

    #[test]
    fn statistics_helpers() {
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.5), 2.0);
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.51), 3.0);
        let (lo, hi) = wilson_interval(90, 100, 1.96);
        assert!(lo > 0.82 && lo < 0.84 && hi > 0.94 && hi < 0.95);
        let xs: Vec<f64> = (0..1000).map(|i| -(1.0 - (i as f64 + 0.5) / 1000.0).ln()).collect();
        assert!(ks_exponential(&xs) < 0.001);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert!(ks_two_sample_p(0.0, 50, 50) > 0.99);
        assert!(ks_two_sample_p(0.5, 100, 100) < 1e-9);
        let (s, i) = fit_line(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]);
        assert!((s - 2.0).abs() < 1e-12 && i.abs() < 1e-12);
    }

    #[test]
    fn recurrence_cap_at_beta_one_and_a_half() {
        let (_, dc) = small(1.5);
        let cap = recurrence_cap(&dc, 1.5);
        assert!((10_900..=11_000).contains(&cap), "{cap}");
    }
}
