//! Geometric descriptors of a configuration: free particles, clusterized part,
//! projections, contour half-lengths, vacancies and clusters.

use num_rational::Rational64;
use serde::Serialize;

use crate::model::{rect_energy_raw, Configuration, ModelParams, Site};

/// Axis-aligned rectangle of interior sites, lower-left corner `(x0, y0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct RectBox {
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
    pub h: usize,
}

impl RectBox {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x0 && x < self.x0 + self.w && y >= self.y0 && y < self.y0 + self.h
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GeometrySummary {
    /// Number of free particles.
    pub n: i64,
    /// Size of the clusterized part.
    pub cl_size: i64,
    /// Number of active columns / rows.
    pub p1: i64,
    pub p2: i64,
    /// Half the number of horizontal / vertical unit boundary segments.
    pub g1: i64,
    pub g2: i64,
    pub g1p: i64,
    pub g2p: i64,
    pub v: i64,
    pub s: i64,
    pub monotone: bool,
    pub clusters: usize,
    /// Bounding box of the clusterized part.
    pub rect: Option<RectBox>,
}

impl GeometrySummary {
    pub fn p_min(&self) -> i64 {
        self.p1.min(self.p2)
    }

    pub fn p_max(&self) -> i64 {
        self.p1.max(self.p2)
    }

    pub fn connected(&self) -> bool {
        self.clusters == 1
    }
}

/// Interior particle with at least one occupied interior neighbour.
#[inline]
pub fn is_clusterized(cfg: &Configuration, x: usize, y: usize) -> bool {
    if !cfg.is_interior(x, y) || !cfg.get(x, y) {
        return false;
    }
    let (xi, yi) = (x as i64, y as i64);
    cfg.interior_occupied(xi - 1, yi)
        || cfg.interior_occupied(xi + 1, yi)
        || cfg.interior_occupied(xi, yi - 1)
        || cfg.interior_occupied(xi, yi + 1)
}

/// Per-site membership in the clusterized part, indexed like the configuration.
pub fn clusterized_mask(cfg: &Configuration) -> Vec<bool> {
    let side = cfg.side();
    let mut m = vec![false; side * side];
    for y in 1..=cfg.l0() {
        for x in 1..=cfg.l0() {
            if is_clusterized(cfg, x, y) {
                m[cfg.index(x, y)] = true;
            }
        }
    }
    m
}

/// Ring particles, plus interior particles with no occupied interior neighbour.
pub fn free_particles(cfg: &Configuration) -> Vec<Site> {
    cfg.occupied_sites().filter(|&(x, y)| !is_clusterized(cfg, x, y)).collect()
}

/// Maximal 4-connected components of the clusterized part; corner contact
/// does not connect.
pub fn connected_components(cfg: &Configuration) -> Vec<Vec<Site>> {
    components_of_mask(cfg, &clusterized_mask(cfg))
}

fn components_of_mask(cfg: &Configuration, cl: &[bool]) -> Vec<Vec<Site>> {
    let side = cfg.side();
    let mut seen = vec![false; cl.len()];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for start in 0..cl.len() {
        if !cl[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut comp = Vec::new();
        while let Some(i) = stack.pop() {
            let (x, y) = (i % side, i / side);
            comp.push((x, y));
            let nbrs = [
                (x > 0).then(|| i - 1),
                (x + 1 < side).then(|| i + 1),
                (y > 0).then(|| i - side),
                (y + 1 < side).then(|| i + side),
            ];
            for j in nbrs.into_iter().flatten() {
                if cl[j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        comp.sort_unstable_by_key(|&(x, y)| (y, x));
        out.push(comp);
    }
    out
}

pub fn summarize(cfg: &Configuration) -> GeometrySummary {
    let cl = clusterized_mask(cfg);
    let side = cfg.side();
    let l0 = cfg.l0();
    let mut cols = vec![false; side];
    let mut rows = vec![false; side];
    let (mut cl_size, mut hseg, mut vseg) = (0i64, 0i64, 0i64);
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (usize::MAX, 0, usize::MAX, 0);
    for y in 1..=l0 {
        for x in 1..=l0 {
            let i = cfg.index(x, y);
            if !cl[i] {
                continue;
            }
            cl_size += 1;
            cols[x] = true;
            rows[y] = true;
            xmin = xmin.min(x);
            xmax = xmax.max(x);
            ymin = ymin.min(y);
            ymax = ymax.max(y);
            // ring sites are never clusterized, so the neighbours exist
            hseg += (!cl[i + side]) as i64 + (!cl[i - side]) as i64;
            vseg += (!cl[i + 1]) as i64 + (!cl[i - 1]) as i64;
        }
    }
    let p1 = cols.iter().filter(|&&b| b).count() as i64;
    let p2 = rows.iter().filter(|&&b| b).count() as i64;
    let n = cfg.particles() as i64 - cl_size;
    let (g1, g2) = (hseg / 2, vseg / 2);
    let rect = (cl_size > 0).then(|| RectBox { x0: xmin, y0: ymin, w: xmax - xmin + 1, h: ymax - ymin + 1 });
    let clusters = if cl_size == 0 { 0 } else { components_of_mask(cfg, &cl).len() };
    GeometrySummary {
        n,
        cl_size,
        p1,
        p2,
        g1,
        g2,
        g1p: g1 - p1,
        g2p: g2 - p2,
        v: p1 * p2 - cl_size,
        s: p1 + p2,
        monotone: g1 == p1 && g2 == p2,
        clusters,
        rect,
    }
}

/// Energy from the geometric decomposition
/// `H(R(p1,p2)) + eps v + U1 g2' + U2 g1' + delta n`.
pub fn lemma7_energy(cfg: &Configuration, p: &ModelParams) -> Rational64 {
    energy_from_summary(&summarize(cfg), p)
}

pub fn energy_from_summary(g: &GeometrySummary, p: &ModelParams) -> Rational64 {
    let eps = p.eps();
    rect_energy_raw(p.u1, p.u2, eps, g.p1, g.p2) + eps * g.v + p.u1 * g.g2p + p.u2 * g.g1p + p.delta * g.n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::hamiltonian;

    #[test]
    fn ring_particle_is_free() {
        let c = Configuration::with_sites(6, &[(0, 3)]);
        assert_eq!(free_particles(&c), vec![(0, 3)]);
    }

    #[test]
    fn block_has_no_free_particles() {
        let mut c = Configuration::rectangle(6, 2, 2, 2, 2);
        assert!(free_particles(&c).is_empty());
        c.set(5, 5, true);
        assert_eq!(free_particles(&c), vec![(5, 5)]);
    }

    #[test]
    fn interior_particle_next_to_ring_particle_is_free() {
        let c = Configuration::with_sites(6, &[(0, 3), (1, 3)]);
        assert_eq!(free_particles(&c).len(), 2);
    }

    #[test]
    fn rectangle_summary() {
        let g = summarize(&Configuration::rectangle(8, 2, 3, 3, 2));
        assert_eq!((g.p1, g.p2, g.g1, g.g2, g.g1p, g.g2p, g.v, g.s, g.n), (3, 2, 3, 2, 0, 0, 0, 5, 0));
        assert!(g.monotone);
        assert_eq!(g.clusters, 1);
        assert_eq!(g.rect, Some(RectBox { x0: 2, y0: 3, w: 3, h: 2 }));
    }

    #[test]
    fn empty_summary() {
        let g = summarize(&Configuration::empty(5));
        assert_eq!((g.n, g.cl_size, g.p1, g.p2, g.g1, g.g2, g.v, g.s, g.clusters), (0, 0, 0, 0, 0, 0, 0, 0, 0));
        assert_eq!(g.rect, None);
    }

    fn w1() -> Configuration {
        let mut sites = Vec::new();
        for x in 0..=4 {
            sites.push((x + 3, 3));
        }
        for x in 0..=3 {
            sites.push((x + 3, 4));
        }
        sites.push((4, 5));
        sites.push((6, 5));
        Configuration::with_sites(12, &sites)
    }

    #[test]
    fn gate_witness_summary() {
        let g = summarize(&w1());
        assert_eq!((g.p1, g.p2, g.v, g.g1p, g.g2p, g.n), (5, 3, 4, 0, 1, 0));
        assert_eq!((g.g1, g.g2), (5, 4));
        assert!(g.connected());
        let p = ModelParams::small(1.0);
        assert_eq!(lemma7_energy(&w1(), &p), Rational64::new(63, 5));
        assert_eq!(hamiltonian(&w1(), &p), Rational64::new(63, 5));
    }

    #[test]
    fn diagonal_contact_does_not_connect() {
        let c = Configuration::with_sites(6, &[(2, 2), (3, 2), (4, 3), (4, 4)]);
        assert_eq!(connected_components(&c).len(), 2);
        let c = Configuration::rectangle(6, 2, 2, 2, 2);
        assert_eq!(connected_components(&c).len(), 1);
        assert!(connected_components(&Configuration::empty(4)).is_empty());
    }

    #[test]
    fn disconnected_projection_counts_lines() {
        let c = Configuration::with_sites(10, &[(1, 1), (2, 1), (6, 1), (7, 1)]);
        let g = summarize(&c);
        assert_eq!((g.p1, g.p2, g.clusters), (4, 1, 2));
        assert_eq!(g.rect.unwrap().w, 7);
    }
}
