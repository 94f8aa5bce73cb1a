//! Parameters, derived critical constants, the configuration space and
//! exact energy evaluation.

use std::fmt;

use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{Signed, ToPrimitive};
use serde::Serialize;
use thiserror::Error;

/// A lattice site `(x, y)` of the box, `x` horizontal, `y` vertical, origin at
/// the lower-left corner of the boundary ring.
pub type Site = (usize, usize);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("binding energies must satisfy u1 >= u2 > 0 (got u1={u1}, u2={u2})")]
    BindingEnergies { u1: Rational64, u2: Rational64 },
    #[error("activity delta={delta} lies outside the metastable window ({lo}, {hi})")]
    DeltaOutsideWindow { delta: Rational64, lo: Rational64, hi: Rational64 },
    #[error("u1 = 2*u2 is the boundary between the strong and weak regimes")]
    RegimeBoundary,
    #[error("u1 = u2 is neither strongly nor weakly anisotropic")]
    RegimeNeither,
    #[error("u2/eps = {0} is an integer; the critical length is ambiguous")]
    IntegerRatio(Rational64),
    #[error("beta must be finite and positive (got {0})")]
    Beta(f64),
    #[error("interior side l0 must be at least 2 (got {0})")]
    SideTooSmall(usize),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GridError {
    #[error("grid is empty")]
    Empty,
    #[error("grid is not square: {rows} rows, row {row} has {len} columns")]
    NotSquare { rows: usize, row: usize, len: usize },
    #[error("grid side {0} is too small (need l0 + 2 >= 4)")]
    TooSmall(usize),
    #[error("unexpected character {ch:?} at row {row}, column {col}")]
    BadChar { ch: char, row: usize, col: usize },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("cannot parse {0:?} as an exact rational")]
pub struct RationalParseError(pub String);

/// Parse `"p/q"`, an integer, or a terminating decimal such as `"3.6"` into an
/// exact rational.
pub fn parse_rational(text: &str) -> Result<Rational64, RationalParseError> {
    let err = || RationalParseError(text.to_string());
    let t = text.trim();
    if t.is_empty() {
        return Err(err());
    }
    if let Some((num, den)) = t.split_once('/') {
        let n: i64 = num.trim().parse().map_err(|_| err())?;
        let d: i64 = den.trim().parse().map_err(|_| err())?;
        if d == 0 {
            return Err(err());
        }
        return Ok(Rational64::new(n, d));
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    let digits_ok = |s: &str| s.chars().all(|c| c.is_ascii_digit());
    if !digits_ok(int_part) || !digits_ok(frac_part) || frac_part.len() > 17 {
        return Err(err());
    }
    let den = 10i64.checked_pow(frac_part.len() as u32).ok_or_else(err)?;
    let ip: i64 = if int_part.is_empty() { 0 } else { int_part.parse().map_err(|_| err())? };
    let fp: i64 = if frac_part.is_empty() { 0 } else { frac_part.parse().map_err(|_| err())? };
    let num = ip.checked_mul(den).and_then(|v| v.checked_add(fp)).ok_or_else(err)?;
    let r = Rational64::new(num, den);
    Ok(if neg { -r } else { r })
}

/// Integer part plus one, applied literally (also to exact integers).
pub fn integer_part_plus_one(r: Rational64) -> i64 {
    r.floor().to_integer() + 1
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelParams {
    #[serde(serialize_with = "ser_rational")]
    pub u1: Rational64,
    #[serde(serialize_with = "ser_rational")]
    pub u2: Rational64,
    #[serde(serialize_with = "ser_rational")]
    pub delta: Rational64,
    pub beta: f64,
    pub l0: usize,
}

pub(crate) fn ser_rational<S: serde::Serializer>(r: &Rational64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format_rational(*r))
}

/// `p/q`, or just `p` for integers.
pub fn format_rational(r: Rational64) -> String {
    if r.is_integer() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rational_to_f64(r: Rational64) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

impl ModelParams {
    /// Validate the structural invariants: `u1 >= u2 > 0`, `delta` in the
    /// metastable window `(u1, u1 + u2)`, `u1 != 2 u2`, `beta > 0`, `l0 >= 2`.
    pub fn new(
        u1: Rational64,
        u2: Rational64,
        delta: Rational64,
        beta: f64,
        l0: usize,
    ) -> Result<Self, ModelError> {
        if !u2.is_positive() || u1 < u2 {
            return Err(ModelError::BindingEnergies { u1, u2 });
        }
        if delta <= u1 || delta >= u1 + u2 {
            return Err(ModelError::DeltaOutsideWindow { delta, lo: u1, hi: u1 + u2 });
        }
        if u1 == u2 * 2 {
            return Err(ModelError::RegimeBoundary);
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(ModelError::Beta(beta));
        }
        if l0 < 2 {
            return Err(ModelError::SideTooSmall(l0));
        }
        Ok(Self { u1, u2, delta, beta, l0 })
    }

    /// The desk-scale parameter set `U1=3, U2=1, delta=18/5, l0=12`.
    pub fn small(beta: f64) -> Self {
        Self::new(Rational64::from(3), Rational64::from(1), Rational64::new(18, 5), beta, 12)
            .expect("valid parameters")
    }

    /// The finer parameter set `U1=3, U2=1, delta=379/100, l0=40`.
    pub fn paperlike(beta: f64) -> Self {
        Self::new(Rational64::from(3), Rational64::from(1), Rational64::new(379, 100), beta, 40)
            .expect("valid parameters")
    }

    pub fn eps(&self) -> Rational64 {
        self.u1 + self.u2 - self.delta
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        Self { beta, ..self.clone() }
    }

    pub fn with_l0(&self, l0: usize) -> Self {
        Self { l0, ..self.clone() }
    }

    /// Same parameters with the roles of the two binding energies swapped.
    pub fn transposed(&self) -> Self {
        Self { u1: self.u2, u2: self.u1, ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `u1 > 2 u2`
    Strong,
    /// `u2 < u1 < 2 u2`
    Weak,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::Strong => write!(f, "strong"),
            Regime::Weak => write!(f, "weak"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivedConstants {
    #[serde(serialize_with = "ser_rational")]
    pub u1: Rational64,
    #[serde(serialize_with = "ser_rational")]
    pub u2: Rational64,
    #[serde(serialize_with = "ser_rational")]
    pub delta: Rational64,
    #[serde(serialize_with = "ser_rational")]
    pub eps: Rational64,
    pub l2star: i64,
    #[serde(serialize_with = "ser_rational")]
    pub delta_frac: Rational64,
    pub l1star: i64,
    pub lbar: i64,
    pub sstar: i64,
    #[serde(serialize_with = "ser_rational")]
    pub gamma: Rational64,
    #[serde(serialize_with = "ser_rational")]
    pub vstar: Rational64,
    pub regime: Regime,
}

/// Energy of a configuration whose clusterized part is a single full
/// `l1 x l2` rectangle: `U1 l2 + U2 l1 - eps l1 l2`.
pub fn rect_energy_raw(u1: Rational64, u2: Rational64, eps: Rational64, l1: i64, l2: i64) -> Rational64 {
    u1 * l2 + u2 * l1 - eps * (l1 * l2)
}

/// The two closed forms of the critical energy.  They agree identically; both
/// are exposed so callers can cross-check.
pub fn gamma_forms(u1: Rational64, u2: Rational64, delta: Rational64, l2star: i64) -> (Rational64, Rational64) {
    let eps = u1 + u2 - delta;
    let first = rect_energy_raw(u1, u2, eps, 2 * l2star - 2, l2star) + eps * (l2star - 1) + delta;
    let second = rect_energy_raw(u1, u2, eps, 2 * l2star - 1, l2star - 1) + delta - u2 + u1;
    (first, second)
}

/// Compute every derived constant in exact arithmetic.
///
/// With `strict`, parameter sets where `u2/eps` is an integer or where
/// `u1 = u2` are rejected; otherwise the integer-part-plus-one convention is
/// applied literally and `u1 = u2` is filed under the weak regime.
pub fn derive_constants(p: &ModelParams, strict: bool) -> Result<DerivedConstants, ModelError> {
    let p = ModelParams::new(p.u1, p.u2, p.delta, p.beta, p.l0)?;
    let eps = p.eps();
    let ratio = p.u2 / eps;
    let regime = if p.u1 > p.u2 * 2 {
        Regime::Strong
    } else if p.u1 > p.u2 {
        Regime::Weak
    } else if strict {
        return Err(ModelError::RegimeNeither);
    } else {
        Regime::Weak
    };
    if strict && ratio.is_integer() {
        return Err(ModelError::IntegerRatio(ratio));
    }
    let l2star = integer_part_plus_one(ratio);
    let delta_frac = Rational64::from(l2star) - ratio;
    let l1star = integer_part_plus_one(p.u1 / eps);
    let lbar = integer_part_plus_one((p.u1 - p.u2) / eps);
    let (g1, g2) = gamma_forms(p.u1, p.u2, p.delta, l2star);
    assert_eq!(g1, g2, "the two closed forms of the critical energy disagree");
    Ok(DerivedConstants {
        u1: p.u1,
        u2: p.u2,
        delta: p.delta,
        eps,
        l2star,
        delta_frac,
        l1star,
        lbar,
        sstar: 3 * l2star - 1,
        gamma: g1,
        vstar: p.delta * 2 - p.u1,
        regime,
    })
}

impl DerivedConstants {
    pub fn rect_energy(&self, l1: i64, l2: i64) -> Rational64 {
        rect_energy_raw(self.u1, self.u2, self.eps, l1, l2)
    }

    pub fn is_strong(&self) -> bool {
        self.regime == Regime::Strong
    }
}

/// Energies rescaled to integers over a common denominator, for hot loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnergyScale {
    pub den: i64,
    pub u1: i64,
    pub u2: i64,
    pub delta: i64,
}

impl EnergyScale {
    pub fn new(p: &ModelParams) -> Self {
        let den = p.u1.denom().lcm(p.u2.denom()).lcm(p.delta.denom());
        let scale = |r: Rational64| (r * den).to_integer();
        Self { den, u1: scale(p.u1), u2: scale(p.u2), delta: scale(p.delta) }
    }

    /// Exact conversion of a rational into scaled units, if representable.
    pub fn units(&self, r: Rational64) -> Option<i64> {
        let v = r * self.den;
        v.is_integer().then(|| v.to_integer())
    }

    pub fn to_rational(&self, units: i64) -> Rational64 {
        Rational64::new(units, self.den)
    }

    pub fn to_f64(&self, units: i64) -> f64 {
        units as f64 / self.den as f64
    }

    pub fn eps(&self) -> i64 {
        self.u1 + self.u2 - self.delta
    }
}

/// Occupancy of the box `{0, ..., l0+1}^2`; the interior is `{1, ..., l0}^2`
/// and the rest is the boundary ring.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    l0: usize,
    occ: Vec<bool>,
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Configuration(l0={})\n{}", self.l0, self.to_grid())
    }
}

impl Configuration {
    pub fn empty(l0: usize) -> Self {
        let side = l0 + 2;
        Self { l0, occ: vec![false; side * side] }
    }

    pub fn full(l0: usize) -> Self {
        let mut c = Self::empty(l0);
        c.fill_rect(1, 1, l0, l0);
        c
    }

    /// Configuration with the given sites occupied.
    pub fn with_sites(l0: usize, sites: &[Site]) -> Self {
        let mut c = Self::empty(l0);
        for &(x, y) in sites {
            c.set(x, y, true);
        }
        c
    }

    /// A full `w x h` rectangle with lower-left corner `(x0, y0)`.
    pub fn rectangle(l0: usize, x0: usize, y0: usize, w: usize, h: usize) -> Self {
        let mut c = Self::empty(l0);
        c.fill_rect(x0, y0, w, h);
        c
    }

    pub fn l0(&self) -> usize {
        self.l0
    }

    pub fn side(&self) -> usize {
        self.l0 + 2
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * (self.l0 + 2) + x
    }

    #[inline]
    pub fn site_of(&self, idx: usize) -> Site {
        let side = self.l0 + 2;
        (idx % side, idx / side)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.occ[self.index(x, y)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        let i = self.index(x, y);
        self.occ[i] = v;
    }

    #[inline]
    pub fn get_idx(&self, i: usize) -> bool {
        self.occ[i]
    }

    #[inline]
    pub fn set_idx(&mut self, i: usize, v: bool) {
        self.occ[i] = v;
    }

    pub fn raw(&self) -> &[bool] {
        &self.occ
    }

    #[inline]
    pub fn in_box(&self, x: i64, y: i64) -> bool {
        let side = (self.l0 + 2) as i64;
        (0..side).contains(&x) && (0..side).contains(&y)
    }

    #[inline]
    pub fn is_interior(&self, x: usize, y: usize) -> bool {
        (1..=self.l0).contains(&x) && (1..=self.l0).contains(&y)
    }

    #[inline]
    pub fn is_ring(&self, x: usize, y: usize) -> bool {
        x < self.l0 + 2 && y < self.l0 + 2 && !self.is_interior(x, y)
    }

    /// Interior-occupied test that is false outside the interior.
    #[inline]
    pub fn interior_occupied(&self, x: i64, y: i64) -> bool {
        x >= 1 && y >= 1 && (x as usize) <= self.l0 && (y as usize) <= self.l0 && self.get(x as usize, y as usize)
    }

    pub fn fill_rect(&mut self, x0: usize, y0: usize, w: usize, h: usize) {
        for y in y0..y0 + h {
            for x in x0..x0 + w {
                self.set(x, y, true);
            }
        }
    }

    pub fn particles(&self) -> usize {
        self.occ.iter().filter(|&&b| b).count()
    }

    pub fn occupied_sites(&self) -> impl Iterator<Item = Site> + '_ {
        let side = self.l0 + 2;
        self.occ.iter().enumerate().filter(|(_, &b)| b).map(move |(i, _)| (i % side, i / side))
    }

    pub fn is_empty(&self) -> bool {
        !self.occ.iter().any(|&b| b)
    }

    /// Full interior and empty ring.
    pub fn is_full_interior(&self) -> bool {
        let side = self.side();
        (0..side).all(|y| (0..side).all(|x| self.get(x, y) == self.is_interior(x, y)))
    }

    /// Mirror across the main diagonal (swaps horizontal and vertical).
    pub fn transpose(&self) -> Self {
        let mut t = Self::empty(self.l0);
        for (x, y) in self.occupied_sites() {
            t.set(y, x, true);
        }
        t
    }

    /// Rows of `.`/`#`, top row first, covering the whole box.
    pub fn to_grid(&self) -> String {
        let side = self.side();
        let mut s = String::with_capacity(side * (side + 1));
        for y in (0..side).rev() {
            for x in 0..side {
                s.push(if self.get(x, y) { '#' } else { '.' });
            }
            s.push('\n');
        }
        s
    }

    pub fn from_grid(text: &str) -> Result<Self, GridError> {
        let rows: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        if rows.is_empty() {
            return Err(GridError::Empty);
        }
        let side = rows.len();
        if side < 4 {
            return Err(GridError::TooSmall(side));
        }
        let mut c = Self::empty(side - 2);
        for (r, row) in rows.iter().enumerate() {
            let len = row.chars().count();
            if len != side {
                return Err(GridError::NotSquare { rows: side, row: r, len });
            }
            let y = side - 1 - r;
            for (x, ch) in row.chars().enumerate() {
                match ch {
                    '#' => c.set(x, y, true),
                    '.' => {}
                    _ => return Err(GridError::BadChar { ch, row: r, col: x }),
                }
            }
        }
        Ok(c)
    }

    /// Number of occupied horizontal and vertical bonds inside the interior.
    pub fn bond_counts(&self) -> (i64, i64) {
        let l0 = self.l0;
        let (mut h, mut v) = (0i64, 0i64);
        for y in 1..=l0 {
            for x in 1..=l0 {
                if !self.get(x, y) {
                    continue;
                }
                if x < l0 && self.get(x + 1, y) {
                    h += 1;
                }
                if y < l0 && self.get(x, y + 1) {
                    v += 1;
                }
            }
        }
        (h, v)
    }
}

/// Energy in scaled integer units.
pub fn energy_units(cfg: &Configuration, scale: &EnergyScale) -> i64 {
    let (h, v) = cfg.bond_counts();
    -scale.u1 * h - scale.u2 * v + scale.delta * cfg.particles() as i64
}

/// `H = -U1 (horizontal interior bonds) - U2 (vertical interior bonds) + delta N`.
pub fn hamiltonian(cfg: &Configuration, p: &ModelParams) -> Rational64 {
    let (h, v) = cfg.bond_counts();
    -p.u1 * h - p.u2 * v + p.delta * cfg.particles() as i64
}

/// Logarithm of the unnormalised grand-canonical weight, `-beta H`.
pub fn gibbs_weight_log(cfg: &Configuration, p: &ModelParams) -> f64 {
    -p.beta * rational_to_f64(hamiltonian(cfg, p))
}

/// The empty configuration and the configuration full on the interior and
/// empty on the ring.
pub fn standard_states(p: &ModelParams) -> (Configuration, Configuration) {
    (Configuration::empty(p.l0), Configuration::full(p.l0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    #[test]
    fn small_set_constants() {
        let dc = derive_constants(&ModelParams::small(1.0), true).unwrap();
        assert_eq!(dc.eps, r(2, 5));
        assert_eq!(dc.l2star, 3);
        assert_eq!(dc.delta_frac, r(1, 2));
        assert_eq!(dc.sstar, 8);
        assert_eq!(dc.gamma, r(63, 5));
        assert_eq!(dc.l1star, 8);
        assert_eq!(dc.vstar, r(21, 5));
        assert_eq!(dc.lbar, 6);
        assert_eq!(dc.regime, Regime::Strong);
    }

    #[test]
    fn paperlike_constants() {
        let dc = derive_constants(&ModelParams::paperlike(1.0), true).unwrap();
        assert_eq!(dc.eps, r(21, 100));
        assert_eq!(dc.l2star, 5);
        assert_eq!(dc.sstar, 14);
        assert_eq!(dc.gamma, r(1923, 100));
        assert_eq!(dc.l1star, 15);
    }

    #[test]
    fn isotropic_rejected_in_strict_mode() {
        let p = ModelParams::new(r(1, 1), r(1, 1), r(3, 2), 1.0, 8).unwrap();
        assert_eq!(derive_constants(&p, true), Err(ModelError::RegimeNeither));
        let lenient = derive_constants(&p, false).unwrap();
        assert_eq!(lenient.regime, Regime::Weak);
        // integer ratio u2/eps = 2 gets integer part plus one
        assert_eq!(lenient.l2star, 3);
    }

    #[test]
    fn isotropic_with_fractional_ratio_is_neither() {
        let p = ModelParams::new(r(1, 1), r(1, 1), r(7, 5), 1.0, 8).unwrap();
        assert_eq!(derive_constants(&p, true), Err(ModelError::RegimeNeither));
    }

    #[test]
    fn parameter_validation() {
        assert!(matches!(
            ModelParams::new(r(3, 1), r(1, 1), r(5, 1), 1.0, 12),
            Err(ModelError::DeltaOutsideWindow { .. })
        ));
        assert_eq!(ModelParams::new(r(2, 1), r(1, 1), r(5, 2), 1.0, 12), Err(ModelError::RegimeBoundary));
        assert!(matches!(ModelParams::new(r(1, 1), r(2, 1), r(5, 2), 1.0, 12), Err(ModelError::BindingEnergies { .. })));
        assert_eq!(ModelParams::new(r(3, 1), r(1, 1), r(18, 5), 0.0, 12), Err(ModelError::Beta(0.0)));
        assert_eq!(ModelParams::new(r(3, 1), r(1, 1), r(18, 5), 1.0, 1), Err(ModelError::SideTooSmall(1)));
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("18/5").unwrap(), r(18, 5));
        assert_eq!(parse_rational("3.6").unwrap(), r(18, 5));
        assert_eq!(parse_rational("3.79").unwrap(), r(379, 100));
        assert_eq!(parse_rational("-0.5").unwrap(), r(-1, 2));
        assert_eq!(parse_rational("7").unwrap(), r(7, 1));
        assert!(parse_rational("pi").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("").is_err());
        assert!(parse_rational(".").is_err());
    }

    #[test]
    fn energies_of_small_configurations() {
        let p = ModelParams::small(1.0);
        let (zero, one) = standard_states(&p);
        assert_eq!(hamiltonian(&zero, &p), r(0, 1));
        assert_eq!(hamiltonian(&one, &p), r(-48, 5));
        assert_eq!(hamiltonian(&Configuration::with_sites(12, &[(5, 5)]), &p), r(18, 5));
        assert_eq!(hamiltonian(&Configuration::with_sites(12, &[(5, 5), (6, 5)]), &p), r(21, 5));
        assert_eq!(gibbs_weight_log(&zero, &p), 0.0);
        assert!((gibbs_weight_log(&one, &p) - 9.6).abs() < 1e-12);
        let single = Configuration::with_sites(12, &[(3, 3)]);
        assert!((gibbs_weight_log(&single, &p) + 3.6).abs() < 1e-12);
        assert_eq!(Configuration::full(2).particles(), 4);
    }

    #[test]
    fn ring_particles_have_no_bonds() {
        let p = ModelParams::small(1.0);
        let c = Configuration::with_sites(12, &[(0, 1), (0, 2), (1, 1)]);
        assert_eq!(hamiltonian(&c, &p), p.delta * 3);
    }

    #[test]
    fn scaled_units_agree_with_rationals() {
        let p = ModelParams::small(1.0);
        let sc = EnergyScale::new(&p);
        assert_eq!(sc.den, 5);
        assert_eq!((sc.u1, sc.u2, sc.delta), (15, 5, 18));
        let c = Configuration::rectangle(12, 2, 2, 5, 3);
        assert_eq!(sc.to_rational(energy_units(&c, &sc)), hamiltonian(&c, &p));
        assert_eq!(sc.units(r(63, 5)), Some(63));
        assert_eq!(sc.units(r(1, 3)), None);
    }

    #[test]
    fn grid_round_trip() {
        let c = Configuration::with_sites(3, &[(0, 0), (1, 1), (2, 1), (4, 3)]);
        let g = c.to_grid();
        assert_eq!(g.lines().count(), 5);
        assert_eq!(g.lines().last().unwrap(), "#....");
        assert_eq!(Configuration::from_grid(&g).unwrap(), c);
        assert!(matches!(Configuration::from_grid("..\n.."), Err(GridError::TooSmall(2))));
        assert!(matches!(Configuration::from_grid("....\n...\n....\n...."), Err(GridError::NotSquare { .. })));
        assert!(matches!(Configuration::from_grid("....\n..x.\n....\n...."), Err(GridError::BadChar { .. })));
    }
}
