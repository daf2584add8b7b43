//! One-dimensional distributions on a closed interval.
//!
//! A [`Dist1D`] is either one of a few closed-form shapes (degenerate,
//! uniform, truncated Pareto) or a grid body: a piecewise-linear continuous
//! CDF on a uniform grid plus an explicit list of atoms. Atoms are never
//! smeared into the grid, so jump sizes stay exact through convolution and
//! rescaling.
//!
//! All integrals are measured from the lower end of the declared support, so
//! two distributions sharing a support can be compared pointwise through
//! [`Dist1D::integrated_cdf`].

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{abs, ceil, floor, gauss_legendre};
use crate::pareto::TruncatedPareto;

/// Default number of grid cells used when a closed-form distribution has to
/// be discretized (convolution, quantile sampling).
pub const DEFAULT_GRID_CELLS: usize = 4096;

/// Tolerance applied to mean comparisons when none is supplied.
pub const MEAN_TOL: f64 = 1e-9;

/// Tolerance applied to integrated-CDF comparisons when none is supplied.
pub const INTEGRAL_TOL: f64 = 1e-8;

const UNIFORM_REFINEMENT: usize = 2048;
const REFINE_CANDIDATES: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct Dist1D {
    lo: f64,
    hi: f64,
    body: Body,
}

#[derive(Debug, Clone, PartialEq)]
enum Body {
    Degenerate(f64),
    Uniform { a: f64, b: f64 },
    Pareto(TruncatedPareto),
    Grid(GridBody),
}

#[derive(Debug, Clone, PartialEq)]
struct GridBody {
    origin: f64,
    width: f64,
    cells: Vec<f64>,
    node_cdf: Vec<f64>,
    node_int: Vec<f64>,
    node_pm: Vec<f64>,
    atoms: Atoms,
}

#[derive(Debug, Clone, PartialEq, Default)]
struct Atoms {
    loc: Vec<f64>,
    mass: Vec<f64>,
    cum_mass: Vec<f64>,
    cum_moment: Vec<f64>,
}

impl Atoms {
    fn new(mut raw: Vec<(f64, f64)>) -> Self {
        raw.retain(|&(_, m)| m > 0.0);
        raw.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut loc: Vec<f64> = Vec::with_capacity(raw.len());
        let mut mass: Vec<f64> = Vec::with_capacity(raw.len());
        for (x, m) in raw {
            match loc.last() {
                Some(&last) if abs(last - x) <= 1e-12 * 1.0f64.max(abs(x)) => {
                    *mass.last_mut().unwrap() += m;
                }
                _ => {
                    loc.push(x);
                    mass.push(m);
                }
            }
        }
        let mut cum_mass = Vec::with_capacity(loc.len() + 1);
        let mut cum_moment = Vec::with_capacity(loc.len() + 1);
        let (mut cm, mut cmo) = (0.0, 0.0);
        cum_mass.push(0.0);
        cum_moment.push(0.0);
        for (x, m) in loc.iter().zip(&mass) {
            cm += m;
            cmo += m * x;
            cum_mass.push(cm);
            cum_moment.push(cmo);
        }
        Self { loc, mass, cum_mass, cum_moment }
    }

    fn count_le(&self, x: f64) -> usize {
        self.loc.partition_point(|&l| l <= x)
    }

    fn count_lt(&self, x: f64) -> usize {
        self.loc.partition_point(|&l| l < x)
    }

    fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.loc.iter().copied().zip(self.mass.iter().copied())
    }
}

impl GridBody {
    fn new(origin: f64, width: f64, cells: Vec<f64>, atoms: Vec<(f64, f64)>) -> Self {
        let k = cells.len();
        let mut node_cdf = Vec::with_capacity(k + 1);
        let mut node_int = Vec::with_capacity(k + 1);
        let mut node_pm = Vec::with_capacity(k + 1);
        let (mut c, mut i, mut p) = (0.0, 0.0, 0.0);
        node_cdf.push(0.0);
        node_int.push(0.0);
        node_pm.push(0.0);
        for (j, &m) in cells.iter().enumerate() {
            let left = origin + width * j as f64;
            i += c * width + 0.5 * m * width;
            p += m * (left + 0.5 * width);
            c += m;
            node_cdf.push(c);
            node_int.push(i);
            node_pm.push(p);
        }
        Self {
            origin,
            width,
            cells,
            node_cdf,
            node_int,
            node_pm,
            atoms: Atoms::new(atoms),
        }
    }

    fn end(&self) -> f64 {
        self.origin + self.width * self.cells.len() as f64
    }

    /// Cell index and offset inside it, for `x` inside the grid.
    fn locate(&self, x: f64) -> (usize, f64) {
        let k = self.cells.len();
        let t = (x - self.origin) / self.width;
        let j = (floor(t) as isize).clamp(0, k as isize - 1) as usize;
        let dx = (x - (self.origin + self.width * j as f64)).clamp(0.0, self.width);
        (j, dx)
    }

    fn cont_cdf(&self, x: f64) -> f64 {
        if self.cells.is_empty() || x <= self.origin {
            return 0.0;
        }
        if x >= self.end() {
            return self.node_cdf[self.cells.len()];
        }
        let (j, dx) = self.locate(x);
        self.node_cdf[j] + self.cells[j] * dx / self.width
    }

    fn cont_int(&self, x: f64) -> f64 {
        if self.cells.is_empty() || x <= self.origin {
            return 0.0;
        }
        let k = self.cells.len();
        let end = self.end();
        if x >= end {
            return self.node_int[k] + self.node_cdf[k] * (x - end);
        }
        let (j, dx) = self.locate(x);
        self.node_int[j] + self.node_cdf[j] * dx + self.cells[j] * dx * dx / (2.0 * self.width)
    }

    fn cont_pm(&self, x: f64) -> f64 {
        if self.cells.is_empty() || x <= self.origin {
            return 0.0;
        }
        let k = self.cells.len();
        if x >= self.end() {
            return self.node_pm[k];
        }
        let (j, dx) = self.locate(x);
        let left = self.origin + self.width * j as f64;
        self.node_pm[j] + self.cells[j] / self.width * (left * dx + 0.5 * dx * dx)
    }

    fn density(&self, x: f64) -> f64 {
        if self.cells.is_empty() || x < self.origin || x >= self.end() {
            return 0.0;
        }
        let (j, _) = self.locate(x);
        self.cells[j] / self.width
    }

    fn cdf(&self, x: f64) -> f64 {
        self.cont_cdf(x) + self.atoms.cum_mass[self.atoms.count_le(x)]
    }

    fn cdf_left(&self, x: f64) -> f64 {
        self.cont_cdf(x) + self.atoms.cum_mass[self.atoms.count_lt(x)]
    }

    fn integrated(&self, x: f64) -> f64 {
        let c = self.atoms.count_le(x);
        self.cont_int(x) + x * self.atoms.cum_mass[c] - self.atoms.cum_moment[c]
    }

    fn partial_mean(&self, x: f64) -> f64 {
        self.cont_pm(x) + self.atoms.cum_moment[self.atoms.count_le(x)]
    }
}

/// Storage family of a [`Dist1D`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Degenerate(f64),
    Uniform(f64, f64),
    Pareto(TruncatedPareto),
    /// Atoms only.
    Discrete,
    /// Piecewise-linear CDF on a uniform grid, possibly with atoms.
    Grid,
}

impl Dist1D {
    /// Point mass at `at`; the support is the single point.
    pub fn degenerate(at: f64) -> Result<Self> {
        if !at.is_finite() {
            return Err(Error::Domain(alloc::format!("degenerate location {at} not finite")));
        }
        Ok(Self { lo: at, hi: at, body: Body::Degenerate(at) })
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::Domain(alloc::format!("uniform needs a < b, got [{a}, {b}]")));
        }
        Ok(Self { lo: a, hi: b, body: Body::Uniform { a, b } })
    }

    /// Truncated Pareto `H_{alpha,beta}` declared on the support `[lo, hi]`,
    /// which must contain `[alpha, beta]`.
    pub fn pareto(h: TruncatedPareto, lo: f64, hi: f64) -> Result<Self> {
        Self { lo: h.alpha(), hi: h.beta(), body: Body::Pareto(h) }.with_support(lo, hi)
    }

    /// Finite distribution with the given `(location, mass)` atoms. Masses
    /// must sum to one within `1e-9`; they are renormalized exactly.
    pub fn discrete(points: &[(f64, f64)]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Domain("discrete distribution needs at least one atom".into()));
        }
        let total: f64 = points.iter().map(|p| p.1).sum();
        if points.iter().any(|p| !(p.1 >= 0.0) || !p.0.is_finite()) || abs(total - 1.0) > 1e-9 {
            return Err(Error::Domain(alloc::format!(
                "discrete masses must be non-negative and sum to one (sum {total})"
            )));
        }
        let atoms: Vec<(f64, f64)> = points.iter().map(|&(x, m)| (x, m / total)).collect();
        let lo = atoms.iter().filter(|a| a.1 > 0.0).map(|a| a.0).fold(f64::INFINITY, f64::min);
        let hi = atoms.iter().filter(|a| a.1 > 0.0).map(|a| a.0).fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            lo,
            hi,
            body: Body::Grid(GridBody::new(lo, 1.0, Vec::new(), atoms)),
        })
    }

    /// Grid distribution from a right-continuous CDF sampled at the nodes of
    /// a uniform grid over `[lo, hi]`, together with its atoms. The sampled
    /// values include the atom masses; the continuous part is interpolated
    /// linearly between nodes.
    pub fn from_cdf_grid(lo: f64, hi: f64, cdf_values: &[f64], atoms: &[(f64, f64)]) -> Result<Self> {
        if !(lo < hi) || cdf_values.len() < 2 {
            return Err(Error::Domain("grid needs lo < hi and at least two nodes".into()));
        }
        let k = cdf_values.len() - 1;
        let width = (hi - lo) / k as f64;
        if atoms.iter().any(|&(x, m)| x < lo || x > hi || !(m >= 0.0)) {
            return Err(Error::Domain("atoms must lie in the support with non-negative mass".into()));
        }
        let probe = Atoms::new(atoms.to_vec());
        let mut cont = Vec::with_capacity(k + 1);
        for (j, &v) in cdf_values.iter().enumerate() {
            let x = lo + width * j as f64;
            let x = if j == k { hi } else { x };
            cont.push(v - probe.cum_mass[probe.count_le(x)]);
        }
        if abs(cont[0]) > 1e-12 {
            return Err(Error::Domain("continuous part must start at zero".into()));
        }
        let mut cells = Vec::with_capacity(k);
        for j in 0..k {
            let m = cont[j + 1] - cont[j];
            if m < -1e-12 {
                return Err(Error::Domain(alloc::format!("CDF decreases between nodes {j} and {}", j + 1)));
            }
            cells.push(m.max(0.0));
        }
        let last = *cdf_values.last().unwrap();
        if abs(last - 1.0) > 1e-12 {
            return Err(Error::Domain(alloc::format!("CDF must reach one at hi, got {last}")));
        }
        Ok(Self { lo, hi, body: Body::Grid(GridBody::new(lo, width, cells, atoms.to_vec())) })
    }

    /// Same distribution declared on a wider support.
    pub fn with_support(mut self, lo: f64, hi: f64) -> Result<Self> {
        let eps = 1e-12 * 1.0f64.max(abs(lo)).max(abs(hi));
        if !(lo <= self.lo + eps && hi >= self.hi - eps) || !(lo <= hi) {
            return Err(Error::Domain(alloc::format!(
                "support [{lo}, {hi}] does not contain [{}, {}]",
                self.lo, self.hi
            )));
        }
        let (lo, hi) = (lo.min(self.lo), hi.max(self.hi));
        self.lo = lo;
        self.hi = hi;
        if let Body::Grid(g) = &mut self.body {
            if g.cells.is_empty() {
                g.origin = lo;
            } else if abs(g.origin - lo) > eps {
                let w = g.width;
                return Ok(self.rebin(w));
            }
        }
        Ok(self)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// `max(1, hi - lo)`; used to scale absolute tolerances.
    pub fn scale(&self) -> f64 {
        1.0f64.max(self.hi - self.lo)
    }

    pub fn as_pareto(&self) -> Option<TruncatedPareto> {
        match self.body {
            Body::Pareto(h) => Some(h),
            _ => None,
        }
    }

    /// Which family the distribution is stored as.
    pub fn shape(&self) -> Shape {
        match &self.body {
            Body::Degenerate(m) => Shape::Degenerate(*m),
            Body::Uniform { a, b } => Shape::Uniform(*a, *b),
            Body::Pareto(h) => Shape::Pareto(*h),
            Body::Grid(g) if g.cells.is_empty() => Shape::Discrete,
            Body::Grid(_) => Shape::Grid,
        }
    }

    pub fn is_grid(&self) -> bool {
        matches!(self.body, Body::Grid(_))
    }

    /// Right-continuous CDF.
    pub fn cdf(&self, x: f64) -> f64 {
        if x < self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return 1.0;
        }
        match &self.body {
            Body::Degenerate(m) => (x >= *m) as u8 as f64,
            Body::Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
            Body::Pareto(h) => h.cdf(x),
            Body::Grid(g) => g.cdf(x).min(1.0),
        }
    }

    /// Left limit of the CDF, `P(X < x)`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        if x > self.hi {
            return 1.0;
        }
        match &self.body {
            Body::Degenerate(m) => (x > *m) as u8 as f64,
            Body::Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
            Body::Pareto(h) => h.cdf_left(x),
            Body::Grid(g) => g.cdf_left(x).min(1.0),
        }
    }

    /// Mass of the atom at `x` (zero where the CDF is continuous).
    pub fn atom_mass(&self, x: f64) -> f64 {
        match &self.body {
            Body::Degenerate(m) => (x == *m) as u8 as f64,
            Body::Uniform { .. } => 0.0,
            Body::Pareto(h) => h.atom_mass(x),
            Body::Grid(g) => {
                let i = g.atoms.count_lt(x);
                if i < g.atoms.loc.len() && g.atoms.loc[i] == x {
                    g.atoms.mass[i]
                } else {
                    0.0
                }
            }
        }
    }

    /// All atoms as `(location, mass)`, sorted by location.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        match &self.body {
            Body::Degenerate(m) => vec![(*m, 1.0)],
            Body::Uniform { .. } => Vec::new(),
            Body::Pareto(h) => vec![h.atom()],
            Body::Grid(g) => g.atoms.pairs().collect(),
        }
    }

    /// `∫_{lo}^{x} F(t) dt` for `x` in the support.
    pub fn integrated_cdf(&self, x: f64) -> Result<f64> {
        let eps = 1e-12 * 1.0f64.max(abs(self.lo)).max(abs(self.hi));
        if !(x >= self.lo - eps && x <= self.hi + eps) {
            return Err(Error::Domain(alloc::format!(
                "integrated CDF evaluated at {x} outside support [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(self.integrated_unchecked(x.clamp(self.lo, self.hi)))
    }

    pub(crate) fn integrated_unchecked(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        match &self.body {
            Body::Degenerate(m) => (x - m).max(0.0),
            Body::Uniform { a, b } => {
                if x <= *a {
                    0.0
                } else if x < *b {
                    (x - a) * (x - a) / (2.0 * (b - a))
                } else {
                    0.5 * (b - a) + (x - b)
                }
            }
            Body::Pareto(h) => h.integrated_cdf(x),
            Body::Grid(g) => g.integrated(x),
        }
    }

    /// `∫_{[lo, x]} t dF(t)`, including an atom at `x`.
    pub fn partial_mean(&self, x: f64) -> f64 {
        if x < self.lo {
            return 0.0;
        }
        match &self.body {
            Body::Degenerate(m) => {
                if x >= *m {
                    *m
                } else {
                    0.0
                }
            }
            Body::Uniform { a, b } => {
                let y = x.clamp(*a, *b);
                (y * y - a * a) / (2.0 * (b - a))
            }
            Body::Pareto(h) => h.partial_mean(x),
            Body::Grid(g) => g.partial_mean(x),
        }
    }

    /// `∫_{[lo, x)} t dF(t)`, excluding an atom at `x`.
    pub fn partial_mean_left(&self, x: f64) -> f64 {
        self.partial_mean(x) - x * self.atom_mass(x)
    }

    pub fn mean(&self) -> f64 {
        match &self.body {
            Body::Degenerate(m) => *m,
            Body::Uniform { a, b } => 0.5 * (a + b),
            Body::Pareto(h) => h.mean(),
            Body::Grid(g) => g.node_pm[g.cells.len()] + g.atoms.cum_moment[g.atoms.loc.len()],
        }
    }

    /// Density of the continuous part at `x` (zero outside pieces).
    pub fn density(&self, x: f64) -> f64 {
        match &self.body {
            Body::Degenerate(_) => 0.0,
            Body::Uniform { a, b } => {
                if x >= *a && x < *b {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            Body::Pareto(h) => {
                if x >= h.alpha() && x < h.beta() {
                    h.alpha() / (x * x)
                } else {
                    0.0
                }
            }
            Body::Grid(g) => g.density(x),
        }
    }

    /// CDF of the continuous part only.
    fn cont_cdf(&self, x: f64) -> f64 {
        match &self.body {
            Body::Degenerate(_) => 0.0,
            Body::Uniform { .. } => self.cdf(x),
            Body::Pareto(h) => h.cdf_left(x.min(h.beta())),
            Body::Grid(g) => g.cont_cdf(x),
        }
    }

    /// Every point where the CDF or its density changes form: support ends,
    /// grid nodes, atoms, and the kinks of closed-form pieces. Sorted.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts = vec![self.lo, self.hi];
        match &self.body {
            Body::Degenerate(m) => pts.push(*m),
            Body::Uniform { a, b } => pts.extend([*a, *b]),
            Body::Pareto(h) => pts.extend([h.alpha(), h.beta()]),
            Body::Grid(g) => {
                if !g.cells.is_empty() {
                    for j in 0..=g.cells.len() {
                        let x = g.origin + g.width * j as f64;
                        if x <= self.hi {
                            pts.push(x);
                        }
                    }
                }
                pts.extend(g.atoms.loc.iter().copied());
            }
        }
        sort_dedup(&mut pts);
        pts
    }

    /// Grid nodes of the sampled representation (the grid itself for grid
    /// bodies, [`DEFAULT_GRID_CELLS`] uniform cells otherwise).
    pub fn grid_points(&self) -> Vec<f64> {
        match &self.body {
            Body::Grid(g) if !g.cells.is_empty() => {
                (0..=g.cells.len()).map(|j| g.origin + g.width * j as f64).collect()
            }
            _ => {
                let k = DEFAULT_GRID_CELLS;
                let w = (self.hi - self.lo) / k as f64;
                (0..=k).map(|j| self.lo + w * j as f64).collect()
            }
        }
    }

    /// Right-continuous CDF at [`Dist1D::grid_points`].
    pub fn cdf_values(&self) -> Vec<f64> {
        self.grid_points().into_iter().map(|x| self.cdf(x)).collect()
    }

    /// Samples the CDF at `points` equally spaced abscissae in the support.
    pub fn sample_cdf(&self, points: usize) -> Vec<(f64, f64)> {
        let k = points.max(2) - 1;
        let w = (self.hi - self.lo) / k as f64;
        (0..=k)
            .map(|j| {
                let x = if j == k { self.hi } else { self.lo + w * j as f64 };
                (x, self.cdf(x))
            })
            .collect()
    }

    /// Grid representation with the given cell width, starting at `lo`.
    /// Atoms are carried over exactly; the continuous part is sampled at the
    /// new nodes.
    pub fn rebin(&self, width: f64) -> Dist1D {
        let span = self.hi - self.lo;
        let k = if span > 0.0 { (ceil(span / width - 1e-9) as usize).max(1) } else { 0 };
        let mut cells = Vec::with_capacity(k);
        let has_cont = !matches!(self.body, Body::Degenerate(_))
            && !matches!(&self.body, Body::Grid(g) if g.cells.is_empty())
            && !matches!(&self.body, Body::Pareto(h) if h.alpha() == h.beta());
        if has_cont {
            let mut prev = 0.0;
            for j in 0..k {
                let x = self.lo + width * (j + 1) as f64;
                let c = self.cont_cdf(x);
                cells.push((c - prev).max(0.0));
                prev = c;
            }
        }
        Dist1D {
            lo: self.lo,
            hi: self.hi,
            body: Body::Grid(GridBody::new(self.lo, width, cells, self.atoms())),
        }
    }

    /// Grid representation with `cells` uniform cells over the support.
    pub fn to_grid(&self, cells: usize) -> Dist1D {
        let span = self.hi - self.lo;
        if span <= 0.0 {
            return Dist1D {
                lo: self.lo,
                hi: self.hi,
                body: Body::Grid(GridBody::new(self.lo, 1.0, Vec::new(), self.atoms())),
            };
        }
        self.rebin(span / cells.max(1) as f64)
    }

    /// Distribution of `c * X` for `c > 0`.
    pub fn scaled(&self, c: f64) -> Dist1D {
        let body = match &self.body {
            Body::Degenerate(m) => Body::Degenerate(m * c),
            Body::Uniform { a, b } => Body::Uniform { a: a * c, b: b * c },
            Body::Pareto(h) => Body::Pareto(h.scaled(c)),
            Body::Grid(g) => Body::Grid(GridBody::new(
                g.origin * c,
                g.width * c,
                g.cells.clone(),
                g.atoms.pairs().map(|(x, m)| (x * c, m)).collect(),
            )),
        };
        Dist1D { lo: self.lo * c, hi: self.hi * c, body }
    }

    /// Distribution of the sum of independent draws from `self` and `other`.
    ///
    /// Cell masses are convolved directly: two uniform cells of width `w`
    /// sum to a triangle over two output cells, split half and half; an atom
    /// shifts a cell and splits it over the (at most two) output cells it
    /// overlaps. Both splits preserve mass and mean exactly.
    pub fn convolve(&self, other: &Dist1D) -> Dist1D {
        let a = self.as_grid(None);
        let width = grid_width(&a).or_else(|| grid_width(&other.as_grid(None)));
        let a = match width {
            Some(w) => self.as_grid(Some(w)),
            None => a,
        };
        let b = match width {
            Some(w) => other.as_grid(Some(w)),
            None => other.as_grid(None),
        };
        let (ga, gb) = (grid_body(&a), grid_body(&b));
        let lo = a.lo + b.lo;
        let hi = a.hi + b.hi;
        let w = width.unwrap_or(1.0);

        let mut atoms = Vec::with_capacity(ga.atoms.loc.len() * gb.atoms.loc.len());
        for (xa, ma) in ga.atoms.pairs() {
            for (xb, mb) in gb.atoms.pairs() {
                atoms.push((xa + xb, ma * mb));
            }
        }

        let need = if width.is_some() && (hi - lo) > 0.0 {
            (ceil((hi - lo) / w - 1e-9) as usize).max(1)
        } else {
            0
        };
        let mut out = vec![0.0; need];
        let na = ga.cells.len();
        let nb = gb.cells.len();
        if na > 0 && nb > 0 {
            let mut conv = vec![0.0; na + nb - 1];
            for (i, &ai) in ga.cells.iter().enumerate() {
                if ai == 0.0 {
                    continue;
                }
                let row = &mut conv[i..i + nb];
                for (c, &bj) in row.iter_mut().zip(gb.cells.iter()) {
                    *c += ai * bj;
                }
            }
            for (k, &c) in conv.iter().enumerate() {
                deposit(&mut out, k, 0.5 * c);
                deposit(&mut out, k + 1, 0.5 * c);
            }
        }
        // atoms of one side shift the cells of the other; shifted cell j
        // starts at x + cells_origin + j w
        let mut shift = |atoms: &Atoms, cells: &[f64], cells_origin: f64| {
            for (x, m) in atoms.pairs() {
                let mut t = (x + cells_origin - lo) / w;
                let r = libm::round(t);
                if abs(t - r) < 1e-9 {
                    t = r;
                }
                let base = floor(t);
                let f = t - base;
                let base = base as isize;
                for (j, &cj) in cells.iter().enumerate() {
                    if cj == 0.0 {
                        continue;
                    }
                    let idx = base + j as isize;
                    deposit_signed(&mut out, idx, (1.0 - f) * m * cj);
                    if f > 0.0 {
                        deposit_signed(&mut out, idx + 1, f * m * cj);
                    }
                }
            }
        };
        if nb > 0 {
            shift(&ga.atoms, &gb.cells, gb.origin);
        }
        if na > 0 {
            shift(&gb.atoms, &ga.cells, ga.origin);
        }
        Dist1D { lo, hi, body: Body::Grid(GridBody::new(lo, w, out, atoms)) }
    }

    /// Distribution of `θ₁ + … + θ_n` for iid draws from `self`.
    pub fn convolve_iid(&self, n: usize) -> Dist1D {
        self.convolve_iid_with(n, DEFAULT_GRID_CELLS)
    }

    /// [`Dist1D::convolve_iid`] with an explicit grid resolution for
    /// closed-form marginals.
    pub fn convolve_iid_with(&self, n: usize, cells: usize) -> Dist1D {
        assert!(n >= 1, "convolve_iid needs n >= 1");
        if n == 1 {
            return self.clone();
        }
        let base = match &self.body {
            Body::Grid(_) => self.clone(),
            _ => self.to_grid(cells),
        };
        let mut acc = base.clone();
        for _ in 1..n {
            acc = acc.convolve(&base);
        }
        acc
    }

    /// Distribution of the sample mean `(θ₁ + … + θ_n) / n`.
    pub fn sample_mean_dist(&self, n: usize) -> Dist1D {
        self.sample_mean_dist_with(n, DEFAULT_GRID_CELLS)
    }

    pub fn sample_mean_dist_with(&self, n: usize, cells: usize) -> Dist1D {
        if n == 1 {
            return self.clone();
        }
        let mut d = self.convolve_iid_with(n, cells).scaled(1.0 / n as f64);
        // keep the support bit-exact
        d.lo = self.lo;
        d.hi = self.hi;
        d
    }

    /// `∫ f dF`. Atoms are summed exactly; continuous pieces use composite
    /// Gauss-Legendre panels split at `splits` (kinks of `f`).
    pub fn expect(&self, f: &mut dyn FnMut(f64) -> f64, splits: &[f64]) -> f64 {
        let mut acc: f64 = self.atoms().iter().map(|&(x, m)| m * f(x)).sum();
        match &self.body {
            Body::Degenerate(_) => {}
            Body::Uniform { a, b } => {
                let d = 1.0 / (b - a);
                for (l, r) in pieces(*a, *b, splits) {
                    acc += d * gauss_legendre(f, l, r, 32);
                }
            }
            Body::Pareto(h) => {
                if h.alpha() < h.beta() {
                    let al = h.alpha();
                    for (l, r) in pieces(al, h.beta(), splits) {
                        // substitute x = alpha e^u: density alpha / x^2 dx = e^{-u} du
                        let (ul, ur) = (crate::math::ln(l / al), crate::math::ln(r / al));
                        let mut g = |u: f64| {
                            let x = al * crate::math::exp(u);
                            f(x) * crate::math::exp(-u)
                        };
                        acc += gauss_legendre(&mut g, ul, ur, 32);
                    }
                }
            }
            Body::Grid(g) => {
                for (j, &m) in g.cells.iter().enumerate() {
                    if m == 0.0 {
                        continue;
                    }
                    let l = g.origin + g.width * j as f64;
                    let r = l + g.width;
                    let d = m / g.width;
                    for (pl, pr) in pieces(l, r, splits) {
                        acc += d * gauss_legendre(f, pl, pr, 1);
                    }
                }
            }
        }
        acc
    }

    /// Partial mean of the continuous part only.
    fn cont_partial_mean(&self, x: f64) -> f64 {
        match &self.body {
            Body::Degenerate(_) => 0.0,
            Body::Uniform { .. } => self.partial_mean(x),
            Body::Pareto(h) => {
                if x <= h.alpha() {
                    0.0
                } else {
                    h.alpha() * crate::math::ln(x.min(h.beta()) / h.alpha())
                }
            }
            Body::Grid(g) => g.cont_pm(x),
        }
    }

    /// Finite approximation: every atom kept exactly, the continuous part cut
    /// into `cells` pieces (geometric for Pareto bodies, uniform otherwise),
    /// each represented by its conditional mean. Preserves mass and mean.
    pub fn quantize(&self, cells: usize) -> Vec<(f64, f64)> {
        let mut out = self.atoms();
        let range = match &self.body {
            Body::Degenerate(_) => None,
            Body::Uniform { a, b } => Some((*a, *b, false)),
            Body::Pareto(h) => (h.alpha() < h.beta()).then(|| (h.alpha(), h.beta(), true)),
            Body::Grid(g) => (!g.cells.is_empty()).then(|| (g.origin, g.end(), false)),
        };
        if let Some((a, b, geometric)) = range {
            let k = cells.max(1);
            let edge = |i: usize| {
                if i == k {
                    b
                } else if geometric {
                    a * crate::math::exp(crate::math::ln(b / a) * i as f64 / k as f64)
                } else {
                    a + (b - a) * i as f64 / k as f64
                }
            };
            for i in 0..k {
                let (l, r) = (edge(i), edge(i + 1));
                let m = self.cont_cdf(r) - self.cont_cdf(l);
                if m > 1e-300 {
                    let mom = self.cont_partial_mean(r) - self.cont_partial_mean(l);
                    out.push(((mom / m).clamp(l, r), m));
                }
            }
        }
        out.sort_by(|x, y| x.0.total_cmp(&y.0));
        out
    }

    /// Grid version of `self`, optionally forced onto cells of `width`.
    fn as_grid(&self, width: Option<f64>) -> Dist1D {
        match (&self.body, width) {
            (Body::Grid(g), Some(w)) if !g.cells.is_empty() && abs(g.width - w) > 1e-12 * w => self.rebin(w),
            (Body::Grid(_), _) => self.clone(),
            (Body::Degenerate(_), _) => self.to_grid(1),
            (Body::Pareto(h), _) if h.alpha() == h.beta() => self.to_grid(1),
            (_, Some(w)) => self.rebin(w),
            (_, None) => self.to_grid(DEFAULT_GRID_CELLS),
        }
    }
}

fn grid_width(d: &Dist1D) -> Option<f64> {
    match &d.body {
        Body::Grid(g) if !g.cells.is_empty() => Some(g.width),
        _ => None,
    }
}

fn grid_body(d: &Dist1D) -> &GridBody {
    match &d.body {
        Body::Grid(g) => g,
        _ => unreachable!("as_grid always yields a grid body"),
    }
}

fn deposit(out: &mut [f64], idx: usize, m: f64) {
    if out.is_empty() {
        return;
    }
    let i = idx.min(out.len() - 1);
    out[i] += m;
}

fn deposit_signed(out: &mut [f64], idx: isize, m: f64) {
    let i = idx.max(0) as usize;
    deposit(out, i, m);
}

fn sort_dedup(v: &mut Vec<f64>) {
    v.sort_by(f64::total_cmp);
    v.dedup();
}

/// Splits `[a, b]` at the points of `splits` strictly inside it.
fn pieces(a: f64, b: f64, splits: &[f64]) -> Vec<(f64, f64)> {
    let mut cuts = vec![a];
    cuts.extend(splits.iter().copied().filter(|&s| s > a && s < b));
    cuts.push(b);
    sort_dedup(&mut cuts);
    cuts.windows(2).map(|w| (w[0], w[1])).collect()
}

/// Location and value of the smallest integrated-CDF gap
/// `∫F_spread - ∫F_contraction` found on an interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapMin {
    pub at: f64,
    pub gap: f64,
}

fn gap_at(spread: &Dist1D, contraction: &Dist1D, x: f64) -> f64 {
    spread.integrated_unchecked(x) - contraction.integrated_unchecked(x)
}

/// Minimizes the integrated-CDF gap between `spread` and `contraction` over
/// `[from, to]`.
///
/// The gap is evaluated on the union of both distributions' breakpoints and a
/// uniform refinement; around the smallest local minima the derivative
/// `F_spread - F_contraction` is bisected for its sign change.
pub fn min_integrated_gap(spread: &Dist1D, contraction: &Dist1D, from: f64, to: f64) -> GapMin {
    let mut xs: Vec<f64> = spread
        .breakpoints()
        .into_iter()
        .chain(contraction.breakpoints())
        .filter(|&x| x >= from && x <= to)
        .collect();
    xs.push(from);
    xs.push(to);
    if to > from {
        let w = (to - from) / UNIFORM_REFINEMENT as f64;
        xs.extend((1..UNIFORM_REFINEMENT).map(|j| from + w * j as f64));
    }
    sort_dedup(&mut xs);
    let ds: Vec<f64> = xs.iter().map(|&x| gap_at(spread, contraction, x)).collect();

    let mut best = GapMin { at: xs[0], gap: ds[0] };
    for (i, &d) in ds.iter().enumerate() {
        if d < best.gap {
            best = GapMin { at: xs[i], gap: d };
        }
    }
    if xs.len() < 2 {
        return best;
    }

    let mut locals: Vec<usize> = (0..xs.len())
        .filter(|&i| {
            let l = if i > 0 { ds[i - 1] } else { f64::INFINITY };
            let r = if i + 1 < ds.len() { ds[i + 1] } else { f64::INFINITY };
            ds[i] <= l && ds[i] <= r
        })
        .collect();
    locals.sort_by(|&a, &b| ds[a].total_cmp(&ds[b]));
    locals.truncate(REFINE_CANDIDATES);

    let slope_right = |x: f64| spread.cdf(x) - contraction.cdf(x);
    let slope_left = |x: f64| spread.cdf_left(x) - contraction.cdf_left(x);
    for i in locals {
        for (l, r) in [(i.wrapping_sub(1), i), (i, i + 1)] {
            if l >= xs.len() || r >= xs.len() {
                continue;
            }
            let (mut a, mut b) = (xs[l], xs[r]);
            if !(slope_right(a) < 0.0 && slope_left(b) > 0.0) {
                continue;
            }
            for _ in 0..100 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                if spread.cdf(m) - contraction.cdf(m) < 0.0 {
                    a = m;
                } else {
                    b = m;
                }
            }
            let m = 0.5 * (a + b);
            let d = gap_at(spread, contraction, m);
            if d < best.gap {
                best = GapMin { at: m, gap: d };
            }
        }
    }
    best
}

fn check_same_support(a: &Dist1D, b: &Dist1D) -> Result<()> {
    let eps = 1e-9 * a.scale();
    if abs(a.lo - b.lo) > eps || abs(a.hi - b.hi) > eps {
        return Err(Error::Domain(alloc::format!(
            "supports differ: [{}, {}] vs [{}, {}]",
            a.lo, a.hi, b.lo, b.hi
        )));
    }
    Ok(())
}

/// True iff `spread` is a mean-preserving spread of `contraction`: the
/// integrated CDF of `spread` dominates that of `contraction` everywhere
/// (up to `tol`) and the two means agree within `tol`.
pub fn is_mps(spread: &Dist1D, contraction: &Dist1D, tol: f64) -> Result<bool> {
    check_same_support(spread, contraction)?;
    if abs(spread.mean() - contraction.mean()) > tol {
        return Ok(false);
    }
    let g = min_integrated_gap(spread, contraction, spread.lo, spread.hi);
    Ok(g.gap >= -tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> Dist1D {
        Dist1D::uniform(0.0, 1.0).unwrap().convolve_iid(2)
    }

    #[test]
    fn cdf_examples() {
        let u = Dist1D::uniform(0.0, 1.0).unwrap();
        assert_eq!(u.cdf(0.5), 0.5);
        assert_eq!(u.cdf(-1.0), 0.0);
        assert_eq!(u.cdf(2.0), 1.0);
        assert!((tri().cdf(1.0) - 0.5).abs() < 1e-12);
        let h = TruncatedPareto::new(1.0, 2.0).unwrap();
        let d = Dist1D::pareto(h, 1.0, 2.0).unwrap();
        assert!((d.cdf(1.5) - (1.0 - 1.0 / 1.5)).abs() < 1e-15);
    }

    #[test]
    fn integrated_cdf_examples() {
        let d = Dist1D::degenerate(0.4).unwrap().with_support(0.0, 1.0).unwrap();
        assert!((d.integrated_cdf(0.9).unwrap() - 0.5).abs() < 1e-15);
        let u = Dist1D::uniform(0.0, 1.0).unwrap();
        assert_eq!(u.integrated_cdf(1.0).unwrap(), 0.5);
        assert!(u.integrated_cdf(1.5).is_err());
        assert!(u.integrated_cdf(-0.1).is_err());
    }

    #[test]
    fn atom_mass_examples() {
        let u = Dist1D::uniform(0.0, 1.0).unwrap();
        assert_eq!(u.atom_mass(0.5), 0.0);
        let h = Dist1D::pareto(TruncatedPareto::new(1.0, 2.0).unwrap(), 1.0, 2.0).unwrap();
        assert_eq!(h.atom_mass(2.0), 0.5);
        let d = Dist1D::degenerate(0.3).unwrap();
        assert_eq!(d.atom_mass(0.3), 1.0);
    }

    #[test]
    fn convolution_of_uniforms_is_triangular() {
        let t = tri();
        assert_eq!(t.lo(), 0.0);
        assert_eq!(t.hi(), 2.0);
        assert!((t.mean() - 1.0).abs() < 1e-12);
        // exact at nodes: F(x) = x^2 / 2 on [0, 1]
        for x in [0.25, 0.5, 0.75] {
            assert!((t.cdf(x) - x * x / 2.0).abs() < 1e-12, "x = {x}");
        }
        assert!((t.cdf(1.5) - (1.0 - 0.125)).abs() < 1e-12);
    }

    #[test]
    fn convolution_with_atoms_keeps_them() {
        let d = Dist1D::discrete(&[(0.0, 0.5), (1.0, 0.5)]).unwrap();
        let s = d.convolve(&d);
        assert_eq!(s.atom_mass(1.0), 0.5);
        assert_eq!(s.atom_mass(0.0), 0.25);
        assert_eq!(s.atom_mass(2.0), 0.25);
        let h = Dist1D::pareto(TruncatedPareto::new(0.5, 1.0).unwrap(), 0.0, 1.0).unwrap();
        let hh = h.convolve_iid(2);
        assert!((hh.atom_mass(2.0) - 0.25).abs() < 1e-15);
        // the grid carries the continuous part with uniform in-cell mass
        assert!((hh.mean() - 2.0 * h.mean()).abs() < 1e-7);
    }

    #[test]
    fn sample_mean_preserves_mean_and_support() {
        let u = Dist1D::uniform(0.0, 1.0).unwrap();
        for n in 1..=3 {
            let m = u.sample_mean_dist(n);
            assert_eq!((m.lo(), m.hi()), (0.0, 1.0));
            assert!((m.mean() - 0.5).abs() < 1e-9);
        }
        let f1 = u.sample_mean_dist(1).to_grid(4096);
        let f2 = u.sample_mean_dist(2);
        assert!(is_mps(&f1, &f2, 1e-9).unwrap());
        assert!(!is_mps(&f2, &f1, 1e-9).unwrap());
    }

    #[test]
    fn mps_degenerate_cases() {
        let f = tri();
        let d = Dist1D::degenerate(1.0).unwrap().with_support(0.0, 2.0).unwrap();
        assert!(is_mps(&f, &d, 1e-9).unwrap());
        assert!(!is_mps(&d, &f, 1e-9).unwrap());
        let other = Dist1D::uniform(0.0, 3.0).unwrap();
        assert!(matches!(is_mps(&f, &other, 1e-9), Err(Error::Domain(_))));
    }

    #[test]
    fn from_cdf_grid_round_trip() {
        let d = Dist1D::from_cdf_grid(0.0, 1.0, &[0.0, 0.25, 0.5, 1.0], &[(1.0, 0.25)]).unwrap();
        assert!((d.cdf(1.0 / 3.0) - 0.25).abs() < 1e-15);
        assert_eq!(d.atom_mass(1.0), 0.25);
        assert!((d.cdf_left(1.0) - 0.75).abs() < 1e-15);
        assert!(Dist1D::from_cdf_grid(0.0, 1.0, &[0.0, 0.6, 0.5, 1.0], &[]).is_err());
        assert!(Dist1D::from_cdf_grid(0.0, 1.0, &[0.0, 0.5, 0.9], &[]).is_err());
    }

    #[test]
    fn expect_matches_moments() {
        let h = Dist1D::pareto(TruncatedPareto::new(0.5, 1.5).unwrap(), 0.0, 2.0).unwrap();
        let m = h.expect(&mut |x| x, &[]);
        assert!((m - h.mean()).abs() < 1e-12);
        let t = tri();
        let m2 = t.expect(&mut |x| x * x, &[]);
        // E[S^2] = Var + 1 = 1/6 + 1 for the sum of two uniforms
        assert!((m2 - (1.0 + 1.0 / 6.0)).abs() < 1e-6);
    }
}
