//! Finite-difference Dirichlet-energy spectra on the circle and flat 2-tori,
//! Neumann spectra of pieces, and the partition lower bound
//! `e_N(X) >= min_i e_1(U_i)`.
//!
//! Periodic grids are diagonalised by Fourier modes, so their spectra come
//! straight from the stencil symbol. Arcs give tridiagonal Neumann matrices,
//! handled by Sturm bisection; general grid pieces use Lanczos.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model_spaces::{euclidean_ball_volume, ModelSpace};
use crate::rng;

/// Smallest piece, in grid cells per side (arcs) or cells (grid pieces).
pub const MIN_PIECE_CELLS: usize = 4;
/// Relative slack granted to the localization inequality.
pub const LOCALIZATION_SLACK: f64 = 0.02;
const LANCZOS_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigenSpectrum {
    /// Ascending, with multiplicity.
    pub eigenvalues: Vec<f64>,
    pub grid: usize,
    pub space: String,
}

/// Spacings and inverse metric of the periodic grid on `space`.
struct Grid {
    dim: usize,
    m: usize,
    /// Inverse Gram matrix of the lattice basis (identity times `1/L^2` on
    /// the circle).
    g_inv: [[f64; 2]; 2],
}

impl Grid {
    fn new(space: &ModelSpace, m: usize) -> Result<Self> {
        match space {
            ModelSpace::Circle { length } => Ok(Grid { dim: 1, m, g_inv: [[1.0 / (length * length), 0.0], [0.0, 0.0]] }),
            ModelSpace::FlatTorus(t) if t.dim() == 2 => {
                let b = t.basis();
                let g = [
                    [b[0][0] * b[0][0] + b[0][1] * b[0][1], b[0][0] * b[1][0] + b[0][1] * b[1][1]],
                    [b[0][0] * b[1][0] + b[0][1] * b[1][1], b[1][0] * b[1][0] + b[1][1] * b[1][1]],
                ];
                let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
                Ok(Grid { dim: 2, m, g_inv: [[g[1][1] / det, -g[0][1] / det], [-g[1][0] / det, g[0][0] / det]] })
            }
            ModelSpace::FlatTorus(t) => Err(Error::UnsupportedDimension(t.dim())),
            _ => Err(Error::NotApplicable(format!("no periodic grid on {}", space.name()))),
        }
    }

    /// Eigenvalue of the second-order stencil (central differences, including
    /// the mixed term on skew lattices) on the Fourier mode `k`.
    fn symbol(&self, k: [usize; 2]) -> f64 {
        let m = self.m as f64;
        let w = k.map(|ki| 2.0 * m * (PI * ki as f64 / m).sin());
        let c = k.map(|ki| (PI * ki as f64 / m).cos());
        let gi = &self.g_inv;
        if self.dim == 1 {
            return gi[0][0] * w[0] * w[0];
        }
        gi[0][0] * w[0] * w[0] + gi[1][1] * w[1] * w[1] + 2.0 * gi[0][1] * w[0] * w[1] * c[0] * c[1]
    }

    fn all(&self) -> Vec<f64> {
        let mut out: Vec<f64> = if self.dim == 1 {
            (0..self.m).map(|k| self.symbol([k, 0])).collect()
        } else {
            (0..self.m)
                .into_par_iter()
                .flat_map_iter(|k1| (0..self.m).map(move |k2| [k1, k2]))
                .map(|k| self.symbol(k))
                .collect()
        };
        out.sort_by(f64::total_cmp);
        out
    }
}

fn describe(space: &ModelSpace) -> String {
    match space {
        ModelSpace::Circle { length } => format!("circle(L={length})"),
        ModelSpace::FlatTorus(t) => format!("torus({:?})", t.basis()),
        other => other.name().to_string(),
    }
}

/// The `k` smallest eigenvalues of the periodic finite-difference Laplacian
/// on an `M`-cell circle or an `M x M` torus grid.
///
/// Resolution requires `M >= 8K` on the circle and `M >= 8 ceil(sqrt K)` on
/// a torus, i.e. eight cells per wavelength of the highest mode returned.
pub fn laplace_spectrum(space: &ModelSpace, m: usize, k: usize) -> Result<EigenSpectrum> {
    let grid = Grid::new(space, m)?;
    if k == 0 {
        return invalid("K >= 1 required");
    }
    let per_dim = if grid.dim == 1 { k } else { (k as f64).sqrt().ceil() as usize };
    if m < 8 * per_dim {
        return Err(Error::Resolution(format!("M = {m} too small for {k} eigenvalues")));
    }
    let mut eigenvalues = grid.all();
    eigenvalues.truncate(k);
    Ok(EigenSpectrum { eigenvalues, grid: m, space: describe(space) })
}

/// A piece of a partition of the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Subdomain {
    /// Cells `start, start + 1, ..., start + len - 1` of the circle grid,
    /// taken cyclically.
    Arc { start: usize, len: usize },
    /// Flattened cell indices `j * M + i` of the torus grid.
    Cells(Vec<usize>),
}

impl Subdomain {
    fn cells(&self, m: usize) -> Vec<usize> {
        match self {
            Subdomain::Arc { start, len } => (0..*len).map(|i| (start + i) % m).collect(),
            Subdomain::Cells(c) => c.clone(),
        }
    }
}

/// Arcs of the given lengths laid end to end from cell 0, snapped to the
/// `M`-cell grid of a circle of length `circumference`.
pub fn arcs_from_lengths(circumference: f64, m: usize, lengths: &[f64]) -> Result<Vec<Subdomain>> {
    let total: f64 = lengths.iter().sum();
    if lengths.iter().any(|l| !(*l > 0.0)) || (total - circumference).abs() > 1e-9 * circumference {
        return invalid("arc lengths must be positive and sum to the circumference");
    }
    let mut out = Vec::with_capacity(lengths.len());
    let mut acc = 0.0;
    let mut start = 0;
    for l in lengths {
        acc += l;
        let end = ((acc / circumference) * m as f64).round() as usize;
        out.push(Subdomain::Arc { start, len: end - start });
        start = end;
    }
    Ok(out)
}

/// A random partition of the `M`-cell circle grid into `pieces` arcs of at
/// least [`MIN_PIECE_CELLS`] cells, starting at a random cell.
pub fn random_arc_partition(m: usize, pieces: usize, r: &mut rng::Rng) -> Result<Vec<Subdomain>> {
    if pieces == 0 || pieces * MIN_PIECE_CELLS > m {
        return invalid(format!("cannot cut {m} cells into {pieces} arcs of at least {MIN_PIECE_CELLS}"));
    }
    let spare = m - pieces * MIN_PIECE_CELLS;
    let weights: Vec<f64> = (0..pieces).map(|_| r.random::<f64>() + 1e-12).collect();
    let total: f64 = weights.iter().sum();
    let mut extra: Vec<usize> = weights.iter().map(|w| (spare as f64 * w / total).floor() as usize).collect();
    let left = spare - extra.iter().sum::<usize>();
    for e in extra.iter_mut().take(left) {
        *e += 1;
    }
    let mut start = r.random_range(0..m);
    Ok(extra
        .into_iter()
        .map(|e| {
            let piece = Subdomain::Arc { start, len: MIN_PIECE_CELLS + e };
            start = (start + MIN_PIECE_CELLS + e) % m;
            piece
        })
        .collect())
}

/// Smallest nonzero Neumann eigenvalue of a piece of the `M` grid.
pub fn neumann_first_eigenvalue(space: &ModelSpace, m: usize, piece: &Subdomain) -> Result<f64> {
    match (space, piece) {
        (ModelSpace::Circle { length }, Subdomain::Arc { len, .. }) => {
            if *len < MIN_PIECE_CELLS {
                return Err(Error::Resolution(format!("arc of {len} cells")));
            }
            if *len > m {
                return invalid("arc longer than the circle");
            }
            let h = length / m as f64;
            Ok(neumann_path(*len, h))
        }
        (ModelSpace::FlatTorus(t), Subdomain::Cells(cells)) if t.dim() == 2 => {
            let b = t.basis();
            if (b[0][0] * b[1][0] + b[0][1] * b[1][1]).abs() > 1e-12 {
                return Err(Error::NotApplicable("grid pieces need a rectangular torus".into()));
            }
            if cells.len() < MIN_PIECE_CELLS {
                return Err(Error::Resolution(format!("piece of {} cells", cells.len())));
            }
            let hx = b[0][0].hypot(b[0][1]) / m as f64;
            let hy = b[1][0].hypot(b[1][1]) / m as f64;
            let op = GridPiece::new(m, cells, hx, hy)?;
            op.first_nonzero(rng::stream(cells.len() as u64, "neumann_first_eigenvalue", cells[0] as u64))
        }
        _ => invalid("piece does not match the space"),
    }
}

/// `e_1` of the cell-centred Neumann Laplacian on a path of `n` cells.
fn neumann_path(n: usize, h: f64) -> f64 {
    let diag: Vec<f64> = (0..n).map(|i| if i == 0 || i == n - 1 { 1.0 } else { 2.0 } / (h * h)).collect();
    let off = vec![-1.0 / (h * h); n - 1];
    tridiagonal_eigenvalue(&diag, &off, 1)
}

/// Number of eigenvalues below `x` (Sturm count via the LDL^T pivots).
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        let denom = if q == 0.0 { f64::EPSILON * (off[i - 1].abs() + 1.0) } else { q };
        q = diag[i] - x - off[i - 1] * off[i - 1] / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `j`-th smallest eigenvalue (from 0) of a symmetric tridiagonal
/// matrix, by bisection on the Sturm count.
pub fn tridiagonal_eigenvalue(diag: &[f64], off: &[f64], j: usize) -> f64 {
    // Gershgorin interval.
    let n = diag.len();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, off, mid) > j {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Neumann five-point Laplacian restricted to a set of cells: edges leaving
/// the set are dropped.
struct GridPiece {
    /// Neighbour lists with edge weights.
    adj: Vec<Vec<(usize, f64)>>,
    degree: Vec<f64>,
    /// Connected components, as lists of local indices.
    components: Vec<Vec<usize>>,
}

impl GridPiece {
    fn new(m: usize, cells: &[usize], hx: f64, hy: f64) -> Result<Self> {
        let mut local = vec![usize::MAX; m * m];
        for (k, &c) in cells.iter().enumerate() {
            if c >= m * m || local[c] != usize::MAX {
                return invalid("cells must be distinct grid indices");
            }
            local[c] = k;
        }
        let (wx, wy) = (1.0 / (hx * hx), 1.0 / (hy * hy));
        let mut adj = vec![Vec::new(); cells.len()];
        for (k, &c) in cells.iter().enumerate() {
            let (i, j) = (c % m, c / m);
            let nbrs = [
                ((i + 1) % m + j * m, wx),
                ((i + m - 1) % m + j * m, wx),
                (i + ((j + 1) % m) * m, wy),
                (i + ((j + m - 1) % m) * m, wy),
            ];
            for (nc, w) in nbrs {
                if nc != c && local[nc] != usize::MAX {
                    adj[k].push((local[nc], w));
                }
            }
        }
        let degree = adj.iter().map(|a| a.iter().map(|e| e.1).sum()).collect();
        let mut comp = vec![usize::MAX; cells.len()];
        let mut components = Vec::new();
        for s in 0..cells.len() {
            if comp[s] != usize::MAX {
                continue;
            }
            let id = components.len();
            let mut stack = vec![s];
            let mut members = Vec::new();
            comp[s] = id;
            while let Some(v) = stack.pop() {
                members.push(v);
                for &(u, _) in &adj[v] {
                    if comp[u] == usize::MAX {
                        comp[u] = id;
                        stack.push(u);
                    }
                }
            }
            members.sort_unstable();
            components.push(members);
        }
        Ok(GridPiece { adj, degree, components })
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (k, out) in y.iter_mut().enumerate() {
            let mut s = self.degree[k] * x[k];
            for &(u, w) in &self.adj[k] {
                s -= w * x[u];
            }
            *out = s;
        }
    }

    /// Removes the locally constant functions (the kernel).
    fn deflate(&self, x: &mut [f64]) {
        for c in &self.components {
            let mean = c.iter().map(|&i| x[i]).sum::<f64>() / c.len() as f64;
            c.iter().for_each(|&i| x[i] -= mean);
        }
    }

    fn rayleigh(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; x.len()];
        self.apply(x, &mut y);
        dot(x, &y) / dot(x, x)
    }

    /// Lanczos with full reorthogonalisation on the complement of the
    /// kernel, restarted from the best Ritz vector until its residual is
    /// below `LANCZOS_TOL` times the operator norm bound.
    fn first_nonzero(&self, mut r: rng::Rng) -> Result<f64> {
        let n = self.degree.len();
        if self.components.len() == n {
            return Err(Error::Resolution("piece has no interior edges".into()));
        }
        let norm = 2.0 * self.degree.iter().fold(0.0f64, |a, &d| a.max(d));
        let mut v0: Vec<f64> = (0..n).map(|_| r.sample(StandardNormal)).collect();
        let steps = n.min(400);
        for _ in 0..20 {
            self.deflate(&mut v0);
            let (ritz, vec) = self.lanczos(&v0, steps - self.components.len().min(steps - 1));
            let mut ax = vec![0.0; n];
            self.apply(&vec, &mut ax);
            let res: f64 = ax.iter().zip(&vec).map(|(a, x)| (a - ritz * x).powi(2)).sum::<f64>().sqrt();
            if res <= LANCZOS_TOL * norm {
                return Ok(ritz);
            }
            v0 = vec;
        }
        Err(Error::SearchFailure("Lanczos did not converge".into()))
    }

    /// Smallest Ritz pair of a `steps`-step Lanczos run from `v0`.
    fn lanczos(&self, v0: &[f64], steps: usize) -> (f64, Vec<f64>) {
        let n = v0.len();
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(steps);
        let (mut alpha, mut beta) = (Vec::new(), Vec::new());
        let mut q = v0.to_vec();
        let s = dot(&q, &q).sqrt();
        q.iter_mut().for_each(|x| *x /= s);
        let mut w = vec![0.0; n];
        for _ in 0..steps {
            self.apply(&q, &mut w);
            let a = dot(&q, &w);
            // Full reorthogonalisation, twice, against the basis, q and the kernel.
            basis.push(q.clone());
            for _ in 0..2 {
                for b in &basis {
                    let p = dot(b, &w);
                    w.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
                }
                self.deflate(&mut w);
            }
            alpha.push(a);
            let bnorm = dot(&w, &w).sqrt();
            if bnorm <= 1e-14 * (a.abs() + 1.0) {
                break;
            }
            beta.push(bnorm);
            q = w.iter().map(|x| x / bnorm).collect();
        }
        let k = alpha.len();
        let t = DMatrix::from_fn(k, k, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let (idx, &val) = eig.eigenvalues.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        let y = eig.eigenvectors.column(idx);
        let mut x = vec![0.0; n];
        for (c, b) in y.iter().zip(&basis) {
            x.iter_mut().zip(b).for_each(|(xi, bi)| *xi += c * bi);
        }
        let xn = dot(&x, &x).sqrt();
        x.iter_mut().for_each(|v| *v /= xn);
        (val, x)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocalizationReport {
    pub n: usize,
    /// `e_N` of the whole space, counting `e_0 = 0`.
    pub e_n: f64,
    /// `e_1` of each piece.
    pub piece_e1: Vec<f64>,
    pub min_e1: f64,
    pub pass: bool,
}

/// Checks `e_N(X) >= min_i e_1(U_i)` for a partition of the grid into `N`
/// pieces, with relative slack [`LOCALIZATION_SLACK`].
pub fn localization_check(space: &ModelSpace, m: usize, partition: &[Subdomain]) -> Result<LocalizationReport> {
    let grid = Grid::new(space, m)?;
    let n = partition.len();
    if n == 0 {
        return invalid("empty partition");
    }
    let cells = if grid.dim == 1 { m } else { m * m };
    let mut owner = vec![usize::MAX; cells];
    for (p, piece) in partition.iter().enumerate() {
        match (grid.dim, piece) {
            (1, Subdomain::Arc { .. }) | (2, Subdomain::Cells(_)) => {}
            _ => return invalid("piece does not match the space"),
        }
        for c in piece.cells(m) {
            if c >= cells {
                return Err(Error::InvalidPartition(format!("cell {c} outside the grid")));
            }
            if owner[c] != usize::MAX {
                return Err(Error::InvalidPartition(format!("cell {c} in pieces {} and {p}", owner[c])));
            }
            owner[c] = p;
        }
    }
    if let Some(c) = owner.iter().position(|&o| o == usize::MAX) {
        return Err(Error::InvalidPartition(format!("cell {c} not covered")));
    }
    let all = grid.all();
    let e_n = all[n.min(all.len() - 1)];
    let piece_e1 = partition.par_iter().map(|p| neumann_first_eigenvalue(space, m, p)).collect::<Result<Vec<_>>>()?;
    let min_e1 = piece_e1.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(LocalizationReport { n, e_n, piece_e1, min_e1, pass: e_n >= min_e1 * (1.0 - LOCALIZATION_SLACK) })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeylFit {
    /// Fitted exponent of `N(e) ~ C e^a`; Weyl predicts `n / 2`.
    pub exponent: f64,
    /// Slope of `N(e)` against `e^{n/2}`.
    pub prefactor: f64,
    /// `vol(X) vol(B^n) / (2 pi)^n`.
    pub weyl_prefactor: f64,
    /// `(e, N(e))` sample points of the fit.
    pub counts: Vec<(f64, usize)>,
}

/// Least-squares fit of `ln N(e)` against `ln e` on 64 log-spaced values in
/// `[e_lo, e_hi]`.
///
/// The range must stay below the dispersion knee: wavenumbers at most an
/// eighth of the grid Nyquist band, `e <= (2 pi M / (8 L))^2` with `L` the
/// longest period.
pub fn weyl_fit(space: &ModelSpace, m: usize, e_lo: f64, e_hi: f64) -> Result<WeylFit> {
    let grid = Grid::new(space, m)?;
    if !(e_lo > 0.0 && e_hi > e_lo) {
        return invalid("need 0 < e_lo < e_hi");
    }
    let (longest, vol) = match space {
        ModelSpace::Circle { length } => (*length, *length),
        ModelSpace::FlatTorus(t) => (t.basis().iter().map(|b| b[0].hypot(b[1])).fold(0.0, f64::max), t.area()),
        _ => unreachable!(),
    };
    let knee = (2.0 * PI * m as f64 / (8.0 * longest)).powi(2);
    if e_hi > knee {
        return Err(Error::Resolution(format!("e = {e_hi} beyond the dispersion knee {knee:.1}")));
    }
    let all = grid.all();
    let samples = 64;
    let counts: Vec<(f64, usize)> = (0..samples)
        .map(|i| {
            let e = e_lo * (e_hi / e_lo).powf(i as f64 / (samples - 1) as f64);
            (e, all.partition_point(|&x| x <= e))
        })
        .collect();
    if counts[0].1 < 2 || counts.last().unwrap().1 < counts[0].1 + 8 {
        return invalid("too few eigenvalues in range");
    }
    let xs: Vec<f64> = counts.iter().map(|c| c.0.ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|c| (c.1 as f64).ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let exponent = sxy / sxx;
    let n = grid.dim;
    // The prefactor is the least-squares slope of N(e) against e^{n/2}; the
    // log-log intercept is dominated by the lattice excess at small e.
    let ps: Vec<f64> = counts.iter().map(|c| c.0.powf(0.5 * n as f64)).collect();
    let ns: Vec<f64> = counts.iter().map(|c| c.1 as f64).collect();
    let mp = ps.iter().sum::<f64>() / ps.len() as f64;
    let mn = ns.iter().sum::<f64>() / ns.len() as f64;
    let spn: f64 = ps.iter().zip(&ns).map(|(p, q)| (p - mp) * (q - mn)).sum();
    let spp: f64 = ps.iter().map(|p| (p - mp) * (p - mp)).sum();
    Ok(WeylFit {
        exponent,
        prefactor: spn / spp,
        weyl_prefactor: vol * euclidean_ball_volume(n) / (2.0 * PI).powi(n as i32),
        counts,
    })
}

/// Rayleigh quotients of random mean-zero vectors on a grid piece; each is
/// an upper bound for its `e_1`. Returns the smallest of `trials`.
pub fn rayleigh_upper_bound(space: &ModelSpace, m: usize, piece: &Subdomain, trials: usize, seed: u64) -> Result<f64> {
    let mut r = rng::stream(seed, "rayleigh_upper_bound", 0);
    match (space, piece) {
        (ModelSpace::Circle { length }, Subdomain::Arc { len, .. }) => {
            let h = length / m as f64;
            let mut best = f64::INFINITY;
            for _ in 0..trials {
                // Random mixtures of the lowest cosines plus a little noise.
                let w: Vec<f64> = (0..4).map(|_| r.sample(StandardNormal)).collect();
                let mut x: Vec<f64> = (0..*len)
                    .map(|i| {
                        let t = PI * (i as f64 + 0.5) / *len as f64;
                        let smooth: f64 = w.iter().enumerate().map(|(j, a)| a * ((j + 1) as f64 * t).cos() / (j + 1) as f64).sum();
                        smooth + 1e-3 * r.sample::<f64, _>(StandardNormal)
                    })
                    .collect();
                let mean = x.iter().sum::<f64>() / *len as f64;
                x.iter_mut().for_each(|v| *v -= mean);
                let num: f64 = x.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / (h * h);
                best = best.min(num / dot(&x, &x));
            }
            Ok(best)
        }
        (ModelSpace::FlatTorus(t), Subdomain::Cells(cells)) => {
            let b = t.basis();
            let op = GridPiece::new(m, cells, b[0][0].hypot(b[0][1]) / m as f64, b[1][0].hypot(b[1][1]) / m as f64)?;
            let mut best = f64::INFINITY;
            for _ in 0..trials {
                let mut x: Vec<f64> = (0..cells.len()).map(|_| r.sample(StandardNormal)).collect();
                op.deflate(&mut x);
                best = best.min(op.rayleigh(&x));
            }
            Ok(best)
        }
        _ => invalid("piece does not match the space"),
    }
}
