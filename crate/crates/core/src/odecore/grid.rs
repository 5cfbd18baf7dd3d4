use std::sync::OnceLock;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Result, StabilityError};

/// Gauss-Legendre points per mesh cell.
pub const GL_POINTS: usize = 10;
/// Grid index distance between consecutive mesh nodes.
pub const STRIDE: usize = GL_POINTS + 1;
const CELL_POINTS: usize = GL_POINTS + 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Grading {
    Uniform,
    Geometric { ratio: f64 },
    Custom,
}

/// Sorted node set on `[0, y_max]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mesh {
    pub nodes: Vec<f64>,
    pub grading: Grading,
}

impl Mesh {
    pub fn uniform(y_max: f64, cells: usize) -> Result<Self> {
        if cells == 0 || !(y_max > 0.0) {
            return Err(StabilityError::InvalidArgument("uniform mesh needs cells > 0 and y_max > 0".into()));
        }
        let nodes = (0..=cells).map(|i| y_max * i as f64 / cells as f64).collect();
        Ok(Mesh { nodes, grading: Grading::Uniform })
    }

    /// Cells grow by `ratio` from `h0` at the wall until they reach `h_max`.
    pub fn geometric(y_max: f64, h0: f64, ratio: f64, h_max: f64) -> Result<Self> {
        if !(h0 > 0.0 && ratio >= 1.0 && h_max >= h0 && y_max > h0) {
            return Err(StabilityError::InvalidArgument("bad geometric mesh parameters".into()));
        }
        let mut nodes = vec![0.0];
        let mut h = h0;
        let mut y = 0.0;
        loop {
            if y + 1.5 * h >= y_max {
                nodes.push(y_max);
                break;
            }
            y += h;
            nodes.push(y);
            h = (h * ratio).min(h_max);
        }
        Ok(Mesh { nodes, grading: Grading::Geometric { ratio } })
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 || nodes[0] != 0.0 || nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(StabilityError::InvalidArgument(
                "mesh nodes must start at 0 and increase strictly".into(),
            ));
        }
        Ok(Mesh { nodes, grading: Grading::Custom })
    }

    pub fn y_max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn n_cells(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Adds `y` as a node (declared kink) unless it is one already.
    pub fn with_node(&self, y: f64) -> Mesh {
        let mut nodes = self.nodes.clone();
        if y > 0.0 && y < self.y_max() && !nodes.iter().any(|&n| (n - y).abs() < 1e-12) {
            let pos = nodes.partition_point(|&n| n < y);
            nodes.insert(pos, y);
        }
        Mesh { nodes, grading: Grading::Custom }
    }

    /// Splits every cell in two.
    pub fn refine(&self) -> Mesh {
        let mut nodes = Vec::with_capacity(2 * self.nodes.len());
        for w in self.nodes.windows(2) {
            nodes.push(w[0]);
            nodes.push(0.5 * (w[0] + w[1]));
        }
        nodes.push(self.y_max());
        Mesh { nodes, grading: self.grading }
    }

    /// Keeps only nodes `<= y_end`, adding `y_end` itself.
    pub fn truncate(&self, y_end: f64) -> Mesh {
        let mut nodes: Vec<f64> = self.nodes.iter().copied().filter(|&n| n < y_end - 1e-12).collect();
        nodes.push(y_end);
        Mesh { nodes, grading: self.grading }
    }
}

struct Reference {
    t: [f64; GL_POINTS],
    w: [f64; GL_POINTS],
    /// `partial[j][k] = int_{-1}^{t_j} l_k`
    partial: [[f64; GL_POINTS]; GL_POINTS],
    /// differentiation matrix on `[-1, t_0..t_9, 1]`
    diff: [[f64; CELL_POINTS]; CELL_POINTS],
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn reference() -> &'static Reference {
    static REF: OnceLock<Reference> = OnceLock::new();
    REF.get_or_init(|| {
        let n = GL_POINTS;
        let mut t = [0.0; GL_POINTS];
        let mut w = [0.0; GL_POINTS];
        for i in 0..n {
            let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre(n, x);
            t[i] = x;
            w[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        let lagrange = |k: usize, x: f64| -> f64 {
            (0..n).filter(|&m| m != k).map(|m| (x - t[m]) / (t[k] - t[m])).product()
        };
        let mut partial = [[0.0; GL_POINTS]; GL_POINTS];
        for j in 0..n {
            let half = 0.5 * (t[j] + 1.0);
            for k in 0..n {
                partial[j][k] = (0..n)
                    .map(|q| w[q] * lagrange(k, -1.0 + half * (t[q] + 1.0)))
                    .sum::<f64>()
                    * half;
            }
        }
        let mut xs = [0.0; CELL_POINTS];
        xs[0] = -1.0;
        xs[1..=n].copy_from_slice(&t);
        xs[n + 1] = 1.0;
        let mut bw = [0.0; CELL_POINTS];
        for i in 0..CELL_POINTS {
            bw[i] = 1.0 / (0..CELL_POINTS).filter(|&j| j != i).map(|j| xs[i] - xs[j]).product::<f64>();
        }
        let mut diff = [[0.0; CELL_POINTS]; CELL_POINTS];
        for i in 0..CELL_POINTS {
            let mut s = 0.0;
            for j in 0..CELL_POINTS {
                if i != j {
                    diff[i][j] = bw[j] / bw[i] / (xs[i] - xs[j]);
                    s += diff[i][j];
                }
            }
            diff[i][i] = -s;
        }
        Reference { t, w, partial, diff }
    })
}

/// Mesh nodes plus `GL_POINTS` Gauss-Legendre points per cell. Node `i`
/// sits at grid index `i * STRIDE`.
#[derive(Debug, Clone)]
pub struct Grid {
    pub mesh: Mesh,
    pub y: Vec<f64>,
    pub w: Vec<f64>,
}

impl Grid {
    pub fn new(mesh: Mesh) -> Self {
        let r = reference();
        let nc = mesh.n_cells();
        let mut y = Vec::with_capacity(nc * STRIDE + 1);
        let mut w = Vec::with_capacity(nc * STRIDE + 1);
        for c in 0..nc {
            let (a, b) = (mesh.nodes[c], mesh.nodes[c + 1]);
            let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
            y.push(a);
            w.push(0.0);
            for k in 0..GL_POINTS {
                y.push(m + h * r.t[k]);
                w.push(h * r.w[k]);
            }
        }
        y.push(mesh.y_max());
        w.push(0.0);
        Grid { mesh, y, w }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_cells(&self) -> usize {
        self.mesh.n_cells()
    }

    pub fn y_max(&self) -> f64 {
        self.mesh.y_max()
    }

    pub fn node_indices(&self) -> impl Iterator<Item = usize> {
        (0..=self.n_cells()).map(|i| i * STRIDE)
    }

    pub fn is_node(&self, j: usize) -> bool {
        j % STRIDE == 0
    }

    /// Index of the grid point closest to `y`.
    pub fn nearest(&self, y: f64) -> usize {
        let p = self.y.partition_point(|&v| v < y);
        if p == 0 {
            0
        } else if p >= self.len() {
            self.len() - 1
        } else if (self.y[p] - y).abs() < (y - self.y[p - 1]).abs() {
            p
        } else {
            p - 1
        }
    }

    /// Index of the mesh node closest to `y`.
    pub fn nearest_node(&self, y: f64) -> usize {
        let p = self.mesh.nodes.partition_point(|&v| v < y);
        let i = if p == 0 {
            0
        } else if p > self.n_cells() {
            self.n_cells()
        } else if (self.mesh.nodes[p] - y).abs() < (y - self.mesh.nodes[p - 1]).abs() {
            p
        } else {
            p - 1
        };
        i * STRIDE
    }

    pub fn integrate(&self, f: &[C64]) -> C64 {
        f.iter().zip(&self.w).map(|(v, w)| v * *w).sum()
    }

    pub fn integrate_real(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.w).map(|(v, w)| v * w).sum()
    }

    /// `int_0^{y_j} f` at every grid point.
    pub fn cumulative(&self, f: &[C64]) -> Vec<C64> {
        let r = reference();
        let mut out = vec![C64::new(0.0, 0.0); self.len()];
        let mut acc = C64::new(0.0, 0.0);
        for c in 0..self.n_cells() {
            let base = c * STRIDE;
            let h = 0.5 * (self.mesh.nodes[c + 1] - self.mesh.nodes[c]);
            out[base] = acc;
            for j in 0..GL_POINTS {
                let s: C64 = (0..GL_POINTS).map(|k| f[base + 1 + k] * r.partial[j][k]).sum();
                out[base + 1 + j] = acc + s * h;
            }
            let cell: C64 = (0..GL_POINTS).map(|k| f[base + 1 + k] * r.w[k]).sum();
            acc += cell * h;
        }
        let last = self.len() - 1;
        out[last] = acc;
        out
    }

    /// `int_{y_j}^{y_max} f` at every grid point, accumulated from the right.
    pub fn tail(&self, f: &[C64]) -> Vec<C64> {
        let r = reference();
        let mut out = vec![C64::new(0.0, 0.0); self.len()];
        let mut acc = C64::new(0.0, 0.0);
        for c in (0..self.n_cells()).rev() {
            let base = c * STRIDE;
            let h = 0.5 * (self.mesh.nodes[c + 1] - self.mesh.nodes[c]);
            out[base + STRIDE] = acc;
            for j in 0..GL_POINTS {
                let s: C64 = (0..GL_POINTS).map(|k| f[base + 1 + k] * (r.w[k] - r.partial[j][k])).sum();
                out[base + 1 + j] = acc + s * h;
            }
            let cell: C64 = (0..GL_POINTS).map(|k| f[base + 1 + k] * r.w[k]).sum();
            acc += cell * h;
        }
        out[0] = acc;
        out
    }

    /// Integral over a single cell of `f` sampled at that cell's GL points,
    /// and the partial integrals from the left node to each GL point.
    pub fn cell_partials(&self, c: usize, f: &[C64; GL_POINTS]) -> (C64, [C64; GL_POINTS]) {
        let r = reference();
        let h = 0.5 * (self.mesh.nodes[c + 1] - self.mesh.nodes[c]);
        let mut part = [C64::new(0.0, 0.0); GL_POINTS];
        for j in 0..GL_POINTS {
            part[j] = (0..GL_POINTS).map(|k| f[k] * r.partial[j][k]).sum::<C64>() * h;
        }
        let total = (0..GL_POINTS).map(|k| f[k] * r.w[k]).sum::<C64>() * h;
        (total, part)
    }

    /// Exponentially weighted running integrals for a phase `theta` whose
    /// real part increases with `y`:
    /// `left_j = int_0^{y_j} e^{theta(x) - theta(y_j)} g(x) dx` and
    /// `right_j = int_{y_j}^{y_max} e^{theta(y_j) - theta(x)} g(x) dx`.
    ///
    /// Cells are swept one at a time, so no exponential larger than the
    /// per-cell phase increment is ever formed.
    pub fn exp_sweeps(&self, theta: &[C64], g: &[C64]) -> (Vec<C64>, Vec<C64>) {
        let zero = C64::new(0.0, 0.0);
        let n = self.len();
        let mut left = vec![zero; n];
        let mut right = vec![zero; n];
        let mut buf = [zero; GL_POINTS];
        for c in 0..self.n_cells() {
            let a = c * STRIDE;
            let b = a + STRIDE;
            // weights e^{theta(x) - theta(b)}, bounded by one on the cell
            for k in 0..GL_POINTS {
                buf[k] = (theta[a + 1 + k] - theta[b]).exp() * g[a + 1 + k];
            }
            let (total, part) = self.cell_partials(c, &buf);
            let carry = left[a];
            for j in 0..GL_POINTS {
                let idx = a + 1 + j;
                left[idx] = carry * (theta[a] - theta[idx]).exp() + part[j] * (theta[b] - theta[idx]).exp();
            }
            left[b] = carry * (theta[a] - theta[b]).exp() + total;
        }
        for c in (0..self.n_cells()).rev() {
            let a = c * STRIDE;
            let b = a + STRIDE;
            // weights e^{theta(a) - theta(x)}, bounded by one on the cell
            for k in 0..GL_POINTS {
                buf[k] = (theta[a] - theta[a + 1 + k]).exp() * g[a + 1 + k];
            }
            let (total, part) = self.cell_partials(c, &buf);
            let carry = right[b];
            for j in 0..GL_POINTS {
                let idx = a + 1 + j;
                right[idx] = carry * (theta[idx] - theta[b]).exp() + (total - part[j]) * (theta[idx] - theta[a]).exp();
            }
            right[a] = carry * (theta[a] - theta[b]).exp() + total;
        }
        (left, right)
    }

    /// Derivative by the degree-11 polynomial through each cell's twelve
    /// points; nodes take the mean of the two adjacent cells.
    pub fn differentiate(&self, f: &[C64]) -> Vec<C64> {
        let r = reference();
        let mut out = vec![C64::new(0.0, 0.0); self.len()];
        let nc = self.n_cells();
        for c in 0..nc {
            let base = c * STRIDE;
            let scale = 2.0 / (self.mesh.nodes[c + 1] - self.mesh.nodes[c]);
            for i in 0..CELL_POINTS {
                let d: C64 = (0..CELL_POINTS).map(|j| f[base + j] * r.diff[i][j]).sum::<C64>() * scale;
                if i == 0 && c > 0 {
                    out[base] = 0.5 * (out[base] + d);
                } else {
                    out[base + i] = d;
                }
            }
        }
        out
    }

    pub fn sup_norm(f: &[C64]) -> f64 {
        f.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Discrete `L^2` norm with the quadrature weights.
    pub fn l2_norm(&self, f: &[C64]) -> f64 {
        f.iter().zip(&self.w).map(|(v, w)| v.norm_sqr() * w).sum::<f64>().sqrt()
    }
}

/// Composite Gauss-Legendre quadrature of `f` over the mesh.
pub fn quadrature<F: Fn(f64) -> C64>(f: F, mesh: &Mesh) -> Result<C64> {
    let r = reference();
    let mut acc = C64::new(0.0, 0.0);
    for w in mesh.nodes.windows(2) {
        let (m, h) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
        for k in 0..GL_POINTS {
            let x = m + h * r.t[k];
            let v = f(x);
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(StabilityError::NonFinite(x));
            }
            acc += v * (h * r.w[k]);
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: f64) -> C64 {
        C64::new(v, 0.0)
    }

    #[test]
    fn exponential_integrals() {
        let mesh = Mesh::geometric(30.0, 0.05, 1.07, 0.5).unwrap();
        let i = quadrature(|x| c((-x).exp()), &mesh).unwrap();
        assert!((i.re - 1.0).abs() < 1e-10);
        let m = mesh.with_node(5.0);
        let i = quadrature(|x| c((-(x - 5.0f64).abs()).exp()), &m).unwrap();
        assert!((i.re - (2.0 - (-5.0f64).exp())).abs() < 1e-10);
    }

    #[test]
    fn cumulative_and_tail_are_consistent() {
        let g = Grid::new(Mesh::uniform(10.0, 20).unwrap());
        let f: Vec<C64> = g.y.iter().map(|&y| C64::new(y.cos(), (-y).exp())).collect();
        let cum = g.cumulative(&f);
        let tail = g.tail(&f);
        for (j, &y) in g.y.iter().enumerate() {
            let exact = C64::new(y.sin(), 1.0 - (-y).exp());
            assert!((cum[j] - exact).norm() < 1e-12, "y={y}");
            assert!((cum[j] + tail[j] - cum[g.len() - 1]).norm() < 1e-12);
        }
    }

    #[test]
    fn differentiation_is_spectral() {
        let g = Grid::new(Mesh::uniform(6.0, 12).unwrap());
        let f: Vec<C64> = g.y.iter().map(|&y| c((2.0 * y).sin())).collect();
        let d = g.differentiate(&f);
        for (j, &y) in g.y.iter().enumerate() {
            assert!((d[j].re - 2.0 * (2.0 * y).cos()).abs() < 1e-9);
        }
    }

    #[test]
    fn exp_sweeps_match_closed_form() {
        let g = Grid::new(Mesh::uniform(12.0, 48).unwrap());
        let lam = 2.0;
        let theta: Vec<C64> = g.y.iter().map(|&y| c(lam * y)).collect();
        let ones = vec![c(1.0); g.len()];
        let (l, r) = g.exp_sweeps(&theta, &ones);
        for (j, &y) in g.y.iter().enumerate() {
            assert!((l[j].re - (1.0 - (-lam * y).exp()) / lam).abs() < 1e-13);
            assert!((r[j].re - (1.0 - (-lam * (12.0 - y)).exp()) / lam).abs() < 1e-13);
        }
    }

    #[test]
    fn geometric_mesh_ends_at_y_max() {
        let m = Mesh::geometric(30.0, 1e-3, 1.07, 0.5).unwrap();
        assert_eq!(m.nodes[0], 0.0);
        assert_eq!(m.y_max(), 30.0);
        assert!(m.nodes.windows(2).all(|w| w[1] > w[0]));
    }
}
