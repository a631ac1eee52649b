//! Discretised observation plane and per-pixel field containers.
//!
//! Pixel `(i, j)` sits at `x = -extent + i·dx`, `y = -extent + j·dy`; `i`
//! runs along x (columns) and `j` along y (rows). Field data is stored
//! row-major, so pixel `(i, j)` lives at `j·nx + i`. Everything else in the
//! crate goes through [`Grid::point`], [`Grid::polar`] and [`Grid::index`]
//! rather than repeating this arithmetic.

use nalgebra::Matrix2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub type Mat2 = Matrix2<Complex64>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    nx: usize,
    ny: usize,
    extent: f64,
    dx: f64,
    dy: f64,
}

impl Grid {
    pub const MIN_PIXELS: usize = 16;

    pub fn new(nx: usize, ny: usize, extent: f64) -> Result<Self> {
        if nx < Self::MIN_PIXELS || ny < Self::MIN_PIXELS {
            return Err(Error::InvalidGrid(format!(
                "{nx}x{ny} pixels; both dimensions must be at least {}",
                Self::MIN_PIXELS
            )));
        }
        if !(extent.is_finite() && extent > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "extent {extent} must be finite and positive"
            )));
        }
        Ok(Self {
            nx,
            ny,
            extent,
            dx: 2.0 * extent / (nx - 1) as f64,
            dy: 2.0 * extent / (ny - 1) as f64,
        })
    }

    pub fn square(n: usize, extent: f64) -> Result<Self> {
        Self::new(n, n, extent)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dy(&self) -> f64 {
        self.dy
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        -self.extent + i as f64 * self.dx
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        -self.extent + j as f64 * self.dy
    }

    #[inline]
    pub fn point(&self, i: usize, j: usize) -> (f64, f64) {
        (self.x(i), self.y(j))
    }

    /// `(ρ, φ)` with `φ ∈ (−π, π]`.
    #[inline]
    pub fn polar(&self, i: usize, j: usize) -> (f64, f64) {
        let (x, y) = self.point(i, j);
        to_polar(x, y)
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    #[inline]
    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.nx, index / self.nx)
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.nx || j + 1 == self.ny
    }

    /// Pixel cell area after clipping the cell to the window: edge pixels
    /// keep half their cell, corner pixels a quarter.
    #[inline]
    pub fn cell_area(&self, i: usize, j: usize) -> f64 {
        edge_weight(i, self.nx) * edge_weight(j, self.ny) * self.dx * self.dy
    }

    /// Fractional pixel coordinates of a physical point (may lie outside).
    #[inline]
    pub fn locate(&self, x: f64, y: f64) -> (f64, f64) {
        ((x + self.extent) / self.dx, (y + self.extent) / self.dy)
    }

    pub fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

#[inline]
pub fn to_polar(x: f64, y: f64) -> (f64, f64) {
    let phi = y.atan2(x);
    let phi = if phi <= -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        phi
    };
    (x.hypot(y), phi)
}

#[inline]
fn edge_weight(k: usize, n: usize) -> f64 {
    if k == 0 || k + 1 == n {
        0.5
    } else {
        1.0
    }
}

/// Order in which pixel contributions are summed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Reduction {
    /// Rows summed left to right, row sums accumulated bottom to top, on one thread.
    Serial,
    /// Same summation tree as `Serial` with rows summed in parallel; bitwise equal to it.
    #[default]
    Deterministic,
    /// Rayon's work-stealing sum; results may differ in the last bits between runs.
    Unordered,
}

/// Immutable per-pixel values on a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T> {
    grid: Grid,
    data: Vec<T>,
}

pub type ScalarField = Field<f64>;
pub type ComplexField = Field<Complex64>;
pub type MatrixField = Field<Mat2>;

impl<T> Field<T> {
    pub fn from_vec(grid: Grid, data: Vec<T>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values supplied for a {}x{} grid",
                data.len(),
                grid.nx(),
                grid.ny()
            )));
        }
        Ok(Self { grid, data })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[self.grid.index(i, j)]
    }

    pub fn row(&self, j: usize) -> &[T] {
        let nx = self.grid.nx();
        &self.data[j * nx..(j + 1) * nx]
    }
}

impl<T: Send> Field<T> {
    /// Evaluates `f(x, y)` at every pixel in parallel.
    pub fn from_fn<F>(grid: Grid, f: F) -> Self
    where
        F: Fn(f64, f64) -> T + Sync,
    {
        Self::from_pixels(grid, |i, j| {
            let (x, y) = grid.point(i, j);
            f(x, y)
        })
    }

    /// Evaluates `f(i, j)` at every pixel in parallel.
    pub fn from_pixels<F>(grid: Grid, f: F) -> Self
    where
        F: Fn(usize, usize) -> T + Sync,
    {
        let data = (0..grid.len())
            .into_par_iter()
            .map(|k| {
                let (i, j) = grid.coords(k);
                f(i, j)
            })
            .collect();
        Self { grid, data }
    }
}

impl<T: Sync> Field<T> {
    /// Pointwise transform `f(value, x, y)`, evaluated in parallel.
    pub fn map<U, F>(&self, f: F) -> Field<U>
    where
        U: Send,
        F: Fn(&T, f64, f64) -> U + Sync,
    {
        let grid = self.grid;
        let data = self
            .data
            .par_iter()
            .enumerate()
            .map(|(k, v)| {
                let (i, j) = grid.coords(k);
                let (x, y) = grid.point(i, j);
                f(v, x, y)
            })
            .collect();
        Field { grid, data }
    }

    /// Single-threaded twin of [`Field::map`].
    pub fn map_serial<U, F>(&self, f: F) -> Field<U>
    where
        F: Fn(&T, f64, f64) -> U,
    {
        let grid = self.grid;
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let (i, j) = grid.coords(k);
                let (x, y) = grid.point(i, j);
                f(v, x, y)
            })
            .collect();
        Field { grid, data }
    }

    pub fn zip_map<U, V, F>(&self, other: &Field<U>, f: F) -> Result<Field<V>>
    where
        U: Sync,
        V: Send,
        F: Fn(&T, &U) -> V + Sync,
    {
        self.grid.ensure_same(&other.grid)?;
        let data = self
            .data
            .par_iter()
            .zip(other.data.par_iter())
            .map(|(a, b)| f(a, b))
            .collect();
        Ok(Field {
            grid: self.grid,
            data,
        })
    }
}

impl ScalarField {
    pub fn constant(grid: Grid, value: f64) -> Self {
        Self {
            grid,
            data: vec![value; grid.len()],
        }
    }

    /// `∫∫ f dx dy` with each pixel weighted by its window-clipped cell area.
    pub fn integrate(&self, reduction: Reduction) -> Result<f64> {
        integrate(self, reduction)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.par_iter().fold(|| 0.0f64, |m, v| m.max(v.abs())).reduce(|| 0.0, f64::max)
    }
}

/// Sums `f(i,j)·cell_area(i,j)` over the grid.
///
/// Cells are centred on pixels and clipped to the window `[−extent, extent]²`,
/// which makes the rule exact for constants (an all-ones field on a
/// half-width-3 window integrates to 36) and identical to the tensor
/// trapezoid rule.
pub fn integrate(field: &ScalarField, reduction: Reduction) -> Result<f64> {
    let grid = *field.grid();
    if let Some(k) = field.data.par_iter().position_first(|v| !v.is_finite()) {
        let (i, j) = grid.coords(k);
        return Err(Error::NonFinite {
            i,
            j,
            value: field.data[k],
        });
    }
    let nx = grid.nx();
    let ny = grid.ny();
    let row_sum = |j: usize| -> f64 {
        let row = field.row(j);
        let mut s = 0.5 * row[0] + 0.5 * row[nx - 1];
        for v in &row[1..nx - 1] {
            s += v;
        }
        s * edge_weight(j, ny)
    };
    let total = match reduction {
        Reduction::Serial => (0..ny).map(row_sum).fold(0.0, |acc, r| acc + r),
        Reduction::Deterministic => {
            let rows: Vec<f64> = (0..ny).into_par_iter().map(row_sum).collect();
            rows.into_iter().fold(0.0, |acc, r| acc + r)
        }
        Reduction::Unordered => field
            .data
            .par_iter()
            .enumerate()
            .map(|(k, v)| {
                let (i, j) = grid.coords(k);
                v * edge_weight(i, nx) * edge_weight(j, ny)
            })
            .sum(),
    };
    Ok(total * grid.dx() * grid.dy())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn make_grid_pitch_and_centre() {
        let g = Grid::new(256, 256, 3.0).unwrap();
        assert!((g.dx() - 6.0 / 255.0).abs() < 1e-15);
        assert!((g.x(0) + 3.0).abs() < 1e-15);
        assert!((g.x(255) - 3.0).abs() < 1e-12);
        let (x, y) = g.point(128, 128);
        assert!(x.abs() <= g.dx() && y.abs() <= g.dy());
        Grid::new(16, 16, 1.0).unwrap();
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(8, 8, 1.0).is_err());
        assert!(Grid::new(16, 15, 1.0).is_err());
        assert!(Grid::new(16, 16, 0.0).is_err());
        assert!(Grid::new(16, 16, -1.0).is_err());
        assert!(Grid::new(16, 16, f64::NAN).is_err());
    }

    #[test]
    fn polar_angle_range() {
        let g = Grid::new(17, 17, 1.0).unwrap();
        for j in 0..17 {
            for i in 0..17 {
                let (r, phi) = g.polar(i, j);
                assert!(r >= 0.0);
                assert!(phi > -std::f64::consts::PI && phi <= std::f64::consts::PI);
            }
        }
        let (_, phi) = to_polar(-1.0, -0.0);
        assert_eq!(phi, std::f64::consts::PI);
    }

    #[test]
    fn index_round_trip() {
        let g = Grid::new(20, 17, 1.0).unwrap();
        for k in 0..g.len() {
            let (i, j) = g.coords(k);
            assert_eq!(g.index(i, j), k);
        }
    }

    #[test]
    fn constant_integrates_to_window_area() {
        let g = Grid::square(256, 3.0).unwrap();
        let ones = ScalarField::constant(g, 1.0);
        for r in [Reduction::Serial, Reduction::Deterministic, Reduction::Unordered] {
            assert!((ones.integrate(r).unwrap() - 36.0).abs() < 1e-9);
        }
        let zeros = ScalarField::constant(g, 0.0);
        assert_eq!(zeros.integrate(Reduction::Deterministic).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_integral() {
        let g = Grid::square(512, 6.0).unwrap();
        let f = ScalarField::from_fn(g, |x, y| (-(x * x + y * y)).exp());
        let v = f.integrate(Reduction::Deterministic).unwrap();
        assert!((v - std::f64::consts::PI).abs() < 1e-6, "{v}");
    }

    #[test]
    fn non_finite_is_located() {
        let g = Grid::square(16, 1.0).unwrap();
        let f = ScalarField::from_pixels(g, |i, j| if (i, j) == (3, 5) { f64::NAN } else { 1.0 });
        match f.integrate(Reduction::Serial) {
            Err(Error::NonFinite { i: 3, j: 5, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn map_identity_and_involution() {
        let g = Grid::square(32, 2.0).unwrap();
        let f = ComplexField::from_fn(g, |x, y| Complex64::new(x.sin(), y * x));
        assert_eq!(f.map(|v, _, _| *v), f);
        assert_eq!(f.map(|v, _, _| v.conj()).map(|v, _, _| v.conj()), f);
        let z = f.map(|_, _, _| Complex64::new(0.0, 0.0));
        assert!(z.data().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn parallel_and_serial_agree_bitwise() {
        let g = Grid::square(128, 3.0).unwrap();
        let f = ScalarField::from_fn(g, |x, y| (x * 1.7).sin() * (-y * y).exp());
        let par = f.map(|v, x, y| v * x - y);
        let ser = f.map_serial(|v, x, y| v * x - y);
        assert_eq!(par, ser);
        let a = par.integrate(Reduction::Serial).unwrap();
        let b = par.integrate(Reduction::Deterministic).unwrap();
        let c = par.integrate(Reduction::Unordered).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert!((a - c).abs() <= 1e-12 * a.abs().max(1e-300));
    }

    proptest! {
        #[test]
        fn integrate_is_linear(a in -5.0f64..5.0, b in -5.0f64..5.0, k in 0.1f64..3.0) {
            let g = Grid::square(64, 2.5).unwrap();
            let f = ScalarField::from_fn(g, |x, y| (k * x).cos() + y);
            let h = ScalarField::from_fn(g, |x, y| (-(x * x + y * y) * k).exp());
            let lin = f.zip_map(&h, |u, v| a * u + b * v).unwrap();
            let lhs = lin.integrate(Reduction::Deterministic).unwrap();
            let rhs = a * f.integrate(Reduction::Deterministic).unwrap()
                + b * h.integrate(Reduction::Deterministic).unwrap();
            let scale = (a.abs() * f.data().iter().map(|v| v.abs()).sum::<f64>()
                + b.abs() * h.data().iter().map(|v| v.abs()).sum::<f64>()) * g.dx() * g.dy();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(1.0));
        }
    }
}
