use crate::boundary::{BoundaryTraces, Side};
use crate::error::{Error, Result};

/// Cell-centered rectangular grid with `ghost` layers on every side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    /// Lower-left corner of the domain.
    pub origin: [f64; 2],
    pub ghost: usize,
}

impl Grid {
    /// Ghost width required by the MUSCL stencil.
    pub const GHOST: usize = 2;

    pub fn new(nx: usize, ny: usize, origin: [f64; 2], width: f64, height: f64) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::invalid("grid needs at least one cell per direction"));
        }
        if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
            return Err(Error::invalid("domain extent must be positive"));
        }
        if !origin.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("grid origin must be finite"));
        }
        Ok(Grid {
            nx,
            ny,
            dx: width / nx as f64,
            dy: height / ny as f64,
            origin,
            ghost: Self::GHOST,
        })
    }

    /// Grid with the given spacing; the spacing must divide the extents.
    pub fn with_spacing(origin: [f64; 2], width: f64, height: f64, dx: f64, dy: f64) -> Result<Self> {
        let count = |len: f64, h: f64, name: &str| -> Result<usize> {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive")));
            }
            let n = (len / h).round();
            if n < 1.0 || (n * h - len).abs() > 1e-9 * len {
                return Err(Error::invalid(format!("{name} = {h} does not divide {len}")));
            }
            Ok(n as usize)
        };
        let nx = count(width, dx, "dx")?;
        let ny = count(height, dy, "dy")?;
        Self::new(nx, ny, origin, width, height)
    }

    pub fn width(&self) -> f64 {
        self.nx as f64 * self.dx
    }

    pub fn height(&self) -> f64 {
        self.ny as f64 * self.dy
    }

    pub fn cell_center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + (i as f64 + 0.5) * self.dx,
            self.origin[1] + (j as f64 + 0.5) * self.dy,
        ]
    }

    /// Cells per row including ghosts.
    pub fn stride(&self) -> usize {
        self.nx + 2 * self.ghost
    }

    /// Rows including ghosts.
    pub fn rows(&self) -> usize {
        self.ny + 2 * self.ghost
    }

    /// Interior cell adjacent to face `along` of `side`.
    pub fn outermost(&self, side: Side, along: usize) -> (isize, isize) {
        let (nx, ny, a) = (self.nx as isize, self.ny as isize, along as isize);
        match side {
            Side::Left => (0, a),
            Side::Right => (nx - 1, a),
            Side::Bottom => (a, 0),
            Side::Top => (a, ny - 1),
        }
    }

    /// Ghost cell at `layer` (1 = next to the boundary) and its interior
    /// mirror image across the boundary.
    pub fn ghost_and_mirror(&self, side: Side, along: usize, layer: usize) -> ((isize, isize), (isize, isize)) {
        let (nx, ny, a, g) = (
            self.nx as isize,
            self.ny as isize,
            along as isize,
            layer as isize,
        );
        match side {
            Side::Left => ((-g, a), (g - 1, a)),
            Side::Right => ((nx - 1 + g, a), (nx - g, a)),
            Side::Bottom => ((a, -g), (a, g - 1)),
            Side::Top => ((a, ny - 1 + g), (a, ny - g)),
        }
    }

    /// Faces on `side`.
    pub fn faces(&self, side: Side) -> usize {
        if side.is_vertical() {
            self.ny
        } else {
            self.nx
        }
    }
}

/// Cell averages with ghost layers, row-major in y then x, `n` components
/// per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct GridState {
    grid: Grid,
    n: usize,
    data: Vec<f64>,
    pub time: f64,
}

/// Three-point Gauss-Legendre nodes and weights on `[-1/2, 1/2]`.
const GAUSS3: [(f64, f64); 3] = [
    (-0.387_298_334_620_741_7, 5.0 / 18.0),
    (0.0, 8.0 / 18.0),
    (0.387_298_334_620_741_7, 5.0 / 18.0),
];

impl GridState {
    pub fn zeros(grid: Grid, n: usize) -> Self {
        GridState {
            grid,
            n,
            data: vec![0.0; grid.stride() * grid.rows() * n],
            time: 0.0,
        }
    }

    /// Samples `f` at the cell centers.
    pub fn from_fn(grid: Grid, n: usize, f: impl Fn([f64; 2]) -> Vec<f64>) -> Self {
        let mut s = Self::zeros(grid, n);
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let v = f(grid.cell_center(i, j));
                s.cell_mut(i as isize, j as isize).copy_from_slice(&v[..n]);
            }
        }
        s
    }

    /// Cell averages of `f` by 3x3 Gauss quadrature.
    pub fn from_cell_averages(grid: Grid, n: usize, f: impl Fn([f64; 2]) -> Vec<f64>) -> Self {
        let mut s = Self::zeros(grid, n);
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let [xc, yc] = grid.cell_center(i, j);
                let mut acc = vec![0.0; n];
                for (a, wa) in GAUSS3 {
                    for (b, wb) in GAUSS3 {
                        let v = f([xc + a * grid.dx, yc + b * grid.dy]);
                        for c in 0..n {
                            acc[c] += wa * wb * v[c];
                        }
                    }
                }
                s.cell_mut(i as isize, j as isize).copy_from_slice(&acc);
            }
        }
        s
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn offset(&self, i: isize, j: isize) -> usize {
        let g = self.grid.ghost as isize;
        debug_assert!(i >= -g && i < self.grid.nx as isize + g);
        debug_assert!(j >= -g && j < self.grid.ny as isize + g);
        (((j + g) as usize) * self.grid.stride() + (i + g) as usize) * self.n
    }

    /// Cell `(i, j)`; negative or past-the-end indices address ghosts.
    pub fn cell(&self, i: isize, j: isize) -> &[f64] {
        let o = self.offset(i, j);
        &self.data[o..o + self.n]
    }

    pub fn cell_mut(&mut self, i: isize, j: isize) -> &mut [f64] {
        let o = self.offset(i, j);
        let n = self.n;
        &mut self.data[o..o + n]
    }

    /// Interior cells of row `j`, `nx * n` values.
    pub fn interior_row(&self, j: usize) -> &[f64] {
        let o = self.offset(0, j as isize);
        &self.data[o..o + self.grid.nx * self.n]
    }

    pub fn interior_row_mut(&mut self, j: usize) -> &mut [f64] {
        let o = self.offset(0, j as isize);
        let len = self.grid.nx * self.n;
        &mut self.data[o..o + len]
    }

    /// Full storage including ghosts.
    pub fn raw(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        (0..self.grid.ny).all(|j| self.interior_row(j).iter().all(|v| v.is_finite()))
    }

    pub fn max_abs(&self) -> f64 {
        (0..self.grid.ny)
            .flat_map(|j| self.interior_row(j).iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `dx dy sum |w|^2` over the interior.
    pub fn norm_sq(&self) -> f64 {
        let s: f64 = (0..self.grid.ny)
            .map(|j| self.interior_row(j).iter().map(|v| v * v).sum::<f64>())
            .sum();
        s * self.grid.dx * self.grid.dy
    }

    /// Interior values of component `c`, row-major in y then x.
    pub fn component_field(&self, c: usize) -> Vec<f64> {
        (0..self.grid.ny)
            .flat_map(|j| self.interior_row(j).chunks(self.n).map(move |w| w[c]))
            .collect()
    }

    fn traces_from(&self, pick: impl Fn(Side, usize) -> (isize, isize)) -> BoundaryTraces {
        let g = &self.grid;
        let mut t = BoundaryTraces::zeros(self.n, g.nx, g.ny, g.origin, g.width(), g.height());
        for side in Side::ALL {
            for a in 0..g.faces(side) {
                let (i, j) = pick(side, a);
                t.value_mut(side, a).copy_from_slice(self.cell(i, j));
            }
        }
        t
    }

    /// Values of the outermost interior cells.
    pub fn interior_traces(&self) -> BoundaryTraces {
        self.traces_from(|s, a| self.grid.outermost(s, a))
    }

    /// Values of the first ghost layer. For the Saint-Venant controls these
    /// are the controlled boundary states.
    pub fn ghost_traces(&self) -> BoundaryTraces {
        self.traces_from(|s, a| self.grid.ghost_and_mirror(s, a, 1).0)
    }

    /// Arithmetic mean of the outermost interior cell and the first ghost.
    pub fn face_traces(&self) -> BoundaryTraces {
        let mut t = self.interior_traces();
        let gt = self.ghost_traces();
        for side in Side::ALL {
            for a in 0..self.grid.faces(side) {
                let g = gt.value(side, a).to_vec();
                for (v, gv) in t.value_mut(side, a).iter_mut().zip(g) {
                    *v = 0.5 * (*v + gv);
                }
            }
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_must_divide() {
        let g = Grid::with_spacing([0.0, 0.0], 3.0, 1.0, 0.01, 0.01).unwrap();
        assert_eq!((g.nx, g.ny), (300, 100));
        assert!(Grid::with_spacing([0.0, 0.0], 1.0, 1.0, 0.3, 0.1).is_err());
        assert!(Grid::new(0, 3, [0.0, 0.0], 1.0, 1.0).is_err());
    }

    #[test]
    fn ghost_indexing() {
        let g = Grid::new(4, 3, [0.0, 0.0], 1.0, 1.0).unwrap();
        assert_eq!(g.ghost_and_mirror(Side::Left, 1, 2), ((-2, 1), (1, 1)));
        assert_eq!(g.ghost_and_mirror(Side::Right, 1, 1), ((4, 1), (3, 1)));
        assert_eq!(g.ghost_and_mirror(Side::Top, 0, 2), ((0, 4), (0, 1)));
        let mut s = GridState::zeros(g, 2);
        s.cell_mut(-2, -2)[1] = 5.0;
        s.cell_mut(5, 4)[0] = 7.0;
        assert_eq!(s.raw()[1], 5.0);
        assert_eq!(s.raw()[s.raw().len() - 2], 7.0);
    }

    #[test]
    fn cell_averages_of_affine_are_center_values() {
        let g = Grid::new(5, 4, [1.0, -1.0], 2.0, 1.0).unwrap();
        let f = |xy: [f64; 2]| vec![2.0 * xy[0] - xy[1] + 0.5];
        let a = GridState::from_cell_averages(g, 1, f);
        let b = GridState::from_fn(g, 1, f);
        for j in 0..4 {
            for (x, y) in a.interior_row(j).iter().zip(b.interior_row(j)) {
                assert!((x - y).abs() < 1e-14);
            }
        }
    }
}
