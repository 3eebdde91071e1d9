//! Grid geometry, scalar fields and synthetic model builders.
//!
//! All fields use the same linear layout as the model files: x slowest,
//! z fastest, `offset = (ix * ny + iy) * nz + iz`.

use crate::config::Config;
use crate::seismic_io::Coordinate3;
use crate::stencil::fd_coefficients;
use crate::{Error, Result};

/// Gardner relation `rho = a * v^b` with `v` in m/s and `rho` in kg/m³.
pub const GARDNER_A: f64 = 309.8;
pub const GARDNER_B: f64 = 0.25;

/// Amplitude of the Gaussian velocity perturbation in m/s.
pub const GAUSSIAN_PERTURBATION: f64 = 1.0e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl Shape {
    pub const fn new(nx: usize, ny: usize, nz: usize) -> Self {
        Shape { nx, ny, nz }
    }

    pub const fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub const fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.ny + iy) * self.nz + iz
    }

    pub const fn coords(&self, index: usize) -> (usize, usize, usize) {
        let iz = index % self.nz;
        let rest = index / self.nz;
        (rest / self.ny, rest % self.ny, iz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    MetersPerSecond,
    KilogramsPerCubicMeter,
    InverseSquareMeters,
    Dimensionless,
}

/// A double-precision scalar field on a regular 3-D grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field3D {
    shape: Shape,
    unit: Unit,
    data: Vec<f64>,
}

impl Field3D {
    pub fn new(shape: Shape, unit: Unit, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::InvalidArgument(format!(
                "field of shape {shape:?} needs {} values, got {}",
                shape.len(),
                data.len()
            )));
        }
        Ok(Field3D { shape, unit, data })
    }

    pub fn filled(shape: Shape, unit: Unit, value: f64) -> Self {
        Field3D {
            shape,
            unit,
            data: vec![value; shape.len()],
        }
    }

    pub fn zeros(shape: Shape, unit: Unit) -> Self {
        Self::filled(shape, unit, 0.0)
    }

    pub fn from_fn(shape: Shape, unit: Unit, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(shape.len());
        for ix in 0..shape.nx {
            for iy in 0..shape.ny {
                for iz in 0..shape.nz {
                    data.push(f(ix, iy, iz));
                }
            }
        }
        Field3D { shape, unit, data }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, ix: usize, iy: usize, iz: usize) -> f64 {
        self.data[self.shape.index(ix, iy, iz)]
    }

    #[inline]
    pub fn set(&mut self, ix: usize, iy: usize, iz: usize, value: f64) {
        let i = self.shape.index(ix, iy, iz);
        self.data[i] = value;
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, unit: Unit, f: impl Fn(f64) -> f64) -> Field3D {
        Field3D {
            shape: self.shape,
            unit,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Discretization geometry of the model and its absorbing boundary.
///
/// The extended grid adds `nb` points on both sides of x and y, `nb` points
/// below the model in z, and `nb` points above it unless the free surface
/// replaces the top boundary layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub ox: f64,
    pub oy: f64,
    pub oz: f64,
    pub nb: usize,
    pub free_surface: bool,
}

impl Grid {
    pub fn from_config(cfg: &Config, free_surface: bool) -> Self {
        Grid {
            nx: cfg.nx,
            ny: cfg.ny,
            nz: cfg.nz,
            dx: cfg.dx,
            dy: cfg.dy,
            dz: cfg.dz,
            ox: cfg.ox,
            oy: cfg.oy,
            oz: cfg.oz,
            nb: cfg.border,
            free_surface,
        }
    }

    /// A cubic grid with equal spacing and origin at zero.
    pub fn cube(n: usize, spacing: f64, nb: usize) -> Self {
        Grid {
            nx: n,
            ny: n,
            nz: n,
            dx: spacing,
            dy: spacing,
            dz: spacing,
            ox: 0.0,
            oy: 0.0,
            oz: 0.0,
            nb,
            free_surface: false,
        }
    }

    pub fn interior(&self) -> Shape {
        Shape::new(self.nx, self.ny, self.nz)
    }

    pub fn top_pad(&self) -> usize {
        if self.free_surface {
            0
        } else {
            self.nb
        }
    }

    pub fn extended(&self) -> Shape {
        Shape::new(
            self.nx + 2 * self.nb,
            self.ny + 2 * self.nb,
            self.nz + self.nb + self.top_pad(),
        )
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx * self.dy * self.dz
    }

    /// Maps an interior index to the extended grid.
    pub fn to_extended(&self, (ix, iy, iz): (usize, usize, usize)) -> (usize, usize, usize) {
        (ix + self.nb, iy + self.nb, iz + self.top_pad())
    }

    /// Nearest interior grid node of a coordinate in meters.
    pub fn nearest_node(&self, c: Coordinate3) -> Result<(usize, usize, usize)> {
        let axis = |x: f64, o: f64, d: f64, n: usize| -> Option<usize> {
            let u = ((x - o) / d).round();
            (x.is_finite() && u >= 0.0 && u <= (n - 1) as f64).then_some(u as usize)
        };
        match (
            axis(c.x, self.ox, self.dx, self.nx),
            axis(c.y, self.oy, self.dy, self.ny),
            axis(c.z, self.oz, self.dz, self.nz),
        ) {
            (Some(ix), Some(iy), Some(iz)) => Ok((ix, iy, iz)),
            _ => Err(Error::OutsideGrid {
                x: c.x,
                y: c.y,
                z: c.z,
            }),
        }
    }

    /// Coordinate of an interior node.
    pub fn node_coordinate(&self, (ix, iy, iz): (usize, usize, usize)) -> Coordinate3 {
        Coordinate3 {
            x: self.ox + ix as f64 * self.dx,
            y: self.oy + iy as f64 * self.dy,
            z: self.oz + iz as f64 * self.dz,
        }
    }
}

fn clamp_sub(i: usize, lo: usize, n: usize) -> usize {
    i.saturating_sub(lo).min(n - 1)
}

/// Fills the boundary region by replicating the nearest interior value.
pub fn extend_model(grid: &Grid, interior: &Field3D) -> Result<Field3D> {
    if interior.shape() != grid.interior() {
        return Err(Error::InvalidArgument(format!(
            "expected interior shape {:?}, got {:?}",
            grid.interior(),
            interior.shape()
        )));
    }
    let ext = grid.extended();
    let top = grid.top_pad();
    Ok(Field3D::from_fn(ext, interior.unit(), |ix, iy, iz| {
        interior.get(
            clamp_sub(ix, grid.nb, grid.nx),
            clamp_sub(iy, grid.nb, grid.ny),
            clamp_sub(iz, top, grid.nz),
        )
    }))
}

/// Copies the interior part of an extended field.
pub fn restrict_to_interior(grid: &Grid, extended: &Field3D) -> Field3D {
    let top = grid.top_pad();
    Field3D::from_fn(grid.interior(), extended.unit(), |ix, iy, iz| {
        extended.get(ix + grid.nb, iy + grid.nb, iz + top)
    })
}

/// Adjoint of [`extend_model`]: every extended value is added onto the
/// interior point it was replicated from.
pub fn fold_to_interior(grid: &Grid, extended: &Field3D) -> Field3D {
    let ext = grid.extended();
    assert_eq!(extended.shape(), ext, "fold_to_interior: shape mismatch");
    let top = grid.top_pad();
    let mut out = Field3D::zeros(grid.interior(), extended.unit());
    for ix in 0..ext.nx {
        let jx = clamp_sub(ix, grid.nb, grid.nx);
        for iy in 0..ext.ny {
            let jy = clamp_sub(iy, grid.nb, grid.ny);
            for iz in 0..ext.nz {
                let jz = clamp_sub(iz, top, grid.nz);
                let i = out.shape().index(jx, jy, jz);
                out.data[i] += extended.get(ix, iy, iz);
            }
        }
    }
    out
}

fn interior_model(grid: &Grid, f: impl Fn(f64, f64, f64) -> f64) -> Field3D {
    Field3D::from_fn(grid.interior(), Unit::MetersPerSecond, |i, j, k| {
        f(i as f64, j as f64, k as f64)
    })
}

/// Interior values of the Gaussian-perturbed sphere model:
/// `v = v_base + 1000 exp(-0.5 ((i - nx/2)² + (j - ny/2)² + (k - nz/2)²) / sigma²)`,
/// with `nx/2` evaluated in floating point.
pub fn gaussian_sphere_interior(grid: &Grid, v_base: f64, sigma: f64) -> Result<Field3D> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    let (cx, cy, cz) = (grid.nx as f64 / 2.0, grid.ny as f64 / 2.0, grid.nz as f64 / 2.0);
    Ok(interior_model(grid, |i, j, k| {
        let r2 = (i - cx).powi(2) + (j - cy).powi(2) + (k - cz).powi(2);
        v_base + GAUSSIAN_PERTURBATION * (-0.5 * r2 / (sigma * sigma)).exp()
    }))
}

/// Gaussian sphere model on the extended grid (boundary by edge replication).
pub fn build_gaussian_sphere_model(grid: &Grid, v_base: f64, sigma: f64) -> Result<Field3D> {
    extend_model(grid, &gaussian_sphere_interior(grid, v_base, sigma)?)
}

pub fn build_constant_model(grid: &Grid, velocity: f64) -> Field3D {
    Field3D::filled(grid.extended(), Unit::MetersPerSecond, velocity)
}

/// Sphere of constant velocity centred in the model; `radius` in points.
pub fn sphere_interior(grid: &Grid, v_background: f64, v_sphere: f64, radius: f64) -> Field3D {
    let (cx, cy, cz) = (grid.nx as f64 / 2.0, grid.ny as f64 / 2.0, grid.nz as f64 / 2.0);
    interior_model(grid, |i, j, k| {
        let r2 = (i - cx).powi(2) + (j - cy).powi(2) + (k - cz).powi(2);
        if radius > 0.0 && r2 <= radius * radius {
            v_sphere
        } else {
            v_background
        }
    })
}

/// Pointwise Gardner density `rho = 309.8 * v^0.25`.
pub fn gardner_density(vel: &Field3D) -> Result<Field3D> {
    if let Some(i) = vel.data().iter().position(|&v| !(v > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "velocity must be positive, found {} at element {i}",
            vel.data()[i]
        )));
    }
    Ok(vel.map(Unit::KilogramsPerCubicMeter, |v| GARDNER_A * v.powf(GARDNER_B)))
}

/// `m² = ∇²(√ρ)/√ρ` of the variable-density wave equation.
#[derive(Debug, Clone, PartialEq)]
pub struct MassTerm(pub Field3D);

/// Evaluates the mass term with the propagator's Laplacian of the given
/// half-width. Neighbours outside the field are replaced by the nearest edge
/// value.
pub fn mass_term(grid: &Grid, rho: &Field3D, half_width: usize) -> Result<MassTerm> {
    if let Some(i) = rho.data().iter().position(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(Error::InvalidArgument(format!(
            "density must be positive, found {} at element {i}",
            rho.data()[i]
        )));
    }
    let coeffs = fd_coefficients(half_width)?;
    let c = coeffs.as_slice();
    let shape = rho.shape();
    let root = rho.map(Unit::Dimensionless, f64::sqrt);
    let (idx2, idy2, idz2) = (
        1.0 / (grid.dx * grid.dx),
        1.0 / (grid.dy * grid.dy),
        1.0 / (grid.dz * grid.dz),
    );
    let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;
    let m2 = Field3D::from_fn(shape, Unit::InverseSquareMeters, |ix, iy, iz| {
        let centre = root.get(ix, iy, iz);
        let mut lap = c[0] * centre * (idx2 + idy2 + idz2);
        for (k, &ck) in c.iter().enumerate().skip(1) {
            let k = k as isize;
            let (x, y, z) = (ix as isize, iy as isize, iz as isize);
            let sx = root.get(clamp(x + k, shape.nx), iy, iz) + root.get(clamp(x - k, shape.nx), iy, iz);
            let sy = root.get(ix, clamp(y + k, shape.ny), iz) + root.get(ix, clamp(y - k, shape.ny), iz);
            let sz = root.get(ix, iy, clamp(z + k, shape.nz)) + root.get(ix, iy, clamp(z - k, shape.nz));
            lap += ck * (sx * idx2 + sy * idy2 + sz * idz2);
        }
        lap / centre
    });
    Ok(MassTerm(m2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_index_round_trip() {
        let s = Shape::new(3, 4, 5);
        for i in 0..s.len() {
            let (x, y, z) = s.coords(i);
            assert_eq!(s.index(x, y, z), i);
        }
        assert_eq!(s.index(1, 0, 0), 20);
        assert_eq!(s.index(0, 1, 0), 5);
    }

    #[test]
    fn extended_dims_follow_free_surface() {
        let mut g = Grid::cube(25, 10.0, 25);
        assert_eq!(g.extended(), Shape::new(75, 75, 75));
        g.free_surface = true;
        assert_eq!(g.extended(), Shape::new(75, 75, 50));
        assert_eq!(g.to_extended((0, 0, 0)), (25, 25, 0));
    }

    #[test]
    fn nearest_node_and_bounds() {
        let g = Grid::cube(25, 10.0, 5);
        let c = Coordinate3 { x: 20.0, y: 124.0, z: 240.0 };
        assert_eq!(g.nearest_node(c).unwrap(), (2, 12, 24));
        assert!(g.nearest_node(Coordinate3 { x: 250.0, y: 0.0, z: 0.0 }).is_err());
        assert!(g.nearest_node(Coordinate3 { x: -6.0, y: 0.0, z: 0.0 }).is_err());
    }

    #[test]
    fn gaussian_centre_and_tail() {
        // even n puts nx/2 on a grid node
        let g = Grid::cube(24, 10.0, 0);
        let v = gaussian_sphere_interior(&g, 2500.0, 5.0).unwrap();
        assert_eq!(v.get(12, 12, 12), 3500.0);
        let far = gaussian_sphere_interior(&Grid::cube(200, 10.0, 0), 2500.0, 5.0).unwrap();
        assert!((far.get(0, 0, 0) - 2500.0).abs() < 1e-100);
        assert!(gaussian_sphere_interior(&g, 2500.0, 0.0).is_err());
    }

    #[test]
    fn gaussian_matches_direct_evaluation() {
        let g = Grid::cube(25, 10.0, 3);
        let ext = build_gaussian_sphere_model(&g, 2500.0, 5.0).unwrap();
        let d2 = 3.0 * (12.0f64 - 12.5).powi(2);
        let expected = 2500.0 + 1000.0 * (-0.5 * d2 / 25.0).exp();
        let (x, y, z) = g.to_extended((12, 12, 12));
        assert_eq!(ext.get(x, y, z), expected);
        // boundary replicates the edge
        assert_eq!(ext.get(0, 0, 0), ext.get(3, 3, 3));
    }

    #[test]
    fn gaussian_reflection_symmetry() {
        let g = Grid::cube(25, 10.0, 0);
        let v = gaussian_sphere_interior(&g, 2500.0, 5.0).unwrap();
        // mirror plane at nx/2 = 12.5 maps i to 25 - i
        for i in 1..25 {
            for j in 1..25 {
                for k in 1..25 {
                    let a = v.get(i, j, k);
                    assert_eq!(a, v.get(25 - i, j, k));
                    assert_eq!(a, v.get(i, 25 - j, k));
                    assert_eq!(a, v.get(i, j, 25 - k));
                }
            }
        }
    }

    #[test]
    fn gardner_values() {
        let v = Field3D::filled(Shape::new(2, 2, 2), Unit::MetersPerSecond, 2500.0);
        let rho = gardner_density(&v).unwrap();
        let expected = 309.8 * 2500f64.powf(0.25);
        assert!((expected - 2190.6).abs() < 0.05);
        assert!(rho.data().iter().all(|&r| r == expected));
        let slow = gardner_density(&v.map(Unit::MetersPerSecond, |x| x - 1.0)).unwrap();
        assert!(slow.get(0, 0, 0) < rho.get(0, 0, 0));
        let bad = v.map(Unit::MetersPerSecond, |_| 0.0);
        assert!(gardner_density(&bad).is_err());
    }

    #[test]
    fn extend_ramp_plateau() {
        let g = Grid {
            nx: 5,
            ny: 1,
            nz: 1,
            dx: 1.0,
            dy: 1.0,
            dz: 1.0,
            ox: 0.0,
            oy: 0.0,
            oz: 0.0,
            nb: 2,
            free_surface: false,
        };
        let ramp = Field3D::from_fn(g.interior(), Unit::Dimensionless, |i, _, _| i as f64);
        let ext = extend_model(&g, &ramp).unwrap();
        let line: Vec<f64> = (0..9).map(|i| ext.get(i, 2, 2)).collect();
        assert_eq!(line, vec![0.0, 0.0, 0.0, 1.0, 2.0, 3.0, 4.0, 4.0, 4.0]);
        assert_eq!(ext.min(), 0.0);
        assert_eq!(ext.max(), 4.0);
        assert_eq!(restrict_to_interior(&g, &ext), ramp);
    }

    #[test]
    fn extend_identity_without_border() {
        let g = Grid::cube(4, 1.0, 0);
        let f = Field3D::from_fn(g.interior(), Unit::Dimensionless, |i, j, k| (i * 16 + j * 4 + k) as f64);
        assert_eq!(extend_model(&g, &f).unwrap(), f);
    }

    #[test]
    fn fold_is_adjoint_of_extend() {
        let g = Grid { free_surface: true, ..Grid::cube(4, 1.0, 2) };
        let a = Field3D::from_fn(g.interior(), Unit::Dimensionless, |i, j, k| ((i * 7 + j * 3 + k) % 5) as f64 - 1.5);
        let b = Field3D::from_fn(g.extended(), Unit::Dimensionless, |i, j, k| ((i + 2 * j + 5 * k) % 7) as f64 * 0.25);
        let ea = extend_model(&g, &a).unwrap();
        let lhs: f64 = ea.data().iter().zip(b.data()).map(|(x, y)| x * y).sum();
        let fb = fold_to_interior(&g, &b);
        let rhs: f64 = a.data().iter().zip(fb.data()).map(|(x, y)| x * y).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn mass_term_constant_density_vanishes() {
        let g = Grid::cube(10, 10.0, 0);
        let rho = Field3D::filled(g.extended(), Unit::KilogramsPerCubicMeter, 2000.0);
        let m2 = mass_term(&g, &rho, 4).unwrap();
        assert!(m2.0.data().iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn mass_term_exponential_profile() {
        // sqrt(rho) = exp(alpha x) gives m² = alpha² exactly
        let dx = 10.0;
        let alpha = 0.05 / dx;
        let g = Grid { nx: 30, ny: 9, nz: 9, ..Grid::cube(9, dx, 0) };
        let rho = Field3D::from_fn(g.extended(), Unit::KilogramsPerCubicMeter, |i, _, _| {
            1000.0 * (2.0 * alpha * i as f64 * dx).exp()
        });
        let m2 = mass_term(&g, &rho, 4).unwrap();
        for i in 4..26 {
            let rel = (m2.0.get(i, 4, 4) - alpha * alpha).abs() / (alpha * alpha);
            assert!(rel <= 1e-4, "i={i} rel={rel}");
        }
        assert!(m2.0.is_finite());
        assert!(mass_term(&g, &rho.map(Unit::KilogramsPerCubicMeter, |_| -1.0), 4).is_err());
    }
}
