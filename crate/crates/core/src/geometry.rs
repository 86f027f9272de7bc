//! Cell-tensor algebra for the periodic conventions used by DL_POLY.
//!
//! A [`CellTensor`] stores the three lattice vectors as rows `a`, `b`, `c`.
//! Real positions and reduced (fractional) coordinates are related by
//! `r = s.x * a + s.y * b + s.z * c`, i.e. `r = C s` with the lattice vectors
//! as the columns of `C`.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("unsupported periodic image convention code {0} (expected 0, 1, 2, 3 or 6)")]
    UnsupportedImcon(i64),
    #[error("cell tensor is singular (determinant {0:e})")]
    SingularCell(f64),
    #[error("cell tensor is not valid for imcon {imcon}: {reason}")]
    InvalidShape { imcon: i64, reason: &'static str },
    #[error("cell tensor has non-finite components")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm2().sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(v: [f64; 3]) -> Self {
        Vec3::new(v[0], v[1], v[2])
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for Vec3 {
    fn sub_assign(&mut self, o: Vec3) {
        *self = *self - o;
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// Fractional coordinates with respect to a cell. Not restricted to `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReducedCoords(pub Vec3);

/// Nearest integer, halves rounded away from zero (Fortran `NINT`).
#[inline]
pub fn nint(x: f64) -> f64 {
    x.round()
}

/// Periodic boundary convention, numbered as in DL_POLY's `imcon`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ImageConvention {
    None,
    Cubic,
    Orthorhombic,
    Parallelepiped,
    /// Periodic along the first two lattice vectors only.
    Slab,
}

impl ImageConvention {
    pub fn from_code(code: i64) -> Result<Self, GeometryError> {
        match code {
            0 => Ok(ImageConvention::None),
            1 => Ok(ImageConvention::Cubic),
            2 => Ok(ImageConvention::Orthorhombic),
            3 => Ok(ImageConvention::Parallelepiped),
            6 => Ok(ImageConvention::Slab),
            other => Err(GeometryError::UnsupportedImcon(other)),
        }
    }

    pub fn code(self) -> i64 {
        match self {
            ImageConvention::None => 0,
            ImageConvention::Cubic => 1,
            ImageConvention::Orthorhombic => 2,
            ImageConvention::Parallelepiped => 3,
            ImageConvention::Slab => 6,
        }
    }

    /// Which reduced components are periodic.
    pub fn periodic_mask(self) -> [bool; 3] {
        match self {
            ImageConvention::None => [false; 3],
            ImageConvention::Slab => [true, true, false],
            _ => [true; 3],
        }
    }
}

/// Minimum-image displacement in reduced coordinates: `d = b - NINT(b)` with
/// `b = to - from`, applied to the periodic components only.
pub fn min_image_displacement(
    from: ReducedCoords,
    to: ReducedCoords,
    imcon: ImageConvention,
) -> Vec3 {
    min_image(to.0 - from.0, imcon)
}

#[inline]
pub(crate) fn min_image(mut b: Vec3, imcon: ImageConvention) -> Vec3 {
    let [px, py, pz] = imcon.periodic_mask();
    if px {
        b.x -= nint(b.x);
    }
    if py {
        b.y -= nint(b.y);
    }
    if pz {
        b.z -= nint(b.z);
    }
    b
}

// Relative tolerance for the diagonal / equal-edge shape checks. Cell rows
// come from formatted text, so exact zeros are not guaranteed.
const SHAPE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellTensor {
    a: Vec3,
    b: Vec3,
    c: Vec3,
    imcon: ImageConvention,
    // Rows of C^-1, so that s = (inv[0]·r, inv[1]·r, inv[2]·r).
    inverse: [Vec3; 3],
}

impl CellTensor {
    pub fn new(a: Vec3, b: Vec3, c: Vec3, imcon: ImageConvention) -> Result<Self, GeometryError> {
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let code = imcon.code();
        let scale = a.norm().max(b.norm()).max(c.norm());
        let off_diag = [a.y, a.z, b.x, b.z, c.x, c.y]
            .iter()
            .any(|v| v.abs() > SHAPE_TOL * scale);
        match imcon {
            ImageConvention::Cubic => {
                if off_diag {
                    return Err(GeometryError::InvalidShape {
                        imcon: code,
                        reason: "cubic cell must be diagonal",
                    });
                }
                if (a.x - b.y).abs() > SHAPE_TOL * scale || (a.x - c.z).abs() > SHAPE_TOL * scale {
                    return Err(GeometryError::InvalidShape {
                        imcon: code,
                        reason: "cubic cell must have equal edges",
                    });
                }
            }
            ImageConvention::Orthorhombic if off_diag => {
                return Err(GeometryError::InvalidShape {
                    imcon: code,
                    reason: "orthorhombic cell must be diagonal",
                });
            }
            _ => {}
        }

        let inverse = match imcon {
            ImageConvention::None => invert_rows(a, b, c).unwrap_or([Vec3::ZERO; 3]),
            _ => {
                let det = determinant(a, b, c);
                if det == 0.0 || !det.is_finite() || det.abs() < f64::EPSILON * scale.powi(3) {
                    return Err(GeometryError::SingularCell(det));
                }
                invert_rows(a, b, c).ok_or(GeometryError::SingularCell(det))?
            }
        };
        Ok(CellTensor {
            a,
            b,
            c,
            imcon,
            inverse,
        })
    }

    pub fn cubic(length: f64) -> Result<Self, GeometryError> {
        Self::new(
            Vec3::new(length, 0.0, 0.0),
            Vec3::new(0.0, length, 0.0),
            Vec3::new(0.0, 0.0, length),
            ImageConvention::Cubic,
        )
    }

    pub fn orthorhombic(lx: f64, ly: f64, lz: f64) -> Result<Self, GeometryError> {
        Self::new(
            Vec3::new(lx, 0.0, 0.0),
            Vec3::new(0.0, ly, 0.0),
            Vec3::new(0.0, 0.0, lz),
            ImageConvention::Orthorhombic,
        )
    }

    /// A cell with no periodicity.
    pub fn open() -> Self {
        CellTensor {
            a: Vec3::ZERO,
            b: Vec3::ZERO,
            c: Vec3::ZERO,
            imcon: ImageConvention::None,
            inverse: [Vec3::ZERO; 3],
        }
    }

    pub fn a(&self) -> Vec3 {
        self.a
    }

    pub fn b(&self) -> Vec3 {
        self.b
    }

    pub fn c(&self) -> Vec3 {
        self.c
    }

    pub fn imcon(&self) -> ImageConvention {
        self.imcon
    }

    pub fn is_periodic(&self) -> bool {
        self.imcon != ImageConvention::None
    }

    pub fn to_reduced(&self, r: Vec3) -> Result<ReducedCoords, GeometryError> {
        if !self.is_periodic() {
            return Err(GeometryError::SingularCell(determinant(self.a, self.b, self.c)));
        }
        Ok(self.reduce(r))
    }

    // Infallible variant for cells already known to be periodic.
    #[inline]
    pub(crate) fn reduce(&self, r: Vec3) -> ReducedCoords {
        let [i0, i1, i2] = self.inverse;
        ReducedCoords(Vec3::new(i0.dot(r), i1.dot(r), i2.dot(r)))
    }

    #[inline]
    pub fn to_real(&self, s: ReducedCoords) -> Vec3 {
        let s = s.0;
        self.a * s.x + self.b * s.y + self.c * s.z
    }

    /// `|det C|` in Å³.
    pub fn volume(&self) -> f64 {
        determinant(self.a, self.b, self.c).abs()
    }

    /// Minimum-image vector from `from` to `to`, in real units.
    #[inline]
    pub fn min_image_vector(&self, from: Vec3, to: Vec3) -> Vec3 {
        if !self.is_periodic() {
            return to - from;
        }
        let d = min_image(self.reduce(to).0 - self.reduce(from).0, self.imcon);
        self.to_real(ReducedCoords(d))
    }

    /// Translates `r` by a lattice vector so that its periodic reduced
    /// components lie in `[-0.5, 0.5)`. Points already inside are returned
    /// untouched.
    pub fn wrap_point(&self, r: Vec3) -> Vec3 {
        if !self.is_periodic() {
            return r;
        }
        let s = self.reduce(r).0;
        let [px, py, pz] = self.imcon.periodic_mask();
        let shift = |v: f64, periodic: bool| if periodic { (v + 0.5).floor() } else { 0.0 };
        let (kx, ky, kz) = (shift(s.x, px), shift(s.y, py), shift(s.z, pz));
        if kx == 0.0 && ky == 0.0 && kz == 0.0 {
            return r;
        }
        r - self.lattice_translation(kx, ky, kz)
    }

    /// `kx * a + ky * b + kz * c`.
    pub fn lattice_translation(&self, kx: f64, ky: f64, kz: f64) -> Vec3 {
        self.a * kx + self.b * ky + self.c * kz
    }

    /// Largest distance for which the minimum image of every pair is unique:
    /// half the smallest perpendicular width over the periodic directions.
    /// Infinite for an open system.
    pub fn min_image_radius(&self) -> f64 {
        let (a, b, c) = (self.a, self.b, self.c);
        match self.imcon {
            ImageConvention::None => f64::INFINITY,
            ImageConvention::Slab => {
                let area = a.cross(b).norm();
                0.5 * (area / a.norm()).min(area / b.norm())
            }
            _ => {
                let v = self.volume();
                let wa = v / b.cross(c).norm();
                let wb = v / c.cross(a).norm();
                let wc = v / a.cross(b).norm();
                0.5 * wa.min(wb).min(wc)
            }
        }
    }
}

/// Determinant of the matrix with rows `a`, `b`, `c`, by cofactor
/// expansion along the first row.
fn determinant(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    a.x * (b.y * c.z - b.z * c.y) - a.y * (b.x * c.z - b.z * c.x) + a.z * (b.x * c.y - b.y * c.x)
}

/// Rows of the inverse of `C`, where `C` has `a`, `b`, `c` as columns.
///
/// For `C = [a b c]`, `C^-1 = adj(C) / det` and the rows of the adjugate are
/// the cross products `b×c`, `c×a`, `a×b`.
fn invert_rows(a: Vec3, b: Vec3, c: Vec3) -> Option<[Vec3; 3]> {
    let det = determinant(a, b, c);
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let inv = 1.0 / det;
    Some([b.cross(c) * inv, c.cross(a) * inv, a.cross(b) * inv])
}
