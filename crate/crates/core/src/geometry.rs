//! Positions, headings and the Manhattan street layout.
//!
//! Street `k` of either orientation has its centerline at `k * period`, where
//! `period = block_size + street_width`. Block `(i, j)` occupies the square
//! `[i*period + w/2, i*period + w/2 + block_size]` on each axis. The area is
//! a torus for mobile nodes.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::num::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Scalar> Vec3<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn norm(self) -> T {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(self, other: Self) -> T {
        (self - other).norm()
    }

    /// Distance in the horizontal plane.
    pub fn distance_2d(self, other: Self) -> T {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }

    pub fn with_z(self, z: T) -> Self {
        Self { z, ..self }
    }
}

impl<T: Scalar> Add for Vec3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Scalar> Sub for Vec3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Scalar> Mul<T> for Vec3<T> {
    type Output = Self;
    fn mul(self, k: T) -> Self {
        Self::new(self.x * k, self.y * k, self.z * k)
    }
}

/// Axis-aligned direction of travel. North is +y, east is +x.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Heading {
    N,
    S,
    E,
    W,
}

impl Heading {
    pub const ALL: [Heading; 4] = [Heading::N, Heading::S, Heading::E, Heading::W];

    pub fn unit<T: Scalar>(self) -> (T, T) {
        match self {
            Heading::N => (T::zero(), T::one()),
            Heading::S => (T::zero(), -T::one()),
            Heading::E => (T::one(), T::zero()),
            Heading::W => (-T::one(), T::zero()),
        }
    }

    pub fn left(self) -> Heading {
        match self {
            Heading::N => Heading::W,
            Heading::W => Heading::S,
            Heading::S => Heading::E,
            Heading::E => Heading::N,
        }
    }

    pub fn right(self) -> Heading {
        match self {
            Heading::N => Heading::E,
            Heading::E => Heading::S,
            Heading::S => Heading::W,
            Heading::W => Heading::N,
        }
    }

    /// True when travel is along the y axis.
    pub fn is_vertical(self) -> bool {
        matches!(self, Heading::N | Heading::S)
    }

    pub fn is_positive(self) -> bool {
        matches!(self, Heading::N | Heading::E)
    }
}

/// Street grid dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layout<T> {
    pub block_size: T,
    pub street_width: T,
    pub blocks_x: u32,
    pub blocks_y: u32,
    pub sidewalk_width: T,
}

impl<T: Scalar> Layout<T> {
    pub fn period(&self) -> T {
        self.block_size + self.street_width
    }

    pub fn width(&self) -> T {
        T::from_u32(self.blocks_x).unwrap() * self.period()
    }

    pub fn height(&self) -> T {
        T::from_u32(self.blocks_y).unwrap() * self.period()
    }

    pub fn center(&self) -> (T, T) {
        let two = T::lit(2.0);
        (self.width() / two, self.height() / two)
    }

    /// Lower-left corner of block `(i, j)`.
    pub fn block_origin(&self, i: u32, j: u32) -> (T, T) {
        let half = self.street_width / T::lit(2.0);
        (
            T::from_u32(i).unwrap() * self.period() + half,
            T::from_u32(j).unwrap() * self.period() + half,
        )
    }

    /// Offset of the pedestrian walking line from a street centerline
    /// (middle of the sidewalk strip).
    pub fn sidewalk_line_offset(&self) -> T {
        self.street_width / T::lit(2.0) + self.sidewalk_width / T::lit(2.0)
    }

    /// Offset of a driving lane from the street centerline.
    pub fn lane_offset(&self) -> T {
        self.street_width / T::lit(4.0)
    }

    pub fn wrap_x(&self, x: T) -> T {
        wrap(x, self.width())
    }

    pub fn wrap_y(&self, y: T) -> T {
        wrap(y, self.height())
    }

    /// Tile index containing `(x, y)`; each tile is one block plus half of
    /// its four surrounding streets.
    pub fn tile_of(&self, x: T, y: T) -> (u32, u32) {
        let half = self.street_width / T::lit(2.0);
        let p = self.period();
        let i = (self.wrap_x(x - half) / p).floor().to_u32().unwrap_or(0).min(self.blocks_x - 1);
        let j = (self.wrap_y(y - half) / p).floor().to_u32().unwrap_or(0).min(self.blocks_y - 1);
        (i, j)
    }

    /// Distance from `c` to the nearest multiple of the grid period, on one axis.
    pub fn distance_to_nearest_street(&self, c: T) -> T {
        let p = self.period();
        let r = c - (c / p).round() * p;
        r.abs()
    }

    /// Shortest horizontal distance to any street centerline.
    pub fn distance_to_street_center(&self, x: T, y: T) -> T {
        self.distance_to_nearest_street(x).min(self.distance_to_nearest_street(y))
    }

    /// Position of the driving lane for a vehicle whose centerline walker is at
    /// `(x, y)` travelling along `heading` (right-hand traffic).
    pub fn lane_shift(&self, heading: Heading) -> (T, T) {
        let o = self.lane_offset();
        match heading {
            Heading::N => (o, T::zero()),
            Heading::S => (-o, T::zero()),
            Heading::E => (T::zero(), -o),
            Heading::W => (T::zero(), o),
        }
    }
}

/// Euclidean remainder into `[0, size)`.
pub fn wrap<T: Scalar>(v: T, size: T) -> T {
    let r = v % size;
    let r = if r < T::zero() { r + size } else { r };
    if r >= size {
        T::zero()
    } else {
        r
    }
}
