use serde::{Deserialize, Serialize};

use super::Vec3;

/// Axis-aligned box given by its min and max corners.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    pub const EMPTY: Aabb = Aabb {
        min: [f64::INFINITY; 3],
        max: [f64::NEG_INFINITY; 3],
    };

    pub fn new(min: [f64; 3], max: [f64; 3]) -> Self {
        Aabb { min, max }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> Self {
        let mut b = Aabb::EMPTY;
        for p in points {
            b.grow(p);
        }
        b
    }

    pub fn grow(&mut self, p: &Vec3) {
        for k in 0..3 {
            self.min[k] = self.min[k].min(p[k]);
            self.max[k] = self.max[k].max(p[k]);
        }
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        let mut out = *self;
        for k in 0..3 {
            out.min[k] = out.min[k].min(other.min[k]);
            out.max[k] = out.max[k].max(other.max[k]);
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        (0..3).all(|k| self.min[k].is_finite() && self.max[k].is_finite() && self.min[k] <= self.max[k])
    }

    /// Strictly positive extent on every axis.
    pub fn is_nondegenerate(&self) -> bool {
        self.is_valid() && (0..3).all(|k| self.max[k] > self.min[k])
    }

    pub fn center(&self) -> [f64; 3] {
        [
            0.5 * (self.min[0] + self.max[0]),
            0.5 * (self.min[1] + self.max[1]),
            0.5 * (self.min[2] + self.max[2]),
        ]
    }

    pub fn extent(&self) -> [f64; 3] {
        [
            self.max[0] - self.min[0],
            self.max[1] - self.min[1],
            self.max[2] - self.min[2],
        ]
    }

    pub fn diagonal(&self) -> f64 {
        let e = self.extent();
        (e[0] * e[0] + e[1] * e[1] + e[2] * e[2]).sqrt()
    }

    /// Open-interval overlap: boxes that only touch do not overlap.
    pub fn overlaps(&self, other: &Aabb) -> bool {
        (0..3).all(|k| self.min[k] < other.max[k] && other.min[k] < self.max[k])
    }

    /// Closed containment of `inner` in `self`.
    pub fn contains_box(&self, inner: &Aabb) -> bool {
        (0..3).all(|k| inner.min[k] >= self.min[k] && inner.max[k] <= self.max[k])
    }

    pub fn translated(&self, t: [f64; 3]) -> Aabb {
        let mut out = *self;
        for k in 0..3 {
            out.min[k] += t[k];
            out.max[k] += t[k];
        }
        out
    }

    /// Squared distance from `p` to the box (0 inside).
    pub fn distance_squared(&self, p: &Vec3) -> f64 {
        let mut d2 = 0.0;
        for k in 0..3 {
            let v = p[k];
            let d = if v < self.min[k] {
                self.min[k] - v
            } else if v > self.max[k] {
                v - self.max[k]
            } else {
                0.0
            };
            d2 += d * d;
        }
        d2
    }
}
