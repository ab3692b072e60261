use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Equatorial Earth radius in kilometres.
pub const EARTH_RADIUS_KM: f64 = 6378.137;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coord {
    pub lat: f64,
    pub lon: f64,
}

impl Coord {
    pub fn new(lat: f64, lon: f64) -> Self {
        Coord { lat, lon }
    }

    pub fn is_valid(&self) -> bool {
        (-90.0..=90.0).contains(&self.lat) && (-180.0..=180.0).contains(&self.lon)
    }
}

/// Planar distance in km after an equirectangular projection centred on the
/// mean latitude of the two points. Longitude differences wrap at the
/// antimeridian.
pub fn euclidean_distance<T: Real>(a: (T, T), b: (T, T)) -> T {
    let deg = T::lit(std::f64::consts::PI / 180.0);
    let (la, lb) = (a.0 * deg, b.0 * deg);
    let mut dlon = (b.1 - a.1) * deg;
    let pi = T::lit(std::f64::consts::PI);
    let two_pi = pi + pi;
    while dlon > pi {
        dlon = dlon - two_pi;
    }
    while dlon < -pi {
        dlon = dlon + two_pi;
    }
    let mid = (la + lb) / T::lit(2.0);
    let x = dlon.abs() * mid.cos();
    let y = (lb - la).abs();
    T::lit(EARTH_RADIUS_KM) * x.hypot(y)
}

pub fn distance(a: Coord, b: Coord) -> f64 {
    euclidean_distance((a.lat, a.lon), (b.lat, b.lon))
}

/// Fixed-reference projection used for clustering: a plane in which the
/// weighted k-means objective is an ordinary sum of squares.
#[derive(Clone, Copy, Debug)]
pub struct Projection {
    cos_ref: f64,
}

impl Projection {
    pub fn new(ref_lat: f64) -> Self {
        Projection {
            cos_ref: ref_lat.to_radians().cos().max(1e-6),
        }
    }

    pub fn forward(&self, c: Coord) -> [f64; 2] {
        [
            EARTH_RADIUS_KM * c.lon.to_radians() * self.cos_ref,
            EARTH_RADIUS_KM * c.lat.to_radians(),
        ]
    }

    pub fn inverse(&self, p: [f64; 2]) -> Coord {
        Coord {
            lat: (p[1] / EARTH_RADIUS_KM).to_degrees(),
            lon: (p[0] / (EARTH_RADIUS_KM * self.cos_ref)).to_degrees(),
        }
    }
}
