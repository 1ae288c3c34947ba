//! Spherical Web-Mercator projection and the local ENU frame.
//!
//! All physics runs in a local east-north-up frame measured in meters. The
//! frame is bound to WGS-84 through a [`GeoAnchor`]; geodetic coordinates only
//! appear at ingest and export boundaries.
//!
//! The local frame is the Mercator plane shifted to the anchor and scaled by
//! `cos(origin_lat)`, which turns Mercator meters back into ground meters at
//! the anchor latitude. Heights are carried through untouched: `z` is
//! `alt - origin_alt` and takes no part in the projection.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Sphere radius of the Web-Mercator projection (meters).
pub const EARTH_RADIUS_M: f64 = 6_378_137.0;

/// Latitude cutoff (degrees) at which the projection becomes square.
pub const MERCATOR_MAX_LAT: f64 = 85.05113;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("latitude {lat} outside Mercator domain (|lat| <= {MERCATOR_MAX_LAT})")]
    OutOfDomain { lat: f64 },
    #[error("longitude {lon} outside [-180, 180]")]
    LongitudeOutOfRange { lon: f64 },
    #[error("invalid geo anchor: {0}")]
    InvalidAnchor(String),
}

/// Forward spherical Mercator projection.
pub fn wgs84_to_mercator(lat: f64, lon: f64) -> Result<(f64, f64), GeoError> {
    if !lat.is_finite() || lat.abs() > MERCATOR_MAX_LAT {
        return Err(GeoError::OutOfDomain { lat });
    }
    if !lon.is_finite() || lon.abs() > 180.0 {
        return Err(GeoError::LongitudeOutOfRange { lon });
    }
    let x = EARTH_RADIUS_M * lon.to_radians();
    let y = EARTH_RADIUS_M * lat.to_radians().sin().atanh();
    Ok((x, y))
}

/// Inverse spherical Mercator projection, returns `(lat, lon)` in degrees.
pub fn mercator_to_wgs84(x: f64, y: f64) -> (f64, f64) {
    let lon = (x / EARTH_RADIUS_M).to_degrees();
    let lat = (y / EARTH_RADIUS_M).sinh().atan().to_degrees();
    (lat, lon)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
    pub alt: f64,
}

/// Binds the local ENU frame to WGS-84.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoAnchor {
    pub origin_lat: f64,
    pub origin_lon: f64,
    #[serde(default)]
    pub origin_alt: f64,
}

impl GeoAnchor {
    pub fn new(origin_lat: f64, origin_lon: f64, origin_alt: f64) -> Result<Self, GeoError> {
        let anchor = Self {
            origin_lat,
            origin_lon,
            origin_alt,
        };
        anchor.validate()?;
        Ok(anchor)
    }

    pub fn validate(&self) -> Result<(), GeoError> {
        if !(self.origin_lat.abs() < 90.0) {
            return Err(GeoError::InvalidAnchor(format!(
                "|lat| must be < 90, got {}",
                self.origin_lat
            )));
        }
        if !(self.origin_lon.abs() <= 180.0) {
            return Err(GeoError::InvalidAnchor(format!(
                "|lon| must be <= 180, got {}",
                self.origin_lon
            )));
        }
        if !self.origin_alt.is_finite() {
            return Err(GeoError::InvalidAnchor("altitude must be finite".into()));
        }
        if self.origin_lat.abs() > MERCATOR_MAX_LAT {
            return Err(GeoError::OutOfDomain {
                lat: self.origin_lat,
            });
        }
        Ok(())
    }

    /// Mercator scale correction at the anchor latitude.
    pub fn scale(&self) -> f64 {
        self.origin_lat.to_radians().cos()
    }

    fn origin_mercator(&self) -> (f64, f64) {
        // validated anchors are always inside the projection domain
        wgs84_to_mercator(self.origin_lat, self.origin_lon).unwrap_or((0.0, 0.0))
    }

    /// Mercator meters to local ENU meters (z = 0).
    pub fn mercator_to_enu(&self, x: f64, y: f64) -> [f64; 2] {
        let (x0, y0) = self.origin_mercator();
        let k = self.scale();
        [(x - x0) * k, (y - y0) * k]
    }

    pub fn enu_to_mercator(&self, east: f64, north: f64) -> (f64, f64) {
        let (x0, y0) = self.origin_mercator();
        let k = self.scale();
        (x0 + east / k, y0 + north / k)
    }

    pub fn enu_to_geo(&self, enu: [f64; 3]) -> GeoPoint {
        let (x, y) = self.enu_to_mercator(enu[0], enu[1]);
        let (lat, lon) = mercator_to_wgs84(x, y);
        GeoPoint {
            lat,
            lon,
            alt: self.origin_alt + enu[2],
        }
    }

    pub fn geo_to_enu(&self, point: GeoPoint) -> Result<[f64; 3], GeoError> {
        let (x, y) = wgs84_to_mercator(point.lat, point.lon)?;
        let [e, n] = self.mercator_to_enu(x, y);
        Ok([e, n, point.alt - self.origin_alt])
    }
}

impl Default for GeoAnchor {
    fn default() -> Self {
        Self {
            origin_lat: 0.0,
            origin_lon: 0.0,
            origin_alt: 0.0,
        }
    }
}
