//! Parametric scene description: point scatterers, facet-sampled
//! reflective plates and parasitic clutter.

use crate::error::{Error, Result};
use crate::geom::Vec3;
use num_complex::Complex64;

/// Isotropic Born scatterer with a complex reflectivity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointScatterer {
    pub position: Vec3,
    pub reflectivity: Complex64,
}

impl PointScatterer {
    pub fn new(position: Vec3, reflectivity: Complex64) -> Result<Self> {
        if !position.is_finite() || !reflectivity.is_finite() {
            return Err(Error::invalid("point scatterer", "non-finite fields"));
        }
        Ok(PointScatterer {
            position,
            reflectivity,
        })
    }
}

/// Planar rectangular reflector spanned by two orthogonal edges.
///
/// For field synthesis the plate is discretized into a uniform facet grid;
/// each facet acts as a point scatterer of reflectivity `gamma * facet_area`.
/// For occlusion tests the plate is an opaque open rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectivePlate {
    corner: Vec3,
    edge_u: Vec3,
    edge_v: Vec3,
    facet_density: f64,
    reflection_coefficient: Complex64,
}

impl ReflectivePlate {
    /// `facet_density` is facets per meter along each edge. The default
    /// reflection coefficient for a PEC surface is -1.
    pub fn new(
        corner: Vec3,
        edge_u: Vec3,
        edge_v: Vec3,
        facet_density: f64,
        reflection_coefficient: Complex64,
    ) -> Result<Self> {
        if edge_u.norm() == 0.0 || edge_v.norm() == 0.0 {
            return Err(Error::invalid("reflective plate", "zero-length edge"));
        }
        if edge_u.dot(edge_v).abs() > 1e-9 {
            return Err(Error::invalid(
                "reflective plate",
                format!("edges not orthogonal, u.v = {}", edge_u.dot(edge_v)),
            ));
        }
        if !facet_density.is_finite() || facet_density <= 0.0 {
            return Err(Error::invalid(
                "reflective plate",
                "facet_density must be positive",
            ));
        }
        Ok(ReflectivePlate {
            corner,
            edge_u,
            edge_v,
            facet_density,
            reflection_coefficient,
        })
    }

    pub fn pec(corner: Vec3, edge_u: Vec3, edge_v: Vec3, facet_density: f64) -> Result<Self> {
        Self::new(
            corner,
            edge_u,
            edge_v,
            facet_density,
            Complex64::new(-1.0, 0.0),
        )
    }

    pub fn corner(&self) -> Vec3 {
        self.corner
    }

    pub fn edge_u(&self) -> Vec3 {
        self.edge_u
    }

    pub fn edge_v(&self) -> Vec3 {
        self.edge_v
    }

    pub fn facet_density(&self) -> f64 {
        self.facet_density
    }

    pub fn reflection_coefficient(&self) -> Complex64 {
        self.reflection_coefficient
    }

    /// Unit normal `u x v / |u x v|`.
    pub fn normal(&self) -> Vec3 {
        self.edge_u.cross(self.edge_v).normalized()
    }

    pub fn center(&self) -> Vec3 {
        self.corner + self.edge_u * 0.5 + self.edge_v * 0.5
    }

    /// Number of facets along (u, v).
    pub fn facet_counts(&self) -> (usize, usize) {
        let nu = (self.edge_u.norm() * self.facet_density).ceil().max(1.0) as usize;
        let nv = (self.edge_v.norm() * self.facet_density).ceil().max(1.0) as usize;
        (nu, nv)
    }

    /// Facet grid as point scatterers: centers at cell midpoints with
    /// reflectivity `gamma * facet_area`.
    pub fn facets(&self) -> Vec<PointScatterer> {
        let (nu, nv) = self.facet_counts();
        let area = (self.edge_u.norm() / nu as f64) * (self.edge_v.norm() / nv as f64);
        let sigma = self.reflection_coefficient * area;
        let mut out = Vec::with_capacity(nu * nv);
        for j in 0..nv {
            for i in 0..nu {
                let fu = (i as f64 + 0.5) / nu as f64;
                let fv = (j as f64 + 0.5) / nv as f64;
                out.push(PointScatterer {
                    position: self.corner + self.edge_u * fu + self.edge_v * fv,
                    reflectivity: sigma,
                });
            }
        }
        out
    }

    /// Signed distance from `p` to the plate's infinite plane.
    pub fn signed_distance(&self, p: Vec3) -> f64 {
        (p - self.corner).dot(self.normal())
    }

    /// True when the open segment (a, b) crosses the open rectangle
    /// interior. Endpoints on the plate and edge-grazing hits do not count.
    pub fn segment_crosses(&self, a: Vec3, b: Vec3) -> bool {
        let n = self.normal();
        let da = (a - self.corner).dot(n);
        let db = (b - self.corner).dot(n);
        // both endpoints strictly on one side, or either on the plane
        if da * db >= 0.0 {
            return false;
        }
        let t = da / (da - db);
        const EPS_T: f64 = 1e-12;
        if t <= EPS_T || t >= 1.0 - EPS_T {
            return false;
        }
        let hit = a + (b - a) * t;
        let rel = hit - self.corner;
        let u_len2 = self.edge_u.dot(self.edge_u);
        let v_len2 = self.edge_v.dot(self.edge_v);
        let u = rel.dot(self.edge_u) / u_len2;
        let v = rel.dot(self.edge_v) / v_len2;
        // open rectangle: exact edge grazing does not occlude
        u > 0.0 && u < 1.0 && v > 0.0 && v < 1.0
    }
}

/// Full scene handed to the forward simulator.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SceneDescription {
    pub scatterers: Vec<PointScatterer>,
    pub plates: Vec<ReflectivePlate>,
    /// Clutter outside the domain of interest; imaged like any other
    /// single-bounce return but excluded from ground-truth masks.
    pub parasitic: Vec<PointScatterer>,
    pub occlusion_enabled: bool,
    pub double_bounce_enabled: bool,
}

impl SceneDescription {
    pub fn is_empty(&self) -> bool {
        self.scatterers.is_empty() && self.plates.is_empty() && self.parasitic.is_empty()
    }

    /// Positions of everything that counts as target geometry
    /// (scatterers and plate facets; parasitic clutter excluded).
    pub fn target_geometry(&self) -> Vec<Vec3> {
        let mut pts: Vec<Vec3> = self.scatterers.iter().map(|s| s.position).collect();
        for plate in &self.plates {
            pts.extend(plate.facets().iter().map(|f| f.position));
        }
        pts
    }
}
