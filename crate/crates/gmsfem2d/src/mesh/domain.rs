//! Perforated domain: a rectangle minus a set of circular inclusions.

use super::{MeshError, GEOM_TOL};
use crate::geometry::{polygon_area, Circle, Point, Rect};

/// Rectangle with circular holes, discretized lazily as inscribed regular
/// polygons with `polygon_segments` sides.
#[derive(Debug, Clone)]
pub struct PerforatedDomain {
    pub bbox: Rect,
    pub inclusions: Vec<Circle>,
    pub polygon_segments: usize,
}

pub fn build_domain(
    bbox: Rect,
    inclusions: Vec<Circle>,
    polygon_segments: usize,
) -> Result<PerforatedDomain, MeshError> {
    if polygon_segments < 8 {
        return Err(MeshError::InvalidPolygonSegments {
            got: polygon_segments,
        });
    }
    for (i, c) in inclusions.iter().enumerate() {
        if c.radius <= 0.0 {
            return Err(MeshError::NonpositiveRadius { index: i });
        }
        let inside = c.center.x - c.radius > bbox.min.x + GEOM_TOL
            && c.center.x + c.radius < bbox.max.x - GEOM_TOL
            && c.center.y - c.radius > bbox.min.y + GEOM_TOL
            && c.center.y + c.radius < bbox.max.y - GEOM_TOL;
        if !inside {
            return Err(MeshError::InclusionOutsideDomain { index: i });
        }
    }
    for i in 0..inclusions.len() {
        for j in (i + 1)..inclusions.len() {
            let d = inclusions[i].center.dist(inclusions[j].center);
            if d <= inclusions[i].radius + inclusions[j].radius + GEOM_TOL {
                return Err(MeshError::OverlappingInclusions { a: i, b: j });
            }
        }
    }
    Ok(PerforatedDomain {
        bbox,
        inclusions,
        polygon_segments,
    })
}

impl PerforatedDomain {
    pub fn unit_square(
        inclusions: Vec<Circle>,
        polygon_segments: usize,
    ) -> Result<Self, MeshError> {
        build_domain(Rect::unit_square(), inclusions, polygon_segments)
    }

    /// Hole polygons (counter-clockwise).
    pub fn polygons(&self) -> Vec<Vec<Point>> {
        self.inclusions
            .iter()
            .map(|c| c.inscribed_polygon(self.polygon_segments))
            .collect()
    }

    /// Total area of the polygonal holes.
    pub fn hole_area(&self) -> f64 {
        self.polygons().iter().map(|p| polygon_area(p)).sum()
    }

    /// Area of the meshable region (bbox minus polygonal holes).
    pub fn active_area(&self) -> f64 {
        self.bbox.area() - self.hole_area()
    }

    pub fn point_in_hole(&self, p: Point) -> bool {
        self.polygons()
            .iter()
            .any(|poly| crate::geometry::point_in_polygon(p, poly))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_inclusion_list_is_valid() {
        let d = PerforatedDomain::unit_square(vec![], 16).unwrap();
        assert_eq!(d.active_area(), 1.0);
    }

    #[test]
    fn single_inclusion_polygon_area() {
        let d = PerforatedDomain::unit_square(vec![Circle::new(0.5, 0.5, 0.1)], 16).unwrap();
        let poly_area = 0.5 * 16.0 * 0.01 * (2.0 * std::f64::consts::PI / 16.0).sin();
        assert!((d.active_area() - (1.0 - poly_area)).abs() < 1e-14);
        // polygonal defect against the true circle area is small
        assert!((d.active_area() - (1.0 - std::f64::consts::PI * 0.01)).abs() < 2e-3);
    }

    #[test]
    fn overlapping_inclusions_rejected() {
        let r = PerforatedDomain::unit_square(
            vec![Circle::new(0.5, 0.5, 0.1), Circle::new(0.55, 0.5, 0.1)],
            16,
        );
        assert!(matches!(r, Err(MeshError::OverlappingInclusions { .. })));
    }

    #[test]
    fn touching_inclusions_rejected() {
        let r = PerforatedDomain::unit_square(
            vec![Circle::new(0.3, 0.5, 0.1), Circle::new(0.5, 0.5, 0.1)],
            16,
        );
        assert!(matches!(r, Err(MeshError::OverlappingInclusions { .. })));
    }

    #[test]
    fn inclusion_outside_rejected() {
        let r = PerforatedDomain::unit_square(vec![Circle::new(0.95, 0.5, 0.1)], 16);
        assert!(matches!(r, Err(MeshError::InclusionOutsideDomain { .. })));
    }

    #[test]
    fn too_few_polygon_segments_rejected() {
        let r = PerforatedDomain::unit_square(vec![], 6);
        assert!(matches!(r, Err(MeshError::InvalidPolygonSegments { .. })));
    }
}
