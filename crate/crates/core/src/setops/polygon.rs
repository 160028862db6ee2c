use nalgebra::{DVector, Vector2};

use super::Zonotope;
use crate::error::{Error, Result};

// Generators whose cross product falls below this (relative) value are
// treated as parallel and merged.
const PARALLEL_TOL: f64 = 1e-12;

impl Zonotope {
    /// Vertices of a planar zonotope in counterclockwise order, starting from
    /// the vertex that minimizes the support in the direction of the first
    /// generator normal.
    ///
    /// A singleton gives one vertex and a segment gives its two endpoints.
    /// The loop is not closed; callers that need a closed ring repeat the
    /// first vertex.
    pub fn boundary_polygon_2d(&self) -> Result<Vec<[f64; 2]>> {
        if self.dim() != 2 {
            return Err(Error::dim(format!(
                "boundary polygon needs a 2-D zonotope, got dimension {}",
                self.dim()
            )));
        }
        let c = Vector2::new(self.center()[0], self.center()[1]);
        let scale = self
            .generators()
            .column_iter()
            .map(|g| g.norm())
            .fold(0.0, f64::max);

        // Orient each generator into the upper half plane, then sort by angle.
        let mut gens: Vec<Vector2<f64>> = self
            .generators()
            .column_iter()
            .map(|g| Vector2::new(g[0], g[1]))
            .filter(|g| g.norm() > PARALLEL_TOL * scale.max(1.0))
            .map(|g| if g.y < 0.0 || (g.y == 0.0 && g.x < 0.0) { -g } else { g })
            .collect();
        gens.sort_by(|a, b| a.y.atan2(a.x).total_cmp(&b.y.atan2(b.x)));

        let mut merged: Vec<Vector2<f64>> = Vec::with_capacity(gens.len());
        for g in gens {
            match merged.last_mut() {
                Some(last) if cross(last, &g).abs() <= PARALLEL_TOL * last.norm() * g.norm() => {
                    *last += g;
                }
                _ => merged.push(g),
            }
        }

        if merged.is_empty() {
            return Ok(vec![[c.x, c.y]]);
        }
        let total: Vector2<f64> = merged.iter().sum();
        let mut v = c - total;
        let mut vertices = Vec::with_capacity(2 * merged.len());
        for g in merged.iter().chain(merged.iter()).enumerate().map(|(j, g)| {
            if j < merged.len() {
                *g
            } else {
                -*g
            }
        }) {
            vertices.push([v.x, v.y]);
            v += 2.0 * g;
        }
        Ok(vertices)
    }

    /// Same as [`Zonotope::boundary_polygon_2d`] but as column vectors.
    pub fn boundary_vertices_2d(&self) -> Result<Vec<DVector<f64>>> {
        Ok(self
            .boundary_polygon_2d()?
            .into_iter()
            .map(|[x, y]| DVector::from_vec(vec![x, y]))
            .collect())
    }
}

fn cross(a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dvector, DMatrix};

    fn signed_area(poly: &[[f64; 2]]) -> f64 {
        let n = poly.len();
        (0..n)
            .map(|i| {
                let (a, b) = (poly[i], poly[(i + 1) % n]);
                a[0] * b[1] - a[1] * b[0]
            })
            .sum::<f64>()
            / 2.0
    }

    #[test]
    fn unit_box() {
        let z = Zonotope::new(dvector![0.0, 0.0], DMatrix::identity(2, 2)).unwrap();
        let p = z.boundary_polygon_2d().unwrap();
        assert_eq!(p, vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]);
        assert!(signed_area(&p) > 0.0);
    }

    #[test]
    fn segment() {
        let z = Zonotope::new(dvector![0.0, 0.0], DMatrix::from_column_slice(2, 1, &[1.0, 0.0]))
            .unwrap();
        assert_eq!(z.boundary_polygon_2d().unwrap(), vec![[-1.0, 0.0], [1.0, 0.0]]);
    }

    #[test]
    fn sheared_parallelogram() {
        let z = Zonotope::new(
            dvector![0.0, 0.0],
            DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]),
        )
        .unwrap();
        let p = z.boundary_polygon_2d().unwrap();
        assert_eq!(p, vec![[-2.0, -1.0], [0.0, -1.0], [2.0, 1.0], [0.0, 1.0]]);
        assert!((signed_area(&p) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn parallel_and_zero_generators_merge() {
        let z = Zonotope::new(
            dvector![1.0, 2.0],
            DMatrix::from_row_slice(2, 4, &[1.0, -2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]),
        )
        .unwrap();
        let p = z.boundary_polygon_2d().unwrap();
        assert_eq!(p.len(), 4);
        assert_eq!(p[0], [-2.0, 1.0]);
    }

    #[test]
    fn singleton_and_wrong_dimension() {
        let z = Zonotope::point(dvector![0.5, -0.5]);
        assert_eq!(z.boundary_polygon_2d().unwrap(), vec![[0.5, -0.5]]);
        let z3 = Zonotope::point(dvector![0.0, 0.0, 0.0]);
        assert!(z3.boundary_polygon_2d().is_err());
    }
}
