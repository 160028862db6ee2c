use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{all_finite, fro_sq, hcat};

/// Default cap on the number of generator columns kept per observer set.
pub const DEFAULT_REDUCTION_ORDER: usize = 20;

/// A zonotope `<g, H> = { g + H xi : |xi|_inf <= 1 }`.
///
/// `H` may have zero columns, in which case the set is the single point `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct Zonotope {
    center: DVector<f64>,
    generators: DMatrix<f64>,
}

impl Zonotope {
    pub fn new(center: DVector<f64>, generators: DMatrix<f64>) -> Result<Self> {
        if generators.nrows() != center.len() {
            return Err(Error::dim(format!(
                "generator matrix has {} rows but center has length {}",
                generators.nrows(),
                center.len()
            )));
        }
        if !center.iter().all(|x| x.is_finite()) || !all_finite(&generators) {
            return Err(Error::InvalidParameter(
                "zonotope entries must be finite".into(),
            ));
        }
        Ok(Zonotope { center, generators })
    }

    /// The singleton `{center}`.
    pub fn point(center: DVector<f64>) -> Self {
        let n = center.len();
        Zonotope {
            center,
            generators: DMatrix::zeros(n, 0),
        }
    }

    /// Axis-aligned box `center + diag(radii) B`.
    pub fn from_box(center: DVector<f64>, radii: &DVector<f64>) -> Result<Self> {
        if radii.len() != center.len() {
            return Err(Error::dim("box radii and center differ in length"));
        }
        Zonotope::new(center, DMatrix::from_diagonal(radii))
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn generators(&self) -> &DMatrix<f64> {
        &self.generators
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Number of generator columns.
    pub fn order(&self) -> usize {
        self.generators.ncols()
    }

    pub fn minkowski_sum(&self, other: &Zonotope) -> Result<Zonotope> {
        if self.dim() != other.dim() {
            return Err(Error::dim(format!(
                "minkowski sum of {}-D and {}-D zonotopes",
                self.dim(),
                other.dim()
            )));
        }
        Ok(Zonotope {
            center: &self.center + &other.center,
            generators: hcat(self.dim(), &[&self.generators, &other.generators])?,
        })
    }

    /// Image `K Z = <K g, K H>`.
    pub fn linear_map(&self, k: &DMatrix<f64>) -> Result<Zonotope> {
        if k.ncols() != self.dim() {
            return Err(Error::dim(format!(
                "map with {} columns applied to {}-D zonotope",
                k.ncols(),
                self.dim()
            )));
        }
        Ok(Zonotope {
            center: k * &self.center,
            generators: k * &self.generators,
        })
    }

    pub fn translate(&self, offset: &DVector<f64>) -> Result<Zonotope> {
        if offset.len() != self.dim() {
            return Err(Error::dim("translation offset has wrong length"));
        }
        Ok(Zonotope {
            center: &self.center + offset,
            generators: self.generators.clone(),
        })
    }

    /// Squared F-radius, i.e. the F-norm size `|H|_F^2`.
    pub fn f_radius_sq(&self) -> f64 {
        fro_sq(&self.generators)
    }

    /// Excluding degree of the origin, `|g|_2^2 / |H|_F^2`.
    pub fn excluding_degree(&self) -> Result<f64> {
        let size = self.f_radius_sq();
        if size <= 0.0 {
            return Err(Error::DegenerateSet);
        }
        Ok(self.center.norm_squared() / size)
    }

    /// Support function `max_{z in Z} d^T z`.
    pub fn support(&self, direction: &DVector<f64>) -> Result<f64> {
        if direction.len() != self.dim() {
            return Err(Error::dim("support direction has wrong length"));
        }
        let spread: f64 = (direction.transpose() * &self.generators)
            .iter()
            .map(|x| x.abs())
            .sum();
        Ok(direction.dot(&self.center) + spread)
    }

    /// Interval hull radii (row-wise absolute sums of the generators).
    pub fn interval_radii(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.dim(),
            self.generators
                .row_iter()
                .map(|row| row.iter().map(|x| x.abs()).sum::<f64>()),
        )
    }

    /// Bounds the number of generators by `q`.
    ///
    /// The `q - n` columns with the largest Euclidean norm are kept, the rest
    /// are replaced by their interval hull. The result always contains `self`.
    pub fn reduce_order(&self, q: usize) -> Result<Zonotope> {
        let n = self.dim();
        if q < n {
            return Err(Error::InvalidParameter(format!(
                "reduction order {q} is below the dimension {n}"
            )));
        }
        let r = self.order();
        if r <= q {
            return Ok(self.clone());
        }
        let norms: Vec<f64> = self.generators.column_iter().map(|c| c.norm()).collect();
        let mut idx: Vec<usize> = (0..r).collect();
        idx.sort_by(|&a, &b| {
            norms[b]
                .partial_cmp(&norms[a])
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        });
        let keep = q - n;
        let mut out = DMatrix::zeros(n, q);
        for (dst, &src) in idx[..keep].iter().enumerate() {
            out.set_column(dst, &self.generators.column(src));
        }
        for &src in &idx[keep..] {
            for row in 0..n {
                out[(row, keep + row)] += self.generators[(row, src)].abs();
            }
        }
        Ok(Zonotope {
            center: self.center.clone(),
            generators: out,
        })
    }

    /// Point evaluation `g + H xi`.
    pub fn at(&self, xi: &DVector<f64>) -> Result<DVector<f64>> {
        if xi.len() != self.order() {
            return Err(Error::dim("coefficient vector length differs from order"));
        }
        Ok(&self.center + &self.generators * xi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dvector;

    fn z(c: DVector<f64>, rows: usize, cols: usize, h: &[f64]) -> Zonotope {
        Zonotope::new(c, DMatrix::from_row_slice(rows, cols, h)).unwrap()
    }

    #[test]
    fn minkowski_sum_concatenates() {
        let a = Zonotope::new(dvector![1.0, 0.0], DMatrix::identity(2, 2)).unwrap();
        let b = Zonotope::new(dvector![0.0, 1.0], DMatrix::identity(2, 2) * 2.0).unwrap();
        let s = a.minkowski_sum(&b).unwrap();
        assert_eq!(s.center(), &dvector![1.0, 1.0]);
        assert_eq!(
            s.generators(),
            &DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 2.0, 0.0, 0.0, 1.0, 0.0, 2.0])
        );

        let e = Zonotope::point(dvector![0.0, 0.0]);
        assert_eq!(a.minkowski_sum(&e).unwrap(), a);

        let one = z(dvector![1.0], 1, 1, &[2.0]);
        let two = z(dvector![-1.0], 1, 1, &[3.0]);
        let s = one.minkowski_sum(&two).unwrap();
        assert_eq!(s.center(), &dvector![0.0]);
        assert_eq!(s.generators(), &DMatrix::from_row_slice(1, 2, &[2.0, 3.0]));

        assert!(a.minkowski_sum(&one).is_err());
    }

    #[test]
    fn linear_map_examples() {
        let a = Zonotope::new(dvector![1.0, 1.0], DMatrix::identity(2, 2)).unwrap();
        assert_eq!(a.linear_map(&DMatrix::identity(2, 2)).unwrap(), a);
        let s = a.linear_map(&(DMatrix::identity(2, 2) * 2.0)).unwrap();
        assert_eq!(s.center(), &dvector![2.0, 2.0]);
        assert_eq!(s.generators(), &(DMatrix::identity(2, 2) * 2.0));

        let b = Zonotope::new(dvector![1.0, 2.0], DMatrix::identity(2, 2)).unwrap();
        let p = b
            .linear_map(&DMatrix::from_row_slice(1, 2, &[1.0, 1.0]))
            .unwrap();
        assert_eq!(p.center(), &dvector![3.0]);
        assert_eq!(p.generators(), &DMatrix::from_row_slice(1, 2, &[1.0, 1.0]));
        assert!(b.linear_map(&DMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn f_radius_examples() {
        let a = Zonotope::new(dvector![7.0, -3.0], DMatrix::identity(2, 2)).unwrap();
        assert_eq!(a.f_radius_sq(), 2.0);
        assert_eq!(Zonotope::point(dvector![1.0, 2.0]).f_radius_sq(), 0.0);
        let b = z(dvector![0.0, 0.0], 2, 3, &[4.0, 1.0, 0.1, 0.0, 1.0, 0.0]);
        assert_relative_eq!(b.f_radius_sq(), 18.01, epsilon = 1e-12);
    }

    #[test]
    fn excluding_degree_examples() {
        let a = Zonotope::new(dvector![3.0, 4.0], DMatrix::identity(2, 2)).unwrap();
        assert_relative_eq!(a.excluding_degree().unwrap(), 12.5);
        let b = Zonotope::new(dvector![0.0, 0.0], DMatrix::identity(2, 2)).unwrap();
        assert_eq!(b.excluding_degree().unwrap(), 0.0);
        let c = z(dvector![1.0, 0.0], 2, 2, &[2.0, 0.0, 0.0, 1.0]);
        assert_relative_eq!(c.excluding_degree().unwrap(), 0.2);

        let degenerate = Zonotope::new(dvector![1.0, 0.0], DMatrix::zeros(2, 3)).unwrap();
        assert!(matches!(
            degenerate.excluding_degree(),
            Err(Error::DegenerateSet)
        ));
        assert!(matches!(
            Zonotope::point(dvector![1.0]).excluding_degree(),
            Err(Error::DegenerateSet)
        ));
    }

    #[test]
    fn reduce_order_examples() {
        let h = z(dvector![0.0, 0.0], 2, 3, &[4.0, 1.0, 0.1, 0.0, 1.0, 0.0]);
        let r = h.reduce_order(2).unwrap();
        assert_eq!(r.order(), 2);
        assert_relative_eq!(r.generators()[(0, 0)], 5.1, epsilon = 1e-12);
        assert_relative_eq!(r.generators()[(1, 1)], 1.0, epsilon = 1e-12);
        assert_eq!(r.generators()[(0, 1)], 0.0);
        assert_eq!(r.generators()[(1, 0)], 0.0);

        assert_eq!(h.reduce_order(3).unwrap(), h);
        assert_eq!(h.reduce_order(5).unwrap(), h);
        assert!(h.reduce_order(1).is_err());
    }

    #[test]
    fn reduce_keeps_largest_columns() {
        // column norms 4, 1.41, 0.1, 3, 0.5; q = 4 keeps the first and fourth
        let h = z(
            dvector![1.0, -1.0],
            2,
            5,
            &[4.0, 1.0, 0.1, 0.0, 0.5, 0.0, 1.0, 0.0, 3.0, 0.0],
        );
        let r = h.reduce_order(4).unwrap();
        assert_eq!(r.order(), 4);
        assert_eq!(r.generators().column(0).into_owned(), h.generators().column(0).into_owned());
        assert_eq!(r.generators().column(1).into_owned(), h.generators().column(3).into_owned());
        assert_relative_eq!(r.generators()[(0, 2)], 1.6, epsilon = 1e-12);
        assert_relative_eq!(r.generators()[(1, 3)], 1.0, epsilon = 1e-12);
        assert_eq!(r.center(), h.center());
    }

    #[test]
    fn rejects_malformed() {
        assert!(Zonotope::new(dvector![1.0, 2.0], DMatrix::zeros(3, 1)).is_err());
        assert!(Zonotope::new(dvector![f64::NAN], DMatrix::zeros(1, 0)).is_err());
        assert!(Zonotope::new(dvector![0.0], DMatrix::from_element(1, 1, f64::INFINITY)).is_err());
    }

    #[test]
    fn support_of_box() {
        let b = Zonotope::new(dvector![1.0, 0.0], DMatrix::identity(2, 2)).unwrap();
        assert_relative_eq!(b.support(&dvector![1.0, 1.0]).unwrap(), 3.0);
        assert_relative_eq!(b.support(&dvector![-1.0, 0.0]).unwrap(), 0.0);
    }
}
