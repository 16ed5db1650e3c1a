//! Lattice geometries.

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};

/// Symmetric generator `Δ` of a finite graph: off-diagonal entries are jump rates and every row
/// sums to zero, so `-Δ` is positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphLaplacian {
    matrix: DMatrix<f64>,
}

impl GraphLaplacian {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || matrix.ncols() != n {
            return invalid("graph Laplacian must be a non-empty square matrix");
        }
        let scale = matrix.amax().max(1.0);
        for i in 0..n {
            let row: f64 = matrix.row(i).sum();
            if row.abs() > 1e-12 * scale {
                return invalid(format!("row {i} of the Laplacian sums to {row}"));
            }
            for j in 0..n {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > 1e-12 * scale {
                    return invalid("graph Laplacian is not symmetric");
                }
                if i != j && matrix[(i, j)] < 0.0 {
                    return invalid("negative jump rate in graph Laplacian");
                }
            }
        }
        Ok(GraphLaplacian { matrix })
    }

    /// Laplacian of a weighted edge list on `n` vertices.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut m = DMatrix::zeros(n, n);
        for &(a, b, w) in edges {
            if a >= n || b >= n {
                return invalid(format!("edge ({a}, {b}) outside {n} vertices"));
            }
            if a == b {
                continue;
            }
            m[(a, b)] += w;
            m[(b, a)] += w;
            m[(a, a)] -= w;
            m[(b, b)] -= w;
        }
        GraphLaplacian::new(m)
    }

    pub fn one_site() -> Self {
        GraphLaplacian {
            matrix: DMatrix::zeros(1, 1),
        }
    }

    pub fn path(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i, 1.0)).collect();
        GraphLaplacian::from_edges(n, &edges)
    }

    pub fn complete(n: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                edges.push((a, b, 1.0));
            }
        }
        GraphLaplacian::from_edges(n, &edges)
    }

    /// Nearest-neighbour Laplacian of the discrete torus `(ℤ/nℤ)^d`. Each of the `2d`
    /// neighbour relations contributes one unit of rate, so `n = 2` doubles edges and `n = 1`
    /// gives the zero matrix.
    pub fn torus(n: usize, d: usize) -> Result<Self> {
        if n == 0 || d == 0 {
            return invalid("torus needs positive period and dimension");
        }
        let sites = n.pow(d as u32);
        let mut m = DMatrix::zeros(sites, sites);
        for x in 0..sites {
            for axis in 0..d {
                let stride = n.pow(axis as u32);
                let coord = (x / stride) % n;
                for step in [1, n - 1] {
                    let y = x - coord * stride + ((coord + step) % n) * stride;
                    m[(x, y)] += 1.0;
                    m[(x, x)] -= 1.0;
                }
            }
        }
        GraphLaplacian::new(m)
    }

    /// Parses `one-site`, `path<n>`, `triangle`, `complete<n>` or `torus:<n>` (a cycle).
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "one-site" => return Ok(GraphLaplacian::one_site()),
            "triangle" => return GraphLaplacian::complete(3),
            _ => {}
        }
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::InvalidArgument(format!("bad graph name {name}")))
        };
        if let Some(n) = name.strip_prefix("torus:") {
            GraphLaplacian::torus(parse(n)?, 1)
        } else if let Some(n) = name.strip_prefix("path") {
            GraphLaplacian::path(parse(n)?)
        } else if let Some(n) = name.strip_prefix("complete") {
            GraphLaplacian::complete(parse(n)?)
        } else {
            invalid(format!("unknown graph {name}"))
        }
    }

    pub fn sites(&self) -> usize {
        self.matrix.nrows()
    }

    /// The matrix `Δ`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// The positive semidefinite matrix `-Δ`.
    pub fn minus_laplacian(&self) -> DMatrix<f64> {
        -&self.matrix
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Geometry {
    /// The full lattice ℤᵈ. `extent` is the side of the window over which spatial data are
    /// reported; values themselves are infinite-volume.
    Window { extent: u64 },
    /// The discrete torus `(ℤ/Pℤ)^d`.
    Torus { period: u64 },
    Graph(GraphLaplacian),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeSpec {
    pub dim: usize,
    pub geometry: Geometry,
}

impl LatticeSpec {
    pub fn new(dim: usize, geometry: Geometry) -> Result<Self> {
        if dim == 0 {
            return invalid("dimension must be at least 1");
        }
        match &geometry {
            Geometry::Torus { period } if *period == 0 => {
                return invalid("torus period must be at least 1")
            }
            Geometry::Window { extent } if *extent == 0 => {
                return invalid("window extent must be at least 1")
            }
            _ => {}
        }
        Ok(LatticeSpec { dim, geometry })
    }

    pub fn infinite(dim: usize) -> Result<Self> {
        LatticeSpec::new(dim, Geometry::Window { extent: 1 << 16 })
    }

    pub fn torus(dim: usize, period: u64) -> Result<Self> {
        LatticeSpec::new(dim, Geometry::Torus { period })
    }

    pub fn graph(laplacian: GraphLaplacian) -> Self {
        LatticeSpec {
            dim: 1,
            geometry: Geometry::Graph(laplacian),
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self.geometry, Geometry::Window { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_graphs() {
        assert_eq!(GraphLaplacian::from_name("one-site").unwrap().sites(), 1);
        assert_eq!(GraphLaplacian::from_name("path2").unwrap().sites(), 2);
        let tri = GraphLaplacian::from_name("triangle").unwrap();
        assert_eq!(tri.matrix()[(0, 0)], -2.0);
        let t2 = GraphLaplacian::from_name("torus:2").unwrap();
        assert_eq!(t2.matrix()[(0, 1)], 2.0);
        assert!(GraphLaplacian::from_name("blob").is_err());
    }

    #[test]
    fn torus_rows_have_degree_2d() {
        let t = GraphLaplacian::torus(3, 2).unwrap();
        assert_eq!(t.sites(), 9);
        for i in 0..9 {
            assert_eq!(t.matrix()[(i, i)], -4.0);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.5, -0.5]);
        assert!(GraphLaplacian::new(m).is_err());
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(GraphLaplacian::new(m).is_err());
        assert!(LatticeSpec::new(0, Geometry::Torus { period: 2 }).is_err());
        assert!(LatticeSpec::torus(2, 0).is_err());
    }
}
