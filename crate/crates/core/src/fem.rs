//! P1 element kernels and global sparse assembly.
//!
//! All element integrals have closed forms for P1 fields. Where a kernel
//! contains 1/area, the area is clamped from below by a fraction of the rest
//! area so that the largest element eigenvalue stays bounded on degenerate
//! triangles; kernels where the area cancels are written area-free.

use crate::mesh::Mesh;
use crate::{Error, Result, Vec2};
use std::io::Write;

/// Default relative area floor. Keeps the large stiffness eigenvalue of a
/// degenerate element around 1/eps times the regular value while staying
/// geometrically indistinguishable from zero measure.
pub const DEFAULT_EPS_AREA: f64 = 1e-4;

/// Area floor used wherever 1/area appears in element kernels.
#[inline]
pub fn clamp_area(area: f64, rest_area: f64, eps_area: f64) -> f64 {
    debug_assert!(rest_area > 0.0);
    area.max(eps_area * rest_area)
}

/// Edge-normal vectors `d_a = rot_cw(p_b - p_c)`; the P1 shape gradients are
/// `d_a / (2 area)`. Computed without any division so they stay finite for
/// degenerate triangles. Their sum is exactly zero.
#[inline]
pub fn edge_normals(p: &[Vec2; 3]) -> [Vec2; 3] {
    [
        (p[1] - p[2]).rot_cw(),
        (p[2] - p[0]).rot_cw(),
        (p[0] - p[1]).rot_cw(),
    ]
}

/// Constant gradients of the three P1 shape functions, using the given
/// (already clamped) area.
#[inline]
pub fn p1_gradients(p: &[Vec2; 3], area: f64) -> [Vec2; 3] {
    let d = edge_normals(p);
    let s = 1.0 / (2.0 * area);
    [d[0] * s, d[1] * s, d[2] * s]
}

/// Stiffness kernel for the -laplacian: `K_ab = \int grad N_a . grad N_b`.
///
/// Equals the half-cotangent formula on non-degenerate triangles; with a
/// clamped area it stays bounded on degenerate ones. Row sums are zero
/// (constant mode annihilation) irrespective of area.
#[inline]
pub fn cotangent_stiffness(p: &[Vec2; 3], area: f64) -> [[f64; 3]; 3] {
    let d = edge_normals(p);
    let s = 1.0 / (4.0 * area);
    let mut k = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            k[a][b] = d[a].dot(d[b]) * s;
        }
    }
    k
}

/// Consistent P1 mass kernel `M_ab = \int N_a N_b = area/12 (1 + delta_ab)`.
#[inline]
pub fn mass_matrix(area: f64) -> [[f64; 3]; 3] {
    let off = area / 12.0;
    let diag = area / 6.0;
    [
        [diag, off, off],
        [off, diag, off],
        [off, off, diag],
    ]
}

/// Fixed compressed-column sparsity pattern (structurally symmetric).
#[derive(Debug, Clone)]
pub struct CscPattern {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
}

impl CscPattern {
    /// Builds the block pattern induced by mesh node adjacency with
    /// `dofs_per_node` unknowns interleaved per node.
    pub fn from_mesh(mesh: &Mesh, dofs_per_node: usize) -> CscPattern {
        let nn = mesh.node_count();
        let n = nn * dofs_per_node;
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        col_ptr.push(0);
        for j_node in 0..nn {
            let mut block: Vec<usize> = Vec::with_capacity(mesh.neighbors(j_node).len() + 1);
            block.extend_from_slice(mesh.neighbors(j_node));
            block.push(j_node);
            block.sort_unstable();
            for _jc in 0..dofs_per_node {
                for &i_node in &block {
                    for ic in 0..dofs_per_node {
                        row_idx.push(i_node * dofs_per_node + ic);
                    }
                }
                col_ptr.push(row_idx.len());
            }
        }
        CscPattern { n, col_ptr, row_idx }
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// Value-slot of entry (row, col); the pattern must contain it.
    pub fn slot(&self, row: usize, col: usize) -> usize {
        let lo = self.col_ptr[col];
        let hi = self.col_ptr[col + 1];
        let k = self.row_idx[lo..hi]
            .binary_search(&row)
            .expect("entry outside sparsity pattern");
        lo + k
    }

    /// y = A x for values laid out on this pattern.
    pub fn spmv(&self, values: &[f64], x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..self.n {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                y[self.row_idx[k]] += values[k] * xj;
            }
        }
    }
}

/// Precomputed element-to-slot scatter map plus the value/rhs storage for one
/// dof layout. Assembly walks elements in ascending index order, which makes
/// the result independent of any other ordering concern and bitwise
/// reproducible.
pub struct FemSpace {
    pub pattern: CscPattern,
    pub dofs_per_node: usize,
    /// For element t, slots[t*bs^2 ..] holds the value-slot of each
    /// (local row a*dpn+ic, local col b*dpn+jc) pair, row-major.
    slots: Vec<u32>,
    block: usize,
}

impl FemSpace {
    pub fn new(mesh: &Mesh, dofs_per_node: usize) -> FemSpace {
        let pattern = CscPattern::from_mesh(mesh, dofs_per_node);
        let block = 3 * dofs_per_node;
        let mut slots = Vec::with_capacity(mesh.triangle_count() * block * block);
        for t in 0..mesh.triangle_count() {
            let tri = mesh.triangle(t);
            for a in 0..3 {
                for ic in 0..dofs_per_node {
                    let row = tri[a] * dofs_per_node + ic;
                    for b in 0..3 {
                        for jc in 0..dofs_per_node {
                            let col = tri[b] * dofs_per_node + jc;
                            slots.push(pattern.slot(row, col) as u32);
                        }
                    }
                }
            }
        }
        FemSpace {
            pattern,
            dofs_per_node,
            slots,
            block,
        }
    }

    pub fn n(&self) -> usize {
        self.pattern.n
    }

    pub fn block_size(&self) -> usize {
        self.block
    }

    /// Scatter-adds one element matrix/rhs pair. `local` is block x block
    /// row-major; `rhs_local` has block entries.
    #[inline]
    pub fn scatter(
        &self,
        t: usize,
        local: &[f64],
        rhs_local: &[f64],
        values: &mut [f64],
        rhs: &mut [f64],
        tri: [usize; 3],
    ) -> Result<()> {
        let bs = self.block;
        debug_assert_eq!(local.len(), bs * bs);
        if !local.iter().all(|v| v.is_finite()) || !rhs_local.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteElement(t));
        }
        let base = t * bs * bs;
        for r in 0..bs {
            for c in 0..bs {
                values[self.slots[base + r * bs + c] as usize] += local[r * bs + c];
            }
        }
        for a in 0..3 {
            for ic in 0..self.dofs_per_node {
                rhs[tri[a] * self.dofs_per_node + ic] += rhs_local[a * self.dofs_per_node + ic];
            }
        }
        Ok(())
    }

    /// Assembles a full system by calling `kernel` for every element in
    /// ascending order. The kernel fills the local matrix and local rhs.
    pub fn assemble<F>(&self, mesh: &Mesh, mut kernel: F) -> Result<(Vec<f64>, Vec<f64>)>
    where
        F: FnMut(usize, &mut [f64], &mut [f64]),
    {
        let bs = self.block;
        let mut values = vec![0.0; self.pattern.nnz()];
        let mut rhs = vec![0.0; self.pattern.n];
        let mut local = vec![0.0; bs * bs];
        let mut rhs_local = vec![0.0; bs];
        for t in 0..mesh.triangle_count() {
            local.iter_mut().for_each(|v| *v = 0.0);
            rhs_local.iter_mut().for_each(|v| *v = 0.0);
            kernel(t, &mut local, &mut rhs_local);
            self.scatter(t, &local, &rhs_local, &mut values, &mut rhs, mesh.triangle(t))?;
        }
        Ok((values, rhs))
    }
}

/// Debug dump in Matrix Market coordinate format.
pub fn write_matrix_market<W: Write>(
    mut w: W,
    pattern: &CscPattern,
    values: &[f64],
) -> std::io::Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", pattern.n, pattern.n, pattern.nnz())?;
    for j in 0..pattern.n {
        for k in pattern.col_ptr[j]..pattern.col_ptr[j + 1] {
            writeln!(w, "{} {} {:e}", pattern.row_idx[k] + 1, j + 1, values[k])?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{signed_area, BoundaryEdge};

    fn tri_unit() -> [Vec2; 3] {
        [Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)]
    }

    #[test]
    fn gradients_reference_triangle() {
        let p = tri_unit();
        let g = p1_gradients(&p, 0.5);
        assert!((g[0] - Vec2::new(-1.0, -1.0)).norm() < 1e-15);
        assert!((g[1] - Vec2::new(1.0, 0.0)).norm() < 1e-15);
        assert!((g[2] - Vec2::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn gradients_sum_zero_and_scale() {
        let p = [Vec2::new(0.3, 0.1), Vec2::new(1.7, 0.4), Vec2::new(0.9, 2.2)];
        let a = signed_area(p[0], p[1], p[2]);
        let g = p1_gradients(&p, a);
        let s = g[0] + g[1] + g[2];
        assert!(s.norm() < 1e-14);

        let p2 = [p[0] * 2.0, p[1] * 2.0, p[2] * 2.0];
        let a2 = signed_area(p2[0], p2[1], p2[2]);
        let g2 = p1_gradients(&p2, a2);
        for i in 0..3 {
            assert!((g2[i] - g[i] * 0.5).norm() < 1e-14);
        }
    }

    #[test]
    fn cotangent_reference_triangle() {
        // Direct integration of constant P1 gradients over the right triangle.
        let k = cotangent_stiffness(&tri_unit(), 0.5);
        let expect = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for a in 0..3 {
            for b in 0..3 {
                assert!((k[a][b] - expect[a][b]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn cotangent_equilateral() {
        let p = [
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.5, 3f64.sqrt() / 2.0),
        ];
        let a = signed_area(p[0], p[1], p[2]);
        let k = cotangent_stiffness(&p, a);
        let diag = 1.0 / 3f64.sqrt();
        let off = -0.5 / 3f64.sqrt();
        for i in 0..3 {
            assert!((k[i][i] - diag).abs() < 1e-14);
            for j in 0..3 {
                if i != j {
                    assert!((k[i][j] - off).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn cotangent_constant_mode() {
        let p = [Vec2::new(0.2, -0.4), Vec2::new(1.9, 0.3), Vec2::new(0.7, 1.5)];
        let a = signed_area(p[0], p[1], p[2]);
        let k = cotangent_stiffness(&p, a);
        for a_ in 0..3 {
            let row: f64 = k[a_].iter().sum();
            assert!(row.abs() < 1e-13);
        }
    }

    #[test]
    fn clamp_floor() {
        assert_eq!(clamp_area(0.5, 0.5, 1e-4), 0.5);
        assert_eq!(clamp_area(0.0, 0.5, 1e-4), 5e-5);
        assert_eq!(clamp_area(1e-9, 0.5, 1e-4), 5e-5);
    }

    fn square_mesh() -> Mesh {
        let nodes = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ];
        let tris = vec![[0, 1, 2], [0, 2, 3]];
        let bnd = [(0, 1), (1, 2), (2, 3), (3, 0)]
            .iter()
            .map(|&(a, b)| BoundaryEdge {
                a,
                b,
                tag: "w".into(),
            })
            .collect();
        Mesh::build(nodes, tris, bnd).unwrap()
    }

    #[test]
    fn assemble_two_triangle_quad() {
        // Shared-edge entries must be sums of both element contributions;
        // use a skewed quad so those contributions are nonzero.
        let nodes = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.2, 1.1),
            Vec2::new(0.0, 1.0),
        ];
        let tris = vec![[0usize, 1, 2], [0, 2, 3]];
        let bnd = [(0, 1), (1, 2), (2, 3), (3, 0)]
            .iter()
            .map(|&(a, b)| BoundaryEdge {
                a,
                b,
                tag: "w".into(),
            })
            .collect();
        let mesh = Mesh::build(nodes, tris.clone(), bnd).unwrap();
        let space = FemSpace::new(&mesh, 1);
        let (values, _) = space
            .assemble(&mesh, |t, local, _| {
                let p = mesh.triangle_positions(t);
                let a = signed_area(p[0], p[1], p[2]);
                let k = cotangent_stiffness(&p, a);
                for i in 0..3 {
                    for j in 0..3 {
                        local[i * 3 + j] = k[i][j];
                    }
                }
            })
            .unwrap();

        // Hand assembly: accumulate the two element matrices directly.
        let mut dense = [[0.0f64; 4]; 4];
        for tri in &tris {
            let p = [
                mesh.position(tri[0]),
                mesh.position(tri[1]),
                mesh.position(tri[2]),
            ];
            let a = signed_area(p[0], p[1], p[2]);
            let k = cotangent_stiffness(&p, a);
            for i in 0..3 {
                for j in 0..3 {
                    dense[tri[i]][tri[j]] += k[i][j];
                }
            }
        }
        let g = |i: usize, j: usize| values[space.pattern.slot(i, j)];
        for i in 0..4 {
            for j in 0..4 {
                let lo = space.pattern.col_ptr[j];
                let hi = space.pattern.col_ptr[j + 1];
                let got = match space.pattern.row_idx[lo..hi].binary_search(&i) {
                    Ok(k) => values[lo + k],
                    Err(_) => 0.0,
                };
                assert!((got - dense[i][j]).abs() < 1e-14);
            }
        }
        // The shared edge (0, 2) really receives two nonzero contributions.
        assert!(g(0, 2).abs() > 1e-3);
        // Row sums still annihilate constants after assembly.
        for i in 0..4 {
            let s: f64 = (0..4)
                .map(|j| {
                    let lo = space.pattern.col_ptr[j];
                    let hi = space.pattern.col_ptr[j + 1];
                    match space.pattern.row_idx[lo..hi].binary_search(&i) {
                        Ok(k) => values[lo + k],
                        Err(_) => 0.0,
                    }
                })
                .sum();
            assert!(s.abs() < 1e-13);
        }
    }

    #[test]
    fn assemble_zero_kernel() {
        let mesh = square_mesh();
        let space = FemSpace::new(&mesh, 2);
        let (values, rhs) = space.assemble(&mesh, |_, _, _| {}).unwrap();
        assert!(values.iter().all(|&v| v == 0.0));
        assert!(rhs.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn assemble_deterministic_bitwise() {
        let mesh = square_mesh();
        let space = FemSpace::new(&mesh, 3);
        let kernel = |t: usize, local: &mut [f64], rhs: &mut [f64]| {
            let p = mesh.triangle_positions(t);
            let a = signed_area(p[0], p[1], p[2]);
            let k = cotangent_stiffness(&p, a);
            for i in 0..9 {
                for j in 0..9 {
                    local[i * 9 + j] = k[i / 3][j / 3] * ((i % 3) as f64 - (j % 3) as f64 + 0.5);
                }
                rhs[i] = (t as f64 + 1.0) * (i as f64).sin();
            }
        };
        let (v1, r1) = space.assemble(&mesh, kernel).unwrap();
        let (v2, r2) = space.assemble(&mesh, kernel).unwrap();
        assert_eq!(v1, v2);
        assert_eq!(r1, r2);
    }

    #[test]
    fn assemble_reports_nonfinite_element() {
        let mesh = square_mesh();
        let space = FemSpace::new(&mesh, 1);
        let err = space
            .assemble(&mesh, |t, local, _| {
                if t == 1 {
                    local[0] = f64::NAN;
                }
            })
            .unwrap_err();
        assert!(matches!(err, Error::NonFiniteElement(1)));
    }

    #[test]
    fn needle_energy_and_clamp_bound() {
        // Needle: vertices 0 and 2 merge. The equality mode on the merging
        // pair has energy O(delta); the largest matrix entry grows like
        // 1/area until the clamp floor activates.
        let rest_area = 0.5;
        let eps = 1e-4;
        let mut prev_energy = f64::INFINITY;
        for k in 1..=6 {
            let delta = 10f64.powi(-k);
            let p = [
                Vec2::new(0.0, 0.0),
                Vec2::new(0.5, 1.0),
                Vec2::new(delta, 0.0),
            ];
            let a_raw = signed_area(p[0], p[1], p[2]);
            let a = clamp_area(a_raw, rest_area, eps);
            let kk = cotangent_stiffness(&p, a);
            let v = [1.0, 0.0, 1.0];
            let mut e = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    e += v[i] * kk[i][j] * v[j];
                }
            }
            assert!(e >= 0.0 && e < prev_energy);
            prev_energy = e;
            // Linear decay: energy ~ delta/2 while above the floor.
            if a_raw > eps * rest_area {
                assert!((e - delta / 2.0).abs() < 1e-3 * delta.max(1e-12));
            }
            let max_entry = kk
                .iter()
                .flatten()
                .fold(0f64, |m, &x| m.max(x.abs()));
            assert!(max_entry <= 1.0 / (eps * rest_area));
        }
    }
}
