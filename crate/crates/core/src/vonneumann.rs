//! Tensor Von Neumann trace inequality `⟨X, Y⟩ ≤ ⟨σ^(d)(X), σ^(d)(Y)⟩`.
//!
//! [`vn_report`] measures the per-mode gaps. The structural side works on
//! cores expressed in a shared orthogonal frame: [`find_block_partition`]
//! finds the finest common block support, [`verify_equality_structure`]
//! checks that the cores vanish off the blocks and are blockwise
//! proportional, and [`check_equality_via_structure`] ties both together.

use crate::error::{Error, Result};
use crate::linalg::orthogonality_defect;
use crate::matrix::{dot, Matrix};
use crate::spectral::{all_mode_spectra, ModeSpectra};
use crate::tensor::{inner, multi_mode_mul_transposed, DenseTensor, Shape};

/// Frames whose `‖WWᵀ − I‖_F` exceeds this are rejected.
pub const FRAME_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct VnReport {
    pub inner: f64,
    /// `⟨σ^(d)(X), σ^(d)(Y)⟩` per mode.
    pub per_mode_bound: Vec<f64>,
    /// `bound − inner` per mode.
    pub per_mode_gap: Vec<f64>,
    /// Every gap is at most `tol · scale`.
    pub equality: bool,
    /// `max(1, ‖X‖_F·‖Y‖_F)`.
    pub scale: f64,
}

pub fn vn_report(x: &DenseTensor, y: &DenseTensor, tol: f64) -> Result<VnReport> {
    let ip = inner(x, y)?;
    let sx = all_mode_spectra(x)?;
    let sy = all_mode_spectra(y)?;
    Ok(vn_from_spectra(
        ip,
        x.frobenius() * y.frobenius(),
        &sx,
        &sy,
        tol,
    ))
}

pub(crate) fn vn_from_spectra(
    ip: f64,
    norm_product: f64,
    sx: &ModeSpectra,
    sy: &ModeSpectra,
    tol: f64,
) -> VnReport {
    let per_mode_bound: Vec<f64> = sx
        .per_mode
        .iter()
        .zip(&sy.per_mode)
        .map(|(a, b)| dot(a, b))
        .collect();
    let per_mode_gap: Vec<f64> = per_mode_bound.iter().map(|b| b - ip).collect();
    let scale = norm_product.max(1.0);
    let equality = per_mode_gap.iter().all(|&g| g <= tol * scale);
    VnReport {
        inner: ip,
        per_mode_bound,
        per_mode_gap,
        equality,
        scale,
    }
}

/// Per-mode index sets `I_b^(d)` (1-based), one entry per block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockPartition {
    /// `blocks[b][d]` lists the mode-`d+1` indices of block `b`.
    pub blocks: Vec<Vec<Vec<usize>>>,
}

impl BlockPartition {
    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Checks that, for every mode, the sets are disjoint and cover
    /// `1..=n_d`.
    pub fn validate(&self, shape: &Shape) -> Result<()> {
        if self.blocks.is_empty() {
            return Err(Error::InvalidPartition("no blocks".into()));
        }
        for (b, block) in self.blocks.iter().enumerate() {
            if block.len() != shape.order() {
                return Err(Error::InvalidPartition(format!(
                    "block {} has {} index sets for a {}-mode shape",
                    b + 1,
                    block.len(),
                    shape.order()
                )));
            }
        }
        for (d, &n) in shape.dims().iter().enumerate() {
            let mut seen = vec![false; n];
            for block in &self.blocks {
                for &i in &block[d] {
                    if i == 0 || i > n {
                        return Err(Error::InvalidPartition(format!(
                            "index {i} out of range for mode {}",
                            d + 1
                        )));
                    }
                    if std::mem::replace(&mut seen[i - 1], true) {
                        return Err(Error::InvalidPartition(format!(
                            "index {i} of mode {} appears twice",
                            d + 1
                        )));
                    }
                }
            }
            if let Some(missing) = seen.iter().position(|s| !s) {
                return Err(Error::InvalidPartition(format!(
                    "index {} of mode {} is not covered",
                    missing + 1,
                    d + 1
                )));
            }
        }
        Ok(())
    }

    /// `owner[d][i]` = block of 0-based index `i` in mode `d`.
    fn owners(&self, shape: &Shape) -> Vec<Vec<usize>> {
        let mut owner: Vec<Vec<usize>> = shape.dims().iter().map(|&n| vec![0; n]).collect();
        for (b, block) in self.blocks.iter().enumerate() {
            for (d, set) in block.iter().enumerate() {
                for &i in set {
                    owner[d][i - 1] = b;
                }
            }
        }
        owner
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] != a {
            self.parent[a] = self.parent[self.parent[a]];
            a = self.parent[a];
        }
        a
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

fn multi_index(mut off: usize, dims: &[usize], idx: &mut [usize]) {
    for k in (0..dims.len()).rev() {
        idx[k] = off % dims[k];
        off /= dims[k];
    }
}

fn same_shape(cx: &DenseTensor, cy: &DenseTensor) -> Result<()> {
    if cx.shape() != cy.shape() {
        return Err(Error::ShapeMismatch(format!(
            "{:?} vs {:?}",
            cx.shape().dims(),
            cy.shape().dims()
        )));
    }
    Ok(())
}

/// Finest common block partition of two cores.
///
/// Nodes are the pairs `(d, i_d)`; every entry with `|CX| > tol·‖CX‖_F` or
/// `|CY| > tol·‖CY‖_F` merges its `D` nodes. Connected components become
/// blocks (ordered by their smallest node) and untouched indices are
/// gathered into one trailing residual block.
pub fn find_block_partition(
    cx: &DenseTensor,
    cy: &DenseTensor,
    tol: f64,
) -> Result<BlockPartition> {
    same_shape(cx, cy)?;
    let dims = cx.shape().dims();
    let order = dims.len();
    let base: Vec<usize> = dims
        .iter()
        .scan(0, |acc, &n| {
            let start = *acc;
            *acc += n;
            Some(start)
        })
        .collect();
    let nodes: usize = dims.iter().sum();
    let mut uf = UnionFind::new(nodes);
    let mut touched = vec![false; nodes];
    let (tx, ty) = (tol * cx.frobenius(), tol * cy.frobenius());
    let mut idx = vec![0; order];
    for (off, (&a, &b)) in cx.data().iter().zip(cy.data()).enumerate() {
        if a.abs() <= tx && b.abs() <= ty {
            continue;
        }
        multi_index(off, dims, &mut idx);
        let first = base[0] + idx[0];
        touched[first] = true;
        for d in 1..order {
            let node = base[d] + idx[d];
            touched[node] = true;
            uf.union(first, node);
        }
    }
    let mut root_to_block: Vec<Option<usize>> = vec![None; nodes];
    let mut blocks: Vec<Vec<Vec<usize>>> = Vec::new();
    let mut residual: Vec<Vec<usize>> = vec![Vec::new(); order];
    for d in 0..order {
        for i in 0..dims[d] {
            let node = base[d] + i;
            if !touched[node] {
                residual[d].push(i + 1);
                continue;
            }
            let root = uf.find(node);
            let b = *root_to_block[root].get_or_insert_with(|| {
                blocks.push(vec![Vec::new(); order]);
                blocks.len() - 1
            });
            blocks[b][d].push(i + 1);
        }
    }
    if residual.iter().any(|s| !s.is_empty()) {
        blocks.push(residual);
    }
    Ok(BlockPartition { blocks })
}

/// How two blocks relate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Proportionality {
    /// `D_b(Y) = c · D_b(X)`.
    YOverX(f64),
    /// `D_b(X) = c · D_b(Y)`, used when the X block vanishes.
    XOverY(f64),
    BothZero,
}

impl Proportionality {
    /// Ratio `D_b(Y)/D_b(X)` where defined.
    pub fn constant(&self) -> f64 {
        match *self {
            Proportionality::YOverX(c) | Proportionality::XOverY(c) => c,
            Proportionality::BothZero => 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockCheck {
    pub proportionality: Proportionality,
    /// Least-squares residual of the proportionality fit.
    pub residual: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StructureReport {
    /// Both cores vanish off the blocks and every block pair is
    /// proportional with a nonnegative constant.
    pub holds: bool,
    pub outside_residual_x: f64,
    pub outside_residual_y: f64,
    pub blocks: Vec<BlockCheck>,
    /// Per-mode block spectra pair up in the same order as the globally
    /// sorted spectra, so the blockwise pairing attains the sorted inner
    /// product in every mode.
    pub ordered: bool,
}

fn block_entries(t: &DenseTensor, block: &[Vec<usize>]) -> Option<DenseTensor> {
    if block.iter().any(Vec::is_empty) {
        return None;
    }
    let strides = t.shape().strides();
    let sub_dims: Vec<usize> = block.iter().map(Vec::len).collect();
    let sub_shape = Shape::new(sub_dims.clone()).ok()?;
    let mut idx = vec![0; sub_dims.len()];
    let data = (0..sub_shape.numel())
        .map(|off| {
            multi_index(off, &sub_dims, &mut idx);
            let src: usize = idx
                .iter()
                .zip(block)
                .zip(&strides)
                .map(|((&k, set), s)| (set[k] - 1) * s)
                .sum();
            t.data()[src]
        })
        .collect();
    Some(DenseTensor::new(sub_shape, data).expect("finite entries"))
}

fn fit_block(
    xb: &[f64],
    yb: &[f64],
    x_zero: f64,
    y_zero: f64,
    tol_x: f64,
    tol_y: f64,
) -> BlockCheck {
    let nx = dot(xb, xb).sqrt();
    let ny = dot(yb, yb).sqrt();
    let residual = |a: &[f64], b: &[f64], c: f64| {
        a.iter()
            .zip(b)
            .map(|(p, q)| (p - c * q).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    if nx <= x_zero {
        if ny <= y_zero {
            return BlockCheck {
                proportionality: Proportionality::BothZero,
                residual: nx.max(ny),
                ok: true,
            };
        }
        let c = (dot(xb, yb) / (ny * ny)).max(0.0);
        let r = residual(xb, yb, c);
        return BlockCheck {
            proportionality: Proportionality::XOverY(c),
            residual: r,
            ok: r <= tol_x,
        };
    }
    let c = dot(xb, yb) / (nx * nx);
    let r = residual(yb, xb, c);
    BlockCheck {
        proportionality: Proportionality::YOverX(c),
        residual: r,
        ok: c >= 0.0 && r <= tol_y,
    }
}

/// Checks blockwise proportionality of two cores on a given partition.
pub fn verify_equality_structure(
    cx: &DenseTensor,
    cy: &DenseTensor,
    partition: &BlockPartition,
    tol: f64,
) -> Result<StructureReport> {
    same_shape(cx, cy)?;
    let shape = cx.shape();
    partition.validate(shape)?;
    let (fx, fy) = (cx.frobenius(), cy.frobenius());
    let (tol_x, tol_y) = (tol * fx, tol * fy);

    let owner = partition.owners(shape);
    let dims = shape.dims();
    let mut idx = vec![0; dims.len()];
    let (mut out_x, mut out_y) = (0.0, 0.0);
    for (off, (&a, &b)) in cx.data().iter().zip(cy.data()).enumerate() {
        multi_index(off, dims, &mut idx);
        let b0 = owner[0][idx[0]];
        if (1..dims.len()).any(|d| owner[d][idx[d]] != b0) {
            out_x += a * a;
            out_y += b * b;
        }
    }
    let (outside_residual_x, outside_residual_y) = (out_x.sqrt(), out_y.sqrt());
    let mut holds = outside_residual_x <= tol_x && outside_residual_y <= tol_y;

    let mut blocks = Vec::with_capacity(partition.block_count());
    let mut pairs: Vec<Vec<(f64, f64)>> = vec![Vec::new(); dims.len()];
    for block in &partition.blocks {
        let (Some(xb), Some(yb)) = (block_entries(cx, block), block_entries(cy, block)) else {
            // a block with an empty mode set holds no entries
            blocks.push(BlockCheck {
                proportionality: Proportionality::BothZero,
                residual: 0.0,
                ok: true,
            });
            continue;
        };
        let check = fit_block(xb.data(), yb.data(), tol_x, tol_y, tol_x, tol_y);
        holds &= check.ok;
        blocks.push(check);
        let (sx, sy) = (all_mode_spectra(&xb)?, all_mode_spectra(&yb)?);
        for (d, (a, b)) in sx.per_mode.iter().zip(&sy.per_mode).enumerate() {
            pairs[d].extend(a.iter().copied().zip(b.iter().copied()));
        }
    }

    let ordered = pairs.iter().all(|p| {
        let paired: f64 = p.iter().map(|(a, b)| a * b).sum();
        let mut xs: Vec<f64> = p.iter().map(|t| t.0).collect();
        let mut ys: Vec<f64> = p.iter().map(|t| t.1).collect();
        xs.sort_by(|a, b| b.total_cmp(a));
        ys.sort_by(|a, b| b.total_cmp(a));
        dot(&xs, &ys) - paired <= tol * fx * fy
    });

    Ok(StructureReport {
        holds,
        outside_residual_x,
        outside_residual_y,
        blocks,
        ordered,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct StructuralEquality {
    /// Structure holds and the block spectra are consistently ordered.
    pub holds: bool,
    pub partition: BlockPartition,
    pub structure: StructureReport,
    pub vn: VnReport,
}

/// Expresses `x` and `y` in the candidate frames (`C = X ×_d W^(d)ᵀ`) and
/// checks the block structure that forces equality in every mode.
pub fn check_equality_via_structure(
    x: &DenseTensor,
    y: &DenseTensor,
    frames: &[Matrix],
    tol: f64,
) -> Result<StructuralEquality> {
    same_shape(x, y)?;
    if frames.len() != x.order() {
        return Err(Error::ShapeMismatch(format!(
            "{} frames for a {}-mode tensor",
            frames.len(),
            x.order()
        )));
    }
    for (d, (w, &n)) in frames.iter().zip(x.shape().dims()).enumerate() {
        if w.rows() != n || w.cols() != n {
            return Err(Error::ShapeMismatch(format!(
                "frame {} is {}x{}, expected {n}x{n}",
                d + 1,
                w.rows(),
                w.cols()
            )));
        }
        let deviation = orthogonality_defect(w)?;
        if deviation > FRAME_TOL {
            return Err(Error::NonOrthogonalFrame {
                mode: d + 1,
                deviation,
            });
        }
    }
    let cx = multi_mode_mul_transposed(x, frames)?;
    let cy = multi_mode_mul_transposed(y, frames)?;
    let partition = find_block_partition(&cx, &cy, tol)?;
    let structure = verify_equality_structure(&cx, &cy, &partition, tol)?;
    let vn = vn_report(x, y, tol)?;
    Ok(StructuralEquality {
        holds: structure.holds && structure.ordered,
        partition,
        structure,
        vn,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_orthogonal;
    use crate::odeco::{random_odeco, to_dense};
    use crate::tensor::{multi_mode_mul, outer};

    fn e(n: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    }

    fn diag(d: &[f64]) -> DenseTensor {
        DenseTensor::diagonal(Shape::cubic(2, 3).unwrap(), d).unwrap()
    }

    #[test]
    fn self_pair_has_zero_gaps() {
        let x = diag(&[2.0, 1.0]);
        let r = vn_report(&x, &x, 1e-12).unwrap();
        assert!(r.equality);
        assert!(r.per_mode_gap.iter().all(|g| g.abs() < 1e-14));
    }

    #[test]
    fn disjoint_rank_ones() {
        let x = outer(&[e(2, 0), e(2, 0), e(2, 0)]).unwrap();
        let y = outer(&[e(2, 1), e(2, 1), e(2, 1)]).unwrap();
        let r = vn_report(&x, &y, 1e-10).unwrap();
        assert_eq!(r.inner, 0.0);
        assert_eq!(r.per_mode_bound, vec![1.0; 3]);
        assert_eq!(r.per_mode_gap, vec![1.0; 3]);
        assert!(!r.equality);
        assert!(vn_report(&x, &DenseTensor::zeros(Shape::cubic(2, 2).unwrap()), 1e-10).is_err());
    }

    #[test]
    fn partitions() {
        let p = find_block_partition(&diag(&[2.0, 1.0]), &diag(&[2.0, 1.0]), 1e-12).unwrap();
        assert_eq!(p.block_count(), 2);
        assert_eq!(p.blocks[0], vec![vec![1]; 3]);
        assert_eq!(p.blocks[1], vec![vec![2]; 3]);

        let dense = DenseTensor::new(
            Shape::cubic(2, 3).unwrap(),
            (1..=8).map(f64::from).collect(),
        )
        .unwrap();
        let p = find_block_partition(
            &dense,
            &DenseTensor::zeros(Shape::cubic(2, 3).unwrap()),
            1e-12,
        )
        .unwrap();
        assert_eq!(p.block_count(), 1);

        let cy = outer(&[e(2, 0), e(2, 0), e(2, 0)]).unwrap().scale(3.0);
        let p = find_block_partition(&diag(&[2.0, 1.0]), &cy, 1e-12).unwrap();
        assert_eq!(p.block_count(), 2);

        // nothing above threshold: one residual block
        let z = DenseTensor::zeros(Shape::cubic(2, 3).unwrap());
        let p = find_block_partition(&z, &z, 1e-12).unwrap();
        assert_eq!(p.blocks, vec![vec![vec![1, 2]; 3]]);
    }

    #[test]
    fn partially_touched_shape_gets_residual_block() {
        // 3x2x2 tensor supported on (1,1,1) only: index 2,3 of mode 1 and 2 of the others untouched
        let x = outer(&[e(3, 0), e(2, 0), e(2, 0)]).unwrap();
        let p = find_block_partition(&x, &x, 1e-12).unwrap();
        assert_eq!(
            p.blocks,
            vec![
                vec![vec![1], vec![1], vec![1]],
                vec![vec![2, 3], vec![2], vec![2]]
            ]
        );
        p.validate(x.shape()).unwrap();
    }

    #[test]
    fn structure_examples() {
        let one = BlockPartition {
            blocks: vec![vec![vec![1, 2]; 3]],
        };
        let x = diag(&[2.0, 1.0]);
        let r = verify_equality_structure(&x, &x.scale(3.0), &one, 1e-10).unwrap();
        assert!(r.holds && r.ordered);
        assert!((r.blocks[0].proportionality.constant() - 3.0).abs() < 1e-14);

        let singles = find_block_partition(&x, &x, 1e-12).unwrap();
        let r = verify_equality_structure(&x, &diag(&[4.0, 5.0]), &singles, 1e-10).unwrap();
        assert!(r.holds);
        let c: Vec<f64> = r
            .blocks
            .iter()
            .map(|b| b.proportionality.constant())
            .collect();
        assert!((c[0] - 2.0).abs() < 1e-14 && (c[1] - 5.0).abs() < 1e-14);
        // (2,1) against (4,5): proportional blocks but reversed order
        assert!(!r.ordered);

        let r =
            verify_equality_structure(&diag(&[1.0, 1.0]), &diag(&[1.0, 2.0]), &one, 1e-10).unwrap();
        assert!(!r.holds);
        assert!(r.blocks[0].residual > 0.5);
    }

    #[test]
    fn zero_blocks_and_bad_partitions() {
        let x = diag(&[2.0, 1.0]);
        let y = outer(&[e(2, 0), e(2, 0), e(2, 0)]).unwrap();
        let p = find_block_partition(&x, &y, 1e-12).unwrap();
        let r = verify_equality_structure(&x, &y, &p, 1e-10).unwrap();
        assert!(r.holds && r.ordered);
        assert_eq!(r.blocks[1].proportionality, Proportionality::YOverX(0.0));
        let r = verify_equality_structure(&y, &x, &p, 1e-10).unwrap();
        assert!(r.holds);
        assert!(matches!(
            r.blocks[1].proportionality,
            Proportionality::XOverY(_)
        ));

        let bad = BlockPartition {
            blocks: vec![vec![vec![1], vec![1, 2], vec![1, 2]]],
        };
        assert!(matches!(
            verify_equality_structure(&x, &y, &bad, 1e-10),
            Err(Error::InvalidPartition(_))
        ));
        let dup = BlockPartition {
            blocks: vec![vec![vec![1, 1, 2], vec![1, 2], vec![1, 2]]],
        };
        assert!(dup.validate(x.shape()).is_err());
    }

    #[test]
    fn negative_multiple_is_not_proportional() {
        let one = BlockPartition {
            blocks: vec![vec![vec![1, 2]; 3]],
        };
        let x = diag(&[2.0, 1.0]);
        let r = verify_equality_structure(&x, &x.scale(-1.0), &one, 1e-10).unwrap();
        assert!(!r.holds);
    }

    #[test]
    fn shared_frame_pairs() {
        let shape = Shape::cubic(3, 3).unwrap();
        let rep = random_odeco(&shape, 3, 2).unwrap();
        let frames = rep.completed_factors();
        let x = to_dense(&rep);
        let y_rep = rep.with_weights(vec![5.0, 0.7, 0.2]).unwrap();
        let y = to_dense(&y_rep);
        let s = check_equality_via_structure(&x, &y, &frames, 1e-9).unwrap();
        assert!(s.holds);
        assert_eq!(s.partition.block_count(), 3);
        assert!(s.vn.equality);

        let s = check_equality_via_structure(&x, &x, &frames, 1e-9).unwrap();
        assert!(s.holds && s.vn.equality);
        assert!(s
            .structure
            .blocks
            .iter()
            .all(|b| (b.proportionality.constant() - 1.0).abs() < 1e-9));

        let q: Vec<Matrix> = (0..3).map(|d| random_orthogonal(3, 100 + d)).collect();
        let rotated = multi_mode_mul(&x, &q).unwrap();
        let s = check_equality_via_structure(&x, &rotated, &frames, 1e-8).unwrap();
        assert!(!s.holds);
        assert!(!s.vn.equality);

        let skew = Matrix::from_rows(&[
            vec![1.0, 1.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        assert!(matches!(
            check_equality_via_structure(&x, &y, &[skew.clone(), skew.clone(), skew], 1e-9),
            Err(Error::NonOrthogonalFrame { mode: 1, .. })
        ));
    }
}
