//! Change of basis between component wavelet coefficients of a vector field and
//! divergence-free plus complement coefficients.
//!
//! Component i lives in the MRA with degree 2 along axis i and degree 1 elsewhere.
//! Differentiating along axis i maps it to degree 1 on every axis. In coefficient
//! space that derivative is `4·2^j` on a wavelet axis at level j and `2^j` times a
//! periodic backward difference on a scaling axis at level j. The divergence is the
//! sum of those per-component operators, block by block, so a block whose
//! complement vanishes is exactly divergence-free.

use std::collections::BTreeMap;

use ndarray::{ArrayD, Zip};

use crate::error::{Error, Result};
use crate::fwt::{self, BlockKey, Scale, TransformMode, WaveletPyramid};
use crate::sampling::{backward_diff, component_degrees, ShiftedSpaceTag, SplineField};
use crate::splines::SplineDegree;

/// Wavelet pyramids of the components of a vector field.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorCoeffs {
    /// `Plain` for the div-free MRA, `Sharp` for the curl-free (gradient) MRA.
    pub space: ShiftedSpaceTag,
    pub components: Vec<WaveletPyramid>,
}

impl VectorCoeffs {
    pub fn new(space: ShiftedSpaceTag, components: Vec<WaveletPyramid>) -> Result<Self> {
        let nd = components.len();
        if !(2..=3).contains(&nd) {
            return Err(Error::Shape(format!("{nd} components; expected 2 or 3")));
        }
        let first = &components[0];
        for (i, c) in components.iter().enumerate() {
            if c.ndim() != nd {
                return Err(Error::Shape("component dimension differs from field dimension".into()));
            }
            if c.mode != first.mode || c.shape != first.shape || c.levels != first.levels {
                return Err(Error::Shape("components must share mode, shape and levels".into()));
            }
            if c.degrees != component_degrees(space, nd, i) {
                return Err(Error::Layout(format!(
                    "component {i} has degrees {:?}, expected {:?}",
                    c.degrees,
                    component_degrees(space, nd, i)
                )));
            }
        }
        Ok(VectorCoeffs { space, components })
    }

    /// Wavelet analysis of level-J spline coefficients.
    pub fn analyze(spline: &SplineField, mode: TransformMode, levels: &[usize]) -> Result<Self> {
        let comps = spline
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| fwt::forward(mode, c, &spline.degrees(i), levels))
            .collect::<Result<Vec<_>>>()?;
        Self::new(spline.space, comps)
    }

    pub fn synthesize(&self) -> Result<SplineField> {
        Ok(SplineField {
            space: self.space,
            coeffs: self
                .components
                .iter()
                .map(fwt::inverse)
                .collect::<Result<Vec<_>>>()?,
        })
    }

    pub fn ndim(&self) -> usize {
        self.components.len()
    }

    pub fn mode(&self) -> TransformMode {
        self.components[0].mode
    }

    pub fn shape(&self) -> &[usize] {
        &self.components[0].shape
    }

    pub fn levels(&self) -> &[usize] {
        &self.components[0].levels
    }

    pub fn zeros_like(&self) -> Self {
        VectorCoeffs {
            space: self.space,
            components: self.components.iter().map(|c| c.zeros_like()).collect(),
        }
    }
}

/// Coefficient-space derivative along one axis of a block.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AxisOp {
    /// Wavelet axis at level j, carrying `w = 2^j`: derivative is `4w`.
    Wavelet(f64),
    /// Scaling axis at level j, carrying `2^j`: derivative is `2^j` times a backward difference.
    Scaling(f64),
}

impl AxisOp {
    pub fn apply(self, a: &ArrayD<f64>, axis: usize) -> ArrayD<f64> {
        match self {
            AxisOp::Wavelet(w) => a * (4.0 * w),
            AxisOp::Scaling(s) => backward_diff(a, axis) * s,
        }
    }

    pub fn is_wavelet(self) -> bool {
        matches!(self, AxisOp::Wavelet(_))
    }

    pub fn weight(self) -> f64 {
        match self {
            AxisOp::Wavelet(w) | AxisOp::Scaling(w) => w,
        }
    }
}

/// Derivative operators of every axis of a block.
pub fn axis_ops(p: &WaveletPyramid, key: &BlockKey) -> Vec<AxisOp> {
    let pow = |j: u32| 2f64.powi(j as i32);
    match key {
        BlockKey::Aniso(scales) => scales
            .iter()
            .enumerate()
            .map(|(a, s)| match s {
                Scale::Detail(j) => AxisOp::Wavelet(pow(*j)),
                Scale::Coarse => AxisOp::Scaling(pow(p.coarse_level(a))),
            })
            .collect(),
        BlockKey::Iso { level, eps } => eps
            .iter()
            .enumerate()
            .map(|(a, &e)| match level {
                Scale::Coarse => AxisOp::Scaling(pow(p.coarse_level(a))),
                Scale::Detail(j) if e == 1 => AxisOp::Wavelet(pow(*j)),
                Scale::Detail(j) => AxisOp::Scaling(pow(*j)),
            })
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DivBlock {
    /// Div-free coefficients (one array in 2D, two in 3D) and the complement.
    Split {
        div: Vec<ArrayD<f64>>,
        complement: ArrayD<f64>,
    },
    /// Pure scaling block, kept as component coefficients.
    Scaling(Vec<ArrayD<f64>>),
}

impl DivBlock {
    fn zeros_like(&self) -> Self {
        let z = |a: &ArrayD<f64>| ArrayD::zeros(a.raw_dim());
        match self {
            DivBlock::Split { div, complement } => DivBlock::Split {
                div: div.iter().map(z).collect(),
                complement: z(complement),
            },
            DivBlock::Scaling(c) => DivBlock::Scaling(c.iter().map(z).collect()),
        }
    }

    fn arrays(&self) -> Vec<&ArrayD<f64>> {
        match self {
            DivBlock::Split { div, complement } => div.iter().chain(std::iter::once(complement)).collect(),
            DivBlock::Scaling(c) => c.iter().collect(),
        }
    }

    fn arrays_mut(&mut self) -> Vec<&mut ArrayD<f64>> {
        match self {
            DivBlock::Split { div, complement } => div.iter_mut().chain(std::iter::once(complement)).collect(),
            DivBlock::Scaling(c) => c.iter_mut().collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DivFreeCoeffs {
    /// Layout of the source vector coefficients (needed to invert).
    pub template: VectorCoeffs,
    pub blocks: BTreeMap<BlockKey, DivBlock>,
}

impl DivFreeCoeffs {
    pub fn ndim(&self) -> usize {
        self.template.ndim()
    }

    pub fn mode(&self) -> TransformMode {
        self.template.mode()
    }

    pub fn zeros_like(&self) -> Self {
        DivFreeCoeffs {
            template: self.template.clone(),
            blocks: self.blocks.iter().map(|(k, b)| (k.clone(), b.zeros_like())).collect(),
        }
    }

    pub fn zero_complement(&mut self) {
        for b in self.blocks.values_mut() {
            if let DivBlock::Split { complement, .. } = b {
                complement.fill(0.0);
            }
        }
    }

    pub fn without_complement(&self) -> Self {
        let mut out = self.clone();
        out.zero_complement();
        out
    }

    /// ℓ² norm of all complement arrays.
    pub fn complement_norm(&self) -> f64 {
        self.blocks
            .values()
            .filter_map(|b| match b {
                DivBlock::Split { complement, .. } => Some(complement.iter().map(|v| v * v).sum::<f64>()),
                DivBlock::Scaling(_) => None,
            })
            .sum::<f64>()
            .sqrt()
    }

    /// ℓ² norm of every stored coefficient.
    pub fn norm(&self) -> f64 {
        self.blocks
            .values()
            .flat_map(|b| b.arrays())
            .map(|a| a.iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    /// Number of stored div-free coefficients outside the scaling block.
    pub fn num_div_coeffs(&self) -> usize {
        self.blocks
            .values()
            .map(|b| match b {
                DivBlock::Split { div, .. } => div.iter().map(|a| a.len()).sum(),
                DivBlock::Scaling(_) => 0,
            })
            .sum()
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &Self) -> Result<()> {
        if self.blocks.len() != other.blocks.len() {
            return Err(Error::Shape("div-free coefficient layouts differ".into()));
        }
        for (k, b) in self.blocks.iter_mut() {
            let o = other
                .blocks
                .get(k)
                .ok_or_else(|| Error::Shape(format!("missing block {k:?}")))?;
            let (mine, theirs) = (b.arrays_mut(), o.arrays());
            if mine.len() != theirs.len() {
                return Err(Error::Shape(format!("block {k:?} differs in kind")));
            }
            for (m, t) in mine.into_iter().zip(theirs) {
                if m.shape() != t.shape() {
                    return Err(Error::Shape(format!("block {k:?} differs in shape")));
                }
                m.scaled_add(alpha, t);
            }
        }
        Ok(())
    }
}

fn cyclic_next(a: usize, nd: usize, by: usize) -> usize {
    (a + by) % nd
}

/// The third axis in cyclic order after the pair of wavelet axes.
fn pair_around(s: usize) -> (usize, usize) {
    ((s + 1) % 3, (s + 2) % 3)
}

fn split_block(mode: TransformMode, ops: &[AxisOp], d: &[ArrayD<f64>]) -> DivBlock {
    let nd = ops.len();
    let wav: Vec<usize> = (0..nd).filter(|&a| ops[a].is_wavelet()).collect();
    let iso = mode == TransformMode::Isotropic;
    match (nd, wav.len()) {
        (_, 0) => DivBlock::Scaling(d.to_vec()),
        (_, 1) => {
            // pivot on the single wavelet axis
            let p = wav[0];
            let mut n = d[p].clone();
            for q in (0..nd).filter(|&q| q != p) {
                n.scaled_add(1.0 / (4.0 * ops[p].weight()), &ops[q].apply(&d[q], q));
            }
            let div = (1..nd).map(|s| d[cyclic_next(p, nd, s)].clone()).collect();
            DivBlock::Split { div, complement: n }
        }
        (2, 2) => {
            if iso {
                DivBlock::Split {
                    div: vec![(&d[0] - &d[1]) * 0.5],
                    complement: (&d[0] + &d[1]) * 0.5,
                }
            } else {
                let (w1, w2) = (ops[0].weight(), ops[1].weight());
                let s = w1 * w1 + w2 * w2;
                DivBlock::Split {
                    div: vec![(&d[0] * w2 - &d[1] * w1) / s],
                    complement: (&d[0] * w1 + &d[1] * w2) / s,
                }
            }
        }
        (3, 2) => {
            let s = (0..3).find(|a| !ops[*a].is_wavelet()).unwrap();
            let (p, q) = pair_around(s);
            let ds = ops[s].apply(&d[s], s);
            if iso {
                let w = ops[p].weight();
                DivBlock::Split {
                    div: vec![(&d[p] - &d[q]) * 0.5, d[s].clone()],
                    complement: (&d[p] + &d[q]) * 0.5 + ds / (8.0 * w),
                }
            } else {
                let (wp, wq) = (ops[p].weight(), ops[q].weight());
                let sum = wp * wp + wq * wq;
                DivBlock::Split {
                    div: vec![(&d[p] * wq - &d[q] * wp) / sum, d[s].clone()],
                    complement: (&d[p] * wp + &d[q] * wq + ds * 0.25) / sum,
                }
            }
        }
        (3, 3) => {
            if iso {
                DivBlock::Split {
                    div: vec![
                        (&d[0] * -2.0 + &d[1] + &d[2]) / 3.0,
                        (-&d[0] + &d[1] * 2.0 - &d[2]) / 3.0,
                    ],
                    complement: (&d[0] + &d[1] + &d[2]) / 3.0,
                }
            } else {
                let m = frame3(ops);
                let inv = invert3(&m);
                let comb = |row: [f64; 3]| &d[0] * row[0] + &d[1] * row[1] + &d[2] * row[2];
                DivBlock::Split {
                    div: vec![comb(inv[0]), comb(inv[1])],
                    complement: comb(inv[2]),
                }
            }
        }
        _ => unreachable!("blocks have 2 or 3 axes"),
    }
}

fn merge_block(mode: TransformMode, ops: &[AxisOp], b: &DivBlock) -> Vec<ArrayD<f64>> {
    let nd = ops.len();
    let (div, n) = match b {
        DivBlock::Scaling(c) => return c.clone(),
        DivBlock::Split { div, complement } => (div, complement),
    };
    let wav: Vec<usize> = (0..nd).filter(|&a| ops[a].is_wavelet()).collect();
    let iso = mode == TransformMode::Isotropic;
    let mut d: Vec<ArrayD<f64>> = vec![ArrayD::zeros(n.raw_dim()); nd];
    match (nd, wav.len()) {
        (_, 1) => {
            let p = wav[0];
            let mut dp = n.clone();
            for s in 1..nd {
                let q = cyclic_next(p, nd, s);
                d[q] = div[s - 1].clone();
                dp.scaled_add(-1.0 / (4.0 * ops[p].weight()), &ops[q].apply(&d[q], q));
            }
            d[p] = dp;
        }
        (2, 2) => {
            if iso {
                d[0] = n + &div[0];
                d[1] = n - &div[0];
            } else {
                let (w1, w2) = (ops[0].weight(), ops[1].weight());
                d[0] = &div[0] * w2 + n * w1;
                d[1] = &div[0] * -w1 + n * w2;
            }
        }
        (3, 2) => {
            let s = (0..3).find(|a| !ops[*a].is_wavelet()).unwrap();
            let (p, q) = pair_around(s);
            d[s] = div[1].clone();
            let ds = ops[s].apply(&d[s], s);
            if iso {
                let w = ops[p].weight();
                let m = n - ds / (8.0 * w);
                d[p] = &m + &div[0];
                d[q] = &m - &div[0];
            } else {
                let (wp, wq) = (ops[p].weight(), ops[q].weight());
                let sum = wp * wp + wq * wq;
                let m = n * sum - ds * 0.25;
                let a = &div[0] * sum;
                d[p] = (&a * wq + &m * wp) / sum;
                d[q] = (&m * wq - &a * wp) / sum;
            }
        }
        (3, 3) => {
            if iso {
                d[0] = n - &div[0];
                d[1] = n + &div[1];
                d[2] = n + &div[0] - &div[1];
            } else {
                let m = frame3(ops);
                for (r, out) in d.iter_mut().enumerate() {
                    *out = &div[0] * m[r][0] + &div[1] * m[r][1] + n * m[r][2];
                }
            }
        }
        _ => unreachable!("scaling blocks return early"),
    }
    d
}

/// Columns Ψ_div,1 = (w2, −w1, 0), Ψ_div,2 = (0, w3, −w2), Ψ_n = (w1, w2, w3).
fn frame3(ops: &[AxisOp]) -> [[f64; 3]; 3] {
    let (w1, w2, w3) = (ops[0].weight(), ops[1].weight(), ops[2].weight());
    [[w2, 0.0, w1], [-w1, w3, w2], [0.0, -w2, w3]]
}

fn invert3(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let c = |r: usize, k: usize| {
        let (r1, r2) = ((r + 1) % 3, (r + 2) % 3);
        let (k1, k2) = ((k + 1) % 3, (k + 2) % 3);
        m[r1][k1] * m[r2][k2] - m[r1][k2] * m[r2][k1]
    };
    let det = m[0][0] * c(0, 0) + m[0][1] * c(0, 1) + m[0][2] * c(0, 2);
    let mut inv = [[0.0; 3]; 3];
    for (r, row) in inv.iter_mut().enumerate() {
        for (k, v) in row.iter_mut().enumerate() {
            *v = c(k, r) / det;
        }
    }
    inv
}

fn block_arrays(v: &VectorCoeffs, key: &BlockKey) -> Vec<ArrayD<f64>> {
    v.components.iter().map(|c| c.blocks[key].clone()).collect()
}

/// Div-free change of basis for any mode and dimension.
pub fn to_divfree(v: &VectorCoeffs) -> Result<DivFreeCoeffs> {
    if v.space != ShiftedSpaceTag::Plain {
        return Err(Error::Layout("div-free splitting needs the plain MRA".into()));
    }
    let mode = v.mode();
    let blocks = v.components[0]
        .blocks
        .keys()
        .map(|k| {
            let ops = axis_ops(&v.components[0], k);
            (k.clone(), split_block(mode, &ops, &block_arrays(v, k)))
        })
        .collect();
    Ok(DivFreeCoeffs {
        template: v.zeros_like(),
        blocks,
    })
}

pub fn from_divfree(c: &DivFreeCoeffs) -> Result<VectorCoeffs> {
    let mut out = c.template.clone();
    let mode = out.mode();
    let keys: Vec<BlockKey> = out.components[0].blocks.keys().cloned().collect();
    for k in keys {
        let b = c
            .blocks
            .get(&k)
            .ok_or_else(|| Error::Shape(format!("missing block {k:?}")))?;
        let ops = axis_ops(&out.components[0], &k);
        let want = out.components[0].blocks[&k].shape().to_vec();
        if b.arrays().iter().any(|a| a.shape() != want.as_slice()) {
            return Err(Error::Shape(format!("block {k:?} has the wrong shape")));
        }
        for (comp, arr) in out.components.iter_mut().zip(merge_block(mode, &ops, b)) {
            *comp.blocks.get_mut(&k).unwrap() = arr;
        }
    }
    Ok(out)
}

fn expect(v: &VectorCoeffs, mode: TransformMode, nd: usize) -> Result<()> {
    if v.mode() != mode || v.ndim() != nd {
        return Err(Error::Layout(format!(
            "expected {nd}D {mode:?} coefficients, got {}D {:?}",
            v.ndim(),
            v.mode()
        )));
    }
    Ok(())
}

pub fn to_divfree_iso2d(v: &VectorCoeffs) -> Result<DivFreeCoeffs> {
    expect(v, TransformMode::Isotropic, 2)?;
    to_divfree(v)
}

pub fn to_divfree_aniso2d(v: &VectorCoeffs) -> Result<DivFreeCoeffs> {
    expect(v, TransformMode::Anisotropic, 2)?;
    to_divfree(v)
}

pub fn to_divfree_iso3d(v: &VectorCoeffs) -> Result<DivFreeCoeffs> {
    expect(v, TransformMode::Isotropic, 3)?;
    to_divfree(v)
}

pub fn to_divfree_aniso3d(v: &VectorCoeffs) -> Result<DivFreeCoeffs> {
    expect(v, TransformMode::Anisotropic, 3)?;
    to_divfree(v)
}

pub fn from_divfree_iso2d(c: &DivFreeCoeffs) -> Result<VectorCoeffs> {
    expect(&c.template, TransformMode::Isotropic, 2)?;
    from_divfree(c)
}

pub fn from_divfree_aniso2d(c: &DivFreeCoeffs) -> Result<VectorCoeffs> {
    expect(&c.template, TransformMode::Anisotropic, 2)?;
    from_divfree(c)
}

pub fn from_divfree_iso3d(c: &DivFreeCoeffs) -> Result<VectorCoeffs> {
    expect(&c.template, TransformMode::Isotropic, 3)?;
    from_divfree(c)
}

pub fn from_divfree_aniso3d(c: &DivFreeCoeffs) -> Result<VectorCoeffs> {
    expect(&c.template, TransformMode::Anisotropic, 3)?;
    from_divfree(c)
}

/// Divergence coefficients of level-J spline coefficients: Σ_i (c_i[n] − c_i[n − e_i]).
/// Multiply by N for the derivative of the spline itself.
pub fn discrete_divergence(c: &[ArrayD<f64>]) -> Result<ArrayD<f64>> {
    let first = c.first().ok_or_else(|| Error::Shape("no components".into()))?;
    if c.len() != first.ndim() || c.iter().any(|a| a.shape() != first.shape()) {
        return Err(Error::Shape("need ndim components of equal shape".into()));
    }
    let mut out = ArrayD::zeros(first.raw_dim());
    for (i, a) in c.iter().enumerate() {
        out += &backward_diff(a, i);
    }
    Ok(out)
}

/// Wavelet coefficients (degree 1 on every axis) of the divergence of the field.
pub fn coefficient_divergence(v: &VectorCoeffs) -> Result<WaveletPyramid> {
    let p0 = &v.components[0];
    let mut out = WaveletPyramid::zeros(p0.mode, &p0.shape, &vec![SplineDegree::Deg1; v.ndim()], &p0.levels)?;
    for (k, b) in out.blocks.iter_mut() {
        let ops = axis_ops(p0, k);
        for (i, comp) in v.components.iter().enumerate() {
            let di = ops[i].apply(&comp.blocks[k], i);
            Zip::from(&mut *b).and(&di).for_each(|o, x| *o += x);
        }
    }
    Ok(out)
}
