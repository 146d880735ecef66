//! Periodic fast wavelet transforms: 1D, anisotropic tensor and isotropic tensor.
//!
//! Coefficients live in per-block arrays keyed by [`BlockKey`]. Internally the
//! transforms run on a Mallat layout (coarse part first along every axis) and are
//! split into blocks at the end.

use std::collections::BTreeMap;

use ndarray::{ArrayD, ArrayViewMutD, Axis, IxDyn, Slice, Zip};

use crate::error::{log2_exact, Error, Result};
use crate::splines::{filter_bank, FilterBank, SplineDegree};

/// Below this many samples the lane loops stay on the calling thread.
const PAR_THRESHOLD: usize = 1 << 14;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum TransformMode {
    Anisotropic,
    Isotropic,
}

/// Scale index along one axis. `Coarse` sorts before every detail level.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scale {
    Coarse,
    Detail(u32),
}

impl Scale {
    pub fn is_detail(self) -> bool {
        matches!(self, Scale::Detail(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BlockKey {
    /// One scale per axis.
    Aniso(Vec<Scale>),
    /// Common level plus orientation ε (1 = wavelet along that axis).
    /// The coarse block has `level == Scale::Coarse` and ε = 0.
    Iso { level: Scale, eps: Vec<u8> },
}

impl BlockKey {
    /// Per-axis scale seen by the basis functions of this block.
    pub fn axis_scales(&self) -> Vec<Scale> {
        match self {
            BlockKey::Aniso(s) => s.clone(),
            BlockKey::Iso { level, eps } => eps
                .iter()
                .map(|&e| if e == 1 { *level } else { Scale::Coarse })
                .collect(),
        }
    }

    /// True when every axis of the block carries scaling functions.
    pub fn is_scaling(&self) -> bool {
        match self {
            BlockKey::Aniso(s) => s.iter().all(|s| !s.is_detail()),
            BlockKey::Iso { level, .. } => *level == Scale::Coarse,
        }
    }
}

/// Multilevel coefficients of one scalar component.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveletPyramid {
    pub mode: TransformMode,
    pub shape: Vec<usize>,
    pub degrees: Vec<SplineDegree>,
    /// Decomposition depth per axis (all equal for isotropic pyramids).
    pub levels: Vec<usize>,
    pub blocks: BTreeMap<BlockKey, ArrayD<f64>>,
}

fn check_shape(shape: &[usize], levels: &[usize]) -> Result<Vec<u32>> {
    if shape.len() != levels.len() {
        return Err(Error::Shape(format!(
            "{} axes but {} level counts",
            shape.len(),
            levels.len()
        )));
    }
    shape
        .iter()
        .zip(levels)
        .map(|(&n, &l)| {
            let j = log2_exact(n)?;
            if l > j as usize {
                return Err(Error::TooManyLevels { len: n, levels: l });
            }
            Ok(j)
        })
        .collect()
}

/// Default depth: the coarsest block keeps length 4 (or the full length if shorter).
pub fn default_levels(n: usize) -> Result<usize> {
    let j = log2_exact(n)? as usize;
    Ok(j.saturating_sub(2))
}

/// Index range of a scale along an axis of length `n` decomposed `levels` times.
fn range_of(scale: Scale, n: usize, levels: usize) -> std::ops::Range<usize> {
    match scale {
        Scale::Coarse => 0..(n >> levels),
        Scale::Detail(j) => (1usize << j)..(2usize << j),
    }
}

fn axis_scales(n: usize, levels: usize) -> Vec<Scale> {
    let j0 = n.trailing_zeros() as usize - levels;
    std::iter::once(Scale::Coarse)
        .chain((j0..j0 + levels).map(|j| Scale::Detail(j as u32)))
        .collect()
}

/// All block keys of a pyramid layout, in sorted order.
pub fn block_keys(mode: TransformMode, shape: &[usize], levels: &[usize]) -> Vec<BlockKey> {
    match mode {
        TransformMode::Anisotropic => {
            let mut keys = vec![vec![]];
            for (&n, &l) in shape.iter().zip(levels) {
                let scales = axis_scales(n, l);
                keys = keys
                    .into_iter()
                    .flat_map(|k| {
                        scales.iter().map(move |s| {
                            let mut k = k.clone();
                            k.push(*s);
                            k
                        })
                    })
                    .collect();
            }
            keys.into_iter().map(BlockKey::Aniso).collect()
        }
        TransformMode::Isotropic => {
            let nd = shape.len();
            let n = shape[0];
            let l = levels[0];
            let mut keys = vec![BlockKey::Iso {
                level: Scale::Coarse,
                eps: vec![0; nd],
            }];
            for s in axis_scales(n, l).into_iter().skip(1) {
                for mask in 1..(1u32 << nd) {
                    let eps = (0..nd).map(|a| ((mask >> (nd - 1 - a)) & 1) as u8).collect();
                    keys.push(BlockKey::Iso { level: s, eps });
                }
            }
            keys.sort();
            keys
        }
    }
}

fn block_ranges(key: &BlockKey, shape: &[usize], levels: &[usize]) -> Vec<std::ops::Range<usize>> {
    match key {
        BlockKey::Aniso(scales) => scales
            .iter()
            .zip(shape.iter().zip(levels))
            .map(|(&s, (&n, &l))| range_of(s, n, l))
            .collect(),
        BlockKey::Iso { level, eps } => eps
            .iter()
            .zip(shape.iter().zip(levels))
            .map(|(&e, (&n, &l))| match level {
                Scale::Coarse => range_of(Scale::Coarse, n, l),
                Scale::Detail(j) => {
                    if e == 1 {
                        range_of(*level, n, l)
                    } else {
                        0..(1usize << j)
                    }
                }
            })
            .collect(),
    }
}

impl WaveletPyramid {
    /// Zero pyramid with the given layout.
    pub fn zeros(
        mode: TransformMode,
        shape: &[usize],
        degrees: &[SplineDegree],
        levels: &[usize],
    ) -> Result<Self> {
        check_shape(shape, levels)?;
        if degrees.len() != shape.len() {
            return Err(Error::Shape("one degree per axis required".into()));
        }
        if mode == TransformMode::Isotropic {
            if shape.iter().any(|&n| n != shape[0]) || levels.iter().any(|&l| l != levels[0]) {
                return Err(Error::Shape(
                    "isotropic transforms need equal axis lengths and levels".into(),
                ));
            }
        }
        let blocks = block_keys(mode, shape, levels)
            .into_iter()
            .map(|k| {
                let dims: Vec<usize> = block_ranges(&k, shape, levels).iter().map(|r| r.len()).collect();
                (k, ArrayD::zeros(IxDyn(&dims)))
            })
            .collect();
        Ok(WaveletPyramid {
            mode,
            shape: shape.to_vec(),
            degrees: degrees.to_vec(),
            levels: levels.to_vec(),
            blocks,
        })
    }

    pub fn zeros_like(&self) -> Self {
        WaveletPyramid {
            mode: self.mode,
            shape: self.shape.clone(),
            degrees: self.degrees.clone(),
            levels: self.levels.clone(),
            blocks: self
                .blocks
                .iter()
                .map(|(k, b)| (k.clone(), ArrayD::zeros(b.raw_dim())))
                .collect(),
        }
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn num_coeffs(&self) -> usize {
        self.blocks.values().map(|b| b.len()).sum()
    }

    pub fn block(&self, key: &BlockKey) -> Option<&ArrayD<f64>> {
        self.blocks.get(key)
    }

    pub fn block_mut(&mut self, key: &BlockKey) -> Option<&mut ArrayD<f64>> {
        self.blocks.get_mut(key)
    }

    /// Coarsest level index j₀ along `axis` (the coarse block has length 2^{j₀}).
    pub fn coarse_level(&self, axis: usize) -> u32 {
        self.shape[axis].trailing_zeros() - self.levels[axis] as u32
    }

    pub fn same_layout(&self, other: &Self) -> bool {
        self.mode == other.mode
            && self.shape == other.shape
            && self.degrees == other.degrees
            && self.levels == other.levels
    }

    /// Coefficients laid out Mallat style in one array of the field's shape.
    pub fn to_mallat(&self) -> ArrayD<f64> {
        let mut out = ArrayD::zeros(IxDyn(&self.shape));
        for (k, b) in &self.blocks {
            let r = block_ranges(k, &self.shape, &self.levels);
            out.slice_each_axis_mut(|ax| Slice::from(r[ax.axis.index()].clone()))
                .assign(b);
        }
        out
    }

    pub fn from_mallat(
        mode: TransformMode,
        data: &ArrayD<f64>,
        degrees: &[SplineDegree],
        levels: &[usize],
    ) -> Result<Self> {
        let mut p = Self::zeros(mode, data.shape(), degrees, levels)?;
        let shape = p.shape.clone();
        for (k, b) in p.blocks.iter_mut() {
            let r = block_ranges(k, &shape, levels);
            b.assign(&data.slice_each_axis(|ax| Slice::from(r[ax.axis.index()].clone())));
        }
        Ok(p)
    }

    /// `self += alpha * other`, block by block.
    pub fn axpy(&mut self, alpha: f64, other: &Self) -> Result<()> {
        if !self.same_layout(other) {
            return Err(Error::Shape("pyramid layouts differ".into()));
        }
        for (k, b) in self.blocks.iter_mut() {
            b.scaled_add(alpha, &other.blocks[k]);
        }
        Ok(())
    }

    pub fn scale(&mut self, alpha: f64) {
        for b in self.blocks.values_mut() {
            b.mapv_inplace(|v| v * alpha);
        }
    }
}

/// One analysis step on a periodic signal: `lo[k] = Σ h*_ℓ x[ℓ+2k]`, `hi[k] = Σ g*_ℓ x[ℓ+2k]`.
pub fn analysis_step(x: &[f64], bank: &FilterBank, lo: &mut [f64], hi: &mut [f64]) {
    let n = x.len() as i64;
    let m = n / 2;
    for k in 0..m {
        let mut a = 0.0;
        for (l, t) in bank.h_star.iter() {
            a += t * x[(l as i64 + 2 * k).rem_euclid(n) as usize];
        }
        let mut d = 0.0;
        for (l, t) in bank.g_star.iter() {
            d += t * x[(l as i64 + 2 * k).rem_euclid(n) as usize];
        }
        lo[k as usize] = a;
        hi[k as usize] = d;
    }
}

/// One synthesis step: `x[k] = Σ_ℓ h_{k−2ℓ} lo[ℓ] + g_{k−2ℓ} hi[ℓ]`.
pub fn synthesis_step(lo: &[f64], hi: &[f64], bank: &FilterBank, x: &mut [f64]) {
    let n = x.len() as i64;
    x.iter_mut().for_each(|v| *v = 0.0);
    for l in 0..lo.len() as i64 {
        for (i, t) in bank.h.iter() {
            x[(2 * l + i as i64).rem_euclid(n) as usize] += t * lo[l as usize];
        }
        for (i, t) in bank.g.iter() {
            x[(2 * l + i as i64).rem_euclid(n) as usize] += t * hi[l as usize];
        }
    }
}

/// Applies `levels` steps along every lane of `axis`, Mallat layout, in place.
fn lanes_forward(mut a: ArrayViewMutD<'_, f64>, axis: usize, bank: &FilterBank, levels: usize) {
    let n = a.shape()[axis];
    let work = |mut lane: ndarray::ArrayViewMut1<'_, f64>| {
        let mut buf: Vec<f64> = lane.iter().copied().collect();
        let mut tmp = vec![0.0; n];
        let mut len = n;
        for _ in 0..levels {
            let (lo, hi) = tmp[..len].split_at_mut(len / 2);
            analysis_step(&buf[..len], bank, lo, hi);
            buf[..len].copy_from_slice(&tmp[..len]);
            len /= 2;
        }
        lane.iter_mut().zip(&buf).for_each(|(d, s)| *d = *s);
    };
    let par = a.len() >= PAR_THRESHOLD;
    let z = Zip::from(a.lanes_mut(Axis(axis)));
    if par {
        z.par_for_each(work);
    } else {
        z.for_each(work);
    }
}

fn lanes_inverse(mut a: ArrayViewMutD<'_, f64>, axis: usize, bank: &FilterBank, levels: usize) {
    let n = a.shape()[axis];
    let work = |mut lane: ndarray::ArrayViewMut1<'_, f64>| {
        let mut buf: Vec<f64> = lane.iter().copied().collect();
        let mut tmp = vec![0.0; n];
        let mut len = n >> levels;
        for _ in 0..levels {
            synthesis_step(&buf[..len], &buf[len..2 * len], bank, &mut tmp[..2 * len]);
            buf[..2 * len].copy_from_slice(&tmp[..2 * len]);
            len *= 2;
        }
        lane.iter_mut().zip(&buf).for_each(|(d, s)| *d = *s);
    };
    let par = a.len() >= PAR_THRESHOLD;
    let z = Zip::from(a.lanes_mut(Axis(axis)));
    if par {
        z.par_for_each(work);
    } else {
        z.for_each(work);
    }
}

pub fn dwt_periodic(signal: &[f64], bank: &FilterBank, levels: usize) -> Result<WaveletPyramid> {
    let a = ArrayD::from_shape_vec(IxDyn(&[signal.len()]), signal.to_vec())
        .map_err(|e| Error::Shape(e.to_string()))?;
    anisotropic_forward(&a, &[bank.degree], &[levels])
}

pub fn idwt_periodic(pyramid: &WaveletPyramid) -> Result<Vec<f64>> {
    if pyramid.ndim() != 1 {
        return Err(Error::Shape("expected a 1D pyramid".into()));
    }
    Ok(anisotropic_inverse(pyramid)?.into_raw_vec_and_offset().0)
}

/// Full 1D transform along each axis in turn.
pub fn anisotropic_forward(
    field: &ArrayD<f64>,
    degrees: &[SplineDegree],
    levels: &[usize],
) -> Result<WaveletPyramid> {
    check_shape(field.shape(), levels)?;
    if degrees.len() != field.ndim() {
        return Err(Error::Shape("one degree per axis required".into()));
    }
    let mut a = field.to_owned();
    for (axis, (&d, &l)) in degrees.iter().zip(levels).enumerate() {
        lanes_forward(a.view_mut(), axis, &filter_bank(d), l);
    }
    WaveletPyramid::from_mallat(TransformMode::Anisotropic, &a, degrees, levels)
}

pub fn anisotropic_inverse(p: &WaveletPyramid) -> Result<ArrayD<f64>> {
    if p.mode != TransformMode::Anisotropic {
        return Err(Error::Layout("expected an anisotropic pyramid".into()));
    }
    check_blocks(p)?;
    let mut a = p.to_mallat();
    for (axis, (&d, &l)) in p.degrees.iter().zip(&p.levels).enumerate().rev() {
        lanes_inverse(a.view_mut(), axis, &filter_bank(d), l);
    }
    Ok(a)
}

/// One mixed step per level on every axis, recursing on the scaling block.
pub fn isotropic_forward(
    field: &ArrayD<f64>,
    degrees: &[SplineDegree],
    levels: usize,
) -> Result<WaveletPyramid> {
    let lv = vec![levels; field.ndim()];
    // validates the layout before any work
    WaveletPyramid::zeros(TransformMode::Isotropic, field.shape(), degrees, &lv)?;
    let mut a = field.to_owned();
    let mut n = field.shape()[0];
    for _ in 0..levels {
        let mut region = a.slice_each_axis_mut(|_| Slice::from(0..n));
        for (axis, &d) in degrees.iter().enumerate() {
            lanes_forward(region.view_mut(), axis, &filter_bank(d), 1);
        }
        n /= 2;
    }
    WaveletPyramid::from_mallat(TransformMode::Isotropic, &a, degrees, &lv)
}

pub fn isotropic_inverse(p: &WaveletPyramid) -> Result<ArrayD<f64>> {
    if p.mode != TransformMode::Isotropic {
        return Err(Error::Layout("expected an isotropic pyramid".into()));
    }
    check_blocks(p)?;
    let mut a = p.to_mallat();
    let mut n = p.shape[0] >> p.levels[0];
    for _ in 0..p.levels[0] {
        n *= 2;
        let mut region = a.slice_each_axis_mut(|_| Slice::from(0..n));
        for (axis, &d) in p.degrees.iter().enumerate().rev() {
            lanes_inverse(region.view_mut(), axis, &filter_bank(d), 1);
        }
    }
    Ok(a)
}

/// Forward transform in either mode.
pub fn forward(
    mode: TransformMode,
    field: &ArrayD<f64>,
    degrees: &[SplineDegree],
    levels: &[usize],
) -> Result<WaveletPyramid> {
    match mode {
        TransformMode::Anisotropic => anisotropic_forward(field, degrees, levels),
        TransformMode::Isotropic => {
            if levels.iter().any(|&l| l != levels[0]) {
                return Err(Error::Shape("isotropic transforms use one level count".into()));
            }
            isotropic_forward(field, degrees, levels[0])
        }
    }
}

pub fn inverse(p: &WaveletPyramid) -> Result<ArrayD<f64>> {
    match p.mode {
        TransformMode::Anisotropic => anisotropic_inverse(p),
        TransformMode::Isotropic => isotropic_inverse(p),
    }
}

fn check_blocks(p: &WaveletPyramid) -> Result<()> {
    let keys = block_keys(p.mode, &p.shape, &p.levels);
    if keys.len() != p.blocks.len() {
        return Err(Error::Shape("wrong number of blocks".into()));
    }
    for k in keys {
        let want: Vec<usize> = block_ranges(&k, &p.shape, &p.levels).iter().map(|r| r.len()).collect();
        match p.blocks.get(&k) {
            Some(b) if b.shape() == want.as_slice() => {}
            _ => return Err(Error::Shape(format!("block {k:?} missing or mis-sized"))),
        }
    }
    Ok(())
}
