use ndarray::{ArrayView1, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One named block of a flat parameter vector, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

impl Segment {
    pub fn new(name: &str, rows: usize, cols: usize) -> Self {
        Segment {
            name: name.to_string(),
            rows,
            cols,
        }
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub segments: Vec<Segment>,
}

impl Layout {
    pub fn new(segments: Vec<Segment>) -> Self {
        Layout { segments }
    }

    pub fn len(&self) -> usize {
        self.segments.iter().map(Segment::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn offset(&self, index: usize) -> usize {
        self.segments[..index].iter().map(Segment::len).sum()
    }
}

/// Flat, ordered vector of every weight and bias of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    layout: Layout,
    values: Vec<f64>,
}

impl ModelParams {
    pub fn zeros(layout: Layout) -> Self {
        let n = layout.len();
        ModelParams {
            layout,
            values: vec![0.0; n],
        }
    }

    pub fn from_values(layout: Layout, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.len() {
            return Err(Error::Dimension {
                expected: layout.len(),
                got: values.len(),
            });
        }
        Ok(ModelParams { layout, values })
    }

    /// Uniform `±sqrt(6 / (fan_in + fan_out))` for every segment whose name
    /// starts with `w`; bias segments start at zero. A weight segment is
    /// `rows = fan_out`, `cols = fan_in`.
    pub fn xavier(layout: Layout, rng: &mut impl Rng) -> Self {
        let mut p = ModelParams::zeros(layout);
        for i in 0..p.layout.segments.len() {
            let seg = p.layout.segments[i].clone();
            if !seg.name.starts_with('w') {
                continue;
            }
            let bound = (6.0 / (seg.rows + seg.cols) as f64).sqrt();
            let off = p.layout.offset(i);
            for v in &mut p.values[off..off + seg.len()] {
                *v = (2.0 * rng.random::<f64>() - 1.0) * bound;
            }
        }
        p
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn matrix(&self, index: usize) -> ArrayView2<'_, f64> {
        let seg = &self.layout.segments[index];
        let off = self.layout.offset(index);
        ArrayView2::from_shape((seg.rows, seg.cols), &self.values[off..off + seg.len()])
            .expect("segment shape matches its length")
    }

    pub fn vector(&self, index: usize) -> ArrayView1<'_, f64> {
        let seg = &self.layout.segments[index];
        let off = self.layout.offset(index);
        ArrayView1::from(&self.values[off..off + seg.len()])
    }

    pub fn snapshot(&self) -> ModelParams {
        self.clone()
    }

    /// Overwrites the values with `snap`'s, bit for bit.
    pub fn restore(&mut self, snap: &ModelParams) -> Result<()> {
        if snap.layout != self.layout {
            return Err(Error::Layout);
        }
        self.values.copy_from_slice(&snap.values);
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Bitwise equality, distinguishing `0.0` from `-0.0`.
    pub fn bits_eq(&self, other: &ModelParams) -> bool {
        self.layout == other.layout
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Elementwise `alpha * a + (1 - alpha) * b`. The endpoints return an exact
/// copy of `a` (alpha = 1) or `b` (alpha = 0).
pub fn blend(a: &ModelParams, b: &ModelParams, alpha: f64) -> Result<ModelParams> {
    if a.layout != b.layout {
        return Err(Error::Layout);
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Invalid(format!("blend proportion {alpha} outside [0, 1]")));
    }
    if alpha == 1.0 {
        return Ok(a.clone());
    }
    if alpha == 0.0 {
        return Ok(b.clone());
    }
    let beta = 1.0 - alpha;
    let values = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| alpha * x + beta * y)
        .collect();
    Ok(ModelParams {
        layout: a.layout.clone(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scalar(v: f64) -> ModelParams {
        ModelParams::from_values(Layout::new(vec![Segment::new("w", 1, 1)]), vec![v]).unwrap()
    }

    #[test]
    fn blend_endpoints_and_midpoint() {
        let (a, b) = (scalar(2.0), scalar(4.0));
        assert!(blend(&a, &b, 1.0).unwrap().bits_eq(&a));
        assert!(blend(&a, &b, 0.0).unwrap().bits_eq(&b));
        assert_eq!(blend(&a, &b, 0.5).unwrap().as_slice(), &[3.0]);
        assert_eq!(blend(&scalar(1.0), &scalar(0.0), 0.9).unwrap().as_slice(), &[0.9]);
        assert!(blend(&a, &b, 1.5).is_err());
        let other = ModelParams::zeros(Layout::new(vec![Segment::new("w", 1, 2)]));
        assert!(matches!(blend(&a, &other, 0.5), Err(Error::Layout)));
    }

    #[test]
    fn negative_zero_survives_alpha_one() {
        let a = scalar(-0.0);
        let out = blend(&a, &scalar(3.0), 1.0).unwrap();
        assert_eq!(out.as_slice()[0].to_bits(), (-0.0f64).to_bits());
    }

    #[test]
    fn snapshot_restore_roundtrip() {
        let layout = Layout::new(vec![Segment::new("w1", 2, 3), Segment::new("b1", 1, 2)]);
        let mut rng = crate::rng::stream(3, 0);
        let mut p = ModelParams::xavier(layout, &mut rng);
        let snap = p.snapshot();
        assert!(snap.snapshot().bits_eq(&snap));
        p.as_mut_slice().iter_mut().for_each(|v| *v += 0.125);
        p.restore(&snap).unwrap();
        assert!(p.bits_eq(&snap));
        p.restore(&snap).unwrap();
        assert!(p.bits_eq(&snap));
        assert!(p.restore(&scalar(1.0)).is_err());
        assert_eq!(p.vector(1).to_vec(), vec![0.0, 0.0]);
        let bound = (6.0f64 / 5.0).sqrt();
        assert!(p.matrix(0).iter().all(|v| v.abs() <= bound));
    }

    proptest! {
        #[test]
        fn blend_self_is_identity_and_affine(v in proptest::collection::vec(-1e3f64..1e3, 1..16),
                                             w in proptest::collection::vec(-1e3f64..1e3, 16),
                                             alpha in 0.0f64..=1.0) {
            let layout = Layout::new(vec![Segment::new("w", 1, v.len())]);
            let a = ModelParams::from_values(layout.clone(), v.clone()).unwrap();
            let b = ModelParams::from_values(layout, w[..v.len()].to_vec()).unwrap();
            let same = blend(&a, &a, alpha).unwrap();
            for (x, y) in same.as_slice().iter().zip(a.as_slice()) {
                prop_assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
            }
            let mid = blend(&a, &b, alpha).unwrap();
            for ((m, x), y) in mid.as_slice().iter().zip(a.as_slice()).zip(b.as_slice()) {
                let expect = y + alpha * (x - y);
                prop_assert!((m - expect).abs() <= 1e-9 * (x.abs() + y.abs()).max(1.0));
            }
        }
    }
}
