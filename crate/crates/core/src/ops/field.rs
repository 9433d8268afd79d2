use rayon::prelude::*;

/// Values on band points, `channels` per point, stored point-major.
///
/// Scalar images have one channel, RGB images three, gradients `3 × channels`,
/// symmetric tensors six. `extended` records whether the values currently form
/// a closest point extension, i.e. `v(x) = v(cp(x))` on the band.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceField {
    values: Vec<f64>,
    channels: usize,
    pub extended: bool,
}

impl SurfaceField {
    pub fn new(values: Vec<f64>, channels: usize) -> Self {
        assert!(channels > 0 && values.len() % channels == 0, "values must hold whole points");
        Self { values, channels, extended: false }
    }

    pub fn zeros(points: usize, channels: usize) -> Self {
        Self::new(vec![0.0; points * channels], channels)
    }

    pub fn constant(points: usize, value: &[f64]) -> Self {
        let mut f = Self::new(value.repeat(points), value.len());
        f.extended = true;
        f
    }

    /// Field with `f(i)` as the channel values of point `i`.
    pub fn from_fn(points: usize, channels: usize, f: impl Fn(usize) -> Vec<f64> + Sync) -> Self {
        let mut out = Self::zeros(points, channels);
        out.values.par_chunks_mut(channels).enumerate().for_each(|(i, row)| {
            row.copy_from_slice(&f(i));
        });
        out
    }

    pub fn from_scalar(values: Vec<f64>) -> Self {
        Self::new(values, 1)
    }

    pub fn extended(mut self, yes: bool) -> Self {
        self.extended = yes;
        self
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.values[i * self.channels..(i + 1) * self.channels]
    }

    pub fn point_mut(&mut self, i: usize) -> &mut [f64] {
        let c = self.channels;
        &mut self.values[i * c..(i + 1) * c]
    }

    pub fn get(&self, i: usize, c: usize) -> f64 {
        self.values[i * self.channels + c]
    }

    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.values.iter().skip(c).step_by(self.channels).copied().collect()
    }

    /// Selects and reorders channels.
    pub fn select(&self, channels: &[usize]) -> Self {
        let mut out = Self::from_fn(self.len(), channels.len(), |i| channels.iter().map(|&c| self.get(i, c)).collect());
        out.extended = self.extended;
        out
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Mean over all points and channels.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// `a·self + b·other`, elementwise.
    pub fn axpby(&self, a: f64, other: &Self, b: f64) -> Self {
        assert_eq!(self.values.len(), other.values.len());
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Self { values, channels: self.channels, extended: false }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync) -> Self {
        Self {
            values: self.values.par_iter().map(|&v| f(v)).collect(),
            channels: self.channels,
            extended: self.extended,
        }
    }
}

/// Components of a symmetric 3×3 tensor in storage order.
pub const XX: usize = 0;
pub const XY: usize = 1;
pub const XZ: usize = 2;
pub const YY: usize = 3;
pub const YZ: usize = 4;
pub const ZZ: usize = 5;

/// A symmetric 3×3 tensor per band point, stored as `(xx, xy, xz, yy, yz, zz)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField(SurfaceField);

impl TensorField {
    pub fn new(field: SurfaceField) -> Self {
        assert_eq!(field.channels(), 6, "tensor fields have six components");
        Self(field)
    }

    pub fn zeros(points: usize) -> Self {
        Self(SurfaceField::zeros(points, 6))
    }

    /// `g·I` at every point.
    pub fn isotropic(g: &[f64]) -> Self {
        Self(SurfaceField::from_fn(g.len(), 6, |i| vec![g[i], 0.0, 0.0, g[i], 0.0, g[i]]))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn components(&self, i: usize) -> [f64; 6] {
        self.0.point(i).try_into().unwrap()
    }

    pub fn matrix(&self, i: usize) -> nalgebra::Matrix3<f64> {
        let t = self.components(i);
        nalgebra::Matrix3::new(t[XX], t[XY], t[XZ], t[XY], t[YY], t[YZ], t[XZ], t[YZ], t[ZZ])
    }

    pub fn as_field(&self) -> &SurfaceField {
        &self.0
    }

    pub fn as_field_mut(&mut self) -> &mut SurfaceField {
        &mut self.0
    }

    pub fn into_field(self) -> SurfaceField {
        self.0
    }
}
