use nalgebra::Vector3;

use super::GeometryError;
use crate::scalar::Real;

/// Per-pixel 3D coordinates with an explicit validity mask, stored row-major.
///
/// Reductions over a pointmap only ever look at valid pixels. Coordinates
/// stored under an invalid pixel are carried along untouched but never read.
#[derive(Clone, Debug, PartialEq)]
pub struct Pointmap<T: Real> {
    width: usize,
    height: usize,
    xyz: Vec<Vector3<T>>,
    valid: Vec<bool>,
}

impl<T: Real> Pointmap<T> {
    pub fn new(
        width: usize,
        height: usize,
        xyz: Vec<Vector3<T>>,
        valid: Vec<bool>,
    ) -> Result<Self, GeometryError> {
        if width == 0 || height == 0 {
            return Err(GeometryError::ShapeMismatch("empty pointmap".into()));
        }
        let n = width * height;
        if xyz.len() != n || valid.len() != n {
            return Err(GeometryError::ShapeMismatch(format!(
                "{width}x{height} pointmap with {} points and {} mask entries",
                xyz.len(),
                valid.len()
            )));
        }
        if let Some(i) = (0..n).find(|&i| valid[i] && !xyz[i].iter().all(|v| v.is_finite())) {
            return Err(GeometryError::InvalidValue(format!("non-finite point at pixel {i}")));
        }
        Ok(Self { width, height, xyz, valid })
    }

    /// Builds a pointmap from a per-pixel closure; `None` marks the pixel invalid.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> Option<Vector3<T>>,
    ) -> Self {
        assert!(width > 0 && height > 0, "empty pointmap");
        let n = width * height;
        let mut xyz = Vec::with_capacity(n);
        let mut valid = Vec::with_capacity(n);
        for row in 0..height {
            for col in 0..width {
                match f(col, row) {
                    Some(p) if p.iter().all(|v| v.is_finite()) => {
                        xyz.push(p);
                        valid.push(true);
                    }
                    _ => {
                        xyz.push(Vector3::zeros());
                        valid.push(false);
                    }
                }
            }
        }
        Self { width, height, xyz, valid }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.xyz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xyz.is_empty()
    }

    pub fn xyz(&self) -> &[Vector3<T>] {
        &self.xyz
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn is_valid(&self, idx: usize) -> bool {
        self.valid[idx]
    }

    pub fn point(&self, idx: usize) -> Option<&Vector3<T>> {
        self.valid[idx].then(|| &self.xyz[idx])
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    pub fn iter_valid(&self) -> impl Iterator<Item = (usize, &Vector3<T>)> + '_ {
        self.xyz.iter().enumerate().filter(move |(i, _)| self.valid[*i])
    }

    /// Pixel-center coordinates of a flat index.
    pub fn pixel_center(&self, idx: usize) -> (T, T) {
        let col = idx % self.width;
        let row = idx / self.width;
        (T::lit(col as f64 + 0.5), T::lit(row as f64 + 0.5))
    }

    pub fn same_shape(&self, other: &Pointmap<T>) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Applies `f` to every valid point, keeping the mask.
    pub fn map_valid(&self, f: impl Fn(&Vector3<T>) -> Vector3<T>) -> Self {
        let xyz = self
            .xyz
            .iter()
            .zip(&self.valid)
            .map(|(p, &v)| if v { f(p) } else { *p })
            .collect();
        Self { width: self.width, height: self.height, xyz, valid: self.valid.clone() }
    }

    /// Returns a copy where pixels outside `keep` are marked invalid.
    pub fn masked(&self, keep: &[bool]) -> Self {
        assert_eq!(keep.len(), self.len());
        let valid = self.valid.iter().zip(keep).map(|(a, b)| *a && *b).collect();
        Self { width: self.width, height: self.height, xyz: self.xyz.clone(), valid }
    }

    pub fn cast<U: Real>(&self) -> Pointmap<U> {
        Pointmap {
            width: self.width,
            height: self.height,
            xyz: self.xyz.iter().map(|p| p.map(|v| U::lit(v.as_f64()))).collect(),
            valid: self.valid.clone(),
        }
    }

    /// Largest absolute coordinate difference over pixels valid in both maps.
    pub fn max_abs_diff(&self, other: &Pointmap<T>) -> T {
        assert!(self.same_shape(other));
        let mut worst = T::zero();
        for i in 0..self.len() {
            if self.valid[i] && other.valid[i] {
                worst = worst.max((self.xyz[i] - other.xyz[i]).amax());
            }
        }
        worst
    }

    pub fn into_parts(self) -> (usize, usize, Vec<Vector3<T>>, Vec<bool>) {
        (self.width, self.height, self.xyz, self.valid)
    }
}

/// Per-pixel positive confidences (exp-activated network output).
#[derive(Clone, Debug, PartialEq)]
pub struct ConfidenceMap<T: Real> {
    width: usize,
    height: usize,
    values: Vec<T>,
}

impl<T: Real> ConfidenceMap<T> {
    pub fn new(width: usize, height: usize, values: Vec<T>) -> Result<Self, GeometryError> {
        if values.len() != width * height || values.is_empty() {
            return Err(GeometryError::ShapeMismatch(format!(
                "{width}x{height} confidence map with {} values",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|c| !(c.is_finite() && *c > T::zero())) {
            return Err(GeometryError::InvalidValue(format!(
                "confidence at pixel {i} is not a positive finite number"
            )));
        }
        Ok(Self { width, height, values })
    }

    pub fn uniform(width: usize, height: usize, value: T) -> Self {
        Self::new(width, height, vec![value; width * height]).expect("positive confidence")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn mean(&self) -> T {
        let sum = self.values.iter().fold(T::zero(), |acc, v| acc + *v);
        sum / T::lit(self.values.len() as f64)
    }

    pub fn matches<U: Real>(&self, pm: &Pointmap<U>) -> bool {
        self.width == pm.width() && self.height == pm.height()
    }

    pub fn cast<U: Real>(&self) -> ConfidenceMap<U> {
        ConfidenceMap {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }
}
