//! Seeded synthetic datasets.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Dataset, Tensor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Side length of the square images produced by [`make_plates`].
pub const PLATE_SIDE: usize = 16;
/// Half-open row range of the plate region.
pub const PLATE_ROWS: (usize, usize) = (10, 14);
/// Half-open column range of the plate region.
pub const PLATE_COLS: (usize, usize) = (4, 12);

/// Isotropic Gaussian blobs; sample `i` belongs to center `i % centers.len()`.
pub fn make_blobs<T: Scalar>(
    n: usize,
    centers: &[Vec<T>],
    spread: T,
    seed: u64,
) -> Result<Dataset<T>> {
    if n == 0 {
        return Err(Error::EmptyDataset("make_blobs needs n > 0".into()));
    }
    let Some(first) = centers.first() else {
        return Err(Error::InvalidArgument(
            "make_blobs needs at least one center".into(),
        ));
    };
    let d = first.len();
    if centers.iter().any(|c| c.len() != d) {
        return Err(Error::Shape("blob centers differ in dimension".into()));
    }
    if !(spread > T::zero()) {
        return Err(Error::InvalidArgument("spread must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n * d);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % centers.len();
        for &m in &centers[c] {
            let z: f64 = rng.sample(StandardNormal);
            values.push(m + spread * T::lit(z));
        }
        y.push(c);
    }
    Dataset::new(Tensor::matrix(n, d, values)?, y, centers.len())
}

/// Two interleaving half circles: the upper unit arc centered at the origin
/// (label 0) and the lower unit arc centered at (1, 0.5) (label 1), with
/// additive Gaussian noise. Samples are shuffled with the same seed.
pub fn make_moons<T: Scalar>(n: usize, noise: T, seed: u64) -> Result<Dataset<T>> {
    if n == 0 {
        return Err(Error::EmptyDataset("make_moons needs n > 0".into()));
    }
    if noise < T::zero() {
        return Err(Error::InvalidArgument("noise must be non-negative".into()));
    }
    let n_out = n / 2;
    let n_in = n - n_out;
    let pi = std::f64::consts::PI;
    let arc = |k: usize, m: usize| {
        if m > 1 {
            pi * k as f64 / (m - 1) as f64
        } else {
            0.0
        }
    };
    let mut pts: Vec<([f64; 2], usize)> = Vec::with_capacity(n);
    for k in 0..n_out {
        let t = arc(k, n_out);
        pts.push(([t.cos(), t.sin()], 0));
    }
    for k in 0..n_in {
        let t = arc(k, n_in);
        pts.push(([1.0 - t.cos(), 0.5 - t.sin()], 1));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pts.shuffle(&mut rng);
    let mut values = Vec::with_capacity(2 * n);
    let mut y = Vec::with_capacity(n);
    for (p, label) in pts {
        for v in p {
            let z: f64 = rng.sample(StandardNormal);
            values.push(T::lit(v) + noise * T::lit(z));
        }
        y.push(label);
    }
    Dataset::new(Tensor::matrix(n, 2, values)?, y, 2)
}

/// Boolean mask selecting the plate region of a flattened image.
pub fn plate_mask() -> Vec<bool> {
    (0..PLATE_SIDE * PLATE_SIDE)
        .map(|p| {
            let (r, c) = (p / PLATE_SIDE, p % PLATE_SIDE);
            (PLATE_ROWS.0..PLATE_ROWS.1).contains(&r) && (PLATE_COLS.0..PLATE_COLS.1).contains(&c)
        })
        .collect()
}

/// Small raster images in `[0, 1]` with a class-coded rectangular "plate".
///
/// Each class lights one vertical band of the plate and draws a faint
/// class-specific stripe pattern in the background. Images are flattened
/// row-major into `PLATE_SIDE²` features.
pub fn make_plates<T: Scalar>(
    n: usize,
    n_classes: usize,
    noise: T,
    seed: u64,
) -> Result<Dataset<T>> {
    if n == 0 {
        return Err(Error::EmptyDataset("make_plates needs n > 0".into()));
    }
    if !(2..=4).contains(&n_classes) {
        return Err(Error::InvalidArgument(
            "make_plates supports 2 to 4 classes".into(),
        ));
    }
    let side = PLATE_SIDE;
    let plate_w = PLATE_COLS.1 - PLATE_COLS.0;
    let mask = plate_mask();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n * side * side);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % n_classes;
        for (p, &in_plate) in mask.iter().enumerate() {
            let (r, c) = (p / side, p % side);
            let clean = if in_plate {
                let band = (c - PLATE_COLS.0) * n_classes / plate_w;
                if band == class {
                    0.9
                } else {
                    0.1
                }
            } else {
                let phase = match class {
                    0 => r,
                    1 => c,
                    2 => r + c,
                    _ => r + side - c,
                };
                if phase % 4 < 2 {
                    0.55
                } else {
                    0.45
                }
            };
            let z: f64 = rng.sample(StandardNormal);
            let v = T::lit(clean) + noise * T::lit(z);
            values.push(v.max(T::zero()).min(T::one()));
        }
        y.push(class);
    }
    let d = side * side;
    Dataset::with_bounds(
        Tensor::matrix(n, d, values)?,
        y,
        n_classes,
        Some(vec![(T::zero(), T::one()); d]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blobs_shape_and_determinism() {
        let centers = vec![vec![0.0, 0.0], vec![3.0, 3.0]];
        let a = make_blobs(100, &centers, 0.5, 7).unwrap();
        assert_eq!(a.x().shape(), &[100, 2]);
        assert!(a.y().iter().all(|&l| l < 2));
        assert_eq!(a.n_classes(), 2);
        let b = make_blobs(100, &centers, 0.5, 7).unwrap();
        assert_eq!(a, b);
        assert!(matches!(
            make_blobs(0, &centers, 0.5, 7),
            Err(Error::EmptyDataset(_))
        ));
    }

    #[test]
    fn noiseless_moons_lie_on_arcs() {
        let ds = make_moons::<f64>(200, 0.0, 0).unwrap();
        for (x, y) in ds.rows().into_iter().zip(ds.y()) {
            let (cx, cy): (f64, f64) = if *y == 0 { (0.0, 0.0) } else { (1.0, 0.5) };
            let r: f64 = ((x[0] - cx) * (x[0] - cx) + (x[1] - cy) * (x[1] - cy)).sqrt();
            assert!((r - 1.0).abs() < 1e-12);
            if *y == 0 {
                assert!(x[1] >= -1e-12);
            } else {
                assert!(x[1] <= 0.5 + 1e-12);
            }
        }
        assert_eq!(
            make_moons(200, 0.1, 0).unwrap(),
            make_moons(200, 0.1, 0).unwrap()
        );
    }

    #[test]
    fn plates_are_bounded_images() {
        let ds = make_plates::<f64>(12, 3, 0.05, 1).unwrap();
        assert_eq!(ds.x().shape(), &[12, 256]);
        assert_eq!(plate_mask().iter().filter(|&&m| m).count(), 32);
        assert!(ds
            .x()
            .to_dense_vec()
            .iter()
            .all(|&v| (0.0..=1.0).contains(&v)));
        assert_eq!(ds.y()[..3], [0, 1, 2]);
    }
}
