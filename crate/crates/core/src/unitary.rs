//! Unitary representatives of Lagrangian subspaces under z = q + i p, the
//! map Δ(L) = (−1)ᵈ det(Z)² and the angle spectrum relative to the horizontal.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{MaslovError, Result};
use crate::linalg::LagrangianFrame;

pub type CMat = DMatrix<Complex64>;

/// Eigenvalues within this distance of −1 are assigned the angle π/2 exactly.
const MINUS_ONE_SNAP: f64 = 1e-12;

/// Angles θ₁ ≤ … ≤ θ_d in (−π/2, π/2].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleSpectrum {
    pub angles: Vec<f64>,
}

impl AngleSpectrum {
    pub fn sum(&self) -> f64 {
        self.angles.iter().sum()
    }

    /// Number of angles within `angle_tol` of π/2.
    pub fn vertical_count(&self, angle_tol: f64) -> usize {
        self.angles.iter().filter(|&&t| FRAC_PI_2 - t <= angle_tol).count()
    }

    /// Angle closest to the cut ±π/2 (largest |θ|), with ties broken toward +π/2.
    pub fn nearest_cut(&self) -> f64 {
        self.angles
            .iter()
            .cloned()
            .fold(0.0_f64, |best, t| if t.abs() >= best.abs() { t } else { best })
    }

    /// Distance to π/2 (mod π) of every angle, sorted ascending.
    pub fn cut_distances(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.angles.iter().map(|t| FRAC_PI_2 - t.abs()).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }
}

/// Δ(L) on the unit circle with its principal argument in (−π, π].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaValue {
    pub value: Complex64,
    pub arg: f64,
}

impl DeltaValue {
    fn from_complex(value: Complex64) -> Self {
        let value = value / value.norm();
        DeltaValue { value, arg: value.arg() }
    }
}

/// Z = A_q + i A_p for the stored orthonormal frame A. Unitary.
pub fn unitary_frame(l: &LagrangianFrame) -> CMat {
    let d = l.dim();
    let a = l.columns();
    CMat::from_fn(d, d, |i, j| Complex64::new(a[(i, j)], a[(d + i, j)]))
}

/// W = Z Zᵀ: symmetric, unitary and independent of the orthonormal frame.
pub fn souriau(l: &LagrangianFrame) -> CMat {
    let z = unitary_frame(l);
    &z * z.transpose()
}

fn complex_eigenvalues(m: &CMat) -> Vec<Complex64> {
    if m.nrows() == 1 {
        return vec![m[(0, 0)]];
    }
    match m.clone().eigenvalues() {
        Some(ev) => ev.iter().cloned().collect(),
        None => {
            let (_, t) = nalgebra::linalg::Schur::new(m.clone()).unpack();
            t.diagonal().iter().cloned().collect()
        }
    }
}

/// Half-argument of a unit eigenvalue, mapped into (−π/2, π/2].
fn half_angle(lambda: Complex64) -> f64 {
    if (lambda + 1.0).norm() < MINUS_ONE_SNAP {
        return FRAC_PI_2;
    }
    let mut theta = 0.5 * lambda.arg();
    if theta <= -FRAC_PI_2 {
        theta += PI;
    }
    theta
}

/// Angles of L relative to the horizontal: half-arguments of the eigenvalues of W.
pub fn angles(l: &LagrangianFrame) -> Result<AngleSpectrum> {
    let w = souriau(l);
    let d = w.nrows();
    let defect = (&w * w.adjoint() - CMat::identity(d, d)).norm();
    if defect > 1e-8 {
        return Err(MaslovError::NotIsotropic { defect });
    }
    let mut angles: Vec<f64> = complex_eigenvalues(&w).into_iter().map(half_angle).collect();
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(AngleSpectrum { angles })
}

/// Δ(L) = (−1)ᵈ det(Z)².
pub fn delta(l: &LagrangianFrame) -> DeltaValue {
    let z = unitary_frame(l);
    let det = z.determinant();
    let sign = if l.dim() % 2 == 0 { 1.0 } else { -1.0 };
    DeltaValue::from_complex(det * det * sign)
}

/// exp(2i Σθⱼ) · exp(i d π) from an angle spectrum.
pub fn delta_from_angles(spec: &AngleSpectrum) -> DeltaValue {
    let d = spec.angles.len() as f64;
    DeltaValue::from_complex(Complex64::from_polar(1.0, 2.0 * spec.sum() + d * PI))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_lagrangian, Mat};
    use std::f64::consts::FRAC_PI_4;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn unitary_frame_examples() {
        let z = unitary_frame(&LagrangianFrame::horizontal(2));
        assert!((z - CMat::identity(2, 2)).norm() < 1e-15);
        let z = unitary_frame(&LagrangianFrame::vertical(2));
        assert!((z - CMat::identity(2, 2) * Complex64::i()).norm() < 1e-15);
        for s in 0..100 {
            let z = unitary_frame(&random_lagrangian(3, s));
            assert!((z.adjoint() * &z - CMat::identity(3, 3)).norm() < 1e-10);
        }
    }

    #[test]
    fn souriau_examples() {
        let w = souriau(&LagrangianFrame::horizontal(3));
        assert!((w - CMat::identity(3, 3)).norm() < 1e-15);
        let w = souriau(&LagrangianFrame::vertical(3));
        assert!((w + CMat::identity(3, 3)).norm() < 1e-15);
        let theta: f64 = 0.4;
        let l = LagrangianFrame::graph(&Mat::from_element(1, 1, theta.tan())).unwrap();
        assert!(close(souriau(&l)[(0, 0)], Complex64::from_polar(1.0, 2.0 * theta), 1e-14));
    }

    #[test]
    fn angle_examples() {
        assert_eq!(angles(&LagrangianFrame::horizontal(2)).unwrap().angles, vec![0.0, 0.0]);
        assert_eq!(angles(&LagrangianFrame::vertical(3)).unwrap().angles, vec![FRAC_PI_2; 3]);
        let mixed = LagrangianFrame::new(Mat::from_column_slice(4, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0])).unwrap();
        let a = angles(&mixed).unwrap().angles;
        assert!(a[0].abs() < 1e-15 && a[1] == FRAC_PI_2, "{a:?}");
    }

    #[test]
    fn delta_examples() {
        for d in 1..=4 {
            let v = delta(&LagrangianFrame::vertical(d));
            assert!(close(v.value, Complex64::new(1.0, 0.0), 1e-14), "d={d}");
        }
        let h = delta(&LagrangianFrame::horizontal(1));
        assert!(close(h.value, Complex64::new(-1.0, 0.0), 1e-15));
        let l = delta(&LagrangianFrame::line(FRAC_PI_4));
        assert!(close(l.value, Complex64::from_polar(1.0, 1.5 * PI), 1e-14));
    }

    #[test]
    fn delta_matches_angle_formula() {
        for d in 1..=4 {
            for s in 0..250 {
                let l = random_lagrangian(d, 1000 * d as u64 + s);
                let a = delta(&l).value;
                let b = delta_from_angles(&angles(&l).unwrap()).value;
                assert!(close(a, b, 1e-9), "d={d} seed={s}");
            }
        }
    }

    #[test]
    fn frame_independence() {
        use crate::linalg::expm;
        let l = random_lagrangian(3, 9);
        let base = delta(&l).value;
        let base_angles = angles(&l).unwrap().angles;
        for k in 0..10 {
            // random rotation of the columns
            let gen = Mat::from_fn(3, 3, |i, j| ((i * 3 + j + k) as f64 * 0.37).sin());
            let r = expm(&(&gen - gen.transpose()));
            let l2 = l.reframed(&r);
            assert!(close(delta(&l2).value, base, 1e-9));
            let a2 = angles(&l2).unwrap().angles;
            for (x, y) in a2.iter().zip(&base_angles) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn vertical_count_tracks_intersection() {
        use crate::linalg::vertical_intersection_dim;
        // k of the d coordinate directions vertical, the rest tilted
        for d in 1..=3 {
            for k in 0..=d {
                let mut m = Mat::zeros(2 * d, d);
                for j in 0..d {
                    if j < k {
                        m[(d + j, j)] = 1.0;
                    } else {
                        m[(j, j)] = 1.0;
                        m[(d + j, j)] = 0.3 * (j + 1) as f64;
                    }
                }
                let l = LagrangianFrame::new(m).unwrap();
                let a = angles(&l).unwrap();
                assert_eq!(a.vertical_count(1e-7), k);
                assert_eq!(vertical_intersection_dim(&l, 1e-8), k);
            }
        }
    }
}
