//! Rotation and small dense-matrix helpers shared by the plant and the controllers.
//!
//! Rotations are stored as plain 3×3 matrices (body → world). The exponential
//! map uses Rodrigues' formula and the log map extracts the rotation vector
//! from the skew part, refusing angles within `1e-6` of π where the axis is
//! ill-conditioned.

use nalgebra::{DMatrix, Matrix3, SMatrix, SVector, Vector3, Vector6};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;
pub type Vec6 = Vector6<f64>;
pub type Vec12 = SVector<f64, 12>;
pub type Mat3 = Matrix3<f64>;
pub type Mat6 = SMatrix<f64, 6, 6>;
pub type Mat12 = SMatrix<f64, 12, 12>;
pub type MatNM = DMatrix<f64>;

/// Orthonormality tolerance used when accepting an arbitrary matrix as a rotation.
pub const ROT_TOLERANCE: f64 = 1e-9;

const SMALL_ANGLE: f64 = 1e-6;
const NEAR_PI_TRACE_MARGIN: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum So3Error {
    #[error("rotation angle too close to pi for a well-defined log (trace = {trace})")]
    AngleNearPi { trace: f64 },
    #[error("matrix is not a rotation (orthonormality error {ortho:e}, det {det})")]
    NotARotation { ortho: f64, det: f64 },
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix must be square and non-empty, got {rows}x{cols}")]
    BadShape { rows: usize, cols: usize },
}

/// A proper rotation matrix mapping body-frame vectors into the world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rot3(Mat3);

impl Default for Rot3 {
    fn default() -> Self {
        Self::identity()
    }
}

impl Rot3 {
    pub fn identity() -> Self {
        Self(Mat3::identity())
    }

    /// Accepts `m` only if it satisfies the rotation invariants to [`ROT_TOLERANCE`].
    pub fn try_from_matrix(m: Mat3) -> Result<Self, So3Error> {
        let ortho = orthonormality_error(&m);
        let det = m.determinant();
        if !m.iter().all(|x| x.is_finite()) || ortho > ROT_TOLERANCE || (det - 1.0).abs() > ROT_TOLERANCE {
            return Err(So3Error::NotARotation { ortho, det });
        }
        Ok(Self(m))
    }

    #[cfg(test)]
    pub(crate) fn from_matrix_unchecked(m: Mat3) -> Self {
        Self(m)
    }

    /// Rotation about the world z axis.
    pub fn from_yaw(yaw: f64) -> Self {
        rot_exp(&Vec3::new(0.0, 0.0, yaw))
    }

    /// Z-Y-X (yaw, pitch, roll) composition: `R = Rz(yaw) Ry(pitch) Rx(roll)`.
    pub fn from_rpy(roll: f64, pitch: f64, yaw: f64) -> Self {
        let (sr, cr) = roll.sin_cos();
        let (sp, cp) = pitch.sin_cos();
        let (sy, cy) = yaw.sin_cos();
        Self(Mat3::new(
            cy * cp,
            cy * sp * sr - sy * cr,
            cy * sp * cr + sy * sr,
            sy * cp,
            sy * sp * sr + cy * cr,
            sy * sp * cr - cy * sr,
            -sp,
            cp * sr,
            cp * cr,
        ))
    }

    /// Inverse of [`Rot3::from_rpy`]; pitch is returned in [-π/2, π/2].
    pub fn to_rpy(&self) -> Vec3 {
        let m = &self.0;
        let pitch = (-m[(2, 0)]).clamp(-1.0, 1.0).asin();
        let roll = m[(2, 1)].atan2(m[(2, 2)]);
        let yaw = m[(1, 0)].atan2(m[(0, 0)]);
        Vec3::new(roll, pitch, yaw)
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn compose(&self, other: &Rot3) -> Self {
        Self(self.0 * other.0)
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }

    pub fn apply_inverse(&self, v: &Vec3) -> Vec3 {
        self.0.transpose() * v
    }

    pub fn orthonormality_error(&self) -> f64 {
        orthonormality_error(&self.0)
    }

    /// Projects back onto SO(3) (nearest rotation in Frobenius norm).
    pub fn reorthonormalized(&self) -> Self {
        let svd = self.0.svd(true, true);
        let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
        let mut r = u * v_t;
        if r.determinant() < 0.0 {
            let mut u = u;
            u.column_mut(2).neg_mut();
            r = u * v_t;
        }
        Self(r)
    }
}

fn orthonormality_error(m: &Mat3) -> f64 {
    (m.transpose() * m - Mat3::identity()).abs().max()
}

/// Cross-product matrix: `skew(v) * w == v × w`.
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

fn vee(m: &Mat3) -> Vec3 {
    Vec3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// Rodrigues' formula for the rotation by angle `|v|` about `v / |v|`.
pub fn rot_exp(v: &Vec3) -> Rot3 {
    let theta2 = v.norm_squared();
    let theta = theta2.sqrt();
    let k = skew(v);
    let (a, b) = if theta < SMALL_ANGLE {
        (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    Rot3(Mat3::identity() + k * a + k * k * b)
}

/// Rotation vector of `r`. Fails within `1e-6` of trace −1 (angle near π).
pub fn rot_log(r: &Rot3) -> Result<Vec3, So3Error> {
    let m = &r.0;
    let trace = m.trace();
    if trace <= -1.0 + NEAR_PI_TRACE_MARGIN {
        return Err(So3Error::AngleNearPi { trace });
    }
    let w = vee(&(m - m.transpose())) * 0.5;
    let sin_theta = w.norm();
    let cos_theta = 0.5 * (trace - 1.0);
    let theta = sin_theta.atan2(cos_theta);
    let scale = if theta < SMALL_ANGLE {
        1.0 + theta * theta / 6.0
    } else {
        theta / sin_theta
    };
    Ok(w * scale)
}

/// `log(R_d Rᵀ)`: world-frame rotation vector taking the actual attitude to the desired one.
pub fn orientation_error(r_desired: &Rot3, r: &Rot3) -> Result<Vec3, So3Error> {
    rot_log(&r_desired.compose(&r.transpose()))
}

/// Full spectrum of a symmetric matrix by cyclic Jacobi sweeps, sorted ascending.
pub fn symmetric_eigenvalues(m: &MatNM) -> Result<Vec<f64>, So3Error> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return Err(So3Error::BadShape { rows: n, cols: m.ncols() });
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let asym = (m - m.transpose()).amax();
    if asym > 1e-9 * scale.max(1.0) {
        return Err(So3Error::NotSymmetric(asym));
    }
    let mut a = (m + m.transpose()) * 0.5;
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let tau = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let t = if tau == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn symmetric_eig_extrema(m: &MatNM) -> Result<(f64, f64), So3Error> {
    let eig = symmetric_eigenvalues(m)?;
    Ok((eig[0], eig[eig.len() - 1]))
}
