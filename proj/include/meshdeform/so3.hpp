#pragma once

// Rotation-vector / quaternion maps and their Jacobians.
//
// Conventions:
//   - rotation vector r = angle * unit axis, exp([r]x) in SO(3)
//   - quaternion stored as Vec4 (w, x, y, z)
//   - all Jacobians are with respect to the written parameters, verified
//     against finite differences in the test suite

#include "meshdeform/common.hpp"

#include <Eigen/Geometry>

namespace meshdeform::so3 {

inline Mat3 hat(const Vec3& v) {
    Mat3 m;
    m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
    return m;
}

inline Vec3 vee(const Mat3& m) {
    return Vec3(m(2, 1), m(0, 2), m(1, 0));
}

// exp([r]x) via Rodrigues.
inline Mat3 exp_rotvec(const Vec3& r) {
    const double theta2 = r.squaredNorm();
    const Mat3 k = hat(r);
    if (theta2 < 1e-16) {
        return Mat3::Identity() + k + 0.5 * k * k;
    }
    const double theta = std::sqrt(theta2);
    return Mat3::Identity() + (std::sin(theta) / theta) * k +
           ((1.0 - std::cos(theta)) / theta2) * k * k;
}

// Canonical log map, angle in [0, pi].
inline Vec3 log_matrix(const Mat3& rotation) {
    Eigen::AngleAxisd aa(rotation);
    return aa.angle() * aa.axis();
}

// Left Jacobian of SO(3): exp([r + d]x) ~ exp([J_l(r) d]x) exp([r]x).
inline Mat3 left_jacobian(const Vec3& r) {
    const double theta2 = r.squaredNorm();
    const Mat3 k = hat(r);
    if (theta2 < 1e-12) {
        return Mat3::Identity() + 0.5 * k + (1.0 / 6.0) * k * k;
    }
    const double theta = std::sqrt(theta2);
    const double a = (1.0 - std::cos(theta)) / theta2;
    const double b = (theta - std::sin(theta)) / (theta2 * theta);
    return Mat3::Identity() + a * k + b * k * k;
}

// d(exp([r]x) p)/dr = -[exp([r]x) p]x J_l(r), as a 3x3 matrix.
inline Mat3 rotate_point_jacobian(const Vec3& r, const Vec3& rotated_point) {
    return -hat(rotated_point) * left_jacobian(r);
}

// ---- quaternions (w, x, y, z) ----

inline Vec4 quat_identity() {
    return Vec4(1, 0, 0, 0);
}

inline Vec4 quat_conjugate(const Vec4& q) {
    return Vec4(q[0], -q[1], -q[2], -q[3]);
}

inline Vec4 quat_multiply(const Vec4& a, const Vec4& b) {
    return Vec4(a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
                a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
                a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
                a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]);
}

// a * b = left_matrix(a) * b
inline Eigen::Matrix4d quat_left_matrix(const Vec4& a) {
    Eigen::Matrix4d m;
    m << a[0], -a[1], -a[2], -a[3],
         a[1],  a[0], -a[3],  a[2],
         a[2],  a[3],  a[0], -a[1],
         a[3], -a[2],  a[1],  a[0];
    return m;
}

// a * b = right_matrix(b) * a
inline Eigen::Matrix4d quat_right_matrix(const Vec4& b) {
    Eigen::Matrix4d m;
    m << b[0], -b[1], -b[2], -b[3],
         b[1],  b[0],  b[3], -b[2],
         b[2], -b[3],  b[0],  b[1],
         b[3],  b[2], -b[1],  b[0];
    return m;
}

// Unit quaternion of exp([r]x).
inline Vec4 quat_exp_rotvec(const Vec3& r) {
    const double theta2 = r.squaredNorm();
    if (theta2 < 1e-16) {
        const Vec3 v = (0.5 - theta2 / 48.0) * r;
        return Vec4(1.0 - theta2 / 8.0, v.x(), v.y(), v.z());
    }
    const double theta = std::sqrt(theta2);
    const double s = std::sin(0.5 * theta) / theta;
    return Vec4(std::cos(0.5 * theta), s * r.x(), s * r.y(), s * r.z());
}

// d quat_exp_rotvec / dr, 4x3.
inline Eigen::Matrix<double, 4, 3> quat_exp_rotvec_jacobian(const Vec3& r) {
    Eigen::Matrix<double, 4, 3> j;
    const double theta2 = r.squaredNorm();
    if (theta2 < 1e-12) {
        j.row(0) = -0.25 * r.transpose();
        j.bottomRows<3>() = 0.5 * Mat3::Identity() - (1.0 / 24.0) * r * r.transpose();
        return j;
    }
    const double theta = std::sqrt(theta2);
    const double c = std::cos(0.5 * theta);
    const double s = std::sin(0.5 * theta);
    const Vec3 axis = r / theta;
    j.row(0) = (-0.5 * s) * axis.transpose();
    j.bottomRows<3>() = (s / theta) * Mat3::Identity() +
                        (0.5 * c - s / theta) * axis * axis.transpose();
    return j;
}

// Rotation vector of a (unit) quaternion; for w < 0 the angle exceeds pi,
// giving the representative consistent with a hemisphere-aligned sign.
inline Vec3 quat_log(const Vec4& q) {
    const Vec3 v(q[1], q[2], q[3]);
    const double vn = v.norm();
    if (vn < 1e-12) {
        return 2.0 * v;  // near identity (w ~ +-1); first-order log
    }
    const double angle = 2.0 * std::atan2(vn, q[0]);
    return (angle / vn) * v;
}

// Rotation matrix of a unit quaternion.
inline Mat3 quat_to_matrix(const Vec4& q) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    Mat3 m;
    m << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
         2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
         2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return m;
}

// Deterministic quaternion of a rotation matrix, sign-canonicalized (w >= 0).
inline Vec4 quat_from_matrix(const Mat3& rotation) {
    Eigen::Quaterniond q(rotation);
    Vec4 out(q.w(), q.x(), q.y(), q.z());
    if (out[0] < 0 ||
        (out[0] == 0 && (out[1] < 0 || (out[1] == 0 && (out[2] < 0 || (out[2] == 0 && out[3] < 0)))))) {
        out = -out;
    }
    return out;
}

// R(q) v for unit q, via the homogeneous degree-2 form.
inline Vec3 quat_rotate(const Vec4& q, const Vec3& v) {
    const double w = q[0];
    const Vec3 u(q[1], q[2], q[3]);
    return (w * w - u.squaredNorm()) * v + 2.0 * u.dot(v) * u + 2.0 * w * u.cross(v);
}

// d(quat_rotate(q, v))/dq as an unconstrained 4-vector, 3x4. Valid when
// composed with tangent-space perturbations of a unit q (normalization or
// exp-map chains).
inline Eigen::Matrix<double, 3, 4> quat_rotate_jacobian(const Vec4& q, const Vec3& v) {
    const double w = q[0];
    const Vec3 u(q[1], q[2], q[3]);
    Eigen::Matrix<double, 3, 4> j;
    j.col(0) = 2.0 * w * v + 2.0 * u.cross(v);
    j.rightCols<3>() = -2.0 * v * u.transpose() + 2.0 * u.dot(v) * Mat3::Identity() +
                       2.0 * u * v.transpose() - 2.0 * w * hat(v);
    return j;
}

// Relative rotation angle between two rotations, in [0, pi].
inline double rotation_angle_between(const Mat3& a, const Mat3& b) {
    const double c = ((a.transpose() * b).trace() - 1.0) * 0.5;
    return std::acos(std::clamp(c, -1.0, 1.0));
}

}  // namespace meshdeform::so3
