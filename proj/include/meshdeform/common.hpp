#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <stdexcept>
#include <string>
#include <vector>

namespace meshdeform {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec4 = Eigen::Vector4d;

// Per-vertex fields; length must equal the owning mesh's vertex count.
using VertexField3 = std::vector<Vec3>;
using VertexFieldMat = std::vector<Mat3>;

// Invalid or inconsistent input data (bad files, size mismatches, range errors).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerically infeasible operation (degenerate geometry, antipodal blends,
// non-finite objectives).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

constexpr double kInfinity = std::numeric_limits<double>::infinity();

}  // namespace meshdeform
