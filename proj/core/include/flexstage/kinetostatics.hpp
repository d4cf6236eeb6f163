#pragma once

#include <Eigen/Dense>

namespace flexstage {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

struct Material {
    double youngs_modulus = 71e9;   // Pa
    double shear_modulus = 26.7e9;  // Pa
    double shear_factor = 1.2;
    double density = 2810.0;  // kg/m^3

    static Material aluminium();
    void validate() const;
};

// Rectangular beam section. Thickness is the thin (motional) direction and
// lies along local y; width lies along local z.
struct CrossSection {
    double thickness = 0;
    double width = 0;
    double area = 0;
    double i_y = 0;  // about local y: t b^3 / 12
    double i_z = 0;  // about local z: b t^3 / 12
    double i_p = 0;  // torsion constant
};

CrossSection section_properties(double t, double b);

Mat3 skew(const Vec3& v);

struct SpatialFrame {
    Mat3 rotation = Mat3::Identity();
    Vec3 origin = Vec3::Zero();

    static SpatialFrame at(const Vec3& origin, const Mat3& rotation = Mat3::Identity());
    bool is_proper(double tol = 1e-12) const;
};

// Wrench packed as (Fx, Fy, Fz, Mx, My, Mz).
struct Wrench {
    Vec3 force = Vec3::Zero();
    Vec3 moment = Vec3::Zero();

    Vec6 packed() const;
    static Wrench unpack(const Vec6& w);
};

// Maps a wrench expressed in `from` (at its origin) to the statically
// equivalent wrench in `to`. Both frames are given in a common parent.
Mat6 wrench_transform(const SpatialFrame& from, const SpatialFrame& to);

}  // namespace flexstage
