#include "flexstage/kinetostatics.hpp"

#include <cmath>
#include <string>

#include "flexstage/errors.hpp"

namespace flexstage {

Material Material::aluminium() { return Material{}; }

void Material::validate() const {
    if (!(youngs_modulus > 0) || !std::isfinite(youngs_modulus))
        throw DomainError("Young's modulus must be positive");
    if (!(shear_modulus > 0) || !std::isfinite(shear_modulus))
        throw DomainError("shear modulus must be positive");
    if (!(shear_factor >= 1.0)) throw DomainError("shear factor must be >= 1");
    if (!(density >= 0)) throw DomainError("density must be non-negative");
}

CrossSection section_properties(double t, double b) {
    if (!(t > 0) || !(b > 0) || !std::isfinite(t) || !std::isfinite(b))
        throw DomainError("section dimensions must be positive");
    if (t > b)
        throw DomainError("thickness " + std::to_string(t) + " exceeds width " + std::to_string(b));
    CrossSection s;
    s.thickness = t;
    s.width = b;
    s.area = t * b;
    s.i_z = b * t * t * t / 12.0;
    s.i_y = t * b * b * b / 12.0;
    const double r = t / b;
    s.i_p = t * t * t * b * (1.0 / 3.0 - 0.21 * r + 0.0175 * std::pow(r, 5));
    return s;
}

Mat3 skew(const Vec3& v) {
    Mat3 s;
    s << 0, -v.z(), v.y(),
         v.z(), 0, -v.x(),
         -v.y(), v.x(), 0;
    return s;
}

SpatialFrame SpatialFrame::at(const Vec3& origin, const Mat3& rotation) {
    SpatialFrame f;
    f.rotation = rotation;
    f.origin = origin;
    return f;
}

bool SpatialFrame::is_proper(double tol) const {
    const Mat3 e = rotation.transpose() * rotation - Mat3::Identity();
    return e.cwiseAbs().maxCoeff() <= tol && std::abs(rotation.determinant() - 1.0) <= tol;
}

Vec6 Wrench::packed() const {
    Vec6 w;
    w << force, moment;
    return w;
}

Wrench Wrench::unpack(const Vec6& w) {
    return Wrench{w.head<3>(), w.tail<3>()};
}

Mat6 wrench_transform(const SpatialFrame& from, const SpatialFrame& to) {
    if (!from.is_proper(1e-9) || !to.is_proper(1e-9))
        throw DomainError("wrench_transform: rotation is not orthonormal");
    const Mat3 r = to.rotation.transpose() * from.rotation;
    const Vec3 d = to.rotation.transpose() * (from.origin - to.origin);
    Mat6 j = Mat6::Zero();
    j.topLeftCorner<3, 3>() = r;
    j.bottomRightCorner<3, 3>() = r;
    j.bottomLeftCorner<3, 3>() = skew(d) * r;
    return j;
}

}  // namespace flexstage
