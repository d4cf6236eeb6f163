#include <random>

#include <catch_amalgamated.hpp>

#include "flexstage/errors.hpp"
#include "flexstage/kinetostatics.hpp"

using namespace flexstage;
using Catch::Approx;

namespace {

Mat3 random_rotation(std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
    q.normalize();
    return q.toRotationMatrix();
}

Vec3 random_vec(std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    return {u(rng), u(rng), u(rng)};
}

}  // namespace

TEST_CASE("section properties of a 0.4 x 8 mm strip") {
    CrossSection s = section_properties(0.4, 8.0);  // mm units in, mm units out
    CHECK(s.area == Approx(3.2).epsilon(1e-12));
    CHECK(s.i_z == Approx(0.0426667).epsilon(1e-6));
    CHECK(s.i_y == Approx(17.0667).epsilon(1e-5));
    CHECK(s.i_p == Approx(0.165292).epsilon(1e-5));
}

TEST_CASE("square section torsion constant") {
    CHECK(section_properties(1, 1).i_p == Approx(1.0 / 3.0 - 0.21 + 0.0175).epsilon(1e-12));
}

TEST_CASE("section rejects thickness above width and nonpositive sizes") {
    CHECK_THROWS_AS(section_properties(2, 1), DomainError);
    CHECK_THROWS_AS(section_properties(0, 1), DomainError);
    CHECK_THROWS_AS(section_properties(1, -1), DomainError);
}

TEST_CASE("section properties scale with s^2 and s^4") {
    const double s = 3.7;
    CrossSection a = section_properties(0.3e-3, 9e-3), b = section_properties(s * 0.3e-3, s * 9e-3);
    CHECK(b.area / a.area == Approx(s * s).epsilon(1e-12));
    CHECK(b.i_y / a.i_y == Approx(std::pow(s, 4)).epsilon(1e-12));
    CHECK(b.i_z / a.i_z == Approx(std::pow(s, 4)).epsilon(1e-12));
    CHECK(b.i_p / a.i_p == Approx(std::pow(s, 4)).epsilon(1e-12));
}

TEST_CASE("torsion constant stays below the thin-strip bound") {
    for (double r : {0.05, 0.2, 0.5, 0.8, 1.0}) {
        CrossSection s = section_properties(r, 1.0);
        CHECK(s.i_p > 0);
        CHECK(s.i_p <= r * r * r / 3.0);
    }
}

TEST_CASE("skew examples") {
    CHECK(skew(Vec3::Zero()).isZero(0));
    Vec3 r = skew(Vec3(1, 0, 0)) * Vec3(0, 1, 0);
    CHECK(r.isApprox(Vec3(0, 0, 1)));
    Mat3 s = skew(Vec3(1, 2, 3));
    CHECK(s.trace() == 0.0);
    CHECK((s + s.transpose()).isZero(0));
}

TEST_CASE("skew matches the cross product for random vectors") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 1000; ++i) {
        Vec3 v = random_vec(rng, 10), u = random_vec(rng, 10);
        Mat3 s = skew(v);
        REQUIRE((s * u - v.cross(u)).norm() <= 1e-12 * (1 + v.norm() * u.norm()));
        REQUIRE((s + s.transpose()).isZero(0));
    }
}

TEST_CASE("wrench transform between identical frames is identity") {
    SpatialFrame a;
    CHECK(wrench_transform(a, a).isIdentity(0));
    std::mt19937_64 rng(3);
    SpatialFrame b = SpatialFrame::at(random_vec(rng), random_rotation(rng));
    CHECK(wrench_transform(b, b).isIdentity(1e-12));
}

TEST_CASE("lever arm of an offset force") {
    const double d = 0.25, fy = 3.0;
    SpatialFrame from = SpatialFrame::at(Vec3(0, 0, d));
    SpatialFrame to;
    Wrench w;
    w.force = Vec3(0, fy, 0);
    Vec6 out = wrench_transform(from, to) * w.packed();
    CHECK(out(1) == Approx(fy));
    CHECK(out(3) == Approx(-d * fy));
    CHECK(std::abs(out(4)) < 1e-15);
    CHECK(std::abs(out(5)) < 1e-15);
}

TEST_CASE("wrench transform composition and inverse") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 50; ++i) {
        SpatialFrame a = SpatialFrame::at(random_vec(rng), random_rotation(rng));
        SpatialFrame b = SpatialFrame::at(random_vec(rng), random_rotation(rng));
        SpatialFrame c = SpatialFrame::at(random_vec(rng), random_rotation(rng));
        Mat6 ab = wrench_transform(a, b), bc = wrench_transform(b, c), ac = wrench_transform(a, c);
        REQUIRE((bc * ab - ac).norm() <= 1e-12 * ac.norm());
        REQUIRE((ab * wrench_transform(b, a) - Mat6::Identity()).norm() <= 1e-12);
    }
}

TEST_CASE("power of a rigid twist is frame independent") {
    std::mt19937_64 rng(9);
    for (int i = 0; i < 200; ++i) {
        SpatialFrame a = SpatialFrame::at(random_vec(rng), random_rotation(rng));
        SpatialFrame b = SpatialFrame::at(random_vec(rng), random_rotation(rng));
        Vec6 wa = Vec6::Random();
        Vec6 wb = wrench_transform(a, b) * wa;
        // Rigid body: angular velocity w, velocity v0 at the parent origin.
        Vec3 w = random_vec(rng), v0 = random_vec(rng);
        auto power = [&](const SpatialFrame& f, const Vec6& wr) {
            Vec3 v = f.rotation.transpose() * (v0 + w.cross(f.origin));
            Vec3 om = f.rotation.transpose() * w;
            return wr.head<3>().dot(v) + wr.tail<3>().dot(om);
        };
        const double pa = power(a, wa), pb = power(b, wb);
        REQUIRE(std::abs(pa - pb) <= 1e-10 * std::max(1.0, std::abs(pa)));
    }
}

TEST_CASE("non-orthonormal rotation is rejected") {
    SpatialFrame bad;
    bad.rotation(0, 0) = 1.1;
    CHECK_FALSE(bad.is_proper());
    CHECK_THROWS_AS(wrench_transform(bad, SpatialFrame{}), DomainError);
    SpatialFrame reflected;
    reflected.rotation(2, 2) = -1;
    CHECK_FALSE(reflected.is_proper());
}

TEST_CASE("wrench pack and unpack round trip") {
    Vec6 v;
    v << 1, 2, 3, 4, 5, 6;
    Wrench w = Wrench::unpack(v);
    CHECK(w.force == Vec3(1, 2, 3));
    CHECK(w.moment == Vec3(4, 5, 6));
    CHECK(w.packed() == v);
}

TEST_CASE("material validation") {
    CHECK_NOTHROW(Material::aluminium().validate());
    Material m;
    m.shear_factor = 0.9;
    CHECK_THROWS_AS(m.validate(), DomainError);
    m = Material{};
    m.youngs_modulus = 0;
    CHECK_THROWS_AS(m.validate(), DomainError);
    m = Material{};
    m.density = -1;
    CHECK_THROWS_AS(m.validate(), DomainError);
}
