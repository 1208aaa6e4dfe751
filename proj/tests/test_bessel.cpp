#include "doctest.h"

#include "blockrad/bessel.hpp"
#include "blockrad/errors.hpp"

#include <cmath>

using namespace blockrad;

TEST_SUITE_BEGIN("bessel");

TEST_CASE("special values")
{
    CHECK(bessel_j(0.0, 0.0) == 1.0);
    CHECK(bessel_j(1.0, 0.0) == 0.0);
    // J_{1/2}(x) = sqrt(2/(pi x)) sin x vanishes at pi
    CHECK(std::abs(bessel_j(0.5, M_PI)) < 1e-12);
    CHECK(bessel_j(0.5, 0.5 * M_PI)
          == doctest::Approx(std::sqrt(2.0 / (M_PI * 0.5 * M_PI))).epsilon(1e-12));
    // first zero of J_0 (independent reference value)
    CHECK(std::abs(bessel_j(0.0, 2.4048255576957727)) < 1e-10);
    CHECK_THROWS_AS(bessel_j(0.0, -1.0), input_error);
}

TEST_CASE("agreement with the standard library implementation")
{
    for (double nu : {0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0}) {
        for (double x = 0.05; x < 120.0; x *= 1.17) {
            const double ours = bessel_j(nu, x);
            const double ref = std::cyl_bessel_j(nu, x);
            const double scale = std::max(1e-8, std::abs(ref));
            CHECK(std::abs(ours - ref) / scale < 1e-9);
        }
    }
}

TEST_CASE("recurrence identity")
{
    // J_{nu-1}(x) + J_{nu+1}(x) = (2 nu / x) J_nu(x)
    for (double nu : {1.0, 1.5, 2.0}) {
        for (double x : {0.7, 3.3, 9.1, 31.7, 77.0}) {
            const double lhs = bessel_j(nu - 1.0, x) + bessel_j(nu + 1.0, x);
            const double rhs = 2.0 * nu / x * bessel_j(nu, x);
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
        }
    }
}

TEST_CASE("zeros")
{
    // half-integer order: zeros of sin at k pi
    for (int k = 1; k <= 40; ++k)
        CHECK(bessel_j_zero(0.5, k) == doctest::Approx(k * M_PI).epsilon(1e-12));
    // J_0 zeros (reference values)
    CHECK(bessel_j_zero(0.0, 1) == doctest::Approx(2.404825557695773).epsilon(1e-12));
    CHECK(bessel_j_zero(0.0, 2) == doctest::Approx(5.520078110286311).epsilon(1e-12));
    CHECK(bessel_j_zero(0.0, 5) == doctest::Approx(14.930917708487786).epsilon(1e-12));
    // residuals vanish and zeros interlace
    for (double nu : {0.0, 0.5, 1.0, 1.5}) {
        double prev = 0.0;
        for (int k = 1; k <= 60; ++k) {
            const double z = bessel_j_zero(nu, k);
            CHECK(z > prev);
            CHECK(std::abs(bessel_j(nu, z)) < 1e-10);
            prev = z;
        }
    }
}

TEST_SUITE_END();
