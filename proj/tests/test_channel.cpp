#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <optional>

#include "support.hpp"
#include "uvjitter/error.hpp"
#include "uvjitter/numerics.hpp"

using namespace uvjitter;
using namespace uvjitter::channel;
using testing_support::geometry;
using testing_support::kDeg;

namespace {

constexpr double kPi = std::numbers::pi;

struct Interval1D {
    double lo, hi;
};

// Brute-force chord: scan the beam axis for points inside the receiver FOV
// cone, then bisect each boundary. nullopt when nothing is inside, or when
// the inside set reaches the scan limit (unbounded chord).
std::optional<Interval1D> marched_chord(const LinkGeometry& g, double limit = 6000.0)
{
    const double ct = std::cos(g.elev_tx), cr = std::cos(g.elev_rx);
    const Vec3 t{ct * std::cos(g.azim_tx), ct * std::sin(g.azim_tx), std::sin(g.elev_tx)};
    const Vec3 rh{-cr * std::cos(g.azim_rx), cr * std::sin(g.azim_rx), std::sin(g.elev_rx)};
    const Vec3 r0{g.range_m, 0.0, 0.0};
    auto inside = [&](double s) {
        const Vec3 w = s * t - r0;
        return dot(w, rh) >= norm(w) * std::cos(g.half_fov_rx);
    };
    auto edge = [&](double out, double in) {
        for (int i = 0; i < 80; ++i) {
            const double m = 0.5 * (out + in);
            (inside(m) ? in : out) = m;
        }
        return 0.5 * (out + in);
    };

    const double step = 0.05;
    std::optional<double> first, last;
    for (double s = -limit; s <= limit; s += step) {
        if (inside(s)) {
            if (!first) first = s;
            last = s;
        }
    }
    if (!first) return std::nullopt;
    if (*first <= -limit + step || *last >= limit - step) return std::nullopt;
    return Interval1D{edge(*first - step, *first), edge(*last + step, *last)};
}

ChannelParams defaults() { return {}; }

} // namespace

TEST(Geometry, ValidateRejectsOutOfRange)
{
    auto g = testing_support::baseline();
    g.elev_tx = 0.0;
    EXPECT_THROW(g.validate(), DomainError);
    g = testing_support::baseline();
    g.range_m = -1.0;
    EXPECT_THROW(g.validate(), DomainError);
    g = testing_support::baseline();
    g.half_fov_rx = kPi / 2;
    EXPECT_THROW(g.validate(), DomainError);
}

TEST(AxisVectors, VerticalAndCoplanar)
{
    auto g = geometry(90.0 - 1e-12, 20, 0, 0);
    const auto v = axis_vectors(g);
    EXPECT_NEAR(v.tx_axis.x, 0.0, 1e-11);
    EXPECT_NEAR(v.tx_axis.y, 0.0, 1e-11);
    EXPECT_NEAR(v.tx_axis.z, 1.0, 1e-12);

    const auto c = axis_vectors(geometry(30, 40, 0, 0));
    EXPECT_EQ(c.tx_axis.y, 0.0);
    EXPECT_EQ(c.rx_axis.y, 0.0);
    EXPECT_GT(c.tx_axis.x, 0.0);
    EXPECT_LT(c.rx_axis.x, 0.0);
    EXPECT_NEAR(norm(c.tx_axis), 1.0, 1e-15);
    EXPECT_NEAR(norm(c.rx_axis), 1.0, 1e-15);
    EXPECT_EQ(c.rx_position.x, 50.0);
}

TEST(CommonVolume, NarrowFovConvergesToAxisIntersection)
{
    // Symmetric coplanar 30/30 link: axes meet above the midpoint at
    // s = (r / 2) / cos(30 deg).
    auto g = geometry(30, 30, 0, 0);
    g.half_fov_rx = 1e-5;
    const auto cv = common_volume(g);
    ASSERT_FALSE(cv.empty);
    const double s = 25.0 / std::cos(30 * kDeg);
    EXPECT_NEAR(cv.r_a, s, 1e-3);
    EXPECT_NEAR(cv.r_b, s, 1e-3);
    EXPECT_NEAR(cv.scatter_angle, 60 * kDeg, 1e-6);
}

TEST(CommonVolume, PointedAwayIsEmpty)
{
    const auto cv = common_volume(geometry(20, 20, 180, 0));
    EXPECT_TRUE(cv.empty);
    EXPECT_EQ(received_power(geometry(20, 20, 180, 0), defaults()), 0.0);
}

TEST(CommonVolume, MatchesRayMarchAtBaseline)
{
    const auto g = testing_support::baseline();
    const auto cv = common_volume(g);
    const auto m = marched_chord(g);
    ASSERT_FALSE(cv.empty);
    ASSERT_TRUE(m.has_value());
    EXPECT_NEAR(cv.r_a, m->lo, 1e-6);
    EXPECT_NEAR(cv.r_b, m->hi, 1e-6);
}

TEST(CommonVolume, MatchesRayMarchOnRandomGeometries)
{
    numerics::Rng rng(2024);
    int nonempty = 0;
    for (int trial = 0; trial < 200; ++trial) {
        LinkGeometry g;
        g.range_m = 20.0 + 180.0 * rng.uniform();
        g.elev_tx = (5.0 + 80.0 * rng.uniform()) * kDeg;
        g.elev_rx = (5.0 + 80.0 * rng.uniform()) * kDeg;
        g.azim_tx = (-60.0 + 120.0 * rng.uniform()) * kDeg;
        g.azim_rx = (-60.0 + 120.0 * rng.uniform()) * kDeg;
        g.half_beam_tx = 1.0 * kDeg;
        g.half_fov_rx = (5.0 + 40.0 * rng.uniform()) * kDeg;

        const auto cv = common_volume(g);
        const auto m = marched_chord(g);
        if (cv.empty) {
            // Either nothing inside, entirely behind the transmitter, or unbounded.
            if (m) {
                EXPECT_LE(m->hi, 1e-6) << "trial " << trial;
            }
            continue;
        }
        ASSERT_TRUE(m.has_value()) << "trial " << trial;
        EXPECT_NEAR(cv.r_a, m->lo, 1e-6 * (1.0 + std::abs(m->lo))) << "trial " << trial;
        EXPECT_NEAR(cv.r_b, m->hi, 1e-6 * (1.0 + m->hi)) << "trial " << trial;
        ++nonempty;

        const auto fwd = common_volume(g, ChordPolicy::forward_only);
        EXPECT_NEAR(fwd.r_a, std::max(0.0, m->lo), 1e-6 * (1.0 + std::abs(m->lo)));
        EXPECT_EQ(fwd.r_b, cv.r_b);
    }
    EXPECT_GT(nonempty, 50);
}

TEST(PhaseFunction, PureRayleighAndIsotropic)
{
    ChannelParams p;
    p.k_mie = 0.0;
    p.gamma = 0.0;
    EXPECT_NEAR(phase_function(0.0, p), 3.0 / (16.0 * kPi), 1e-15);
    EXPECT_NEAR(phase_function(1.0, p), 6.0 / (16.0 * kPi), 1e-15);

    ChannelParams iso;
    iso.k_rayleigh = 0.0;
    iso.g = 0.0;
    iso.f = 0.0;
    for (double mu : {-1.0, -0.3, 0.0, 0.8}) EXPECT_NEAR(phase_function(mu, iso), 1.0 / (4.0 * kPi), 1e-15);
    EXPECT_THROW(phase_function(1.5, p), InputError);
}

TEST(PhaseFunction, UnitIntegralOverSphere)
{
    for (double g : {0.0, 0.5, 0.72, 0.9}) {
        ChannelParams p;
        p.g = g;
        const auto r = numerics::integrate_adaptive(
            [&](double mu) { return 2.0 * kPi * phase_function(mu, p); }, -1.0, 1.0);
        EXPECT_NEAR(r.value, 1.0, 1e-6) << "g = " << g;
    }
}

TEST(ReceivedPower, MatchesIndependentEvaluation)
{
    struct Row {
        double range, tt, tr, pt, pr, analytic, forward;
    };
    const Row rows[] = {
        {50, 30, 30, 5, 0, 2.970006496536249e-11, 2.9700064965362513e-11},
        {50, 20, 20, 5, 0, 9.764827788205761e-11, 5.775028507765958e-11},
        {100, 40, 25, -10, 15, 6.774395319582673e-12, 6.3873431980048e-12},
        {30, 60, 45, 0, 0, 1.470207646931495e-11, 1.470207646931495e-11},
        {170, 20, 20, 5, 0, 2.4596227401760222e-11, 1.4362969754912173e-11},
    };
    for (const auto& r : rows) {
        const auto g = geometry(r.tt, r.tr, r.pt, r.pr, r.range);
        ChannelParams p;
        EXPECT_NEAR(received_power(g, p), r.analytic, 1e-9 * r.analytic);
        p.chord = ChordPolicy::forward_only;
        EXPECT_NEAR(received_power(g, p), r.forward, 1e-9 * r.forward);
    }
}

TEST(ReceivedPower, NormalizationFactor)
{
    const auto g = testing_support::baseline();
    ChannelParams cited, bare;
    bare.normalization = ScatteringNormalization::as_typeset;
    EXPECT_NEAR(received_power(g, cited) / received_power(g, bare),
                4.0 * kPi * cited.scattering(), 1e-12);
}

TEST(ReceivedPower, LinearInApertureAndEnergy)
{
    const auto g = testing_support::baseline();
    ChannelParams p;
    const double base = received_power(g, p);
    p.aperture_cm2 *= 3.0;
    EXPECT_NEAR(received_power(g, p), 3.0 * base, 1e-12 * base);
    p.pulse_energy_w *= 0.5;
    EXPECT_NEAR(received_power(g, p), 1.5 * base, 1e-12 * base);
}

TEST(ReceivedPower, EmptyVolumeIsZero)
{
    CommonVolume cv;
    EXPECT_EQ(received_power(testing_support::baseline(), ChannelParams{}, cv), 0.0);
}

TEST(ReceivedPower, AzimuthalMirrorSymmetry)
{
    // Reflecting the link through the x-z plane flips both azimuths.
    const auto a = geometry(25, 35, 7, -3);
    const auto b = geometry(25, 35, -7, 3);
    const double pa = received_power(a, ChannelParams{});
    EXPECT_GT(pa, 0.0);
    EXPECT_NEAR(received_power(b, ChannelParams{}), pa, 1e-13 * pa);
}

TEST(ReceivedPower, DecreasesWithRange)
{
    double prev = INFINITY;
    for (double r = 30; r <= 200; r += 10) {
        const double e = received_power(geometry(30, 30, 0, 0, r), ChannelParams{});
        EXPECT_LT(e, prev);
        prev = e;
    }
}
