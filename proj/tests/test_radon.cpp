#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <gtest/gtest.h>

#include "ctreg/phantom.hpp"
#include "ctreg/radon.hpp"
#include "ctreg/rng.hpp"
#include "oracles.hpp"

using namespace ctreg;

namespace {

Eigen::VectorXd random_vector(Eigen::Index n, std::uint64_t seed) {
    Xoshiro256 rng(seed);
    Eigen::VectorXd v(n);
    for (auto& x : v) x = rng.normal();
    return v;
}

/// Length of {x1 cos + x2 sin = s} inside [-1/2, 1/2]^2 by clipping, in unit lengths.
double square_chord(double theta, double s) {
    const double n1 = std::cos(theta), n2 = std::sin(theta);
    double lo = -10, hi = 10;
    const double p[2] = {s * n1, s * n2}, d[2] = {-n2, n1};
    for (int i = 0; i < 2; ++i) {
        if (std::abs(d[i]) < 1e-15) {
            if (std::abs(p[i]) >= 0.5) return 0;
            continue;
        }
        double a = (-0.5 - p[i]) / d[i], b = (0.5 - p[i]) / d[i];
        if (a > b) std::swap(a, b);
        lo = std::max(lo, a), hi = std::min(hi, b);
    }
    return std::max(0.0, hi - lo);
}

}  // namespace

TEST(Geometry, AnglesAndPositions) {
    const Geometry g{8, 4, 6};
    EXPECT_DOUBLE_EQ(g.angle(0), 0.0);
    EXPECT_DOUBLE_EQ(g.angle(2), std::numbers::pi / 2);
    EXPECT_DOUBLE_EQ(g.position(0), -std::numbers::sqrt2 / 2 + 0.5 * std::numbers::sqrt2 / 6);
    EXPECT_NEAR(g.position(5), std::numbers::sqrt2 / 2 - 0.5 * std::numbers::sqrt2 / 6, 1e-15);
    EXPECT_DOUBLE_EQ(g.pixel_width(), 0.125);
    EXPECT_THROW((Geometry{0, 1, 1}.validate()), ConfigError);
}

TEST(Radon, SinglePixelSingleRay) {
    const RadonMatrix op = build_operator({1, 1, 1});
    ASSERT_EQ(op.matrix.nonZeros(), 1);
    EXPECT_NEAR(op.dense()(0, 0), 1.0, 1e-15);
}

TEST(Radon, HorizontalRayThroughLowerRow) {
    // I = 2, theta = 0, s = -1/4 runs through the centers of the bottom row.
    const auto entries = trace_ray(2, 0.0, -0.25);
    ASSERT_EQ(entries.size(), 2u);
    EXPECT_EQ(entries[0].pixel, 0);
    EXPECT_EQ(entries[1].pixel, 1);
    EXPECT_NEAR(entries[0].length, 1.0, 1e-14);
    EXPECT_NEAR(entries[1].length, 1.0, 1e-14);
    // cross-check against quadrature of each pixel indicator
    for (int p = 0; p < 4; ++p) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(4);
        e[p] = 1;
        const double expect = oracle::line_integral(e, 2, 0.0, -0.25, 100000);
        double got = 0;
        for (const auto& x : entries)
            if (x.pixel == p) got = x.length;
        EXPECT_NEAR(got, expect, 1e-3);
    }
}

TEST(Radon, RowSumsAreChordLengths) {
    for (int I : {1, 3, 8, 17}) {
        const Geometry g{I, 13, 11};
        const RadonMatrix op = build_operator(g);
        for (int k = 0; k < g.num_angles; ++k)
            for (int l = 0; l < g.num_positions; ++l) {
                const double sum = op.matrix.row(k * g.num_positions + l).sum();
                EXPECT_NEAR(sum, I * square_chord(g.angle(k), g.position(l)), 1e-12 * I);
            }
    }
}

TEST(Radon, EntriesMatchQuadratureOracle) {
    const int I = 6;
    Xoshiro256 rng(4);
    for (int trial = 0; trial < 40; ++trial) {
        const double theta = rng.uniform(0, std::numbers::pi), s = rng.uniform(-0.7, 0.7);
        const auto entries = trace_ray(I, theta, s);
        for (const auto& e : entries) {
            Eigen::VectorXd ind = Eigen::VectorXd::Zero(I * I);
            ind[e.pixel] = 1;
            const int n = 200000;
            EXPECT_NEAR(e.length, oracle::line_integral(ind, I, theta, s, n), 3 * 1.5 / n * I);
        }
    }
}

TEST(Radon, ConstantImageCentralRays) {
    const Geometry g{32, 1, 47};
    const RadonMatrix op = build_operator(g);
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(g.num_pixels());
    const Sinogram f = forward(op, Image(32, one));
    for (int l = 0; l < g.num_positions; ++l) {
        const double expect = oracle::line_integral(one, 32, 0.0, g.position(l), 10000);
        if (expect > 0) {
            EXPECT_NEAR(f.at(0, l), expect, 1e-3 * expect);
        } else {
            EXPECT_EQ(f.at(0, l), 0.0);
        }
    }
    // central rays cross the full square: one unit chord = I pixel widths
    EXPECT_NEAR(f.at(0, 23), 32.0, 1e-12);
}

TEST(Radon, ForwardMatchesQuadratureOnPhantoms) {
    const Geometry g{16, 12, 23};
    const RadonMatrix op = build_operator(g);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const Image u = generate_phantom(seed, {}, 16);
        const Sinogram f = forward(op, u);
        const int n = 40000;
        for (int k = 0; k < g.num_angles; ++k)
            for (int l = 0; l < g.num_positions; ++l) {
                const double q = oracle::line_integral(u.pixels, 16, g.angle(k), g.position(l), n);
                // each of at most 2I boundary crossings can be off by half a step
                EXPECT_NEAR(f.at(k, l), q, 2 * 16 * 1.5 / n * 16 + 1e-12);
            }
    }
}

TEST(Radon, CenteredDiskRotationalConsistency) {
    // The rasterized disk is only approximately round, so its projections
    // differ by a few percent between angles.
    const int I = 64;
    const Geometry g{I, 64, 129};
    const RadonMatrix op = build_operator(g);
    const Image disk = rasterize({EllipseSpec{0.5, 0.5, 0.3, 0.3, 0.0, 1.0}}, I);
    const Sinogram f = forward(op, disk);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(g.num_positions);
    for (int k = 0; k < g.num_angles; ++k) mean += f.values.segment(k * g.num_positions, g.num_positions);
    mean /= g.num_angles;
    double worst = 0;
    for (int k = 0; k < g.num_angles; ++k)
        worst = std::max(worst, (f.values.segment(k * g.num_positions, g.num_positions) - mean).norm() / mean.norm());
    EXPECT_LE(worst, 0.05);
}

TEST(Radon, AdjointIdentityRandomPairs) {
    const Geometry g{16, 20, 23};
    const RadonMatrix op = build_operator(g);
    const double norm_a = op.dense().norm();  // Frobenius bound on the operator norm
    for (int i = 0; i < 100; ++i) {
        const Eigen::VectorXd u = random_vector(g.num_pixels(), 2 * i), v = random_vector(g.num_rays(), 2 * i + 1);
        const double lhs = forward(op, Image(16, u)).values.dot(v);
        const double rhs = u.dot(adjoint(op, Sinogram(20, 23, v)).pixels);
        EXPECT_LE(std::abs(lhs - rhs), 1e-10 * u.norm() * v.norm() * norm_a);
    }
}

TEST(Radon, ZeroInZeroOut) {
    const Geometry g{8, 5, 7};
    const RadonMatrix op = build_operator(g);
    EXPECT_EQ(forward(op, Image(8)).values.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(adjoint(op, Sinogram(g)).pixels.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Radon, Linearity) {
    const Geometry g{10, 9, 15};
    const RadonMatrix op = build_operator(g);
    const Eigen::VectorXd a = random_vector(100, 1), b = random_vector(100, 2);
    const auto fa = forward(op, Image(10, a)).values, fb = forward(op, Image(10, b)).values;
    const auto fab = forward(op, Image(10, 2.5 * a - 0.75 * b)).values;
    EXPECT_LE((fab - (2.5 * fa - 0.75 * fb)).norm(), 1e-12 * fab.norm());
}

TEST(Radon, SingleRayBackprojectionSupport) {
    const Geometry g{12, 7, 9};
    const RadonMatrix op = build_operator(g);
    const Eigen::MatrixXd dense = op.dense();
    for (int row : {0, 17, 31, 40, 62}) {
        Sinogram e(g);
        e.values[row] = 1.0;
        const Image back = adjoint(op, e);
        EXPECT_EQ(back.pixels, dense.row(row).transpose());
        const auto entries = trace_ray(12, g.angle(row / 9), g.position(row % 9));
        int support = 0;
        for (Eigen::Index p = 0; p < back.pixels.size(); ++p) support += back.pixels[p] != 0.0;
        EXPECT_EQ(support, static_cast<int>(entries.size()));
        for (const auto& x : entries) EXPECT_GT(back.pixels[x.pixel], 0.0);
    }
}

TEST(Radon, EntryBoundsAndSparsity) {
    for (const Geometry g : {Geometry{32, 64, 47}, Geometry{7, 33, 10}}) {
        const RadonMatrix op = build_operator(g);
        for (int r = 0; r < op.matrix.outerSize(); ++r) {
            int nnz = 0;
            for (SparseRowMatrix::InnerIterator it(op.matrix, r); it; ++it, ++nnz) {
                EXPECT_GT(it.value(), 0.0);
                EXPECT_LE(it.value(), std::numbers::sqrt2 + 1e-12);
            }
            EXPECT_LE(nnz, 2 * g.image_size);
        }
    }
}

TEST(Radon, DimensionMismatch) {
    const RadonMatrix op = build_operator({8, 4, 6});
    EXPECT_THROW(forward(op, Image(9)), DimensionError);
    EXPECT_THROW(adjoint(op, Sinogram(4, 7)), DimensionError);
}

TEST(Scaling, RemarkFactors) {
    const ScalingFactors one = continuous_scaling({1, 1, 1});
    EXPECT_NEAR(one.adjoint_factor, 4.44288, 1e-5);
    for (const Geometry g : {Geometry{32, 64, 47}, Geometry{64, 256, 93}, Geometry{5, 3, 2}}) {
        const ScalingFactors s = continuous_scaling(g);
        const double w = std::numbers::sqrt2 * std::numbers::pi / (g.num_angles * g.num_positions);
        EXPECT_DOUBLE_EQ(s.adjoint_factor, w);
        EXPECT_NEAR(s.sigma_factor * s.sigma_factor, s.adjoint_factor, 1e-15 * w);
        EXPECT_NEAR(s.Pi_factor * g.image_size * g.image_size, 1.0, 1e-15);
        EXPECT_DOUBLE_EQ(s.u_factor, g.image_size);
        EXPECT_NEAR(s.v_factor, std::sqrt(1 / w), 1e-12 * s.v_factor);
        EXPECT_DOUBLE_EQ(s.Delta_factor, w);
        EXPECT_NEAR(s.Gamma_factor, std::sqrt(w) / g.image_size, 1e-15);
    }
}

TEST(Scaling, AdjointFactorApproximatesContinuousBackprojection) {
    // Discrete data are line integrals in pixel widths, i.e. I times the
    // unit-length integrals. A discrete sinogram of ones is the continuous
    // sinogram 1/I, whose back-projection is pi/I everywhere. Single pixels
    // alias against the ray grid, so compare the mean over the inscribed disk.
    const int I = 32;
    const Geometry g{I, 128, 95};
    const RadonMatrix op = build_operator(g);
    Sinogram ones(g);
    ones.values.setOnes();
    const Image b = adjoint(op, ones);
    double sum = 0;
    int count = 0;
    for (int i = 0; i < I; ++i)
        for (int j = 0; j < I; ++j)
            if (std::hypot(i + 0.5 - I / 2, j + 0.5 - I / 2) < 0.35 * I) sum += b.at(i, j), ++count;
    const double scaled = continuous_scaling(g).adjoint_factor * sum / count * I;
    EXPECT_NEAR(scaled, std::numbers::pi, 0.005 * std::numbers::pi);
}

TEST(Radon, OperatorDump) {
    const Geometry g{4, 3, 5};
    const RadonMatrix op = build_operator(g);
    const auto dir = std::filesystem::temp_directory_path() / "ctreg_test_dump";
    std::filesystem::remove_all(dir);
    dump_operator(op, dir);
    nlohmann::json header;
    std::ifstream(dir / "operator.json") >> header;
    EXPECT_EQ(header["rows"], 15);
    EXPECT_EQ(header["cols"], 16);
    EXPECT_EQ(header["nnz"], op.matrix.nonZeros());
    std::ifstream in(dir / "operator.triplets");
    Eigen::MatrixXd rebuilt = Eigen::MatrixXd::Zero(15, 16);
    int r, c;
    double v;
    long count = 0;
    while (in >> r >> c >> v) rebuilt(r, c) = v, ++count;
    EXPECT_EQ(count, op.matrix.nonZeros());
    EXPECT_EQ(rebuilt, op.dense());
    std::filesystem::remove_all(dir);
}
