#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "ctreg/noise.hpp"
#include "ctreg/phantom.hpp"
#include "ctreg/spectral.hpp"
#include "oracles.hpp"

using namespace ctreg;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
    Xoshiro256 rng(seed);
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    return m;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

const OperatorSVD& small_svd() {
    static const RadonMatrix op = build_operator({4, 8, 6});
    static const OperatorSVD svd = compute_svd(op);
    return svd;
}

}  // namespace

TEST(Svd, DiagonalMatrix) {
    Eigen::MatrixXd a(2, 2);
    a << 3, 0, 0, 1;
    const OperatorSVD s = compute_svd(a);
    EXPECT_NEAR(s.sigma[0], 3, 1e-14);
    EXPECT_NEAR(s.sigma[1], 1, 1e-14);
    EXPECT_NEAR(s.U.cwiseAbs()(0, 0), 1, 1e-14);
    EXPECT_NEAR(s.U.cwiseAbs()(1, 1), 1, 1e-14);
    EXPECT_NEAR(s.V.cwiseAbs()(0, 0), 1, 1e-14);
    EXPECT_NEAR(s.V.cwiseAbs()(1, 1), 1, 1e-14);
}

TEST(Svd, RandomMatrixReconstruction) {
    const Eigen::MatrixXd a = random_matrix(6, 4, 1);
    const OperatorSVD s = compute_svd(a);
    EXPECT_EQ(s.rank(), 4);
    EXPECT_LE((a - s.V * s.sigma.asDiagonal() * s.U.transpose()).norm(), 1e-10);
}

TEST(Svd, RadonMatchesJacobiOracle) {
    const RadonMatrix op = build_operator({4, 8, 6});
    const Eigen::MatrixXd a = op.dense();
    const Eigen::VectorXd ref = oracle::jacobi_singular_values(a);
    const OperatorSVD& s = small_svd();
    const double s1 = ref[0];
    int ref_rank = 0;
    while (ref_rank < ref.size() && ref[ref_rank] >= 1e-12 * s1) ++ref_rank;
    ASSERT_EQ(s.rank(), ref_rank);
    for (int n = 0; n < s.rank(); ++n) EXPECT_NEAR(s.sigma[n], ref[n], 1e-8 * s1) << "n=" << n;
}

TEST(Svd, InvariantsOnDeskOperator) {
    const RadonMatrix op = build_operator({12, 24, 17});
    const OperatorSVD s = compute_svd(op);
    const Eigen::MatrixXd a = op.dense();
    EXPECT_LE((a - s.V * s.sigma.asDiagonal() * s.U.transpose()).norm(), 1e-8 * s.sigma[0]);
    EXPECT_LE((s.U.transpose() * s.U - Eigen::MatrixXd::Identity(s.rank(), s.rank())).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((s.V.transpose() * s.V - Eigen::MatrixXd::Identity(s.rank(), s.rank())).cwiseAbs().maxCoeff(), 1e-10);
    for (int n = 1; n < s.rank(); ++n) EXPECT_LE(s.sigma[n], s.sigma[n - 1]);
    EXPECT_GT(s.sigma.minCoeff(), 0.0);
}

TEST(Svd, TruncatesNullDirections) {
    Eigen::MatrixXd a = random_matrix(8, 5, 2);
    a.col(4) = a.col(0) + a.col(1);
    const OperatorSVD s = compute_svd(a);
    EXPECT_EQ(s.rank(), 4);
    EXPECT_LE((a - s.V * s.sigma.asDiagonal() * s.U.transpose()).norm(), 1e-10 * s.sigma[0]);
}

TEST(Svd, CapacityError) {
    const RadonMatrix op = build_operator({16, 8, 8});
    SvdOptions tiny;
    tiny.memory_budget_bytes = 1024;
    EXPECT_THROW(compute_svd(op, tiny), CapacityError);
    try {
        compute_svd(op, tiny);
    } catch (const CapacityError& e) {
        EXPECT_NE(std::string(e.what()).find("reduce the image size"), std::string::npos);
    }
}

TEST(SpectralStats, ZeroNoise) {
    const OperatorSVD& s = small_svd();
    const Eigen::MatrixXd u = random_matrix(16, 5, 3);
    const SpectralStats st = compute_spectral_stats(s, u, Eigen::MatrixXd::Zero(48, 5));
    EXPECT_EQ(st.Delta.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(st.Gamma.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(st.sample_count, 5);
}

TEST(SpectralStats, FirstSingularVector) {
    const OperatorSVD& s = small_svd();
    const SpectralStats st = compute_spectral_stats(s, Eigen::MatrixXd(s.U.col(0)), Eigen::MatrixXd::Zero(48, 1));
    EXPECT_NEAR(st.Pi[0], 1.0, 1e-12);
    EXPECT_LE(st.Pi.tail(s.rank() - 1).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SpectralStats, HandComputedToyCase) {
    // Identity "operator" on R^4 with sigma = (4, 3, 2, 1): U = V = identity.
    OperatorSVD s{Eigen::MatrixXd::Identity(4, 4), vec({4, 3, 2, 1}), Eigen::MatrixXd::Identity(4, 4)};
    Eigen::MatrixXd u(4, 2), nu(4, 2);
    u << 1, 3, 2, 0, 0, -1, 1, 1;
    nu << 0.5, -0.5, 0, 1, 2, 2, -1, 0;
    const SpectralStats st = compute_spectral_stats(s, u, nu);
    EXPECT_DOUBLE_EQ(st.Pi[0], (1 + 9) / 2.0);
    EXPECT_DOUBLE_EQ(st.Pi[1], (4 + 0) / 2.0);
    EXPECT_DOUBLE_EQ(st.Pi[2], (0 + 1) / 2.0);
    EXPECT_DOUBLE_EQ(st.Pi[3], (1 + 1) / 2.0);
    EXPECT_DOUBLE_EQ(st.Delta[0], (0.25 + 0.25) / 2.0);
    EXPECT_DOUBLE_EQ(st.Delta[2], (4 + 4) / 2.0);
    EXPECT_DOUBLE_EQ(st.Gamma[0], (0.5 - 1.5) / 2.0);
    EXPECT_DOUBLE_EQ(st.Gamma[1], (0 + 0) / 2.0);
    EXPECT_DOUBLE_EQ(st.Gamma[2], (0 - 2) / 2.0);
    EXPECT_DOUBLE_EQ(st.Gamma[3], (-1 + 0) / 2.0);
}

TEST(SpectralStats, VectorOverloadAndCountMismatch) {
    const OperatorSVD& s = small_svd();
    const Geometry g{4, 8, 6};
    std::vector<Image> imgs{generate_phantom(1, {}, 4), generate_phantom(2, {}, 4)};
    std::vector<Sinogram> noise{sample_noise({0.1, 1}, g, 0), sample_noise({0.1, 1}, g, 1)};
    const SpectralStats a = compute_spectral_stats(s, imgs, noise, 0.1);
    Eigen::MatrixXd u(16, 2), n(48, 2);
    u << imgs[0].pixels, imgs[1].pixels;
    n << noise[0].values, noise[1].values;
    const SpectralStats b = compute_spectral_stats(s, u, n, 0.1);
    EXPECT_EQ(a.Pi, b.Pi);
    EXPECT_EQ(a.Gamma, b.Gamma);
    noise.pop_back();
    EXPECT_THROW(compute_spectral_stats(s, imgs, noise), DimensionError);
}

TEST(SpectralStats, CauchySchwarz) {
    const OperatorSVD& s = small_svd();
    const SpectralStats st = compute_spectral_stats(s, random_matrix(16, 30, 4), random_matrix(48, 30, 5));
    for (int n = 0; n < s.rank(); ++n) EXPECT_LE(std::abs(st.Gamma[n]), std::sqrt(st.Pi[n] * st.Delta[n]) * (1 + 1e-12));
}

TEST(Coefficients, PopulationExamples) {
    const auto c = optimal_coefficients_population(vec({2, 1, 1, 1}), vec({1, 0, 1, 0}), vec({0, 1, 1, 0}));
    EXPECT_DOUBLE_EQ(c.g[0], 0.5);  // zero noise: 1/sigma
    EXPECT_DOUBLE_EQ(c.g[1], 0.0);  // no signal
    EXPECT_DOUBLE_EQ(c.g[2], 0.5);
    EXPECT_DOUBLE_EQ(c.g[3], 0.0);  // zero denominator convention
    EXPECT_EQ(c.kind, CoefficientKind::analytic_population);
    EXPECT_THROW(optimal_coefficients_population(vec({1}), vec({-1}), vec({1})), ConfigError);
    EXPECT_THROW(optimal_coefficients_population(vec({1, 2}), vec({1}), vec({1})), DimensionError);
}

TEST(Coefficients, EmpiricalReducesToPopulationWithoutCrossTerm) {
    SpectralStats st{vec({1, 2, 0.5}), vec({0.1, 0.3, 2}), Eigen::VectorXd::Zero(3), 10, 0.1};
    const Eigen::VectorXd sigma = vec({3, 1, 0.2});
    EXPECT_EQ(optimal_coefficients_empirical(sigma, st).g, optimal_coefficients_population(sigma, st.Pi, st.Delta).g);
}

TEST(Coefficients, EmpiricalUnitInstance) {
    // mean (c - g (c + eta))^2 with Pi = Delta = Gamma = 1 means eta = c on
    // every sample, so the data are 2c and the minimizer is g = 1/2.
    SpectralStats st{vec({1}), vec({1}), vec({1}), 1, 0};
    const double g = optimal_coefficients_empirical(vec({1}), st).g[0];
    EXPECT_DOUBLE_EQ(g, 0.5);
    EXPECT_NEAR(oracle::grid_min(1, 1, 1, 1, -5, 5, 1e-4), empirical_objective(vec({1}), st, vec({g})), 1e-12);
}

TEST(Coefficients, EmpiricalMatchesSingleSampleGridSearch) {
    // One sample in R^2, operator diag(2, 0.5): minimize |u - R(f; g)|^2 per index.
    OperatorSVD s{Eigen::MatrixXd::Identity(2, 2), vec({2, 0.5}), Eigen::MatrixXd::Identity(2, 2)};
    const Eigen::MatrixXd u = (Eigen::MatrixXd(2, 1) << 0.8, -0.3).finished();
    const Eigen::MatrixXd nu = (Eigen::MatrixXd(2, 1) << 0.1, 0.4).finished();
    const Eigen::MatrixXd f = s.sigma.asDiagonal() * u + nu;
    const auto g = optimal_coefficients_empirical(s.sigma, compute_spectral_stats(s, u, nu)).g;
    for (int n = 0; n < 2; ++n) {
        double best = INFINITY, arg = 0;
        for (long i = 0; i <= 100000; ++i) {
            const double x = -5 + i * 1e-4;
            const double r = u(n, 0) - x * f(n, 0);
            if (r * r < best) best = r * r, arg = x;
        }
        EXPECT_NEAR(g[n], arg, 1e-3);
    }
}

TEST(Coefficients, EmpiricalNegativeValuesKept) {
    SpectralStats st{vec({0.01}), vec({1}), vec({-0.09}), 1, 0};
    const double g = optimal_coefficients_empirical(vec({1}), st).g[0];
    EXPECT_LT(g, 0.0);
    EXPECT_NEAR(g, (0.01 - 0.09) / (0.01 + 1 - 0.18), 1e-15);
}

TEST(Coefficients, Classical) {
    const Eigen::VectorXd sigma = vec({2, 1, 0.1});
    EXPECT_DOUBLE_EQ(tikhonov_coefficients(vec({1}), 1).g[0], 0.5);
    const auto pinv = pseudo_inverse_coefficients(sigma).g;
    EXPECT_LE((tikhonov_coefficients(sigma, 1e-14).g - pinv).cwiseAbs().maxCoeff(), 1e-14 / std::pow(0.1, 3) * 1.01);
    EXPECT_EQ(tsvd_coefficients(sigma, 0).g, pinv);
    EXPECT_EQ(tsvd_coefficients(sigma, 0.5).g, vec({0.5, 1, 0}));
    EXPECT_THROW(tikhonov_coefficients(sigma, 0), ConfigError);
    EXPECT_THROW(tsvd_coefficients(sigma, -1), ConfigError);
    EXPECT_EQ(classical_coefficients(CoefficientKind::tikhonov, sigma, 0.3).parameter, 0.3);
    EXPECT_THROW(classical_coefficients(CoefficientKind::learned, sigma), ConfigError);
}

TEST(Coefficients, TikhonovRecoveryForWhiteNoiseFlatPrior) {
    const Eigen::VectorXd sigma = vec({5, 2, 1, 0.3, 0.01});
    const double delta2 = 0.02, pi = 0.7;
    const auto g = optimal_coefficients_population(sigma, Eigen::VectorXd::Constant(5, pi),
                                                   Eigen::VectorXd::Constant(5, delta2)).g;
    const auto t = tikhonov_coefficients(sigma, delta2 / pi).g;
    for (int n = 0; n < 5; ++n) EXPECT_LE(std::abs(g[n] - t[n]), 1e-14 * std::abs(t[n]));
}

TEST(Reconstruction, PseudoInverseOnRange) {
    const Geometry geo{6, 12, 9};
    const RadonMatrix op = build_operator(geo);
    const OperatorSVD s = compute_svd(op);
    const Eigen::VectorXd u = s.U * random_matrix(s.rank(), 1, 6);
    const Eigen::MatrixXd f = op.matrix * u;
    const Eigen::MatrixXd r = reconstruct_spectral(op, s, pseudo_inverse_coefficients(s.sigma).g, f);
    EXPECT_LE((r.col(0) - u).norm(), 1e-8 * u.norm());
    EXPECT_EQ(reconstruct_spectral(op, s, Eigen::VectorXd::Zero(s.rank()), f).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Reconstruction, FactoredAndModalFormsAgree) {
    const Geometry geo{8, 12, 11};
    const RadonMatrix op = build_operator(geo);
    const OperatorSVD s = compute_svd(op);
    Xoshiro256 rng(8);
    Eigen::VectorXd g(s.rank());
    for (auto& x : g) x = rng.uniform(-1, 2);
    const Eigen::MatrixXd f = random_matrix(geo.num_rays(), 3, 9);
    const Eigen::MatrixXd a = reconstruct_spectral(op, s, g, f), b = reconstruct_modal(s, g, f);
    EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-10 * f.norm());
    const Image one = reconstruct_spectral(op, s, SpectralCoefficients{g}, Sinogram(12, 11, f.col(0)));
    EXPECT_LE((one.pixels - b.col(0)).cwiseAbs().maxCoeff(), 1e-10 * f.norm());
    EXPECT_THROW(reconstruct_spectral(op, s, Eigen::VectorXd::Zero(3), f), DimensionError);
}

TEST(Diagnostics, ExpectedErrorExamples) {
    EXPECT_EQ(expected_error(vec({1, 2}), vec({1, 3}), vec({0, 0})), 0.0);
    EXPECT_DOUBLE_EQ(expected_error(vec({1}), vec({1}), vec({1})), 0.5);
    EXPECT_EQ(expected_error(vec({1}), vec({0}), vec({0})), 0.0);
}

TEST(Diagnostics, ExpectedErrorMatchesMonteCarlo) {
    // u_n ~ N(0, Pi_n), eta_n ~ N(0, Delta_n), f_n = sigma_n u_n + eta_n.
    const Eigen::VectorXd sigma = vec({3, 1.5, 0.7, 0.2, 0.05}), Pi = vec({1, 0.6, 0.4, 0.3, 0.2}),
                          Delta = vec({0.05, 0.05, 0.1, 0.02, 0.05});
    const Eigen::VectorXd g = optimal_coefficients_population(sigma, Pi, Delta).g;
    Xoshiro256 rng(10);
    const int draws = 100000;
    double sum = 0, sq = 0;
    for (int i = 0; i < draws; ++i) {
        double e = 0;
        for (int n = 0; n < 5; ++n) {
            const double u = std::sqrt(Pi[n]) * rng.normal(), eta = std::sqrt(Delta[n]) * rng.normal();
            const double r = u - g[n] * (sigma[n] * u + eta);
            e += r * r;
        }
        sum += e, sq += e * e;
    }
    const double mean = sum / draws, se = std::sqrt((sq / draws - mean * mean) / draws);
    EXPECT_NEAR(expected_error(sigma, Pi, Delta), mean, 3 * se);
}

TEST(Diagnostics, ExpectedErrorEqualsObjectiveAtOptimum) {
    const Eigen::VectorXd sigma = vec({4, 2, 1, 0.5}), Pi = vec({2, 1, 0.1, 0.5}), Delta = vec({0.3, 0.01, 0.2, 1});
    const auto g = optimal_coefficients_population(sigma, Pi, Delta).g;
    const double e = expected_error(sigma, Pi, Delta);
    EXPECT_NEAR(spectral_objective(sigma, Pi, Delta, g), e, 1e-12 * e);
}

TEST(Diagnostics, ExpectedSmoothness) {
    const Eigen::VectorXd sigma = vec({1, 2, 1e-9}), Pi = vec({2, 3, 1});
    EXPECT_EQ(expected_smoothness(sigma, Pi, Eigen::VectorXd::Zero(3)), Pi);
    const auto pt = expected_smoothness(vec({1}), vec({2}), vec({2}));
    EXPECT_DOUBLE_EQ(pt[0], 1.0);
    EXPECT_LT(expected_smoothness(sigma, Pi, Eigen::VectorXd::Ones(3))[2], 1e-15);
}

TEST(Diagnostics, RangeConditionWeights) {
    EXPECT_EQ(range_condition_weights(vec({1, 2}), vec({1, 1}), vec({0, 0})), Eigen::VectorXd::Zero(2));
    EXPECT_DOUBLE_EQ(range_condition_weights(vec({1}), vec({1}), vec({1}))[0], 1.0);
    const auto w = range_condition_weights(vec({2, 0.5}), vec({0.5, 0.0}), vec({0.1, 0.1}));
    EXPECT_NEAR(w[0], 0.01 / (0.25 * 4), 1e-15);  // delta^4 / (Pi^2 sigma^2)
    EXPECT_TRUE(std::isinf(w[1]));
}

TEST(Diagnostics, CoefficientCsv) {
    const Eigen::VectorXd sigma = vec({2, 1});
    SpectralStats st{vec({1, 0}), vec({0.1, 0.1}), vec({0.01, 0}), 4, 0.1};
    const auto path = std::filesystem::temp_directory_path() / "ctreg_test_coeff.csv";
    write_coefficients_csv(path, sigma, st, vec({0.4, 0}), vec({0.45, 0.9}));
    std::ifstream in(path);
    std::string header, row1, row2;
    std::getline(in, header);
    std::getline(in, row1);
    std::getline(in, row2);
    EXPECT_EQ(header, "n,sigma_n,Pi_n,Delta_n,Gamma_n,g_n,g_tikhonov,weight_range_condition");
    EXPECT_EQ(row1.substr(0, 4), "1,2,");
    EXPECT_NE(row2.find(",inf"), std::string::npos);
    std::filesystem::remove(path);
}
