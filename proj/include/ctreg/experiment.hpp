#pragma once

// Configuration-driven experiments: the four-approach comparison, the
// noise-level sweep, the oversmoothing report and resolution transfer.
//
// Every output file except timing.json is a pure function of the config.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "error.hpp"
#include "fourier.hpp"
#include "geometry.hpp"
#include "io.hpp"
#include "metrics.hpp"
#include "noise.hpp"
#include "phantom.hpp"
#include "radon.hpp"
#include "spectral.hpp"
#include "trainer.hpp"

namespace ctreg {

enum class Approach { svd_analytic, svd_learned, fft_analytic, fft_learned };

inline const char* to_string(Approach a) {
    switch (a) {
        case Approach::svd_analytic: return "svd_analytic";
        case Approach::svd_learned: return "svd_learned";
        case Approach::fft_analytic: return "fft_analytic";
        case Approach::fft_learned: return "fft_learned";
    }
    return "?";
}

inline Approach approach_from_string(const std::string& s) {
    for (Approach a : {Approach::svd_analytic, Approach::svd_learned, Approach::fft_analytic, Approach::fft_learned})
        if (s == to_string(a)) return a;
    throw ConfigError("unknown approach '" + s + "'");
}

inline bool is_svd(Approach a) { return a == Approach::svd_analytic || a == Approach::svd_learned; }

struct TransferSettings {
    Geometry source{16, 32, 24};
    Geometry target{32, 64, 48};
    double variance = 0.005;
};

struct ExperimentConfig {
    Geometry geometry{32, 64, 47};
    DatasetManifest dataset;
    std::string dataset_dir;  ///< load instead of generating when set
    std::vector<double> noise_variances{0.0, 0.005, 0.01, 0.015};
    std::vector<Approach> approaches{Approach::svd_analytic, Approach::svd_learned, Approach::fft_analytic,
                                     Approach::fft_learned};
    TrainConfig svd_train = default_svd_train();
    TrainConfig fft_train = default_fft_train();
    bool fft_angle_constant = true;
    std::uint64_t seed = 0;
    SvdOptions svd;
    std::vector<double> sweep_variances{1e-2, 1e-3, 1e-4, 1e-5};
    double oversmoothing_variance = 0.005;
    double tail_fraction = 1.0 / 3.0;
    TransferSettings transfer;

    static TrainConfig default_svd_train() {
        TrainConfig t;
        t.batch_size = 32;
        t.epochs = 200;
        t.adam.learning_rate = 2e-2;
        t.lr_decay = 1e-3;
        return t;
    }
    static TrainConfig default_fft_train() {
        TrainConfig t;
        t.batch_size = 32;
        t.epochs = 60;
        t.adam.learning_rate = 0.2;
        t.lr_decay = 1e-3;
        return t;
    }

    /// Sets the master seed and every seed derived from it.
    void apply_seed(std::uint64_t s) {
        seed = s;
        dataset.seed = s;
        svd_train.seed = s;
        fft_train.seed = s;
    }

    void validate() const {
        geometry.validate();
        if (approaches.empty()) throw ConfigError("at least one approach is required");
        if (noise_variances.empty()) throw ConfigError("at least one noise variance is required");
        for (double v : noise_variances)
            if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("noise variances must be finite and >= 0");
        if (dataset.image_size != geometry.image_size)
            throw ConfigError("dataset image_size must equal geometry image_size");
        dataset.validate();
        svd_train.validate();
        fft_train.validate();
        if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) throw ConfigError("tail_fraction must be in (0, 1]");
        if (!(oversmoothing_variance > 0.0)) throw ConfigError("oversmoothing_variance must be > 0");
    }
};

namespace detail {

inline Geometry geometry_from_json(const nlohmann::json& j) {
    Geometry g{field<int>(j, "image_size"), field<int>(j, "num_angles"), field<int>(j, "num_positions")};
    g.validate();
    return g;
}

inline nlohmann::ordered_json to_json(const Geometry& g) {
    return {{"image_size", g.image_size}, {"num_angles", g.num_angles}, {"num_positions", g.num_positions}};
}

inline void train_config_from_json(const nlohmann::json& j, TrainConfig& t) {
    static const std::set<std::string> known{"batch_size", "epochs", "learning_rate", "beta1", "beta2",
                                             "epsilon", "lr_decay", "seed", "early_stop_rel", "divergence_factor"};
    for (const auto& [k, v] : j.items())
        if (!known.count(k)) throw ConfigError("unknown training key '" + k + "'");
    optional_field(j, "batch_size", t.batch_size);
    optional_field(j, "epochs", t.epochs);
    optional_field(j, "learning_rate", t.adam.learning_rate);
    optional_field(j, "beta1", t.adam.beta1);
    optional_field(j, "beta2", t.adam.beta2);
    optional_field(j, "epsilon", t.adam.epsilon);
    optional_field(j, "lr_decay", t.lr_decay);
    optional_field(j, "seed", t.seed);
    optional_field(j, "early_stop_rel", t.early_stop_rel);
    optional_field(j, "divergence_factor", t.divergence_factor);
}

inline nlohmann::ordered_json to_json(const TrainConfig& t) {
    return {{"batch_size", t.batch_size},   {"epochs", t.epochs},         {"learning_rate", t.adam.learning_rate},
            {"beta1", t.adam.beta1},        {"beta2", t.adam.beta2},      {"epsilon", t.adam.epsilon},
            {"lr_decay", t.lr_decay},       {"seed", t.seed},             {"early_stop_rel", t.early_stop_rel},
            {"divergence_factor", t.divergence_factor}};
}

/// JSON has no infinities; non-finite values are written as strings.
inline nlohmann::ordered_json number(double x) {
    if (std::isfinite(x)) return x;
    return format_number(x);
}

inline void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
    std::ofstream out(path);
    if (!out) throw FormatError(path.filename().string(), "cannot open for writing");
    out << j.dump(2) << '\n';
}

inline std::string variance_tag(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace detail

/// Parses a config document. Missing keys keep their defaults; unknown
/// top-level keys are rejected. `dataset.seed` and the training seeds
/// default to `seed`.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    using detail::optional_field;
    static const std::set<std::string> known{
        "geometry", "dataset", "dataset_dir", "noise_variances", "approaches", "svd_train", "fft_train",
        "fft_angle_constant", "seed", "svd_memory_budget_mib", "svd_truncation_tol", "sweep_variances",
        "oversmoothing_variance", "tail_fraction", "transfer"};
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [k, v] : j.items())
        if (!known.count(k)) throw ConfigError("unknown config key '" + k + "'");

    ExperimentConfig c;
    optional_field(j, "seed", c.seed);
    c.apply_seed(c.seed);
    if (j.contains("geometry")) c.geometry = detail::geometry_from_json(j.at("geometry"));
    c.dataset.image_size = c.geometry.image_size;
    if (j.contains("dataset")) {
        const auto& d = j.at("dataset");
        optional_field(d, "seed", c.dataset.seed);
        optional_field(d, "count", c.dataset.count);
        if (d.contains("split")) {
            const auto& s = d.at("split");
            c.dataset.split = {detail::field<double>(s, "train"), detail::field<double>(s, "validation"),
                               detail::field<double>(s, "test")};
        }
        if (d.contains("generator_params")) c.dataset.generator = generator_params_from_json(d.at("generator_params"));
    }
    optional_field(j, "dataset_dir", c.dataset_dir);
    optional_field(j, "noise_variances", c.noise_variances);
    if (j.contains("approaches")) {
        c.approaches.clear();
        for (const auto& s : detail::field<std::vector<std::string>>(j, "approaches"))
            c.approaches.push_back(approach_from_string(s));
    }
    if (j.contains("svd_train")) detail::train_config_from_json(j.at("svd_train"), c.svd_train);
    if (j.contains("fft_train")) detail::train_config_from_json(j.at("fft_train"), c.fft_train);
    optional_field(j, "fft_angle_constant", c.fft_angle_constant);
    if (j.contains("svd_memory_budget_mib"))
        c.svd.memory_budget_bytes = detail::field<std::size_t>(j, "svd_memory_budget_mib") << 20;
    optional_field(j, "svd_truncation_tol", c.svd.truncation_tol);
    optional_field(j, "sweep_variances", c.sweep_variances);
    optional_field(j, "oversmoothing_variance", c.oversmoothing_variance);
    optional_field(j, "tail_fraction", c.tail_fraction);
    if (j.contains("transfer")) {
        const auto& t = j.at("transfer");
        if (t.contains("source")) c.transfer.source = detail::geometry_from_json(t.at("source"));
        if (t.contains("target")) c.transfer.target = detail::geometry_from_json(t.at("target"));
        optional_field(t, "variance", c.transfer.variance);
    }
    c.validate();
    return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return config_from_json(j);
}

inline nlohmann::ordered_json to_json(const ExperimentConfig& c) {
    nlohmann::ordered_json j;
    j["geometry"] = detail::to_json(c.geometry);
    j["dataset"] = to_json(c.dataset);
    if (!c.dataset_dir.empty()) j["dataset_dir"] = c.dataset_dir;
    j["noise_variances"] = c.noise_variances;
    std::vector<std::string> names;
    for (Approach a : c.approaches) names.emplace_back(to_string(a));
    j["approaches"] = names;
    j["svd_train"] = detail::to_json(c.svd_train);
    j["fft_train"] = detail::to_json(c.fft_train);
    j["fft_angle_constant"] = c.fft_angle_constant;
    j["seed"] = c.seed;
    j["svd_memory_budget_mib"] = c.svd.memory_budget_bytes >> 20;
    j["svd_truncation_tol"] = c.svd.truncation_tol;
    j["sweep_variances"] = c.sweep_variances;
    j["oversmoothing_variance"] = c.oversmoothing_variance;
    j["tail_fraction"] = c.tail_fraction;
    j["transfer"] = {{"source", detail::to_json(c.transfer.source)},
                     {"target", detail::to_json(c.transfer.target)},
                     {"variance", c.transfer.variance}};
    return j;
}

// ---------------------------------------------------------------------------
// Shared data

/// Dataset, operator, clean sinograms and standard-normal noise for every
/// image. Noise at variance s^2 is sqrt(s^2) * z, identical to sample_noise.
struct ExperimentData {
    Geometry geometry;
    RadonMatrix op;
    Dataset dataset;
    Eigen::MatrixXd clean;  ///< K L x count
    Eigen::MatrixXd z;      ///< K L x count
    std::uint64_t noise_seed = 0;
    std::optional<OperatorSVD> svd;

    struct Split {
        Eigen::MatrixXd images, clean, noise;
        Eigen::MatrixXd data() const { return clean + noise; }
    };

    Split split(int first, int count, double variance) const {
        const double s = std::sqrt(variance);
        Split out{dataset.images.middleCols(first, count), clean.middleCols(first, count),
                  Eigen::MatrixXd::Zero(clean.rows(), count)};
        if (variance > 0.0) out.noise = s * z.middleCols(first, count);
        return out;
    }
    Split train(double v) const { return split(0, dataset.sizes.train, v); }
    Split validation(double v) const { return split(dataset.sizes.train, dataset.sizes.validation, v); }
    Split test(double v) const {
        return split(dataset.sizes.train + dataset.sizes.validation, dataset.sizes.test, v);
    }
};

inline ExperimentData prepare_data(const ExperimentConfig& cfg, bool need_svd) {
    ExperimentData d;
    d.geometry = cfg.geometry;
    d.op = build_operator(cfg.geometry);
    if (!cfg.dataset_dir.empty()) {
        d.dataset = load_dataset(cfg.dataset_dir);
        if (d.dataset.manifest.image_size != cfg.geometry.image_size)
            throw ConfigError("dataset image_size does not match geometry");
    } else {
        d.dataset = generate_dataset(cfg.dataset);
    }
    if (d.dataset.sizes.train < 1 || d.dataset.sizes.test < 1)
        throw ConfigError("experiments need non-empty train and test splits");
    d.clean = d.op.matrix * d.dataset.images;
    d.noise_seed = cfg.seed;
    d.z = sample_noise_block(NoiseSpec{1.0, cfg.seed}, cfg.geometry, 0, d.dataset.size());
    if (need_svd) d.svd = compute_svd(d.op, cfg.svd);
    return d;
}

struct ImageScores {
    Eigen::VectorXd mse, ssim;
};

inline ImageScores score_images(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& recon, int image_size) {
    detail::require_dims(truth.rows() == recon.rows() && truth.cols() == recon.cols(), "score_images: shape mismatch");
    ImageScores s{Eigen::VectorXd(truth.cols()), Eigen::VectorXd(truth.cols())};
    for (Eigen::Index i = 0; i < truth.cols(); ++i) {
        const Image a(image_size, truth.col(i)), b(image_size, recon.col(i));
        s.mse[i] = mse(a, b);
        s.ssim[i] = image_size >= SsimParams{}.window ? ssim(a, b) : std::numeric_limits<double>::quiet_NaN();
    }
    return s;
}

inline double standard_error(const Eigen::VectorXd& x) {
    if (x.size() < 2) return 0.0;
    const double m = x.mean();
    return std::sqrt((x.array() - m).square().sum() / static_cast<double>(x.size() - 1) / static_cast<double>(x.size()));
}

// ---------------------------------------------------------------------------
// Comparison

struct ApproachResult {
    Approach approach;
    double noise_variance = 0.0;
    double test_mse = 0.0;
    double test_mse_se = 0.0;
    double test_psnr = 0.0;  ///< PSNR of the mean test MSE
    double test_ssim = 0.0;
    double train_mse = 0.0;
    /// Training MSE of the exact empirical minimizer of the family (nan when
    /// not available, e.g. per-angle filters).
    double family_optimum_train_mse = std::numeric_limits<double>::quiet_NaN();
    Eigen::VectorXd per_image_test_mse;
    LossTrace trace;                 ///< learned approaches only; per-sample squared L2
    double analytic_train_loss = 0;  ///< family optimum as a per-sample loss
};

struct ResultsTable {
    nlohmann::ordered_json metadata;
    std::vector<ApproachResult> rows;
    double wall_seconds = 0.0;

    const ApproachResult& find(Approach a, double variance) const {
        for (const auto& r : rows)
            if (r.approach == a && r.noise_variance == variance) return r;
        throw ConfigError(std::string("no result for ") + to_string(a) + " at s2=" + format_number(variance));
    }
};

namespace detail {

/// Tikhonov alpha minimizing the empirical objective on a log grid.
inline double best_tikhonov_alpha(const Eigen::VectorXd& sigma, const SpectralStats& stats) {
    double best_alpha = 1e-12, best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 320; ++i) {
        const double alpha = std::pow(10.0, -12.0 + i * 0.05);
        const double v = empirical_objective(sigma, stats, tikhonov_coefficients(sigma, alpha).g);
        if (v < best) best = v, best_alpha = alpha;
    }
    return best_alpha;
}

inline void write_trace_csv(const std::filesystem::path& path, const LossTrace& t) {
    CsvWriter csv(path, {"epoch", "train_loss", "val_loss"});
    for (std::size_t e = 0; e < t.train_loss.size(); ++e)
        csv.row(static_cast<long>(e), t.train_loss[e],
                e < t.val_loss.size() ? t.val_loss[e] : std::numeric_limits<double>::quiet_NaN());
}

}  // namespace detail

/// Runs every requested approach at every noise level. When `out` is
/// non-empty, results.json, results.csv, coefficient/filter CSVs and loss
/// traces are written there (plus timing.json, which is not deterministic).
inline ResultsTable run_comparison(const ExperimentConfig& cfg, const std::filesystem::path& out = {}) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    const bool want_svd = std::any_of(cfg.approaches.begin(), cfg.approaches.end(), is_svd);
    auto wants = [&](Approach a) { return std::find(cfg.approaches.begin(), cfg.approaches.end(), a) != cfg.approaches.end(); };
    const ExperimentData data = prepare_data(cfg, want_svd);
    const Geometry& g = cfg.geometry;
    const double npix = g.num_pixels();
    const Dft dft(g.num_positions);
    if (!out.empty()) std::filesystem::create_directories(out);

    ResultsTable table;
    auto& meta = table.metadata;
    meta["experiment"] = "comparison";
    meta["config"] = to_json(cfg);
    meta["split_sizes"] = {{"train", data.dataset.sizes.train},
                           {"validation", data.dataset.sizes.validation},
                           {"test", data.dataset.sizes.test}};
    meta["noise_seed"] = data.noise_seed;
    meta["metric_notes"] = "mse per pixel averaged over the test split; psnr = 10 log10(1 / mean mse); "
                           "ssim averaged per image; losses are per-sample squared L2 errors";
    if (data.svd) {
        meta["svd_rank"] = data.svd->rank();
        meta["sigma_max"] = data.svd->sigma[0];
        meta["sigma_min"] = data.svd->sigma[data.svd->rank() - 1];
    }
    nlohmann::ordered_json levels = nlohmann::ordered_json::array();

    // Pseudo-ramp: angle-constant filter fit on clean training data, frozen
    // across noise levels.
    std::optional<FourierFilter> pseudo_ramp;
    if (wants(Approach::fft_analytic)) {
        const auto tr = data.train(0.0);
        const FourierGramProblem p(data.op, tr.images, tr.data());
        pseudo_ramp = FourierFilter::from_row(g, p.minimizer(), FilterKind::pseudo_ramp);
        if (!out.empty()) write_filter_csv(out / "filter_pseudo_ramp.csv", *pseudo_ramp);
    }

    for (std::size_t vi = 0; vi < cfg.noise_variances.size(); ++vi) {
        const double v = cfg.noise_variances[vi];
        const std::string tag = "s2_" + detail::variance_tag(v);
        const auto tr = data.train(v), va = data.validation(v), te = data.test(v);
        const Eigen::MatrixXd ftr = tr.data(), fva = va.data(), fte = te.data();
        nlohmann::ordered_json level;
        level["noise_variance"] = v;

        auto finish = [&](ApproachResult r, const Eigen::MatrixXd& recon_test, const Eigen::MatrixXd& recon_train) {
            const ImageScores s = score_images(te.images, recon_test, g.image_size);
            r.noise_variance = v;
            r.per_image_test_mse = s.mse;
            r.test_mse = s.mse.mean();
            r.test_mse_se = standard_error(s.mse);
            r.test_psnr = psnr_from_mse(r.test_mse);
            r.test_ssim = s.ssim.mean();
            r.train_mse = (tr.images - recon_train).squaredNorm() / (npix * static_cast<double>(tr.images.cols()));
            if (!out.empty() && !r.trace.train_loss.empty())
                detail::write_trace_csv(out / ("loss_" + std::string(to_string(r.approach)) + "_" + tag + ".csv"),
                                        r.trace);
            table.rows.push_back(std::move(r));
        };

        if (want_svd) {
            const OperatorSVD& svd = *data.svd;
            const SpectralStats stats = compute_spectral_stats(svd, tr.images, tr.noise, v);
            const SpectralCoefficients analytic = optimal_coefficients_empirical(svd.sigma, stats);
            const SpectralProblem train_problem(svd, tr.images, ftr);
            const double optimum_loss = train_problem.loss(analytic.g);
            const double alpha = detail::best_tikhonov_alpha(svd.sigma, stats);
            const Eigen::VectorXd g_tik = tikhonov_coefficients(svd.sigma, alpha).g;
            level["tikhonov_alpha"] = alpha;
            level["svd_analytic_train_loss"] = optimum_loss;
            level["noise_level_delta2"] = noise_level(stats);

            if (wants(Approach::svd_analytic)) {
                ApproachResult r{Approach::svd_analytic};
                r.family_optimum_train_mse = optimum_loss / npix;
                r.analytic_train_loss = optimum_loss;
                if (!out.empty())
                    write_coefficients_csv(out / ("coefficients_svd_analytic_" + tag + ".csv"), svd.sigma, stats,
                                           analytic.g, g_tik);
                finish(std::move(r), reconstruct_spectral(data.op, svd, analytic.g, fte),
                       reconstruct_spectral(data.op, svd, analytic.g, ftr));
            }
            if (wants(Approach::svd_learned)) {
                const SpectralProblem val_problem(svd, va.images, fva);
                const auto learned = train_spectral(train_problem, cfg.svd_train,
                                                    va.images.cols() > 0 ? &val_problem : nullptr, v);
                ApproachResult r{Approach::svd_learned};
                r.family_optimum_train_mse = optimum_loss / npix;
                r.analytic_train_loss = optimum_loss;
                r.trace = learned.trace;
                level["svd_learned_final_train_loss"] = learned.trace.train_loss.back();
                if (!out.empty())
                    write_coefficients_csv(out / ("coefficients_svd_learned_" + tag + ".csv"), svd.sigma, stats,
                                           learned.coefficients.g, g_tik);
                finish(std::move(r), reconstruct_spectral(data.op, svd, learned.coefficients.g, fte),
                       reconstruct_spectral(data.op, svd, learned.coefficients.g, ftr));
            }
        }

        if (wants(Approach::fft_learned) || wants(Approach::fft_analytic)) {
            std::optional<FourierGramProblem> gram;
            double optimum_loss = std::numeric_limits<double>::quiet_NaN();
            if (cfg.fft_angle_constant) {
                gram.emplace(data.op, tr.images, ftr);
                optimum_loss = gram->loss(gram->minimizer());
                level["fft_gram_optimum_train_loss"] = optimum_loss;
            }
            if (wants(Approach::fft_analytic)) {
                const FourierStats fs = compute_fourier_stats(g, tr.clean, tr.noise);
                FourierFilter gain = analytic_filter_empirical(g, fs);
                if (cfg.fft_angle_constant) gain = angle_average(gain);
                FourierFilter filter = compose(gain, *pseudo_ramp);
                filter.kind = FilterKind::analytic_empirical;
                if (!out.empty()) write_filter_csv(out / ("filter_fft_analytic_" + tag + ".csv"), filter);
                ApproachResult r{Approach::fft_analytic};
                r.family_optimum_train_mse = optimum_loss / npix;
                r.analytic_train_loss = optimum_loss;
                finish(std::move(r), fbp_reconstruct(data.op, filter, fte, dft),
                       fbp_reconstruct(data.op, filter, ftr, dft));
            }
            if (wants(Approach::fft_learned)) {
                FourierTraining learned;
                if (gram) {
                    std::optional<FourierGramProblem> val;
                    if (va.images.cols() > 0) val.emplace(data.op, va.images, fva);
                    auto t = train(*gram, Eigen::VectorXd::Zero(g.num_positions), cfg.fft_train, val ? &*val : nullptr);
                    learned = {FourierFilter::from_row(g, t.params, FilterKind::learned), std::move(t.trace)};
                } else {
                    learned = train_fourier(data.op, tr.images, ftr, cfg.fft_train, false, &va.images, &fva);
                }
                if (!out.empty()) write_filter_csv(out / ("filter_fft_learned_" + tag + ".csv"), learned.filter);
                ApproachResult r{Approach::fft_learned};
                r.family_optimum_train_mse = optimum_loss / npix;
                r.analytic_train_loss = optimum_loss;
                r.trace = learned.trace;
                level["fft_learned_final_train_loss"] = learned.trace.train_loss.back();
                finish(std::move(r), fbp_reconstruct(data.op, learned.filter, fte, dft),
                       fbp_reconstruct(data.op, learned.filter, ftr, dft));
            }
        }
        levels.push_back(std::move(level));
    }
    meta["levels"] = std::move(levels);
    table.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (!out.empty()) {
        nlohmann::ordered_json j;
        j["metadata"] = meta;
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        CsvWriter csv(out / "results.csv", {"approach", "noise_variance", "test_mse", "test_mse_se", "test_psnr",
                                            "test_ssim", "train_mse", "family_optimum_train_mse"});
        for (const auto& r : table.rows) {
            rows.push_back({{"approach", to_string(r.approach)},
                            {"noise_variance", r.noise_variance},
                            {"test_mse", detail::number(r.test_mse)},
                            {"test_mse_se", detail::number(r.test_mse_se)},
                            {"test_psnr", detail::number(r.test_psnr)},
                            {"test_ssim", detail::number(r.test_ssim)},
                            {"train_mse", detail::number(r.train_mse)},
                            {"family_optimum_train_mse", detail::number(r.family_optimum_train_mse)}});
            csv.row(std::string(to_string(r.approach)), r.noise_variance, r.test_mse, r.test_mse_se, r.test_psnr,
                    r.test_ssim, r.train_mse, r.family_optimum_train_mse);
        }
        j["results"] = std::move(rows);
        detail::write_json(out / "results.json", j);
        detail::write_json(out / "timing.json", {{"wall_seconds", table.wall_seconds}});
    }
    return table;
}

// ---------------------------------------------------------------------------
// Noise sweep

struct SweepRow {
    double noise_variance = 0.0;
    double delta2 = 0.0;             ///< max_n Delta_n (white noise: s^2)
    double closed_form = 0.0;        ///< expected error from training Pi (per sample)
    double monte_carlo = 0.0;        ///< mean test-set error (per sample)
    double monte_carlo_se = 0.0;
    double empirical_test_mse = 0.0; ///< svd_analytic test MSE per pixel
};

struct SweepReport {
    std::vector<SweepRow> rows;
    bool monotone = false;            ///< closed form strictly decreasing along the sweep
    double max_z = 0.0;               ///< max |closed - mc| / se
};

/// Population-optimal coefficients with Pi from the training split and
/// Delta_n = s^2, evaluated in closed form and on fresh test noise.
inline SweepReport run_noise_sweep(const ExperimentConfig& cfg, const std::filesystem::path& out = {}) {
    cfg.validate();
    const auto& vars = cfg.sweep_variances;
    if (vars.empty()) throw ConfigError("sweep_variances is empty");
    for (std::size_t i = 0; i < vars.size(); ++i) {
        if (!(vars[i] >= 0.0)) throw ConfigError("sweep variances must be >= 0");
        if (vars[i] == 0.0 && i + 1 != vars.size()) throw ConfigError("a zero variance may only end the sweep");
        if (i > 0 && !(vars[i] < vars[i - 1])) throw ConfigError("sweep variances must be strictly decreasing");
    }
    const ExperimentData data = prepare_data(cfg, true);
    const OperatorSVD& svd = *data.svd;
    const auto tr = data.train(0.0);
    const Eigen::MatrixXd c = svd.U.transpose() * tr.images;
    const Eigen::VectorXd Pi = c.array().square().rowwise().mean();
    const double outside = std::max(0.0, (tr.images.colwise().squaredNorm().sum() - c.squaredNorm()) /
                                             static_cast<double>(tr.images.cols()));

    SweepReport rep;
    for (double v : vars) {
        const auto te = data.test(v);
        const Eigen::VectorXd Delta = Eigen::VectorXd::Constant(svd.rank(), v);
        const Eigen::VectorXd gbar = optimal_coefficients_population(svd.sigma, Pi, Delta).g;
        SweepRow row;
        row.noise_variance = v;
        row.delta2 = noise_level(Delta);
        row.closed_form = spectral_objective(svd.sigma, Pi, Delta, gbar) + outside;
        const Eigen::MatrixXd recon = reconstruct_spectral(data.op, svd, gbar, te.data());
        const Eigen::VectorXd err = (te.images - recon).colwise().squaredNorm().transpose();
        row.monte_carlo = err.mean();
        row.monte_carlo_se = standard_error(err);
        row.empirical_test_mse = row.monte_carlo / data.geometry.num_pixels();
        rep.rows.push_back(row);
    }
    rep.monotone = true;
    for (std::size_t i = 1; i < rep.rows.size(); ++i)
        if (!(rep.rows[i].closed_form < rep.rows[i - 1].closed_form)) rep.monotone = false;
    for (const auto& r : rep.rows) {
        const double d = std::abs(r.closed_form - r.monte_carlo);
        rep.max_z = std::max(rep.max_z, r.monte_carlo_se > 0 ? d / r.monte_carlo_se : (d > 0 ? INFINITY : 0.0));
    }

    if (!out.empty()) {
        std::filesystem::create_directories(out);
        CsvWriter csv(out / "sweep.csv", {"noise_variance", "delta2", "closed_form_error", "monte_carlo_error",
                                          "monte_carlo_se", "test_mse"});
        for (const auto& r : rep.rows)
            csv.row(r.noise_variance, r.delta2, r.closed_form, r.monte_carlo, r.monte_carlo_se, r.empirical_test_mse);
        detail::write_json(out / "sweep.json", {{"config", to_json(cfg)},
                                                {"error_unit", "per-sample squared L2 error"},
                                                {"closed_form_strictly_decreasing", rep.monotone},
                                                {"max_abs_z", detail::number(rep.max_z)}});
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Oversmoothing

struct OversmoothingReport {
    Eigen::VectorXd sigma, Pi, Delta, Pi_tilde, ratio, bound, weight, Pi_tilde_empirical;
    double delta2 = 0.0;
    double c = 0.0;
    int tail_start = 0;  ///< 0-based first index of the tail
    bool ratios_in_unit_interval = false;
    bool tail_bound_holds = false;
};

/// Expected smoothness of optimally regularized reconstructions from
/// training statistics at `oversmoothing_variance`.
inline OversmoothingReport run_oversmoothing_report(const ExperimentConfig& cfg,
                                                    const std::filesystem::path& out = {}) {
    cfg.validate();
    const ExperimentData data = prepare_data(cfg, true);
    const OperatorSVD& svd = *data.svd;
    const auto tr = data.train(cfg.oversmoothing_variance);
    const ModalCoefficients m = project_modes(svd, tr.images, tr.noise);
    const SpectralStats st = stats_from_modes(m, cfg.oversmoothing_variance);
    const int R = svd.rank();

    OversmoothingReport rep;
    rep.sigma = svd.sigma;
    rep.Pi = st.Pi;
    rep.Delta = st.Delta;
    rep.Pi_tilde = expected_smoothness(svd.sigma, st.Pi, st.Delta);
    rep.ratio = Eigen::VectorXd::Zero(R);
    for (int n = 0; n < R; ++n) rep.ratio[n] = st.Pi[n] > 0 ? rep.Pi_tilde[n] / st.Pi[n] : 0.0;
    rep.weight = range_condition_weights(svd.sigma, st.Pi, st.Delta);
    rep.delta2 = noise_level(st.Delta);
    rep.tail_start = R - static_cast<int>(std::ceil(cfg.tail_fraction * R));
    rep.c = std::numeric_limits<double>::infinity();
    for (int n = rep.tail_start; n < R; ++n)
        if (st.Pi[n] > 0) rep.c = std::min(rep.c, st.Delta[n] / (rep.delta2 * st.Pi[n]));
    rep.bound = (svd.sigma.array().square() / (rep.c * rep.delta2)).matrix();

    // Population-optimal coefficients applied to the training data.
    const Eigen::VectorXd gbar = optimal_coefficients_population(svd.sigma, st.Pi, st.Delta).g;
    const Eigen::MatrixXd proj = gbar.asDiagonal() * ((svd.sigma.asDiagonal() * m.signal) + m.noise);
    rep.Pi_tilde_empirical = proj.array().square().rowwise().mean();

    rep.ratios_in_unit_interval = ((rep.ratio.array() >= 0.0) && (rep.ratio.array() <= 1.0)).all();
    rep.tail_bound_holds = true;
    for (int n = rep.tail_start; n < R; ++n)
        if (!(rep.ratio[n] <= rep.bound[n] * (1.0 + 1e-12))) rep.tail_bound_holds = false;

    if (!out.empty()) {
        std::filesystem::create_directories(out);
        CsvWriter csv(out / "oversmoothing.csv", {"n", "sigma_n", "Pi_n", "Pi_tilde_n", "ratio", "ratio_bound",
                                                  "weight_range_condition", "Pi_tilde_empirical", "tail"});
        for (int n = 0; n < R; ++n)
            csv.row(static_cast<long>(n + 1), rep.sigma[n], rep.Pi[n], rep.Pi_tilde[n], rep.ratio[n], rep.bound[n],
                    rep.weight[n], rep.Pi_tilde_empirical[n], n >= rep.tail_start ? 1 : 0);
        detail::write_json(out / "oversmoothing.json",
                           {{"config", to_json(cfg)},
                            {"noise_variance", cfg.oversmoothing_variance},
                            {"delta2", rep.delta2},
                            {"c", detail::number(rep.c)},
                            {"tail_start_n", rep.tail_start + 1},
                            {"ratios_in_unit_interval", rep.ratios_in_unit_interval},
                            {"tail_bound_holds", rep.tail_bound_holds}});
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Resolution transfer

/// Piecewise-linear interpolation of (x, y) nodes sorted by x with duplicate
/// x values averaged; constant beyond the end nodes.
class PiecewiseLinear {
public:
    PiecewiseLinear(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
        detail::require_dims(x.size() == y.size() && x.size() > 0, "interpolation needs matching, non-empty nodes");
        std::vector<std::pair<double, double>> p(static_cast<std::size_t>(x.size()));
        for (Eigen::Index i = 0; i < x.size(); ++i) p[static_cast<std::size_t>(i)] = {x[i], y[i]};
        std::stable_sort(p.begin(), p.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        for (std::size_t i = 0; i < p.size();) {
            std::size_t j = i;
            double sum = 0.0;
            while (j < p.size() && p[j].first == p[i].first) sum += p[j++].second;
            x_.push_back(p[i].first);
            y_.push_back(sum / static_cast<double>(j - i));
            i = j;
        }
    }

    double lo() const { return x_.front(); }
    double hi() const { return x_.back(); }
    bool extrapolates(double x) const { return x < lo() || x > hi(); }

    double operator()(double x) const {
        if (x <= x_.front()) return y_.front();
        if (x >= x_.back()) return y_.back();
        const auto it = std::upper_bound(x_.begin(), x_.end(), x);
        const std::size_t i = static_cast<std::size_t>(it - x_.begin());
        const double t = (x - x_[i - 1]) / (x_[i] - x_[i - 1]);
        return y_[i - 1] + t * (y_[i] - y_[i - 1]);
    }

private:
    std::vector<double> x_, y_;
};

struct SpectralTransfer {
    Eigen::VectorXd g;              ///< coefficients for the target operator
    std::vector<bool> extrapolated; ///< per target mode
};

/// Maps coefficients between operators through the resolution-free curve
/// g^(sigma^) with sigma^ = sigma_factor * sigma and g^ = g / sigma_factor.
inline SpectralTransfer transfer_coefficients(const Geometry& source, const Eigen::VectorXd& source_sigma,
                                              const Eigen::VectorXd& source_g, const Geometry& target,
                                              const Eigen::VectorXd& target_sigma) {
    detail::require_dims(source_sigma.size() == source_g.size(), "transfer: sigma and g lengths differ");
    SpectralTransfer t;
    if (source == target && source_sigma.size() == target_sigma.size() && source_sigma == target_sigma) {
        t.g = source_g;
        t.extrapolated.assign(static_cast<std::size_t>(source_g.size()), false);
        return t;
    }
    const double fs = continuous_scaling(source).sigma_factor, ft = continuous_scaling(target).sigma_factor;
    const PiecewiseLinear curve(fs * source_sigma, source_g / fs);
    const Eigen::VectorXd sh = ft * target_sigma;
    if (sh.maxCoeff() < curve.lo() || sh.minCoeff() > curve.hi())
        throw ConfigError("transfer: rescaled singular value ranges do not overlap");
    t.g.resize(target_sigma.size());
    t.extrapolated.resize(static_cast<std::size_t>(target_sigma.size()));
    for (Eigen::Index n = 0; n < sh.size(); ++n) {
        t.g[n] = ft * curve(sh[n]);
        t.extrapolated[static_cast<std::size_t>(n)] = curve.extrapolates(sh[n]);
    }
    return t;
}

struct FilterTransfer {
    FourierFilter filter;           ///< applied filter rho on the target grid
    RowMatrixXd psi;                ///< rho / |r| (ramp-relative gain), rho at r = 0
    std::vector<bool> extrapolated; ///< per target frequency bin
};

namespace detail {

/// psi on the source grid, bin values sorted by signed frequency.
struct PsiGrid {
    std::vector<double> r;             ///< signed frequencies, ascending
    std::vector<std::vector<double>> v; ///< per angle, psi at r (rho at r = 0)
};

inline PsiGrid psi_grid(const FourierFilter& f) {
    const Eigen::VectorXd r = frequency_grid(f.geometry);
    std::vector<int> order(static_cast<std::size_t>(r.size()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return r[a] < r[b]; });
    PsiGrid p;
    for (int j : order) p.r.push_back(r[j]);
    p.v.resize(static_cast<std::size_t>(f.values.rows()));
    for (Eigen::Index k = 0; k < f.values.rows(); ++k)
        for (int j : order) {
            const double ar = std::abs(r[j]);
            p.v[static_cast<std::size_t>(k)].push_back(ar > 0 ? f.values(k, j) / ar : f.values(k, j));
        }
    return p;
}

/// Linear in signed r over the nonzero-frequency nodes of one side, constant
/// beyond the outermost node; r = 0 maps to the r = 0 node.
inline double psi_at(const PsiGrid& p, const std::vector<double>& row, double r, bool& extrapolated) {
    if (r == 0.0) {
        for (std::size_t i = 0; i < p.r.size(); ++i)
            if (p.r[i] == 0.0) return row[i];
        extrapolated = true;
        return 0.0;
    }
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < p.r.size(); ++i)
        if (p.r[i] != 0.0 && (p.r[i] > 0) == (r > 0)) xs.push_back(std::abs(p.r[i])), ys.push_back(row[i]);
    if (xs.empty()) {
        extrapolated = true;
        for (std::size_t i = 0; i < p.r.size(); ++i)
            if (p.r[i] != 0.0) xs.push_back(std::abs(p.r[i])), ys.push_back(row[i]);
    }
    const PiecewiseLinear f(Eigen::Map<const Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size())),
                            Eigen::Map<const Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size())));
    if (f.extrapolates(std::abs(r))) extrapolated = true;
    return f(std::abs(r));
}

}  // namespace detail

/// Bilinear transfer of psi = rho / |r| over (theta, r); theta wraps with
/// psi(theta + pi, r) = psi(theta, -r). Frequencies beyond the source grid
/// keep the outermost psi.
inline FilterTransfer transfer_filter(const FourierFilter& source, const Geometry& target) {
    if (source.ramp_relative) throw ConfigError("transfer_filter expects an applied filter");
    FilterTransfer t;
    if (source.geometry == target) {
        t.filter = source;
        t.extrapolated.assign(static_cast<std::size_t>(target.num_positions), false);
        const Eigen::VectorXd r = frequency_grid(target);
        t.psi = source.values;
        for (Eigen::Index j = 0; j < r.size(); ++j)
            if (r[j] != 0.0) t.psi.col(j) /= std::abs(r[j]);
        return t;
    }
    const detail::PsiGrid p = detail::psi_grid(source);
    const int Ks = source.geometry.num_angles;
    const Eigen::VectorXd r = frequency_grid(target);
    t.psi.resize(target.num_angles, target.num_positions);
    t.extrapolated.assign(static_cast<std::size_t>(target.num_positions), false);
    for (int k = 0; k < target.num_angles; ++k) {
        const double pos = target.angle(k) / std::numbers::pi * Ks;  // fractional source angle index
        const int k0 = std::min(static_cast<int>(std::floor(pos)), Ks - 1);
        const double w = pos - k0;
        for (int j = 0; j < target.num_positions; ++j) {
            bool ex = false;
            const double a = detail::psi_at(p, p.v[static_cast<std::size_t>(k0)], r[j], ex);
            double b = a;
            if (w > 0.0) {
                b = k0 + 1 < Ks ? detail::psi_at(p, p.v[static_cast<std::size_t>(k0 + 1)], r[j], ex)
                                : detail::psi_at(p, p.v[0], -r[j], ex);
            }
            t.psi(k, j) = (1.0 - w) * a + w * b;
            if (ex) t.extrapolated[static_cast<std::size_t>(j)] = true;
        }
    }
    t.filter = FourierFilter{target, t.psi, source.angle_constant, false, source.kind};
    for (int j = 0; j < target.num_positions; ++j)
        if (r[j] != 0.0) t.filter.values.col(j) *= std::abs(r[j]);
    return t;
}

struct TransferReport {
    Geometry source, target;
    double noise_variance = 0.0;
    Eigen::VectorXd sigma_hat_source, sigma_hat_target;
    Eigen::VectorXd g_hat_source, g_hat_native, g_hat_transferred;
    std::vector<bool> svd_extrapolated;
    double svd_native_loss = 0.0, svd_transferred_loss = 0.0;  ///< target training split, per sample
    double svd_native_test_mse = 0.0, svd_transferred_test_mse = 0.0;
    FourierFilter fft_source, fft_native, fft_transferred;
    std::vector<bool> fft_extrapolated;
    double fft_native_loss = 0.0, fft_transferred_loss = 0.0;
    double fft_native_test_mse = 0.0, fft_transferred_test_mse = 0.0;

    /// max_{n < count} |sigma^_source - sigma^_target| / sigma^_target.
    double leading_sigma_deviation(int count) const {
        double d = 0.0;
        for (int n = 0; n < count && n < sigma_hat_source.size() && n < sigma_hat_target.size(); ++n)
            d = std::max(d, std::abs(sigma_hat_source[n] - sigma_hat_target[n]) / sigma_hat_target[n]);
        return d;
    }
};

namespace detail {

inline ExperimentConfig with_geometry(const ExperimentConfig& cfg, const Geometry& g) {
    ExperimentConfig c = cfg;
    c.geometry = g;
    c.dataset.image_size = g.image_size;
    c.dataset_dir.clear();
    return c;
}

}  // namespace detail

/// Fits the analytic spectral coefficients and the angle-constant learned
/// filter (its exact training minimizer) at both resolutions, transfers the
/// source fits to the target and compares losses there. Both resolutions
/// rasterize the same ellipses and use the same noise variance.
inline TransferReport run_resolution_transfer(const ExperimentConfig& cfg_low, const ExperimentConfig& cfg_high,
                                              double variance, const std::filesystem::path& out = {}) {
    cfg_low.validate();
    cfg_high.validate();
    const ExperimentData lo = prepare_data(cfg_low, true);
    const ExperimentData hi = lo.geometry == cfg_high.geometry && cfg_low.seed == cfg_high.seed &&
                                      cfg_low.dataset == cfg_high.dataset
                                  ? lo
                                  : prepare_data(cfg_high, true);
    TransferReport rep;
    rep.source = lo.geometry;
    rep.target = hi.geometry;
    rep.noise_variance = variance;

    auto fit_svd = [&](const ExperimentData& d) {
        const auto tr = d.train(variance);
        return optimal_coefficients_empirical(d.svd->sigma, compute_spectral_stats(*d.svd, tr.images, tr.noise, variance)).g;
    };
    const Eigen::VectorXd g_lo = fit_svd(lo), g_hi = fit_svd(hi);
    const double fs = continuous_scaling(rep.source).sigma_factor, ft = continuous_scaling(rep.target).sigma_factor;
    rep.sigma_hat_source = fs * lo.svd->sigma;
    rep.sigma_hat_target = ft * hi.svd->sigma;
    rep.g_hat_source = g_lo / fs;
    rep.g_hat_native = g_hi / ft;
    const SpectralTransfer st = transfer_coefficients(rep.source, lo.svd->sigma, g_lo, rep.target, hi.svd->sigma);
    rep.g_hat_transferred = st.g / ft;
    rep.svd_extrapolated = st.extrapolated;

    const auto tr = hi.train(variance), te = hi.test(variance);
    const Eigen::MatrixXd ftr = tr.data(), fte = te.data();
    const double npix = rep.target.num_pixels();
    {
        const SpectralProblem p(*hi.svd, tr.images, ftr);
        rep.svd_native_loss = p.loss(g_hi);
        rep.svd_transferred_loss = p.loss(st.g);
        auto test_mse = [&](const Eigen::VectorXd& g) {
            return (te.images - reconstruct_spectral(hi.op, *hi.svd, g, fte)).squaredNorm() /
                   (npix * static_cast<double>(te.images.cols()));
        };
        rep.svd_native_test_mse = test_mse(g_hi);
        rep.svd_transferred_test_mse = test_mse(st.g);
    }
    {
        const auto trl = lo.train(variance);
        const FourierGramProblem plo(lo.op, trl.images, trl.data());
        rep.fft_source = FourierFilter::from_row(rep.source, plo.minimizer(), FilterKind::learned);
        const FourierGramProblem phi(hi.op, tr.images, ftr);
        const Eigen::VectorXd rho = phi.minimizer();
        rep.fft_native = FourierFilter::from_row(rep.target, rho, FilterKind::learned);
        const FilterTransfer ft_ = transfer_filter(rep.fft_source, rep.target);
        rep.fft_transferred = ft_.filter;
        rep.fft_extrapolated = ft_.extrapolated;
        rep.fft_native_loss = phi.loss(rho);
        rep.fft_transferred_loss = phi.loss(rep.fft_transferred.row(0));
        const Dft dft(rep.target.num_positions);
        auto test_mse = [&](const FourierFilter& f) {
            return (te.images - fbp_reconstruct(hi.op, f, fte, dft)).squaredNorm() /
                   (npix * static_cast<double>(te.images.cols()));
        };
        rep.fft_native_test_mse = test_mse(rep.fft_native);
        rep.fft_transferred_test_mse = test_mse(rep.fft_transferred);
    }

    if (!out.empty()) {
        std::filesystem::create_directories(out);
        {
            CsvWriter csv(out / "transfer_svd_source.csv", {"n", "sigma_hat", "g_hat"});
            for (Eigen::Index n = 0; n < rep.sigma_hat_source.size(); ++n)
                csv.row(static_cast<long>(n + 1), rep.sigma_hat_source[n], rep.g_hat_source[n]);
        }
        {
            CsvWriter csv(out / "transfer_svd_target.csv",
                          {"n", "sigma_hat", "g_hat_native", "g_hat_transferred", "extrapolated"});
            for (Eigen::Index n = 0; n < rep.sigma_hat_target.size(); ++n)
                csv.row(static_cast<long>(n + 1), rep.sigma_hat_target[n], rep.g_hat_native[n],
                        rep.g_hat_transferred[n], rep.svd_extrapolated[static_cast<std::size_t>(n)] ? 1 : 0);
        }
        write_filter_csv(out / "transfer_fft_source.csv", rep.fft_source);
        write_filter_csv(out / "transfer_fft_native.csv", rep.fft_native);
        write_filter_csv(out / "transfer_fft_transferred.csv", rep.fft_transferred);
        const auto count = [](const std::vector<bool>& v) { return std::count(v.begin(), v.end(), true); };
        detail::write_json(out / "transfer.json",
                           {{"source_config", to_json(cfg_low)},
                            {"target_config", to_json(cfg_high)},
                            {"noise_variance", variance},
                            {"sigma_hat_max_rel_deviation_n_le_10", rep.leading_sigma_deviation(10)},
                            {"svd", {{"native_train_loss", rep.svd_native_loss},
                                     {"transferred_train_loss", rep.svd_transferred_loss},
                                     {"native_test_mse", rep.svd_native_test_mse},
                                     {"transferred_test_mse", rep.svd_transferred_test_mse},
                                     {"extrapolated_modes", count(rep.svd_extrapolated)}}},
                            {"fft", {{"native_train_loss", rep.fft_native_loss},
                                     {"transferred_train_loss", rep.fft_transferred_loss},
                                     {"native_test_mse", rep.fft_native_test_mse},
                                     {"transferred_test_mse", rep.fft_transferred_test_mse},
                                     {"extrapolated_bins", count(rep.fft_extrapolated)}}},
                            {"loss_unit", "per-sample squared L2 error on the target training split"}});
    }
    return rep;
}

/// Transfer between the geometries named in cfg.transfer.
inline TransferReport run_resolution_transfer(const ExperimentConfig& cfg, const std::filesystem::path& out = {}) {
    return run_resolution_transfer(detail::with_geometry(cfg, cfg.transfer.source),
                                   detail::with_geometry(cfg, cfg.transfer.target), cfg.transfer.variance, out);
}

}  // namespace ctreg
