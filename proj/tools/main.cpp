// ctreg: dataset generation and reconstruction experiments.
//
//   ctreg dataset gen     --config cfg.json --out dir [--seed N]
//   ctreg compare         --config cfg.json --out dir [--seed N]
//   ctreg sweep           --config cfg.json --out dir [--seed N]
//   ctreg oversmoothing   --config cfg.json --out dir [--seed N]
//   ctreg transfer        --config cfg.json --out dir [--seed N]
//
// On success a one-line JSON summary goes to stdout; on failure a JSON error
// object goes to stderr and the exit code is nonzero.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ctreg/experiment.hpp"

namespace {

struct CommonArgs {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
    cmd->add_option("--config", a.config, "experiment config (JSON)")->required();
    cmd->add_option("--out", a.out, "output directory")->required();
    cmd->add_option("--seed", a.seed, "override the master seed");
}

ctreg::ExperimentConfig load(const CommonArgs& a) {
    auto cfg = ctreg::load_config(a.config);
    if (a.seed) {
        cfg.apply_seed(*a.seed);
        cfg.validate();
    }
    return cfg;
}

int fail(const std::string& kind, const std::string& message, int code) {
    nlohmann::ordered_json j;
    j["status"] = "error";
    j["error"] = {{"kind", kind}, {"message", message}};
    std::cerr << j.dump() << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Data-driven spectral and Fourier regularization for parallel-beam CT"};
    app.require_subcommand(1);

    CommonArgs gen_args, cmp_args, sweep_args, over_args, xfer_args;
    auto* dataset = app.add_subcommand("dataset", "dataset utilities");
    dataset->require_subcommand(1);
    auto* gen = dataset->add_subcommand("gen", "generate and save the phantom dataset");
    add_common(gen, gen_args);
    auto* compare = app.add_subcommand("compare", "four-approach comparison over noise levels");
    add_common(compare, cmp_args);
    auto* sweep = app.add_subcommand("sweep", "noise-level convergence sweep");
    add_common(sweep, sweep_args);
    auto* over = app.add_subcommand("oversmoothing", "expected smoothness diagnostics");
    add_common(over, over_args);
    auto* xfer = app.add_subcommand("transfer", "resolution transfer of coefficients and filters");
    add_common(xfer, xfer_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what(), 2);
    }

    try {
        nlohmann::ordered_json summary;
        summary["status"] = "ok";
        if (gen->parsed()) {
            const auto cfg = load(gen_args);
            const auto ds = ctreg::generate_dataset(cfg.dataset);
            ctreg::save_dataset(ds, gen_args.out);
            summary["command"] = "dataset gen";
            summary["count"] = ds.size();
            summary["out"] = gen_args.out;
        } else if (compare->parsed()) {
            const auto cfg = load(cmp_args);
            const auto table = ctreg::run_comparison(cfg, cmp_args.out);
            summary["command"] = "compare";
            nlohmann::ordered_json rows = nlohmann::ordered_json::array();
            for (const auto& r : table.rows)
                rows.push_back({{"approach", ctreg::to_string(r.approach)},
                                {"noise_variance", r.noise_variance},
                                {"test_mse", ctreg::detail::number(r.test_mse)}});
            summary["results"] = rows;
            summary["out"] = cmp_args.out;
        } else if (sweep->parsed()) {
            const auto cfg = load(sweep_args);
            const auto rep = ctreg::run_noise_sweep(cfg, sweep_args.out);
            summary["command"] = "sweep";
            summary["closed_form_strictly_decreasing"] = rep.monotone;
            summary["max_abs_z"] = ctreg::detail::number(rep.max_z);
            summary["out"] = sweep_args.out;
        } else if (over->parsed()) {
            const auto cfg = load(over_args);
            const auto rep = ctreg::run_oversmoothing_report(cfg, over_args.out);
            summary["command"] = "oversmoothing";
            summary["ratios_in_unit_interval"] = rep.ratios_in_unit_interval;
            summary["tail_bound_holds"] = rep.tail_bound_holds;
            summary["out"] = over_args.out;
        } else if (xfer->parsed()) {
            const auto cfg = load(xfer_args);
            const auto rep = ctreg::run_resolution_transfer(cfg, xfer_args.out);
            summary["command"] = "transfer";
            summary["svd_native_train_loss"] = rep.svd_native_loss;
            summary["svd_transferred_train_loss"] = rep.svd_transferred_loss;
            summary["fft_native_train_loss"] = rep.fft_native_loss;
            summary["fft_transferred_train_loss"] = rep.fft_transferred_loss;
            summary["out"] = xfer_args.out;
        }
        std::cout << summary.dump() << '\n';
        return 0;
    } catch (const ctreg::TrainingError& e) {
        return fail(e.kind(), e.what(), 3);
    } catch (const ctreg::Error& e) {
        return fail(e.kind(), e.what(), 1);
    } catch (const std::exception& e) {
        return fail("internal", e.what(), 4);
    }
}
