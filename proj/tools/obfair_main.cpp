#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "obfair/pipeline.hpp"
#include "obfair/synthdata.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;

int run_command(const std::string& config_path, std::optional<std::uint64_t> seed,
                std::optional<int> workers, const std::string& method) {
    obfair::RunConfig config = obfair::RunConfig::load(config_path);
    if (seed) config.seed = *seed;
    if (workers) config.workers = *workers;
    if (!method.empty()) {
        config.methods.clear();
        if (method == "both") {
            config.methods = {obfair::ObfuscationMethod::gaussian_blur,
                              obfair::ObfuscationMethod::pixelation};
        } else {
            config.methods = {obfair::obfuscation_method_from_string(method)};
        }
    }
    obfair::RunArtifacts artifacts = obfair::run(config);
    std::cout << "run complete: " << artifacts.files.size() << " artifacts in "
              << artifacts.output_dir << " (seed " << artifacts.seed << ", digest "
              << artifacts.config_digest << ")\n";
    for (const auto& report : artifacts.reports)
        std::cout << "  report_" << to_string(report.method) << "_" << report.classifier_tag
                  << ".csv\n";
    return 0;
}

int report_command(const std::string& artifacts_dir) {
    auto rebuilt = obfair::rebuild_reports(artifacts_dir);
    for (const auto& [name, csv] : rebuilt) {
        std::cout << "== " << name << "\n" << csv << "\n";
    }
    return 0;
}

int plot_data_command(const std::string& artifacts_dir) {
    auto written = obfair::emit_plot_data(artifacts_dir);
    for (const auto& rel : written) std::cout << rel << "\n";
    return 0;
}

int make_demo_command(const std::string& out_dir, int identities, int images, int size,
                      std::uint64_t seed) {
    obfair::SyntheticCohortSpec spec;
    spec.directory = out_dir;
    spec.identities = identities;
    spec.images_per_identity = images;
    spec.image_size = size;
    spec.seed = seed;
    std::string manifest = obfair::write_synthetic_cohort(spec);
    std::cout << manifest << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"obfair: audits whether face obfuscation protects identities "
                 "equally across demographic groups"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed_override;
    std::optional<int> workers_override;
    std::string method_override;
    CLI::App* cmd_run = app.add_subcommand("run", "execute an experiment from a config file");
    cmd_run->add_option("--config", config_path, "JSON run config")->required();
    cmd_run->add_option("--seed", seed_override, "override the config seed");
    cmd_run->add_option("--workers", workers_override, "override the worker count");
    cmd_run->add_option("--method", method_override, "blur, pixelate or both")
        ->check(CLI::IsMember({"blur", "pixelate", "both"}));

    std::string artifacts_dir;
    CLI::App* cmd_report =
        app.add_subcommand("report", "rebuild group/bias reports from run artifacts");
    cmd_report->add_option("--artifacts", artifacts_dir, "artifact directory")->required();

    std::string plot_dir;
    CLI::App* cmd_plot =
        app.add_subcommand("plot-data", "emit histogram/box-plot/bias CSVs from artifacts");
    cmd_plot->add_option("--artifacts", plot_dir, "artifact directory")->required();

    std::string demo_dir;
    int demo_identities = 8;
    int demo_images = 6;
    int demo_size = 64;
    std::uint64_t demo_seed = 1;
    CLI::App* cmd_demo =
        app.add_subcommand("make-demo", "generate a synthetic cohort for a self-contained run");
    cmd_demo->add_option("--out", demo_dir, "output directory")->required();
    cmd_demo->add_option("--identities", demo_identities, "identity count (multiple of 4)");
    cmd_demo->add_option("--images", demo_images, "images per identity");
    cmd_demo->add_option("--size", demo_size, "image side length in pixels");
    cmd_demo->add_option("--seed", demo_seed, "content seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_run->parsed())
            return run_command(config_path, seed_override, workers_override, method_override);
        if (cmd_report->parsed()) return report_command(artifacts_dir);
        if (cmd_plot->parsed()) return plot_data_command(plot_dir);
        if (cmd_demo->parsed())
            return make_demo_command(demo_dir, demo_identities, demo_images, demo_size, demo_seed);
    } catch (const obfair::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const obfair::StageError& e) {
        std::cerr << "stage failure: " << e.what() << "\n";
        return kExitStage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitStage;
    }
    return 0;
}
