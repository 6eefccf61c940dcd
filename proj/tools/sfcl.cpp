// sfcl: run SplitFed-CL experiments, corrupt label masks, compare runs.
//
// Exit codes: 0 success, 2 configuration error, 3 runtime error.

#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "sfcl/config.hpp"
#include "sfcl/pgm.hpp"
#include "sfcl/runner.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& out_dir,
            bool deterministic, bool quiet) {
    sfcl::RunConfig cfg = sfcl::parse_config_file(config_path);
    sfcl::apply_env_overrides(cfg);
    sfcl::run_experiment(cfg, out_dir, deterministic, quiet);
    return 0;
}

int cmd_corrupt(const std::string& image_path, const std::string& label_path,
                const std::string& out_path, double rho, double amax_scale,
                const std::vector<int>& classes, std::uint64_t /*seed*/) {
    // seed accepted for interface uniformity; the deformation is deterministic.
    const sfcl::ScalarField image = sfcl::pgm::to_image(sfcl::pgm::read(image_path));
    const sfcl::pgm::Gray8 raw = sfcl::pgm::read(label_path);
    int max_class = 0;
    for (auto v : raw.v) max_class = std::max(max_class, static_cast<int>(v));
    const sfcl::LabelMask label = sfcl::pgm::to_label(raw, max_class + 1);
    if (image.height != label.height || image.width != label.width)
        throw sfcl::ConfigError("corrupt: image and label dimensions differ");

    std::set<int> subset(classes.begin(), classes.end());
    if (subset.empty())
        for (int k = 1; k <= max_class; ++k) subset.insert(k);
    for (int k : subset)
        if (k < 1) throw sfcl::ConfigError("corrupt: class ids must be >= 1");

    sfcl::annsim::DifficultyParams params;
    params.rho = rho;
    params.amax_scale = amax_scale;
    const sfcl::LabelMask noisy =
        sfcl::annsim::deform_multiclass(image, label, params, subset);
    sfcl::pgm::write_label(out_path, noisy);
    return 0;
}

int cmd_compare(const std::vector<std::string>& runs) {
    std::cout << sfcl::compare_modes(runs);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SplitFed-CL simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir, image_path, label_path, out_path;
    bool deterministic = false, quiet = false;
    double rho = 2.0, amax_scale = 1.0;
    std::uint64_t seed = 0;
    std::vector<int> classes;
    std::vector<std::string> runs;

    auto* run = app.add_subcommand("run", "run an experiment from a config file");
    run->add_option("--config", config_path, "config file")->required();
    run->add_option("--out", out_dir, "output directory (overrides config)");
    run->add_flag("--deterministic", deterministic, "single-threaded reproducible mode");
    run->add_flag("--quiet", quiet, "suppress per-round progress output");

    auto* corrupt = app.add_subcommand("corrupt", "deform a label mask");
    corrupt->add_option("--image", image_path, "input image PGM")->required();
    corrupt->add_option("--label", label_path, "input label PGM (gray = class id)")
        ->required();
    corrupt->add_option("--out", out_path, "output label PGM")->required();
    corrupt->add_option("--rho", rho, "difficulty exponent");
    corrupt->add_option("--amax-scale", amax_scale, "scale on the a_max = w policy");
    corrupt->add_option("--classes", classes, "class ids to deform (default: all)")
        ->delimiter(',');
    corrupt->add_option("--seed", seed, "accepted for interface uniformity; unused");

    auto* compare = app.add_subcommand("compare", "tabulate final metrics across runs");
    compare->add_option("--runs", runs, "run directories")->required()->expected(-1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (run->parsed()) return cmd_run(config_path, out_dir, deterministic, quiet);
        if (corrupt->parsed())
            return cmd_corrupt(image_path, label_path, out_path, rho, amax_scale,
                               classes, seed);
        if (compare->parsed()) return cmd_compare(runs);
    } catch (const sfcl::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
