// softbed command-line front end
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "softbed/config.hpp"
#include "softbed/driver.hpp"
#include "softbed/scenario.hpp"

namespace {

struct CommonArgs {
    std::string scenario_path;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("scenario", args.scenario_path, "scenario file")->required();
    cmd->add_option("--set", args.overrides,
                    "override a scenario value, e.g. --set run.t_end=5");
}

softbed::ConfigMap load_config(const CommonArgs& args) {
    softbed::ConfigMap cfg = softbed::ConfigMap::parse_file(args.scenario_path);
    for (const auto& o : args.overrides) cfg.apply_override(o);
    return cfg;
}

int cmd_validate(const CommonArgs& args) {
    softbed::ConfigMap cfg = load_config(args);
    softbed::Scenario sc = softbed::build_scenario(cfg);
    std::printf("scenario ok: %zu material(s), %zu layer(s), hash %016llx\n",
                sc.materials.size(), sc.layers.size(),
                static_cast<unsigned long long>(cfg.hash()));
    return 0;
}

int cmd_run(const CommonArgs& args, const std::string& outdir, std::uint64_t seed,
            const std::string& save_ckpt, const std::string& restore_ckpt) {
    softbed::ConfigMap cfg = load_config(args);
    softbed::Scenario sc = softbed::build_scenario(cfg);
    softbed::SimDriver driver(sc, seed);
    if (!restore_ckpt.empty())
        driver.restore_checkpoint(restore_ckpt);
    softbed::RunSummary sum = driver.run(outdir);
    if (!save_ckpt.empty()) driver.save_checkpoint(save_ckpt);

    nlohmann::json manifest;
    manifest["scenario"] = args.scenario_path;
    manifest["overrides"] = args.overrides;
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(cfg.hash()));
    manifest["config_hash"] = hash;
    manifest["seed"] = seed;
    manifest["t_final"] = sum.t_final;
    manifest["steps"] = sum.steps;
    manifest["melt_triggered"] = sum.melt_triggered;
    manifest["trigger_time"] = sum.trigger_time;
    manifest["bed_shrinkage"] = sum.bed_shrinkage;
    manifest["zone_pressure_drop"] = sum.final_zone_dp;
    const std::string text = manifest.dump(2);
    if (!outdir.empty()) {
        auto out = softbed::open_output(outdir + "/manifest.json");
        out << text << '\n';
    }
    std::cout << text << '\n';
    return 0;
}

int cmd_grid_study(const CommonArgs& args, std::vector<int> factors, int steps,
                   const std::string& out_path) {
    softbed::Scenario sc = softbed::build_scenario(load_config(args));
    if (factors.empty()) factors = {1, 2, 3, 4};
    auto rows = softbed::grid_study(sc, factors, steps);
    std::ostringstream os;
    os << "nx,ny,peak_speed,l2_vs_finest\n";
    for (const auto& r : rows)
        os << r.nx << ',' << r.ny << ',' << r.peak_speed << ',' << r.l2_vs_finest << '\n';
    if (!out_path.empty()) {
        auto out = softbed::open_output(out_path);
        out << os.str();
    }
    std::cout << os.str();
    return 0;
}

int cmd_shrinkage(const CommonArgs& args, std::uint64_t seed) {
    softbed::Scenario sc = softbed::build_scenario(load_config(args));
    softbed::DemSystem dem(softbed::SimDriver::material_table(sc), sc.gravity);
    softbed::generate_packing(dem, sc, seed);
    const double h0 = softbed::bed_height(dem);
    softbed::apply_load(dem, sc);
    const double h1 = softbed::bed_height(dem);
    std::printf("settled height %.6f m, loaded height %.6f m, shrinkage %.4f%%\n", h0, h1,
                100.0 * softbed::bed_shrinkage(h0, h1));
    return 0;
}

int cmd_postprocess(const std::string& probes_path) {
    std::ifstream in(probes_path);
    if (!in) throw std::runtime_error("cannot open " + probes_path);
    std::string header, line, last;
    if (!std::getline(in, header)) throw std::runtime_error("empty probe file");
    long rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) {
            last = line;
            ++rows;
        }
    if (rows == 0) throw std::runtime_error("probe file has no data rows");
    std::printf("%ld sample(s)\ncolumns: %s\nfinal:   %s\n", rows, header.c_str(),
                last.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"softbed: coupled packed-bed softening simulator"};
    app.require_subcommand(1);

    CommonArgs validate_args, run_args, grid_args, shrink_args;
    std::string outdir, save_ckpt, restore_ckpt, grid_out, probes_path;
    std::uint64_t seed = 42, shrink_seed = 42;
    std::vector<int> factors;
    int grid_steps = 200;

    auto* validate = app.add_subcommand("validate", "parse and check a scenario");
    add_common(validate, validate_args);

    auto* run = app.add_subcommand("run", "run a coupled simulation");
    add_common(run, run_args);
    run->add_option("--out", outdir, "output directory");
    run->add_option("--seed", seed, "packing seed");
    run->add_option("--save-checkpoint", save_ckpt, "write final state here");
    run->add_option("--restore-checkpoint", restore_ckpt, "resume from this state");

    auto* grid = app.add_subcommand("grid-study", "gas-only grid refinement study");
    add_common(grid, grid_args);
    grid->add_option("--factors", factors, "refinement factors, e.g. 1 2 3 4");
    grid->add_option("--steps", grid_steps, "gas steps per resolution");
    grid->add_option("--out", grid_out, "CSV output path");

    auto* shrink = app.add_subcommand("shrinkage", "mechanical pack-and-load check");
    add_common(shrink, shrink_args);
    shrink->add_option("--seed", shrink_seed, "packing seed");

    auto* post = app.add_subcommand("postprocess", "summarize a probe CSV");
    post->add_option("probes", probes_path, "probes.csv from a run")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1; // bad arguments count as validation errors
    }

    try {
        if (*validate) return cmd_validate(validate_args);
        if (*run) return cmd_run(run_args, outdir, seed, save_ckpt, restore_ckpt);
        if (*grid) return cmd_grid_study(grid_args, factors, grid_steps, grid_out);
        if (*shrink) return cmd_shrinkage(shrink_args, shrink_seed);
        if (*post) return cmd_postprocess(probes_path);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        // configuration problems exit 1, runtime aborts exit 2
        const std::string what = e.what();
        if (what.find("scenario") != std::string::npos ||
            what.find("parse") != std::string::npos ||
            what.find("cannot open") != std::string::npos ||
            what.find("unknown") != std::string::npos)
            return 1;
        return 2;
    }
    return 1;
}
