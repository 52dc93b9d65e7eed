#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "pseudotherm/errors.hpp"
#include "pseudotherm/output.hpp"
#include "pseudotherm/runner.hpp"

// exit codes: 0 all checks pass, 1 a check failed, 2 bad usage or config,
// 3 numerical error
int main(int argc, char** argv) {
    CLI::App app{"pseudotherm: pseudo-hermitian quantum thermodynamics experiments"};
    app.set_version_flag("--version", std::string("pseudotherm ") + pt::kVersion);
    std::string sub, config_path, out_dir;
    bool svg = false;
    std::size_t workers = 1;
    app.add_option("subcommand", sub, "spectrum | metric | evolve | work | jarzynski | carnot | fig1-left | "
                                      "fig1-right | fig2-left | fig2-right")
        ->required()
        ->check(CLI::IsMember(pt::subcommands()));
    app.add_option("--config", config_path, "JSON experiment file")->required();
    app.add_option("--out", out_dir, "output directory (PSEUDOTHERM_OUT overrides)");
    app.add_flag("--svg", svg, "also render SVG plots");
    app.add_option("--workers", workers, "parallel sweep workers")->check(CLI::Range(1, 256));
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    pt::RunSummary summary;
    summary.subcommand = sub;
    int rc = 0;
    pt::RunOptions opt;
    try {
        const pt::ExperimentConfig cfg = pt::load_config(config_path);
        summary.config_hash = cfg.hash;
        opt.output_directory = cfg.output_directory;
        if (!out_dir.empty()) opt.output_directory = out_dir;
        if (const char* env = std::getenv("PSEUDOTHERM_OUT"); env && *env) opt.output_directory = env;
        opt.svg = svg || cfg.emit_svg;
        opt.workers = workers;
        summary = pt::run(sub, cfg, opt);
        rc = summary.ok() ? 0 : 1;
    } catch (const pt::Error& e) {
        summary.error_kind = e.kind();
        summary.error_message = e.what();
        rc = e.kind() == "ConfigError" || e.kind() == "InvalidArgument" ? 2 : 3;
    } catch (const std::exception& e) {
        summary.error_kind = "Internal";
        summary.error_message = e.what();
        rc = 3;
    }
    const std::string json = summary.to_json();
    std::cout << json << "\n";
    if (!opt.output_directory.empty() && rc != 2) {
        try {
            pt::write_text((std::filesystem::path(opt.output_directory) / "summary.json").string(), json + "\n");
        } catch (const std::exception&) {
        }
    }
    if (rc != 0) std::cerr << "pseudotherm " << sub << ": " << (summary.error_kind.empty() ? "tolerance check failed" : summary.error_message) << "\n";
    return rc;
}
