#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pseudotherm/dynamics.hpp"
#include "pseudotherm/models.hpp"

namespace pt {

struct SweepSpec {
    std::string name;  // tau | lambda_f | beta
    std::vector<double> values;
    std::string description;  // e.g. "tau:log[0.1,30]x25"
};

struct CycleSpec {
    double T_hot = 2, T_cold = 1;
    std::size_t steps = 10000;
    std::array<ModelSpec, 4> corners;
};

// pass/fail thresholds the runner checks; every one can be overridden
struct CheckLimits {
    double jarzynski = 1e-5;
    double w_irr_floor = -1e-8;
    double w_irr_quasistatic = 1e-3;
    double partial_sum = 1e-3;
    double carnot = 1e-3;
    double carnot_excess = 1e-6;
    double first_law = 1e-6;
    double probability = 1e-9;
    double row_sum = 1e-8;
    double relaxation = 1e-12;
    double biorthonormality = 1e-10;
    double pseudo_hermiticity = 1e-8;
    double tail_mass = 1e-8;
};

struct ExperimentConfig {
    std::optional<ModelSpec> model;
    std::string matrix_file;  // resolved path; alternative to model for spectrum/metric
    std::optional<Protocol> protocol;
    double beta = 1, hbar = 1, mass = 1;
    PropagateOptions propagation;
    std::optional<SweepSpec> sweep;
    std::string output_directory = "out";
    bool emit_svg = false;
    std::uint64_t seed = 0;
    std::optional<CycleSpec> cycle;
    std::vector<std::size_t> n_max;
    std::size_t samples = 100;
    CheckLimits limits;
    std::string hash;  // 16 hex digits of the canonical config, output section excluded
};

ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<config>",
                              const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);

std::vector<double> log_grid(double from, double to, std::size_t count);
std::vector<double> linear_grid(double from, double to, std::size_t count);

}  // namespace pt
