#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "pseudotherm/config.hpp"

namespace pt {

struct Check {
    std::string name;
    double value = 0;
    std::string relation;  // "<", "<=", ">", ">="
    double limit = 0;
    bool pass = false;
};

struct RunSummary {
    std::string subcommand;
    std::string config_hash;
    std::vector<std::string> files;
    std::vector<Check> checks;
    std::vector<std::string> warnings;
    std::vector<std::pair<std::string, std::string>> info;
    std::string error_kind, error_message;

    bool ok() const;
    // machine-readable, key order fixed
    std::string to_json() const;
};

struct RunOptions {
    std::string output_directory;
    bool svg = false;
    std::size_t workers = 1;
};

const std::vector<std::string>& subcommands();

// Runs one subcommand; numerical errors propagate as pt::Error with the
// failing sweep point appended to the message.
RunSummary run(const std::string& subcommand, const ExperimentConfig& config, const RunOptions& options);

// Evaluates f(0..n-1) on up to `workers` threads; results come back in index
// order and the lowest-index failure is rethrown.
template <class T>
std::vector<T> parallel_map(std::size_t n, std::size_t workers, const std::function<T(std::size_t)>& f);

}  // namespace pt

#include "pseudotherm/parallel.hpp"
