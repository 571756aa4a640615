#pragma once

#include "custemb/eval.hpp"
#include "custemb/synthetic.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace custemb {

/// Declarative run description. Relative paths are resolved against the directory of
/// the config file.
struct PipelineConfig {
    std::optional<std::string> input;  // transactions CSV; synthetic data when absent
    SyntheticConfig synthetic;
    ExperimentConfig experiment;
    std::string output_dir = "custemb-out";

    /// Unknown keys throw ConfigError naming the key. Ignored-but-accepted keys are
    /// appended to `warnings`.
    static PipelineConfig from_json(std::string_view text, const std::string& base_dir = ".",
                                    std::vector<std::string>* warnings = nullptr);
    static PipelineConfig load(const std::string& path, std::vector<std::string>* warnings = nullptr);

    /// Sets the synthetic, embedding, augmentation and split seeds.
    void apply_seed(std::uint64_t seed);
    void validate() const;
    /// Effective configuration with every default filled in.
    std::string to_json() const;
};

/// Runs the command-line tool. Returns the process exit status (0, 2, 3 or 4).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace custemb
