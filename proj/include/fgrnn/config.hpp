#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "fgrnn/data.hpp"
#include "fgrnn/training.hpp"

namespace fgrnn {

/// Every knob the command-line tool understands. Text form is one
/// `key = value` per line; '#' starts a comment.
struct RunConfig {
    TrainConfig train;
    SyntheticConfig synthetic;
    GraphSource graph_source = GraphSource::first_frame;

    // stability sweep
    std::vector<double> alpha_grid{0.0, 0.25, 0.5, 0.75, 1.0};
    std::vector<double> beta_grid{0.0, 0.25, 0.5, 0.75, 1.0};
    std::vector<std::size_t> T_grid{4, 8, 12};
    double stab_u = 1.0;
    std::size_t stab_nodes = 32;

    // sweep-T
    std::vector<std::size_t> T_list{5, 10, 20};
    std::vector<std::uint64_t> seeds;  // empty: use train.seed only

    /// Applies one override; throws ConfigError on an unknown key or bad value.
    void set(std::string_view key, std::string_view value);
    static const std::vector<std::string>& known_keys();
};

RunConfig parse_config(std::istream& is);
RunConfig load_config(const std::string& path);

/// "key=value" (a leading "--" is allowed).
void apply_override(RunConfig& cfg, std::string_view assignment);

void write_config(std::ostream& os, const RunConfig& cfg);

}  // namespace fgrnn
