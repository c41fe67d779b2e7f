#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "fgrnn/cells.hpp"
#include "fgrnn/training.hpp"

namespace fgrnn {

/// Model snapshot tied to the graph it was trained on. Optimizer state is
/// included so that a resumed run continues bit-identically.
struct Checkpoint {
    ModelParams params;
    std::uint64_t graph_checksum = 0;
    std::size_t epochs_completed = 0;
    std::optional<AdamState> adam;
};

/// Key-value text; arrays are written as `key = f64[rows,cols] v v ...` with
/// 17 significant digits, so load(save(x)) == x exactly.
void write_checkpoint(std::ostream& os, const Checkpoint& ck);
Checkpoint read_checkpoint(std::istream& is);
void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace fgrnn
