#pragma once

#include <string>
#include <vector>

#include "misgen/ppo.hpp"

namespace misgen::train {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// MGC1 checkpoint (byte layout in docs/FORMATS.md): header, architecture
// descriptor, rng counters and step counter, Adam scalars, then a named
// tensor table where each entry carries parameter, first-moment and
// second-moment float32 data. Writes are write-then-rename; a partial
// file is never left at the destination path.
std::vector<uint8_t> to_mgc1(const TrainState& st);
TrainState from_mgc1(const std::vector<uint8_t>& bytes);
void save_checkpoint(const TrainState& st, const std::string& path);
TrainState load_checkpoint(const std::string& path);

}  // namespace misgen::train
