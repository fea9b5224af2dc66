#pragma once

#include <fstream>
#include <json.hpp>
#include <string>

#include "misgen/ppo.hpp"

namespace misgen::train {

inline nlohmann::json to_json(const MetricsRecord& r) {
  return {{"step", r.step},
          {"mean_return", r.mean_return},
          {"mean_length", r.mean_length},
          {"loss_policy", r.loss_policy},
          {"loss_value", r.loss_value},
          {"entropy", r.entropy},
          {"kl_estimate", r.kl_estimate}};
}

// Append-only JSON-lines metrics file, one object per rollout.
class JsonlMetricsWriter {
 public:
  explicit JsonlMetricsWriter(const std::string& path) : out_(path, std::ios::trunc) {
    if (!out_) throw std::runtime_error("cannot open metrics file " + path);
  }
  void write(const MetricsRecord& r) {
    out_ << to_json(r).dump() << "\n";
    out_.flush();
  }

 private:
  std::ofstream out_;
};

}  // namespace misgen::train
