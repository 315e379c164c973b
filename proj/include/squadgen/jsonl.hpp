#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace squadgen {

// Append-only JSON-lines writer. All pipeline provenance and decision
// logs go through one of these; writes are flushed per line so a crashed
// run leaves a usable prefix.
class JsonlWriter {
 public:
  explicit JsonlWriter(const std::string& path, bool append = false)
      : out_(path, append ? std::ios::app : std::ios::trunc) {
    if (!out_) throw std::runtime_error("cannot open for writing: " + path);
  }

  void write(const nlohmann::json& j) {
    out_ << j.dump() << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
};

inline std::vector<nlohmann::json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::vector<nlohmann::json> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(nlohmann::json::parse(line));
  }
  return out;
}

}  // namespace squadgen
