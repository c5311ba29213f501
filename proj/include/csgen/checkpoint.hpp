#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "csgen/errors.hpp"
#include "csgen/tensor.hpp"

namespace csgen::nn {

inline constexpr int kCheckpointVersion = 1;

// Versioned JSON container mapping parameter names to shape + row-major
// values. Stable across the toolkit; doubles round-trip exactly.
inline void save_checkpoint(const std::string& path, const std::vector<Parameter*>& params) {
  nlohmann::ordered_json j;
  j["format"] = "csgen-checkpoint";
  j["version"] = kCheckpointVersion;
  nlohmann::ordered_json ps;
  for (const Parameter* p : params) {
    nlohmann::ordered_json pj;
    pj["shape"] = {p->value.rows, p->value.cols};
    pj["data"] = p->value.data;
    ps[p->name] = std::move(pj);
  }
  j["params"] = std::move(ps);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out << j.dump() << '\n';
  if (!out) throw DataError("write failed: " + path);
}

inline void load_checkpoint(const std::string& path, const std::vector<Parameter*>& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed checkpoint " + path + ": " + e.what());
  }
  if (j.value("format", "") != "csgen-checkpoint")
    throw DataError("not a checkpoint file: " + path);
  if (j.value("version", -1) != kCheckpointVersion)
    throw DataError("unsupported checkpoint version in " + path);
  const auto& ps = j.at("params");
  for (Parameter* p : params) {
    auto it = ps.find(p->name);
    if (it == ps.end()) throw DataError("checkpoint missing parameter: " + p->name);
    const auto shape = it->at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 2 || shape[0] != p->value.rows || shape[1] != p->value.cols)
      throw DataError("checkpoint shape mismatch for parameter: " + p->name);
    it->at("data").get_to(p->value.data);
    if (p->value.data.size() != p->value.rows * p->value.cols)
      throw DataError("checkpoint data length mismatch for parameter: " + p->name);
  }
}

}  // namespace csgen::nn
