#include "pgos/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace pgos {

using nlohmann::json;

std::string checkpoint_to_json(const Checkpoint& ckpt) {
  json out;
  out["format_version"] = 1;
  out["kind"] = ckpt.kind;
  out["config_hash"] = ckpt.config_hash;
  out["seed"] = ckpt.seed;
  out["meta"] = ckpt.meta;
  json tensors;
  for (const auto& [name, m] : ckpt.tensors) {
    json jt;
    jt["rows"] = m.rows();
    jt["cols"] = m.cols();
    std::vector<double> data;
    data.reserve(m.size());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
    jt["data"] = data;
    tensors[name] = jt;
  }
  out["tensors"] = tensors;
  return out.dump();
}

Checkpoint checkpoint_from_json(const std::string& text) {
  json in;
  try {
    in = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
  if (in.at("format_version").get<int>() != 1)
    throw ValidationError("checkpoint: unsupported format_version");
  Checkpoint ckpt;
  ckpt.kind = in.at("kind").get<std::string>();
  ckpt.config_hash = in.at("config_hash").get<std::string>();
  ckpt.seed = in.at("seed").get<std::uint64_t>();
  if (in.contains("meta"))
    ckpt.meta = in["meta"].get<std::map<std::string, double>>();
  for (const auto& [name, jt] : in.at("tensors").items()) {
    Eigen::Index rows = jt.at("rows").get<Eigen::Index>();
    Eigen::Index cols = jt.at("cols").get<Eigen::Index>();
    const auto& data = jt.at("data");
    if (static_cast<Eigen::Index>(data.size()) != rows * cols)
      throw ValidationError("checkpoint: tensor '" + name +
                            "' data does not match its shape header");
    Matrix m(rows, cols);
    std::size_t at = 0;
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = data[at++].get<double>();
    ckpt.tensors[name] = std::move(m);
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot write " + path);
  f << checkpoint_to_json(ckpt) << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot read " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return checkpoint_from_json(ss.str());
}

void restore_tensors(
    const Checkpoint& ckpt,
    const std::vector<std::pair<std::string, Matrix*>>& slots) {
  for (const auto& [name, dst] : slots) {
    auto it = ckpt.tensors.find(name);
    if (it == ckpt.tensors.end())
      throw ValidationError("checkpoint: missing tensor '" + name + "'");
    if (it->second.rows() != dst->rows() || it->second.cols() != dst->cols())
      throw ValidationError("checkpoint: tensor '" + name +
                            "' has unexpected shape");
    *dst = it->second;
  }
}

void store_tensors(Checkpoint& ckpt,
                   const std::vector<std::pair<std::string, Matrix*>>& slots) {
  for (const auto& [name, src] : slots) ckpt.tensors[name] = *src;
}

}  // namespace pgos
