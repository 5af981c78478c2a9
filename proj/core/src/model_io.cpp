#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sage/error.hpp"
#include "sage/hashing.hpp"
#include "sage/segmenter.hpp"

namespace sage {

namespace {

using json = nlohmann::json;

constexpr const char* kFormatName = "sage-seg-model";
constexpr int kFormatVersion = 1;

// Header line plus one line per layer. nlohmann emits shortest
// round-trip doubles, so parameters survive save/load bit for bit.
std::string serialize_model(const SegmentationModel& m) {
  json header = {
      {"format", kFormatName},
      {"format_version", kFormatVersion},
      {"embed_dim", m.embed_dim},
      {"feature_mode", to_string(m.feature_mode)},
      {"layer_dims", m.layer_dims},
  };
  json acts = json::array();
  for (Activation a : m.activations) acts.push_back(to_string(a));
  header["activations"] = acts;

  std::ostringstream out;
  out << header.dump() << '\n';
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    json layer = {{"layer", l}, {"weights", m.weights[l]}, {"biases", m.biases[l]}};
    out << layer.dump() << '\n';
  }
  return out.str();
}

}  // namespace

void save_model(const SegmentationModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open model file for writing: " + path);
  out << serialize_model(model);
  out.flush();
  if (!out) throw IoError("short write to model file: " + path);
}

SegmentationModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw IoError("model file is empty: " + path);

  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw IoError("model header is not JSON: " + std::string(e.what()));
  }
  if (header.value("format", "") != kFormatName) {
    throw IoError("not a segmentation model file: " + path);
  }
  const int version = header.value("format_version", -1);
  if (version != kFormatVersion) {
    throw VersionMismatchError("model format version " +
                               std::to_string(version) + ", this build reads " +
                               std::to_string(kFormatVersion));
  }

  SegmentationModel m;
  try {
    m.embed_dim = header.at("embed_dim").get<std::size_t>();
    m.feature_mode =
        feature_mode_from_string(header.at("feature_mode").get<std::string>());
    m.layer_dims = header.at("layer_dims").get<std::vector<std::size_t>>();
    for (const auto& name : header.at("activations")) {
      m.activations.push_back(activation_from_string(name.get<std::string>()));
    }
  } catch (const json::exception& e) {
    throw IoError("model header is malformed: " + std::string(e.what()));
  }

  std::size_t layer = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json row;
    try {
      row = json::parse(line);
      if (row.value("layer", SIZE_MAX) != layer) {
        throw CorruptModelError("model layers out of order at index " +
                                std::to_string(layer));
      }
      m.weights.push_back(row.at("weights").get<std::vector<double>>());
      m.biases.push_back(row.at("biases").get<std::vector<double>>());
    } catch (const json::exception& e) {
      throw CorruptModelError("model layer " + std::to_string(layer) +
                              " is malformed: " + e.what());
    }
    ++layer;
  }

  // Reuse the public forward-pass validation: shape then finiteness.
  if (m.layer_dims.size() < 2 ||
      m.weights.size() != m.layer_dims.size() - 1 ||
      m.activations.size() != m.weights.size() ||
      m.biases.size() != m.weights.size()) {
    throw CorruptModelError("model file has inconsistent layer structure");
  }
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    if (m.weights[l].size() != m.layer_dims[l] * m.layer_dims[l + 1] ||
        m.biases[l].size() != m.layer_dims[l + 1]) {
      throw CorruptModelError("parameter sizes disagree with layer dims");
    }
  }
  for (const auto& block : m.weights) {
    for (double w : block) {
      if (!std::isfinite(w)) throw CorruptModelError("non-finite weight in file");
    }
  }
  for (const auto& block : m.biases) {
    for (double b : block) {
      if (!std::isfinite(b)) throw CorruptModelError("non-finite bias in file");
    }
  }
  return m;
}

std::string model_fingerprint(const SegmentationModel& model) {
  return to_hex(fnv1a64(serialize_model(model)));
}

}  // namespace sage
