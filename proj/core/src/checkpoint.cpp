#include "ratex/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace ratex {

namespace {

constexpr std::array<char, 8> kMagic{'R', 'A', 'T', 'E', 'X', 'C', 'K', 'P'};

template <class T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) throw FormatError("checkpoint: truncated file");
  return value;
}

}  // namespace

void write_tensors(std::ostream& out, const std::vector<NamedTensor>& tensors) {
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.value.rank()));
    for (auto d : t.value.shape()) put<std::uint64_t>(out, d);
    const auto data = t.value.data();
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size_bytes()));
  }
  if (!out) throw FormatError("checkpoint: write failed");
}

std::vector<NamedTensor> read_tensors(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw FormatError("checkpoint: bad magic");
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  const auto count = get<std::uint32_t>(in);
  std::vector<NamedTensor> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name.resize(get<std::uint32_t>(in));
    if (!in.read(t.name.data(), static_cast<std::streamsize>(t.name.size()))) {
      throw FormatError("checkpoint: truncated file");
    }
    Shape shape(get<std::uint32_t>(in));
    for (auto& d : shape) d = get<std::uint64_t>(in);
    t.value = Tensor(shape);
    auto data = t.value.data();
    if (!in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size_bytes()))) {
      throw FormatError("checkpoint: truncated tensor '" + t.name + "'");
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << value;
  return s.str();
}

std::string file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return hex64(fnv1a(buf.str()));
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw FormatError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::filesystem::path checkpoint_stem(const std::filesystem::path& path) {
  auto ext = path.extension();
  if (ext == ".ckpt" || ext == ".json") return std::filesystem::path(path).replace_extension();
  return path;
}

void save_checkpoint(const std::filesystem::path& stem, const Checkpoint& checkpoint, const nlohmann::json& extra) {
  std::ostringstream bin;
  write_tensors(bin, checkpoint.tensors);
  nlohmann::ordered_json sidecar;
  sidecar["epoch"] = checkpoint.epoch;
  sidecar["dev_report"] = nlohmann::json(checkpoint.dev_report);
  sidecar["seconds"] = checkpoint.seconds;
  for (const auto& [key, value] : extra.items()) sidecar[key] = value;
  auto bin_path = stem, json_path = stem;
  bin_path += ".ckpt";
  json_path += ".json";
  write_file_atomic(bin_path, bin.str());
  write_file_atomic(json_path, sidecar.dump(2) + "\n");
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& stem) {
  auto bin_path = stem, json_path = stem;
  bin_path += ".ckpt";
  json_path += ".json";
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw FormatError("cannot open checkpoint " + bin_path.string());
  std::ifstream side(json_path);
  if (!side) throw FormatError("cannot open checkpoint sidecar " + json_path.string());
  LoadedCheckpoint out;
  out.checkpoint.tensors = read_tensors(bin);
  try {
    out.sidecar = nlohmann::json::parse(side);
    out.checkpoint.epoch = out.sidecar.at("epoch").get<std::size_t>();
    out.checkpoint.dev_report = out.sidecar.at("dev_report").get<EvalReport>();
    out.checkpoint.seconds = out.sidecar.at("seconds").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint sidecar " + json_path.string() + ": " + e.what());
  }
  return out;
}

void write_predictions(std::ostream& out, std::span<const Prediction> predictions) {
  for (const auto& p : predictions) {
    nlohmann::ordered_json j;
    j["doc_id"] = p.doc_id;
    j["y_hat"] = p.y_hat;
    j["token_scores"] = p.token_scores;
    j["binary_rationale"] = p.binary_rationale;
    out << j.dump() << '\n';
  }
}

void write_predictions(const std::filesystem::path& path, std::span<const Prediction> predictions) {
  std::ostringstream buf;
  write_predictions(buf, predictions);
  write_file_atomic(path, buf.str());
}

std::vector<Prediction> read_predictions(std::istream& in) {
  std::vector<Prediction> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Prediction p;
      p.doc_id = j.at("doc_id").get<std::string>();
      p.y_hat = j.at("y_hat").get<double>();
      p.token_scores = j.at("token_scores").get<std::vector<double>>();
      p.binary_rationale = j.at("binary_rationale").get<std::vector<int>>();
      if (p.binary_rationale.size() != p.token_scores.size()) {
        throw FormatError("token_scores and binary_rationale lengths differ");
      }
      out.push_back(std::move(p));
    } catch (const std::exception& e) {
      throw FormatError("predictions line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Prediction> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open predictions " + path.string());
  return read_predictions(in);
}

}  // namespace ratex
