#include "polyinr/checkpoint.hpp"

#include <unistd.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace polyinr {

using nlohmann::json;

namespace {

const char kMagic[4] = {'P', 'I', 'N', 'R'};

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ArgumentError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw ArgumentError("unknown key '" + key + "' in " + where);
  }
}

class Writer {
 public:
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void bytes(const std::string& s) { out_ += s; }
  void f32(float v) { put(std::bit_cast<std::uint32_t>(v), 4); }
  void record(const std::string& name, const Tensor<float>& t) {
    u32(static_cast<std::uint32_t>(name.size()));
    bytes(name);
    u32(static_cast<std::uint32_t>(t.shape().size()));
    for (std::size_t d : t.shape()) u64(d);
    for (float v : t.data()) f32(v);
  }
  std::string take() { return std::move(out_); }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& data) : data_(data) {}

  std::uint64_t uint(int n, const std::string& what) {
    need(static_cast<std::size_t>(n), what);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::string bytes(std::size_t n, const std::string& what) {
    need(n, what);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == data_.size(); }
  std::size_t remaining() const { return data_.size() - pos_; }

  void header(std::string& config_json) {
    if (data_.size() < 4) throw TruncationError("checkpoint truncated in header (magic)");
    if (std::memcmp(data_.data(), kMagic, 4) != 0) {
      throw BadMagicError("not a PINR file (bad magic)");
    }
    pos_ = 4;
    const auto version = uint(4, "header (version)");
    if (version != kCheckpointVersion) {
      throw UnsupportedVersionError("unsupported PINR version " + std::to_string(version) +
                                    " (expected " + std::to_string(kCheckpointVersion) + ")");
    }
    const auto len = uint(8, "header (config length)");
    if (len > remaining()) throw TruncationError("checkpoint truncated in header (config JSON)");
    config_json = bytes(static_cast<std::size_t>(len), "header (config JSON)");
  }

  // Reads one record and checks it against the expected name and shape.
  void record(const std::string& expected, Tensor<float>& into) {
    const std::string where = "record '" + expected + "'";
    const auto name_len = uint(4, where);
    if (name_len > remaining()) throw TruncationError("checkpoint truncated in " + where);
    const std::string name = bytes(static_cast<std::size_t>(name_len), where);
    if (name != expected) {
      throw RecordMismatchError("expected " + where + ", found '" + name + "'");
    }
    const auto rank = uint(4, where);
    if (rank != into.shape().size()) {
      throw RecordMismatchError(where + " has rank " + std::to_string(rank) + ", expected " +
                                std::to_string(into.shape().size()));
    }
    Shape shape;
    for (std::uint64_t i = 0; i < rank; ++i) {
      shape.push_back(static_cast<std::size_t>(uint(8, where)));
    }
    if (shape != into.shape()) {
      throw RecordMismatchError(where + " has shape " + shape_to_string(shape) + ", config implies " +
                                shape_to_string(into.shape()));
    }
    need(4 * into.size(), where);
    for (float& v : into.data()) v = std::bit_cast<float>(static_cast<std::uint32_t>(uint(4, where)));
  }

 private:
  void need(std::size_t n, const std::string& what) {
    if (n > remaining()) throw TruncationError("checkpoint truncated in " + what);
  }
  const std::string& data_;
  std::size_t pos_ = 0;
};

json config_json(const GeneratorConfig& c) {
  json j;
  j["z_dim"] = c.z_dim;
  j["w_dim"] = c.w_dim;
  j["levels"] = c.levels;
  j["feature_dim"] = c.feature_dim;
  j["num_classes"] = c.num_classes;
  j["class_embed_dim"] = c.class_embed_dim ? json(*c.class_embed_dim) : json(nullptr);
  j["leaky_slope"] = c.leaky_slope;
  j["test_identity_activation"] = c.test_identity_activation;
  return j;
}

template <typename V>
void get_if(const json& j, const char* key, V& out) {
  if (j.contains(key)) {
    try {
      out = j.at(key).get<V>();
    } catch (const json::exception& e) {
      throw ArgumentError(std::string("bad value for '") + key + "': " + e.what());
    }
  }
}

GeneratorConfig config_from(const json& j) {
  check_keys(j,
             {"kind", "z_dim", "w_dim", "levels", "feature_dim", "num_classes", "class_embed_dim",
              "leaky_slope", "test_identity_activation"},
             "generator config");
  GeneratorConfig c;
  get_if(j, "z_dim", c.z_dim);
  get_if(j, "w_dim", c.w_dim);
  get_if(j, "levels", c.levels);
  get_if(j, "feature_dim", c.feature_dim);
  get_if(j, "num_classes", c.num_classes);
  if (j.contains("class_embed_dim") && !j["class_embed_dim"].is_null()) {
    std::size_t e = 0;
    get_if(j, "class_embed_dim", e);
    c.class_embed_dim = e;
  }
  get_if(j, "leaky_slope", c.leaky_slope);
  get_if(j, "test_identity_activation", c.test_identity_activation);
  c.validate();
  return c;
}

json parse_header_json(const std::string& text, const std::string& kind) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint config is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    throw FormatError("checkpoint config has no kind");
  }
  if (j["kind"] != kind) {
    throw RecordMismatchError("expected a '" + kind + "' file, found '" +
                              j["kind"].get<std::string>() + "'");
  }
  return j;
}

std::string header(const json& j) {
  Writer w;
  w.bytes(std::string(kMagic, 4));
  w.u32(kCheckpointVersion);
  const std::string text = j.dump();
  w.u64(text.size());
  w.bytes(text);
  return w.take();
}

}  // namespace

std::string config_to_json(const GeneratorConfig& config) { return config_json(config).dump(2); }

GeneratorConfig config_from_json(const std::string& text) {
  try {
    return config_from(json::parse(text));
  } catch (const json::parse_error& e) {
    throw ArgumentError(std::string("invalid JSON: ") + e.what());
  }
}

std::string encode_checkpoint(const Generator& gen) {
  json j = config_json(gen.config());
  j["kind"] = "generator";
  Writer w;
  w.bytes(header(j));
  for (const auto& p : gen.parameters()) w.record(p.name, *p.tensor);
  return w.take();
}

Generator decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  std::string text;
  r.header(text);
  const json j = parse_header_json(text, "generator");
  GeneratorConfig cfg;
  try {
    cfg = config_from(j);
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("checkpoint config rejected: ") + e.what());
  }
  Generator gen(cfg);
  for (auto& p : gen.parameters()) r.record(p.name, *p.tensor);
  if (!r.done()) {
    throw RecordMismatchError(std::to_string(r.remaining()) +
                              " trailing bytes after the last record");
  }
  return gen;
}

std::string encode_affine(const AffineParams<float>& affine) {
  json j;
  j["kind"] = "affine";
  j["levels"] = affine.level_count();
  j["feature_dim"] = affine.feature_dim();
  Writer w;
  w.bytes(header(j));
  for (std::size_t i = 0; i < affine.levels.size(); ++i) {
    w.record("affine." + std::to_string(i), affine.levels[i]);
  }
  return w.take();
}

AffineParams<float> decode_affine(const std::string& bytes) {
  Reader r(bytes);
  std::string text;
  r.header(text);
  const json j = parse_header_json(text, "affine");
  std::size_t levels = 0, n = 0;
  try {
    check_keys(j, {"kind", "levels", "feature_dim"}, "affine header");
    levels = j.at("levels").get<std::size_t>();
    n = j.at("feature_dim").get<std::size_t>();
  } catch (const std::exception& e) {
    throw FormatError(std::string("affine header rejected: ") + e.what());
  }
  if (levels == 0 || n == 0) throw FormatError("affine header has zero levels or width");
  AffineParams<float> a;
  for (std::size_t i = 0; i < levels; ++i) {
    a.levels.emplace_back(Shape{n, 3});
    r.record("affine." + std::to_string(i), a.levels.back());
  }
  if (!r.done()) {
    throw RecordMismatchError(std::to_string(r.remaining()) +
                              " trailing bytes after the last record");
  }
  return a;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading " + path.string());
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  auto tmp = path;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw IoError("error writing " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move " + tmp.string() + " to " + path.string());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Generator& gen) {
  write_file_atomic(path, encode_checkpoint(gen));
}

Generator load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

void save_affine(const std::filesystem::path& path, const AffineParams<float>& affine) {
  write_file_atomic(path, encode_affine(affine));
}

AffineParams<float> load_affine(const std::filesystem::path& path) {
  return decode_affine(read_file(path));
}

}  // namespace polyinr
