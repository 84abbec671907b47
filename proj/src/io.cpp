#include "tobs/io.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace tobs::io {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");
static_assert(std::numeric_limits<double>::is_iec559);

namespace {

constexpr std::uint32_t kDatasetVersion = 1;
constexpr std::uint32_t kModelVersion = 1;
constexpr char kDatasetMagic[8] = {'T', 'O', 'B', 'S', 'D', 'S', 'E', 'T'};
constexpr char kModelMagic[8] = {'T', 'O', 'B', 'S', 'M', 'O', 'D', 'L'};

class Writer {
 public:
  template <typename T>
  void put(const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    buf_.append(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void put_doubles(const double* p, std::size_t n) {
    buf_.append(reinterpret_cast<const char*>(p), n * sizeof(double));
  }
  void raw(const char* p, std::size_t n) { buf_.append(p, n); }
  std::string finish() {
    put(checksum(buf_));
    return std::move(buf_);
  }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(std::string_view bytes, const char (&magic)[8], std::uint32_t version, const char* what)
      : what_(what) {
    if (bytes.size() < 8 + 4 + 8) fail("file too short");
    const std::string_view body = bytes.substr(0, bytes.size() - 8);
    std::uint64_t stored;
    std::memcpy(&stored, bytes.data() + body.size(), 8);
    if (std::memcmp(bytes.data(), magic, 8) != 0) fail("bad magic");
    if (checksum(body) != stored) fail("checksum mismatch");
    data_ = body;
    pos_ = 8;
    const auto v = get<std::uint32_t>();
    if (v != version) fail("unknown version " + std::to_string(v));
  }

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void get_doubles(double* p, std::size_t n) {
    if (n > (data_.size() - pos_) / sizeof(double)) fail("truncated payload");
    std::memcpy(p, data_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
  }
  void done() const {
    if (pos_ != data_.size()) fail("trailing bytes");
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw LoadError(std::string(what_) + ": " + msg);
  }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) fail("truncated payload");
  }
  std::string_view data_;
  std::size_t pos_ = 0;
  const char* what_;
};

}  // namespace

std::uint64_t checksum(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t file_checksum(const fs::path& path) { return checksum(read_file(path)); }

void write_atomic(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw LoadError("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string encode(const deep::Dataset& d) {
  d.validate();
  Writer w;
  w.raw(kDatasetMagic, 8);
  w.put(kDatasetVersion);
  w.put(static_cast<std::uint32_t>(d.dim()));
  w.put(static_cast<std::uint64_t>(d.size()));
  w.put(d.seed);
  w.put(d.noise_sd);
  w.put(static_cast<std::uint8_t>(d.role));
  w.put(static_cast<std::uint8_t>(d.window_starts.empty() ? 0 : 1));
  w.put_doubles(d.Z.data(), static_cast<std::size_t>(d.Z.size()));
  w.put_doubles(d.labels.data(), static_cast<std::size_t>(d.labels.size()));
  for (auto s : d.window_starts) w.put(s);
  return w.finish();
}

deep::Dataset decode_dataset(std::string_view bytes) {
  Reader r(bytes, kDatasetMagic, kDatasetVersion, "dataset");
  deep::Dataset d;
  const auto p = r.get<std::uint32_t>();
  const auto n = r.get<std::uint64_t>();
  d.seed = r.get<std::uint64_t>();
  d.noise_sd = r.get<double>();
  const auto role = r.get<std::uint8_t>();
  if (role > 1) r.fail("bad role tag");
  d.role = static_cast<deep::Role>(role);
  const auto has_starts = r.get<std::uint8_t>();
  if (p == 0 || n > (bytes.size() / sizeof(double)) / p) r.fail("implausible dimensions");
  d.Z.resize(p, static_cast<Eigen::Index>(n));
  r.get_doubles(d.Z.data(), static_cast<std::size_t>(d.Z.size()));
  d.labels.resize(static_cast<Eigen::Index>(n));
  r.get_doubles(d.labels.data(), n);
  if (has_starts) {
    d.window_starts.resize(n);
    for (auto& s : d.window_starts) s = r.get<std::int32_t>();
  }
  r.done();
  return d;
}

std::string encode(const deep::Mlp& net) {
  net.validate();
  Writer w;
  w.raw(kModelMagic, 8);
  w.put(kModelVersion);
  w.put(static_cast<std::uint8_t>(net.activation));
  w.put(static_cast<std::uint8_t>(net.linear_output ? 1 : 0));
  w.put(static_cast<std::uint32_t>(net.layers.size()));
  for (const auto& l : net.layers) {
    w.put(static_cast<std::uint32_t>(l.W.rows()));
    w.put(static_cast<std::uint32_t>(l.W.cols()));
  }
  w.put_doubles(net.input_mean.data(), static_cast<std::size_t>(net.input_mean.size()));
  w.put_doubles(net.input_scale.data(), static_cast<std::size_t>(net.input_scale.size()));
  w.put(net.output_offset);
  w.put(net.output_scale);
  const Vector theta = net.parameters();  // row-major W, then b, per layer
  w.put_doubles(theta.data(), static_cast<std::size_t>(theta.size()));
  return w.finish();
}

deep::Mlp decode_mlp(std::string_view bytes) {
  Reader r(bytes, kModelMagic, kModelVersion, "model");
  deep::Mlp net;
  const auto act = r.get<std::uint8_t>();
  if (act > 2) r.fail("bad activation tag");
  net.activation = static_cast<deep::Activation>(act);
  net.linear_output = r.get<std::uint8_t>() != 0;
  const auto L = r.get<std::uint32_t>();
  if (L == 0 || L > 4096) r.fail("implausible layer count");
  for (std::uint32_t k = 0; k < L; ++k) {
    const auto rows = r.get<std::uint32_t>();
    const auto cols = r.get<std::uint32_t>();
    if (rows == 0 || cols == 0 || rows > (1u << 20) || cols > (1u << 20)) r.fail("implausible layer shape");
    net.layers.push_back({Matrix::Zero(rows, cols), Vector::Zero(rows)});
  }
  const auto p = net.input_dim();
  net.input_mean.resize(p);
  net.input_scale.resize(p);
  r.get_doubles(net.input_mean.data(), static_cast<std::size_t>(p));
  r.get_doubles(net.input_scale.data(), static_cast<std::size_t>(p));
  net.output_offset = r.get<double>();
  net.output_scale = r.get<double>();
  Vector theta(net.parameter_count());
  r.get_doubles(theta.data(), static_cast<std::size_t>(theta.size()));
  r.done();
  net.set_parameters(theta);
  try {
    net.validate();
  } catch (const InvalidInput& e) {
    r.fail(e.what());
  }
  return net;
}

void save(const fs::path& path, const deep::Dataset& d) { write_atomic(path, encode(d)); }
void save(const fs::path& path, const deep::Mlp& net) { write_atomic(path, encode(net)); }
deep::Dataset load_dataset(const fs::path& path) { return decode_dataset(read_file(path)); }
deep::Mlp load_mlp(const fs::path& path) { return decode_mlp(read_file(path)); }

void save(const fs::path& path, const Trajectory& traj) {
  std::ostringstream os;
  write_csv(os, traj);
  write_atomic(path, os.str());
}

Trajectory load_trajectory(const fs::path& path) {
  std::istringstream is(read_file(path));
  return read_trajectory_csv(is);
}

namespace {

nlohmann::json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return v;
}

double number(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw LoadError("bad numeric string '" + s + "'");
  }
  return j.get<double>();
}

}  // namespace

nlohmann::json to_json(const observability::ObservabilityReport& r) {
  nlohmann::json j;
  j["index"] = number(r.index);
  j["min_eig_G"] = number(r.min_eig_G);
  j["maximizer"] = std::vector<double>(r.maximizer.data(), r.maximizer.data() + r.maximizer.size());
  j["diagnostics"] = {{"effective_rank", r.effective_rank},
                      {"cutoff", number(r.cutoff)},
                      {"min_retained_eig", number(r.min_retained_eig)},
                      {"null_leak", number(r.null_leak)}};
  return j;
}

observability::ObservabilityReport report_from_json(const nlohmann::json& j) {
  observability::ObservabilityReport r;
  try {
    r.index = number(j.at("index"));
    r.min_eig_G = number(j.at("min_eig_G"));
    const auto v = j.at("maximizer").get<std::vector<double>>();
    r.maximizer = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
    const auto& d = j.at("diagnostics");
    r.effective_rank = d.at("effective_rank").get<int>();
    r.cutoff = number(d.at("cutoff"));
    r.min_retained_eig = number(d.at("min_retained_eig"));
    r.null_leak = number(d.at("null_leak"));
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("report: ") + e.what());
  }
  return r;
}

void save(const fs::path& path, const observability::ObservabilityReport& r) {
  write_atomic(path, to_json(r).dump(2) + "\n");
}

observability::ObservabilityReport load_report(const fs::path& path) {
  try {
    return report_from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("report: ") + e.what());
  }
}

std::string dataset_csv(const deep::Dataset& d) {
  std::ostringstream os;
  os.precision(17);
  os << "s,label";
  for (int i = 1; i <= d.dim(); ++i) os << ",z_" << i;
  os << '\n';
  for (Eigen::Index j = 0; j < d.size(); ++j) {
    os << (d.window_starts.empty() ? 0 : d.window_starts[static_cast<std::size_t>(j)]) << ','
       << d.labels[j];
    for (Eigen::Index i = 0; i < d.Z.rows(); ++i) os << ',' << d.Z(i, j);
    os << '\n';
  }
  return os.str();
}

void ExperimentManifest::add_artifact(const fs::path& root, const fs::path& relative) {
  const std::string bytes = read_file(root / relative);
  artifacts.push_back({relative.generic_string(), checksum(bytes), bytes.size()});
}

namespace {
std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}
}  // namespace

nlohmann::json to_json(const ExperimentManifest& m) {
  nlohmann::json j;
  j["format"] = "tobs-manifest/1";
  j["command"] = m.command;
  j["code_version"] = m.code_version;
  j["created_utc"] = m.created_utc;
  j["config"] = m.config;
  j["seeds"] = m.seeds;
  j["results"] = m.results;
  j["artifacts"] = nlohmann::json::array();
  for (const auto& a : m.artifacts)
    j["artifacts"].push_back({{"path", a.path}, {"checksum", hex64(a.checksum)}, {"bytes", a.bytes}});
  return j;
}

ExperimentManifest manifest_from_json(const nlohmann::json& j) {
  ExperimentManifest m;
  try {
    if (j.at("format").get<std::string>() != "tobs-manifest/1") throw LoadError("manifest: unknown format");
    m.command = j.at("command").get<std::string>();
    m.code_version = j.at("code_version").get<std::string>();
    m.created_utc = j.at("created_utc").get<std::string>();
    m.config = j.at("config");
    m.seeds = j.at("seeds");
    m.results = j.at("results");
    for (const auto& a : j.at("artifacts"))
      m.artifacts.push_back({a.at("path").get<std::string>(),
                             std::stoull(a.at("checksum").get<std::string>(), nullptr, 16),
                             a.at("bytes").get<std::uint64_t>()});
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("manifest: ") + e.what());
  }
  return m;
}

void save(const fs::path& path, const ExperimentManifest& m) {
  write_atomic(path, to_json(m).dump(2) + "\n");
}

ExperimentManifest load_manifest(const fs::path& path) {
  try {
    return manifest_from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("manifest: ") + e.what());
  }
}

std::vector<std::string> verify_manifest(const ExperimentManifest& m, const fs::path& root) {
  std::vector<std::string> problems;
  for (const auto& a : m.artifacts) {
    const fs::path p = root / a.path;
    if (!fs::exists(p)) {
      problems.push_back("missing artifact " + a.path);
      continue;
    }
    if (file_checksum(p) != a.checksum) problems.push_back("checksum mismatch for " + a.path);
  }
  return problems;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace tobs::io
