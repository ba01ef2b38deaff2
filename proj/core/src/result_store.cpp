#include "gaussperc/result_store.hpp"

#include <fcntl.h>
#include <openssl/evp.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <system_error>

#include <fmt/format.h>

#include "gaussperc/error.hpp"

#ifndef GAUSSPERC_VERSION
#define GAUSSPERC_VERSION "unknown"
#endif

namespace gaussperc {
namespace fs = std::filesystem;
namespace {

constexpr const char* kLockName = ".lock";
constexpr const char* kManifest = "manifest.json";

class Digest {
 public:
  Digest() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 init failed");
  }
  ~Digest() { EVP_MD_CTX_free(ctx_); }
  void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx_, data, n); }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_, md.data(), &len);
    std::string out;
    for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", md[i]);
    return out;
  }

 private:
  EVP_MD_CTX* ctx_;
};

}  // namespace

std::string_view code_version() { return GAUSSPERC_VERSION; }

std::string sha256_hex(std::string_view bytes) {
  Digest d;
  d.update(bytes.data(), bytes.size());
  return d.hex();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  Digest d;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    d.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return d.hex();
}

std::string run_id(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  c.threads = 1;
  c.output_dir = "out";
  return sha256_hex(serialize(c) + std::string(code_version())).substr(0, 16);
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ResultStore::ResultStore(const fs::path& root, const ExperimentConfig& config)
    : config_(config), id_(run_id(config)), dir_(root / id_), started_(utc_timestamp()) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw std::runtime_error("cannot create " + dir_.string() + ": " + ec.message());
  const fs::path lock = dir_ / kLockName;
  lock_fd_ = ::open(lock.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (lock_fd_ < 0) throw std::runtime_error("cannot open lock file " + lock.string());
  if (::flock(lock_fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(lock_fd_);
    lock_fd_ = -1;
    throw std::runtime_error("run directory " + dir_.string() + " is locked by another process");
  }
  // Start clean: the manifest goes first so a crash mid-cleanup still reads as partial.
  fs::remove(dir_ / kManifest, ec);
  for (const auto& entry : fs::directory_iterator(dir_))
    if (entry.path().filename() != kLockName) fs::remove_all(entry.path());
}

ResultStore::~ResultStore() {
  if (lock_fd_ >= 0) {
    ::flock(lock_fd_, LOCK_UN);
    ::close(lock_fd_);
  }
}

fs::path ResultStore::artifact(const std::string& name) {
  if (name.empty() || name == kManifest || name == kLockName || fs::path(name).is_absolute())
    throw std::invalid_argument("invalid artifact name '" + name + "'");
  if (std::find(artifacts_.begin(), artifacts_.end(), name) == artifacts_.end()) artifacts_.push_back(name);
  const fs::path p = dir_ / name;
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  return p;
}

void ResultStore::write_text(const std::string& name, std::string_view text) {
  std::ofstream out(artifact(name), std::ios::binary | std::ios::trunc);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("write to " + name + " failed");
}

void ResultStore::write_json(const std::string& name, const nlohmann::ordered_json& j) {
  write_text(name, j.dump(2) + "\n");
}

void ResultStore::finalize() {
  nlohmann::ordered_json m;
  m["run_id"] = id_;
  m["config"] = to_json(config_);
  m["code_version"] = std::string(code_version());
  m["started"] = started_;
  m["finished"] = utc_timestamp();
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  for (const auto& name : artifacts_) {
    nlohmann::ordered_json a;
    a["path"] = name;
    a["sha256"] = sha256_file(dir_ / name);
    list.push_back(a);
  }
  m["artifacts"] = list;
  nlohmann::ordered_json rng;
  rng["generator"] = "philox4x32-10";
  rng["key"] = "seed (64 bits, low word first)";
  rng["counter"] = "(position within stream: 64 bits, stream id: 64 bits)";
  rng["stream_id"] = "(tag << 56) xor trial; tags field=1 bernoulli=2 sites=3 bootstrap=4 property=5";
  rng["normals"] = "Box-Muller on 53-bit uniforms";
  m["rng"] = rng;

  const fs::path tmp = dir_ / (std::string(kManifest) + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << m.dump(2) << "\n";
    out.flush();
    if (!out) throw std::runtime_error("cannot write manifest");
  }
  fs::rename(tmp, dir_ / kManifest);
}

}  // namespace gaussperc
