#include "core/workspace.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <openssl/evp.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <random>

#include "core/error.hpp"

namespace lumen::workspace {

namespace fs = std::filesystem;

std::string sha256_hex(const std::string& bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
    throw Error("sha256 computation failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_file(path)); }

void atomic_write(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::random_device rd;
  const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid()) + "." + std::to_string(rd());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("failed writing '" + path.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot replace '" + path.string() + "'");
  }
}

Lock::Lock(const fs::path& root) {
  fs::create_directories(root);
  const fs::path p = root / ".lock";
  fd_ = ::open(p.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) throw IoError("cannot open lock file '" + p.string() + "': " + std::strerror(errno));
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw LockedError("workspace '" + root.string() + "' is locked by another process");
  }
}

Lock::~Lock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

Workspace::Workspace(fs::path root, bool create) : root_(std::move(root)) {
  if (create) fs::create_directories(root_);
  else if (!fs::is_directory(root_)) throw NotFoundError("workspace '" + root_.string() + "' not found");

  manifest_ = {{"version", 1},
               {"inputs", nlohmann::json::object()},
               {"params", nlohmann::json::object()},
               {"artifacts", nlohmann::json::object()}};
  const fs::path mpath = root_ / "manifest.json";
  if (!fs::exists(mpath)) return;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(mpath));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("manifest.json: " + std::string(e.what()));
  }
  if (!j.is_object()) throw ParseError("manifest.json: not an object");
  for (const char* key : {"inputs", "params", "artifacts"}) {
    if (j.contains(key) && j[key].is_object()) manifest_[key] = j[key];
  }
}

bool Workspace::exists(const std::string& name) const { return fs::is_regular_file(path(name)); }

std::string Workspace::current_sha(const std::string& name) const {
  return exists(name) ? sha256_file(path(name)) : std::string();
}

void Workspace::require_fresh(const std::string& name) const {
  if (!exists(name)) throw NotFoundError(name + " not found");
  const auto& arts = manifest_["artifacts"];
  if (!arts.contains(name)) throw StaleError(name + " is not recorded in manifest.json");
  const auto& rec = arts[name];
  if (rec.value("sha256", std::string()) != current_sha(name))
    throw StaleError(name + " was modified outside the pipeline");
  if (!rec.contains("depends")) return;
  for (const auto& [dep, sha] : rec["depends"].items()) {
    if (sha.get<std::string>() != current_sha(dep))
      throw StaleError(name + " is stale: " + dep + " changed since it was produced");
  }
}

bool Workspace::is_fresh(const std::string& name) const {
  try {
    require_fresh(name);
    return true;
  } catch (const Error&) {
    return false;
  }
}

std::string Workspace::read(const std::string& name) const {
  require_fresh(name);
  return read_file(path(name));
}

void Workspace::write(const std::string& name, const std::string& bytes, const std::vector<std::string>& depends) {
  nlohmann::json deps = nlohmann::json::object();
  for (const auto& d : depends) {
    if (!exists(d)) throw NotFoundError(d + " not found");
    deps[d] = current_sha(d);
  }
  atomic_write(path(name), bytes);
  manifest_["artifacts"][name] = {{"sha256", sha256_hex(bytes)}, {"depends", deps}};
  save_manifest();
}

void Workspace::save_manifest() { atomic_write(root_ / "manifest.json", manifest_.dump(2) + "\n"); }

}  // namespace lumen::workspace
