#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace lumen::workspace {

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

// Writes through a sibling temp file and renames over the target, so readers
// never observe a partial file.
void atomic_write(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

// Exclusive advisory lock on <root>/.lock, held for the object's lifetime.
class Lock {
 public:
  explicit Lock(const std::filesystem::path& root);
  ~Lock();
  Lock(const Lock&) = delete;
  Lock& operator=(const Lock&) = delete;

 private:
  int fd_ = -1;
};

// File workspace with a manifest recording, for each artifact, its checksum
// and the checksums of the artifacts it was derived from.
//
// manifest.json:
//   {"version":1,"inputs":{...},"params":{...},
//    "artifacts":{"pois.csv":{"sha256":"..","depends":{"x":"sha"}}}}
class Workspace {
 public:
  // Loads the manifest when present. With `create`, the directory is made.
  explicit Workspace(std::filesystem::path root, bool create = false);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path path(const std::string& name) const { return root_ / name; }
  bool exists(const std::string& name) const;

  // Throws NotFoundError("<name> not found") when the artifact is absent and
  // StaleError when it or one of its recorded inputs changed since it was made.
  void require_fresh(const std::string& name) const;
  bool is_fresh(const std::string& name) const;

  // Verifies freshness, then returns the bytes.
  std::string read(const std::string& name) const;

  // Atomically writes an artifact and records it with the current checksums
  // of `depends`. The manifest is saved immediately.
  void write(const std::string& name, const std::string& bytes, const std::vector<std::string>& depends = {});

  nlohmann::json& params() { return manifest_["params"]; }
  const nlohmann::json& params() const { return manifest_["params"]; }
  nlohmann::json& inputs() { return manifest_["inputs"]; }
  const nlohmann::json& manifest() const { return manifest_; }
  void save_manifest();

 private:
  std::string current_sha(const std::string& name) const;

  std::filesystem::path root_;
  nlohmann::json manifest_;
};

}  // namespace lumen::workspace
