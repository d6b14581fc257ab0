#pragma once

#include <unistd.h>

#include <filesystem>
#include <string>
#include <vector>

#include "vdlab/corpus.hpp"

namespace vdlab::testing {

inline FunctionRecord rec(std::string id, std::string code, int label,
                          std::vector<int> cwes = {}, std::string pair_id = "",
                          std::string source = "test") {
  FunctionRecord r;
  r.id = std::move(id);
  r.code = std::move(code);
  r.label = label ? Label::vulnerable : Label::non_vulnerable;
  r.cwes = std::move(cwes);
  r.source = std::move(source);
  r.pair_id = std::move(pair_id);
  return r;
}

inline Corpus corpus_of(std::vector<FunctionRecord> records) {
  Corpus c;
  c.records = std::move(records);
  c.provenance.push_back({"test", "", static_cast<std::int64_t>(c.records.size())});
  return c;
}

/// Unique scratch directory, removed on destruction.
struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("vdlab_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }

  std::string file(const std::string& rel) const { return (path / rel).string(); }
};

}  // namespace vdlab::testing
