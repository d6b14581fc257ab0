#pragma once

#include <memory>
#include <string>
#include <string_view>

namespace vdlab {

/// Streaming MD5, 32 lowercase hex characters.
class Md5 {
 public:
  Md5();
  ~Md5();
  Md5(const Md5&) = delete;
  Md5& operator=(const Md5&) = delete;

  void update(std::string_view data);
  std::string hex();  // finalizes; update() is invalid afterwards

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One-shot digest of a buffer.
std::string md5_hex(std::string_view data);

}  // namespace vdlab
