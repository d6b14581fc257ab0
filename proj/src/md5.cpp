#include "vdlab/md5.hpp"

#include <openssl/evp.h>

#include <array>
#include <stdexcept>

namespace vdlab {

struct Md5::Impl {
  EVP_MD_CTX* ctx = nullptr;
};

Md5::Md5() : impl_(std::make_unique<Impl>()) {
  impl_->ctx = EVP_MD_CTX_new();
  if (!impl_->ctx || EVP_DigestInit_ex(impl_->ctx, EVP_md5(), nullptr) != 1)
    throw std::runtime_error("md5 init failed");
}

Md5::~Md5() {
  if (impl_ && impl_->ctx) EVP_MD_CTX_free(impl_->ctx);
}

void Md5::update(std::string_view data) {
  if (EVP_DigestUpdate(impl_->ctx, data.data(), data.size()) != 1)
    throw std::runtime_error("md5 update failed");
}

std::string Md5::hex() {
  std::array<unsigned char, EVP_MAX_MD_SIZE> raw{};
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(impl_->ctx, raw.data(), &len) != 1)
    throw std::runtime_error("md5 final failed");
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(digits[raw[i] >> 4]);
    out.push_back(digits[raw[i] & 0xf]);
  }
  return out;
}

std::string md5_hex(std::string_view data) {
  Md5 h;
  h.update(data);
  return h.hex();
}

}  // namespace vdlab
