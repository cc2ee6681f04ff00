#include "msem/checkpoint.hpp"

#include <openssl/evp.h>

#include <fstream>

#include "msem/binio.hpp"

namespace msem {

namespace {
constexpr char kMagic[4] = {'M', 'S', 'E', 'M'};
}

void checkpoint_save(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open checkpoint for writing: " + path);
  os.write(kMagic, 4);
  binio::write_u32(os, Checkpoint::kVersion);
  binio::write_string(os, ckpt.config.dump());
  binio::write_u32(os, static_cast<uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, tensor] : ckpt.tensors) {
    binio::write_string(os, name);
    binio::write_u8(os, static_cast<uint8_t>(tensor.rank()));
    for (int64_t d : tensor.shape()) binio::write_u64(os, static_cast<uint64_t>(d));
    for (int64_t i = 0; i < tensor.size(); ++i)
      binio::write_f32(os, static_cast<float>(tensor.at(i)));
  }
  if (!os) throw IoError("write failure on checkpoint: " + path);
}

Checkpoint checkpoint_load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path);
  char magic[4];
  binio::read_exact(is, magic, 4, "magic");
  if (std::string(magic, 4) != std::string(kMagic, 4)) {
    throw MagicError("bad checkpoint magic in " + path);
  }
  const uint32_t version = binio::read_u32(is, "version");
  if (version != Checkpoint::kVersion) {
    throw VersionError("checkpoint version " + std::to_string(version) + " unsupported, expected " +
                       std::to_string(Checkpoint::kVersion));
  }
  Checkpoint ckpt;
  const std::string config_json = binio::read_string(is, "config");
  try {
    ckpt.config = nlohmann::json::parse(config_json);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(std::string("bad checkpoint config JSON: ") + e.what());
  }
  const uint32_t count = binio::read_u32(is, "tensor count");
  for (uint32_t t = 0; t < count; ++t) {
    const std::string name = binio::read_string(is, "tensor name");
    const uint8_t rank = binio::read_u8(is, "tensor rank");
    std::vector<int64_t> shape;
    int64_t size = 1;
    for (uint8_t d = 0; d < rank; ++d) {
      shape.push_back(static_cast<int64_t>(binio::read_u64(is, "tensor dim")));
      size *= shape.back();
    }
    Tensor tensor(shape);
    for (int64_t i = 0; i < size; ++i)
      tensor.at(i) = static_cast<double>(binio::read_f32(is, "tensor data"));
    ckpt.tensors[name] = std::move(tensor);
  }
  return ckpt;
}

std::string sha256_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open file for hashing: " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (is) {
    is.read(buf, sizeof(buf));
    if (is.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<size_t>(is.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

}  // namespace msem
