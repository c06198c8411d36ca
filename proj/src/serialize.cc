// Copyright 2026 The AdLM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "adlm/serialize.h"

#include <openssl/evp.h>
#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "absl/strings/str_cat.h"

namespace adlm {
namespace {

constexpr uint64_t kMaxTensorElements = uint64_t{1} << 34;
constexpr uint32_t kMaxRank = 8;

template <class T>
void AppendLittleEndian(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(buf, buf + sizeof(T));
  }
  out.append(buf, sizeof(T));
}

template <class T>
T FromLittleEndian(const char* p) {
  char buf[sizeof(T)];
  std::memcpy(buf, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(buf, buf + sizeof(T));
  }
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

}  // namespace

void BinaryWriter::U32(uint32_t v) { AppendLittleEndian(out_, v); }
void BinaryWriter::U64(uint64_t v) { AppendLittleEndian(out_, v); }
void BinaryWriter::F64(double v) { AppendLittleEndian(out_, v); }

void BinaryWriter::String(std::string_view s) {
  U64(s.size());
  out_.append(s);
}

void BinaryWriter::WriteTensor(const Tensor& t) {
  U32(static_cast<uint32_t>(t.rank()));
  for (size_t d : t.shape()) U64(d);
  for (double v : t.data()) F64(v);
}

absl::Status BinaryReader::Take(size_t n, const char* what, const char** out) {
  if (data_.size() - offset_ < n) {
    return absl::DataLossError(absl::StrCat(source_, ": truncated at offset ",
                                            offset_, " while reading ", what));
  }
  *out = data_.data() + offset_;
  offset_ += n;
  return absl::OkStatus();
}

absl::Status BinaryReader::Expect(std::string_view magic) {
  const char* p = nullptr;
  if (absl::Status s = Take(magic.size(), "magic", &p); !s.ok()) return s;
  if (std::string_view(p, magic.size()) != magic) {
    return absl::InvalidArgumentError(absl::StrCat(
        source_, ": bad magic, expected '", std::string(magic), "'"));
  }
  return absl::OkStatus();
}

absl::StatusOr<uint32_t> BinaryReader::U32() {
  const char* p = nullptr;
  if (absl::Status s = Take(4, "u32", &p); !s.ok()) return s;
  return FromLittleEndian<uint32_t>(p);
}

absl::StatusOr<uint64_t> BinaryReader::U64() {
  const char* p = nullptr;
  if (absl::Status s = Take(8, "u64", &p); !s.ok()) return s;
  return FromLittleEndian<uint64_t>(p);
}

absl::StatusOr<double> BinaryReader::F64() {
  const char* p = nullptr;
  if (absl::Status s = Take(8, "f64", &p); !s.ok()) return s;
  return FromLittleEndian<double>(p);
}

absl::StatusOr<std::string> BinaryReader::String() {
  auto n = U64();
  if (!n.ok()) return n.status();
  const char* p = nullptr;
  if (absl::Status s = Take(*n, "string", &p); !s.ok()) return s;
  return std::string(p, *n);
}

absl::StatusOr<Tensor> BinaryReader::ReadTensor() {
  const size_t start = offset_;
  auto rank = U32();
  if (!rank.ok()) return rank.status();
  if (*rank > kMaxRank) {
    return absl::DataLossError(
        absl::StrCat(source_, ": offset ", start, ": bad tensor rank ", *rank));
  }
  Shape shape;
  uint64_t count = 1;
  for (uint32_t i = 0; i < *rank; ++i) {
    auto d = U64();
    if (!d.ok()) return d.status();
    shape.push_back(*d);
    count *= *d;
    if (count > kMaxTensorElements) {
      return absl::DataLossError(
          absl::StrCat(source_, ": offset ", start, ": tensor too large"));
    }
  }
  if (*rank == 0) return Tensor();
  const char* p = nullptr;
  if (absl::Status s = Take(count * 8, "tensor data", &p); !s.ok()) return s;
  std::vector<double> values(count);
  for (uint64_t i = 0; i < count; ++i) {
    values[i] = FromLittleEndian<double>(p + 8 * i);
  }
  return Tensor(std::move(shape), std::move(values));
}

absl::StatusOr<std::string> ReadFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat(path, ": cannot open"));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

absl::Status WriteFileAtomically(const std::string& path,
                                 std::string_view bytes) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(target.parent_path(), ec);
  }
  const std::string tmp = absl::StrCat(path, ".tmp.", ::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      return absl::PermissionDeniedError(
          absl::StrCat(tmp, ": cannot open for writing"));
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::remove(tmp.c_str());
      return absl::DataLossError(absl::StrCat(tmp, ": write failed"));
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    return absl::PermissionDeniedError(
        absl::StrCat(path, ": rename from temporary file failed"));
  }
  return absl::OkStatus();
}

std::string GitBlobHash(std::string_view bytes) {
  const std::string header = absl::StrCat("blob ", bytes.size());
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr);
  EVP_DigestUpdate(ctx, header.data(), header.size() + 1);  // includes NUL
  EVP_DigestUpdate(ctx, bytes.data(), bytes.size());
  EVP_DigestFinal_ex(ctx, digest, &length);
  EVP_MD_CTX_free(ctx);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned char c :
       std::string_view(reinterpret_cast<char*>(digest), length)) {
    out.push_back(kHex[c >> 4]);
    out.push_back(kHex[c & 15]);
  }
  return out;
}

}  // namespace adlm
