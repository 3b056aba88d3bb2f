// Copyright 2026 The caddelag Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "caddelag/blockstore.hpp"

#include <fcntl.h>
#include <unistd.h>
#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <utility>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "caddelag/error.hpp"

namespace caddelag {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little,
              "block files are written with native little-endian layout");

namespace {

constexpr const char* kMetaFile = "meta.json";

thread_local io::Sink* tls_sink = nullptr;

template <typename T>
void put(std::byte* dst, T value) {
  std::memcpy(dst, &value, sizeof(T));
}

template <typename T>
T get(const std::byte* src) {
  T value;
  std::memcpy(&value, src, sizeof(T));
  return value;
}

nlohmann::json meta_to_json(const MatrixMeta& m) {
  return {{"name", m.name},
          {"n_rows", m.n_rows},
          {"n_cols", m.n_cols},
          {"block_size", m.block_size},
          {"block_rows", m.block_rows()},
          {"block_cols", m.block_cols()},
          {"symmetric", m.symmetric},
          {"format_version", kBlockFormatVersion}};
}

MatrixMeta meta_from_json(const nlohmann::json& j) {
  MatrixMeta m;
  m.name = j.at("name").get<std::string>();
  m.n_rows = j.at("n_rows").get<std::size_t>();
  m.n_cols = j.at("n_cols").get<std::size_t>();
  m.block_size = j.at("block_size").get<std::size_t>();
  m.symmetric = j.at("symmetric").get<bool>();
  if (m.block_size == 0) throw Error(ErrorCode::kCorrupt, "meta.json: block_size must be >= 1");
  if (j.contains("block_rows") && j.at("block_rows").get<std::size_t>() != m.block_rows())
    throw Error(ErrorCode::kCorrupt, "meta.json: block_rows inconsistent with n_rows and block_size");
  if (j.contains("block_cols") && j.at("block_cols").get<std::size_t>() != m.block_cols())
    throw Error(ErrorCode::kCorrupt, "meta.json: block_cols inconsistent with n_cols and block_size");
  return m;
}

void check_meta(const MatrixMeta& m) {
  if (m.name.empty() || m.name.find('/') != std::string::npos || m.name == "." || m.name == "..")
    throw Error(ErrorCode::kInvalidArgument, fmt::format("invalid matrix name '{}'", m.name));
  if (m.block_size == 0) throw Error(ErrorCode::kInvalidArgument, "block size must be >= 1");
  if (m.n_rows == 0 || m.n_cols == 0)
    throw Error(ErrorCode::kInvalidArgument, "matrix dimensions must be positive");
}

class Fd {
 public:
  explicit Fd(int fd) : fd_(fd) {}
  ~Fd() {
    if (fd_ >= 0) ::close(fd_);
  }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  int get() const { return fd_; }
  int release() { return std::exchange(fd_, -1); }

 private:
  int fd_;
};

void write_all(int fd, const std::byte* data, std::size_t n, const fs::path& path) {
  while (n > 0) {
    ssize_t w = ::write(fd, data, n);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::kIo, fmt::format("write {}: {}", path.string(), std::strerror(errno)));
    }
    data += w;
    n -= static_cast<std::size_t>(w);
  }
}

// Reads the whole file; returns false if it does not exist.
bool slurp(const fs::path& path, std::vector<std::byte>& out) {
  Fd fd(::open(path.c_str(), O_RDONLY | O_CLOEXEC));
  if (fd.get() < 0) {
    if (errno == ENOENT) return false;
    throw Error(ErrorCode::kIo, fmt::format("open {}: {}", path.string(), std::strerror(errno)));
  }
  out.clear();
  std::size_t size = 0;
  out.resize(1 << 12);
  for (;;) {
    if (size == out.size()) out.resize(out.size() * 2);
    ssize_t r = ::read(fd.get(), out.data() + size, out.size() - size);
    if (r < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::kIo, fmt::format("read {}: {}", path.string(), std::strerror(errno)));
    }
    if (r == 0) break;
    size += static_cast<std::size_t>(r);
  }
  out.resize(size);
  return true;
}

struct Decoded {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::uint32_t stored_crc = 0;
  std::uint32_t actual_crc = 0;
};

// Parses header and payload. Throws kCorrupt on structural damage.
Decoded decode(const std::vector<std::byte>& buf, const fs::path& path, Block* out) {
  if (buf.size() < kBlockHeaderBytes || std::memcmp(buf.data(), kBlockMagic, 4) != 0)
    throw Error(ErrorCode::kCorrupt, fmt::format("{}: bad block header", path.string()));
  auto version = get<std::uint16_t>(buf.data() + 4);
  if (version != kBlockFormatVersion)
    throw Error(ErrorCode::kCorrupt,
                fmt::format("{}: unsupported block format version {}", path.string(), version));
  Decoded d;
  d.rows = get<std::uint32_t>(buf.data() + 6);
  d.cols = get<std::uint32_t>(buf.data() + 10);
  d.stored_crc = get<std::uint32_t>(buf.data() + 14);
  const std::size_t payload = d.rows * d.cols * sizeof(double);
  if (buf.size() != kBlockHeaderBytes + payload)
    throw Error(ErrorCode::kCorrupt, fmt::format("{}: truncated or oversized payload", path.string()));
  d.actual_crc = crc32({buf.data() + kBlockHeaderBytes, payload});
  if (out) {
    out->rows = d.rows;
    out->cols = d.cols;
    out->values.resize(d.rows * d.cols);
    std::memcpy(out->values.data(), buf.data() + kBlockHeaderBytes, payload);
  }
  return d;
}

}  // namespace

std::string to_string(const BlockId& id) { return fmt::format("({},{})", id.row, id.col); }

std::size_t MatrixMeta::row_extent(std::size_t i) const {
  const std::size_t start = i * block_size;
  return std::min(block_size, n_rows - start);
}

std::size_t MatrixMeta::col_extent(std::size_t j) const {
  const std::size_t start = j * block_size;
  return std::min(block_size, n_cols - start);
}

std::vector<BlockId> MatrixMeta::block_ids() const {
  std::vector<BlockId> ids;
  ids.reserve(block_count());
  for (std::size_t i = 0; i < block_rows(); ++i)
    for (std::size_t j = 0; j < block_cols(); ++j) ids.push_back({i, j});
  return ids;
}

fs::path MatrixHandle::block_path(const BlockId& id) const {
  return root / fmt::format("r{}_c{}.blk", id.row, id.col);
}

std::uint32_t crc32(std::span<const std::byte> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  const auto* p = reinterpret_cast<const Bytef*>(bytes.data());
  std::size_t left = bytes.size();
  while (left > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(left, 1u << 30));
    crc = ::crc32(crc, p, chunk);
    p += chunk;
    left -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::size_t block_file_bytes(std::size_t rows, std::size_t cols) {
  return kBlockHeaderBytes + rows * cols * sizeof(double);
}

MatrixHandle create_matrix(const fs::path& root, const MatrixMeta& meta) {
  check_meta(meta);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec)
    throw Error(ErrorCode::kIo, fmt::format("cannot create {}: {}", root.string(), ec.message()));
  const fs::path dir = root / meta.name;
  if (!fs::create_directory(dir, ec)) {
    if (ec)
      throw Error(ErrorCode::kIo, fmt::format("cannot create {}: {}", dir.string(), ec.message()));
    throw Error(ErrorCode::kPathCollision, fmt::format("matrix '{}' already exists under {}",
                                                       meta.name, root.string()));
  }
  const fs::path meta_path = dir / kMetaFile;
  std::ofstream os(meta_path, std::ios::binary);
  os << meta_to_json(meta).dump(2) << '\n';
  os.close();
  if (!os) throw Error(ErrorCode::kIo, fmt::format("cannot write {}", meta_path.string()));
  return MatrixHandle{meta, dir};
}

MatrixHandle open_matrix(const fs::path& root, const std::string& name) {
  const fs::path dir = root / name;
  std::ifstream is(dir / kMetaFile, std::ios::binary);
  if (!is)
    throw Error(ErrorCode::kIo, fmt::format("no matrix '{}' under {}", name, root.string()));
  nlohmann::json j;
  try {
    is >> j;
    MatrixMeta meta = meta_from_json(j);
    return MatrixHandle{std::move(meta), dir};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorrupt, fmt::format("{}: {}", (dir / kMetaFile).string(), e.what()));
  }
}

bool matrix_exists(const fs::path& root, const std::string& name) {
  return fs::exists(root / name / kMetaFile);
}

void remove_matrix(const MatrixHandle& h) {
  std::error_code ec;
  fs::remove_all(h.root, ec);
  if (ec) throw Error(ErrorCode::kIo, fmt::format("cannot remove {}: {}", h.root.string(), ec.message()));
}

void write_block(const MatrixHandle& h, const BlockId& id, const Block& b) {
  if (!h.meta.contains(id))
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("block {} out of range for '{}'", to_string(id), h.name()));
  const std::size_t rows = h.meta.row_extent(id.row);
  const std::size_t cols = h.meta.col_extent(id.col);
  if (b.rows != rows || b.cols != cols || b.values.size() != rows * cols)
    throw Error(ErrorCode::kDimension,
                fmt::format("block {} of '{}' must be {}x{}, got {}x{}", to_string(id), h.name(),
                            rows, cols, b.rows, b.cols));
  for (double v : b.values)
    if (!std::isfinite(v))
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("block {} of '{}' holds a non-finite value", to_string(id), h.name()));

  const std::size_t payload = b.payload_bytes();
  std::vector<std::byte> buf(kBlockHeaderBytes + payload);
  std::memcpy(buf.data(), kBlockMagic, 4);
  put<std::uint16_t>(buf.data() + 4, kBlockFormatVersion);
  put<std::uint32_t>(buf.data() + 6, static_cast<std::uint32_t>(rows));
  put<std::uint32_t>(buf.data() + 10, static_cast<std::uint32_t>(cols));
  std::memcpy(buf.data() + kBlockHeaderBytes, b.values.data(), payload);
  put<std::uint32_t>(buf.data() + 14, crc32({buf.data() + kBlockHeaderBytes, payload}));

  const fs::path path = h.block_path(id);
  Fd fd(::open(path.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_CLOEXEC, 0644));
  if (fd.get() < 0) {
    if (errno == EEXIST)
      throw Error(ErrorCode::kImmutable,
                  fmt::format("block {} of '{}' already written", to_string(id), h.name()));
    throw Error(ErrorCode::kIo, fmt::format("open {}: {}", path.string(), std::strerror(errno)));
  }
  write_all(fd.get(), buf.data(), buf.size(), path);
  if (::close(fd.release()) != 0)
    throw Error(ErrorCode::kIo, fmt::format("close {}: {}", path.string(), std::strerror(errno)));
  if (auto* sink = io::current_sink()) sink->on_write(payload);
}

Block read_block(const MatrixHandle& h, const BlockId& id) {
  if (!h.meta.contains(id))
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("block {} out of range for '{}'", to_string(id), h.name()));
  const fs::path path = h.block_path(id);
  std::vector<std::byte> buf;
  if (!slurp(path, buf))
    throw Error(ErrorCode::kMissingBlock,
                fmt::format("block {} of '{}' is missing", to_string(id), h.name()));
  Block b;
  const Decoded d = decode(buf, path, &b);
  if (d.stored_crc != d.actual_crc)
    throw Error(ErrorCode::kChecksum,
                fmt::format("block {} of '{}' fails its checksum", to_string(id), h.name()));
  if (d.rows != h.meta.row_extent(id.row) || d.cols != h.meta.col_extent(id.col))
    throw Error(ErrorCode::kDimension,
                fmt::format("block {} of '{}' has dimensions inconsistent with meta.json",
                            to_string(id), h.name()));
  if (auto* sink = io::current_sink()) sink->on_read(b.payload_bytes());
  return b;
}

ValidationReport validate(const MatrixHandle& h) {
  ValidationReport report;
  try {
    MatrixHandle fresh = open_matrix(h.root.parent_path(), h.root.filename().string());
    if (!(fresh.meta == h.meta)) report.metadata_errors.push_back("meta.json differs from handle");
  } catch (const Error& e) {
    report.metadata_errors.push_back(e.what());
  }
  std::size_t covered = 0;
  std::vector<std::byte> buf;
  for (const BlockId& id : h.meta.block_ids()) {
    const fs::path path = h.block_path(id);
    if (!slurp(path, buf)) {
      report.missing.push_back(id);
      continue;
    }
    try {
      const Decoded d = decode(buf, path, nullptr);
      if (d.stored_crc != d.actual_crc) report.checksum_failures.push_back(id);
      const std::size_t want_r = h.meta.row_extent(id.row), want_c = h.meta.col_extent(id.col);
      if (d.rows != want_r || d.cols != want_c)
        report.dimension_errors.push_back(
            {id, fmt::format("expected {}x{}, found {}x{}", want_r, want_c, d.rows, d.cols)});
      else
        covered += d.rows * d.cols;
    } catch (const Error& e) {
      report.corrupt.push_back({id, e.what()});
    }
  }
  if (report.missing.empty() && report.dimension_errors.empty() && report.corrupt.empty() &&
      covered != h.meta.n_rows * h.meta.n_cols)
    report.metadata_errors.push_back("block coverage does not equal n_rows * n_cols");
  return report;
}

namespace io {

Sink* current_sink() { return tls_sink; }

ScopedSink::ScopedSink(Sink* sink) : previous_(tls_sink) { tls_sink = sink; }
ScopedSink::~ScopedSink() { tls_sink = previous_; }

}  // namespace io

}  // namespace caddelag
