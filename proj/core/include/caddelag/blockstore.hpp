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

#pragma once

// Immutable block-partitioned matrix storage.
//
// A matrix lives in its own directory `<root>/<name>/` holding `meta.json` and
// one `r{row}_c{col}.blk` file per block. Block files are little-endian:
//
//   offset  size  field
//   0       4     magic "CDLG"
//   4       2     format version (u16)
//   6       4     rows (u32)
//   10      4     cols (u32)
//   14      4     CRC-32 of the payload (u32)
//   18      8*rc  payload, IEEE-754 f64, row-major
//
// Blocks are written exactly once; a second write of the same id fails.

#include <compare>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace caddelag {

inline constexpr char kBlockMagic[4] = {'C', 'D', 'L', 'G'};
inline constexpr std::uint16_t kBlockFormatVersion = 1;
inline constexpr std::size_t kBlockHeaderBytes = 18;

struct BlockId {
  std::size_t row = 0;
  std::size_t col = 0;

  friend auto operator<=>(const BlockId&, const BlockId&) = default;
};

std::string to_string(const BlockId& id);

/// Dense row-major tile.
struct Block {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Block() = default;
  Block(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), values(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

  std::size_t payload_bytes() const { return values.size() * sizeof(double); }
};

struct MatrixMeta {
  std::string name;
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::size_t block_size = 1;
  bool symmetric = false;

  std::size_t block_rows() const { return (n_rows + block_size - 1) / block_size; }
  std::size_t block_cols() const { return (n_cols + block_size - 1) / block_size; }
  std::size_t block_count() const { return block_rows() * block_cols(); }

  /// Element extent of block-row `i` (ragged on the last block).
  std::size_t row_extent(std::size_t i) const;
  std::size_t col_extent(std::size_t j) const;
  std::size_t row_offset(std::size_t i) const { return i * block_size; }
  std::size_t col_offset(std::size_t j) const { return j * block_size; }

  bool contains(const BlockId& id) const {
    return id.row < block_rows() && id.col < block_cols();
  }

  /// Every block id in row-major order.
  std::vector<BlockId> block_ids() const;

  friend bool operator==(const MatrixMeta&, const MatrixMeta&) = default;
};

struct MatrixHandle {
  MatrixMeta meta;
  std::filesystem::path root;  // the matrix directory itself

  const std::string& name() const { return meta.name; }
  std::size_t n_rows() const { return meta.n_rows; }
  std::size_t n_cols() const { return meta.n_cols; }
  std::size_t block_size() const { return meta.block_size; }
  std::filesystem::path block_path(const BlockId& id) const;
};

/// Creates `<root>/<meta.name>/` and its metadata. Fails if the directory exists.
MatrixHandle create_matrix(const std::filesystem::path& root, const MatrixMeta& meta);

/// Opens an existing matrix by reading and checking its metadata.
MatrixHandle open_matrix(const std::filesystem::path& root, const std::string& name);

bool matrix_exists(const std::filesystem::path& root, const std::string& name);

/// Deletes a matrix directory. Used for scratch intermediates only.
void remove_matrix(const MatrixHandle& h);

void write_block(const MatrixHandle& h, const BlockId& id, const Block& b);
Block read_block(const MatrixHandle& h, const BlockId& id);

/// Serialized size of a block file with the given payload.
std::size_t block_file_bytes(std::size_t rows, std::size_t cols);

std::uint32_t crc32(std::span<const std::byte> bytes);

struct ValidationIssue {
  BlockId id;
  std::string detail;
};

struct ValidationReport {
  std::vector<BlockId> missing;
  std::vector<BlockId> checksum_failures;
  std::vector<ValidationIssue> dimension_errors;
  std::vector<ValidationIssue> corrupt;
  std::vector<std::string> metadata_errors;

  bool ok() const {
    return missing.empty() && checksum_failures.empty() && dimension_errors.empty() &&
           corrupt.empty() && metadata_errors.empty();
  }
};

ValidationReport validate(const MatrixHandle& h);

namespace io {

/// Receives byte counts for every block read or written on the calling thread.
/// The runtime installs one per stage task; outside a stage nothing is counted.
class Sink {
 public:
  virtual ~Sink() = default;
  virtual void on_read(std::size_t payload_bytes) = 0;
  virtual void on_write(std::size_t payload_bytes) = 0;
};

Sink* current_sink();

class ScopedSink {
 public:
  explicit ScopedSink(Sink* sink);
  ~ScopedSink();
  ScopedSink(const ScopedSink&) = delete;
  ScopedSink& operator=(const ScopedSink&) = delete;

 private:
  Sink* previous_;
};

}  // namespace io

}  // namespace caddelag
