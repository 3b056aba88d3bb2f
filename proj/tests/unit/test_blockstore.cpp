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

#include <cstring>
#include <fstream>
#include <limits>
#include <span>
#include <thread>
#include <vector>

#include <gtest/gtest.h>

#include "caddelag/blockstore.hpp"
#include "caddelag/error.hpp"
#include "test_util.hpp"

namespace caddelag {
namespace {

using testing::ScratchDir;
namespace fs = std::filesystem;

Block filled(std::size_t r, std::size_t c, double base) {
  Block b(r, c);
  for (std::size_t i = 0; i < b.values.size(); ++i) b.values[i] = base + 0.125 * static_cast<double>(i);
  return b;
}

void fill_all(const MatrixHandle& h) {
  for (const BlockId& id : h.meta.block_ids())
    write_block(h, id,
                filled(h.meta.row_extent(id.row), h.meta.col_extent(id.col),
                       static_cast<double>(id.row * 10 + id.col)));
}

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::kInvalidArgument;
}

TEST(Blockstore, CreateEvenSplit) {
  ScratchDir dir;
  const auto h = create_matrix(dir.path(), {"m", 4, 4, 2, false});
  EXPECT_EQ(h.meta.block_rows(), 2u);
  EXPECT_EQ(h.meta.block_cols(), 2u);
  EXPECT_TRUE(fs::exists(h.root / "meta.json"));
  const auto report = validate(h);
  EXPECT_EQ(report.missing.size(), 4u);  // zero blocks present
}

TEST(Blockstore, CreateRaggedSplit) {
  ScratchDir dir;
  const auto h = create_matrix(dir.path(), {"m", 5, 5, 2, false});
  EXPECT_EQ(h.meta.block_rows(), 3u);
  EXPECT_EQ(h.meta.row_extent(2), 1u);
  EXPECT_EQ(h.meta.col_extent(1), 2u);
  std::size_t cover = 0;
  for (const BlockId& id : h.meta.block_ids()) cover += h.meta.row_extent(id.row) * h.meta.col_extent(id.col);
  EXPECT_EQ(cover, 25u);
}

TEST(Blockstore, LargeMetaArithmetic) {
  MatrixMeta m{"big", 100000, 100000, 1000, true};
  EXPECT_EQ(m.block_rows(), 100u);
  EXPECT_EQ(m.block_count(), 10000u);
}

TEST(Blockstore, PathCollision) {
  ScratchDir dir;
  create_matrix(dir.path(), {"m", 4, 4, 2, false});
  EXPECT_EQ(code_of([&] { create_matrix(dir.path(), {"m", 4, 4, 2, false}); }), ErrorCode::kPathCollision);
}

TEST(Blockstore, RoundTripBitExact) {
  ScratchDir dir;
  const auto h = create_matrix(dir.path(), {"m", 3, 3, 3, false});
  Block b(3, 3);
  b.values = {0.1, -0.0, 1e-308, 5e-324, -1.7976931348623157e308, 3.141592653589793, 1.0 / 3.0, -2.5, 0.0};
  write_block(h, {0, 0}, b);
  const Block r = read_block(open_matrix(dir.path(), "m"), {0, 0});
  ASSERT_EQ(r.values.size(), b.values.size());
  EXPECT_EQ(0, std::memcmp(r.values.data(), b.values.data(), b.payload_bytes()));
}

TEST(Blockstore, FileLayout) {
  ScratchDir dir;
  const auto h = create_matrix(dir.path(), {"m", 2, 3, 4, false});
  write_block(h, {0, 0}, filled(2, 3, 1.0));
  const fs::path p = h.root / "r0_c0.blk";
  ASSERT_TRUE(fs::exists(p));
  EXPECT_EQ(fs::file_size(p), block_file_bytes(2, 3));
  EXPECT_EQ(block_file_bytes(2, 3), 18u + 6u * 8u);
  std::ifstream is(p, std::ios::binary);
  char magic[4];
  is.read(magic, 4);
  EXPECT_EQ(std::string(magic, 4), "CDLG");
}

TEST(Blockstore, ImmutableBlocks) {
  ScratchDir dir;
  const auto h = create_matrix(dir.path(), {"m", 4, 4, 2, false});
  write_block(h, {0, 0}, filled(2, 2, 0.0));
  EXPECT_EQ(code_of([&] { write_block(h, {0, 0}, filled(2, 2, 1.0)); }), ErrorCode::kImmutable);
  EXPECT_EQ(read_block(h, {0, 0}).values[0], 0.0);
}

TEST(Blockstore, RaggedDimensionMismatch) {
  ScratchDir dir;
  const auto h = create_matrix(dir.path(), {"m", 5, 5, 2, false});
  EXPECT_EQ(code_of([&] { write_block(h, {2, 0}, filled(2, 2, 0.0)); }), ErrorCode::kDimension);
  EXPECT_EQ(code_of([&] { write_block(h, {3, 0}, filled(1, 2, 0.0)); }), ErrorCode::kInvalidArgument);
  write_block(h, {2, 0}, filled(1, 2, 0.0));
}

TEST(Blockstore, RejectsNonFinite) {
  ScratchDir dir;
  const auto h = create_matrix(dir.path(), {"m", 2, 2, 2, false});
  Block b(2, 2);
  b.values[1] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(write_block(h, {0, 0}, b), Error);
}

TEST(Blockstore, MissingBlock) {
  ScratchDir dir;
  const auto h = create_matrix(dir.path(), {"m", 4, 4, 2, false});
  EXPECT_EQ(code_of([&] { read_block(h, {1, 1}); }), ErrorCode::kMissingBlock);
}

TEST(Blockstore, ConcurrentReadsAgree) {
  ScratchDir dir;
  const auto h = create_matrix(dir.path(), {"m", 8, 8, 8, false});
  write_block(h, {0, 0}, filled(8, 8, 2.0));
  std::vector<Block> got(16);
  {
    std::vector<std::jthread> ts;
    for (std::size_t t = 0; t < got.size(); ++t) ts.emplace_back([&, t] { got[t] = read_block(h, {0, 0}); });
  }
  for (const auto& g : got) EXPECT_EQ(g.values, got[0].values);
}

TEST(Blockstore, ValidateComplete) {
  ScratchDir dir;
  const auto h = create_matrix(dir.path(), {"m", 5, 5, 2, false});
  fill_all(h);
  EXPECT_TRUE(validate(open_matrix(dir.path(), "m")).ok());
}

TEST(Blockstore, ValidateReportsDeletedBlock) {
  ScratchDir dir;
  const auto h = create_matrix(dir.path(), {"m", 5, 5, 2, false});
  fill_all(h);
  fs::remove(h.block_path({1, 2}));
  const auto rep = validate(h);
  ASSERT_EQ(rep.missing.size(), 1u);
  EXPECT_EQ(rep.missing[0], (BlockId{1, 2}));
}

TEST(Blockstore, ValidateReportsFlippedByte) {
  ScratchDir dir;
  const auto h = create_matrix(dir.path(), {"m", 4, 4, 2, false});
  fill_all(h);
  const fs::path p = h.block_path({0, 1});
  {
    std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
    f.seekg(20);
    char c;
    f.read(&c, 1);
    c ^= 0x10;
    f.seekp(20);
    f.write(&c, 1);
  }
  const auto rep = validate(h);
  ASSERT_EQ(rep.checksum_failures.size(), 1u);
  EXPECT_EQ(rep.checksum_failures[0], (BlockId{0, 1}));
  EXPECT_EQ(code_of([&] { read_block(h, {0, 1}); }), ErrorCode::kChecksum);
}

TEST(Blockstore, Crc32KnownValue) {
  const std::string s = "123456789";
  EXPECT_EQ(crc32(std::as_bytes(std::span(s.data(), s.size()))), 0xCBF43926u);
}

TEST(Blockstore, SinkCountsPayloadBytes) {
  struct Counter : io::Sink {
    std::size_t r = 0, w = 0;
    void on_read(std::size_t b) override { r += b; }
    void on_write(std::size_t b) override { w += b; }
  } counter;
  ScratchDir dir;
  const auto h = create_matrix(dir.path(), {"m", 3, 3, 2, false});
  {
    io::ScopedSink scoped(&counter);
    write_block(h, {0, 0}, filled(2, 2, 0.0));
    read_block(h, {0, 0});
  }
  EXPECT_EQ(counter.w, 32u);
  EXPECT_EQ(counter.r, 32u);
}

}  // namespace
}  // namespace caddelag
