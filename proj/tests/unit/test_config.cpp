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

#include <cstdlib>

#include <gtest/gtest.h>

#include "caddelag/config.hpp"
#include "caddelag/error.hpp"

namespace caddelag {
namespace {

TEST(Config, DefaultsValid) {
  RunConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.d, 3u);
  EXPECT_EQ(c.eps_rp, 1e-3);
  EXPECT_EQ(c.effective_block_size(2000), 45u);
  EXPECT_EQ(c.effective_block_size(16), 4u);
  c.block_size = 7;
  EXPECT_EQ(c.effective_block_size(2000), 7u);
}

TEST(Config, RejectsOutOfRange) {
  RunConfig c;
  c.workers = 0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.eps_rp = 1.0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.delta = 0.0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.d = 0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Config, ScratchResolution) {
  EXPECT_EQ(resolve_scratch("/x"), std::filesystem::path("/x"));
  ::setenv("CADDELAG_SCRATCH", "/from/env", 1);
  EXPECT_EQ(resolve_scratch({}), std::filesystem::path("/from/env"));
  ::unsetenv("CADDELAG_SCRATCH");
  EXPECT_THROW(resolve_scratch({}), Error);
}

}  // namespace
}  // namespace caddelag
