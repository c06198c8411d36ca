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

#include "adlm/run.h"

#include <cmath>

#include "gtest/gtest.h"

namespace adlm {
namespace {

TEST(RunTest, PgmScalesMinToBlackAndMaxToWhite) {
  const std::string pgm = EncodePgm({-2.0, 0.0, 2.0, 1.0}, 2, 2);
  const std::string header = "P5\n2 2\n255\n";
  ASSERT_EQ(pgm.size(), header.size() + 4);
  EXPECT_EQ(pgm.substr(0, header.size()), header);
  const auto px = [&](int i) {
    return static_cast<unsigned char>(pgm[header.size() + i]);
  };
  EXPECT_EQ(px(0), 0);
  EXPECT_EQ(px(1), 128);  // round(127.5)
  EXPECT_EQ(px(2), 255);
  EXPECT_EQ(px(3), 191);  // round(191.25)
}

TEST(RunTest, ConstantPgmIsGray) {
  const std::string pgm = EncodePgm({3.0, 3.0}, 2, 1);
  EXPECT_EQ(static_cast<unsigned char>(pgm.back()), 128);
}

TEST(RunTest, SyntheticDataIsScaledWithTrainBounds) {
  RunConfig c;
  c.dataset = "synthetic";
  c.train_limit = 300;
  c.test_limit = 100;
  c.synthetic_dim = 16;
  c.synthetic_classes = 4;
  auto data = LoadRunData(c);
  ASSERT_TRUE(data.ok()) << data.status();
  EXPECT_EQ(data->train.size(), 300u);
  EXPECT_EQ(data->test.size(), 100u);
  const double cap = 1.0 / std::sqrt(16.0);
  for (const Dataset* d : {&data->train, &data->test}) {
    for (size_t i = 0; i < d->features().size(); ++i) {
      EXPECT_GE(d->features()[i], 0.0);
      EXPECT_LE(d->features()[i], cap + 1e-15);
    }
  }
  EXPECT_TRUE(data->inputs.empty());
}

TEST(RunTest, MissingMnistIsNotFound) {
  RunConfig c;
  c.data_dir = "/nonexistent/adlm";
  EXPECT_EQ(LoadRunData(c).status().code(), absl::StatusCode::kNotFound);
}

}  // namespace
}  // namespace adlm
