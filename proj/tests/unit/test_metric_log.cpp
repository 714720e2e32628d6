// Copyright 2026 The lordo Authors. All Rights Reserved.
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
// =============================================================================

#include <gtest/gtest.h>

#include <sstream>
#include <string>
#include <vector>

#include "lordo/metric_log.hpp"

namespace lordo {
namespace {

RunConfig small_config() {
  RunConfig c;
  c.workers = 2;
  c.steps = 16;
  c.batch_size = 8;
  c.rank = 3;
  c.sync = {4, 4, 4};
  c.problem.rows = 128;
  c.problem.p = 12;
  c.problem.q = 9;
  return c;
}

std::string log_of(const RunConfig& c, SimOptions opts = {}) {
  std::ostringstream out;
  run_to_log(c, out, std::move(opts));
  return out.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

TEST(MetricLog, HeaderThenOneLinePerStep) {
  const auto ls = lines(log_of(small_config()));
  ASSERT_EQ(ls.size(), 17u);
  const auto header = nlohmann::json::parse(ls[0]);
  EXPECT_EQ(header["type"], "header");
  EXPECT_EQ(header["version"], kVersion);
  for (std::size_t i = 1; i < ls.size(); ++i) {
    const auto j = nlohmann::json::parse(ls[i]);
    EXPECT_EQ(j["type"], "step");
    EXPECT_EQ(j["step"].get<int>(), static_cast<int>(i - 1));
  }
}

TEST(MetricLog, HeaderConfigReproducesRun) {
  const RunConfig c = small_config();
  const std::string first = log_of(c);
  const auto header = nlohmann::json::parse(lines(first)[0]);
  const RunConfig back = config_from_json(header["config"]);
  EXPECT_EQ(log_of(back), first);
}

TEST(MetricLog, ByteIdenticalAcrossRunsAndThreading) {
  RunConfig c = small_config();
  c.workers = 4;
  const std::string a = log_of(c, {.threads = 1});
  EXPECT_EQ(log_of(c, {.threads = 1}), a);
  EXPECT_EQ(log_of(c, {.threads = 4}), a);
  EXPECT_EQ(log_of(c, {.threads = 3}), a);
}

TEST(MetricLog, TimingIsOptIn) {
  const std::string plain = log_of(small_config());
  EXPECT_EQ(plain.find("wall_seconds"), std::string::npos);
  EXPECT_NE(log_of(small_config(), {.timing = true}).find("wall_seconds"), std::string::npos);
}

TEST(MetricLog, LocalHeaderFlagsBasisInconsistentAveraging) {
  RunConfig c = small_config();
  c.projection = ProjectionStrategy::kLocal;
  const auto header = nlohmann::json::parse(lines(log_of(c))[0]);
  EXPECT_EQ(header["warnings"][0], "basis_inconsistent_moment_average");
}

TEST(MetricLog, DivergedRecordTerminatesLog) {
  RunConfig c = small_config();
  c.lr.peak = 1e308;
  const auto text = log_of(c);
  const auto ls = lines(text);
  const auto last = nlohmann::json::parse(ls.back());
  EXPECT_EQ(last["type"], "diverged");
  EXPECT_LT(ls.size(), 17u);
  std::istringstream in(text);
  const auto a = analyze_log(in);
  EXPECT_TRUE(a.diverged);
}

TEST(Analyze, StagnationVersusRefresh) {
  RunConfig c = small_config();
  c.workers = 4;
  c.steps = 40;
  std::istringstream g(log_of(c));
  const auto ga = analyze_log(g);
  EXPECT_EQ(ga.steps, 40);
  EXPECT_FALSE(ga.diverged);
  ASSERT_TRUE(ga.final_loss.has_value());
  EXPECT_NEAR(ga.layers.at(0).mean_mssv, 1.0, 1e-6);

  c.projection = ProjectionStrategy::kLocal;
  std::istringstream l(log_of(c));
  const auto la = analyze_log(l);
  EXPECT_LT(la.layers.at(0).mean_mssv, 1.0 - 1e-3);
  EXPECT_GE(la.layers.at(0).max_stable_rank, la.layers.at(0).min_stable_rank);
}

TEST(Analyze, MalformedInputsNameTheLine) {
  std::istringstream empty("");
  EXPECT_THROW(analyze_log(empty), LogFormatError);

  const auto ls = lines(log_of(small_config()));
  std::string broken;
  for (std::size_t i = 0; i < ls.size(); ++i) broken += (i == 5 ? std::string("{not json") : ls[i]) + "\n";
  std::istringstream in(broken);
  try {
    analyze_log(in);
    FAIL();
  } catch (const LogFormatError& e) {
    EXPECT_EQ(e.line(), 6u);
  }

  std::istringstream no_header(ls[1] + "\n");
  EXPECT_THROW(analyze_log(no_header), LogFormatError);
}

}  // namespace
}  // namespace lordo
