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

#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "lordo/config.hpp"
#include "lordo/distsim.hpp"

namespace lordo {

inline constexpr const char* kVersion = "0.1.0";

// Newline-delimited JSON log: one header line, one line per step, and a
// terminal {"type":"diverged"} line when the run blew up.
nlohmann::json header_json(const RunConfig& config);
nlohmann::json to_json(const StepRecord& rec);
nlohmann::json to_json(const Divergence& d);

class MetricLogWriter {
 public:
  MetricLogWriter(std::ostream& out, const RunConfig& config);
  void write(const StepRecord& rec);
  void write(const Divergence& d);

 private:
  std::ostream& out_;
};

// Runs the experiment and streams the log. Returns the summary.
RunSummary run_to_log(const RunConfig& config, std::ostream& out, SimOptions options = {});

class LogFormatError : public std::runtime_error {
 public:
  LogFormatError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct LayerAnalysis {
  std::size_t projection_updates = 0;
  double mean_mssv = 0.0;
  double min_stable_rank = 0.0;
  double max_stable_rank = 0.0;
};

struct LogAnalysis {
  std::int64_t steps = 0;
  bool diverged = false;
  std::optional<std::int64_t> diverged_at;
  std::optional<double> final_loss;
  std::map<std::size_t, LayerAnalysis> layers;
};

// Parses a log line by line; throws LogFormatError naming the bad line.
LogAnalysis analyze_log(std::istream& in);

}  // namespace lordo
