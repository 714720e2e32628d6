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

#include "lordo/metric_log.hpp"

#include <algorithm>
#include <string>

namespace lordo {

using nlohmann::json;

json header_json(const RunConfig& config) {
  json warnings = json::array();
  if (config.projection == ProjectionStrategy::kLocal && config.workers > 1)
    warnings.push_back("basis_inconsistent_moment_average");
  return {{"type", "header"},
          {"version", kVersion},
          {"config", config_to_json(config)},
          {"warnings", warnings}};
}

json to_json(const StepRecord& rec) {
  json updates = json::array();
  for (const auto& u : rec.projection_updates)
    updates.push_back({{"layer", u.layer},
                       {"worker", u.worker},
                       {"mssv", u.metrics.mssv},
                       {"sin_theta", u.metrics.sin_theta},
                       {"stable_rank", u.metrics.stable_rank},
                       {"spectral_gap", u.metrics.spectral_gap}});
  json j = {{"type", "step"},
            {"step", rec.step},
            {"lr", rec.lr},
            {"worker_loss", rec.worker_loss},
            {"mean_loss", rec.mean_loss},
            {"sync",
             {{"params", rec.synced_params},
              {"first_moment", rec.synced_first_moment},
              {"second_moment", rec.synced_second_moment}}},
            {"eval_loss", rec.eval_loss ? json(*rec.eval_loss) : json(nullptr)},
            {"delta_rank", rec.delta_rank},
            {"projection_updates", updates},
            {"warnings", rec.warnings},
            {"bytes_uplink", rec.bytes_uplink},
            {"bytes_downlink", rec.bytes_downlink}};
  if (rec.wall_seconds) j["wall_seconds"] = *rec.wall_seconds;
  return j;
}

json to_json(const Divergence& d) {
  return {{"type", "diverged"}, {"step", d.step}, {"reason", d.reason}};
}

MetricLogWriter::MetricLogWriter(std::ostream& out, const RunConfig& config) : out_(out) {
  out_ << header_json(config).dump() << '\n';
}

void MetricLogWriter::write(const StepRecord& rec) { out_ << to_json(rec).dump() << '\n'; }

void MetricLogWriter::write(const Divergence& d) { out_ << to_json(d).dump() << '\n'; }

RunSummary run_to_log(const RunConfig& config, std::ostream& out, SimOptions options) {
  MetricLogWriter writer(out, config);
  RunSummary s = run_experiment(config, [&](const StepRecord& r) { writer.write(r); },
                                std::move(options));
  if (s.divergence) writer.write(*s.divergence);
  out.flush();
  return s;
}

namespace {

double number_at(const json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number())
    throw LogFormatError(line, std::string("missing numeric field \"") + key + "\"");
  return it->get<double>();
}

}  // namespace

LogAnalysis analyze_log(std::istream& in) {
  LogAnalysis out;
  std::string text;
  std::size_t line = 0;
  bool header = false;
  std::map<std::size_t, double> mssv_sum;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) throw LogFormatError(line, "empty line");
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw LogFormatError(line, std::string("not valid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
      throw LogFormatError(line, "record without a \"type\" string");
    const std::string type = j["type"].get<std::string>();
    if (!header) {
      if (type != "header") throw LogFormatError(line, "first record must be the header");
      header = true;
      continue;
    }
    if (out.diverged) throw LogFormatError(line, "record after the divergence marker");
    if (type == "diverged") {
      out.diverged = true;
      out.diverged_at = static_cast<std::int64_t>(number_at(j, "step", line));
      continue;
    }
    if (type != "step") throw LogFormatError(line, "unknown record type \"" + type + "\"");
    const auto step = static_cast<std::int64_t>(number_at(j, "step", line));
    if (step != out.steps) throw LogFormatError(line, "steps out of order");
    out.steps = step + 1;
    if (j.contains("eval_loss") && j["eval_loss"].is_number())
      out.final_loss = j["eval_loss"].get<double>();
    if (!j.contains("projection_updates") || !j["projection_updates"].is_array())
      throw LogFormatError(line, "missing projection_updates array");
    for (const auto& u : j["projection_updates"]) {
      if (!u.is_object()) throw LogFormatError(line, "malformed projection update");
      const auto layer = static_cast<std::size_t>(number_at(u, "layer", line));
      const double m = number_at(u, "mssv", line);
      const double sr = number_at(u, "stable_rank", line);
      LayerAnalysis& la = out.layers[layer];
      if (la.projection_updates == 0) {
        la.min_stable_rank = sr;
        la.max_stable_rank = sr;
      }
      la.min_stable_rank = std::min(la.min_stable_rank, sr);
      la.max_stable_rank = std::max(la.max_stable_rank, sr);
      ++la.projection_updates;
      mssv_sum[layer] += m;
    }
  }
  if (!header) throw LogFormatError(line + 1, "log is empty");
  for (auto& [layer, la] : out.layers)
    la.mean_mssv = mssv_sum[layer] / static_cast<double>(la.projection_updates);
  return out;
}

}  // namespace lordo
