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

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <string>

#include "lordo/config.hpp"
#include "lordo/costs.hpp"
#include "lordo/distsim.hpp"
#include "lordo/linalg.hpp"
#include "lordo/metric_log.hpp"
#include "lordo/projection.hpp"

namespace py = pybind11;
using namespace lordo;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2-d array");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  return Matrix(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

Array to_array(const Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

ProjectionStrategy strategy_from(const std::string& s) {
  if (s == "global") return ProjectionStrategy::kGlobal;
  if (s == "local") return ProjectionStrategy::kLocal;
  if (s == "fixed") return ProjectionStrategy::kFixed;
  throw std::invalid_argument("unknown projection strategy: " + s);
}

QhmMode mode_from(const std::string& s) {
  if (s == "none") return QhmMode::kNone;
  if (s == "low_rank") return QhmMode::kLowRank;
  if (s == "full_rank") return QhmMode::kFullRank;
  throw std::invalid_argument("unknown qhm mode: " + s);
}

costs::CostInputs inputs(std::uint64_t p, std::uint64_t q, std::uint64_t r, std::uint64_t kx,
                         std::uint64_t ku, std::uint64_t kv) {
  return {.p = p, .q = q, .r = r, .kx = kx, .ku = ku, .kv = kv};
}

}  // namespace

PYBIND11_MODULE(_lordo, m) {
  m.doc() = "Low-rank distributed optimizer simulator";
  m.attr("__version__") = kVersion;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NonFiniteError>(m, "NonFiniteError", PyExc_ValueError);

  m.def("svd", [](const Array& a) {
    const SvdResult s = svd(to_matrix(a));
    return py::make_tuple(to_array(s.U), s.S, to_array(s.V));
  }, py::arg("a"), "Thin SVD returning (U, S, V).");

  m.def("compute_projection", [](const Array& signal, std::size_t rank) {
    return to_array(compute_projection(to_matrix(signal), rank).Q);
  }, py::arg("signal"), py::arg("rank"));

  m.def("sin_theta_distance", [](const Array& a, const Array& b) {
    return sin_theta_distance(to_matrix(a), to_matrix(b));
  }, py::arg("a"), py::arg("b"));

  m.def("mssv", [](const Array& r) { return mssv(to_matrix(r)); }, py::arg("rotation"));

  m.def("rotate_second_moment",
        [](const Array& r, const Array& u, const Array& v, double b1, double b2,
           std::int64_t t) {
          return to_array(rotate_second_moment(to_matrix(r), to_matrix(u), to_matrix(v), b1, b2, t));
        },
        py::arg("rotation"), py::arg("u"), py::arg("v"), py::arg("beta1"), py::arg("beta2"),
        py::arg("t"));

  m.def("predicted_instability", &predicted_instability, py::arg("kappa"),
        py::arg("batch_size"), py::arg("alpha"), py::arg("scale"), py::arg("rank"));

  m.def("reduction_vs_lowrank_ddp",
        [](std::uint64_t p, std::uint64_t q, std::uint64_t r, std::uint64_t k) {
          return costs::reduction_vs_lowrank_ddp(inputs(p, q, r, k, k, k));
        },
        py::arg("p"), py::arg("q"), py::arg("r"), py::arg("k") = 32);

  m.def("reduction_vs_fullrank_ddp",
        [](std::uint64_t p, std::uint64_t q, std::uint64_t r, std::uint64_t k) {
          return costs::reduction_vs_fullrank_ddp(inputs(p, q, r, k, k, k));
        },
        py::arg("p"), py::arg("q"), py::arg("r"), py::arg("k") = 32);

  m.def("reduction_vs_fullrank_local",
        [](std::uint64_t p, std::uint64_t q, std::uint64_t r, const std::string& strategy) {
          return costs::reduction_vs_fullrank_local(inputs(p, q, r, 1, 1, 1),
                                                    strategy_from(strategy));
        },
        py::arg("p"), py::arg("q"), py::arg("r"), py::arg("strategy") = "global");

  m.def("optimizer_state_ratio", [](std::uint64_t p, std::uint64_t q, std::uint64_t r) {
    return costs::optimizer_state_ratio(inputs(p, q, r, 1, 1, 1));
  }, py::arg("p"), py::arg("q"), py::arg("r"));

  m.def("per_payload",
        [](const std::string& strategy, const std::string& mode, std::uint64_t p,
           std::uint64_t q, std::uint64_t r) {
          const auto c = costs::per_payload(strategy_from(strategy), mode_from(mode),
                                            inputs(p, q, r, 1, 1, 1));
          py::dict d;
          d["params"] = py::make_tuple(c.params.uplink, c.params.downlink);
          d["first_moment"] = py::make_tuple(c.first_moment.uplink, c.first_moment.downlink);
          d["second_moment"] = py::make_tuple(c.second_moment.uplink, c.second_moment.downlink);
          d["projection"] = py::make_tuple(c.projection.uplink, c.projection.downlink);
          return d;
        },
        py::arg("strategy"), py::arg("mode"), py::arg("p"), py::arg("q"), py::arg("r"));

  m.def("validate_config", [](const std::string& text) {
    return config_to_json(parse_config(text)).dump();
  }, py::arg("config_json"), "Parses, validates and returns the fully resolved config.");

  m.def("run_log", [](const std::string& text, std::size_t threads) {
    const RunConfig cfg = parse_config(text);
    std::ostringstream out;
    {
      py::gil_scoped_release release;
      run_to_log(cfg, out, SimOptions{.threads = threads});
    }
    return out.str();
  }, py::arg("config_json"), py::arg("threads") = 0, "Runs a config and returns the JSONL log.");
}
