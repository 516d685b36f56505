/*
 * Licensed to the Apache Software Foundation (ASF) under one
 * or more contributor license agreements.  See the NOTICE file
 * distributed with this work for additional information
 * regarding copyright ownership.  The ASF licenses this file
 * to you under the Apache License, Version 2.0 (the
 * "License"); you may not use this file except in compliance
 * with the License.  You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing,
 * software distributed under the License is distributed on an
 * "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
 * KIND, either express or implied.  See the License for the
 * specific language governing permissions and limitations
 * under the License.
 */

/*!
 * \file bindings.cc
 * \brief Python extension `_gemmtune`. Structured values cross the boundary as JSON text;
 *        the `gemmtune` package turns them into dicts.
 */
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <string>

#include "gemmtune/bench.h"
#include "gemmtune/codegen.h"
#include "gemmtune/quant.h"
#include "gemmtune/simulator.h"
#include "gemmtune/tuner.h"

namespace py = pybind11;
using namespace gemmtune;  // NOLINT(build/namespaces)

namespace {

using I8Array = py::array_t<int8_t, py::array::c_style | py::array::forcecast>;
using I32Array = py::array_t<int32_t, py::array::c_style | py::array::forcecast>;

template <typename T>
Matrix<T> ToMatrix(const py::array_t<T, py::array::c_style | py::array::forcecast>& a, const char* name) {
  if (a.ndim() != 2) throw ShapeMismatch(std::string(name) + " must be two-dimensional");
  Matrix<T> m(a.shape(0), a.shape(1));
  std::copy(a.data(), a.data() + a.size(), m.data.begin());
  return m;
}

template <typename T>
py::array_t<T> ToArray(const Matrix<T>& m) {
  py::array_t<T> out({m.rows, m.cols});
  std::copy(m.data.begin(), m.data.end(), out.mutable_data());
  return out;
}

QuantizedGemmProblem MakeProblem(const I8Array& a, const I8Array& b, const I32Array& d, int32_t zp_a, int32_t zp_c,
                                 const std::string& s_d, const std::string& s_c) {
  QuantizedGemmProblem q;
  q.q_a = ToMatrix<int8_t>(a, "a");
  q.q_b = ToMatrix<int8_t>(b, "b");
  q.q_d = ToMatrix<int32_t>(d, "d");
  q.zp_a = zp_a;
  q.zp_c = zp_c;
  q.s_d = Rational::Parse(s_d);
  q.s_c = Rational::Parse(s_c);
  q.Check();
  return q;
}

LoweredProgram Lower(const Workload& w, const std::string& params_json, const QuantizedGemmProblem& q,
                     const AcceleratorConfig& cfg) {
  if (params_json.empty()) return GenerateCiscBaseline(w, q, cfg);
  return GenerateTrace(w, ParamsFromJson(params_json), q, cfg);
}

}  // namespace

PYBIND11_MODULE(_gemmtune, m) {
  m.doc() = "GEMM schedule tuning on a systolic-array accelerator model";

  py::register_exception<Error>(m, "GemmtuneError", PyExc_RuntimeError);

  py::class_<Workload>(m, "Workload")
      .def(py::init<int64_t, int64_t, int64_t>(), py::arg("m"), py::arg("n"), py::arg("k"))
      .def_readwrite("m", &Workload::m)
      .def_readwrite("n", &Workload::n)
      .def_readwrite("k", &Workload::k)
      .def("__repr__", [](const Workload& w) { return "Workload(" + ToString(w) + ")"; });

  py::class_<AcceleratorConfig>(m, "AcceleratorConfig")
      .def_readonly("label", &AcceleratorConfig::label)
      .def_readonly("dim", &AcceleratorConfig::dim)
      .def_property_readonly("scratchpad_bytes", &AcceleratorConfig::scratchpad_bytes)
      .def_property_readonly("accumulator_bytes", &AcceleratorConfig::accumulator_bytes)
      .def_property_readonly("peak_gops", [](const AcceleratorConfig& c) { return TheoreticalPeakGops(c); })
      .def("to_json", [](const AcceleratorConfig& c) { return DumpConfig(c); });

  m.def("gemmini16_l2", &Gemmini16L2);
  m.def("gemmini16_nol2", &Gemmini16NoL2);
  m.def("load_config", &LoadConfigFile, py::arg("path"));
  m.def("parse_config", &ParseConfig, py::arg("text"));
  m.def("pad_workload", &PadWorkload, py::arg("workload"), py::arg("cfg"));
  m.def("count_ops", &CountOps, py::arg("workload"));

  m.def(
      "enumerate_valid",
      [](const Workload& w, const AcceleratorConfig& cfg) {
        std::vector<std::string> out;
        for (const auto& p : EnumerateValid(PadWorkload(w, cfg), cfg)) out.push_back(ParamsToJson(p));
        return out;
      },
      py::arg("workload"), py::arg("cfg"));

  m.def(
      "is_valid",
      [](const Workload& w, const std::string& params_json, const AcceleratorConfig& cfg) {
        std::vector<std::string> reasons;
        for (auto r : IsValid(ParamsFromJson(params_json), PadWorkload(w, cfg), cfg).reasons) {
          reasons.push_back(ToString(r));
        }
        return reasons;
      },
      py::arg("workload"), py::arg("params_json"), py::arg("cfg"));

  m.def(
      "baseline_params", [](const Workload& w, const AcceleratorConfig& cfg) {
        return ParamsToJson(CiscBaselineParams(w, cfg));
      },
      py::arg("workload"), py::arg("cfg"));

  m.def(
      "codegen",
      [](const Workload& w, const std::string& params_json, const AcceleratorConfig& cfg, uint64_t seed) {
        return RenderListing(Lower(w, params_json, RandomProblem(w, seed), cfg).trace);
      },
      py::arg("workload"), py::arg("params_json"), py::arg("cfg"), py::arg("seed") = 0);

  m.def(
      "simulate",
      [](const Workload& w, const std::string& params_json, const AcceleratorConfig& cfg, uint64_t seed) {
        py::gil_scoped_release release;
        const auto q = RandomProblem(w, seed);
        const auto prog = Lower(w, params_json, q, cfg);
        DramImage dram = BuildDramImage(prog.dram_layout, q);
        const SimReport rep = TimedExecute(prog.trace, dram, cfg);
        const bool match = rep.output.data == FoldedQgemm(q).data;
        return std::make_pair(ReportToJson(rep, cfg), match);
      },
      py::arg("workload"), py::arg("params_json"), py::arg("cfg"), py::arg("seed") = 0);

  m.def(
      "simulate_listing",
      [](const std::string& listing, const AcceleratorConfig& cfg) {
        return ReportToJson(TimedExecute(ParseListing(listing), cfg), cfg);
      },
      py::arg("listing"), py::arg("cfg"));

  m.def(
      "tune",
      [](const Workload& w, const AcceleratorConfig& cfg, const std::string& strategy, int64_t budget,
         int64_t early_stop, uint64_t seed, int parallelism) {
        TuningJob job;
        job.workload = w;
        job.cfg = cfg;
        job.strategy = ParseStrategy(strategy);
        job.budget = budget;
        job.early_stop = early_stop;
        job.seed = seed;
        job.parallelism = parallelism;
        TuningResult r;
        {
          py::gil_scoped_release release;
          r = Tune(job);
        }
        return std::make_tuple(r.space_size, HistoryToJsonl(r.history), ParamsToJson(r.best.params),
                               r.best.cycles, r.best.gops);
      },
      py::arg("workload"), py::arg("cfg"), py::arg("strategy") = "model_guided", py::arg("budget") = 256,
      py::arg("early_stop") = 500, py::arg("seed") = 0, py::arg("parallelism") = 8);

  m.def(
      "reference_qgemm",
      [](const I8Array& a, const I8Array& b, const I32Array& d, int32_t zp_a, int32_t zp_c, const std::string& s_d,
         const std::string& s_c) { return ToArray(ReferenceQgemm(MakeProblem(a, b, d, zp_a, zp_c, s_d, s_c))); },
      py::arg("a"), py::arg("b"), py::arg("d"), py::arg("zp_a"), py::arg("zp_c"), py::arg("s_d"), py::arg("s_c"));

  m.def(
      "folded_qgemm",
      [](const I8Array& a, const I8Array& b, const I32Array& d, int32_t zp_a, int32_t zp_c, const std::string& s_d,
         const std::string& s_c) { return ToArray(FoldedQgemm(MakeProblem(a, b, d, zp_a, zp_c, s_d, s_c))); },
      py::arg("a"), py::arg("b"), py::arg("d"), py::arg("zp_a"), py::arg("zp_c"), py::arg("s_d"), py::arg("s_c"));

  m.def(
      "run_suite",
      [](const std::string& name, const std::string& out_dir, int64_t max_size, uint64_t seed) {
        BenchmarkSuite suite = BuiltinSuite(name);
        auto& ws = suite.workloads;
        ws.erase(std::remove_if(ws.begin(), ws.end(),
                                [&](const SuiteWorkload& sw) {
                                  return max_size > 0 && std::max({sw.workload.m, sw.workload.n, sw.workload.k}) >
                                                              max_size;
                                }),
                 ws.end());
        suite.strategy.seed = seed;
        py::gil_scoped_release release;
        return ReportJson(RunSuite(suite, out_dir));
      },
      py::arg("suite"), py::arg("out_dir"), py::arg("max_size") = 512, py::arg("seed") = 0);
}
