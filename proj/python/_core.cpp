// Copyright (C) 2026 The BlackMirror Authors
// SPDX-License-Identifier: Apache-2.0

// Python bindings. Structured results cross the boundary as JSON text and
// are decoded by the package wrapper.

#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "blackmirror/cli.hpp"
#include "blackmirror/config.hpp"
#include "blackmirror/error.hpp"
#include "blackmirror/eval_harness.hpp"
#include "blackmirror/mirror_match.hpp"
#include "blackmirror/mirror_verify.hpp"
#include "blackmirror/serialize.hpp"
#include "blackmirror/sim_world.hpp"

namespace py = pybind11;
using namespace blackmirror;

namespace {

std::string detect_sim_json(const std::string& prompt, const std::string& attack, int k, int n,
                            double tau, std::uint64_t seed, bool noiseless) {
    AppConfig cfg = default_app_config();
    cfg.rules = attack_preset(attack);
    if (noiseless) cfg.sim = sim::SimConfig::noiseless();
    cfg.detection.K = k;
    cfg.detection.N = n;
    cfg.detection.tau = tau;
    cfg.detection.rng_seed = seed;
    cfg.resolve();
    auto bundle = make_gateway(cfg);
    return to_json(detect(*bundle.gateway, prompt, cfg.detection)).dump();
}

std::tuple<int, std::string, std::string> run_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string metrics_json(const std::vector<bool>& verdicts, const std::vector<bool>& labels) {
    const auto m = compute_metrics(verdicts, labels);
    return nlohmann::json{{"tp", m.tp},
                          {"fp", m.fp},
                          {"tn", m.tn},
                          {"fn", m.fn},
                          {"precision", m.precision},
                          {"recall", m.recall},
                          {"f1", m.f1},
                          {"fpr", m.fpr}}
        .dump();
}

std::vector<std::tuple<std::string, bool>> dataset(const std::string& attack, int n, double rate,
                                                   std::uint64_t seed) {
    std::vector<std::tuple<std::string, bool>> out;
    for (const auto& item : build_dataset(attack_preset(attack), n, rate, seed).items) {
        out.emplace_back(item.prompt, item.is_triggered);
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "BlackMirror native core";
    m.attr("SCHEMA_VERSION") = std::string(kSchemaVersion);
    m.attr("TAU_GRID") = std::vector<double>(kTauGrid.begin(), kTauGrid.end());

    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);

    m.def("presence_probability", py::overload_cast<double, double>(&presence_probability),
          py::arg("l_yes"), py::arg("l_no"));
    m.def("stability_new", [](const std::vector<double>& p) { return stability_new(p); });
    m.def("stability_lost", [](const std::vector<double>& p) { return stability_lost(p); });
    m.def(
        "majority_vote",
        [](const std::vector<std::vector<std::string>>& samples) {
            std::vector<LabelSet> sets;
            for (const auto& s : samples) sets.emplace_back(s.begin(), s.end());
            const auto voted = majority_vote(sets);
            return std::vector<std::string>(voted.begin(), voted.end());
        },
        py::arg("samples"));
    m.def("compute_metrics_json", &metrics_json, py::arg("verdicts"), py::arg("labels"));
    m.def("build_dataset", &dataset, py::arg("attack"), py::arg("n"), py::arg("trigger_rate"),
          py::arg("seed"));
    m.def("detect_sim_json", &detect_sim_json, py::arg("prompt"), py::arg("attack"), py::arg("k"),
          py::arg("n"), py::arg("tau"), py::arg("seed"), py::arg("noiseless"),
          py::call_guard<py::gil_scoped_release>());
    m.def("run_cli", &run_cli, py::arg("args"), py::call_guard<py::gil_scoped_release>());
}
