#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sketchsearch/audit.hpp"
#include "sketchsearch/error.hpp"
#include "sketchsearch/harness.hpp"
#include "sketchsearch/script.hpp"
#include "sketchsearch/sketch.hpp"
#include "sketchsearch/synthetic.hpp"
#include "sketchsearch/synthetic_policy.hpp"

namespace py = pybind11;
using namespace sketchsearch;

namespace {

struct SearchSummary {
    std::string outcome;
    std::vector<std::string> proof;
    int expansions = 0;
    double elapsed = 0.0;
    std::string abort_reason;
    std::string trace;
};

SearchSummary search(const std::string& theorem, const std::string& engine, uint64_t seed, int e, int max_expansions,
                     double truth_top_prob, double junk_mass) {
    SyntheticEnvironment env;
    const EngineKind kind = parse_engine(engine);
    OracleNoiseSpec noise;
    noise.truth_top_prob = truth_top_prob;
    noise.junk_mass = junk_mass;
    auto policy = synthetic_oracle_policy(env, env.world(theorem),
                                          kind == EngineKind::Recursive ? TrainingView::Recursive : TrainingView::Flat,
                                          noise, seed);
    SearchOptions opts;
    opts.budget.samples_per_expansion = e;
    opts.budget.max_expansions = max_expansions;
    validate(opts.budget);
    const SearchResult r = kind == EngineKind::Recursive ? recursive_bfs(theorem, env, *policy, opts)
                                                          : baseline_bfs(theorem, env, *policy, opts);
    return {std::string(to_string(r.outcome)), r.proof.value_or(std::vector<std::string>{}), r.stats.expansions,
            r.stats.elapsed, r.abort_reason, r.trace.to_jsonl()};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Sketch extraction and recursive proof search";

    static py::exception<Error> error(m, "SketchSearchError", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::set_error(error, e.what());
        }
    });

    py::class_<ProofLine>(m, "ProofLine")
        .def(py::init<std::string, int>(), py::arg("step"), py::arg("level"))
        .def_readwrite("step", &ProofLine::step)
        .def_readwrite("level", &ProofLine::level)
        .def("__eq__", [](const ProofLine& a, const ProofLine& b) { return a == b; })
        .def("__repr__", [](const ProofLine& l) { return "ProofLine(" + l.step + ", " + std::to_string(l.level) + ")"; });

    py::class_<ProofScript>(m, "ProofScript")
        .def(py::init<std::string, std::vector<ProofLine>>(), py::arg("theorem"), py::arg("lines"))
        .def_readwrite("theorem", &ProofScript::theorem)
        .def_readwrite("lines", &ProofScript::lines)
        .def("__eq__", [](const ProofScript& a, const ProofScript& b) { return a == b; });

    py::class_<Sketch>(m, "Sketch")
        .def_readonly("level", &Sketch::level)
        .def_readonly("target_index", &Sketch::target_index)
        .def_readonly("steps", &Sketch::steps);

    py::class_<SketchSet>(m, "SketchSet")
        .def_readonly("sketches", &SketchSet::sketches)
        .def_readonly("source", &SketchSet::source);

    m.def("parse_script", [](const std::string& text) { return parse_script(text); }, py::arg("text"));
    m.def("serialize_script", &serialize_script, py::arg("script"));
    m.def("extract_sketches", &extract_sketches, py::arg("script"));
    m.def("reconstruct", &reconstruct, py::arg("sketches"));
    m.def("flatten_proof", &flatten_proof, py::arg("script"));
    m.def("render_prompt", &render_prompt, py::arg("context"), py::arg("goal"));
    m.def("render_training_example",
          [](std::string context, std::string goal, std::string step) {
              return render_training_example({std::move(context), std::move(goal), std::move(step)});
          },
          py::arg("context"), py::arg("goal"), py::arg("step"));
    m.def("synthetic_ground_truth", [](const std::string& id) { return SyntheticWorld(parse_theorem_id(id)).ground_truth(); },
          py::arg("theorem"));

    py::class_<SearchSummary>(m, "SearchSummary")
        .def_readonly("outcome", &SearchSummary::outcome)
        .def_readonly("proof", &SearchSummary::proof)
        .def_readonly("expansions", &SearchSummary::expansions)
        .def_readonly("elapsed", &SearchSummary::elapsed)
        .def_readonly("abort_reason", &SearchSummary::abort_reason)
        .def_readonly("trace", &SearchSummary::trace);

    m.def("search", &search, py::arg("theorem"), py::arg("engine") = "recursive", py::arg("seed") = 0,
          py::arg("e") = 8, py::arg("max_expansions") = 128, py::arg("truth_top_prob") = 1.0,
          py::arg("junk_mass") = 1.0, py::call_guard<py::gil_scoped_release>());

    m.def("audit_trace",
          [](const std::string& jsonl) {
              std::vector<std::tuple<size_t, std::string, std::string>> out;
              for (const auto& v : audit_trace(Trace::from_jsonl(jsonl)).violations)
                  out.emplace_back(v.event, v.rule, v.detail);
              return out;
          },
          py::arg("trace"));

    m.def("run_suite_json",
          [](const std::string& config_text) {
              SuiteConfig config;
              apply_config_text(config, config_text);
              validate(config);
              return run_suite(config).to_json().dump();
          },
          py::arg("config"), py::call_guard<py::gil_scoped_release>());
}
