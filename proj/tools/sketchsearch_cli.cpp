// Command line front end: suite generation, runs, statistics and the sketch
// data pipeline, plus stdio servers for the remote protocols.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "sketchsearch/error.hpp"
#include "sketchsearch/harness.hpp"
#include "sketchsearch/remote.hpp"
#include "sketchsearch/script.hpp"
#include "sketchsearch/sketch.hpp"
#include "sketchsearch/synthetic_policy.hpp"

namespace fs = std::filesystem;
using namespace sketchsearch;

namespace {

const char* const kConfigKeys[] = {
    "seed",         "count",           "L",           "b",          "len",
    "dd",           "fcr",             "global_timeout", "sublevel_timeout", "step_timeout",
    "e",            "max_expansions",  "max_recursion_depth", "per_level_expansions", "engines",
    "truth_top_prob", "junk_mass",     "sorry_bias",  "include_truth", "cost_min",
    "cost_max",     "parallelism",
};

std::string read_file(const std::string& path) {
    if (path == "-") {
        std::ostringstream ss;
        ss << std::cin.rdbuf();
        return ss.str();
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& data) {
    if (path.empty() || path == "-") {
        std::cout << data;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
    out << data;
}

// Suite options shared by gen, run and emit-training: a config file, then
// one flag per config key.
struct SuiteFlags {
    std::string config_file;
    std::map<std::string, std::string> values;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_file, "key=value suite config file");
        for (const char* key : kConfigKeys)
            cmd->add_option(std::string("--") + key, values[key], std::string("override config key ") + key);
    }

    SuiteConfig resolve() const {
        SuiteConfig config;
        if (!config_file.empty()) apply_config_text(config, read_file(config_file));
        for (const char* key : kConfigKeys) {
            auto it = values.find(key);
            if (it != values.end() && !it->second.empty()) apply_config_value(config, key, it->second);
        }
        validate(config);
        return config;
    }
};

std::vector<ProofScript> load_scripts(const std::string& path) {
    const std::string text = read_file(path);
    if (path.size() >= 6 && path.substr(path.size() - 6) == ".jsonl") return parse_annotated_corpus(text);
    return {parse_script(text)};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Level-by-level proof search harness"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "write a suite manifest");
    SuiteFlags gen_flags;
    gen_flags.attach(gen);
    std::string gen_out, gen_scripts;
    gen->add_option("-o,--out", gen_out, "manifest path (stdout if omitted)");
    gen->add_option("--scripts", gen_scripts, "also write the ground-truth scripts as annotated jsonl");

    // run
    auto* run = app.add_subcommand("run", "run a suite");
    SuiteFlags run_flags;
    run_flags.attach(run);
    std::string run_manifest_path, run_csv, run_json, run_traces;
    run->add_option("--manifest", run_manifest_path, "manifest from gen (otherwise generated from the config)");
    run->add_option("--csv", run_csv, "per-attempt CSV output");
    run->add_option("--json", run_json, "JSON summary output (stdout if neither output is given)");
    run->add_option("--trace-dir", run_traces, "directory for one trace file per attempt");

    // stats
    auto* stats = app.add_subcommand("stats", "proof length statistics of a run");
    std::string stats_report, stats_out;
    stats->add_option("report", stats_report, "JSON summary written by run")->required();
    stats->add_option("-o,--out", stats_out, "output path");

    // extract
    auto* extract = app.add_subcommand("extract", "split proof scripts into sketches");
    std::string extract_in, extract_out;
    extract->add_option("input", extract_in, "annotated .jsonl corpus or a plain script")->required();
    extract->add_option("-o,--out", extract_out, "sketch jsonl output");

    // emit-training
    auto* emit = app.add_subcommand("emit-training", "render training examples for a synthetic suite");
    SuiteFlags emit_flags;
    emit_flags.attach(emit);
    std::string emit_manifest, emit_out, emit_format = "jsonl", emit_view = "recursive";
    emit->add_option("--manifest", emit_manifest, "manifest from gen");
    emit->add_option("-o,--out", emit_out, "output path");
    emit->add_option("--format", emit_format, "jsonl or text")->check(CLI::IsMember({"jsonl", "text"}));
    emit->add_option("--view", emit_view, "recursive or flat")->check(CLI::IsMember({"recursive", "flat"}));

    // serve-env
    auto* serve_env = app.add_subcommand("serve-env", "serve synthetic theorems over stdin/stdout");

    // serve-policy
    auto* serve_pol = app.add_subcommand("serve-policy", "serve an oracle policy over stdin/stdout");
    std::string pol_theorem, pol_view = "recursive";
    uint64_t pol_seed = 0;
    OracleNoiseSpec pol_noise;
    serve_pol->add_option("--theorem", pol_theorem, "synthetic theorem id")->required();
    serve_pol->add_option("--view", pol_view, "recursive or flat")->check(CLI::IsMember({"recursive", "flat"}));
    serve_pol->add_option("--seed", pol_seed, "policy seed");
    serve_pol->add_option("--truth_top_prob", pol_noise.truth_top_prob);
    serve_pol->add_option("--junk_mass", pol_noise.junk_mass);
    serve_pol->add_option("--sorry_bias", pol_noise.sorry_bias);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            const SuiteConfig config = gen_flags.resolve();
            const SuiteManifest manifest = generate_manifest(config);
            write_file(gen_out, manifest_to_json(manifest));
            if (!gen_scripts.empty()) {
                SyntheticEnvironment env(config.costs);
                std::string corpus;
                for (const auto& id : manifest.theorems) corpus += serialize_annotated(env.world(id)->ground_truth());
                write_file(gen_scripts, corpus);
            }
            return 0;
        }
        if (run->parsed()) {
            SuiteConfig config = run_flags.resolve();
            if (!run_traces.empty()) config.keep_traces = true;
            const SuiteManifest manifest =
                run_manifest_path.empty() ? generate_manifest(config) : manifest_from_json(read_file(run_manifest_path));
            const SuiteReport report = run_manifest(manifest, config);
            if (!run_csv.empty()) write_file(run_csv, report.to_csv());
            if (!run_json.empty() || run_csv.empty()) write_file(run_json, report.to_json().dump(2) + "\n");
            if (!run_traces.empty()) {
                fs::create_directories(run_traces);
                for (const auto& a : report.attempts) {
                    const auto name = std::to_string(a.index) + "_" + std::string(to_string(a.engine)) + ".jsonl";
                    write_file((fs::path(run_traces) / name).string(), a.trace_jsonl);
                }
            }
            std::cerr << "attempts=" << report.attempts.size();
            for (const auto& s : report.engines)
                std::cerr << ' ' << to_string(s.engine) << "_pass@1="
                          << (s.pass_at_1 ? std::to_string(*s.pass_at_1) : std::string("null"));
            std::cerr << " audit_violations=" << report.audit_violations << '\n';
            return 0;
        }
        if (stats->parsed()) {
            const SuiteReport report = report_from_json(read_file(stats_report));
            write_file(stats_out, length_stats_to_json(length_stats(report)).dump(2) + "\n");
            return 0;
        }
        if (extract->parsed()) {
            std::string out;
            for (const auto& script : load_scripts(extract_in))
                for (const auto& sketch : extract_sketches(script).sketches) out += sketch_to_jsonl(sketch) + "\n";
            write_file(extract_out, out);
            return 0;
        }
        if (emit->parsed()) {
            const SuiteConfig config = emit_flags.resolve();
            const SuiteManifest manifest =
                emit_manifest.empty() ? generate_manifest(config) : manifest_from_json(read_file(emit_manifest));
            SyntheticEnvironment env(config.costs);
            std::string out;
            for (const auto& id : manifest.theorems) {
                const ProofScript truth = env.world(id)->ground_truth();
                SketchSet set = extract_sketches(truth);
                if (emit_view == "flat") {
                    // One single-level "sketch" holding the whole sequential proof.
                    set.sketches = {Sketch{0, 1, flatten_proof(truth)}};
                    auto session = env.init_theorem(id);
                    std::vector<std::vector<std::string>> states(1);
                    for (const auto& s : replay_states(*session, set.sketches[0].steps))
                        states[0].push_back(s.proof_state);
                    for (const auto& ex : emit_training_examples(set, states))
                        out += (emit_format == "text" ? render_training_example(ex) : training_example_to_jsonl(ex)) + "\n";
                    continue;
                }
                std::vector<std::vector<std::string>> states;
                for (const auto& per_sketch : replay_sketches(env, set)) {
                    states.emplace_back();
                    for (const auto& s : per_sketch) states.back().push_back(s.proof_state);
                }
                for (const auto& ex : emit_training_examples(set, states))
                    out += (emit_format == "text" ? render_training_example(ex) : training_example_to_jsonl(ex)) + "\n";
            }
            write_file(emit_out, out);
            return 0;
        }
        if (serve_env->parsed()) {
            SyntheticEnvironment env;
            serve_environment(env, std::cin, std::cout);
            return 0;
        }
        if (serve_pol->parsed()) {
            SyntheticEnvironment env;
            const auto view = pol_view == "flat" ? TrainingView::Flat : TrainingView::Recursive;
            auto policy = synthetic_oracle_policy(env, env.world(pol_theorem), view, pol_noise, pol_seed);
            serve_policy(*policy, std::cin, std::cout);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
