#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "thermon/errors.hpp"
#include "thermon/pipeline.hpp"

namespace fs = std::filesystem;
using namespace thermon;

namespace {

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    return PipelineConfig::load(in);
}

LabeledTrace load_trace(const PipelineConfig& cfg, const std::string& input_path) {
    std::ifstream in(input_path);
    if (!in) throw InputError("cannot open input: " + input_path);
    LabeledTrace trace;
    if (cfg.io.format == "csv") {
        ParseResult parsed = parse_csv(in, cfg.io.column_mapping, cfg.io.timestamp_format,
                                       cfg.io.max_malformed_fraction);
        trace = std::move(parsed.trace);
    } else if (cfg.io.format == "jsonl") {
        trace = read_readings_jsonl(in);
    } else {
        throw ConfigError("unknown io.format: " + cfg.io.format);
    }
    if (trace.readings.empty()) throw EmptyTrace();
    validate_trace(trace);
    return trace;
}

std::vector<SensorMeta> load_topology(const PipelineConfig& cfg, const std::string& input) {
    std::string path = cfg.io.topology;
    if (path.empty() && !input.empty()) {
        // Fall back to the topology emitted next to the readings by simulate.
        const fs::path sibling = fs::path(input).parent_path() / "topology.json";
        if (fs::exists(sibling)) path = sibling.string();
    }
    if (path.empty()) return {};
    std::ifstream in(path);
    if (!in) throw InputError("cannot open topology: " + path);
    return read_topology_json(in);
}

int cmd_simulate(const PipelineConfig& cfg, const std::string& out_dir,
                 std::optional<std::uint64_t> seed) {
    if (!cfg.layout || !cfg.scenario)
        throw ConfigError("simulate needs both layout and scenario sections");
    ScenarioSpec scenario = *cfg.scenario;
    if (seed) scenario.seed = *seed;
    LabeledTrace trace = simulate(*cfg.layout, scenario);
    fs::create_directories(out_dir);
    {
        std::ofstream out(fs::path(out_dir) / "readings.jsonl");
        write_readings_jsonl(out, trace);
    }
    {
        std::ofstream out(fs::path(out_dir) / "labels.jsonl");
        write_labels_jsonl(out, trace);
    }
    {
        std::ofstream out(fs::path(out_dir) / "topology.json");
        write_topology_json(out, cfg.layout->sensors);
    }
    std::cout << "wrote " << trace.readings.size() << " readings to " << out_dir << "\n";
    return 0;
}

int cmd_detect(const PipelineConfig& cfg, const std::string& input, const std::string& out_dir) {
    LabeledTrace trace = load_trace(cfg, input);
    DetectResult result = run_detect(cfg, trace, load_topology(cfg, input));
    write_artifacts(out_dir, trace, result);
    std::cout << result.regions.size() << " region(s), " << result.faults.size()
              << " fault window(s); artifacts in " << out_dir << "\n";
    return 0;
}

int cmd_eval(const PipelineConfig& cfg, const std::string& predictions_dir,
             const std::string& out_dir) {
    if (cfg.io.labels.empty()) throw ConfigError("eval needs io.labels");
    EvalReport report = run_eval_dir(predictions_dir, cfg.io.labels, cfg);
    fs::create_directories(out_dir);
    std::ofstream out(fs::path(out_dir) / "eval.json");
    write_eval_json(out, report);
    std::cout << format_eval_table(report);
    return 0;
}

int cmd_explain(const PipelineConfig& cfg, const std::string& input,
                const std::string& out_dir) {
    LabeledTrace trace = load_trace(cfg, input);
    DetectResult result = run_detect(cfg, trace, load_topology(cfg, input));
    std::vector<RegionNarrative> narratives = run_explain(result);
    fs::create_directories(out_dir);
    std::ofstream out(fs::path(out_dir) / "explain.jsonl");
    write_explain_jsonl(out, narratives);
    if (narratives.empty()) {
        std::cout << "no anomalous regions\n";
    } else {
        for (const auto& n : narratives) {
            std::cout << "region [" << n.region.t_start << ", " << n.region.t_end
                      << "] peak=" << n.region.peak << " health=" << n.dominant_label << "\n";
            for (const auto& [rule, strength] : n.top_rules)
                std::cout << "  " << rule << "  (activation " << strength << ")\n";
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"thermal telemetry anomaly pipeline"};
    app.require_subcommand(1);

    std::string config_path, input_path, out_dir;
    std::optional<std::uint64_t> seed;

    auto add_common = [&](CLI::App* sub, bool needs_input) {
        sub->add_option("--config", config_path, "pipeline config JSON")->required();
        sub->add_option("--out", out_dir, "output directory")->required();
        if (needs_input) sub->add_option("--input", input_path, "input path");
        return sub;
    };
    CLI::App* sim = add_common(app.add_subcommand("simulate", "generate a labeled trace"), false);
    sim->add_option("--seed", seed, "RNG seed override");
    add_common(app.add_subcommand("detect", "run the detection pipeline"), true);
    add_common(app.add_subcommand("eval", "score predictions against labels"), true);
    add_common(app.add_subcommand("explain", "narrate detected regions"), true);

    CLI11_PARSE(app, argc, argv);

    try {
        PipelineConfig cfg = load_config(config_path);
        if (input_path.empty()) input_path = cfg.io.input;
        const std::string sub = app.get_subcommands().front()->get_name();
        if (sub == "simulate") return cmd_simulate(cfg, out_dir, seed);
        if (input_path.empty()) throw InputError("no input given (flag --input or io.input)");
        if (sub == "detect") return cmd_detect(cfg, input_path, out_dir);
        if (sub == "eval") return cmd_eval(cfg, input_path, out_dir);
        return cmd_explain(cfg, input_path, out_dir);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 3;
    } catch (const InvariantViolation& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
