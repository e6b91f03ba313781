#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "prefnav/errors.hpp"
#include "prefnav/experiments.hpp"
#include "prefnav/service.hpp"

#ifndef PREFNAV_MAPS_DIR
#define PREFNAV_MAPS_DIR "maps"
#endif

namespace {

using namespace prefnav;

constexpr int kExitInvalid = 2;
constexpr int kExitRuntime = 3;

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::invalid_input, "cannot write '" + path + "'");
    out << text;
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::invalid_input, "cannot read '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorKind::invalid_input, path + ": " + e.what());
    }
}

struct RunArgs {
    std::string map;
    std::string method = "path_pref";
    std::uint64_t seed = 0;
    std::optional<int> delta_t;
    std::optional<int> t_max;
    std::optional<double> gamma_h;
    std::optional<int> iterations;
    std::string instance_file;
    bool sample = false;
    bool timings = false;
    std::string out;
};

int cmd_run(const RunArgs& a) {
    const World world = load_map_file(a.map);
    const Method method = parse_method(a.method);
    Rng rng(a.seed);
    ProblemInstance inst;
    if (!a.instance_file.empty()) {
        inst = instance_from_json(read_json_file(a.instance_file), world);
    } else if (a.sample) {
        Rng sampler(derive_seed(a.seed, {0x5a3u}));
        inst = sample_instance(sampler, world);
    } else {
        inst = map_instance(world, a.seed);
    }
    inst.seed = a.seed;
    if (a.delta_t) inst.delta_t = *a.delta_t;
    if (a.t_max) inst.t_max = *a.t_max;
    if (a.gamma_h) inst.gamma_h = *a.gamma_h;
    inst.validate(world);

    EpisodeOptions options;
    if (a.iterations) {
        if (*a.iterations < 1) throw Error(ErrorKind::invalid_input, "iterations must be >= 1");
        options.planner.iterations = *a.iterations;
    }
    const RunResult result = run_episode(world, inst, method, options, rng);
    const Json doc = {{"method", to_string(method)},
                      {"instance", to_json(inst, world)},
                      {"result", to_json(result, world, a.timings)}};
    const std::string text = doc.dump(2) + "\n";
    if (a.out.empty()) {
        std::cout << text;
    } else {
        write_file(a.out, text);
    }
    return result.error ? kExitRuntime : 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out, std::optional<int> threads) {
    Json doc = read_json_file(config_path);
    SweepConfig cfg = sweep_config_from_json(doc);
    const auto base = std::filesystem::path(config_path).parent_path();
    for (auto& m : cfg.maps) {
        if (!std::filesystem::exists(m) && std::filesystem::exists(base / m)) m = (base / m).string();
    }
    if (threads) cfg.threads = *threads;
    const auto rows = sweep(cfg);
    const std::string csv = sweep_csv(rows);
    if (out.empty()) {
        std::cout << csv;
    } else {
        write_file(out, csv);
    }
    std::cerr << sweep_ranking(rows);
    return 0;
}

int cmd_bench(const std::string& dir, int runs, const std::string& out, std::uint64_t seed, int iterations) {
    const auto worlds = SessionManager::load_directory(dir);
    std::vector<const World*> ptrs;
    for (const auto& [_, w] : worlds) ptrs.push_back(w.get());
    PlannerConfig planner;
    planner.iterations = iterations;
    const std::string csv = timing_csv(time_benchmark(ptrs, runs, seed, planner));
    if (out.empty()) {
        std::cout << csv;
    } else {
        write_file(out, csv);
    }
    return 0;
}

int cmd_inspect(const std::string& path) {
    const World world = load_map_file(path);
    const Arrangement& arr = world.arrangement();
    std::cout << world.map().id << ": " << world.map().width << "x" << world.map().height << ", "
              << arr.free_cell_count() << " free polytopes, " << world.graph().edges().size() << " edges\n";
    for (int v : world.graph().vertices()) {
        std::cout << arr.key(v) << "  area " << arr.cell(v).area << "  ->";
        for (const EdgeRef& e : world.graph().neighbors(v)) std::cout << ' ' << arr.key(e.to);
        if (auto p = world.preference().exit(v)) std::cout << "  preferred " << arr.key(p->to);
        std::cout << '\n';
    }
    return 0;
}

int cmd_serve(const std::string& host, int port, const std::string& dir) {
    SessionManager manager(SessionManager::load_directory(dir));
    std::cerr << "serving " << manager.list_maps().size() << " maps on http://" << host << ":" << port << "\n";
    run_server(manager, host, port);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Preference-aware shared-autonomy navigation workbench"};
    app.require_subcommand(1);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Simulate one episode and print the result as JSON");
    run_cmd->add_option("--map", run.map, "Map file")->required();
    run_cmd->add_option("--method", run.method, "path_pref, goal_only, compliant or blended");
    run_cmd->add_option("--seed", run.seed, "Random seed");
    run_cmd->add_option("--delta-t", run.delta_t, "Steps between human inputs");
    run_cmd->add_option("--t-max", run.t_max, "Mission length in steps");
    run_cmd->add_option("--gamma-h", run.gamma_h, "Human rationality coefficient");
    run_cmd->add_option("--iterations", run.iterations, "Planner simulations per decision");
    run_cmd->add_option("--instance", run.instance_file, "Problem instance JSON (defaults to the map's own)");
    run_cmd->add_flag("--sample", run.sample, "Sample a random instance from the seed");
    run_cmd->add_flag("--timings", run.timings, "Include solve and update times");
    run_cmd->add_option("--out", run.out, "Write the result here instead of stdout");

    std::string sweep_config, sweep_out;
    std::optional<int> sweep_threads;
    auto* sweep_cmd = app.add_subcommand("sweep", "Run a success-rate sweep from a JSON config");
    sweep_cmd->add_option("--config", sweep_config, "Sweep config JSON")->required();
    sweep_cmd->add_option("--out", sweep_out, "CSV output path");
    sweep_cmd->add_option("--threads", sweep_threads, "Worker threads");

    std::string bench_dir = PREFNAV_MAPS_DIR, bench_out;
    int bench_runs = 100;
    int bench_iterations = 2000;
    std::uint64_t bench_seed = 1;
    auto* bench_cmd = app.add_subcommand("bench", "Time first decisions and belief updates per map");
    bench_cmd->add_option("--maps", bench_dir, "Directory of map files");
    bench_cmd->add_option("--runs", bench_runs, "Sampled instances per map");
    bench_cmd->add_option("--out", bench_out, "CSV output path");
    bench_cmd->add_option("--seed", bench_seed, "Random seed");
    bench_cmd->add_option("--iterations", bench_iterations, "Planner simulations per decision");

    std::string serve_dir = PREFNAV_MAPS_DIR, serve_host = "127.0.0.1";
    int serve_port = 8080;
    auto* serve_cmd = app.add_subcommand("serve", "Start the session service");
    serve_cmd->add_option("--port", serve_port, "TCP port");
    serve_cmd->add_option("--host", serve_host, "Bind address");
    serve_cmd->add_option("--maps", serve_dir, "Directory of map files");

    std::string inspect_map;
    auto* inspect_cmd = app.add_subcommand("inspect", "List the polytopes and edges of a map");
    inspect_cmd->add_option("--map", inspect_map, "Map file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitInvalid;
    }

    try {
        if (*run_cmd) return cmd_run(run);
        if (*sweep_cmd) return cmd_sweep(sweep_config, sweep_out, sweep_threads);
        if (*bench_cmd) return cmd_bench(bench_dir, bench_runs, bench_out, bench_seed, bench_iterations);
        if (*serve_cmd) return cmd_serve(serve_host, serve_port, serve_dir);
        if (*inspect_cmd) return cmd_inspect(inspect_map);
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
        const bool input = e.kind() == ErrorKind::invalid_input || e.kind() == ErrorKind::not_found ||
                           e.kind() == ErrorKind::boundary_point;
        return input ? kExitInvalid : kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
