// lav: command line front end for the linear light world relighting pipeline.
//
// Subcommands: scene (synthesize and serialize a scene), run (one pipeline
// run with full artifacts), ablate (a grid of runs aggregated to CSV),
// metrics (compare two frame directories). Exit codes: 0 success, 2 usage or
// validation, 3 I/O, 4 numeric failure mid-run.

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "lav/hash.hpp"
#include "lav/io.hpp"
#include "lav/lightworld.hpp"
#include "lav/metrics.hpp"
#include "lav/pipeline.hpp"

namespace fs = std::filesystem;
using namespace lav;

namespace {

struct SceneArgs {
    SceneSpec spec;
    int size = -1;  // sets height and width together when set
    std::string coverage = "object";
    std::uint64_t seed = 2024;
    std::string out;
};

int do_scene(const SceneArgs& args) {
    SceneSpec spec = args.spec;
    if (args.size >= 0) spec.height = spec.width = args.size;
    spec.coverage = detail::coverage_kind(args.coverage);

    const Scene scene = generate_scene(spec, args.seed);
    write_scene(scene, args.out);

    // Preview under uniform illumination, one PPM per frame next to the file.
    Illumination uniform;
    uniform.weights.assign(static_cast<std::size_t>(spec.lights), 1.0 / spec.lights);
    const fs::path out_path(args.out);
    const fs::path preview = out_path.parent_path() / (out_path.stem().string() + "_preview");
    const std::vector<std::string> names = write_frames(preview.string(), render(scene, uniform));

    std::cout << "wrote " << args.out << " (" << spec.frames << " frames " << spec.width << "x"
              << spec.height << ", " << spec.lights << " lights) and " << names.size()
              << " preview frames under " << preview.string() << "\n";
    return 0;
}

struct RunArgs {
    std::string scene;
    std::string config;
    std::string out;
    std::string mode;
};

int do_run(const RunArgs& args) {
    const json cfg_json = read_json_file(args.config);
    PipelineConfig cfg;
    std::string scene_path = args.scene;
    if (is_run_manifest(cfg_json)) {
        const RunManifest man = manifest_from_json(cfg_json);
        cfg = man.config;
        if (scene_path.empty()) scene_path = man.scene_path;
    } else {
        cfg = config_from_json(cfg_json);
    }
    if (!args.mode.empty()) cfg.mode = detail::run_mode(args.mode);
    if (scene_path.empty())
        throw CLI::ValidationError("run", "--scene is required unless --config is a manifest");

    const Scene scene = load_scene(scene_path);
    fs::create_directories(args.out);

    const auto started = std::chrono::steady_clock::now();
    const RunResult res = run(scene, cfg);
    const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - started;

    RunManifest man;
    man.config = cfg;
    man.scene_path = scene_path;
    man.scene_hash = hash_file(scene_path);
    man.out_dir = ".";
    man.wall_seconds = wall.count();

    const fs::path out(args.out);
    for (const std::string& name : write_frames(args.out, res.output))
        man.artifacts[name] = hash_file((out / name).string());

    write_f32((out / "output.f32").string(), res.output);
    const MetricsReport rep =
        compute_report(res.output, res.source, render(scene, cfg.condition.target));
    write_json_file((out / "metrics.json").string(), report_to_json(rep));
    write_trace_csv((out / "trace.csv").string(), res.trace);
    for (const char* name : {"output.f32", "output.f32.json", "metrics.json", "trace.csv"})
        man.artifacts[name] = hash_file((out / name).string());
    write_manifest((out / "manifest.json").string(), man);

    std::cout << "run finished in " << fmt_double(man.wall_seconds)
              << " s: flicker " << fmt_double(rep.flicker) << ", consistency "
              << fmt_double(rep.consistency) << ", motion epe " << fmt_double(rep.motion_epe)
              << ", relight rmse " << fmt_double(rep.rmse) << "\n";
    return 0;
}

struct GridPoint {
    std::string id;
    PipelineConfig config;
};

// Grid axis token lists; lambda tokens are either a power-decay exponent
// ("0.5", "1", "2") or "const" followed by the constant value ("const1").
struct AblateArgs {
    std::string scene;
    std::string config;
    std::string out;
    std::vector<std::string> grids;
};

std::vector<std::string> split_values(const std::string& list) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= list.size()) {
        const std::size_t comma = list.find(',', pos);
        const std::string tok = list.substr(pos, comma - pos);
        if (tok.empty()) throw CLI::ValidationError("ablate", "empty value in grid list");
        out.push_back(tok);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

double parse_double(const std::string& tok) {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw CLI::ValidationError("ablate", "bad number \"" + tok + "\"");
    return v;
}

std::vector<GridPoint> expand_grid(const PipelineConfig& base,
                                   const std::vector<std::string>& grids) {
    std::vector<std::string> gammas{""}, lambdas{""}, sigmas{""};
    for (const std::string& g : grids) {
        const std::size_t eq = g.find('=');
        if (eq == std::string::npos)
            throw CLI::ValidationError("ablate", "grid must look like name=v1,v2");
        const std::string name = g.substr(0, eq);
        const std::vector<std::string> values = split_values(g.substr(eq + 1));
        if (name == "gamma")
            gammas = values;
        else if (name == "lambda")
            lambdas = values;
        else if (name == "sigma")
            sigmas = values;
        else
            throw CLI::ValidationError("ablate", "unknown grid axis \"" + name +
                                                      "\" (gamma, lambda, sigma)");
    }

    std::vector<GridPoint> points;
    for (const std::string& g : gammas)
        for (const std::string& l : lambdas)
            for (const std::string& s : sigmas) {
                GridPoint p;
                p.config = base;
                std::string id;
                if (!g.empty()) {
                    p.config.cla.gamma = parse_double(g);
                    id += "gamma" + g;
                }
                if (!l.empty()) {
                    if (l.rfind("const", 0) == 0) {
                        p.config.fusion.kind = FusionSchedule::Kind::constant;
                        p.config.fusion.constant = parse_double(l.substr(5));
                    } else {
                        p.config.fusion.kind = FusionSchedule::Kind::power_decay;
                        p.config.fusion.exponent = parse_double(l);
                    }
                    id += (id.empty() ? "" : "_") + std::string("lambda") + l;
                }
                if (!s.empty()) {
                    p.config.condition.sigma = parse_double(s);
                    id += (id.empty() ? "" : "_") + std::string("sigma") + s;
                }
                p.id = id;
                points.push_back(std::move(p));
            }
    return points;
}

unsigned worker_count(std::size_t jobs) {
    unsigned n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (const char* env = std::getenv("LAV_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) n = static_cast<unsigned>(v);
    }
    return static_cast<unsigned>(std::min<std::size_t>(n, jobs));
}

int do_ablate(const AblateArgs& args) {
    if (args.grids.empty())
        throw CLI::ValidationError("ablate", "at least one --grid axis is required");
    const PipelineConfig base =
        args.config.empty() ? PipelineConfig{} : config_from_file(args.config);
    const std::vector<GridPoint> points = expand_grid(base, args.grids);

    const Scene scene = load_scene(args.scene);
    const VideoTensor ground_truth = render(scene, base.condition.target);

    std::vector<AblationRow> rows(points.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    const auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= points.size()) return;
            try {
                const PipelineConfig& cfg = points[i].config;
                const RunResult res = run(scene, cfg);
                AblationRow& row = rows[i];
                row.id = points[i].id;
                row.gamma = cfg.cla.gamma;
                row.schedule = detail::kind_name(cfg.fusion.kind);
                row.k = cfg.fusion.kind == FusionSchedule::Kind::power_decay
                            ? cfg.fusion.exponent
                            : cfg.fusion.constant;
                row.sigma = cfg.condition.sigma;
                row.report = compute_report(res.output, res.source, ground_truth);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };

    const unsigned workers = worker_count(points.size());
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned i = 0; i < workers; ++i) pool.emplace_back(work);
        for (std::thread& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    fs::create_directories(args.out);
    const std::string csv = (fs::path(args.out) / "ablate.csv").string();
    write_ablation_csv(csv, rows);
    std::cout << "wrote " << csv << " (" << rows.size() << " grid points)\n";
    return 0;
}

struct MetricsArgs {
    std::string frames_a;
    std::string frames_b;
    std::string out;
};

int do_metrics(const MetricsArgs& args) {
    const VideoTensor a = read_frames(args.frames_a);
    const VideoTensor b = read_frames(args.frames_b);
    // Sequence a is scored for stability on its own; b serves as the motion
    // and value reference.
    const MetricsReport rep = compute_report(a, b, b);
    const json j = report_to_json(rep);
    std::cout << j.dump(2) << "\n";
    if (!args.out.empty()) write_json_file(args.out, j);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"video relighting in an exactly linear light transport world"};
    app.require_subcommand(1);

    SceneArgs scene_args;
    CLI::App* scene_cmd = app.add_subcommand("scene", "synthesize a scene and write it to disk");
    scene_cmd->add_option("--out", scene_args.out, "scene file path")->required();
    scene_cmd->add_option("--seed", scene_args.seed, "texture seed");
    scene_cmd->add_option("--frames", scene_args.spec.frames, "frame count");
    scene_cmd->add_option("--channels", scene_args.spec.channels, "color channels (1 or 3)");
    scene_cmd->add_option("--size", scene_args.size, "square frame size");
    scene_cmd->add_option("--height", scene_args.spec.height, "frame height");
    scene_cmd->add_option("--width", scene_args.spec.width, "frame width");
    scene_cmd->add_option("--lights", scene_args.spec.lights, "light basis size");
    scene_cmd->add_option("--object-size", scene_args.spec.object_size, "disk diameter");
    scene_cmd->add_option("--object-x", scene_args.spec.object_x, "disk x at frame 0");
    scene_cmd->add_option("--object-y", scene_args.spec.object_y, "disk y at frame 0");
    scene_cmd->add_option("--speed-x", scene_args.spec.speed_x, "disk x speed per frame");
    scene_cmd->add_option("--speed-y", scene_args.spec.speed_y, "disk y speed per frame");
    scene_cmd->add_option("--coverage", scene_args.coverage,
                          "foreground coverage: object, full or empty");

    RunArgs run_args;
    CLI::App* run_cmd = app.add_subcommand("run", "run the relighting pipeline");
    run_cmd->add_option("--scene", run_args.scene, "scene file");
    run_cmd->add_option("--config", run_args.config, "pipeline config JSON or a run manifest")
        ->required();
    run_cmd->add_option("--out", run_args.out, "output directory")->required();
    run_cmd->add_option("--mode", run_args.mode, "standard or background-generation");

    AblateArgs ablate_args;
    CLI::App* ablate_cmd = app.add_subcommand("ablate", "run a parameter grid, aggregate a CSV");
    ablate_cmd->add_option("--scene", ablate_args.scene, "scene file")->required();
    ablate_cmd->add_option("--config", ablate_args.config, "base pipeline config JSON");
    ablate_cmd->add_option("--out", ablate_args.out, "output directory")->required();
    ablate_cmd->add_option("--grid", ablate_args.grids,
                           "axis values, e.g. gamma=0,0.5,1 or lambda=1,const1 or sigma=0.1");

    MetricsArgs metrics_args;
    CLI::App* metrics_cmd = app.add_subcommand("metrics", "compare two frame directories");
    metrics_cmd->add_option("--frames-a", metrics_args.frames_a, "scored frame directory")
        ->required();
    metrics_cmd->add_option("--frames-b", metrics_args.frames_b, "reference frame directory")
        ->required();
    metrics_cmd->add_option("--out", metrics_args.out, "also write the report here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*scene_cmd) return do_scene(scene_args);
        if (*run_cmd) return do_run(run_args);
        if (*ablate_cmd) return do_ablate(ablate_args);
        return do_metrics(metrics_args);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
