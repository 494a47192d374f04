// Command line front end: simulate, analyze, render, ingest.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "idlewave/idlewave.hpp"

namespace {

using namespace idlewave;

struct CommonArgs {
    std::string config_path;
    std::string trace_path;
    std::string out_path;
    std::string preset;
    std::optional<std::uint64_t> seed;
    Cycles threshold = 1'000'000;
};

SimConfig resolve_config(const CommonArgs& a) {
    if (!a.config_path.empty()) return load_config(a.config_path, a.seed);
    if (!a.preset.empty()) {
        SimConfig cfg;
        if (!apply_preset(a.preset, cfg))
            throw ConfigError("preset: unknown preset '" + a.preset + "'");
        if (!a.seed) throw ConfigError("seed: required (pass --seed with --preset)");
        cfg.seed = *a.seed;
        validate(cfg);
        return cfg;
    }
    throw ArgumentError("either --config or --preset is required");
}

void write_text(const std::string& path, const std::string& data) {
    if (path.empty() || path == "-") {
        std::cout << data;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out.write(data.data(), std::streamsize(data.size()));
    if (!out) throw Error("short write to '" + path + "'");
}

ImageFormat pick_format(const std::string& flag, const std::string& path) {
    std::string f = flag;
    if (f.empty()) {
        const auto dot = path.rfind('.');
        const std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
        if (ext == "svg") f = "svg";
        else if (ext == "txt") f = "txt";
        else f = "ppm";
    }
    if (f == "ppm") return ImageFormat::Ppm;
    if (f == "svg") return ImageFormat::Svg;
    if (f == "txt") return ImageFormat::Ascii;
    throw ArgumentError("unknown image format '" + f + "' (expected ppm, svg or txt)");
}

std::vector<SignedCycles> shifts_from_file(const std::string& path, Rank ranks) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open shifts file '" + path + "'");
    std::vector<SignedCycles> shifts(ranks, 0);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream row(line);
        std::uint64_t rank;
        SignedCycles shift;
        if (!(row >> rank)) continue;
        if (!(row >> shift))
            throw ParseError("shifts line " + std::to_string(lineno) + ": expected 'rank shift'");
        if (rank >= ranks)
            throw ParseError("shifts line " + std::to_string(lineno) + ": rank " +
                             std::to_string(rank) + " out of range");
        shifts[Rank(rank)] = shift;
    }
    return shifts;
}

std::vector<SignedCycles> shifts_from_report(const std::string& path, Rank ranks) {
    const SyncReport rep = parse_sync_report_file(path);
    std::vector<SignedCycles> shifts(ranks, 0);
    for (const auto& p : rep.phases) {
        if (p.rank >= ranks)
            throw ValidationError("sync report rank " + std::to_string(p.rank) +
                                  " out of range for this trace");
        shifts[p.rank] = p.shift_cycles;
    }
    return shifts;
}

int run(int argc, char** argv) {
    CLI::App app{"Halo-exchange idle wave simulator and analyzer"};
    app.require_subcommand(1);
    CommonArgs a;

    // simulate
    auto* sim = app.add_subcommand("simulate", "Run the simulator and write a trace");
    auto* sim_cfg = sim->add_option("--config", a.config_path, "Config file");
    sim->add_option("--preset", a.preset, "Topology preset: pal, seapearl or beskow")
        ->excludes(sim_cfg);
    sim->add_option("--seed", a.seed, "Override (or supply) the RNG seed");
    sim->add_option("--out", a.out_path, "Trace output path (default stdout)");
    bool swap_waits = false;
    sim->add_flag("--swap-wait-order", swap_waits, "Wait right neighbor before left");

    // analyze
    auto* ana = app.add_subcommand("analyze", "Analyze a trace");
    ana->require_subcommand(1);
    auto* ana_stats = ana->add_subcommand("stats", "Idle period statistics per rank");
    auto* ana_waves = ana->add_subcommand("waves", "Detect propagating idle wave fronts");
    auto* ana_sync = ana->add_subcommand("sync", "Detect self-synchronization");
    Cycles window = 0, sync_bin = 1'000'000;
    std::uint32_t min_periods = 10;
    for (auto* sub : {ana_stats, ana_waves, ana_sync}) {
        sub->add_option("--trace", a.trace_path, "Trace file")->required();
        sub->add_option("--out", a.out_path, "Report output path (default stdout)");
        sub->add_option("--threshold", a.threshold, "Minimum idle length in cycles")
            ->capture_default_str();
    }
    ana_waves->add_option("--window", window, "Max onset gap per rank step (0: auto)");
    ana_sync->add_option("--bin", sync_bin, "Binarization bin width in cycles")
        ->capture_default_str();
    ana_sync->add_option("--min-periods", min_periods,
                         "Required trace length in periods; shorter spans fail")
        ->capture_default_str();

    // render
    auto* ren = app.add_subcommand("render", "Render a trace to an image");
    ren->require_subcommand(1);
    auto* ren_heat = ren->add_subcommand("heatmap", "Rank/time idle heatmap");
    auto* ren_time = ren->add_subcommand("timelines", "Per-rank timelines with time shifts");
    RenderConfig rc;
    rc.threshold = 1'000'000;
    std::string format, shifts_path, report_path;
    for (auto* sub : {ren_heat, ren_time}) {
        sub->add_option("--trace", a.trace_path, "Trace file")->required();
        sub->add_option("--out", a.out_path, "Image output path")->required();
        sub->add_option("--config", a.config_path,
                        "Config file, for node/socket separator lines");
        sub->add_option("--width", rc.width, "Image width in pixels")->capture_default_str();
        sub->add_option("--height", rc.height, "Image height (0: one row per rank)");
        sub->add_option("--threshold", rc.threshold, "Minimum idle length in cycles")
            ->capture_default_str();
        sub->add_option("--time-bin", rc.time_bin, "Time bin in cycles (0: span/width)");
        sub->add_option("--format", format, "ppm, svg or txt (default: from extension)");
    }
    ren_time->add_option("--shifts", shifts_path, "File of 'rank shift' lines");
    ren_time->add_option("--sync-report", report_path, "Shift by the phases of a sync report");

    // ingest
    auto* ing = app.add_subcommand("ingest", "Convert measured idle periods from CSV");
    std::string csv_path;
    std::uint64_t clock_hz = 2'300'000'000;
    ing->add_option("--csv", csv_path, "CSV with rank,cycle,peer,dir,start,end")->required();
    ing->add_option("--out", a.out_path, "Trace output path (default stdout)");
    ing->add_option("--clock-hz", clock_hz, "Clock rate recorded in the header")
        ->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    if (sim->parsed()) {
        const SimConfig cfg = resolve_config(a);
        EngineOptions opts;
        opts.swap_wait_order = swap_waits;
        const SimResult res = run_simulation(cfg, opts);
        write_text(a.out_path, write_trace(res.trace));
        Cycles makespan = 0, idle = 0;
        for (const auto& r : res.ranks) {
            makespan = std::max(makespan, r.completion);
            idle += r.acct.idle;
        }
        std::cerr << "simulated " << cfg.topology.ranks << " ranks on "
                  << cfg.topology.node_count() << " node(s), " << cfg.app.cycles << " cycles, "
                  << res.trace.records.size() << " idle records, makespan " << makespan
                  << " cycles, total idle " << idle << " cycles\n";
        return 0;
    }

    if (ana_stats->parsed()) {
        write_text(a.out_path, write_stats(idle_stats(read_trace_file(a.trace_path), a.threshold)));
        return 0;
    }
    if (ana_waves->parsed()) {
        const Trace t = read_trace_file(a.trace_path);
        write_text(a.out_path, write_waves(detect_waves(t, a.threshold, window)));
        return 0;
    }
    if (ana_sync->parsed()) {
        SyncConfig sc;
        sc.threshold = a.threshold;
        sc.bin = sync_bin;
        sc.min_periods = min_periods;
        const SyncReport rep = detect_self_sync(read_trace_file(a.trace_path), sc);
        write_text(a.out_path, write_sync_report(rep));
        if (rep.low_confidence) {
            std::cerr << "trace spans fewer than " << min_periods << " periods of "
                      << rep.period << " cycles; conclusions are unreliable\n";
            return 2;
        }
        return 0;
    }

    if (ren_heat->parsed() || ren_time->parsed()) {
        const Trace t = read_trace_file(a.trace_path);
        std::optional<Topology> topo;
        // seed irrelevant here, only the topology is used
        if (!a.config_path.empty()) topo = load_config(a.config_path, std::uint64_t{0}).topology;
        Image img;
        if (ren_heat->parsed()) {
            img = render_heatmap(t, rc, topo);
        } else {
            if (shifts_path.empty() && report_path.empty())
                throw ArgumentError("timelines need --shifts or --sync-report");
            const auto shifts = !shifts_path.empty()
                                    ? shifts_from_file(shifts_path, t.header.ranks)
                                    : shifts_from_report(report_path, t.header.ranks);
            img = render_shifted_timelines(t, shifts, rc, topo);
        }
        write_image_file(img, a.out_path, pick_format(format, a.out_path));
        return 0;
    }

    if (ing->parsed()) {
        const Trace t = ingest_csv_file(csv_path, clock_hz);
        write_text(a.out_path, write_trace(t));
        std::cerr << "ingested " << t.records.size() << " records over " << t.header.ranks
                  << " ranks\n";
        return 0;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const idlewave::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
