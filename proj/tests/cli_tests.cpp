// End-to-end checks of the command line tool. argv[1] is the binary under
// test, argv[2] the repository root.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "idlewave/idlewave.hpp"

namespace fs = std::filesystem;
using namespace idlewave;

namespace {

int failures = 0;
std::string cli;
fs::path dir;

void check(bool ok, const std::string& what) {
    if (ok) return;
    ++failures;
    std::cerr << "FAILED: " << what << "\n";
}

int run(const std::string& args) {
    const std::string cmd = cli + " " + args;
    const int st = std::system(cmd.c_str());
    if (st == -1) return -1;
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

int count_lines_with(const std::string& text, const std::string& needle) {
    int n = 0;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line))
        if (line.find(needle) != std::string::npos) ++n;
    return n;
}

/// 8 ranks pulsing with period 200 cycles, staggered 20 cycles per rank.
void write_staggered_trace(const fs::path& p) {
    Trace t;
    t.header.ranks = 8;
    t.header.cycles = 1;
    t.header.clock_hz = 1'000'000'000;
    t.header.config_fingerprint = "feedfacefeedface";
    for (Rank r = 0; r < 8; ++r)
        for (Cycles k = 0; k < 20; ++k) {
            IdleRecord rec;
            rec.rank = r;
            rec.dir = Direction::Left;
            rec.start = 200 * k + 20 * r;
            rec.end = rec.start + 10;
            t.records.push_back(rec);
        }
    t.sort_records();
    write_trace_file(t, p.string());
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 3) {
        std::cerr << "usage: cli_tests <cli-binary> <source-dir>\n";
        return 2;
    }
    cli = std::string("\"") + argv[1] + "\"";
    dir = fs::path("cli_tmp");
    fs::remove_all(dir);
    fs::create_directories(dir);

    const fs::path cfg = dir / "small.cfg";
    {
        std::ofstream out(cfg);
        out << "seed = 5\n"
               "[topology]\n"
               "ranks = 8\n"
               "[network]\n"
               "send_overhead = 1000\n"
               "[app]\n"
               "grid_points_per_rank = 50000\n"
               "cycles = 12\n"
               "[noise]\n"
               "jitter_sigma = 0.05\n"
               "inject = 3,2,1000000\n";
    }

    // no subcommand
    check(run("> /dev/null 2>&1") != 0, "bare invocation fails");
    check(run("frobnicate > /dev/null 2>&1") != 0, "unknown subcommand fails");

    // simulate: deterministic output, log on stderr
    const fs::path t1 = dir / "t1.ndjson", t2 = dir / "t2.ndjson", log = dir / "log";
    check(run("simulate --config " + q(cfg) + " --out " + q(t1) + " 2> " + q(log)) == 0,
          "simulate exits 0");
    check(run("simulate --config " + q(cfg) + " --out " + q(t2) + " 2> /dev/null") == 0,
          "simulate again exits 0");
    check(slurp(t1) == slurp(t2), "repeated simulation is byte identical");
    check(slurp(log).find("simulated 8 ranks") != std::string::npos, "summary on stderr");
    {
        const Trace t = read_trace_file(t1.string());
        check(t.header.ranks == 8, "trace has 8 ranks");
        check(t.header.cycles == 12, "trace has 12 cycles");
        check(t.records.size() == 12 * 14, "record count matches the boundary rule");
    }

    // simulate to stdout
    const fs::path t3 = dir / "t3.ndjson";
    check(run("simulate --config " + q(cfg) + " --out - > " + q(t3) + " 2> /dev/null") == 0,
          "simulate to stdout exits 0");
    check(slurp(t3) == slurp(t1), "stdout trace matches file trace");

    // seed override changes the jittered run
    const fs::path t4 = dir / "t4.ndjson";
    check(run("simulate --config " + q(cfg) + " --seed 99 --out " + q(t4) +
              " 2> /dev/null") == 0,
          "seed override accepted");
    check(slurp(t4) != slurp(t1), "different seed changes the trace");

    // preset handling
    check(run("simulate --preset seapearl --out /dev/null > /dev/null 2> " + q(log)) == 1,
          "preset without seed exits 1");
    check(slurp(log).find("error: config error: seed") != std::string::npos,
          "missing seed is a config error");
    check(run("simulate --preset nonesuch --seed 1 --out /dev/null 2> /dev/null") == 1,
          "unknown preset exits 1");
    check(run("simulate --preset pal --config " + q(cfg) + " --out /dev/null 2> /dev/null") != 0,
          "--preset and --config are mutually exclusive");

    // analyze stats
    const fs::path stats = dir / "stats.ndjson";
    check(run("analyze stats --trace " + q(t1) + " --threshold 0 --out " + q(stats) +
              " 2> /dev/null") == 0,
          "analyze stats exits 0");
    check(count_lines_with(slurp(stats), "\"rank_stats\"") == 8, "one stats line per rank");

    // analyze waves: the injected delay spreads both ways from rank 3
    const fs::path waves = dir / "waves.ndjson";
    check(run("analyze waves --trace " + q(t1) + " --threshold 500000 --out " + q(waves) +
              " 2> /dev/null") == 0,
          "analyze waves exits 0");
    check(count_lines_with(slurp(waves), "\"wave\"") >= 1, "at least one wave front");

    // analyze sync: aperiodic trace -> insufficient data
    check(run("analyze sync --trace " + q(t1) + " --out /dev/null 2> " + q(log)) == 1,
          "sync on aperiodic trace exits 1");
    check(slurp(log).find("error: insufficient data") != std::string::npos,
          "insufficient data reported");

    // analyze sync: synchronized pulse trains
    const fs::path synced = dir / "synced.ndjson", rep = dir / "rep.ndjson";
    write_staggered_trace(synced);
    check(run("analyze sync --trace " + q(synced) +
              " --threshold 10 --bin 10 --out " + q(rep) + " 2> /dev/null") == 0,
          "sync on pulse trains exits 0");
    {
        const SyncReport r = parse_sync_report_file(rep.string());
        check(r.synchronized, "pulse trains are synchronized");
        check(r.period == 200, "period is 200 cycles");
        check(r.included.size() == 8, "all 8 ranks included");
    }

    // same trace, but demanding more periods than it spans -> exit 2
    check(run("analyze sync --trace " + q(synced) +
              " --threshold 10 --bin 10 --min-periods 30 --out /dev/null 2> " + q(log)) == 2,
          "short span exits 2");
    check(slurp(log).find("unreliable") != std::string::npos, "low confidence warning");

    // render heatmap, three encodings
    const fs::path ppm = dir / "heat.ppm", svg = dir / "heat.svg", txt = dir / "heat.txt";
    check(run("render heatmap --trace " + q(t1) + " --out " + q(ppm) +
              " --width 32 2> /dev/null") == 0,
          "render heatmap ppm exits 0");
    {
        const std::string img = slurp(ppm);
        const std::string head = "P6\n32 8\n255\n";
        check(img.rfind(head, 0) == 0, "ppm header");
        check(img.size() == head.size() + 32 * 8 * 3, "ppm payload size");
    }
    check(run("render heatmap --trace " + q(t1) + " --out " + q(svg) +
              " --width 16 2> /dev/null") == 0,
          "render heatmap svg exits 0");
    check(slurp(svg).rfind("<?xml", 0) == 0, "svg by extension");
    check(run("render heatmap --trace " + q(t1) + " --out " + q(txt) +
              " --width 16 --format txt 2> /dev/null") == 0,
          "render heatmap txt exits 0");
    check(count_lines_with(slurp(txt), "") == 8, "ascii has one line per rank");
    check(run("render heatmap --trace " + q(t1) + " --out " + q(ppm) + " --config " + q(cfg) +
              " 2> /dev/null") == 0,
          "separators from config accepted");

    // timelines: needs shifts
    const fs::path tl = dir / "tl.ppm";
    check(run("render timelines --trace " + q(synced) + " --out " + q(tl) + " 2> " + q(log)) == 1,
          "timelines without shifts exits 1");
    check(slurp(log).find("--shifts or --sync-report") != std::string::npos,
          "timelines error names the missing option");

    const fs::path shifts = dir / "shifts.txt";
    {
        std::ofstream out(shifts);
        out << "# rank shift\n";
        for (Rank r = 0; r < 8; ++r) out << r << " " << 20 * r << "\n";
    }
    check(run("render timelines --trace " + q(synced) + " --shifts " + q(shifts) + " --out " +
              q(tl) + " --width 20 --threshold 10 2> /dev/null") == 0,
          "timelines with shifts exits 0");
    check(slurp(tl).rfind("P6\n20 8\n", 0) == 0, "timelines image written");

    {
        std::ofstream out(shifts);
        out << "99 5\n";
    }
    check(run("render timelines --trace " + q(synced) + " --shifts " + q(shifts) + " --out " +
              q(tl) + " 2> /dev/null") == 1,
          "out of range shift rank exits 1");

    check(run("render timelines --trace " + q(synced) + " --sync-report " + q(rep) + " --out " +
              q(tl) + " --width 20 --threshold 10 2> /dev/null") == 0,
          "timelines from sync report exits 0");

    // ingest
    const fs::path csv = dir / "measured.csv", ing = dir / "ingested.ndjson";
    {
        std::ofstream out(csv);
        out << "rank,cycle,peer,dir,start,end\n";
        out << "0,0,1,right,100,300\n";
        out << "1,0,none,left,50,70\n";
    }
    check(run("ingest --csv " + q(csv) + " --clock-hz 77 --out " + q(ing) + " 2> " + q(log)) == 0,
          "ingest exits 0");
    check(slurp(log).find("ingested 2 records") != std::string::npos, "ingest summary");
    {
        const Trace t = read_trace_file(ing.string());
        check(t.header.source == "ingested", "ingested source tag");
        check(t.header.clock_hz == 77, "ingested clock rate");
        check(t.header.ranks == 2, "ingested rank count");
    }
    {
        std::ofstream out(csv);
        out << "rank,cycle,dir,start,end\n0,0,sideways,1,2\n";
    }
    check(run("ingest --csv " + q(csv) + " --out /dev/null 2> " + q(log)) == 1,
          "bad csv exits 1");
    check(slurp(log).find("error: parse error") != std::string::npos, "csv error reported");

    // missing files
    check(run("analyze stats --trace /nonexistent.ndjson 2> /dev/null") == 1,
          "missing trace exits 1");
    check(run("simulate --config /nonexistent.cfg --out /dev/null 2> /dev/null") == 1,
          "missing config exits 1");

    if (failures == 0) {
        std::cout << "cli_tests: all checks passed\n";
        return 0;
    }
    std::cout << "cli_tests: " << failures << " check(s) failed\n";
    return 1;
}
