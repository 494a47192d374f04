#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "idlewave/noise.hpp"
#include "idlewave/rng.hpp"

using namespace idlewave;

TEST_CASE("rank sets") {
    RankSet all = RankSet::everyone();
    CHECK(all.contains(0));
    CHECK(all.contains(123456));

    RankSet some = RankSet::of_ranges({{10, 12}, {0, 3}});
    CHECK(some.contains(0));
    CHECK(some.contains(3));
    CHECK_FALSE(some.contains(4));
    CHECK(some.contains(10));
    CHECK(some.contains(12));
    CHECK_FALSE(some.contains(13));
}

TEST_CASE("speed factor picks the matching override") {
    NoiseConfig cfg;
    cfg.default_speed_factor = 1.0;
    cfg.speed_overrides.push_back({100, 109, 10.0});
    cfg.speed_overrides.push_back({200, 200, 0.5});
    CHECK(cfg.speed_factor(0) == 1.0);
    CHECK(cfg.speed_factor(99) == 1.0);
    CHECK(cfg.speed_factor(100) == 10.0);
    CHECK(cfg.speed_factor(109) == 10.0);
    CHECK(cfg.speed_factor(110) == 1.0);
    CHECK(cfg.speed_factor(200) == 0.5);
}

TEST_CASE("injected delays sum per rank and cycle") {
    NoiseConfig cfg;
    cfg.injected_delays.push_back({2, 5, 1000});
    cfg.injected_delays.push_back({2, 5, 500});
    cfg.injected_delays.push_back({2, 6, 42});
    cfg.injected_delays.push_back({3, 5, 7});
    CHECK(cfg.injected_total(2, 5) == 1500);
    CHECK(cfg.injected_total(2, 6) == 42);
    CHECK(cfg.injected_total(3, 5) == 7);
    CHECK(cfg.injected_total(0, 0) == 0);
}

TEST_CASE("compute cost is exact without jitter and scales with the factor") {
    NoiseConfig cfg;
    const std::uint64_t seed = rng::substream(rng::rank_seed(1, 0), 1);
    CHECK(compute_cost(0, 0, 1'000'000, cfg, seed) == 1'000'000);
    CHECK(compute_cost(0, 99, 123'457, cfg, seed) == 123'457);

    cfg.default_speed_factor = 2.0;
    CHECK(compute_cost(0, 0, 1'000'000, cfg, seed) == 2'000'000);
    cfg.speed_overrides.push_back({0, 0, 0.25});
    CHECK(compute_cost(0, 0, 1'000'000, cfg, seed) == 250'000);
    CHECK(compute_cost(1, 0, 1'000'000, cfg, seed) == 2'000'000);
}

TEST_CASE("jittered compute cost is deterministic") {
    // frozen: rank 3 of master seed 42, sigma 0.02, cycle 7
    NoiseConfig cfg;
    cfg.jitter_sigma = 0.02;
    const std::uint64_t seed = rng::substream(rng::rank_seed(42, 3), 1);
    CHECK(compute_cost(3, 7, 1'000'000, cfg, seed) == 971'326);
    CHECK(compute_cost(3, 7, 1'000'000, cfg, seed) == 971'326);
    CHECK(compute_cost(3, 8, 1'000'000, cfg, seed) != 971'326);
}

TEST_CASE("noise event starts without jitter are exact multiples") {
    OsNoiseClass cls;
    cls.period = 10'000;
    cls.duration = 100;
    for (std::uint64_t k = 0; k < 5; ++k)
        CHECK(detail::noise_event_start(7, 0, cls, k) == Cycles(k * 10'000));
}

TEST_CASE("jittered noise event starts are frozen and ordered") {
    OsNoiseClass cls;
    cls.period = 10'000;
    cls.duration = 100;
    cls.jitter_fraction = 0.4;
    const std::uint64_t ns = rng::substream(rng::rank_seed(42, 0), 2);
    CHECK(detail::noise_event_start(ns, 0, cls, 0) == 3062);
    CHECK(detail::noise_event_start(ns, 0, cls, 1) == 7747);
    CHECK(detail::noise_event_start(ns, 0, cls, 2) == 17372);
    CHECK(detail::noise_event_start(ns, 0, cls, 3) == 30133);
    // jitter_fraction <= 0.5 keeps successive events in start order
    Cycles prev = 0;
    for (std::uint64_t k = 0; k < 200; ++k) {
        const Cycles s = detail::noise_event_start(ns, 0, cls, k);
        CHECK(s >= prev);
        prev = s;
    }
}

TEST_CASE("os noise schedule respects horizon and affected set") {
    OsNoiseClass cls;
    cls.period = 1000;
    cls.duration = 10;
    cls.affected = RankSet::of_ranges({{0, 3}});

    const auto sched = os_noise_schedule(2, 3500, cls, 0, 99);
    REQUIRE(sched.size() == 4);
    CHECK(sched[0] == BlackoutInterval{0, 10});
    CHECK(sched[1] == BlackoutInterval{1000, 10});
    CHECK(sched[2] == BlackoutInterval{2000, 10});
    CHECK(sched[3] == BlackoutInterval{3000, 10});

    CHECK(os_noise_schedule(4, 3500, cls, 0, 99).empty());
    CHECK(os_noise_schedule(2, 0, cls, 0, 99).empty());
}

TEST_CASE("blackout feed merges classes in start order") {
    std::vector<OsNoiseClass> classes(2);
    classes[0].period = 1000;
    classes[0].duration = 10;
    classes[1].period = 700;
    classes[1].duration = 5;

    const std::uint64_t seed = 1234;
    const Cycles horizon = 5000;
    auto a = os_noise_schedule(0, horizon, classes[0], 0, seed);
    auto b = os_noise_schedule(0, horizon, classes[1], 1, seed);
    std::vector<BlackoutInterval> merged;
    merged.insert(merged.end(), a.begin(), a.end());
    merged.insert(merged.end(), b.begin(), b.end());
    std::sort(merged.begin(), merged.end(),
              [](const BlackoutInterval& x, const BlackoutInterval& y) {
                  return x.start < y.start;
              });

    BlackoutFeed feed(0, classes, seed);
    for (const auto& want : merged) {
        auto got = feed.peek_ending_after(0);
        REQUIRE(got.has_value());
        CHECK(*got == want);
        feed.consume();
    }
}

TEST_CASE("blackout feed skips intervals that already ended") {
    std::vector<OsNoiseClass> classes(1);
    classes[0].period = 100;
    classes[0].duration = 10;

    BlackoutFeed feed(0, classes, 5);
    // intervals: [0,10), [100,110), [200,210), ...
    auto got = feed.peek_ending_after(500);
    REQUIRE(got.has_value());
    CHECK(got->start == 500);  // [500,510) is the first ending after t=500
    feed.consume();
    got = feed.peek_ending_after(505);
    REQUIRE(got.has_value());
    CHECK(got->start == 600);
}

TEST_CASE("empty feed yields nothing") {
    std::vector<OsNoiseClass> none;
    BlackoutFeed feed(0, none, 5);
    CHECK_FALSE(feed.peek_ending_after(0).has_value());

    std::vector<OsNoiseClass> zero_dur(1);
    zero_dur[0].duration = 0;
    BlackoutFeed feed2(0, zero_dur, 5);
    CHECK_FALSE(feed2.peek_ending_after(0).has_value());
}
