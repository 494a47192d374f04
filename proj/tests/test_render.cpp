#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "idlewave/render.hpp"

using namespace idlewave;

namespace {

IdleRecord rec(Rank rank, Cycles start, Cycles end) {
    IdleRecord r;
    r.rank = rank;
    r.start = start;
    r.end = end;
    return r;
}

Trace two_rank_trace() {
    Trace t;
    t.header.ranks = 2;
    t.header.cycles = 1;
    t.records = {rec(0, 0, 100)};
    return t;
}

bool pixel_is(const Image& img, std::uint32_t x, std::uint32_t y, const std::uint8_t (&c)[3]) {
    const auto* p = img.pixel(x, y);
    return p[0] == c[0] && p[1] == c[1] && p[2] == c[2];
}

}  // namespace

TEST_CASE("palette is pinned") {
    CHECK(kBusyColor[0] == 236);
    CHECK(kBusyColor[1] == 200);
    CHECK(kBusyColor[2] == 80);
    CHECK(kIdleColor[0] == 24);
    CHECK(kIdleColor[1] == 60);
    CHECK(kIdleColor[2] == 212);
    CHECK(kNodeSepColor[0] == 0);
    CHECK(kSocketSepColor[0] == 120);
}

TEST_CASE("fully idle and fully busy rows take the palette endpoints") {
    RenderConfig cfg;
    cfg.width = 4;
    const Image img = render_heatmap(two_rank_trace(), cfg);
    CHECK(img.width == 4);
    CHECK(img.height == 2);
    for (std::uint32_t x = 0; x < 4; ++x) {
        CHECK(pixel_is(img, x, 0, kIdleColor));
        CHECK(pixel_is(img, x, 1, kBusyColor));
    }
}

TEST_CASE("half idle pixels blend the palette midpoint") {
    Trace t;
    t.header.ranks = 1;
    t.header.cycles = 1;
    // one idle covering half the span; the zero-length record stretches the
    // span to 100 without marking anything
    t.records = {rec(0, 0, 50), rec(0, 100, 100)};

    RenderConfig cfg;
    cfg.width = 1;
    const Image img = render_heatmap(t, cfg);
    const std::uint8_t mid[3] = {130, 130, 146};
    CHECK(pixel_is(img, 0, 0, mid));
}

TEST_CASE("threshold renders short idles as busy") {
    RenderConfig cfg;
    cfg.width = 4;
    cfg.threshold = 200;
    const Image img = render_heatmap(two_rank_trace(), cfg);
    for (std::uint32_t x = 0; x < 4; ++x) CHECK(pixel_is(img, x, 0, kBusyColor));
}

TEST_CASE("explicit height stretches rank rows") {
    RenderConfig cfg;
    cfg.width = 2;
    cfg.height = 4;
    const Image img = render_heatmap(two_rank_trace(), cfg);
    CHECK(img.height == 4);
    CHECK(pixel_is(img, 0, 0, kIdleColor));
    CHECK(pixel_is(img, 0, 1, kIdleColor));
    CHECK(pixel_is(img, 0, 2, kBusyColor));
    CHECK(pixel_is(img, 0, 3, kBusyColor));

    cfg.height = 1;
    CHECK_THROWS_AS(render_heatmap(two_rank_trace(), cfg), ArgumentError);
}

TEST_CASE("separator rows overwrite the heatmap") {
    Trace t;
    t.header.ranks = 8;
    t.header.cycles = 1;
    t.records = {rec(0, 0, 100)};
    Topology topo;
    topo.ranks = 8;
    topo.cores_per_socket = 2;
    topo.sockets_per_node = 2;
    RenderConfig cfg;
    cfg.width = 3;
    const Image img = render_heatmap(t, cfg, topo);
    REQUIRE(img.height == 8);
    for (std::uint32_t x = 0; x < 3; ++x) {
        CHECK(pixel_is(img, x, 2, kSocketSepColor));  // rank boundary 2
        CHECK(pixel_is(img, x, 4, kNodeSepColor));    // node boundary at rank 4
        CHECK(pixel_is(img, x, 6, kSocketSepColor));
        CHECK(pixel_is(img, x, 0, kIdleColor));
        CHECK(pixel_is(img, x, 1, kBusyColor));
    }

    cfg.separators = false;
    const Image plain = render_heatmap(t, cfg, topo);
    for (std::uint32_t x = 0; x < 3; ++x) CHECK(pixel_is(plain, x, 4, kBusyColor));
}

TEST_CASE("empty traces cannot be rendered") {
    Trace t;
    t.header.ranks = 2;
    CHECK_THROWS_AS(render_heatmap(t), ArgumentError);
    RenderConfig cfg;
    cfg.width = 0;
    CHECK_THROWS_AS(render_heatmap(two_rank_trace(), cfg), ArgumentError);
}

TEST_CASE("shifted timelines align staggered idles") {
    Trace t;
    t.header.ranks = 2;
    t.header.cycles = 1;
    t.records = {rec(0, 100, 200), rec(1, 300, 400)};

    RenderConfig cfg;
    cfg.width = 2;
    const Image img = render_shifted_timelines(t, {100, 300}, cfg);
    for (std::uint32_t x = 0; x < 2; ++x) {
        CHECK(pixel_is(img, x, 0, kIdleColor));
        CHECK(pixel_is(img, x, 1, kIdleColor));
    }
}

TEST_CASE("shifted timelines drop time pushed before zero") {
    Trace t;
    t.header.ranks = 2;
    t.header.cycles = 1;
    t.records = {rec(0, 100, 200), rec(1, 300, 400)};

    RenderConfig cfg;
    cfg.width = 2;
    // rank 0 keeps [0,50); rank 1 is pushed out entirely
    const Image img = render_shifted_timelines(t, {150, 500}, cfg);
    for (std::uint32_t x = 0; x < 2; ++x) {
        CHECK(pixel_is(img, x, 0, kIdleColor));
        CHECK(pixel_is(img, x, 1, kBusyColor));
    }

    CHECK_THROWS_AS(render_shifted_timelines(t, {1}, cfg), ArgumentError);
}

TEST_CASE("ppm bytes are exact") {
    Image img(1, 1);
    img.pixel(0, 0)[0] = 1;
    img.pixel(0, 0)[1] = 2;
    img.pixel(0, 0)[2] = 3;
    const std::string expected = std::string("P6\n1 1\n255\n") + '\x01' + '\x02' + '\x03';
    CHECK(encode_ppm(img) == expected);
}

TEST_CASE("svg merges horizontal runs") {
    Image img(3, 1);
    for (int c = 0; c < 3; ++c) {
        img.pixel(0, 0)[c] = kBusyColor[c];
        img.pixel(1, 0)[c] = kBusyColor[c];
        img.pixel(2, 0)[c] = kIdleColor[c];
    }
    const std::string svg = encode_svg(img);
    const std::string expected =
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"3\" height=\"1\" "
        "viewBox=\"0 0 3 1\" shape-rendering=\"crispEdges\">\n"
        "<rect x=\"0\" y=\"0\" width=\"2\" height=\"1\" fill=\"#ecc850\"/>\n"
        "<rect x=\"2\" y=\"0\" width=\"1\" height=\"1\" fill=\"#183cd4\"/>\n"
        "</svg>\n";
    CHECK(svg == expected);
}

TEST_CASE("ascii shades run from space to at") {
    Image img(3, 1);
    for (int c = 0; c < 3; ++c) {
        img.pixel(0, 0)[c] = kBusyColor[c];
        img.pixel(2, 0)[c] = kIdleColor[c];
    }
    img.pixel(1, 0)[0] = 130;  // the half blend
    img.pixel(1, 0)[1] = 130;
    img.pixel(1, 0)[2] = 146;
    CHECK(encode_ascii(img) == " +@\n");
}

TEST_CASE("image files are written whole") {
    Image img(2, 1);
    for (int c = 0; c < 3; ++c) {
        img.pixel(0, 0)[c] = kBusyColor[c];
        img.pixel(1, 0)[c] = kIdleColor[c];
    }
    const std::string path = "render_tmp.ppm";
    write_image_file(img, path, ImageFormat::Ppm);
    std::ifstream in(path, std::ios::binary);
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(data == encode_ppm(img));
    std::remove(path.c_str());
    CHECK_THROWS_AS(write_image_file(img, "/nonexistent/dir/x.ppm", ImageFormat::Ppm), Error);
}
