#include <doctest.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "sfcl/config.hpp"
#include "sfcl/csv.hpp"
#include "sfcl/pgm.hpp"
#include "sfcl/rng.hpp"

using namespace sfcl;
namespace fs = std::filesystem;

TEST_SUITE_BEGIN("config");

TEST_CASE("default config text parses back to the defaults") {
    const RunConfig base;
    const RunConfig parsed = parse_config_text(default_config_text());
    CHECK(parsed.mode == base.mode);
    CHECK(parsed.master_seed == base.master_seed);
    CHECK(parsed.scene.height == base.scene.height);
    CHECK(parsed.scene.intensities == base.scene.intensities);
    CHECK(parsed.layout.client_counts == base.layout.client_counts);
    CHECK(parsed.layout.corruption_ratios == base.layout.corruption_ratios);
    CHECK(parsed.noise.amax_scale == base.noise.amax_scale);
    CHECK(parsed.lr == base.lr);
    CHECK(parsed.tau0 == base.tau0);
    CHECK(parsed.label_T == base.label_T);
    CHECK(parsed.eta == base.eta);
    CHECK(parsed.global_rounds == base.global_rounds);
}

TEST_CASE("unknown keys and malformed lines are rejected with line numbers") {
    CHECK_THROWS_WITH_AS(parse_config_text("classes = 3\nbogus_key = 1\n"),
                         doctest::Contains("line 2"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text("classes 3\n"),
                         doctest::Contains("line 1"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text("lr = fast\n"),
                         doctest::Contains("'lr'"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("mode = magic\n"), ConfigError);
}

TEST_CASE("validation failures carry a ConfigError") {
    CHECK_THROWS_AS(parse_config_text("classes = 4\n"), ConfigError);  // intensities
    CHECK_THROWS_AS(parse_config_text("client_counts = 5\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("label_T = 1.5\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("config_version = 2\n"), ConfigError);
}

TEST_CASE("comments, blank lines, list spacing") {
    const RunConfig c = parse_config_text(
        "# a comment\n"
        "\n"
        "mode = fedavg   # trailing comment\n"
        "client_counts = 4,5 , 6\n"
        "corruption_ratios = 0.1, 0.2,0.3\n"
        "test_count = 2\n");
    CHECK(c.mode == proto::Mode::fedavg);
    CHECK(c.layout.client_counts == std::vector<long>{4, 5, 6});
}

TEST_CASE("SFCL_SEED overrides the master seed") {
    RunConfig c;
    c.master_seed = 1;
    setenv("SFCL_SEED", "987654", 1);
    apply_env_overrides(c);
    unsetenv("SFCL_SEED");
    CHECK(c.master_seed == 987654);

    setenv("SFCL_SEED", "not-a-number", 1);
    CHECK_THROWS_AS(apply_env_overrides(c), ConfigError);
    unsetenv("SFCL_SEED");
}

TEST_CASE("csv fmt round-trips doubles exactly") {
    for (double x : {1.0 / 3.0, 1e-300, 6.02214076e23, -0.0, 123456789.123456789,
                     std::numeric_limits<double>::infinity()}) {
        const std::string s = csv::fmt(x);
        const double back = std::strtod(s.c_str(), nullptr);
        CHECK(std::memcmp(&back, &x, sizeof(double)) == 0);
    }
}

TEST_CASE("csv read splits rows and keeps empty cells") {
    const std::string path = (fs::temp_directory_path() / "sfcl_csv_test.csv").string();
    {
        std::ofstream out(path);
        out << "a,b,c\n1,,3\n";
    }
    const auto rows = csv::read(path);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == std::vector<std::string>{"a", "b", "c"});
    CHECK(rows[1] == std::vector<std::string>{"1", "", "3"});
    fs::remove(path);
}

TEST_CASE("pgm round-trip for images and labels") {
    const std::string dir = (fs::temp_directory_path() / "sfcl_pgm_test").string();
    fs::create_directories(dir);

    ScalarField img(5, 7);
    for (size_t i = 0; i < img.v.size(); ++i) img.v[i] = static_cast<double>(i) / 34.0;
    pgm::write_image(dir + "/img.pgm", img);
    const auto g = pgm::read(dir + "/img.pgm");
    CHECK(g.height == 5);
    CHECK(g.width == 7);
    const ScalarField back = pgm::to_image(g);
    for (size_t i = 0; i < img.v.size(); ++i)
        CHECK(back.v[i] == doctest::Approx(img.v[i]).epsilon(1.0 / 255.0 + 1e-9));

    LabelMask label(4, 4, 3, 0);
    label.set(1, 1, 1);
    label.set(2, 2, 2);
    pgm::write_label(dir + "/label.pgm", label);
    const LabelMask lback = pgm::to_label(pgm::read(dir + "/label.pgm"), 3);
    CHECK(lback == label);
    CHECK_THROWS_AS(pgm::to_label(pgm::read(dir + "/label.pgm"), 2), Error);

    CHECK_THROWS_AS(pgm::read(dir + "/missing.pgm"), Error);
    {
        std::ofstream bad(dir + "/bad.pgm", std::ios::binary);
        bad << "P2\n2 2\n255\n0 0 0 0\n";
    }
    CHECK_THROWS_AS(pgm::read(dir + "/bad.pgm"), Error);
    fs::remove_all(dir);
}

TEST_SUITE_END();
