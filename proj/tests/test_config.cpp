#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "pgdk/config.hpp"
#include "pgdk/errors.hpp"

using namespace pgdk;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    const std::string path = (std::filesystem::temp_directory_path() / name).string();
    std::ofstream out(path);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("empty config file yields all defaults") {
    const std::string path = write_temp("pgdk_cfg_empty.cfg", "");
    TrainConfig c = parse_config(path);
    CHECK(c.gamma == 0.99);
    CHECK(c.batch == 64);
    CHECK(c.r == 0);  // resolved to max(2n, 8) at train time
    CHECK(c.env == "double_integrator");
    CHECK(c.alpha_f > c.alpha_J);
    CHECK(c.alpha_J > c.alpha_mu);
    std::filesystem::remove(path);
}

TEST_CASE("empty path also yields defaults") {
    TrainConfig c = parse_config("");
    CHECK(c.gamma == 0.99);
}

TEST_CASE("keys, comments, and whitespace parse") {
    const std::string path = write_temp("pgdk_cfg_keys.cfg",
                                        "# a comment line\n"
                                        "gamma = 0.5\n"
                                        "\n"
                                        "env=pendulum   # trailing comment\n"
                                        "episodes=7\n"
                                        "augment_state=true\n"
                                        "env.max_torque=3.5\n");
    TrainConfig c = parse_config(path);
    CHECK(c.gamma == 0.5);
    CHECK(c.env == "pendulum");
    CHECK(c.episodes == 7);
    CHECK(c.augment_state);
    CHECK(c.env_overrides.at("max_torque") == 3.5);
    std::filesystem::remove(path);
}

TEST_CASE("overrides apply last") {
    const std::string path = write_temp("pgdk_cfg_ovr.cfg", "gamma=0.5\nepisodes=3\n");
    TrainConfig c = parse_config(path, {"gamma=0.9", "seed=42"});
    CHECK(c.gamma == 0.9);
    CHECK(c.episodes == 3);
    CHECK(c.seed == 42);
    std::filesystem::remove(path);
}

TEST_CASE("unknown keys report the line number") {
    const std::string path = write_temp("pgdk_cfg_unknown.cfg", "gamma=0.9\nwhatever=1\n");
    try {
        parse_config(path);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find(":2:") != std::string::npos);
        CHECK(msg.find("whatever") != std::string::npos);
    }
    std::filesystem::remove(path);
}

TEST_CASE("unparsable values report the line number") {
    const std::string path = write_temp("pgdk_cfg_badval.cfg", "episodes=abc\n");
    try {
        parse_config(path);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find(":1:") != std::string::npos);
    }
    std::filesystem::remove(path);
}

TEST_CASE("missing '=' reports the line number") {
    const std::string path = write_temp("pgdk_cfg_noeq.cfg", "gamma 0.9\n");
    try {
        parse_config(path);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find(":1:") != std::string::npos);
    }
    std::filesystem::remove(path);
}

TEST_CASE("ordering violation is rejected at parse time") {
    const std::string path = write_temp("pgdk_cfg_order.cfg", "alpha_mu=1e-2\n");
    CHECK_THROWS_WITH_AS(parse_config(path),
                         doctest::Contains("ordering"), ConfigError);
    std::filesystem::remove(path);
}

TEST_CASE("missing file is a config error") {
    CHECK_THROWS_AS(parse_config("/nonexistent/pgdk.cfg"), ConfigError);
}

TEST_CASE("malformed override string is rejected") {
    TrainConfig c;
    CHECK_THROWS_AS(apply_override(c, "gamma0.5"), ConfigError);
    CHECK_THROWS_AS(apply_override(c, "nope=1"), ConfigError);
    apply_override(c, "gamma=0.7");
    CHECK(c.gamma == 0.7);
}

TEST_CASE("manifest round-trips the resolved config") {
    TrainConfig c;
    c.env = "pendulum";
    c.gamma = 0.95;
    c.alpha_f = 0.011;
    c.alpha_J = 0.0052;
    c.alpha_mu = 0.00071;
    c.episodes = 13;
    c.seed = 99;
    c.augment_state = true;
    c.env_overrides["max_torque"] = 4.25;
    const std::string path =
        (std::filesystem::temp_directory_path() / "pgdk_manifest_rt.txt").string();
    write_manifest(c, path);
    TrainConfig back = parse_config(path);
    CHECK(back.env == c.env);
    CHECK(back.gamma == c.gamma);
    CHECK(back.alpha_f == c.alpha_f);
    CHECK(back.alpha_J == c.alpha_J);
    CHECK(back.alpha_mu == c.alpha_mu);
    CHECK(back.episodes == c.episodes);
    CHECK(back.seed == c.seed);
    CHECK(back.augment_state == c.augment_state);
    CHECK(back.env_overrides.at("max_torque") == 4.25);
    std::filesystem::remove(path);
}
