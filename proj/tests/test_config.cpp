#include "cfmimo/config.hpp"

#include "test_support.hpp"

#include <doctest.h>

using namespace cfmimo;

TEST_CASE("micro config parses and validates")
{
    const ScenarioConfig c = testing::micro_config();
    CHECK(c.seed == 7);
    CHECK(c.geom.n_node == 1);
    CHECK(c.beamform.algorithm == Scheme::Mmse);
    CHECK(c.power.normalization == Normalization::Mpc);
    CHECK(c.p_t_w() == doctest::Approx(db_to_linear(18.77)).epsilon(1e-3));
}

TEST_CASE("unknown keys are rejected by path")
{
    json j = testing::micro_config_json();
    j["geom"]["bogus_knob"] = 1;
    CHECK_THROWS_WITH(parse_config(j), doctest::Contains("geom.bogus_knob"));

    json top = testing::micro_config_json();
    top["not_a_key"] = true;
    CHECK_THROWS_WITH(parse_config(top), doctest::Contains("not_a_key"));
}

TEST_CASE("unknown enum values name the key and value")
{
    json j = testing::micro_config_json();
    j["power"]["normalization"] = "banana";
    CHECK_THROWS_WITH(parse_config(j), doctest::Contains("banana"));
}

TEST_CASE("only the random scheduler exists")
{
    json j = testing::micro_config_json();
    j["sched"] = {{"kind", "random"}};
    CHECK(parse_config(j).sched.kind == "random");
    j["sched"]["kind"] = "round_robin";
    CHECK_THROWS_WITH(parse_config(j), doctest::Contains("random"));
}

TEST_CASE("cross-field validation catches impossible setups")
{
    json fr = testing::micro_config_json();
    fr["beamform"]["algorithm"] = "fr3";
    fr["geom"]["n_node"] = 2;
    CHECK_THROWS_WITH(parse_config(fr), doctest::Contains("single node"));

    json eps = testing::micro_config_json();
    eps["impair"] = {{"epsilon_rp", 1.5}};
    CHECK_THROWS(parse_config(eps));
}

TEST_CASE("presets parse and validate")
{
    for (const std::string name : {"desk", "paper"}) {
        json j = preset_json(name);
        // point the data files at the source tree
        j["antenna"]["params_file"] = testing::source_dir() + "/data/antenna_params.csv";
        j["channel"]["loss_table_file"] = testing::source_dir() + "/data/ntn_loss_tables.csv";
        const ScenarioConfig c = parse_config(j);
        CHECK(c.n_drops >= 1);
    }
    CHECK_THROWS(preset_json("giant"));
}

TEST_CASE("deep merge overlays nested objects")
{
    const json base = {{"a", 1}, {"nested", {{"x", 1}, {"y", 2}}}};
    const json patch = {{"nested", {{"y", 5}}}, {"b", 2}};
    const json merged = deep_merge(base, patch);
    CHECK(merged["a"] == 1);
    CHECK(merged["b"] == 2);
    CHECK(merged["nested"]["x"] == 1);
    CHECK(merged["nested"]["y"] == 5);
}

TEST_CASE("environment overrides map CFMIMO_ names onto config paths")
{
    json base = testing::micro_config_json();
    const std::vector<std::pair<std::string, std::string>> env = {
        {"CFMIMO_SEED", "99"},
        {"CFMIMO_POWER__NORMALIZATION", "sspc"},
        {"CFMIMO_GEOM__N_NODE", "2"},
        {"HOME", "/root"}, // unrelated variables are ignored
    };
    const json patched = apply_env_overrides(base, env);
    const ScenarioConfig c = parse_config(patched);
    CHECK(c.seed == 99);
    CHECK(c.power.normalization == Normalization::Sspc);
    CHECK(c.geom.n_node == 2);
}

TEST_CASE("config hash tracks results-determining content only")
{
    const ScenarioConfig a = testing::micro_config();
    ScenarioConfig b = a;
    CHECK(a.config_hash() == b.config_hash());
    b.seed = 8;
    CHECK(a.config_hash() != b.config_hash());

    // execution knobs do not invalidate the cache key
    ScenarioConfig c = a;
    c.jobs = 7;
    c.output_dir = "elsewhere";
    c.cache = true;
    CHECK(a.config_hash() == c.config_hash());
}

TEST_CASE("scenario ids are derived from the axes")
{
    ScenarioConfig c = testing::micro_config();
    const std::string sid = c.effective_scenario_id();
    CHECK(sid.find("mmse") != std::string::npos);
    CHECK(sid.find("mpc") != std::string::npos);
    c.scenario_id = "custom";
    CHECK(c.effective_scenario_id() == "custom");
}

TEST_CASE("phase misalignment conventions")
{
    ScenarioConfig c = testing::micro_config();
    CHECK(c.phase_sigma_rad() == 0.0);
    c.channel.phase_misalignment_variance = 2.0 * constants::pi;
    CHECK(c.phase_sigma_rad() == doctest::Approx(std::sqrt(2.0 * constants::pi)));
    c.channel.phase_convention = ChannelConfig::PhaseConvention::Stddev;
    CHECK(c.phase_sigma_rad() == doctest::Approx(2.0 * constants::pi));
}

TEST_CASE("config files load and bad JSON is reported")
{
    testing::TempDir tmp("config");
    const std::string good_path = tmp.path() + "/good.json";
    std::ofstream(good_path) << testing::micro_config_json().dump(2);
    const ScenarioConfig c = load_config_file(good_path);
    CHECK(c.seed == 7);

    const std::string bad_path = tmp.path() + "/bad.json";
    std::ofstream(bad_path) << "{ not json";
    CHECK_THROWS(load_config_file(bad_path));
    CHECK_THROWS(load_config_file(tmp.path() + "/missing.json"));
}
