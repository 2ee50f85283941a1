#include <catch_amalgamated.hpp>

#include <filesystem>
#include <map>
#include <sstream>

#include "joma/lab/registry.hpp"

using namespace joma;
using namespace joma::lab;

namespace {

fs::path scratch_dir(const std::string& name)
{
    const auto d = fs::temp_directory_path() / ("joma_test_lab_" + name);
    fs::remove_all(d);
    return d;
}

// Random values of the field's own type; validity is left to validate().
struct Randomizer {
    num::Rng& rng;

    void operator()(const char*, bool& b) { b = rng.bernoulli(0.5); }
    void operator()(const char*, int& i) { i = 1 + static_cast<int>(rng.below(40)); }
    void operator()(const char*, long& i) { i = 1 + static_cast<long>(rng.below(400)); }
    void operator()(const char*, double& x) { x = rng.uniform(-2, 2) * std::pow(10.0, rng.uniform(-6, 3)); }
    void operator()(const char*, std::string&) {}
    void operator()(const char*, std::vector<double>& v)
    {
        v.resize(1 + rng.below(4));
        for (auto& x : v) x = rng.uniform(0.1, 3.0);
    }
    void operator()(const char*, std::vector<int>& v)
    {
        v.resize(1 + rng.below(4));
        for (auto& x : v) x = 1 + static_cast<int>(rng.below(30));
    }
};

template <class C>
void round_trip_property(std::uint64_t seed)
{
    num::Rng rng(seed);
    int kept = 0;
    for (int trial = 0; trial < 300; ++trial) {
        C c;
        // mutate a random subset of fields
        C::fields(c, [&](const char* key, auto& member) {
            if (rng.bernoulli(0.3)) Randomizer{rng}(key, member);
        });
        try {
            c.validate();
        } catch (const config_error&) {
            continue;
        }
        ++kept;
        const auto text = print_config(c);
        const C back = parse_config<C>(text);
        CHECK(back == c);
        CHECK(print_config(back) == text);
    }
    CHECK(kept > 20);
}

} // namespace

TEST_CASE("config round-trip over randomized configs", "[lab][config]")
{
    round_trip_property<Thm1Config>(1);
    round_trip_property<Fig2Config>(2);
    round_trip_property<Fig3Config>(3);
    round_trip_property<Fig4Config>(4);
    round_trip_property<Thm4Config>(5);
    round_trip_property<ThetaConfig>(6);
    round_trip_property<CriticalConfig>(7);
    round_trip_property<CooccurConfig>(8);
    round_trip_property<Table1Config>(9);
    round_trip_property<LrSweepConfig>(10);
    round_trip_property<RankSeriesConfig>(11);
    round_trip_property<GenCorpusConfig>(12);
}

TEST_CASE("config parsing is strict", "[lab][config]")
{
    json j = to_json(Thm1Config{});
    SECTION("missing key")
    {
        j.erase("eta");
        CHECK_THROWS_AS(from_json<Thm1Config>(j), config_error);
    }
    SECTION("unknown key")
    {
        j["etaa"] = 1e-3;
        CHECK_THROWS_AS(from_json<Thm1Config>(j), config_error);
    }
    SECTION("type mismatch")
    {
        j["contexts"] = 2.5;
        CHECK_THROWS_AS(from_json<Thm1Config>(j), config_error);
        j["contexts"] = "6";
        CHECK_THROWS_AS(from_json<Thm1Config>(j), config_error);
    }
    SECTION("integers are accepted for real fields")
    {
        j["horizon"] = 2;
        CHECK(from_json<Thm1Config>(j).horizon == 2.0);
    }
    SECTION("validation")
    {
        j["eta"] = -1.0;
        CHECK_THROWS_AS(from_json<Thm1Config>(j), config_error);
    }
    CHECK_THROWS_AS(parse_config<Thm1Config>("{not json"), config_error);
}

TEST_CASE("config layering: defaults, preset, file, overrides", "[lab][config]")
{
    const auto& e = find_experiment("thm1-invariants");
    auto cfg = resolve_config(e, "", "", {});
    CHECK(cfg == e.defaults);
    cfg = resolve_config(e, "linear", "", {});
    CHECK(cfg.at("attention") == "linear");
    cfg = resolve_config(e, "linear", R"({"attention": "exp", "eta": 0.001})", {});
    CHECK(cfg.at("attention") == "exp");
    CHECK(cfg.at("eta") == 0.001);
    cfg = resolve_config(e, "linear", R"({"eta": 0.001})", {{"eta", "2e-3"}, {"attention", "softmax"}});
    CHECK(cfg.at("eta") == 0.002);
    CHECK(cfg.at("attention") == "softmax");
    CHECK_THROWS_AS(resolve_config(e, "nope", "", {}), config_error);
    CHECK_THROWS_AS(resolve_config(e, "", R"({"extra": 1})", {}), config_error);
    CHECK_THROWS_AS(resolve_config(e, "", "[1, 2]", {}), config_error);
    CHECK_THROWS_AS(resolve_config(e, "", "", {{"contexts", "six"}}), config_error);
    CHECK_THROWS_AS(find_experiment("thm9"), config_error);
}

TEST_CASE("every experiment id is registered once with valid presets", "[lab][registry]")
{
    const std::vector<std::string> ids{"thm1-invariants", "fig2-softmax-estimate", "fig3-linear-growth",
                                       "fig4-nonlinear-entropy", "thm4-ratio",   "theta-tables",
                                       "critical-points",        "hblt-cooccur", "table1-ncorr",
                                       "entropy-lr-sweep",       "rank-series"};
    REQUIRE(experiments().size() == ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        CHECK(experiments()[i].name == ids[i]);
        const auto& e = experiments()[i];
        CHECK(e.normalize(e.defaults) == e.defaults);
        for (const auto& [name, patch] : e.presets) {
            INFO(e.name << " / " << name);
            CHECK_NOTHROW(resolve_config(e, name, "", {}));
        }
    }
    int grid = 0;
    for (const auto& [name, patch] : find_experiment("table1-ncorr").presets) grid += name.rfind("c", 0) == 0;
    CHECK(grid == 12);
}

namespace {

// Small settings so that every experiment runs in about a second.
const std::map<std::string, std::pair<std::string, json>> small_runs{
    {"thm1-invariants", {"", {{"horizon", 0.5}, {"stride", 100}}}},
    {"fig2-softmax-estimate", {"", {{"steps", 2000}}}},
    {"fig3-linear-growth", {"", {{"max_steps", 20000}}}},
    {"fig4-nonlinear-entropy", {"family", {{"family_count", 2}, {"family_horizon", 10.0}}}},
    {"thm4-ratio", {"", {{"horizon", 5.0}}}},
    {"theta-tables", {"", {{"r_points", 21}, {"y_points", 21}}}},
    {"critical-points", {"", {{"grid", 30}}}},
    {"hblt-cooccur", {"", {{"samples", 3000}}}},
    {"table1-ncorr", {"quick", {{"steps", 40}, {"stride", 20}, {"train_samples", 300}, {"val_samples", 200}}}},
    {"entropy-lr-sweep", {"quick", {{"steps", 40}, {"stride", 20}, {"train_samples", 300}}}},
    {"rank-series", {"quick", {{"steps", 40}, {"stride", 20}, {"train_samples", 300}}}},
};

json small_config(const Experiment& e)
{
    const auto& [preset, patch] = small_runs.at(e.name);
    return resolve_config(e, preset, patch.dump(), {});
}

std::string first_line(const fs::path& p)
{
    std::istringstream is(read_file(p));
    std::string line;
    std::getline(is, line);
    return line;
}

} // namespace

TEST_CASE("every experiment's output matches its declared schema", "[lab][schema]")
{
    const auto root = scratch_dir("schema");
    for (const auto& e : experiments()) {
        INFO(e.name);
        const auto cfg = small_config(e);
        const auto rec = run_experiment(e, cfg, 3, root / e.name);
        const auto schema = e.schema(cfg);
        REQUIRE(schema.size() == rec.art.tables.size());
        for (const auto& [file, columns] : schema) {
            std::string header;
            for (std::size_t i = 0; i < columns.size(); ++i) header += (i ? "," : "") + columns[i];
            CHECK(first_line(root / e.name / file) == header);
            CHECK(!rec.art.table(file).rows.empty());
        }
        const auto manifest = json::parse(read_file(root / e.name / "manifest.json"));
        CHECK(manifest.at("experiment") == e.name);
        CHECK(manifest.at("seed") == 3);
        CHECK(manifest.at("config") == cfg);
        CHECK(manifest.at("code_version").get<std::string>() == code_version());
        for (const auto& f : manifest.at("outputs")) CHECK(fs::exists(root / e.name / f.get<std::string>()));
        CHECK(e.normalize(manifest.at("config")) == cfg);
    }
    fs::remove_all(root);
}

TEST_CASE("check_schema rejects a mismatched run", "[lab][schema]")
{
    Artifacts a;
    a.add_table("x.csv", {"a", "b"});
    CHECK_NOTHROW(check_schema({{"x.csv", {"a", "b"}}}, a));
    CHECK_THROWS_AS(check_schema({{"x.csv", {"a", "c"}}}, a), joma::domain_error);
    CHECK_THROWS_AS(check_schema({{"x.csv", {"a", "b"}}, {"y.csv", {"a"}}}, a), joma::domain_error);
    CHECK_THROWS_AS(a.table("y.csv"), joma::domain_error);
    CHECK_THROWS_AS(a.add_table("x.csv", {"z"}), joma::domain_error);
    CHECK_THROWS_AS(a.tables.front().second.add({1.0}), joma::domain_error);
}

TEST_CASE("same-seed reruns are byte-identical, independent of thread count", "[lab][determinism]")
{
    const auto root = scratch_dir("rerun");
    for (const char* id : {"hblt-cooccur", "table1-ncorr", "fig4-nonlinear-entropy", "rank-series"}) {
        INFO(id);
        const auto& e = find_experiment(id);
        auto cfg = small_config(e);
        const auto a = run_experiment(e, cfg, 11, root / id / "a");
        if (cfg.contains("threads")) cfg["threads"] = 2;
        const auto b = run_experiment(e, cfg, 11, root / id / "b");
        for (const auto& f : a.outputs) CHECK(read_file(root / id / "a" / f) == read_file(root / id / "b" / f));
        const auto c = run_experiment(e, cfg, 12, root / id / "c");
        bool differs = false;
        for (const auto& [file, t] : a.art.tables) differs |= read_file(root / id / "a" / file) != read_file(root / id / "c" / file);
        CHECK(differs);
    }
    fs::remove_all(root);
}

TEST_CASE("CSV cells carry 17 significant digits", "[lab][io]")
{
    Table t{{"x"}, {}};
    t.add({0.1});
    t.add({1.0 / 3.0});
    std::istringstream is(t.csv());
    std::string line;
    std::getline(is, line);
    CHECK(line == "x");
    std::getline(is, line);
    CHECK(std::stod(line) == 0.1);
    std::getline(is, line);
    CHECK(std::stod(line) == 1.0 / 3.0);
}

TEST_CASE("atomic_write replaces the target and leaves no temp file", "[lab][io]")
{
    const auto root = scratch_dir("atomic");
    const auto p = root / "sub" / "f.txt";
    atomic_write(p, "one");
    atomic_write(p, "two");
    CHECK(read_file(p) == "two");
    CHECK(!fs::exists(root / "sub" / "f.txt.tmp"));
    CHECK_THROWS_AS(read_file(root / "missing"), io_error);
    fs::remove_all(root);
}

TEST_CASE("parallel_map keeps index order and rethrows", "[lab][threads]")
{
    const auto v = parallel_map<int>(7, 3, [](int i) { return i * i; });
    CHECK(v == std::vector<int>{0, 1, 4, 9, 16, 25, 36});
    CHECK_THROWS_AS(parallel_map<int>(4, 2,
                                      [](int i) {
                                          if (i == 2) throw divergence_error("x");
                                          return i;
                                      }),
                    divergence_error);
}

TEST_CASE("a corpus written by gen-corpus reproduces the in-memory run", "[lab][corpus]")
{
    const auto root = scratch_dir("corpus");
    GenCorpusConfig g;
    g.samples = 500;
    g.rho = 0.99;  // the table1 default
    const auto files = gen_corpus(g, 5, (root / "c.txt").string());
    CHECK(files.size() == 3);
    const auto meta = json::parse(read_file(root / "c.txt.json"));
    CHECK(meta.at("layer_sizes") == g.layer_sizes);
    CHECK(meta.at("parent").size() == 130);

    const auto& e = find_experiment("table1-ncorr");
    auto cfg = small_config(e);
    cfg["seeds"] = 1;
    const auto mem = run_experiment(e, cfg, 5, root / "mem");
    cfg["corpus"] = (root / "c.txt").string();
    const auto disk = run_experiment(e, cfg, 5, root / "disk");
    for (const auto& [file, t] : mem.art.tables) CHECK(read_file(root / "mem" / file) == read_file(root / "disk" / file));

    cfg["train_samples"] = 400;
    CHECK_THROWS_AS(run_experiment(e, cfg, 5, root / "short"), config_error);
    cfg["corpus"] = (root / "missing.txt").string();
    CHECK_THROWS_AS(run_experiment(e, cfg, 5, root / "missing"), io_error);
    fs::remove_all(root);
}

TEST_CASE("hblt-cooccur at rho = 0 has an all-0.5 analytic column", "[lab][hblt]")
{
    const auto& e = find_experiment("hblt-cooccur");
    const auto art = e.run(resolve_config(e, "rho0", "", {{"samples", "2000"}}), 1);
    for (double a : art.table("cooccur.csv").values("analytic")) CHECK(a == 0.5);
}

TEST_CASE("table1 writes one NCorr row per seed and layer", "[lab][train]")
{
    const auto& e = find_experiment("table1-ncorr");
    auto cfg = small_config(e);
    cfg["seeds"] = 3;
    const auto art = e.run(cfg, 1);
    const auto& t = art.table("ncorr.csv");
    CHECK(t.rows.size() == 3 * 2);
    CHECK(t.values("seed") == std::vector<double>{1, 1, 2, 2, 3, 3});
    CHECK(t.values("layer") == std::vector<double>{0, 1, 0, 1, 0, 1});
    CHECK(art.table("ncorr_latents.csv").rows.size() == 3 * (20 + 10));
}
