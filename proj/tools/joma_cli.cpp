#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "joma/lab/registry.hpp"
#include "joma/lab/runtime.hpp"
#include "joma/lab/verify.hpp"

namespace lab = joma::lab;

namespace {

enum Exit { ok = 0, config_failure = 1, runtime_failure = 2, io_failure = 3 };

using Overrides = std::vector<std::pair<std::string, std::string>>;

// Leftover arguments as `--key value` or `--key=value` pairs.
Overrides parse_overrides(const std::vector<std::string>& rest)
{
    Overrides out;
    for (std::size_t i = 0; i < rest.size(); ++i) {
        const std::string& a = rest[i];
        if (a.size() < 3 || a.compare(0, 2, "--") != 0) throw joma::config_error("unexpected argument: " + a);
        const auto eq = a.find('=');
        if (eq != std::string::npos) {
            out.push_back({a.substr(2, eq - 2), a.substr(eq + 1)});
        } else {
            if (i + 1 >= rest.size()) throw joma::config_error("missing value for " + a);
            out.push_back({a.substr(2), rest[++i]});
        }
    }
    return out;
}

struct Common {
    std::uint64_t seed = 1;
    int threads = 0;   // 0: leave the config value alone
    long stride = 0;
    std::string preset, config_file;
    bool dump = false;
};

void add_common(CLI::App* app, Common& c)
{
    app->add_option("--seed", c.seed, "run seed");
    app->add_option("--threads", c.threads, "worker threads, for experiments that take them");
    app->add_option("--stride", c.stride, "snapshot stride, for experiments that take one");
    app->add_option("--preset", c.preset, "named preset applied over the defaults");
    app->add_option("--config", c.config_file, "JSON config file applied over the preset");
    app->add_flag("--dump-config", c.dump, "print the resolved config and exit");
    app->allow_extras();
}

// --threads and --stride act as overrides when the config has such a key.
Overrides with_common(const lab::json& defaults, const Common& c, Overrides o)
{
    if (c.threads > 0 && defaults.contains("threads")) o.push_back({"threads", std::to_string(c.threads)});
    if (c.stride > 0 && defaults.contains("stride")) o.push_back({"stride", std::to_string(c.stride)});
    return o;
}

int run_command(const std::string& id, const Common& c, const std::vector<std::string>& rest)
{
    const auto& e = lab::find_experiment(id);
    const std::string text = c.config_file.empty() ? "" : lab::read_file(c.config_file);
    const auto cfg = lab::resolve_config(e, c.preset, text, with_common(e.defaults, c, parse_overrides(rest)));
    if (c.dump) {
        std::cout << cfg.dump(2) << '\n';
        return ok;
    }
    const auto dir = lab::run_dir(e.name, c.seed);
    const auto r = lab::run_experiment(e, cfg, c.seed, dir);
    std::cout << r.art.summary.dump() << '\n' << "wrote " << (dir / "manifest.json").string() << '\n';
    return ok;
}

int gen_corpus_command(const std::string& out, const Common& c, const std::vector<std::string>& rest)
{
    lab::json cfg = lab::to_json(lab::GenCorpusConfig{});
    if (!c.config_file.empty()) lab::apply_patch(cfg, lab::json::parse(lab::read_file(c.config_file)), "config file");
    lab::apply_overrides(cfg, with_common(cfg, c, parse_overrides(rest)));
    const auto parsed = lab::from_json<lab::GenCorpusConfig>(cfg);
    if (c.dump) {
        std::cout << lab::print_config(parsed) << '\n';
        return ok;
    }
    for (const auto& f : lab::gen_corpus(parsed, c.seed, out)) std::cout << "wrote " << f << '\n';
    return ok;
}

int list_command()
{
    for (const auto& e : lab::experiments()) {
        std::cout << e.name << "  " << e.summary << "\n  presets:";
        for (const auto& [name, patch] : e.presets) std::cout << ' ' << name;
        std::cout << '\n';
    }
    std::cout << "verify suites:";
    for (const auto& s : lab::verify_suites()) std::cout << ' ' << s;
    std::cout << '\n';
    return ok;
}

int verify_command(const std::string& suite, const std::string& out)
{
    const auto rep = lab::verify(suite);
    const std::string text = rep.dump(2) + "\n";
    if (out.empty())
        std::cout << text;
    else
        lab::atomic_write(out, text);
    return rep.at("pass").get<bool>() ? ok : runtime_failure;
}

} // namespace

int main(int argc, char** argv)
{
    lab::tune_allocator();
    CLI::App app{"JoMA numerical lab"};
    app.require_subcommand(1);

    Common run_opts, gen_opts;
    std::string experiment, suite = "all", verify_out, corpus_out;

    auto* run = app.add_subcommand("run", "run an experiment; extra --key value pairs override config keys");
    run->add_option("experiment", experiment, "experiment id")->required();
    add_common(run, run_opts);

    auto* ver = app.add_subcommand("verify", "run a check suite and print a JSON report");
    ver->add_option("suite", suite, "invariants | oracles | gradcheck | bounds | all");
    ver->add_option("--out", verify_out, "write the report here instead of stdout");

    auto* gen = app.add_subcommand("gen-corpus", "sample an HBLT corpus to disk");
    gen->add_option("--out", corpus_out, "corpus path; .lat and .json files are written next to it")->required();
    add_common(gen, gen_opts);

    app.add_subcommand("list", "list experiments, presets and verify suites");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_failure;
    }

    try {
        if (*run) return run_command(experiment, run_opts, run->remaining());
        if (*ver) return verify_command(suite, verify_out);
        if (*gen) return gen_corpus_command(corpus_out, gen_opts, gen->remaining());
        return list_command();
    } catch (const joma::config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_failure;
    } catch (const lab::json::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_failure;
    } catch (const joma::io_error& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return io_failure;
    } catch (const std::exception& e) {
        std::cerr << "run failed: " << e.what() << '\n';
        return runtime_failure;
    }
}
