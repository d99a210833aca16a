#include "hfx/commands.hpp"
#include "hfx/errors.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

namespace {

hfx::KeyValues gather_settings(const std::string& config_path,
                               const std::vector<std::string>& sets, int threads,
                               const std::string& output_dir) {
    hfx::KeyValues kv;
    if (!config_path.empty()) kv = hfx::KeyValues::parse_file(config_path);
    for (const std::string& s : sets) {
        const size_t eq = s.find('=');
        if (eq == std::string::npos || eq == 0)
            hfx::throw_config("ConfigError", "--set expects key=value, got '" + s + "'");
        auto trim = [](std::string x) {
            const size_t a = x.find_first_not_of(" \t");
            const size_t b = x.find_last_not_of(" \t");
            return a == std::string::npos ? std::string() : x.substr(a, b - a + 1);
        };
        kv.set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
    }
    // Dedicated flags win over both the file and --set.
    if (threads >= 0) kv.set("threads", std::to_string(threads));
    if (!output_dir.empty()) kv.set("output_dir", output_dir);
    return kv;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hfx: hyperfine tensors from volumetric spin densities"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> sets;
    int threads = -1;
    std::string output_dir;
    app.add_option("-c,--config", config_path,
                   "configuration file (default: $HFX_CONFIG when set)");
    app.add_option("--set", sets, "override or supply a config key, key=value (repeatable)");
    app.add_option("--threads", threads, "worker count (0 = library default)");
    app.add_option("--output-dir", output_dir, "directory for data products");

    struct Sub {
        const char* name;
        const char* desc;
        int (*run)(const hfx::RunConfig&);
    };
    const Sub subs[] = {
        {"compute", "per-site hyperfine tensor table from a density file", hfx::cmd_compute},
        {"field", "volumetric tensor components on a coarse sub-grid (FFT backend)",
         hfx::cmd_field},
        {"compare", "match a tensor table against an experimental dataset", hfx::cmd_compare},
        {"position", "candidate site listing for each experimental record", hfx::cmd_position},
        {"synth", "rasterize a synthetic density recipe", hfx::cmd_synth},
        {"convert", "parse a density file and rewrite it normalized", hfx::cmd_convert},
    };
    for (const Sub& s : subs)
        app.add_subcommand(s.name, s.desc)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2; // bad invocation is a configuration error
    }

    try {
        if (config_path.empty()) {
            if (const char* env = std::getenv("HFX_CONFIG")) config_path = env;
        }
        const hfx::KeyValues kv = gather_settings(config_path, sets, threads, output_dir);
        const hfx::RunConfig cfg = hfx::load_run_config(kv);

        const CLI::App* picked = app.get_subcommands().front();
        for (const Sub& s : subs)
            if (picked->get_name() == s.name) return s.run(cfg);
        hfx::throw_config("ConfigError", "unknown subcommand " + picked->get_name());
    } catch (const hfx::Error& e) {
        std::cerr << "hfx: error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "hfx: internal error: " << e.what() << "\n";
        return int(hfx::ErrorCategory::compute);
    }
}
