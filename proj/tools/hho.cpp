// Command-line front end: mesh generation, single solves, convergence studies,
// and comparisons. Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hho/cli.hpp"

namespace {

constexpr int exit_config = 2;
constexpr int exit_numerical = 3;

struct Common {
    std::string config_file;
    std::vector<std::string> sets;
    bool print_config = false;
    int threads = 0;
    std::string variant, bc, scaling, out, levels, k_list, kind;
    int k = -1, case_id = 0, n = 0, cells = 0, seed = -1;
    bool no_timing = false;
};

void add_common(CLI::App* app, Common& c)
{
    app->add_option("--config", c.config_file, "key = value configuration file");
    app->add_option("--set", c.sets, "override one key, e.g. --set quad.error_extra=8");
    app->add_flag("--print-config", c.print_config, "print the resolved configuration and exit");
    app->add_option("--threads", c.threads, "worker threads for assembly and error integration");
    app->add_option("--variant", c.variant, "A, B, or C");
    app->add_option("--k", c.k, "polynomial degree k in [0, 5]");
    app->add_option("--bc", c.bc, "strong or nitsche");
    app->add_option("--scaling", c.scaling, "plain, k2-all, or k2-hm1-only");
    app->add_option("--case", c.case_id, "manufactured solution id (1, 2, 3)");
    app->add_option("--kind", c.kind, "mesh kind: rect, tri, voronoi, or file");
    app->add_option("--n", c.n, "rect/tri resolution");
    app->add_option("--cells", c.cells, "voronoi cell count");
    app->add_option("--seed", c.seed, "voronoi seed");
    app->add_option("--levels", c.levels, "comma-separated refinement levels");
    app->add_option("--k-list", c.k_list, "comma-separated degrees for convergence");
    app->add_option("--out", c.out, "output directory");
    app->add_flag("--no-timing", c.no_timing, "write zeros in the timing columns");
}

hho::RunConfig resolve(const Common& c)
{
    hho::RunConfig cfg;
    if (!c.config_file.empty()) cfg = hho::load_config(c.config_file);
    auto set_if = [&](const char* key, const std::string& v) {
        if (!v.empty()) cfg.set(key, v);
    };
    set_if("variant", c.variant);
    set_if("bc", c.bc);
    set_if("scaling", c.scaling);
    set_if("mesh.kind", c.kind);
    set_if("levels", c.levels);
    set_if("k_list", c.k_list);
    set_if("output", c.out);
    if (c.k >= 0) cfg.set("k", std::to_string(c.k));
    if (c.case_id > 0) cfg.set("case", std::to_string(c.case_id));
    if (c.n > 0) cfg.set("mesh.n", std::to_string(c.n));
    if (c.cells > 0) cfg.set("mesh.cells", std::to_string(c.cells));
    if (c.seed >= 0) cfg.set("mesh.seed", std::to_string(c.seed));
    if (c.threads > 0) cfg.set("threads", std::to_string(c.threads));
    if (c.no_timing) cfg.timing = false;
    for (const auto& s : c.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw hho::ConfigError("--set expects key=value, got '" + s + "'");
        cfg = hho::parse_config(s, cfg);
    }
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Hybrid high-order solver for the biharmonic problem on polygonal meshes"};
    app.require_subcommand(1);

    hho::MeshSpec mesh_spec;
    std::string mesh_out = "mesh.json";
    auto* mesh_cmd = app.add_subcommand("mesh", "generate a mesh and write it as JSON");
    mesh_cmd->add_option("--kind", mesh_spec.kind, "rect, tri, or voronoi")->check(CLI::IsMember({"rect", "tri", "voronoi"}));
    mesh_cmd->add_option("--n", mesh_spec.n, "rect: n x n squares; tri: 2 n^2 triangles")->check(CLI::PositiveNumber);
    mesh_cmd->add_option("--cells", mesh_spec.cells, "voronoi cell count")->check(CLI::PositiveNumber);
    mesh_cmd->add_option("--seed", mesh_spec.seed, "voronoi seed");
    mesh_cmd->add_option("--lloyd", mesh_spec.lloyd, "Lloyd relaxation sweeps")->check(CLI::NonNegativeNumber);
    mesh_cmd->add_option("--out", mesh_out, "output file");

    Common solve_opts, conv_opts, cmp_opts;
    auto* solve_cmd = app.add_subcommand("solve", "solve one manufactured problem and report errors");
    add_common(solve_cmd, solve_opts);
    auto* conv_cmd = app.add_subcommand("convergence", "run a refinement study and write rate tables");
    add_common(conv_cmd, conv_opts);
    auto* cmp_cmd = app.add_subcommand("compare", "compare variants A/B/C or strong/Nitsche on one family");
    add_common(cmp_cmd, cmp_opts);
    std::string against = "variants";
    cmp_cmd->add_option("--against", against, "variants or bc")->check(CLI::IsMember({"variants", "bc"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_config;
    }

    try {
        if (*mesh_cmd) {
            hho::cmd_mesh(mesh_spec, mesh_out, std::cout);
            return 0;
        }
        const Common& c = *solve_cmd ? solve_opts : *conv_cmd ? conv_opts : cmp_opts;
        const hho::RunConfig cfg = resolve(c);
        if (c.print_config) {
            std::cout << cfg.to_text();
            return 0;
        }
        if (*solve_cmd) {
            hho::cmd_solve(cfg, std::cout);
        } else if (*conv_cmd) {
            hho::cmd_convergence(cfg, std::cout);
        } else {
            const auto mode = against == "bc" ? hho::CompareMode::BoundaryModes : hho::CompareMode::Variants;
            const double worst = hho::cmd_compare(cfg, mode, std::cout);
            std::cout << "largest error ratio " << worst << '\n';
        }
    } catch (const hho::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const hho::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return exit_numerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
