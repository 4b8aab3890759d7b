#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "hho/cli.hpp"

using namespace hho;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("hho_cli_test_" + name);
    fs::remove_all(p);
    return p;
}

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(HHO_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void expect_config_error(const std::string& text, const std::string& needle)
{
    try {
        parse_config(text).validate();
        FAIL("expected ConfigError for: " << text);
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        INFO(msg);
        CHECK(msg.find(needle) != std::string::npos);
    }
}

}  // namespace

TEST_CASE("configuration parsing")
{
    const RunConfig c = parse_config(R"(# comment line
variant = B
k = 2   # trailing comment
bc = nitsche
scaling = plain
mesh.kind = voronoi
mesh.cells = 100
mesh.seed = 9
levels = 16, 64, 256
solver.method = cg
solver.cg_tol = 1e-11
timing = false
)");
    CHECK(c.disc.variant == Variant::B);
    CHECK(c.disc.k == 2);
    CHECK(c.disc.bc == BcMode::Nitsche);
    CHECK(c.disc.scaling == StabScaling::Plain);
    CHECK(c.mesh.kind == "voronoi");
    CHECK(c.mesh.cells == 100);
    CHECK(c.mesh.seed == 9);
    CHECK(c.levels == std::vector<int>{16, 64, 256});
    CHECK(c.run.solver.method == SolverMethod::ConjugateGradient);
    CHECK(c.run.solver.cg_tol == 1e-11);
    CHECK_FALSE(c.timing);
    CHECK_NOTHROW(c.validate());

    SUBCASE("printing round trips")
    {
        const RunConfig back = parse_config(c.to_text());
        CHECK(back.to_text() == c.to_text());
        CHECK(parse_config(RunConfig{}.to_text()).to_text() == RunConfig{}.to_text());
    }
    SUBCASE("defaults")
    {
        const RunConfig d;
        CHECK(d.disc.variant == Variant::A);
        CHECK(d.disc.scaling == StabScaling::K2All);
        CHECK(d.disc.rhs_extra_degree == 2);
        CHECK(d.run.error_extra_degree == 6);
        CHECK(d.run.solver.cg_tol == 1e-12);
    }
    SUBCASE("errors")
    {
        expect_config_error("colour = red", "colour");
        expect_config_error("k = 7", "k");
        expect_config_error("k = two", "k");
        expect_config_error("variant = D", "variant");
        expect_config_error("variant = C\nbc = nitsche", "itsche");
        expect_config_error("case = 4", "case");
        expect_config_error("mesh.kind = hex", "mesh.kind");
        expect_config_error("solver.cg_tol = 0", "cg_tol");
        expect_config_error("threads = 0", "threads");
        expect_config_error("k_list = 1, 9", "k_list");
        expect_config_error("variant A", "line 1");
        expect_config_error("\n\nvariant A", "line 3");
        expect_config_error("k = -1", "[0, 5]");
    }
}

TEST_CASE("mesh construction from specs")
{
    MeshSpec s;
    s.kind = "tri";
    s.n = 4;
    CHECK(build_mesh(s).num_cells() == 32);
    CHECK(build_mesh(s, 2).num_cells() == 8);
    s.kind = "voronoi";
    s.cells = 30;
    CHECK(build_mesh(s).num_cells() == 30);

    const fs::path dir = scratch("mesh");
    fs::create_directories(dir);
    std::ostringstream log;
    cmd_mesh(s, dir / "m.json", log);
    MeshSpec from_file;
    from_file.kind = "file";
    from_file.file = (dir / "m.json").string();
    CHECK(mesh_to_json(build_mesh(from_file)) == mesh_to_json(build_mesh(s)));
    fs::remove_all(dir);
}

TEST_CASE("solve writes reports")
{
    const fs::path dir = scratch("solve");
    RunConfig c = parse_config("k = 1\nmesh.n = 8\ntiming = false\n");
    c.output = dir.string();
    std::ostringstream log;
    const ErrorReport r = cmd_solve(c, log);
    CHECK(r.err_h2_rel > 0);
    CHECK(r.err_h2_rel < 0.3);
    CHECK(fs::exists(dir / "report.csv"));
    CHECK(fs::exists(dir / "solution.csv"));
    const std::string report = read_file(dir / "report.csv");
    CHECK(report.rfind("level,h_max,dofs,err_h2_rel,err_l2_rel,slope_h2,slope_l2,assembly_s,solve_s\n", 0) == 0);
    CHECK(read_file(dir / "solution.csv").rfind("cell,x,y,u_h,u", 0) == 0);

    SUBCASE("Nitsche with the non-homogeneous case")
    {
        RunConfig n = c;
        n.disc.bc = BcMode::Nitsche;
        n.case_id = 2;
        CHECK(cmd_solve(n, log).err_h2_rel < 0.3);
    }
    fs::remove_all(dir);
}

TEST_CASE("reproducibility")
{
    RunConfig c = parse_config("mesh.kind = voronoi\nlevels = 16, 32, 64\nk = 1\ntiming = false\n");
    std::ostringstream log;
    const fs::path a = scratch("rep_a"), b = scratch("rep_b"), t = scratch("rep_t");
    c.output = a.string();
    cmd_convergence(c, log);
    c.output = b.string();
    cmd_convergence(c, log);
    c.output = t.string();
    c.run.threads = 2;
    cmd_convergence(c, log);
    const std::string name = rate_csv_name(c.disc);
    CHECK(name == "rates_A_k1_strong.csv");
    const std::string first = read_file(a / name);
    CHECK(first.size() > 100);
    CHECK(first == read_file(b / name));
    CHECK(first == read_file(t / name));
    for (const auto& p : {a, b, t}) fs::remove_all(p);
}

TEST_CASE("refinement commands reject unusable settings")
{
    std::ostringstream log;
    RunConfig c = parse_config("levels = 8, 16\n");
    CHECK_THROWS_AS(cmd_convergence(c, log), ConfigError);
    c = parse_config("bc = nitsche\nlevels = 4, 8, 16\n");
    CHECK_THROWS_AS(cmd_compare(c, CompareMode::Variants, log), ConfigError);
}

TEST_CASE("command-line exit codes")
{
    const fs::path dir = scratch("exit");
    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("mesh --kind tri --n 2 --out " + (dir.string() + ".json")) == 0);
    CHECK(fs::exists(dir.string() + ".json"));
    fs::remove(dir.string() + ".json");
    CHECK(run_cli("solve --k 0 --n 4 --no-timing --out " + dir.string()) == 0);
    CHECK(run_cli("solve --print-config --variant C") == 0);
    CHECK(run_cli("solve --variant C --bc nitsche") == 2);
    CHECK(run_cli("solve --k 7") == 2);
    CHECK(run_cli("solve --frobnicate") == 2);
    CHECK(run_cli("solve --set nonsense=1") == 2);
    CHECK(run_cli("solve --set solver.method=cg --set solver.max_iters=2 --k 2 --n 8 --out " + dir.string()) == 3);
    CHECK(run_cli("") == 2);
    fs::remove_all(dir);
}
