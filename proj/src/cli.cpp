#include "hho/cli.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace hho {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& value)
{
    T out{};
    const char* first = value.data();
    const char* last = first + value.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last) throw ConfigError("bad value '" + value + "' for key '" + key + "'");
    return out;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value)
{
    std::vector<int> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parse_number<int>(key, item));
    }
    return out;
}

std::string join(const std::vector<int>& v)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
    return out;
}

bool parse_bool(const std::string& key, const std::string& value)
{
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError("bad value '" + value + "' for key '" + key + "'");
}

std::ofstream open_output(const std::filesystem::path& path)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    return out;
}

std::vector<Mesh> mesh_family(const RunConfig& config)
{
    if (config.mesh.kind == "file") throw ConfigError("refinement studies need a generated mesh kind");
    if (config.levels.size() < 3) throw ConfigError("a refinement study needs at least three levels");
    std::vector<Mesh> family;
    for (int level : config.levels) family.push_back(build_mesh(config.mesh, level));
    return family;
}

RateTable run_family(const std::vector<Mesh>& family, const Discretization& disc, const RunConfig& config,
                     std::ostream& log)
{
    const RateTable table = convergence_study(family, disc, manufactured_case(config.case_id, disc.k), config.run);
    const std::filesystem::path path = std::filesystem::path(config.output) / rate_csv_name(disc);
    auto out = open_output(path);
    write_rate_csv(out, table, config.timing);
    log << "variant " << to_string(disc.variant) << ", k = " << disc.k << ", " << to_string(disc.bc) << ": slope H2 "
        << std::setprecision(4) << table.slope_h2 << ", slope L2 " << table.slope_l2 << " -> " << path.string()
        << '\n';
    return table;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value)
{
    if (key == "variant") {
        if (value == "A") disc.variant = Variant::A;
        else if (value == "B") disc.variant = Variant::B;
        else if (value == "C") disc.variant = Variant::C;
        else throw ConfigError("variant must be A, B, or C");
    } else if (key == "k") {
        disc.k = parse_number<int>(key, value);
    } else if (key == "bc") {
        if (value == "strong") disc.bc = BcMode::Strong;
        else if (value == "nitsche") disc.bc = BcMode::Nitsche;
        else throw ConfigError("bc must be strong or nitsche");
    } else if (key == "scaling") {
        if (value == "plain") disc.scaling = StabScaling::Plain;
        else if (value == "k2-all") disc.scaling = StabScaling::K2All;
        else if (value == "k2-hm1-only") disc.scaling = StabScaling::K2Hm1Only;
        else throw ConfigError("scaling must be plain, k2-all, or k2-hm1-only");
    } else if (key == "reconstruction") {
        if (value == "ibp") disc.path = ReconstructionPath::IntegrationByParts;
        else if (value == "cell-terms") disc.path = ReconstructionPath::CellTerms;
        else throw ConfigError("reconstruction must be ibp or cell-terms");
    } else if (key == "case") {
        case_id = parse_number<int>(key, value);
    } else if (key == "mesh.kind") {
        mesh.kind = value;
    } else if (key == "mesh.n") {
        mesh.n = parse_number<int>(key, value);
    } else if (key == "mesh.cells") {
        mesh.cells = parse_number<int>(key, value);
    } else if (key == "mesh.seed") {
        mesh.seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "mesh.lloyd") {
        mesh.lloyd = parse_number<int>(key, value);
    } else if (key == "mesh.file") {
        mesh.file = value;
    } else if (key == "quad.volume_extra") {
        disc.volume_extra_degree = parse_number<int>(key, value);
    } else if (key == "quad.face_extra") {
        disc.face_extra_degree = parse_number<int>(key, value);
    } else if (key == "quad.rhs_extra") {
        disc.rhs_extra_degree = parse_number<int>(key, value);
    } else if (key == "quad.error_extra") {
        run.error_extra_degree = parse_number<int>(key, value);
    } else if (key == "solver.method") {
        if (value == "direct") run.solver.method = SolverMethod::Direct;
        else if (value == "cg") run.solver.method = SolverMethod::ConjugateGradient;
        else throw ConfigError("solver.method must be direct or cg");
    } else if (key == "solver.cg_tol") {
        run.solver.cg_tol = parse_number<double>(key, value);
    } else if (key == "solver.max_iters") {
        run.solver.max_iters = parse_number<int>(key, value);
    } else if (key == "threads") {
        run.threads = parse_number<int>(key, value);
    } else if (key == "levels") {
        levels = parse_int_list(key, value);
    } else if (key == "k_list") {
        k_list = parse_int_list(key, value);
    } else if (key == "output") {
        output = value;
    } else if (key == "timing") {
        timing = parse_bool(key, value);
    } else {
        throw ConfigError("unknown key '" + key + "'");
    }
}

void RunConfig::validate() const
{
    auto check_k = [](const char* key, int k) {
        if (k < 0 || k > 5) throw ConfigError(std::string(key) + ": degree must lie in [0, 5], got " + std::to_string(k));
    };
    check_k("k", disc.k);
    for (int k : k_list) check_k("k_list", k);
    if (disc.bc == BcMode::Nitsche && disc.variant == Variant::C)
        throw ConfigError("Nitsche boundary conditions are available for variants A and B only");
    if (case_id < 1 || case_id > 3) throw ConfigError("case must be 1, 2, or 3");
    if (mesh.kind != "rect" && mesh.kind != "tri" && mesh.kind != "voronoi" && mesh.kind != "file")
        throw ConfigError("mesh.kind must be rect, tri, voronoi, or file");
    if (mesh.kind == "file" && mesh.file.empty()) throw ConfigError("mesh.kind = file needs mesh.file");
    if (mesh.n < 1 || mesh.cells < 1 || mesh.lloyd < 0) throw ConfigError("mesh sizes must be positive");
    for (int l : levels)
        if (l < 1) throw ConfigError("levels must be positive");
    if (disc.volume_extra_degree < 0 || disc.face_extra_degree < 0 || disc.rhs_extra_degree < 0 ||
        run.error_extra_degree < 0)
        throw ConfigError("quadrature margins must be nonnegative");
    if (!(run.solver.cg_tol > 0)) throw ConfigError("solver.cg_tol must be positive");
    if (run.solver.max_iters < 0) throw ConfigError("solver.max_iters must be nonnegative");
    if (run.threads < 1) throw ConfigError("threads must be at least 1");
}

std::string RunConfig::to_text() const
{
    std::ostringstream o;
    o << std::setprecision(17);
    o << "variant = " << to_string(disc.variant) << '\n';
    o << "k = " << disc.k << '\n';
    o << "bc = " << to_string(disc.bc) << '\n';
    o << "scaling = " << to_string(disc.scaling) << '\n';
    o << "reconstruction = " << (disc.path == ReconstructionPath::IntegrationByParts ? "ibp" : "cell-terms") << '\n';
    o << "case = " << case_id << '\n';
    o << "mesh.kind = " << mesh.kind << '\n';
    o << "mesh.n = " << mesh.n << '\n';
    o << "mesh.cells = " << mesh.cells << '\n';
    o << "mesh.seed = " << mesh.seed << '\n';
    o << "mesh.lloyd = " << mesh.lloyd << '\n';
    o << "mesh.file = " << mesh.file << '\n';
    o << "quad.volume_extra = " << disc.volume_extra_degree << '\n';
    o << "quad.face_extra = " << disc.face_extra_degree << '\n';
    o << "quad.rhs_extra = " << disc.rhs_extra_degree << '\n';
    o << "quad.error_extra = " << run.error_extra_degree << '\n';
    o << "solver.method = " << (run.solver.method == SolverMethod::Direct ? "direct" : "cg") << '\n';
    o << "solver.cg_tol = " << run.solver.cg_tol << '\n';
    o << "solver.max_iters = " << run.solver.max_iters << '\n';
    o << "threads = " << run.threads << '\n';
    o << "levels = " << join(levels) << '\n';
    o << "k_list = " << join(k_list) << '\n';
    o << "output = " << output << '\n';
    o << "timing = " << (timing ? "true" : "false") << '\n';
    return o.str();
}

RunConfig parse_config(const std::string& text, RunConfig base)
{
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        try {
            base.set(key, trim(line.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), std::move(base));
}

Mesh build_mesh(const MeshSpec& spec, int level)
{
    if (spec.kind == "rect") {
        const int n = level > 0 ? level : spec.n;
        return build_rect_mesh(n, n);
    }
    if (spec.kind == "tri") return build_tri_mesh(level > 0 ? level : spec.n);
    if (spec.kind == "voronoi") return build_voronoi_mesh(level > 0 ? level : spec.cells, spec.seed, spec.lloyd);
    if (spec.kind == "file") {
        try {
            return load_mesh(spec.file);
        } catch (const MeshError& e) {
            throw ConfigError(e.what());
        }
    }
    throw ConfigError("unknown mesh kind '" + spec.kind + "'");
}

std::string rate_csv_name(const Discretization& disc)
{
    return "rates_" + to_string(disc.variant) + "_k" + std::to_string(disc.k) + "_" + to_string(disc.bc) + ".csv";
}

void cmd_mesh(const MeshSpec& spec, const std::filesystem::path& out, std::ostream& log)
{
    const Mesh mesh = build_mesh(spec);
    const ValidationReport report = validate(mesh);
    if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
    save_mesh(mesh, out);
    log << "cells " << mesh.num_cells() << ", faces " << mesh.num_faces() << ", vertices " << mesh.num_vertices()
        << '\n';
    log << "h_max " << mesh.h_max() << ", max faces per cell " << report.max_faces_per_cell << ", rho " << report.rho
        << '\n';
    log << (report.valid ? "valid" : "INVALID");
    for (const auto& f : report.failures) log << "\n  " << f;
    log << "\nwritten to " << out.string() << '\n';
}

ErrorReport cmd_solve(const RunConfig& config, std::ostream& log)
{
    config.validate();
    const Mesh mesh = build_mesh(config.mesh);
    const Manufactured u = manufactured_case(config.case_id, config.disc.k);
    Field field;
    const ErrorReport r = run_case(mesh, config.disc, u, config.run, &field);

    const std::filesystem::path dir(config.output);
    {
        auto out = open_output(dir / "report.csv");
        RateTable single;
        single.levels.push_back(r);
        write_rate_csv(out, single, config.timing);
    }
    {
        auto out = open_output(dir / "solution.csv");
        out << "cell,x,y,u_h,u\n" << std::setprecision(12);
        for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
            const Point& x = mesh.cell(c).centroid;
            const CellBasis basis(mesh, c, config.disc.k + 2);
            out << c << ',' << x.x() << ',' << x.y() << ',' << basis.eval(x).dot(field[c]) << ',' << u.u(x) << '\n';
        }
    }
    log << "variant " << to_string(config.disc.variant) << ", k = " << config.disc.k << ", "
        << to_string(config.disc.bc) << ", case " << config.case_id << '\n';
    log << "cells " << mesh.num_cells() << ", dofs " << r.dofs << ", h_max " << r.h_max << '\n';
    log << std::scientific << std::setprecision(6) << "err_h2_rel " << r.err_h2_rel << "\nerr_l2_rel "
        << r.err_l2_rel << '\n'
        << std::defaultfloat;
    log << "assembly " << r.assembly_s << " s, solve " << r.solve_s << " s\n";
    return r;
}

std::vector<RateTable> cmd_convergence(const RunConfig& config, std::ostream& log)
{
    config.validate();
    const std::vector<Mesh> family = mesh_family(config);
    const std::vector<int> ks = config.k_list.empty() ? std::vector<int>{config.disc.k} : config.k_list;
    std::vector<RateTable> tables;
    for (int k : ks) {
        Discretization disc = config.disc;
        disc.k = k;
        tables.push_back(run_family(family, disc, config, log));
    }
    return tables;
}

double cmd_compare(const RunConfig& config, CompareMode mode, std::ostream& log)
{
    config.validate();
    std::vector<Discretization> runs;
    if (mode == CompareMode::Variants) {
        if (config.disc.bc == BcMode::Nitsche) throw ConfigError("variant comparison uses strong boundary conditions");
        for (Variant v : {Variant::A, Variant::B, Variant::C}) {
            Discretization d = config.disc;
            d.variant = v;
            runs.push_back(d);
        }
    } else {
        for (BcMode bc : {BcMode::Strong, BcMode::Nitsche}) {
            Discretization d = config.disc;
            d.bc = bc;
            runs.push_back(d);
        }
    }
    const std::vector<Mesh> family = mesh_family(config);
    std::vector<RateTable> tables;
    for (const auto& d : runs) tables.push_back(run_family(family, d, config, log));

    double worst = 1.0;
    for (std::size_t l = 0; l < family.size(); ++l) {
        double lo = tables[0].levels[l].err_h2_rel, hi = lo;
        for (const auto& t : tables) {
            lo = std::min(lo, t.levels[l].err_h2_rel);
            hi = std::max(hi, t.levels[l].err_h2_rel);
        }
        const double ratio = hi / lo;
        worst = std::max(worst, ratio);
        log << "level " << l << ": max/min H2 error ratio " << std::setprecision(4) << ratio << '\n';
    }
    return worst;
}

}  // namespace hho
