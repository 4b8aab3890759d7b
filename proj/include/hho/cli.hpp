#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "hho/mesh.hpp"
#include "hho/solve_post.hpp"

namespace hho {

/// Invalid configuration key or value. Maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct MeshSpec {
    std::string kind = "rect";  // rect | tri | voronoi | file
    int n = 16;                 // rect: n x n squares, tri: 2 n^2 triangles
    int cells = 256;            // voronoi
    std::uint64_t seed = 42;
    int lloyd = 10;
    std::string file;           // used when kind = file
};

/// Everything a run needs. Serialized as flat `key = value` lines, '#' starts a comment.
struct RunConfig {
    Discretization disc;
    MeshSpec mesh;
    int case_id = 1;
    RunOptions run;
    /// Refinement levels for `convergence` and `compare`: n for rect/tri, cell counts for voronoi.
    std::vector<int> levels{8, 16, 32, 64};
    /// Degrees for `convergence`; empty means {k}.
    std::vector<int> k_list;
    std::string output = "out";
    /// When false the timing columns of the CSV files are written as zeros.
    bool timing = true;

    /// Applies one key; throws ConfigError on unknown keys or bad values.
    void set(const std::string& key, const std::string& value);
    /// Throws ConfigError when the combination is not runnable.
    void validate() const;
    /// All keys with their current values, in a form `parse` accepts.
    std::string to_text() const;
};

/// Applies `key = value` lines of `text` on top of `base`.
RunConfig parse_config(const std::string& text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// Mesh for the spec; `level` overrides the resolution (n or cells) when positive.
Mesh build_mesh(const MeshSpec& spec, int level = 0);

/// Command bodies. Output files go to config.output; a summary is written to `log`.
void cmd_mesh(const MeshSpec& spec, const std::filesystem::path& out, std::ostream& log);
ErrorReport cmd_solve(const RunConfig& config, std::ostream& log);
std::vector<RateTable> cmd_convergence(const RunConfig& config, std::ostream& log);

enum class CompareMode { Variants, BoundaryModes };
/// Largest per-level ratio max/min of the H2 errors among the compared runs.
double cmd_compare(const RunConfig& config, CompareMode mode, std::ostream& log);

/// File name of the rate table for one (variant, k, bc) triple.
std::string rate_csv_name(const Discretization& disc);

}  // namespace hho
