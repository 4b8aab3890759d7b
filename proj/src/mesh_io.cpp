#include "hho/mesh.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace hho {

namespace {

constexpr const char* format_tag = "hho-mesh-v1";

using nlohmann::json;

template <typename T>
T field(const json& obj, const char* key, const std::string& where)
{
    if (!obj.contains(key)) throw MeshError("parse error: " + where + " is missing field \"" + key + "\"");
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw MeshError("parse error: " + where + " field \"" + key + "\": " + e.what());
    }
}

}  // namespace

std::string mesh_to_json(const Mesh& mesh)
{
    const MeshTopology topo = mesh.topology();
    json doc;
    doc["format"] = format_tag;
    json vertices = json::array();
    for (const auto& p : topo.vertices) vertices.push_back({p.x(), p.y()});
    json faces = json::array();
    for (const auto& f : topo.faces) faces.push_back({{"v", {f.v[0], f.v[1]}}, {"cells", f.cells}});
    json cells = json::array();
    for (const auto& c : topo.cells) cells.push_back({{"faces", c.faces}, {"signs", c.signs}});
    doc["vertices"] = std::move(vertices);
    doc["faces"] = std::move(faces);
    doc["cells"] = std::move(cells);
    return doc.dump();
}

Mesh mesh_from_json(const std::string& text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw MeshError(std::string("parse error: ") + e.what());
    }
    if (!doc.is_object()) throw MeshError("parse error: top level must be an object");
    if (doc.contains("format") && doc["format"] != format_tag)
        throw MeshError("parse error: unsupported format " + doc["format"].dump());

    MeshTopology topo;
    const auto vertices = field<json>(doc, "vertices", "mesh");
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        const auto xy = vertices[i];
        if (!xy.is_array() || xy.size() != 2 || !xy[0].is_number() || !xy[1].is_number())
            throw MeshError("parse error: vertices[" + std::to_string(i) + "] must be [x, y]");
        topo.vertices.emplace_back(xy[0].get<double>(), xy[1].get<double>());
    }
    const auto faces = field<json>(doc, "faces", "mesh");
    for (std::size_t i = 0; i < faces.size(); ++i) {
        const std::string where = "faces[" + std::to_string(i) + "]";
        const auto v = field<std::vector<std::size_t>>(faces[i], "v", where);
        if (v.size() != 2) throw MeshError("parse error: " + where + ".v must hold two vertex ids");
        const auto cells = field<std::vector<std::size_t>>(faces[i], "cells", where);
        topo.faces.push_back({{v[0], v[1]}, cells});
    }
    const auto cells = field<json>(doc, "cells", "mesh");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const std::string where = "cells[" + std::to_string(i) + "]";
        topo.cells.push_back({field<std::vector<std::size_t>>(cells[i], "faces", where),
                              field<std::vector<int>>(cells[i], "signs", where)});
    }

    Mesh mesh = Mesh::from_topology(topo);
    const ValidationReport report = validate(mesh);
    if (!report.valid) {
        std::ostringstream msg;
        msg << "mesh validation failed:";
        for (const auto& f : report.failures) msg << "\n  " << f;
        throw MeshError(msg.str());
    }
    return mesh;
}

void save_mesh(const Mesh& mesh, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) throw MeshError("cannot open " + path.string() + " for writing");
    out << mesh_to_json(mesh) << '\n';
}

Mesh load_mesh(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw MeshError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return mesh_from_json(buf.str());
}

}  // namespace hho
